//! Rating and performance-table parsing, and the rating-matrix to
//! bipartite-graph conversion.
//!
//! Ratings files are UTF-8, comma separated, with columns `user,item,rating`
//! and an optional `user,item,rating` header. Performance files have columns
//! `dataset,algorithm,measure,value`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Closed interval of admissible rating values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl RatingScale {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::Config(format!("invalid rating scale [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }
}

impl Default for RatingScale {
    fn default() -> Self {
        Self { min: 1.0, max: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub value: f64,
}

/// A collaborative-filtering problem: users, items and their ratings.
///
/// User and item ids are densified to indices in first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingDataset {
    pub name: String,
    pub users: Vec<String>,
    pub items: Vec<String>,
    pub ratings: Vec<Rating>,
    pub scale: RatingScale,
}

/// Incremental builder enforcing the dataset invariants.
#[derive(Debug)]
pub struct DatasetBuilder {
    dataset: RatingDataset,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    seen: HashSet<(usize, usize)>,
}

impl DatasetBuilder {
    pub fn new(name: impl Into<String>, scale: RatingScale) -> Self {
        Self {
            dataset: RatingDataset {
                name: name.into(),
                users: Vec::new(),
                items: Vec::new(),
                ratings: Vec::new(),
                scale,
            },
            user_index: HashMap::new(),
            item_index: HashMap::new(),
            seen: HashSet::new(),
        }
    }

    /// Adds one rating; `line` is only used for error reporting.
    pub fn push(&mut self, user: &str, item: &str, value: f64, line: usize) -> Result<()> {
        let scale = self.dataset.scale;
        if !value.is_finite() || !scale.contains(value) {
            return Err(Error::OutOfScale {
                line,
                value,
                min: scale.min,
                max: scale.max,
            });
        }
        let u = intern(&mut self.user_index, &mut self.dataset.users, user);
        let i = intern(&mut self.item_index, &mut self.dataset.items, item);
        if !self.seen.insert((u, i)) {
            return Err(Error::DuplicateRating {
                line,
                user: user.to_string(),
                item: item.to_string(),
            });
        }
        self.dataset.ratings.push(Rating {
            user: u,
            item: i,
            value,
        });
        Ok(())
    }

    pub fn finish(self) -> RatingDataset {
        self.dataset
    }
}

fn intern(index: &mut HashMap<String, usize>, names: &mut Vec<String>, id: &str) -> usize {
    if let Some(&ix) = index.get(id) {
        return ix;
    }
    let ix = names.len();
    names.push(id.to_string());
    index.insert(id.to_string(), ix);
    ix
}

impl RatingDataset {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    /// Serializes back to the ratings CSV format, header included.
    ///
    /// Values use the shortest representation that parses back to the same
    /// `f64`, so `parse_ratings` inverts this exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("user,item,rating\n");
        for r in &self.ratings {
            let _ = writeln!(
                out,
                "{},{},{}",
                self.users[r.user], self.items[r.item], r.value
            );
        }
        out
    }

    /// Same users and items, restricted to the ratings at `keep`.
    pub fn subset(&self, keep: impl IntoIterator<Item = usize>) -> RatingDataset {
        RatingDataset {
            name: self.name.clone(),
            users: self.users.clone(),
            items: self.items.clone(),
            ratings: keep.into_iter().map(|ix| self.ratings[ix]).collect(),
            scale: self.scale,
        }
    }
}

const RATINGS_HEADER: [&str; 3] = ["user", "item", "rating"];
const PERFORMANCE_HEADER: [&str; 4] = ["dataset", "algorithm", "measure", "value"];

fn is_header(fields: &[&str], header: &[&str]) -> bool {
    fields.len() == header.len()
        && fields
            .iter()
            .zip(header)
            .all(|(f, h)| f.eq_ignore_ascii_case(h))
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn parse_value(field: &str, line: usize) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::MalformedLine {
        line,
        reason: format!("non-numeric value {field:?}"),
    })
}

/// Parses a ratings stream into a dataset.
pub fn parse_ratings(name: &str, text: &str, scale: RatingScale) -> Result<RatingDataset> {
    let mut builder = DatasetBuilder::new(name, scale);
    let mut first = true;
    for (ix, raw) in text.lines().enumerate() {
        let line = ix + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields = split_fields(raw);
        if first && is_header(&fields, &RATINGS_HEADER) {
            first = false;
            continue;
        }
        first = false;
        if fields.len() != 3 {
            return Err(Error::MalformedLine {
                line,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::MalformedLine {
                line,
                reason: "empty user or item id".into(),
            });
        }
        let value = parse_value(fields[2], line)?;
        builder.push(fields[0], fields[1], value, line)?;
    }
    let dataset = builder.finish();
    if dataset.is_empty() {
        return Err(Error::MalformedLine {
            line: 0,
            reason: "no data".into(),
        });
    }
    Ok(dataset)
}

/// Which way a measure improves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

impl Direction {
    /// Maps a score so that larger is always better.
    pub fn orient(self, score: f64) -> f64 {
        match self {
            Direction::HigherBetter => score,
            Direction::LowerBetter => -score,
        }
    }
}

/// The directions of the four built-in measures.
pub fn default_directions() -> BTreeMap<String, Direction> {
    [
        ("NDCG", Direction::HigherBetter),
        ("AUC", Direction::HigherBetter),
        ("NMAE", Direction::LowerBetter),
        ("RMSE", Direction::LowerBetter),
    ]
    .into_iter()
    .map(|(m, d)| (m.to_string(), d))
    .collect()
}

/// Scores of algorithms on datasets, keyed by (dataset, algorithm, measure).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerformanceTable {
    pub entries: BTreeMap<(String, String, String), f64>,
    pub directions: BTreeMap<String, Direction>,
}

impl PerformanceTable {
    pub fn new(directions: BTreeMap<String, Direction>) -> Self {
        Self {
            entries: BTreeMap::new(),
            directions,
        }
    }

    pub fn insert(&mut self, dataset: &str, algorithm: &str, measure: &str, score: f64) -> Result<()> {
        if !self.directions.contains_key(measure) {
            return Err(Error::UnknownMeasure(measure.to_string()));
        }
        self.entries.insert(
            (dataset.to_string(), algorithm.to_string(), measure.to_string()),
            score,
        );
        Ok(())
    }

    pub fn get(&self, dataset: &str, algorithm: &str, measure: &str) -> Option<f64> {
        self.entries
            .get(&(dataset.to_string(), algorithm.to_string(), measure.to_string()))
            .copied()
    }

    pub fn direction(&self, measure: &str) -> Result<Direction> {
        self.directions
            .get(measure)
            .copied()
            .ok_or_else(|| Error::UnknownMeasure(measure.to_string()))
    }

    pub fn datasets(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.entries.keys().map(|(d, _, _)| d).collect();
        set.into_iter().cloned().collect()
    }

    /// Algorithms scored on `dataset`, sorted by name.
    pub fn algorithms(&self, dataset: &str) -> Vec<String> {
        let set: BTreeSet<&String> = self
            .entries
            .keys()
            .filter(|(d, _, _)| d == dataset)
            .map(|(_, a, _)| a)
            .collect();
        set.into_iter().cloned().collect()
    }

    pub fn measures(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.entries.keys().map(|(_, _, m)| m).collect();
        set.into_iter().cloned().collect()
    }

    /// Checks that every (dataset, algorithm) pair scored under one measure of
    /// `task` is scored under all of them.
    pub fn check_complete(&self, task: &[String]) -> Result<()> {
        let pairs: BTreeSet<(&String, &String)> = self
            .entries
            .keys()
            .filter(|(_, _, m)| task.contains(m))
            .map(|(d, a, _)| (d, a))
            .collect();
        for (d, a) in pairs {
            for m in task {
                if !self.entries.contains_key(&(d.clone(), a.clone(), m.clone())) {
                    return Err(Error::IncompleteTable {
                        dataset: d.clone(),
                        algorithm: a.clone(),
                        measure: m.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,algorithm,measure,value\n");
        for ((d, a, m), v) in &self.entries {
            let _ = writeln!(out, "{d},{a},{m},{v}");
        }
        out
    }
}

/// Parses a performance table and checks it is complete.
///
/// Every measure present must have a declared direction. Completeness is
/// checked over all measures present in the file, treating them as one task.
pub fn parse_performance_table(
    text: &str,
    directions: &BTreeMap<String, Direction>,
) -> Result<PerformanceTable> {
    let mut table = PerformanceTable::new(directions.clone());
    let mut first = true;
    for (ix, raw) in text.lines().enumerate() {
        let line = ix + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields = split_fields(raw);
        if first && is_header(&fields, &PERFORMANCE_HEADER) {
            first = false;
            continue;
        }
        first = false;
        if fields.len() != 4 {
            return Err(Error::MalformedLine {
                line,
                reason: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let value = parse_value(fields[3], line)?;
        if !value.is_finite() {
            return Err(Error::MalformedLine {
                line,
                reason: "non-finite score".into(),
            });
        }
        table.insert(fields[0], fields[1], fields[2], value)?;
    }
    if table.entries.is_empty() {
        return Err(Error::MalformedLine {
            line: 0,
            reason: "no data".into(),
        });
    }
    let measures = table.measures();
    table.check_complete(&measures)?;
    Ok(table)
}

/// Weighted user-item graph. Node `u` of the user side has global index `u`;
/// item `i` has global index `num_users() + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    pub user_nodes: Vec<String>,
    pub item_nodes: Vec<String>,
    pub edges: Vec<Rating>,
    pub scale: RatingScale,
}

impl BipartiteGraph {
    pub fn num_users(&self) -> usize {
        self.user_nodes.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.user_nodes.len() + self.item_nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_user(&self, node: usize) -> bool {
        node < self.user_nodes.len()
    }

    pub fn item_node(&self, item: usize) -> usize {
        self.user_nodes.len() + item
    }

    pub fn node_name(&self, node: usize) -> &str {
        if self.is_user(node) {
            &self.user_nodes[node]
        } else {
            &self.item_nodes[node - self.user_nodes.len()]
        }
    }

    /// Neighbor lists `(node, weight)` by global index, sorted by neighbor.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.num_nodes()];
        for e in &self.edges {
            let item = self.item_node(e.item);
            adj[e.user].push((item, e.value));
            adj[item].push((e.user, e.value));
        }
        for list in &mut adj {
            list.sort_by_key(|&(n, _)| n);
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes()];
        for e in &self.edges {
            deg[e.user] += 1;
            deg[self.item_node(e.item)] += 1;
        }
        deg
    }

    /// Subgraph induced by the global node indices flagged in `keep`.
    ///
    /// Node and edge order follow the original graph.
    pub fn induced(&self, keep: &[bool]) -> BipartiteGraph {
        let nu = self.num_users();
        let mut user_map = vec![usize::MAX; nu];
        let mut item_map = vec![usize::MAX; self.item_nodes.len()];
        let mut user_nodes = Vec::new();
        let mut item_nodes = Vec::new();
        for (u, name) in self.user_nodes.iter().enumerate() {
            if keep[u] {
                user_map[u] = user_nodes.len();
                user_nodes.push(name.clone());
            }
        }
        for (i, name) in self.item_nodes.iter().enumerate() {
            if keep[nu + i] {
                item_map[i] = item_nodes.len();
                item_nodes.push(name.clone());
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| keep[e.user] && keep[nu + e.item])
            .map(|e| Rating {
                user: user_map[e.user],
                item: item_map[e.item],
                value: e.value,
            })
            .collect();
        BipartiteGraph {
            user_nodes,
            item_nodes,
            edges,
            scale: self.scale,
        }
    }
}

/// Rating matrix as a bipartite adjacency structure: one weighted edge per rating.
pub fn to_bipartite_graph(d: &RatingDataset) -> BipartiteGraph {
    BipartiteGraph {
        user_nodes: d.users.clone(),
        item_nodes: d.items.clone(),
        edges: d.ratings.clone(),
        scale: d.scale,
    }
}
