//! Metatargets, the metadatabase, and label ranking by KNN and by average
//! rankings, evaluated with Kendall's tau under leave-one-out.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ingest::PerformanceTable;
use crate::statfeatures::{MetafeatureVector, Standardizer};

/// A total order of algorithms. `algorithms` is sorted by name and
/// `ranks[j]` is the rank (1 = best) of `algorithms[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    pub algorithms: Vec<String>,
    pub ranks: Vec<usize>,
}

impl Ranking {
    /// Builds a ranking from a best-first order.
    pub fn from_order(order: &[String]) -> Result<Self> {
        let mut algorithms = order.to_vec();
        algorithms.sort();
        if algorithms.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::AlgorithmSetMismatch);
        }
        let ranks = algorithms
            .iter()
            .map(|a| order.iter().position(|o| o == a).expect("present") + 1)
            .collect();
        Ok(Self { algorithms, ranks })
    }

    /// Sorts by ascending score, breaking ties by algorithm name.
    pub fn from_mean_ranks(mean: &BTreeMap<String, f64>) -> Self {
        let mut entries: Vec<(&String, f64)> = mean.iter().map(|(a, &r)| (a, r)).collect();
        entries.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
        let order: Vec<String> = entries.into_iter().map(|(a, _)| a.clone()).collect();
        Self::from_order(&order).expect("map keys are unique")
    }

    /// Algorithms best first.
    pub fn order(&self) -> Vec<String> {
        let mut idx: Vec<usize> = (0..self.algorithms.len()).collect();
        idx.sort_by_key(|&j| self.ranks[j]);
        idx.into_iter().map(|j| self.algorithms[j].clone()).collect()
    }

    pub fn rank_of(&self, algorithm: &str) -> Option<usize> {
        self.algorithms
            .iter()
            .position(|a| a == algorithm)
            .map(|j| self.ranks[j])
    }

    pub fn len(&self) -> usize {
        self.algorithms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.algorithms.is_empty()
    }
}

/// Fractional (average) ranks of `scores`, where larger is better.
pub fn fractional_ranks(scores: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut ranks = vec![0.0; scores.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        // positions start..end share ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Multicriteria ranking of the algorithms on `dataset`: per-measure
/// fractional ranks (direction aware), averaged over `measures`.
pub fn build_metatarget(t: &PerformanceTable, dataset: &str, measures: &[String]) -> Result<Ranking> {
    let algorithms = t.algorithms(dataset);
    if algorithms.is_empty() || measures.is_empty() {
        return Err(Error::MissingMeasure {
            dataset: dataset.to_string(),
            measure: measures.first().cloned().unwrap_or_default(),
        });
    }
    let mut mean: BTreeMap<String, f64> = algorithms.iter().map(|a| (a.clone(), 0.0)).collect();
    for m in measures {
        let dir = t.direction(m)?;
        let scores = algorithms
            .iter()
            .map(|a| {
                t.get(dataset, a, m)
                    .map(|s| dir.orient(s))
                    .ok_or_else(|| Error::MissingMeasure {
                        dataset: dataset.to_string(),
                        measure: m.clone(),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        for (a, r) in algorithms.iter().zip(fractional_ranks(&scores)) {
            *mean.get_mut(a).expect("initialized") += r / measures.len() as f64;
        }
    }
    Ok(Ranking::from_mean_ranks(&mean))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaRow {
    pub id: String,
    pub features: MetafeatureVector,
    pub target: Ranking,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaDatabase {
    pub rows: Vec<MetaRow>,
}

impl MetaDatabase {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn without(&self, skip: usize) -> MetaDatabase {
        MetaDatabase {
            rows: self
                .rows
                .iter()
                .enumerate()
                .filter(|(ix, _)| *ix != skip)
                .map(|(_, r)| r.clone())
                .collect(),
        }
    }

    /// Targets CSV: `dataset,<alg1>,...` with each algorithm's rank.
    pub fn targets_csv(&self) -> String {
        let mut out = String::from("dataset");
        if let Some(first) = self.rows.first() {
            for a in &first.target.algorithms {
                out.push(',');
                out.push_str(a);
            }
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.id);
            for r in &row.target.ranks {
                let _ = write!(out, ",{r}");
            }
            out.push('\n');
        }
        out
    }

    /// Features CSV in the metafeature export shape.
    pub fn features_csv(&self) -> String {
        let rows: Vec<(String, MetafeatureVector)> = self
            .rows
            .iter()
            .map(|r| (r.id.clone(), r.features.clone()))
            .collect();
        crate::statfeatures::to_table(&rows)
            .map(|t| t.to_csv())
            .unwrap_or_default()
    }

    /// Reads the two aligned CSVs written by [`features_csv`](Self::features_csv)
    /// and [`targets_csv`](Self::targets_csv).
    pub fn from_csv(features: &str, targets: &str) -> Result<Self> {
        let table = crate::embedding::MetafeatureTable::from_csv(features)?;
        let mut lines = targets.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or(Error::EmptyMetabase)?
            .split(',')
            .skip(1)
            .map(|s| s.trim().to_string())
            .collect();
        let mut target_rows = Vec::new();
        for (ix, line) in lines.enumerate() {
            let mut fields = line.split(',').map(str::trim);
            let id = fields.next().unwrap_or_default().to_string();
            let ranks = fields
                .map(|f| {
                    f.parse::<usize>().map_err(|_| Error::MalformedLine {
                        line: ix + 2,
                        reason: format!("bad rank {f:?}"),
                    })
                })
                .collect::<Result<Vec<usize>>>()?;
            if ranks.len() != header.len() {
                return Err(Error::LengthMismatch(format!("row {id:?} has {} ranks", ranks.len())));
            }
            let mut order = vec![String::new(); ranks.len()];
            for (a, &r) in header.iter().zip(&ranks) {
                if r == 0 || r > ranks.len() || !order[r - 1].is_empty() {
                    return Err(Error::MalformedLine {
                        line: ix + 2,
                        reason: "ranks are not a permutation".into(),
                    });
                }
                order[r - 1] = a.clone();
            }
            target_rows.push((id, Ranking::from_order(&order)?));
        }
        if table.rows.len() != target_rows.len()
            || table.rows.iter().zip(&target_rows).any(|(f, t)| f.0 != t.0)
        {
            return Err(Error::LengthMismatch("feature and target rows are not aligned".into()));
        }
        let ids = target_rows.iter().map(|(id, _)| id.clone()).collect::<Vec<_>>();
        let features = table
            .rows
            .into_iter()
            .map(|(_, v)| MetafeatureVector::new(table.columns.clone(), v))
            .collect::<Result<Vec<_>>>()?;
        assemble(features, target_rows.into_iter().map(|(_, t)| t).collect(), ids)
    }
}

/// Row-aligns features, targets and dataset ids.
pub fn assemble(features: Vec<MetafeatureVector>, targets: Vec<Ranking>, ids: Vec<String>) -> Result<MetaDatabase> {
    if features.is_empty() && targets.is_empty() && ids.is_empty() {
        return Err(Error::EmptyMetabase);
    }
    if features.len() != targets.len() || features.len() != ids.len() {
        return Err(Error::LengthMismatch(format!(
            "{} feature rows, {} targets, {} ids",
            features.len(),
            targets.len(),
            ids.len()
        )));
    }
    let names = &features[0].names;
    if features.iter().any(|f| &f.names != names) {
        return Err(Error::NameMismatch);
    }
    let algorithms = &targets[0].algorithms;
    if targets.iter().any(|t| &t.algorithms != algorithms) {
        return Err(Error::AlgorithmSetMismatch);
    }
    Ok(MetaDatabase {
        rows: ids
            .into_iter()
            .zip(features)
            .zip(targets)
            .map(|((id, features), target)| MetaRow { id, features, target })
            .collect(),
    })
}

/// Mean rank of every algorithm over `rankings`, as a total order.
fn aggregate<'a>(rankings: impl IntoIterator<Item = &'a Ranking>) -> Result<Ranking> {
    let mut iter = rankings.into_iter();
    let first = iter.next().ok_or(Error::EmptyMetabase)?;
    let mut sums: Vec<f64> = first.ranks.iter().map(|&r| r as f64).collect();
    let mut n = 1.0;
    for r in iter {
        if r.algorithms != first.algorithms {
            return Err(Error::AlgorithmSetMismatch);
        }
        for (s, &x) in sums.iter_mut().zip(&r.ranks) {
            *s += x as f64;
        }
        n += 1.0;
    }
    let mean = first
        .algorithms
        .iter()
        .cloned()
        .zip(sums.into_iter().map(|s| s / n))
        .collect();
    Ok(Ranking::from_mean_ranks(&mean))
}

pub fn average_rankings(db: &MetaDatabase) -> Result<Ranking> {
    aggregate(db.rows.iter().map(|r| &r.target))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Mean-rank vote of the `k` rows nearest to `query` after standardizing on `db`.
pub fn knn_label_rank(db: &MetaDatabase, query: &MetafeatureVector, k: usize) -> Result<Ranking> {
    if db.is_empty() {
        return Err(Error::EmptyMetabase);
    }
    if k == 0 || k > db.len() {
        return Err(Error::KTooLarge { k, rows: db.len() });
    }
    let features: Vec<MetafeatureVector> = db.rows.iter().map(|r| r.features.clone()).collect();
    let scaler = Standardizer::fit(&features)?;
    let q = scaler.transform(query)?;
    let mut dist: Vec<(f64, &str, usize)> = db
        .rows
        .iter()
        .enumerate()
        .map(|(ix, row)| {
            let z = scaler.transform(&row.features)?;
            Ok((euclidean(&z.values, &q.values), row.id.as_str(), ix))
        })
        .collect::<Result<_>>()?;
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    aggregate(dist[..k].iter().map(|&(_, _, ix)| &db.rows[ix].target))
}

/// Kendall's tau-a between two total orders of the same algorithms.
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<f64> {
    if a.algorithms != b.algorithms {
        return Err(Error::AlgorithmSetMismatch);
    }
    let n = a.len();
    if n < 2 {
        return Ok(1.0);
    }
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let da = a.ranks[i] as i64 - a.ranks[j] as i64;
            let db = b.ranks[i] as i64 - b.ranks[j] as i64;
            s += (da * db).signum();
        }
    }
    Ok(s as f64 / (n * (n - 1) / 2) as f64)
}

/// A metalearner: predicts a ranking for `query` from a training metadatabase.
pub trait LabelRanker: Sync {
    fn name(&self) -> String;
    fn predict(&self, train: &MetaDatabase, query: &MetafeatureVector) -> Result<Ranking>;
}

#[derive(Debug, Clone, Copy)]
pub struct Knn {
    pub k: usize,
}

impl LabelRanker for Knn {
    fn name(&self) -> String {
        format!("knn(k={})", self.k)
    }

    fn predict(&self, train: &MetaDatabase, query: &MetafeatureVector) -> Result<Ranking> {
        knn_label_rank(train, query, self.k)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AverageRankings;

impl LabelRanker for AverageRankings {
    fn name(&self) -> String {
        "AR".into()
    }

    fn predict(&self, train: &MetaDatabase, _query: &MetafeatureVector) -> Result<Ranking> {
        average_rankings(train)
    }
}

/// Held-out prediction of one leave-one-out fold.
#[derive(Debug, Clone, PartialEq)]
pub struct LoocvFold {
    pub id: String,
    pub predicted: Ranking,
    pub tau: f64,
}

/// Leave-one-out: each row is predicted from all the others. The held-out
/// row takes no part in standardization or voting.
pub fn loocv_predictions(db: &MetaDatabase, learner: &dyn LabelRanker) -> Result<Vec<LoocvFold>> {
    if db.len() < 2 {
        return Err(Error::TooFewRows(db.len()));
    }
    db.rows
        .iter()
        .enumerate()
        .map(|(ix, row)| {
            let predicted = learner.predict(&db.without(ix), &row.features)?;
            let tau = kendall_tau(&predicted, &row.target)?;
            Ok(LoocvFold {
                id: row.id.clone(),
                predicted,
                tau,
            })
        })
        .collect()
}

/// Per-row tau of [`loocv_predictions`].
pub fn loocv(db: &MetaDatabase, learner: &dyn LabelRanker) -> Result<Vec<(String, f64)>> {
    Ok(loocv_predictions(db, learner)?
        .into_iter()
        .map(|f| (f.id, f.tau))
        .collect())
}

pub fn mean_tau(scores: &[(String, f64)]) -> f64 {
    scores.iter().map(|(_, t)| t).sum::<f64>() / scores.len() as f64
}

/// Hyperparameter lists searched exhaustively.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub theta: Vec<usize>,
    pub sigma: Vec<usize>,
    pub delta: Vec<usize>,
    pub epochs: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub negatives: Vec<usize>,
    pub k: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            theta: vec![25, 50, 100, 200],
            sigma: vec![30],
            delta: vec![6],
            epochs: vec![100],
            learning_rate: vec![0.025],
            negatives: vec![5],
            k: vec![1, 3, 5],
        }
    }
}

/// One point of a [`GridSpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub theta: usize,
    pub sigma: usize,
    pub delta: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub negatives: usize,
    pub k: usize,
}

impl GridPoint {
    /// `theta=..;sigma=..;...`, the order configurations are compared in.
    pub fn key(&self) -> String {
        format!(
            "theta={};sigma={};delta={};epochs={};lr={};negatives={};k={}",
            self.theta, self.sigma, self.delta, self.epochs, self.learning_rate, self.negatives, self.k
        )
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("theta", self.theta.is_empty()),
            ("sigma", self.sigma.is_empty()),
            ("delta", self.delta.is_empty()),
            ("epochs", self.epochs.is_empty()),
            ("learning_rate", self.learning_rate.is_empty()),
            ("negatives", self.negatives.is_empty()),
            ("k", self.k.is_empty()),
        ];
        match empty.iter().find(|(_, e)| *e) {
            Some((name, _)) => Err(Error::Config(format!("grid list {name} is empty"))),
            None => Ok(()),
        }
    }

    /// Cartesian product, `k` varying fastest, `theta` slowest.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &theta in &self.theta {
            for &sigma in &self.sigma {
                for &delta in &self.delta {
                    for &epochs in &self.epochs {
                        for &learning_rate in &self.learning_rate {
                            for &negatives in &self.negatives {
                                for &k in &self.k {
                                    out.push(GridPoint {
                                        theta,
                                        sigma,
                                        delta,
                                        epochs,
                                        learning_rate,
                                        negatives,
                                        k,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: GridPoint,
    pub best_tau: f64,
    /// Mean LOOCV tau of every point, in grid order.
    pub scores: Vec<(GridPoint, f64)>,
}

/// Picks the highest-scoring point; ties go to the earliest point in grid order.
pub fn select_best(scores: Vec<(GridPoint, f64)>) -> Result<GridResult> {
    let (best, best_tau) = scores
        .iter()
        .fold(None::<(GridPoint, f64)>, |acc, &(p, t)| match acc {
            Some((_, bt)) if bt >= t => acc,
            _ => Some((p, t)),
        })
        .ok_or_else(|| Error::Config("empty grid".into()))?;
    Ok(GridResult {
        best,
        best_tau,
        scores,
    })
}

/// Evaluates every grid point by the LOOCV mean tau of KNN on the
/// metadatabase `build` produces for it.
pub fn grid_search(
    grid: &GridSpec,
    build: impl Fn(&GridPoint) -> Result<MetaDatabase> + Sync,
) -> Result<GridResult> {
    use rayon::prelude::*;
    grid.validate()?;
    let scores = grid
        .points()
        .par_iter()
        .map(|p| {
            let db = build(p)?;
            let taus = loocv(&db, &Knn { k: p.k })?;
            Ok((*p, mean_tau(&taus)))
        })
        .collect::<Result<Vec<_>>>()?;
    select_best(scores)
}
