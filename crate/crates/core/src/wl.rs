//! Weisfeiler-Lehman rooted-subgraph extraction and the graph vocabulary.
//!
//! Every node starts with a partition-tagged degree label (`U:3`, `I:2`). At
//! iteration `k` a node's label becomes the compressed name of its own
//! iteration `k-1` label followed by the sorted list of
//! `(neighbor label, bucketed edge weight)` pairs. A graph's document holds
//! every node's label at every iteration `0..=delta`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ingest::{BipartiteGraph, RatingScale};

/// Partition-tagged degree label of every node, by global index.
pub fn initial_labels(g: &BipartiteGraph) -> Vec<String> {
    g.degrees()
        .into_iter()
        .enumerate()
        .map(|(node, deg)| {
            let side = if g.is_user(node) { 'U' } else { 'I' };
            format!("{side}:{deg}")
        })
        .collect()
}

/// Index of the equal-width bin of `scale` holding `weight`.
pub fn weight_bucket(weight: f64, scale: RatingScale, buckets: usize) -> usize {
    let buckets = buckets.max(1);
    let t = (weight - scale.min) / scale.width();
    let b = (t * buckets as f64).floor();
    if b <= 0.0 {
        0
    } else {
        (b as usize).min(buckets - 1)
    }
}

/// Corpus-wide dictionary from WL signatures to compressed names.
///
/// Names are assigned in first-seen order, so relabeling the same graphs in
/// the same order always yields the same names.
#[derive(Debug, Default, Clone)]
pub struct LabelCompressor {
    names: HashMap<String, String>,
}

impl LabelCompressor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    fn compress(&mut self, signature: String) -> String {
        let next = self.names.len();
        self.names
            .entry(signature)
            .or_insert_with(|| format!("wl{next}"))
            .clone()
    }
}

/// The subgraph tokens of one graph, one row per WL iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphDocument {
    pub graph_id: String,
    /// `iterations[k][node]` is the node's label after `k` relabelings.
    pub iterations: Vec<Vec<String>>,
}

impl SubgraphDocument {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.iterations.iter().flatten().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.iterations.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Token frequencies, sorted by token.
    pub fn token_counts(&self) -> Vec<(String, usize)> {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in self.tokens() {
            *counts.entry(t).or_default() += 1;
        }
        let mut out: Vec<(String, usize)> =
            counts.into_iter().map(|(t, c)| (t.to_string(), c)).collect();
        out.sort();
        out
    }

    /// `graphId token token ...`
    pub fn to_line(&self) -> String {
        let mut line = self.graph_id.clone();
        for t in self.tokens() {
            line.push(' ');
            line.push_str(t);
        }
        line
    }
}

/// Runs `delta` WL iterations on `g` starting from `labels`.
pub fn wl_relabel(
    g: &BipartiteGraph,
    graph_id: &str,
    labels: Vec<String>,
    delta: usize,
    weight_buckets: usize,
    compressor: &mut LabelCompressor,
) -> Result<SubgraphDocument> {
    if labels.len() != g.num_nodes() {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {} nodes",
            labels.len(),
            g.num_nodes()
        )));
    }
    let adj: Vec<Vec<(usize, usize)>> = g
        .adjacency()
        .into_iter()
        .map(|list| {
            list.into_iter()
                .map(|(n, w)| (n, weight_bucket(w, g.scale, weight_buckets)))
                .collect()
        })
        .collect();
    let mut iterations = Vec::with_capacity(delta + 1);
    iterations.push(labels);
    for _ in 0..delta {
        let prev = iterations.last().expect("iteration 0 is present");
        let mut next = Vec::with_capacity(prev.len());
        for (node, own) in prev.iter().enumerate() {
            let mut neighborhood: Vec<(&str, usize)> =
                adj[node].iter().map(|&(n, b)| (prev[n].as_str(), b)).collect();
            neighborhood.sort_unstable();
            let mut signature = own.clone();
            signature.push('|');
            for (label, bucket) in neighborhood {
                let _ = write!(signature, "{label}/{bucket};");
            }
            next.push(compressor.compress(signature));
        }
        iterations.push(next);
    }
    Ok(SubgraphDocument {
        graph_id: graph_id.to_string(),
        iterations,
    })
}

/// Relabels every graph in order against one shared compressor.
pub fn build_documents(
    graphs: &[(String, BipartiteGraph)],
    delta: usize,
    weight_buckets: usize,
) -> Result<Vec<SubgraphDocument>> {
    let mut compressor = LabelCompressor::new();
    graphs
        .iter()
        .map(|(id, g)| wl_relabel(g, id, initial_labels(g), delta, weight_buckets, &mut compressor))
        .collect()
}

/// Token index, corpus counts and the negative-sampling distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub tokens: Vec<String>,
    pub index: HashMap<String, usize>,
    pub counts: Vec<u64>,
    pub noise: Vec<f64>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn count(&self, token: &str) -> Option<u64> {
        self.get(token).map(|ix| self.counts[ix])
    }
}

/// Indexes every token of `docs` in first-seen order; the noise
/// distribution is proportional to `count^smoothing`.
pub fn build_vocabulary(docs: &[SubgraphDocument], smoothing: f64) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut tokens = Vec::new();
    let mut index = HashMap::new();
    let mut counts: Vec<u64> = Vec::new();
    for doc in docs {
        for t in doc.tokens() {
            match index.get(t) {
                Some(&ix) => counts[ix] += 1,
                None => {
                    index.insert(t.to_string(), tokens.len());
                    tokens.push(t.to_string());
                    counts.push(1);
                }
            }
        }
    }
    if tokens.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(smoothing)).collect();
    let total: f64 = weights.iter().sum();
    let noise = weights.into_iter().map(|w| w / total).collect();
    Ok(Vocabulary {
        tokens,
        index,
        counts,
        noise,
    })
}
