//! Random inputs and independent reference implementations shared by the
//! integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use cfmeta::ingest::{BipartiteGraph, DatasetBuilder, RatingDataset, RatingScale};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random rating set with at most `max_users` users and `max_items` items
/// on the 1-5 scale, integer ratings, at least one rating.
pub fn random_dataset(rng: &mut ChaCha8Rng, max_users: usize, max_items: usize) -> RatingDataset {
    let users = rng.random_range(1..=max_users);
    let items = rng.random_range(1..=max_items);
    let density = rng.random_range(0.2..=1.0);
    let mut triples = Vec::new();
    for u in 0..users {
        for i in 0..items {
            if rng.random::<f64>() < density {
                triples.push((u, i, rng.random_range(1..=5) as f64));
            }
        }
    }
    if triples.is_empty() {
        triples.push((0, 0, 3.0));
    }
    build("rand", &triples, |u| format!("u{u}"), |i| format!("i{i}"))
}

pub fn build(
    name: &str,
    triples: &[(usize, usize, f64)],
    user: impl Fn(usize) -> String,
    item: impl Fn(usize) -> String,
) -> RatingDataset {
    let mut b = DatasetBuilder::new(name, RatingScale::default());
    for (line, &(u, i, r)) in triples.iter().enumerate() {
        b.push(&user(u), &item(i), r, line + 1).unwrap();
    }
    b.finish()
}

/// The same ratings under renamed users and items, presented in a shuffled
/// order, so internal node indices are permuted.
pub fn relabeled(d: &RatingDataset, rng: &mut ChaCha8Rng) -> RatingDataset {
    let mut up: Vec<usize> = (0..d.num_users()).collect();
    let mut ip: Vec<usize> = (0..d.num_items()).collect();
    up.shuffle(rng);
    ip.shuffle(rng);
    let mut triples: Vec<(usize, usize, f64)> = d.ratings.iter().map(|r| (up[r.user], ip[r.item], r.value)).collect();
    triples.shuffle(rng);
    build(&d.name, &triples, |u| format!("p{u}"), |i| format!("q{i}"))
}

/// Equal-width bucket of an integer rating on [1, 5] with five buckets.
pub fn bucket5(w: f64) -> usize {
    match w as i64 {
        1 => 0,
        2 => 1,
        3 => 2,
        4 => 3,
        5 => 4,
        _ => panic!("rating {w} outside the test scale"),
    }
}

/// Neighbours of every global node, recomputed from the edge list.
pub fn neighbours(g: &BipartiteGraph) -> Vec<Vec<(usize, f64)>> {
    let nu = g.user_nodes.len();
    let mut adj = vec![Vec::new(); nu + g.item_nodes.len()];
    for e in &g.edges {
        adj[e.user].push((nu + e.item, e.value));
        adj[nu + e.item].push((e.user, e.value));
    }
    adj
}

/// Partition-tagged degree labels.
pub fn degree_labels(g: &BipartiteGraph) -> Vec<String> {
    let nu = g.user_nodes.len();
    neighbours(g)
        .iter()
        .enumerate()
        .map(|(n, a)| format!("{}:{}", if n < nu { "U" } else { "I" }, a.len()))
        .collect()
}

/// Canonical text of the depth-`depth` rooted subtree at `node`: the root's
/// degree label, then the sorted list of (edge bucket, child subtree).
pub fn rooted_subtree(adj: &[Vec<(usize, f64)>], labels: &[String], node: usize, depth: usize) -> String {
    if depth == 0 {
        return labels[node].clone();
    }
    let mut kids: Vec<String> = adj[node]
        .iter()
        .map(|&(m, w)| format!("{}~{}", bucket5(w), rooted_subtree(adj, labels, m, depth - 1)))
        .collect();
    kids.sort();
    format!("{}[{}]", labels[node], kids.join(","))
}

/// Kendall tau-a by counting concordant and discordant pairs.
pub fn kendall_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let x = (a[i] as i64 - a[j] as i64) * (b[i] as i64 - b[j] as i64);
            if x > 0 {
                concordant += 1;
            } else if x < 0 {
                discordant += 1;
            }
        }
    }
    (concordant - discordant) as f64 / (n * (n - 1) / 2) as f64
}

/// Every permutation of `1..=n` as rank vectors.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n);
            out.push(q);
        }
    }
    out
}

/// All maximal sets of strategies whose mean ranks span at most `cd`,
/// found by enumerating subsets.
pub fn maximal_groups(ranks: &[f64], cd: f64) -> BTreeSet<BTreeSet<usize>> {
    let k = ranks.len();
    let valid = |mask: u32| {
        let members: Vec<f64> = (0..k).filter(|j| mask & (1 << j) != 0).map(|j| ranks[j]).collect();
        let lo = members.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = members.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        !members.is_empty() && hi - lo <= cd
    };
    let mut out = BTreeSet::new();
    for mask in 1..(1u32 << k) {
        if valid(mask) && (0..k).all(|j| mask & (1 << j) != 0 || !valid(mask | (1 << j))) {
            out.insert((0..k).filter(|j| mask & (1 << j) != 0).collect());
        }
    }
    out
}

/// Average ranks per row (1 = best, highest score), then averaged over rows.
pub fn friedman_reference(values: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let (n, k) = (values.len(), values[0].len());
    let mut mean = vec![0.0; k];
    for row in values {
        for j in 0..k {
            let better = row.iter().filter(|&&x| x > row[j]).count() as f64;
            let tied = row.iter().filter(|&&x| x == row[j]).count() as f64;
            mean[j] += (better + (tied + 1.0) / 2.0) / n as f64;
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = mean.iter().map(|r| r * r).sum();
    let chi = 12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0) * (kf + 1.0) / 4.0);
    (mean, chi)
}

/// Leave-one-rating-out RMSE of the global average: each rating is
/// predicted by the mean of the others.
pub fn global_average_loo_rmse(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let total: f64 = values.iter().sum();
    let sq: f64 = values
        .iter()
        .map(|r| {
            let mu = (total - r) / (n - 1.0);
            (r - mu.clamp(1.0, 5.0)).powi(2)
        })
        .sum();
    (sq / n).sqrt()
}
