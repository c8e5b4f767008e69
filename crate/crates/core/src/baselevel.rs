//! Minimal collaborative-filtering baselevel: four learners, four measures,
//! k-fold cross-validation over ratings.
//!
//! Rating measures (RMSE, NMAE) are pooled over all held-out ratings. Ranking
//! measures (NDCG, AUC) are computed per test user: the candidates are all
//! items the user did not rate in the training split, the relevant ones are
//! the held-out items rated at or above the scale midpoint. Per-user values
//! are averaged within a fold and the fold averages are averaged.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::ingest::{RatingDataset, RatingScale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Learner {
    GlobalAverage,
    UserItemBaseline,
    BiasedMF,
    MostPopular,
}

impl Learner {
    pub const ALL: [Learner; 4] = [
        Learner::GlobalAverage,
        Learner::UserItemBaseline,
        Learner::BiasedMF,
        Learner::MostPopular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Learner::GlobalAverage => "GA",
            Learner::UserItemBaseline => "UIB",
            Learner::BiasedMF => "BMF",
            Learner::MostPopular => "MP",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name().eq_ignore_ascii_case(name))
    }
}

/// Learner hyperparameters. They are deliberately left untuned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    pub user_reg: f64,
    pub item_reg: f64,
    pub baseline_sweeps: usize,
    pub factors: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub regularization: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            user_reg: 15.0,
            item_reg: 10.0,
            baseline_sweeps: 10,
            factors: 16,
            epochs: 30,
            learning_rate: 0.01,
            regularization: 0.02,
        }
    }
}

/// A fitted learner. Fields a kind does not use stay empty.
#[derive(Debug, Clone, PartialEq)]
pub struct CFModel {
    pub kind: Learner,
    pub scale: RatingScale,
    pub mean: f64,
    pub user_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
    pub user_factors: Vec<Vec<f64>>,
    pub item_factors: Vec<Vec<f64>>,
    pub popularity: Vec<usize>,
}

impl CFModel {
    fn empty(kind: Learner, train: &RatingDataset, mean: f64) -> Self {
        Self {
            kind,
            scale: train.scale,
            mean,
            user_bias: Vec::new(),
            item_bias: Vec::new(),
            user_factors: Vec::new(),
            item_factors: Vec::new(),
            popularity: Vec::new(),
        }
    }

    /// A biased MF model with the given biases and `factors` all-zero factors.
    pub fn biased_mf_from_biases(baseline: &CFModel, factors: usize) -> CFModel {
        CFModel {
            kind: Learner::BiasedMF,
            user_factors: vec![vec![0.0; factors]; baseline.user_bias.len()],
            item_factors: vec![vec![0.0; factors]; baseline.item_bias.len()],
            popularity: Vec::new(),
            ..baseline.clone()
        }
    }

    fn bias(v: &[f64], ix: usize) -> f64 {
        v.get(ix).copied().unwrap_or(0.0)
    }

    /// Unclamped model score used for ranking.
    pub fn score(&self, user: usize, item: usize) -> f64 {
        match self.kind {
            Learner::GlobalAverage => self.mean,
            Learner::MostPopular => self.popularity.get(item).copied().unwrap_or(0) as f64,
            Learner::UserItemBaseline => {
                self.mean + Self::bias(&self.user_bias, user) + Self::bias(&self.item_bias, item)
            }
            Learner::BiasedMF => {
                let interaction = match (self.user_factors.get(user), self.item_factors.get(item)) {
                    (Some(p), Some(q)) => p.iter().zip(q).map(|(a, b)| a * b).sum(),
                    _ => 0.0,
                };
                self.mean
                    + Self::bias(&self.user_bias, user)
                    + Self::bias(&self.item_bias, item)
                    + interaction
            }
        }
    }
}

fn global_mean(train: &RatingDataset) -> f64 {
    train.ratings.iter().map(|r| r.value).sum::<f64>() / train.len() as f64
}

/// Regularized alternating closed-form sweeps over item then user biases.
fn baseline_biases(train: &RatingDataset, mean: f64, hyper: &Hyper) -> (Vec<f64>, Vec<f64>) {
    let mut bu = vec![0.0; train.num_users()];
    let mut bi = vec![0.0; train.num_items()];
    for _ in 0..hyper.baseline_sweeps.max(1) {
        let mut sum = vec![0.0; bi.len()];
        let mut cnt = vec![0.0; bi.len()];
        for r in &train.ratings {
            sum[r.item] += r.value - mean - bu[r.user];
            cnt[r.item] += 1.0;
        }
        for i in 0..bi.len() {
            bi[i] = if cnt[i] > 0.0 { sum[i] / (hyper.item_reg + cnt[i]) } else { 0.0 };
        }
        let mut sum = vec![0.0; bu.len()];
        let mut cnt = vec![0.0; bu.len()];
        for r in &train.ratings {
            sum[r.user] += r.value - mean - bi[r.item];
            cnt[r.user] += 1.0;
        }
        for u in 0..bu.len() {
            bu[u] = if cnt[u] > 0.0 { sum[u] / (hyper.user_reg + cnt[u]) } else { 0.0 };
        }
    }
    (bu, bi)
}

pub fn fit(kind: Learner, train: &RatingDataset, hyper: &Hyper, seed: u64) -> Result<CFModel> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mean = global_mean(train);
    let mut model = CFModel::empty(kind, train, mean);
    match kind {
        Learner::GlobalAverage => {}
        Learner::MostPopular => {
            model.popularity = vec![0; train.num_items()];
            for r in &train.ratings {
                model.popularity[r.item] += 1;
            }
        }
        Learner::UserItemBaseline => {
            let (bu, bi) = baseline_biases(train, mean, hyper);
            model.user_bias = bu;
            model.item_bias = bi;
        }
        Learner::BiasedMF => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let init = Normal::new(0.0, 0.1).expect("valid normal");
            let mut draw = |n: usize| -> Vec<Vec<f64>> {
                (0..n)
                    .map(|_| (0..hyper.factors).map(|_| init.sample(&mut rng)).collect())
                    .collect()
            };
            model.user_factors = draw(train.num_users());
            model.item_factors = draw(train.num_items());
            model.user_bias = vec![0.0; train.num_users()];
            model.item_bias = vec![0.0; train.num_items()];
            let mut order: Vec<usize> = (0..train.len()).collect();
            let (lr, reg) = (hyper.learning_rate, hyper.regularization);
            for _ in 0..hyper.epochs {
                order.shuffle(&mut rng);
                for &ix in &order {
                    let r = train.ratings[ix];
                    let err = r.value - model.score(r.user, r.item);
                    let (u, i) = (r.user, r.item);
                    model.user_bias[u] += lr * (err - reg * model.user_bias[u]);
                    model.item_bias[i] += lr * (err - reg * model.item_bias[i]);
                    for k in 0..hyper.factors {
                        let p = model.user_factors[u][k];
                        let q = model.item_factors[i][k];
                        model.user_factors[u][k] += lr * (err * q - reg * p);
                        model.item_factors[i][k] += lr * (err * p - reg * q);
                    }
                }
            }
            if !model.user_factors.iter().flatten().all(|x| x.is_finite()) {
                return Err(Error::Numeric("biased MF diverged".into()));
            }
        }
    }
    Ok(model)
}

/// Predicted rating clamped to the scale. Most-popular has no rating model
/// and predicts the global mean.
pub fn predict_rating(m: &CFModel, user: usize, item: usize) -> f64 {
    let raw = match m.kind {
        Learner::MostPopular => m.mean,
        _ => m.score(user, item),
    };
    m.scale.clamp(raw)
}

/// Candidates by descending score; ties go to the smaller item index.
pub fn rank_items(m: &CFModel, user: usize, candidates: &[usize]) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = candidates.iter().map(|&i| (m.score(user, i), i)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().map(|(_, i)| i).collect()
}

/// Area under the ROC curve of a ranked list: the fraction of
/// (relevant, irrelevant) pairs with the relevant item ranked first.
/// `None` when either class is empty.
pub fn auc(ranked: &[usize], relevant: &[bool]) -> Option<f64> {
    let mut seen_relevant = 0usize;
    let mut correct = 0usize;
    let mut irrelevant = 0usize;
    for &item in ranked {
        if relevant[item] {
            seen_relevant += 1;
        } else {
            irrelevant += 1;
            correct += seen_relevant;
        }
    }
    // `correct` counts relevant-before-irrelevant pairs as seen from each irrelevant item.
    if seen_relevant == 0 || irrelevant == 0 {
        return None;
    }
    Some(correct as f64 / (seen_relevant * irrelevant) as f64)
}

/// Binary-relevance NDCG over the whole ranked list. `None` without relevant items.
pub fn ndcg(ranked: &[usize], relevant: &[bool]) -> Option<f64> {
    let gain = |pos: usize| 1.0 / ((pos + 2) as f64).log2();
    let dcg: f64 = ranked
        .iter()
        .enumerate()
        .filter(|(_, &i)| relevant[i])
        .map(|(p, _)| gain(p))
        .sum();
    let hits = ranked.iter().filter(|&&i| relevant[i]).count();
    if hits == 0 {
        return None;
    }
    let ideal: f64 = (0..hits).map(gain).sum();
    Some(dcg / ideal)
}

/// Fold index of every rating: a seeded permutation dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &ix) in perm.iter().enumerate() {
        fold[ix] = pos % folds;
    }
    fold
}

pub const MEASURES: [&str; 4] = ["AUC", "NDCG", "NMAE", "RMSE"];

fn mean_of(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Cross-validated scores of `kind` on `d` for the four measures.
pub fn evaluate(
    kind: Learner,
    d: &RatingDataset,
    hyper: &Hyper,
    folds: usize,
    seed: u64,
) -> Result<BTreeMap<String, f64>> {
    if folds < 2 || d.len() < folds {
        return Err(Error::TooFewRatings {
            needed: folds.max(2),
            folds,
            got: d.len(),
        });
    }
    let assignment = fold_assignment(d.len(), folds, seed);
    let (mut sq, mut abs, mut n_test) = (0.0, 0.0, 0usize);
    let mut fold_auc = Vec::new();
    let mut fold_ndcg = Vec::new();
    let threshold = d.scale.midpoint();

    for f in 0..folds {
        let train = d.subset((0..d.len()).filter(|&ix| assignment[ix] != f));
        let test: Vec<_> = (0..d.len())
            .filter(|&ix| assignment[ix] == f)
            .map(|ix| d.ratings[ix])
            .collect();
        let model = fit(kind, &train, hyper, crate::seeds::derive(seed, "mf", f as u64))?;
        for r in &test {
            let err = r.value - predict_rating(&model, r.user, r.item);
            sq += err * err;
            abs += err.abs();
            n_test += 1;
        }

        let mut train_rated = vec![Vec::new(); d.num_users()];
        for r in &train.ratings {
            train_rated[r.user].push(r.item);
        }
        let mut relevant_by_user: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for r in test.iter().filter(|r| r.value >= threshold) {
            relevant_by_user.entry(r.user).or_default().push(r.item);
        }
        let (mut aucs, mut ndcgs) = (Vec::new(), Vec::new());
        let mut relevant = vec![false; d.num_items()];
        let mut excluded = vec![false; d.num_items()];
        for (&user, items) in &relevant_by_user {
            for &i in &train_rated[user] {
                excluded[i] = true;
            }
            for &i in items {
                relevant[i] = true;
            }
            let candidates: Vec<usize> = (0..d.num_items()).filter(|&i| !excluded[i]).collect();
            let ranked = rank_items(&model, user, &candidates);
            if let Some(a) = auc(&ranked, &relevant) {
                aucs.push(a);
            }
            if let Some(g) = ndcg(&ranked, &relevant) {
                ndcgs.push(g);
            }
            for &i in &train_rated[user] {
                excluded[i] = false;
            }
            for &i in items {
                relevant[i] = false;
            }
        }
        if let Some(a) = mean_of(&aucs) {
            fold_auc.push(a);
        }
        if let Some(g) = mean_of(&ndcgs) {
            fold_ndcg.push(g);
        }
    }
    let mae = abs / n_test as f64;
    let mut out = BTreeMap::new();
    out.insert("RMSE".to_string(), (sq / n_test as f64).sqrt());
    out.insert("NMAE".to_string(), mae / d.scale.width());
    // No evaluable user anywhere: report chance-level ranking quality.
    out.insert("AUC".to_string(), mean_of(&fold_auc).unwrap_or(0.5));
    out.insert("NDCG".to_string(), mean_of(&fold_ndcg).unwrap_or(0.0));
    Ok(out)
}
