//! Whole-graph embeddings by PV-DBOW skipgram with negative sampling.
//!
//! Each graph owns a row of the representation matrix and each vocabulary
//! token a row of the context matrix. Training walks over every
//! (graph, token) occurrence and takes one SGD step on
//!
//! ```text
//! -ln s(v . c_pos) - sum_j ln s(-v . c_neg_j)
//! ```
//!
//! where `s` is the logistic function and the negatives are drawn from the
//! vocabulary's noise distribution, never equal to the positive token.

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::wl::{SubgraphDocument, Vocabulary};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub sigma: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub negatives: usize,
    pub seed: u64,
    /// Stop once the relative change of the epoch-mean loss drops below 1e-4.
    pub early_stop: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            sigma: 30,
            epochs: 100,
            learning_rate: 0.025,
            min_learning_rate: 0.0001,
            negatives: 5,
            seed: 0,
            early_stop: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma == 0 || self.epochs == 0 || self.negatives == 0 {
            return Err(Error::Config(
                "sigma, epochs and negatives must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.min_learning_rate >= 0.0)
            || self.min_learning_rate > self.learning_rate
        {
            return Err(Error::Config(format!(
                "need 0 <= min learning rate ({}) <= learning rate ({}), learning rate > 0",
                self.min_learning_rate, self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Graph representations (`graphs`, |G| x sigma) and token contexts
/// (`contexts`, |V| x sigma).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub sigma: usize,
    pub graphs: Matrix,
    pub contexts: Matrix,
}

/// Graph rows uniform in `[-0.5/sigma, 0.5/sigma]`, contexts zero.
pub fn init_model(num_graphs: usize, vocab: &Vocabulary, cfg: &TrainConfig) -> Result<EmbeddingModel> {
    cfg.validate()?;
    if num_graphs == 0 {
        return Err(Error::ShapeMismatch("need at least one graph".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = 0.5 / cfg.sigma as f64;
    let mut graphs = Matrix::zeros(num_graphs, cfg.sigma);
    for x in &mut graphs.data {
        *x = rng.random_range(-bound..=bound);
    }
    Ok(EmbeddingModel {
        sigma: cfg.sigma,
        graphs,
        contexts: Matrix::zeros(vocab.len(), cfg.sigma),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Skipgram negative-sampling loss of one (graph, token) occurrence.
pub fn sgns_loss(v: &[f64], c_pos: &[f64], c_negs: &[&[f64]]) -> f64 {
    // -ln s(x) = softplus(-x)
    let mut loss = softplus(-dot(v, c_pos));
    for c in c_negs {
        loss += softplus(dot(v, c));
    }
    loss
}

/// Gradients of [`sgns_loss`] with respect to `v`, `c_pos` and each negative.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradients {
    pub v: Vec<f64>,
    pub c_pos: Vec<f64>,
    pub c_negs: Vec<Vec<f64>>,
}

pub fn sgns_gradients(v: &[f64], c_pos: &[f64], c_negs: &[&[f64]]) -> SgnsGradients {
    // d/dx softplus(-x) = s(x) - 1; d/dx softplus(x) = s(x).
    let gp = logistic(dot(v, c_pos)) - 1.0;
    let mut gv: Vec<f64> = c_pos.iter().map(|c| gp * c).collect();
    let g_pos = v.iter().map(|x| gp * x).collect();
    let mut g_negs = Vec::with_capacity(c_negs.len());
    for c in c_negs {
        let gn = logistic(dot(v, c));
        for (acc, ci) in gv.iter_mut().zip(c.iter()) {
            *acc += gn * ci;
        }
        g_negs.push(v.iter().map(|x| gn * x).collect());
    }
    SgnsGradients {
        v: gv,
        c_pos: g_pos,
        c_negs: g_negs,
    }
}

/// A trained model plus the per-epoch mean loss.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EmbeddingModel,
    pub epoch_loss: Vec<f64>,
}

/// Negative sampler over the noise distribution with the positive excluded.
struct NoiseSampler {
    dist: Option<WeightedIndex<f64>>,
    /// Token with all the noise mass, if any; it can never be a negative for itself.
    sole: Option<usize>,
}

impl NoiseSampler {
    fn new(noise: &[f64]) -> Self {
        let positive: Vec<usize> = (0..noise.len()).filter(|&i| noise[i] > 0.0).collect();
        Self {
            dist: WeightedIndex::new(noise).ok(),
            sole: (positive.len() == 1).then(|| positive[0]),
        }
    }

    /// Draws a token different from `positive`, or `None` when the noise
    /// distribution has no mass outside `positive`.
    fn draw(&self, positive: usize, rng: &mut ChaCha8Rng) -> Option<usize> {
        let dist = self.dist.as_ref()?;
        if self.sole == Some(positive) {
            return None;
        }
        loop {
            let t = dist.sample(rng);
            if t != positive {
                return Some(t);
            }
        }
    }
}

/// Trains graph and context vectors over `docs`, one row of `graphs` per
/// document in order.
pub fn train(docs: &[SubgraphDocument], vocab: &Vocabulary, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (g, doc) in docs.iter().enumerate() {
        for t in doc.tokens() {
            let ix = vocab.get(t).ok_or_else(|| Error::UnknownToken(t.to_string()))?;
            pairs.push((g, ix));
        }
    }
    let mut model = init_model(docs.len(), vocab, cfg)?;
    // Separate stream from the initializer so init stays a pure function of the seed.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9E37_79B9_7F4A_7C15);
    let sampler = NoiseSampler::new(&vocab.noise);
    let sigma = cfg.sigma;
    let total = (cfg.epochs * pairs.len()).max(1) as f64;
    let mut step = 0usize;
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    let mut negs: Vec<usize> = Vec::with_capacity(cfg.negatives);
    let mut v_grad = vec![0.0; sigma];

    for _ in 0..cfg.epochs {
        pairs.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for &(g, pos) in &pairs {
            let lr = cfg.learning_rate
                - (cfg.learning_rate - cfg.min_learning_rate) * (step as f64 / total);
            step += 1;
            negs.clear();
            for _ in 0..cfg.negatives {
                if let Some(t) = sampler.draw(pos, &mut rng) {
                    negs.push(t);
                }
            }
            v_grad.iter_mut().for_each(|x| *x = 0.0);
            let v = model.graphs.row(g).to_vec();
            for (target, label) in std::iter::once((pos, 1.0)).chain(negs.iter().map(|&n| (n, 0.0))) {
                let c = model.contexts.row_mut(target);
                let score = dot(&v, c);
                loss_sum += if label == 1.0 {
                    softplus(-score)
                } else {
                    softplus(score)
                };
                // Descent step: -(dL/dscore) = label - s(score).
                let g_step = lr * (label - logistic(score));
                for k in 0..sigma {
                    v_grad[k] += g_step * c[k];
                    c[k] += g_step * v[k];
                }
            }
            for (x, d) in model.graphs.row_mut(g).iter_mut().zip(&v_grad) {
                *x += d;
            }
        }
        let mean = loss_sum / pairs.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Numeric("training loss diverged".into()));
        }
        let stop = cfg.early_stop
            && epoch_loss
                .last()
                .is_some_and(|&prev: &f64| ((prev - mean) / prev).abs() < 1e-4);
        epoch_loss.push(mean);
        if stop {
            break;
        }
    }
    Ok(TrainOutcome { model, epoch_loss })
}

/// One named metafeature row per graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MetafeatureTable {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl MetafeatureTable {
    /// CSV with header `dataset,<columns>`; values in 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (name, values) in &self.rows {
            out.push_str(name);
            for v in values {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::MalformedLine {
            line: 0,
            reason: "no header".into(),
        })?;
        let columns: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (ix, line) in lines {
            let mut fields = line.split(',').map(str::trim);
            let name = fields.next().unwrap_or_default().to_string();
            let values = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::MalformedLine {
                        line: ix + 1,
                        reason: format!("non-numeric value {f:?}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != columns.len() {
                return Err(Error::MalformedLine {
                    line: ix + 1,
                    reason: format!("expected {} values, found {}", columns.len(), values.len()),
                });
            }
            rows.push((name, values));
        }
        Ok(Self { columns, rows })
    }
}

/// Exports the graph rows as metafeatures named `e1..e<sigma>`.
pub fn export_metafeatures(m: &EmbeddingModel, names: &[String]) -> Result<MetafeatureTable> {
    if names.len() != m.graphs.rows {
        return Err(Error::ShapeMismatch(format!(
            "{} names for {} graph rows",
            names.len(),
            m.graphs.rows
        )));
    }
    Ok(MetafeatureTable {
        columns: (1..=m.sigma).map(|k| format!("e{k}")).collect(),
        rows: names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), m.graphs.row(i).to_vec()))
            .collect(),
    })
}

impl EmbeddingModel {
    /// Checkpoint: a `numGraphs vocabSize sigma` header line, then one line
    /// per graph row and one per context row, values space separated.
    pub fn to_checkpoint(&self) -> String {
        let mut out = format!("{} {} {}\n", self.graphs.rows, self.contexts.rows, self.sigma);
        for m in [&self.graphs, &self.contexts] {
            for r in 0..m.rows {
                let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:.16e}")).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let malformed = |line: usize, reason: &str| Error::MalformedLine {
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines();
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| malformed(1, "missing header"))?
            .split_whitespace()
            .map(|f| f.parse().map_err(|_| malformed(1, "bad header")))
            .collect::<Result<_>>()?;
        let [graphs, vocab, sigma] = header[..] else {
            return Err(malformed(1, "header needs 3 fields"));
        };
        let mut read = |rows: usize, offset: usize| -> Result<Matrix> {
            let mut m = Matrix::zeros(rows, sigma);
            for r in 0..rows {
                let line = lines.next().ok_or_else(|| malformed(offset + r, "missing row"))?;
                let values: Vec<f64> = line
                    .split_whitespace()
                    .map(|f| f.parse().map_err(|_| malformed(offset + r, "bad value")))
                    .collect::<Result<_>>()?;
                if values.len() != sigma {
                    return Err(malformed(offset + r, "wrong row width"));
                }
                m.row_mut(r).copy_from_slice(&values);
            }
            Ok(m)
        };
        let graphs = read(graphs, 2)?;
        let contexts = read(vocab, 2 + graphs.rows)?;
        Ok(Self {
            sigma,
            graphs,
            contexts,
        })
    }
}
