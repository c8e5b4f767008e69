//! Analyses over metalevel results: Friedman/Nemenyi critical differences,
//! baselevel-impact curves, PCA maps, and the CSV/SVG report files.
//!
//! Output layout under the report directory:
//!
//! ```text
//! sweeps/grid.csv        every grid point and task with its mean tau
//! sweeps/theta.csv       tau distribution per theta
//! sweeps/sigma.csv       tau distribution per sigma
//! sweeps/delta.csv       tau distribution per delta
//! sweeps/scatter.csv     best tau per (sigma, delta) on both tasks
//! sweeps/scatter.svg
//! summary/mean_tau.csv   mean LOOCV tau per task and strategy
//! summary/per_dataset.csv
//! cd/<task>.csv          mean ranks and clique membership
//! cd/<task>.svg
//! impact/<task>.csv      impact curve per strategy
//! impact/<task>.svg
//! pca/<family>.csv       2-D coordinates and metatarget class
//! pca/<family>.svg
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::ingest::PerformanceTable;
use crate::metalearn::{fractional_ranks, GridPoint, Ranking};
use crate::statfeatures::{MetafeatureVector, Standardizer};

/// Tau of every strategy (column) on every dataset (row).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub datasets: Vec<String>,
    pub strategies: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn validate(&self) -> Result<()> {
        if self.strategies.len() < 2 || self.datasets.len() < 2 {
            return Err(Error::DegenerateMatrix(format!(
                "need at least 2 strategies and 2 datasets, got {} and {}",
                self.strategies.len(),
                self.datasets.len()
            )));
        }
        if self.values.len() != self.datasets.len()
            || self.values.iter().any(|r| r.len() != self.strategies.len())
        {
            return Err(Error::DegenerateMatrix("incomplete score matrix".into()));
        }
        if self.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateMatrix("non-finite score".into()));
        }
        Ok(())
    }

    /// Mean rank of each strategy; rank 1 is the highest score on a dataset.
    pub fn mean_ranks(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let mut sums = vec![0.0; self.strategies.len()];
        for row in &self.values {
            for (s, r) in sums.iter_mut().zip(fractional_ranks(row)) {
                *s += r;
            }
        }
        let n = self.datasets.len() as f64;
        Ok(sums.into_iter().map(|s| s / n).collect())
    }
}

/// Friedman chi-square over mean ranks.
pub fn friedman_statistic(m: &ScoreMatrix) -> Result<f64> {
    let ranks = m.mean_ranks()?;
    let k = ranks.len() as f64;
    let n = m.datasets.len() as f64;
    let sum_sq: f64 = ranks.iter().map(|r| r * r).sum();
    let stat = 12.0 * n / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0);
    // Cancellation can leave a tiny negative for identical columns.
    Ok(stat.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alpha {
    P05,
    P10,
}

impl Alpha {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "0.05" => Some(Alpha::P05),
            "0.1" | "0.10" => Some(Alpha::P10),
            _ => None,
        }
    }
}

/// Two-tailed Nemenyi critical values (studentized range / sqrt 2), k = 2..=10.
const Q_05: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];
const Q_10: [f64; 9] = [1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920];

pub fn nemenyi_q(k: usize, alpha: Alpha) -> Result<f64> {
    if !(2..=10).contains(&k) {
        return Err(Error::UnsupportedK(k));
    }
    Ok(match alpha {
        Alpha::P05 => Q_05[k - 2],
        Alpha::P10 => Q_10[k - 2],
    })
}

/// Critical difference `q * sqrt(k(k+1) / 6N)`.
pub fn nemenyi_cd(k: usize, n: usize, alpha: Alpha) -> Result<f64> {
    let q = nemenyi_q(k, alpha)?;
    if n == 0 {
        return Err(Error::DegenerateMatrix("no datasets".into()));
    }
    let (k, n) = (k as f64, n as f64);
    Ok(q * (k * (k + 1.0) / (6.0 * n)).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdLayout {
    pub strategies: Vec<String>,
    pub mean_ranks: Vec<f64>,
    pub cd: f64,
    /// Maximal groups of strategies whose mean ranks lie within `cd` of each
    /// other, each sorted by mean rank.
    pub cliques: Vec<Vec<String>>,
    pub friedman: f64,
}

/// Maximal groups of values within `cd` of each other, as sorted index lists.
pub fn cd_cliques(mean_ranks: &[f64], names: &[String], cd: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..mean_ranks.len()).collect();
    order.sort_by(|&a, &b| mean_ranks[a].total_cmp(&mean_ranks[b]).then_with(|| names[a].cmp(&names[b])));
    let mut cliques = Vec::new();
    let mut last_end: Option<usize> = None;
    for start in 0..order.len() {
        let mut end = start;
        while end + 1 < order.len() && mean_ranks[order[end + 1]] - mean_ranks[order[start]] <= cd {
            end += 1;
        }
        if last_end.is_none_or(|e| end > e) {
            cliques.push(order[start..=end].to_vec());
            last_end = Some(end);
        }
    }
    cliques
}

pub fn cd_layout(m: &ScoreMatrix, alpha: Alpha) -> Result<CdLayout> {
    let mean_ranks = m.mean_ranks()?;
    let cd = nemenyi_cd(m.strategies.len(), m.datasets.len(), alpha)?;
    let cliques = cd_cliques(&mean_ranks, &m.strategies, cd)
        .into_iter()
        .map(|c| c.into_iter().map(|ix| m.strategies[ix].clone()).collect())
        .collect();
    Ok(CdLayout {
        strategies: m.strategies.clone(),
        mean_ranks,
        cd,
        cliques,
        friedman: friedman_statistic(m)?,
    })
}

/// Mean normalized baselevel performance at each position of the predicted
/// rankings.
///
/// On each dataset the algorithms' scores are made higher-better, min-max
/// normalized, and averaged over `measures`; position `t` of the curve is the
/// normalized score of the algorithm predicted at rank `t + 1`, averaged over
/// datasets. A dataset where all algorithms tie scores 1 everywhere.
pub fn baselevel_impact(
    predicted: &BTreeMap<String, Ranking>,
    t: &PerformanceTable,
    measures: &[String],
) -> Result<Vec<f64>> {
    let Some(first) = predicted.values().next() else {
        return Err(Error::EmptyMetabase);
    };
    let algorithms = &first.algorithms;
    let mut curve = vec![0.0; algorithms.len()];
    for (dataset, ranking) in predicted {
        if &ranking.algorithms != algorithms || &t.algorithms(dataset) != algorithms {
            return Err(Error::AlgorithmSetMismatch);
        }
        let mut normalized = vec![0.0; algorithms.len()];
        for m in measures {
            let dir = t.direction(m)?;
            let scores = algorithms
                .iter()
                .map(|a| {
                    t.get(dataset, a, m).map(|s| dir.orient(s)).ok_or_else(|| Error::MissingMeasure {
                        dataset: dataset.clone(),
                        measure: m.clone(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for (acc, s) in normalized.iter_mut().zip(&scores) {
                *acc += if hi > lo { (s - lo) / (hi - lo) } else { 1.0 } / measures.len() as f64;
            }
        }
        for (j, &rank) in ranking.ranks.iter().enumerate() {
            curve[rank - 1] += normalized[j];
        }
    }
    let n = predicted.len() as f64;
    Ok(curve.into_iter().map(|c| c / n).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// One row per input vector.
    pub coords: Vec<Vec<f64>>,
    /// Fraction of total variance per returned component, non-increasing.
    pub explained: Vec<f64>,
    /// Unit loading vectors over the standardized features.
    pub components: Vec<Vec<f64>>,
    pub scaler: Standardizer,
}

impl Pca {
    /// Coordinates of an already standardized vector.
    pub fn project_standardized(&self, z: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(z).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Projects standardized features onto the leading `dims` principal axes.
/// Each axis is signed so its largest-magnitude loading is positive.
pub fn pca_project(features: &[MetafeatureVector], dims: usize) -> Result<Pca> {
    if features.len() < 3 {
        return Err(Error::DegenerateData(format!("need at least 3 vectors, got {}", features.len())));
    }
    let scaler = Standardizer::fit(features)?;
    let rows: Vec<Vec<f64>> = features
        .iter()
        .map(|f| scaler.transform(f).map(|z| z.values))
        .collect::<Result<_>>()?;
    let (n, p) = (rows.len(), rows[0].len());
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let cov = x.transpose() * &x / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let total: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::DegenerateData("all features are constant".into()));
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut components = Vec::new();
    let mut explained = Vec::new();
    for &c in order.iter().take(dims.min(p)) {
        let mut v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
        let lead = v
            .iter()
            .copied()
            .fold(0.0_f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained.push(eig.eigenvalues[c].max(0.0) / total);
    }
    let mut pca = Pca {
        coords: Vec::new(),
        explained,
        components,
        scaler,
    };
    pca.coords = rows.iter().map(|z| pca.project_standardized(z)).collect();
    Ok(pca)
}

/// Best tau per (sigma, delta) on two tasks, for the cross-task scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub sigma: usize,
    pub delta: usize,
    pub x: f64,
    pub y: f64,
}

/// Pairs the best per-(sigma, delta) scores of two tasks. The returned index
/// marks the point with the largest `x + y`, earliest on ties.
pub fn scatter_points(x_task: &[(GridPoint, f64)], y_task: &[(GridPoint, f64)]) -> (Vec<ScatterPoint>, Option<usize>) {
    let best = |scores: &[(GridPoint, f64)]| {
        let mut m: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (p, t) in scores {
            let e = m.entry((p.sigma, p.delta)).or_insert(f64::NEG_INFINITY);
            *e = e.max(*t);
        }
        m
    };
    let (bx, by) = (best(x_task), best(y_task));
    let points: Vec<ScatterPoint> = bx
        .iter()
        .filter_map(|(&(sigma, delta), &x)| {
            by.get(&(sigma, delta)).map(|&y| ScatterPoint { sigma, delta, x, y })
        })
        .collect();
    let mut best_ix = None;
    for (ix, p) in points.iter().enumerate() {
        if best_ix.is_none_or(|b: usize| p.x + p.y > points[b].x + points[b].y) {
            best_ix = Some(ix);
        }
    }
    (points, best_ix)
}

/// Min, quartiles, mean and max of a non-empty list.
fn summary(values: &[f64]) -> [f64; 6] {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    [v[0], q(0.25), q(0.5), mean, q(0.75), v[v.len() - 1]]
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

/// Everything the report files are rendered from.
#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    /// Grid scores per task name.
    pub grid: BTreeMap<String, Vec<(GridPoint, f64)>>,
    /// LOOCV tau per dataset and strategy, per task.
    pub scores: BTreeMap<String, ScoreMatrix>,
    /// Impact curve per task and strategy.
    pub impact: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
    /// Feature vectors per family, with the best-ranked algorithm as class.
    pub pca: BTreeMap<String, Vec<(String, MetafeatureVector, String)>>,
    pub alpha: Option<Alpha>,
}

fn write_file(dir: &Path, rel: &str, contents: &str) -> Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

/// Writes every report file under `dir`; returns the relative paths written.
pub fn emit_report(inputs: &ReportInputs, dir: &Path) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let mut emit = |rel: String, contents: String| -> Result<()> {
        write_file(dir, &rel, &contents)?;
        written.push(rel);
        Ok(())
    };

    if !inputs.grid.is_empty() {
        let mut grid = String::from("task,theta,sigma,delta,epochs,learning_rate,negatives,k,mean_tau\n");
        for (task, scores) in &inputs.grid {
            for (p, t) in scores {
                let _ = writeln!(
                    grid,
                    "{task},{},{},{},{},{},{},{},{}",
                    p.theta, p.sigma, p.delta, p.epochs, p.learning_rate, p.negatives, p.k, fmt(*t)
                );
            }
        }
        emit("sweeps/grid.csv".into(), grid)?;

        type Key = fn(&GridPoint) -> usize;
        let params: [(&str, Key); 3] = [("theta", |p| p.theta), ("sigma", |p| p.sigma), ("delta", |p| p.delta)];
        for (param, key) in params {
            let mut out = format!("task,{param},configs,min,q1,median,mean,q3,max\n");
            for (task, scores) in &inputs.grid {
                let mut by: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
                for (p, t) in scores {
                    by.entry(key(p)).or_default().push(*t);
                }
                for (value, taus) in by {
                    let s = summary(&taus);
                    let _ = write!(out, "{task},{value},{}", taus.len());
                    for x in s {
                        let _ = write!(out, ",{}", fmt(x));
                    }
                    out.push('\n');
                }
            }
            emit(format!("sweeps/{param}.csv"), out)?;
        }

        let tasks: Vec<&String> = inputs.grid.keys().collect();
        if tasks.len() >= 2 {
            let (xt, yt) = (tasks[0], tasks[1]);
            let (points, best) = scatter_points(&inputs.grid[xt], &inputs.grid[yt]);
            let mut out = format!("sigma,delta,{xt},{yt},best\n");
            for (ix, p) in points.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{},{}", p.sigma, p.delta, fmt(p.x), fmt(p.y), u8::from(Some(ix) == best));
            }
            emit("sweeps/scatter.csv".into(), out)?;
            let labeled: Vec<(f64, f64, String)> = points
                .iter()
                .map(|p| (p.x, p.y, format!("s{}d{}", p.sigma, p.delta)))
                .collect();
            emit("sweeps/scatter.svg".into(), svg::scatter(&labeled, best, xt, yt))?;
        }
    }

    if !inputs.scores.is_empty() {
        let mut mean = String::from("task,strategy,mean_tau\n");
        let mut per = String::from("task,dataset,strategy,tau\n");
        for (task, m) in &inputs.scores {
            for (j, s) in m.strategies.iter().enumerate() {
                let avg = m.values.iter().map(|r| r[j]).sum::<f64>() / m.values.len().max(1) as f64;
                let _ = writeln!(mean, "{task},{s},{}", fmt(avg));
            }
            for (d, row) in m.datasets.iter().zip(&m.values) {
                for (s, v) in m.strategies.iter().zip(row) {
                    let _ = writeln!(per, "{task},{d},{s},{}", fmt(*v));
                }
            }
        }
        emit("summary/mean_tau.csv".into(), mean)?;
        emit("summary/per_dataset.csv".into(), per)?;

        let alpha = inputs.alpha.unwrap_or(Alpha::P05);
        for (task, m) in &inputs.scores {
            let layout = cd_layout(m, alpha)?;
            let mut out = String::from("strategy,mean_rank,cliques\n");
            for (s, r) in layout.strategies.iter().zip(&layout.mean_ranks) {
                let member: Vec<String> = layout
                    .cliques
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.contains(s))
                    .map(|(ix, _)| ix.to_string())
                    .collect();
                let _ = writeln!(out, "{s},{},{}", fmt(*r), member.join(" "));
            }
            let _ = writeln!(out, "# cd={} friedman={}", fmt(layout.cd), fmt(layout.friedman));
            emit(format!("cd/{task}.csv"), out)?;
            emit(format!("cd/{task}.svg"), svg::cd(&layout))?;
        }
    }

    for (task, curves) in &inputs.impact {
        let mut out = String::from("strategy,threshold,performance\n");
        for (s, c) in curves {
            for (t, v) in c.iter().enumerate() {
                let _ = writeln!(out, "{s},{},{}", t + 1, fmt(*v));
            }
        }
        emit(format!("impact/{task}.csv"), out)?;
        emit(format!("impact/{task}.svg"), svg::lines(curves))?;
    }

    for (family, rows) in &inputs.pca {
        let vectors: Vec<MetafeatureVector> = rows.iter().map(|(_, v, _)| v.clone()).collect();
        let pca = pca_project(&vectors, 2)?;
        let mut out = String::from("dataset,pc1,pc2,class\n");
        let mut points = Vec::new();
        for ((id, _, class), c) in rows.iter().zip(&pca.coords) {
            let (x, y) = (c[0], c.get(1).copied().unwrap_or(0.0));
            let _ = writeln!(out, "{id},{},{},{class}", fmt(x), fmt(y));
            points.push((x, y, class.clone()));
        }
        let _ = writeln!(
            out,
            "# explained={}",
            pca.explained.iter().map(|e| fmt(*e)).collect::<Vec<_>>().join(" ")
        );
        emit(format!("pca/{family}.csv"), out)?;
        emit(format!("pca/{family}.svg"), svg::classes(&points))?;
    }
    Ok(written)
}

/// Minimal static SVG renderings. The CSVs hold the numbers.
mod svg {
    use std::collections::BTreeMap;
    use std::fmt::Write as _;

    use super::CdLayout;

    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const PAD: f64 = 40.0;
    const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

    fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    }

    fn frame(body: &str) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
             <rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n{body}</svg>\n",
            W - 2.0 * PAD,
            H - 2.0 * PAD
        )
    }

    fn sx(v: f64, (lo, hi): (f64, f64)) -> f64 {
        PAD + (v - lo) / (hi - lo) * (W - 2.0 * PAD)
    }

    fn sy(v: f64, (lo, hi): (f64, f64)) -> f64 {
        H - PAD - (v - lo) / (hi - lo) * (H - 2.0 * PAD)
    }

    pub fn scatter(points: &[(f64, f64, String)], best: Option<usize>, xlabel: &str, ylabel: &str) -> String {
        let bx = bounds(points.iter().map(|p| p.0));
        let by = bounds(points.iter().map(|p| p.1));
        let mut body = String::new();
        for (ix, (x, y, label)) in points.iter().enumerate() {
            let fill = if Some(ix) == best { "#d62728" } else { "#1f77b4" };
            let _ = writeln!(
                body,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{fill}\"><title>{label} ({x:.3}, {y:.3})</title></circle>",
                sx(*x, bx),
                sy(*y, by)
            );
        }
        let _ = writeln!(body, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{xlabel}</text>", W / 2.0, H - 8.0);
        let _ = writeln!(body, "<text x=\"12\" y=\"{}\" transform=\"rotate(-90 12 {})\" text-anchor=\"middle\">{ylabel}</text>", H / 2.0, H / 2.0);
        frame(&body)
    }

    pub fn classes(points: &[(f64, f64, String)]) -> String {
        let bx = bounds(points.iter().map(|p| p.0));
        let by = bounds(points.iter().map(|p| p.1));
        let mut labels: Vec<&String> = points.iter().map(|p| &p.2).collect();
        labels.sort();
        labels.dedup();
        let mut body = String::new();
        for (x, y, class) in points {
            let color = PALETTE[labels.iter().position(|l| *l == class).unwrap_or(0) % PALETTE.len()];
            let _ = writeln!(
                body,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{color}\"><title>{class}</title></circle>",
                sx(*x, bx),
                sy(*y, by)
            );
        }
        for (ix, l) in labels.iter().enumerate() {
            let _ = writeln!(
                body,
                "<text x=\"{}\" y=\"{}\" fill=\"{}\">{l}</text>",
                PAD + 4.0,
                PAD + 14.0 * (ix + 1) as f64,
                PALETTE[ix % PALETTE.len()]
            );
        }
        frame(&body)
    }

    pub fn lines(curves: &BTreeMap<String, Vec<f64>>) -> String {
        let len = curves.values().map(Vec::len).max().unwrap_or(1);
        let bx = (1.0, len.max(2) as f64);
        let by = (0.0, 1.0);
        let mut body = String::new();
        for (ix, (name, c)) in curves.iter().enumerate() {
            let color = PALETTE[ix % PALETTE.len()];
            let pts: Vec<String> = c
                .iter()
                .enumerate()
                .map(|(t, v)| format!("{:.2},{:.2}", sx((t + 1) as f64, bx), sy(*v, by)))
                .collect();
            let _ = writeln!(body, "<polyline fill=\"none\" stroke=\"{color}\" points=\"{}\"/>", pts.join(" "));
            let _ = writeln!(body, "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{name}</text>", W - PAD - 80.0, PAD + 14.0 * (ix + 1) as f64);
        }
        frame(&body)
    }

    pub fn cd(layout: &CdLayout) -> String {
        let k = layout.strategies.len() as f64;
        let bx = (1.0, k.max(2.0));
        let mut body = String::new();
        let axis_y = PAD + 20.0;
        let _ = writeln!(body, "<line x1=\"{}\" y1=\"{axis_y}\" x2=\"{}\" y2=\"{axis_y}\" stroke=\"black\"/>", sx(1.0, bx), sx(bx.1, bx));
        let cd_end = sx(1.0 + layout.cd, bx).min(W - PAD);
        let _ = writeln!(body, "<line x1=\"{}\" y1=\"{}\" x2=\"{cd_end:.2}\" y2=\"{}\" stroke=\"#d62728\" stroke-width=\"2\"/>", sx(1.0, bx), PAD, PAD);
        let _ = writeln!(body, "<text x=\"{}\" y=\"{}\">CD = {:.3}</text>", sx(1.0, bx), PAD - 6.0, layout.cd);
        let mut order: Vec<usize> = (0..layout.strategies.len()).collect();
        order.sort_by(|&a, &b| layout.mean_ranks[a].total_cmp(&layout.mean_ranks[b]));
        for (row, &ix) in order.iter().enumerate() {
            let x = sx(layout.mean_ranks[ix], bx);
            let y = axis_y + 30.0 + 18.0 * row as f64;
            let _ = writeln!(body, "<line x1=\"{x:.2}\" y1=\"{axis_y}\" x2=\"{x:.2}\" y2=\"{y:.2}\" stroke=\"#555\"/>");
            let _ = writeln!(body, "<text x=\"{:.2}\" y=\"{y:.2}\">{} ({:.2})</text>", x + 4.0, layout.strategies[ix], layout.mean_ranks[ix]);
        }
        for (c, clique) in layout.cliques.iter().enumerate().filter(|(_, c)| c.len() > 1) {
            let ranks: Vec<f64> = clique
                .iter()
                .filter_map(|s| layout.strategies.iter().position(|t| t == s))
                .map(|ix| layout.mean_ranks[ix])
                .collect();
            let (lo, hi) = bounds(ranks.into_iter());
            let y = axis_y + 8.0 + 5.0 * c as f64;
            let _ = writeln!(body, "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"black\" stroke-width=\"3\"/>", sx(lo, bx), sx(hi, bx));
        }
        frame(&body)
    }
}
