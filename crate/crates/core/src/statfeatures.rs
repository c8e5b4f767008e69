//! Systematic rating-matrix metafeatures.
//!
//! Features are `object.function.postfunction` over three objects (`matrix`,
//! `rows`, `columns`). The matrix object only carries the `original` function
//! (the flat rating list); rows and columns carry `count`, `mean` and `sum`,
//! one value per user or item. Each resulting list is summarized by ten
//! post-functions. Four scalars come first: `matrix.users`, `matrix.items`,
//! `matrix.count` and `matrix.density`.
//!
//! Every aggregate is computed on sorted values, so feature values do not
//! depend on the order of the rating triples.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::ingest::RatingDataset;

/// Names paired with values; every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct MetafeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl MetafeatureVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::LengthMismatch(format!(
                "{} names for {} values",
                names.len(),
                values.len()
            )));
        }
        let unique: HashSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::NameMismatch);
        }
        Ok(Self { names, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|ix| self.values[ix])
    }
}

pub const POST_FUNCTIONS: [&str; 10] = [
    "max", "min", "mean", "sd", "median", "mode", "entropy", "gini", "skewness", "kurtosis",
];

fn sorted(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values
}

/// Summary statistics of a sorted, non-empty list, in [`POST_FUNCTIONS`] order.
pub fn post_functions(sorted: &[f64]) -> [f64; 10] {
    let n = sorted.len() as f64;
    let sum: f64 = sorted.iter().sum();
    let mean = sum / n;
    let central = |p: i32| sorted.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / n;
    let m2 = central(2);
    let (skewness, kurtosis) = if m2 > 0.0 {
        (central(3) / m2.powf(1.5), central(4) / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };

    // Runs of equal values in a sorted list give the empirical distribution.
    let mut runs: Vec<(f64, usize)> = Vec::new();
    for &x in sorted {
        match runs.last_mut() {
            Some((v, c)) if *v == x => *c += 1,
            _ => runs.push((x, 1)),
        }
    }
    // First maximal run is the smallest modal value.
    let mode = runs
        .iter()
        .fold((f64::NAN, 0usize), |best, &(v, c)| if c > best.1 { (v, c) } else { best })
        .0;
    let entropy = -runs
        .iter()
        .map(|&(_, c)| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>();
    let gini = if sum != 0.0 {
        sorted
            .iter()
            .enumerate()
            .map(|(i, x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x)
            .sum::<f64>()
            / (n * sum)
    } else {
        0.0
    };
    [
        sorted[sorted.len() - 1],
        sorted[0],
        mean,
        m2.sqrt(),
        median,
        mode,
        entropy.max(0.0),
        gini,
        skewness,
        kurtosis,
    ]
}

fn push_family(names: &mut Vec<String>, values: &mut Vec<f64>, prefix: &str, list: Vec<f64>) {
    let stats = post_functions(&sorted(list));
    for (post, v) in POST_FUNCTIONS.iter().zip(stats) {
        names.push(format!("{prefix}.{post}"));
        values.push(v);
    }
}

/// Per-row `(count, mean, sum)` from the grouped values of each row.
fn row_functions(groups: Vec<Vec<f64>>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut counts = Vec::with_capacity(groups.len());
    let mut means = Vec::with_capacity(groups.len());
    let mut sums = Vec::with_capacity(groups.len());
    for g in groups.into_iter().filter(|g| !g.is_empty()) {
        let g = sorted(g);
        let s: f64 = g.iter().sum();
        counts.push(g.len() as f64);
        means.push(s / g.len() as f64);
        sums.push(s);
    }
    (counts, means, sums)
}

/// The full rating-matrix metafeature vector of `d`.
pub fn systematic_metafeatures(d: &RatingDataset) -> Result<MetafeatureVector> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut names = Vec::new();
    let mut values = Vec::new();
    let (nu, ni, nr) = (d.num_users() as f64, d.num_items() as f64, d.len() as f64);
    for (name, v) in [
        ("matrix.users", nu),
        ("matrix.items", ni),
        ("matrix.count", nr),
        ("matrix.density", nr / (nu * ni)),
    ] {
        names.push(name.to_string());
        values.push(v);
    }
    push_family(
        &mut names,
        &mut values,
        "matrix.original",
        d.ratings.iter().map(|r| r.value).collect(),
    );
    let mut by_user = vec![Vec::new(); d.num_users()];
    let mut by_item = vec![Vec::new(); d.num_items()];
    for r in &d.ratings {
        by_user[r.user].push(r.value);
        by_item[r.item].push(r.value);
    }
    for (object, groups) in [("rows", by_user), ("columns", by_item)] {
        let (counts, means, sums) = row_functions(groups);
        push_family(&mut names, &mut values, &format!("{object}.count"), counts);
        push_family(&mut names, &mut values, &format!("{object}.mean"), means);
        push_family(&mut names, &mut values, &format!("{object}.sum"), sums);
    }
    MetafeatureVector::new(names, values)
}

/// Per-column z-score parameters fitted on a set of vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    /// Population standard deviations; `0.0` marks a constant column.
    pub scales: Vec<f64>,
}

fn check_names<'a>(names: &[String], vectors: impl IntoIterator<Item = &'a MetafeatureVector>) -> Result<()> {
    for v in vectors {
        if v.names != names {
            return Err(Error::NameMismatch);
        }
    }
    Ok(())
}

impl Standardizer {
    pub fn fit(features: &[MetafeatureVector]) -> Result<Self> {
        let first = features.first().ok_or(Error::EmptyMetabase)?;
        check_names(&first.names, features)?;
        let n = features.len() as f64;
        let dims = first.len();
        let mut means = vec![0.0; dims];
        let mut scales = vec![0.0; dims];
        for j in 0..dims {
            let col: Vec<f64> = features.iter().map(|f| f.values[j]).collect();
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            means[j] = mean;
            scales[j] = if sd > 1e-12 * mean.abs().max(1.0) { sd } else { 0.0 };
        }
        Ok(Self {
            names: first.names.clone(),
            means,
            scales,
        })
    }

    pub fn transform(&self, v: &MetafeatureVector) -> Result<MetafeatureVector> {
        check_names(&self.names, [v])?;
        let values = v
            .values
            .iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(x, (m, s))| if *s == 0.0 { 0.0 } else { (x - m) / s })
            .collect();
        Ok(MetafeatureVector {
            names: v.names.clone(),
            values,
        })
    }
}

/// Rescales every column to zero mean and unit variance; constant columns
/// become all zeros.
pub fn standardize(features: &[MetafeatureVector]) -> Result<Vec<MetafeatureVector>> {
    let s = Standardizer::fit(features)?;
    features.iter().map(|f| s.transform(f)).collect()
}

/// Tabular export in the same CSV shape as the embedding metafeatures.
pub fn to_table(rows: &[(String, MetafeatureVector)]) -> Result<crate::embedding::MetafeatureTable> {
    let columns = rows.first().map(|(_, v)| v.names.clone()).unwrap_or_default();
    check_names(&columns, rows.iter().map(|(_, v)| v))?;
    Ok(crate::embedding::MetafeatureTable {
        columns,
        rows: rows.iter().map(|(n, v)| (n.clone(), v.values.clone())).collect(),
    })
}

/// Inverse of [`to_table`].
pub fn from_table(table: &crate::embedding::MetafeatureTable) -> Result<BTreeMap<String, MetafeatureVector>> {
    table
        .rows
        .iter()
        .map(|(n, v)| Ok((n.clone(), MetafeatureVector::new(table.columns.clone(), v.clone())?)))
        .collect()
}
