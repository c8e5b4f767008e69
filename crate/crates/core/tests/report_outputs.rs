#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;

use cfmeta::metalearn::GridPoint;
use cfmeta::report::{emit_report, pca_project, Alpha, ReportInputs, ScoreMatrix};
use cfmeta::statfeatures::MetafeatureVector;

fn fv(x: &[f64]) -> MetafeatureVector {
    MetafeatureVector::new((0..x.len()).map(|j| format!("f{j}")).collect(), x.to_vec()).unwrap()
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix; returns
/// eigenvalues and eigenvectors as columns.
fn jacobi(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

#[test]
fn pca_matches_a_jacobi_reference() {
    let data = [
        [2.0, 0.5, 7.0],
        [1.0, 1.5, 3.0],
        [4.0, -0.5, 5.0],
        [3.0, 2.5, 1.0],
    ];
    let (n, p) = (4, 3);
    let mut z = vec![vec![0.0; p]; n];
    for j in 0..p {
        let mean = data.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let sd = (data.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        for i in 0..n {
            z[i][j] = (data[i][j] - mean) / sd;
        }
    }
    let cov: Vec<Vec<f64>> = (0..p)
        .map(|a| (0..p).map(|b| (0..n).map(|i| z[i][a] * z[i][b]).sum::<f64>() / (n as f64 - 1.0)).collect())
        .collect();
    let (values, vectors) = jacobi(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let total: f64 = values.iter().sum();

    let pca = pca_project(&data.iter().map(|r| fv(r)).collect::<Vec<_>>(), 2).unwrap();
    for (axis, &c) in order.iter().take(2).enumerate() {
        let mut w: Vec<f64> = vectors.iter().map(|row| row[c]).collect();
        let lead = w.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if lead < 0.0 {
            w.iter_mut().for_each(|x| *x = -*x);
        }
        for j in 0..p {
            assert!((pca.components[axis][j] - w[j]).abs() < 1e-9, "loading {axis},{j}");
        }
        assert!((pca.explained[axis] - values[c] / total).abs() < 1e-9);
        for i in 0..n {
            let want: f64 = (0..p).map(|j| z[i][j] * w[j]).sum();
            assert!((pca.coords[i][axis] - want).abs() < 1e-9, "coord {i},{axis}");
        }
    }
}

fn point(sigma: usize, delta: usize) -> GridPoint {
    GridPoint {
        theta: 100,
        sigma,
        delta,
        epochs: 100,
        learning_rate: 0.025,
        negatives: 5,
        k: 1,
    }
}

#[test]
fn scatter_marks_the_best_configuration() {
    let mut grid = BTreeMap::new();
    grid.insert(
        "item-recommendation".to_string(),
        vec![(point(10, 2), 0.70), (point(30, 6), 0.805), (point(50, 4), 0.79)],
    );
    grid.insert(
        "rating-prediction".to_string(),
        vec![(point(10, 2), 0.80), (point(30, 6), 0.858), (point(50, 4), 0.85)],
    );
    let dir = tempfile::tempdir().unwrap();
    let inputs = ReportInputs {
        grid,
        ..Default::default()
    };
    let written = emit_report(&inputs, dir.path()).unwrap();
    assert!(written.contains(&"sweeps/scatter.svg".to_string()));
    let csv = std::fs::read_to_string(dir.path().join("sweeps/scatter.csv")).unwrap();
    let best: Vec<&str> = csv.lines().filter(|l| l.ends_with(",1")).collect();
    assert_eq!(best, ["30,6,0.805000,0.858000,1"]);
    let grid_csv = std::fs::read_to_string(dir.path().join("sweeps/grid.csv")).unwrap();
    assert_eq!(grid_csv.lines().count(), 1 + 6);
}

#[test]
fn full_report_layout() {
    let strategies = vec!["embedding".to_string(), "statistical".into(), "average-rankings".into()];
    let datasets: Vec<String> = (0..5).map(|d| format!("d{d}")).collect();
    let values: Vec<Vec<f64>> = (0..5).map(|d| vec![0.8, 0.6 + 0.01 * d as f64, 0.2]).collect();
    let mut inputs = ReportInputs {
        alpha: Some(Alpha::P10),
        ..Default::default()
    };
    inputs.scores.insert(
        "rating-prediction".into(),
        ScoreMatrix {
            datasets: datasets.clone(),
            strategies: strategies.clone(),
            values,
        },
    );
    inputs.impact.insert(
        "rating-prediction".into(),
        strategies.iter().map(|s| (s.clone(), vec![0.9, 0.5, 0.3, 0.1])).collect(),
    );
    inputs.pca.insert(
        "rating-prediction-statistical".into(),
        datasets
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), fv(&[i as f64, (i * i) as f64, 1.0 / (i as f64 + 1.0)]), format!("c{}", i % 2)))
            .collect(),
    );
    let dir = tempfile::tempdir().unwrap();
    let mut written = emit_report(&inputs, dir.path()).unwrap();
    written.sort();
    assert_eq!(
        written,
        [
            "cd/rating-prediction.csv",
            "cd/rating-prediction.svg",
            "impact/rating-prediction.csv",
            "impact/rating-prediction.svg",
            "pca/rating-prediction-statistical.csv",
            "pca/rating-prediction-statistical.svg",
            "summary/mean_tau.csv",
            "summary/per_dataset.csv",
        ]
    );
    let mean = std::fs::read_to_string(dir.path().join("summary/mean_tau.csv")).unwrap();
    assert!(mean.contains("rating-prediction,embedding,0.800000"));
    for rel in &written {
        assert!(dir.path().join(rel).metadata().unwrap().len() > 0);
    }
}
