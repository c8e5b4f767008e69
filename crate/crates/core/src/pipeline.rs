//! End-to-end runs: datasets to performance table, metafeatures,
//! metadatabases, grid search and the report directory.
//!
//! Seeds come from the global seed through [`seeds::derive`]:
//!
//! ```text
//! synthetic dataset (g, k)   derive(seed, "synth", 1000 g + k)
//! walk on dataset i          derive(seed, "walk", i)
//! embedding training         derive(seed, "embed", 0)
//! baselevel folds, dataset i derive(seed, "folds", i)
//! matrix factorization fold  derive(folds seed, "mf", f)
//! ```
//!
//! The same seeds serve every grid point, so configurations differ only by
//! their hyperparameters.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::baselevel::{evaluate, Hyper, Learner};
use crate::config::{EmbedSettings, PipelineConfig, Task};
use crate::embedding::{export_metafeatures, train, MetafeatureTable, TrainConfig};
use crate::error::{Error, Result};
use crate::ingest::{parse_performance_table, parse_ratings, to_bipartite_graph, Direction, PerformanceTable, RatingDataset};
use crate::metalearn::{
    assemble, build_metatarget, grid_search, loocv_predictions, mean_tau, select_best, AverageRankings, GridPoint,
    GridResult, Knn, LoocvFold, MetaDatabase, Ranking,
};
use crate::report::{baselevel_impact, emit_report, ReportInputs, ScoreMatrix};
use crate::sampling::{random_walk_sample, WalkConfig};
use crate::statfeatures::{from_table, systematic_metafeatures, to_table, MetafeatureVector};
use crate::wl::{build_documents, build_vocabulary, SubgraphDocument};
use crate::{seeds, synth};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Strategy names in report files.
pub const EMBEDDING: &str = "embedding";
pub const STATISTICAL: &str = "statistical";
pub const AVERAGE_RANKINGS: &str = "average-rankings";

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a rating file; the dataset is named after the file stem.
pub fn load_ratings(path: &Path, scale: crate::ingest::RatingScale) -> Result<RatingDataset> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_ratings(&name, &read_text(path)?, scale)
}

/// The configured rating files followed by the synthetic corpus.
pub fn load_datasets(cfg: &PipelineConfig) -> Result<Vec<RatingDataset>> {
    let mut out = cfg
        .ratings
        .iter()
        .map(|p| load_ratings(p, cfg.scale))
        .collect::<Result<Vec<_>>>()?;
    if cfg.synthetic > 0 {
        out.extend(synth::corpus(cfg.synthetic, cfg.seed));
    }
    let mut names: Vec<&str> = out.iter().map(|d| d.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Config(format!("two datasets are named {:?}", w[0])));
    }
    Ok(out)
}

/// Cross-validates every learner on every dataset.
pub fn run_baselevel(
    datasets: &[RatingDataset],
    hyper: &Hyper,
    folds: usize,
    seed: u64,
    directions: BTreeMap<String, Direction>,
) -> Result<PerformanceTable> {
    let jobs: Vec<(usize, Learner)> = (0..datasets.len())
        .flat_map(|ix| Learner::ALL.into_iter().map(move |l| (ix, l)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(ix, l)| evaluate(l, &datasets[ix], hyper, folds, seeds::derive(seed, "folds", ix as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut table = PerformanceTable::new(directions);
    for (&(ix, l), scores) in jobs.iter().zip(results) {
        for (m, v) in scores {
            table.insert(&datasets[ix].name, l.name(), &m, v)?;
        }
    }
    Ok(table)
}

/// The configured performance table, or a fresh baselevel run.
pub fn performance_table(cfg: &PipelineConfig, datasets: &[RatingDataset]) -> Result<PerformanceTable> {
    match &cfg.performance {
        Some(p) => parse_performance_table(&read_text(p)?, &cfg.directions),
        None => run_baselevel(datasets, &cfg.hyper, cfg.folds, cfg.seed, cfg.directions.clone()),
    }
}

/// Hyperparameters that determine an embedding run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedParams {
    pub theta: usize,
    pub sigma: usize,
    pub delta: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub negatives: usize,
    pub settings: EmbedSettings,
}

impl EmbedParams {
    pub fn from_point(p: &GridPoint, settings: EmbedSettings) -> Self {
        Self {
            theta: p.theta,
            sigma: p.sigma,
            delta: p.delta,
            epochs: p.epochs,
            learning_rate: p.learning_rate,
            negatives: p.negatives,
            settings,
        }
    }

    /// The first value of every grid list.
    pub fn first(cfg: &PipelineConfig) -> Self {
        let g = &cfg.grid;
        Self {
            theta: g.theta[0],
            sigma: g.sigma[0],
            delta: g.delta[0],
            epochs: g.epochs[0],
            learning_rate: g.learning_rate[0],
            negatives: g.negatives[0],
            settings: cfg.embed,
        }
    }

    fn key(&self) -> String {
        format!(
            "theta={};sigma={};delta={};epochs={};lr={};negatives={}",
            self.theta, self.sigma, self.delta, self.epochs, self.learning_rate, self.negatives
        )
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingRun {
    pub documents: Vec<SubgraphDocument>,
    pub table: MetafeatureTable,
    pub epoch_loss: Vec<f64>,
    pub walk_seeds: Vec<u64>,
    pub train_seed: u64,
}

/// Samples, relabels and embeds every dataset jointly.
pub fn embed_datasets(datasets: &[RatingDataset], p: &EmbedParams, seed: u64) -> Result<EmbeddingRun> {
    if datasets.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let walk_seeds: Vec<u64> = (0..datasets.len()).map(|ix| seeds::derive(seed, "walk", ix as u64)).collect();
    let graphs = datasets
        .par_iter()
        .zip(&walk_seeds)
        .map(|(d, &s)| {
            let walk = WalkConfig {
                theta: p.theta,
                restart_probability: p.settings.restart_probability,
                seed: s,
            };
            Ok((d.name.clone(), random_walk_sample(&to_bipartite_graph(d), &walk)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let documents = build_documents(&graphs, p.delta, p.settings.weight_buckets)?;
    let vocab = build_vocabulary(&documents, p.settings.smoothing)?;
    let train_seed = seeds::derive(seed, "embed", 0);
    let outcome = train(
        &documents,
        &vocab,
        &TrainConfig {
            sigma: p.sigma,
            epochs: p.epochs,
            learning_rate: p.learning_rate,
            min_learning_rate: p.settings.min_learning_rate,
            negatives: p.negatives,
            seed: train_seed,
            early_stop: p.settings.early_stop,
        },
    )?;
    let names: Vec<String> = datasets.iter().map(|d| d.name.clone()).collect();
    let table = export_metafeatures(&outcome.model, &names)?;
    Ok(EmbeddingRun {
        documents,
        table,
        epoch_loss: outcome.epoch_loss,
        walk_seeds,
        train_seed,
    })
}

pub fn statistical_features(datasets: &[RatingDataset]) -> Result<Vec<MetafeatureVector>> {
    datasets.par_iter().map(systematic_metafeatures).collect()
}

/// Feature vectors of a metafeature table, in row order.
pub fn table_vectors(table: &MetafeatureTable) -> Result<Vec<MetafeatureVector>> {
    let by_id = from_table(table)?;
    Ok(table.rows.iter().map(|(id, _)| by_id[id].clone()).collect())
}

pub fn metatargets(t: &PerformanceTable, datasets: &[String], measures: &[String]) -> Result<Vec<Ranking>> {
    datasets.iter().map(|d| build_metatarget(t, d, measures)).collect()
}

/// LOOCV results of one task.
#[derive(Debug, Clone)]
pub struct TaskOutcome {
    pub task: Task,
    pub measures: Vec<String>,
    pub grid: GridResult,
    pub embedding: Vec<LoocvFold>,
    pub statistical_k: usize,
    pub statistical: Vec<LoocvFold>,
    pub average: Vec<LoocvFold>,
    pub targets: Vec<Ranking>,
}

impl TaskOutcome {
    /// Mean LOOCV tau per strategy.
    pub fn mean_taus(&self) -> [(&'static str, f64); 3] {
        let mean = |f: &[LoocvFold]| f.iter().map(|x| x.tau).sum::<f64>() / f.len() as f64;
        [
            (EMBEDDING, mean(&self.embedding)),
            (STATISTICAL, mean(&self.statistical)),
            (AVERAGE_RANKINGS, mean(&self.average)),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub datasets: Vec<String>,
    pub table: PerformanceTable,
    pub statistical: Vec<MetafeatureVector>,
    /// Embedding metafeatures of every distinct embedding configuration.
    pub embeddings: BTreeMap<String, MetafeatureTable>,
    pub tasks: Vec<TaskOutcome>,
    pub report: ReportInputs,
}

/// Grid search over the embedding strategy, KNN on statistical features
/// with the best `k` of the same grid, and average rankings, for each task.
pub fn run_experiment(
    cfg: &PipelineConfig,
    datasets: &[RatingDataset],
    table: PerformanceTable,
) -> Result<ExperimentOutcome> {
    cfg.grid.validate()?;
    let names: Vec<String> = datasets.iter().map(|d| d.name.clone()).collect();

    let mut params: Vec<EmbedParams> = Vec::new();
    for p in cfg.grid.points() {
        let e = EmbedParams::from_point(&p, cfg.embed);
        if !params.iter().any(|q| q.key() == e.key()) {
            params.push(e);
        }
    }
    let runs = params
        .par_iter()
        .map(|p| embed_datasets(datasets, p, cfg.seed).map(|r| (p.key(), r.table)))
        .collect::<Result<Vec<_>>>()?;
    let embeddings: BTreeMap<String, MetafeatureTable> = runs.into_iter().collect();
    let embedding_vectors: BTreeMap<&String, Vec<MetafeatureVector>> = embeddings
        .iter()
        .map(|(k, t)| Ok((k, table_vectors(t)?)))
        .collect::<Result<_>>()?;
    let statistical = statistical_features(datasets)?;

    let mut tasks = Vec::new();
    let mut report = ReportInputs {
        alpha: Some(cfg.alpha),
        ..Default::default()
    };
    for (task, measures) in &cfg.tasks {
        table.check_complete(measures)?;
        let targets = metatargets(&table, &names, measures)?;
        let db_for = |features: &[MetafeatureVector]| assemble(features.to_vec(), targets.clone(), names.clone());

        let grid = grid_search(&cfg.grid, |p| {
            let key = EmbedParams::from_point(p, cfg.embed).key();
            db_for(&embedding_vectors[&key])
        })?;
        let best_key = EmbedParams::from_point(&grid.best, cfg.embed).key();
        let embedding_db = db_for(&embedding_vectors[&best_key])?;
        let embedding = loocv_predictions(&embedding_db, &Knn { k: grid.best.k })?;

        let stat_db = db_for(&statistical)?;
        let stat_runs = cfg
            .grid
            .k
            .par_iter()
            .map(|&k| loocv_predictions(&stat_db, &Knn { k }).map(|f| (k, f)))
            .collect::<Result<Vec<_>>>()?;
        let stat_scores: Vec<(GridPoint, f64)> = stat_runs
            .iter()
            .map(|(k, f)| {
                let taus: Vec<(String, f64)> = f.iter().map(|x| (x.id.clone(), x.tau)).collect();
                (GridPoint { k: *k, ..grid.best }, mean_tau(&taus))
            })
            .collect();
        let statistical_k = select_best(stat_scores)?.best.k;
        let stat_folds = stat_runs
            .into_iter()
            .find(|(k, _)| *k == statistical_k)
            .map(|(_, f)| f)
            .expect("selected k was evaluated");
        let average = loocv_predictions(&stat_db, &AverageRankings)?;

        let outcome = TaskOutcome {
            task: *task,
            measures: measures.clone(),
            grid,
            embedding,
            statistical_k,
            statistical: stat_folds,
            average,
            targets,
        };
        add_to_report(&mut report, &outcome, &table, &names, &embedding_db, &stat_db)?;
        tasks.push(outcome);
    }
    Ok(ExperimentOutcome {
        datasets: names,
        table,
        statistical,
        embeddings,
        tasks,
        report,
    })
}

fn add_to_report(
    report: &mut ReportInputs,
    o: &TaskOutcome,
    table: &PerformanceTable,
    names: &[String],
    embedding_db: &MetaDatabase,
    stat_db: &MetaDatabase,
) -> Result<()> {
    let task = o.task.name().to_string();
    report.grid.insert(task.clone(), o.grid.scores.clone());

    let strategies = [
        (EMBEDDING, &o.embedding),
        (STATISTICAL, &o.statistical),
        (AVERAGE_RANKINGS, &o.average),
    ];
    report.scores.insert(
        task.clone(),
        ScoreMatrix {
            datasets: names.to_vec(),
            strategies: strategies.iter().map(|(s, _)| s.to_string()).collect(),
            values: (0..names.len())
                .map(|ix| strategies.iter().map(|(_, f)| f[ix].tau).collect())
                .collect(),
        },
    );

    let mut curves = BTreeMap::new();
    for (s, folds) in strategies {
        let predicted: BTreeMap<String, Ranking> = folds.iter().map(|f| (f.id.clone(), f.predicted.clone())).collect();
        curves.insert(s.to_string(), baselevel_impact(&predicted, table, &o.measures)?);
    }
    let truth: BTreeMap<String, Ranking> = names.iter().cloned().zip(o.targets.iter().cloned()).collect();
    curves.insert("metatarget".to_string(), baselevel_impact(&truth, table, &o.measures)?);
    report.impact.insert(task.clone(), curves);

    for (family, db) in [(EMBEDDING, embedding_db), (STATISTICAL, stat_db)] {
        let rows = db
            .rows
            .iter()
            .map(|r| (r.id.clone(), r.features.clone(), r.target.order()[0].clone()))
            .collect();
        report.pca.insert(format!("{task}-{family}"), rows);
    }
    Ok(())
}

/// Files written by a command, with the manifest describing them.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub config_hash: String,
    /// Extra `key = value` lines: seeds, hyperparameters, selections.
    pub entries: Vec<(String, String)>,
    pub config: String,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(cfg: &PipelineConfig) -> Self {
        Self {
            config_hash: cfg.hash(),
            config: cfg.canonical(),
            ..Default::default()
        }
    }

    pub fn entry(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Writes `rel` under `dir` and records it.
    pub fn write(&mut self, dir: &Path, rel: &str, text: &str) -> Result<()> {
        write_text(&dir.join(rel), text)?;
        self.files.push(rel.to_string());
        Ok(())
    }

    /// Renders the manifest; files are listed with their SHA-256.
    pub fn render(&self, dir: &Path) -> Result<String> {
        let mut out = String::new();
        let _ = writeln!(out, "tool = {TOOL_VERSION}");
        let _ = writeln!(out, "config_hash = {}", self.config_hash);
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out.push_str("\n[config]\n");
        out.push_str(&self.config);
        out.push_str("\n[files]\n");
        let mut files = self.files.clone();
        files.sort();
        for rel in files {
            let path = dir.join(&rel);
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
            let _ = writeln!(out, "{digest}  {rel}");
        }
        Ok(out)
    }

    /// Writes `manifest.txt` in `dir`.
    pub fn finish(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.txt");
        write_text(&path, &self.render(dir)?)?;
        Ok(path)
    }
}

fn fmt_seeds(seeds: &[u64]) -> String {
    seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

/// Records the embedding hyperparameters and seeds.
pub fn describe_embedding(m: &mut Manifest, p: &EmbedParams, run: &EmbeddingRun) {
    m.entry("theta", p.theta);
    m.entry("sigma", p.sigma);
    m.entry("delta", p.delta);
    m.entry("epochs", p.epochs);
    m.entry("learning_rate", p.learning_rate);
    m.entry("negatives", p.negatives);
    m.entry("restart_prob", p.settings.restart_probability);
    m.entry("min_learning_rate", p.settings.min_learning_rate);
    m.entry("weight_buckets", p.settings.weight_buckets);
    m.entry("smoothing", p.settings.smoothing);
    m.entry("walk_seeds", fmt_seeds(&run.walk_seeds));
    m.entry("train_seed", run.train_seed);
    m.entry("epochs_run", run.epoch_loss.len());
    if let Some(l) = run.epoch_loss.last() {
        m.entry("final_loss", format!("{l:.6}"));
    }
}

/// Runs the whole experiment and writes every artifact under `cfg.output`:
///
/// ```text
/// performance.csv                     baselevel scores
/// metafeatures/statistical.csv
/// metafeatures/embedding-<task>.csv   embeddings of the task's best configuration
/// metabase/<task>-targets.csv
/// selection.csv                       best configuration and k per task
/// sweeps/ summary/ cd/ impact/ pca/   report files
/// manifest.txt
/// ```
pub fn experiment(cfg: &PipelineConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let datasets = load_datasets(cfg)?;
    let table = performance_table(cfg, &datasets)?;
    let outcome = run_experiment(cfg, &datasets, table)?;
    let dir = &cfg.output;
    let mut m = Manifest::new(cfg);
    m.entry("datasets", outcome.datasets.len());
    m.entry("baselevel_seeds", fmt_seeds(&(0..datasets.len()).map(|ix| seeds::derive(cfg.seed, "folds", ix as u64)).collect::<Vec<_>>()));
    m.entry("walk_seeds", fmt_seeds(&(0..datasets.len()).map(|ix| seeds::derive(cfg.seed, "walk", ix as u64)).collect::<Vec<_>>()));
    m.entry("train_seed", seeds::derive(cfg.seed, "embed", 0));

    m.write(dir, "performance.csv", &outcome.table.to_csv())?;
    let stat_rows: Vec<(String, MetafeatureVector)> =
        outcome.datasets.iter().cloned().zip(outcome.statistical.iter().cloned()).collect();
    m.write(dir, "metafeatures/statistical.csv", &to_table(&stat_rows)?.to_csv())?;

    let mut selection = String::from("task,strategy,theta,sigma,delta,epochs,learning_rate,negatives,k,mean_tau\n");
    for o in &outcome.tasks {
        let task = o.task.name();
        let b = &o.grid.best;
        let key = EmbedParams::from_point(b, cfg.embed).key();
        m.write(dir, &format!("metafeatures/embedding-{task}.csv"), &outcome.embeddings[&key].to_csv())?;
        let db = assemble(outcome.statistical.clone(), o.targets.clone(), outcome.datasets.clone())?;
        m.write(dir, &format!("metabase/{task}-targets.csv"), &db.targets_csv())?;
        let means = o.mean_taus();
        let _ = writeln!(
            selection,
            "{task},{EMBEDDING},{},{},{},{},{},{},{},{:.6}",
            b.theta, b.sigma, b.delta, b.epochs, b.learning_rate, b.negatives, b.k, means[0].1
        );
        let _ = writeln!(selection, "{task},{STATISTICAL},,,,,,,{},{:.6}", o.statistical_k, means[1].1);
        let _ = writeln!(selection, "{task},{AVERAGE_RANKINGS},,,,,,,,{:.6}", means[2].1);
    }
    m.write(dir, "selection.csv", &selection)?;
    for rel in emit_report(&outcome.report, dir)? {
        m.files.push(rel);
    }
    m.finish(dir)?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_rows_follow_datasets() {
        let datasets = synth::corpus(1, 3);
        let p = EmbedParams {
            theta: 20,
            sigma: 4,
            delta: 2,
            epochs: 3,
            learning_rate: 0.025,
            negatives: 2,
            settings: EmbedSettings::default(),
        };
        let run = embed_datasets(&datasets, &p, 9).unwrap();
        assert_eq!(run.table.rows.len(), 4);
        assert_eq!(run.table.columns.len(), 4);
        for (row, d) in run.table.rows.iter().zip(&datasets) {
            assert_eq!(row.0, d.name);
        }
        assert_eq!(run.table, embed_datasets(&datasets, &p, 9).unwrap().table);
    }

    #[test]
    fn duplicate_dataset_names_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        std::fs::write(&a, "u,i,3\n").unwrap();
        let cfg = PipelineConfig {
            ratings: vec![a.clone(), a],
            ..Default::default()
        };
        assert!(matches!(load_datasets(&cfg), Err(Error::Config(_))));
    }
}
