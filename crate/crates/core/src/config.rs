//! Pipeline configuration: a flat `key = value` text file.
//!
//! Blank lines and lines starting with `#` are ignored. List values are
//! comma-separated. Recognized keys, with defaults:
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `ratings` | | rating files; the dataset name is the file stem |
//! | `synthetic` | `0` | datasets per synthetic generator, added after `ratings` |
//! | `performance` | | performance table; when absent the baselevel is run |
//! | `directions` | `AUC:higher,NDCG:higher,NMAE:lower,RMSE:lower` | measure directions |
//! | `tasks` | `item-recommendation,rating-prediction` | tasks to evaluate |
//! | `measures.item-recommendation` | `AUC,NDCG` | measures of that task |
//! | `measures.rating-prediction` | `NMAE,RMSE` | measures of that task |
//! | `scale` | `1:5` | rating scale `min:max` |
//! | `theta` | `100` | walk sample sizes (list) |
//! | `sigma` | `30` | embedding dimensions (list) |
//! | `delta` | `6` | WL depths (list) |
//! | `epochs` | `100` | training epochs (list) |
//! | `learning_rate` | `0.025` | initial learning rates (list) |
//! | `negatives` | `5` | negative samples (list) |
//! | `k` | `1,3,5` | KNN neighbours (list) |
//! | `restart_prob` | `0.15` | walk restart probability |
//! | `min_learning_rate` | `0.0001` | final learning rate |
//! | `weight_buckets` | `5` | rating buckets in WL labels |
//! | `smoothing` | `0.75` | noise distribution exponent |
//! | `early_stop` | `false` | stop training when the loss plateaus |
//! | `folds` | `10` | baselevel cross-validation folds |
//! | `user_reg`, `item_reg`, `baseline_sweeps` | `15`, `10`, `10` | baseline learner |
//! | `factors`, `mf_epochs`, `mf_learning_rate`, `mf_regularization` | `16`, `30`, `0.01`, `0.02` | matrix factorization |
//! | `alpha` | `0.05` | Nemenyi significance level |
//! | `seed` | `0` | global seed |
//! | `output` | `out` | output directory |
//!
//! Single-shot commands (`embed`, `train`, `select`) use the first value of
//! each list.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::baselevel::Hyper;
use crate::error::{Error, Result};
use crate::ingest::{default_directions, Direction, RatingScale};
use crate::metalearn::GridSpec;
use crate::report::Alpha;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Task {
    ItemRecommendation,
    RatingPrediction,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::ItemRecommendation, Task::RatingPrediction];

    pub fn name(self) -> &'static str {
        match self {
            Task::ItemRecommendation => "item-recommendation",
            Task::RatingPrediction => "rating-prediction",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn default_measures(self) -> Vec<String> {
        let m: &[&str] = match self {
            Task::ItemRecommendation => &["AUC", "NDCG"],
            Task::RatingPrediction => &["NMAE", "RMSE"],
        };
        m.iter().map(|s| s.to_string()).collect()
    }
}

/// Embedding hyperparameters that are not searched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedSettings {
    pub restart_probability: f64,
    pub min_learning_rate: f64,
    pub weight_buckets: usize,
    pub smoothing: f64,
    pub early_stop: bool,
}

impl Default for EmbedSettings {
    fn default() -> Self {
        Self {
            restart_probability: 0.15,
            min_learning_rate: 0.0001,
            weight_buckets: 5,
            smoothing: 0.75,
            early_stop: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub ratings: Vec<PathBuf>,
    pub synthetic: usize,
    pub performance: Option<PathBuf>,
    pub directions: BTreeMap<String, Direction>,
    pub tasks: Vec<(Task, Vec<String>)>,
    pub scale: RatingScale,
    pub grid: GridSpec,
    pub embed: EmbedSettings,
    pub folds: usize,
    pub hyper: Hyper,
    pub alpha: Alpha,
    pub seed: u64,
    pub output: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            ratings: Vec::new(),
            synthetic: 0,
            performance: None,
            directions: default_directions(),
            tasks: Task::ALL.into_iter().map(|t| (t, t.default_measures())).collect(),
            scale: RatingScale::default(),
            grid: GridSpec {
                theta: vec![100],
                sigma: vec![30],
                delta: vec![6],
                epochs: vec![100],
                learning_rate: vec![0.025],
                negatives: vec![5],
                k: vec![1, 3, 5],
            },
            embed: EmbedSettings::default(),
            folds: 10,
            hyper: Hyper::default(),
            alpha: Alpha::P05,
            seed: 0,
            output: PathBuf::from("out"),
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value {value:?} for key {key:?}"))
}

fn scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(key, value))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| bad(key, value)))
        .collect()
}

fn strings(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Splits `key = value` lines into ordered pairs; `#` starts a comment line.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (ix, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", ix + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl PipelineConfig {
    /// Parses config text. Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_pairs(text)? {
            cfg.set(&k, &v, base)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Applies one key; later assignments override earlier ones.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = |p: &str| base.join(p);
        match key {
            "ratings" => self.ratings = strings(value).iter().map(|p| path(p)).collect(),
            "synthetic" => self.synthetic = scalar(key, value)?,
            "performance" => self.performance = (!value.is_empty()).then(|| path(value)),
            "directions" => {
                self.directions.clear();
                for entry in strings(value) {
                    let (m, d) = entry.split_once(':').ok_or_else(|| bad(key, value))?;
                    let d = match d.trim() {
                        "higher" => Direction::HigherBetter,
                        "lower" => Direction::LowerBetter,
                        _ => return Err(bad(key, value)),
                    };
                    self.directions.insert(m.trim().to_string(), d);
                }
            }
            "tasks" => {
                let mut tasks = Vec::new();
                for name in strings(value) {
                    let t = Task::parse(&name).ok_or_else(|| bad(key, value))?;
                    let measures = self
                        .tasks
                        .iter()
                        .find(|(x, _)| *x == t)
                        .map(|(_, m)| m.clone())
                        .unwrap_or_else(|| t.default_measures());
                    tasks.push((t, measures));
                }
                self.tasks = tasks;
            }
            "scale" => {
                let (lo, hi) = value.split_once(':').ok_or_else(|| bad(key, value))?;
                self.scale = RatingScale::new(scalar(key, lo)?, scalar(key, hi)?).map_err(|_| bad(key, value))?;
            }
            "theta" => self.grid.theta = list(key, value)?,
            "sigma" => self.grid.sigma = list(key, value)?,
            "delta" => self.grid.delta = list(key, value)?,
            "epochs" => self.grid.epochs = list(key, value)?,
            "learning_rate" => self.grid.learning_rate = list(key, value)?,
            "negatives" => self.grid.negatives = list(key, value)?,
            "k" => self.grid.k = list(key, value)?,
            "restart_prob" => self.embed.restart_probability = scalar(key, value)?,
            "min_learning_rate" => self.embed.min_learning_rate = scalar(key, value)?,
            "weight_buckets" => self.embed.weight_buckets = scalar(key, value)?,
            "smoothing" => self.embed.smoothing = scalar(key, value)?,
            "early_stop" => self.embed.early_stop = scalar(key, value)?,
            "folds" => self.folds = scalar(key, value)?,
            "user_reg" => self.hyper.user_reg = scalar(key, value)?,
            "item_reg" => self.hyper.item_reg = scalar(key, value)?,
            "baseline_sweeps" => self.hyper.baseline_sweeps = scalar(key, value)?,
            "factors" => self.hyper.factors = scalar(key, value)?,
            "mf_epochs" => self.hyper.epochs = scalar(key, value)?,
            "mf_learning_rate" => self.hyper.learning_rate = scalar(key, value)?,
            "mf_regularization" => self.hyper.regularization = scalar(key, value)?,
            "alpha" => self.alpha = Alpha::parse(value).ok_or_else(|| bad(key, value))?,
            "seed" => self.seed = scalar(key, value)?,
            "output" => self.output = path(value),
            _ => {
                if let Some(task) = key.strip_prefix("measures.") {
                    let t = Task::parse(task).ok_or_else(|| Error::Config(format!("unknown task {task:?}")))?;
                    let measures = strings(value);
                    match self.tasks.iter_mut().find(|(x, _)| *x == t) {
                        Some(entry) => entry.1 = measures,
                        None => self.tasks.push((t, measures)),
                    }
                } else {
                    return Err(Error::Config(format!("unknown key {key:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for p in self.ratings.iter().chain(&self.performance) {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        if self.ratings.is_empty() && self.synthetic == 0 {
            return Err(Error::Config("no datasets: set ratings or synthetic".into()));
        }
        if self.tasks.is_empty() {
            return Err(Error::Config("no tasks".into()));
        }
        for (t, measures) in &self.tasks {
            if measures.is_empty() {
                return Err(Error::Config(format!("task {} has no measures", t.name())));
            }
            if let Some(m) = measures.iter().find(|m| !self.directions.contains_key(*m)) {
                return Err(Error::Config(format!("measure {m:?} has no declared direction")));
            }
        }
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        self.grid.validate()?;
        if self.grid.k.contains(&0) || self.grid.sigma.contains(&0) || self.grid.theta.contains(&0) {
            return Err(Error::Config("theta, sigma and k must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.embed.restart_probability) {
            return Err(Error::Config("restart_prob must lie in [0, 1)".into()));
        }
        if self.embed.weight_buckets == 0 {
            return Err(Error::Config("weight_buckets must be positive".into()));
        }
        Ok(())
    }

    /// Canonical `key = value` rendering of every setting that affects results
    /// (all but `output`), sorted by key.
    pub fn canonical(&self) -> String {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
        }
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        let paths = |v: &[PathBuf]| v.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",");
        kv.insert("ratings".into(), paths(&self.ratings));
        kv.insert("synthetic".into(), self.synthetic.to_string());
        kv.insert(
            "performance".into(),
            self.performance.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        );
        kv.insert(
            "directions".into(),
            self.directions
                .iter()
                .map(|(m, d)| format!("{m}:{}", if *d == Direction::HigherBetter { "higher" } else { "lower" }))
                .collect::<Vec<_>>()
                .join(","),
        );
        kv.insert("tasks".into(), self.tasks.iter().map(|(t, _)| t.name()).collect::<Vec<_>>().join(","));
        for (t, m) in &self.tasks {
            kv.insert(format!("measures.{}", t.name()), m.join(","));
        }
        kv.insert("scale".into(), format!("{}:{}", self.scale.min, self.scale.max));
        kv.insert("theta".into(), join(&self.grid.theta));
        kv.insert("sigma".into(), join(&self.grid.sigma));
        kv.insert("delta".into(), join(&self.grid.delta));
        kv.insert("epochs".into(), join(&self.grid.epochs));
        kv.insert("learning_rate".into(), join(&self.grid.learning_rate));
        kv.insert("negatives".into(), join(&self.grid.negatives));
        kv.insert("k".into(), join(&self.grid.k));
        kv.insert("restart_prob".into(), self.embed.restart_probability.to_string());
        kv.insert("min_learning_rate".into(), self.embed.min_learning_rate.to_string());
        kv.insert("weight_buckets".into(), self.embed.weight_buckets.to_string());
        kv.insert("smoothing".into(), self.embed.smoothing.to_string());
        kv.insert("early_stop".into(), self.embed.early_stop.to_string());
        kv.insert("folds".into(), self.folds.to_string());
        kv.insert("user_reg".into(), self.hyper.user_reg.to_string());
        kv.insert("item_reg".into(), self.hyper.item_reg.to_string());
        kv.insert("baseline_sweeps".into(), self.hyper.baseline_sweeps.to_string());
        kv.insert("factors".into(), self.hyper.factors.to_string());
        kv.insert("mf_epochs".into(), self.hyper.epochs.to_string());
        kv.insert("mf_learning_rate".into(), self.hyper.learning_rate.to_string());
        kv.insert("mf_regularization".into(), self.hyper.regularization.to_string());
        kv.insert("alpha".into(), if self.alpha == Alpha::P05 { "0.05" } else { "0.10" }.into());
        kv.insert("seed".into(), self.seed.to_string());
        kv.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
