use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cfmeta::config::PipelineConfig;
use cfmeta::embedding::MetafeatureTable;
use cfmeta::ingest::{parse_performance_table, PerformanceTable};
use cfmeta::metalearn::{assemble, average_rankings, knn_label_rank, GridPoint, MetaDatabase, Ranking};
use cfmeta::pipeline::{self, EmbedParams, Manifest};
use cfmeta::report::{emit_report, Alpha, ReportInputs, ScoreMatrix};
use cfmeta::statfeatures::{from_table, systematic_metafeatures, to_table, MetafeatureVector};
use cfmeta::{synth, Error, Result};

/// Algorithm selection for collaborative filtering from graph-embedding and
/// rating-statistics metafeatures.
#[derive(Parser)]
#[command(name = "cfmeta", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Config file of `key = value` lines (see the `config` module docs).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Walk sample sizes, comma-separated.
    #[arg(long)]
    theta: Option<String>,
    /// Walk restart probability.
    #[arg(long = "restart-prob")]
    restart_prob: Option<f64>,
    /// Global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        let here = Path::new(".");
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v.trim(), here)?;
        }
        if let Some(t) = &self.theta {
            cfg.set("theta", t, here)?;
        }
        if let Some(p) = self.restart_prob {
            cfg.embed.restart_probability = p;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.output {
            cfg.output = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Embedding,
    Statistical,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// KNN label ranking on the query's features.
    Knn,
    /// Average rankings of the metadatabase; the query is ignored.
    Ar,
}

#[derive(Subcommand)]
enum Command {
    /// Parses rating files and an optional performance table and prints a summary.
    IngestCheck {
        /// Rating files (user,item,rating).
        ratings: Vec<PathBuf>,
        /// Performance table (dataset,algorithm,measure,value).
        #[arg(long)]
        performance: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Writes synthetic rating files, one per dataset.
    Generate {
        /// Datasets per generator.
        #[arg(long, default_value_t = 10)]
        per_generator: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Cross-validates the baselevel learners; writes performance.csv.
    Baselevel(ConfigArgs),
    /// Embeds all datasets with the first grid value of each hyperparameter; writes embedding.csv.
    Embed {
        #[command(flatten)]
        config: ConfigArgs,
        /// Also writes the WL documents, one line per dataset.
        #[arg(long)]
        documents: bool,
    },
    /// Computes statistical metafeatures; writes statistical.csv.
    Statfeatures(ConfigArgs),
    /// Builds the metadatabase of each task; writes features.csv and <task>-targets.csv.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value = "embedding")]
        features: Family,
    },
    /// Predicts the algorithm ranking of a query dataset from a metadatabase.
    Select {
        /// Metadatabase features CSV.
        #[arg(long)]
        features: PathBuf,
        /// Metadatabase targets CSV.
        #[arg(long)]
        targets: PathBuf,
        /// CSV holding the query's feature row (e.g. an embedding CSV that includes it).
        #[arg(long, conflicts_with = "query_ratings")]
        query_features: Option<PathBuf>,
        /// Query row id in --query-features; defaults to the first row.
        #[arg(long)]
        query_id: Option<String>,
        /// Rating file of the query, for statistical metafeatures.
        #[arg(long)]
        query_ratings: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "knn")]
        mode: Mode,
        #[arg(short, default_value_t = 1)]
        k: usize,
        /// The query dataset is left out of the metadatabase.
        #[arg(long)]
        exclude_query: bool,
    },
    /// Runs the grid search and LOOCV comparison and writes the full report.
    Experiment(ConfigArgs),
    /// Renders report files from saved score files.
    Report {
        /// Grid scores (sweeps/grid.csv format).
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Per-dataset taus (summary/per_dataset.csv format).
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long, default_value = "0.05")]
        alpha: String,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::IngestCheck {
            ratings,
            performance,
            config,
        } => ingest_check(&ratings, performance.as_deref(), &config),
        Command::Generate {
            per_generator,
            seed,
            output,
        } => {
            for d in synth::corpus(per_generator, seed) {
                pipeline::write_text(&output.join(format!("{}.csv", d.name)), &d.to_csv())?;
                println!("{} {} users {} items {} ratings", d.name, d.num_users(), d.num_items(), d.len());
            }
            Ok(())
        }
        Command::Baselevel(args) => {
            let cfg = args.load()?;
            let datasets = pipeline::load_datasets(&cfg)?;
            let table = pipeline::run_baselevel(&datasets, &cfg.hyper, cfg.folds, cfg.seed, cfg.directions.clone())?;
            let mut m = Manifest::new(&cfg);
            m.entry("folds", cfg.folds);
            m.write(&cfg.output, "performance.csv", &table.to_csv())?;
            done(m.finish(&cfg.output)?)
        }
        Command::Embed { config, documents } => {
            let cfg = config.load()?;
            let datasets = pipeline::load_datasets(&cfg)?;
            let p = EmbedParams::first(&cfg);
            let run = pipeline::embed_datasets(&datasets, &p, cfg.seed)?;
            let mut m = Manifest::new(&cfg);
            pipeline::describe_embedding(&mut m, &p, &run);
            m.write(&cfg.output, "embedding.csv", &run.table.to_csv())?;
            if documents {
                let text: String = run.documents.iter().map(|d| d.to_line() + "\n").collect();
                m.write(&cfg.output, "documents.txt", &text)?;
            }
            done(m.finish(&cfg.output)?)
        }
        Command::Statfeatures(args) => {
            let cfg = args.load()?;
            let datasets = pipeline::load_datasets(&cfg)?;
            let features = pipeline::statistical_features(&datasets)?;
            let rows: Vec<(String, MetafeatureVector)> = datasets.iter().map(|d| d.name.clone()).zip(features).collect();
            let mut m = Manifest::new(&cfg);
            m.write(&cfg.output, "statistical.csv", &to_table(&rows)?.to_csv())?;
            done(m.finish(&cfg.output)?)
        }
        Command::Train { config, features } => train_cmd(&config.load()?, features),
        Command::Select {
            features,
            targets,
            query_features,
            query_id,
            query_ratings,
            mode,
            k,
            exclude_query,
        } => {
            let db = MetaDatabase::from_csv(&pipeline::read_text(&features)?, &pipeline::read_text(&targets)?)?;
            let (id, query) = match (query_features, query_ratings) {
                (Some(path), None) => {
                    let table = MetafeatureTable::from_csv(&pipeline::read_text(&path)?)?;
                    let id = query_id.or_else(|| table.rows.first().map(|r| r.0.clone())).ok_or(Error::EmptyMetabase)?;
                    let q = from_table(&table)?
                        .remove(&id)
                        .ok_or_else(|| Error::Config(format!("no row {id:?} in {}", path.display())))?;
                    (id, Some(q))
                }
                (None, Some(path)) => {
                    let d = pipeline::load_ratings(&path, Default::default())?;
                    (d.name.clone(), Some(systematic_metafeatures(&d)?))
                }
                _ => (query_id.unwrap_or_default(), None),
            };
            let db = if exclude_query {
                MetaDatabase {
                    rows: db.rows.into_iter().filter(|r| r.id != id).collect(),
                }
            } else {
                db
            };
            let ranking = match mode {
                Mode::Ar => average_rankings(&db)?,
                Mode::Knn => {
                    let q = query.ok_or_else(|| Error::Config("knn mode needs --query-features or --query-ratings".into()))?;
                    knn_label_rank(&db, &q, k)?
                }
            };
            print!("{}", render_ranking(&ranking));
            Ok(())
        }
        Command::Experiment(args) => {
            let cfg = args.load()?;
            let outcome = pipeline::experiment(&cfg)?;
            for o in &outcome.tasks {
                for (s, t) in o.mean_taus() {
                    println!("{} {s} mean_tau={t:.4}", o.task.name());
                }
            }
            done(cfg.output.join("manifest.txt"))
        }
        Command::Report {
            grid,
            scores,
            alpha,
            output,
        } => {
            let mut inputs = ReportInputs {
                alpha: Some(Alpha::parse(&alpha).ok_or_else(|| Error::Config(format!("unsupported alpha {alpha}")))?),
                ..Default::default()
            };
            if let Some(p) = grid {
                inputs.grid = parse_grid(&pipeline::read_text(&p)?)?;
            }
            if let Some(p) = scores {
                inputs.scores = parse_scores(&pipeline::read_text(&p)?)?;
            }
            for rel in emit_report(&inputs, &output)? {
                println!("{}", output.join(rel).display());
            }
            Ok(())
        }
    }
}

fn done(manifest: PathBuf) -> Result<()> {
    println!("wrote {}", manifest.display());
    Ok(())
}

fn ingest_check(ratings: &[PathBuf], performance: Option<&Path>, args: &ConfigArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(_) => args.load()?,
        None => PipelineConfig::default(),
    };
    for p in ratings {
        let d = pipeline::load_ratings(p, cfg.scale)?;
        println!("{}: {} users, {} items, {} ratings", d.name, d.num_users(), d.num_items(), d.len());
    }
    if let Some(p) = performance {
        let t = parse_performance_table(&pipeline::read_text(p)?, &cfg.directions)?;
        for (task, measures) in &cfg.tasks {
            t.check_complete(measures)?;
            println!("{}: complete over {} datasets", task.name(), t.datasets().len());
        }
    }
    Ok(())
}

fn train_cmd(cfg: &PipelineConfig, family: Family) -> Result<()> {
    let datasets = pipeline::load_datasets(cfg)?;
    let table: PerformanceTable = pipeline::performance_table(cfg, &datasets)?;
    let names: Vec<String> = datasets.iter().map(|d| d.name.clone()).collect();
    let mut m = Manifest::new(cfg);
    let features = match family {
        Family::Statistical => pipeline::statistical_features(&datasets)?,
        Family::Embedding => {
            let p = EmbedParams::first(cfg);
            let run = pipeline::embed_datasets(&datasets, &p, cfg.seed)?;
            pipeline::describe_embedding(&mut m, &p, &run);
            pipeline::table_vectors(&run.table)?
        }
    };
    m.write(&cfg.output, "performance.csv", &table.to_csv())?;
    let mut wrote_features = false;
    for (task, measures) in &cfg.tasks {
        table.check_complete(measures)?;
        let targets = pipeline::metatargets(&table, &names, measures)?;
        let db = assemble(features.clone(), targets, names.clone())?;
        if !wrote_features {
            m.write(&cfg.output, "features.csv", &db.features_csv())?;
            wrote_features = true;
        }
        m.write(&cfg.output, &format!("{}-targets.csv", task.name()), &db.targets_csv())?;
    }
    done(m.finish(&cfg.output)?)
}

fn render_ranking(r: &Ranking) -> String {
    let mut out = format!("order: {}\n", r.order().join(" > "));
    for (a, rank) in r.algorithms.iter().zip(&r.ranks) {
        let _ = writeln!(out, "{a}: {rank}");
    }
    out
}

fn csv_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(ix, l)| (ix + 1, l.split(',').map(str::trim).collect()))
}

fn field<T: std::str::FromStr>(fields: &[&str], ix: usize, line: usize) -> Result<T> {
    fields
        .get(ix)
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| Error::MalformedLine {
            line,
            reason: format!("bad field {}", ix + 1),
        })
}

fn parse_grid(text: &str) -> Result<BTreeMap<String, Vec<(GridPoint, f64)>>> {
    let mut out: BTreeMap<String, Vec<(GridPoint, f64)>> = BTreeMap::new();
    for (line, f) in csv_rows(text) {
        let p = GridPoint {
            theta: field(&f, 1, line)?,
            sigma: field(&f, 2, line)?,
            delta: field(&f, 3, line)?,
            epochs: field(&f, 4, line)?,
            learning_rate: field(&f, 5, line)?,
            negatives: field(&f, 6, line)?,
            k: field(&f, 7, line)?,
        };
        out.entry(f[0].to_string()).or_default().push((p, field(&f, 8, line)?));
    }
    Ok(out)
}

fn parse_scores(text: &str) -> Result<BTreeMap<String, ScoreMatrix>> {
    let mut cells: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>> = BTreeMap::new();
    let mut strategy_order: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (line, f) in csv_rows(text) {
        let (task, dataset, strategy) = (f[0].to_string(), field::<String>(&f, 1, line)?, field::<String>(&f, 2, line)?);
        let order = strategy_order.entry(task.clone()).or_default();
        if !order.contains(&strategy) {
            order.push(strategy.clone());
        }
        cells
            .entry(task)
            .or_default()
            .entry(dataset)
            .or_default()
            .insert(strategy, field(&f, 3, line)?);
    }
    let mut out = BTreeMap::new();
    for (task, rows) in cells {
        let strategies = strategy_order.remove(&task).unwrap_or_default();
        let mut values = Vec::new();
        for (d, row) in &rows {
            values.push(
                strategies
                    .iter()
                    .map(|s| row.get(s).copied().ok_or_else(|| Error::LengthMismatch(format!("{d} lacks {s}"))))
                    .collect::<Result<Vec<f64>>>()?,
            );
        }
        let m = ScoreMatrix {
            datasets: rows.keys().cloned().collect(),
            strategies,
            values,
        };
        m.validate()?;
        out.insert(task, m);
    }
    Ok(out)
}
