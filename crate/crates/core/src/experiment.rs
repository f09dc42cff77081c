//! Batch experiments: TOML configs, validation, seeded runs that write CSV
//! and JSON artifacts, and comparison of two finished runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coordinator::{
    run_multitask, trials_to_threshold, CoordinatorParams, MetricsBundle, MetricsParams, MultitaskConfig,
    RelatednessMatrix,
};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::features::FeatureParams;
use crate::multiclass::{self, mean_sd, CvReport, MulticlassConfig, MulticlassParams, Schema};
use crate::problems::ProblemSpec;
use crate::xcs::XcsParams;

pub const SCHEMA_VERSION: u32 = 1;
/// Overrides the directory that relative `output_dir` values resolve against.
pub const OUTPUT_ROOT_VAR: &str = "CFXCS_OUTPUT_ROOT";
pub const MIN_POPULATION: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Single,
    Multitask,
    Multiclass,
}

/// Either an explicit list or a count `n` meaning seeds `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    pub fn list(&self) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (1..=*n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemsSection {
    /// Problem names such as `mux:6` or `hmux:9`.
    pub tasks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub path: PathBuf,
    #[serde(default)]
    pub schema: Option<PathBuf>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_train_rows")]
    pub train_rows: u64,
}

fn default_folds() -> usize {
    MulticlassParams::default().folds
}

fn default_train_rows() -> u64 {
    MulticlassParams::default().train_rows
}

fn default_output() -> PathBuf {
    PathBuf::from("runs/latest")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub name: Option<String>,
    pub seeds: Seeds,
    /// Explore trials per task (Boolean modes).
    #[serde(default)]
    pub iterations: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// How seeds (and folds) are scheduled.
    #[serde(default)]
    pub jobs: Execution,
    #[serde(default)]
    pub problems: ProblemsSection,
    #[serde(default)]
    pub dataset: Option<DatasetSection>,
    #[serde(default)]
    pub xcs: XcsParams,
    #[serde(default)]
    pub features: FeatureParams,
    #[serde(default)]
    pub coordinator: CoordinatorParams,
    #[serde(default)]
    pub metrics: MetricsParams,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a TOML config, or the config recorded in a run's
    /// `manifest.json`. Relative dataset paths resolve against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config = if path.extension().is_some_and(|e| e == "json") {
            let manifest: Manifest = serde_json::from_str(&text)?;
            manifest.config
        } else {
            Self::from_toml(&text)?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(d) = &mut config.dataset {
            if d.path.is_relative() {
                d.path = base.join(&d.path);
            }
            if let Some(s) = &mut d.schema {
                if s.is_relative() {
                    *s = base.join(&*s);
                }
            }
        }
        Ok(config)
    }

    pub fn problems(&self) -> Result<Vec<ProblemSpec>> {
        self.problems.tasks.iter().map(|t| t.parse()).collect()
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.seeds.list().is_empty() {
            errors.push("seed list is empty".to_string());
        }
        if self.xcs.population_size < MIN_POPULATION {
            errors.push(format!(
                "xcs.population_size {} is below {MIN_POPULATION}",
                self.xcs.population_size
            ));
        }
        if self.coordinator.relatedness_every == 0 {
            errors.push("coordinator.relatedness_every must be positive".into());
        }
        if self.metrics.sample_every == 0 || self.metrics.window == 0 {
            errors.push("metrics.sample_every and metrics.window must be positive".into());
        }
        if self.features.ol_capacity == 0 {
            errors.push("features.ol_capacity must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.features.generate_prob) {
            errors.push("features.generate_prob must lie in [0, 1]".into());
        }
        match self.mode {
            Mode::Single | Mode::Multitask => {
                match self.problems() {
                    Ok(p) if p.is_empty() => errors.push("problems.tasks is empty".into()),
                    Ok(p) if self.mode == Mode::Single && p.len() != 1 => {
                        errors.push(format!("single mode takes one task, got {}", p.len()))
                    }
                    Ok(_) => {}
                    Err(e) => errors.push(e.to_string()),
                }
                if self.iterations == 0 {
                    errors.push("iterations must be positive".into());
                }
                if self.dataset.is_some() {
                    errors.push(format!("[dataset] is not used in {:?} mode", self.mode).to_lowercase());
                }
            }
            Mode::Multiclass => {
                if !self.problems.tasks.is_empty() {
                    errors.push("problems.tasks is not used in multiclass mode".into());
                }
                match &self.dataset {
                    None => errors.push("multiclass mode needs a [dataset] section".into()),
                    Some(d) => {
                        if d.folds < 2 {
                            errors.push("dataset.folds must be at least 2".into());
                        }
                        match self.load_dataset() {
                            Ok(data) if data.len() < d.folds => {
                                errors.push(format!("{} rows cannot fill {} folds", data.len(), d.folds))
                            }
                            Ok(_) => {}
                            Err(e) => errors.push(e.to_string()),
                        }
                    }
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors.join("; ")))
        }
    }

    pub fn load_dataset(&self) -> Result<multiclass::EncodedDataset> {
        let d = self
            .dataset
            .as_ref()
            .ok_or_else(|| Error::Config("no [dataset] section".into()))?;
        let schema = d.schema.as_deref().map(Schema::load).transpose()?;
        let data = multiclass::load_csv(&d.path, schema.as_ref())?;
        Ok(multiclass::one_hot_encode(&data))
    }

    pub fn multiclass_config(&self) -> MulticlassConfig {
        let d = self.dataset.as_ref();
        MulticlassConfig {
            xcs: self.xcs.clone(),
            features: self.features.clone(),
            coordinator: self.coordinator.clone(),
            metrics: self.metrics.clone(),
            multiclass: MulticlassParams {
                folds: d.map_or(default_folds(), |d| d.folds),
                train_rows: d.map_or(default_train_rows(), |d| d.train_rows),
            },
            jobs: self.jobs,
        }
    }

    /// `output_dir`, resolved against the output root when relative.
    pub fn resolved_output(&self) -> PathBuf {
        if self.output_dir.is_absolute() {
            return self.output_dir.clone();
        }
        match std::env::var_os(OUTPUT_ROOT_VAR) {
            Some(root) => PathBuf::from(root).join(&self.output_dir),
            None => self.output_dir.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub code_version: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, Serialize)]
struct AccuracyRecord<'a> {
    schema_version: u32,
    seed: u64,
    task: usize,
    task_name: &'a str,
    trials: u64,
    accuracy: f64,
    window: usize,
    generality_rate: Option<f64>,
    macro_classifiers: usize,
    micro_classifiers: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AccuracyIn {
    schema_version: u32,
    seed: u64,
    task: usize,
    task_name: String,
    trials: u64,
    accuracy: f64,
    window: usize,
    generality_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct RelatednessRecord<'a> {
    schema_version: u32,
    seed: u64,
    iteration: u64,
    source: usize,
    target: usize,
    source_name: &'a str,
    target_name: &'a str,
    relss: f64,
}

#[derive(Debug, Clone, Serialize)]
struct OlRecord<'a> {
    schema_version: u32,
    seed: u64,
    iteration: u64,
    task: usize,
    rank: usize,
    cf: &'a str,
    fitness: f64,
}

#[derive(Debug, Clone, Serialize)]
struct PopulationRecord<'a> {
    schema_version: u32,
    seed: u64,
    task: usize,
    condition: &'a str,
    action: u8,
    prediction: f64,
    error: f64,
    fitness: f64,
    numerosity: u32,
    experience: u64,
    complexity: usize,
    generality: f64,
}

#[derive(Debug, Clone, Serialize)]
struct AggregateRecord<'a> {
    schema_version: u32,
    task: usize,
    task_name: &'a str,
    trials: u64,
    seeds: usize,
    mean_accuracy: f64,
    sd_accuracy: f64,
    mean_generality_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct AggregateRelatedness<'a> {
    schema_version: u32,
    iteration: u64,
    source: usize,
    target: usize,
    source_name: &'a str,
    target_name: &'a str,
    seeds: usize,
    mean_relss: f64,
    sd_relss: f64,
}

#[derive(Debug, Clone, Serialize)]
struct SummaryRecord<'a> {
    schema_version: u32,
    seed: u64,
    task: usize,
    task_name: &'a str,
    trials_to_95: Option<u64>,
    trials_to_100: Option<u64>,
    final_accuracy: f64,
    transfers_selected: u64,
}

#[derive(Debug, Clone, Serialize)]
struct FoldRecord {
    schema_version: u32,
    seed: u64,
    fold: usize,
    train_rows: usize,
    test_rows: usize,
    correct: usize,
    accuracy: f64,
    empty_match_predictions: u64,
    late_pair_mean: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// What `run` produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub seeds: Vec<u64>,
    pub bundles: Vec<MetricsBundle>,
    pub cv: Option<CvReport>,
}

/// Runs every seed of `config` into `dir`. On failure a `FAILED` file with
/// the error is left next to whatever was already written.
pub fn run(config: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    config.validate()?;
    fs::create_dir_all(dir)?;
    let _ = fs::remove_file(dir.join("FAILED"));
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    let result = match config.mode {
        Mode::Single | Mode::Multitask => run_boolean(config, dir),
        Mode::Multiclass => run_multiclass(config, dir),
    };
    if let Err(e) = &result {
        fs::write(dir.join("FAILED"), format!("{e}\n"))?;
    }
    result
}

fn run_boolean(config: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    let seeds = config.seeds.list();
    let tasks = config.problems()?;
    let results = exec::map_indexed(config.jobs, seeds.len(), |i| {
        let seed = seeds[i];
        let bundle = run_multitask(&MultitaskConfig {
            tasks: tasks.clone(),
            iterations: config.iterations,
            seed,
            xcs: config.xcs.clone(),
            features: config.features.clone(),
            coordinator: config.coordinator.clone(),
            metrics: config.metrics.clone(),
        })?;
        write_seed(dir, seed, &bundle, config.metrics.window)?;
        Ok(bundle)
    });
    let bundles: Vec<MetricsBundle> = results.into_iter().collect::<Result<_>>()?;
    write_aggregates(dir, &bundles)?;
    Ok(RunSummary {
        dir: dir.to_path_buf(),
        seeds,
        bundles,
        cv: None,
    })
}

fn write_seed(dir: &Path, seed: u64, b: &MetricsBundle, window: usize) -> Result<()> {
    let names = &b.task_names;
    write_csv(
        &dir.join(format!("accuracy_seed_{seed}.csv")),
        b.accuracy.iter().map(|s| AccuracyRecord {
            schema_version: SCHEMA_VERSION,
            seed,
            task: s.task,
            task_name: &names[s.task],
            trials: s.trials,
            accuracy: s.accuracy,
            window: s.window,
            generality_rate: s.generality_rate,
            macro_classifiers: s.macro_classifiers,
            micro_classifiers: s.micro_classifiers,
        }),
    )?;
    write_csv(
        &dir.join(format!("relatedness_seed_{seed}.csv")),
        b.relatedness.iter().map(|r| RelatednessRecord {
            schema_version: SCHEMA_VERSION,
            seed,
            iteration: r.iteration,
            source: r.source,
            target: r.target,
            source_name: &names[r.source],
            target_name: &names[r.target],
            relss: r.relss,
        }),
    )?;
    write_csv(
        &dir.join(format!("ol_seed_{seed}.csv")),
        b.ol_snapshots.iter().map(|r| OlRecord {
            schema_version: SCHEMA_VERSION,
            seed,
            iteration: r.iteration,
            task: r.task,
            rank: r.rank,
            cf: &r.cf,
            fitness: r.fitness,
        }),
    )?;
    write_csv(
        &dir.join(format!("final_ol_seed_{seed}.csv")),
        b.final_ols.iter().enumerate().flat_map(|(task, ol)| {
            ol.iter().enumerate().map(move |(rank, (cf, fitness))| OlRecord {
                schema_version: SCHEMA_VERSION,
                seed,
                iteration: b.iterations,
                task,
                rank,
                cf,
                fitness: *fitness,
            })
        }),
    )?;
    write_csv(
        &dir.join(format!("population_seed_{seed}.csv")),
        b.populations.iter().enumerate().flat_map(|(task, pop)| {
            pop.iter().map(move |r| PopulationRecord {
                schema_version: SCHEMA_VERSION,
                seed,
                task,
                condition: &r.condition,
                action: r.action,
                prediction: r.prediction,
                error: r.error,
                fitness: r.fitness,
                numerosity: r.numerosity,
                experience: r.experience,
                complexity: r.complexity,
                generality: r.generality,
            })
        }),
    )?;
    write_json(&dir.join(format!("relatedness_matrix_seed_{seed}.json")), &b.final_matrix)?;
    write_csv(
        &dir.join(format!("summary_seed_{seed}.csv")),
        names.iter().enumerate().map(|(task, name)| SummaryRecord {
            schema_version: SCHEMA_VERSION,
            seed,
            task,
            task_name: name,
            trials_to_95: trials_to_threshold(&b.accuracy, task, 0.95, window),
            trials_to_100: trials_to_threshold(&b.accuracy, task, 1.0, window),
            final_accuracy: b.accuracy.iter().filter(|s| s.task == task).last().map_or(0.0, |s| s.accuracy),
            transfers_selected: b.request_stats[task].external_selected,
        }),
    )?;
    Ok(())
}

fn write_aggregates(dir: &Path, bundles: &[MetricsBundle]) -> Result<()> {
    let names = &bundles[0].task_names;
    let mut acc: BTreeMap<(usize, u64), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for b in bundles {
        for s in &b.accuracy {
            let e = acc.entry((s.task, s.trials)).or_default();
            e.0.push(s.accuracy);
            if let Some(g) = s.generality_rate {
                e.1.push(g);
            }
        }
    }
    write_csv(
        &dir.join("aggregate_accuracy.csv"),
        acc.iter().map(|((task, trials), (a, g))| {
            let (mean, sd) = mean_sd(a);
            AggregateRecord {
                schema_version: SCHEMA_VERSION,
                task: *task,
                task_name: &names[*task],
                trials: *trials,
                seeds: a.len(),
                mean_accuracy: mean,
                sd_accuracy: sd,
                mean_generality_rate: (!g.is_empty()).then(|| mean_sd(g).0),
            }
        }),
    )?;
    let mut rel: BTreeMap<(u64, usize, usize), Vec<f64>> = BTreeMap::new();
    for b in bundles {
        for r in &b.relatedness {
            rel.entry((r.iteration, r.source, r.target)).or_default().push(r.relss);
        }
    }
    write_csv(
        &dir.join("aggregate_relatedness.csv"),
        rel.iter().map(|((iteration, source, target), v)| {
            let (mean, sd) = mean_sd(v);
            AggregateRelatedness {
                schema_version: SCHEMA_VERSION,
                iteration: *iteration,
                source: *source,
                target: *target,
                source_name: &names[*source],
                target_name: &names[*target],
                seeds: v.len(),
                mean_relss: mean,
                sd_relss: sd,
            }
        }),
    )?;
    let n = names.len();
    let mut values = vec![vec![0.0; n]; n];
    for b in bundles {
        for (i, row) in values.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += b.final_matrix.get(i, j) / bundles.len() as f64;
            }
        }
    }
    write_json(
        &dir.join("relatedness_matrix.json"),
        &RelatednessMatrix {
            iteration: bundles[0].iterations,
            tasks: names.clone(),
            values,
        },
    )?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct CvSummary<'a> {
    schema_version: u32,
    classes: &'a [String],
    folds: usize,
    seeds: Vec<u64>,
    mean_accuracy: f64,
    sd_accuracy: f64,
    seed_means: &'a [(u64, f64)],
    sd_seed_means: f64,
    fallback_classes: &'a [String],
    empty_match_predictions: u64,
    late_outgoing_relatedness: Vec<f64>,
    late_pair_mean_relatedness: f64,
}

fn run_multiclass(config: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    let seeds = config.seeds.list();
    let data = config.load_dataset()?;
    let report = multiclass::k_fold_cv(&data, &seeds, &config.multiclass_config())?;
    write_cv(dir, &report, &seeds)?;
    Ok(RunSummary {
        dir: dir.to_path_buf(),
        seeds,
        bundles: Vec::new(),
        cv: Some(report),
    })
}

fn write_cv(dir: &Path, report: &CvReport, seeds: &[u64]) -> Result<()> {
    write_csv(
        &dir.join("folds.csv"),
        report.folds.iter().map(|f| FoldRecord {
            schema_version: SCHEMA_VERSION,
            seed: f.seed,
            fold: f.fold,
            train_rows: f.train_rows,
            test_rows: f.test_rows,
            correct: f.correct,
            accuracy: f.accuracy,
            empty_match_predictions: f.empty_match_predictions,
            late_pair_mean: f.late_pair_mean,
        }),
    )?;
    let mut w = csv::Writer::from_path(dir.join("confusion.csv"))?;
    let mut header = vec!["schema_version".to_string(), "actual".to_string()];
    header.extend(report.classes.iter().cloned());
    w.write_record(&header)?;
    for (class, row) in report.classes.iter().zip(&report.confusion) {
        let mut rec = vec![SCHEMA_VERSION.to_string(), class.clone()];
        rec.extend(row.iter().map(u64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    let n = report.classes.len();
    let mut values = vec![vec![0.0; n]; n];
    for f in &report.folds {
        for (i, row) in values.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += f.final_matrix.get(i, j) / report.folds.len() as f64;
            }
        }
    }
    write_json(
        &dir.join("relatedness_matrix.json"),
        &RelatednessMatrix {
            iteration: report.folds.first().map_or(0, |f| f.final_matrix.iteration),
            tasks: report.classes.clone(),
            values,
        },
    )?;
    write_json(
        &dir.join("summary.json"),
        &CvSummary {
            schema_version: SCHEMA_VERSION,
            classes: &report.classes,
            folds: report.folds.len() / seeds.len().max(1),
            seeds: seeds.to_vec(),
            mean_accuracy: report.mean,
            sd_accuracy: report.sd,
            seed_means: &report.seed_means,
            sd_seed_means: report.seed_sd,
            fallback_classes: &report.fallback_classes,
            empty_match_predictions: report.folds.iter().map(|f| f.empty_match_predictions).sum(),
            late_outgoing_relatedness: report.late_outgoing(),
            late_pair_mean_relatedness: report.late_pair_mean(),
        },
    )?;
    Ok(())
}

/// One task's side-by-side statistics in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskComparison {
    pub task: usize,
    pub task_name: String,
    pub seeds: usize,
    /// Mean over seeds that reached the threshold, and how many did not.
    pub to_95: [(Option<f64>, usize); 2],
    pub to_100: [(Option<f64>, usize); 2],
    pub final_accuracy: [f64; 2],
    /// Paired by seed on trials-to-95%: A earlier, B earlier, tied.
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub task: usize,
    pub trials: u64,
    pub mean_a: Option<f64>,
    pub mean_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub tasks: Vec<TaskComparison>,
    pub curves: Vec<CurvePoint>,
}

impl Comparison {
    /// Plain-text table.
    pub fn render(&self) -> String {
        let fmt_mean = |m: &(Option<f64>, usize)| match m {
            (Some(v), 0) => format!("{v:.0}"),
            (Some(v), missing) => format!("{v:.0} ({missing} not reached)"),
            (None, _) => "not reached".to_string(),
        };
        let mut out = String::from("task\tto95 A\tto95 B\tto100 A\tto100 B\tfinal A\tfinal B\twins A/B/tie\n");
        for t in &self.tasks {
            out += &format!(
                "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{}/{}/{}\n",
                t.task_name,
                fmt_mean(&t.to_95[0]),
                fmt_mean(&t.to_95[1]),
                fmt_mean(&t.to_100[0]),
                fmt_mean(&t.to_100[1]),
                t.final_accuracy[0],
                t.final_accuracy[1],
                t.wins_a,
                t.wins_b,
                t.ties
            );
        }
        out
    }

    pub fn write_curves(&self, path: &Path) -> Result<()> {
        write_csv(path, &self.curves)
    }
}

struct RunData {
    window: usize,
    // (seed, task) -> samples in trial order
    curves: BTreeMap<(u64, usize), Vec<AccuracyIn>>,
    names: BTreeMap<usize, String>,
}

fn read_run(dir: &Path) -> Result<RunData> {
    let text = fs::read_to_string(dir.join("manifest.json"))
        .map_err(|e| Error::Schema(format!("{}: no manifest ({e})", dir.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "{}: schema version {} (expected {SCHEMA_VERSION})",
            dir.display(),
            manifest.schema_version
        )));
    }
    if manifest.config.mode == Mode::Multiclass {
        return Err(Error::Schema(format!("{}: multiclass runs have no accuracy curves", dir.display())));
    }
    let mut curves: BTreeMap<(u64, usize), Vec<AccuracyIn>> = BTreeMap::new();
    let mut names = BTreeMap::new();
    for seed in manifest.config.seeds.list() {
        let path = dir.join(format!("accuracy_seed_{seed}.csv"));
        let mut rdr = csv::Reader::from_path(&path).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        for row in rdr.deserialize() {
            let row: AccuracyIn = row.map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
            if row.schema_version != SCHEMA_VERSION {
                return Err(Error::Schema(format!("{}: schema version {}", path.display(), row.schema_version)));
            }
            names.insert(row.task, row.task_name.clone());
            curves.entry((row.seed, row.task)).or_default().push(row);
        }
    }
    Ok(RunData {
        window: manifest.config.metrics.window,
        curves,
        names,
    })
}

fn first_reaching(samples: &[AccuracyIn], threshold: f64, window: usize) -> Option<u64> {
    samples
        .iter()
        .find(|s| s.window >= window && s.accuracy >= threshold)
        .map(|s| s.trials)
}

fn mean_reached(values: &[Option<u64>]) -> (Option<f64>, usize) {
    let reached: Vec<f64> = values.iter().flatten().map(|v| *v as f64).collect();
    let missing = values.len() - reached.len();
    ((!reached.is_empty()).then(|| mean_sd(&reached).0), missing)
}

/// Compares two finished Boolean runs task by task.
pub fn compare(dir_a: &Path, dir_b: &Path) -> Result<Comparison> {
    let a = read_run(dir_a)?;
    let b = read_run(dir_b)?;
    if a.names != b.names {
        return Err(Error::Schema(format!(
            "task lists differ: {:?} vs {:?}",
            a.names.values().collect::<Vec<_>>(),
            b.names.values().collect::<Vec<_>>()
        )));
    }
    let mut tasks = Vec::new();
    let mut curves = Vec::new();
    for (&task, name) in &a.names {
        let per = |run: &RunData| -> BTreeMap<u64, (Option<u64>, Option<u64>, f64)> {
            run.curves
                .iter()
                .filter(|((_, t), _)| *t == task)
                .map(|((seed, _), s)| {
                    (
                        *seed,
                        (
                            first_reaching(s, 0.95, run.window),
                            first_reaching(s, 1.0, run.window),
                            s.last().map_or(0.0, |x| x.accuracy),
                        ),
                    )
                })
                .collect()
        };
        let (pa, pb) = (per(&a), per(&b));
        let stats = |p: &BTreeMap<u64, (Option<u64>, Option<u64>, f64)>| {
            let t95: Vec<Option<u64>> = p.values().map(|v| v.0).collect();
            let t100: Vec<Option<u64>> = p.values().map(|v| v.1).collect();
            let fin: Vec<f64> = p.values().map(|v| v.2).collect();
            (mean_reached(&t95), mean_reached(&t100), mean_sd(&fin).0)
        };
        let (sa, sb) = (stats(&pa), stats(&pb));
        let (mut wins_a, mut wins_b, mut ties) = (0, 0, 0);
        for (seed, va) in &pa {
            if let Some(vb) = pb.get(seed) {
                let key = |v: Option<u64>| v.unwrap_or(u64::MAX);
                match key(va.0).cmp(&key(vb.0)) {
                    std::cmp::Ordering::Less => wins_a += 1,
                    std::cmp::Ordering::Greater => wins_b += 1,
                    std::cmp::Ordering::Equal => ties += 1,
                }
            }
        }
        tasks.push(TaskComparison {
            task,
            task_name: name.clone(),
            seeds: pa.len().max(pb.len()),
            to_95: [sa.0, sb.0],
            to_100: [sa.1, sb.1],
            final_accuracy: [sa.2, sb.2],
            wins_a,
            wins_b,
            ties,
        });
        let mean_curve = |run: &RunData| -> BTreeMap<u64, f64> {
            let mut acc: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
            for ((_, t), s) in &run.curves {
                if *t == task {
                    for x in s {
                        acc.entry(x.trials).or_default().push(x.accuracy);
                    }
                }
            }
            acc.into_iter().map(|(k, v)| (k, mean_sd(&v).0)).collect()
        };
        let (ca, cb) = (mean_curve(&a), mean_curve(&b));
        let trials: std::collections::BTreeSet<u64> = ca.keys().chain(cb.keys()).copied().collect();
        curves.extend(trials.into_iter().map(|t| CurvePoint {
            task,
            trials: t,
            mean_a: ca.get(&t).copied(),
            mean_b: cb.get(&t).copied(),
        }));
    }
    Ok(Comparison { tasks, curves })
}

#[cfg(test)]
mod tests;
