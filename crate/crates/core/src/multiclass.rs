//! Multi-class tabular data as parallel one-vs-rest binary tasks: loading,
//! one-hot encoding, supervised training over a broadcast row stream,
//! prediction from per-class P(1), and stratified k-fold evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coordinator::{Coordinator, CoordinatorParams, MetricsParams, RelatednessMatrix, TaskBinding};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::features::FeatureParams;
use crate::rng::{derive, TaskRng};
use crate::xcs::XcsParams;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Attribute {
    Boolean { name: String },
    /// Values in sorted order; a row stores an index into them.
    Nominal { name: String, values: Vec<String> },
}

impl Attribute {
    pub fn name(&self) -> &str {
        match self {
            Attribute::Boolean { name } | Attribute::Nominal { name, .. } => name,
        }
    }

    /// Number of binary columns after encoding.
    pub fn width(&self) -> usize {
        match self {
            Attribute::Boolean { .. } => 1,
            Attribute::Nominal { values, .. } => values.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Nominal(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub attributes: Vec<Attribute>,
    pub rows: Vec<Vec<Value>>,
    pub class_name: String,
    /// Sorted class labels.
    pub classes: Vec<String>,
    /// Per row, an index into `classes`.
    pub labels: Vec<usize>,
}

/// Declared attribute types. Unlisted columns are inferred.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    /// Class column; defaults to the last column.
    pub class: Option<String>,
    #[serde(default)]
    pub attributes: BTreeMap<String, AttributeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttributeSpec {
    /// Only `"boolean"` is accepted.
    Kind(String),
    Values(Vec<String>),
}

impl Schema {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }
}

fn is_missing(v: &str) -> bool {
    v.is_empty() || v == "?"
}

/// Sorts numerically when every value is a number, else lexically.
fn sort_values(values: &mut [String]) {
    let numeric: Option<Vec<f64>> = values.iter().map(|v| v.parse::<f64>().ok()).collect();
    if numeric.is_some() {
        values.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    } else {
        values.sort();
    }
}

pub fn load_csv(path: &Path, schema: Option<&Schema>) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
    read_csv(file, schema)
}

/// Reads a headed CSV. Missing values (empty or `?`) are rejected.
pub fn read_csv<R: Read>(reader: R, schema: Option<&Schema>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Dataset(format!("header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 2 || header.iter().all(|h| h.is_empty()) {
        return Err(Error::Dataset("expected a header with at least one attribute and a class column".into()));
    }
    let mut raw: Vec<Vec<String>> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Dataset(format!("row {row}: {e}")))?;
        if record.len() != header.len() {
            return Err(Error::Dataset(format!(
                "row {row}: {} fields, header has {}",
                record.len(),
                header.len()
            )));
        }
        let values: Vec<String> = record.iter().map(str::to_string).collect();
        if let Some(col) = values.iter().position(|v| is_missing(v)) {
            return Err(Error::Dataset(format!(
                "row {row}, column {} ('{}'): missing value",
                col + 1,
                header[col]
            )));
        }
        raw.push(values);
    }
    if raw.is_empty() {
        return Err(Error::Dataset("no data rows".into()));
    }

    let default_schema = Schema::default();
    let schema = schema.unwrap_or(&default_schema);
    let class_col = match &schema.class {
        Some(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("class column '{name}' not in header")))?,
        None => header.len() - 1,
    };
    for name in schema.attributes.keys() {
        if !header.contains(name) {
            return Err(Error::Schema(format!("attribute '{name}' not in header")));
        }
    }

    let mut attributes = Vec::new();
    let mut columns = Vec::new();
    for (col, name) in header.iter().enumerate() {
        if col == class_col {
            continue;
        }
        let attribute = match schema.attributes.get(name) {
            Some(AttributeSpec::Kind(kind)) if kind.eq_ignore_ascii_case("boolean") => {
                Attribute::Boolean { name: name.clone() }
            }
            Some(AttributeSpec::Kind(kind)) => {
                return Err(Error::Schema(format!("attribute '{name}': unknown kind '{kind}'")))
            }
            Some(AttributeSpec::Values(values)) => {
                let mut values = values.clone();
                sort_values(&mut values);
                values.dedup();
                Attribute::Nominal {
                    name: name.clone(),
                    values,
                }
            }
            None => {
                let seen: BTreeSet<&str> = raw.iter().map(|r| r[col].as_str()).collect();
                if seen.iter().all(|v| *v == "0" || *v == "1") {
                    Attribute::Boolean { name: name.clone() }
                } else {
                    let mut values: Vec<String> = seen.into_iter().map(str::to_string).collect();
                    sort_values(&mut values);
                    Attribute::Nominal {
                        name: name.clone(),
                        values,
                    }
                }
            }
        };
        attributes.push(attribute);
        columns.push(col);
    }

    let mut classes: Vec<String> = raw
        .iter()
        .map(|r| r[class_col].clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    sort_values(&mut classes);

    let mut rows = Vec::with_capacity(raw.len());
    let mut labels = Vec::with_capacity(raw.len());
    for (i, r) in raw.iter().enumerate() {
        let mut row = Vec::with_capacity(attributes.len());
        for (attribute, &col) in attributes.iter().zip(&columns) {
            let v = &r[col];
            let value = match attribute {
                Attribute::Boolean { .. } => match v.as_str() {
                    "0" => Value::Bool(false),
                    "1" => Value::Bool(true),
                    _ => {
                        return Err(Error::Dataset(format!(
                            "row {}, column {} ('{}'): '{v}' is not 0 or 1",
                            i + 1,
                            col + 1,
                            header[col]
                        )))
                    }
                },
                Attribute::Nominal { values, .. } => match values.iter().position(|x| x == v) {
                    Some(k) => Value::Nominal(k),
                    None => {
                        return Err(Error::Dataset(format!(
                            "row {}, column {} ('{}'): unknown value '{v}'",
                            i + 1,
                            col + 1,
                            header[col]
                        )))
                    }
                },
            };
            row.push(value);
        }
        rows.push(row);
        labels.push(classes.iter().position(|c| c == &r[class_col]).expect("class collected above"));
    }
    Ok(Dataset {
        attributes,
        rows,
        class_name: header[class_col].clone(),
        classes,
        labels,
    })
}

/// A dataset whose attributes are all binary.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<bool>>,
    pub classes: Vec<String>,
    pub labels: Vec<usize>,
}

impl EncodedDataset {
    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }
}

/// Booleans pass through; a nominal attribute with V values becomes V
/// columns named `attr=value`, in sorted value order.
pub fn one_hot_encode(data: &Dataset) -> EncodedDataset {
    let mut columns = Vec::new();
    for a in &data.attributes {
        match a {
            Attribute::Boolean { name } => columns.push(name.clone()),
            Attribute::Nominal { name, values } => columns.extend(values.iter().map(|v| format!("{name}={v}"))),
        }
    }
    let rows = data
        .rows
        .iter()
        .map(|row| {
            let mut bits = Vec::with_capacity(columns.len());
            for (a, v) in data.attributes.iter().zip(row) {
                match *v {
                    Value::Bool(b) => bits.push(b),
                    Value::Nominal(k) => bits.extend((0..a.width()).map(|j| j == k)),
                }
            }
            bits
        })
        .collect();
    EncodedDataset {
        columns,
        rows,
        classes: data.classes.clone(),
        labels: data.labels.clone(),
    }
}

/// One class's one-vs-rest labelling of the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTaskView {
    pub class: usize,
    pub labels: Vec<bool>,
}

pub fn binary_views(data: &EncodedDataset) -> Vec<BinaryTaskView> {
    (0..data.classes.len())
        .map(|class| BinaryTaskView {
            class,
            labels: data.labels.iter().map(|&l| l == class).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MulticlassParams {
    pub folds: usize,
    /// Broadcast training rows per fold.
    pub train_rows: u64,
}

impl Default for MulticlassParams {
    fn default() -> Self {
        MulticlassParams {
            folds: 10,
            train_rows: 80_000,
        }
    }
}

/// Everything one cross-validated multi-class experiment needs.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassConfig {
    pub xcs: XcsParams,
    pub features: FeatureParams,
    pub coordinator: CoordinatorParams,
    pub metrics: MetricsParams,
    pub multiclass: MulticlassParams,
    /// How independent (seed, fold) jobs are scheduled.
    pub jobs: Execution,
}

/// Trains one system per class on rows drawn uniformly with replacement
/// from `train`, every system seeing the same row each iteration.
pub fn train_supervised(data: &EncodedDataset, train: &[usize], config: &MulticlassConfig, seed: u64) -> Result<Coordinator> {
    if train.is_empty() {
        return Err(Error::Dataset("empty training set".into()));
    }
    let bindings: Vec<TaskBinding> = data
        .classes
        .iter()
        .map(|c| TaskBinding::broadcast(c.clone(), data.arity()))
        .collect();
    let mut coordinator = Coordinator::new(
        &bindings,
        &config.xcs,
        &config.features,
        config.coordinator.clone(),
        config.metrics.clone(),
        seed,
    )?;
    let mut rows = derive(seed, 2);
    let mut labels = vec![false; data.classes.len()];
    for _ in 0..config.multiclass.train_rows {
        let r = train[rows.gen_range(0..train.len())];
        labels.iter_mut().enumerate().for_each(|(c, l)| *l = data.labels[r] == c);
        coordinator.step_broadcast(&data.rows[r], &labels)?;
    }
    Ok(coordinator)
}

/// Index of the largest value, ties broken uniformly at random.
pub fn argmax_random_tie(values: &[f64], rng: &mut TaskRng) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..values.len()).filter(|&i| values[i] == best).collect();
    *tied.choose(rng).expect("non-empty values")
}

/// Per-class P(1) for `row`. Systems with an empty match set give 0.5 and
/// bump `empty_matches`.
pub fn class_probabilities(coordinator: &Coordinator, row: &[bool], empty_matches: &mut u64) -> Vec<f64> {
    coordinator
        .tasks()
        .iter()
        .map(|t| {
            t.xcs().class_probability(row).unwrap_or_else(|| {
                *empty_matches += 1;
                0.5
            })
        })
        .collect()
}

pub fn predict_class(coordinator: &Coordinator, row: &[bool], rng: &mut TaskRng, empty_matches: &mut u64) -> usize {
    argmax_random_tie(&class_probabilities(coordinator, row, empty_matches), rng)
}

/// Each system's own exploit action, with no normalisation across systems.
pub fn multilabel_predict(coordinator: &mut Coordinator, row: &[bool]) -> Vec<bool> {
    (0..coordinator.tasks().len())
        .map(|i| coordinator.task_mut(i).exploit(row))
        .collect()
}

/// Assigns every row to one of `k` test folds, stratified by label.
/// Classes with fewer than `k` rows are pooled and shuffled together.
/// Returns the folds and the labels that fell back.
pub fn stratified_folds(labels: &[usize], k: usize, rng: &mut TaskRng) -> Result<(Vec<Vec<usize>>, Vec<usize>)> {
    if k < 2 || labels.len() < k {
        return Err(Error::Config(format!("cannot make {k} folds from {} rows", labels.len())));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut order = Vec::with_capacity(labels.len());
    let mut pooled = Vec::new();
    let mut fallback = Vec::new();
    for (class, mut idx) in by_class {
        if idx.len() < k {
            fallback.push(class);
            pooled.extend(idx);
        } else {
            idx.shuffle(rng);
            order.extend(idx);
        }
    }
    pooled.shuffle(rng);
    order.extend(pooled);
    let offset = rng.gen_range(0..k);
    let mut folds = vec![Vec::new(); k];
    for (p, i) in order.into_iter().enumerate() {
        folds[(p + offset) % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok((folds, fallback))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub seed: u64,
    pub fold: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub empty_match_predictions: u64,
    #[serde(skip)]
    pub confusion: Vec<Vec<u64>>,
    /// Per class, mean RelSS to the other classes over the last tenth of
    /// training.
    #[serde(skip)]
    pub late_outgoing: Vec<f64>,
    /// Mean RelSS over all ordered pairs over the last tenth of training.
    pub late_pair_mean: f64,
    #[serde(skip)]
    pub final_matrix: RelatednessMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub classes: Vec<String>,
    pub folds: Vec<FoldResult>,
    /// Mean and standard deviation of fold accuracies.
    pub mean: f64,
    pub sd: f64,
    /// Per seed, the mean fold accuracy.
    pub seed_means: Vec<(u64, f64)>,
    /// Standard deviation of the per-seed means.
    pub seed_sd: f64,
    /// `[actual][predicted]`, summed over folds and seeds.
    pub confusion: Vec<Vec<u64>>,
    pub fallback_classes: Vec<String>,
}

impl CvReport {
    /// Mean over folds of each class's late outgoing relatedness.
    pub fn late_outgoing(&self) -> Vec<f64> {
        let n = self.folds.len().max(1) as f64;
        (0..self.classes.len())
            .map(|c| self.folds.iter().map(|f| f.late_outgoing[c]).sum::<f64>() / n)
            .collect()
    }

    pub fn late_pair_mean(&self) -> f64 {
        self.folds.iter().map(|f| f.late_pair_mean).sum::<f64>() / self.folds.len().max(1) as f64
    }
}

pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Row indices in a content-defined order, so that folds do not depend on
/// the order of rows in the input file.
fn canonical_order(data: &EncodedDataset) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.sort_by(|&a, &b| (data.labels[a], &data.rows[a]).cmp(&(data.labels[b], &data.rows[b])));
    idx
}

fn run_fold(data: &EncodedDataset, order: &[usize], folds: &[Vec<usize>], fold: usize, seed: u64, config: &MulticlassConfig) -> Result<FoldResult> {
    let test: Vec<usize> = folds[fold].iter().map(|&p| order[p]).collect();
    let train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(f, _)| *f != fold)
        .flat_map(|(_, ps)| ps.iter().map(|&p| order[p]))
        .collect();
    let run_seed = seed.wrapping_mul(1000).wrapping_add(fold as u64);
    let coordinator = train_supervised(data, &train, config, run_seed)?;
    let mut rng = derive(run_seed, 3);
    let c = data.classes.len();
    let mut confusion = vec![vec![0u64; c]; c];
    let mut empty = 0u64;
    let mut correct = 0usize;
    for &r in &test {
        let guess = predict_class(&coordinator, &data.rows[r], &mut rng, &mut empty);
        confusion[data.labels[r]][guess] += 1;
        correct += usize::from(guess == data.labels[r]);
    }

    let iterations = coordinator.iteration();
    let late_start = iterations - iterations / 10;
    let mut outgoing_sum = vec![0.0; c];
    let mut outgoing_n = vec![0usize; c];
    for s in coordinator.relatedness().iter().filter(|s| s.iteration > late_start) {
        outgoing_sum[s.source] += s.relss;
        outgoing_n[s.source] += 1;
    }
    let late_outgoing: Vec<f64> = outgoing_sum
        .iter()
        .zip(&outgoing_n)
        .map(|(s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
        .collect();
    let total_n: usize = outgoing_n.iter().sum();
    let late_pair_mean = if total_n == 0 {
        0.0
    } else {
        outgoing_sum.iter().sum::<f64>() / total_n as f64
    };
    Ok(FoldResult {
        seed,
        fold,
        train_rows: train.len(),
        test_rows: test.len(),
        correct,
        accuracy: correct as f64 / test.len().max(1) as f64,
        empty_match_predictions: empty,
        confusion,
        late_outgoing,
        late_pair_mean,
        final_matrix: coordinator.current_matrix(),
    })
}

/// Stratified k-fold cross-validation repeated for every seed.
pub fn k_fold_cv(data: &EncodedDataset, seeds: &[u64], config: &MulticlassConfig) -> Result<CvReport> {
    let k = config.multiclass.folds;
    if seeds.is_empty() {
        return Err(Error::Config("no seeds".into()));
    }
    let order = canonical_order(data);
    let ordered_labels: Vec<usize> = order.iter().map(|&i| data.labels[i]).collect();
    let mut plans = Vec::new();
    let mut fallback = BTreeSet::new();
    for &seed in seeds {
        let (folds, fb) = stratified_folds(&ordered_labels, k, &mut derive(seed, 4))?;
        fallback.extend(fb);
        plans.push(folds);
    }
    let jobs: Vec<(usize, usize)> = (0..seeds.len()).flat_map(|s| (0..k).map(move |f| (s, f))).collect();
    let results = exec::map_indexed(config.jobs, jobs.len(), |j| {
        let (s, f) = jobs[j];
        run_fold(data, &order, &plans[s], f, seeds[s], config)
    });
    let folds: Vec<FoldResult> = results.into_iter().collect::<Result<_>>()?;

    let accuracies: Vec<f64> = folds.iter().map(|f| f.accuracy).collect();
    let (mean, sd) = mean_sd(&accuracies);
    let seed_means: Vec<(u64, f64)> = seeds
        .iter()
        .map(|&s| {
            let a: Vec<f64> = folds.iter().filter(|f| f.seed == s).map(|f| f.accuracy).collect();
            (s, mean_sd(&a).0)
        })
        .collect();
    let (_, seed_sd) = mean_sd(&seed_means.iter().map(|(_, m)| *m).collect::<Vec<_>>());
    let c = data.classes.len();
    let mut confusion = vec![vec![0u64; c]; c];
    for f in &folds {
        for (row, add) in confusion.iter_mut().zip(&f.confusion) {
            for (x, y) in row.iter_mut().zip(add) {
                *x += y;
            }
        }
    }
    Ok(CvReport {
        classes: data.classes.clone(),
        folds,
        mean,
        sd,
        seed_means,
        seed_sd,
        confusion,
        fallback_classes: fallback.into_iter().map(|c| data.classes[c].clone()).collect(),
    })
}

#[cfg(test)]
mod tests;
