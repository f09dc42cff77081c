//! Lock-step execution of several task systems over one shared fragment
//! population, task relatedness from Observed List overlap, and the
//! selection of external fragments for transfer between tasks.
//!
//! Each iteration runs in two phases. In the first, every task learns
//! against a read-only registry, a frozen transfer view and its own fitness
//! column; tasks may run in parallel. In the second, fragments created
//! during the iteration are committed in task order, so results do not
//! depend on thread scheduling.

use std::collections::{HashMap, VecDeque};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::features::{
    CfPopulation, CfRegistry, ExternalCfProvider, FeatureContext, FeatureParams, FitnessColumn, ObservedList,
    RequestStats, TaskFeatures,
};
use crate::fragment::{Cf, CfKey};
use crate::problems::ProblemSpec;
use crate::rng::{derive, roulette_index, seeded, TaskRng, UniformSource};
use crate::xcs::{ClassifierRow, XcsParams, XcsSystem};

/// A task's Observed List frozen with its fitness values, best first.
#[derive(Debug, Clone, Default)]
pub struct OlSnapshot {
    entries: Vec<(Cf, f64)>,
    index: HashMap<CfKey, f64>,
    total: f64,
}

impl OlSnapshot {
    pub fn new(entries: Vec<(Cf, f64)>) -> Self {
        let index = entries.iter().map(|(cf, f)| (cf.key().clone(), *f)).collect();
        let total = entries.iter().map(|(_, f)| *f).sum();
        OlSnapshot { entries, index, total }
    }

    pub fn capture(ol: &ObservedList, column: &FitnessColumn) -> Self {
        Self::new(ol.ranked(column))
    }

    pub fn entries(&self) -> &[(Cf, f64)] {
        &self.entries
    }

    pub fn fitness(&self, key: &CfKey) -> Option<f64> {
        self.index.get(key).copied()
    }

    pub fn contains(&self, key: &CfKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn total(&self) -> f64 {
        self.total
    }
}

/// Share of `a`'s list fitness (measured on `a`) carried by fragments that
/// `b`'s list also holds. Zero when `a`'s total is zero.
pub fn rel_ss(a: &OlSnapshot, b: &OlSnapshot) -> f64 {
    if !(a.total > 0.0) {
        return 0.0;
    }
    let shared: f64 = a
        .entries
        .iter()
        .filter(|(cf, _)| b.contains(cf.key()))
        .map(|(_, f)| *f)
        .sum();
    (shared / a.total).clamp(0.0, 1.0)
}

/// Fitness totals of the fragments two lists share.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SharedFitness {
    pub count: usize,
    /// Sum of the shared fragments' fitness on the source task.
    pub source_sum: f64,
    /// The same fragments' fitness summed on the target task.
    pub target_sum: f64,
}

pub fn shared_fitness(source: &OlSnapshot, target: &OlSnapshot) -> SharedFitness {
    let mut shared = SharedFitness::default();
    for (cf, f) in &source.entries {
        if let Some(g) = target.fitness(cf.key()) {
            shared.count += 1;
            shared.source_sum += f;
            shared.target_sum += g;
        }
    }
    shared
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelCfsForm {
    /// Mean shared fitness measured on the source task.
    #[default]
    Source,
    /// Mean shared fitness measured on the target task.
    Target,
}

/// Expected relatedness of a source fragment with source fitness `f_j` to
/// the target task. Zero without shared evidence.
pub fn rel_cf_s(f_j: f64, shared: &SharedFitness, relss: f64, form: RelCfsForm) -> f64 {
    let sum = match form {
        RelCfsForm::Source => shared.source_sum,
        RelCfsForm::Target => shared.target_sum,
    };
    if shared.count == 0 || !(sum > 0.0) {
        return 0.0;
    }
    f_j / (sum / shared.count as f64) * relss
}

/// Vote of an external fragment in the target's roulette.
pub fn adjusted_vote(f_j: f64, shared: &SharedFitness, relss: f64) -> f64 {
    if !(shared.source_sum > 0.0) {
        return 0.0;
    }
    f_j * (shared.target_sum / shared.source_sum) * relss
}

pub fn draw_threshold<U: UniformSource + ?Sized>(u: &mut U) -> f64 {
    u.next_uniform().max(0.1)
}

/// Asymmetric relatedness, `get(source, target)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelatednessMatrix {
    pub iteration: u64,
    pub tasks: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl RelatednessMatrix {
    pub fn get(&self, source: usize, target: usize) -> f64 {
        self.values[source][target]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A fragment of a source list that the target list lacks.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub source: usize,
    pub cf: Cf,
    pub rel_cf: f64,
    pub vote: f64,
}

#[derive(Debug, Clone)]
pub struct ExternalChoice {
    pub source: usize,
    pub cf: Cf,
    pub vote: f64,
}

/// Everything transfer needs, recomputed from the lists on a fixed cadence.
#[derive(Debug, Clone)]
pub struct TransferView {
    snapshots: Vec<OlSnapshot>,
    matrix: RelatednessMatrix,
    // per target, sources ascending, each source's fragments best first
    candidates: Vec<Vec<Candidate>>,
}

impl TransferView {
    pub fn build(snapshots: Vec<OlSnapshot>, names: Vec<String>, form: RelCfsForm, iteration: u64) -> Self {
        let n = snapshots.len();
        let values: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|a| rel_ss(&snapshots[i], &snapshots[a])).collect())
            .collect();
        let candidates = (0..n)
            .map(|a| {
                let mut out = Vec::new();
                for i in (0..n).filter(|&i| i != a) {
                    let relss = values[i][a];
                    let shared = shared_fitness(&snapshots[i], &snapshots[a]);
                    for (cf, f) in &snapshots[i].entries {
                        if snapshots[a].contains(cf.key()) {
                            continue;
                        }
                        out.push(Candidate {
                            source: i,
                            cf: cf.clone(),
                            rel_cf: rel_cf_s(*f, &shared, relss, form),
                            vote: adjusted_vote(*f, &shared, relss),
                        });
                    }
                }
                out
            })
            .collect();
        TransferView {
            snapshots,
            matrix: RelatednessMatrix {
                iteration,
                tasks: names,
                values,
            },
            candidates,
        }
    }

    pub fn matrix(&self) -> &RelatednessMatrix {
        &self.matrix
    }

    pub fn snapshots(&self) -> &[OlSnapshot] {
        &self.snapshots
    }

    pub fn candidates(&self, target: usize) -> &[Candidate] {
        &self.candidates[target]
    }
}

/// Filters the target's candidates by source relatedness and fragment
/// relatedness against `r_thres`, then spins the roulette with draw `u`.
pub fn select_external_cf(view: &TransferView, target: usize, r_thres: f64, u: f64) -> Option<ExternalChoice> {
    let pool: Vec<&Candidate> = view.candidates[target]
        .iter()
        .filter(|c| view.matrix.get(c.source, target) >= r_thres && c.rel_cf >= r_thres)
        .collect();
    let votes: Vec<f64> = pool.iter().map(|c| c.vote).collect();
    roulette_index(&votes, u).map(|k| ExternalChoice {
        source: pool[k].source,
        cf: pool[k].cf.clone(),
        vote: pool[k].vote,
    })
}

/// A fragment that won a target's roulette.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferEvent {
    pub iteration: u64,
    pub source: usize,
    pub target: usize,
    pub cf: String,
    pub vote: f64,
    pub r_thres: f64,
}

struct TransferSelector<'a> {
    view: &'a TransferView,
    rng: TaskRng,
    iteration: u64,
    last: Option<(ExternalChoice, f64)>,
    events: Vec<TransferEvent>,
}

impl ExternalCfProvider for TransferSelector<'_> {
    fn select_external(&mut self, target: usize) -> Option<(Cf, f64)> {
        let r_thres = draw_threshold(&mut self.rng);
        let u = self.rng.next_uniform();
        self.last = select_external_cf(self.view, target, r_thres, u).map(|c| (c, r_thres));
        self.last.as_ref().map(|(c, _)| (c.cf.clone(), c.vote))
    }

    fn on_selected(&mut self, target: usize, _cf: &Cf, _vote: f64) {
        if let Some((c, r_thres)) = self.last.take() {
            self.events.push(TransferEvent {
                iteration: self.iteration,
                source: c.source,
                target,
                cf: c.cf.render(),
                vote: c.vote,
                r_thres,
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoordinatorParams {
    /// Relatedness recomputation cadence R, in iterations.
    pub relatedness_every: u64,
    pub transfer: bool,
    pub relcfs_form: RelCfsForm,
    pub execution: Execution,
}

impl Default for CoordinatorParams {
    fn default() -> Self {
        CoordinatorParams {
            relatedness_every: 100,
            transfer: true,
            relcfs_form: RelCfsForm::Source,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsParams {
    /// Accuracy is sampled every this many explore trials.
    pub sample_every: u64,
    /// Moving-average window over exploit trials.
    pub window: usize,
    /// OL snapshot cadence in iterations; 0 disables periodic snapshots.
    pub snapshot_every: u64,
}

impl Default for MetricsParams {
    fn default() -> Self {
        MetricsParams {
            sample_every: 50,
            window: 100,
            snapshot_every: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracySample {
    pub task: usize,
    pub trials: u64,
    /// Moving average over the last `window` exploit trials.
    pub accuracy: f64,
    /// Exploit trials the average covers, at most `window`.
    pub window: usize,
    /// Mean generality rate of efficient error-free rules since the
    /// previous sample.
    pub generality_rate: Option<f64>,
    pub macro_classifiers: usize,
    pub micro_classifiers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelatednessSample {
    pub iteration: u64,
    pub source: usize,
    pub target: usize,
    pub relss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlRow {
    pub iteration: u64,
    pub task: usize,
    pub rank: usize,
    pub cf: String,
    pub fitness: f64,
}

#[derive(Debug, Clone)]
struct Monitor {
    window: VecDeque<bool>,
    capacity: usize,
    sample_every: u64,
    gen_sum: f64,
    gen_count: usize,
    samples: Vec<AccuracySample>,
}

impl Monitor {
    fn new(metrics: &MetricsParams) -> Self {
        Monitor {
            window: VecDeque::with_capacity(metrics.window),
            capacity: metrics.window.max(1),
            sample_every: metrics.sample_every.max(1),
            gen_sum: 0.0,
            gen_count: 0,
            samples: Vec::new(),
        }
    }

    fn exploit(&mut self, correct: bool) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(correct);
    }

    fn accuracy(&self) -> f64 {
        if self.window.is_empty() {
            0.0
        } else {
            self.window.iter().filter(|c| **c).count() as f64 / self.window.len() as f64
        }
    }
}

/// Where a task's training instances come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    /// Its own stream drawn from a Boolean problem.
    Problem(ProblemSpec),
    /// One label column of a stream shared by all tasks.
    Broadcast { arity: usize },
}

impl Binding {
    pub fn arity(&self) -> usize {
        match self {
            Binding::Problem(p) => p.arity(),
            Binding::Broadcast { arity } => *arity,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaskSystem {
    id: usize,
    name: String,
    binding: Binding,
    xcs: XcsSystem,
    features: TaskFeatures,
    rng: TaskRng,
    env_rng: TaskRng,
    monitor: Monitor,
    iterations: u64,
    record: bool,
    events: Vec<TransferEvent>,
}

enum Input<'a> {
    Own,
    Shared { state: &'a [bool], label: bool },
}

impl TaskSystem {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn binding(&self) -> Binding {
        self.binding
    }

    pub fn xcs(&self) -> &XcsSystem {
        &self.xcs
    }

    pub fn features(&self) -> &TaskFeatures {
        &self.features
    }

    /// Iterations completed.
    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn samples(&self) -> &[AccuracySample] {
        &self.monitor.samples
    }

    pub fn transfer_events(&self) -> &[TransferEvent] {
        &self.events
    }

    /// Greedy action for `state` drawn with this task's own generator.
    pub fn exploit(&mut self, state: &[bool]) -> bool {
        self.xcs.exploit(state, &mut self.rng)
    }

    fn step(
        &mut self,
        input: Input<'_>,
        registry: &CfRegistry,
        column: &mut FitnessColumn,
        view: Option<&TransferView>,
        seed: u64,
        iteration: u64,
    ) {
        let mut selector = view.map(|view| TransferSelector {
            view,
            rng: seeded(seed),
            iteration,
            last: None,
            events: Vec::new(),
        });
        let (state, label, probe) = match input {
            Input::Own => {
                let Binding::Problem(spec) = self.binding else {
                    unreachable!("checked by the coordinator")
                };
                let train = spec.sample(&mut self.env_rng);
                let probe = spec.sample(&mut self.env_rng);
                (train.bits, train.label, Some(probe))
            }
            Input::Shared { state, label } => {
                // score the row before learning from it
                let guess = self.xcs.exploit(state, &mut self.rng);
                self.monitor.exploit(guess == label);
                (state.to_vec(), label, None)
            }
        };
        let outcome = {
            let mut ctx = FeatureContext {
                features: &mut self.features,
                column,
                registry,
                external: selector.as_mut().map(|s| s as &mut dyn ExternalCfProvider),
                iteration,
            };
            self.xcs.explore(&state, label, &mut ctx, &mut self.rng)
        };
        if let Some(rate) = outcome.generality_rate {
            self.monitor.gen_sum += rate;
            self.monitor.gen_count += 1;
        }
        if let Some(probe) = probe {
            let guess = self.xcs.exploit(&probe.bits, &mut self.rng);
            self.monitor.exploit(guess == probe.label);
        }
        if self.record {
            if let Some(s) = selector {
                self.events.extend(s.events);
            }
        }
        self.iterations += 1;
        if self.iterations % self.monitor.sample_every == 0 {
            let m = &mut self.monitor;
            let sample = AccuracySample {
                task: self.id,
                trials: self.iterations,
                accuracy: m.accuracy(),
                window: m.window.len(),
                generality_rate: (m.gen_count > 0).then(|| m.gen_sum / m.gen_count as f64),
                macro_classifiers: self.xcs.population().len(),
                micro_classifiers: self.xcs.numerosity_sum(),
            };
            m.samples.push(sample);
            m.gen_sum = 0.0;
            m.gen_count = 0;
        }
    }
}

/// Declares one task for a coordinator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskBinding {
    pub name: String,
    pub binding: Binding,
}

impl TaskBinding {
    pub fn problem(spec: ProblemSpec) -> Self {
        TaskBinding {
            name: spec.to_string(),
            binding: Binding::Problem(spec),
        }
    }

    pub fn broadcast(name: impl Into<String>, arity: usize) -> Self {
        TaskBinding {
            name: name.into(),
            binding: Binding::Broadcast { arity },
        }
    }
}

/// Everything a finished multi-task run reports.
#[derive(Debug, Clone)]
pub struct MetricsBundle {
    pub task_names: Vec<String>,
    pub iterations: u64,
    pub accuracy: Vec<AccuracySample>,
    pub relatedness: Vec<RelatednessSample>,
    pub ol_snapshots: Vec<OlRow>,
    pub final_matrix: RelatednessMatrix,
    pub final_ols: Vec<Vec<(String, f64)>>,
    pub populations: Vec<Vec<ClassifierRow>>,
    pub request_stats: Vec<RequestStats>,
    pub cf_population: usize,
}

#[derive(Debug, Clone)]
pub struct Coordinator {
    tasks: Vec<TaskSystem>,
    population: CfPopulation,
    view: TransferView,
    params: CoordinatorParams,
    metrics: MetricsParams,
    rng: TaskRng,
    iteration: u64,
    relatedness: Vec<RelatednessSample>,
    ol_rows: Vec<OlRow>,
}

impl Coordinator {
    pub fn new(
        tasks: &[TaskBinding],
        xcs: &XcsParams,
        features: &FeatureParams,
        params: CoordinatorParams,
        metrics: MetricsParams,
        seed: u64,
    ) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::Config("no tasks".into()));
        }
        if params.relatedness_every == 0 {
            return Err(Error::Config("relatedness_every must be positive".into()));
        }
        let broadcast = matches!(tasks[0].binding, Binding::Broadcast { .. });
        for t in tasks {
            if matches!(t.binding, Binding::Broadcast { .. }) != broadcast {
                return Err(Error::Config("cannot mix problem and broadcast tasks".into()));
            }
            if broadcast && t.binding.arity() != tasks[0].binding.arity() {
                return Err(Error::Config(format!(
                    "task '{}' has arity {} but '{}' has {}",
                    t.name,
                    t.binding.arity(),
                    tasks[0].name,
                    tasks[0].binding.arity()
                )));
            }
        }
        let mut population = CfPopulation::new();
        let systems: Vec<TaskSystem> = tasks
            .iter()
            .enumerate()
            .map(|(id, t)| {
                let arity = t.binding.arity();
                let xcs = XcsSystem::new(arity, xcs.clone());
                let leaf_cap = xcs.max_condition_length();
                let features = TaskFeatures::new(&mut population, arity, leaf_cap, features.clone());
                let stream = 16 + 2 * id as u64;
                TaskSystem {
                    id,
                    name: t.name.clone(),
                    binding: t.binding,
                    xcs,
                    features,
                    rng: derive(seed, stream),
                    env_rng: derive(seed, stream + 1),
                    monitor: Monitor::new(&metrics),
                    iterations: 0,
                    record: false,
                    events: Vec::new(),
                }
            })
            .collect();
        let mut coordinator = Coordinator {
            view: TransferView::build(Vec::new(), Vec::new(), params.relcfs_form, 0),
            tasks: systems,
            population,
            params,
            metrics,
            rng: derive(seed, 1),
            iteration: 0,
            relatedness: Vec::new(),
            ol_rows: Vec::new(),
        };
        coordinator.rebuild_view();
        Ok(coordinator)
    }

    pub fn tasks(&self) -> &[TaskSystem] {
        &self.tasks
    }

    pub fn task_mut(&mut self, id: usize) -> &mut TaskSystem {
        &mut self.tasks[id]
    }

    pub fn population(&self) -> &CfPopulation {
        &self.population
    }

    pub fn view(&self) -> &TransferView {
        &self.view
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn relatedness(&self) -> &[RelatednessSample] {
        &self.relatedness
    }

    /// Keeps a log of every transferred fragment that wins a roulette.
    pub fn record_transfers(&mut self, on: bool) {
        for t in &mut self.tasks {
            t.record = on;
        }
    }

    /// One iteration of every task on its own problem stream.
    pub fn step_all(&mut self) -> Result<()> {
        if let Some(t) = self.tasks.iter().find(|t| !matches!(t.binding, Binding::Problem(_))) {
            return Err(Error::Config(format!("task '{}' has no problem stream", t.name)));
        }
        self.run_phase(None);
        Ok(())
    }

    /// One iteration in which every task sees `state`, task `i` with
    /// `labels[i]` as its target.
    pub fn step_broadcast(&mut self, state: &[bool], labels: &[bool]) -> Result<()> {
        if labels.len() != self.tasks.len() {
            return Err(Error::Config(format!(
                "{} labels for {} tasks",
                labels.len(),
                self.tasks.len()
            )));
        }
        let arity = self.tasks[0].binding.arity();
        if state.len() != arity || matches!(self.tasks[0].binding, Binding::Problem(_)) {
            return Err(Error::Config(format!(
                "broadcast state of {} bits for tasks of arity {arity}",
                state.len()
            )));
        }
        self.run_phase(Some((state, labels)));
        Ok(())
    }

    fn run_phase(&mut self, shared: Option<(&[bool], &[bool])>) {
        let seeds: Vec<u64> = self.tasks.iter().map(|_| self.rng.next_u64()).collect();
        let view = (self.params.transfer && self.tasks.len() > 1).then_some(&self.view);
        let iteration = self.iteration;
        let (registry, columns) = self.population.split_mut();
        {
            let registry: &CfRegistry = registry;
            exec::for_each_pair(self.params.execution, &mut self.tasks, columns, |i, task, column| {
                let input = match shared {
                    Some((state, labels)) => Input::Shared {
                        state,
                        label: labels[i],
                    },
                    None => Input::Own,
                };
                task.step(input, registry, column, view, seeds[i], iteration);
            });
        }
        for task in &mut self.tasks {
            task.features.commit(registry);
        }
        self.iteration += 1;
        if self.iteration % self.params.relatedness_every == 0 {
            self.rebuild_view();
            let m = &self.view.matrix;
            for source in 0..m.len() {
                for target in (0..m.len()).filter(|&t| t != source) {
                    self.relatedness.push(RelatednessSample {
                        iteration: self.iteration,
                        source,
                        target,
                        relss: m.get(source, target),
                    });
                }
            }
        }
        if self.metrics.snapshot_every > 0 && self.iteration % self.metrics.snapshot_every == 0 {
            self.snapshot_ols();
        }
    }

    fn rebuild_view(&mut self) {
        let snapshots = self
            .tasks
            .iter()
            .map(|t| OlSnapshot::capture(t.features.ol(), self.population.column(t.id)))
            .collect();
        let names = self.tasks.iter().map(|t| t.name.clone()).collect();
        self.view = TransferView::build(snapshots, names, self.params.relcfs_form, self.iteration);
    }

    fn snapshot_ols(&mut self) {
        for t in &self.tasks {
            for (rank, (cf, fitness)) in t.features.ol_snapshot(self.population.column(t.id)).into_iter().enumerate() {
                self.ol_rows.push(OlRow {
                    iteration: self.iteration,
                    task: t.id,
                    rank,
                    cf,
                    fitness,
                });
            }
        }
    }

    /// Relatedness of the current lists, regardless of the cadence.
    pub fn current_matrix(&self) -> RelatednessMatrix {
        let snapshots = self
            .tasks
            .iter()
            .map(|t| OlSnapshot::capture(t.features.ol(), self.population.column(t.id)))
            .collect();
        let names = self.tasks.iter().map(|t| t.name.clone()).collect();
        TransferView::build(snapshots, names, self.params.relcfs_form, self.iteration)
            .matrix
            .clone()
    }

    pub fn finish(self) -> MetricsBundle {
        let final_matrix = self.current_matrix();
        MetricsBundle {
            task_names: self.tasks.iter().map(|t| t.name.clone()).collect(),
            iterations: self.iteration,
            accuracy: self.tasks.iter().flat_map(|t| t.monitor.samples.clone()).collect(),
            relatedness: self.relatedness,
            ol_snapshots: self.ol_rows,
            final_matrix,
            final_ols: self
                .tasks
                .iter()
                .map(|t| t.features.ol_snapshot(self.population.column(t.id)))
                .collect(),
            populations: self.tasks.iter().map(|t| t.xcs.snapshot()).collect(),
            request_stats: self.tasks.iter().map(|t| t.features.stats()).collect(),
            cf_population: self.population.len(),
        }
    }
}

/// A Boolean multi-task run: one system per problem, each with its own
/// instance stream.
#[derive(Debug, Clone, PartialEq)]
pub struct MultitaskConfig {
    pub tasks: Vec<ProblemSpec>,
    pub iterations: u64,
    pub seed: u64,
    pub xcs: XcsParams,
    pub features: FeatureParams,
    pub coordinator: CoordinatorParams,
    pub metrics: MetricsParams,
}

pub fn run_multitask(config: &MultitaskConfig) -> Result<MetricsBundle> {
    let bindings: Vec<TaskBinding> = config.tasks.iter().map(|p| TaskBinding::problem(*p)).collect();
    let mut coordinator = Coordinator::new(
        &bindings,
        &config.xcs,
        &config.features,
        config.coordinator.clone(),
        config.metrics.clone(),
        config.seed,
    )?;
    for _ in 0..config.iterations {
        coordinator.step_all()?;
    }
    Ok(coordinator.finish())
}

/// First sampled trial count at which a task's full-window moving average
/// reaches `threshold`.
pub fn trials_to_threshold(samples: &[AccuracySample], task: usize, threshold: f64, window: usize) -> Option<u64> {
    samples
        .iter()
        .filter(|s| s.task == task && s.window >= window)
        .find(|s| s.accuracy >= threshold)
        .map(|s| s.trials)
}
