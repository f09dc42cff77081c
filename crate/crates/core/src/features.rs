//! Online feature generation: the shared fragment population, each task's
//! Observed List (OL) of its most useful fragments, and the fragment
//! requests that rule construction makes.
//!
//! A task's CF-fitness for a fragment is the best fitness-per-leaf of any
//! efficient classifier of that task containing it, tracked as a running
//! maximum with optional decay on touch.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fragment::{Cf, CfKey, CodeFragment, Operator};
use crate::rng::{roulette_or_uniform, TaskRng};
use crate::xcs::CfSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureParams {
    /// OL capacity L.
    pub ol_capacity: usize,
    /// Probability g that a request grows a new fragment instead of reusing.
    pub generate_prob: f64,
    /// Staleness decay applied to CF-fitness each time it is touched.
    pub decay: f64,
    pub generate_tries: usize,
    /// CF-fitness given to the base fragments when a task starts.
    pub base_fitness: f64,
    /// Keep the base fragments in the OL permanently. Without this an input
    /// whose base fragment is evicted can no longer enter any new rule.
    pub pin_base: bool,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams {
            ol_capacity: 50,
            generate_prob: 0.5,
            decay: 0.001,
            generate_tries: 10,
            base_fitness: 0.01,
            pin_base: true,
        }
    }
}

/// Generated fragments over at most this many distinct inputs are checked
/// for being constant.
const CONSTANT_CHECK_LEAVES: usize = 12;

/// One task's CF-fitness values.
pub type FitnessColumn = HashMap<CfKey, f64>;

#[derive(Debug, Clone)]
pub struct CfRecord {
    pub cf: Cf,
    /// `None` for base fragments present from the start.
    pub created_by: Option<usize>,
    pub created_at: u64,
}

/// Registry of every fragment known to any task, one record per key.
#[derive(Debug, Clone, Default)]
pub struct CfRegistry {
    records: HashMap<CfKey, CfRecord>,
}

impl CfRegistry {
    pub fn get(&self, key: &CfKey) -> Option<&CfRecord> {
        self.records.get(key)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Returns the registered handle for `cf`'s key, inserting `cf` when new.
    pub fn register(&mut self, cf: Cf, created_by: Option<usize>, created_at: u64) -> Cf {
        self.records
            .entry(cf.key().clone())
            .or_insert(CfRecord {
                cf,
                created_by,
                created_at,
            })
            .cf
            .clone()
    }

    pub fn keys(&self) -> impl Iterator<Item = &CfKey> {
        self.records.keys()
    }
}

/// The shared fragment population plus every task's fitness column.
#[derive(Debug, Clone, Default)]
pub struct CfPopulation {
    registry: CfRegistry,
    columns: Vec<FitnessColumn>,
}

impl CfPopulation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a task over `arity` inputs, registering its base fragments and
    /// seeding their fitness. Returns the base fragments in index order.
    pub fn add_task(&mut self, arity: usize, base_fitness: f64) -> (usize, Vec<Cf>) {
        let task = self.columns.len();
        let mut column = FitnessColumn::new();
        let base: Vec<Cf> = (0..arity)
            .map(|k| {
                let cf = self.registry.register(Arc::new(CodeFragment::leaf(k)), None, 0);
                column.insert(cf.key().clone(), base_fitness);
                cf
            })
            .collect();
        self.columns.push(column);
        (task, base)
    }

    pub fn registry(&self) -> &CfRegistry {
        &self.registry
    }

    pub fn len(&self) -> usize {
        self.registry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registry.is_empty()
    }

    pub fn task_count(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, task: usize) -> &FitnessColumn {
        &self.columns[task]
    }

    pub fn fitness(&self, task: usize, key: &CfKey) -> Option<f64> {
        self.columns[task].get(key).copied()
    }

    pub fn register(&mut self, cf: Cf, created_by: Option<usize>, created_at: u64) -> Cf {
        self.registry.register(cf, created_by, created_at)
    }

    /// Read-only registry alongside mutable columns, for one learning
    /// iteration in which each task touches only its own column.
    pub fn split_mut(&mut self) -> (&mut CfRegistry, &mut [FitnessColumn]) {
        (&mut self.registry, &mut self.columns)
    }
}

/// A task's bounded list of its most applicable fragments.
#[derive(Debug, Clone)]
pub struct ObservedList {
    capacity: usize,
    members: Vec<Cf>,
    // parallel to `members`; pinned members are never replaced
    pinned: Vec<bool>,
}

impl ObservedList {
    pub fn new(capacity: usize, initial: Vec<Cf>) -> Self {
        Self::with_pinned(capacity, initial, false)
    }

    /// A list whose initial members are never replaced when `pin` is set.
    pub fn with_pinned(capacity: usize, initial: Vec<Cf>, pin: bool) -> Self {
        let mut ol = ObservedList {
            capacity,
            members: Vec::with_capacity(capacity),
            pinned: Vec::with_capacity(capacity),
        };
        for cf in initial {
            if ol.members.len() < capacity && !ol.contains(cf.key()) {
                ol.members.push(cf);
                ol.pinned.push(pin);
            }
        }
        ol
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Cf] {
        &self.members
    }

    pub fn contains(&self, key: &CfKey) -> bool {
        self.members.iter().any(|m| m.key() == key)
    }

    /// Offers `cf` for admission. When full, the weakest unpinned member is
    /// replaced only if `cf` is strictly fitter. Returns whether `cf` is a member
    /// afterwards.
    pub fn offer(&mut self, cf: &Cf, column: &FitnessColumn) -> bool {
        if self.contains(cf.key()) {
            return true;
        }
        if self.members.len() < self.capacity {
            self.members.push(cf.clone());
            self.pinned.push(false);
            return true;
        }
        let fitness = |c: &Cf| column.get(c.key()).copied().unwrap_or(0.0);
        let candidate = fitness(cf);
        let weakest = self
            .members
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.pinned[*i])
            .min_by(|(_, a), (_, b)| {
                fitness(a)
                    .total_cmp(&fitness(b))
                    .then_with(|| b.key().cmp(a.key()))
            })
            .map(|(i, _)| i);
        match weakest {
            Some(i) if candidate > fitness(&self.members[i]) => {
                self.members[i] = cf.clone();
                true
            }
            _ => false,
        }
    }

    /// Members with their fitness, by descending fitness and then by key.
    pub fn ranked(&self, column: &FitnessColumn) -> Vec<(Cf, f64)> {
        let mut out: Vec<(Cf, f64)> = self
            .members
            .iter()
            .map(|cf| (cf.clone(), column.get(cf.key()).copied().unwrap_or(0.0)))
            .collect();
        out.sort_by(|(a, fa), (b, fb)| {
            fb.partial_cmp(fa)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.key().cmp(b.key()))
        });
        out
    }

    pub fn snapshot(&self, column: &FitnessColumn) -> Vec<(String, f64)> {
        self.ranked(column)
            .into_iter()
            .map(|(cf, f)| (cf.render(), f))
            .collect()
    }
}

/// Supplies at most one fragment from other tasks' lists, with its vote.
pub trait ExternalCfProvider {
    fn select_external(&mut self, target: usize) -> Option<(Cf, f64)>;

    /// Told when the offered fragment won the roulette.
    fn on_selected(&mut self, _target: usize, _cf: &Cf, _vote: f64) {}
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RequestStats {
    pub requests: u64,
    pub generated: u64,
    pub reused: u64,
    pub external_offered: u64,
    pub external_selected: u64,
}

#[derive(Debug, Clone)]
pub struct PendingCf {
    pub cf: Cf,
    pub iteration: u64,
}

/// The per-task state of the feature module.
#[derive(Debug, Clone)]
pub struct TaskFeatures {
    task: usize,
    arity: usize,
    leaf_cap: usize,
    params: FeatureParams,
    ol: ObservedList,
    pending: Vec<PendingCf>,
    stats: RequestStats,
}

impl TaskFeatures {
    /// Registers a new task in `population` with an OL holding its base
    /// fragments. `leaf_cap` bounds the leaf count of grown fragments.
    pub fn new(population: &mut CfPopulation, arity: usize, leaf_cap: usize, params: FeatureParams) -> Self {
        let (task, base) = population.add_task(arity, params.base_fitness);
        TaskFeatures {
            task,
            arity,
            leaf_cap,
            ol: ObservedList::with_pinned(params.ol_capacity, base, params.pin_base),
            params,
            pending: Vec::new(),
            stats: RequestStats::default(),
        }
    }

    pub fn task(&self) -> usize {
        self.task
    }

    pub fn ol(&self) -> &ObservedList {
        &self.ol
    }

    pub fn stats(&self) -> RequestStats {
        self.stats
    }

    pub fn params(&self) -> &FeatureParams {
        &self.params
    }

    /// Moves fragments created during the last iteration into the registry.
    pub fn commit(&mut self, registry: &mut CfRegistry) {
        for p in self.pending.drain(..) {
            registry.register(p.cf, Some(self.task), p.iteration);
        }
    }

    pub fn ol_snapshot(&self, column: &FitnessColumn) -> Vec<(String, f64)> {
        self.ol.snapshot(column)
    }
}

/// Everything one task's feature module needs during one iteration.
pub struct FeatureContext<'a> {
    pub features: &'a mut TaskFeatures,
    pub column: &'a mut FitnessColumn,
    pub registry: &'a CfRegistry,
    pub external: Option<&'a mut dyn ExternalCfProvider>,
    pub iteration: u64,
}

impl FeatureContext<'_> {
    fn intern(&mut self, cf: CodeFragment) -> Cf {
        if let Some(record) = self.registry.get(cf.key()) {
            return record.cf.clone();
        }
        if let Some(p) = self.features.pending.iter().find(|p| p.cf.key() == cf.key()) {
            return p.cf.clone();
        }
        let cf = Arc::new(cf);
        self.features.pending.push(PendingCf {
            cf: cf.clone(),
            iteration: self.iteration,
        });
        cf
    }

    fn pick_member(&self, rng: &mut TaskRng, exclude: Option<&CfKey>) -> Option<Cf> {
        let members = self.features.ol.members();
        let weights: Vec<f64> = members
            .iter()
            .map(|m| {
                if Some(m.key()) == exclude {
                    0.0
                } else {
                    self.column.get(m.key()).copied().unwrap_or(0.0)
                }
            })
            .collect();
        if weights.iter().all(|w| *w <= 0.0) {
            let pool: Vec<&Cf> = members.iter().filter(|m| Some(m.key()) != exclude).collect();
            if pool.is_empty() {
                return None;
            }
            return Some(pool[rng.gen_range(0..pool.len())].clone());
        }
        roulette_or_uniform(&weights, rng).map(|i| members[i].clone())
    }

    /// Grows a new fragment from one or two roulette-selected OL members.
    pub fn generate_cf(&mut self, rng: &mut TaskRng) -> Cf {
        for _ in 0..self.features.params.generate_tries {
            let op = Operator::ALL[rng.gen_range(0..Operator::ALL.len())];
            let Some(a) = self.pick_member(rng, None) else {
                break;
            };
            let grown = match op {
                Operator::Not => a.negated(),
                Operator::Binary(_) => {
                    let b = if self.features.ol.len() > 1 {
                        self.pick_member(rng, Some(a.key()))
                    } else {
                        Some(a.clone())
                    };
                    let Some(b) = b else { break };
                    CodeFragment::apply(op, &a, &b)
                }
            };
            // constants say nothing about the input and only pad conditions;
            // wide fragments skip the check, their truth table is too big
            let constant = grown.distinct_leaves().len() <= CONSTANT_CHECK_LEAVES && grown.is_constant();
            if grown.complexity() <= self.features.leaf_cap && !constant {
                self.features.stats.generated += 1;
                return self.intern(grown.canonicalized());
            }
        }
        let k = rng.gen_range(0..self.features.arity);
        self.intern(CodeFragment::leaf(k))
    }

    /// Roulette over the OL (votes = CF-fitness) plus at most one external
    /// fragment with its adjusted vote.
    fn reuse_cf(&mut self, rng: &mut TaskRng) -> Cf {
        let task = self.features.task;
        let external = self
            .external
            .as_mut()
            .and_then(|provider| provider.select_external(task));
        let members = self.features.ol.members();
        let mut weights: Vec<f64> = members
            .iter()
            .map(|m| self.column.get(m.key()).copied().unwrap_or(0.0))
            .collect();
        if let Some((_, vote)) = &external {
            self.features.stats.external_offered += 1;
            weights.push(*vote);
        }
        self.features.stats.reused += 1;
        if weights.iter().all(|w| *w <= 0.0) {
            return members[rng.gen_range(0..members.len())].clone();
        }
        let i = roulette_or_uniform(&weights, rng).expect("non-empty pool");
        if i < members.len() {
            members[i].clone()
        } else {
            self.features.stats.external_selected += 1;
            let (cf, vote) = external.expect("external slot");
            if let Some(provider) = self.external.as_mut() {
                provider.on_selected(task, &cf, vote);
            }
            cf
        }
    }
}

impl CfSource for FeatureContext<'_> {
    fn request_cf(&mut self, rng: &mut TaskRng) -> Cf {
        self.features.stats.requests += 1;
        if self.features.ol.is_empty() || rng.gen::<f64>() < self.features.params.generate_prob {
            self.generate_cf(rng)
        } else {
            self.reuse_cf(rng)
        }
    }

    fn negate(&mut self, cf: &Cf) -> Cf {
        self.intern(cf.negated())
    }

    fn observe(&mut self, condition: &[Cf], f_rate: f64) {
        let keep = 1.0 - self.features.params.decay;
        for cf in condition {
            let entry = self.column.entry(cf.key().clone()).or_insert(0.0);
            *entry = (*entry * keep).max(f_rate);
            self.features.ol.offer(cf, self.column);
        }
    }
}
