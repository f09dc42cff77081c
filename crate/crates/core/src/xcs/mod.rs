//! A single accuracy-based learning classifier system working on one binary
//! task, with rule conditions made of code fragments.

mod classifier;

pub use classifier::{Classifier, ClassifierRow, Condition};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fragment::Cf;
use crate::rng::{roulette_or_uniform, TaskRng};

pub const MAX_REWARD: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    Roulette,
    Tournament,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XcsParams {
    /// Population capacity N in microclassifiers.
    pub population_size: usize,
    pub beta: f64,
    pub alpha: f64,
    pub epsilon0: f64,
    pub nu: f64,
    pub chi: f64,
    pub mu: f64,
    pub theta_ga: f64,
    pub theta_del: u64,
    pub theta_sub: u64,
    /// Fraction of mean fitness below which experienced rules get a
    /// larger deletion vote.
    pub delta: f64,
    pub initial_prediction: f64,
    pub initial_error: f64,
    pub initial_fitness: f64,
    pub p_spec: f64,
    /// Maximum condition length as a multiple of the input arity.
    pub condition_length_factor: usize,
    pub covering_tries: usize,
    pub selection: Selection,
    pub tournament_fraction: f64,
    pub ga_subsumption: bool,
    pub action_set_subsumption: bool,
    /// Efficient classifiers have `f_rate >= efficiency_ratio * max f_rate`.
    pub efficiency_ratio: f64,
    /// Only efficient classifiers that are also reliable (see
    /// [`XcsSystem::is_reliable`]) update CF-fitness.
    pub observe_reliable_only: bool,
}

impl Default for XcsParams {
    fn default() -> Self {
        XcsParams {
            population_size: 2000,
            beta: 0.2,
            alpha: 0.1,
            epsilon0: 10.0,
            nu: 5.0,
            chi: 0.2,
            mu: 0.9,
            theta_ga: 25.0,
            theta_del: 20,
            theta_sub: 50,
            delta: 0.1,
            initial_prediction: 10.0,
            initial_error: 0.0,
            initial_fitness: 0.01,
            p_spec: 0.25,
            condition_length_factor: 2,
            covering_tries: 10,
            selection: Selection::Roulette,
            tournament_fraction: 0.4,
            ga_subsumption: true,
            action_set_subsumption: true,
            efficiency_ratio: 0.8,
            observe_reliable_only: true,
        }
    }
}

/// Where rule construction gets its fragments from.
pub trait CfSource {
    /// A fragment for a rule condition. It need not match the current state.
    fn request_cf(&mut self, rng: &mut TaskRng) -> Cf;
    /// Logical negation of `cf`, registered wherever the source keeps
    /// fragments.
    fn negate(&mut self, cf: &Cf) -> Cf;
    /// Called once per efficient classifier of each updated action set.
    fn observe(&mut self, condition: &[Cf], f_rate: f64);
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PredictionArray {
    pub value: [Option<f64>; 2],
    pub weight: [f64; 2],
}

impl PredictionArray {
    pub fn build<'a>(members: impl IntoIterator<Item = &'a Classifier>) -> Self {
        let mut weighted = [0.0f64; 2];
        let mut weight = [0.0f64; 2];
        let mut present = [false; 2];
        for cl in members {
            let a = cl.action as usize;
            present[a] = true;
            weighted[a] += cl.prediction * cl.fitness;
            weight[a] += cl.fitness;
        }
        let value = [0, 1].map(|a| {
            present[a].then(|| {
                if weight[a] > 0.0 {
                    weighted[a] / weight[a]
                } else {
                    0.0
                }
            })
        });
        PredictionArray { value, weight }
    }

    /// Greedy action; ties and an empty array are resolved at random.
    pub fn best_action(&self, rng: &mut TaskRng) -> bool {
        match self.value {
            [None, None] => rng.gen(),
            [Some(_), None] => false,
            [None, Some(_)] => true,
            [Some(v0), Some(v1)] => {
                if v0 == v1 {
                    rng.gen()
                } else {
                    v1 > v0
                }
            }
        }
    }
}

/// Probability of action 1 as the share of fitness-weighted prediction.
/// A single represented action gets probability 1; a zero denominator with
/// both actions present (or no members at all) gives 0.5.
pub fn class_probability<'a>(members: impl IntoIterator<Item = &'a Classifier>) -> f64 {
    let mut mass = [0.0f64; 2];
    let mut present = [false; 2];
    for cl in members {
        let a = cl.action as usize;
        present[a] = true;
        mass[a] += cl.prediction * cl.fitness;
    }
    match present {
        [false, false] => 0.5,
        [true, false] => 0.0,
        [false, true] => 1.0,
        [true, true] => {
            let total = mass[0] + mass[1];
            if total > 0.0 {
                mass[1] / total
            } else {
                0.5
            }
        }
    }
}

/// Positions (into `members`) of the classifiers whose fitness per leaf is
/// at least `ratio` times the best in the set.
pub fn efficient_classifiers(members: &[&Classifier], ratio: f64) -> Vec<usize> {
    let best = members
        .iter()
        .map(|cl| cl.f_rate())
        .fold(f64::NEG_INFINITY, f64::max);
    members
        .iter()
        .enumerate()
        .filter(|(_, cl)| cl.f_rate() >= ratio * best)
        .map(|(i, _)| i)
        .collect()
}

pub fn subsumes(general: &Classifier, specific: &Classifier, params: &XcsParams) -> bool {
    could_subsume(general, params)
        && general.action == specific.action
        && general.condition.is_strict_subset_of(&specific.condition)
}

fn could_subsume(cl: &Classifier, params: &XcsParams) -> bool {
    cl.experience > params.theta_sub && cl.error < params.epsilon0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GaStats {
    pub events: u64,
    pub offspring: u64,
    pub mutated: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExploreOutcome {
    pub action: bool,
    pub correct: bool,
    /// Mean generality rate of the efficient, error-free members of the
    /// action set, if there were any.
    pub generality_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mutation {
    Add,
    Remove,
    Replace,
}

#[derive(Debug, Clone)]
pub struct XcsSystem {
    params: XcsParams,
    arity: usize,
    max_condition_length: usize,
    population: Vec<Classifier>,
    time: u64,
    ga_stats: GaStats,
}

impl XcsSystem {
    pub fn new(arity: usize, params: XcsParams) -> Self {
        XcsSystem {
            max_condition_length: params.condition_length_factor * arity,
            params,
            arity,
            population: Vec::new(),
            time: 0,
            ga_stats: GaStats::default(),
        }
    }

    pub fn params(&self) -> &XcsParams {
        &self.params
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn max_condition_length(&self) -> usize {
        self.max_condition_length
    }

    /// Learning iterations completed.
    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn population(&self) -> &[Classifier] {
        &self.population
    }

    pub fn ga_stats(&self) -> GaStats {
        self.ga_stats
    }

    pub fn numerosity_sum(&self) -> usize {
        self.population.iter().map(|cl| cl.numerosity as usize).sum()
    }

    pub fn snapshot(&self) -> Vec<ClassifierRow> {
        self.population.iter().map(Classifier::snapshot).collect()
    }

    pub fn match_indices(&self, state: &[bool]) -> Vec<usize> {
        self.population
            .iter()
            .enumerate()
            .filter(|(_, cl)| cl.matches(state))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn prediction_array(&self, state: &[bool]) -> PredictionArray {
        PredictionArray::build(self.population.iter().filter(|cl| cl.matches(state)))
    }

    /// P(action 1) over the match set, or `None` when nothing matches.
    pub fn class_probability(&self, state: &[bool]) -> Option<f64> {
        let matched: Vec<&Classifier> = self.population.iter().filter(|cl| cl.matches(state)).collect();
        (!matched.is_empty()).then(|| class_probability(matched))
    }

    /// Greedy action for `state`, without any learning.
    pub fn exploit(&self, state: &[bool], rng: &mut TaskRng) -> bool {
        self.prediction_array(state).best_action(rng)
    }

    /// Increments every classifier's match or no-match counter for `state`
    /// and returns the match set.
    pub fn update_generality_counters(&mut self, state: &[bool]) -> Vec<usize> {
        let mut matched = Vec::new();
        for (i, cl) in self.population.iter_mut().enumerate() {
            if cl.matches(state) {
                cl.matches += 1;
                matched.push(i);
            } else {
                cl.no_matches += 1;
            }
        }
        matched
    }

    /// One learning (explore) trial.
    pub fn explore<S: CfSource + ?Sized>(
        &mut self,
        state: &[bool],
        label: bool,
        source: &mut S,
        rng: &mut TaskRng,
    ) -> ExploreOutcome {
        let mut match_set = self.update_generality_counters(state);
        for _ in 0..4 {
            let mut covered = false;
            for action in [false, true] {
                if !match_set.iter().any(|&i| self.population[i].action == action) {
                    let mut cl = self.cover(state, action, source, rng);
                    cl.matches = 1;
                    self.insert(cl);
                    covered = true;
                }
            }
            if !covered {
                break;
            }
            self.delete_while_over(rng);
            match_set = self.match_indices(state);
        }

        let action: bool = rng.gen();
        let action_set: Vec<usize> = match_set
            .into_iter()
            .filter(|&i| self.population[i].action == action)
            .collect();
        let correct = action == label;
        let reward = if correct { MAX_REWARD } else { 0.0 };

        let mut generality_rate = None;
        if !action_set.is_empty() {
            let action_set = self.update_action_set(&action_set, reward);
            generality_rate = self.observe_efficient(&action_set, source);
            self.run_ga(&action_set, state, source, rng);
        }
        self.time += 1;
        ExploreOutcome {
            action,
            correct,
            generality_rate,
        }
    }

    /// Accurate and past the averaging phase of its estimates.
    pub fn is_reliable(&self, cl: &Classifier) -> bool {
        cl.error < self.params.epsilon0 && cl.experience as f64 > 1.0 / self.params.beta
    }

    fn observe_efficient<S: CfSource + ?Sized>(&self, action_set: &[usize], source: &mut S) -> Option<f64> {
        let members: Vec<&Classifier> = action_set.iter().map(|&i| &self.population[i]).collect();
        let efficient = efficient_classifiers(&members, self.params.efficiency_ratio);
        let mut rate_sum = 0.0;
        let mut rate_count = 0usize;
        for &e in &efficient {
            let cl = members[e];
            if !self.params.observe_reliable_only || self.is_reliable(cl) {
                source.observe(cl.condition.cfs(), cl.f_rate());
            }
            if cl.error == 0.0 {
                rate_sum += cl.generality_rate();
                rate_count += 1;
            }
        }
        (rate_count > 0).then(|| rate_sum / rate_count as f64)
    }

    /// Builds a classifier for `action` that matches `state`.
    pub fn cover<S: CfSource + ?Sized>(
        &self,
        state: &[bool],
        action: bool,
        source: &mut S,
        rng: &mut TaskRng,
    ) -> Classifier {
        let mut cfs: Vec<Cf> = Vec::new();
        for _ in 0..self.max_condition_length {
            if rng.gen::<f64>() < self.params.p_spec {
                if let Some(cf) = self.matching_cf(state, &cfs, source, rng) {
                    cfs.push(cf);
                }
            }
        }
        let mut cl = Classifier::new(Condition::new(cfs), action);
        cl.prediction = self.params.initial_prediction;
        cl.error = self.params.initial_error;
        cl.fitness = self.params.initial_fitness;
        cl.ga_time = self.time;
        cl
    }

    /// Requests a fragment that evaluates to 1 on `state` and is not
    /// already in `existing`. A non-matching fragment is negated.
    fn matching_cf<S: CfSource + ?Sized>(
        &self,
        state: &[bool],
        existing: &[Cf],
        source: &mut S,
        rng: &mut TaskRng,
    ) -> Option<Cf> {
        for _ in 0..self.params.covering_tries {
            let mut cf = source.request_cf(rng);
            if cf.max_leaf() >= self.arity {
                continue;
            }
            if !cf.eval(state) {
                cf = source.negate(&cf);
            }
            if !existing.iter().any(|e| e.key() == cf.key()) {
                return Some(cf);
            }
        }
        None
    }

    /// Adds a classifier, merging it into an existing macroclassifier with
    /// the same condition key-set and action.
    pub fn insert(&mut self, cl: Classifier) {
        if let Some(existing) = self
            .population
            .iter_mut()
            .find(|c| c.action == cl.action && c.condition.same_keys(&cl.condition))
        {
            existing.numerosity += cl.numerosity;
        } else {
            self.population.push(cl);
        }
    }

    /// Reinforcement update of an action set, followed by action-set
    /// subsumption. Returns the (re-indexed) surviving action set.
    pub fn update_action_set(&mut self, action_set: &[usize], reward: f64) -> Vec<usize> {
        let p = &self.params;
        let numerosity: f64 = action_set
            .iter()
            .map(|&i| self.population[i].numerosity as f64)
            .sum();
        for &i in action_set {
            let cl = &mut self.population[i];
            cl.experience += 1;
            let exp = cl.experience as f64;
            let rate = if exp < 1.0 / p.beta { 1.0 / exp } else { p.beta };
            cl.prediction += rate * (reward - cl.prediction);
            cl.error += rate * ((reward - cl.prediction).abs() - cl.error);
            cl.action_set_size += rate * (numerosity - cl.action_set_size);
        }

        let accuracy: Vec<f64> = action_set
            .iter()
            .map(|&i| {
                let cl = &self.population[i];
                if cl.error < p.epsilon0 {
                    1.0
                } else {
                    p.alpha * (cl.error / p.epsilon0).powf(-p.nu)
                }
            })
            .collect();
        let accuracy_sum: f64 = action_set
            .iter()
            .zip(&accuracy)
            .map(|(&i, k)| k * self.population[i].numerosity as f64)
            .sum();
        for (&i, k) in action_set.iter().zip(&accuracy) {
            let cl = &mut self.population[i];
            let relative = k * cl.numerosity as f64 / accuracy_sum;
            cl.fitness += p.beta * (relative - cl.fitness);
        }

        if self.params.action_set_subsumption {
            self.action_set_subsumption(action_set)
        } else {
            action_set.to_vec()
        }
    }

    fn action_set_subsumption(&mut self, action_set: &[usize]) -> Vec<usize> {
        let subsumer = action_set
            .iter()
            .copied()
            .filter(|&i| could_subsume(&self.population[i], &self.params))
            .min_by_key(|&i| self.population[i].condition.keys().len());
        let Some(s) = subsumer else {
            return action_set.to_vec();
        };
        let mut absorbed = 0u32;
        for &i in action_set {
            if i != s
                && self.population[s]
                    .condition
                    .is_strict_subset_of(&self.population[i].condition)
            {
                absorbed += self.population[i].numerosity;
                self.population[i].numerosity = 0;
            }
        }
        if absorbed == 0 {
            return action_set.to_vec();
        }
        self.population[s].numerosity += absorbed;
        let remap = self.compact();
        action_set.iter().filter_map(|&i| remap[i]).collect()
    }

    /// Drops zero-numerosity entries; returns the old-to-new index map.
    fn compact(&mut self) -> Vec<Option<usize>> {
        let mut remap = Vec::with_capacity(self.population.len());
        let mut next = 0;
        for cl in &self.population {
            if cl.numerosity > 0 {
                remap.push(Some(next));
                next += 1;
            } else {
                remap.push(None);
            }
        }
        self.population.retain(|cl| cl.numerosity > 0);
        remap
    }

    /// Steady-state GA within the action set, triggered when the average
    /// time since the set's last GA exceeds theta_GA.
    pub fn run_ga<S: CfSource + ?Sized>(
        &mut self,
        action_set: &[usize],
        state: &[bool],
        source: &mut S,
        rng: &mut TaskRng,
    ) {
        if action_set.is_empty() {
            return;
        }
        let numerosity: f64 = action_set
            .iter()
            .map(|&i| self.population[i].numerosity as f64)
            .sum();
        let mean_stamp: f64 = action_set
            .iter()
            .map(|&i| {
                let cl = &self.population[i];
                cl.ga_time as f64 * cl.numerosity as f64
            })
            .sum::<f64>()
            / numerosity;
        if self.time as f64 - mean_stamp <= self.params.theta_ga {
            return;
        }
        for &i in action_set {
            self.population[i].ga_time = self.time;
        }
        self.ga_stats.events += 1;

        let p1 = self.select_parent(action_set, rng);
        let p2 = self.select_parent(action_set, rng);
        let parent_fitness = 0.5
            * (self.population[p1].fitness / self.population[p1].numerosity as f64
                + self.population[p2].fitness / self.population[p2].numerosity as f64);
        let mut children = [self.offspring(p1), self.offspring(p2)];

        if rng.gen::<f64>() < self.params.chi {
            let (a, b) = self.crossover(&children[0].condition, &children[1].condition, rng);
            let prediction = 0.5 * (children[0].prediction + children[1].prediction);
            let error = 0.5 * (children[0].error + children[1].error);
            for (child, condition) in children.iter_mut().zip([a, b]) {
                child.condition = condition;
                child.prediction = prediction;
                child.error = error;
            }
        }
        for child in children.iter_mut() {
            child.fitness = 0.1 * parent_fitness;
            self.ga_stats.offspring += 1;
            if rng.gen::<f64>() < self.params.mu {
                self.ga_stats.mutated += 1;
                self.mutate(child, state, source, rng);
            }
        }

        for child in children {
            if self.params.ga_subsumption {
                if subsumes(&self.population[p1], &child, &self.params) {
                    self.population[p1].numerosity += 1;
                    continue;
                }
                if subsumes(&self.population[p2], &child, &self.params) {
                    self.population[p2].numerosity += 1;
                    continue;
                }
            }
            self.insert(child);
        }
        self.delete_while_over(rng);
    }

    fn select_parent(&self, action_set: &[usize], rng: &mut TaskRng) -> usize {
        match self.params.selection {
            Selection::Roulette => {
                let weights: Vec<f64> = action_set
                    .iter()
                    .map(|&i| self.population[i].fitness)
                    .collect();
                action_set[roulette_or_uniform(&weights, rng).expect("non-empty action set")]
            }
            Selection::Tournament => {
                let size = ((self.params.tournament_fraction * action_set.len() as f64).ceil() as usize)
                    .clamp(1, action_set.len());
                action_set
                    .choose_multiple(rng, size)
                    .copied()
                    .max_by(|&a, &b| {
                        let fa = self.population[a].fitness / self.population[a].numerosity as f64;
                        let fb = self.population[b].fitness / self.population[b].numerosity as f64;
                        fa.total_cmp(&fb)
                    })
                    .expect("non-empty tournament")
            }
        }
    }

    fn offspring(&self, parent: usize) -> Classifier {
        let p = &self.population[parent];
        Classifier {
            condition: p.condition.clone(),
            action: p.action,
            prediction: p.prediction,
            error: p.error,
            fitness: p.fitness,
            numerosity: 1,
            experience: 0,
            action_set_size: p.action_set_size,
            ga_time: self.time,
            matches: 1,
            no_matches: 0,
        }
    }

    /// Slot-wise uniform crossover over `max_condition_length` slots.
    fn crossover(&self, a: &Condition, b: &Condition, rng: &mut TaskRng) -> (Condition, Condition) {
        let mut left: Vec<Option<Cf>> = Vec::with_capacity(self.max_condition_length);
        let mut right: Vec<Option<Cf>> = Vec::with_capacity(self.max_condition_length);
        for slot in 0..self.max_condition_length {
            let mut x = a.cfs().get(slot).cloned();
            let mut y = b.cfs().get(slot).cloned();
            if rng.gen::<bool>() {
                std::mem::swap(&mut x, &mut y);
            }
            left.push(x);
            right.push(y);
        }
        (compact_slots(left), compact_slots(right))
    }

    fn mutate<S: CfSource + ?Sized>(
        &self,
        child: &mut Classifier,
        state: &[bool],
        source: &mut S,
        rng: &mut TaskRng,
    ) {
        let mut cfs = child.condition.cfs().to_vec();
        let mut menu = Vec::with_capacity(3);
        if cfs.len() < self.max_condition_length {
            menu.push(Mutation::Add);
        }
        if !cfs.is_empty() {
            menu.push(Mutation::Remove);
            menu.push(Mutation::Replace);
        }
        let Some(&mutation) = menu.choose(rng) else {
            return;
        };
        match mutation {
            Mutation::Add => {
                if let Some(cf) = self.matching_cf(state, &cfs, source, rng) {
                    cfs.push(cf);
                }
            }
            Mutation::Remove => {
                let slot = rng.gen_range(0..cfs.len());
                cfs.remove(slot);
            }
            Mutation::Replace => {
                let slot = rng.gen_range(0..cfs.len());
                let old = cfs.remove(slot);
                let new = self.matching_cf(state, &cfs, source, rng).unwrap_or(old);
                cfs.insert(slot, new);
            }
        }
        child.condition = Condition::new(cfs);
    }

    fn delete_while_over(&mut self, rng: &mut TaskRng) {
        let mut total = self.numerosity_sum();
        while total > self.params.population_size {
            self.delete_one(rng);
            total -= 1;
        }
    }

    /// Removes `numerosity` until the population fits its capacity.
    pub fn delete_from_population(&mut self, rng: &mut TaskRng) {
        self.delete_while_over(rng);
    }

    pub fn deletion_votes(&self) -> Vec<f64> {
        let micro = self.numerosity_sum() as f64;
        let mean_fitness = self.population.iter().map(|cl| cl.fitness).sum::<f64>() / micro;
        self.population
            .iter()
            .map(|cl| {
                let vote = cl.action_set_size * cl.numerosity as f64;
                let micro_fitness = cl.fitness / cl.numerosity as f64;
                if cl.experience > self.params.theta_del && micro_fitness < self.params.delta * mean_fitness {
                    vote * mean_fitness / micro_fitness.max(f64::MIN_POSITIVE)
                } else {
                    vote
                }
            })
            .collect()
    }

    fn delete_one(&mut self, rng: &mut TaskRng) {
        let votes = self.deletion_votes();
        let Some(i) = roulette_or_uniform(&votes, rng) else {
            return;
        };
        let cl = &mut self.population[i];
        cl.numerosity -= 1;
        if cl.numerosity == 0 {
            self.population.swap_remove(i);
        }
    }

    /// Direct access for fixtures and analysis tools.
    pub fn population_mut(&mut self) -> &mut Vec<Classifier> {
        &mut self.population
    }
}

fn compact_slots(slots: Vec<Option<Cf>>) -> Condition {
    let mut cfs: Vec<Cf> = Vec::new();
    for cf in slots.into_iter().flatten() {
        if !cfs.iter().any(|c| c.key() == cf.key()) {
            cfs.push(cf);
        }
    }
    Condition::new(cfs)
}
