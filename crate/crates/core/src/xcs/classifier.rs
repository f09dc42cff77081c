use std::hash::Hasher;

use fnv::FnvHasher;
use serde::Serialize;

use crate::fragment::{Cf, CfKey};

/// A rule condition: a conjunction of code fragments. The empty condition
/// matches every state.
#[derive(Debug, Clone)]
pub struct Condition {
    cfs: Vec<Cf>,
    // sorted, deduplicated canonical keys
    keys: Vec<CfKey>,
    fingerprint: u64,
    complexity: usize,
}

impl Condition {
    pub fn new(cfs: Vec<Cf>) -> Self {
        let mut keys: Vec<CfKey> = cfs.iter().map(|cf| cf.key().clone()).collect();
        keys.sort();
        keys.dedup();
        let mut hasher = FnvHasher::default();
        for key in &keys {
            hasher.write_u64(key.fingerprint());
        }
        Condition {
            complexity: cfs.iter().map(|cf| cf.complexity()).sum(),
            fingerprint: hasher.finish(),
            keys,
            cfs,
        }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new())
    }

    #[inline]
    pub fn matches(&self, state: &[bool]) -> bool {
        self.cfs.iter().all(|cf| cf.eval(state))
    }

    pub fn cfs(&self) -> &[Cf] {
        &self.cfs
    }

    pub fn keys(&self) -> &[CfKey] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.cfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cfs.is_empty()
    }

    /// Total leaf count over all fragments.
    pub fn complexity(&self) -> usize {
        self.complexity
    }

    pub fn contains_key(&self, key: &CfKey) -> bool {
        self.keys.binary_search(key).is_ok()
    }

    pub fn same_keys(&self, other: &Condition) -> bool {
        self.fingerprint == other.fingerprint && self.keys == other.keys
    }

    /// True when every key of `self` appears in `other` and `other` has at
    /// least one more.
    pub fn is_strict_subset_of(&self, other: &Condition) -> bool {
        if self.keys.len() >= other.keys.len() {
            return false;
        }
        let mut rest = other.keys.iter();
        'outer: for key in &self.keys {
            for candidate in rest.by_ref() {
                if candidate == key {
                    continue 'outer;
                }
                if candidate > key {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn render(&self) -> String {
        self.cfs
            .iter()
            .map(|cf| cf.render())
            .collect::<Vec<_>>()
            .join(" & ")
    }
}

#[derive(Debug, Clone)]
pub struct Classifier {
    pub condition: Condition,
    pub action: bool,
    pub prediction: f64,
    pub error: f64,
    pub fitness: f64,
    pub numerosity: u32,
    pub experience: u64,
    pub action_set_size: f64,
    pub ga_time: u64,
    pub matches: u64,
    pub no_matches: u64,
}

impl Classifier {
    pub fn new(condition: Condition, action: bool) -> Self {
        Classifier {
            condition,
            action,
            prediction: 10.0,
            error: 0.0,
            fitness: 0.01,
            numerosity: 1,
            experience: 0,
            action_set_size: 1.0,
            ga_time: 0,
            matches: 0,
            no_matches: 0,
        }
    }

    #[inline]
    pub fn matches(&self, state: &[bool]) -> bool {
        self.condition.matches(state)
    }

    pub fn complexity(&self) -> usize {
        self.condition.complexity()
    }

    /// Fitness per leaf node.
    pub fn f_rate(&self) -> f64 {
        self.fitness / self.complexity().max(1) as f64
    }

    /// Fraction of observed states this rule matched since creation.
    pub fn generality(&self) -> f64 {
        let seen = self.matches + self.no_matches;
        if seen == 0 {
            0.0
        } else {
            self.matches as f64 / seen as f64
        }
    }

    pub fn generality_rate(&self) -> f64 {
        self.generality() / self.complexity().max(1) as f64
    }

    pub fn snapshot(&self) -> ClassifierRow {
        ClassifierRow {
            condition: self.condition.render(),
            action: self.action as u8,
            prediction: self.prediction,
            error: self.error,
            fitness: self.fitness,
            numerosity: self.numerosity,
            experience: self.experience,
            complexity: self.complexity(),
            generality: self.generality(),
        }
    }
}

/// One macroclassifier in a population export.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifierRow {
    pub condition: String,
    pub action: u8,
    pub prediction: f64,
    pub error: f64,
    pub fitness: f64,
    pub numerosity: u32,
    pub experience: u64,
    pub complexity: usize,
    pub generality: f64,
}
