use std::collections::HashMap;

use crate::types::Observation;

/// Anything that scores actions in a state.
pub trait ActionValues {
    fn n_actions(&self) -> usize;

    fn value(&self, s: &Observation, a: usize) -> f64;

    /// Highest-valued action; ties go to the lowest id.
    fn greedy(&self, s: &Observation) -> usize {
        let mut best = 0;
        let mut best_v = self.value(s, 0);
        for a in 1..self.n_actions() {
            let v = self.value(s, a);
            if v > best_v {
                best = a;
                best_v = v;
            }
        }
        best
    }
}

/// Tabular action values, zero for unseen entries.
#[derive(Clone, Debug)]
pub struct QTable {
    values: HashMap<Observation, Vec<f64>>,
    n_actions: usize,
    pub learning_rate: f64,
    pub discount: f64,
}

impl QTable {
    pub fn new(n_actions: usize, learning_rate: f64, discount: f64) -> Self {
        Self {
            values: HashMap::new(),
            n_actions,
            learning_rate,
            discount,
        }
    }

    pub fn get(&self, s: &Observation, a: usize) -> f64 {
        self.values.get(s).map_or(0.0, |row| row[a])
    }

    pub fn set(&mut self, s: &Observation, a: usize, v: f64) {
        let n = self.n_actions;
        self.values.entry(s.clone()).or_insert_with(|| vec![0.0; n])[a] = v;
    }

    /// `Q(s, a) += learning_rate · error`.
    pub fn apply(&mut self, s: &Observation, a: usize, error: f64) {
        let step = self.learning_rate * error;
        let n = self.n_actions;
        match self.values.get_mut(s) {
            Some(row) => row[a] += step,
            None => {
                let mut row = vec![0.0; n];
                row[a] = step;
                self.values.insert(s.clone(), row);
            }
        }
    }

    pub fn row(&self, s: &Observation) -> Option<&[f64]> {
        self.values.get(s).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Observation, &[f64])> {
        self.values.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.values.values().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .values()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl ActionValues for QTable {
    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn value(&self, s: &Observation, a: usize) -> f64 {
        self.get(s, a)
    }
}

/// The two tables of Double Q-learning; acting uses their sum.
#[derive(Clone, Debug)]
pub struct DoubleQ {
    pub a: QTable,
    pub b: QTable,
}

impl DoubleQ {
    pub fn new(n_actions: usize, learning_rate: f64, discount: f64) -> Self {
        Self {
            a: QTable::new(n_actions, learning_rate, discount),
            b: QTable::new(n_actions, learning_rate, discount),
        }
    }

    /// `(online, target)` pair; `swap` selects table `b` as the online one.
    pub fn pair_mut(&mut self, swap: bool) -> (&mut QTable, &QTable) {
        if swap {
            (&mut self.b, &self.a)
        } else {
            (&mut self.a, &self.b)
        }
    }
}

impl ActionValues for DoubleQ {
    fn n_actions(&self) -> usize {
        self.a.n_actions
    }

    fn value(&self, s: &Observation, a: usize) -> f64 {
        self.a.get(s, a) + self.b.get(s, a)
    }
}
