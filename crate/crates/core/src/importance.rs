//! State importance: the optimal-path indicator of a successful trajectory,
//! its exact expectation over the trajectories a policy generates, and the
//! counting estimators used in practice.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::sampling::first_visit_sample;
use crate::types::{Mdp, Observation, SuccessfulTrajectory, Trajectory, Transition};

/// Which states of the trajectory graph count as "on the optimal path".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PathMode {
    /// Union of the states of every shortest start-to-goal path.
    #[default]
    AnyShortest,
    /// One shortest path, ties broken by earliest first appearance.
    Canonical,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CountingScheme {
    /// At most one count per state per trajectory.
    #[default]
    FirstVisit,
    /// Raw visit counts.
    EveryVisit,
}

/// Nonnegative importance per observation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ImportanceMap {
    values: BTreeMap<Observation, f64>,
}

impl ImportanceMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Missing observations have importance 0.
    pub fn get(&self, s: &Observation) -> f64 {
        self.values.get(s).copied().unwrap_or(0.0)
    }

    pub fn add(&mut self, s: &Observation, amount: f64) {
        *self.values.entry(s.clone()).or_insert(0.0) += amount;
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Observation, f64)> {
        self.values.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.values().sum()
    }

    fn scale(&mut self, by: f64) {
        for v in self.values.values_mut() {
            *v *= by;
        }
    }
}

/// Directed graph of the `(state, next_state)` pairs a trajectory used.
#[derive(Clone, Debug)]
pub struct TransitionGraph {
    nodes: Vec<Observation>,
    succ: Vec<Vec<usize>>,
    start: usize,
    goal: usize,
}

impl TransitionGraph {
    pub fn from_trajectory(traj: &SuccessfulTrajectory) -> Self {
        let pairs: Vec<_> = traj
            .transitions()
            .iter()
            .map(|t| (t.state.clone(), t.next_state.clone()))
            .collect();
        Self::from_pairs(&pairs).expect("successful trajectories are nonempty")
    }

    /// Graph over observed pairs, starting at the first pair's source and
    /// ending at the last pair's target. Nodes are numbered in order of
    /// first appearance.
    pub fn from_pairs(pairs: &[(Observation, Observation)]) -> Result<Self> {
        let (first, last) = match (pairs.first(), pairs.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => {
                return Err(Error::InvalidTrajectory(
                    "cannot build a path graph from zero transitions".into(),
                ))
            }
        };
        let mut index: HashMap<Observation, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut succ: Vec<Vec<usize>> = Vec::new();
        let mut intern =
            |s: &Observation, nodes: &mut Vec<Observation>, succ: &mut Vec<Vec<usize>>| {
                *index.entry(s.clone()).or_insert_with(|| {
                    nodes.push(s.clone());
                    succ.push(Vec::new());
                    nodes.len() - 1
                })
            };
        for (a, b) in pairs {
            let ia = intern(a, &mut nodes, &mut succ);
            let ib = intern(b, &mut nodes, &mut succ);
            if !succ[ia].contains(&ib) {
                succ[ia].push(ib);
            }
        }
        for list in &mut succ {
            list.sort_unstable();
        }
        let start = intern(&first.0, &mut nodes, &mut succ);
        let goal = intern(&last.1, &mut nodes, &mut succ);
        Ok(Self {
            nodes,
            succ,
            start,
            goal,
        })
    }

    pub fn nodes(&self) -> &[Observation] {
        &self.nodes
    }

    fn bfs(&self, from: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.nodes.len()];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            let next = dist[v].map(|d| d + 1);
            for &w in &adj[v] {
                if dist[w].is_none() {
                    dist[w] = next;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    fn reversed(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.nodes.len()];
        for (v, list) in self.succ.iter().enumerate() {
            for &w in list {
                pred[w].push(v);
            }
        }
        pred
    }

    /// Length of the shortest start-to-goal path in edges.
    pub fn shortest_length(&self) -> usize {
        self.bfs(self.start, &self.succ)[self.goal].expect("goal is reachable by construction")
    }

    pub fn optimal_states(&self, mode: PathMode) -> BTreeSet<Observation> {
        let to_goal = self.bfs(self.goal, &self.reversed());
        match mode {
            PathMode::AnyShortest => {
                let from_start = self.bfs(self.start, &self.succ);
                let best = from_start[self.goal].expect("goal is reachable by construction");
                (0..self.nodes.len())
                    .filter(|&v| matches!((from_start[v], to_goal[v]), (Some(a), Some(b)) if a + b == best))
                    .map(|v| self.nodes[v].clone())
                    .collect()
            }
            PathMode::Canonical => {
                let mut out = BTreeSet::from([self.nodes[self.start].clone()]);
                let mut v = self.start;
                while v != self.goal {
                    let d = to_goal[v].expect("path vertices reach the goal");
                    v = *self.succ[v]
                        .iter()
                        .find(|&&w| to_goal[w] == Some(d - 1))
                        .expect("a successor one step closer exists");
                    out.insert(self.nodes[v].clone());
                }
                out
            }
        }
    }
}

/// States on the optimal path(s) of the trajectory-induced graph.
pub fn optimal_path_states(traj: &SuccessfulTrajectory, mode: PathMode) -> BTreeSet<Observation> {
    TransitionGraph::from_trajectory(traj).optimal_states(mode)
}

/// 1 when `s` lies on the optimal path of `traj`, else 0.
pub fn importance_count(traj: &SuccessfulTrajectory, s: &Observation, mode: PathMode) -> u8 {
    u8::from(optimal_path_states(traj, mode).contains(s))
}

/// Estimated importance count of every visited state of one trajectory.
pub fn estimated_counts(
    traj: &SuccessfulTrajectory,
    scheme: CountingScheme,
) -> BTreeMap<Observation, f64> {
    let states = traj.states();
    match scheme {
        CountingScheme::FirstVisit => first_visit_sample(&states)
            .into_iter()
            .map(|s| (s, 1.0))
            .collect(),
        CountingScheme::EveryVisit => {
            let mut out = BTreeMap::new();
            for s in states {
                *out.entry(s).or_insert(0.0) += 1.0;
            }
            out
        }
    }
}

/// Average per-trajectory estimate over equally weighted trajectories.
pub fn estimate_importance(
    trajs: &[SuccessfulTrajectory],
    scheme: CountingScheme,
) -> ImportanceMap {
    let mut map = ImportanceMap::new();
    if trajs.is_empty() {
        return map;
    }
    for t in trajs {
        for (s, c) in estimated_counts(t, scheme) {
            map.add(&s, c);
        }
    }
    map.scale(1.0 / trajs.len() as f64);
    map
}

/// State-indexed action distribution for a finite MDP.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    probs: Vec<Vec<f64>>,
}

impl Policy {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        for (s, row) in probs.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidMdp(format!(
                    "policy row for state {s} is not a distribution"
                )));
            }
        }
        Ok(Self { probs })
    }

    pub fn uniform(mdp: &Mdp) -> Self {
        let p = 1.0 / mdp.n_actions() as f64;
        Self {
            probs: vec![vec![p; mdp.n_actions()]; mdp.n_states()],
        }
    }

    pub fn deterministic(mdp: &Mdp, actions: &[usize]) -> Result<Self> {
        if actions.len() != mdp.n_states() || actions.iter().any(|&a| a >= mdp.n_actions()) {
            return Err(Error::InvalidMdp(
                "one valid action per state required".into(),
            ));
        }
        let probs = actions
            .iter()
            .map(|&a| {
                let mut row = vec![0.0; mdp.n_actions()];
                row[a] = 1.0;
                row
            })
            .collect();
        Ok(Self { probs })
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s][a]
    }

    fn check(&self, mdp: &Mdp) -> Result<()> {
        if self.probs.len() != mdp.n_states()
            || self.probs.iter().any(|row| row.len() != mdp.n_actions())
        {
            return Err(Error::InvalidMdp(
                "policy shape does not match the MDP".into(),
            ));
        }
        Ok(())
    }
}

/// Successful trajectories with their exact probabilities under a policy.
#[derive(Clone, Debug)]
pub struct TrajectoryDistribution {
    pub entries: Vec<(SuccessfulTrajectory, f64)>,
    pub policy: Option<Policy>,
}

impl TrajectoryDistribution {
    pub fn new(entries: Vec<(SuccessfulTrajectory, f64)>) -> Self {
        Self {
            entries,
            policy: None,
        }
    }

    /// Total probability covered by the entries.
    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// `Σ_L I^L(s) p(L)` for every state touched by some entry.
    pub fn importance(&self, mode: PathMode) -> ImportanceMap {
        let mut map = ImportanceMap::new();
        for (traj, p) in &self.entries {
            let on_path = optimal_path_states(traj, mode);
            for s in traj.states() {
                map.add(&s, 0.0);
            }
            for s in on_path {
                map.add(&s, *p);
            }
        }
        map
    }
}

/// Result of exhaustively enumerating a policy's successful trajectories.
#[derive(Clone, Debug)]
pub struct ExactImportance {
    pub map: ImportanceMap,
    pub distribution: TrajectoryDistribution,
    /// Probability mass of the enumerated successful trajectories.
    pub mass: f64,
}

pub const DEFAULT_ENUMERATION_BUDGET: usize = 5_000_000;

/// Exact `M_π(s)` over successful trajectories of at most `length_cap`
/// transitions; a trajectory ends at its first positive reward.
pub fn exact_importance(
    mdp: &Mdp,
    policy: &Policy,
    length_cap: usize,
    mode: PathMode,
) -> Result<ExactImportance> {
    exact_importance_with_budget(mdp, policy, length_cap, mode, DEFAULT_ENUMERATION_BUDGET)
}

pub fn exact_importance_with_budget(
    mdp: &Mdp,
    policy: &Policy,
    length_cap: usize,
    mode: PathMode,
    budget: usize,
) -> Result<ExactImportance> {
    policy.check(mdp)?;
    let mut walker = Enumerator {
        mdp,
        policy,
        length_cap,
        budget,
        expanded: 0,
        path: Vec::new(),
        found: Vec::new(),
    };
    for (s, &p) in mdp.initial().iter().enumerate() {
        if p > 0.0 {
            walker.extend(s, p)?;
        }
    }
    let mut distribution = TrajectoryDistribution::new(walker.found);
    distribution.policy = Some(policy.clone());
    let mut map = distribution.importance(mode);
    for s in 0..mdp.n_states() {
        map.add(&Observation::Discrete(s as u32), 0.0);
    }
    let mass = distribution.mass();
    Ok(ExactImportance {
        map,
        distribution,
        mass,
    })
}

struct Enumerator<'a> {
    mdp: &'a Mdp,
    policy: &'a Policy,
    length_cap: usize,
    budget: usize,
    expanded: usize,
    path: Vec<Transition>,
    found: Vec<(SuccessfulTrajectory, f64)>,
}

impl Enumerator<'_> {
    fn extend(&mut self, s: usize, prob: f64) -> Result<()> {
        if self.path.len() == self.length_cap {
            return Ok(());
        }
        for a in 0..self.mdp.n_actions() {
            let pa = self.policy.prob(s, a);
            if pa == 0.0 {
                continue;
            }
            for (next, pn) in self.mdp.successors(s, a) {
                self.expanded += 1;
                if self.expanded > self.budget {
                    return Err(Error::EnumerationBudget {
                        budget: self.budget,
                    });
                }
                let r = self.mdp.reward(s, a, next);
                let p = prob * pa * pn;
                self.path.push(Transition::new(
                    Observation::Discrete(s as u32),
                    a,
                    Observation::Discrete(next as u32),
                    r,
                    r > 0.0,
                ));
                if r > 0.0 {
                    let traj = Trajectory::new(self.path.clone())?;
                    self.found.push((SuccessfulTrajectory::new(traj)?, p));
                } else {
                    self.extend(next, p)?;
                }
                self.path.pop();
            }
        }
        Ok(())
    }
}

/// `Σ_s Σ_L (I^L(s) − I^L_est(s)) p(L)`, with the first term taken from the
/// exact importance of the same distribution.
pub fn estimation_loss(
    exact: &ImportanceMap,
    dist: &TrajectoryDistribution,
    scheme: CountingScheme,
) -> f64 {
    let estimated: f64 = dist
        .entries
        .iter()
        .map(|(traj, p)| p * estimated_counts(traj, scheme).values().sum::<f64>())
        .sum();
    exact.total() - estimated
}
