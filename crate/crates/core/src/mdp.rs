//! Core tabular MDP types.
//!
//! A `TabularMdp` bundles a transition tensor `P[s][a][s']`, a state-action
//! reward table, a discount in [0, 1), and an initial state distribution.
//! Validation is strict at construction: rows stochastic within 1e-9, all
//! rewards finite, and every state reachable from the initial support.

use ndarray::{Array1, Array2, Array3};

use crate::error::{Error, Result};

pub const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct TabularMdp {
    transition: Array3<f64>,
    reward: RewardTable,
    gamma: f64,
    initial_dist: Array1<f64>,
}

impl TabularMdp {
    pub fn new(
        transition: Array3<f64>,
        reward: RewardTable,
        gamma: f64,
        initial_dist: Array1<f64>,
    ) -> Result<Self> {
        let mdp = TabularMdp {
            transition,
            reward,
            gamma,
            initial_dist,
        };
        let report = mdp.validate();
        if report.ok() {
            Ok(mdp)
        } else {
            Err(Error::MdpValidation(report.violations.join("; ")))
        }
    }

    pub fn n_states(&self) -> usize {
        self.transition.shape()[0]
    }

    pub fn n_actions(&self) -> usize {
        self.transition.shape()[1]
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn transition(&self) -> &Array3<f64> {
        &self.transition
    }

    pub fn reward(&self) -> &RewardTable {
        &self.reward
    }

    pub fn initial_dist(&self) -> &Array1<f64> {
        &self.initial_dist
    }

    /// Collects every invariant violation instead of stopping at the first,
    /// so callers can report a complete diagnosis.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let (s_n, a_n, s2_n) = {
            let sh = self.transition.shape();
            (sh[0], sh[1], sh[2])
        };
        if s_n == 0 || a_n == 0 {
            violations.push("state and action counts must be positive".to_string());
        }
        if s2_n != s_n {
            violations.push(format!(
                "transition tensor is {s_n}x{a_n}x{s2_n}, expected square in states"
            ));
        }
        if self.reward.values().shape() != [s_n, a_n] {
            violations.push(format!(
                "reward table shape {:?} does not match transition {s_n}x{a_n}",
                self.reward.values().shape()
            ));
        }
        if self.initial_dist.len() != s_n {
            violations.push(format!(
                "initial distribution has {} entries, expected {s_n}",
                self.initial_dist.len()
            ));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            violations.push(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if s2_n == s_n {
            for s in 0..s_n {
                for a in 0..a_n {
                    let row = self.transition.slice(ndarray::s![s, a, ..]);
                    let mut sum = 0.0;
                    for &p in row.iter() {
                        if !(p >= 0.0) || !p.is_finite() {
                            violations.push(format!("transition[{s}][{a}] has entry {p}"));
                            break;
                        }
                        sum += p;
                    }
                    if (sum - 1.0).abs() > STOCHASTIC_TOL {
                        violations.push(format!("transition[{s}][{a}] sums to {sum}"));
                    }
                }
            }
        }
        for (i, &r) in self.reward.values().iter().enumerate() {
            if !r.is_finite() {
                violations.push(format!("reward entry {i} is {r}"));
                break;
            }
        }
        let mut mu_sum = 0.0;
        let mut mu_ok = true;
        for &p in self.initial_dist.iter() {
            if !(p >= 0.0) || !p.is_finite() {
                violations.push(format!("initial distribution has entry {p}"));
                mu_ok = false;
                break;
            }
            mu_sum += p;
        }
        if mu_ok && (mu_sum - 1.0).abs() > STOCHASTIC_TOL {
            violations.push(format!("initial distribution sums to {mu_sum}"));
        }
        if violations.is_empty() {
            for s in self.unreachable_states() {
                violations.push(format!("state {s} unreachable from initial distribution"));
            }
        }
        ValidationReport { violations }
    }

    fn unreachable_states(&self) -> Vec<usize> {
        let n = self.n_states();
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        for (s, &p) in self.initial_dist.iter().enumerate() {
            if p > 0.0 {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for a in 0..self.n_actions() {
                for s2 in 0..n {
                    if !seen[s2] && self.transition[[s, a, s2]] > 0.0 {
                        seen[s2] = true;
                        queue.push_back(s2);
                    }
                }
            }
        }
        (0..n).filter(|&s| !seen[s]).collect()
    }

    /// Undirected state adjacency under the union of all actions, used for
    /// ground metrics and occupancy clustering. No self edges.
    pub fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.n_states();
        let mut adj = vec![Vec::new(); n];
        for s in 0..n {
            for a in 0..self.n_actions() {
                for s2 in 0..n {
                    if s2 != s && self.transition[[s, a, s2]] > 0.0 {
                        if !adj[s].contains(&s2) {
                            adj[s].push(s2);
                        }
                        if !adj[s2].contains(&s) {
                            adj[s2].push(s);
                        }
                    }
                }
            }
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        adj
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Dense reward over state-action pairs. Entries must be finite.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTable {
    values: Array2<f64>,
}

impl RewardTable {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite reward entry {bad}")));
        }
        Ok(RewardTable { values })
    }

    /// Broadcasts per-state values across all actions.
    pub fn from_state_values(values: &Array1<f64>, n_actions: usize) -> Result<Self> {
        let n = values.len();
        let mut table = Array2::zeros((n, n_actions));
        for s in 0..n {
            for a in 0..n_actions {
                table[[s, a]] = values[s];
            }
        }
        RewardTable::new(table)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n_states(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.values.ncols()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// max - min, floored away from zero so ratios against the gap stay finite.
    pub fn gap(&self) -> f64 {
        (self.max() - self.min()).max(1e-12)
    }

    pub fn scaled(&self, factor: f64) -> RewardTable {
        RewardTable {
            values: &self.values * factor,
        }
    }

    /// self * factor + other, the combined objective used by constrained planners.
    pub fn scale_add(&self, factor: f64, other: &RewardTable) -> RewardTable {
        RewardTable {
            values: &self.values * factor + other.values(),
        }
    }
}

/// Row-stochastic policy table pi(a|s).
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPolicy {
    probs: Array2<f64>,
}

impl StochasticPolicy {
    pub fn new(probs: Array2<f64>) -> Result<Self> {
        for (s, row) in probs.rows().into_iter().enumerate() {
            let mut sum = 0.0;
            for &p in row.iter() {
                if !(p >= 0.0) || !p.is_finite() {
                    return Err(Error::Invalid(format!("policy row {s} has entry {p}")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::Invalid(format!("policy row {s} sums to {sum}")));
            }
        }
        Ok(StochasticPolicy { probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let p = 1.0 / n_actions as f64;
        StochasticPolicy {
            probs: Array2::from_elem((n_states, n_actions), p),
        }
    }

    /// Deterministic policy placing all mass on `actions[s]`.
    pub fn from_actions(actions: &[usize], n_actions: usize) -> Result<Self> {
        let mut probs = Array2::zeros((actions.len(), n_actions));
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::Invalid(format!(
                    "action {a} at state {s} exceeds action count {n_actions}"
                )));
            }
            probs[[s, a]] = 1.0;
        }
        Ok(StochasticPolicy { probs })
    }

    pub(crate) fn from_probs_unchecked(probs: Array2<f64>) -> Self {
        StochasticPolicy { probs }
    }

    /// Rows drawn from a flat Dirichlet, built from normalized unit
    /// exponentials.
    pub fn random_with<R: rand::Rng + ?Sized>(
        rng: &mut R,
        n_states: usize,
        n_actions: usize,
    ) -> Self {
        let mut probs = Array2::zeros((n_states, n_actions));
        for s in 0..n_states {
            let mut sum = 0.0;
            for a in 0..n_actions {
                let e = -(1.0 - rng.random::<f64>()).ln();
                probs[[s, a]] = e;
                sum += e;
            }
            for a in 0..n_actions {
                probs[[s, a]] /= sum;
            }
        }
        StochasticPolicy { probs }
    }

    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    pub fn n_states(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.probs.ncols()
    }

    /// Highest-probability action per state, lowest index on ties.
    pub fn greedy_actions(&self) -> Vec<usize> {
        self.probs
            .rows()
            .into_iter()
            .map(|row| {
                let mut best = 0;
                let mut best_p = row[0];
                for (a, &p) in row.iter().enumerate().skip(1) {
                    if p > best_p {
                        best_p = p;
                        best = a;
                    }
                }
                best
            })
            .collect()
    }
}

/// Finite mixture over stochastic policies; the mixing draw happens once per
/// episode, not per step.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedPolicy {
    members: Vec<StochasticPolicy>,
    weights: Vec<f64>,
}

impl MixedPolicy {
    pub fn new(members: Vec<StochasticPolicy>, weights: Vec<f64>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Invalid("mixture needs at least one member".into()));
        }
        if members.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} members but {} weights",
                members.len(),
                weights.len()
            )));
        }
        let shape = (members[0].n_states(), members[0].n_actions());
        for (i, m) in members.iter().enumerate() {
            if (m.n_states(), m.n_actions()) != shape {
                return Err(Error::Dimension(format!(
                    "member {i} has shape {:?}, expected {:?}",
                    (m.n_states(), m.n_actions()),
                    shape
                )));
            }
        }
        let mut sum = 0.0;
        for &w in &weights {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Invalid(format!("mixture weight {w}")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::Invalid(format!("mixture weights sum to {sum}")));
        }
        Ok(MixedPolicy { members, weights })
    }

    pub fn members(&self) -> &[StochasticPolicy] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_parts(self) -> (Vec<StochasticPolicy>, Vec<f64>) {
        (self.members, self.weights)
    }

    pub fn n_states(&self) -> usize {
        self.members[0].n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.members[0].n_actions()
    }
}

/// Either a single stochastic policy or an episode-level mixture.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyPolicy {
    Single(StochasticPolicy),
    Mixed(MixedPolicy),
}

impl AnyPolicy {
    pub fn n_states(&self) -> usize {
        match self {
            AnyPolicy::Single(p) => p.n_states(),
            AnyPolicy::Mixed(m) => m.n_states(),
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            AnyPolicy::Single(p) => p.n_actions(),
            AnyPolicy::Mixed(m) => m.n_actions(),
        }
    }
}

impl From<StochasticPolicy> for AnyPolicy {
    fn from(p: StochasticPolicy) -> Self {
        AnyPolicy::Single(p)
    }
}

impl From<MixedPolicy> for AnyPolicy {
    fn from(m: MixedPolicy) -> Self {
        AnyPolicy::Mixed(m)
    }
}

/// Fixed-horizon rollout record. All three vectors share one length.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}
