//! Discounted occupancy measures.
//!
//! The normalized convention is used throughout: rho(s,a) includes the
//! (1 - gamma) factor, so a valid occupancy sums to 1 over all state-action
//! pairs and expected_return equals (1 - gamma) times the usual discounted
//! return. The Bellman flow identity in these units reads, for every state s,
//!
//!   sum_a rho(s,a) = (1 - gamma) mu(s) + gamma sum_{s',a} P(s|s',a) rho(s',a).

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::mdp::{AnyPolicy, MixedPolicy, RewardTable, StochasticPolicy, TabularMdp, Trajectory};
use crate::util::solve_linear;

/// Nonnegative finite measure over state-action pairs. Flow validity is a
/// property of some measures (exact policy occupancies), not all of them
/// (empirical and clustered measures), so it is checked by `flow_residual`
/// rather than at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMeasure {
    rho: Array2<f64>,
}

impl OccupancyMeasure {
    pub fn new(rho: Array2<f64>) -> Result<Self> {
        for &v in rho.iter() {
            if !v.is_finite() || v < -1e-12 {
                return Err(Error::Invalid(format!("occupancy entry {v}")));
            }
        }
        Ok(OccupancyMeasure {
            rho: rho.mapv(|v| v.max(0.0)),
        })
    }

    pub fn rho(&self) -> &Array2<f64> {
        &self.rho
    }

    pub fn n_states(&self) -> usize {
        self.rho.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.rho.ncols()
    }

    pub fn total_mass(&self) -> f64 {
        self.rho.sum()
    }

    /// Per-state visitation d(s) = sum_a rho(s,a).
    pub fn state_marginals(&self) -> Array1<f64> {
        self.rho.sum_axis(ndarray::Axis(1))
    }

    /// Max absolute violation of the normalized Bellman flow identity.
    pub fn flow_residual(&self, mdp: &TabularMdp) -> f64 {
        let n = self.n_states();
        let gamma = mdp.gamma();
        let marg = self.state_marginals();
        let mut worst = 0.0f64;
        for s in 0..n {
            let mut inflow = 0.0;
            for s2 in 0..n {
                for a in 0..self.n_actions() {
                    inflow += mdp.transition()[[s2, a, s]] * self.rho[[s2, a]];
                }
            }
            let resid = marg[s] - (1.0 - gamma) * mdp.initial_dist()[s] - gamma * inflow;
            worst = worst.max(resid.abs());
        }
        worst
    }

    /// Overlap sum_x min(self, other), in [0, 1] for normalized measures.
    pub fn overlap(&self, other: &OccupancyMeasure) -> f64 {
        self.rho
            .iter()
            .zip(other.rho.iter())
            .map(|(&a, &b)| a.min(b))
            .sum()
    }
}

/// Exact occupancy of a stationary policy: the state visitation d solves
/// (I - gamma P_pi^T) d = (1 - gamma) mu, then rho(s,a) = d(s) pi(a|s).
pub fn occupancy_of_policy(mdp: &TabularMdp, policy: &StochasticPolicy) -> Result<OccupancyMeasure> {
    let n = mdp.n_states();
    let na = mdp.n_actions();
    if policy.n_states() != n || policy.n_actions() != na {
        return Err(Error::Dimension(format!(
            "policy {}x{} vs mdp {n}x{na}",
            policy.n_states(),
            policy.n_actions()
        )));
    }
    let gamma = mdp.gamma();
    // a[i][j] = delta_ij - gamma * P_pi(i | j)  (transposed transition under pi)
    let mut a = Array2::zeros((n, n));
    for j in 0..n {
        for act in 0..na {
            let pa = policy.probs()[[j, act]];
            if pa == 0.0 {
                continue;
            }
            for i in 0..n {
                a[[i, j]] -= gamma * pa * mdp.transition()[[j, act, i]];
            }
        }
    }
    for i in 0..n {
        a[[i, i]] += 1.0;
    }
    let b = mdp.initial_dist() * (1.0 - gamma);
    let d = solve_linear(&a, &b);
    let mut rho = Array2::zeros((n, na));
    for s in 0..n {
        let ds = d[s].max(0.0);
        for act in 0..na {
            rho[[s, act]] = ds * policy.probs()[[s, act]];
        }
    }
    OccupancyMeasure::new(rho)
}

/// Occupancy of an episode-level mixture: the weighted sum of member
/// occupancies, by linearity of the visitation distribution in the mixing draw.
pub fn occupancy_of_mixed(mdp: &TabularMdp, mixed: &MixedPolicy) -> Result<OccupancyMeasure> {
    let mut rho = Array2::zeros((mdp.n_states(), mdp.n_actions()));
    for (member, &w) in mixed.members().iter().zip(mixed.weights()) {
        let occ = occupancy_of_policy(mdp, member)?;
        rho += &(occ.rho() * w);
    }
    OccupancyMeasure::new(rho)
}

pub fn occupancy_of_any(mdp: &TabularMdp, policy: &AnyPolicy) -> Result<OccupancyMeasure> {
    match policy {
        AnyPolicy::Single(p) => occupancy_of_policy(mdp, p),
        AnyPolicy::Mixed(m) => occupancy_of_mixed(mdp, m),
    }
}

/// Conditional policy pi(a|s) = rho(s,a) / sum_a' rho(s,a'); states with zero
/// mass fall back to uniform.
pub fn policy_of_occupancy(occ: &OccupancyMeasure) -> StochasticPolicy {
    let n = occ.n_states();
    let na = occ.n_actions();
    let marg = occ.state_marginals();
    let mut probs = Array2::zeros((n, na));
    for s in 0..n {
        if marg[s] > 0.0 {
            let mut sum = 0.0;
            for a in 0..na {
                let p = occ.rho()[[s, a]] / marg[s];
                probs[[s, a]] = p;
                sum += p;
            }
            for a in 0..na {
                probs[[s, a]] /= sum;
            }
        } else {
            for a in 0..na {
                probs[[s, a]] = 1.0 / na as f64;
            }
        }
    }
    StochasticPolicy::from_probs_unchecked(probs)
}

/// Expected normalized return <rho, r>.
pub fn expected_return(occ: &OccupancyMeasure, reward: &RewardTable) -> Result<f64> {
    if occ.rho().shape() != reward.values().shape() {
        return Err(Error::Dimension(format!(
            "occupancy {:?} vs reward {:?}",
            occ.rho().shape(),
            reward.values().shape()
        )));
    }
    Ok(occ
        .rho()
        .iter()
        .zip(reward.values().iter())
        .map(|(&p, &r)| p * r)
        .sum())
}

/// Discounted causal entropy in normalized units:
/// H = -sum_{s,a} rho(s,a) log(rho(s,a) / sum_a' rho(s,a')), with 0 log 0 = 0.
/// Lies in [0, log |A|] for a normalized occupancy.
pub fn causal_entropy(occ: &OccupancyMeasure) -> f64 {
    let marg = occ.state_marginals();
    let mut h = 0.0;
    for s in 0..occ.n_states() {
        if marg[s] <= 0.0 {
            continue;
        }
        for a in 0..occ.n_actions() {
            let p = occ.rho()[[s, a]];
            if p > 0.0 {
                h -= p * (p / marg[s]).ln();
            }
        }
    }
    h
}

/// Discount-weighted empirical occupancy of a trajectory set, normalized to
/// total mass 1. Does not satisfy the Bellman flow identity in general.
pub fn empirical_occupancy(
    trajectories: &[Trajectory],
    gamma: f64,
    n_states: usize,
    n_actions: usize,
) -> Result<OccupancyMeasure> {
    if trajectories.is_empty() {
        return Err(Error::EmptyDemonstrations);
    }
    let mut rho = Array2::zeros((n_states, n_actions));
    for traj in trajectories {
        let mut w = 1.0;
        for (&s, &a) in traj.states.iter().zip(&traj.actions) {
            if s >= n_states || a >= n_actions {
                return Err(Error::Dimension(format!(
                    "trajectory visits ({s},{a}) outside {n_states}x{n_actions}"
                )));
            }
            rho[[s, a]] += w;
            w *= gamma;
        }
    }
    let mass = rho.sum();
    if mass <= 0.0 {
        return Err(Error::EmptyDemonstrations);
    }
    rho /= mass;
    OccupancyMeasure::new(rho)
}

/// Builds a mixture and its exact occupancy in one step.
pub fn mix_policies(
    mdp: &TabularMdp,
    members: Vec<StochasticPolicy>,
    weights: Vec<f64>,
) -> Result<(MixedPolicy, OccupancyMeasure)> {
    let mixed = MixedPolicy::new(members, weights)?;
    let occ = occupancy_of_mixed(mdp, &mixed)?;
    Ok((mixed, occ))
}
