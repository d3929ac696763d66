//! IRL-based observers.
//!
//! An observer sees behavior (an occupancy measure, or demonstrations that
//! estimate one) and recovers a reward by maximum-causal-entropy inverse
//! reinforcement learning: gradient ascent on the demonstration likelihood,
//! whose gradient is the occupancy mismatch target - rho(soft-optimal(r)).
//! Clustered observers model limited perception: they collapse the observed
//! occupancy onto cluster representatives before inverting it.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{AnyPolicy, RewardTable, TabularMdp};
use crate::occupancy::{empirical_occupancy, occupancy_of_policy, OccupancyMeasure};
use crate::sample::sample_trajectories;
use crate::solve::solve_soft_from;

fn default_lr() -> f64 {
    1.0
}

fn default_max_iters() -> usize {
    3000
}

fn default_grad_tol() -> f64 {
    1e-3
}

fn default_vi_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrlConfig {
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_vi_tol")]
    pub vi_tol: f64,
}

impl Default for IrlConfig {
    fn default() -> Self {
        IrlConfig {
            lr: default_lr(),
            max_iters: default_max_iters(),
            grad_tol: default_grad_tol(),
            vi_tol: default_vi_tol(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveredReward {
    pub reward: RewardTable,
    pub iterations: usize,
    pub converged: bool,
    pub final_grad_l1: f64,
}

/// Maximum-causal-entropy IRL against a target occupancy. Ascends
/// L(r) = <target, r> - (1 - gamma) <mu, V_soft(r)> from r = 0 with a
/// decaying step size, stopping when the L1 occupancy mismatch drops to
/// grad_tol. The soft solve is warm-started across iterations.
pub fn mce_irl(
    mdp: &TabularMdp,
    target: &OccupancyMeasure,
    cfg: &IrlConfig,
) -> Result<RecoveredReward> {
    let n = mdp.n_states();
    let na = mdp.n_actions();
    if target.rho().shape() != [n, na] {
        return Err(Error::Dimension(format!(
            "target occupancy {:?} vs mdp {n}x{na}",
            target.rho().shape()
        )));
    }
    if (target.total_mass() - 1.0).abs() > 1e-6 {
        return Err(Error::Invalid(format!(
            "target occupancy mass {} is not 1",
            target.total_mass()
        )));
    }
    if cfg.max_iters == 0 {
        return Err(Error::Invalid("max_iters must be at least 1".into()));
    }
    let mu = mdp.initial_dist();
    let discount_scale = 1.0 - mdp.gamma();
    let objective_of = |rr: &Array2<f64>, values: &ndarray::Array1<f64>| {
        (target.rho() * rr).sum() - discount_scale * mu.dot(values)
    };

    let mut r = Array2::<f64>::zeros((n, na));
    let soft = solve_soft_from(mdp, &RewardTable::new(r.clone())?, cfg.vi_tol, None);
    let mut warm = soft.values.clone();
    let rho = occupancy_of_policy(mdp, &soft.policy)?;
    let mut grad = target.rho() - rho.rho();
    let mut last_l1: f64 = grad.iter().map(|g| g.abs()).sum();
    let mut obj = objective_of(&r, &soft.values);
    let mut step = cfg.lr;
    let mut iters = 0;
    // Ascent with a monotone backtracking line search. The candidate's soft
    // values come out of the solve we need anyway, so rejected steps cost one
    // extra solve and nothing else. The step recovers geometrically after a
    // rejection but never exceeds the configured lr.
    while iters < cfg.max_iters && last_l1 > cfg.grad_tol {
        let mut cand = r.clone();
        cand.scaled_add(step, &grad);
        let soft_c = solve_soft_from(mdp, &RewardTable::new(cand.clone())?, cfg.vi_tol, Some(&warm));
        iters += 1;
        let obj_c = objective_of(&cand, &soft_c.values);
        if obj_c >= obj - 1e-12 * obj.abs().max(1.0) {
            let rho_c = occupancy_of_policy(mdp, &soft_c.policy)?;
            warm = soft_c.values.clone();
            r = cand;
            grad = target.rho() - rho_c.rho();
            last_l1 = grad.iter().map(|g| g.abs()).sum();
            obj = obj_c;
            step = (step * 1.25).min(cfg.lr);
        } else {
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
    }
    Ok(RecoveredReward {
        reward: RewardTable::new(r)?,
        iterations: iters,
        converged: last_l1 <= cfg.grad_tol,
        final_grad_l1: last_l1,
    })
}

/// Sampling horizon that covers all but ~1% of the discounted mass.
pub fn demo_horizon(gamma: f64) -> usize {
    if gamma <= 0.0 {
        return 50;
    }
    let h = (100.0f64.ln() / (1.0 - gamma)).ceil() as usize;
    h.clamp(50, 2000)
}

/// Observer that sees sampled demonstrations rather than the exact
/// occupancy. Returns the recovered reward and the empirical occupancy the
/// inversion ran against.
pub fn irl_from_demos(
    mdp: &TabularMdp,
    policy: &AnyPolicy,
    n_trajectories: usize,
    seed: u64,
    cfg: &IrlConfig,
) -> Result<(RecoveredReward, OccupancyMeasure)> {
    let horizon = demo_horizon(mdp.gamma());
    let trajs = sample_trajectories(mdp, policy, n_trajectories, horizon, seed)?;
    let target = empirical_occupancy(&trajs, mdp.gamma(), mdp.n_states(), mdp.n_actions())?;
    let recovered = mce_irl(mdp, &target, cfg)?;
    Ok((recovered, target))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterCollapse {
    /// Representative is the highest-mass state in the cluster, ties to the
    /// lowest index.
    MaxMass,
    /// Representative drawn uniformly from the cluster, seeded.
    Random,
}

fn default_cluster_threshold() -> f64 {
    0.05
}

fn default_collapse() -> ClusterCollapse {
    ClusterCollapse::MaxMass
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    #[serde(default = "default_cluster_threshold")]
    pub threshold: f64,
    #[serde(default = "default_collapse")]
    pub collapse: ClusterCollapse,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            threshold: default_cluster_threshold(),
            collapse: default_collapse(),
            seed: 0,
        }
    }
}

/// Collapse an occupancy onto cluster representatives. States whose marginal
/// mass is at most threshold * max-marginal are dropped; the survivors split
/// into connected components of the MDP's undirected transition graph, each
/// collapses to one representative state, and everything else is zeroed
/// before renormalizing to mass 1.
pub fn cluster_occupancy(
    mdp: &TabularMdp,
    occ: &OccupancyMeasure,
    cfg: &ClusterConfig,
) -> Result<OccupancyMeasure> {
    let n = mdp.n_states();
    let na = mdp.n_actions();
    if occ.rho().shape() != [n, na] {
        return Err(Error::Dimension(format!(
            "occupancy {:?} vs mdp {n}x{na}",
            occ.rho().shape()
        )));
    }
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(Error::Invalid(format!(
            "cluster threshold {} outside [0, 1]",
            cfg.threshold
        )));
    }
    let marg = occ.state_marginals();
    let d_max = marg.iter().fold(0.0f64, |m, &x| m.max(x));
    let kept: Vec<bool> = marg.iter().map(|&d| d > cfg.threshold * d_max).collect();
    if !kept.iter().any(|&k| k) {
        return Err(Error::DegenerateSupport(
            "cluster threshold removes every state".into(),
        ));
    }
    let adj = mdp.undirected_adjacency();
    let mut component = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if !kept[start] || component[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        component[start] = id;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            for &s2 in &adj[s] {
                if kept[s2] && component[s2] == usize::MAX {
                    component[s2] = id;
                    members.push(s2);
                    queue.push_back(s2);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rho = Array2::zeros((n, na));
    for members in &components {
        let rep = match cfg.collapse {
            ClusterCollapse::MaxMass => {
                let mut best = members[0];
                for &s in members {
                    if marg[s] > marg[best] {
                        best = s;
                    }
                }
                best
            }
            ClusterCollapse::Random => members[rng.random_range(0..members.len())],
        };
        for a in 0..na {
            rho[[rep, a]] = occ.rho()[[rep, a]];
        }
    }
    let mass = rho.sum();
    if mass <= 0.0 {
        return Err(Error::DegenerateSupport(
            "cluster representatives carry no mass".into(),
        ));
    }
    rho /= mass;
    OccupancyMeasure::new(rho)
}

/// Clustered observer: collapse the occupancy, then invert the collapsed
/// target. Returns the recovered reward and the clustered target.
pub fn irl_clustered(
    mdp: &TabularMdp,
    occ: &OccupancyMeasure,
    cluster: &ClusterConfig,
    irl: &IrlConfig,
) -> Result<(RecoveredReward, OccupancyMeasure)> {
    let target = cluster_occupancy(mdp, occ, cluster)?;
    let recovered = mce_irl(mdp, &target, irl)?;
    Ok((recovered, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::StochasticPolicy;
    use crate::occupancy::expected_return;
    use crate::solve::solve_soft;
    use ndarray::{arr1, arr2, Array1, Array3};

    fn two_state_mdp() -> TabularMdp {
        let mut t = Array3::zeros((2, 2, 2));
        t[[0, 0, 0]] = 0.9;
        t[[0, 0, 1]] = 0.1;
        t[[0, 1, 1]] = 1.0;
        t[[1, 0, 0]] = 1.0;
        t[[1, 1, 1]] = 0.6;
        t[[1, 1, 0]] = 0.4;
        let r = RewardTable::new(arr2(&[[0.2, -0.1], [0.5, 0.9]])).unwrap();
        TabularMdp::new(t, r, 0.8, arr1(&[0.7, 0.3])).unwrap()
    }

    #[test]
    fn mce_irl_matches_target_occupancy() {
        let mdp = two_state_mdp();
        let soft = solve_soft(&mdp, mdp.reward(), 1e-12);
        let target = occupancy_of_policy(&mdp, &soft.policy).unwrap();
        let rec = mce_irl(&mdp, &target, &IrlConfig::default()).unwrap();
        assert!(rec.converged, "grad l1 {}", rec.final_grad_l1);
        let soft2 = solve_soft(&mdp, &rec.reward, 1e-12);
        let rho2 = occupancy_of_policy(&mdp, &soft2.policy).unwrap();
        let l1: f64 = (target.rho() - rho2.rho()).iter().map(|g| g.abs()).sum();
        assert!(l1 <= 1e-3, "l1 {l1}");
    }

    #[test]
    fn likelihood_gradient_matches_finite_differences() {
        // d/dr L(r) with L = <target, r> - (1 - gamma) <mu, V_soft(r)> must
        // equal target - rho(soft(r)) entrywise.
        let mdp = two_state_mdp();
        let uniform = StochasticPolicy::uniform(2, 2);
        let target = occupancy_of_policy(&mdp, &uniform).unwrap();
        let base = arr2(&[[0.3, -0.2], [0.1, 0.4]]);
        let likelihood = |r: &Array2<f64>| -> f64 {
            let table = RewardTable::new(r.clone()).unwrap();
            let soft = solve_soft(&mdp, &table, 1e-13);
            let data: f64 = target
                .rho()
                .iter()
                .zip(r.iter())
                .map(|(t, v)| t * v)
                .sum();
            let v0: f64 = mdp
                .initial_dist()
                .iter()
                .zip(soft.values.iter())
                .map(|(m, v)| m * v)
                .sum();
            data - (1.0 - mdp.gamma()) * v0
        };
        let table = RewardTable::new(base.clone()).unwrap();
        let soft = solve_soft(&mdp, &table, 1e-13);
        let rho = occupancy_of_policy(&mdp, &soft.policy).unwrap();
        let h = 1e-6;
        for s in 0..2 {
            for a in 0..2 {
                let mut up = base.clone();
                up[[s, a]] += h;
                let mut dn = base.clone();
                dn[[s, a]] -= h;
                let numeric = (likelihood(&up) - likelihood(&dn)) / (2.0 * h);
                let analytic = target.rho()[[s, a]] - rho.rho()[[s, a]];
                assert!(
                    (numeric - analytic).abs() < 1e-5,
                    "({s},{a}): fd {numeric} vs {analytic}"
                );
            }
        }
    }

    #[test]
    fn unconverged_run_reports_state() {
        // A deterministic target cannot be matched by any soft policy, let
        // alone after a single gradient step from the zero reward.
        let mdp = two_state_mdp();
        let greedy = crate::solve::solve_optimal(&mdp, mdp.reward(), 1e-10);
        let target = occupancy_of_policy(&mdp, &greedy.policy).unwrap();
        let mut cfg = IrlConfig::default();
        cfg.max_iters = 1;
        cfg.grad_tol = 0.0;
        let rec = mce_irl(&mdp, &target, &cfg).unwrap();
        assert!(!rec.converged);
        assert_eq!(rec.iterations, 1);
        assert!(rec.final_grad_l1.is_finite());
    }

    #[test]
    fn demo_observer_recovers_behavior_approximately() {
        let mdp = two_state_mdp();
        let soft = solve_soft(&mdp, mdp.reward(), 1e-12);
        let policy = AnyPolicy::Single(soft.policy.clone());
        let true_occ = occupancy_of_policy(&mdp, &soft.policy).unwrap();
        let mut cfg = IrlConfig::default();
        cfg.grad_tol = 1e-4;
        let (rec, empirical) = irl_from_demos(&mdp, &policy, 200, 17, &cfg).unwrap();
        let l1: f64 = (true_occ.rho() - empirical.rho())
            .iter()
            .map(|g| g.abs())
            .sum();
        assert!(l1 < 0.1, "empirical occupancy off by {l1}");
        let soft2 = solve_soft(&mdp, &rec.reward, 1e-12);
        let ret = expected_return(
            &occupancy_of_policy(&mdp, &soft2.policy).unwrap(),
            mdp.reward(),
        )
        .unwrap();
        let ret_true = expected_return(&true_occ, mdp.reward()).unwrap();
        assert!((ret - ret_true).abs() < 0.1);
    }

    fn chain_mdp(n: usize) -> TabularMdp {
        // Symmetric random walk so the undirected graph is a path.
        let mut t = Array3::zeros((n, 2, n));
        for s in 0..n {
            t[[s, 0, s.saturating_sub(1)]] += 1.0;
            t[[s, 1, (s + 1).min(n - 1)]] += 1.0;
        }
        let r = RewardTable::new(Array2::zeros((n, 2))).unwrap();
        let mut mu = Array1::zeros(n);
        mu[0] = 1.0;
        TabularMdp::new(t, r, 0.9, mu).unwrap()
    }

    fn occ_from_marginals(marg: &[f64]) -> OccupancyMeasure {
        let n = marg.len();
        let mut rho = Array2::zeros((n, 2));
        for (s, &m) in marg.iter().enumerate() {
            rho[[s, 0]] = 0.75 * m;
            rho[[s, 1]] = 0.25 * m;
        }
        OccupancyMeasure::new(rho).unwrap()
    }

    #[test]
    fn clustering_collapses_connected_survivors_to_max_mass_state() {
        let mdp = chain_mdp(4);
        let occ = occ_from_marginals(&[0.5, 0.3, 0.15, 0.05]);
        let cfg = ClusterConfig {
            threshold: 0.2,
            ..ClusterConfig::default()
        };
        // Kept: marginals above 0.2 * 0.5 = 0.1, i.e. states 0..=2, one
        // connected component, representative state 0.
        let out = cluster_occupancy(&mdp, &occ, &cfg).unwrap();
        let marg = out.state_marginals();
        assert!((marg[0] - 1.0).abs() < 1e-12);
        assert_eq!(marg[1], 0.0);
        assert_eq!(marg[2], 0.0);
        assert_eq!(marg[3], 0.0);
        // Action split within the representative is preserved.
        assert!((out.rho()[[0, 0]] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn clustering_keeps_separate_components_in_proportion() {
        let mdp = chain_mdp(4);
        let occ = occ_from_marginals(&[0.4, 0.05, 0.4, 0.15]);
        let cfg = ClusterConfig {
            threshold: 0.5,
            ..ClusterConfig::default()
        };
        // Kept: above 0.2, i.e. states 0 and 2, which are not adjacent on the
        // path, so both survive as their own representatives.
        let out = cluster_occupancy(&mdp, &occ, &cfg).unwrap();
        let marg = out.state_marginals();
        assert!((marg[0] - 0.5).abs() < 1e-12);
        assert!((marg[2] - 0.5).abs() < 1e-12);
        assert_eq!(marg[1], 0.0);
        assert_eq!(marg[3], 0.0);
    }

    #[test]
    fn random_collapse_is_seed_deterministic() {
        let mdp = chain_mdp(6);
        let occ = occ_from_marginals(&[0.2, 0.2, 0.1, 0.2, 0.2, 0.1]);
        let cfg = |seed| ClusterConfig {
            threshold: 0.7,
            collapse: ClusterCollapse::Random,
            seed,
        };
        let a = cluster_occupancy(&mdp, &occ, &cfg(3)).unwrap();
        let b = cluster_occupancy(&mdp, &occ, &cfg(3)).unwrap();
        assert_eq!(a.rho(), b.rho());
    }

    #[test]
    fn over_aggressive_threshold_is_rejected() {
        let mdp = chain_mdp(4);
        let occ = occ_from_marginals(&[0.25, 0.25, 0.25, 0.25]);
        let cfg = ClusterConfig {
            threshold: 1.0,
            ..ClusterConfig::default()
        };
        let err = cluster_occupancy(&mdp, &occ, &cfg).unwrap_err();
        assert!(matches!(err, Error::DegenerateSupport(_)));
    }
}
