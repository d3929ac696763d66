//! Constrained policy synthesis.
//!
//! Every planner here trades an objective against a floor on the true-reward
//! return: MEIR maximizes causal entropy, the max-misinformation family
//! maximizes an anti-reward return. All of them reduce to scalarized solves
//! r_bar = lambda * r + objective-side reward, with lambda chosen so the
//! constraint E[r] >= e_min binds as tightly as the mode allows.

use serde::{Deserialize, Serialize};

use crate::antireward::{gen_anti_reward, AntiRewardConfig};
use crate::error::{Error, Result};
use crate::mdp::{AnyPolicy, MixedPolicy, RewardTable, StochasticPolicy, TabularMdp};
use crate::occupancy::{
    causal_entropy, expected_return, occupancy_of_any, occupancy_of_policy, policy_of_occupancy,
    OccupancyMeasure,
};
use crate::solve::{solve_optimal_from, solve_soft_from, SolveOutcome};

/// Return landmarks for a task: the uniform-policy return, the optimal
/// return, and (when an anti-reward is supplied) the return of the policy
/// that chases the anti-reward alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceReturns {
    pub e_hat: f64,
    pub e_star: f64,
    pub e_minus: Option<f64>,
}

pub fn reference_returns(
    mdp: &TabularMdp,
    reward: &RewardTable,
    anti: Option<&RewardTable>,
    vi_tol: f64,
) -> Result<ReferenceReturns> {
    check_reward_shape(mdp, reward)?;
    let uniform = StochasticPolicy::uniform(mdp.n_states(), mdp.n_actions());
    let e_hat = expected_return(&occupancy_of_policy(mdp, &uniform)?, reward)?;
    let opt = solve_optimal_from(mdp, reward, vi_tol, None);
    let e_star = expected_return(&occupancy_of_policy(mdp, &opt.policy)?, reward)?;
    let e_minus = match anti {
        Some(a) => {
            check_reward_shape(mdp, a)?;
            let greedy = solve_optimal_from(mdp, a, vi_tol, None);
            Some(expected_return(
                &occupancy_of_policy(mdp, &greedy.policy)?,
                reward,
            )?)
        }
        None => None,
    };
    Ok(ReferenceReturns {
        e_hat,
        e_star,
        e_minus,
    })
}

/// Linear interpolation between two return landmarks.
pub fn threshold_from_fraction(low: f64, high: f64, fraction: f64) -> f64 {
    low + fraction * (high - low)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConstraint {
    pub e_min: f64,
}

impl RewardConstraint {
    pub fn new(e_min: f64) -> Result<Self> {
        if !e_min.is_finite() {
            return Err(Error::Invalid(format!("e_min {e_min} must be finite")));
        }
        Ok(RewardConstraint { e_min })
    }
}

/// Output of every planner. `achieved_objective` is the causal entropy for
/// MEIR and the anti-reward return for the max-misinformation family.
/// `constraint_gap` is achieved_return - e_min; a negative gap means the
/// constraint is violated by that much.
#[derive(Debug, Clone)]
pub struct PlannerResult {
    pub policy: AnyPolicy,
    pub lambda_star: f64,
    pub achieved_return: f64,
    pub achieved_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub constraint_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeirOptions {
    pub return_tol: f64,
    pub vi_tol: f64,
    pub lambda_cap: Option<f64>,
    pub max_bisections: usize,
}

impl Default for MeirOptions {
    fn default() -> Self {
        MeirOptions {
            return_tol: 1e-6,
            vi_tol: 1e-10,
            lambda_cap: None,
            max_bisections: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmMode {
    /// Return the upper-bracket deterministic policy; its return can exceed
    /// e_min by one step of the piecewise-constant return curve.
    Feasible,
    /// Mix the two bracket policies so the return hits e_min exactly.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmOptions {
    pub mode: MmMode,
    pub lambda_rel_tol: f64,
    pub vi_tol: f64,
    pub lambda_cap: Option<f64>,
}

impl Default for MmOptions {
    fn default() -> Self {
        MmOptions {
            mode: MmMode::Exact,
            lambda_rel_tol: 1e-9,
            vi_tol: 1e-10,
            lambda_cap: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimalDualOptions {
    pub alpha: f64,
    pub iterations: usize,
    pub lambda0: f64,
    pub vi_tol: f64,
    pub return_tol: f64,
}

impl Default for PrimalDualOptions {
    fn default() -> Self {
        PrimalDualOptions {
            alpha: 0.05,
            iterations: 2000,
            lambda0: 0.0,
            vi_tol: 1e-10,
            return_tol: 5e-3,
        }
    }
}

fn check_reward_shape(mdp: &TabularMdp, reward: &RewardTable) -> Result<()> {
    if reward.values().shape() != [mdp.n_states(), mdp.n_actions()] {
        return Err(Error::Dimension(format!(
            "reward shape {:?} vs mdp {}x{}",
            reward.values().shape(),
            mdp.n_states(),
            mdp.n_actions()
        )));
    }
    Ok(())
}

/// Default cap for the constraint multiplier, scaled so that lambda * r
/// dominates the objective-side reward by a factor of 1e6 across the reward's
/// own spread.
fn default_lambda_cap(reward: &RewardTable, anti: Option<&RewardTable>) -> f64 {
    let anti_mag = anti.map(|a| a.max_abs()).unwrap_or(0.0);
    1e6 * (anti_mag + 1.0) / reward.gap()
}

struct SoftEval {
    outcome: SolveOutcome,
    occupancy: OccupancyMeasure,
    ret: f64,
}

/// Maximum-entropy policy subject to E[r] >= e_min: bisect the multiplier in
/// pi_lambda = soft-optimal(lambda * r) until the return matches e_min. The
/// return is continuous and nondecreasing in lambda, from the uniform
/// policy's return at lambda = 0 up to the optimal return in the limit.
pub fn meir(
    mdp: &TabularMdp,
    reward: &RewardTable,
    constraint: RewardConstraint,
    opts: &MeirOptions,
) -> Result<PlannerResult> {
    check_reward_shape(mdp, reward)?;
    let e_min = constraint.e_min;
    let refs = reference_returns(mdp, reward, None, opts.vi_tol)?;
    let slack = opts.return_tol.max(1e-9);
    if e_min > refs.e_star + slack {
        return Err(Error::InfeasibleThreshold(format!(
            "e_min {e_min} exceeds the optimal return {}",
            refs.e_star
        )));
    }

    let mut warm: Option<ndarray::Array1<f64>> = None;
    let mut evals = 0usize;
    let mut eval = |lambda: f64, warm: &mut Option<ndarray::Array1<f64>>| -> Result<SoftEval> {
        let outcome = solve_soft_from(mdp, &reward.scaled(lambda), opts.vi_tol, warm.as_ref());
        *warm = Some(outcome.values.clone());
        let occupancy = occupancy_of_policy(mdp, &outcome.policy)?;
        let ret = expected_return(&occupancy, reward)?;
        evals += 1;
        Ok(SoftEval {
            outcome,
            occupancy,
            ret,
        })
    };

    let finish = |e: SoftEval, lambda: f64, evals: usize, converged: bool| PlannerResult {
        achieved_objective: causal_entropy(&e.occupancy),
        achieved_return: e.ret,
        constraint_gap: e.ret - e_min,
        policy: AnyPolicy::Single(e.outcome.policy),
        lambda_star: lambda,
        iterations: evals,
        converged,
    };

    let at_zero = eval(0.0, &mut warm)?;
    if at_zero.ret >= e_min - opts.return_tol {
        return Ok(finish(at_zero, 0.0, evals, true));
    }

    let cap = opts
        .lambda_cap
        .unwrap_or_else(|| default_lambda_cap(reward, None));
    let at_cap = eval(cap, &mut warm)?;
    if at_cap.ret < e_min - opts.return_tol {
        // Reachable only when e_min sits essentially at the optimal return,
        // where the soft family approaches but never attains it. Report the
        // cap policy with the residual visible in constraint_gap.
        return Ok(finish(at_cap, cap, evals, false));
    }
    if (at_cap.ret - e_min).abs() <= opts.return_tol {
        return Ok(finish(at_cap, cap, evals, true));
    }

    let (mut lo, mut hi) = (0.0f64, cap);
    let mut best_hi = at_cap;
    let mut best_hi_lambda = cap;
    for _ in 0..opts.max_bisections {
        let mid = 0.5 * (lo + hi);
        let at_mid = eval(mid, &mut warm)?;
        if (at_mid.ret - e_min).abs() <= opts.return_tol {
            return Ok(finish(at_mid, mid, evals, true));
        }
        if at_mid.ret < e_min {
            lo = mid;
        } else {
            hi = mid;
            best_hi = at_mid;
            best_hi_lambda = mid;
        }
    }
    Ok(finish(best_hi, best_hi_lambda, evals, false))
}

struct HardEval {
    policy: StochasticPolicy,
    ret: f64,
    anti_ret: f64,
}

/// Maximize the anti-reward return subject to E[r] >= e_min by bisecting
/// lambda in argmax solves of lambda * r + r-. The true-reward return of the
/// greedy policy is a nondecreasing step function of lambda; the bisection
/// brackets the jump across e_min.
pub fn mm_binary_search(
    mdp: &TabularMdp,
    reward: &RewardTable,
    anti_reward: &RewardTable,
    constraint: RewardConstraint,
    opts: &MmOptions,
) -> Result<PlannerResult> {
    check_reward_shape(mdp, reward)?;
    check_reward_shape(mdp, anti_reward)?;
    let e_min = constraint.e_min;
    let refs = reference_returns(mdp, reward, Some(anti_reward), opts.vi_tol)?;
    if e_min > refs.e_star + 1e-9 {
        return Err(Error::InfeasibleThreshold(format!(
            "e_min {e_min} exceeds the optimal return {}",
            refs.e_star
        )));
    }

    let mut warm: Option<ndarray::Array1<f64>> = None;
    let mut evals = 0usize;
    let mut eval = |lambda: f64, warm: &mut Option<ndarray::Array1<f64>>| -> Result<HardEval> {
        let scalarized = reward.scale_add(lambda, anti_reward);
        let outcome = solve_optimal_from(mdp, &scalarized, opts.vi_tol, warm.as_ref());
        *warm = Some(outcome.values.clone());
        let occ = occupancy_of_policy(mdp, &outcome.policy)?;
        evals += 1;
        Ok(HardEval {
            ret: expected_return(&occ, reward)?,
            anti_ret: expected_return(&occ, anti_reward)?,
            policy: outcome.policy,
        })
    };

    let single = |e: HardEval, lambda: f64, evals: usize| PlannerResult {
        achieved_return: e.ret,
        achieved_objective: e.anti_ret,
        constraint_gap: e.ret - e_min,
        policy: AnyPolicy::Single(e.policy),
        lambda_star: lambda,
        iterations: evals,
        converged: true,
    };

    let at_zero = eval(0.0, &mut warm)?;
    if at_zero.ret >= e_min - 1e-9 {
        return Ok(single(at_zero, 0.0, evals));
    }

    let cap = opts
        .lambda_cap
        .unwrap_or_else(|| default_lambda_cap(reward, Some(anti_reward)));
    let at_cap = eval(cap, &mut warm)?;
    if at_cap.ret < e_min - 1e-9 {
        return Err(Error::LambdaCapTooSmall(format!(
            "return {} at lambda cap {cap} is below e_min {e_min}",
            at_cap.ret
        )));
    }

    let mut lo = 0.0f64;
    let mut hi = cap;
    let mut lo_eval = at_zero;
    let mut hi_eval = at_cap;
    let mut guard = 0usize;
    while hi - lo > opts.lambda_rel_tol * hi.max(1.0) && guard < 200 {
        let mid = 0.5 * (lo + hi);
        let at_mid = eval(mid, &mut warm)?;
        if at_mid.ret >= e_min {
            hi = mid;
            hi_eval = at_mid;
        } else {
            lo = mid;
            lo_eval = at_mid;
        }
        guard += 1;
    }

    match opts.mode {
        MmMode::Feasible => Ok(single(hi_eval, hi, evals)),
        MmMode::Exact => {
            let spread = hi_eval.ret - lo_eval.ret;
            if spread <= 0.0 {
                return Ok(single(hi_eval, hi, evals));
            }
            let w = ((e_min - lo_eval.ret) / spread).clamp(0.0, 1.0);
            let mixed = MixedPolicy::new(
                vec![lo_eval.policy, hi_eval.policy],
                vec![1.0 - w, w],
            )?;
            let ret = (1.0 - w) * lo_eval.ret + w * hi_eval.ret;
            let anti = (1.0 - w) * lo_eval.anti_ret + w * hi_eval.anti_ret;
            Ok(PlannerResult {
                policy: AnyPolicy::Mixed(mixed),
                lambda_star: hi,
                achieved_return: ret,
                achieved_objective: anti,
                iterations: evals,
                converged: true,
                constraint_gap: ret - e_min,
            })
        }
    }
}

/// Dual ascent on the same Lagrangian as `mm_binary_search`: the multiplier
/// follows lambda <- max(0, lambda - alpha (E[r] - e_min)), and the reported
/// policy regenerates the tail-averaged occupancy, which is itself a valid
/// occupancy because the feasible set is convex.
pub fn mm_primal_dual(
    mdp: &TabularMdp,
    reward: &RewardTable,
    anti_reward: &RewardTable,
    constraint: RewardConstraint,
    opts: &PrimalDualOptions,
) -> Result<PlannerResult> {
    check_reward_shape(mdp, reward)?;
    check_reward_shape(mdp, anti_reward)?;
    if opts.iterations == 0 {
        return Err(Error::Invalid("iterations must be at least 1".into()));
    }
    if !(opts.alpha > 0.0) {
        return Err(Error::Invalid("alpha must be positive".into()));
    }
    let e_min = constraint.e_min;
    let mut lambda = opts.lambda0.max(0.0);
    let mut warm: Option<ndarray::Array1<f64>> = None;
    let tail_start = opts.iterations / 2;
    let tail_len = (opts.iterations - tail_start) as f64;
    let mut rho_sum = ndarray::Array2::<f64>::zeros((mdp.n_states(), mdp.n_actions()));
    let mut lambda_sum = 0.0;
    for t in 0..opts.iterations {
        let scalarized = reward.scale_add(lambda, anti_reward);
        let outcome = solve_optimal_from(mdp, &scalarized, opts.vi_tol, warm.as_ref());
        warm = Some(outcome.values.clone());
        let occ = occupancy_of_policy(mdp, &outcome.policy)?;
        let ret = expected_return(&occ, reward)?;
        if t >= tail_start {
            rho_sum += occ.rho();
            lambda_sum += lambda;
        }
        lambda = (lambda - opts.alpha * (ret - e_min)).max(0.0);
    }
    let rho_avg = OccupancyMeasure::new(rho_sum / tail_len)?;
    let policy = policy_of_occupancy(&rho_avg);
    let ret = expected_return(&rho_avg, reward)?;
    let anti = expected_return(&rho_avg, anti_reward)?;
    Ok(PlannerResult {
        policy: AnyPolicy::Single(policy),
        lambda_star: lambda_sum / tail_len,
        achieved_return: ret,
        achieved_objective: anti,
        iterations: opts.iterations,
        converged: ret >= e_min - opts.return_tol,
        constraint_gap: ret - e_min,
    })
}

/// Boltzmann relaxation of the max-misinformation policy: find lambda* with a
/// feasible-mode bisection, then soften the greedy argmax of
/// lambda* r + r- into pi(a|s) proportional to exp(Q*(s,a) / beta). Small
/// beta recovers the deterministic policy; large beta washes out to uniform
/// and the resulting constraint violation is surfaced in `constraint_gap`.
pub fn mmbe(
    mdp: &TabularMdp,
    reward: &RewardTable,
    anti_reward: &RewardTable,
    constraint: RewardConstraint,
    beta: f64,
    opts: &MmOptions,
) -> Result<PlannerResult> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Invalid(format!("beta {beta} must be positive")));
    }
    let mut feas = *opts;
    feas.mode = MmMode::Feasible;
    let mm = mm_binary_search(mdp, reward, anti_reward, constraint, &feas)?;
    let scalarized = reward.scale_add(mm.lambda_star, anti_reward);
    let outcome = solve_optimal_from(mdp, &scalarized, opts.vi_tol, None);
    let n = mdp.n_states();
    let na = mdp.n_actions();
    let mut probs = ndarray::Array2::zeros((n, na));
    for s in 0..n {
        let row = outcome.q.row(s);
        let top = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let mut sum = 0.0;
        for a in 0..na {
            let p = ((row[a] - top) / beta).exp();
            probs[[s, a]] = p;
            sum += p;
        }
        for a in 0..na {
            probs[[s, a]] /= sum;
        }
    }
    let policy = StochasticPolicy::new(probs)?;
    let occ = occupancy_of_policy(mdp, &policy)?;
    let ret = expected_return(&occ, reward)?;
    let anti = expected_return(&occ, anti_reward)?;
    Ok(PlannerResult {
        policy: AnyPolicy::Single(policy),
        lambda_star: mm.lambda_star,
        achieved_return: ret,
        achieved_objective: anti,
        iterations: mm.iterations,
        converged: mm.converged,
        constraint_gap: ret - constraint.e_min,
    })
}

/// Mixture of max-misinformation policies against independently seeded
/// anti-rewards: member k regenerates the anti-reward with seed
/// base_seed + k, solves at the shared threshold, and the members are
/// flattened into one mixed policy.
pub fn mm_mix(
    mdp: &TabularMdp,
    reward: &RewardTable,
    anti_cfg: &AntiRewardConfig,
    constraint: RewardConstraint,
    n_mix: usize,
    weights: Option<Vec<f64>>,
    opts: &MmOptions,
) -> Result<PlannerResult> {
    if n_mix == 0 {
        return Err(Error::Invalid("n_mix must be at least 1".into()));
    }
    let outer = match weights {
        Some(w) => {
            if w.len() != n_mix {
                return Err(Error::Dimension(format!(
                    "{} weights for n_mix {n_mix}",
                    w.len()
                )));
            }
            w
        }
        None => vec![1.0 / n_mix as f64; n_mix],
    };
    let mut members = Vec::new();
    let mut flat_weights = Vec::new();
    let mut ret = 0.0;
    let mut anti_ret = 0.0;
    let mut lambda_star = 0.0;
    let mut iterations = 0;
    let mut converged = true;
    for (k, &wk) in outer.iter().enumerate() {
        let cfg = anti_cfg.with_seed(anti_cfg.seed + k as u64);
        let (anti, _) = gen_anti_reward(mdp, reward, &cfg)?;
        let part = mm_binary_search(mdp, reward, &anti, constraint, opts)?;
        ret += wk * part.achieved_return;
        anti_ret += wk * part.achieved_objective;
        lambda_star += wk * part.lambda_star;
        iterations += part.iterations;
        converged &= part.converged;
        match part.policy {
            AnyPolicy::Single(p) => {
                members.push(p);
                flat_weights.push(wk);
            }
            AnyPolicy::Mixed(m) => {
                let (inner, inner_w) = m.into_parts();
                for (p, iw) in inner.into_iter().zip(inner_w) {
                    members.push(p);
                    flat_weights.push(wk * iw);
                }
            }
        }
    }
    let mixed = MixedPolicy::new(members, flat_weights)?;
    Ok(PlannerResult {
        policy: AnyPolicy::Mixed(mixed),
        lambda_star,
        achieved_return: ret,
        achieved_objective: anti_ret,
        iterations,
        converged,
        constraint_gap: ret - constraint.e_min,
    })
}

/// Return of an arbitrary policy under an arbitrary reward, for callers that
/// hold a planner result and want it re-scored.
pub fn policy_return(mdp: &TabularMdp, policy: &AnyPolicy, reward: &RewardTable) -> Result<f64> {
    expected_return(&occupancy_of_any(mdp, policy)?, reward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antireward::DivergenceKind;
    use crate::solve::solve_soft;
    use ndarray::{arr1, arr2, Array3};

    /// One state, two actions, gamma 0. Return under r is just the chosen
    /// action's reward, which makes every landmark exact by hand.
    fn bandit(r: [f64; 2]) -> TabularMdp {
        let mut t = Array3::zeros((1, 2, 1));
        t[[0, 0, 0]] = 1.0;
        t[[0, 1, 0]] = 1.0;
        TabularMdp::new(t, RewardTable::new(arr2(&[r])).unwrap(), 0.0, arr1(&[1.0])).unwrap()
    }

    fn table(r: [f64; 2]) -> RewardTable {
        RewardTable::new(arr2(&[r])).unwrap()
    }

    #[test]
    fn reference_returns_on_bandit() {
        let mdp = bandit([1.0, 0.0]);
        let refs =
            reference_returns(&mdp, mdp.reward(), Some(&table([0.0, 1.0])), 1e-12).unwrap();
        assert!((refs.e_hat - 0.5).abs() < 1e-12);
        assert!((refs.e_star - 1.0).abs() < 1e-12);
        assert!((refs.e_minus.unwrap() - 0.0).abs() < 1e-12);
    }

    #[test]
    fn meir_at_uniform_return_keeps_lambda_zero() {
        let mdp = bandit([1.0, 0.0]);
        let res = meir(
            &mdp,
            mdp.reward(),
            RewardConstraint::new(0.5).unwrap(),
            &MeirOptions::default(),
        )
        .unwrap();
        assert_eq!(res.lambda_star, 0.0);
        assert!(res.converged);
        match &res.policy {
            AnyPolicy::Single(p) => {
                assert!((p.probs()[[0, 0]] - 0.5).abs() < 1e-9);
            }
            _ => panic!("meir returns a single policy"),
        }
        // Entropy of the uniform two-action policy.
        assert!((res.achieved_objective - (2.0f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn meir_interior_threshold_binds_and_matches_soft_family() {
        let mdp = bandit([1.0, 0.0]);
        let e_min = 0.8;
        let res = meir(
            &mdp,
            mdp.reward(),
            RewardConstraint::new(e_min).unwrap(),
            &MeirOptions::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert!((res.achieved_return - e_min).abs() <= 1e-6);
        assert!(res.lambda_star > 0.0);
        // The returned policy must coincide with the soft-optimal policy of
        // the scaled reward at lambda*.
        let soft = solve_soft(&mdp, &mdp.reward().scaled(res.lambda_star), 1e-10);
        match &res.policy {
            AnyPolicy::Single(p) => {
                for a in 0..2 {
                    assert!((p.probs()[[0, a]] - soft.policy.probs()[[0, a]]).abs() < 1e-9);
                }
            }
            _ => panic!("meir returns a single policy"),
        }
        // Closed form for the bandit: pi(a0) = sigma(lambda), return = pi(a0).
        let sigma = 1.0 / (1.0 + (-res.lambda_star).exp());
        assert!((sigma - e_min).abs() < 1e-6);
    }

    #[test]
    fn meir_at_optimal_return_reports_residual() {
        // Demanding the optimal return with a bounded multiplier leaves a
        // residual: the soft policy at the cap still hedges. For the bandit
        // the shortfall at lambda = 10 is 1 - sigma(10), about 4.5e-5.
        let mdp = bandit([1.0, 0.0]);
        let opts = MeirOptions {
            lambda_cap: Some(10.0),
            ..MeirOptions::default()
        };
        let res = meir(&mdp, mdp.reward(), RewardConstraint::new(1.0).unwrap(), &opts).unwrap();
        assert!(!res.converged);
        assert!(res.constraint_gap < 0.0);
        assert!(res.constraint_gap > -1e-3);
        assert!((res.lambda_star - 10.0).abs() < 1e-9);
    }

    #[test]
    fn meir_rejects_threshold_above_optimum() {
        let mdp = bandit([1.0, 0.0]);
        let err = meir(
            &mdp,
            mdp.reward(),
            RewardConstraint::new(1.5).unwrap(),
            &MeirOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InfeasibleThreshold(_)));
    }

    #[test]
    fn mm_exact_mixes_bracket_policies_to_hit_threshold() {
        // r = (1, 0), r- = (0, 1): the scalarized argmax flips at lambda = 1.
        // For e_min = 0.6 the optimal occupancy puts 0.6 on action 0, so the
        // anti-reward return is 0.4.
        let mdp = bandit([1.0, 0.0]);
        let anti = table([0.0, 1.0]);
        let res = mm_binary_search(
            &mdp,
            mdp.reward(),
            &anti,
            RewardConstraint::new(0.6).unwrap(),
            &MmOptions::default(),
        )
        .unwrap();
        assert!((res.achieved_return - 0.6).abs() < 1e-9);
        assert!((res.achieved_objective - 0.4).abs() < 1e-9);
        assert!((res.lambda_star - 1.0).abs() < 1e-6);
        match &res.policy {
            AnyPolicy::Mixed(m) => {
                assert_eq!(m.members().len(), 2);
                assert!((m.weights()[0] - 0.4).abs() < 1e-9);
                assert!((m.weights()[1] - 0.6).abs() < 1e-9);
            }
            _ => panic!("exact mode mixes two policies"),
        }
        // Complementary slackness at the exact solution.
        assert!(res.lambda_star * res.constraint_gap.abs() <= 1e-6);
    }

    #[test]
    fn mm_feasible_returns_upper_bracket_policy() {
        let mdp = bandit([1.0, 0.0]);
        let anti = table([0.0, 1.0]);
        let mut opts = MmOptions::default();
        opts.mode = MmMode::Feasible;
        let res = mm_binary_search(
            &mdp,
            mdp.reward(),
            &anti,
            RewardConstraint::new(0.6).unwrap(),
            &opts,
        )
        .unwrap();
        assert!(res.achieved_return >= 0.6 - 1e-9);
        assert!((res.achieved_return - 1.0).abs() < 1e-9);
        match &res.policy {
            AnyPolicy::Single(p) => assert_eq!(p.greedy_actions(), vec![0]),
            _ => panic!("feasible mode returns a single policy"),
        }
    }

    #[test]
    fn mm_trivial_threshold_stops_at_lambda_zero() {
        // The anti-reward's own greedy policy already clears e_min.
        let mdp = bandit([1.0, 0.5]);
        let anti = table([0.0, 1.0]);
        let res = mm_binary_search(
            &mdp,
            mdp.reward(),
            &anti,
            RewardConstraint::new(0.4).unwrap(),
            &MmOptions::default(),
        )
        .unwrap();
        assert_eq!(res.lambda_star, 0.0);
        assert!((res.achieved_return - 0.5).abs() < 1e-12);
        assert!((res.achieved_objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mm_rejects_threshold_above_optimum() {
        let mdp = bandit([1.0, 0.0]);
        let err = mm_binary_search(
            &mdp,
            mdp.reward(),
            &table([0.0, 1.0]),
            RewardConstraint::new(1.2).unwrap(),
            &MmOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InfeasibleThreshold(_)));
    }

    #[test]
    fn mm_reports_cap_too_small() {
        let mdp = bandit([1.0, 0.0]);
        let anti = table([0.0, 1.0]);
        let mut opts = MmOptions::default();
        opts.lambda_cap = Some(0.5);
        let err = mm_binary_search(
            &mdp,
            mdp.reward(),
            &anti,
            RewardConstraint::new(0.9).unwrap(),
            &opts,
        )
        .unwrap_err();
        assert!(matches!(err, Error::LambdaCapTooSmall(_)));
    }

    #[test]
    fn primal_dual_tracks_exact_solution() {
        let mdp = bandit([1.0, 0.0]);
        let anti = table([0.0, 1.0]);
        let mut opts = PrimalDualOptions::default();
        opts.alpha = 0.01;
        opts.iterations = 4000;
        let res = mm_primal_dual(
            &mdp,
            mdp.reward(),
            &anti,
            RewardConstraint::new(0.6).unwrap(),
            &opts,
        )
        .unwrap();
        assert!(
            (res.achieved_return - 0.6).abs() <= 5e-3,
            "return {}",
            res.achieved_return
        );
        assert!((res.achieved_objective - 0.4).abs() <= 5e-3);
        assert!(res.converged);
    }

    #[test]
    fn primal_dual_multiplier_decreases_when_constraint_is_slack() {
        let mdp = bandit([1.0, 0.0]);
        let anti = table([0.0, 1.0]);
        let mut opts = PrimalDualOptions::default();
        opts.lambda0 = 100.0;
        opts.alpha = 0.5;
        opts.iterations = 2;
        let res = mm_primal_dual(
            &mdp,
            mdp.reward(),
            &anti,
            RewardConstraint::new(0.6).unwrap(),
            &opts,
        )
        .unwrap();
        // Tail average covers only the second iterate, whose multiplier has
        // already taken one step down from 100.
        assert!(res.lambda_star < 100.0);
        assert!(res.lambda_star > 0.0);
    }

    #[test]
    fn primal_dual_multiplier_projects_to_zero() {
        // Anti-reward and reward agree on the best action, so the constraint
        // is slack from the start and lambda is driven into the projection.
        let mdp = bandit([1.0, 0.0]);
        let anti = table([0.2, 0.1]);
        let mut opts = PrimalDualOptions::default();
        opts.lambda0 = 0.4;
        opts.alpha = 1.0;
        opts.iterations = 10;
        let res = mm_primal_dual(
            &mdp,
            mdp.reward(),
            &anti,
            RewardConstraint::new(0.5).unwrap(),
            &opts,
        )
        .unwrap();
        assert_eq!(res.lambda_star, 0.0);
        assert!(res.achieved_return >= 0.5);
    }

    #[test]
    fn mmbe_beta_limits() {
        let mdp = bandit([1.0, 0.0]);
        let anti = table([0.0, 1.0]);
        let constraint = RewardConstraint::new(0.6).unwrap();
        let cold = mmbe(&mdp, mdp.reward(), &anti, constraint, 1e-3, &MmOptions::default())
            .unwrap();
        let feas = {
            let mut o = MmOptions::default();
            o.mode = MmMode::Feasible;
            mm_binary_search(&mdp, mdp.reward(), &anti, constraint, &o).unwrap()
        };
        let feas_actions = match &feas.policy {
            AnyPolicy::Single(p) => p.greedy_actions(),
            _ => unreachable!(),
        };
        match &cold.policy {
            AnyPolicy::Single(p) => assert_eq!(p.greedy_actions(), feas_actions),
            _ => panic!("mmbe returns a single policy"),
        }
        let hot = mmbe(&mdp, mdp.reward(), &anti, constraint, 1e3, &MmOptions::default())
            .unwrap();
        match &hot.policy {
            AnyPolicy::Single(p) => {
                let h: f64 = -(0..2)
                    .map(|a| {
                        let pr = p.probs()[[0, a]];
                        pr * pr.ln()
                    })
                    .sum::<f64>();
                assert!(h >= 0.99 * (2.0f64).ln(), "entropy {h}");
            }
            _ => panic!(),
        }
        // The washed-out policy violates the constraint and says so.
        assert!(hot.constraint_gap < 0.0);
    }

    #[test]
    fn mm_mix_members_meet_threshold_in_aggregate() {
        let spec = crate::envs::RandomMdpSpec {
            n_states: 28,
            n_actions: 3,
            gamma: 0.9,
            seed: 11,
        };
        let mdp = crate::envs::make_random_mdp(&spec).unwrap();
        let refs = reference_returns(&mdp, mdp.reward(), None, 1e-10).unwrap();
        let e_min = threshold_from_fraction(refs.e_hat, refs.e_star, 0.5);
        let cfg = AntiRewardConfig::new(DivergenceKind::ForwardKl);
        let res = mm_mix(
            &mdp,
            mdp.reward(),
            &cfg,
            RewardConstraint::new(e_min).unwrap(),
            3,
            None,
            &MmOptions::default(),
        )
        .unwrap();
        assert!(res.achieved_return >= e_min - 1e-6);
        match &res.policy {
            AnyPolicy::Mixed(m) => {
                assert!(m.members().len() >= 3);
                let total: f64 = m.weights().iter().sum();
                assert!((total - 1.0).abs() < 1e-9);
                // Re-scoring the mixture reproduces the reported return.
                let direct = policy_return(&mdp, &res.policy, mdp.reward()).unwrap();
                assert!((direct - res.achieved_return).abs() < 1e-9);
            }
            _ => panic!("mm_mix returns a mixture"),
        }
    }
}
