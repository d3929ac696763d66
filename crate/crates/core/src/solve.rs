//! Hard and entropy-regularized value iteration.

use ndarray::{Array1, Array2};

use crate::mdp::{RewardTable, StochasticPolicy, TabularMdp};
use crate::util::logsumexp;

/// Result of a value-iteration solve. `q` is the converged state-action value
/// table; for the soft solver it holds the soft Q-values.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub policy: StochasticPolicy,
    pub values: Array1<f64>,
    pub q: Array2<f64>,
    pub iterations: usize,
}

const MAX_SWEEPS: usize = 1_000_000;

/// Absolute sup-norm tolerances below the floating-point noise floor of the
/// current value scale are unreachable, so each sweep terminates against
/// tol + 8 eps |V|_inf. This matters when rewards are scaled by a large
/// multiplier and values reach 1e7 or more.
fn effective_tol(tol: f64, v: &Array1<f64>) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    tol + 8.0 * f64::EPSILON * scale
}

fn q_from_values(mdp: &TabularMdp, reward: &RewardTable, v: &Array1<f64>) -> Array2<f64> {
    let n = mdp.n_states();
    let na = mdp.n_actions();
    let mut q = Array2::zeros((n, na));
    for s in 0..n {
        for a in 0..na {
            let mut future = 0.0;
            for s2 in 0..n {
                let p = mdp.transition()[[s, a, s2]];
                if p > 0.0 {
                    future += p * v[s2];
                }
            }
            q[[s, a]] = reward.values()[[s, a]] + mdp.gamma() * future;
        }
    }
    q
}

/// Greedy value iteration to sup-norm tolerance `tol`. Ties in the greedy
/// policy break to the lowest action index.
pub fn solve_optimal(mdp: &TabularMdp, reward: &RewardTable, tol: f64) -> SolveOutcome {
    solve_optimal_from(mdp, reward, tol, None)
}

/// As `solve_optimal`, warm-started from a previous value function.
pub fn solve_optimal_from(
    mdp: &TabularMdp,
    reward: &RewardTable,
    tol: f64,
    warm: Option<&Array1<f64>>,
) -> SolveOutcome {
    let n = mdp.n_states();
    let mut v = warm.cloned().unwrap_or_else(|| Array1::zeros(n));
    let mut iterations = 0;
    loop {
        let q = q_from_values(mdp, reward, &v);
        let mut v_next = Array1::zeros(n);
        for s in 0..n {
            let row = q.row(s);
            let mut best = row[0];
            for &qv in row.iter().skip(1) {
                if qv > best {
                    best = qv;
                }
            }
            v_next[s] = best;
        }
        iterations += 1;
        let resid = v
            .iter()
            .zip(v_next.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        v = v_next;
        if resid <= effective_tol(tol, &v) {
            let q = q_from_values(mdp, reward, &v);
            let mut actions = Vec::with_capacity(n);
            for s in 0..n {
                let row = q.row(s);
                let mut best = 0;
                let mut best_q = row[0];
                for (a, &qv) in row.iter().enumerate().skip(1) {
                    if qv > best_q {
                        best_q = qv;
                        best = a;
                    }
                }
                actions.push(best);
            }
            let policy =
                StochasticPolicy::from_actions(&actions, mdp.n_actions()).expect("greedy policy");
            return SolveOutcome {
                policy,
                values: v,
                q,
                iterations,
            };
        }
        assert!(iterations < MAX_SWEEPS, "value iteration failed to contract");
    }
}

/// Entropy-regularized (soft) value iteration:
/// Q = r + gamma P V,  V(s) = log sum_a exp Q(s,a),  pi = exp(Q - V).
/// The returned policy maximizes E_pi[r] + H(pi). Stable for reward scales up
/// to ~1e6 via max-subtracted log-sum-exp.
pub fn solve_soft(mdp: &TabularMdp, reward: &RewardTable, tol: f64) -> SolveOutcome {
    solve_soft_from(mdp, reward, tol, None)
}

/// As `solve_soft`, warm-started from a previous soft value function.
pub fn solve_soft_from(
    mdp: &TabularMdp,
    reward: &RewardTable,
    tol: f64,
    warm: Option<&Array1<f64>>,
) -> SolveOutcome {
    let n = mdp.n_states();
    let na = mdp.n_actions();
    let mut v = warm.cloned().unwrap_or_else(|| Array1::zeros(n));
    let mut iterations = 0;
    loop {
        let q = q_from_values(mdp, reward, &v);
        let mut v_next = Array1::zeros(n);
        for s in 0..n {
            v_next[s] = logsumexp(q.row(s).as_slice().expect("contiguous row"));
        }
        iterations += 1;
        let resid = v
            .iter()
            .zip(v_next.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        v = v_next;
        if resid <= effective_tol(tol, &v) {
            let q = q_from_values(mdp, reward, &v);
            let mut probs = Array2::zeros((n, na));
            for s in 0..n {
                let vs = logsumexp(q.row(s).as_slice().expect("contiguous row"));
                let mut sum = 0.0;
                for a in 0..na {
                    let p = (q[[s, a]] - vs).exp();
                    probs[[s, a]] = p;
                    sum += p;
                }
                for a in 0..na {
                    probs[[s, a]] /= sum;
                }
            }
            let policy = StochasticPolicy::new(probs).expect("softmax rows");
            return SolveOutcome {
                policy,
                values: v,
                q,
                iterations,
            };
        }
        assert!(iterations < MAX_SWEEPS, "soft value iteration failed to contract");
    }
}
