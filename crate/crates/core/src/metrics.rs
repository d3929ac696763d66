//! Reward-recovery metrics.
//!
//! How much of a hidden reward does a recovered reward expose? Three views:
//! correlation of the tables themselves (Pearson, and its
//! canonicalized-and-rescaled cousin EPIC), the return a planner squeezes out
//! of the recovered reward when scored against the true one (rollout
//! evaluation), and whether the two rewards rank random policies the same
//! way (ordering consistency).

use ndarray::Array3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::{RewardTable, StochasticPolicy, TabularMdp};
use crate::occupancy::{expected_return, occupancy_of_policy};
use crate::solve::solve_optimal;

/// Pearson correlation. Computed as s_xy / sqrt(s_xx * s_yy) so identical
/// inputs give exactly 1.0 and swapping the arguments is bitwise neutral.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "pearson inputs of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Invalid("pearson needs at least 2 points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateVariance(
            "pearson input has zero variance".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    pearson(&rx, &ry)
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("finite values"));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Canonicalize a next-state-dependent reward R(s, a, s') by removing the
/// potential-shaping degrees of freedom: C(R) = R + gamma m(s') - m(s)
/// - gamma M, with m the per-state mean over (a, s') under uniform weights
/// and M the mean of m.
pub fn canonical_reward(r: &Array3<f64>, gamma: f64) -> Array3<f64> {
    let (n, na, n2) = r.dim();
    assert_eq!(n, n2, "reward must be square in s, s'");
    let mut m = vec![0.0f64; n];
    for s in 0..n {
        let mut acc = 0.0;
        for a in 0..na {
            for s2 in 0..n {
                acc += r[[s, a, s2]];
            }
        }
        m[s] = acc / (na * n) as f64;
    }
    let big_m = m.iter().sum::<f64>() / n as f64;
    let mut out = Array3::zeros((n, na, n));
    for s in 0..n {
        for a in 0..na {
            for s2 in 0..n {
                out[[s, a, s2]] = r[[s, a, s2]] + gamma * m[s2] - m[s] - gamma * big_m;
            }
        }
    }
    out
}

/// Lift a state-action reward table to the (s, a, s') form, constant in s'.
pub fn lift_reward(r: &RewardTable) -> Array3<f64> {
    let n = r.n_states();
    let na = r.n_actions();
    let mut out = Array3::zeros((n, na, n));
    for s in 0..n {
        for a in 0..na {
            for s2 in 0..n {
                out[[s, a, s2]] = r.values()[[s, a]];
            }
        }
    }
    out
}

/// EPIC pseudometric between next-state-dependent rewards:
/// sqrt((1 - pearson(C(a), C(b))) / 2). Zero for rewards that differ only by
/// potential shaping and positive affine rescaling.
pub fn epic_distance_3(a: &Array3<f64>, b: &Array3<f64>, gamma: f64) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "reward shapes {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let ca = canonical_reward(a, gamma);
    let cb = canonical_reward(b, gamma);
    correlation_half_distance(
        ca.as_slice().expect("contiguous"),
        cb.as_slice().expect("contiguous"),
    )
}

/// sqrt((1 - pearson)/2), computed as half the distance between the centered
/// unit vectors. The direct form cancels catastrophically near correlation 1
/// and cannot resolve distances below ~1e-8; this one is exact there.
fn correlation_half_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Dimension(format!(
            "correlation needs two equal-length vectors, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let center = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let c: Vec<f64> = v.iter().map(|t| t - mean).collect();
        let norm = c.iter().map(|t| t * t).sum::<f64>().sqrt();
        (c, norm)
    };
    let (cx, nx) = center(x);
    let (cy, ny) = center(y);
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::DegenerateVariance(
            "canonical reward has zero variance".into(),
        ));
    }
    let mut sq = 0.0;
    for (a, b) in cx.iter().zip(&cy) {
        let d = a / nx - b / ny;
        sq += d * d;
    }
    Ok((sq.sqrt() / 2.0).min(1.0))
}

/// EPIC between state-action reward tables, via the constant-in-s' lift.
pub fn epic_distance(a: &RewardTable, b: &RewardTable, gamma: f64) -> Result<f64> {
    if a.values().shape() != b.values().shape() {
        return Err(Error::Dimension(format!(
            "reward shapes {:?} vs {:?}",
            a.values().shape(),
            b.values().shape()
        )));
    }
    epic_distance_3(&lift_reward(a), &lift_reward(b), gamma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutEval {
    /// True-reward return of the policy that is greedy for the recovered
    /// reward.
    pub return_true: f64,
    /// True-reward return of the true optimal policy.
    pub optimal_return: f64,
    /// return_true / optimal_return; meaningful when the optimal return is
    /// positive.
    pub ratio: f64,
}

/// Plan greedily against the recovered reward, score against the true one.
pub fn rollout_eval(
    mdp: &TabularMdp,
    true_reward: &RewardTable,
    recovered: &RewardTable,
    vi_tol: f64,
) -> Result<RolloutEval> {
    let greedy = solve_optimal(mdp, recovered, vi_tol);
    let ret = expected_return(&occupancy_of_policy(mdp, &greedy.policy)?, true_reward)?;
    let opt = solve_optimal(mdp, true_reward, vi_tol);
    let e_star = expected_return(&occupancy_of_policy(mdp, &opt.policy)?, true_reward)?;
    Ok(RolloutEval {
        return_true: ret,
        optimal_return: e_star,
        ratio: ret / e_star,
    })
}

/// Fraction of random policy pairs on which the two rewards agree about
/// which member returns more. Pairs where either reward sees a difference
/// within 1e-9 count as agreement.
pub fn ordering_consistency(
    mdp: &TabularMdp,
    true_reward: &RewardTable,
    recovered: &RewardTable,
    n_pairs: usize,
    seed: u64,
) -> Result<f64> {
    if n_pairs == 0 {
        return Err(Error::Invalid("n_pairs must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = mdp.n_states();
    let na = mdp.n_actions();
    let mut agreements = 0usize;
    for _ in 0..n_pairs {
        let p1 = StochasticPolicy::random_with(&mut rng, n, na);
        let p2 = StochasticPolicy::random_with(&mut rng, n, na);
        let o1 = occupancy_of_policy(mdp, &p1)?;
        let o2 = occupancy_of_policy(mdp, &p2)?;
        let d_true = expected_return(&o1, true_reward)? - expected_return(&o2, true_reward)?;
        let d_rec = expected_return(&o1, recovered)? - expected_return(&o2, recovered)?;
        if d_true.abs() <= 1e-9 || d_rec.abs() <= 1e-9 || d_true * d_rec > 0.0 {
            agreements += 1;
        }
    }
    Ok(agreements as f64 / n_pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2};
    use rand::Rng;

    #[test]
    fn pearson_identical_is_exactly_one() {
        let x = [0.3, -1.2, 4.5, 0.0, 2.25];
        assert_eq!(pearson(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn pearson_affine_and_anticorrelated() {
        let x = [0.3, -1.2, 4.5, 0.0, 2.25];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 7.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let z: Vec<f64> = x.iter().map(|v| -2.0 * v).collect();
        assert!((pearson(&x, &z).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_is_bitwise_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let x: Vec<f64> = (0..20).map(|_| rng.random::<f64>() - 0.5).collect();
            let y: Vec<f64> = (0..20).map(|_| rng.random::<f64>() - 0.5).collect();
            let a = pearson(&x, &y).unwrap();
            let b = pearson(&y, &x).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn pearson_rejects_constant_input() {
        let x = [1.0, 1.0, 1.0];
        let y = [0.0, 0.5, 1.0];
        assert!(matches!(
            pearson(&x, &y).unwrap_err(),
            Error::DegenerateVariance(_)
        ));
    }

    #[test]
    fn spearman_sees_through_monotone_maps() {
        let x: [f64; 5] = [0.1, 2.0, -3.0, 0.7, 1.1];
        let y: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0).collect();
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    fn random_r3(rng: &mut ChaCha8Rng, n: usize, na: usize) -> Array3<f64> {
        let mut r = Array3::zeros((n, na, n));
        for v in r.iter_mut() {
            *v = rng.random::<f64>() * 2.0 - 1.0;
        }
        r
    }

    #[test]
    fn epic_of_reward_with_itself_is_exactly_zero() {
        let r = RewardTable::new(arr2(&[[0.5, -0.3], [1.2, 0.0]])).unwrap();
        assert_eq!(epic_distance(&r, &r, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn epic_ignores_positive_affine_rescaling() {
        let r = RewardTable::new(arr2(&[[0.5, -0.3], [1.2, 0.0]])).unwrap();
        let mut scaled = r.scaled(2.5);
        scaled = RewardTable::new(scaled.values().mapv(|v| v + 0.7)).unwrap();
        assert!(epic_distance(&r, &scaled, 0.9).unwrap() < 1e-9);
    }

    #[test]
    fn epic_ignores_potential_shaping() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let gamma = 0.9;
        for _ in 0..20 {
            let r = random_r3(&mut rng, 4, 3);
            let phi: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let mut shaped = r.clone();
            for s in 0..4 {
                for a in 0..3 {
                    for s2 in 0..4 {
                        shaped[[s, a, s2]] += gamma * phi[s2] - phi[s];
                    }
                }
            }
            let d = epic_distance_3(&r, &shaped, gamma).unwrap();
            assert!(d <= 1e-9, "epic {d}");
        }
    }

    #[test]
    fn epic_stays_in_unit_interval_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let a = random_r3(&mut rng, 3, 2);
            let b = random_r3(&mut rng, 3, 2);
            let d1 = epic_distance_3(&a, &b, 0.95).unwrap();
            let d2 = epic_distance_3(&b, &a, 0.95).unwrap();
            assert!((0.0..=1.0).contains(&d1), "epic {d1}");
            assert_eq!(d1.to_bits(), d2.to_bits());
        }
    }

    #[test]
    fn rollout_of_true_reward_is_optimal() {
        let mut t = ndarray::Array3::zeros((1, 2, 1));
        t[[0, 0, 0]] = 1.0;
        t[[0, 1, 0]] = 1.0;
        let r = RewardTable::new(arr2(&[[1.0, 0.2]])).unwrap();
        let mdp = TabularMdp::new(t, r.clone(), 0.5, arr1(&[1.0])).unwrap();
        let ev = rollout_eval(&mdp, &r, &r, 1e-12).unwrap();
        assert!((ev.ratio - 1.0).abs() < 1e-12);
        assert!((ev.return_true - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ordering_consistency_of_identical_rewards_is_one() {
        let spec = crate::envs::RandomMdpSpec {
            n_states: 28,
            n_actions: 2,
            gamma: 0.9,
            seed: 21,
        };
        let mdp = crate::envs::make_random_mdp(&spec).unwrap();
        let c = ordering_consistency(&mdp, mdp.reward(), mdp.reward(), 50, 3).unwrap();
        assert_eq!(c, 1.0);
    }

    #[test]
    fn ordering_consistency_detects_negated_reward() {
        let spec = crate::envs::RandomMdpSpec {
            n_states: 28,
            n_actions: 2,
            gamma: 0.9,
            seed: 22,
        };
        let mdp = crate::envs::make_random_mdp(&spec).unwrap();
        let neg = mdp.reward().scaled(-1.0);
        let c = ordering_consistency(&mdp, mdp.reward(), &neg, 50, 3).unwrap();
        assert_eq!(c, 0.0);
    }
}
