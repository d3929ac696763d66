//! Seeded trajectory sampling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::{AnyPolicy, TabularMdp, Trajectory};

fn draw_categorical<R: Rng>(rng: &mut R, probs: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.enumerate() {
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    // Row sums can fall a hair short of 1; attribute the remainder to the
    // final outcome.
    last
}

/// Samples `n` fixed-horizon trajectories. Mixture policies draw their member
/// once per trajectory. Fully deterministic given the seed.
pub fn sample_trajectories(
    mdp: &TabularMdp,
    policy: &AnyPolicy,
    n: usize,
    horizon: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
        return Err(Error::Dimension(format!(
            "policy {}x{} vs mdp {}x{}",
            policy.n_states(),
            policy.n_actions(),
            mdp.n_states(),
            mdp.n_actions()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let member = match policy {
            AnyPolicy::Single(p) => p,
            AnyPolicy::Mixed(m) => {
                let k = draw_categorical(&mut rng, m.weights().iter().copied());
                &m.members()[k]
            }
        };
        let mut states = Vec::with_capacity(horizon);
        let mut actions = Vec::with_capacity(horizon);
        let mut rewards = Vec::with_capacity(horizon);
        let mut s = draw_categorical(&mut rng, mdp.initial_dist().iter().copied());
        for _ in 0..horizon {
            let a = draw_categorical(&mut rng, member.probs().row(s).iter().copied());
            states.push(s);
            actions.push(a);
            rewards.push(mdp.reward().values()[[s, a]]);
            s = draw_categorical(&mut rng, mdp.transition().slice(ndarray::s![s, a, ..]).iter().copied());
        }
        out.push(Trajectory {
            states,
            actions,
            rewards,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{MixedPolicy, RewardTable, StochasticPolicy};
    use ndarray::{arr1, arr2, Array3};

    fn chain() -> TabularMdp {
        let mut t = Array3::zeros((2, 1, 2));
        t[[0, 0, 1]] = 1.0;
        t[[1, 0, 1]] = 1.0;
        let r = RewardTable::new(arr2(&[[0.0], [1.0]])).unwrap();
        TabularMdp::new(t, r, 0.5, arr1(&[1.0, 0.0])).unwrap()
    }

    #[test]
    fn deterministic_chain_trajectory() {
        let mdp = chain();
        let pol = AnyPolicy::Single(StochasticPolicy::uniform(2, 1));
        let trajs = sample_trajectories(&mdp, &pol, 1, 4, 7).unwrap();
        assert_eq!(trajs[0].states, vec![0, 1, 1, 1]);
        assert_eq!(trajs[0].rewards, vec![0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn same_seed_reproduces_batches() {
        let mdp = chain();
        let pol = AnyPolicy::Single(StochasticPolicy::uniform(2, 1));
        let a = sample_trajectories(&mdp, &pol, 5, 10, 42).unwrap();
        let b = sample_trajectories(&mdp, &pol, 5, 10, 42).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.states, y.states);
            assert_eq!(x.actions, y.actions);
        }
    }

    #[test]
    fn mixture_draw_happens_once_per_trajectory() {
        // Two deterministic members on a 1-state 2-action MDP: within any single
        // trajectory all actions agree.
        let mut t = Array3::zeros((1, 2, 1));
        t[[0, 0, 0]] = 1.0;
        t[[0, 1, 0]] = 1.0;
        let r = RewardTable::new(arr2(&[[0.0, 1.0]])).unwrap();
        let mdp = TabularMdp::new(t, r, 0.5, arr1(&[1.0])).unwrap();
        let m0 = StochasticPolicy::from_actions(&[0], 2).unwrap();
        let m1 = StochasticPolicy::from_actions(&[1], 2).unwrap();
        let mix = MixedPolicy::new(vec![m0, m1], vec![0.5, 0.5]).unwrap();
        let trajs = sample_trajectories(&mdp, &AnyPolicy::Mixed(mix), 40, 6, 3).unwrap();
        let mut seen = [false; 2];
        for traj in &trajs {
            let first = traj.actions[0];
            assert!(traj.actions.iter().all(|&a| a == first));
            seen[first] = true;
        }
        assert!(seen[0] && seen[1], "both members should be drawn across 40 trajectories");
    }
}
