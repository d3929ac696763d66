//! JSON file formats for MDPs, policies, occupancies, and rewards.
//!
//! Schemas are strict: unknown fields are rejected on read. Serialization is
//! deterministic (fixed field order, shortest round-trip float formatting),
//! so equal inputs always produce byte-identical files.

use ndarray::{Array1, Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{AnyPolicy, MixedPolicy, RewardTable, StochasticPolicy, TabularMdp};
use crate::occupancy::OccupancyMeasure;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpJson {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
    pub initial_dist: Vec<f64>,
}

impl MdpJson {
    pub fn from_mdp(mdp: &TabularMdp) -> Self {
        let n = mdp.n_states();
        let na = mdp.n_actions();
        let transition = (0..n)
            .map(|s| {
                (0..na)
                    .map(|a| (0..n).map(|s2| mdp.transition()[[s, a, s2]]).collect())
                    .collect()
            })
            .collect();
        MdpJson {
            n_states: n,
            n_actions: na,
            gamma: mdp.gamma(),
            transition,
            reward: matrix_to_rows(mdp.reward().values()),
            initial_dist: mdp.initial_dist().to_vec(),
        }
    }

    pub fn into_mdp(self) -> Result<TabularMdp> {
        let n = self.n_states;
        let na = self.n_actions;
        if self.transition.len() != n {
            return Err(Error::Dimension(format!(
                "transition has {} state rows, expected {n}",
                self.transition.len()
            )));
        }
        let mut t = Array3::zeros((n, na, n));
        for (s, per_state) in self.transition.iter().enumerate() {
            if per_state.len() != na {
                return Err(Error::Dimension(format!(
                    "transition[{s}] has {} action rows, expected {na}",
                    per_state.len()
                )));
            }
            for (a, row) in per_state.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::Dimension(format!(
                        "transition[{s}][{a}] has {} entries, expected {n}",
                        row.len()
                    )));
                }
                for (s2, &p) in row.iter().enumerate() {
                    t[[s, a, s2]] = p;
                }
            }
        }
        let reward = RewardTable::new(rows_to_matrix(&self.reward, n, na, "reward")?)?;
        if self.initial_dist.len() != n {
            return Err(Error::Dimension(format!(
                "initial_dist has {} entries, expected {n}",
                self.initial_dist.len()
            )));
        }
        TabularMdp::new(t, reward, self.gamma, Array1::from_vec(self.initial_dist))
    }
}

fn matrix_to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn rows_to_matrix(rows: &[Vec<f64>], n: usize, na: usize, what: &str) -> Result<Array2<f64>> {
    if rows.len() != n {
        return Err(Error::Dimension(format!(
            "{what} has {} rows, expected {n}",
            rows.len()
        )));
    }
    let mut m = Array2::zeros((n, na));
    for (s, row) in rows.iter().enumerate() {
        if row.len() != na {
            return Err(Error::Dimension(format!(
                "{what}[{s}] has {} entries, expected {na}",
                row.len()
            )));
        }
        for (a, &v) in row.iter().enumerate() {
            m[[s, a]] = v;
        }
    }
    Ok(m)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyJson {
    pub probs: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedPolicyJson {
    pub members: Vec<PolicyJson>,
    pub weights: Vec<f64>,
}

pub fn policy_to_value(policy: &AnyPolicy) -> serde_json::Value {
    match policy {
        AnyPolicy::Single(p) => serde_json::to_value(PolicyJson {
            probs: matrix_to_rows(p.probs()),
        })
        .expect("policy json"),
        AnyPolicy::Mixed(m) => serde_json::to_value(MixedPolicyJson {
            members: m
                .members()
                .iter()
                .map(|p| PolicyJson {
                    probs: matrix_to_rows(p.probs()),
                })
                .collect(),
            weights: m.weights().to_vec(),
        })
        .expect("policy json"),
    }
}

pub fn policy_from_value(value: serde_json::Value) -> Result<AnyPolicy> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Config("policy must be a JSON object".into()))?;
    if obj.contains_key("probs") {
        let p: PolicyJson = serde_json::from_value(value)?;
        let n = p.probs.len();
        let na = p.probs.first().map(|r| r.len()).unwrap_or(0);
        Ok(AnyPolicy::Single(StochasticPolicy::new(rows_to_matrix(
            &p.probs, n, na, "probs",
        )?)?))
    } else if obj.contains_key("members") {
        let m: MixedPolicyJson = serde_json::from_value(value)?;
        let mut members = Vec::with_capacity(m.members.len());
        for pj in m.members {
            let n = pj.probs.len();
            let na = pj.probs.first().map(|r| r.len()).unwrap_or(0);
            members.push(StochasticPolicy::new(rows_to_matrix(
                &pj.probs, n, na, "probs",
            )?)?);
        }
        Ok(AnyPolicy::Mixed(MixedPolicy::new(members, m.weights)?))
    } else {
        Err(Error::Config(
            "policy object needs either 'probs' or 'members'/'weights'".into(),
        ))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupancyJson {
    pub rho: Vec<Vec<f64>>,
}

pub fn occupancy_to_value(occ: &OccupancyMeasure) -> serde_json::Value {
    serde_json::to_value(OccupancyJson {
        rho: matrix_to_rows(occ.rho()),
    })
    .expect("occupancy json")
}

pub fn occupancy_from_value(value: serde_json::Value) -> Result<OccupancyMeasure> {
    let o: OccupancyJson = serde_json::from_value(value)?;
    let n = o.rho.len();
    let na = o.rho.first().map(|r| r.len()).unwrap_or(0);
    OccupancyMeasure::new(rows_to_matrix(&o.rho, n, na, "rho")?)
}

/// Provenance header carried by generated anti-reward files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RewardProvenance {
    pub kind: String,
    pub iterations: usize,
    pub seed: u64,
    pub merl_temperature: f64,
}

/// Convergence metadata carried by recovered-reward files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RewardConvergence {
    pub iterations: usize,
    pub converged: bool,
    pub final_grad_l1: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardJson {
    pub values: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<RewardProvenance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<RewardConvergence>,
}

pub fn reward_to_value(
    reward: &RewardTable,
    provenance: Option<RewardProvenance>,
    convergence: Option<RewardConvergence>,
) -> serde_json::Value {
    serde_json::to_value(RewardJson {
        values: matrix_to_rows(reward.values()),
        provenance,
        convergence,
    })
    .expect("reward json")
}

pub fn reward_from_value(value: serde_json::Value) -> Result<RewardTable> {
    let r: RewardJson = serde_json::from_value(value)?;
    let n = r.values.len();
    let na = r.values.first().map(|row| row.len()).unwrap_or(0);
    RewardTable::new(rows_to_matrix(&r.values, n, na, "values")?)
}

/// Pretty JSON with a trailing newline, the on-disk form of every artifact.
pub fn to_json_string(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json");
    s.push('\n');
    s
}

pub fn mdp_to_json_string(mdp: &TabularMdp) -> String {
    to_json_string(&serde_json::to_value(MdpJson::from_mdp(mdp)).expect("mdp json"))
}

pub fn mdp_from_json_str(s: &str) -> Result<TabularMdp> {
    let parsed: MdpJson = serde_json::from_str(s)?;
    parsed.into_mdp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2};

    fn chain() -> TabularMdp {
        let mut t = Array3::zeros((2, 1, 2));
        t[[0, 0, 1]] = 1.0;
        t[[1, 0, 1]] = 1.0;
        let r = RewardTable::new(arr2(&[[0.0], [0.3333333333333333]])).unwrap();
        TabularMdp::new(t, r, 0.5, arr1(&[1.0, 0.0])).unwrap()
    }

    #[test]
    fn mdp_round_trip_is_bit_stable() {
        let mdp = chain();
        let s1 = mdp_to_json_string(&mdp);
        let back = mdp_from_json_str(&s1).unwrap();
        let s2 = mdp_to_json_string(&back);
        assert_eq!(s1, s2);
        assert_eq!(
            back.reward().values()[[1, 0]].to_bits(),
            mdp.reward().values()[[1, 0]].to_bits()
        );
    }

    #[test]
    fn mdp_json_rejects_unknown_fields() {
        let mut v = serde_json::to_value(MdpJson::from_mdp(&chain())).unwrap();
        v.as_object_mut()
            .unwrap()
            .insert("extra".into(), serde_json::json!(1));
        let s = serde_json::to_string(&v).unwrap();
        assert!(mdp_from_json_str(&s).is_err());
    }

    #[test]
    fn policy_json_distinguishes_single_and_mixed() {
        let single = AnyPolicy::Single(StochasticPolicy::uniform(2, 2));
        let v = policy_to_value(&single);
        assert!(v.get("probs").is_some());
        let back = policy_from_value(v).unwrap();
        assert_eq!(back, single);

        let mixed = AnyPolicy::Mixed(
            MixedPolicy::new(
                vec![StochasticPolicy::uniform(2, 2), StochasticPolicy::uniform(2, 2)],
                vec![0.25, 0.75],
            )
            .unwrap(),
        );
        let v = policy_to_value(&mixed);
        assert!(v.get("members").is_some());
        let back = policy_from_value(v).unwrap();
        assert_eq!(back, mixed);
    }

    #[test]
    fn reward_json_carries_provenance() {
        let r = RewardTable::new(arr2(&[[1.0, -1.0]])).unwrap();
        let v = reward_to_value(
            &r,
            Some(RewardProvenance {
                kind: "forward_kl".into(),
                iterations: 5,
                seed: 3,
                merl_temperature: 1.0,
            }),
            None,
        );
        let s = to_json_string(&v);
        assert!(s.contains("forward_kl"));
        let back = reward_from_value(serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back.values()[[0, 1]], -1.0);
    }
}
