//! Benchmark environment families.
//!
//! All constructors are deterministic functions of their spec (including the
//! seed): equal specs produce byte-identical serialized MDPs. Rewards are
//! state-based in every family and broadcast across actions.

use ndarray::{Array1, Array3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{RewardTable, TabularMdp};

fn default_gamma() -> f64 {
    0.95
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Invalid(format!("gamma {gamma} outside [0, 1)")));
    }
    Ok(())
}

/// Grid world of four rooms separated by walls with one door per wall
/// segment. Actions N/E/S/W are deterministic; bumping a wall or the boundary
/// stays in place. Cell rewards are drawn from a per-room normal distribution
/// and the episode starts in one of the four rooms uniformly, then uniformly
/// within the room.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FourRoomsSpec {
    pub grid_size: usize,
    pub room_means: Vec<f64>,
    pub room_stddevs: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub seed: u64,
}

impl FourRoomsSpec {
    fn validate(&self) -> Result<()> {
        if self.grid_size < 5 || self.grid_size % 2 == 0 {
            return Err(Error::Invalid(format!(
                "grid_size {} must be odd and at least 5",
                self.grid_size
            )));
        }
        if self.room_means.len() != 4 || self.room_stddevs.len() != 4 {
            return Err(Error::Invalid(
                "room_means and room_stddevs must each have 4 entries".into(),
            ));
        }
        if self.room_stddevs.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
            return Err(Error::Invalid("room_stddevs must be nonnegative".into()));
        }
        if self.room_means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Invalid("room_means must be finite".into()));
        }
        check_gamma(self.gamma)
    }
}

/// Grid-index bookkeeping shared by the grid families. Action order is
/// N, E, S, W.
const MOVES: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

pub fn make_four_rooms(spec: &FourRoomsSpec) -> Result<TabularMdp> {
    spec.validate()?;
    let g = spec.grid_size;
    let m = g / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // One door per wall segment, at a seeded position. The wall crossing
    // (m, m) always stays solid.
    let door_left = (m, rng.random_range(0..m));
    let door_right = (m, m + 1 + rng.random_range(0..g - m - 1));
    let door_top = (rng.random_range(0..m), m);
    let door_bottom = (m + 1 + rng.random_range(0..g - m - 1), m);
    let doors = [door_left, door_right, door_top, door_bottom];

    let is_wall = |r: usize, c: usize| (r == m || c == m) && !doors.contains(&(r, c));

    // Traversable cells in row-major order define the state indexing.
    let mut cell_of_state = Vec::new();
    let mut state_of_cell = vec![None; g * g];
    for r in 0..g {
        for c in 0..g {
            if !is_wall(r, c) {
                state_of_cell[r * g + c] = Some(cell_of_state.len());
                cell_of_state.push((r, c));
            }
        }
    }
    let n = cell_of_state.len();

    // Room of a cell; door cells adopt the lower-indexed adjacent room.
    let room_of = |r: usize, c: usize| -> usize {
        match (r < m, c < m, r > m, c > m) {
            (true, true, _, _) => 0,
            (true, _, _, true) => 1,
            (_, true, true, _) => 2,
            (_, _, true, true) => 3,
            _ => {
                // On a wall line: a door. Horizontal-wall doors take the room
                // above-left pairing; vertical-wall doors the left pairing.
                if r == m {
                    if c < m {
                        0
                    } else {
                        1
                    }
                } else if r < m {
                    0
                } else {
                    2
                }
            }
        }
    };

    let mut reward_state = Array1::zeros(n);
    for (s, &(r, c)) in cell_of_state.iter().enumerate() {
        let room = room_of(r, c);
        let z: f64 = StandardNormal.sample(&mut rng);
        reward_state[s] = spec.room_means[room] + spec.room_stddevs[room] * z;
    }

    let mut transition = Array3::zeros((n, 4, n));
    for (s, &(r, c)) in cell_of_state.iter().enumerate() {
        for (a, (dr, dc)) in MOVES.iter().enumerate() {
            let nr = r as isize + dr;
            let nc = c as isize + dc;
            let target = if nr >= 0 && nr < g as isize && nc >= 0 && nc < g as isize {
                state_of_cell[nr as usize * g + nc as usize].unwrap_or(s)
            } else {
                s
            };
            transition[[s, a, target]] = 1.0;
        }
    }

    let mut initial = Array1::zeros(n);
    let mut room_counts = [0usize; 4];
    for &(r, c) in &cell_of_state {
        if r != m && c != m {
            room_counts[room_of(r, c)] += 1;
        }
    }
    for (s, &(r, c)) in cell_of_state.iter().enumerate() {
        if r != m && c != m {
            initial[s] = 0.25 / room_counts[room_of(r, c)] as f64;
        }
    }

    let reward = RewardTable::from_state_values(&reward_state, 4)?;
    TabularMdp::new(transition, reward, spec.gamma, initial)
}

/// Slippery grid with absorbing hole cells. The agent moves in the intended
/// direction with probability 1 - slip and in each perpendicular direction
/// with probability slip / 2 (slip = 2/3 reproduces the classic one-third
/// split). Holes pay -1 forever; other cells carry a uniform [0, 1] reward.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FrozenLakeSpec {
    pub grid_size: usize,
    pub hole_fraction: f64,
    pub slip: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub seed: u64,
}

impl FrozenLakeSpec {
    fn validate(&self) -> Result<()> {
        if self.grid_size < 3 {
            return Err(Error::Invalid(format!(
                "grid_size {} must be at least 3",
                self.grid_size
            )));
        }
        if !(0.0..=0.4).contains(&self.hole_fraction) {
            return Err(Error::Invalid(format!(
                "hole_fraction {} outside [0, 0.4]",
                self.hole_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.slip) {
            return Err(Error::Invalid(format!("slip {} outside [0, 1]", self.slip)));
        }
        check_gamma(self.gamma)
    }
}

pub fn make_frozen_lake(spec: &FrozenLakeSpec) -> Result<TabularMdp> {
    spec.validate()?;
    let g = spec.grid_size;
    let n = g * g;
    let n_holes = (spec.hole_fraction * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Rejection-sample hole placements until every hole has a non-hole
    // neighbor; an all-hole neighborhood would make the (absorbing) hole
    // unreachable and fail MDP validation.
    let mut is_hole = vec![false; n];
    let mut placed = false;
    for _ in 0..1000 {
        is_hole.iter_mut().for_each(|h| *h = false);
        let mut cells: Vec<usize> = (0..n).collect();
        for k in 0..n_holes {
            let j = k + rng.random_range(0..n - k);
            cells.swap(k, j);
            is_hole[cells[k]] = true;
        }
        let ok = (0..n).filter(|&s| is_hole[s]).all(|s| {
            let (r, c) = (s / g, s % g);
            MOVES.iter().any(|(dr, dc)| {
                let nr = r as isize + dr;
                let nc = c as isize + dc;
                nr >= 0
                    && nr < g as isize
                    && nc >= 0
                    && nc < g as isize
                    && !is_hole[nr as usize * g + nc as usize]
            })
        });
        if ok {
            placed = true;
            break;
        }
    }
    if !placed {
        return Err(Error::Invalid(
            "could not place holes so that each touches a non-hole cell".into(),
        ));
    }

    let mut reward_state = Array1::zeros(n);
    for s in 0..n {
        if is_hole[s] {
            reward_state[s] = -1.0;
        } else {
            reward_state[s] = rng.random::<f64>();
        }
    }

    let mut transition = Array3::zeros((n, 4, n));
    for s in 0..n {
        let (r, c) = (s / g, s % g);
        for a in 0..4 {
            if is_hole[s] {
                transition[[s, a, s]] = 1.0;
                continue;
            }
            // Intended direction plus the two perpendicular slips.
            let outcomes = [
                (a, 1.0 - spec.slip),
                ((a + 1) % 4, spec.slip / 2.0),
                ((a + 3) % 4, spec.slip / 2.0),
            ];
            for (dir, p) in outcomes {
                if p == 0.0 {
                    continue;
                }
                let (dr, dc) = MOVES[dir];
                let nr = r as isize + dr;
                let nc = c as isize + dc;
                let target = if nr >= 0 && nr < g as isize && nc >= 0 && nc < g as isize {
                    nr as usize * g + nc as usize
                } else {
                    s
                };
                transition[[s, a, target]] += p;
            }
        }
    }

    let n_free = n - n_holes;
    let mut initial = Array1::zeros(n);
    for s in 0..n {
        if !is_hole[s] {
            initial[s] = 1.0 / n_free as f64;
        }
    }

    let reward = RewardTable::from_state_values(&reward_state, 4)?;
    TabularMdp::new(transition, reward, spec.gamma, initial)
}

/// Dense random MDP: every transition row is a flat Dirichlet draw, state
/// rewards are uniform on [-1, 1], and the episode always starts in state 0.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RandomMdpSpec {
    pub n_states: usize,
    pub n_actions: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub seed: u64,
}

impl RandomMdpSpec {
    fn validate(&self) -> Result<()> {
        if !(28..=40).contains(&self.n_states) {
            return Err(Error::Invalid(format!(
                "n_states {} outside [28, 40]",
                self.n_states
            )));
        }
        if !(2..=15).contains(&self.n_actions) {
            return Err(Error::Invalid(format!(
                "n_actions {} outside [2, 15]",
                self.n_actions
            )));
        }
        check_gamma(self.gamma)
    }
}

pub fn make_random_mdp(spec: &RandomMdpSpec) -> Result<TabularMdp> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_states;
    let na = spec.n_actions;
    let mut transition = Array3::zeros((n, na, n));
    for s in 0..n {
        for a in 0..na {
            // Flat Dirichlet row via normalized Exp(1) draws.
            let mut sum = 0.0;
            for s2 in 0..n {
                let e = -(1.0 - rng.random::<f64>()).ln();
                transition[[s, a, s2]] = e;
                sum += e;
            }
            for s2 in 0..n {
                transition[[s, a, s2]] /= sum;
            }
        }
    }
    let mut reward_state = Array1::zeros(n);
    for s in 0..n {
        reward_state[s] = rng.random::<f64>() * 2.0 - 1.0;
    }
    let mut initial = Array1::zeros(n);
    initial[0] = 1.0;
    let reward = RewardTable::from_state_values(&reward_state, na)?;
    TabularMdp::new(transition, reward, spec.gamma, initial)
}

/// Configuration-switching model: states are (configuration, protection)
/// pairs, action j jumps to configuration j and lands in high protection with
/// probability protection_prob. A configuration is worth a uniform [0, 1]
/// value, discounted by delta when caught in low protection.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NetSwitchSpec {
    pub n_configs: usize,
    pub protection_prob: f64,
    pub delta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub seed: u64,
}

impl NetSwitchSpec {
    fn validate(&self) -> Result<()> {
        if self.n_configs < 2 {
            return Err(Error::Invalid(format!(
                "n_configs {} must be at least 2",
                self.n_configs
            )));
        }
        if !(0.0..=1.0).contains(&self.protection_prob) {
            return Err(Error::Invalid(format!(
                "protection_prob {} outside [0, 1]",
                self.protection_prob
            )));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::Invalid(format!("delta {} must be nonnegative", self.delta)));
        }
        check_gamma(self.gamma)
    }
}

pub fn make_net_switch(spec: &NetSwitchSpec) -> Result<TabularMdp> {
    spec.validate()?;
    let k = spec.n_configs;
    let n = 2 * k;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();

    // State 2j is configuration j in low protection, 2j+1 in high protection.
    let mut transition = Array3::zeros((n, k, n));
    for s in 0..n {
        for (a, _) in values.iter().enumerate() {
            transition[[s, a, 2 * a + 1]] = spec.protection_prob;
            transition[[s, a, 2 * a]] += 1.0 - spec.protection_prob;
        }
    }
    let mut reward_state = Array1::zeros(n);
    for (j, &v) in values.iter().enumerate() {
        reward_state[2 * j] = v - spec.delta;
        reward_state[2 * j + 1] = v;
    }
    let initial = Array1::from_elem(n, 1.0 / n as f64);
    let reward = RewardTable::from_state_values(&reward_state, k)?;
    TabularMdp::new(transition, reward, spec.gamma, initial)
}

/// Tagged union over the four families, the shape used by config files.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    FourRooms(FourRoomsSpec),
    FrozenLake(FrozenLakeSpec),
    RandomMdp(RandomMdpSpec),
    NetSwitch(NetSwitchSpec),
}

impl EnvSpec {
    pub fn family(&self) -> &'static str {
        match self {
            EnvSpec::FourRooms(_) => "four_rooms",
            EnvSpec::FrozenLake(_) => "frozen_lake",
            EnvSpec::RandomMdp(_) => "random_mdp",
            EnvSpec::NetSwitch(_) => "net_switch",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            EnvSpec::FourRooms(s) => s.seed,
            EnvSpec::FrozenLake(s) => s.seed,
            EnvSpec::RandomMdp(s) => s.seed,
            EnvSpec::NetSwitch(s) => s.seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> EnvSpec {
        let mut out = self.clone();
        match &mut out {
            EnvSpec::FourRooms(s) => s.seed = seed,
            EnvSpec::FrozenLake(s) => s.seed = seed,
            EnvSpec::RandomMdp(s) => s.seed = seed,
            EnvSpec::NetSwitch(s) => s.seed = seed,
        }
        out
    }

    pub fn build(&self) -> Result<TabularMdp> {
        match self {
            EnvSpec::FourRooms(s) => make_four_rooms(s),
            EnvSpec::FrozenLake(s) => make_frozen_lake(s),
            EnvSpec::RandomMdp(s) => make_random_mdp(s),
            EnvSpec::NetSwitch(s) => make_net_switch(s),
        }
    }

    /// Strict parse from a JSON object with a `family` tag; unknown families
    /// and unknown fields are rejected.
    pub fn from_value(value: &serde_json::Value) -> Result<EnvSpec> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Config("env spec must be a JSON object".into()))?;
        let family = obj
            .get("family")
            .and_then(|f| f.as_str())
            .ok_or_else(|| Error::Config("env spec needs a string 'family' field".into()))?
            .to_string();
        let mut rest = obj.clone();
        rest.remove("family");
        let rest = serde_json::Value::Object(rest);
        let parse_err =
            |e: serde_json::Error| Error::Config(format!("env spec ({family}): {e}"));
        match family.as_str() {
            "four_rooms" => Ok(EnvSpec::FourRooms(
                serde_json::from_value(rest).map_err(parse_err)?,
            )),
            "frozen_lake" => Ok(EnvSpec::FrozenLake(
                serde_json::from_value(rest).map_err(parse_err)?,
            )),
            "random_mdp" => Ok(EnvSpec::RandomMdp(
                serde_json::from_value(rest).map_err(parse_err)?,
            )),
            "net_switch" => Ok(EnvSpec::NetSwitch(
                serde_json::from_value(rest).map_err(parse_err)?,
            )),
            other => Err(Error::Config(format!("unknown env family '{other}'"))),
        }
    }

    pub fn to_value(&self) -> serde_json::Value {
        let (family, mut val) = match self {
            EnvSpec::FourRooms(s) => ("four_rooms", serde_json::to_value(s).expect("spec json")),
            EnvSpec::FrozenLake(s) => ("frozen_lake", serde_json::to_value(s).expect("spec json")),
            EnvSpec::RandomMdp(s) => ("random_mdp", serde_json::to_value(s).expect("spec json")),
            EnvSpec::NetSwitch(s) => ("net_switch", serde_json::to_value(s).expect("spec json")),
        };
        val.as_object_mut()
            .expect("object")
            .insert("family".into(), serde_json::Value::String(family.into()));
        val
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::json::mdp_to_json_string;

    fn four_rooms_spec(grid: usize, seed: u64) -> FourRoomsSpec {
        FourRoomsSpec {
            grid_size: grid,
            room_means: vec![1.0, 2.0, 3.0, 4.0],
            room_stddevs: vec![0.0, 0.0, 0.0, 0.0],
            gamma: 0.95,
            seed,
        }
    }

    #[test]
    fn four_rooms_zero_stddev_rooms_have_constant_reward() {
        let spec = four_rooms_spec(9, 11);
        let mdp = make_four_rooms(&spec).unwrap();
        // Every interior room cell's reward is exactly its room mean; doors
        // adopt an adjacent room's distribution. With zero stddev all rewards
        // land on one of the four means.
        for s in 0..mdp.n_states() {
            let r = mdp.reward().values()[[s, 0]];
            assert!(
                [1.0, 2.0, 3.0, 4.0].contains(&r),
                "state {s} has reward {r}"
            );
        }
        // A 9x9 grid has 17 wall-line cells, 4 of which become doors.
        assert_eq!(mdp.n_states(), 81 - 13);
    }

    #[test]
    fn four_rooms_is_connected_and_deterministic_transitions() {
        let mdp = make_four_rooms(&four_rooms_spec(9, 3)).unwrap();
        for s in 0..mdp.n_states() {
            for a in 0..4 {
                let row = mdp.transition().slice(ndarray::s![s, a, ..]);
                assert_eq!(row.iter().filter(|&&p| p > 0.0).count(), 1);
            }
        }
        assert!(mdp.validate().ok());
    }

    #[test]
    fn four_rooms_initial_mass_quarter_per_room() {
        let spec = four_rooms_spec(9, 5);
        let mdp = make_four_rooms(&spec).unwrap();
        // Room means are distinct so reward identifies the room; sum the
        // initial mass per reward value over interior cells.
        let mut per_room = [0.0f64; 4];
        for s in 0..mdp.n_states() {
            let r = mdp.reward().values()[[s, 0]];
            let room = [1.0, 2.0, 3.0, 4.0].iter().position(|&m| m == r).unwrap();
            per_room[room] += mdp.initial_dist()[s];
        }
        for (room, &mass) in per_room.iter().enumerate() {
            // Doors carry no initial mass, so each room's interior holds 0.25.
            assert!((mass - 0.25).abs() < 1e-9, "room {room} mass {mass}");
        }
    }

    #[test]
    fn env_construction_is_reproducible() {
        for spec in [
            EnvSpec::FourRooms(four_rooms_spec(9, 42)),
            EnvSpec::FrozenLake(FrozenLakeSpec {
                grid_size: 5,
                hole_fraction: 0.2,
                slip: 2.0 / 3.0,
                gamma: 0.95,
                seed: 42,
            }),
            EnvSpec::RandomMdp(RandomMdpSpec {
                n_states: 30,
                n_actions: 4,
                gamma: 0.95,
                seed: 42,
            }),
            EnvSpec::NetSwitch(NetSwitchSpec {
                n_configs: 10,
                protection_prob: 0.8,
                delta: 0.3,
                gamma: 0.95,
                seed: 42,
            }),
        ] {
            let a = mdp_to_json_string(&spec.build().unwrap());
            let b = mdp_to_json_string(&spec.build().unwrap());
            assert_eq!(a, b, "{} not reproducible", spec.family());
            let c = mdp_to_json_string(&spec.with_seed(43).build().unwrap());
            assert_ne!(a, c, "{} ignores its seed", spec.family());
        }
    }

    #[test]
    fn frozen_lake_hole_count_and_absorption() {
        let spec = FrozenLakeSpec {
            grid_size: 5,
            hole_fraction: 0.2,
            slip: 2.0 / 3.0,
            gamma: 0.95,
            seed: 9,
        };
        let mdp = make_frozen_lake(&spec).unwrap();
        let holes: Vec<usize> = (0..25)
            .filter(|&s| mdp.reward().values()[[s, 0]] == -1.0)
            .collect();
        assert_eq!(holes.len(), 5);
        for &h in &holes {
            for a in 0..4 {
                assert_eq!(mdp.transition()[[h, a, h]], 1.0);
            }
            assert_eq!(mdp.initial_dist()[h], 0.0);
        }
        // Non-hole starts are uniform.
        let free_mass: f64 = (0..25)
            .filter(|s| !holes.contains(s))
            .map(|s| mdp.initial_dist()[s])
            .sum();
        assert!((free_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frozen_lake_classic_slip_splits_in_thirds() {
        let spec = FrozenLakeSpec {
            grid_size: 4,
            hole_fraction: 0.0,
            slip: 2.0 / 3.0,
            gamma: 0.95,
            seed: 1,
        };
        let mdp = make_frozen_lake(&spec).unwrap();
        // Interior cell 5 (row 1, col 1), action E: east, north, south each 1/3.
        let row = mdp.transition().slice(ndarray::s![5usize, 1usize, ..]);
        assert!((row[6] - 1.0 / 3.0).abs() < 1e-12);
        assert!((row[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((row[9] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn random_mdp_shape_bounds_enforced() {
        let bad = RandomMdpSpec {
            n_states: 10,
            n_actions: 4,
            gamma: 0.9,
            seed: 0,
        };
        assert!(make_random_mdp(&bad).is_err());
        let ok = RandomMdpSpec {
            n_states: 28,
            n_actions: 2,
            gamma: 0.9,
            seed: 0,
        };
        let mdp = make_random_mdp(&ok).unwrap();
        assert_eq!(mdp.n_states(), 28);
        assert_eq!(mdp.initial_dist()[0], 1.0);
        assert!(mdp.reward().values().iter().all(|&r| (-1.0..=1.0).contains(&r)));
    }

    #[test]
    fn net_switch_protection_split_and_rewards() {
        let spec = NetSwitchSpec {
            n_configs: 3,
            protection_prob: 0.75,
            delta: 0.2,
            gamma: 0.9,
            seed: 4,
        };
        let mdp = make_net_switch(&spec).unwrap();
        assert_eq!(mdp.n_states(), 6);
        assert_eq!(mdp.n_actions(), 3);
        for s in 0..6 {
            for a in 0..3 {
                assert!((mdp.transition()[[s, a, 2 * a + 1]] - 0.75).abs() < 1e-12);
                assert!((mdp.transition()[[s, a, 2 * a]] - 0.25).abs() < 1e-12);
            }
        }
        for j in 0..3 {
            let low = mdp.reward().values()[[2 * j, 0]];
            let high = mdp.reward().values()[[2 * j + 1, 0]];
            assert!((high - low - 0.2).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&high));
        }
    }

    #[test]
    fn env_spec_round_trips_through_tagged_json() {
        let spec = EnvSpec::RandomMdp(RandomMdpSpec {
            n_states: 30,
            n_actions: 5,
            gamma: 0.9,
            seed: 7,
        });
        let v = spec.to_value();
        let back = EnvSpec::from_value(&v).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn env_spec_rejects_unknown_family_and_fields() {
        let v = serde_json::json!({"family": "gridworld", "n_states": 3});
        assert!(EnvSpec::from_value(&v).is_err());
        let v = serde_json::json!({
            "family": "random_mdp", "n_states": 30, "n_actions": 5, "seed": 1, "bogus": 2
        });
        let err = EnvSpec::from_value(&v).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }
}
