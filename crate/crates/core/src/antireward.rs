//! Anti-reward synthesis.
//!
//! An anti-reward r- scores state-action pairs by how far they sit from the
//! optimal occupancy rho* of the true reward: high where a decoy occupancy
//! rho- lives, low where rho* lives. Divergence-based kinds come from the
//! variational form
//!
//!   sup_{r-}  E_{rho-}[phi(r-)] - E_{rho*}[r-]
//!
//! whose pointwise maximizer has a closed form per divergence. The
//! Wasserstein-1 kind maximizes E_{rho-}[f] - E_{rho*}[f] over 1-Lipschitz
//! critics f, and the trajectory-KL kind is -log pi*(a|s) for the
//! soft-optimal policy pi*.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{RewardTable, StochasticPolicy, TabularMdp};
use crate::occupancy::{occupancy_of_policy, OccupancyMeasure};
use crate::solve::{solve_optimal, solve_soft};
use crate::util::{hop_distances, sign0};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    ForwardKl,
    BackwardKl,
    JensenShannon,
    PearsonChi2,
    SquaredHellinger,
    TotalVariation,
    Wasserstein1,
    TrajectoryKl,
}

impl DivergenceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DivergenceKind::ForwardKl => "forward_kl",
            DivergenceKind::BackwardKl => "backward_kl",
            DivergenceKind::JensenShannon => "jensen_shannon",
            DivergenceKind::PearsonChi2 => "pearson_chi2",
            DivergenceKind::SquaredHellinger => "squared_hellinger",
            DivergenceKind::TotalVariation => "total_variation",
            DivergenceKind::Wasserstein1 => "wasserstein1",
            DivergenceKind::TrajectoryKl => "trajectory_kl",
        }
    }

    pub const ALL: [DivergenceKind; 8] = [
        DivergenceKind::ForwardKl,
        DivergenceKind::BackwardKl,
        DivergenceKind::JensenShannon,
        DivergenceKind::PearsonChi2,
        DivergenceKind::SquaredHellinger,
        DivergenceKind::TotalVariation,
        DivergenceKind::Wasserstein1,
        DivergenceKind::TrajectoryKl,
    ];

    /// The six kinds with an elementwise closed form.
    pub fn has_closed_form(&self) -> bool {
        !matches!(self, DivergenceKind::Wasserstein1 | DivergenceKind::TrajectoryKl)
    }
}

impl std::fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_iterations() -> usize {
    5
}

fn default_smoothing_eps() -> f64 {
    1e-8
}

fn default_merl_temperature() -> f64 {
    1.0
}

fn default_w1_critic_iters() -> usize {
    300
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AntiRewardConfig {
    pub kind: DivergenceKind,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_smoothing_eps")]
    pub smoothing_eps: f64,
    /// Optional [lo, hi] clamp applied to every anti-reward the generator
    /// produces, including the intermediates the fixed-point loop re-solves.
    #[serde(default)]
    pub clip: Option<[f64; 2]>,
    #[serde(default = "default_merl_temperature")]
    pub merl_temperature: f64,
    #[serde(default = "default_w1_critic_iters")]
    pub w1_critic_iters: usize,
}

impl AntiRewardConfig {
    pub fn new(kind: DivergenceKind) -> Self {
        AntiRewardConfig {
            kind,
            iterations: default_iterations(),
            seed: 0,
            smoothing_eps: default_smoothing_eps(),
            clip: None,
            merl_temperature: default_merl_temperature(),
            w1_critic_iters: default_w1_critic_iters(),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c
    }

    fn validate(&self) -> Result<()> {
        if !(self.smoothing_eps > 0.0) || !self.smoothing_eps.is_finite() {
            return Err(Error::Invalid(format!(
                "smoothing_eps {} must be positive",
                self.smoothing_eps
            )));
        }
        if !(self.merl_temperature > 0.0) || !self.merl_temperature.is_finite() {
            return Err(Error::Invalid(format!(
                "merl_temperature {} must be positive",
                self.merl_temperature
            )));
        }
        if self.iterations == 0 && self.kind != DivergenceKind::TrajectoryKl {
            return Err(Error::Invalid("iterations must be at least 1".into()));
        }
        if let Some([lo, hi]) = self.clip {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::Invalid(format!(
                    "clip [{lo}, {hi}] must be a finite ordered interval"
                )));
            }
        }
        Ok(())
    }
}

/// Elementwise closed-form maximizer of the variational objective. Both
/// measures are floored at `smoothing_eps` before any ratio is formed.
pub fn f_div_closed_form(
    rho_star: &OccupancyMeasure,
    rho_minus: &OccupancyMeasure,
    kind: DivergenceKind,
    smoothing_eps: f64,
) -> Result<RewardTable> {
    if rho_star.rho().shape() != rho_minus.rho().shape() {
        return Err(Error::Dimension(format!(
            "rho* {:?} vs rho- {:?}",
            rho_star.rho().shape(),
            rho_minus.rho().shape()
        )));
    }
    if !(smoothing_eps > 0.0) {
        return Err(Error::Invalid("smoothing_eps must be positive".into()));
    }
    if !kind.has_closed_form() {
        return Err(Error::Invalid(format!(
            "{kind} has no elementwise closed form"
        )));
    }
    let mut out = Array2::zeros(rho_star.rho().raw_dim());
    for ((idx, &qs), &pm) in rho_star
        .rho()
        .indexed_iter()
        .zip(rho_minus.rho().iter())
    {
        let q = qs.max(smoothing_eps); // rho*
        let p = pm.max(smoothing_eps); // rho-
        let u = p / q;
        out[idx] = match kind {
            DivergenceKind::ForwardKl => u,
            DivergenceKind::BackwardKl => -1.0 + u.ln(),
            DivergenceKind::JensenShannon => (0.5 * (1.0 + u)).ln(),
            DivergenceKind::PearsonChi2 => 2.0 * (1.0 - 1.0 / u),
            DivergenceKind::SquaredHellinger => u.sqrt() - 1.0,
            // Maximizer of min(u, 1/2) * rho- - u * rho* over u >= -1/2; the
            // optimum sits at +-1/2 depending on which measure dominates.
            DivergenceKind::TotalVariation => 0.5 * sign0(p - q),
            _ => unreachable!(),
        };
    }
    RewardTable::new(out)
}

/// Projected subgradient ascent on E_{rho-}[f] - E_{rho*}[f] subject to
/// |f(x) - f(y)| <= d(x, y), with d the shortest-path hop distance between
/// states (state-action pairs at the same state are at distance zero, so they
/// share a value in the limit). Returns the critic and the final worst
/// Lipschitz violation.
pub fn wasserstein1_critic(
    mdp: &TabularMdp,
    rho_minus: &OccupancyMeasure,
    rho_star: &OccupancyMeasure,
    iters: usize,
    tol: f64,
) -> Result<(RewardTable, f64)> {
    let n = mdp.n_states();
    let na = mdp.n_actions();
    if rho_minus.rho().shape() != [n, na] || rho_star.rho().shape() != [n, na] {
        return Err(Error::Dimension("occupancy shape vs mdp".into()));
    }
    let dist = hop_distances(&mdp.undirected_adjacency());
    let grad = rho_minus.rho() - rho_star.rho();
    let d_max = dist.iter().copied().fold(0.0f64, f64::max).max(1.0);
    let mut f = Array2::<f64>::zeros((n, na));
    for t in 0..iters {
        let step = d_max / ((t + 1) as f64).sqrt();
        f.scaled_add(step, &grad);
        project_lipschitz_sweep(&mut f, &dist);
    }
    let mut violation = lipschitz_violation(&f, &dist);
    let mut sweeps = 0;
    while violation > tol && sweeps < 10_000 {
        project_lipschitz_sweep(&mut f, &dist);
        violation = lipschitz_violation(&f, &dist);
        sweeps += 1;
    }
    let mean = f.sum() / (n * na) as f64;
    f -= mean;
    Ok((RewardTable::new(f)?, violation))
}

fn project_lipschitz_sweep(f: &mut Array2<f64>, dist: &Array2<f64>) {
    let (n, na) = f.dim();
    for x in 0..n * na {
        let (sx, ax) = (x / na, x % na);
        for y in x + 1..n * na {
            let (sy, ay) = (y / na, y % na);
            let lim = dist[[sx, sy]];
            let diff = f[[sx, ax]] - f[[sy, ay]];
            if diff > lim {
                let shift = (diff - lim) / 2.0;
                f[[sx, ax]] -= shift;
                f[[sy, ay]] += shift;
            } else if diff < -lim {
                let shift = (-lim - diff) / 2.0;
                f[[sx, ax]] += shift;
                f[[sy, ay]] -= shift;
            }
        }
    }
}

fn lipschitz_violation(f: &Array2<f64>, dist: &Array2<f64>) -> f64 {
    let (n, na) = f.dim();
    let mut worst = 0.0f64;
    for x in 0..n * na {
        let (sx, ax) = (x / na, x % na);
        for y in x + 1..n * na {
            let (sy, ay) = (y / na, y % na);
            let excess = (f[[sx, ax]] - f[[sy, ay]]).abs() - dist[[sx, sy]];
            worst = worst.max(excess);
        }
    }
    worst
}

/// Trajectory-level KL anti-reward: r-(s,a) = -log pi*(a|s), where pi* is the
/// soft-optimal policy for reward / merl_temperature. Soft optimality keeps
/// pi* fully supported, so the logarithm stays finite.
pub fn traj_kl_anti_reward(
    mdp: &TabularMdp,
    reward: &RewardTable,
    merl_temperature: f64,
    vi_tol: f64,
) -> Result<RewardTable> {
    if !(merl_temperature > 0.0) {
        return Err(Error::Invalid("merl_temperature must be positive".into()));
    }
    let soft = solve_soft(mdp, &reward.scaled(1.0 / merl_temperature), vi_tol);
    let out = soft
        .policy
        .probs()
        .mapv(|p| -(p.max(f64::MIN_POSITIVE)).ln());
    RewardTable::new(out)
}

/// Per-run diagnostics: overlap sum min(rho*, rho-) recorded at init and
/// after each update of the decoy occupancy.
#[derive(Debug, Clone)]
pub struct AntiRewardDiagnostics {
    pub kind: DivergenceKind,
    pub overlaps: Vec<f64>,
    pub iterations_run: usize,
}

const INNER_VI_TOL: f64 = 1e-10;

/// Flat-Dirichlet random policy, the seeded initializer for the decoy
/// occupancy.
fn random_policy(n_states: usize, n_actions: usize, seed: u64) -> StochasticPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    StochasticPolicy::random_with(&mut rng, n_states, n_actions)
}

/// Anti-reward generation loop. The optimal occupancy rho* comes from the
/// soft-optimal policy at merl_temperature; the decoy occupancy rho- starts
/// at a seeded random policy's occupancy and alternates with the anti-reward:
/// score against (rho*, rho-), then move rho- to the occupancy of the policy
/// that maximizes the current anti-reward.
fn clip_table(table: RewardTable, clip: Option<[f64; 2]>) -> Result<RewardTable> {
    match clip {
        None => Ok(table),
        Some([lo, hi]) => RewardTable::new(table.values().mapv(|v| v.clamp(lo, hi))),
    }
}

pub fn gen_anti_reward(
    mdp: &TabularMdp,
    reward: &RewardTable,
    cfg: &AntiRewardConfig,
) -> Result<(RewardTable, AntiRewardDiagnostics)> {
    cfg.validate()?;
    let soft = solve_soft(
        mdp,
        &reward.scaled(1.0 / cfg.merl_temperature),
        INNER_VI_TOL,
    );
    let rho_star = occupancy_of_policy(mdp, &soft.policy)?;

    if cfg.kind == DivergenceKind::TrajectoryKl {
        let anti = clip_table(
            traj_kl_anti_reward(mdp, reward, cfg.merl_temperature, INNER_VI_TOL)?,
            cfg.clip,
        )?;
        let greedy = solve_optimal(mdp, &anti, INNER_VI_TOL);
        let rho_minus = occupancy_of_policy(mdp, &greedy.policy)?;
        return Ok((
            anti,
            AntiRewardDiagnostics {
                kind: cfg.kind,
                overlaps: vec![rho_star.overlap(&rho_minus)],
                iterations_run: 1,
            },
        ));
    }

    let init = random_policy(mdp.n_states(), mdp.n_actions(), cfg.seed);
    let mut rho_minus = occupancy_of_policy(mdp, &init)?;
    let mut overlaps = vec![rho_star.overlap(&rho_minus)];
    let mut anti = None;
    for _ in 0..cfg.iterations {
        let r_minus = clip_table(
            match cfg.kind {
                DivergenceKind::Wasserstein1 => {
                    wasserstein1_critic(mdp, &rho_minus, &rho_star, cfg.w1_critic_iters, 1e-6)?.0
                }
                _ => f_div_closed_form(&rho_star, &rho_minus, cfg.kind, cfg.smoothing_eps)?,
            },
            cfg.clip,
        )?;
        let greedy = solve_optimal(mdp, &r_minus, INNER_VI_TOL);
        rho_minus = occupancy_of_policy(mdp, &greedy.policy)?;
        overlaps.push(rho_star.overlap(&rho_minus));
        anti = Some(r_minus);
    }
    Ok((
        anti.expect("at least one iteration"),
        AntiRewardDiagnostics {
            kind: cfg.kind,
            overlaps,
            iterations_run: cfg.iterations,
        },
    ))
}
