//! Experiment grids: sweep environments, planners, thresholds, and observers,
//! collect one result row per cell, and render the results as CSV and SVG.
//! Rows are produced in a fixed order and every random draw derives from the
//! experiment seed, so a rerun of the same config is byte-identical.

mod csv;
mod parse;
mod svg;

pub use csv::write_results;
pub use svg::render_plot;

use std::path::PathBuf;

use serde_json::Value;

use crate::antireward::{gen_anti_reward, AntiRewardConfig};
use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::mdp::{RewardTable, TabularMdp};
use crate::metrics::{epic_distance, ordering_consistency, pearson, rollout_eval};
use crate::observers::{
    cluster_occupancy, irl_from_demos, mce_irl, ClusterCollapse, ClusterConfig, IrlConfig,
};
use crate::occupancy::{occupancy_of_any, OccupancyMeasure};
use crate::planners::{
    meir, mm_binary_search, mm_mix, mmbe, reference_returns, threshold_from_fraction, MeirOptions,
    MmMode, MmOptions, PlannerResult, RewardConstraint,
};
use crate::util::mix_seed;
use parse::{
    array_of, expect_object, f64_of, finish, from_serde, string_of, take_required, u64_of, usize_of,
};

#[derive(Debug, Clone)]
pub enum PlannerKind {
    Meir,
    Mm(MmMode),
    Mmbe { beta: f64 },
    MmMix { n_mix: usize },
}

#[derive(Debug, Clone)]
pub struct PlannerSpec {
    pub label: String,
    pub kind: PlannerKind,
    pub anti: Option<AntiRewardConfig>,
}

#[derive(Debug, Clone)]
pub enum ObserverKind {
    /// Inverts the planner policy's exact occupancy.
    MceTrue,
    /// Inverts a discounted empirical occupancy from sampled demonstrations.
    MceDemos { n_demos: usize, horizon: Option<usize> },
    /// Clustered perception, representative = highest-mass state.
    IrlMax { threshold: f64 },
    /// Clustered perception, representative drawn at random.
    IrlRandom { threshold: f64 },
}

#[derive(Debug, Clone)]
pub struct ObserverSpec {
    pub label: String,
    pub kind: ObserverKind,
    pub irl: IrlConfig,
}

#[derive(Debug, Clone, Copy)]
pub struct MetricSelection {
    pub pearson: bool,
    pub epic: bool,
    pub rollout: bool,
    pub ordering: bool,
}

impl Default for MetricSelection {
    fn default() -> Self {
        MetricSelection {
            pearson: true,
            epic: true,
            rollout: true,
            ordering: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub env_label: String,
    pub envs: Vec<EnvSpec>,
    pub planners: Vec<PlannerSpec>,
    pub thresholds: Vec<f64>,
    pub observers: Vec<ObserverSpec>,
    pub metrics: MetricSelection,
    pub output: PathBuf,
    pub seed: u64,
    pub ordering_pairs: usize,
}

/// One cell of the experiment grid. Metric fields are None when the metric
/// was not requested or the cell failed; failures carry their message in
/// `error` and never abort the rest of the grid.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub env_name: String,
    pub env_seed: u64,
    pub planner: String,
    pub antireward_kind: String,
    pub observer: String,
    pub threshold_frac: f64,
    pub e_min: Option<f64>,
    pub achieved_return: Option<f64>,
    pub achieved_entropy_or_antireturn: Option<f64>,
    pub lambda_star: Option<f64>,
    pub irl_rollout_return: Option<f64>,
    pub irl_rollout_ratio: Option<f64>,
    pub pearson: Option<f64>,
    pub epic: Option<f64>,
    pub ordering_consistency: Option<f64>,
    pub error: Option<String>,
}

const DEEP_RL_PLANNERS: [&str; 2] = ["dqfn", "iqlearn"];

/// Parses one planner spec object, e.g. `{"type": "mm", "antireward": {...}}`.
/// `what` names the object in error messages.
pub fn parse_planner_spec(value: Value, what: &str) -> Result<PlannerSpec> {
    let mut m = expect_object(value, what)?;
    let tag = string_of(take_required(&mut m, "type", &what)?, &format!("{what}.type"))?;
    if DEEP_RL_PLANNERS.contains(&tag.as_str()) {
        return Err(Error::Config(format!(
            "planner type '{tag}' is a deep-RL method outside this toolkit's tabular scope; \
             available planners: meir, mm, mmbe, mm_mix"
        )));
    }
    let anti = match m.remove("antireward") {
        Some(v) => Some(from_serde::<AntiRewardConfig>(v, &format!("{what}.antireward"))?),
        None => None,
    };
    let kind = match tag.as_str() {
        "meir" => {
            if anti.is_some() {
                return Err(Error::Config(format!(
                    "{what}: meir does not take an antireward"
                )));
            }
            PlannerKind::Meir
        }
        "mm" => {
            let mode = match m.remove("mode") {
                Some(v) => from_serde::<MmMode>(v, &format!("{what}.mode"))?,
                None => MmMode::Exact,
            };
            PlannerKind::Mm(mode)
        }
        "mmbe" => {
            let beta = f64_of(
                take_required(&mut m, "beta", &what)?,
                &format!("{what}.beta"),
            )?;
            PlannerKind::Mmbe { beta }
        }
        "mm_mix" => {
            let n_mix = match m.remove("n_mix") {
                Some(v) => usize_of(v, &format!("{what}.n_mix"))?,
                None => 3,
            };
            PlannerKind::MmMix { n_mix }
        }
        other => {
            return Err(Error::Config(format!(
                "{what}: unknown planner type '{other}'; available: meir, mm, mmbe, mm_mix"
            )))
        }
    };
    if !matches!(kind, PlannerKind::Meir) && anti.is_none() {
        return Err(Error::Config(format!(
            "{what}: planner '{tag}' requires an 'antireward' section"
        )));
    }
    finish(m, what)?;
    Ok(PlannerSpec {
        label: tag,
        kind,
        anti,
    })
}

/// Parses one observer spec object, e.g. `{"type": "mce_demos", "n_demos": 10}`.
pub fn parse_observer_spec(value: Value, what: &str) -> Result<ObserverSpec> {
    let mut m = expect_object(value, what)?;
    let tag = string_of(take_required(&mut m, "type", &what)?, &format!("{what}.type"))?;
    let irl = match m.remove("irl") {
        Some(v) => from_serde::<IrlConfig>(v, &format!("{what}.irl"))?,
        None => IrlConfig::default(),
    };
    let kind = match tag.as_str() {
        "mce_true" => ObserverKind::MceTrue,
        "mce_demos" => {
            let n_demos = match m.remove("n_demos") {
                Some(v) => usize_of(v, &format!("{what}.n_demos"))?,
                None => 10,
            };
            let horizon = match m.remove("horizon") {
                Some(v) => Some(usize_of(v, &format!("{what}.horizon"))?),
                None => None,
            };
            ObserverKind::MceDemos { n_demos, horizon }
        }
        "irl_max" | "irl_random" => {
            let threshold = match m.remove("threshold") {
                Some(v) => f64_of(v, &format!("{what}.threshold"))?,
                None => 0.05,
            };
            if tag == "irl_max" {
                ObserverKind::IrlMax { threshold }
            } else {
                ObserverKind::IrlRandom { threshold }
            }
        }
        other => {
            return Err(Error::Config(format!(
                "{what}: unknown observer type '{other}'; available: mce_true, mce_demos, \
                 irl_max, irl_random"
            )))
        }
    };
    finish(m, what)?;
    Ok(ObserverSpec {
        label: tag,
        kind,
        irl,
    })
}

/// Parses a metric-name list into a selection, e.g. `["pearson", "rollout"]`.
pub fn parse_metric_selection(value: Value) -> Result<MetricSelection> {
    let list = array_of(value, "metrics")?;
    let mut sel = MetricSelection {
        pearson: false,
        epic: false,
        rollout: false,
        ordering: false,
    };
    for (i, v) in list.into_iter().enumerate() {
        let name = string_of(v, &format!("metrics[{i}]"))?;
        match name.as_str() {
            "pearson" => sel.pearson = true,
            "epic" => sel.epic = true,
            "rollout" => sel.rollout = true,
            "ordering" => sel.ordering = true,
            other => {
                return Err(Error::Config(format!(
                    "metrics[{i}]: unknown metric '{other}'; available: pearson, epic, rollout, \
                     ordering"
                )))
            }
        }
    }
    Ok(sel)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config is not JSON: {e}")))?;
    let mut m = expect_object(value, "experiment config")?;

    let mut env_obj = expect_object(take_required(&mut m, "env", "experiment config")?, "env")?;
    let seeds_value = take_required(&mut env_obj, "seeds", "env")?;
    let seeds: Vec<u64> = array_of(seeds_value, "env.seeds")?
        .into_iter()
        .enumerate()
        .map(|(i, v)| u64_of(v, &format!("env.seeds[{i}]")))
        .collect::<Result<_>>()?;
    if seeds.is_empty() {
        return Err(Error::Config("env.seeds must be non-empty".into()));
    }
    env_obj.insert("seed".into(), Value::from(0u64));
    let template = EnvSpec::from_value(&Value::Object(env_obj))?;
    let env_label = template.family().to_string();
    let envs: Vec<EnvSpec> = seeds.iter().map(|&s| template.with_seed(s)).collect();

    let mut planners = array_of(take_required(&mut m, "planners", "experiment config")?, "planners")?
        .into_iter()
        .enumerate()
        .map(|(i, v)| parse_planner_spec(v, &format!("planners[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    if planners.is_empty() {
        return Err(Error::Config("planners must be non-empty".into()));
    }
    // Repeated planner types get ordinal suffixes so that rows and plots
    // stay attributable to one config entry.
    let mut label_counts: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for p in &mut planners {
        let n = label_counts.entry(p.label.clone()).or_insert(0);
        *n += 1;
        if *n > 1 {
            p.label = format!("{}_{}", p.label, *n);
        }
    }

    let thresholds: Vec<f64> = array_of(
        take_required(&mut m, "thresholds", "experiment config")?,
        "thresholds",
    )?
    .into_iter()
    .enumerate()
    .map(|(i, v)| f64_of(v, &format!("thresholds[{i}]")))
    .collect::<Result<_>>()?;
    if thresholds.is_empty() {
        return Err(Error::Config("thresholds must be non-empty".into()));
    }
    for &f in &thresholds {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::Config(format!(
                "threshold fraction {f} outside [0, 1]"
            )));
        }
    }

    let observers = array_of(take_required(&mut m, "observers", "experiment config")?, "observers")?
        .into_iter()
        .enumerate()
        .map(|(i, v)| parse_observer_spec(v, &format!("observers[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    if observers.is_empty() {
        return Err(Error::Config("observers must be non-empty".into()));
    }

    let metrics = match m.remove("metrics") {
        Some(v) => parse_metric_selection(v)?,
        None => MetricSelection::default(),
    };
    let output = PathBuf::from(string_of(
        take_required(&mut m, "output", "experiment config")?,
        "output",
    )?);
    let seed = match m.remove("seed") {
        Some(v) => u64_of(v, "seed")?,
        None => 0,
    };
    let ordering_pairs = match m.remove("ordering_pairs") {
        Some(v) => usize_of(v, "ordering_pairs")?,
        None => 200,
    };
    finish(m, "experiment config")?;
    Ok(ExperimentConfig {
        env_label,
        envs,
        planners,
        thresholds,
        observers,
        metrics,
        output,
        seed,
        ordering_pairs,
    })
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

const BENCH_VI_TOL: f64 = 1e-10;

/// Streams within a cell's derived seed space.
const STREAM_ANTI: u64 = 0;
const STREAM_DEMOS: u64 = 1;
const STREAM_CLUSTER: u64 = 2;
const STREAM_ORDERING: u64 = 3;

struct PlanOutcome {
    result: PlannerResult,
    occupancy: OccupancyMeasure,
    e_min: f64,
    anti_kind: String,
}

/// Plans one (env seed, planner, threshold) cell. The anti-reward seed
/// depends only on the experiment seed, the env seed, and the planner index,
/// so every threshold of a sweep faces the same anti-reward.
fn plan_cell(
    mdp: &TabularMdp,
    spec: &PlannerSpec,
    frac: f64,
    base_seed: u64,
    env_seed: u64,
    planner_idx: usize,
) -> Result<PlanOutcome> {
    let anti_seed = mix_seed(base_seed, &[env_seed, planner_idx as u64, STREAM_ANTI]);
    let reward = mdp.reward();
    match &spec.kind {
        PlannerKind::Meir => {
            let refs = reference_returns(mdp, reward, None, BENCH_VI_TOL)?;
            let e_min = threshold_from_fraction(refs.e_hat, refs.e_star, frac);
            let result = meir(
                mdp,
                reward,
                RewardConstraint::new(e_min)?,
                &MeirOptions::default(),
            )?;
            let occupancy = occupancy_of_any(mdp, &result.policy)?;
            Ok(PlanOutcome {
                result,
                occupancy,
                e_min,
                anti_kind: String::new(),
            })
        }
        PlannerKind::Mm(mode) => {
            let cfg = spec.anti.as_ref().expect("validated").with_seed(anti_seed);
            let (anti, _) = gen_anti_reward(mdp, reward, &cfg)?;
            let refs = reference_returns(mdp, reward, Some(&anti), BENCH_VI_TOL)?;
            let e_min =
                threshold_from_fraction(refs.e_minus.expect("anti supplied"), refs.e_star, frac);
            let mut opts = MmOptions::default();
            opts.mode = *mode;
            let result =
                mm_binary_search(mdp, reward, &anti, RewardConstraint::new(e_min)?, &opts)?;
            let occupancy = occupancy_of_any(mdp, &result.policy)?;
            Ok(PlanOutcome {
                result,
                occupancy,
                e_min,
                anti_kind: cfg.kind.as_str().to_string(),
            })
        }
        PlannerKind::Mmbe { beta } => {
            let cfg = spec.anti.as_ref().expect("validated").with_seed(anti_seed);
            let (anti, _) = gen_anti_reward(mdp, reward, &cfg)?;
            let refs = reference_returns(mdp, reward, Some(&anti), BENCH_VI_TOL)?;
            let e_min =
                threshold_from_fraction(refs.e_minus.expect("anti supplied"), refs.e_star, frac);
            let result = mmbe(
                mdp,
                reward,
                &anti,
                RewardConstraint::new(e_min)?,
                *beta,
                &MmOptions::default(),
            )?;
            let occupancy = occupancy_of_any(mdp, &result.policy)?;
            Ok(PlanOutcome {
                result,
                occupancy,
                e_min,
                anti_kind: cfg.kind.as_str().to_string(),
            })
        }
        PlannerKind::MmMix { n_mix } => {
            let cfg = spec.anti.as_ref().expect("validated").with_seed(anti_seed);
            // Landmarks come from member 0's anti-reward, which mm_mix
            // regenerates internally from the same seed.
            let (anti0, _) = gen_anti_reward(mdp, reward, &cfg)?;
            let refs = reference_returns(mdp, reward, Some(&anti0), BENCH_VI_TOL)?;
            let e_min =
                threshold_from_fraction(refs.e_minus.expect("anti supplied"), refs.e_star, frac);
            let result = mm_mix(
                mdp,
                reward,
                &cfg,
                RewardConstraint::new(e_min)?,
                *n_mix,
                None,
                &MmOptions::default(),
            )?;
            let occupancy = occupancy_of_any(mdp, &result.policy)?;
            Ok(PlanOutcome {
                result,
                occupancy,
                e_min,
                anti_kind: cfg.kind.as_str().to_string(),
            })
        }
    }
}

fn observe_cell(
    mdp: &TabularMdp,
    plan: &PlanOutcome,
    observer: &ObserverSpec,
    demo_seed: u64,
    cluster_seed: u64,
) -> Result<RewardTable> {
    let recovered = match &observer.kind {
        ObserverKind::MceTrue => mce_irl(mdp, &plan.occupancy, &observer.irl)?,
        ObserverKind::MceDemos { n_demos, horizon } => match horizon {
            None => irl_from_demos(mdp, &plan.result.policy, *n_demos, demo_seed, &observer.irl)?.0,
            Some(h) => {
                let trajs = crate::sample::sample_trajectories(
                    mdp,
                    &plan.result.policy,
                    *n_demos,
                    *h,
                    demo_seed,
                )?;
                let target = crate::occupancy::empirical_occupancy(
                    &trajs,
                    mdp.gamma(),
                    mdp.n_states(),
                    mdp.n_actions(),
                )?;
                mce_irl(mdp, &target, &observer.irl)?
            }
        },
        ObserverKind::IrlMax { threshold } => {
            let cfg = ClusterConfig {
                threshold: *threshold,
                collapse: ClusterCollapse::MaxMass,
                seed: cluster_seed,
            };
            let target = cluster_occupancy(mdp, &plan.occupancy, &cfg)?;
            mce_irl(mdp, &target, &observer.irl)?
        }
        ObserverKind::IrlRandom { threshold } => {
            let cfg = ClusterConfig {
                threshold: *threshold,
                collapse: ClusterCollapse::Random,
                seed: cluster_seed,
            };
            let target = cluster_occupancy(mdp, &plan.occupancy, &cfg)?;
            mce_irl(mdp, &target, &observer.irl)?
        }
    };
    Ok(recovered.reward)
}

/// Runs the whole grid. Cells are planned in parallel when `jobs` permits;
/// row order is always (env seed, planner, threshold, observer),
/// lexicographic in config order, independent of thread scheduling.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Vec<ResultRow> {
    let mut units = Vec::new();
    for ei in 0..cfg.envs.len() {
        for pi in 0..cfg.planners.len() {
            for ti in 0..cfg.thresholds.len() {
                units.push((ei, pi, ti));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    let unit_rows: Vec<Vec<ResultRow>> = pool.install(|| {
        use rayon::prelude::*;
        units
            .par_iter()
            .map(|&(ei, pi, ti)| run_unit(cfg, ei, pi, ti))
            .collect()
    });
    unit_rows.into_iter().flatten().collect()
}

fn run_unit(cfg: &ExperimentConfig, ei: usize, pi: usize, ti: usize) -> Vec<ResultRow> {
    let env = &cfg.envs[ei];
    let planner = &cfg.planners[pi];
    let frac = cfg.thresholds[ti];
    let env_seed = env.seed();
    let blank = |err: Option<String>| ResultRow {
        env_name: cfg.env_label.clone(),
        env_seed,
        planner: planner.label.clone(),
        antireward_kind: planner
            .anti
            .as_ref()
            .map(|a| a.kind.as_str().to_string())
            .unwrap_or_default(),
        observer: String::new(),
        threshold_frac: frac,
        e_min: None,
        achieved_return: None,
        achieved_entropy_or_antireturn: None,
        lambda_star: None,
        irl_rollout_return: None,
        irl_rollout_ratio: None,
        pearson: None,
        epic: None,
        ordering_consistency: None,
        error: err,
    };

    let mdp = match env.build() {
        Ok(m) => m,
        Err(e) => {
            return cfg
                .observers
                .iter()
                .map(|o| {
                    let mut row = blank(Some(format!("env build failed: {e}")));
                    row.observer = o.label.clone();
                    row
                })
                .collect()
        }
    };
    let plan = match plan_cell(&mdp, planner, frac, cfg.seed, env_seed, pi) {
        Ok(p) => p,
        Err(e) => {
            return cfg
                .observers
                .iter()
                .map(|o| {
                    let mut row = blank(Some(format!("planning failed: {e}")));
                    row.observer = o.label.clone();
                    row
                })
                .collect()
        }
    };

    cfg.observers
        .iter()
        .enumerate()
        .map(|(oi, observer)| {
            let mut row = blank(None);
            row.observer = observer.label.clone();
            row.antireward_kind = plan.anti_kind.clone();
            row.e_min = Some(plan.e_min);
            row.achieved_return = Some(plan.result.achieved_return);
            row.achieved_entropy_or_antireturn = Some(plan.result.achieved_objective);
            row.lambda_star = Some(plan.result.lambda_star);
            let cell = [env_seed, pi as u64, ti as u64, oi as u64];
            let stream = |s: u64| {
                let mut parts = cell.to_vec();
                parts.push(s);
                mix_seed(cfg.seed, &parts)
            };
            let recovered = match observe_cell(
                &mdp,
                &plan,
                observer,
                stream(STREAM_DEMOS),
                stream(STREAM_CLUSTER),
            ) {
                Ok(r) => r,
                Err(e) => {
                    row.error = Some(format!("observer failed: {e}"));
                    return row;
                }
            };
            let mut errors = Vec::new();
            if cfg.metrics.rollout {
                match rollout_eval(&mdp, mdp.reward(), &recovered, BENCH_VI_TOL) {
                    Ok(ev) => {
                        row.irl_rollout_return = Some(ev.return_true);
                        row.irl_rollout_ratio = Some(ev.ratio);
                    }
                    Err(e) => errors.push(format!("rollout: {e}")),
                }
            }
            if cfg.metrics.pearson {
                let a = mdp.reward().values().as_slice().expect("contiguous");
                let b = recovered.values().as_slice().expect("contiguous");
                match pearson(a, b) {
                    Ok(p) => row.pearson = Some(p),
                    Err(e) => errors.push(format!("pearson: {e}")),
                }
            }
            if cfg.metrics.epic {
                match epic_distance(mdp.reward(), &recovered, mdp.gamma()) {
                    Ok(d) => row.epic = Some(d),
                    Err(e) => errors.push(format!("epic: {e}")),
                }
            }
            if cfg.metrics.ordering {
                match ordering_consistency(
                    &mdp,
                    mdp.reward(),
                    &recovered,
                    cfg.ordering_pairs,
                    stream(STREAM_ORDERING),
                ) {
                    Ok(c) => row.ordering_consistency = Some(c),
                    Err(e) => errors.push(format!("ordering: {e}")),
                }
            }
            if !errors.is_empty() {
                row.error = Some(errors.join("; "));
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_config(extra: &str) -> String {
        format!(
            r#"{{
  "env": {{"family": "random_mdp", "n_states": 28, "n_actions": 2, "gamma": 0.9, "seeds": [0]}},
  "planners": [{{"type": "meir"}}],
  "thresholds": [0.5],
  "observers": [{{"type": "mce_true"}}],
  "output": "out"{extra}
}}"#
        )
    }

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(&minimal_config("")).unwrap();
        assert_eq!(cfg.envs.len(), 1);
        assert_eq!(cfg.planners.len(), 1);
        assert_eq!(cfg.env_label, "random_mdp");
        assert!(cfg.metrics.pearson && cfg.metrics.ordering);
        assert_eq!(cfg.ordering_pairs, 200);
    }

    #[test]
    fn unknown_top_level_field_is_rejected() {
        let text = minimal_config(",\n  \"plot_dpi\": 300");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("plot_dpi"), "{err}");
    }

    #[test]
    fn out_of_range_threshold_is_rejected() {
        let text = minimal_config("").replace("[0.5]", "[1.2]");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("1.2"), "{err}");
    }

    #[test]
    fn deep_rl_planner_names_get_a_scope_message() {
        for name in DEEP_RL_PLANNERS {
            let text = minimal_config("").replace("\"type\": \"meir\"", &format!("\"type\": \"{name}\""));
            let err = parse_config(&text).unwrap_err();
            let msg = err.to_string();
            assert!(msg.contains("outside this toolkit's tabular scope"), "{msg}");
        }
    }

    #[test]
    fn mm_without_antireward_is_rejected() {
        let text = minimal_config("").replace(
            "{\"type\": \"meir\"}",
            "{\"type\": \"mm\"}",
        );
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("antireward"), "{err}");
    }

    #[test]
    fn run_is_deterministic_and_independent_of_jobs() {
        let text = r#"{
  "env": {"family": "random_mdp", "n_states": 28, "n_actions": 2, "gamma": 0.9, "seeds": [0, 1]},
  "planners": [
    {"type": "meir"},
    {"type": "mm", "antireward": {"kind": "forward_kl", "iterations": 2}}
  ],
  "thresholds": [0.3, 0.7],
  "observers": [
    {"type": "mce_true", "irl": {"max_iters": 250}},
    {"type": "irl_max", "irl": {"max_iters": 250}}
  ],
  "metrics": ["rollout", "pearson"],
  "ordering_pairs": 10,
  "output": "out"
}"#;
        let cfg = parse_config(text).unwrap();
        let a = run_experiment(&cfg, 1);
        let b = run_experiment(&cfg, 4);
        assert_eq!(a.len(), 2 * 2 * 2 * 2);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.env_seed, y.env_seed);
            assert_eq!(x.planner, y.planner);
            assert_eq!(x.observer, y.observer);
            assert_eq!(
                x.achieved_return.map(f64::to_bits),
                y.achieved_return.map(f64::to_bits)
            );
            assert_eq!(
                x.irl_rollout_return.map(f64::to_bits),
                y.irl_rollout_return.map(f64::to_bits)
            );
            assert_eq!(x.pearson.map(f64::to_bits), y.pearson.map(f64::to_bits));
            assert!(x.error.is_none(), "{:?}", x.error);
        }
        // Constraint honored on every successful cell.
        for row in &a {
            let (ret, e_min) = (row.achieved_return.unwrap(), row.e_min.unwrap());
            assert!(ret >= e_min - 1e-6, "return {ret} below e_min {e_min}");
        }
    }
}
