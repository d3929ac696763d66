//! Command-line front end.
//!
//! Five subcommands cover the pipeline end to end: `plan` synthesizes a
//! policy under a return constraint, `antireward` generates an adversarial
//! reward for an environment, `observe` inverts observed behavior back into
//! a reward, `evaluate` scores a recovered reward against the true one, and
//! `bench` runs a full experiment grid to CSV and SVG.
//!
//! Every subcommand reads a strict JSON config (unknown fields are errors),
//! writes artifacts into `--out`, and prints a deterministic summary to
//! stdout. Wall-clock timings go to stderr only, so identical inputs always
//! produce identical stdout and identical files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use veilrl::antireward::gen_anti_reward;
use veilrl::antireward::AntiRewardConfig;
use veilrl::bench::{
    self, parse_metric_selection, parse_observer_spec, parse_planner_spec, MetricSelection,
    ObserverKind, ObserverSpec, PlannerKind, PlannerSpec,
};
use veilrl::envs::EnvSpec;
use veilrl::error::{Error, Result};
use veilrl::json::{
    mdp_from_json_str, occupancy_to_value, policy_from_value, policy_to_value, reward_from_value,
    reward_to_value, to_json_string, RewardConvergence, RewardProvenance,
};
use veilrl::mdp::{RewardTable, TabularMdp};
use veilrl::metrics::{epic_distance, ordering_consistency, pearson, rollout_eval};
use veilrl::observers::{cluster_occupancy, mce_irl, ClusterCollapse, ClusterConfig};
use veilrl::occupancy::{empirical_occupancy, occupancy_of_any, OccupancyMeasure};
use veilrl::planners::{
    meir, mm_binary_search, mm_mix, mm_primal_dual, mmbe, reference_returns,
    threshold_from_fraction, MeirOptions, MmOptions, PlannerResult, PrimalDualOptions,
    RewardConstraint,
};
use veilrl::sample::sample_trajectories;

const VI_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(
    name = "veilrl",
    about = "Constrained-planning toolkit: private policies and the rewards observers recover from them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a policy for one environment under a return constraint
    Plan(RunArgs),
    /// Generate an anti-reward for one environment
    Antireward(RunArgs),
    /// Invert a policy or occupancy back into a reward
    Observe(RunArgs),
    /// Score a recovered reward against an environment's true reward
    Evaluate(RunArgs),
    /// Run an experiment grid to results.csv and per-planner SVG plots
    Bench(BenchArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file
    #[arg(long)]
    config: PathBuf,
    /// Directory the output files are written into
    #[arg(long)]
    out: PathBuf,
    /// Override every seed in the config (env seed and generator seeds)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's experiment seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the sweep
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome = match cli.command {
        Command::Plan(args) => cmd_plan(&args),
        Command::Antireward(args) => cmd_antireward(&args),
        Command::Observe(args) => cmd_observe(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Bench(args) => cmd_bench(&args),
    };
    eprintln!("elapsed: {:.1?}", started.elapsed());
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(2))
        }
    }
}

fn read_config_value(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{} is not JSON: {e}", path.display())))
}

fn config_from_value<T: for<'de> Deserialize<'de>>(value: Value, path: &Path) -> Result<T> {
    serde_json::from_value(value)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Resolves the `env` / `mdp_file` pair every subcommand config carries.
/// `--seed` replaces the env seed; an explicit MDP file has no seed to
/// replace.
fn load_mdp(
    env: Option<&Value>,
    mdp_file: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<(TabularMdp, String, u64)> {
    match (env, mdp_file) {
        (Some(env), None) => {
            let mut obj = env
                .as_object()
                .ok_or_else(|| Error::Config("env must be a JSON object".into()))?
                .clone();
            if let Some(s) = seed_override {
                obj.insert("seed".into(), Value::from(s));
            }
            let spec = EnvSpec::from_value(&Value::Object(obj))?;
            let mdp = spec.build()?;
            Ok((mdp, spec.family().to_string(), spec.seed()))
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let mdp = mdp_from_json_str(&text)?;
            Ok((mdp, "mdp_file".to_string(), seed_override.unwrap_or(0)))
        }
        (Some(_), Some(_)) => Err(Error::Config(
            "config sets both env and mdp_file; pick one".into(),
        )),
        (None, None) => Err(Error::Config(
            "config needs either an env section or an mdp_file path".into(),
        )),
    }
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents.as_bytes())?;
    Ok(path)
}

fn opt_json(v: Option<f64>) -> Value {
    match v {
        Some(x) => json!(x),
        None => Value::Null,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanConfig {
    env: Option<Value>,
    mdp_file: Option<PathBuf>,
    planner: Value,
    threshold_frac: Option<f64>,
    e_min: Option<f64>,
}

/// The bench grid exposes only the closed-loop planners; the standalone
/// subcommand additionally accepts the primal-dual iteration.
enum CliPlanner {
    Grid(PlannerSpec),
    PrimalDual {
        anti: AntiRewardConfig,
        options: PrimalDualOptions,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimalDualConfig {
    #[serde(rename = "type")]
    _type: String,
    antireward: AntiRewardConfig,
    alpha: Option<f64>,
    iterations: Option<usize>,
    lambda0: Option<f64>,
}

fn parse_cli_planner(value: Value) -> Result<CliPlanner> {
    let is_primal_dual = value
        .as_object()
        .and_then(|o| o.get("type"))
        .and_then(|t| t.as_str())
        == Some("mm_primal_dual");
    if is_primal_dual {
        let cfg: PrimalDualConfig = serde_json::from_value(value)
            .map_err(|e| Error::Config(format!("planner: {e}")))?;
        let mut options = PrimalDualOptions::default();
        if let Some(a) = cfg.alpha {
            options.alpha = a;
        }
        if let Some(n) = cfg.iterations {
            options.iterations = n;
        }
        if let Some(l) = cfg.lambda0 {
            options.lambda0 = l;
        }
        Ok(CliPlanner::PrimalDual {
            anti: cfg.antireward,
            options,
        })
    } else {
        Ok(CliPlanner::Grid(parse_planner_spec(value, "planner")?))
    }
}

fn cmd_plan(args: &RunArgs) -> Result<()> {
    let cfg: PlanConfig = config_from_value(read_config_value(&args.config)?, &args.config)?;
    let (mdp, env_label, _) = load_mdp(cfg.env.as_ref(), cfg.mdp_file.as_deref(), args.seed)?;
    let planner = parse_cli_planner(cfg.planner)?;

    let (label, anti_cfg) = match &planner {
        CliPlanner::Grid(spec) => (spec.label.clone(), spec.anti.clone()),
        CliPlanner::PrimalDual { anti, .. } => ("mm_primal_dual".to_string(), Some(anti.clone())),
    };
    let anti_cfg = anti_cfg.map(|a| match args.seed {
        Some(s) => a.with_seed(s),
        None => a,
    });
    let anti = match &anti_cfg {
        Some(a) => Some(gen_anti_reward(&mdp, mdp.reward(), a)?.0),
        None => None,
    };

    let refs = reference_returns(&mdp, mdp.reward(), anti.as_ref(), VI_TOL)?;
    let e_min = match (cfg.threshold_frac, cfg.e_min) {
        (Some(frac), None) => {
            if !(0.0..=1.0).contains(&frac) {
                return Err(Error::Config(format!(
                    "threshold_frac {frac} outside [0, 1]"
                )));
            }
            let low = match anti {
                Some(_) => refs.e_minus.expect("anti supplied"),
                None => refs.e_hat,
            };
            threshold_from_fraction(low, refs.e_star, frac)
        }
        (None, Some(e)) => e,
        _ => {
            return Err(Error::Config(
                "config needs exactly one of threshold_frac or e_min".into(),
            ))
        }
    };
    let constraint = RewardConstraint::new(e_min)?;

    let result: PlannerResult = match &planner {
        CliPlanner::Grid(spec) => match &spec.kind {
            PlannerKind::Meir => meir(&mdp, mdp.reward(), constraint, &MeirOptions::default())?,
            PlannerKind::Mm(mode) => {
                let mut opts = MmOptions::default();
                opts.mode = *mode;
                mm_binary_search(
                    &mdp,
                    mdp.reward(),
                    anti.as_ref().expect("mm has an anti-reward"),
                    constraint,
                    &opts,
                )?
            }
            PlannerKind::Mmbe { beta } => mmbe(
                &mdp,
                mdp.reward(),
                anti.as_ref().expect("mmbe has an anti-reward"),
                constraint,
                *beta,
                &MmOptions::default(),
            )?,
            PlannerKind::MmMix { n_mix } => mm_mix(
                &mdp,
                mdp.reward(),
                anti_cfg.as_ref().expect("mm_mix has an anti-reward"),
                constraint,
                *n_mix,
                None,
                &MmOptions::default(),
            )?,
        },
        CliPlanner::PrimalDual { options, .. } => mm_primal_dual(
            &mdp,
            mdp.reward(),
            anti.as_ref().expect("primal-dual has an anti-reward"),
            constraint,
            options,
        )?,
    };

    let policy_path = write_artifact(
        &args.out,
        "policy.json",
        &to_json_string(&policy_to_value(&result.policy)),
    )?;
    let summary = json!({
        "env": env_label,
        "planner": label,
        "antireward_kind": anti_cfg.as_ref().map(|a| a.kind.as_str()),
        "e_min": e_min,
        "achieved_return": result.achieved_return,
        "achieved_objective": result.achieved_objective,
        "lambda_star": result.lambda_star,
        "iterations": result.iterations,
        "converged": result.converged,
        "constraint_gap": result.constraint_gap,
    });
    let summary_path = write_artifact(&args.out, "plan_summary.json", &to_json_string(&summary))?;
    println!("wrote {}", policy_path.display());
    println!("wrote {}", summary_path.display());
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AntirewardCmdConfig {
    env: Option<Value>,
    mdp_file: Option<PathBuf>,
    antireward: AntiRewardConfig,
}

fn cmd_antireward(args: &RunArgs) -> Result<()> {
    let cfg: AntirewardCmdConfig =
        config_from_value(read_config_value(&args.config)?, &args.config)?;
    let (mdp, _, _) = load_mdp(cfg.env.as_ref(), cfg.mdp_file.as_deref(), args.seed)?;
    let anti_cfg = match args.seed {
        Some(s) => cfg.antireward.with_seed(s),
        None => cfg.antireward,
    };
    let (anti, diagnostics) = gen_anti_reward(&mdp, mdp.reward(), &anti_cfg)?;

    let reward_path = write_artifact(
        &args.out,
        "antireward.json",
        &to_json_string(&reward_to_value(
            &anti,
            Some(RewardProvenance {
                kind: anti_cfg.kind.as_str().to_string(),
                iterations: anti_cfg.iterations,
                seed: anti_cfg.seed,
                merl_temperature: anti_cfg.merl_temperature,
            }),
            None,
        )),
    )?;
    let diag = json!({
        "kind": diagnostics.kind.as_str(),
        "overlaps": diagnostics.overlaps,
        "iterations_run": diagnostics.iterations_run,
    });
    let diag_path = write_artifact(&args.out, "diagnostics.json", &to_json_string(&diag))?;
    println!("wrote {}", reward_path.display());
    println!("wrote {}", diag_path.display());
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObserveConfig {
    env: Option<Value>,
    mdp_file: Option<PathBuf>,
    policy_file: Option<PathBuf>,
    occupancy_file: Option<PathBuf>,
    observer: Value,
    #[serde(default)]
    seed: u64,
}

fn cmd_observe(args: &RunArgs) -> Result<()> {
    let cfg: ObserveConfig = config_from_value(read_config_value(&args.config)?, &args.config)?;
    let (mdp, _, _) = load_mdp(cfg.env.as_ref(), cfg.mdp_file.as_deref(), args.seed)?;
    let observer: ObserverSpec = parse_observer_spec(cfg.observer, "observer")?;
    let seed = args.seed.unwrap_or(cfg.seed);

    let policy = match &cfg.policy_file {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            Some(policy_from_value(serde_json::from_str(&text).map_err(
                |e| Error::Config(format!("{} is not JSON: {e}", path.display())),
            )?)?)
        }
        None => None,
    };
    let occupancy: Option<OccupancyMeasure> = match (&policy, &cfg.occupancy_file) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "config sets both policy_file and occupancy_file; pick one".into(),
            ))
        }
        (Some(p), None) => Some(occupancy_of_any(&mdp, p)?),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            Some(veilrl::json::occupancy_from_value(
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{} is not JSON: {e}", path.display())))?,
            )?)
        }
        (None, None) => {
            return Err(Error::Config(
                "config needs either policy_file or occupancy_file".into(),
            ))
        }
    };
    let occupancy = occupancy.expect("resolved above");

    let (target, recovered) = match &observer.kind {
        ObserverKind::MceTrue => {
            let rec = mce_irl(&mdp, &occupancy, &observer.irl)?;
            (occupancy, rec)
        }
        ObserverKind::MceDemos { n_demos, horizon } => {
            let policy = policy.as_ref().ok_or_else(|| {
                Error::Config("mce_demos observes sampled trajectories and needs policy_file".into())
            })?;
            let h = horizon.unwrap_or_else(|| veilrl::observers::demo_horizon(mdp.gamma()));
            let trajs = sample_trajectories(&mdp, policy, *n_demos, h, seed)?;
            let target = empirical_occupancy(&trajs, mdp.gamma(), mdp.n_states(), mdp.n_actions())?;
            let rec = mce_irl(&mdp, &target, &observer.irl)?;
            (target, rec)
        }
        ObserverKind::IrlMax { threshold } | ObserverKind::IrlRandom { threshold } => {
            let collapse = match &observer.kind {
                ObserverKind::IrlMax { .. } => ClusterCollapse::MaxMass,
                _ => ClusterCollapse::Random,
            };
            let cluster = ClusterConfig {
                threshold: *threshold,
                collapse,
                seed,
            };
            let target = cluster_occupancy(&mdp, &occupancy, &cluster)?;
            let rec = mce_irl(&mdp, &target, &observer.irl)?;
            (target, rec)
        }
    };

    let reward_path = write_artifact(
        &args.out,
        "recovered_reward.json",
        &to_json_string(&reward_to_value(
            &recovered.reward,
            None,
            Some(RewardConvergence {
                iterations: recovered.iterations,
                converged: recovered.converged,
                final_grad_l1: recovered.final_grad_l1,
            }),
        )),
    )?;
    let occ_path = write_artifact(
        &args.out,
        "target_occupancy.json",
        &to_json_string(&occupancy_to_value(&target)),
    )?;
    println!("wrote {}", reward_path.display());
    println!("wrote {}", occ_path.display());
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateConfig {
    env: Option<Value>,
    mdp_file: Option<PathBuf>,
    recovered_file: PathBuf,
    metrics: Option<Value>,
    #[serde(default = "default_ordering_pairs")]
    ordering_pairs: usize,
    #[serde(default)]
    seed: u64,
}

fn default_ordering_pairs() -> usize {
    200
}

fn cmd_evaluate(args: &RunArgs) -> Result<()> {
    let cfg: EvaluateConfig = config_from_value(read_config_value(&args.config)?, &args.config)?;
    let (mdp, _, _) = load_mdp(cfg.env.as_ref(), cfg.mdp_file.as_deref(), args.seed)?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let selection = match cfg.metrics {
        Some(v) => parse_metric_selection(v)?,
        None => MetricSelection::default(),
    };
    let text = fs::read_to_string(&cfg.recovered_file).map_err(|e| {
        Error::Config(format!("cannot read {}: {e}", cfg.recovered_file.display()))
    })?;
    let recovered: RewardTable = reward_from_value(serde_json::from_str(&text).map_err(|e| {
        Error::Config(format!("{} is not JSON: {e}", cfg.recovered_file.display()))
    })?)?;

    let truth = mdp.reward();
    let mut out = serde_json::Map::new();
    out.insert(
        "pearson".into(),
        opt_json(if selection.pearson {
            Some(pearson(
                truth.values().as_slice().expect("contiguous"),
                recovered.values().as_slice().expect("contiguous"),
            )?)
        } else {
            None
        }),
    );
    out.insert(
        "epic".into(),
        opt_json(if selection.epic {
            Some(epic_distance(truth, &recovered, mdp.gamma())?)
        } else {
            None
        }),
    );
    if selection.rollout {
        let ev = rollout_eval(&mdp, truth, &recovered, VI_TOL)?;
        out.insert(
            "rollout".into(),
            json!({
                "return_true": ev.return_true,
                "optimal_return": ev.optimal_return,
                "ratio": ev.ratio,
            }),
        );
    } else {
        out.insert("rollout".into(), Value::Null);
    }
    out.insert(
        "ordering_consistency".into(),
        opt_json(if selection.ordering {
            Some(ordering_consistency(
                &mdp,
                truth,
                &recovered,
                cfg.ordering_pairs,
                seed,
            )?)
        } else {
            None
        }),
    );

    let path = write_artifact(
        &args.out,
        "metrics.json",
        &to_json_string(&Value::Object(out)),
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let mut cfg = bench::load_config(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let rows = bench::run_experiment(&cfg, args.jobs);
    fs::create_dir_all(&cfg.output)?;
    let csv_path = cfg.output.join("results.csv");
    bench::write_results(&rows, &csv_path)?;
    println!("wrote {} rows to {}", rows.len(), csv_path.display());
    for planner in &cfg.planners {
        let plottable = rows
            .iter()
            .any(|r| r.planner == planner.label && r.error.is_none());
        let plot_path = cfg
            .output
            .join(format!("{}_{}.svg", cfg.env_label, planner.label));
        if plottable {
            bench::render_plot(&rows, &cfg.env_label, &planner.label, &plot_path)?;
            println!("wrote {}", plot_path.display());
        } else {
            println!("skipped {}: no successful rows", plot_path.display());
        }
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        println!("{failed} cells failed; see the error column");
    }
    Ok(())
}
