//! Trial orchestration: paired models, solver runs, per-trial metrics and summary means.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use slse_core::dense::{matvec, norm2};
use slse_core::model::{gen_model, ols_solve, ols_solve_xy, pred_error, LinearModel};
use slse_core::precond::{build_hessian_sketch, HessianSketch};
use slse_core::schedule::{stagewise_condition_holds, ARule};
use slse_core::sketch::{build_srht_plan, sketch_once, SketchKind};
use slse_core::solver::{
    mihs_full_run, pcg_run, slse_frs_run, slse_frs_with, InitCost, MomentumParams, PrebuiltViews, RunOutput, SolverConfig,
    StopRule,
};
use slse_core::Rng;

use crate::config::{ExperimentConfig, ItersSpec, ParamMode, SolverKind, StopMode};
use crate::error::{BenchError, Result};

/// One trajectory point as written to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub trial: usize,
    pub solver: SolverKind,
    pub iter: usize,
    pub stage: u8,
    pub m_active: usize,
    pub pred_error: f64,
    pub cum_flops: u64,
    pub wall_seconds: f64,
}

/// Metrics of one solver on one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub solver: SolverKind,
    pub ols_error: f64,
    pub target: f64,
    pub final_pred_error: f64,
    pub iterations: usize,
    pub stop_reached: bool,
    /// `None` when the target was never reached.
    pub flops_to_target: Option<u64>,
    pub time_to_target: Option<f64>,
    pub init_flops: u64,
    pub init_seconds: f64,
    pub a_schedule: Vec<usize>,
    /// Measured `‖X(β₀ − β̃¹)‖ / ‖X(β̃¹ − β)‖` (sketched solver only).
    pub init_ratio: Option<f64>,
    pub stagewise_condition: Option<bool>,
}

/// Arithmetic means over trials for one solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSummary {
    pub solver: SolverKind,
    pub trials: usize,
    pub mean_final_pred_error: f64,
    pub mean_ols_error: f64,
    /// Number of trials that reached the target; the two means below are over those.
    pub reached_target: usize,
    pub mean_flops_to_target: Option<f64>,
    pub mean_time_to_target: Option<f64>,
    pub mean_init_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub solvers: Vec<SolverSummary>,
    pub trials: Vec<TrialSummary>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
}

/// Everything shared by the solvers of one trial.
pub struct TrialSetup {
    pub model: LinearModel,
    pub hessian: HessianSketch,
    pub ols_error: f64,
    pub rng: Rng,
}

pub fn trial_rng(seed: u64, trial: usize) -> Rng {
    Rng::new(seed).fork_indexed("trial", trial as u64)
}

pub fn setup_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialSetup> {
    let rng = trial_rng(cfg.seed, trial);
    let model = gen_model(cfg.n, cfg.d, cfg.kappa, cfg.sigma2, &rng.fork("model"))?;
    let hessian = build_hessian_sketch(&model.x, cfg.r(), &rng)?;
    let ols_error = pred_error(&model, &ols_solve(&model)?)?;
    Ok(TrialSetup {
        model,
        hessian,
        ols_error,
        rng,
    })
}

fn stop_rule(cfg: &ExperimentConfig, target: f64) -> StopRule {
    match cfg.stop {
        StopMode::Oracle => StopRule::Oracle { target },
        StopMode::Residual => StopRule::Residual { tol: cfg.tol },
        StopMode::Fixed => StopRule::Fixed,
    }
}

fn momentum(cfg: &ExperimentConfig) -> MomentumParams {
    match cfg.params {
        ParamMode::Practical => MomentumParams::practical(cfg.d, cfg.r()),
        ParamMode::Theorem => MomentumParams::theorem(),
    }
}

/// Sketch flops for rebuilding one non-SRHT subproblem from scratch.
fn independent_sketch_flops(kind: SketchKind, m: usize, n: usize, d: usize) -> u64 {
    let nd1 = (n * (d + 1)) as u64;
    match kind {
        SketchKind::Srht => 0,
        SketchKind::CountSketch => nd1,
        SketchKind::Gaussian => 2 * m as u64 * nd1,
    }
}

/// `(‖Xβ̃¹‖ / ‖X(β̃¹ − β)‖)` for the exact solution of the first subproblem.
fn measure_init_ratio(model: &LinearModel, sx: &slse_core::dense::Matrix, sy: &[f64]) -> Result<f64> {
    let b1 = ols_solve_xy(sx, sy)?;
    let start = norm2(&matvec(&model.x, &b1)?);
    let err = pred_error(model, &b1)?.sqrt();
    Ok(start / err)
}

fn run_sketched(cfg: &ExperimentConfig, setup: &TrialSetup, target: f64) -> Result<(RunOutput, Option<f64>)> {
    let model = &setup.model;
    let sizes = cfg.resolved_sizes()?;
    let mut solver_cfg = SolverConfig {
        params: momentum(cfg),
        a_rule: ARule::Constant(2),
        t_max: cfg.t_max,
        stop: stop_rule(cfg, target),
        reset_momentum: cfg.reset_momentum,
    };
    match cfg.sketch {
        SketchKind::Srht => {
            let plan = build_srht_plan(model.n(), &sizes, &setup.rng.fork("plan"))?;
            let mut init_ratio = None;
            solver_cfg.a_rule = match &cfg.ai {
                ItersSpec::List(a) => ARule::List(a.clone()),
                ItersSpec::LowerBound => {
                    let ds = slse_core::sketch::apply_srht_full(&plan, &model.x, &model.y)?;
                    let (sx, sy) = ds.extract_view(1)?;
                    let ratio = measure_init_ratio(model, &sx, &sy)?;
                    init_ratio = Some(ratio);
                    ARule::LowerBound {
                        omega: cfg.omega,
                        init_ratio: ratio,
                        orientation: cfg.orientation,
                    }
                }
            };
            Ok((slse_frs_run(model, &plan, &setup.hessian, &solver_cfg)?, init_ratio))
        }
        kind => {
            let clock = Instant::now();
            let mut views = Vec::with_capacity(sizes.len());
            let mut flops = 0;
            for (i, &m) in sizes.iter().enumerate() {
                views.push(sketch_once(kind, m, &model.x, &model.y, &setup.rng.fork_indexed("subproblem", i as u64 + 1))?);
                flops += independent_sketch_flops(kind, m, model.n(), model.d());
            }
            let init = InitCost {
                flops,
                seconds: clock.elapsed().as_secs_f64(),
            };
            let mut init_ratio = None;
            solver_cfg.a_rule = match &cfg.ai {
                ItersSpec::List(a) => ARule::List(a.clone()),
                ItersSpec::LowerBound => {
                    let ratio = measure_init_ratio(model, &views[0].0, &views[0].1)?;
                    init_ratio = Some(ratio);
                    ARule::LowerBound {
                        omega: cfg.omega,
                        init_ratio: ratio,
                        orientation: cfg.orientation,
                    }
                }
            };
            let out = slse_frs_with(model, &PrebuiltViews(views), &setup.hessian, &solver_cfg, init)?;
            Ok((out, init_ratio))
        }
    }
}

/// Run one solver on a prepared trial.
pub fn run_solver(cfg: &ExperimentConfig, setup: &TrialSetup, solver: SolverKind) -> Result<(RunOutput, Option<f64>)> {
    let target = cfg.target_factor * setup.ols_error;
    match solver {
        SolverKind::SlseFrs => run_sketched(cfg, setup, target),
        SolverKind::MIhs => {
            let solver_cfg = SolverConfig {
                params: momentum(cfg),
                a_rule: ARule::List(Vec::new()),
                t_max: cfg.t_max,
                stop: stop_rule(cfg, target),
                reset_momentum: cfg.reset_momentum,
            };
            Ok((mihs_full_run(&setup.model, &setup.hessian, &solver_cfg)?, None))
        }
        SolverKind::Pcg => Ok((pcg_run(&setup.model, &setup.hessian, stop_rule(cfg, target), cfg.t_max)?, None)),
    }
}

fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<(Vec<RunRecord>, Vec<TrialSummary>)> {
    let setup = setup_trial(cfg, trial)?;
    let target = cfg.target_factor * setup.ols_error;
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for &solver in &cfg.solvers {
        let (out, init_ratio) = run_solver(cfg, &setup, solver)?;
        let wall = |s: f64| if cfg.wall_clock { s } else { 0.0 };
        let hit = out.first_below(target);
        summaries.push(TrialSummary {
            trial,
            solver,
            ols_error: setup.ols_error,
            target,
            final_pred_error: out.final_pred_error(),
            iterations: out.records.last().map_or(0, |r| r.iter),
            stop_reached: out.stop_reached,
            flops_to_target: hit.map(|r| r.cum_flops),
            time_to_target: hit.map(|r| wall(r.wall_seconds)),
            init_flops: out.init_flops,
            init_seconds: wall(out.init_seconds),
            a_schedule: out.schedule.a.clone(),
            init_ratio,
            stagewise_condition: init_ratio.map(|q| stagewise_condition_holds(q, cfg.omega)),
        });
        records.extend(out.records.iter().map(|r| RunRecord {
            trial,
            solver,
            iter: r.iter,
            stage: r.stage,
            m_active: r.m_active,
            pred_error: r.pred_error,
            cum_flops: r.cum_flops,
            wall_seconds: wall(r.wall_seconds),
        }));
    }
    Ok((records, summaries))
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, k) = v.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    (k > 0).then(|| s / k as f64)
}

pub fn summarize(trials: Vec<TrialSummary>, order: &[SolverKind]) -> Summary {
    let mut by: BTreeMap<SolverKind, Vec<&TrialSummary>> = BTreeMap::new();
    for t in &trials {
        by.entry(t.solver).or_default().push(t);
    }
    let solvers = order
        .iter()
        .filter_map(|s| by.get(s).map(|ts| (*s, ts)))
        .map(|(solver, ts)| SolverSummary {
            solver,
            trials: ts.len(),
            mean_final_pred_error: mean(ts.iter().map(|t| t.final_pred_error)).unwrap_or(f64::NAN),
            mean_ols_error: mean(ts.iter().map(|t| t.ols_error)).unwrap_or(f64::NAN),
            reached_target: ts.iter().filter(|t| t.flops_to_target.is_some()).count(),
            mean_flops_to_target: mean(ts.iter().filter_map(|t| t.flops_to_target.map(|f| f as f64))),
            mean_time_to_target: mean(ts.iter().filter_map(|t| t.time_to_target)),
            mean_init_seconds: mean(ts.iter().map(|t| t.init_seconds)).unwrap_or(f64::NAN),
        })
        .collect();
    Summary { solvers, trials }
}

/// Validate, run every trial in parallel, and gather records in `(trial, solver, iter)` order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut solvers = cfg.solvers.clone();
    solvers.dedup();
    let cfg = ExperimentConfig { solvers, ..cfg.clone() };
    let per_trial: Vec<_> = (0..cfg.trials).into_par_iter().map(|t| run_trial(&cfg, t)).collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut trials = Vec::new();
    for (r, s) in per_trial {
        records.extend(r);
        trials.extend(s);
    }
    records.sort_by(|a, b| (a.trial, a.solver, a.iter).cmp(&(b.trial, b.solver, b.iter)));
    trials.sort_by_key(|t| (t.trial, t.solver));
    let summary = summarize(trials, &cfg.solvers);
    Ok(ExperimentOutput { records, summary })
}

/// Monte-Carlo `E‖X(β̃ − β)‖² / E‖X(β̂ − β)‖²` for one sketch of `m` rows.
///
/// `X` is fixed (κ = 1, σ² = 1); every trial draws fresh noise and a fresh sketch.
pub fn estimate_pe(n: usize, d: usize, m: usize, kind: SketchKind, trials: usize, seed: u64) -> Result<f64> {
    if !(d < m && m <= n) {
        return Err(BenchError::Config(format!("need d < m <= n (n = {n}, d = {d}, m = {m})")));
    }
    if trials == 0 {
        return Err(BenchError::Config("trials must be at least 1".into()));
    }
    let root = Rng::new(seed);
    let base = gen_model(n, d, 1.0, 1.0, &root.fork("design"))?;
    let pairs: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let rng = root.fork_indexed("pe-trial", t as u64);
            let model = base.redraw_noise(&rng.fork("noise"));
            let (sx, sy) = sketch_once(kind, m, &model.x, &model.y, &rng.fork("sketch"))?;
            let sketched = pred_error(&model, &ols_solve_xy(&sx, &sy)?)?;
            let full = pred_error(&model, &ols_solve(&model)?)?;
            Ok((sketched, full))
        })
        .collect::<Result<_>>()?;
    let num: f64 = pairs.iter().map(|p| p.0).sum();
    let den: f64 = pairs.iter().map(|p| p.1).sum();
    Ok(num / den)
}

/// Limit `(1 − γ)/(ξ − γ)` with `γ = d/n`, `ξ = m/n`.
pub fn pe_limit(n: usize, d: usize, m: usize) -> f64 {
    let (g, x) = (d as f64 / n as f64, m as f64 / n as f64);
    (1.0 - g) / (x - g)
}
