//! Momentum-preconditioned iterations: the two-stage sequential sketched
//! solver, plain full-data momentum IHS, and preconditioned CG.

use std::time::Instant;

use crate::dense::{axpy, dot, matvec, matvec_t, norm2, Matrix};
use crate::error::{Error, Result};
use crate::flops::{mihs_iteration_flops, pcg_iteration_flops, FlopCounter};
use crate::model::{pred_error, LinearModel};
use crate::precond::HessianSketch;
use crate::schedule::{ARule, Schedule};
use crate::sketch::{apply_srht_full, SketchPlan, SketchedDataset};

const DIVERGENCE_LIMIT: f64 = 1e12;

/// Step size `mu` and momentum `eta` of the heavy-ball update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumParams {
    pub mu: f64,
    pub eta: f64,
}

impl MomentumParams {
    /// `η = d/r`, `μ = (1 − η)²`.
    pub fn practical(d: usize, r: usize) -> Self {
        let eta = d as f64 / r as f64;
        MomentumParams {
            mu: (1.0 - eta).powi(2),
            eta,
        }
    }

    /// `μ = 1`, `η = 53/36 − √17/3` (contraction rate at most 1/3).
    pub fn theorem() -> Self {
        MomentumParams {
            mu: 1.0,
            eta: 53.0 / 36.0 - 17f64.sqrt() / 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Run until `t_max`.
    Fixed,
    /// Stop once `‖X(β_t − β)‖² ≤ target` (requires the true β).
    Oracle { target: f64 },
    /// Stop once `‖Xᵀ(Xβ_t − Y)‖ ≤ tol · ‖XᵀY‖`.
    Residual { tol: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub params: MomentumParams,
    pub a_rule: ARule,
    pub t_max: usize,
    pub stop: StopRule,
    /// Set `β_{−1} = β_0` on entering each subproblem and stage 2.
    pub reset_momentum: bool,
}

impl SolverConfig {
    pub fn practical(d: usize, r: usize) -> Self {
        SolverConfig {
            params: MomentumParams::practical(d, r),
            a_rule: ARule::Constant(2),
            t_max: 100,
            stop: StopRule::Fixed,
            reset_momentum: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub beta: Vec<f64>,
    pub beta_prev: Vec<f64>,
    pub t: usize,
    pub stage: u8,
    pub subproblem: usize,
    pub flops: FlopCounter,
}

impl SolverState {
    pub fn new(beta0: Vec<f64>) -> Self {
        SolverState {
            beta_prev: beta0.clone(),
            beta: beta0,
            t: 0,
            stage: 1,
            subproblem: 1,
            flops: FlopCounter::default(),
        }
    }

    /// `β_{−1} = β_0` at the entry of a new subproblem.
    pub fn reset_momentum(&mut self) {
        self.beta_prev.clone_from(&self.beta);
    }
}

/// One row of a solver trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub stage: u8,
    pub subproblem: usize,
    pub m_active: usize,
    pub pred_error: f64,
    pub cum_flops: u64,
    pub wall_seconds: f64,
}

/// Result of a full solver run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub beta: Vec<f64>,
    pub records: Vec<IterRecord>,
    /// False when the stop rule did not fire before `t_max`.
    pub stop_reached: bool,
    pub init_flops: u64,
    pub init_seconds: f64,
    pub schedule: Schedule,
}

impl RunOutput {
    pub fn final_pred_error(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.pred_error)
    }

    /// First record with `Δ_t ≤ target`.
    pub fn first_below(&self, target: f64) -> Option<&IterRecord> {
        self.records.iter().find(|r| r.pred_error <= target)
    }
}

/// Gradient `Aᵀ(Aβ − b)`; charges `(4d+1)·rows`.
fn gradient(a: &Matrix, b: &[f64], beta: &[f64], flops: &mut FlopCounter) -> Result<Vec<f64>> {
    let mut res = matvec(a, beta)?;
    if res.len() != b.len() {
        return Err(Error::DimensionMismatch {
            op: "mihs_step",
            expected: format!("b of length {}", a.rows()),
            found: format!("length {}", b.len()),
        });
    }
    for (ri, bi) in res.iter_mut().zip(b) {
        *ri -= bi;
    }
    let g = matvec_t(a, &res)?;
    flops.add((4 * a.cols() as u64 + 1) * a.rows() as u64);
    Ok(g)
}

/// Preconditioned heavy-ball update from a precomputed gradient; charges `2d² + 5d`.
fn momentum_update(state: &mut SolverState, h: &HessianSketch, grad: &[f64], params: MomentumParams) -> Result<()> {
    let p = h.apply_inv(grad, &mut state.flops)?;
    let d = state.beta.len();
    for k in 0..d {
        let bt = state.beta[k];
        let next = bt - params.mu * p[k] + params.eta * (bt - state.beta_prev[k]);
        state.beta_prev[k] = bt;
        state.beta[k] = next;
    }
    state.flops.add(5 * d as u64);
    state.t += 1;
    let norm = norm2(&state.beta);
    if !norm.is_finite() || norm > DIVERGENCE_LIMIT {
        return Err(Error::Diverged {
            t: state.t,
            stage: state.stage,
        });
    }
    Ok(())
}

/// `β_{t+1} = β_t − μ Ĥ⁻¹ Aᵀ(Aβ_t − b) + η(β_t − β_{t−1})`.
///
/// Charges exactly `(4d+1)·rows(A) + 2d² + 5d` flops.
pub fn mihs_step(state: &mut SolverState, h: &HessianSketch, a: &Matrix, b: &[f64], params: MomentumParams) -> Result<()> {
    if a.cols() != state.beta.len() || h.d() != state.beta.len() {
        return Err(Error::DimensionMismatch {
            op: "mihs_step",
            expected: format!("d = {}", state.beta.len()),
            found: format!("A with {} columns, Ĥ of order {}", a.cols(), h.d()),
        });
    }
    let g = gradient(a, b, &state.beta, &mut state.flops)?;
    momentum_update(state, h, &g, params)
}

/// Source of sketched subproblem data `(S_i X, S_i Y)`, `i = 1..=k`.
pub trait SubproblemSource {
    fn k(&self) -> usize;
    fn sizes(&self) -> Vec<usize>;
    fn view(&self, i: usize) -> Result<(Matrix, Vec<f64>)>;
}

impl SubproblemSource for SketchedDataset {
    fn k(&self) -> usize {
        SketchedDataset::k(self)
    }

    fn sizes(&self) -> Vec<usize> {
        SketchedDataset::sizes(self).to_vec()
    }

    fn view(&self, i: usize) -> Result<(Matrix, Vec<f64>)> {
        self.extract_view(i)
    }
}

/// Subproblems sketched ahead of time, e.g. with independent CountSketches.
#[derive(Debug, Clone, Default)]
pub struct PrebuiltViews(pub Vec<(Matrix, Vec<f64>)>);

impl SubproblemSource for PrebuiltViews {
    fn k(&self) -> usize {
        self.0.len()
    }

    fn sizes(&self) -> Vec<usize> {
        self.0.iter().map(|(a, _)| a.rows()).collect()
    }

    fn view(&self, i: usize) -> Result<(Matrix, Vec<f64>)> {
        self.0
            .get(i.wrapping_sub(1))
            .cloned()
            .ok_or(Error::OutOfRange { index: i, len: self.0.len() })
    }
}

/// Work done before the first iteration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InitCost {
    pub flops: u64,
    pub seconds: f64,
}

struct Recorder<'m> {
    model: &'m LinearModel,
    records: Vec<IterRecord>,
    wall: f64,
}

impl Recorder<'_> {
    fn push(&mut self, state: &SolverState, m_active: usize) -> Result<f64> {
        let err = pred_error(self.model, &state.beta)?;
        self.records.push(IterRecord {
            iter: state.t,
            stage: state.stage,
            subproblem: state.subproblem,
            m_active,
            pred_error: err,
            cum_flops: state.flops.get(),
            wall_seconds: self.wall,
        });
        Ok(err)
    }
}

/// Two-stage run over an arbitrary subproblem source.
///
/// Stage 1 takes `a_i` momentum steps on each subproblem in turn, warm
/// starting from the previous subproblem's last iterate. Stage 2 iterates
/// on the full `(X, Y)` until the stop rule fires or `t_max` total steps.
/// Momentum is reset (`β_{−1} = β_0`) on entering every subproblem and stage 2.
pub fn slse_frs_with<S: SubproblemSource + ?Sized>(
    model: &LinearModel,
    source: &S,
    h: &HessianSketch,
    cfg: &SolverConfig,
    init: InitCost,
) -> Result<RunOutput> {
    let d = model.d();
    let n = model.n();
    let sizes = source.sizes();
    if let Some(&m1) = sizes.first() {
        if m1 <= h.r {
            return Err(Error::Config(format!(
                "first sketch size m_1 = {m1} must exceed the Hessian sketch size r = {}",
                h.r
            )));
        }
    }
    if h.d() != d {
        return Err(Error::shape("slse_frs_run", format!("Ĥ of order {d}"), format!("order {}", h.d())));
    }
    let schedule = Schedule::resolve(sizes, &cfg.a_rule, d)?;

    let mut state = SolverState::new(vec![0.0; d]);
    state.flops = FlopCounter::new(init.flops);
    state.stage = if schedule.k() > 0 { 1 } else { 2 };
    state.subproblem = if schedule.k() > 0 { 1 } else { 1 + schedule.k() };
    let mut rec = Recorder {
        model,
        records: Vec::with_capacity(cfg.t_max + 1),
        wall: init.seconds,
    };
    rec.push(&state, 0)?;

    for i in 1..=schedule.k() {
        let clock = Instant::now();
        let (a, b) = source.view(i)?;
        state.stage = 1;
        state.subproblem = i;
        if cfg.reset_momentum {
            state.reset_momentum();
        }
        rec.wall += clock.elapsed().as_secs_f64();
        for _ in 0..schedule.a[i - 1] {
            let clock = Instant::now();
            mihs_step(&mut state, h, &a, &b, cfg.params)?;
            rec.wall += clock.elapsed().as_secs_f64();
            rec.push(&state, a.rows())?;
        }
    }

    state.stage = 2;
    state.subproblem = schedule.k() + 1;
    if cfg.reset_momentum {
        state.reset_momentum();
    }
    let rhs_norm = match cfg.stop {
        StopRule::Residual { .. } => norm2(&matvec_t(&model.x, &model.y)?),
        _ => 0.0,
    };
    let mut stop_reached = match cfg.stop {
        StopRule::Fixed => true,
        StopRule::Oracle { target } => rec.records.last().is_some_and(|r| r.pred_error <= target),
        StopRule::Residual { .. } => false,
    };
    let early_exit = !matches!(cfg.stop, StopRule::Fixed);
    while state.t < cfg.t_max && !(early_exit && stop_reached) {
        let clock = Instant::now();
        let g = gradient(&model.x, &model.y, &state.beta, &mut state.flops)?;
        if let StopRule::Residual { tol } = cfg.stop {
            if norm2(&g) <= tol * rhs_norm {
                rec.wall += clock.elapsed().as_secs_f64();
                stop_reached = true;
                break;
            }
        }
        momentum_update(&mut state, h, &g, cfg.params)?;
        rec.wall += clock.elapsed().as_secs_f64();
        let err = rec.push(&state, n)?;
        if let StopRule::Oracle { target } = cfg.stop {
            if err <= target {
                stop_reached = true;
            }
        }
    }

    Ok(RunOutput {
        beta: state.beta,
        records: rec.records,
        stop_reached,
        init_flops: init.flops,
        init_seconds: init.seconds,
        schedule,
    })
}

/// SRHT-based two-stage solver: transform once, then cut nested views.
pub fn slse_frs_run(model: &LinearModel, plan: &SketchPlan, h: &HessianSketch, cfg: &SolverConfig) -> Result<RunOutput> {
    let clock = Instant::now();
    let ds = apply_srht_full(plan, &model.x, &model.y)?;
    let init = InitCost {
        flops: plan.transform_flops(model.d()),
        seconds: clock.elapsed().as_secs_f64(),
    };
    slse_frs_with(model, &ds, h, cfg, init)
}

/// Momentum IHS on the full data only (no sketched subproblems).
pub fn mihs_full_run(model: &LinearModel, h: &HessianSketch, cfg: &SolverConfig) -> Result<RunOutput> {
    slse_frs_with(model, &PrebuiltViews::default(), h, cfg, InitCost::default())
}

/// Conjugate gradient on `XᵀXβ = XᵀY` preconditioned by `Ĥ⁻¹`, from `β₀ = 0`.
///
/// Each iteration charges `(4d+1)n + 2d² + 10d`; the initial residual and
/// preconditioned residual are reported as initialization work.
pub fn pcg_run(model: &LinearModel, h: &HessianSketch, stop: StopRule, t_max: usize) -> Result<RunOutput> {
    pcg_run_from(model, h, &vec![0.0; model.d()], stop, t_max)
}

pub fn pcg_run_from(model: &LinearModel, h: &HessianSketch, beta0: &[f64], stop: StopRule, t_max: usize) -> Result<RunOutput> {
    let (n, d) = (model.n(), model.d());
    if beta0.len() != d || h.d() != d {
        return Err(Error::shape("pcg_run", format!("β₀ and Ĥ of order {d}"), format!("{} and {}", beta0.len(), h.d())));
    }
    let x = &model.x;
    let clock = Instant::now();
    let mut state = SolverState::new(beta0.to_vec());
    state.stage = 2;
    let xb = matvec(x, &state.beta)?;
    let resid: Vec<f64> = model.y.iter().zip(&xb).map(|(y, v)| y - v).collect();
    let mut r = matvec_t(x, &resid)?;
    state.flops.add((4 * d as u64 + 1) * n as u64);
    let rhs_norm = norm2(&r);
    let mut z = h.apply_inv(&r, &mut state.flops)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let init = InitCost {
        flops: state.flops.get(),
        seconds: clock.elapsed().as_secs_f64(),
    };
    let mut rec = Recorder {
        model,
        records: Vec::with_capacity(t_max + 1),
        wall: init.seconds,
    };
    rec.push(&state, 0)?;

    let mut stop_reached = match stop {
        StopRule::Fixed => true,
        StopRule::Oracle { target } => rec.records[0].pred_error <= target,
        StopRule::Residual { tol } => rhs_norm <= tol * rhs_norm,
    };
    let early_exit = !matches!(stop, StopRule::Fixed);
    while state.t < t_max && !(early_exit && stop_reached) {
        if rz == 0.0 {
            // Exact solution already reached.
            stop_reached = true;
            break;
        }
        let clock = Instant::now();
        let xp = matvec(x, &p)?;
        let curvature = dot(&xp, &xp);
        if !(curvature > 0.0) || !curvature.is_finite() {
            return Err(Error::Breakdown {
                iter: state.t + 1,
                curvature,
            });
        }
        let q = matvec_t(x, &xp)?;
        let alpha = rz / curvature;
        axpy(alpha, &p, &mut state.beta);
        axpy(-alpha, &q, &mut r);
        z = h.apply_inv(&r, &mut FlopCounter::default())?;
        let rz_new = dot(&r, &z);
        let gamma = rz_new / rz;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + gamma * *pi;
        }
        rz = rz_new;
        state.t += 1;
        state.flops.add(pcg_iteration_flops(n, d));
        rec.wall += clock.elapsed().as_secs_f64();
        if !norm2(&state.beta).is_finite() {
            return Err(Error::Diverged { t: state.t, stage: 2 });
        }
        let err = rec.push(&state, n)?;
        stop_reached = match stop {
            StopRule::Fixed => true,
            StopRule::Oracle { target } => err <= target,
            StopRule::Residual { tol } => norm2(&r) <= tol * rhs_norm,
        };
    }

    Ok(RunOutput {
        beta: state.beta,
        records: rec.records,
        stop_reached,
        init_flops: init.flops,
        init_seconds: init.seconds,
        schedule: Schedule::empty(),
    })
}

/// Flops charged by one stage-1 step on a view of `m` rows.
pub fn stage1_step_flops(m: usize, d: usize) -> u64 {
    mihs_iteration_flops(m, d)
}
