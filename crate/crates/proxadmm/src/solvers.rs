//! The solver family.
//!
//! All variants share the same dual ascent step, taken first and at the old
//! primal point: y' = y + alpha (Ax - b). They differ in the primal update:
//!
//! * [`alm_iterate`]: one projected gradient step on the augmented
//!   Lagrangian, x' = [x - c grad L(x; y')]. Known to oscillate or diverge
//!   for nonconvex objectives when alpha is not tiny.
//! * [`proximal_alm_iterate`]: the same step on K(x, z; y'), whose proximal
//!   anchor z trails x through exponential smoothing z' = z + beta (x' - z).
//!   With 0 < c < 1/L_K, p > -gamma and suitable alpha, beta this converges
//!   where the plain method does not.
//! * [`multiblock_iterate`]: Gauss-Seidel sweep of the same linearized step
//!   over a block partition, each block seeing the blocks before it already
//!   updated. Stepsize validity tightens to c <= 1/(L + p + G sigma_max²)
//!   with sigma_max the largest per-block ‖A_j‖₂.
//! * [`classic_admm_iterate`]: two-block baseline that minimizes each block
//!   subproblem to tolerance with an inner projected-gradient loop, then
//!   updates the dual last.
//!
//! [`run`] drives any of them with stopping rules, trace sampling and
//! divergence detection.

use serde::{Deserialize, Serialize};

use crate::auglag::{self, clamp, CurvatureConstants, PenaltyConfig};
use crate::diagnostics::{self, Certificate};
use crate::linalg;
use crate::model::Problem;
use crate::{Error, Result};

/// Hard ceiling on ‖y‖; beyond it the dual is declared divergent.
pub const DUAL_NORM_LIMIT: f64 = 1e12;

const CLASSIC_INNER_MAX: u64 = 500_000;

/// Parameters shared by the whole solver family. Validity for a particular
/// algorithm is reported by [`check_params`], never enforced: experiments
/// outside the guaranteed region are legitimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Penalty weight G on ‖Ax - b‖².
    pub penalty_weight: f64,
    /// Dual ascent stepsize alpha.
    pub dual_stepsize: f64,
    /// Smoothing factor beta in (0, 1]; beta = 1 disables smoothing.
    pub smoothing_factor: f64,
    /// Primal stepsize c.
    pub primal_stepsize: f64,
    /// Proximal weight p; p = 0 disables the proximal term.
    pub prox_weight: f64,
    pub max_iter: u64,
    /// Threshold used by the stopping rules.
    pub stop_tol: f64,
    /// Trace sampling period, in iterations.
    pub record_every: u64,
}

impl SolverParams {
    /// Baseline recipe: G = 10, alpha = G/4, p = 2L + 2G sigma²,
    /// c = 1/(2(L + G sigma²)), beta = 1/2. The prox weight dominates any
    /// weak convexity the objective can have under this c, and c stays
    /// below 1/L_K.
    pub fn recommended(prob: &Problem) -> Self {
        let sigma = auglag::spectral_norm(&prob.constraints.a);
        let l = prob.objective.lipschitz();
        let penalty_weight = 10.0;
        let base = l + penalty_weight * sigma * sigma;
        SolverParams {
            penalty_weight,
            dual_stepsize: penalty_weight / 4.0,
            smoothing_factor: 0.5,
            primal_stepsize: 1.0 / (2.0 * base),
            prox_weight: 2.0 * base,
            max_iter: 200_000,
            stop_tol: 1e-6,
            record_every: 100,
        }
    }

    pub fn penalty_config(&self) -> PenaltyConfig {
        PenaltyConfig {
            penalty_weight: self.penalty_weight,
            prox_weight: self.prox_weight,
        }
    }
}

/// Where the parameters sit relative to the convergence theory. Informative
/// only; [`run`] records it and proceeds regardless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamValidity {
    pub sigma: f64,
    pub smoothness: f64,
    pub strong_convexity: f64,
    /// Largest per-block ‖A_j‖₂, when a partition is present.
    pub max_block_norm: Option<f64>,
    /// G > 0.
    pub penalty_ok: bool,
    /// alpha > 0.
    pub dual_stepsize_ok: bool,
    /// 0 < beta <= 1.
    pub smoothing_ok: bool,
    /// p > -gamma.
    pub prox_weight_ok: bool,
    /// 0 < c < 1/L_K.
    pub single_block_stepsize_ok: bool,
    /// 0 < c <= 1/(L + p + G sigma_max²), when a partition is present.
    pub multi_block_stepsize_ok: Option<bool>,
}

pub fn check_params(prob: &Problem, params: &SolverParams) -> ParamValidity {
    let sigma = auglag::spectral_norm(&prob.constraints.a);
    let cc = CurvatureConstants::with_sigma(prob, &params.penalty_config(), sigma);
    let max_block_norm = prob.blocks.as_ref().map(|partition| {
        partition
            .blocks()
            .iter()
            .map(|block| auglag::spectral_norm(&prob.constraints.a.select_columns(block)))
            .fold(0.0f64, f64::max)
    });
    let c = params.primal_stepsize;
    ParamValidity {
        sigma,
        smoothness: cc.smoothness,
        strong_convexity: cc.strong_convexity,
        max_block_norm,
        penalty_ok: params.penalty_weight > 0.0,
        dual_stepsize_ok: params.dual_stepsize > 0.0,
        smoothing_ok: params.smoothing_factor > 0.0 && params.smoothing_factor <= 1.0,
        prox_weight_ok: cc.strong_convexity > 0.0,
        single_block_stepsize_ok: c > 0.0 && c < 1.0 / cc.smoothness,
        multi_block_stepsize_ok: max_block_norm.map(|s| {
            c > 0.0
                && c <= 1.0
                    / (prob.objective.lipschitz()
                        + params.prox_weight
                        + params.penalty_weight * s * s)
        }),
    }
}

/// Full iterate: primal point, dual multipliers, proximal anchor, counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub t: u64,
}

impl IterState {
    /// Projection of the origin as primal point and anchor, zero duals.
    pub fn start(prob: &Problem) -> Self {
        Self::from_point(vec![0.0; prob.dim()], prob)
    }

    /// Projects `x` into the box, anchors z there, zero duals.
    pub fn from_point(x: Vec<f64>, prob: &Problem) -> Self {
        let x = auglag::project_box(&x, &prob.bounds);
        IterState { z: x.clone(), x, y: vec![0.0; prob.num_constraints()], t: 0 }
    }

    fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).chain(&self.z).all(|v| v.is_finite())
    }
}

/// One sampled trace row: state metrics at iteration t plus the step
/// leaving it. On the final row no step was taken and the step fields are
/// zero. `grad_evals` counts objective gradient evaluations consumed by the
/// algorithm to reach the state (diagnostics are not billed).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: u64,
    pub f_val: f64,
    pub feas: f64,
    pub step_x: f64,
    pub step_z: f64,
    pub prox_gap: f64,
    pub grad_evals: u64,
    pub potential: Option<f64>,
    pub inner_feas: Option<f64>,
}

pub const TRACE_HEADER: &str = "t,f,feas,step_x,step_z,prox_gap,grad_evals,potential,inner_feas";

/// Writes records in the fixed nine-column schema; unset optionals become
/// empty cells. Plain decimal formatting keeps re-runs byte-identical.
pub fn write_trace_csv<W: std::io::Write>(records: &[TraceRecord], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in records {
        let potential = r.potential.map(|v| v.to_string()).unwrap_or_default();
        let inner_feas = r.inner_feas.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.t, r.f_val, r.feas, r.step_x, r.step_z, r.prox_gap, r.grad_evals, potential, inner_feas
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Alm,
    ProxAlm,
    MultiBlock,
    ClassicAdmm,
}

/// When to stop before `max_iter` runs out. Feasibility is checked every
/// iteration (the residual is already in hand); the stationarity sum needs
/// an extra gradient evaluation and is checked on the trace grid only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingRule {
    MaxIterOnly,
    /// ‖x - [x - (grad f(x) + A^T y)]₊‖ + ‖Ax - b‖ <= stop_tol.
    ResidualSum,
    /// ‖Ax - b‖ <= stop_tol.
    FeasibilityBelow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterReached,
    ResidualBelowTol { at: u64 },
    FeasibilityBelowTol { at: u64 },
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: IterState,
    pub trace: Vec<TraceRecord>,
    /// Stationarity certificate from the last step pair; proximal runs only.
    pub certificate: Option<Certificate>,
    pub validity: ParamValidity,
    pub stop_reason: StopReason,
    pub grad_evals: u64,
}

fn smoothed_anchor(z: &[f64], x_next: &[f64], beta: f64) -> Vec<f64> {
    // beta = 1 must hand back x' exactly, not z + (x' - z) with its rounding.
    if beta == 1.0 {
        return x_next.to_vec();
    }
    z.iter().zip(x_next).map(|(zi, xi)| zi + beta * (xi - zi)).collect()
}

/// Shared primal kernel: dual step at the old point, then one projected
/// gradient step on K (on L when `cfg.prox_weight` is zero). Returns
/// (y', x').
fn dual_and_primal_step(
    s: &IterState,
    prob: &Problem,
    params: &SolverParams,
    cfg: &PenaltyConfig,
) -> (Vec<f64>, Vec<f64>) {
    let m = prob.num_constraints();
    let mut res = vec![0.0; m];
    prob.constraints.residual_into(&s.x, &mut res);
    let mut y1 = s.y.clone();
    linalg::axpy(params.dual_stepsize, &res, &mut y1);

    let mut w = vec![0.0; m];
    let mut g = vec![0.0; prob.dim()];
    auglag::grad_prox_aug_with_residual_into(&s.x, &s.z, &y1, &res, prob, cfg, &mut w, &mut g);
    let c = params.primal_stepsize;
    let x1: Vec<f64> = s
        .x
        .iter()
        .zip(&g)
        .zip(prob.bounds.lower.iter().zip(&prob.bounds.upper))
        .map(|((xi, gi), (lo, hi))| clamp(xi - c * gi, *lo, *hi))
        .collect();
    (y1, x1)
}

/// Plain inexact augmented-Lagrangian step. The anchor z is carried along
/// untouched. One gradient evaluation.
pub fn alm_iterate(s: &IterState, prob: &Problem, params: &SolverParams) -> IterState {
    let cfg = PenaltyConfig { penalty_weight: params.penalty_weight, prox_weight: 0.0 };
    let (y1, x1) = dual_and_primal_step(s, prob, params, &cfg);
    IterState { x: x1, y: y1, z: s.z.clone(), t: s.t + 1 }
}

/// Smoothed proximal step: dual first, projected gradient step on K, then
/// the anchor update z' = z + beta (x' - z). One gradient evaluation.
///
/// With p = 0 and beta = 1 the x and y sequences are bit-identical to
/// [`alm_iterate`]'s.
pub fn proximal_alm_iterate(s: &IterState, prob: &Problem, params: &SolverParams) -> IterState {
    let cfg = params.penalty_config();
    let (y1, x1) = dual_and_primal_step(s, prob, params, &cfg);
    let z1 = smoothed_anchor(&s.z, &x1, params.smoothing_factor);
    IterState { x: x1, y: y1, z: z1, t: s.t + 1 }
}

/// Gauss-Seidel multi-block variant: after the shared dual step, blocks are
/// updated in partition order, each from the gradient of K at the point
/// with all earlier blocks already moved. One gradient evaluation per
/// block. With a single block this reproduces [`proximal_alm_iterate`]
/// bit for bit.
pub fn multiblock_iterate(s: &IterState, prob: &Problem, params: &SolverParams) -> Result<IterState> {
    let partition = prob.blocks.as_ref().ok_or(Error::MissingPartition)?;
    let cfg = params.penalty_config();
    let m = prob.num_constraints();
    let n = prob.dim();
    let mut res = vec![0.0; m];
    prob.constraints.residual_into(&s.x, &mut res);
    let mut y1 = s.y.clone();
    linalg::axpy(params.dual_stepsize, &res, &mut y1);

    let c = params.primal_stepsize;
    let mut x = s.x.clone();
    let mut w = vec![0.0; m];
    let mut g = vec![0.0; n];
    for block in partition.blocks() {
        prob.constraints.residual_into(&x, &mut res);
        auglag::grad_prox_aug_with_residual_into(&x, &s.z, &y1, &res, prob, &cfg, &mut w, &mut g);
        for &i in block {
            x[i] = clamp(x[i] - c * g[i], prob.bounds.lower[i], prob.bounds.upper[i]);
        }
    }
    let z1 = smoothed_anchor(&s.z, &x, params.smoothing_factor);
    Ok(IterState { x, y: y1, z: z1, t: s.t + 1 })
}

/// Classic two-block ADMM baseline. Each block subproblem
/// min over x_j in its box of L(x_j, other block; y) is solved by projected
/// gradient with stepsize 1/(L + G ‖A_j‖₂²) until the in-block step is at
/// most `inner_tol`, then the dual moves last. Returns the new state and
/// the number of gradient evaluations spent in the inner loops. The anchor
/// z plays no role and is carried through unchanged.
pub fn classic_admm_iterate(
    s: &IterState,
    prob: &Problem,
    params: &SolverParams,
    inner_tol: f64,
) -> Result<(IterState, u64)> {
    let partition = prob.blocks.as_ref().ok_or(Error::MissingPartition)?;
    if partition.len() != 2 {
        return Err(Error::InvalidPartition(format!(
            "classic ADMM needs exactly two blocks, got {}",
            partition.len()
        )));
    }
    let cfg = PenaltyConfig { penalty_weight: params.penalty_weight, prox_weight: 0.0 };
    let m = prob.num_constraints();
    let n = prob.dim();
    let mut x = s.x.clone();
    let mut res = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mut g = vec![0.0; n];
    let mut evals = 0u64;
    for block in partition.blocks() {
        let block_norm = auglag::spectral_norm(&prob.constraints.a.select_columns(block));
        let step = 1.0
            / (prob.objective.lipschitz() + params.penalty_weight * block_norm * block_norm);
        let mut iters = 0u64;
        loop {
            prob.constraints.residual_into(&x, &mut res);
            auglag::grad_prox_aug_with_residual_into(&x, &x, &s.y, &res, prob, &cfg, &mut w, &mut g);
            evals += 1;
            let mut moved_sq = 0.0;
            for &i in block {
                let next = clamp(x[i] - step * g[i], prob.bounds.lower[i], prob.bounds.upper[i]);
                moved_sq += (x[i] - next) * (x[i] - next);
                x[i] = next;
            }
            iters += 1;
            if moved_sq.sqrt() <= inner_tol {
                break;
            }
            if iters >= CLASSIC_INNER_MAX {
                return Err(Error::InnerBudgetExhausted {
                    iters,
                    residual: moved_sq.sqrt(),
                    tol: inner_tol,
                });
            }
        }
    }
    prob.constraints.residual_into(&x, &mut res);
    let mut y1 = s.y.clone();
    linalg::axpy(params.dual_stepsize, &res, &mut y1);
    Ok((IterState { x, y: y1, z: s.z.clone(), t: s.t + 1 }, evals))
}

/// Runs `algo` from `init` until `max_iter` or the stopping rule fires.
///
/// The trace is sampled every `record_every` iterations plus the final
/// state. Non-finite iterates abort with the iteration named; so does a
/// dual norm beyond [`DUAL_NORM_LIMIT`]. `max_iter = 0` returns the initial
/// state and an empty trace. For [`Algorithm::ClassicAdmm`] the inner
/// tolerance is `stop_tol / 100`.
pub fn run(
    prob: &Problem,
    params: &SolverParams,
    algo: Algorithm,
    init: IterState,
    stop: StoppingRule,
) -> Result<RunOutput> {
    run_with_samples(prob, params, algo, init, stop, 0).map(|(out, _)| out)
}

/// [`run`], additionally collecting consecutive state pairs every
/// `sample_every` iterations (0 collects none) for the audit machinery.
pub fn run_with_samples(
    prob: &Problem,
    params: &SolverParams,
    algo: Algorithm,
    init: IterState,
    stop: StoppingRule,
    sample_every: u64,
) -> Result<(RunOutput, Vec<(IterState, IterState)>)> {
    let validity = check_params(prob, params);
    let record_every = params.record_every.max(1);
    let m = prob.num_constraints();
    let mut res = vec![0.0; m];
    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut samples: Vec<(IterState, IterState)> = Vec::new();
    let mut state = init;
    let mut prev: Option<IterState> = None;
    let mut grad_evals = 0u64;
    let mut stop_reason = StopReason::MaxIterReached;

    if params.max_iter == 0 {
        return Ok((
            RunOutput {
                final_state: state,
                trace,
                certificate: None,
                validity,
                stop_reason,
                grad_evals,
            },
            samples,
        ));
    }

    let mut steps = 0u64;
    while steps < params.max_iter {
        if !state.is_finite() {
            return Err(Error::NonFinite { iter: state.t });
        }
        let y_norm = linalg::norm2(&state.y);
        if y_norm > DUAL_NORM_LIMIT {
            return Err(Error::DualDiverged { iter: state.t, norm: y_norm, limit: DUAL_NORM_LIMIT });
        }
        prob.constraints.residual_into(&state.x, &mut res);
        let feas = linalg::norm2(&res);
        if !feas.is_finite() {
            return Err(Error::NonFinite { iter: state.t });
        }
        let on_grid = steps % record_every == 0;
        match stop {
            StoppingRule::MaxIterOnly => {}
            StoppingRule::FeasibilityBelow => {
                if feas <= params.stop_tol {
                    stop_reason = StopReason::FeasibilityBelowTol { at: state.t };
                    break;
                }
            }
            StoppingRule::ResidualSum => {
                if on_grid {
                    let (opt_gap, fe) = diagnostics::stationarity_residual(&state.x, &state.y, prob);
                    if opt_gap + fe <= params.stop_tol {
                        stop_reason = StopReason::ResidualBelowTol { at: state.t };
                        break;
                    }
                }
            }
        }
        let evals_at_state = grad_evals;
        let next = match algo {
            Algorithm::Alm => {
                grad_evals += 1;
                alm_iterate(&state, prob, params)
            }
            Algorithm::ProxAlm => {
                grad_evals += 1;
                proximal_alm_iterate(&state, prob, params)
            }
            Algorithm::MultiBlock => {
                grad_evals += prob.blocks.as_ref().map_or(0, |p| p.len() as u64);
                multiblock_iterate(&state, prob, params)?
            }
            Algorithm::ClassicAdmm => {
                let (next, evals) =
                    classic_admm_iterate(&state, prob, params, params.stop_tol / 100.0)?;
                grad_evals += evals;
                next
            }
        };
        if on_grid {
            trace.push(TraceRecord {
                t: state.t,
                f_val: prob.objective.eval(&state.x),
                feas,
                step_x: linalg::dist2(&state.x, &next.x),
                step_z: linalg::dist2(&state.z, &next.z),
                prox_gap: linalg::dist2(&next.x, &state.z),
                grad_evals: evals_at_state,
                potential: None,
                inner_feas: None,
            });
        }
        if sample_every > 0 && steps % sample_every == 0 {
            samples.push((state.clone(), next.clone()));
        }
        prev = Some(std::mem::replace(&mut state, next));
        steps += 1;
    }

    if !state.is_finite() {
        return Err(Error::NonFinite { iter: state.t });
    }
    prob.constraints.residual_into(&state.x, &mut res);
    let final_feas = linalg::norm2(&res);
    if trace.last().map_or(true, |r| r.t != state.t) {
        trace.push(TraceRecord {
            t: state.t,
            f_val: prob.objective.eval(&state.x),
            feas: final_feas,
            step_x: 0.0,
            step_z: 0.0,
            prox_gap: 0.0,
            grad_evals,
            potential: None,
            inner_feas: None,
        });
    }
    let certificate = match (algo, &prev) {
        (Algorithm::ProxAlm, Some(p)) => {
            Some(diagnostics::epsilon_certificate(p, &state, prob, params))
        }
        _ => None,
    };
    Ok((
        RunOutput { final_state: state, trace, certificate, validity, stop_reason, grad_evals },
        samples,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_quadratic_problem;

    fn line_problem() -> Problem {
        make_quadratic_problem(
            &[vec![2.0]],
            vec![0.0],
            &[vec![1.0]],
            vec![0.5],
            vec![0.0],
            vec![1.0],
            None,
        )
        .unwrap()
    }

    fn line_params() -> SolverParams {
        SolverParams {
            penalty_weight: 1.0,
            dual_stepsize: 0.5,
            smoothing_factor: 0.5,
            primal_stepsize: 0.1,
            prox_weight: 1.0,
            max_iter: 100,
            stop_tol: 1e-10,
            record_every: 10,
        }
    }

    #[test]
    fn one_proximal_step_by_hand() {
        let prob = line_problem();
        let params = line_params();
        let s = IterState::start(&prob);
        let next = proximal_alm_iterate(&s, &prob, &params);
        // res = -0.5, y' = -0.25, g = 0 + (y' + 1(-0.5)) + 0 = -0.75,
        // x' = clamp(0 + 0.075) = 0.075, z' = 0.5 * 0.075.
        assert!((next.y[0] + 0.25).abs() < 1e-15);
        assert!((next.x[0] - 0.075).abs() < 1e-15);
        assert!((next.z[0] - 0.0375).abs() < 1e-15);
        assert_eq!(next.t, 1);
    }

    #[test]
    fn plain_step_leaves_anchor_alone() {
        let prob = line_problem();
        let params = line_params();
        let mut s = IterState::start(&prob);
        s.z = vec![0.7];
        let next = alm_iterate(&s, &prob, &params);
        assert_eq!(next.z, vec![0.7]);
    }

    #[test]
    fn reductions_are_bitwise() {
        let prob_plain = line_problem();
        let mut prob_blocked = line_problem();
        prob_blocked.blocks =
            Some(crate::model::BlockPartition::new(vec![vec![0]], 1).unwrap());
        let mut params = line_params();

        // Single block versus proximal step.
        let mut a = IterState::start(&prob_blocked);
        let mut b = IterState::start(&prob_plain);
        for _ in 0..10 {
            a = multiblock_iterate(&a, &prob_blocked, &params).unwrap();
            b = proximal_alm_iterate(&b, &prob_plain, &params);
            assert_eq!(a.x[0].to_bits(), b.x[0].to_bits());
            assert_eq!(a.y[0].to_bits(), b.y[0].to_bits());
            assert_eq!(a.z[0].to_bits(), b.z[0].to_bits());
        }

        // p = 0, beta = 1 versus the plain method, on x and y.
        params.prox_weight = 0.0;
        params.smoothing_factor = 1.0;
        let mut a = IterState::start(&prob_plain);
        let mut b = IterState::start(&prob_plain);
        for _ in 0..10 {
            a = proximal_alm_iterate(&a, &prob_plain, &params);
            b = alm_iterate(&b, &prob_plain, &params);
            assert_eq!(a.x[0].to_bits(), b.x[0].to_bits());
            assert_eq!(a.y[0].to_bits(), b.y[0].to_bits());
        }
    }

    #[test]
    fn zero_budget_returns_init_and_empty_trace() {
        let prob = line_problem();
        let mut params = line_params();
        params.max_iter = 0;
        let init = IterState::start(&prob);
        let out = run(&prob, &params, Algorithm::ProxAlm, init.clone(), StoppingRule::MaxIterOnly)
            .unwrap();
        assert_eq!(out.final_state, init);
        assert!(out.trace.is_empty());
        assert_eq!(out.grad_evals, 0);
    }

    #[test]
    fn trace_grid_includes_final_row() {
        let prob = line_problem();
        let mut params = line_params();
        params.max_iter = 10;
        params.record_every = 4;
        let out = run(
            &prob,
            &params,
            Algorithm::ProxAlm,
            IterState::start(&prob),
            StoppingRule::MaxIterOnly,
        )
        .unwrap();
        let ts: Vec<u64> = out.trace.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0, 4, 8, 10]);
        let last = out.trace.last().unwrap();
        assert_eq!(last.step_x, 0.0);
        assert_eq!(last.grad_evals, 10);
        let evals: Vec<u64> = out.trace.iter().map(|r| r.grad_evals).collect();
        assert!(evals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn feasible_start_stops_immediately_under_feasibility_rule() {
        let prob = line_problem();
        let mut params = line_params();
        params.stop_tol = 1e-9;
        let init = IterState::from_point(vec![0.5], &prob);
        let out =
            run(&prob, &params, Algorithm::ProxAlm, init, StoppingRule::FeasibilityBelow).unwrap();
        assert_eq!(out.stop_reason, StopReason::FeasibilityBelowTol { at: 0 });
        assert_eq!(out.final_state.t, 0);
    }

    #[test]
    fn dual_blowup_is_an_error() {
        let prob = line_problem();
        let mut params = line_params();
        // A frozen primal (c = 0) with a huge dual step leaves the
        // residual at -0.5 forever, so y marches off linearly.
        params.dual_stepsize = 1e9;
        params.primal_stepsize = 0.0;
        params.max_iter = 100_000;
        let err = run(
            &prob,
            &params,
            Algorithm::ProxAlm,
            IterState::start(&prob),
            StoppingRule::MaxIterOnly,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::DualDiverged { .. } | Error::NonFinite { .. }),
            "{err}"
        );
    }

    #[test]
    fn csv_bytes_are_frozen() {
        let records = vec![
            TraceRecord {
                t: 0,
                f_val: 1.5,
                feas: 0.25,
                step_x: 0.5,
                step_z: 0.125,
                prox_gap: 1.0,
                grad_evals: 0,
                potential: None,
                inner_feas: None,
            },
            TraceRecord {
                t: 10,
                f_val: -2.0,
                feas: 0.0,
                step_x: 0.0,
                step_z: 0.0,
                prox_gap: 0.0,
                grad_evals: 10,
                potential: Some(3.5),
                inner_feas: Some(0.5),
            },
        ];
        let mut buf = Vec::new();
        write_trace_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t,f,feas,step_x,step_z,prox_gap,grad_evals,potential,inner_feas\n\
             0,1.5,0.25,0.5,0.125,1,0,,\n\
             10,-2,0,0,0,0,10,3.5,0.5\n"
        );
    }

    #[test]
    fn classic_admm_requires_two_blocks() {
        let prob = line_problem();
        let err = classic_admm_iterate(&IterState::start(&prob), &prob, &line_params(), 1e-8)
            .unwrap_err();
        assert!(matches!(err, Error::MissingPartition));

        let mut prob = line_problem();
        prob.blocks = Some(crate::model::BlockPartition::new(vec![vec![0]], 1).unwrap());
        let err = classic_admm_iterate(&IterState::start(&prob), &prob, &line_params(), 1e-8)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidPartition(_)));
    }
}
