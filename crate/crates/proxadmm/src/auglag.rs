//! Augmented-Lagrangian quantities.
//!
//! For a problem `min f(x) s.t. Ax = b, x in [l, u]` and penalty weight G,
//! the augmented Lagrangian is
//!
//! ```text
//! L(x; y) = f(x) + y^T (Ax - b) + (G/2) ‖Ax - b‖²,
//! ```
//!
//! and its proximal extension anchored at z with prox weight p is
//!
//! ```text
//! K(x, z; y) = L(x; y) + (p/2) ‖x - z‖².
//! ```
//!
//! In x, K is L_K-smooth and gamma_K-strongly convex with
//! L_K = L + p + G sigma², gamma_K = p + gamma, where sigma = ‖A‖₂ and
//! (L, gamma) are the objective's curvature constants. Those two moduli
//! drive every stepsize bound and error-bound constant downstream.

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::model::{BoxSet, Problem};

pub use crate::linalg::{spectral_norm, symmetric_eig_bounds};

/// Penalty weight on ‖Ax - b‖² and proximal weight on ‖x - z‖².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub penalty_weight: f64,
    pub prox_weight: f64,
}

/// Smoothness and strong-convexity moduli of K(., z; y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureConstants {
    /// L_K = L + p + G sigma².
    pub smoothness: f64,
    /// gamma_K = p + gamma; positive only when p > -gamma.
    pub strong_convexity: f64,
}

impl CurvatureConstants {
    pub fn compute(prob: &Problem, cfg: &PenaltyConfig) -> Self {
        Self::with_sigma(prob, cfg, spectral_norm(&prob.constraints.a))
    }

    /// Same as [`CurvatureConstants::compute`] with ‖A‖₂ already known.
    pub fn with_sigma(prob: &Problem, cfg: &PenaltyConfig, sigma: f64) -> Self {
        CurvatureConstants {
            smoothness: prob.objective.lipschitz()
                + cfg.prox_weight
                + cfg.penalty_weight * sigma * sigma,
            strong_convexity: cfg.prox_weight + prob.objective.weak_convexity(),
        }
    }
}

/// Euclidean projection onto the box, coordinate-wise clamping.
pub fn project_box(x: &[f64], bounds: &BoxSet) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    project_box_into(x, bounds, &mut out);
    out
}

pub fn project_box_into(x: &[f64], bounds: &BoxSet, out: &mut [f64]) {
    debug_assert_eq!(x.len(), bounds.dim());
    for ((oi, xi), (lo, hi)) in
        out.iter_mut().zip(x).zip(bounds.lower.iter().zip(&bounds.upper))
    {
        *oi = clamp(*xi, *lo, *hi);
    }
}

#[inline]
pub(crate) fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

/// L(x; y) = f(x) + y^T (Ax - b) + (G/2) ‖Ax - b‖².
pub fn aug_lagrangian(x: &[f64], y: &[f64], prob: &Problem, penalty_weight: f64) -> f64 {
    let mut res = vec![0.0; prob.num_constraints()];
    prob.constraints.residual_into(x, &mut res);
    prob.objective.eval(x)
        + linalg::dot(y, &res)
        + 0.5 * penalty_weight * linalg::dot(&res, &res)
}

/// K(x, z; y) = L(x; y) + (p/2) ‖x - z‖².
pub fn prox_aug_value(x: &[f64], z: &[f64], y: &[f64], prob: &Problem, cfg: &PenaltyConfig) -> f64 {
    let d = linalg::dist2(x, z);
    aug_lagrangian(x, y, prob, cfg.penalty_weight) + 0.5 * cfg.prox_weight * d * d
}

/// Gradient of K in x, with the constraint residual at x already computed:
///
/// ```text
/// grad_x K = grad f(x) + A^T (y + G (Ax - b)) + p (x - z).
/// ```
///
/// `w` is scratch of length m. The proximal term is skipped entirely when
/// p = 0, so the p = 0 gradient is bit-identical to the plain augmented
/// Lagrangian's; the solver reduction identities rely on that.
pub fn grad_prox_aug_with_residual_into(
    x: &[f64],
    z: &[f64],
    y: &[f64],
    res: &[f64],
    prob: &Problem,
    cfg: &PenaltyConfig,
    w: &mut [f64],
    out: &mut [f64],
) {
    for ((wi, yi), ri) in w.iter_mut().zip(y).zip(res) {
        *wi = yi + cfg.penalty_weight * ri;
    }
    prob.objective.grad_into(x, out);
    prob.constraints.a.tr_matvec_acc_into(w, out);
    if cfg.prox_weight != 0.0 {
        for ((oi, xi), zi) in out.iter_mut().zip(x).zip(z) {
            *oi += cfg.prox_weight * (xi - zi);
        }
    }
}

/// Allocating convenience wrapper around
/// [`grad_prox_aug_with_residual_into`].
pub fn grad_prox_aug(x: &[f64], z: &[f64], y: &[f64], prob: &Problem, cfg: &PenaltyConfig) -> Vec<f64> {
    let m = prob.num_constraints();
    let mut res = vec![0.0; m];
    prob.constraints.residual_into(x, &mut res);
    let mut w = vec![0.0; m];
    let mut out = vec![0.0; prob.dim()];
    grad_prox_aug_with_residual_into(x, z, y, &res, prob, cfg, &mut w, &mut out);
    out
}

/// Gradient of the plain augmented Lagrangian, the p = 0 case.
pub fn grad_aug(x: &[f64], y: &[f64], prob: &Problem, penalty_weight: f64) -> Vec<f64> {
    grad_prox_aug(x, x, y, prob, &PenaltyConfig { penalty_weight, prox_weight: 0.0 })
}

/// K(x, z; y) - K(x', z'; y'), computed through per-term difference
/// identities instead of subtracting two full evaluations:
///
/// ```text
/// f(x') - f(x)      = 0.5 dx^T Q (x + x') + r^T dx
/// y'^T s' - y^T s   = dy^T s + y'^T (A dx)         (s = Ax - b)
/// ‖s'‖² - ‖s‖²      = (A dx)^T (s + s')
/// ‖w'‖² - ‖w‖²      = (w' - w)^T (w' + w)          (w = x - z)
/// ```
///
/// so every term's rounding error scales with the step, not with |K|.
/// Descent audits with tight absolute slack stay meaningful this way even
/// when K itself is enormous; a direct subtraction of two O(1e7) values
/// carries O(1e-9) noise on its own. Non-quadratic objectives fall back
/// to direct subtraction of the two f values (only the f term degrades).
#[allow(clippy::too_many_arguments)]
pub fn prox_aug_decrease(
    prev_x: &[f64],
    prev_z: &[f64],
    prev_y: &[f64],
    next_x: &[f64],
    next_z: &[f64],
    next_y: &[f64],
    prob: &Problem,
    cfg: &PenaltyConfig,
) -> f64 {
    let n = prob.dim();
    let m = prob.num_constraints();
    let dx: Vec<f64> = next_x.iter().zip(prev_x).map(|(a, b)| a - b).collect();

    let f_diff = match prob.objective.as_quadratic() {
        Some(quad) => {
            let sx: Vec<f64> = next_x.iter().zip(prev_x).map(|(a, b)| a + b).collect();
            let qs = quad.quadratic_term().matvec(&sx);
            0.5 * linalg::dot(&dx, &qs) + linalg::dot(quad.linear_term(), &dx)
        }
        None => prob.objective.eval(next_x) - prob.objective.eval(prev_x),
    };

    let mut res_prev = vec![0.0; m];
    let mut res_next = vec![0.0; m];
    prob.constraints.residual_into(prev_x, &mut res_prev);
    prob.constraints.residual_into(next_x, &mut res_next);
    let a_dx = prob.constraints.a.matvec(&dx);

    let dy: Vec<f64> = next_y.iter().zip(prev_y).map(|(a, b)| a - b).collect();
    let y_diff = linalg::dot(&dy, &res_prev) + linalg::dot(next_y, &a_dx);

    let sum_res: Vec<f64> = res_prev.iter().zip(&res_next).map(|(a, b)| a + b).collect();
    let res_sq_diff = linalg::dot(&a_dx, &sum_res);

    let mut w_sq_diff = 0.0;
    for i in 0..n {
        let w_prev = prev_x[i] - prev_z[i];
        let w_next = next_x[i] - next_z[i];
        w_sq_diff += (w_next - w_prev) * (w_next + w_prev);
    }

    -(f_diff
        + y_diff
        + 0.5 * cfg.penalty_weight * res_sq_diff
        + 0.5 * cfg.prox_weight * w_sq_diff)
}
