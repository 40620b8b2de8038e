//! Problem data: objectives, equality constraints, box bounds, partitions.
//!
//! Construction is deliberately permissive. Structural impossibilities
//! (ragged matrices, asymmetric quadratic terms, zero constraint rows) fail
//! at build time, while descriptive defects (degenerate boxes, non-finite
//! entries, inconsistent dimensions assembled by hand) are reported by
//! [`validate_problem`] as a list of violations so harnesses can present
//! them instead of dying on the first one.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, Matrix};
use crate::{Error, Result};

/// Box constraint set, one closed interval per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSet {
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Self {
        BoxSet { lower: vec![lower; dim], upper: vec![upper; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(xi, (lo, hi))| *xi >= lo - tol && *xi <= hi + tol)
    }
}

/// Equality constraints A x = b with dense A.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraints {
    pub a: Matrix,
    pub b: Vec<f64>,
}

impl LinearConstraints {
    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    /// out = A x - b.
    pub fn residual_into(&self, x: &[f64], out: &mut [f64]) {
        self.a.matvec_into(x, out);
        for (oi, bi) in out.iter_mut().zip(&self.b) {
            *oi -= bi;
        }
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        let mut r = vec![0.0; self.rows()];
        self.residual_into(x, &mut r);
        linalg::norm2(&r)
    }
}

/// Quadratic objective f(x) = x^T Q x / 2 + r^T x with symmetric Q.
///
/// The gradient Lipschitz constant (largest eigenvalue magnitude of Q) and
/// the weak-convexity constant (smallest eigenvalue of Q) are derived at
/// construction, so the fields stay private to keep them consistent.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObjective {
    q: Matrix,
    r: Vec<f64>,
    lipschitz: f64,
    weak_convexity: f64,
}

impl QuadraticObjective {
    /// Requires Q square and symmetric to 1e-12 relative to its largest
    /// entry, and r matching its dimension.
    pub fn new(q: Matrix, r: Vec<f64>) -> Result<Self> {
        if q.rows() != q.cols() {
            return Err(Error::DimensionMismatch(format!(
                "quadratic term must be square, got {}x{}",
                q.rows(),
                q.cols()
            )));
        }
        if r.len() != q.rows() {
            return Err(Error::DimensionMismatch(format!(
                "linear term has length {}, quadratic term is {}x{}",
                r.len(),
                q.rows(),
                q.cols()
            )));
        }
        let (lo, hi) = linalg::symmetric_eig_bounds(&q)?;
        Ok(QuadraticObjective {
            q,
            r,
            lipschitz: lo.abs().max(hi.abs()),
            weak_convexity: lo,
        })
    }

    pub fn quadratic_term(&self) -> &Matrix {
        &self.q
    }

    pub fn linear_term(&self) -> &[f64] {
        &self.r
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let qx = self.q.matvec(x);
        0.5 * linalg::dot(x, &qx) + linalg::dot(&self.r, x)
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        self.q.matvec_into(x, out);
        for (oi, ri) in out.iter_mut().zip(&self.r) {
            *oi += ri;
        }
    }
}

/// Black-box objective: value and gradient callbacks plus user-supplied
/// curvature constants (the gradient Lipschitz constant L and the
/// weak-convexity constant gamma, negative for nonconvex objectives).
#[derive(Clone)]
pub struct GeneralObjective {
    pub dim: usize,
    pub eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub grad: Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
    pub lipschitz: f64,
    pub weak_convexity: f64,
}

impl fmt::Debug for GeneralObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralObjective")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("weak_convexity", &self.weak_convexity)
            .finish_non_exhaustive()
    }
}

/// Objective oracle. Quadratic problems carry their matrices (and therefore
/// serialize); general objectives are callback-backed and do not.
#[derive(Debug, Clone)]
pub enum Objective {
    Quadratic(QuadraticObjective),
    General(GeneralObjective),
}

impl Objective {
    pub fn dim(&self) -> usize {
        match self {
            Objective::Quadratic(q) => q.r.len(),
            Objective::General(g) => g.dim,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Objective::Quadratic(q) => q.eval(x),
            Objective::General(g) => (g.eval)(x),
        }
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Objective::Quadratic(q) => q.grad_into(x, out),
            Objective::General(g) => (g.grad)(x, out),
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.grad_into(x, &mut g);
        g
    }

    /// Gradient Lipschitz constant L.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Objective::Quadratic(q) => q.lipschitz,
            Objective::General(g) => g.lipschitz,
        }
    }

    /// Weak-convexity constant gamma: <grad f(x) - grad f(x'), x - x'> is
    /// at least gamma ‖x - x'‖². Negative for nonconvex objectives.
    pub fn weak_convexity(&self) -> f64 {
        match self {
            Objective::Quadratic(q) => q.weak_convexity,
            Objective::General(g) => g.weak_convexity,
        }
    }

    pub fn as_quadratic(&self) -> Option<&QuadraticObjective> {
        match self {
            Objective::Quadratic(q) => Some(q),
            Objective::General(_) => None,
        }
    }
}

/// Ordered, disjoint index blocks covering 0..n-1. Update order in the
/// multi-block solver follows the block order given here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
    dim: usize,
}

impl BlockPartition {
    pub fn new(blocks: Vec<Vec<usize>>, dim: usize) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidPartition("no blocks given".into()));
        }
        let mut seen = vec![false; dim];
        let mut total = 0usize;
        for (k, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {k} is empty")));
            }
            for &i in block {
                if i >= dim {
                    return Err(Error::InvalidPartition(format!(
                        "block {k} references coordinate {i}, dimension is {dim}"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidPartition(format!(
                        "coordinate {i} appears in more than one block"
                    )));
                }
                seen[i] = true;
                total += 1;
            }
        }
        if total != dim {
            return Err(Error::InvalidPartition(format!(
                "blocks cover {total} of {dim} coordinates"
            )));
        }
        Ok(BlockPartition { blocks, dim })
    }

    /// Contiguous halves [0, n/2) and [n/2, n); n must be even.
    pub fn halves(dim: usize) -> Result<Self> {
        if dim % 2 != 0 || dim == 0 {
            return Err(Error::InvalidPartition(format!(
                "halving needs a positive even dimension, got {dim}"
            )));
        }
        let h = dim / 2;
        BlockPartition::new(vec![(0..h).collect(), (h..dim).collect()], dim)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// A box- and equality-constrained problem instance.
#[derive(Debug, Clone)]
pub struct Problem {
    pub objective: Objective,
    pub constraints: LinearConstraints,
    pub bounds: BoxSet,
    pub blocks: Option<BlockPartition>,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.rows()
    }
}

/// One failed problem invariant, named, with a human-readable detail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub invariant: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)
    }
}

fn push(violations: &mut Vec<Violation>, invariant: &'static str, detail: String) {
    violations.push(Violation { invariant, detail });
}

/// Checks every problem invariant and returns the violations found, empty
/// when the instance is well-formed. Never panics and never errors: a broken
/// instance is data to report on.
pub fn validate_problem(prob: &Problem) -> Vec<Violation> {
    let mut v = Vec::new();
    let n = prob.dim();
    let m = prob.num_constraints();

    if m == 0 {
        push(&mut v, "constraints_nonempty", "constraint system has zero rows".into());
    }
    if prob.constraints.a.cols() != n {
        push(
            &mut v,
            "constraint_width",
            format!("A has {} columns, objective dimension is {n}", prob.constraints.a.cols()),
        );
    }
    if prob.constraints.b.len() != m {
        push(
            &mut v,
            "rhs_length",
            format!("b has length {}, A has {m} rows", prob.constraints.b.len()),
        );
    }
    if prob.bounds.lower.len() != n || prob.bounds.upper.len() != n {
        push(
            &mut v,
            "bounds_length",
            format!(
                "bounds have lengths {} and {}, objective dimension is {n}",
                prob.bounds.lower.len(),
                prob.bounds.upper.len()
            ),
        );
    }
    for (i, (lo, hi)) in prob.bounds.lower.iter().zip(&prob.bounds.upper).enumerate() {
        if !lo.is_finite() || !hi.is_finite() {
            push(&mut v, "bounds_finite", format!("coordinate {i} has bounds [{lo}, {hi}]"));
        } else if lo >= hi {
            push(&mut v, "box_nondegenerate", format!("coordinate {i} has bounds [{lo}, {hi}]"));
        }
    }
    if !prob.constraints.a.is_finite() {
        push(&mut v, "constraint_entries_finite", "A contains a non-finite entry".into());
    }
    if prob.constraints.b.iter().any(|x| !x.is_finite()) {
        push(&mut v, "rhs_entries_finite", "b contains a non-finite entry".into());
    }
    match &prob.objective {
        Objective::Quadratic(q) => {
            if !q.q.is_finite() || q.r.iter().any(|x| !x.is_finite()) {
                push(&mut v, "objective_entries_finite", "Q or r contains a non-finite entry".into());
            }
            let scale = linalg::norm_inf(q.q.data()).max(1.0);
            let asym = q.q.max_asymmetry();
            if asym > 1e-12 * scale {
                push(
                    &mut v,
                    "quadratic_symmetric",
                    format!("max |q_ij - q_ji| = {asym:.3e} exceeds {:.3e}", 1e-12 * scale),
                );
            }
        }
        Objective::General(g) => {
            if !(g.lipschitz.is_finite() && g.lipschitz > 0.0) {
                push(&mut v, "lipschitz_positive", format!("L = {}", g.lipschitz));
            }
            if !g.weak_convexity.is_finite() || g.weak_convexity > g.lipschitz {
                push(
                    &mut v,
                    "weak_convexity_sane",
                    format!("gamma = {}, L = {}", g.weak_convexity, g.lipschitz),
                );
            }
        }
    }
    if let Some(blocks) = &prob.blocks {
        if blocks.dim() != n {
            push(
                &mut v,
                "partition_dimension",
                format!("partition covers dimension {}, objective dimension is {n}", blocks.dim()),
            );
        }
    }
    v
}

/// Assembles a quadratic problem from row-major nested data, deriving the
/// curvature constants of Q along the way. Structural errors (ragged rows,
/// asymmetric Q, zero constraint rows, mismatched lengths) fail here;
/// everything else is left to [`validate_problem`].
pub fn make_quadratic_problem(
    q_rows: &[Vec<f64>],
    r: Vec<f64>,
    a_rows: &[Vec<f64>],
    b: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    blocks: Option<Vec<Vec<usize>>>,
) -> Result<Problem> {
    let q = Matrix::from_rows(q_rows)
        .ok_or_else(|| Error::Schema("quadratic term rows have unequal lengths".into()))?;
    let a = Matrix::from_rows(a_rows)
        .ok_or_else(|| Error::Schema("constraint rows have unequal lengths".into()))?;
    if a.rows() == 0 {
        return Err(Error::EmptyConstraints);
    }
    let objective = QuadraticObjective::new(q, r)?;
    let n = objective.r.len();
    if a.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "A has {} columns, objective dimension is {n}",
            a.cols()
        )));
    }
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "b has length {}, A has {} rows",
            b.len(),
            a.rows()
        )));
    }
    if lower.len() != n || upper.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "bounds have lengths {} and {}, objective dimension is {n}",
            lower.len(),
            upper.len()
        )));
    }
    let blocks = match blocks {
        Some(bs) => Some(BlockPartition::new(bs, n)?),
        None => None,
    };
    Ok(Problem {
        objective: Objective::Quadratic(objective),
        constraints: LinearConstraints { a, b },
        bounds: BoxSet { lower, upper },
        blocks,
    })
}

/// On-disk document form of a quadratic problem. Matrices are row-major
/// nested arrays, indices are 0-based, `blocks` is optional.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    r: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    blocks: Option<Vec<Vec<usize>>>,
}

/// Serializes a quadratic problem to its JSON document. General objectives
/// have no document form and are refused.
pub fn problem_to_json(prob: &Problem) -> Result<String> {
    let quad = prob.objective.as_quadratic().ok_or(Error::NotQuadratic)?;
    let doc = ProblemDoc {
        q: quad.q.to_rows(),
        r: quad.r.clone(),
        a: prob.constraints.a.to_rows(),
        b: prob.constraints.b.clone(),
        lower: prob.bounds.lower.clone(),
        upper: prob.bounds.upper.clone(),
        blocks: prob.blocks.as_ref().map(|p| p.blocks().to_vec()),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Parses the JSON document form. Unknown fields are rejected, then the
/// data passes through [`make_quadratic_problem`] so all structural checks
/// apply to documents too.
pub fn problem_from_json(text: &str) -> Result<Problem> {
    let doc: ProblemDoc =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    make_quadratic_problem(&doc.q, doc.r, &doc.a, doc.b, doc.lower, doc.upper, doc.blocks)
}
