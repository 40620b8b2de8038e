//! Independent numerical oracles for the integration tests.
//!
//! Everything here is deliberately built on different algorithms than the
//! library uses (Jacobi rotations instead of power iteration, dense
//! elimination and explicit enumeration instead of iterative solves), so
//! agreement between the two routes is evidence rather than tautology.
//! Plain `Vec<Vec<f64>>` matrices keep the oracles free of library types.

#![allow(dead_code)]

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method,
/// ascending.
pub fn jacobi_eigenvalues(sym: &[Vec<f64>]) -> Vec<f64> {
    let n = sym.len();
    let mut a: Vec<Vec<f64>> = sym.to_vec();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
        .max(1.0);
    for _sweep in 0..300 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Singular values of a rectangular matrix, descending, via Jacobi on
/// A^T A.
pub fn singular_values(a: &[Vec<f64>]) -> Vec<f64> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut gram = vec![vec![0.0; cols]; cols];
    for i in 0..cols {
        for j in 0..cols {
            let mut acc = 0.0;
            for row in a.iter().take(rows) {
                acc += row[i] * row[j];
            }
            gram[i][j] = acc;
        }
    }
    let mut sv: Vec<f64> = jacobi_eigenvalues(&gram)
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    sv.sort_by(|x, y| f64::total_cmp(y, x));
    sv
}

/// Solves a square linear system by Gaussian elimination with partial
/// pivoting. None when a pivot degenerates.
pub fn solve_linear(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
        .max(1.0);
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&i, &j| f64::total_cmp(&m[i][col].abs(), &m[j][col].abs()))?;
        if m[pivot_row][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, pivot_row);
        for row in (col + 1)..n {
            let factor = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = m[row][n];
        for k in (row + 1)..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

/// A feasible candidate produced by active-set enumeration. `y` is the
/// multiplier determined by the restricted system when the pattern had at
/// least one free coordinate.
#[derive(Debug, Clone)]
pub struct CandidatePoint {
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BoundState {
    Lower,
    Upper,
    Free,
}

fn qp_value(q: &[Vec<f64>], r: &[f64], x: &[f64]) -> f64 {
    let n = r.len();
    let mut v = 0.0;
    for i in 0..n {
        let mut qi = 0.0;
        for j in 0..n {
            qi += q[i][j] * x[j];
        }
        v += 0.5 * x[i] * qi + r[i] * x[i];
    }
    v
}

/// All box-feasible solutions of the per-pattern restricted systems for
/// min 0.5 x^T Q x + r^T x over {Ax = b} intersected with the box: each
/// coordinate is pinned at a bound or left free, free coordinates must be
/// stationary given a multiplier y, and the constraints close the system.
/// Corner patterns (nothing free) qualify only if they satisfy Ax = b to
/// `tol` on their own. The global minimizer always appears among the
/// candidates when the restricted systems are nonsingular, so the minimum
/// value over the returned list is the exact global minimum.
pub fn enumerate_restricted_candidates(
    q: &[Vec<f64>],
    r: &[f64],
    a: &[Vec<f64>],
    b: &[f64],
    lower: &[f64],
    upper: &[f64],
    tol: f64,
) -> Vec<CandidatePoint> {
    let n = r.len();
    let m = b.len();
    let mut out = Vec::new();
    let patterns = 3usize.pow(n as u32);
    for code in 0..patterns {
        let mut states = Vec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            states.push(match c % 3 {
                0 => BoundState::Lower,
                1 => BoundState::Upper,
                _ => BoundState::Free,
            });
            c /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| states[i] == BoundState::Free).collect();
        let k = free.len();
        let mut x: Vec<f64> = (0..n)
            .map(|i| match states[i] {
                BoundState::Lower => lower[i],
                BoundState::Upper => upper[i],
                BoundState::Free => 0.0,
            })
            .collect();
        if k == 0 {
            let feasible = (0..m).all(|i| {
                let ax: f64 = (0..n).map(|j| a[i][j] * x[j]).sum();
                (ax - b[i]).abs() <= tol
            });
            if feasible {
                out.push(CandidatePoint { y: None, value: qp_value(q, r, &x), x });
            }
            continue;
        }
        // Unknowns [x_F, y]; rows: stationarity on F, then constraints.
        let dim = k + m;
        let mut sys = vec![vec![0.0; dim]; dim];
        let mut rhs = vec![0.0; dim];
        for (row, &i) in free.iter().enumerate() {
            for (col, &j) in free.iter().enumerate() {
                sys[row][col] = q[i][j];
            }
            for l in 0..m {
                sys[row][k + l] = a[l][i];
            }
            let mut fixed = 0.0;
            for j in 0..n {
                if states[j] != BoundState::Free {
                    fixed += q[i][j] * x[j];
                }
            }
            rhs[row] = -r[i] - fixed;
        }
        for l in 0..m {
            for (col, &j) in free.iter().enumerate() {
                sys[k + l][col] = a[l][j];
            }
            let mut fixed = 0.0;
            for j in 0..n {
                if states[j] != BoundState::Free {
                    fixed += a[l][j] * x[j];
                }
            }
            rhs[k + l] = b[l] - fixed;
        }
        let Some(sol) = solve_linear(&sys, &rhs) else { continue };
        for (col, &i) in free.iter().enumerate() {
            x[i] = sol[col];
        }
        let in_box = free
            .iter()
            .all(|&i| x[i] >= lower[i] - tol && x[i] <= upper[i] + tol);
        if !in_box {
            continue;
        }
        let y = sol[k..].to_vec();
        out.push(CandidatePoint { y: Some(y), value: qp_value(q, r, &x), x });
    }
    out
}

/// The exact global minimizer over {Ax = b} intersected with the box, by
/// value comparison across the enumeration.
pub fn global_minimum(
    q: &[Vec<f64>],
    r: &[f64],
    a: &[Vec<f64>],
    b: &[f64],
    lower: &[f64],
    upper: &[f64],
    tol: f64,
) -> Option<CandidatePoint> {
    enumerate_restricted_candidates(q, r, a, b, lower, upper, tol)
        .into_iter()
        .min_by(|p, q| f64::total_cmp(&p.value, &q.value))
}

/// Candidates that are genuine stationary points: the multiplier sign
/// conditions hold at active bounds. Determined multipliers are checked
/// directly; corner patterns (only supported for m = 1) search the
/// one-dimensional multiplier interval.
pub fn enumerate_stationary_points(
    q: &[Vec<f64>],
    r: &[f64],
    a: &[Vec<f64>],
    b: &[f64],
    lower: &[f64],
    upper: &[f64],
    tol: f64,
) -> Vec<CandidatePoint> {
    let n = r.len();
    let m = b.len();
    let grad = |x: &[f64], y: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut g = r[i];
                for j in 0..n {
                    g += q[i][j] * x[j];
                }
                for l in 0..m {
                    g += a[l][i] * y[l];
                }
                g
            })
            .collect()
    };
    let signs_ok = |x: &[f64], g: &[f64]| -> bool {
        (0..n).all(|i| {
            let at_lower = x[i] - lower[i] <= tol;
            let at_upper = upper[i] - x[i] <= tol;
            if at_lower && g[i] < -tol {
                return false;
            }
            if at_upper && g[i] > tol {
                return false;
            }
            if !at_lower && !at_upper && g[i].abs() > tol {
                return false;
            }
            true
        })
    };
    enumerate_restricted_candidates(q, r, a, b, lower, upper, tol)
        .into_iter()
        .filter_map(|mut cand| {
            match &cand.y {
                Some(y) => {
                    let g = grad(&cand.x, y);
                    signs_ok(&cand.x, &g).then_some(cand)
                }
                None => {
                    assert_eq!(m, 1, "corner stationarity search implemented for m = 1 only");
                    // g_i(y) = c_i + a_i y must respect the sign pattern;
                    // intersect the per-coordinate intervals in y.
                    let c = grad(&cand.x, &[0.0]);
                    let mut y_lo = f64::NEG_INFINITY;
                    let mut y_hi = f64::INFINITY;
                    for i in 0..n {
                        let at_lower = cand.x[i] - lower[i] <= tol;
                        let coeff = a[0][i];
                        // At a lower bound the gradient must be >= -tol,
                        // at an upper bound <= tol.
                        let (want_ge, bound) = if at_lower { (true, -tol) } else { (false, tol) };
                        if coeff.abs() <= 1e-300 {
                            if (want_ge && c[i] < bound) || (!want_ge && c[i] > bound) {
                                return None;
                            }
                            continue;
                        }
                        let cross = (bound - c[i]) / coeff;
                        let ge_after_cross = coeff > 0.0;
                        if want_ge == ge_after_cross {
                            y_lo = y_lo.max(cross);
                        } else {
                            y_hi = y_hi.min(cross);
                        }
                    }
                    if y_lo > y_hi {
                        return None;
                    }
                    let y = if y_lo.is_finite() {
                        y_lo
                    } else if y_hi.is_finite() {
                        y_hi
                    } else {
                        0.0
                    };
                    cand.y = Some(vec![y]);
                    Some(cand)
                }
            }
        })
        .collect()
}
