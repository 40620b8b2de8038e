//! Dense row-major matrices and the few vector helpers the solvers need.
//!
//! Everything here is plain `f64` storage sized for desk-scale problems
//! (hundreds of rows/columns). Operations are written so repeated calls in
//! solver loops reuse caller-provided buffers instead of allocating.

/// Dense matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data. Panics if `data.len() != rows * cols`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Builds from nested rows; `None` if the rows are ragged or empty of columns.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return None;
        }
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Some(Matrix { rows: nrows, cols: ncols, data })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// y = A x.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *yi = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    /// y = A^T v, accumulated row by row so the row-major layout streams linearly.
    pub fn tr_matvec_into(&self, v: &[f64], y: &mut [f64]) {
        assert_eq!(v.len(), self.rows);
        assert_eq!(y.len(), self.cols);
        y.fill(0.0);
        for (i, vi) in v.iter().enumerate() {
            let row = self.row(i);
            for (yj, a) in y.iter_mut().zip(row) {
                *yj += vi * a;
            }
        }
    }

    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.cols];
        self.tr_matvec_into(v, &mut y);
        y
    }

    /// y += A^T v.
    pub fn tr_matvec_acc_into(&self, v: &[f64], y: &mut [f64]) {
        assert_eq!(v.len(), self.rows);
        assert_eq!(y.len(), self.cols);
        for (i, vi) in v.iter().enumerate() {
            let row = self.row(i);
            for (yj, a) in y.iter_mut().zip(row) {
                *yj += vi * a;
            }
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// A^T A, used when building Gram-style objectives.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut out = Matrix::zeros(n, n);
        for i in 0..self.rows {
            let row = self.row(i);
            for j in 0..n {
                let rj = row[j];
                if rj == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out.data[j * n + k] += rj * row[k];
                }
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// Submatrix keeping the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            let row = self.row(i);
            for (k, &j) in cols.iter().enumerate() {
                out.set(i, k, row[j]);
            }
        }
        out
    }

    /// Largest |a_ij - a_ji| over all pairs; 0 for non-square is not meaningful,
    /// callers check squareness first.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

const POWER_REL_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;

/// Deterministic dense start vector for power iterations. Seeded so repeated
/// runs are bit-identical; a random direction avoids landing exactly in the
/// orthogonal complement of the dominant eigenspace.
fn power_start(n: usize) -> Vec<f64> {
    let mut rng = crate::rng::Rng::new(0x9e37_79b9_7f4a_7c15);
    let mut v: Vec<f64> = (0..n).map(|_| rng.uniform() - 0.5).collect();
    let nrm = norm2(&v);
    if nrm == 0.0 {
        if let Some(first) = v.first_mut() {
            *first = 1.0;
        }
        return v;
    }
    for vi in &mut v {
        *vi /= nrm;
    }
    v
}

/// Dominant eigenvalue of a positive semidefinite operator by power
/// iteration with Rayleigh-quotient estimates. `scale` sets the magnitude
/// used in the relative stopping test. Best-effort after the iteration cap.
fn psd_dominant<F>(n: usize, scale: f64, mut apply: F) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    if n == 0 {
        return 0.0;
    }
    let mut v = power_start(n);
    let mut w = vec![0.0; n];
    let mut lam_old = f64::INFINITY;
    for _ in 0..POWER_MAX_ITERS {
        apply(&v, &mut w);
        let lam = dot(&v, &w);
        let wn = norm2(&w);
        if wn == 0.0 {
            return 0.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
        if (lam - lam_old).abs() <= POWER_REL_TOL * scale.max(lam.abs()).max(1e-300) {
            return lam;
        }
        lam_old = lam;
    }
    lam_old
}

/// Spectral norm ‖A‖₂ by power iteration on A^T A. Relative tolerance 1e-10,
/// at most 10000 iterations, zero matrix maps to 0.
pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    let mut ax = vec![0.0; a.rows()];
    let lam = psd_dominant(a.cols(), frobenius_sq(a), |v, out| {
        a.matvec_into(v, &mut ax);
        a.tr_matvec_into(&ax, out);
    });
    lam.max(0.0).sqrt()
}

fn frobenius_sq(a: &Matrix) -> f64 {
    a.data().iter().map(|v| v * v).sum()
}

/// Extreme eigenvalues (λ_min, λ_max) of a symmetric matrix.
///
/// Two shifted power iterations on the positive semidefinite operators
/// Q + ρI and ρI - Q with ρ = ‖Q‖₂, so the dominant direction never
/// alternates sign. Symmetry is required to 1e-12 relative to the largest
/// entry magnitude.
pub fn symmetric_eig_bounds(q: &Matrix) -> crate::Result<(f64, f64)> {
    if q.rows() != q.cols() {
        return Err(crate::Error::DimensionMismatch(format!(
            "eigenvalue bounds need a square matrix, got {}x{}",
            q.rows(),
            q.cols()
        )));
    }
    let scale = norm_inf(q.data()).max(1.0);
    let asymmetry = q.max_asymmetry();
    if asymmetry > 1e-12 * scale {
        return Err(crate::Error::AsymmetricMatrix { asymmetry, limit: 1e-12 * scale });
    }
    let n = q.rows();
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let rho = spectral_norm(q);
    if rho == 0.0 {
        return Ok((0.0, 0.0));
    }
    let hi = psd_dominant(n, 2.0 * rho, |v, out| {
        q.matvec_into(v, out);
        for (oi, vi) in out.iter_mut().zip(v) {
            *oi += rho * vi;
        }
    }) - rho;
    let lo = rho
        - psd_dominant(n, 2.0 * rho, |v, out| {
            q.matvec_into(v, out);
            for (oi, vi) in out.iter_mut().zip(v) {
                *oi = rho * vi - *oi;
            }
        });
    Ok((lo.min(hi), lo.max(hi)))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// ‖a - b‖₂ without allocating the difference.
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// y += s * x.
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_transpose_agree() {
        let a = Matrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(a.matvec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        let at = a.transpose();
        assert_eq!(at.matvec(&[1.0, 1.0]), a.tr_matvec(&[1.0, 1.0]));
    }

    #[test]
    fn gram_matches_manual_product() {
        let a = Matrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let g = a.gram();
        // [[1,3],[2,4]] * [[1,2],[3,4]] = [[10,14],[14,20]]
        assert_eq!(g.data(), &[10.0, 14.0, 14.0, 20.0]);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_none());
    }

    #[test]
    fn column_selection_keeps_order() {
        let a = Matrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let s = a.select_columns(&[2, 0]);
        assert_eq!(s.data(), &[3.0, 1.0, 6.0, 4.0]);
    }

    #[test]
    fn spectral_norm_of_diagonal_is_largest_magnitude() {
        let a = Matrix::new(3, 3, vec![2.0, 0.0, 0.0, 0.0, -5.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((spectral_norm(&a) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn spectral_norm_of_zero_matrix_is_zero() {
        assert_eq!(spectral_norm(&Matrix::zeros(4, 6)), 0.0);
    }

    #[test]
    fn eig_bounds_of_diagonal() {
        let q = Matrix::new(2, 2, vec![1.0, 0.0, 0.0, -3.0]);
        let (lo, hi) = symmetric_eig_bounds(&q).unwrap();
        assert!((lo + 3.0).abs() < 1e-8, "lo {lo}");
        assert!((hi - 1.0).abs() < 1e-8, "hi {hi}");
    }

    #[test]
    fn eig_bounds_reject_asymmetry() {
        let q = Matrix::new(2, 2, vec![1.0, 0.5, 0.0, 1.0]);
        assert!(symmetric_eig_bounds(&q).is_err());
    }

    #[test]
    fn eig_bounds_of_multiple_of_identity() {
        let q = Matrix::new(2, 2, vec![-2.0, 0.0, 0.0, -2.0]);
        let (lo, hi) = symmetric_eig_bounds(&q).unwrap();
        assert!((lo + 2.0).abs() < 1e-8);
        assert!((hi + 2.0).abs() < 1e-8);
    }
}
