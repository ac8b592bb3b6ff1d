//! Dense linear algebra helpers on top of `faer`.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Relative accuracy required of every eigendecomposition:
/// `max |A - V diag(w) V^T| < EIGEN_TOLERANCE * max |A|`.
pub const EIGEN_TOLERANCE: f64 = 1e-9;

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

impl SymEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Dense `V f(w) V^T` for a complex scalar function of the eigenvalues.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64) -> Mat<C64> {
        let n = self.dim();
        let phases: Vec<C64> = self.values.iter().map(|&w| f(w)).collect();
        let v = self.vectors.as_ref();
        let scaled_re = Mat::<f64>::from_fn(n, n, |i, k| v[(i, k)] * phases[k].re);
        let scaled_im = Mat::<f64>::from_fn(n, n, |i, k| v[(i, k)] * phases[k].im);
        let re = &scaled_re * v.transpose();
        let im = &scaled_im * v.transpose();
        Mat::from_fn(n, n, |i, j| C64::new(re[(i, j)], im[(i, j)]))
    }
}

/// Symmetric eigendecomposition with the accuracy contract enforced.
pub fn sym_eigen(a: MatRef<'_, f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Eigen("matrix is not square".into()));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let vectors = evd.U().to_owned();
    let eig = SymEigen { values, vectors };

    let scale = max_abs(a);
    let residual = residual_bound(a, &eig);
    let bound = EIGEN_TOLERANCE * scale.max(f64::MIN_POSITIVE);
    if !(residual <= bound) && scale > 0.0 {
        return Err(Error::EigenAccuracy { residual, bound });
    }
    Ok(eig)
}

/// Upper bound on `max |A - V diag(w) V^T|`.
///
/// With `R = A V - V diag(w)` and orthogonal `V`, every entry of the
/// reconstruction error is bounded by the 2-norm of the matching row of `R`.
pub fn residual_bound(a: MatRef<'_, f64>, eig: &SymEigen) -> f64 {
    let n = a.nrows();
    let v = eig.vectors.as_ref();
    let av = sparse_aware_product(a, v);
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut row = 0.0;
        for k in 0..n {
            let r = av[(i, k)] - v[(i, k)] * eig.values[k];
            row += r * r;
        }
        worst = worst.max(row.sqrt());
    }
    worst
}

/// `max |A - V diag(w) V^T|` computed explicitly.
pub fn reconstruction_error(a: MatRef<'_, f64>, eig: &SymEigen) -> f64 {
    let n = a.nrows();
    let v = eig.vectors.as_ref();
    let scaled = Mat::<f64>::from_fn(n, n, |i, k| v[(i, k)] * eig.values[k]);
    let rebuilt = &scaled * v.transpose();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            worst = worst.max((a[(i, j)] - rebuilt[(i, j)]).abs());
        }
    }
    worst
}

fn sparse_aware_product(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let n = a.nrows();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut nnz = 0usize;
    for j in 0..a.ncols() {
        for i in 0..n {
            let x = a[(i, j)];
            if x != 0.0 {
                rows[i].push((j, x));
                nnz += 1;
            }
        }
    }
    if nnz > n * a.ncols() / 8 {
        return a * b;
    }
    let m = b.ncols();
    let mut out = Mat::<f64>::zeros(n, m);
    for (i, row) in rows.iter().enumerate() {
        for &(j, x) in row {
            for k in 0..m {
                out[(i, k)] += x * b[(j, k)];
            }
        }
    }
    out
}

pub fn max_abs(a: MatRef<'_, f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

pub fn max_abs_complex(a: MatRef<'_, C64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// Eigenvalues of a general complex matrix.
pub fn complex_eigenvalues(a: MatRef<'_, C64>) -> Result<Vec<C64>> {
    a.eigenvalues().map_err(|e| Error::Eigen(format!("{e:?}")))
}

/// `max |U^dagger U - I|`.
pub fn unitarity_defect(u: MatRef<'_, C64>) -> f64 {
    let n = u.nrows();
    let g = u.adjoint() * u;
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Packs a complex vector as an `n x 2` real matrix (real, imaginary columns).
pub fn split_complex(x: &[C64]) -> Mat<f64> {
    Mat::from_fn(x.len(), 2, |i, c| if c == 0 { x[i].re } else { x[i].im })
}

pub fn join_complex(m: MatRef<'_, f64>) -> Vec<C64> {
    (0..m.nrows()).map(|i| C64::new(m[(i, 0)], m[(i, 1)])).collect()
}

/// `A x` for real `A` and complex `x`.
pub fn real_times_complex(a: MatRef<'_, f64>, x: &[C64]) -> Vec<C64> {
    let packed = split_complex(x);
    join_complex((a * &packed).as_ref())
}

/// `A^T x` for real `A` and complex `x`.
pub fn real_transpose_times_complex(a: MatRef<'_, f64>, x: &[C64]) -> Vec<C64> {
    let packed = split_complex(x);
    join_complex((a.transpose() * &packed).as_ref())
}

pub fn complex_matvec(a: MatRef<'_, C64>, x: &[C64]) -> Vec<C64> {
    let n = a.nrows();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (j, &xj) in x.iter().enumerate() {
        if xj == C64::new(0.0, 0.0) {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += a[(i, j)] * xj;
        }
    }
    out
}

pub fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_symmetric(n: usize) -> Mat<f64> {
        Mat::from_fn(n, n, |i, j| {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            ((a * 31 + b * 17) % 23) as f64 / 7.0 - 1.5
        })
    }

    #[test]
    fn eigendecomposition_reconstructs() {
        let a = sample_symmetric(60);
        let eig = sym_eigen(a.as_ref()).unwrap();
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let err = reconstruction_error(a.as_ref(), &eig);
        assert!(err < 1e-12 * max_abs(a.as_ref()).max(1.0), "err = {err}");
        assert!(residual_bound(a.as_ref(), &eig) >= err * 0.999);
    }

    #[test]
    fn matrix_exponential_is_unitary() {
        let a = sample_symmetric(40);
        let eig = sym_eigen(a.as_ref()).unwrap();
        let u = eig.apply_function(|w| C64::from_polar(1.0, -0.7 * w));
        assert!(unitarity_defect(u.as_ref()) < 1e-12);
    }

    #[test]
    fn real_complex_products() {
        let a = sample_symmetric(5);
        let x: Vec<C64> = (0..5).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let y = real_times_complex(a.as_ref(), &x);
        let yt = real_transpose_times_complex(a.as_ref(), &x);
        for i in 0..5 {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..5 {
                acc += a[(i, j)] * x[j];
            }
            assert!((acc - y[i]).norm() < 1e-12);
            assert!((acc - yt[i]).norm() < 1e-12);
        }
    }
}
