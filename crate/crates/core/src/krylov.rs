//! Action of `exp(−i·dt·M)` on a vector for Hermitian `M`, by the Lanczos
//! process.
//!
//! The three-term recurrence is used without reorthogonalization. Every
//! vector it produces is a local combination of `M`-products, so components
//! that are many ladder steps away from the bulk of the state keep their
//! relative accuracy. The projected steps stay short enough that the loss of
//! orthogonality is negligible.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Largest Krylov dimension before the step is split.
pub const MAX_KRYLOV_DIM: usize = 30;

/// Bound on the a-posteriori error estimate of one projected exponential.
pub const KRYLOV_TOL: f64 = 1e-15;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(−i·dt·T)·e₁` for the symmetric tridiagonal `T` given by its diagonal
/// and off-diagonal.
fn tridiagonal_propagator(alpha: &[f64], beta: &[f64], dt: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    (0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    let v = eig.eigenvectors[(0, k)] * eig.eigenvectors[(i, k)];
                    Complex64::from_polar(v, -dt * eig.eigenvalues[k])
                })
                .sum()
        })
        .collect()
}

/// Replaces `psi` by `exp(−i·dt·M)·psi`, where `apply(x, y)` adds `M·x` to `y`.
///
/// Returns the number of products with `M`. Steps that do not converge
/// within [`MAX_KRYLOV_DIM`] vectors are split in two.
pub fn expm_apply<F>(apply: &F, psi: &mut [Complex64], dt: f64) -> usize
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let beta0 = norm(psi);
    if beta0 == 0.0 || dt == 0.0 {
        return 0;
    }
    let n = psi.len();
    let mut basis: Vec<Vec<Complex64>> = vec![psi.iter().map(|x| x / beta0).collect()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut products = 0;
    loop {
        let j = basis.len() - 1;
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        apply(&basis[j], &mut w);
        products += 1;
        let a = dot(&basis[j], &w).re;
        for (wi, vi) in w.iter_mut().zip(&basis[j]) {
            *wi -= vi * a;
        }
        if j > 0 {
            let b = beta[j - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= vi * b;
            }
        }
        alpha.push(a);
        let b_next = norm(&w);
        let coeffs = tridiagonal_propagator(&alpha, &beta, dt);
        // invariant subspace: the projection is exact
        let invariant = b_next <= 1e-14 * (a.abs() + beta.last().copied().unwrap_or(0.0)).max(1e-300);
        let estimate = b_next * coeffs[j].norm();
        if invariant || (j >= 1 && estimate < KRYLOV_TOL) || basis.len() == n {
            for (i, p) in psi.iter_mut().enumerate() {
                *p = basis.iter().zip(&coeffs).map(|(v, c)| v[i] * c).sum::<Complex64>() * beta0;
            }
            return products;
        }
        if basis.len() == MAX_KRYLOV_DIM {
            break;
        }
        beta.push(b_next);
        basis.push(w.iter().map(|x| x / b_next).collect());
    }
    products + expm_apply(apply, psi, dt / 2.0) + expm_apply(apply, psi, dt / 2.0)
}
