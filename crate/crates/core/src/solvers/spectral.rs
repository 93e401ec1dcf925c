//! Discrete inf-sup constant and kernel detection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{solve_matrix, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::linalg::{vdot, vnorm};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Serialize)]
pub struct InfSupEstimate<T> {
    pub alpha: T,
    pub iterations: usize,
    pub converged: bool,
}

const INF_SUP_SEED: u64 = 0x1f5;

/// Smallest generalized singular value `α_h` of `T` with respect to the
/// trial norm `X` and test norm `Y`:
///
/// `α_h = min_u max_v vᵀ T u / (‖u‖_X ‖v‖_Y)`,
///
/// computed by inverse iteration on `Tᵀ Y⁻¹ T u = σ² X u`. With a constraint
/// vector `m`, trial and test spaces are restricted to `mᵀu = 0` and every
/// inverse is a saddle-point solve.
pub fn estimate_inf_sup<T: Real>(
    t: &CsrMatrix<T>,
    x: &CsrMatrix<T>,
    y: &CsrMatrix<T>,
    constraint: Option<&[T]>,
) -> Result<InfSupEstimate<T>> {
    let n = t.nrows();
    for m in [t, x, y] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Dimension(
                "inf-sup matrices must be square and of equal size".into(),
            ));
        }
    }
    for m in [x, y] {
        if !m.is_symmetric(T::c(1e-12) * m.max_abs().max(T::min_positive_value()))
            || m.diagonal().iter().any(|&d| !(d > T::zero()))
        {
            return Err(Error::Indefinite);
        }
    }
    if let Some(c) = constraint {
        if c.len() != n {
            return Err(Error::Dimension("constraint length".into()));
        }
    }
    let tt = t.transpose();
    let project = |u: &mut Vec<T>| {
        if let Some(c) = constraint {
            let s = vdot(c, u) / vdot(c, c);
            for (ui, &ci) in u.iter_mut().zip(c) {
                *ui -= s * ci;
            }
        }
    };
    let x_norm = |u: &[T]| -> Result<T> {
        let q = vdot(u, &x.mul_vec(u));
        if !(q > T::zero()) {
            return Err(Error::Indefinite);
        }
        Ok(q.sqrt())
    };
    let tol = T::c(DEFAULT_TOL).max(T::epsilon() * T::c(100.0));
    let mut rng = ChaCha8Rng::seed_from_u64(INF_SUP_SEED);
    let mut u: Vec<T> = (0..n).map(|_| T::c(rng.gen_range(-1.0..1.0))).collect();
    project(&mut u);
    let s = x_norm(&u)?;
    u.iter_mut().for_each(|v| *v /= s);

    let mut sigma2 = T::infinity();
    let max_iter = 500;
    for it in 1..=max_iter {
        let r = x.mul_vec(&u);
        let z = solve_matrix(&tt, constraint, &r, tol, None)?.x;
        let g = y.mul_vec(&z);
        let mut w = solve_matrix(t, constraint, &g, tol, None)?.x;
        project(&mut w);
        let xw = vdot(&r, &w);
        if !(xw > T::zero()) {
            return Err(Error::Indefinite);
        }
        let next = T::one() / xw;
        let s = x_norm(&w)?;
        u = w.into_iter().map(|v| v / s).collect();
        let change = (next - sigma2).abs();
        sigma2 = next;
        if change <= T::c(1e-9) * sigma2 {
            return Ok(InfSupEstimate {
                alpha: sigma2.max(T::zero()).sqrt(),
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(InfSupEstimate {
        alpha: sigma2.max(T::zero()).sqrt(),
        iterations: max_iter,
        converged: false,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FredholmReport<T> {
    pub smallest_singular_value: T,
    /// Spectral norm `‖T‖₂` (largest singular value).
    pub norm: T,
    /// Number of singular values `≤ 1e-10 ‖T‖`.
    pub near_null_count: usize,
    /// Right singular vector of the smallest singular value.
    pub kernel: Vec<T>,
    /// `std / |mean|` of the kernel candidate; small for a constant vector.
    pub coefficient_of_variation: T,
}

/// Dense singular value decomposition of `T`; intended for small meshes.
pub fn fredholm_kernel<T: Real>(t: &CsrMatrix<T>) -> Result<FredholmReport<T>> {
    if t.nrows() != t.ncols() || t.nrows() == 0 {
        return Err(Error::Dimension(
            "fredholm_kernel needs a non-empty square matrix".into(),
        ));
    }
    let (sigma, v) = t.to_dense().svd_right();
    let n = t.nrows();
    let norm = sigma[n - 1];
    let threshold = T::c(1e-10) * norm;
    let kernel: Vec<T> = (0..n).map(|i| v[(i, 0)]).collect();
    let nf = T::from_usize_lossy(n);
    let mean = kernel.iter().copied().sum::<T>() / nf;
    let var = kernel.iter().map(|&k| (k - mean) * (k - mean)).sum::<T>() / nf;
    let cov = if mean == T::zero() {
        T::infinity()
    } else {
        var.sqrt() / mean.abs()
    };
    Ok(FredholmReport {
        smallest_singular_value: sigma[0],
        norm,
        near_null_count: sigma.iter().filter(|&&s| s <= threshold).count(),
        kernel,
        coefficient_of_variation: cov,
    })
}

/// Smallest singular value of a symmetric positive definite matrix by inverse
/// iteration (no dense factorization); used as a mass scale on large meshes.
pub fn smallest_spd_eigenvalue<T: Real>(a: &CsrMatrix<T>) -> Result<T> {
    let n = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(INF_SUP_SEED);
    let mut u: Vec<T> = (0..n).map(|_| T::c(rng.gen_range(-1.0..1.0))).collect();
    let s = vnorm(&u);
    u.iter_mut().for_each(|v| *v /= s);
    let mut lam = T::infinity();
    for _ in 0..500 {
        let w = solve_matrix(a, None, &u, T::c(DEFAULT_TOL), None)?.x;
        let next = T::one() / vdot(&u, &w);
        let s = vnorm(&w);
        u = w.into_iter().map(|v| v / s).collect();
        let done = (next - lam).abs() <= T::c(1e-10) * next;
        lam = next;
        if done {
            break;
        }
    }
    Ok(lam)
}
