//! Unpreconditioned Krylov solvers on a [`LinearOperator`].
//!
//! All methods start from a caller-supplied initial guess, stop on the true
//! relative residual `‖b − Ax‖ / ‖b‖` and, when they run out of iterations,
//! hand back the best iterate they saw together with `converged = false`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{vaxpy, vdot, vnorm};
use crate::scalar::Real;
use crate::sparse::{CsrMatrix, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KrylovMethod {
    Cg,
    Minres,
    Bicgstab,
    Gmres,
}

impl KrylovMethod {
    pub fn name(self) -> &'static str {
        match self {
            KrylovMethod::Cg => "cg",
            KrylovMethod::Minres => "minres",
            KrylovMethod::Bicgstab => "bicgstab",
            KrylovMethod::Gmres => "gmres",
        }
    }
}

#[derive(Debug, Clone)]
pub struct KrylovOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub residual: T,
    pub converged: bool,
}

fn residual<T: Real, A: LinearOperator<T>>(a: &A, b: &[T], x: &[T]) -> Vec<T> {
    let mut r = vec![T::zero(); b.len()];
    a.apply(x, &mut r);
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    r
}

fn relative<T: Real>(r: T, bnorm: T) -> T {
    if bnorm > T::zero() {
        r / bnorm
    } else {
        r
    }
}

fn trivial<T: Real>(n: usize) -> KrylovOutcome<T> {
    KrylovOutcome {
        x: vec![T::zero(); n],
        iterations: 0,
        residual: T::zero(),
        converged: true,
    }
}

/// Conjugate gradients; the operator must be symmetric positive definite.
/// A non-positive curvature `pᵀAp ≤ 0` is reported as [`Error::Indefinite`].
pub fn cg<T: Real, A: LinearOperator<T>>(
    a: &A,
    b: &[T],
    x0: &[T],
    tol: T,
    max_iter: usize,
) -> Result<KrylovOutcome<T>> {
    let n = a.dim();
    let bnorm = vnorm(b);
    if bnorm == T::zero() {
        return Ok(trivial(n));
    }
    let mut x = x0.to_vec();
    let mut r = residual(a, b, &x);
    let mut p = r.clone();
    let mut ap = vec![T::zero(); n];
    let mut rr = vdot(&r, &r);
    let mut it = 0;
    while it < max_iter {
        if relative(rr.sqrt(), bnorm) <= tol {
            break;
        }
        a.apply(&p, &mut ap);
        let pap = vdot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::Indefinite);
        }
        let alpha = rr / pap;
        vaxpy(&mut x, alpha, &p);
        vaxpy(&mut r, -alpha, &ap);
        let rr_new = vdot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, &ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        it += 1;
    }
    let res = relative(vnorm(&residual(a, b, &x)), bnorm);
    Ok(KrylovOutcome {
        x,
        iterations: it,
        residual: res,
        converged: res <= tol,
    })
}

/// MINRES for symmetric, possibly indefinite operators (saddle-point systems).
/// Restarts from the current iterate when the recurrence residual and the true
/// residual drift apart.
pub fn minres<T: Real, A: LinearOperator<T>>(
    a: &A,
    b: &[T],
    x0: &[T],
    tol: T,
    max_iter: usize,
) -> Result<KrylovOutcome<T>> {
    let n = a.dim();
    let bnorm = vnorm(b);
    if bnorm == T::zero() {
        return Ok(trivial(n));
    }
    let mut x = x0.to_vec();
    let mut total = 0;
    let mut res = relative(vnorm(&residual(a, b, &x)), bnorm);
    while res > tol && total < max_iter {
        let before = total;
        minres_cycle(a, b, &mut x, bnorm, tol, max_iter, &mut total);
        res = relative(vnorm(&residual(a, b, &x)), bnorm);
        if total == before {
            break;
        }
    }
    Ok(KrylovOutcome {
        x,
        iterations: total,
        residual: res,
        converged: res <= tol,
    })
}

fn minres_cycle<T: Real, A: LinearOperator<T>>(
    a: &A,
    b: &[T],
    x: &mut [T],
    bnorm: T,
    tol: T,
    max_iter: usize,
    total: &mut usize,
) {
    let n = a.dim();
    let r0 = residual(a, b, x);
    let beta1 = vnorm(&r0);
    if beta1 == T::zero() {
        return;
    }
    let mut v_prev = vec![T::zero(); n];
    let mut v: Vec<T> = r0.iter().map(|&ri| ri / beta1).collect();
    let mut w_prev2 = vec![T::zero(); n];
    let mut w_prev = vec![T::zero(); n];
    let mut av = vec![T::zero(); n];
    let mut eta = beta1;
    let (mut gamma_prev, mut gamma) = (T::one(), T::one());
    let (mut sigma_prev, mut sigma) = (T::zero(), T::zero());
    let mut rnorm = beta1;
    let mut beta_lanczos = T::zero();
    while *total < max_iter {
        a.apply(&v, &mut av);
        let alpha = vdot(&v, &av);
        let mut v_next = av.clone();
        vaxpy(&mut v_next, -alpha, &v);
        vaxpy(&mut v_next, -beta_lanczos, &v_prev);
        let beta_next = vnorm(&v_next);
        if beta_next > T::zero() {
            for vi in v_next.iter_mut() {
                *vi /= beta_next;
            }
        }
        let delta = gamma * alpha - gamma_prev * sigma * beta_lanczos;
        let rho1 = (delta * delta + beta_next * beta_next).sqrt();
        let rho2 = sigma * alpha + gamma_prev * gamma * beta_lanczos;
        let rho3 = sigma_prev * beta_lanczos;
        *total += 1;
        if rho1 == T::zero() {
            return;
        }
        let gamma_next = delta / rho1;
        let sigma_next = beta_next / rho1;
        let mut w = v.clone();
        vaxpy(&mut w, -rho3, &w_prev2);
        vaxpy(&mut w, -rho2, &w_prev);
        for wi in w.iter_mut() {
            *wi /= rho1;
        }
        vaxpy(x, gamma_next * eta, &w);
        rnorm *= sigma_next.abs();
        eta = -sigma_next * eta;
        w_prev2 = std::mem::replace(&mut w_prev, w);
        v_prev = std::mem::replace(&mut v, v_next);
        beta_lanczos = beta_next;
        gamma_prev = gamma;
        gamma = gamma_next;
        sigma_prev = sigma;
        sigma = sigma_next;
        if relative(rnorm, bnorm) <= tol * T::c(0.5) || beta_next == T::zero() {
            return;
        }
    }
}

/// BiCGSTAB for general nonsymmetric operators.
pub fn bicgstab<T: Real, A: LinearOperator<T>>(
    a: &A,
    b: &[T],
    x0: &[T],
    tol: T,
    max_iter: usize,
) -> Result<KrylovOutcome<T>> {
    let n = a.dim();
    let bnorm = vnorm(b);
    if bnorm == T::zero() {
        return Ok(trivial(n));
    }
    let mut x = x0.to_vec();
    let mut r = residual(a, b, &x);
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    let mut best = (relative(vnorm(&r), bnorm), x.clone());
    let tiny = T::epsilon() * T::epsilon();
    let mut it = 0;
    while it < max_iter && best.0 > tol {
        let rho_new = vdot(&r_hat, &r);
        if rho_new.abs() <= tiny * bnorm * bnorm || omega == T::zero() {
            return Err(Error::Breakdown {
                method: "bicgstab",
                iteration: it,
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        a.apply(&p, &mut v);
        let rv = vdot(&r_hat, &v);
        if rv == T::zero() {
            return Err(Error::Breakdown {
                method: "bicgstab",
                iteration: it,
            });
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        it += 1;
        if relative(vnorm(&s), bnorm) <= tol {
            vaxpy(&mut x, alpha, &p);
            r.clone_from(&s);
        } else {
            a.apply(&s, &mut t);
            let tt = vdot(&t, &t);
            omega = if tt > T::zero() { vdot(&t, &s) / tt } else { T::zero() };
            for i in 0..n {
                x[i] += alpha * p[i] + omega * s[i];
                r[i] = s[i] - omega * t[i];
            }
        }
        let rn = relative(vnorm(&r), bnorm);
        if rn < best.0 {
            // the recurrence residual can drift; confirm before accepting
            let true_rn = relative(vnorm(&residual(a, b, &x)), bnorm);
            if true_rn < best.0 {
                best = (true_rn, x.clone());
            }
        }
    }
    let (res, x) = best;
    Ok(KrylovOutcome {
        x,
        iterations: it,
        residual: res,
        converged: res <= tol,
    })
}

/// Restarted GMRES(m) with modified Gram–Schmidt and Givens rotations.
pub fn gmres<T: Real, A: LinearOperator<T>>(
    a: &A,
    b: &[T],
    x0: &[T],
    tol: T,
    max_iter: usize,
    restart: usize,
) -> Result<KrylovOutcome<T>> {
    let n = a.dim();
    let bnorm = vnorm(b);
    if bnorm == T::zero() {
        return Ok(trivial(n));
    }
    let m = restart.max(1).min(n.max(1));
    let mut x = x0.to_vec();
    let mut it = 0;
    let mut res = relative(vnorm(&residual(a, b, &x)), bnorm);
    while res > tol && it < max_iter {
        let r = residual(a, b, &x);
        let beta = vnorm(&r);
        let mut basis: Vec<Vec<T>> = vec![r.iter().map(|&v| v / beta).collect()];
        let mut h = vec![vec![T::zero(); m]; m + 1];
        let (mut cs, mut sn) = (vec![T::zero(); m], vec![T::zero(); m]);
        let mut g = vec![T::zero(); m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && it < max_iter {
            let mut w = vec![T::zero(); n];
            a.apply(&basis[k], &mut w);
            for j in 0..=k {
                h[j][k] = vdot(&w, &basis[j]);
                vaxpy(&mut w, -h[j][k], &basis[j]);
            }
            h[k + 1][k] = vnorm(&w);
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let d = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if d == T::zero() {
                return Err(Error::Breakdown {
                    method: "gmres",
                    iteration: it,
                });
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = T::zero();
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            let hk = vnorm(&w);
            it += 1;
            k += 1;
            if relative(g[k].abs(), bnorm) <= tol * T::c(0.5) || hk == T::zero() {
                break;
            }
            basis.push(w.iter().map(|&v| v / hk).collect());
        }
        let mut y = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in (i + 1)..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, &yj) in y.iter().enumerate() {
            vaxpy(&mut x, yj, &basis[j]);
        }
        res = relative(vnorm(&residual(a, b, &x)), bnorm);
    }
    Ok(KrylovOutcome {
        x,
        iterations: it,
        residual: res,
        converged: res <= tol,
    })
}

/// `[A m; mᵀ 0]` acting on `(u, μ)`.
pub struct SaddleOperator<'a, T> {
    pub matrix: &'a CsrMatrix<T>,
    pub constraint: &'a [T],
}

impl<T: Real> LinearOperator<T> for SaddleOperator<'_, T> {
    fn dim(&self) -> usize {
        self.matrix.nrows() + 1
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let n = self.matrix.nrows();
        self.matrix.mul_vec_into(&x[..n], &mut y[..n]);
        let mu = x[n];
        for (yi, &mi) in y[..n].iter_mut().zip(self.constraint) {
            *yi += mu * mi;
        }
        y[n] = vdot(self.constraint, &x[..n]);
    }
}

/// Solution of a [`crate::assembly::SparseSystem`].
#[derive(Debug, Clone, Serialize)]
pub struct LinearSolution<T> {
    pub x: Vec<T>,
    pub multiplier: Option<T>,
    pub iterations: usize,
    pub residual: T,
    pub method: KrylovMethod,
    pub converged: bool,
}
