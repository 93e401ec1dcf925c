//! Solvers for the discrete problems, well-posedness checks and spectral estimators.
//!
//! Mean-zero problems are posed in saddle-point form
//!
//! ```text
//! [ T  m ] [u]   [ℓ]
//! [ mᵀ 0 ] [μ] = [0]
//! ```
//!
//! with `m_i = ∫ φ_i`. For compatible data the multiplier `μ` vanishes up to
//! discretization error, which makes it a useful diagnostic.

mod conditions;
pub mod krylov;
mod spectral;

use std::time::Instant;

use serde::Serialize;

pub use conditions::{
    check_conditions, check_div_free, check_ellipticity, check_reaction_condition, div_free_scale, ConditionReport,
    EllipticityCheck, ReactionCheck, Verdict,
};
pub use krylov::{KrylovMethod, LinearSolution};
pub use spectral::{estimate_inf_sup, fredholm_kernel, smallest_spd_eigenvalue, FredholmReport, InfSupEstimate};

use crate::assembly::{self, CoefficientSet, DiscreteField, SparseSystem};
use crate::error::{Error, Result};
use crate::field::{AmbientMatrixField, AmbientScalarField, AmbientVectorField};
use crate::linalg::{vdot, vnorm};
use crate::mesh::SurfaceMesh;
use crate::scalar::Real;
use crate::sparse::CsrMatrix;
use krylov::SaddleOperator;

/// Default relative residual tolerance of every Krylov solve.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative tolerance on `|Σ ℓ_i| / Σ |ℓ_i|` for data to count as mean-zero.
pub const MEAN_ZERO_TOL: f64 = 1e-8;

/// Default bound on `check_div_free / div_free_scale` for [`solve_divfree_cd`].
pub const DIV_FREE_RELATIVE_TOL: f64 = 0.25;

/// Right-hand side of a problem.
#[derive(Debug, Clone)]
pub enum Load<T> {
    /// `⟨f, v⟩ = ∫ f v`.
    Scalar(AmbientScalarField<T>),
    /// `⟨f, v⟩ = -∫ F·∇v`.
    Divergence(AmbientVectorField<T>),
    /// Precomputed load vector.
    Vector(Vec<T>),
}

impl<T: Real> Load<T> {
    pub fn vector(&self, mesh: &SurfaceMesh<T>) -> Result<Vec<T>> {
        match self {
            Load::Scalar(f) => assembly::assemble_load(mesh, f),
            Load::Divergence(f) => assembly::assemble_load_div(mesh, f),
            Load::Vector(v) => {
                if v.len() != mesh.num_vertices() {
                    return Err(Error::Dimension("load vector length".into()));
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions<T> {
    pub tol: T,
    /// Defaults to ten times the number of unknowns.
    pub max_iter: Option<usize>,
    /// Solve `solve_general_elliptic` in the mean-zero subspace.
    pub mean_zero: bool,
    /// Proceed although the reaction conditions are violated.
    pub override_conditions: bool,
    /// Subtract the mean of scalar data instead of rejecting it.
    pub recenter_load: bool,
    /// Absolute threshold for [`check_div_free`]; defaults to
    /// `DIV_FREE_RELATIVE_TOL * div_free_scale`.
    pub div_free_threshold: Option<T>,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::c(DEFAULT_TOL),
            max_iter: None,
            mean_zero: false,
            override_conditions: false,
            recenter_load: false,
            div_free_threshold: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport<T> {
    pub solution: DiscreteField<T>,
    pub multiplier: Option<T>,
    pub iterations: usize,
    /// Final relative residual (the largest over all stages).
    pub residual: T,
    pub stage_residuals: Vec<T>,
    pub method: &'static str,
    pub seconds: f64,
    /// `‖u_h‖_{1,2} / ‖f‖_{0,2}` for scalar data.
    pub a_priori_ratio: Option<T>,
    /// `1 - |uᵀ G_c u| / uᵀ K_A u` for the divergence-free solver.
    pub coercivity_margin: Option<T>,
    pub conditions: Option<ConditionReport<T>>,
}

/// Solves a [`SparseSystem`]: CG for symmetric unconstrained systems, MINRES
/// for symmetric saddle-point systems, BiCGSTAB (falling back to restarted
/// GMRES) otherwise. Non-convergence is reported through `converged`.
pub fn solve_linear_system<T: Real>(
    system: &SparseSystem<T>,
    tol: T,
    max_iter: Option<usize>,
) -> Result<LinearSolution<T>> {
    solve_matrix(&system.matrix, system.constraint.as_deref(), &system.rhs, tol, max_iter)
}

pub(crate) fn solve_matrix<T: Real>(
    matrix: &CsrMatrix<T>,
    constraint: Option<&[T]>,
    rhs: &[T],
    tol: T,
    max_iter: Option<usize>,
) -> Result<LinearSolution<T>> {
    let n = matrix.nrows();
    if matrix.ncols() != n || rhs.len() != n {
        return Err(Error::Dimension(
            "system must be square and match the right-hand side".into(),
        ));
    }
    let symmetric = matrix.is_symmetric(T::c(1e-13) * matrix.max_abs().max(T::min_positive_value()));
    match constraint {
        None => {
            let max_iter = max_iter.unwrap_or(10 * n.max(1));
            let x0 = vec![T::zero(); n];
            let (out, method) = if symmetric {
                match krylov::cg(matrix, rhs, &x0, tol, max_iter) {
                    Ok(o) => (o, KrylovMethod::Cg),
                    Err(Error::Indefinite) => (krylov::minres(matrix, rhs, &x0, tol, max_iter)?, KrylovMethod::Minres),
                    Err(e) => return Err(e),
                }
            } else {
                nonsymmetric(matrix, rhs, &x0, tol, max_iter)?
            };
            Ok(LinearSolution {
                x: out.x,
                multiplier: None,
                iterations: out.iterations,
                residual: out.residual,
                method,
                converged: out.converged,
            })
        }
        Some(m) => {
            if m.len() != n {
                return Err(Error::Dimension("constraint row length".into()));
            }
            let op = SaddleOperator { matrix, constraint: m };
            let max_iter = max_iter.unwrap_or(10 * (n + 1));
            let mut b = rhs.to_vec();
            b.push(T::zero());
            let x0 = vec![T::zero(); n + 1];
            let (out, method) = if symmetric {
                (krylov::minres(&op, &b, &x0, tol, max_iter)?, KrylovMethod::Minres)
            } else {
                nonsymmetric(&op, &b, &x0, tol, max_iter)?
            };
            let mut x = out.x;
            let mu = x.pop();
            Ok(LinearSolution {
                x,
                multiplier: mu,
                iterations: out.iterations,
                residual: out.residual,
                method,
                converged: out.converged,
            })
        }
    }
}

fn nonsymmetric<T: Real, A: crate::sparse::LinearOperator<T>>(
    op: &A,
    b: &[T],
    x0: &[T],
    tol: T,
    max_iter: usize,
) -> Result<(krylov::KrylovOutcome<T>, KrylovMethod)> {
    let start = match krylov::bicgstab(op, b, x0, tol, max_iter) {
        Ok(o) if o.converged => return Ok((o, KrylovMethod::Bicgstab)),
        Ok(o) => o.x,
        Err(Error::Breakdown { .. }) => x0.to_vec(),
        Err(e) => return Err(e),
    };
    let out = krylov::gmres(op, b, &start, tol, max_iter, 100)?;
    Ok((out, KrylovMethod::Gmres))
}

fn require_converged<T: Real>(sol: &LinearSolution<T>) -> Result<()> {
    if sol.converged {
        Ok(())
    } else {
        Err(Error::NotConverged {
            method: sol.method.name(),
            iterations: sol.iterations,
            residual: sol.residual.to_f64_lossy(),
        })
    }
}

/// Makes `ℓ` orthogonal to constants, or rejects it.
fn mean_zero_load<T: Real>(mesh: &SurfaceMesh<T>, mut rhs: Vec<T>, recenter: bool) -> Result<Vec<T>> {
    let sum: T = rhs.iter().copied().sum();
    let norm: T = rhs.iter().map(|v| v.abs()).sum();
    if sum.abs() <= T::c(MEAN_ZERO_TOL) * norm {
        return Ok(rhs);
    }
    if !recenter {
        return Err(Error::NotMeanZero {
            sum: sum.to_f64_lossy(),
            norm: norm.to_f64_lossy(),
        });
    }
    let m = assembly::vertex_masses(mesh)?;
    let s = sum / mesh.total_area();
    for (r, mi) in rhs.iter_mut().zip(m) {
        *r -= s * mi;
    }
    Ok(rhs)
}

/// Saddle-point solve followed by exact re-centering of the solution.
fn solve_mean_zero<T: Real>(
    mesh: &SurfaceMesh<T>,
    matrix: CsrMatrix<T>,
    rhs: Vec<T>,
    opts: &SolveOptions<T>,
) -> Result<LinearSolution<T>> {
    let m = assembly::vertex_masses(mesh)?;
    let system = SparseSystem::new(matrix, rhs)?.with_constraint(m.clone())?;
    let mut sol = solve_linear_system(&system, opts.tol, opts.max_iter)?;
    require_converged(&sol)?;
    recenter(&mut sol.x, &m);
    Ok(sol)
}

fn recenter<T: Real>(u: &mut [T], m: &[T]) {
    let total: T = m.iter().copied().sum();
    let s = vdot(m, u) / total;
    for v in u.iter_mut() {
        *v -= s;
    }
}

fn a_priori_ratio<T: Real>(mesh: &SurfaceMesh<T>, u: &DiscreteField<T>, load: &Load<T>) -> Result<Option<T>> {
    let Load::Scalar(f) = load else {
        return Ok(None);
    };
    let fn_ = assembly::ambient_lp_norm(mesh, f, T::c(2.0))?;
    let un = assembly::discrete_norm(mesh, u, 1, T::c(2.0))?;
    Ok(Some(if fn_ > T::zero() { un / fn_ } else { T::zero() }))
}

/// `-div(A∇u) = f` in the mean-zero space. Scalar data must integrate to zero
/// (up to `MEAN_ZERO_TOL`) unless `recenter_load` is set.
pub fn solve_laplace_beltrami<T: Real>(
    mesh: &SurfaceMesh<T>,
    a: &AmbientMatrixField<T>,
    load: &Load<T>,
    opts: &SolveOptions<T>,
) -> Result<SolveReport<T>> {
    let start = Instant::now();
    let lam = assembly::sampled_ellipticity(mesh, a)?;
    if !(lam > T::zero()) {
        return Err(Error::Coefficient(format!(
            "diffusion matrix is not strictly elliptic (sampled constant {:e})",
            lam.to_f64_lossy()
        )));
    }
    let k = assembly::assemble_stiffness(mesh, a)?;
    let rhs = mean_zero_load(mesh, load.vector(mesh)?, opts.recenter_load)?;
    let sol = solve_mean_zero(mesh, k, rhs, opts)?;
    let u = DiscreteField::new(mesh, sol.x)?;
    let ratio = a_priori_ratio(mesh, &u, load)?;
    Ok(SolveReport {
        solution: u,
        multiplier: sol.multiplier,
        iterations: sol.iterations,
        residual: sol.residual,
        stage_residuals: vec![sol.residual],
        method: sol.method.name(),
        seconds: start.elapsed().as_secs_f64(),
        a_priori_ratio: ratio,
        coercivity_margin: None,
        conditions: None,
    })
}

/// `-div(A∇u + u b) + c·∇u + d u = f` on the full space (or the mean-zero
/// space with `opts.mean_zero`). Refuses to run when both reaction conditions
/// are violated, unless `opts.override_conditions` is set.
pub fn solve_general_elliptic<T: Real>(
    mesh: &SurfaceMesh<T>,
    coeffs: &CoefficientSet<T>,
    load: &Load<T>,
    opts: &SolveOptions<T>,
) -> Result<SolveReport<T>> {
    let start = Instant::now();
    let conditions = check_conditions(coeffs, mesh)?;
    let gated = !opts.mean_zero && conditions.reaction_violated();
    if gated && !opts.override_conditions {
        return Err(Error::ConditionsViolated(conditions.failures.join("; ")));
    }
    let t = assembly::assemble_operator(mesh, coeffs)?;
    let rhs = load.vector(mesh)?;
    let result = if opts.mean_zero {
        let rhs = mean_zero_load(mesh, rhs, opts.recenter_load)?;
        solve_mean_zero(mesh, t, rhs, opts)
    } else {
        let system = SparseSystem::new(t, rhs)?;
        solve_linear_system(&system, opts.tol, opts.max_iter).and_then(|s| require_converged(&s).map(|_| s))
    };
    let sol = match result {
        Err(Error::NotConverged { .. } | Error::Breakdown { .. }) if gated => {
            return Err(Error::ConditionsViolated(format!(
                "{}; the operator appears singular",
                conditions.failures.join("; ")
            )))
        }
        other => other?,
    };
    let u = DiscreteField::new(mesh, sol.x)?;
    let ratio = a_priori_ratio(mesh, &u, load)?;
    Ok(SolveReport {
        solution: u,
        multiplier: sol.multiplier,
        iterations: sol.iterations,
        residual: sol.residual,
        stage_residuals: vec![sol.residual],
        method: sol.method.name(),
        seconds: start.elapsed().as_secs_f64(),
        a_priori_ratio: ratio,
        coercivity_margin: None,
        conditions: Some(conditions),
    })
}

/// `-div(A∇u) + c·∇u = f` in the mean-zero space for weakly divergence-free `c`.
pub fn solve_divfree_cd<T: Real>(
    mesh: &SurfaceMesh<T>,
    a: &AmbientMatrixField<T>,
    c: &AmbientVectorField<T>,
    load: &Load<T>,
    opts: &SolveOptions<T>,
) -> Result<SolveReport<T>> {
    let start = Instant::now();
    let residual = check_div_free(mesh, c)?;
    let threshold = match opts.div_free_threshold {
        Some(t) => t,
        None => T::c(DIV_FREE_RELATIVE_TOL) * div_free_scale(mesh, c)?,
    };
    if residual > threshold {
        return Err(Error::NotDivergenceFree {
            residual: residual.to_f64_lossy(),
            threshold: threshold.to_f64_lossy(),
        });
    }
    let k = assembly::assemble_stiffness(mesh, a)?;
    let g = assembly::assemble_convection_c(mesh, c)?;
    let t = k.add(&g)?;
    let rhs = mean_zero_load(mesh, load.vector(mesh)?, opts.recenter_load)?;
    let sol = solve_mean_zero(mesh, t, rhs, opts)?;
    let energy = vdot(&sol.x, &k.mul_vec(&sol.x));
    let skew = vdot(&sol.x, &g.mul_vec(&sol.x));
    let margin = if energy > T::zero() {
        Some(T::one() - skew.abs() / energy)
    } else {
        None
    };
    let u = DiscreteField::new(mesh, sol.x)?;
    let ratio = a_priori_ratio(mesh, &u, load)?;
    Ok(SolveReport {
        solution: u,
        multiplier: sol.multiplier,
        iterations: sol.iterations,
        residual: sol.residual,
        stage_residuals: vec![sol.residual],
        method: sol.method.name(),
        seconds: start.elapsed().as_secs_f64(),
        a_priori_ratio: ratio,
        coercivity_margin: margin,
        conditions: None,
    })
}

/// `Δ²u = f` in the mean-zero space, split as `-Δz = f`, `-Δu = z`.
pub fn solve_biharmonic<T: Real>(
    mesh: &SurfaceMesh<T>,
    load: &Load<T>,
    opts: &SolveOptions<T>,
) -> Result<SolveReport<T>> {
    let start = Instant::now();
    let k = assembly::laplace_stiffness(mesh)?;
    let mass = assembly::mass_matrix(mesh)?;
    let rhs = mean_zero_load(mesh, load.vector(mesh)?, opts.recenter_load)?;
    let first = solve_mean_zero(mesh, k.clone(), rhs, opts)?;
    let rhs2 = mass.mul_vec(&first.x);
    let second = solve_mean_zero(mesh, k, rhs2, opts)?;
    let u = DiscreteField::new(mesh, second.x)?;
    let ratio = a_priori_ratio(mesh, &u, load)?;
    Ok(SolveReport {
        solution: u,
        multiplier: second.multiplier,
        iterations: first.iterations + second.iterations,
        residual: first.residual.max(second.residual),
        stage_residuals: vec![first.residual, second.residual],
        method: second.method.name(),
        seconds: start.elapsed().as_secs_f64(),
        a_priori_ratio: ratio,
        coercivity_margin: None,
        conditions: None,
    })
}

/// Relative residual `‖T u − ℓ‖ / ‖ℓ‖` of a computed solution.
pub fn relative_residual<T: Real>(t: &CsrMatrix<T>, u: &[T], rhs: &[T]) -> T {
    let mut r = t.mul_vec(u);
    for (ri, &bi) in r.iter_mut().zip(rhs) {
        *ri -= bi;
    }
    let b = vnorm(rhs);
    if b > T::zero() {
        vnorm(&r) / b
    } else {
        vnorm(&r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Atlas;
    use crate::linalg::DenseMatrix;
    use crate::mesh::{build_mesh, MeshPreset};

    fn sphere(level: usize) -> SurfaceMesh<f64> {
        let atlas = Atlas::sphere(1.0).unwrap();
        build_mesh(&atlas, MeshPreset::SphereIcosahedral { subdivisions: level }).unwrap()
    }

    fn dense(rows: &[Vec<f64>]) -> CsrMatrix<f64> {
        CsrMatrix::from_dense(&DenseMatrix::from_rows(rows))
    }

    #[test]
    fn small_systems() {
        let id = SparseSystem::new(CsrMatrix::identity(3), vec![1.0, -2.0, 3.0]).unwrap();
        let s = solve_linear_system(&id, 1e-12, None).unwrap();
        assert_eq!(s.x, vec![1.0, -2.0, 3.0]);
        let spd = SparseSystem::new(dense(&[vec![2.0, 0.0], vec![0.0, 4.0]]), vec![2.0, 4.0]).unwrap();
        let s = solve_linear_system(&spd, 1e-12, None).unwrap();
        assert!(s.converged && s.method == KrylovMethod::Cg);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
        let ns = SparseSystem::new(dense(&[vec![3.0, 1.0], vec![-1.0, 2.0]]), vec![4.0, 1.0]).unwrap();
        let s = solve_linear_system(&ns, 1e-12, None).unwrap();
        assert!(s.converged);
        assert!((s.x[0] - 1.0).abs() < 1e-10 && (s.x[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn indefinite_symmetric_falls_back_to_minres() {
        let a = dense(&[vec![1.0, 0.0], vec![0.0, -2.0]]);
        let s = solve_linear_system(&SparseSystem::new(a, vec![1.0, 2.0]).unwrap(), 1e-12, None).unwrap();
        assert_eq!(s.method, KrylovMethod::Minres);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn gmres_solves_nonsymmetric() {
        let a = dense(&[vec![4.0, 1.0, 0.0], vec![-2.0, 5.0, 1.0], vec![0.0, 3.0, 6.0]]);
        let b = vec![1.0, 2.0, 3.0];
        let out = krylov::gmres(&a, &b, &[0.0; 3], 1e-13, 50, 2).unwrap();
        assert!(out.converged);
        assert!(relative_residual(&a, &out.x, &b) < 1e-12);
    }

    #[test]
    fn sphere_random_mean_zero_rhs() {
        use rand::{Rng, SeedableRng};
        let mesh = sphere(3);
        let k = assembly::laplace_stiffness(&mesh).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut rhs: Vec<f64> = (0..mesh.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s: f64 = rhs.iter().sum::<f64>() / rhs.len() as f64;
        rhs.iter_mut().for_each(|v| *v -= s);
        let m = assembly::vertex_masses(&mesh).unwrap();
        let system = SparseSystem::new(k.clone(), rhs.clone())
            .unwrap()
            .with_constraint(m)
            .unwrap();
        let sol = solve_linear_system(&system, 1e-10, None).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.method, KrylovMethod::Minres);
        // rhs is orthogonal to constants, so the multiplier is ~0 and K u = rhs
        assert!(sol.multiplier.unwrap().abs() < 1e-8);
        assert!(relative_residual(&k, &sol.x, &rhs) < 1e-9);
    }

    #[test]
    fn zero_load_gives_zero() {
        let mesh = sphere(2);
        let r = solve_laplace_beltrami(
            &mesh,
            &AmbientMatrixField::identity(),
            &Load::Scalar(AmbientScalarField::zero()),
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(r.solution.values().iter().all(|&v| v == 0.0));
        let r = solve_biharmonic(
            &mesh,
            &Load::Scalar(AmbientScalarField::zero()),
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(r.solution.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_non_mean_zero_data() {
        let mesh = sphere(2);
        let err = solve_laplace_beltrami(
            &mesh,
            &AmbientMatrixField::identity(),
            &Load::Scalar(AmbientScalarField::constant(1.0)),
            &SolveOptions::default(),
        );
        assert!(matches!(err, Err(Error::NotMeanZero { .. })));
        let opts = SolveOptions {
            recenter_load: true,
            ..SolveOptions::default()
        };
        let r = solve_laplace_beltrami(
            &mesh,
            &AmbientMatrixField::identity(),
            &Load::Scalar(AmbientScalarField::constant(1.0)),
            &opts,
        )
        .unwrap();
        assert!(r.solution.values().iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn reaction_only_identity() {
        let mesh = sphere(2);
        let coeffs = CoefficientSet::laplace()
            .with_diffusion(AmbientMatrixField::zero(), 0.0)
            .with_reaction(AmbientScalarField::constant(1.0));
        let r = solve_general_elliptic(
            &mesh,
            &coeffs,
            &Load::Scalar(AmbientScalarField::constant(1.0)),
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(r.solution.values().iter().all(|&v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn degenerate_reaction_is_refused() {
        let mesh = sphere(2);
        let coeffs = CoefficientSet::laplace();
        let load = Load::Scalar(AmbientScalarField::coordinate(2));
        let err = solve_general_elliptic(&mesh, &coeffs, &load, &SolveOptions::default());
        assert!(matches!(err, Err(Error::ConditionsViolated(_))));
        // the mean-zero variant reproduces the Laplace-Beltrami solution
        let opts = SolveOptions {
            mean_zero: true,
            ..SolveOptions::default()
        };
        let g = solve_general_elliptic(&mesh, &coeffs, &load, &opts).unwrap();
        let lb =
            solve_laplace_beltrami(&mesh, &AmbientMatrixField::identity(), &load, &SolveOptions::default()).unwrap();
        for (a, b) in g.solution.values().iter().zip(lb.solution.values()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn divfree_with_zero_c_matches_laplace_beltrami() {
        let mesh = sphere(2);
        let load = Load::Scalar(crate::expr::parse_scalar_field("2*x3 + x1*x2").unwrap());
        let a = AmbientMatrixField::identity();
        let d = solve_divfree_cd(&mesh, &a, &AmbientVectorField::zero(), &load, &SolveOptions::default()).unwrap();
        let l = solve_laplace_beltrami(&mesh, &a, &load, &SolveOptions::default()).unwrap();
        for (x, y) in d.solution.values().iter().zip(l.solution.values()) {
            assert!((x - y).abs() < 1e-10);
        }
        // P e3 has surface divergence -2 x3 on the unit sphere
        let grad = AmbientVectorField::constant([0.0, 0.0, 1.0]);
        let err = solve_divfree_cd(&mesh, &a, &grad, &load, &SolveOptions::default());
        assert!(matches!(err, Err(Error::NotDivergenceFree { .. })));
    }

    #[test]
    fn condition_examples() {
        let mesh = sphere(3);
        let base = CoefficientSet::<f64>::laplace();
        let e = check_ellipticity(&base, &mesh).unwrap();
        assert!((e.estimate - 1.0).abs() < 1e-12);
        let e = check_ellipticity(
            &base
                .clone()
                .with_diffusion(AmbientMatrixField::identity().scaled(2.0), 2.0),
            &mesh,
        )
        .unwrap();
        assert!((e.estimate - 2.0).abs() < 1e-12);

        let with_d = base.clone().with_reaction(AmbientScalarField::constant(1.0));
        let (b, _) = check_reaction_condition(&with_d, &mesh).unwrap();
        assert_eq!(b.verdict, Verdict::HoldsSufficiently);
        assert_eq!(b.lambda, Some(1.0));
        assert!((b.witness_measure - mesh.total_area()).abs() < 1e-10);

        let (b, c) = check_reaction_condition(&base, &mesh).unwrap();
        assert!(b.violated() && c.violated());

        let cap = base.with_reaction(crate::expr::parse_scalar_field("max(x3, 0)").unwrap());
        let (b, _) = check_reaction_condition(&cap, &mesh).unwrap();
        assert_eq!(b.verdict, Verdict::HoldsSufficiently);
        assert!((b.lambda.unwrap() - 0.5).abs() < 0.05, "{:?}", b.lambda);
    }

    #[test]
    fn inf_sup_small() {
        let id = CsrMatrix::<f64>::identity(2);
        let a = estimate_inf_sup(&id, &id, &id, None).unwrap();
        assert!((a.alpha - 1.0).abs() < 1e-8);
        let t = CsrMatrix::from_diagonal(&[3.0, 5.0]);
        let a = estimate_inf_sup(&t, &id, &id, None).unwrap();
        assert!((a.alpha - 3.0).abs() < 1e-6, "{}", a.alpha);
        let bad = CsrMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(estimate_inf_sup(&t, &bad, &id, None), Err(Error::Indefinite)));
    }

    #[test]
    fn fredholm_examples() {
        let f = fredholm_kernel(&CsrMatrix::<f64>::identity(4)).unwrap();
        assert!((f.smallest_singular_value - 1.0).abs() < 1e-14);
        assert_eq!(f.near_null_count, 0);
        let mesh = sphere(1);
        let k = assembly::laplace_stiffness(&mesh).unwrap();
        let f = fredholm_kernel(&k).unwrap();
        assert_eq!(f.near_null_count, 1);
        assert!(f.coefficient_of_variation < 1e-6);
    }
}
