//! Manufactured solutions, convergence studies and identity tests.
//!
//! The right-hand side of a manufactured case is obtained by applying the
//! strong form of the operator,
//!
//! `f = -div_Γ(P (A P∇u + u b)) + (P c)·P∇u + d u`,
//!
//! to the exact solution at the closest surface point, using the analytic
//! derivatives of the fields and the exact frame of the surface. The result
//! is cross-checked at random surface points against a second path that
//! only uses chart evaluations and nested finite differences.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{self, quadrature_points, quadrature_weight, CoefficientSet, DiscreteField};
use crate::error::{Error, Result};
use crate::field::{AmbientScalarField, AmbientVectorField};
use crate::geometry::{Atlas, Chart, Param, SurfaceFrame};
use crate::linalg::{self, Vec3};
use crate::mesh::{build_mesh, MeshPreset, SurfaceMesh};
use crate::scalar::Real;
use crate::solvers::{self, Load, SolveOptions, SolveReport};

/// Seed of the random oracle sample points.
pub const ORACLE_SEED: u64 = 20_240_611;
/// Number of oracle sample points.
pub const ORACLE_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    /// `-div(A∇u) = f`, mean-zero.
    LaplaceBeltrami,
    /// Full operator on the whole space.
    General,
    /// `-div(A∇u) + c·∇u = f`, mean-zero, `c` divergence-free.
    DivFree,
    /// `Δ²u = f`, mean-zero.
    Biharmonic,
}

impl Problem {
    pub fn mean_zero(self) -> bool {
        !matches!(self, Problem::General)
    }
}

/// Exact solution together with the data that produces it.
#[derive(Debug, Clone)]
pub struct ManufacturedCase<T> {
    pub name: String,
    pub atlas: Atlas<T>,
    /// Coarsest mesh of the refinement family.
    pub coarse: MeshPreset,
    pub exact: AmbientScalarField<T>,
    pub load: AmbientScalarField<T>,
    pub coeffs: CoefficientSet<T>,
    pub problem: Problem,
    /// Largest relative disagreement with the finite-difference oracle.
    pub oracle_error: T,
    pub seed: u64,
}

fn missing(what: &str) -> Error {
    Error::Capability(format!("{what} required to manufacture data"))
}

/// Strong form of the operator at a surface point, from analytic derivatives.
pub fn apply_operator<T: Real>(
    frame: &SurfaceFrame<T>,
    exact: &AmbientScalarField<T>,
    coeffs: &CoefficientSet<T>,
) -> Result<T> {
    let x = &frame.point;
    let nu = frame.normal;
    let p = frame.projection;
    let u = exact.eval(x);
    let g = exact.gradient(x).ok_or_else(|| missing("gradient of u"))?;
    let h = exact.hessian(x).ok_or_else(|| missing("Hessian of u"))?;
    let a = coeffs.diffusion.eval(x);
    let da = coeffs
        .diffusion
        .derivative(x)
        .ok_or_else(|| missing("derivative of A"))?;
    let b = coeffs.b.eval(x);
    let jb = coeffs.b.jacobian(x).ok_or_else(|| missing("Jacobian of b"))?;
    let c = coeffs.c.eval(x);
    let d = coeffs.reaction.eval(x);

    let pg = linalg::mat_vec(&p, &g);
    let w = linalg::add(&linalg::mat_vec(&a, &pg), &linalg::scale(u, &b));
    let (t1, t2) = linalg::tangent_basis(&nu);
    let mut div = T::zero();
    for tau in [t1, t2] {
        let mut dtau_a = [[T::zero(); 3]; 3];
        for k in 0..3 {
            dtau_a = linalg::mat_add(&dtau_a, &linalg::mat_scale(tau[k], &da[k]));
        }
        let btau = linalg::mat_vec(&frame.shape, &tau);
        // derivative of P along τ applied to g
        let dp_g = linalg::sub(
            &linalg::scale(-linalg::dot(&nu, &g), &btau),
            &linalg::scale(linalg::dot(&btau, &g), &nu),
        );
        let mut dw = linalg::mat_vec(&dtau_a, &pg);
        dw = linalg::add(&dw, &linalg::mat_vec(&a, &dp_g));
        dw = linalg::add(
            &dw,
            &linalg::mat_vec(&a, &linalg::mat_vec(&p, &linalg::mat_vec(&h, &tau))),
        );
        dw = linalg::axpy(&dw, linalg::dot(&g, &tau), &b);
        dw = linalg::axpy(&dw, u, &linalg::mat_vec(&jb, &tau));
        div += linalg::dot(&tau, &dw);
    }
    let div_pw = div - frame.trace_shape() * linalg::dot(&w, &nu);
    let pc = linalg::mat_vec(&p, &c);
    Ok(-div_pw + linalg::dot(&pc, &pg) + d * u)
}

/// Fourth-order central difference of `f` at `y` along parameter axis `k`.
fn fd4<T: Real, V, F>(f: F, y: &Param<T>, k: usize, h: T, zero: V, axpy: fn(V, T, V) -> V) -> Result<V>
where
    F: Fn(&Param<T>) -> Result<V>,
    V: Copy,
{
    let shifted = |s: T| {
        let mut z = *y;
        z[k] += s * h;
        f(&z)
    };
    let (p1, m1, p2, m2) = (
        shifted(T::one())?,
        shifted(-T::one())?,
        shifted(T::c(2.0))?,
        shifted(T::c(-2.0))?,
    );
    let mut acc = zero;
    acc = axpy(acc, T::c(8.0) / (T::c(12.0) * h), p1);
    acc = axpy(acc, T::c(-8.0) / (T::c(12.0) * h), m1);
    acc = axpy(acc, T::c(-1.0) / (T::c(12.0) * h), p2);
    acc = axpy(acc, T::c(1.0) / (T::c(12.0) * h), m2);
    Ok(acc)
}

fn axpy_s<T: Real>(a: T, s: T, b: T) -> T {
    a + s * b
}

fn axpy_v<T: Real>(a: Vec3<T>, s: T, b: Vec3<T>) -> Vec3<T> {
    linalg::axpy(&a, s, &b)
}

/// Strong form evaluated only from chart points and field values, by nested
/// finite differences in the chart parameters.
pub fn apply_operator_fd<T: Real>(
    chart: &Chart<T>,
    y: &Param<T>,
    exact: &AmbientScalarField<T>,
    coeffs: &CoefficientSet<T>,
) -> Result<T> {
    let h1 = T::epsilon().powf(T::c(0.2));
    let h2 = T::c(10.0) * h1;
    let tangents = |y: &Param<T>| -> Result<[Vec3<T>; 2]> {
        Ok([
            fd4(|z| chart.point(z), y, 0, h1, linalg::zero3(), axpy_v)?,
            fd4(|z| chart.point(z), y, 1, h1, linalg::zero3(), axpy_v)?,
        ])
    };
    let inverse_metric = |t: &[Vec3<T>; 2]| {
        let g = [
            [linalg::dot(&t[0], &t[0]), linalg::dot(&t[0], &t[1])],
            [linalg::dot(&t[1], &t[0]), linalg::dot(&t[1], &t[1])],
        ];
        linalg::inv2(&g)
    };
    let surface_grad = |y: &Param<T>| -> Result<(Vec3<T>, [Vec3<T>; 2])> {
        let t = tangents(y)?;
        let gi = inverse_metric(&t);
        let du = [
            fd4(|z| Ok(exact.eval(&chart.point(z)?)), y, 0, h1, T::zero(), axpy_s)?,
            fd4(|z| Ok(exact.eval(&chart.point(z)?)), y, 1, h1, T::zero(), axpy_s)?,
        ];
        let mut grad = linalg::zero3();
        for i in 0..2 {
            for j in 0..2 {
                grad = linalg::axpy(&grad, gi[i][j] * du[i], &t[j]);
            }
        }
        Ok((grad, t))
    };
    let project = |t: &[Vec3<T>; 2], v: &Vec3<T>| {
        let n = linalg::normalize(&linalg::cross(&t[0], &t[1]));
        linalg::axpy(v, -linalg::dot(v, &n), &n)
    };
    let flux = |y: &Param<T>| -> Result<Vec3<T>> {
        let x = chart.point(y)?;
        let (grad, t) = surface_grad(y)?;
        let w = linalg::axpy(
            &linalg::mat_vec(&coeffs.diffusion.eval(&x), &grad),
            exact.eval(&x),
            &coeffs.b.eval(&x),
        );
        Ok(project(&t, &w))
    };
    let t = tangents(y)?;
    let gi = inverse_metric(&t);
    let df = [
        fd4(flux, y, 0, h2, linalg::zero3(), axpy_v)?,
        fd4(flux, y, 1, h2, linalg::zero3(), axpy_v)?,
    ];
    let mut div = T::zero();
    for i in 0..2 {
        for j in 0..2 {
            div += gi[i][j] * linalg::dot(&t[i], &df[j]);
        }
    }
    let x = chart.point(y)?;
    let (grad, _) = surface_grad(y)?;
    let pc = project(&t, &coeffs.c.eval(&x));
    Ok(-div + linalg::dot(&pc, &grad) + coeffs.reaction.eval(&x) * exact.eval(&x))
}

/// Random chart points away from the boundary of non-periodic parameter axes.
fn oracle_points<T: Real>(atlas: &Atlas<T>, n: usize, seed: u64) -> Vec<(usize, Param<T>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let ci = rng.gen_range(0..atlas.charts().len());
            let dom = atlas.charts()[ci].domain();
            let mut y = [T::zero(); 2];
            for k in 0..2 {
                let (lo, hi) = (dom.lo[k].to_f64_lossy(), dom.hi[k].to_f64_lossy());
                let margin = if dom.periodic[k] { 0.0 } else { 0.15 * (hi - lo) };
                y[k] = T::c(rng.gen_range(lo + margin..hi - margin));
            }
            (ci, y)
        })
        .collect()
}

fn oracle_tolerance<T: Real>() -> T {
    T::c(1e-6).max(T::c(10.0) * T::epsilon().sqrt())
}

/// Largest relative gap between the analytic and finite-difference paths.
pub fn oracle_discrepancy<T: Real>(
    atlas: &Atlas<T>,
    exact: &AmbientScalarField<T>,
    coeffs: &CoefficientSet<T>,
    seed: u64,
) -> Result<T> {
    let mut worst = T::zero();
    let mut scale = T::one();
    for (ci, y) in oracle_points(atlas, ORACLE_SAMPLES, seed) {
        let chart = &atlas.charts()[ci];
        let x = chart.point(&y)?;
        let analytic = apply_operator(&atlas.frame(&x)?, exact, coeffs)?;
        let fd = apply_operator_fd(chart, &y, exact, coeffs)?;
        worst = worst.max((analytic - fd).abs());
        scale = scale.max(fd.abs());
    }
    Ok(worst / scale)
}

/// Builds the load of `problem` for the exact solution `exact` and validates
/// it against the finite-difference oracle at [`ORACLE_SAMPLES`] points.
pub fn manufacture<T: Real>(
    name: &str,
    atlas: &Atlas<T>,
    coarse: MeshPreset,
    exact: AmbientScalarField<T>,
    coeffs: CoefficientSet<T>,
    problem: Problem,
) -> Result<ManufacturedCase<T>> {
    manufacture_with_seed(name, atlas, coarse, exact, coeffs, problem, ORACLE_SEED)
}

/// [`manufacture`] with oracle points drawn from `seed`.
pub fn manufacture_with_seed<T: Real>(
    name: &str,
    atlas: &Atlas<T>,
    coarse: MeshPreset,
    exact: AmbientScalarField<T>,
    coeffs: CoefficientSet<T>,
    problem: Problem,
    seed: u64,
) -> Result<ManufacturedCase<T>> {
    let effective = match problem {
        Problem::LaplaceBeltrami => CoefficientSet {
            b: AmbientVectorField::zero(),
            c: AmbientVectorField::zero(),
            reaction: AmbientScalarField::zero(),
            ..coeffs.clone()
        },
        Problem::DivFree => CoefficientSet {
            b: AmbientVectorField::zero(),
            reaction: AmbientScalarField::zero(),
            ..coeffs.clone()
        },
        Problem::General => coeffs.clone(),
        Problem::Biharmonic => {
            return Err(Error::Capability(
                "biharmonic data needs fourth derivatives; use manufacture_biharmonic".into(),
            ))
        }
    };
    let oracle_error = oracle_discrepancy(atlas, &exact, &effective, seed)?;
    if !(oracle_error <= oracle_tolerance()) {
        return Err(Error::Manufacturing(oracle_error.to_f64_lossy()));
    }
    let load = {
        let (atlas, exact, eff) = (atlas.clone(), exact.clone(), effective.clone());
        AmbientScalarField::new(move |x| {
            atlas
                .frame(x)
                .and_then(|fr| apply_operator(&fr, &exact, &eff))
                .unwrap_or_else(|_| T::nan())
        })
    };
    Ok(ManufacturedCase {
        name: name.to_string(),
        atlas: atlas.clone(),
        coarse,
        exact,
        load,
        coeffs: effective,
        problem,
        oracle_error,
        seed,
    })
}

/// Biharmonic case for an eigenfunction `-Δu = λ u`: the eigen relation is
/// verified through both derivative paths, then `f = λ² u`.
pub fn manufacture_biharmonic<T: Real>(
    name: &str,
    atlas: &Atlas<T>,
    coarse: MeshPreset,
    exact: AmbientScalarField<T>,
    lambda: T,
) -> Result<ManufacturedCase<T>> {
    manufacture_biharmonic_with_seed(name, atlas, coarse, exact, lambda, ORACLE_SEED)
}

/// [`manufacture_biharmonic`] with oracle points drawn from `seed`.
pub fn manufacture_biharmonic_with_seed<T: Real>(
    name: &str,
    atlas: &Atlas<T>,
    coarse: MeshPreset,
    exact: AmbientScalarField<T>,
    lambda: T,
    seed: u64,
) -> Result<ManufacturedCase<T>> {
    let lb = CoefficientSet::laplace();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::zero();
    let mut scale = T::one();
    for (ci, y) in oracle_points(atlas, ORACLE_SAMPLES, rng.gen()) {
        let chart = &atlas.charts()[ci];
        let x = chart.point(&y)?;
        let target = lambda * exact.eval(&x);
        let analytic = apply_operator(&atlas.frame(&x)?, &exact, &lb)?;
        let fd = apply_operator_fd(chart, &y, &exact, &lb)?;
        worst = worst.max((analytic - target).abs()).max((fd - target).abs());
        scale = scale.max(target.abs());
    }
    let oracle_error = worst / scale;
    if !(oracle_error <= oracle_tolerance()) {
        return Err(Error::Manufacturing(oracle_error.to_f64_lossy()));
    }
    let load = {
        let (atlas, exact) = (atlas.clone(), exact.clone());
        AmbientScalarField::new(move |x| {
            atlas
                .project(x)
                .map(|p| lambda * lambda * exact.eval(&p))
                .unwrap_or_else(|_| T::nan())
        })
    };
    Ok(ManufacturedCase {
        name: name.to_string(),
        atlas: atlas.clone(),
        coarse,
        exact,
        load,
        coeffs: lb,
        problem: Problem::Biharmonic,
        oracle_error,
        seed,
    })
}

/// Solves the case's problem on `mesh`.
pub fn solve_case<T: Real>(
    case: &ManufacturedCase<T>,
    mesh: &SurfaceMesh<T>,
    opts: &SolveOptions<T>,
) -> Result<SolveReport<T>> {
    let load = Load::Scalar(case.load.clone());
    match case.problem {
        Problem::LaplaceBeltrami => solvers::solve_laplace_beltrami(mesh, &case.coeffs.diffusion, &load, opts),
        Problem::General => solvers::solve_general_elliptic(mesh, &case.coeffs, &load, opts),
        Problem::DivFree => solvers::solve_divfree_cd(mesh, &case.coeffs.diffusion, &case.coeffs.c, &load, opts),
        Problem::Biharmonic => solvers::solve_biharmonic(mesh, &load, opts),
    }
}

/// Coarse mesh followed by `levels - 1` uniform refinements.
pub fn mesh_family<T: Real>(atlas: &Atlas<T>, coarse: MeshPreset, levels: usize) -> Result<Vec<SurfaceMesh<T>>> {
    let mut out = Vec::with_capacity(levels);
    if levels == 0 {
        return Ok(out);
    }
    out.push(build_mesh(atlas, coarse)?);
    while out.len() < levels {
        let next = out.last().expect("non-empty").refine(atlas)?;
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelResult<T> {
    pub level: usize,
    pub h: T,
    pub dofs: usize,
    pub error_l2: T,
    pub error_h1: T,
    /// `(∫ A(∇_h u_h − ∇_Γ u*)·(∇_h u_h − ∇_Γ u*))^{1/2}`.
    pub error_energy: T,
    pub iterations: usize,
    pub residual: T,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateWindows<T> {
    pub l2: (T, T),
    pub h1: (T, T),
}

impl<T: Real> Default for RateWindows<T> {
    fn default() -> Self {
        Self {
            l2: (T::c(1.9), T::c(2.1)),
            h1: (T::c(0.9), T::c(1.1)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport<T> {
    pub case: String,
    pub problem: Problem,
    pub seed: u64,
    pub oracle_error: T,
    pub levels: Vec<LevelResult<T>>,
    pub rate_l2: Option<T>,
    pub rate_h1: Option<T>,
    pub windows: RateWindows<T>,
    pub passed: bool,
    /// Present when a level failed; `levels` then holds the completed ones.
    pub failure: Option<String>,
}

/// Errors of a discrete solution against the exact one.
///
/// The L² error is taken against the vertex interpolant. The gradient part of
/// the H¹ error is taken against the exact tangential gradient at the
/// quadrature points: the interpolant's gradient superconverges on these
/// meshes and would hide the first-order behaviour of the true error.
pub fn solution_errors<T: Real>(
    case: &ManufacturedCase<T>,
    mesh: &SurfaceMesh<T>,
    uh: &DiscreteField<T>,
) -> Result<(T, T, T)> {
    let mut interp = DiscreteField::interpolate(mesh, &case.exact).into_values();
    if case.problem.mean_zero() {
        let m = assembly::vertex_masses(mesh)?;
        let mean = linalg::vdot(&m, &interp) / mesh.total_area();
        interp.iter_mut().for_each(|v| *v -= mean);
    }
    let diff: Vec<T> = uh.values().iter().zip(&interp).map(|(&a, &b)| a - b).collect();
    let e = DiscreteField::new(mesh, diff)?;
    let l2 = assembly::discrete_norm(mesh, &e, 0, T::c(2.0))?;
    let wq = quadrature_weight::<T>();
    let (mut grad2, mut energy2) = (T::zero(), T::zero());
    let u = uh.values();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = mesh.element_geometry(t)?;
        let mut gh = linalg::zero3();
        for k in 0..3 {
            gh = linalg::axpy(&gh, u[tri[k]], &g.gradients[k]);
        }
        for x in quadrature_points(mesh, t) {
            let fr = case.atlas.frame(&x)?;
            let ge = case
                .exact
                .gradient(&fr.point)
                .ok_or_else(|| Error::Capability("gradient of the exact solution".into()))?;
            let diff = linalg::sub(&gh, &linalg::mat_vec(&fr.projection, &ge));
            grad2 += g.area * wq * linalg::dot(&diff, &diff);
            let a = case.coeffs.diffusion.eval(&x);
            energy2 += g.area * wq * linalg::dot(&diff, &linalg::mat_vec(&a, &diff));
        }
    }
    Ok((l2, (l2 * l2 + grad2).sqrt(), energy2.max(T::zero()).sqrt()))
}

/// Least-squares slope of `log e` against `log h`; `None` with fewer than
/// three levels or non-positive errors.
pub fn fitted_rate<T: Real>(h: &[T], e: &[T]) -> Option<T> {
    if h.len() < 3 || h.len() != e.len() || e.iter().any(|&v| !(v > T::zero())) {
        return None;
    }
    let n = T::from_usize_lossy(h.len());
    let xs: Vec<T> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<T> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxy: T = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    (sxx > T::zero()).then(|| sxy / sxx)
}

/// Errors at or below this are treated as exact reproduction.
pub const EXACT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct StudyOptions<T> {
    pub solve: SolveOptions<T>,
    pub windows: RateWindows<T>,
    pub parallel: bool,
}

impl<T: Real> Default for StudyOptions<T> {
    fn default() -> Self {
        Self {
            solve: SolveOptions {
                recenter_load: true,
                ..SolveOptions::default()
            },
            windows: RateWindows::default(),
            parallel: true,
        }
    }
}

/// Solves the case on `levels` nested meshes and fits convergence rates.
pub fn convergence_study<T: Real>(
    case: &ManufacturedCase<T>,
    levels: usize,
    opts: &StudyOptions<T>,
) -> Result<ConvergenceReport<T>> {
    if levels < 3 {
        return Err(Error::InvalidArgument(
            "a convergence study needs at least 3 levels".into(),
        ));
    }
    let meshes = mesh_family(&case.atlas, case.coarse, levels)?;
    let run = |(level, mesh): (usize, &SurfaceMesh<T>)| -> Result<LevelResult<T>> {
        let report = solve_case(case, mesh, &opts.solve)?;
        let (l2, h1, energy) = solution_errors(case, mesh, &report.solution)?;
        Ok(LevelResult {
            level,
            h: mesh.mesh_size(),
            dofs: mesh.num_vertices(),
            error_l2: l2,
            error_h1: h1,
            error_energy: energy,
            iterations: report.iterations,
            residual: report.residual,
            seconds: report.seconds,
        })
    };
    let results: Vec<Result<LevelResult<T>>> = if opts.parallel {
        meshes.par_iter().enumerate().map(run).collect()
    } else {
        meshes.iter().enumerate().map(run).collect()
    };
    let mut done = Vec::new();
    let mut failure = None;
    for r in results {
        match r {
            Ok(l) => done.push(l),
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    let hs: Vec<T> = done.iter().map(|l| l.h).collect();
    let rate_l2 = fitted_rate(&hs, &done.iter().map(|l| l.error_l2).collect::<Vec<_>>());
    let rate_h1 = fitted_rate(&hs, &done.iter().map(|l| l.error_h1).collect::<Vec<_>>());
    let exact = done
        .iter()
        .all(|l| l.error_l2 <= T::c(EXACT_TOL) && l.error_h1 <= T::c(EXACT_TOL));
    let within = |r: Option<T>, w: (T, T)| r.is_some_and(|r| r >= w.0 && r <= w.1);
    let passed = failure.is_none()
        && done.len() == levels
        && (exact || (within(rate_l2, opts.windows.l2) && within(rate_h1, opts.windows.h1)));
    Ok(ConvergenceReport {
        case: case.name.clone(),
        problem: case.problem,
        seed: case.seed,
        oracle_error: case.oracle_error,
        levels: done,
        rate_l2,
        rate_h1,
        windows: opts.windows,
        passed,
        failure,
    })
}

impl<T: Real> ConvergenceReport<T> {
    /// Zeroes wall-clock fields so that reports are reproducible bit for bit.
    pub fn strip_timing(&mut self) {
        for l in &mut self.levels {
            l.seconds = 0.0;
        }
    }

    /// One row per level.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(
            out,
            "level,h,dofs,error_l2,error_h1,error_energy,iterations,residual,seconds"
        )?;
        for l in &self.levels {
            writeln!(
                out,
                "{},{:e},{},{:e},{:e},{:e},{},{:e},{:e}",
                l.level,
                l.h.to_f64_lossy(),
                l.dofs,
                l.error_l2.to_f64_lossy(),
                l.error_h1.to_f64_lossy(),
                l.error_energy.to_f64_lossy(),
                l.iterations,
                l.residual.to_f64_lossy(),
                l.seconds
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IbpResidual<T> {
    /// `∫ u div_Γ φ`
    pub lhs: T,
    /// `∫ ∇_Γ u · φ`
    pub gradient_term: T,
    /// `∫ tr(B) u φ·ν`
    pub curvature_term: T,
    /// `|lhs + gradient_term − curvature_term|`
    pub residual: T,
}

/// Three-term integration-by-parts identity
/// `∫ u div_Γ φ = −∫ ∇_Γ u · φ + ∫ tr(B) u φ·ν`, integrated with the mesh
/// quadrature and exact-surface evaluation at the projected quadrature points.
pub fn ibp_residual_test<T: Real>(
    atlas: &Atlas<T>,
    mesh: &SurfaceMesh<T>,
    u: &AmbientScalarField<T>,
    phi: &AmbientVectorField<T>,
) -> Result<IbpResidual<T>> {
    let wq = quadrature_weight::<T>();
    let (mut lhs, mut grad, mut curv) = (T::zero(), T::zero(), T::zero());
    for t in 0..mesh.num_triangles() {
        let area = mesh.element_geometry(t)?.area;
        for x in quadrature_points(mesh, t) {
            let fr = atlas.frame(&x)?;
            let p = fr.point;
            let gu = u
                .gradient(&p)
                .ok_or_else(|| Error::Capability("gradient of u".into()))?;
            let jphi = phi
                .jacobian(&p)
                .ok_or_else(|| Error::Capability("Jacobian of φ".into()))?;
            let ph = phi.eval(&p);
            let uv = u.eval(&p);
            let div = linalg::trace(&linalg::mat_mul(&fr.projection, &jphi));
            lhs += area * wq * uv * div;
            grad += area * wq * linalg::dot(&linalg::mat_vec(&fr.projection, &gu), &ph);
            curv += area * wq * fr.trace_shape() * uv * linalg::dot(&ph, &fr.normal);
        }
    }
    Ok(IbpResidual {
        lhs,
        gradient_term: grad,
        curvature_term: curv,
        residual: (lhs + grad - curv).abs(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LpRow<T> {
    pub p: T,
    pub level: usize,
    pub h: T,
    pub norm_u: T,
    pub norm_f: T,
    pub ratio: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpSweep<T> {
    pub case: String,
    pub rows: Vec<LpRow<T>>,
    /// `(p, max ratio / min ratio)` across levels.
    pub spread: Vec<(T, T)>,
    pub passed: bool,
}

/// Bound on the spread of `‖u_h‖_{1,p} / ‖f‖_{0,p}` across levels.
pub const LP_SPREAD_LIMIT: f64 = 2.0;

/// Ratios `‖u_h‖_{1,p} / ‖f‖_{0,p}` on `levels` nested meshes. The dual norm
/// of the data is replaced by the computable `‖f‖_{0,p}`.
pub fn lp_stability_sweep<T: Real>(
    case: &ManufacturedCase<T>,
    ps: &[T],
    levels: usize,
    opts: &SolveOptions<T>,
) -> Result<LpSweep<T>> {
    if let Some(p) = ps.iter().find(|&&p| !(p > T::one()) || !p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "exponent {} outside (1, ∞)",
            p.to_f64_lossy()
        )));
    }
    let meshes = mesh_family(&case.atlas, case.coarse, levels)?;
    let solved: Vec<Result<(usize, T, DiscreteField<T>)>> = meshes
        .par_iter()
        .enumerate()
        .map(|(level, mesh)| Ok((level, mesh.mesh_size(), solve_case(case, mesh, opts)?.solution)))
        .collect();
    let mut rows = Vec::new();
    let mut spread = Vec::new();
    let solved: Vec<(usize, T, DiscreteField<T>)> = solved.into_iter().collect::<Result<_>>()?;
    for &p in ps {
        let mut ratios = Vec::new();
        for ((level, h, u), mesh) in solved.iter().zip(&meshes) {
            let norm_u = assembly::discrete_norm(mesh, u, 1, p)?;
            let norm_f = assembly::ambient_lp_norm(mesh, &case.load, p)?;
            let ratio = if norm_f > T::zero() { norm_u / norm_f } else { T::zero() };
            ratios.push(ratio);
            rows.push(LpRow {
                p,
                level: *level,
                h: *h,
                norm_u,
                norm_f,
                ratio,
            });
        }
        let max = ratios.iter().copied().fold(T::zero(), T::max);
        let min = ratios.iter().copied().fold(T::infinity(), T::min);
        spread.push((p, if max == T::zero() { T::one() } else { max / min }));
    }
    let passed = spread.iter().all(|&(_, s)| s <= T::c(LP_SPREAD_LIMIT));
    Ok(LpSweep {
        case: case.name.clone(),
        rows,
        spread,
        passed,
    })
}

/// Convenience: the unit-sphere eigencase `-Δ x₃ = 2 x₃`.
pub fn sphere_eigencase<T: Real>(coarse_level: usize) -> Result<ManufacturedCase<T>> {
    let atlas = Atlas::sphere(T::one())?;
    manufacture(
        "sphere-eigen-x3",
        &atlas,
        MeshPreset::SphereIcosahedral {
            subdivisions: coarse_level,
        },
        AmbientScalarField::coordinate(2),
        CoefficientSet::laplace(),
        Problem::LaplaceBeltrami,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_matrix_field, parse_scalar_field, parse_vector_field};

    #[test]
    fn rate_fit_is_exact_for_power_laws() {
        let h = [0.4, 0.2, 0.1, 0.05];
        let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        assert!((fitted_rate(&h, &e).unwrap() - 1.7).abs() < 1e-12);
        assert!(fitted_rate(&h[..2], &e[..2]).is_none());
        assert!(fitted_rate(&h, &[0.0, 1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn sphere_examples() {
        let atlas = Atlas::<f64>::sphere(1.0).unwrap();
        let preset = MeshPreset::SphereIcosahedral { subdivisions: 1 };
        let x3 = AmbientScalarField::coordinate(2);
        let case = manufacture(
            "a",
            &atlas,
            preset,
            x3.clone(),
            CoefficientSet::laplace(),
            Problem::General,
        )
        .unwrap();
        let case_d = manufacture(
            "b",
            &atlas,
            preset,
            x3.clone(),
            CoefficientSet::laplace().with_reaction(AmbientScalarField::constant(1.0)),
            Problem::General,
        )
        .unwrap();
        for x in [[0.0, 0.0, 1.0], [0.6, 0.0, 0.8], [0.3, -0.4, 0.2]] {
            let p = atlas.project(&x).unwrap();
            assert!((case.load.eval(&x) - 2.0 * p[2]).abs() < 1e-12);
            assert!((case_d.load.eval(&x) - 3.0 * p[2]).abs() < 1e-12);
        }
        assert!(case.oracle_error < 1e-6);
    }

    #[test]
    fn constant_solution_gives_zero_data() {
        let atlas = Atlas::<f64>::torus(3.0, 1.0).unwrap();
        let coeffs = CoefficientSet::laplace()
            .with_diffusion(
                parse_matrix_field([["2", "x1", "0"], ["x1", "3", "0"], ["0", "0", "1"]]).unwrap(),
                1.0,
            )
            .with_c(parse_vector_field(["x2", "x3", "1"]).unwrap());
        let case = manufacture(
            "const",
            &atlas,
            MeshPreset::TorusGrid {
                n_minor: 4,
                n_major: 12,
            },
            AmbientScalarField::constant(5.0),
            coeffs,
            Problem::General,
        )
        .unwrap();
        assert!(case.load.eval(&[3.5, 0.2, 0.5]).abs() < 1e-12);
    }

    #[test]
    fn oracle_catches_wrong_operator() {
        // a deliberately wrong strong form must disagree with the FD path
        let atlas = Atlas::<f64>::sphere(1.0).unwrap();
        let u = parse_scalar_field("x1*x2 + x3^3").unwrap();
        let coeffs = CoefficientSet::laplace()
            .with_b(parse_vector_field(["x2", "-x1", "x1*x3"]).unwrap())
            .with_reaction(parse_scalar_field("1 + x1^2").unwrap());
        let good = oracle_discrepancy(&atlas, &u, &coeffs, 3).unwrap();
        assert!(good < 1e-7, "{good}");
        let (ci, y) = oracle_points(&atlas, 1, 9)[0];
        let chart = &atlas.charts()[ci];
        let x = chart.point(&y).unwrap();
        let mut frame = atlas.frame(&x).unwrap();
        frame.shape = [[0.0; 3]; 3];
        let wrong = apply_operator(&frame, &u, &coeffs).unwrap();
        let fd = apply_operator_fd(chart, &y, &u, &coeffs).unwrap();
        assert!((wrong - fd).abs() > 1e-3);
    }

    #[test]
    fn zero_case_is_exact() {
        let atlas = Atlas::<f64>::sphere(1.0).unwrap();
        let case = manufacture(
            "zero",
            &atlas,
            MeshPreset::SphereIcosahedral { subdivisions: 0 },
            AmbientScalarField::zero(),
            CoefficientSet::laplace(),
            Problem::LaplaceBeltrami,
        )
        .unwrap();
        let r = convergence_study(&case, 3, &StudyOptions::default()).unwrap();
        assert!(r.passed);
        assert!(r.levels.iter().all(|l| l.error_l2 <= 1e-10 && l.error_h1 <= 1e-10));
        assert!(r.rate_l2.is_none());
    }

    #[test]
    fn ibp_trivial_case() {
        let atlas = Atlas::<f64>::sphere(1.0).unwrap();
        let mesh = build_mesh(&atlas, MeshPreset::SphereIcosahedral { subdivisions: 2 }).unwrap();
        let r = ibp_residual_test(
            &atlas,
            &mesh,
            &AmbientScalarField::constant(1.0),
            &AmbientVectorField::rotation([0.0, 0.0, 1.0]),
        )
        .unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.gradient_term.abs() < 1e-12 && r.curvature_term.abs() < 1e-12);
    }

    #[test]
    fn lp_sweep_zero_data() {
        let atlas = Atlas::<f64>::sphere(1.0).unwrap();
        let case = manufacture(
            "zero",
            &atlas,
            MeshPreset::SphereIcosahedral { subdivisions: 0 },
            AmbientScalarField::zero(),
            CoefficientSet::laplace(),
            Problem::LaplaceBeltrami,
        )
        .unwrap();
        let s = lp_stability_sweep(&case, &[2.0], 3, &SolveOptions::default()).unwrap();
        assert!(s.rows.iter().all(|r| r.ratio == 0.0));
        assert!(s.passed);
        assert!(lp_stability_sweep(&case, &[1.0], 3, &SolveOptions::default()).is_err());
    }
}
