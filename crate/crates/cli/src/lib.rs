//! Batch front end: configure a surface, coefficients and a task; run solves,
//! convergence studies and well-posedness checks; write reports and exports.

pub mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gamma_core::assembly::{self, DiscreteField, Execution};
use gamma_core::mesh::{self as mesh_io, build_mesh, SurfaceMesh};
use gamma_core::solvers::{self, ConditionReport, Load, SolveOptions, SolveReport, Verdict};
use gamma_core::sparse::CsrMatrix;
use gamma_core::verification::{self, ConvergenceReport, ManufacturedCase, Problem, RateWindows, StudyOptions};
use gamma_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

use config::Resolved;
pub use config::{RunConfig, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    SolverFailure = 1,
    ConditionsViolated = 2,
    ParseError = 64,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Parse(String),
    #[error("well-posedness conditions violated: {0}")]
    Conditions(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            CliError::Parse(_) => Status::ParseError,
            CliError::Conditions(_) => Status::ConditionsViolated,
            CliError::Solver(_) => Status::SolverFailure,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ConditionsViolated(s) => CliError::Conditions(s),
            Error::NotDivergenceFree { .. } | Error::NotMeanZero { .. } => CliError::Conditions(e.to_string()),
            Error::Syntax { .. } | Error::UnknownIdentifier { .. } | Error::InvalidArgument(_) => {
                CliError::Parse(e.to_string())
            }
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Solver(format!("i/o: {e}"))
    }
}

/// Command-line switches that are not part of the configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub deterministic: bool,
    pub override_conditions: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: Status,
    pub files: Vec<PathBuf>,
    pub message: String,
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    RunConfig::from_toml(&text)
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    r: Resolved,
    opts: &'a RunOptions,
    task: Task,
    dir: PathBuf,
    files: Vec<PathBuf>,
}

/// Runs `task`. Files written before a failure are kept; a violated
/// well-posedness check writes `conditions.json` before reporting status 2.
pub fn run(task: Task, cfg: &RunConfig, opts: &RunOptions) -> RunOutcome {
    let mut files = Vec::new();
    let result = run_inner(task, cfg, opts, &mut files);
    match result {
        Ok(message) => RunOutcome {
            status: Status::Ok,
            files,
            message,
        },
        Err(e) => RunOutcome {
            status: e.status(),
            files,
            message: e.to_string(),
        },
    }
}

fn run_inner(task: Task, cfg: &RunConfig, opts: &RunOptions, files: &mut Vec<PathBuf>) -> Result<String, CliError> {
    let r = cfg.resolve()?;
    let dir = opts.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    fs::create_dir_all(&dir)?;
    let mut ctx = Ctx {
        cfg,
        r,
        opts,
        task,
        dir,
        files: Vec::new(),
    };
    let path = ctx.path("config.toml");
    fs::write(&path, cfg.to_toml())?;
    ctx.files.push(path);
    let out = match task {
        Task::Mesh => task_mesh(&mut ctx),
        Task::Check => task_check(&mut ctx),
        Task::Solve => task_solve(&mut ctx),
        Task::Study => task_study(&mut ctx),
        Task::Export => task_export(&mut ctx),
    };
    files.append(&mut ctx.files);
    out
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let p = self.path(name);
        let f = File::create(&p)?;
        self.files.push(p);
        Ok(BufWriter::new(f))
    }

    fn names(&self) -> Vec<String> {
        self.files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect()
    }

    fn write_json(&mut self, name: &str, mut value: Value) -> Result<(), CliError> {
        let mut names = self.names();
        names.push(name.to_string());
        value["files"] = json!(names);
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &value).map_err(|e| CliError::Solver(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn header(&self) -> Value {
        json!({
            "task": self.task.name(),
            "seed": self.cfg.seed,
            "deterministic": self.opts.deterministic,
            "surface": self.cfg.surface,
        })
    }

    fn mesh(&self) -> Result<SurfaceMesh<f64>, CliError> {
        Ok(build_mesh(&self.r.atlas, self.r.preset)?)
    }

    fn solve_options(&self) -> SolveOptions<f64> {
        SolveOptions {
            tol: self.cfg.solver.tol,
            max_iter: self.cfg.solver.max_iter,
            mean_zero: self.cfg.problem.mean_zero,
            override_conditions: self.opts.override_conditions,
            recenter_load: false,
            div_free_threshold: self.cfg.solver.div_free_threshold,
        }
    }

    fn case(&self) -> Result<ManufacturedCase<f64>, CliError> {
        let exact = self
            .r
            .exact
            .clone()
            .ok_or_else(|| CliError::Parse("problem.exact is required".into()))?;
        let name = self.cfg.problem.exact.clone().unwrap_or_default();
        let case = match self.r.problem {
            Problem::Biharmonic => {
                let ev = self
                    .cfg
                    .problem
                    .eigenvalue
                    .ok_or_else(|| CliError::Parse("biharmonic studies need problem.eigenvalue".into()))?;
                verification::manufacture_biharmonic_with_seed(
                    &name,
                    &self.r.atlas,
                    self.r.preset,
                    exact,
                    ev,
                    self.cfg.seed,
                )?
            }
            p => verification::manufacture_with_seed(
                &name,
                &self.r.atlas,
                self.r.preset,
                exact,
                self.r.coeffs.clone(),
                p,
                self.cfg.seed,
            )?,
        };
        Ok(case)
    }
}

#[derive(Serialize)]
struct MeshSummary {
    vertices: usize,
    triangles: usize,
    edges: usize,
    euler_characteristic: i64,
    mesh_size: f64,
    area: f64,
}

fn summary(mesh: &SurfaceMesh<f64>) -> MeshSummary {
    MeshSummary {
        vertices: mesh.num_vertices(),
        triangles: mesh.num_triangles(),
        edges: mesh.num_edges(),
        euler_characteristic: mesh.euler_characteristic(),
        mesh_size: mesh.mesh_size(),
        area: mesh.total_area(),
    }
}

fn task_mesh(ctx: &mut Ctx) -> Result<String, CliError> {
    let mesh = ctx.mesh()?;
    let mut w = ctx.create("mesh.vtk")?;
    mesh_io::write_vtk(&mut w, &mesh, mesh_io::VtkFormat::PolyData, &[])?;
    w.flush()?;
    let mut w = ctx.create("vertices.csv")?;
    mesh_io::write_csv_vertices(&mut w, &mesh)?;
    w.flush()?;
    let mut w = ctx.create("triangles.csv")?;
    mesh_io::write_csv_triangles(&mut w, &mesh)?;
    w.flush()?;
    let mut v = ctx.header();
    v["mesh"] = json!(summary(&mesh));
    ctx.write_json("mesh.json", v)?;
    Ok(format!(
        "mesh: {} vertices, {} triangles",
        mesh.num_vertices(),
        mesh.num_triangles()
    ))
}

/// Checks that apply to the configured problem, as human-readable failures.
fn condition_failures(
    ctx: &Ctx,
    mesh: &SurfaceMesh<f64>,
    report: &ConditionReport<f64>,
) -> Result<(Vec<String>, Option<f64>), CliError> {
    let mut failures = Vec::new();
    if report.ellipticity.verdict == Verdict::Violated {
        failures.push(format!(
            "ellipticity: smallest tangential eigenvalue of A is {:e} (must be positive)",
            report.ellipticity.estimate
        ));
    }
    let mut relative = None;
    match ctx.r.problem {
        Problem::General if !ctx.cfg.problem.mean_zero => {
            if report.reaction_violated() {
                failures
                    .push("reaction: neither ∫(d w + b·∇w) ≥ λ∫_M w nor ∫(d w + c·∇w) ≥ λ∫_M w holds for w ≥ 0".into());
            }
        }
        Problem::DivFree => {
            let scale = solvers::div_free_scale(mesh, &ctx.r.coeffs.c)?;
            let rel = if scale > 0.0 {
                report.div_free_residual / scale
            } else {
                0.0
            };
            relative = Some(rel);
            let violated = match ctx.cfg.solver.div_free_threshold {
                Some(t) => report.div_free_residual > t,
                None => rel > solvers::DIV_FREE_RELATIVE_TOL,
            };
            if violated {
                failures.push(format!(
                    "divergence: c is not weakly divergence-free (max |∫ c·∇φ_i| = {:e}, relative {:.3})",
                    report.div_free_residual, rel
                ));
            }
        }
        _ => {}
    }
    Ok((failures, relative))
}

fn write_conditions(ctx: &mut Ctx, mesh: &SurfaceMesh<f64>) -> Result<Vec<String>, CliError> {
    let report = solvers::check_conditions(&ctx.r.coeffs, mesh)?;
    let (failures, relative) = condition_failures(ctx, mesh, &report)?;
    let mut v = ctx.header();
    v["problem"] = json!(ctx.r.problem);
    v["mesh"] = json!(summary(mesh));
    v["conditions"] = json!(report);
    v["div_free_relative"] = json!(relative);
    v["violated"] = json!(!failures.is_empty());
    v["overridden"] = json!(!failures.is_empty() && ctx.opts.override_conditions);
    v["failures"] = json!(failures);
    ctx.write_json("conditions.json", v)?;
    Ok(failures)
}

fn task_check(ctx: &mut Ctx) -> Result<String, CliError> {
    let mesh = ctx.mesh()?;
    let failures = write_conditions(ctx, &mesh)?;
    if failures.is_empty() {
        Ok("conditions hold".into())
    } else if ctx.opts.override_conditions {
        Ok(format!("conditions violated (overridden): {}", failures.join("; ")))
    } else {
        Err(CliError::Conditions(failures.join("; ")))
    }
}

fn solve(ctx: &Ctx, mesh: &SurfaceMesh<f64>, load: &Load<f64>) -> Result<SolveReport<f64>, Error> {
    let opts = ctx.solve_options();
    let c = &ctx.r.coeffs;
    match ctx.r.problem {
        Problem::LaplaceBeltrami => solvers::solve_laplace_beltrami(mesh, &c.diffusion, load, &opts),
        Problem::General => solvers::solve_general_elliptic(mesh, c, load, &opts),
        Problem::DivFree => solvers::solve_divfree_cd(mesh, &c.diffusion, &c.c, load, &opts),
        Problem::Biharmonic => solvers::solve_biharmonic(mesh, load, &opts),
    }
}

fn task_solve(ctx: &mut Ctx) -> Result<String, CliError> {
    let mesh = ctx.mesh()?;
    let case = match &ctx.r.exact {
        Some(_) => Some(ctx.case()?),
        None => None,
    };
    let load = match (&case, &ctx.r.load) {
        (Some(case), _) => case.load.clone(),
        (None, Some(f)) => f.clone(),
        (None, None) => return Err(CliError::Parse("problem.load or problem.exact is required".into())),
    };
    let mut report = match solve(ctx, &mesh, &Load::Scalar(load)) {
        Ok(r) => r,
        Err(e) => {
            let e = CliError::from(e);
            if matches!(e, CliError::Conditions(_)) {
                write_conditions(ctx, &mesh)?;
            }
            return Err(e);
        }
    };
    if ctx.opts.deterministic {
        report.seconds = 0.0;
    }
    let u = report.solution.values();
    let exact = case
        .as_ref()
        .map(|c| DiscreteField::interpolate(&mesh, &c.exact).into_values());
    let mut w = ctx.create("solution.csv")?;
    match &exact {
        Some(_) => writeln!(w, "index,x1,x2,x3,u,exact")?,
        None => writeln!(w, "index,x1,x2,x3,u")?,
    }
    for (i, x) in mesh.vertices().iter().enumerate() {
        write!(w, "{i},{:e},{:e},{:e},{:e}", x[0], x[1], x[2], u[i])?;
        match &exact {
            Some(e) => writeln!(w, ",{:e}", e[i])?,
            None => writeln!(w)?,
        }
    }
    w.flush()?;
    let mut data: Vec<(&str, &[f64])> = vec![("u", u)];
    if let Some(e) = &exact {
        data.push(("exact", e));
    }
    let mut w = ctx.create("solution.vtk")?;
    mesh_io::write_vtk(&mut w, &mesh, mesh_io::VtkFormat::PolyData, &data)?;
    w.flush()?;
    let errors = match &case {
        Some(c) => {
            let (l2, h1, energy) = verification::solution_errors(c, &mesh, &report.solution)?;
            json!({ "l2": l2, "h1": h1, "energy": energy })
        }
        None => Value::Null,
    };
    let mut v = ctx.header();
    v["problem"] = json!(ctx.r.problem);
    v["mesh"] = json!(summary(&mesh));
    v["solve"] = json!({
        "method": report.method,
        "iterations": report.iterations,
        "residual": report.residual,
        "stage_residuals": report.stage_residuals,
        "seconds": report.seconds,
        "multiplier": report.multiplier,
        "a_priori_ratio": report.a_priori_ratio,
        "coercivity_margin": report.coercivity_margin,
    });
    v["conditions"] = json!(report.conditions);
    v["errors"] = errors;
    v["oracle_error"] = json!(case.as_ref().map(|c| c.oracle_error));
    ctx.write_json("solve.json", v)?;
    Ok(format!(
        "{}: {} iterations, relative residual {:e}",
        report.method, report.iterations, report.residual
    ))
}

fn task_study(ctx: &mut Ctx) -> Result<String, CliError> {
    let case = ctx.case()?;
    let s = &ctx.cfg.study;
    let opts = StudyOptions {
        solve: SolveOptions {
            recenter_load: true,
            ..ctx.solve_options()
        },
        windows: RateWindows {
            l2: (s.l2_window[0], s.l2_window[1]),
            h1: (s.h1_window[0], s.h1_window[1]),
        },
        parallel: !ctx.opts.deterministic,
    };
    let mut report: ConvergenceReport<f64> = verification::convergence_study(&case, s.levels, &opts)?;
    if ctx.opts.deterministic {
        report.strip_timing();
    }
    let mut w = ctx.create("study.csv")?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let mut v = ctx.header();
    v["report"] = json!(report);
    ctx.write_json("study.json", v)?;
    if let Some(f) = &report.failure {
        return Err(CliError::Solver(f.clone()));
    }
    let rate = |r: Option<f64>| r.map_or("n/a".to_string(), |r| format!("{r:.3}"));
    Ok(format!(
        "study {}: L2 rate {}, H1 rate {}",
        if report.passed {
            "passed"
        } else {
            "outside rate windows"
        },
        rate(report.rate_l2),
        rate(report.rate_h1)
    ))
}

fn matrix_summary(m: &CsrMatrix<f64>) -> Value {
    json!({
        "rows": m.nrows(),
        "cols": m.ncols(),
        "nnz": m.nnz(),
        "symmetric": m.is_symmetric(1e-13 * m.max_abs().max(f64::MIN_POSITIVE)),
    })
}

fn write_vector_market<W: Write>(w: &mut W, v: &[f64]) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} 1", v.len())?;
    for x in v {
        writeln!(w, "{x:e}")?;
    }
    Ok(())
}

fn task_export(ctx: &mut Ctx) -> Result<String, CliError> {
    let mesh = ctx.mesh()?;
    let exec = if ctx.opts.deterministic {
        Execution::Serial
    } else {
        Execution::Parallel
    };
    let c = &ctx.r.coeffs;
    let operator = match ctx.r.problem {
        Problem::LaplaceBeltrami => assembly::assemble_stiffness_with(&mesh, &c.diffusion, exec)?,
        Problem::Biharmonic => {
            assembly::assemble_stiffness_with(&mesh, &gamma_core::field::AmbientMatrixField::identity(), exec)?
        }
        Problem::DivFree => assembly::assemble_stiffness_with(&mesh, &c.diffusion, exec)?
            .add(&assembly::assemble_convection_c_with(&mesh, &c.c, c.policy, exec)?)?,
        Problem::General => assembly::assemble_operator(&mesh, c)?,
    };
    let mass = assembly::assemble_mass_with(&mesh, &gamma_core::field::AmbientScalarField::constant(1.0), exec)?;
    let mut w = ctx.create("operator.mtx")?;
    operator.write_matrix_market(&mut w)?;
    w.flush()?;
    let mut w = ctx.create("mass.mtx")?;
    mass.write_matrix_market(&mut w)?;
    w.flush()?;
    let load = match (&ctx.r.exact, &ctx.r.load) {
        (Some(_), _) => Some(ctx.case()?.load),
        (None, Some(f)) => Some(f.clone()),
        (None, None) => None,
    };
    if let Some(f) = load {
        let l = assembly::assemble_load(&mesh, &f)?;
        let mut w = ctx.create("load.mtx")?;
        write_vector_market(&mut w, &l)?;
        w.flush()?;
    }
    let mut constraint = Value::Null;
    if ctx.r.problem.mean_zero() || ctx.cfg.problem.mean_zero {
        let m = assembly::vertex_masses(&mesh)?;
        let mut w = ctx.create("constraint.mtx")?;
        write_vector_market(&mut w, &m)?;
        w.flush()?;
        constraint = json!({ "length": m.len() });
    }
    let mut v = ctx.header();
    v["problem"] = json!(ctx.r.problem);
    v["mesh"] = json!(summary(&mesh));
    v["operator"] = matrix_summary(&operator);
    v["mass"] = matrix_summary(&mass);
    v["constraint"] = constraint;
    ctx.write_json("export.json", v)?;
    Ok(format!(
        "exported {}×{} operator with {} nonzeros",
        operator.nrows(),
        operator.ncols(),
        operator.nnz()
    ))
}
