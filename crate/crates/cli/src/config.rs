//! Run configuration.
//!
//! A configuration is a TOML document:
//!
//! ```toml
//! task = "study"                # optional; the command line task takes precedence
//! seed = 20240611               # oracle sampling seed
//!
//! [surface]
//! kind = "torus"                # "sphere" (radius) or "torus" (major, minor)
//! major = 2.0
//! minor = 1.0
//! resolution = 8                # sphere: subdivisions; torus: n × 3n grid
//!
//! [problem]
//! kind = "general"              # laplace-beltrami | general | div-free | biharmonic
//! load = "2*x3"                 # right-hand side f
//! exact = "x3"                  # exact solution; replaces `load` by manufactured data
//! eigenvalue = 2.0              # biharmonic with `exact`: -Δu* = eigenvalue u*
//! mean_zero = false             # general problem posed on the mean-zero space
//!
//! [coefficients]
//! diffusion = { identity_plus = "0.5*x1^2" }   # (1 + s) I
//! # diffusion = { symmetric = ["a11", "a12", "a13", "a22", "a23", "a33"] }
//! lambda = 1.0                  # claimed ellipticity constant
//! b = ["0", "0", "0"]           # or a builtin: { rotation = [0.0, 0.0, 1.0] }
//! c = { rotation = [0.0, 0.0, 1.0] }
//! reaction = "1"
//! policy = "project-on-evaluate"  # or "as-given"
//!
//! [solver]
//! tol = 1e-10
//! max_iter = 5000
//! div_free_threshold = 1e-3
//!
//! [study]
//! levels = 4
//! l2_window = [1.9, 2.1]
//! h1_window = [0.9, 1.1]
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Expressions are over `x1`, `x2`, `x3` with `+ - * / ^`, parentheses,
//! `sin`, `cos`, `exp`, `sqrt`, `max` and the constants `pi`, `e`.

use std::path::PathBuf;

use gamma_core::assembly::{CoefficientSet, Tangentiality};
use gamma_core::expr::{parse_expression, parse_matrix_field, parse_scalar_field, parse_vector_field};
use gamma_core::field::{AmbientMatrixField, AmbientScalarField, AmbientVectorField};
use gamma_core::geometry::Atlas;
use gamma_core::mesh::MeshPreset;
use gamma_core::verification::{Problem, ORACLE_SEED};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Solve,
    Study,
    Check,
    Mesh,
    Export,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Solve => "solve",
            Task::Study => "study",
            Task::Check => "check",
            Task::Mesh => "mesh",
            Task::Export => "export",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub surface: SurfaceConfig,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub coefficients: CoefficientConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub study: StudyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    ORACLE_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SurfaceConfig {
    Sphere {
        #[serde(default = "one")]
        radius: f64,
        resolution: usize,
    },
    Torus {
        major: f64,
        minor: f64,
        resolution: usize,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: Problem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalue: Option<f64>,
    #[serde(default)]
    pub mean_zero: bool,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            kind: Problem::LaplaceBeltrami,
            load: None,
            exact: None,
            eigenvalue: None,
            mean_zero: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiffusionSpec {
    IdentityPlus {
        identity_plus: String,
    },
    /// Upper triangle `a11 a12 a13 a22 a23 a33`.
    Symmetric {
        symmetric: [String; 6],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Components([String; 3]),
    /// `axis × x`
    Rotation {
        rotation: [f64; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusion: Option<DiffusionSpec>,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<VectorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<VectorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reaction: Option<String>,
    #[serde(default)]
    pub policy: Tangentiality,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self {
            diffusion: None,
            lambda: 1.0,
            b: None,
            c: None,
            reaction: None,
            policy: Tangentiality::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub div_free_threshold: Option<f64>,
}

fn default_tol() -> f64 {
    gamma_core::solvers::DEFAULT_TOL
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: None,
            div_free_threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_l2")]
    pub l2_window: [f64; 2],
    #[serde(default = "default_h1")]
    pub h1_window: [f64; 2],
}

fn default_levels() -> usize {
    4
}

fn default_l2() -> [f64; 2] {
    [1.9, 2.1]
}

fn default_h1() -> [f64; 2] {
    [0.9, 1.1]
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            levels: default_levels(),
            l2_window: default_l2(),
            h1_window: default_h1(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

/// Configuration with every expression parsed and every parameter checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub atlas: Atlas<f64>,
    pub preset: MeshPreset,
    pub problem: Problem,
    pub coeffs: CoefficientSet<f64>,
    pub load: Option<AmbientScalarField<f64>>,
    pub exact: Option<AmbientScalarField<f64>>,
}

fn parse_err(what: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Parse(format!("{what}: {e}"))
}

fn scalar(what: &str, text: &str) -> Result<AmbientScalarField<f64>, CliError> {
    parse_scalar_field(text).map_err(|e| parse_err(what, e))
}

fn vector(what: &str, spec: &VectorSpec) -> Result<AmbientVectorField<f64>, CliError> {
    match spec {
        VectorSpec::Components([a, b, c]) => parse_vector_field([a, b, c]).map_err(|e| parse_err(what, e)),
        VectorSpec::Rotation { rotation } => {
            finite(what, rotation)?;
            Ok(AmbientVectorField::rotation(*rotation))
        }
    }
}

fn finite(what: &str, values: &[f64]) -> Result<(), CliError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Parse(format!("{what}: parameters must be finite")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable in TOML")
    }

    /// Parses all expressions and validates the numeric parameters.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let (atlas, preset) = match self.surface {
            SurfaceConfig::Sphere { radius, resolution } => {
                finite("surface.radius", &[radius])?;
                if radius <= 0.0 {
                    return Err(CliError::Parse("surface.radius must be positive".into()));
                }
                let atlas = Atlas::sphere(radius).map_err(|e| parse_err("surface", e))?;
                (
                    atlas,
                    MeshPreset::SphereIcosahedral {
                        subdivisions: resolution,
                    },
                )
            }
            SurfaceConfig::Torus {
                major,
                minor,
                resolution,
            } => {
                finite("surface", &[major, minor])?;
                if !(major > minor && minor > 0.0) {
                    return Err(CliError::Parse("torus requires major > minor > 0".into()));
                }
                if resolution < 3 {
                    return Err(CliError::Parse("torus resolution must be at least 3".into()));
                }
                let atlas = Atlas::torus(major, minor).map_err(|e| parse_err("surface", e))?;
                (
                    atlas,
                    MeshPreset::from_name("torus", resolution).map_err(|e| parse_err("surface", e))?,
                )
            }
        };
        let c = &self.coefficients;
        finite("coefficients.lambda", &[c.lambda])?;
        let diffusion = match &c.diffusion {
            None => AmbientMatrixField::identity(),
            Some(DiffusionSpec::IdentityPlus { identity_plus }) => {
                parse_expression(identity_plus).map_err(|e| parse_err("coefficients.diffusion", e))?;
                AmbientMatrixField::scalar_identity(scalar(
                    "coefficients.diffusion",
                    &format!("1 + ({identity_plus})"),
                )?)
            }
            Some(DiffusionSpec::Symmetric { symmetric: s }) => {
                let e = |i: usize| s[i].as_str();
                parse_matrix_field([[e(0), e(1), e(2)], [e(1), e(3), e(4)], [e(2), e(4), e(5)]])
                    .map_err(|err| parse_err("coefficients.diffusion", err))?
            }
        };
        let mut coeffs = CoefficientSet::laplace().with_diffusion(diffusion, c.lambda);
        coeffs.policy = c.policy;
        if let Some(b) = &c.b {
            coeffs = coeffs.with_b(vector("coefficients.b", b)?);
        }
        if let Some(cv) = &c.c {
            coeffs = coeffs.with_c(vector("coefficients.c", cv)?);
        }
        if let Some(d) = &c.reaction {
            coeffs = coeffs.with_reaction(scalar("coefficients.reaction", d)?);
        }
        let p = &self.problem;
        let load = p.load.as_deref().map(|t| scalar("problem.load", t)).transpose()?;
        let exact = p.exact.as_deref().map(|t| scalar("problem.exact", t)).transpose()?;
        if let Some(ev) = p.eigenvalue {
            finite("problem.eigenvalue", &[ev])?;
        }
        if p.mean_zero && p.kind != Problem::General {
            return Err(CliError::Parse(
                "problem.mean_zero applies to the general problem only".into(),
            ));
        }
        let s = &self.solver;
        finite("solver", &[s.tol])?;
        if s.tol <= 0.0 {
            return Err(CliError::Parse("solver.tol must be positive".into()));
        }
        if let Some(t) = s.div_free_threshold {
            finite("solver.div_free_threshold", &[t])?;
        }
        finite("study", &[self.study.l2_window[0], self.study.l2_window[1]])?;
        finite("study", &[self.study.h1_window[0], self.study.h1_window[1]])?;
        Ok(Resolved {
            atlas,
            preset,
            problem: p.kind,
            coeffs,
            load,
            exact,
        })
    }
}
