//! P1 Galerkin assembly of the weak forms on a [`SurfaceMesh`].
//!
//! For hat functions `φ_i` the matrices are
//!
//! * stiffness `K_A[i][j] = ∫ A ∇φ_j · ∇φ_i`,
//! * convection `G_b[i][j] = ∫ φ_j (b · ∇φ_i)` and `G_c[i][j] = ∫ (c · ∇φ_j) φ_i`,
//! * mass `M_d[i][j] = ∫ d φ_j φ_i`,
//!
//! so that the full operator of `-div(A∇u + u b) + c·∇u + d u` is
//! `K_A + G_b + G_c + M_d`. Coefficients are evaluated at the quadrature
//! points of the affine elements (no lifting to the exact surface).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{AmbientMatrixField, AmbientScalarField, AmbientVectorField};
use crate::linalg::{self, Mat3, Vec3};
use crate::mesh::{ElementGeometry, MeshId, SurfaceMesh};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// Symmetric 3-point rule on triangles, exact for polynomials of degree 2.
/// Barycentric coordinates `(2/3, 1/6, 1/6)` and permutations, equal weights.
pub fn quadrature_barycentric<T: Real>() -> [[T; 3]; 3] {
    let (a, b) = (T::c(2.0) / T::c(3.0), T::one() / T::c(6.0));
    [[a, b, b], [b, a, b], [b, b, a]]
}

/// Weight of each quadrature point relative to the element area.
pub fn quadrature_weight<T: Real>() -> T {
    T::one() / T::c(3.0)
}

/// Physical quadrature points of triangle `t`.
pub fn quadrature_points<T: Real>(mesh: &SurfaceMesh<T>, t: usize) -> [Vec3<T>; 3] {
    let tri = mesh.triangles()[t];
    let x = tri.map(|v| mesh.vertices()[v]);
    quadrature_barycentric::<T>().map(|l| {
        let mut p = linalg::zero3();
        for k in 0..3 {
            p = linalg::axpy(&p, l[k], &x[k]);
        }
        p
    })
}

/// How vector and matrix coefficients are made tangential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tangentiality {
    /// Replace `b`, `c` by `P b`, `P c` and use `A` only through `P A P`.
    #[default]
    ProjectOnEvaluate,
    /// Use the coefficients as given.
    AsGiven,
}

/// Coefficients `(A, b, c, d)` of `-div(A∇u + u b) + c·∇u + d u = f`.
#[derive(Debug, Clone)]
pub struct CoefficientSet<T> {
    pub diffusion: AmbientMatrixField<T>,
    pub b: AmbientVectorField<T>,
    pub c: AmbientVectorField<T>,
    pub reaction: AmbientScalarField<T>,
    /// Claimed tangential ellipticity constant.
    pub lambda: T,
    pub policy: Tangentiality,
}

impl<T: Real> CoefficientSet<T> {
    /// `A = I`, `b = c = 0`, `d = 0`.
    pub fn laplace() -> Self {
        Self {
            diffusion: AmbientMatrixField::identity(),
            b: AmbientVectorField::zero(),
            c: AmbientVectorField::zero(),
            reaction: AmbientScalarField::zero(),
            lambda: T::one(),
            policy: Tangentiality::default(),
        }
    }

    pub fn with_diffusion(mut self, a: AmbientMatrixField<T>, lambda: T) -> Self {
        self.diffusion = a;
        self.lambda = lambda;
        self
    }

    pub fn with_b(mut self, b: AmbientVectorField<T>) -> Self {
        self.b = b;
        self
    }

    pub fn with_c(mut self, c: AmbientVectorField<T>) -> Self {
        self.c = c;
        self
    }

    pub fn with_reaction(mut self, d: AmbientScalarField<T>) -> Self {
        self.reaction = d;
        self
    }

    /// Coefficients of the adjoint problem: `(Aᵀ, c, b, d)`.
    pub fn adjoint(&self) -> Self {
        Self {
            diffusion: self.diffusion.transposed(),
            b: self.c.clone(),
            c: self.b.clone(),
            reaction: self.reaction.clone(),
            lambda: self.lambda,
            policy: self.policy,
        }
    }
}

/// Piecewise-linear function given by its vertex values.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DiscreteField<T> {
    mesh: MeshId,
    values: Vec<T>,
}

impl<T: Real> DiscreteField<T> {
    pub fn new(mesh: &SurfaceMesh<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::Dimension(format!(
                "{} values for {} vertices",
                values.len(),
                mesh.num_vertices()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite field value".into()));
        }
        Ok(Self {
            mesh: mesh.id(),
            values,
        })
    }

    pub fn zeros(mesh: &SurfaceMesh<T>) -> Self {
        Self {
            mesh: mesh.id(),
            values: vec![T::zero(); mesh.num_vertices()],
        }
    }

    /// Vertex interpolant of an ambient function.
    pub fn interpolate(mesh: &SurfaceMesh<T>, f: &AmbientScalarField<T>) -> Self {
        Self {
            mesh: mesh.id(),
            values: mesh.vertices().iter().map(|x| f.eval(x)).collect(),
        }
    }

    pub fn mesh_id(&self) -> MeshId {
        self.mesh
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    fn check(&self, mesh: &SurfaceMesh<T>) -> Result<()> {
        if self.mesh != mesh.id() {
            return Err(Error::Contract("field belongs to a different mesh".into()));
        }
        Ok(())
    }
}

/// Linear system with an optional mean-value constraint row.
#[derive(Debug, Clone)]
pub struct SparseSystem<T> {
    pub matrix: CsrMatrix<T>,
    /// Weights `m_i = ∫ φ_i`; when present the unknown is constrained to `mᵀu = 0`
    /// through a Lagrange multiplier.
    pub constraint: Option<Vec<T>>,
    pub rhs: Vec<T>,
}

impl<T: Real> SparseSystem<T> {
    pub fn new(matrix: CsrMatrix<T>, rhs: Vec<T>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || rhs.len() != matrix.nrows() {
            return Err(Error::Dimension(
                "system must be square and match the right-hand side".into(),
            ));
        }
        Ok(Self {
            matrix,
            constraint: None,
            rhs,
        })
    }

    pub fn with_constraint(mut self, weights: Vec<T>) -> Result<Self> {
        if weights.len() != self.rhs.len() {
            return Err(Error::Dimension("constraint row length".into()));
        }
        self.constraint = Some(weights);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }
}

/// Element loop execution mode. Both modes give bitwise identical results
/// because local contributions are always accumulated in element order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

type Local<T> = [[T; 3]; 3];

fn assemble_with<T, F>(mesh: &SurfaceMesh<T>, exec: Execution, local: F) -> Result<CsrMatrix<T>>
where
    T: Real,
    F: Fn(usize, &ElementGeometry<T>) -> Result<Local<T>> + Sync,
{
    let geos = mesh.element_geometries()?;
    let compute = |t: usize| local(t, &geos[t]);
    let locals: Vec<Local<T>> = match exec {
        Execution::Serial => (0..geos.len()).map(compute).collect::<Result<_>>()?,
        Execution::Parallel => (0..geos.len()).into_par_iter().map(compute).collect::<Result<_>>()?,
    };
    let mut trip = Vec::with_capacity(9 * locals.len());
    for (tri, loc) in mesh.triangles().iter().zip(&locals) {
        for a in 0..3 {
            for b in 0..3 {
                trip.push((tri[a], tri[b], loc[a][b]));
            }
        }
    }
    let n = mesh.num_vertices();
    CsrMatrix::from_triplets(n, n, &trip)
}

fn assemble_vector_with<T, F>(mesh: &SurfaceMesh<T>, exec: Execution, local: F) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(usize, &ElementGeometry<T>) -> [T; 3] + Sync,
{
    let geos = mesh.element_geometries()?;
    let compute = |t: usize| local(t, &geos[t]);
    let locals: Vec<[T; 3]> = match exec {
        Execution::Serial => (0..geos.len()).map(compute).collect(),
        Execution::Parallel => (0..geos.len()).into_par_iter().map(compute).collect(),
    };
    let mut out = vec![T::zero(); mesh.num_vertices()];
    for (tri, loc) in mesh.triangles().iter().zip(&locals) {
        for a in 0..3 {
            out[tri[a]] += loc[a];
        }
    }
    Ok(out)
}

/// Tolerance below zero tolerated for the tangential eigenvalue of `A`
/// before it is reported as an ellipticity violation.
fn ellipticity_slack<T: Real>(a: &Mat3<T>) -> T {
    T::c(1e-12) * T::one().max(linalg::max_abs3(a))
}

/// Stiffness matrix `∫ A ∇φ_j · ∇φ_i`.
///
/// Fails with a coefficient error when `A` has a negative tangential
/// eigenvalue at some quadrature point. Semidefinite `A` (including zero) is
/// accepted so that pure reaction problems can be assembled.
pub fn assemble_stiffness<T: Real>(mesh: &SurfaceMesh<T>, a: &AmbientMatrixField<T>) -> Result<CsrMatrix<T>> {
    assemble_stiffness_with(mesh, a, Execution::default())
}

pub fn assemble_stiffness_with<T: Real>(
    mesh: &SurfaceMesh<T>,
    a: &AmbientMatrixField<T>,
    exec: Execution,
) -> Result<CsrMatrix<T>> {
    let w = quadrature_weight::<T>();
    assemble_with(mesh, exec, |t, g| {
        let mut avg = [[T::zero(); 3]; 3];
        for x in quadrature_points(mesh, t) {
            let ax = a.eval(&x);
            let lam = linalg::min_tangential_eigenvalue(&ax, &g.normal);
            if lam < -ellipticity_slack(&ax) {
                return Err(Error::Coefficient(format!(
                    "diffusion matrix not elliptic on triangle {t}: tangential eigenvalue {:e}",
                    lam.to_f64_lossy()
                )));
            }
            avg = linalg::mat_add(&avg, &linalg::mat_scale(w, &ax));
        }
        // gradients are constant on the element; only the mean of A matters
        let mut loc = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                loc[i][j] = g.area * linalg::dot(&g.gradients[i], &linalg::mat_vec(&avg, &g.gradients[j]));
            }
        }
        Ok(loc)
    })
}

/// `G_b[i][j] = ∫ φ_j (b · ∇φ_i)`.
pub fn assemble_convection_b<T: Real>(mesh: &SurfaceMesh<T>, b: &AmbientVectorField<T>) -> Result<CsrMatrix<T>> {
    assemble_convection_b_with(mesh, b, Tangentiality::default(), Execution::default())
}

pub fn assemble_convection_b_with<T: Real>(
    mesh: &SurfaceMesh<T>,
    b: &AmbientVectorField<T>,
    policy: Tangentiality,
    exec: Execution,
) -> Result<CsrMatrix<T>> {
    let local = convection_local(mesh, b, policy);
    assemble_with(mesh, exec, |t, g| {
        let l = local(t, g);
        // l[i][j] = ∫ (b·∇φ_j) φ_i; the b-form is its transpose
        Ok(std::array::from_fn(|i| std::array::from_fn(|j| l[j][i])))
    })
}

/// `G_c[i][j] = ∫ (c · ∇φ_j) φ_i`.
pub fn assemble_convection_c<T: Real>(mesh: &SurfaceMesh<T>, c: &AmbientVectorField<T>) -> Result<CsrMatrix<T>> {
    assemble_convection_c_with(mesh, c, Tangentiality::default(), Execution::default())
}

pub fn assemble_convection_c_with<T: Real>(
    mesh: &SurfaceMesh<T>,
    c: &AmbientVectorField<T>,
    policy: Tangentiality,
    exec: Execution,
) -> Result<CsrMatrix<T>> {
    let local = convection_local(mesh, c, policy);
    assemble_with(mesh, exec, |t, g| Ok(local(t, g)))
}

/// Local `∫ (w·∇φ_j) φ_i`.
fn convection_local<'a, T: Real>(
    mesh: &'a SurfaceMesh<T>,
    w: &'a AmbientVectorField<T>,
    policy: Tangentiality,
) -> impl Fn(usize, &ElementGeometry<T>) -> Local<T> + Sync + 'a {
    let bary = quadrature_barycentric::<T>();
    let wq = quadrature_weight::<T>();
    move |t, g| {
        let mut loc = [[T::zero(); 3]; 3];
        for (q, x) in quadrature_points(mesh, t).iter().enumerate() {
            let mut v = w.eval(x);
            if policy == Tangentiality::ProjectOnEvaluate {
                v = linalg::axpy(&v, -linalg::dot(&v, &g.normal), &g.normal);
            }
            for j in 0..3 {
                let flux = linalg::dot(&v, &g.gradients[j]);
                for i in 0..3 {
                    loc[i][j] += g.area * wq * flux * bary[q][i];
                }
            }
        }
        loc
    }
}

/// `M_d[i][j] = ∫ d φ_j φ_i`.
pub fn assemble_mass<T: Real>(mesh: &SurfaceMesh<T>, d: &AmbientScalarField<T>) -> Result<CsrMatrix<T>> {
    assemble_mass_with(mesh, d, Execution::default())
}

pub fn assemble_mass_with<T: Real>(
    mesh: &SurfaceMesh<T>,
    d: &AmbientScalarField<T>,
    exec: Execution,
) -> Result<CsrMatrix<T>> {
    let bary = quadrature_barycentric::<T>();
    let wq = quadrature_weight::<T>();
    assemble_with(mesh, exec, |t, g| {
        let mut loc = [[T::zero(); 3]; 3];
        for (q, x) in quadrature_points(mesh, t).iter().enumerate() {
            let dv = d.eval(x);
            for i in 0..3 {
                for j in 0..3 {
                    loc[i][j] += g.area * wq * dv * bary[q][i] * bary[q][j];
                }
            }
        }
        Ok(loc)
    })
}

/// Unit-coefficient mass matrix `M_1`.
pub fn mass_matrix<T: Real>(mesh: &SurfaceMesh<T>) -> Result<CsrMatrix<T>> {
    assemble_mass(mesh, &AmbientScalarField::constant(T::one()))
}

/// Laplacian stiffness `K_I`.
pub fn laplace_stiffness<T: Real>(mesh: &SurfaceMesh<T>) -> Result<CsrMatrix<T>> {
    assemble_stiffness(mesh, &AmbientMatrixField::identity())
}

/// Full operator `K_A + G_b + G_c + M_d`.
pub fn assemble_operator<T: Real>(mesh: &SurfaceMesh<T>, coeffs: &CoefficientSet<T>) -> Result<CsrMatrix<T>> {
    let exec = Execution::default();
    let k = assemble_stiffness_with(mesh, &coeffs.diffusion, exec)?;
    let gb = assemble_convection_b_with(mesh, &coeffs.b, coeffs.policy, exec)?;
    let gc = assemble_convection_c_with(mesh, &coeffs.c, coeffs.policy, exec)?;
    let m = assemble_mass_with(mesh, &coeffs.reaction, exec)?;
    k.add(&gb)?.add(&gc)?.add(&m)
}

/// Load vector `∫ f φ_i`.
pub fn assemble_load<T: Real>(mesh: &SurfaceMesh<T>, f: &AmbientScalarField<T>) -> Result<Vec<T>> {
    let bary = quadrature_barycentric::<T>();
    let wq = quadrature_weight::<T>();
    assemble_vector_with(mesh, Execution::default(), |t, g| {
        let mut loc = [T::zero(); 3];
        for (q, x) in quadrature_points(mesh, t).iter().enumerate() {
            let fv = f.eval(x);
            for i in 0..3 {
                loc[i] += g.area * wq * fv * bary[q][i];
            }
        }
        loc
    })
}

/// Divergence-form load `-∫ F · ∇φ_i`, the discrete pairing of `div F`.
/// The entries always sum to zero.
pub fn assemble_load_div<T: Real>(mesh: &SurfaceMesh<T>, big_f: &AmbientVectorField<T>) -> Result<Vec<T>> {
    let wq = quadrature_weight::<T>();
    assemble_vector_with(mesh, Execution::default(), |t, g| {
        let mut loc = [T::zero(); 3];
        for x in quadrature_points(mesh, t).iter() {
            let fv = big_f.eval(x);
            for i in 0..3 {
                loc[i] -= g.area * wq * linalg::dot(&fv, &g.gradients[i]);
            }
        }
        loc
    })
}

/// Mass weights `m_i = ∫ φ_i = (M_1 1)_i`; they sum to the mesh area.
pub fn vertex_masses<T: Real>(mesh: &SurfaceMesh<T>) -> Result<Vec<T>> {
    let third = T::one() / T::c(3.0);
    assemble_vector_with(mesh, Execution::Serial, |_, g| [g.area * third; 3])
}

/// Unnormalized mean `∫ u_h = 1ᵀ M_1 u`.
pub fn mean_value<T: Real>(mesh: &SurfaceMesh<T>, field: &DiscreteField<T>) -> Result<T> {
    field.check(mesh)?;
    let m = vertex_masses(mesh)?;
    Ok(linalg::vdot(&m, field.values()))
}

/// Average `∫ u_h / |Γ_h|`.
pub fn mean_value_normalized<T: Real>(mesh: &SurfaceMesh<T>, field: &DiscreteField<T>) -> Result<T> {
    Ok(mean_value(mesh, field)? / mesh.total_area())
}

/// Discrete `W^{m,p}` norm, `m ∈ {0, 1}`:
/// `(‖u‖_{L^p}^p + m ‖∇_Γ u‖_{L^p}^p)^{1/p}` on the piecewise flat surface.
pub fn discrete_norm<T: Real>(mesh: &SurfaceMesh<T>, field: &DiscreteField<T>, m: u32, p: T) -> Result<T> {
    field.check(mesh)?;
    if !(p > T::one()) || !p.is_finite() {
        return Err(Error::InvalidArgument("norm exponent must satisfy 1 < p < ∞".into()));
    }
    if m > 1 {
        return Err(Error::InvalidArgument("only m ∈ {0, 1} is supported".into()));
    }
    let u = field.values();
    let bary = quadrature_barycentric::<T>();
    let wq = quadrature_weight::<T>();
    let mut total = T::zero();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = mesh.element_geometry(t)?;
        for l in bary.iter() {
            let v = l[0] * u[tri[0]] + l[1] * u[tri[1]] + l[2] * u[tri[2]];
            total += g.area * wq * v.abs().powf(p);
        }
        if m == 1 {
            let mut grad = linalg::zero3();
            for k in 0..3 {
                grad = linalg::axpy(&grad, u[tri[k]], &g.gradients[k]);
            }
            total += g.area * linalg::norm(&grad).powf(p);
        }
    }
    Ok(total.powf(T::one() / p))
}

/// `‖·‖_{L^p}` of an ambient function sampled at the quadrature points.
pub fn ambient_lp_norm<T: Real>(mesh: &SurfaceMesh<T>, f: &AmbientScalarField<T>, p: T) -> Result<T> {
    let wq = quadrature_weight::<T>();
    let mut total = T::zero();
    for t in 0..mesh.num_triangles() {
        let g = mesh.element_geometry(t)?;
        for x in quadrature_points(mesh, t) {
            total += g.area * wq * f.eval(&x).abs().powf(p);
        }
    }
    Ok(total.powf(T::one() / p))
}

/// Minimum over quadrature points of the smallest eigenvalue of `A`
/// restricted to the element tangent plane.
pub fn sampled_ellipticity<T: Real>(mesh: &SurfaceMesh<T>, a: &AmbientMatrixField<T>) -> Result<T> {
    let mut lam = T::infinity();
    for t in 0..mesh.num_triangles() {
        let g = mesh.element_geometry(t)?;
        for x in quadrature_points(mesh, t) {
            lam = lam.min(linalg::min_tangential_eigenvalue(&a.eval(&x), &g.normal));
        }
    }
    Ok(lam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Atlas;
    use crate::mesh::{build_mesh, MeshPreset};

    fn right_triangle() -> SurfaceMesh<f64> {
        SurfaceMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]]).unwrap()
    }

    fn sphere(level: usize) -> SurfaceMesh<f64> {
        let atlas = Atlas::sphere(1.0).unwrap();
        build_mesh(&atlas, MeshPreset::SphereIcosahedral { subdivisions: level }).unwrap()
    }

    #[test]
    fn quadrature_is_exact_for_quadratics() {
        // ∫ over the reference triangle of λ_i λ_j = (1 + δ_ij) / 12 * 2 * area
        let bary = quadrature_barycentric::<f64>();
        for i in 0..3 {
            for j in 0..3 {
                let q: f64 = bary.iter().map(|l| l[i] * l[j] / 3.0).sum();
                let exact = if i == j { 1.0 / 6.0 } else { 1.0 / 12.0 };
                assert!((q - exact).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn right_triangle_stiffness() {
        let k = assemble_stiffness(&right_triangle(), &AmbientMatrixField::identity()).unwrap();
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.get(i, j) - expected[i][j]).abs() < 1e-15);
            }
        }
        let k2 = assemble_stiffness(&right_triangle(), &AmbientMatrixField::identity().scaled(2.0)).unwrap();
        assert_eq!(k2.max_abs_diff(&k.scaled(2.0)).unwrap(), 0.0);
    }

    #[test]
    fn negative_diffusion_rejected() {
        let a = AmbientMatrixField::identity().scaled(-1.0);
        assert!(matches!(
            assemble_stiffness(&right_triangle(), &a),
            Err(Error::Coefficient(_))
        ));
        // semidefinite is accepted
        assert!(assemble_stiffness(&right_triangle(), &AmbientMatrixField::zero()).is_ok());
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let mesh = sphere(2);
        let a = crate::expr::parse_matrix_field::<f64>([
            ["2 + x1^2", "x3", "0"],
            ["x3", "1.5", "0.1*x2"],
            ["0", "0.1*x2", "3"],
        ])
        .unwrap();
        let k = assemble_stiffness(&mesh, &a).unwrap();
        let scale = k.norm_inf();
        for s in k.row_sums() {
            assert!(s.abs() <= 1e-12 * scale);
        }
        let ki = laplace_stiffness(&mesh).unwrap();
        assert!(ki.is_symmetric(1e-12));
    }

    #[test]
    fn mass_examples() {
        let m = mass_matrix(&right_triangle()).unwrap();
        let t = 0.5;
        for i in 0..3 {
            for j in 0..3 {
                let e = t / 12.0 * if i == j { 2.0 } else { 1.0 };
                assert!((m.get(i, j) - e).abs() < 1e-15);
            }
        }
        let z = assemble_mass(&right_triangle(), &AmbientScalarField::zero()).unwrap();
        assert_eq!(z.max_abs(), 0.0);

        let mesh = sphere(3);
        let m = mass_matrix(&mesh).unwrap();
        let ones = vec![1.0; mesh.num_vertices()];
        let total = linalg::vdot(&ones, &m.mul_vec(&ones));
        assert!((total - mesh.total_area()).abs() < 1e-12);
        assert!((total - 4.0 * std::f64::consts::PI).abs() / (4.0 * std::f64::consts::PI) < 1e-2);
        assert!(m.is_symmetric(1e-15));
    }

    #[test]
    fn convection_examples() {
        let tri = right_triangle();
        let gb = assemble_convection_b(&tri, &AmbientVectorField::zero()).unwrap();
        assert_eq!(gb.max_abs(), 0.0);
        // b = e1: G_b[i][j] = (∂1 φ_i) * area / 3
        let gb = assemble_convection_b(&tri, &AmbientVectorField::constant([1.0, 0.0, 0.0])).unwrap();
        let d1 = [-1.0, 1.0, 0.0];
        for i in 0..3 {
            for j in 0..3 {
                assert!((gb.get(i, j) - d1[i] * 0.5 / 3.0).abs() < 1e-15);
            }
        }
        let gc = assemble_convection_c(&tri, &AmbientVectorField::constant([1.0, 0.0, 0.0])).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((gc.get(i, j) - d1[j] * 0.5 / 3.0).abs() < 1e-15);
            }
        }
        let mesh = sphere(2);
        let w = crate::expr::parse_vector_field::<f64>(["x2*x3", "sin(x1)", "1 + x1"]).unwrap();
        let gb = assemble_convection_b(&mesh, &w).unwrap();
        let gc = assemble_convection_c(&mesh, &w).unwrap();
        assert!(gc.max_abs_diff(&gb.transpose()).unwrap() <= 1e-15);
    }

    #[test]
    fn load_examples() {
        let mesh = sphere(3);
        let z = assemble_load(&mesh, &AmbientScalarField::zero()).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        let one = assemble_load(&mesh, &AmbientScalarField::constant(1.0)).unwrap();
        let s: f64 = one.iter().sum();
        assert!((s - mesh.total_area()).abs() < 1e-12);
        let big_f = crate::expr::parse_vector_field::<f64>(["x2", "-x1 + x3^2", "exp(x1)"]).unwrap();
        let ld = assemble_load_div(&mesh, &big_f).unwrap();
        let s: f64 = ld.iter().sum();
        let scale: f64 = ld.iter().map(|v| v.abs()).sum();
        assert!(s.abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn norms() {
        let mesh = sphere(3);
        let zero = DiscreteField::zeros(&mesh);
        assert_eq!(discrete_norm(&mesh, &zero, 1, 2.0).unwrap(), 0.0);
        let c = DiscreteField::new(&mesh, vec![-3.0; mesh.num_vertices()]).unwrap();
        let n = discrete_norm(&mesh, &c, 0, 2.0).unwrap();
        assert!((n - 3.0 * mesh.total_area().sqrt()).abs() < 1e-12);
        let x3 = DiscreteField::interpolate(&mesh, &AmbientScalarField::coordinate(2));
        let n = discrete_norm(&mesh, &x3, 0, 2.0).unwrap();
        assert!((n - (4.0 * std::f64::consts::PI / 3.0).sqrt()).abs() < 2e-2, "{n}");
        // p = 2, m = 1 matches the H1 Gram matrix
        let k = laplace_stiffness(&mesh).unwrap();
        let m = mass_matrix(&mesh).unwrap();
        let u = x3.values();
        let gram = (linalg::vdot(u, &k.mul_vec(u)) + linalg::vdot(u, &m.mul_vec(u))).sqrt();
        assert!((discrete_norm(&mesh, &x3, 1, 2.0).unwrap() - gram).abs() < 1e-10);
        assert!(discrete_norm(&mesh, &x3, 1, 1.0).is_err());
        assert!(discrete_norm(&mesh, &x3, 2, 2.0).is_err());
        let other = sphere(1);
        assert!(discrete_norm(&other, &x3, 0, 2.0).is_err());
    }

    #[test]
    fn mean_values() {
        let mesh = sphere(3);
        assert_eq!(mean_value(&mesh, &DiscreteField::zeros(&mesh)).unwrap(), 0.0);
        let one = DiscreteField::new(&mesh, vec![1.0; mesh.num_vertices()]).unwrap();
        assert!((mean_value(&mesh, &one).unwrap() - mesh.total_area()).abs() < 1e-12);
        let x3 = DiscreteField::interpolate(&mesh, &AmbientScalarField::coordinate(2));
        assert!(mean_value(&mesh, &x3).unwrap().abs() < 1e-12);
        let w = vertex_masses(&mesh).unwrap();
        assert!((w.iter().sum::<f64>() - mesh.total_area()).abs() < 1e-12);
    }

    #[test]
    fn serial_and_parallel_are_bitwise_equal() {
        let mesh = sphere(3);
        let a =
            crate::expr::parse_matrix_field::<f64>([["1 + x1^2", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]).unwrap();
        let s = assemble_stiffness_with(&mesh, &a, Execution::Serial).unwrap();
        let p = assemble_stiffness_with(&mesh, &a, Execution::Parallel).unwrap();
        assert_eq!(s, p);
    }
}
