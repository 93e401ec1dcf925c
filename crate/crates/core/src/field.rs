//! Ambient scalar, vector and matrix fields on R³ with optional derivatives.
//!
//! Coefficients and data are given as functions of the ambient coordinates and
//! are only ever evaluated at points on (or near) the surface.

use std::fmt;
use std::sync::Arc;

use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

type ScalarFn<T> = Arc<dyn Fn(&Vec3<T>) -> T + Send + Sync>;
type VectorFn<T> = Arc<dyn Fn(&Vec3<T>) -> Vec3<T> + Send + Sync>;
type MatrixFn<T> = Arc<dyn Fn(&Vec3<T>) -> Mat3<T> + Send + Sync>;
type MatrixDerivFn<T> = Arc<dyn Fn(&Vec3<T>) -> [Mat3<T>; 3] + Send + Sync>;

#[derive(Clone)]
pub struct AmbientScalarField<T> {
    value: ScalarFn<T>,
    gradient: Option<VectorFn<T>>,
    hessian: Option<MatrixFn<T>>,
}

impl<T: Real> AmbientScalarField<T> {
    pub fn new(value: impl Fn(&Vec3<T>) -> T + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
            hessian: None,
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&Vec3<T>) -> Vec3<T> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(&Vec3<T>) -> Mat3<T> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    pub fn constant(c: T) -> Self {
        Self::new(move |_| c)
            .with_gradient(|_| [T::zero(); 3])
            .with_hessian(|_| [[T::zero(); 3]; 3])
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    /// The coordinate function `x ↦ x_k` (zero-based `k`).
    pub fn coordinate(k: usize) -> Self {
        assert!(k < 3, "coordinate index out of range");
        Self::new(move |x| x[k])
            .with_gradient(move |_| crate::linalg::unit3(k))
            .with_hessian(|_| [[T::zero(); 3]; 3])
    }

    /// `s * self`, preserving derivative information.
    pub fn scaled(&self, s: T) -> Self {
        let v = self.value.clone();
        let mut out = Self::new(move |x| s * v(x));
        if let Some(g) = self.gradient.clone() {
            out = out.with_gradient(move |x| crate::linalg::scale(s, &g(x)));
        }
        if let Some(h) = self.hessian.clone() {
            out = out.with_hessian(move |x| crate::linalg::mat_scale(s, &h(x)));
        }
        out
    }

    #[inline]
    pub fn eval(&self, x: &Vec3<T>) -> T {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &Vec3<T>) -> Option<Vec3<T>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    pub fn hessian(&self, x: &Vec3<T>) -> Option<Mat3<T>> {
        self.hessian.as_ref().map(|h| h(x))
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }
}

impl<T> fmt::Debug for AmbientScalarField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AmbientScalarField")
            .field("gradient", &self.gradient.is_some())
            .field("hessian", &self.hessian.is_some())
            .finish()
    }
}

/// Vector field; the Jacobian is `J[i][j] = ∂_j v_i`.
#[derive(Clone)]
pub struct AmbientVectorField<T> {
    value: VectorFn<T>,
    jacobian: Option<MatrixFn<T>>,
}

impl<T: Real> AmbientVectorField<T> {
    pub fn new(value: impl Fn(&Vec3<T>) -> Vec3<T> + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            jacobian: None,
        }
    }

    pub fn with_jacobian(mut self, j: impl Fn(&Vec3<T>) -> Mat3<T> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn constant(c: Vec3<T>) -> Self {
        Self::new(move |_| c).with_jacobian(|_| [[T::zero(); 3]; 3])
    }

    pub fn zero() -> Self {
        Self::constant([T::zero(); 3])
    }

    /// Rigid rotation field `x ↦ axis × x`.
    pub fn rotation(axis: Vec3<T>) -> Self {
        let [a, b, c] = axis;
        let z = T::zero();
        Self::new(move |x| crate::linalg::cross(&axis, x)).with_jacobian(move |_| [[z, -c, b], [c, z, -a], [-b, a, z]])
    }

    /// Identity field `x ↦ x`.
    pub fn position() -> Self {
        Self::new(|x| *x).with_jacobian(|_| crate::linalg::identity3())
    }

    pub fn scaled(&self, s: T) -> Self {
        let v = self.value.clone();
        let mut out = Self::new(move |x| crate::linalg::scale(s, &v(x)));
        if let Some(j) = self.jacobian.clone() {
            out = out.with_jacobian(move |x| crate::linalg::mat_scale(s, &j(x)));
        }
        out
    }

    #[inline]
    pub fn eval(&self, x: &Vec3<T>) -> Vec3<T> {
        (self.value)(x)
    }

    pub fn jacobian(&self, x: &Vec3<T>) -> Option<Mat3<T>> {
        self.jacobian.as_ref().map(|j| j(x))
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }
}

impl<T> fmt::Debug for AmbientVectorField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AmbientVectorField")
            .field("jacobian", &self.jacobian.is_some())
            .finish()
    }
}

/// Matrix field; `derivative(x)[k]` is the entrywise partial `∂_k A`.
#[derive(Clone)]
pub struct AmbientMatrixField<T> {
    value: MatrixFn<T>,
    derivative: Option<MatrixDerivFn<T>>,
}

impl<T: Real> AmbientMatrixField<T> {
    pub fn new(value: impl Fn(&Vec3<T>) -> Mat3<T> + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            derivative: None,
        }
    }

    pub fn with_derivative(mut self, d: impl Fn(&Vec3<T>) -> [Mat3<T>; 3] + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    pub fn constant(m: Mat3<T>) -> Self {
        Self::new(move |_| m).with_derivative(|_| [[[T::zero(); 3]; 3]; 3])
    }

    pub fn identity() -> Self {
        Self::constant(crate::linalg::identity3())
    }

    pub fn zero() -> Self {
        Self::constant([[T::zero(); 3]; 3])
    }

    /// `s(x) I` for a scalar field `s` with gradient.
    pub fn scalar_identity(s: AmbientScalarField<T>) -> Self {
        let sv = s.clone();
        let mut out = Self::new(move |x| crate::linalg::mat_scale(sv.eval(x), &crate::linalg::identity3()));
        if s.has_gradient() {
            out = out.with_derivative(move |x| {
                let g = s.gradient(x).expect("checked above");
                let id = crate::linalg::identity3();
                [
                    crate::linalg::mat_scale(g[0], &id),
                    crate::linalg::mat_scale(g[1], &id),
                    crate::linalg::mat_scale(g[2], &id),
                ]
            });
        }
        out
    }

    pub fn transposed(&self) -> Self {
        let v = self.value.clone();
        let mut out = Self::new(move |x| crate::linalg::transpose(&v(x)));
        if let Some(d) = self.derivative.clone() {
            out = out.with_derivative(move |x| {
                let dd = d(x);
                [
                    crate::linalg::transpose(&dd[0]),
                    crate::linalg::transpose(&dd[1]),
                    crate::linalg::transpose(&dd[2]),
                ]
            });
        }
        out
    }

    pub fn scaled(&self, s: T) -> Self {
        let v = self.value.clone();
        let mut out = Self::new(move |x| crate::linalg::mat_scale(s, &v(x)));
        if let Some(d) = self.derivative.clone() {
            out = out.with_derivative(move |x| d(x).map(|m| crate::linalg::mat_scale(s, &m)));
        }
        out
    }

    #[inline]
    pub fn eval(&self, x: &Vec3<T>) -> Mat3<T> {
        (self.value)(x)
    }

    pub fn derivative(&self, x: &Vec3<T>) -> Option<[Mat3<T>; 3]> {
        self.derivative.as_ref().map(|d| d(x))
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }
}

impl<T> fmt::Debug for AmbientMatrixField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AmbientMatrixField")
            .field("derivative", &self.derivative.is_some())
            .finish()
    }
}
