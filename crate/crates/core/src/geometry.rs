//! Analytic surface geometry through charts.
//!
//! A [`Chart`] is a parametrization `χ: V ⊂ R² → Γ ⊂ R³` with its Jacobian and
//! (optionally) second partials. The metric, area element, normal, tangential
//! projection, surface gradient and divergence, Laplace–Beltrami and shape
//! operator are all computed from those derivatives in parametric form.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{AmbientScalarField, AmbientVectorField};
use crate::linalg::{self, Mat2, Mat3, Vec3};
use crate::scalar::Real;

/// Parameter point.
pub type Param<T> = [T; 2];
/// Columns `∂_1 χ`, `∂_2 χ`.
pub type Jacobian<T> = [Vec3<T>; 2];
/// Second partials `∂_i ∂_j χ`.
pub type Hessian<T> = [[Vec3<T>; 2]; 2];

type MapFn<T> = Arc<dyn Fn(&Param<T>) -> Vec3<T> + Send + Sync>;
type JacFn<T> = Arc<dyn Fn(&Param<T>) -> Jacobian<T> + Send + Sync>;
type HessFn<T> = Arc<dyn Fn(&Param<T>) -> Hessian<T> + Send + Sync>;
type InvFn<T> = Arc<dyn Fn(&Vec3<T>) -> Param<T> + Send + Sync>;
type ProjFn<T> = Arc<dyn Fn(&Vec3<T>) -> Option<Vec3<T>> + Send + Sync>;

/// Smallest-to-largest singular value ratio of `∇χ` below which a chart is
/// considered degenerate.
pub const DEGENERACY_RATIO: f64 = 1e-10;

/// Axis-aligned parameter box with per-axis periodicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBox<T> {
    pub lo: Param<T>,
    pub hi: Param<T>,
    pub periodic: [bool; 2],
}

impl<T: Real> ParamBox<T> {
    /// Wraps periodic axes into `[lo, hi)` and checks the others.
    pub fn normalize(&self, y: &Param<T>) -> Option<Param<T>> {
        let mut out = *y;
        for k in 0..2 {
            if !y[k].is_finite() {
                return None;
            }
            if self.periodic[k] {
                let period = self.hi[k] - self.lo[k];
                let mut t = (y[k] - self.lo[k]) % period;
                if t < T::zero() {
                    t += period;
                }
                out[k] = self.lo[k] + t;
            } else if y[k] < self.lo[k] || y[k] > self.hi[k] {
                return None;
            }
        }
        Some(out)
    }

    pub fn period(&self, k: usize) -> Option<T> {
        self.periodic[k].then(|| self.hi[k] - self.lo[k])
    }
}

/// Parametrization of a patch of the surface.
#[derive(Clone)]
pub struct Chart<T> {
    label: String,
    domain: ParamBox<T>,
    map: MapFn<T>,
    jacobian: JacFn<T>,
    hessian: Option<HessFn<T>>,
    inverse: Option<InvFn<T>>,
    /// `+1` if `∂_1χ × ∂_2χ` points outward, `-1` otherwise.
    orientation: T,
}

impl<T> fmt::Debug for Chart<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("hessian", &self.hessian.is_some())
            .field("inverse", &self.inverse.is_some())
            .finish()
    }
}

impl<T: Real> Chart<T> {
    pub fn new(
        label: impl Into<String>,
        domain: ParamBox<T>,
        map: impl Fn(&Param<T>) -> Vec3<T> + Send + Sync + 'static,
        jacobian: impl Fn(&Param<T>) -> Jacobian<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            domain,
            map: Arc::new(map),
            jacobian: Arc::new(jacobian),
            hessian: None,
            inverse: None,
            orientation: T::one(),
        }
    }

    pub fn with_hessian(mut self, h: impl Fn(&Param<T>) -> Hessian<T> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    pub fn with_inverse(mut self, inv: impl Fn(&Vec3<T>) -> Param<T> + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inv));
        self
    }

    /// Flip the normal orientation so that it points outward.
    pub fn with_orientation(mut self, sign: T) -> Self {
        self.orientation = sign.signum();
        self
    }

    /// Drops the analytic Hessian so that the finite-difference fallback is used.
    pub fn without_hessian(mut self) -> Self {
        self.hessian = None;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &ParamBox<T> {
        &self.domain
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    /// Planar chart `χ(y) = (y₁, y₂, 0)` on `[-half_width, half_width]²`.
    pub fn plane(half_width: T) -> Self {
        let z = T::zero();
        let o = T::one();
        Chart::new(
            "plane",
            ParamBox {
                lo: [-half_width; 2],
                hi: [half_width; 2],
                periodic: [false; 2],
            },
            move |y| [y[0], y[1], z],
            move |_| [[o, z, z], [z, o, z]],
        )
        .with_hessian(move |_| [[[z; 3]; 2]; 2])
        .with_inverse(|x| [x[0], x[1]])
    }

    /// Polar chart of the sphere of given radius,
    /// `χ(θ, φ) = R (sin θ cos φ, sin θ sin φ, cos θ)` with the coordinate axes
    /// cyclically shifted by `shift` (0: pole on `x₃`, 1: pole on `x₁`, 2: pole on `x₂`).
    pub fn sphere_polar(radius: T, shift: usize) -> Self {
        let shift = shift % 3;
        // component k of the standard chart lands in ambient slot (k + shift) % 3
        let place = move |v: [T; 3]| {
            let mut out = [T::zero(); 3];
            for k in 0..3 {
                out[(k + shift) % 3] = v[k];
            }
            out
        };
        let unplace = move |x: &Vec3<T>| {
            let mut v = [T::zero(); 3];
            for k in 0..3 {
                v[k] = x[(k + shift) % 3];
            }
            v
        };
        let r = radius;
        let two_pi = T::PI() + T::PI();
        Chart::new(
            format!("sphere-polar-{shift}"),
            ParamBox {
                lo: [T::zero(), T::zero()],
                hi: [T::PI(), two_pi],
                periodic: [false, true],
            },
            move |y| {
                let (st, ct) = y[0].sin_cos();
                let (sp, cp) = y[1].sin_cos();
                place([r * st * cp, r * st * sp, r * ct])
            },
            move |y| {
                let (st, ct) = y[0].sin_cos();
                let (sp, cp) = y[1].sin_cos();
                [
                    place([r * ct * cp, r * ct * sp, -r * st]),
                    place([-r * st * sp, r * st * cp, T::zero()]),
                ]
            },
        )
        .with_hessian(move |y| {
            let (st, ct) = y[0].sin_cos();
            let (sp, cp) = y[1].sin_cos();
            let tt = place([-r * st * cp, -r * st * sp, -r * ct]);
            let tp = place([-r * ct * sp, r * ct * cp, T::zero()]);
            let pp = place([-r * st * cp, -r * st * sp, T::zero()]);
            [[tt, tp], [tp, pp]]
        })
        .with_inverse(move |x| {
            let v = unplace(x);
            let rho = linalg::norm(&v);
            let c = (v[2] / rho).max(-T::one()).min(T::one());
            let mut phi = v[1].atan2(v[0]);
            if phi < T::zero() {
                phi += two_pi;
            }
            [c.acos(), phi]
        })
    }

    /// Doubly periodic torus chart
    /// `χ(θ, φ) = ((R + r cos θ) cos φ, (R + r cos θ) sin φ, r sin θ)`.
    pub fn torus(major: T, minor: T) -> Self {
        let (big, small) = (major, minor);
        let two_pi = T::PI() + T::PI();
        Chart::new(
            "torus",
            ParamBox {
                lo: [T::zero(), T::zero()],
                hi: [two_pi, two_pi],
                periodic: [true, true],
            },
            move |y| {
                let (st, ct) = y[0].sin_cos();
                let (sp, cp) = y[1].sin_cos();
                let rho = big + small * ct;
                [rho * cp, rho * sp, small * st]
            },
            move |y| {
                let (st, ct) = y[0].sin_cos();
                let (sp, cp) = y[1].sin_cos();
                let rho = big + small * ct;
                [
                    [-small * st * cp, -small * st * sp, small * ct],
                    [-rho * sp, rho * cp, T::zero()],
                ]
            },
        )
        .with_hessian(move |y| {
            let (st, ct) = y[0].sin_cos();
            let (sp, cp) = y[1].sin_cos();
            let rho = big + small * ct;
            let tt = [-small * ct * cp, -small * ct * sp, -small * st];
            let tp = [small * st * sp, -small * st * cp, T::zero()];
            let pp = [-rho * cp, -rho * sp, T::zero()];
            [[tt, tp], [tp, pp]]
        })
        .with_inverse(move |x| {
            let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let mut phi = x[1].atan2(x[0]);
            let mut theta = x[2].atan2(rho - big);
            if phi < T::zero() {
                phi += two_pi;
            }
            if theta < T::zero() {
                theta += two_pi;
            }
            [theta, phi]
        })
        // ∂_θχ × ∂_φχ points toward the core circle
        .with_orientation(-T::one())
    }

    fn check(&self, y: &Param<T>) -> Result<Param<T>> {
        self.domain.normalize(y).ok_or_else(|| Error::Domain {
            chart: self.label.clone(),
            point: vec![y[0].to_f64_lossy(), y[1].to_f64_lossy()],
        })
    }

    /// Jacobian at a validated, non-degenerate parameter point.
    fn frame(&self, y: &Param<T>) -> Result<(Param<T>, Jacobian<T>)> {
        let y = self.check(y)?;
        let jac = (self.jacobian)(&y);
        let (lo, hi) = linalg::singular_values_3x2(&jac[0], &jac[1]);
        if !(hi > T::zero()) || lo < T::c(DEGENERACY_RATIO) * hi {
            let ratio = if hi > T::zero() { (lo / hi).to_f64_lossy() } else { 0.0 };
            return Err(Error::Degenerate { ratio });
        }
        Ok((y, jac))
    }

    pub fn point(&self, y: &Param<T>) -> Result<Vec3<T>> {
        let y = self.check(y)?;
        Ok((self.map)(&y))
    }

    pub fn jacobian(&self, y: &Param<T>) -> Result<Jacobian<T>> {
        Ok(self.frame(y)?.1)
    }

    /// Analytic second partials, or central differences of the Jacobian with
    /// step `ε^{1/3} · max(1, |y_k|)` when no analytic Hessian was supplied.
    pub fn second_derivatives(&self, y: &Param<T>) -> Result<Hessian<T>> {
        let y = self.check(y)?;
        if let Some(h) = &self.hessian {
            return Ok(h(&y));
        }
        Ok(self.fd_hessian(&y))
    }

    fn fd_hessian(&self, y: &Param<T>) -> Hessian<T> {
        let mut out = [[linalg::zero3(); 2]; 2];
        let cbrt_eps = T::epsilon().cbrt();
        for k in 0..2 {
            let h = cbrt_eps * y[k].abs().max(T::one());
            let mut yp = *y;
            let mut ym = *y;
            yp[k] += h;
            ym[k] -= h;
            let (jp, jm) = ((self.jacobian)(&yp), (self.jacobian)(&ym));
            for j in 0..2 {
                out[j][k] = linalg::scale(T::one() / (h + h), &linalg::sub(&jp[j], &jm[j]));
            }
        }
        // symmetrize
        let half = T::c(0.5);
        let m = linalg::scale(half, &linalg::add(&out[0][1], &out[1][0]));
        out[0][1] = m;
        out[1][0] = m;
        out
    }

    /// First fundamental form `g = ∇χᵀ ∇χ`.
    pub fn metric_tensor(&self, y: &Param<T>) -> Result<Mat2<T>> {
        let (_, j) = self.frame(y)?;
        Ok(metric_of(&j))
    }

    /// `√det g`.
    pub fn area_element(&self, y: &Param<T>) -> Result<T> {
        Ok(linalg::det2(&self.metric_tensor(y)?).sqrt())
    }

    /// Outward unit normal `N/|N|` with `N = ∂_1χ × ∂_2χ` up to the chart orientation.
    pub fn unit_normal(&self, y: &Param<T>) -> Result<Vec3<T>> {
        let (_, j) = self.frame(y)?;
        Ok(normal_of(&j, self.orientation))
    }

    /// Tangential projection `∇χ g⁻¹ ∇χᵀ`.
    pub fn tangential_projection(&self, y: &Param<T>) -> Result<Mat3<T>> {
        let (_, j) = self.frame(y)?;
        Ok(projection_of(&j))
    }

    /// Exterior gradient `∇χ g⁻¹ ∇ṽ` of a parametric scalar field.
    pub fn surface_gradient(&self, field: &ParametricScalar<T>, y: &Param<T>) -> Result<Vec3<T>> {
        let (y, j) = self.frame(y)?;
        let dv = field
            .gradient(&y)
            .ok_or_else(|| Error::Contract("surface gradient needs a parametric gradient".into()))?;
        Ok(lift(&j, &metric_of(&j), &dv))
    }

    /// Exterior divergence `Σ g^{ij} ∂_iχ · ∂_jṽ` of a parametric vector field.
    pub fn surface_divergence(&self, field: &ParametricVector<T>, y: &Param<T>) -> Result<T> {
        let (y, j) = self.frame(y)?;
        let dv = field
            .jacobian(&y)
            .ok_or_else(|| Error::Contract("surface divergence needs a parametric Jacobian".into()))?;
        let gi = linalg::inv2(&metric_of(&j));
        let mut s = T::zero();
        for a in 0..2 {
            for b in 0..2 {
                s += gi[a][b] * linalg::dot(&j[a], &dv[b]);
            }
        }
        Ok(s)
    }

    /// Laplace–Beltrami `(1/a) ∂_i(a g^{ij} ∂_j ṽ)` expanded with the chart's
    /// second derivatives.
    pub fn laplace_beltrami_apply(&self, field: &ParametricScalar<T>, y: &Param<T>) -> Result<T> {
        let (y, j) = self.frame(y)?;
        let dv = field
            .gradient(&y)
            .ok_or_else(|| Error::Capability("Laplace-Beltrami needs a parametric gradient".into()))?;
        let hv = field
            .hessian(&y)
            .ok_or_else(|| Error::Capability("Laplace-Beltrami needs parametric second derivatives".into()))?;
        let h = self.second_derivatives(&y)?;
        let g = metric_of(&j);
        let gi = linalg::inv2(&g);
        // ∂_k g
        let dg: [Mat2<T>; 2] = std::array::from_fn(|k| {
            let mut m = [[T::zero(); 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    m[a][b] = linalg::dot(&h[a][k], &j[b]) + linalg::dot(&j[a], &h[b][k]);
                }
            }
            m
        });
        // ∂_k g⁻¹ = -g⁻¹ (∂_k g) g⁻¹
        let dgi: [Mat2<T>; 2] = std::array::from_fn(|k| {
            let mut m = [[T::zero(); 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    let mut s = T::zero();
                    for p in 0..2 {
                        for q in 0..2 {
                            s += gi[a][p] * dg[k][p][q] * gi[q][b];
                        }
                    }
                    m[a][b] = -s;
                }
            }
            m
        });
        // ∂_k a / a = ½ tr(g⁻¹ ∂_k g)
        let dlog_a: [T; 2] = std::array::from_fn(|k| {
            let mut s = T::zero();
            for a in 0..2 {
                for b in 0..2 {
                    s += gi[a][b] * dg[k][b][a];
                }
            }
            T::c(0.5) * s
        });
        let mut lap = T::zero();
        for a in 0..2 {
            for b in 0..2 {
                lap += gi[a][b] * hv[a][b] + (dgi[a][a][b] + dlog_a[a] * gi[a][b]) * dv[b];
            }
        }
        Ok(lap)
    }

    /// Parametric derivatives `∂_j ν` of the unit normal (columns).
    fn normal_derivatives(&self, y: &Param<T>, j: &Jacobian<T>) -> Result<(Vec3<T>, Jacobian<T>)> {
        let h = self.second_derivatives(y)?;
        let n_raw = linalg::scale(self.orientation, &linalg::cross(&j[0], &j[1]));
        let len = linalg::norm(&n_raw);
        let nu = linalg::scale(T::one() / len, &n_raw);
        let p = linalg::normal_complement(&nu);
        let dn: Jacobian<T> = std::array::from_fn(|k| {
            let dn_raw = linalg::add(&linalg::cross(&h[0][k], &j[1]), &linalg::cross(&j[0], &h[1][k]));
            let dn_raw = linalg::scale(self.orientation / len, &dn_raw);
            linalg::mat_vec(&p, &dn_raw)
        });
        Ok((nu, dn))
    }

    /// Shape operator `B = ∇_M ν`, row `i` being the exterior gradient of `ν_i`.
    pub fn shape_operator(&self, y: &Param<T>) -> Result<Mat3<T>> {
        let (y, j) = self.frame(y)?;
        let (_, dn) = self.normal_derivatives(&y, &j)?;
        let gi = linalg::inv2(&metric_of(&j));
        let mut b = [[T::zero(); 3]; 3];
        for (i, row) in b.iter_mut().enumerate() {
            for (k, entry) in row.iter_mut().enumerate() {
                let mut s = T::zero();
                for a in 0..2 {
                    for c in 0..2 {
                        s += dn[a][i] * gi[a][c] * j[c][k];
                    }
                }
                *entry = s;
            }
        }
        Ok(b)
    }

    /// Components `v̂ = g⁻¹ ∇χᵀ v` of a tangential vector in the chart basis.
    pub fn tangential_components(&self, y: &Param<T>, v: &Vec3<T>) -> Result<Param<T>> {
        let (_, j) = self.frame(y)?;
        let p = projection_of(&j);
        let pv = linalg::mat_vec(&p, v);
        let off = linalg::norm(&linalg::sub(&pv, v));
        if off > T::c(1e-8) * T::one().max(linalg::norm(v)) {
            return Err(Error::Contract(format!(
                "vector is not tangential (normal part {:e})",
                off.to_f64_lossy()
            )));
        }
        let gi = linalg::inv2(&metric_of(&j));
        let r = [linalg::dot(&j[0], v), linalg::dot(&j[1], v)];
        Ok([gi[0][0] * r[0] + gi[0][1] * r[1], gi[1][0] * r[0] + gi[1][1] * r[1]])
    }

    /// Inverse map, when the chart provides one.
    pub fn locate(&self, x: &Vec3<T>) -> Option<Param<T>> {
        self.inverse.as_ref().and_then(|inv| self.domain.normalize(&inv(x)))
    }

    /// Pulls an ambient scalar field back to the parameter domain,
    /// propagating derivatives by the chain rule.
    pub fn pull_back_scalar(&self, f: &AmbientScalarField<T>) -> ParametricScalar<T> {
        let chart = self.clone();
        let fv = f.clone();
        let mut out = ParametricScalar::new(move |y| fv.eval(&(chart.map)(y)));
        if f.has_gradient() {
            let chart = self.clone();
            let fg = f.clone();
            out = out.with_gradient(move |y| {
                let x = (chart.map)(y);
                let g = fg.gradient(&x).expect("checked");
                let j = (chart.jacobian)(y);
                [linalg::dot(&g, &j[0]), linalg::dot(&g, &j[1])]
            });
            if f.has_hessian() {
                let chart = self.clone();
                let fh = f.clone();
                out = out.with_hessian(move |y| {
                    let x = (chart.map)(y);
                    let g = fh.gradient(&x).expect("checked");
                    let hx = fh.hessian(&x).expect("checked");
                    let j = (chart.jacobian)(y);
                    let h = match &chart.hessian {
                        Some(hf) => hf(y),
                        None => chart.fd_hessian(y),
                    };
                    let mut m = [[T::zero(); 2]; 2];
                    for a in 0..2 {
                        for b in 0..2 {
                            m[a][b] = linalg::dot(&j[a], &linalg::mat_vec(&hx, &j[b])) + linalg::dot(&g, &h[a][b]);
                        }
                    }
                    m
                });
            }
        }
        out
    }

    /// Pulls an ambient vector field back, with columns `∂_j ṽ = J_v ∂_j χ`.
    pub fn pull_back_vector(&self, f: &AmbientVectorField<T>) -> ParametricVector<T> {
        let chart = self.clone();
        let fv = f.clone();
        let mut out = ParametricVector::new(move |y| fv.eval(&(chart.map)(y)));
        if f.has_jacobian() {
            let chart = self.clone();
            let fj = f.clone();
            out = out.with_jacobian(move |y| {
                let x = (chart.map)(y);
                let jv = fj.jacobian(&x).expect("checked");
                let j = (chart.jacobian)(y);
                [linalg::mat_vec(&jv, &j[0]), linalg::mat_vec(&jv, &j[1])]
            });
        }
        out
    }
}

pub(crate) fn metric_of<T: Real>(j: &Jacobian<T>) -> Mat2<T> {
    let off = linalg::dot(&j[0], &j[1]);
    [[linalg::dot(&j[0], &j[0]), off], [off, linalg::dot(&j[1], &j[1])]]
}

pub(crate) fn normal_of<T: Real>(j: &Jacobian<T>, orientation: T) -> Vec3<T> {
    linalg::normalize(&linalg::scale(orientation, &linalg::cross(&j[0], &j[1])))
}

pub(crate) fn projection_of<T: Real>(j: &Jacobian<T>) -> Mat3<T> {
    let gi = linalg::inv2(&metric_of(j));
    let mut p = [[T::zero(); 3]; 3];
    for (r, row) in p.iter_mut().enumerate() {
        for (c, entry) in row.iter_mut().enumerate() {
            let mut s = T::zero();
            for a in 0..2 {
                for b in 0..2 {
                    s += j[a][r] * gi[a][b] * j[b][c];
                }
            }
            *entry = s;
        }
    }
    p
}

/// `∇χ g⁻¹ w` for a parametric covector `w`.
fn lift<T: Real>(j: &Jacobian<T>, g: &Mat2<T>, w: &Param<T>) -> Vec3<T> {
    let gi = linalg::inv2(g);
    let c0 = gi[0][0] * w[0] + gi[0][1] * w[1];
    let c1 = gi[1][0] * w[0] + gi[1][1] * w[1];
    linalg::axpy(&linalg::scale(c0, &j[0]), c1, &j[1])
}

type PScalarFn<T> = Arc<dyn Fn(&Param<T>) -> T + Send + Sync>;
type PGradFn<T> = Arc<dyn Fn(&Param<T>) -> Param<T> + Send + Sync>;
type PHessFn<T> = Arc<dyn Fn(&Param<T>) -> Mat2<T> + Send + Sync>;
type PVecFn<T> = Arc<dyn Fn(&Param<T>) -> Vec3<T> + Send + Sync>;
type PVecJacFn<T> = Arc<dyn Fn(&Param<T>) -> Jacobian<T> + Send + Sync>;

/// Scalar function of the chart parameters with optional derivatives.
#[derive(Clone)]
pub struct ParametricScalar<T> {
    value: PScalarFn<T>,
    gradient: Option<PGradFn<T>>,
    hessian: Option<PHessFn<T>>,
}

impl<T: Real> ParametricScalar<T> {
    pub fn new(value: impl Fn(&Param<T>) -> T + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
            hessian: None,
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&Param<T>) -> Param<T> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(&Param<T>) -> Mat2<T> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    pub fn eval(&self, y: &Param<T>) -> T {
        (self.value)(y)
    }

    pub fn gradient(&self, y: &Param<T>) -> Option<Param<T>> {
        self.gradient.as_ref().map(|g| g(y))
    }

    pub fn hessian(&self, y: &Param<T>) -> Option<Mat2<T>> {
        self.hessian.as_ref().map(|h| h(y))
    }
}

/// Vector-valued function of the chart parameters; `jacobian` returns the
/// columns `∂_j ṽ`.
#[derive(Clone)]
pub struct ParametricVector<T> {
    value: PVecFn<T>,
    jacobian: Option<PVecJacFn<T>>,
}

impl<T: Real> ParametricVector<T> {
    pub fn new(value: impl Fn(&Param<T>) -> Vec3<T> + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            jacobian: None,
        }
    }

    pub fn with_jacobian(mut self, j: impl Fn(&Param<T>) -> Jacobian<T> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn eval(&self, y: &Param<T>) -> Vec3<T> {
        (self.value)(y)
    }

    pub fn jacobian(&self, y: &Param<T>) -> Option<Jacobian<T>> {
        self.jacobian.as_ref().map(|j| j(y))
    }
}

/// Exact geometric data at a surface point.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceFrame<T> {
    pub point: Vec3<T>,
    pub normal: Vec3<T>,
    pub projection: Mat3<T>,
    pub shape: Mat3<T>,
}

impl<T: Real> SurfaceFrame<T> {
    /// `tr B`, i.e. twice the mean curvature for surfaces in R³.
    pub fn trace_shape(&self) -> T {
        linalg::trace(&self.shape)
    }
}

/// Which closed surface an atlas describes; used by mesh presets.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum SurfaceKind {
    Sphere { radius: f64 },
    Torus { major: f64, minor: f64 },
}

/// Finite family of charts covering a closed surface, plus a closest-point projector.
#[derive(Clone)]
pub struct Atlas<T> {
    charts: Vec<Chart<T>>,
    projector: ProjFn<T>,
    kind: SurfaceKind,
}

impl<T> fmt::Debug for Atlas<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Atlas")
            .field("kind", &self.kind)
            .field("charts", &self.charts)
            .finish()
    }
}

impl<T: Real> Atlas<T> {
    /// Intrinsic dimension of the surface.
    pub const DIMENSION: usize = 2;

    pub fn new(
        kind: SurfaceKind,
        charts: Vec<Chart<T>>,
        projector: impl Fn(&Vec3<T>) -> Option<Vec3<T>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            charts,
            projector: Arc::new(projector),
            kind,
        }
    }

    /// Sphere of the given radius centred at the origin, covered by two polar
    /// charts whose poles lie on the `x₃` and `x₁` axes.
    pub fn sphere(radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidArgument("sphere radius must be positive".into()));
        }
        Ok(Self::new(
            SurfaceKind::Sphere {
                radius: radius.to_f64_lossy(),
            },
            vec![Chart::sphere_polar(radius, 0), Chart::sphere_polar(radius, 1)],
            move |x| {
                let n = linalg::norm(x);
                (n > T::zero() && n.is_finite()).then(|| linalg::scale(radius / n, x))
            },
        ))
    }

    /// Torus with major radius `R` and minor radius `r`, `R > r > 0`.
    pub fn torus(major: T, minor: T) -> Result<Self> {
        if !(minor > T::zero() && major > minor) || !major.is_finite() {
            return Err(Error::InvalidArgument("torus requires R > r > 0".into()));
        }
        Ok(Self::new(
            SurfaceKind::Torus {
                major: major.to_f64_lossy(),
                minor: minor.to_f64_lossy(),
            },
            vec![Chart::torus(major, minor)],
            move |x| {
                let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if !(rho > T::zero()) || !rho.is_finite() {
                    return None;
                }
                let core = [major * x[0] / rho, major * x[1] / rho, T::zero()];
                let d = linalg::sub(x, &core);
                let dn = linalg::norm(&d);
                (dn > T::zero()).then(|| linalg::axpy(&core, minor / dn, &d))
            },
        ))
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn charts(&self) -> &[Chart<T>] {
        &self.charts
    }

    pub fn project(&self, x: &Vec3<T>) -> Result<Vec3<T>> {
        (self.projector)(x).ok_or_else(|| Error::Projector(x.iter().map(|v| v.to_f64_lossy()).collect()))
    }

    /// Best-conditioned chart containing the surface point `x`.
    pub fn locate(&self, x: &Vec3<T>) -> Result<(&Chart<T>, Param<T>)> {
        let mut best: Option<(usize, Param<T>, T)> = None;
        for (i, c) in self.charts.iter().enumerate() {
            let Some(y) = c.locate(x) else { continue };
            let j = (c.jacobian)(&y);
            let (lo, hi) = linalg::singular_values_3x2(&j[0], &j[1]);
            if !(hi > T::zero()) {
                continue;
            }
            let q = lo / hi;
            if best.as_ref().is_none_or(|b| q > b.2) {
                best = Some((i, y, q));
            }
        }
        match best {
            Some((i, y, q)) if q >= T::c(DEGENERACY_RATIO) => Ok((&self.charts[i], y)),
            Some((_, _, q)) => Err(Error::Degenerate {
                ratio: q.to_f64_lossy(),
            }),
            None => Err(Error::Contract("point not covered by any chart".into())),
        }
    }

    /// Normal, projection and shape operator at (the projection of) `x`.
    pub fn frame(&self, x: &Vec3<T>) -> Result<SurfaceFrame<T>> {
        let p = self.project(x)?;
        let (chart, y) = self.locate(&p)?;
        Ok(SurfaceFrame {
            point: p,
            normal: chart.unit_normal(&y)?,
            projection: chart.tangential_projection(&y)?,
            shape: chart.shape_operator(&y)?,
        })
    }

    /// Outward normal at (the projection of) `x`.
    pub fn normal(&self, x: &Vec3<T>) -> Result<Vec3<T>> {
        let p = self.project(x)?;
        let (chart, y) = self.locate(&p)?;
        chart.unit_normal(&y)
    }
}
