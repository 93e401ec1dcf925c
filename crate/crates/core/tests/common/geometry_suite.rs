//! Geometry checks against finite-difference oracles built only from chart
//! point evaluations (never from the analytic derivatives under test).

use std::f64::consts::{FRAC_PI_2, PI};

use gamma_core::expr::parse_scalar_field;
use gamma_core::field::AmbientVectorField;
use gamma_core::geometry::{Atlas, Chart, Param};
use gamma_core::linalg::{self, Mat3, Vec3};
use gamma_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central-difference Jacobian columns from point evaluations only.
fn fd_jacobian(chart: &Chart<f64>, y: Param<f64>) -> [Vec3<f64>; 2] {
    let h = 1e-6;
    std::array::from_fn(|k| {
        let mut yp = y;
        let mut ym = y;
        yp[k] += h;
        ym[k] -= h;
        let (p, m) = (chart.point(&yp).unwrap(), chart.point(&ym).unwrap());
        linalg::scale(1.0 / (2.0 * h), &linalg::sub(&p, &m))
    })
}

fn fd_metric(chart: &Chart<f64>, y: Param<f64>) -> [[f64; 2]; 2] {
    let j = fd_jacobian(chart, y);
    [
        [linalg::dot(&j[0], &j[0]), linalg::dot(&j[0], &j[1])],
        [linalg::dot(&j[1], &j[0]), linalg::dot(&j[1], &j[1])],
    ]
}

/// `(1/a) ∂_i(a g^{ij} ∂_j v)` by nested central differences of point values.
fn fd_laplace_beltrami(chart: &Chart<f64>, v: &dyn Fn(&Vec3<f64>) -> f64, y: Param<f64>) -> f64 {
    let h = 1e-4;
    let vt = |y: Param<f64>| v(&chart.point(&y).unwrap());
    let flux = |y: Param<f64>| -> [f64; 2] {
        let g = fd_metric(chart, y);
        let a = (g[0][0] * g[1][1] - g[0][1] * g[1][0]).sqrt();
        let gi = linalg::inv2(&g);
        let dv: [f64; 2] = std::array::from_fn(|k| {
            let mut yp = y;
            let mut ym = y;
            yp[k] += h;
            ym[k] -= h;
            (vt(yp) - vt(ym)) / (2.0 * h)
        });
        [
            a * (gi[0][0] * dv[0] + gi[0][1] * dv[1]),
            a * (gi[1][0] * dv[0] + gi[1][1] * dv[1]),
        ]
    };
    let g = fd_metric(chart, y);
    let a = (g[0][0] * g[1][1] - g[0][1] * g[1][0]).sqrt();
    let mut div = 0.0;
    for k in 0..2 {
        let mut yp = y;
        let mut ym = y;
        yp[k] += h;
        ym[k] -= h;
        div += (flux(yp)[k] - flux(ym)[k]) / (2.0 * h);
    }
    div / a
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn mat_close(a: &Mat3<f64>, b: &Mat3<f64>, tol: f64) -> bool {
    linalg::max_abs3(&linalg::mat_sub(a, b)) <= tol
}

fn sphere() -> Chart<f64> {
    Chart::sphere_polar(1.0, 0)
}

fn torus() -> Chart<f64> {
    Chart::torus(2.0, 1.0)
}

pub fn metric_examples() {
    let g = Chart::plane(5.0).metric_tensor(&[0.3, -0.2]).unwrap();
    assert_eq!(g, [[1.0, 0.0], [0.0, 1.0]]);

    let y = [FRAC_PI_2, 0.7];
    let g = sphere().metric_tensor(&y).unwrap();
    let oracle = fd_metric(&sphere(), y);
    for a in 0..2 {
        for b in 0..2 {
            assert!(close(g[a][b], oracle[a][b], 1e-8));
        }
    }
    assert!(close(g[0][0], 1.0, 1e-14) && close(g[1][1], 1.0, 1e-14) && close(g[0][1], 0.0, 1e-14));

    let y = [0.0, 0.4];
    let g = torus().metric_tensor(&y).unwrap();
    let oracle = fd_metric(&torus(), y);
    assert!(close(oracle[0][0], 1.0, 1e-8) && close(oracle[1][1], 9.0, 1e-8));
    assert!(close(g[0][0], 1.0, 1e-14) && close(g[1][1], 9.0, 1e-13) && close(g[0][1], 0.0, 1e-14));
}

pub fn area_element_examples() {
    assert_eq!(Chart::plane(1.0).area_element(&[0.0, 0.0]).unwrap(), 1.0);
    assert!(close(sphere().area_element(&[FRAC_PI_2, 1.0]).unwrap(), 1.0, 1e-14));
    assert!(close(torus().area_element(&[0.0, 2.0]).unwrap(), 3.0, 1e-13));
    // r (R + r cos θ) away from θ = 0
    let t = 1.1;
    assert!(close(torus().area_element(&[t, 0.3]).unwrap(), 2.0 + t.cos(), 1e-13));
}

pub fn unit_normal_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let y = [rng.gen_range(0.1..PI - 0.1), rng.gen_range(0.0..2.0 * PI)];
        let x = sphere().point(&y).unwrap();
        let n = sphere().unit_normal(&y).unwrap();
        assert!(linalg::norm(&linalg::sub(&n, &x)) < 1e-14);
        let j = sphere().jacobian(&y).unwrap();
        assert!(linalg::dot(&n, &j[0]).abs() < 1e-12 && linalg::dot(&n, &j[1]).abs() < 1e-12);
    }
    assert_eq!(Chart::plane(1.0).unit_normal(&[0.2, 0.1]).unwrap(), [0.0, 0.0, 1.0]);

    // minor expansion oracle: N = Σ det(e_j, ∂1χ, ∂2χ) e_j with FD columns
    let y = [0.0, 0.0];
    assert!(linalg::norm(&linalg::sub(&torus().point(&y).unwrap(), &[3.0, 0.0, 0.0])) < 1e-14);
    let j = fd_jacobian(&torus(), y);
    let minors: Vec3<f64> = std::array::from_fn(|k| {
        let e = linalg::unit3::<f64>(k);
        linalg::dot(&e, &linalg::cross(&j[0], &j[1]))
    });
    let oracle = linalg::scale(-1.0, &linalg::normalize(&minors)); // outward flip
    let n = torus().unit_normal(&y).unwrap();
    assert!(linalg::norm(&linalg::sub(&n, &oracle)) < 1e-9);
    assert!(linalg::norm(&linalg::sub(&n, &[1.0, 0.0, 0.0])) < 1e-14);
}

pub fn projection_examples_and_consistency() {
    let p = Chart::plane(1.0).tangential_projection(&[0.1, 0.2]).unwrap();
    assert!(mat_close(
        &p,
        &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
        1e-15
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for chart in [sphere(), Chart::sphere_polar(1.0, 1), torus()] {
        for _ in 0..200 {
            let y = [rng.gen_range(0.2..PI - 0.2), rng.gen_range(0.0..2.0 * PI)];
            let p = chart.tangential_projection(&y).unwrap();
            let n = chart.unit_normal(&y).unwrap();
            let p2 = linalg::normal_complement(&n);
            assert!(mat_close(&p, &p2, 1e-10));
            assert!(mat_close(&p, &linalg::transpose(&p), 1e-14));
            assert!(mat_close(&linalg::mat_mul(&p, &p), &p, 1e-12));
            assert!(linalg::norm(&linalg::mat_vec(&p, &n)) < 1e-12);
        }
    }
    let y = [1.0, 2.0];
    let x = sphere().point(&y).unwrap();
    let p = sphere().tangential_projection(&y).unwrap();
    assert!(mat_close(&p, &linalg::normal_complement(&x), 1e-14));
}

pub fn surface_gradient_examples() {
    let c = sphere();
    let y = [0.9, 2.1];
    let x = c.point(&y).unwrap();
    let zero = c.pull_back_scalar(&parse_scalar_field("4.5").unwrap());
    assert!(linalg::norm(&c.surface_gradient(&zero, &y).unwrap()) < 1e-15);

    let v = c.pull_back_scalar(&parse_scalar_field("x3").unwrap());
    let g = c.surface_gradient(&v, &y).unwrap();
    let expected = linalg::sub(&[0.0, 0.0, 1.0], &linalg::scale(x[2], &x));
    assert!(linalg::norm(&linalg::sub(&g, &expected)) < 1e-12);
    let p = c.tangential_projection(&y).unwrap();
    assert!(linalg::norm(&linalg::sub(&linalg::mat_vec(&p, &g), &g)) < 1e-12);

    let pl = Chart::plane(2.0);
    let v = pl.pull_back_scalar(&parse_scalar_field("x1").unwrap());
    assert!(
        linalg::norm(&linalg::sub(
            &pl.surface_gradient(&v, &[0.5, 0.5]).unwrap(),
            &[1.0, 0.0, 0.0]
        )) < 1e-15
    );

    // missing parametric gradient is a contract error
    let bare = gamma_core::geometry::ParametricScalar::new(|y: &Param<f64>| y[0]);
    assert!(matches!(c.surface_gradient(&bare, &y), Err(Error::Contract(_))));
}

pub fn surface_divergence_examples() {
    let pl = Chart::plane(2.0);
    let f = pl.pull_back_vector(&AmbientVectorField::constant([1.0, -2.0, 3.0]));
    assert_eq!(pl.surface_divergence(&f, &[0.1, 0.1]).unwrap(), 0.0);

    let c = sphere();
    let rot = c.pull_back_vector(&AmbientVectorField::rotation([0.0, 0.0, 1.0]));
    let pos = c.pull_back_vector(&AmbientVectorField::position());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let y = [rng.gen_range(0.1..PI - 0.1), rng.gen_range(0.0..2.0 * PI)];
        assert!(c.surface_divergence(&rot, &y).unwrap().abs() < 1e-8);
        assert!(close(c.surface_divergence(&pos, &y).unwrap(), 2.0, 1e-12));
    }
}

pub fn laplace_beltrami_examples() {
    let c = sphere();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let konst = c.pull_back_scalar(&parse_scalar_field("2").unwrap());
    let x3 = parse_scalar_field::<f64>("x3").unwrap();
    let x1x2 = parse_scalar_field::<f64>("x1*x2").unwrap();
    for _ in 0..20 {
        let y = [rng.gen_range(0.3..PI - 0.3), rng.gen_range(0.0..2.0 * PI)];
        let x = c.point(&y).unwrap();
        assert!(c.laplace_beltrami_apply(&konst, &y).unwrap().abs() < 1e-13);

        let lb = c.laplace_beltrami_apply(&c.pull_back_scalar(&x3), &y).unwrap();
        let fd = fd_laplace_beltrami(&c, &|x| x[2], y);
        assert!(close(lb, -2.0 * x[2], 1e-12));
        assert!(close(fd, -2.0 * x[2], 1e-6));

        let lb = c.laplace_beltrami_apply(&c.pull_back_scalar(&x1x2), &y).unwrap();
        let fd = fd_laplace_beltrami(&c, &|x| x[0] * x[1], y);
        assert!(close(lb, -6.0 * x[0] * x[1], 1e-12));
        assert!(close(fd, -6.0 * x[0] * x[1], 1e-6));
    }
    // affine field on a plane
    let pl = Chart::plane(2.0);
    let aff = pl.pull_back_scalar(&parse_scalar_field("3*x1 - x2 + 7").unwrap());
    assert_eq!(pl.laplace_beltrami_apply(&aff, &[0.3, 0.4]).unwrap(), 0.0);

    // capability error without second derivatives
    let no_hess = gamma_core::field::AmbientScalarField::new(|x: &Vec3<f64>| x[2]).with_gradient(|_| [0.0, 0.0, 1.0]);
    assert!(matches!(
        c.laplace_beltrami_apply(&c.pull_back_scalar(&no_hess), &[1.0, 1.0]),
        Err(Error::Capability(_))
    ));
}

pub fn laplace_beltrami_on_torus_matches_fd_oracle() {
    let c = torus();
    let f = parse_scalar_field::<f64>("x1*x3 + sin(x2)").unwrap();
    let pf = c.pull_back_scalar(&f);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let y = [rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI)];
        let lb = c.laplace_beltrami_apply(&pf, &y).unwrap();
        let fd = fd_laplace_beltrami(&c, &|x| x[0] * x[2] + x[1].sin(), y);
        assert!(close(lb, fd, 1e-6 * (1.0 + lb.abs())), "{lb} vs {fd}");
    }
}

pub fn spherical_harmonics_are_eigenfunctions() {
    // degree l harmonics; expected eigenvalue -l(l+1)
    let cases = [
        ("x1", 1.0),
        ("x2 + 2*x3", 1.0),
        ("x1*x3", 2.0),
        ("x1^2 - x2^2", 2.0),
        ("3*x3^2 - 1", 2.0),
        ("x1*x2*x3", 3.0),
        ("5*x3^3 - 3*x3", 3.0),
        ("x1^3 - 3*x1*x2^2", 3.0),
    ];
    let c = Chart::sphere_polar(1.0, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (s, l) in cases {
        let f = parse_scalar_field::<f64>(s).unwrap();
        let pf = c.pull_back_scalar(&f);
        for _ in 0..10 {
            let y = [rng.gen_range(0.2..PI - 0.2), rng.gen_range(0.0..2.0 * PI)];
            let x = c.point(&y).unwrap();
            let val = f.eval(&x);
            let expected = -l * (l + 1.0) * val;
            let lb = c.laplace_beltrami_apply(&pf, &y).unwrap();
            assert!(
                (lb - expected).abs() <= 1e-6 * expected.abs().max(1e-3),
                "{s}: {lb} vs {expected}"
            );
        }
    }
}

pub fn divergence_of_gradient_is_laplace_beltrami() {
    // div_Γ ∇_Γ v computed by the exterior divergence of the ambient field P∇v
    // evaluated through finite differences in the parameters.
    let c = torus();
    let f = parse_scalar_field::<f64>("x1^2*x3 - x2").unwrap();
    let pf = c.pull_back_scalar(&f);
    let grad_field = {
        let c2 = c.clone();
        let pf2 = pf.clone();
        move |y: &Param<f64>| c2.surface_gradient(&pf2, y).unwrap()
    };
    let h = 1e-5;
    let grad_for_jac = grad_field.clone();
    let pv = gamma_core::geometry::ParametricVector::new(grad_field).with_jacobian(move |y| {
        std::array::from_fn(|k| {
            let mut yp = *y;
            let mut ym = *y;
            yp[k] += h;
            ym[k] -= h;
            linalg::scale(1.0 / (2.0 * h), &linalg::sub(&grad_for_jac(&yp), &grad_for_jac(&ym)))
        })
    });
    for y in [[0.3, 1.0], [2.0, 4.0], [4.4, 0.2]] {
        let div = c.surface_divergence(&pv, &y).unwrap();
        let lb = c.laplace_beltrami_apply(&pf, &y).unwrap();
        assert!(close(div, lb, 1e-7 * (1.0 + lb.abs())), "{div} vs {lb}");
    }
}

pub fn shape_operator_examples() {
    let pl = Chart::plane(1.0);
    assert!(linalg::max_abs3(&pl.shape_operator(&[0.0, 0.0]).unwrap()) == 0.0);

    let c = sphere();
    let y = [1.2, 0.4];
    let b = c.shape_operator(&y).unwrap();
    assert!(mat_close(&b, &c.tangential_projection(&y).unwrap(), 1e-12));

    let t = torus();
    let y = [0.0, 0.0];
    let b = t.shape_operator(&y).unwrap();
    let n = t.unit_normal(&y).unwrap();
    assert!(linalg::norm(&linalg::mat_vec(&b, &n)) < 1e-8);
    // eigenvalues on the tangent plane
    let (t1, t2) = linalg::tangent_basis(&n);
    let q = |u: &Vec3<f64>, v: &Vec3<f64>| linalg::dot(u, &linalg::mat_vec(&b, v));
    let (lo, hi) = linalg::sym2_eigenvalues(&[[q(&t1, &t1), q(&t1, &t2)], [q(&t2, &t1), q(&t2, &t2)]]);
    assert!(close(lo, 1.0 / 3.0, 1e-12) && close(hi, 1.0, 1e-12), "{lo} {hi}");

    // principal-curvature oracle at a generic point: κ1 = 1/r, κ2 = cos θ/(R + r cos θ)
    let theta = 2.3;
    let b = t.shape_operator(&[theta, 1.0]).unwrap();
    let k2 = theta.cos() / (2.0 + theta.cos());
    assert!(close(linalg::trace(&b), 1.0 + k2, 1e-12));
    assert!(linalg::norm(&linalg::mat_vec(&b, &t.unit_normal(&[theta, 1.0]).unwrap())) < 1e-8);
}

pub fn finite_difference_hessian_fallback_agrees() {
    for chart in [sphere(), torus()] {
        let fallback = chart.clone().without_hessian();
        assert!(!fallback.has_hessian());
        for y in [[0.7, 0.3], [2.0, 5.0]] {
            let h = chart.second_derivatives(&y).unwrap();
            let hf = fallback.second_derivatives(&y).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    assert!(linalg::norm(&linalg::sub(&h[a][b], &hf[a][b])) < 1e-8);
                }
            }
            let b1 = chart.shape_operator(&y).unwrap();
            let b2 = fallback.shape_operator(&y).unwrap();
            assert!(mat_close(&b1, &b2, 1e-7));
        }
    }
}

pub fn tangential_components_examples() {
    let c = sphere();
    assert_eq!(c.tangential_components(&[1.0, 1.0], &[0.0; 3]).unwrap(), [0.0, 0.0]);
    let pl = Chart::plane(1.0);
    assert_eq!(
        pl.tangential_components(&[0.0, 0.0], &[2.0, -3.0, 0.0]).unwrap(),
        [2.0, -3.0]
    );
    let v = c.tangential_components(&[FRAC_PI_2, 0.0], &[0.0, 0.0, -1.0]).unwrap();
    assert!(close(v[0], 1.0, 1e-14) && close(v[1], 0.0, 1e-14));

    // reconstruction ∇χ v̂ = v
    let y = [0.8, 2.5];
    let j = c.jacobian(&y).unwrap();
    let p = c.tangential_projection(&y).unwrap();
    let v = linalg::mat_vec(&p, &[0.3, -1.2, 0.7]);
    let hat = c.tangential_components(&y, &v).unwrap();
    let back = linalg::axpy(&linalg::scale(hat[0], &j[0]), hat[1], &j[1]);
    assert!(linalg::norm(&linalg::sub(&back, &v)) < 1e-10);

    assert!(matches!(
        c.tangential_components(&y, &[1.0, 1.0, 1.0]),
        Err(Error::Contract(_))
    ));
}

pub fn domain_and_degeneracy_errors() {
    let c = sphere();
    assert!(matches!(c.metric_tensor(&[-0.1, 0.0]), Err(Error::Domain { .. })));
    assert!(matches!(c.metric_tensor(&[0.0, 1.0]), Err(Error::Degenerate { .. })));
    assert!(matches!(c.unit_normal(&[PI, 1.0]), Err(Error::Degenerate { .. })));
    // periodic axes wrap
    let t = torus();
    let a = t.point(&[0.5, 0.25]).unwrap();
    let b = t.point(&[0.5 + 2.0 * PI, 0.25 - 4.0 * PI]).unwrap();
    assert!(linalg::norm(&linalg::sub(&a, &b)) < 1e-13);
    let s = sphere();
    let a = s.point(&[1.0, 0.25]).unwrap();
    let b = s.point(&[1.0, 0.25 + 2.0 * PI]).unwrap();
    assert!(linalg::norm(&linalg::sub(&a, &b)) < 1e-13);
}

pub fn parametrization_independence_on_overlap() {
    let atlas = Atlas::<f64>::sphere(1.0).unwrap();
    let (c1, c2) = (&atlas.charts()[0], &atlas.charts()[1]);
    let f = parse_scalar_field::<f64>("x1*x2 + x3^3").unwrap();
    let (p1, p2) = (c1.pull_back_scalar(&f), c2.pull_back_scalar(&f));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut n = 0;
    while n < 100 {
        let x: Vec3<f64> = linalg::normalize(&[
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ]);
        // stay away from both pole pairs
        if x[2].abs() > 0.95 || x[0].abs() > 0.95 {
            continue;
        }
        n += 1;
        let y1 = c1.locate(&x).unwrap();
        let y2 = c2.locate(&x).unwrap();
        assert!(linalg::norm(&linalg::sub(&c1.point(&y1).unwrap(), &x)) < 1e-12);
        assert!(linalg::norm(&linalg::sub(&c2.point(&y2).unwrap(), &x)) < 1e-12);
        let (q1, q2) = (
            c1.tangential_projection(&y1).unwrap(),
            c2.tangential_projection(&y2).unwrap(),
        );
        assert!(mat_close(&q1, &q2, 1e-8));
        let (g1, g2) = (
            c1.surface_gradient(&p1, &y1).unwrap(),
            c2.surface_gradient(&p2, &y2).unwrap(),
        );
        assert!(linalg::norm(&linalg::sub(&g1, &g2)) < 1e-8);
        let (l1, l2) = (
            c1.laplace_beltrami_apply(&p1, &y1).unwrap(),
            c2.laplace_beltrami_apply(&p2, &y2).unwrap(),
        );
        assert!(close(l1, l2, 1e-8));
        let (n1, n2) = (c1.unit_normal(&y1).unwrap(), c2.unit_normal(&y2).unwrap());
        assert!(linalg::norm(&linalg::sub(&n1, &n2)) < 1e-12);
    }
}

pub fn atlas_projector_is_idempotent_and_fixes_chart_images() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for atlas in [
        Atlas::<f64>::sphere(1.5).unwrap(),
        Atlas::<f64>::torus(2.0, 0.7).unwrap(),
    ] {
        for _ in 0..500 {
            let x = [
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-1.0..1.0),
            ];
            let Ok(p) = atlas.project(&x) else { continue };
            let pp = atlas.project(&p).unwrap();
            assert!(linalg::norm(&linalg::sub(&pp, &p)) <= 1e-12 * (1.0 + linalg::norm(&x)));
        }
        for chart in atlas.charts() {
            for _ in 0..200 {
                let y = [rng.gen_range(0.05..PI - 0.05), rng.gen_range(0.0..2.0 * PI)];
                let x = chart.point(&y).unwrap();
                assert!(linalg::norm(&linalg::sub(&atlas.project(&x).unwrap(), &x)) < 1e-10);
            }
        }
    }
    assert!(Atlas::<f64>::sphere(1.0).unwrap().project(&[0.0; 3]).is_err());
    assert!(Atlas::<f64>::torus(1.0, 2.0).is_err());
}

pub fn atlas_frame_gives_exact_sphere_geometry() {
    let atlas = Atlas::<f64>::sphere(2.0).unwrap();
    let x = linalg::scale(2.0, &linalg::normalize(&[0.3, -0.4, 0.9]));
    let fr = atlas.frame(&x).unwrap();
    assert!(linalg::norm(&linalg::sub(&fr.normal, &linalg::scale(0.5, &x))) < 1e-13);
    assert!(close(fr.trace_shape(), 1.0, 1e-12)); // 2 / R
                                                  // near a pole of the first chart the second chart is used
    let fr = atlas.frame(&[0.0, 0.0, 2.0]).unwrap();
    assert!(linalg::norm(&linalg::sub(&fr.normal, &[0.0, 0.0, 1.0])) < 1e-13);
}

pub fn single_precision_geometry() {
    let c = Chart::<f32>::torus(2.0, 1.0);
    let g = c.metric_tensor(&[0.0, 0.0]).unwrap();
    assert!((g[1][1] - 9.0).abs() < 1e-5);
    assert!((c.area_element(&[0.0, 0.0]).unwrap() - 3.0).abs() < 1e-5);
}

/// Every check of the suite, by name.
pub const ALL: &[(&str, fn())] = &[
    ("metric_examples", metric_examples),
    ("area_element_examples", area_element_examples),
    ("unit_normal_examples", unit_normal_examples),
    (
        "projection_examples_and_consistency",
        projection_examples_and_consistency,
    ),
    ("surface_gradient_examples", surface_gradient_examples),
    ("surface_divergence_examples", surface_divergence_examples),
    ("laplace_beltrami_examples", laplace_beltrami_examples),
    (
        "laplace_beltrami_on_torus_matches_fd_oracle",
        laplace_beltrami_on_torus_matches_fd_oracle,
    ),
    (
        "spherical_harmonics_are_eigenfunctions",
        spherical_harmonics_are_eigenfunctions,
    ),
    (
        "divergence_of_gradient_is_laplace_beltrami",
        divergence_of_gradient_is_laplace_beltrami,
    ),
    ("shape_operator_examples", shape_operator_examples),
    (
        "finite_difference_hessian_fallback_agrees",
        finite_difference_hessian_fallback_agrees,
    ),
    ("tangential_components_examples", tangential_components_examples),
    ("domain_and_degeneracy_errors", domain_and_degeneracy_errors),
    (
        "parametrization_independence_on_overlap",
        parametrization_independence_on_overlap,
    ),
    (
        "atlas_projector_is_idempotent_and_fixes_chart_images",
        atlas_projector_is_idempotent_and_fixes_chart_images,
    ),
    (
        "atlas_frame_gives_exact_sphere_geometry",
        atlas_frame_gives_exact_sphere_geometry,
    ),
    ("single_precision_geometry", single_precision_geometry),
];
