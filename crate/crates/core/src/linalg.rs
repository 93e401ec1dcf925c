//! Small fixed-size and dense linear algebra used by the geometry and spectral code.

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];
/// Row-major 3×3 matrix.
pub type Mat3<T> = [[T; 3]; 3];
pub type Mat2<T> = [[T; 2]; 2];

#[inline]
pub fn dot<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm<T: Real>(a: &Vec3<T>) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn add<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale<T: Real>(s: T, a: &Vec3<T>) -> Vec3<T> {
    [s * a[0], s * a[1], s * a[2]]
}

/// `a + s * b`
#[inline]
pub fn axpy<T: Real>(a: &Vec3<T>, s: T, b: &Vec3<T>) -> Vec3<T> {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

pub fn normalize<T: Real>(a: &Vec3<T>) -> Vec3<T> {
    scale(T::one() / norm(a), a)
}

pub fn zero3<T: Real>() -> Vec3<T> {
    [T::zero(); 3]
}

pub fn identity3<T: Real>() -> Mat3<T> {
    let mut m = [[T::zero(); 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn unit3<T: Real>(k: usize) -> Vec3<T> {
    let mut e = zero3();
    e[k] = T::one();
    e
}

pub fn mat_vec<T: Real>(m: &Mat3<T>, v: &Vec3<T>) -> Vec3<T> {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

pub fn mat_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut c = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn transpose<T: Real>(a: &Mat3<T>) -> Mat3<T> {
    let mut t = *a;
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn outer<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Mat3<T> {
    let mut m = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[i] * b[j];
        }
    }
    m
}

pub fn mat_add<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut c = *a;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] += b[i][j];
        }
    }
    c
}

pub fn mat_sub<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut c = *a;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] -= b[i][j];
        }
    }
    c
}

pub fn mat_scale<T: Real>(s: T, a: &Mat3<T>) -> Mat3<T> {
    let mut c = *a;
    for row in c.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    c
}

pub fn trace<T: Real>(a: &Mat3<T>) -> T {
    a[0][0] + a[1][1] + a[2][2]
}

pub fn max_abs3<T: Real>(a: &Mat3<T>) -> T {
    a.iter().flat_map(|r| r.iter()).fold(T::zero(), |m, x| m.max(x.abs()))
}

/// `I - n ⊗ n` for a unit vector `n`.
pub fn normal_complement<T: Real>(n: &Vec3<T>) -> Mat3<T> {
    mat_sub(&identity3(), &outer(n, n))
}

pub fn det2<T: Real>(m: &Mat2<T>) -> T {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn inv2<T: Real>(m: &Mat2<T>) -> Mat2<T> {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

/// Eigenvalues `(min, max)` of a symmetric 2×2 matrix.
pub fn sym2_eigenvalues<T: Real>(m: &Mat2<T>) -> (T, T) {
    let half = T::c(0.5);
    let mean = half * (m[0][0] + m[1][1]);
    let diff = half * (m[0][0] - m[1][1]);
    let off = half * (m[0][1] + m[1][0]);
    let r = (diff * diff + off * off).sqrt();
    (mean - r, mean + r)
}

/// Singular values `(min, max)` of the 3×2 matrix whose columns are `a` and `b`.
pub fn singular_values_3x2<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> (T, T) {
    let g = [[dot(a, a), dot(a, b)], [dot(a, b), dot(b, b)]];
    let (lo, hi) = sym2_eigenvalues(&g);
    (lo.max(T::zero()).sqrt(), hi.max(T::zero()).sqrt())
}

/// Orthonormal pair spanning the plane orthogonal to the unit vector `n`.
pub fn tangent_basis<T: Real>(n: &Vec3<T>) -> (Vec3<T>, Vec3<T>) {
    let k = (0..3)
        .min_by(|&i, &j| n[i].abs().partial_cmp(&n[j].abs()).unwrap())
        .unwrap();
    let e = unit3::<T>(k);
    let t1 = normalize(&cross(n, &e));
    let t2 = cross(n, &t1);
    (t1, t2)
}

/// Smallest eigenvalue of the symmetric part of `a` restricted to the plane orthogonal to `n`.
pub fn min_tangential_eigenvalue<T: Real>(a: &Mat3<T>, n: &Vec3<T>) -> T {
    let (t1, t2) = tangent_basis(n);
    let q = |u: &Vec3<T>, v: &Vec3<T>| dot(u, &mat_vec(a, v));
    let half = T::c(0.5);
    let off = half * (q(&t1, &t2) + q(&t2, &t1));
    sym2_eigenvalues(&[[q(&t1, &t1), off], [off, q(&t2, &t2)]]).0
}

/// Row-major dense matrix, used for small spectral computations and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// Singular value decomposition by one-sided Jacobi rotations.
    ///
    /// Returns the singular values in ascending order together with the
    /// matching right singular vectors (as columns of the returned matrix).
    /// One-sided Jacobi resolves tiny singular values to high relative
    /// accuracy, which the kernel detection relies on.
    pub fn svd_right(&self) -> (Vec<T>, DenseMatrix<T>) {
        let (m, n) = (self.rows, self.cols);
        // Work on columns stored contiguously.
        let mut cols: Vec<Vec<T>> = (0..n).map(|j| (0..m).map(|i| self[(i, j)]).collect()).collect();
        let mut v: Vec<Vec<T>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        let eps = T::epsilon();
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                    for i in 0..m {
                        alpha += cols[p][i] * cols[p][i];
                        beta += cols[q][i] * cols[q][i];
                        gamma += cols[p][i] * cols[q][i];
                    }
                    if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (T::c(2.0) * gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    let (cp, cq) = two_mut(&mut cols, p, q);
                    for i in 0..m {
                        let (a, b) = (cp[i], cq[i]);
                        cp[i] = c * a - s * b;
                        cq[i] = s * a + c * b;
                    }
                    let (vp, vq) = two_mut(&mut v, p, q);
                    for i in 0..n {
                        let (a, b) = (vp[i], vq[i]);
                        vp[i] = c * a - s * b;
                        vq[i] = s * a + c * b;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let sigma: Vec<T> = cols
            .iter()
            .map(|c| c.iter().map(|&x| x * x).sum::<T>().sqrt())
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| sigma[a].partial_cmp(&sigma[b]).unwrap());
        let mut vs = DenseMatrix::zeros(n, n);
        for (k, &j) in order.iter().enumerate() {
            for i in 0..n {
                vs[(i, k)] = v[j][i];
            }
        }
        (order.iter().map(|&j| sigma[j]).collect(), vs)
    }
}

fn two_mut<T>(v: &mut [T], p: usize, q: usize) -> (&mut T, &mut T) {
    debug_assert!(p < q);
    let (a, b) = v.split_at_mut(q);
    (&mut a[p], &mut b[0])
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

// Flat-vector helpers for the Krylov solvers.

pub fn vdot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn vnorm<T: Real>(a: &[T]) -> T {
    vdot(a, a).sqrt()
}

/// `y += s * x`
pub fn vaxpy<T: Real>(y: &mut [T], s: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}
