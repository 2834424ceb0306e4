//! Small dense linear algebra over indefinite scalar products.
//!
//! Everything here works at the sizes the geometry needs (a dozen rows at
//! most): bilinear forms of prescribed signature, eigenvalue counting,
//! characteristic roots with multiplicities, and pivoted solves.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative determinant threshold below which a Gram matrix is degenerate.
pub const TOL_DEGENERATE: f64 = 1e-12;
/// Roots with `|Im| < TOL_REAL * (1 + |Re|)` are reported as real.
pub const TOL_REAL: f64 = 1e-8;
/// Roots closer than `CLUSTER_RADIUS * (1 + |root|)` are merged.
pub const CLUSTER_RADIUS: f64 = 1e-6;

const DK_MAX_ITER: usize = 500;
const DK_TOL: f64 = 1e-13;
const JACOBI_TOL: f64 = 1e-12;
const PIVOT_TOL: f64 = 1e-12;

/// A symmetric nondegenerate bilinear form on coordinate space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearForm {
    gram: DMatrix<f64>,
}

impl BilinearForm {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::DimensionMismatch {
                expected: gram.nrows(),
                got: gram.ncols(),
            });
        }
        let scale = gram.amax().max(f64::MIN_POSITIVE);
        let defect = (&gram - gram.transpose()).amax();
        if defect > 1e-12 * scale {
            return Err(Error::NotSymmetric { defect });
        }
        let row_norms: f64 = gram.row_iter().map(|r| r.norm()).product();
        if row_norms == 0.0 || gram.determinant().abs() <= TOL_DEGENERATE * row_norms {
            return Err(Error::DegenerateForm);
        }
        Ok(Self { gram })
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `uᵀ · gram · v`, summed so that swapping the arguments is exact.
    pub fn product(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let m = self.dim();
        for len in [u.len(), v.len()] {
            if len != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: len,
                });
            }
        }
        Ok(self.product_unchecked(u, v))
    }

    pub(crate) fn product_unchecked(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let g = &self.gram;
        let mut s = 0.0;
        for i in 0..g.nrows() {
            s += g[(i, i)] * (u[i] * v[i]);
            for j in (i + 1)..g.ncols() {
                let gij = g[(i, j)];
                if gij != 0.0 {
                    s += gij * (u[i] * v[j] + u[j] * v[i]);
                }
            }
        }
        s
    }

    pub fn square(&self, u: &DVector<f64>) -> f64 {
        self.product_unchecked(u, u)
    }

    /// Gram matrix of a family of vectors stored as rows.
    pub fn gram_of_rows(&self, rows: &DMatrix<f64>) -> DMatrix<f64> {
        rows * &self.gram * rows.transpose()
    }

    pub fn signature(&self) -> Signature {
        signature(&self.gram, 1e-12)
    }
}

/// Scalar product of two vectors under a form.
pub fn scalar_product(u: &DVector<f64>, v: &DVector<f64>, form: &BilinearForm) -> Result<f64> {
    form.product(u, v)
}

/// Inertia counts of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub plus: usize,
    pub minus: usize,
    pub zero: usize,
}

impl Signature {
    pub fn new(plus: usize, minus: usize, zero: usize) -> Self {
        Self { plus, minus, zero }
    }

    pub fn dim(&self) -> usize {
        self.plus + self.minus + self.zero
    }
}

/// Counts eigenvalues above, below and within `tol * spectral_radius` of zero.
pub fn signature(m: &DMatrix<f64>, tol: f64) -> Signature {
    let (values, _) = symmetric_eigen(m);
    signature_of_eigenvalues(values.as_slice(), tol)
}

pub(crate) fn signature_of_eigenvalues(values: &[f64], tol: f64) -> Signature {
    let radius = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut sig = Signature::new(0, 0, 0);
    for &v in values {
        if radius == 0.0 || v.abs() <= tol * radius {
            sig.zero += 1;
        } else if v > 0.0 {
            sig.plus += 1;
        } else {
            sig.minus += 1;
        }
    }
    sig
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
///
/// Returns eigenvalues in ascending order with the matching unit
/// eigenvectors as columns.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    let frob = a.norm();
    if frob > 0.0 {
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += 2.0 * a[(p, q)] * a[(p, q)];
                }
            }
            if off.sqrt() < JACOBI_TOL * frob {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Coefficients of `det(λI − m)`, lowest degree first, by Faddeev–LeVerrier.
pub fn char_poly(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    let mut coeffs = vec![0.0; k + 1];
    coeffs[k] = 1.0;
    let mut acc = DMatrix::<f64>::zeros(k, k);
    for step in 1..=k {
        acc = m * &acc;
        for i in 0..k {
            acc[(i, i)] += coeffs[k - step + 1];
        }
        coeffs[k - step] = -(m * &acc).trace() / step as f64;
    }
    coeffs
}

/// One root of a characteristic polynomial, after clustering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
    pub real: bool,
}

fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// `a / b` by Smith's method; the textbook formula squares `|b|` and
/// underflows near multiple roots.
fn cdiv(a: Complex64, b: Complex64) -> Complex64 {
    if b.re.abs() >= b.im.abs() {
        let r = b.im / b.re;
        let d = b.re + b.im * r;
        Complex64::new((a.re + a.im * r) / d, (a.im - a.re * r) / d)
    } else {
        let r = b.re / b.im;
        let d = b.re * r + b.im;
        Complex64::new((a.re * r + a.im) / d, (a.im * r - a.re) / d)
    }
}

/// Maximum that keeps NaN.
fn worst(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Durand–Kerner iteration for the `k` roots of a monic function of
/// degree `k`, started on a circle of the given radius.
fn durand_kerner(k: usize, radius: f64, eval: impl Fn(Complex64) -> Complex64) -> Vec<Complex64> {
    let mut z: Vec<Complex64> = (0..k)
        .map(|j| {
            Complex64::from_polar(
                radius,
                2.0 * std::f64::consts::PI * j as f64 / k as f64 + 0.4,
            )
        })
        .collect();
    for _ in 0..DK_MAX_ITER {
        let mut converged = true;
        for j in 0..k {
            let mut denom = Complex64::new(1.0, 0.0);
            for (i, zi) in z.iter().enumerate() {
                if i != j {
                    denom *= z[j] - zi;
                }
            }
            if denom.norm() == 0.0 {
                // coincident iterates; nudge apart
                denom = Complex64::new(f64::EPSILON, f64::EPSILON);
            }
            let f = eval(z[j]);
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            let delta = cdiv(f, denom);
            if !(delta.re.is_finite() && delta.im.is_finite()) {
                converged = false;
                continue;
            }
            z[j] -= delta;
            if delta.norm() > DK_TOL * (1.0 + z[j].norm()) {
                converged = false;
            }
        }
        if converged {
            break;
        }
    }
    z
}

/// Roots of a monic real polynomial (lowest degree first) by Durand–Kerner.
pub fn polynomial_roots(coeffs: &[f64], radius: f64) -> Result<Vec<Complex64>> {
    let k = coeffs.len() - 1;
    if k == 0 {
        return Ok(Vec::new());
    }
    let z = durand_kerner(k, radius, |x| horner(coeffs, x));
    // Multiple roots converge only to ~eps^(1/m); judge by backward error.
    let residual = z
        .iter()
        .map(|&zj| {
            let scale: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(p, c)| c.abs() * zj.norm().max(1.0).powi(p as i32))
                .sum();
            horner(coeffs, zj).norm() / scale.max(f64::MIN_POSITIVE)
        })
        .fold(0.0_f64, worst);
    if !residual.is_finite() || residual > 1e-8 {
        return Err(Error::NoConvergence { residual });
    }
    Ok(z)
}

/// `det(m + z I)` by Gaussian elimination with partial pivoting; exactly
/// singular shifts give zero.
pub fn shifted_det(m: &DMatrix<f64>, z: Complex64) -> Complex64 {
    let k = m.nrows();
    let mut a = DMatrix::from_fn(k, k, |i, j| {
        let d = if i == j { z } else { Complex64::new(0.0, 0.0) };
        Complex64::new(m[(i, j)], 0.0) + d
    });
    let mut det = Complex64::new(1.0, 0.0);
    for c in 0..k {
        let p = (c..k)
            .max_by(|&x, &y| a[(x, c)].norm().total_cmp(&a[(y, c)].norm()))
            .unwrap();
        let pivot = a[(p, c)];
        if pivot.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != c {
            a.swap_rows(p, c);
            det = -det;
        }
        det *= pivot;
        for r in c + 1..k {
            let f = cdiv(a[(r, c)], pivot);
            for j in c..k {
                let v = a[(c, j)];
                a[(r, j)] -= f * v;
            }
        }
    }
    det
}

/// Merges near-coincident roots and flags the real ones.
pub fn cluster_roots(raw: &[Complex64]) -> Vec<Root> {
    let n = raw.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let radius = CLUSTER_RADIUS * (1.0 + raw[i].norm().max(raw[j].norm()));
            if (raw[i] - raw[j]).norm() < radius {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut roots: Vec<Root> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        if seen.contains(&r) {
            continue;
        }
        seen.push(r);
        let members: Vec<Complex64> = (0..n)
            .filter(|&j| find(&mut label, j) == r)
            .map(|j| raw[j])
            .collect();
        let mean = members.iter().sum::<Complex64>() / members.len() as f64;
        let real = mean.im.abs() < TOL_REAL * (1.0 + mean.re.abs());
        roots.push(Root {
            value: if real {
                Complex64::new(mean.re, 0.0)
            } else {
                mean
            },
            multiplicity: members.len(),
            real,
        });
    }
    roots.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
    });
    roots
}

/// Roots `x` of `det(m + x I) = 0` with multiplicities.
pub fn char_roots(m: &DMatrix<f64>) -> Result<Vec<Root>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let k = m.nrows();
    if k == 0 {
        return Ok(Vec::new());
    }
    let max_row = m
        .row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    // The determinant is evaluated directly rather than through expanded
    // coefficients, so multiple eigenvalues of near-normal matrices keep
    // full accuracy.
    let raw = durand_kerner(k, 1.0 + max_row, |z| shifted_det(m, z));
    let residual = raw
        .iter()
        .map(|&z| shifted_det(m, z).norm() / (1.0 + max_row + z.norm()).powi(k as i32))
        .fold(0.0_f64, worst);
    if !residual.is_finite() || residual > 1e-8 {
        return Err(Error::NoConvergence { residual });
    }
    Ok(cluster_roots(&raw))
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let x = solve_matrix(a, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()))?;
    Ok(x.column(0).into_owned())
}

/// Solves `a X = b` for several right-hand sides.
pub fn solve_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    if b.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.nrows(),
        });
    }
    let mut m = a.clone();
    let mut rhs = b.clone();
    let scale = a.amax();
    if scale == 0.0 {
        return Err(Error::Singular);
    }
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, m[(r, col)].abs()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmax <= PIVOT_TOL * scale {
            return Err(Error::Singular);
        }
        m.swap_rows(col, piv);
        rhs.swap_rows(col, piv);
        for r in (col + 1)..n {
            let f = m[(r, col)] / m[(col, col)];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[(r, c)] -= f * m[(col, c)];
            }
            for c in 0..rhs.ncols() {
                rhs[(r, c)] -= f * rhs[(col, c)];
            }
        }
    }
    for c in 0..rhs.ncols() {
        for r in (0..n).rev() {
            let mut s = rhs[(r, c)];
            for k in (r + 1)..n {
                s -= m[(r, k)] * rhs[(k, c)];
            }
            rhs[(r, c)] = s / m[(r, r)];
        }
    }
    Ok(rhs)
}

pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve_matrix(a, &DMatrix::identity(a.nrows(), a.nrows()))
}

/// Numerical rank: singular values above `tol` times the largest.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().fold(0.0_f64, |a, &s| a.max(s));
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * top).count()
}

/// Orthonormal basis (columns) for the span of the first `rank` left
/// singular directions of `m`, from the eigenvectors of `m mᵀ`.
pub fn principal_basis(m: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let (values, vectors) = symmetric_eigen(&(m * m.transpose()));
    let k = values.len();
    DMatrix::from_fn(m.nrows(), rank, |r, c| vectors[(r, k - 1 - c)])
}

/// Orthonormal basis of the `dim` directions `v` minimizing `|m v|`.
pub fn kernel_basis(m: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let (_, vectors) = symmetric_eigen(&(m.transpose() * m));
    vectors.columns(0, dim).into_owned()
}

/// Sine of the largest principal angle between two subspaces given by
/// orthonormal column bases of equal dimension.
pub fn max_principal_sine(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let resid = b - a * (a.transpose() * b);
    let (values, _) = symmetric_eigen(&(resid.transpose() * &resid));
    values.iter().fold(0.0_f64, |m, &v| m.max(v)).sqrt()
}
