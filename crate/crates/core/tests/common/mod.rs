//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the library's numerics: forms are summed
//! explicitly, null directions come from nalgebra's symmetric eigensolver,
//! singular points are located by scanning for rank drops.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub const SCAN_RANGE: f64 = 10.0;
pub const SCAN_SAMPLES: usize = 2000;

/// `Σ_{r<n} X^r Y^r − X^n Y^n − X^0 Y^{n+1} − X^{n+1} Y^0` for vectors of
/// length `n + 2`.
pub fn ambient_dot(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let m = x.len();
    let n = m - 2;
    let mut s = -x[0] * y[m - 1] - x[m - 1] * y[0];
    for r in 1..n {
        s += x[r] * y[r];
    }
    s - x[n] * y[n]
}

pub fn minkowski(p: &DVector<f64>, q: &DVector<f64>) -> f64 {
    let n = p.len();
    p.rows(0, n - 1).dot(&q.rows(0, n - 1)) - p[n - 1] * q[n - 1]
}

pub fn lift(p: &DVector<f64>) -> DVector<f64> {
    let n = p.len();
    let mut x = DVector::zeros(n + 2);
    x[0] = 1.0;
    x.rows_mut(1, n).copy_from(p);
    x[n + 1] = 0.5 * minkowski(p, p);
    x
}

pub fn tangent_lift(p: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let n = p.len();
    let mut x = DVector::zeros(n + 2);
    x.rows_mut(1, n).copy_from(v);
    x[n + 1] = minkowski(p, v);
    x
}

pub fn induced(j: &DMatrix<f64>) -> DMatrix<f64> {
    let n = j.nrows();
    let mut g = DMatrix::identity(n, n);
    g[(n - 1, n - 1)] = -1.0;
    j.transpose() * g * j
}

/// Null generator and the remaining parameter directions of a lightlike
/// Jacobian: eigenvectors of the induced form, smallest magnitude first.
pub fn null_split(j: &DMatrix<f64>) -> (DVector<f64>, Vec<DVector<f64>>) {
    let eig = SymmetricEigen::new(induced(j));
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .abs()
            .total_cmp(&eig.eigenvalues[b].abs())
    });
    let k = eig.eigenvectors.column(idx[0]).into_owned();
    let l = j * k;
    let sign = if l[l.len() - 1] < 0.0 { -1.0 } else { 1.0 };
    let rest = idx[1..]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    (
        l * (sign / (j * eig.eigenvectors.column(idx[0])).norm()),
        rest,
    )
}

pub fn fd_jacobian(f: &dyn Fn(&[f64]) -> DVector<f64>, u: &[f64], h: f64) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = (0..u.len())
        .map(|a| {
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[a] += h;
            dn[a] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect();
    DMatrix::from_columns(&cols)
}

/// Five-point central difference of `f` along `w` at `u`.
pub fn fd5_along<T>(f: &dyn Fn(&[f64]) -> T, u: &[f64], w: &[f64], h: f64) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let at = |s: f64| {
        let v: Vec<f64> = u.iter().zip(w).map(|(x, d)| x + s * d).collect();
        f(&v)
    };
    (at(-2.0 * h) - at(2.0 * h) + (at(h) - at(-h)) * 8.0) * (1.0 / (12.0 * h))
}

/// Jacobian by five-point differences.
pub fn fd5_jacobian(f: &dyn Fn(&[f64]) -> DVector<f64>, u: &[f64], h: f64) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = (0..u.len())
        .map(|a| {
            let mut e = vec![0.0; u.len()];
            e[a] = 1.0;
            fd5_along(f, u, &e, h)
        })
        .collect();
    DMatrix::from_columns(&cols)
}

/// `σ_min / σ_max` of a matrix.
pub fn rank_ratio(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let hi = sv.max();
    if hi == 0.0 {
        0.0
    } else {
        sv.min() / hi
    }
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-12 * (1.0 + a.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Parameter values in `[−T, T]` where `matrix(t)` loses rank: local minima
/// of `σ_min/σ_max` on a uniform scan, refined by golden-section search.
pub fn rank_drop_scan(matrix: &dyn Fn(f64) -> DMatrix<f64>) -> Vec<f64> {
    let ratio = |t: f64| rank_ratio(&matrix(t));
    let ts: Vec<f64> = (0..SCAN_SAMPLES)
        .map(|k| -SCAN_RANGE + 2.0 * SCAN_RANGE * k as f64 / (SCAN_SAMPLES - 1) as f64)
        .collect();
    let vals: Vec<f64> = ts.iter().map(|&t| ratio(t)).collect();
    let mut out = Vec::new();
    for k in 1..SCAN_SAMPLES - 1 {
        if vals[k] <= vals[k - 1] && vals[k] < vals[k + 1] && vals[k] < 1e-2 {
            let t = golden_min(&ratio, ts[k - 1], ts[k + 1]);
            if ratio(t) < 1e-7 {
                out.push(t);
            }
        }
    }
    out
}

/// Rank-drop matrix along the generator of a lightlike hypersurface `f`
/// through `u`, in the gauge `A_0 = lift(f)`, `A_1 = lift of the unit future
/// generator`: columns `X(t)`, `A_0` and the derivatives of `X(t)` along the
/// non-null parameter directions.
pub fn lightlike_scan(f: &dyn Fn(&[f64]) -> DVector<f64>, u: &[f64]) -> Vec<f64> {
    lightlike_scan_steps(f, u, 1e-3, 3e-3)
}

/// [`lightlike_scan`] with explicit steps for the point Jacobian and for
/// the frame derivatives.
pub fn lightlike_scan_steps(
    f: &dyn Fn(&[f64]) -> DVector<f64>,
    u: &[f64],
    inner: f64,
    outer: f64,
) -> Vec<f64> {
    let frame_at = |v: &[f64]| {
        let j = fd5_jacobian(f, v, inner);
        let p = f(v);
        let (l, _) = null_split(&j);
        let x = lift(&p);
        let n = x.len();
        let t = tangent_lift(&p, &l);
        DVector::from_iterator(2 * n, x.iter().chain(t.iter()).copied())
    };
    let (_, dirs) = null_split(&fd5_jacobian(f, u, inner));
    let both = frame_at(u);
    let m = both.len() / 2;
    let a0 = both.rows(0, m).into_owned();
    let a1 = both.rows(m, m).into_owned();
    let derivs: Vec<(DVector<f64>, DVector<f64>)> = dirs
        .iter()
        .map(|w| {
            let d = fd5_along(&frame_at, u, w.as_slice(), outer);
            (d.rows(0, m).into_owned(), d.rows(m, m).into_owned())
        })
        .collect();
    rank_drop_scan(&|t| {
        let mut cols = vec![&a1 + &a0 * t, a0.clone()];
        for (d0, d1) in &derivs {
            cols.push(d1 + d0 * t);
        }
        DMatrix::from_columns(&cols)
    })
}

type LineFn<'a> = dyn Fn(&[f64]) -> (DVector<f64>, DVector<f64>) + 'a;

/// Rank-drop positions along the line through `u` of a congruence given by
/// its `(A_0, A_1)` evaluator.
pub fn congruence_scan(line: &LineFn, u: &[f64]) -> Vec<f64> {
    let stacked = |v: &[f64]| {
        let (a0, a1) = line(v);
        DVector::from_iterator(2 * a0.len(), a0.iter().chain(a1.iter()).copied())
    };
    let (a0, a1) = line(u);
    let m = a0.len();
    let derivs: Vec<(DVector<f64>, DVector<f64>)> = (0..u.len())
        .map(|a| {
            let mut e = vec![0.0; u.len()];
            e[a] = 1.0;
            let d = fd5_along(&stacked, u, &e, 1e-2);
            (d.rows(0, m).into_owned(), d.rows(m, m).into_owned())
        })
        .collect();
    rank_drop_scan(&|t| {
        let mut cols = vec![&a1 + &a0 * t, a0.clone()];
        for (d0, d1) in &derivs {
            cols.push(d1 + d0 * t);
        }
        DMatrix::from_columns(&cols)
    })
}

/// Point of `Rⁿ₁` represented by `A_1 + t A_0`, or `None` at infinity.
pub fn unembed(x: &DVector<f64>) -> Option<DVector<f64>> {
    let n = x.len() - 2;
    if x[0].abs() < 1e-12 * x.norm() {
        return None;
    }
    Some(x.rows(1, n) / x[0])
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.abs().row_sum().max();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(s);
    let k = a.nrows();
    let mut term = DMatrix::identity(k, k);
    let mut sum = DMatrix::identity(k, k);
    for j in 1..20 {
        term = &term * &scaled / j as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Observed order from residuals at steps `h` and `h/2`.
pub fn halving_ratio(coarse: f64, fine: f64) -> f64 {
    coarse / fine
}
