//! Adapted conformal frames and their numerical connection forms.
//!
//! A frame is stored as an `(n+2)×(n+2)` matrix whose rows are the vectors
//! `A_0, …, A_{n+1}`. The infinitesimal displacement `dA_ξ = ω_ξ^η A_η` is
//! recovered as `ω = dF · F⁻¹`, so `omega[(ξ, η)]` holds `ω_ξ^η`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conformal::AmbientModel;
use crate::error::{Error, Result};
use crate::linalg::{self, signature_of_eigenvalues, symmetric_eigen, Signature};

/// Default central-difference step on unit-scaled parameters.
pub const DEFAULT_STEP: f64 = 1e-4;
/// Relative eigenvalue threshold for a degenerate induced form.
pub const TOL_LIGHTLIKE: f64 = 1e-7;
const TOL_NULL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalFrame {
    vectors: DMatrix<f64>,
    target_gram: DMatrix<f64>,
}

impl ConformalFrame {
    pub fn new(vectors: DMatrix<f64>, target_gram: DMatrix<f64>) -> Result<Self> {
        if !vectors.is_square() || vectors.shape() != target_gram.shape() {
            return Err(Error::DimensionMismatch {
                expected: vectors.nrows(),
                got: target_gram.nrows(),
            });
        }
        Ok(Self {
            vectors,
            target_gram,
        })
    }

    pub fn from_rows(rows: &[DVector<f64>], target_gram: DMatrix<f64>) -> Result<Self> {
        let m = rows.len();
        let vectors = DMatrix::from_fn(m, m, |r, c| rows[r][c]);
        Self::new(vectors, target_gram)
    }

    /// `n` of the ambient `Cⁿ₁`.
    pub fn n(&self) -> usize {
        self.vectors.nrows() - 2
    }

    /// Frame vector `A_ξ`.
    pub fn vector(&self, xi: usize) -> DVector<f64> {
        self.vectors.row(xi).transpose()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn target_gram(&self) -> &DMatrix<f64> {
        &self.target_gram
    }

    pub fn gram(&self, model: &AmbientModel) -> DMatrix<f64> {
        model.form().gram_of_rows(&self.vectors)
    }

    pub fn gram_residual(&self, model: &AmbientModel) -> f64 {
        (self.gram(model) - &self.target_gram).amax()
    }

    /// Screen vectors `A_2, …, A_{n−1}` of a lightlike-adapted frame.
    pub fn screen(&self) -> Vec<DVector<f64>> {
        (2..self.n()).map(|i| self.vector(i)).collect()
    }
}

/// Gram matrix with `(A_0, A_{n+1}) = (A_1, A_n) = −1` and an identity screen.
pub fn lightlike_gram(n: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(n + 2, n + 2);
    g[(0, n + 1)] = -1.0;
    g[(n + 1, 0)] = -1.0;
    g[(1, n)] = -1.0;
    g[(n, 1)] = -1.0;
    for i in 2..n {
        g[(i, i)] = 1.0;
    }
    g
}

/// Gram matrix of a frame adapted to a nondegenerate hypersurface:
/// `(A_0, A_{n+1}) = −1`, `(A_i, A_j) = diag(tangent_signs)`,
/// `(A_n, A_n) = normal_sign`.
pub fn hypersurface_gram(n: usize, tangent_signs: &[f64], normal_sign: f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(n + 2, n + 2);
    g[(0, n + 1)] = -1.0;
    g[(n + 1, 0)] = -1.0;
    for (k, s) in tangent_signs.iter().enumerate() {
        g[(k + 1, k + 1)] = *s;
    }
    g[(n, n)] = normal_sign;
    g
}

/// Solves `(anchor, Y) = −1`, `(o, Y) = 0` for each `o` with minimal
/// Euclidean norm, then adds a multiple of the null `anchor` to make `Y`
/// null. `anchor` must be null and orthogonal to every `o`.
fn null_partner(
    model: &AmbientModel,
    anchor: &DVector<f64>,
    orthogonal_to: &[&DVector<f64>],
) -> Result<DVector<f64>> {
    let g = model.form().gram();
    let dim = model.dim();
    let rows = 1 + orthogonal_to.len();
    let mut c = DMatrix::zeros(rows, dim);
    c.row_mut(0).copy_from(&(g * anchor).transpose());
    for (k, o) in orthogonal_to.iter().enumerate() {
        c.row_mut(k + 1).copy_from(&(g * *o).transpose());
    }
    let mut b = DVector::zeros(rows);
    b[0] = -1.0;
    let y = linalg::solve(&(&c * c.transpose()), &b).map_err(|_| Error::DependentFrame)?;
    let mut y = c.transpose() * y;
    let alpha = 0.5 * model.dot(&y, &y);
    y += anchor * alpha;
    Ok(y)
}

/// Builds a frame with Gram matrix [`lightlike_gram`] on the isotropic line
/// through `a0` and `a1`.
///
/// `a0` must be a quadric point and `a1` a null vector orthogonal to it;
/// both are kept as given. Screen vectors come from `candidates`, which are
/// first made orthogonal to `a0`, `a1` and Euclidean-projected off their
/// span, then orthonormalized under the ambient form in order. With
/// `pivot`, candidates are taken by decreasing ambient square instead.
pub fn adapt_on_generator(
    model: &AmbientModel,
    a0: &DVector<f64>,
    a1: &DVector<f64>,
    candidates: &[DVector<f64>],
    pivot: bool,
) -> Result<ConformalFrame> {
    let n = model.n();
    let dim = model.dim();
    for v in [a0, a1] {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let (n0, n1) = (a0.norm(), a1.norm());
    if n0 == 0.0 || n1 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let r0 = model.dot(a0, a0);
    if r0.abs() > TOL_NULL * n0 * n0 {
        return Err(Error::NotOnQuadric {
            residual: r0 / (n0 * n0),
        });
    }
    if model.dot(a1, a1).abs() > TOL_NULL * n1 * n1 {
        return Err(Error::BadGenerator("second point is not null"));
    }
    if model.dot(a0, a1).abs() > TOL_NULL * n0 * n1 {
        return Err(Error::BadGenerator("line does not lie on the quadric"));
    }

    let g = model.form().gram();
    let pair = DMatrix::from_columns(&[a0.clone(), a1.clone()]);
    let pair_q = pair.clone().qr().q();
    if pair.clone().svd(false, false).singular_values.min() <= 1e-12 * n0.max(n1) {
        return Err(Error::DependentFrame);
    }
    let duals = DMatrix::from_columns(&[g * a0, g * a1]);
    let duals_q = duals.qr().q();

    let mut prepared: Vec<DVector<f64>> = candidates
        .iter()
        .map(|c| {
            let c = c - &duals_q * (duals_q.transpose() * c);
            &c - &pair_q * (pair_q.transpose() * &c)
        })
        .collect();
    if pivot {
        prepared.sort_by(|x, y| model.dot(y, y).total_cmp(&model.dot(x, x)));
    }

    let mut screen: Vec<DVector<f64>> = Vec::with_capacity(n - 2);
    for c in prepared {
        if screen.len() == n - 2 {
            break;
        }
        let scale = c.norm_squared();
        if scale == 0.0 {
            continue;
        }
        let mut r = c;
        for e in &screen {
            r -= e * model.dot(&r, e);
        }
        let s = model.dot(&r, &r);
        if s <= 1e-10 * scale {
            continue;
        }
        screen.push(r / s.sqrt());
    }
    if screen.len() < n - 2 {
        return Err(Error::DependentFrame);
    }

    complete_null_pairs(model, a0, a1, screen)
}

/// Completes `a0`, `a1` and an orthonormal screen orthogonal to both with
/// the null partners `A_n`, `A_{n+1}`.
pub fn complete_null_pairs(
    model: &AmbientModel,
    a0: &DVector<f64>,
    a1: &DVector<f64>,
    screen: Vec<DVector<f64>>,
) -> Result<ConformalFrame> {
    let n = model.n();
    if screen.len() != n - 2 {
        return Err(Error::DependentFrame);
    }
    let mut others: Vec<&DVector<f64>> = vec![a1];
    others.extend(screen.iter());
    let a_inf = null_partner(model, a0, &others)?;
    let mut others: Vec<&DVector<f64>> = vec![a0];
    others.extend(screen.iter());
    others.push(&a_inf);
    let a_n = null_partner(model, a1, &others)?;

    let mut rows = vec![a0.clone(), a1.clone()];
    rows.extend(screen);
    rows.push(a_n);
    rows.push(a_inf);
    ConformalFrame::from_rows(&rows, lightlike_gram(n))
}

/// First-order data of a lightlike hypersurface at one point of `Rⁿ₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct LightlikeJet {
    pub point: DVector<f64>,
    /// `n × (n−1)` tangent basis (Jacobian columns).
    pub tangents: DMatrix<f64>,
    pub generator: DVector<f64>,
    /// Relative eigenvalue threshold for the degenerate direction.
    pub tol: f64,
}

impl LightlikeJet {
    pub fn new(point: DVector<f64>, tangents: DMatrix<f64>, generator: DVector<f64>) -> Self {
        Self {
            point,
            tangents,
            generator,
            tol: TOL_LIGHTLIKE,
        }
    }
}

/// Normalizes a null generator to unit Euclidean length, future-pointing.
pub fn normalize_generator(l: &DVector<f64>) -> DVector<f64> {
    let t = l[l.len() - 1];
    let s = if t < 0.0 { -1.0 } else { 1.0 };
    l * (s / l.norm())
}

/// Adapted frame on a lightlike hypersurface: `A_0` the lifted point, `A_1`
/// the lifted unit future generator, screen from the remaining tangents.
pub fn adapt_lightlike_frame(model: &AmbientModel, jet: &LightlikeJet) -> Result<ConformalFrame> {
    let n = model.n();
    let t = &jet.tangents;
    if jet.point.len() != n || jet.generator.len() != n || t.shape() != (n, n - 1) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: jet.point.len(),
        });
    }
    if linalg::numerical_rank(t, 1e-10) < n - 1 {
        return Err(Error::RankDeficient);
    }
    let induced = t.transpose() * model.minkowski().gram() * t;
    let (values, _) = symmetric_eigen(&induced);
    let sig = signature_of_eigenvalues(values.as_slice(), jet.tol);
    if sig != Signature::new(n - 2, 0, 1) {
        return Err(Error::NotLightlike {
            plus: sig.plus,
            minus: sig.minus,
            zero: sig.zero,
        });
    }
    let l = &jet.generator;
    let ln = l.norm();
    if ln == 0.0 {
        return Err(Error::BadGenerator("zero generator"));
    }
    if model.g(l, l).abs() > 1e-8 * ln * ln {
        return Err(Error::BadGenerator("generator is not null"));
    }
    let coeffs = linalg::solve(&(t.transpose() * t), &(t.transpose() * l))
        .map_err(|_| Error::RankDeficient)?;
    if (t * &coeffs - l).norm() > 1e-8 * ln {
        return Err(Error::BadGenerator("generator is not tangent"));
    }
    let drop = (0..n - 1)
        .max_by(|&a, &b| {
            let wa = coeffs[a].abs() * t.column(a).norm();
            let wb = coeffs[b].abs() * t.column(b).norm();
            wa.total_cmp(&wb)
        })
        .unwrap_or(0);

    let p = &jet.point;
    let a0 = model.lift(p);
    let a1 = model.tangent_lift(p, &normalize_generator(l));
    let candidates: Vec<DVector<f64>> = (0..n - 1)
        .filter(|&a| a != drop)
        .map(|a| model.tangent_lift(p, &t.column(a).into_owned()))
        .collect();
    adapt_on_generator(model, &a0, &a1, &candidates, false)
}

/// Frame adapted to a spacelike or timelike hypersurface: `A_0` the lifted
/// point, `A_1..A_{n−1}` an orthonormal tangent basis, `A_n` the tangent
/// hypersphere normalized to `(A_n, A_n) = ∓1`.
pub fn adapt_hypersurface_frame(
    model: &AmbientModel,
    point: &DVector<f64>,
    tangents: &DMatrix<f64>,
) -> Result<ConformalFrame> {
    let n = model.n();
    if point.len() != n || tangents.shape() != (n, n - 1) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: point.len(),
        });
    }
    if linalg::numerical_rank(tangents, 1e-10) < n - 1 {
        return Err(Error::RankDeficient);
    }
    let g = model.minkowski().gram();
    let induced = tangents.transpose() * g * tangents;
    let sig = linalg::signature(&induced, TOL_LIGHTLIKE);
    if sig != Signature::new(n - 1, 0, 0) && sig != Signature::new(n - 2, 1, 0) {
        return Err(Error::NotNondegenerate);
    }

    // hyperbolic Gram–Schmidt, pivoting on the largest |g(v, v)|
    let mut pool: Vec<DVector<f64>> = tangents.column_iter().map(|c| c.into_owned()).collect();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut signs: Vec<f64> = Vec::new();
    while !pool.is_empty() {
        let (k, _) = pool
            .iter()
            .enumerate()
            .map(|(k, v)| (k, model.g(v, v).abs()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let v = pool.swap_remove(k);
        let s = model.g(&v, &v);
        if s.abs() <= 1e-12 * v.norm_squared() {
            return Err(Error::NotNondegenerate);
        }
        let e = &v / s.abs().sqrt();
        let sign = s.signum();
        for w in pool.iter_mut() {
            let c = model.g(w, &e) * sign;
            *w -= &e * c;
        }
        basis.push(e);
        signs.push(sign);
    }

    // normal: kernel of Tᵀ G
    let m = tangents.transpose() * g;
    let (_, vecs) = symmetric_eigen(&(m.transpose() * m));
    let mut normal = vecs.column(0).into_owned();
    let ns = model.g(&normal, &normal);
    normal /= ns.abs().sqrt();
    if normal[normal.iamax()] < 0.0 {
        normal = -normal;
    }

    let a0 = model.lift(point);
    let mut rows = vec![a0.clone()];
    rows.extend(basis.iter().map(|e| model.tangent_lift(point, e)));
    rows.push(model.tangent_lift(point, &normal));
    let others: Vec<&DVector<f64>> = rows[1..].iter().collect();
    let a_inf = null_partner(model, &a0, &others)?;
    rows.push(a_inf);
    ConformalFrame::from_rows(&rows, hypersurface_gram(n, &signs, ns.signum()))
}

/// Connection matrices `ω_ξ^η` of a frame field, one per parameter direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionForms {
    pub omega: Vec<DMatrix<f64>>,
    pub step: f64,
}

fn frame_matrix_derivative<F>(field: &F, u: &[f64], dir: usize, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<ConformalFrame>,
{
    let mut up = u.to_vec();
    let mut dn = u.to_vec();
    up[dir] += h;
    dn[dir] -= h;
    let fp = field(&up)?;
    let fm = field(&dn)?;
    Ok((fp.matrix() - fm.matrix()) / (2.0 * h))
}

/// `ω = dF · F⁻¹` by central differences along each parameter direction.
pub fn connection_forms<F>(field: &F, u: &[f64], h: f64) -> Result<ConnectionForms>
where
    F: Fn(&[f64]) -> Result<ConformalFrame>,
{
    let frame = field(u)?;
    let inv = linalg::inverse(frame.matrix())?;
    let omega = (0..u.len())
        .map(|d| Ok(frame_matrix_derivative(field, u, d, h)? * &inv))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConnectionForms { omega, step: h })
}

/// Maximum residuals of the relations satisfied by the connection forms,
/// grouped by the frame condition they come from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RelationResiduals {
    /// `ω_{n+1}^0 = ω_0^{n+1} = 0`, `ω_0^0 + ω_{n+1}^{n+1} = 0`.
    pub points: f64,
    /// `ω_r^{n+1} = g_rs ω_0^s`, `ω_r^0 = g_rs ω_{n+1}^s`.
    pub polar: f64,
    /// `g_rt ω_s^t + g_ts ω_r^t = 0` for a constant `g_rs`.
    pub metric: f64,
    /// Lightlike relations from the null pair `A_1`, `A_n`.
    pub null_pair: f64,
    /// `ω_1^i = g^{ij} ω_j^n`.
    pub screen: f64,
}

impl RelationResiduals {
    pub fn max(&self) -> f64 {
        [
            self.points,
            self.polar,
            self.metric,
            self.null_pair,
            self.screen,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Residuals of the relations between connection forms implied by a
/// constant target Gram matrix. The null-pair and screen groups are only
/// evaluated when `lightlike` is set.
pub fn relation_residuals(
    forms: &ConnectionForms,
    target: &DMatrix<f64>,
    lightlike: bool,
) -> RelationResiduals {
    let m = target.nrows();
    let n = m - 2;
    let mut out = RelationResiduals::default();
    let upd = |slot: &mut f64, v: f64| *slot = slot.max(v.abs());
    for w in &forms.omega {
        upd(&mut out.points, w[(n + 1, 0)]);
        upd(&mut out.points, w[(0, n + 1)]);
        upd(&mut out.points, w[(0, 0)] + w[(n + 1, n + 1)]);
        for r in 1..=n {
            let mut a = w[(r, n + 1)];
            let mut b = w[(r, 0)];
            for s in 1..=n {
                a -= target[(r, s)] * w[(0, s)];
                b -= target[(r, s)] * w[(n + 1, s)];
            }
            upd(&mut out.polar, a);
            upd(&mut out.polar, b);
            for s in 1..=n {
                let mut c = 0.0;
                for t in 1..=n {
                    c += target[(r, t)] * w[(s, t)] + target[(t, s)] * w[(r, t)];
                }
                upd(&mut out.metric, c);
            }
        }
        if lightlike {
            upd(&mut out.null_pair, w[(1, n)]);
            upd(&mut out.null_pair, w[(n, 1)]);
            upd(&mut out.null_pair, w[(0, n)] + w[(1, n + 1)]);
            upd(&mut out.null_pair, w[(0, 1)] + w[(n, n + 1)]);
            upd(&mut out.null_pair, w[(1, 1)] + w[(n, n)]);
            let screen = target.view((2, 2), (n - 2, n - 2)).into_owned();
            if let Ok(ginv) = linalg::inverse(&screen) {
                for i in 2..n {
                    let mut r = w[(1, i)];
                    for j in 2..n {
                        r -= ginv[(i - 2, j - 2)] * w[(j, n)];
                    }
                    upd(&mut out.screen, r);
                }
            }
        }
    }
    out
}

/// Finite-difference residual of `dω = ω ∧ ω` over all direction pairs.
pub fn structure_residual<F>(field: &F, u: &[f64], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<ConformalFrame>,
{
    let d = u.len();
    if d < 2 {
        return Err(Error::Invalid(
            "structure equations need at least two parameters".into(),
        ));
    }
    let at = |v: &[f64]| connection_forms(field, v, h);
    let center = at(u)?;
    let shifted = |dir: usize, sign: f64| {
        let mut v = u.to_vec();
        v[dir] += sign * h;
        at(&v)
    };
    let mut plus = Vec::with_capacity(d);
    let mut minus = Vec::with_capacity(d);
    for dir in 0..d {
        plus.push(shifted(dir, 1.0)?);
        minus.push(shifted(dir, -1.0)?);
    }
    let mut worst = 0.0_f64;
    for a in 0..d {
        for b in (a + 1)..d {
            let da_wb = (&plus[a].omega[b] - &minus[a].omega[b]) / (2.0 * h);
            let db_wa = (&plus[b].omega[a] - &minus[b].omega[a]) / (2.0 * h);
            let wa = &center.omega[a];
            let wb = &center.omega[b];
            let r = da_wb - db_wa - (wa * wb - wb * wa);
            worst = worst.max(r.amax());
        }
    }
    Ok(worst)
}
