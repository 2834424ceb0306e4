//! Isotropic congruences: `(n−1)`-parameter families of null lines on the
//! quadric. The affinor `(λ^i_j, λ^i)`, singular points (complex allowed),
//! the integrability defect and leaf integration of `ω_0^n = 0`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{AmbientModel, ProjectivePoint, Unembedded};
use crate::error::{Error, Result};
use crate::frames::{self, ConformalFrame};
use crate::hypersurface::{self, CausalType, Grid, ParamBox};
use crate::linalg::{self, Root};

/// Quadric and incidence residual allowed on a line.
pub const TOL_LINE: f64 = 1e-10;
/// Seeds whose symmetry defect exceeds this are rejected by [`stratify`].
pub const TOL_INTEGRABLE: f64 = 1e-6;
pub const DEFAULT_LEAF_STEP: f64 = 1e-2;
/// Parameter values along each line used when sweeping a leaf.
pub const SWEEP_SAMPLES: [f64; 5] = [-0.5, 0.0, 0.5, 1.0, 1.5];

pub trait IsotropicCongruence: Sync {
    fn ambient_dim(&self) -> usize;

    fn domain(&self) -> &ParamBox;

    /// The line through `u` as the pair `(A_0, A_1)`.
    fn line(&self, u: &[f64]) -> Result<(DVector<f64>, DVector<f64>)>;
}

type VecFn = Box<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;

/// Congruence given by base points `p(u)` and null directions `ℓ(u)` in
/// `Rⁿ₁`. `A_0` is the lifted base point, `A_1` the lifted unit future
/// direction.
pub struct NullLineCongruence {
    model: AmbientModel,
    domain: ParamBox,
    base: VecFn,
    direction: VecFn,
}

impl NullLineCongruence {
    pub fn new(
        n: usize,
        domain: ParamBox,
        base: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
        direction: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if domain.dim() + 1 != n {
            return Err(Error::DimensionMismatch {
                expected: n - 1,
                got: domain.dim(),
            });
        }
        Ok(Self {
            model: AmbientModel::new(n)?,
            domain,
            base: Box::new(base),
            direction: Box::new(direction),
        })
    }

    pub fn model(&self) -> &AmbientModel {
        &self.model
    }

    pub fn base(&self, u: &[f64]) -> DVector<f64> {
        (self.base)(u)
    }

    /// Unit future direction.
    pub fn direction(&self, u: &[f64]) -> DVector<f64> {
        frames::normalize_generator(&(self.direction)(u))
    }

    /// The point `p(u) + s ℓ̂(u)` of the line in `Rⁿ₁`.
    pub fn point_on_line(&self, u: &[f64], s: f64) -> DVector<f64> {
        self.base(u) + self.direction(u) * s
    }
}

impl std::fmt::Debug for NullLineCongruence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NullLineCongruence")
            .field("n", &self.model.n())
            .field("domain", &self.domain)
            .finish()
    }
}

impl IsotropicCongruence for NullLineCongruence {
    fn ambient_dim(&self) -> usize {
        self.model.n()
    }

    fn domain(&self) -> &ParamBox {
        &self.domain
    }

    fn line(&self, u: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        if u.len() != self.domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                got: u.len(),
            });
        }
        let p = self.base(u);
        let l = (self.direction)(u);
        if p.len() != self.model.n() || l.len() != self.model.n() {
            return Err(Error::DimensionMismatch {
                expected: self.model.n(),
                got: p.len().max(l.len()),
            });
        }
        if l.norm() == 0.0 {
            return Err(Error::ZeroVector);
        }
        let l = frames::normalize_generator(&l);
        Ok((self.model.lift(&p), self.model.tangent_lift(&p, &l)))
    }
}

/// Residuals of the line invariants at `u`: quadric residuals of both
/// points and their mutual product, relative to the coordinate norms.
pub fn line_residuals(cong: &(impl IsotropicCongruence + ?Sized), u: &[f64]) -> Result<[f64; 3]> {
    let model = AmbientModel::new(cong.ambient_dim())?;
    let (a0, a1) = cong.line(u)?;
    let (n0, n1) = (a0.norm(), a1.norm());
    Ok([
        model.dot(&a0, &a0).abs() / (n0 * n0),
        model.dot(&a1, &a1).abs() / (n1 * n1),
        model.dot(&a0, &a1).abs() / (n0 * n1),
    ])
}

fn check_line(model: &AmbientModel, a0: &DVector<f64>, a1: &DVector<f64>) -> Result<()> {
    let (n0, n1) = (a0.norm(), a1.norm());
    let worst = (model.dot(a0, a0).abs() / (n0 * n0))
        .max(model.dot(a1, a1).abs() / (n1 * n1))
        .max(model.dot(a0, a1).abs() / (n0 * n1));
    if worst > TOL_LINE {
        return Err(Error::NotOnQuadric { residual: worst });
    }
    Ok(())
}

/// Adapted frame on the line through `u`. The screen is made of lifted
/// spatial directions orthogonal to the line direction.
pub fn congruence_frame(
    cong: &(impl IsotropicCongruence + ?Sized),
    u: &[f64],
) -> Result<ConformalFrame> {
    let model = AmbientModel::new(cong.ambient_dim())?;
    let (a0, a1) = cong.line(u)?;
    check_line(&model, &a0, &a1)?;
    let p = model.darboux_unembed(&ProjectivePoint::new(a0.clone())?)?;
    match p {
        Unembedded::Finite(p) => {
            let l = a1.rows(1, model.n()).into_owned();
            let screen = spatial_screen(&model, &l)?;
            let lifted = screen.iter().map(|w| model.tangent_lift(&p, w)).collect();
            frames::complete_null_pairs(&model, &a0, &a1, lifted)
        }
        Unembedded::AtInfinity => {
            let candidates: Vec<DVector<f64>> = (0..model.dim())
                .map(|k| {
                    let mut e = DVector::zeros(model.dim());
                    e[k] = 1.0;
                    e
                })
                .collect();
            frames::adapt_on_generator(&model, &a0, &a1, &candidates, false)
        }
    }
}

/// Orthonormal spatial vectors orthogonal to the spatial part of `l`.
fn spatial_screen(model: &AmbientModel, l: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    let n = model.n();
    let spatial = l.rows(0, n - 1).into_owned();
    let norm = spatial.norm();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let axis = spatial / norm;
    let mut screen: Vec<DVector<f64>> = Vec::with_capacity(n - 2);
    for k in 0..n - 1 {
        if screen.len() == n - 2 {
            break;
        }
        let mut w = DVector::zeros(n - 1);
        w[k] = 1.0;
        w -= &axis * axis[k];
        for e in &screen {
            let c = w.dot(e);
            w -= e * c;
        }
        let s = w.norm();
        if s > 1e-6 {
            screen.push(w / s);
        }
    }
    Ok(screen
        .into_iter()
        .map(|w| {
            let mut v = DVector::zeros(n);
            v.rows_mut(0, n - 1).copy_from(&w);
            v
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CongruenceAnalysis {
    pub u: Vec<f64>,
    /// `λ^i_j` in the orthonormal screen; not symmetric in general.
    pub lambda: DMatrix<f64>,
    /// `λ^i`.
    pub lambda_vec: DVector<f64>,
    pub symmetry_defect: f64,
    /// Roots `x` of `det(λ + x I) = 0`, complex allowed.
    pub roots: Vec<Root>,
    pub frame: ConformalFrame,
}

impl CongruenceAnalysis {
    pub fn root_count(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    pub fn all_real(&self) -> bool {
        self.roots.iter().all(|r| r.real)
    }

    pub fn has_conjugate_pair(&self) -> bool {
        self.roots.iter().any(|r| {
            !r.real
                && self
                    .roots
                    .iter()
                    .any(|s| (s.value - r.value.conj()).norm() <= 1e-6 * (1.0 + r.value.norm()))
        })
    }
}

type LineDerivatives = (Vec<DVector<f64>>, Vec<DVector<f64>>);

/// Derivatives of `A_0` and `A_1` along each parameter by central differences.
fn line_derivatives(
    cong: &(impl IsotropicCongruence + ?Sized),
    u: &[f64],
    h: f64,
) -> Result<LineDerivatives> {
    let mut d0 = Vec::with_capacity(u.len());
    let mut d1 = Vec::with_capacity(u.len());
    for a in 0..u.len() {
        let mut up = u.to_vec();
        let mut dn = u.to_vec();
        up[a] += h;
        dn[a] -= h;
        let (p0, p1) = cong.line(&up)?;
        let (m0, m1) = cong.line(&dn)?;
        d0.push((p0 - m0) / (2.0 * h));
        d1.push((p1 - m1) / (2.0 * h));
    }
    Ok((d0, d1))
}

/// `ω_0^n(∂_a) = −(∂_a A_0, A_1)` for every parameter direction.
pub fn normal_form(
    cong: &(impl IsotropicCongruence + ?Sized),
    u: &[f64],
    h: f64,
) -> Result<DVector<f64>> {
    let model = AmbientModel::new(cong.ambient_dim())?;
    let (_, a1) = cong.line(u)?;
    let (d0, _) = line_derivatives(cong, u, h)?;
    Ok(DVector::from_iterator(
        d0.len(),
        d0.iter().map(|d| -model.dot(d, &a1)),
    ))
}

/// Expresses `ω_1^i` in the basis `(ω_0^j, ω_0^n)` at `u`.
pub fn congruence_affinor(
    cong: &(impl IsotropicCongruence + ?Sized),
    u: &[f64],
    step: f64,
) -> Result<CongruenceAnalysis> {
    let n = cong.ambient_dim();
    let model = AmbientModel::new(n)?;
    if u.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: u.len(),
        });
    }
    let frame = congruence_frame(cong, u)?;
    let (d0, d1) = line_derivatives(cong, u, step)?;
    let screen = frame.screen();
    let a1 = frame.vector(1);
    let m = n - 2;
    let d = n - 1;

    // Rows: ω_0^j (j in screen), then ω_0^n; columns: parameter directions.
    let mut basis = DMatrix::zeros(d, d);
    let mut w1 = DMatrix::zeros(m, d);
    for a in 0..d {
        for (i, e) in screen.iter().enumerate() {
            basis[(i, a)] = model.dot(&d0[a], e);
            w1[(i, a)] = model.dot(&d1[a], e);
        }
        basis[(m, a)] = -model.dot(&d0[a], &a1);
    }
    let sv = basis.clone().svd(false, false).singular_values;
    if sv.min() <= 1e-10 * sv.max().max(f64::MIN_POSITIVE) {
        return Err(Error::NotCongruence);
    }
    // [λ | λ^i] · basis = w1
    let coeffs = linalg::solve_matrix(&basis.transpose(), &w1.transpose())
        .map_err(|_| Error::NotCongruence)?
        .transpose();
    let lambda = coeffs.columns(0, m).into_owned();
    let lambda_vec = coeffs.column(m).into_owned();
    let symmetry_defect = (&lambda - lambda.transpose()).amax();
    let roots = linalg::char_roots(&lambda)?;
    Ok(CongruenceAnalysis {
        u: u.to_vec(),
        lambda,
        lambda_vec,
        symmetry_defect,
        roots,
        frame,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongruenceSingularPoint {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    pub real: bool,
    /// `A_1 + x A_0` un-embedded, for real roots.
    pub location: Option<Unembedded>,
}

pub fn congruence_singular_points(an: &CongruenceAnalysis) -> Vec<CongruenceSingularPoint> {
    let model = AmbientModel::new(an.frame.n()).expect("frame dimension is valid");
    an.roots
        .iter()
        .map(|r| {
            let location = if r.real {
                let x = an.frame.vector(1) + an.frame.vector(0) * r.value.re;
                ProjectivePoint::new(x)
                    .and_then(|p| model.darboux_unembed(&p))
                    .ok()
            } else {
                None
            };
            CongruenceSingularPoint {
                re: r.value.re,
                im: r.value.im,
                multiplicity: r.multiplicity,
                real: r.real,
                location,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub max_defect: f64,
    pub analyses: Vec<(Vec<f64>, Result<CongruenceAnalysis>)>,
}

impl DefectReport {
    /// True when every sample below `tol` has only real roots.
    pub fn real_where_symmetric(&self, tol: f64) -> bool {
        self.analyses.iter().all(|(_, a)| match a {
            Ok(a) if a.symmetry_defect < tol => a.all_real(),
            _ => true,
        })
    }

    pub fn failures(&self) -> usize {
        self.analyses.iter().filter(|(_, a)| a.is_err()).count()
    }
}

/// Largest symmetry defect of `λ` over the grid.
pub fn integrability_defect(
    cong: &(impl IsotropicCongruence + ?Sized),
    grid: &Grid,
    step: f64,
) -> DefectReport {
    let analyses: Vec<(Vec<f64>, Result<CongruenceAnalysis>)> = grid
        .points()
        .into_par_iter()
        .map(|u| {
            let a = congruence_affinor(cong, &u, step);
            (u, a)
        })
        .collect();
    let max_defect = analyses
        .iter()
        .filter_map(|(_, a)| a.as_ref().ok())
        .map(|a| a.symmetry_defect)
        .fold(0.0, f64::max);
    DefectReport {
        max_defect,
        analyses,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafSample {
    pub u: Vec<f64>,
    /// Swept points `p + s ℓ̂` classified for each `s` in [`SWEEP_SAMPLES`].
    pub sweep: Vec<Option<CausalType>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub seed: Vec<f64>,
    /// Parameter solved for along the leaf.
    pub dependent: usize,
    pub samples: Vec<LeafSample>,
}

impl Leaf {
    /// Spread of the dependent parameter over the leaf.
    pub fn dependent_spread(&self) -> f64 {
        let vals = self.samples.iter().map(|s| s.u[self.dependent]);
        let lo = vals.clone().fold(f64::INFINITY, f64::min);
        let hi = vals.fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    pub fn lightlike_fraction(&self) -> f64 {
        let total: usize = self.samples.iter().map(|s| s.sweep.len()).sum();
        if total == 0 {
            return 0.0;
        }
        let hits = self
            .samples
            .iter()
            .flat_map(|s| s.sweep.iter())
            .filter(|t| **t == Some(CausalType::Lightlike))
            .count();
        hits as f64 / total as f64
    }
}

/// Slope field of the leaf written as a graph `u_m = φ(u_free)`.
fn leaf_slopes(
    cong: &(impl IsotropicCongruence + ?Sized),
    u: &[f64],
    dependent: usize,
    h: f64,
) -> Result<DVector<f64>> {
    let alpha = normal_form(cong, u, h)?;
    let am = alpha[dependent];
    if am.abs() <= 1e-12 * alpha.amax().max(f64::MIN_POSITIVE) {
        return Err(Error::NotCongruence);
    }
    Ok(-alpha / am)
}

fn rk4_step(
    cong: &(impl IsotropicCongruence + ?Sized),
    u: &[f64],
    free: usize,
    dependent: usize,
    step: f64,
    h: f64,
) -> Result<Vec<f64>> {
    let domain = cong.domain();
    let slope_at = |v: &[f64]| -> Result<f64> {
        if !domain.contains(v) {
            return Err(Error::OutOfDomain(v.to_vec()));
        }
        Ok(leaf_slopes(cong, v, dependent, h)?[free])
    };
    let shifted = |dt: f64, dm: f64| {
        let mut v = u.to_vec();
        v[free] += dt;
        v[dependent] += dm;
        v
    };
    let k1 = slope_at(u)?;
    let k2 = slope_at(&shifted(step / 2.0, step / 2.0 * k1))?;
    let k3 = slope_at(&shifted(step / 2.0, step / 2.0 * k2))?;
    let k4 = slope_at(&shifted(step, step * k3))?;
    let next = shifted(step, step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    if !domain.contains(&next) {
        return Err(Error::OutOfDomain(next));
    }
    Ok(next)
}

/// Integrates the leaf of `ω_0^n = 0` through `seed`. The leaf is a graph
/// over all parameters but the one where `ω_0^n` is largest; it is sampled
/// on a tensor grid of `2 count + 1` points per free parameter, sweeping
/// one free parameter after another.
pub fn stratify(
    cong: &(impl IsotropicCongruence + ?Sized),
    seed: &[f64],
    step: f64,
    count: usize,
) -> Result<Leaf> {
    let n = cong.ambient_dim();
    let h = frames::DEFAULT_STEP;
    let an = congruence_affinor(cong, seed, h)?;
    if an.symmetry_defect > TOL_INTEGRABLE {
        return Err(Error::NonIntegrable {
            defect: an.symmetry_defect,
        });
    }
    let alpha = normal_form(cong, seed, h)?;
    let dependent = alpha.iamax();
    let free: Vec<usize> = (0..n - 1).filter(|&b| b != dependent).collect();

    let mut points = vec![seed.to_vec()];
    for &b in &free {
        let mut next = Vec::with_capacity(points.len() * (2 * count + 1));
        for start in &points {
            let mut back = Vec::with_capacity(count);
            let mut cur = start.clone();
            for _ in 0..count {
                cur = rk4_step(cong, &cur, b, dependent, -step, h)?;
                back.push(cur.clone());
            }
            back.reverse();
            next.extend(back);
            next.push(start.clone());
            let mut cur = start.clone();
            for _ in 0..count {
                cur = rk4_step(cong, &cur, b, dependent, step, h)?;
                next.push(cur.clone());
            }
        }
        points = next;
    }

    let samples = points
        .into_par_iter()
        .map(|u| {
            let sweep = sweep_types(cong, &u, dependent, &free, h);
            LeafSample { u, sweep }
        })
        .collect();
    Ok(Leaf {
        seed: seed.to_vec(),
        dependent,
        samples,
    })
}

fn unembed_on_line(
    cong: &(impl IsotropicCongruence + ?Sized),
    model: &AmbientModel,
    u: &[f64],
    s: f64,
) -> Result<DVector<f64>> {
    let (a0, a1) = cong.line(u)?;
    match model.darboux_unembed(&ProjectivePoint::new(a0 + a1 * s)?)? {
        Unembedded::Finite(x) => Ok(x),
        Unembedded::AtInfinity => Err(Error::OutOfDomain(u.to_vec())),
    }
}

/// Causal type of the swept hypersurface `(u_free, s) ↦ A_0 + s A_1` at
/// each sweep sample, with finite-difference tangents.
fn sweep_types(
    cong: &(impl IsotropicCongruence + ?Sized),
    u: &[f64],
    dependent: usize,
    free: &[usize],
    h: f64,
) -> Vec<Option<CausalType>> {
    let Ok(model) = AmbientModel::new(cong.ambient_dim()) else {
        return vec![None; SWEEP_SAMPLES.len()];
    };
    let slopes = leaf_slopes(cong, u, dependent, h).ok();
    SWEEP_SAMPLES
        .iter()
        .map(|&s| {
            let slopes = slopes.as_ref()?;
            let fd = hypersurface::FD_STEP_FIRST;
            let mut cols = Vec::with_capacity(free.len() + 1);
            for &b in free {
                let mut up = u.to_vec();
                let mut dn = u.to_vec();
                up[b] += fd;
                dn[b] -= fd;
                up[dependent] += fd * slopes[b];
                dn[dependent] -= fd * slopes[b];
                let xp = unembed_on_line(cong, &model, &up, s).ok()?;
                let xm = unembed_on_line(cong, &model, &dn, s).ok()?;
                cols.push((xp - xm) / (2.0 * fd));
            }
            let xp = unembed_on_line(cong, &model, u, s + fd).ok()?;
            let xm = unembed_on_line(cong, &model, u, s - fd).ok()?;
            cols.push((xp - xm) / (2.0 * fd));
            let jac = DMatrix::from_columns(&cols);
            hypersurface::classify_jacobian(&jac, hypersurface::TOL_FINITE_DIFF)
                .ok()
                .map(|c| c.causal)
        })
        .collect()
}
