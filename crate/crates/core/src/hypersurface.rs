//! Parametric hypersurfaces of `Rⁿ₁` and their pointwise causal type.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, signature_of_eigenvalues, symmetric_eigen, Signature};

/// Degeneracy threshold for analytic jets.
pub const TOL_ANALYTIC: f64 = 1e-7;
/// Degeneracy threshold for finite-difference jets.
pub const TOL_FINITE_DIFF: f64 = 1e-4;
/// Central-difference step for first derivatives.
pub const FD_STEP_FIRST: f64 = 1e-5;
/// Central-difference step for second derivatives of a numerical Jacobian.
pub const FD_STEP_SECOND: f64 = 1e-3;

/// Axis-aligned parameter box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParamBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box corners differ in dimension");
        Self { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| *x >= *a && *x <= *b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }
}

/// A hypersurface `u ↦ f(u) ∈ Rⁿ₁` over an `(n−1)`-dimensional box.
///
/// Implementors supply the point map and, when they can, analytic first and
/// second derivatives. Missing derivatives are replaced by central
/// differences.
pub trait Immersion: Sync {
    /// `n`, the dimension of the ambient `Rⁿ₁`.
    fn ambient_dim(&self) -> usize;
    fn domain(&self) -> &ParamBox;
    fn point(&self, u: &[f64]) -> DVector<f64>;
    /// `n × (n−1)` Jacobian.
    fn jacobian(&self, _u: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
    /// `hessian[a]` is `∂_a` of the Jacobian.
    fn hessian(&self, _u: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        None
    }
}

type PointFn = dyn Fn(&[f64]) -> DVector<f64> + Send + Sync;
type JacobianFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
type HessianFn = dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync;

/// Closure-backed [`Immersion`].
pub struct ParametricHypersurface {
    n: usize,
    domain: ParamBox,
    point: Box<PointFn>,
    jacobian: Option<Box<JacobianFn>>,
    hessian: Option<Box<HessianFn>>,
}

impl ParametricHypersurface {
    pub fn new(
        n: usize,
        domain: ParamBox,
        point: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            n,
            domain,
            point: Box::new(point),
            jacobian: None,
            hessian: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Box::new(jac));
        self
    }

    pub fn with_hessian(
        mut self,
        hess: impl Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Box::new(hess));
        self
    }

    /// Drops analytic derivatives so every jet is computed numerically.
    pub fn numerical(mut self) -> Self {
        self.jacobian = None;
        self.hessian = None;
        self
    }

    pub fn set_domain(&mut self, domain: ParamBox) {
        self.domain = domain;
    }
}

impl fmt::Debug for ParametricHypersurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricHypersurface")
            .field("n", &self.n)
            .field("domain", &self.domain)
            .field("analytic", &self.jacobian.is_some())
            .finish()
    }
}

impl Immersion for ParametricHypersurface {
    fn ambient_dim(&self) -> usize {
        self.n
    }

    fn domain(&self) -> &ParamBox {
        &self.domain
    }

    fn point(&self, u: &[f64]) -> DVector<f64> {
        (self.point)(u)
    }

    fn jacobian(&self, u: &[f64]) -> Option<DMatrix<f64>> {
        self.jacobian.as_ref().map(|j| j(u))
    }

    fn hessian(&self, u: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        self.hessian.as_ref().map(|h| h(u))
    }
}

/// Value and Jacobian at a parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub analytic: bool,
}

impl Jet {
    /// Degeneracy threshold appropriate to how the jet was obtained.
    pub fn tolerance(&self) -> f64 {
        if self.analytic {
            TOL_ANALYTIC
        } else {
            TOL_FINITE_DIFF
        }
    }
}

fn numeric_jacobian<F>(f: F, u: &[f64], n: usize, h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> DVector<f64>,
{
    let d = u.len();
    let mut jac = DMatrix::zeros(n, d);
    let mut w = u.to_vec();
    for a in 0..d {
        w[a] = u[a] + h;
        let fp = f(&w);
        w[a] = u[a] - h;
        let fm = f(&w);
        w[a] = u[a];
        jac.set_column(a, &((fp - fm) / (2.0 * h)));
    }
    jac
}

pub fn jet(imm: &(impl Immersion + ?Sized), u: &[f64]) -> Jet {
    let value = imm.point(u);
    match imm.jacobian(u) {
        Some(jacobian) => Jet {
            value,
            jacobian,
            analytic: true,
        },
        None => Jet {
            jacobian: numeric_jacobian(|w| imm.point(w), u, imm.ambient_dim(), FD_STEP_FIRST),
            value,
            analytic: false,
        },
    }
}

/// Second derivatives, analytic when available.
pub fn hessian(imm: &(impl Immersion + ?Sized), u: &[f64]) -> Vec<DMatrix<f64>> {
    if let Some(h) = imm.hessian(u) {
        return h;
    }
    let (step, analytic) = match imm.jacobian(u) {
        Some(_) => (FD_STEP_FIRST, true),
        None => (FD_STEP_SECOND, false),
    };
    let jac_at = |w: &[f64]| {
        if analytic {
            imm.jacobian(w).expect("analytic Jacobian")
        } else {
            numeric_jacobian(|x| imm.point(x), w, imm.ambient_dim(), FD_STEP_FIRST)
        }
    };
    (0..u.len())
        .map(|a| {
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[a] += step;
            dn[a] -= step;
            (jac_at(&up) - jac_at(&dn)) / (2.0 * step)
        })
        .collect()
}

fn minkowski_gram(n: usize) -> DMatrix<f64> {
    let mut g = DMatrix::identity(n, n);
    g[(n - 1, n - 1)] = -1.0;
    g
}

/// `Jᵀ G J` for a tangent basis `J`, symmetrized.
pub fn induced_from_jacobian(jacobian: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, d) = jacobian.shape();
    if d + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: d,
        });
    }
    if linalg::numerical_rank(jacobian, 1e-10) < d {
        return Err(Error::RankDeficient);
    }
    let m = jacobian.transpose() * minkowski_gram(n) * jacobian;
    Ok((&m + m.transpose()) * 0.5)
}

pub fn induced_metric(imm: &(impl Immersion + ?Sized), u: &[f64]) -> Result<DMatrix<f64>> {
    induced_from_jacobian(&jet(imm, u).jacobian)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalType {
    Spacelike,
    Timelike,
    Lightlike,
    DegenerateBeyondLightlike,
}

impl CausalType {
    pub fn as_str(&self) -> &'static str {
        match self {
            CausalType::Spacelike => "spacelike",
            CausalType::Timelike => "timelike",
            CausalType::Lightlike => "lightlike",
            CausalType::DegenerateBeyondLightlike => "degenerate_beyond_lightlike",
        }
    }

    fn from_signature(sig: Signature, d: usize) -> Self {
        if sig == Signature::new(d, 0, 0) {
            CausalType::Spacelike
        } else if sig == Signature::new(d - 1, 1, 0) {
            CausalType::Timelike
        } else if sig == Signature::new(d - 1, 0, 1) {
            CausalType::Lightlike
        } else {
            CausalType::DegenerateBeyondLightlike
        }
    }
}

impl fmt::Display for CausalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Causal type of one point with the data it was decided from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointClass {
    pub causal: CausalType,
    pub signature: Signature,
    /// Smallest over largest eigenvalue magnitude of the induced form.
    pub min_eig_ratio: f64,
}

/// Classifies a tangent space given by a Jacobian.
pub fn classify_jacobian(jacobian: &DMatrix<f64>, tol: f64) -> Result<PointClass> {
    let induced = induced_from_jacobian(jacobian)?;
    let (values, _) = symmetric_eigen(&induced);
    let sig = signature_of_eigenvalues(values.as_slice(), tol);
    let (lo, hi) = values.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| {
        (lo.min(v.abs()), hi.max(v.abs()))
    });
    Ok(PointClass {
        causal: CausalType::from_signature(sig, jacobian.ncols()),
        signature: sig,
        min_eig_ratio: if hi > 0.0 { lo / hi } else { 0.0 },
    })
}

/// Causal type at `u`; `tol` defaults to the jet-dependent threshold.
pub fn classify_point(
    imm: &(impl Immersion + ?Sized),
    u: &[f64],
    tol: Option<f64>,
) -> Result<PointClass> {
    let j = jet(imm, u);
    classify_jacobian(&j.jacobian, tol.unwrap_or_else(|| j.tolerance()))
}

/// One axis of a sampling grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn value(&self, k: usize) -> f64 {
        if self.count <= 1 {
            return self.lo;
        }
        if k + 1 == self.count {
            return self.hi;
        }
        self.lo + (self.hi - self.lo) * k as f64 / (self.count - 1) as f64
    }
}

/// Tensor grid, enumerated with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Self {
        Self { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index_of(&self, flat: usize) -> Vec<usize> {
        let mut rest = flat;
        let mut idx = vec![0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            idx[k] = rest % axis.count;
            rest /= axis.count;
        }
        idx
    }

    fn flat_of(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (i, a)| acc * a.count + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.index_of(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&k, a)| a.value(k))
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveySample {
    pub u: Vec<f64>,
    pub class: Result<PointClass>,
}

/// Adjacent grid points of different causal type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionCell {
    pub axis: usize,
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub from_type: CausalType,
    pub to_type: CausalType,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeCounts {
    pub spacelike: usize,
    pub timelike: usize,
    pub lightlike: usize,
    pub degenerate_beyond_lightlike: usize,
    pub failed: usize,
}

impl TypeCounts {
    fn add(&mut self, t: CausalType) {
        match t {
            CausalType::Spacelike => self.spacelike += 1,
            CausalType::Timelike => self.timelike += 1,
            CausalType::Lightlike => self.lightlike += 1,
            CausalType::DegenerateBeyondLightlike => self.degenerate_beyond_lightlike += 1,
        }
    }

    pub fn get(&self, t: CausalType) -> usize {
        match t {
            CausalType::Spacelike => self.spacelike,
            CausalType::Timelike => self.timelike,
            CausalType::Lightlike => self.lightlike,
            CausalType::DegenerateBeyondLightlike => self.degenerate_beyond_lightlike,
        }
    }

    pub fn classified(&self) -> usize {
        self.spacelike + self.timelike + self.lightlike + self.degenerate_beyond_lightlike
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub grid: Grid,
    pub samples: Vec<SurveySample>,
    pub counts: TypeCounts,
    /// The single type of every classified sample, if there is one.
    pub pure: Option<CausalType>,
    pub transitions: Vec<TransitionCell>,
}

impl ClassificationReport {
    pub fn is_mixed(&self) -> bool {
        self.pure.is_none() && self.counts.classified() > 0
    }

    pub fn fraction(&self, t: CausalType) -> f64 {
        let total = self.counts.classified();
        if total == 0 {
            return 0.0;
        }
        self.counts.get(t) as f64 / total as f64
    }
}

/// Classifies every grid point; per-point failures are recorded.
pub fn survey(
    imm: &(impl Immersion + ?Sized),
    grid: &Grid,
    tol: Option<f64>,
) -> ClassificationReport {
    let samples: Vec<SurveySample> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let u = grid.point(k);
            let class = if imm.domain().contains(&u) {
                classify_point(imm, &u, tol)
            } else {
                Err(Error::OutOfDomain(u.clone()))
            };
            SurveySample { u, class }
        })
        .collect();

    let mut counts = TypeCounts::default();
    for s in &samples {
        match &s.class {
            Ok(c) => counts.add(c.causal),
            Err(_) => counts.failed += 1,
        }
    }
    let present: Vec<CausalType> = [
        CausalType::Spacelike,
        CausalType::Timelike,
        CausalType::Lightlike,
        CausalType::DegenerateBeyondLightlike,
    ]
    .into_iter()
    .filter(|&t| counts.get(t) > 0)
    .collect();
    let pure = if present.len() == 1 {
        Some(present[0])
    } else {
        None
    };

    let mut transitions = Vec::new();
    for k in 0..samples.len() {
        let Ok(here) = &samples[k].class else {
            continue;
        };
        let idx = grid.index_of(k);
        for axis in 0..grid.dim() {
            if idx[axis] + 1 >= grid.axes[axis].count {
                continue;
            }
            let mut next = idx.clone();
            next[axis] += 1;
            let j = grid.flat_of(&next);
            if let Ok(there) = &samples[j].class {
                if there.causal != here.causal {
                    transitions.push(TransitionCell {
                        axis,
                        from: samples[k].u.clone(),
                        to: samples[j].u.clone(),
                        from_type: here.causal,
                        to_type: there.causal,
                    });
                }
            }
        }
    }

    ClassificationReport {
        grid: grid.clone(),
        samples,
        counts,
        pure,
        transitions,
    }
}
