//! The Darboux quadric model of the Lorentzian pseudoconformal space.
//!
//! Homogeneous coordinates are ordered `x⁰, x¹, …, xⁿ, xⁿ⁺¹`. The quadric is
//! `g_rs xʳ xˢ − 2 x⁰ xⁿ⁺¹ = 0` with `g = diag(1, …, 1, −1)` on the middle
//! block, so the ambient form has signature `(n, 2)`. Points of `Rⁿ₁` live in
//! the chart `x⁰ = 1`; the vertex `(0, …, 0, 1)` is the point at infinity.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::BilinearForm;

/// Coordinates of the chart `x⁰` below this magnitude are ideal points.
pub const TOL_INFINITY: f64 = 1e-12;
/// `|(X, X)| < TOL_POINT * |X|²` classifies an element as a point.
pub const TOL_POINT: f64 = 1e-10;
/// Maximum quadric residual accepted by [`AmbientModel::darboux_unembed`].
pub const TOL_ON_QUADRIC: f64 = 1e-9;

/// Homogeneous coordinates up to nonzero scale, stored with the
/// largest-magnitude coordinate equal to `+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProjectivePoint {
    coords: DVector<f64>,
}

impl ProjectivePoint {
    pub fn new(raw: DVector<f64>) -> Result<Self> {
        let (idx, max) = raw.iter().enumerate().fold((0, 0.0_f64), |acc, (i, &x)| {
            if x.abs() > acc.1 {
                (i, x.abs())
            } else {
                acc
            }
        });
        if max == 0.0 || !max.is_finite() {
            return Err(Error::ZeroVector);
        }
        let pivot = raw[idx];
        let mut coords = raw / pivot;
        coords[idx] = 1.0;
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Equality of normalized representatives within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.len() == other.len() && (&self.coords - &other.coords).amax() <= tol
    }
}

impl TryFrom<Vec<f64>> for ProjectivePoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(DVector::from_vec(v))
    }
}

impl From<ProjectivePoint> for Vec<f64> {
    fn from(p: ProjectivePoint) -> Self {
        p.coords.as_slice().to_vec()
    }
}

/// Result of pulling a quadric point back to `Rⁿ₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Unembedded {
    Finite(DVector<f64>),
    AtInfinity,
}

impl Unembedded {
    pub fn finite(&self) -> Option<&DVector<f64>> {
        match self {
            Unembedded::Finite(p) => Some(p),
            Unembedded::AtInfinity => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Point,
    SpacelikeHypersphere,
    TimelikeHypersphere,
}

/// Kind of an element of the space together with its scalar square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementClass {
    pub kind: ElementKind,
    pub square: f64,
}

/// `Cⁿ₁` realized as the Darboux quadric in `Pⁿ⁺¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientModel {
    n: usize,
    form: BilinearForm,
    minkowski: BilinearForm,
}

impl AmbientModel {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Invalid(format!(
                "dimension n = {n} must be at least 3"
            )));
        }
        let mut g = DMatrix::zeros(n + 2, n + 2);
        for r in 1..n {
            g[(r, r)] = 1.0;
        }
        g[(n, n)] = -1.0;
        g[(0, n + 1)] = -1.0;
        g[(n + 1, 0)] = -1.0;
        let mut diag = vec![1.0; n];
        diag[n - 1] = -1.0;
        Ok(Self {
            n,
            form: BilinearForm::new(g)?,
            minkowski: BilinearForm::diagonal(&diag)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of homogeneous coordinates, `n + 2`.
    pub fn dim(&self) -> usize {
        self.n + 2
    }

    pub fn form(&self) -> &BilinearForm {
        &self.form
    }

    /// The Lorentzian form `diag(1, …, 1, −1)` of `Rⁿ₁`.
    pub fn minkowski(&self) -> &BilinearForm {
        &self.minkowski
    }

    pub fn g(&self, p: &DVector<f64>, q: &DVector<f64>) -> f64 {
        self.minkowski.product_unchecked(p, q)
    }

    /// Ambient scalar product of two homogeneous vectors.
    pub fn dot(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.form.product_unchecked(x, y)
    }

    fn check_point(&self, p: &DVector<f64>) -> Result<()> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: p.len(),
            });
        }
        Ok(())
    }

    /// Homogeneous lift `(1, p, ½ g(p, p))` of a point of `Rⁿ₁`.
    pub fn lift(&self, p: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.n + 2);
        x[0] = 1.0;
        x.rows_mut(1, self.n).copy_from(p);
        x[self.n + 1] = 0.5 * self.g(p, p);
        x
    }

    /// Differential of [`lift`](Self::lift) at `p` applied to `v`:
    /// `(0, v, g(p, v))`.
    pub fn tangent_lift(&self, p: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.n + 2);
        x.rows_mut(1, self.n).copy_from(v);
        x[self.n + 1] = self.g(p, v);
        x
    }

    /// The point at infinity, `(0, …, 0, 1)`.
    pub fn infinity(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.n + 2);
        x[self.n + 1] = 1.0;
        x
    }

    pub fn darboux_embed(&self, p: &DVector<f64>) -> Result<ProjectivePoint> {
        self.check_point(p)?;
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("point has non-finite coordinates".into()));
        }
        ProjectivePoint::new(self.lift(p))
    }

    pub fn quadric_residual(&self, x: &ProjectivePoint) -> f64 {
        self.form.square(x.coords())
    }

    pub fn darboux_unembed(&self, x: &ProjectivePoint) -> Result<Unembedded> {
        if x.len() != self.n + 2 {
            return Err(Error::DimensionMismatch {
                expected: self.n + 2,
                got: x.len(),
            });
        }
        let residual = self.quadric_residual(x);
        if residual.abs() > TOL_ON_QUADRIC {
            return Err(Error::NotOnQuadric { residual });
        }
        let c = x.coords();
        if c[0].abs() < TOL_INFINITY {
            return Ok(Unembedded::AtInfinity);
        }
        Ok(Unembedded::Finite(c.rows(1, self.n) / c[0]))
    }

    pub fn classify_element(&self, x: &ProjectivePoint) -> ElementClass {
        let square = self.form.square(x.coords());
        let norm2 = x.coords().norm_squared();
        let kind = if square.abs() < TOL_POINT * norm2 {
            ElementKind::Point
        } else if square < 0.0 {
            ElementKind::SpacelikeHypersphere
        } else {
            ElementKind::TimelikeHypersphere
        };
        ElementClass { kind, square }
    }

    /// The hypersphere `g(p − c, p − c) = r²` of `Rⁿ₁`; `r²` may be zero
    /// or negative. Its scalar square equals `r²` in this representative.
    pub fn hypersphere(&self, center: &DVector<f64>, r2: f64) -> Result<DVector<f64>> {
        self.check_point(center)?;
        let mut h = self.lift(center);
        h[self.n + 1] -= 0.5 * r2;
        Ok(h)
    }

    /// The hyperplane `g(p, normal) = offset`.
    pub fn hyperplane(&self, normal: &DVector<f64>, offset: f64) -> Result<DVector<f64>> {
        self.check_point(normal)?;
        let mut h = DVector::zeros(self.n + 2);
        h.rows_mut(1, self.n).copy_from(normal);
        h[self.n + 1] = offset;
        Ok(h)
    }
}
