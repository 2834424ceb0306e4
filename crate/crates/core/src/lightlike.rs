//! Lightlike hypersurfaces: adapted frames along the hypersurface, the
//! affinor relating `dA_1` to `dA_0` on the screen, singular points on each
//! null generator, torse directions and the focal set.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{AmbientModel, ProjectivePoint, Unembedded};
use crate::error::{Error, Result};
use crate::frames::{self, ConformalFrame, LightlikeJet};
use crate::hypersurface::{self, Grid, Immersion};
use crate::linalg::{self, Root, Signature, CLUSTER_RADIUS};

/// Affinors whose antisymmetric part exceeds this (relative to
/// `max(1, |λ|)`) are rejected.
pub const SYMMETRY_TOL: f64 = 1e-6;
/// Half-width of the generator parameter range `X(t) = A_1 + t A_0`.
pub const GENERATOR_RANGE: f64 = 10.0;
/// Focal points closer than this are merged.
pub const MERGE_TOL: f64 = 1e-6;

/// Rescaling `(A_0, A_1) ↦ (c₀ A_0, c₁ A_1)` applied along a frame field.
pub type GaugeFn = dyn Fn(&[f64]) -> (f64, f64) + Send + Sync;

#[derive(Clone)]
pub struct LightlikeOptions {
    /// Central-difference step for frame derivatives.
    pub step: f64,
    pub symmetry_tol: f64,
    /// Degeneracy threshold; defaults to the jet-dependent value.
    pub tol: Option<f64>,
    pub gauge: Option<Arc<GaugeFn>>,
}

impl Default for LightlikeOptions {
    fn default() -> Self {
        Self {
            step: frames::DEFAULT_STEP,
            symmetry_tol: SYMMETRY_TOL,
            tol: None,
            gauge: None,
        }
    }
}

impl std::fmt::Debug for LightlikeOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LightlikeOptions")
            .field("step", &self.step)
            .field("symmetry_tol", &self.symmetry_tol)
            .field("tol", &self.tol)
            .field("gauge", &self.gauge.is_some())
            .finish()
    }
}

/// Rescales `A_0`, `A_1` and their null partners so the Gram matrix is kept.
pub fn rescale_frame(frame: &ConformalFrame, c0: f64, c1: f64) -> Result<ConformalFrame> {
    let n = frame.n();
    let mut m = frame.matrix().clone();
    for (row, s) in [(0, c0), (1, c1), (n, 1.0 / c1), (n + 1, 1.0 / c0)] {
        let scaled = m.row(row) * s;
        m.row_mut(row).copy_from(&scaled);
    }
    ConformalFrame::new(m, frame.target_gram().clone())
}

/// Null generator of the induced form at `u`: the eigenvector of `Jᵀ G J`
/// with the smallest eigenvalue magnitude, pushed forward by `J`.
pub fn generator_direction(
    imm: &(impl Immersion + ?Sized),
    u: &[f64],
    tol: Option<f64>,
) -> Result<(hypersurface::Jet, DVector<f64>, f64)> {
    let n = imm.ambient_dim();
    let jet = hypersurface::jet(imm, u);
    let tol = tol.unwrap_or_else(|| jet.tolerance());
    let induced = hypersurface::induced_from_jacobian(&jet.jacobian)?;
    let (values, vectors) = linalg::symmetric_eigen(&induced);
    let sig = linalg::signature_of_eigenvalues(values.as_slice(), tol);
    if sig != Signature::new(n - 2, 0, 1) {
        return Err(Error::NotLightlike {
            plus: sig.plus,
            minus: sig.minus,
            zero: sig.zero,
        });
    }
    let k = values.iamin();
    let generator = &jet.jacobian * vectors.column(k);
    Ok((jet, generator, tol))
}

/// Adapted frame at `u`, with the gauge of `opts` applied.
pub fn lightlike_frame(
    imm: &(impl Immersion + ?Sized),
    u: &[f64],
    opts: &LightlikeOptions,
) -> Result<ConformalFrame> {
    let model = AmbientModel::new(imm.ambient_dim())?;
    let (jet, generator, tol) = generator_direction(imm, u, opts.tol)?;
    let mut ljet = LightlikeJet::new(jet.value, jet.jacobian, generator);
    ljet.tol = tol;
    let frame = frames::adapt_lightlike_frame(&model, &ljet)?;
    match &opts.gauge {
        Some(g) => {
            let (c0, c1) = g(u);
            rescale_frame(&frame, c0, c1)
        }
        None => Ok(frame),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LightlikeAnalysis {
    pub u: Vec<f64>,
    /// The affinor `λ^i_j` in the orthonormal screen, symmetrized.
    pub lambda: DMatrix<f64>,
    /// The affinor as extracted, before symmetrization.
    pub raw_lambda: DMatrix<f64>,
    pub symmetry_defect: f64,
    pub determinant: f64,
    /// Roots `x` of `det(λ + x I) = 0`.
    pub roots: Vec<Root>,
    pub frame: ConformalFrame,
}

impl LightlikeAnalysis {
    /// The generator `(A_0, A_1)`.
    pub fn generator(&self) -> (DVector<f64>, DVector<f64>) {
        (self.frame.vector(0), self.frame.vector(1))
    }

    /// `A_1 + x A_0`.
    pub fn point_on_generator(&self, x: f64) -> DVector<f64> {
        self.frame.vector(1) + self.frame.vector(0) * x
    }

    pub fn root_count(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }
}

/// Screen components `ω_ξ^i` for `ξ ∈ {0, 1}` over all parameter directions,
/// as `(n−2) × d` matrices.
fn screen_components(forms: &frames::ConnectionForms, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = forms.omega.len();
    let w0 = DMatrix::from_fn(n - 2, d, |i, a| forms.omega[a][(0, i + 2)]);
    let w1 = DMatrix::from_fn(n - 2, d, |i, a| forms.omega[a][(1, i + 2)]);
    (w0, w1)
}

pub fn lightlike_affinor(imm: &(impl Immersion + ?Sized), u: &[f64]) -> Result<LightlikeAnalysis> {
    lightlike_affinor_with(imm, u, &LightlikeOptions::default())
}

/// Solves `ω_1^i = λ^i_j ω_0^j` in the least-squares sense over all
/// parameter directions.
pub fn lightlike_affinor_with(
    imm: &(impl Immersion + ?Sized),
    u: &[f64],
    opts: &LightlikeOptions,
) -> Result<LightlikeAnalysis> {
    let n = imm.ambient_dim();
    let field = |w: &[f64]| lightlike_frame(imm, w, opts);
    let frame = field(u)?;
    let forms = frames::connection_forms(&field, u, opts.step)?;
    let (w0, w1) = screen_components(&forms, n);

    let normal = &w0 * w0.transpose();
    let (ev, _) = linalg::symmetric_eigen(&normal);
    if !ev.is_empty() && ev[0] <= 1e-12 * ev[ev.len() - 1].max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateScreen);
    }
    let lambda_t = linalg::solve_matrix(&normal, &(&w0 * w1.transpose()))
        .map_err(|_| Error::DegenerateScreen)?;
    let raw = lambda_t.transpose();
    let defect = (&raw - raw.transpose()).amax();
    if defect > opts.symmetry_tol * raw.amax().max(1.0) {
        return Err(Error::AsymmetricAffinor { defect });
    }
    let lambda = (&raw + raw.transpose()) * 0.5;
    let roots = linalg::char_roots(&lambda)?;
    Ok(LightlikeAnalysis {
        u: u.to_vec(),
        determinant: lambda.determinant(),
        lambda,
        raw_lambda: raw,
        symmetry_defect: defect,
        roots,
        frame,
    })
}

/// A singular point `X = A_1 + x A_0` on the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub x: f64,
    pub multiplicity: usize,
    pub point: ProjectivePoint,
    pub location: Unembedded,
}

pub fn singular_points(an: &LightlikeAnalysis) -> Result<Vec<SingularPoint>> {
    let model = AmbientModel::new(an.frame.n())?;
    an.roots
        .iter()
        .map(|root| {
            if !root.real {
                return Err(Error::ComplexRoot {
                    re: root.value.re,
                    im: root.value.im,
                });
            }
            let x = root.value.re;
            let point = ProjectivePoint::new(an.point_on_generator(x))?;
            let location = model.darboux_unembed(&point)?;
            Ok(SingularPoint {
                x,
                multiplicity: root.multiplicity,
                point,
                location,
            })
        })
        .collect()
}

/// Eigendirections of `λ` for one root, in screen coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Torse {
    pub root: f64,
    pub multiplicity: usize,
    /// One unit direction for a simple root; an orthonormal eigenspace
    /// basis for a multiple one.
    pub directions: Vec<DVector<f64>>,
}

impl Torse {
    pub fn is_multiple(&self) -> bool {
        self.multiplicity > 1
    }
}

/// Kernel directions of `λ + x I` for each real root.
pub fn torse_directions(an: &LightlikeAnalysis) -> Result<Vec<Torse>> {
    let k = an.lambda.nrows();
    an.roots
        .iter()
        .map(|root| {
            if !root.real {
                return Err(Error::ComplexRoot {
                    re: root.value.re,
                    im: root.value.im,
                });
            }
            let x = root.value.re;
            let shifted = &an.lambda + DMatrix::<f64>::identity(k, k) * x;
            let kernel = linalg::kernel_basis(&shifted, root.multiplicity);
            let directions = (0..root.multiplicity)
                .map(|i| {
                    let d = kernel.column(i).normalize();
                    let lead = d.iter().find(|c| c.abs() > 1e-8).copied().unwrap_or(0.0);
                    if lead < 0.0 {
                        -d
                    } else {
                        d
                    }
                })
                .collect();
            Ok(Torse {
                root: x,
                multiplicity: root.multiplicity,
                directions,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    /// Largest sine of the principal angles between the tangent space at a
    /// generator sample and the span of `A_0, …, A_{n−1}`.
    pub max_deviation: f64,
    pub sampled: Vec<f64>,
    /// Samples skipped because they sit on a singular point.
    pub skipped: Vec<f64>,
    /// Number of independent directions in which the tangent space moves.
    pub tangent_rank: usize,
}

fn tangent_projector(frame: &ConformalFrame) -> DMatrix<f64> {
    let n = frame.n();
    let b = frame.matrix().rows(0, n).transpose();
    let gram = b.transpose() * &b;
    let inv = linalg::inverse(&gram).expect("frame rows are independent");
    &b * inv * b.transpose()
}

/// Checks that the tangent space is constant along the generator through
/// `u` and counts the parameters it depends on.
pub fn degeneracy_check(
    imm: &(impl Immersion + ?Sized),
    u: &[f64],
    samples: usize,
    opts: &LightlikeOptions,
) -> Result<DegeneracyReport> {
    let an = lightlike_affinor_with(imm, u, opts)?;
    let n = imm.ambient_dim();
    let d = u.len();
    let h = opts.step;
    let field = |w: &[f64]| lightlike_frame(imm, w, opts);

    let mut d_a0 = Vec::with_capacity(d);
    let mut d_a1 = Vec::with_capacity(d);
    let mut d_proj = Vec::with_capacity(d);
    for a in 0..d {
        let mut up = u.to_vec();
        let mut dn = u.to_vec();
        up[a] += h;
        dn[a] -= h;
        let (fp, fm) = (field(&up)?, field(&dn)?);
        d_a0.push((fp.vector(0) - fm.vector(0)) / (2.0 * h));
        d_a1.push((fp.vector(1) - fm.vector(1)) / (2.0 * h));
        d_proj.push((tangent_projector(&fp) - tangent_projector(&fm)) / (2.0 * h));
    }

    let reference = {
        let b = an.frame.matrix().rows(0, n).transpose();
        linalg::principal_basis(&b, n)
    };
    let (a0, a1) = an.generator();
    let mut sampled = Vec::new();
    let mut skipped = Vec::new();
    let mut worst = 0.0_f64;
    for s in 0..samples {
        let t = if samples == 1 {
            0.0
        } else {
            -GENERATOR_RANGE + 2.0 * GENERATOR_RANGE * s as f64 / (samples - 1) as f64
        };
        let near_root = an
            .roots
            .iter()
            .any(|r| r.real && (r.value.re - t).abs() < CLUSTER_RADIUS * (1.0 + r.value.re.abs()));
        if near_root {
            skipped.push(t);
            continue;
        }
        let x = &a1 + &a0 * t;
        let mut cols = vec![x.normalize(), a0.normalize()];
        for a in 0..d {
            cols.push(&d_a1[a] + &d_a0[a] * t);
        }
        let m = DMatrix::from_columns(&cols);
        let sv = m.clone().svd(false, false).singular_values;
        let mut sorted: Vec<f64> = sv.iter().copied().collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if sorted.len() < n || sorted[n - 1] < 1e-8 * sorted[0] {
            skipped.push(t);
            continue;
        }
        let basis = linalg::principal_basis(&m, n);
        worst = worst.max(linalg::max_principal_sine(&reference, &basis));
        sampled.push(t);
    }

    let dim = n + 2;
    let variation = DMatrix::from_fn(dim * dim, d, |k, a| d_proj[a][(k / dim, k % dim)]);
    let sv = variation.svd(false, false).singular_values;
    let tangent_rank = sv.iter().filter(|&&s| s > 1e-6).count();

    Ok(DegeneracyReport {
        max_deviation: worst,
        sampled,
        skipped,
        tangent_rank,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalSample {
    pub u: Vec<f64>,
    pub root_index: usize,
    pub x: f64,
    pub multiplicity: usize,
    /// Dimension of the eigenspace of `λ` for this root.
    pub eigenspace_dim: usize,
    pub location: Unembedded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedFocal {
    pub location: Unembedded,
    pub count: usize,
    pub max_multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocalMap {
    pub samples: Vec<FocalSample>,
    pub failures: Vec<(Vec<f64>, Error)>,
    pub merged: Vec<MergedFocal>,
}

/// Singular points over a grid of lightlike points, un-embedded and merged.
pub fn focal_map(
    imm: &(impl Immersion + ?Sized),
    grid: &Grid,
    opts: &LightlikeOptions,
) -> FocalMap {
    let per_point: Vec<(Vec<f64>, Result<Vec<FocalSample>>)> = grid
        .points()
        .into_par_iter()
        .map(|u| {
            let res = lightlike_affinor_with(imm, &u, opts).and_then(|an| {
                let points = singular_points(&an)?;
                let torses = torse_directions(&an)?;
                Ok(points
                    .into_iter()
                    .zip(torses)
                    .enumerate()
                    .map(|(k, (p, t))| FocalSample {
                        u: u.clone(),
                        root_index: k,
                        x: p.x,
                        multiplicity: p.multiplicity,
                        eigenspace_dim: t.directions.len(),
                        location: p.location,
                    })
                    .collect())
            });
            (u, res)
        })
        .collect();

    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (u, res) in per_point {
        match res {
            Ok(s) => samples.extend(s),
            Err(e) => failures.push((u, e)),
        }
    }
    let merged = merge_focal(&samples);
    FocalMap {
        samples,
        failures,
        merged,
    }
}

fn merge_focal(samples: &[FocalSample]) -> Vec<MergedFocal> {
    let mut merged: Vec<MergedFocal> = Vec::new();
    for s in samples {
        let slot = merged
            .iter_mut()
            .find(|m| match (&m.location, &s.location) {
                (Unembedded::AtInfinity, Unembedded::AtInfinity) => true,
                (Unembedded::Finite(a), Unembedded::Finite(b)) => (a - b).amax() <= MERGE_TOL,
                _ => false,
            });
        match slot {
            Some(m) => {
                m.count += 1;
                m.max_multiplicity = m.max_multiplicity.max(s.multiplicity);
            }
            None => merged.push(MergedFocal {
                location: s.location.clone(),
                count: 1,
                max_multiplicity: s.multiplicity,
            }),
        }
    }
    merged
}
