//! Built-in hypersurfaces and congruences, addressable by name.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::congruence::NullLineCongruence;
use crate::error::{Error, Result};
use crate::hypersurface::{ParamBox, ParametricHypersurface};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Hypersurface,
    Congruence,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogInfo {
    pub name: &'static str,
    pub kind: ObjectKind,
    pub min_n: usize,
    /// `None` when any `n ≥ min_n` is accepted.
    pub max_n: Option<usize>,
    pub params: &'static [(&'static str, f64)],
    pub description: &'static str,
}

pub const CATALOG: &[CatalogInfo] = &[
    CatalogInfo {
        name: "spacelike_slice",
        kind: ObjectKind::Hypersurface,
        min_n: 3,
        max_n: None,
        params: &[],
        description: "the slice t = 0",
    },
    CatalogInfo {
        name: "timelike_hyperplane",
        kind: ObjectKind::Hypersurface,
        min_n: 3,
        max_n: None,
        params: &[],
        description: "the hyperplane x1 = 0",
    },
    CatalogInfo {
        name: "hypersphere",
        kind: ObjectKind::Hypersurface,
        min_n: 3,
        max_n: None,
        params: &[("a", 1.0)],
        description: "g(x, x) = a; one-sheeted for a > 0, upper sheet for a < 0",
    },
    CatalogInfo {
        name: "euclidean_sphere",
        kind: ObjectKind::Hypersurface,
        min_n: 3,
        max_n: None,
        params: &[],
        description: "unit Euclidean sphere, mixed type",
    },
    CatalogInfo {
        name: "light_cone",
        kind: ObjectKind::Hypersurface,
        min_n: 3,
        max_n: None,
        params: &[],
        description: "future light cone of the origin",
    },
    CatalogInfo {
        name: "null_hyperplane",
        kind: ObjectKind::Hypersurface,
        min_n: 3,
        max_n: None,
        params: &[],
        description: "the hyperplane x1 = t",
    },
    CatalogInfo {
        name: "tilted_null_family",
        kind: ObjectKind::Hypersurface,
        min_n: 3,
        max_n: None,
        params: &[],
        description: "tangent null planes along the null helix (cos s, sin s, s)",
    },
    CatalogInfo {
        name: "null_torus",
        kind: ObjectKind::Hypersurface,
        min_n: 4,
        max_n: Some(4),
        params: &[("a", 2.0), ("b", 1.0)],
        description: "null normals of a torus of revolution in t = 0",
    },
    CatalogInfo {
        name: "parallel_null",
        kind: ObjectKind::Congruence,
        min_n: 3,
        max_n: None,
        params: &[],
        description: "parallel null lines through the slice t = 0",
    },
    CatalogInfo {
        name: "light_cone_normal",
        kind: ObjectKind::Congruence,
        min_n: 3,
        max_n: None,
        params: &[("rho", 1.0)],
        description: "generators of light cones with vertices on the t axis",
    },
    CatalogInfo {
        name: "twisted",
        kind: ObjectKind::Congruence,
        min_n: 4,
        max_n: None,
        params: &[("kappa", 1.0)],
        description: "parallel null lines tilted about the x1 axis by the transverse offset",
    },
];

pub fn info(name: &str) -> Option<&'static CatalogInfo> {
    CATALOG.iter().find(|c| c.name == name)
}

/// Resolves parameters against the defaults, rejecting unknown keys.
fn resolve(
    info: &CatalogInfo,
    n: usize,
    given: &BTreeMap<String, f64>,
) -> Result<BTreeMap<&'static str, f64>> {
    if n < info.min_n || info.max_n.is_some_and(|m| n > m) {
        return Err(Error::Invalid(format!(
            "{} is not available for n = {}",
            info.name, n
        )));
    }
    for key in given.keys() {
        if !info.params.iter().any(|(k, _)| k == key) {
            return Err(Error::Invalid(format!(
                "{} has no parameter `{}`",
                info.name, key
            )));
        }
    }
    Ok(info
        .params
        .iter()
        .map(|&(k, d)| (k, given.get(k).copied().unwrap_or(d)))
        .collect())
}

fn lookup(name: &str, kind: ObjectKind) -> Result<&'static CatalogInfo> {
    match info(name) {
        Some(i) if i.kind == kind => Ok(i),
        _ => Err(Error::Invalid(
            format!("unknown {kind:?} `{name}`").to_lowercase(),
        )),
    }
}

/// Unit vector in `R^{m+1}` from `m` hyperspherical angles, with its
/// `(m+1) × m` Jacobian.
pub fn sphere_chart(theta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let m = theta.len();
    let factor = |k: usize, j: usize, i: usize| -> f64 {
        // i-th factor of coordinate k, differentiated in θ_j when i == j
        let last = i == k;
        match (last, i == j) {
            (true, false) => theta[i].cos(),
            (true, true) => -theta[i].sin(),
            (false, false) => theta[i].sin(),
            (false, true) => theta[i].cos(),
        }
    };
    let mut v = DVector::zeros(m + 1);
    let mut jac = DMatrix::zeros(m + 1, m);
    for k in 0..=m {
        let count = if k < m { k + 1 } else { m };
        v[k] = (0..count).map(|i| factor(k, usize::MAX, i)).product();
        for j in 0..count {
            jac[(k, j)] = (0..count).map(|i| factor(k, j, i)).product();
        }
    }
    (v, jac)
}

/// Box for `m` hyperspherical angles: polar angles away from the poles,
/// the last one a full turn.
fn angle_box(m: usize, margin: f64) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![margin; m];
    let mut hi = vec![PI - margin; m];
    if m > 0 {
        lo[m - 1] = 0.0;
        hi[m - 1] = 2.0 * PI;
    }
    (lo, hi)
}

fn with_axis(mut b: (Vec<f64>, Vec<f64>), lo: f64, hi: f64, front: bool) -> ParamBox {
    if front {
        b.0.insert(0, lo);
        b.1.insert(0, hi);
    } else {
        b.0.push(lo);
        b.1.push(hi);
    }
    ParamBox::new(b.0, b.1)
}

pub fn hypersurface(
    name: &str,
    n: usize,
    params: &BTreeMap<String, f64>,
) -> Result<ParametricHypersurface> {
    let info = lookup(name, ObjectKind::Hypersurface)?;
    let p = resolve(info, n, params)?;
    let d = n - 1;
    let unit_box = || ParamBox::new(vec![-1.0; d], vec![1.0; d]);
    let surface = match name {
        "spacelike_slice" => ParametricHypersurface::new(n, unit_box(), move |u| {
            let mut x = DVector::zeros(n);
            x.rows_mut(0, d).copy_from_slice(u);
            x
        })
        .with_jacobian(move |_| {
            let mut j = DMatrix::zeros(n, d);
            j.view_mut((0, 0), (d, d)).fill_with_identity();
            j
        }),
        "timelike_hyperplane" => ParametricHypersurface::new(n, unit_box(), move |u| {
            let mut x = DVector::zeros(n);
            x.rows_mut(1, d).copy_from_slice(u);
            x
        })
        .with_jacobian(move |_| {
            let mut j = DMatrix::zeros(n, d);
            j.view_mut((1, 0), (d, d)).fill_with_identity();
            j
        }),
        "hypersphere" => {
            let a = p["a"];
            if a > 0.0 {
                let r = a.sqrt();
                let domain = with_axis(angle_box(n - 2, 0.2), -1.0, 1.0, false);
                ParametricHypersurface::new(n, domain, move |u| {
                    let (nu, _) = sphere_chart(&u[..n - 2]);
                    let v = u[n - 2];
                    let mut x = DVector::zeros(n);
                    x.rows_mut(0, d).copy_from(&(nu * (r * v.cosh())));
                    x[d] = r * v.sinh();
                    x
                })
                .with_jacobian(move |u| {
                    let (nu, dnu) = sphere_chart(&u[..n - 2]);
                    let v = u[n - 2];
                    let mut j = DMatrix::zeros(n, d);
                    j.view_mut((0, 0), (d, n - 2))
                        .copy_from(&(dnu * (r * v.cosh())));
                    j.view_mut((0, n - 2), (d, 1))
                        .copy_from(&(nu * (r * v.sinh())));
                    j[(d, n - 2)] = r * v.cosh();
                    j
                })
            } else if a < 0.0 {
                let c = -a;
                ParametricHypersurface::new(n, unit_box(), move |u| {
                    let y = DVector::from_column_slice(u);
                    let mut x = DVector::zeros(n);
                    x.rows_mut(0, d).copy_from(&y);
                    x[d] = (c + y.norm_squared()).sqrt();
                    x
                })
                .with_jacobian(move |u| {
                    let y = DVector::from_column_slice(u);
                    let t = (c + y.norm_squared()).sqrt();
                    let mut j = DMatrix::zeros(n, d);
                    j.view_mut((0, 0), (d, d)).fill_with_identity();
                    j.row_mut(d).copy_from(&(y / t).transpose());
                    j
                })
            } else {
                return Err(Error::Invalid(
                    "hypersphere needs a != 0; use light_cone for a = 0".into(),
                ));
            }
        }
        "euclidean_sphere" => {
            let domain = with_axis(angle_box(n - 2, 0.2), 0.1, PI - 0.1, true);
            ParametricHypersurface::new(n, domain, move |u| {
                let (nu, _) = sphere_chart(&u[1..]);
                let mut x = DVector::zeros(n);
                x.rows_mut(0, d).copy_from(&(nu * u[0].sin()));
                x[d] = u[0].cos();
                x
            })
            .with_jacobian(move |u| {
                let (nu, dnu) = sphere_chart(&u[1..]);
                let mut j = DMatrix::zeros(n, d);
                j.view_mut((0, 0), (d, 1)).copy_from(&(&nu * u[0].cos()));
                j[(d, 0)] = -u[0].sin();
                j.view_mut((0, 1), (d, n - 2))
                    .copy_from(&(dnu * u[0].sin()));
                j
            })
        }
        "light_cone" => {
            let domain = with_axis(angle_box(n - 2, 0.2), 0.5, 2.0, true);
            ParametricHypersurface::new(n, domain, move |u| {
                let (nu, _) = sphere_chart(&u[1..]);
                let mut x = DVector::zeros(n);
                x.rows_mut(0, d).copy_from(&(nu * u[0]));
                x[d] = u[0];
                x
            })
            .with_jacobian(move |u| {
                let (nu, dnu) = sphere_chart(&u[1..]);
                let mut j = DMatrix::zeros(n, d);
                j.view_mut((0, 0), (d, 1)).copy_from(&nu);
                j[(d, 0)] = 1.0;
                j.view_mut((0, 1), (d, n - 2)).copy_from(&(dnu * u[0]));
                j
            })
        }
        "null_hyperplane" => ParametricHypersurface::new(n, unit_box(), move |u| {
            let mut x = DVector::zeros(n);
            x.rows_mut(0, d).copy_from_slice(u);
            x[d] = u[0];
            x
        })
        .with_jacobian(move |_| {
            let mut j = DMatrix::zeros(n, d);
            j.view_mut((0, 0), (d, d)).fill_with_identity();
            j[(d, 0)] = 1.0;
            j
        }),
        "tilted_null_family" => {
            let mut lo = vec![0.0, 0.5];
            let mut hi = vec![PI, 2.0];
            lo.extend(std::iter::repeat_n(-1.0, n - 3));
            hi.extend(std::iter::repeat_n(1.0, n - 3));
            ParametricHypersurface::new(n, ParamBox::new(lo, hi), move |u| {
                let (s, v) = (u[0], u[1]);
                let mut x = DVector::zeros(n);
                x[0] = s.cos() - v * s.sin();
                x[1] = s.sin() + v * s.cos();
                x.rows_mut(2, n - 3).copy_from_slice(&u[2..]);
                x[d] = s + v;
                x
            })
            .with_jacobian(move |u| {
                let (s, v) = (u[0], u[1]);
                let mut j = DMatrix::zeros(n, d);
                j[(0, 0)] = -s.sin() - v * s.cos();
                j[(1, 0)] = s.cos() - v * s.sin();
                j[(d, 0)] = 1.0;
                j[(0, 1)] = -s.sin();
                j[(1, 1)] = s.cos();
                j[(d, 1)] = 1.0;
                for k in 2..d {
                    j[(k, k)] = 1.0;
                }
                j
            })
        }
        "null_torus" => {
            let (a, b) = (p["a"], p["b"]);
            if !(a > b && b > 0.0) {
                return Err(Error::Invalid("null_torus needs a > b > 0".into()));
            }
            let domain = ParamBox::new(vec![0.0, -1.0, 0.0], vec![2.0 * PI, 1.0, 1.0]);
            ParametricHypersurface::new(n, domain, move |u| {
                let (f, s, v) = (u[0], u[1], u[2]);
                let rho = a + (b + v) * s.cos();
                DVector::from_column_slice(&[rho * f.cos(), rho * f.sin(), (b + v) * s.sin(), v])
            })
            .with_jacobian(move |u| {
                let (f, s, v) = (u[0], u[1], u[2]);
                let rho = a + (b + v) * s.cos();
                let w = b + v;
                DMatrix::from_row_slice(
                    4,
                    3,
                    &[
                        -rho * f.sin(),
                        -w * s.sin() * f.cos(),
                        s.cos() * f.cos(),
                        rho * f.cos(),
                        -w * s.sin() * f.sin(),
                        s.cos() * f.sin(),
                        0.0,
                        w * s.cos(),
                        s.sin(),
                        0.0,
                        0.0,
                        1.0,
                    ],
                )
            })
        }
        _ => unreachable!("catalog entry without constructor"),
    };
    Ok(surface)
}

pub fn congruence(
    name: &str,
    n: usize,
    params: &BTreeMap<String, f64>,
) -> Result<NullLineCongruence> {
    let info = lookup(name, ObjectKind::Congruence)?;
    let p = resolve(info, n, params)?;
    let d = n - 1;
    match name {
        "parallel_null" => NullLineCongruence::new(
            n,
            ParamBox::new(vec![-1.0; d], vec![1.0; d]),
            move |u| {
                let mut x = DVector::zeros(n);
                x.rows_mut(0, d).copy_from_slice(u);
                x
            },
            move |_| {
                let mut l = DVector::zeros(n);
                l[0] = 1.0;
                l[d] = 1.0;
                l
            },
        ),
        "light_cone_normal" => {
            let rho = p["rho"];
            if rho <= 0.0 {
                return Err(Error::Invalid("light_cone_normal needs rho > 0".into()));
            }
            let domain = with_axis(angle_box(n - 2, 0.2), -1.0, 1.0, true);
            NullLineCongruence::new(
                n,
                domain,
                move |u| {
                    let (nu, _) = sphere_chart(&u[1..]);
                    let mut x = DVector::zeros(n);
                    x.rows_mut(0, d).copy_from(&(nu * rho));
                    x[d] = u[0] + rho;
                    x
                },
                move |u| {
                    let (nu, _) = sphere_chart(&u[1..]);
                    let mut l = DVector::zeros(n);
                    l.rows_mut(0, d).copy_from(&nu);
                    l[d] = 1.0;
                    l
                },
            )
        }
        "twisted" => {
            let kappa = p["kappa"];
            NullLineCongruence::new(
                n,
                ParamBox::new(vec![-1.0; d], vec![1.0; d]),
                move |u| {
                    let mut x = DVector::zeros(n);
                    x.rows_mut(0, d).copy_from_slice(u);
                    x
                },
                move |u| {
                    // tilt proportional to the two transverse coordinates
                    let mut l = DVector::zeros(n);
                    l[0] = 1.0;
                    l[1] = -kappa * u[2];
                    l[2] = kappa * u[1];
                    let s = l.rows(0, d).norm();
                    l /= s;
                    l[d] = 1.0;
                    l
                },
            )
        }
        _ => unreachable!("catalog entry without constructor"),
    }
}
