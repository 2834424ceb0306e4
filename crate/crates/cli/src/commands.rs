//! Subcommand drivers. Each returns the rendered output, or a failure that
//! is either a scene problem or a numerical one.

use nalgebra::DVector;
use pcgeom::catalog::{self, ObjectKind};
use pcgeom::conformal::AmbientModel;
use pcgeom::congruence::{self, IsotropicCongruence};
use pcgeom::hypersurface::{self, Immersion, ParametricHypersurface};
use pcgeom::lightlike::{self, LightlikeOptions};
use serde_json::{json, Value};

use crate::output::{self, location_cells, location_json, num, numbered, Table};
use crate::scene::{Format, Kind, Scene};

/// Generator samples per point in the tangential degeneracy check.
pub const DEGENERACY_SAMPLES: usize = 21;

#[derive(Debug)]
pub enum Failure {
    Scene(String),
    /// Output was produced but some samples failed.
    Numerical {
        rendered: Vec<u8>,
        message: String,
    },
    /// Nothing could be produced.
    Fatal(String),
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Scene(s)
    }
}

fn render(
    format: Format,
    table: impl FnOnce() -> Table,
    doc: impl FnOnce() -> Value,
) -> Result<Vec<u8>, Failure> {
    match format {
        Format::Csv => table().to_bytes().map_err(Failure::Fatal),
        Format::Json => Ok(output::json_bytes(&doc())),
    }
}

fn hypersurface(scene: &Scene) -> Result<ParametricHypersurface, Failure> {
    if scene.kind == Some(Kind::Congruence) {
        return Err(Failure::Scene(
            "this command needs a hypersurface scene".into(),
        ));
    }
    catalog::hypersurface(scene.builtin()?, scene.n, &scene.params)
        .map_err(|e| Failure::Scene(e.to_string()))
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Value {
    Value::from(
        (0..m.nrows())
            .map(|i| m.row(i).iter().copied().collect::<Vec<f64>>())
            .collect::<Vec<_>>(),
    )
}

fn vec_json(v: &DVector<f64>) -> Value {
    Value::from(v.as_slice().to_vec())
}

pub fn examples(format: Format) -> Result<Vec<u8>, Failure> {
    let params = |info: &catalog::CatalogInfo| {
        info.params
            .iter()
            .map(|(k, v)| format!("{k}={}", num(*v)))
            .collect::<Vec<_>>()
            .join(";")
    };
    let kind = |k: ObjectKind| match k {
        ObjectKind::Hypersurface => "hypersurface",
        ObjectKind::Congruence => "congruence",
    };
    render(
        format,
        || {
            let mut t = Table::new(
                ["name", "kind", "min_n", "max_n", "params", "description"]
                    .map(String::from)
                    .to_vec(),
            );
            for info in catalog::CATALOG {
                t.push(vec![
                    info.name.to_string(),
                    kind(info.kind).to_string(),
                    info.min_n.to_string(),
                    info.max_n.map(|m| m.to_string()).unwrap_or_default(),
                    params(info),
                    info.description.to_string(),
                ]);
            }
            t
        },
        || {
            Value::from(
                catalog::CATALOG
                    .iter()
                    .map(|info| {
                        json!({
                            "name": info.name,
                            "kind": kind(info.kind),
                            "min_n": info.min_n,
                            "max_n": info.max_n,
                            "params": info.params.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
                            "description": info.description,
                        })
                    })
                    .collect::<Vec<_>>(),
            )
        },
    )
}

pub fn embed(scene: &Scene, format: Format) -> Result<Vec<u8>, Failure> {
    let model = AmbientModel::new(scene.n).map_err(|e| Failure::Scene(e.to_string()))?;
    let points = scene
        .points
        .as_ref()
        .ok_or_else(|| Failure::Scene("embed needs `points`".into()))?;
    let n = scene.n;
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let p = DVector::from_column_slice(p);
        let x = model
            .darboux_embed(&p)
            .map_err(|e| Failure::Fatal(format!("embed at {:?}: {e}", p.as_slice())))?;
        let back = model
            .darboux_unembed(&x)
            .map_err(|e| Failure::Fatal(format!("unembed at {:?}: {e}", p.as_slice())))?;
        let err = back
            .finite()
            .map(|q| (q - &p).amax())
            .unwrap_or(f64::INFINITY);
        rows.push((p, x.coords().clone(), model.quadric_residual(&x), err));
    }
    render(
        format,
        || {
            let mut header = vec!["index".to_string()];
            header.extend(numbered("p", 1..n + 1));
            header.extend(numbered("x", 0..n + 2));
            header.push("quadric_residual".into());
            header.push("roundtrip_error".into());
            let mut t = Table::new(header);
            for (k, (p, x, res, err)) in rows.iter().enumerate() {
                let mut r = vec![k.to_string()];
                r.extend(p.iter().map(|&v| num(v)));
                r.extend(x.iter().map(|&v| num(v)));
                r.push(num(*res));
                r.push(num(*err));
                t.push(r);
            }
            t
        },
        || {
            json!({
                "n": n,
                "points": rows.iter().map(|(p, x, res, err)| json!({
                    "p": vec_json(p),
                    "x": vec_json(x),
                    "quadric_residual": res,
                    "roundtrip_error": err,
                })).collect::<Vec<_>>(),
            })
        },
    )
}

pub fn classify(scene: &Scene, format: Format) -> Result<Vec<u8>, Failure> {
    let s = hypersurface(scene)?;
    let grid = scene.grid(s.domain())?;
    let report = hypersurface::survey(&s, &grid, scene.tolerances.classify);
    let d = grid.dim();
    render(
        format,
        || {
            let mut header = numbered("u", 1..d + 1);
            header.extend(["type", "plus", "minus", "zero", "min_eig_ratio"].map(String::from));
            let mut t = Table::new(header);
            for sample in &report.samples {
                let mut r: Vec<String> = sample.u.iter().map(|&v| num(v)).collect();
                match &sample.class {
                    Ok(c) => r.extend([
                        c.causal.to_string(),
                        c.signature.plus.to_string(),
                        c.signature.minus.to_string(),
                        c.signature.zero.to_string(),
                        num(c.min_eig_ratio),
                    ]),
                    Err(_) => r.extend([
                        "failed".to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]),
                }
                t.push(r);
            }
            t
        },
        || {
            json!({
                "builtin": scene.builtin,
                "n": scene.n,
                "counts": report.counts,
                "pure": report.pure,
                "mixed": report.is_mixed(),
                "samples": report.samples.iter().map(|s| match &s.class {
                    Ok(c) => json!({
                        "u": s.u,
                        "type": c.causal,
                        "signature": [c.signature.plus, c.signature.minus, c.signature.zero],
                        "min_eig_ratio": c.min_eig_ratio,
                    }),
                    Err(e) => json!({ "u": s.u, "error": e.to_string() }),
                }).collect::<Vec<_>>(),
                "transitions": report.transitions,
            })
        },
    )
}

fn lightlike_options(scene: &Scene) -> LightlikeOptions {
    let mut opts = LightlikeOptions::default();
    if let Some(step) = scene.tolerances.step {
        opts.step = step;
    }
    if let Some(t) = scene.tolerances.symmetry {
        opts.symmetry_tol = t;
    }
    opts.tol = scene.tolerances.classify;
    opts
}

fn lightlike_point(
    s: &ParametricHypersurface,
    u: &[f64],
    opts: &LightlikeOptions,
) -> pcgeom::Result<Value> {
    let an = lightlike::lightlike_affinor_with(s, u, opts)?;
    let points = lightlike::singular_points(&an)?;
    let torses = lightlike::torse_directions(&an)?;
    let deg = lightlike::degeneracy_check(s, u, DEGENERACY_SAMPLES, opts)?;
    Ok(json!({
        "u": u,
        "lambda": matrix_rows(&an.lambda),
        "determinant": an.determinant,
        "symmetry_defect": an.symmetry_defect,
        "singular_points": points.iter().map(|p| json!({
            "x": p.x,
            "multiplicity": p.multiplicity,
            "location": location_json(&p.location),
        })).collect::<Vec<_>>(),
        "torses": torses.iter().map(|t| json!({
            "root": t.root,
            "multiplicity": t.multiplicity,
            "directions": t.directions.iter().map(vec_json).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "degeneracy": {
            "max_deviation": deg.max_deviation,
            "tangent_rank": deg.tangent_rank,
            "sampled": deg.sampled.len(),
            "skipped": deg.skipped,
        },
    }))
}

pub fn lightlike(scene: &Scene, format: Format) -> Result<Vec<u8>, Failure> {
    let s = hypersurface(scene)?;
    let grid = scene.grid(s.domain())?;
    let opts = lightlike_options(scene);
    let map = lightlike::focal_map(&s, &grid, &opts);
    let (n, d) = (scene.n, grid.dim());
    let mut failures: Vec<String> = map
        .failures
        .iter()
        .map(|(u, e)| format!("lightlike analysis at u = {u:?}: {e}"))
        .collect();
    let mut points = Vec::new();
    if format == Format::Json {
        for u in grid.points() {
            match lightlike_point(&s, &u, &opts) {
                Ok(v) => points.push(v),
                Err(e) => {
                    let msg = format!("lightlike analysis at u = {u:?}: {e}");
                    if !failures.contains(&msg) {
                        failures.push(msg);
                    }
                    points.push(json!({ "u": u, "error": e.to_string() }));
                }
            }
        }
    }
    let rendered = render(
        format,
        || {
            let mut header = numbered("u", 1..d + 1);
            header.extend(["root_index", "x", "multiplicity", "eigenspace_dim"].map(String::from));
            header.extend(numbered("f", 1..n + 1));
            let mut t = Table::new(header);
            for f in &map.samples {
                let mut r: Vec<String> = f.u.iter().map(|&v| num(v)).collect();
                r.extend([
                    f.root_index.to_string(),
                    num(f.x),
                    f.multiplicity.to_string(),
                    f.eigenspace_dim.to_string(),
                ]);
                r.extend(location_cells(&f.location, n));
                t.push(r);
            }
            t
        },
        || {
            json!({
                "builtin": scene.builtin,
                "n": n,
                "points": points,
                "focal": map.samples.iter().map(|f| json!({
                    "u": f.u,
                    "root_index": f.root_index,
                    "x": f.x,
                    "multiplicity": f.multiplicity,
                    "eigenspace_dim": f.eigenspace_dim,
                    "location": location_json(&f.location),
                })).collect::<Vec<_>>(),
                "merged": map.merged.iter().map(|m| json!({
                    "location": location_json(&m.location),
                    "count": m.count,
                    "max_multiplicity": m.max_multiplicity,
                })).collect::<Vec<_>>(),
            })
        },
    )?;
    finish(rendered, failures)
}

fn finish(rendered: Vec<u8>, failures: Vec<String>) -> Result<Vec<u8>, Failure> {
    match failures.first() {
        None => Ok(rendered),
        Some(first) => Err(Failure::Numerical {
            rendered,
            message: if failures.len() > 1 {
                format!("{first} (and {} more failures)", failures.len() - 1)
            } else {
                first.clone()
            },
        }),
    }
}

pub fn congruence(scene: &Scene, format: Format) -> Result<Vec<u8>, Failure> {
    if scene.kind == Some(Kind::Hypersurface) {
        return Err(Failure::Scene(
            "this command needs a congruence scene".into(),
        ));
    }
    let c = catalog::congruence(scene.builtin()?, scene.n, &scene.params)
        .map_err(|e| Failure::Scene(e.to_string()))?;
    let grid = scene.grid(c.domain())?;
    let step = scene
        .tolerances
        .step
        .unwrap_or(pcgeom::frames::DEFAULT_STEP);
    let tol = scene
        .tolerances
        .integrable
        .unwrap_or(congruence::TOL_INTEGRABLE);
    let report = congruence::integrability_defect(&c, &grid, step);
    let (n, d) = (scene.n, grid.dim());
    let mut failures: Vec<String> = report
        .analyses
        .iter()
        .filter_map(|(u, a)| {
            a.as_ref()
                .err()
                .map(|e| format!("congruence analysis at u = {u:?}: {e}"))
        })
        .collect();
    let leaf = match &scene.stratify {
        Some(spec) => match congruence::stratify(&c, &spec.seed, spec.step, spec.count) {
            Ok(leaf) => Some(leaf),
            Err(e) => {
                failures.push(format!("stratify from seed {:?}: {e}", spec.seed));
                None
            }
        },
        None => None,
    };
    let points: Vec<_> = report
        .analyses
        .iter()
        .map(|(u, a)| {
            (
                u,
                a.as_ref()
                    .map(|a| (a, congruence::congruence_singular_points(a))),
            )
        })
        .collect();
    let rendered = render(
        format,
        || {
            let mut header = numbered("u", 1..d + 1);
            header.extend(
                ["defect", "root_index", "re", "im", "multiplicity", "real"].map(String::from),
            );
            header.extend(numbered("s", 1..n + 1));
            let mut t = Table::new(header);
            for (u, a) in &points {
                let Ok((an, pts)) = a else { continue };
                for (k, p) in pts.iter().enumerate() {
                    let mut r: Vec<String> = u.iter().map(|&v| num(v)).collect();
                    r.extend([
                        num(an.symmetry_defect),
                        k.to_string(),
                        num(p.re),
                        num(p.im),
                        p.multiplicity.to_string(),
                        p.real.to_string(),
                    ]);
                    match &p.location {
                        Some(loc) => r.extend(location_cells(loc, n)),
                        None => r.extend(vec![String::new(); n]),
                    }
                    t.push(r);
                }
            }
            t
        },
        || {
            json!({
                "builtin": scene.builtin,
                "n": n,
                "max_defect": report.max_defect,
                "integrable": report.max_defect < tol,
                "real_where_symmetric": report.real_where_symmetric(tol),
                "points": points.iter().map(|(u, a)| match a {
                    Ok((an, pts)) => json!({
                        "u": u,
                        "lambda": matrix_rows(&an.lambda),
                        "lambda_vec": vec_json(&an.lambda_vec),
                        "defect": an.symmetry_defect,
                        "complex_pair": an.has_conjugate_pair(),
                        "roots": pts.iter().map(|p| json!({
                            "re": p.re,
                            "im": p.im,
                            "multiplicity": p.multiplicity,
                            "real": p.real,
                            "location": p.location.as_ref().map(location_json),
                        })).collect::<Vec<_>>(),
                    }),
                    Err(e) => json!({ "u": u, "error": e.to_string() }),
                }).collect::<Vec<_>>(),
                "leaf": leaf.as_ref().map(|l| json!({
                    "seed": l.seed,
                    "dependent": l.dependent,
                    "dependent_spread": l.dependent_spread(),
                    "lightlike_fraction": l.lightlike_fraction(),
                    "samples": l.samples,
                })),
            })
        },
    )?;
    finish(rendered, failures)
}
