//! Scene files: TOML documents describing one object, a parameter grid and
//! output settings. Unknown keys are rejected at every level.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pcgeom::catalog::{self, ObjectKind};
use pcgeom::hypersurface::{Axis, Grid, ParamBox};
use serde::Deserialize;

/// Grid count per axis when a scene omits `[[grid]]`.
pub const DEFAULT_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Hypersurface,
    Congruence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative eigenvalue threshold for lightlike detection.
    pub classify: Option<f64>,
    /// Largest accepted symmetry defect of the lightlike affinor.
    pub symmetry: Option<f64>,
    /// Finite-difference step for frame and line derivatives.
    pub step: Option<f64>,
    /// Defect below which a congruence sample counts as integrable.
    pub integrable: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratifySpec {
    pub seed: Vec<f64>,
    #[serde(default = "default_leaf_step")]
    pub step: f64,
    #[serde(default = "default_leaf_count")]
    pub count: usize,
}

fn default_leaf_step() -> f64 {
    pcgeom::congruence::DEFAULT_LEAF_STEP
}

fn default_leaf_count() -> usize {
    4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub n: usize,
    pub kind: Option<Kind>,
    pub builtin: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub grid: Option<Vec<AxisSpec>>,
    /// Points of `Rⁿ₁` for `embed`.
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
    pub stratify: Option<StratifySpec>,
}

impl Scene {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read scene {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let scene: Scene = toml::from_str(text).map_err(|e| e.message().to_string())?;
        scene.validate()?;
        Ok(scene)
    }

    fn validate(&self) -> Result<(), String> {
        if self.n < 3 {
            return Err(format!("n must be at least 3, got {}", self.n));
        }
        if let Some(axes) = &self.grid {
            for (k, a) in axes.iter().enumerate() {
                if a.count < 2 {
                    return Err(format!("grid axis {k}: count must be at least 2"));
                }
                if !(a.lo.is_finite() && a.hi.is_finite()) || a.lo > a.hi {
                    return Err(format!("grid axis {k}: invalid range [{}, {}]", a.lo, a.hi));
                }
            }
        }
        if let Some(points) = &self.points {
            if let Some(p) = points.iter().find(|p| p.len() != self.n) {
                return Err(format!("point {p:?} does not have {} coordinates", self.n));
            }
        }
        if let Some(name) = &self.builtin {
            let info = catalog::info(name).ok_or_else(|| format!("unknown built-in `{name}`"))?;
            let expect = match info.kind {
                ObjectKind::Hypersurface => Kind::Hypersurface,
                ObjectKind::Congruence => Kind::Congruence,
            };
            if let Some(kind) = self.kind {
                if kind != expect {
                    return Err(format!("built-in `{name}` is not a {kind:?}").to_lowercase());
                }
            }
        }
        for (name, v) in [
            ("classify", self.tolerances.classify),
            ("symmetry", self.tolerances.symmetry),
            ("step", self.tolerances.step),
            ("integrable", self.tolerances.integrable),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(format!("tolerance `{name}` must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn builtin(&self) -> Result<&str, String> {
        self.builtin
            .as_deref()
            .ok_or_else(|| "scene has no `builtin`".to_string())
    }

    /// The scene grid, or the object's domain with [`DEFAULT_COUNT`] points
    /// per axis.
    pub fn grid(&self, domain: &ParamBox) -> Result<Grid, String> {
        let axes: Vec<Axis> = match &self.grid {
            Some(axes) => axes
                .iter()
                .map(|a| Axis {
                    lo: a.lo,
                    hi: a.hi,
                    count: a.count,
                })
                .collect(),
            None => domain
                .lo
                .iter()
                .zip(&domain.hi)
                .map(|(&lo, &hi)| Axis {
                    lo,
                    hi,
                    count: DEFAULT_COUNT,
                })
                .collect(),
        };
        if axes.len() != domain.dim() {
            return Err(format!(
                "grid has {} axes, the object has {} parameters",
                axes.len(),
                domain.dim()
            ));
        }
        for (k, a) in axes.iter().enumerate() {
            if a.lo < domain.lo[k] || a.hi > domain.hi[k] {
                return Err(format!(
                    "grid axis {k} [{}, {}] leaves the domain [{}, {}]",
                    a.lo, a.hi, domain.lo[k], domain.hi[k]
                ));
            }
        }
        Ok(Grid::new(axes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scene() {
        let s = Scene::parse("n = 3\nkind = \"hypersurface\"\nbuiltin = \"light_cone\"\n").unwrap();
        assert_eq!(s.builtin().unwrap(), "light_cone");
        assert!(s.grid.is_none());
    }

    #[test]
    fn unknown_keys_are_errors() {
        let bad = "n = 3\nbuiltin = \"light_cone\"\n[tolerances]\nsymetry = 1e-6\n";
        assert!(Scene::parse(bad).unwrap_err().contains("symetry"));
        assert!(Scene::parse("n = 3\ncolour = 1\n").is_err());
    }

    #[test]
    fn invariants() {
        assert!(Scene::parse("n = 2\n").is_err());
        assert!(Scene::parse("n = 3\nbuiltin = \"nope\"\n").is_err());
        assert!(Scene::parse("n = 3\nkind = \"congruence\"\nbuiltin = \"light_cone\"\n").is_err());
        let one = "n = 3\n[[grid]]\nlo = 0\nhi = 1\ncount = 1\n";
        assert!(Scene::parse(one).is_err());
        assert!(Scene::parse("n = 3\npoints = [[1.0, 2.0]]\n").is_err());
    }
}
