mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use pcgeom::catalog;
use pcgeom::conformal::Unembedded;
use pcgeom::hypersurface::{Axis, Grid, Immersion, ParametricHypersurface};
use pcgeom::lightlike::{self, LightlikeOptions};
use pcgeom::Error;

fn surface(name: &str, n: usize) -> ParametricHypersurface {
    catalog::hypersurface(name, n, &BTreeMap::new()).unwrap()
}

/// Sample points of each lightlike catalog surface.
fn samples() -> Vec<(&'static str, usize, Vec<f64>)> {
    vec![
        ("light_cone", 3, vec![1.0, 0.7]),
        ("light_cone", 3, vec![1.7, 4.0]),
        ("light_cone", 4, vec![1.2, 0.9, 2.5]),
        ("light_cone", 5, vec![0.8, 1.3, 0.6, 5.5]),
        ("null_hyperplane", 3, vec![0.3, -0.4]),
        ("null_hyperplane", 4, vec![0.1, 0.2, 0.3]),
        ("null_hyperplane", 5, vec![0.1, 0.2, 0.3, -0.5]),
        ("tilted_null_family", 3, vec![0.5, 1.0]),
        ("tilted_null_family", 4, vec![2.0, 0.7, -0.3]),
        ("null_torus", 4, vec![0.5, 0.3, 0.4]),
        ("null_torus", 4, vec![4.0, -0.8, 0.9]),
    ]
}

/// Eigenvalues of the null shape operator `h⁻¹ B` with
/// `B_ij = −g(ℓ, ∂_i∂_j f)` over the non-null parameter directions,
/// from finite differences of the point map alone.
fn shape_operator_eigenvalues(s: &ParametricHypersurface, u: &[f64]) -> Vec<f64> {
    let f = |v: &[f64]| s.point(v);
    let j = common::fd_jacobian(&f, u, 1e-6);
    let (l, dirs) = common::null_split(&j);
    let m = dirs.len();
    let e: Vec<DVector<f64>> = dirs.iter().map(|w| &j * w).collect();
    let h = 1e-4;
    let along = |w1: &DVector<f64>, w2: &DVector<f64>, a: f64, b: f64| {
        let v: Vec<f64> = (0..u.len()).map(|k| u[k] + a * w1[k] + b * w2[k]).collect();
        f(&v)
    };
    let mut hmat = DMatrix::zeros(m, m);
    let mut bmat = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            hmat[(a, b)] = common::minkowski(&e[a], &e[b]);
            let d2 = (along(&dirs[a], &dirs[b], h, h)
                - along(&dirs[a], &dirs[b], h, -h)
                - along(&dirs[a], &dirs[b], -h, h)
                + along(&dirs[a], &dirs[b], -h, -h))
                / (4.0 * h * h);
            bmat[(a, b)] = -common::minkowski(&l, &d2);
        }
    }
    // h is positive definite: symmetric similarity transform
    let hh = SymmetricEigen::new(hmat);
    let inv_sqrt = &hh.eigenvectors
        * DMatrix::from_diagonal(&hh.eigenvalues.map(|x| 1.0 / x.sqrt()))
        * hh.eigenvectors.transpose();
    let sym = &inv_sqrt * bmat * &inv_sqrt;
    let mut ev: Vec<f64> = SymmetricEigen::new((&sym + sym.transpose()) * 0.5)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn null_hyperplane_has_zero_affinor() {
    let plane = surface("null_hyperplane", 3);
    let an = lightlike::lightlike_affinor(&plane, &[0.3, -0.4]).unwrap();
    assert_eq!(an.lambda.shape(), (1, 1));
    assert!(an.lambda[(0, 0)].abs() < 1e-10);
    assert!(an.symmetry_defect == 0.0);
    let pts = lightlike::singular_points(&an).unwrap();
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0].location, Unembedded::AtInfinity);
}

#[test]
fn light_cone_root_locates_the_vertex_in_any_gauge() {
    let cone = surface("light_cone", 3);
    let mut xs = Vec::new();
    for r in [1.0, 2.0] {
        let an = lightlike::lightlike_affinor(&cone, &[r, 0.7]).unwrap();
        assert_eq!(an.lambda.shape(), (1, 1));
        assert!(an.lambda[(0, 0)].abs() > 0.1);
        let pts = lightlike::singular_points(&an).unwrap();
        let v = pts[0].location.finite().unwrap();
        assert!(v.amax() < 1e-6, "vertex off by {v}");
        xs.push(pts[0].x);
    }
    assert!((xs[0] - xs[1]).abs() > 0.1);
}

#[test]
fn affinor_matches_null_shape_operator() {
    for (name, n, u) in samples() {
        let s = surface(name, n);
        let an = lightlike::lightlike_affinor(&s, &u).unwrap();
        let mut ev: Vec<f64> = SymmetricEigen::new(an.lambda.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        let oracle = shape_operator_eigenvalues(&s, &u);
        for (a, b) in ev.iter().zip(&oracle) {
            assert!(
                (a - b).abs() < 1e-5,
                "{name} n={n} at {u:?}: {ev:?} vs {oracle:?}"
            );
        }
    }
}

#[test]
fn roots_match_rank_drop_scan() {
    for (name, n, u) in samples() {
        let s = surface(name, n);
        let an = lightlike::lightlike_affinor(&s, &u).unwrap();
        assert!(an.symmetry_defect < 1e-6);
        assert_eq!(an.root_count(), n - 2);
        assert!(an.roots.iter().all(|r| r.real));
        let scan = common::lightlike_scan(&|v| s.point(v), &u);
        let inside: Vec<f64> = an
            .roots
            .iter()
            .map(|r| r.value.re)
            .filter(|x| x.abs() < common::SCAN_RANGE)
            .collect();
        assert_eq!(
            scan.len(),
            inside.len(),
            "{name} n={n}: scan {scan:?} roots {inside:?}"
        );
        for (t, x) in scan.iter().zip(&inside) {
            assert!((t - x).abs() < 1e-4, "{name} n={n}: scan {t} root {x}");
        }
    }
}

#[test]
fn focal_points_do_not_depend_on_the_gauge() {
    let gauge: Arc<lightlike::GaugeFn> =
        Arc::new(|u: &[f64]| (1.5 + 0.3 * u[0].sin(), 0.7 + 0.2 * u[u.len() - 1].cos()));
    let opts = LightlikeOptions {
        gauge: Some(gauge),
        ..LightlikeOptions::default()
    };
    for (name, n, u) in samples() {
        let s = surface(name, n);
        let plain = lightlike::lightlike_affinor(&s, &u).unwrap();
        let scaled = lightlike::lightlike_affinor_with(&s, &u, &opts).unwrap();
        let a = lightlike::singular_points(&plain).unwrap();
        let b = lightlike::singular_points(&scaled).unwrap();
        assert_eq!(a.len(), b.len());
        let moved = a.iter().zip(&b).any(|(p, q)| (p.x - q.x).abs() > 1e-3);
        assert!(
            moved || a.iter().all(|p| p.x.abs() < 1e-9),
            "{name}: roots did not move"
        );
        for (p, q) in a.iter().zip(&b) {
            match (&p.location, &q.location) {
                (Unembedded::Finite(x), Unembedded::Finite(y)) => {
                    assert!((x - y).amax() < 1e-6, "{name}: {x} vs {y}")
                }
                (Unembedded::AtInfinity, Unembedded::AtInfinity) => {}
                other => panic!("{name}: {other:?}"),
            }
        }
    }
}

#[test]
fn torse_directions_are_orthogonal_for_distinct_roots() {
    let torus = surface("null_torus", 4);
    for u in [[0.5, 0.3, 0.4], [4.0, -0.8, 0.9], [2.0, 0.0, 0.1]] {
        let an = lightlike::lightlike_affinor(&torus, &u).unwrap();
        let torses = lightlike::torse_directions(&an).unwrap();
        assert_eq!(torses.len(), 2);
        let (a, b) = (&torses[0].directions[0], &torses[1].directions[0]);
        assert!(a.dot(b).abs() < 1e-8);
        for t in &torses {
            let d = &t.directions[0];
            let r = &an.lambda * d + d * t.root;
            assert!(r.amax() < 1e-8);
        }
    }
    let cone = surface("light_cone", 4);
    let an = lightlike::lightlike_affinor(&cone, &[1.2, 0.9, 2.5]).unwrap();
    let torses = lightlike::torse_directions(&an).unwrap();
    assert_eq!(torses.len(), 1);
    assert!(torses[0].is_multiple());
    assert_eq!(torses[0].directions.len(), 2);
}

#[test]
fn torus_focal_points_are_core_circle_and_axis() {
    let (a, b) = (2.0, 1.0);
    let torus = surface("null_torus", 4);
    let (phi, psi) = (0.5_f64, 0.3_f64);
    let an = lightlike::lightlike_affinor(&torus, &[phi, psi, 0.4]).unwrap();
    let pts = lightlike::singular_points(&an).unwrap();
    let mut found: Vec<DVector<f64>> = pts
        .iter()
        .map(|p| p.location.finite().unwrap().clone())
        .collect();
    found.sort_by(|x, y| x[3].total_cmp(&y[3]));
    let v_axis = -(a + b * psi.cos()) / psi.cos();
    let axis = DVector::from_column_slice(&[0.0, 0.0, (b + v_axis) * psi.sin(), v_axis]);
    let core = DVector::from_column_slice(&[a * phi.cos(), a * phi.sin(), 0.0, -b]);
    assert!((&found[0] - axis).amax() < 1e-6);
    assert!((&found[1] - core).amax() < 1e-6);
}

#[test]
fn tangent_space_is_constant_along_generators() {
    let opts = LightlikeOptions::default();
    for (name, n, u) in samples() {
        let s = surface(name, n);
        let rep = lightlike::degeneracy_check(&s, &u, 41, &opts).unwrap();
        let bound = if name == "null_hyperplane" {
            1e-8
        } else {
            1e-6
        };
        assert!(
            rep.max_deviation < bound,
            "{name} n={n}: {}",
            rep.max_deviation
        );
        assert_eq!(rep.tangent_rank, n - 2, "{name} n={n}");
        assert!(rep.sampled.len() >= 39);
    }
    let sphere = catalog::hypersurface(
        "hypersphere",
        3,
        &[("a".to_string(), -1.0)].into_iter().collect(),
    )
    .unwrap();
    assert!(matches!(
        lightlike::degeneracy_check(&sphere, &[0.1, 0.2], 5, &opts),
        Err(Error::NotLightlike { .. })
    ));
}

#[test]
fn focal_map_of_the_cone_is_its_vertex() {
    let cone = surface("light_cone", 3);
    let grid = Grid::new(vec![
        Axis {
            lo: 0.5,
            hi: 2.0,
            count: 6,
        },
        Axis {
            lo: 0.0,
            hi: 6.0,
            count: 8,
        },
    ]);
    let map = lightlike::focal_map(&cone, &grid, &LightlikeOptions::default());
    assert!(map.failures.is_empty());
    assert_eq!(map.samples.len(), 48);
    assert_eq!(map.merged.len(), 1);
    assert!(map.merged[0].location.finite().unwrap().amax() < 1e-6);
}

#[test]
fn focal_map_of_null_hyperplane_is_ideal() {
    let plane = surface("null_hyperplane", 4);
    let grid = Grid::new(vec![
        Axis {
            lo: -1.0,
            hi: 1.0,
            count: 3
        };
        3
    ]);
    let map = lightlike::focal_map(&plane, &grid, &LightlikeOptions::default());
    assert!(map.failures.is_empty());
    assert!(map
        .samples
        .iter()
        .all(|s| s.location == Unembedded::AtInfinity && s.multiplicity == 2));
    assert_eq!(map.merged.len(), 1);
}

#[test]
fn tilted_family_focal_set_traces_the_helix() {
    let tilted = surface("tilted_null_family", 3);
    let grid = Grid::new(vec![
        Axis {
            lo: 0.2,
            hi: 3.0,
            count: 15,
        },
        Axis {
            lo: 0.5,
            hi: 2.0,
            count: 4,
        },
    ]);
    let map = lightlike::focal_map(&tilted, &grid, &LightlikeOptions::default());
    assert!(map.failures.is_empty());
    for s in &map.samples {
        let p = s.location.finite().unwrap();
        let t = s.u[0];
        let helix = DVector::from_column_slice(&[t.cos(), t.sin(), t]);
        assert!((p - helix).amax() < 1e-4, "{:?}: {p}", s.u);
    }
}

#[test]
fn singular_point_counts_for_several_dimensions() {
    for n in 3..=5 {
        for name in ["light_cone", "null_hyperplane"] {
            let s = surface(name, n);
            let u = s.domain().center();
            let an = lightlike::lightlike_affinor(&s, &u).unwrap();
            assert_eq!(an.root_count(), n - 2);
            assert!(an.roots.iter().all(|r| r.real));
            assert_eq!(an.roots.len(), 1, "{name}: umbilic generator");
        }
    }
}
