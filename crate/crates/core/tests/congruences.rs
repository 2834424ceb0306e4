mod common;

use std::collections::BTreeMap;

use nalgebra::DVector;
use pcgeom::catalog;
use pcgeom::conformal::Unembedded;
use pcgeom::congruence::{self, IsotropicCongruence, NullLineCongruence};
use pcgeom::hypersurface::{Axis, Grid, ParamBox};
use pcgeom::Error;

const STEP: f64 = 1e-4;

fn cong(name: &str, n: usize) -> NullLineCongruence {
    catalog::congruence(name, n, &BTreeMap::new()).unwrap()
}

fn grid_over(domain: &ParamBox, count: usize) -> Grid {
    Grid::new(
        domain
            .lo
            .iter()
            .zip(&domain.hi)
            .map(|(&lo, &hi)| Axis { lo, hi, count })
            .collect(),
    )
}

/// The line `(A_0, A_1)` rebuilt from the base point and direction with the
/// reference lifts.
fn oracle_line(c: &NullLineCongruence) -> impl Fn(&[f64]) -> (DVector<f64>, DVector<f64>) + '_ {
    move |u| {
        let p = c.base(u);
        let l = c.direction(u);
        let l = &l / l.norm();
        (common::lift(&p), common::tangent_lift(&p, &l))
    }
}

#[test]
fn lines_are_isotropic() {
    for (name, n) in [
        ("parallel_null", 3),
        ("light_cone_normal", 4),
        ("twisted", 5),
    ] {
        let c = cong(name, n);
        let u = c.domain().center();
        let r = congruence::line_residuals(&c, &u).unwrap();
        assert!(r.iter().all(|x| *x < 1e-12), "{name}: {r:?}");
        let (a0, a1) = c.line(&u).unwrap();
        let (b0, b1) = oracle_line(&c)(&u);
        assert!((a0 - &b0).amax() < 1e-12 && (a1 - &b1).amax() < 1e-12);
        assert!(common::ambient_dot(&b1, &b1).abs() < 1e-12);
        assert!(common::ambient_dot(&b0, &b1).abs() < 1e-12);
    }
}

#[test]
fn line_families_have_full_dimension() {
    for (name, n) in [
        ("parallel_null", 3),
        ("parallel_null", 5),
        ("light_cone_normal", 3),
        ("light_cone_normal", 5),
        ("twisted", 4),
    ] {
        let c = cong(name, n);
        let line = oracle_line(&c);
        let stacked = |v: &[f64]| {
            let (a0, a1) = line(v);
            DVector::from_iterator(2 * a0.len(), a0.iter().chain(a1.iter()).copied())
        };
        let u = c.domain().center();
        let j = common::fd_jacobian(&stacked, &u, 1e-6);
        assert_eq!(j.ncols(), n - 1);
        assert!(common::rank_ratio(&j) > 1e-3, "{name} n={n}");
    }
}

#[test]
fn parallel_congruence_has_vanishing_affinor() {
    for n in 3..=5 {
        let c = cong("parallel_null", n);
        let an = congruence::congruence_affinor(&c, &[0.2; 8][..n - 1], STEP).unwrap();
        assert!(an.lambda.amax() < 1e-9, "n = {n}: {}", an.lambda);
        assert!(an.lambda_vec.amax() < 1e-9, "n = {n}: {}", an.lambda_vec);
        let pts = congruence::congruence_singular_points(&an);
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].multiplicity, n - 2);
        assert_eq!(pts[0].location, Some(Unembedded::AtInfinity));
    }
}

#[test]
fn normal_congruence_focuses_on_the_time_axis() {
    for n in 3..=5 {
        let c = cong("light_cone_normal", n);
        let u = c.domain().center();
        let an = congruence::congruence_affinor(&c, &u, STEP).unwrap();
        assert!(an.symmetry_defect < 1e-8);
        assert!(an.all_real());
        assert_eq!(an.root_count(), n - 2);
        let pts = congruence::congruence_singular_points(&an);
        assert_eq!(pts.len(), 1);
        let Some(Unembedded::Finite(p)) = &pts[0].location else {
            panic!("n = {n}: {:?}", pts[0].location);
        };
        let mut expect = DVector::zeros(n);
        expect[n - 1] = u[0];
        assert!((p - expect).amax() < 1e-6, "n = {n}: {p}");
    }
}

#[test]
fn roots_match_the_rank_drop_scan() {
    for (name, n) in [
        ("light_cone_normal", 3),
        ("light_cone_normal", 4),
        ("twisted", 4),
        ("twisted", 5),
    ] {
        let c = cong(name, n);
        let line = oracle_line(&c);
        for u in [
            c.domain().center(),
            c.domain()
                .lo
                .iter()
                .zip(&c.domain().hi)
                .map(|(a, b)| 0.3 * a + 0.7 * b)
                .collect(),
        ] {
            let an = congruence::congruence_affinor(&c, &u, STEP).unwrap();
            let real: Vec<f64> = an
                .roots
                .iter()
                .filter(|r| r.real && r.value.re.abs() < common::SCAN_RANGE)
                .map(|r| r.value.re)
                .collect();
            let scan = common::congruence_scan(&line, &u);
            assert_eq!(
                scan.len(),
                real.len(),
                "{name} n={n}: scan {scan:?} roots {:?}",
                an.roots
            );
            for (t, x) in scan.iter().zip(&real) {
                assert!((t - x).abs() < 1e-4, "{name}: {t} vs {x}");
            }
        }
    }
}

#[test]
fn symmetric_samples_have_real_roots() {
    for (name, n) in [
        ("parallel_null", 4),
        ("light_cone_normal", 4),
        ("twisted", 4),
    ] {
        let c = cong(name, n);
        let report = congruence::integrability_defect(&c, &grid_over(c.domain(), 4), STEP);
        assert_eq!(report.failures(), 0);
        assert!(report.real_where_symmetric(1e-6), "{name}");
    }
    let twisted = cong("twisted", 4);
    let report = congruence::integrability_defect(&twisted, &grid_over(twisted.domain(), 4), STEP);
    assert!(report.max_defect > 0.1);
    let an = congruence::congruence_affinor(&twisted, &[0.0, 0.3, -0.2], STEP).unwrap();
    assert!(an.has_conjugate_pair());
    let pts = congruence::congruence_singular_points(&an);
    assert!(pts.iter().all(|p| !p.real && p.location.is_none()));
}

#[test]
fn normal_congruence_leaves_are_light_cones() {
    for n in [3, 4] {
        let c = cong("light_cone_normal", n);
        let seed = c.domain().center();
        let leaf = congruence::stratify(&c, &seed, 0.05, 4).unwrap();
        assert_eq!(leaf.dependent, 0);
        assert_eq!(leaf.samples.len(), 9usize.pow((n - 2) as u32));
        assert!(
            leaf.dependent_spread() < 1e-5,
            "{}",
            leaf.dependent_spread()
        );
        assert!(leaf.lightlike_fraction() >= 0.99);
    }
}

#[test]
fn parallel_leaves_are_null_hyperplanes() {
    let c = cong("parallel_null", 4);
    let seed = [0.1, -0.2, 0.3];
    let leaf = congruence::stratify(&c, &seed, 0.05, 3).unwrap();
    assert_eq!(leaf.dependent, 0);
    assert!(leaf.dependent_spread() < 1e-10);
    assert!(leaf.lightlike_fraction() >= 0.99);
    for s in &leaf.samples {
        for t in congruence::SWEEP_SAMPLES {
            let x = c.point_on_line(&s.u, t);
            assert!((x[0] - x[3] - seed[0]).abs() < 1e-10);
        }
    }
}

#[test]
fn twisted_congruence_is_not_stratified() {
    let c = cong("twisted", 4);
    assert!(matches!(
        congruence::stratify(&c, &[0.0, 0.3, -0.2], 0.05, 3),
        Err(Error::NonIntegrable { defect }) if defect > 0.1
    ));
}

#[test]
fn constant_lines_are_rejected() {
    let c = NullLineCongruence::new(
        3,
        ParamBox::new(vec![-1.0; 2], vec![1.0; 2]),
        |_| DVector::from_column_slice(&[0.0, 0.0, 0.0]),
        |_| DVector::from_column_slice(&[1.0, 0.0, 1.0]),
    )
    .unwrap();
    assert!(matches!(
        congruence::congruence_affinor(&c, &[0.0, 0.0], STEP),
        Err(Error::NotCongruence)
    ));
}
