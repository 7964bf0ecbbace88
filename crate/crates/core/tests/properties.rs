//! Property tests: exact-set equality against brute-force oracles and the
//! structural invariants of the statistics.

use llg_core::dirstats::DirectionSample;
use llg_core::lattice::{
    enumerate_shell, points_in_region, AffineLattice, Alpha, Region, Shell, UnimodularBasis,
};
use llg_core::lorentz::{free_path, free_path_brute_force, FreePathOutcome, RayQuery};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn key(p: &[f64]) -> (i64, i64) {
    ((p[0] * 1e7).round() as i64, (p[1] * 1e7).round() as i64)
}

fn point_set(pts: &[Vec<f64>]) -> BTreeSet<(i64, i64)> {
    pts.iter().map(|p| key(p)).collect()
}

/// Random well-conditioned unimodular 2x2 basis.
fn basis_strategy() -> impl Strategy<Value = UnimodularBasis> {
    (0.3f64..2.0, -0.9f64..0.9, -1.5f64..1.5).prop_map(|(a, shear, skew)| {
        // rows (a, a*shear), (skew, (1 + a*shear*skew)/a) have det exactly 1
        let rows = vec![vec![a, a * shear], vec![skew, (1.0 + a * shear * skew) / a]];
        UnimodularBasis::from_rows_rescaled(&rows).unwrap()
    })
}

fn alpha_strategy() -> impl Strategy<Value = Alpha> {
    prop_oneof![
        Just(Alpha::zero(2)),
        (-3i64..4, -3i64..4, 1i64..5)
            .prop_map(|(p1, p2, q)| Alpha::rational(vec![p1, p2], q).unwrap()),
        (-0.5f64..0.5, -0.5f64..0.5).prop_map(|(a, b)| Alpha::Irrational(vec![a, b])),
    ]
}

/// Independent membership predicate used by the brute-force region oracle.
fn oracle_member(region: &Region, p: &[f64]) -> bool {
    match region {
        Region::Rect { lo, hi } => (0..2).all(|k| p[k] >= lo[k] && p[k] <= hi[k]),
        Region::Cylinder {
            c1,
            c2,
            sigma,
            offset,
        } => p[0] > *c1 && p[0] < *c2 && (p[1] - offset[0]).abs() < *sigma,
        _ => unreachable!("oracle covers rectangles and cylinders"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn region_enumeration_matches_brute_force(
        basis in basis_strategy(),
        alpha in alpha_strategy(),
        rect in prop_oneof![Just(true), Just(false)],
        e1 in -3.0f64..0.0, e2 in 0.0f64..3.0,
        w in 0.1f64..2.0,
    ) {
        let lat = AffineLattice::new(basis, alpha).unwrap();
        let region = if rect {
            Region::Rect { lo: vec![e1, e1], hi: vec![e2, e2] }
        } else {
            Region::Cylinder { c1: e1, c2: e2, sigma: w, offset: vec![0.0] }
        };
        let fast = points_in_region(&lat, &region, 1 << 30).unwrap();
        // brute force over a generously large coefficient box
        let mut brute = BTreeSet::new();
        for m1 in -120i64..=120 {
            for m2 in -120i64..=120 {
                let p = lat.point(&[m1, m2]);
                if oracle_member(&region, &p) {
                    brute.insert(key(&p));
                }
            }
        }
        // the brute-force coefficient box covers the region: every region
        // used here fits inside [-8, 8]^2, and for the basis family above
        // the inverse-matrix entries are bounded by ~14, so coefficients of
        // such points stay within +-120
        prop_assert_eq!(point_set(&fast.points), brute);
    }

    #[test]
    fn reduction_preserves_points(basis in basis_strategy()) {
        let lat = AffineLattice::new(basis, Alpha::zero(2)).unwrap();
        let red = lat.reduced().unwrap();
        let region = Region::Rect { lo: vec![-5.0, -5.0], hi: vec![5.0, 5.0] };
        let a = points_in_region(&lat, &region, 1 << 30).unwrap();
        let b = points_in_region(&red, &region, 1 << 30).unwrap();
        prop_assert_eq!(point_set(&a.points), point_set(&b.points));
    }

    #[test]
    fn shell_additivity(basis in basis_strategy(), c in 0.1f64..0.9) {
        let lat = AffineLattice::new(basis, Alpha::Irrational(vec![0.21, 0.13])).unwrap();
        let t = 6.0;
        let outer = enumerate_shell(&lat, &Shell::new(c, t).unwrap(), 1 << 30).unwrap();
        let inner = enumerate_shell(&lat, &Shell::new(0.0, c * t).unwrap(), 1 << 30).unwrap();
        let full = enumerate_shell(&lat, &Shell::new(0.0, t).unwrap(), 1 << 30).unwrap();
        prop_assert_eq!(outer.points.len() + inner.points.len(), full.points.len());
        let mut union = point_set(&outer.points);
        union.extend(point_set(&inner.points));
        prop_assert_eq!(union, point_set(&full.points));
    }

    #[test]
    fn gap_invariants(values in prop::collection::vec(-0.5f64..0.5, 1..200)) {
        let s = DirectionSample::from_values(values);
        let n = s.n() as f64;
        let total: f64 = s.normalized_gaps().iter().sum();
        prop_assert!((total - n).abs() < 1e-9 * n.max(1.0));
        // distribution is non-increasing with P(0) = 1
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let p = s.gap_distribution(&grid);
        prop_assert_eq!(p[0], 1.0);
        for w in p.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        // beyond the largest gap the distribution vanishes
        let max_gap = s.normalized_gaps().iter().cloned().fold(0.0, f64::max);
        prop_assert_eq!(s.gap_distribution(&[max_gap + 1e-9])[0], 0.0);
    }

    #[test]
    fn free_path_matches_brute_force(
        sx in 0.15f64..0.85, sy in 0.15f64..0.85,
        angle in 0.0f64..std::f64::consts::TAU,
        rho in 0.02f64..0.2,
        t_max in 5.0f64..40.0,
    ) {
        let lat = AffineLattice::integer(2);
        let v = vec![angle.cos(), angle.sin()];
        let start = vec![sx, sy];
        // skip starts that violate the radius precondition
        prop_assume!((start[0].powi(2) + start[1].powi(2)).sqrt() > rho);
        prop_assume!(((1.0 - start[0]).powi(2) + start[1].powi(2)).sqrt() > rho);
        prop_assume!((start[0].powi(2) + (1.0 - start[1]).powi(2)).sqrt() > rho);
        prop_assume!(((1.0 - start[0]).powi(2) + (1.0 - start[1]).powi(2)).sqrt() > rho);
        prop_assume!(rho < 0.45);
        let q = RayQuery::new(start, v, rho, t_max).unwrap();
        let fast = free_path(&lat, &q).unwrap();
        let brute = free_path_brute_force(&lat, &q).unwrap();
        match (fast, brute) {
            (FreePathOutcome::Hit(a), FreePathOutcome::Hit(b)) => {
                prop_assert_eq!(a.coeff, b.coeff);
                prop_assert!((a.tau1 - b.tau1).abs() <= 1e-9);
                // the collision point sits on the sphere
                let d = ((a.center[0] - (q.start[0] + a.tau1 * q.v[0])).powi(2)
                    + (a.center[1] - (q.start[1] + a.tau1 * q.v[1])).powi(2))
                .sqrt();
                prop_assert!((d - rho).abs() < 1e-9);
            }
            (FreePathOutcome::HorizonExceeded, FreePathOutcome::HorizonExceeded) => {}
            _ => prop_assert!(false, "fast and brute-force outcomes disagree"),
        }
    }

    #[test]
    fn free_path_never_enters_early(
        sx in 0.2f64..0.8, sy in 0.2f64..0.8,
        angle in 0.0f64..std::f64::consts::TAU,
    ) {
        let lat = AffineLattice::integer(2);
        let rho = 0.1;
        let start = vec![sx, sy];
        prop_assume!([ (0.0,0.0),(1.0,0.0),(0.0,1.0),(1.0,1.0) ].iter()
            .all(|&(cx,cy)| ((sx-cx).powi(2)+(sy-cy).powi(2)).sqrt() > rho + 1e-6));
        let v = vec![angle.cos(), angle.sin()];
        let q = RayQuery::new(start.clone(), v.clone(), rho, 50.0).unwrap();
        if let FreePathOutcome::Hit(rec) = free_path(&lat, &q).unwrap() {
            // along a dense grid of times before tau1 the path stays outside
            for i in 1..1000 {
                let t = rec.tau1 * i as f64 / 1000.0;
                let p = [start[0] + t * v[0], start[1] + t * v[1]];
                let nx = p[0].round();
                let ny = p[1].round();
                let d = ((p[0] - nx).powi(2) + (p[1] - ny).powi(2)).sqrt();
                prop_assert!(d > rho - 1e-9, "entered a scatterer at t = {t} < tau1");
            }
            prop_assert!((rec.v1[0].powi(2) + rec.v1[1].powi(2) - 1.0).abs() < 1e-12);
        }
    }
}
