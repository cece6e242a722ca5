//! Property suites over the core invariants.

use proptest::prelude::*;

use pcs_core::{
    breakdown_bound, check_general_position, default_h, fixtures, Caps, DistanceProfile, HSubset,
    Tolerances,
};

fn tol() -> Tolerances {
    Tolerances::default()
}

proptest! {
    #[test]
    fn h_formula_and_bound_range(n in 5usize..200, p in 2usize..6) {
        prop_assume!(n > p + 1);
        let h = default_h(n, p).unwrap().h;
        prop_assert_eq!(h, (n + p + 1).div_ceil(2));
        prop_assert!(h >= p + 1 && h <= n);
        let b = breakdown_bound(n, h).unwrap().as_f64();
        prop_assert!(b > 0.0 && b <= 0.5);
    }

    #[test]
    fn neighborhood_respects_order_statistics(
        d2 in prop::collection::vec(0.0f64..1e6, 6..40),
        h_frac in 0.3f64..1.0,
    ) {
        let n = d2.len();
        let h = ((n as f64 * h_frac) as usize).clamp(1, n);
        let profile = DistanceProfile::from_distances(d2.clone(), h, &tol());
        let hood = profile.h_neighborhood();
        // at least h members, all at or below the threshold, and every
        // excluded row strictly above it
        prop_assert!(hood.len() >= h);
        for &i in hood.rows() {
            prop_assert!(d2[i] <= profile.threshold);
        }
        for i in 0..n {
            if !hood.contains(i) {
                prop_assert!(d2[i] > profile.threshold);
            }
        }
    }

    #[test]
    fn incongruence_nonnegative_on_random_subsets(
        d2 in prop::collection::vec(0.0f64..1e3, 10..30),
        seed in 0u64..1000,
    ) {
        let n = d2.len();
        let h = (n + 3) / 2;
        let profile = DistanceProfile::from_distances(d2, h, &tol());
        // pseudo-random h-subset from the seed
        let mut rows: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            rows.swap(i, (s >> 33) as usize % (i + 1));
        }
        let subset = HSubset::new(rows[..h].to_vec()).unwrap();
        let v = profile.incongruence(&subset);
        prop_assert!(v >= 0.0);
        // subset == H^a gives exactly zero
        let hood = profile.h_neighborhood();
        prop_assert_eq!(profile.incongruence(&hood), 0.0);
    }
}

#[test]
fn general_position_is_permutation_invariant() {
    let base = fixtures::gaussian_cloud(12, 2, 31);
    let verdict = |rows: Vec<Vec<f64>>| {
        let d = pcs_core::Dataset::new(rows, &tol()).unwrap();
        check_general_position(&d, &tol(), &Caps::default(), false, 0)
            .unwrap()
            .in_general_position
    };
    let rows: Vec<Vec<f64>> = base
        .rows()
        .iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    let original = verdict(rows.clone());
    let mut reversed = rows.clone();
    reversed.reverse();
    assert_eq!(original, verdict(reversed));
    let mut rotated = rows.clone();
    rotated.rotate_left(5);
    assert_eq!(original, verdict(rotated));
}
