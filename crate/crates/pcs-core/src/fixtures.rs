//! Seeded synthetic datasets for the breakdown lab, the CLI demo modes and
//! the test suites.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::dataset::Dataset;
use crate::tolerances::Tolerances;

/// Standard normal draw via Box-Muller; keeps us off heavier distribution
/// crates for the one distribution we need.
pub fn normal(rng: &mut impl Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}

/// n seeded standard-normal rows in R^p; in general position almost surely.
pub fn gaussian_cloud(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| normal(&mut rng)).collect())
        .collect();
    Dataset::new(rows, &Tolerances::default()).expect("gaussian cloud is valid")
}

/// p = 2 fixture: the first `n_on` rows lie exactly on the line
/// y = 1 + x/2, the remaining `n_off` rows are scattered off it.
pub fn line_fixture(n_on: usize, n_off: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = (0..n_on)
        .map(|i| {
            let x = i as f64 - (n_on as f64 - 1.0) / 2.0;
            vec![x, 1.0 + 0.5 * x]
        })
        .collect();
    let mut placed = 0;
    while placed < n_off {
        let x = 12.0 * (rng.gen::<f64>() - 0.5);
        let y = 18.0 * (rng.gen::<f64>() - 0.5);
        // keep the off-line block well clear of the line
        if (y - 1.0 - 0.5 * x).abs() > 0.5 {
            rows.push(vec![x, y]);
            placed += 1;
        }
    }
    Dataset::new(rows, &Tolerances::default()).expect("line fixture is valid")
}

/// A bivariate cloud of `n - n_cluster` genuine observations around the
/// origin plus a compact distant cluster of `n_cluster` outliers on the
/// right. Returns the dataset and the outlier mask (true = cluster row).
pub fn clustered_outliers(
    n: usize,
    n_cluster: usize,
    cluster_distance: f64,
    seed: u64,
) -> (Dataset, Vec<bool>) {
    assert!(n_cluster < n);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let genuine = n - n_cluster;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut mask = vec![false; n];
    for _ in 0..genuine {
        rows.push(vec![normal(&mut rng), normal(&mut rng)]);
    }
    for i in 0..n_cluster {
        rows.push(vec![
            cluster_distance + 0.1 * normal(&mut rng),
            0.1 * normal(&mut rng),
        ]);
        mask[genuine + i] = true;
    }
    let data = Dataset::new_with_contaminated_tail(rows, genuine, &Tolerances::default())
        .expect("clustered fixture is valid");
    (data, mask)
}

/// Regenerates the bivariate demo layout: 100 observations, 30 of them a
/// compact cluster far to the right.
pub fn figure_like_dataset(seed: u64) -> (Dataset, Vec<bool>) {
    clustered_outliers(100, 30, 8.0, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::check_general_position;
    use crate::tolerances::{Caps, Tolerances};

    #[test]
    fn gaussian_cloud_in_general_position() {
        let d = gaussian_cloud(20, 2, 42);
        let r =
            check_general_position(&d, &Tolerances::default(), &Caps::default(), false, 0).unwrap();
        assert!(r.in_general_position);
    }

    #[test]
    fn line_fixture_fails_general_position() {
        let d = line_fixture(12, 8, 7);
        let r =
            check_general_position(&d, &Tolerances::default(), &Caps::default(), false, 0).unwrap();
        assert!(!r.in_general_position);
        let w = r.witness.unwrap();
        assert!(w.iter().all(|&i| i < 12), "witness should be on-line rows");
    }

    #[test]
    fn figure_layout_counts() {
        let (d, mask) = figure_like_dataset(3);
        assert_eq!(d.n(), 100);
        assert_eq!(mask.iter().filter(|&&m| m).count(), 30);
        assert!(d.row(99)[0] > 5.0);
    }

    #[test]
    fn fixtures_are_seed_deterministic() {
        let a = gaussian_cloud(15, 3, 9);
        let b = gaussian_cloud(15, 3, 9);
        for i in 0..15 {
            assert_eq!(a.row(i), b.row(i));
        }
    }
}
