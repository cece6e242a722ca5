use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::dataset::{next_combination, Dataset};
use crate::error::{PcsError, Result};
use crate::subset::HSubset;
use crate::tolerances::{binomial, Caps, Tolerances};

/// Normal vector a of the hyperplane {x : x'a = 1} spanned by p observations.
#[derive(Debug, Clone)]
pub struct Direction {
    pub a: DVector<f64>,
    /// 0-based row indices of the spanning p-subset, sorted.
    pub source_rows: Vec<usize>,
    pub norm_sq: f64,
}

impl Direction {
    /// Squared orthogonal distance (a'x - 1)^2 / ||a||^2.
    pub fn distance_sq(&self, x: &DVector<f64>) -> f64 {
        let r = self.a.dot(x) - 1.0;
        r * r / self.norm_sq
    }
}

/// Directions drawn from the p-subsets of one candidate subset.
#[derive(Debug, Clone)]
pub struct DirectionSet {
    pub directions: Vec<Direction>,
    pub subset: HSubset,
    pub exhaustive: bool,
    pub skipped_singular: usize,
}

/// Solves the p x p system x_i'a = 1. Returns `None` when the system is
/// rank-deficient or its condition estimate exceeds `cond_cap` (the points
/// span a hyperplane through the origin, which the x'a = 1 parametrization
/// cannot represent).
pub fn solve_direction(
    points: &[&DVector<f64>],
    source_rows: Vec<usize>,
    tol: &Tolerances,
) -> Option<Direction> {
    let p = points.len();
    debug_assert!(points.iter().all(|x| x.len() == p));
    let mut m = DMatrix::<f64>::zeros(p, p);
    for (i, x) in points.iter().enumerate() {
        for j in 0..p {
            m[(i, j)] = x[j];
        }
    }
    // Hadamard-ratio condition estimate: |det| much smaller than the
    // product of row norms means near rank deficiency.
    let mut hadamard = 1.0_f64;
    for x in points {
        hadamard *= x.norm();
    }
    let lu = m.clone().lu();
    let det = lu.determinant();
    if det == 0.0 || !det.is_finite() || hadamard > det.abs() * tol.cond_cap {
        return None;
    }
    let rhs = DVector::from_element(p, 1.0);
    let a = lu.solve(&rhs)?;
    let norm_sq = a.norm_squared();
    if !(norm_sq > 0.0) || !norm_sq.is_finite() {
        return None;
    }
    // residual contract: spanning points must lie on the hyperplane
    for x in points {
        let r = a.dot(x) - 1.0;
        if r * r / norm_sq > tol.tol_fit_factor * (1.0 + x.norm_squared()) {
            return None;
        }
    }
    Some(Direction {
        a,
        source_rows,
        norm_sq,
    })
}

fn solve_from_rows(data: &Dataset, rows: &[usize], tol: &Tolerances) -> Option<Direction> {
    let pts: Vec<&DVector<f64>> = rows.iter().map(|&i| data.row(i)).collect();
    solve_direction(&pts, rows.to_vec(), tol)
}

/// One direction per non-singular p-subset of `subset`, in lexicographic
/// order of source rows.
pub fn enumerate_directions(
    data: &Dataset,
    subset: &HSubset,
    tol: &Tolerances,
    caps: &Caps,
) -> Result<DirectionSet> {
    let p = data.p();
    let m = subset.len();
    if m < p {
        return Err(PcsError::Degenerate(format!(
            "subset of {} rows cannot span p = {} directions",
            m, p
        )));
    }
    let total = binomial(m, p);
    if total > caps.direction_cap {
        return Err(PcsError::CapExceeded(format!(
            "C({}, {}) = {} directions exceeds direction_cap = {}; use sample_directions",
            m, p, total, caps.direction_cap
        )));
    }
    let rows = subset.rows();
    let mut directions = Vec::new();
    let mut skipped = 0usize;
    let mut combo: Vec<usize> = (0..p).collect();
    loop {
        let src: Vec<usize> = combo.iter().map(|&k| rows[k]).collect();
        match solve_from_rows(data, &src, tol) {
            Some(d) => directions.push(d),
            None => skipped += 1,
        }
        if !next_combination(&mut combo, m) {
            break;
        }
    }
    Ok(DirectionSet {
        directions,
        subset: subset.clone(),
        exhaustive: true,
        skipped_singular: skipped,
    })
}

/// Draws `k` distinct p-subsets of `subset` uniformly without replacement
/// from a deterministic seeded stream. Falls back to full enumeration when
/// `k` saturates the subset count.
pub fn sample_directions(
    data: &Dataset,
    subset: &HSubset,
    k: usize,
    seed: u64,
    tol: &Tolerances,
    caps: &Caps,
) -> Result<DirectionSet> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_directions_with_rng(data, subset, k, &mut rng, tol, caps)
}

pub fn sample_directions_with_rng(
    data: &Dataset,
    subset: &HSubset,
    k: usize,
    rng: &mut impl Rng,
    tol: &Tolerances,
    caps: &Caps,
) -> Result<DirectionSet> {
    let p = data.p();
    let m = subset.len();
    if k == 0 {
        return Err(PcsError::Validation("k must be >= 1".into()));
    }
    if m < p {
        return Err(PcsError::Degenerate(format!(
            "subset of {} rows cannot span p = {} directions",
            m, p
        )));
    }
    let total = binomial(m, p);
    if (k as u128) >= total {
        if total <= caps.direction_cap {
            return enumerate_directions(data, subset, tol, caps);
        }
        return Err(PcsError::CapExceeded(format!(
            "saturating sample of {} directions exceeds direction_cap {}",
            total, caps.direction_cap
        )));
    }
    let rows = subset.rows();
    let mut seen = std::collections::HashSet::new();
    let mut directions = Vec::with_capacity(k);
    let mut skipped = 0usize;
    let retry_cap = 50 * k + 1000;
    let mut attempts = 0usize;
    while directions.len() < k {
        if attempts >= retry_cap {
            return Err(PcsError::Degenerate(format!(
                "direction sampling exhausted {} attempts ({} singular draws)",
                attempts, skipped
            )));
        }
        attempts += 1;
        let mut combo = sample_combination(rng, m, p);
        combo.sort_unstable();
        if !seen.insert(combo.clone()) {
            continue;
        }
        let src: Vec<usize> = combo.iter().map(|&j| rows[j]).collect();
        match solve_from_rows(data, &src, tol) {
            Some(d) => directions.push(d),
            None => skipped += 1,
        }
    }
    // canonical order regardless of draw order
    directions.sort_by(|a, b| a.source_rows.cmp(&b.source_rows));
    Ok(DirectionSet {
        directions,
        subset: subset.clone(),
        exhaustive: false,
        skipped_singular: skipped,
    })
}

/// Floyd's algorithm: k distinct values from 0..m using exactly k draws.
fn sample_combination(rng: &mut impl Rng, m: usize, k: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(k);
    for j in (m - k)..m {
        let t = rng.gen_range(0..=j);
        if out.contains(&t) {
            out.push(j);
        } else {
            out.push(t);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerances::Tolerances;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn caps() -> Caps {
        Caps::default()
    }

    fn vecd(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn solve_direction_unit_points() {
        let p1 = vecd(&[1.0, 0.0]);
        let p2 = vecd(&[0.0, 1.0]);
        let d = solve_direction(&[&p1, &p2], vec![0, 1], &tol()).unwrap();
        assert!((d.a[0] - 1.0).abs() < 1e-14);
        assert!((d.a[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn solve_direction_scaled_points() {
        let p1 = vecd(&[2.0, 0.0]);
        let p2 = vecd(&[0.0, 2.0]);
        let d = solve_direction(&[&p1, &p2], vec![0, 1], &tol()).unwrap();
        assert!((d.a[0] - 0.5).abs() < 1e-14);
        assert!((d.a[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn solve_direction_singular_rank1() {
        // both points on the x-axis: hyperplane through the origin
        let p1 = vecd(&[1.0, 0.0]);
        let p2 = vecd(&[2.0, 0.0]);
        assert!(solve_direction(&[&p1, &p2], vec![0, 1], &tol()).is_none());
    }

    #[test]
    fn distance_sq_examples() {
        let a = Direction {
            a: vecd(&[1.0, 1.0]),
            source_rows: vec![0, 1],
            norm_sq: 2.0,
        };
        assert_eq!(a.distance_sq(&vecd(&[1.0, 0.0])), 0.0);
        assert!((a.distance_sq(&vecd(&[0.0, 0.0])) - 0.5).abs() < 1e-15);
        let b = Direction {
            a: vecd(&[0.5, 0.5]),
            source_rows: vec![0, 1],
            norm_sq: 0.5,
        };
        assert!((b.distance_sq(&vecd(&[0.0, 0.0])) - 2.0).abs() < 1e-15);
    }

    fn grid_dataset(n: usize) -> Dataset {
        // deterministic general-position-ish scatter
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let t = i as f64;
                vec![(1.3 * t).sin() * 5.0 + 0.01 * t, (0.7 * t).cos() * 5.0 + 0.013 * t * t]
            })
            .collect();
        Dataset::new(rows, &Tolerances::default()).unwrap()
    }

    #[test]
    fn enumerate_counts() {
        let d = grid_dataset(52);
        let subset = HSubset::new((0..52).collect()).unwrap();
        let ds = enumerate_directions(&d, &subset, &tol(), &caps()).unwrap();
        assert_eq!(ds.directions.len() + ds.skipped_singular, 1326);
        assert!(ds.exhaustive);

        let small = HSubset::new((0..5).collect()).unwrap();
        let ds = enumerate_directions(&d, &small, &tol(), &caps()).unwrap();
        assert_eq!(ds.directions.len() + ds.skipped_singular, 10);
    }

    #[test]
    fn enumerate_counts_singular_pairs() {
        let rows = vec![
            vec![1.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 1.0],
            vec![3.0, 4.0],
            vec![5.0, 2.0],
        ];
        let d = Dataset::new(rows, &Tolerances::default()).unwrap();
        let subset = HSubset::new(vec![0, 1, 2, 3, 4]).unwrap();
        let ds = enumerate_directions(&d, &subset, &tol(), &caps()).unwrap();
        assert_eq!(ds.skipped_singular, 1);
        assert_eq!(ds.directions.len(), 9);
    }

    #[test]
    fn spanning_points_on_hyperplane() {
        let d = grid_dataset(12);
        let subset = HSubset::new((0..12).collect()).unwrap();
        let ds = enumerate_directions(&d, &subset, &tol(), &caps()).unwrap();
        for dir in &ds.directions {
            for &i in &dir.source_rows {
                let x = d.row(i);
                assert!(
                    dir.distance_sq(x) <= tol().tol_fit_factor * (1.0 + x.norm_squared()),
                    "spanning point off its hyperplane"
                );
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = grid_dataset(52);
        let subset = HSubset::new((0..52).collect()).unwrap();
        let a = sample_directions(&d, &subset, 100, 7, &tol(), &caps()).unwrap();
        let b = sample_directions(&d, &subset, 100, 7, &tol(), &caps()).unwrap();
        assert_eq!(a.directions.len(), 100);
        let src_a: Vec<_> = a.directions.iter().map(|x| x.source_rows.clone()).collect();
        let src_b: Vec<_> = b.directions.iter().map(|x| x.source_rows.clone()).collect();
        assert_eq!(src_a, src_b);
    }

    #[test]
    fn sampling_saturates_to_enumeration() {
        let d = grid_dataset(8);
        let subset = HSubset::new((0..6).collect()).unwrap();
        let s = sample_directions(&d, &subset, 100, 3, &tol(), &caps()).unwrap();
        let e = enumerate_directions(&d, &subset, &tol(), &caps()).unwrap();
        assert!(s.exhaustive);
        assert_eq!(s.directions.len(), e.directions.len());
    }

    #[test]
    fn sampling_single_direction() {
        let d = grid_dataset(20);
        let subset = HSubset::new((2..16).collect()).unwrap();
        let s = sample_directions(&d, &subset, 1, 11, &tol(), &caps()).unwrap();
        assert_eq!(s.directions.len(), 1);
        for r in &s.directions[0].source_rows {
            assert!(subset.rows().contains(r));
        }
    }
}
