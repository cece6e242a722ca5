use crate::dataset::Dataset;
use crate::error::{PcsError, Result};
use crate::geometry::{Direction, DirectionSet};
use crate::subset::HSubset;
use crate::tolerances::Tolerances;

/// Squared distances of every observation to one hyperplane, with the
/// derived order statistics the incongruence index needs.
#[derive(Debug, Clone)]
pub struct DistanceProfile {
    pub d2: Vec<f64>,
    /// h-th smallest squared distance over all n rows.
    pub threshold: f64,
    /// Mean of d2 over the h-neighborhood H^a (ties included).
    pub neighborhood_mean: f64,
    /// Scale-aware zero tolerance for this direction.
    pub tol_zero: f64,
    /// Rows with d2 <= tol_zero.
    pub zero_rows: Vec<usize>,
}

impl DistanceProfile {
    pub fn compute(data: &Dataset, dir: &Direction, h: usize, tol: &Tolerances) -> Self {
        let d2: Vec<f64> = data.rows().iter().map(|x| dir.distance_sq(x)).collect();
        Self::from_distances(d2, h, tol)
    }

    pub fn from_distances(d2: Vec<f64>, h: usize, tol: &Tolerances) -> Self {
        let n = d2.len();
        debug_assert!(h >= 1 && h <= n);
        let mut sorted = d2.clone();
        sorted.sort_unstable_by(|a, b| a.total_cmp(b));
        let threshold = sorted[h - 1];
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let tol_zero = tol.tol_zero_factor * (1.0 + median);
        let mut sum = 0.0;
        let mut count = 0usize;
        for &v in &d2 {
            if v <= threshold {
                sum += v;
                count += 1;
            }
        }
        let neighborhood_mean = sum / count as f64;
        let zero_rows: Vec<usize> = (0..n).filter(|&i| d2[i] <= tol_zero).collect();
        DistanceProfile {
            d2,
            threshold,
            neighborhood_mean,
            tol_zero,
            zero_rows,
        }
    }

    pub fn denominator_is_zero(&self) -> bool {
        self.threshold <= self.tol_zero
    }

    /// H^a = {i : d_i^2 <= d_(h)^2}; may exceed h elements on ties.
    pub fn h_neighborhood(&self) -> HSubset {
        let rows: Vec<usize> = (0..self.d2.len())
            .filter(|&i| self.d2[i] <= self.threshold)
            .collect();
        HSubset::new(rows).expect("h-neighborhood is nonempty")
    }

    /// I(H, a) for the given subset. `f64::INFINITY` signals an exact-fit
    /// candidate (>= h rows on the hyperplane, subset off it).
    pub fn incongruence(&self, subset: &HSubset) -> f64 {
        let mut sum = 0.0;
        for &i in subset.rows() {
            sum += self.d2[i];
        }
        let num = sum / subset.len() as f64;
        if self.denominator_is_zero() {
            if num <= self.tol_zero {
                return 0.0; // log(0/0) convention
            }
            return f64::INFINITY;
        }
        // denominator averages the h smallest distances, so the true ratio
        // is >= 1; clamp rounding noise
        (num / self.neighborhood_mean).ln().max(0.0)
    }
}

/// H^a for a single direction (Eq. 2 semantics, ties included).
pub fn h_neighborhood(data: &Dataset, dir: &Direction, h: usize, tol: &Tolerances) -> HSubset {
    DistanceProfile::compute(data, dir, h, tol).h_neighborhood()
}

/// I(H, a) for a single direction.
pub fn incongruence_along(
    data: &Dataset,
    subset: &HSubset,
    dir: &Direction,
    h: usize,
    tol: &Tolerances,
) -> f64 {
    DistanceProfile::compute(data, dir, h, tol).incongruence(subset)
}

/// Per-direction incongruence values plus their aggregate.
#[derive(Debug, Clone)]
pub struct IncongruenceReport {
    pub subset: HSubset,
    pub per_direction: Vec<(Direction, f64)>,
    /// Mean of per-direction values; +inf when any direction hit the
    /// exact-fit sentinel.
    pub aggregate: f64,
    /// First direction that exposed >= h zero-distance rows, if any.
    pub exact_fit: Option<Direction>,
    pub degenerate_zero_over_zero: usize,
}

/// Evaluates I(H, a) over a direction set and averages in canonical
/// direction order (Eq. 4).
pub fn incongruence_index(
    data: &Dataset,
    subset: &HSubset,
    dirs: &DirectionSet,
    h: usize,
    tol: &Tolerances,
) -> Result<IncongruenceReport> {
    if dirs.directions.is_empty() {
        return Err(PcsError::Degenerate(
            "incongruence_index over an empty direction set".into(),
        ));
    }
    let mut per_direction = Vec::with_capacity(dirs.directions.len());
    let mut sum = 0.0;
    let mut degenerate = 0usize;
    let mut exact_fit: Option<Direction> = None;
    for dir in &dirs.directions {
        let profile = DistanceProfile::compute(data, dir, h, tol);
        let value = profile.incongruence(subset);
        if profile.denominator_is_zero() && value == 0.0 {
            degenerate += 1;
        }
        if value.is_infinite() && exact_fit.is_none() {
            exact_fit = Some(dir.clone());
        }
        sum += value;
        per_direction.push((dir.clone(), value));
    }
    let aggregate = if exact_fit.is_some() {
        f64::INFINITY
    } else {
        sum / per_direction.len() as f64
    };
    // an all-zero report can still hide an exact fit (whole subset on one
    // hyperplane makes num = den = 0); surface the direction
    if exact_fit.is_none() {
        for (dir, _) in &per_direction {
            let profile = DistanceProfile::compute(data, dir, h, tol);
            if profile.zero_rows.len() >= h {
                exact_fit = Some(dir.clone());
                break;
            }
        }
    }
    Ok(IncongruenceReport {
        subset: subset.clone(),
        per_direction,
        aggregate,
        exact_fit,
        degenerate_zero_over_zero: degenerate,
    })
}

/// If some direction in the report has >= h rows at zero distance, returns
/// the enlarged subset of all rows on that hyperplane.
pub fn detect_exact_fit(
    data: &Dataset,
    report: &IncongruenceReport,
    h: usize,
    tol: &Tolerances,
) -> Option<(Direction, HSubset)> {
    for (dir, _) in &report.per_direction {
        let profile = DistanceProfile::compute(data, dir, h, tol);
        if profile.zero_rows.len() >= h {
            let subset = HSubset::new(profile.zero_rows).expect("nonempty zero set");
            return Some((dir.clone(), subset));
        }
    }
    None
}
