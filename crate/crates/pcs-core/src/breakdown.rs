//! Contamination sweeps probing the estimator's breakdown behavior, plus
//! the affine-equivariance trial harness.

use nalgebra::{DMatrix, DVector};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::dataset::{breakdown_bound, BreakdownBound, Dataset, SubsetSize};
use crate::error::{PcsError, Result};
use crate::fixtures::normal;
use crate::solver::{solve_exact, solve_randomized, PcsFit, SolveMode, SolverConfig};
use crate::subset::HSubset;
use crate::tolerances::{Caps, Tolerances};

/// How the contaminated block is placed.
#[derive(Debug, Clone)]
pub enum Placement {
    /// c copies of the same far-away point.
    PointMass,
    /// Point mass with relative jitter, preserving general position of the
    /// outlier block.
    PointMassJitter { jitter_scale: f64 },
    /// Verbatim replacement rows.
    Custom(Vec<Vec<f64>>),
}

/// Replacement plan for the last `c` rows of a dataset.
#[derive(Debug, Clone)]
pub struct ContaminationSpec {
    pub c: usize,
    pub placement: Placement,
    /// Outlier displacement magnitude L (ignored for custom rows).
    pub distance: f64,
    /// Unit displacement direction; `None` draws one from the seed.
    pub direction: Option<DVector<f64>>,
}

impl ContaminationSpec {
    pub fn point_mass(c: usize, distance: f64, direction: Option<DVector<f64>>) -> Self {
        ContaminationSpec {
            c,
            placement: Placement::PointMass,
            distance,
            direction,
        }
    }
}

/// Replaces the last `c` rows with contamination. The first n-c rows are kept
/// bit-exactly; the replaced block is exempt from duplicate checking.
pub fn contaminate(data: &Dataset, spec: &ContaminationSpec, seed: u64) -> Result<Dataset> {
    let n = data.n();
    let p = data.p();
    if spec.c >= n {
        return Err(PcsError::Validation(format!(
            "contamination count c = {} must be < n = {}",
            spec.c, n
        )));
    }
    if spec.c == 0 {
        return Ok(data.clone());
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let direction: DVector<f64> = match &spec.direction {
        Some(u) => {
            let norm = u.norm();
            if !(norm > 0.0) {
                return Err(PcsError::Validation("zero contamination direction".into()));
            }
            u / norm
        }
        None => {
            let mut v = DVector::from_fn(p, |_, _| normal(&mut rng));
            while v.norm() < 1e-6 {
                v = DVector::from_fn(p, |_, _| normal(&mut rng));
            }
            let norm = v.norm();
            v / norm
        }
    };
    let genuine = n - spec.c;
    let mut rows: Vec<Vec<f64>> = data.rows()[..genuine]
        .iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    match &spec.placement {
        Placement::PointMass => {
            let target = &direction * spec.distance;
            for _ in 0..spec.c {
                rows.push(target.iter().copied().collect());
            }
        }
        Placement::PointMassJitter { jitter_scale } => {
            let target = &direction * spec.distance;
            let scale = jitter_scale * spec.distance.abs().max(data.diameter());
            for _ in 0..spec.c {
                let jittered: Vec<f64> =
                    target.iter().map(|v| v + scale * normal(&mut rng)).collect();
                rows.push(jittered);
            }
        }
        Placement::Custom(custom) => {
            if custom.len() != spec.c {
                return Err(PcsError::Validation(format!(
                    "custom placement has {} rows, expected c = {}",
                    custom.len(),
                    spec.c
                )));
            }
            for r in custom {
                if r.len() != p {
                    return Err(PcsError::Validation(
                        "custom contamination row has wrong dimension".into(),
                    ));
                }
                rows.push(r.clone());
            }
        }
    }
    Dataset::new_with_contaminated_tail(rows, genuine, &Tolerances::default())
}

/// ||t(X^eps) - t(X)||.
pub fn bias_location(fit_clean: &PcsFit, fit_contam: &PcsFit) -> f64 {
    (&fit_contam.location - &fit_clean.location).norm()
}

/// Condition number of Q = S(X)^{-1/2} S(X^eps) S(X)^{-1/2}. Returns the
/// +inf sentinel when the contaminated scatter is (numerically) singular.
pub fn bias_scatter(fit_clean: &PcsFit, fit_contam: &PcsFit) -> Result<f64> {
    let p = fit_clean.scatter.nrows();
    let eig = fit_clean.scatter.clone().symmetric_eigen();
    let lam_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let lam_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if !(lam_min > lam_max * 1e-14) || lam_max <= 0.0 {
        return Err(PcsError::Degenerate(
            "clean scatter is singular; scatter bias undefined".into(),
        ));
    }
    let mut inv_sqrt = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        let col = eig.eigenvectors.column(j);
        let w = 1.0 / eig.eigenvalues[j].sqrt();
        inv_sqrt.syger(w, &col, &col, 1.0);
    }
    for r in 0..p {
        for c in (r + 1)..p {
            inv_sqrt[(r, c)] = inv_sqrt[(c, r)];
        }
    }
    let q = &inv_sqrt * &fit_contam.scatter * &inv_sqrt;
    let q_eig = q.symmetric_eigenvalues();
    let q_min = q_eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let q_max = q_eig.iter().cloned().fold(0.0f64, f64::max);
    if !(q_min > q_max * 1e-14) || q_max <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((q_max / q_min).max(1.0))
}

/// One (c, L) sweep cell.
#[derive(Debug, Clone, Serialize)]
pub struct BiasRecord {
    pub c: usize,
    pub epsilon: f64,
    pub distance: f64,
    pub location_bias: f64,
    pub scatter_bias: f64,
    /// Contaminated rows that made it into H*.
    pub h_star_outlier_count: usize,
    /// Worst-case per-fit bounds, recorded for diagnostics.
    pub location_norm: f64,
    pub max_row_norm_in_h_star: f64,
    pub scatter_lambda_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BreakdownEstimate {
    /// Smallest tested c/n at which bias diverged, if any.
    pub empirical_breakdown: Option<f64>,
    pub empirical_c: Option<usize>,
    pub theoretical: String,
    pub theoretical_value: f64,
    /// "location", "scatter" or "both".
    pub diverged_on: Option<String>,
    pub max_c_tested: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub records: Vec<BiasRecord>,
    pub estimate: BreakdownEstimate,
}

/// Sweep settings beyond the raw grids.
#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub mode: SolveMode,
    pub solver: SolverConfig,
    /// Ratio of last-to-first location bias across the L grid that counts
    /// as divergence.
    pub growth_threshold: f64,
    pub direction: Option<DVector<f64>>,
    pub jitter_scale: f64,
    pub seed: u64,
}

impl SweepSettings {
    pub fn exact(seed: u64) -> Self {
        SweepSettings {
            mode: SolveMode::Exact,
            solver: SolverConfig::new(seed),
            growth_threshold: 10.0,
            direction: None,
            jitter_scale: 0.0,
            seed,
        }
    }
}

fn solve(
    data: &Dataset,
    h: &SubsetSize,
    settings: &SweepSettings,
    tol: &Tolerances,
    caps: &Caps,
) -> Result<PcsFit> {
    match settings.mode {
        SolveMode::Exact => solve_exact(data, h, tol, caps),
        SolveMode::Randomized => solve_randomized(data, h, &settings.solver, tol, caps),
    }
}

/// Contaminates, fits and records biases over the (c, L) grid, then applies
/// the ratio test for divergence. The sweep is a lower-bound probe: failure
/// to diverge under this placement menu does not contradict the theory.
pub fn breakdown_sweep(
    data: &Dataset,
    h: &SubsetSize,
    l_grid: &[f64],
    c_range: &[usize],
    settings: &SweepSettings,
    tol: &Tolerances,
    caps: &Caps,
) -> Result<SweepOutcome> {
    if l_grid.is_empty() || c_range.is_empty() {
        return Err(PcsError::Validation("empty L grid or c range".into()));
    }
    let n = data.n();
    let fit_clean = solve(data, h, settings, tol, caps)?;
    let theoretical: BreakdownBound = breakdown_bound(n, h.h)?;

    let mut records = Vec::new();
    let mut empirical: Option<(usize, String)> = None;
    let mut c_sorted = c_range.to_vec();
    c_sorted.sort_unstable();
    let mut l_sorted = l_grid.to_vec();
    l_sorted.sort_by(f64::total_cmp);

    for &c in &c_sorted {
        let mut loc_biases = Vec::with_capacity(l_sorted.len());
        let mut scatter_hit_sentinel = false;
        for &distance in &l_sorted {
            let placement = if settings.jitter_scale > 0.0 {
                Placement::PointMassJitter {
                    jitter_scale: settings.jitter_scale,
                }
            } else {
                Placement::PointMass
            };
            let spec = ContaminationSpec {
                c,
                placement,
                distance,
                direction: settings.direction.clone(),
            };
            let contaminated = contaminate(data, &spec, settings.seed ^ (c as u64) << 8)?;
            let fit = solve(&contaminated, h, settings, tol, caps)?;
            let location_bias = bias_location(&fit_clean, &fit);
            let scatter_bias = match bias_scatter(&fit_clean, &fit) {
                Ok(v) => v,
                Err(_) => f64::INFINITY,
            };
            if scatter_bias.is_infinite() {
                scatter_hit_sentinel = true;
            }
            let h_star_outlier_count =
                fit.h_star.rows().iter().filter(|&&i| i >= n - c).count();
            let max_row_norm_in_h_star = fit
                .h_star
                .rows()
                .iter()
                .map(|&i| contaminated.row(i).norm())
                .fold(0.0, f64::max);
            let scatter_lambda_max = fit.scatter.symmetric_eigenvalues().max();
            loc_biases.push(location_bias);
            records.push(BiasRecord {
                c,
                epsilon: c as f64 / n as f64,
                distance,
                location_bias,
                scatter_bias,
                h_star_outlier_count,
                location_norm: fit.location.norm(),
                max_row_norm_in_h_star,
                scatter_lambda_max,
            });
        }
        if empirical.is_none() && c > 0 {
            let first = loc_biases.first().copied().unwrap_or(0.0);
            let last = loc_biases.last().copied().unwrap_or(0.0);
            let floor = 1e-12 * data.diameter();
            let location_diverged = if l_sorted.len() > 1 {
                last >= settings.growth_threshold * first.max(floor)
                    && last > data.diameter() * settings.growth_threshold
            } else {
                false
            };
            let metric = match (location_diverged, scatter_hit_sentinel) {
                (true, true) => Some("both"),
                (true, false) => Some("location"),
                (false, true) => Some("scatter"),
                (false, false) => None,
            };
            if let Some(m) = metric {
                empirical = Some((c, m.to_string()));
            }
        }
    }

    let estimate = BreakdownEstimate {
        empirical_breakdown: empirical.as_ref().map(|(c, _)| *c as f64 / n as f64),
        empirical_c: empirical.as_ref().map(|(c, _)| *c),
        theoretical: theoretical.to_string(),
        theoretical_value: theoretical.as_f64(),
        diverged_on: empirical.map(|(_, m)| m),
        max_c_tested: c_sorted.last().copied().unwrap_or(0),
    };
    Ok(SweepOutcome { records, estimate })
}

/// Result of one affine-equivariance trial.
#[derive(Debug, Clone, Serialize)]
pub struct EquivarianceReport {
    pub h_star_equal: bool,
    pub location_error: f64,
    pub scatter_error: f64,
    pub b_condition: f64,
    pub pass: bool,
}

/// Samples a nonsingular B (condition capped at 1e4) and offset b, fits the
/// original and mapped data with matched direction streams, and checks the
/// transformation laws at 1e-8 relative tolerance.
pub fn equivariance_trial(
    data: &Dataset,
    h: &SubsetSize,
    settings: &SweepSettings,
    seed: u64,
    tol: &Tolerances,
    caps: &Caps,
) -> Result<EquivarianceReport> {
    let p = data.p();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let (b_mat, b_cond) = loop {
        let m = DMatrix::<f64>::from_fn(p, p, |_, _| normal(&mut rng));
        let svd = m.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin > 0.0 && smax / smin <= 1e4 {
            break (m, smax / smin);
        }
    };
    let b_vec = DVector::<f64>::from_fn(p, |_, _| 5.0 * normal(&mut rng));
    equivariance_check(data, h, settings, &b_mat, &b_vec, b_cond, tol, caps)
}

/// Equivariance check for a caller-supplied transform.
#[allow(clippy::too_many_arguments)]
pub fn equivariance_check(
    data: &Dataset,
    h: &SubsetSize,
    settings: &SweepSettings,
    b_mat: &DMatrix<f64>,
    b_vec: &DVector<f64>,
    b_cond: f64,
    tol: &Tolerances,
    caps: &Caps,
) -> Result<EquivarianceReport> {
    let mapped = data.affine_map(b_mat, b_vec);
    let fit_x = solve(data, h, settings, tol, caps)?;
    let fit_y = solve(&mapped, h, settings, tol, caps)?;

    let h_star_equal = fit_x.h_star == fit_y.h_star;
    let t_expected = b_mat * &fit_x.location + b_vec;
    let location_error =
        (&fit_y.location - &t_expected).norm() / (1.0 + fit_y.location.norm());
    let s_expected = b_mat * &fit_x.scatter * b_mat.transpose();
    let scatter_error = (&fit_y.scatter - &s_expected).norm() / (1.0 + fit_y.scatter.norm());
    let pass = h_star_equal && location_error <= 1e-8 && scatter_error <= 1e-8;
    Ok(EquivarianceReport {
        h_star_equal,
        location_error,
        scatter_error,
        b_condition: b_cond,
        pass,
    })
}

/// Per-fit proof-step bounds: ||t*|| <= max ||x_i|| over H* and
/// lambda_1(S*) <= max ||x_i||^2 over H*.
pub fn fit_bounds(data: &Dataset, fit: &PcsFit) -> (bool, bool) {
    let max_norm = fit
        .h_star
        .rows()
        .iter()
        .map(|&i| data.row(i).norm())
        .fold(0.0, f64::max);
    let lam_max = fit.scatter.symmetric_eigenvalues().max();
    let slack = 1.0 + 1e-12;
    (
        fit.location.norm() <= max_norm * slack,
        lam_max <= max_norm * max_norm * slack,
    )
}

/// Rows of H* that fall in the contaminated tail (0-based cutoff).
pub fn outliers_in(h_star: &HSubset, first_outlier_row: usize) -> usize {
    h_star.rows().iter().filter(|&&i| i >= first_outlier_row).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::default_h;
    use crate::fixtures::gaussian_cloud;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn caps() -> Caps {
        Caps::default()
    }

    #[test]
    fn contaminate_zero_is_identity() {
        let data = gaussian_cloud(10, 2, 1);
        let spec = ContaminationSpec::point_mass(0, 1e6, None);
        let out = contaminate(&data, &spec, 9).unwrap();
        for i in 0..10 {
            assert_eq!(data.row(i), out.row(i));
        }
    }

    #[test]
    fn contaminate_point_mass_placement() {
        let data = gaussian_cloud(20, 2, 2);
        let spec = ContaminationSpec::point_mass(
            3,
            1e6,
            Some(DVector::from_row_slice(&[1.0, 0.0])),
        );
        let out = contaminate(&data, &spec, 9).unwrap();
        for i in 0..17 {
            assert_eq!(data.row(i).as_slice(), out.row(i).as_slice());
        }
        for i in 17..20 {
            assert_eq!(out.row(i).as_slice(), &[1e6, 0.0]);
        }
    }

    #[test]
    fn contaminate_custom_rows_verbatim() {
        let data = gaussian_cloud(10, 2, 3);
        let custom = vec![vec![7.0, 8.0], vec![7.0, 8.0]];
        let spec = ContaminationSpec {
            c: 2,
            placement: Placement::Custom(custom.clone()),
            distance: 0.0,
            direction: None,
        };
        let out = contaminate(&data, &spec, 0).unwrap();
        assert_eq!(out.row(8).as_slice(), custom[0].as_slice());
        assert_eq!(out.row(9).as_slice(), custom[1].as_slice());
    }

    #[test]
    fn contaminate_rejects_c_ge_n() {
        let data = gaussian_cloud(10, 2, 3);
        let spec = ContaminationSpec::point_mass(10, 1.0, None);
        assert!(contaminate(&data, &spec, 0).is_err());
    }

    #[test]
    fn bias_location_examples() {
        let data = gaussian_cloud(10, 2, 4);
        let h = default_h(10, 2).unwrap();
        let fit = solve_exact(&data, &h, &tol(), &caps()).unwrap();
        assert_eq!(bias_location(&fit, &fit), 0.0);
        let mut shifted = fit.clone();
        shifted.location[0] += 3.0;
        shifted.location[1] += 4.0;
        assert!((bias_location(&fit, &shifted) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn bias_scatter_identity_and_diag() {
        let data = gaussian_cloud(10, 2, 4);
        let h = default_h(10, 2).unwrap();
        let mut a = solve_exact(&data, &h, &tol(), &caps()).unwrap();
        a.scatter = DMatrix::identity(2, 2);
        let mut b = a.clone();
        assert!((bias_scatter(&a, &b).unwrap() - 1.0).abs() <= 1e-12);
        b.scatter = DMatrix::from_diagonal(&DVector::from_row_slice(&[4.0, 1.0]));
        assert!((bias_scatter(&a, &b).unwrap() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn bias_scatter_self_is_one() {
        let data = gaussian_cloud(14, 3, 8);
        let h = default_h(14, 3).unwrap();
        let fit = solve_exact(&data, &h, &tol(), &caps()).unwrap();
        assert!((bias_scatter(&fit, &fit).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn bias_scatter_singular_contaminated_is_sentinel() {
        let data = gaussian_cloud(10, 2, 4);
        let h = default_h(10, 2).unwrap();
        let fit = solve_exact(&data, &h, &tol(), &caps()).unwrap();
        let mut sing = fit.clone();
        sing.scatter = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 0.0]));
        assert!(bias_scatter(&fit, &sing).unwrap().is_infinite());
    }

    #[test]
    fn equivariance_identity_is_trivial() {
        let data = gaussian_cloud(12, 2, 6);
        let h = default_h(12, 2).unwrap();
        let settings = SweepSettings::exact(0);
        let r = equivariance_check(
            &data,
            &h,
            &settings,
            &DMatrix::identity(2, 2),
            &DVector::zeros(2),
            1.0,
            &tol(),
            &caps(),
        )
        .unwrap();
        assert!(r.pass);
        assert_eq!(r.location_error, 0.0);
    }

    #[test]
    fn equivariance_diag_shift() {
        let data = gaussian_cloud(12, 2, 6);
        let h = default_h(12, 2).unwrap();
        let settings = SweepSettings::exact(0);
        let b = DMatrix::from_diagonal(&DVector::from_row_slice(&[2.0, 1.0]));
        let r = equivariance_check(
            &data,
            &h,
            &settings,
            &b,
            &DVector::from_row_slice(&[5.0, -3.0]),
            2.0,
            &tol(),
            &caps(),
        )
        .unwrap();
        assert!(r.pass, "diag/shift trial failed: {:?}", r);
    }

    #[test]
    fn sweep_c_zero_reports_no_divergence() {
        let data = gaussian_cloud(12, 2, 10);
        let h = default_h(12, 2).unwrap();
        let settings = SweepSettings::exact(3);
        let out = breakdown_sweep(
            &data,
            &h,
            &[1e3, 1e6],
            &[0],
            &settings,
            &tol(),
            &caps(),
        )
        .unwrap();
        assert!(out.estimate.empirical_breakdown.is_none());
        assert!(out
            .records
            .iter()
            .all(|r| r.location_bias == 0.0 && r.h_star_outlier_count == 0));
    }
}
