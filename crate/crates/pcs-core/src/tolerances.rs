/// Scale-aware numerical tolerances used throughout the pipeline.
///
/// The factors below are multiplied by a data-dependent scale at the point
/// of use (data diameter, squared norms, median squared distance), so a
/// single `Tolerances` value works across datasets of very different
/// magnitudes.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Tolerances {
    /// Duplicate-row test: rows closer than `tol_dup_factor * diameter` are
    /// considered duplicates.
    pub tol_dup_factor: f64,
    /// General-position test: a (p+1)-simplex with volume determinant below
    /// `tol_gp_factor * diameter^p` counts as degenerate.
    pub tol_gp_factor: f64,
    /// Hyperplane fit residual: a solved direction must reproduce
    /// `x'a = 1` within `tol_fit_factor * (1 + ||x||^2)` per spanning point.
    pub tol_fit_factor: f64,
    /// Zero-distance membership for exact-fit detection:
    /// `tol_zero_factor * (1 + median d^2)` per direction.
    pub tol_zero_factor: f64,
    /// Condition-number cap above which a p x p system is declared singular.
    pub cond_cap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_dup_factor: 1e-12,
            tol_gp_factor: 1e-10,
            tol_fit_factor: 1e-8,
            tol_zero_factor: 1e-10,
            cond_cap: 1e12,
        }
    }
}

/// Combinatorial caps guarding exhaustive enumeration.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Caps {
    /// Max number of h-subset candidates for exact mode.
    pub subset_cap: u128,
    /// Max number of directions per exhaustive enumeration.
    pub direction_cap: u128,
    /// Max number of (p+1)-subsets scanned by the general-position check.
    pub gp_cap: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            subset_cap: 200_000,
            direction_cap: 1_000_000,
            gp_cap: 1_000_000,
        }
    }
}

/// Binomial coefficient with saturation, suitable for cap checks.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}
