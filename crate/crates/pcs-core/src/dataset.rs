use std::path::Path;

use nalgebra::DVector;
use num_rational::Ratio;
use rand::seq::index::sample as index_sample;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{PcsError, Result};
use crate::tolerances::{binomial, Caps, Tolerances};

/// Immutable n x p observation matrix. Requires n > p+1 > 2, finite entries
/// and no duplicate rows among the genuine block.
#[derive(Debug, Clone)]
pub struct Dataset {
    rows: Vec<DVector<f64>>,
    n: usize,
    p: usize,
    diameter: f64,
    /// Rows `genuine..n` form a contaminated block exempt from the
    /// duplicate check (outliers may coincide).
    genuine: usize,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, tol: &Tolerances) -> Result<Self> {
        let n = rows.len();
        Self::build(rows, n, tol)
    }

    /// Like [`Dataset::new`] but only the first `genuine` rows are
    /// duplicate-checked; the trailing block may contain repeated outliers.
    pub fn new_with_contaminated_tail(
        rows: Vec<Vec<f64>>,
        genuine: usize,
        tol: &Tolerances,
    ) -> Result<Self> {
        Self::build(rows, genuine, tol)
    }

    fn build(rows: Vec<Vec<f64>>, genuine: usize, tol: &Tolerances) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(PcsError::Validation("empty dataset".into()));
        }
        let p = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(PcsError::Parse {
                    line: i + 1,
                    message: format!("ragged row: expected {} fields, found {}", p, r.len()),
                });
            }
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(PcsError::Validation(format!(
                    "non-finite value at row {}, column {}",
                    i + 1,
                    j + 1
                )));
            }
        }
        if !(p + 1 > 2) {
            return Err(PcsError::Validation(format!(
                "p+1>2 violated: p = {} (need p >= 2)",
                p
            )));
        }
        if !(n > p + 1) {
            return Err(PcsError::Validation(format!(
                "n>p+1 violated: n = {}, p = {}",
                n, p
            )));
        }
        let rows: Vec<DVector<f64>> = rows.into_iter().map(DVector::from_vec).collect();
        let diameter = data_diameter(&rows);
        let tol_dup = tol.tol_dup_factor * diameter;
        let genuine = genuine.min(n);
        for i in 0..genuine {
            for j in (i + 1)..genuine {
                if (&rows[i] - &rows[j]).norm() <= tol_dup {
                    return Err(PcsError::DuplicateRows {
                        row_a: i + 1,
                        row_b: j + 1,
                        tol: tol_dup,
                    });
                }
            }
        }
        Ok(Dataset {
            rows,
            n,
            p,
            diameter,
            genuine,
        })
    }

    /// Parses numeric text, one observation per line. Accepts comma or
    /// whitespace delimiters; `has_header = None` auto-detects a header by
    /// checking whether the first line parses as numbers.
    pub fn from_csv(path: &Path, has_header: Option<bool>, tol: &Tolerances) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PcsError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_csv_str(&text, has_header, tol)
    }

    pub fn from_csv_str(text: &str, has_header: Option<bool>, tol: &Tolerances) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut first_data_line = true;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = if line.contains(',') {
                line.split(',').map(str::trim).collect()
            } else {
                line.split_whitespace().collect()
            };
            let parsed: std::result::Result<Vec<f64>, _> =
                fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(vals) => rows.push(vals),
                Err(e) => {
                    let header_allowed = first_data_line && has_header.unwrap_or(true);
                    if header_allowed && has_header != Some(false) {
                        // header line, skip
                    } else {
                        return Err(PcsError::Parse {
                            line: lineno + 1,
                            message: e.to_string(),
                        });
                    }
                }
            }
            if has_header == Some(true) && first_data_line {
                // explicit header: drop the first line even if numeric
                rows.clear();
            }
            first_data_line = false;
        }
        Self::new(rows, tol)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &DVector<f64> {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[DVector<f64>] {
        &self.rows
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Number of leading rows subject to the duplicate check.
    pub fn genuine_count(&self) -> usize {
        self.genuine
    }

    /// Applies `x -> B x + b` to every row. The contaminated-tail marker is
    /// preserved.
    pub fn affine_map(&self, b_mat: &nalgebra::DMatrix<f64>, b_vec: &DVector<f64>) -> Dataset {
        let rows: Vec<DVector<f64>> = self.rows.iter().map(|x| b_mat * x + b_vec).collect();
        let diameter = data_diameter(&rows);
        Dataset {
            rows,
            n: self.n,
            p: self.p,
            diameter,
            genuine: self.genuine,
        }
    }
}

fn data_diameter(rows: &[DVector<f64>]) -> f64 {
    // bounding-box diagonal: cheap O(np) stand-in for the exact diameter
    let p = rows[0].len();
    let mut lo = vec![f64::INFINITY; p];
    let mut hi = vec![f64::NEG_INFINITY; p];
    for r in rows {
        for j in 0..p {
            lo[j] = lo[j].min(r[j]);
            hi[j] = hi[j].max(r[j]);
        }
    }
    let mut d2 = 0.0;
    for j in 0..p {
        let e = hi[j] - lo[j];
        d2 += e * e;
    }
    d2.sqrt().max(f64::MIN_POSITIVE)
}

/// Subset cardinality h with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SubsetSize {
    pub h: usize,
    pub n: usize,
    pub p: usize,
}

/// h = ceil((n+p+1)/2), the default PCS subset size.
pub fn default_h(n: usize, p: usize) -> Result<SubsetSize> {
    if !(p + 1 > 2 && n > p + 1) {
        return Err(PcsError::Validation(format!(
            "default_h requires n>p+1>2, got n = {}, p = {}",
            n, p
        )));
    }
    let h = (n + p + 1).div_ceil(2);
    Ok(SubsetSize { h, n, p })
}

impl SubsetSize {
    /// User override; must satisfy p+1 <= h <= n.
    pub fn with_override(n: usize, p: usize, h: usize) -> Result<Self> {
        if !(p + 1 > 2 && n > p + 1) {
            return Err(PcsError::Validation(format!(
                "subset size requires n>p+1>2, got n = {}, p = {}",
                n, p
            )));
        }
        if h < p + 1 || h > n {
            return Err(PcsError::Validation(format!(
                "h override must satisfy p+1 <= h <= n, got h = {} (n = {}, p = {})",
                h, n, p
            )));
        }
        Ok(SubsetSize { h, n, p })
    }
}

/// Donoho upper bound (n-h+1)/n on the finite sample breakdown point,
/// as an exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BreakdownBound {
    pub ratio: Ratio<u64>,
}

impl BreakdownBound {
    pub fn as_f64(&self) -> f64 {
        *self.ratio.numer() as f64 / *self.ratio.denom() as f64
    }
}

impl std::fmt::Display for BreakdownBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.ratio.numer(), self.ratio.denom())
    }
}

pub fn breakdown_bound(n: usize, h: usize) -> Result<BreakdownBound> {
    if h > n || h == 0 {
        return Err(PcsError::Validation(format!(
            "breakdown_bound requires 1 <= h <= n, got h = {}, n = {}",
            h, n
        )));
    }
    Ok(BreakdownBound {
        ratio: Ratio::new((n - h + 1) as u64, n as u64),
    })
}

/// Outcome of the general-position scan (Definition: no p+1 points in a
/// common (p-1)-dimensional affine subspace).
#[derive(Debug, Clone, serde::Serialize)]
pub struct GeneralPositionReport {
    pub in_general_position: bool,
    /// 0-based row indices of a degenerate (p+1)-subset, when found.
    pub witness: Option<Vec<usize>>,
    pub tol_gp: f64,
    /// False when the subset count exceeded the cap and only a seeded
    /// sample of subsets was scanned.
    pub exhaustive: bool,
    pub subsets_checked: u64,
}

/// Scans (p+1)-subsets for degenerate simplices. Exhaustive when
/// C(n, p+1) fits under `caps.gp_cap`; otherwise requires
/// `allow_sampling` and returns a partial verdict.
pub fn check_general_position(
    data: &Dataset,
    tol: &Tolerances,
    caps: &Caps,
    allow_sampling: bool,
    seed: u64,
) -> Result<GeneralPositionReport> {
    let n = data.n();
    let p = data.p();
    let tol_gp = tol.tol_gp_factor * data.diameter().powi(p as i32);
    let total = binomial(n, p + 1);
    let exhaustive = total <= caps.gp_cap;
    if !exhaustive && !allow_sampling {
        return Err(PcsError::CapExceeded(format!(
            "C({}, {}) = {} exceeds gp_cap = {}; pass allow_sampling for a partial verdict",
            n,
            p + 1,
            total,
            caps.gp_cap
        )));
    }

    let degenerate = |combo: &[usize]| -> bool {
        // volume of the simplex spanned by the p+1 points, via the
        // determinant of edge vectors from the first point
        let base = data.row(combo[0]);
        let mut m = nalgebra::DMatrix::<f64>::zeros(p, p);
        for (k, &idx) in combo[1..].iter().enumerate() {
            let e = data.row(idx) - base;
            m.set_column(k, &e);
        }
        m.determinant().abs() <= tol_gp
    };

    let mut checked: u64 = 0;
    if exhaustive {
        let mut combo: Vec<usize> = (0..=p).collect();
        loop {
            checked += 1;
            if degenerate(&combo) {
                return Ok(GeneralPositionReport {
                    in_general_position: false,
                    witness: Some(combo),
                    tol_gp,
                    exhaustive,
                    subsets_checked: checked,
                });
            }
            if !next_combination(&mut combo, n) {
                break;
            }
        }
    } else {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let budget = caps.gp_cap.min(u64::MAX as u128) as u64;
        for _ in 0..budget {
            let mut combo: Vec<usize> = index_sample(&mut rng, n, p + 1).into_vec();
            combo.sort_unstable();
            checked += 1;
            if degenerate(&combo) {
                return Ok(GeneralPositionReport {
                    in_general_position: false,
                    witness: Some(combo),
                    tol_gp,
                    exhaustive,
                    subsets_checked: checked,
                });
            }
        }
    }
    Ok(GeneralPositionReport {
        in_general_position: true,
        witness: None,
        tol_gp,
        exhaustive,
        subsets_checked: checked,
    })
}

/// Advances `combo` to the next k-combination of {0..n-1} in lexicographic
/// order. Returns false when exhausted.
pub fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
