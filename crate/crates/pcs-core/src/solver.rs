use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{next_combination, Dataset, SubsetSize};
use crate::error::{PcsError, Result};
use crate::geometry::{sample_directions_with_rng, Direction};
use crate::incongruence::DistanceProfile;
use crate::subset::HSubset;
use crate::tolerances::{binomial, Caps, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Exact,
    Randomized,
}

/// Randomized-search budget. The search is a documented surrogate for the
/// published FastPCS algorithm: random (p+1)-subset starts extended to
/// h-subsets, refined by neighborhood-membership votes.
#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub n_starts: usize,
    pub n_isteps: usize,
    pub k_directions: usize,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(seed: u64) -> Self {
        SolverConfig {
            n_starts: 500,
            n_isteps: 3,
            k_directions: 250,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_starts < 1 || self.k_directions < 1 {
            return Err(PcsError::Validation(
                "solver config requires n_starts >= 1 and k_directions >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub candidates_evaluated: u64,
    pub directions_per_candidate: u64,
    pub degenerate_starts: u64,
    pub skipped_singular: u64,
}

/// A fitted PCS solution: optimal subset plus its mean and covariance.
#[derive(Debug, Clone)]
pub struct PcsFit {
    pub h_star: HSubset,
    pub location: DVector<f64>,
    pub scatter: DMatrix<f64>,
    pub index_value: f64,
    pub exact_fit: Option<(Direction, HSubset)>,
    pub mode: SolveMode,
    pub seed: Option<u64>,
    pub diagnostics: Diagnostics,
}

/// Sample mean and covariance (population divisor |subset|) over the rows
/// of `subset`.
pub fn estimate(data: &Dataset, subset: &HSubset) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let p = data.p();
    let m = subset.len();
    if m < p + 1 {
        return Err(PcsError::Validation(format!(
            "estimate needs at least p+1 = {} rows, got {}",
            p + 1,
            m
        )));
    }
    let mut mean = DVector::<f64>::zeros(p);
    for &i in subset.rows() {
        mean += data.row(i);
    }
    mean /= m as f64;
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for &i in subset.rows() {
        let d = data.row(i) - &mean;
        cov.syger(1.0 / m as f64, &d, &d, 1.0);
    }
    // syger fills the lower triangle; mirror it
    for r in 0..p {
        for c in (r + 1)..p {
            cov[(r, c)] = cov[(c, r)];
        }
    }
    Ok((mean, cov))
}

/// Mahalanobis distances sqrt((x - t)' S^-1 (x - t)) for every row.
pub fn robust_distances(data: &Dataset, fit: &PcsFit) -> Result<Vec<f64>> {
    let chol = fit.scatter.clone().cholesky().ok_or_else(|| {
        PcsError::Degenerate(
            "scatter is singular; inspect the exact_fit output instead of distances".into(),
        )
    })?;
    Ok(data
        .rows()
        .iter()
        .map(|x| {
            let d = x - &fit.location;
            let y = chol.solve(&d);
            d.dot(&y).max(0.0).sqrt()
        })
        .collect())
}

fn fit_from_subset(
    data: &Dataset,
    subset: HSubset,
    index_value: f64,
    exact_fit: Option<(Direction, HSubset)>,
    mode: SolveMode,
    seed: Option<u64>,
    diagnostics: Diagnostics,
) -> Result<PcsFit> {
    let (location, scatter) = estimate(data, &subset)?;
    Ok(PcsFit {
        h_star: subset,
        location,
        scatter,
        index_value,
        exact_fit,
        mode,
        seed,
        diagnostics,
    })
}

/// Precomputed data for one global p-subset: its direction and distance
/// profile over all n rows.
struct DirEntry {
    dir: Direction,
    profile: DistanceProfile,
}

/// Pascal's triangle up to n, saturating; used for combination ranking.
fn choose_table(n: usize, k: usize) -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; k + 1]; n + 1];
    for i in 0..=n {
        t[i][0] = 1;
        for j in 1..=k.min(i) {
            t[i][j] = t[i - 1][j - 1].saturating_add(t[i - 1][j]);
        }
    }
    t
}

/// Lexicographic rank of a sorted k-combination of {0..n-1}.
fn comb_rank(combo: &[usize], n: usize, table: &[Vec<u64>]) -> usize {
    let k = combo.len();
    let mut rank = 0u64;
    let mut prev = 0usize;
    for (i, &c) in combo.iter().enumerate() {
        for v in prev..c {
            rank += table[n - 1 - v][k - 1 - i];
        }
        prev = c + 1;
    }
    rank as usize
}

/// Exhaustive PCS: evaluates I(H) with full direction enumeration for every
/// h-subset and returns the argmin (lexicographic tie-break). The exact-fit
/// special case supersedes minimization.
pub fn solve_exact(
    data: &Dataset,
    h: &SubsetSize,
    tol: &Tolerances,
    caps: &Caps,
) -> Result<PcsFit> {
    let n = data.n();
    let p = data.p();
    let h = h.h;
    let n_candidates = binomial(n, h);
    if n_candidates > caps.subset_cap {
        return Err(PcsError::CapExceeded(format!(
            "C({}, {}) = {} h-subsets exceeds subset_cap = {}; use solve_randomized",
            n, h, n_candidates, caps.subset_cap
        )));
    }
    if binomial(h, p) > caps.direction_cap {
        return Err(PcsError::CapExceeded(format!(
            "C({}, {}) directions exceeds direction_cap; use solve_randomized",
            h, p
        )));
    }

    // every p-subset of any candidate is a global p-subset: precompute all
    // C(n, p) of them once
    let table = choose_table(n, p.max(1));
    let n_dirs = binomial(n, p) as usize;
    let mut entries: Vec<Option<DirEntry>> = Vec::with_capacity(n_dirs);
    let mut skipped_singular = 0u64;
    {
        let mut combo: Vec<usize> = (0..p).collect();
        loop {
            let pts: Vec<&DVector<f64>> = combo.iter().map(|&i| data.row(i)).collect();
            match crate::geometry::solve_direction(&pts, combo.clone(), tol) {
                Some(dir) => {
                    let profile = DistanceProfile::compute(data, &dir, h, tol);
                    entries.push(Some(DirEntry { dir, profile }));
                }
                None => {
                    skipped_singular += 1;
                    entries.push(None);
                }
            }
            if !next_combination(&mut combo, n) {
                break;
            }
        }
    }
    debug_assert_eq!(entries.len(), n_dirs);

    // exact-fit precedence: any direction with >= h zero-distance rows
    // enlarges H* immediately
    for e in entries.iter().flatten() {
        if e.profile.zero_rows.len() >= h {
            let enlarged = HSubset::new(e.profile.zero_rows.clone())?;
            let diagnostics = Diagnostics {
                candidates_evaluated: 0,
                directions_per_candidate: binomial(h, p).min(u64::MAX as u128) as u64,
                degenerate_starts: 0,
                skipped_singular,
            };
            return fit_from_subset(
                data,
                enlarged.clone(),
                0.0,
                Some((e.dir.clone(), enlarged)),
                SolveMode::Exact,
                None,
                diagnostics,
            );
        }
    }

    // candidates partitioned by their smallest row so branches can run in
    // parallel while the merge stays in lexicographic order
    let best_per_first: Vec<Option<(f64, Vec<usize>)>> = (0..=(n - h))
        .into_par_iter()
        .map(|first| {
            let mut best: Option<(f64, Vec<usize>)> = None;
            let mut candidate = vec![0usize; h];
            candidate[0] = first;
            for (j, c) in candidate.iter_mut().enumerate().skip(1) {
                *c = first + j;
            }
            loop {
                let mut sum = 0.0;
                let mut used = 0usize;
                let mut pcombo: Vec<usize> = (0..p).collect();
                loop {
                    let src: Vec<usize> = pcombo.iter().map(|&k| candidate[k]).collect();
                    if let Some(e) = &entries[comb_rank(&src, n, &table)] {
                        let mut num = 0.0;
                        for &i in &candidate {
                            num += e.profile.d2[i];
                        }
                        num /= h as f64;
                        let val = if e.profile.denominator_is_zero() {
                            // precedence scan above removed true exact fits
                            0.0
                        } else {
                            (num / e.profile.neighborhood_mean).ln().max(0.0)
                        };
                        sum += val;
                        used += 1;
                    }
                    if !next_combination(&mut pcombo, h) {
                        break;
                    }
                }
                if used > 0 {
                    let aggregate = sum / used as f64;
                    if best.as_ref().is_none_or(|(b, _)| aggregate < *b) {
                        best = Some((aggregate, candidate.clone()));
                    }
                }
                // advance within the fixed-first block
                if !next_combination(&mut candidate[1..], n) || candidate[1] <= first {
                    break;
                }
            }
            best
        })
        .collect();

    let mut best: Option<(f64, Vec<usize>)> = None;
    for b in best_per_first.into_iter().flatten() {
        if best.as_ref().is_none_or(|(v, _)| b.0 < *v) {
            best = Some(b);
        }
    }
    let (index_value, rows) = best.ok_or_else(|| {
        PcsError::Degenerate("every candidate had only singular directions".into())
    })?;
    let diagnostics = Diagnostics {
        candidates_evaluated: n_candidates.min(u64::MAX as u128) as u64,
        directions_per_candidate: binomial(h, p).min(u64::MAX as u128) as u64,
        degenerate_starts: 0,
        skipped_singular,
    };
    fit_from_subset(
        data,
        HSubset::new(rows)?,
        index_value,
        None,
        SolveMode::Exact,
        None,
        diagnostics,
    )
}

enum StartOutcome {
    ExactFit(Direction, Vec<usize>),
    Candidate(Vec<usize>, f64),
    Degenerate,
}

/// One randomized start: random (p+1)-seed, distance-based extension to h,
/// vote-based refinement, final index evaluation.
fn run_start(
    data: &Dataset,
    h: usize,
    cfg: &SolverConfig,
    start: usize,
    tol: &Tolerances,
    caps: &Caps,
) -> StartOutcome {
    let n = data.n();
    let p = data.p();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1 + start as u64);

    // seed subset: p+1 distinct rows
    let mut seed_rows: Vec<usize> = Vec::with_capacity(p + 1);
    for j in (n - (p + 1))..n {
        let t = rng.gen_range(0..=j);
        if seed_rows.contains(&t) {
            seed_rows.push(j);
        } else {
            seed_rows.push(t);
        }
    }
    let Ok(mut current) = HSubset::new(seed_rows) else {
        return StartOutcome::Degenerate;
    };

    // extension + refinement. Scores are normalized per direction by the
    // h-th order statistic so rankings survive affine remapping.
    for step in 0..=cfg.n_isteps {
        let dirs = match sample_directions_with_rng(
            data,
            &current,
            cfg.k_directions,
            &mut rng,
            tol,
            caps,
        ) {
            Ok(d) if !d.directions.is_empty() => d,
            _ => return StartOutcome::Degenerate,
        };
        let mut votes = vec![0u32; n];
        let mut score = vec![0.0f64; n];
        for dir in &dirs.directions {
            let profile = DistanceProfile::compute(data, dir, h, tol);
            if profile.zero_rows.len() >= h {
                return StartOutcome::ExactFit(dir.clone(), profile.zero_rows);
            }
            for i in 0..n {
                if profile.d2[i] <= profile.threshold {
                    votes[i] += 1;
                }
                score[i] += profile.d2[i] / profile.threshold;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        if step == 0 {
            // extension from the (p+1)-seed: plain distance ranking
            order.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));
        } else {
            order.sort_by(|&a, &b| {
                votes[b]
                    .cmp(&votes[a])
                    .then(score[a].total_cmp(&score[b]))
                    .then(a.cmp(&b))
            });
        }
        current = HSubset::new(order[..h].to_vec()).expect("h distinct rows");
    }

    // final ranking index with fresh directions
    let dirs = match sample_directions_with_rng(data, &current, cfg.k_directions, &mut rng, tol, caps)
    {
        Ok(d) if !d.directions.is_empty() => d,
        _ => return StartOutcome::Degenerate,
    };
    let mut sum = 0.0;
    for dir in &dirs.directions {
        let profile = DistanceProfile::compute(data, dir, h, tol);
        if profile.zero_rows.len() >= h {
            return StartOutcome::ExactFit(dir.clone(), profile.zero_rows);
        }
        sum += profile.incongruence(&current);
    }
    StartOutcome::Candidate(current.rows().to_vec(), sum / dirs.directions.len() as f64)
}

/// Seeded randomized PCS search. Deterministic given (data, h, cfg): each
/// start owns an RNG stream derived from (seed, start index), so thread
/// scheduling cannot alter draws.
pub fn solve_randomized(
    data: &Dataset,
    h: &SubsetSize,
    cfg: &SolverConfig,
    tol: &Tolerances,
    caps: &Caps,
) -> Result<PcsFit> {
    cfg.validate()?;
    let h = h.h;
    let outcomes: Vec<StartOutcome> = (0..cfg.n_starts)
        .into_par_iter()
        .map(|s| run_start(data, h, cfg, s, tol, caps))
        .collect();

    let mut degenerate = 0u64;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for outcome in outcomes {
        match outcome {
            StartOutcome::ExactFit(dir, zero_rows) => {
                // exact-fit rows take precedence over index minimization
                let enlarged = HSubset::new(zero_rows)?;
                let diagnostics = Diagnostics {
                    candidates_evaluated: cfg.n_starts as u64,
                    directions_per_candidate: cfg.k_directions as u64,
                    degenerate_starts: degenerate,
                    skipped_singular: 0,
                };
                return fit_from_subset(
                    data,
                    enlarged.clone(),
                    0.0,
                    Some((dir, enlarged)),
                    SolveMode::Randomized,
                    Some(cfg.seed),
                    diagnostics,
                );
            }
            StartOutcome::Candidate(rows, value) => {
                let better = match &best {
                    None => true,
                    Some((bv, brows)) => {
                        value < *bv || (value == *bv && rows.as_slice() < brows.as_slice())
                    }
                };
                if better {
                    best = Some((value, rows));
                }
            }
            StartOutcome::Degenerate => degenerate += 1,
        }
    }
    let (index_value, rows) = best.ok_or_else(|| {
        PcsError::Degenerate(format!(
            "all {} randomized starts were degenerate",
            cfg.n_starts
        ))
    })?;
    let diagnostics = Diagnostics {
        candidates_evaluated: cfg.n_starts as u64,
        directions_per_candidate: cfg.k_directions as u64,
        degenerate_starts: degenerate,
        skipped_singular: 0,
    };
    fit_from_subset(
        data,
        HSubset::new(rows)?,
        index_value,
        None,
        SolveMode::Randomized,
        Some(cfg.seed),
        diagnostics,
    )
}

/// Serializable view of a fit, with 1-based indices for user-facing output.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub mode: SolveMode,
    pub n: usize,
    pub p: usize,
    pub h: usize,
    /// 1-based sorted row indices of H*.
    pub h_star: Vec<usize>,
    pub location: Vec<f64>,
    /// Row-major p x p scatter.
    pub scatter: Vec<f64>,
    pub covariance_divisor: String,
    pub index_value: f64,
    pub exact_fit: Option<ExactFitReport>,
    pub breakdown_bound: String,
    pub seed: Option<u64>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactFitReport {
    pub direction: Vec<f64>,
    /// 1-based spanning rows of the exact-fit hyperplane.
    pub source_rows: Vec<usize>,
    /// 1-based rows of the enlarged H*.
    pub enlarged_rows: Vec<usize>,
}

impl PcsFit {
    pub fn report(&self, data: &Dataset, h: &SubsetSize) -> FitReport {
        let bound = crate::dataset::breakdown_bound(data.n(), h.h)
            .map(|b| b.to_string())
            .unwrap_or_default();
        FitReport {
            mode: self.mode,
            n: data.n(),
            p: data.p(),
            h: h.h,
            h_star: self.h_star.one_based(),
            location: self.location.iter().copied().collect(),
            scatter: self.scatter.transpose().as_slice().to_vec(),
            covariance_divisor: "population (1/|H*|)".into(),
            index_value: self.index_value,
            exact_fit: self.exact_fit.as_ref().map(|(dir, enlarged)| ExactFitReport {
                direction: dir.a.iter().copied().collect(),
                source_rows: dir.source_rows.iter().map(|&i| i + 1).collect(),
                enlarged_rows: enlarged.one_based(),
            }),
            breakdown_bound: bound,
            seed: self.seed,
            diagnostics: self.diagnostics.clone(),
        }
    }
}
