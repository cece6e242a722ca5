//! Acceptance suite: one test per criterion, each printing a pass line.
//! Run with `cargo test -p pcs-core --test acceptance`.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use pcs_core::{
    binomial, breakdown_bound, breakdown_sweep, check_general_position, default_h,
    enumerate_directions, equivariance_trial, fixtures, incongruence_index, solve_exact,
    solve_randomized, Caps, HSubset, SolveMode, SolverConfig, SweepSettings,
    Tolerances,
};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn caps() -> Caps {
    Caps::default()
}

#[test]
fn criterion_1_formula_reproduction() {
    assert_eq!(default_h(100, 2).unwrap().h, 52);
    assert_eq!(breakdown_bound(100, 52).unwrap().to_string(), "49/100");
    assert_eq!(default_h(20, 2).unwrap().h, 12);
    assert_eq!(breakdown_bound(20, 12).unwrap().to_string(), "9/20");
    println!("PASS criterion 1: h(100,2)=52 bound 49/100; h(20,2)=12 bound 9/20 (exact)");
}

/// Saturating-budget randomized solve must agree with exhaustive search.
fn oracle_pair(seed: u64, n: usize) -> (String, bool) {
    let data = fixtures::gaussian_cloud(n, 2, seed);
    let h = default_h(n, 2).unwrap();
    let exact = solve_exact(&data, &h, &tol(), &caps()).unwrap();
    let cfg = SolverConfig {
        n_starts: 300,
        n_isteps: 3,
        k_directions: 4000, // >= C(h, 2) for n <= 8: saturates to enumeration
        seed: seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1),
    };
    let rand = solve_randomized(&data, &h, &cfg, &tol(), &caps()).unwrap();
    let ok = rand.h_star == exact.h_star
        && (rand.index_value - exact.index_value).abs() <= 1e-12;
    (
        format!(
            "seed {} n {}: exact I={:.6e} rand I={:.6e} same_hstar={}",
            seed,
            n,
            exact.index_value,
            rand.index_value,
            rand.h_star == exact.h_star
        ),
        ok,
    )
}

#[test]
fn criterion_2_oracle_equivalence() {
    let mut failures = Vec::new();
    let mut count = 0;
    for (i, &n) in [6usize, 7, 8].iter().cycle().take(20).enumerate() {
        let (desc, ok) = oracle_pair(1000 + i as u64, n);
        if !ok {
            failures.push(desc);
        }
        count += 1;
    }
    assert!(
        failures.is_empty(),
        "oracle mismatches on {}/{} instances:\n{}",
        failures.len(),
        count,
        failures.join("\n")
    );
    println!("PASS criterion 2: randomized == exact (index within 1e-12, identical H*) on 20 seeded instances");
}

#[test]
fn criterion_3_nonnegativity() {
    let mut rng = ChaCha12Rng::seed_from_u64(33);
    let mut evaluations = 0usize;
    while evaluations < 10_000 {
        let n = rng.gen_range(8..20);
        let data = fixtures::gaussian_cloud(n, 2, rng.gen());
        let h = default_h(n, 2).unwrap();
        // random h-subset
        let mut rows: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            rows.swap(i, rng.gen_range(0..=i));
        }
        let subset = HSubset::new(rows[..h.h].to_vec()).unwrap();
        let dirs = pcs_core::sample_directions(
            &data,
            &subset,
            25.min(binomial(h.h, 2) as usize),
            rng.gen(),
            &tol(),
            &caps(),
        )
        .unwrap();
        for dir in &dirs.directions {
            let v = pcs_core::incongruence_along(&data, &subset, dir, h.h, &tol());
            assert!(v >= 0.0, "negative incongruence {}", v);
            evaluations += 1;
        }
    }
    // zero attained when the subset equals H^a
    let data = fixtures::gaussian_cloud(12, 2, 4);
    let h = default_h(12, 2).unwrap();
    let seed_subset = HSubset::new((0..h.h).collect()).unwrap();
    let dirs = enumerate_directions(&data, &seed_subset, &tol(), &caps()).unwrap();
    let dir = &dirs.directions[0];
    let ha = pcs_core::h_neighborhood(&data, dir, h.h, &tol());
    let v = pcs_core::incongruence_along(&data, &ha, dir, h.h, &tol());
    assert_eq!(v, 0.0, "I(H^a, a) must be exactly 0");
    println!(
        "PASS criterion 3: {} random I(H,a) evaluations all >= 0; I(H^a,a) = 0 attained",
        evaluations
    );
}

#[test]
fn criterion_4_affine_equivariance() {
    let mut trial = 0u64;
    let mut done = 0;
    for &(n, p) in &[(15usize, 2usize), (15, 3), (30, 2), (30, 3)] {
        let data = fixtures::gaussian_cloud(n, p, 7000 + n as u64 + p as u64);
        let h = default_h(n, p).unwrap();
        let settings = if n <= 15 {
            SweepSettings::exact(0)
        } else {
            SweepSettings {
                mode: SolveMode::Randomized,
                solver: SolverConfig {
                    n_starts: 120,
                    n_isteps: 2,
                    k_directions: 150,
                    seed: 99,
                },
                growth_threshold: 10.0,
                direction: None,
                jitter_scale: 0.0,
                seed: 99,
            }
        };
        // 13 trials per (n, p) cell: 52 total, >= 50 required
        for t in 0..13 {
            trial += 1;
            let r = equivariance_trial(&data, &h, &settings, 31 * trial + t, &tol(), &caps())
                .unwrap();
            assert!(
                r.pass,
                "equivariance trial failed (n={} p={} trial={}): h_star_equal={} loc_err={:.3e} scat_err={:.3e}",
                n, p, t, r.h_star_equal, r.location_error, r.scatter_error
            );
            done += 1;
        }
    }
    println!(
        "PASS criterion 4: {} affine-equivariance trials passed at 1e-8 relative tolerance",
        done
    );
}

fn bounded_side_fixture() -> pcs_core::Dataset {
    let data = fixtures::gaussian_cloud(20, 2, 505);
    let gp = check_general_position(&data, &tol(), &caps(), false, 0).unwrap();
    assert!(gp.in_general_position, "fixture must be in general position");
    data
}

#[test]
fn criterion_5_bounded_side_breakdown() {
    let data = bounded_side_fixture();
    let h = default_h(20, 2).unwrap();
    assert_eq!(h.h, 12);
    let settings = SweepSettings {
        direction: Some(DVector::from_row_slice(&[1.0, 0.0])),
        ..SweepSettings::exact(17)
    };
    let c_range: Vec<usize> = (1..=8).collect();
    let out = breakdown_sweep(
        &data,
        &h,
        &[1e3, 1e6, 1e9],
        &c_range,
        &settings,
        &tol(),
        &caps(),
    )
    .unwrap();
    assert!(
        out.estimate.empirical_breakdown.is_none(),
        "no divergence expected for c <= n-h, got {:?}",
        out.estimate
    );
    for r in &out.records {
        // location-norm bound and scatter-eigenvalue bound, per fit
        let slack = 1.0 + 1e-12;
        assert!(
            r.location_norm <= r.max_row_norm_in_h_star * slack,
            "||t*|| bound violated at c={} L={}: {} > {}",
            r.c,
            r.distance,
            r.location_norm,
            r.max_row_norm_in_h_star
        );
        assert!(
            r.scatter_lambda_max <= r.max_row_norm_in_h_star.powi(2) * slack,
            "lambda_1 bound violated at c={} L={}",
            r.c,
            r.distance
        );
    }
    // location bias must not depend on L once outliers are excluded
    for c in 1..=8usize {
        let biases: Vec<f64> = out
            .records
            .iter()
            .filter(|r| r.c == c)
            .map(|r| r.location_bias)
            .collect();
        let spread = biases.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - biases.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(
            spread <= 1e-6,
            "location bias varies by {:.3e} across L grid at c={}",
            spread,
            c
        );
    }
    println!("PASS criterion 5: c in 1..=8, L in {{1e3,1e6,1e9}}: bounds hold, bias L-invariant (<= 1e-6)");
}

#[test]
fn criterion_6_breakdown_side_divergence() {
    let data = bounded_side_fixture();
    let h = default_h(20, 2).unwrap();
    let settings = SweepSettings {
        direction: Some(DVector::from_row_slice(&[1.0, 0.0])),
        ..SweepSettings::exact(17)
    };
    let out = breakdown_sweep(&data, &h, &[1e3, 1e6, 1e9], &[9], &settings, &tol(), &caps())
        .unwrap();
    let bias_at = |l: f64| -> f64 {
        out.records
            .iter()
            .find(|r| r.c == 9 && r.distance == l)
            .unwrap()
            .location_bias
    };
    let ratio = bias_at(1e9) / bias_at(1e3);
    assert!(
        ratio >= 1e4,
        "location bias growth factor {:.3e} < 1e4",
        ratio
    );
    assert_eq!(out.estimate.empirical_breakdown, Some(9.0 / 20.0));
    assert_eq!(out.estimate.theoretical, "9/20");
    println!(
        "PASS criterion 6: c=9 point mass diverges (factor {:.3e}); empirical breakdown 9/20 = theoretical",
        ratio
    );
}

#[test]
fn criterion_7_exact_fit_property() {
    let data = fixtures::line_fixture(12, 8, 7);
    let h = default_h(20, 2).unwrap();
    let fit = solve_exact(&data, &h, &tol(), &caps()).unwrap();
    let (dir, enlarged) = fit.exact_fit.as_ref().expect("exact fit must trigger");
    assert_eq!(fit.h_star.rows(), (0..12).collect::<Vec<_>>().as_slice());
    assert_eq!(enlarged, &fit.h_star);
    for &i in fit.h_star.rows() {
        let d2 = dir.distance_sq(data.row(i));
        assert!(d2 <= 1e-10, "row {} off the fitted line: d^2 = {:e}", i, d2);
    }
    assert_eq!(fit.index_value, 0.0);
    println!("PASS criterion 7: 12-on-a-line fixture returns enlarged H* = the 12 collinear rows, d^2 <= 1e-10");
}

struct FigureCheck {
    clean_index: f64,
    contaminated_index: f64,
    cluster_rows_in_h_star: usize,
    h_star_bits: Vec<usize>,
    index_bits: u64,
}

fn run_figure_check() -> FigureCheck {
    let (data, mask) = fixtures::figure_like_dataset(2024);
    let h = default_h(100, 2).unwrap();
    assert_eq!(h.h, 52);

    // clean h-subset: 52 genuine rows
    let clean = HSubset::new((0..52).collect()).unwrap();
    // contaminated h-subset: 27 cluster rows + 25 genuine
    let mut rows: Vec<usize> = (70..97).collect();
    rows.extend(0..25);
    let contaminated = HSubset::new(rows).unwrap();

    let dirs_clean = enumerate_directions(&data, &clean, &tol(), &caps()).unwrap();
    let rep_clean = incongruence_index(&data, &clean, &dirs_clean, h.h, &tol()).unwrap();
    let dirs_cont = enumerate_directions(&data, &contaminated, &tol(), &caps()).unwrap();
    let rep_cont = incongruence_index(&data, &contaminated, &dirs_cont, h.h, &tol()).unwrap();

    let cfg = SolverConfig::new(99); // defaults: 500 starts, 3 isteps, 250 directions
    let fit = solve_randomized(&data, &h, &cfg, &tol(), &caps()).unwrap();
    let cluster_rows_in_h_star = fit
        .h_star
        .rows()
        .iter()
        .filter(|&&i| mask[i])
        .count();
    FigureCheck {
        clean_index: rep_clean.aggregate,
        contaminated_index: rep_cont.aggregate,
        cluster_rows_in_h_star,
        h_star_bits: fit.h_star.rows().to_vec(),
        index_bits: fit.index_value.to_bits(),
    }
}

#[test]
fn criterion_8_figure_qualitative() {
    let check = run_figure_check();
    assert!(
        check.clean_index < check.contaminated_index,
        "expected I(clean) < I(contaminated): {:.6e} vs {:.6e}",
        check.clean_index,
        check.contaminated_index
    );
    assert_eq!(
        check.cluster_rows_in_h_star, 0,
        "randomized H* contains cluster rows"
    );
    println!(
        "PASS criterion 8: I(clean)={:.4e} < I(contaminated)={:.4e}; randomized H* has 0 cluster rows",
        check.clean_index, check.contaminated_index
    );
}

#[test]
fn criterion_9_determinism_across_thread_counts() {
    let run_all = || {
        // criterion 2 representative
        let data = fixtures::gaussian_cloud(8, 2, 1002);
        let h = default_h(8, 2).unwrap();
        let cfg = SolverConfig {
            n_starts: 300,
            n_isteps: 3,
            k_directions: 4000,
            seed: 12345,
        };
        let fit2 = solve_randomized(&data, &h, &cfg, &tol(), &caps()).unwrap();

        // criterion 6 sweep
        let data6 = bounded_side_fixture();
        let h6 = default_h(20, 2).unwrap();
        let settings = SweepSettings {
            direction: Some(DVector::from_row_slice(&[1.0, 0.0])),
            ..SweepSettings::exact(17)
        };
        let out6 =
            breakdown_sweep(&data6, &h6, &[1e3, 1e9], &[9], &settings, &tol(), &caps()).unwrap();

        // criterion 8 randomized fit
        let fig = run_figure_check();

        let mut sig: Vec<u64> = Vec::new();
        sig.extend(fit2.h_star.rows().iter().map(|&i| i as u64));
        sig.push(fit2.index_value.to_bits());
        sig.extend(fit2.location.iter().map(|v| v.to_bits()));
        for r in &out6.records {
            sig.push(r.location_bias.to_bits());
            sig.push(r.scatter_bias.to_bits());
            sig.push(r.h_star_outlier_count as u64);
        }
        sig.extend(fig.h_star_bits.iter().map(|&i| i as u64));
        sig.push(fig.index_bits);
        sig.push(fig.clean_index.to_bits());
        sig.push(fig.contaminated_index.to_bits());
        sig
    };

    let pool1 = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let pool4 = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let sig1 = pool1.install(run_all);
    let sig4 = pool4.install(run_all);
    assert_eq!(sig1, sig4, "outputs differ across thread counts");
    println!("PASS criterion 9: criteria 2/6/8 outputs bit-identical with 1 and 4 worker threads");
}
