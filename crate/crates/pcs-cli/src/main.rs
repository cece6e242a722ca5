use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use pcs_core::{
    breakdown_bound, check_general_position, default_h, fixtures, incongruence_index,
    solve_exact, solve_randomized, Caps, Dataset, HSubset, PcsError, SolveMode, SolverConfig,
    SubsetSize, SweepSettings, Tolerances,
};

#[derive(Parser)]
#[command(name = "pcs", version, about = "Projection congruent subset estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit PCS location/scatter on a dataset
    Fit(FitArgs),
    /// Export the sorted per-direction incongruence curve of given h-subsets
    Curve(CurveArgs),
    /// Run a contamination sweep and report empirical vs theoretical breakdown
    Breakdown(BreakdownArgs),
    /// Run affine-equivariance trials
    Equivariance(EquivarianceArgs),
    /// Check the general-position assumption
    GpCheck(GpCheckArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Input CSV (numeric fields, comma or whitespace separated)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Header handling: auto (default), yes, no
    #[arg(long, default_value = "auto")]
    header: String,
    /// Override subset size h (default ceil((n+p+1)/2))
    #[arg(long)]
    h: Option<usize>,
    /// exact or randomized
    #[arg(long)]
    mode: Option<String>,
    /// RNG seed (required for randomized mode; PCS_SEED env honored)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_starts: Option<usize>,
    #[arg(long)]
    n_isteps: Option<usize>,
    #[arg(long)]
    k_directions: Option<usize>,
    /// Output file (stdout when absent)
    #[arg(long)]
    output: Option<PathBuf>,
    /// key=value config file mirroring the flags; flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Permit duplicate rows (contaminated fixtures)
    #[arg(long, default_value_t = false)]
    allow_duplicates: bool,
    /// Worker thread cap (results are thread-count independent)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    tol_dup: Option<f64>,
    #[arg(long)]
    tol_gp: Option<f64>,
    #[arg(long)]
    tol_fit: Option<f64>,
    #[arg(long)]
    tol_zero: Option<f64>,
    #[arg(long)]
    cond_cap: Option<f64>,
    #[arg(long)]
    subset_cap: Option<u128>,
    #[arg(long)]
    direction_cap: Option<u128>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated 1-based row indices of an h-subset; repeatable
    #[arg(long = "subset", required = true)]
    subsets: Vec<String>,
}

#[derive(Args)]
struct BreakdownArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Generate a seeded Gaussian fixture of this size instead of --input
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, default_value_t = 424242)]
    gen_seed: u64,
    /// Comma-separated contamination magnitudes, e.g. 1e3,1e6,1e9
    #[arg(long, default_value = "1e3,1e6,1e9")]
    l_grid: String,
    /// Contamination counts: "a..b" inclusive range or comma list
    #[arg(long, default_value = "0..8")]
    c_range: String,
    /// point-mass, point-mass-jitter or cluster
    #[arg(long, default_value = "point-mass")]
    contam_geometry: String,
    /// Unit direction for the point mass, e.g. "1,0" (seeded random when absent)
    #[arg(long)]
    direction: Option<String>,
    #[arg(long, default_value_t = 10.0)]
    growth_threshold: f64,
}

#[derive(Args)]
struct EquivarianceArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, default_value_t = 424242)]
    gen_seed: u64,
    #[arg(long, default_value_t = 50)]
    trials: usize,
}

#[derive(Args)]
struct GpCheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Permit a sampled partial verdict above the enumeration cap
    #[arg(long, default_value_t = false)]
    allow_sampling: bool,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e);
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<(), PcsError> {
    match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Curve(args) => cmd_curve(args),
        Command::Breakdown(args) => cmd_breakdown(args),
        Command::Equivariance(args) => cmd_equivariance(args),
        Command::GpCheck(args) => cmd_gp_check(args),
    }
}

/// Merges config-file values into unset flags, applies PCS_SEED, caps the
/// rayon pool. Returns the digest string used in the reproducibility block.
fn prepare(common: &mut CommonArgs) -> Result<String, PcsError> {
    if let Some(path) = common.config.clone() {
        apply_config_file(common, &path)?;
    }
    if common.seed.is_none() {
        if let Ok(v) = std::env::var("PCS_SEED") {
            common.seed = Some(v.parse().map_err(|_| {
                PcsError::Validation(format!("PCS_SEED is not an integer: {}", v))
            })?);
        }
    }
    if let Some(t) = common.threads {
        // ignore the error when a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(config_digest(common))
}

fn apply_config_file(common: &mut CommonArgs, path: &Path) -> Result<(), PcsError> {
    let text = std::fs::read_to_string(path).map_err(|e| PcsError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut kv = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| PcsError::Parse {
            line: i + 1,
            message: "expected key=value".into(),
        })?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    fn set<T: std::str::FromStr>(slot: &mut Option<T>, kv: &HashMap<String, String>, key: &str) {
        if slot.is_none() {
            if let Some(v) = kv.get(key) {
                if let Ok(parsed) = v.parse() {
                    *slot = Some(parsed);
                }
            }
        }
    }
    set(&mut common.input, &kv, "input");
    set(&mut common.h, &kv, "h");
    set(&mut common.mode, &kv, "mode");
    set(&mut common.seed, &kv, "seed");
    set(&mut common.n_starts, &kv, "n_starts");
    set(&mut common.n_isteps, &kv, "n_isteps");
    set(&mut common.k_directions, &kv, "k_directions");
    set(&mut common.threads, &kv, "threads");
    set(&mut common.tol_dup, &kv, "tol_dup");
    set(&mut common.tol_gp, &kv, "tol_gp");
    set(&mut common.tol_fit, &kv, "tol_fit");
    set(&mut common.tol_zero, &kv, "tol_zero");
    set(&mut common.cond_cap, &kv, "cond_cap");
    set(&mut common.subset_cap, &kv, "subset_cap");
    set(&mut common.direction_cap, &kv, "direction_cap");
    Ok(())
}

fn config_digest(common: &CommonArgs) -> String {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    format!(
        "{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}",
        common.input,
        common.header,
        common.h,
        common.mode,
        common.seed,
        common.n_starts,
        common.n_isteps,
        common.k_directions,
        common.allow_duplicates,
        common.tol_dup,
        common.tol_gp,
        common.tol_fit,
        common.tol_zero,
        common.cond_cap,
        common.subset_cap,
    )
    .hash(&mut h);
    format!("{:016x}", h.finish())
}

fn tolerances(common: &CommonArgs) -> Tolerances {
    let mut t = Tolerances::default();
    if let Some(v) = common.tol_dup {
        t.tol_dup_factor = v;
    }
    if let Some(v) = common.tol_gp {
        t.tol_gp_factor = v;
    }
    if let Some(v) = common.tol_fit {
        t.tol_fit_factor = v;
    }
    if let Some(v) = common.tol_zero {
        t.tol_zero_factor = v;
    }
    if let Some(v) = common.cond_cap {
        t.cond_cap = v;
    }
    t
}

fn caps(common: &CommonArgs) -> Caps {
    let mut c = Caps::default();
    if let Some(v) = common.subset_cap {
        c.subset_cap = v;
    }
    if let Some(v) = common.direction_cap {
        c.direction_cap = v;
    }
    c
}

fn load_dataset(common: &CommonArgs) -> Result<Dataset, PcsError> {
    let path = common
        .input
        .as_ref()
        .ok_or_else(|| PcsError::Validation("--input is required".into()))?;
    let header = match common.header.as_str() {
        "auto" => None,
        "yes" => Some(true),
        "no" => Some(false),
        other => {
            return Err(PcsError::Validation(format!(
                "--header must be auto, yes or no, got {}",
                other
            )))
        }
    };
    let tol = tolerances(common);
    if common.allow_duplicates {
        let text = std::fs::read_to_string(path).map_err(|e| PcsError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        // suppressed duplicate check: treat every row as contaminated tail
        let probe = Dataset::from_csv_str(&text, header, &tol);
        match probe {
            Ok(d) => Ok(d),
            Err(PcsError::DuplicateRows { .. }) => {
                let rows = parse_rows(&text, header)?;
                Dataset::new_with_contaminated_tail(rows, 0, &tol)
            }
            Err(e) => Err(e),
        }
    } else {
        Dataset::from_csv(path, header, &tol)
    }
}

fn parse_rows(text: &str, header: Option<bool>) -> Result<Vec<Vec<f64>>, PcsError> {
    let mut rows = Vec::new();
    let mut first = true;
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
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => {
                if !(first && header == Some(true)) {
                    rows.push(v);
                }
            }
            Err(e) => {
                if !(first && header != Some(false)) {
                    return Err(PcsError::Parse {
                        line: lineno + 1,
                        message: e.to_string(),
                    });
                }
            }
        }
        first = false;
    }
    Ok(rows)
}

fn subset_size(data: &Dataset, common: &CommonArgs) -> Result<SubsetSize, PcsError> {
    match common.h {
        Some(h) => SubsetSize::with_override(data.n(), data.p(), h),
        None => default_h(data.n(), data.p()),
    }
}

fn write_output(output: &Option<PathBuf>, content: &str) -> Result<(), PcsError> {
    match output {
        Some(path) => std::fs::write(path, content).map_err(|e| PcsError::Io {
            path: path.display().to_string(),
            source: e,
        }),
        None => {
            println!("{}", content);
            Ok(())
        }
    }
}

fn repro_block(seed: Option<u64>, digest: &str) -> serde_json::Value {
    serde_json::json!({
        "seed": seed,
        "config_hash": digest,
        "version": env!("CARGO_PKG_VERSION"),
        "index_base": "1-based row indices in all user-facing output",
    })
}

fn solver_config(common: &CommonArgs) -> Result<SolverConfig, PcsError> {
    let seed = common.seed.ok_or_else(|| {
        PcsError::Validation("randomized mode requires --seed (or PCS_SEED)".into())
    })?;
    let mut cfg = SolverConfig::new(seed);
    if let Some(v) = common.n_starts {
        cfg.n_starts = v;
    }
    if let Some(v) = common.n_isteps {
        cfg.n_isteps = v;
    }
    if let Some(v) = common.k_directions {
        cfg.k_directions = v;
    }
    Ok(cfg)
}

fn cmd_fit(mut args: FitArgs) -> Result<(), PcsError> {
    let digest = prepare(&mut args.common)?;
    let data = load_dataset(&args.common)?;
    let h = subset_size(&data, &args.common)?;
    let tol = tolerances(&args.common);
    let cp = caps(&args.common);
    let mode = args.common.mode.clone().unwrap_or_else(|| "exact".into());
    let fit = match mode.as_str() {
        "exact" => solve_exact(&data, &h, &tol, &cp)?,
        "randomized" => {
            let cfg = solver_config(&args.common)?;
            solve_randomized(&data, &h, &cfg, &tol, &cp)?
        }
        other => {
            return Err(PcsError::Validation(format!(
                "--mode must be exact or randomized, got {}",
                other
            )))
        }
    };
    let bound = breakdown_bound(data.n(), h.h)?;
    eprintln!(
        "n = {}, p = {}, h = {}, breakdown bound (n-h+1)/n = {} ({:.4})",
        data.n(),
        data.p(),
        h.h,
        bound,
        bound.as_f64()
    );
    eprintln!(
        "index value I(H*) = {:.6e}, exact fit: {}",
        fit.index_value,
        if fit.exact_fit.is_some() { "yes" } else { "no" }
    );
    let mut value = serde_json::to_value(fit.report(&data, &h)).expect("fit serializes");
    value["reproducibility"] = repro_block(fit.seed, &digest);
    write_output(
        &args.common.output,
        &serde_json::to_string_pretty(&value).expect("json"),
    )
}

fn parse_subset(spec: &str, data: &Dataset, h: usize) -> Result<HSubset, PcsError> {
    let indices: Result<Vec<usize>, _> = spec
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect();
    let indices =
        indices.map_err(|e| PcsError::Validation(format!("bad subset index: {}", e)))?;
    if let Some(&bad) = indices.iter().find(|&&i| i == 0) {
        return Err(PcsError::Validation(format!(
            "subset indices are 1-based, got {}",
            bad
        )));
    }
    let zero_based: Vec<usize> = indices.iter().map(|&i| i - 1).collect();
    let subset = HSubset::new_checked(zero_based, data.n())?;
    if subset.len() != h {
        return Err(PcsError::Validation(format!(
            "subset must have exactly h = {} rows, got {}",
            h,
            subset.len()
        )));
    }
    Ok(subset)
}

fn cmd_curve(mut args: CurveArgs) -> Result<(), PcsError> {
    let digest = prepare(&mut args.common)?;
    let data = load_dataset(&args.common)?;
    let h = subset_size(&data, &args.common)?;
    let tol = tolerances(&args.common);
    let cp = caps(&args.common);

    let mut curves: Vec<(Vec<(f64, Vec<usize>)>, f64)> = Vec::new();
    for spec in &args.subsets {
        let subset = parse_subset(spec, &data, h.h)?;
        let dirs = pcs_core::enumerate_directions(&data, &subset, &tol, &cp)?;
        let report = incongruence_index(&data, &subset, &dirs, h.h, &tol)?;
        let mut values: Vec<(f64, Vec<usize>)> = report
            .per_direction
            .iter()
            .map(|(d, v)| (*v, d.source_rows.iter().map(|&i| i + 1).collect()))
            .collect();
        values.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        eprintln!(
            "subset {}: I(H) = {:.6e} over {} directions ({} singular skipped)",
            curves.len() + 1,
            report.aggregate,
            report.per_direction.len(),
            dirs.skipped_singular
        );
        curves.push((values, report.aggregate));
    }

    let mut out = String::new();
    out.push_str(&format!(
        "# pcs curve, 1-based source rows, config_hash={}\n",
        digest
    ));
    if curves.len() == 1 {
        out.push_str("direction_index,I_value,source_rows\n");
        for (i, (v, src)) in curves[0].0.iter().enumerate() {
            out.push_str(&format!(
                "{},{:.17e},{}\n",
                i + 1,
                v,
                src.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ")
            ));
        }
    } else {
        out.push_str("direction_index");
        for k in 1..=curves.len() {
            out.push_str(&format!(",I_value_{k},source_rows_{k}"));
        }
        out.push('\n');
        let rows = curves.iter().map(|c| c.0.len()).max().unwrap_or(0);
        for i in 0..rows {
            out.push_str(&(i + 1).to_string());
            for (values, _) in &curves {
                match values.get(i) {
                    Some((v, src)) => out.push_str(&format!(
                        ",{:.17e},{}",
                        v,
                        src.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ")
                    )),
                    None => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
    }
    for (k, (_, agg)) in curves.iter().enumerate() {
        println!("I(subset_{}) = {:.17e}", k + 1, agg);
    }
    write_output(&args.common.output, &out)
}

fn parse_l_grid(spec: &str) -> Result<Vec<f64>, PcsError> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| PcsError::Validation(format!("bad L value {}: {}", s, e)))
        })
        .collect()
}

fn parse_c_range(spec: &str) -> Result<Vec<usize>, PcsError> {
    if let Some((a, b)) = spec.split_once("..") {
        let a: usize = a
            .trim()
            .parse()
            .map_err(|_| PcsError::Validation(format!("bad c range start: {}", spec)))?;
        let b: usize = b
            .trim()
            .parse()
            .map_err(|_| PcsError::Validation(format!("bad c range end: {}", spec)))?;
        if b < a {
            return Err(PcsError::Validation("empty c range".into()));
        }
        Ok((a..=b).collect())
    } else {
        spec.split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| PcsError::Validation(format!("bad c value {}: {}", s, e)))
            })
            .collect()
    }
}

fn breakdown_dataset(
    args: &BreakdownArgs,
) -> Result<(Dataset, Option<usize>), PcsError> {
    if args.common.input.is_some() {
        Ok((load_dataset(&args.common)?, None))
    } else {
        let n = args.n.ok_or_else(|| {
            PcsError::Validation("either --input or --n/--p is required".into())
        })?;
        let p = args.p.unwrap_or(2);
        Ok((fixtures::gaussian_cloud(n, p, args.gen_seed), Some(args.gen_seed as usize)))
    }
}

fn cmd_breakdown(mut args: BreakdownArgs) -> Result<(), PcsError> {
    let digest = prepare(&mut args.common)?;
    let (data, _) = breakdown_dataset(&args)?;
    let h = subset_size(&data, &args.common)?;
    let tol = tolerances(&args.common);
    let cp = caps(&args.common);
    let seed = args.common.seed.unwrap_or(0);

    // breakdown guarantees assume general position: verify before sweeping
    let gp = check_general_position(&data, &tol, &cp, true, seed)?;
    if !gp.in_general_position {
        eprintln!(
            "warning: data is not in general position (witness rows {:?}); breakdown theory does not apply",
            gp.witness.as_ref().map(|w| w.iter().map(|i| i + 1).collect::<Vec<_>>())
        );
    }

    let l_grid = parse_l_grid(&args.l_grid)?;
    let c_range = parse_c_range(&args.c_range)?;
    let mode = match args.common.mode.as_deref() {
        None | Some("exact") => SolveMode::Exact,
        Some("randomized") => SolveMode::Randomized,
        Some(other) => {
            return Err(PcsError::Validation(format!(
                "--mode must be exact or randomized, got {}",
                other
            )))
        }
    };
    let direction = match &args.direction {
        Some(spec) => {
            let v: Result<Vec<f64>, _> = spec.split(',').map(|s| s.trim().parse()).collect();
            Some(DVector::from_vec(v.map_err(|_| {
                PcsError::Validation(format!("bad direction: {}", spec))
            })?))
        }
        None => None,
    };
    let jitter_scale = match args.contam_geometry.as_str() {
        "point-mass" => 0.0,
        "point-mass-jitter" | "cluster" => 1e-3,
        other => {
            return Err(PcsError::Validation(format!(
                "unknown contamination geometry: {}",
                other
            )))
        }
    };
    let mut settings = SweepSettings {
        mode,
        solver: SolverConfig::new(seed),
        growth_threshold: args.growth_threshold,
        direction,
        jitter_scale,
        seed,
    };
    if let Some(v) = args.common.n_starts {
        settings.solver.n_starts = v;
    }
    if let Some(v) = args.common.n_isteps {
        settings.solver.n_isteps = v;
    }
    if let Some(v) = args.common.k_directions {
        settings.solver.k_directions = v;
    }

    let outcome = pcs_core::breakdown_sweep(&data, &h, &l_grid, &c_range, &settings, &tol, &cp)?;

    let mut csv = String::from("c,epsilon,L,location_bias,scatter_bias,h_star_outlier_count\n");
    for r in &outcome.records {
        csv.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
            r.c, r.epsilon, r.distance, r.location_bias, r.scatter_bias, r.h_star_outlier_count
        ));
    }
    match &outcome.estimate.empirical_breakdown {
        Some(eps) => eprintln!(
            "diverged at epsilon = {} (c = {}, metric: {})",
            eps,
            outcome.estimate.empirical_c.unwrap_or(0),
            outcome.estimate.diverged_on.as_deref().unwrap_or("?")
        ),
        None => eprintln!(
            "no divergence detected up to c = {} (empirical breakdown > {}/{})",
            outcome.estimate.max_c_tested,
            outcome.estimate.max_c_tested,
            data.n()
        ),
    }
    eprintln!(
        "theoretical breakdown bound: {} = {:.4}",
        outcome.estimate.theoretical, outcome.estimate.theoretical_value
    );

    let mut summary = serde_json::to_value(&outcome.estimate).expect("summary serializes");
    summary["reproducibility"] = repro_block(Some(seed), &digest);
    summary["general_position"] = serde_json::json!(gp.in_general_position);
    match &args.common.output {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| PcsError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            let mut json_path = path.clone();
            json_path.set_extension("summary.json");
            std::fs::write(
                &json_path,
                serde_json::to_string_pretty(&summary).expect("json"),
            )
            .map_err(|e| PcsError::Io {
                path: json_path.display().to_string(),
                source: e,
            })?;
        }
        None => {
            println!("{}", csv);
            println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
        }
    }
    Ok(())
}

fn cmd_equivariance(mut args: EquivarianceArgs) -> Result<(), PcsError> {
    let digest = prepare(&mut args.common)?;
    let data = if args.common.input.is_some() {
        load_dataset(&args.common)?
    } else {
        let n = args.n.ok_or_else(|| {
            PcsError::Validation("either --input or --n/--p is required".into())
        })?;
        fixtures::gaussian_cloud(n, args.p.unwrap_or(2), args.gen_seed)
    };
    let h = subset_size(&data, &args.common)?;
    let tol = tolerances(&args.common);
    let cp = caps(&args.common);
    let seed = args.common.seed.unwrap_or(0);
    let mode = match args.common.mode.as_deref() {
        None | Some("exact") => SolveMode::Exact,
        Some("randomized") => SolveMode::Randomized,
        Some(other) => {
            return Err(PcsError::Validation(format!(
                "--mode must be exact or randomized, got {}",
                other
            )))
        }
    };
    let mut settings = SweepSettings::exact(seed);
    settings.mode = mode;
    if let Some(v) = args.common.n_starts {
        settings.solver.n_starts = v;
    }
    if let Some(v) = args.common.k_directions {
        settings.solver.k_directions = v;
    }

    let mut reports = Vec::with_capacity(args.trials);
    let mut passed = 0usize;
    for t in 0..args.trials {
        let r = pcs_core::equivariance_trial(&data, &h, &settings, seed ^ (t as u64 + 1), &tol, &cp)?;
        if r.pass {
            passed += 1;
        }
        reports.push(r);
    }
    eprintln!("equivariance: {}/{} trials passed", passed, args.trials);
    let value = serde_json::json!({
        "trials": args.trials,
        "passed": passed,
        "reports": reports,
        "reproducibility": repro_block(Some(seed), &digest),
    });
    write_output(
        &args.common.output,
        &serde_json::to_string_pretty(&value).expect("json"),
    )
}

fn cmd_gp_check(mut args: GpCheckArgs) -> Result<(), PcsError> {
    let digest = prepare(&mut args.common)?;
    let data = load_dataset(&args.common)?;
    let tol = tolerances(&args.common);
    let cp = caps(&args.common);
    let seed = args.common.seed.unwrap_or(0);
    let report = check_general_position(&data, &tol, &cp, args.allow_sampling, seed)?;
    eprintln!(
        "general position: {} ({}, {} subsets checked)",
        report.in_general_position,
        if report.exhaustive { "exhaustive" } else { "sampled (partial verdict)" },
        report.subsets_checked
    );
    let mut value = serde_json::to_value(&report).expect("report serializes");
    // witness indices shown 1-based
    if let Some(w) = &report.witness {
        value["witness"] =
            serde_json::json!(w.iter().map(|&i| i + 1).collect::<Vec<usize>>());
    }
    value["reproducibility"] = repro_block(Some(seed), &digest);
    write_output(
        &args.common.output,
        &serde_json::to_string_pretty(&value).expect("json"),
    )
}
