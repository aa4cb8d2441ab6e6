//! `relaysim`: experiment runner for the relay-selection simulator.
//!
//! Exit codes: 0 success, 1 a check failed, 2 malformed spec or usage,
//! 3 output not writable.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use relaysim_core::experiment::{
    parse_spec, run_experiment, ExperimentOutput, ExperimentSpec, Mode, SpecError,
};
use relaysim_core::oracle::{closed_form_consistency, ConsistencyReport, CLOSED_FORM_TOL};
use relaysim_core::parallel::with_threads;
use relaysim_core::protocol::budget_for;
use serde_json::json;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_BAD_SPEC: u8 = 2;
const EXIT_UNWRITABLE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "relaysim",
    version,
    about = "AF MIMO relay antenna-selection simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bit error rate sweep
    Ber(RunArgs),
    /// Outage probability sweep
    Outage(RunArgs),
    /// Outage sweep plus diversity-order slope fit
    Diversity(RunArgs),
    /// Compare closed-form post-SNRs with numerically computed filters
    SnrCheck(SnrCheckArgs),
    /// Print the feedback and training budget
    Protocol(ProtocolArgs),
    /// Validate a spec without running it
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment spec (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Override the spec's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the spec's output CSV path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores); does not affect results
    #[arg(long, env = "RELAYSIM_THREADS", default_value_t = 0)]
    threads: usize,
    /// Override the spec's trials per point
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Args)]
struct SnrCheckArgs {
    /// Realizations per (N_S, N_R, N_D, snr) configuration
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, env = "RELAYSIM_THREADS", default_value_t = 0)]
    threads: usize,
    /// Largest antenna count per node (counts 1..=max are swept)
    #[arg(long, default_value_t = 4)]
    max_antennas: usize,
    /// Optional JSON report path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProtocolArgs {
    #[arg(long)]
    ns: usize,
    #[arg(long)]
    nr: usize,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Ber(args) => run_sweep(Mode::Ber, args),
        Command::Outage(args) => run_sweep(Mode::Outage, args),
        Command::Diversity(args) => run_sweep(Mode::Diversity, args),
        Command::SnrCheck(args) => snr_check(args),
        Command::Protocol(args) => protocol(args),
        Command::Validate(args) => validate(args),
    }
}

fn load_spec(path: &Path) -> Result<ExperimentSpec, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_BAD_SPEC)
    })?;
    parse_spec(&text).map_err(|e| {
        report_spec_error(path, &e);
        ExitCode::from(EXIT_BAD_SPEC)
    })
}

fn report_spec_error(path: &Path, e: &SpecError) {
    match e {
        SpecError::Malformed { .. } => eprintln!("error: {}: {e}", path.display()),
        SpecError::Invalid(diags) => {
            for d in diags {
                eprintln!("error: {}: {d}", path.display());
            }
        }
    }
}

fn run_sweep(mode: Mode, args: RunArgs) -> ExitCode {
    let mut spec = match load_spec(&args.config) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if let Some(declared) = spec.mode.filter(|&m| m != mode) {
        eprintln!(
            "warning: spec declares mode {}, running {}",
            declared.as_str(),
            mode.as_str()
        );
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            eprintln!("error: --trials must be at least 1");
            return ExitCode::from(EXIT_BAD_SPEC);
        }
        spec.trials = trials;
    }
    let Some(out_path) = args.out.clone().or_else(|| spec.output.clone()) else {
        eprintln!("error: no output path; pass --out or set \"output\" in the spec");
        return ExitCode::from(EXIT_BAD_SPEC);
    };

    let started = Instant::now();
    let result = with_threads(args.threads, || run_experiment(&spec, mode));
    let wall = started.elapsed().as_secs_f64();
    let output = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_BAD_SPEC);
        }
    };

    if let Err(e) = fs::write(&out_path, output.to_csv()) {
        eprintln!("error: cannot write {}: {e}", out_path.display());
        return ExitCode::from(EXIT_UNWRITABLE);
    }
    let manifest_path = manifest_path(&out_path);
    let manifest = manifest(&spec, mode, &output, &out_path, args.threads, wall);
    if let Err(e) = fs::write(&manifest_path, format!("{manifest:#}\n")) {
        eprintln!("error: cannot write {}: {e}", manifest_path.display());
        return ExitCode::from(EXIT_UNWRITABLE);
    }

    print_summary(mode, &output);
    println!(
        "wrote {} ({} rows) and {}",
        out_path.display(),
        output.rows.len(),
        manifest_path.display()
    );
    ExitCode::SUCCESS
}

/// `results.csv` -> `results.manifest.json`.
fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

fn manifest(
    spec: &ExperimentSpec,
    mode: Mode,
    output: &ExperimentOutput,
    csv: &Path,
    threads: usize,
    wall: f64,
) -> serde_json::Value {
    json!({
        "tool": "relaysim",
        "version": env!("CARGO_PKG_VERSION"),
        "mode": mode.as_str(),
        "seed": spec.seed,
        "trials_per_point": spec.trials,
        "threads": threads,
        "parallel_build": relaysim_core::parallel::is_parallel(),
        "wall_time_seconds": wall,
        "csv": csv.display().to_string(),
        "rows": output.rows.len(),
        "spec": spec,
        "fits": output.fits,
        "fit_errors": output
            .fit_errors
            .iter()
            .map(|(s, e)| json!({ "strategy": s, "error": e }))
            .collect::<Vec<_>>(),
    })
}

fn print_summary(mode: Mode, output: &ExperimentOutput) {
    let label = if mode == Mode::Ber { "ber" } else { "p_out" };
    for r in &output.rows {
        println!(
            "{:>8} dB  {:<22} {label}={:.4e}  [{:.4e}, {:.4e}]  ({}/{})",
            r.snr_db, r.strategy, r.value, r.ci_low, r.ci_high, r.errors, r.trials
        );
    }
    for f in &output.fits {
        let locals: Vec<String> = f
            .fit
            .local_slopes
            .iter()
            .map(|s| format!("{s:.2}"))
            .collect();
        println!(
            "diversity {}: fitted slope {:.3} over {} points (predicted {}), local slopes [{}]",
            f.strategy,
            f.fit.slope,
            f.fit.points_used,
            f.fit.predicted_order.map_or("-".into(), |d| d.to_string()),
            locals.join(", ")
        );
    }
    for (s, e) in &output.fit_errors {
        println!("diversity {s}: no fit ({e})");
    }
}

fn snr_check(args: SnrCheckArgs) -> ExitCode {
    if args.trials == 0 || args.max_antennas == 0 {
        eprintln!("error: --trials and --max-antennas must be at least 1");
        return ExitCode::from(EXIT_BAD_SPEC);
    }
    let counts: Vec<usize> = (1..=args.max_antennas).collect();
    let snrs = [0.01, 1.0, 100.0];
    let started = Instant::now();
    let report = match with_threads(args.threads, || {
        closed_form_consistency(&counts, &snrs, args.trials, args.seed)
    }) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CHECK_FAILED);
        }
    };
    print_consistency(&report, started.elapsed().as_secs_f64());
    if let Some(path) = &args.out {
        let body = json!({ "seed": args.seed, "trials_per_config": args.trials, "snrs": snrs, "antenna_counts": counts, "report": report });
        if let Err(e) = fs::write(path, format!("{body:#}\n")) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_UNWRITABLE);
        }
    }
    if report.passes() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}

fn print_consistency(r: &ConsistencyReport, wall: f64) {
    println!("realizations={} wall_time_s={wall:.2}", r.realizations);
    println!(
        "mmse_max_rel_dev={:e} (tol {CLOSED_FORM_TOL:e})",
        r.max_mmse_rel_dev
    );
    println!(
        "mrc_max_rel_dev={:e} (tol {CLOSED_FORM_TOL:e})",
        r.max_mrc_rel_dev
    );
    println!("mmse_below_mrc={}", r.mmse_below_mrc);
    let p = &r.printed_mrc;
    println!(
        "printed_mrc_max_rel_dev={:e} printed_mrc_min_rel_dev_gsd_not_one={:e}",
        p.max_rel_dev, p.min_rel_dev_gsd_not_one
    );
    println!(
        "printed_mrc_beyond_tol={}/{} printed_mrc_identical_gsd_not_one={} gap_identity_max_err={:e}",
        p.beyond_tolerance, p.samples_gsd_not_one, p.identical_gsd_not_one, p.max_identity_error
    );
}

fn protocol(args: ProtocolArgs) -> ExitCode {
    if args.ns == 0 || args.nr == 0 {
        eprintln!("error: antenna counts must be at least 1");
        return ExitCode::from(EXIT_BAD_SPEC);
    }
    let b = budget_for(args.ns, args.nr);
    println!(
        "feedback_bits={} estimation_slots={} training_slots={}",
        b.total_feedback_bits, b.snr_estimation_slots, b.training_slots
    );
    ExitCode::SUCCESS
}

fn validate(args: ValidateArgs) -> ExitCode {
    match load_spec(&args.config) {
        Ok(_) => {
            println!("ok");
            ExitCode::SUCCESS
        }
        Err(code) => code,
    }
}
