use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use noma_outage_cli::config::{preset_text, PRESETS};
use noma_outage_cli::{compare_report, emit_outputs, run, Evaluator, Overrides, RunConfig};

/// Exit codes: 0 every agreement check passed, 2 exact and Monte Carlo
/// disagree somewhere, 1 usage or IO error.
#[derive(Parser)]
#[command(name = "noma-outage", version, about = "Outage probability sweeps for two-user NOMA with an EH relay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or config file and write CSV, report.json and manifest.json.
    Run(RunArgs),
    /// List presets, or print one as TOML to use as a starting config.
    Presets { name: Option<String> },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS), required_unless_present = "config", conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated subset of exact, asymptotic, mc, quadrature.
    #[arg(long, value_delimiter = ',')]
    evaluators: Option<Vec<Evaluator>>,
    /// Monte Carlo trials per point.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; files go to `<out>/<run name>/`.
    #[arg(long, env = "NOMA_OUTAGE_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Relative tolerance of the series closed forms.
    #[arg(long)]
    series_tol: Option<f64>,
    /// Highest-SNR points used for each diversity-order fit.
    #[arg(long)]
    fit_points: Option<usize>,
}

fn execute(args: RunArgs) -> Result<bool, String> {
    let text = match (&args.preset, &args.config) {
        (Some(p), _) => preset_text(p).map_err(|e| e.to_string())?.to_string(),
        (None, Some(path)) => fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?,
        (None, None) => unreachable!("clap requires one of --preset and --config"),
    };
    let ov = Overrides {
        evaluators: args.evaluators,
        trials: args.trials,
        seed: args.seed,
        series_tol: args.series_tol,
        fit_points: args.fit_points,
    };
    let config = RunConfig::from_toml_with(&text, &ov).map_err(|e| e.to_string())?;
    let result = run(&config);
    let report = compare_report(&result);
    let dir = args.out.join(&config.name);
    let files = emit_outputs(&result, &report, &dir).map_err(|e| e.to_string())?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    let s = &report.summary;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3e}"));
    println!(
        "{} points; max |z| {}; max series/quadrature gap {}; {} of {} agreement checks failed; {} series fallbacks; {} evaluator errors",
        result.points.len(),
        fmt(s.max_z_score),
        fmt(s.max_series_quad_gap),
        s.disagreements,
        s.agreement_checks,
        s.series_fallbacks,
        s.evaluator_errors,
    );
    for f in &s.diversity_orders {
        match (f.diversity_order, &f.error) {
            (Some(d), _) => println!("diversity order {} U{}: {d:.3}", f.curve, f.user),
            (None, Some(e)) => println!("diversity order {} U{}: {e}", f.curve, f.user),
            (None, None) => {}
        }
    }
    Ok(s.all_agree())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Presets { name: None } => {
            for p in PRESETS {
                println!("{p}");
            }
            ExitCode::SUCCESS
        }
        Command::Presets { name: Some(n) } => match preset_text(&n) {
            Ok(t) => {
                print!("{t}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Run(args) => match execute(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(2),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
