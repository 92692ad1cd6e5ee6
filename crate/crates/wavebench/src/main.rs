//! File-driven command-line interface over the wavebench library.
//!
//! Exit codes: 0 success, 2 config/validation error, 3 run finished but
//! was collision-flagged, 4 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wavebench::cfm::PAPER_IDM;
use wavebench::config::{load_idm, load_samples_csv, load_scenario, load_suite};
use wavebench::energy::fit::fit_poly;
use wavebench::energy::placeholder::placeholder_portfolio;
use wavebench::energy::VehiclePortfolio;
use wavebench::error::{Result, WavebenchError};
use wavebench::kpi::{
    compute_kpis, export_tsd, leaderboard_json, leaderboard_table, rank_runs, wave_speed_estimate,
    KpiReport,
};
use wavebench::sim::{run, RunResult, ScenarioConfig};
use wavebench::stability::{critical_density_scan, scan_to_csv, unstable_speed_band};
use wavebench::util::fmt_sig6;

const EXIT_CONFIG: u8 = 2;
const EXIT_COLLISION: u8 = 3;
const EXIT_IO: u8 = 4;

/// Time and space bin widths of the exported time-space diagram.
const TSD_TIME_BIN: f64 = 10.0;
const TSD_SPACE_BIN: f64 = 20.0;

#[derive(Parser)]
#[command(name = "wavebench", version, about = "Single-lane traffic wave and fuel benchmark")]
struct Cli {
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the seed of the loaded scenario or suite.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress the printed summaries.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trajectory, KPI, and TSD artifacts.
    Run {
        /// Scenario config file (TOML or JSON).
        config: PathBuf,
        /// Vehicle portfolio JSON (defaults to the built-in placeholder models).
        #[arg(long)]
        portfolio: Option<PathBuf>,
        /// KPI report of a baseline run to compare degradation flags against.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Run a benchmark suite: baseline plus controller sweep, ranked.
    Sweep {
        /// Suite file (TOML or JSON).
        suite: PathBuf,
        #[arg(long)]
        portfolio: Option<PathBuf>,
    },
    /// String-stability scan: fundamental diagram and unstable band.
    Stability {
        /// IDM parameter file (TOML or JSON); defaults to the built-in set.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        v_min: f64,
        #[arg(long, default_value_t = 29.5)]
        v_max: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        #[arg(long, default_value_t = 5.0)]
        vehicle_length: f64,
    },
    /// Fit the polynomial fuel model to a `v,a,rate` samples CSV.
    Fit {
        samples: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Output model path (defaults to `<out>/model.json`).
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Rebuild a leaderboard from per-run `kpis.json` artifacts in a directory.
    Report {
        /// Directory whose subdirectories each hold one run's kpis.json.
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                WavebenchError::Io(_) => ExitCode::from(EXIT_IO),
                _ => ExitCode::from(EXIT_CONFIG),
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Run {
            config,
            portfolio,
            baseline,
        } => cmd_run(cli, config, portfolio.as_deref(), baseline.as_deref()),
        Command::Sweep { suite, portfolio } => cmd_sweep(cli, suite, portfolio.as_deref()),
        Command::Stability {
            params,
            v_min,
            v_max,
            step,
            vehicle_length,
        } => cmd_stability(cli, params.as_deref(), *v_min, *v_max, *step, *vehicle_length),
        Command::Fit {
            samples,
            beta,
            model_out,
        } => cmd_fit(cli, samples, *beta, model_out.as_deref()),
        Command::Report { dir } => cmd_report(cli, dir),
    }
}

fn load_portfolio(path: Option<&Path>) -> Result<VehiclePortfolio> {
    match path {
        Some(p) => VehiclePortfolio::load(p),
        None => Ok(placeholder_portfolio()),
    }
}

fn apply_seed(config: &mut ScenarioConfig, seed: Option<u64>) {
    if let Some(s) = seed {
        config.seed = s;
        config.noise.seed = s;
    }
}

/// Run one scenario and write its three artifacts into `dir`.
fn run_and_write(
    config: &ScenarioConfig,
    portfolio: &VehiclePortfolio,
    baseline: Option<&KpiReport>,
    dir: &Path,
) -> Result<(RunResult, KpiReport)> {
    let result = run(config, portfolio)?;
    let report = compute_kpis(&result, portfolio, baseline)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("trajectory.csv"), result.log.to_csv())?;
    std::fs::write(dir.join("kpis.json"), report.to_json())?;
    let tsd = export_tsd(&result.log, config, TSD_TIME_BIN, TSD_SPACE_BIN)?;
    std::fs::write(dir.join("tsd.csv"), tsd.to_csv())?;
    std::fs::write(dir.join("tsd_meta.json"), tsd.metadata_json())?;
    Ok((result, report))
}

fn print_summary(label: &str, result: &RunResult, report: &KpiReport) {
    println!("[{label}]");
    println!("  system mpg        {}", fmt_sig6(report.system_mpg));
    println!("  network speed     {} m/s", fmt_sig6(report.mean_network_speed));
    println!("  realized inflow   {} veh/hr", fmt_sig6(report.realized_inflow));
    println!("  collisions        {}", report.collision_count);
    println!(
        "  flags             inflow_degraded={} speed_degraded={}",
        report.flags.inflow_degraded, report.flags.speed_degraded
    );
    if let Ok(tsd) = export_tsd(&result.log, &result.config, TSD_TIME_BIN, TSD_SPACE_BIN) {
        if let Ok(c) = wave_speed_estimate(&tsd) {
            println!("  wave speed        {} m/s", fmt_sig6(c));
        }
    }
}

fn cmd_run(
    cli: &Cli,
    config_path: &Path,
    portfolio_path: Option<&Path>,
    baseline_path: Option<&Path>,
) -> Result<ExitCode> {
    let mut config = load_scenario(config_path)?;
    apply_seed(&mut config, cli.seed);
    let portfolio = load_portfolio(portfolio_path)?;
    let baseline = match baseline_path {
        Some(p) => Some(KpiReport::from_json(&std::fs::read_to_string(p)?)?),
        None => None,
    };
    let (result, report) = run_and_write(&config, &portfolio, baseline.as_ref(), &cli.out)?;
    if !cli.quiet {
        print_summary("run", &result, &report);
    }
    if result.has_collisions() {
        eprintln!(
            "run flagged: {} collision(s); artifacts written to {}",
            result.collisions.len(),
            cli.out.display()
        );
        return Ok(ExitCode::from(EXIT_COLLISION));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(cli: &Cli, suite_path: &Path, portfolio_path: Option<&Path>) -> Result<ExitCode> {
    let mut suite = load_suite(suite_path)?;
    apply_seed(&mut suite.scenario, cli.seed);
    let portfolio = load_portfolio(portfolio_path)?;
    let out: PathBuf = match (&cli.out, &suite.out_dir) {
        // the CLI flag wins over the suite file when explicitly given
        (o, Some(d)) if o == &PathBuf::from("out") => PathBuf::from(d),
        (o, _) => o.clone(),
    };

    let (baseline_result, baseline_report) =
        run_and_write(&suite.baseline(), &portfolio, None, &out.join("baseline"))?;
    if !cli.quiet {
        print_summary("baseline", &baseline_result, &baseline_report);
    }

    let mut rows = vec![("baseline".to_string(), baseline_report.clone())];
    let mut errors: Vec<(String, String)> = Vec::new();
    for (label, config) in suite.expand() {
        match run_and_write(&config, &portfolio, Some(&baseline_report), &out.join(&label)) {
            Ok((result, report)) => {
                if !cli.quiet {
                    print_summary(&label, &result, &report);
                }
                rows.push((label, report));
            }
            Err(e) => errors.push((label, e.to_string())),
        }
    }

    let entries = rank_runs(&rows);
    let mut table = leaderboard_table(&entries);
    if !errors.is_empty() {
        table.push_str("\nfailed runs:\n");
        for (label, e) in &errors {
            table.push_str(&format!("  {label}: {e}\n"));
        }
    }
    std::fs::write(out.join("leaderboard.txt"), &table)?;
    std::fs::write(out.join("leaderboard.json"), leaderboard_json(&entries))?;
    if !cli.quiet {
        print!("{table}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_stability(
    cli: &Cli,
    params_path: Option<&Path>,
    v_min: f64,
    v_max: f64,
    step: f64,
    vehicle_length: f64,
) -> Result<ExitCode> {
    let params = match params_path {
        Some(p) => load_idm(p)?,
        None => PAPER_IDM,
    };
    if !(step > 0.0) || !(v_max > v_min) {
        return Err(WavebenchError::InvalidParameter {
            field: "grid",
            message: format!("need step > 0 and v_max > v_min, got [{v_min}, {v_max}] step {step}"),
        });
    }
    let mut grid = Vec::new();
    let mut v = v_min;
    while v <= v_max + 1e-12 {
        if v < params.v0 {
            grid.push(v);
        }
        v += step;
    }
    let points = critical_density_scan(&params, &grid, vehicle_length)?;
    std::fs::create_dir_all(&cli.out)?;
    std::fs::write(cli.out.join("fundamental_diagram.csv"), scan_to_csv(&points))?;
    if !cli.quiet {
        match unstable_speed_band(&points) {
            Some((lo, hi)) => {
                let d_lo = points.iter().find(|p| p.speed == hi).map(|p| p.density);
                let d_hi = points.iter().find(|p| p.speed == lo).map(|p| p.density);
                println!(
                    "unstable speed band: [{}, {}] m/s (densities {} to {} veh/km)",
                    fmt_sig6(lo),
                    fmt_sig6(hi),
                    d_lo.map(fmt_sig6).unwrap_or_default(),
                    d_hi.map(fmt_sig6).unwrap_or_default()
                );
            }
            None => println!("no unstable band on the scanned grid"),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_fit(
    cli: &Cli,
    samples_path: &Path,
    beta: f64,
    model_out: Option<&Path>,
) -> Result<ExitCode> {
    let samples = load_samples_csv(&std::fs::read_to_string(samples_path)?)?;
    let outcome = fit_poly(&samples, beta)?;
    if outcome.rank_deficient {
        eprintln!("warning: sample design is rank-deficient; some coefficients are not identified");
    }
    let out_path = match model_out {
        Some(p) => p.to_path_buf(),
        None => {
            std::fs::create_dir_all(&cli.out)?;
            cli.out.join("model.json")
        }
    };
    std::fs::write(&out_path, outcome.model.to_json())?;
    if !cli.quiet {
        println!("residual norm  {}", fmt_sig6(outcome.residual_norm));
        println!("C (v^0..v^3)   {:?}", outcome.model.c);
        println!("p (a*v^0..v^2) {:?}", outcome.model.p);
        println!("q (a+^2*v^0..v^1) {:?}", outcome.model.q);
        println!("model written to {}", out_path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(cli: &Cli, dir: &Path) -> Result<ExitCode> {
    let mut rows: Vec<(String, KpiReport)> = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let kpis = entry.path().join("kpis.json");
        if kpis.is_file() {
            let report = KpiReport::from_json(&std::fs::read_to_string(&kpis)?)?;
            rows.push((entry.file_name().to_string_lossy().into_owned(), report));
        }
    }
    if rows.is_empty() {
        return Err(WavebenchError::Config(format!(
            "no <run>/kpis.json artifacts found under {}",
            dir.display()
        )));
    }
    let entries = rank_runs(&rows);
    let table = leaderboard_table(&entries);
    std::fs::write(dir.join("leaderboard.txt"), &table)?;
    std::fs::write(dir.join("leaderboard.json"), leaderboard_json(&entries))?;
    if !cli.quiet {
        print!("{table}");
    }
    Ok(ExitCode::SUCCESS)
}
