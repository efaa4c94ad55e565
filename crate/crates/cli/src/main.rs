use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spinsqueeze_cli::scenario::{parse_config, Scenario};
use spinsqueeze_cli::{exit_code, fit, pipeline, CliError};

/// Simulator for collective spin squeezing of two driven ensembles coupled
/// through a damped acoustic mode.
#[derive(Parser)]
#[command(name = "spinsqueeze", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Directory receiving the output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Also emit static SVG charts.
    #[arg(long)]
    svg: bool,
    /// Worker threads for sweeps (defaults to the number of cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario file and write its trajectory CSV.
    Simulate {
        file: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Sweep the scenario over total spin numbers and tabulate the optimal
    /// squeezing per size.
    Sweep {
        file: PathBuf,
        /// Comma-separated total spin numbers, e.g. 20,30,40,60,100.
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Fit a power law a·N^b through a sweep table.
    Fit {
        csv: PathBuf,
        /// Column fitted against n_tot.
        #[arg(long, default_value = "min_xi_r2")]
        column: String,
    },
    /// Run the parity experiment over several total spin numbers.
    Parity {
        file: PathBuf,
        /// Comma-separated total spin numbers, e.g. 40,39,38,37,36.
        #[arg(long, value_delimiter = ',', required = true)]
        n_tot: Vec<usize>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Compare the unreduced model against the projected Hamiltonian for a
    /// drive-style scenario at small spin numbers.
    OracleCheck {
        file: PathBuf,
        /// Phonon Fock cutoff of the unreduced model.
        #[arg(long, default_value_t = 2)]
        n_ph_max: usize,
        /// Override the comparison window (seconds).
        #[arg(long)]
        t_max: Option<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn load_scenario(path: &PathBuf) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_config(&text, &path.display().to_string())
}

fn configure_threads(common: &CommonOpts) {
    if let Some(n) = common.threads {
        // ignore failure: the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn read_fit_points(path: &PathBuf, column: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Invalid("empty fit input".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let parse_row = |line: &str, idx_x: usize, idx_y: usize| -> Option<(f64, f64)> {
        let fields: Vec<&str> = line.split(',').collect();
        let x = fields.get(idx_x)?.trim().parse::<f64>().ok()?;
        let y = fields.get(idx_y)?.trim().parse::<f64>().ok()?;
        Some((x, y))
    };
    let points: Vec<(f64, f64)> = if cols.first() == Some(&"n_tot") {
        let idx_y = cols
            .iter()
            .position(|c| *c == column)
            .ok_or_else(|| CliError::Invalid(format!("column `{column}` not in header")))?;
        lines.filter_map(|l| parse_row(l, 0, idx_y)).collect()
    } else {
        // plain two-column data, first line may already be numeric
        let mut pts: Vec<(f64, f64)> = Vec::new();
        if let Some(p) = parse_row(header, 0, 1) {
            pts.push(p);
        }
        pts.extend(lines.filter_map(|l| parse_row(l, 0, 1)));
        pts
    };
    Ok(points)
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { file, common } => {
            configure_threads(&common);
            let s = load_scenario(&file)?;
            let records = pipeline::run_scenario(&s, &common.out_dir, common.svg)?;
            let best = records
                .iter()
                .min_by(|a, b| a.xi_r2.total_cmp(&b.xi_r2))
                .expect("at least two samples");
            println!(
                "{}: {} samples, min xi_s2 = {:.6}, min xi_r2 = {:.6} at t = {:.3} us",
                s.name,
                records.len(),
                records.iter().map(|r| r.xi_s2).fold(f64::INFINITY, f64::min),
                best.xi_r2,
                best.time * 1e6
            );
        }
        Command::Sweep { file, n_list, common } => {
            configure_threads(&common);
            let s = load_scenario(&file)?;
            let rows = pipeline::run_sweep(&s, &n_list, &common.out_dir, common.svg)?;
            for r in &rows {
                println!(
                    "n_tot {:4}: min xi_r2 = {:.6}, min xi_s2 = {:.6}, t_opt = {:.3} us",
                    r.n_tot,
                    r.min_xi_r2,
                    r.min_xi_s2,
                    r.t_opt * 1e6
                );
            }
        }
        Command::Fit { csv, column } => {
            let points = read_fit_points(&csv, &column)?;
            let fit = fit::fit_power_law(&points)?;
            println!(
                "fit: {column} = {:.6} * N^({:.6}), log-rms residual {:.3e}, {} points",
                fit.prefactor, fit.exponent, fit.residual, fit.points
            );
        }
        Command::Parity { file, n_tot, common } => {
            configure_threads(&common);
            let s = load_scenario(&file)?;
            let rows = pipeline::run_parity(&s, &n_tot, &common.out_dir, common.svg)?;
            for r in &rows {
                let show = |v: Option<f64>| {
                    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into())
                };
                println!(
                    "n_tot {:4}: window-1 peak 1/xi_s2 = {}, window-2 peak = {}, \
                     jx2({:.2} us) = {:.4}",
                    r.n_tot,
                    show(r.w1_peak),
                    show(r.w2_peak),
                    r.t_cmp * 1e6,
                    r.jx2_at_cmp
                );
            }
        }
        Command::OracleCheck { file, n_ph_max, t_max, common } => {
            configure_threads(&common);
            let s = load_scenario(&file)?;
            let report = pipeline::oracle_check(&s, n_ph_max, t_max, &common.out_dir)?;
            println!(
                "oracle-check {}: min fidelity {:.5}, max leakage {:.5}, \
                 max phonon occupation {:.5} -> {}",
                s.name,
                report.min_fidelity,
                report.max_leakage,
                report.max_phonon_mean,
                if report.pass { "PASS" } else { "FAIL" }
            );
            if !report.pass {
                return Err(CliError::OracleFailed {
                    fidelity: report.min_fidelity,
                    leakage: report.max_leakage,
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::from(exit_code::SUCCESS as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
