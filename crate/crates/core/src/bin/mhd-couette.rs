use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use mhd_couette::audit::{all_reports, weights_check_report, write_reports_csv};
use mhd_couette::config::{parse_config, RunConfig};
use mhd_couette::harness::run_simulation;
use mhd_couette::linear::{integrate_mode, verify_prop_keylin, ModeState};
use mhd_couette::scan::{decay_scan, growth_scan, threshold_scan, ScanResult};
use mhd_couette::{Error, Frequency, Params, Result};

#[derive(Parser)]
#[command(name = "mhd-couette", version, about = "MHD Couette-flow stability toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one linearised Fourier mode and write its trajectory as CSV.
    LinearMode(LinearModeArgs),
    /// Run a full nonlinear simulation from a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Transient-growth amplification against viscosity.
    GrowthScan(ScanArgs),
    /// Enhanced-dissipation rate against viscosity.
    DecayScan(ScanArgs),
    /// Stability threshold in eps against viscosity.
    ThresholdScan {
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long, default_value_t = 1e-6)]
        eps_lo: f64,
        #[arg(long, default_value_t = 10.0)]
        eps_hi: f64,
    },
    /// Run every pointwise inequality audit.
    Audit {
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare closed-form weights with integration of their equations.
    WeightsCheck {
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct LinearModeArgs {
    #[arg(long, allow_hyphen_values = true)]
    k: i64,
    #[arg(long, allow_hyphen_values = true)]
    eta: f64,
    #[arg(long)]
    nu: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    omega_re: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    omega_im: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    j_re: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    j_im: f64,
    /// Defaults to `5 nu^(-1/3)`.
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    allow_out_of_theory: bool,
    /// Also check the monotone functional and the decay bounds.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated viscosities.
    #[arg(long, value_delimiter = ',', required = true)]
    nu: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn report_scan(res: &ScanResult, out: Option<&Path>) -> Result<()> {
    res.write_csv_to(output(out)?)?;
    if let Some(f) = res.fit {
        eprintln!(
            "{} slope {:.4} (95% CI {:.4} .. {:.4}, {} points)",
            res.kind, f.slope, f.ci_low, f.ci_high, f.points
        );
    }
    Ok(())
}

fn linear_mode(a: &LinearModeArgs) -> Result<()> {
    let params = Params::new(a.nu, a.mu, a.beta);
    params.validate(a.allow_out_of_theory)?;
    let t_end = match a.t_end {
        Some(t) => t,
        None if a.nu > 0.0 => 5.0 / params.nu_third(),
        None => return Err(Error::InvalidArgument("--t-end is required when nu = 0".into())),
    };
    let init = ModeState::new(
        Frequency::new(a.k, a.eta),
        0.0,
        Complex64::new(a.omega_re, a.omega_im),
        Complex64::new(a.j_re, a.j_im),
    );
    let traj = integrate_mode(init, &params, t_end, a.tol)?;
    traj.write_csv_to(output(a.out.as_deref())?)?;
    if a.verify {
        let r = verify_prop_keylin(&traj, &params)?;
        eprintln!(
            "verified: energy ratio {:.6}, C_zq {:.4}, C_oj {:.4}, C_u2 {:.4}",
            r.energy_ratio_max, r.fitted_c_zq, r.fitted_c_oj, r.fitted_c_u2
        );
    }
    Ok(())
}

fn scan_config(path: &Path) -> Result<RunConfig> {
    parse_config(path)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::LinearMode(a) => linear_mode(&a),
        Command::Simulate { config, out_dir } => {
            let mut cfg = parse_config(&config)?;
            if out_dir.is_some() {
                cfg.out_dir = out_dir;
            }
            let out = run_simulation(&cfg)?;
            eprintln!(
                "{}: {} after {} steps ({:.1}s)",
                cfg.run_id, out.verdict, out.steps, out.wall_time_s
            );
            if !out.coercivity_holds() {
                return Err(Error::VerificationFailure {
                    clause: "coercivity",
                    time: out.coercivity.iter().find(|c| !c.holds).map_or(f64::NAN, |c| c.t),
                    detail: "symmetric energy left its coercivity band".into(),
                });
            }
            Ok(())
        }
        Command::GrowthScan(s) => report_scan(&growth_scan(&s.nu, &scan_config(&s.config)?)?, s.out.as_deref()),
        Command::DecayScan(s) => report_scan(&decay_scan(&s.nu, &scan_config(&s.config)?)?, s.out.as_deref()),
        Command::ThresholdScan { scan, eps_lo, eps_hi } => report_scan(
            &threshold_scan(&scan.nu, &scan_config(&scan.config)?, eps_lo, eps_hi)?,
            scan.out.as_deref(),
        ),
        Command::Audit { samples, seed, out } => {
            let reports = all_reports(samples, seed);
            write_reports_csv(output(out.as_deref())?, &reports)?;
            match reports.into_iter().find(|r| !r.passed()) {
                Some(r) => Err(Error::AuditFailure(Box::new(r))),
                None => Ok(()),
            }
        }
        Command::WeightsCheck { samples, seed, tol, out } => {
            let r = weights_check_report(samples, seed, tol);
            write_reports_csv(output(out.as_deref())?, std::slice::from_ref(&r))?;
            r.require().map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::AuditFailure(_)
                | Error::VerificationFailure { .. }
                | Error::FitFailure(_)
                | Error::BisectFailure { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
