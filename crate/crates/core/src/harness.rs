//! Full simulation runs: stepping, ledger sampling, snapshots and run artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;
use crate::diagnostics::{
    coercivity_check, evaluate, BootstrapMonitor, CoercivityCheck, EnergyLedger, LedgerRow, Verdict, VerdictRecord,
};
use crate::error::{Error, Result};
use crate::snapshot::write_snapshot;
use crate::solver::{make_initial_data, MhdState, Solver};

/// Everything a run produces in memory.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub ledger: EnergyLedger,
    pub final_state: MhdState,
    pub verdict: Verdict,
    /// Coercivity check of every ledger row.
    pub coercivity: Vec<CoercivityCheck>,
    pub steps: usize,
    pub wall_time_s: f64,
    /// Files written, in order.
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn coercivity_holds(&self) -> bool {
        self.coercivity.iter().all(|c| c.holds)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    run_id: &'a str,
    library_version: &'static str,
    config: &'a str,
    steps: usize,
    final_time: f64,
    verdict: String,
    wall_time_s: f64,
}

/// Runs from the random initial data described by the config.
pub fn run_simulation(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let state = make_initial_data(cfg.grid, &cfg.initial_data_spec())?;
    run_from_state(cfg, state)
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Runs from a given initial state (its time is the start time).
pub fn run_from_state(cfg: &RunConfig, initial: MhdState) -> Result<RunOutcome> {
    let clock = Instant::now();
    if initial.grid() != cfg.grid {
        return Err(Error::InvalidArgument("initial state grid differs from the configured grid".into()));
    }
    let t_end = cfg.horizon();
    let params = cfg.params;
    let mut solver = Solver::new(cfg.grid, params);
    solver.set_nonlinear(cfg.nonlinear);
    if cfg.eps > 0.0 {
        solver.ceiling = Some(cfg.blowup_factor * cfg.eps);
    }
    let out_dir = cfg.out_dir.as_deref();
    if let Some(d) = out_dir {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }

    let mut snaps: Vec<f64> = cfg.snapshot_times.iter().copied().filter(|&t| t <= t_end).collect();
    snaps.sort_by(f64::total_cmp);
    snaps.dedup();
    let mut next_snap = 0;
    let mut files = Vec::new();

    let mut ledger = EnergyLedger::default();
    let mut coercivity = Vec::new();
    let mut monitor = BootstrapMonitor::new(cfg.eps);
    let mut record = |s: &MhdState, ledger: &mut EnergyLedger, monitor: &mut BootstrapMonitor| -> Result<()> {
        let d = evaluate(s, &params);
        coercivity.push(coercivity_check(&d, &params));
        let flags = monitor.push(&d);
        ledger.push(LedgerRow::new(&d, flags))
    };

    let mut state = initial;
    solver.prime(&state);
    record(&state, &mut ledger, &mut monitor)?;
    let write_due = |s: &MhdState, next: &mut usize, files: &mut Vec<PathBuf>| -> Result<()> {
        while *next < snaps.len() && (snaps[*next] < s.time || same_time(snaps[*next], s.time)) {
            if let Some(d) = out_dir {
                let path = d.join(format!("{}_t{}.mhdc", cfg.run_id, snaps[*next]));
                write_snapshot(&path, s, &params)?;
                files.push(path);
            }
            *next += 1;
        }
        Ok(())
    };
    write_due(&state, &mut next_snap, &mut files)?;

    let mut verdict = None;
    let mut steps = 0usize;
    while state.time < t_end && !same_time(state.time, t_end) {
        let target = snaps.get(next_snap).copied().unwrap_or(t_end).min(t_end);
        let mut dt = solver.stable_dt(cfg.dt_max);
        let mut exact = None;
        if state.time + dt >= target || same_time(state.time + dt, target) {
            dt = target - state.time;
            exact = Some(target);
        }
        match solver.step(&state, dt) {
            Ok(mut s) => {
                if let Some(t) = exact {
                    s.time = t;
                }
                state = s;
            }
            Err(Error::BlowupDetected { time, .. }) => {
                verdict = Some(Verdict::Blowup { time });
                break;
            }
            Err(e) => return Err(e),
        }
        steps += 1;
        let at_end = same_time(state.time, t_end);
        if steps.is_multiple_of(cfg.ledger_stride) || at_end || exact.is_some() {
            record(&state, &mut ledger, &mut monitor)?;
        }
        write_due(&state, &mut next_snap, &mut files)?;
        if cfg.stop_on_violation && !monitor.verdict().is_stable() {
            break;
        }
    }
    // report whichever happened first; a blowup ends the run
    let verdict = match (monitor.verdict(), verdict) {
        (v @ Verdict::Violated { .. }, _) => v,
        (_, Some(b)) => b,
        (v, None) => v,
    };
    let wall_time_s = clock.elapsed().as_secs_f64();

    if let Some(d) = out_dir {
        let path = d.join(format!("{}_ledger.csv", cfg.run_id));
        ledger.write_csv(&path)?;
        files.push(path);
        let path = d.join(format!("{}_verdict.jsonl", cfg.run_id));
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        VerdictRecord::new(cfg.run_id.clone(), &verdict).write_jsonl(&mut f)?;
        files.push(path);
        let echo = cfg.echo();
        let manifest = Manifest {
            run_id: &cfg.run_id,
            library_version: env!("CARGO_PKG_VERSION"),
            config: &echo,
            steps,
            final_time: state.time,
            verdict: verdict.to_string(),
            wall_time_s,
        };
        let path = d.join(format!("{}_manifest.json", cfg.run_id));
        write_json(&path, &manifest)?;
        files.push(path);
    }

    Ok(RunOutcome {
        ledger,
        final_state: state,
        verdict,
        coercivity,
        steps,
        wall_time_s,
        files,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f).map_err(|e| Error::io(path, e))
}
