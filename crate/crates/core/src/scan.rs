//! Viscosity scans: transient growth, enhanced-dissipation rate and the
//! stability threshold, each with a log-log least-squares fit.
//!
//! Scan points run in parallel; results are gathered in input order.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::{GrowthObservable, RunConfig};
use crate::error::{Error, Result};
use crate::harness::run_simulation;
use crate::linear::{integrate_mode_with, ModeOptions, ModeState};
use crate::params::{Frequency, Params};

/// Growth runs last `GROWTH_HORIZON nu^(-1/3)`.
pub const GROWTH_HORIZON: f64 = 5.0;
/// Window `[lo, hi] nu^(-1/3)` of the decay-rate fit.
pub const DECAY_WINDOW: (f64, f64) = (2.0, 8.0);
const DECAY_BINS: usize = 24;
/// Bisection steps of the threshold scan.
pub const BISECT_ITERATIONS: usize = 10;
const MODE_TOL: f64 = 1e-8;
/// Relative slack allowed when checking responses for monotonicity.
pub const MONOTONE_TOL: f64 = 0.01;

/// Ordinary least squares on `(ln x, ln y)` with a 95% interval on the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

pub fn fit_log_log(x: &[f64], y: &[f64]) -> Result<LogLogFit> {
    if x.len() != y.len() {
        return Err(Error::FitFailure("axis and response lengths differ".into()));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::FitFailure(format!("a slope needs at least 3 points, got {n}")));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::FitFailure("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitFailure("axis values are all equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let dof = (n - 2) as f64;
    let se = (ssr / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::FitFailure(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(LogLogFit {
        slope,
        intercept,
        ci_low: slope - t * se,
        ci_high: slope + t * se,
        points: n,
    })
}

/// Checks that `y` moves monotonically in `x` (increasing if `increasing`),
/// allowing a relative slack of [`MONOTONE_TOL`].
pub fn check_monotone(x: &[f64], y: &[f64], increasing: bool) -> Result<()> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    for w in idx.windows(2) {
        let (a, b) = (y[w[0]], y[w[1]]);
        let ok = if increasing {
            b >= a * (1.0 - MONOTONE_TOL)
        } else {
            b <= a * (1.0 + MONOTONE_TOL)
        };
        if !ok {
            return Err(Error::FitFailure(format!(
                "responses not monotone: {a:.6e} at x={} then {b:.6e} at x={}",
                x[w[0]], x[w[1]]
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub kind: String,
    /// Viscosities.
    pub axis: Vec<f64>,
    /// Growth factor, decay rate or threshold per axis value.
    pub responses: Vec<f64>,
    /// Free-form per-point annotations (bisection brackets, verdicts).
    pub notes: Vec<String>,
    /// Present when there are at least 3 points.
    pub fit: Option<LogLogFit>,
}

impl ScanResult {
    pub fn write_csv_to<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "nu", "response", "note"])?;
        for ((nu, r), note) in self.axis.iter().zip(&self.responses).zip(&self.notes) {
            w.write_record([self.kind.clone(), nu.to_string(), r.to_string(), note.clone()])?;
        }
        w.flush().map_err(|e| Error::io("<scan>", e))
    }
}

/// Base parameters with `nu` replaced, keeping the Prandtl number.
pub fn params_at(base: &Params, nu: f64) -> Params {
    base.with_diffusion(nu, nu / base.prandtl())
}

fn check_axis(nu_list: &[f64]) -> Result<()> {
    if nu_list.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a scan needs at least 3 viscosities, got {}",
            nu_list.len()
        )));
    }
    if nu_list.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("viscosities must be positive".into()));
    }
    Ok(())
}

/// `(t, Omega, J)` samples of one mode.
type ModeSamples = Vec<(f64, Complex64, Complex64)>;

fn mode_trajectory(base: &RunConfig, nu: f64, t_end: f64) -> Result<(Params, ModeSamples)> {
    let params = params_at(&base.params, nu);
    params.validate(base.allow_out_of_theory)?;
    let m = base.mode;
    let init = ModeState::new(
        Frequency::new(m.k, m.eta),
        0.0,
        Complex64::new(m.omega, 0.0),
        Complex64::new(m.j, 0.0),
    );
    let traj = integrate_mode_with(init, &params, t_end, &ModeOptions::new(MODE_TOL))?;
    Ok((
        params,
        traj.samples.iter().map(|s| (s.t, s.state.omega_hat, s.state.j_hat)).collect(),
    ))
}

/// `max_t |F(t)| / |(Omega, J)(0)|` for the configured mode, where `F` is the
/// tracked observable. For one Fourier mode this is the `H^N` amplification.
pub fn growth_factor(base: &RunConfig, nu: f64) -> Result<f64> {
    let (_, traj) = mode_trajectory(base, nu, GROWTH_HORIZON / nu.cbrt())?;
    let size = base.mode.omega.hypot(base.mode.j);
    if size == 0.0 {
        return Err(Error::InvalidArgument("growth scan needs nonzero mode data".into()));
    }
    let peak = traj
        .iter()
        .map(|(_, o, j)| match base.growth_observable {
            GrowthObservable::Omega => o.norm(),
            GrowthObservable::Current => j.norm(),
        })
        .fold(0.0, f64::max);
    Ok(peak / size)
}

pub fn growth_scan(nu_list: &[f64], base: &RunConfig) -> Result<ScanResult> {
    check_axis(nu_list)?;
    let responses = nu_list
        .par_iter()
        .map(|&nu| growth_factor(base, nu))
        .collect::<Result<Vec<f64>>>()?;
    check_monotone(nu_list, &responses, false)?;
    Ok(ScanResult {
        kind: "growth".into(),
        axis: nu_list.to_vec(),
        notes: vec![String::new(); nu_list.len()],
        fit: Some(fit_log_log(nu_list, &responses)?),
        responses,
    })
}

/// Exponential rate of `|Omega_hat|` on the decay window: the upper envelope
/// of `ln |Omega_hat|` (maximum per bin) fitted by a straight line.
pub fn decay_rate(base: &RunConfig, nu: f64) -> Result<f64> {
    let tau = nu.cbrt().recip();
    let (lo, hi) = (DECAY_WINDOW.0 * tau, DECAY_WINDOW.1 * tau);
    let (_, traj) = mode_trajectory(base, nu, hi)?;
    let width = (hi - lo) / DECAY_BINS as f64;
    let mut bins = vec![(f64::NAN, f64::NEG_INFINITY); DECAY_BINS];
    for (t, o, _) in &traj {
        if *t < lo || *t > hi || o.norm() == 0.0 {
            continue;
        }
        let b = (((t - lo) / width) as usize).min(DECAY_BINS - 1);
        let v = o.norm().ln();
        if v > bins[b].1 {
            bins[b] = (*t, v);
        }
    }
    let pts: Vec<(f64, f64)> = bins.into_iter().filter(|(t, _)| t.is_finite()).collect();
    if pts.len() < 3 {
        return Err(Error::FitFailure(format!("too few samples in the decay window at nu={nu}")));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let stv: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mv)).sum();
    Ok(-stv / stt)
}

pub fn decay_scan(nu_list: &[f64], base: &RunConfig) -> Result<ScanResult> {
    check_axis(nu_list)?;
    let responses = nu_list
        .par_iter()
        .map(|&nu| decay_rate(base, nu))
        .collect::<Result<Vec<f64>>>()?;
    if let Some((nu, r)) = nu_list.iter().zip(&responses).find(|(_, r)| !(**r > 0.0)) {
        return Err(Error::FitFailure(format!("nonpositive decay rate {r} at nu={nu}")));
    }
    check_monotone(nu_list, &responses, true)?;
    let notes = nu_list
        .iter()
        .zip(&responses)
        .map(|(nu, r)| format!("rate/nu^(1/3)={:.4}", r / nu.cbrt()))
        .collect();
    Ok(ScanResult {
        kind: "decay".into(),
        axis: nu_list.to_vec(),
        notes,
        fit: Some(fit_log_log(nu_list, &responses)?),
        responses,
    })
}

/// Bootstrap verdict of one full run at `(nu, eps)` over `10 nu^(-1/3)`.
pub fn threshold_verdict(base: &RunConfig, nu: f64, eps: f64) -> Result<crate::diagnostics::Verdict> {
    let mut cfg = base.clone();
    cfg.params = params_at(&base.params, nu);
    cfg.eps = eps;
    cfg.t_end = None;
    cfg.out_dir = None;
    cfg.stop_on_violation = true;
    Ok(run_simulation(&cfg)?.verdict)
}

/// Geometric bisection of the stability threshold at one viscosity.
/// Returns `(eps_star, note)`.
pub fn bisect_threshold(base: &RunConfig, nu: f64, eps_lo: f64, eps_hi: f64) -> Result<(f64, String)> {
    if !(0.0 < eps_lo && eps_lo < eps_hi) {
        return Err(Error::InvalidArgument(format!("need 0 < eps_lo < eps_hi, got {eps_lo}, {eps_hi}")));
    }
    let lo_v = threshold_verdict(base, nu, eps_lo)?;
    let hi_v = threshold_verdict(base, nu, eps_hi)?;
    if !lo_v.is_stable() || hi_v.is_stable() {
        return Err(Error::BisectFailure {
            nu,
            eps_lo,
            eps_hi,
            lo: lo_v.to_string(),
            hi: hi_v.to_string(),
        });
    }
    let (mut a, mut b) = (eps_lo, eps_hi);
    for _ in 0..BISECT_ITERATIONS {
        let mid = (a * b).sqrt();
        if threshold_verdict(base, nu, mid)?.is_stable() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(((a * b).sqrt(), format!("bracket=[{a:.6e}, {b:.6e}]")))
}

pub fn threshold_scan(nu_list: &[f64], base: &RunConfig, eps_lo: f64, eps_hi: f64) -> Result<ScanResult> {
    if nu_list.is_empty() {
        return Err(Error::InvalidArgument("threshold scan needs at least one viscosity".into()));
    }
    let points = nu_list
        .par_iter()
        .map(|&nu| bisect_threshold(base, nu, eps_lo, eps_hi))
        .collect::<Result<Vec<_>>>()?;
    let (responses, notes): (Vec<f64>, Vec<String>) = points.into_iter().unzip();
    let fit = if nu_list.len() >= 3 {
        Some(fit_log_log(nu_list, &responses)?)
    } else {
        None
    };
    Ok(ScanResult {
        kind: "threshold".into(),
        axis: nu_list.to_vec(),
        responses,
        notes,
        fit,
    })
}
