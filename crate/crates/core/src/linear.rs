//! Linearised dynamics of a single Fourier mode.
//!
//! `d/dt Omega = -nu p Omega + i beta k J`,
//! `d/dt J = -mu p J + (p'/p) J + i beta k Omega`.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{dopri5_step, StepController};
use crate::params::{Frequency, Params};
use crate::symbols::{dt_p_symbol, dtt_p_symbol, jap, jap_pair, log_dt_p, p_integral, p_symbol, sym_factor};
use crate::weights::WeightSet;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `(Omega_hat, J_hat)` at one frequency and time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeState {
    pub omega_hat: Complex64,
    pub j_hat: Complex64,
    pub frequency: Frequency,
    pub time: f64,
}

impl ModeState {
    pub fn new(frequency: Frequency, time: f64, omega_hat: Complex64, j_hat: Complex64) -> Self {
        ModeState {
            omega_hat,
            j_hat,
            frequency,
            time,
        }
    }
}

/// Symmetric variables `(Z, Q) = sqrt(k^2/p) (Omega_hat, J_hat)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymState {
    pub z: Complex64,
    pub q: Complex64,
}

pub fn sym_transform(state: &ModeState) -> SymState {
    let s = sym_factor(state.frequency, state.time);
    SymState {
        z: state.omega_hat * s,
        q: state.j_hat * s,
    }
}

/// Right-hand side of the linearised system; pure diffusion on `k = 0`.
pub fn linear_rhs(state: &ModeState, params: &Params) -> (Complex64, Complex64) {
    let f = state.frequency;
    let t = state.time;
    let p = p_symbol(f, t);
    let (o, j) = (state.omega_hat, state.j_hat);
    if f.k == 0 {
        return (-params.nu * p * o, -params.mu * p * j);
    }
    let c = I * (params.beta * f.kf());
    (-params.nu * p * o + c * j, -params.mu * p * j + log_dt_p(f, t) * j + c * o)
}

/// Velocity `(U^1, U^2) = (-i(eta - kt), ik) Psi_hat`, `Psi_hat = -Omega_hat/p`.
pub fn mode_velocity(f: Frequency, t: f64, omega_hat: Complex64) -> (Complex64, Complex64) {
    let p = p_symbol(f, t);
    if p == 0.0 {
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let psi = -omega_hat / p;
    let k = f.kf();
    (-I * (f.eta - k * t) * psi, I * k * psi)
}

fn require_nonzero(state: &ModeState, what: &str) -> Result<()> {
    if state.frequency.k == 0 {
        return Err(Error::InvalidArgument(format!("{what} is undefined for k = 0")));
    }
    Ok(())
}

fn require_beta(params: &Params, what: &str) -> Result<()> {
    if params.beta == 0.0 {
        return Err(Error::InvalidArgument(format!("{what} is undefined for beta = 0")));
    }
    Ok(())
}

/// `1/2 (|mZ|^2 + |mQ|^2 - Re(p'/(beta i k p) mZ conj(mQ)))`.
pub fn energy_sym_pointwise(sym: &SymState, w: &WeightSet, state: &ModeState, params: &Params) -> Result<f64> {
    require_nonzero(state, "symmetric energy")?;
    require_beta(params, "symmetric energy")?;
    Ok(energy_sym_unchecked(sym, w.m, state, params))
}

pub(crate) fn energy_sym_unchecked(sym: &SymState, m: f64, state: &ModeState, params: &Params) -> f64 {
    let f = state.frequency;
    let (mz, mq) = (sym.z * m, sym.q * m);
    let coef = log_dt_p(f, state.time) / (params.beta * f.kf());
    // p'/(beta i k p) = -i coef
    let mixed = (-I * coef * mz * mq.conj()).re;
    0.5 * (mz.norm_sqr() + mq.norm_sqr() - mixed)
}

/// `nu p |mZ|^2 + mu p |mQ|^2 + (rate_nu + rate_d)(|mZ|^2 + |mQ|^2)`.
pub fn dissipation_sym_pointwise(sym: &SymState, w: &WeightSet, state: &ModeState, params: &Params) -> Result<f64> {
    require_nonzero(state, "symmetric dissipation")?;
    Ok(dissipation_sym_unchecked(sym, w, state, params))
}

pub(crate) fn dissipation_sym_unchecked(sym: &SymState, w: &WeightSet, state: &ModeState, params: &Params) -> f64 {
    let p = p_symbol(state.frequency, state.time);
    let z2 = (sym.z * w.m).norm_sqr();
    let q2 = (sym.q * w.m).norm_sqr();
    params.nu * p * z2 + params.mu * p * q2 + (w.rate_nu + w.rate_d) * (z2 + q2)
}

/// The six majorants `L0..L5` of the symmetric-energy error.
pub fn linear_error_terms(sym: &SymState, w: &WeightSet, state: &ModeState, params: &Params) -> Result<[f64; 6]> {
    require_nonzero(state, "linear error terms")?;
    require_beta(params, "linear error terms")?;
    let f = state.frequency;
    let t = state.time;
    let p = p_symbol(f, t);
    let pd = dt_p_symbol(f, t).abs();
    let pdd = dtt_p_symbol(f).abs();
    let bk = params.beta.abs() * f.kf().abs();
    let a = (sym.z * w.m).norm();
    let b = (sym.q * w.m).norm();
    let ab = a * b;
    let r = pd / (bk * p);
    Ok([
        params.delta0 * params.nu_third() * (1.0 + r) * (a * a + b * b),
        (params.nu + params.mu) * pd / (2.0 * bk) * ab,
        r * w.rate_nu * ab,
        (p * pdd + pd * pd) / (2.0 * bk * p * p) * ab,
        r * w.rate_d * ab,
        r * w.rate_s * ab,
    ])
}

/// One recorded point of a mode trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: ModeState,
    pub sym: SymState,
    pub weights: WeightSet,
    /// Symmetric energy; NaN when `beta = 0`, zero on `k = 0`.
    pub e_sym: f64,
    pub d_sym: f64,
    /// `L0..L5`; NaN when `beta = 0`, zero on `k = 0`.
    pub l: [f64; 6],
}

impl TrajectorySample {
    pub fn evaluate(state: ModeState, params: &Params) -> Self {
        let sym = sym_transform(&state);
        let weights = WeightSet::at(state.frequency, state.time, params);
        let (e_sym, d_sym, l) = if state.frequency.k == 0 {
            (0.0, 0.0, [0.0; 6])
        } else {
            let d = dissipation_sym_unchecked(&sym, &weights, &state, params);
            if params.beta == 0.0 {
                (f64::NAN, d, [f64::NAN; 6])
            } else {
                let e = energy_sym_unchecked(&sym, weights.m, &state, params);
                let l = linear_error_terms(&sym, &weights, &state, params).expect("k != 0 and beta != 0");
                (e, d, l)
            }
        };
        TrajectorySample {
            t: state.time,
            state,
            sym,
            weights,
            e_sym,
            d_sym,
            l,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeTrajectory {
    pub samples: Vec<TrajectorySample>,
}

impl ModeTrajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory is never empty")
    }

    /// `int D_sym dt` by the trapezoid rule on the recorded grid, cumulative.
    pub fn cumulative_dissipation(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.samples.len());
        out.push(0.0);
        for w in self.samples.windows(2) {
            acc += 0.5 * (w[1].t - w[0].t) * (w[0].d_sym + w[1].d_sym);
            out.push(acc);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(std::io::BufWriter::new(file))
    }

    /// Columns: t, Re/Im of Omega, J, Z, Q, E_sym, D_sym, L0..L5, m_d, m_nu, m_s.
    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "t", "re_omega", "im_omega", "re_j", "im_j", "re_z", "im_z", "re_q", "im_q", "e_sym", "d_sym", "l0",
            "l1", "l2", "l3", "l4", "l5", "m_d", "m_nu", "m_s",
        ])?;
        for s in &self.samples {
            let mut row = vec![
                s.t,
                s.state.omega_hat.re,
                s.state.omega_hat.im,
                s.state.j_hat.re,
                s.state.j_hat.im,
                s.sym.z.re,
                s.sym.z.im,
                s.sym.q.re,
                s.sym.q.im,
                s.e_sym,
                s.d_sym,
            ];
            row.extend_from_slice(&s.l);
            row.extend_from_slice(&[s.weights.m_d, s.weights.m_nu, s.weights.m_s]);
            w.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Options of the adaptive per-mode integrator.
#[derive(Debug, Clone)]
pub struct ModeOptions {
    /// Relative local error bound on `|(Omega, J)|`.
    pub tol: f64,
    /// Upper bound on the step, which also sets the recording density.
    pub max_step: f64,
    /// Extra times the integrator must land on exactly.
    pub stops: Vec<f64>,
    /// Record only the stops (plus the endpoints) instead of every step.
    pub record_stops_only: bool,
}

impl ModeOptions {
    pub fn new(tol: f64) -> Self {
        ModeOptions {
            tol,
            max_step: 0.05,
            stops: Vec::new(),
            record_stops_only: false,
        }
    }
}

/// Integrates the linearised mode from `initial.time` to `t_end`.
pub fn integrate_mode(initial: ModeState, params: &Params, t_end: f64, tol: f64) -> Result<ModeTrajectory> {
    integrate_mode_with(initial, params, t_end, &ModeOptions::new(tol))
}

#[inline]
fn pack(o: Complex64, j: Complex64) -> [f64; 4] {
    [o.re, o.im, j.re, j.im]
}

pub fn integrate_mode_with(initial: ModeState, params: &Params, t_end: f64, opts: &ModeOptions) -> Result<ModeTrajectory> {
    let t0 = initial.time;
    if !(t_end > t0) {
        return Err(Error::InvalidArgument(format!("t_end = {t_end} must exceed the start time {t0}")));
    }
    if !(opts.tol > 0.0) || !(opts.max_step > 0.0) {
        return Err(Error::InvalidArgument("tolerance and max_step must be positive".into()));
    }
    let f = initial.frequency;
    let mut stops: Vec<f64> = opts.stops.iter().copied().filter(|&s| s > t0 && s < t_end).collect();
    stops.push(t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut samples = vec![TrajectorySample::evaluate(initial, params)];
    if f.k == 0 {
        // pure diffusion, exact
        let times: Vec<f64> = if opts.record_stops_only {
            stops.clone()
        } else {
            let n = ((t_end - t0) / opts.max_step).ceil().max(1.0) as usize;
            let mut v: Vec<f64> = (1..n).map(|i| t0 + (t_end - t0) * i as f64 / n as f64).collect();
            v.extend(&stops);
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        for t in times {
            let ip = p_integral(f, t0, t);
            let s = ModeState::new(
                f,
                t,
                initial.omega_hat * (-params.nu * ip).exp(),
                initial.j_hat * (-params.mu * ip).exp(),
            );
            samples.push(TrajectorySample::evaluate(s, params));
        }
        return Ok(ModeTrajectory { samples });
    }

    let c = params.beta * f.kf();
    let dmu = params.mu - params.nu;
    let mut t = t0;
    let mut u = pack(initial.omega_hat, initial.j_hat);
    let min_step = 1e-13 * (t_end - t0).max(1.0);
    let mut ctl = StepController::new(opts.max_step.min(0.01), opts.max_step, min_step);
    let mut next_stop = 0;
    while t < t_end {
        let target = stops[next_stop];
        let h = ctl.h.min(target - t);
        let tn = t;
        // v-variables: (Omega e^{nu int p}, J e^{mu int p}) relative to tn
        let mut rhs = |s: f64, v: &[f64; 4]| {
            let ratio = (-dmu * p_integral(f, tn, s)).exp(); // E_mu / E_nu
            let vo = Complex64::new(v[0], v[1]);
            let vj = Complex64::new(v[2], v[3]);
            let dvo = I * c * ratio * vj;
            let dvj = log_dt_p(f, s) * vj + I * c * vo / ratio;
            pack(dvo, dvj)
        };
        let (v1, err) = dopri5_step(&mut rhs, tn, &u, h);
        let ip = p_integral(f, tn, tn + h);
        let (eo, ej) = ((-params.nu * ip).exp(), (-params.mu * ip).exp());
        let u1 = [v1[0] * eo, v1[1] * eo, v1[2] * ej, v1[3] * ej];
        let eu = [err[0] * eo, err[1] * eo, err[2] * ej, err[3] * ej];
        let norm = |x: &[f64; 4]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let scale = norm(&u).max(norm(&u1));
        let en = if scale > 0.0 { norm(&eu) / (opts.tol * scale) } else { 0.0 };
        if ctl.update(en, t)? {
            let landed = h == target - t;
            t = if landed { target } else { tn + h };
            u = u1;
            if landed {
                next_stop += 1;
            }
            if !opts.record_stops_only || landed {
                let s = ModeState::new(f, t, Complex64::new(u[0], u[1]), Complex64::new(u[2], u[3]));
                samples.push(TrajectorySample::evaluate(s, params));
            }
        }
    }
    Ok(ModeTrajectory { samples })
}

/// Fitted and derived constants from checking a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct KeylinReport {
    /// `max_t (E_sym(t) + int D_sym/16) / E_sym(0)`.
    pub energy_ratio_max: f64,
    /// `max_t |(Z,Q)(t)| e^{delta0 nu^(1/3) t} / |(Z,Q)(0)|`.
    pub fitted_c_zq: f64,
    /// `max_t (|Omega|+|J|)(t) e^{delta0 nu^(1/3) t} / (<t> (|Omega|+|J|)(0))`.
    pub fitted_c_oj: f64,
    /// `max_t <t>|U^2|(t) e^{delta0 nu^(1/3) t} / (|Omega|+|J|)(0)`.
    pub fitted_c_u2: f64,
    pub samples: usize,
}

/// Checks the monotone functional, the decay of `(Z, Q)` and `(Omega, J)`
/// and the pointwise velocity bounds along a trajectory, with relative
/// tolerance `1e-4` on the energy clause.
pub fn verify_prop_keylin(traj: &ModeTrajectory, params: &Params) -> Result<KeylinReport> {
    verify_prop_keylin_tol(traj, params, 1e-4)
}

pub fn verify_prop_keylin_tol(traj: &ModeTrajectory, params: &Params, tol: f64) -> Result<KeylinReport> {
    let first = &traj.samples[0];
    let f = first.state.frequency;
    let fail = |clause: &'static str, time: f64, detail: String| Err(Error::VerificationFailure { clause, time, detail });
    let mut report = KeylinReport {
        energy_ratio_max: 0.0,
        fitted_c_zq: 0.0,
        fitted_c_oj: 0.0,
        fitted_c_u2: 0.0,
        samples: traj.samples.len(),
    };
    let zq0 = first.sym.z.norm().hypot(first.sym.q.norm());
    let oj0 = first.state.omega_hat.norm() + first.state.j_hat.norm();
    if f.k == 0 || (zq0 == 0.0 && oj0 == 0.0) {
        return Ok(report);
    }
    require_beta(params, "the symmetric-energy bound")?;
    let c = params.coercivity_offset();
    if c >= 1.0 {
        return Err(Error::Validation("|beta| > 1/2".into()));
    }
    let e0 = first.e_sym;
    let cum = traj.cumulative_dissipation();
    let band = ((1.0 + c) / (1.0 - c)).sqrt();
    let rate = params.delta0 * params.nu_third();
    let m0 = first.weights.m;
    let t0 = first.t;
    for (s, d) in traj.samples.iter().zip(&cum) {
        let t = s.t;
        // (a)
        let lhs = s.e_sym + d / 16.0;
        if lhs > e0 * (1.0 + tol) {
            return fail("a", t, format!("E_sym + int D/16 = {lhs:e} > E_sym(0) = {e0:e}"));
        }
        report.energy_ratio_max = report.energy_ratio_max.max(lhs / e0);
        // (b): coercivity turns (a) into |m(Z,Q)(t)| <= band |m(Z,Q)(0)|
        let decay = (-rate * (t - t0)).exp();
        let zq = s.sym.z.norm().hypot(s.sym.q.norm());
        let bound_zq = band * (m0 / s.weights.m) * zq0;
        if zq > bound_zq * (1.0 + tol) {
            return fail("b", t, format!("|(Z,Q)| = {zq:e} > {bound_zq:e}"));
        }
        report.fitted_c_zq = report.fitted_c_zq.max(zq / (decay * zq0));
        // (c): |Omega| + |J| = <eta/k - t>(|Z| + |Q|)
        let oj = s.state.omega_hat.norm() + s.state.j_hat.norm();
        let growth = jap(f.eta / f.kf() - t);
        let bound_oj = std::f64::consts::SQRT_2 * growth * bound_zq;
        if oj > bound_oj * (1.0 + tol) {
            return fail("c", t, format!("|Omega| + |J| = {oj:e} > {bound_oj:e}"));
        }
        report.fitted_c_oj = report.fitted_c_oj.max(oj / (jap(t) * decay * oj0));
        // (d)
        let (u1, u2) = mode_velocity(f, t, s.state.omega_hat);
        let z = s.sym.z.norm();
        let slack = 1e-12 * z + f64::MIN_POSITIVE;
        if u1.norm() > z + slack {
            return fail("d", t, format!("|U^1| = {:e} > |Z| = {z:e}", u1.norm()));
        }
        let lhs2 = jap(t) * u2.norm();
        let rhs2 = jap_pair(f.kf(), f.eta) * z;
        if lhs2 > rhs2 * (1.0 + 1e-12) + f64::MIN_POSITIVE {
            return fail("d", t, format!("<t>|U^2| = {lhs2:e} > <|k,eta|>|Z| = {rhs2:e}"));
        }
        report.fitted_c_u2 = report.fitted_c_u2.max(lhs2 / (decay * oj0));
    }
    Ok(report)
}
