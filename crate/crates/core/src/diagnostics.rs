//! Energy bookkeeping over solver states and the bootstrap monitor.
//!
//! All field functionals are Plancherel sums over retained modes with the
//! grid's mode measure, so single-mode states reduce to the pointwise
//! functionals of [`crate::linear`] times that measure.

use std::fmt;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{mode_table, ModeEntry};
use crate::linear::{energy_sym_unchecked, ModeState, SymState};
use crate::params::Params;
use crate::solver::MhdState;
use crate::symbols::{jap, jap_pair};
use crate::weights::WeightSet;

/// Earliest time at which the bootstrap hypotheses are checked.
pub const BOOTSTRAP_START: f64 = 0.5;
/// Right-hand side constant of the symmetric-energy hypothesis.
pub const C_SYM: f64 = 10.0;
/// `C_1`, the higher-order constant.
pub const C_HO: f64 = 4000.0;
/// Right-hand side constant of the zero-mode hypothesis.
pub const C_ZERO: f64 = 100.0;

/// Every functional of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldDiagnostics {
    pub t: f64,
    /// NaN when `beta = 0`.
    pub e_sym: f64,
    pub e_ho: f64,
    pub e_0: f64,
    pub d_sym: f64,
    pub d_ho: f64,
    pub d_0: f64,
    pub g_nu_z: f64,
    pub g_d_z: f64,
    pub g_nu_q: f64,
    pub g_d_q: f64,
    /// `||Omega_neq||_{H^N}`
    pub hn_omega_neq: f64,
    /// `||J_neq||_{H^N}`
    pub hn_j_neq: f64,
    pub u2_neq_l2: f64,
    pub b2_neq_l2: f64,
    pub u1_neq_l2: f64,
    pub b1_neq_l2: f64,
    /// `||mZ||^2 + ||mQ||^2`, the scale of the coercivity band.
    pub mzq_sqr: f64,
}

fn mode_contribution(m: &ModeEntry, o: Complex64, j: Complex64, t: f64, params: &Params, acc: &mut FieldDiagnostics) {
    let f = m.frequency();
    let s = m.eta - m.kf * t;
    let p = m.kf * m.kf + s * s;
    if m.k == 0 {
        if m.n == 0 {
            return;
        }
        let wn = jap_pair(0.0, m.eta).powi(2 * params.n as i32);
        let (o2, j2) = (o.norm_sqr(), j.norm_sqr());
        let e2 = m.eta * m.eta;
        let tt = 1.0 + t * t;
        acc.e_ho += 0.5 * wn * (o2 + j2);
        acc.d_ho += wn * p * (params.nu * o2 + params.mu * j2);
        // U_0^1 = i Omega_0 / eta, B_0^1 = i J_0 / eta
        acc.e_0 += 0.5 * wn * ((o2 + j2) / e2 + (o2 + j2) / tt);
        acc.d_0 += wn * (params.nu * o2 + params.mu * j2) * (1.0 + e2 / tt);
        return;
    }
    let w = WeightSet::at(f, t, params);
    let (o2, j2) = (o.norm_sqr(), j.norm_sqr());
    let mm = w.m * w.m;
    acc.e_ho += 0.5 * mm * (o2 + j2);
    acc.d_ho += mm * (p * (params.nu * o2 + params.mu * j2) + (w.rate_nu + w.rate_d) * (o2 + j2));

    let r = m.kf * m.kf / p;
    let (z2, q2) = (r * mm * o2, r * mm * j2);
    acc.mzq_sqr += z2 + q2;
    acc.g_nu_z += w.rate_nu * z2;
    acc.g_d_z += w.rate_d * z2;
    acc.g_nu_q += w.rate_nu * q2;
    acc.g_d_q += w.rate_d * q2;
    acc.d_sym += p * (params.nu * z2 + params.mu * q2) + (w.rate_nu + w.rate_d) * (z2 + q2);
    if params.beta != 0.0 {
        let rs = r.sqrt();
        let st = ModeState::new(f, t, o, j);
        acc.e_sym += energy_sym_unchecked(&SymState { z: o * rs, q: j * rs }, w.m, &st, params);
    }

    let wn = jap_pair(m.kf, m.eta).powi(2 * params.n as i32);
    acc.hn_omega_neq += wn * o2;
    acc.hn_j_neq += wn * j2;
    let pp = p * p;
    acc.u1_neq_l2 += s * s * o2 / pp;
    acc.b1_neq_l2 += s * s * j2 / pp;
    acc.u2_neq_l2 += r * o2 / p;
    acc.b2_neq_l2 += r * j2 / p;
}

/// Evaluates every functional in one pass over the retained modes.
pub fn evaluate(state: &MhdState, params: &Params) -> FieldDiagnostics {
    let g = state.grid();
    let t = state.time;
    let mut acc = FieldDiagnostics {
        t,
        e_sym: 0.0,
        e_ho: 0.0,
        e_0: 0.0,
        d_sym: 0.0,
        d_ho: 0.0,
        d_0: 0.0,
        g_nu_z: 0.0,
        g_d_z: 0.0,
        g_nu_q: 0.0,
        g_d_q: 0.0,
        hn_omega_neq: 0.0,
        hn_j_neq: 0.0,
        u2_neq_l2: 0.0,
        b2_neq_l2: 0.0,
        u1_neq_l2: 0.0,
        b1_neq_l2: 0.0,
        mzq_sqr: 0.0,
    };
    let (o, j) = (state.omega.as_slice(), state.j.as_slice());
    for m in mode_table(&g) {
        mode_contribution(&m, o[m.idx], j[m.idx], t, params, &mut acc);
    }
    let w = g.mode_measure();
    for v in [
        &mut acc.e_sym,
        &mut acc.e_ho,
        &mut acc.e_0,
        &mut acc.d_sym,
        &mut acc.d_ho,
        &mut acc.d_0,
        &mut acc.g_nu_z,
        &mut acc.g_d_z,
        &mut acc.g_nu_q,
        &mut acc.g_d_q,
        &mut acc.mzq_sqr,
    ] {
        *v *= w;
    }
    for v in [
        &mut acc.hn_omega_neq,
        &mut acc.hn_j_neq,
        &mut acc.u2_neq_l2,
        &mut acc.b2_neq_l2,
        &mut acc.u1_neq_l2,
        &mut acc.b1_neq_l2,
    ] {
        *v = (*v * w).sqrt();
    }
    if params.beta == 0.0 {
        acc.e_sym = f64::NAN;
    }
    acc
}

/// Symmetric energy of a state; NaN when `beta = 0`.
pub fn energy_sym_field(state: &MhdState, params: &Params) -> f64 {
    evaluate(state, params).e_sym
}

/// `1/2 (||m Omega||^2 + ||m J||^2)` over all modes.
pub fn energy_ho_field(state: &MhdState, params: &Params) -> f64 {
    evaluate(state, params).e_ho
}

/// Zero-mode energy at the state's time.
pub fn energy_zero_field(state: &MhdState, params: &Params) -> f64 {
    evaluate(state, params).e_0
}

/// `(D_sym, D_ho, D_0)`.
pub fn dissipation_fields(state: &MhdState, params: &Params) -> (f64, f64, f64) {
    let d = evaluate(state, params);
    (d.d_sym, d.d_ho, d.d_0)
}

/// Velocity and magnetic-field sizes of the non-zero modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DampingReport {
    pub t: f64,
    pub u1_neq_l2: f64,
    pub u2_neq_l2: f64,
    pub b1_neq_l2: f64,
    pub b2_neq_l2: f64,
    /// `(||(u^1, b^1)_neq|| + <t> ||(u^2, b^2)_neq||) / size`
    pub damping_ratio: f64,
    /// `<t> ||(u^2, b^2)_neq|| / size`
    pub inviscid_ratio: f64,
}

/// `size` is the reference initial size, usually `eps`; ratios are NaN when it is zero.
pub fn damping_ratios(state: &MhdState, params: &Params, size: f64) -> DampingReport {
    let d = evaluate(state, params);
    damping_from(&d, size)
}

pub fn damping_from(d: &FieldDiagnostics, size: f64) -> DampingReport {
    let second = d.u2_neq_l2.hypot(d.b2_neq_l2);
    let first = d.u1_neq_l2.hypot(d.b1_neq_l2);
    let (damping_ratio, inviscid_ratio) = if size > 0.0 {
        ((first + jap(d.t) * second) / size, jap(d.t) * second / size)
    } else {
        (f64::NAN, f64::NAN)
    };
    DampingReport {
        t: d.t,
        u1_neq_l2: d.u1_neq_l2,
        u2_neq_l2: d.u2_neq_l2,
        b1_neq_l2: d.b1_neq_l2,
        b2_neq_l2: d.b2_neq_l2,
        damping_ratio,
        inviscid_ratio,
    }
}

/// Where `E_sym` sits relative to `1/2 (1 -+ 1/(2|beta|)) (||mZ||^2 + ||mQ||^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoercivityCheck {
    pub t: f64,
    pub e_sym: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

/// Relative arithmetic slack allowed on the coercivity band.
pub const COERCIVITY_SLACK: f64 = 1e-12;

pub fn coercivity_check(d: &FieldDiagnostics, params: &Params) -> CoercivityCheck {
    let off = params.coercivity_offset();
    let lower = 0.5 * (1.0 - off) * d.mzq_sqr;
    let upper = 0.5 * (1.0 + off) * d.mzq_sqr;
    let slack = COERCIVITY_SLACK * d.mzq_sqr;
    let holds = params.beta == 0.0 || (d.e_sym >= lower - slack && d.e_sym <= upper + slack);
    CoercivityCheck {
        t: d.t,
        e_sym: d.e_sym,
        lower,
        upper,
        holds,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    #[serde(rename = "H_sym")]
    Sym,
    #[serde(rename = "H_ho")]
    Ho,
    #[serde(rename = "H_0")]
    Zero,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::Sym => "H_sym",
            Hypothesis::Ho => "H_ho",
            Hypothesis::Zero => "H_0",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Stable,
    Violated { time: f64, hypothesis: Hypothesis },
    Blowup { time: f64 },
}

impl Verdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, Verdict::Stable)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Violated { .. } => "violated",
            Verdict::Blowup { .. } => "blowup",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Stable => write!(f, "stable"),
            Verdict::Violated { time, hypothesis } => write!(f, "{hypothesis} violated at t={time}"),
            Verdict::Blowup { time } => write!(f, "blowup at t={time}"),
        }
    }
}

/// One line of the verdict JSON-lines file.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictRecord {
    pub run_id: String,
    pub verdict: &'static str,
    pub violation_time: Option<f64>,
    pub violated_hypothesis: Option<Hypothesis>,
}

impl VerdictRecord {
    pub fn new(run_id: impl Into<String>, v: &Verdict) -> Self {
        let (violation_time, violated_hypothesis) = match *v {
            Verdict::Stable => (None, None),
            Verdict::Violated { time, hypothesis } => (Some(time), Some(hypothesis)),
            Verdict::Blowup { time } => (Some(time), None),
        };
        VerdictRecord {
            run_id: run_id.into(),
            verdict: v.label(),
            violation_time,
            violated_hypothesis,
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer(&mut out, self)?;
        writeln!(out).map_err(|e| Error::io("<verdict>", e))
    }
}

/// Incremental bootstrap check: trapezoid integrals of the dissipations
/// accumulated over successive samples.
#[derive(Debug, Clone)]
pub struct BootstrapMonitor {
    eps: f64,
    integrals: [f64; 3],
    last: Option<(f64, [f64; 3])>,
    first_violation: Option<(f64, Hypothesis)>,
}

impl BootstrapMonitor {
    pub fn new(eps: f64) -> Self {
        BootstrapMonitor {
            eps,
            integrals: [0.0; 3],
            last: None,
            first_violation: None,
        }
    }

    /// `int_0^t (D_sym, D_ho, D_0)` at the last pushed sample.
    pub fn integrals(&self) -> [f64; 3] {
        self.integrals
    }

    /// Feeds one sample; returns the flag string for the ledger.
    pub fn push(&mut self, d: &FieldDiagnostics) -> String {
        let cur = [d.d_sym, d.d_ho, d.d_0];
        if let Some((t0, prev)) = self.last {
            let h = d.t - t0;
            for i in 0..3 {
                self.integrals[i] += 0.5 * h * (prev[i] + cur[i]);
            }
        }
        self.last = Some((d.t, cur));
        if d.t < BOOTSTRAP_START {
            return "H_sym=pre;H_ho=pre;H_0=pre".to_string();
        }
        let e2 = self.eps * self.eps;
        let tt = 1.0 + d.t * d.t;
        let checks = [
            (Hypothesis::Sym, d.e_sym + self.integrals[0] / 16.0, C_SYM * e2),
            (Hypothesis::Ho, d.e_ho + self.integrals[1] / 16.0, C_HO * e2 * tt),
            (Hypothesis::Zero, d.e_0 + self.integrals[2] / 16.0, C_ZERO * e2),
        ];
        let mut flags = Vec::with_capacity(3);
        for (h, lhs, rhs) in checks {
            let state = if lhs.is_nan() {
                "na"
            } else if lhs <= rhs {
                "ok"
            } else {
                if self.first_violation.is_none() {
                    self.first_violation = Some((d.t, h));
                }
                "fail"
            };
            flags.push(format!("{h}={state}"));
        }
        flags.join(";")
    }

    pub fn verdict(&self) -> Verdict {
        match self.first_violation {
            None => Verdict::Stable,
            Some((time, hypothesis)) => Verdict::Violated { time, hypothesis },
        }
    }
}

/// One ledger row: the functionals plus the bootstrap flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    #[serde(rename = "E_sym")]
    pub e_sym: f64,
    #[serde(rename = "E_ho")]
    pub e_ho: f64,
    #[serde(rename = "E_0")]
    pub e_0: f64,
    #[serde(rename = "D_sym")]
    pub d_sym: f64,
    #[serde(rename = "D_ho")]
    pub d_ho: f64,
    #[serde(rename = "D_0")]
    pub d_0: f64,
    #[serde(rename = "G_nu_Z")]
    pub g_nu_z: f64,
    #[serde(rename = "G_d_Z")]
    pub g_d_z: f64,
    #[serde(rename = "G_nu_Q")]
    pub g_nu_q: f64,
    #[serde(rename = "G_d_Q")]
    pub g_d_q: f64,
    #[serde(rename = "hN_omega_neq")]
    pub hn_omega_neq: f64,
    #[serde(rename = "hN_j_neq")]
    pub hn_j_neq: f64,
    pub u2_neq_l2: f64,
    pub b2_neq_l2: f64,
    pub u1_neq_l2: f64,
    pub b1_neq_l2: f64,
    pub bootstrap_flags: String,
}

impl LedgerRow {
    pub fn new(d: &FieldDiagnostics, bootstrap_flags: String) -> Self {
        LedgerRow {
            t: d.t,
            e_sym: d.e_sym,
            e_ho: d.e_ho,
            e_0: d.e_0,
            d_sym: d.d_sym,
            d_ho: d.d_ho,
            d_0: d.d_0,
            g_nu_z: d.g_nu_z,
            g_d_z: d.g_d_z,
            g_nu_q: d.g_nu_q,
            g_d_q: d.g_d_q,
            hn_omega_neq: d.hn_omega_neq,
            hn_j_neq: d.hn_j_neq,
            u2_neq_l2: d.u2_neq_l2,
            b2_neq_l2: d.b2_neq_l2,
            u1_neq_l2: d.u1_neq_l2,
            b1_neq_l2: d.b1_neq_l2,
            bootstrap_flags,
        }
    }

    fn functionals(&self) -> FieldDiagnostics {
        FieldDiagnostics {
            t: self.t,
            e_sym: self.e_sym,
            e_ho: self.e_ho,
            e_0: self.e_0,
            d_sym: self.d_sym,
            d_ho: self.d_ho,
            d_0: self.d_0,
            g_nu_z: self.g_nu_z,
            g_d_z: self.g_d_z,
            g_nu_q: self.g_nu_q,
            g_d_q: self.g_d_q,
            hn_omega_neq: self.hn_omega_neq,
            hn_j_neq: self.hn_j_neq,
            u2_neq_l2: self.u2_neq_l2,
            b2_neq_l2: self.b2_neq_l2,
            u1_neq_l2: self.u1_neq_l2,
            b1_neq_l2: self.b1_neq_l2,
            mzq_sqr: f64::NAN,
        }
    }
}

/// Time series of ledger rows with strictly increasing times.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub fn push(&mut self, row: LedgerRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(row.t > last.t) {
                return Err(Error::InvalidArgument(format!(
                    "ledger times must increase: {} after {}",
                    row.t, last.t
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io("<ledger>", e))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(std::io::BufWriter::new(f))
    }
}

/// Re-runs the bootstrap check over a finished ledger.
pub fn bootstrap_monitor(ledger: &EnergyLedger, eps: f64) -> Result<Verdict> {
    if ledger.is_empty() {
        return Err(Error::InvalidArgument("bootstrap monitor needs a nonempty ledger".into()));
    }
    let mut mon = BootstrapMonitor::new(eps);
    for r in &ledger.rows {
        mon.push(&r.functionals());
    }
    Ok(mon.verdict())
}
