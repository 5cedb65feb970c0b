//! Randomised pointwise audits of the symbol and weight inequalities.
//!
//! Samples are drawn in fixed-size chunks, each chunk from its own ChaCha
//! stream, so a report depends only on `(samples, seed)` and never on how
//! many worker threads evaluated it.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{Frequency, Params};
use crate::symbols::{dt_p_symbol, jap, jap_pair, p_symbol, resonant_interval, sym_factor};
use crate::weights::{self, WeightSet};

const CHUNK: u64 = 2048;

/// Sampling ranges shared by all audits.
pub const K_MAX: i64 = 64;
pub const ETA_MAX: f64 = 256.0;
pub const T_MAX: f64 = 1e3;
pub const LOG10_NU_RANGE: (f64, f64) = (-8.0, -1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditVerdict {
    Pass,
    Fail,
}

impl fmt::Display for AuditVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuditVerdict::Pass => "pass",
            AuditVerdict::Fail => "fail",
        })
    }
}

/// Outcome of one audit. `min_slack` is `(rhs - lhs)/|rhs|` at the worst
/// sample, so a negative value is a violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub audit_name: String,
    pub samples: u64,
    pub violations: u64,
    pub min_slack: f64,
    pub argmin_k: i64,
    pub argmin_eta: f64,
    pub argmin_t: f64,
    /// Remaining coordinates of the worst sample and class counts.
    pub detail: String,
    pub seed: u64,
    pub verdict: AuditVerdict,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.verdict == AuditVerdict::Pass
    }

    /// Turns a failing report into `Error::AuditFailure`.
    pub fn require(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::AuditFailure(Box::new(self)))
        }
    }
}

pub const CSV_HEADER: [&str; 7] = [
    "audit_name",
    "samples",
    "min_slack",
    "argmin_k",
    "argmin_eta",
    "argmin_t",
    "verdict",
];

/// Writes reports as CSV with the columns of [`CSV_HEADER`].
pub fn write_reports_csv<W: Write>(out: W, reports: &[AuditReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record([
            r.audit_name.clone(),
            r.samples.to_string(),
            format!("{:e}", r.min_slack),
            r.argmin_k.to_string(),
            r.argmin_eta.to_string(),
            r.argmin_t.to_string(),
            r.verdict.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// One evaluated sample.
#[derive(Debug, Clone)]
pub struct Probe {
    pub slack: f64,
    pub k: i64,
    pub eta: f64,
    pub t: f64,
    /// Extra coordinates, rendered into `detail` for the worst sample.
    pub extra: Vec<(&'static str, f64)>,
    /// Optional class label counted across the run.
    pub class: Option<&'static str>,
}

impl Probe {
    pub fn new(slack: f64, f: Frequency, t: f64) -> Self {
        Probe {
            slack,
            k: f.k,
            eta: f.eta,
            t,
            extra: Vec::new(),
            class: None,
        }
    }
}

/// `(rhs - lhs)/|rhs|`, with `rhs = 0` treated as an absolute comparison.
pub fn rel_slack(lhs: f64, rhs: f64) -> f64 {
    if rhs == 0.0 {
        -lhs
    } else {
        (rhs - lhs) / rhs.abs()
    }
}

// NaN slack ranks below everything so it is always the reported sample
fn rank(slack: f64) -> f64 {
    if slack.is_nan() {
        f64::NEG_INFINITY
    } else {
        slack
    }
}

struct ChunkResult {
    worst: Option<Probe>,
    violations: u64,
    classes: Vec<(&'static str, u64)>,
}

/// Runs `probe` on `samples` random draws and reduces by minimum slack.
/// A sample counts as a violation when its slack is below `-tol`.
pub fn run_audit<F>(name: &str, samples: u64, seed: u64, tol: f64, probe: F) -> AuditReport
where
    F: Fn(&mut ChaCha8Rng) -> Probe + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let results: Vec<ChunkResult> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut out = ChunkResult {
                worst: None,
                violations: 0,
                classes: Vec::new(),
            };
            for _ in 0..n {
                let p = probe(&mut rng);
                if !(p.slack >= -tol) {
                    out.violations += 1;
                }
                if let Some(cl) = p.class {
                    match out.classes.iter_mut().find(|(n, _)| *n == cl) {
                        Some((_, c)) => *c += 1,
                        None => out.classes.push((cl, 1)),
                    }
                }
                if out.worst.as_ref().is_none_or(|w| rank(p.slack) < rank(w.slack)) {
                    out.worst = Some(p);
                }
            }
            out
        })
        .collect();

    let mut worst: Option<Probe> = None;
    let mut violations = 0;
    let mut classes: Vec<(&'static str, u64)> = Vec::new();
    for r in results {
        violations += r.violations;
        for (cl, n) in r.classes {
            match classes.iter_mut().find(|(c, _)| *c == cl) {
                Some((_, m)) => *m += n,
                None => classes.push((cl, n)),
            }
        }
        if let Some(p) = r.worst {
            if worst.as_ref().is_none_or(|w| rank(p.slack) < rank(w.slack)) {
                worst = Some(p);
            }
        }
    }
    classes.sort();
    let worst = worst.unwrap_or(Probe {
        slack: f64::INFINITY,
        k: 0,
        eta: 0.0,
        t: 0.0,
        extra: Vec::new(),
        class: None,
    });
    let mut detail: Vec<String> = worst.extra.iter().map(|(n, v)| format!("{n}={v}")).collect();
    detail.extend(classes.iter().map(|(c, n)| format!("{c}_samples={n}")));
    detail.push(format!("violations={violations}"));
    AuditReport {
        audit_name: name.to_string(),
        samples,
        violations,
        min_slack: worst.slack,
        argmin_k: worst.k,
        argmin_eta: worst.eta,
        argmin_t: worst.t,
        detail: detail.join(" "),
        seed,
        verdict: if violations == 0 {
            AuditVerdict::Pass
        } else {
            AuditVerdict::Fail
        },
    }
}

/// Uniform draw of a nonzero wavenumber in `[-K_MAX, K_MAX]`.
pub fn draw_k<R: Rng>(rng: &mut R) -> i64 {
    let k = rng.random_range(1..=K_MAX);
    if rng.random_bool(0.5) {
        k
    } else {
        -k
    }
}

pub fn draw_eta<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(-ETA_MAX..=ETA_MAX)
}

pub fn draw_t<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(0.0..=T_MAX)
}

pub fn draw_nu<R: Rng>(rng: &mut R) -> f64 {
    10f64.powf(rng.random_range(LOG10_NU_RANGE.0..=LOG10_NU_RANGE.1))
}

fn keymnu_probe(f: Frequency, t: f64, p: &Params) -> Probe {
    let lhs = p.nu * p_symbol(f, t) + weights::rate_mnu(f, t, p);
    let rhs = p.nu_third() / 4.0;
    // the inequality reads lhs >= rhs
    let mut pr = Probe::new((lhs - rhs) / rhs, f, t);
    pr.extra.push(("nu", p.nu));
    pr
}

/// `nu p + d/dt m^nu / m^nu >= nu^(1/3)/4` at random `(k, eta, t)` for fixed `params`.
pub fn audit_keymnu(samples: u64, params: &Params, seed: u64) -> Result<AuditReport> {
    keymnu_report(samples, params, seed).require()
}

pub fn keymnu_report(samples: u64, params: &Params, seed: u64) -> AuditReport {
    let p = *params;
    run_audit("keymnu", samples, seed, 0.0, move |rng| {
        let f = Frequency::new(draw_k(rng), draw_eta(rng));
        keymnu_probe(f, draw_t(rng), &p)
    })
}

/// As [`keymnu_report`] with `nu` drawn log-uniformly per sample.
pub fn keymnu_report_nu_range(samples: u64, seed: u64) -> AuditReport {
    run_audit("keymnu", samples, seed, 0.0, |rng| {
        let nu = draw_nu(rng);
        let p = Params::new(nu, nu, 1.0);
        let f = Frequency::new(draw_k(rng), draw_eta(rng));
        keymnu_probe(f, draw_t(rng), &p)
    })
}

/// Left side of the same-`k` frequency-ratio bound: `sqrt(p_k(xi)/p_k(eta))`.
pub fn pkp_lhs(k: i64, eta: f64, xi: f64, t: f64) -> f64 {
    (p_symbol(Frequency::new(k, xi), t) / p_symbol(Frequency::new(k, eta), t)).sqrt()
}

/// Right side `1 + |eta - xi| / (|k| (1 + |eta/k - t|))` scaled by `constant`
/// on the second term.
pub fn pkp_rhs(k: i64, eta: f64, xi: f64, t: f64, constant: f64) -> f64 {
    let kf = k as f64;
    1.0 + constant * (eta - xi).abs() / (kf.abs() * (1.0 + (eta / kf - t).abs()))
}

/// Both sides of the cross-frequency ratio bound with the cubic
/// `<|k - l, eta - xi|>^3` factor, plus whether the resonant branch applies.
pub fn pp_sides(k: i64, eta: f64, l: i64, xi: f64, t: f64) -> (f64, f64, bool) {
    let fk = Frequency::new(k, eta);
    let fl = Frequency::new(l, xi);
    let lhs = (p_symbol(fl, t) / p_symbol(fk, t)).sqrt();
    let cube = jap_pair((k - l) as f64, eta - xi).powi(3);
    let resonant = resonant_interval(fk, t).unwrap_or(false) && !resonant_interval(fl, t).unwrap_or(true);
    let factor = if resonant {
        let kf = k as f64;
        eta.abs() / (kf * kf * (1.0 + (eta / kf - t).abs()))
    } else {
        1.0
    };
    (lhs, cube * factor, resonant)
}

/// Frequency-ratio audits: the same-`k` bound as printed, the cross-frequency
/// bound with the cubic factor, and the same-`k` bound with the constant `sqrt 2`
/// on the correction term (reported for comparison).
pub fn freq_ratio_reports(samples: u64, seed: u64) -> Vec<AuditReport> {
    let pkp = |constant: f64, name: &str, s: u64| {
        run_audit(name, samples, s, 1e-12, move |rng| {
            let k = draw_k(rng);
            let (eta, xi, t) = (draw_eta(rng), draw_eta(rng), draw_t(rng));
            let lhs = pkp_lhs(k, eta, xi, t);
            let rhs = pkp_rhs(k, eta, xi, t, constant);
            let mut pr = Probe::new(rel_slack(lhs, rhs), Frequency::new(k, eta), t);
            pr.extra.push(("xi", xi));
            pr
        })
    };
    let pp = run_audit("freq_ratio_pp", samples, seed.wrapping_add(1), 1e-12, |rng| {
        let (k, l) = (draw_k(rng), draw_k(rng));
        let (eta, xi, t) = (draw_eta(rng), draw_eta(rng), draw_t(rng));
        let (lhs, rhs, resonant) = pp_sides(k, eta, l, xi, t);
        let mut pr = Probe::new(rel_slack(lhs, rhs), Frequency::new(k, eta), t);
        pr.extra.push(("l", l as f64));
        pr.extra.push(("xi", xi));
        pr.class = Some(if resonant { "resonant" } else { "nonresonant" });
        pr
    });
    vec![
        pkp(1.0, "freq_ratio_pkp", seed),
        pp,
        pkp(std::f64::consts::SQRT_2, "freq_ratio_pkp_sqrt2", seed),
    ]
}

/// `p_k(t, eta) <|k,eta|>^2 >= <t>^2 / 2`.
pub fn lossy_elliptic_report(samples: u64, seed: u64) -> AuditReport {
    run_audit("lossy_elliptic", samples, seed, 0.0, |rng| {
        let f = Frequency::new(draw_k(rng), draw_eta(rng));
        let t = draw_t(rng);
        let lhs = p_symbol(f, t) * jap_pair(f.kf(), f.eta).powi(2);
        let rhs = jap(t).powi(2) / 2.0;
        Probe::new((lhs - rhs) / rhs, f, t)
    })
}

pub fn audit_lossy_elliptic(samples: u64, seed: u64) -> Result<AuditReport> {
    lossy_elliptic_report(samples, seed).require()
}

pub fn audit_freq_ratio(samples: u64, seed: u64) -> Result<Vec<AuditReport>> {
    let reports = freq_ratio_reports(samples, seed);
    for r in &reports {
        if !r.passed() {
            return Err(Error::AuditFailure(Box::new(r.clone())));
        }
    }
    Ok(reports)
}

/// `|d/dt p|/p <= 1` and `|d/dt p|/(|k| sqrt p) <= 2`, reported as the worse of the two.
pub fn dt_p_ratio_report(samples: u64, seed: u64) -> AuditReport {
    run_audit("dt_p_ratio", samples, seed, 1e-14, |rng| {
        let f = Frequency::new(draw_k(rng), draw_eta(rng));
        let t = draw_t(rng);
        let p = p_symbol(f, t);
        let d = dt_p_symbol(f, t).abs();
        let a = rel_slack(d / p, 1.0);
        let b = rel_slack(d / (f.kf().abs() * p.sqrt()), 2.0);
        Probe::new(a.min(b), f, t)
    })
}

/// Range bounds `1 <= m^d <= exp(pi C_beta)`, `1 <= m^nu <= e^pi`,
/// `1 <= m^s <= exp(2 gamma_beta C_beta)`.
pub fn weight_bounds_report(samples: u64, seed: u64) -> AuditReport {
    run_audit("weight_bounds", samples, seed, 1e-14, |rng| {
        let nu = draw_nu(rng);
        let beta = draw_beta(rng);
        let p = Params::new(nu, nu, beta);
        let f = Frequency::new(draw_k(rng), draw_eta(rng));
        let t = draw_t(rng);
        let w = WeightSet::at(f, t, &p);
        let pi = std::f64::consts::PI;
        let slacks = [
            w.m_d - 1.0,
            w.m_nu - 1.0,
            w.m_s - 1.0,
            rel_slack(w.m_d.ln(), pi * p.c_beta),
            rel_slack(w.m_nu, pi.exp()),
            rel_slack(w.m_s.ln(), 2.0 * p.gamma_beta * p.c_beta),
        ];
        let mut pr = Probe::new(slacks.iter().cloned().fold(f64::INFINITY, f64::min), f, t);
        pr.extra.push(("nu", nu));
        pr.extra.push(("beta", beta));
        pr
    })
}

/// `sqrt(k^2/p) = C_beta^(-1/2) sqrt(rate_d)` and
/// `|k|/p <= C_beta^(-1/2) sqrt(rate_d) sqrt(k^2/p)`.
pub fn pneq0_report(samples: u64, seed: u64) -> AuditReport {
    run_audit("pneq0", samples, seed, 1e-12, |rng| {
        let beta = draw_beta(rng);
        let p = Params::new(1e-3, 1e-3, beta);
        let f = Frequency::new(draw_k(rng), draw_eta(rng));
        let t = draw_t(rng);
        let s = sym_factor(f, t);
        let rd = weights::rate_md(f, t, &p);
        let identity = s - (rd / p.c_beta).sqrt();
        let lhs = f.kf().abs() / p_symbol(f, t);
        let rhs = (rd / p.c_beta).sqrt() * s;
        let mut pr = Probe::new(rel_slack(lhs, rhs).min(-identity.abs() / s), f, t);
        pr.extra.push(("beta", beta));
        pr
    })
}

fn draw_beta<R: Rng>(rng: &mut R) -> f64 {
    let b = rng.random_range(0.55..=10.0);
    if rng.random_bool(0.5) {
        b
    } else {
        -b
    }
}

/// Closed-form weights against adaptive integration of their defining
/// equations; slack is `1 - err/tol`.
pub fn weights_check_report(samples: u64, seed: u64, tol: f64) -> AuditReport {
    run_audit("weights_ode", samples, seed, 0.0, move |rng| {
        let nu = draw_nu(rng);
        let beta = draw_beta(rng);
        let p = Params::new(nu, nu, beta);
        let f = Frequency::new(draw_k(rng), draw_eta(rng));
        let t = draw_t(rng);
        let w = WeightSet::at(f, t, &p);
        let err = match weights::weights_by_ode(f, t, &p, 1e-13) {
            Ok(o) => [(w.m_d, o[0]), (w.m_nu, o[1]), (w.m_s, o[2]), (w.m, o[3])]
                .iter()
                .map(|(a, b)| ((a - b) / b).abs())
                .fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        };
        let mut pr = Probe::new(1.0 - err / tol, f, t);
        pr.extra.push(("max_rel_err", err));
        pr.extra.push(("nu", nu));
        pr.extra.push(("beta", beta));
        pr
    })
}

/// Every pointwise audit with its default settings.
pub fn all_reports(samples: u64, seed: u64) -> Vec<AuditReport> {
    let mut out = vec![keymnu_report_nu_range(samples, seed)];
    out.extend(freq_ratio_reports(samples, seed));
    out.push(lossy_elliptic_report(samples, seed));
    out.push(dt_p_ratio_report(samples, seed));
    out.push(weight_bounds_report(samples, seed));
    out.push(pneq0_report(samples, seed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keymnu_examples() {
        let p = Params::new(1e-3, 1e-3, 1.0);
        let pr = keymnu_probe(Frequency::new(1, 0.0), 0.0, &p);
        assert!(pr.slack > 0.0);
        // at the critical time the weight derivative alone is nu^(1/3)
        let f = Frequency::new(3, 12.0);
        let r = weights::rate_mnu(f, 4.0, &p);
        assert!((r - p.nu_third()).abs() < 1e-15);
    }

    #[test]
    fn pkp_equal_frequencies() {
        assert_eq!(pkp_lhs(3, 7.0, 7.0, 2.0), 1.0);
        assert_eq!(pkp_rhs(3, 7.0, 7.0, 2.0, 1.0), 1.0);
    }

    #[test]
    fn pkp_printed_constant_counterexample() {
        // k = 1, t = 0, eta = 10, xi = 11: sqrt(122/101) > 1 + 1/11
        let lhs = pkp_lhs(1, 10.0, 11.0, 0.0);
        let rhs = pkp_rhs(1, 10.0, 11.0, 0.0, 1.0);
        assert!(lhs > rhs, "{lhs} {rhs}");
        assert!(lhs <= pkp_rhs(1, 10.0, 11.0, 0.0, std::f64::consts::SQRT_2));
    }

    #[test]
    fn pp_resonant_branch_counterexample() {
        // (k, eta) resonant at t = 0.1 while (l, xi) is not; the resonant factor
        // |eta|/k^2 is far below one here
        let (lhs, rhs, resonant) = pp_sides(10, 1.0, 10, 1.2, 0.1);
        assert!(resonant);
        assert!(lhs > rhs, "{lhs} {rhs}");
    }

    #[test]
    fn pp_other_mode_resonant() {
        // k = l = 1, eta = 0, xi = t
        for t in [1.0, 10.0, 300.0] {
            let (lhs, rhs, resonant) = pp_sides(1, 0.0, 1, t, t);
            assert!(!resonant);
            assert!(lhs <= rhs);
        }
    }

    #[test]
    fn lossy_elliptic_examples() {
        let f = Frequency::new(1, 0.0);
        assert!(p_symbol(f, 0.0) * jap_pair(1.0, 0.0).powi(2) >= 0.5);
        let f = Frequency::new(1, 100.0);
        let lhs = p_symbol(f, 100.0) * jap_pair(1.0, 100.0).powi(2);
        assert!(lhs >= jap(100.0).powi(2) / 2.0);
    }

    #[test]
    fn reports_are_reproducible() {
        let a = lossy_elliptic_report(5000, 7);
        let b = lossy_elliptic_report(5000, 7);
        assert_eq!(a, b);
        assert!(a.passed());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| lossy_elliptic_report(5000, 7));
        assert_eq!(a, c);
    }

    #[test]
    fn audits_pass_on_small_samples() {
        for r in [
            keymnu_report_nu_range(20_000, 1),
            dt_p_ratio_report(20_000, 2),
            weight_bounds_report(20_000, 3),
            pneq0_report(20_000, 4),
        ] {
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn csv_layout() {
        let r = lossy_elliptic_report(10, 1);
        let mut buf = Vec::new();
        write_reports_csv(&mut buf, &[r]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("audit_name,samples,min_slack,argmin_k,argmin_eta,argmin_t,verdict\n"));
        assert!(s.contains("lossy_elliptic,10,"));
    }

    #[test]
    fn failing_report_becomes_error() {
        let r = run_audit("always_fails", 3, 0, 0.0, |_| Probe::new(-1.0, Frequency::new(1, 0.0), 0.0));
        assert_eq!(r.violations, 3);
        assert!(matches!(r.require(), Err(Error::AuditFailure(_))));
    }
}
