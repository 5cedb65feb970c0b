//! Multiplier weights `m^d`, `m^nu`, `m^s` and the composite `m`.
//!
//! Each sub-weight solves `d/dt m = r(t) m`, `m(0) = 1`, with a rate that
//! only depends on `u = eta/k - t`; the closed forms integrate the rate in
//! `u`. The composite weight is evaluated in log space because `m^s` alone
//! can reach `exp(2 gamma_beta C_beta)`.

use serde::Serialize;

use crate::error::Result;
use crate::ode::{self, AdaptiveOptions};
use crate::params::{Frequency, Params};
use crate::symbols::jap_pair;

/// Evaluated weights at one `(k, eta, t)`, with their logarithmic time
/// derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightSet {
    pub m_d: f64,
    pub m_nu: f64,
    pub m_s: f64,
    pub m: f64,
    pub log_m: f64,
    /// `d/dt m^d / m^d`
    pub rate_d: f64,
    /// `d/dt m^nu / m^nu`
    pub rate_nu: f64,
    /// `d/dt m^s / m^s`
    pub rate_s: f64,
    /// `d/dt m / m`
    pub rate_m: f64,
}

impl WeightSet {
    pub fn at(f: Frequency, t: f64, params: &Params) -> Self {
        let log_m = log_weight_m(f, t, params);
        WeightSet {
            m_d: weight_md(f, t, params),
            m_nu: weight_mnu(f, t, params),
            m_s: weight_ms(f, t, params),
            m: log_m.exp(),
            log_m,
            rate_d: rate_md(f, t, params),
            rate_nu: rate_mnu(f, t, params),
            rate_s: rate_ms(f, t, params),
            rate_m: rate_m(f, t, params),
        }
    }
}

/// `(eta/k, eta/k - t)`, or `None` on the zero mode.
#[inline]
fn shifts(f: Frequency, t: f64) -> Option<(f64, f64)> {
    if f.k == 0 {
        None
    } else {
        let u0 = f.eta / f.kf();
        Some((u0, u0 - t))
    }
}

#[inline]
fn g(u: f64) -> f64 {
    u / u.hypot(1.0)
}

pub fn log_weight_md(f: Frequency, t: f64, params: &Params) -> f64 {
    match shifts(f, t) {
        None => 0.0,
        Some((u0, u1)) => params.c_beta * (u0.atan() - u1.atan()),
    }
}

pub fn log_weight_mnu(f: Frequency, t: f64, params: &Params) -> f64 {
    match shifts(f, t) {
        Some((u0, u1)) if params.nu > 0.0 => {
            let c = params.nu_third();
            (c * u0).atan() - (c * u1).atan()
        }
        _ => 0.0,
    }
}

pub fn log_weight_ms(f: Frequency, t: f64, params: &Params) -> f64 {
    match shifts(f, t) {
        None => 0.0,
        Some((u0, u1)) => params.gamma_beta * params.c_beta * (g(u0) - g(u1)),
    }
}

pub fn weight_md(f: Frequency, t: f64, params: &Params) -> f64 {
    log_weight_md(f, t, params).exp()
}

pub fn weight_mnu(f: Frequency, t: f64, params: &Params) -> f64 {
    log_weight_mnu(f, t, params).exp()
}

pub fn weight_ms(f: Frequency, t: f64, params: &Params) -> f64 {
    log_weight_ms(f, t, params).exp()
}

/// `ln m`: `delta0 nu^(1/3) t + N ln<|k,eta|> - ln(m^d m^nu m^s)` for `k != 0`,
/// `N ln<eta>` for `k = 0`.
pub fn log_weight_m(f: Frequency, t: f64, params: &Params) -> f64 {
    let sobolev = params.n as f64 * jap_pair(f.kf(), f.eta).ln();
    if f.k == 0 {
        return sobolev;
    }
    params.delta0 * params.nu_third() * t + sobolev
        - log_weight_md(f, t, params)
        - log_weight_mnu(f, t, params)
        - log_weight_ms(f, t, params)
}

pub fn weight_m(f: Frequency, t: f64, params: &Params) -> f64 {
    log_weight_m(f, t, params).exp()
}

pub fn rate_md(f: Frequency, t: f64, params: &Params) -> f64 {
    match shifts(f, t) {
        None => 0.0,
        Some((_, u)) => params.c_beta / (1.0 + u * u),
    }
}

pub fn rate_mnu(f: Frequency, t: f64, params: &Params) -> f64 {
    match shifts(f, t) {
        Some((_, u)) if params.nu > 0.0 => {
            let c = params.nu_third();
            c / (1.0 + c * c * u * u)
        }
        _ => 0.0,
    }
}

pub fn rate_ms(f: Frequency, t: f64, params: &Params) -> f64 {
    match shifts(f, t) {
        None => 0.0,
        Some((_, u)) => {
            let s = 1.0 + u * u;
            params.gamma_beta * params.c_beta / (s * s.sqrt())
        }
    }
}

/// `d/dt m / m = delta0 nu^(1/3) - (sum of the sub-weight rates)`, zero for `k = 0`.
pub fn rate_m(f: Frequency, t: f64, params: &Params) -> f64 {
    if f.k == 0 {
        return 0.0;
    }
    params.delta0 * params.nu_third() - rate_md(f, t, params) - rate_mnu(f, t, params) - rate_ms(f, t, params)
}

/// `(m^d, m^nu, m^s, m)` obtained by integrating the defining differential
/// equations from `0` to `t` with an adaptive Runge–Kutta method.
pub fn weights_by_ode(f: Frequency, t: f64, params: &Params, rtol: f64) -> Result<[f64; 4]> {
    let m0 = (params.n as f64 * jap_pair(f.kf(), f.eta).ln()).exp();
    let opts = AdaptiveOptions {
        rtol,
        atol: 0.0,
        h0: 1e-2,
        max_step: 1.0,
    };
    ode::integrate(
        |s, y: &[f64; 4]| {
            let rd = rate_md(f, s, params);
            let rn = rate_mnu(f, s, params);
            let rs = rate_ms(f, s, params);
            let rm = rate_m(f, s, params);
            [rd * y[0], rn * y[1], rs * y[2], rm * y[3]]
        },
        0.0,
        [1.0, 1.0, 1.0, m0],
        t,
        opts,
        |_, _| {},
    )
}
