//! Physical and proof constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Viscosity, resistivity, background field and the constants entering the
/// weights `m^d`, `m^nu`, `m^s`, `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub nu: f64,
    pub mu: f64,
    pub beta: f64,
    /// Sobolev index of the `H^N` norms.
    pub n: u32,
    pub delta0: f64,
    pub c_beta: f64,
    pub gamma_beta: f64,
}

pub const DEFAULT_SOBOLEV_INDEX: u32 = 11;
pub const DEFAULT_DELTA0: f64 = 0.01;

impl Params {
    /// Parameters with the default constants for the given `beta`.
    pub fn new(nu: f64, mu: f64, beta: f64) -> Self {
        Params {
            nu,
            mu,
            beta,
            n: DEFAULT_SOBOLEV_INDEX,
            delta0: DEFAULT_DELTA0,
            c_beta: default_c_beta(beta),
            gamma_beta: default_gamma_beta(beta),
        }
    }

    pub fn with_sobolev_index(mut self, n: u32) -> Self {
        self.n = n;
        self
    }

    /// Replaces `nu`/`mu` keeping every other constant.
    pub fn with_diffusion(mut self, nu: f64, mu: f64) -> Self {
        self.nu = nu;
        self.mu = mu;
        self
    }

    /// Magnetic Prandtl number `nu / mu`.
    pub fn prandtl(&self) -> f64 {
        self.nu / self.mu
    }

    /// `nu^(1/3)`, the enhanced-dissipation rate scale.
    pub fn nu_third(&self) -> f64 {
        self.nu.cbrt()
    }

    /// Half-width of the coercivity band of the symmetric energy, `1/(2|beta|)`.
    pub fn coercivity_offset(&self) -> f64 {
        1.0 / (2.0 * self.beta.abs())
    }

    /// Checks every hypothesis the linear and nonlinear estimates rely on.
    ///
    /// With `allow_out_of_theory` only finiteness, `0 <= nu <= mu < 1` and
    /// `N > 10` are enforced, which admits the `beta = 0` experiments.
    pub fn validate(&self, allow_out_of_theory: bool) -> Result<()> {
        let fail = |msg: &str| Err(Error::Validation(msg.to_string()));
        let all = [
            self.nu,
            self.mu,
            self.beta,
            self.delta0,
            self.c_beta,
            self.gamma_beta,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return fail("all parameters must be finite");
        }
        if allow_out_of_theory {
            if !(0.0 <= self.nu && self.nu <= self.mu) {
                return fail("0 ≤ nu ≤ mu");
            }
        } else if !(0.0 < self.nu && self.nu <= self.mu) {
            return fail("0 < nu ≤ mu");
        }
        if self.mu >= 1.0 {
            return fail("mu < 1");
        }
        if self.n <= 10 {
            return fail("N > 10");
        }
        if allow_out_of_theory {
            return Ok(());
        }
        let b = self.beta.abs();
        if b <= 0.5 {
            return fail("|beta| > 1/2");
        }
        if self.nu < (16.0 * self.mu / (b * b)).powi(3) {
            return fail("nu ≥ (16·mu/beta²)³");
        }
        if !(0.0 < self.delta0 && self.delta0 < 1.0 / 64.0) {
            return fail("0 < delta0 < 1/64");
        }
        if !(self.c_beta > 0.0 && 1.0 / (b * self.c_beta) <= 0.25) {
            return fail("1/(|beta|·C_beta) ≤ 1/4");
        }
        if !(self.gamma_beta > 0.0 && (0.5 + 1.0 / self.gamma_beta) / b < 1.0) {
            return fail("(1/|beta|)·(1/2 + 1/gamma_beta) < 1");
        }
        Ok(())
    }
}

/// `C_beta = max{1, 4/|beta|}`; below `|beta| = 1/2` the value at `1/2` is used.
pub fn default_c_beta(beta: f64) -> f64 {
    (4.0 / beta.abs().max(0.5)).max(1.0)
}

/// `gamma_beta = 2/(|beta| - 1/2)`; below `|beta| = 1/2` the value at `|beta| = 1` is used.
pub fn default_gamma_beta(beta: f64) -> f64 {
    let b = beta.abs();
    if b > 0.5 {
        2.0 / (b - 0.5)
    } else {
        4.0
    }
}

/// A Fourier frequency: integer horizontal wavenumber and real vertical frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub k: i64,
    pub eta: f64,
}

impl Frequency {
    pub fn new(k: i64, eta: f64) -> Self {
        Frequency { k, eta }
    }

    pub fn is_zero_mode(&self) -> bool {
        self.k == 0
    }

    pub fn kf(&self) -> f64 {
        self.k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_satisfy_constraints() {
        for beta in [0.6, 1.0, 2.0, -3.0, 10.0] {
            let p = Params::new(1e-3, 1e-3, beta);
            p.validate(false).unwrap();
        }
    }

    #[test]
    fn c_beta_choice() {
        assert_eq!(default_c_beta(2.0), 2.0);
        assert_eq!(default_c_beta(8.0), 1.0);
        assert_eq!(default_c_beta(-1.0), 4.0);
    }

    #[test]
    fn rejects_mu_below_nu() {
        let err = Params::new(1e-3, 1e-4, 2.0).validate(false).unwrap_err();
        assert!(err.to_string().contains("0 < nu ≤ mu"), "{err}");
    }

    #[test]
    fn rejects_weak_field() {
        let err = Params::new(1e-3, 1e-3, 0.4).validate(false).unwrap_err();
        assert!(err.to_string().contains("|beta| > 1/2"), "{err}");
        Params::new(1e-3, 1e-3, 0.4).validate(true).unwrap();
        Params::new(0.0, 0.0, 0.0).validate(true).unwrap();
    }

    #[test]
    fn rejects_prandtl_too_small() {
        // nu = 1e-9 with mu = 1e-2 breaks nu >= (16 mu / beta^2)^3
        let err = Params::new(1e-9, 1e-2, 1.0).validate(false).unwrap_err();
        assert!(err.to_string().contains("(16·mu/beta²)³"), "{err}");
    }

    #[test]
    fn rejects_low_sobolev_index() {
        let p = Params::new(1e-3, 1e-3, 1.0).with_sobolev_index(10);
        assert!(p.validate(false).is_err());
    }
}
