//! Run configuration: plain `key = value` text, one entry per line, `#` comments.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, DEFAULT_DEALIAS, DEFAULT_LY};
use crate::params::{default_c_beta, default_gamma_beta, Params, DEFAULT_DELTA0, DEFAULT_SOBOLEV_INDEX};
use crate::solver::InitialDataSpec;

/// Which field the growth scan tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthObservable {
    Omega,
    Current,
}

impl FromStr for GrowthObservable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "omega" => Ok(GrowthObservable::Omega),
            "current" => Ok(GrowthObservable::Current),
            _ => Err(format!("expected `omega` or `current`, got `{s}`")),
        }
    }
}

impl std::fmt::Display for GrowthObservable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GrowthObservable::Omega => "omega",
            GrowthObservable::Current => "current",
        })
    }
}

/// Initial data of the per-mode scans: one frequency with real amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSpec {
    pub k: i64,
    pub eta: f64,
    pub omega: f64,
    pub j: f64,
}

/// Band of the random initial data of full simulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialBand {
    pub k_band: i64,
    pub eta_band: f64,
    pub include_zero_modes: bool,
    /// Amplitude decay exponent; `None` uses the Sobolev index, which spreads
    /// the `H^N` norm evenly over the band.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: Params,
    pub grid: Grid,
    /// `H^N` size of the initial data.
    pub eps: f64,
    pub seed: u64,
    /// `None` means `10 nu^(-1/3)`.
    pub t_end: Option<f64>,
    /// Steps between ledger rows.
    pub ledger_stride: usize,
    pub snapshot_times: Vec<f64>,
    pub out_dir: Option<PathBuf>,
    pub run_id: String,
    pub allow_out_of_theory: bool,
    pub dt_max: f64,
    /// Blowup is declared when `||(Omega, J)||_{H^N}` exceeds this multiple of `eps`.
    pub blowup_factor: f64,
    pub initial: InitialBand,
    /// End the run at the first bootstrap violation.
    pub stop_on_violation: bool,
    pub nonlinear: bool,
    pub mode: ModeSpec,
    pub growth_observable: GrowthObservable,
}

pub const DEFAULT_GRID_SIZE: usize = 128;
pub const DEFAULT_DT_MAX: f64 = 0.05;
pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e4;
pub const DEFAULT_LEDGER_STRIDE: usize = 10;

impl RunConfig {
    pub fn new(params: Params) -> Self {
        RunConfig {
            params,
            grid: Grid::new(DEFAULT_GRID_SIZE, DEFAULT_GRID_SIZE, DEFAULT_LY, DEFAULT_DEALIAS).expect("default grid"),
            eps: 1e-6,
            seed: 0,
            t_end: None,
            ledger_stride: DEFAULT_LEDGER_STRIDE,
            snapshot_times: Vec::new(),
            out_dir: None,
            run_id: "run".to_string(),
            allow_out_of_theory: false,
            dt_max: DEFAULT_DT_MAX,
            blowup_factor: DEFAULT_BLOWUP_FACTOR,
            initial: InitialBand {
                k_band: 2,
                eta_band: 2.0,
                include_zero_modes: true,
                slope: None,
            },
            stop_on_violation: false,
            nonlinear: true,
            mode: ModeSpec {
                k: 1,
                eta: 0.0,
                omega: 1.0,
                j: 0.0,
            },
            growth_observable: GrowthObservable::Omega,
        }
    }

    /// Final time, `10 nu^(-1/3)` unless set.
    pub fn horizon(&self) -> f64 {
        self.t_end.unwrap_or_else(|| 10.0 / self.params.nu_third())
    }

    pub fn initial_data_spec(&self) -> InitialDataSpec {
        InitialDataSpec {
            seed: self.seed,
            k_band: self.initial.k_band,
            eta_band: self.initial.eta_band,
            norm_eps: self.eps,
            include_zero_modes: self.initial.include_zero_modes,
            slope: self.initial.slope.unwrap_or(self.params.n as f64),
            params: self.params,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate(self.allow_out_of_theory)?;
        let fail = |msg: String| Err(Error::Validation(msg));
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return fail("eps ≥ 0".into());
        }
        match self.t_end {
            Some(t) if !(t > 0.0 && t.is_finite()) => return fail("t_end > 0".into()),
            None if self.params.nu == 0.0 => return fail("t_end must be set when nu = 0".into()),
            _ => {}
        }
        if self.ledger_stride == 0 {
            return fail("ledger_stride ≥ 1".into());
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return fail("dt_max > 0".into());
        }
        if !(self.blowup_factor > 1.0) {
            return fail("blowup_factor > 1".into());
        }
        if self.snapshot_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return fail("snapshot_times ≥ 0".into());
        }
        if self.initial.k_band < 0 || !(self.initial.eta_band >= 0.0) {
            return fail("k_band ≥ 0 and eta_band ≥ 0".into());
        }
        if self.mode.k == 0 {
            return fail("mode_k ≠ 0".into());
        }
        if self.run_id.is_empty() || self.run_id.contains(['/', '\\']) {
            return fail("run_id must be a nonempty file-name component".into());
        }
        Ok(())
    }

    /// Canonical text form; `parse_config_str(&c.echo()) == c`.
    pub fn echo(&self) -> String {
        let p = &self.params;
        let g = &self.grid;
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("nu", &p.nu);
        kv("mu", &p.mu);
        kv("beta", &p.beta);
        kv("sobolev_index", &p.n);
        kv("delta0", &p.delta0);
        kv("c_beta", &p.c_beta);
        kv("gamma_beta", &p.gamma_beta);
        kv("nx", &g.nx);
        kv("ny", &g.ny);
        kv("ly", &g.ly);
        kv("dealias_fraction", &g.dealias_fraction);
        kv("eps", &self.eps);
        kv("seed", &self.seed);
        if let Some(t) = self.t_end {
            kv("t_end", &t);
        }
        kv("ledger_stride", &self.ledger_stride);
        if !self.snapshot_times.is_empty() {
            let list: Vec<String> = self.snapshot_times.iter().map(|t| t.to_string()).collect();
            kv("snapshot_times", &list.join(", "));
        }
        if let Some(d) = &self.out_dir {
            kv("out_dir", &d.display());
        }
        kv("run_id", &self.run_id);
        kv("allow_out_of_theory", &self.allow_out_of_theory);
        kv("dt_max", &self.dt_max);
        kv("blowup_factor", &self.blowup_factor);
        kv("k_band", &self.initial.k_band);
        kv("eta_band", &self.initial.eta_band);
        kv("include_zero_modes", &self.initial.include_zero_modes);
        if let Some(sl) = self.initial.slope {
            kv("slope", &sl);
        }
        kv("stop_on_violation", &self.stop_on_violation);
        kv("nonlinear", &self.nonlinear);
        kv("mode_k", &self.mode.k);
        kv("mode_eta", &self.mode.eta);
        kv("mode_omega", &self.mode.omega);
        kv("mode_j", &self.mode.j);
        kv("growth_observable", &self.growth_observable);
        s
    }
}

const KEYS: &[&str] = &[
    "nu",
    "mu",
    "beta",
    "sobolev_index",
    "delta0",
    "c_beta",
    "gamma_beta",
    "nx",
    "ny",
    "ly",
    "dealias_fraction",
    "eps",
    "seed",
    "t_end",
    "ledger_stride",
    "snapshot_times",
    "out_dir",
    "run_id",
    "allow_out_of_theory",
    "dt_max",
    "blowup_factor",
    "k_band",
    "eta_band",
    "include_zero_modes",
    "slope",
    "stop_on_violation",
    "nonlinear",
    "mode_k",
    "mode_eta",
    "mode_omega",
    "mode_j",
    "growth_observable",
];

struct Entries {
    items: Vec<(usize, String, String)>,
}

impl Entries {
    fn find(&self, key: &str) -> Option<&(usize, String, String)> {
        self.items.iter().find(|(_, k, _)| k == key)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.find(key) {
            None => Ok(None),
            Some((line, _, v)) => v.parse::<T>().map(Some).map_err(|e| Error::Parse {
                line: *line,
                message: format!("invalid value `{v}` for `{key}`: {e}"),
            }),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("missing required key `{key}`"),
        })
    }
}

/// Parses configuration text and validates it.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut items: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `key = value`, got `{body}`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Parse {
                line,
                message: format!("unknown key `{k}`"),
            });
        }
        if items.iter().any(|(_, seen, _)| seen == k) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key `{k}`"),
            });
        }
        items.push((line, k.to_string(), v.to_string()));
    }
    let e = Entries { items };

    let beta: f64 = e.require("beta")?;
    let params = Params {
        nu: e.require("nu")?,
        mu: e.require("mu")?,
        beta,
        n: e.get("sobolev_index")?.unwrap_or(DEFAULT_SOBOLEV_INDEX),
        delta0: e.get("delta0")?.unwrap_or(DEFAULT_DELTA0),
        c_beta: e.get("c_beta")?.unwrap_or_else(|| default_c_beta(beta)),
        gamma_beta: e.get("gamma_beta")?.unwrap_or_else(|| default_gamma_beta(beta)),
    };
    let mut c = RunConfig::new(params);
    let nx = e.get("nx")?.unwrap_or(c.grid.nx);
    let ny = e.get("ny")?.unwrap_or(c.grid.ny);
    let ly = e.get("ly")?.unwrap_or(c.grid.ly);
    let frac = e.get("dealias_fraction")?.unwrap_or(c.grid.dealias_fraction);
    c.grid = Grid::new(nx, ny, ly, frac).map_err(|err| Error::Validation(err.to_string()))?;
    c.eps = e.get("eps")?.unwrap_or(c.eps);
    c.seed = e.get("seed")?.unwrap_or(c.seed);
    c.t_end = e.get("t_end")?;
    c.ledger_stride = e.get("ledger_stride")?.unwrap_or(c.ledger_stride);
    if let Some((line, _, v)) = e.find("snapshot_times") {
        c.snapshot_times = v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|err| Error::Parse {
                    line: *line,
                    message: format!("invalid snapshot time `{s}`: {err}"),
                })
            })
            .collect::<Result<_>>()?;
    }
    c.out_dir = e.get::<String>("out_dir")?.map(PathBuf::from);
    c.run_id = e.get("run_id")?.unwrap_or(c.run_id);
    c.allow_out_of_theory = e.get("allow_out_of_theory")?.unwrap_or(false);
    c.dt_max = e.get("dt_max")?.unwrap_or(c.dt_max);
    c.blowup_factor = e.get("blowup_factor")?.unwrap_or(c.blowup_factor);
    c.initial.k_band = e.get("k_band")?.unwrap_or(c.initial.k_band);
    c.initial.eta_band = e.get("eta_band")?.unwrap_or(c.initial.eta_band);
    c.initial.include_zero_modes = e.get("include_zero_modes")?.unwrap_or(c.initial.include_zero_modes);
    c.initial.slope = e.get("slope")?;
    c.stop_on_violation = e.get("stop_on_violation")?.unwrap_or(false);
    c.nonlinear = e.get("nonlinear")?.unwrap_or(true);
    c.mode.k = e.get("mode_k")?.unwrap_or(c.mode.k);
    c.mode.eta = e.get("mode_eta")?.unwrap_or(c.mode.eta);
    c.mode.omega = e.get("mode_omega")?.unwrap_or(c.mode.omega);
    c.mode.j = e.get("mode_j")?.unwrap_or(c.mode.j);
    c.growth_observable = e.get("growth_observable")?.unwrap_or(c.growth_observable);
    c.validate()?;
    Ok(c)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}
