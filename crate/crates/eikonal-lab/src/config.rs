//! Run configuration: `key = value` lines with `#` comments.

use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{field_from_spec, parse_number, LiftedField};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    /// Grid file path or `builtin:name[:k=v,...]`.
    pub field: Option<String>,
    /// Grid size for builtin fields that do not set `nx`.
    pub grid: Option<usize>,
    /// Ball radius override.
    pub radius: Option<f64>,
    pub n_min: u32,
    pub n_max: u32,
    /// Angle bins; defaults to the number of grid columns.
    pub k_bins: Option<usize>,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub seed: u64,
    pub sigma_threshold: f64,
    /// Coefficient of `delta` in the first density floor.
    pub floor1: f64,
    /// Coefficient of `delta^3` in the second density floor.
    pub floor2: f64,
    pub pair_tol: usize,
    pub nu_block: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            field: None,
            grid: None,
            radius: None,
            n_min: 4,
            n_max: 7,
            k_bins: None,
            out: PathBuf::from("out"),
            threads: None,
            seed: 7,
            sigma_threshold: crate::rectifiability::default_sigma_threshold(),
            floor1: 0.05,
            floor2: 0.01,
            pair_tol: 2,
            nu_block: 4,
        }
    }
}

fn usage(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Usage(format!("`{key}`: {msg}"))
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| usage(key, format!("`{v}` is not a valid integer")))
}

fn parse_float(key: &str, v: &str) -> Result<f64> {
    parse_number(v).map_err(|e| usage(key, e))
}

/// Parse `min:max` or a single level.
pub fn parse_range(v: &str) -> Result<(u32, u32)> {
    let (a, b) = v.split_once(':').unwrap_or((v, v));
    let lo: u32 = parse_int("n", a.trim())?;
    let hi: u32 = parse_int("n", b.trim())?;
    if lo < 1 || hi < lo || hi > 12 {
        return Err(usage(
            "n",
            format!("range {lo}:{hi} must satisfy 1 <= min <= max <= 12"),
        ));
    }
    Ok((lo, hi))
}

impl RunConfig {
    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "field" => self.field = Some(v.to_string()),
            "grid" => self.grid = Some(parse_int(key, v)?),
            "radius" => self.radius = Some(parse_float(key, v)?),
            "n" => (self.n_min, self.n_max) = parse_range(v)?,
            "k_bins" => self.k_bins = Some(parse_int(key, v)?),
            "out" => self.out = PathBuf::from(v),
            "threads" => self.threads = Some(parse_int(key, v)?),
            "seed" => self.seed = parse_int(key, v)?,
            "sigma_threshold" => self.sigma_threshold = parse_float(key, v)?,
            "floor1" => self.floor1 = parse_float(key, v)?,
            "floor2" => self.floor2 = parse_float(key, v)?,
            "pair_tol" => self.pair_tol = parse_int(key, v)?,
            "nu_block" => self.nu_block = parse_int(key, v)?,
            other => return Err(Error::Usage(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            cfg.set(k.trim(), v)?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_some_and(|g| g < 4) {
            return Err(usage("grid", "must be at least 4"));
        }
        if self.radius.is_some_and(|r| !(r > 0.0 && r.is_finite())) {
            return Err(usage("radius", "must be positive"));
        }
        if self.k_bins == Some(0) {
            return Err(usage("k_bins", "must be positive"));
        }
        if self.threads == Some(0) {
            return Err(usage("threads", "must be positive"));
        }
        if !(self.sigma_threshold > 0.0 && self.sigma_threshold.is_finite()) {
            return Err(usage("sigma_threshold", "must be positive"));
        }
        if !(self.floor1 >= 0.0 && self.floor2 >= 0.0) {
            return Err(usage("floor1/floor2", "must be non-negative"));
        }
        if self.nu_block == 0 {
            return Err(usage("nu_block", "must be positive"));
        }
        Ok(())
    }

    /// Field spec with the grid size applied to builtins.
    pub fn field_spec(&self) -> Result<String> {
        let spec = self
            .field
            .clone()
            .ok_or_else(|| Error::Usage("no field given: set `field` or pass --field".into()))?;
        let (Some(g), Some(rest)) = (self.grid, spec.strip_prefix("builtin:")) else {
            return Ok(spec);
        };
        let (name, params) = rest.split_once(':').unwrap_or((rest, ""));
        if params.split(',').any(|p| p.trim().starts_with("nx")) {
            return Ok(spec);
        }
        let params = if params.is_empty() {
            format!("nx={g}")
        } else {
            format!("{params},nx={g}")
        };
        Ok(format!("builtin:{name}:{params}"))
    }

    pub fn load_field(&self) -> Result<LiftedField> {
        let mut f = field_from_spec(&self.field_spec()?)?;
        if let Some(r) = self.radius {
            f.r = r;
            f.validate()?;
        }
        Ok(f)
    }

    pub fn bins(&self, f: &LiftedField) -> crate::measure::ABins {
        crate::measure::ABins::new(self.k_bins.unwrap_or(f.nx), f.m)
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<u32> {
        self.n_min..=self.n_max
    }
}
