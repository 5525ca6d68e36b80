//! `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Every key must be consumed by the command reading the file; leftovers are
//! reported with their line numbers.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use gsqg_core::mollifier::{CutoffProfile, Mollifier};
use gsqg_core::solver::{ForcingSpec, InitialCondition, PassiveSpec, Scheme, SimulationConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    used: Cell<bool>,
}

#[derive(Debug, Default)]
pub struct ConfigFile {
    entries: Vec<Entry>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<Entry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError {
                line: Some(line),
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError {
                    line: Some(line),
                    message: format!("invalid key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(ConfigError {
                    line: Some(line),
                    message: format!("missing value for `{key}`"),
                });
            }
            if let Some(prev) = entries.iter().find(|e| e.key == key) {
                return Err(ConfigError {
                    line: Some(line),
                    message: format!("duplicate key `{key}` (first set on line {})", prev.line),
                });
            }
            entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line,
                used: Cell::new(false),
            });
        }
        Ok(Self { entries })
    }

    fn entry(&self, key: &str) -> Option<&Entry> {
        let e = self.entries.iter().find(|e| e.key == key)?;
        e.used.set(true);
        Some(e)
    }

    /// Line on which `key` is set.
    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.key == key).map(|e| e.line)
    }

    /// Parses `key` with `parse`, reporting failures at the key's line.
    pub fn get_with<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).map_err(|m| ConfigError {
                line: Some(e.line),
                message: format!("{key}: {m}"),
            }),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.get_with(key, |v| v.parse::<T>().map_err(|_| format!("cannot parse `{v}`")))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        self.get_with(key, |v| {
            v.split(',')
                .map(|w| w.trim().parse::<T>().map_err(|_| format!("cannot parse list item `{}`", w.trim())))
                .collect()
        })
    }

    pub fn list_or<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>, ConfigError> {
        Ok(self.list(key)?.unwrap_or(default))
    }

    pub fn flag(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.get_with(key, parse_bool)
    }

    /// Fails on the first key nobody asked for.
    pub fn finish(&self) -> Result<(), ConfigError> {
        match self.entries.iter().find(|e| !e.used.get()) {
            Some(e) => Err(ConfigError {
                line: Some(e.line),
                message: format!("unknown key `{}`", e.key),
            }),
            None => Ok(()),
        }
    }
}

pub fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(format!("expected a boolean, found `{v}`")),
    }
}

pub fn parse_mollifier(v: &str) -> Result<Mollifier, String> {
    match v {
        "gaussian" => Ok(Mollifier::Gaussian),
        "bump" => Ok(Mollifier::Cutoff(CutoffProfile::BumpIntegral)),
        "logistic" => Ok(Mollifier::Cutoff(CutoffProfile::Logistic)),
        _ => Err(format!("unknown mollifier `{v}` (expected gaussian, bump or logistic)")),
    }
}

/// Applies the simulation keys present in `file` on top of `base`.
///
/// Keys: `n`, `length`, `beta`, `noise`, `alpha`, `cutoff`, `noise_delta`,
/// `viscosity`, `kernel_delta`, `data_delta`, `mollifier`, `nonlinear`, `dt`,
/// `T`, `scheme`, `seed`, `realization`, `initial`, `forcing`,
/// `decomposition_level`, `diagnostics_every`, `snapshot_every`, `p`, `gamma`,
/// `cfl_warn`, `cfl_max`, `brownian_substeps`, and `passive_initial`, `passive_forcing` holding
/// one entry per passive scalar separated by `|`.
pub fn simulation_config(file: &ConfigFile, base: SimulationConfig) -> Result<SimulationConfig, ConfigError> {
    let mut c = base;
    macro_rules! set {
        ($key:literal, $field:expr) => {
            if let Some(v) = file.get($key)? {
                $field = v;
            }
        };
    }
    set!("n", c.n);
    set!("length", c.length);
    set!("beta", c.beta);
    if let Some(v) = file.flag("noise")? {
        c.noise.enabled = v;
    }
    set!("alpha", c.noise.alpha);
    set!("cutoff", c.noise.cutoff);
    set!("noise_delta", c.noise.delta);
    set!("viscosity", c.viscosity);
    set!("kernel_delta", c.kernel_delta);
    set!("data_delta", c.data_delta);
    if let Some(m) = file.get_with("mollifier", parse_mollifier)? {
        c.mollifier = m;
    }
    if let Some(v) = file.flag("nonlinear")? {
        c.nonlinear = v;
    }
    set!("dt", c.dt);
    set!("T", c.horizon);
    if let Some(s) = file.get_with("scheme", |v| v.parse::<Scheme>())? {
        c.scheme = s;
    }
    set!("seed", c.seed);
    set!("realization", c.realization);
    if let Some(ic) = file.get_with("initial", |v| v.parse::<InitialCondition>())? {
        c.initial = ic;
    }
    if let Some(f) = file.get_with("forcing", |v| v.parse::<ForcingSpec>())? {
        c.forcing = f;
    }
    set!("decomposition_level", c.decomposition_level);
    set!("diagnostics_every", c.diagnostics_every);
    set!("snapshot_every", c.snapshot_every);
    set!("p", c.p);
    if let Some(g) = file.get::<f64>("gamma")? {
        c.gamma = Some(g);
    }
    set!("cfl_warn", c.cfl_warn);
    set!("cfl_max", c.cfl_max);
    set!("brownian_substeps", c.brownian_substeps);
    if let Some(p) = passive_specs(file)? {
        c.passive = p;
    }
    c.validate().map_err(|e| ConfigError {
        line: None,
        message: e.to_string(),
    })?;
    Ok(c)
}

fn passive_specs(file: &ConfigFile) -> Result<Option<Vec<PassiveSpec>>, ConfigError> {
    let split = |v: &str| v.split('|').map(|s| s.trim().to_string()).collect::<Vec<_>>();
    let initial = file.get_with("passive_initial", |v| {
        split(v).iter().map(|s| s.parse::<InitialCondition>()).collect::<Result<Vec<_>, _>>()
    })?;
    let forcing = file.get_with("passive_forcing", |v| {
        split(v).iter().map(|s| s.parse::<ForcingSpec>()).collect::<Result<Vec<_>, _>>()
    })?;
    match (initial, forcing) {
        (None, None) => Ok(None),
        (None, Some(_)) => Err(ConfigError {
            line: file.line_of("passive_forcing"),
            message: "passive_forcing given without passive_initial".into(),
        }),
        (Some(init), forcing) => {
            let forcing = forcing.unwrap_or_else(|| vec![ForcingSpec::Zero; init.len()]);
            if forcing.len() != init.len() {
                return Err(ConfigError {
                    line: file.line_of("passive_forcing"),
                    message: format!(
                        "{} passive forcings for {} passive scalars",
                        forcing.len(),
                        init.len()
                    ),
                });
            }
            Ok(Some(
                init.into_iter()
                    .zip(forcing)
                    .map(|(initial, forcing)| PassiveSpec { initial, forcing })
                    .collect(),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_tracks_usage() {
        let f = ConfigFile::parse("# header\nn = 32\n\nbeta = 0.25 # trailing\nnus = 1e-3, 3e-3\n").unwrap();
        assert_eq!(f.get::<usize>("n").unwrap(), Some(32));
        assert_eq!(f.list::<f64>("nus").unwrap(), Some(vec![1e-3, 3e-3]));
        let err = f.finish().unwrap_err();
        assert_eq!(err.line, Some(4));
        assert!(err.to_string().contains("beta"));
    }

    #[test]
    fn line_numbered_errors() {
        let e = ConfigFile::parse("n = 32\noops\n").unwrap_err();
        assert_eq!(e.to_string(), "line 2: expected `key = value`, found `oops`");
        let e = ConfigFile::parse("n = 1\nn = 2\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let f = ConfigFile::parse("\n\nn = many\n").unwrap();
        assert_eq!(f.get::<usize>("n").unwrap_err().line, Some(3));
    }

    #[test]
    fn simulation_keys() {
        let f = ConfigFile::parse(
            "n = 32\nbeta = 0.3\nnoise = off\nscheme = deterministic-rk4\ninitial = mode 1 0 1\nforcing = steady mode 0 1 0.5\nT = 0.5\ndt = 0.01\nmollifier = bump\n",
        )
        .unwrap();
        let c = simulation_config(&f, SimulationConfig::default()).unwrap();
        f.finish().unwrap();
        assert_eq!(c.n, 32);
        assert!(!c.noise.enabled);
        assert_eq!(c.scheme, Scheme::DeterministicRk4);
        assert_eq!(c.mollifier, Mollifier::Cutoff(CutoffProfile::BumpIntegral));
        let bad = ConfigFile::parse("scheme = rk5\n").unwrap();
        assert_eq!(simulation_config(&bad, SimulationConfig::default()).unwrap_err().line, Some(1));
    }
}
