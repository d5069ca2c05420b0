//! Experiment configuration: a sectioned TOML file.
//!
//! ```toml
//! [experiment]
//! name = "pam-oracle"
//! seed = 7
//!
//! [kernel]
//! variant = "constant"
//! c = 1.0
//!
//! [grid]
//! dim = 1
//! extent = 8.0
//! cells = 64          # or: spacing = 0.125
//!
//! [scheme]
//! dt = 1e-3
//! ordering = "strang"
//!
//! [mc]
//! replicas = 1000
//! paths = 20000
//! path_dt = 0.01
//!
//! [[readout]]
//! kind = "constant"
//! value = 1.0
//!
//! [output]
//! dir = "out"
//!
//! [params]
//! t = 1.0
//! ```
//!
//! Kernel variants and their keys: `constant` (`c`), `stationary_power`
//! (`eps`, `alpha`), `scaled_theta` (`a`, `profile` = `gaussian` | `flat`),
//! `indicator_ball` (`radius`, `height`), `tabulated` (`table`, a path
//! relative to the config file). Readout kinds: `constant` (`value`),
//! `gaussian_bump` (`center`, `width`), `indicator_ball` (`center`,
//! `radius`). `[params]` holds experiment-specific knobs; unknown keys in
//! the other sections are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sbmre_core::covariance::{CovarianceKernel, RadialTable, ThetaProfile};
use sbmre_core::heatkernel::Torus;
use sbmre_core::readout::Readout;
use sbmre_core::spde::{Ordering, Scheme};
use sbmre_core::{Grid, Kernel, ReadoutFn};

use crate::CliError;

pub const EXPERIMENTS: [&str; 8] = [
    "moments-triangle",
    "pam-oracle",
    "comparison-suite",
    "threshold-table",
    "extinction-scan",
    "persistence-scan",
    "duality-ladder",
    "lyapunov-ladder",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub kernel: KernelSection,
    pub grid: GridSection,
    pub scheme: SchemeSection,
    pub mc: McSection,
    #[serde(default)]
    pub readout: Vec<ReadoutSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub params: toml::Table,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub variant: String,
    pub c: Option<f64>,
    pub eps: Option<f64>,
    pub alpha: Option<f64>,
    pub a: Option<f64>,
    pub profile: Option<String>,
    pub radius: Option<f64>,
    pub height: Option<f64>,
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub extent: f64,
    pub cells: Option<usize>,
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub dt: f64,
    #[serde(default = "default_ordering")]
    pub ordering: String,
}

fn default_ordering() -> String {
    "strang".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub replicas: usize,
    pub paths: usize,
    pub path_dt: f64,
    #[serde(default)]
    pub antithetic: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSection {
    pub kind: String,
    pub value: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub width: Option<f64>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_dir() }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(format!("`{name}` must be positive and finite, got {v}")))
    }
}

fn need(name: &str, v: Option<f64>) -> Result<f64, CliError> {
    v.ok_or_else(|| bad(format!("kernel: missing `{name}`")))
}

/// A parsed, validated configuration together with the text it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// Directory of the config file, for relative table paths.
    pub base: PathBuf,
    pub path: PathBuf,
    canonical: String,
}

impl LoadedConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, base, path.to_path_buf())
    }

    pub fn from_str(text: &str, base: PathBuf, path: PathBuf) -> Result<Self, CliError> {
        let value: toml::Table = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        let config: ExperimentConfig = value.clone().try_into().map_err(|e: toml::de::Error| bad(e.to_string()))?;
        let canonical = toml::to_string(&value).map_err(|e| bad(e.to_string()))?;
        let loaded = LoadedConfig {
            config,
            base,
            path,
            canonical,
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn seed(&self) -> u64 {
        self.config.experiment.seed
    }

    /// First 16 hex digits of `sha256(canonical config, seed)`.
    pub fn hash(&self, seed: u64) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical.as_bytes());
        h.update(seed.to_le_bytes());
        hex::encode(h.finalize())[..16].to_string()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        if !EXPERIMENTS.contains(&c.experiment.name.as_str()) {
            return Err(bad(format!(
                "unknown experiment `{}` (expected one of {})",
                c.experiment.name,
                EXPERIMENTS.join(", ")
            )));
        }
        if c.readout.is_empty() {
            return Err(bad("readout catalog is empty"));
        }
        positive("scheme.dt", c.scheme.dt)?;
        Ordering::from_name(&c.scheme.ordering)?;
        if c.mc.replicas == 0 || c.mc.paths == 0 {
            return Err(bad("mc.replicas and mc.paths must be positive"));
        }
        positive("mc.path_dt", c.mc.path_dt)?;
        self.grid()?;
        self.kernel()?;
        self.readouts()?;
        for (k, v) in &c.params {
            check_param(k, v)?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let g = &self.config.grid;
        if g.dim == 0 {
            return Err(bad("grid.dim must be positive"));
        }
        positive("grid.extent", g.extent)?;
        let cells = match (g.cells, g.spacing) {
            (Some(n), None) => n,
            (None, Some(h)) => {
                let n = g.extent / positive("grid.spacing", h)?;
                if (n - n.round()).abs() > 1e-9 * n {
                    return Err(bad("grid.spacing must divide grid.extent"));
                }
                n.round() as usize
            }
            _ => return Err(bad("grid: give exactly one of `cells` or `spacing`")),
        };
        if cells == 0 {
            return Err(bad("grid.cells must be positive"));
        }
        Ok(Torus::new(g.dim, cells, g.extent)?)
    }

    pub fn scheme(&self) -> Result<Scheme<f64>, CliError> {
        let s = &self.config.scheme;
        Ok(Scheme::new(s.dt, Ordering::from_name(&s.ordering)?)?)
    }

    pub fn kernel(&self) -> Result<Kernel, CliError> {
        let k = &self.config.kernel;
        let d = self.config.grid.dim;
        let kernel = match k.variant.as_str() {
            "constant" => CovarianceKernel::constant(d, need("c", k.c)?)?,
            "stationary_power" => CovarianceKernel::stationary_power(d, need("eps", k.eps)?, need("alpha", k.alpha)?)?,
            "scaled_theta" => {
                let profile = ThetaProfile::from_name(k.profile.as_deref().unwrap_or("gaussian"))?;
                CovarianceKernel::scaled_theta(d, need("a", k.a)?, profile)?
            }
            "indicator_ball" => CovarianceKernel::indicator_ball(d, need("radius", k.radius)?, need("height", k.height)?)?,
            "tabulated" => {
                let rel = k.table.as_ref().ok_or_else(|| bad("kernel: missing `table`"))?;
                CovarianceKernel::tabulated(d, RadialTable::load(self.base.join(rel))?)?
            }
            other => return Err(bad(format!("unknown kernel variant `{other}`"))),
        };
        Ok(kernel)
    }

    pub fn readouts(&self) -> Result<Vec<ReadoutFn>, CliError> {
        let d = self.config.grid.dim;
        self.config
            .readout
            .iter()
            .map(|r| {
                let center = || -> Result<Vec<f64>, CliError> {
                    let c = r.center.clone().unwrap_or_else(|| vec![0.0; d]);
                    if c.len() != d {
                        return Err(bad(format!("readout center has {} coordinates, grid has {d}", c.len())));
                    }
                    Ok(c)
                };
                let field = |name: &str, v: Option<f64>| v.ok_or_else(|| bad(format!("readout `{}`: missing `{name}`", r.kind)));
                Ok(match r.kind.as_str() {
                    "constant" => Readout::constant(field("value", r.value)?),
                    "gaussian_bump" => Readout::gaussian_bump(center()?, field("width", r.width)?)?,
                    "indicator_ball" => Readout::indicator_ball(center()?, field("radius", r.radius)?)?,
                    other => return Err(bad(format!("unknown readout kind `{other}`"))),
                })
            })
            .collect()
    }

    pub fn params(&self) -> Params<'_> {
        Params(&self.config.params)
    }
}

/// Numbers in `[params]` must be finite; lists must hold numbers.
fn check_param(key: &str, v: &toml::Value) -> Result<(), CliError> {
    match v {
        toml::Value::Float(x) if !x.is_finite() => Err(bad(format!("params.{key} must be finite"))),
        toml::Value::Array(xs) => xs.iter().try_for_each(|x| check_param(key, x)),
        _ => Ok(()),
    }
}

/// Typed access to `[params]` with defaults.
pub struct Params<'a>(&'a toml::Table);

impl Params<'_> {
    fn num(v: &toml::Value) -> Option<f64> {
        match v {
            toml::Value::Float(x) => Some(*x),
            toml::Value::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => Self::num(v).ok_or_else(|| bad(format!("params.{key} must be a number"))),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(_) => Err(bad(format!("params.{key} must be a non-negative integer"))),
        }
    }

    pub fn str(&self, key: &str, default: &str) -> Result<String, CliError> {
        match self.0.get(key) {
            None => Ok(default.to_string()),
            Some(toml::Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(bad(format!("params.{key} must be a string"))),
        }
    }

    pub fn bool(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(toml::Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(bad(format!("params.{key} must be a boolean"))),
        }
    }

    pub fn f64s(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.0.get(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(xs)) => xs
                .iter()
                .map(|x| Self::num(x).ok_or_else(|| bad(format!("params.{key} must hold numbers"))))
                .collect(),
            Some(_) => Err(bad(format!("params.{key} must be an array"))),
        }
    }

    pub fn usizes(&self, key: &str, default: &[usize]) -> Result<Vec<usize>, CliError> {
        match self.0.get(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(xs)) => xs
                .iter()
                .map(|x| match x {
                    toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                    _ => Err(bad(format!("params.{key} must hold non-negative integers"))),
                })
                .collect(),
            Some(_) => Err(bad(format!("params.{key} must be an array"))),
        }
    }

    pub fn strs(&self, key: &str, default: &[&str]) -> Result<Vec<String>, CliError> {
        match self.0.get(key) {
            None => Ok(default.iter().map(|s| s.to_string()).collect()),
            Some(toml::Value::Array(xs)) => xs
                .iter()
                .map(|x| x.as_str().map(str::to_string).ok_or_else(|| bad(format!("params.{key} must hold strings"))))
                .collect(),
            Some(_) => Err(bad(format!("params.{key} must be an array"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[experiment]
name = "threshold-table"
seed = 3

[kernel]
variant = "constant"
c = 1.0

[grid]
dim = 1
extent = 8.0
cells = 16

[scheme]
dt = 0.01

[mc]
replicas = 10
paths = 10
path_dt = 0.1

[[readout]]
kind = "constant"
value = 1.0
"#;

    fn load(text: &str) -> Result<LoadedConfig, CliError> {
        LoadedConfig::from_str(text, PathBuf::new(), PathBuf::from("test.toml"))
    }

    #[test]
    fn minimal_config_parses() {
        let c = load(MINIMAL).unwrap();
        assert_eq!(c.seed(), 3);
        assert_eq!(c.grid().unwrap().cells(), 16);
        assert_eq!(c.hash(3).len(), 16);
        assert_ne!(c.hash(3), c.hash(4));
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = load(MINIMAL).unwrap();
        let b = load(&MINIMAL.replace("c = 1.0", "c    =   1.0   # comment")).unwrap();
        assert_eq!(a.hash(0), b.hash(0));
    }

    #[test]
    fn empty_readout_catalog_is_rejected() {
        let text = MINIMAL.replace("[[readout]]\nkind = \"constant\"\nvalue = 1.0\n", "");
        assert!(matches!(load(&text), Err(CliError::Config(m)) if m.contains("readout")));
    }

    #[test]
    fn non_positive_numbers_are_rejected() {
        for (from, to) in [("dt = 0.01", "dt = 0.0"), ("extent = 8.0", "extent = -1.0"), ("replicas = 10", "replicas = 0")] {
            assert!(load(&MINIMAL.replace(from, to)).is_err(), "{to}");
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(load(&MINIMAL.replace("threshold-table", "nope")).is_err());
        assert!(load(&MINIMAL.replace("variant = \"constant\"", "variant = \"wavy\"")).is_err());
        assert!(load(&MINIMAL.replace("cells = 16", "cells = 16\ncolour = 2")).is_err());
    }

    #[test]
    fn spacing_alternative() {
        let c = load(&MINIMAL.replace("cells = 16", "spacing = 0.5")).unwrap();
        assert_eq!(c.grid().unwrap().cells(), 16);
        assert!(load(&MINIMAL.replace("cells = 16", "spacing = 0.3")).is_err());
    }
}
