//! Flat `key = value` configuration files.
//!
//! ```text
//! # array under study
//! array.N = 5
//! array.C0 = 0.70
//! array.eta = 0.025
//! array.f = 1, 1, 1, 1
//!
//! sweep.N = 3, 5, 7
//! sweep.variant = a
//! sweep.optimized = true
//! sweep.z.start = 0
//! sweep.z.stop = 60
//! sweep.z.steps = 601
//!
//! output.path = vlf.csv
//! output.format = csv
//! ```
//!
//! Lists are comma separated. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entanglement::Variant;
use crate::error::{Error, Result};
use crate::lattice::ArrayConfig;

pub const DEFAULT_C0: f64 = 0.70;
pub const DEFAULT_ETA: f64 = 0.025;
pub const DEFAULT_N: usize = 5;

const KNOWN_KEYS: &[&str] = &[
    "array.N",
    "array.C0",
    "array.eta",
    "array.f",
    "sweep.C0",
    "sweep.eta",
    "sweep.N",
    "sweep.l",
    "sweep.variant",
    "sweep.optimized",
    "sweep.z.start",
    "sweep.z.stop",
    "sweep.z.steps",
    "output.path",
    "output.format",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidConfig(format!("unknown output format {other:?}"))),
        }
    }
}

/// Parsed `key = value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::InvalidConfig(format!(
                    "line {}: unknown key {key:?}",
                    lineno + 1
                )));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::InvalidConfig(format!(
                    "line {}: duplicate key {key:?}",
                    lineno + 1
                )));
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn scalar<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key).map(|v| parse_value(key, v)).transpose()
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                let items = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_value(key, s))
                    .collect::<Result<Vec<T>>>()?;
                if items.is_empty() {
                    return Err(Error::InvalidConfig(format!("{key}: empty list")));
                }
                Ok(items)
            })
            .transpose()
    }

    /// `array.*` keys over the defaults; a missing `array.f` means a
    /// homogeneous array.
    pub fn array(&self) -> Result<ArrayConfig> {
        let n = self.scalar("array.N")?.unwrap_or(DEFAULT_N);
        let c0 = self.scalar("array.C0")?.unwrap_or(DEFAULT_C0);
        let eta = self.scalar("array.eta")?.unwrap_or(DEFAULT_ETA);
        match self.list::<f64>("array.f")? {
            Some(f) => ArrayConfig::new(n, c0, f, eta),
            None => ArrayConfig::homogeneous(n, c0, eta),
        }
    }

    pub fn sweep(&self) -> Result<SweepSpec> {
        let array = self.array()?;
        let z = ZGrid::new(
            self.scalar("sweep.z.start")?.unwrap_or(0.0),
            self.scalar("sweep.z.stop")?.unwrap_or(60.0),
            self.scalar("sweep.z.steps")?.unwrap_or(601),
        )?;
        let spec = SweepSpec {
            c0: self.list("sweep.C0")?.unwrap_or_else(|| vec![array.c0()]),
            eta: self.list("sweep.eta")?.unwrap_or_else(|| vec![array.eta()]),
            n: self.list("sweep.N")?.unwrap_or_else(|| vec![array.n()]),
            l: self.list("sweep.l")?.unwrap_or_default(),
            variant: self.list("sweep.variant")?.unwrap_or_else(|| vec![Variant::A]),
            optimized: self.scalar("sweep.optimized")?.unwrap_or(true),
            z,
            output: self.get("output.path").map(PathBuf::from),
            format: self.scalar("output.format")?.unwrap_or_default(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

/// Evenly spaced propagation distances, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZGrid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl ZGrid {
    pub fn new(start: f64, stop: f64, steps: usize) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite()) || start < 0.0 {
            return Err(Error::InvalidConfig(format!("invalid z range [{start}, {stop}]")));
        }
        if steps == 0 {
            return Err(Error::InvalidConfig("z grid needs at least one step".into()));
        }
        if steps > 1 && stop <= start {
            return Err(Error::InvalidConfig(format!("z stop {stop} must exceed start {start}")));
        }
        Ok(ZGrid { start, stop, steps })
    }

    pub fn single(z: f64) -> Result<Self> {
        ZGrid::new(z, z, 1)
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.stop
                } else {
                    self.start + k as f64 * h
                }
            })
            .collect()
    }
}

/// Cross product of parameter grids. When `l` is non-empty the sweep uses
/// the large-coupling closed forms over `l` and ignores `c0` and `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub c0: Vec<f64>,
    pub eta: Vec<f64>,
    pub n: Vec<usize>,
    pub l: Vec<usize>,
    pub variant: Vec<Variant>,
    pub optimized: bool,
    pub z: ZGrid,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.eta.is_empty() || self.variant.is_empty() {
            return Err(Error::InvalidConfig("sweep grids must be non-empty".into()));
        }
        if self.l.is_empty() && (self.c0.is_empty() || self.n.is_empty()) {
            return Err(Error::InvalidConfig("sweep grids must be non-empty".into()));
        }
        if self.eta.iter().chain(&self.c0).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("sweep grids must be finite".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_example() {
        let text = "# demo\narray.N = 7\narray.C0 = 1.5 # inline\nsweep.N = 3, 5\nsweep.variant = a, b\nsweep.z.steps = 3\nsweep.z.stop = 2\noutput.format = json\n";
        let cfg = ConfigFile::parse(text).unwrap();
        let array = cfg.array().unwrap();
        assert_eq!(array.n(), 7);
        assert_eq!(array.c0(), 1.5);
        assert_eq!(array.eta(), DEFAULT_ETA);
        let spec = cfg.sweep().unwrap();
        assert_eq!(spec.n, vec![3, 5]);
        assert_eq!(spec.variant, vec![Variant::A, Variant::B]);
        assert_eq!(spec.z.points(), vec![0.0, 1.0, 2.0]);
        assert_eq!(spec.format, OutputFormat::Json);
        assert!(spec.optimized);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigFile::parse("array.N 5").is_err());
        assert!(ConfigFile::parse("array.M = 5").is_err());
        assert!(ConfigFile::parse("array.N = 5\narray.N = 7").is_err());
        assert!(ConfigFile::parse("array.N = five").unwrap().array().is_err());
        assert!(ConfigFile::parse("sweep.N = ,").unwrap().sweep().is_err());
    }

    #[test]
    fn profile_key() {
        let cfg = ConfigFile::parse("array.N = 3\narray.f = 1, 2").unwrap();
        assert_eq!(cfg.array().unwrap().profile(), &[1.0, 2.0]);
        let bad = ConfigFile::parse("array.N = 3\narray.f = 1").unwrap();
        assert!(bad.array().is_err());
    }

    #[test]
    fn z_grid() {
        assert_eq!(ZGrid::single(4.0).unwrap().points(), vec![4.0]);
        assert!(ZGrid::new(0.0, 1.0, 0).is_err());
        assert!(ZGrid::new(2.0, 1.0, 3).is_err());
        assert!(ZGrid::new(-1.0, 1.0, 3).is_err());
        let pts = ZGrid::new(0.0, 60.0, 601).unwrap().points();
        assert_eq!(pts.len(), 601);
        assert_eq!(pts[600], 60.0);
    }
}
