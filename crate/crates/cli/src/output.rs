use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use vstat::{CylinderKernel, Measure};

use crate::CliError;

/// Base of the logarithm used for printed entropies. Computation is always
/// in nats.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LogBase {
    #[default]
    E,
    Base(f64),
}

impl LogBase {
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            LogBase::E => nats,
            LogBase::Base(b) => nats / b.ln(),
        }
    }

    pub fn convert_opt(self, nats: Option<f64>) -> Option<f64> {
        nats.map(|h| self.convert(h))
    }
}

impl FromStr for LogBase {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "e" {
            return Ok(LogBase::E);
        }
        match s.parse::<f64>() {
            Ok(b) if b.is_finite() && b > 0.0 && b != 1.0 => Ok(LogBase::Base(b)),
            _ => Err(format!(
                "log base must be `e` or a positive number other than 1, got {s:?}"
            )),
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogBase::E => f.write_str("e"),
            LogBase::Base(b) => write!(f, "{b}"),
        }
    }
}

impl Serialize for LogBase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LogBase {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A file when given, stdout otherwise.
pub fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_json<T: Serialize>(path: Option<&PathBuf>, value: &T) -> anyhow::Result<()> {
    let mut out = sink(path.map(PathBuf::as_path))?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn csv_writer(path: Option<&PathBuf>) -> anyhow::Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(sink(path.map(PathBuf::as_path))?))
}

/// Empty cell for `None`.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn read_kernel(path: &Path) -> anyhow::Result<CylinderKernel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read kernel {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("bad kernel {}: {e}", path.display())).into())
}

pub fn read_measure(path: &Path) -> anyhow::Result<Measure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read measure {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("bad measure {}: {e}", path.display())).into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bases() {
        assert_eq!("e".parse::<LogBase>().unwrap(), LogBase::E);
        assert_eq!("2".parse::<LogBase>().unwrap(), LogBase::Base(2.0));
        assert!("1".parse::<LogBase>().is_err());
        assert!("-3".parse::<LogBase>().is_err());
        assert!("ten".parse::<LogBase>().is_err());
    }

    #[test]
    fn converts_to_bits() {
        let bits = LogBase::Base(2.0).convert(std::f64::consts::LN_2);
        assert!((bits - 1.0).abs() < 1e-15);
        assert_eq!(LogBase::E.convert(0.3), 0.3);
    }
}
