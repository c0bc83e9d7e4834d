//! Run configuration: a JSON file merged under command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Kplus,
    Smatrix,
    Ensemble,
    Stats,
    Trace,
    Spectrum,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Kplus => "kplus",
            Self::Smatrix => "smatrix",
            Self::Ensemble => "ensemble",
            Self::Stats => "stats",
            Self::Trace => "trace",
            Self::Spectrum => "spectrum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum EnsembleChoice {
    #[value(name = "A")]
    A,
    #[value(name = "B")]
    B,
    /// Block matrix of dimension 2 n0.
    #[value(name = "C")]
    C,
    #[serde(rename = "c")]
    #[value(name = "c")]
    SmallC,
    #[serde(rename = "xi")]
    #[value(name = "xi")]
    Xi,
    #[serde(rename = "lax")]
    #[value(name = "lax")]
    Lax,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub h1: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub kind: Option<EnsembleChoice>,
    pub dim: Option<usize>,
    pub realisations: Option<usize>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub n_terms: Option<usize>,
    pub n_evanescent: Option<usize>,
    pub dk: Option<f64>,
    pub bins: Option<usize>,
    pub s_max: Option<f64>,
    pub l_max: Option<f64>,
    /// Truncation R of the Q-matrix check.
    pub q_dim: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub k: Option<f64>,
    pub k_min: Option<f64>,
    pub k_max: Option<f64>,
    /// `lo:hi:step`
    pub alpha_sweep: Option<String>,
}

/// Every field is optional; commands apply their own defaults and report
/// missing required fields by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandName>,
    pub geometry: GeometryConfig,
    pub ensemble: EnsembleConfig,
    pub numerics: NumericsConfig,
    pub scan: ScanConfig,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

macro_rules! overlay {
    ($top:expr, $base:expr; $($field:ident),*) => {
        Self { $($field: $top.$field.or($base.$field)),* }
    };
}

impl GeometryConfig {
    fn over(self, base: Self) -> Self {
        overlay!(self, base; a, b, h1)
    }
}

impl EnsembleConfig {
    fn over(self, base: Self) -> Self {
        overlay!(self, base; kind, dim, realisations, alpha)
    }
}

impl NumericsConfig {
    fn over(self, base: Self) -> Self {
        overlay!(self, base; n_terms, n_evanescent, dk, bins, s_max, l_max, q_dim)
    }
}

impl ScanConfig {
    fn over(self, base: Self) -> Self {
        overlay!(self, base; k, k_min, k_max, alpha_sweep)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| CliError::ConfigParse {
            path: path.to_owned(),
            source,
        })
    }

    /// Fields set in `self` win over `base`.
    pub fn over(self, base: Self) -> Self {
        Self {
            command: self.command.or(base.command),
            geometry: self.geometry.over(base.geometry),
            ensemble: self.ensemble.over(base.ensemble),
            numerics: self.numerics.over(base.numerics),
            scan: self.scan.over(base.scan),
            seed: self.seed.or(base.seed),
            output_dir: self.output_dir.or(base.output_dir),
        }
    }
}

pub fn require<T>(value: Option<T>, field: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::validation(field, "required"))
}

pub fn positive(value: f64, field: &str) -> CliResult<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::validation(field, format!("must be positive and finite, got {value}")))
    }
}

pub fn nonzero(value: usize, field: &str) -> CliResult<usize> {
    if value > 0 {
        Ok(value)
    } else {
        Err(CliError::validation(field, "must be at least 1"))
    }
}

/// Inclusive arithmetic sweep `lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Sweep {
    pub fn parse(text: &str, field: &str) -> CliResult<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let [lo, hi, step] = parts.as_slice() else {
            return Err(CliError::validation(field, format!("expected lo:hi:step, got `{text}`")));
        };
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::validation(field, format!("`{s}` is not a number")))
        };
        let sweep = Self {
            lo: num(lo)?,
            hi: num(hi)?,
            step: num(step)?,
        };
        if !(sweep.step > 0.0) {
            return Err(CliError::validation(field, "step must be positive"));
        }
        if sweep.hi < sweep.lo {
            return Err(CliError::validation(field, "empty sweep range"));
        }
        Ok(sweep)
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.lo + self.step * i as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let s = Sweep::parse("50:190:1", "alpha_sweep").unwrap();
        assert_eq!(s.values().len(), 141);
        assert_eq!(s.values()[140], 190.0);
        assert_eq!(Sweep::parse("1:1:0.5", "x").unwrap().values(), vec![1.0]);
        for bad in ["5:1:1", "1:2", "1:2:0", "a:2:1"] {
            assert!(matches!(Sweep::parse(bad, "x"), Err(CliError::Validation { .. })), "{bad}");
        }
    }

    #[test]
    fn flags_override_file() {
        let file: RunConfig = serde_json::from_str(
            r#"{"geometry": {"a": 1.0, "b": 2.0}, "seed": 3, "numerics": {"bins": 50}}"#,
        )
        .unwrap();
        let flags = RunConfig {
            geometry: GeometryConfig {
                b: Some(5.0),
                ..Default::default()
            },
            seed: Some(9),
            ..Default::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.geometry.a, Some(1.0));
        assert_eq!(merged.geometry.b, Some(5.0));
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.numerics.bins, Some(50));
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"geometry": {"c": 1.0}}"#).is_err());
        let kinds: EnsembleConfig = serde_json::from_str(r#"{"kind": "c"}"#).unwrap();
        assert_eq!(kinds.kind, Some(EnsembleChoice::SmallC));
    }

    #[test]
    fn checks_name_the_field() {
        let err = require::<f64>(None, "scan.k").unwrap_err();
        assert!(err.to_string().contains("scan.k"));
        assert!(positive(-1.0, "dk").is_err());
        assert!(nonzero(0, "bins").is_err());
    }
}
