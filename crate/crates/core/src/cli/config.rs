//! Run configuration, read from TOML.
//!
//! ```toml
//! n = 2
//! rho = 1.0
//! seed = 7                 # optional, default 0
//! output_dir = "out"       # optional, default "spherimax-out"
//! rho_tilde = 0.25         # multiplicity only
//!
//! [functional]
//! name = "NORM_POWER"
//! params = { q = 1.0 }     # optional
//!
//! [r_range]                # optional; auto range when absent
//! lo = 1.1
//! hi = 3.0
//! count = 9
//!
//! [tolerances]             # optional, any subset
//! tol_val = 1e-7
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::functionals::zoo_get;
use crate::space::{ProblemInstance, Tolerances};

pub const DEFAULT_OUTPUT_DIR: &str = "spherimax-out";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("invalid value for `{key}`: {detail}")]
    Invalid { key: String, detail: String },
}

impl ConfigError {
    fn invalid(key: &str, detail: impl Into<String>) -> Self {
        Self::Invalid { key: key.to_string(), detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub functional: FunctionalConfig,
    pub n: usize,
    pub rho: f64,
    #[serde(default)]
    pub r_range: Option<RRange>,
    #[serde(default)]
    pub rho_tilde: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(DEFAULT_OUTPUT_DIR)
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((1, 1));
            ConfigError::Parse { path: path.to_path_buf(), line, column, message: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.functional.name.trim().is_empty() {
            return Err(ConfigError::invalid("functional.name", "must not be empty"));
        }
        if self.n == 0 {
            return Err(ConfigError::invalid("n", "dimension must be at least 1"));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(ConfigError::invalid("rho", format!("must be positive and finite, got {}", self.rho)));
        }
        if let Some(r) = self.r_range {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo < r.hi) {
                return Err(ConfigError::invalid(
                    "r_range",
                    format!("need finite lo < hi, got lo = {}, hi = {}", r.lo, r.hi),
                ));
            }
            if r.count < 3 {
                return Err(ConfigError::invalid("r_range.count", format!("must be at least 3, got {}", r.count)));
            }
        }
        if let Some(t) = self.rho_tilde {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError::invalid("rho_tilde", format!("must be positive, got {t}")));
            }
        }
        self.tolerances.validate().map_err(|e| match e {
            crate::error::Error::InvalidTolerance { name, detail } => {
                ConfigError::invalid(&format!("tolerances.{name}"), detail)
            }
            other => ConfigError::invalid("tolerances", other.to_string()),
        })
    }

    /// Builds the problem instance; errors name the offending key.
    pub fn instance(&self) -> Result<ProblemInstance, ConfigError> {
        let f = zoo_get(&self.functional.name, &self.functional.params, self.n).map_err(|e| match e {
            crate::error::Error::ParameterDomain { param, detail, .. } => {
                ConfigError::invalid(&format!("functional.params.{param}"), detail)
            }
            crate::error::Error::UnknownFunctional(_) => ConfigError::invalid("functional.name", e.to_string()),
            other => ConfigError::invalid("functional", other.to_string()),
        })?;
        ProblemInstance::new(f, self.rho, self.tolerances)
            .map(|i| i.with_seed(self.seed))
            .map_err(|e| ConfigError::invalid("rho", e.to_string()))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    RunConfig::parse(&text, path)
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::parse(s, Path::new("test.toml"))
    }

    const MINIMAL: &str = "n = 2\nrho = 1.0\n[functional]\nname = \"NORM_POWER\"\nparams = { q = 1.0 }\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.output_dir, PathBuf::from(DEFAULT_OUTPUT_DIR));
        assert!(c.r_range.is_none() && c.rho_tilde.is_none());
        assert_eq!(c.instance().unwrap().n, 2);
    }

    #[test]
    fn negative_rho_names_the_key() {
        let err = parse(&MINIMAL.replace("rho = 1.0", "rho = -1.0")).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "rho"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_position() {
        let err = parse(&format!("foo = 1\n{MINIMAL}")).unwrap_err();
        match err {
            ConfigError::Parse { line, message, .. } => {
                assert!(message.contains("foo"), "{message}");
                assert_eq!(line, 1);
            }
            other => panic!("{other}"),
        }
        assert!(parse(&format!("{MINIMAL}[tolerances]\ntol_vall = 1e-3\n")).is_err());
    }

    #[test]
    fn partial_tolerance_override() {
        let c = parse(&format!("{MINIMAL}[tolerances]\ntol_val = 1e-6\n")).unwrap();
        assert_eq!(c.tolerances.tol_val, 1e-6);
        assert_eq!(c.tolerances.restarts, Tolerances::default().restarts);
        let err = parse(&format!("{MINIMAL}[tolerances]\nrestarts = 2\n")).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "tolerances.restarts"), "{err}");
    }

    #[test]
    fn range_and_functional_validation() {
        let bad = format!("{MINIMAL}[r_range]\nlo = 3.0\nhi = 1.0\ncount = 5\n");
        assert!(matches!(parse(&bad), Err(ConfigError::Invalid { key, .. }) if key == "r_range"));
        let bad = format!("{MINIMAL}[r_range]\nlo = 1.0\nhi = 3.0\ncount = 2\n");
        assert!(matches!(parse(&bad), Err(ConfigError::Invalid { key, .. }) if key == "r_range.count"));
        let missing = "n = 2\nrho = 1.0\n[functional]\nparams = {}\n";
        assert!(matches!(parse(missing), Err(ConfigError::Parse { .. })));
        let c = parse(&MINIMAL.replace("q = 1.0", "q = 5.0")).unwrap();
        assert!(matches!(c.instance(), Err(ConfigError::Invalid { key, .. }) if key == "functional.params.q"));
    }
}
