//! The JSON model format.
//!
//! ```json
//! {
//!   "arrival": { "alpha": [1.0], "T": [[-0.5]] },
//!   "service": { "L0": [[-1.0]], "L1": [[1.0]] },
//!   "vacation": { "rate": 1.0 },
//!   "options": { "report_levels": 10 }
//! }
//! ```
//!
//! Unknown keys are rejected at every level.

use std::path::Path;

use qvsolve_core::kernels::{KernelOptions, DEFAULT_N_MAX, DEFAULT_TAIL_TOL};
use qvsolve_core::model::{ExitPolicy, ModelDescription};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_REPORT_LEVELS: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub arrival: Arrival,
    pub service: Service,
    pub vacation: Vacation,
    #[serde(default)]
    pub options: Options,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arrival {
    pub alpha: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Service {
    #[serde(rename = "L0")]
    pub l0: Vec<Vec<f64>>,
    #[serde(rename = "L1")]
    pub l1: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vacation {
    pub rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Hard cap on the kernel truncation level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Tail tolerance of the kernel families.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Levels listed in the per-level tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_levels: Option<usize>,
    /// Accept arrival laws whose exit vector has small negative entries, as
    /// in the first reference model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allow_signed_exit: Option<bool>,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|message| CliError::Parse { path: path.to_path_buf(), message })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        file.check_options()?;
        Ok(file)
    }

    fn check_options(&self) -> std::result::Result<(), String> {
        if let Some(eps) = self.options.eps {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(format!("options.eps must lie in (0, 1), got {eps}"));
            }
        }
        if self.options.n_max == Some(0) {
            return Err("options.n_max must be positive".into());
        }
        Ok(())
    }

    pub fn description(&self) -> ModelDescription {
        ModelDescription {
            alpha: self.arrival.alpha.clone(),
            t: self.arrival.t.clone(),
            l0: self.service.l0.clone(),
            l1: self.service.l1.clone(),
            gamma: self.vacation.rate,
            exit_policy: if self.options.allow_signed_exit.unwrap_or(false) {
                ExitPolicy::AllowSigned
            } else {
                ExitPolicy::Strict
            },
        }
    }

    pub fn kernel_options(&self) -> KernelOptions {
        KernelOptions {
            tail_tol: self.options.eps.unwrap_or(DEFAULT_TAIL_TOL),
            n_max: self.options.n_max.unwrap_or(DEFAULT_N_MAX),
        }
    }

    pub fn report_levels(&self) -> usize {
        self.options.report_levels.unwrap_or(DEFAULT_REPORT_LEVELS)
    }

    pub fn from_description(desc: &ModelDescription) -> Self {
        ModelFile {
            arrival: Arrival { alpha: desc.alpha.clone(), t: desc.t.clone() },
            service: Service { l0: desc.l0.clone(), l1: desc.l1.clone() },
            vacation: Vacation { rate: desc.gamma },
            options: Options {
                allow_signed_exit: (desc.exit_policy == ExitPolicy::AllowSigned).then_some(true),
                ..Options::default()
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MM1: &str = r#"{
        "arrival": {"alpha": [1], "T": [[-0.5]]},
        "service": {"L0": [[-1]], "L1": [[1]]},
        "vacation": {"rate": 2}
    }"#;

    #[test]
    fn minimal_file() {
        let f = ModelFile::parse(MM1).unwrap();
        assert_eq!(f.report_levels(), DEFAULT_REPORT_LEVELS);
        assert_eq!(f.description().exit_policy, ExitPolicy::Strict);
        assert_eq!(f.kernel_options().n_max, DEFAULT_N_MAX);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MM1.replace("\"rate\": 2", "\"rate\": 2, \"kind\": \"single\"");
        assert!(ModelFile::parse(&bad).unwrap_err().contains("kind"));
        let bad = MM1.replace("\"T\"", "\"t\"");
        assert!(ModelFile::parse(&bad).is_err());
    }

    #[test]
    fn bad_options() {
        let bad = MM1.replace("\"rate\": 2}", "\"rate\": 2}, \"options\": {\"eps\": 0}");
        assert!(ModelFile::parse(&bad).is_err());
    }
}
