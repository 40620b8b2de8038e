//! Experiment config document: problem source, algorithm, parameters,
//! audit switches, output location.

use std::path::PathBuf;

use serde::Deserialize;

use proxadmm::instances::GenSpec;
use proxadmm::model::problem_from_json;
use proxadmm::solvers::{Algorithm, SolverParams, StoppingRule};
use proxadmm::{Error, Problem, Result};

/// Which audit artifacts a run produces. All default off; the summary and
/// trace are always written.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditFlags {
    pub descent: bool,
    pub error_bounds: bool,
    pub potential: bool,
    pub certificate: bool,
}

impl AuditFlags {
    pub fn wants_samples(&self) -> bool {
        self.descent || self.error_bounds || self.potential
    }
}

/// One experiment: a problem (inline document or generator spec, exactly
/// one of the two), an algorithm with its parameters, audit switches and
/// an output directory. `stop_rule` defaults to feasibility-based
/// stopping at `params.stop_tol`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub problem: Option<serde_json::Value>,
    #[serde(default)]
    pub generate: Option<GenSpec>,
    pub algo: Algorithm,
    pub params: SolverParams,
    #[serde(default)]
    pub audits: AuditFlags,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub stop_rule: Option<StoppingRule>,
    #[serde(default)]
    pub preset: Option<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Materializes the problem from whichever source is present.
    pub fn resolve_problem(&self) -> Result<Problem> {
        match (&self.problem, &self.generate) {
            (Some(doc), None) => problem_from_json(&serde_json::to_string(doc)?),
            (None, Some(spec)) => spec.build(),
            (Some(_), Some(_)) => Err(Error::Schema(
                "config has both an inline problem and a generate spec; give exactly one".into(),
            )),
            (None, None) => Err(Error::Schema(
                "config needs a problem: either an inline document under `problem` or a spec under `generate`".into(),
            )),
        }
    }

    pub fn stop_rule(&self) -> StoppingRule {
        self.stop_rule.unwrap_or(StoppingRule::FeasibilityBelow)
    }
}
