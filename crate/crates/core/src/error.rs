use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the engine can report.
///
/// [`Error::name`] gives the stable kebab-case identifier used by the CLI and
/// the HTTP service.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("unknown state `{state}` for variable `{variable}`")]
    UnknownState { variable: String, state: String },

    #[error("graph contains a cycle through `{0}`")]
    CycleDetected(String),

    #[error("network `{name}` is invalid ({} violation(s))", violations.len())]
    InvalidNetwork { name: String, violations: Vec<Violation> },

    #[error("evidence has probability zero")]
    ZeroProbabilityEvidence,

    #[error("joint state space of {cells} cells exceeds the cap of {cap}")]
    StateSpaceTooLarge { cells: u128, cap: usize },

    #[error("variable `{0}` appears in both the do-set and the evidence")]
    OverlappingDoAndEvidence(String),

    #[error("target `{0}` cannot also be observed or intervened on")]
    TargetConstrained(String),

    #[error("variable `{0}` needs a structural mechanism for counterfactual queries")]
    MissingMechanism(String),

    #[error("scope mismatch: {0}")]
    ScopeMismatch(String),

    #[error("no cost entry for outcome `{0}`")]
    MissingCostEntry(String),

    #[error("risk query requires an impact model")]
    MissingImpactModel,

    #[error("ensemble must contain at least one risk value")]
    EmptyEnsemble,

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid trust thresholds: need 0 <= low < high <= 1, got ({low}, {high})")]
    InvalidThresholds { low: f64, high: f64 },

    #[error("malformed query: {0}")]
    MalformedQuery(String),

    #[error("malformed rating `{0}`")]
    MalformedRating(String),

    #[error("duplicate state id `{0}`")]
    DuplicateStateId(String),

    #[error("unknown attribute group `{attribute}={group}`")]
    UnknownAttributeGroup { attribute: String, group: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::UnknownVariable(_) => "unknown-variable",
            Error::UnknownState { .. } => "unknown-state",
            Error::CycleDetected(_) => "cycle-detected",
            Error::InvalidNetwork { .. } => "invalid-network",
            Error::ZeroProbabilityEvidence => "zero-probability-evidence",
            Error::StateSpaceTooLarge { .. } => "state-space-too-large",
            Error::OverlappingDoAndEvidence(_) => "overlapping-do-and-evidence",
            Error::TargetConstrained(_) => "target-constrained",
            Error::MissingMechanism(_) => "missing-mechanism",
            Error::ScopeMismatch(_) => "scope-mismatch",
            Error::MissingCostEntry(_) => "missing-cost-entry",
            Error::MissingImpactModel => "missing-impact-model",
            Error::EmptyEnsemble => "empty-ensemble",
            Error::InvalidValue(_) => "invalid-value",
            Error::InvalidThresholds { .. } => "invalid-thresholds",
            Error::MalformedQuery(_) => "malformed-query",
            Error::MalformedRating(_) => "malformed-rating",
            Error::DuplicateStateId(_) => "duplicate-state-id",
            Error::UnknownAttributeGroup { .. } => "unknown-attribute-group",
            Error::Parse(_) => "parse-error",
            Error::Io(_) => "io-error",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
