//! Pieces shared by the command line and the HTTP service, so both answer
//! a query through the same code path and print numbers the same way.

use rtb_core::assessment::QueryLevel;
use rtb_core::inference::{query_association, query_counterfactual, query_intervention, Assignment};
use rtb_core::model::CausalNetwork;
use rtb_core::{Error, Evidence, PosteriorDistribution, Result};

/// Decimal places used for every probability printed by the tools.
pub const DECIMALS: usize = 9;

pub fn format_probability(p: f64) -> String {
    format!("{p:.DECIMALS$}")
}

/// `state<TAB>probability` lines in declared state order.
pub fn format_posterior(posterior: &PosteriorDistribution) -> String {
    let mut out = String::new();
    for (state, p) in posterior.iter() {
        out.push_str(state);
        out.push('\t');
        out.push_str(&format_probability(p));
        out.push('\n');
    }
    out
}

/// Answers `target` at `level` under `interventions` and `evidence`.
///
/// At the association level a non-empty intervention set is rejected rather
/// than silently ignored.
pub fn posterior(
    net: &CausalNetwork,
    target: &str,
    level: QueryLevel,
    interventions: &Assignment,
    evidence: &Evidence,
) -> Result<PosteriorDistribution> {
    match level {
        QueryLevel::Association if !interventions.is_empty() => {
            Err(Error::MalformedQuery("do-assignments need the do or cf level".into()))
        }
        QueryLevel::Association => query_association(net, target, evidence),
        QueryLevel::Intervention => query_intervention(net, target, interventions, evidence),
        QueryLevel::Counterfactual => query_counterfactual(net, target, interventions, evidence),
    }
}

/// Parses `V=s,W=t` (CLI) or `V:s,W:t` (HTTP query string) lists. Blank
/// input gives an empty assignment; repeating a variable is an error.
pub fn parse_assignments(text: &str, separator: char) -> Result<Assignment> {
    let mut out = Assignment::new();
    for (variable, state) in parse_assignments_ordered(text, separator)? {
        if out.contains_key(&variable) {
            return Err(Error::MalformedQuery(format!("`{variable}` assigned more than once")));
        }
        out.insert(variable, state);
    }
    Ok(out)
}

/// Like [`parse_assignments`] but keeps input order and repeated keys.
pub fn parse_assignments_ordered(text: &str, separator: char) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let malformed = || Error::MalformedQuery(format!("expected `key{separator}value`, got `{item}`"));
        let (key, value) = item.split_once(separator).ok_or_else(malformed)?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(malformed());
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}
