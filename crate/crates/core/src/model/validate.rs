use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{parent_row_count, CausalNetwork, MECHANISM_TOLERANCE, NORMALIZATION_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    EmptyName,
    DuplicateVariable,
    TooFewStates,
    DuplicateState,
    UnknownEdgeEndpoint,
    DuplicateEdge,
    Acyclicity,
    MissingCpt,
    UnknownCptNode,
    ParentMismatch,
    RowCount,
    RowWidth,
    ProbabilityRange,
    Normalization,
    UnknownMechanismNode,
    MechanismParentMismatch,
    ExogenousStates,
    ExogenousNameClash,
    ExogenousPrior,
    MapShape,
    MapState,
    MechanismDisagreement,
}

impl Rule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Rule::EmptyName => "empty-name",
            Rule::DuplicateVariable => "duplicate-variable",
            Rule::TooFewStates => "too-few-states",
            Rule::DuplicateState => "duplicate-state",
            Rule::UnknownEdgeEndpoint => "unknown-edge-endpoint",
            Rule::DuplicateEdge => "duplicate-edge",
            Rule::Acyclicity => "acyclicity",
            Rule::MissingCpt => "missing-cpt",
            Rule::UnknownCptNode => "unknown-cpt-node",
            Rule::ParentMismatch => "parent-mismatch",
            Rule::RowCount => "row-count",
            Rule::RowWidth => "row-width",
            Rule::ProbabilityRange => "probability-range",
            Rule::Normalization => "normalization",
            Rule::UnknownMechanismNode => "unknown-mechanism-node",
            Rule::MechanismParentMismatch => "mechanism-parent-mismatch",
            Rule::ExogenousStates => "exogenous-states",
            Rule::ExogenousNameClash => "exogenous-name-clash",
            Rule::ExogenousPrior => "exogenous-prior",
            Rule::MapShape => "map-shape",
            Rule::MapState => "map-state",
            Rule::MechanismDisagreement => "mechanism-disagreement",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One broken invariant: which node, which rule, and where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub node: String,
    pub rule: Rule,
    /// Offending row, entry or state index where one applies.
    pub index: Option<usize>,
    pub detail: String,
}

impl Violation {
    fn new(node: &str, rule: Rule, index: Option<usize>, detail: impl Into<String>) -> Self {
        Violation {
            node: node.to_string(),
            rule,
            index,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    /// `node<TAB>rule<TAB>detail`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.node, self.rule, self.detail)
    }
}

/// Checks every structural and numeric invariant of `net`. An empty result
/// means the network is usable for inference.
pub fn validate_network(net: &CausalNetwork) -> Vec<Violation> {
    let mut out = Vec::new();
    check_variables(net, &mut out);
    check_edges(net, &mut out);
    check_cpts(net, &mut out);
    check_mechanisms(net, &mut out);
    out
}

fn check_variables(net: &CausalNetwork, out: &mut Vec<Violation>) {
    let mut names = HashSet::new();
    for (i, v) in net.variables().iter().enumerate() {
        if v.name.is_empty() {
            out.push(Violation::new(
                "",
                Rule::EmptyName,
                Some(i),
                format!("variable #{i} has an empty name"),
            ));
        }
        if !names.insert(v.name.as_str()) {
            out.push(Violation::new(
                &v.name,
                Rule::DuplicateVariable,
                Some(i),
                "name declared more than once",
            ));
        }
        if v.states.len() < 2 {
            out.push(Violation::new(
                &v.name,
                Rule::TooFewStates,
                None,
                format!("{} state(s), need at least 2", v.states.len()),
            ));
        }
        let mut seen = HashSet::new();
        for (si, s) in v.states.iter().enumerate() {
            if !seen.insert(s.as_str()) {
                out.push(Violation::new(
                    &v.name,
                    Rule::DuplicateState,
                    Some(si),
                    format!("state `{s}` repeated"),
                ));
            }
        }
    }
}

fn check_edges(net: &CausalNetwork, out: &mut Vec<Violation>) {
    let mut seen = HashSet::new();
    let mut endpoints_ok = true;
    for (i, (p, c)) in net.edges().iter().enumerate() {
        for end in [p, c] {
            if net.variable(end).is_none() {
                endpoints_ok = false;
                out.push(Violation::new(
                    end,
                    Rule::UnknownEdgeEndpoint,
                    Some(i),
                    format!("edge {p}->{c} references an undeclared variable"),
                ));
            }
        }
        if !seen.insert((p, c)) {
            out.push(Violation::new(
                c,
                Rule::DuplicateEdge,
                Some(i),
                format!("edge {p}->{c} repeated"),
            ));
        }
    }
    if endpoints_ok {
        if let Err(crate::Error::CycleDetected(node)) = net.topological_order() {
            out.push(Violation::new(
                &node,
                Rule::Acyclicity,
                None,
                "node lies on or behind a directed cycle",
            ));
        }
    }
}

fn same_parent_set(a: &[&str], b: &[String]) -> bool {
    let a: HashSet<&str> = a.iter().copied().collect();
    let b_set: HashSet<&str> = b.iter().map(String::as_str).collect();
    a == b_set && b_set.len() == b.len()
}

fn check_cpts(net: &CausalNetwork, out: &mut Vec<Violation>) {
    for v in net.variables() {
        if net.cpt(&v.name).is_none() {
            out.push(Violation::new(
                &v.name,
                Rule::MissingCpt,
                None,
                "no conditional probability table",
            ));
        }
    }
    for (child, cpt) in net.cpts() {
        let Some(var) = net.variable(child) else {
            out.push(Violation::new(
                child,
                Rule::UnknownCptNode,
                None,
                "table for an undeclared variable",
            ));
            continue;
        };
        let graph_parents = net.parents(child);
        if !same_parent_set(&graph_parents, &cpt.parents) {
            out.push(Violation::new(
                child,
                Rule::ParentMismatch,
                None,
                format!(
                    "table parents {:?} differ from graph parents {:?}",
                    cpt.parents, graph_parents
                ),
            ));
        }
        if let Some(rows) = parent_row_count(net, &cpt.parents) {
            if cpt.table.len() != rows {
                out.push(Violation::new(
                    child,
                    Rule::RowCount,
                    None,
                    format!("{} rows, expected {rows}", cpt.table.len()),
                ));
            }
        }
        for (r, row) in cpt.table.iter().enumerate() {
            if row.len() != var.cardinality() {
                out.push(Violation::new(
                    child,
                    Rule::RowWidth,
                    Some(r),
                    format!("row {r} has {} entries, expected {}", row.len(), var.cardinality()),
                ));
            }
            let mut in_range = true;
            for (k, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    in_range = false;
                    out.push(Violation::new(
                        child,
                        Rule::ProbabilityRange,
                        Some(r),
                        format!("row {r} entry {k} = {p} outside [0,1]"),
                    ));
                }
            }
            let sum: f64 = row.iter().sum();
            if in_range && (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                out.push(Violation::new(
                    child,
                    Rule::Normalization,
                    Some(r),
                    format!("row {r} sums to {sum}"),
                ));
            }
        }
    }
}

fn check_mechanisms(net: &CausalNetwork, out: &mut Vec<Violation>) {
    let mut exogenous_names: HashSet<&str> = HashSet::new();
    for (child, mech) in net.mechanisms() {
        let Some(var) = net.variable(child) else {
            out.push(Violation::new(
                child,
                Rule::UnknownMechanismNode,
                None,
                "mechanism for an undeclared variable",
            ));
            continue;
        };
        if !same_parent_set(&net.parents(child), &mech.parents) {
            out.push(Violation::new(
                child,
                Rule::MechanismParentMismatch,
                None,
                format!("mechanism parents {:?} differ from graph parents", mech.parents),
            ));
            continue;
        }

        let exo = &mech.exogenous;
        let distinct: HashSet<&str> = exo.states.iter().map(String::as_str).collect();
        if exo.states.len() < 2 || distinct.len() != exo.states.len() || exo.name.is_empty() {
            out.push(Violation::new(
                child,
                Rule::ExogenousStates,
                None,
                format!("exogenous `{}` needs a name and at least 2 distinct states", exo.name),
            ));
            continue;
        }
        if net.variable(&exo.name).is_some() || !exogenous_names.insert(exo.name.as_str()) {
            out.push(Violation::new(
                child,
                Rule::ExogenousNameClash,
                None,
                format!("exogenous name `{}` is already in use", exo.name),
            ));
        }
        let prior_sum: f64 = exo.prior.iter().sum();
        if exo.prior.len() != exo.states.len()
            || exo.prior.iter().any(|p| !(0.0..=1.0).contains(p))
            || (prior_sum - 1.0).abs() > NORMALIZATION_TOLERANCE
        {
            out.push(Violation::new(
                child,
                Rule::ExogenousPrior,
                None,
                format!(
                    "exogenous prior {:?} is not a distribution over {} states",
                    exo.prior,
                    exo.states.len()
                ),
            ));
            continue;
        }

        let Some(rows) = parent_row_count(net, &mech.parents) else {
            continue;
        };
        if mech.map.len() != rows * exo.states.len() {
            out.push(Violation::new(
                child,
                Rule::MapShape,
                None,
                format!(
                    "map has {} entries, expected {}",
                    mech.map.len(),
                    rows * exo.states.len()
                ),
            ));
            continue;
        }
        if let Some((i, &s)) = mech.map.iter().enumerate().find(|(_, &s)| s >= var.cardinality()) {
            out.push(Violation::new(
                child,
                Rule::MapState,
                Some(i),
                format!("map entry {i} = {s} is not a state index"),
            ));
            continue;
        }

        let (Some(induced), Some(cpt)) = (mech.induced_table(rows, var.cardinality()), net.cpt(child)) else {
            continue;
        };
        if cpt.parents != mech.parents {
            out.push(Violation::new(
                child,
                Rule::MechanismParentMismatch,
                None,
                "mechanism and table must list parents in the same order",
            ));
            continue;
        }
        for (r, (a, b)) in induced.iter().zip(&cpt.table).enumerate() {
            let off = a.iter().zip(b).any(|(x, y)| (x - y).abs() > MECHANISM_TOLERANCE);
            if off || a.len() != b.len() {
                out.push(Violation::new(
                    child,
                    Rule::MechanismDisagreement,
                    Some(r),
                    format!("row {r}: mechanism induces {a:?}, table declares {b:?}"),
                ));
            }
        }
    }
}
