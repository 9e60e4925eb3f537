use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{CausalNetwork, Cpt, Mechanism, Variable};
use crate::error::{Error, Result};

/// Appended to a variable name to form its counterfactual copy.
pub const COUNTERFACTUAL_SUFFIX: &str = "*";

fn check_assignments(net: &CausalNetwork, assignments: &BTreeMap<String, String>) -> Result<Vec<(usize, usize)>> {
    assignments.iter().map(|(v, s)| net.resolve(v, s)).collect()
}

/// Graph surgery for `do(assignments)`: incoming edges of every assigned
/// variable are removed and its table becomes a point mass on the assigned
/// state. Mechanisms of assigned variables are dropped.
pub fn mutilate(net: &CausalNetwork, assignments: &BTreeMap<String, String>) -> Result<CausalNetwork> {
    let resolved = check_assignments(net, assignments)?;
    let mut out = net.clone();
    for (vi, si) in resolved {
        let var = &net.variables[vi];
        out.edges.retain(|(_, c)| c != &var.name);
        out.mechanisms.shift_remove(&var.name);
        let point = Cpt::point_mass(var.cardinality(), si);
        match out.cpts.get_mut(&var.name) {
            Some(cpt) => *cpt = point,
            None => {
                out.cpts.insert(var.name.clone(), point);
            }
        }
    }
    Ok(out)
}

fn starred(name: &str) -> String {
    format!("{name}{COUNTERFACTUAL_SUFFIX}")
}

/// Deterministic table reproducing `mech` with its exogenous variable as the
/// last parent.
fn deterministic_table(mech: &Mechanism, child_cardinality: usize) -> Vec<Vec<f64>> {
    mech.map
        .iter()
        .map(|&s| {
            let mut row = vec![0.0; child_cardinality];
            row[s] = 1.0;
            row
        })
        .collect()
}

/// Builds the twin network for the counterfactual `do(assignments)`.
///
/// The factual copy keeps the original names. Every intervened variable and
/// every descendant of one gets a counterfactual copy named with
/// [`COUNTERFACTUAL_SUFFIX`]; descendants are expanded into their structural
/// form so that factual and counterfactual copies share one exogenous node.
/// Surgery is applied to the counterfactual copy only. Variables outside the
/// intervention's reach are shared between both worlds.
pub fn twin_network(net: &CausalNetwork, assignments: &BTreeMap<String, String>) -> Result<CausalNetwork> {
    let resolved = check_assignments(net, assignments)?;
    net.ensure_valid()?;

    let intervened: BTreeSet<String> = assignments.keys().cloned().collect();
    let downstream = net.descendants(intervened.iter().map(String::as_str));
    let structural: BTreeSet<&str> = downstream
        .iter()
        .filter(|v| !intervened.contains(*v))
        .map(String::as_str)
        .collect();
    for name in net.topological_order()? {
        if structural.contains(name.as_str()) && net.mechanism(&name).is_none() {
            return Err(Error::MissingMechanism(name));
        }
    }
    let affected = |name: &str| intervened.contains(name) || downstream.contains(name);
    let world_name = |name: &str| {
        if affected(name) {
            starred(name)
        } else {
            name.to_string()
        }
    };

    let mut variables = Vec::new();
    let mut cpts = IndexMap::new();

    for var in &net.variables {
        match net
            .mechanism(&var.name)
            .filter(|_| structural.contains(var.name.as_str()))
        {
            Some(mech) => {
                let exo = &mech.exogenous;
                variables.push(Variable::new(exo.name.clone(), exo.states.clone()));
                cpts.insert(
                    exo.name.clone(),
                    Cpt::new(Vec::<String>::new(), vec![exo.prior.clone()]),
                );
                let mut parents = mech.parents.clone();
                parents.push(exo.name.clone());
                cpts.insert(
                    var.name.clone(),
                    Cpt::new(parents, deterministic_table(mech, var.cardinality())),
                );
            }
            None => {
                cpts.insert(var.name.clone(), net.cpts[&var.name].clone());
            }
        }
        variables.push(var.clone());
    }

    for (vi, si) in &resolved {
        let var = &net.variables[*vi];
        variables.push(Variable::new(starred(&var.name), var.states.clone()));
        cpts.insert(starred(&var.name), Cpt::point_mass(var.cardinality(), *si));
    }
    for var in net.variables.iter().filter(|v| structural.contains(v.name.as_str())) {
        let mech = &net.mechanisms[&var.name];
        let mut parents: Vec<String> = mech.parents.iter().map(|p| world_name(p)).collect();
        parents.push(mech.exogenous.name.clone());
        variables.push(Variable::new(starred(&var.name), var.states.clone()));
        cpts.insert(
            starred(&var.name),
            Cpt::new(parents, deterministic_table(mech, var.cardinality())),
        );
    }

    // Keep counterfactual copies in declaration order of their originals.
    let factual_len = variables.len() - (resolved.len() + structural.len());
    let mut twins = variables.split_off(factual_len);
    twins.sort_by_key(|v| net.index_of(v.name.trim_end_matches(COUNTERFACTUAL_SUFFIX)));
    variables.extend(twins);

    let edges = variables
        .iter()
        .flat_map(|v| cpts[&v.name].parents.iter().map(move |p| (p.clone(), v.name.clone())))
        .collect();

    Ok(CausalNetwork {
        name: format!("{}-twin", net.name),
        variables,
        edges,
        cpts,
        mechanisms: IndexMap::new(),
    })
}

/// A node with two or more parents, with every unordered pair of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collider {
    pub node: String,
    pub parent_pairs: Vec<(String, String)>,
}

pub fn detect_colliders(net: &CausalNetwork) -> Vec<Collider> {
    net.variables
        .iter()
        .filter_map(|v| {
            let parents = net.parents(&v.name);
            if parents.len() < 2 {
                return None;
            }
            let mut pairs = Vec::new();
            for (i, a) in parents.iter().enumerate() {
                for b in &parents[i + 1..] {
                    pairs.push((a.to_string(), b.to_string()));
                }
            }
            Some(Collider {
                node: v.name.clone(),
                parent_pairs: pairs,
            })
        })
        .collect()
}
