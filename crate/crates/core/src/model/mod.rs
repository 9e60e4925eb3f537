//! Discrete causal networks: variables, the DAG, conditional probability
//! tables and optional structural mechanisms.
//!
//! Tables use one fixed layout everywhere: rows enumerate parent-state
//! combinations lexicographically in declared parent order with the last
//! parent varying fastest; columns are child states in declared order.
//! Mechanism maps extend the same layout with the exogenous state as the
//! fastest-varying position.

mod transform;
mod validate;

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use transform::{detect_colliders, mutilate, twin_network, Collider, COUNTERFACTUAL_SUFFIX};
pub use validate::{validate_network, Rule, Violation};

/// Row-sum tolerance for probability tables.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Allowed disagreement between a mechanism's induced table and the declared CPT.
pub const MECHANISM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: impl Into<String>, states: impl IntoIterator<Item = S>) -> Self {
        Variable {
            name: name.into(),
            states: states.into_iter().map(Into::into).collect(),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }
}

/// Conditional probability table for one child. The child is the key under
/// which the table is stored in the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub parents: Vec<String>,
    pub table: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new<S: Into<String>>(parents: impl IntoIterator<Item = S>, table: Vec<Vec<f64>>) -> Self {
        Cpt {
            parents: parents.into_iter().map(Into::into).collect(),
            table,
        }
    }

    /// A parentless table putting all mass on `state` out of `cardinality`.
    pub fn point_mass(cardinality: usize, state: usize) -> Self {
        let mut row = vec![0.0; cardinality];
        row[state] = 1.0;
        Cpt {
            parents: Vec::new(),
            table: vec![row],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exogenous {
    pub name: String,
    pub states: Vec<String>,
    pub prior: Vec<f64>,
}

/// Structural equation `child := map(parents, exogenous)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub parents: Vec<String>,
    pub exogenous: Exogenous,
    /// Child-state indices, one per (parent states..., exogenous state) with
    /// the exogenous state varying fastest.
    pub map: Vec<usize>,
}

impl Mechanism {
    /// The conditional table obtained by pushing the exogenous prior through
    /// the map. `parent_rows` is the product of parent cardinalities.
    ///
    /// Returns `None` when the map does not have the expected shape.
    pub fn induced_table(&self, parent_rows: usize, child_cardinality: usize) -> Option<Vec<Vec<f64>>> {
        let noise = self.exogenous.states.len();
        if noise == 0 || self.map.len() != parent_rows * noise || self.exogenous.prior.len() != noise {
            return None;
        }
        let mut table = vec![vec![0.0; child_cardinality]; parent_rows];
        for (row, cells) in table.iter_mut().enumerate() {
            for (u, p) in self.exogenous.prior.iter().enumerate() {
                let state = *self.map.get(row * noise + u)?;
                *cells.get_mut(state)? += p;
            }
        }
        Some(table)
    }
}

/// A discrete causal network. Immutable once built; every transformation
/// returns a new value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalNetwork {
    name: String,
    variables: Vec<Variable>,
    edges: Vec<(String, String)>,
    cpts: IndexMap<String, Cpt>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    mechanisms: IndexMap<String, Mechanism>,
}

impl CausalNetwork {
    pub fn builder(name: impl Into<String>) -> NetworkBuilder {
        NetworkBuilder::new(name)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    pub fn cpts(&self) -> &IndexMap<String, Cpt> {
        &self.cpts
    }

    pub fn mechanisms(&self) -> &IndexMap<String, Mechanism> {
        &self.mechanisms
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn cpt(&self, child: &str) -> Option<&Cpt> {
        self.cpts.get(child)
    }

    pub fn mechanism(&self, child: &str) -> Option<&Mechanism> {
        self.mechanisms.get(child)
    }

    /// Graph parents of `node`, in edge declaration order.
    pub fn parents(&self, node: &str) -> Vec<&str> {
        self.edges
            .iter()
            .filter(|(_, c)| c == node)
            .map(|(p, _)| p.as_str())
            .collect()
    }

    pub fn children(&self, node: &str) -> Vec<&str> {
        self.edges
            .iter()
            .filter(|(p, _)| p == node)
            .map(|(_, c)| c.as_str())
            .collect()
    }

    /// Looks up a variable and one of its states, returning their indices.
    pub fn resolve(&self, variable: &str, state: &str) -> Result<(usize, usize)> {
        let vi = self
            .index_of(variable)
            .ok_or_else(|| Error::UnknownVariable(variable.to_string()))?;
        let si = self.variables[vi]
            .state_index(state)
            .ok_or_else(|| Error::UnknownState {
                variable: variable.to_string(),
                state: state.to_string(),
            })?;
        Ok((vi, si))
    }

    /// Fails with [`Error::InvalidNetwork`] unless every invariant holds.
    pub fn ensure_valid(&self) -> Result<()> {
        let violations = validate_network(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidNetwork {
                name: self.name.clone(),
                violations,
            })
        }
    }

    /// Variable names ordered so that parents precede children. Ties are
    /// broken by declaration order.
    pub fn topological_order(&self) -> Result<Vec<String>> {
        let n = self.variables.len();
        let mut indegree = vec![0usize; n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (p, c) in &self.edges {
            let (pi, ci) = match (self.index_of(p), self.index_of(c)) {
                (Some(pi), Some(ci)) => (pi, ci),
                (None, _) => return Err(Error::UnknownVariable(p.clone())),
                (_, None) => return Err(Error::UnknownVariable(c.clone())),
            };
            indegree[ci] += 1;
            children[pi].push(ci);
        }

        let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(self.variables[i].name.clone());
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&i| indegree[i] > 0).expect("unprocessed node");
            return Err(Error::CycleDetected(self.variables[stuck].name.clone()));
        }
        Ok(order)
    }

    /// All strict descendants of the given nodes.
    pub fn descendants<'a>(&self, roots: impl IntoIterator<Item = &'a str>) -> std::collections::BTreeSet<String> {
        let mut seen = std::collections::BTreeSet::new();
        let mut stack: Vec<&str> = roots.into_iter().collect();
        while let Some(node) = stack.pop() {
            for child in self.children(node) {
                if seen.insert(child.to_string()) {
                    stack.push(child);
                }
            }
        }
        seen
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json_string();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Number of rows a table over `parents` needs, or `None` if a parent is unknown.
pub(crate) fn parent_row_count(net: &CausalNetwork, parents: &[String]) -> Option<usize> {
    parents
        .iter()
        .map(|p| net.variable(p).map(Variable::cardinality))
        .product()
}

/// Incremental construction of a [`CausalNetwork`]. Edges are implied by CPT
/// parents unless added explicitly.
#[derive(Debug, Clone)]
pub struct NetworkBuilder {
    net: CausalNetwork,
}

impl NetworkBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        NetworkBuilder {
            net: CausalNetwork {
                name: name.into(),
                variables: Vec::new(),
                edges: Vec::new(),
                cpts: IndexMap::new(),
                mechanisms: IndexMap::new(),
            },
        }
    }

    pub fn variable<S: Into<String>>(mut self, name: impl Into<String>, states: impl IntoIterator<Item = S>) -> Self {
        self.net.variables.push(Variable::new(name, states));
        self
    }

    pub fn edge(mut self, parent: impl Into<String>, child: impl Into<String>) -> Self {
        let e = (parent.into(), child.into());
        if !self.net.edges.contains(&e) {
            self.net.edges.push(e);
        }
        self
    }

    pub fn cpt<S: Into<String>>(
        mut self,
        child: impl Into<String>,
        parents: impl IntoIterator<Item = S>,
        table: Vec<Vec<f64>>,
    ) -> Self {
        let child = child.into();
        let cpt = Cpt::new(parents, table);
        for p in &cpt.parents {
            self = self.edge(p.clone(), child.clone());
        }
        self.net.cpts.insert(child, cpt);
        self
    }

    pub fn mechanism(mut self, child: impl Into<String>, mechanism: Mechanism) -> Self {
        self.net.mechanisms.insert(child.into(), mechanism);
        self
    }

    /// Adds a mechanism and the CPT it induces in one step.
    pub fn structural(mut self, child: impl Into<String>, mechanism: Mechanism) -> Self {
        let child = child.into();
        let rows = parent_row_count(&self.net, &mechanism.parents).unwrap_or(0);
        let card = self.net.variable(&child).map(Variable::cardinality).unwrap_or(0);
        let table = mechanism.induced_table(rows, card).unwrap_or_default();
        self = self.cpt(child.clone(), mechanism.parents.clone(), table);
        self.mechanism(child, mechanism)
    }

    /// Builds and validates.
    pub fn build(self) -> Result<CausalNetwork> {
        self.net.ensure_valid()?;
        Ok(self.net)
    }

    /// Builds without validating; useful for representing broken models.
    pub fn build_unchecked(self) -> CausalNetwork {
        self.net
    }
}

/// Mixed-radix index with the last position varying fastest.
pub fn row_index(states: &[usize], cardinalities: &[usize]) -> usize {
    states.iter().zip(cardinalities).fold(0, |acc, (&s, &c)| acc * c + s)
}
