//! Exact inference at the three levels of the causal hierarchy: seeing
//! (conditioning), doing (graph surgery) and imagining (twin networks).

mod factor;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Deref;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{mutilate, twin_network, CausalNetwork, COUNTERFACTUAL_SUFFIX};

pub(crate) use factor::increment;
pub use factor::Factor;

/// Default cap on the number of cells [`enumerate_joint`] will materialize.
pub const DEFAULT_JOINT_CAP: usize = 1 << 20;

/// Variable-to-state assignments used for do-sets.
pub type Assignment = BTreeMap<String, String>;

/// Observed variable states.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Evidence(BTreeMap<String, String>);

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, variable: impl Into<String>, state: impl Into<String>) -> Self {
        self.insert(variable, state);
        self
    }

    pub fn insert(&mut self, variable: impl Into<String>, state: impl Into<String>) -> Option<String> {
        self.0.insert(variable.into(), state.into())
    }

    pub fn remove(&mut self, variable: &str) -> Option<String> {
        self.0.remove(variable)
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.0
    }

    /// Resolves every entry against `net`.
    pub fn resolve(&self, net: &CausalNetwork) -> Result<Vec<(String, usize)>> {
        self.0
            .iter()
            .map(|(v, s)| net.resolve(v, s).map(|(_, si)| (v.clone(), si)))
            .collect()
    }
}

impl Deref for Evidence {
    type Target = BTreeMap<String, String>;

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Evidence(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

impl From<BTreeMap<String, String>> for Evidence {
    fn from(map: BTreeMap<String, String>) -> Self {
        Evidence(map)
    }
}

/// Normalized distribution over the states of one variable, in declared
/// state order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDistribution {
    pub target: String,
    pub probabilities: IndexMap<String, f64>,
}

impl PosteriorDistribution {
    pub fn probability(&self, state: &str) -> Option<f64> {
        self.probabilities.get(state).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.probabilities.iter().map(|(s, p)| (s.as_str(), *p))
    }

    pub(crate) fn point_mass(target: &str, states: &[String], state: usize) -> Self {
        PosteriorDistribution {
            target: target.to_string(),
            probabilities: states
                .iter()
                .enumerate()
                .map(|(i, s)| (s.clone(), if i == state { 1.0 } else { 0.0 }))
                .collect(),
        }
    }
}

/// The conditional probability table of `child` as a factor over
/// `(parents..., child)`.
pub fn cpt_factor(net: &CausalNetwork, child: &str) -> Result<Factor> {
    let cpt = net
        .cpt(child)
        .ok_or_else(|| Error::UnknownVariable(child.to_string()))?;
    let mut scope = cpt.parents.clone();
    scope.push(child.to_string());
    let cards = scope
        .iter()
        .map(|v| {
            net.variable(v)
                .map(|v| v.cardinality())
                .ok_or_else(|| Error::UnknownVariable(v.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Factor::new(scope, cards, cpt.table.concat())
}

/// Sum-product elimination: multiplies `factors` and sums out every variable
/// in `order`, one at a time in the given order.
pub fn eliminate(factors: Vec<Factor>, order: &[String]) -> Result<Factor> {
    let mut pool = factors;
    let mut done = BTreeSet::new();
    for var in order {
        if !done.insert(var) {
            return Err(Error::ScopeMismatch(format!(
                "`{var}` listed twice in the elimination order"
            )));
        }
        let (touching, rest): (Vec<Factor>, Vec<Factor>) = pool.into_iter().partition(|f| f.position(var).is_some());
        if touching.is_empty() {
            return Err(Error::ScopeMismatch(format!("`{var}` is not in any factor scope")));
        }
        let mut merged = touching
            .into_iter()
            .try_fold(Factor::scalar(1.0), |acc, f| acc.product(&f))?;
        merged = merged.marginalize(var)?;
        pool = rest;
        pool.push(merged);
    }
    pool.into_iter().try_fold(Factor::scalar(1.0), |acc, f| acc.product(&f))
}

/// Min-degree elimination order over the interaction graph of `factors`,
/// ties broken by variable name. `keep` is never eliminated.
pub fn min_degree_order(factors: &[Factor], keep: &BTreeSet<String>) -> Vec<String> {
    let mut adjacency: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for f in factors {
        for a in f.scope() {
            let entry = adjacency.entry(a.clone()).or_default();
            entry.extend(f.scope().iter().filter(|b| *b != a).cloned());
        }
    }
    let mut order = Vec::new();
    loop {
        let next = adjacency
            .iter()
            .filter(|(v, _)| !keep.contains(*v))
            .min_by(|(va, na), (vb, nb)| na.len().cmp(&nb.len()).then_with(|| va.cmp(vb)))
            .map(|(v, _)| v.clone());
        let Some(var) = next else { break };
        let neighbours = adjacency.remove(&var).unwrap_or_default();
        for n in &neighbours {
            if let Some(set) = adjacency.get_mut(n) {
                set.remove(&var);
                set.extend(neighbours.iter().filter(|m| *m != n).cloned());
            }
        }
        order.push(var);
    }
    order
}

fn normalized(net: &CausalNetwork, target: &str, factor: Factor) -> Result<PosteriorDistribution> {
    let var = net
        .variable(target)
        .ok_or_else(|| Error::UnknownVariable(target.to_string()))?;
    let total = factor.sum();
    // also catches NaN
    if total.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::ZeroProbabilityEvidence);
    }
    if factor.scope() != [target] {
        return Err(Error::ScopeMismatch(format!(
            "elimination left scope {:?}",
            factor.scope()
        )));
    }
    let values = factor.into_values();
    Ok(PosteriorDistribution {
        target: target.to_string(),
        probabilities: var
            .states
            .iter()
            .cloned()
            .zip(values.into_iter().map(|v| v / total))
            .collect(),
    })
}

fn check_target(net: &CausalNetwork, target: &str, evidence: &Evidence) -> Result<Vec<(String, usize)>> {
    net.ensure_valid()?;
    if net.variable(target).is_none() {
        return Err(Error::UnknownVariable(target.to_string()));
    }
    let observed = evidence.resolve(net)?;
    if evidence.contains_key(target) {
        return Err(Error::TargetConstrained(target.to_string()));
    }
    Ok(observed)
}

fn reduced_factors<'a>(
    net: &CausalNetwork,
    nodes: impl IntoIterator<Item = &'a str>,
    observed: &[(String, usize)],
) -> Result<Vec<Factor>> {
    nodes
        .into_iter()
        .map(|node| {
            observed
                .iter()
                .try_fold(cpt_factor(net, node)?, |f, (v, s)| f.reduce(v, *s))
        })
        .collect()
}

/// `P(target | evidence)` by variable elimination.
///
/// Only the ancestral closure of the target and the evidence takes part;
/// everything else sums to one.
pub fn query_association(net: &CausalNetwork, target: &str, evidence: &Evidence) -> Result<PosteriorDistribution> {
    let observed = check_target(net, target, evidence)?;

    let mut relevant: BTreeSet<String> = BTreeSet::new();
    let mut stack: Vec<String> = std::iter::once(target.to_string())
        .chain(evidence.keys().cloned())
        .collect();
    while let Some(node) = stack.pop() {
        if relevant.insert(node.clone()) {
            stack.extend(net.parents(&node).into_iter().map(String::from));
        }
    }
    let nodes = net
        .variables()
        .iter()
        .map(|v| v.name.as_str())
        .filter(|v| relevant.contains(*v));
    let factors = reduced_factors(net, nodes, &observed)?;
    let keep = BTreeSet::from([target.to_string()]);
    let order = min_degree_order(&factors, &keep);
    normalized(net, target, eliminate(factors, &order)?)
}

/// Like [`query_association`] but over every CPT and with a caller-chosen
/// elimination order, which must list each unobserved non-target variable
/// exactly once.
pub fn query_association_ordered(
    net: &CausalNetwork,
    target: &str,
    evidence: &Evidence,
    order: &[String],
) -> Result<PosteriorDistribution> {
    let observed = check_target(net, target, evidence)?;
    let expected: BTreeSet<&str> = net
        .variables()
        .iter()
        .map(|v| v.name.as_str())
        .filter(|v| *v != target && !evidence.contains_key(*v))
        .collect();
    let given: BTreeSet<&str> = order.iter().map(String::as_str).collect();
    if given != expected || order.len() != expected.len() {
        return Err(Error::ScopeMismatch(
            "elimination order must cover every unobserved non-target variable exactly once".into(),
        ));
    }
    let factors = reduced_factors(net, net.variables().iter().map(|v| v.name.as_str()), &observed)?;
    normalized(net, target, eliminate(factors, order)?)
}

/// `P(target | do(interventions), evidence)`: conditioning on the mutilated
/// network.
pub fn query_intervention(
    net: &CausalNetwork,
    target: &str,
    interventions: &Assignment,
    evidence: &Evidence,
) -> Result<PosteriorDistribution> {
    if interventions.contains_key(target) {
        return Err(Error::TargetConstrained(target.to_string()));
    }
    if let Some(v) = interventions.keys().find(|v| evidence.contains_key(*v)) {
        return Err(Error::OverlappingDoAndEvidence(v.clone()));
    }
    let cut = mutilate(net, interventions)?;
    query_association(&cut, target, evidence)
}

/// `P(target_{do} | observed)`: the target's distribution in the world where
/// `interventions` had been applied, given what was actually observed.
///
/// The returned distribution names the counterfactual copy (`Y*`) when the
/// target lies downstream of the intervention, and the shared variable
/// otherwise.
pub fn query_counterfactual(
    net: &CausalNetwork,
    target: &str,
    interventions: &Assignment,
    observed: &Evidence,
) -> Result<PosteriorDistribution> {
    let target_index = net
        .index_of(target)
        .ok_or_else(|| Error::UnknownVariable(target.to_string()))?;
    let twin = twin_network(net, interventions)?;
    let starred = format!("{target}{COUNTERFACTUAL_SUFFIX}");
    if twin.variable(&starred).is_some() {
        return query_association(&twin, &starred, observed);
    }

    // Outside the intervention's reach both worlds share the variable.
    match observed.get(target) {
        None => query_association(&twin, target, observed),
        Some(state) => {
            let (_, si) = net.resolve(target, state)?;
            let mut rest = observed.clone();
            rest.remove(target);
            let factual = query_association(&twin, target, &rest)?;
            if factual.probabilities[si] > 0.0 {
                Ok(PosteriorDistribution::point_mass(
                    target,
                    &net.variables()[target_index].states,
                    si,
                ))
            } else {
                Err(Error::ZeroProbabilityEvidence)
            }
        }
    }
}

/// The full joint distribution by direct product of CPT entries, with
/// scope in declaration order. Refuses networks above `cap` cells.
pub fn enumerate_joint_with_cap(net: &CausalNetwork, cap: usize) -> Result<Factor> {
    net.ensure_valid()?;
    let cards: Vec<usize> = net.variables().iter().map(|v| v.cardinality()).collect();
    let cells = cards
        .iter()
        .try_fold(1u128, |acc, &c| acc.checked_mul(c as u128))
        .unwrap_or(u128::MAX);
    if cells > cap as u128 {
        return Err(Error::StateSpaceTooLarge { cells, cap });
    }

    // (parent indices, child index, table) per variable
    let tables: Vec<(Vec<usize>, &Vec<Vec<f64>>)> = net
        .variables()
        .iter()
        .map(|v| {
            let cpt = &net.cpts()[&v.name];
            let parents = cpt
                .parents
                .iter()
                .map(|p| net.index_of(p).expect("validated"))
                .collect();
            (parents, &cpt.table)
        })
        .collect();

    let mut values = Vec::with_capacity(cells as usize);
    let mut digits = vec![0usize; cards.len()];
    let mut parent_states = Vec::new();
    let mut parent_cards = Vec::new();
    for _ in 0..cells {
        let mut p = 1.0;
        for (child, (parents, table)) in tables.iter().enumerate() {
            parent_states.clear();
            parent_cards.clear();
            parent_states.extend(parents.iter().map(|&i| digits[i]));
            parent_cards.extend(parents.iter().map(|&i| cards[i]));
            p *= table[crate::model::row_index(&parent_states, &parent_cards)][digits[child]];
        }
        values.push(p);
        increment(&mut digits, &cards);
    }
    Factor::new(net.variables().iter().map(|v| v.name.clone()).collect(), cards, values)
}

pub fn enumerate_joint(net: &CausalNetwork) -> Result<Factor> {
    enumerate_joint_with_cap(net, DEFAULT_JOINT_CAP)
}
