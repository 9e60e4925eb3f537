//! Risk, trust and bias measures and the query compiler that maps an
//! R-T-B question onto seeing, doing or imagining.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{
    query_association, query_counterfactual, query_intervention, Assignment, Evidence, PosteriorDistribution,
};
use crate::model::CausalNetwork;

/// Adverse impact (cost) of each outcome of a variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImpactModel {
    costs: IndexMap<String, f64>,
}

impl ImpactModel {
    pub fn new<S: Into<String>>(costs: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let costs: IndexMap<String, f64> = costs.into_iter().map(|(k, v)| (k.into(), v)).collect();
        if let Some((k, v)) = costs.iter().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidValue(format!(
                "cost of `{k}` must be finite and nonnegative, got {v}"
            )));
        }
        Ok(ImpactModel { costs })
    }

    pub fn cost(&self, outcome: &str) -> Option<f64> {
        self.costs.get(outcome).copied()
    }

    pub fn costs(&self) -> &IndexMap<String, f64> {
        &self.costs
    }

    fn check(&self) -> Result<()> {
        Self::new(self.costs.clone()).map(|_| ())
    }
}

/// Cost of verifying a recommendation and cost of wrongly accepting one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionCosts {
    pub verify: f64,
    pub wrong_accept: f64,
}

impl DecisionCosts {
    pub fn new(verify: f64, wrong_accept: f64) -> Result<Self> {
        let costs = DecisionCosts { verify, wrong_accept };
        costs.check()?;
        Ok(costs)
    }

    fn check(&self) -> Result<()> {
        if !(self.verify.is_finite() && self.verify >= 0.0) {
            return Err(Error::InvalidValue(format!(
                "verification cost must be >= 0, got {}",
                self.verify
            )));
        }
        if !(self.wrong_accept.is_finite() && self.wrong_accept > 0.0) {
            return Err(Error::InvalidValue(format!(
                "cost of a wrong acceptance must be > 0, got {}",
                self.wrong_accept
            )));
        }
        Ok(())
    }
}

/// Biometric error rates of one attribute group (e.g. year of birth in the
/// 1930s) and the probability that a subject in it is genuine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasAttributeRates {
    pub attribute: String,
    pub group: String,
    pub fmr: f64,
    pub fnmr: f64,
    pub p_genuine: f64,
}

impl BiasAttributeRates {
    pub fn new(
        attribute: impl Into<String>,
        group: impl Into<String>,
        fmr: f64,
        fnmr: f64,
        p_genuine: f64,
    ) -> Result<Self> {
        let rates = BiasAttributeRates {
            attribute: attribute.into(),
            group: group.into(),
            fmr,
            fnmr,
            p_genuine,
        };
        for (label, p) in [("fmr", fmr), ("fnmr", fnmr), ("p_genuine", p_genuine)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidValue(format!("{label} must lie in [0,1], got {p}")));
            }
        }
        Ok(rates)
    }
}

/// Expected cost of `outcome` under its distribution. Outcomes with zero
/// probability may be missing from the impact model.
pub fn risk_expected_cost(impact: &ImpactModel, outcome: &PosteriorDistribution) -> Result<f64> {
    impact.check()?;
    outcome
        .iter()
        .try_fold(0.0, |acc, (state, p)| match impact.cost(state) {
            Some(c) => Ok(acc + c * p),
            None if p == 0.0 => Ok(acc),
            None => Err(Error::MissingCostEntry(state.to_string())),
        })
}

/// Risk contributed by one biased attribute group:
/// `impact_fmr * FMR * (1 - P(genuine)) + impact_fnmr * FNMR * P(genuine)`.
pub fn risk_of_bias(impact_fmr: f64, impact_fnmr: f64, rates: &BiasAttributeRates) -> f64 {
    impact_fmr * rates.fmr * (1.0 - rates.p_genuine) + impact_fnmr * rates.fnmr * rates.p_genuine
}

/// Sum of the per-attribute risks of one subject.
pub fn ensemble_risk(per_attribute: &[f64]) -> Result<f64> {
    if per_attribute.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if let Some(r) = per_attribute.iter().find(|r| !r.is_finite() || **r < 0.0) {
        return Err(Error::InvalidValue(format!(
            "attribute risk must be finite and nonnegative, got {r}"
        )));
    }
    Ok(per_attribute.iter().sum())
}

/// Probability that accepting is correct, i.e. the posterior of the accept
/// event.
pub fn trust_of_decision(net: &CausalNetwork, variable: &str, state: &str, evidence: &Evidence) -> Result<f64> {
    net.resolve(variable, state)?;
    let posterior = query_association(net, variable, evidence)?;
    Ok(posterior.probability(state).expect("resolved state"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Recommendation {
    Accept,
    Verify,
}

impl fmt::Display for Recommendation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Recommendation::Accept => "Accept",
            Recommendation::Verify => "Verify",
        })
    }
}

/// Accept without verification only when trust strictly exceeds
/// `1 - verify / wrong_accept`. Returns the recommendation and the threshold.
pub fn verification_decision(trust: f64, costs: &DecisionCosts) -> Result<(Recommendation, f64)> {
    costs.check()?;
    let threshold = (1.0 - costs.verify / costs.wrong_accept).clamp(0.0, 1.0);
    let rec = if trust > threshold {
        Recommendation::Accept
    } else {
        Recommendation::Verify
    };
    Ok((rec, threshold))
}

/// Baseline trust minus conditioned trust. Negative values mean the added
/// knowledge increased trust.
pub fn bias_of_trust(trust_baseline: f64, trust_conditioned: f64) -> f64 {
    trust_baseline - trust_conditioned
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrustClass {
    Untrustworthy,
    NeutrallyTrusted,
    Trustworthy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustThresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for TrustThresholds {
    fn default() -> Self {
        TrustThresholds { low: 0.4, high: 0.7 }
    }
}

/// Both boundaries belong to the middle class.
pub fn trust_class(trust: f64, thresholds: TrustThresholds) -> Result<TrustClass> {
    let TrustThresholds { low, high } = thresholds;
    if !(0.0 <= low && low < high && high <= 1.0) {
        return Err(Error::InvalidThresholds { low, high });
    }
    Ok(if trust < low {
        TrustClass::Untrustworthy
    } else if trust > high {
        TrustClass::Trustworthy
    } else {
        TrustClass::NeutrallyTrusted
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RtbKind {
    Risk,
    Trust,
    Bias,
}

/// Rung of the causal hierarchy a query is answered at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryLevel {
    Association,
    Intervention,
    Counterfactual,
}

impl QueryLevel {
    pub fn short_name(&self) -> &'static str {
        match self {
            QueryLevel::Association => "assoc",
            QueryLevel::Intervention => "do",
            QueryLevel::Counterfactual => "cf",
        }
    }
}

impl FromStr for QueryLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "assoc" | "association" => Ok(QueryLevel::Association),
            "do" | "intervention" => Ok(QueryLevel::Intervention),
            "cf" | "counterfactual" => Ok(QueryLevel::Counterfactual),
            other => Err(Error::MalformedQuery(format!("unknown level `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateRef {
    pub variable: String,
    pub state: String,
}

impl StateRef {
    pub fn new(variable: impl Into<String>, state: impl Into<String>) -> Self {
        StateRef {
            variable: variable.into(),
            state: state.into(),
        }
    }
}

/// A conditioning R-T-B quantity: the node that carries it and its state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RtbCondition {
    pub role: RtbKind,
    pub variable: String,
    pub state: String,
}

/// One cell of the R-T-B taxonomy.
///
/// `conditions` holds the other R-T-B quantities the question depends on
/// (none for first order, one for second, two for third). How they enter
/// depends on the level: observed for association, forced for intervention,
/// and part of the factual observation for counterfactuals, where `do` holds
/// the hypothetical action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtbQuery {
    pub order: u8,
    pub kind: RtbKind,
    pub level: QueryLevel,
    pub target: StateRef,
    #[serde(default)]
    pub conditions: Vec<RtbCondition>,
    #[serde(default)]
    pub given: Evidence,
    #[serde(default, rename = "do")]
    pub interventions: Assignment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impact: Option<ImpactModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<DecisionCosts>,
}

impl RtbQuery {
    pub fn new(kind: RtbKind, level: QueryLevel, target: StateRef) -> Self {
        RtbQuery {
            order: 1,
            kind,
            level,
            target,
            conditions: Vec::new(),
            given: Evidence::new(),
            interventions: Assignment::new(),
            impact: None,
            costs: None,
        }
    }

    /// Adds a conditioning quantity and bumps the order.
    pub fn conditioned_on(mut self, role: RtbKind, variable: impl Into<String>, state: impl Into<String>) -> Self {
        self.conditions.push(RtbCondition {
            role,
            variable: variable.into(),
            state: state.into(),
        });
        self.order += 1;
        self
    }

    pub fn given(mut self, variable: impl Into<String>, state: impl Into<String>) -> Self {
        self.given.insert(variable, state);
        self
    }

    pub fn with_do(mut self, variable: impl Into<String>, state: impl Into<String>) -> Self {
        self.interventions.insert(variable.into(), state.into());
        self
    }

    pub fn with_impact(mut self, impact: ImpactModel) -> Self {
        self.impact = Some(impact);
        self
    }

    pub fn with_costs(mut self, costs: DecisionCosts) -> Self {
        self.costs = Some(costs);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.order) {
            return Err(Error::MalformedQuery(format!(
                "order must be 1, 2 or 3, got {}",
                self.order
            )));
        }
        if self.conditions.len() != usize::from(self.order - 1) {
            return Err(Error::MalformedQuery(format!(
                "order-{} query needs {} conditioning quantities, got {}",
                self.order,
                self.order - 1,
                self.conditions.len()
            )));
        }
        let roles: BTreeSet<RtbKind> = self.conditions.iter().map(|c| c.role).collect();
        if roles.len() != self.conditions.len() || roles.contains(&self.kind) {
            return Err(Error::MalformedQuery(
                "conditioning quantities must be distinct and differ from the queried kind".into(),
            ));
        }
        if self.level == QueryLevel::Counterfactual && self.interventions.is_empty() {
            return Err(Error::MalformedQuery(
                "counterfactual queries need a do-assignment".into(),
            ));
        }
        if self.kind == RtbKind::Risk && self.impact.is_none() {
            return Err(Error::MissingImpactModel);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtbReport {
    /// The headline quantity for the query's kind.
    pub value: f64,
    pub risk: Option<f64>,
    pub trust: f64,
    pub trust_baseline: f64,
    pub trust_bias: f64,
    pub recommendation: Option<Recommendation>,
    pub threshold: Option<f64>,
    pub posterior: PosteriorDistribution,
    pub query: RtbQuery,
}

fn merge(into: &mut Assignment, variable: &str, state: &str) -> Result<()> {
    match into.get(variable) {
        Some(existing) if existing != state => Err(Error::MalformedQuery(format!(
            "`{variable}` given as both `{existing}` and `{state}`"
        ))),
        _ => {
            into.insert(variable.to_string(), state.to_string());
            Ok(())
        }
    }
}

/// Answers an R-T-B query at its level and derives risk, trust, trust bias
/// and, when costs are supplied, the accept/verify recommendation.
///
/// Trust is the posterior probability of the target state; the bias baseline
/// is the evidence-free marginal of the same state.
pub fn evaluate_rtb_query(net: &CausalNetwork, query: &RtbQuery) -> Result<RtbReport> {
    query.validate()?;
    let target = &query.target;
    net.resolve(&target.variable, &target.state)?;

    let mut observed = query.given.as_map().clone();
    let mut forced = query.interventions.clone();
    let conditioned = match query.level {
        QueryLevel::Intervention => &mut forced,
        QueryLevel::Association | QueryLevel::Counterfactual => &mut observed,
    };
    for c in &query.conditions {
        merge(conditioned, &c.variable, &c.state)?;
    }
    let observed = Evidence::from(observed);

    let posterior = match query.level {
        QueryLevel::Association => query_association(net, &target.variable, &observed)?,
        QueryLevel::Intervention => query_intervention(net, &target.variable, &forced, &observed)?,
        QueryLevel::Counterfactual => query_counterfactual(net, &target.variable, &forced, &observed)?,
    };
    let trust = posterior.probability(&target.state).expect("resolved state");
    let trust_baseline = query_association(net, &target.variable, &Evidence::new())?
        .probability(&target.state)
        .expect("resolved state");
    let trust_bias = bias_of_trust(trust_baseline, trust);
    let risk = query
        .impact
        .as_ref()
        .map(|impact| risk_expected_cost(impact, &posterior))
        .transpose()?;
    let decision = query
        .costs
        .as_ref()
        .map(|c| verification_decision(trust, c))
        .transpose()?;

    let value = match query.kind {
        RtbKind::Risk => risk.expect("validated"),
        RtbKind::Trust => trust,
        RtbKind::Bias => trust_bias,
    };
    Ok(RtbReport {
        value,
        risk,
        trust,
        trust_baseline,
        trust_bias,
        recommendation: decision.map(|d| d.0),
        threshold: decision.map(|d| d.1),
        posterior,
        query: query.clone(),
    })
}
