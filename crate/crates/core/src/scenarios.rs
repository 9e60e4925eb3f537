//! Bundled demonstration models, the security-checkpoint scenario and the
//! fixtures that pin their expected behaviour.
//!
//! Model files live in the workspace `models/` directory and are embedded at
//! compile time. The face-bias model is derived from the synthetic rates
//! table in the same directory.

use serde::{Deserialize, Serialize};

use crate::admiralty::{decision_category, parse_rating, AdmiraltyRating, DecisionCategory};
use crate::assessment::{
    evaluate_rtb_query, DecisionCosts, ImpactModel, QueryLevel, RtbKind, RtbQuery, RtbReport, StateRef,
};
use crate::error::{Error, Result};
use crate::model::CausalNetwork;
use crate::rates::RatesTable;

pub const ID_CREDIBILITY_JSON: &str = include_str!("../../../models/id_credibility.json");
pub const FACE_BIAS_JSON: &str = include_str!("../../../models/face_bias.json");
pub const TRAVELER_AUTHENTICATION_JSON: &str = include_str!("../../../models/traveler_authentication.json");
pub const CONCEALED_OBJECT_JSON: &str = include_str!("../../../models/concealed_object.json");
pub const FACE_BIAS_RATES_CSV: &str = include_str!("../../../models/face_bias_rates.csv");

/// File names of the bundled models, relative to `models/`.
pub const BUNDLED_MODEL_FILES: [&str; 4] = [
    "id_credibility.json",
    "face_bias.json",
    "traveler_authentication.json",
    "concealed_object.json",
];

fn bundled(text: &str) -> CausalNetwork {
    let net = CausalNetwork::from_json_str(text).expect("bundled model parses");
    net.ensure_valid().expect("bundled model is valid");
    net
}

/// Source reliability and document validity drive the validation outcome,
/// whose result is rated for credibility.
pub fn id_credibility_model() -> CausalNetwork {
    bundled(ID_CREDIBILITY_JSON)
}

/// Six facial-attribute parents of `Correctness`, which drives `Match`.
pub fn face_bias_model() -> CausalNetwork {
    bundled(FACE_BIAS_JSON)
}

pub fn traveler_authentication_model() -> CausalNetwork {
    bundled(TRAVELER_AUTHENTICATION_JSON)
}

pub fn concealed_object_model() -> CausalNetwork {
    bundled(CONCEALED_OBJECT_JSON)
}

pub fn all_bundled_models() -> Vec<CausalNetwork> {
    vec![
        id_credibility_model(),
        face_bias_model(),
        traveler_authentication_model(),
        concealed_object_model(),
    ]
}

pub fn face_bias_rates() -> RatesTable {
    RatesTable::from_csv_str(FACE_BIAS_RATES_CSV).expect("bundled rates parse")
}

/// Node order of the face-bias attributes and their population shares.
const FACE_ATTRIBUTE_PRIORS: [(&str, &[f64]); 6] = [
    ("YOB", &[0.10, 0.15, 0.35, 0.40]),
    ("Gender", &[0.45, 0.55]),
    ("Ethnicity", &[0.20, 0.15, 0.50, 0.15]),
    ("Mustache", &[0.85, 0.15]),
    ("Beard", &[0.80, 0.20]),
    ("Glasses", &[0.70, 0.30]),
];

/// Derives the face-bias network from a rates table.
///
/// Each attribute group contributes an error probability
/// `(1 - p_genuine) * fmr + p_genuine * fnmr`, and a prediction is incorrect
/// when any attribute's error fires (noisy-OR over the six parents). `Match`
/// reports whether the prediction agrees with ground truth.
pub fn build_face_bias_model(rates: &RatesTable) -> Result<CausalNetwork> {
    let mut builder = CausalNetwork::builder("face_bias");
    let mut groups = Vec::new();
    for (attribute, prior) in FACE_ATTRIBUTE_PRIORS {
        let rows = rates.groups(attribute);
        if rows.len() != prior.len() {
            return Err(Error::InvalidValue(format!(
                "attribute `{attribute}` has {} groups in the rates table, expected {}",
                rows.len(),
                prior.len()
            )));
        }
        let errors: Vec<f64> = rows
            .iter()
            .map(|r| (1.0 - r.p_genuine) * r.fmr + r.p_genuine * r.fnmr)
            .collect();
        builder = builder.variable(attribute, rows.iter().map(|r| r.group.clone())).cpt(
            attribute,
            Vec::<String>::new(),
            vec![prior.to_vec()],
        );
        groups.push(errors);
    }

    let cards: Vec<usize> = groups.iter().map(Vec::len).collect();
    let mut digits = vec![0usize; cards.len()];
    let rows: usize = cards.iter().product();
    let mut table = Vec::with_capacity(rows);
    for _ in 0..rows {
        let survive: f64 = digits.iter().zip(&groups).map(|(&g, e)| 1.0 - e[g]).product();
        table.push(vec![survive, 1.0 - survive]);
        crate::inference::increment(&mut digits, &cards);
    }

    builder
        .variable("Correctness", ["correct", "incorrect"])
        .cpt("Correctness", FACE_ATTRIBUTE_PRIORS.map(|(a, _)| a), table)
        .variable("Match", ["match", "mismatch"])
        .cpt("Match", ["Correctness"], vec![vec![1.0, 0.0], vec![0.0, 1.0]])
        .build()
}

/// One stage of the checkpoint process with its model, rating and the
/// question asked at that stage.
#[derive(Debug, Clone)]
pub struct CheckpointState {
    pub id: String,
    pub label: String,
    pub network: CausalNetwork,
    pub rating: AdmiraltyRating,
    pub query: RtbQuery,
}

/// The three-stage traveler checkpoint: ID validation, traveler
/// authentication and concealed object detection.
pub fn checkpoint_scenario() -> Vec<CheckpointState> {
    let costs = DecisionCosts::new(1.0, 10.0).expect("valid costs");
    let state = |id: &str, label: &str, network: CausalNetwork, rating: &str, query: RtbQuery| CheckpointState {
        id: id.into(),
        label: label.into(),
        network,
        rating: parse_rating(rating).expect("valid rating"),
        query: query.with_costs(costs),
    };
    vec![
        state(
            "S1",
            "ID validation",
            id_credibility_model(),
            "B2",
            RtbQuery::new(RtbKind::Trust, QueryLevel::Association, StateRef::new("Valid", "yes"))
                .given("Credibility", "high")
                .with_impact(ImpactModel::new([("yes", 0.0), ("no", 10.0)]).expect("valid impact")),
        ),
        state(
            "S2",
            "Traveler authentication",
            traveler_authentication_model(),
            "A2",
            RtbQuery::new(RtbKind::Trust, QueryLevel::Association, StateRef::new("Genuine", "yes"))
                .given("Decision", "accept")
                .with_impact(ImpactModel::new([("yes", 0.0), ("no", 10.0)]).expect("valid impact")),
        ),
        state(
            "S3",
            "Concealed object detection",
            concealed_object_model(),
            "C5",
            RtbQuery::new(
                RtbKind::Trust,
                QueryLevel::Association,
                StateRef::new("Object", "absent"),
            )
            .given("Alarm", "quiet")
            .with_impact(ImpactModel::new([("absent", 0.0), ("present", 20.0)]).expect("valid impact")),
        ),
    ]
}

/// Eight system states placed on the reliability/credibility matrix: two
/// pairs in the usable corner, four states in the risky region.
pub const STATE_MATRIX: [(&str, &str); 8] = [
    ("S1", "C1"),
    ("S8", "C1"),
    ("S2", "A2"),
    ("S7", "A2"),
    ("S3", "C5"),
    ("S4", "C5"),
    ("S5", "C5"),
    ("S6", "E2"),
];

/// [`STATE_MATRIX`] with parsed ratings.
pub fn state_matrix() -> Vec<(&'static str, AdmiraltyRating)> {
    STATE_MATRIX
        .iter()
        .map(|(id, r)| (*id, parse_rating(r).expect("valid rating")))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiskAggregation {
    #[default]
    Sum,
    Max,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrustAggregation {
    #[default]
    Min,
    Product,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregation {
    pub risk: RiskAggregation,
    pub trust: TrustAggregation,
}

#[derive(Debug, Clone)]
pub struct StateAssessment {
    pub id: String,
    pub category: DecisionCategory,
    pub report: RtbReport,
}

#[derive(Debug, Clone)]
pub struct CheckpointAssessment {
    pub states: Vec<StateAssessment>,
    pub combined_risk: f64,
    pub combined_trust: f64,
}

/// Evaluates every state's query and folds the results.
pub fn assess_checkpoint(states: &[CheckpointState], aggregation: Aggregation) -> Result<CheckpointAssessment> {
    let assessed = states
        .iter()
        .map(|s| {
            Ok(StateAssessment {
                id: s.id.clone(),
                category: decision_category(&s.rating),
                report: evaluate_rtb_query(&s.network, &s.query)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let risks = assessed.iter().map(|a| a.report.risk.unwrap_or(0.0));
    let combined_risk = match aggregation.risk {
        RiskAggregation::Sum => risks.sum(),
        RiskAggregation::Max => risks.fold(0.0, f64::max),
    };
    let trusts = assessed.iter().map(|a| a.report.trust);
    let combined_trust = match aggregation.trust {
        TrustAggregation::Min => trusts.fold(1.0, f64::min),
        TrustAggregation::Product => trusts.product(),
    };
    Ok(CheckpointAssessment {
        states: assessed,
        combined_risk,
        combined_trust,
    })
}

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Reported in the published study this scenario reproduces.
    Published,
    /// Follows directly from a definition.
    Definitional,
    /// Computed by an independent oracle and frozen.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    /// The report's headline value, within a tolerance.
    Value { value: f64, tolerance: f64 },
    /// Conditioning raised trust above its evidence-free baseline.
    TrustIncreases,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFixture {
    pub name: String,
    pub model: String,
    pub query: RtbQuery,
    pub expected: Expectation,
    pub provenance: Provenance,
}

impl ScenarioFixture {
    /// Evaluates the fixture's query and reports whether it meets the
    /// expectation, along with the report.
    pub fn check(&self, net: &CausalNetwork) -> Result<(bool, RtbReport)> {
        let report = evaluate_rtb_query(net, &self.query)?;
        let ok = match self.expected {
            Expectation::Value { value, tolerance } => (report.value - value).abs() <= tolerance,
            Expectation::TrustIncreases => report.trust > report.trust_baseline,
        };
        Ok((ok, report))
    }
}

/// Posterior `P(Valid=yes | Reliability=low, Credibility=high)` on the
/// bundled ID model, frozen from brute-force enumeration.
pub const ID_CONFLICT_POSTERIOR: f64 = 0.934426229508196_7;

pub fn fixtures() -> Vec<ScenarioFixture> {
    let conflict = RtbQuery::new(RtbKind::Trust, QueryLevel::Association, StateRef::new("Valid", "yes"))
        .given("Reliability", "low")
        .given("Credibility", "high");
    vec![
        ScenarioFixture {
            name: "unreliable source, credible outcome".into(),
            model: "id_credibility".into(),
            query: conflict.clone(),
            expected: Expectation::TrustIncreases,
            provenance: Provenance::Published,
        },
        ScenarioFixture {
            name: "unreliable source, credible outcome (value)".into(),
            model: "id_credibility".into(),
            query: conflict,
            expected: Expectation::Value {
                value: ID_CONFLICT_POSTERIOR,
                tolerance: 1e-12,
            },
            provenance: Provenance::Oracle,
        },
        ScenarioFixture {
            name: "certain evidence".into(),
            model: "id_credibility".into(),
            query: RtbQuery::new(
                RtbKind::Trust,
                QueryLevel::Intervention,
                StateRef::new("Reliability", "high"),
            )
            .with_do("Validation", "pass"),
            expected: Expectation::Value {
                value: 0.5,
                tolerance: 1e-12,
            },
            provenance: Provenance::Definitional,
        },
    ]
}

/// Bundled model by its `name`.
pub fn bundled_model(name: &str) -> Option<CausalNetwork> {
    all_bundled_models().into_iter().find(|n| n.name() == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{detect_colliders, validate_network};

    #[test]
    fn bundled_models_validate() {
        for net in all_bundled_models() {
            assert!(validate_network(&net).is_empty(), "{}", net.name());
        }
    }

    #[test]
    fn id_model_shape() {
        let net = id_credibility_model();
        assert_eq!(net.variables().len(), 4);
        assert_eq!(net.edges().len(), 3);
        assert_eq!(net.parents("Validation"), ["Reliability", "Valid"]);
    }

    #[test]
    fn face_model_matches_rates_table() {
        let built = build_face_bias_model(&face_bias_rates()).unwrap();
        if std::env::var_os("RTB_BLESS").is_some() {
            built
                .save(concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/face_bias.json"))
                .unwrap();
        }
        assert_eq!(
            built,
            face_bias_model(),
            "models/face_bias.json is stale; rerun with RTB_BLESS=1"
        );
    }

    #[test]
    fn face_model_topology() {
        let net = face_bias_model();
        assert_eq!(net.variables().len(), 8);
        let colliders = detect_colliders(&net);
        assert_eq!(colliders.len(), 1);
        assert_eq!(colliders[0].node, "Correctness");
        assert_eq!(colliders[0].parent_pairs.len(), 15);
        assert_eq!(net.children("Correctness"), ["Match"]);
    }

    #[test]
    fn checkpoint_states_in_order() {
        let ids: Vec<String> = checkpoint_scenario().into_iter().map(|s| s.id).collect();
        assert_eq!(ids, ["S1", "S2", "S3"]);
    }

    #[test]
    fn checkpoint_aggregation() {
        let states = checkpoint_scenario();
        let a = assess_checkpoint(&states, Aggregation::default()).unwrap();
        let sum: f64 = a.states.iter().map(|s| s.report.risk.unwrap()).sum();
        assert_eq!(a.combined_risk, sum);
        for s in &a.states {
            assert!(a.combined_trust <= s.report.trust);
            assert!(s.report.recommendation.is_some());
        }
        let alt = assess_checkpoint(
            &states,
            Aggregation {
                risk: RiskAggregation::Max,
                trust: TrustAggregation::Product,
            },
        )
        .unwrap();
        assert!(alt.combined_risk <= a.combined_risk);
        assert!(alt.combined_trust <= a.combined_trust);
        assert_eq!(a.states[2].category, DecisionCategory::Risky);
    }

    #[test]
    fn fixtures_hold() {
        for f in fixtures() {
            let net = bundled_model(&f.model).unwrap();
            let (ok, report) = f.check(&net).unwrap();
            assert!(ok, "{}: {report:?}", f.name);
        }
    }
}
