//! In-memory operator sessions: one model, accumulated evidence, the
//! current R-T-B question and an append-only decision log.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock as StdRwLock};

use chrono::{DateTime, Utc};
use indexmap::IndexMap;
use rtb_core::assessment::{
    evaluate_rtb_query, verification_decision, DecisionCosts, QueryLevel, Recommendation, RtbQuery, RtbReport,
};
use rtb_core::inference::{query_association, Assignment};
use rtb_core::model::CausalNetwork;
use rtb_core::{Error, Evidence, PosteriorDistribution, Result};
use serde::{Deserialize, Serialize};
use tokio::sync::RwLock;
use uuid::Uuid;

use crate::surface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorAction {
    Accept,
    Verify,
}

impl OperatorAction {
    fn matches(&self, rec: Recommendation) -> bool {
        matches!(
            (self, rec),
            (OperatorAction::Accept, Recommendation::Accept) | (OperatorAction::Verify, Recommendation::Verify)
        )
    }
}

/// Body of a decision post. Trust comes from `trust` when given, else from
/// `query`, else from the session's current R-T-B query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub costs: DecisionCosts,
    pub action: OperatorAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trust: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<RtbQuery>,
}

/// One logged decision. Never modified after it is appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionEntry {
    pub seq: usize,
    pub timestamp: DateTime<Utc>,
    pub query_echo: serde_json::Value,
    pub report: Option<RtbReport>,
    pub trust: f64,
    pub threshold: f64,
    pub recommendation: Recommendation,
    pub operator_action: OperatorAction,
    pub overridden: bool,
}

#[derive(Debug)]
pub struct Session {
    id: Uuid,
    model: Arc<CausalNetwork>,
    evidence: Evidence,
    current_query: Option<RtbQuery>,
    log: Vec<DecisionEntry>,
}

/// On-disk form of a session: the model envelope plus evidence and log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session_id: Uuid,
    pub model: CausalNetwork,
    pub evidence: Evidence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_query: Option<RtbQuery>,
    pub log: Vec<DecisionEntry>,
}

impl Session {
    pub fn new(model: Arc<CausalNetwork>) -> Self {
        Session {
            id: Uuid::new_v4(),
            model,
            evidence: Evidence::new(),
            current_query: None,
            log: Vec::new(),
        }
    }

    pub fn id(&self) -> Uuid {
        self.id
    }

    pub fn model(&self) -> &CausalNetwork {
        &self.model
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn current_query(&self) -> Option<&RtbQuery> {
        self.current_query.as_ref()
    }

    pub fn log(&self) -> &[DecisionEntry] {
        &self.log
    }

    /// Adds or replaces one observation. Evidence that would make the
    /// accumulated set impossible is rejected and leaves the session as is.
    pub fn set_evidence(&mut self, variable: &str, state: &str) -> Result<&Evidence> {
        self.model.resolve(variable, state)?;
        let mut others = self.evidence.clone();
        others.remove(variable);
        let p = query_association(&self.model, variable, &others)?
            .probability(state)
            .expect("resolved state");
        if p <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence);
        }
        self.evidence.insert(variable, state);
        Ok(&self.evidence)
    }

    /// Removes the observation on `variable`, if any.
    pub fn retract_evidence(&mut self, variable: &str) -> Result<&Evidence> {
        if self.model.variable(variable).is_none() {
            return Err(Error::UnknownVariable(variable.to_string()));
        }
        self.evidence.remove(variable);
        Ok(&self.evidence)
    }

    /// Posterior under the session evidence; the evidence is not changed.
    pub fn posterior(
        &self,
        target: &str,
        level: QueryLevel,
        interventions: &Assignment,
    ) -> Result<PosteriorDistribution> {
        surface::posterior(&self.model, target, level, interventions, &self.evidence)
    }

    /// Evaluates `query` with the session evidence added to its `given`
    /// set. A query that contradicts the session evidence is malformed.
    pub fn evaluate(&self, query: &RtbQuery) -> Result<RtbReport> {
        let mut merged = query.clone();
        for (variable, state) in self.evidence.iter() {
            match merged.given.get(variable) {
                Some(s) if s != state => {
                    return Err(Error::MalformedQuery(format!(
                        "query gives `{variable}={s}` but the session observed `{variable}={state}`"
                    )))
                }
                _ => {
                    merged.given.insert(variable.clone(), state.clone());
                }
            }
        }
        evaluate_rtb_query(&self.model, &merged)
    }

    /// Evaluates and remembers `query` as the session's current question.
    pub fn ask(&mut self, query: RtbQuery) -> Result<RtbReport> {
        let report = self.evaluate(&query)?;
        self.current_query = Some(query);
        Ok(report)
    }

    /// Report for the current question under the current evidence.
    pub fn current_report(&self) -> Option<Result<RtbReport>> {
        self.current_query.as_ref().map(|q| self.evaluate(q))
    }

    pub fn decide(&mut self, request: DecisionRequest) -> Result<&DecisionEntry> {
        let (trust, report, query_echo) = match (&request.trust, &request.query) {
            (Some(_), Some(_)) => {
                return Err(Error::MalformedQuery("give either `trust` or `query`, not both".into()));
            }
            (Some(t), None) => {
                if !(0.0..=1.0).contains(t) {
                    return Err(Error::InvalidValue(format!("trust must lie in [0, 1], got {t}")));
                }
                (*t, None, serde_json::json!({ "trust": t }))
            }
            (None, Some(q)) => {
                let report = self.evaluate(q)?;
                (
                    report.trust,
                    Some(report),
                    serde_json::to_value(q).expect("query serializes"),
                )
            }
            (None, None) => {
                let Some(q) = self.current_query.clone() else {
                    return Err(Error::MalformedQuery(
                        "no trust value, query, or current session query to decide on".into(),
                    ));
                };
                let report = self.evaluate(&q)?;
                (
                    report.trust,
                    Some(report),
                    serde_json::to_value(&q).expect("query serializes"),
                )
            }
        };
        let (recommendation, threshold) = verification_decision(trust, &request.costs)?;
        let entry = DecisionEntry {
            seq: self.log.len(),
            timestamp: Utc::now(),
            query_echo,
            report,
            trust,
            threshold,
            recommendation,
            operator_action: request.action,
            overridden: !request.action.matches(recommendation),
        };
        self.log.push(entry);
        Ok(self.log.last().expect("just pushed"))
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            session_id: self.id,
            model: (*self.model).clone(),
            evidence: self.evidence.clone(),
            current_query: self.current_query.clone(),
            log: self.log.clone(),
        }
    }

    pub fn from_snapshot(snapshot: SessionSnapshot) -> Result<Self> {
        snapshot.model.ensure_valid()?;
        snapshot.evidence.resolve(&snapshot.model)?;
        Ok(Session {
            id: snapshot.session_id,
            model: Arc::new(snapshot.model),
            evidence: snapshot.evidence,
            current_query: snapshot.current_query,
            log: snapshot.log,
        })
    }
}

pub type SessionHandle = Arc<RwLock<Session>>;

/// Loaded models and live sessions.
///
/// Each session sits behind its own async `RwLock`: writers (evidence,
/// questions, decisions) are applied one at a time in arrival order while
/// reads share the lock. The outer map lock is only held to look a handle up.
#[derive(Debug)]
pub struct SessionStore {
    models: IndexMap<String, Arc<CausalNetwork>>,
    sessions: StdRwLock<HashMap<Uuid, SessionHandle>>,
    snapshot_dir: Option<PathBuf>,
}

impl SessionStore {
    /// Fails with `invalid-network` for a model that does not validate and
    /// `parse-error` when two models share a name.
    pub fn new(models: impl IntoIterator<Item = CausalNetwork>) -> Result<Self> {
        let mut map = IndexMap::new();
        for net in models {
            net.ensure_valid()?;
            let name = net.name().to_string();
            if map.insert(name.clone(), Arc::new(net)).is_some() {
                return Err(Error::Parse(format!("two models are named `{name}`")));
            }
        }
        Ok(SessionStore {
            models: map,
            sessions: StdRwLock::new(HashMap::new()),
            snapshot_dir: None,
        })
    }

    /// Writes `<dir>/<session id>.json` after every change to a session.
    pub fn with_snapshots(mut self, dir: impl Into<PathBuf>) -> Self {
        self.snapshot_dir = Some(dir.into());
        self
    }

    pub fn models(&self) -> impl Iterator<Item = &CausalNetwork> {
        self.models.values().map(|m| m.as_ref())
    }

    pub fn create(&self, model: &str) -> Option<SessionHandle> {
        let net = self.models.get(model)?.clone();
        let session = Session::new(net);
        let id = session.id();
        let handle = Arc::new(RwLock::new(session));
        self.sessions
            .write()
            .expect("session map lock")
            .insert(id, handle.clone());
        Some(handle)
    }

    pub fn get(&self, id: &Uuid) -> Option<SessionHandle> {
        self.sessions.read().expect("session map lock").get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session map lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Persists `session` if snapshots are enabled.
    pub fn persist(&self, session: &Session) -> Result<()> {
        let Some(dir) = &self.snapshot_dir else {
            return Ok(());
        };
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.json", session.id()));
        let text = serde_json::to_string_pretty(&session.snapshot())?;
        // write-then-rename so a reader never sees a half-written file
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    /// Loads every `*.json` snapshot in `dir` back into the store.
    pub fn restore_dir(&self, dir: &Path) -> Result<usize> {
        let mut restored = 0;
        if !dir.exists() {
            return Ok(0);
        }
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let snapshot: SessionSnapshot = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
            let session = Session::from_snapshot(snapshot)?;
            self.sessions
                .write()
                .expect("session map lock")
                .insert(session.id(), Arc::new(RwLock::new(session)));
            restored += 1;
        }
        Ok(restored)
    }
}
