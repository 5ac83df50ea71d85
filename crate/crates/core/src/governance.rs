//! Moderated intake, disputes, annotations, redaction requests and schema
//! proposals.
//!
//! Queues live alongside the working set in [`Atlas`]. Every decision needs a
//! non-empty reason and is written to the decision log; decisions that change
//! a record also write change-log entries.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::atlas::{check_redactable, require_reason, Atlas, AtlasError};
use crate::changelog::{utc_z, Change};
use crate::geocode::resolve_record;
use crate::harmonize::{normalize_country, normalize_name};
use crate::projection::{expand_fields, Redactions, REDACTION_MARKER};
use crate::record::{column, mvpd_check, validate_record, RawRecord};

/// Contributor label used when a moderator leaves theirs blank.
pub const CURATOR: &str = "curator";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub author: String,
    pub body: String,
    #[serde(with = "utc_z")]
    pub at: DateTime<Utc>,
}

/// A moderator decision and what it produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionLogEntry {
    pub sequence: u64,
    pub item_id: String,
    pub action: String,
    pub reason: String,
    pub moderator: String,
    #[serde(with = "utc_z")]
    pub at: DateTime<Utc>,
    /// Change-log entries written by the decision.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub changelog: Vec<u64>,
}

/// Issue noticed at submission time and shown to moderators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub code: String,
    pub field: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionState {
    Pending,
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntakeSubmission {
    pub id: String,
    pub draft: RawRecord,
    pub submitter: String,
    #[serde(with = "utc_z")]
    pub created_at: DateTime<Utc>,
    pub state: DecisionState,
    pub flags: Vec<Flag>,
    pub duplicate_of: Option<String>,
    pub decision_reason: Option<String>,
    pub decision_ref: Option<u64>,
    pub record_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisputeState {
    Open,
    ResolvedEdit,
    ResolvedAnnotation,
    ResolvedRejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dispute {
    pub id: String,
    pub record_id: String,
    pub claim: String,
    pub links: Vec<String>,
    pub thread: Vec<Message>,
    pub state: DisputeState,
    #[serde(with = "utc_z")]
    pub created_at: DateTime<Utc>,
    /// Change-log sequences of an edit resolution.
    #[serde(default)]
    pub resolution_changes: Vec<u64>,
    pub resolution_annotation: Option<String>,
    pub decision_ref: Option<u64>,
}

/// How a dispute is closed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DisputeOutcome {
    Edit { field: String, value: String },
    /// Attach an annotation. A blank body uses the dispute claim.
    Annotation {
        #[serde(default)]
        body: String,
        #[serde(default)]
        link: Option<String>,
    },
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: String,
    pub record_id: String,
    pub author: String,
    pub body: String,
    #[serde(with = "utc_z")]
    pub created_at: DateTime<Utc>,
    pub link: Option<String>,
    pub dispute_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedactionState {
    Pending,
    Applied,
    Declined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedactionRequest {
    pub id: String,
    pub record_id: String,
    pub fields: Vec<String>,
    pub reason: String,
    pub requester: String,
    pub state: RedactionState,
    #[serde(with = "utc_z")]
    pub created_at: DateTime<Utc>,
    #[serde(default, with = "opt_utc_z")]
    pub applied_at: Option<DateTime<Utc>>,
    pub decision_ref: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaProposal {
    pub id: String,
    pub description: String,
    pub proposer: String,
    pub state: DecisionState,
    #[serde(with = "utc_z")]
    pub created_at: DateTime<Utc>,
    pub resulting_schema_version: Option<u32>,
    pub release_note: String,
    pub decision_ref: Option<u64>,
}

/// What the public sees about a redaction: which fields, never the values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RedactionNotice {
    pub request_id: String,
    pub fields: Vec<String>,
    #[serde(with = "utc_z")]
    pub applied_at: DateTime<Utc>,
}

mod opt_utc_z {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Option<DateTime<Utc>>, s: S) -> Result<S::Ok, S::Error> {
        match t {
            Some(t) => s.serialize_some(&utc_z::format(t)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DateTime<Utc>>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|raw| {
                DateTime::parse_from_rfc3339(&raw)
                    .map(|t| t.with_timezone(&Utc))
                    .map_err(serde::de::Error::custom)
            })
            .transpose()
    }
}

/// All governance queues.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GovernanceState {
    pub intake: BTreeMap<String, IntakeSubmission>,
    pub disputes: BTreeMap<String, Dispute>,
    pub annotations: BTreeMap<String, Annotation>,
    pub redaction_requests: BTreeMap<String, RedactionRequest>,
    pub proposals: BTreeMap<String, SchemaProposal>,
    pub redactions: Redactions,
    pub decisions: Vec<DecisionLogEntry>,
}

fn next_id<T>(prefix: &str, map: &BTreeMap<String, T>) -> String {
    format!("{prefix}-{:04}", map.len() + 1)
}

fn label(s: &str, fallback: &str) -> String {
    let s = s.trim();
    if s.is_empty() {
        fallback.to_string()
    } else {
        s.to_string()
    }
}

/// Turn a JSON object into raw record fields. Strings, numbers, booleans
/// and null are accepted; arrays of strings become `; `-joined lists.
pub fn parse_draft(value: &Value) -> Result<RawRecord, AtlasError> {
    let Value::Object(map) = value else {
        return Err(AtlasError::UnparseableDraft(vec!["<body>".into()]));
    };
    let mut raw = RawRecord::new();
    let mut bad = Vec::new();
    for (k, v) in map {
        let Some(col) = column(k) else {
            bad.push(k.clone());
            continue;
        };
        let text = match v {
            Value::Null => String::new(),
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Array(items) => {
                let parts: Option<Vec<&str>> = items.iter().map(Value::as_str).collect();
                match parts {
                    Some(p) if p.iter().all(|s| !s.contains(';')) => p.join("; "),
                    _ => {
                        bad.push(k.clone());
                        continue;
                    }
                }
            }
            Value::Object(_) => {
                bad.push(k.clone());
                continue;
            }
        };
        raw.insert(col.to_string(), text);
    }
    if bad.is_empty() {
        Ok(raw)
    } else {
        Err(AtlasError::UnparseableDraft(bad))
    }
}

impl Atlas {
    fn decide(
        &mut self,
        item_id: &str,
        action: &str,
        reason: &str,
        moderator: &str,
        changelog: Vec<u64>,
    ) -> u64 {
        let sequence = self.governance.decisions.len() as u64 + 1;
        let at = self.now();
        self.governance.decisions.push(DecisionLogEntry {
            sequence,
            item_id: item_id.to_string(),
            action: action.to_string(),
            reason: reason.trim().to_string(),
            moderator: label(moderator, CURATOR),
            at,
            changelog,
        });
        sequence
    }

    fn existing_with_key(&self, dedup_key: &str) -> Option<String> {
        self.records().find(|r| r.dedup_key == dedup_key).map(|r| r.id.clone())
    }

    // ---- intake -------------------------------------------------------

    /// Queue a draft for moderation. Nothing is published.
    pub fn submit_intake(&mut self, draft: &Value, submitter: &str) -> Result<&IntakeSubmission, AtlasError> {
        let mut raw = parse_draft(draft)?;
        raw.remove("id");
        self.prefill(&mut raw);
        let mut flags = Vec::new();
        if let Err(errs) = validate_record(&raw) {
            for e in errs.0 {
                flags.push(Flag {
                    code: e.code().to_string(),
                    field: e.field().map(str::to_string),
                    message: e.to_string(),
                });
            }
        }
        let duplicate_of = raw
            .get("canonical_name")
            .and_then(|n| normalize_name(n).ok())
            .and_then(|k| self.existing_with_key(&k));
        if let Some(existing) = &duplicate_of {
            flags.push(Flag {
                code: "duplicate".into(),
                field: Some("canonical_name".into()),
                message: format!("same dedup key as existing record {existing}"),
            });
        }
        let id = next_id("intake", &self.governance.intake);
        let sub = IntakeSubmission {
            id: id.clone(),
            draft: raw,
            submitter: label(submitter, crate::changelog::ANONYMOUS),
            created_at: self.now(),
            state: DecisionState::Pending,
            flags,
            duplicate_of,
            decision_reason: None,
            decision_ref: None,
            record_id: None,
        };
        Ok(self.governance.intake.entry(id).or_insert(sub))
    }

    fn pending_intake(&self, id: &str) -> Result<&IntakeSubmission, AtlasError> {
        let sub = self.governance.intake.get(id).ok_or_else(|| AtlasError::UnknownItem(id.to_string()))?;
        if sub.state != DecisionState::Pending {
            return Err(AtlasError::AlreadyDecided(id.to_string()));
        }
        Ok(sub)
    }

    /// Accept a submission, optionally correcting draft fields first. The
    /// country is canonicalized and the anchor resolved. Returns the new
    /// record id. On validation failure the submission
    /// stays pending.
    pub fn accept_intake(
        &mut self,
        id: &str,
        reason: &str,
        moderator: &str,
        overrides: &RawRecord,
    ) -> Result<String, AtlasError> {
        require_reason(reason)?;
        let sub = self.pending_intake(id)?;
        let submitter = sub.submitter.clone();
        let mut raw = sub.draft.clone();
        for (k, v) in overrides {
            let col = column(k).ok_or_else(|| AtlasError::UnknownField(k.clone()))?;
            raw.insert(col.to_string(), v.clone());
        }
        raw.remove("id");
        if let Some(country) = raw.get("country") {
            let label = normalize_country(country, &self.tables().aliases).label;
            raw.insert("country".into(), label);
        }
        self.prefill(&mut raw);
        let mut record = validate_record(&raw).map_err(AtlasError::ValidationFailure)?;
        mvpd_check(&mut record);
        record.anchor = resolve_record(&record, &self.tables().gazetteer).anchor;
        let (record_id, seq) = self.insert_new(record, reason, &submitter)?;
        let decision = self.decide(id, "accept", reason, moderator, vec![seq]);
        let sub = self.governance.intake.get_mut(id).expect("checked above");
        sub.draft = raw;
        sub.state = DecisionState::Accepted;
        sub.decision_reason = Some(reason.trim().to_string());
        sub.decision_ref = Some(decision);
        sub.record_id = Some(record_id.clone());
        Ok(record_id)
    }

    pub fn reject_intake(&mut self, id: &str, reason: &str, moderator: &str) -> Result<(), AtlasError> {
        require_reason(reason)?;
        self.pending_intake(id)?;
        let decision = self.decide(id, "reject", reason, moderator, vec![]);
        let sub = self.governance.intake.get_mut(id).expect("checked above");
        sub.state = DecisionState::Rejected;
        sub.decision_reason = Some(reason.trim().to_string());
        sub.decision_ref = Some(decision);
        Ok(())
    }

    // ---- disputes -----------------------------------------------------

    pub fn open_dispute(&mut self, record_id: &str, claim: &str, links: &[String], author: &str) -> Result<&Dispute, AtlasError> {
        if self.record(record_id).is_none() {
            return Err(AtlasError::UnknownRecord(record_id.to_string()));
        }
        if claim.trim().is_empty() {
            return Err(AtlasError::EmptyBody);
        }
        let now = self.now();
        let id = next_id("dispute", &self.governance.disputes);
        let dispute = Dispute {
            id: id.clone(),
            record_id: record_id.to_string(),
            claim: claim.trim().to_string(),
            links: links.iter().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()).collect(),
            thread: vec![Message {
                author: label(author, crate::changelog::ANONYMOUS),
                body: claim.trim().to_string(),
                at: now,
            }],
            state: DisputeState::Open,
            created_at: now,
            resolution_changes: vec![],
            resolution_annotation: None,
            decision_ref: None,
        };
        Ok(self.governance.disputes.entry(id).or_insert(dispute))
    }

    /// Add a message to an open dispute's thread.
    pub fn reply_to_dispute(&mut self, id: &str, author: &str, body: &str) -> Result<&Dispute, AtlasError> {
        if body.trim().is_empty() {
            return Err(AtlasError::EmptyBody);
        }
        let at = self.now();
        let d = self.governance.disputes.get_mut(id).ok_or_else(|| AtlasError::UnknownItem(id.to_string()))?;
        if d.state != DisputeState::Open {
            return Err(AtlasError::AlreadyResolved(id.to_string()));
        }
        d.thread.push(Message { author: label(author, crate::changelog::ANONYMOUS), body: body.trim().to_string(), at });
        Ok(d)
    }

    /// Close a dispute. The thread is kept and the resolution is appended to it.
    pub fn resolve_dispute(
        &mut self,
        id: &str,
        outcome: &DisputeOutcome,
        reason: &str,
        moderator: &str,
    ) -> Result<&Dispute, AtlasError> {
        require_reason(reason)?;
        let d = self.governance.disputes.get(id).ok_or_else(|| AtlasError::UnknownItem(id.to_string()))?;
        if d.state != DisputeState::Open {
            return Err(AtlasError::AlreadyResolved(id.to_string()));
        }
        let record_id = d.record_id.clone();
        let claim = d.claim.clone();
        let moderator = label(moderator, CURATOR);
        let (state, changes, annotation, action) = match outcome {
            DisputeOutcome::Edit { field, value } => {
                let seqs = self.edit_field(&record_id, field, value, reason, &moderator)?;
                (DisputeState::ResolvedEdit, seqs, None, "resolve_edit")
            }
            DisputeOutcome::Annotation { body, link } => {
                let body = if body.trim().is_empty() { claim.as_str() } else { body.as_str() };
                let ann = self.insert_annotation(&record_id, &moderator, body, link.clone(), Some(id.to_string()))?;
                (DisputeState::ResolvedAnnotation, vec![], Some(ann), "resolve_annotation")
            }
            DisputeOutcome::Reject => (DisputeState::ResolvedRejected, vec![], None, "resolve_rejected"),
        };
        let decision = self.decide(id, action, reason, &moderator, changes.clone());
        let at = self.now();
        let d = self.governance.disputes.get_mut(id).expect("checked above");
        d.thread.push(Message { author: moderator, body: format!("{action}: {}", reason.trim()), at });
        d.state = state;
        d.resolution_changes = changes;
        d.resolution_annotation = annotation;
        d.decision_ref = Some(decision);
        Ok(d)
    }

    // ---- annotations --------------------------------------------------

    fn insert_annotation(
        &mut self,
        record_id: &str,
        author: &str,
        body: &str,
        link: Option<String>,
        dispute_id: Option<String>,
    ) -> Result<String, AtlasError> {
        if self.record(record_id).is_none() {
            return Err(AtlasError::UnknownRecord(record_id.to_string()));
        }
        if body.trim().is_empty() {
            return Err(AtlasError::EmptyBody);
        }
        let id = next_id("annotation", &self.governance.annotations);
        let ann = Annotation {
            id: id.clone(),
            record_id: record_id.to_string(),
            author: label(author, crate::changelog::ANONYMOUS),
            body: body.trim().to_string(),
            created_at: self.now(),
            link: link.map(|l| l.trim().to_string()).filter(|l| !l.is_empty()),
            dispute_id,
        };
        self.governance.annotations.insert(id.clone(), ann);
        Ok(id)
    }

    /// Attach commentary to a record. No record field changes.
    pub fn annotate(&mut self, record_id: &str, author: &str, body: &str, link: Option<String>) -> Result<&Annotation, AtlasError> {
        let id = self.insert_annotation(record_id, author, body, link, None)?;
        Ok(&self.governance.annotations[&id])
    }

    pub fn annotations_for(&self, record_id: &str) -> Vec<&Annotation> {
        self.governance.annotations.values().filter(|a| a.record_id == record_id).collect()
    }

    // ---- redaction ----------------------------------------------------

    pub fn request_redaction(
        &mut self,
        record_id: &str,
        fields: &[String],
        reason: &str,
        requester: &str,
    ) -> Result<&RedactionRequest, AtlasError> {
        require_reason(reason)?;
        if self.record(record_id).is_none() {
            return Err(AtlasError::UnknownRecord(record_id.to_string()));
        }
        if fields.is_empty() {
            return Err(AtlasError::UnknownField(String::new()));
        }
        let canonical: Vec<String> = fields
            .iter()
            .map(|f| check_redactable(f.trim()).map(str::to_string))
            .collect::<Result<_, _>>()?;
        let id = next_id("redaction", &self.governance.redaction_requests);
        let req = RedactionRequest {
            id: id.clone(),
            record_id: record_id.to_string(),
            fields: expand_fields(&canonical),
            reason: reason.trim().to_string(),
            requester: label(requester, crate::changelog::ANONYMOUS),
            state: RedactionState::Pending,
            created_at: self.now(),
            applied_at: None,
            decision_ref: None,
        };
        Ok(self.governance.redaction_requests.entry(id).or_insert(req))
    }

    fn pending_redaction(&self, id: &str) -> Result<&RedactionRequest, AtlasError> {
        let req = self
            .governance
            .redaction_requests
            .get(id)
            .ok_or_else(|| AtlasError::UnknownItem(id.to_string()))?;
        if req.state != RedactionState::Pending {
            return Err(AtlasError::AlreadyDecided(id.to_string()));
        }
        Ok(req)
    }

    /// Mask the requested fields in every public view. Original values stay
    /// in the working set and appear only in restricted change-log entries.
    /// Redacting `city` also downgrades the anchor to country precision.
    pub fn apply_redaction(&mut self, id: &str, reason: &str, moderator: &str) -> Result<&RedactionRequest, AtlasError> {
        require_reason(reason)?;
        let req = self.pending_redaction(id)?.clone();
        for f in &req.fields {
            check_redactable(f)?;
        }
        let record = self
            .record(&req.record_id)
            .cloned()
            .ok_or_else(|| AtlasError::UnknownRecord(req.record_id.clone()))?;
        let moderator = label(moderator, CURATOR);
        let mut seqs = Vec::new();
        for f in &req.fields {
            let old = record.field_text(f).unwrap_or_default();
            let change = Change::new(&record.id, f, &old, REDACTION_MARKER, reason).by(&moderator).restricted();
            seqs.push(self.log_entry(change)?);
            self.governance.redactions.insert(&record.id, f);
        }
        if req.fields.iter().any(|f| f == "city") && record.city.is_some() && !record.suppress_locality {
            let mut next = record.clone();
            next.suppress_locality = true;
            next.anchor = resolve_record(&next, &self.tables().gazetteer).anchor;
            seqs.extend(self.replace_record(next, reason, &moderator, true)?);
        }
        let decision = self.decide(id, "apply_redaction", reason, &moderator, seqs);
        let at = self.now();
        let req = self.governance.redaction_requests.get_mut(id).expect("checked above");
        req.state = RedactionState::Applied;
        req.applied_at = Some(at);
        req.decision_ref = Some(decision);
        Ok(req)
    }

    pub fn decline_redaction(&mut self, id: &str, reason: &str, moderator: &str) -> Result<&RedactionRequest, AtlasError> {
        require_reason(reason)?;
        self.pending_redaction(id)?;
        let decision = self.decide(id, "decline_redaction", reason, moderator, vec![]);
        let req = self.governance.redaction_requests.get_mut(id).expect("checked above");
        req.state = RedactionState::Declined;
        req.decision_ref = Some(decision);
        Ok(req)
    }

    pub fn redaction_notices(&self, record_id: &str) -> Vec<RedactionNotice> {
        self.governance
            .redaction_requests
            .values()
            .filter(|r| r.record_id == record_id && r.state == RedactionState::Applied)
            .map(|r| RedactionNotice {
                request_id: r.id.clone(),
                fields: r.fields.clone(),
                applied_at: r.applied_at.expect("applied requests carry a timestamp"),
            })
            .collect()
    }

    // ---- schema proposals --------------------------------------------

    pub fn propose_schema_change(&mut self, description: &str, proposer: &str, release_note: &str) -> Result<&SchemaProposal, AtlasError> {
        if description.trim().is_empty() {
            return Err(AtlasError::EmptyBody);
        }
        let id = next_id("proposal", &self.governance.proposals);
        let p = SchemaProposal {
            id: id.clone(),
            description: description.trim().to_string(),
            proposer: label(proposer, crate::changelog::ANONYMOUS),
            state: DecisionState::Pending,
            created_at: self.now(),
            resulting_schema_version: None,
            release_note: release_note.trim().to_string(),
            decision_ref: None,
        };
        Ok(self.governance.proposals.entry(id).or_insert(p))
    }

    fn pending_proposal(&self, id: &str) -> Result<&SchemaProposal, AtlasError> {
        let p = self.governance.proposals.get(id).ok_or_else(|| AtlasError::UnknownItem(id.to_string()))?;
        if p.state != DecisionState::Pending {
            return Err(AtlasError::AlreadyDecided(id.to_string()));
        }
        Ok(p)
    }

    /// Accept a proposal: the schema version increments and the decision is
    /// queued for the next release notes.
    pub fn accept_schema_proposal(&mut self, id: &str, reason: &str, moderator: &str) -> Result<&SchemaProposal, AtlasError> {
        require_reason(reason)?;
        let p = self.pending_proposal(id)?;
        let text = if p.release_note.is_empty() { p.description.clone() } else { p.release_note.clone() };
        let version = self.bump_schema_version();
        self.add_release_note(format!("schema v{version} ({id}): {text}. Reason: {}", reason.trim()));
        let decision = self.decide(id, "accept_schema", reason, moderator, vec![]);
        let p = self.governance.proposals.get_mut(id).expect("checked above");
        p.state = DecisionState::Accepted;
        p.resulting_schema_version = Some(version);
        p.decision_ref = Some(decision);
        Ok(p)
    }

    pub fn reject_schema_proposal(&mut self, id: &str, reason: &str, moderator: &str) -> Result<&SchemaProposal, AtlasError> {
        require_reason(reason)?;
        self.pending_proposal(id)?;
        let decision = self.decide(id, "reject_schema", reason, moderator, vec![]);
        let p = self.governance.proposals.get_mut(id).expect("checked above");
        p.state = DecisionState::Rejected;
        p.decision_ref = Some(decision);
        Ok(p)
    }
}
