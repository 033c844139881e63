//! A critique session and the operations the API exposes on it.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use critiq_core::analyzers::RuleConfig;
use critiq_core::coordinator::{apply_narration, CritiqueAgenda, DanglingNodeError};
use critiq_core::harness::{run_critique, Report, RunError, TOOL_NAME, VERSION};
use critiq_core::model::{document_from_value, find_node, Bounds, ParseError};
use critiq_core::perspectives::{
    render_role_prompt, route_message, ChatMessage, ChatRequest, CritiqueMode, CritiqueProvider,
    Issue, PanelError, ProviderError, RoleFeedback,
};
use critiq_core::remediation::{
    preview_patch, suggest_fixes, History, Patch, RemediationError, RemediationOption,
};
use critiq_core::{parse_document, serialize_document, DesignContext, DesignDocument, Role};

/// Who wrote a chat turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Author {
    User,
    Role(Role),
}

impl fmt::Display for Author {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Author::User => f.write_str("user"),
            Author::Role(r) => f.write_str(r.as_str()),
        }
    }
}

impl From<Author> for String {
    fn from(a: Author) -> String {
        a.to_string()
    }
}

impl TryFrom<String> for Author {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        if s == "user" {
            Ok(Author::User)
        } else {
            s.parse().map(Author::Role)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChatTurn {
    pub index: usize,
    pub author: Author,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub referenced_issue_id: Option<String>,
    pub timestamp: String,
    /// Set when the provider failed to answer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Session {
    pub session_id: String,
    pub mode: CritiqueMode,
    pub provider: String,
    pub document: DesignDocument,
    pub context: DesignContext,
    pub feedbacks: Vec<RoleFeedback>,
    pub agenda: CritiqueAgenda,
    pub chat: Vec<ChatTurn>,
    pub history: History,
    /// Patches the session has offered, by id. Only these can be previewed or applied.
    pub offered_patches: BTreeMap<String, Patch>,
    pub created_at: String,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid document: {0}")]
    Document(#[from] ParseError),
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("unknown issue {0:?}")]
    UnknownIssue(String),
    #[error("unknown patch {0:?}")]
    UnknownPatch(String),
    #[error(transparent)]
    Remediation(#[from] RemediationError),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Dangling(#[from] DanglingNodeError),
    #[error("{role} could not answer: {source}")]
    Provider { role: Role, source: ProviderError },
}

impl From<RunError> for SessionError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Panel(p) => SessionError::Panel(p),
            RunError::Dangling(d) => SessionError::Dangling(d),
        }
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Accepts a document as a JSON object or as interchange text in a string.
pub fn document_from_request(value: &Value) -> Result<DesignDocument, SessionError> {
    match value {
        Value::String(text) => Ok(parse_document(text)?),
        other => Ok(document_from_value(other)?.0),
    }
}

const HISTORY_WINDOW: usize = 20;

impl Session {
    /// Runs the panel and the coordinator. Failed roles degrade the agenda
    /// instead of failing the session, as long as one role succeeded.
    pub fn create(
        document: DesignDocument,
        context: DesignContext,
        mode: CritiqueMode,
        provider: &dyn CritiqueProvider,
    ) -> Result<Session, SessionError> {
        let run = run_critique(&document, &context, mode, provider, true)?;
        let mut agenda = run.agenda;
        if provider.narrates() {
            narrate(&mut agenda, &document, &context, provider);
        }
        let offered_patches = run
            .feedbacks
            .iter()
            .flat_map(|f| &f.issues)
            .filter_map(|i| i.proposed_patch.clone())
            .map(|p| (p.patch_id.clone(), p))
            .collect();
        Ok(Session {
            session_id: uuid::Uuid::new_v4().simple().to_string(),
            mode,
            provider: provider.name().to_string(),
            document,
            context,
            feedbacks: run.feedbacks,
            agenda,
            chat: Vec::new(),
            history: History::default(),
            offered_patches,
            created_at: now(),
        })
    }

    pub fn issues(&self) -> impl Iterator<Item = &Issue> {
        self.feedbacks.iter().flat_map(|f| &f.issues)
    }

    pub fn issue(&self, issue_id: &str) -> Result<&Issue, SessionError> {
        self.issues()
            .find(|i| i.issue_id == issue_id)
            .ok_or_else(|| SessionError::UnknownIssue(issue_id.to_string()))
    }

    /// Bounds of the node an issue points at, for highlighting.
    pub fn issue_bounds(&self, issue: &Issue) -> Option<Bounds> {
        find_node(&self.document, &issue.node_id).map(|n| n.bounds)
    }

    /// Issues the addressed role can speak to.
    fn issues_for(&self, role: Role) -> Vec<Issue> {
        self.issues()
            .filter(|i| role == Role::Coordinator || i.source_role == role || i.lens() == role)
            .cloned()
            .collect()
    }

    fn push_turn(
        &mut self,
        author: Author,
        text: String,
        referenced: Option<String>,
        error: Option<String>,
    ) -> &ChatTurn {
        self.chat.push(ChatTurn {
            index: self.chat.len(),
            author,
            text,
            referenced_issue_id: referenced,
            timestamp: now(),
            error,
        });
        self.chat.last().expect("just pushed")
    }

    /// Records the user's message, routes it and records the reply. A
    /// provider failure is recorded as an error turn and returned.
    pub fn chat(
        &mut self,
        text: &str,
        referenced_issue_id: Option<String>,
        provider: &dyn CritiqueProvider,
    ) -> Result<ChatTurn, SessionError> {
        if text.trim().is_empty() {
            return Err(SessionError::BadRequest("chat text is empty".into()));
        }
        if let Some(id) = &referenced_issue_id {
            self.issue(id)?;
        }
        let role = route_message(text);
        let history: Vec<ChatMessage> = self
            .chat
            .iter()
            .rev()
            .take(HISTORY_WINDOW)
            .rev()
            .filter(|t| t.error.is_none())
            .map(|t| ChatMessage {
                author: t.author.to_string(),
                text: t.text.clone(),
            })
            .collect();
        self.push_turn(
            Author::User,
            text.to_string(),
            referenced_issue_id.clone(),
            None,
        );
        let request = ChatRequest {
            role,
            system_prompt: render_role_prompt(role, &self.context),
            document: serialize_document(&self.document),
            context: serde_json::to_string(&self.context).expect("context serializes"),
            history,
            message: text.to_string(),
            issues: self.issues_for(role),
            referenced_issue_id: referenced_issue_id.clone(),
            agenda: Some(self.agenda.clone()),
        };
        match provider.chat(&request) {
            Ok(reply) => Ok(self
                .push_turn(Author::Role(role), reply, referenced_issue_id, None)
                .clone()),
            Err(source) => {
                self.push_turn(
                    Author::Role(role),
                    String::new(),
                    referenced_issue_id,
                    Some(source.to_string()),
                );
                Err(SessionError::Provider { role, source })
            }
        }
    }

    /// Fix options for an issue against the current document. Every option's
    /// patch becomes previewable and applicable.
    pub fn remediations(
        &mut self,
        issue_id: &str,
        config: &RuleConfig,
    ) -> Result<Vec<RemediationOption>, SessionError> {
        let issue = self.issue(issue_id)?.clone();
        let options = suggest_fixes(&issue, &self.document, &self.context, config)?;
        for o in &options {
            self.offered_patches
                .insert(o.patch.patch_id.clone(), o.patch.clone());
        }
        Ok(options)
    }

    fn offered(&self, patch_id: &str) -> Result<&Patch, SessionError> {
        self.offered_patches
            .get(patch_id)
            .ok_or_else(|| SessionError::UnknownPatch(patch_id.to_string()))
    }

    pub fn preview(&self, patch_id: &str) -> Result<DesignDocument, SessionError> {
        Ok(preview_patch(&self.document, self.offered(patch_id)?)?)
    }

    pub fn apply(&mut self, patch_id: &str) -> Result<&DesignDocument, SessionError> {
        let patch = self.offered(patch_id)?.clone();
        self.document = self.history.apply(&self.document, &patch)?;
        Ok(&self.document)
    }

    pub fn undo(&mut self) -> Result<&DesignDocument, SessionError> {
        self.document = self.history.undo(&self.document)?;
        Ok(&self.document)
    }

    pub fn report(&self) -> Report {
        Report {
            tool: TOOL_NAME.to_string(),
            version: VERSION.to_string(),
            mode: self.mode,
            issues: self.issues().cloned().collect(),
            agenda: self.agenda.clone(),
            coverage: None,
        }
    }

    /// Canonical persisted form: pretty JSON with sorted keys.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("session serializes");
        let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
        s.push('\n');
        s
    }
}

fn narrate(
    agenda: &mut CritiqueAgenda,
    doc: &DesignDocument,
    context: &DesignContext,
    provider: &dyn CritiqueProvider,
) {
    let request = ChatRequest {
        role: Role::Coordinator,
        system_prompt: render_role_prompt(Role::Coordinator, context),
        document: serialize_document(doc),
        context: serde_json::to_string(context).expect("context serializes"),
        history: Vec::new(),
        message: "Write conversational_opening, positive_highlights and next_conversation_points for this agenda. \
                  Reply with one JSON object holding only those three fields."
            .to_string(),
        issues: Vec::new(),
        referenced_issue_id: None,
        agenda: Some(agenda.clone()),
    };
    match provider.chat(&request) {
        Ok(text) => {
            if !apply_narration(agenda, &text) {
                log::warn!("coordinator narration was not usable JSON; keeping templated prose");
            }
        }
        Err(e) => log::warn!("coordinator narration failed: {e}"),
    }
}
