//! The expert panel: role prompts, the provider abstraction, schema
//! validation of role output and the built-in rule-backed provider.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::analyzers::{brand_target, run_rules, Finding, RuleConfig, RuleId};
use crate::coordinator::CritiqueAgenda;
use crate::model::{
    find_node, parse_document, serialize_document, DesignContext, DesignDocument, NodeKind,
};
use crate::remediation::{preview_patch, suggest_fixes_for_finding, Patch, PatchOp};

pub use crate::role::{Role, Severity};

pub const PROMPT_VERSION: &str = "v1";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct Remediation {
    pub action: String,
    pub specific_suggestion: String,
    pub technical_solution: String,
}

/// One structured critique finding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Issue {
    pub issue_id: String,
    pub source_role: Role,
    pub node_id: String,
    pub node_name: String,
    pub element_type: NodeKind,
    /// Rule id for rule-backed issues, a free tag (e.g. `usability`) otherwise.
    pub issue_type: String,
    pub severity: Severity,
    pub description: String,
    pub rationale: String,
    pub remediation: Remediation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposed_patch: Option<Patch>,
}

impl Issue {
    pub fn rule(&self) -> Option<RuleId> {
        self.issue_type.parse().ok()
    }

    /// Role whose lens this issue belongs to. Rule-backed issues report the
    /// rule owner even when raised by the unified expert.
    pub fn lens(&self) -> Role {
        self.rule().map(|r| r.owner()).unwrap_or(self.source_role)
    }
}

/// One role's complete output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleFeedback {
    pub feedback_id: String,
    pub source_role: Role,
    pub issues: Vec<Issue>,
    pub summary: String,
    pub priority: Severity,
    pub detailed_analysis: String,
}

impl RoleFeedback {
    pub fn top_severity(issues: &[Issue]) -> Severity {
        issues
            .iter()
            .map(|i| i.severity)
            .max()
            .unwrap_or(Severity::Low)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CritiqueMode {
    MultiPerspective,
    Unified,
}

impl CritiqueMode {
    pub fn roles(&self) -> &'static [Role] {
        match self {
            CritiqueMode::MultiPerspective => &Role::PANEL,
            CritiqueMode::Unified => &[Role::Unified],
        }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            CritiqueMode::MultiPerspective => "multi",
            CritiqueMode::Unified => "unified",
        }
    }
}

impl fmt::Display for CritiqueMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for CritiqueMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "multi" | "multi_perspective" | "multi-perspective" => {
                Ok(CritiqueMode::MultiPerspective)
            }
            "unified" => Ok(CritiqueMode::Unified),
            other => Err(format!("unknown mode {other:?}, expected multi or unified")),
        }
    }
}

// ── Prompts ──────────────────────────────────────────────────────────────────

const UX_PROMPT: &str = include_str!("../prompts/v1/user_experience.txt");
const PV_PROMPT: &str = include_str!("../prompts/v1/product_vision.txt");
const ENG_PROMPT: &str = include_str!("../prompts/v1/engineering.txt");
const UNIFIED_PROMPT: &str = include_str!("../prompts/v1/unified.txt");
const COORDINATOR_PROMPT: &str = include_str!("../prompts/v1/coordinator.txt");
const EXPERT_IO: &str = include_str!("../prompts/v1/expert_io.txt");

/// Body of a `## <title>` section, without its heading.
fn section<'a>(template: &'a str, title: &str) -> &'a str {
    let heading = format!("## {title}\n");
    let Some(start) = template.find(&heading) else {
        return "";
    };
    let body = &template[start + heading.len()..];
    let end = body.find("\n## ").map(|i| i + 1).unwrap_or(body.len());
    body[..end].trim_end()
}

fn or_missing(s: &str) -> String {
    if s.trim().is_empty() {
        "not provided".to_string()
    } else {
        s.trim().to_string()
    }
}

fn issue_types(role: Role) -> &'static str {
    match role {
        Role::UserExperience => "usability|accessibility|navigation|...",
        Role::ProductVision => "business_goal|brand|content|market|...",
        Role::Engineering => "feasibility|performance|accessibility|...",
        _ => "usability|accessibility|brand|content|feasibility|performance|...",
    }
}

fn fill_context(template: &str, role: Role, context: &DesignContext) -> String {
    template
        .replace("{{product_goal}}", &or_missing(&context.product_goal))
        .replace(
            "{{brand_keywords}}",
            &or_missing(&context.brand_keywords.join(", ")),
        )
        .replace(
            "{{theme_color}}",
            &context
                .theme_color
                .map(|c| c.to_hex())
                .unwrap_or_else(|| "not provided".into()),
        )
        .replace("{{target_users}}", &or_missing(&context.target_users))
        .replace("{{source_role}}", role.as_str())
        .replace("{{issue_types}}", issue_types(role))
}

/// System prompt for `role`, instantiated with the product context.
pub fn render_role_prompt(role: Role, context: &DesignContext) -> String {
    let title = format!("# {} Expert Prompt ({PROMPT_VERSION})\n\n", role.label());
    match role {
        Role::UserExperience | Role::ProductVision | Role::Engineering => {
            let template = match role {
                Role::UserExperience => UX_PROMPT,
                Role::ProductVision => PV_PROMPT,
                _ => ENG_PROMPT,
            };
            format!(
                "{title}## Role & Objective\n{}\n\n{}\n\n## Analysis Scope\n{}\n\n## Execution Rules\n{}\n",
                section(template, "Role & Objective"),
                fill_context(EXPERT_IO, role, context).trim_end(),
                section(template, "Analysis Scope"),
                section(template, "Execution Rules"),
            )
        }
        Role::Unified => {
            let scopes = [Role::UserExperience, Role::ProductVision, Role::Engineering]
                .into_iter()
                .zip([UX_PROMPT, PV_PROMPT, ENG_PROMPT])
                .map(|(r, t)| format!("### {}\n{}", r.label(), section(t, "Analysis Scope")))
                .collect::<Vec<_>>()
                .join("\n\n");
            format!(
                "{title}## Role & Objective\n{}\n\n{}\n\n## Analysis Scope\n{scopes}\n\n## Execution Rules\n{}\n",
                section(UNIFIED_PROMPT, "Role & Objective"),
                fill_context(EXPERT_IO, role, context).trim_end(),
                section(UNIFIED_PROMPT, "Execution Rules"),
            )
        }
        Role::Coordinator => {
            let ctx = fill_context(section(EXPERT_IO, "Product Context"), role, context);
            format!(
                "# Lead Coordinator Prompt ({PROMPT_VERSION})\n\n{}\n\n## Product Context\n{ctx}\n",
                COORDINATOR_PROMPT.trim_end()
            )
        }
    }
}

// ── Provider abstraction ─────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    /// `user` or a role wire name.
    pub author: String,
    pub text: String,
}

/// A request for one role's structured critique.
#[derive(Debug, Clone)]
pub struct ProviderRequest {
    pub role: Role,
    pub system_prompt: String,
    /// Canonical interchange text of the document.
    pub document: String,
    /// Context file JSON.
    pub context: String,
    pub history: Vec<ChatMessage>,
    /// Validation error from a previous attempt, when this is a repair retry.
    pub repair: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderResponse {
    /// Raw model text; expected to contain one RoleFeedback JSON object.
    pub text: String,
}

/// A conversational turn addressed to one role.
#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub role: Role,
    pub system_prompt: String,
    pub document: String,
    pub context: String,
    pub history: Vec<ChatMessage>,
    pub message: String,
    /// Issues the addressed role raised (all issues for the coordinator).
    pub issues: Vec<Issue>,
    pub referenced_issue_id: Option<String>,
    pub agenda: Option<CritiqueAgenda>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider transport error: {0}")]
    Transport(String),
    #[error("provider timed out after {0} ms")]
    Timeout(u64),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("provider misconfigured: {0}")]
    Config(String),
}

/// Source of role critiques and chat replies. Implementations must tolerate
/// concurrent calls.
pub trait CritiqueProvider: Send + Sync {
    fn name(&self) -> &str;

    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError>;

    fn chat(&self, request: &ChatRequest) -> Result<String, ProviderError>;

    /// Whether agenda prose should be authored by the provider.
    fn narrates(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CritiqueError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("{role} output failed validation after repair retry: {message}")]
    SchemaViolation { role: Role, message: String },
    #[error("role {0} cannot critique")]
    InvalidRole(Role),
}

/// Roles that failed alongside the ones that succeeded.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{} of {} roles failed: {}", failed.len(), failed.len() + succeeded.len(), describe(failed))]
pub struct PanelError {
    pub succeeded: Vec<RoleFeedback>,
    pub failed: Vec<(Role, CritiqueError)>,
}

fn describe(failed: &[(Role, CritiqueError)]) -> String {
    failed
        .iter()
        .map(|(r, e)| format!("{r}: {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

// ── Validation ───────────────────────────────────────────────────────────────

/// Pulls the first JSON object out of model text, tolerating prose and code fences.
pub fn extract_json(text: &str) -> Result<Value, String> {
    if let Ok(v) = serde_json::from_str::<Value>(text.trim()) {
        return Ok(v);
    }
    let start = text.find('{').ok_or("response contains no JSON object")?;
    let end = text
        .rfind('}')
        .ok_or("response contains no closing brace")?;
    if end < start {
        return Err("response contains no JSON object".into());
    }
    serde_json::from_str(&text[start..=end]).map_err(|e| format!("invalid JSON: {e}"))
}

fn str_field(o: &serde_json::Map<String, Value>, key: &str) -> Option<String> {
    match o.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Null => None,
        other => Some(other.to_string()),
    }
}

/// Checks raw provider output against the feedback schema and the document.
/// Node names and element types are taken from the document; priority is
/// recomputed from the issues.
pub fn validate_feedback(
    text: &str,
    role: Role,
    doc: &DesignDocument,
) -> Result<RoleFeedback, String> {
    let value = extract_json(text)?;
    let o = value.as_object().ok_or("feedback must be a JSON object")?;
    let declared = str_field(o, "source_role").ok_or("missing source_role")?;
    let declared: Role = declared.parse()?;
    if declared != role {
        return Err(format!("source_role is {declared}, expected {role}"));
    }
    let raw_issues = o
        .get("issues")
        .and_then(Value::as_array)
        .ok_or("missing issues array")?;

    let mut issues = Vec::with_capacity(raw_issues.len());
    let mut ids = HashSet::new();
    for (i, raw) in raw_issues.iter().enumerate() {
        let at = |m: &str| format!("issues[{i}]: {m}");
        let io = raw.as_object().ok_or_else(|| at("expected object"))?;
        let node_id = str_field(io, "nodeId").ok_or_else(|| at("missing nodeId"))?;
        let node = find_node(doc, &node_id)
            .ok_or_else(|| at(&format!("nodeId {node_id:?} is not in the document")))?;
        let severity: Severity = str_field(io, "severity")
            .ok_or_else(|| at("missing severity"))?
            .parse()
            .map_err(|e: String| at(&e))?;
        let description = str_field(io, "description").ok_or_else(|| at("missing description"))?;
        let remediation = match io.get("remediation") {
            None | Some(Value::Null) => Remediation::default(),
            Some(r) => {
                serde_json::from_value(r.clone()).map_err(|e| at(&format!("remediation: {e}")))?
            }
        };
        let proposed_patch = match io.get("proposedPatch") {
            None | Some(Value::Null) => None,
            Some(p) => {
                let patch: Patch = serde_json::from_value(p.clone())
                    .map_err(|e| at(&format!("proposedPatch: {e}")))?;
                preview_patch(doc, &patch).map_err(|e| at(&e.to_string()))?;
                Some(patch)
            }
        };
        let issue_id = match str_field(io, "issueId") {
            Some(id) if !id.is_empty() && !ids.contains(&id) => id,
            _ => format!("{}-{}-{}", role.initials(), node_id, i + 1),
        };
        if !ids.insert(issue_id.clone()) {
            return Err(at(&format!("duplicate issue id {issue_id:?}")));
        }
        issues.push(Issue {
            issue_id,
            source_role: role,
            node_id,
            node_name: node.name.clone(),
            element_type: node.kind,
            issue_type: str_field(io, "issueType").unwrap_or_else(|| "general".into()),
            severity,
            description,
            rationale: str_field(io, "rationale").unwrap_or_default(),
            remediation,
            proposed_patch,
        });
    }
    Ok(RoleFeedback {
        feedback_id: str_field(o, "feedback_id")
            .unwrap_or_else(|| format!("{}-feedback", role.initials())),
        source_role: role,
        priority: RoleFeedback::top_severity(&issues),
        summary: str_field(o, "summary").unwrap_or_default(),
        detailed_analysis: str_field(o, "detailed_analysis").unwrap_or_default(),
        issues,
    })
}

/// Runs one expert over the document. Invalid output gets one repair retry
/// carrying the validation error before it is rejected.
pub fn critique(
    role: Role,
    doc: &DesignDocument,
    context: &DesignContext,
    provider: &dyn CritiqueProvider,
) -> Result<RoleFeedback, CritiqueError> {
    if role == Role::Coordinator {
        return Err(CritiqueError::InvalidRole(role));
    }
    let mut request = ProviderRequest {
        role,
        system_prompt: render_role_prompt(role, context),
        document: serialize_document(doc),
        context: serde_json::to_string(context).expect("context serializes"),
        history: Vec::new(),
        repair: None,
    };
    let first = provider.complete(&request)?;
    match validate_feedback(&first.text, role, doc) {
        Ok(fb) => Ok(fb),
        Err(message) => {
            log::warn!("{role} output rejected ({message}); retrying once");
            request.repair = Some(message);
            let second = provider.complete(&request)?;
            validate_feedback(&second.text, role, doc)
                .map_err(|message| CritiqueError::SchemaViolation { role, message })
        }
    }
}

/// Runs every role of `mode` concurrently and merges results in panel order.
/// On wasm, where threads are unavailable, roles run one after another.
pub fn run_panel(
    doc: &DesignDocument,
    context: &DesignContext,
    mode: CritiqueMode,
    provider: &dyn CritiqueProvider,
) -> Result<Vec<RoleFeedback>, PanelError> {
    let results: Vec<(Role, Result<RoleFeedback, CritiqueError>)> = if cfg!(target_family = "wasm")
    {
        mode.roles()
            .iter()
            .map(|&role| (role, critique(role, doc, context, provider)))
            .collect()
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = mode
                .roles()
                .iter()
                .map(|&role| {
                    (
                        role,
                        scope.spawn(move || critique(role, doc, context, provider)),
                    )
                })
                .collect();
            handles
                .into_iter()
                .map(|(role, h)| (role, h.join().expect("critique thread panicked")))
                .collect()
        })
    };
    let mut succeeded = Vec::new();
    let mut failed = Vec::new();
    for (role, r) in results {
        match r {
            Ok(fb) => succeeded.push(fb),
            Err(e) => failed.push((role, e)),
        }
    }
    if failed.is_empty() {
        Ok(succeeded)
    } else {
        Err(PanelError { succeeded, failed })
    }
}

// ── Rule-backed provider ─────────────────────────────────────────────────────

fn rationale(rule: RuleId) -> &'static str {
    match rule {
        RuleId::ContrastText => "Low-contrast text is hard to read for people with low vision and in bright light; WCAG 2.1 AA sets minimum contrast ratios for text.",
        RuleId::TouchTarget => "Small hit areas cause mis-taps, especially for users with motor impairments; 44x44px is the accepted minimum.",
        RuleId::FontSize => "Text under 16px strains readability on mobile screens and pushes users to zoom.",
        RuleId::BrandColorUnused => "The brand's theme color is how users recognise the product; leaving it out weakens brand recall at the moment of conversion.",
        RuleId::PlaceholderText => "Placeholder copy signals an unfinished product and hides whether the real content fits the layout.",
        RuleId::CtaCopyLength => "Long call-to-action labels dilute the action and tend to wrap or truncate on small screens.",
        RuleId::NonstandardFont => "Fonts outside the supported set need extra font files, cost load time and risk inconsistent rendering.",
        RuleId::NodeBudget => "Very deep or large layer trees translate into heavy DOM structures that are slow to render and hard to maintain.",
        RuleId::OversizedImage => "Oversized images inflate page weight and hurt Largest Contentful Paint.",
    }
}

fn issue_tag(rule: RuleId) -> &'static str {
    rule.as_str()
}

/// Maps a rule finding to a panel issue with templated text and, where a fix
/// can be computed, a proposed patch.
pub fn issue_from_finding(
    role: Role,
    finding: &Finding,
    doc: &DesignDocument,
    context: &DesignContext,
    config: &RuleConfig,
) -> Issue {
    let node = find_node(doc, &finding.node_id).expect("finding node exists");
    let issue_id = format!("{}-{}-{}", role.initials(), node.id, finding.rule.as_str());
    let options = suggest_fixes_for_finding(&issue_id, finding, doc, context, config);
    let mut proposed_patch = options.first().map(|o| o.patch.clone());
    let (action, specific, technical) = match finding.rule {
        RuleId::ContrastText => (
            "Increase the text contrast".to_string(),
            match options.first() {
                Some(o) => format!(
                    "Change the text color to {} ({:.2}:1)",
                    o.patch.label.trim_start_matches("Set text color to "),
                    o.compliance["ratio"]
                ),
                None => "Darken or lighten the text until it meets the threshold".to_string(),
            },
            "Update the color token used by this text style and re-check all usages.".to_string(),
        ),
        RuleId::TouchTarget => (
            "Enlarge the touch target".to_string(),
            format!(
                "Make the element at least {0}x{0}px",
                crate::analyzers::MIN_TOUCH_TARGET_PX
            ),
            "Add padding (or a min-width/min-height) instead of scaling the icon.".to_string(),
        ),
        RuleId::FontSize => (
            "Increase the font size".to_string(),
            format!("Use at least {}px", crate::analyzers::MIN_FONT_SIZE_PX),
            "Raise the text style in the type scale rather than overriding locally.".to_string(),
        ),
        RuleId::BrandColorUnused => {
            let theme = context
                .theme_color
                .expect("brand finding implies theme color");
            let target = brand_target(doc, config);
            proposed_patch = (!target.fills.is_empty()).then(|| Patch {
                patch_id: format!("{issue_id}-fix1"),
                label: format!("Apply theme color {theme}"),
                ops: vec![PatchOp::SetSolidFill {
                    node_id: target.id.clone(),
                    fill_index: target.fills.len() - 1,
                    color: theme.with_alpha(1.0),
                }],
                origin: Some(issue_id.clone()),
            });
            (
                "Bring the theme color into the primary action".to_string(),
                format!("Apply {theme} to \"{}\"", target.name),
                "Reference the brand color token from the component's fill.".to_string(),
            )
        }
        RuleId::PlaceholderText => (
            "Replace placeholder copy".to_string(),
            "Write final copy that reflects the real product content".to_string(),
            "Source strings from the content system instead of hard-coding them.".to_string(),
        ),
        RuleId::CtaCopyLength => (
            "Shorten the call to action".to_string(),
            format!(
                "Keep the label to {} characters or fewer",
                crate::analyzers::CTA_MAX_CHARS
            ),
            "Move secondary wording into helper text next to the button.".to_string(),
        ),
        RuleId::NonstandardFont => (
            "Use a supported font".to_string(),
            format!("Switch to one of: {}", config.font_allowlist.join(", ")),
            "Map the style to an existing font token to avoid loading another web font."
                .to_string(),
        ),
        RuleId::NodeBudget => (
            "Simplify the layer structure".to_string(),
            "Flatten wrappers and extract repeated groups into components".to_string(),
            "Aim for one DOM element per meaningful layer; virtualise long lists.".to_string(),
        ),
        RuleId::OversizedImage => (
            "Resize the image asset".to_string(),
            format!(
                "Export at most {}px on the long edge",
                crate::analyzers::MAX_IMAGE_PX
            ),
            "Serve responsive sizes with srcset and a modern format such as WebP or AVIF."
                .to_string(),
        ),
    };
    Issue {
        issue_id,
        source_role: role,
        node_id: node.id.clone(),
        node_name: node.name.clone(),
        element_type: node.kind,
        issue_type: issue_tag(finding.rule).to_string(),
        severity: finding.severity,
        description: format!("\"{}\": {}.", node.name, finding.message),
        rationale: rationale(finding.rule).to_string(),
        remediation: Remediation {
            action,
            specific_suggestion: specific,
            technical_solution: technical,
        },
        proposed_patch,
    }
}

/// Builds a role's feedback straight from the rule engine.
pub fn rule_feedback(
    role: Role,
    doc: &DesignDocument,
    context: &DesignContext,
    config: &RuleConfig,
) -> RoleFeedback {
    let rules = RuleId::for_role(role).into_iter().collect();
    let issues: Vec<Issue> = run_rules(doc, context, &rules, config)
        .iter()
        .map(|f| issue_from_finding(role, f, doc, context, config))
        .collect();
    let summary = match issues.len() {
        0 => format!("No {} issues found.", lens_noun(role)),
        1 => format!("1 {} issue found.", lens_noun(role)),
        n => format!("{n} {} issues found.", lens_noun(role)),
    };
    let mut by_rule: Vec<String> = Vec::new();
    for rule in RuleId::for_role(role) {
        let n = issues.iter().filter(|i| i.rule() == Some(rule)).count();
        if n > 0 {
            by_rule.push(format!("{rule}: {n}"));
        }
    }
    let detailed_analysis = if by_rule.is_empty() {
        format!(
            "All {} checks passed across {} layers.",
            lens_noun(role),
            doc.node_count()
        )
    } else {
        format!(
            "Checked {} layers. Findings by rule: {}.",
            doc.node_count(),
            by_rule.join(", ")
        )
    };
    RoleFeedback {
        feedback_id: format!("{}-feedback", role.initials()),
        source_role: role,
        priority: RoleFeedback::top_severity(&issues),
        summary,
        detailed_analysis,
        issues,
    }
}

fn lens_noun(role: Role) -> &'static str {
    match role {
        Role::UserExperience => "user-experience",
        Role::ProductVision => "product-vision",
        Role::Engineering => "engineering",
        Role::Unified => "design",
        Role::Coordinator => "agenda",
    }
}

/// Offline provider backed by the deterministic rule engine. Replies are
/// templated from the issues, so every output is reproducible.
#[derive(Debug, Clone, Default)]
pub struct RuleProvider {
    pub config: RuleConfig,
}

impl RuleProvider {
    pub fn new(config: RuleConfig) -> Self {
        RuleProvider { config }
    }
}

fn decode_request(
    document: &str,
    context: &str,
) -> Result<(DesignDocument, DesignContext), ProviderError> {
    let doc = parse_document(document)
        .map_err(|e| ProviderError::Transport(format!("bad document: {e}")))?;
    let ctx = DesignContext::from_json(context)
        .map_err(|e| ProviderError::Transport(format!("bad context: {e}")))?;
    Ok((doc, ctx))
}

const TOPIC_WORDS: &[(&str, &[RuleId])] = &[
    ("color", &[RuleId::ContrastText, RuleId::BrandColorUnused]),
    ("colour", &[RuleId::ContrastText, RuleId::BrandColorUnused]),
    ("contrast", &[RuleId::ContrastText]),
    ("read", &[RuleId::ContrastText, RuleId::FontSize]),
    ("tap", &[RuleId::TouchTarget]),
    ("touch", &[RuleId::TouchTarget]),
    ("button", &[RuleId::TouchTarget, RuleId::CtaCopyLength]),
    ("small", &[RuleId::TouchTarget, RuleId::FontSize]),
    ("font", &[RuleId::FontSize, RuleId::NonstandardFont]),
    ("text", &[RuleId::FontSize, RuleId::PlaceholderText]),
    ("brand", &[RuleId::BrandColorUnused]),
    ("copy", &[RuleId::PlaceholderText, RuleId::CtaCopyLength]),
    ("image", &[RuleId::OversizedImage]),
    ("performance", &[RuleId::OversizedImage, RuleId::NodeBudget]),
    (
        "costly",
        &[
            RuleId::NodeBudget,
            RuleId::OversizedImage,
            RuleId::NonstandardFont,
        ],
    ),
    (
        "implement",
        &[
            RuleId::NodeBudget,
            RuleId::OversizedImage,
            RuleId::NonstandardFont,
        ],
    ),
];

/// Issues a message is about: an explicitly referenced issue, issues on
/// nodes the message names, or issues matching topic words.
pub fn relevant_issues<'a>(
    message: &str,
    issues: &'a [Issue],
    referenced: Option<&str>,
) -> Vec<&'a Issue> {
    if let Some(id) = referenced {
        let hit: Vec<_> = issues.iter().filter(|i| i.issue_id == id).collect();
        if !hit.is_empty() {
            return hit;
        }
    }
    let lowered = message.to_lowercase();
    let tokens: HashSet<&str> = lowered
        .split(|c: char| !(c.is_alphanumeric() || matches!(c, '-' | '_' | '\'' | '’')))
        .filter(|t| !t.is_empty())
        .collect();
    let by_node: Vec<_> = issues
        .iter()
        .filter(|i| {
            tokens.contains(i.node_id.to_lowercase().as_str())
                || (i.node_name.chars().count() >= 3
                    && lowered.contains(&i.node_name.to_lowercase()))
        })
        .collect();
    if !by_node.is_empty() {
        return by_node;
    }
    let rules: HashSet<RuleId> = TOPIC_WORDS
        .iter()
        .filter(|(w, _)| lowered.contains(w))
        .flat_map(|(_, rs)| rs.iter().copied())
        .collect();
    issues
        .iter()
        .filter(|i| i.rule().is_some_and(|r| rules.contains(&r)))
        .collect()
}

const MENTIONS: &[(&str, Role)] = &[
    ("userexperience", Role::UserExperience),
    ("ux", Role::UserExperience),
    ("product", Role::ProductVision),
    ("pm", Role::ProductVision),
    ("engineer", Role::Engineering),
    ("eng", Role::Engineering),
];

/// Role a chat message is addressed to: the first `@UX`, `@PM` or
/// `@Engineer` mention (or alias) in reading order, else the coordinator.
pub fn route_message(text: &str) -> Role {
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if c != '@' || (i > 0 && chars[i - 1].is_alphanumeric()) {
            continue;
        }
        let word: String = chars[i + 1..]
            .iter()
            .take_while(|c| c.is_alphanumeric() || **c == '_')
            .collect::<String>()
            .to_lowercase();
        if let Some((_, role)) = MENTIONS.iter().find(|(m, _)| *m == word) {
            return *role;
        }
    }
    Role::Coordinator
}

/// Templated reply used by the rule-backed provider.
pub fn templated_reply(request: &ChatRequest) -> String {
    if request.role == Role::Coordinator {
        return coordinator_reply(request);
    }
    let label = request.role.label();
    if request.issues.is_empty() {
        return format!(
            "{label}: we found no {} issues in this design.",
            lens_noun(request.role)
        );
    }
    let mut picked = relevant_issues(
        &request.message,
        &request.issues,
        request.referenced_issue_id.as_deref(),
    );
    let focused = !picked.is_empty();
    if !focused {
        picked = request.issues.iter().collect();
    }
    picked.sort_by(|a, b| {
        b.severity
            .cmp(&a.severity)
            .then_with(|| a.issue_id.cmp(&b.issue_id))
    });
    let lines: Vec<String> = picked
        .iter()
        .take(3)
        .map(|i| {
            format!(
                "[{}] {} {} Suggested fix: {}.",
                i.severity, i.description, i.rationale, i.remediation.specific_suggestion
            )
        })
        .collect();
    if focused {
        format!("{label}: {}", lines.join(" "))
    } else {
        format!(
            "{label}: we raised {} issue(s). The most pressing: {}",
            request.issues.len(),
            lines.join(" ")
        )
    }
}

fn coordinator_reply(request: &ChatRequest) -> String {
    let Some(agenda) = &request.agenda else {
        return "Lead Coordinator: the agenda is not ready yet.".to_string();
    };
    let Some(top) = agenda.items.first() else {
        return "Lead Coordinator: the panel found nothing that needs changing. Ask @UX, @PM or @Engineer for a closer look at any area.".to_string();
    };
    let mut reply = format!(
        "Lead Coordinator: we have {} agenda item(s). The top priority is \"{}\" ({}), raised by {}.",
        agenda.items.len(),
        top.title,
        top.priority,
        top.affected_roles.iter().map(|r| r.label()).collect::<Vec<_>>().join(" and "),
    );
    if let Some(c) = agenda.conflicts_to_surface.first() {
        reply.push_str(&format!(
            " One trade-off needs your call: {}",
            c.tradeoff_question
        ));
    }
    reply.push_str(" Mention @UX, @PM or @Engineer to ask a specific expert.");
    reply
}

impl CritiqueProvider for RuleProvider {
    fn name(&self) -> &str {
        "stub"
    }

    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let (doc, ctx) = decode_request(&request.document, &request.context)?;
        let fb = rule_feedback(request.role, &doc, &ctx, &self.config);
        Ok(ProviderResponse {
            text: serde_json::to_string(&fb).expect("feedback serializes"),
        })
    }

    fn chat(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        Ok(templated_reply(request))
    }
}
