//! Lead coordinator: groups role feedback into a prioritized agenda and
//! frames cross-role disagreements as open trade-offs.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzers::RuleId;
use crate::model::{walk, DesignContext, DesignDocument, NodeKind};
use crate::perspectives::{extract_json, Issue, RoleFeedback};
use crate::role::{Role, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Accessibility,
    CoreFlow,
    Business,
    TechDebt,
    Aesthetic,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Accessibility,
        Category::CoreFlow,
        Category::Business,
        Category::TechDebt,
        Category::Aesthetic,
    ];

    /// Lower ranks come first in the agenda.
    pub fn rank(&self) -> u8 {
        *self as u8
    }

    pub fn label(&self) -> &'static str {
        match self {
            Category::Accessibility => "Accessibility",
            Category::CoreFlow => "Core flow",
            Category::Business => "Business",
            Category::TechDebt => "Tech debt",
            Category::Aesthetic => "Aesthetic",
        }
    }

    pub fn of_rule(rule: RuleId) -> Category {
        match rule {
            RuleId::ContrastText | RuleId::TouchTarget | RuleId::FontSize => {
                Category::Accessibility
            }
            RuleId::PlaceholderText | RuleId::CtaCopyLength => Category::CoreFlow,
            RuleId::BrandColorUnused => Category::Business,
            RuleId::NonstandardFont | RuleId::NodeBudget | RuleId::OversizedImage => {
                Category::TechDebt
            }
        }
    }

    /// Category for a rule id or a free-form issue type from a remote model.
    pub fn of_issue_type(issue_type: &str) -> Category {
        if let Ok(rule) = issue_type.parse::<RuleId>() {
            return Category::of_rule(rule);
        }
        let t = issue_type.to_ascii_lowercase();
        KEYWORDS
            .iter()
            .find(|(words, _)| words.iter().any(|w| t.contains(w)))
            .map(|(_, c)| *c)
            .unwrap_or(Category::Aesthetic)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

const KEYWORDS: &[(&[&str], Category)] = &[
    (
        &["accessib", "contrast", "wcag", "touch", "readab", "a11y"],
        Category::Accessibility,
    ),
    (
        &[
            "usability",
            "navigation",
            "flow",
            "content",
            "copy",
            "task",
            "interaction",
        ],
        Category::CoreFlow,
    ),
    (
        &[
            "business",
            "brand",
            "market",
            "conversion",
            "goal",
            "revenue",
        ],
        Category::Business,
    ),
    (
        &[
            "feasib",
            "performance",
            "technical",
            "implement",
            "maintain",
            "debt",
            "cost",
        ],
        Category::TechDebt,
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effort {
    Low,
    Medium,
    High,
}

/// Two or more roles pulling the same node in different directions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub conflicting_roles: BTreeSet<Role>,
    pub node_id: String,
    pub property: String,
    pub conflict_description: String,
    pub tradeoff_question: String,
    /// Issues on either side of the disagreement.
    pub issue_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgendaItem {
    pub priority: Severity,
    pub title: String,
    pub component_group: String,
    pub category: Category,
    pub affected_roles: BTreeSet<Role>,
    pub issue_ids: Vec<String>,
    pub issue_summary: String,
    pub recommendation: String,
    pub conflicts: Vec<Conflict>,
    pub estimated_effort: Effort,
}

impl AgendaItem {
    fn min_issue_id(&self) -> &str {
        self.issue_ids
            .iter()
            .min()
            .map(String::as_str)
            .unwrap_or("")
    }
}

/// The declared agenda order: severity descending, category rank ascending,
/// component group, then smallest issue id.
pub fn agenda_order(a: &AgendaItem, b: &AgendaItem) -> Ordering {
    b.priority
        .cmp(&a.priority)
        .then_with(|| a.category.rank().cmp(&b.category.rank()))
        .then_with(|| a.component_group.cmp(&b.component_group))
        .then_with(|| a.min_issue_id().cmp(b.min_issue_id()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CritiqueAgenda {
    pub conversational_opening: String,
    pub overall_score: u8,
    #[serde(rename = "agenda_items")]
    pub items: Vec<AgendaItem>,
    pub conflicts_to_surface: Vec<Conflict>,
    /// Each role's detailed analysis, passed through unchanged.
    #[serde(default)]
    pub component_analysis: BTreeMap<Role, String>,
    pub positive_highlights: Vec<String>,
    pub next_conversation_points: Vec<String>,
    /// Roles whose critique failed; the agenda covers the rest.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degraded_roles: Vec<Role>,
}

impl CritiqueAgenda {
    pub fn all_issue_ids(&self) -> Vec<&str> {
        self.items
            .iter()
            .flat_map(|i| i.issue_ids.iter().map(String::as_str))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("issue {issue_id:?} references node {node_id:?}, which is not in the document")]
pub struct DanglingNodeError {
    pub issue_id: String,
    pub node_id: String,
}

/// Name of the nearest named FRAME enclosing the node (the node itself
/// counts), falling back to its top-level frame.
fn component_groups(doc: &DesignDocument) -> BTreeMap<&str, &str> {
    walk(doc)
        .into_iter()
        .map(|e| {
            let group = std::iter::once(e.node)
                .chain(e.ancestors.iter().rev().copied())
                .find(|n| n.kind == NodeKind::Frame && !n.name.trim().is_empty())
                .or(e.ancestors.first().copied())
                .unwrap_or(e.node);
            (e.node.id.as_str(), group.name.as_str())
        })
        .collect()
}

pub fn issue_category(issue: &Issue) -> Category {
    Category::of_issue_type(&issue.issue_type)
}

/// LOW when every issue carries a patch, HIGH when a serious issue has none,
/// MEDIUM otherwise.
fn estimate_effort(issues: &[&Issue]) -> Effort {
    if issues.iter().all(|i| i.proposed_patch.is_some()) {
        Effort::Low
    } else if issues
        .iter()
        .any(|i| i.proposed_patch.is_none() && i.severity >= Severity::High)
    {
        Effort::High
    } else {
        Effort::Medium
    }
}

/// Merges issues that share a component group and a category.
pub fn thematize(
    feedbacks: &[RoleFeedback],
    doc: &DesignDocument,
) -> Result<Vec<AgendaItem>, DanglingNodeError> {
    let groups = component_groups(doc);
    let mut buckets: BTreeMap<(String, Category), Vec<&Issue>> = BTreeMap::new();
    for issue in feedbacks.iter().flat_map(|f| &f.issues) {
        let group = groups
            .get(issue.node_id.as_str())
            .ok_or_else(|| DanglingNodeError {
                issue_id: issue.issue_id.clone(),
                node_id: issue.node_id.clone(),
            })?;
        buckets
            .entry((group.to_string(), issue_category(issue)))
            .or_default()
            .push(issue);
    }
    Ok(buckets
        .into_iter()
        .map(|((group, category), mut issues)| {
            issues.sort_by(|a, b| {
                b.severity
                    .cmp(&a.severity)
                    .then_with(|| a.issue_id.cmp(&b.issue_id))
            });
            let lead = issues[0];
            let recommendation = if lead.remediation.action.is_empty() {
                lead.description.clone()
            } else if lead.remediation.specific_suggestion.is_empty() {
                format!("{}.", lead.remediation.action)
            } else {
                format!(
                    "{}: {}.",
                    lead.remediation.action, lead.remediation.specific_suggestion
                )
            };
            AgendaItem {
                priority: lead.severity,
                title: format!("{} — {group}", category.label()),
                component_group: group,
                category,
                affected_roles: issues.iter().map(|i| i.source_role).collect(),
                issue_ids: issues.iter().map(|i| i.issue_id.clone()).collect(),
                issue_summary: issues
                    .iter()
                    .map(|i| i.description.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
                recommendation,
                conflicts: Vec::new(),
                estimated_effort: estimate_effort(&issues),
            }
        })
        .collect())
}

/// Sorts items into the declared agenda order.
pub fn prioritize(mut items: Vec<AgendaItem>) -> Vec<AgendaItem> {
    items.sort_by(agenda_order);
    items
}

fn is_brand_issue(issue: &Issue) -> bool {
    issue.rule() == Some(RuleId::BrandColorUnused)
        || (issue.rule().is_none() && issue.issue_type.to_ascii_lowercase().contains("brand"))
}

fn is_contrast_issue(issue: &Issue) -> bool {
    issue.rule() == Some(RuleId::ContrastText)
        || (issue.rule().is_none() && issue.issue_type.to_ascii_lowercase().contains("contrast"))
}

fn join_roles(roles: &BTreeSet<Role>) -> String {
    let labels: Vec<_> = roles.iter().map(|r| r.label()).collect();
    match labels.as_slice() {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn frame_conflict(
    roles: BTreeSet<Role>,
    node_id: &str,
    property: &str,
    issue_ids: Vec<String>,
    detail: &str,
) -> Conflict {
    let stakes: Vec<_> = roles.iter().map(|r| r.stake()).collect();
    let (first, rest) = stakes.split_first().expect("conflict has roles");
    Conflict {
        conflict_description: format!(
            "{} want different values for the {property} of node {node_id}: {detail}",
            join_roles(&roles)
        ),
        tradeoff_question: format!(
            "How should {first} be weighed against {} for the {property} of {node_id}?",
            rest.join(" and ")
        ),
        conflicting_roles: roles,
        node_id: node_id.to_string(),
        property: property.to_string(),
        issue_ids,
    }
}

// node, property, roles -> (issue ids, details)
type ConflictKey = (String, String, BTreeSet<Role>);

/// Finds cross-role disagreements. The result is sorted and does not depend
/// on the order of `feedbacks`.
pub fn detect_conflicts(feedbacks: &[RoleFeedback]) -> Vec<Conflict> {
    let issues: Vec<&Issue> = feedbacks.iter().flat_map(|f| &f.issues).collect();
    let mut found: BTreeMap<ConflictKey, (BTreeSet<String>, BTreeSet<String>)> = BTreeMap::new();
    let mut record = |a: &Issue, b: &Issue, node: &str, property: &str, detail: String| {
        let roles: BTreeSet<Role> = [a.source_role, b.source_role].into();
        let entry = found
            .entry((node.to_string(), property.to_string(), roles))
            .or_default();
        entry.0.insert(a.issue_id.clone());
        entry.0.insert(b.issue_id.clone());
        entry.1.insert(detail);
    };
    for (i, a) in issues.iter().enumerate() {
        for b in &issues[i + 1..] {
            if a.source_role == b.source_role {
                continue;
            }
            if let (Some(pa), Some(pb)) = (&a.proposed_patch, &b.proposed_patch) {
                for oa in &pa.ops {
                    for ob in &pb.ops {
                        if oa.node_id() == ob.node_id()
                            && oa.property() == ob.property()
                            && oa != ob
                        {
                            let (x, y) = if a.source_role < b.source_role {
                                (a, oa)
                            } else {
                                (b, ob)
                            };
                            let (p, q) = if a.source_role < b.source_role {
                                (b, ob)
                            } else {
                                (a, oa)
                            };
                            let detail = format!(
                                "{} proposes {}, {} proposes {}",
                                x.source_role.label(),
                                y.value_label(),
                                p.source_role.label(),
                                q.value_label()
                            );
                            record(a, b, oa.node_id(), oa.property(), detail);
                        }
                    }
                }
            }
            if a.node_id == b.node_id
                && ((is_brand_issue(a) && is_contrast_issue(b))
                    || (is_contrast_issue(a) && is_brand_issue(b)))
            {
                record(
                    a,
                    b,
                    &a.node_id,
                    "fill",
                    "the brand color and the contrast requirement pull the color apart".to_string(),
                );
            }
        }
    }
    found
        .into_iter()
        .map(|((node, property, roles), (ids, details))| {
            let detail = details.into_iter().collect::<Vec<_>>().join("; ");
            frame_conflict(roles, &node, &property, ids.into_iter().collect(), &detail)
        })
        .collect()
}

pub fn severity_weight(s: Severity) -> f64 {
    match s {
        Severity::Critical => 2.0,
        Severity::High => 1.0,
        Severity::Medium => 0.5,
        Severity::Low => 0.25,
    }
}

/// `round(10 - sum of severity weights)`, clamped to `[1, 10]`. Halves round
/// away from zero.
pub fn overall_score(feedbacks: &[RoleFeedback]) -> u8 {
    let deduction: f64 = feedbacks
        .iter()
        .flat_map(|f| &f.issues)
        .map(|i| severity_weight(i.severity))
        .sum();
    (10.0 - deduction).round().clamp(1.0, 10.0) as u8
}

fn mention(role: Role) -> &'static str {
    match role {
        Role::UserExperience => "@UX",
        Role::ProductVision => "@PM",
        Role::Engineering => "@Engineer",
        Role::Unified | Role::Coordinator => "@Coordinator",
    }
}

/// Runs the full synthesis with templated prose.
pub fn compose_agenda(
    feedbacks: &[RoleFeedback],
    doc: &DesignDocument,
    context: &DesignContext,
) -> Result<CritiqueAgenda, DanglingNodeError> {
    let mut items = prioritize(thematize(feedbacks, doc)?);
    let conflicts = detect_conflicts(feedbacks);
    for item in &mut items {
        item.conflicts = conflicts
            .iter()
            .filter(|c| c.issue_ids.iter().any(|id| item.issue_ids.contains(id)))
            .cloned()
            .collect();
    }
    let issue_count: usize = feedbacks.iter().map(|f| f.issues.len()).sum();
    let product = if context.product_goal.trim().is_empty() {
        format!("\"{}\"", doc.name)
    } else {
        format!("\"{}\" ({})", doc.name, context.product_goal.trim())
    };
    let conversational_opening = match (items.first(), conflicts.len()) {
        (None, _) => format!("I reviewed {product} with the panel and nothing needs fixing right now."),
        (Some(top), 0) => format!(
            "I reviewed {product} with the panel: {issue_count} issue(s) grouped into {} agenda item(s). Let's start with \"{}\".",
            items.len(),
            top.title
        ),
        (Some(top), n) => format!(
            "I reviewed {product} with the panel: {issue_count} issue(s) grouped into {} agenda item(s), with {n} trade-off(s) for you to decide. Let's start with \"{}\".",
            items.len(),
            top.title
        ),
    };

    let present: BTreeSet<Category> = items.iter().map(|i| i.category).collect();
    let mut positive_highlights: Vec<String> = feedbacks
        .iter()
        .filter(|f| f.issues.is_empty())
        .map(|f| format!("{} found no issues.", f.source_role.label()))
        .collect();
    positive_highlights.extend(
        Category::ALL
            .iter()
            .filter(|c| !present.contains(c) && **c != Category::Aesthetic)
            .map(|c| format!("No {} issues were found.", c.label().to_lowercase())),
    );
    if positive_highlights.is_empty() {
        positive_highlights.push(format!(
            "All {} layers were reviewed from every perspective.",
            doc.node_count()
        ));
    }

    let mut next_conversation_points: Vec<String> = items
        .iter()
        .take(3)
        .map(|item| {
            let who: Vec<_> = item.affected_roles.iter().map(|r| mention(*r)).collect();
            format!("Ask {} about \"{}\".", who.join(" or "), item.title)
        })
        .collect();
    next_conversation_points.extend(conflicts.iter().map(|c| c.tradeoff_question.clone()));
    if next_conversation_points.is_empty() {
        next_conversation_points.push(
            "Ask @UX, @PM or @Engineer for a closer look at any part of the design.".to_string(),
        );
    }

    Ok(CritiqueAgenda {
        conversational_opening,
        overall_score: overall_score(feedbacks),
        items,
        conflicts_to_surface: conflicts,
        component_analysis: feedbacks
            .iter()
            .map(|f| (f.source_role, f.detailed_analysis.clone()))
            .collect(),
        positive_highlights,
        next_conversation_points,
        degraded_roles: Vec::new(),
    })
}

#[derive(Debug, Default, Deserialize)]
struct Narration {
    #[serde(default)]
    conversational_opening: Option<String>,
    #[serde(default)]
    positive_highlights: Option<Vec<String>>,
    #[serde(default)]
    next_conversation_points: Option<Vec<String>>,
}

/// Replaces the prose fields of `agenda` with model-authored text. Structure
/// (items, order, conflicts, score) is never taken from the model. Returns
/// false and leaves the agenda untouched when `text` has no usable JSON.
pub fn apply_narration(agenda: &mut CritiqueAgenda, text: &str) -> bool {
    let Ok(value) = extract_json(text) else {
        return false;
    };
    let Ok(n) = serde_json::from_value::<Narration>(value) else {
        return false;
    };
    let mut changed = false;
    if let Some(s) = n.conversational_opening.filter(|s| !s.trim().is_empty()) {
        agenda.conversational_opening = s;
        changed = true;
    }
    if let Some(v) = n.positive_highlights.filter(|v| !v.is_empty()) {
        agenda.positive_highlights = v;
        changed = true;
    }
    if let Some(v) = n.next_conversation_points.filter(|v| !v.is_empty()) {
        agenda.next_conversation_points = v;
        changed = true;
    }
    changed
}

/// Structural checks every agenda must pass.
pub fn validate_agenda(agenda: &CritiqueAgenda, feedbacks: &[RoleFeedback]) -> Result<(), String> {
    if !(1..=10).contains(&agenda.overall_score) {
        return Err(format!(
            "overall_score {} outside 1..=10",
            agenda.overall_score
        ));
    }
    if agenda.positive_highlights.is_empty() {
        return Err("positive_highlights is empty".into());
    }
    for w in agenda.items.windows(2) {
        if agenda_order(&w[0], &w[1]) == Ordering::Greater {
            return Err(format!(
                "items {:?} and {:?} are out of order",
                w[0].title, w[1].title
            ));
        }
    }
    let mut seen = BTreeSet::new();
    for item in &agenda.items {
        if item.issue_ids.is_empty() {
            return Err(format!("item {:?} has no issues", item.title));
        }
        for id in &item.issue_ids {
            if !seen.insert(id.as_str()) {
                return Err(format!("issue {id:?} appears twice"));
            }
        }
    }
    let expected: BTreeSet<&str> = feedbacks
        .iter()
        .flat_map(|f| f.issues.iter().map(|i| i.issue_id.as_str()))
        .collect();
    if seen != expected {
        return Err("agenda issue ids differ from the input issues".into());
    }
    for c in &agenda.conflicts_to_surface {
        if c.conflicting_roles.len() < 2 {
            return Err(format!(
                "conflict on {} has fewer than two roles",
                c.node_id
            ));
        }
        if !c.tradeoff_question.ends_with('?') {
            return Err(format!(
                "trade-off question for {} is not a question",
                c.node_id
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::Color;
    use crate::model::parse_document;
    use crate::perspectives::Remediation;
    use crate::remediation::{Patch, PatchOp};

    fn doc() -> DesignDocument {
        parse_document(
            r#"{"schemaVersion":1,"name":"Shop","frames":[
              {"id":"f1","name":"Checkout","type":"FRAME","bounds":{"x":0,"y":0,"w":375,"h":800},"fills":[],"strokes":[],
               "children":[
                 {"id":"card","name":"Pay card","type":"FRAME","bounds":{"x":0,"y":0,"w":300,"h":200},"fills":[],"strokes":[],
                  "children":[{"id":"n7","name":"pay","type":"TEXT","bounds":{"x":0,"y":0,"w":80,"h":20},"fills":[],"strokes":[],
                    "text":{"characters":"Pay","fontSize":16,"fontWeight":400,"fontFamily":"Inter"}}]},
                 {"id":"g","name":"","type":"FRAME","bounds":{"x":0,"y":0,"w":10,"h":10},"fills":[],"strokes":[],
                  "children":[{"id":"v","name":"icon","type":"VECTOR","bounds":{"x":0,"y":0,"w":10,"h":10},"fills":[],"strokes":[]}]}]},
              {"id":"f2","name":"Home","type":"FRAME","bounds":{"x":0,"y":0,"w":375,"h":800},"fills":[],"strokes":[],"children":[
                 {"id":"h1","name":"hero","type":"RECTANGLE","bounds":{"x":0,"y":0,"w":10,"h":10},"fills":[],"strokes":[]}]}]}"#,
        )
        .unwrap()
    }

    fn issue(id: &str, role: Role, node: &str, kind: &str, sev: Severity) -> Issue {
        Issue {
            issue_id: id.into(),
            source_role: role,
            node_id: node.into(),
            node_name: node.into(),
            element_type: NodeKind::Text,
            issue_type: kind.into(),
            severity: sev,
            description: format!("{id} problem"),
            rationale: String::new(),
            remediation: Remediation::default(),
            proposed_patch: None,
        }
    }

    fn fb(role: Role, issues: Vec<Issue>) -> RoleFeedback {
        RoleFeedback {
            feedback_id: role.initials().into(),
            source_role: role,
            priority: RoleFeedback::top_severity(&issues),
            issues,
            summary: String::new(),
            detailed_analysis: format!("{role} analysis"),
        }
    }

    fn fill(issue_id: &str, node: &str, hex: &str) -> Option<Patch> {
        Some(Patch {
            patch_id: format!("{issue_id}-fix1"),
            label: "fill".into(),
            ops: vec![PatchOp::SetSolidFill {
                node_id: node.into(),
                fill_index: 0,
                color: Color::from_hex(hex).unwrap(),
            }],
            origin: None,
        })
    }

    #[test]
    fn groups_by_nearest_named_frame() {
        let d = doc();
        let g = component_groups(&d);
        assert_eq!(g["n7"], "Pay card");
        assert_eq!(g["card"], "Pay card");
        assert_eq!(g["v"], "Checkout");
        assert_eq!(g["h1"], "Home");
    }

    #[test]
    fn thematize_merges_by_group_and_category() {
        let d = doc();
        let fbs = vec![
            fb(
                Role::UserExperience,
                vec![
                    issue(
                        "a",
                        Role::UserExperience,
                        "n7",
                        "CONTRAST_TEXT",
                        Severity::High,
                    ),
                    issue(
                        "b",
                        Role::UserExperience,
                        "card",
                        "TOUCH_TARGET",
                        Severity::High,
                    ),
                ],
            ),
            fb(
                Role::ProductVision,
                vec![issue(
                    "c",
                    Role::ProductVision,
                    "n7",
                    "BRAND_COLOR_UNUSED",
                    Severity::Medium,
                )],
            ),
            fb(
                Role::Engineering,
                vec![issue(
                    "d",
                    Role::Engineering,
                    "h1",
                    "OVERSIZED_IMAGE",
                    Severity::Medium,
                )],
            ),
        ];
        let items = thematize(&fbs, &d).unwrap();
        assert_eq!(items.len(), 3);
        let access = items
            .iter()
            .find(|i| i.category == Category::Accessibility)
            .unwrap();
        assert_eq!(access.issue_ids, ["a", "b"]);
        assert_eq!(access.title, "Accessibility — Pay card");
        assert_eq!(access.affected_roles, [Role::UserExperience].into());
        assert_eq!(access.estimated_effort, Effort::High);
    }

    #[test]
    fn dangling_nodes_are_rejected() {
        let fbs = vec![fb(
            Role::UserExperience,
            vec![issue(
                "a",
                Role::UserExperience,
                "ghost",
                "x",
                Severity::Low,
            )],
        )];
        assert_eq!(thematize(&fbs, &doc()).unwrap_err().node_id, "ghost");
    }

    #[test]
    fn severity_then_category_order() {
        let d = doc();
        let fbs = vec![fb(
            Role::Unified,
            vec![
                issue("x1", Role::Unified, "h1", "aesthetic", Severity::Low),
                issue(
                    "x2",
                    Role::Unified,
                    "n7",
                    "CONTRAST_TEXT",
                    Severity::Critical,
                ),
                issue(
                    "x3",
                    Role::Unified,
                    "n7",
                    "BRAND_COLOR_UNUSED",
                    Severity::Medium,
                ),
                issue("x4", Role::Unified, "h1", "NODE_BUDGET", Severity::Critical),
            ],
        )];
        let items = prioritize(thematize(&fbs, &d).unwrap());
        let order: Vec<_> = items.iter().map(|i| i.issue_ids[0].as_str()).collect();
        assert_eq!(order, ["x2", "x4", "x3", "x1"]);
    }

    #[test]
    fn patch_conflict_and_brand_contrast_conflict_collapse() {
        let mut ux = issue(
            "ux1",
            Role::UserExperience,
            "n7",
            "CONTRAST_TEXT",
            Severity::High,
        );
        ux.proposed_patch = fill("ux1", "n7", "#1A1A1A");
        let mut pv = issue(
            "pv1",
            Role::ProductVision,
            "n7",
            "BRAND_COLOR_UNUSED",
            Severity::Medium,
        );
        pv.proposed_patch = fill("pv1", "n7", "#3366FF");
        let fbs = vec![
            fb(Role::UserExperience, vec![ux]),
            fb(Role::ProductVision, vec![pv]),
        ];
        let c = detect_conflicts(&fbs);
        assert_eq!(c.len(), 1);
        assert_eq!(
            c[0].conflicting_roles,
            [Role::UserExperience, Role::ProductVision].into()
        );
        assert_eq!(c[0].property, "fill");
        assert!(c[0].tradeoff_question.ends_with('?'));
        assert!(c[0].conflict_description.contains("#3366FF"));

        let mut rev = fbs.clone();
        rev.reverse();
        assert_eq!(detect_conflicts(&rev), c);
    }

    #[test]
    fn equal_patches_and_disjoint_nodes_do_not_conflict() {
        let mut a = issue("a", Role::UserExperience, "n7", "x", Severity::High);
        a.proposed_patch = fill("a", "n7", "#000000");
        let mut b = issue("b", Role::Engineering, "n7", "y", Severity::High);
        b.proposed_patch = fill("b", "n7", "#000000");
        let c = issue(
            "c",
            Role::ProductVision,
            "h1",
            "BRAND_COLOR_UNUSED",
            Severity::High,
        );
        let fbs = vec![
            fb(Role::UserExperience, vec![a]),
            fb(Role::Engineering, vec![b]),
            fb(Role::ProductVision, vec![c]),
        ];
        assert!(detect_conflicts(&fbs).is_empty());
    }

    #[test]
    fn score_formula() {
        assert_eq!(overall_score(&[]), 10);
        let one = vec![fb(
            Role::Engineering,
            vec![issue("a", Role::Engineering, "n7", "x", Severity::Critical)],
        )];
        assert_eq!(overall_score(&one), 8);
        let many = vec![fb(
            Role::Engineering,
            (0..12)
                .map(|i| {
                    issue(
                        &i.to_string(),
                        Role::Engineering,
                        "n7",
                        "x",
                        Severity::Critical,
                    )
                })
                .collect(),
        )];
        assert_eq!(overall_score(&many), 1);
    }

    #[test]
    fn clean_agenda() {
        let fbs: Vec<_> = Role::PANEL.iter().map(|r| fb(*r, vec![])).collect();
        let agenda = compose_agenda(&fbs, &doc(), &DesignContext::default()).unwrap();
        assert!(agenda.items.is_empty());
        assert_eq!(agenda.overall_score, 10);
        assert!(!agenda.positive_highlights.is_empty());
        validate_agenda(&agenda, &fbs).unwrap();
    }

    #[test]
    fn agenda_wire_names() {
        let mut ux = issue(
            "ux1",
            Role::UserExperience,
            "n7",
            "CONTRAST_TEXT",
            Severity::High,
        );
        ux.proposed_patch = fill("ux1", "n7", "#1A1A1A");
        let pv = issue(
            "pv1",
            Role::ProductVision,
            "n7",
            "BRAND_COLOR_UNUSED",
            Severity::Medium,
        );
        let fbs = vec![
            fb(Role::UserExperience, vec![ux]),
            fb(Role::ProductVision, vec![pv]),
        ];
        let agenda = compose_agenda(&fbs, &doc(), &DesignContext::default()).unwrap();
        validate_agenda(&agenda, &fbs).unwrap();
        let v = serde_json::to_value(&agenda).unwrap();
        for key in [
            "conversational_opening",
            "overall_score",
            "agenda_items",
            "conflicts_to_surface",
            "positive_highlights",
            "next_conversation_points",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(
            v["agenda_items"][0]["conflicts"][0]["conflicting_roles"][0],
            "user_experience"
        );
        assert_eq!(agenda.items[1].conflicts.len(), 1);
        let back: CritiqueAgenda = serde_json::from_value(v).unwrap();
        assert_eq!(back, agenda);
    }

    #[test]
    fn narration_only_touches_prose() {
        let fbs: Vec<_> = Role::PANEL.iter().map(|r| fb(*r, vec![])).collect();
        let mut agenda = compose_agenda(&fbs, &doc(), &DesignContext::default()).unwrap();
        let before = agenda.clone();
        assert!(!apply_narration(&mut agenda, "no json"));
        assert_eq!(agenda, before);
        assert!(apply_narration(
            &mut agenda,
            r#"{"conversational_opening":"Hi!","overall_score":2,"agenda_items":[]}"#
        ));
        assert_eq!(agenda.conversational_opening, "Hi!");
        assert_eq!(agenda.overall_score, 10);
    }
}
