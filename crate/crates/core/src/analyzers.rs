//! Deterministic heuristic checks over a design document.
//!
//! The WCAG checks (text contrast, touch targets, font size) implement the
//! published thresholds. The brand and engineering rules are stand-ins with
//! fixed semantics so that offline critique is reproducible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::color::Color;
use crate::model::{walk, DesignContext, DesignDocument, DesignNode, NodeKind, WalkEntry};
use crate::role::{Role, Severity};

pub const AA_NORMAL: f64 = 4.5;
pub const AA_LARGE: f64 = 3.0;
pub const AAA_NORMAL: f64 = 7.0;
pub const AAA_LARGE: f64 = 4.5;
pub const LARGE_TEXT_PX: f64 = 24.0;
pub const LARGE_BOLD_TEXT_PX: f64 = 18.67;
pub const MIN_TOUCH_TARGET_PX: f64 = 44.0;
pub const MIN_FONT_SIZE_PX: f64 = 16.0;
pub const CTA_MAX_CHARS: usize = 25;
pub const MAX_IMAGE_PX: f64 = 1000.0;
pub const BRAND_MATCH_TOLERANCE: f64 = 2.0 / 255.0;
/// Contrast shortfall beyond which a contrast finding becomes critical.
pub const CRITICAL_CONTRAST_GAP: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleId {
    ContrastText,
    TouchTarget,
    FontSize,
    BrandColorUnused,
    PlaceholderText,
    CtaCopyLength,
    NonstandardFont,
    NodeBudget,
    OversizedImage,
}

impl RuleId {
    pub const ALL: [RuleId; 9] = [
        RuleId::ContrastText,
        RuleId::TouchTarget,
        RuleId::FontSize,
        RuleId::BrandColorUnused,
        RuleId::PlaceholderText,
        RuleId::CtaCopyLength,
        RuleId::NonstandardFont,
        RuleId::NodeBudget,
        RuleId::OversizedImage,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RuleId::ContrastText => "CONTRAST_TEXT",
            RuleId::TouchTarget => "TOUCH_TARGET",
            RuleId::FontSize => "FONT_SIZE",
            RuleId::BrandColorUnused => "BRAND_COLOR_UNUSED",
            RuleId::PlaceholderText => "PLACEHOLDER_TEXT",
            RuleId::CtaCopyLength => "CTA_COPY_LENGTH",
            RuleId::NonstandardFont => "NONSTANDARD_FONT",
            RuleId::NodeBudget => "NODE_BUDGET",
            RuleId::OversizedImage => "OVERSIZED_IMAGE",
        }
    }

    /// The expert that owns findings of this rule.
    pub fn owner(&self) -> Role {
        match self {
            RuleId::ContrastText | RuleId::TouchTarget | RuleId::FontSize => Role::UserExperience,
            RuleId::BrandColorUnused | RuleId::PlaceholderText | RuleId::CtaCopyLength => {
                Role::ProductVision
            }
            RuleId::NonstandardFont | RuleId::NodeBudget | RuleId::OversizedImage => {
                Role::Engineering
            }
        }
    }

    /// Rules a role runs; `Unified` runs all of them.
    pub fn for_role(role: Role) -> Vec<RuleId> {
        match role {
            Role::Unified => RuleId::ALL.to_vec(),
            Role::Coordinator => Vec::new(),
            r => RuleId::ALL
                .into_iter()
                .filter(|id| id.owner() == r)
                .collect(),
        }
    }

    pub fn severity(&self) -> Severity {
        match self {
            // contrast severity depends on the measured gap; this is the floor
            RuleId::ContrastText | RuleId::TouchTarget | RuleId::PlaceholderText => Severity::High,
            RuleId::FontSize
            | RuleId::BrandColorUnused
            | RuleId::CtaCopyLength
            | RuleId::NodeBudget
            | RuleId::OversizedImage => Severity::Medium,
            RuleId::NonstandardFont => Severity::Low,
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown rule {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum WcagLevel {
    #[default]
    AA,
    AAA,
}

/// Tunables for the rule engine. Every key is optional on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RuleConfig {
    pub font_allowlist: Vec<String>,
    pub node_budget: usize,
    pub cta_lexicon: Vec<String>,
    /// `AAA` switches contrast thresholds to 7:1 / 4.5:1.
    pub wcag_level: WcagLevel,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            font_allowlist: vec!["Inter".into(), "Roboto".into(), "SF Pro".into()],
            node_budget: 200,
            cta_lexicon: [
                "buy",
                "enroll",
                "start",
                "submit",
                "checkout",
                "sign up",
                "add to cart",
                "join",
            ]
            .map(String::from)
            .to_vec(),
            wcag_level: WcagLevel::AA,
        }
    }
}

impl RuleConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn contrast_threshold(&self, large: bool) -> f64 {
        match (self.wcag_level, large) {
            (WcagLevel::AA, false) => AA_NORMAL,
            (WcagLevel::AA, true) => AA_LARGE,
            (WcagLevel::AAA, false) => AAA_NORMAL,
            (WcagLevel::AAA, true) => AAA_LARGE,
        }
    }

    /// Case-insensitive, token-aligned match of any lexicon phrase in `text`.
    /// `"add-to-cart-button"` matches `"add to cart"`; `"restart"` does not match `"start"`.
    pub fn matches_cta(&self, text: &str) -> bool {
        let tokens = tokenize(text);
        self.cta_lexicon.iter().any(|phrase| {
            let needle = tokenize(phrase);
            !needle.is_empty() && tokens.windows(needle.len()).any(|w| w == needle.as_slice())
        })
    }

    fn font_allowed(&self, family: &str) -> bool {
        let family = family.trim();
        self.font_allowlist
            .iter()
            .any(|f| f.trim().eq_ignore_ascii_case(family))
    }
}

fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// One rule violation on one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Finding {
    pub node_id: String,
    pub rule: RuleId,
    pub severity: Severity,
    /// Named measurements, e.g. `ratio`, `w`, `h`, `fontSize`.
    pub measured: BTreeMap<String, f64>,
    /// The violated limit, for quantitative rules.
    pub threshold: Option<f64>,
    pub message: String,
}

impl Finding {
    fn new(node: &DesignNode, rule: RuleId, message: String) -> Self {
        Finding {
            node_id: node.id.clone(),
            rule,
            severity: rule.severity(),
            measured: BTreeMap::new(),
            threshold: None,
            message,
        }
    }

    fn measure(mut self, key: &str, value: f64) -> Self {
        self.measured.insert(key.to_string(), value);
        self
    }

    fn threshold(mut self, value: f64) -> Self {
        self.threshold = Some(value);
        self
    }
}

fn linearize(channel: f64) -> f64 {
    if channel <= 0.04045 {
        channel / 12.92
    } else {
        ((channel + 0.055) / 1.055).powf(2.4)
    }
}

pub(crate) fn encode(linear: f64) -> f64 {
    let v = linear.clamp(0.0, 1.0);
    if v <= 0.0031308 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

pub(crate) fn to_linear(c: Color) -> [f64; 3] {
    [linearize(c.r), linearize(c.g), linearize(c.b)]
}

/// WCAG relative luminance. Alpha is ignored.
pub fn relative_luminance(c: Color) -> f64 {
    let [r, g, b] = to_linear(c);
    0.2126 * r + 0.7152 * g + 0.0722 * b
}

/// WCAG contrast ratio, symmetric, in `[1, 21]`.
pub fn contrast_ratio(fg: Color, bg: Color) -> f64 {
    let (a, b) = (relative_luminance(fg), relative_luminance(bg));
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    (hi + 0.05) / (lo + 0.05)
}

/// Composites a node's own fills (bottom to top) over `backdrop`.
pub fn composite_fills(fills: &[Color], backdrop: Color) -> Color {
    fills.iter().fold(backdrop, |acc, f| f.over(acc))
}

fn background_from(ancestors: &[&DesignNode]) -> Color {
    ancestors
        .iter()
        .fold(Color::WHITE, |acc, n| composite_fills(&n.fills, acc))
}

/// Color behind `node`: the nearest filled ancestor, with translucent fills
/// composited over the ancestors beneath them and ultimately over white.
pub fn effective_background(doc: &DesignDocument, node: &DesignNode) -> Color {
    crate::model::ancestors(doc, &node.id)
        .map(|a| background_from(&a))
        .unwrap_or(Color::WHITE)
}

/// Foreground/background pair a text node is measured with.
pub fn text_colors(entry: &WalkEntry<'_>) -> Option<(Color, Color)> {
    let node = entry.node;
    if node.kind != NodeKind::Text || node.fills.is_empty() {
        return None;
    }
    let bg = background_from(&entry.ancestors);
    Some((composite_fills(&node.fills, bg), bg))
}

pub fn is_large_text(font_size: f64, font_weight: u16) -> bool {
    font_size >= LARGE_TEXT_PX || (font_size >= LARGE_BOLD_TEXT_PX && font_weight >= 700)
}

fn contrast_finding(entry: &WalkEntry<'_>, config: &RuleConfig) -> Option<Finding> {
    let (fg, bg) = text_colors(entry)?;
    let style = entry.node.text.as_ref()?;
    let large = is_large_text(style.font_size, style.font_weight);
    let threshold = config.contrast_threshold(large);
    let ratio = contrast_ratio(fg, bg);
    if ratio >= threshold {
        return None;
    }
    let mut f = Finding::new(
        entry.node,
        RuleId::ContrastText,
        format!(
            "Text contrast {ratio:.2}:1 ({fg} on {bg}) is below the {threshold}:1 minimum for {} text",
            if large { "large" } else { "normal" }
        ),
    )
    .measure("ratio", ratio)
    .measure("fontSize", style.font_size)
    .threshold(threshold);
    if ratio < threshold - CRITICAL_CONTRAST_GAP {
        f.severity = Severity::Critical;
    }
    Some(f)
}

pub fn check_contrast(
    doc: &DesignDocument,
    _context: &DesignContext,
    config: &RuleConfig,
) -> Vec<Finding> {
    walk(doc)
        .iter()
        .filter_map(|e| contrast_finding(e, config))
        .collect()
}

fn is_interactive(node: &DesignNode, config: &RuleConfig) -> bool {
    let container = matches!(
        node.kind,
        NodeKind::Frame | NodeKind::Rectangle | NodeKind::Component
    );
    (container && node.has_text_descendant()) || config.matches_cta(&node.name)
}

pub fn check_touch_targets(doc: &DesignDocument, config: &RuleConfig) -> Vec<Finding> {
    walk(doc)
        .iter()
        .map(|e| e.node)
        .filter(|n| is_interactive(n, config))
        .filter(|n| n.bounds.w < MIN_TOUCH_TARGET_PX || n.bounds.h < MIN_TOUCH_TARGET_PX)
        .map(|n| {
            Finding::new(
                n,
                RuleId::TouchTarget,
                format!(
                    "Touch target is {}x{}px, smaller than the {MIN_TOUCH_TARGET_PX}x{MIN_TOUCH_TARGET_PX}px minimum",
                    n.bounds.w, n.bounds.h
                ),
            )
            .measure("w", n.bounds.w)
            .measure("h", n.bounds.h)
            .threshold(MIN_TOUCH_TARGET_PX)
        })
        .collect()
}

pub fn check_font_size(doc: &DesignDocument) -> Vec<Finding> {
    walk(doc)
        .iter()
        .map(|e| e.node)
        .filter_map(|n| {
            let style = n.text.as_ref()?;
            let lowered = n.name.to_lowercase();
            if style.font_size >= MIN_FONT_SIZE_PX
                || lowered.contains("caption")
                || lowered.contains("label")
            {
                return None;
            }
            Some(
                Finding::new(
                    n,
                    RuleId::FontSize,
                    format!(
                        "Font size {}px is below the readable minimum of {MIN_FONT_SIZE_PX}px",
                        style.font_size
                    ),
                )
                .measure("fontSize", style.font_size)
                .threshold(MIN_FONT_SIZE_PX),
            )
        })
        .collect()
}

/// Node a brand-color finding is attached to: the first nested node whose
/// name reads as a call to action (preferring one with a fill to recolor),
/// falling back to the first frame.
pub fn brand_target<'a>(doc: &'a DesignDocument, config: &RuleConfig) -> &'a DesignNode {
    let entries = walk(doc);
    let cta = |e: &&WalkEntry<'a>| e.depth() > 0 && config.matches_cta(&e.node.name);
    entries
        .iter()
        .filter(cta)
        .find(|e| !e.node.fills.is_empty())
        .or_else(|| entries.iter().find(cta))
        .map(|e| e.node)
        .unwrap_or(&doc.frames[0])
}

fn check_brand_color(
    doc: &DesignDocument,
    context: &DesignContext,
    config: &RuleConfig,
) -> Vec<Finding> {
    let Some(theme) = context.theme_color else {
        return Vec::new();
    };
    let used = walk(doc)
        .iter()
        .flat_map(|e| e.node.fills.iter())
        .any(|f| f.approx_rgb_eq(&theme, BRAND_MATCH_TOLERANCE));
    if used {
        return Vec::new();
    }
    let target = brand_target(doc, config);
    vec![Finding::new(
        target,
        RuleId::BrandColorUnused,
        format!("The theme color {theme} does not appear on any layer"),
    )]
}

fn check_placeholder(doc: &DesignDocument) -> Vec<Finding> {
    walk(doc)
        .iter()
        .map(|e| e.node)
        .filter(|n| {
            n.text.as_ref().is_some_and(|t| {
                let lowered = t.characters.to_lowercase();
                lowered.contains("lorem") || lowered.contains("todo")
            })
        })
        .map(|n| {
            Finding::new(
                n,
                RuleId::PlaceholderText,
                "Placeholder copy left in the design".to_string(),
            )
        })
        .collect()
}

fn check_cta_copy(doc: &DesignDocument, config: &RuleConfig) -> Vec<Finding> {
    walk(doc)
        .iter()
        .map(|e| e.node)
        .filter_map(|n| {
            let t = n.text.as_ref()?;
            let len = t.characters.chars().count();
            (len > CTA_MAX_CHARS && config.matches_cta(&t.characters)).then(|| {
                Finding::new(
                    n,
                    RuleId::CtaCopyLength,
                    format!("Call-to-action copy is {len} characters, longer than {CTA_MAX_CHARS}"),
                )
                .measure("length", len as f64)
                .threshold(CTA_MAX_CHARS as f64)
            })
        })
        .collect()
}

fn check_fonts(doc: &DesignDocument, config: &RuleConfig) -> Vec<Finding> {
    walk(doc)
        .iter()
        .map(|e| e.node)
        .filter_map(|n| {
            let t = n.text.as_ref()?;
            (!config.font_allowed(&t.font_family)).then(|| {
                Finding::new(
                    n,
                    RuleId::NonstandardFont,
                    format!(
                        "Font family {:?} is outside the supported set",
                        t.font_family
                    ),
                )
            })
        })
        .collect()
}

fn check_node_budget(doc: &DesignDocument, config: &RuleConfig) -> Vec<Finding> {
    doc.frames
        .iter()
        .filter_map(|f| {
            let count = f.subtree_len();
            (count > config.node_budget).then(|| {
                Finding::new(
                    f,
                    RuleId::NodeBudget,
                    format!(
                        "Frame contains {count} layers, above the budget of {}",
                        config.node_budget
                    ),
                )
                .measure("nodes", count as f64)
                .threshold(config.node_budget as f64)
            })
        })
        .collect()
}

fn check_images(doc: &DesignDocument) -> Vec<Finding> {
    walk(doc)
        .iter()
        .map(|e| e.node)
        .filter(|n| {
            n.kind == NodeKind::Image && (n.bounds.w > MAX_IMAGE_PX || n.bounds.h > MAX_IMAGE_PX)
        })
        .map(|n| {
            Finding::new(
                n,
                RuleId::OversizedImage,
                format!(
                    "Image is {}x{}px, above {MAX_IMAGE_PX}px",
                    n.bounds.w, n.bounds.h
                ),
            )
            .measure("w", n.bounds.w)
            .measure("h", n.bounds.h)
            .threshold(MAX_IMAGE_PX)
        })
        .collect()
}

pub fn run_rule(
    rule: RuleId,
    doc: &DesignDocument,
    context: &DesignContext,
    config: &RuleConfig,
) -> Vec<Finding> {
    match rule {
        RuleId::ContrastText => check_contrast(doc, context, config),
        RuleId::TouchTarget => check_touch_targets(doc, config),
        RuleId::FontSize => check_font_size(doc),
        RuleId::BrandColorUnused => check_brand_color(doc, context, config),
        RuleId::PlaceholderText => check_placeholder(doc),
        RuleId::CtaCopyLength => check_cta_copy(doc, config),
        RuleId::NonstandardFont => check_fonts(doc, config),
        RuleId::NodeBudget => check_node_budget(doc, config),
        RuleId::OversizedImage => check_images(doc),
    }
}

/// Runs the selected rules in [`RuleId::ALL`] order; findings within a rule
/// follow document walk order.
pub fn run_rules(
    doc: &DesignDocument,
    context: &DesignContext,
    rules: &BTreeSet<RuleId>,
    config: &RuleConfig,
) -> Vec<Finding> {
    RuleId::ALL
        .into_iter()
        .filter(|r| rules.contains(r))
        .flat_map(|r| run_rule(r, doc, context, config))
        .collect()
}

pub fn all_rules() -> BTreeSet<RuleId> {
    RuleId::ALL.into_iter().collect()
}
