//! Reversible document patches and fix generators.
//!
//! Patches are applied atomically to a copy of the document; the returned
//! inverse patch records the values that were overwritten, so applying it
//! restores the original model exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzers::{
    contrast_ratio, encode, is_large_text, relative_luminance, text_colors, to_linear, Finding,
    RuleConfig, RuleId, MIN_FONT_SIZE_PX, MIN_TOUCH_TARGET_PX,
};
use crate::color::Color;
use crate::model::{
    find_node, find_node_mut, walk, Bounds, DesignContext, DesignDocument, NodeKind,
};
use crate::perspectives::Issue;

/// Extra contrast demanded by the fix search so 8-bit rounding cannot undo it.
pub const CONTRAST_MARGIN: f64 = 0.05;
pub const SEARCH_ITERATIONS: usize = 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum PatchOp {
    #[serde(rename_all = "camelCase")]
    SetSolidFill {
        node_id: String,
        fill_index: usize,
        color: Color,
    },
    #[serde(rename_all = "camelCase")]
    SetFontSize { node_id: String, font_size: f64 },
    #[serde(rename_all = "camelCase")]
    SetText { node_id: String, characters: String },
    #[serde(rename_all = "camelCase")]
    SetBounds { node_id: String, bounds: Bounds },
}

impl PatchOp {
    pub fn node_id(&self) -> &str {
        match self {
            PatchOp::SetSolidFill { node_id, .. }
            | PatchOp::SetFontSize { node_id, .. }
            | PatchOp::SetText { node_id, .. }
            | PatchOp::SetBounds { node_id, .. } => node_id,
        }
    }

    /// Name of the node property this op writes.
    pub fn property(&self) -> &'static str {
        match self {
            PatchOp::SetSolidFill { .. } => "fill",
            PatchOp::SetFontSize { .. } => "fontSize",
            PatchOp::SetText { .. } => "text",
            PatchOp::SetBounds { .. } => "bounds",
        }
    }

    /// Human-readable rendering of the value written.
    pub fn value_label(&self) -> String {
        match self {
            PatchOp::SetSolidFill { color, .. } => color.to_hex(),
            PatchOp::SetFontSize { font_size, .. } => format!("{font_size}px"),
            PatchOp::SetText { characters, .. } => format!("{characters:?}"),
            PatchOp::SetBounds { bounds, .. } => {
                format!("{}x{} at ({}, {})", bounds.w, bounds.h, bounds.x, bounds.y)
            }
        }
    }

    /// Applies the op in place and returns the op that undoes it.
    fn apply(&self, doc: &mut DesignDocument) -> Result<PatchOp, String> {
        let id = self.node_id();
        let node = find_node_mut(doc, id).ok_or_else(|| format!("node {id:?} does not exist"))?;
        match self {
            PatchOp::SetSolidFill {
                fill_index, color, ..
            } => {
                color.validate().map_err(|e| e.to_string())?;
                let count = node.fills.len();
                let slot = node.fills.get_mut(*fill_index).ok_or_else(|| {
                    format!(
                        "fill index {fill_index} out of range for node {id:?} with {count} fills"
                    )
                })?;
                let old = std::mem::replace(slot, *color);
                Ok(PatchOp::SetSolidFill {
                    node_id: id.to_string(),
                    fill_index: *fill_index,
                    color: old,
                })
            }
            PatchOp::SetFontSize { font_size, .. } => {
                if !(font_size.is_finite() && *font_size > 0.0) {
                    return Err(format!("font size must be positive, got {font_size}"));
                }
                let style = node.text.as_mut().ok_or_else(|| {
                    format!("node {id:?} is {} but setFontSize needs TEXT", node.kind)
                })?;
                let old = std::mem::replace(&mut style.font_size, *font_size);
                Ok(PatchOp::SetFontSize {
                    node_id: id.to_string(),
                    font_size: old,
                })
            }
            PatchOp::SetText { characters, .. } => {
                let style = node.text.as_mut().ok_or_else(|| {
                    format!("node {id:?} is {} but setText needs TEXT", node.kind)
                })?;
                let old = std::mem::replace(&mut style.characters, characters.clone());
                Ok(PatchOp::SetText {
                    node_id: id.to_string(),
                    characters: old,
                })
            }
            PatchOp::SetBounds { bounds, .. } => {
                let finite = [bounds.x, bounds.y, bounds.w, bounds.h]
                    .iter()
                    .all(|v| v.is_finite());
                if !finite || bounds.w < 0.0 || bounds.h < 0.0 {
                    return Err("bounds must be finite with nonnegative size".to_string());
                }
                let old = std::mem::replace(&mut node.bounds, *bounds);
                Ok(PatchOp::SetBounds {
                    node_id: id.to_string(),
                    bounds: old,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Patch {
    pub patch_id: String,
    pub label: String,
    pub ops: Vec<PatchOp>,
    /// Issue this patch remediates, when it came from one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
}

impl Patch {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RemediationError {
    #[error("invalid op #{index} in patch {patch_id:?}: {message}")]
    InvalidOp {
        patch_id: String,
        index: usize,
        message: String,
    },
    #[error("patch {0:?} has no ops")]
    EmptyPatch(String),
    #[error("nothing to undo")]
    EmptyHistory,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no compliant color exists for node {0:?}")]
    Unfixable(String),
}

/// Applies every op in order to a copy of `doc`. Either all ops apply or the
/// call fails and nothing changes.
pub fn apply_patch(
    doc: &DesignDocument,
    patch: &Patch,
) -> Result<(DesignDocument, Patch), RemediationError> {
    if patch.ops.is_empty() {
        return Err(RemediationError::EmptyPatch(patch.patch_id.clone()));
    }
    let mut next = doc.clone();
    let mut inverse_ops = Vec::with_capacity(patch.ops.len());
    for (index, op) in patch.ops.iter().enumerate() {
        let inverse = op
            .apply(&mut next)
            .map_err(|message| RemediationError::InvalidOp {
                patch_id: patch.patch_id.clone(),
                index,
                message,
            })?;
        inverse_ops.push(inverse);
    }
    inverse_ops.reverse();
    let inverse = Patch {
        patch_id: format!("{}~inverse", patch.patch_id),
        label: format!("Undo: {}", patch.label),
        ops: inverse_ops,
        origin: patch.origin.clone(),
    };
    Ok((next, inverse))
}

/// The document `apply_patch` would produce, without recording history.
pub fn preview_patch(
    doc: &DesignDocument,
    patch: &Patch,
) -> Result<DesignDocument, RemediationError> {
    apply_patch(doc, patch).map(|(next, _)| next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub patch: Patch,
    pub inverse: Patch,
}

/// Linear undo stack of applied patches.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    entries: Vec<HistoryEntry>,
}

impl History {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    /// Applies `patch` to `doc` and records it.
    pub fn apply(
        &mut self,
        doc: &DesignDocument,
        patch: &Patch,
    ) -> Result<DesignDocument, RemediationError> {
        let (next, inverse) = apply_patch(doc, patch)?;
        self.entries.push(HistoryEntry {
            patch: patch.clone(),
            inverse,
        });
        Ok(next)
    }

    /// Reverts the most recent patch.
    pub fn undo(&mut self, doc: &DesignDocument) -> Result<DesignDocument, RemediationError> {
        let entry = self.entries.last().ok_or(RemediationError::EmptyHistory)?;
        let (prev, _) = apply_patch(doc, &entry.inverse)?;
        self.entries.pop();
        Ok(prev)
    }
}

/// One way to fix an issue, with measurements taken on the patched document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RemediationOption {
    pub patch: Patch,
    pub explanation: String,
    pub compliance: BTreeMap<String, f64>,
    /// Blend factor toward the target pole, for color fixes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blend: Option<f64>,
}

/// Blends `start` toward `pole` in linear light by `t`, re-encoded to sRGB.
/// Blending toward black scales every linear channel by `1 - t`, so hue
/// ratios survive until 8-bit rounding.
pub fn blend_toward(start: Color, pole: Color, t: f64) -> Color {
    let s = to_linear(start);
    let p = to_linear(pole);
    let mix = |i: usize| encode(s[i] * (1.0 - t) + p[i] * t);
    Color::rgb(mix(0), mix(1), mix(2))
}

/// Smallest blend factor whose 8-bit-rounded color reaches `target` against
/// `bg`, or `None` when even the pole falls short.
pub fn search_blend(start: Color, pole: Color, bg: Color, target: f64) -> Option<f64> {
    let passes = |t: f64| contrast_ratio(blend_toward(start, pole, t).quantized(), bg) >= target;
    if passes(0.0) {
        return Some(0.0);
    }
    if !passes(1.0) {
        return None;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..SEARCH_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Pole that moves `color` away from `bg`, or the other pole when the first
/// cannot reach `threshold`.
fn choose_pole(color: Color, bg: Color, threshold: f64) -> Option<Color> {
    let preferred = if relative_luminance(color) <= relative_luminance(bg) {
        [Color::BLACK, Color::WHITE]
    } else {
        [Color::WHITE, Color::BLACK]
    };
    preferred
        .into_iter()
        .find(|p| contrast_ratio(*p, bg) >= threshold)
}

struct ContrastTarget {
    node_id: String,
    fill_index: usize,
    fg: Color,
    bg: Color,
    threshold: f64,
}

fn contrast_target(
    doc: &DesignDocument,
    node_id: &str,
    config: &RuleConfig,
) -> Result<ContrastTarget, RemediationError> {
    let entries = walk(doc);
    let entry = entries
        .iter()
        .find(|e| e.node.id == node_id)
        .ok_or_else(|| {
            RemediationError::Precondition(format!("node {node_id:?} does not exist"))
        })?;
    let (fg, bg) = text_colors(entry).ok_or_else(|| {
        RemediationError::Precondition(format!("node {node_id:?} is not a filled TEXT node"))
    })?;
    let style = entry.node.text.as_ref().expect("text_colors implies TEXT");
    let threshold = config.contrast_threshold(is_large_text(style.font_size, style.font_weight));
    Ok(ContrastTarget {
        node_id: node_id.to_string(),
        fill_index: entry.node.fills.len() - 1,
        fg,
        bg,
        threshold,
    })
}

/// Contrast of a text node as the analyzer sees it, with its threshold.
pub fn measure_contrast(
    doc: &DesignDocument,
    node_id: &str,
    config: &RuleConfig,
) -> Option<(f64, f64)> {
    let t = contrast_target(doc, node_id, config).ok()?;
    Some((contrast_ratio(t.fg, t.bg), t.threshold))
}

/// Up to three WCAG-compliant recolorings of a failing text node: the
/// smallest blend toward the contrasting pole, the pole itself, and (with a
/// theme color in context) the theme color blended until it complies.
pub fn suggest_contrast_fixes(
    issue_id: &str,
    node_id: &str,
    doc: &DesignDocument,
    context: &DesignContext,
    config: &RuleConfig,
) -> Result<Vec<RemediationOption>, RemediationError> {
    let target = contrast_target(doc, node_id, config)?;
    let current = contrast_ratio(target.fg, target.bg);
    if current >= target.threshold {
        return Err(RemediationError::Precondition(format!(
            "node {node_id:?} already meets {}:1 ({current:.2}:1)",
            target.threshold
        )));
    }
    let pole = choose_pole(target.fg, target.bg, target.threshold)
        .ok_or_else(|| RemediationError::Unfixable(node_id.to_string()))?;
    let pole_name = if pole == Color::BLACK {
        "black"
    } else {
        "white"
    };

    let mut candidates: Vec<(Color, String, Option<f64>)> = Vec::new();
    match search_blend(
        target.fg,
        pole,
        target.bg,
        target.threshold + CONTRAST_MARGIN,
    ) {
        Some(t) => candidates.push((
            blend_toward(target.fg, pole, t).quantized(),
            format!(
                "Smallest shift of {} toward {pole_name} that meets the threshold",
                target.fg
            ),
            Some(t),
        )),
        None => log::debug!("no margin-compliant blend for {node_id}; offering the pole only"),
    }
    candidates.push((
        pole,
        format!("Maximum contrast: pure {pole_name}"),
        Some(1.0),
    ));
    if let Some(theme) = context.theme_color.map(|c| c.with_alpha(1.0)) {
        if let Some(theme_pole) = choose_pole(theme, target.bg, target.threshold) {
            if let Some(t) = search_blend(
                theme,
                theme_pole,
                target.bg,
                target.threshold + CONTRAST_MARGIN,
            ) {
                candidates.push((
                    blend_toward(theme, theme_pole, t).quantized(),
                    format!("Theme color {theme} adjusted until it meets the threshold"),
                    Some(t),
                ));
            }
        }
    }

    let mut options: Vec<RemediationOption> = Vec::new();
    for (color, explanation, blend) in candidates {
        if options.iter().any(|o| matches!(&o.patch.ops[0], PatchOp::SetSolidFill { color: c, .. } if c.to_hex() == color.to_hex())) {
            continue;
        }
        let k = options.len() + 1;
        let patch = Patch {
            patch_id: format!("{issue_id}-fix{k}"),
            label: format!("Set text color to {color}"),
            ops: vec![PatchOp::SetSolidFill {
                node_id: target.node_id.clone(),
                fill_index: target.fill_index,
                color,
            }],
            origin: Some(issue_id.to_string()),
        };
        let preview = preview_patch(doc, &patch)?;
        let (ratio, threshold) =
            measure_contrast(&preview, node_id, config).expect("patched node is still text");
        let compliance = BTreeMap::from([
            ("ratio".to_string(), ratio),
            ("threshold".to_string(), threshold),
        ]);
        options.push(RemediationOption {
            patch,
            explanation: format!("{explanation} ({ratio:.2}:1)"),
            compliance,
            blend,
        });
    }
    Ok(options)
}

/// Grows the node to the minimum touch target, keeping its center fixed.
pub fn suggest_size_fixes(
    issue_id: &str,
    node_id: &str,
    doc: &DesignDocument,
) -> Result<Vec<RemediationOption>, RemediationError> {
    let node = find_node(doc, node_id).ok_or_else(|| {
        RemediationError::Precondition(format!("node {node_id:?} does not exist"))
    })?;
    let b = node.bounds;
    if b.w >= MIN_TOUCH_TARGET_PX && b.h >= MIN_TOUCH_TARGET_PX {
        return Err(RemediationError::Precondition(format!(
            "node {node_id:?} already meets the touch target"
        )));
    }
    let (w, h) = (b.w.max(MIN_TOUCH_TARGET_PX), b.h.max(MIN_TOUCH_TARGET_PX));
    let bounds = Bounds::new(b.x - (w - b.w) / 2.0, b.y - (h - b.h) / 2.0, w, h);
    let patch = Patch {
        patch_id: format!("{issue_id}-fix1"),
        label: format!("Resize to {w}x{h}px"),
        ops: vec![PatchOp::SetBounds {
            node_id: node_id.to_string(),
            bounds,
        }],
        origin: Some(issue_id.to_string()),
    };
    let preview = preview_patch(doc, &patch)?;
    let nb = find_node(&preview, node_id)
        .expect("node survives patch")
        .bounds;
    Ok(vec![RemediationOption {
        patch,
        explanation: format!("Enlarge the hit area to at least {MIN_TOUCH_TARGET_PX}x{MIN_TOUCH_TARGET_PX}px around the same center"),
        compliance: BTreeMap::from([("w".to_string(), nb.w), ("h".to_string(), nb.h)]),
        blend: None,
    }])
}

/// Raises the font size to the readable minimum.
pub fn suggest_font_fixes(
    issue_id: &str,
    node_id: &str,
    doc: &DesignDocument,
) -> Result<Vec<RemediationOption>, RemediationError> {
    let node = find_node(doc, node_id).ok_or_else(|| {
        RemediationError::Precondition(format!("node {node_id:?} does not exist"))
    })?;
    if node.kind != NodeKind::Text {
        return Err(RemediationError::Precondition(format!(
            "node {node_id:?} is {}, font fixes need TEXT",
            node.kind
        )));
    }
    let patch = Patch {
        patch_id: format!("{issue_id}-fix1"),
        label: format!("Set font size to {MIN_FONT_SIZE_PX}px"),
        ops: vec![PatchOp::SetFontSize {
            node_id: node_id.to_string(),
            font_size: MIN_FONT_SIZE_PX,
        }],
        origin: Some(issue_id.to_string()),
    };
    let preview = preview_patch(doc, &patch)?;
    let size = find_node(&preview, node_id)
        .and_then(|n| n.text.as_ref())
        .map(|t| t.font_size)
        .expect("node survives patch");
    Ok(vec![RemediationOption {
        patch,
        explanation: format!("Raise the text to the {MIN_FONT_SIZE_PX}px readable minimum"),
        compliance: BTreeMap::from([("fontSize".to_string(), size)]),
        blend: None,
    }])
}

/// Computed fixes for a rule finding; empty when the rule has no generator
/// or the node cannot be fixed.
pub fn suggest_fixes_for_finding(
    issue_id: &str,
    finding: &Finding,
    doc: &DesignDocument,
    context: &DesignContext,
    config: &RuleConfig,
) -> Vec<RemediationOption> {
    let id = finding.node_id.as_str();
    let result = match finding.rule {
        RuleId::ContrastText => suggest_contrast_fixes(issue_id, id, doc, context, config),
        RuleId::TouchTarget => suggest_size_fixes(issue_id, id, doc),
        RuleId::FontSize => suggest_font_fixes(issue_id, id, doc),
        _ => Ok(Vec::new()),
    };
    result.unwrap_or_else(|e| {
        log::debug!("no fix for {issue_id}: {e}");
        Vec::new()
    })
}

/// Fix options for any issue. Rules without a computable fix fall back to
/// the issue's own proposed patch, if it has one.
pub fn suggest_fixes(
    issue: &Issue,
    doc: &DesignDocument,
    context: &DesignContext,
    config: &RuleConfig,
) -> Result<Vec<RemediationOption>, RemediationError> {
    match issue.rule() {
        Some(RuleId::ContrastText) => {
            suggest_contrast_fixes(&issue.issue_id, &issue.node_id, doc, context, config)
        }
        Some(RuleId::TouchTarget) => suggest_size_fixes(&issue.issue_id, &issue.node_id, doc),
        Some(RuleId::FontSize) => suggest_font_fixes(&issue.issue_id, &issue.node_id, doc),
        _ => Ok(issue
            .proposed_patch
            .iter()
            .map(|p| RemediationOption {
                patch: p.clone(),
                explanation: issue.remediation.specific_suggestion.clone(),
                compliance: BTreeMap::new(),
                blend: None,
            })
            .collect()),
    }
}
