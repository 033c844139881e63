//! WebAssembly bindings behind `www/index.html`.
//!
//! Every export takes and returns JSON text; the page keeps the current
//! document and hands it back on each call.

mod render;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use critiq_core::analyzers::{contrast_ratio, is_large_text, RuleConfig, AAA_LARGE, AAA_NORMAL};
use critiq_core::harness::{run_critique, Report};
use critiq_core::model::{Bounds, TextStyle};
use critiq_core::perspectives::{CritiqueMode, Issue, RuleProvider};
use critiq_core::remediation::{
    apply_patch, suggest_contrast_fixes, suggest_fixes, Patch, PatchOp,
};
use critiq_core::{
    parse_document, serialize_document, Color, DesignContext, DesignDocument, DesignNode, NodeKind,
};

pub use render::render_svg;

const SAMPLE_DOCUMENT: &str = include_str!("../../core/fixtures/checkout.json");
const SAMPLE_CONTEXT: &str = include_str!("../../core/fixtures/checkout_context.json");

fn doc_from(text: &str) -> Result<DesignDocument, String> {
    parse_document(text).map_err(|e| e.to_string())
}

fn context_from(text: &str) -> Result<DesignContext, String> {
    if text.trim().is_empty() {
        return Ok(DesignContext::default());
    }
    DesignContext::from_json(text).map_err(|e| format!("invalid context: {e}"))
}

fn document_value(doc: &DesignDocument) -> Value {
    serde_json::from_str(&serialize_document(doc)).expect("document text is JSON")
}

/// Ratio, thresholds and fix suggestions for one text color on a background.
pub fn contrast_report(
    fg: &str,
    bg: &str,
    font_size: f64,
    font_weight: u16,
    theme: &str,
) -> Result<Value, String> {
    let fg = Color::from_hex(fg).map_err(|e| e.to_string())?;
    let bg = Color::from_hex(bg).map_err(|e| e.to_string())?;
    let bg = bg.over(Color::WHITE);
    let fg = fg.over(bg);
    let config = RuleConfig::default();
    let large = is_large_text(font_size, font_weight);
    let threshold = config.contrast_threshold(large);
    let ratio = contrast_ratio(fg, bg);

    let text = DesignNode {
        id: "sample".into(),
        name: "Sample".into(),
        kind: NodeKind::Text,
        bounds: Bounds::new(16.0, 16.0, 200.0, 32.0),
        fills: vec![fg],
        strokes: vec![],
        text: Some(TextStyle {
            characters: "Sample".into(),
            font_size,
            font_weight,
            font_family: "Inter".into(),
        }),
        children: vec![],
    };
    let doc = DesignDocument {
        name: "contrast".into(),
        frames: vec![DesignNode {
            id: "canvas".into(),
            name: "Canvas".into(),
            kind: NodeKind::Frame,
            bounds: Bounds::new(0.0, 0.0, 240.0, 64.0),
            fills: vec![bg],
            strokes: vec![],
            text: None,
            children: vec![text],
        }],
    };
    let context = DesignContext {
        theme_color: (!theme.trim().is_empty())
            .then(|| Color::from_hex(theme))
            .transpose()
            .map_err(|e| e.to_string())?,
        ..DesignContext::default()
    };
    let fixes = if ratio < threshold {
        suggest_contrast_fixes("contrast", "sample", &doc, &context, &config)
            .map_err(|e| e.to_string())?
    } else {
        Vec::new()
    };
    let aaa = if large { AAA_LARGE } else { AAA_NORMAL };
    Ok(json!({
        "ratio": ratio,
        "large": large,
        "threshold": threshold,
        "passesAA": ratio >= threshold,
        "passesAAA": ratio >= aaa,
        "fixes": fixes.iter().map(|o| json!({
            "color": match &o.patch.ops[0] {
                PatchOp::SetSolidFill { color, .. } => color.to_hex(),
                _ => String::new(),
            },
            "ratio": o.compliance.get("ratio"),
            "explanation": o.explanation,
        })).collect::<Vec<_>>(),
    }))
}

/// Deterministic critique of a document: report plus rendered SVG.
pub fn critique_report(document: &str, context: &str, mode: &str) -> Result<Value, String> {
    let doc = doc_from(document)?;
    let context = context_from(context)?;
    let mode: CritiqueMode = mode.parse()?;
    let provider = RuleProvider::default();
    let run = run_critique(&doc, &context, mode, &provider, false).map_err(|e| e.to_string())?;
    let report = serde_json::to_value(Report::new(&run, None)).expect("report serializes");
    Ok(json!({ "report": report, "svg": render_svg(&doc, None) }))
}

/// Fix options for one issue of a critique report.
pub fn fix_options(document: &str, context: &str, issue: &str) -> Result<Value, String> {
    let doc = doc_from(document)?;
    let context = context_from(context)?;
    let issue: Issue = serde_json::from_str(issue).map_err(|e| format!("invalid issue: {e}"))?;
    let options =
        suggest_fixes(&issue, &doc, &context, &RuleConfig::default()).map_err(|e| e.to_string())?;
    Ok(serde_json::to_value(options).expect("options serialize"))
}

/// Applies a patch; returns the new document, its inverse patch and a render
/// with the touched node outlined.
pub fn patch_document(document: &str, patch: &str) -> Result<Value, String> {
    let doc = doc_from(document)?;
    let patch = Patch::from_json(patch).map_err(|e| format!("invalid patch: {e}"))?;
    let (next, inverse) = apply_patch(&doc, &patch).map_err(|e| e.to_string())?;
    let focus = patch.ops.first().map(|op| op.node_id().to_string());
    Ok(json!({
        "document": document_value(&next),
        "inverse": inverse,
        "svg": render_svg(&next, focus.as_deref()),
    }))
}

fn js(result: Result<Value, String>) -> Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = sampleDocument)]
pub fn sample_document() -> String {
    SAMPLE_DOCUMENT.to_string()
}

#[wasm_bindgen(js_name = sampleContext)]
pub fn sample_context() -> String {
    SAMPLE_CONTEXT.to_string()
}

#[wasm_bindgen(js_name = checkContrast)]
pub fn check_contrast(
    fg: &str,
    bg: &str,
    font_size: f64,
    font_weight: u16,
    theme: &str,
) -> Result<String, JsError> {
    js(contrast_report(fg, bg, font_size, font_weight, theme))
}

#[wasm_bindgen]
pub fn critique(document: &str, context: &str, mode: &str) -> Result<String, JsError> {
    js(critique_report(document, context, mode))
}

#[wasm_bindgen(js_name = fixOptions)]
pub fn fix_options_js(document: &str, context: &str, issue: &str) -> Result<String, JsError> {
    js(fix_options(document, context, issue))
}

#[wasm_bindgen(js_name = applyPatch)]
pub fn apply_patch_js(document: &str, patch: &str) -> Result<String, JsError> {
    js(patch_document(document, patch))
}

#[wasm_bindgen]
pub fn render(document: &str, highlight: &str) -> Result<String, JsError> {
    let doc = doc_from(document).map_err(|e| JsError::new(&e))?;
    Ok(render_svg(
        &doc,
        (!highlight.is_empty()).then_some(highlight),
    ))
}
