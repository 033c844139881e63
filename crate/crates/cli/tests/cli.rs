use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use critiq_core::analyzers::RuleConfig;
use critiq_core::harness::{CoverageReport, Report};
use critiq_core::perspectives::{CritiqueMode, RuleProvider};
use critiq_core::{parse_document, serialize_document, DesignContext};
use critiq_service::{Session, Store};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn critiq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critiq"))
        .args(args)
        .env("CRITIQ_PROVIDER", "stub")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_exit_codes_follow_fail_on() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let ctx = fixture("checkout_context.json");

    let clean = critiq(&[
        "run",
        path(&fixture("checkout_clean.json")),
        "--context",
        path(&ctx),
        "--fail-on",
        "high",
        "--out",
        path(&out),
    ]);
    assert_eq!(
        clean.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&clean.stderr)
    );

    let seeded = critiq(&[
        "run",
        path(&fixture("checkout.json")),
        "--context",
        path(&ctx),
        "--fail-on",
        "high",
        "--out",
        path(&out),
    ]);
    assert_eq!(seeded.status.code(), Some(1));
    let report: Report = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.tool, "critiq");
    assert_eq!(report.mode, CritiqueMode::MultiPerspective);
    assert_eq!(report.issues.len(), 12);

    let no_threshold = critiq(&[
        "run",
        path(&fixture("checkout.json")),
        "--context",
        path(&ctx),
        "--out",
        path(&out),
    ]);
    assert_eq!(no_threshold.status.code(), Some(0));
}

#[test]
fn errors_exit_two() {
    let missing = critiq(&["run", "does-not-exist.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("does-not-exist.json"));
    assert_eq!(critiq(&["run"]).status.code(), Some(2));
    assert_eq!(critiq(&["frobnicate"]).status.code(), Some(2));
    let bad_mode = critiq(&["run", path(&fixture("checkout.json")), "--mode", "solo"]);
    assert_eq!(bad_mode.status.code(), Some(2));
}

#[test]
fn run_then_score_matches_inline_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("r.json");
    let run = critiq(&[
        "run",
        path(&fixture("course.json")),
        "--context",
        path(&fixture("course_context.json")),
        "--mode",
        "unified",
        "--score",
        "--out",
        path(&report_path),
    ]);
    assert_eq!(run.status.code(), Some(0));
    let report: Report =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let inline = report.coverage.expect("--score attaches coverage");

    let scored = critiq(&[
        "score",
        "--report",
        path(&report_path),
        "--corpus",
        path(&fixture("course.json")),
    ]);
    assert_eq!(scored.status.code(), Some(0));
    let coverage: CoverageReport = serde_json::from_slice(&scored.stdout).unwrap();
    assert_eq!(coverage, inline);
    assert_eq!(coverage.mode, CritiqueMode::Unified);
    assert_eq!((coverage.matched, coverage.total), (12, 16));
    assert_eq!(coverage.rule_detectable.ratio(), Some(1.0));
}

#[test]
fn compare_prints_a_zero_delta() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp.json");
    let cmp = critiq(&[
        "compare",
        "--corpus",
        path(&fixture("checkout.json")),
        "--context",
        path(&fixture("checkout_context.json")),
        "--out",
        path(&out),
    ]);
    assert_eq!(cmp.status.code(), Some(0));
    let table = String::from_utf8(cmp.stdout).unwrap();
    assert!(table.starts_with("scope"));
    assert!(
        table
            .lines()
            .skip(1)
            .all(|l| l.trim_end().ends_with("0.000")),
        "{table}"
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["multi"]["coverage"], json["unified"]["coverage"]);
    assert_eq!(json["multi"]["perRole"], json["unified"]["perRole"]);
}

#[test]
fn apply_then_inverse_restores_the_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let original = serialize_document(
        &parse_document(&std::fs::read_to_string(fixture("checkout.json")).unwrap()).unwrap(),
    );
    let doc = dir.path().join("doc.json");
    std::fs::write(&doc, &original).unwrap();
    let patch = dir.path().join("fix.json");
    std::fs::write(
        &patch,
        r##"{"patchId":"fix","label":"Bigger stepper","ops":[
            {"op":"setBounds","nodeId":"qty-minus","bounds":{"x":0,"y":0,"w":44,"h":44}},
            {"op":"setSolidFill","nodeId":"shipping-note","fillIndex":0,"color":"#595959"}]}"##,
    )
    .unwrap();
    let patched = dir.path().join("patched.json");
    let inverse = dir.path().join("inverse.json");
    let a = critiq(&[
        "apply",
        path(&doc),
        path(&patch),
        "--out",
        path(&patched),
        "--inverse",
        path(&inverse),
    ]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert_ne!(std::fs::read_to_string(&patched).unwrap(), original);

    let restored = dir.path().join("restored.json");
    let b = critiq(&[
        "apply",
        path(&patched),
        path(&inverse),
        "--out",
        path(&restored),
    ]);
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&restored).unwrap(), original);

    std::fs::write(&patch, r#"{"patchId":"bad","label":"x","ops":[{"op":"setText","nodeId":"nope","characters":"x"}]}"#).unwrap();
    let bad = critiq(&["apply", path(&doc), path(&patch), "--out", path(&patched)]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn undo_pops_a_stored_session() {
    let dir = tempfile::tempdir().unwrap();
    let doc = parse_document(&std::fs::read_to_string(fixture("checkout.json")).unwrap()).unwrap();
    let ctx = DesignContext::from_json(
        &std::fs::read_to_string(fixture("checkout_context.json")).unwrap(),
    )
    .unwrap();
    let provider = RuleProvider::new(RuleConfig::default());
    let mut session = Session::create(doc, ctx, CritiqueMode::MultiPerspective, &provider).unwrap();
    let before = serialize_document(&session.document);
    session.apply("ux-qty-minus-TOUCH_TARGET-fix1").unwrap();
    let id = session.session_id.clone();
    Store::open(dir.path()).unwrap().insert(session).unwrap();

    let out = critiq(&["undo", "--session", &id, "--data-dir", path(dir.path())]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8(out.stdout).unwrap(), before);
    let reloaded = Store::open(dir.path()).unwrap();
    assert!(reloaded
        .get(&id)
        .unwrap()
        .read()
        .unwrap()
        .history
        .is_empty());

    let again = critiq(&["undo", "--session", &id, "--data-dir", path(dir.path())]);
    assert_eq!(again.status.code(), Some(2));
    let unknown = critiq(&["undo", "--session", "nope", "--data-dir", path(dir.path())]);
    assert_eq!(unknown.status.code(), Some(2));
}
