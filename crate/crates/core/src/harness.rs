//! Seeded-issue corpora, detector coverage scoring and the batch report.
//!
//! Coverage here measures what the detectors find on planted defects. It is
//! not a measure of what people fix after reading a critique.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzers::RuleId;
use crate::coordinator::{compose_agenda, CritiqueAgenda, DanglingNodeError};
use crate::model::{find_node, parse_document, DesignContext, DesignDocument, ParseError};
use crate::perspectives::{
    run_panel, CritiqueMode, CritiqueProvider, Issue, PanelError, RoleFeedback,
};
use crate::role::Role;

pub const TOOL_NAME: &str = "critiq";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const COVERAGE_NOTE: &str =
    "Detector coverage: share of planted issues the critique flagged. It does not measure issues resolved by people.";

/// A planted defect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Seed {
    pub seed_id: String,
    pub node_id: String,
    /// A rule id, or a free tag matched against issue types and descriptions.
    pub kind: String,
    pub description: String,
    /// Perspective the seed belongs to; defaults to the rule owner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
}

impl Seed {
    pub fn rule(&self) -> Option<RuleId> {
        self.kind.parse().ok()
    }

    pub fn lens(&self) -> Option<Role> {
        self.role.or_else(|| self.rule().map(|r| r.owner()))
    }

    /// Whether `issue` counts as finding this seed.
    pub fn matches(&self, issue: &Issue) -> bool {
        if issue.node_id != self.node_id {
            return false;
        }
        match self.rule() {
            Some(rule) => issue.rule() == Some(rule),
            None => {
                let tag = self.kind.to_lowercase();
                issue.issue_type.to_lowercase().contains(&tag)
                    || issue.description.to_lowercase().contains(&tag)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeededCorpus {
    pub name: String,
    pub document: DesignDocument,
    pub seeds: Vec<Seed>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Document { path: PathBuf, source: ParseError },
    #[error("{path}: invalid seeds file: {source}")]
    Seeds {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("seed {seed_id:?} references missing node {node_id:?}")]
    DanglingSeed { seed_id: String, node_id: String },
    #[error("duplicate seed id {0:?}")]
    DuplicateSeed(String),
}

impl SeededCorpus {
    pub fn new(
        name: impl Into<String>,
        document: DesignDocument,
        seeds: Vec<Seed>,
    ) -> Result<Self, CorpusError> {
        let mut ids = std::collections::HashSet::new();
        for s in &seeds {
            if !ids.insert(s.seed_id.as_str()) {
                return Err(CorpusError::DuplicateSeed(s.seed_id.clone()));
            }
            if find_node(&document, &s.node_id).is_none() {
                return Err(CorpusError::DanglingSeed {
                    seed_id: s.seed_id.clone(),
                    node_id: s.node_id.clone(),
                });
            }
        }
        Ok(SeededCorpus {
            name: name.into(),
            document,
            seeds,
        })
    }

    /// Loads a document and its `.seeds` sidecar. A missing sidecar means no seeds.
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| CorpusError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        let document = parse_document(&read(path)?).map_err(|source| CorpusError::Document {
            path: path.to_path_buf(),
            source,
        })?;
        let seeds_path = seeds_path(path);
        let seeds = if seeds_path.exists() {
            serde_json::from_str(&read(&seeds_path)?).map_err(|source| CorpusError::Seeds {
                path: seeds_path.clone(),
                source,
            })?
        } else {
            Vec::new()
        };
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        SeededCorpus::new(name, document, seeds)
    }

    pub fn rule_detectable(&self) -> impl Iterator<Item = &Seed> {
        self.seeds.iter().filter(|s| s.rule().is_some())
    }
}

/// `checkout.json` → `checkout.seeds`.
pub fn seeds_path(document_path: &Path) -> PathBuf {
    document_path.with_extension("seeds")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub matched: usize,
    pub total: usize,
}

impl Tally {
    pub fn ratio(&self) -> Option<f64> {
        (self.total > 0).then(|| self.matched as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverageReport {
    pub note: String,
    pub mode: CritiqueMode,
    pub matched: usize,
    pub total: usize,
    /// `matched / total`; null for a corpus without seeds.
    pub coverage: Option<f64>,
    /// Seeds a rule can detect.
    pub rule_detectable: Tally,
    /// Keyed by the perspective each seed belongs to.
    pub per_role: BTreeMap<Role, Tally>,
    pub unmatched_seed_ids: Vec<String>,
    pub extra_issue_ids: Vec<String>,
}

/// Greedy matching: seeds in corpus order each take the first unused
/// detected issue that matches them.
pub fn score(detected: &[Issue], corpus: &SeededCorpus, mode: CritiqueMode) -> CoverageReport {
    let mut used = vec![false; detected.len()];
    let mut per_role: BTreeMap<Role, Tally> = BTreeMap::new();
    let mut rule_detectable = Tally::default();
    let mut unmatched = Vec::new();
    let mut matched = 0;
    for seed in &corpus.seeds {
        let hit = detected
            .iter()
            .enumerate()
            .find(|(i, issue)| !used[*i] && seed.matches(issue))
            .map(|(i, _)| i);
        if let Some(i) = hit {
            used[i] = true;
            matched += 1;
        } else {
            unmatched.push(seed.seed_id.clone());
        }
        if let Some(role) = seed.lens() {
            let t = per_role.entry(role).or_default();
            t.total += 1;
            t.matched += hit.is_some() as usize;
        }
        if seed.rule().is_some() {
            rule_detectable.total += 1;
            rule_detectable.matched += hit.is_some() as usize;
        }
    }
    let total = corpus.seeds.len();
    CoverageReport {
        note: COVERAGE_NOTE.to_string(),
        mode,
        matched,
        total,
        coverage: Tally { matched, total }.ratio(),
        rule_detectable,
        per_role,
        unmatched_seed_ids: unmatched,
        extra_issue_ids: detected
            .iter()
            .zip(&used)
            .filter(|(_, u)| !**u)
            .map(|(i, _)| i.issue_id.clone())
            .collect(),
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Dangling(#[from] DanglingNodeError),
}

/// Panel output and the agenda built from it.
#[derive(Debug, Clone, PartialEq)]
pub struct CritiqueRun {
    pub mode: CritiqueMode,
    pub feedbacks: Vec<RoleFeedback>,
    pub agenda: CritiqueAgenda,
}

impl CritiqueRun {
    pub fn issues(&self) -> Vec<Issue> {
        self.feedbacks
            .iter()
            .flat_map(|f| f.issues.iter().cloned())
            .collect()
    }
}

/// Panel then coordinator. With `allow_partial`, failed roles are recorded
/// in the agenda's `degraded_roles` instead of failing the run.
pub fn run_critique(
    doc: &DesignDocument,
    context: &DesignContext,
    mode: CritiqueMode,
    provider: &dyn CritiqueProvider,
    allow_partial: bool,
) -> Result<CritiqueRun, RunError> {
    let (feedbacks, degraded) = match run_panel(doc, context, mode, provider) {
        Ok(f) => (f, Vec::new()),
        Err(e) if allow_partial && !e.succeeded.is_empty() => {
            log::warn!("{e}");
            let failed = e.failed.iter().map(|(r, _)| *r).collect();
            (e.succeeded, failed)
        }
        Err(e) => return Err(e.into()),
    };
    let mut agenda = compose_agenda(&feedbacks, doc, context)?;
    agenda.degraded_roles = degraded;
    Ok(CritiqueRun {
        mode,
        feedbacks,
        agenda,
    })
}

/// Batch output of `critiq run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub mode: CritiqueMode,
    pub issues: Vec<Issue>,
    pub agenda: CritiqueAgenda,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageReport>,
}

impl Report {
    pub fn new(run: &CritiqueRun, coverage: Option<CoverageReport>) -> Self {
        Report {
            tool: TOOL_NAME.to_string(),
            version: VERSION.to_string(),
            mode: run.mode,
            issues: run.issues(),
            agenda: run.agenda.clone(),
            coverage,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeltaRow {
    pub scope: String,
    pub multi: Option<f64>,
    pub unified: Option<f64>,
    /// `multi - unified`, when both are defined.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModeComparison {
    pub tool: String,
    pub version: String,
    pub corpus: String,
    pub multi: CoverageReport,
    pub unified: CoverageReport,
    pub delta: Vec<DeltaRow>,
}

fn row(scope: &str, multi: Option<f64>, unified: Option<f64>) -> DeltaRow {
    DeltaRow {
        scope: scope.to_string(),
        multi,
        unified,
        delta: multi.zip(unified).map(|(m, u)| m - u),
    }
}

pub fn delta_table(multi: &CoverageReport, unified: &CoverageReport) -> Vec<DeltaRow> {
    let mut rows = vec![
        row("overall", multi.coverage, unified.coverage),
        row(
            "rule_detectable",
            multi.rule_detectable.ratio(),
            unified.rule_detectable.ratio(),
        ),
    ];
    for role in Role::PANEL {
        let get = |r: &CoverageReport| r.per_role.get(&role).and_then(Tally::ratio);
        if multi.per_role.contains_key(&role) || unified.per_role.contains_key(&role) {
            rows.push(row(role.as_str(), get(multi), get(unified)));
        }
    }
    rows
}

/// Runs both modes on the same inputs and scores each.
pub fn compare_modes(
    corpus: &SeededCorpus,
    context: &DesignContext,
    provider: &dyn CritiqueProvider,
) -> Result<ModeComparison, PanelError> {
    let report = |mode| -> Result<CoverageReport, PanelError> {
        let feedbacks = run_panel(&corpus.document, context, mode, provider)?;
        let issues: Vec<Issue> = feedbacks.into_iter().flat_map(|f| f.issues).collect();
        Ok(score(&issues, corpus, mode))
    };
    let multi = report(CritiqueMode::MultiPerspective)?;
    let unified = report(CritiqueMode::Unified)?;
    Ok(ModeComparison {
        tool: TOOL_NAME.to_string(),
        version: VERSION.to_string(),
        corpus: corpus.name.clone(),
        delta: delta_table(&multi, &unified),
        multi,
        unified,
    })
}

/// Plain-text rendering of the delta table.
pub fn format_delta(rows: &[DeltaRow]) -> String {
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into());
    let mut out = format!(
        "{:<18} {:>8} {:>8} {:>8}\n",
        "scope", "multi", "unified", "delta"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<18} {:>8} {:>8} {:>8}\n",
            r.scope,
            cell(r.multi),
            cell(r.unified),
            cell(r.delta)
        ));
    }
    out
}
