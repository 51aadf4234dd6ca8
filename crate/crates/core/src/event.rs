//! Activity events, ingestion and the indexed event store.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ids::{DeveloperId, IdError, ProjectId};

/// One kind of developer action on a project.
///
/// The first twelve variants are the single developer metrics. `PrClosed`
/// only feeds `pr_related`, `Watch` is evaluation ground truth, and
/// `Star`/`Create` only feed the like-star-create baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    IssueOpened,
    IssueCommented,
    IssueClosed,
    IssueClosedWithPr,
    IssueAssigned,
    CommitCommented,
    CommitAuthored,
    CommitCommitted,
    PrOpened,
    PrMerged,
    PrAssigned,
    PrCommented,
    PrClosed,
    Watch,
    Star,
    Create,
}

impl EventKind {
    pub const ALL: [EventKind; 16] = [
        EventKind::IssueOpened,
        EventKind::IssueCommented,
        EventKind::IssueClosed,
        EventKind::IssueClosedWithPr,
        EventKind::IssueAssigned,
        EventKind::CommitCommented,
        EventKind::CommitAuthored,
        EventKind::CommitCommitted,
        EventKind::PrOpened,
        EventKind::PrMerged,
        EventKind::PrAssigned,
        EventKind::PrCommented,
        EventKind::PrClosed,
        EventKind::Watch,
        EventKind::Star,
        EventKind::Create,
    ];

    /// The twelve kinds that are reported as single metrics.
    pub const SINGLE_METRICS: [EventKind; 12] = [
        EventKind::IssueOpened,
        EventKind::IssueCommented,
        EventKind::IssueClosed,
        EventKind::IssueClosedWithPr,
        EventKind::IssueAssigned,
        EventKind::CommitCommented,
        EventKind::CommitAuthored,
        EventKind::CommitCommitted,
        EventKind::PrOpened,
        EventKind::PrMerged,
        EventKind::PrAssigned,
        EventKind::PrCommented,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::IssueOpened => "issue_opened",
            EventKind::IssueCommented => "issue_commented",
            EventKind::IssueClosed => "issue_closed",
            EventKind::IssueClosedWithPr => "issue_closed_with_pr",
            EventKind::IssueAssigned => "issue_assigned",
            EventKind::CommitCommented => "commit_commented",
            EventKind::CommitAuthored => "commit_authored",
            EventKind::CommitCommitted => "commit_committed",
            EventKind::PrOpened => "pr_opened",
            EventKind::PrMerged => "pr_merged",
            EventKind::PrAssigned => "pr_assigned",
            EventKind::PrCommented => "pr_commented",
            EventKind::PrClosed => "pr_closed",
            EventKind::Watch => "watch",
            EventKind::Star => "star",
            EventKind::Create => "create",
        }
    }

    /// Activity kinds that can back a single metric matrix (the twelve
    /// reported ones plus `pr_closed`).
    pub fn is_activity(self) -> bool {
        !matches!(self, EventKind::Watch | EventKind::Star | EventKind::Create)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown event kind {0:?}")]
pub struct UnknownKind(pub String);

impl FromStr for EventKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(kind) = EventKind::ALL.iter().find(|k| k.as_str() == lower) {
            return Ok(*kind);
        }
        match lower.as_str() {
            "issue_closedwithpr" => Ok(EventKind::IssueClosedWithPr),
            "like" => Ok(EventKind::Star),
            _ => Err(UnknownKind(s.to_string())),
        }
    }
}

/// One developer action on one project, with multiplicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityEvent {
    pub developer: DeveloperId,
    pub project: ProjectId,
    pub kind: EventKind,
    pub count: u64,
}

/// The sorted developer and project sets shared by a store and every
/// matrix derived from it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Universe {
    developers: Vec<DeveloperId>,
    projects: Vec<ProjectId>,
}

impl Universe {
    /// Builds a universe from arbitrary ids; duplicates are collapsed.
    pub fn new(
        developers: impl IntoIterator<Item = DeveloperId>,
        projects: impl IntoIterator<Item = ProjectId>,
    ) -> Self {
        let developers: BTreeSet<_> = developers.into_iter().collect();
        let projects: BTreeSet<_> = projects.into_iter().collect();
        Universe {
            developers: developers.into_iter().collect(),
            projects: projects.into_iter().collect(),
        }
    }

    pub fn developers(&self) -> &[DeveloperId] {
        &self.developers
    }

    pub fn projects(&self) -> &[ProjectId] {
        &self.projects
    }

    pub fn developer(&self, index: usize) -> &DeveloperId {
        &self.developers[index]
    }

    pub fn project(&self, index: usize) -> &ProjectId {
        &self.projects[index]
    }

    pub fn developer_index(&self, d: &DeveloperId) -> Option<usize> {
        self.developers.binary_search(d).ok()
    }

    pub fn project_index(&self, p: &ProjectId) -> Option<usize> {
        self.projects.binary_search(p).ok()
    }
}

/// Input file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// Guesses from a file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" | "ndjson" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other:?} (expected jsonl or csv)")),
        }
    }
}

/// What to do with a record that fails validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnInvalid {
    #[default]
    FailFast,
    SkipAndWarn,
}

/// A rejected input record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIssue {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(LineIssue),
    #[error("csv header is missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error(transparent)]
    Id(#[from] IdError),
    #[error(transparent)]
    Kind(#[from] UnknownKind),
    #[error("count must be an integer >= 1, got {0}")]
    Count(i64),
}

#[derive(Deserialize)]
struct RawRecord {
    developer: String,
    owner: String,
    repo: String,
    kind: String,
    #[serde(default)]
    count: Option<i64>,
}

impl RawRecord {
    fn into_event(self) -> Result<ActivityEvent, RecordError> {
        let count = match self.count {
            None => 1,
            Some(c) if c >= 1 => c as u64,
            Some(c) => return Err(RecordError::Count(c)),
        };
        Ok(ActivityEvent {
            developer: DeveloperId::new(self.developer.trim())?,
            project: ProjectId::new(self.owner.trim(), self.repo.trim())?,
            kind: self.kind.parse()?,
            count,
        })
    }
}

/// Accumulates events from one or more inputs; `build` freezes them.
#[derive(Debug, Default)]
pub struct EventStoreBuilder {
    events: Vec<ActivityEvent>,
}

impl EventStoreBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: ActivityEvent) -> Result<(), RecordError> {
        if event.count == 0 {
            return Err(RecordError::Count(0));
        }
        self.events.push(event);
        Ok(())
    }

    pub fn add(
        &mut self,
        developer: &str,
        full_name: &str,
        kind: EventKind,
        count: u64,
    ) -> Result<(), RecordError> {
        self.push(ActivityEvent {
            developer: DeveloperId::new(developer)?,
            project: ProjectId::parse_full_name(full_name)?,
            kind,
            count,
        })
    }

    /// Parses one input stream into the builder, returning the records that
    /// were skipped under [`OnInvalid::SkipAndWarn`].
    pub fn ingest<R: Read>(
        &mut self,
        reader: R,
        format: Format,
        on_invalid: OnInvalid,
    ) -> Result<Vec<LineIssue>, ParseError> {
        let mut issues = Vec::new();
        let mut report = |line: usize, message: String| -> Result<(), ParseError> {
            let issue = LineIssue { line, message };
            match on_invalid {
                OnInvalid::FailFast => Err(ParseError::Invalid(issue)),
                OnInvalid::SkipAndWarn => {
                    issues.push(issue);
                    Ok(())
                }
            }
        };
        match format {
            Format::Jsonl => {
                for (i, line) in BufReader::new(reader).lines().enumerate() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let parsed = serde_json::from_str::<RawRecord>(&line)
                        .map_err(|e| e.to_string())
                        .and_then(|r| r.into_event().map_err(|e| e.to_string()));
                    match parsed {
                        Ok(ev) => self.events.push(ev),
                        Err(msg) => report(i + 1, msg)?,
                    }
                }
            }
            Format::Csv => {
                let mut rdr = csv::ReaderBuilder::new()
                    .trim(csv::Trim::All)
                    .flexible(true)
                    .from_reader(reader);
                let headers = rdr.headers()?.clone();
                for col in ["developer", "owner", "repo", "kind"] {
                    if !headers.iter().any(|h| h == col) {
                        return Err(ParseError::MissingColumn(col));
                    }
                }
                let count_col = headers.iter().position(|h| h == "count");
                let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
                let (dc, oc, rc, kc) = (col("developer"), col("owner"), col("repo"), col("kind"));
                for rec in rdr.records() {
                    let rec = match rec {
                        Ok(r) => r,
                        Err(e) => {
                            let line = e.position().map_or(0, |p| p.line() as usize);
                            report(line, e.to_string())?;
                            continue;
                        }
                    };
                    let line = rec.position().map_or(0, |p| p.line() as usize);
                    if rec.iter().all(str::is_empty) {
                        continue;
                    }
                    let field = |i: usize| rec.get(i).unwrap_or("").to_string();
                    let count = match count_col.map(|i| rec.get(i).unwrap_or("")) {
                        None | Some("") => Ok(None),
                        Some(s) => s
                            .parse::<i64>()
                            .map(Some)
                            .map_err(|_| format!("count is not an integer: {s:?}")),
                    };
                    let parsed = count.and_then(|count| {
                        RawRecord {
                            developer: field(dc),
                            owner: field(oc),
                            repo: field(rc),
                            kind: field(kc),
                            count,
                        }
                        .into_event()
                        .map_err(|e| e.to_string())
                    });
                    match parsed {
                        Ok(ev) => self.events.push(ev),
                        Err(msg) => report(line, msg)?,
                    }
                }
            }
        }
        Ok(issues)
    }

    pub fn build(self) -> EventStore {
        // Display spelling is the smallest spelling seen, so the result does
        // not depend on input order.
        let mut devs: BTreeMap<String, DeveloperId> = BTreeMap::new();
        let mut projs: BTreeMap<String, ProjectId> = BTreeMap::new();
        for ev in &self.events {
            devs.entry(ev.developer.key().to_string())
                .and_modify(|d| {
                    if ev.developer.login() < d.login() {
                        *d = ev.developer.clone();
                    }
                })
                .or_insert_with(|| ev.developer.clone());
            projs
                .entry(ev.project.key().to_string())
                .and_modify(|p| {
                    if (ev.project.owner(), ev.project.name()) < (p.owner(), p.name()) {
                        *p = ev.project.clone();
                    }
                })
                .or_insert_with(|| ev.project.clone());
        }
        let universe = Universe {
            developers: devs.into_values().collect(),
            projects: projs.into_values().collect(),
        };
        let mut counts: BTreeMap<(usize, usize, EventKind), u64> = BTreeMap::new();
        let mut watched = vec![BTreeSet::new(); universe.developers.len()];
        for ev in &self.events {
            let d = universe.developer_index(&ev.developer).expect("indexed");
            let p = universe.project_index(&ev.project).expect("indexed");
            let slot = counts.entry((d, p, ev.kind)).or_insert(0);
            *slot = slot.saturating_add(ev.count);
            if ev.kind == EventKind::Watch {
                watched[d].insert(p);
            }
        }
        EventStore {
            universe: Arc::new(universe),
            counts,
            watched,
        }
    }
}

/// Result of parsing one stream.
#[derive(Debug)]
pub struct Parsed {
    pub store: EventStore,
    pub issues: Vec<LineIssue>,
}

/// Parses a JSONL or CSV event stream into an aggregated store.
pub fn parse_events<R: Read>(
    reader: R,
    format: Format,
    on_invalid: OnInvalid,
) -> Result<Parsed, ParseError> {
    let mut builder = EventStoreBuilder::new();
    let issues = builder.ingest(reader, format, on_invalid)?;
    Ok(Parsed {
        store: builder.build(),
        issues,
    })
}

/// Immutable, aggregated activity counts indexed by developer and project.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStore {
    universe: Arc<Universe>,
    counts: BTreeMap<(usize, usize, EventKind), u64>,
    watched: Vec<BTreeSet<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoreSummary {
    pub developers: usize,
    pub projects: usize,
    /// Distinct (developer, project, kind) triples.
    pub records: usize,
    /// Sum of multiplicities.
    pub events: u64,
    /// Distinct (developer, project) pairs with any single-metric activity.
    pub active_pairs: usize,
    pub watch_edges: usize,
    /// Fraction of developer x project cells with no activity.
    pub sparsity: f64,
}

impl EventStore {
    pub fn empty() -> Self {
        EventStoreBuilder::new().build()
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn developers(&self) -> &[DeveloperId] {
        self.universe.developers()
    }

    pub fn projects(&self) -> &[ProjectId] {
        self.universe.projects()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total multiplicity of `kind` events by `d` on `p`; 0 when unseen.
    pub fn raw_count(&self, d: &DeveloperId, p: &ProjectId, kind: EventKind) -> u64 {
        match (
            self.universe.developer_index(d),
            self.universe.project_index(p),
        ) {
            (Some(di), Some(pi)) => self.count_at(di, pi, kind),
            _ => 0,
        }
    }

    pub fn count_at(&self, developer: usize, project: usize, kind: EventKind) -> u64 {
        self.counts
            .get(&(developer, project, kind))
            .copied()
            .unwrap_or(0)
    }

    /// `(developer index, project index, count)` for every nonzero count of
    /// `kind`, in index order.
    pub fn counts_of(&self, kind: EventKind) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts
            .iter()
            .filter(move |((_, _, k), _)| *k == kind)
            .map(|(&(d, p, _), &c)| (d, p, c))
    }

    /// Aggregated events in canonical order.
    pub fn events(&self) -> impl Iterator<Item = ActivityEvent> + '_ {
        self.counts
            .iter()
            .map(|(&(d, p, kind), &count)| ActivityEvent {
                developer: self.universe.developer(d).clone(),
                project: self.universe.project(p).clone(),
                kind,
                count,
            })
    }

    pub fn watched(&self, d: &DeveloperId) -> BTreeSet<ProjectId> {
        self.universe
            .developer_index(d)
            .map(|i| {
                self.watched_at(i)
                    .iter()
                    .map(|&p| self.universe.project(p).clone())
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn watched_at(&self, developer: usize) -> &BTreeSet<usize> {
        &self.watched[developer]
    }

    pub fn summary(&self) -> StoreSummary {
        let active: BTreeSet<(usize, usize)> = self
            .counts
            .keys()
            .filter(|(_, _, k)| k.is_activity())
            .map(|&(d, p, _)| (d, p))
            .collect();
        let cells = self.developers().len() * self.projects().len();
        StoreSummary {
            developers: self.developers().len(),
            projects: self.projects().len(),
            records: self.counts.len(),
            events: self.counts.values().sum(),
            active_pairs: active.len(),
            watch_edges: self.watched.iter().map(BTreeSet::len).sum(),
            sparsity: if cells == 0 {
                1.0
            } else {
                1.0 - active.len() as f64 / cells as f64
            },
        }
    }

    /// Canonical JSONL: one aggregated record per line, sorted.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for ev in self.events() {
            let line = serde_json::json!({
                "developer": ev.developer.login(),
                "owner": ev.project.owner(),
                "repo": ev.project.name(),
                "kind": ev.kind.as_str(),
                "count": ev.count,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the canonical JSONL, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }
}
