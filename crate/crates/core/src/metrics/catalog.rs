//! Named metrics and metric selectors.

use std::str::FromStr;

use super::{MetricError, MetricSpec};
use crate::event::EventKind;
use EventKind::*;

pub fn single_metrics() -> Vec<MetricSpec> {
    EventKind::SINGLE_METRICS
        .iter()
        .copied()
        .map(MetricSpec::single)
        .collect()
}

fn sum_fusions() -> Vec<MetricSpec> {
    vec![
        MetricSpec::sum("count", &EventKind::SINGLE_METRICS),
        MetricSpec::sum(
            "contribution",
            &[
                PrOpened,
                IssueOpened,
                IssueClosedWithPr,
                PrMerged,
                CommitCommitted,
            ],
        ),
        MetricSpec::sum("comment", &[IssueCommented, CommitCommented, PrCommented]),
        MetricSpec::sum(
            "issue_related",
            &[
                IssueOpened,
                IssueClosedWithPr,
                IssueCommented,
                IssueAssigned,
            ],
        ),
        MetricSpec::sum("pr_related", &[PrOpened, PrMerged, PrClosed, PrAssigned]),
        MetricSpec::sum(
            "commit_related",
            &[CommitCommented, CommitAuthored, CommitCommitted],
        ),
    ]
}

fn ratio_fusions(sums: &[MetricSpec]) -> Vec<MetricSpec> {
    let by_name = |n: &str| {
        sums.iter()
            .find(|s| s.name() == n)
            .cloned()
            .expect("sum fusion")
    };
    vec![
        MetricSpec::ratio(
            "commit2comment",
            MetricSpec::single(CommitCommitted),
            MetricSpec::single(CommitCommented),
        ),
        MetricSpec::ratio(
            "issue2comment",
            MetricSpec::single(IssueOpened),
            MetricSpec::single(IssueCommented),
        ),
        MetricSpec::ratio(
            "pr2comment",
            MetricSpec::single(PrOpened),
            MetricSpec::single(PrCommented),
        ),
        MetricSpec::ratio("code2comment", by_name("contribution"), by_name("comment")),
    ]
}

/// The six sum fusions followed by the four ratio fusions.
pub fn fusion_metrics() -> Vec<MetricSpec> {
    let mut all = sum_fusions();
    let ratios = ratio_fusions(&all);
    all.extend(ratios);
    all
}

/// Binary form of every fusion; the four ratio-based ones are not
/// applicable and only appear as "x" rows.
pub fn binary_fusion_metrics() -> Vec<MetricSpec> {
    fusion_metrics()
        .iter()
        .map(MetricSpec::binary_fusion)
        .collect()
}

/// Every reportable metric: single, fusion, binary fusion, baseline.
pub fn all_metrics() -> Vec<MetricSpec> {
    let mut all = single_metrics();
    all.extend(fusion_metrics());
    all.extend(binary_fusion_metrics());
    all.push(MetricSpec::baseline());
    all
}

/// One element of a `--metrics` list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    AllSingle,
    AllFusion,
    AllBinaryFusion,
    Baseline,
    All,
    Named(String),
}

impl FromStr for Selector {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Ok(match s.to_ascii_lowercase().as_str() {
            "all-single" => Selector::AllSingle,
            "all-fusion" => Selector::AllFusion,
            "all-binary-fusion" => Selector::AllBinaryFusion,
            "baseline" | "sun" | "sun_baseline" => Selector::Baseline,
            "all" => Selector::All,
            "" => return Err(MetricError::UnknownMetric(s.to_string())),
            _ => Selector::Named(s.to_string()),
        })
    }
}

impl Selector {
    pub fn expand(&self) -> Result<Vec<MetricSpec>, MetricError> {
        match self {
            Selector::AllSingle => Ok(single_metrics()),
            Selector::AllFusion => Ok(fusion_metrics()),
            Selector::AllBinaryFusion => Ok(binary_fusion_metrics()),
            Selector::Baseline => Ok(vec![MetricSpec::baseline()]),
            Selector::All => Ok(all_metrics()),
            Selector::Named(name) => {
                // Kind aliases such as issue_closedwithPR resolve to the
                // canonical single-metric name.
                let canonical = match name.parse::<EventKind>() {
                    Ok(kind) if kind != PrClosed => kind.as_str().to_string(),
                    _ => name.to_ascii_lowercase(),
                };
                all_metrics()
                    .into_iter()
                    .find(|m| m.name() == canonical)
                    .map(|m| vec![m])
                    .ok_or_else(|| MetricError::UnknownMetric(name.clone()))
            }
        }
    }
}

/// Resolves a comma-separated selection into specs, first occurrence wins.
pub fn select(list: &str) -> Result<Vec<MetricSpec>, MetricError> {
    let mut out: Vec<MetricSpec> = Vec::new();
    for part in list.split(',') {
        for spec in part.parse::<Selector>()?.expand()? {
            if !out.iter().any(|s| s.name() == spec.name()) {
                out.push(spec);
            }
        }
    }
    Ok(out)
}
