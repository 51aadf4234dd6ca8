//! Watch-based hit scoring and the metric leaderboard.
//!
//! A recommended project whose full name is watched counts as a hit; one
//! that only shares an owner with some watched project earns half a hit.
//! The denominator is `n`, or the number of watched projects when the
//! developer watches fewer than `n`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::event::EventStore;
use crate::ids::{DeveloperId, ProjectId};
use crate::metrics::{minmax_scale, Family, MetricError, MetricSpec, RatingMatrix};
use crate::recommend::{
    recommend_all, Prediction, RecommendError, RecommendationList, SimilarityMatrix,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0} watches no project")]
    EmptyWatchSet(DeveloperId),
    #[error("n must be at least 1")]
    ZeroN,
    #[error("no metrics selected")]
    NoMetrics,
    #[error("rating matrix and store have different universes")]
    UniverseMismatch,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Recommend(Box<RecommendError>),
}

impl From<RecommendError> for EvalError {
    fn from(e: RecommendError) -> Self {
        EvalError::Recommend(Box::new(e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HitBreakdown {
    pub developer: DeveloperId,
    pub hit_fullname: usize,
    pub hit_owner: usize,
    pub num_watched: usize,
    pub n: usize,
    pub score: f64,
}

/// Scores the first `n` recommendations against a watch set.
pub fn hit_score(
    recs: &RecommendationList,
    watched: &BTreeSet<ProjectId>,
    n: usize,
) -> Result<HitBreakdown, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroN);
    }
    if watched.is_empty() {
        return Err(EvalError::EmptyWatchSet(recs.developer.clone()));
    }
    let owners: BTreeSet<&str> = watched.iter().map(ProjectId::owner_key).collect();
    let (mut full, mut owner) = (0usize, 0usize);
    for p in recs.projects().take(n) {
        if watched.contains(p) {
            full += 1;
        } else if owners.contains(p.owner_key()) {
            owner += 1;
        }
    }
    let denominator = if watched.len() >= n { n } else { watched.len() };
    // 100 * (full + owner / 2) / denominator as one rounding step.
    let score = (100 * (2 * full + owner)) as f64 / (2 * denominator) as f64;
    Ok(HitBreakdown {
        developer: recs.developer.clone(),
        hit_fullname: full,
        hit_owner: owner,
        num_watched: watched.len(),
        n,
        score: score.min(100.0),
    })
}

/// One leaderboard line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardRow {
    pub metric: String,
    pub family: Family,
    /// Mean hit score over evaluated developers; `None` when nobody could
    /// be evaluated or the metric is not applicable.
    pub mean: Option<f64>,
    pub evaluated: usize,
    pub applicable: bool,
}

impl LeaderboardRow {
    fn not_applicable(spec: &MetricSpec) -> Self {
        LeaderboardRow {
            metric: spec.name().to_string(),
            family: spec.family(),
            mean: None,
            evaluated: 0,
            applicable: false,
        }
    }

    /// `x` for inapplicable metrics, `n/a` without evaluated developers,
    /// otherwise the mean with one decimal.
    pub fn hit_score_display(&self) -> String {
        match (self.applicable, self.mean) {
            (false, _) => "x".to_string(),
            (true, None) => "n/a".to_string(),
            (true, Some(m)) => format!("{m:.1}"),
        }
    }
}

/// Per-metric result with per-developer detail.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricEvaluation {
    pub row: LeaderboardRow,
    pub breakdowns: Vec<HitBreakdown>,
    /// Developers without watched projects.
    pub skipped: Vec<DeveloperId>,
    pub recommendations: Vec<RecommendationList>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub prediction: Prediction,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            k: 5,
            lo: 0.0,
            hi: 10.0,
            prediction: Prediction::Unnormalized,
        }
    }
}

/// Recommends for every developer and scores each against its watch set.
pub fn evaluate_metric(
    ratings: &RatingMatrix,
    store: &EventStore,
    k: usize,
    prediction: Prediction,
) -> Result<MetricEvaluation, EvalError> {
    let sims = SimilarityMatrix::from_ratings(ratings);
    evaluate_with_similarity(ratings, &sims, store, k, prediction)
}

pub fn evaluate_with_similarity(
    ratings: &RatingMatrix,
    sims: &SimilarityMatrix,
    store: &EventStore,
    k: usize,
    prediction: Prediction,
) -> Result<MetricEvaluation, EvalError> {
    if !Arc::ptr_eq(ratings.universe(), store.universe()) && ratings.universe() != store.universe()
    {
        return Err(EvalError::UniverseMismatch);
    }
    let recommendations = recommend_all(ratings, sims, k, prediction)?;
    let mut breakdowns = Vec::new();
    let mut skipped = Vec::new();
    for (di, recs) in recommendations.iter().enumerate() {
        let watched: BTreeSet<ProjectId> = store
            .watched_at(di)
            .iter()
            .map(|&p| store.universe().project(p).clone())
            .collect();
        match hit_score(recs, &watched, k) {
            Ok(b) => breakdowns.push(b),
            Err(EvalError::EmptyWatchSet(d)) => skipped.push(d),
            Err(e) => return Err(e),
        }
    }
    let mean = mean_score(&breakdowns);
    let spec = ratings.source();
    Ok(MetricEvaluation {
        row: LeaderboardRow {
            metric: spec.name().to_string(),
            family: spec.family(),
            mean,
            evaluated: breakdowns.len(),
            applicable: true,
        },
        breakdowns,
        skipped,
        recommendations,
    })
}

/// Left-to-right arithmetic mean of developer scores.
pub fn mean_score(breakdowns: &[HitBreakdown]) -> Option<f64> {
    if breakdowns.is_empty() {
        return None;
    }
    let sum = breakdowns.iter().fold(0.0, |acc, b| acc + b.score);
    Some(sum / breakdowns.len() as f64)
}

/// Ratings for one spec: scaled matrix, or an empty matrix when the metric
/// never occurs in the store.
pub fn ratings_for(
    store: &EventStore,
    spec: &MetricSpec,
    lo: f64,
    hi: f64,
) -> Result<RatingMatrix, MetricError> {
    let m = spec.compute(store)?;
    if m.is_empty() {
        if !(lo.is_finite() && hi.is_finite() && hi > lo && lo >= 0.0) {
            return Err(MetricError::InvalidScale { lo, hi });
        }
        return Ok(RatingMatrix::empty(spec.clone(), store.universe().clone()));
    }
    minmax_scale(&m, lo, hi)
}

/// Full evaluation of one spec. `similarity` turns a rating matrix into
/// its similarity matrix, letting callers cache.
pub fn evaluate_spec(
    store: &EventStore,
    spec: &MetricSpec,
    opts: &EvalOptions,
    similarity: &(dyn Fn(&RatingMatrix) -> SimilarityMatrix + Sync),
) -> Result<MetricEvaluation, EvalError> {
    if !spec.is_applicable() {
        return Ok(MetricEvaluation {
            row: LeaderboardRow::not_applicable(spec),
            breakdowns: Vec::new(),
            skipped: Vec::new(),
            recommendations: Vec::new(),
        });
    }
    let ratings = ratings_for(store, spec, opts.lo, opts.hi)?;
    let sims = similarity(&ratings);
    evaluate_with_similarity(&ratings, &sims, store, opts.k, opts.prediction)
}

/// Scored metrics by descending mean, ties by name; then metrics with no
/// evaluated developers; then inapplicable ones.
pub fn sort_rows(rows: &mut [LeaderboardRow]) {
    fn tier(r: &LeaderboardRow) -> u8 {
        match (r.applicable, r.mean) {
            (true, Some(_)) => 0,
            (true, None) => 1,
            (false, _) => 2,
        }
    }
    rows.sort_by(|a, b| {
        tier(a)
            .cmp(&tier(b))
            .then_with(|| match (a.mean, b.mean) {
                (Some(x), Some(y)) if a.applicable && b.applicable => y.total_cmp(&x),
                _ => std::cmp::Ordering::Equal,
            })
            .then_with(|| a.metric.cmp(&b.metric))
    });
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaderboard {
    /// Sorted rows.
    pub rows: Vec<LeaderboardRow>,
    /// Evaluations in the order the specs were given.
    pub evaluations: Vec<MetricEvaluation>,
}

/// Evaluates every spec (in parallel) and sorts the rows.
pub fn run_leaderboard(
    store: &EventStore,
    specs: &[MetricSpec],
    opts: &EvalOptions,
) -> Result<Leaderboard, EvalError> {
    run_leaderboard_with(store, specs, opts, &SimilarityMatrix::from_ratings)
}

pub fn run_leaderboard_with(
    store: &EventStore,
    specs: &[MetricSpec],
    opts: &EvalOptions,
    similarity: &(dyn Fn(&RatingMatrix) -> SimilarityMatrix + Sync),
) -> Result<Leaderboard, EvalError> {
    if specs.is_empty() {
        return Err(EvalError::NoMetrics);
    }
    if opts.k == 0 {
        return Err(RecommendError::ZeroK.into());
    }
    let evaluations = specs
        .par_iter()
        .map(|spec| evaluate_spec(store, spec, opts, similarity))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<LeaderboardRow> = evaluations.iter().map(|e| e.row.clone()).collect();
    sort_rows(&mut rows);
    Ok(Leaderboard { rows, evaluations })
}

pub fn leaderboard_csv(rows: &[LeaderboardRow]) -> String {
    let mut out = String::from("metric,family,hit_score,developers_evaluated\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.metric,
            r.family,
            r.hit_score_display(),
            r.evaluated
        );
    }
    out
}

pub fn leaderboard_markdown(rows: &[LeaderboardRow]) -> String {
    let mut out =
        String::from("| Metric | Family | Hit Score (%) | Developers |\n|---|---|---:|---:|\n");
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            r.metric,
            r.family,
            r.hit_score_display(),
            r.evaluated
        );
    }
    out
}

#[derive(Serialize)]
struct BreakdownLine<'a> {
    metric: &'a str,
    #[serde(flatten)]
    breakdown: &'a HitBreakdown,
}

/// One JSON object per scored developer, metrics in evaluation order.
pub fn breakdown_jsonl(evaluations: &[MetricEvaluation]) -> String {
    let mut out = String::new();
    for e in evaluations {
        for b in &e.breakdowns {
            let line = BreakdownLine {
                metric: &e.row.metric,
                breakdown: b,
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
    }
    out
}
