//! Developer-project activity metrics and project recommendation.
//!
//! The pipeline: parse activity events into an [`EventStore`], turn a
//! metric into a sparse [`MetricMatrix`], scale it into a 0-10
//! [`RatingMatrix`], recommend unknown projects through item-item cosine
//! similarity, and score the recommendations against each developer's
//! watched projects.

pub mod evaluation;
pub mod event;
pub mod ids;
pub mod metrics;
pub mod recommend;
pub mod synth;

pub use evaluation::{
    breakdown_jsonl, evaluate_metric, hit_score, leaderboard_csv, leaderboard_markdown,
    run_leaderboard, EvalError, EvalOptions, HitBreakdown, Leaderboard, LeaderboardRow,
    MetricEvaluation,
};
pub use event::{
    parse_events, ActivityEvent, EventKind, EventStore, EventStoreBuilder, Format, OnInvalid,
    ParseError, Universe,
};
pub use ids::{DeveloperId, ProjectId};
pub use metrics::{
    binarize, compute_baseline_sun, compute_binary_fusion, compute_fusion, compute_single,
    minmax_scale, Combinator, Family, MetricError, MetricMatrix, MetricSpec, RatingMatrix,
    RawValue,
};
pub use recommend::{
    cosine_similarity, predict_rating, recommend_top_k, PredictedRating, Prediction,
    RecommendationList, SimilarityMatrix,
};
pub use synth::{generate, SynthConfig};
