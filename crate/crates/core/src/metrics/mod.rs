//! Developer x project metric matrices and their 0-10 rating form.
//!
//! Raw values are exact rationals; they only become floating point when a
//! matrix is scaled into ratings.

mod catalog;

pub use catalog::{
    all_metrics, binary_fusion_metrics, fusion_metrics, select, single_metrics, Selector,
};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{CheckedDiv, One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::event::{EventKind, EventStore, Universe};
use crate::ids::{DeveloperId, ProjectId};

/// Exact raw metric value.
pub type RawValue = Ratio<u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Single,
    FusionSum,
    FusionRatio,
    Binary,
    BinaryFusion,
    Baseline,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Single => "single",
            Family::FusionSum => "fusion_sum",
            Family::FusionRatio => "fusion_ratio",
            Family::Binary => "binary",
            Family::BinaryFusion => "binary_fusion",
            Family::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a metric is built from events or other metrics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Definition {
    Kind(EventKind),
    Sum(Vec<MetricSpec>),
    Ratio(Box<MetricSpec>, Box<MetricSpec>),
    Binarize(Box<MetricSpec>),
    /// Binarize each member, then sum.
    BinarySum(Vec<MetricSpec>),
    /// Binary form of a ratio fusion. Has no meaningful value; reported as "x".
    BinaryOfRatio(Box<MetricSpec>),
    /// star + watch + create.
    LikeStarCreate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricSpec {
    name: String,
    family: Family,
    definition: Definition,
}

impl MetricSpec {
    pub fn new(name: impl Into<String>, family: Family, definition: Definition) -> Self {
        MetricSpec {
            name: name.into(),
            family,
            definition,
        }
    }

    /// Single metric over one activity kind, named after the kind.
    pub fn single(kind: EventKind) -> Self {
        MetricSpec::new(kind.as_str(), Family::Single, Definition::Kind(kind))
    }

    pub fn sum(name: impl Into<String>, kinds: &[EventKind]) -> Self {
        MetricSpec::new(
            name,
            Family::FusionSum,
            Definition::Sum(kinds.iter().copied().map(MetricSpec::single).collect()),
        )
    }

    pub fn ratio(name: impl Into<String>, numerator: MetricSpec, denominator: MetricSpec) -> Self {
        MetricSpec::new(
            name,
            Family::FusionRatio,
            Definition::Ratio(Box::new(numerator), Box::new(denominator)),
        )
    }

    pub fn binary(of: MetricSpec) -> Self {
        if of.family == Family::Binary {
            return of;
        }
        MetricSpec::new(
            format!("binary_{}", of.name),
            Family::Binary,
            Definition::Binarize(Box::new(of)),
        )
    }

    /// Binary fusion of a fusion spec: binarize-then-sum for sums, "x" for
    /// ratios.
    pub fn binary_fusion(of: &MetricSpec) -> Self {
        let name = format!("binary_{}", of.name);
        let definition = match &of.definition {
            Definition::Sum(members) => Definition::BinarySum(members.clone()),
            Definition::Kind(_) => Definition::BinarySum(vec![of.clone()]),
            _ => Definition::BinaryOfRatio(Box::new(of.clone())),
        };
        MetricSpec::new(name, Family::BinaryFusion, definition)
    }

    pub fn baseline() -> Self {
        MetricSpec::new("sun_baseline", Family::Baseline, Definition::LikeStarCreate)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn definition(&self) -> &Definition {
        &self.definition
    }

    /// False only for binary forms of ratio fusions.
    pub fn is_applicable(&self) -> bool {
        !matches!(self.definition, Definition::BinaryOfRatio(_))
    }

    fn renamed(mut self, like: &MetricSpec) -> Self {
        self.name = like.name.clone();
        self.family = like.family;
        self.definition = like.definition.clone();
        self
    }

    /// Computes this metric over a store.
    pub fn compute(&self, store: &EventStore) -> Result<MetricMatrix, MetricError> {
        let m = match &self.definition {
            Definition::Kind(kind) => compute_single(store, *kind)?,
            Definition::Sum(members) => {
                let ms = members
                    .iter()
                    .map(|s| s.compute(store))
                    .collect::<Result<Vec<_>, _>>()?;
                compute_fusion(&ms, Combinator::Sum)?
            }
            Definition::Ratio(num, den) => compute_fusion(
                &[num.compute(store)?, den.compute(store)?],
                Combinator::Ratio,
            )?,
            Definition::Binarize(inner) => binarize(&inner.compute(store)?),
            Definition::BinarySum(members) => {
                let ms = members
                    .iter()
                    .map(|s| s.compute(store))
                    .collect::<Result<Vec<_>, _>>()?;
                compute_binary_fusion(&ms)?
            }
            Definition::BinaryOfRatio(of) => {
                return Err(MetricError::RatioBinaryFusion(of.name.clone()))
            }
            Definition::LikeStarCreate => compute_baseline_sun(store),
        };
        Ok(MetricMatrix {
            spec: m.spec.renamed(self),
            ..m
        })
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("{0} is not a single-metric activity kind")]
    NotActivityKind(EventKind),
    #[error("ratio fusion takes exactly 2 members, got {0}")]
    RatioArity(usize),
    #[error("fusion needs at least one member")]
    EmptyFusion,
    #[error("member matrices come from different developer/project universes")]
    UniverseMismatch,
    #[error("binary fusion members must be single metrics, got {0}")]
    NotSingle(String),
    #[error("ratio-based metric {0} has no binary fusion")]
    RatioBinaryFusion(String),
    #[error("nothing to scale: metric {0} has no entries")]
    NothingToScale(String),
    #[error("invalid scale range [{lo}, {hi}]")]
    InvalidScale { lo: f64, hi: f64 },
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combinator {
    Sum,
    Ratio,
}

/// Sparse developer x project matrix of raw values. Absent means zero;
/// zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    spec: MetricSpec,
    universe: Arc<Universe>,
    entries: BTreeMap<(usize, usize), RawValue>,
}

impl MetricMatrix {
    /// Builds a matrix from `(developer index, project index) -> value`
    /// pairs; zero values are dropped, repeated cells are summed.
    pub fn from_entries(
        spec: MetricSpec,
        universe: Arc<Universe>,
        entries: impl IntoIterator<Item = ((usize, usize), RawValue)>,
    ) -> Self {
        let mut map: BTreeMap<(usize, usize), RawValue> = BTreeMap::new();
        for ((d, p), v) in entries {
            assert!(
                d < universe.developers().len() && p < universe.projects().len(),
                "cell ({d}, {p}) outside universe"
            );
            if v.is_zero() {
                continue;
            }
            *map.entry((d, p)).or_insert_with(RawValue::zero) += v;
        }
        MetricMatrix {
            spec,
            universe,
            entries: map,
        }
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), RawValue> {
        &self.entries
    }

    pub fn get_at(&self, developer: usize, project: usize) -> RawValue {
        self.entries
            .get(&(developer, project))
            .copied()
            .unwrap_or_else(RawValue::zero)
    }

    pub fn get(&self, d: &DeveloperId, p: &ProjectId) -> RawValue {
        match (
            self.universe.developer_index(d),
            self.universe.project_index(p),
        ) {
            (Some(di), Some(pi)) => self.get_at(di, pi),
            _ => RawValue::zero(),
        }
    }

    pub fn max(&self) -> Option<RawValue> {
        self.entries.values().copied().max()
    }

    /// Every entry multiplied by `c`.
    pub fn scaled_by(&self, c: RawValue) -> MetricMatrix {
        MetricMatrix::from_entries(
            self.spec.clone(),
            self.universe.clone(),
            self.entries.iter().map(|(&k, &v)| (k, v * c)),
        )
    }

    /// Sparse `developer,project,value` triples. Non-integral values are
    /// written as exact fractions (`7/3`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("developer,project,value\n");
        for (&(d, p), v) in &self.entries {
            out.push_str(&format!(
                "{},{},{}\n",
                self.universe.developer(d),
                self.universe.project(p),
                v
            ));
        }
        out
    }
}

fn same_universe(ms: &[MetricMatrix]) -> bool {
    ms.windows(2)
        .all(|w| Arc::ptr_eq(&w[0].universe, &w[1].universe) || w[0].universe == w[1].universe)
}

/// Raw counts of one activity kind.
pub fn compute_single(store: &EventStore, kind: EventKind) -> Result<MetricMatrix, MetricError> {
    if !kind.is_activity() {
        return Err(MetricError::NotActivityKind(kind));
    }
    Ok(MetricMatrix::from_entries(
        MetricSpec::single(kind),
        store.universe().clone(),
        store
            .counts_of(kind)
            .map(|(d, p, c)| ((d, p), RawValue::from_integer(c))),
    ))
}

/// Entrywise sum of members, or numerator / denominator for ratios. A zero
/// denominator yields 0.
pub fn compute_fusion(
    members: &[MetricMatrix],
    combinator: Combinator,
) -> Result<MetricMatrix, MetricError> {
    if members.is_empty() {
        return Err(MetricError::EmptyFusion);
    }
    if !same_universe(members) {
        return Err(MetricError::UniverseMismatch);
    }
    let universe = members[0].universe.clone();
    match combinator {
        Combinator::Sum => {
            let spec = MetricSpec::new(
                members
                    .iter()
                    .map(|m| m.spec.name.as_str())
                    .collect::<Vec<_>>()
                    .join("+"),
                Family::FusionSum,
                Definition::Sum(members.iter().map(|m| m.spec.clone()).collect()),
            );
            Ok(MetricMatrix::from_entries(
                spec,
                universe,
                members
                    .iter()
                    .flat_map(|m| m.entries.iter().map(|(&k, &v)| (k, v))),
            ))
        }
        Combinator::Ratio => {
            let [num, den] = members else {
                return Err(MetricError::RatioArity(members.len()));
            };
            let spec = MetricSpec::ratio(
                format!("{}/{}", num.spec.name, den.spec.name),
                num.spec.clone(),
                den.spec.clone(),
            );
            // Numerator-absent cells are zero already; denominator-absent
            // cells are zero by rule.
            let entries = num
                .entries
                .iter()
                .filter_map(|(&k, &n)| den.entries.get(&k).map(|&d| (k, n / d)));
            Ok(MetricMatrix::from_entries(spec, universe, entries))
        }
    }
}

/// 1 where the source is positive, absent elsewhere.
pub fn binarize(m: &MetricMatrix) -> MetricMatrix {
    MetricMatrix::from_entries(
        MetricSpec::binary(m.spec.clone()),
        m.universe.clone(),
        m.entries.keys().map(|&k| (k, RawValue::one())),
    )
}

/// Sum of binarized single-metric members.
pub fn compute_binary_fusion(members: &[MetricMatrix]) -> Result<MetricMatrix, MetricError> {
    if members.is_empty() {
        return Err(MetricError::EmptyFusion);
    }
    if let Some(bad) = members
        .iter()
        .find(|m| !matches!(m.spec.family, Family::Single | Family::Binary))
    {
        return Err(MetricError::NotSingle(bad.spec.name.clone()));
    }
    if !same_universe(members) {
        return Err(MetricError::UniverseMismatch);
    }
    let spec = MetricSpec::new(
        format!(
            "binary({})",
            members
                .iter()
                .map(|m| m.spec.name.as_str())
                .collect::<Vec<_>>()
                .join("+")
        ),
        Family::BinaryFusion,
        Definition::BinarySum(members.iter().map(|m| m.spec.clone()).collect()),
    );
    Ok(MetricMatrix::from_entries(
        spec,
        members[0].universe.clone(),
        members
            .iter()
            .flat_map(|m| m.entries.keys().map(|&k| (k, RawValue::one()))),
    ))
}

/// Like-star-create baseline: star + watch + create counts.
pub fn compute_baseline_sun(store: &EventStore) -> MetricMatrix {
    let entries = [EventKind::Star, EventKind::Watch, EventKind::Create]
        .into_iter()
        .flat_map(|k| store.counts_of(k))
        .map(|(d, p, c)| ((d, p), RawValue::from_integer(c)));
    MetricMatrix::from_entries(MetricSpec::baseline(), store.universe().clone(), entries)
}

fn ratio_to_f64(r: RawValue) -> f64 {
    r.to_f64()
        .unwrap_or_else(|| *r.numer() as f64 / *r.denom() as f64)
}

/// Ratings in `[lo, hi]` for one metric; absent cells are unrated.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    source: MetricSpec,
    universe: Arc<Universe>,
    entries: BTreeMap<(usize, usize), f64>,
    scale_max: Option<RawValue>,
    lo: f64,
    hi: f64,
}

impl RatingMatrix {
    /// A rating matrix with no entries, for metrics that never occur in a
    /// store. Every project is unknown to every developer.
    pub fn empty(source: MetricSpec, universe: Arc<Universe>) -> Self {
        RatingMatrix {
            source,
            universe,
            entries: BTreeMap::new(),
            scale_max: None,
            lo: 0.0,
            hi: 10.0,
        }
    }

    /// Wraps precomputed ratings (non-negative, finite). Zeros are dropped.
    pub fn from_ratings(
        source: MetricSpec,
        universe: Arc<Universe>,
        entries: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Self {
        let entries: BTreeMap<_, _> = entries
            .into_iter()
            .inspect(|&(_, v)| assert!(v.is_finite() && v >= 0.0, "rating {v} out of range"))
            .filter(|&(_, v)| v > 0.0)
            .collect();
        let hi = entries.values().copied().fold(0.0, f64::max);
        RatingMatrix {
            source,
            universe,
            entries,
            scale_max: None,
            lo: 0.0,
            hi,
        }
    }

    pub fn source(&self) -> &MetricSpec {
        &self.source
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    /// Raw maximum mapped to `hi`; `None` for matrices not built by scaling.
    pub fn scale_max(&self) -> Option<RawValue> {
        self.scale_max
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.entries
    }

    pub fn get_at(&self, developer: usize, project: usize) -> f64 {
        self.entries
            .get(&(developer, project))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn get(&self, d: &DeveloperId, p: &ProjectId) -> f64 {
        match (
            self.universe.developer_index(d),
            self.universe.project_index(p),
        ) {
            (Some(di), Some(pi)) => self.get_at(di, pi),
            _ => 0.0,
        }
    }

    pub fn is_rated(&self, developer: usize, project: usize) -> bool {
        self.entries.contains_key(&(developer, project))
    }

    /// `(project index, rating)` for one developer, in project order.
    pub fn row(&self, developer: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries
            .range((developer, 0)..(developer + 1, 0))
            .map(|(&(_, p), &v)| (p, v))
    }
}

/// Min-max scaling with the minimum pinned at 0:
/// `lo + (hi - lo) * raw / max_raw` over the whole matrix.
pub fn minmax_scale(m: &MetricMatrix, lo: f64, hi: f64) -> Result<RatingMatrix, MetricError> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo && lo >= 0.0) {
        return Err(MetricError::InvalidScale { lo, hi });
    }
    let Some(max) = m.max() else {
        return Err(MetricError::NothingToScale(m.spec.name.clone()));
    };
    let entries = m
        .entries
        .iter()
        .map(|(&k, &raw)| {
            let rating = match raw.checked_div(&max) {
                Some(q) if q.is_one() => hi,
                Some(q) => lo + (hi - lo) * ratio_to_f64(q),
                None => lo + (hi - lo) * (ratio_to_f64(raw) / ratio_to_f64(max)),
            };
            (k, rating)
        })
        .collect();
    Ok(RatingMatrix {
        source: m.spec.clone(),
        universe: m.universe.clone(),
        entries,
        scale_max: Some(max),
        lo,
        hi,
    })
}
