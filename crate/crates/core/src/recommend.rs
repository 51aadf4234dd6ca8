//! Item-based collaborative filtering over rating-matrix columns.
//!
//! Project similarity is the cosine of two rating columns. The predicted
//! rating of an unknown project is the plain sum of known ratings weighted
//! by similarity, with no division by similarity mass unless
//! [`Prediction::Normalized`] is requested.

use std::collections::BTreeMap;
use std::io::Read;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::event::Universe;
use crate::ids::{DeveloperId, ProjectId};
use crate::metrics::RatingMatrix;

/// Scores whose relative difference is at most this are ranked as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RecommendError {
    /// The project is already rated by the developer.
    #[error("{} is not an unknown project for {}", .0.1, .0.0)]
    NotUnknown(Box<(DeveloperId, ProjectId)>),
    #[error("{0} is not in the rating matrix")]
    UnknownDeveloper(DeveloperId),
    #[error("{0} is not in the rating matrix")]
    UnknownProject(ProjectId),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("similarity file, line {line}: {message}")]
    BadSimilarityFile { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Cosine of two equally long non-negative vectors; 0 when either is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "columns over different universes");
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    cosine_from_parts(dot, na, nb)
}

// sqrt(na * nb) rather than sqrt(na) * sqrt(nb): exact 1 for a == b.
fn cosine_from_parts(dot: f64, norm_sq_a: f64, norm_sq_b: f64) -> f64 {
    if norm_sq_a == 0.0 || norm_sq_b == 0.0 {
        return 0.0;
    }
    (dot / (norm_sq_a * norm_sq_b).sqrt()).clamp(0.0, 1.0)
}

/// Symmetric sparse project x project cosine similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    universe: Arc<Universe>,
    nonzero: Vec<bool>,
    // Off-diagonal positive similarities, sorted by project index.
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl SimilarityMatrix {
    /// Similarities between every pair of rating columns.
    pub fn from_ratings(ratings: &RatingMatrix) -> Self {
        let universe = ratings.universe().clone();
        let n_devs = universe.developers().len();
        let n_projects = universe.projects().len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_devs];
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_projects];
        for (&(d, p), &v) in ratings.entries() {
            rows[d].push((p, v));
            columns[p].push((d, v));
        }
        let norms: Vec<f64> = columns
            .iter()
            .map(|c| c.iter().map(|(_, v)| v * v).sum())
            .collect();

        // Upper triangle only, one row per project; each dot product sums
        // over developers in index order.
        let upper: Vec<Vec<(usize, f64)>> = (0..n_projects)
            .into_par_iter()
            .map(|a| {
                let mut dots: BTreeMap<usize, f64> = BTreeMap::new();
                for &(d, ra) in &columns[a] {
                    for &(b, rb) in &rows[d] {
                        if b > a {
                            *dots.entry(b).or_insert(0.0) += ra * rb;
                        }
                    }
                }
                dots.into_iter()
                    .map(|(b, dot)| (b, cosine_from_parts(dot, norms[a], norms[b])))
                    .filter(|&(_, s)| s > 0.0)
                    .collect()
            })
            .collect();

        let mut nonzero = vec![false; n_projects];
        for (p, n) in norms.iter().enumerate() {
            nonzero[p] = *n > 0.0;
        }
        Self::assemble(universe, nonzero, upper)
    }

    fn assemble(
        universe: Arc<Universe>,
        nonzero: Vec<bool>,
        upper: Vec<Vec<(usize, f64)>>,
    ) -> Self {
        let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); upper.len()];
        for (a, row) in upper.iter().enumerate() {
            for &(b, s) in row {
                neighbors[a].push((b, s));
                neighbors[b].push((a, s));
            }
        }
        for list in &mut neighbors {
            list.sort_by_key(|&(b, _)| b);
        }
        SimilarityMatrix {
            universe,
            nonzero,
            neighbors,
        }
    }

    /// Builds a matrix from explicit pairs. `(p, p, _)` marks `p` as having
    /// a nonzero column; off-diagonal pairs are mirrored.
    pub fn from_pairs(
        universe: Arc<Universe>,
        pairs: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Self {
        let n = universe.projects().len();
        let mut nonzero = vec![false; n];
        let mut upper: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for ((a, b), s) in pairs {
            assert!(a < n && b < n, "pair ({a}, {b}) outside universe");
            assert!((0.0..=1.0).contains(&s), "similarity {s} outside [0, 1]");
            if a == b {
                nonzero[a] = s > 0.0;
                continue;
            }
            if s > 0.0 {
                nonzero[a] = true;
                nonzero[b] = true;
                upper[a.min(b)].insert(a.max(b), s);
            }
        }
        let upper = upper.into_iter().map(|m| m.into_iter().collect()).collect();
        Self::assemble(universe, nonzero, upper)
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn get_at(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return if self.nonzero[a] { 1.0 } else { 0.0 };
        }
        let list = &self.neighbors[a];
        match list.binary_search_by_key(&b, |&(i, _)| i) {
            Ok(i) => list[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn get(&self, a: &ProjectId, b: &ProjectId) -> f64 {
        match (
            self.universe.project_index(a),
            self.universe.project_index(b),
        ) {
            (Some(a), Some(b)) => self.get_at(a, b),
            _ => 0.0,
        }
    }

    /// Positive off-diagonal similarities of one project.
    pub fn neighbors(&self, project: usize) -> &[(usize, f64)] {
        &self.neighbors[project]
    }

    /// Number of stored off-diagonal pairs (each counted once).
    pub fn pair_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// `project_a,project_b,similarity` with `a <= b`; diagonal rows mark
    /// nonzero columns. Values use shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("project_a,project_b,similarity\n");
        for a in 0..self.neighbors.len() {
            if self.nonzero[a] {
                let p = self.universe.project(a);
                out.push_str(&format!("{p},{p},1\n"));
            }
            for &(b, s) in self.neighbors[a].iter().filter(|&&(b, _)| b > a) {
                out.push_str(&format!(
                    "{},{},{}\n",
                    self.universe.project(a),
                    self.universe.project(b),
                    s
                ));
            }
        }
        out
    }

    pub fn from_csv<R: Read>(universe: Arc<Universe>, reader: R) -> Result<Self, RecommendError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut pairs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let bad = |message: String| RecommendError::BadSimilarityFile { line, message };
            if rec.len() != 3 {
                return Err(bad(format!("expected 3 fields, got {}", rec.len())));
            }
            let index = |s: &str| {
                let id = ProjectId::parse_full_name(s).map_err(|e| bad(e.to_string()))?;
                universe
                    .project_index(&id)
                    .ok_or_else(|| bad(format!("unknown project {s}")))
            };
            let a = index(&rec[0])?;
            let b = index(&rec[1])?;
            let s: f64 = rec[2]
                .parse()
                .map_err(|_| bad(format!("bad value {:?}", &rec[2])))?;
            if !(0.0..=1.0).contains(&s) {
                return Err(bad(format!("similarity {s} outside [0, 1]")));
            }
            pairs.push(((a, b), s));
        }
        Ok(Self::from_pairs(universe, pairs))
    }
}

/// Whether predicted scores are divided by the similarity mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    #[default]
    Unnormalized,
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictedRating {
    pub developer: DeveloperId,
    pub project: ProjectId,
    pub score: f64,
}

fn finish(sum: f64, mass: f64, mode: Prediction) -> f64 {
    match mode {
        Prediction::Unnormalized => sum,
        Prediction::Normalized if mass > 0.0 => sum / mass,
        Prediction::Normalized => 0.0,
    }
}

fn lookup(d: &DeveloperId, ratings: &RatingMatrix) -> Result<usize, RecommendError> {
    ratings
        .universe()
        .developer_index(d)
        .ok_or_else(|| RecommendError::UnknownDeveloper(d.clone()))
}

/// Predicted rating of one unknown project for one developer.
pub fn predict_rating(
    d: &DeveloperId,
    unknown: &ProjectId,
    ratings: &RatingMatrix,
    sims: &SimilarityMatrix,
    mode: Prediction,
) -> Result<PredictedRating, RecommendError> {
    let di = lookup(d, ratings)?;
    let u = ratings
        .universe()
        .project_index(unknown)
        .ok_or_else(|| RecommendError::UnknownProject(unknown.clone()))?;
    if ratings.is_rated(di, u) {
        return Err(RecommendError::NotUnknown(Box::new((
            d.clone(),
            unknown.clone(),
        ))));
    }
    let (mut sum, mut mass) = (0.0, 0.0);
    for (j, r) in ratings.row(di) {
        let s = sims.get_at(j, u);
        if s > 0.0 {
            sum += r * s;
            mass += s;
        }
    }
    Ok(PredictedRating {
        developer: ratings.universe().developer(di).clone(),
        project: ratings.universe().project(u).clone(),
        score: finish(sum, mass, mode),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecommendWarning {
    /// The developer is not part of the rating matrix universe.
    UnknownDeveloper,
    /// The developer has no rated project under this metric.
    NoRatings,
    /// No unknown project reached a positive score.
    NoCandidates,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub project: ProjectId,
    pub score: f64,
}

/// Top-k unknown projects for one developer, best first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendationList {
    pub developer: DeveloperId,
    pub items: Vec<Recommendation>,
    pub warning: Option<RecommendWarning>,
}

impl RecommendationList {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn projects(&self) -> impl Iterator<Item = &ProjectId> {
        self.items.iter().map(|r| &r.project)
    }
}

/// Orders `(project, score)` by descending score then ascending full name.
/// Scores within [`TIE_TOLERANCE`] of a run's leading score form one tie
/// group; members are name-ordered and report the leading score.
pub fn rank_candidates(universe: &Universe, mut cands: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    cands.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| universe.project(a.0).cmp(universe.project(b.0)))
    });
    let mut out = Vec::with_capacity(cands.len());
    let mut start = 0;
    while start < cands.len() {
        let lead = cands[start].1;
        let mut end = start + 1;
        while end < cands.len() && lead - cands[end].1 <= TIE_TOLERANCE * lead.abs() {
            end += 1;
        }
        let mut group: Vec<usize> = cands[start..end].iter().map(|&(p, _)| p).collect();
        group.sort_by(|&a, &b| universe.project(a).cmp(universe.project(b)));
        out.extend(group.into_iter().map(|p| (p, lead)));
        start = end;
    }
    out
}

fn top_k_at(
    di: usize,
    ratings: &RatingMatrix,
    sims: &SimilarityMatrix,
    k: usize,
    mode: Prediction,
) -> RecommendationList {
    let universe = ratings.universe();
    let developer = universe.developer(di).clone();
    let known: Vec<(usize, f64)> = ratings.row(di).collect();
    if known.is_empty() {
        return RecommendationList {
            developer,
            items: Vec::new(),
            warning: Some(RecommendWarning::NoRatings),
        };
    }
    // Scatter known ratings through similarity lists. Each unknown project
    // accumulates its terms in known-project order, matching predict_rating.
    let mut acc: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for &(j, r) in &known {
        for &(u, s) in sims.neighbors(j) {
            if !ratings.is_rated(di, u) {
                let slot = acc.entry(u).or_insert((0.0, 0.0));
                slot.0 += r * s;
                slot.1 += s;
            }
        }
    }
    let cands: Vec<(usize, f64)> = acc
        .into_iter()
        .map(|(u, (sum, mass))| (u, finish(sum, mass, mode)))
        .filter(|&(_, score)| score > 0.0)
        .collect();
    let mut ranked = rank_candidates(universe, cands);
    ranked.truncate(k);
    let warning = ranked.is_empty().then_some(RecommendWarning::NoCandidates);
    RecommendationList {
        developer,
        items: ranked
            .into_iter()
            .map(|(p, score)| Recommendation {
                project: universe.project(p).clone(),
                score,
            })
            .collect(),
        warning,
    }
}

/// Top-k unknown projects with positive predicted score.
pub fn recommend_top_k(
    d: &DeveloperId,
    ratings: &RatingMatrix,
    sims: &SimilarityMatrix,
    k: usize,
    mode: Prediction,
) -> Result<RecommendationList, RecommendError> {
    if k == 0 {
        return Err(RecommendError::ZeroK);
    }
    match ratings.universe().developer_index(d) {
        Some(di) => Ok(top_k_at(di, ratings, sims, k, mode)),
        None => Ok(RecommendationList {
            developer: d.clone(),
            items: Vec::new(),
            warning: Some(RecommendWarning::UnknownDeveloper),
        }),
    }
}

/// Recommendations for every developer of the universe, in developer order.
pub fn recommend_all(
    ratings: &RatingMatrix,
    sims: &SimilarityMatrix,
    k: usize,
    mode: Prediction,
) -> Result<Vec<RecommendationList>, RecommendError> {
    if k == 0 {
        return Err(RecommendError::ZeroK);
    }
    Ok((0..ratings.universe().developers().len())
        .into_par_iter()
        .map(|di| top_k_at(di, ratings, sims, k, mode))
        .collect())
}

/// `developer,rank,project,score` rows, rank starting at 1.
pub fn recommendations_csv(lists: &[RecommendationList]) -> String {
    let mut out = String::from("developer,rank,project,score\n");
    for list in lists {
        for (i, rec) in list.items.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{:.6}\n",
                list.developer,
                i + 1,
                rec.project,
                rec.score
            ));
        }
    }
    out
}
