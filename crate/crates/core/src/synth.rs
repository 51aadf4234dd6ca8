//! Seeded synthetic activity datasets.
//!
//! Output depends only on the config: ChaCha8 seeded with `seed_from_u64`,
//! cells visited in index order. The RNG identifier is recorded in the
//! sidecar written next to each dataset.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{ActivityEvent, EventKind, EventStore, EventStoreBuilder};
use crate::ids::{DeveloperId, ProjectId};

pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CountDistribution {
    /// Uniform on `1..=max`.
    Uniform { max: u64 },
    /// Zipf with exponent `s` over `1..=max`.
    Zipf { s: f64, max: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub developers: usize,
    pub projects: usize,
    /// Distinct project owners; projects are assigned round-robin.
    /// Defaults to one owner per four projects.
    pub owners: Option<usize>,
    /// Fraction of developer x project cells with activity.
    pub density: f64,
    pub kind_weights: BTreeMap<EventKind, f64>,
    /// Kind draws per active cell (repeats are summed on ingestion).
    pub kinds_per_pair: usize,
    /// Independent probability that a developer watches a project.
    pub watch_rate: f64,
    pub counts: CountDistribution,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let mut kind_weights: BTreeMap<EventKind, f64> = EventKind::ALL
            .iter()
            .filter(|k| k.is_activity())
            .map(|&k| (k, 1.0))
            .collect();
        kind_weights.insert(EventKind::Star, 0.5);
        kind_weights.insert(EventKind::Create, 0.1);
        SynthConfig {
            seed: 42,
            developers: 20,
            projects: 60,
            owners: None,
            density: 0.05,
            kind_weights,
            kinds_per_pair: 2,
            watch_rate: 0.05,
            counts: CountDistribution::Uniform { max: 5 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("developers and projects must be at least 1")]
    EmptyGrid,
    #[error("density must be in (0, 1], got {0}")]
    Density(f64),
    #[error("watch rate must be in [0, 1], got {0}")]
    WatchRate(f64),
    #[error("kind weights must be finite, non-negative and not all zero")]
    Weights,
    #[error("watch edges come from watch_rate, not kind weights")]
    WatchWeight,
    #[error("kinds_per_pair must be at least 1")]
    KindsPerPair,
    #[error("owners must be between 1 and the project count")]
    Owners,
    #[error("invalid count distribution: {0}")]
    Counts(String),
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.developers == 0 || self.projects == 0 {
            return Err(SynthError::EmptyGrid);
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(SynthError::Density(self.density));
        }
        if !(0.0..=1.0).contains(&self.watch_rate) {
            return Err(SynthError::WatchRate(self.watch_rate));
        }
        if self.kind_weights.contains_key(&EventKind::Watch) {
            return Err(SynthError::WatchWeight);
        }
        if self
            .kind_weights
            .values()
            .any(|w| !w.is_finite() || *w < 0.0)
            || !self.kind_weights.values().any(|w| *w > 0.0)
        {
            return Err(SynthError::Weights);
        }
        if self.kinds_per_pair == 0 {
            return Err(SynthError::KindsPerPair);
        }
        if matches!(self.owners, Some(o) if o == 0 || o > self.projects) {
            return Err(SynthError::Owners);
        }
        match self.counts {
            CountDistribution::Uniform { max: 0 } | CountDistribution::Zipf { max: 0, .. } => {
                Err(SynthError::Counts("max must be at least 1".into()))
            }
            CountDistribution::Zipf { s, .. } if !(s.is_finite() && s > 0.0) => Err(
                SynthError::Counts(format!("zipf exponent must be > 0, got {s}")),
            ),
            _ => Ok(()),
        }
    }

    fn owner_count(&self) -> usize {
        self.owners.unwrap_or(self.projects.div_ceil(4))
    }

    /// Target number of active cells.
    pub fn active_pairs(&self) -> usize {
        let cells = self.developers * self.projects;
        ((self.density * cells as f64).round() as usize).clamp(1, cells)
    }
}

fn width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len()
}

enum Counts {
    Uniform(u64),
    Zipf(Zipf<f64>),
}

impl Counts {
    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            Counts::Uniform(max) => rng.random_range(1..=*max),
            Counts::Zipf(z) => z.sample(rng) as u64,
        }
    }
}

/// Raw events in generation order: activity cells, then watch edges.
pub fn generate_events(cfg: &SynthConfig) -> Result<Vec<ActivityEvent>, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (dw, pw) = (width(cfg.developers), width(cfg.projects));
    let ow = width(cfg.owner_count());
    let devs: Vec<DeveloperId> = (0..cfg.developers)
        .map(|i| DeveloperId::new(format!("dev{i:0dw$}")).expect("valid id"))
        .collect();
    let projs: Vec<ProjectId> = (0..cfg.projects)
        .map(|j| {
            ProjectId::new(
                format!("owner{:0ow$}", j % cfg.owner_count()),
                format!("repo{j:0pw$}"),
            )
            .expect("valid id")
        })
        .collect();

    let kinds: Vec<(EventKind, f64)> = cfg.kind_weights.iter().map(|(&k, &w)| (k, w)).collect();
    let picker =
        WeightedIndex::new(kinds.iter().map(|(_, w)| *w)).map_err(|_| SynthError::Weights)?;
    let counts = match cfg.counts {
        CountDistribution::Uniform { max } => Counts::Uniform(max),
        CountDistribution::Zipf { s, max } => {
            Counts::Zipf(Zipf::new(max as f64, s).map_err(|e| SynthError::Counts(e.to_string()))?)
        }
    };

    let cells = cfg.developers * cfg.projects;
    let mut active = rand::seq::index::sample(&mut rng, cells, cfg.active_pairs()).into_vec();
    active.sort_unstable();

    let mut events = Vec::new();
    for cell in active {
        let (d, p) = (cell / cfg.projects, cell % cfg.projects);
        for _ in 0..cfg.kinds_per_pair {
            let kind = kinds[picker.sample(&mut rng)].0;
            events.push(ActivityEvent {
                developer: devs[d].clone(),
                project: projs[p].clone(),
                kind,
                count: counts.sample(&mut rng),
            });
        }
    }
    if cfg.watch_rate > 0.0 {
        for cell in 0..cells {
            if rng.random::<f64>() < cfg.watch_rate {
                events.push(ActivityEvent {
                    developer: devs[cell / cfg.projects].clone(),
                    project: projs[cell % cfg.projects].clone(),
                    kind: EventKind::Watch,
                    count: 1,
                });
            }
        }
    }
    Ok(events)
}

pub fn generate(cfg: &SynthConfig) -> Result<EventStore, SynthError> {
    let mut builder = EventStoreBuilder::new();
    for ev in generate_events(cfg)? {
        builder.push(ev).expect("generated counts are positive");
    }
    Ok(builder.build())
}

/// Events in the standard JSONL input format.
pub fn events_jsonl(events: &[ActivityEvent]) -> String {
    let mut out = String::new();
    for ev in events {
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

#[derive(Serialize)]
struct Sidecar<'a> {
    generator: &'static str,
    version: &'static str,
    rng: &'static str,
    active_pairs: usize,
    config: &'a SynthConfig,
}

/// Config record stored next to a generated dataset.
pub fn sidecar_json(cfg: &SynthConfig) -> String {
    let sidecar = Sidecar {
        generator: "devrank-synth",
        version: env!("CARGO_PKG_VERSION"),
        rng: RNG_ALGORITHM,
        active_pairs: cfg.active_pairs(),
        config: cfg,
    };
    let mut s = serde_json::to_string_pretty(&sidecar).expect("serializable");
    s.push('\n');
    s
}
