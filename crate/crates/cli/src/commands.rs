use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use devrank_core::evaluation::{ratings_for, run_leaderboard_with};
use devrank_core::metrics::select;
use devrank_core::recommend::{recommend_top_k, recommendations_csv, RecommendWarning};
use devrank_core::synth::{events_jsonl, generate_events, sidecar_json};
use devrank_core::{
    breakdown_jsonl, hit_score, leaderboard_csv, leaderboard_markdown, DeveloperId, EvalOptions,
    EventStore, EventStoreBuilder, Format, MetricSpec, OnInvalid, Prediction, ProjectId,
    SimilarityMatrix,
};

use crate::config::{resolve_synth, FileConfig, Overrides, RunConfig, SynthOverrides};
use crate::output::{write_atomic, SimilarityCache};
use crate::CliError;

fn load_store(cfg: &RunConfig) -> Result<EventStore, CliError> {
    let store = read_inputs(cfg)?;
    if store.is_empty() {
        return Err(CliError::Empty("input contains no events".into()));
    }
    Ok(store)
}

fn read_inputs(cfg: &RunConfig) -> Result<EventStore, CliError> {
    let on_invalid = if cfg.skip_invalid {
        OnInvalid::SkipAndWarn
    } else {
        OnInvalid::FailFast
    };
    let mut builder = EventStoreBuilder::new();
    for path in &cfg.inputs {
        let file = File::open(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        let format = cfg.format.unwrap_or_else(|| Format::from_path(path));
        let issues = builder
            .ingest(BufReader::new(file), format, on_invalid)
            .map_err(|e| match e {
                devrank_core::ParseError::Io(io) => CliError::io(path.display().to_string(), io),
                other => CliError::Parse(format!("{}: {other}", path.display())),
            })?;
        for issue in issues {
            log::warn!("{}: skipped {issue}", path.display());
        }
    }
    Ok(builder.build())
}

fn options(cfg: &RunConfig) -> EvalOptions {
    EvalOptions {
        k: cfg.k,
        lo: cfg.scale_lo,
        hi: cfg.scale_hi,
        prediction: if cfg.normalize_prediction {
            Prediction::Normalized
        } else {
            Prediction::Unnormalized
        },
    }
}

fn specs(list: &str) -> Result<Vec<MetricSpec>, CliError> {
    select(list).map_err(|e| CliError::Config(e.to_string()))
}

pub fn ingest(file: &FileConfig, flags: Overrides) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(file, flags, RunConfig::default())?;
    let store = read_inputs(&cfg)?;
    let path = cfg.out.join("store.jsonl");
    write_atomic(&path, &store.to_jsonl())?;
    let s = store.summary();
    println!("developers   {}", s.developers);
    println!("projects     {}", s.projects);
    println!("records      {}", s.records);
    println!("events       {}", s.events);
    println!("active pairs {}", s.active_pairs);
    println!("watch edges  {}", s.watch_edges);
    println!("sparsity     {:.4}", s.sparsity);
    println!("digest       {}", store.digest());
    println!("wrote {}", path.display());
    if store.is_empty() {
        return Err(CliError::Empty("input contains no events".into()));
    }
    Ok(())
}

pub fn leaderboard(file: &FileConfig, flags: Overrides) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(file, flags, RunConfig::default())?;
    let specs = specs(&cfg.metrics)?;
    let store = load_store(&cfg)?;
    let opts = options(&cfg);
    let cache = SimilarityCache::new(cfg.out.join("cache"), &store.digest(), opts.lo, opts.hi);
    let board = if cfg.cache {
        run_leaderboard_with(&store, &specs, &opts, &|r| cache.get_or_compute(r))
    } else {
        run_leaderboard_with(&store, &specs, &opts, &SimilarityMatrix::from_ratings)
    }
    .map_err(|e| CliError::Other(e.to_string()))?;
    for e in &board.evaluations {
        if !e.skipped.is_empty() {
            log::info!(
                "{}: skipped {} developers without watched projects",
                e.row.metric,
                e.skipped.len()
            );
        }
    }
    let markdown = leaderboard_markdown(&board.rows);
    write_atomic(
        &cfg.out.join("leaderboard.csv"),
        &leaderboard_csv(&board.rows),
    )?;
    write_atomic(&cfg.out.join("leaderboard.md"), &markdown)?;
    write_atomic(
        &cfg.out.join("breakdown.jsonl"),
        &breakdown_jsonl(&board.evaluations),
    )?;
    print!("{markdown}");
    Ok(())
}

pub fn recommend(file: &FileConfig, flags: Overrides, developer: &str) -> Result<(), CliError> {
    let write_out = flags.out.is_some() || file.out.is_some();
    let defaults = RunConfig {
        metrics: "comment".into(),
        ..RunConfig::default()
    };
    let cfg = RunConfig::resolve(file, flags, defaults)?;
    let developer =
        DeveloperId::new(developer).map_err(|e| CliError::Config(format!("--developer: {e}")))?;
    let mut specs = specs(&cfg.metrics)?;
    if specs.len() != 1 {
        return Err(CliError::Config(format!(
            "recommend takes exactly one metric, {:?} selects {}",
            cfg.metrics,
            specs.len()
        )));
    }
    let spec = specs.remove(0);
    if !spec.is_applicable() {
        return Err(CliError::Config(format!(
            "metric {spec} has no binary form"
        )));
    }
    let store = load_store(&cfg)?;
    let Some(di) = store.universe().developer_index(&developer) else {
        return Err(CliError::Config(format!("unknown developer {developer}")));
    };
    let opts = options(&cfg);
    let ratings =
        ratings_for(&store, &spec, opts.lo, opts.hi).map_err(|e| CliError::Other(e.to_string()))?;
    let sims = SimilarityMatrix::from_ratings(&ratings);
    let list = recommend_top_k(&developer, &ratings, &sims, opts.k, opts.prediction)
        .map_err(|e| CliError::Other(e.to_string()))?;
    let login = store.universe().developer(di).clone();
    let watched: BTreeSet<ProjectId> = store.watched(&developer);
    let owners: BTreeSet<&str> = watched.iter().map(ProjectId::owner_key).collect();
    let width = list
        .projects()
        .map(|p| p.to_string().len())
        .max()
        .unwrap_or(0)
        .max("project".len());
    println!("recommendations for {login} ({spec}, k={})", opts.k);
    println!(
        "{:>4}  {:<width$}  {:>12}  {:^9}  {:^5}",
        "rank", "project", "score", "full-name", "owner"
    );
    if list.is_empty() {
        let why = match list.warning {
            Some(RecommendWarning::NoRatings) => "has no activity under this metric",
            _ => "has no unknown project with a positive score",
        };
        return Err(CliError::Empty(format!("{login} {why} ({spec})")));
    }
    for (i, rec) in list.items.iter().enumerate() {
        let full = watched.contains(&rec.project);
        let owner = !full && owners.contains(rec.project.owner_key());
        println!(
            "{:>4}  {:<width$}  {:>12.6}  {:^9}  {:^5}",
            i + 1,
            rec.project.to_string(),
            rec.score,
            if full { "x" } else { "" },
            if owner { "x" } else { "" },
        );
    }
    match hit_score(&list, &watched, opts.k) {
        Ok(b) => println!(
            "hit {:.1} full={} owner={} watched={}",
            b.score, b.hit_fullname, b.hit_owner, b.num_watched
        ),
        Err(_) => println!("hit n/a (no watched projects)"),
    }
    if write_out {
        let path = cfg.out.join("recommendations.csv");
        write_atomic(&path, &recommendations_csv(std::slice::from_ref(&list)))?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

pub fn synth(
    file: &FileConfig,
    flags: SynthOverrides,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = resolve_synth(file, flags)?;
    let out = out
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from("devrank-out"));
    let events = generate_events(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let events_path = out.join("events.jsonl");
    write_atomic(&events_path, &events_jsonl(&events))?;
    write_atomic(&out.join("events.config.json"), &sidecar_json(&cfg))?;
    println!(
        "wrote {} ({} records, {} active pairs)",
        events_path.display(),
        events.len(),
        cfg.active_pairs()
    );
    Ok(())
}
