//! Declarative run configuration. Values from a TOML file are overridden by
//! command-line flags.

use std::path::{Path, PathBuf};

use devrank_core::synth::{CountDistribution, SynthConfig};
use devrank_core::Format;
use serde::Deserialize;

use crate::CliError;

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub input: Vec<PathBuf>,
    pub format: Option<Format>,
    pub metrics: Option<String>,
    pub k: Option<usize>,
    pub scale_lo: Option<f64>,
    pub scale_hi: Option<f64>,
    pub normalize_prediction: Option<bool>,
    pub out: Option<PathBuf>,
    pub cache: Option<bool>,
    pub skip_invalid: Option<bool>,
    pub synth: Option<SynthConfig>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Resolved settings for the pipeline commands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub format: Option<Format>,
    pub metrics: String,
    pub k: usize,
    pub scale_lo: f64,
    pub scale_hi: f64,
    pub normalize_prediction: bool,
    pub out: PathBuf,
    pub cache: bool,
    pub skip_invalid: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            format: None,
            metrics: "all".into(),
            k: 5,
            scale_lo: 0.0,
            scale_hi: 10.0,
            normalize_prediction: false,
            out: PathBuf::from("devrank-out"),
            cache: true,
            skip_invalid: false,
        }
    }
}

/// Flag values as parsed; `None` means "not given".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub inputs: Vec<PathBuf>,
    pub format: Option<Format>,
    pub metrics: Option<String>,
    pub k: Option<usize>,
    pub scale_lo: Option<f64>,
    pub scale_hi: Option<f64>,
    pub normalize_prediction: bool,
    pub out: Option<PathBuf>,
    pub no_cache: bool,
    pub skip_invalid: bool,
}

impl RunConfig {
    pub fn resolve(
        file: &FileConfig,
        flags: Overrides,
        defaults: RunConfig,
    ) -> Result<Self, CliError> {
        let cfg = RunConfig {
            inputs: if flags.inputs.is_empty() {
                file.input.clone()
            } else {
                flags.inputs
            },
            format: flags.format.or(file.format),
            metrics: flags
                .metrics
                .or(file.metrics.clone())
                .unwrap_or(defaults.metrics),
            k: flags.k.or(file.k).unwrap_or(defaults.k),
            scale_lo: flags
                .scale_lo
                .or(file.scale_lo)
                .unwrap_or(defaults.scale_lo),
            scale_hi: flags
                .scale_hi
                .or(file.scale_hi)
                .unwrap_or(defaults.scale_hi),
            normalize_prediction: flags.normalize_prediction
                || file
                    .normalize_prediction
                    .unwrap_or(defaults.normalize_prediction),
            out: flags.out.or(file.out.clone()).unwrap_or(defaults.out),
            cache: !flags.no_cache && file.cache.unwrap_or(defaults.cache),
            skip_invalid: flags.skip_invalid || file.skip_invalid.unwrap_or(defaults.skip_invalid),
        };
        if cfg.inputs.is_empty() {
            return Err(CliError::Config("no --input given".into()));
        }
        if cfg.k == 0 {
            return Err(CliError::Config("--k must be at least 1".into()));
        }
        if !(cfg.scale_hi > cfg.scale_lo && cfg.scale_lo >= 0.0) {
            return Err(CliError::Config(format!(
                "scale range [{}, {}] must satisfy 0 <= lo < hi",
                cfg.scale_lo, cfg.scale_hi
            )));
        }
        Ok(cfg)
    }
}

/// Synth flags; unset ones fall back to the config file, then defaults.
#[derive(Debug, Clone, Default)]
pub struct SynthOverrides {
    pub seed: Option<u64>,
    pub developers: Option<usize>,
    pub projects: Option<usize>,
    pub owners: Option<usize>,
    pub density: Option<f64>,
    pub watch_rate: Option<f64>,
    pub kinds_per_pair: Option<usize>,
    pub count_max: Option<u64>,
    pub zipf: Option<f64>,
}

pub fn resolve_synth(file: &FileConfig, flags: SynthOverrides) -> Result<SynthConfig, CliError> {
    let mut cfg = file.synth.clone().unwrap_or_default();
    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = flags.developers {
        cfg.developers = v;
    }
    if let Some(v) = flags.projects {
        cfg.projects = v;
    }
    if flags.owners.is_some() {
        cfg.owners = flags.owners;
    }
    if let Some(v) = flags.density {
        cfg.density = v;
    }
    if let Some(v) = flags.watch_rate {
        cfg.watch_rate = v;
    }
    if let Some(v) = flags.kinds_per_pair {
        cfg.kinds_per_pair = v;
    }
    let current_max = match cfg.counts {
        CountDistribution::Uniform { max } | CountDistribution::Zipf { max, .. } => max,
    };
    let max = flags.count_max.unwrap_or(current_max);
    cfg.counts = match (flags.zipf, &cfg.counts) {
        (Some(s), _) => CountDistribution::Zipf { s, max },
        (None, CountDistribution::Zipf { s, .. }) => CountDistribution::Zipf { s: *s, max },
        (None, CountDistribution::Uniform { .. }) => CountDistribution::Uniform { max },
    };
    cfg.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}
