//! Harness commands behind the `shedline` binary.
//!
//! Each command returns its textual output and any warnings; the binary is
//! responsible for printing and for mapping [`CliError`] onto exit codes.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineKind, RandomShed, Shedder};
use crate::evaluators::{EvaluatorSpec, TrustEvaluator};
use crate::load_monitor::{calibrate_capacity, CalibrationSample};
use crate::model::{Clock, LoadParameters, ModelError, Url, VirtualClock, WallClock};
use crate::trust_cache::{CacheError, TrustCache};
use crate::workload::{
    compare_engines, generate_workload, universe_url, ClockMode, CompareOptions, WorkloadError,
    WorkloadSpec,
};

/// Environment variable that overrides `workload.seed`.
pub const SEED_ENV: &str = "SHEDLINE_SEED";

/// Printed by `calibrate` when evaluation is free and capacity is unbounded.
pub const MAX_CAPACITY_SENTINEL: usize = usize::MAX;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<CacheError> for CliError {
    fn from(e: CacheError) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn default_engines() -> Vec<EngineKind> {
    vec![
        EngineKind::Proposed,
        EngineKind::Full,
        EngineKind::RandomShed,
    ]
}

/// The JSON harness configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    pub params: LoadParameters,
    pub evaluator: EvaluatorSpec,
    pub workload: WorkloadSpec,
    #[serde(default = "default_engines")]
    pub engines: Vec<EngineKind>,
    #[serde(default)]
    pub random_shed: RandomShed,
    #[serde(default)]
    pub shared_cache: bool,
    /// Relative paths resolve against the config file's directory.
    #[serde(default)]
    pub cache_path: Option<PathBuf>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl HarnessConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => CliError::Config(format!("{}: {e}", path.display())),
            _ => CliError::io(path, e),
        })?;
        let mut config: HarnessConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.cache_path = config.cache_path.map(|p| base.join(p));
        config.output = config.output.map(|p| base.join(p));
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(|e| match e {
            ModelError::InvalidParameter { field, reason } => {
                CliError::Config(format!("params.{field}: {reason}"))
            }
            other => CliError::Config(format!("params: {other}")),
        })?;
        self.workload.validate().map_err(|e| match e {
            WorkloadError::InvalidSpec { field, reason } => {
                CliError::Config(format!("workload.{field}: {reason}"))
            }
            other => CliError::Config(format!("workload: {other}")),
        })?;
        if self.engines.is_empty() {
            return Err(CliError::Config(
                "engines: must list at least one engine".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.random_shed.shed_fraction) {
            return Err(CliError::Config(
                "random_shed.shed_fraction: must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Non-fatal configuration problems.
    pub fn warnings(&self) -> Vec<String> {
        let per_item = self.evaluator.build().max_cost();
        let normal_cost = per_item.saturating_mul(self.params.u_capacity as u64);
        let mut warnings = Vec::new();
        if self.params.deadline_overload < normal_cost {
            warnings.push(format!(
                "params.deadline_overload_us ({}) is below u_capacity x per-item cost ({}); \
                 the drop queue gets no evaluation budget",
                self.params.deadline_overload.as_micros(),
                normal_cost.as_micros()
            ));
        }
        warnings
    }
}

/// Command-line overrides shared by all commands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub wall_clock: bool,
    /// Raw value of [`SEED_ENV`], if set.
    pub seed: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    /// Body for stdout when no output file was written.
    pub stdout: String,
    pub written_to: Option<PathBuf>,
    pub warnings: Vec<String>,
    /// Informational lines for stderr.
    pub notes: Vec<String>,
}

/// `run <config>`: compares the configured engines over the generated workload.
pub fn cmd_run(config_path: &Path, overrides: &Overrides) -> Result<CommandOutput, CliError> {
    let mut config = HarnessConfig::load(config_path)?;
    if let Some(raw) = &overrides.seed {
        config.workload.seed = raw.trim().parse().map_err(|_| {
            CliError::Config(format!("{SEED_ENV}: `{raw}` is not an unsigned integer"))
        })?;
    }
    let warnings = config.warnings();
    let workload =
        generate_workload(&config.workload).map_err(|e| CliError::Config(e.to_string()))?;
    let evaluator = config.evaluator.build();
    let initial = match &config.cache_path {
        Some(path) => Some(TrustCache::load(path, true)?),
        None => None,
    };
    let options = CompareOptions {
        random_shed: config.random_shed,
        shared_cache: config.shared_cache,
        initial_cache: initial.as_ref(),
        clock: if overrides.wall_clock {
            ClockMode::Wall
        } else {
            ClockMode::Virtual
        },
    };
    let table = compare_engines(
        &workload,
        &config.params,
        &evaluator,
        &config.engines,
        &options,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let notes = table
        .speedup
        .map(|s| format!("speedup (full / proposed mean response time): {s:.3}"))
        .into_iter()
        .collect();
    let body = match overrides.format.unwrap_or(config.format) {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Json => table.to_json(),
    };
    emit(
        body,
        overrides.output.clone().or(config.output),
        warnings,
        notes,
    )
}

/// `calibrate <config> --samples N`: measures the mean evaluation cost and
/// recommends a `u_capacity`.
pub fn cmd_calibrate(
    config_path: &Path,
    samples: usize,
    safety_factor: f64,
    overrides: &Overrides,
) -> Result<CommandOutput, CliError> {
    if samples < 1 {
        return Err(CliError::Config("--samples: must be at least 1".into()));
    }
    if !(safety_factor > 0.0 && safety_factor <= 1.0) {
        return Err(CliError::Config("--safety: must lie in (0, 1]".into()));
    }
    let config = HarnessConfig::load(config_path)?;
    let evaluator = config.evaluator.build();
    let urls: Vec<Url> = match &config.evaluator {
        EvaluatorSpec::Scripted { script } if !script.is_empty() => script
            .iter()
            .cycle()
            .take(samples)
            .map(|e| e.url.clone())
            .collect(),
        _ => (0..samples).map(universe_url).collect(),
    };
    let clock: Box<dyn Clock> = if overrides.wall_clock {
        Box::new(WallClock::new())
    } else {
        Box::new(VirtualClock::new())
    };
    let start = clock.now();
    for url in &urls {
        evaluator
            .evaluate(url, clock.as_ref())
            .map_err(|e| CliError::Config(format!("evaluator: {e}")))?;
    }
    let total = clock.now().since(start);

    let mut warnings = Vec::new();
    let capacity = match CalibrationSample::from_total(total, samples) {
        Ok(sample) => calibrate_capacity(&sample, config.params.deadline_normal, safety_factor),
        Err(_) => {
            warnings.push("measured evaluation cost is zero; capacity is unbounded".to_owned());
            MAX_CAPACITY_SENTINEL
        }
    };
    Ok(CommandOutput {
        stdout: format!("{capacity}\n"),
        written_to: None,
        warnings,
        notes: Vec::new(),
    })
}

/// `score <config> <urls_file>`: scores one batch through the shedder using
/// the configured cache, writing `url<TAB>score<TAB>provenance` lines.
pub fn cmd_score(
    config_path: &Path,
    urls_file: &Path,
    overrides: &Overrides,
) -> Result<CommandOutput, CliError> {
    let config = HarnessConfig::load(config_path)?;
    let text = fs::read_to_string(urls_file).map_err(|e| CliError::io(urls_file, e))?;
    let urls = read_url_list(&text);

    let cache = match &config.cache_path {
        Some(path) => TrustCache::load(path, true)?,
        None => TrustCache::new(),
    };
    let evaluator = config.evaluator.build();
    let clock: Box<dyn Clock> = if overrides.wall_clock {
        Box::new(WallClock::new())
    } else {
        Box::new(VirtualClock::new())
    };
    let report = Shedder::new(&config.params, &cache, &evaluator, clock.as_ref())
        .process_batch(&urls)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(path) = &config.cache_path {
        cache.save(path)?;
    }

    let mut body = String::new();
    for item in &report.items {
        body.push_str(&format!(
            "{}\t{}\t{}\n",
            item.url, item.score, item.provenance
        ));
    }
    emit(
        body,
        overrides.output.clone(),
        config.warnings(),
        Vec::new(),
    )
}

/// One URL per line; blank lines skipped, duplicates (after normalization)
/// keep their first position.
pub fn read_url_list(text: &str) -> Vec<Url> {
    let mut seen = HashSet::new();
    text.lines()
        .filter_map(|line| Url::parse(line).ok())
        .filter(|url| seen.insert(url.clone()))
        .collect()
}

fn emit(
    body: String,
    output: Option<PathBuf>,
    warnings: Vec<String>,
    notes: Vec<String>,
) -> Result<CommandOutput, CliError> {
    match output {
        Some(path) => {
            fs::write(&path, &body).map_err(|e| CliError::io(&path, e))?;
            Ok(CommandOutput {
                stdout: String::new(),
                written_to: Some(path),
                warnings,
                notes,
            })
        }
        None => Ok(CommandOutput {
            stdout: body,
            written_to: None,
            warnings,
            notes,
        }),
    }
}
