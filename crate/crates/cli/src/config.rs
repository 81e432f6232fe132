//! Pipeline configuration: a `key=value` file overlaid by command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dsr_core::eval::{Gain, MetricConfig, PrecisionDenominator, ReportConfig};
use dsr_core::Regime;
use serde::Serialize;

use crate::UsageError;

pub const DEFAULT_CUTOFFS: [usize; 2] = [5, 10];
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Resolved settings shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub vocab: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub collection: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub regimes: Vec<Regime>,
    pub cutoffs: Vec<usize>,
    pub alpha: f64,
    pub workers: Option<usize>,
    pub skip_bad_records: bool,
    pub gain: Gain,
    pub precision_denominator: PrecisionDenominator,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            vocab: None,
            corpus: None,
            vectors: None,
            scores: None,
            collection: None,
            out: None,
            regimes: vec![Regime::Keyword, Regime::FullText],
            cutoffs: DEFAULT_CUTOFFS.to_vec(),
            alpha: DEFAULT_ALPHA,
            workers: None,
            skip_bad_records: false,
            gain: Gain::default(),
            precision_denominator: PrecisionDenominator::default(),
        }
    }
}

/// Raw string settings, keyed by flag name without the leading dashes.
pub type Settings = BTreeMap<String, String>;

pub const KEYS: [&str; 13] = [
    "vocab",
    "corpus",
    "vectors",
    "scores",
    "collection",
    "out",
    "regime",
    "cutoffs",
    "alpha",
    "workers",
    "skip-bad-records",
    "gain",
    "precision-denominator",
];

/// Parses `key=value` lines; `#` starts a comment, blank lines are ignored.
pub fn parse_settings(text: &str) -> Result<Settings, UsageError> {
    let mut out = Settings::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| UsageError(format!("config line {}: expected key=value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(UsageError(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

pub fn load_settings(path: &Path) -> Result<Settings, UsageError> {
    let text = fs::read_to_string(path).map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
    parse_settings(&text)
}

fn parse_bool(key: &str, v: &str) -> Result<bool, UsageError> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(UsageError(format!("{key}: expected a boolean, got `{v}`"))),
    }
}

pub fn parse_cutoffs(v: &str) -> Result<Vec<usize>, UsageError> {
    let mut cutoffs = v
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| UsageError(format!("cutoffs: `{}` is not a positive integer", s.trim())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    cutoffs.sort_unstable();
    cutoffs.dedup();
    Ok(cutoffs)
}

pub fn parse_regimes(v: &str) -> Result<Vec<Regime>, UsageError> {
    let mut regimes = Vec::new();
    for part in v.split(',') {
        let r: Regime = part.trim().parse().map_err(|e| UsageError(format!("regime: {e}")))?;
        if !regimes.contains(&r) {
            regimes.push(r);
        }
    }
    Ok(regimes)
}

impl PipelineConfig {
    /// Applies settings in order; later layers override earlier ones.
    pub fn from_layers<'a>(layers: impl IntoIterator<Item = &'a Settings>) -> Result<Self, UsageError> {
        let mut merged = Settings::new();
        for layer in layers {
            merged.extend(layer.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        let mut c = PipelineConfig::default();
        for (key, v) in &merged {
            let path = || Some(PathBuf::from(v));
            match key.as_str() {
                "vocab" => c.vocab = path(),
                "corpus" => c.corpus = path(),
                "vectors" => c.vectors = path(),
                "scores" => c.scores = path(),
                "collection" => c.collection = path(),
                "out" => c.out = path(),
                "regime" => c.regimes = parse_regimes(v)?,
                "cutoffs" => c.cutoffs = parse_cutoffs(v)?,
                "alpha" => {
                    c.alpha = v
                        .parse()
                        .map_err(|_| UsageError(format!("alpha: `{v}` is not a number")))?
                }
                "workers" => {
                    c.workers = Some(
                        v.parse::<usize>()
                            .ok()
                            .filter(|&w| w > 0)
                            .ok_or_else(|| UsageError(format!("workers: `{v}` is not a positive integer")))?,
                    )
                }
                "skip-bad-records" => c.skip_bad_records = parse_bool(key, v)?,
                "gain" => c.gain = v.parse().map_err(UsageError)?,
                "precision-denominator" => c.precision_denominator = v.parse().map_err(UsageError)?,
                other => return Err(UsageError(format!("unknown setting `{other}`"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        if self.cutoffs.is_empty() {
            return Err(UsageError("at least one cutoff is required".into()));
        }
        if self.cutoffs.windows(2).any(|w| w[0] >= w[1]) || self.cutoffs[0] == 0 {
            return Err(UsageError("cutoffs must be positive and strictly increasing".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(UsageError(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.regimes.is_empty() {
            return Err(UsageError("at least one regime is required".into()));
        }
        Ok(())
    }

    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            gain: self.gain,
            precision_denominator: self.precision_denominator,
        }
    }

    pub fn report_config(&self) -> ReportConfig {
        ReportConfig::new(self.cutoffs.clone(), self.alpha, self.metric_config())
    }

    /// The path for `what`, or a usage error naming the missing flag.
    pub fn require<'a>(&self, path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, UsageError> {
        let p = path
            .as_deref()
            .ok_or_else(|| UsageError(format!("--{flag} is required for this command")))?;
        if !p.exists() {
            return Err(UsageError(format!("--{flag}: {} does not exist", p.display())));
        }
        Ok(p)
    }

    /// The output directory, created if missing.
    pub fn out_dir(&self) -> Result<Option<&Path>, std::io::Error> {
        match self.out.as_deref() {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                Ok(Some(dir))
            }
            None => Ok(None),
        }
    }
}
