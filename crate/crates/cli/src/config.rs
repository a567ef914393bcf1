//! Run configuration file and `--set key=value` overrides.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use mdattack::{ClassLabel, CorpusSpec, Scheme};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Everything a run can be configured with. Missing keys take defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Waveform, noise, attack, STFT and corpus layout.
    pub spec: CorpusSpec,
    pub simulate: SimulateConfig,
    /// Worker threads for `corpus`; `null` uses every core.
    pub jobs: Option<usize>,
}

/// The single cell produced by `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub class: ClassLabel,
    pub scheme: Scheme,
    pub index: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            class: ClassLabel::Ped,
            scheme: Scheme::None,
            index: 0,
        }
    }
}

pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_spec(path: &Path) -> anyhow::Result<CorpusSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Applies `dotted.key=value` overrides. Keys must already exist in the
/// serialized config; values are parsed as JSON, falling back to a bare
/// string (`simulate.class=PED`).
pub fn apply_overrides(cfg: &RunConfig, overrides: &[String]) -> anyhow::Result<RunConfig> {
    if overrides.is_empty() {
        return Ok(cfg.clone());
    }
    let mut tree = serde_json::to_value(cfg)?;
    for item in overrides {
        let Some((key, raw)) = item.split_once('=') else {
            bail!("override {item:?} is not of the form key=value");
        };
        let slot = key
            .split('.')
            .try_fold(&mut tree, |node, part| match node {
                Value::Object(map) => map.get_mut(part),
                Value::Array(items) => part.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
                _ => None,
            })
            .with_context(|| format!("unknown config key {key:?}"))?;
        *slot = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    }
    serde_json::from_value(tree).context("config invalid after overrides")
}
