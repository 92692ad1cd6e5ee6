//! Experiment file handling: scenario configs (TOML primary, JSON
//! accepted) and benchmark-suite descriptions for parameter sweeps.
//!
//! Seeds are mandatory in every file — there is no wall-clock fallback —
//! so any experiment can be replayed bit-for-bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cfm::IdmParams;
use crate::control::ControllerSpec;
use crate::error::{Result, WavebenchError};
use crate::sim::ScenarioConfig;

fn parse_structured<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false)
        || text.trim_start().starts_with('{');
    if is_json {
        serde_json::from_str(text)
            .map_err(|e| WavebenchError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(text)
            .map_err(|e| WavebenchError::Config(format!("{}: {e}", path.display())))
    }
}

/// Load and validate a scenario config from a TOML or JSON file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    let config: ScenarioConfig = parse_structured(&text, path)?;
    config.validate()?;
    Ok(config)
}

/// Serialize a scenario config as TOML.
pub fn scenario_to_toml(config: &ScenarioConfig) -> String {
    toml::to_string_pretty(config).expect("scenario serializes")
}

/// Load IDM parameters from a TOML or JSON file (for stability analysis).
pub fn load_idm(path: &Path) -> Result<IdmParams> {
    let text = std::fs::read_to_string(path)?;
    let params: IdmParams = parse_structured(&text, path)?;
    params.validate()?;
    Ok(params)
}

/// Controller families a sweep can exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    FollowerStopper,
    IdmRelaxation,
}

fn default_v_desired() -> Vec<f64> {
    vec![3.0, 4.0, 5.0, 6.0, 7.0]
}
fn default_gamma() -> Vec<f64> {
    vec![0.5, 1.0]
}
fn default_penetration() -> Vec<f64> {
    vec![0.05, 0.10]
}
fn default_controllers() -> Vec<ControllerKind> {
    vec![ControllerKind::FollowerStopper, ControllerKind::IdmRelaxation]
}

/// A baseline-plus-Cartesian-sweep benchmark description.
///
/// The `scenario` acts as a template: the baseline run uses it with
/// penetration 0 and no controller; every sweep run overrides the
/// controller and penetration while keeping the same seed for paired
/// comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSuite {
    pub scenario: ScenarioConfig,
    #[serde(default = "default_controllers")]
    pub controllers: Vec<ControllerKind>,
    #[serde(default = "default_v_desired")]
    pub v_desired: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: Vec<f64>,
    #[serde(default = "default_penetration")]
    pub penetration: Vec<f64>,
    /// Output directory; the CLI `--out` flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl BenchmarkSuite {
    /// Paper-default sweep over the given scenario template.
    pub fn default_over(scenario: ScenarioConfig) -> Self {
        Self {
            scenario,
            controllers: default_controllers(),
            v_desired: default_v_desired(),
            gamma: default_gamma(),
            penetration: default_penetration(),
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let bad = |field: &'static str, message: String| {
            Err(WavebenchError::InvalidParameter { field, message })
        };
        if self.controllers.is_empty() {
            return bad("controllers", "at least one controller family".into());
        }
        if self.v_desired.is_empty() {
            return bad("v_desired", "sweep axis must be non-empty".into());
        }
        if self.v_desired.iter().any(|v| !(*v > 0.0)) {
            return bad("v_desired", format!("all values must be > 0: {:?}", self.v_desired));
        }
        if self.controllers.contains(&ControllerKind::IdmRelaxation) {
            if self.gamma.is_empty() {
                return bad("gamma", "sweep axis must be non-empty".into());
            }
            if self.gamma.iter().any(|g| !(*g > 0.0)) {
                return bad("gamma", format!("all values must be > 0: {:?}", self.gamma));
            }
        }
        if self.penetration.is_empty() {
            return bad("penetration", "sweep axis must be non-empty".into());
        }
        if self.penetration.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return bad(
                "penetration",
                format!("all values must be in (0, 1]: {:?}", self.penetration),
            );
        }
        Ok(())
    }

    /// The baseline scenario: same template and seed, no controller,
    /// penetration 0.
    pub fn baseline(&self) -> ScenarioConfig {
        let mut config = self.scenario.clone();
        config.controller = None;
        config.penetration = 0.0;
        config
    }

    /// All sweep runs as (label, config) pairs, in deterministic order.
    pub fn expand(&self) -> Vec<(String, ScenarioConfig)> {
        let mut runs = Vec::new();
        for kind in &self.controllers {
            for &vd in &self.v_desired {
                let specs: Vec<ControllerSpec> = match kind {
                    ControllerKind::FollowerStopper => {
                        vec![ControllerSpec::follower_stopper(vd)]
                    }
                    ControllerKind::IdmRelaxation => self
                        .gamma
                        .iter()
                        .map(|&g| ControllerSpec::IdmRelaxation {
                            v_desired: vd,
                            gamma: g,
                            idm: self.scenario.idm,
                        })
                        .collect(),
                };
                for spec in specs {
                    for &pen in &self.penetration {
                        let mut config = self.scenario.clone();
                        let label = format!("{}_p{:.2}", spec.label(), pen);
                        config.controller = Some(spec.clone());
                        config.penetration = pen;
                        runs.push((label, config));
                    }
                }
            }
        }
        runs
    }
}

/// Load and validate a benchmark suite from a TOML or JSON file.
pub fn load_suite(path: &Path) -> Result<BenchmarkSuite> {
    let text = std::fs::read_to_string(path)?;
    let suite: BenchmarkSuite = parse_structured(&text, path)?;
    suite.validate()?;
    Ok(suite)
}

/// Parse a `v,a,rate` samples CSV (for model fitting).
pub fn load_samples_csv(text: &str) -> Result<Vec<(f64, f64, f64)>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().trim();
    if header != "v,a,rate" {
        return Err(WavebenchError::Config(format!(
            "samples CSV must start with header 'v,a,rate', got '{header}'"
        )));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(WavebenchError::Config(format!(
                "samples row {}: expected 3 fields, got {}",
                i + 1,
                f.len()
            )));
        }
        let parse = |s: &str, name: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| {
                WavebenchError::Config(format!("samples row {}: bad {name}: {s}", i + 1))
            })
        };
        out.push((parse(f[0], "v")?, parse(f[1], "a")?, parse(f[2], "rate")?));
    }
    Ok(out)
}

/// Render samples as a `v,a,rate` CSV.
pub fn samples_to_csv(samples: &[(f64, f64, f64)]) -> String {
    use crate::util::fmt_sig6;
    let mut out = String::from("v,a,rate\n");
    for (v, a, r) in samples {
        out.push_str(&format!("{},{},{}\n", fmt_sig6(*v), fmt_sig6(*a), fmt_sig6(*r)));
    }
    out
}
