//! Experiment configuration.
//!
//! A config is resolved in three layers: the preset of its experiment, then the
//! JSON file, then command-line overrides. Every field can therefore be omitted
//! from the file.
//!
//! ```json
//! {
//!   "experiment": "tracking",
//!   "strategy": { "kind": "pilot", "delta": 3, "pilots": 1, "smoothing": { "count": 10 } },
//!   "particles": 200, "reps": 100, "horizon": 100, "seed": 7,
//!   "lags": [0, 12],
//!   "resample": { "scheme": "residual", "when": { "ess-below": 0.1 } }
//! }
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Result, SmcError};
use crate::lookahead::{AdaptiveConfig, BinSpec, CandidateSet, Partition, PilotConfig, PilotKind, StopRule, Strategy};
use crate::models::{ArmaChannel, ClutterModel, Constellation, GrowthModel};
use crate::particle::{ResamplePolicy, ResampleScheme, ResampleWhen};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Nonlinear,
    Tracking,
    Qam,
}

impl std::str::FromStr for ExperimentKind {
    type Err = SmcError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| SmcError::Config(format!("unknown experiment '{s}'")))
    }
}

fn one() -> usize {
    1
}

fn ten() -> usize {
    10
}

fn default_rule() -> StopRule {
    StopRule::Variance(4.0)
}

fn deterministic() -> PilotKind {
    PilotKind::Deterministic
}

/// Per-step strategy with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StrategyConfig {
    /// Plain SMC; lags give lookahead weighting.
    Plain,
    Exact {
        #[serde(default)]
        delta: usize,
    },
    Pilot {
        #[serde(default)]
        delta: usize,
        /// `K`.
        #[serde(default = "one")]
        pilots: usize,
        /// `A` draws from the trial; omitted means the whole finite support.
        #[serde(default)]
        candidates: Option<usize>,
        #[serde(default)]
        smoothing: Option<BinSpec>,
    },
    Adaptive {
        #[serde(default = "one")]
        pilots: usize,
        #[serde(default)]
        candidates: Option<usize>,
        #[serde(default)]
        smoothing: Option<BinSpec>,
        #[serde(default = "ten")]
        max_delta: usize,
        #[serde(default = "default_rule")]
        rule: StopRule,
    },
    Deterministic {
        #[serde(default)]
        delta: usize,
    },
    Multilevel {
        #[serde(default)]
        delta: usize,
        #[serde(default = "deterministic")]
        pilot: PilotKind,
    },
}

impl StrategyConfig {
    /// Configured lookahead added to every lag.
    pub fn delta(&self) -> usize {
        match self {
            StrategyConfig::Plain | StrategyConfig::Adaptive { .. } => 0,
            StrategyConfig::Exact { delta }
            | StrategyConfig::Pilot { delta, .. }
            | StrategyConfig::Deterministic { delta }
            | StrategyConfig::Multilevel { delta, .. } => *delta,
        }
    }

    /// Short label for CSV rows.
    pub fn label(&self) -> String {
        let bins = |s: &Option<BinSpec>| if s.is_some() { "-S" } else { "" };
        let cands = |c: &Option<usize>| c.map_or("all".to_string(), |a| a.to_string());
        match self {
            StrategyConfig::Plain => "plain".into(),
            StrategyConfig::Exact { delta } => format!("exact(d={delta})"),
            StrategyConfig::Pilot {
                delta,
                pilots,
                candidates,
                smoothing,
            } => format!("pilot{}(d={delta};A={};K={pilots})", bins(smoothing), cands(candidates)),
            StrategyConfig::Adaptive {
                pilots,
                candidates,
                smoothing,
                max_delta,
                rule,
            } => {
                let r = match rule {
                    StopRule::Probability(p) => format!("p={p}"),
                    StopRule::Variance(v) => format!("var={v}"),
                };
                format!("adaptive{}(N={max_delta};{r};A={};K={pilots})", bins(smoothing), cands(candidates))
            }
            StrategyConfig::Deterministic { delta } => format!("deterministic(d={delta})"),
            StrategyConfig::Multilevel { delta, pilot } => {
                let k = match pilot {
                    PilotKind::Random => "random",
                    PilotKind::Deterministic => "deterministic",
                };
                format!("multilevel(d={delta};{k})")
            }
        }
    }

    fn pilot_config(delta: usize, pilots: usize, candidates: Option<usize>, smoothing: Option<BinSpec>) -> PilotConfig {
        PilotConfig {
            delta,
            pilots,
            candidates: candidates.map_or(CandidateSet::Enumerate, CandidateSet::Draw),
            smoothing,
        }
    }

    /// Build the engine strategy; multilevel needs the partition of the model's support.
    pub fn build(&self, partition: Option<&Partition>) -> Result<Strategy> {
        Ok(match self {
            StrategyConfig::Plain => Strategy::Plain,
            StrategyConfig::Exact { delta } => Strategy::Exact { delta: *delta },
            StrategyConfig::Pilot {
                delta,
                pilots,
                candidates,
                smoothing,
            } => Strategy::Pilot(Self::pilot_config(*delta, *pilots, *candidates, *smoothing)),
            StrategyConfig::Adaptive {
                pilots,
                candidates,
                smoothing,
                max_delta,
                rule,
            } => Strategy::Adaptive {
                pilot: Self::pilot_config(0, *pilots, *candidates, *smoothing),
                adaptive: AdaptiveConfig {
                    rule: *rule,
                    max_delta: *max_delta,
                },
            },
            StrategyConfig::Deterministic { delta } => Strategy::Deterministic { delta: *delta },
            StrategyConfig::Multilevel { delta, pilot } => Strategy::Multilevel {
                partition: partition
                    .cloned()
                    .ok_or_else(|| SmcError::Config("multilevel sampling needs a partitioned support".into()))?,
                delta: *delta,
                kind: *pilot,
            },
        })
    }

    fn validate(&self, experiment: ExperimentKind) -> Result<()> {
        let bad = |m: &str| Err(SmcError::Config(m.to_string()));
        match self {
            StrategyConfig::Pilot { pilots, candidates, .. } | StrategyConfig::Adaptive { pilots, candidates, .. } => {
                if *pilots == 0 || *candidates == Some(0) {
                    return bad("pilots and candidates must be positive");
                }
                if candidates.is_none() && experiment == ExperimentKind::Nonlinear {
                    return bad("the nonlinear model has no finite support; set candidates");
                }
                if let StrategyConfig::Adaptive { rule, .. } = self {
                    match rule {
                        StopRule::Probability(p) if !(*p > 0.0 && *p <= 1.0) => return bad("probability threshold must be in (0, 1]"),
                        StopRule::Variance(v) if !(*v >= 0.0) => return bad("variance threshold must be non-negative"),
                        _ => {}
                    }
                }
            }
            StrategyConfig::Exact { .. } | StrategyConfig::Deterministic { .. } if experiment == ExperimentKind::Nonlinear => {
                return bad("this strategy needs a finite support");
            }
            StrategyConfig::Multilevel { .. } if experiment != ExperimentKind::Qam => {
                return bad("multilevel sampling is only available for the QAM experiment");
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingParams {
    pub clutter: ClutterModel,
    /// Starting position and velocity.
    pub start: [f64; 2],
    /// Prior variance of the start in each coordinate; zero means it is known.
    pub initial_var: f64,
}

impl Default for TrackingParams {
    fn default() -> Self {
        TrackingParams {
            clutter: ClutterModel::default(),
            start: [0.0, 0.0],
            initial_var: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QamParams {
    /// Constellation size, a power of 4.
    pub order: usize,
    pub channel: ArmaChannel,
    /// One known symbol every this many; 0 disables them.
    pub known_period: usize,
    /// `10 log10(E|ξ|² E|x|² / σ²)`.
    pub snr_db: f64,
    /// Start the receiver from the true channel state instead of the stationary prior.
    pub known_channel_start: bool,
}

impl Default for QamParams {
    fn default() -> Self {
        QamParams {
            order: 16,
            channel: ArmaChannel::default(),
            known_period: 10,
            snr_db: 20.0,
            known_channel_start: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Particles of the large reference run.
    pub particles: usize,
    /// Total lookaheads stored in the cache.
    pub lags: Vec<usize>,
    /// Cache read when computing RMSE2/MAE2.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub strategy: StrategyConfig,
    pub particles: usize,
    pub reps: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Lookahead-weighting lags `δ` at which estimates are reported.
    pub lags: Vec<usize>,
    pub resample: ResamplePolicy,
    pub nonlinear: GrowthModel,
    pub tracking: TrackingParams,
    pub qam: QamParams,
    pub reference: ReferenceConfig,
    /// Record wall time per repetition; off by default so output is reproducible.
    pub timing: bool,
}

impl ExperimentConfig {
    /// Defaults for `kind`, sized for a desktop run.
    pub fn preset(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            experiment: kind,
            strategy: StrategyConfig::Plain,
            particles: 3000,
            reps: 200,
            horizon: 100,
            seed: 20_240_601,
            lags: vec![0, 1, 2, 3],
            resample: ResamplePolicy {
                scheme: ResampleScheme::Residual,
                when: ResampleWhen::Always,
            },
            nonlinear: GrowthModel::default(),
            tracking: TrackingParams::default(),
            qam: QamParams::default(),
            reference: ReferenceConfig {
                particles: 50_000,
                lags: vec![0, 1, 2, 3],
                path: None,
            },
            timing: false,
        };
        match kind {
            ExperimentKind::Nonlinear => base,
            ExperimentKind::Tracking => ExperimentConfig {
                particles: 200,
                reps: 100,
                lags: vec![0, 1, 2, 3, 5, 8, 10, 13, 15],
                resample: ResamplePolicy {
                    scheme: ResampleScheme::Residual,
                    when: ResampleWhen::EssBelow(0.1),
                },
                reference: ReferenceConfig {
                    particles: 5000,
                    lags: vec![0, 1, 2, 3, 5, 8, 10, 13, 15],
                    path: None,
                },
                ..base
            },
            ExperimentKind::Qam => ExperimentConfig {
                strategy: StrategyConfig::Multilevel {
                    delta: 0,
                    pilot: PilotKind::Deterministic,
                },
                particles: 50,
                reps: 20,
                horizon: 500,
                lags: vec![0, 2, 4, 8],
                resample: ResamplePolicy {
                    scheme: ResampleScheme::Residual,
                    when: ResampleWhen::EssBelow(0.5),
                },
                reference: ReferenceConfig {
                    particles: 0,
                    lags: vec![],
                    path: None,
                },
                ..base
            },
        }
    }

    /// Parse a JSON document on top of the preset of its experiment.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        Self::from_layers(value, &Overrides::default())
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Preset, then `file`, then `overrides`.
    pub fn from_layers(file: Value, overrides: &Overrides) -> Result<Self> {
        if !file.is_object() {
            return Err(SmcError::Config("config must be a JSON object".into()));
        }
        let kind = match overrides.experiment {
            Some(k) => k,
            None => match file.get("experiment") {
                Some(v) => serde_json::from_value(v.clone()).map_err(|e| SmcError::Config(e.to_string()))?,
                None => ExperimentKind::Nonlinear,
            },
        };
        let mut merged = serde_json::to_value(Self::preset(kind))?;
        merge(&mut merged, file);
        merged["experiment"] = serde_json::to_value(kind)?;
        overrides.apply(&mut merged)?;
        let cfg: ExperimentConfig = serde_json::from_value(merged).map_err(|e| SmcError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SmcError::Config(m));
        if self.particles == 0 || self.reps == 0 || self.horizon == 0 {
            return bad("particles, reps and horizon must be positive".into());
        }
        if self.lags.is_empty() {
            return bad("at least one lag is required".into());
        }
        if let ResampleWhen::EssBelow(f) = self.resample.when {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("ESS threshold {f} outside (0, 1]"));
            }
        }
        self.strategy.validate(self.experiment)?;
        match self.experiment {
            ExperimentKind::Nonlinear => {
                GrowthModel::new(self.nonlinear.sigma, self.nonlinear.eta, self.nonlinear.initial_sd)?;
            }
            ExperimentKind::Tracking => {
                self.tracking.clutter.validate()?;
                if !(self.tracking.initial_var >= 0.0) {
                    return bad("initial variance must be non-negative".into());
                }
            }
            ExperimentKind::Qam => {
                Constellation::new(self.qam.order)?;
                if !self.qam.snr_db.is_finite() {
                    return bad("SNR must be finite".into());
                }
            }
        }
        Ok(())
    }
}

/// Command-line overrides; `None` leaves the field alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<ExperimentKind>,
    /// Strategy kind, e.g. `pilot`, or a full JSON object.
    pub strategy: Option<String>,
    pub delta: Option<usize>,
    pub pilots: Option<usize>,
    pub candidates: Option<usize>,
    pub particles: Option<usize>,
    pub reps: Option<usize>,
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    pub lags: Option<Vec<usize>>,
    pub snr_db: Option<f64>,
    pub reference: Option<PathBuf>,
    pub timing: bool,
}

impl Overrides {
    fn apply(&self, v: &mut Value) -> Result<()> {
        if let Some(s) = &self.strategy {
            let new = if s.trim_start().starts_with('{') {
                serde_json::from_str(s)?
            } else {
                serde_json::json!({ "kind": s })
            };
            // Switching kind drops parameters the new kind may not accept.
            if v["strategy"].get("kind") != new.get("kind") {
                v["strategy"] = serde_json::json!({});
            }
            merge(&mut v["strategy"], new);
        }
        let strategy_kind = v["strategy"]["kind"].as_str().unwrap_or("plain").to_string();
        let mut set_strategy = |key: &str, val: Value, allowed: &[&str]| -> Result<()> {
            if !allowed.contains(&strategy_kind.as_str()) {
                return Err(SmcError::Config(format!("--{key} does not apply to strategy '{strategy_kind}'")));
            }
            v["strategy"][key] = val;
            Ok(())
        };
        if let Some(d) = self.delta {
            set_strategy("delta", d.into(), &["exact", "pilot", "deterministic", "multilevel"])?;
        }
        if let Some(k) = self.pilots {
            set_strategy("pilots", k.into(), &["pilot", "adaptive"])?;
        }
        if let Some(a) = self.candidates {
            set_strategy("candidates", a.into(), &["pilot", "adaptive"])?;
        }
        let mut set = |key: &str, val: Value| v[key] = val;
        if let Some(m) = self.particles {
            set("particles", m.into());
        }
        if let Some(r) = self.reps {
            set("reps", r.into());
        }
        if let Some(h) = self.horizon {
            set("horizon", h.into());
        }
        if let Some(s) = self.seed {
            set("seed", s.into());
        }
        if let Some(l) = &self.lags {
            set("lags", serde_json::to_value(l)?);
        }
        if self.timing {
            set("timing", true.into());
        }
        if let Some(s) = self.snr_db {
            v["qam"]["snr_db"] = s.into();
        }
        if let Some(p) = &self.reference {
            v["reference"]["path"] = serde_json::to_value(p)?;
        }
        Ok(())
    }
}

/// Recursive object merge; non-object values replace.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() && k != "strategy" => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}
