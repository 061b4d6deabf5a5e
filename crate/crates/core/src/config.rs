//! Flat TOML configuration with units in the key names, figure presets and
//! resolution into a [`Scenario`] plus an experiment plan.
//!
//! Layers are merged key by key: built-in defaults, then the preset named
//! by `preset`, then the file, then command-line overrides. The fully
//! resolved layer is what the run manifest records.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{EveConditioning, EveMode, NomaConfig};
use crate::distributions::EvePopulation;
use crate::error::{Error, Result};
use crate::geometry::RegionSpec;
use crate::propagation::RfConfig;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Validate,
    SweepShape,
    SweepQ,
    SweepPower,
    Optimize,
    Simulate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Validate => "validate",
            ExperimentKind::SweepShape => "sweep-shape",
            ExperimentKind::SweepQ => "sweep-q",
            ExperimentKind::SweepPower => "sweep-power",
            ExperimentKind::Optimize => "optimize",
            ExperimentKind::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluatorKind {
    Analytic,
    Mc,
}

/// Zone choice per sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    MinAngle,
    Optimal,
    None,
}

impl RuleKind {
    pub fn name(self) -> &'static str {
        match self {
            RuleKind::MinAngle => "min-angle",
            RuleKind::Optimal => "optimal",
            RuleKind::None => "none",
        }
    }
}

macro_rules! config_file {
    ($($(#[$meta:meta])* $name:ident: $ty:ty,)*) => {
        /// One configuration layer. Every key is optional.
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct ConfigFile {
            $(
                $(#[$meta])*
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $name: Option<$ty>,
            )*
        }

        impl ConfigFile {
            /// Keys set in `top` win over keys set in `self`.
            pub fn overlay(self, top: ConfigFile) -> ConfigFile {
                ConfigFile {
                    $($name: top.$name.or(self.$name),)*
                }
            }
        }
    };
}

config_file! {
    /// Named figure preset applied beneath the file's own keys.
    preset: String,
    experiment: ExperimentKind,
    evaluator: EvaluatorKind,
    seed: u64,
    trials: u64,

    inner_radius_m: f64,
    user_radius_m: f64,
    delta_u_deg: f64,
    expansion_ratio: f64,
    altitude_m: f64,
    ptx_dbm: f64,
    antennas: u32,
    carrier_ghz: f64,
    bandwidth_mhz: f64,
    thermal_noise_dbm_per_hz: f64,
    noise_figure_db: f64,
    antenna_gain_dbi: f64,
    /// Adds `antenna_gain_dbi` to the transmit power.
    apply_antenna_gain: bool,
    user_density_per_m2: f64,
    eve_density_per_m2: f64,
    weak_rank: usize,
    strong_rank: usize,
    weak_power: f64,
    strong_power: f64,
    weak_target_bpcu: f64,
    strong_target_bpcu: f64,
    eve_mode: EveMode,
    eve_population: EvePopulation,
    eve_conditioning: EveConditioning,

    q: f64,
    q_values: Vec<f64>,
    ptx_values_dbm: Vec<f64>,
    altitude_values_m: Vec<f64>,
    eve_modes: Vec<EveMode>,
    zone_rules: Vec<RuleKind>,
    grid_points: usize,
    /// `[altitude_m, q, ptx_dbm]` triples checked by `validate`.
    validate_points: Vec<[f64; 3]>,
}

pub const PRESETS: [&str; 7] = ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"];

fn steps(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| ((lo + step * k as f64) * 1e9).round() / 1e9).collect()
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    /// Reference values for every key.
    pub fn defaults() -> Self {
        let rf = RfConfig::default();
        let noma = NomaConfig::default();
        Self {
            preset: None,
            experiment: None,
            evaluator: Some(EvaluatorKind::Analytic),
            seed: Some(1),
            trials: Some(100_000),
            inner_radius_m: Some(5.0),
            user_radius_m: Some(50.0),
            delta_u_deg: Some(2.5),
            expansion_ratio: Some(3.0),
            altitude_m: Some(rf.altitude_m),
            ptx_dbm: Some(rf.tx_power_dbm),
            antennas: Some(rf.antennas),
            carrier_ghz: Some(rf.carrier_ghz),
            bandwidth_mhz: Some(rf.bandwidth_hz / 1e6),
            thermal_noise_dbm_per_hz: Some(rf.thermal_noise_dbm_per_hz),
            noise_figure_db: Some(rf.noise_figure_db),
            antenna_gain_dbi: Some(rf.antenna_gain_dbi),
            apply_antenna_gain: Some(rf.apply_antenna_gain),
            user_density_per_m2: Some(1.0),
            eve_density_per_m2: Some(0.1),
            weak_rank: Some(noma.weak_rank),
            strong_rank: Some(noma.strong_rank),
            weak_power: Some(noma.weak_power),
            strong_power: Some(noma.strong_power),
            weak_target_bpcu: Some(noma.weak_target),
            strong_target_bpcu: Some(noma.strong_target),
            eve_mode: Some(noma.eve_mode),
            eve_population: Some(EvePopulation::Unprotected),
            eve_conditioning: Some(EveConditioning::Renormalized),
            q: Some(0.05),
            q_values: Some(vec![0.05, 0.2]),
            ptx_values_dbm: Some(steps(-15.0, 45.0, 5.0)),
            altitude_values_m: None,
            eve_modes: None,
            zone_rules: Some(vec![RuleKind::MinAngle]),
            grid_points: Some(crate::optimizer::DEFAULT_RESOLUTION),
            validate_points: Some(vec![
                [20.0, 0.2, 0.0],
                [20.0, 0.05, 45.0],
                [50.0, 0.2, 0.0],
                [50.0, 0.05, 45.0],
                [20.0, 0.05, 0.0],
                [50.0, 0.2, 45.0],
            ]),
        }
    }

    /// Parameter grid of a figure. Figure presets fold the antenna gain
    /// into the transmit power.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self {
            apply_antenna_gain: Some(true),
            ptx_dbm: Some(45.0),
            eve_mode: Some(EveMode::WorstCase),
            ..Self::default()
        };
        let preset = match name {
            "fig3" => Self {
                experiment: Some(ExperimentKind::SweepShape),
                expansion_ratio: Some(2.0),
                altitude_m: Some(20.0),
                q_values: Some(steps(0.01, 0.13, 0.02)),
                ..base
            },
            "fig4" => Self {
                experiment: Some(ExperimentKind::SweepShape),
                expansion_ratio: Some(3.0),
                altitude_m: Some(20.0),
                q: Some(0.03),
                q_values: Some(steps(0.01, 0.09, 0.02)),
                ..base
            },
            "fig5" => Self {
                experiment: Some(ExperimentKind::SweepQ),
                expansion_ratio: Some(3.0),
                altitude_m: Some(20.0),
                q_values: Some(steps(0.01, 0.2, 0.01)),
                zone_rules: Some(vec![RuleKind::Optimal, RuleKind::MinAngle]),
                ..base
            },
            "fig6" => Self {
                experiment: Some(ExperimentKind::SweepPower),
                expansion_ratio: Some(3.0),
                altitude_m: Some(20.0),
                q_values: Some(vec![0.05, 0.2]),
                ptx_values_dbm: Some(steps(-15.0, 45.0, 1.0)),
                zone_rules: Some(vec![RuleKind::Optimal, RuleKind::MinAngle]),
                ..base
            },
            "fig7" => Self {
                experiment: Some(ExperimentKind::SweepShape),
                expansion_ratio: Some(3.0),
                altitude_m: Some(50.0),
                q_values: Some(steps(0.01, 0.11, 0.02)),
                ..base
            },
            "fig8" => Self {
                experiment: Some(ExperimentKind::SweepPower),
                expansion_ratio: Some(3.0),
                altitude_m: Some(50.0),
                q_values: Some(vec![0.05, 0.2]),
                ptx_values_dbm: Some(steps(-15.0, 45.0, 1.0)),
                zone_rules: Some(vec![RuleKind::Optimal, RuleKind::MinAngle]),
                ..base
            },
            "fig9" => Self {
                experiment: Some(ExperimentKind::SweepPower),
                expansion_ratio: Some(3.0),
                altitude_values_m: Some(vec![20.0, 50.0]),
                q_values: Some(vec![0.05, 0.2]),
                ptx_values_dbm: Some(steps(-15.0, 45.0, 1.0)),
                eve_modes: Some(vec![EveMode::WorstCase, EveMode::BestCase]),
                zone_rules: Some(vec![RuleKind::MinAngle]),
                ..base
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown preset `{other}`; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(preset)
    }

    /// Defaults, then this layer's preset, then this layer.
    pub fn with_defaults(self) -> Result<Self> {
        let mut merged = Self::defaults();
        if let Some(name) = &self.preset {
            merged = merged.overlay(Self::preset(name)?);
        }
        let mut merged = merged.overlay(self);
        // single values stand in for the lists they imply
        if merged.altitude_values_m.is_none() {
            merged.altitude_values_m = merged.altitude_m.map(|h| vec![h]);
        }
        if merged.eve_modes.is_none() {
            merged.eve_modes = merged.eve_mode.map(|m| vec![m]);
        }
        Ok(merged)
    }

    /// Resolves a layer produced by [`ConfigFile::with_defaults`].
    pub fn resolve(&self) -> Result<Resolved> {
        let full = self.clone().with_defaults()?;
        let scenario = full.scenario()?;
        let plan = full.plan()?;
        Ok(Resolved {
            scenario,
            plan,
            file: full,
        })
    }

    fn scenario(&self) -> Result<Scenario> {
        let region = RegionSpec::new(
            need(self.inner_radius_m, "inner_radius_m")?,
            need(self.user_radius_m, "user_radius_m")?,
            need(self.delta_u_deg, "delta_u_deg")?.to_radians(),
            need(self.expansion_ratio, "expansion_ratio")?,
        )?;
        let rf = RfConfig {
            antennas: need(self.antennas, "antennas")?,
            carrier_ghz: need(self.carrier_ghz, "carrier_ghz")?,
            bandwidth_hz: need(self.bandwidth_mhz, "bandwidth_mhz")? * 1e6,
            thermal_noise_dbm_per_hz: need(self.thermal_noise_dbm_per_hz, "thermal_noise_dbm_per_hz")?,
            noise_figure_db: need(self.noise_figure_db, "noise_figure_db")?,
            altitude_m: need(self.altitude_m, "altitude_m")?,
            tx_power_dbm: need(self.ptx_dbm, "ptx_dbm")?,
            antenna_gain_dbi: need(self.antenna_gain_dbi, "antenna_gain_dbi")?,
            apply_antenna_gain: need(self.apply_antenna_gain, "apply_antenna_gain")?,
        };
        let noma = NomaConfig {
            weak_rank: need(self.weak_rank, "weak_rank")?,
            strong_rank: need(self.strong_rank, "strong_rank")?,
            weak_power: need(self.weak_power, "weak_power")?,
            strong_power: need(self.strong_power, "strong_power")?,
            weak_target: need(self.weak_target_bpcu, "weak_target_bpcu")?,
            strong_target: need(self.strong_target_bpcu, "strong_target_bpcu")?,
            eve_mode: need(self.eve_mode, "eve_mode")?,
        };
        let scn = Scenario {
            region,
            rf,
            noma,
            user_density: need(self.user_density_per_m2, "user_density_per_m2")?,
            eve_density: need(self.eve_density_per_m2, "eve_density_per_m2")?,
            eve_population: need(self.eve_population, "eve_population")?,
            conditioning: need(self.eve_conditioning, "eve_conditioning")?,
        };
        scn.validate()?;
        Ok(scn)
    }

    fn plan(&self) -> Result<ExperimentPlan> {
        let list = |v: &Option<Vec<f64>>, key: &str| -> Result<Vec<f64>> {
            let v = need(v.clone(), key)?;
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(format!(
                    "`{key}` must be a nonempty list of finite numbers"
                )));
            }
            Ok(v)
        };
        let q_values = list(&self.q_values, "q_values")?;
        let q = need(self.q, "q")?;
        for &v in q_values.iter().chain([&q]) {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("area fraction {v} must lie in (0, 1)")));
            }
        }
        let trials = need(self.trials, "trials")?;
        if trials < 1 {
            return Err(Error::Config("`trials` must be at least 1".into()));
        }
        let grid_points = need(self.grid_points, "grid_points")?;
        if grid_points < 8 {
            return Err(Error::Config("`grid_points` must be at least 8".into()));
        }
        let eve_modes = need(self.eve_modes.clone(), "eve_modes")?;
        let zone_rules = need(self.zone_rules.clone(), "zone_rules")?;
        if eve_modes.is_empty() || zone_rules.is_empty() {
            return Err(Error::Config("`eve_modes` and `zone_rules` must be nonempty".into()));
        }
        Ok(ExperimentPlan {
            name: self.preset.clone().unwrap_or_else(|| "custom".into()),
            experiment: self.experiment,
            evaluator: need(self.evaluator, "evaluator")?,
            seed: need(self.seed, "seed")?,
            trials,
            q,
            q_values,
            ptx_values_dbm: list(&self.ptx_values_dbm, "ptx_values_dbm")?,
            altitude_values_m: list(&self.altitude_values_m, "altitude_values_m")?,
            eve_modes,
            zone_rules,
            grid_points,
            validate_points: need(self.validate_points.clone(), "validate_points")?,
        })
    }
}

fn need<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing key `{key}`")))
}

/// What to run over the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    pub experiment: Option<ExperimentKind>,
    pub evaluator: EvaluatorKind,
    pub seed: u64,
    pub trials: u64,
    /// Area fraction for single-fraction experiments.
    pub q: f64,
    pub q_values: Vec<f64>,
    pub ptx_values_dbm: Vec<f64>,
    pub altitude_values_m: Vec<f64>,
    pub eve_modes: Vec<EveMode>,
    pub zone_rules: Vec<RuleKind>,
    pub grid_points: usize,
    pub validate_points: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub scenario: Scenario,
    pub plan: ExperimentPlan,
    /// Every key, as resolved.
    pub file: ConfigFile,
}
