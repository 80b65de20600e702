//! Scenario parameters and their TOML form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),
}

/// How non-scripted targets are laid out at tick 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Cells of a square grid clipped to the disc, one target per cell.
    Grid,
    /// Uniform in the inner 80% of the disc.
    Random,
}

/// A target following straight segments between `(tick, x, y)` waypoints.
/// It exists from the first waypoint's tick to the last one's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedTarget {
    pub waypoints: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Meters.
    pub radar_radius: f64,
    /// Seconds per full turn.
    pub scan_period: f64,
    pub detection_probability: f64,
    /// Expected false alarms per scan over the whole disc.
    pub false_alarm_rate: f64,
    /// Expected new targets per scan over the whole disc.
    pub new_target_rate: f64,
    /// Meters.
    pub measurement_noise_std: f64,
    /// m/s², white acceleration of the filter model.
    pub process_noise_std: f64,
    /// Chi-square threshold, 2 degrees of freedom.
    pub gate_threshold: f64,
    /// Scans without detection before termination is hypothesized.
    pub termination_timeout: u32,
    /// Weight of the terminated branch once a track is stale.
    pub termination_probability: f64,
    /// m/s, velocity uncertainty of a freshly initiated track.
    pub initial_velocity_std: f64,
    pub target_count: usize,
    /// Scans.
    pub duration: u32,
    pub rng_seed: u64,
    /// Speed range of simulated targets, m/s.
    pub min_speed: f64,
    pub max_speed: f64,
    /// Radians per scan.
    pub heading_noise_std: f64,
    /// m/s per scan.
    pub speed_noise_std: f64,
    pub placement: Placement,
    /// Keep at most this many leaves per cluster.
    pub prune_k: Option<usize>,
    /// Drop leaves below this fraction of the best leaf.
    pub prune_ratio: Option<f64>,
    pub depth_limit: Option<usize>,
    /// Emit events as well as facts.
    pub emit_events: bool,
    pub targets: Vec<ScriptedTarget>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            radar_radius: 10_000.0,
            scan_period: 1.0,
            detection_probability: 0.95,
            false_alarm_rate: 1.0,
            new_target_rate: 0.1,
            measurement_noise_std: 20.0,
            process_noise_std: 2.0,
            gate_threshold: 9.21,
            termination_timeout: 3,
            termination_probability: 0.9,
            initial_velocity_std: 30.0,
            target_count: 5,
            duration: 100,
            rng_seed: 1,
            min_speed: 5.0,
            max_speed: 15.0,
            heading_noise_std: 0.05,
            speed_noise_std: 0.5,
            placement: Placement::Grid,
            prune_k: Some(16),
            prune_ratio: Some(1e-3),
            depth_limit: Some(6),
            emit_events: true,
            targets: Vec::new(),
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

fn finite_nonneg(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(
            field,
            format!("{v} must be finite and non-negative"),
        ))
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} must be finite and positive")))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("radar_radius", self.radar_radius)?;
        positive("scan_period", self.scan_period)?;
        let pd = self.detection_probability;
        if !(pd > 0.0 && pd <= 1.0) {
            return Err(invalid(
                "detection_probability",
                format!("{pd} not in (0, 1]"),
            ));
        }
        finite_nonneg("false_alarm_rate", self.false_alarm_rate)?;
        finite_nonneg("new_target_rate", self.new_target_rate)?;
        if self.false_alarm_rate + self.new_target_rate <= 0.0 {
            return Err(invalid(
                "new_target_rate",
                "false_alarm_rate and new_target_rate cannot both be zero",
            ));
        }
        finite_nonneg("measurement_noise_std", self.measurement_noise_std)?;
        finite_nonneg("process_noise_std", self.process_noise_std)?;
        positive("gate_threshold", self.gate_threshold)?;
        let pt = self.termination_probability;
        if !(0.0..=1.0).contains(&pt) {
            return Err(invalid(
                "termination_probability",
                format!("{pt} not in [0, 1]"),
            ));
        }
        positive("initial_velocity_std", self.initial_velocity_std)?;
        finite_nonneg("min_speed", self.min_speed)?;
        finite_nonneg("max_speed", self.max_speed)?;
        if self.min_speed > self.max_speed {
            return Err(invalid("max_speed", "below min_speed"));
        }
        finite_nonneg("heading_noise_std", self.heading_noise_std)?;
        finite_nonneg("speed_noise_std", self.speed_noise_std)?;
        if self.prune_k == Some(0) {
            return Err(invalid("prune_k", "must be at least 1"));
        }
        if let Some(r) = self.prune_ratio {
            if !(r > 0.0 && r <= 1.0) {
                return Err(invalid("prune_ratio", format!("{r} not in (0, 1]")));
            }
        }
        if self.depth_limit == Some(0) {
            return Err(invalid("depth_limit", "must be at least 1"));
        }
        for t in &self.targets {
            if t.waypoints.is_empty() {
                return Err(invalid("targets", "scripted target without waypoints"));
            }
            if t.waypoints.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
                return Err(invalid("targets", "non-finite waypoint"));
            }
            if t.waypoints.windows(2).any(|w| w[1][0] <= w[0][0]) {
                return Err(invalid("targets", "waypoint ticks must increase"));
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radar_radius * self.radar_radius
    }

    pub fn false_alarm_density(&self) -> f64 {
        self.false_alarm_rate / self.area()
    }

    pub fn new_target_density(&self) -> f64 {
        self.new_target_rate / self.area()
    }

    pub fn prune_strategies(&self) -> Vec<mht_core::PruneStrategy> {
        use mht_core::PruneStrategy::*;
        let mut out = Vec::new();
        if let Some(d) = self.depth_limit {
            out.push(DepthLimit(d));
        }
        if let Some(r) = self.prune_ratio {
            out.push(RatioThreshold(r));
        }
        if let Some(k) = self.prune_k {
            out.push(BestK(k));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        assert_eq!(
            ScenarioConfig::from_toml_str(&c.to_toml_string()).unwrap(),
            c
        );
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = ScenarioConfig::from_toml_str("target_count = 3\ndetection_probability = 0.8\n")
            .unwrap();
        assert_eq!(c.target_count, 3);
        assert_eq!(c.gate_threshold, 9.21);
    }

    #[test]
    fn unknown_field_is_rejected() {
        let err = ScenarioConfig::from_toml_str("target_cnt = 3\n").unwrap_err();
        assert!(err.to_string().contains("target_cnt"), "{err}");
    }

    #[test]
    fn bad_values_name_the_field() {
        for (text, field) in [
            ("detection_probability = 0.0", "detection_probability"),
            ("false_alarm_rate = -1.0", "false_alarm_rate"),
            ("gate_threshold = 0.0", "gate_threshold"),
            (
                "false_alarm_rate = 0.0\nnew_target_rate = 0.0",
                "new_target_rate",
            ),
            (
                "[[targets]]\nwaypoints = [[2.0, 0.0, 0.0], [1.0, 5.0, 5.0]]",
                "targets",
            ),
        ] {
            let err = ScenarioConfig::from_toml_str(text).unwrap_err();
            assert!(err.to_string().contains(field), "{text}: {err}");
        }
    }
}
