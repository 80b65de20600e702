//! Radar multi-target tracking on top of the `mht-core` engine: a scan
//! simulator, a constant-velocity Kalman filter with gating, the hypothesis
//! generator and a scan-by-scan tracker.

pub mod config;
pub mod generator;
pub mod kalman;
pub mod model;
pub mod planner;
pub mod scenarios;
pub mod sim;
pub mod tracker;

pub use config::{ConfigError, Placement, ScenarioConfig, ScriptedTarget};
pub use kalman::{gate, KalmanError, KalmanState};
pub use model::{RadarEvent, TargetPositionFact, Tick};
pub use sim::{Scan, Simulator, TruthTarget};
pub use tracker::{ReferenceTracker, StepMetrics, TrackEstimate, Tracker, TrackerOptions};
