//! Ground truth and scan generation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::config::{Placement, ScenarioConfig, ScriptedTarget};
use crate::model::Tick;

/// One full turn of the radar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub tick: Tick,
    pub detections: Vec<[f64; 2]>,
    /// Truth target behind each detection; `None` for clutter.
    pub origins: Vec<Option<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTarget {
    pub id: u64,
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    pub alive: bool,
}

#[derive(Debug, Clone)]
enum Motion {
    Random,
    Scripted(ScriptedTarget),
}

/// Deterministic simulator: the same config yields the same scans.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: ScenarioConfig,
    rng: ChaCha8Rng,
    targets: Vec<TruthTarget>,
    motion: Vec<Motion>,
    tick: Tick,
}

fn scripted_state(
    script: &ScriptedTarget,
    tick: Tick,
    period: f64,
) -> Option<([f64; 2], [f64; 2])> {
    let t = tick as f64;
    let w = &script.waypoints;
    if t < w[0][0] || t > w[w.len() - 1][0] {
        return None;
    }
    if w.len() == 1 {
        return Some(([w[0][1], w[0][2]], [0.0, 0.0]));
    }
    let seg = w
        .windows(2)
        .find(|s| t <= s[1][0])
        .expect("tick within script");
    let (a, b) = (seg[0], seg[1]);
    let f = (t - a[0]) / (b[0] - a[0]);
    let span = (b[0] - a[0]) * period;
    Some((
        [a[1] + f * (b[1] - a[1]), a[2] + f * (b[2] - a[2])],
        [(b[1] - a[1]) / span, (b[2] - a[2]) / span],
    ))
}

/// Cell centres of a square grid inside `0.7 * radius`, `n` of them,
/// nearest to the centre first.
pub fn grid_positions(n: usize, radius: f64) -> Vec<[f64; 2]> {
    if n == 0 {
        return Vec::new();
    }
    let usable = 0.7 * radius;
    let mut side = ((n as f64 * 4.0 / std::f64::consts::PI).sqrt().ceil() as usize).max(1);
    loop {
        let step = 2.0 * usable / side as f64;
        let mut cells: Vec<[f64; 2]> = (0..side)
            .flat_map(|i| (0..side).map(move |j| (i, j)))
            .map(|(i, j)| {
                [
                    -usable + step * (i as f64 + 0.5),
                    -usable + step * (j as f64 + 0.5),
                ]
            })
            .filter(|p| p[0].hypot(p[1]) <= usable)
            .collect();
        if cells.len() >= n {
            cells.sort_by(|a, b| {
                a[0].hypot(a[1])
                    .total_cmp(&b[0].hypot(b[1]))
                    .then(a[0].total_cmp(&b[0]))
                    .then(a[1].total_cmp(&b[1]))
            });
            cells.truncate(n);
            return cells;
        }
        side += 1;
    }
}

impl Simulator {
    pub fn new(config: &ScenarioConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let mut targets = Vec::new();
        let mut motion = Vec::new();
        let starts = match config.placement {
            Placement::Grid => grid_positions(config.target_count, config.radar_radius),
            Placement::Random => (0..config.target_count)
                .map(|_| {
                    let r = 0.8 * config.radar_radius * rng.random::<f64>().sqrt();
                    let a = rng.random_range(0.0..std::f64::consts::TAU);
                    [r * a.cos(), r * a.sin()]
                })
                .collect(),
        };
        for pos in starts {
            let speed = rng.random_range(config.min_speed..=config.max_speed);
            let heading = rng.random_range(0.0..std::f64::consts::TAU);
            targets.push(TruthTarget {
                id: targets.len() as u64,
                position: pos,
                velocity: [speed * heading.cos(), speed * heading.sin()],
                alive: true,
            });
            motion.push(Motion::Random);
        }
        for script in &config.targets {
            let state = scripted_state(script, 0, config.scan_period);
            targets.push(TruthTarget {
                id: targets.len() as u64,
                position: state.map_or([0.0, 0.0], |s| s.0),
                velocity: state.map_or([0.0, 0.0], |s| s.1),
                alive: state.is_some(),
            });
            motion.push(Motion::Scripted(script.clone()));
        }
        Self {
            config: config.clone(),
            rng,
            targets,
            motion,
            tick: 0,
        }
    }

    pub fn truth(&self) -> &[TruthTarget] {
        &self.targets
    }

    pub fn tick(&self) -> Tick {
        self.tick
    }

    /// Observes the current truth, then advances it by one scan period.
    pub fn next_scan(&mut self) -> Scan {
        let c = &self.config;
        let noise = Normal::new(0.0, c.measurement_noise_std).expect("valid std");
        let mut found: Vec<([f64; 2], Option<u64>)> = Vec::new();
        for t in &self.targets {
            let inside = t.position[0].hypot(t.position[1]) <= c.radar_radius;
            if t.alive && inside && self.rng.random_bool(c.detection_probability) {
                let z = [
                    t.position[0] + noise.sample(&mut self.rng),
                    t.position[1] + noise.sample(&mut self.rng),
                ];
                found.push((z, Some(t.id)));
            }
        }
        let clutter = if c.false_alarm_rate > 0.0 {
            Poisson::new(c.false_alarm_rate)
                .expect("valid rate")
                .sample(&mut self.rng) as usize
        } else {
            0
        };
        for _ in 0..clutter {
            let r = c.radar_radius * self.rng.random::<f64>().sqrt();
            let a = self.rng.random_range(0.0..std::f64::consts::TAU);
            found.push(([r * a.cos(), r * a.sin()], None));
        }
        found.shuffle(&mut self.rng);
        let scan = Scan {
            tick: self.tick,
            detections: found.iter().map(|f| f.0).collect(),
            origins: found.iter().map(|f| f.1).collect(),
        };
        self.advance();
        scan
    }

    fn advance(&mut self) {
        self.tick += 1;
        let c = &self.config;
        let heading_noise = Normal::new(0.0, c.heading_noise_std).expect("valid std");
        let speed_noise = Normal::new(0.0, c.speed_noise_std).expect("valid std");
        for (t, m) in self.targets.iter_mut().zip(&self.motion) {
            match m {
                Motion::Random => {
                    t.position[0] += t.velocity[0] * c.scan_period;
                    t.position[1] += t.velocity[1] * c.scan_period;
                    let speed = (t.velocity[0].hypot(t.velocity[1])
                        + speed_noise.sample(&mut self.rng))
                    .max(0.0);
                    let heading =
                        t.velocity[1].atan2(t.velocity[0]) + heading_noise.sample(&mut self.rng);
                    t.velocity = [speed * heading.cos(), speed * heading.sin()];
                }
                Motion::Scripted(script) => {
                    match scripted_state(script, self.tick, c.scan_period) {
                        Some((p, v)) => {
                            t.position = p;
                            t.velocity = v;
                            t.alive = true;
                        }
                        None => t.alive = false,
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(pd: f64) -> ScenarioConfig {
        ScenarioConfig {
            detection_probability: pd,
            false_alarm_rate: 0.0,
            measurement_noise_std: 0.0,
            target_count: 4,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn noiseless_detections_equal_truth() {
        let mut sim = Simulator::new(&quiet(1.0));
        for _ in 0..5 {
            let truth: Vec<_> = sim.truth().to_vec();
            let scan = sim.next_scan();
            assert_eq!(scan.detections.len(), 4);
            for (z, o) in scan.detections.iter().zip(&scan.origins) {
                assert_eq!(*z, truth[o.unwrap() as usize].position);
            }
        }
    }

    #[test]
    fn no_detection_no_clutter_is_empty() {
        let mut c = quiet(1.0);
        c.detection_probability = f64::MIN_POSITIVE;
        let mut sim = Simulator::new(&c);
        assert!(sim.next_scan().detections.is_empty());
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let c = ScenarioConfig::default();
        let a: Vec<Scan> = {
            let mut s = Simulator::new(&c);
            (0..20).map(|_| s.next_scan()).collect()
        };
        let b: Vec<Scan> = {
            let mut s = Simulator::new(&c);
            (0..20).map(|_| s.next_scan()).collect()
        };
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn clutter_stays_in_the_disc() {
        let c = ScenarioConfig {
            false_alarm_rate: 50.0,
            ..ScenarioConfig::default()
        };
        let mut sim = Simulator::new(&c);
        for _ in 0..10 {
            for z in sim.next_scan().detections {
                assert!(z[0].hypot(z[1]) <= c.radar_radius);
            }
        }
    }

    #[test]
    fn grid_positions_are_separated() {
        for n in [1, 5, 10, 100] {
            let p = grid_positions(n, 10_000.0);
            assert_eq!(p.len(), n);
            for (i, a) in p.iter().enumerate() {
                assert!(a[0].hypot(a[1]) <= 7_000.0);
                for b in &p[i + 1..] {
                    assert!((a[0] - b[0]).hypot(a[1] - b[1]) > 1_000.0, "{n}");
                }
            }
        }
    }

    #[test]
    fn scripted_target_follows_waypoints() {
        let c = ScenarioConfig {
            target_count: 0,
            targets: vec![ScriptedTarget {
                waypoints: vec![[0.0, 0.0, 0.0], [10.0, 1000.0, 0.0]],
            }],
            ..quiet(1.0)
        };
        let mut sim = Simulator::new(&c);
        for k in 0..=10 {
            let scan = sim.next_scan();
            assert_eq!(scan.detections, vec![[100.0 * k as f64, 0.0]]);
        }
        assert!(sim.next_scan().detections.is_empty());
    }
}
