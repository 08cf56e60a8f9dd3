//! Synthetic labeled datasets: vessels approaching a harbor, a car closing
//! in on a braking vehicle, and a band-keeping signal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Label, LabeledDataset, Sample};
use crate::error::ScenarioError;
use crate::signal::Signal;

type Region = ((f64, f64), (f64, f64));

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::InvalidConfig(msg.into()))
}

fn check_common(count: usize, sigma: f64) -> Result<(), ScenarioError> {
    if count < 1 {
        return invalid("count per class must be at least 1");
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return invalid("noise sigma must be finite and non-negative");
    }
    Ok(())
}

fn uniform_in(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo < hi {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn point_in(rng: &mut ChaCha8Rng, region: Region) -> (f64, f64) {
    (uniform_in(rng, region.0), uniform_in(rng, region.1))
}

fn jitter(rng: &mut ChaCha8Rng, rows: &mut [Vec<f64>], sigma: f64) {
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("sigma checked");
        for v in rows.iter_mut().flat_map(|r| r.iter_mut()) {
            *v += normal.sample(rng);
        }
    }
}

fn assemble(samples: Vec<(Signal, Label)>, prefix: &str) -> LabeledDataset {
    let samples = samples
        .into_iter()
        .enumerate()
        .map(|(i, (signal, label))| Sample {
            id: format!("{prefix}{i}"),
            signal,
            label,
        })
        .collect();
    LabeledDataset::new(samples).expect("generated signals share one shape")
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct NavalConfig {
    pub count_per_class: usize,
    pub horizon: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Time at which every vessel reaches its middle waypoint.
    pub turn_time: usize,
    /// Where vessels enter from the open sea.
    pub sea: Region,
    pub harbor: (f64, f64),
    /// Middle waypoints: normal vessels, island detours, passage loiterers.
    pub lane: Region,
    pub island: Region,
    pub passage: Region,
    /// Where passage vessels head back to.
    pub exit: (f64, f64),
}

impl Default for NavalConfig {
    fn default() -> Self {
        Self {
            count_per_class: 100,
            horizon: 60,
            sigma: 0.0,
            seed: 0,
            turn_time: 17,
            sea: ((75.0, 85.0), (38.0, 44.0)),
            harbor: (12.0, 24.0),
            lane: ((41.5, 45.5), (27.5, 30.5)),
            island: ((52.0, 58.0), (34.0, 40.0)),
            passage: ((30.0, 36.0), (14.0, 20.0)),
            exit: (80.0, 45.0),
        }
    }
}

impl NavalConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        check_common(self.count_per_class, self.sigma)?;
        if !(0 < self.turn_time && self.turn_time < self.horizon) {
            return invalid("turn time must lie strictly inside the horizon");
        }
        Ok(())
    }
}

/// Piecewise-linear path through `(0, a)`, `(turn, b)`, `(horizon, c)`.
fn waypoint_path(a: (f64, f64), b: (f64, f64), c: (f64, f64), turn: usize, horizon: usize) -> Vec<Vec<f64>> {
    let lerp = |p: (f64, f64), q: (f64, f64), s: f64| (p.0 + (q.0 - p.0) * s, p.1 + (q.1 - p.1) * s);
    let (mut xs, mut ys) = (Vec::with_capacity(horizon + 1), Vec::with_capacity(horizon + 1));
    for t in 0..=horizon {
        let (x, y) = if t <= turn {
            lerp(a, b, t as f64 / turn as f64)
        } else {
            lerp(b, c, (t - turn) as f64 / (horizon - turn) as f64)
        };
        xs.push(x);
        ys.push(y);
    }
    vec![xs, ys]
}

/// Two-dimensional vessel positions. Positive signals pass through the lane
/// at the turn time and go to the harbor; negative ones alternate between a
/// detour by the island and a loiter in the passage followed by a return to
/// sea.
pub fn generate_naval(cfg: &NavalConfig) -> Result<LabeledDataset, ScenarioError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(2 * cfg.count_per_class);
    for i in 0..2 * cfg.count_per_class {
        let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
        let start = point_in(&mut rng, cfg.sea);
        let (mid, end) = match (label, (i / 2) % 2) {
            (Label::Positive, _) => (point_in(&mut rng, cfg.lane), cfg.harbor),
            (Label::Negative, 0) => (point_in(&mut rng, cfg.island), cfg.harbor),
            (Label::Negative, _) => (point_in(&mut rng, cfg.passage), cfg.exit),
        };
        let mut rows = waypoint_path(start, mid, end, cfg.turn_time, cfg.horizon);
        jitter(&mut rng, &mut rows, cfg.sigma);
        out.push((Signal::new(rows).expect("finite rows"), label));
    }
    Ok(assemble(out, "naval-"))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct UrbanConfig {
    pub count_per_class: usize,
    pub horizon: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Seconds per sample.
    pub dt: f64,
    pub initial_gap: (f64, f64),
    /// Positive traces: the lead car brakes at a time in this range (s).
    pub brake_time: (f64, f64),
    pub brake_decel: f64,
    /// Closest the gap gets once the ego car has stopped behind.
    pub min_gap: f64,
    /// Negative traces: the lead car pulls away with this acceleration.
    pub pull_away_accel: (f64, f64),
    pub pull_away_time: (f64, f64),
    /// Ratio between the vertical and longitudinal components.
    pub slope: (f64, f64),
}

impl Default for UrbanConfig {
    fn default() -> Self {
        Self {
            count_per_class: 150,
            horizon: 499,
            sigma: 0.0,
            seed: 0,
            dt: 0.02,
            initial_gap: (25.0, 35.0),
            brake_time: (6.0, 6.8),
            brake_decel: 6.0,
            min_gap: 2.0,
            pull_away_accel: (0.5, 2.0),
            pull_away_time: (1.0, 6.0),
            slope: (0.02, 0.1),
        }
    }
}

impl UrbanConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        check_common(self.count_per_class, self.sigma)?;
        if self.horizon < 1 {
            return invalid("horizon must be at least 1");
        }
        if !(self.dt > 0.0 && self.brake_decel > 0.0 && self.min_gap >= 0.0) {
            return invalid("time step, deceleration and minimum gap must be positive");
        }
        for (name, (lo, hi)) in [
            ("initial gap", self.initial_gap),
            ("brake time", self.brake_time),
            ("pull-away acceleration", self.pull_away_accel),
            ("pull-away time", self.pull_away_time),
            ("slope", self.slope),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return invalid(format!("{name} range [{lo}, {hi}] is empty"));
            }
        }
        if self.initial_gap.0 <= self.min_gap {
            return invalid("initial gap must exceed the minimum gap");
        }
        Ok(())
    }
}

/// Relative distance and closing speed `(y, v_y)` to the lead car, plus
/// their vertical components `(z, v_z) = slope·(y, v_y)`. Positive traces:
/// the lead car brakes hard late in the run and the gap closes down to the
/// minimum. Negative traces: the lead car pulls away.
pub fn generate_urban(cfg: &UrbanConfig) -> Result<LabeledDataset, ScenarioError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(2 * cfg.count_per_class);
    for i in 0..2 * cfg.count_per_class {
        let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
        let gap0 = uniform_in(&mut rng, cfg.initial_gap);
        let slope = uniform_in(&mut rng, cfg.slope);
        let (onset, accel) = match label {
            Label::Positive => (uniform_in(&mut rng, cfg.brake_time), cfg.brake_decel),
            Label::Negative => (
                uniform_in(&mut rng, cfg.pull_away_time),
                -uniform_in(&mut rng, cfg.pull_away_accel),
            ),
        };
        let mut rows = vec![Vec::with_capacity(cfg.horizon + 1); 4];
        let mut stopped = false;
        for t in 0..=cfg.horizon {
            let s = (t as f64 * cfg.dt - onset).max(0.0);
            let mut gap = gap0 - 0.5 * accel * s * s;
            let mut speed = accel * s;
            if stopped || gap <= cfg.min_gap {
                stopped = true;
                gap = cfg.min_gap;
                speed = 0.0;
            }
            rows[0].push(gap);
            rows[1].push(slope * gap);
            rows[2].push(speed);
            rows[3].push(slope * speed);
        }
        jitter(&mut rng, &mut rows, cfg.sigma);
        out.push((Signal::new(rows).expect("finite rows"), label));
    }
    Ok(assemble(out, "urban-"))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TwoBandConfig {
    pub positive_count: usize,
    /// Split evenly between the families above and below the band.
    pub negative_count: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Value of every `x2` before the settle time.
    pub start: f64,
    pub settle_time: usize,
    /// Ranges of the settled level of `x2` per family.
    pub band: (f64, f64),
    pub high: (f64, f64),
    pub low: (f64, f64),
    /// Half-width of the uniform noise around the settled level.
    pub wobble: f64,
}

impl Default for TwoBandConfig {
    fn default() -> Self {
        Self {
            positive_count: 40,
            negative_count: 20,
            horizon: 60,
            seed: 0,
            start: 28.5,
            settle_time: 17,
            band: (25.0, 32.0),
            high: (35.0, 40.0),
            low: (12.0, 20.0),
            wobble: 0.5,
        }
    }
}

impl TwoBandConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.positive_count < 1 || self.negative_count < 2 {
            return invalid("need at least one positive and two negative signals");
        }
        if !(0 < self.settle_time && self.settle_time <= self.horizon) {
            return invalid("settle time must lie in (0, horizon]");
        }
        if !(self.wobble.is_finite() && self.wobble >= 0.0) {
            return invalid("wobble must be finite and non-negative");
        }
        let w = self.wobble;
        if !(self.low.1 + w < self.band.0 - w && self.band.1 + w < self.high.0 - w) {
            return invalid("bands must be ordered low < band < high and disjoint");
        }
        Ok(())
    }
}

/// Positive signals settle into a band of `x2`; negative ones settle above
/// or below it. `x1` is the same ramp for every signal.
pub fn generate_two_band(cfg: &TwoBandConfig) -> Result<LabeledDataset, ScenarioError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total = cfg.positive_count + cfg.negative_count;
    let mut out = Vec::with_capacity(total);
    for i in 0..total {
        let (label, range) = if i < cfg.positive_count {
            (Label::Positive, cfg.band)
        } else if (i - cfg.positive_count) % 2 == 0 {
            (Label::Negative, cfg.high)
        } else {
            (Label::Negative, cfg.low)
        };
        let level = uniform_in(&mut rng, range);
        let x1 = (0..=cfg.horizon).map(|t| 10.0 + 0.5 * t as f64).collect();
        let x2 = (0..=cfg.horizon)
            .map(|t| {
                if t < cfg.settle_time {
                    cfg.start
                } else {
                    level + uniform_in(&mut rng, (-cfg.wobble, cfg.wobble))
                }
            })
            .collect();
        out.push((Signal::new(vec![x1, x2]).expect("finite rows"), label));
    }
    Ok(assemble(out, "band-"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::mcr;
    use crate::parser::parse;

    #[test]
    fn naval_separated_by_lane_formula() {
        let ds = generate_naval(&NavalConfig {
            count_per_class: 10,
            ..NavalConfig::default()
        })
        .unwrap();
        assert_eq!((ds.len(), ds.dimension(), ds.horizon()), (20, 2, 60));
        let phi = parse("F[15,20]((x1 > 40) & (x1 <= 47) & (x2 > 26) & (x2 <= 32))").unwrap();
        assert_eq!(mcr(&phi, &ds).unwrap(), 0.0);
    }

    #[test]
    fn urban_separated_by_closing_formula() {
        let ds = generate_urban(&UrbanConfig::default()).unwrap();
        assert_eq!((ds.len(), ds.dimension(), ds.horizon()), (300, 4, 499));
        let phi = parse("F[370,485]((x1 <= 14.01) & (x3 > 7.45))").unwrap();
        assert_eq!(mcr(&phi, &ds).unwrap(), 0.0);
    }

    #[test]
    fn two_band_separated_by_band_formula() {
        let ds = generate_two_band(&TwoBandConfig::default()).unwrap();
        let phi = parse("G[17,60]((x2 > 23.45) & (x2 <= 33.66))").unwrap();
        assert_eq!(mcr(&phi, &ds).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = NavalConfig {
            count_per_class: 3,
            sigma: 0.5,
            seed: 9,
            ..NavalConfig::default()
        };
        assert_eq!(generate_naval(&cfg).unwrap(), generate_naval(&cfg).unwrap());
        let other = NavalConfig { seed: 10, ..cfg.clone() };
        assert_ne!(generate_naval(&cfg).unwrap(), generate_naval(&other).unwrap());
        let u = UrbanConfig {
            count_per_class: 2,
            sigma: 0.1,
            ..UrbanConfig::default()
        };
        assert_eq!(generate_urban(&u).unwrap(), generate_urban(&u).unwrap());
    }

    #[test]
    fn rejects_bad_configs() {
        let zero = NavalConfig {
            count_per_class: 0,
            ..NavalConfig::default()
        };
        assert!(generate_naval(&zero).is_err());
        let noisy = UrbanConfig {
            sigma: -1.0,
            ..UrbanConfig::default()
        };
        assert!(generate_urban(&noisy).is_err());
        let bands = TwoBandConfig {
            band: (20.0, 36.0),
            ..TwoBandConfig::default()
        };
        assert!(generate_two_band(&bands).is_err());
    }
}
