//! Particle swarm maximization over a template's parameter space.
//!
//! Particles move in the relaxed continuous space (time bounds treated as
//! reals); every position is projected onto a feasible [`Valuation`] before
//! the objective sees it. The objective may return any partially ordered
//! fitness (plain `f64`, or a lexicographic score); it must be pure, since
//! a swarm is evaluated in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::PsoError;
use crate::template::{PstlTemplate, Valuation};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
    /// Maximum speed per coordinate as a fraction of its range.
    pub velocity_clamp: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 40,
            iterations: 60,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            seed: 0,
            velocity_clamp: 0.5,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<(), PsoError> {
        let bad = |m: &str| Err(PsoError::InvalidConfig(m.into()));
        if self.swarm_size < 2 {
            return bad("swarm size must be at least 2");
        }
        if self.iterations < 1 {
            return bad("iterations must be at least 1");
        }
        if !(0.0..1.0).contains(&self.inertia) {
            return bad("inertia must lie in [0, 1)");
        }
        if !(self.cognitive > 0.0 && self.social > 0.0) {
            return bad("cognitive and social coefficients must be positive");
        }
        if !(self.velocity_clamp > 0.0 && self.velocity_clamp.is_finite()) {
            return bad("velocity clamp must be positive");
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone)]
pub struct PsoOutcome<F> {
    pub valuation: Valuation,
    pub value: F,
    /// Global best after initialization and after each iteration.
    pub history: Vec<F>,
    pub evaluations: usize,
}

/// Iterations without a global improvement before the swarm is scattered.
const STALL_LIMIT: usize = 10;

fn better<F: PartialOrd>(a: &F, b: &F) -> bool {
    a.partial_cmp(b) == Some(std::cmp::Ordering::Greater)
}

pub fn optimize<F, O>(template: &PstlTemplate, objective: O, cfg: &PsoConfig) -> Result<PsoOutcome<F>, PsoError>
where
    F: PartialOrd + Copy + Send,
    O: Fn(&Valuation) -> F + Sync,
{
    optimize_seeded(template, objective, cfg, &[])
}

/// Like [`optimize`], with the first particles placed at `seeds`.
pub fn optimize_seeded<F, O>(
    template: &PstlTemplate,
    objective: O,
    cfg: &PsoConfig,
    seeds: &[Valuation],
) -> Result<PsoOutcome<F>, PsoError>
where
    F: PartialOrd + Copy + Send,
    O: Fn(&Valuation) -> F + Sync,
{
    cfg.validate()?;
    let mut bounds = template.search_bounds();
    if bounds.iter().any(|(lo, hi)| !(lo <= hi)) {
        return Err(PsoError::EmptyParameterSpace("inverted coordinate bounds".into()));
    }
    // let rounding reach both time endpoints with equal probability
    for b in bounds.iter_mut().take(2) {
        *b = (b.0 - 0.49, b.1 + 0.49);
    }
    let dim = bounds.len();
    let vmax: Vec<f64> = bounds.iter().map(|(lo, hi)| cfg.velocity_clamp * (hi - lo)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut pos: Vec<Vec<f64>> = Vec::with_capacity(cfg.swarm_size);
    for s in seeds.iter().take(cfg.swarm_size) {
        pos.push(template.encode(s));
    }
    while pos.len() < cfg.swarm_size {
        pos.push(bounds.iter().map(|&(lo, hi)| uniform(&mut rng, lo, hi)).collect());
    }
    let mut vel: Vec<Vec<f64>> = (0..cfg.swarm_size)
        .map(|_| vmax.iter().map(|&v| uniform(&mut rng, -v, v)).collect())
        .collect();

    let evaluate = |pos: &[Vec<f64>]| -> Vec<(Valuation, F)> {
        pos.par_iter()
            .map(|p| {
                let v = template.project(p);
                let f = objective(&v);
                (v, f)
            })
            .collect()
    };

    let mut evaluations = 0;
    let scored = evaluate(&pos);
    evaluations += scored.len();
    let mut pbest_pos = pos.clone();
    let mut pbest: Vec<(Valuation, F)> = scored;
    let mut g = 0;
    for i in 1..pbest.len() {
        if better(&pbest[i].1, &pbest[g].1) {
            g = i;
        }
    }
    let mut gbest_pos = pbest_pos[g].clone();
    let mut gbest = pbest[g].clone();
    let mut history = vec![gbest.1];
    let mut stalled = 0;

    for _ in 0..cfg.iterations {
        if stalled >= STALL_LIMIT {
            // scatter the swarm again; particle 0 restarts from the global best
            for i in 0..cfg.swarm_size {
                pos[i] = if i == 0 {
                    gbest_pos.clone()
                } else {
                    bounds.iter().map(|&(lo, hi)| uniform(&mut rng, lo, hi)).collect()
                };
                vel[i] = vmax.iter().map(|&v| uniform(&mut rng, -v, v)).collect();
            }
            let scored = evaluate(&pos);
            evaluations += scored.len();
            pbest_pos = pos.clone();
            pbest = scored;
            stalled = 0;
        }
        let k = cfg.swarm_size;
        for i in 0..k {
            // ring neighbourhood: each particle follows the best of itself and its two neighbours
            let mut nb = i;
            for j in [(i + k - 1) % k, (i + 1) % k] {
                if better(&pbest[j].1, &pbest[nb].1) {
                    nb = j;
                }
            }
            let lbest = pbest_pos[nb].clone();
            for d in 0..dim {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = cfg.inertia * vel[i][d]
                    + cfg.cognitive * r1 * (pbest_pos[i][d] - pos[i][d])
                    + cfg.social * r2 * (lbest[d] - pos[i][d]);
                vel[i][d] = v.clamp(-vmax[d], vmax[d]);
                let x = pos[i][d] + vel[i][d];
                let (lo, hi) = bounds[d];
                if x < lo || x > hi {
                    pos[i][d] = x.clamp(lo, hi);
                    vel[i][d] = 0.0;
                } else {
                    pos[i][d] = x;
                }
            }
        }
        let scored = evaluate(&pos);
        evaluations += scored.len();
        stalled += 1;
        for (i, cand) in scored.into_iter().enumerate() {
            if better(&cand.1, &pbest[i].1) {
                pbest_pos[i] = pos[i].clone();
                if better(&cand.1, &gbest.1) {
                    gbest_pos = pos[i].clone();
                    gbest = cand.clone();
                    stalled = 0;
                }
                pbest[i] = cand;
            }
        }
        history.push(gbest.1);
    }

    Ok(PsoOutcome {
        valuation: gbest.0,
        value: gbest.1,
        history,
        evaluations,
    })
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Exhaustive argmax over a finite grid: time bounds on a `time_stride`
/// lattice of `0..=T` (always including `T`), thresholds over the per-face
/// candidate lists. Combinations with inverted box faces are skipped; ties
/// keep the first point visited.
pub fn grid_search<F, O>(
    template: &PstlTemplate,
    objective: O,
    time_stride: usize,
    threshold_candidates: &[Vec<f64>],
) -> Result<(Valuation, F), PsoError>
where
    F: PartialOrd + Copy,
    O: Fn(&Valuation) -> F,
{
    if time_stride == 0 {
        return Err(PsoError::InvalidConfig("time stride must be positive".into()));
    }
    if threshold_candidates.len() != template.faces.len() || threshold_candidates.iter().any(Vec::is_empty) {
        return Err(PsoError::EmptyParameterSpace(
            "need a non-empty candidate list per face".into(),
        ));
    }
    let mut times: Vec<usize> = (0..=template.horizon).step_by(time_stride).collect();
    if times.last() != Some(&template.horizon) {
        times.push(template.horizon);
    }
    let mut best: Option<(Valuation, F)> = None;
    let mut index = vec![0usize; threshold_candidates.len()];
    loop {
        let thresholds: Vec<f64> = index
            .iter()
            .zip(threshold_candidates)
            .map(|(&k, c)| c[k])
            .collect();
        let consistent = template.faces.iter().enumerate().all(|(a, fa)| {
            template.faces.iter().enumerate().all(|(b, fb)| {
                !(fa.variable == fb.variable
                    && fa.cmp == crate::formula::Comparator::Gt
                    && fb.cmp == crate::formula::Comparator::Le)
                    || thresholds[a] < thresholds[b]
            })
        });
        if consistent {
            for (i, &t0) in times.iter().enumerate() {
                for &t1 in &times[i..] {
                    let v = Valuation {
                        t0,
                        t1,
                        thresholds: thresholds.clone(),
                    };
                    let f = objective(&v);
                    if best.as_ref().is_none_or(|(_, b)| better(&f, b)) {
                        best = Some((v, f));
                    }
                }
            }
        }
        // odometer increment
        let mut d = 0;
        loop {
            if d == index.len() {
                return best.ok_or_else(|| {
                    PsoError::EmptyParameterSpace("no consistent threshold combination".into())
                });
            }
            index[d] += 1;
            if index[d] < threshold_candidates[d].len() {
                break;
            }
            index[d] = 0;
            d += 1;
        }
    }
}
