//! Random instance generators and from-definition reference evaluators.

#![allow(dead_code)]

use bcdt::cdt::CdtNode;
use bcdt::dataset::{Label, LabeledDataset, SampleWeights};
use bcdt::impurity::score_split;
use bcdt::pso::{grid_search, optimize, PsoConfig};
use bcdt::template::{threshold_bounds, PstlTemplate, Valuation};
use bcdt::{BoxPredicate, Comparator, Conjunct, Formula, Signal, TemporalOp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn comparator(rng: &mut ChaCha8Rng) -> Comparator {
    if rng.random_bool(0.5) {
        Comparator::Gt
    } else {
        Comparator::Le
    }
}

/// Threshold on a quarter grid so that ties with signal values occur.
pub fn threshold(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.3) {
        rng.random_range(-12..=12) as f64 * 0.25
    } else {
        rng.random_range(-3.0..3.0)
    }
}

pub fn random_box(rng: &mut ChaCha8Rng, n: usize) -> BoxPredicate {
    loop {
        let faces = rng.random_range(1..=3);
        let mut conjuncts = Vec::new();
        for _ in 0..faces {
            conjuncts.push(Conjunct::new(rng.random_range(0..n), comparator(rng), threshold(rng)));
        }
        if let Ok(b) = BoxPredicate::new(conjuncts) {
            return b;
        }
    }
}

/// Canonical random formula over `n` variables, of nesting depth at most
/// `depth`, whose temporal reach fits in `budget` steps.
pub fn random_formula(rng: &mut ChaCha8Rng, depth: usize, n: usize, budget: usize) -> Formula {
    if depth == 0 || rng.random_bool(0.15) {
        return if rng.random_bool(0.08) {
            Formula::Const(rng.random_bool(0.5))
        } else {
            Formula::Pred(random_box(rng, n))
        };
    }
    match rng.random_range(0..6) {
        0 => Formula::not(random_formula(rng, depth - 1, n, budget)),
        1 => {
            let k = rng.random_range(2..=3);
            let children = (0..k).map(|_| random_formula(rng, depth - 1, n, budget)).collect();
            if rng.random_bool(0.3) {
                let weights = (0..k).map(|_| rng.random_range(0.1..5.0)).collect();
                Formula::weighted_and(children, weights).unwrap()
            } else {
                Formula::and(children)
            }
        }
        2 => {
            let k = rng.random_range(2..=3);
            Formula::or((0..k).map(|_| random_formula(rng, depth - 1, n, budget)).collect())
        }
        op => {
            let end = rng.random_range(0..=budget);
            let start = rng.random_range(0..=end);
            let child = random_formula(rng, depth - 1, n, budget - end);
            if op == 3 || (op == 5 && rng.random_bool(0.5)) {
                Formula::always(start, end, child).unwrap()
            } else {
                Formula::eventually(start, end, child).unwrap()
            }
        }
    }
}

/// Signal with values on a half grid (frequent ties) or continuous.
pub fn random_signal(rng: &mut ChaCha8Rng, n: usize, horizon: usize) -> Signal {
    let grid = rng.random_bool(0.3);
    let rows = (0..n)
        .map(|_| {
            (0..=horizon)
                .map(|_| {
                    if grid {
                        rng.random_range(-6..=6) as f64 * 0.5
                    } else {
                        rng.random_range(-4.0..4.0)
                    }
                })
                .collect()
        })
        .collect();
    Signal::new(rows).unwrap()
}

/// Robustness written directly from the quantitative semantics, expanding
/// every time point.
pub fn naive_robustness(f: &Formula, s: &Signal, t: usize) -> f64 {
    match f {
        Formula::Const(true) => f64::INFINITY,
        Formula::Const(false) => f64::NEG_INFINITY,
        Formula::Pred(b) => {
            let mut worst = f64::INFINITY;
            for c in b.conjuncts() {
                let x = s.value(c.variable, t);
                let m = if c.cmp == Comparator::Gt { x - c.threshold } else { c.threshold - x };
                if m < worst {
                    worst = m;
                }
            }
            worst
        }
        Formula::Not(c) => -naive_robustness(c, s, t),
        Formula::And { children, .. } => {
            let mut r = f64::INFINITY;
            for c in children {
                r = r.min(naive_robustness(c, s, t));
            }
            r
        }
        Formula::Or(children) => {
            let mut r = f64::NEG_INFINITY;
            for c in children {
                r = r.max(naive_robustness(c, s, t));
            }
            r
        }
        Formula::Always(i, c) => {
            let mut r = f64::INFINITY;
            for tau in t + i.start..=t + i.end {
                r = r.min(naive_robustness(c, s, tau));
            }
            r
        }
        Formula::Eventually(i, c) => {
            let mut r = f64::NEG_INFINITY;
            for tau in t + i.start..=t + i.end {
                r = r.max(naive_robustness(c, s, tau));
            }
            r
        }
    }
}

/// Misclassification gain from the partition-weight definitions, with the
/// class shares of each side recomputed from scratch.
pub fn brute_force_gain(samples: &[(Label, f64, f64)]) -> f64 {
    let cap = |r: f64| r.clamp(-1e12, 1e12);
    let mass = |keep: &dyn Fn(&(Label, f64, f64)) -> bool| -> f64 {
        samples.iter().filter(|s| keep(s)).map(|s| s.1 * cap(s.2).abs()).sum()
    };
    let total = mass(&|_| true);
    if total <= 0.0 {
        return 0.0;
    }
    let mr = |side: &dyn Fn(&(Label, f64, f64)) -> bool| -> f64 {
        let all = mass(&|s| side(s));
        if all <= 0.0 {
            return 0.0;
        }
        let pos = mass(&|s| side(s) && s.0 == Label::Positive);
        let neg = mass(&|s| side(s) && s.0 == Label::Negative);
        (pos / all).min(neg / all)
    };
    let top = |s: &(Label, f64, f64)| s.2 >= 0.0;
    let bot = |s: &(Label, f64, f64)| s.2 < 0.0;
    mr(&|_| true) - mass(&top) / total * mr(&top) - mass(&bot) / total * mr(&bot)
}

/// Random temporal box primitive fitting the horizon.
pub fn random_primitive(rng: &mut ChaCha8Rng, n: usize, horizon: usize) -> Formula {
    let end = rng.random_range(0..=horizon);
    let start = rng.random_range(0..=end);
    let b = Formula::Pred(random_box(rng, n));
    if rng.random_bool(0.5) {
        Formula::always(start, end, b).unwrap()
    } else {
        Formula::eventually(start, end, b).unwrap()
    }
}

pub fn random_tree(rng: &mut ChaCha8Rng, depth: usize, n: usize, horizon: usize) -> CdtNode {
    if depth == 0 || rng.random_bool(0.25) {
        let label = if rng.random_bool(0.5) { Label::Positive } else { Label::Negative };
        return CdtNode::Leaf(label);
    }
    CdtNode::internal(
        random_primitive(rng, n, horizon),
        random_tree(rng, depth - 1, n, horizon),
        random_tree(rng, depth - 1, n, horizon),
    )
}

/// Random walk with unit-bounded steps: temporally correlated values.
pub fn random_walk(rng: &mut ChaCha8Rng, n: usize, horizon: usize) -> Signal {
    let rows = (0..n)
        .map(|_| {
            let mut x: f64 = rng.random_range(-3.0..3.0);
            (0..=horizon)
                .map(|_| {
                    let v = x;
                    x += rng.random_range(-1.0..1.0);
                    v
                })
                .collect()
        })
        .collect();
    Signal::new(rows).unwrap()
}

/// Gain with every sample's robustness replaced by its sign, so the
/// objective only changes where a threshold crosses a data value.
pub fn sign_gain(ds: &LabeledDataset, w: &SampleWeights, f: &Formula) -> f64 {
    score_split((0..ds.len()).map(|i| {
        let r = bcdt::robustness(f, ds.signal(i), 0).unwrap();
        (ds.label(i), w.get(i), if r >= 0.0 { 1.0 } else { -1.0 })
    }))
    .gain
}

/// Small first-order instance solved by the swarm (default settings) and
/// by exhaustive search over every data value. Returns (swarm, grid).
pub fn pso_and_grid(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(6..=12);
    let n = rng.random_range(1..=2);
    let horizon = 8;
    let pairs = (0..count)
        .map(|i| {
            let l = if i % 2 == 0 { Label::Positive } else { Label::Negative };
            (random_walk(&mut rng, n, horizon), l)
        })
        .collect();
    let ds = LabeledDataset::from_pairs(pairs).unwrap();
    let w = SampleWeights::uniform(count);
    let op = if rng.random_bool(0.5) { TemporalOp::Always } else { TemporalOp::Eventually };
    let var = rng.random_range(0..n);
    let cmp = comparator(&mut rng);
    let (lo, hi) = ds.value_ranges()[var];
    let template = PstlTemplate::first_order(op, var, cmp, threshold_bounds(lo, hi), horizon).unwrap();
    let objective = |v: &Valuation| sign_gain(&ds, &w, &template.instantiate(v));
    let mut values: Vec<f64> = ds.samples().iter().flat_map(|s| s.signal.row(var).to_vec()).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let (_, grid) = grid_search(&template, objective, 1, &[values]).unwrap();
    let swarm = optimize(&template, objective, &PsoConfig::default().with_seed(seed)).unwrap();
    (swarm.value, grid)
}
