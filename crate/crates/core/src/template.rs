//! PSTL primitive templates: `G[t0,t1] box` or `F[t0,t1] box` with free time
//! bounds and free face thresholds.

use crate::error::PsoError;
use crate::formula::{BoxPredicate, Comparator, Conjunct, Formula, Interval, TemporalOp};

/// A free threshold: which face it sets and its admissible range.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FaceSlot {
    pub variable: usize,
    pub cmp: Comparator,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PstlTemplate {
    pub op: TemporalOp,
    pub faces: Vec<FaceSlot>,
    /// Time bounds range over `0..=horizon`.
    pub horizon: usize,
}

/// Concrete parameters `θ` for a template.
#[derive(Debug, Clone, PartialEq)]
pub struct Valuation {
    pub t0: usize,
    pub t1: usize,
    pub thresholds: Vec<f64>,
}

/// Threshold search range for a variable observed over `[min, max]`: the
/// range padded by 1% on both sides (or by 0.5 when it is a single point).
pub fn threshold_bounds(min: f64, max: f64) -> (f64, f64) {
    let range = max - min;
    let pad = if range > 0.0 { 0.01 * range } else { 0.5 };
    (min - pad, max + pad)
}

impl PstlTemplate {
    pub fn new(op: TemporalOp, faces: Vec<FaceSlot>, horizon: usize) -> Result<Self, PsoError> {
        if faces.is_empty() {
            return Err(PsoError::EmptyParameterSpace("template has no faces".into()));
        }
        for (i, f) in faces.iter().enumerate() {
            if !(f.lower.is_finite() && f.upper.is_finite()) || f.lower > f.upper {
                return Err(PsoError::EmptyParameterSpace(format!(
                    "threshold bounds [{}, {}] for x{}",
                    f.lower,
                    f.upper,
                    f.variable + 1
                )));
            }
            if faces[..i].iter().any(|g| g.variable == f.variable && g.cmp == f.cmp) {
                return Err(PsoError::EmptyParameterSpace(format!(
                    "duplicate {} face on x{}",
                    f.cmp.symbol(),
                    f.variable + 1
                )));
            }
        }
        for (a, b) in opposing_pairs(&faces) {
            // need some lower < upper
            if faces[a].lower >= faces[b].upper {
                return Err(PsoError::EmptyParameterSpace(format!(
                    "faces on x{} cannot form a non-empty interval",
                    faces[a].variable + 1
                )));
            }
        }
        Ok(Self { op, faces, horizon })
    }

    /// `op[t0,t1](x_j cmp π)` with `π` ranging over `bounds`.
    pub fn first_order(
        op: TemporalOp,
        variable: usize,
        cmp: Comparator,
        bounds: (f64, f64),
        horizon: usize,
    ) -> Result<Self, PsoError> {
        Self::new(
            op,
            vec![FaceSlot {
                variable,
                cmp,
                lower: bounds.0,
                upper: bounds.1,
            }],
            horizon,
        )
    }

    /// Every first-order template for the given operators, one per
    /// `(operator, variable, comparator)`; `ranges[j]` is the observed range
    /// of variable `j`.
    pub fn first_order_family(
        ops: &[TemporalOp],
        ranges: &[(f64, f64)],
        horizon: usize,
    ) -> Result<Vec<Self>, PsoError> {
        let mut out = Vec::new();
        for &op in ops {
            for (j, &(lo, hi)) in ranges.iter().enumerate() {
                for cmp in [Comparator::Gt, Comparator::Le] {
                    out.push(Self::first_order(op, j, cmp, threshold_bounds(lo, hi), horizon)?);
                }
            }
        }
        Ok(out)
    }

    /// Number of search coordinates: two time bounds plus one per face.
    pub fn dimension(&self) -> usize {
        2 + self.faces.len()
    }

    pub fn instantiate(&self, v: &Valuation) -> Formula {
        let conjuncts = self
            .faces
            .iter()
            .zip(&v.thresholds)
            .map(|(f, &pi)| Conjunct::new(f.variable, f.cmp, pi))
            .collect();
        let b = BoxPredicate::new(conjuncts).expect("projected valuations form valid boxes");
        Formula::temporal(
            self.op,
            Interval {
                start: v.t0,
                end: v.t1,
            },
            Formula::Pred(b),
        )
    }

    pub fn is_feasible(&self, v: &Valuation) -> bool {
        if !(v.t0 <= v.t1 && v.t1 <= self.horizon) || v.thresholds.len() != self.faces.len() {
            return false;
        }
        let in_bounds = self
            .faces
            .iter()
            .zip(&v.thresholds)
            .all(|(f, &pi)| pi.is_finite() && f.lower <= pi && pi <= f.upper);
        in_bounds
            && opposing_pairs(&self.faces)
                .into_iter()
                .all(|(lo, hi)| v.thresholds[lo] < v.thresholds[hi])
    }

    /// Maps a point of the relaxed continuous search space onto a feasible
    /// valuation: time coordinates are rounded, clamped and ordered,
    /// thresholds clamped, and inverted box faces swapped apart.
    pub fn project(&self, point: &[f64]) -> Valuation {
        let time = |x: f64| {
            let r = x.round();
            if r.is_nan() || r <= 0.0 {
                0
            } else {
                (r as usize).min(self.horizon)
            }
        };
        let (mut t0, mut t1) = (time(point[0]), time(point[1]));
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        let mut thresholds: Vec<f64> = self
            .faces
            .iter()
            .zip(&point[2..])
            .map(|(f, &x)| if x.is_nan() { f.lower } else { x.clamp(f.lower, f.upper) })
            .collect();
        for (lo, hi) in opposing_pairs(&self.faces) {
            if thresholds[lo] > thresholds[hi] {
                thresholds.swap(lo, hi);
                thresholds[lo] = thresholds[lo].clamp(self.faces[lo].lower, self.faces[lo].upper);
                thresholds[hi] = thresholds[hi].clamp(self.faces[hi].lower, self.faces[hi].upper);
            }
            if thresholds[lo] >= thresholds[hi] {
                let span = (self.faces[hi].upper - self.faces[lo].lower).max(1.0);
                let delta = 1e-9 * span;
                if thresholds[lo] + delta <= self.faces[hi].upper {
                    thresholds[hi] = thresholds[lo] + delta;
                } else {
                    thresholds[hi] = self.faces[hi].upper;
                    thresholds[lo] = (thresholds[hi] - delta).max(self.faces[lo].lower);
                }
            }
        }
        Valuation { t0, t1, thresholds }
    }

    /// Search-space bounds per coordinate, `(lower, upper)`.
    pub fn search_bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(0.0, self.horizon as f64), (0.0, self.horizon as f64)];
        b.extend(self.faces.iter().map(|f| (f.lower, f.upper)));
        b
    }

    /// Continuous coordinates of a valuation.
    pub fn encode(&self, v: &Valuation) -> Vec<f64> {
        let mut p = vec![v.t0 as f64, v.t1 as f64];
        p.extend_from_slice(&v.thresholds);
        p
    }
}

/// Index pairs `(lower face, upper face)` sharing a variable.
fn opposing_pairs(faces: &[FaceSlot]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, f) in faces.iter().enumerate() {
        if f.cmp != Comparator::Gt {
            continue;
        }
        if let Some(k) = faces
            .iter()
            .position(|g| g.variable == f.variable && g.cmp == Comparator::Le)
        {
            out.push((i, k));
        }
    }
    out
}

/// Splits a single temporal box primitive into its parts.
pub fn as_primitive(f: &Formula) -> Option<(TemporalOp, Interval, &BoxPredicate)> {
    match f {
        Formula::Always(i, c) => match c.as_ref() {
            Formula::Pred(b) => Some((TemporalOp::Always, *i, b)),
            _ => None,
        },
        Formula::Eventually(i, c) => match c.as_ref() {
            Formula::Pred(b) => Some((TemporalOp::Eventually, *i, b)),
            _ => None,
        },
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band_template() -> PstlTemplate {
        PstlTemplate::new(
            TemporalOp::Always,
            vec![
                FaceSlot {
                    variable: 1,
                    cmp: Comparator::Gt,
                    lower: 0.0,
                    upper: 10.0,
                },
                FaceSlot {
                    variable: 1,
                    cmp: Comparator::Le,
                    lower: 0.0,
                    upper: 10.0,
                },
            ],
            20,
        )
        .unwrap()
    }

    #[test]
    fn projection_is_feasible() {
        let t = band_template();
        for point in [
            vec![-3.2, 40.0, 7.0, 2.0],
            vec![15.6, 2.4, 5.0, 5.0],
            vec![f64::NAN, 3.0, 10.0, 10.0],
            vec![1.0, 1.0, -5.0, 50.0],
        ] {
            let v = t.project(&point);
            assert!(t.is_feasible(&v), "{point:?} -> {v:?}");
        }
        let v = t.project(&[15.6, 2.4, 7.0, 2.0]);
        assert_eq!((v.t0, v.t1), (2, 16));
        assert_eq!(v.thresholds, vec![2.0, 7.0]);
    }

    #[test]
    fn instantiate_and_primitive_view() {
        let t = band_template();
        let f = t.instantiate(&Valuation {
            t0: 17,
            t1: 20,
            thresholds: vec![3.0, 4.0],
        });
        assert_eq!(f.to_string(), "G[17,20]((x2 > 3.0) & (x2 <= 4.0))");
        let (op, i, b) = as_primitive(&f).unwrap();
        assert_eq!((op, i.start, i.end, b.len()), (TemporalOp::Always, 17, 20, 2));
        assert!(as_primitive(&Formula::not(f)).is_none());
    }

    #[test]
    fn rejects_empty_spaces() {
        assert!(PstlTemplate::new(TemporalOp::Always, vec![], 3).is_err());
        let bad = FaceSlot {
            variable: 0,
            cmp: Comparator::Gt,
            lower: 2.0,
            upper: 1.0,
        };
        assert!(PstlTemplate::new(TemporalOp::Always, vec![bad], 3).is_err());
    }

    #[test]
    fn family_has_four_templates_per_variable() {
        let fam = PstlTemplate::first_order_family(
            &[TemporalOp::Always, TemporalOp::Eventually],
            &[(0.0, 1.0), (5.0, 5.0)],
            10,
        )
        .unwrap();
        assert_eq!(fam.len(), 8);
        assert_eq!(threshold_bounds(5.0, 5.0), (4.5, 5.5));
        assert_eq!(threshold_bounds(0.0, 100.0), (-1.0, 101.0));
    }
}
