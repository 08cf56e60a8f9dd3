//! Constant-time window extrema for evaluating temporal box primitives.
//!
//! `G[a,b]` distributes over the faces of a box, and `F[a,b]` over a single
//! face reduces to one extremum, so both only need per-variable window
//! min/max. `F` over a multi-face box falls back to a scan.

use crate::dataset::LabeledDataset;
use crate::formula::{BoxPredicate, Comparator, Interval, TemporalOp};

/// Sparse tables of one series: `mins[k][t] = min(x[t..t + 2^k])`.
#[derive(Debug, Clone)]
struct SparseTable {
    mins: Vec<Vec<f64>>,
    maxs: Vec<Vec<f64>>,
}

impl SparseTable {
    fn new(xs: &[f64]) -> Self {
        let mut mins = vec![xs.to_vec()];
        let mut maxs = vec![xs.to_vec()];
        let mut width = 1;
        while 2 * width <= xs.len() {
            let (pm, px) = (mins.last().unwrap(), maxs.last().unwrap());
            let len = xs.len() - 2 * width + 1;
            let m: Vec<f64> = (0..len).map(|t| pm[t].min(pm[t + width])).collect();
            let x: Vec<f64> = (0..len).map(|t| px[t].max(px[t + width])).collect();
            mins.push(m);
            maxs.push(x);
            width *= 2;
        }
        Self { mins, maxs }
    }

    #[inline]
    fn level(a: usize, b: usize) -> (usize, usize) {
        let len = b - a + 1;
        let k = (usize::BITS - 1 - len.leading_zeros()) as usize;
        (k, b + 1 - (1 << k))
    }

    #[inline]
    fn min(&self, a: usize, b: usize) -> f64 {
        let (k, c) = Self::level(a, b);
        self.mins[k][a].min(self.mins[k][c])
    }

    #[inline]
    fn max(&self, a: usize, b: usize) -> f64 {
        let (k, c) = Self::level(a, b);
        self.maxs[k][a].max(self.maxs[k][c])
    }
}

/// Window extrema for every `(sample, variable)` of a dataset.
#[derive(Debug, Clone)]
pub struct WindowIndex {
    tables: Vec<Vec<SparseTable>>,
}

impl WindowIndex {
    pub fn new(dataset: &LabeledDataset) -> Self {
        let tables = dataset
            .samples()
            .iter()
            .map(|s| s.signal.rows().iter().map(|r| SparseTable::new(r)).collect())
            .collect();
        Self { tables }
    }

    /// Robustness at time 0 of `op[interval] b` on sample `i` of the indexed
    /// dataset. The caller guarantees the window lies inside the horizon.
    pub fn primitive_robustness(
        &self,
        dataset: &LabeledDataset,
        i: usize,
        op: TemporalOp,
        interval: Interval,
        b: &BoxPredicate,
    ) -> f64 {
        let (a, e) = (interval.start, interval.end);
        let t = &self.tables[i];
        match op {
            TemporalOp::Always => b
                .conjuncts()
                .iter()
                .map(|c| match c.cmp {
                    Comparator::Gt => t[c.variable].min(a, e) - c.threshold,
                    Comparator::Le => c.threshold - t[c.variable].max(a, e),
                })
                .fold(f64::INFINITY, f64::min),
            TemporalOp::Eventually if b.len() == 1 => {
                let c = b.conjuncts()[0];
                match c.cmp {
                    Comparator::Gt => t[c.variable].max(a, e) - c.threshold,
                    Comparator::Le => c.threshold - t[c.variable].min(a, e),
                }
            }
            TemporalOp::Eventually => {
                let rows = dataset.signal(i).rows();
                (a..=e).map(|tau| b.margin_at(rows, tau)).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }
}
