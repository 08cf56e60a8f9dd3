//! Uniformly sampled multivariate signals over integer timepoints `0..=T`.

use crate::error::SignalError;

/// A fixed-horizon, uniformly sampled, multivariate real-valued trajectory.
///
/// Values are stored row-major by variable: `values[j][t]` is component `j`
/// (zero-based, printed as `x{j+1}`) at timepoint `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<Vec<f64>>,
}

impl Signal {
    /// Builds a signal from per-variable rows. Every row must have the same
    /// non-zero length and only finite entries.
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self, SignalError> {
        if values.is_empty() {
            return Err(SignalError::NoVariables);
        }
        let len = values[0].len();
        if len == 0 {
            return Err(SignalError::EmptyHorizon);
        }
        for (j, row) in values.iter().enumerate() {
            if row.len() != len {
                return Err(SignalError::Ragged {
                    variable: j,
                    expected: len,
                    found: row.len(),
                });
            }
            if let Some(t) = row.iter().position(|v| !v.is_finite()) {
                return Err(SignalError::NonFinite { variable: j, time: t });
            }
        }
        Ok(Self { values })
    }

    /// Builds a signal from time-major samples (`samples[t][j]`).
    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self, SignalError> {
        let n = samples.first().map(Vec::len).unwrap_or(0);
        let mut rows = vec![Vec::with_capacity(samples.len()); n];
        for (t, sample) in samples.iter().enumerate() {
            if sample.len() != n {
                return Err(SignalError::Ragged {
                    variable: t,
                    expected: n,
                    found: sample.len(),
                });
            }
            for (j, v) in sample.iter().enumerate() {
                rows[j].push(*v);
            }
        }
        Self::new(rows)
    }

    /// A signal whose every component is constant over `0..=horizon`.
    pub fn constant(levels: &[f64], horizon: usize) -> Result<Self, SignalError> {
        Self::new(levels.iter().map(|&v| vec![v; horizon + 1]).collect())
    }

    /// Number of variables `n`.
    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    /// Last timepoint `T`.
    pub fn horizon(&self) -> usize {
        self.values[0].len() - 1
    }

    #[inline]
    pub fn value(&self, variable: usize, t: usize) -> f64 {
        self.values[variable][t]
    }

    pub fn row(&self, variable: usize) -> &[f64] {
        &self.values[variable]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(Signal::new(vec![]), Err(SignalError::NoVariables));
        assert_eq!(Signal::new(vec![vec![]]), Err(SignalError::EmptyHorizon));
        assert!(matches!(
            Signal::new(vec![vec![0.0, 1.0], vec![0.0]]),
            Err(SignalError::Ragged { variable: 1, .. })
        ));
        assert!(matches!(
            Signal::new(vec![vec![0.0, f64::NAN]]),
            Err(SignalError::NonFinite { variable: 0, time: 1 })
        ));
    }

    #[test]
    fn sample_major_construction() {
        let s = Signal::from_samples(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(s.dimension(), 2);
        assert_eq!(s.horizon(), 2);
        assert_eq!(s.row(1), &[2.0, 4.0, 6.0]);
    }
}
