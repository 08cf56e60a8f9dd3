//! Learning Signal Temporal Logic classifiers from labeled time series with
//! boosted concise decision trees.
//!
//! The pipeline is: [`dataset`] loads labeled signals, [`cdt`] grows
//! decision trees whose nodes are optimized temporal box primitives
//! ([`pso`] searches their parameters, [`impurity`] scores them), and
//! [`boost`] combines trees into a weighted ensemble rendered as a wSTL
//! formula. [`formula`], [`parser`] and [`robustness`] implement the logic
//! itself.

pub mod boost;
pub mod cdt;
pub mod crossval;
pub mod dataset;
pub mod error;
pub mod formula;
pub mod impurity;
pub mod parser;
pub mod pso;
pub mod robustness;
pub mod scenario;
pub mod signal;
pub mod template;
pub mod window;

pub use error::*;
pub use formula::{BoxPredicate, Comparator, Conjunct, Formula, Interval, TemporalOp};
pub use parser::{parse, ParseError};
pub use robustness::{robustness, satisfies, ROBUSTNESS_CAP};
pub use signal::Signal;
