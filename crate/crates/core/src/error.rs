use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("signal has no variables")]
    NoVariables,
    #[error("signal has no timepoints")]
    EmptyHorizon,
    #[error("ragged signal: row {variable} has {found} entries, expected {expected}")]
    Ragged {
        variable: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in variable x{} at t={time}", variable + 1)]
    NonFinite { variable: usize, time: usize },
}

/// Violations of the formula AST invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("malformed interval [{start},{end}]: start exceeds end")]
    Interval { start: usize, end: usize },
    #[error("conjunction has {children} operands but {weights} weights")]
    WeightCount { children: usize, weights: usize },
    #[error("conjunction weight {0} is not a positive finite number")]
    Weight(f64),
    #[error("empty box predicate")]
    EmptyBox,
    #[error("threshold {0} is not finite")]
    Threshold(f64),
    #[error("box has two {cmp} faces on x{}", variable + 1)]
    DuplicateFace { variable: usize, cmp: &'static str },
    #[error("box on x{} is empty: lower face {lower} is not below upper face {upper}", variable + 1)]
    EmptyInterval {
        variable: usize,
        lower: f64,
        upper: f64,
    },
}

/// Failures while evaluating a formula over a signal.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StlError {
    #[error("evaluation at t={time} needs timepoint {needed} beyond horizon {horizon}")]
    OutOfHorizon {
        time: usize,
        needed: usize,
        horizon: usize,
    },
    #[error("formula references x{} but the signal has {dimension} variables", variable + 1)]
    VariableOutOfRange { variable: usize, dimension: usize },
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("dataset is empty")]
    Empty,
    #[error("signals disagree on shape: expected n={n}, T={horizon}, found n={found_n}, T={found_horizon} (sample {index})")]
    DimensionMismatch {
        index: usize,
        n: usize,
        horizon: usize,
        found_n: usize,
        found_horizon: usize,
    },
    #[error("too few samples for {folds} folds: class {label} has {count}")]
    TooFewSamples {
        folds: usize,
        label: i8,
        count: usize,
    },
    #[error(transparent)]
    Stl(#[from] StlError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsoError {
    #[error("empty parameter space: {0}")]
    EmptyParameterSpace(String),
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error)]
pub enum CdtError {
    #[error("no primitive templates to optimize over")]
    EmptyPrimitiveSet,
    #[error("not a temporal box primitive: {0}")]
    NotAPrimitive(String),
    #[error("invalid tree configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Stl(#[from] StlError),
    #[error(transparent)]
    Pso(#[from] PsoError),
}

#[derive(Debug, Error)]
pub enum BoostError {
    #[error("number of trees must be at least 1")]
    InvalidK,
    #[error("invalid boosting configuration: {0}")]
    InvalidConfig(String),
    #[error("no tree better than chance after {retries} retries")]
    NoWeakLearner { retries: usize },
    #[error(transparent)]
    Cdt(#[from] CdtError),
    #[error(transparent)]
    Stl(#[from] StlError),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model version {0}")]
    Version(u32),
    #[error("model is inconsistent: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error)]
pub enum CrossValError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Boost(#[from] BoostError),
}
