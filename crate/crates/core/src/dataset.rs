//! Labeled signal datasets: CSV ingestion, sample weights, stratified folds
//! and misclassification rate.
//!
//! The CSV format is long: header `id,t,label,x1,...,xn`, one row per
//! `(id, t)`, `t` covering `0..=T` for every id, `label` in `{1,-1}` and
//! constant within an id.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::DatasetError;
use crate::formula::Formula;
use crate::robustness::{check_compatible, eval};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    /// `C_p`, encoded `+1`.
    Positive,
    /// `C_n`, encoded `-1`.
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn code(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            1 => Some(Label::Positive),
            -1 => Some(Label::Negative),
            _ => None,
        }
    }

    pub fn from_satisfaction(sat: bool) -> Self {
        if sat {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        l.code()
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(code: i8) -> Result<Self, String> {
        Label::from_code(code.into()).ok_or_else(|| format!("label must be 1 or -1, got {code}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub signal: Signal,
    pub label: Label,
}

/// Non-empty collection of equally shaped labeled signals.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<Sample>,
    dimension: usize,
    horizon: usize,
}

impl LabeledDataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self, DatasetError> {
        let first = samples.first().ok_or(DatasetError::Empty)?;
        let (dimension, horizon) = (first.signal.dimension(), first.signal.horizon());
        for (index, s) in samples.iter().enumerate() {
            if s.signal.dimension() != dimension || s.signal.horizon() != horizon {
                return Err(DatasetError::DimensionMismatch {
                    index,
                    n: dimension,
                    horizon,
                    found_n: s.signal.dimension(),
                    found_horizon: s.signal.horizon(),
                });
            }
        }
        Ok(Self {
            samples,
            dimension,
            horizon,
        })
    }

    /// Convenience constructor assigning ids `0..N`.
    pub fn from_pairs(pairs: Vec<(Signal, Label)>) -> Result<Self, DatasetError> {
        Self::new(
            pairs
                .into_iter()
                .enumerate()
                .map(|(i, (signal, label))| Sample {
                    id: i.to_string(),
                    signal,
                    label,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &Sample {
        &self.samples[i]
    }

    pub fn signal(&self, i: usize) -> &Signal {
        &self.samples[i].signal
    }

    pub fn label(&self, i: usize) -> Label {
        self.samples[i].label
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.samples.iter().map(|s| s.label)
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels().filter(|l| *l == label).count()
    }

    /// Sub-dataset with the given sample indices, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, DatasetError> {
        Self::new(indices.iter().map(|&i| self.samples[i].clone()).collect())
    }

    /// Per-variable `(min, max)` over every sample and timepoint.
    pub fn value_ranges(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dimension];
        for s in &self.samples {
            for (j, row) in s.signal.rows().iter().enumerate() {
                for &v in row {
                    out[j].0 = out[j].0.min(v);
                    out[j].1 = out[j].1.max(v);
                }
            }
        }
        out
    }

    /// Robustness at time 0 of `formula` on every sample.
    pub fn robustness_vector(&self, formula: &Formula) -> Result<Vec<f64>, DatasetError> {
        check_compatible(formula, &self.samples[0].signal, 0)?;
        Ok(self
            .samples
            .iter()
            .map(|s| eval(formula, s.signal.rows(), 0))
            .collect())
    }
}

/// Misclassification rate of `formula` read as a classifier (`s ⊨ φ` means
/// positive).
pub fn mcr(formula: &Formula, dataset: &LabeledDataset) -> Result<f64, DatasetError> {
    let rho = dataset.robustness_vector(formula)?;
    let wrong = rho
        .iter()
        .zip(dataset.labels())
        .filter(|(r, l)| Label::from_satisfaction(**r >= 0.0) != *l)
        .count();
    Ok(wrong as f64 / dataset.len() as f64)
}

/// Boosting distribution over samples; sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWeights(Vec<f64>);

impl SampleWeights {
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Normalizes non-negative raw weights. Returns `None` if they do not
    /// have a positive finite sum.
    pub fn normalized(raw: Vec<f64>) -> Option<Self> {
        let total: f64 = raw.iter().sum();
        if !(total.is_finite() && total > 0.0) || raw.iter().any(|w| *w < 0.0) {
            return None;
        }
        Some(Self(raw.into_iter().map(|w| w / total).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Assignment of samples to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// `(train, test)` sample indices for fold `f`.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..self.assignment.len()).partition(|&i| self.assignment[i] == fold);
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified k-fold assignment: each class is shuffled and dealt round-robin,
/// continuing the deal across classes so fold sizes differ by at most one.
pub fn stratified_folds(dataset: &LabeledDataset, k: usize, seed: u64) -> Result<FoldPlan, DatasetError> {
    if k < 2 {
        return Err(DatasetError::Schema(format!("fold count must be at least 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; dataset.len()];
    let mut next = 0usize;
    for label in [Label::Positive, Label::Negative] {
        let mut members: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.label(i) == label).collect();
        if members.len() < k {
            return Err(DatasetError::TooFewSamples {
                folds: k,
                label: label.code(),
                count: members.len(),
            });
        }
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan { k, assignment, seed })
}

/// Expected CSV layout. `variables` pins `n` when known.
#[derive(Debug, Clone, Default)]
pub struct CsvSchema {
    pub variables: Option<usize>,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LabeledDataset, DatasetError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, schema)
}

pub fn read_csv(reader: impl Read, schema: &CsvSchema) -> Result<LabeledDataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::Schema(format!("missing column `{name}`")))
    };
    let (id_col, t_col, label_col) = (col("id")?, col("t")?, col("label")?);
    let n = match schema.variables {
        Some(n) => n,
        None => (1..).take_while(|j| headers.iter().any(|h| h == format!("x{j}"))).count(),
    };
    if n == 0 {
        return Err(DatasetError::Schema("no variable columns `x1..xn`".into()));
    }
    let var_cols = (1..=n).map(|j| col(&format!("x{j}"))).collect::<Result<Vec<_>, _>>()?;

    struct Pending {
        label: Label,
        rows: HashMap<usize, Vec<f64>>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut pending: HashMap<String, Pending> = HashMap::new();

    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = line + 2;
        let field = |c: usize| record.get(c).unwrap_or("");
        let id = field(id_col).to_string();
        let t: usize = field(t_col)
            .parse()
            .map_err(|_| DatasetError::Schema(format!("row {row_no}: bad time index `{}`", field(t_col))))?;
        let label = field(label_col)
            .parse::<i64>()
            .ok()
            .and_then(Label::from_code)
            .ok_or_else(|| DatasetError::Schema(format!("row {row_no}: unknown label `{}`", field(label_col))))?;
        let values = var_cols
            .iter()
            .map(|&c| {
                field(c)
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| DatasetError::Schema(format!("row {row_no}: bad value `{}`", field(c))))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let entry = pending.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Pending {
                label,
                rows: HashMap::new(),
            }
        });
        if entry.label != label {
            return Err(DatasetError::Schema(format!("row {row_no}: label changes within signal `{id}`")));
        }
        if entry.rows.insert(t, values).is_some() {
            return Err(DatasetError::Schema(format!("row {row_no}: duplicate (id, t) = ({id}, {t})")));
        }
    }

    let mut samples = Vec::with_capacity(order.len());
    let mut expected_len = None;
    for id in order {
        let p = pending.remove(&id).expect("id recorded on first sight");
        let len = p.rows.len();
        match expected_len {
            None => expected_len = Some(len),
            Some(e) if e != len => {
                return Err(DatasetError::Schema(format!(
                    "ragged signals: `{id}` has {len} timepoints, expected {e}"
                )))
            }
            _ => {}
        }
        let mut time_major = Vec::with_capacity(len);
        for t in 0..len {
            let row = p.rows.get(&t).ok_or_else(|| {
                DatasetError::Schema(format!("signal `{id}` is missing timepoint {t} (times must cover 0..T)"))
            })?;
            time_major.push(row.clone());
        }
        let signal = Signal::from_samples(&time_major).map_err(|e| DatasetError::Schema(format!("signal `{id}`: {e}")))?;
        samples.push(Sample {
            id,
            signal,
            label: p.label,
        });
    }
    LabeledDataset::new(samples)
}

pub fn write_csv(dataset: &LabeledDataset, writer: impl Write) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string(), "t".into(), "label".into()];
    header.extend((1..=dataset.dimension()).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for s in dataset.samples() {
        for t in 0..=dataset.horizon() {
            let mut rec = vec![s.id.clone(), t.to_string(), s.label.code().to_string()];
            rec.extend((0..dataset.dimension()).map(|j| format!("{:?}", s.signal.value(j, t))));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|source| DatasetError::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(())
}

pub fn save_csv(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_csv(dataset, std::io::BufWriter::new(file))
}
