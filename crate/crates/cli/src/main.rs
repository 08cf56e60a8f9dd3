//! `bcdt`: learn, evaluate and monitor STL classifiers from labeled signals.

mod settings;

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bcdt::boost::{train_bcdt, BoostedModel};
use bcdt::crossval::cross_validate;
use bcdt::dataset::{load_csv, write_csv, CsvSchema, LabeledDataset};
use bcdt::error::{BoostError, CdtError, CrossValError, DatasetError, PsoError};
use bcdt::robustness::capped;
use bcdt::scenario::{generate_naval, generate_urban, NavalConfig, UrbanConfig};
use bcdt::{parse, robustness, Formula};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use settings::TrainingArgs;

#[derive(Debug)]
pub enum Failure {
    /// Bad input, configuration or data: exit code 1.
    User(String),
    /// Anything else: exit code 2.
    Internal(String),
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        Failure::User(e.to_string())
    }
}

impl From<BoostError> for Failure {
    fn from(e: BoostError) -> Self {
        match e {
            BoostError::Cdt(CdtError::Pso(PsoError::EmptyParameterSpace(_))) => Failure::Internal(e.to_string()),
            _ => Failure::User(e.to_string()),
        }
    }
}

impl From<CrossValError> for Failure {
    fn from(e: CrossValError) -> Self {
        match e {
            CrossValError::Dataset(e) => e.into(),
            CrossValError::Boost(e) => e.into(),
        }
    }
}

#[derive(Parser)]
#[command(name = "bcdt", version, about = "Boosted concise decision trees for signal temporal logic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Train one boosted model on a whole dataset
    Train {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        training: TrainingArgs,
        /// Where to write the model JSON
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Stratified k-fold cross-validation
    Cv {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        training: TrainingArgs,
        #[arg(long)]
        folds: Option<usize>,
        /// Where to write the JSON report
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Misclassification rate of a saved model on a dataset
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Also list id, label, prediction and robustness per signal
        #[arg(long)]
        per_signal: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Robustness of a formula on every signal, as CSV
    Monitor {
        #[arg(long)]
        formula: String,
        #[arg(long)]
        data: PathBuf,
    },
    /// Generate the synthetic naval dataset as CSV
    GenNaval {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 60)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the synthetic urban-driving dataset as CSV
    GenUrban {
        #[arg(long, default_value_t = 150)]
        count: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 499)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<LabeledDataset, Failure> {
    Ok(load_csv(path, &CsvSchema::default())?)
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::User(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))
}

fn emit_dataset(ds: &LabeledDataset, out: Option<&Path>) -> Result<String, Failure> {
    let mut buf = Vec::new();
    write_csv(ds, &mut buf)?;
    let text = String::from_utf8(buf).map_err(|e| Failure::Internal(e.to_string()))?;
    match out {
        Some(p) => {
            write_out(p, &text)?;
            Ok(format!("wrote {} signals to {}\n", ds.len(), p.display()))
        }
        None => Ok(text),
    }
}

fn robustness_cell(f: &Formula, ds: &LabeledDataset, i: usize) -> Result<f64, Failure> {
    robustness(f, ds.signal(i), 0)
        .map(capped)
        .map_err(|e| Failure::User(e.to_string()))
}

#[derive(Serialize)]
struct TreeSummary<'a> {
    alpha: f64,
    epsilon: f64,
    formula: &'a Formula,
    conciseness: usize,
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    trees: Vec<TreeSummary<'a>>,
    pruned_index: Option<usize>,
    formula: Formula,
    train_mcr: f64,
    ct: usize,
}

fn train(data: &Path, training: &TrainingArgs, out: Option<&Path>, format: Format) -> Result<String, Failure> {
    let resolved = training.resolve()?;
    let ds = load(data)?;
    let model = train_bcdt(&ds, &resolved.boost)?;
    if let Some(p) = out {
        write_out(p, &model.to_json().map_err(|e| Failure::Internal(e.to_string()))?)?;
    }
    let summary = TrainSummary {
        trees: model
            .trees
            .iter()
            .map(|t| TreeSummary {
                alpha: t.alpha,
                epsilon: t.epsilon,
                formula: &t.formula,
                conciseness: t.conciseness.count(),
            })
            .collect(),
        pruned_index: model.pruned_index,
        formula: model.to_wstl(),
        train_mcr: model.mcr(&ds)?,
        ct: model.conciseness_count(),
    };
    match format {
        Format::Json => json(&summary),
        Format::Text => {
            let mut s = String::new();
            for (k, t) in summary.trees.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "tree {}: alpha {:.4}, error {:.4}, CT {}: {}",
                    k + 1,
                    t.alpha,
                    t.epsilon,
                    t.conciseness,
                    t.formula.to_human_string()
                );
            }
            if let Some(k) = summary.pruned_index {
                let _ = writeln!(s, "pruned to tree {}", k + 1);
            }
            let _ = writeln!(s, "formula: {}", summary.formula.to_human_string());
            let _ = writeln!(s, "train MCR: {:.2}%", 100.0 * summary.train_mcr);
            if let Some(p) = out {
                let _ = writeln!(s, "model written to {}", p.display());
            }
            Ok(s)
        }
    }
}

fn cv(
    data: &Path,
    training: &TrainingArgs,
    folds: Option<usize>,
    out: Option<&Path>,
    format: Format,
) -> Result<String, Failure> {
    let resolved = training.resolve()?;
    let k = folds.or(resolved.folds).unwrap_or(5);
    let ds = load(data)?;
    let report = cross_validate(&ds, &resolved.boost, k, resolved.seed)?;
    if let Some(p) = out {
        write_out(p, &report.to_json())?;
    }
    Ok(match format {
        Format::Json => report.to_json(),
        Format::Text => report.to_text(),
    })
}

#[derive(Serialize)]
struct Verdict<'a> {
    id: &'a str,
    label: i8,
    prediction: i8,
    robustness: f64,
}

fn eval(model: &Path, data: &Path, per_signal: bool, format: Format) -> Result<String, Failure> {
    let text = std::fs::read_to_string(model).map_err(|e| Failure::User(format!("{}: {e}", model.display())))?;
    let model = BoostedModel::from_json(&text).map_err(|e| Failure::User(format!("{}: {e}", model.display())))?;
    let ds = load(data)?;
    if ds.dimension() != model.n || ds.horizon() != model.horizon {
        return Err(Failure::User(format!(
            "dataset has n={}, T={} but the model expects n={}, T={}",
            ds.dimension(),
            ds.horizon(),
            model.n,
            model.horizon
        )));
    }
    let formula = model.to_wstl();
    let mut verdicts = Vec::new();
    let mut wrong = 0;
    for (i, s) in ds.samples().iter().enumerate() {
        let prediction = model.predict(&s.signal)?;
        if prediction != s.label {
            wrong += 1;
        }
        if per_signal {
            verdicts.push(Verdict {
                id: &s.id,
                label: s.label.code(),
                prediction: prediction.code(),
                robustness: robustness_cell(&formula, &ds, i)?,
            });
        }
    }
    let mcr = wrong as f64 / ds.len() as f64;
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                mcr: f64,
                formula: &'a Formula,
                #[serde(skip_serializing_if = "Vec::is_empty")]
                signals: Vec<Verdict<'a>>,
            }
            json(&Report {
                mcr,
                formula: &formula,
                signals: verdicts,
            })
        }
        Format::Text => {
            let mut s = format!("MCR: {:.2}%\n", 100.0 * mcr);
            if per_signal {
                s.push_str("id,label,prediction,robustness\n");
                for v in verdicts {
                    let _ = writeln!(s, "{},{},{},{}", v.id, v.label, v.prediction, v.robustness);
                }
            }
            Ok(s)
        }
    }
}

fn monitor(text: &str, data: &Path) -> Result<String, Failure> {
    let formula = parse(text).map_err(|e| Failure::User(e.render(text)))?;
    let ds = load(data)?;
    let mut s = String::from("id,label,robustness\n");
    for (i, sample) in ds.samples().iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", sample.id, sample.label.code(), robustness_cell(&formula, &ds, i)?);
    }
    Ok(s)
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Train {
            data,
            training,
            out,
            format,
        } => train(&data, &training, out.as_deref(), format),
        Command::Cv {
            data,
            training,
            folds,
            out,
            format,
        } => cv(&data, &training, folds, out.as_deref(), format),
        Command::Eval {
            model,
            data,
            per_signal,
            format,
        } => eval(&model, &data, per_signal, format),
        Command::Monitor { formula, data } => monitor(&formula, &data),
        Command::GenNaval {
            count,
            sigma,
            seed,
            horizon,
            out,
        } => {
            let cfg = NavalConfig {
                count_per_class: count,
                sigma,
                seed,
                horizon,
                ..NavalConfig::default()
            };
            let ds = generate_naval(&cfg).map_err(|e| Failure::User(e.to_string()))?;
            emit_dataset(&ds, out.as_deref())
        }
        Command::GenUrban {
            count,
            sigma,
            seed,
            horizon,
            out,
        } => {
            let cfg = UrbanConfig {
                count_per_class: count,
                sigma,
                seed,
                horizon,
                ..UrbanConfig::default()
            };
            let ds = generate_urban(&cfg).map_err(|e| Failure::User(e.to_string()))?;
            emit_dataset(&ds, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BCDT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(out)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Ok(Err(Failure::User(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Internal(msg))) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}
