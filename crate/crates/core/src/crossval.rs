//! k-fold cross-validation of boosted models and the resulting run report.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::boost::{train_bcdt, BoostConfig, BoostedModel};
use crate::dataset::{stratified_folds, LabeledDataset};
use crate::error::CrossValError;
use crate::formula::Formula;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub train_mcr: f64,
    pub test_mcr: f64,
    /// Weighted conjunction of every tree, before pruning.
    pub initial_formula: Formula,
    pub final_formula: Formula,
    pub conciseness: usize,
    pub test_indices: Vec<usize>,
    pub model: BoostedModel,
}

/// Per-fold results with mean and population standard deviation of the
/// misclassification rates, in percent.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunReport {
    pub trees: usize,
    pub folds: Vec<FoldReport>,
    pub tr_m: f64,
    pub tr_s: f64,
    pub te_m: f64,
    pub te_s: f64,
    pub ct: usize,
    /// Wall-clock seconds of the whole run; not part of the JSON form so
    /// that reports are reproducible byte for byte.
    #[serde(skip)]
    pub runtime: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Stratified `k`-fold cross-validation; folds train in parallel.
pub fn cross_validate(
    dataset: &LabeledDataset,
    cfg: &BoostConfig,
    k: usize,
    seed: u64,
) -> Result<RunReport, CrossValError> {
    cfg.validate()?;
    let start = Instant::now();
    let plan = stratified_folds(dataset, k, seed)?;
    let folds = (0..k)
        .into_par_iter()
        .map(|fold| -> Result<FoldReport, CrossValError> {
            let (train_idx, test_idx) = plan.split(fold);
            let train = dataset.subset(&train_idx)?;
            let test = dataset.subset(&test_idx)?;
            let mut fold_cfg = cfg.clone();
            fold_cfg.cdt.pso.seed = cfg.cdt.pso.seed.wrapping_add(fold as u64);
            let model = train_bcdt(&train, &fold_cfg)?;
            let initial_formula = if model.trees.len() == 1 {
                model.trees[0].formula.clone()
            } else {
                Formula::weighted_and(
                    model.trees.iter().map(|t| t.formula.clone()).collect(),
                    model.trees.iter().map(|t| t.alpha).collect(),
                )
                .unwrap_or_else(|_| model.to_wstl())
            };
            Ok(FoldReport {
                fold,
                train_size: train.len(),
                test_size: test.len(),
                train_mcr: model.mcr(&train)?,
                test_mcr: model.mcr(&test)?,
                initial_formula,
                final_formula: model.to_wstl(),
                conciseness: model.conciseness_count(),
                test_indices: test_idx,
                model,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pct = |f: fn(&FoldReport) -> f64| folds.iter().map(|r| 100.0 * f(r)).collect::<Vec<_>>();
    let (tr_m, tr_s) = mean_std(&pct(|r| r.train_mcr));
    let (te_m, te_s) = mean_std(&pct(|r| r.test_mcr));
    Ok(RunReport {
        trees: cfg.trees,
        ct: folds.iter().map(|r| r.conciseness).sum(),
        folds,
        tr_m,
        tr_s,
        te_m,
        te_s,
        runtime: start.elapsed().as_secs_f64(),
    })
}

impl RunReport {
    pub const TABLE_HEADER: &'static str = "K, TR-M, TR-S, TE-M, TE-S, R, CT";

    pub fn table_row(&self) -> String {
        format!(
            "{}, {:.2}, {:.2}, {:.2}, {:.2}, {:.2}, {}",
            self.trees, self.tr_m, self.tr_s, self.te_m, self.te_s, self.runtime, self.ct
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.folds {
            let _ = writeln!(
                out,
                "fold {}: train MCR {:.2}%, test MCR {:.2}%, CT {}",
                f.fold + 1,
                100.0 * f.train_mcr,
                100.0 * f.test_mcr,
                f.conciseness
            );
            let _ = writeln!(out, "  initial: {}", f.initial_formula.to_human_string());
            let _ = writeln!(out, "  final:   {}", f.final_formula.to_human_string());
        }
        let _ = writeln!(out, "{}", Self::TABLE_HEADER);
        let _ = writeln!(out, "{}", self.table_row());
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
