//! Boosted concise decision trees: AdaBoost over CDT weak learners, with
//! M-weight pruning to the simplest perfect tree.

use log::warn;

use crate::cdt::{build_cdt, CdtConfig, CdtNode, ConcisenessLog};
use crate::dataset::{Label, LabeledDataset, SampleWeights};
use crate::error::{BoostError, ModelError};
use crate::formula::Formula;
use crate::signal::Signal;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    pub trees: usize,
    /// Weight given to a tree with zero weighted error.
    pub m_weight: f64,
    pub max_retries: usize,
    pub cdt: CdtConfig,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            trees: 1,
            m_weight: 100.0,
            max_retries: 5,
            cdt: CdtConfig::default(),
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<(), BoostError> {
        if self.trees < 1 {
            return Err(BoostError::InvalidK);
        }
        if !(self.m_weight.is_finite() && self.m_weight > 0.0) {
            return Err(BoostError::InvalidConfig("M must be positive and finite".into()));
        }
        self.cdt.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeakLearner {
    pub alpha: f64,
    pub epsilon: f64,
    pub formula: Formula,
    pub tree: CdtNode,
    #[serde(default, skip_serializing_if = "ConcisenessLog::is_empty_log")]
    pub conciseness: ConcisenessLog,
}

impl ConcisenessLog {
    fn is_empty_log(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoostedModel {
    pub version: u32,
    /// Signal dimension.
    pub n: usize,
    /// Signal horizon.
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "M")]
    pub m_weight: f64,
    pub trees: Vec<WeakLearner>,
    pub pruned_index: Option<usize>,
    pub config: BoostConfig,
}

/// `0.5·ln(1/ε − 1)`, or `m` for a perfect tree.
pub fn alpha_for(epsilon: f64, m: f64) -> f64 {
    if epsilon == 0.0 {
        m
    } else {
        0.5 * (1.0 / epsilon - 1.0).ln()
    }
}

/// Weighted fraction of samples the tree gets wrong.
pub fn weighted_error(predictions: &[Label], dataset: &LabeledDataset, weights: &SampleWeights) -> f64 {
    let wrong: f64 = predictions
        .iter()
        .enumerate()
        .filter(|&(i, &p)| p != dataset.label(i))
        .fold(0.0, |acc, (i, _)| acc + weights.get(i));
    wrong / weights.total()
}

/// `w_i ∝ w_i·exp(−α·ℓ_i·f(s_i))`, renormalized.
pub fn update_weights(
    weights: &SampleWeights,
    alpha: f64,
    predictions: &[Label],
    dataset: &LabeledDataset,
) -> SampleWeights {
    let raw = predictions
        .iter()
        .enumerate()
        .map(|(i, &p)| weights.get(i) * (-alpha * dataset.label(i).sign() * p.sign()).exp())
        .collect();
    SampleWeights::normalized(raw).unwrap_or_else(|| weights.clone())
}

/// Per-round weights recorded by [`train_bcdt_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoostRound {
    pub before: SampleWeights,
    pub after: SampleWeights,
    pub predictions: Vec<Label>,
    pub discarded: usize,
}

pub fn train_bcdt(dataset: &LabeledDataset, cfg: &BoostConfig) -> Result<BoostedModel, BoostError> {
    train_bcdt_traced(dataset, cfg).map(|(m, _)| m)
}

/// [`train_bcdt`] that also returns the weights before and after every kept
/// round.
pub fn train_bcdt_traced(
    dataset: &LabeledDataset,
    cfg: &BoostConfig,
) -> Result<(BoostedModel, Vec<BoostRound>), BoostError> {
    cfg.validate()?;
    let mut weights = SampleWeights::uniform(dataset.len());
    let mut trees = Vec::new();
    let mut rounds = Vec::new();
    let mut attempt: u64 = 0;
    'rounds: for k in 0..cfg.trees {
        let mut discarded = 0;
        loop {
            let mut cdt = cfg.cdt.clone();
            cdt.pso.seed = cfg.cdt.pso.seed.wrapping_add(attempt.wrapping_mul(0x2545_F491_4F6C_DD1D));
            attempt += 1;
            let (tree, log) = build_cdt(dataset, &weights, &cdt)?;
            let predictions = (0..dataset.len())
                .map(|i| tree.classify(dataset.signal(i)))
                .collect::<Result<Vec<_>, _>>()?;
            let epsilon = weighted_error(&predictions, dataset, &weights);
            if epsilon >= 0.5 {
                discarded += 1;
                if discarded > cfg.max_retries {
                    if trees.is_empty() {
                        return Err(BoostError::NoWeakLearner {
                            retries: cfg.max_retries,
                        });
                    }
                    warn!(
                        "round {}: no tree better than chance after {} retries; stopping with {} trees",
                        k + 1,
                        cfg.max_retries,
                        trees.len()
                    );
                    break 'rounds;
                }
                continue;
            }
            let alpha = alpha_for(epsilon, cfg.m_weight);
            let after = if epsilon == 0.0 {
                weights.clone()
            } else {
                update_weights(&weights, alpha, &predictions, dataset)
            };
            trees.push(WeakLearner {
                alpha,
                epsilon,
                formula: tree.to_stl(),
                tree,
                conciseness: log,
            });
            rounds.push(BoostRound {
                before: weights,
                after: after.clone(),
                predictions,
                discarded,
            });
            weights = after;
            break;
        }
    }
    let mut model = BoostedModel {
        version: MODEL_VERSION,
        n: dataset.dimension(),
        horizon: dataset.horizon(),
        m_weight: cfg.m_weight,
        trees,
        pruned_index: None,
        config: cfg.clone(),
    };
    model.pruned_index = select_pruned_tree(&model);
    Ok((model, rounds))
}

/// Among trees weighted `M`, the one with the fewest operators; earliest
/// wins ties.
pub fn select_pruned_tree(model: &BoostedModel) -> Option<usize> {
    model
        .trees
        .iter()
        .enumerate()
        .filter(|(_, t)| t.alpha == model.m_weight)
        .min_by_key(|(i, t)| (t.formula.operator_count(), *i))
        .map(|(i, _)| i)
}

impl BoostedModel {
    /// Total accepted primitive merges over all trees.
    pub fn conciseness_count(&self) -> usize {
        self.trees.iter().map(|t| t.conciseness.count()).sum()
    }

    pub fn predict(&self, signal: &Signal) -> Result<Label, BoostError> {
        if let Some(k) = self.pruned_index {
            return Ok(self.trees[k].tree.classify(signal)?);
        }
        let mut vote = 0.0;
        for t in &self.trees {
            vote += t.alpha * t.tree.classify(signal)?.sign();
        }
        Ok(if vote >= 0.0 { Label::Positive } else { Label::Negative })
    }

    /// Fraction of misclassified samples.
    pub fn mcr(&self, dataset: &LabeledDataset) -> Result<f64, BoostError> {
        let mut wrong = 0;
        for s in dataset.samples() {
            if self.predict(&s.signal)? != s.label {
                wrong += 1;
            }
        }
        Ok(wrong as f64 / dataset.len() as f64)
    }

    /// The pruned tree's formula, or the α-weighted conjunction of all
    /// tree formulas.
    pub fn to_wstl(&self) -> Formula {
        if let Some(k) = self.pruned_index {
            return self.trees[k].formula.clone();
        }
        let formulas = self.trees.iter().map(|t| t.formula.clone()).collect();
        let alphas = self.trees.iter().map(|t| t.alpha).collect();
        Formula::weighted_and(formulas, alphas).unwrap_or_else(|_| self.trees[0].formula.clone())
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let model: BoostedModel = serde_json::from_str(text)?;
        if model.version != MODEL_VERSION {
            return Err(ModelError::Version(model.version));
        }
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Inconsistent(m));
        if self.trees.is_empty() {
            return bad("no trees".into());
        }
        for (k, t) in self.trees.iter().enumerate() {
            if !(0.0..=0.5).contains(&t.epsilon) {
                return bad(format!("tree {k} has error {}", t.epsilon));
            }
            if !t.alpha.is_finite() || t.alpha < 0.0 {
                return bad(format!("tree {k} has weight {}", t.alpha));
            }
            t.tree
                .validate()
                .map_err(|e| ModelError::Inconsistent(format!("tree {k}: {e}")))?;
            if let Some(v) = t.formula.max_variable() {
                if v >= self.n {
                    return bad(format!("tree {k} uses x{} but n = {}", v + 1, self.n));
                }
            }
            if t.formula.horizon() > self.horizon {
                return bad(format!("tree {k} needs horizon {}", t.formula.horizon()));
            }
        }
        if let Some(k) = self.pruned_index {
            if k >= self.trees.len() || self.trees[k].alpha != self.m_weight {
                return bad(format!("pruned index {k} is not a perfect tree"));
            }
        }
        Ok(())
    }
}

/// Free-function form of [`BoostedModel::predict`].
pub fn predict(model: &BoostedModel, signal: &Signal) -> Result<Label, BoostError> {
    model.predict(signal)
}

/// Free-function form of [`BoostedModel::to_wstl`].
pub fn model_to_wstl(model: &BoostedModel) -> Formula {
    model.to_wstl()
}
