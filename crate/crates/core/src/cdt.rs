//! Concise decision trees.
//!
//! Each internal node holds a valued temporal box primitive. Candidates are
//! found by particle swarm search over first-order templates, scored with
//! the boosted misclassification gain of the node's path formula conjoined
//! with the candidate. Before a node is split for good, the candidate of
//! each child is merged with the node's own candidate when both use the same
//! temporal operator; if the re-optimized merged primitive has strictly
//! higher gain, the node restarts with it.
//!
//! The path formula of a `⊤` child is `path ∧ φ`, of a `⊥` child
//! `path ∧ ¬φ`, so every sample at a node satisfies its path.

use std::cmp::Ordering;

use log::debug;

use crate::dataset::{Label, LabeledDataset, SampleWeights};
use crate::error::{CdtError, StlError};
use crate::formula::{Comparator, Formula, TemporalOp};
use crate::impurity::{best_leaf_label, score_split};
use crate::pso::{optimize_seeded, PsoConfig};
use crate::robustness::{check_compatible, robustness};
use crate::signal::Signal;
use crate::template::{as_primitive, threshold_bounds, FaceSlot, PstlTemplate, Valuation};
use crate::window::WindowIndex;

/// Minimum gain improvement for accepting a merged primitive.
pub const MIN_GAIN_IMPROVEMENT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CdtConfig {
    pub max_depth: usize,
    /// Majority fraction at which a node stops growing.
    pub lambda: f64,
    /// Temporal operators of the first-order primitive family.
    pub operators: Vec<TemporalOp>,
    pub pso: PsoConfig,
}

impl Default for CdtConfig {
    fn default() -> Self {
        Self {
            max_depth: 3,
            lambda: 0.95,
            operators: vec![TemporalOp::Always, TemporalOp::Eventually],
            pso: PsoConfig::default(),
        }
    }
}

impl CdtConfig {
    pub fn validate(&self) -> Result<(), CdtError> {
        if self.max_depth < 1 {
            return Err(CdtError::InvalidConfig("max depth must be at least 1".into()));
        }
        if !(self.lambda > 0.5 && self.lambda <= 1.0) {
            return Err(CdtError::InvalidConfig("lambda must lie in (0.5, 1]".into()));
        }
        if self.operators.is_empty() {
            return Err(CdtError::EmptyPrimitiveSet);
        }
        self.pso.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CdtNode {
    Leaf(Label),
    Internal {
        primitive: Formula,
        /// Subtree for signals satisfying the primitive.
        sat: Box<CdtNode>,
        /// Subtree for signals violating it.
        unsat: Box<CdtNode>,
    },
}

impl CdtNode {
    pub fn internal(primitive: Formula, sat: CdtNode, unsat: CdtNode) -> Self {
        CdtNode::Internal {
            primitive,
            sat: Box::new(sat),
            unsat: Box::new(unsat),
        }
    }

    /// Number of internal levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            CdtNode::Leaf(_) => 0,
            CdtNode::Internal { sat, unsat, .. } => 1 + sat.depth().max(unsat.depth()),
        }
    }

    pub fn internal_count(&self) -> usize {
        match self {
            CdtNode::Leaf(_) => 0,
            CdtNode::Internal { sat, unsat, .. } => 1 + sat.internal_count() + unsat.internal_count(),
        }
    }

    pub fn primitives(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn walk<'a>(n: &'a CdtNode, out: &mut Vec<&'a Formula>) {
            if let CdtNode::Internal { primitive, sat, unsat } = n {
                out.push(primitive);
                walk(sat, out);
                walk(unsat, out);
            }
        }
        walk(self, &mut out);
        out
    }

    /// Checks that every internal node holds a single temporal box primitive.
    pub fn validate(&self) -> Result<(), CdtError> {
        for p in self.primitives() {
            if as_primitive(p).is_none() {
                return Err(CdtError::NotAPrimitive(p.to_string()));
            }
            p.validate()
                .map_err(|e| CdtError::NotAPrimitive(format!("{p}: {e}")))?;
        }
        Ok(())
    }

    /// Walks left on satisfaction, right on violation.
    pub fn classify(&self, signal: &Signal) -> Result<Label, StlError> {
        let mut node = self;
        loop {
            match node {
                CdtNode::Leaf(l) => return Ok(*l),
                CdtNode::Internal { primitive, sat, unsat } => {
                    node = if robustness(primitive, signal, 0)? >= 0.0 { sat } else { unsat };
                }
            }
        }
    }

    /// Formula satisfied exactly by the signals the tree labels positive
    /// (up to zero-robustness ties): `(φ ∧ left) ∨ (¬φ ∧ right)` at every
    /// node, with constant branches folded away.
    pub fn to_stl(&self) -> Formula {
        match self {
            CdtNode::Leaf(l) => Formula::Const(*l == Label::Positive),
            CdtNode::Internal { primitive, sat, unsat } => {
                let (l, r) = (sat.to_stl(), unsat.to_stl());
                let phi = primitive.clone();
                let neg = || Formula::not(primitive.clone());
                match (l, r) {
                    (Formula::Const(true), Formula::Const(true)) => Formula::Const(true),
                    (Formula::Const(false), Formula::Const(false)) => Formula::Const(false),
                    (Formula::Const(true), Formula::Const(false)) => phi,
                    (Formula::Const(false), Formula::Const(true)) => neg(),
                    (Formula::Const(true), r) => Formula::or(vec![phi, Formula::and(vec![neg(), r])]),
                    (Formula::Const(false), r) => Formula::and(vec![neg(), r]),
                    (l, Formula::Const(false)) => Formula::and(vec![phi, l]),
                    (l, Formula::Const(true)) => Formula::or(vec![Formula::and(vec![phi, l]), neg()]),
                    (l, r) => Formula::or(vec![Formula::and(vec![phi, l]), Formula::and(vec![neg(), r])]),
                }
            }
        }
    }
}

/// Free-function form of [`CdtNode::to_stl`].
pub fn tree_to_stl(root: &CdtNode) -> Formula {
    root.to_stl()
}

/// Free-function form of [`CdtNode::classify`].
pub fn classify(root: &CdtNode, signal: &Signal) -> Result<Label, StlError> {
    root.classify(signal)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConcisenessEvent {
    pub depth: usize,
    pub before: Formula,
    /// Candidate of the child that was merged in.
    pub child: Formula,
    pub after: Formula,
    pub gain_before: f64,
    pub gain_after: f64,
}

/// Accepted primitive merges during one tree construction.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConcisenessLog {
    pub events: Vec<ConcisenessEvent>,
}

impl ConcisenessLog {
    pub fn count(&self) -> usize {
        self.events.len()
    }
}

/// Impurity gain, with total robustness mass as tie-breaker.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GainScore {
    pub gain: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPrimitive {
    pub formula: Formula,
    pub score: GainScore,
}

/// Outcome of primitive optimization at a node: a leaf label when the stop
/// conditions hold, otherwise the best primitive.
#[derive(Debug, Clone, PartialEq)]
pub enum Candidate {
    Label(Label),
    Primitive(ScoredPrimitive),
}

/// What to search over at a node.
#[derive(Debug, Clone, PartialEq)]
pub enum PrimitiveSpec {
    /// A fully valued primitive; scored, not searched.
    Fixed(Formula),
    Template(PstlTemplate),
}

/// Orders primitives by gain, then fewer operators, then margin.
fn compare_primitives(a: &ScoredPrimitive, b: &ScoredPrimitive) -> Ordering {
    a.score
        .gain
        .partial_cmp(&b.score.gain)
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.formula.operator_count().cmp(&a.formula.operator_count()))
        .then_with(|| a.score.margin.partial_cmp(&b.score.margin).unwrap_or(Ordering::Equal))
}

/// Per-node view: members, their path robustness, and the path formula.
struct Node {
    members: Vec<usize>,
    path: Formula,
    path_rho: Vec<f64>,
    depth: usize,
}

/// Tree construction state for one dataset and weighting.
pub struct CdtBuilder<'a> {
    dataset: &'a LabeledDataset,
    weights: &'a SampleWeights,
    cfg: &'a CdtConfig,
    index: WindowIndex,
    ranges: Vec<(f64, f64)>,
    family: Vec<PstlTemplate>,
    calls: u64,
    log: ConcisenessLog,
}

impl<'a> CdtBuilder<'a> {
    pub fn new(dataset: &'a LabeledDataset, weights: &'a SampleWeights, cfg: &'a CdtConfig) -> Result<Self, CdtError> {
        cfg.validate()?;
        if weights.len() != dataset.len() {
            return Err(CdtError::InvalidConfig(format!(
                "{} weights for {} samples",
                weights.len(),
                dataset.len()
            )));
        }
        let ranges = dataset.value_ranges();
        let family = PstlTemplate::first_order_family(&cfg.operators, &ranges, dataset.horizon())?;
        Ok(Self {
            dataset,
            weights,
            cfg,
            index: WindowIndex::new(dataset),
            ranges,
            family,
            calls: 0,
            log: ConcisenessLog::default(),
        })
    }

    /// First-order templates searched at every node.
    pub fn family(&self) -> &[PstlTemplate] {
        &self.family
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn build(mut self) -> Result<(CdtNode, ConcisenessLog), CdtError> {
        let members: Vec<usize> = (0..self.dataset.len()).collect();
        let root = Node {
            path_rho: vec![f64::INFINITY; members.len()],
            members,
            path: Formula::Const(true),
            depth: 0,
        };
        let fallback = self.majority(&root.members);
        let tree = self.grow(root, None, fallback)?;
        Ok((tree, self.log))
    }

    fn next_seed(&mut self) -> u64 {
        self.calls += 1;
        self.cfg
            .pso
            .seed
            .wrapping_add(self.calls.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    fn majority(&self, members: &[usize]) -> Label {
        let pos = members.iter().filter(|&&i| self.dataset.label(i) == Label::Positive).count();
        if 2 * pos >= members.len() {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// Depth limit, λ-purity on plain counts, or no samples.
    pub fn should_stop(&self, members: &[usize], depth: usize) -> bool {
        if members.is_empty() || depth >= self.cfg.max_depth {
            return true;
        }
        let pos = members.iter().filter(|&&i| self.dataset.label(i) == Label::Positive).count();
        let majority = pos.max(members.len() - pos);
        majority as f64 / members.len() as f64 >= self.cfg.lambda
    }

    fn primitive_rho(&self, i: usize, formula: &Formula) -> f64 {
        let (op, interval, b) = as_primitive(formula).expect("node formulas are primitives");
        self.index.primitive_robustness(self.dataset, i, op, interval, b)
    }

    fn score(&self, node: &Node, formula: &Formula) -> GainScore {
        let s = score_split(node.members.iter().zip(&node.path_rho).map(|(&i, &p)| {
            (
                self.dataset.label(i),
                self.weights.get(i),
                p.min(self.primitive_rho(i, formula)),
            )
        }));
        GainScore {
            gain: s.gain,
            margin: s.margin,
        }
    }

    fn optimize_template(
        &mut self,
        node: &Node,
        template: &PstlTemplate,
        seeds: &[Valuation],
    ) -> Result<ScoredPrimitive, CdtError> {
        let cfg = self.cfg.pso.with_seed(self.next_seed());
        let this = &*self;
        let objective = |v: &Valuation| {
            let f = template.instantiate(v);
            this.score(node, &f)
        };
        let out = optimize_seeded(template, objective, &cfg, seeds)?;
        Ok(ScoredPrimitive {
            formula: template.instantiate(&out.valuation),
            score: out.value,
        })
    }

    fn optimize_specs(&mut self, node: &Node, specs: &[PrimitiveSpec]) -> Result<ScoredPrimitive, CdtError> {
        let mut best: Option<ScoredPrimitive> = None;
        for spec in specs {
            let cand = match spec {
                PrimitiveSpec::Fixed(f) => {
                    if as_primitive(f).is_none() {
                        return Err(CdtError::NotAPrimitive(f.to_string()));
                    }
                    check_compatible(f, self.dataset.signal(0), 0)?;
                    ScoredPrimitive {
                        formula: f.clone(),
                        score: self.score(node, f),
                    }
                }
                PrimitiveSpec::Template(t) => self.optimize_template(node, t, &[])?,
            };
            if best.as_ref().is_none_or(|b| compare_primitives(&cand, b) == Ordering::Greater) {
                best = Some(cand);
            }
        }
        best.ok_or(CdtError::EmptyPrimitiveSet)
    }

    fn optimize_node(&mut self, node: &Node, specs: Option<&[PrimitiveSpec]>) -> Result<Candidate, CdtError> {
        if self.should_stop(&node.members, node.depth) {
            let label = if node.members.is_empty() {
                Label::Positive
            } else {
                best_leaf_label(self.dataset, self.weights, &node.members, &node.path)?
            };
            return Ok(Candidate::Label(label));
        }
        let owned;
        let specs = match specs {
            Some(s) => s,
            None => {
                owned = self.family.iter().cloned().map(PrimitiveSpec::Template).collect::<Vec<_>>();
                &owned
            }
        };
        Ok(Candidate::Primitive(self.optimize_specs(node, specs)?))
    }

    fn child(&self, node: &Node, members: Vec<usize>, formula: &Formula, satisfied: bool) -> Node {
        let path_rho = members
            .iter()
            .map(|&i| {
                let k = node.members.iter().position(|&m| m == i).expect("child member of parent");
                let r = self.primitive_rho(i, formula);
                node.path_rho[k].min(if satisfied { r } else { -r })
            })
            .collect();
        let step = if satisfied {
            formula.clone()
        } else {
            Formula::not(formula.clone())
        };
        let path = match &node.path {
            Formula::Const(true) => step,
            Formula::And { children, weights: None } => {
                let mut c = children.clone();
                c.push(step);
                Formula::and(c)
            }
            p => Formula::and(vec![p.clone(), step]),
        };
        Node {
            members,
            path,
            path_rho,
            depth: node.depth + 1,
        }
    }

    fn split(&self, node: &Node, formula: &Formula) -> (Node, Node) {
        let (mut top, mut bot) = (Vec::new(), Vec::new());
        for &i in &node.members {
            if self.primitive_rho(i, formula) >= 0.0 {
                top.push(i);
            } else {
                bot.push(i);
            }
        }
        (self.child(node, top, formula, true), self.child(node, bot, formula, false))
    }

    /// Seeds for a merged template: the parent's own valuation with the
    /// child-only faces left slack, and the child's with the parent faces
    /// left slack.
    fn merge_seeds(template: &PstlTemplate, parent: &Formula, child: &Formula) -> Vec<Valuation> {
        let seed_from = |primary: &Formula| {
            let (_, interval, b) = as_primitive(primary).expect("primitive");
            let thresholds = template
                .faces
                .iter()
                .map(|f| {
                    b.conjuncts()
                        .iter()
                        .find(|c| c.variable == f.variable && c.cmp == f.cmp)
                        .map(|c| c.threshold.clamp(f.lower, f.upper))
                        .unwrap_or(match f.cmp {
                            Comparator::Gt => f.lower,
                            Comparator::Le => f.upper,
                        })
                })
                .collect::<Vec<_>>();
            let mut point = vec![interval.start as f64, interval.end as f64];
            point.extend(thresholds);
            template.project(&point)
        };
        vec![seed_from(parent), seed_from(child)]
    }

    fn grow(&mut self, node: Node, candidate: Option<Candidate>, fallback: Label) -> Result<CdtNode, CdtError> {
        if node.members.is_empty() {
            return Ok(CdtNode::Leaf(fallback));
        }
        if self.should_stop(&node.members, node.depth) {
            let label = best_leaf_label(self.dataset, self.weights, &node.members, &node.path)?;
            return Ok(CdtNode::Leaf(label));
        }
        let mut current = match candidate {
            Some(Candidate::Primitive(p)) => p,
            _ => match self.optimize_node(&node, None)? {
                Candidate::Primitive(p) => p,
                Candidate::Label(l) => return Ok(CdtNode::Leaf(l)),
            },
        };
        let restart_cap = 2 * self.dataset.dimension();
        let mut restarts = 0;
        let (top, bot, child_candidates) = 'restart: loop {
            let (top, bot) = self.split(&node, &current.formula);
            if top.members.is_empty() || bot.members.is_empty() {
                // the best primitive does not separate anything here
                let label = best_leaf_label(self.dataset, self.weights, &node.members, &node.path)?;
                return Ok(CdtNode::Leaf(label));
            }
            let mut found = Vec::with_capacity(2);
            for child in [&top, &bot] {
                let cand = self.optimize_node(child, None)?;
                if let (Candidate::Primitive(cp), true) = (&cand, restarts < restart_cap) {
                    if let Some(template) = combine_primitives(
                        &current.formula,
                        &cp.formula,
                        &self.ranges,
                        self.dataset.horizon(),
                    )? {
                        let seeds = Self::merge_seeds(&template, &current.formula, &cp.formula);
                        let merged = self.optimize_template(&node, &template, &seeds)?;
                        if merged.score.gain > current.score.gain + MIN_GAIN_IMPROVEMENT {
                            debug!(
                                "depth {}: {} -> {} (gain {:.6} -> {:.6})",
                                node.depth, current.formula, merged.formula, current.score.gain, merged.score.gain
                            );
                            self.log.events.push(ConcisenessEvent {
                                depth: node.depth,
                                before: current.formula.clone(),
                                child: cp.formula.clone(),
                                after: merged.formula.clone(),
                                gain_before: current.score.gain,
                                gain_after: merged.score.gain,
                            });
                            current = merged;
                            restarts += 1;
                            continue 'restart;
                        }
                    }
                }
                found.push(cand);
            }
            break (top, bot, found);
        };
        let mut cands = child_candidates.into_iter();
        let (top_cand, bot_cand) = (cands.next(), cands.next());
        let top_fallback = self.majority(&top.members);
        let bot_fallback = self.majority(&bot.members);
        let sat = self.grow(top, top_cand, top_fallback)?;
        let unsat = self.grow(bot, bot_cand, bot_fallback)?;
        Ok(CdtNode::internal(current.formula, sat, unsat))
    }
}

/// Grows one concise decision tree on the weighted dataset.
pub fn build_cdt(
    dataset: &LabeledDataset,
    weights: &SampleWeights,
    cfg: &CdtConfig,
) -> Result<(CdtNode, ConcisenessLog), CdtError> {
    CdtBuilder::new(dataset, weights, cfg)?.build()
}

/// Primitive optimization at a node given by `members` (indices into
/// `dataset`), its path formula and depth. Returns the leaf label when the
/// stop conditions hold, otherwise the highest-gain primitive over `specs`.
pub fn optimize_primitive(
    dataset: &LabeledDataset,
    weights: &SampleWeights,
    members: &[usize],
    path: &Formula,
    specs: &[PrimitiveSpec],
    depth: usize,
    cfg: &CdtConfig,
) -> Result<Candidate, CdtError> {
    if specs.is_empty() {
        return Err(CdtError::EmptyPrimitiveSet);
    }
    let mut builder = CdtBuilder::new(dataset, weights, cfg)?;
    if let Some(&i) = members.first() {
        check_compatible(path, dataset.signal(i), 0)?;
    }
    let path_rho = members
        .iter()
        .map(|&i| robustness(path, dataset.signal(i), 0))
        .collect::<Result<Vec<_>, _>>()?;
    let node = Node {
        members: members.to_vec(),
        path: path.clone(),
        path_rho,
        depth,
    };
    builder.optimize_node(&node, Some(specs))
}

/// Merges two primitives with the same temporal operator into a template
/// over the conjunction of their boxes, with free time bounds and every
/// face threshold free. Faces present in both collapse to one parameter.
/// Returns `None` when the operators differ or the child adds no face the
/// parent lacks.
pub fn combine_primitives(
    parent: &Formula,
    child: &Formula,
    ranges: &[(f64, f64)],
    horizon: usize,
) -> Result<Option<PstlTemplate>, CdtError> {
    let (op_p, _, box_p) = as_primitive(parent).ok_or_else(|| CdtError::NotAPrimitive(parent.to_string()))?;
    let (op_c, _, box_c) = as_primitive(child).ok_or_else(|| CdtError::NotAPrimitive(child.to_string()))?;
    if op_p != op_c {
        return Ok(None);
    }
    let novel = box_c
        .conjuncts()
        .iter()
        .any(|c| !box_p.conjuncts().iter().any(|p| p.variable == c.variable && p.cmp == c.cmp));
    if !novel {
        return Ok(None);
    }
    let mut faces: Vec<FaceSlot> = Vec::new();
    for c in box_p.conjuncts().iter().chain(box_c.conjuncts()) {
        if faces.iter().any(|f| f.variable == c.variable && f.cmp == c.cmp) {
            continue;
        }
        let &(lo, hi) = ranges.get(c.variable).ok_or(StlError::VariableOutOfRange {
            variable: c.variable,
            dimension: ranges.len(),
        })?;
        let (lower, upper) = threshold_bounds(lo, hi);
        faces.push(FaceSlot {
            variable: c.variable,
            cmp: c.cmp,
            lower,
            upper,
        });
    }
    Ok(Some(PstlTemplate::new(op_p, faces, horizon)?))
}
