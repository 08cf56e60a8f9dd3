//! STL formula AST over box predicates, with wSTL weights on conjunctions.
//!
//! The canonical form produced by the smart constructors (and by the parser)
//! never contains an unweighted conjunction of predicates that fits in a
//! single box, an unweighted conjunction with fewer than two operands, or a
//! disjunction with fewer than two operands. [`Formula::normalize`] maps any
//! valid AST to that form without changing its semantics.

use std::fmt;

use crate::error::FormulaError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Comparator {
    /// `s_j > π`
    Gt,
    /// `s_j <= π`
    Le,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Gt => ">",
            Comparator::Le => "<=",
        }
    }
}

/// One face of a box predicate: `x{variable+1} cmp threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conjunct {
    pub variable: usize,
    pub cmp: Comparator,
    pub threshold: f64,
}

impl Conjunct {
    pub fn new(variable: usize, cmp: Comparator, threshold: f64) -> Self {
        Self {
            variable,
            cmp,
            threshold,
        }
    }

    /// Robustness of the face against a single sample value.
    #[inline]
    pub fn margin(&self, value: f64) -> f64 {
        match self.cmp {
            Comparator::Gt => value - self.threshold,
            Comparator::Le => self.threshold - value,
        }
    }
}

/// Axis-aligned box: a conjunction of threshold faces with at most one lower
/// (`>`) and one upper (`<=`) face per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxPredicate {
    conjuncts: Vec<Conjunct>,
}

impl BoxPredicate {
    pub fn new(conjuncts: Vec<Conjunct>) -> Result<Self, FormulaError> {
        if conjuncts.is_empty() {
            return Err(FormulaError::EmptyBox);
        }
        for (i, c) in conjuncts.iter().enumerate() {
            if !c.threshold.is_finite() {
                return Err(FormulaError::Threshold(c.threshold));
            }
            for other in &conjuncts[..i] {
                if other.variable != c.variable {
                    continue;
                }
                if other.cmp == c.cmp {
                    return Err(FormulaError::DuplicateFace {
                        variable: c.variable,
                        cmp: c.cmp.symbol(),
                    });
                }
                let (lower, upper) = match c.cmp {
                    Comparator::Gt => (c.threshold, other.threshold),
                    Comparator::Le => (other.threshold, c.threshold),
                };
                if lower >= upper {
                    return Err(FormulaError::EmptyInterval {
                        variable: c.variable,
                        lower,
                        upper,
                    });
                }
            }
        }
        Ok(Self { conjuncts })
    }

    pub fn single(variable: usize, cmp: Comparator, threshold: f64) -> Result<Self, FormulaError> {
        Self::new(vec![Conjunct::new(variable, cmp, threshold)])
    }

    pub fn conjuncts(&self) -> &[Conjunct] {
        &self.conjuncts
    }

    pub fn len(&self) -> usize {
        self.conjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    /// Conjoins two boxes if the result is still a valid box.
    pub fn merge(&self, other: &BoxPredicate) -> Option<BoxPredicate> {
        let mut all = self.conjuncts.clone();
        all.extend_from_slice(&other.conjuncts);
        BoxPredicate::new(all).ok()
    }

    /// Robustness of the box at one timepoint of `values[j][t]`.
    #[inline]
    pub fn margin_at(&self, rows: &[Vec<f64>], t: usize) -> f64 {
        self.conjuncts
            .iter()
            .map(|c| c.margin(rows[c.variable][t]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Closed integer interval `[start, end]`, `start <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Result<Self, FormulaError> {
        if start > end {
            return Err(FormulaError::Interval { start, end });
        }
        Ok(Self { start, end })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum TemporalOp {
    Always,
    Eventually,
}

impl TemporalOp {
    pub fn symbol(self) -> char {
        match self {
            TemporalOp::Always => 'G',
            TemporalOp::Eventually => 'F',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Const(bool),
    Pred(BoxPredicate),
    Not(Box<Formula>),
    /// n-ary conjunction; `weights`, when present, are wSTL priorities.
    And {
        children: Vec<Formula>,
        weights: Option<Vec<f64>>,
    },
    Or(Vec<Formula>),
    Always(Interval, Box<Formula>),
    Eventually(Interval, Box<Formula>),
}

impl Formula {
    pub fn atom(variable: usize, cmp: Comparator, threshold: f64) -> Result<Self, FormulaError> {
        Ok(Formula::Pred(BoxPredicate::single(variable, cmp, threshold)?))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: Formula) -> Self {
        Formula::Not(Box::new(child))
    }

    /// Unweighted conjunction in canonical form.
    pub fn and(children: Vec<Formula>) -> Self {
        match children.len() {
            0 => return Formula::Const(true),
            1 => return children.into_iter().next().unwrap(),
            _ => {}
        }
        if let Some(merged) = merge_predicates(&children) {
            return Formula::Pred(merged);
        }
        Formula::And {
            children,
            weights: None,
        }
    }

    pub fn weighted_and(children: Vec<Formula>, weights: Vec<f64>) -> Result<Self, FormulaError> {
        check_weights(children.len(), &weights)?;
        Ok(Formula::And {
            children,
            weights: Some(weights),
        })
    }

    pub fn or(children: Vec<Formula>) -> Self {
        match children.len() {
            0 => Formula::Const(false),
            1 => children.into_iter().next().unwrap(),
            _ => Formula::Or(children),
        }
    }

    pub fn always(start: usize, end: usize, child: Formula) -> Result<Self, FormulaError> {
        Ok(Formula::Always(Interval::new(start, end)?, Box::new(child)))
    }

    pub fn eventually(start: usize, end: usize, child: Formula) -> Result<Self, FormulaError> {
        Ok(Formula::Eventually(Interval::new(start, end)?, Box::new(child)))
    }

    pub fn temporal(op: TemporalOp, interval: Interval, child: Formula) -> Self {
        match op {
            TemporalOp::Always => Formula::Always(interval, Box::new(child)),
            TemporalOp::Eventually => Formula::Eventually(interval, Box::new(child)),
        }
    }

    /// Checks every AST invariant, including those the enum cannot express.
    pub fn validate(&self) -> Result<(), FormulaError> {
        match self {
            Formula::Const(_) => Ok(()),
            Formula::Pred(b) => BoxPredicate::new(b.conjuncts.clone()).map(|_| ()),
            Formula::Not(c) => c.validate(),
            Formula::And { children, weights } => {
                if let Some(w) = weights {
                    check_weights(children.len(), w)?;
                }
                children.iter().try_for_each(Formula::validate)
            }
            Formula::Or(children) => children.iter().try_for_each(Formula::validate),
            Formula::Always(i, c) | Formula::Eventually(i, c) => {
                Interval::new(i.start, i.end)?;
                c.validate()
            }
        }
    }

    /// Rebuilds the formula bottom-up through the canonical constructors.
    pub fn normalize(&self) -> Formula {
        match self {
            Formula::Const(_) | Formula::Pred(_) => self.clone(),
            Formula::Not(c) => Formula::not(c.normalize()),
            Formula::And { children, weights } => {
                let children = children.iter().map(Formula::normalize).collect();
                match weights {
                    Some(w) => Formula::And {
                        children,
                        weights: Some(w.clone()),
                    },
                    None => Formula::and(children),
                }
            }
            Formula::Or(children) => Formula::or(children.iter().map(Formula::normalize).collect()),
            Formula::Always(i, c) => Formula::Always(*i, Box::new(c.normalize())),
            Formula::Eventually(i, c) => Formula::Eventually(*i, Box::new(c.normalize())),
        }
    }

    /// Number of Boolean and temporal operators. An n-ary conjunction or
    /// disjunction counts n-1, a box with k faces counts k-1.
    pub fn operator_count(&self) -> usize {
        match self {
            Formula::Const(_) => 0,
            Formula::Pred(b) => b.len() - 1,
            Formula::Not(c) => 1 + c.operator_count(),
            Formula::And { children, .. } | Formula::Or(children) => {
                children.len().saturating_sub(1) + children.iter().map(Formula::operator_count).sum::<usize>()
            }
            Formula::Always(_, c) | Formula::Eventually(_, c) => 1 + c.operator_count(),
        }
    }

    /// Furthest offset from the evaluation time that the semantics can reach.
    pub fn horizon(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Pred(_) => 0,
            Formula::Not(c) => c.horizon(),
            Formula::And { children, .. } | Formula::Or(children) => {
                children.iter().map(Formula::horizon).max().unwrap_or(0)
            }
            Formula::Always(i, c) | Formula::Eventually(i, c) => i.end + c.horizon(),
        }
    }

    /// Largest zero-based variable index referenced, if any.
    pub fn max_variable(&self) -> Option<usize> {
        match self {
            Formula::Const(_) => None,
            Formula::Pred(b) => b.conjuncts.iter().map(|c| c.variable).max(),
            Formula::Not(c) | Formula::Always(_, c) | Formula::Eventually(_, c) => c.max_variable(),
            Formula::And { children, .. } | Formula::Or(children) => {
                children.iter().filter_map(Formula::max_variable).max()
            }
        }
    }

    /// Renders thresholds and weights rounded to two decimals.
    pub fn to_human_string(&self) -> String {
        let mut out = String::new();
        write_formula(&mut out, self, Some(2)).expect("writing to a String cannot fail");
        out
    }
}

fn check_weights(children: usize, weights: &[f64]) -> Result<(), FormulaError> {
    if weights.len() != children || children == 0 {
        return Err(FormulaError::WeightCount {
            children,
            weights: weights.len(),
        });
    }
    match weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        Some(&w) => Err(FormulaError::Weight(w)),
        None => Ok(()),
    }
}

fn merge_predicates(children: &[Formula]) -> Option<BoxPredicate> {
    let mut faces = Vec::new();
    for child in children {
        match child {
            Formula::Pred(b) => faces.extend_from_slice(b.conjuncts()),
            _ => return None,
        }
    }
    BoxPredicate::new(faces).ok()
}

fn write_number(out: &mut impl fmt::Write, v: f64, precision: Option<usize>) -> fmt::Result {
    match precision {
        Some(p) => write!(out, "{v:.p$}"),
        None => write!(out, "{v:?}"),
    }
}

fn write_formula(out: &mut impl fmt::Write, f: &Formula, precision: Option<usize>) -> fmt::Result {
    match f {
        Formula::Const(true) => out.write_str("true"),
        Formula::Const(false) => out.write_str("false"),
        Formula::Pred(b) => {
            let multi = b.len() > 1;
            if multi {
                out.write_char('(')?;
            }
            for (i, c) in b.conjuncts().iter().enumerate() {
                if i > 0 {
                    out.write_str(" & ")?;
                }
                write!(out, "(x{} {} ", c.variable + 1, c.cmp.symbol())?;
                write_number(out, c.threshold, precision)?;
                out.write_char(')')?;
            }
            if multi {
                out.write_char(')')?;
            }
            Ok(())
        }
        Formula::Not(c) => {
            out.write_char('!')?;
            write_formula(out, c, precision)
        }
        Formula::And { children, weights } => {
            if children.is_empty() {
                return out.write_str("true");
            }
            if children.len() == 1 && weights.is_none() {
                return write_formula(out, &children[0], precision);
            }
            out.write_char('(')?;
            write_formula(out, &children[0], precision)?;
            if let Some(w) = weights {
                out.write_str(" &^{")?;
                for (i, wi) in w.iter().enumerate() {
                    if i > 0 {
                        out.write_char(',')?;
                    }
                    write_number(out, *wi, precision)?;
                }
                out.write_char('}')?;
                if children.len() > 1 {
                    out.write_char(' ')?;
                    write_formula(out, &children[1], precision)?;
                }
            } else {
                out.write_str(" & ")?;
                write_formula(out, &children[1], precision)?;
            }
            for c in children.iter().skip(2) {
                out.write_str(" & ")?;
                write_formula(out, c, precision)?;
            }
            out.write_char(')')
        }
        Formula::Or(children) => match children.len() {
            0 => out.write_str("false"),
            1 => write_formula(out, &children[0], precision),
            _ => {
                out.write_char('(')?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        out.write_str(" | ")?;
                    }
                    write_formula(out, c, precision)?;
                }
                out.write_char(')')
            }
        },
        Formula::Always(i, c) | Formula::Eventually(i, c) => {
            let op = if matches!(f, Formula::Always(..)) { 'G' } else { 'F' };
            write!(out, "{op}[{},{}]", i.start, i.end)?;
            write_formula(out, c, precision)
        }
    }
}

/// Canonical machine text: full-precision literals, re-parseable.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, None)
    }
}

impl serde::Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Formula {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        crate::parser::parse(&text).map_err(serde::de::Error::custom)
    }
}
