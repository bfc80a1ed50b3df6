//! Time moment sets, operator kernels and process chains.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::timeline::TimeMoment;
use crate::{PROB_TOLERANCE, ZERO_MASS};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub label: String,
    pub probability: f64,
}

/// A distribution over mutually exclusive events that all occur at one moment.
///
/// Every probability is strictly positive and the total is one within
/// [`PROB_TOLERANCE`]. Outcome order is the declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMomentSet {
    moment: TimeMoment,
    outcomes: Vec<Outcome>,
}

impl TimeMomentSet {
    pub fn new<L: Into<String>>(
        moment: TimeMoment,
        outcomes: impl IntoIterator<Item = (L, f64)>,
    ) -> Result<Self> {
        let set = Self::unchecked(moment, outcomes);
        match set.problems().into_iter().next() {
            None => Ok(set),
            Some(p) => Err(Error::InvalidSet(p.detail)),
        }
    }

    /// Builds a set without checking its invariants; see [`validate_chain`].
    pub fn unchecked<L: Into<String>>(
        moment: TimeMoment,
        outcomes: impl IntoIterator<Item = (L, f64)>,
    ) -> Self {
        Self {
            moment,
            outcomes: outcomes
                .into_iter()
                .map(|(label, probability)| Outcome {
                    label: label.into(),
                    probability,
                })
                .collect(),
        }
    }

    pub fn singleton(moment: TimeMoment, label: impl Into<String>) -> Self {
        Self::unchecked(moment, [(label.into(), 1.0)])
    }

    pub fn moment(&self) -> TimeMoment {
        self.moment
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.probability).collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|o| o.label.as_str())
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o.label == label)
    }

    pub fn probability(&self, label: &str) -> Result<f64> {
        self.index_of(label)
            .map(|i| self.outcomes[i].probability)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn at(&self, moment: TimeMoment) -> Self {
        Self {
            moment,
            outcomes: self.outcomes.clone(),
        }
    }

    fn problems(&self) -> Vec<Problem> {
        let mut out = Vec::new();
        if self.outcomes.is_empty() {
            out.push(Problem::new(ViolationKind::EmptySet, None, "set has no outcomes"));
            return out;
        }
        let mut seen = HashSet::new();
        for o in &self.outcomes {
            if !seen.insert(o.label.as_str()) {
                out.push(Problem::new(
                    ViolationKind::DuplicateLabel,
                    None,
                    format!("label `{}` declared twice", o.label),
                ));
            }
            if !(o.probability.is_finite() && o.probability > 0.0 && o.probability <= 1.0) {
                out.push(Problem::new(
                    ViolationKind::NonPositiveProbability,
                    None,
                    format!("p({}) = {:.7} is outside (0, 1]", o.label, o.probability),
                ));
            }
        }
        let total: f64 = self.outcomes.iter().map(|o| o.probability).sum();
        let dev = (total - 1.0).abs();
        if dev.is_nan() || dev > PROB_TOLERANCE {
            out.push(Problem::new(
                ViolationKind::Normalization,
                Some(dev),
                format!("probabilities sum to {total:.7}"),
            ));
        }
        out
    }
}

/// Structural class of a kernel, from its zero pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelClass {
    /// Rows one-hot and columns hold at most one non-zero entry.
    Bijective,
    /// Every row one-hot: a function from sources to targets.
    Deterministic,
    /// Every column has at most one non-zero entry: each target has one source.
    Refinement,
    General,
}

impl KernelClass {
    pub fn name(self) -> &'static str {
        match self {
            KernelClass::Bijective => "BIJECTIVE",
            KernelClass::Deterministic => "DETERMINISTIC",
            KernelClass::Refinement => "REFINEMENT",
            KernelClass::General => "GENERAL",
        }
    }
}

impl fmt::Display for KernelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Row-stochastic transition map between consecutive time moment sets.
///
/// `rows[i][j]` is the probability of target `j` given source `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorKernel {
    rows: Vec<Vec<f64>>,
    target_labels: Vec<String>,
}

impl OperatorKernel {
    /// Validated kernel with targets labelled `y1..yn`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        let labels = (1..=width).map(|j| format!("y{j}")).collect();
        Self::with_target_labels(rows, labels)
    }

    pub fn with_target_labels(rows: Vec<Vec<f64>>, target_labels: Vec<String>) -> Result<Self> {
        let kernel = Self::unchecked(rows, target_labels);
        match kernel.problems().into_iter().next() {
            None => Ok(kernel),
            Some(p) => Err(Error::InvalidKernel(p.detail)),
        }
    }

    pub fn unchecked(rows: Vec<Vec<f64>>, target_labels: Vec<String>) -> Self {
        Self {
            rows,
            target_labels,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_map(&(0..n).collect::<Vec<_>>(), n)
    }

    /// Deterministic kernel sending source `i` to target `map[i]`.
    pub fn from_map(map: &[usize], target_arity: usize) -> Self {
        let rows = map
            .iter()
            .map(|&j| {
                let mut row = vec![0.0; target_arity];
                row[j] = 1.0;
                row
            })
            .collect();
        let labels = (1..=target_arity).map(|j| format!("y{j}")).collect();
        Self::unchecked(rows, labels)
    }

    pub fn source_arity(&self) -> usize {
        self.rows.len()
    }

    pub fn target_arity(&self) -> usize {
        self.target_labels.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn target_labels(&self) -> &[String] {
        &self.target_labels
    }

    pub fn relabel_targets(mut self, labels: Vec<String>) -> Self {
        self.target_labels = labels;
        self
    }

    pub fn entry(&self, source: usize, target: usize) -> f64 {
        self.rows[source][target]
    }

    /// The single target of a one-hot row.
    pub fn target_of(&self, source: usize) -> Option<usize> {
        let mut hits = self.rows[source]
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > ZERO_MASS);
        match (hits.next(), hits.next()) {
            (Some((j, _)), None) => Some(j),
            _ => None,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        (0..self.source_arity()).all(|i| self.target_of(i).is_some())
    }

    pub fn is_refinement(&self) -> bool {
        (0..self.target_arity()).all(|j| {
            self.rows
                .iter()
                .filter(|row| row.get(j).is_some_and(|&p| p > ZERO_MASS))
                .count()
                <= 1
        })
    }

    pub fn is_bijective(&self) -> bool {
        self.is_deterministic() && self.is_refinement()
    }

    pub fn class(&self) -> KernelClass {
        match (self.is_deterministic(), self.is_refinement()) {
            (true, true) => KernelClass::Bijective,
            (true, false) => KernelClass::Deterministic,
            (false, true) => KernelClass::Refinement,
            (false, false) => KernelClass::General,
        }
    }

    fn problems(&self) -> Vec<Problem> {
        let mut out = Vec::new();
        if self.rows.is_empty() {
            out.push(Problem::new(ViolationKind::InvalidKernelEntry, None, "kernel has no rows"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.target_arity() {
                out.push(Problem::new(
                    ViolationKind::ArityMismatch,
                    None,
                    format!(
                        "row {i} has {} entries, expected {}",
                        row.len(),
                        self.target_arity()
                    ),
                ));
                continue;
            }
            if let Some((j, p)) = row
                .iter()
                .enumerate()
                .find(|(_, p)| !(p.is_finite() && (0.0..=1.0).contains(*p)))
            {
                out.push(Problem::new(
                    ViolationKind::InvalidKernelEntry,
                    None,
                    format!("entry [{i}][{j}] = {p:.7} is outside [0, 1]"),
                ));
                continue;
            }
            let total: f64 = row.iter().sum();
            let dev = (total - 1.0).abs();
            if dev.is_nan() || dev > PROB_TOLERANCE {
                out.push(Problem::new(
                    ViolationKind::KernelRowNormalization,
                    Some(dev),
                    format!("row {i} sums to {total:.7}"),
                ));
            }
        }
        out
    }

    fn expect_source_arity(&self, n: usize) -> Result<()> {
        if self.source_arity() != n {
            return Err(Error::ArityMismatch {
                expected: n,
                found: self.source_arity(),
            });
        }
        Ok(())
    }
}

/// Target masses `Σ_i p_i · rows[i][j]`, without dropping anything.
pub fn pushforward_mass(source: &[f64], kernel: &OperatorKernel) -> Result<Vec<f64>> {
    kernel.expect_source_arity(source.len())?;
    let mut out = vec![0.0; kernel.target_arity()];
    for (p, row) in source.iter().zip(kernel.rows()) {
        for (acc, rho) in out.iter_mut().zip(row) {
            *acc += p * rho;
        }
    }
    Ok(out)
}

/// Distribution at the next moment, dropping targets with mass below [`ZERO_MASS`].
pub fn pushforward(source: &TimeMomentSet, kernel: &OperatorKernel) -> Result<TimeMomentSet> {
    pushforward_to(source, kernel, source.moment().succ())
}

pub fn pushforward_to(
    source: &TimeMomentSet,
    kernel: &OperatorKernel,
    moment: TimeMoment,
) -> Result<TimeMomentSet> {
    let mass = pushforward_mass(&source.probabilities(), kernel)?;
    Ok(TimeMomentSet::unchecked(
        moment,
        kernel
            .target_labels()
            .iter()
            .zip(mass)
            .filter(|(_, p)| *p >= ZERO_MASS)
            .map(|(l, p)| (l.clone(), p)),
    ))
}

/// Posterior `p(x | y)` for every target with positive mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Reversal {
    /// Pushed-forward target masses, one per kernel column.
    pub marginal: Vec<f64>,
    /// `(target index, posterior over sources)` in column order.
    pub posteriors: Vec<(usize, Vec<f64>)>,
}

pub fn bayes_reverse(source: &TimeMomentSet, kernel: &OperatorKernel) -> Result<Reversal> {
    let prior = source.probabilities();
    let marginal = pushforward_mass(&prior, kernel)?;
    let posteriors = marginal
        .iter()
        .enumerate()
        .filter(|(_, &q)| q > ZERO_MASS)
        .map(|(j, &q)| {
            let post = prior
                .iter()
                .zip(kernel.rows())
                .map(|(p, row)| row[j] * p / q)
                .collect();
            (j, post)
        })
        .collect();
    Ok(Reversal {
        marginal,
        posteriors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surjectivity {
    pub surjective: bool,
    pub bijective: bool,
    /// First target with no incoming edge.
    pub witness: Option<String>,
}

/// Scans a deterministic kernel for targets nothing maps onto.
///
/// Any such target has positive declared mass but receives none, so a `false`
/// answer also certifies that the chain segment cannot be temporally consistent.
pub fn check_surjectivity(kernel: &OperatorKernel, target: &TimeMomentSet) -> Result<Surjectivity> {
    if !kernel.is_deterministic() {
        return Err(Error::NotDeterministic);
    }
    if kernel.target_arity() != target.len() {
        return Err(Error::ArityMismatch {
            expected: target.len(),
            found: kernel.target_arity(),
        });
    }
    let mut hit = vec![false; target.len()];
    for i in 0..kernel.source_arity() {
        if let Some(j) = kernel.target_of(i) {
            hit[j] = true;
        }
    }
    let witness = hit
        .iter()
        .position(|h| !h)
        .map(|j| target.outcomes()[j].label.clone());
    Ok(Surjectivity {
        surjective: witness.is_none(),
        bijective: witness.is_none() && kernel.is_refinement(),
        witness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndependenceReport {
    /// `p(y | x) = p(y)` for all pairs.
    pub forward: bool,
    /// `p(x | y) = p(x)` for all pairs.
    pub backward: bool,
}

impl IndependenceReport {
    pub fn independent(&self) -> bool {
        self.forward && self.backward
    }

    /// The two conditional directions disagree; only rounding can cause this.
    pub fn anomaly(&self) -> bool {
        self.forward != self.backward
    }
}

pub fn independence_report(
    source: &TimeMomentSet,
    kernel: &OperatorKernel,
) -> Result<IndependenceReport> {
    let rev = bayes_reverse(source, kernel)?;
    let forward = kernel.rows().iter().all(|row| {
        row.iter()
            .zip(&rev.marginal)
            .all(|(a, b)| (a - b).abs() <= PROB_TOLERANCE)
    });
    let prior = source.probabilities();
    let backward = rev.posteriors.iter().all(|(_, post)| {
        post.iter()
            .zip(&prior)
            .all(|(a, b)| (a - b).abs() <= PROB_TOLERANCE)
    });
    Ok(IndependenceReport { forward, backward })
}

pub fn independence_test(source: &TimeMomentSet, kernel: &OperatorKernel) -> Result<bool> {
    independence_report(source, kernel).map(|r| r.independent())
}

/// Stages joined by kernels, optionally with the realized event at each stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessChain {
    stages: Vec<TimeMomentSet>,
    kernels: Vec<OperatorKernel>,
    realized: Option<Vec<String>>,
    artificial_variation: bool,
}

impl ProcessChain {
    /// Validated chain.
    pub fn new(
        stages: Vec<TimeMomentSet>,
        kernels: Vec<OperatorKernel>,
        realized: Option<Vec<String>>,
    ) -> Result<Self> {
        Self::from_parts(stages, kernels, realized).validated()
    }

    pub fn from_parts(
        stages: Vec<TimeMomentSet>,
        kernels: Vec<OperatorKernel>,
        realized: Option<Vec<String>>,
    ) -> Self {
        Self {
            stages,
            kernels,
            realized,
            artificial_variation: false,
        }
    }

    /// Permits realized transitions of probability zero.
    pub fn with_artificial_variation(mut self, flag: bool) -> Self {
        self.artificial_variation = flag;
        self
    }

    pub fn validated(self) -> Result<Self> {
        let report = validate_chain(&self);
        if report.is_ok() {
            Ok(self)
        } else {
            Err(Error::InvalidChain(report.violations))
        }
    }

    pub fn stages(&self) -> &[TimeMomentSet] {
        &self.stages
    }

    pub fn kernels(&self) -> &[OperatorKernel] {
        &self.kernels
    }

    pub fn realized(&self) -> Option<&[String]> {
        self.realized.as_deref()
    }

    pub fn artificial_variation(&self) -> bool {
        self.artificial_variation
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn stage(&self, index: usize) -> Result<&TimeMomentSet> {
        self.stages.get(index).ok_or(Error::StageOutOfRange {
            index,
            len: self.stages.len(),
        })
    }

    pub fn realized_label(&self, stage: usize) -> Option<&str> {
        self.realized
            .as_ref()
            .and_then(|r| r.get(stage))
            .map(String::as_str)
    }

    /// Index of the realized outcome at `stage`.
    pub fn realized_index(&self, stage: usize) -> Option<usize> {
        let label = self.realized_label(stage)?;
        self.stages.get(stage)?.index_of(label)
    }

    /// The only segment of a two-stage chain.
    pub fn two_stage(&self) -> Result<(&TimeMomentSet, &OperatorKernel, &TimeMomentSet)> {
        if self.stages.len() != 2 || self.kernels.len() != 1 {
            return Err(Error::StageCount {
                expected: 2,
                found: self.stages.len(),
            });
        }
        Ok((&self.stages[0], &self.kernels[0], &self.stages[1]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    EmptyChain,
    EmptySet,
    NonPositiveProbability,
    Normalization,
    DuplicateLabel,
    InvalidKernelEntry,
    KernelRowNormalization,
    KernelCount,
    ArityMismatch,
    Ordering,
    TemporalInconsistency,
    RealizedLength,
    UnknownRealizedLabel,
    ImpossibleRealizedTransition,
}

impl ViolationKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::EmptyChain => "EmptyChain",
            Self::EmptySet => "EmptySet",
            Self::NonPositiveProbability => "NonPositiveProbability",
            Self::Normalization => "Normalization",
            Self::DuplicateLabel => "DuplicateLabel",
            Self::InvalidKernelEntry => "InvalidKernelEntry",
            Self::KernelRowNormalization => "KernelRowNormalization",
            Self::KernelCount => "KernelCount",
            Self::ArityMismatch => "ArityMismatch",
            Self::Ordering => "Ordering",
            Self::TemporalInconsistency => "TemporalInconsistency",
            Self::RealizedLength => "RealizedLength",
            Self::UnknownRealizedLabel => "UnknownRealizedLabel",
            Self::ImpossibleRealizedTransition => "ImpossibleRealizedTransition",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One failed chain invariant.
///
/// `stage` locates the problem; kernel `i` is reported at stage `i + 1`, the
/// stage it transitions into.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub stage: usize,
    pub kind: ViolationKind,
    pub deviation: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Problem {
    kind: ViolationKind,
    deviation: Option<f64>,
    detail: String,
}

impl Problem {
    fn new(kind: ViolationKind, deviation: Option<f64>, detail: impl Into<String>) -> Self {
        Self {
            kind,
            deviation,
            detail: detail.into(),
        }
    }

    fn at(self, stage: usize) -> Violation {
        Violation {
            stage,
            kind: self.kind,
            deviation: self.deviation,
            detail: self.detail,
        }
    }
}

pub fn validate_chain(chain: &ProcessChain) -> ValidationReport {
    let mut v = Vec::new();
    let stages = chain.stages();
    if stages.is_empty() {
        v.push(Problem::new(ViolationKind::EmptyChain, None, "chain has no stages").at(0));
        return ValidationReport { violations: v };
    }
    for (i, s) in stages.iter().enumerate() {
        v.extend(s.problems().into_iter().map(|p| p.at(i)));
        if i > 0 && s.moment() <= stages[i - 1].moment() {
            v.push(
                Problem::new(
                    ViolationKind::Ordering,
                    None,
                    format!(
                        "moment {} does not follow {}",
                        s.moment(),
                        stages[i - 1].moment()
                    ),
                )
                .at(i),
            );
        }
    }
    if chain.kernels().len() + 1 != stages.len() {
        v.push(
            Problem::new(
                ViolationKind::KernelCount,
                None,
                format!(
                    "{} stages need {} kernels, found {}",
                    stages.len(),
                    stages.len() - 1,
                    chain.kernels().len()
                ),
            )
            .at(0),
        );
    }
    for (i, k) in chain.kernels().iter().enumerate().take(stages.len() - 1) {
        let (src, dst) = (&stages[i], &stages[i + 1]);
        let kernel_problems = k.problems();
        let kernel_ok = kernel_problems.is_empty();
        v.extend(kernel_problems.into_iter().map(|p| p.at(i + 1)));
        let mut arity_ok = true;
        if k.source_arity() != src.len() {
            arity_ok = false;
            v.push(
                Problem::new(
                    ViolationKind::ArityMismatch,
                    None,
                    format!("kernel has {} rows, stage {i} has {} outcomes", k.source_arity(), src.len()),
                )
                .at(i + 1),
            );
        }
        if k.target_arity() != dst.len() {
            arity_ok = false;
            v.push(
                Problem::new(
                    ViolationKind::ArityMismatch,
                    None,
                    format!(
                        "kernel has {} columns, stage {} has {} outcomes",
                        k.target_arity(),
                        i + 1,
                        dst.len()
                    ),
                )
                .at(i + 1),
            );
        }
        if arity_ok && kernel_ok {
            let pushed = pushforward_mass(&src.probabilities(), k).unwrap_or_default();
            let (worst, dev) = pushed
                .iter()
                .zip(dst.outcomes())
                .enumerate()
                .map(|(j, (q, o))| (j, (q - o.probability).abs()))
                .fold((0, 0.0_f64), |acc, x| if x.1 > acc.1 { x } else { acc });
            if dev > PROB_TOLERANCE {
                v.push(
                    Problem::new(
                        ViolationKind::TemporalInconsistency,
                        Some(dev),
                        format!(
                            "pushforward gives p({}) = {:.7}, declared {:.7}",
                            dst.outcomes()[worst].label,
                            pushed[worst],
                            dst.outcomes()[worst].probability
                        ),
                    )
                    .at(i + 1),
                );
            }
        }
    }
    if let Some(realized) = chain.realized() {
        if realized.len() != stages.len() {
            v.push(
                Problem::new(
                    ViolationKind::RealizedLength,
                    None,
                    format!("{} realized labels for {} stages", realized.len(), stages.len()),
                )
                .at(0),
            );
        }
        let idx: Vec<Option<usize>> = realized
            .iter()
            .zip(stages)
            .enumerate()
            .map(|(i, (label, s))| {
                let found = s.index_of(label);
                if found.is_none() {
                    v.push(
                        Problem::new(
                            ViolationKind::UnknownRealizedLabel,
                            None,
                            format!("realized label `{label}` is not in stage {i}"),
                        )
                        .at(i),
                    );
                }
                found
            })
            .collect();
        if !chain.artificial_variation() {
            for (i, k) in chain.kernels().iter().enumerate() {
                let (Some(Some(a)), Some(Some(b))) = (idx.get(i), idx.get(i + 1)) else {
                    continue;
                };
                let rho = k.rows().get(*a).and_then(|r| r.get(*b)).copied();
                if rho.is_some_and(|p| p <= 0.0) {
                    v.push(
                        Problem::new(
                            ViolationKind::ImpossibleRealizedTransition,
                            None,
                            format!("realized {} -> {} has zero probability", realized[i], realized[i + 1]),
                        )
                        .at(i + 1),
                    );
                }
            }
        }
    }
    ValidationReport { violations: v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn t(tick: u64) -> TimeMoment {
        TimeMoment::new(tick)
    }

    fn set(tick: u64, probs: &[(&str, f64)]) -> TimeMomentSet {
        TimeMomentSet::new(t(tick), probs.iter().map(|(l, p)| (*l, *p))).unwrap()
    }

    fn merge3() -> OperatorKernel {
        OperatorKernel::from_map(&[0, 1, 1], 2)
    }

    #[test]
    fn set_invariants() {
        assert!(TimeMomentSet::new(t(0), [("a", 0.6), ("b", 0.4)]).is_ok());
        assert!(TimeMomentSet::new(t(0), [("a", 1.0), ("b", 0.0)]).is_err());
        assert!(TimeMomentSet::new(t(0), [("a", 0.5), ("a", 0.5)]).is_err());
        assert!(TimeMomentSet::new(t(0), [("a", 0.5), ("b", 0.4)]).is_err());
        assert!(TimeMomentSet::new::<&str>(t(0), []).is_err());
    }

    #[test]
    fn kernel_classes() {
        assert_eq!(OperatorKernel::identity(3).class(), KernelClass::Bijective);
        assert_eq!(merge3().class(), KernelClass::Deterministic);
        let split = OperatorKernel::new(vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(split.class(), KernelClass::Refinement);
        let mixed = OperatorKernel::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert_eq!(mixed.class(), KernelClass::General);
        assert!(OperatorKernel::new(vec![vec![0.3, 0.6]]).is_err());
        assert!(OperatorKernel::new(vec![vec![1.2, -0.2]]).is_err());
    }

    #[test]
    fn identity_pushforward() {
        let x = set(0, &[("x1", 0.5), ("x2", 0.5)]);
        let y = pushforward(&x, &OperatorKernel::identity(2)).unwrap();
        assert_eq!(y.moment(), t(1));
        assert_eq!(y.probabilities(), vec![0.5, 0.5]);
    }

    #[test]
    fn merge_pushforward() {
        let third = 1.0 / 3.0;
        let x = set(0, &[("x1", third), ("x2", third), ("x3", third)]);
        let y = pushforward(&x, &merge3()).unwrap();
        let p = y.probabilities();
        assert_abs_diff_eq!(p[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_column_dropped() {
        let x = set(0, &[("x1", 0.5), ("x2", 0.5)]);
        let k = OperatorKernel::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let y = pushforward(&x, &k).unwrap();
        assert_eq!(y.labels().collect::<Vec<_>>(), vec!["y1", "y3"]);
    }

    #[test]
    fn pushforward_arity_mismatch() {
        let x = set(0, &[("x1", 0.5), ("x2", 0.5)]);
        assert_eq!(
            pushforward(&x, &OperatorKernel::identity(3)),
            Err(Error::ArityMismatch {
                expected: 2,
                found: 3
            })
        );
    }

    #[test]
    fn consistent_identity_chain_validates() {
        let x = set(0, &[("x1", 0.5), ("x2", 0.5)]);
        let y = set(1, &[("y1", 0.5), ("y2", 0.5)]);
        let chain = ProcessChain::from_parts(vec![x, y], vec![OperatorKernel::identity(2)], None);
        assert!(validate_chain(&chain).is_ok());
    }

    #[test]
    fn inconsistent_marginal_rejected() {
        let x = set(0, &[("x1", 0.5), ("x2", 0.5)]);
        let y = set(1, &[("y1", 0.2), ("y2", 0.8)]);
        let chain = ProcessChain::from_parts(vec![x, y], vec![OperatorKernel::identity(2)], None);
        let report = validate_chain(&chain);
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.kind, ViolationKind::TemporalInconsistency);
        assert_eq!(v.stage, 1);
        assert_abs_diff_eq!(v.deviation.unwrap(), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn single_stage_chain_is_ok() {
        let chain = ProcessChain::from_parts(vec![set(0, &[("a", 0.6), ("b", 0.4)])], vec![], None);
        assert!(validate_chain(&chain).is_ok());
    }

    #[test]
    fn ordering_and_arity_reported() {
        let x = set(3, &[("x1", 0.5), ("x2", 0.5)]);
        let y = set(3, &[("y1", 1.0)]);
        let chain = ProcessChain::from_parts(vec![x, y], vec![OperatorKernel::identity(2)], None);
        let kinds: Vec<_> = validate_chain(&chain)
            .violations
            .iter()
            .map(|v| v.kind)
            .collect();
        assert!(kinds.contains(&ViolationKind::Ordering));
        assert!(kinds.contains(&ViolationKind::ArityMismatch));
    }

    #[test]
    fn realized_checks() {
        let x = set(0, &[("x1", 1.0)]);
        let y = set(1, &[("y1", 1.0)]);
        let k = OperatorKernel::new(vec![vec![1.0]]).unwrap();
        let bad = ProcessChain::from_parts(
            vec![x.clone(), y.clone()],
            vec![k.clone()],
            Some(vec!["x1".into(), "nope".into()]),
        );
        let kinds: Vec<_> = validate_chain(&bad).violations.iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::UnknownRealizedLabel]);

        let short = ProcessChain::from_parts(vec![x, y], vec![k], Some(vec!["x1".into()]));
        let kinds: Vec<_> = validate_chain(&short).violations.iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::RealizedLength]);
    }

    #[test]
    fn zero_probability_realization_needs_artificial_flag() {
        // y2 has positive mass only through x2, but x1 was realized.
        let x = set(0, &[("x1", 0.5), ("x2", 0.5)]);
        let y = set(1, &[("y1", 0.5), ("y2", 0.5)]);
        let chain = ProcessChain::from_parts(
            vec![x, y],
            vec![OperatorKernel::identity(2)],
            Some(vec!["x1".into(), "y2".into()]),
        );
        let kinds: Vec<_> = validate_chain(&chain).violations.iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::ImpossibleRealizedTransition]);
        assert!(validate_chain(&chain.with_artificial_variation(true)).is_ok());
    }

    #[test]
    fn surjectivity() {
        let y = set(1, &[("y1", 0.5), ("y2", 0.5)]);
        let s = check_surjectivity(&merge3(), &y).unwrap();
        assert!(s.surjective && !s.bijective && s.witness.is_none());

        let s = check_surjectivity(&OperatorKernel::identity(2), &y).unwrap();
        assert!(s.surjective && s.bijective);

        let y3 = set(1, &[("y1", 0.4), ("y2", 0.4), ("yn", 0.2)]);
        let k = OperatorKernel::from_map(&[0, 1, 1], 3);
        let s = check_surjectivity(&k, &y3).unwrap();
        assert!(!s.surjective);
        assert_eq!(s.witness.as_deref(), Some("yn"));

        let general = OperatorKernel::new(vec![vec![0.5, 0.5]]).unwrap();
        assert_eq!(check_surjectivity(&general, &y), Err(Error::NotDeterministic));
    }

    #[test]
    fn independence() {
        let x = set(0, &[("x1", 0.5), ("x2", 0.5)]);
        let same_rows = OperatorKernel::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert!(independence_test(&x, &same_rows).unwrap());
        assert!(!independence_test(&x, &OperatorKernel::identity(2)).unwrap());
        let collapse = OperatorKernel::new(vec![vec![1.0], vec![1.0]]).unwrap();
        let r = independence_report(&x, &collapse).unwrap();
        assert!(r.independent() && !r.anomaly());
    }
}
