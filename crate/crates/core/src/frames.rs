//! Unified time measures and the entropy laws evaluated under them.
//!
//! A frame puts the closed endpoint of an `(F, t]` window on the moment of one
//! stage. Every stage up to that moment becomes knowledge. Transitions into a
//! realized, known event are certainties when seen from the anchor, and later
//! stages stay uncertain, conditioned on what is known.
//!
//! Anchoring at the later moment gives the entropy reduction law for
//! deterministic kernels. Anchoring at the earlier moment gives the entropy
//! increase law for refinement kernels. Both laws are checked on the marginal
//! entropies; the framed (collapsed) values are reported next to them.

use std::fmt;

use crate::error::{Error, Result};
use crate::events::{bayes_reverse, pushforward_mass, validate_chain, ProcessChain};
use crate::measures::{conditional_entropy, shannon_entropy, Direction, KnowledgeStatus};
use crate::timeline::{ObservationWindow, TimeMoment};
use crate::{IDENTITY_TOLERANCE, PROB_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnifiedTimeMeasure {
    anchor_stage: Option<usize>,
    window: ObservationWindow,
    renormalize: bool,
}

impl UnifiedTimeMeasure {
    /// Frame `(F, t_i]` on the moment of stage `index`.
    pub fn at_stage(chain: &ProcessChain, index: usize) -> Result<Self> {
        let stage = chain.stage(index)?;
        Ok(Self {
            anchor_stage: Some(index),
            window: ObservationWindow::up_to(stage.moment()),
            renormalize: true,
        })
    }

    /// Frame `(F, t]` on an arbitrary tick. The anchor stage is the last stage at
    /// or before `t`, if any.
    pub fn at_moment(chain: &ProcessChain, moment: TimeMoment) -> Self {
        let anchor_stage = chain
            .stages()
            .iter()
            .rposition(|s| s.moment() <= moment);
        Self {
            anchor_stage,
            window: ObservationWindow::up_to(moment),
            renormalize: true,
        }
    }

    /// Marks stages as knowledge without collapsing them onto a realized event.
    pub fn without_renormalization(mut self) -> Self {
        self.renormalize = false;
        self
    }

    pub fn anchor_stage(&self) -> Option<usize> {
        self.anchor_stage
    }

    pub fn window(&self) -> &ObservationWindow {
        &self.window
    }

    pub fn renormalize(&self) -> bool {
        self.renormalize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramedStage {
    pub moment: TimeMoment,
    pub status: KnowledgeStatus,
    pub realized: Option<String>,
    /// `(label, probability)` in declaration order; may contain zeros after conditioning.
    pub distribution: Vec<(String, f64)>,
    /// Zero for knowledge, Shannon entropy of `distribution` otherwise.
    pub entropy_bits: f64,
}

/// A transition made certain by the frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Renormalized {
    pub kernel: usize,
    pub source: String,
    pub target: String,
    pub original: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramedChain {
    pub frame: UnifiedTimeMeasure,
    pub stages: Vec<FramedStage>,
    /// Effective kernel rows, one matrix per transition.
    pub effective_rows: Vec<Vec<Vec<f64>>>,
    pub renormalized: Vec<Renormalized>,
}

pub fn apply_frame(chain: &ProcessChain, frame: &UnifiedTimeMeasure) -> Result<FramedChain> {
    let report = validate_chain(chain);
    if !report.is_ok() {
        return Err(Error::InvalidChain(report.violations));
    }
    let collapse = frame.renormalize;
    if let (true, Some(a)) = (collapse, frame.anchor_stage) {
        if chain.realized_index(a).is_none() {
            return Err(Error::MissingRealization { stage: a });
        }
    }

    let known: Vec<bool> = chain
        .stages()
        .iter()
        .map(|s| frame.window.contains(s.moment()))
        .collect();

    let mut dists: Vec<Vec<f64>> = Vec::with_capacity(chain.len());
    for (i, stage) in chain.stages().iter().enumerate() {
        let realized = if collapse { chain.realized_index(i) } else { None };
        let dist = match (known[i], realized) {
            (true, Some(r)) => {
                let mut d = vec![0.0; stage.len()];
                d[r] = 1.0;
                d
            }
            (true, None) => stage.probabilities(),
            (false, _) => match frame.anchor_stage {
                Some(a) if i > a => pushforward_mass(&dists[i - 1], &chain.kernels()[i - 1])?,
                _ => stage.probabilities(),
            },
        };
        dists.push(dist);
    }

    let stages = chain
        .stages()
        .iter()
        .zip(dists)
        .enumerate()
        .map(|(i, (stage, dist))| {
            let status = if known[i] {
                KnowledgeStatus::Knowledge
            } else {
                KnowledgeStatus::Uncertain
            };
            let entropy_bits = if known[i] { 0.0 } else { shannon_entropy(&dist) };
            FramedStage {
                moment: stage.moment(),
                status,
                realized: chain.realized_label(i).map(str::to_string),
                distribution: stage.labels().map(str::to_string).zip(dist).collect(),
                entropy_bits,
            }
        })
        .collect();

    let mut effective_rows = Vec::with_capacity(chain.kernels().len());
    let mut renormalized = Vec::new();
    for (i, kernel) in chain.kernels().iter().enumerate() {
        let mut rows = kernel.rows().to_vec();
        let target = if collapse && known[i + 1] {
            chain.realized_index(i + 1)
        } else {
            None
        };
        if let Some(y) = target {
            let realized_source = if known[i] { chain.realized_index(i) } else { None };
            for (x, row) in rows.iter_mut().enumerate() {
                let original = row[y];
                if original > 0.0 || Some(x) == realized_source {
                    row.iter_mut().for_each(|v| *v = 0.0);
                    row[y] = 1.0;
                    if Some(x) == realized_source {
                        renormalized.push(Renormalized {
                            kernel: i,
                            source: chain.stages()[i].outcomes()[x].label.clone(),
                            target: chain.stages()[i + 1].outcomes()[y].label.clone(),
                            original,
                        });
                    }
                }
            }
        }
        effective_rows.push(rows);
    }

    Ok(FramedChain {
        frame: *frame,
        stages,
        effective_rows,
        renormalized,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Law {
    /// `H(Y₁) ≤ H(X₀)` for deterministic kernels under `(F, t₁]`.
    EntropyReduction,
    /// `H(Y₁) ≥ H(X₀)` for refinement kernels under `(F, t₀]`.
    EntropyIncrease,
}

impl Law {
    pub fn name(self) -> &'static str {
        match self {
            Law::EntropyReduction => "THEOREM_1",
            Law::EntropyIncrease => "THEOREM_2",
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EqualityReason {
    Bijection,
    None,
}

impl EqualityReason {
    pub fn name(self) -> &'static str {
        match self {
            EqualityReason::Bijection => "BIJECTION",
            EqualityReason::None => "NONE",
        }
    }
}

/// Two routes to the same quantity, compared at [`IDENTITY_TOLERANCE`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs_bits: f64,
    pub rhs_bits: f64,
    pub holds: bool,
}

impl IdentityCheck {
    fn new(lhs_bits: f64, rhs_bits: f64) -> Self {
        Self {
            lhs_bits,
            rhs_bits,
            holds: (lhs_bits - rhs_bits).abs() <= IDENTITY_TOLERANCE,
        }
    }

    pub fn gap(&self) -> f64 {
        (self.lhs_bits - self.rhs_bits).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawVerdict {
    pub law: Law,
    pub holds: bool,
    /// Marginal `H(Y₁)`.
    pub lhs_bits: f64,
    /// Marginal `H(X₀)`.
    pub rhs_bits: f64,
    pub equality: bool,
    pub equality_reason: EqualityReason,
    pub bijective: bool,
    /// `H(Y₁)` seen through the frame.
    pub framed_lhs_bits: f64,
    /// `H(X₀)` seen through the frame.
    pub framed_rhs_bits: f64,
    /// The entropy of the non-anchored stage conditioned across the kernel:
    /// `H(X₀|Y₁)` for the reduction law, `H(Y₁|X₀)` for the increase law.
    pub conditional_bits: f64,
    /// Reduction: `H(X₀) = H(Y₁) + H(X₀|Y₁)`.
    /// Increase: `H(Y₁) = H(X₀) + Σ p(x) H(ρ(·|x))`.
    pub decomposition: IdentityCheck,
}

impl LawVerdict {
    /// Equality occurs exactly on bijections.
    pub fn equality_matches_bijection(&self) -> bool {
        self.equality == self.bijective
    }
}

/// Reduction law on a two-stage chain with a deterministic kernel.
pub fn entropy_reduction_verdict(chain: &ProcessChain) -> Result<LawVerdict> {
    let (x, kernel, _) = valid_two_stage(chain)?;
    if !kernel.is_deterministic() {
        return Err(Error::NotDeterministic);
    }
    let px = x.probabilities();
    let h_x = shannon_entropy(&px);
    let h_y = shannon_entropy(&pushforward_mass(&px, kernel)?);
    let h_x_given_y = conditional_entropy(x, kernel, Direction::Backward)?;
    Ok(verdict(
        Law::EntropyReduction,
        h_y <= h_x + PROB_TOLERANCE,
        h_y,
        h_x,
        kernel.is_bijective(),
        (0.0, h_x_given_y),
        h_x_given_y,
        IdentityCheck::new(h_x, h_y + h_x_given_y),
    ))
}

/// Increase law on a two-stage chain with a refinement kernel.
pub fn entropy_increase_verdict(chain: &ProcessChain) -> Result<LawVerdict> {
    let (x, kernel, _) = valid_two_stage(chain)?;
    if !kernel.is_refinement() {
        return Err(Error::NotRefinement);
    }
    let px = x.probabilities();
    let h_x = shannon_entropy(&px);
    let h_y = shannon_entropy(&pushforward_mass(&px, kernel)?);
    let h_y_given_x = conditional_entropy(x, kernel, Direction::Forward)?;
    Ok(verdict(
        Law::EntropyIncrease,
        h_y >= h_x - PROB_TOLERANCE,
        h_y,
        h_x,
        kernel.is_bijective(),
        (h_y_given_x, 0.0),
        h_y_given_x,
        IdentityCheck::new(h_y, h_x + h_y_given_x),
    ))
}

#[allow(clippy::too_many_arguments)]
fn verdict(
    law: Law,
    holds: bool,
    lhs_bits: f64,
    rhs_bits: f64,
    bijective: bool,
    framed: (f64, f64),
    conditional_bits: f64,
    decomposition: IdentityCheck,
) -> LawVerdict {
    let equality = (lhs_bits - rhs_bits).abs() < PROB_TOLERANCE;
    LawVerdict {
        law,
        holds: holds || equality,
        lhs_bits,
        rhs_bits,
        equality,
        equality_reason: if equality && bijective {
            EqualityReason::Bijection
        } else {
            EqualityReason::None
        },
        bijective,
        framed_lhs_bits: framed.0,
        framed_rhs_bits: framed.1,
        conditional_bits,
        decomposition,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecallForm {
    /// `H(X₀ | Y₁ = y)` for the realized `y`.
    Realized,
    /// `H(X₀ | Y₁)`, averaged over `Y₁`.
    Expected,
}

/// Uncertainty left about the earlier stage when standing at the later one.
pub fn recall_entropy(chain: &ProcessChain, form: RecallForm) -> Result<f64> {
    let (x, kernel, _) = valid_two_stage(chain)?;
    if !kernel.is_deterministic() {
        return Err(Error::NotDeterministic);
    }
    match form {
        RecallForm::Realized => {
            let y = chain
                .realized_index(1)
                .ok_or(Error::MissingRealization { stage: 1 })?;
            let rev = bayes_reverse(x, kernel)?;
            let post = rev
                .posteriors
                .iter()
                .find(|(j, _)| *j == y)
                .map(|(_, p)| p.as_slice())
                .ok_or(Error::MissingRealization { stage: 1 })?;
            Ok(shannon_entropy(post))
        }
        RecallForm::Expected => {
            let recall = conditional_entropy(x, kernel, Direction::Backward)?;
            let px = x.probabilities();
            let h_x = shannon_entropy(&px);
            let h_y = shannon_entropy(&pushforward_mass(&px, kernel)?);
            let check = IdentityCheck::new(recall, h_x - h_y);
            if !check.holds {
                return Err(Error::IdentityViolation {
                    what: "H(X|Y) = H(X) - H(Y)",
                    gap: check.gap(),
                });
            }
            Ok(recall)
        }
    }
}

fn valid_two_stage(
    chain: &ProcessChain,
) -> Result<(
    &crate::TimeMomentSet,
    &crate::OperatorKernel,
    &crate::TimeMomentSet,
)> {
    let segment = chain.two_stage()?;
    let report = validate_chain(chain);
    if !report.is_ok() {
        return Err(Error::InvalidChain(report.violations));
    }
    Ok(segment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{OperatorKernel, TimeMomentSet};
    use approx::assert_abs_diff_eq;

    fn t(tick: u64) -> TimeMoment {
        TimeMoment::new(tick)
    }

    fn fig3() -> ProcessChain {
        ProcessChain::new(
            vec![
                TimeMomentSet::new(t(0), [("x1", 1.0)]).unwrap(),
                TimeMomentSet::new(t(1), [("y1", 0.2), ("y2", 0.8)]).unwrap(),
            ],
            vec![OperatorKernel::new(vec![vec![0.2, 0.8]]).unwrap()],
            Some(vec!["x1".into(), "y1".into()]),
        )
        .unwrap()
    }

    fn merge3(realized: Option<&str>) -> ProcessChain {
        let p = 1.0 / 3.0;
        ProcessChain::new(
            vec![
                TimeMomentSet::new(t(0), [("x1", p), ("x2", p), ("x3", p)]).unwrap(),
                TimeMomentSet::new(t(1), [("y1", p), ("y2", 2.0 * p)]).unwrap(),
            ],
            vec![OperatorKernel::from_map(&[0, 1, 1], 2)],
            realized.map(|y| {
                let x = if y == "y1" { "x1" } else { "x2" };
                vec![x.to_string(), y.to_string()]
            }),
        )
        .unwrap()
    }

    fn halves_identity() -> ProcessChain {
        ProcessChain::new(
            vec![
                TimeMomentSet::new(t(0), [("x1", 0.5), ("x2", 0.5)]).unwrap(),
                TimeMomentSet::new(t(1), [("y1", 0.5), ("y2", 0.5)]).unwrap(),
            ],
            vec![OperatorKernel::identity(2)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn frame_at_later_moment_makes_transition_certain() {
        let chain = fig3();
        let frame = UnifiedTimeMeasure::at_stage(&chain, 1).unwrap();
        let view = apply_frame(&chain, &frame).unwrap();
        assert_eq!(view.effective_rows[0], vec![vec![1.0, 0.0]]);
        assert_eq!(view.renormalized.len(), 1);
        assert_eq!(view.renormalized[0].original, 0.2);
        assert!(view
            .stages
            .iter()
            .all(|s| s.status == KnowledgeStatus::Knowledge));
    }

    #[test]
    fn frame_at_earlier_moment_keeps_future_uncertain() {
        let chain = fig3();
        let frame = UnifiedTimeMeasure::at_stage(&chain, 0).unwrap();
        let view = apply_frame(&chain, &frame).unwrap();
        assert_eq!(view.stages[0].status, KnowledgeStatus::Knowledge);
        assert_eq!(view.stages[1].status, KnowledgeStatus::Uncertain);
        assert_eq!(
            view.stages[1].distribution,
            vec![("y1".to_string(), 0.2), ("y2".to_string(), 0.8)]
        );
        assert_abs_diff_eq!(view.stages[1].entropy_bits, 0.7219281, epsilon = 5e-8);
        assert!(view.renormalized.is_empty());
    }

    #[test]
    fn frame_before_every_stage_is_raw() {
        let chain = ProcessChain::new(
            vec![
                TimeMomentSet::new(t(3), [("x1", 0.5), ("x2", 0.5)]).unwrap(),
                TimeMomentSet::new(t(4), [("y1", 0.5), ("y2", 0.5)]).unwrap(),
            ],
            vec![OperatorKernel::identity(2)],
            None,
        )
        .unwrap();
        let frame = UnifiedTimeMeasure::at_moment(&chain, t(1));
        assert_eq!(frame.anchor_stage(), None);
        let view = apply_frame(&chain, &frame).unwrap();
        for (framed, raw) in view.stages.iter().zip(chain.stages()) {
            assert_eq!(framed.status, KnowledgeStatus::Uncertain);
            assert_eq!(
                framed.distribution.iter().map(|d| d.1).collect::<Vec<_>>(),
                raw.probabilities()
            );
        }
        assert_eq!(view.effective_rows[0], chain.kernels()[0].rows());
    }

    #[test]
    fn frame_requires_realization_when_collapsing() {
        let chain = halves_identity();
        let frame = UnifiedTimeMeasure::at_stage(&chain, 1).unwrap();
        assert_eq!(
            apply_frame(&chain, &frame),
            Err(Error::MissingRealization { stage: 1 })
        );
        let view = apply_frame(&chain, &frame.without_renormalization()).unwrap();
        assert_eq!(view.stages[1].status, KnowledgeStatus::Knowledge);
        assert_eq!(view.stages[1].distribution[0].1, 0.5);
    }

    #[test]
    fn frame_out_of_range() {
        assert!(matches!(
            UnifiedTimeMeasure::at_stage(&fig3(), 2),
            Err(Error::StageOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn reduction_on_merge() {
        let v = entropy_reduction_verdict(&merge3(None)).unwrap();
        assert!(v.holds && !v.equality);
        assert_eq!(v.equality_reason, EqualityReason::None);
        assert_abs_diff_eq!(v.lhs_bits, 0.9182958, epsilon = 5e-8);
        assert_abs_diff_eq!(v.rhs_bits, 1.5849625, epsilon = 5e-8);
        assert_abs_diff_eq!(v.conditional_bits, 0.6666667, epsilon = 5e-8);
        assert!(v.decomposition.holds);
        assert_eq!(v.framed_lhs_bits, 0.0);
    }

    #[test]
    fn reduction_on_identity_is_equality() {
        let v = entropy_reduction_verdict(&halves_identity()).unwrap();
        assert!(v.holds && v.equality);
        assert_eq!(v.lhs_bits, 1.0);
        assert_eq!(v.equality_reason, EqualityReason::Bijection);
    }

    #[test]
    fn reduction_on_singletons() {
        let chain = ProcessChain::new(
            vec![
                TimeMomentSet::new(t(0), [("x", 1.0)]).unwrap(),
                TimeMomentSet::new(t(1), [("y", 1.0)]).unwrap(),
            ],
            vec![OperatorKernel::identity(1)],
            None,
        )
        .unwrap();
        let v = entropy_reduction_verdict(&chain).unwrap();
        assert!(v.equality && v.lhs_bits == 0.0 && v.rhs_bits == 0.0);
    }

    #[test]
    fn reduction_rejects_stochastic_kernel() {
        assert_eq!(entropy_reduction_verdict(&fig3()), Err(Error::NotDeterministic));
    }

    #[test]
    fn increase_on_split() {
        let chain = ProcessChain::new(
            vec![
                TimeMomentSet::new(t(0), [("x1", 0.5), ("x2", 0.5)]).unwrap(),
                TimeMomentSet::new(
                    t(1),
                    [("y1", 0.25), ("y2", 0.25), ("y3", 0.25), ("y4", 0.25)],
                )
                .unwrap(),
            ],
            vec![OperatorKernel::new(vec![
                vec![0.5, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 0.5, 0.5],
            ])
            .unwrap()],
            None,
        )
        .unwrap();
        let v = entropy_increase_verdict(&chain).unwrap();
        assert!(v.holds && !v.equality);
        assert_eq!((v.rhs_bits, v.lhs_bits), (1.0, 2.0));
        assert!(v.decomposition.holds);
        assert_eq!(entropy_reduction_verdict(&chain), Err(Error::NotDeterministic));
    }

    #[test]
    fn increase_from_singleton() {
        let v = entropy_increase_verdict(&fig3()).unwrap();
        assert!(v.holds);
        assert_eq!(v.rhs_bits, 0.0);
        assert_abs_diff_eq!(v.lhs_bits, 0.7219281, epsilon = 5e-8);
        assert_abs_diff_eq!(v.conditional_bits, v.lhs_bits, epsilon = 1e-12);
        assert_eq!(v.framed_rhs_bits, 0.0);
    }

    #[test]
    fn bijection_gives_equality_under_both_frames() {
        let chain = halves_identity();
        let r = entropy_reduction_verdict(&chain).unwrap();
        let i = entropy_increase_verdict(&chain).unwrap();
        assert!(r.equality && i.equality);
        assert_eq!(i.equality_reason, EqualityReason::Bijection);
    }

    #[test]
    fn increase_rejects_merge() {
        assert_eq!(entropy_increase_verdict(&merge3(None)), Err(Error::NotRefinement));
    }

    #[test]
    fn recall() {
        assert_eq!(recall_entropy(&merge3(Some("y2")), RecallForm::Realized).unwrap(), 1.0);
        assert_eq!(recall_entropy(&merge3(Some("y1")), RecallForm::Realized).unwrap(), 0.0);
        assert_abs_diff_eq!(
            recall_entropy(&merge3(None), RecallForm::Expected).unwrap(),
            0.6666667,
            epsilon = 5e-8
        );
        assert_eq!(
            recall_entropy(&merge3(None), RecallForm::Realized),
            Err(Error::MissingRealization { stage: 1 })
        );
    }

    #[test]
    fn two_stage_required() {
        let chain = ProcessChain::new(
            vec![TimeMomentSet::new(t(0), [("x", 1.0)]).unwrap()],
            vec![],
            None,
        )
        .unwrap();
        assert!(matches!(
            entropy_reduction_verdict(&chain),
            Err(Error::StageCount { .. })
        ));
    }
}
