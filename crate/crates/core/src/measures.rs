//! Information volume, entropy and the two-observation quantities.
//!
//! Single-moment measures are gated by a [`MeasureContext`]: once the set's
//! moment falls inside the observation window the event is knowledge and the
//! measure is exactly zero. Conditional entropy, the joint distribution and
//! mutual information involve two observations and take no window. All
//! logarithms are base 2.

use std::fmt;

use crate::error::{Error, Result};
use crate::events::{bayes_reverse, OperatorKernel, TimeMomentSet};
use crate::timeline::{ObservationWindow, TimeMoment};

/// `-Σ p log2 p`, with `0 log 0 = 0`.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    // -0.0 and tiny negative sums from rounding
    h.max(0.0)
}

/// Observation window through which single-moment measures are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MeasureContext {
    window: Option<ObservationWindow>,
}

impl MeasureContext {
    pub fn new(window: ObservationWindow) -> Self {
        Self {
            window: Some(window),
        }
    }

    /// Nothing has been observed; every event is uncertain.
    pub fn unobserved() -> Self {
        Self { window: None }
    }

    pub fn window(&self) -> Option<&ObservationWindow> {
        self.window.as_ref()
    }

    pub fn is_known(&self, moment: TimeMoment) -> bool {
        self.window.is_some_and(|w| w.contains(moment))
    }

    pub fn status(&self, moment: TimeMoment) -> KnowledgeStatus {
        if self.is_known(moment) {
            KnowledgeStatus::Knowledge
        } else {
            KnowledgeStatus::Uncertain
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KnowledgeStatus {
    Knowledge,
    Uncertain,
}

impl KnowledgeStatus {
    pub fn name(self) -> &'static str {
        match self {
            KnowledgeStatus::Knowledge => "KNOWLEDGE",
            KnowledgeStatus::Uncertain => "UNCERTAIN",
        }
    }
}

impl fmt::Display for KnowledgeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeTag {
    pub label: String,
    pub moment: TimeMoment,
    pub status: KnowledgeStatus,
}

pub fn knowledge_tags(set: &TimeMomentSet, ctx: &MeasureContext) -> Vec<KnowledgeTag> {
    let status = ctx.status(set.moment());
    set.labels()
        .map(|label| KnowledgeTag {
            label: label.to_string(),
            moment: set.moment(),
            status,
        })
        .collect()
}

/// `-log2 p(label)`, or zero once the set's moment is inside the window.
pub fn information_volume(set: &TimeMomentSet, label: &str, ctx: &MeasureContext) -> Result<f64> {
    let p = set.probability(label)?;
    if ctx.is_known(set.moment()) {
        return Ok(0.0);
    }
    Ok((-p.log2()).max(0.0))
}

pub fn entropy(set: &TimeMomentSet, ctx: &MeasureContext) -> f64 {
    if ctx.is_known(set.moment()) {
        return 0.0;
    }
    shannon_entropy(&set.probabilities())
}

/// Which way a conditional entropy is taken across a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `H(Y | X)` straight from the kernel rows.
    Forward,
    /// `H(X | Y)` from the Bayes-reversed kernel.
    Backward,
}

pub fn conditional_entropy(
    source: &TimeMomentSet,
    kernel: &OperatorKernel,
    direction: Direction,
) -> Result<f64> {
    match direction {
        Direction::Forward => {
            check_arity(source, kernel)?;
            Ok(source
                .probabilities()
                .iter()
                .zip(kernel.rows())
                .map(|(p, row)| p * shannon_entropy(row))
                .sum())
        }
        Direction::Backward => {
            let rev = bayes_reverse(source, kernel)?;
            Ok(rev
                .posteriors
                .iter()
                .map(|(j, post)| rev.marginal[*j] * shannon_entropy(post))
                .sum())
        }
    }
}

/// A quantity that needs two simultaneous observations to exist.
///
/// It is still computed, as a tool for rearranging entropy identities, but it
/// never describes something a single observer can measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Analytic<T> {
    pub value: T,
}

impl<T> Analytic<T> {
    pub const TAG: &'static str = "analytic-only";

    pub fn is_analytic_only(&self) -> bool {
        true
    }
}

/// `p(x, y) = ρ(y | x) p(x)`, indexed `[x][y]`.
pub fn joint_distribution(
    source: &TimeMomentSet,
    kernel: &OperatorKernel,
) -> Result<Analytic<Vec<Vec<f64>>>> {
    check_arity(source, kernel)?;
    let value = source
        .probabilities()
        .iter()
        .zip(kernel.rows())
        .map(|(p, row)| row.iter().map(|rho| rho * p).collect())
        .collect();
    Ok(Analytic { value })
}

/// `Σ p(x,y) log2 [p(x,y) / (p(x) p(y))]`, with the non-negative sign convention.
pub fn mutual_information_volume(
    source: &TimeMomentSet,
    kernel: &OperatorKernel,
) -> Result<Analytic<f64>> {
    let joint = joint_distribution(source, kernel)?.value;
    let px = source.probabilities();
    let mut py = vec![0.0; kernel.target_arity()];
    for row in &joint {
        for (acc, v) in py.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let mut total = 0.0;
    for (row, p) in joint.iter().zip(&px) {
        for (&pxy, &q) in row.iter().zip(&py) {
            if pxy > 0.0 {
                total += pxy * (pxy / (p * q)).log2();
            }
        }
    }
    Ok(Analytic {
        value: total.max(0.0),
    })
}

/// Probability that the event at `moment` is knowledge, as the window
/// `(F, t]` slides over each anchor `t` of the sweep.
pub fn knowledge_step_profile(
    moment: TimeMoment,
    sweep: &[TimeMoment],
) -> Result<Vec<(TimeMoment, f64)>> {
    if sweep.is_empty() {
        return Err(Error::EmptySweep);
    }
    Ok(sweep
        .iter()
        .map(|&anchor| {
            let known = ObservationWindow::up_to(anchor).contains(moment);
            (anchor, if known { 1.0 } else { 0.0 })
        })
        .collect())
}

fn check_arity(source: &TimeMomentSet, kernel: &OperatorKernel) -> Result<()> {
    if kernel.source_arity() != source.len() {
        return Err(Error::ArityMismatch {
            expected: source.len(),
            found: kernel.source_arity(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn t(tick: u64) -> TimeMoment {
        TimeMoment::new(tick)
    }

    fn uniform3() -> TimeMomentSet {
        let p = 1.0 / 3.0;
        TimeMomentSet::new(t(0), [("x1", p), ("x2", p), ("x3", p)]).unwrap()
    }

    fn halves() -> TimeMomentSet {
        TimeMomentSet::new(t(0), [("x1", 0.5), ("x2", 0.5)]).unwrap()
    }

    fn merge() -> OperatorKernel {
        OperatorKernel::from_map(&[0, 1, 1], 2)
    }

    fn outside() -> MeasureContext {
        MeasureContext::unobserved()
    }

    #[test]
    fn volume_outside_and_inside_window() {
        let x = halves();
        assert_eq!(information_volume(&x, "x1", &outside()).unwrap(), 1.0);
        let inside = MeasureContext::new(ObservationWindow::up_to(t(0)));
        assert_eq!(information_volume(&x, "x1", &inside).unwrap(), 0.0);
        let single = TimeMomentSet::new(t(0), [("x", 1.0)]).unwrap();
        assert_eq!(information_volume(&single, "x", &outside()).unwrap(), 0.0);
        assert_eq!(
            information_volume(&x, "zz", &outside()),
            Err(Error::UnknownLabel("zz".into()))
        );
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&halves(), &outside()), 1.0);
        let y = TimeMomentSet::new(t(1), [("y1", 0.2), ("y2", 0.8)]).unwrap();
        assert_abs_diff_eq!(entropy(&y, &outside()), 0.7219281, epsilon = 5e-8);
        let inside = MeasureContext::new(ObservationWindow::up_to(t(4)));
        assert_eq!(entropy(&y, &inside), 0.0);
    }

    #[test]
    fn conditional_entropies() {
        assert_eq!(
            conditional_entropy(&uniform3(), &merge(), Direction::Forward).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            conditional_entropy(&uniform3(), &merge(), Direction::Backward).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-12
        );
        assert_eq!(
            conditional_entropy(&halves(), &OperatorKernel::identity(2), Direction::Backward)
                .unwrap(),
            0.0
        );
        assert!(matches!(
            conditional_entropy(&halves(), &merge(), Direction::Forward),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn joint_tables() {
        let j = joint_distribution(&halves(), &OperatorKernel::identity(2)).unwrap();
        assert!(j.is_analytic_only());
        assert_eq!(j.value, vec![vec![0.5, 0.0], vec![0.0, 0.5]]);

        let rows = OperatorKernel::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let j = joint_distribution(&halves(), &rows).unwrap().value;
        assert_abs_diff_eq!(j[0][0], 0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(j[1][1], 0.35, epsilon = 1e-15);

        let single = TimeMomentSet::new(t(0), [("x", 1.0)]).unwrap();
        let k = OperatorKernel::new(vec![vec![0.2, 0.8]]).unwrap();
        assert_eq!(joint_distribution(&single, &k).unwrap().value, vec![vec![0.2, 0.8]]);
    }

    #[test]
    fn mutual_information() {
        let rows = OperatorKernel::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert_abs_diff_eq!(
            mutual_information_volume(&halves(), &rows).unwrap().value,
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            mutual_information_volume(&halves(), &OperatorKernel::identity(2))
                .unwrap()
                .value,
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            mutual_information_volume(&uniform3(), &merge()).unwrap().value,
            0.9182958,
            epsilon = 5e-8
        );
    }

    #[test]
    fn step_profile() {
        let sweep: Vec<_> = [3, 4, 5, 6].into_iter().map(t).collect();
        let values: Vec<f64> = knowledge_step_profile(t(5), &sweep)
            .unwrap()
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        assert_eq!(values, vec![0.0, 0.0, 1.0, 1.0]);
        let before: Vec<_> = (0..5).map(t).collect();
        assert!(knowledge_step_profile(t(5), &before)
            .unwrap()
            .iter()
            .all(|(_, v)| *v == 0.0));
        let after: Vec<_> = (5..9).map(t).collect();
        assert!(knowledge_step_profile(t(5), &after)
            .unwrap()
            .iter()
            .all(|(_, v)| *v == 1.0));
        assert_eq!(knowledge_step_profile(t(5), &[]), Err(Error::EmptySweep));
    }

    #[test]
    fn tags_follow_window() {
        let ctx = MeasureContext::new(ObservationWindow::up_to(t(0)));
        let tags = knowledge_tags(&halves(), &ctx);
        assert!(tags.iter().all(|t| t.status == KnowledgeStatus::Knowledge));
        let tags = knowledge_tags(&halves(), &outside());
        assert!(tags.iter().all(|t| t.status == KnowledgeStatus::Uncertain));
    }
}
