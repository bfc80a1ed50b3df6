//! Negative-probability bookkeeping for realized paths.
//!
//! Once a transition `x -> y` has been realized it is renormalized to
//! certainty, and every sibling branch `x -> y'` that could have happened is
//! routed into a single absorbing black-hole state with weight `-ρ(y'|x)`. For
//! a two-way branch that weight is `α - 1`, where `α = ρ(y|x)`; for wider
//! branches each transition also carries that aggregate. The information
//! volume of the realized path is then the same at its start and its end.

use std::fmt;

use crate::error::{Error, Result};
use crate::events::{
    pushforward_mass, validate_chain, OperatorKernel, ProcessChain, TimeMomentSet, ViolationKind,
};
use crate::PROB_TOLERANCE;

/// A node of an extended chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ChainState {
    Event { stage: usize, label: String },
    /// Shared by every stage; nothing leaves it.
    BlackHole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: ChainState,
    pub to: ChainState,
    pub weight: f64,
}

/// A branch that could have been taken but was not.
#[derive(Debug, Clone, PartialEq)]
pub struct BlackHoleEntry {
    /// Stage the lost branch would have landed in.
    pub stage_index: usize,
    pub source_label: String,
    pub lost_label: String,
    /// `-ρ(lost | source)`; equals `α - 1` when the branch is two-way.
    pub negative_probability: f64,
}

/// One realized transition after renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedTransition {
    pub kernel: usize,
    pub source_label: String,
    pub realized_label: String,
    /// Original transition probability `α`.
    pub alpha: f64,
    /// Probability after renormalization; always 1.
    pub renormalized: f64,
    /// `α - 1`, the total negative mass sent to the black hole.
    pub aggregate: f64,
    /// Sum of this transition's per-sibling entries.
    pub sibling_mass: f64,
}

impl RealizedTransition {
    /// `renormalized + aggregate` reproduces the original realized mass `α`.
    pub fn balance_gap(&self) -> f64 {
        (self.renormalized + self.aggregate - self.alpha).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedChain {
    chain: ProcessChain,
    start_probability: f64,
    transitions: Vec<RealizedTransition>,
    ledger: Vec<BlackHoleEntry>,
    edges: Vec<Edge>,
}

impl ExtendedChain {
    pub fn chain(&self) -> &ProcessChain {
        &self.chain
    }

    pub fn start_probability(&self) -> f64 {
        self.start_probability
    }

    pub fn transitions(&self) -> &[RealizedTransition] {
        &self.transitions
    }

    pub fn ledger(&self) -> &[BlackHoleEntry] {
        &self.ledger
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges leaving the black hole; zero by construction.
    pub fn black_hole_out_degree(&self) -> usize {
        self.edges
            .iter()
            .filter(|e| e.from == ChainState::BlackHole)
            .count()
    }

    /// The start stage has more than one outcome, beyond the singleton setting
    /// in which conservation was originally stated.
    pub fn extrapolated(&self) -> bool {
        self.chain.stages().first().is_some_and(|s| s.len() > 1)
    }

    /// Weights of the realized edges, in path order.
    fn path_factors(&self) -> Vec<f64> {
        self.edges
            .iter()
            .filter(|e| matches!(e.to, ChainState::Event { .. }))
            .map(|e| e.weight)
            .collect()
    }
}

pub fn extend_with_blackhole(chain: &ProcessChain) -> Result<ExtendedChain> {
    let realized = chain
        .realized()
        .ok_or(Error::MissingRealization { stage: 0 })?;
    let report = validate_chain(chain);
    if let Some(v) = report.violations.first() {
        let only_impossible = report
            .violations
            .iter()
            .all(|v| v.kind == ViolationKind::ImpossibleRealizedTransition);
        if only_impossible {
            let stage = v.stage;
            return Err(Error::ImpossibleRealization {
                stage,
                source_label: realized[stage - 1].clone(),
                target: realized[stage].clone(),
            });
        }
        return Err(Error::InvalidChain(report.violations));
    }

    let idx: Vec<usize> = (0..chain.len())
        .map(|i| chain.realized_index(i).expect("validated realized label"))
        .collect();
    let stages = chain.stages();
    let start_probability = stages[0].outcomes()[idx[0]].probability;

    let mut transitions = Vec::new();
    let mut ledger = Vec::new();
    let mut edges = Vec::new();
    for (i, kernel) in chain.kernels().iter().enumerate() {
        let (x, y) = (idx[i], idx[i + 1]);
        let source_label = &stages[i].outcomes()[x].label;
        let realized_label = &stages[i + 1].outcomes()[y].label;
        let row = &kernel.rows()[x];
        let alpha = row[y];
        let from = ChainState::Event {
            stage: i,
            label: source_label.clone(),
        };
        edges.push(Edge {
            from: from.clone(),
            to: ChainState::Event {
                stage: i + 1,
                label: realized_label.clone(),
            },
            weight: 1.0,
        });
        let mut sibling_mass = 0.0;
        for (j, &rho) in row.iter().enumerate() {
            if j == y || rho <= 0.0 {
                continue;
            }
            sibling_mass -= rho;
            ledger.push(BlackHoleEntry {
                stage_index: i + 1,
                source_label: source_label.clone(),
                lost_label: stages[i + 1].outcomes()[j].label.clone(),
                negative_probability: -rho,
            });
            edges.push(Edge {
                from: from.clone(),
                to: ChainState::BlackHole,
                weight: -rho,
            });
        }
        transitions.push(RealizedTransition {
            kernel: i,
            source_label: source_label.clone(),
            realized_label: realized_label.clone(),
            alpha,
            renormalized: 1.0,
            aggregate: alpha - 1.0,
            sibling_mass,
        });
    }

    Ok(ExtendedChain {
        chain: chain.clone(),
        start_probability,
        transitions,
        ledger,
        edges,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    /// Information volume of the realized start event.
    pub start_bits: f64,
    /// Information volume of the realized end event along the path.
    pub end_bits: f64,
    pub conserved: bool,
    pub ledger: Vec<BlackHoleEntry>,
    /// The start stage is not a singleton.
    pub extrapolated: bool,
}

pub fn conservation_check(extended: &ExtendedChain) -> ConservationReport {
    let p = extended.start_probability();
    let path: f64 = extended.path_factors().iter().product();
    report(p, path * p, extended.ledger.clone(), extended.extrapolated())
}

/// The same accounting with the original transition probabilities left in
/// place, i.e. without the black-hole extension.
pub fn conservation_without_extension(chain: &ProcessChain) -> Result<ConservationReport> {
    let ext = extend_with_blackhole(chain)?;
    if let Some(t) = ext.transitions.iter().find(|t| t.alpha <= 0.0) {
        return Err(Error::ImpossibleRealization {
            stage: t.kernel + 1,
            source_label: t.source_label.clone(),
            target: t.realized_label.clone(),
        });
    }
    let p = ext.start_probability();
    let path: f64 = ext.transitions.iter().map(|t| t.alpha).product();
    Ok(report(p, path * p, Vec::new(), ext.extrapolated()))
}

fn report(start_p: f64, end_p: f64, ledger: Vec<BlackHoleEntry>, extrapolated: bool) -> ConservationReport {
    let start_bits = (-start_p.log2()).max(0.0);
    let end_bits = (-end_p.log2()).max(0.0);
    ConservationReport {
        start_bits,
        end_bits,
        conserved: (start_bits - end_bits).abs() < PROB_TOLERANCE,
        ledger,
        extrapolated,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variation {
    /// A realized transition of vanishing but positive probability.
    Natural,
    /// A realized transition of probability exactly zero.
    Artificial,
    Ordinary,
}

impl Variation {
    pub fn name(self) -> &'static str {
        match self {
            Variation::Natural => "NATURAL",
            Variation::Artificial => "ARTIFICIAL",
            Variation::Ordinary => "ORDINARY",
        }
    }
}

impl fmt::Display for Variation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Information volume, with a sentinel for events that could not happen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InformationVolume {
    Finite(f64),
    Infinite,
}

impl InformationVolume {
    pub fn of_probability(p: f64) -> Self {
        if p > 0.0 {
            InformationVolume::Finite((-p.log2()).max(0.0))
        } else {
            InformationVolume::Infinite
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, InformationVolume::Infinite)
    }
}

pub const DEFAULT_NATURAL_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationReport {
    pub class: Variation,
    pub transition_probability: f64,
    pub information_volume: InformationVolume,
}

pub fn classify_transition(alpha: f64, threshold: f64) -> VariationReport {
    let class = if alpha == 0.0 {
        Variation::Artificial
    } else if alpha <= threshold {
        Variation::Natural
    } else {
        Variation::Ordinary
    };
    VariationReport {
        class,
        transition_probability: alpha,
        information_volume: InformationVolume::of_probability(alpha),
    }
}

/// Classifies the realization of `realized` given the whole source set, using
/// `ρ(realized | X) = Σ_x p(x) ρ(realized | x)`. For a singleton source this
/// is the single row entry.
pub fn classify_variation(
    source: &TimeMomentSet,
    kernel: &OperatorKernel,
    realized: &str,
    threshold: f64,
) -> Result<VariationReport> {
    let j = kernel
        .target_labels()
        .iter()
        .position(|l| l == realized)
        .ok_or_else(|| Error::UnknownLabel(realized.to_string()))?;
    let mass = pushforward_mass(&source.probabilities(), kernel)?;
    Ok(classify_transition(mass[j], threshold))
}

/// Classifies each realized transition of a chain by its own row entry.
pub fn classify_realized(chain: &ProcessChain, threshold: f64) -> Result<Vec<VariationReport>> {
    (0..chain.kernels().len())
        .map(|i| {
            let x = chain
                .realized_index(i)
                .ok_or(Error::MissingRealization { stage: i })?;
            let y = chain
                .realized_index(i + 1)
                .ok_or(Error::MissingRealization { stage: i + 1 })?;
            Ok(classify_transition(chain.kernels()[i].rows()[x][y], threshold))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::TimeMoment;
    use approx::assert_abs_diff_eq;

    fn t(tick: u64) -> TimeMoment {
        TimeMoment::new(tick)
    }

    fn branch(p_start: &[(&str, f64)], row: Vec<f64>, realized: [&str; 2]) -> ProcessChain {
        let x = TimeMomentSet::new(t(0), p_start.iter().map(|(l, p)| (*l, *p))).unwrap();
        let k = OperatorKernel::new(p_start.iter().map(|_| row.clone()).collect()).unwrap();
        let y = TimeMomentSet::unchecked(
            t(1),
            k.target_labels()
                .iter()
                .cloned()
                .zip(row.iter().copied()),
        );
        ProcessChain::from_parts(
            vec![x, y],
            vec![k],
            Some(realized.iter().map(|s| s.to_string()).collect()),
        )
    }

    fn fig3(alpha: f64) -> ProcessChain {
        branch(&[("x1", 1.0)], vec![alpha, 1.0 - alpha], ["x1", "y1"])
    }

    #[test]
    fn binary_branch_entry_is_alpha_minus_one() {
        let ext = extend_with_blackhole(&fig3(0.2)).unwrap();
        assert_eq!(ext.ledger().len(), 1);
        let e = &ext.ledger()[0];
        assert_eq!((e.source_label.as_str(), e.lost_label.as_str()), ("x1", "y2"));
        assert_eq!(e.negative_probability, -0.8);
        assert_eq!(e.negative_probability, 0.2 - 1.0);
        assert_eq!(ext.transitions()[0].aggregate, -0.8);
        assert_eq!(ext.black_hole_out_degree(), 0);
    }

    #[test]
    fn certain_transition_has_empty_ledger() {
        let chain = branch(&[("x1", 1.0)], vec![1.0], ["x1", "y1"]);
        let ext = extend_with_blackhole(&chain).unwrap();
        assert!(ext.ledger().is_empty());
        assert_eq!(ext.transitions()[0].aggregate, 0.0);
    }

    #[test]
    fn three_way_branch() {
        let chain = branch(&[("x1", 1.0)], vec![0.5, 0.3, 0.2], ["x1", "y1"]);
        let ext = extend_with_blackhole(&chain).unwrap();
        let values: Vec<f64> = ext.ledger().iter().map(|e| e.negative_probability).collect();
        assert_eq!(values, vec![-0.3, -0.2]);
        let tr = &ext.transitions()[0];
        assert_eq!(tr.aggregate, -0.5);
        assert_abs_diff_eq!(tr.sibling_mass, -0.5, epsilon = 1e-15);
        assert!(tr.balance_gap() < 1e-15);
    }

    #[test]
    fn zero_probability_realization() {
        let x = TimeMomentSet::new(t(0), [("x1", 0.5), ("x2", 0.5)]).unwrap();
        let y = TimeMomentSet::new(t(1), [("y1", 0.5), ("y2", 0.5)]).unwrap();
        let chain = ProcessChain::from_parts(
            vec![x, y],
            vec![OperatorKernel::identity(2)],
            Some(vec!["x1".into(), "y2".into()]),
        );
        assert!(matches!(
            extend_with_blackhole(&chain),
            Err(Error::ImpossibleRealization { stage: 1, .. })
        ));
        let artificial = chain.with_artificial_variation(true);
        let ext = extend_with_blackhole(&artificial).unwrap();
        assert_eq!(ext.transitions()[0].aggregate, -1.0);
        assert!(conservation_check(&ext).conserved);
        assert!(conservation_without_extension(&artificial).is_err());
    }

    #[test]
    fn missing_path() {
        let chain = ProcessChain::from_parts(
            vec![TimeMomentSet::new(t(0), [("x", 1.0)]).unwrap()],
            vec![],
            None,
        );
        assert_eq!(
            extend_with_blackhole(&chain),
            Err(Error::MissingRealization { stage: 0 })
        );
    }

    #[test]
    fn conservation_singleton_start() {
        let ext = extend_with_blackhole(&fig3(0.2)).unwrap();
        let r = conservation_check(&ext);
        assert_eq!((r.start_bits, r.end_bits), (0.0, 0.0));
        assert!(r.conserved && !r.extrapolated);

        let raw = conservation_without_extension(&fig3(0.2)).unwrap();
        assert_eq!(raw.start_bits, 0.0);
        assert_abs_diff_eq!(raw.end_bits, 2.3219281, epsilon = 5e-8);
        assert!(!raw.conserved);
    }

    #[test]
    fn conservation_from_quarter() {
        let chain = branch(
            &[("x1", 0.25), ("x2", 0.75)],
            vec![0.2, 0.8],
            ["x1", "y1"],
        );
        let r = conservation_check(&extend_with_blackhole(&chain).unwrap());
        assert_eq!((r.start_bits, r.end_bits), (2.0, 2.0));
        assert!(r.conserved && r.extrapolated);
    }

    #[test]
    fn classification() {
        assert_eq!(classify_transition(1e-9, 1e-6).class, Variation::Natural);
        let art = classify_transition(0.0, 1e-6);
        assert_eq!(art.class, Variation::Artificial);
        assert!(art.information_volume.is_infinite());
        let ord = classify_transition(0.5, 1e-6);
        assert_eq!(ord.class, Variation::Ordinary);
        assert_eq!(ord.information_volume, InformationVolume::Finite(1.0));
    }

    #[test]
    fn classify_against_source_set() {
        let x = TimeMomentSet::new(t(0), [("x1", 1.0)]).unwrap();
        let k = OperatorKernel::new(vec![vec![1.0, 0.0]]).unwrap();
        let r = classify_variation(&x, &k, "y2", DEFAULT_NATURAL_THRESHOLD).unwrap();
        assert_eq!(r.class, Variation::Artificial);
        let r = classify_variation(&x, &k, "y1", DEFAULT_NATURAL_THRESHOLD).unwrap();
        assert_eq!(r.class, Variation::Ordinary);
        assert!(matches!(
            classify_variation(&x, &k, "nope", 1e-6),
            Err(Error::UnknownLabel(_))
        ));
    }
}
