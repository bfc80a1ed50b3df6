//! Brute-force exact-rational verifier.
//!
//! Chains are generated with rational probabilities (normalized integer
//! compositions), every path is enumerated exactly, and entropies are taken
//! from the enumerated joint table. None of this goes through the float engine
//! in [`crate::events`], [`crate::measures`] or [`crate::frames`], so it can be
//! used to check them.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blackhole::{conservation_check, conservation_without_extension, extend_with_blackhole};
use crate::error::{Error, Result};
use crate::events::{OperatorKernel, ProcessChain, TimeMomentSet};
use crate::frames::{entropy_increase_verdict, entropy_reduction_verdict, LawVerdict};
use crate::measures::{conditional_entropy, mutual_information_volume, Direction};
use crate::timeline::TimeMoment;
use crate::PROB_TOLERANCE;

/// Largest number of paths [`enumerate_joint`] will visit.
pub const MAX_PATHS: u128 = 1_000_000;

/// Divergence between engine and oracle above which a trial is reported.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-6;

/// Upper bound on a single composition part.
const COMPOSITION_UNIT: u64 = 1000;

pub type Q = BigRational;

fn q(n: u64, d: u64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// A process chain over exact rationals. Stage sums, row sums and temporal
/// consistency hold with no tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalChain {
    stages: Vec<Vec<Q>>,
    kernels: Vec<Vec<Vec<Q>>>,
    realized: Option<Vec<usize>>,
}

impl RationalChain {
    /// Builds the chain from its first distribution, deriving later stages.
    pub fn from_initial(initial: Vec<Q>, kernels: Vec<Vec<Vec<Q>>>) -> Result<Self> {
        check_distribution(&initial).map_err(Error::InvalidSet)?;
        let mut stages = vec![initial];
        for (i, k) in kernels.iter().enumerate() {
            let prev = &stages[i];
            if k.len() != prev.len() {
                return Err(Error::ArityMismatch {
                    expected: prev.len(),
                    found: k.len(),
                });
            }
            let width = k.first().map_or(0, Vec::len);
            for row in k {
                if row.len() != width {
                    return Err(Error::InvalidKernel("ragged rows".into()));
                }
                if row.iter().any(|v| v < &Q::zero()) || row.iter().sum::<Q>() != Q::one() {
                    return Err(Error::InvalidKernel("row is not a distribution".into()));
                }
            }
            let mut next = vec![Q::zero(); width];
            for (p, row) in prev.iter().zip(k) {
                for (acc, rho) in next.iter_mut().zip(row) {
                    *acc += p * rho;
                }
            }
            if next.iter().any(Q::is_zero) {
                return Err(Error::InvalidKernel(format!(
                    "kernel {i} leaves a target with zero mass"
                )));
            }
            stages.push(next);
        }
        Ok(Self {
            stages,
            kernels,
            realized: None,
        })
    }

    pub fn with_realized(mut self, path: Vec<usize>) -> Self {
        self.realized = Some(path);
        self
    }

    pub fn stages(&self) -> &[Vec<Q>] {
        &self.stages
    }

    pub fn kernels(&self) -> &[Vec<Vec<Q>>] {
        &self.kernels
    }

    pub fn realized(&self) -> Option<&[usize]> {
        self.realized.as_deref()
    }

    pub fn label(stage: usize, index: usize) -> String {
        match stage {
            0 => format!("x{}", index + 1),
            1 => format!("y{}", index + 1),
            2 => format!("z{}", index + 1),
            s => format!("s{s}_{}", index + 1),
        }
    }

    /// The float chain the engine works on, one tick per stage.
    pub fn to_process_chain(&self) -> ProcessChain {
        let stages = self
            .stages
            .iter()
            .enumerate()
            .map(|(i, d)| {
                TimeMomentSet::unchecked(
                    TimeMoment::new(i as u64),
                    d.iter().enumerate().map(|(j, p)| (Self::label(i, j), to_f64(p))),
                )
            })
            .collect();
        let kernels = self
            .kernels
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let rows = k
                    .iter()
                    .map(|row| row.iter().map(to_f64).collect())
                    .collect();
                let labels = (0..self.stages[i + 1].len())
                    .map(|j| Self::label(i + 1, j))
                    .collect();
                OperatorKernel::unchecked(rows, labels)
            })
            .collect();
        let realized = self.realized.as_ref().map(|path| {
            path.iter()
                .enumerate()
                .map(|(i, &j)| Self::label(i, j))
                .collect()
        });
        ProcessChain::from_parts(stages, kernels, realized)
    }

    fn is_deterministic(&self, kernel: usize) -> bool {
        self.kernels[kernel]
            .iter()
            .all(|row| row.iter().filter(|v| !v.is_zero()).count() == 1)
    }

    fn is_refinement(&self, kernel: usize) -> bool {
        let k = &self.kernels[kernel];
        let width = k.first().map_or(0, Vec::len);
        (0..width).all(|j| k.iter().filter(|row| !row[j].is_zero()).count() <= 1)
    }
}

fn check_distribution(d: &[Q]) -> std::result::Result<(), String> {
    if d.is_empty() {
        return Err("empty distribution".into());
    }
    if d.iter().any(|p| p <= &Q::zero()) {
        return Err("non-positive probability".into());
    }
    if d.iter().sum::<Q>() != Q::one() {
        return Err("probabilities do not sum to one".into());
    }
    Ok(())
}

/// Exact probability of every full path with non-zero mass.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPaths {
    arities: Vec<usize>,
    pub paths: Vec<(Vec<usize>, Q)>,
}

impl JointPaths {
    pub fn total(&self) -> Q {
        self.paths.iter().map(|(_, p)| p).sum()
    }

    pub fn marginal(&self, stage: usize) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.arities[stage]];
        for (path, p) in &self.paths {
            out[path[stage]] += p;
        }
        out
    }

    /// `p(a, b)` over two stages, indexed `[a][b]`.
    pub fn pair(&self, a: usize, b: usize) -> Vec<Vec<Q>> {
        let mut out = vec![vec![Q::zero(); self.arities[b]]; self.arities[a]];
        for (path, p) in &self.paths {
            out[path[a]][path[b]] += p;
        }
        out
    }
}

pub fn enumerate_joint(chain: &RationalChain) -> Result<JointPaths> {
    let arities: Vec<usize> = chain.stages.iter().map(Vec::len).collect();
    let count = arities
        .iter()
        .try_fold(1u128, |acc, &n| acc.checked_mul(n as u128))
        .unwrap_or(u128::MAX);
    if count > MAX_PATHS {
        return Err(Error::TooLarge {
            paths: count,
            limit: MAX_PATHS,
        });
    }
    let mut paths = Vec::new();
    let mut idx = vec![0usize; arities.len()];
    loop {
        let mut p = chain.stages[0][idx[0]].clone();
        for (s, k) in chain.kernels.iter().enumerate() {
            if p.is_zero() {
                break;
            }
            p *= &k[idx[s]][idx[s + 1]];
        }
        if !p.is_zero() {
            paths.push((idx.clone(), p));
        }
        // odometer, last stage fastest
        let mut pos = arities.len();
        loop {
            if pos == 0 {
                return Ok(JointPaths { arities, paths });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < arities[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Entropy in bits of exact masses, via natural logarithms.
pub fn exact_entropy<'a>(masses: impl IntoIterator<Item = &'a Q>) -> f64 {
    masses
        .into_iter()
        .filter(|p| !p.is_zero())
        .map(|p| {
            let v = to_f64(p);
            -v * v.ln()
        })
        .sum::<f64>()
        / std::f64::consts::LN_2
}

/// Oracle values for one adjacent pair of stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMeasures {
    pub h_source: f64,
    pub h_target: f64,
    pub h_joint: f64,
    pub h_source_given_target: f64,
    pub h_target_given_source: f64,
    pub mutual_information: f64,
}

pub fn pair_measures(joint: &JointPaths, stage: usize) -> PairMeasures {
    let h_source = exact_entropy(&joint.marginal(stage));
    let h_target = exact_entropy(&joint.marginal(stage + 1));
    let h_joint = exact_entropy(joint.pair(stage, stage + 1).iter().flatten());
    PairMeasures {
        h_source,
        h_target,
        h_joint,
        h_source_given_target: h_joint - h_target,
        h_target_given_source: h_joint - h_source,
        mutual_information: h_source + h_target - h_joint,
    }
}

/// Shape of the kernel a trial draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrialKind {
    /// Surjective function from sources onto targets.
    Deterministic,
    /// Each target reachable from exactly one source.
    Refinement,
    Bijective,
    /// Arbitrary stochastic rows, possibly sparse.
    General,
}

impl TrialKind {
    pub fn name(self) -> &'static str {
        match self {
            TrialKind::Deterministic => "deterministic",
            TrialKind::Refinement => "refinement",
            TrialKind::Bijective => "bijective",
            TrialKind::General => "general",
        }
    }
}

/// How trial distributions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Profile {
    /// Compositions with parts in `1..=1000`.
    Spread,
    /// One outcome holds `1 - 1e-9`.
    NearDegenerate,
}

/// Random generators over exact rationals.
pub struct Generator<'a, R: Rng> {
    rng: &'a mut R,
    profile: Profile,
}

impl<'a, R: Rng> Generator<'a, R> {
    pub fn new(rng: &'a mut R, profile: Profile) -> Self {
        Self { rng, profile }
    }

    pub fn distribution(&mut self, n: usize) -> Vec<Q> {
        assert!(n > 0);
        match self.profile {
            Profile::Spread => {
                let parts: Vec<u64> = (0..n)
                    .map(|_| self.rng.gen_range(1..=COMPOSITION_UNIT))
                    .collect();
                let total: u64 = parts.iter().sum();
                parts.into_iter().map(|p| q(p, total)).collect()
            }
            Profile::NearDegenerate => {
                if n == 1 {
                    return vec![Q::one()];
                }
                let rest = (n - 1) as u64;
                let total = 1_000_000_000 * rest;
                let heavy = self.rng.gen_range(0..n);
                (0..n)
                    .map(|i| {
                        if i == heavy {
                            q(total - rest, total)
                        } else {
                            q(1, total)
                        }
                    })
                    .collect()
            }
        }
    }

    /// Uniform function `0..m -> 0..n` conditioned on hitting every target.
    pub fn surjection(&mut self, m: usize, n: usize) -> Vec<usize> {
        assert!(n >= 1 && n <= m);
        loop {
            let map: Vec<usize> = (0..m).map(|_| self.rng.gen_range(0..n)).collect();
            let mut hit = vec![false; n];
            map.iter().for_each(|&j| hit[j] = true);
            if hit.iter().all(|&h| h) {
                return map;
            }
        }
    }

    fn one_hot_rows(map: &[usize], n: usize) -> Vec<Vec<Q>> {
        map.iter()
            .map(|&j| {
                let mut row = vec![Q::zero(); n];
                row[j] = Q::one();
                row
            })
            .collect()
    }

    pub fn deterministic_kernel(&mut self, m: usize, n: usize) -> Vec<Vec<Q>> {
        let map = self.surjection(m, n);
        Self::one_hot_rows(&map, n)
    }

    pub fn bijective_kernel(&mut self, n: usize) -> Vec<Vec<Q>> {
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(self.rng);
        Self::one_hot_rows(&map, n)
    }

    /// Every one of `n >= m` targets gets exactly one source; every source at least one target.
    pub fn refinement_kernel(&mut self, m: usize, n: usize) -> Vec<Vec<Q>> {
        let owner = self.surjection(n, m);
        (0..m)
            .map(|i| {
                let targets: Vec<usize> = (0..n).filter(|&j| owner[j] == i).collect();
                let weights = self.distribution(targets.len());
                let mut row = vec![Q::zero(); n];
                for (j, w) in targets.into_iter().zip(weights) {
                    row[j] = w;
                }
                row
            })
            .collect()
    }

    /// Stochastic rows over `n` targets with random support, every target reachable.
    pub fn general_kernel(&mut self, m: usize, n: usize) -> Vec<Vec<Q>> {
        loop {
            let rows: Vec<Vec<Q>> = (0..m)
                .map(|_| {
                    let support: Vec<usize> =
                        (0..n).filter(|_| self.rng.gen_bool(0.6)).collect();
                    let support = if support.is_empty() {
                        vec![self.rng.gen_range(0..n)]
                    } else {
                        support
                    };
                    let weights = self.distribution(support.len());
                    let mut row = vec![Q::zero(); n];
                    for (j, w) in support.into_iter().zip(weights) {
                        row[j] = w;
                    }
                    row
                })
                .collect();
            if (0..n).all(|j| rows.iter().any(|r| !r[j].is_zero())) {
                return rows;
            }
        }
    }

    /// Two-stage chain of the given kind with arities in `1..=arity_bound`.
    pub fn two_stage(&mut self, kind: TrialKind, arity_bound: usize) -> RationalChain {
        let m = self.rng.gen_range(1..=arity_bound);
        let kernel = match kind {
            TrialKind::Deterministic => {
                let n = self.rng.gen_range(1..=m);
                self.deterministic_kernel(m, n)
            }
            TrialKind::Refinement => {
                let n = self.rng.gen_range(m..=arity_bound);
                self.refinement_kernel(m, n)
            }
            TrialKind::Bijective => self.bijective_kernel(m),
            TrialKind::General => {
                let n = self.rng.gen_range(1..=arity_bound);
                self.general_kernel(m, n)
            }
        };
        let initial = self.distribution(m);
        RationalChain::from_initial(initial, vec![kernel]).expect("generated chain is valid")
    }

    /// Chain of `stages` stages with general kernels.
    pub fn general_chain(&mut self, stages: usize, arity_bound: usize) -> RationalChain {
        let mut arity = self.rng.gen_range(1..=arity_bound);
        let initial = self.distribution(arity);
        let mut kernels = Vec::new();
        for _ in 1..stages {
            let n = self.rng.gen_range(1..=arity_bound);
            kernels.push(self.general_kernel(arity, n));
            arity = n;
        }
        RationalChain::from_initial(initial, kernels).expect("generated chain is valid")
    }

    /// Draws a realized path with positive probability.
    pub fn realized_path(&mut self, chain: &RationalChain) -> Vec<usize> {
        let mut path = vec![self.rng.gen_range(0..chain.stages[0].len())];
        for k in &chain.kernels {
            let row = &k[*path.last().expect("non-empty path")];
            let support: Vec<usize> = (0..row.len()).filter(|&j| !row[j].is_zero()).collect();
            path.push(support[self.rng.gen_range(0..support.len())]);
        }
        path
    }
}

/// Independent RNG stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Which kernels an oracle run draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrialMix {
    /// Cycles through deterministic, refinement and bijective kernels.
    Mixed,
    Only(TrialKind),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub arity_bound: usize,
    pub trials: u64,
    pub seed: u64,
    pub mix: TrialMix,
    pub profile: Profile,
}

impl OracleConfig {
    pub fn new(arity_bound: usize, trials: u64, seed: u64) -> Self {
        Self {
            arity_bound,
            trials,
            seed,
            mix: TrialMix::Mixed,
            profile: Profile::Spread,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub trial: u64,
    pub quantity: &'static str,
    pub engine: f64,
    pub oracle: f64,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "trial {}: {} engine={} oracle={} (|diff|={:e})",
            self.trial,
            self.quantity,
            self.engine,
            self.oracle,
            (self.engine - self.oracle).abs()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawFailure {
    pub trial: u64,
    pub law: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OracleReport {
    pub trials: u64,
    pub reduction_checked: u64,
    pub reduction_held: u64,
    pub increase_checked: u64,
    pub increase_held: u64,
    pub equalities: u64,
    pub bijections: u64,
    /// Non-bijective instances whose exact entropy gap is below the equality
    /// tolerance, so that equality cannot be told apart in floating point.
    pub unresolved_equalities: u64,
    pub conservation_checked: u64,
    pub conserved: u64,
    pub max_divergence: f64,
    pub divergences: Vec<Divergence>,
    pub failures: Vec<LawFailure>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.divergences.is_empty() && self.failures.is_empty()
    }

    fn merge(&mut self, other: OracleReport) {
        self.trials += other.trials;
        self.reduction_checked += other.reduction_checked;
        self.reduction_held += other.reduction_held;
        self.increase_checked += other.increase_checked;
        self.increase_held += other.increase_held;
        self.equalities += other.equalities;
        self.bijections += other.bijections;
        self.unresolved_equalities += other.unresolved_equalities;
        self.conservation_checked += other.conservation_checked;
        self.conserved += other.conserved;
        self.max_divergence = self.max_divergence.max(other.max_divergence);
        self.divergences.extend(other.divergences);
        self.failures.extend(other.failures);
    }
}

/// Runs [`OracleConfig::new`]`(arity_bound, trials, seed)`.
pub fn oracle_entropy_laws(arity_bound: usize, trials: u64, seed: u64) -> OracleReport {
    run_oracle(&OracleConfig::new(arity_bound, trials, seed))
}

pub fn run_oracle(config: &OracleConfig) -> OracleReport {
    let bound = config.arity_bound.clamp(1, 8);
    let mut report = OracleReport::default();
    for trial in 0..config.trials {
        let kind = match config.mix {
            TrialMix::Mixed => [
                TrialKind::Deterministic,
                TrialKind::Refinement,
                TrialKind::Bijective,
            ][(trial % 3) as usize],
            TrialMix::Only(k) => k,
        };
        report.merge(run_trial(config.seed, trial, kind, bound, config.profile));
    }
    report
}

/// One generated instance checked against the engine.
pub fn run_trial(
    seed: u64,
    trial: u64,
    kind: TrialKind,
    arity_bound: usize,
    profile: Profile,
) -> OracleReport {
    let mut rng = trial_rng(seed, trial);
    let mut gen = Generator::new(&mut rng, profile);
    let rational = gen.two_stage(kind, arity_bound);
    let path = gen.realized_path(&rational);
    let rational = rational.with_realized(path);
    let chain = rational.to_process_chain();

    let mut out = OracleReport {
        trials: 1,
        ..Default::default()
    };
    let mut cmp = |out: &mut OracleReport, quantity: &'static str, engine: f64, oracle: f64| {
        let diff = (engine - oracle).abs();
        if diff.is_nan() || diff > out.max_divergence {
            out.max_divergence = if diff.is_nan() { f64::INFINITY } else { diff };
        }
        if diff.is_nan() || diff > DIVERGENCE_TOLERANCE {
            out.divergences.push(Divergence {
                trial,
                quantity,
                engine,
                oracle,
            });
        }
    };
    let fail = |out: &mut OracleReport, law: &'static str, detail: String| {
        out.failures.push(LawFailure { trial, law, detail });
    };

    let joint = match enumerate_joint(&rational) {
        Ok(j) => j,
        Err(e) => {
            fail(&mut out, "oracle", e.to_string());
            return out;
        }
    };
    let m = pair_measures(&joint, 0);
    let oracle_bijective = rational.is_deterministic(0) && rational.is_refinement(0);
    if oracle_bijective {
        out.bijections += 1;
    }

    let (x, kernel, _) = chain.two_stage().expect("two-stage trial");
    match (
        conditional_entropy(x, kernel, Direction::Forward),
        conditional_entropy(x, kernel, Direction::Backward),
        mutual_information_volume(x, kernel),
    ) {
        (Ok(fwd), Ok(bwd), Ok(mi)) => {
            cmp(&mut out, "H(Y|X)", fwd, m.h_target_given_source);
            cmp(&mut out, "H(X|Y)", bwd, m.h_source_given_target);
            cmp(&mut out, "I(X;Y)", mi.value, m.mutual_information);
        }
        (a, b, c) => fail(
            &mut out,
            "engine",
            format!("measure error: {:?} {:?} {:?}", a.err(), b.err(), c.err()),
        ),
    }

    let check_verdict =
        |out: &mut OracleReport, law: &'static str, v: LawVerdict, oracle_holds: bool| {
            cmp(out, "H(Y)", v.lhs_bits, m.h_target);
            cmp(out, "H(X)", v.rhs_bits, m.h_source);
            if v.equality {
                out.equalities += 1;
            }
            if v.holds != oracle_holds {
                fail(
                    out,
                    law,
                    format!("engine holds={} oracle holds={}", v.holds, oracle_holds),
                );
            }
            if !v.holds {
                fail(out, law, format!("H(Y)={} H(X)={}", v.lhs_bits, v.rhs_bits));
            }
            let exact_gap = (m.h_target - m.h_source).abs();
            let unresolved = !oracle_bijective && exact_gap <= 2.0 * PROB_TOLERANCE;
            if unresolved {
                out.unresolved_equalities += 1;
            } else if v.equality != oracle_bijective {
                fail(
                    out,
                    law,
                    format!(
                        "equality={} but oracle bijective={}",
                        v.equality, oracle_bijective
                    ),
                );
            }
            if !v.decomposition.holds {
                fail(
                    out,
                    law,
                    format!("decomposition gap {:e}", v.decomposition.gap()),
                );
            }
        };

    if rational.is_deterministic(0) {
        out.reduction_checked += 1;
        match entropy_reduction_verdict(&chain) {
            Ok(v) => {
                if v.holds {
                    out.reduction_held += 1;
                }
                cmp(&mut out, "H(X|Y) [T1]", v.conditional_bits, m.h_source_given_target);
                check_verdict(
                    &mut out,
                    "THEOREM_1",
                    v,
                    m.h_target <= m.h_source + PROB_TOLERANCE,
                );
            }
            Err(e) => fail(&mut out, "THEOREM_1", e.to_string()),
        }
    }
    if rational.is_refinement(0) {
        out.increase_checked += 1;
        match entropy_increase_verdict(&chain) {
            Ok(v) => {
                if v.holds {
                    out.increase_held += 1;
                }
                cmp(&mut out, "H(Y|X) [T2]", v.conditional_bits, m.h_target_given_source);
                check_verdict(
                    &mut out,
                    "THEOREM_2",
                    v,
                    m.h_target >= m.h_source - PROB_TOLERANCE,
                );
            }
            Err(e) => fail(&mut out, "THEOREM_2", e.to_string()),
        }
    }

    check_conservation(&mut out, trial, &rational, &chain, &mut cmp);
    out
}

fn check_conservation(
    out: &mut OracleReport,
    trial: u64,
    rational: &RationalChain,
    chain: &ProcessChain,
    cmp: &mut impl FnMut(&mut OracleReport, &'static str, f64, f64),
) {
    let path = rational.realized().expect("trial has a realized path");
    let start = &rational.stages()[0][path[0]];
    let mut raw = start.clone();
    for (s, k) in rational.kernels().iter().enumerate() {
        raw *= &k[path[s]][path[s + 1]];
    }
    let oracle_start = -to_f64(start).ln() / std::f64::consts::LN_2;
    let oracle_raw_end = -to_f64(&raw).ln() / std::f64::consts::LN_2;

    out.conservation_checked += 1;
    let ext = match extend_with_blackhole(chain) {
        Ok(e) => e,
        Err(e) => {
            out.failures.push(LawFailure {
                trial,
                law: "THEOREM_3",
                detail: e.to_string(),
            });
            return;
        }
    };
    let report = conservation_check(&ext);
    if report.conserved {
        out.conserved += 1;
    } else {
        out.failures.push(LawFailure {
            trial,
            law: "THEOREM_3",
            detail: format!("start={} end={}", report.start_bits, report.end_bits),
        });
    }
    if ext.black_hole_out_degree() != 0 {
        out.failures.push(LawFailure {
            trial,
            law: "THEOREM_3",
            detail: "black hole has outgoing edges".into(),
        });
    }
    cmp(out, "I(start)", report.start_bits, oracle_start);
    cmp(out, "I(end) extended", report.end_bits, oracle_start);
    if let Ok(raw_report) = conservation_without_extension(chain) {
        cmp(out, "I(end) raw", raw_report.end_bits, oracle_raw_end);
    }
}

/// Runs conservation on multi-stage chains with general kernels.
pub fn conservation_trials(
    arity_bound: usize,
    max_stages: usize,
    trials: u64,
    seed: u64,
) -> OracleReport {
    let mut report = OracleReport::default();
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let mut gen = Generator::new(&mut rng, Profile::Spread);
        let stages = gen.rng.gen_range(2..=max_stages.max(2));
        let rational = gen.general_chain(stages, arity_bound);
        let path = gen.realized_path(&rational);
        let rational = rational.with_realized(path);
        let chain = rational.to_process_chain();
        let mut out = OracleReport {
            trials: 1,
            ..Default::default()
        };
        let mut cmp = |out: &mut OracleReport, quantity: &'static str, engine: f64, oracle: f64| {
            let diff = (engine - oracle).abs();
            out.max_divergence = out.max_divergence.max(diff);
            if diff.is_nan() || diff > DIVERGENCE_TOLERANCE {
                out.divergences.push(Divergence {
                    trial,
                    quantity,
                    engine,
                    oracle,
                });
            }
        };
        check_conservation(&mut out, trial, &rational, &chain, &mut cmp);
        report.merge(out);
    }
    report
}
