//! Time-indexed discrete information measures.
//!
//! Probability distributions are pinned to moments on a discrete time axis
//! ([`TimeMomentSet`]) and joined by row-stochastic transition kernels
//! ([`OperatorKernel`]) into a [`ProcessChain`]. Information volume and entropy
//! are evaluated through an [`ObservationWindow`]: any event whose moment lies
//! inside the window is knowledge and carries zero information.
//!
//! On top of that calculus the crate evaluates the entropy reduction and
//! increase laws under the two anchorings of a unified time measure
//! ([`frames`]), keeps negative-probability bookkeeping for branches that could
//! have happened but did not ([`blackhole`]), and ships an exact-rational
//! brute-force [`oracle`] that rechecks every quantity independently.
//!
//! ```
//! use chronoinfo::frames::entropy_reduction_verdict;
//! use chronoinfo::{OperatorKernel, ProcessChain, TimeMoment, TimeMomentSet};
//!
//! let x = TimeMomentSet::new(TimeMoment::new(0), [("a", 1.0 / 3.0), ("b", 1.0 / 3.0), ("c", 1.0 / 3.0)])?;
//! let y = TimeMomentSet::new(TimeMoment::new(1), [("u", 1.0 / 3.0), ("v", 2.0 / 3.0)])?;
//! let k = OperatorKernel::from_map(&[0, 1, 1], 2);
//! let chain = ProcessChain::new(vec![x, y], vec![k], None)?;
//! let v = entropy_reduction_verdict(&chain)?;
//! assert!(v.holds && !v.equality);
//! assert!((v.rhs_bits - 3f64.log2()).abs() < 1e-12);
//! # Ok::<(), chronoinfo::Error>(())
//! ```

pub mod blackhole;
pub mod error;
pub mod events;
pub mod frames;
pub mod measures;
pub mod oracle;
pub mod timeline;

pub use error::{Error, Result};
pub use events::{
    KernelClass, OperatorKernel, Outcome, ProcessChain, TimeMomentSet, ValidationReport,
    Violation, ViolationKind,
};
pub use measures::MeasureContext;
pub use timeline::{Extent, ObservationWindow, TimeMoment};

/// Tolerance for normalization, consistency and law verdicts.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Tolerance for identities that accumulate rounding over several logarithms.
pub const IDENTITY_TOLERANCE: f64 = 1e-6;

/// Mass below which a pushed-forward outcome is dropped.
pub const ZERO_MASS: f64 = 1e-12;
