//! Construction, evaluation and numerical certification of a smooth, moderate
//! Young function adapted to the tails of a family of atomic measures, plus the
//! penalization formulas that consume it.

// `!(a <= b)` is used on purpose so that NaN fails every guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod derivative;
pub mod error;
pub mod measures;
pub mod numfmt;
pub mod penalization;
pub mod quadrature;
pub mod sequences;
pub mod verify;
pub mod young;

pub use derivative::{PiecewiseDerivative, Segment, SegmentKind, ThetaSpec};
pub use error::{Error, Result};
pub use measures::{AtomicMeasure, MeasureFamily, Region};
pub use sequences::ScaleSequence;
pub use young::{Mollifier, YoungFunction};

/// Bundled example family used by the default configuration and the tests.
pub const EXAMPLE_FAMILY: &str = include_str!("../data/example_family.json");

/// Runs the whole construction: sequences from the family's tails, the
/// stretched derivative, and the mollified Young function.
pub fn construct(family: &MeasureFamily, theta: ThetaSpec, horizon: usize, epsilon: Option<f64>) -> Result<YoungFunction> {
    let seq = ScaleSequence::from_family(family, horizon)?;
    let hat = PiecewiseDerivative::build(seq.c(), theta, family.p())?;
    match epsilon {
        Some(eps) => YoungFunction::build(hat, eps),
        None => YoungFunction::build_default(hat),
    }
}
