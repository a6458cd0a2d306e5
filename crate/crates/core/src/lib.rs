//! Harmonic analysis on bounded Vilenkin groups truncated at a finite depth.
//!
//! Covers mixed-radix group arithmetic, the Vilenkin character system and its
//! Dirichlet kernels, fast Vilenkin-Chrestenson transforms, Fejer and
//! Marcinkiewicz-Fejer kernels and means, the Lebesgue-point operators `W`
//! and `V`, and p-atom experiments for the maximal operator.

pub mod atoms;
pub mod basis;
pub mod error;
pub mod experiments;
pub mod function;
pub mod group;
pub mod kernels;
pub mod lebesgue;
pub mod summability;
pub mod testfns;
pub mod transform;

pub use error::{Error, Result};
pub use function::SampledFunction;
pub use group::{GroupElement, GroupStructure, MixedRadixIndex};
pub use num_complex::Complex64;
pub use transform::Spectrum;
