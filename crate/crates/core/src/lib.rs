//! Estimate the minimal quantum (and classical) dimensionality consistent with
//! an observed discrete-time sequence of expectation values, synthesize explicit
//! quantum realizations of given sequences, and analyze their spectral content.
//!
//! The toolkit is organized around a small pipeline:
//!
//! 1. [`sequences`] — sequence containers and delay-embedding (Hankel) matrices,
//! 2. [`realization`] — noise-thresholded Hankel rank, dimension bounds and
//!    minimal linear realizations `a(t) = ⟨L|Mᵗ|R⟩`,
//! 3. [`dilation`] — an explicit quantum channel of dimension `r + 2`
//!    reproducing any contractively realized bounded sequence,
//! 4. [`spectral`] — z-transform evaluation, pole extraction and the
//!    roots-of-unity hull certificate for the minimal classical dimension,
//! 5. [`quantum`] / [`classical`] — ground-truth generators for both model
//!    classes, conserved-quantity spaces and ergodicity predicates.
//!
//! All operations are pure functions over immutable values and are safe for
//! unrestricted concurrent use.

pub mod classical;
pub mod dilation;
pub mod error;
pub mod linalg;
pub mod quantum;
pub mod realization;
pub mod sequences;
pub mod spectral;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use quantum::{DensityMatrix, KrausChannel, Observable};
pub use realization::LinearRealization;
pub use sequences::{HankelPair, MultiSequence, RealSequence};
