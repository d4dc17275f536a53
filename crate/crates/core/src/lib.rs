//! Local alignment kernels for relation classification over dependency
//! paths.
//!
//! Paths are token sequences of words and directed syntactic edges. Two
//! paths are compared by summing over all their local alignments, crediting
//! aligned tokens through a substitution matrix whose word scores come from
//! corpus co-occurrence statistics, a concept taxonomy, or a random baseline.
//! The resulting Gram matrices feed a dual SVM solver and a cross-validation
//! harness.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which the file formats and CLI use.

pub mod distributional;
pub mod error;
pub mod evaluation;
pub mod format;
pub mod kernels;
pub mod scalar;
pub mod sequence;
pub mod substitution;
pub mod svm;
pub mod taxonomy;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use sequence::{Dataset, Direction, Label, LabeledInstance, PathSequence, Token};

pub type Gram = kernels::GramMatrix<f64>;
pub type Gram32 = kernels::GramMatrix<f32>;
pub type Params = kernels::AlignParams<f64>;
pub type Subst = substitution::SubstitutionMatrix<f64>;
pub type WordTable = substitution::WordScores<f64>;
pub type Model = svm::TrainedModel<f64>;
