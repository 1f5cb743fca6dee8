//! Ultrametric stability of group representations over finite local rings.

pub mod certificate;
pub mod cocycle;
pub mod config;
pub mod error;
pub mod filtration;
pub mod gbs;
pub mod graph;
pub mod involution;
pub mod lifting;
pub mod matrix;
pub mod monomial;
pub mod norm;
pub mod presentation;
pub mod ring;
pub mod smith;
pub mod suites;
pub mod witness;

pub use error::{Error, Result};
pub use matrix::UMatrix;
pub use norm::NormValue;
pub use presentation::{ApproxRep, FiniteImage, Letter, Presentation, Word};
pub use ring::{Mode, RingSpec, Scalar};
pub use smith::{smith_local, solve_linear, LinearSolution, SmithDecomposition};
