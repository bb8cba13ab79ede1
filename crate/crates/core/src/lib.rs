//! States over time on multi-matrix algebras, the time-reversal map and
//! Bayesian inversion of quantum channels.

pub mod algebra;
pub mod axioms;
pub mod bayes;
pub mod error;
pub mod maps;
pub mod random;
pub mod scenarios;
pub mod sot;
pub mod tolerance;
pub mod wire;

pub use algebra::{AlgebraElement, AlgebraShape, DensityMatrix, Factor, C64};
pub use error::{Error, Result};
pub use maps::LinearMap;
pub use sot::{SotFamily, StateOverTime, StateRenderingMap, UnitaryChooser};
pub use tolerance::Tolerances;
