//! Linear maps between multi-matrix algebras, channel states and the
//! time-reversal map.

mod channel_state;
mod constructors;
mod linear_map;

pub use channel_state::{
    apply_first, apply_second, channel_from_state, channel_state, cp_decompose, mu_adjoint_unit, time_reversal,
    CpDecomposition,
};
pub use constructors::KrausOperator;
pub use linear_map::{Classification, Defects, LinearMap};
pub(crate) use linear_map::transposed_units;
