//! Multi-matrix algebras `⊕_x M_{m_x}` and their elements.

mod element;
mod shape;
mod spectral;

use std::ops::Deref;

pub use element::{AlgebraElement, Factor};
pub use num_complex::Complex64 as C64;
pub use shape::{AlgebraShape, Block};
pub use spectral::{
    apply_spectral, eigh, eigh_matrix, functional_calculus, power, power_principal, power_real, real_pow,
    spectral_decomposition, Eigensystem, SpectralComponent, SupportMode,
};
pub(crate) use spectral::{check_hermitian, eigh_unchecked, Svd};

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// A positive unit-trace element, checked on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(AlgebraElement);

impl DensityMatrix {
    /// # Errors
    /// [`Error::NotState`] if the element is not hermitian, has an eigenvalue
    /// below `-atol`, or its trace differs from one by more than `atol`.
    pub fn new(a: AlgebraElement) -> Result<Self> {
        let tol = Tolerances::DEFAULT;
        if check_hermitian(&a).is_err() {
            return Err(Error::NotState(format!("hermiticity defect {:.3e}", a.hermitian_defect())));
        }
        let tr = a.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol.atol {
            return Err(Error::NotState(format!("trace {tr}")));
        }
        let min = eigh_unchecked(&a).min();
        if min < -tol.atol {
            return Err(Error::NotState(format!("eigenvalue {min:.3e}")));
        }
        Ok(DensityMatrix(a))
    }

    /// Normalizes a positive semidefinite element to unit trace.
    pub fn normalized(a: AlgebraElement) -> Result<Self> {
        let tr = a.trace().re;
        if tr <= 0.0 {
            return Err(Error::NotState("non-positive trace".into()));
        }
        Self::new(a.scale_real(1.0 / tr))
    }

    /// Probability vector as a state on `C^k`.
    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        Self::new(AlgebraElement::from_real_function(p))
    }

    pub fn maximally_mixed(shape: &AlgebraShape) -> Self {
        DensityMatrix(AlgebraElement::maximally_mixed(shape))
    }

    pub fn element(&self) -> &AlgebraElement {
        &self.0
    }

    pub fn into_element(self) -> AlgebraElement {
        self.0
    }

    /// Smallest eigenvalue exceeds the faithfulness tolerance.
    pub fn is_faithful(&self) -> bool {
        eigh_unchecked(&self.0).min() > Tolerances::DEFAULT.faithfulness
    }

    /// Diagonal of a state on a commutative algebra.
    pub fn probabilities(&self) -> Vec<f64> {
        self.0.blocks().iter().map(|b| b.trace().re).collect()
    }
}

impl Deref for DensityMatrix {
    type Target = AlgebraElement;
    fn deref(&self) -> &AlgebraElement {
        &self.0
    }
}

impl AsRef<AlgebraElement> for DensityMatrix {
    fn as_ref(&self) -> &AlgebraElement {
        &self.0
    }
}
