use crate::algebra::{functional_calculus, AlgebraElement, DensityMatrix, C64};
use crate::error::{Error, Result};
use crate::maps::LinearMap;
use crate::sot::{evaluate_tp, SotFamily};

/// Both sides of the two-time correlator identity.
#[derive(Debug, Clone, Copy)]
pub struct Correlator {
    /// `tr(e^{iHt} B e^{-iHt} A ρ)`.
    pub direct: C64,
    /// `tr((E ⋆ ρ)† (A ⊗ B))` with `E = Ad_{e^{-iHt}}` and the left bloom.
    pub from_sot: C64,
}

impl Correlator {
    pub fn residual(&self) -> f64 {
        (self.direct - self.from_sot).norm()
    }
}

/// `⟨B(t) A(0)⟩_ρ` computed directly and from the left bloom.
///
/// # Errors
/// Operators on different algebras or a non-hermitian `H`, `A` or `B`.
pub fn two_time_correlator(
    rho: &DensityMatrix,
    h: &AlgebraElement,
    t: f64,
    a: &AlgebraElement,
    b: &AlgebraElement,
) -> Result<Correlator> {
    for (name, op) in [("H", h), ("A", a), ("B", b)] {
        if op.shape() != rho.shape() {
            return Err(Error::ShapeMismatch(format!("{name} and the state act on different algebras")));
        }
        if op.hermitian_defect() > 1e-10 {
            return Err(Error::NotHermitian {
                defect: op.hermitian_defect(),
            });
        }
    }
    let u = functional_calculus(h, |l| C64::from_polar(1.0, -l * t))?;
    let r: &AlgebraElement = rho;
    let bt = &(&u.adjoint() * b) * &u;
    let direct = (&(&bt * a) * r).trace();

    let e = LinearMap::conjugation(&u);
    let sot = evaluate_tp(&SotFamily::LeftBloom, &e, rho)?;
    let from_sot = sot.inner(&a.tensor(b));
    Ok(Correlator { direct, from_sot })
}
