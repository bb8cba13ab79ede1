use super::family::{pow, Branch, SotFamily};
use crate::algebra::{spectral_decomposition, AlgebraElement, DensityMatrix, Factor, C64};
use crate::error::{Error, Result};
use crate::maps::{apply_first, channel_state, LinearMap};
use crate::tolerance::Tolerances;

/// A state over time together with the data it was built from.
#[derive(Debug, Clone)]
pub struct StateOverTime {
    pub family: SotFamily,
    pub channel: LinearMap,
    pub prior: DensityMatrix,
    /// Element of `A ⊗ B`.
    pub value: AlgebraElement,
}

impl StateOverTime {
    /// `(||tr_B(E⋆ρ) - ρ||, ||tr_A(E⋆ρ) - E(ρ)||)`.
    pub fn marginal_residuals(&self) -> (f64, f64) {
        marginal_residuals(&self.value, &self.channel, &self.prior).expect("value has tensor shape")
    }
}

/// Marginal defects of a candidate state over time.
pub fn marginal_residuals(t: &AlgebraElement, e: &LinearMap, rho: &AlgebraElement) -> Result<(f64, f64)> {
    let first = t.partial_trace(Factor::Second)?;
    let second = t.partial_trace(Factor::First)?;
    Ok((first.distance(rho), second.distance(&e.apply(rho)?)))
}

fn lift(x: &AlgebraElement, e: &LinearMap) -> AlgebraElement {
    x.tensor(&AlgebraElement::identity(e.target()))
}

/// The family's defining formula, with no domain checks. `x` is used as the
/// prior; powers follow `branch`. Linear in `e` for every family.
pub(crate) fn formula(family: &SotFamily, e: &LinearMap, x: &AlgebraElement, branch: Branch) -> Result<AlgebraElement> {
    if x.shape() != e.source() {
        return Err(Error::ShapeMismatch(format!(
            "prior on {} for a channel from {}",
            x.shape(),
            e.source()
        )));
    }
    let half = C64::new(0.5, 0.0);
    match family {
        SotFamily::Uncorrelated => Ok(x.tensor(&e.apply(x)?)),
        SotFamily::Ohya => {
            if !e.source().is_single_block() || !e.target().is_single_block() {
                return Err(Error::Unsupported(
                    "the Ohya compound state is only defined between matrix algebras".into(),
                ));
            }
            let comps = spectral_decomposition(x, Tolerances::DEFAULT.eigen_group)?;
            let mut acc = AlgebraElement::zeros(&crate::algebra::AlgebraShape::tensor(e.source(), e.target()));
            for c in comps {
                if c.eigenvalue.abs() <= Tolerances::DEFAULT.faithfulness {
                    continue;
                }
                let tr = c.projector.trace().re;
                let out = e.apply(&c.projector.scale_real(1.0 / tr))?;
                acc = &acc + &c.projector.tensor(&out).scale_real(c.eigenvalue);
            }
            Ok(acc)
        }
        SotFamily::LeiferSpekkens => {
            let k = lift(&pow(x, half, branch)?, e);
            Ok(&(&k * &channel_state(e)) * &k)
        }
        SotFamily::TRotated { t } => {
            let a = lift(&pow(x, C64::new(0.5, -t), branch)?, e);
            let b = lift(&pow(x, C64::new(0.5, *t), branch)?, e);
            Ok(&(&a * &channel_state(e)) * &b)
        }
        SotFamily::Sth { chooser } => {
            let u = chooser.unitary(x, branch)?;
            let h = pow(x, half, branch)?;
            let a = lift(&(&u.adjoint() * &h), e);
            let b = lift(&(&h * &u), e);
            Ok(&(&a * &channel_state(e)) * &b)
        }
        SotFamily::SymmetricBloom => {
            let k = lift(x, e);
            Ok(k.jordan(&channel_state(e)).scale(half))
        }
        SotFamily::RightBloom => Ok(&lift(x, e) * &channel_state(e)),
        SotFamily::LeftBloom => Ok(&channel_state(e) * &lift(x, e)),
        SotFamily::Rs { r, s } => {
            let theta = super::StateRenderingMap::Rs { r: *r, s: *s };
            apply_first(&theta.superoperator_with(x, branch)?, &channel_state(e))
        }
        SotFamily::ThetaDerived { theta } => apply_first(&theta.superoperator_with(x, branch)?, &channel_state(e)),
    }
}

/// Evaluates `E ⋆ ρ`.
///
/// The channel must be trace preserving, and completely positive for the
/// families that require it ([`SotFamily::requires_cptp`]).
///
/// # Errors
/// Shape mismatch, [`Error::NotTracePreserving`], [`Error::NotCptp`], or
/// [`Error::Unsupported`] for Ohya on non-matrix algebras.
pub fn evaluate(family: &SotFamily, e: &LinearMap, rho: &DensityMatrix) -> Result<StateOverTime> {
    if family.requires_cptp() && !e.is_cptp() {
        return Err(Error::NotCptp);
    }
    let value = evaluate_tp(family, e, rho)?;
    Ok(StateOverTime {
        family: *family,
        channel: e.clone(),
        prior: rho.clone(),
        value,
    })
}

/// `E ⋆ ρ` for any trace-preserving `E`, using the linear extension of the
/// family in its process argument.
pub fn evaluate_tp(family: &SotFamily, e: &LinearMap, rho: &DensityMatrix) -> Result<AlgebraElement> {
    if !e.classification().trace_preserving {
        return Err(Error::NotTracePreserving { defect: e.defects().trace });
    }
    formula(family, e, rho, Branch::Support)
}

/// `E ⋆ X` for an arbitrary element `X` of the source algebra, for families
/// that are linear in the state.
///
/// # Errors
/// [`Error::Unsupported`] for families that are not state-linear.
pub fn extend_linear(family: &SotFamily, e: &LinearMap, x: &AlgebraElement) -> Result<AlgebraElement> {
    if !family.is_state_linear() {
        return Err(Error::Unsupported(format!("{family} is not linear in the state")));
    }
    formula(family, e, x, Branch::Principal)
}

/// `E ⋆ X` for a hermitian `X`, continuing the family's formula through the
/// principal branch of every power of `X`. Agrees with [`extend_linear`] on
/// state-linear families.
pub fn extend_principal(family: &SotFamily, e: &LinearMap, x: &AlgebraElement) -> Result<AlgebraElement> {
    crate::algebra::check_hermitian(x)?;
    formula(family, e, x, Branch::Principal)
}

/// Reverse orientation `E ⋆† ρ = ((† ∘ E ∘ †) ⋆ ρ)^dagger`.
pub fn reverse_orientation(family: &SotFamily, e: &LinearMap, rho: &DensityMatrix) -> Result<AlgebraElement> {
    Ok(evaluate_tp(family, &e.tilde(), rho)?.adjoint())
}
