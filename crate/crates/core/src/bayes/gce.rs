use crate::algebra::{DensityMatrix, Svd};
use crate::error::{Error, Result};
use crate::maps::LinearMap;
use crate::sot::StateRenderingMap;

/// Generalized conditional expectation: solves
/// `E ∘ Θ_ρ = Θ_{E(ρ)} ∘ E_{Θ,ρ}` for `E_{Θ,ρ}: A → B` and returns its
/// Hilbert–Schmidt adjoint, the Bayes map of the Θ-derived family.
///
/// # Errors
/// [`Error::NotTracePreserving`] or [`Error::Singular`] when `Θ_{E(ρ)}` is
/// not invertible.
pub fn gce_solve(theta: &StateRenderingMap, e: &LinearMap, rho: &DensityMatrix) -> Result<LinearMap> {
    if !e.classification().trace_preserving {
        return Err(Error::NotTracePreserving { defect: e.defects().trace });
    }
    let sigma = e.apply(rho)?.hermitian_part();
    let theta_rho = theta.superoperator(rho)?;
    let theta_sigma = theta.superoperator(&sigma)?;
    let m = theta_sigma.matrix();
    let sv = Svd::new(m).singular_values().to_vec();
    let max = sv[0];
    let min = sv[sv.len() - 1];
    if min <= 1e-12 * max.max(1.0) {
        return Err(Error::Singular(format!(
            "Θ at the image state is not invertible (smallest singular value {min:.3e})"
        )));
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("Θ at the image state is not invertible".into()))?;
    let theta_sigma_inv = LinearMap::new(e.target().clone(), e.target().clone(), inv)?;
    let cond = theta_sigma_inv.compose(&e.compose(&theta_rho)?)?;
    Ok(cond.adjoint())
}
