use crate::algebra::{AlgebraElement, AlgebraShape, DensityMatrix, Factor, SupportMode};
use crate::bayes::solve;
use crate::error::{Error, Result};
use crate::maps::LinearMap;
use crate::sot::SotFamily;

use super::pem::NEGLIGIBLE;

/// A state `σ` on `A` and an instrument with CP parts `F_x: A → B`.
#[derive(Debug, Clone)]
pub struct InstrumentScenario {
    pub sigma: DensityMatrix,
    pub parts: Vec<LinearMap>,
}

/// Bayesian inverse of the outcome marginal of an instrument, compared
/// against the state-update map.
#[derive(Debug, Clone)]
pub struct StateUpdate {
    /// `Ψ(δ_x) = F_x(σ) / tr(F_x(σ)) ⊗ δ_x`, as a map `C^X → B ⊗ C^X`.
    pub psi: LinearMap,
    /// Bayes map of `tr_B` at `ρ = F(σ)` for the requested family.
    pub bayes: LinearMap,
    /// `||bayes - Ψ||`.
    pub residual: f64,
    /// `||tr_B ∘ Ψ - id||`.
    pub conditional_defect: f64,
    /// `||Ψ(tr_B ρ) - ρ||`.
    pub prior_defect: f64,
}

impl InstrumentScenario {
    /// # Errors
    /// Parts that are not CP, differ in shape, or do not sum to a channel.
    pub fn new(sigma: DensityMatrix, parts: Vec<LinearMap>) -> Result<Self> {
        let channel = LinearMap::instrument(&parts)?;
        if sigma.shape() != channel.source() {
            return Err(Error::ShapeMismatch("state and instrument act on different algebras".into()));
        }
        Ok(Self { sigma, parts })
    }

    /// The instrument as one channel `A → B ⊗ C^X`.
    pub fn channel(&self) -> LinearMap {
        LinearMap::instrument(&self.parts).expect("validated")
    }

    /// `ρ = F(σ) = Σ_x F_x(σ) ⊗ δ_x`.
    pub fn joint(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.channel().apply(&self.sigma)?.hermitian_part())
    }

    pub fn outcome_probabilities(&self) -> Result<Vec<f64>> {
        self.parts.iter().map(|f| Ok(f.apply(&self.sigma)?.trace().re)).collect()
    }

    /// Post-measurement states `F_x(σ) / tr(F_x(σ))`.
    ///
    /// # Errors
    /// An outcome of negligible probability.
    pub fn posteriors(&self) -> Result<Vec<AlgebraElement>> {
        self.parts
            .iter()
            .enumerate()
            .map(|(x, f)| {
                let out = f.apply(&self.sigma)?;
                let p = out.trace().re;
                if p < NEGLIGIBLE {
                    return Err(Error::Singular(format!("outcome x={x} has probability {p:.3e}")));
                }
                Ok(out.scale_real(1.0 / p))
            })
            .collect()
    }

    fn marginal(&self) -> Result<LinearMap> {
        let target = self.channel().target().clone();
        LinearMap::partial_trace_channel(&target, Factor::First)
    }

    /// `Ψ: C^X → B ⊗ C^X`.
    pub fn update_map(&self) -> Result<LinearMap> {
        let post = self.posteriors()?;
        let nx = post.len();
        let outcomes = AlgebraShape::classical(nx);
        let target = self.channel().target().clone();
        Ok(LinearMap::from_fn(&outcomes, &target, |d| {
            let mut acc = AlgebraElement::zeros(&target);
            for (x, px) in post.iter().enumerate() {
                let w = d.block(x)[(0, 0)];
                let dx = AlgebraElement::basis(&outcomes, x);
                acc = &acc + &px.tensor(&dx).with_shape(target.clone()).expect("same blocks").scale(w);
            }
            acc
        }))
    }
}

/// Bayesian inverse of `tr_B: B ⊗ C^X → C^X` at `ρ = F(σ)` for one family,
/// with the conditional-expectation identities.
pub fn state_update(s: &InstrumentScenario, family: &SotFamily) -> Result<StateUpdate> {
    let rho = s.joint()?;
    let e = s.marginal()?;
    let psi = s.update_map()?;
    let bayes = solve(family, &e, &rho, SupportMode::Strict)?.map;
    let id = LinearMap::identity(e.target());
    Ok(StateUpdate {
        residual: bayes.distance(&psi),
        conditional_defect: e.compose(&psi)?.distance(&id),
        prior_defect: psi.apply(&e.apply(&rho)?)?.distance(&rho),
        psi,
        bayes,
    })
}

/// Jeffrey update `Σ_x r_x F_x(σ) / tr(F_x(σ))` for a distribution `r` on
/// the outcomes.
pub fn jeffrey_update(s: &InstrumentScenario, r: &[f64]) -> Result<DensityMatrix> {
    if r.len() != s.parts.len() {
        return Err(Error::ShapeMismatch(format!("{} weights for {} outcomes", r.len(), s.parts.len())));
    }
    DensityMatrix::from_probabilities(r)?;
    let post = s.posteriors()?;
    let mut acc = AlgebraElement::zeros(post[0].shape());
    for (w, p) in r.iter().zip(&post) {
        acc = &acc + &p.scale_real(*w);
    }
    DensityMatrix::new(acc.hermitian_part())
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::algebra::C64;

    fn luders(p: &AlgebraElement) -> LinearMap {
        LinearMap::conjugation(p)
    }

    #[test]
    fn luders_update_on_diagonal_state() {
        let s = AlgebraShape::matrix(2);
        let sigma = DensityMatrix::new(AlgebraElement::from_matrix(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            vec![C64::new(0.25, 0.0), C64::new(0.75, 0.0)],
        ))))
        .unwrap();
        let p0 = AlgebraElement::matrix_unit(&s, 0, 0, 0);
        let p1 = AlgebraElement::matrix_unit(&s, 0, 1, 1);
        let inst = InstrumentScenario::new(sigma, vec![luders(&p0), luders(&p1)]).unwrap();
        let up = state_update(&inst, &SotFamily::LeiferSpekkens).unwrap();
        let d0 = AlgebraElement::basis(&AlgebraShape::classical(2), 0);
        let out = up.psi.apply(&d0).unwrap();
        let expect = p0.tensor(&d0);
        assert!(out.distance(&expect) < 1e-15);
        assert!(up.residual < 1e-10);
    }

    #[test]
    fn single_outcome_is_trivial() {
        let s = AlgebraShape::matrix(2);
        let sigma = DensityMatrix::new(AlgebraElement::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.6, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.4, 0.0)],
        )))
        .unwrap();
        let inst = InstrumentScenario::new(sigma.clone(), vec![LinearMap::identity(&s)]).unwrap();
        let up = state_update(&inst, &SotFamily::SymmetricBloom).unwrap();
        let one = AlgebraElement::identity(&AlgebraShape::classical(1));
        assert!(up.psi.apply(&one).unwrap().distance(&sigma.tensor(&one)) < 1e-15);
        assert!(up.residual < 1e-10);
        let j = jeffrey_update(&inst, &[1.0]).unwrap();
        assert!(j.distance(&sigma) < 1e-15);
    }
}
