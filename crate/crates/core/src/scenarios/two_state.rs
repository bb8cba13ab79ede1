use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraElement, AlgebraShape, DensityMatrix, SupportMode, C64};
use crate::bayes::{bloom_bayes, BloomSide};
use crate::error::{Error, Result};
use crate::maps::LinearMap;
use crate::sot::{evaluate_tp, SotFamily};

/// Overlaps at or below this magnitude squared leave the two-state undefined.
pub const ORTHOGONAL: f64 = 1e-10;

/// One post-selection outcome.
#[derive(Debug, Clone)]
pub struct TwoStateEntry {
    pub outcome: usize,
    /// `⟨ψ'|φ'_x⟩`.
    pub overlap: C64,
    /// `p_x = |⟨φ'_x|ψ'⟩|²`.
    pub probability: f64,
    /// `|ψ'⟩⟨φ'_x| / ⟨φ'_x|ψ'⟩`, absent when the selections are orthogonal.
    pub state: Option<AlgebraElement>,
}

impl TwoStateEntry {
    pub fn is_defined(&self) -> bool {
        self.state.is_some()
    }

    /// `tr(ρ_x† A) = ⟨ψ'|A|φ'_x⟩ / ⟨ψ'|φ'_x⟩`. Complex in general and not
    /// confined to the spectrum of `A`.
    pub fn weak_value(&self, a: &AlgebraElement) -> Option<C64> {
        self.state.as_ref().map(|s| s.inner(a))
    }
}

#[derive(Debug, Clone)]
pub struct TwoState {
    /// Post-selection vectors, with the complement effect appended when
    /// `Σ |φ_x⟩⟨φ_x| ≠ 1`.
    pub effects: Vec<AlgebraElement>,
    pub complemented: bool,
    pub entries: Vec<TwoStateEntry>,
    /// `||(Ad_{U1} ⊗ id)(E' ⋆ ρ) - ⊕_x ⟨ψ'|φ'_x⟩ |ψ'⟩⟨φ'_x|||` for the right bloom.
    pub sot_residual: f64,
    /// Largest distance between the Bayes-map two-state and `ρ M_x / p_x`.
    pub bayes_residual: f64,
}

fn unit(v: &[C64], what: &str) -> Result<DVector<C64>> {
    let v = DVector::from_column_slice(v);
    let n = v.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("{what} has norm {n}, expected a unit vector")));
    }
    Ok(v)
}

fn unitary(u: Option<&AlgebraElement>, n: usize) -> Result<DMatrix<C64>> {
    match u {
        None => Ok(DMatrix::identity(n, n)),
        Some(u) => {
            if !u.shape().is_single_block() || u.shape().block_dim(0) != n {
                return Err(Error::ShapeMismatch(format!("unitary must act on M_{n}")));
            }
            let m = u.block(0).clone();
            if (&m.adjoint() * &m - DMatrix::<C64>::identity(n, n)).norm() > 1e-9 {
                return Err(Error::InvalidArgument("propagator is not unitary".into()));
            }
            Ok(m)
        }
    }
}

fn ket_bra(a: &DVector<C64>, b: &DVector<C64>) -> AlgebraElement {
    AlgebraElement::from_matrix(a * b.adjoint())
}

/// Pre-selection `ψ` at `t0`, evolution `U1: t0 → t1` and `U2: t1 → t2`,
/// post-selection on `{|φ_x⟩⟨φ_x|}` at `t2`. Two-states are reported at
/// `t1`, from `ψ' = U1 ψ` and `φ'_x = U2† φ_x`.
///
/// # Errors
/// Vectors of different dimension or non-unit norm, non-unitary
/// propagators, or post-selection effects summing past the identity.
pub fn two_state(
    psi: &[C64],
    phis: &[Vec<C64>],
    u1: Option<&AlgebraElement>,
    u2: Option<&AlgebraElement>,
) -> Result<TwoState> {
    let n = psi.len();
    if n == 0 || phis.is_empty() {
        return Err(Error::InvalidArgument("two-state needs a pre-selection and at least one post-selection".into()));
    }
    let psi = unit(psi, "psi")?;
    let phis = phis
        .iter()
        .enumerate()
        .map(|(x, p)| {
            if p.len() != n {
                return Err(Error::ShapeMismatch(format!("phi[{x}] has dimension {}, psi has {n}", p.len())));
            }
            unit(p, &format!("phi[{x}]"))
        })
        .collect::<Result<Vec<_>>>()?;
    let u1 = unitary(u1, n)?;
    let u2 = unitary(u2, n)?;

    let shape = AlgebraShape::matrix(n);
    let mut effects: Vec<AlgebraElement> = phis.iter().map(|p| ket_bra(p, p)).collect();
    let total = effects.iter().fold(AlgebraElement::zeros(&shape), |acc, e| &acc + e);
    let rest = &AlgebraElement::identity(&shape) - &total;
    let complemented = rest.norm() > 1e-12;
    if complemented {
        effects.push(rest);
    }
    let povm = LinearMap::povm(&effects)?;

    // E' = E ∘ Ad_{U2 U1} from t0 to the outcomes
    let w = AlgebraElement::from_matrix(&u2 * &u1);
    let e = povm.compose(&LinearMap::conjugation(&w))?;
    let rho = DensityMatrix::new(ket_bra(&psi, &psi))?;
    let bayes = bloom_bayes(&e, &rho, BloomSide::Right, SupportMode::Lenient)?;

    let psi1 = &u1 * &psi;
    let ad_u1 = LinearMap::conjugation(&AlgebraElement::from_matrix(u1.clone()));
    let outcomes = AlgebraShape::classical(effects.len());
    let sigma = e.apply(&rho)?;
    let mut entries = Vec::with_capacity(phis.len());
    let mut bayes_residual: f64 = 0.0;
    for (x, phi) in phis.iter().enumerate() {
        let phi1 = u2.adjoint() * phi;
        let overlap = psi1.dotc(&phi1);
        let probability = overlap.norm_sqr();
        let state = if probability > ORTHOGONAL {
            let direct = ket_bra(&psi1, &phi1).scale(C64::new(1.0, 0.0) / overlap.conj());
            let from_bayes = ad_u1.apply(&bayes.apply(&AlgebraElement::basis(&outcomes, x))?)?;
            bayes_residual = bayes_residual.max(from_bayes.distance(&direct));
            // ρ M_x / p_x at t0, with M_x the effect pulled back through U2 U1
            let m_x = LinearMap::conjugation(&w.adjoint()).apply(&effects[x])?;
            let px = sigma.block(x)[(0, 0)].re;
            let r: &AlgebraElement = &rho;
            let rm = (r * &m_x).scale_real(1.0 / px);
            bayes_residual = bayes_residual.max(ad_u1.apply(&rm)?.distance(&direct));
            Some(direct)
        } else {
            None
        };
        entries.push(TwoStateEntry {
            outcome: x,
            overlap,
            probability,
            state,
        });
    }

    // (Ad_{U1} ⊗ id)(E' ⋆ ρ) against ⊕_x ⟨ψ'|φ'_x⟩ |ψ'⟩⟨φ'_x|
    let sot = evaluate_tp(&SotFamily::RightBloom, &e, &rho)?;
    let moved = sot.map_blocks(|b| &u1 * b * u1.adjoint());
    let nx = effects.len();
    let expected_blocks = (0..nx)
        .map(|x| {
            let m_x = (&u2 * &u1).adjoint() * effects[x].block(0) * (&u2 * &u1);
            &u1 * (psi.clone() * psi.adjoint()) * m_x * u1.adjoint()
        })
        .collect();
    let expected = AlgebraElement::new(AlgebraShape::tensor(&shape, &outcomes), expected_blocks)?;
    let sot_residual = moved.distance(&expected);

    Ok(TwoState {
        effects,
        complemented,
        entries,
        sot_residual,
        bayes_residual,
    })
}
