use nalgebra::DMatrix;

use crate::algebra::{eigh, power, AlgebraElement, DensityMatrix, SupportMode, C64};
use crate::error::{Error, Result};
use crate::maps::LinearMap;
use crate::sot::{Branch, UnitaryChooser};
use crate::tolerance::Tolerances;

fn require_tp(e: &LinearMap) -> Result<()> {
    if e.classification().trace_preserving {
        Ok(())
    } else {
        Err(Error::NotTracePreserving { defect: e.defects().trace })
    }
}

fn require_cptp(e: &LinearMap) -> Result<()> {
    require_tp(e)?;
    if e.is_cptp() {
        Ok(())
    } else {
        Err(Error::NotCptp)
    }
}

fn image(e: &LinearMap, rho: &DensityMatrix) -> Result<AlgebraElement> {
    if rho.shape() != e.source() {
        return Err(Error::ShapeMismatch(format!("prior on {} for channel from {}", rho.shape(), e.source())));
    }
    Ok(e.apply(rho)?.hermitian_part())
}

fn sandwich(left: &AlgebraElement, e_star: &LinearMap, right: &AlgebraElement) -> Result<LinearMap> {
    LinearMap::conjugation(left).compose(&e_star.compose(&LinearMap::conjugation(right))?)
}

/// Petz recovery map `Ad_{ρ^{1/2}} ∘ E* ∘ Ad_{E(ρ)^{-1/2}}`.
///
/// # Errors
/// [`Error::NotCptp`], or [`Error::NotFaithful`] in strict mode when `E(ρ)`
/// has a zero eigenvalue.
pub fn petz(e: &LinearMap, rho: &DensityMatrix, mode: SupportMode) -> Result<LinearMap> {
    rotated_petz(e, rho, 0.0, mode)
}

/// Rotated Petz map `Ad_{ρ^{1/2-it}} ∘ E* ∘ Ad_{E(ρ)^{-1/2-it}}`, the Bayes
/// map of the t-rotated family. Both rotations carry the same sign: the
/// right-hand conjugation has to undo `E(ρ)^{1/2-it}` after the reversal.
pub fn rotated_petz(e: &LinearMap, rho: &DensityMatrix, t: f64, mode: SupportMode) -> Result<LinearMap> {
    require_cptp(e)?;
    let sigma = image(e, rho)?;
    let left = power(rho, C64::new(0.5, -t), SupportMode::Lenient)?;
    let right = power(&sigma, C64::new(-0.5, -t), mode)?;
    sandwich(&left, &e.adjoint(), &right)
}

/// Inverse for state-twisted families,
/// `Ad_{U_ρ† ρ^{1/2}} ∘ E* ∘ Ad_{U_{E(ρ)}† E(ρ)^{-1/2}}`.
pub fn sth_inverse(e: &LinearMap, rho: &DensityMatrix, chooser: &UnitaryChooser, mode: SupportMode) -> Result<LinearMap> {
    require_cptp(e)?;
    let sigma = image(e, rho)?;
    let u_rho = chooser.unitary(rho, Branch::Support)?;
    let u_sigma = chooser.unitary(&sigma, Branch::Support)?;
    let left = &u_rho.adjoint() * &power(rho, C64::new(0.5, 0.0), SupportMode::Lenient)?;
    let right = &u_sigma.adjoint() * &power(&sigma, C64::new(-0.5, 0.0), mode)?;
    sandwich(&left, &e.adjoint(), &right)
}

/// Which bloom a Bayes map inverts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BloomSide {
    /// `B ↦ ρ E*(E(ρ)^{-1} B)`.
    Right,
    /// `B ↦ E*(B E(ρ)^{-1}) ρ`.
    Left,
}

/// Bayes map of the right or left bloom.
///
/// # Errors
/// [`Error::NotTracePreserving`], or [`Error::NotFaithful`] in strict mode.
pub fn bloom_bayes(e: &LinearMap, rho: &DensityMatrix, side: BloomSide, mode: SupportMode) -> Result<LinearMap> {
    require_tp(e)?;
    let sigma = image(e, rho)?;
    let inv = power(&sigma, C64::new(-1.0, 0.0), mode)?;
    let e_star = e.adjoint();
    let r: &AlgebraElement = rho;
    Ok(LinearMap::from_fn(e.target(), e.source(), |b| match side {
        BloomSide::Right => r * &e_star.apply(&(&inv * b)).expect("shapes follow the channel"),
        BloomSide::Left => &e_star.apply(&(b * &inv)).expect("shapes follow the channel") * r,
    }))
}

/// Bayes map of the `(r, s)` family, built in the eigenbasis `{w_k}` of
/// `E(ρ) = Σ q_k |w_k⟩⟨w_k|`:
///
/// `|w_k⟩⟨w_l| ↦ [s ρ^r E*(e_kl) ρ^{1-r} + (1-s) ρ^{1-r} E*(e_kl) ρ^r]
///  / [s q_k^r q_l^{1-r} + (1-s) q_k^{1-r} q_l^r]`.
///
/// # Errors
/// [`Error::NotTracePreserving`]; in strict mode
/// [`Error::SingularDenominator`] for a denominator at or below the
/// faithfulness tolerance. In lenient mode such matrix units map to zero.
pub fn rs_bayes(e: &LinearMap, rho: &DensityMatrix, r: f64, s: f64, mode: SupportMode) -> Result<LinearMap> {
    require_tp(e)?;
    let sigma = image(e, rho)?;
    let sys = eigh(&sigma)?;
    let tol = Tolerances::DEFAULT.faithfulness;
    let q_pow = |q: f64, p: f64| -> f64 {
        if p == 0.0 {
            1.0
        } else if q <= tol {
            0.0
        } else {
            q.powf(p)
        }
    };
    // weights[y][(k, l)] = 1 / denominator, or 0 off the support
    let mut weights = Vec::with_capacity(sys.values.len());
    let mut offset = 0;
    for vals in &sys.values {
        let n = vals.len();
        let mut w = DMatrix::<C64>::zeros(n, n);
        for k in 0..n {
            for l in 0..n {
                let (qk, ql) = (vals[k].max(0.0), vals[l].max(0.0));
                let den = s * q_pow(qk, r) * q_pow(ql, 1.0 - r) + (1.0 - s) * q_pow(qk, 1.0 - r) * q_pow(ql, r);
                if den.abs() <= tol {
                    if mode == SupportMode::Strict {
                        return Err(Error::SingularDenominator {
                            k: offset + k,
                            l: offset + l,
                            value: den,
                        });
                    }
                } else {
                    w[(k, l)] = C64::new(1.0 / den, 0.0);
                }
            }
        }
        offset += n;
        weights.push(w);
    }
    let rr = |p: f64| -> Result<AlgebraElement> {
        if p == 0.0 {
            Ok(AlgebraElement::identity(rho.shape()))
        } else if p == 1.0 {
            Ok(rho.element().clone())
        } else {
            power(rho, C64::new(p, 0.0), SupportMode::Lenient)
        }
    };
    let a = rr(r)?;
    let b = rr(1.0 - r)?;
    let e_star = e.adjoint();
    let (sc, tc) = (C64::new(s, 0.0), C64::new(1.0 - s, 0.0));
    Ok(LinearMap::from_fn(e.target(), e.source(), |m| {
        // coefficients of m in the eigenbasis, reweighted, mapped back
        let blocks = m
            .blocks()
            .iter()
            .zip(&sys.vectors)
            .zip(&weights)
            .map(|((mb, w), wt)| {
                let coeff = w.adjoint() * mb * w;
                w * coeff.component_mul(wt) * w.adjoint()
            })
            .collect();
        let tilde = AlgebraElement::new(m.shape().clone(), blocks).expect("blocks follow the shape");
        let img = e_star.apply(&tilde).expect("shapes follow the channel");
        &(&(&a * &img) * &b).scale(sc) + &(&(&b * &img) * &a).scale(tc)
    }))
}

/// Bayes map of the symmetric bloom,
/// `|w_k⟩⟨w_l| ↦ (q_k + q_l)^{-1} {ρ, E*(|w_k⟩⟨w_l|)}`.
pub fn symmetric_bloom_bayes(e: &LinearMap, rho: &DensityMatrix, mode: SupportMode) -> Result<LinearMap> {
    rs_bayes(e, rho, 1.0, 0.5, mode)
}

/// The state-preserving map `B ↦ tr(B) ρ`, one of the many Bayes maps of
/// the uncorrelated family.
pub fn uncorrelated_bayes(e: &LinearMap, rho: &DensityMatrix) -> Result<LinearMap> {
    require_tp(e)?;
    Ok(LinearMap::replacement(e.target(), rho))
}
