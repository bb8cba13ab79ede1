//! Bayes maps: solutions `X: B → A` of `E⋆ρ = τ(~X ⋆ E(ρ))`.

mod closed_form;
mod gce;
mod generic;

pub use closed_form::{
    bloom_bayes, petz, rotated_petz, rs_bayes, sth_inverse, symmetric_bloom_bayes, uncorrelated_bayes, BloomSide,
};
pub use gce::gce_solve;
pub use generic::{bayes_residual, generic_bayes, reversed_state, GenericSolution, Uniqueness, RANK_TOL};

pub use crate::algebra::SupportMode;
pub use crate::sot::StateRenderingMap;

use crate::algebra::{power, AlgebraElement, DensityMatrix, C64};
use crate::error::Result;
use crate::maps::{Classification, LinearMap};
use crate::sot::SotFamily;

/// A Bayes map with its diagnostics.
#[derive(Debug, Clone)]
pub struct BayesSolution {
    pub family: SotFamily,
    pub map: LinearMap,
    /// `||E⋆ρ - τ(~X ⋆ E(ρ))||`.
    pub residual: f64,
    pub classification: Classification,
    pub uniqueness: Uniqueness,
    /// Support projector of `E(ρ)` when it is not faithful.
    pub support: Option<AlgebraElement>,
    /// Name of the routine that produced the map.
    pub method: &'static str,
}

/// Bayes map of `(E, ρ)` for a family, using its closed form where one
/// exists and [`generic_bayes`] otherwise (Ohya).
///
/// Closed forms are reported unique when `E(ρ)` is faithful. The
/// uncorrelated family returns `B ↦ tr(B) ρ` with an explicit second
/// solution.
///
/// # Errors
/// Domain errors of the underlying routine; in strict mode also
/// non-faithful images.
pub fn solve(family: &SotFamily, e: &LinearMap, rho: &DensityMatrix, mode: SupportMode) -> Result<BayesSolution> {
    let sigma = DensityMatrix::new(e.apply(rho)?.hermitian_part())?;
    let faithful = sigma.is_faithful();
    let (map, method, mut uniqueness) = match family {
        SotFamily::LeiferSpekkens => (petz(e, rho, mode)?, "petz", Uniqueness::Unknown),
        SotFamily::TRotated { t } => (rotated_petz(e, rho, *t, mode)?, "rotated_petz", Uniqueness::Unknown),
        SotFamily::Sth { chooser } => (sth_inverse(e, rho, chooser, mode)?, "sth_inverse", Uniqueness::Unknown),
        SotFamily::SymmetricBloom => (symmetric_bloom_bayes(e, rho, mode)?, "symmetric_bloom", Uniqueness::Unknown),
        SotFamily::RightBloom => (bloom_bayes(e, rho, BloomSide::Right, mode)?, "right_bloom", Uniqueness::Unknown),
        SotFamily::LeftBloom => (bloom_bayes(e, rho, BloomSide::Left, mode)?, "left_bloom", Uniqueness::Unknown),
        SotFamily::Rs { r, s } => (rs_bayes(e, rho, *r, *s, mode)?, "rs", Uniqueness::Unknown),
        SotFamily::ThetaDerived { theta } => (gce_solve(theta, e, rho)?, "gce", Uniqueness::Unknown),
        SotFamily::Uncorrelated => {
            let map = uncorrelated_bayes(e, rho)?;
            // the Petz map of (E, ρ) also preserves the prior when E(ρ) is faithful
            let uniqueness = match petz(e, rho, SupportMode::Lenient) {
                Ok(other) if other.distance(&map) > 1e-6 => Uniqueness::NonUnique {
                    nullity: 0,
                    witnesses: vec![map.clone(), other],
                },
                _ => Uniqueness::Unknown,
            };
            (map, "state_preserving", uniqueness)
        }
        SotFamily::Ohya => {
            let g = generic_bayes(family, e, rho)?;
            (g.map, "generic", g.uniqueness)
        }
    };
    if matches!(uniqueness, Uniqueness::Unknown) && faithful && !matches!(family, SotFamily::Uncorrelated) {
        uniqueness = Uniqueness::Unique;
    }
    if let (SotFamily::Uncorrelated, Uniqueness::NonUnique { nullity, .. }) = (family, &mut uniqueness) {
        let generic = generic_bayes(family, e, rho)?;
        if let Uniqueness::NonUnique { nullity: n, .. } = generic.uniqueness {
            *nullity = n;
        }
    }
    let residual = bayes_residual(family, e, rho, &map)?;
    let support = if faithful {
        None
    } else {
        Some(power(&sigma, C64::new(0.0, 0.0), SupportMode::Lenient)?)
    };
    Ok(BayesSolution {
        family: *family,
        classification: map.classification(),
        map,
        residual,
        uniqueness,
        support,
        method,
    })
}

/// The four conditions that single out a bloom Bayes map which is also the
/// Petz map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BloomEquivalences {
    /// The right-bloom Bayes map is †-preserving.
    pub dagger_preserving: bool,
    /// `||ρE*(E(ρ)^{-1}B) - E*(B E(ρ)^{-1})ρ||` (right minus left map).
    pub sides_defect: f64,
    /// The right-bloom Bayes map is completely positive.
    pub completely_positive: bool,
    /// `max_t ||Ad_{E(ρ)^{it}} ∘ E - E ∘ Ad_{ρ^{it}}||` over sampled `t`.
    pub covariance_defect: f64,
    /// Distance from the right-bloom Bayes map to the Petz map.
    pub petz_distance: f64,
}

impl BloomEquivalences {
    /// All four conditions hold to `tol`.
    pub fn all_hold(&self, tol: f64) -> bool {
        self.dagger_preserving && self.completely_positive && self.sides_defect <= tol && self.covariance_defect <= tol
    }

    /// All four conditions fail.
    pub fn none_hold(&self, tol: f64) -> bool {
        !self.dagger_preserving && !self.completely_positive && self.sides_defect > tol && self.covariance_defect > tol
    }
}

/// Evaluates the equivalent conditions for the bloom Bayes maps of a CPTP
/// `E` and faithful `ρ`, `E(ρ)`.
pub fn bloom_equivalences(e: &LinearMap, rho: &DensityMatrix) -> Result<BloomEquivalences> {
    let right = bloom_bayes(e, rho, BloomSide::Right, SupportMode::Strict)?;
    let left = bloom_bayes(e, rho, BloomSide::Left, SupportMode::Strict)?;
    let p = petz(e, rho, SupportMode::Strict)?;
    let sigma = e.apply(rho)?.hermitian_part();
    let mut cov: f64 = 0.0;
    for t in [-1.0, -0.37, -0.1, 0.1, 0.37, 1.0] {
        let us = LinearMap::conjugation(&power(&sigma, C64::new(0.0, t), SupportMode::Strict)?);
        let ur = LinearMap::conjugation(&power(rho, C64::new(0.0, t), SupportMode::Strict)?);
        cov = cov.max(us.compose(e)?.distance(&e.compose(&ur)?));
    }
    let c = right.classification();
    Ok(BloomEquivalences {
        dagger_preserving: c.dagger_preserving,
        sides_defect: right.distance(&left),
        completely_positive: c.completely_positive,
        covariance_defect: cov,
        petz_distance: right.distance(&p),
    })
}
