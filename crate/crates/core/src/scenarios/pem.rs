use nalgebra::DMatrix;
use rand::Rng;

use crate::algebra::{spectral_decomposition, AlgebraElement, AlgebraShape, DensityMatrix, SupportMode, C64};
use crate::bayes::petz;
use crate::error::{Error, Result};
use crate::maps::LinearMap;
use crate::random::{random_channel, random_probabilities};
use crate::sot::{evaluate, SotFamily};
use crate::tolerance::Tolerances;

/// Outcomes below this probability are left out of the reverse scenario.
pub const NEGLIGIBLE: f64 = 1e-12;

/// Prepare-evolve-measure: `p` on `C^X`, preparation `C^X → A`, evolution
/// `A → B`, measurement `B → C^Y`.
#[derive(Debug, Clone)]
pub struct PemScenario {
    pub p: Vec<f64>,
    pub prep: LinearMap,
    pub evo: LinearMap,
    pub meas: LinearMap,
}

fn probabilities(a: &AlgebraElement) -> Vec<f64> {
    a.blocks().iter().map(|b| b[(0, 0)].re).collect()
}

impl PemScenario {
    /// # Errors
    /// Non-CPTP stages, stages that do not compose, or a non-commutative
    /// input/output algebra.
    pub fn new(p: Vec<f64>, prep: LinearMap, evo: LinearMap, meas: LinearMap) -> Result<Self> {
        for (name, m) in [("preparation", &prep), ("evolution", &evo), ("measurement", &meas)] {
            if !m.is_cptp() {
                return Err(Error::InvalidArgument(format!("{name} is not CPTP")));
            }
        }
        if !prep.source().is_commutative() || !meas.target().is_commutative() {
            return Err(Error::InvalidShape("preparations start and measurements end in C^n".into()));
        }
        if prep.target() != evo.source() || evo.target() != meas.source() {
            return Err(Error::ShapeMismatch("stages do not compose".into()));
        }
        if p.len() != prep.source().num_blocks() {
            return Err(Error::ShapeMismatch(format!("{} probabilities for {} inputs", p.len(), prep.source().num_blocks())));
        }
        DensityMatrix::from_probabilities(&p)?;
        Ok(Self { p, prep, evo, meas })
    }

    /// Random qubit/qutrit scenario with `nx` inputs and `ny` outcomes.
    pub fn random(rng: &mut impl Rng, nx: usize, n: usize, m: usize, ny: usize) -> Self {
        let p = random_probabilities(rng, nx);
        let prep = random_channel(rng, &AlgebraShape::classical(nx), &AlgebraShape::matrix(n));
        let evo = random_channel(rng, &AlgebraShape::matrix(n), &AlgebraShape::matrix(m));
        let meas = random_channel(rng, &AlgebraShape::matrix(m), &AlgebraShape::classical(ny));
        Self { p, prep, evo, meas }
    }

    /// Preparation and measurement along the eigenbases of `ρ` and
    /// `σ = E(ρ)`, with `p` the spectrum of `ρ`.
    ///
    /// # Errors
    /// Degenerate spectra (the eigenbasis is then not determined).
    pub fn eigenbasis(evo: &LinearMap, rho: &DensityMatrix) -> Result<Self> {
        let sigma = evo.apply(rho)?.hermitian_part();
        let rank_one = |a: &AlgebraElement| -> Result<Vec<(f64, AlgebraElement)>> {
            let comps = spectral_decomposition(a, Tolerances::DEFAULT.eigen_group)?;
            if comps.iter().any(|c| c.multiplicity != 1) {
                return Err(Error::InvalidArgument("eigenbasis scenario needs a non-degenerate spectrum".into()));
            }
            Ok(comps.into_iter().map(|c| (c.eigenvalue, c.projector)).collect())
        };
        let pr = rank_one(rho)?;
        let ms = rank_one(&sigma)?;
        let p: Vec<f64> = pr.iter().map(|(l, _)| *l).collect();
        let states: Vec<DensityMatrix> = pr.into_iter().map(|(_, q)| DensityMatrix::new(q)).collect::<Result<_>>()?;
        let effects: Vec<AlgebraElement> = ms.into_iter().map(|(_, q)| q).collect();
        Self::new(p, LinearMap::ensemble(&states)?, evo.clone(), LinearMap::povm(&effects)?)
    }

    pub fn rho(&self) -> DensityMatrix {
        let p = DensityMatrix::from_probabilities(&self.p).expect("validated");
        DensityMatrix::new(self.prep.apply(&p).expect("shapes").hermitian_part()).expect("CPTP image")
    }

    pub fn sigma(&self) -> DensityMatrix {
        DensityMatrix::new(self.evo.apply(&self.rho()).expect("shapes").hermitian_part()).expect("CPTP image")
    }

    pub fn q(&self) -> Vec<f64> {
        probabilities(&self.meas.apply(&self.sigma()).expect("shapes"))
    }

    /// `f[(y, x)] = P(y | x)` of `M ∘ E ∘ P`.
    pub fn classical_dynamics(&self) -> DMatrix<f64> {
        let f = self.meas.compose(&self.evo).and_then(|m| m.compose(&self.prep)).expect("validated");
        DMatrix::from_fn(f.target().num_blocks(), f.source().num_blocks(), |y, x| f.matrix()[(y, x)].re)
    }

    /// Effects `M_y = M*(δ_y)`.
    pub fn effects(&self) -> Vec<AlgebraElement> {
        let adj = self.meas.adjoint();
        (0..self.meas.target().num_blocks())
            .map(|y| adj.apply(&AlgebraElement::basis(self.meas.target(), y)).expect("shapes"))
            .collect()
    }
}

/// Inferential reverse of a PEM scenario under Petz inversion.
#[derive(Debug, Clone)]
pub struct PemReverse {
    pub q: Vec<f64>,
    /// `M⋆_σ: C^Y → B`.
    pub meas_inv: LinearMap,
    /// `E⋆_ρ: B → A`.
    pub evo_inv: LinearMap,
    /// `P⋆_p: A → C^X`.
    pub prep_inv: LinearMap,
    /// Classical Bayes inverse `g[(x, y)] = f[(y, x)] p_x / q_y`.
    pub g: DMatrix<f64>,
    /// `max |g - P⋆ ∘ E⋆ ∘ M⋆|` over supported outcomes.
    pub diagram_residual: f64,
    /// `max |f_yx p_x - tr((N_x ⊗ M_y)(E ⋆ ρ))|` with `N_x = (P⋆_p)*(δ_x)`.
    pub pairing_residual: f64,
    pub notices: Vec<String>,
}

/// Builds the reverse scenario `(q, M⋆_σ, E⋆_ρ, P⋆_p)` and checks that it
/// reproduces the classical Bayes inverse and the Leifer pairing formula.
///
/// # Errors
/// In strict mode, an input or outcome of negligible probability (named in
/// the error). In lenient mode such outcomes are skipped with a notice.
pub fn pem_reverse(s: &PemScenario, mode: SupportMode) -> Result<PemReverse> {
    let rho = s.rho();
    let sigma = s.sigma();
    let q = s.q();
    let f = s.classical_dynamics();
    let mut notices = Vec::new();
    for (name, probs) in [("input x", &s.p), ("outcome y", &q)] {
        for (k, &v) in probs.iter().enumerate() {
            if v < NEGLIGIBLE {
                if mode == SupportMode::Strict {
                    return Err(Error::Singular(format!("{name}={k} has probability {v:.3e}")));
                }
                notices.push(format!("{name}={k} has probability {v:.3e} and is excluded"));
            }
        }
    }
    let p_state = DensityMatrix::from_probabilities(&s.p)?;
    let prep_inv = petz(&s.prep, &p_state, mode)?;
    let evo_inv = petz(&s.evo, &rho, mode)?;
    let meas_inv = petz(&s.meas, &sigma, mode)?;
    let chain = prep_inv.compose(&evo_inv)?.compose(&meas_inv)?;
    let (nx, ny) = (s.p.len(), q.len());
    let g = DMatrix::from_fn(nx, ny, |x, y| if q[y] < NEGLIGIBLE { 0.0 } else { f[(y, x)] * s.p[x] / q[y] });
    let mut diagram: f64 = 0.0;
    for y in 0..ny {
        if q[y] < NEGLIGIBLE {
            continue;
        }
        for x in 0..nx {
            diagram = diagram.max((chain.matrix()[(x, y)] - C64::new(g[(x, y)], 0.0)).norm());
        }
    }

    // Leifer pairing with the LS state over time of the evolution
    let joint = evaluate(&SotFamily::LeiferSpekkens, &s.evo, &rho)?.value;
    let n_adj = prep_inv.adjoint();
    let effects = s.effects();
    let mut pairing: f64 = 0.0;
    for x in 0..nx {
        if s.p[x] < NEGLIGIBLE {
            continue;
        }
        let nx_eff = n_adj.apply(&AlgebraElement::basis(prep_inv.target(), x))?;
        for (y, my) in effects.iter().enumerate() {
            let v = (&nx_eff.tensor(my) * &joint).trace();
            pairing = pairing.max((v - C64::new(f[(y, x)] * s.p[x], 0.0)).norm());
        }
    }
    Ok(PemReverse {
        q,
        meas_inv,
        evo_inv,
        prep_inv,
        g,
        diagram_residual: diagram,
        pairing_residual: pairing,
        notices,
    })
}

/// `max |⟨k|E(P_i)|k⟩ p_i - ⟨i|E⋆_ρ(M_k)|i⟩ q_k|` for an eigenbasis
/// scenario, together with the defects `||M⋆_σ - M*||` and `||P⋆_p - P*||`.
pub fn eigenbasis_bayes_identity(s: &PemScenario) -> Result<(f64, f64, f64)> {
    let rho = s.rho();
    let sigma = s.sigma();
    let q = s.q();
    let evo_inv = petz(&s.evo, &rho, SupportMode::Strict)?;
    let p_state = DensityMatrix::from_probabilities(&s.p)?;
    let prep_inv = petz(&s.prep, &p_state, SupportMode::Strict)?;
    let meas_inv = petz(&s.meas, &sigma, SupportMode::Strict)?;
    let projectors: Vec<AlgebraElement> = (0..s.p.len())
        .map(|i| s.prep.apply(&AlgebraElement::basis(s.prep.source(), i)))
        .collect::<Result<_>>()?;
    let effects = s.effects();
    let mut worst: f64 = 0.0;
    for (i, pi) in projectors.iter().enumerate() {
        let forward = s.evo.apply(pi)?;
        for (k, mk) in effects.iter().enumerate() {
            let lhs = (mk * &forward).trace() * s.p[i];
            let rhs = (pi * &evo_inv.apply(mk)?).trace() * q[k];
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok((
        worst,
        meas_inv.distance(&s.meas.adjoint()),
        prep_inv.distance(&s.prep.adjoint()),
    ))
}

/// Fuchs posterior of one outcome.
#[derive(Debug, Clone)]
pub struct FuchsPosterior {
    pub outcome: usize,
    pub probability: f64,
    /// `√ρ M_x √ρ / p_x`; `None` when `p_x` is negligible.
    pub state: Option<DensityMatrix>,
}

/// Posterior states `ρ_x = √ρ M_x √ρ / p_x` of a measurement `A → C^X`.
pub fn fuchs_rule(meas: &LinearMap, rho: &DensityMatrix) -> Result<Vec<FuchsPosterior>> {
    if !meas.target().is_commutative() {
        return Err(Error::InvalidShape("measurement must end in C^X".into()));
    }
    let sqrt = crate::algebra::power_real(rho, 0.5, SupportMode::Lenient)?;
    let adj = meas.adjoint();
    (0..meas.target().num_blocks())
        .map(|x| {
            let m = adj.apply(&AlgebraElement::basis(meas.target(), x))?;
            let p = (&m * rho.element()).trace().re;
            let state = if p < NEGLIGIBLE {
                None
            } else {
                Some(DensityMatrix::new((&(&sqrt * &m) * &sqrt).scale_real(1.0 / p).hermitian_part())?)
            };
            Ok(FuchsPosterior {
                outcome: x,
                probability: p,
                state,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_state, rng};

    #[test]
    fn trivial_pem_inverts_to_identity() {
        let id = LinearMap::identity(&AlgebraShape::classical(2));
        let s = PemScenario::new(vec![0.3, 0.7], id.clone(), id.clone(), id).unwrap();
        let r = pem_reverse(&s, SupportMode::Strict).unwrap();
        assert!((r.g.clone() - DMatrix::identity(2, 2)).norm() < 1e-15);
        assert!(r.diagram_residual < 1e-14);
        assert!(r.pairing_residual < 1e-14);
    }

    #[test]
    fn random_pem_commutes() {
        let mut r = rng(41);
        let s = PemScenario::random(&mut r, 3, 2, 3, 2);
        let rev = pem_reverse(&s, SupportMode::Strict).unwrap();
        assert!(rev.diagram_residual < 1e-9);
        assert!(rev.pairing_residual < 1e-9);
        for y in 0..2 {
            let col: f64 = (0..3).map(|x| rev.g[(x, y)]).sum();
            assert!((col - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenbasis_identity() {
        let mut r = rng(42);
        let rho = random_state(&mut r, &AlgebraShape::matrix(3));
        let evo = random_channel(&mut r, &AlgebraShape::matrix(3), &AlgebraShape::matrix(2));
        let s = PemScenario::eigenbasis(&evo, &rho).unwrap();
        assert!(s.rho().distance(&rho) < 1e-12);
        let (bayes, m, p) = eigenbasis_bayes_identity(&s).unwrap();
        assert!(bayes < 1e-10 && m < 1e-10 && p < 1e-10, "{bayes:e} {m:e} {p:e}");
    }

    #[test]
    fn zero_probability_outcome() {
        let id = LinearMap::identity(&AlgebraShape::classical(2));
        let s = PemScenario::new(vec![1.0, 0.0], id.clone(), id.clone(), id).unwrap();
        let err = pem_reverse(&s, SupportMode::Strict).unwrap_err();
        assert!(err.to_string().contains("x=1"));
        let rev = pem_reverse(&s, SupportMode::Lenient).unwrap();
        assert_eq!(rev.notices.len(), 2);
        assert!(rev.diagram_residual < 1e-14);
    }

    #[test]
    fn fuchs_uniform_prior() {
        let s = AlgebraShape::matrix(2);
        let rho = DensityMatrix::maximally_mixed(&s);
        let e0 = AlgebraElement::matrix_unit(&s, 0, 0, 0);
        let e1 = AlgebraElement::matrix_unit(&s, 0, 1, 1);
        let meas = LinearMap::povm(&[e0.clone(), e1.clone()]).unwrap();
        let post = fuchs_rule(&meas, &rho).unwrap();
        assert!(post[0].state.as_ref().unwrap().distance(&e0) < 1e-15);
        assert!(post[1].state.as_ref().unwrap().distance(&e1) < 1e-15);
    }
}
