use crate::algebra::{eigh, AlgebraElement, DensityMatrix};
use crate::error::{Error, Result};
use crate::maps::{channel_state, LinearMap};
use crate::sot::{evaluate_tp, SotFamily};
use crate::tolerance::Tolerances;

/// Errors at one step size.
#[derive(Debug, Clone, Copy)]
pub struct LinearizationStep {
    pub epsilon: f64,
    /// `||LS(ρ0+εA) - LS(ρ0) - ε J(A)||`, quadratic in ε.
    pub remainder: f64,
    /// `remainder(ε) / remainder(ε/2)`, `None` when both vanish.
    pub ratio: Option<f64>,
    /// `||[LS(ρ0+εA) - LS(ρ0)]/ε - J(A)||`, linear in ε.
    pub quotient_error: f64,
    pub quotient_ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LinearizationReport {
    /// `J(A) = ½{A ⊗ 1, D[E]}`, the symmetric bloom extended to `A`.
    pub derivative: AlgebraElement,
    pub steps: Vec<LinearizationStep>,
    /// Largest ε keeping the smallest eigenvalue of `ρ0 + εA` above `10·atol`.
    pub admissible_epsilon: f64,
}

impl LinearizationReport {
    /// True when every remainder ratio lies in `[lo, hi]`, or `A = 0`.
    pub fn quadratic(&self, lo: f64, hi: f64) -> bool {
        self.steps.iter().all(|s| match s.ratio {
            Some(r) => (lo..=hi).contains(&r),
            None => s.remainder == 0.0,
        })
    }
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    (b > 0.0).then(|| a / b)
}

/// Finite-difference check that the Leifer–Spekkens state over time at the
/// maximally mixed state `ρ0` has derivative `J(A)` in the direction of a
/// traceless hermitian `A`. Each ε is compared with ε/2.
///
/// # Errors
/// Non-hermitian or non-traceless `A`, a non-CPTP channel, or an ε that
/// takes `ρ0 + εA` out of the state set.
pub fn ls_linearization_check(e: &LinearMap, a: &AlgebraElement, epsilons: &[f64]) -> Result<LinearizationReport> {
    let tol = Tolerances::DEFAULT;
    if a.shape() != e.source() {
        return Err(Error::ShapeMismatch("direction and channel source differ".into()));
    }
    if a.hermitian_defect() > tol.hermitian {
        return Err(Error::NotHermitian {
            defect: a.hermitian_defect(),
        });
    }
    if a.trace().norm() > tol.atol {
        return Err(Error::InvalidArgument(format!("direction has trace {}, expected 0", a.trace())));
    }
    if !e.is_cptp() {
        return Err(Error::NotCptp);
    }
    let rho0 = DensityMatrix::maximally_mixed(e.source());
    let floor = 10.0 * tol.atol;
    let lowest = eigh(&rho0)?.min();
    let a_min = eigh(&a.hermitian_part())?.min();
    let admissible_epsilon = if a_min < 0.0 {
        (lowest - floor) / -a_min
    } else {
        f64::INFINITY
    };

    let d = channel_state(e);
    let one = AlgebraElement::identity(e.target());
    let derivative = a.tensor(&one).jordan(&d).scale_real(0.5);
    let ls = SotFamily::LeiferSpekkens;
    let base = evaluate_tp(&ls, e, &rho0)?;
    let at = |eps: f64| -> Result<(f64, f64)> {
        let shifted = &*rho0 + &a.scale_real(eps);
        let min = eigh(&shifted)?.min();
        if min <= floor {
            return Err(Error::InvalidArgument(format!(
                "ε = {eps} leaves the state set (smallest eigenvalue {min:.3e})"
            )));
        }
        let moved = evaluate_tp(&ls, e, &DensityMatrix::new(shifted)?)?;
        let diff = &moved - &base;
        let rem = (&diff - &derivative.scale_real(eps)).norm();
        Ok((rem, rem / eps))
    };

    let mut steps = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("step sizes must be positive, got {eps}")));
        }
        let (r1, q1) = at(eps)?;
        let (r2, q2) = at(eps / 2.0)?;
        steps.push(LinearizationStep {
            epsilon: eps,
            remainder: r1,
            ratio: ratio(r1, r2),
            quotient_error: q1,
            quotient_ratio: ratio(q1, q2),
        });
    }
    Ok(LinearizationReport {
        derivative,
        steps,
        admissible_epsilon,
    })
}
