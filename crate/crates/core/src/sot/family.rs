use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::{power, power_principal, power_real, AlgebraElement, SupportMode, C64};
use crate::error::{Error, Result};
use crate::maps::LinearMap;

/// How a power of the prior is continued beyond states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Positive semidefinite argument, zero eigenvalues restricted away.
    Support,
    /// Hermitian argument through the principal branch of the logarithm.
    Principal,
}

pub(crate) fn pow(x: &AlgebraElement, r: C64, branch: Branch) -> Result<AlgebraElement> {
    match branch {
        Branch::Support => power(x, r, SupportMode::Lenient),
        Branch::Principal => power_principal(x, r),
    }
}

// x^r with the endpoint exponents taken literally: x^0 = 1 and x^1 = x
fn rs_pow(x: &AlgebraElement, r: f64, branch: Branch) -> Result<AlgebraElement> {
    if r == 0.0 {
        Ok(AlgebraElement::identity(x.shape()))
    } else if r == 1.0 {
        Ok(x.clone())
    } else {
        match branch {
            Branch::Support => power_real(x, r, SupportMode::Lenient),
            Branch::Principal => power_principal(x, C64::new(r, 0.0)),
        }
    }
}

/// State-rendering map `Θ_ρ: A → A` used by Θ-derived states over time and
/// generalized conditional expectations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum StateRenderingMap {
    /// `A ↦ ρA`.
    Right,
    /// `A ↦ Aρ`.
    Left,
    /// `A ↦ ρ^{1/2} A ρ^{1/2}`.
    LeiferSpekkens,
    /// `A ↦ ½{ρ, A}`.
    Jordan,
    /// `A ↦ s ρ^r A ρ^{1-r} + (1-s) ρ^{1-r} A ρ^r`.
    Rs { r: f64, s: f64 },
}

impl StateRenderingMap {
    pub const BUILTIN: [StateRenderingMap; 4] = [
        StateRenderingMap::Right,
        StateRenderingMap::Left,
        StateRenderingMap::LeiferSpekkens,
        StateRenderingMap::Jordan,
    ];

    /// The `(r, s)` pair this map is a special case of.
    pub fn rs(&self) -> (f64, f64) {
        match *self {
            StateRenderingMap::Right => (1.0, 1.0),
            StateRenderingMap::Left => (1.0, 0.0),
            StateRenderingMap::LeiferSpekkens => (0.5, 0.5),
            StateRenderingMap::Jordan => (1.0, 0.5),
            StateRenderingMap::Rs { r, s } => (r, s),
        }
    }

    /// Linear in the state argument.
    pub fn is_state_linear(&self) -> bool {
        let (r, _) = self.rs();
        r == 0.0 || r == 1.0
    }

    /// `Θ_x` as a superoperator on the algebra of `x`.
    pub fn superoperator_with(&self, x: &AlgebraElement, branch: Branch) -> Result<LinearMap> {
        let (r, s) = self.rs();
        let a = rs_pow(x, r, branch)?;
        let b = rs_pow(x, 1.0 - r, branch)?;
        let sc = C64::new(s, 0.0);
        let tc = C64::new(1.0 - s, 0.0);
        Ok(LinearMap::from_fn(x.shape(), x.shape(), |m| {
            let first = &(&a * m) * &b;
            let second = &(&b * m) * &a;
            &first.scale(sc) + &second.scale(tc)
        }))
    }

    /// `Θ_ρ` for a positive semidefinite `ρ`.
    pub fn superoperator(&self, rho: &AlgebraElement) -> Result<LinearMap> {
        self.superoperator_with(rho, Branch::Support)
    }

    /// `Θ_ρ(a)`.
    pub fn apply(&self, rho: &AlgebraElement, a: &AlgebraElement) -> Result<AlgebraElement> {
        self.superoperator(rho)?.apply(a)
    }
}

impl fmt::Display for StateRenderingMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateRenderingMap::Right => write!(f, "right"),
            StateRenderingMap::Left => write!(f, "left"),
            StateRenderingMap::LeiferSpekkens => write!(f, "ls"),
            StateRenderingMap::Jordan => write!(f, "jordan"),
            StateRenderingMap::Rs { r, s } => write!(f, "rs:{r}:{s}"),
        }
    }
}

/// Rule picking the unitary `U_ρ` of a state-twisted family. The unitary
/// must commute with `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnitaryChooser {
    /// `ρ^{it}` on the support of `ρ`, identity off it.
    ModularFlow { t: f64 },
    /// `exp(iθρ)`.
    Exponential { theta: f64 },
}

impl Default for UnitaryChooser {
    fn default() -> Self {
        UnitaryChooser::ModularFlow { t: 1.0 }
    }
}

impl UnitaryChooser {
    pub fn unitary(&self, x: &AlgebraElement, branch: Branch) -> Result<AlgebraElement> {
        match *self {
            UnitaryChooser::ModularFlow { t } => {
                let flow = pow(x, C64::new(0.0, t), branch)?;
                let support = pow(x, C64::new(0.0, 0.0), branch)?;
                let off = &AlgebraElement::identity(x.shape()) - &support;
                Ok(&flow + &off)
            }
            UnitaryChooser::Exponential { theta } => {
                crate::algebra::functional_calculus(x, |l| C64::new(0.0, theta * l).exp())
            }
        }
    }
}

/// A family of states over time `(E, ρ) ↦ E ⋆ ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SotFamily {
    /// `ρ ⊗ E(ρ)`.
    Uncorrelated,
    /// `Σ_α λ_α P_α ⊗ E(P_α / tr P_α)` over the spectral decomposition of
    /// `ρ`; matrix algebras only.
    Ohya,
    /// `(ρ^{1/2} ⊗ 1) D[E] (ρ^{1/2} ⊗ 1)`.
    LeiferSpekkens,
    /// `(ρ^{1/2-it} ⊗ 1) D[E] (ρ^{1/2+it} ⊗ 1)`.
    TRotated { t: f64 },
    /// `(U_ρ^dagger ρ^{1/2} ⊗ 1) D[E] (ρ^{1/2} U_ρ ⊗ 1)`.
    Sth { chooser: UnitaryChooser },
    /// `½{ρ ⊗ 1, D[E]}`.
    SymmetricBloom,
    /// `(ρ ⊗ 1) D[E]`.
    RightBloom,
    /// `D[E] (ρ ⊗ 1)`.
    LeftBloom,
    /// `s (ρ^r ⊗ 1) D[E] (ρ^{1-r} ⊗ 1) + (1-s) (ρ^{1-r} ⊗ 1) D[E] (ρ^r ⊗ 1)`.
    Rs { r: f64, s: f64 },
    /// `(Θ_ρ ⊗ id)(D[E])`.
    ThetaDerived { theta: StateRenderingMap },
}

impl SotFamily {
    /// The eight families compared in the property table, in table order.
    pub fn table_families() -> Vec<SotFamily> {
        vec![
            SotFamily::Uncorrelated,
            SotFamily::Ohya,
            SotFamily::LeiferSpekkens,
            SotFamily::TRotated { t: 0.5 },
            SotFamily::Sth { chooser: UnitaryChooser::default() },
            SotFamily::SymmetricBloom,
            SotFamily::RightBloom,
            SotFamily::LeftBloom,
        ]
    }

    /// Families that reduce to the classical joint distribution on commuting
    /// pairs.
    pub fn classical_limit_families() -> Vec<SotFamily> {
        vec![
            SotFamily::LeiferSpekkens,
            SotFamily::TRotated { t: 0.5 },
            SotFamily::Sth { chooser: UnitaryChooser::default() },
            SotFamily::Sth { chooser: UnitaryChooser::Exponential { theta: 0.8 } },
            SotFamily::SymmetricBloom,
            SotFamily::RightBloom,
            SotFamily::LeftBloom,
            SotFamily::Rs { r: 0.3, s: 0.7 },
            SotFamily::Rs { r: 0.0, s: 0.25 },
            SotFamily::Rs { r: 0.8, s: 0.5 },
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            SotFamily::Uncorrelated => "uncorrelated",
            SotFamily::Ohya => "ohya",
            SotFamily::LeiferSpekkens => "leifer_spekkens",
            SotFamily::TRotated { .. } => "t_rotated",
            SotFamily::Sth { .. } => "sth",
            SotFamily::SymmetricBloom => "symmetric_bloom",
            SotFamily::RightBloom => "right_bloom",
            SotFamily::LeftBloom => "left_bloom",
            SotFamily::Rs { .. } => "rs",
            SotFamily::ThetaDerived { .. } => "theta_derived",
        }
    }

    /// `E ⋆ ρ` is linear in `ρ`.
    pub fn is_state_linear(&self) -> bool {
        match self {
            SotFamily::SymmetricBloom | SotFamily::RightBloom | SotFamily::LeftBloom => true,
            SotFamily::Rs { r, .. } => *r == 0.0 || *r == 1.0,
            SotFamily::ThetaDerived { theta } => theta.is_state_linear(),
            _ => false,
        }
    }

    /// `E ⋆ ρ` is linear in `E`. True for every built-in family.
    pub fn is_process_linear(&self) -> bool {
        true
    }

    /// Only defined on completely positive trace-preserving channels.
    pub fn requires_cptp(&self) -> bool {
        matches!(
            self,
            SotFamily::Uncorrelated
                | SotFamily::Ohya
                | SotFamily::LeiferSpekkens
                | SotFamily::TRotated { .. }
                | SotFamily::Sth { .. }
        )
    }

    /// Reduces to `D[E](ρ ⊗ 1)` whenever the two commute. Ohya only does so
    /// for priors without repeated eigenvalues and is reported as `false`.
    pub fn has_classical_limit(&self) -> bool {
        !matches!(self, SotFamily::Uncorrelated | SotFamily::Ohya)
    }

    /// The state-rendering map if the family is Θ-derived (directly or as
    /// one of the named special cases).
    pub fn theta(&self) -> Option<StateRenderingMap> {
        match *self {
            SotFamily::LeiferSpekkens => Some(StateRenderingMap::LeiferSpekkens),
            SotFamily::SymmetricBloom => Some(StateRenderingMap::Jordan),
            SotFamily::RightBloom => Some(StateRenderingMap::Right),
            SotFamily::LeftBloom => Some(StateRenderingMap::Left),
            SotFamily::Rs { r, s } => Some(StateRenderingMap::Rs { r, s }),
            SotFamily::ThetaDerived { theta } => Some(theta),
            _ => None,
        }
    }
}

impl fmt::Display for SotFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SotFamily::Uncorrelated => write!(f, "uncorrelated"),
            SotFamily::Ohya => write!(f, "ohya"),
            SotFamily::LeiferSpekkens => write!(f, "ls"),
            SotFamily::TRotated { t } => write!(f, "t-rotated:{t}"),
            SotFamily::Sth { chooser: UnitaryChooser::ModularFlow { t } } => write!(f, "sth:{t}"),
            SotFamily::Sth { chooser: UnitaryChooser::Exponential { theta } } => write!(f, "sth-exp:{theta}"),
            SotFamily::SymmetricBloom => write!(f, "symmetric"),
            SotFamily::RightBloom => write!(f, "right"),
            SotFamily::LeftBloom => write!(f, "left"),
            SotFamily::Rs { r, s } => write!(f, "rs:{r}:{s}"),
            SotFamily::ThetaDerived { theta } => write!(f, "theta:{theta}"),
        }
    }
}

fn parse_num(s: Option<&str>, what: &str) -> Result<f64> {
    s.ok_or_else(|| Error::InvalidArgument(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad {what}")))
}

impl FromStr for StateRenderingMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let map = match head {
            "right" | "R" => StateRenderingMap::Right,
            "left" | "L" => StateRenderingMap::Left,
            "ls" | "LS" => StateRenderingMap::LeiferSpekkens,
            "jordan" | "J" => StateRenderingMap::Jordan,
            "rs" => StateRenderingMap::Rs {
                r: parse_num(parts.next(), "r")?,
                s: parse_num(parts.next(), "s")?,
            },
            _ => return Err(Error::InvalidArgument(format!("unknown state-rendering map '{s}'"))),
        };
        if parts.next().is_some() {
            return Err(Error::InvalidArgument(format!("trailing parameters in '{s}'")));
        }
        Ok(map)
    }
}

/// Parses the compact names printed by `Display`, e.g. `symmetric`,
/// `t-rotated:0.3`, `sth-exp:0.8`, `rs:0.3:0.7` or `theta:jordan`.
impl FromStr for SotFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("theta:") {
            return Ok(SotFamily::ThetaDerived { theta: rest.parse()? });
        }
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let fam = match head {
            "uncorrelated" => SotFamily::Uncorrelated,
            "ohya" => SotFamily::Ohya,
            "ls" | "leifer-spekkens" | "leifer_spekkens" => SotFamily::LeiferSpekkens,
            "t-rotated" | "t_rotated" => SotFamily::TRotated {
                t: parts.next().map_or(Ok(0.5), |v| parse_num(Some(v), "t"))?,
            },
            "sth" => SotFamily::Sth {
                chooser: UnitaryChooser::ModularFlow {
                    t: parts.next().map_or(Ok(1.0), |v| parse_num(Some(v), "t"))?,
                },
            },
            "sth-exp" => SotFamily::Sth {
                chooser: UnitaryChooser::Exponential { theta: parse_num(parts.next(), "theta")? },
            },
            "symmetric" | "symmetric_bloom" => SotFamily::SymmetricBloom,
            "right" | "right_bloom" => SotFamily::RightBloom,
            "left" | "left_bloom" => SotFamily::LeftBloom,
            "rs" => SotFamily::Rs {
                r: parse_num(parts.next(), "r")?,
                s: parse_num(parts.next(), "s")?,
            },
            _ => return Err(Error::InvalidArgument(format!("unknown family '{s}'"))),
        };
        if parts.next().is_some() {
            return Err(Error::InvalidArgument(format!("trailing parameters in '{s}'")));
        }
        Ok(fam)
    }
}
