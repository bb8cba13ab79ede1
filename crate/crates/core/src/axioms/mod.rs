//! Randomized certification of the state-over-time axioms.
//!
//! Every property is reduced to a nonnegative violation of a sampled
//! instance. A cell fails once a violation above [`FAIL_THRESHOLD`] is found
//! (and is then pushed further by perturbation ascent), and holds when every
//! trial stays below [`PASS_THRESHOLD`].

mod search;
mod table;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use search::{block_positivity, product_pairing, BlockPositivity, ProductVectors};
pub use table::{expected_glyph, Cell, Glyph, TableConfig, TableReport, TableRow};

use crate::algebra::{eigh, AlgebraElement, AlgebraShape, DensityMatrix, Factor};
use crate::error::{Error, Result};
use crate::maps::{channel_from_state, channel_state, LinearMap};
use crate::random::{derive_seed, normal, random_shape, rng, ChannelParams, StateParams};
use crate::sot::{
    formula, has_simple_spectrum, marginal_residuals, Branch, ClassicalPairKind, ClassicalPairParams,
    SotFamily,
};

pub const FAIL_THRESHOLD: f64 = 1e-6;
pub const PASS_THRESHOLD: f64 = 1e-8;

/// Axioms of a state-over-time function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Property {
    /// Hermitian.
    P1,
    /// Block positive.
    P2,
    /// Positive.
    P3,
    /// State-linear.
    P4,
    /// Process-linear.
    P5,
    /// Bilinear.
    P6,
    /// Classical limit.
    P7,
    /// Associative.
    A,
    /// Marginals.
    M,
}

impl Property {
    pub const ALL: [Property; 9] = [
        Property::P1,
        Property::P2,
        Property::P3,
        Property::P4,
        Property::P5,
        Property::P6,
        Property::P7,
        Property::A,
        Property::M,
    ];
    /// Columns of the summary table.
    pub const TABLE: [Property; 7] = [
        Property::P1,
        Property::P2,
        Property::P3,
        Property::P4,
        Property::P5,
        Property::P7,
        Property::A,
    ];

    pub fn description(&self) -> &'static str {
        match self {
            Property::P1 => "hermitian",
            Property::P2 => "block positive",
            Property::P3 => "positive",
            Property::P4 => "state-linear",
            Property::P5 => "process-linear",
            Property::P6 => "bilinear",
            Property::P7 => "classical limit",
            Property::A => "associative",
            Property::M => "marginals",
        }
    }

    fn code(&self) -> u64 {
        Property::ALL.iter().position(|p| p == self).expect("listed") as u64
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Property::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown property '{s}'")))
    }
}

/// Sampling and search settings for [`certify`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub trials: usize,
    /// Largest block dimension of sampled algebras.
    pub max_dim: usize,
    pub seed: u64,
    /// Perturbation-ascent steps applied to a violating instance.
    pub ascent_steps: usize,
    /// Starts of the product-vector search for block positivity.
    pub search_starts: usize,
    /// Evaluate associativity of non-state-linear families through the
    /// principal-branch continuation of their formula; otherwise the cell
    /// is inapplicable.
    pub principal_extension: bool,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            max_dim: 3,
            seed: 0x5eed,
            ascent_steps: 50,
            search_starts: 20,
            principal_extension: true,
        }
    }
}

/// A sampled counterexample, with everything needed to replay it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    /// Check that produced the violation (P4 or P5 inside P6).
    pub check: Property,
    pub trial: usize,
    pub ascent_steps: usize,
    pub channels: Vec<LinearMap>,
    pub states: Vec<DensityMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vectors: Option<ProductVectors>,
    pub violation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Outcome {
    Holds { trials: usize, max_residual: f64 },
    Fails { violation: f64, witness: Box<Witness> },
    /// Largest violation between the pass and fail thresholds.
    Inconclusive { trials: usize, max_residual: f64 },
    /// No trials were run.
    Insufficient,
    Inapplicable { reason: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyVerdict {
    pub family: SotFamily,
    pub property: Property,
    pub seed: u64,
    pub outcome: Outcome,
    /// Restriction of the sampled domain, if any.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub qualifier: Option<String>,
}

impl PropertyVerdict {
    pub fn holds(&self) -> bool {
        matches!(self.outcome, Outcome::Holds { .. })
    }

    pub fn fails(&self) -> bool {
        matches!(self.outcome, Outcome::Fails { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match &self.outcome {
            Outcome::Fails { witness, .. } => Some(witness),
            _ => None,
        }
    }
}

/// Sampled instance in parametric form, so that ascent can perturb it.
#[derive(Debug, Clone)]
enum Params {
    General {
        channels: Vec<ChannelParams>,
        states: Vec<StateParams>,
        weight: f64,
    },
    Classical(ClassicalPairParams),
}

/// Realized instance.
#[derive(Debug, Clone)]
struct Instance {
    channels: Vec<LinearMap>,
    states: Vec<DensityMatrix>,
    weight: f64,
}

impl Params {
    fn realize(&self) -> Instance {
        match self {
            Params::General { channels, states, weight } => Instance {
                channels: channels.iter().map(ChannelParams::realize).collect(),
                states: states.iter().map(StateParams::realize).collect(),
                weight: *weight,
            },
            Params::Classical(p) => {
                let pair = p.realize();
                Instance {
                    channels: vec![pair.channel],
                    states: vec![pair.prior],
                    weight: 0.5,
                }
            }
        }
    }

    fn perturb(&self, rng: &mut impl Rng, eps: f64) -> Self {
        match self {
            Params::General { channels, states, weight } => Params::General {
                channels: channels.iter().map(|c| c.perturb(rng, eps)).collect(),
                states: states.iter().map(|s| s.perturb(rng, eps)).collect(),
                weight: (weight + eps * normal(rng)).clamp(0.01, 0.99),
            },
            Params::Classical(p) => Params::Classical(p.perturb(rng, eps)),
        }
    }
}

fn sample(family: &SotFamily, property: Property, max_dim: usize, trial: usize, rng: &mut impl Rng) -> Params {
    let matrix_only = matches!(family, SotFamily::Ohya);
    if property == Property::P7 {
        let kind = ClassicalPairKind::ALL[trial % ClassicalPairKind::ALL.len()];
        // Ohya: only priors without repeated eigenvalues
        for _ in 0..100 {
            let p = ClassicalPairParams::sample(rng, kind, matrix_only);
            if !matrix_only || has_simple_spectrum(&p.realize().prior) {
                return Params::Classical(p);
            }
        }
        return Params::Classical(ClassicalPairParams::sample(rng, kind, matrix_only));
    }
    let a = random_shape(rng, max_dim, matrix_only);
    let b = random_shape(rng, max_dim, matrix_only);
    let weight = rng.gen_range(0.05..0.95);
    let (channels, states) = match property {
        Property::P4 => (
            vec![ChannelParams::sample(rng, &a, &b)],
            vec![StateParams::sample(rng, &a), StateParams::sample(rng, &a)],
        ),
        Property::P5 => (
            vec![ChannelParams::sample(rng, &a, &b), ChannelParams::sample(rng, &a, &b)],
            vec![StateParams::sample(rng, &a)],
        ),
        Property::A => {
            let c = random_shape(rng, max_dim, matrix_only);
            (
                vec![ChannelParams::sample(rng, &a, &b), ChannelParams::sample(rng, &b, &c)],
                vec![StateParams::sample(rng, &a)],
            )
        }
        _ => (vec![ChannelParams::sample(rng, &a, &b)], vec![StateParams::sample(rng, &a)]),
    };
    Params::General { channels, states, weight }
}

fn star(family: &SotFamily, e: &LinearMap, rho: &AlgebraElement) -> Result<AlgebraElement> {
    formula(family, e, rho, Branch::Support)
}

fn lift(x: &AlgebraElement, target: &AlgebraShape) -> AlgebraElement {
    x.tensor(&AlgebraElement::identity(target))
}

/// Residual of the associativity condition for `E: A → B`, `F: B → C`:
/// the state over time of the channel `A → B ⊗ C` whose channel state is
/// `tr(1_A) (F ∘ tr_A) ⋆ (D[E] / tr(1_A))`, against `(F ∘ tr_A) ⋆ (E ⋆ ρ)`,
/// both read on `A ⊗ B ⊗ C`.
///
/// Families that are not state-linear are continued through the principal
/// branch of their powers, since `D[E] / tr(1_A)` is not a state.
pub fn check_associativity(family: &SotFamily, e: &LinearMap, f: &LinearMap, rho: &DensityMatrix) -> Result<f64> {
    if e.target() != f.source() {
        return Err(Error::ShapeMismatch("channels are not composable".into()));
    }
    let a = e.source();
    let ab = AlgebraShape::tensor(a, e.target());
    let g = f.compose(&LinearMap::partial_trace_channel(&ab, Factor::First)?)?;
    let n = a.unit_trace();
    let d = channel_state(e).with_shape(ab.clone())?.scale_real(1.0 / n);
    let joint = formula(family, &g, &d, Branch::Principal)?.scale_real(n);
    let right = joint.shape().reassociate_right()?;
    let m = channel_from_state(&joint.with_shape(right.clone())?)?;
    let lhs = formula(family, &m, rho, Branch::Principal)?;
    let inner = formula(family, e, rho, Branch::Principal)?.with_shape(ab)?;
    let rhs = formula(family, &g, &inner, Branch::Principal)?;
    Ok(lhs.distance(&rhs.with_shape(right)?))
}

struct Eval {
    violation: f64,
    vectors: Option<ProductVectors>,
}

impl From<f64> for Eval {
    fn from(violation: f64) -> Self {
        Eval { violation, vectors: None }
    }
}

fn violation(
    family: &SotFamily,
    property: Property,
    inst: &Instance,
    starts: usize,
    rng: &mut impl Rng,
) -> Result<Eval> {
    let e = &inst.channels[0];
    let rho = &inst.states[0];
    let w = inst.weight;
    Ok(match property {
        Property::P1 => star(family, e, rho)?.hermitian_defect().into(),
        Property::P2 => {
            let t = star(family, e, rho)?;
            let r = block_positivity(&t, starts, PASS_THRESHOLD, rng)?;
            Eval {
                violation: r.violation(),
                vectors: Some(r.witness),
            }
        }
        Property::P3 => {
            let t = star(family, e, rho)?;
            let min = eigh(&t.hermitian_part())?.min();
            t.hermitian_defect().max(-min).max(0.0).into()
        }
        Property::P4 => {
            let r2 = &inst.states[1];
            let mix = DensityMatrix::new((&rho.scale_real(w) + &r2.scale_real(1.0 - w)).hermitian_part())?;
            let lhs = star(family, e, &mix)?;
            let rhs = &star(family, e, rho)?.scale_real(w) + &star(family, e, r2)?.scale_real(1.0 - w);
            lhs.distance(&rhs).into()
        }
        Property::P5 => {
            let e2 = &inst.channels[1];
            let mix = e.affine_combination(e2, crate::algebra::C64::new(w, 0.0))?;
            let lhs = star(family, &mix, rho)?;
            let rhs = &star(family, e, rho)?.scale_real(w) + &star(family, e2, rho)?.scale_real(1.0 - w);
            lhs.distance(&rhs).into()
        }
        Property::P7 => {
            let t = star(family, e, rho)?;
            let classical = &channel_state(e) * &lift(rho, e.target());
            t.distance(&classical).into()
        }
        Property::A => check_associativity(family, e, &inst.channels[1], rho)?.into(),
        Property::M => {
            let t = star(family, e, rho)?;
            let (r1, r2) = marginal_residuals(&t, e, rho)?;
            r1.max(r2).into()
        }
        Property::P6 => unreachable!("bilinearity is split into P4 and P5"),
    })
}

fn family_code(family: &SotFamily) -> u64 {
    // FNV-1a of the compact name: stable across runs and platforms
    family
        .to_string()
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed of one table cell.
pub fn cell_seed(base: u64, family: &SotFamily, property: Property) -> u64 {
    derive_seed(base, &[family_code(family), property.code()])
}

fn qualifier(family: &SotFamily, property: Property) -> Option<String> {
    match (family, property) {
        (SotFamily::Ohya, Property::P7) => Some("priors with non-degenerate spectrum".into()),
        (SotFamily::Ohya, Property::A) => Some("open question; empirical result".into()),
        _ => None,
    }
}

/// Certifies one property of a family by random sampling.
///
/// # Errors
/// Numerical failures of the underlying evaluations. Families that cannot
/// be evaluated on the sampled instances give an inapplicable verdict.
pub fn certify(family: &SotFamily, property: Property, config: &CertifyConfig) -> Result<PropertyVerdict> {
    let seed = cell_seed(config.seed, family, property);
    let verdict = |outcome| PropertyVerdict {
        family: *family,
        property,
        seed,
        outcome,
        qualifier: qualifier(family, property),
    };
    if property == Property::P6 {
        let p4 = certify(family, Property::P4, config)?;
        let p5 = certify(family, Property::P5, config)?;
        let outcome = match (p4.outcome, p5.outcome) {
            (f @ Outcome::Fails { .. }, _) | (_, f @ Outcome::Fails { .. }) => f,
            (Outcome::Holds { trials, max_residual: r4 }, Outcome::Holds { max_residual: r5, .. }) => Outcome::Holds {
                trials,
                max_residual: r4.max(r5),
            },
            (o @ (Outcome::Inapplicable { .. } | Outcome::Insufficient), _)
            | (_, o @ (Outcome::Inapplicable { .. } | Outcome::Insufficient)) => o,
            (Outcome::Inconclusive { trials, max_residual }, _) | (_, Outcome::Inconclusive { trials, max_residual }) => {
                Outcome::Inconclusive { trials, max_residual }
            }
        };
        return Ok(verdict(outcome));
    }
    if config.trials == 0 {
        return Ok(verdict(Outcome::Insufficient));
    }
    if property == Property::A && !family.is_state_linear() && !config.principal_extension {
        return Ok(verdict(Outcome::Inapplicable {
            reason: format!("{family} is not state-linear"),
        }));
    }
    let mut worst: Option<(usize, Params, f64)> = None;
    let mut trials_run = 0;
    for trial in 0..config.trials {
        let mut r = rng(derive_seed(seed, &[trial as u64]));
        let params = sample(family, property, config.max_dim, trial, &mut r);
        let inst = params.realize();
        let v = match violation(family, property, &inst, config.search_starts, &mut r) {
            Ok(v) => v.violation,
            Err(Error::Unsupported(reason)) => return Ok(verdict(Outcome::Inapplicable { reason })),
            Err(e) => return Err(e),
        };
        trials_run += 1;
        if worst.as_ref().is_none_or(|w| v > w.2) {
            worst = Some((trial, params, v));
        }
        if v > FAIL_THRESHOLD {
            break;
        }
    }
    let (trial, params, v) = worst.expect("at least one trial");
    if v < PASS_THRESHOLD {
        return Ok(verdict(Outcome::Holds {
            trials: trials_run,
            max_residual: v,
        }));
    }
    let witness = ascend(family, property, config, seed, trial, params)?;
    if witness.violation > FAIL_THRESHOLD {
        Ok(verdict(Outcome::Fails {
            violation: witness.violation,
            witness: Box::new(witness),
        }))
    } else {
        Ok(verdict(Outcome::Inconclusive {
            trials: trials_run,
            max_residual: witness.violation,
        }))
    }
}

/// Perturbation ascent on the violation, starting from a sampled instance.
fn ascend(
    family: &SotFamily,
    property: Property,
    config: &CertifyConfig,
    seed: u64,
    trial: usize,
    start: Params,
) -> Result<Witness> {
    let mut r = rng(derive_seed(seed, &[trial as u64, u64::MAX]));
    let mut best = start;
    let mut inst = best.realize();
    let mut eval = violation(family, property, &inst, config.search_starts, &mut r)?;
    let mut eps = 0.1;
    for _ in 0..config.ascent_steps {
        let cand = best.perturb(&mut r, eps);
        let cand_inst = cand.realize();
        let ev = violation(family, property, &cand_inst, config.search_starts, &mut r)?;
        if ev.violation > eval.violation {
            best = cand;
            inst = cand_inst;
            eval = ev;
            eps = (eps * 1.5).min(1.0);
        } else {
            eps *= 0.7;
        }
    }
    let uses_weight = matches!(property, Property::P4 | Property::P5);
    Ok(Witness {
        check: property,
        trial,
        ascent_steps: config.ascent_steps,
        channels: inst.channels,
        states: inst.states,
        weight: uses_weight.then_some(inst.weight),
        vectors: eval.vectors,
        violation: eval.violation,
    })
}

/// Re-evaluates the violation of a stored counterexample. For block
/// positivity the stored product vector is paired directly.
pub fn replay(family: &SotFamily, witness: &Witness) -> Result<f64> {
    let inst = Instance {
        channels: witness.channels.clone(),
        states: witness.states.clone(),
        weight: witness.weight.unwrap_or(0.5),
    };
    if witness.check == Property::P2 {
        if let Some(v) = &witness.vectors {
            let t = star(family, &inst.channels[0], &inst.states[0])?;
            let z = product_pairing(&t, v)?;
            return Ok((-z.re).max(z.im.abs()).max(0.0));
        }
    }
    let mut r = rng(0);
    Ok(violation(family, witness.check, &inst, 1, &mut r)?.violation)
}
