//! Worked scenarios: prepare-evolve-measure reversal, instruments and state
//! update, Jeffrey's rule, two-states and weak values, two-time correlators
//! and the linearization of the Leifer–Spekkens state over time.

mod correlator;
mod instrument;
mod linearization;
mod pem;
mod two_state;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use correlator::{two_time_correlator, Correlator};
pub use instrument::{jeffrey_update, state_update, InstrumentScenario, StateUpdate};
pub use linearization::{ls_linearization_check, LinearizationReport, LinearizationStep};
pub use pem::{eigenbasis_bayes_identity, fuchs_rule, pem_reverse, FuchsPosterior, PemReverse, PemScenario, NEGLIGIBLE};
pub use two_state::{two_state, TwoState, TwoStateEntry, ORTHOGONAL};

use crate::algebra::{AlgebraElement, DensityMatrix, SupportMode, C64};
use crate::error::{Error, Result};
use crate::maps::LinearMap;
use crate::random::rng;
use crate::sot::SotFamily;

/// Step sizes used when a linearization input gives none.
pub const DEFAULT_EPSILONS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPem {
    pub seed: u64,
    #[serde(default = "two")]
    pub inputs: usize,
    #[serde(default = "two")]
    pub dim_in: usize,
    #[serde(default = "two")]
    pub dim_out: usize,
    #[serde(default = "two")]
    pub outcomes: usize,
}

fn two() -> usize {
    2
}

fn default_epsilons() -> Vec<f64> {
    DEFAULT_EPSILONS.to_vec()
}

fn default_update_families() -> Vec<SotFamily> {
    vec![SotFamily::LeiferSpekkens, SotFamily::SymmetricBloom, SotFamily::RightBloom]
}

/// A scenario input document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioSpec {
    /// Explicit stages, or `random` to draw them from a seed.
    Pem {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prep: Option<LinearMap>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        evo: Option<LinearMap>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        meas: Option<LinearMap>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        random: Option<RandomPem>,
        #[serde(default)]
        strict: bool,
    },
    StateUpdate {
        sigma: DensityMatrix,
        parts: Vec<LinearMap>,
        #[serde(default = "default_update_families")]
        families: Vec<SotFamily>,
    },
    Jeffrey {
        sigma: DensityMatrix,
        parts: Vec<LinearMap>,
        r: Vec<f64>,
    },
    TwoState {
        psi: Vec<C64>,
        phis: Vec<Vec<C64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observable: Option<AlgebraElement>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u1: Option<AlgebraElement>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u2: Option<AlgebraElement>,
    },
    Correlator {
        rho: DensityMatrix,
        h: AlgebraElement,
        t: f64,
        a: AlgebraElement,
        b: AlgebraElement,
    },
    LsLinearization {
        channel: LinearMap,
        direction: AlgebraElement,
        #[serde(default = "default_epsilons")]
        epsilons: Vec<f64>,
    },
}

impl ScenarioSpec {
    pub const NAMES: [&'static str; 6] = ["pem", "state-update", "jeffrey", "two-state", "correlator", "ls-linearization"];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioSpec::Pem { .. } => "pem",
            ScenarioSpec::StateUpdate { .. } => "state-update",
            ScenarioSpec::Jeffrey { .. } => "jeffrey",
            ScenarioSpec::TwoState { .. } => "two-state",
            ScenarioSpec::Correlator { .. } => "correlator",
            ScenarioSpec::LsLinearization { .. } => "ls-linearization",
        }
    }
}

/// One numerical check of a scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub requirement: String,
    pub pass: bool,
}

impl Check {
    fn below(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            requirement: format!("< {bound:e}"),
            pass: value < bound,
        }
    }

    fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            requirement: format!("in [{lo}, {hi}]"),
            pass: (lo..=hi).contains(&value),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub checks: Vec<Check>,
    pub values: BTreeMap<String, Value>,
    pub notices: Vec<String>,
}

impl ScenarioReport {
    fn new(name: &str) -> Self {
        Self {
            scenario: name.into(),
            checks: Vec::new(),
            values: BTreeMap::new(),
            notices: Vec::new(),
        }
    }

    fn value(&mut self, key: &str, v: impl Serialize) {
        self.values.insert(key.into(), serde_json::to_value(v).expect("serializable"));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("scenario {}\n", self.scenario);
        for (k, v) in &self.values {
            let _ = writeln!(out, "  {k} = {v}");
        }
        for c in &self.checks {
            let verdict = if c.pass { "ok" } else { "FAILED" };
            let _ = writeln!(out, "  {:<28} {:<12.3e} {:<14} {verdict}", c.name, c.value, c.requirement);
        }
        for n in &self.notices {
            let _ = writeln!(out, "  note: {n}");
        }
        out
    }
}

fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

fn run_pem(
    p: Option<Vec<f64>>,
    prep: Option<LinearMap>,
    evo: Option<LinearMap>,
    meas: Option<LinearMap>,
    random: Option<RandomPem>,
    strict: bool,
) -> Result<ScenarioReport> {
    let s = match (random, p, prep, evo, meas) {
        (Some(r), None, None, None, None) => {
            if [r.inputs, r.dim_in, r.dim_out, r.outcomes].contains(&0) {
                return Err(Error::InvalidArgument("random PEM dimensions must be positive".into()));
            }
            PemScenario::random(&mut rng(r.seed), r.inputs, r.dim_in, r.dim_out, r.outcomes)
        }
        (None, Some(p), Some(prep), Some(evo), Some(meas)) => PemScenario::new(p, prep, evo, meas)?,
        _ => {
            return Err(Error::InvalidArgument(
                "pem takes either `random` or all of `p`, `prep`, `evo`, `meas`".into(),
            ))
        }
    };
    let mode = if strict { SupportMode::Strict } else { SupportMode::Lenient };
    let rev = pem_reverse(&s, mode)?;
    let mut rep = ScenarioReport::new("pem");
    rep.value("p", &s.p);
    rep.value("q", &rev.q);
    let g: Vec<Vec<f64>> = (0..rev.g.nrows()).map(|x| rev.g.row(x).iter().copied().collect()).collect();
    rep.value("g", g);
    rep.checks.push(Check::below("diagram_residual", rev.diagram_residual, 1e-9));
    rep.checks.push(Check::below("pairing_residual", rev.pairing_residual, 1e-9));
    rep.notices = rev.notices;
    Ok(rep)
}

fn run_state_update(sigma: DensityMatrix, parts: Vec<LinearMap>, families: &[SotFamily]) -> Result<ScenarioReport> {
    let inst = InstrumentScenario::new(sigma, parts)?;
    let mut rep = ScenarioReport::new("state-update");
    rep.value("probabilities", inst.outcome_probabilities()?);
    let mut first: Option<LinearMap> = None;
    for fam in families {
        let up = state_update(&inst, fam)?;
        rep.checks.push(Check::below(&format!("{fam} bayes_vs_update"), up.residual, 1e-10));
        if first.is_none() {
            rep.checks.push(Check::below("conditional_defect", up.conditional_defect, 1e-10));
            rep.checks.push(Check::below("prior_defect", up.prior_defect, 1e-10));
            rep.value("update_map", &up.psi);
        }
        match &first {
            None => first = Some(up.bayes),
            Some(f) => rep.checks.push(Check::below(&format!("{fam} family_spread"), f.distance(&up.bayes), 1e-10)),
        }
    }
    Ok(rep)
}

fn run_jeffrey(sigma: DensityMatrix, parts: Vec<LinearMap>, r: &[f64]) -> Result<ScenarioReport> {
    let inst = InstrumentScenario::new(sigma, parts)?;
    let post = jeffrey_update(&inst, r)?;
    let mut rep = ScenarioReport::new("jeffrey");
    rep.value("posterior", &post);
    rep.checks.push(Check::below("trace_defect", (post.trace().re - 1.0).abs(), 1e-10));
    Ok(rep)
}

fn run_two_state(
    psi: &[C64],
    phis: &[Vec<C64>],
    observable: Option<&AlgebraElement>,
    u1: Option<&AlgebraElement>,
    u2: Option<&AlgebraElement>,
) -> Result<ScenarioReport> {
    if observable.is_some_and(|a| !a.shape().is_single_block() || a.shape().block_dim(0) != psi.len()) {
        return Err(Error::ShapeMismatch("observable must act on the pre-selection space".into()));
    }
    let ts = two_state(psi, phis, u1, u2)?;
    let mut rep = ScenarioReport::new("two-state");
    let entries: Vec<Value> = ts
        .entries
        .iter()
        .map(|e| {
            let mut v = json!({
                "outcome": e.outcome,
                "overlap": complex(e.overlap),
                "probability": e.probability,
                "defined": e.is_defined(),
            });
            if let Some(w) = observable.and_then(|a| e.weak_value(a)) {
                v["weak_value"] = complex(w);
            }
            v
        })
        .collect();
    for e in ts.entries.iter().filter(|e| !e.is_defined()) {
        rep.notices.push(format!("post-selection {} is orthogonal to the pre-selection; two-state undefined", e.outcome));
    }
    if ts.complemented {
        rep.notices.push("post-selection effects completed with the complement 1 - Σ|φ⟩⟨φ|".into());
    }
    rep.value("entries", entries);
    rep.checks.push(Check::below("sot_residual", ts.sot_residual, 1e-10));
    rep.checks.push(Check::below("bayes_residual", ts.bayes_residual, 1e-10));
    Ok(rep)
}

fn run_correlator(rho: &DensityMatrix, h: &AlgebraElement, t: f64, a: &AlgebraElement, b: &AlgebraElement) -> Result<ScenarioReport> {
    let c = two_time_correlator(rho, h, t, a, b)?;
    let mut rep = ScenarioReport::new("correlator");
    rep.value("direct", complex(c.direct));
    rep.value("from_sot", complex(c.from_sot));
    rep.checks.push(Check::below("identity_residual", c.residual(), 1e-10));
    Ok(rep)
}

fn run_linearization(channel: &LinearMap, direction: &AlgebraElement, epsilons: &[f64]) -> Result<ScenarioReport> {
    let lin = ls_linearization_check(channel, direction, epsilons)?;
    let mut rep = ScenarioReport::new("ls-linearization");
    rep.value("admissible_epsilon", lin.admissible_epsilon);
    let steps: Vec<Value> = lin
        .steps
        .iter()
        .map(|s| {
            json!({
                "epsilon": s.epsilon,
                "remainder": s.remainder,
                "ratio": s.ratio,
                "quotient_error": s.quotient_error,
                "quotient_ratio": s.quotient_ratio,
            })
        })
        .collect();
    rep.value("steps", steps);
    for s in &lin.steps {
        match s.ratio {
            Some(r) => rep.checks.push(Check::within(&format!("ratio at ε={}", s.epsilon), r, 3.5, 4.5)),
            None => rep.notices.push(format!("remainder vanishes at ε={}", s.epsilon)),
        }
    }
    Ok(rep)
}

/// Runs a scenario and collects its checks.
///
/// # Errors
/// Invalid inputs, or (strict PEM) a zero-probability outcome.
pub fn run(spec: &ScenarioSpec) -> Result<ScenarioReport> {
    match spec.clone() {
        ScenarioSpec::Pem {
            p,
            prep,
            evo,
            meas,
            random,
            strict,
        } => run_pem(p, prep, evo, meas, random, strict),
        ScenarioSpec::StateUpdate { sigma, parts, families } => run_state_update(sigma, parts, &families),
        ScenarioSpec::Jeffrey { sigma, parts, r } => run_jeffrey(sigma, parts, &r),
        ScenarioSpec::TwoState {
            psi,
            phis,
            observable,
            u1,
            u2,
        } => run_two_state(&psi, &phis, observable.as_ref(), u1.as_ref(), u2.as_ref()),
        ScenarioSpec::Correlator { rho, h, t, a, b } => run_correlator(&rho, &h, t, &a, &b),
        ScenarioSpec::LsLinearization {
            channel,
            direction,
            epsilons,
        } => run_linearization(&channel, &direction, &epsilons),
    }
}
