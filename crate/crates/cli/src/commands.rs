use std::fs;

use serde_json::{json, Value};

use qsot_core::axioms::{CertifyConfig, Property, TableConfig, TableReport, PASS_THRESHOLD};
use qsot_core::bayes::{bayes_residual, solve, SupportMode, Uniqueness};
use qsot_core::scenarios::{self, ScenarioSpec};
use qsot_core::sot::evaluate;
use qsot_core::wire::{parse_document, to_json, Document, Payload, SCHEMA_VERSION};
use qsot_core::{DensityMatrix, LinearMap, SotFamily};

use crate::failure::{code, Failure};

/// Result of a command: the text to print and the exit code.
pub struct Outcome {
    pub output: String,
    pub code: u8,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Self { output, code: code::OK }
    }
}

fn read_document(path: &str) -> Result<Document, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    parse_document(&text).map_err(|e| Failure::parse(path, e))
}

fn read_channel(path: &str) -> Result<LinearMap, Failure> {
    match read_document(path)?.payload {
        Payload::Channel { channel } => Ok(channel),
        other => Err(Failure::validation(format!(
            "{path}: expected a channel document, found '{}'",
            Document::new(other).kind()
        ))),
    }
}

fn read_state(path: &str) -> Result<DensityMatrix, Failure> {
    match read_document(path)?.payload {
        Payload::State { state } => Ok(state),
        other => Err(Failure::validation(format!(
            "{path}: expected a state document, found '{}'",
            Document::new(other).kind()
        ))),
    }
}

pub fn parse_family(s: &str) -> Result<SotFamily, Failure> {
    s.parse().map_err(|e| Failure::validation(format!("unknown family '{s}': {e}")))
}

fn emit(value: &Value, out: Option<&str>) -> Result<String, Failure> {
    let text = to_json(value);
    match out {
        Some(path) => {
            fs::write(path, format!("{text}\n")).map_err(|e| Failure::io(path, e))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

pub fn sot(family: &str, channel: &str, state: &str, out: Option<&str>) -> Result<Outcome, Failure> {
    let family = parse_family(family)?;
    let e = read_channel(channel)?;
    let rho = read_state(state)?;
    let s = evaluate(&family, &e, &rho)?;
    let (first, second) = s.marginal_residuals();
    let value = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "sot_result",
        "family": family,
        "value": s.value,
        "marginal_residuals": { "first": first, "second": second },
    });
    Ok(Outcome::ok(emit(&value, out)?))
}

#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn bayes(
    family: &str,
    channel: &str,
    state: &str,
    out: Option<&str>,
    verify: bool,
    lenient: bool,
) -> Result<Outcome, Failure> {
    let family = parse_family(family)?;
    let e = read_channel(channel)?;
    let rho = read_state(state)?;
    let mode = if lenient { SupportMode::Lenient } else { SupportMode::Strict };
    let sol = solve(&family, &e, &rho, mode)?;
    let uniqueness = match &sol.uniqueness {
        Uniqueness::Unique => json!({ "status": "unique" }),
        Uniqueness::NonUnique { nullity, witnesses } => json!({
            "status": "non_unique",
            "nullity": nullity,
            "witnesses": witnesses.len(),
        }),
        Uniqueness::Unknown => json!({ "status": "unknown" }),
    };
    let mut value = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "bayes_result",
        "family": family,
        "method": sol.method,
        "map": sol.map,
        "residual": sol.residual,
        "classification": sol.classification,
        "uniqueness": uniqueness,
    });
    if let Some(p) = &sol.support {
        value["support"] = serde_json::to_value(p).expect("serializable");
    }
    let mut code = code::OK;
    if verify {
        let r = bayes_residual(&family, &e, &rho, &sol.map)?;
        value["verified_residual"] = json!(r);
        if !(r < PASS_THRESHOLD) {
            code = code::NUMERICAL;
        }
    }
    Ok(Outcome {
        output: emit(&value, out)?,
        code,
    })
}

pub struct CertifyArgs {
    pub families: Option<Vec<String>>,
    pub properties: Option<Vec<String>>,
    pub trials: usize,
    pub seed: u64,
    pub max_dim: usize,
    pub json: bool,
    pub expect_paper: bool,
}

pub fn certify(args: &CertifyArgs) -> Result<Outcome, Failure> {
    let mut config = TableConfig::default();
    if let Some(fs) = &args.families {
        config.families = fs.iter().map(|f| parse_family(f)).collect::<Result<_, _>>()?;
    }
    if let Some(ps) = &args.properties {
        config.properties = ps
            .iter()
            .map(|p| p.parse::<Property>().map_err(|e| Failure::validation(format!("unknown property '{p}': {e}"))))
            .collect::<Result<_, _>>()?;
    }
    if args.max_dim == 0 {
        return Err(Failure::validation("--max-dim must be positive"));
    }
    config.certify = CertifyConfig {
        trials: args.trials,
        seed: args.seed,
        max_dim: args.max_dim,
        ..CertifyConfig::default()
    };
    let report = TableReport::run(&config)?;
    let output = if args.json {
        let mut v = serde_json::to_value(&report).expect("serializable");
        v["kind"] = json!("certify_report");
        to_json(&v)
    } else {
        report.render_text()
    };
    let code = if args.expect_paper && !report.matches_expected() {
        code::CHECK_FAILED
    } else {
        code::OK
    };
    Ok(Outcome { output, code })
}

pub fn scenario(name: &str, input: &str, json: bool) -> Result<Outcome, Failure> {
    if !ScenarioSpec::NAMES.contains(&name) {
        return Err(Failure::validation(format!(
            "unknown scenario '{name}' (expected one of {})",
            ScenarioSpec::NAMES.join(", ")
        )));
    }
    let spec = match read_document(input)?.payload {
        Payload::Scenario { scenario } => scenario,
        other => {
            return Err(Failure::validation(format!(
                "{input}: expected a scenario document, found '{}'",
                Document::new(other).kind()
            )))
        }
    };
    if spec.name() != name {
        return Err(Failure::validation(format!("{input} describes scenario '{}', not '{name}'", spec.name())));
    }
    let report = scenarios::run(&spec)?;
    let output = if json {
        let mut v = serde_json::to_value(&report).expect("serializable");
        v["schema_version"] = json!(SCHEMA_VERSION);
        v["kind"] = json!("scenario_result");
        v["passed"] = json!(report.passed());
        to_json(&v)
    } else {
        report.render_text()
    };
    let code = if report.passed() { code::OK } else { code::CHECK_FAILED };
    Ok(Outcome { output, code })
}
