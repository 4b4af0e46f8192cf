//! JSON scenario files: parsing, validation with field paths, and resolution
//! into a ready-to-run [`MarketState`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::dist::{DiscreteDist, MIN_TRUNCATION_QUANTILE};
use crate::equilibrium::{
    run_equilibrium, EquilibriumReport, DEFAULT_MAX_ROUNDS, DEFAULT_TOLERANCE,
};
use crate::error::Error;
use crate::market::{build_market_with, BookSetup, MarketState, RiskId};
use crate::pricing::{InsurerId, InsurerProfile, RiskTolerance};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed or inconsistent content; `path` locates the offending field.
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },

    /// A market hypothesis fails after resolution (no insurers, an empty book).
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),
}

impl ScenarioError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Io { .. } => 1,
            ScenarioError::Invalid { .. } => 3,
            ScenarioError::Hypothesis(_) => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Pmf {
        points: Vec<[f64; 2]>,
    },
    Bernoulli {
        q: f64,
        loss: f64,
    },
    Binomial {
        n: u64,
        q: f64,
        loss: f64,
    },
    #[serde(alias = "truncated-poisson")]
    TruncatedPoisson {
        lambda: f64,
        loss: f64,
        #[serde(default = "default_cutoff")]
        cutoff: f64,
    },
}

impl DistSpec {
    pub fn build(&self) -> Result<DiscreteDist, Error> {
        match *self {
            DistSpec::Pmf { ref points } => {
                DiscreteDist::from_points(points.iter().map(|&[x, p]| (x, p)))
            }
            DistSpec::Bernoulli { q, loss } => DiscreteDist::bernoulli(q, loss),
            DistSpec::Binomial { n, q, loss } => DiscreteDist::binomial(n, q, loss),
            DistSpec::TruncatedPoisson {
                lambda,
                loss,
                cutoff,
            } => DiscreteDist::truncated_poisson(lambda, loss, cutoff),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsurerSpec {
    pub id: String,
    pub rho: f64,
    #[serde(default)]
    pub loading: f64,
    #[serde(default)]
    pub admin_cost: f64,
    /// Risks this insurer does not quote.
    #[serde(default)]
    pub opt_out: Vec<RiskId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuoteSpec {
    pub insurer: String,
    pub premium: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    /// Distributions of `K1` and `K2`, in that order.
    pub risks: Vec<DistSpec>,
    pub insurers: Vec<InsurerSpec>,
    /// Explicit initial books; a listed risk ignores generated quotes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_overrides: Option<BTreeMap<RiskId, Vec<QuoteSpec>>>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub insured_rho: Option<f64>,
}

fn default_cutoff() -> f64 {
    MIN_TRUNCATION_QUANTILE
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_max_rounds() -> u64 {
    DEFAULT_MAX_ROUNDS
}

/// A validated scenario turned into a market plus run settings.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub state: MarketState,
    pub tolerance: f64,
    pub max_rounds: u64,
    pub seed: u64,
    pub insured_rho: Option<RiskTolerance>,
}

impl ResolvedScenario {
    pub fn run(self) -> Result<EquilibriumReport, ScenarioError> {
        run_equilibrium(
            self.state,
            self.tolerance,
            self.max_rounds,
            self.insured_rho,
        )
        .map_err(|e| classify_error("run", e))
    }
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ScenarioError::invalid(path, e.into_inner().to_string())
        })
    }

    pub fn from_value(value: Value) -> Result<Self, ScenarioError> {
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            ScenarioError::invalid(path, e.into_inner().to_string())
        })
    }

    pub fn resolve(&self) -> Result<ResolvedScenario, ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::invalid(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        if self.risks.len() != 2 {
            return Err(ScenarioError::invalid(
                "risks",
                format!("expected exactly 2 risks, found {}", self.risks.len()),
            ));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(ScenarioError::invalid("tolerance", "must be positive"));
        }
        if self.max_rounds == 0 {
            return Err(ScenarioError::invalid("max_rounds", "must be positive"));
        }
        let insured_rho = self
            .insured_rho
            .map(|r| {
                RiskTolerance::new(r)
                    .map_err(|e| ScenarioError::invalid("insured_rho", e.to_string()))
            })
            .transpose()?;

        let mut dists = Vec::with_capacity(2);
        for (i, spec) in self.risks.iter().enumerate() {
            let risk = [RiskId::K1, RiskId::K2][i];
            let d = spec.build().map_err(|e| {
                ScenarioError::invalid(format!("risks[{i}] ({risk})"), e.to_string())
            })?;
            dists.push(d);
        }

        if self.insurers.is_empty() {
            return Err(ScenarioError::Hypothesis(
                "the scenario lists no insurers".into(),
            ));
        }
        let mut ids = BTreeSet::new();
        let mut insurers = Vec::with_capacity(self.insurers.len());
        let mut setup = BookSetup::default();
        for (i, spec) in self.insurers.iter().enumerate() {
            if !ids.insert(spec.id.as_str()) {
                return Err(ScenarioError::invalid(
                    format!("insurers[{i}].id"),
                    format!("duplicate insurer id {:?}", spec.id),
                ));
            }
            let profile = InsurerProfile::new(&spec.id, spec.rho, spec.loading, spec.admin_cost)
                .map_err(|e| ScenarioError::invalid(format!("insurers[{i}]"), e.to_string()))?;
            for &risk in &spec.opt_out {
                setup.opt_outs.insert((profile.id.clone(), risk));
            }
            insurers.push(profile);
        }

        if let Some(overrides) = &self.initial_overrides {
            for (&risk, quotes) in overrides {
                let mut book = Vec::with_capacity(quotes.len());
                for (j, q) in quotes.iter().enumerate() {
                    let path = format!("initial_overrides.{risk}[{j}]");
                    if !ids.contains(q.insurer.as_str()) {
                        return Err(ScenarioError::invalid(
                            path,
                            format!("unknown insurer {:?}", q.insurer),
                        ));
                    }
                    if !(q.premium.is_finite() && q.premium > 0.0) {
                        return Err(ScenarioError::invalid(
                            path,
                            format!("premium {} must be positive", q.premium),
                        ));
                    }
                    book.push((InsurerId::new(&q.insurer), q.premium));
                }
                setup.overrides.insert(risk, book);
            }
        }

        let risk2 = dists.pop().expect("two risks");
        let risk1 = dists.pop().expect("two risks");
        let state = build_market_with(insurers, risk1, risk2, &setup)
            .map_err(|e| classify_error("market", e))?;

        Ok(ResolvedScenario {
            state,
            tolerance: self.tolerance,
            max_rounds: self.max_rounds,
            seed: self.seed,
            insured_rho,
        })
    }

    pub fn run(&self) -> Result<EquilibriumReport, ScenarioError> {
        self.resolve()?.run()
    }
}

fn classify_error(path: &str, e: Error) -> ScenarioError {
    match e {
        Error::HypothesisViolation(msg) => ScenarioError::Hypothesis(msg),
        other => ScenarioError::invalid(path, other.to_string()),
    }
}

pub fn load_scenario_value(path: &Path) -> Result<Value, ScenarioError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| ScenarioError::invalid("$", e.to_string()))
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    Scenario::from_json_str(&read(path)?)
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Replaces the value at a dotted path such as `tolerance` or
/// `insurers.0.loading`; numeric segments index arrays.
pub fn set_param(doc: &mut Value, param: &str, value: Value) -> Result<(), ScenarioError> {
    let mut cursor = doc;
    let segments: Vec<&str> = param.split('.').collect();
    for (depth, seg) in segments.iter().enumerate() {
        let last = depth + 1 == segments.len();
        let here = segments[..=depth].join(".");
        cursor = match cursor {
            Value::Object(map) => {
                if last {
                    map.insert((*seg).to_string(), value);
                    return Ok(());
                }
                map.get_mut(*seg)
                    .ok_or_else(|| ScenarioError::invalid(here, "no such field"))?
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| ScenarioError::invalid(here.clone(), "expected an array index"))?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| {
                    ScenarioError::invalid(here, format!("index out of range (len {len})"))
                })?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(ScenarioError::invalid(here, "cannot descend into a scalar")),
        };
    }
    Err(ScenarioError::invalid(param, "empty parameter path"))
}

/// One sweep point: the substituted value and its run outcome.
#[derive(Debug)]
pub struct SweepPoint {
    pub value: String,
    pub outcome: Result<EquilibriumReport, ScenarioError>,
}

/// Runs the scenario once per value of `param`. Runs are independent and
/// execute in parallel; results come back in input order.
pub fn sweep(base: &Value, param: &str, values: &[String]) -> Vec<SweepPoint> {
    values
        .par_iter()
        .map(|raw| {
            let outcome = (|| {
                let parsed: Value = serde_json::from_str(raw.trim()).map_err(|e| {
                    ScenarioError::invalid(param, format!("bad value {raw:?}: {e}"))
                })?;
                let mut doc = base.clone();
                set_param(&mut doc, param, parsed)?;
                Scenario::from_value(doc)?.run()
            })();
            SweepPoint {
                value: raw.trim().to_string(),
                outcome,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal() -> Value {
        json!({
            "schema_version": 1,
            "risks": [
                {"type": "pmf", "points": [[0.0, 0.9], [1.0, 0.1]]},
                {"type": "bernoulli", "q": 0.2, "loss": 3.0}
            ],
            "insurers": [{"id": "A", "rho": 1.0}]
        })
    }

    #[test]
    fn minimal_scenario_converges_immediately() {
        let s = Scenario::from_value(minimal()).unwrap();
        assert_eq!(s.tolerance, 1e-9);
        assert_eq!(s.max_rounds, 200);
        let report = s.run().unwrap();
        assert!(report.converged);
        assert_eq!(report.rounds_used, 0);
    }

    #[test]
    fn bad_probability_names_the_risk() {
        let mut doc = minimal();
        doc["risks"][0]["points"] = json!([[0.0, 0.8], [1.0, 0.1]]);
        let err = Scenario::from_value(doc).unwrap().resolve().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("risks[0] (K1)"), "{msg}");
        assert!(msg.contains("0.9"), "{msg}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn parse_errors_carry_field_paths() {
        let mut doc = minimal();
        doc["insurers"][0]["rho"] = json!("high");
        let err = Scenario::from_value(doc).unwrap_err();
        assert!(err.to_string().starts_with("insurers[0].rho"), "{err}");

        let mut doc = minimal();
        doc["insurers"][0]["colour"] = json!("red");
        let err = Scenario::from_value(doc).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn empty_book_is_a_hypothesis_violation() {
        let mut doc = minimal();
        doc["insurers"][0]["opt_out"] = json!(["K"]);
        let err = Scenario::from_value(doc).unwrap().resolve().unwrap_err();
        assert!(matches!(err, ScenarioError::Hypothesis(_)));
        assert_eq!(err.exit_code(), 4);

        let mut doc = minimal();
        doc["insurers"] = json!([]);
        let err = Scenario::from_value(doc).unwrap().resolve().unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn overrides_replace_generated_books() {
        let mut doc = minimal();
        doc["initial_overrides"] = json!({
            "K": [{"insurer": "A", "premium": 7.0}],
            "K1": [{"insurer": "A", "premium": 4.0}],
            "K2": [{"insurer": "A", "premium": 4.0}]
        });
        let resolved = Scenario::from_value(doc).unwrap().resolve().unwrap();
        assert_eq!(resolved.state.mispricing().unwrap(), -1.0);
    }

    #[test]
    fn overrides_must_name_known_insurers() {
        let mut doc = minimal();
        doc["initial_overrides"] = json!({"K": [{"insurer": "Z", "premium": 7.0}]});
        let err = Scenario::from_value(doc).unwrap().resolve().unwrap_err();
        assert!(
            err.to_string().starts_with("initial_overrides.K[0]"),
            "{err}"
        );
    }

    #[test]
    fn other_settings_are_validated() {
        for (key, bad) in [
            ("schema_version", json!(2)),
            ("tolerance", json!(0.0)),
            ("max_rounds", json!(0)),
            ("insured_rho", json!(-1.0)),
        ] {
            let mut doc = minimal();
            doc[key] = bad;
            let err = Scenario::from_value(doc).unwrap().resolve().unwrap_err();
            assert!(err.to_string().starts_with(key), "{err}");
        }
    }

    #[test]
    fn parametric_specs_resolve() {
        let mut doc = minimal();
        doc["risks"] = json!([
            {"type": "binomial", "n": 3, "q": 0.25, "loss": 2.0},
            {"type": "truncated-poisson", "lambda": 0.5, "loss": 1.0}
        ]);
        let resolved = Scenario::from_value(doc).unwrap().resolve().unwrap();
        assert_eq!(resolved.state.risk(RiskId::K1).dist.len(), 4);
    }

    #[test]
    fn set_param_walks_objects_and_arrays() {
        let mut doc = minimal();
        set_param(&mut doc, "insurers.0.loading", json!(0.2)).unwrap();
        assert_eq!(doc["insurers"][0]["loading"], json!(0.2));
        set_param(&mut doc, "tolerance", json!(1e-6)).unwrap();
        assert_eq!(doc["tolerance"], json!(1e-6));
        assert!(set_param(&mut doc, "insurers.5.rho", json!(1.0)).is_err());
        assert!(set_param(&mut doc, "schema_version.x", json!(1.0)).is_err());
    }

    #[test]
    fn sweep_preserves_value_order() {
        let values: Vec<String> = ["0.0", "0.1", "0.2", "oops"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let points = sweep(&minimal(), "insurers.0.loading", &values);
        assert_eq!(points.len(), 4);
        assert_eq!(points[1].value, "0.1");
        assert!(points[0].outcome.as_ref().unwrap().converged);
        assert!(points[3].outcome.is_err());
    }
}
