//! Model configuration documents (JSON).
//!
//! ```json
//! { "family": "ar1",
//!   "params": { "a": [[0.5]] },
//!   "shocks": [ { "dist": "uniform", "low": -1.0, "high": 1.0 } ],
//!   "run": { "seed": 7 } }
//! ```
//!
//! Unknown fields are rejected at every level; errors carry the field path.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::families::{Ar1Params, Family, PiecewiseExpParams, PortfolioParams, Rca1Params, ResourceParams};
use super::shocks::Marginal;
use super::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub v_hi: Vec<f64>,
    pub v_lo: Vec<f64>,
}

/// Optional run settings. Every field mirrors a CLI flag; the flag wins on conflict.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket_a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket_b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_low: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_high: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thinning: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub family: Family,
    pub shocks: Vec<Marginal>,
    pub run: Option<RunSection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    family: String,
    params: Value,
    shocks: Value,
    #[serde(default)]
    run: Option<Value>,
}

#[derive(Serialize)]
struct Echo<'a> {
    #[serde(flatten)]
    family: &'a Family,
    shocks: &'a [Marginal],
    #[serde(skip_serializing_if = "Option::is_none")]
    run: &'a Option<RunSection>,
}

impl Serialize for ModelConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Echo { family: &self.family, shocks: &self.shocks, run: &self.run }.serialize(s)
    }
}

fn parse_at<T: DeserializeOwned>(prefix: &str, value: Value) -> Result<T, ModelError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match inner.as_str() {
            "." => prefix.to_owned(),
            i if i.starts_with('[') => format!("{prefix}{i}"),
            i => format!("{prefix}.{i}"),
        };
        ModelError::Config { path, message: e.into_inner().to_string() }
    })
}

pub const FAMILY_NAMES: [&str; 5] = ["ar1", "rca1", "portfolio", "resource", "piecewise_exp"];

impl ModelConfig {
    pub fn from_parts(family: Family, shocks: Vec<Marginal>) -> Self {
        ModelConfig { family, shocks, run: None }
    }

    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ModelError::Config { path, message: e.into_inner().to_string() }
        })?;
        let family = match raw.family.as_str() {
            "ar1" => Family::Ar1(parse_at::<Ar1Params>("params", raw.params)?),
            "rca1" => Family::Rca1(parse_at::<Rca1Params>("params", raw.params)?),
            "portfolio" => Family::Portfolio(parse_at::<PortfolioParams>("params", raw.params)?),
            "resource" => Family::Resource(parse_at::<ResourceParams>("params", raw.params)?),
            "piecewise_exp" => Family::PiecewiseExp(parse_at::<PiecewiseExpParams>("params", raw.params)?),
            other => {
                return Err(ModelError::Config {
                    path: "family".into(),
                    message: format!("unknown family `{other}`, expected one of {FAMILY_NAMES:?}"),
                })
            }
        };
        let shocks: Vec<Marginal> = parse_at("shocks", raw.shocks)?;
        let run = match raw.run {
            Some(v) => Some(parse_at::<RunSection>("run", v)?),
            None => None,
        };
        Ok(ModelConfig { family, shocks, run })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const AR1: &str = r#"{"family":"ar1","params":{"a":[[0.5]]},
        "shocks":[{"dist":"uniform","low":-1.0,"high":1.0}]}"#;

    #[test]
    fn parses_and_echoes() {
        let cfg = ModelConfig::from_json_str(AR1).unwrap();
        assert_eq!(cfg.family, Family::Ar1(Ar1Params { a: vec![vec![0.5]] }));
        let again = ModelConfig::from_json_str(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn unknown_top_level_field_rejected() {
        let text = AR1.replacen("\"family\"", "\"colour\":1,\"family\"", 1);
        let err = ModelConfig::from_json_str(&text).unwrap_err();
        assert!(matches!(err, ModelError::Config { .. }), "{err}");
    }

    #[test]
    fn error_paths_point_at_the_field() {
        let text = r#"{"family":"ar1","params":{"a":[[0.5]],"b":1},"shocks":[]}"#;
        match ModelConfig::from_json_str(text).unwrap_err() {
            ModelError::Config { path, .. } => assert_eq!(path, "params.b"),
            e => panic!("{e}"),
        }
        let text = r#"{"family":"ar1","params":{"a":[[0.5]]},"shocks":[{"dist":"uniform","low":"x","high":1}]}"#;
        match ModelConfig::from_json_str(text).unwrap_err() {
            ModelError::Config { path, .. } => assert!(path.starts_with("shocks[0]"), "{path}"),
            e => panic!("{e}"),
        }
        let text = r#"{"family":"ar2","params":{},"shocks":[]}"#;
        match ModelConfig::from_json_str(text).unwrap_err() {
            ModelError::Config { path, .. } => assert_eq!(path, "family"),
            e => panic!("{e}"),
        }
        let text = r#"{"family":"ar1","params":{"a":[[0.5]]},"shocks":[],"run":{"sed":1}}"#;
        match ModelConfig::from_json_str(text).unwrap_err() {
            ModelError::Config { path, .. } => assert!(path.starts_with("run"), "{path}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = ModelConfig::from_json_str("{\"family\": ").unwrap_err();
        assert!(matches!(err, ModelError::Config { .. }));
    }
}
