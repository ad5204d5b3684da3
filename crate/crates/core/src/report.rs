//! Output documents: JSON envelopes for certificates and Monte Carlo reports, and
//! CSV sample files.
//!
//! Every document carries the tool version, the seed and the config hash. Floats
//! are written in shortest round-trip form, so equal inputs give equal bytes.

use serde::Serialize;
use serde_json::Value;

use crate::model::ModelConfig;
use crate::montecarlo::Trajectory;

pub const TOOL_NAME: &str = "monostab";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo { name: TOOL_NAME, version: TOOL_VERSION }
    }
}

/// Config echo plus its SHA-256.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelEcho {
    pub config: ModelConfig,
    pub hash: String,
}

impl ModelEcho {
    pub fn new(config: ModelConfig) -> Self {
        let hash = config.hash();
        ModelEcho { config, hash }
    }
}

/// Envelope for simulation reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunDocument<T: Serialize> {
    pub tool: ToolInfo,
    pub kind: &'static str,
    pub model: ModelEcho,
    pub seed: u64,
    pub parameters: Value,
    pub passed: bool,
    pub result: T,
}

impl<T: Serialize> RunDocument<T> {
    pub fn new(kind: &'static str, config: ModelConfig, seed: u64, parameters: Value, passed: bool, result: T) -> Self {
        RunDocument { tool: ToolInfo::current(), kind, model: ModelEcho::new(config), seed, parameters, passed, result }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// `rep,step,coord_0,...` with one row per state; `rep` is the trajectory's position.
pub fn trajectories_csv(trajectories: &[Trajectory]) -> String {
    let dim = trajectories.first().map_or(0, |t| t.start.dim());
    let mut out = String::from("rep,step");
    for i in 0..dim {
        out.push_str(&format!(",coord_{i}"));
    }
    out.push('\n');
    for (rep, t) in trajectories.iter().enumerate() {
        for (step, x) in t.states.iter().enumerate() {
            out.push_str(&format!("{rep},{step}"));
            for c in x.iter() {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
    }
    out
}

/// Metadata written next to a CSV file (`<file>.meta.json`).
#[derive(Debug, Clone, Serialize)]
pub struct CsvSidecar {
    pub tool: ToolInfo,
    pub kind: &'static str,
    pub model: ModelEcho,
    pub seed: u64,
    pub parameters: Value,
    pub columns: Vec<String>,
}

impl CsvSidecar {
    pub fn new(kind: &'static str, config: ModelConfig, seed: u64, parameters: Value, dim: usize) -> Self {
        let mut columns = vec!["rep".to_owned(), "step".to_owned()];
        columns.extend((0..dim).map(|i| format!("coord_{i}")));
        CsvSidecar { tool: ToolInfo::current(), kind, model: ModelEcho::new(config), seed, parameters, columns }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::montecarlo::simulate;
    use crate::rng::Streams;
    use crate::{StateVector, TransitionModel};

    #[test]
    fn csv_header_and_rows() {
        let m = TransitionModel::from_config(&presets::ar1()).unwrap();
        let t = simulate(&m, &StateVector::new(vec![0.0]).unwrap(), 2, &Streams::new(1).key("s", 0)).unwrap();
        let csv = trajectories_csv(&[t.clone(), t]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "rep,step,coord_0");
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert_eq!(lines[1], "0,0,0");
        assert!(lines[6].starts_with("1,2,"));
        let value: f64 = lines[2].split(',').nth(2).unwrap().parse().unwrap();
        assert!(value.abs() <= 1.0);
    }

    #[test]
    fn floats_round_trip() {
        let x: f64 = 0.1 + 0.2;
        let text = to_json(&serde_json::json!({ "x": x }));
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["x"].as_f64().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn run_document_embeds_provenance() {
        let doc = RunDocument::new("simulate", presets::ar1(), 9, serde_json::json!({}), true, 1);
        let v: Value = serde_json::from_str(&to_json(&doc)).unwrap();
        assert_eq!(v["seed"], 9);
        assert_eq!(v["tool"]["name"], "monostab");
        assert_eq!(v["model"]["hash"].as_str().unwrap(), presets::ar1().hash());
        assert_eq!(v["model"]["config"]["family"], "ar1");
    }
}
