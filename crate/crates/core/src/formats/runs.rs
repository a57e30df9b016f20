//! Multi-seed score container:
//! `{"runs":[{"seed":1,"metrics":{"f1":70.0}}, ...]}`.
//!
//! Values are kept exactly as written; percentages and fractions are both
//! accepted and never rescaled.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScores {
    pub seed: i64,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct RunsFile {
    runs: Vec<RunScores>,
}

pub fn parse_runs_json(text: &str) -> Result<Vec<RunScores>> {
    let file: RunsFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    Ok(file.runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_run() {
        let runs = parse_runs_json(r#"{"runs":[{"seed":1,"metrics":{"f1":70.0}}]}"#).unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].metrics["f1"], 70.0);
    }

    #[test]
    fn empty_and_ordered() {
        assert!(parse_runs_json(r#"{"runs":[]}"#).unwrap().is_empty());
        let runs =
            parse_runs_json(r#"{"runs":[{"seed":2,"metrics":{"f1":0.7}},{"seed":1,"metrics":{"f1":71}}]}"#).unwrap();
        assert_eq!(runs.iter().map(|r| r.seed).collect::<Vec<_>>(), [2, 1]);
        assert_eq!(runs[1].metrics["f1"], 71.0);
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(parse_runs_json(r#"{"seeds":[]}"#), Err(Error::Schema(_))));
        assert!(matches!(parse_runs_json(r#"{"runs":[{"seed":1,"metrics":{"f1":"high"}}]}"#), Err(Error::Schema(_))));
        assert!(matches!(parse_runs_json("{not json"), Err(Error::Schema(_))));
    }
}
