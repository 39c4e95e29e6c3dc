//! Versioned JSON files for trained models.

use std::path::Path;

use riskfair_core::models::TrainedModel;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

pub const MODEL_FORMAT: &str = "riskfair-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(model: TrainedModel, seed: u64) -> Self {
        ModelFile { format: MODEL_FORMAT.into(), version: MODEL_VERSION, seed, model }
    }

    pub fn to_json(&self) -> AppResult<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> AppResult<Self> {
        let probe: serde_json::Value = serde_json::from_str(text)?;
        if probe.get("format").and_then(|v| v.as_str()) != Some(MODEL_FORMAT) {
            return Err(AppError::Schema("not a riskfair model file".into()));
        }
        match probe.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(MODEL_VERSION) => {}
            other => return Err(AppError::Schema(format!("unsupported model file version {other:?}"))),
        }
        Ok(serde_json::from_value(probe)?)
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use riskfair_core::models::{fit, ClassifierSpec, Family};
    use riskfair_core::Matrix;

    #[test]
    fn every_family_round_trips() {
        let x = Matrix::from_rows(&[
            vec![-2.0, 0.1],
            vec![-1.5, 0.0],
            vec![1.5, 0.2],
            vec![2.0, -0.1],
            vec![-1.8, 0.3],
            vec![1.9, 0.0],
        ])
        .unwrap();
        let y = [0, 0, 1, 1, 0, 1];
        let names = vec!["a".to_string(), "b".to_string()];
        for family in Family::ALL {
            let spec = match ClassifierSpec::default_for(family) {
                ClassifierSpec::Knn { .. } => ClassifierSpec::Knn { k: 3 },
                s => s,
            };
            let m = fit(&spec, &names, &x, &y, &[1.0; 6], true).unwrap();
            let file = ModelFile::new(m, 42);
            let back = ModelFile::from_json(&file.to_json().unwrap()).unwrap();
            assert_eq!(back, file, "{family:?}");
            assert_eq!(back.model.predict(&x).unwrap(), file.model.predict(&x).unwrap());
        }
    }

    #[test]
    fn wrong_version_is_refused() {
        let text = r#"{"format":"riskfair-model","version":9,"seed":1,"model":null}"#;
        assert!(matches!(ModelFile::from_json(text), Err(AppError::Schema(_))));
    }
}
