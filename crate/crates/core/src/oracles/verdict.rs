use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
}

/// Outcome of one verification with the numbers it was decided on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub check: String,
    pub pass: bool,
    pub residuals: Vec<Residual>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl OracleVerdict {
    pub fn new(check: impl Into<String>, pass: bool) -> Self {
        Self {
            check: check.into(),
            pass,
            residuals: Vec::new(),
            witness: None,
            notes: Vec::new(),
        }
    }

    pub fn residual(mut self, name: impl Into<String>, value: f64) -> Self {
        self.residuals.push(Residual {
            name: name.into(),
            value,
        });
        self
    }

    pub fn witness(mut self, w: Vec<f64>) -> Self {
        self.witness = Some(w);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.name == name).map(|r| r.value)
    }
}
