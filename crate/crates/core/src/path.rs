use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};

/// Equidistant observations `X_{1/n}, ..., X_1` of a process on the unit interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    annotations: Vec<(String, String)>,
}

impl Path {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(FractalError::PathTooShort {
                got: values.len(),
                need: 2,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FractalError::InvalidParameter(format!(
                "observation {} is not finite",
                i + 1
            )));
        }
        Ok(Self {
            values,
            annotations: Vec::new(),
        })
    }

    pub(crate) fn from_trusted(values: Vec<f64>) -> Self {
        debug_assert!(values.len() >= 2);
        Self {
            values,
            annotations: Vec::new(),
        }
    }

    pub fn annotate(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.annotations.push((key.into(), value.to_string()));
        self
    }

    pub fn annotations(&self) -> &[(String, String)] {
        &self.annotations
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Applies `x -> scale * x + shift` to every observation.
    pub fn affine(&self, scale: f64, shift: f64) -> Path {
        Path {
            values: self.values.iter().map(|v| scale * v + shift).collect(),
            annotations: self.annotations.clone(),
        }
    }
}

impl TryFrom<Vec<f64>> for Path {
    type Error = FractalError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Path::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_and_nonfinite() {
        assert!(Path::new(vec![1.0]).is_err());
        assert!(Path::new(vec![1.0, f64::NAN]).is_err());
        assert_eq!(Path::new(vec![0.0, 1.0]).unwrap().len(), 2);
    }
}
