//! Axis-aligned boxes used for state, control and grid domains.

use serde::{Deserialize, Serialize};

use crate::error::ContractError;

/// Closed box `[lower, upper]` in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ContractError> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    /// Box with the same interval on every axis.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self, ContractError> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn validate(&self) -> Result<(), ContractError> {
        if self.lower.len() != self.upper.len() {
            return Err(ContractError::new(format!(
                "box bounds have mismatched dimensions {} and {}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for (k, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(ContractError::new(format!(
                    "empty box on axis {k}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    pub fn clamp_in_place(&self, p: &mut [f64]) {
        for (x, (lo, hi)) in p.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *x = x.clamp(*lo, *hi);
        }
    }

    pub fn clamped(&self, p: &[f64]) -> Vec<f64> {
        let mut out = p.to_vec();
        self.clamp_in_place(&mut out);
        out
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.extent(k)).product()
    }

    /// Length of the main diagonal.
    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.extent(k).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Concatenation `self × other`.
    pub fn product(&self, other: &BoxBounds) -> BoxBounds {
        let mut lower = self.lower.clone();
        lower.extend_from_slice(&other.lower);
        let mut upper = self.upper.clone();
        upper.extend_from_slice(&other.upper);
        BoxBounds { lower, upper }
    }

    /// Nonempty interior on every axis.
    pub fn has_interior(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(lo, hi)| lo < hi)
    }
}
