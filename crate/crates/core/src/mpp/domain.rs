use rand::Rng;
use serde::{Deserialize, Serialize};

use super::MppError;

/// Axis-aligned box of parametric loads, MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LoadDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, MppError> {
        if lower.len() != upper.len() {
            return Err(MppError::Domain(format!(
                "{} lower bounds but {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(MppError::Domain(format!(
                    "bounds [{lo}, {hi}] at position {i}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[low%, high%]` of a nominal load vector.
    pub fn from_percent(nominal: &[f64], low: f64, high: f64) -> Result<Self, MppError> {
        if !(low > 0.0 && low <= 100.0 && high >= 100.0) {
            return Err(MppError::Domain(format!(
                "percentages must satisfy 0 < low ≤ 100 ≤ high, got {low} and {high}"
            )));
        }
        Self::new(
            nominal.iter().map(|v| v * low / 100.0).collect(),
            nominal.iter().map(|v| v * high / 100.0).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, load: &[f64]) -> bool {
        load.len() == self.dim()
            && load
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&lo, &hi))| {
                    let tol = 1e-9 * lo.abs().max(hi.abs()).max(1.0);
                    x >= lo - tol && x <= hi + tol
                })
    }

    pub fn diagonal(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn clamp(&self, load: &mut [f64]) {
        for (x, (lo, hi)) in load.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *x = x.clamp(*lo, *hi);
        }
    }

    /// Uniform sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
            .collect()
    }
}
