//! Temporal disaggregation of quarterly series to the monthly grid.
//!
//! Two methods are provided: natural cubic-spline interpolation through the
//! quarterly anchors, and Chow-Lin regression-based disaggregation against a
//! monthly indicator with AR(1) residuals and an exact aggregation
//! constraint.

mod chow_lin;
mod spline;

pub use chow_lin::{chow_lin, ChowLinFit, RhoMode};
pub use spline::{spline_disaggregate, SplineDisagg};

use serde::{Deserialize, Serialize};

/// How three monthly values relate to their quarterly aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationRule {
    /// The three months sum to the quarter.
    Sum,
    /// The three months average to the quarter.
    Average,
    /// The third month equals the quarter.
    LastOfPeriod,
}

impl AggregationRule {
    /// Weights applied to the three months of a quarter.
    pub(crate) fn weights(self) -> [f64; 3] {
        match self {
            AggregationRule::Sum => [1.0, 1.0, 1.0],
            AggregationRule::Average => [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            AggregationRule::LastOfPeriod => [0.0, 0.0, 1.0],
        }
    }

    /// Aggregates a monthly slice (length divisible by 3) to quarters.
    pub fn aggregate(self, monthly: &[f64]) -> Vec<f64> {
        let w = self.weights();
        monthly
            .chunks_exact(3)
            .map(|c| w[0] * c[0] + w[1] * c[1] + w[2] * c[2])
            .collect()
    }
}
