//! Natural cubic-spline disaggregation.

use crate::disagg::AggregationRule;
use crate::error::{Error, Result};
use crate::series::{Frequency, TimeSeries};

/// Monthly series produced by [`spline_disaggregate`], with a per-month
/// flag marking values that lie outside the anchor range and were filled
/// by the boundary polynomial.
#[derive(Debug, Clone)]
pub struct SplineDisagg {
    pub series: TimeSeries,
    pub extrapolated: Vec<bool>,
}

/// Natural cubic spline through the quarterly values, anchored at each
/// quarter's last month and evaluated at every month of the span.
///
/// Under the `sum` rule the anchors carry a third of the quarterly value so
/// that monthly levels are on the right scale; `average` and
/// `last-of-period` anchor the quarterly value itself, so the spline
/// interpolates the input exactly at anchor months.
pub fn spline_disaggregate(q: &TimeSeries, rule: AggregationRule) -> Result<SplineDisagg> {
    if q.frequency != Frequency::Quarterly {
        return Err(Error::Frequency(format!(
            "series '{}' is not quarterly",
            q.id
        )));
    }
    if q.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "series '{}' has {} observations; spline needs at least 3",
            q.id,
            q.len()
        )));
    }
    let scale = match rule {
        AggregationRule::Sum => 1.0 / 3.0,
        _ => 1.0,
    };
    // Anchor x-positions in months relative to the first month of the span.
    // The first quarter's last month sits at offset 2.
    let xs: Vec<f64> = (0..q.len()).map(|i| (2 + 3 * i) as f64).collect();
    let ys: Vec<f64> = q.values.iter().map(|v| v * scale).collect();
    let spline = NaturalCubicSpline::fit(&xs, &ys)?;

    let months = 3 * q.len();
    let first_month = q.start.offset(-2);
    let mut values = Vec::with_capacity(months);
    let mut extrapolated = Vec::with_capacity(months);
    for i in 0..months {
        let x = i as f64;
        values.push(spline.eval(x));
        extrapolated.push(x < xs[0] || x > *xs.last().unwrap());
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "spline produced non-finite value {v} for series '{}'",
            q.id
        )));
    }
    Ok(SplineDisagg {
        series: TimeSeries {
            id: q.id.clone(),
            frequency: Frequency::Monthly,
            unit: q.unit,
            start: first_month,
            values,
        },
        extrapolated,
    })
}

/// Natural cubic spline (zero second derivative at both ends).
pub struct NaturalCubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m2: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n != ys.len() || n < 3 {
            return Err(Error::InsufficientData(
                "spline needs at least 3 knots".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("spline knots must be strictly increasing".into()));
        }
        // Tridiagonal system for interior second derivatives (Thomas algorithm).
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            sub[i] = h0;
            diag[i] = 2.0 * (h0 + h1);
            sup[i] = h1;
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        }
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m2 = vec![0.0; n];
        m2[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m2[i] = (rhs[i] - sup[i] * m2[i + 1]) / diag[i];
        }
        Ok(NaturalCubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m2,
        })
    }

    /// Evaluates the spline; outside the knot range the boundary segment's
    /// cubic polynomial is continued.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        // clamp to the boundary segment for extrapolation
        let seg = match self.xs.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let h = self.xs[seg + 1] - self.xs[seg];
        let a = (self.xs[seg + 1] - x) / h;
        let b = (x - self.xs[seg]) / h;
        a * self.ys[seg]
            + b * self.ys[seg + 1]
            + ((a * a * a - a) * self.m2[seg] + (b * b * b - b) * self.m2[seg + 1]) * h * h / 6.0
    }
}
