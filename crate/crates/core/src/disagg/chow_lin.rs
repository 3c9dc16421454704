//! Chow-Lin regression-based disaggregation with AR(1) residuals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::disagg::AggregationRule;
use crate::error::{Error, Result};
use crate::series::{Frequency, TimeSeries};

/// Relative tolerance on the re-aggregation constraint.
const CONSTRAINT_TOL: f64 = 1e-8;

/// How the AR(1) residual autocorrelation is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoMode {
    Fixed(f64),
    /// Profile log-likelihood maximized over a 199-point grid on
    /// (-0.99, 0.99), refined by golden-section search to 1e-6.
    MaximumLikelihood,
}

#[derive(Debug, Clone)]
pub struct ChowLinFit {
    /// Regression coefficients on the indicator.
    pub beta: Vec<f64>,
    /// AR(1) residual autocorrelation, |rho| < 1.
    pub rho: f64,
    pub loglik: f64,
    pub monthly_estimate: TimeSeries,
}

/// GLS disaggregation of a quarterly series against a monthly indicator.
///
/// The monthly model is `y_m = x_m * beta + u` with stationary AR(1)
/// residuals. The regression runs on quarterly aggregates; the monthly
/// estimate distributes the GLS residuals back so that re-aggregating it
/// under `rule` reproduces the quarterly input exactly.
pub fn chow_lin(
    q: &TimeSeries,
    indicator: &TimeSeries,
    rule: AggregationRule,
    rho_mode: RhoMode,
) -> Result<ChowLinFit> {
    if q.frequency != Frequency::Quarterly {
        return Err(Error::Frequency(format!("series '{}' is not quarterly", q.id)));
    }
    if indicator.frequency != Frequency::Monthly {
        return Err(Error::Frequency(format!(
            "indicator '{}' is not monthly",
            indicator.id
        )));
    }
    let n = q.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "series '{}' has {n} quarters; Chow-Lin needs at least 2",
            q.id
        )));
    }
    let first_month = q.start.offset(-2);
    let last_month = q.end();
    let ind = indicator.slice(first_month, last_month).map_err(|_| {
        Error::Alignment(format!(
            "indicator '{}' does not span {first_month}..{last_month}",
            indicator.id
        ))
    })?;
    let x_m = DVector::from_vec(ind.values.clone());
    let y_q = DVector::from_vec(q.values.clone());
    let weights = rule.weights();

    let fit_at = |rho: f64| fit_fixed_rho(&y_q, &x_m, &weights, rho);

    let (rho, sol) = match rho_mode {
        RhoMode::Fixed(r) => {
            if r.abs() >= 1.0 {
                return Err(Error::Domain(format!("rho {r} outside (-1, 1)")));
            }
            (r, fit_at(r)?)
        }
        RhoMode::MaximumLikelihood => {
            let grid: Vec<f64> = (0..199).map(|i| -0.99 + i as f64 * (1.98 / 198.0)).collect();
            let mut best = (0usize, f64::NEG_INFINITY);
            for (i, &r) in grid.iter().enumerate() {
                let s = fit_at(r)?;
                if s.loglik > best.1 {
                    best = (i, s.loglik);
                }
            }
            let lo = if best.0 == 0 { grid[0] } else { grid[best.0 - 1] };
            let hi = if best.0 == grid.len() - 1 {
                grid[best.0]
            } else {
                grid[best.0 + 1]
            };
            let rho = golden_section_max(lo, hi, 1e-6, |r| {
                fit_at(r).map(|s| s.loglik).unwrap_or(f64::NEG_INFINITY)
            });
            (rho, fit_at(rho)?)
        }
    };

    // exact aggregation by construction; verify anyway
    let agg = rule.aggregate(sol.monthly.as_slice());
    for (a, b) in agg.iter().zip(q.values.iter()) {
        let scale = b.abs().max(1.0);
        if (a - b).abs() > CONSTRAINT_TOL * scale {
            return Err(Error::Consistency(format!(
                "re-aggregation residual {} exceeds {CONSTRAINT_TOL}",
                (a - b).abs()
            )));
        }
    }

    Ok(ChowLinFit {
        beta: sol.beta.as_slice().to_vec(),
        rho,
        loglik: sol.loglik,
        monthly_estimate: TimeSeries {
            id: q.id.clone(),
            frequency: Frequency::Monthly,
            unit: q.unit,
            start: first_month,
            values: sol.monthly.as_slice().to_vec(),
        },
    })
}

struct GlsSolution {
    beta: DVector<f64>,
    monthly: DVector<f64>,
    loglik: f64,
}

/// One GLS solve at a fixed rho.
///
/// `Sigma_q = C V C'` with `V_ij = rho^|i-j| / (1 - rho^2)` (stationary
/// AR(1) covariance up to the innovation variance, which profiles out).
fn fit_fixed_rho(
    y_q: &DVector<f64>,
    x_m: &DVector<f64>,
    weights: &[f64; 3],
    rho: f64,
) -> Result<GlsSolution> {
    let n = y_q.len();
    let months = 3 * n;
    debug_assert_eq!(x_m.len(), months);

    let v = ar1_covariance(months, rho);
    // aggregated indicator and Sigma_q = C V C'
    let x_q = DVector::from_fn(n, |i, _| {
        (0..3).map(|j| weights[j] * x_m[3 * i + j]).sum::<f64>()
    });
    let mut sigma_q = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += weights[i] * weights[j] * v[(3 * a + i, 3 * b + j)];
                }
            }
            sigma_q[(a, b)] = acc;
        }
    }
    let chol = sigma_q
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain(format!("aggregate AR(1) covariance not PD at rho {rho}")))?;
    let siginv_y = chol.solve(y_q);
    let siginv_x = chol.solve(&x_q);
    let xtsx = x_q.dot(&siginv_x);
    if xtsx.abs() < 1e-12 * x_q.norm_squared().max(1e-300) || xtsx <= 0.0 {
        return Err(Error::Collinearity(
            "aggregated indicator has no variation usable for GLS".into(),
        ));
    }
    let beta = x_q.dot(&siginv_y) / xtsx;
    let resid_q = y_q - &x_q * beta;
    let siginv_r = chol.solve(&resid_q);

    // distribute residuals: monthly = x_m*beta + V C' Sigma_q^{-1} resid_q
    let mut distributed = DVector::zeros(months);
    for t in 0..months {
        let mut acc = 0.0;
        for a in 0..n {
            let mut cva = 0.0;
            for j in 0..3 {
                cva += weights[j] * v[(t, 3 * a + j)];
            }
            acc += cva * siginv_r[a];
        }
        distributed[t] = acc;
    }
    let monthly = x_m * beta + distributed;

    let sigma2 = (resid_q.dot(&siginv_r) / n as f64).max(1e-300);
    let logdet: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let loglik = -0.5 * n as f64 * sigma2.ln() - 0.5 * logdet;
    if !loglik.is_finite() {
        return Err(Error::Domain(format!("log-likelihood not finite at rho {rho}")));
    }

    Ok(GlsSolution {
        beta: DVector::from_element(1, beta),
        monthly,
        loglik,
    })
}

fn ar1_covariance(n: usize, rho: f64) -> DMatrix<f64> {
    let scale = 1.0 / (1.0 - rho * rho);
    DMatrix::from_fn(n, n, |i, j| rho.powi((i as i32 - j as i32).abs()) * scale)
}

fn golden_section_max(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{Month, Unit};
    use approx::assert_abs_diff_eq;

    fn quarterly(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new("q", Frequency::Quarterly, Unit::Rate, Month::from_ym(2010, 3), values)
            .unwrap()
    }

    fn monthly(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new("ind", Frequency::Monthly, Unit::Rate, Month::from_ym(2010, 1), values)
            .unwrap()
    }

    #[test]
    fn perfect_indicator_reproduces_itself() {
        // indicator (1..6), quarterly sums (6, 15): GLS at rho 0 fits beta = 1
        // with zero residuals, so the monthly estimate is the indicator.
        let ind = monthly(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let q = quarterly(vec![6.0, 15.0]);
        let fit = chow_lin(&q, &ind, AggregationRule::Sum, RhoMode::Fixed(0.0)).unwrap();
        assert_abs_diff_eq!(fit.beta[0], 1.0, epsilon = 1e-10);
        for (a, b) in fit.monthly_estimate.values.iter().zip(ind.values.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
        }
    }

    #[test]
    fn constant_inputs_give_constant_output() {
        let ind = monthly(vec![2.0; 9]);
        let q = quarterly(vec![5.0, 5.0, 5.0]);
        let fit = chow_lin(&q, &ind, AggregationRule::Average, RhoMode::Fixed(0.5)).unwrap();
        for v in &fit.monthly_estimate.values {
            assert_abs_diff_eq!(*v, 5.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn aggregation_constraint_holds() {
        let ind = monthly((0..12).map(|i| (i as f64 * 0.7).sin() + 2.0).collect());
        let q = quarterly(vec![3.0, -1.0, 4.0, 2.5]);
        for rule in [
            AggregationRule::Sum,
            AggregationRule::Average,
            AggregationRule::LastOfPeriod,
        ] {
            let fit = chow_lin(&q, &ind, rule, RhoMode::MaximumLikelihood).unwrap();
            let agg = rule.aggregate(&fit.monthly_estimate.values);
            for (a, b) in agg.iter().zip(q.values.iter()) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-8);
            }
            assert!(fit.rho.abs() < 1.0);
            assert!(fit.loglik.is_finite());
        }
    }

    #[test]
    fn indicator_must_cover_span() {
        let ind = monthly(vec![1.0; 5]); // one month short of two quarters
        let q = quarterly(vec![1.0, 2.0]);
        assert!(matches!(
            chow_lin(&q, &ind, AggregationRule::Sum, RhoMode::Fixed(0.0)),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn zero_indicator_is_collinear() {
        let ind = monthly(vec![0.0; 6]);
        let q = quarterly(vec![1.0, 2.0]);
        assert!(matches!(
            chow_lin(&q, &ind, AggregationRule::Sum, RhoMode::Fixed(0.0)),
            Err(Error::Collinearity(_))
        ));
    }
}
