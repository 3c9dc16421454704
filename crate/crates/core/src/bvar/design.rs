//! Regression-form design matrices for the VAR.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::series::Panel;

/// Stacked response and lagged-regressor matrices.
///
/// Row `i` of `x` is the concatenation `(Y_{t-1}, ..., Y_{t-p})` for the
/// response in row `i` of `y`.
#[derive(Debug, Clone)]
pub struct VarDesign {
    pub y: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub m: usize,
    pub p: usize,
    pub t_eff: usize,
    /// Precomputed X'X, reused across Gibbs sweeps.
    pub(crate) xtx: DMatrix<f64>,
    /// Precomputed X'Y.
    pub(crate) xty: DMatrix<f64>,
}

impl VarDesign {
    /// Builds the design from a raw `t x m` data matrix.
    pub fn from_matrix(data: &DMatrix<f64>, p: usize) -> Result<Self> {
        let t = data.nrows();
        let m = data.ncols();
        if p < 1 {
            return Err(Error::Input("lag order must be at least 1".into()));
        }
        if m < 1 {
            return Err(Error::Input("data matrix has no columns".into()));
        }
        if t <= p + 1 {
            return Err(Error::InsufficientData(format!(
                "{t} observations cannot support lag order {p}"
            )));
        }
        for c in 0..m {
            let col = data.column(c);
            let mean = col.mean();
            if col.iter().all(|v| (v - mean).abs() < 1e-12) {
                return Err(Error::Input(format!(
                    "column {c} is constant (zero variance); remove it before estimation"
                )));
            }
        }
        let t_eff = t - p;
        let y = DMatrix::from_fn(t_eff, m, |r, c| data[(r + p, c)]);
        let x = DMatrix::from_fn(t_eff, m * p, |r, c| {
            let lag = c / m + 1;
            let var = c % m;
            data[(r + p - lag, var)]
        });
        let xtx = x.transpose() * &x;
        let xty = x.transpose() * &y;
        Ok(VarDesign {
            y,
            x,
            m,
            p,
            t_eff,
            xtx,
            xty,
        })
    }

    /// Design with the likelihood disabled (no observations); the sampler
    /// then draws from the prior.
    pub fn prior_only(m: usize, p: usize) -> Self {
        let k = m * p;
        VarDesign {
            y: DMatrix::zeros(0, m),
            x: DMatrix::zeros(0, k),
            m,
            p,
            t_eff: 0,
            xtx: DMatrix::zeros(k, k),
            xty: DMatrix::zeros(k, m),
        }
    }

    /// Total autoregressive coefficient count `k = m^2 p`.
    pub fn k(&self) -> usize {
        self.m * self.m * self.p
    }

    /// 1-based lag of the coefficient in column `c` of `A`.
    pub fn lag_of_column(&self, c: usize) -> usize {
        c / self.m + 1
    }
}

/// Builds the design from an assembled monthly panel.
pub fn build_design(panel: &Panel, p: usize) -> Result<VarDesign> {
    panel.validate()?;
    VarDesign::from_matrix(&panel.to_matrix(), p)
}
