//! One MCMC state of the sampler.

use nalgebra::{DMatrix, DVector};

use crate::bvar::design::VarDesign;
use crate::error::{Error, Result};

/// Full sampler state: coefficients, covariance factorization, shrinkage
/// scales, and the reduced-form residuals implied by the coefficients.
#[derive(Debug, Clone)]
pub struct DrawState {
    /// `m x mp` coefficient matrix.
    pub a: DMatrix<f64>,
    /// Free elements of the unit-lower-triangular `H`, stored per row as
    /// the triangular regression coefficients `g_ij = -H_ij` (row `i`
    /// holds `i` entries for columns `0..i`).
    pub h_free: Vec<Vec<f64>>,
    /// Structural variances `s_1..s_m`.
    pub s: DVector<f64>,
    /// Local scales for the autoregressive coefficients, aligned with `a`.
    pub psi: DMatrix<f64>,
    /// Local scales for the covariance free elements, aligned with `h_free`.
    pub psi_cov: Vec<Vec<f64>>,
    /// Lag multipliers for the global shrinkage factors.
    pub zeta: Vec<f64>,
    /// Single global multiplier for the covariance free elements.
    pub zeta_cov: f64,
    /// Reduced-form residuals `Y - X A'`, `t_eff x m`.
    pub residuals: DMatrix<f64>,
}

impl DrawState {
    /// Neutral starting point: zero coefficients, identity `H`, unit
    /// scales; `s` from an equation-wise ridge pre-fit.
    pub fn initial(design: &VarDesign) -> Self {
        let m = design.m;
        let k_cols = design.m * design.p;
        let s = ridge_residual_variances(design);
        DrawState {
            a: DMatrix::zeros(m, k_cols),
            h_free: (0..m).map(|i| vec![0.0; i]).collect(),
            s,
            psi: DMatrix::from_element(m, k_cols, 1.0),
            psi_cov: (0..m).map(|i| vec![1.0; i]).collect(),
            zeta: vec![1.0; design.p],
            zeta_cov: 1.0,
            residuals: design.y.clone(),
        }
    }

    /// Unit lower triangular `H` (note `H_ij = -g_ij`).
    pub fn h_matrix(&self) -> DMatrix<f64> {
        let m = self.s.len();
        let mut h = DMatrix::identity(m, m);
        for (i, row) in self.h_free.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                h[(i, j)] = -g;
            }
        }
        h
    }

    /// Reconstructs `Sigma = H^{-1} S (H^{-1})'`.
    pub fn sigma(&self) -> DMatrix<f64> {
        let m = self.s.len();
        let h = self.h_matrix();
        let mut h_inv = DMatrix::identity(m, m);
        // forward substitution column by column
        for c in 0..m {
            for r in 0..m {
                let mut v = if r == c { 1.0 } else { 0.0 };
                for j in 0..r {
                    v -= h[(r, j)] * h_inv[(j, c)];
                }
                h_inv[(r, c)] = v;
            }
        }
        let s_diag = DMatrix::from_diagonal(&self.s);
        &h_inv * s_diag * h_inv.transpose()
    }

    pub fn validate(&self) -> Result<()> {
        let positive_finite = |v: f64| v.is_finite() && v > 0.0;
        if !self.s.iter().copied().all(positive_finite)
            || !self.psi.iter().copied().all(positive_finite)
            || !self.zeta.iter().copied().all(positive_finite)
            || !positive_finite(self.zeta_cov)
            || !self
                .psi_cov
                .iter()
                .flat_map(|r| r.iter())
                .copied()
                .all(positive_finite)
        {
            return Err(Error::Domain(
                "scales and variances must be strictly positive and finite".into(),
            ));
        }
        if self.a.iter().any(|v| !v.is_finite())
            || self
                .h_free
                .iter()
                .flat_map(|r| r.iter())
                .any(|v| !v.is_finite())
        {
            return Err(Error::Domain("non-finite coefficients in draw state".into()));
        }
        Ok(())
    }
}

/// Equation-wise residual variance from a ridge pre-fit; a data-informed
/// variance start keeps early sweeps well conditioned when k >> t.
fn ridge_residual_variances(design: &VarDesign) -> DVector<f64> {
    let m = design.m;
    if design.t_eff == 0 {
        return DVector::from_element(m, 1.0);
    }
    let k_cols = design.x.ncols();
    let kappa = 0.1 * design.xtx.diagonal().mean().max(1e-8);
    let mut penalized = design.xtx.clone();
    for i in 0..k_cols {
        penalized[(i, i)] += kappa;
    }
    let chol = penalized.cholesky();
    DVector::from_fn(m, |i, _| {
        let y_i = design.y.column(i);
        let resid_var = match &chol {
            Some(c) => {
                let coef = c.solve(&design.xty.column(i).into_owned());
                let resid = y_i - &design.x * coef;
                resid.norm_squared() / design.t_eff as f64
            }
            None => y_i.norm_squared() / design.t_eff as f64,
        };
        resid_var.max(1e-8)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sigma_reconstruction_identity() {
        let design = VarDesign::prior_only(3, 1);
        let state = DrawState::initial(&design);
        let sigma = state.sigma();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(sigma[(i, j)], expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sigma_is_symmetric_and_positive_definite() {
        let design = VarDesign::prior_only(3, 1);
        let mut state = DrawState::initial(&design);
        state.h_free = vec![vec![], vec![0.7], vec![-0.3, 1.2]];
        state.s = DVector::from_vec(vec![0.5, 2.0, 1.3]);
        let sigma = state.sigma();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(sigma[(i, j)], sigma[(j, i)], epsilon = 1e-12);
            }
        }
        assert!(sigma.cholesky().is_some());
    }
}
