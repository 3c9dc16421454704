//! Prior and sampler hyperparameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the lag-wise global shrinkage factor is assembled from the zeta
/// multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMode {
    /// `lambda^2_j = zeta_1 * ... * zeta_j`: higher lags shrink at least
    /// as hard once the multipliers exceed one.
    #[default]
    Cumulative,
    /// `lambda^2_j = zeta_1 * ... * zeta_p` for every lag.
    FullProduct,
}

/// All prior and chain settings for [`crate::bvar::run_mcmc`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgHyper {
    /// Shape and rate of the local-scale prior G(theta_psi, theta_psi);
    /// small values concentrate mass at zero with heavy tails.
    pub theta_psi: f64,
    /// Per-lag shape of the zeta prior.
    pub d: Vec<f64>,
    /// Per-lag rate of the zeta prior.
    pub l: Vec<f64>,
    /// Shape and rate for the single global scale on the covariance free
    /// elements.
    pub d_cov: f64,
    pub l_cov: f64,
    /// (shape, rate) of the gamma prior on the structural precisions 1/s_i.
    pub s_prior: (f64, f64),
    pub lambda_mode: LambdaMode,
    pub burn: usize,
    pub keep: usize,
    pub thin: usize,
    pub chains: usize,
    pub seed: u64,
}

impl NgHyper {
    /// Defaults: theta_psi = 0.1, d_j = l_j = 0.01, precision prior
    /// shape = rate = 0.01, burn 5000 / keep 5000 / thin 1 / 2 chains.
    pub fn default_for_lags(p: usize) -> Self {
        NgHyper {
            theta_psi: 0.1,
            d: vec![0.01; p],
            l: vec![0.01; p],
            d_cov: 0.01,
            l_cov: 0.01,
            s_prior: (0.01, 0.01),
            lambda_mode: LambdaMode::Cumulative,
            burn: 5000,
            keep: 5000,
            thin: 1,
            chains: 2,
            seed: 0,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.theta_psi <= 0.0 {
            return Err(Error::Input("theta_psi must be positive".into()));
        }
        if self.d.len() != p || self.l.len() != p {
            return Err(Error::Input(format!(
                "d and l must have one entry per lag (expected {p}, got {} and {})",
                self.d.len(),
                self.l.len()
            )));
        }
        if self.d.iter().chain(self.l.iter()).any(|v| *v <= 0.0)
            || self.d_cov <= 0.0
            || self.l_cov <= 0.0
            || self.s_prior.0 <= 0.0
            || self.s_prior.1 <= 0.0
        {
            return Err(Error::Input("prior shapes and rates must be positive".into()));
        }
        if self.keep < 1 || self.thin < 1 || self.chains < 1 {
            return Err(Error::Input(
                "keep, thin and chains must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Global shrinkage factor `lambda^2_j` for a 1-based lag index.
pub fn lambda_for_lag(zeta: &[f64], j: usize, mode: LambdaMode) -> f64 {
    debug_assert!(j >= 1 && j <= zeta.len());
    match mode {
        LambdaMode::Cumulative => zeta[..j].iter().product(),
        LambdaMode::FullProduct => zeta.iter().product(),
    }
}
