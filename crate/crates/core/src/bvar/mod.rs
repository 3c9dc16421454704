//! Bayesian VAR estimation under the hierarchical normal-gamma prior.
//!
//! Model: `Y_t = A X_t + eps_t` with `Cov(eps) = H^{-1} S (H^{-1})'`,
//! `H` unit lower triangular and `S` diagonal. Each coefficient gets a
//! scale mixture prior `alpha_i | psi_i ~ N(0, 2 psi_i / lambda^2_j)` with
//! gamma local scales `psi_i ~ G(theta, theta)` and lag-wise global
//! factors `lambda^2_j` built from gamma-distributed `zeta`.

mod design;
mod diagnostics;
mod gibbs;
mod hyper;
mod mcmc;
mod state;

pub use design::{build_design, VarDesign};
pub use diagnostics::{ess, split_rhat, Diagnostics};
pub use gibbs::gibbs_step;
pub use hyper::{lambda_for_lag, LambdaMode, NgHyper};
pub use mcmc::{run_mcmc, PosteriorDraw, PosteriorSample};
pub use state::DrawState;
