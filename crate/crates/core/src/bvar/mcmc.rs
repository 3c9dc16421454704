//! Chain orchestration: burn-in, thinning, retention, diagnostics.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::bvar::design::VarDesign;
use crate::bvar::diagnostics::{ess, split_rhat, Diagnostics, ParamDiag};
use crate::bvar::gibbs::sweep;
use crate::bvar::hyper::{lambda_for_lag, NgHyper};
use crate::bvar::state::DrawState;
use crate::error::{Error, Result};

/// One retained draw: everything needed for structural analysis. The
/// local scales and residuals of the full sampler state are not kept.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw {
    pub chain: usize,
    /// Post-burn sweep index within the chain.
    pub sweep: usize,
    pub a: DMatrix<f64>,
    pub h_free: Vec<Vec<f64>>,
    pub s: DVector<f64>,
    pub zeta: Vec<f64>,
    pub zeta_cov: f64,
}

impl PosteriorDraw {
    /// Unit lower triangular `H` of this draw.
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
        for c in 0..m {
            for r in 0..m {
                let mut v = if r == c { 1.0 } else { 0.0 };
                for j in 0..r {
                    v -= h[(r, j)] * h_inv[(j, c)];
                }
                h_inv[(r, c)] = v;
            }
        }
        &h_inv * DMatrix::from_diagonal(&self.s) * h_inv.transpose()
    }
}

/// The retained posterior sample across all chains.
#[derive(Debug, Clone)]
pub struct PosteriorSample {
    pub m: usize,
    pub p: usize,
    pub keep: usize,
    pub chains: usize,
    pub lambda_mode: crate::bvar::hyper::LambdaMode,
    /// Chain-major: draws of chain 0 first, each chain in sweep order.
    pub draws: Vec<PosteriorDraw>,
    pub diagnostics: Diagnostics,
}

impl PosteriorSample {
    /// Assembles a sample from retained draws (e.g. a reloaded draw store)
    /// and computes diagnostics.
    pub fn from_draws(
        m: usize,
        p: usize,
        keep: usize,
        chains: usize,
        lambda_mode: crate::bvar::hyper::LambdaMode,
        draws: Vec<PosteriorDraw>,
    ) -> Self {
        let diagnostics = compute_diagnostics(&draws, chains, keep, m, p);
        PosteriorSample {
            m,
            p,
            keep,
            chains,
            lambda_mode,
            draws,
            diagnostics,
        }
    }

    /// Posterior mean of `lambda^2_j` for a 1-based lag.
    pub fn mean_lambda2(&self, j: usize) -> f64 {
        self.draws
            .iter()
            .map(|d| lambda_for_lag(&d.zeta, j, self.lambda_mode))
            .sum::<f64>()
            / self.draws.len() as f64
    }

    /// Per-coefficient posterior median of `A`, as an `m x mp` matrix.
    pub fn median_a(&self) -> DMatrix<f64> {
        let (rows, cols) = self.draws[0].a.shape();
        DMatrix::from_fn(rows, cols, |r, c| {
            let mut vals: Vec<f64> = self.draws.iter().map(|d| d.a[(r, c)]).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = vals.len();
            if n % 2 == 1 {
                vals[n / 2]
            } else {
                0.5 * (vals[n / 2 - 1] + vals[n / 2])
            }
        })
    }
}

/// Runs `hyper.chains` independent chains (in parallel) and retains every
/// `thin`-th post-burn sweep. Deterministic for a fixed seed.
pub fn run_mcmc(design: &VarDesign, hyper: &NgHyper) -> Result<PosteriorSample> {
    hyper.validate(design.p)?;
    let chain_results: Vec<Result<Vec<PosteriorDraw>>> = (0..hyper.chains)
        .into_par_iter()
        .map(|chain| run_chain(design, hyper, chain))
        .collect();
    let mut draws = Vec::with_capacity(hyper.chains * hyper.keep);
    for r in chain_results {
        draws.extend(r?);
    }
    Ok(PosteriorSample::from_draws(
        design.m,
        design.p,
        hyper.keep,
        hyper.chains,
        hyper.lambda_mode,
        draws,
    ))
}

fn chain_seed(seed: u64, chain: usize) -> u64 {
    seed.wrapping_add((chain as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn run_chain(design: &VarDesign, hyper: &NgHyper, chain: usize) -> Result<Vec<PosteriorDraw>> {
    let mut rng = ChaCha20Rng::seed_from_u64(chain_seed(hyper.seed, chain));
    let mut state = DrawState::initial(design);
    let with_sweep = |e: Error, sweep_idx: usize| match e {
        Error::NumericalFailure { equation, detail } => Error::NumericalFailure {
            equation,
            detail: format!("{detail} (chain {chain}, sweep {sweep_idx})"),
        },
        other => other,
    };
    for b in 0..hyper.burn {
        sweep(&mut state, design, hyper, &mut rng).map_err(|e| with_sweep(e, b))?;
    }
    let mut out = Vec::with_capacity(hyper.keep);
    for k in 0..hyper.keep {
        for t in 0..hyper.thin {
            let idx = hyper.burn + k * hyper.thin + t;
            sweep(&mut state, design, hyper, &mut rng).map_err(|e| with_sweep(e, idx))?;
        }
        out.push(PosteriorDraw {
            chain,
            sweep: (k + 1) * hyper.thin - 1,
            a: state.a.clone(),
            h_free: state.h_free.clone(),
            s: state.s.clone(),
            zeta: state.zeta.clone(),
            zeta_cov: state.zeta_cov,
        });
    }
    Ok(out)
}

fn compute_diagnostics(
    draws: &[PosteriorDraw],
    chains: usize,
    keep: usize,
    m: usize,
    p: usize,
) -> Diagnostics {
    let mut params = Vec::new();
    let series = |f: &dyn Fn(&PosteriorDraw) -> f64| -> Vec<Vec<f64>> {
        (0..chains)
            .map(|c| draws[c * keep..(c + 1) * keep].iter().map(f).collect())
            .collect()
    };
    for r in 0..m {
        for c in 0..m * p {
            let chains_data = series(&|d: &PosteriorDraw| d.a[(r, c)]);
            params.push(ParamDiag {
                name: format!("a[{r}][{c}]"),
                split_rhat: split_rhat(&chains_data),
                ess: ess(&chains_data),
            });
        }
    }
    for i in 0..m {
        let chains_data = series(&|d: &PosteriorDraw| d.s[i]);
        params.push(ParamDiag {
            name: format!("s[{i}]"),
            split_rhat: split_rhat(&chains_data),
            ess: ess(&chains_data),
        });
    }
    Diagnostics { params }
}
