//! Convergence diagnostics: split-Rhat and effective sample size.

use serde::{Deserialize, Serialize};

/// Per-parameter convergence summary for a posterior sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub params: Vec<ParamDiag>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamDiag {
    pub name: String,
    pub split_rhat: f64,
    pub ess: f64,
}

impl Diagnostics {
    pub fn max_rhat(&self) -> f64 {
        self.params
            .iter()
            .map(|p| p.split_rhat)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn lookup(&self, name: &str) -> Option<&ParamDiag> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Split-Rhat: each chain is halved and the usual potential scale
/// reduction factor is computed over the resulting 2n sequences.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let halves = split_halves(chains);
    if halves.len() < 2 {
        return f64::NAN;
    }
    let n = halves[0].len();
    if n < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let vars: Vec<f64> = halves.iter().map(|h| variance(h)).collect();
    let w = mean(&vars);
    let grand = mean(&means);
    let b_over_n = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>()
        / (means.len() as f64 - 1.0);
    if w <= 0.0 {
        // degenerate (constant) sequences count as converged
        return 1.0;
    }
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b_over_n;
    (var_plus / w).sqrt()
}

/// Effective sample size from pooled within-chain autocorrelations with
/// Geyer's initial positive-sequence truncation.
pub fn ess(chains: &[Vec<f64>]) -> f64 {
    let halves = split_halves(chains);
    let m = halves.len();
    if m == 0 {
        return 0.0;
    }
    let n = halves[0].len();
    if n < 4 {
        return (m * n) as f64;
    }
    let vars: Vec<f64> = halves.iter().map(|h| variance(h)).collect();
    let w = mean(&vars);
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let grand = mean(&means);
    let b_over_n = if m > 1 {
        means.iter().map(|mu| (mu - grand) * (mu - grand)).sum::<f64>() / (m as f64 - 1.0)
    } else {
        0.0
    };
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b_over_n;
    if var_plus <= 0.0 {
        return (m * n) as f64;
    }

    let max_lag = n - 1;
    let mut rho_sum = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 1;
    while t + 1 < max_lag {
        let rho_t = 1.0 - (w - pooled_autocov(&halves, t)) / var_plus;
        let rho_t1 = 1.0 - (w - pooled_autocov(&halves, t + 1)) / var_plus;
        let mut pair = rho_t + rho_t1;
        if pair < 0.0 {
            break;
        }
        // enforce monotone decrease of the paired sums
        if pair > prev_pair {
            pair = prev_pair;
        }
        prev_pair = pair;
        rho_sum += pair;
        t += 2;
    }
    let total = (m * n) as f64;
    (total / (1.0 + 2.0 * rho_sum)).min(total)
}

fn split_halves(chains: &[Vec<f64>]) -> Vec<&[f64]> {
    let mut halves = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        let half = c.len() / 2;
        if half == 0 {
            continue;
        }
        halves.push(&c[..half]);
        halves.push(&c[c.len() - half..]);
    }
    halves
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn pooled_autocov(halves: &[&[f64]], lag: usize) -> f64 {
    let mut acc = 0.0;
    for h in halves {
        let mu = mean(h);
        let n = h.len();
        let mut c = 0.0;
        for i in 0..n - lag {
            c += (h[i] - mu) * (h[i + lag] - mu);
        }
        acc += c / (n as f64 - 1.0);
    }
    acc / halves.len() as f64
}
