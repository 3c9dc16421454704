//! Structural impulse responses under a recursive (Cholesky) ordering.
//!
//! The impact matrix is `B0 = H^{-1} S^{1/2}`, lower triangular with
//! positive diagonal, so `B0 B0' = Sigma`. Responses follow the
//! companion-form power recursion and are normalized by the horizon-0
//! own-response of the shock variable, then scaled to the declared shock
//! size (negative for an expansionary cut).

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvar::{PosteriorDraw, PosteriorSample};
use crate::error::{Error, Result};

/// The structural shock to trace out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockSpec {
    /// Series id of the shocked variable (base model: the overnight rate).
    pub shock_variable: String,
    /// Shock size in percentage points; -0.25 is an expansionary 25 bp cut.
    pub size_pp: f64,
    /// Number of response horizons beyond impact.
    pub horizons: usize,
}

impl Default for ShockSpec {
    fn default() -> Self {
        ShockSpec {
            shock_variable: String::new(),
            size_pp: -0.25,
            horizons: 36,
        }
    }
}

/// Draw-indexed responses in percentage points:
/// `responses[draw][horizon][variable]`.
#[derive(Debug, Clone)]
pub struct IrfSet {
    pub responses: Vec<Vec<Vec<f64>>>,
    pub shock: ShockSpec,
    pub ordering: Vec<String>,
}

/// Per-variable, per-horizon quantile summaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantileBand {
    pub variables: Vec<String>,
    pub horizons: usize,
    /// `bands[variable][horizon]` = (q16, q50, q84).
    pub bands: Vec<Vec<(f64, f64, f64)>>,
}

/// Lower-triangular impact matrix `B0 = H^{-1} S^{1/2}`.
pub fn impact_matrix(draw: &PosteriorDraw) -> Result<DMatrix<f64>> {
    let m = draw.s.len();
    let h = draw.h_matrix();
    let mut b0 = DMatrix::zeros(m, m);
    // forward substitution of H b = sqrt(s_c) e_c, column by column
    for c in 0..m {
        let sc = draw.s[c].sqrt();
        for r in 0..m {
            let mut v = if r == c { sc } else { 0.0 };
            for j in 0..r {
                v -= h[(r, j)] * b0[(j, c)];
            }
            b0[(r, c)] = v;
        }
    }
    if b0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite entries in impact matrix".into()));
    }
    Ok(b0)
}

/// Normalized response path of one draw: `(H+1) x m`, row `h` is the
/// response of all variables at horizon `h`.
pub fn compute_irf(draw: &PosteriorDraw, shock_index: usize, spec: &ShockSpec) -> Result<Vec<Vec<f64>>> {
    let m = draw.s.len();
    let p = draw.zeta.len();
    if shock_index >= m {
        return Err(Error::Input(format!(
            "shock index {shock_index} out of range for m = {m}"
        )));
    }
    let b0 = impact_matrix(draw)?;
    let own_impact = b0[(shock_index, shock_index)];
    if own_impact == 0.0 || !own_impact.is_finite() {
        return Err(Error::Normalization(format!(
            "horizon-0 own-response of the shock variable is {own_impact}"
        )));
    }
    let scale = spec.size_pp / own_impact;

    // moving-average coefficients Phi_h via the companion power recursion
    let mut phis: Vec<DMatrix<f64>> = Vec::with_capacity(spec.horizons + 1);
    phis.push(DMatrix::identity(m, m));
    for h in 1..=spec.horizons {
        let mut phi = DMatrix::zeros(m, m);
        for r in 1..=h.min(p) {
            let a_r = draw.a.view((0, (r - 1) * m), (m, m));
            phi += a_r * &phis[h - r];
        }
        phis.push(phi);
    }

    let mut b0_col = b0.column(shock_index).into_owned() * scale;
    // the shock variable's impact is size_pp by definition of the
    // normalization; assigning it directly avoids a rounding round trip
    b0_col[shock_index] = spec.size_pp;
    let mut out = Vec::with_capacity(spec.horizons + 1);
    out.push(b0_col.as_slice().to_vec());
    for phi in &phis[1..] {
        let resp = phi * &b0_col;
        out.push(resp.as_slice().to_vec());
    }
    Ok(out)
}

/// Responses for every kept draw, parallel over draws.
pub fn irf_set(sample: &PosteriorSample, ordering: &[String], spec: &ShockSpec) -> Result<IrfSet> {
    let shock_index = ordering
        .iter()
        .position(|id| *id == spec.shock_variable)
        .ok_or_else(|| {
            Error::Ordering(format!(
                "shock variable '{}' not in the panel ordering",
                spec.shock_variable
            ))
        })?;
    let responses: Vec<Vec<Vec<f64>>> = sample
        .draws
        .par_iter()
        .map(|d| compute_irf(d, shock_index, spec))
        .collect::<Result<_>>()?;
    Ok(IrfSet {
        responses,
        shock: spec.clone(),
        ordering: ordering.to_vec(),
    })
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn empirical_quantile(sorted: &[f64], prob: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = prob * (n as f64 - 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Per-cell quantiles over draws for the given probabilities.
pub fn quantiles_at(irfs: &IrfSet, probs: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    if irfs.responses.len() < 2 {
        return Err(Error::Input("need at least 2 draws for quantiles".into()));
    }
    if probs.iter().any(|p| *p <= 0.0 || *p >= 1.0) {
        return Err(Error::Input("probabilities must lie in (0, 1)".into()));
    }
    let horizons = irfs.responses[0].len();
    let m = irfs.ordering.len();
    let mut out = vec![vec![vec![0.0; probs.len()]; horizons]; m];
    let mut cell = Vec::with_capacity(irfs.responses.len());
    for v in 0..m {
        for h in 0..horizons {
            cell.clear();
            cell.extend(irfs.responses.iter().map(|d| d[h][v]));
            cell.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (k, &p) in probs.iter().enumerate() {
                out[v][h][k] = empirical_quantile(&cell, p);
            }
        }
    }
    Ok(out)
}

/// The 16/50/84 credible summary used in the report figures.
pub fn quantile_bands(irfs: &IrfSet) -> Result<QuantileBand> {
    let q = quantiles_at(irfs, &[0.16, 0.50, 0.84])?;
    let horizons = irfs.responses[0].len();
    let bands = q
        .into_iter()
        .map(|per_h| per_h.into_iter().map(|v| (v[0], v[1], v[2])).collect())
        .collect();
    Ok(QuantileBand {
        variables: irfs.ordering.clone(),
        horizons,
        bands,
    })
}
