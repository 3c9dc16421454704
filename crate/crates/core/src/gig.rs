//! Generalized Inverse Gaussian random variates.
//!
//! Density: f(x) ∝ x^{lam-1} exp(-(chi/x + psi·x)/2) on x > 0.
//!
//! Boundary cases reduce to gamma (chi = 0, lam > 0) and inverse-gamma
//! (psi = 0, lam < 0). The interior case rescales to the two-parameter
//! form GIG(lam, omega) with omega = sqrt(chi·psi) and samples it with
//! Devroye's uniformly fast rejection algorithm on the log scale.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

/// One draw from GIG(lam, chi, psi).
pub fn sample_gig<R: Rng + ?Sized>(lam: f64, chi: f64, psi: f64, rng: &mut R) -> Result<f64> {
    if !(lam.is_finite() && chi.is_finite() && psi.is_finite()) || chi < 0.0 || psi < 0.0 {
        return Err(Error::Domain(format!(
            "invalid GIG parameters lam={lam} chi={chi} psi={psi}"
        )));
    }
    match (chi == 0.0, psi == 0.0) {
        (true, true) => Err(Error::Domain(
            "GIG requires chi > 0 or psi > 0".into(),
        )),
        (true, false) => {
            if lam <= 0.0 {
                return Err(Error::Domain(format!(
                    "GIG with chi = 0 requires lam > 0, got {lam}"
                )));
            }
            // Gamma(shape = lam, rate = psi/2)
            let g = Gamma::new(lam, 2.0 / psi)
                .map_err(|e| Error::Domain(format!("gamma parameters: {e}")))?;
            Ok(g.sample(rng))
        }
        (false, true) => {
            if lam >= 0.0 {
                return Err(Error::Domain(format!(
                    "GIG with psi = 0 requires lam < 0, got {lam}"
                )));
            }
            // Inverse-gamma(shape = -lam, rate = chi/2): chi / (2 * Gamma(-lam, 1))
            let g = Gamma::new(-lam, 1.0)
                .map_err(|e| Error::Domain(format!("gamma parameters: {e}")))?;
            Ok(chi / (2.0 * g.sample(rng)))
        }
        (false, false) => {
            let alpha = (chi / psi).sqrt();
            let omega = (chi * psi).sqrt();
            let x = if lam >= 0.0 {
                alpha * gig_two_param(lam, omega, rng)
            } else {
                alpha / gig_two_param(-lam, omega, rng)
            };
            Ok(x)
        }
    }
}

/// Devroye (2014): draw from density ∝ x^{lam-1} exp(-omega(x + 1/x)/2),
/// lam >= 0, omega > 0.
fn gig_two_param<R: Rng + ?Sized>(lam: f64, omega: f64, rng: &mut R) -> f64 {
    let alpha = (omega * omega + lam * lam).sqrt() - lam;
    let psi_fn = |x: f64| -alpha * (x.cosh() - 1.0) - lam * (x.exp() - x - 1.0);
    let dpsi_fn = |x: f64| -alpha * x.sinh() - lam * (x.exp() - 1.0);

    let t = {
        let v = -psi_fn(1.0);
        if v > 2.0 {
            (2.0 / (alpha + lam)).sqrt()
        } else if v < 0.5 {
            (4.0 / (alpha + 2.0 * lam)).ln()
        } else {
            1.0
        }
    };
    let s = {
        let v = -psi_fn(-1.0);
        if v > 2.0 {
            (4.0 / (alpha * 1.0_f64.cosh() + lam)).sqrt()
        } else if v < 0.5 {
            let bound = (1.0 + 1.0 / alpha + (1.0 / (alpha * alpha) + 2.0 / alpha).sqrt()).ln();
            if lam > 0.0 {
                (1.0 / lam).min(bound)
            } else {
                bound
            }
        } else {
            1.0
        }
    };

    let eta = -psi_fn(t);
    let zeta = -dpsi_fn(t);
    let theta = -psi_fn(-s);
    let xi = dpsi_fn(-s);
    let p = 1.0 / xi;
    let r = 1.0 / zeta;
    let t_shift = t - r * eta;
    let s_shift = s - p * theta;
    let q = t_shift + s_shift;

    loop {
        let u: f64 = rng.gen();
        let v: f64 = rng.gen();
        let w: f64 = rng.gen();
        let x = if u < q / (p + q + r) {
            -s_shift + q * v
        } else if u < (q + r) / (p + q + r) {
            t_shift - r * v.ln()
        } else {
            -s_shift + p * v.ln()
        };
        let envelope = if (-s_shift..=t_shift).contains(&x) {
            1.0
        } else if x > t_shift {
            (-eta - zeta * (x - t)).exp()
        } else {
            (-theta + xi * (x + s)).exp()
        };
        if w * envelope <= psi_fn(x).exp() {
            let c = lam / omega + (1.0 + (lam / omega) * (lam / omega)).sqrt();
            return c * x.exp();
        }
    }
}
