//! Robustness battery: alternative lags, reordering, spread shock, and
//! the companion-eigenvalue stability diagnostic.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvar::{build_design, run_mcmc, NgHyper, PosteriorDraw, PosteriorSample};
use crate::error::{Error, Result};
use crate::irf::{irf_set, quantile_bands, QuantileBand, ShockSpec};
use crate::series::{assemble_panel, Frequency, Panel, TimeSeries, Unit};

/// One robustness variant; at most one logical change per label so that
/// differences stay attributable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub label: String,
    pub lag_override: Option<usize>,
    pub ordering_override: Option<Vec<String>>,
    pub shock_override: Option<ShockOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShockOverride {
    /// Shock a different series already in the panel.
    Series { id: String },
    /// Replace the overnight-rate slot with the policy-rate spread and
    /// shock it. A widening spread reads as more excess liquidity, so the
    /// default shock size is positive.
    DerivedSpread {
        mro: String,
        eonia: String,
        size_pp: f64,
    },
}

/// Largest companion-eigenvalue modulus per draw plus the share of
/// explosive draws (modulus >= 1). Explosive draws are reported, not
/// dropped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub max_moduli: Vec<f64>,
    pub explosive_share: f64,
}

impl StabilityReport {
    pub fn from_sample(sample: &PosteriorSample) -> Self {
        let max_moduli: Vec<f64> = sample
            .draws
            .par_iter()
            .map(|d| companion_eigen_max(&d.a, sample.m, sample.p))
            .collect();
        let explosive = max_moduli.iter().filter(|m| **m >= 1.0).count();
        StabilityReport {
            explosive_share: explosive as f64 / max_moduli.len().max(1) as f64,
            max_moduli,
        }
    }
}

/// Largest eigenvalue modulus of the `mp x mp` companion matrix
/// `[A; I 0]`.
pub fn companion_eigen_max(a: &DMatrix<f64>, m: usize, p: usize) -> f64 {
    debug_assert_eq!(a.shape(), (m, m * p));
    let n = m * p;
    let mut companion = DMatrix::zeros(n, n);
    companion.view_mut((0, 0), (m, n)).copy_from(a);
    for i in 0..m * (p - 1) {
        companion[(m + i, i)] = 1.0;
    }
    // The QR iteration can cycle on nilpotent companion matrices (all-zero
    // coefficient block), so bound it and fall back to the Gelfand limit
    // rho = lim ||M^k||^(1/k) evaluated at k = 2^12 by repeated squaring.
    if let Some(schur) = nalgebra::Schur::try_new(companion.clone(), f64::EPSILON, 100 * n * n) {
        return schur
            .complex_eigenvalues()
            .iter()
            .map(|e| e.norm())
            .fold(0.0, f64::max);
    }
    let mut power = companion;
    let mut log_rho = 0.0;
    let mut k = 1.0;
    for _ in 0..12 {
        power = &power * &power;
        k *= 2.0;
        let norm = power.norm();
        if norm == 0.0 {
            return 0.0;
        }
        log_rho += norm.ln() / k;
        power /= norm;
    }
    log_rho.exp()
}

/// Convenience wrapper for a posterior draw.
pub fn companion_eigen_max_draw(draw: &PosteriorDraw) -> f64 {
    let m = draw.s.len();
    let p = draw.zeta.len();
    companion_eigen_max(&draw.a, m, p)
}

/// Spread between the policy rate and the overnight rate, computed on the
/// overlapping monthly span.
pub fn derive_spread(mro: &TimeSeries, eonia: &TimeSeries) -> Result<TimeSeries> {
    if mro.frequency != Frequency::Monthly || eonia.frequency != Frequency::Monthly {
        return Err(Error::Frequency("spread inputs must be monthly".into()));
    }
    let first = mro.start.max(eonia.start);
    let last = mro.end().min(eonia.end());
    if first > last {
        return Err(Error::Alignment(format!(
            "'{}' and '{}' have no common span",
            mro.id, eonia.id
        )));
    }
    let a = mro.slice(first, last)?;
    let b = eonia.slice(first, last)?;
    Ok(TimeSeries {
        id: format!("{}_{}_spread", mro.id, eonia.id),
        frequency: Frequency::Monthly,
        unit: Unit::PercentagePoints,
        start: first,
        values: a
            .values
            .iter()
            .zip(b.values.iter())
            .map(|(x, y)| x - y)
            .collect(),
    })
}

/// Base configuration the battery perturbs.
#[derive(Debug, Clone)]
pub struct BaseModel {
    pub panel: Panel,
    pub lags: usize,
    pub shock: ShockSpec,
    pub hyper: NgHyper,
}

/// Result of one completed variant run.
#[derive(Debug, Clone)]
pub struct VariantResult {
    pub ordering: Vec<String>,
    /// Median response path, `[variable][horizon]`, percentage points.
    pub median: Vec<Vec<f64>>,
    pub stability: StabilityReport,
}

#[derive(Debug, Clone)]
pub enum VariantOutcome {
    Completed(VariantResult),
    /// A failed variant is recorded without aborting the others.
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct BatteryBundle {
    pub base_bands: QuantileBand,
    pub base_stability: StabilityReport,
    pub variants: Vec<(VariantSpec, VariantOutcome)>,
}

/// The paper's four checks: three and four lags, loan variables reordered
/// below the shock, and the policy spread as shock variable.
pub fn paper_variants(
    base_ordering: &[String],
    shock_variable: &str,
    reorder_below: &[String],
    mro_id: &str,
    spread_size_pp: f64,
) -> Vec<VariantSpec> {
    let mut reordered: Vec<String> = base_ordering
        .iter()
        .filter(|id| !reorder_below.contains(id))
        .cloned()
        .collect();
    let shock_pos = reordered
        .iter()
        .position(|id| id == shock_variable)
        .map(|i| i + 1)
        .unwrap_or(reordered.len());
    for (offset, id) in reorder_below.iter().enumerate() {
        reordered.insert(shock_pos + offset, id.clone());
    }
    vec![
        VariantSpec {
            label: "lags-3".into(),
            lag_override: Some(3),
            ordering_override: None,
            shock_override: None,
        },
        VariantSpec {
            label: "lags-4".into(),
            lag_override: Some(4),
            ordering_override: None,
            shock_override: None,
        },
        VariantSpec {
            label: "reorder".into(),
            lag_override: None,
            ordering_override: Some(reordered),
            shock_override: None,
        },
        VariantSpec {
            label: "spread-shock".into(),
            lag_override: None,
            ordering_override: None,
            shock_override: Some(ShockOverride::DerivedSpread {
                mro: mro_id.to_string(),
                eonia: shock_variable.to_string(),
                size_pp: spread_size_pp,
            }),
        },
    ]
}

fn run_full(panel: &Panel, lags: usize, shock: &ShockSpec, hyper: &NgHyper) -> Result<(QuantileBand, StabilityReport, Vec<Vec<f64>>)> {
    let design = build_design(panel, lags)?;
    let mut hyper = hyper.clone();
    if hyper.d.len() != lags {
        let d0 = hyper.d[0];
        let l0 = hyper.l[0];
        hyper.d = vec![d0; lags];
        hyper.l = vec![l0; lags];
    }
    let sample = run_mcmc(&design, &hyper)?;
    let ordering = panel.ordering();
    let irfs = irf_set(&sample, &ordering, shock)?;
    let bands = quantile_bands(&irfs)?;
    let stability = StabilityReport::from_sample(&sample);
    let median = bands
        .bands
        .iter()
        .map(|per_h| per_h.iter().map(|(_, q50, _)| *q50).collect())
        .collect();
    Ok((bands, stability, median))
}

fn apply_variant(base: &BaseModel, variant: &VariantSpec) -> Result<(Panel, usize, ShockSpec)> {
    let lags = variant.lag_override.unwrap_or(base.lags);
    if lags == 0 {
        return Err(Error::Input(format!(
            "variant '{}' requests lag order 0",
            variant.label
        )));
    }
    let mut shock = base.shock.clone();
    let panel = match &variant.shock_override {
        Some(ShockOverride::Series { id }) => {
            shock.shock_variable = id.clone();
            base.panel.clone()
        }
        Some(ShockOverride::DerivedSpread { mro, eonia, size_pp }) => {
            let mro_s = base
                .panel
                .series
                .iter()
                .find(|s| &s.id == mro)
                .ok_or_else(|| Error::Ordering(format!("unknown series id '{mro}'")))?;
            let eonia_s = base
                .panel
                .series
                .iter()
                .find(|s| &s.id == eonia)
                .ok_or_else(|| Error::Ordering(format!("unknown series id '{eonia}'")))?;
            let spread = derive_spread(mro_s, eonia_s)?;
            let spread_id = spread.id.clone();
            let mut series: Vec<TimeSeries> = base
                .panel
                .series
                .iter()
                .filter(|s| &s.id != eonia)
                .cloned()
                .collect();
            series.push(spread);
            // spread takes the overnight rate's slot in the ordering
            let ordering: Vec<String> = base
                .panel
                .ordering()
                .into_iter()
                .map(|id| if &id == eonia { spread_id.clone() } else { id })
                .collect();
            shock.shock_variable = spread_id;
            shock.size_pp = *size_pp;
            assemble_panel(&series, &ordering)?
        }
        None => base.panel.clone(),
    };
    let panel = match &variant.ordering_override {
        Some(ordering) => assemble_panel(&panel.series, ordering)?,
        None => panel,
    };
    Ok((panel, lags, shock))
}

/// Re-runs the full pipeline for every variant, pairing the base model's
/// credible bands with each variant's median paths. A failing variant is
/// recorded as failed; the rest complete.
pub fn run_battery(base: &BaseModel, variants: &[VariantSpec]) -> Result<BatteryBundle> {
    let (base_bands, base_stability, _) =
        run_full(&base.panel, base.lags, &base.shock, &base.hyper)?;
    let outcomes: Vec<(VariantSpec, VariantOutcome)> = variants
        .par_iter()
        .map(|v| {
            let outcome = match apply_variant(base, v) {
                Ok((panel, lags, shock)) => match run_full(&panel, lags, &shock, &base.hyper) {
                    Ok((_, stability, median)) => VariantOutcome::Completed(VariantResult {
                        ordering: panel.ordering(),
                        median,
                        stability,
                    }),
                    Err(e) => VariantOutcome::Failed(e.to_string()),
                },
                Err(e) => VariantOutcome::Failed(e.to_string()),
            };
            (v.clone(), outcome)
        })
        .collect();
    Ok(BatteryBundle {
        base_bands,
        base_stability,
        variants: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Month;
    use approx::assert_abs_diff_eq;

    #[test]
    fn scalar_companion_is_the_coefficient() {
        let a = DMatrix::from_element(1, 1, 0.5);
        assert_abs_diff_eq!(companion_eigen_max(&a, 1, 1), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_companion_takes_the_largest_entry() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.3, 1.2]));
        let modulus = companion_eigen_max(&a, 2, 1);
        assert_abs_diff_eq!(modulus, 1.2, epsilon = 1e-10);
        assert!(modulus >= 1.0, "explosive case");
    }

    #[test]
    fn two_lag_companion_matches_dense_oracle() {
        // explicit assembly + dense eigensolver, independently of the helper
        let a = DMatrix::from_row_slice(2, 4, &[0.4, -0.2, 0.1, 0.05, 0.3, 0.5, -0.15, 0.2]);
        let mut dense = DMatrix::zeros(4, 4);
        for r in 0..2 {
            for c in 0..4 {
                dense[(r, c)] = a[(r, c)];
            }
        }
        dense[(2, 0)] = 1.0;
        dense[(3, 1)] = 1.0;
        let oracle = dense
            .complex_eigenvalues()
            .iter()
            .map(|e| e.norm())
            .fold(0.0, f64::max);
        assert_abs_diff_eq!(companion_eigen_max(&a, 2, 2), oracle, epsilon = 1e-12);
    }

    fn monthly(id: &str, start: Month, values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(id, Frequency::Monthly, Unit::Rate, start, values).unwrap()
    }

    #[test]
    fn spread_examples() {
        let mro = monthly("mro", Month::from_ym(2008, 1), vec![1.0, 1.0]);
        let eonia = monthly("eonia", Month::from_ym(2008, 1), vec![0.8, 0.9]);
        let spread = derive_spread(&mro, &eonia).unwrap();
        assert_abs_diff_eq!(spread.values[0], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(spread.values[1], 0.1, epsilon = 1e-12);

        let self_spread = derive_spread(&mro, &mro).unwrap();
        assert!(self_spread.values.iter().all(|v| *v == 0.0));

        // pre-crisis style: both rates at 4.25, spread identically zero
        let a = monthly("mro", Month::from_ym(2008, 1), vec![4.25]);
        let b = monthly("eonia", Month::from_ym(2008, 1), vec![4.25]);
        assert_eq!(derive_spread(&a, &b).unwrap().values, vec![0.0]);
    }

    #[test]
    fn spread_requires_overlap() {
        let mro = monthly("mro", Month::from_ym(2008, 1), vec![1.0; 3]);
        let eonia = monthly("eonia", Month::from_ym(2010, 1), vec![1.0; 3]);
        assert!(matches!(
            derive_spread(&mro, &eonia),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn paper_variants_have_the_four_labels() {
        let ordering: Vec<String> = ["hicp", "gdp", "ciss", "demand", "supply", "mro", "eonia"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let variants = paper_variants(
            &ordering,
            "eonia",
            &["demand".to_string(), "supply".to_string()],
            "mro",
            0.25,
        );
        let labels: Vec<&str> = variants.iter().map(|v| v.label.as_str()).collect();
        assert_eq!(labels, vec!["lags-3", "lags-4", "reorder", "spread-shock"]);
        let reordered = variants[2].ordering_override.as_ref().unwrap();
        assert_eq!(
            reordered,
            &["hicp", "gdp", "ciss", "mro", "eonia", "demand", "supply"]
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
        );
    }
}
