//! Property-based invariants for transforms, disaggregation, and IRFs.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use ngbvar_core::bvar::PosteriorDraw;
use ngbvar_core::disagg::{chow_lin, spline_disaggregate, AggregationRule, RhoMode};
use ngbvar_core::irf::{compute_irf, ShockSpec};
use ngbvar_core::series::{
    assemble_panel, growth_rate, invert_series, Frequency, GrowthKind, Month, TimeSeries, Unit,
};

fn quarterly(values: Vec<f64>) -> TimeSeries {
    TimeSeries::new("q", Frequency::Quarterly, Unit::Rate, Month::from_ym(2010, 3), values)
        .unwrap()
}

fn monthly(id: &str, start: Month, values: Vec<f64>) -> TimeSeries {
    TimeSeries::new(id, Frequency::Monthly, Unit::Rate, start, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // For small period growth the two growth conventions agree to first
    // order: with steps within +-0.1%, they differ by at most 0.001.
    #[test]
    fn growth_conventions_agree_for_small_rates(
        steps in prop::collection::vec(-0.001..0.001f64, 2..20)
    ) {
        let mut level = 100.0;
        let mut values = vec![level];
        for s in &steps {
            level *= 1.0 + s;
            values.push(level);
        }
        let s = monthly("x", Month::from_ym(2008, 1), values);
        let pp = growth_rate(&s, GrowthKind::PeriodOnPeriod).unwrap();
        let lr = growth_rate(&s, GrowthKind::LogReturn).unwrap();
        for (a, b) in pp.values.iter().zip(lr.values.iter()) {
            prop_assert!((a - b).abs() <= 0.001, "pp {a} vs log {b}");
        }
    }

    #[test]
    fn invert_is_an_involution(values in prop::collection::vec(-1e6..1e6f64, 1..30)) {
        let s = monthly("x", Month::from_ym(2008, 1), values);
        let back = invert_series(&invert_series(&s));
        prop_assert_eq!(back, s);
    }

    // Assembled panels always satisfy their own validation contract and the
    // span is the intersection of the member spans.
    #[test]
    fn assembled_panel_validates(
        offset_b in 0..24i32,
        len_a in 30..60usize,
        len_b in 30..60usize,
    ) {
        let start = Month::from_ym(2008, 1);
        let a = monthly("a", start, (0..len_a).map(|i| i as f64).collect());
        let b = monthly("b", start.offset(offset_b), (0..len_b).map(|i| -(i as f64)).collect());
        let ordering = vec!["a".to_string(), "b".to_string()];
        match assemble_panel(&[a.clone(), b.clone()], &ordering) {
            Ok(panel) => {
                panel.validate().unwrap();
                prop_assert_eq!(panel.start, a.start.max(b.start));
                prop_assert_eq!(panel.end(), a.end().min(b.end()));
            }
            Err(_) => prop_assert!(a.end() < b.start || b.end() < a.start),
        }
    }

    // Spline disaggregation commutes with affine maps of the input under
    // value-preserving rules.
    #[test]
    fn spline_is_affine_equivariant(
        values in prop::collection::vec(-50.0..50.0f64, 3..16),
        scale in -3.0..3.0f64,
        shift in -10.0..10.0f64,
    ) {
        let base = spline_disaggregate(&quarterly(values.clone()), AggregationRule::Average).unwrap();
        let mapped: Vec<f64> = values.iter().map(|v| scale * v + shift).collect();
        let out = spline_disaggregate(&quarterly(mapped), AggregationRule::Average).unwrap();
        for (a, b) in out.series.values.iter().zip(base.series.values.iter()) {
            prop_assert!((a - (scale * b + shift)).abs() < 1e-8, "{a} vs {}", scale * b + shift);
        }
    }

    // The Chow-Lin estimate re-aggregates to the quarterly input exactly,
    // whatever the data look like.
    #[test]
    fn chow_lin_constraint_is_exact(
        q_values in prop::collection::vec(-20.0..20.0f64, 2..10),
        rho in -0.9..0.9f64,
        seed_phase in 0.1..3.0f64,
    ) {
        let n = q_values.len();
        let ind_values: Vec<f64> = (0..3 * n).map(|i| (i as f64 * seed_phase).sin() + 2.5).collect();
        let ind = monthly("ind", Month::from_ym(2010, 1), ind_values);
        let q = quarterly(q_values.clone());
        for rule in [AggregationRule::Sum, AggregationRule::Average, AggregationRule::LastOfPeriod] {
            let fit = chow_lin(&q, &ind, rule, RhoMode::Fixed(rho)).unwrap();
            let agg = rule.aggregate(&fit.monthly_estimate.values);
            for (a, b) in agg.iter().zip(q_values.iter()) {
                prop_assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    // Responses of a clearly stable coefficient draw decay towards zero.
    #[test]
    fn stable_draw_irf_decays(
        diag in prop::collection::vec(-0.8..0.8f64, 2..4),
        s in prop::collection::vec(0.2..4.0f64, 2..4),
    ) {
        let m = diag.len().min(s.len());
        let a = DMatrix::from_fn(m, m, |r, c| if r == c { diag[r] } else { 0.0 });
        let draw = PosteriorDraw {
            chain: 0,
            sweep: 0,
            a,
            h_free: (0..m).map(|i| vec![0.1; i]).collect(),
            s: DVector::from_iterator(m, s[..m].iter().copied()),
            zeta: vec![1.0],
            zeta_cov: 1.0,
        };
        let spec = ShockSpec { shock_variable: "v".into(), size_pp: -0.25, horizons: 120 };
        let path = compute_irf(&draw, 0, &spec).unwrap();
        let tail: f64 = path[120].iter().map(|v| v.abs()).fold(0.0, f64::max);
        prop_assert!(tail < 1e-6, "tail response {tail} has not decayed");
    }
}
