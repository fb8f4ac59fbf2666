use escape_dim::annular::*;
use escape_dim::dimension::{thin_formula, DimError};
use escape_dim::levelnum::LevelReal;
use escape_dim::sequences::{AssumptionParams, Band, LambdaSpec};
use escape_dim::series::ExprId;
use proptest::prelude::*;

const E: f64 = std::f64::consts::E;

fn spec(s: SRule, scheme: Scheme) -> ItinerarySpec {
    ItinerarySpec { s, scheme }
}

fn band(it: &ItinerarySpec) -> Band {
    Band::new(itinerary_band(it, &LambdaSpec::default())).unwrap()
}

fn params(horizon: usize) -> AssumptionParams {
    AssumptionParams { horizon, ..Default::default() }
}

#[test]
fn power_band_from_linear_itinerary() {
    let b = band(&spec(SRule::Linear { slope: 1.0, offset: 1.0 }, Scheme::Power { r: E }));
    for n in 1..=10 {
        let nf = n as f64;
        assert!((b.ln_a(n).unwrap().to_f64() - (nf + 1.0)).abs() < 1e-12);
        assert!((b.ln_b(n).unwrap().to_f64() - (nf + 2.0)).abs() < 1e-12);
        assert!((b.delta(n).unwrap().value.to_f64() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn stretched_band_first_terms() {
    let b = band(&spec(SRule::Explicit { values: vec![3.0, 4.0] }, Scheme::Stretched { r: E, kappa: 2.0 }));
    assert!((b.ln_a(1).unwrap().to_f64() - 9.0).abs() < 1e-12);
    assert!((b.ln_b(1).unwrap().to_f64() - 16.0).abs() < 1e-12);
    assert!((b.delta(1).unwrap().value.to_f64() - 7.0).abs() < 1e-12);
}

#[test]
fn example_recurrence_second_term() {
    let it = Itinerary::new(example_itinerary(0.3, 2.0, E)).unwrap();
    let s2 = it.s(2).unwrap();
    // oracle: binary64 e^{0.3 · 2²}
    let want = (0.3f64 * 4.0).exp();
    assert!((s2.raw.to_f64() - want).abs() < 1e-12);
    assert!((want - 3.32).abs() < 1e-2);
    assert_eq!(s2.s.to_f64(), 3.0);
}

proptest! {
    #[test]
    fn compiled_logs_match_itinerary(values in prop::collection::vec(1u32..5000, 1..20), r in 1.5f64..100.0, kappa in 1.1f64..4.0) {
        let values: Vec<f64> = values.into_iter().map(f64::from).collect();
        let ln_r = r.ln();
        let pow = band(&spec(SRule::Explicit { values: values.clone() }, Scheme::Power { r }));
        let st = band(&spec(SRule::Explicit { values: values.clone() }, Scheme::Stretched { r, kappa }));
        for (i, s) in values.iter().enumerate() {
            let n = i + 1;
            let want_p = s * ln_r;
            let want_s = s.powf(kappa) * ln_r;
            prop_assert!((pow.ln_a(n).unwrap().to_f64() - want_p).abs() <= 1e-14 * want_p.abs().max(1.0));
            prop_assert!((st.ln_a(n).unwrap().to_f64() - want_s).abs() <= 1e-13 * want_s.abs().max(1.0));
            let want_b = (s + 1.0).powf(kappa) * ln_r;
            prop_assert!((st.ln_b(n).unwrap().to_f64() - want_b).abs() <= 1e-13 * want_b.abs().max(1.0));
        }
    }
}

fn stretched_samples() -> Vec<(ItinerarySpec, usize)> {
    vec![
        (example_itinerary(0.3, 2.0, E), 8),
        (example_itinerary(0.45, 2.0, E), 8),
        (spec(SRule::Linear { slope: 1.0, offset: 0.0 }, Scheme::Stretched { r: E, kappa: 2.0 }), 40),
        (spec(SRule::Linear { slope: 3.0, offset: 1.0 }, Scheme::Stretched { r: 10.0, kappa: 1.5 }), 40),
        (spec(SRule::Linear { slope: 2.0, offset: 5.0 }, Scheme::Stretched { r: 4.0, kappa: 3.5 }), 40),
    ]
}

#[test]
fn mean_value_sandwich() {
    for (it, horizon) in stretched_samples() {
        let Scheme::Stretched { r, kappa } = it.scheme else { unreachable!() };
        let itin = Itinerary::new(it.clone()).unwrap();
        for n in 1..=horizon {
            let (Ok(s), Ok(delta)) = (itin.s(n), itin.delta(n)) else { break };
            let s = s.s;
            let lo = s.powf(kappa - 1.0).and_then(|p| p.scale(kappa * r.ln())).unwrap();
            let hi = s.add(LevelReal::ONE).and_then(|p| p.powf(kappa - 1.0)).and_then(|p| p.scale(kappa * r.ln())).unwrap();
            assert!(delta.scale(1.0 + 1e-12).unwrap() >= lo, "{it:?} n = {n}: Δ below κ s^(κ-1) ln R");
            assert!(delta <= hi.scale(1.0 + 1e-12).unwrap(), "{it:?} n = {n}: Δ above κ (s+1)^(κ-1) ln R");
        }
    }
}

#[test]
fn log_delta_sandwich_with_computed_constant() {
    for (it, horizon) in stretched_samples() {
        let Scheme::Stretched { r, kappa } = it.scheme else { unreachable!() };
        let c1 = mean_value_constant(kappa, r);
        let itin = Itinerary::new(it.clone()).unwrap();
        for n in 1..=horizon {
            let (Ok(s), Ok(delta)) = (itin.s(n), itin.delta(n)) else { break };
            let gap = delta.ln().unwrap().sub(s.s.ln().unwrap().scale(kappa - 1.0).unwrap()).unwrap();
            assert!(gap.to_f64().abs() <= c1 + 1e-9, "{it:?} n = {n}: gap {gap} vs c1 {c1}");
        }
    }
}

#[test]
fn admissibility_power_violation() {
    let it = spec(SRule::Explicit { values: vec![2.0, 50.0, 51.0, 52.0] }, Scheme::Power { r: 10.0 });
    let adm = check_itinerary_admissible(&it, &LambdaSpec::default(), 0.5, 4).unwrap();
    assert_eq!(adm.rule.first_violation, Some(1));
    assert_eq!(adm.exact.as_ref().unwrap().first_violation, Some(1));
    assert_eq!(adm.rule.admissible_from, Some(2));
}

#[test]
fn admissibility_example_recurrence() {
    let it = example_itinerary(0.3, 2.0, E);
    let adm = check_itinerary_admissible(&it, &LambdaSpec::default(), 0.9, 8).unwrap();
    assert_eq!(adm.rule.first_violation, None);
    assert_eq!(adm.rule.admissible_from, Some(1));
    assert!(adm.checked_through >= 7);
}

#[test]
fn admissibility_successor_itinerary() {
    // s_{n+1} = s_n + 1 from s_1 = 2
    for r in [E, 10.0, 100.0] {
        let it = spec(SRule::Linear { slope: 1.0, offset: 1.0 }, Scheme::Stretched { r, kappa: 2.0 });
        let adm = check_itinerary_admissible(&it, &LambdaSpec::default(), 0.5, 30).unwrap();
        assert_eq!(adm.rule.admissible_from, Some(1), "R = {r}");
    }
    // from s_1 = 1 the first step fails at R = e
    let it = spec(SRule::Linear { slope: 1.0, offset: 0.0 }, Scheme::Stretched { r: E, kappa: 2.0 });
    let adm = check_itinerary_admissible(&it, &LambdaSpec::default(), 0.5, 30).unwrap();
    assert_eq!(adm.rule.first_violation, Some(1));
    assert_eq!(adm.rule.admissible_from, Some(2));
}

#[test]
fn power_linear_itinerary_has_dimension_one() {
    let it = spec(SRule::Linear { slope: 1.0, offset: 0.0 }, Scheme::Power { r: DEFAULT_R });
    let r = power_annular_dims(&it, &LambdaSpec::default(), &params(40)).unwrap();
    assert_eq!([r.hausdorff.lo.value, r.hausdorff.hi.value], [1.0, 1.0]);
    assert_eq!([r.packing.lo.value, r.packing.hi.value], [1.0, 1.0]);
    assert!(r.applied.iter().any(|a| a.result == "annular-power" && a.conclusion == "dim_H = dim_P = 1"));
    // oracle: (1 + ⋯ + n)/n = (n+1)/2
    let mean = r.series(ExprId::ItineraryMean).unwrap();
    for &(n, v) in &mean.values {
        assert!((v - (n as f64 + 1.0) / 2.0).abs() < 1e-12);
    }
}

#[test]
fn power_constant_itinerary_is_inconclusive() {
    let it = spec(SRule::Constant { value: 3.0 }, Scheme::Power { r: DEFAULT_R });
    let r = power_annular_dims(&it, &LambdaSpec::default(), &params(40)).unwrap();
    assert_eq!([r.hausdorff.lo.value, r.hausdorff.hi.value], [1.0, 2.0]);
    assert_eq!([r.packing.lo.value, r.packing.hi.value], [1.0, 2.0]);
    assert!(r.applied.iter().all(|a| a.result != "annular-power"));
    let mean = r.series(ExprId::ItineraryMean).unwrap();
    assert!(mean.values.iter().all(|v| v.1 == 3.0));
}

#[test]
fn power_log_itinerary_witnesses_limsup_only() {
    let it = spec(SRule::Log2 { shift: 2.0 }, Scheme::Power { r: DEFAULT_R });
    let r = power_annular_dims(&it, &LambdaSpec::default(), &params(40)).unwrap();
    assert_eq!(r.hausdorff.hi.value, 1.0);
    let ap: Vec<_> = r.applied.iter().filter(|a| a.result == "annular-power").collect();
    assert_eq!(ap.len(), 1);
    assert_eq!(ap[0].conclusion, "dim_H <= 1");
    assert!(ap[0].witness.starts_with("Limsup"));
    assert!(r.diagnostics.iter().any(|d| d.contains("only limsup")));
}

#[test]
fn stretched_linear_itinerary_has_packing_one() {
    let it = spec(SRule::Linear { slope: 1.0, offset: 0.0 }, Scheme::Stretched { r: E, kappa: 2.0 });
    let r = stretched_annular_dims(&it, &LambdaSpec::default(), &params(40)).unwrap();
    let est = r.packing_estimate.as_ref().unwrap();
    assert_eq!(est.source, "annular-stretched");
    assert!((est.value - 1.0).abs() < 1e-3, "{est:?}");
    // oracle: ln(n+1) / Σ k² with (κ−1)/ln R = 1
    let p = r.series(ExprId::ItineraryPacking).unwrap();
    for &(n, v) in &p.values {
        let sq: f64 = (1..=n).map(|k| (k * k) as f64).sum();
        assert!((v - ((n + 1) as f64).ln() / sq).abs() < 1e-12);
    }
}

#[test]
fn stretched_refuses_without_hypotheses() {
    let it = spec(SRule::Linear { slope: 1.0, offset: 0.0 }, Scheme::Power { r: E });
    assert!(matches!(stretched_annular_dims(&it, &LambdaSpec::default(), &params(10)), Err(DimError::Refused(_))));
    // ln s_3 = ln 10⁶ exceeds (ln q)/2 + s_2²/2 at n = 2, the last checked index
    let bad = spec(SRule::Explicit { values: vec![2.0, 3.0, 1e6, 1e6] }, Scheme::Stretched { r: E, kappa: 2.0 });
    let e = stretched_annular_dims(&bad, &LambdaSpec::default(), &params(3)).unwrap_err();
    assert!(matches!(e, DimError::Refused(ref m) if m.contains("fails at n = 2")), "{e}");
}

#[test]
fn example_packing_dimension_tracks_d() {
    for d in [0.0, 0.3, 0.45] {
        let r = annular_example(d, 2.0, E, &LambdaSpec::default(), &params(8)).unwrap();
        let est = r.packing_estimate.as_ref().unwrap();
        assert!((est.value - (1.0 + d)).abs() < 1e-3, "d = {d}: {est:?}");
        assert!(est.value < 1.5);
        assert_eq!([r.hausdorff.lo.value, r.hausdorff.hi.value], [1.0, 1.0]);
        assert!(r.measured_d.is_some());
        assert!(r.diagnostics.iter().any(|m| m.starts_with("itinerary admissible")));
    }
}

#[test]
fn example_boundary_d_zero_is_one_one() {
    let r = annular_example(0.0, 2.0, E, &LambdaSpec::default(), &params(8)).unwrap();
    assert_eq!([r.packing.lo.value, r.packing.hi.value], [1.0, 1.0]);
    assert_eq!(r.measured_d.as_ref().unwrap().value, 0.0);
}

#[test]
fn example_refuses_large_d() {
    for (d, kappa) in [(0.6, 2.0), (0.5, 2.0), (-0.1, 2.0), (0.7, 3.0), (0.1, 1.0)] {
        let e = annular_example(d, kappa, E, &LambdaSpec::default(), &params(8)).unwrap_err();
        assert!(matches!(e, DimError::Refused(_)), "d = {d}, κ = {kappa}");
    }
    assert!(annular_example(0.6, 3.0, E, &LambdaSpec::default(), &params(8)).is_ok());
}

#[test]
fn example_packing_series_oracle() {
    // binary64 recurrence through s_3, then ln s_4 = 0.3 raw_3²
    let raw2 = 1.2f64.exp();
    let raw3 = (0.3 * raw2 * raw2).exp();
    let s3 = raw3.floor();
    let want = [3f64.ln() / 4.0, s3.ln() / 13.0, 0.3 * raw3 * raw3 / (13.0 + s3 * s3)];
    let r = annular_example(0.3, 2.0, E, &LambdaSpec::default(), &params(8)).unwrap();
    let p = r.series(ExprId::ItineraryPacking).unwrap();
    for (i, w) in want.iter().enumerate() {
        assert_eq!(p.values[i].0, i + 1);
        assert!((p.values[i].1 - w).abs() < 1e-12, "n = {}: {} vs {w}", i + 1, p.values[i].1);
    }
}

#[test]
fn itinerary_packing_agrees_with_band_packing_series() {
    for d in [0.3, 0.45] {
        let it = example_itinerary(d, 2.0, E);
        let p = params(8);
        let r = stretched_annular_dims(&it, &LambdaSpec::default(), &p).unwrap();
        let mine = r.series(ExprId::ItineraryPacking).unwrap();
        let thin = thin_formula(&band(&it), &p).unwrap();
        let theirs = thin.series(ExprId::PackingUpper).unwrap();
        let (n, v) = *theirs.values.last().unwrap();
        let w = mine.values.iter().find(|x| x.0 == n).expect("same index").1;
        assert!((v - w).abs() < 1e-9, "d = {d}, n = {n}: {v} vs {w}");
        let (a, b) = (r.packing_estimate.unwrap(), thin.packing_estimate.unwrap());
        let slack = a.residual.unwrap_or(0.0) + b.residual.unwrap_or(0.0) + 1e-9;
        assert!((a.value - b.value).abs() <= slack, "d = {d}: {a:?} vs {b:?}");
    }
}

#[test]
fn itinerary_file_round_trip() {
    let f = ItineraryFile::parse(
        "[itinerary]\nscheme = \"stretched\"\nR = 2.718281828459045\nkappa = 2.0\nd = 0.3\n\n[params]\nhorizon = 8\n",
    )
    .unwrap();
    assert_eq!(f.spec().unwrap(), example_itinerary(0.3, 2.0, E));
    assert_eq!(f.params.horizon, 8);
    let g = ItineraryFile::parse("[itinerary]\nscheme = \"power\"\nr = 10.0\ns = [2, 3, 5]\n").unwrap();
    assert_eq!(g.spec().unwrap(), spec(SRule::Explicit { values: vec![2.0, 3.0, 5.0] }, Scheme::Power { r: 10.0 }));
    let h = ItineraryFile::parse("[itinerary]\nscheme = \"power\"\nr = 10.0\n[itinerary.rule]\nrule = \"log2\"\nshift = 2.0\n").unwrap();
    assert_eq!(h.spec().unwrap().s, SRule::Log2 { shift: 2.0 });
}

#[test]
fn itinerary_file_rejects_ambiguity() {
    let both = ItineraryFile::parse("[itinerary]\nscheme = \"stretched\"\nr = 3.0\nkappa = 2.0\nd = 0.3\ns = [2, 3]\n").unwrap();
    assert!(both.spec().is_err());
    let no_kappa = ItineraryFile::parse("[itinerary]\nscheme = \"stretched\"\nr = 3.0\nd = 0.3\n").unwrap();
    assert!(no_kappa.spec().is_err());
    assert!(ItineraryFile::parse("[itinerary]\nscheme = \"power\"\nr = 3.0\nbogus = 1\n").is_err());
    let zero = ItineraryFile::parse("[itinerary]\nscheme = \"power\"\nr = 3.0\ns = [0, 1]\n").unwrap();
    assert!(zero.spec().is_err());
}
