use emlab_core::constants::StableParams;
use emlab_core::dynamics::{AssumptionAParams, DiffusionSpec, DriftSpec, RadialTerm};
use emlab_core::noise::{window_probability, RadiusWindow, StreamRng};
use emlab_core::theory::{
    build_event, certify_regime, check_claim, estimate_event_probability, event_probability_exact,
    explicit_lower_bound, simulate_conditioned_path, EventSpec, PolynomialModel, RegimeInput, RegimeKind,
};
use proptest::prelude::*;

fn critical_input(alpha: f64, frac: f64, t: f64, n: usize, x0: Vec<f64>) -> RegimeInput {
    let p = StableParams::heavy_tailed(x0.len(), alpha).unwrap();
    RegimeInput::critical(true, p, alpha * frac, t, n, x0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn critical_claim_and_probability(
        alpha in 0.3f64..1.9,
        frac in 0.5f64..0.95,
        t in 20.0f64..200.0,
        extra in 0usize..200,
        x0 in prop::collection::vec(-5.0f64..5.0, 1..3),
        seed in any::<u64>(),
    ) {
        let n = t.ceil() as usize + extra;
        let cert = certify_regime(&critical_input(alpha, frac, t, n, x0)).unwrap();
        prop_assume!(cert.valid());
        let ev = build_event(&cert).unwrap();
        let exact = event_probability_exact(&ev).unwrap();
        prop_assert!(exact >= explicit_lower_bound(&cert).unwrap());
        prop_assert!(cert.growth_rate.unwrap() > 0.0);
        let s = check_claim(&cert, &ev, 20, seed).unwrap();
        prop_assert_eq!(s.held, 20);
    }

    #[test]
    fn polynomial_claim_and_probability(
        alpha in 0.3f64..1.9,
        theta in 1.2f64..3.0,
        lambda_frac in 0.1f64..0.9,
        h in 1.0f64..3.0,
        t in 0.5f64..5.0,
        n in 2usize..40,
        x0 in -2.0f64..2.0,
        seed in any::<u64>(),
    ) {
        let gamma = theta + 1.0;
        let lambda = 1.0 + lambda_frac * (gamma - 1.0);
        let model = PolynomialModel {
            drift: DriftSpec::PowerLaw { theta },
            diffusion: DiffusionSpec::Identity,
            growth: AssumptionAParams::new(gamma, lambda, h).unwrap(),
        };
        let p = StableParams::heavy_tailed(1, alpha).unwrap();
        let cert = certify_regime(&RegimeInput::polynomial(true, p, alpha / 2.0, t, n, vec![x0], model)).unwrap();
        prop_assume!(cert.valid());
        let ev = build_event(&cert).unwrap();
        prop_assert!(event_probability_exact(&ev).unwrap() >= explicit_lower_bound(&cert).unwrap());
        for i in 0..10 {
            let path = simulate_conditioned_path(&cert, &ev, &mut StreamRng::new(seed, i)).unwrap();
            prop_assert!(path.holds, "first violation at {:?}", path.first_violation);
        }
    }

    #[test]
    fn exact_probability_factorizes(alpha in 0.2f64..1.9, n in 1usize..30, ln_thr in 2.0f64..30.0, eta in 0.01f64..1.0) {
        let p = StableParams::heavy_tailed(1, alpha).unwrap();
        let ev = EventSpec {
            kind: RegimeKind::CriticalPareto,
            n,
            eta,
            alpha,
            d: 1,
            ln_threshold: ln_thr,
            window: RadiusWindow::new(1.0 + eta, 2.0 + 2.0 * eta).unwrap(),
            noise_scale: emlab_core::constants::sigma(p).unwrap(),
            m_const: None,
        };
        let r1 = ev.ln_first_radius().exp();
        let first = window_probability(p, RadiusWindow::tail(r1).unwrap()).unwrap();
        let w = window_probability(p, ev.window).unwrap();
        let direct = first.ln() + (n as f64 - 1.0) * w.ln();
        let exact = event_probability_exact(&ev).unwrap();
        prop_assert!((exact - direct).abs() <= 1e-10 * direct.abs().max(1.0));
    }
}

#[test]
fn claims_hold_for_scalar_and_radial_diffusion() {
    let p = StableParams::heavy_tailed(2, 1.2).unwrap();
    let scalar = PolynomialModel {
        drift: DriftSpec::PowerLaw { theta: 1.5 },
        diffusion: DiffusionSpec::Scalar(2.0),
        growth: AssumptionAParams::new(2.5, 1.2, 2.0).unwrap(),
    };
    let radial = PolynomialModel {
        drift: DriftSpec::Linear,
        diffusion: DiffusionSpec::Radial(vec![RadialTerm::new(1.0, 0.0, 0), RadialTerm::new(1.0, 2.0, 0)]),
        growth: AssumptionAParams::new(2.0, 1.5, 2.0).unwrap(),
    };
    for model in [scalar, radial] {
        let input = RegimeInput::polynomial(true, p, 0.6, 3.0, 12, vec![0.5, -0.5], model);
        let cert = certify_regime(&input).unwrap();
        assert!(cert.valid(), "{:?}", cert.failing());
        let ev = build_event(&cert).unwrap();
        let s = check_claim(&cert, &ev, 200, 9).unwrap();
        assert_eq!(s.held, 200);
    }
}

#[test]
fn raw_simulation_matches_exact_probability() {
    let p = StableParams::heavy_tailed(1, 1.0).unwrap();
    let model = PolynomialModel {
        drift: DriftSpec::PowerLaw { theta: 2.0 },
        diffusion: DiffusionSpec::Identity,
        growth: AssumptionAParams::new(3.0, 1.5, 1.0).unwrap(),
    };
    let cert = certify_regime(&RegimeInput::polynomial(true, p, 0.5, 2.0, 2, vec![0.0], model)).unwrap();
    let ev = build_event(&cert).unwrap();
    let exact = event_probability_exact(&ev).unwrap().exp();
    let est = estimate_event_probability(&ev, 2_000_000, 4).unwrap();
    assert!((est.p - exact).abs() <= 4.0 * est.std_error, "{est:?} vs {exact}");
}
