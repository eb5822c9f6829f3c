//! Closure of the AP + ergodic class under products and under composition
//! with Lipschitz-weighted nonlinearities, checked numerically against the
//! weighted-mean remainder and its Hölder bound.

use papdyn_core::measure::{default_z_schedule, ergodic_remainder, ergodicity_trend};
use papdyn_core::presets::two_neuron_demo;
use papdyn_core::signal::{Domain, SignalExpr};

fn sig(src: &str) -> SignalExpr {
    SignalExpr::parse(src).unwrap()
}

/// The product of two AP+ergodic signals stays in the class: the cross and
/// ergodic-only parts of the product are themselves ergodic.
#[test]
fn product_remainder_is_ergodic() {
    let (_, mu, nu) = two_neuron_demo();
    let y = sig("(2*sin(t)+exp(-abs(t)))/10");
    let z = sig("(3*cos(sqrt(2)*t)+exp(-abs(t)))/10");
    let (y_ap, _) = y.decompose();
    let (z_ap, _) = z.decompose();

    // both factors' ergodic parts decay in the weighted mean
    for s in [&y, &z] {
        let (_, erg) = s.decompose();
        let v = ergodicity_trend(
            |t| erg.eval_clamped(t),
            &mu,
            &nu,
            f64::NEG_INFINITY,
            &default_z_schedule(),
            1e-2,
        )
        .unwrap();
        assert!(v.passed, "factor remainder {:?}", v.remainders);
    }

    let v = ergodicity_trend(
        |t| y.eval_clamped(t) * z.eval_clamped(t) - y_ap.eval_clamped(t) * z_ap.eval_clamped(t),
        &mu,
        &nu,
        f64::NEG_INFINITY,
        &default_z_schedule(),
        1e-2,
    )
    .unwrap();
    assert!(v.passed, "product remainder {:?} slope {}", v.remainders, v.trend_slope);
    assert!(v.trend_slope < -0.5, "slope {}", v.trend_slope);
}

/// Composition with x ↦ w(t) sin(x) and a delayed AP+ergodic argument: the
/// remainder at each z respects the Hölder bound
/// ‖y_erg‖∞ ‖w‖_{p,μ} (μ([-z,z])/ν([-z,z]))^{1/q} / ν([-z,z])^{1/p}.
#[test]
fn composition_remainder_respects_weighted_norm_bound() {
    let (_, mu, nu) = two_neuron_demo();
    let w = sig("exp(-abs(t))");
    let y = sig("(2*sin(t)+3*exp(-abs(t)))/10");
    let (y_ap, y_erg) = y.decompose();
    let theta = 1.0;
    let p = 2.0;
    let q = 2.0;

    let y_erg_sup = y_erg.sup_abs_bound(Domain::FullLine).unwrap();
    // μ-weighted L^p norm of the weight; the integrand decays like e^{-2|t|}
    // so [-80, 80] leaves no visible tail
    let w_norm = mu
        .integrate_weighted(-80.0, 80.0, |t| w.eval_clamped(t).powf(p))
        .unwrap()
        .powf(1.0 / p);

    let lam = |t: f64, x: f64| w.eval_clamped(t) * x.sin();
    let remainder_fn =
        |t: f64| lam(t, y.eval_clamped(t - theta)) - lam(t, y_ap.eval_clamped(t - theta));

    for z in default_z_schedule() {
        let r = ergodic_remainder(&remainder_fn, &mu, &nu, f64::NEG_INFINITY, z).unwrap();
        let mu_z = mu.mass(-z, z).unwrap();
        let nu_z = nu.mass(-z, z).unwrap();
        let bound = y_erg_sup * w_norm * (mu_z / nu_z).powf(1.0 / q) / nu_z.powf(1.0 / p);
        assert!(
            r <= bound * (1.0 + 1e-6),
            "remainder {r} exceeds bound {bound} at z = {z}"
        );
    }

    // and the composed remainder is itself ergodic
    let v = ergodicity_trend(
        &remainder_fn,
        &mu,
        &nu,
        f64::NEG_INFINITY,
        &default_z_schedule(),
        1e-2,
    )
    .unwrap();
    assert!(v.passed, "composition remainder {:?}", v.remainders);
}
