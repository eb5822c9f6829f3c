//! Acceptance suite: eight end-to-end criteria with pinned tolerances.
//! Each criterion prints one pass/fail line; the test fails if any
//! criterion does.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use papdyn_core::dde::{integrate, integrate_from, History};
use papdyn_core::fixedpoint::{picard_solve, FixedpointOptions};
use papdyn_core::measure::{default_z_schedule, ergodic_remainder, ergodicity_trend, WeightedMeasure};
use papdyn_core::model::NetModel;
use papdyn_core::presets::{scalar_linear, two_neuron_demo};
use papdyn_core::signal::{ActivationSpec, Domain, SignalExpr};
use papdyn_core::stability::{decay_rate, verify_decay, DEFAULT_SAFETY};

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
    seconds: f64,
}

fn criterion(
    name: &'static str,
    results: &mut Vec<Outcome>,
    body: impl FnOnce() -> Result<String, String>,
) {
    let start = Instant::now();
    let (passed, detail) = match body() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    results.push(Outcome { name, passed, detail, seconds: start.elapsed().as_secs_f64() });
}

fn ensure(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn golden_config() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs/two_neuron.toml")
        .to_string_lossy()
        .into_owned()
}

/// x'(t) = -x(t-1) with unit delay and no instantaneous decay; outside the
/// model contract (inf c = 0) so it is built without validation.
fn pure_delay_model() -> NetModel {
    let identity = ActivationSpec::from_table(vec![(-10.0, -10.0), (10.0, 10.0)]).unwrap();
    NetModel {
        n: 1,
        c: vec![SignalExpr::zero()],
        inputs: vec![SignalExpr::zero()],
        d: vec![vec![SignalExpr::zero()]],
        a: vec![vec![SignalExpr::constant(-1.0)]],
        b: vec![vec![vec![SignalExpr::zero()]]],
        tau: vec![vec![1.0]],
        sigma: vec![vec![1.0]],
        nu_delay: vec![vec![1.0]],
        f_act: vec![ActivationSpec::sine()],
        g_act: vec![identity],
        h_act: vec![ActivationSpec::sine()],
    }
}

fn lcg_stream(seed: u64) -> impl FnMut() -> f64 {
    let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
    move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }
}

fn c1_golden_constants() -> Result<String, String> {
    let (model, _, _) = two_neuron_demo();
    let c = model.constants_m7().map_err(|e| e.to_string())?;
    ensure((c.l - 0.4).abs() <= 1e-12, format!("L = {} != 0.4", c.l))?;
    ensure((c.p1 - 0.75).abs() <= 1e-12, format!("p1 = {} != 0.75", c.p1))?;
    ensure((c.q1 - 0.9).abs() <= 1e-12, format!("q1 = {} != 0.9", c.q1))?;
    ensure(
        (c.ball_radius - 1.2).abs() <= 1e-12,
        format!("radius = {} != 1.2", c.ball_radius),
    )?;
    let out = Command::new(env!("CARGO_BIN_EXE_papdyn"))
        .args(["check", "--config", &golden_config()])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.code() == Some(0), format!("check exited {:?}", out.status.code()))?;
    Ok(format!("L = {}, p1 = {}, q1 = {}, radius = {}; check exit 0", c.l, c.p1, c.q1, c.ball_radius))
}

fn c2_measure_bounds() -> Result<String, String> {
    let (_, mu, _) = two_neuron_demo();
    let e = std::f64::consts::E;
    let mut parts = Vec::new();
    for r in [1.0f64, 10.0, 100.0] {
        let mass = mu.mass(-r, r).map_err(|err| err.to_string())?;
        ensure(
            mass >= 2.0 * r / e && mass <= 2.0 * e * r,
            format!("mu([-{r},{r}]) = {mass} outside [{}, {}]", 2.0 * r / e, 2.0 * e * r),
        )?;
        parts.push(format!("mu([-{r},{r}]) = {mass:.6}"));
    }
    Ok(parts.join(", "))
}

fn c3_integrator() -> Result<String, String> {
    let model = pure_delay_model();
    let traj = integrate(&model, &History::Constant(vec![1.0]), 2.0, 1e-3)
        .map_err(|e| e.to_string())?;
    let x2 = traj.sample(2.0).map_err(|e| e.to_string())?[0];
    ensure((x2 + 0.5).abs() <= 1e-6, format!("x(2) = {x2}, expected -0.5"))?;

    let decay = scalar_linear(1.0, 0.0, 0.0);
    let exact = (-1f64).exp();
    let err_at = |h: f64| -> Result<f64, String> {
        let t = integrate(&decay, &History::Constant(vec![1.0]), 1.0, h)
            .map_err(|e| e.to_string())?;
        Ok((t.sample(1.0).map_err(|e| e.to_string())?[0] - exact).abs())
    };
    let factor = err_at(0.01)? / err_at(0.005)?;
    ensure(
        (12.0..=20.0).contains(&factor),
        format!("step-halving factor {factor} outside [12, 20]"),
    )?;
    Ok(format!("x(2) = {x2:.9}, halving factor {factor:.2}"))
}

fn c4_picard() -> Result<String, String> {
    let (model, _, _) = two_neuron_demo();
    let res = picard_solve(&model, &FixedpointOptions::default()).map_err(|e| e.to_string())?;
    ensure(
        res.empirical_ratio <= 0.95,
        format!("empirical ratio {} > 0.95", res.empirical_ratio),
    )?;
    ensure(res.residual <= 1e-7, format!("residual {} > 1e-7", res.residual))?;
    ensure(
        res.ball.inside && (res.ball.radius - 1.2).abs() <= 1e-12,
        format!("ball: distance {} radius {}", res.ball.distance, res.ball.radius),
    )?;
    Ok(format!(
        "{} iterations, ratio {:.4}, residual {:.3e}, distance {:.4} <= 1.2",
        res.iterations, res.empirical_ratio, res.residual, res.ball.distance
    ))
}

fn c5_fixed_point_solves_dde() -> Result<String, String> {
    let (model, _, _) = two_neuron_demo();
    let res = picard_solve(&model, &FixedpointOptions::default()).map_err(|e| e.to_string())?;
    let sol = Arc::new(res.solution);
    let t0 = 40.0;
    let hist_sol = Arc::clone(&sol);
    let history = History::Custom(Arc::new(move |t: f64| {
        (0..2).map(|i| hist_sol.sample_component(t, i)).collect()
    }));
    let traj = integrate_from(&model, &history, t0, t0 + 10.0, 1e-3)
        .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for k in 0..=1000 {
        let t = t0 + k as f64 * 0.01;
        for i in 0..2 {
            let a = traj.sample_component(t, i).map_err(|e| e.to_string())?;
            let b = sol.sample_component(t, i);
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-4, format!("sup deviation {worst} > 1e-4"))?;
    Ok(format!("sup deviation {worst:.3e} over 10 units"))
}

fn c6_stability_envelope() -> Result<String, String> {
    let (model, _, _) = two_neuron_demo();
    let cert = decay_rate(&model, DEFAULT_SAFETY).map_err(|e| e.to_string())?;
    ensure(cert.lambda > 0.0, format!("lambda = {}", cert.lambda))?;
    ensure(
        cert.margins.iter().all(|m| *m < 1.0),
        format!("margins {:?}", cert.margins),
    )?;
    let mut rand = lcg_stream(0xacce97);
    for pair in 0..5 {
        let ha = History::Constant(vec![rand(), rand()]);
        let hb = History::Constant(vec![rand(), rand()]);
        let v = verify_decay(&model, &ha, &hb, 20.0, 1e-2, &cert, None)
            .map_err(|e| e.to_string())?;
        ensure(
            v.envelope_holds,
            format!("pair {pair}: ratio {} at t = {}", v.max_ratio, v.t_worst),
        )?;
    }
    // a certificate claiming rate 5x lambda must be rejected: the margin
    // function goes negative for some component, so Eq-style margin >= 1
    let bb = model.bar_bounds().map_err(|e| e.to_string())?;
    let overstated = 5.0 * cert.lambda;
    let rejected = (0..model.n)
        .any(|i| papdyn_core::stability::f_decay(&model, &bb, i, overstated) <= 0.0);
    ensure(rejected, format!("rate {overstated} wrongly certifiable"))?;
    // and on a model whose true decay is slower, the overstated envelope
    // fails numerically as well
    let slow = scalar_linear(2.0, 1.0, 0.1);
    let slow_cert = decay_rate(&slow, DEFAULT_SAFETY).map_err(|e| e.to_string())?;
    let f = verify_decay(
        &slow,
        &History::Constant(vec![0.3]),
        &History::Constant(vec![-0.2]),
        20.0,
        1e-2,
        &slow_cert,
        Some(5.0 * slow_cert.lambda),
    )
    .map_err(|e| e.to_string())?;
    ensure(!f.envelope_holds, "5x-rate envelope not rejected on the scalar model".into())?;
    Ok(format!(
        "lambda = {:.6}, M = {:.4}, 5 history pairs bounded, 5x-rate certificate rejected",
        cert.lambda, cert.m_const
    ))
}

fn c7_scalar_root() -> Result<String, String> {
    // independent oracle: plain bisection on 2 - w - e^w
    let g = |w: f64| 2.0 - w - w.exp();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);
    let model = scalar_linear(2.0, 1.0, 0.1);
    let cert = decay_rate(&model, DEFAULT_SAFETY).map_err(|e| e.to_string())?;
    let root = cert.eps_star[0];
    ensure((root - 0.44285).abs() <= 1e-4, format!("root {root} != 0.44285 +- 1e-4"))?;
    ensure((root - oracle).abs() <= 1e-10, format!("root {root} vs oracle {oracle}"))?;
    Ok(format!("root {root:.10} vs oracle {oracle:.10}"))
}

fn c8_ergodic_suite() -> Result<String, String> {
    let (_, mu, nu) = two_neuron_demo();
    let sched = default_z_schedule();

    // calibration cases against the unweighted mean
    let leb = WeightedMeasure::lebesgue();
    let good = ergodicity_trend(|t: f64| (-t.abs()).exp(), &leb, &leb, f64::NEG_INFINITY, &sched, 1e-2)
        .map_err(|e| e.to_string())?;
    ensure(good.passed, format!("e^-|t| remainders {:?}", good.remainders))?;
    ensure(
        (good.trend_slope + 1.0).abs() <= 0.15,
        format!("e^-|t| slope {} not ~ -1", good.trend_slope),
    )?;

    let bad = ergodicity_trend(|t: f64| t.sin().abs(), &leb, &leb, f64::NEG_INFINITY, &sched, 1e-2)
        .map_err(|e| e.to_string())?;
    ensure(!bad.passed, "|sin t| wrongly judged ergodic".into())?;
    let last = *bad.remainders.last().unwrap();
    let two_over_pi = 2.0 / std::f64::consts::PI;
    ensure(
        (last - two_over_pi).abs() <= 0.02,
        format!("|sin t| remainder {last} not ~ 2/pi"),
    )?;

    // product closure on demo-style signals
    let y = SignalExpr::parse("(2*sin(t)+exp(-abs(t)))/10").map_err(|e| e.to_string())?;
    let z = SignalExpr::parse("(3*cos(sqrt(2)*t)+exp(-abs(t)))/10").map_err(|e| e.to_string())?;
    let (y_ap, y_erg) = y.decompose();
    let (z_ap, _) = z.decompose();
    let prod = ergodicity_trend(
        |t| y.eval_clamped(t) * z.eval_clamped(t) - y_ap.eval_clamped(t) * z_ap.eval_clamped(t),
        &mu,
        &nu,
        f64::NEG_INFINITY,
        &sched,
        1e-2,
    )
    .map_err(|e| e.to_string())?;
    ensure(prod.passed, format!("product remainders {:?}", prod.remainders))?;

    // composition closure with the Hölder bound at every z
    let w = SignalExpr::parse("exp(-abs(t))").map_err(|e| e.to_string())?;
    let (p, q) = (2.0, 2.0);
    let y_erg_sup = y_erg.sup_abs_bound(Domain::FullLine).map_err(|e| e.to_string())?;
    let w_norm = mu
        .integrate_weighted(-80.0, 80.0, |t| w.eval_clamped(t).powf(p))
        .map_err(|e| e.to_string())?
        .powf(1.0 / p);
    let lam = |t: f64, x: f64| w.eval_clamped(t) * x.sin();
    let remainder_fn = |t: f64| lam(t, y.eval_clamped(t - 1.0)) - lam(t, y_ap.eval_clamped(t - 1.0));
    for &z_pt in &sched {
        let r = ergodic_remainder(&remainder_fn, &mu, &nu, f64::NEG_INFINITY, z_pt)
            .map_err(|e| e.to_string())?;
        let mu_z = mu.mass(-z_pt, z_pt).map_err(|e| e.to_string())?;
        let nu_z = nu.mass(-z_pt, z_pt).map_err(|e| e.to_string())?;
        let bound = y_erg_sup * w_norm * (mu_z / nu_z).powf(1.0 / q) / nu_z.powf(1.0 / p);
        ensure(
            r <= bound * (1.0 + 1e-6),
            format!("composition remainder {r} > bound {bound} at z = {z_pt}"),
        )?;
    }
    Ok(format!(
        "e^-|t| slope {:.3}; |sin t| remainder {:.4} ~ 2/pi; product + composition closures bounded",
        good.trend_slope, last
    ))
}

#[test]
fn acceptance() {
    let mut results = Vec::new();
    criterion("1 golden constants", &mut results, c1_golden_constants);
    criterion("2 measure bounds", &mut results, c2_measure_bounds);
    criterion("3 integrator oracle", &mut results, c3_integrator);
    criterion("4 picard convergence", &mut results, c4_picard);
    criterion("5 fixed point solves dde", &mut results, c5_fixed_point_solves_dde);
    criterion("6 stability envelope", &mut results, c6_stability_envelope);
    criterion("7 scalar root", &mut results, c7_scalar_root);
    criterion("8 ergodic suite", &mut results, c8_ergodic_suite);

    let mut all_pass = true;
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {} ({:.2}s): {}", r.name, r.seconds, r.detail);
        all_pass &= r.passed;
    }
    assert!(all_pass, "one or more acceptance criteria failed");
}
