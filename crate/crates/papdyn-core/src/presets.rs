//! Built-in models used by tests, benchmarks, and the CLI demo configs.

use crate::measure::WeightedMeasure;
use crate::model::NetModel;
use crate::parse::parse_expr;
use crate::signal::{ActivationSpec, SignalExpr};

fn sig(src: &str) -> SignalExpr {
    SignalExpr::parse(src).expect("preset signal")
}

/// The two-neuron demo network with sinusoidal activations, unit delays, and
/// mixed trig/decay coefficients, together with its measure pair
/// (density e^{sin t}, and the two-piece density e^t / 1 split at 0).
pub fn two_neuron_demo() -> (NetModel, WeightedMeasure, WeightedMeasure) {
    let model = NetModel {
        n: 2,
        c: vec![sig("2"), sig("2")],
        inputs: vec![sig("(8*cos(sqrt(5)*t))/10"), sig("(5*sin(t)+exp(-t))/10")],
        d: vec![
            vec![sig("(2*sin(t)+exp(-t))/10"), sig("cos(t)/10")],
            vec![sig("(sin(sqrt(2)*t)+exp(-t))/10"), sig("(2*cos(sqrt(2)*t)+exp(-t))/10")],
        ],
        a: vec![
            vec![sig("(cos(t)+exp(-t))/10"), sig("sin(t)/10")],
            vec![sig("(4*cos(t)+exp(-t))/10"), sig("(sin(t)+exp(-t))/10")],
        ],
        b: vec![
            vec![
                vec![sig("0"), sig("(3*sin(sqrt(3)*t)+exp(-t))/10")],
                vec![sig("0"), sig("0")],
            ],
            vec![
                vec![sig("0"), sig("(2*cos(sqrt(5)*t)+exp(-t))/10")],
                vec![sig("0"), sig("0")],
            ],
        ],
        tau: vec![vec![1.0; 2]; 2],
        sigma: vec![vec![1.0; 2]; 2],
        nu_delay: vec![vec![1.0; 2]; 2],
        f_act: vec![ActivationSpec::sine(), ActivationSpec::sine()],
        g_act: vec![ActivationSpec::sine(), ActivationSpec::sine()],
        h_act: vec![ActivationSpec::sine(), ActivationSpec::sine()],
    };
    let model = model.validate().expect("demo model is valid");
    let mu = WeightedMeasure::new("rho1", parse_expr("exp(sin(t))").unwrap()).unwrap();
    let nu = WeightedMeasure::split(
        "rho2",
        parse_expr("exp(t)").unwrap(),
        parse_expr("1").unwrap(),
        0.0,
    )
    .unwrap();
    (model, mu, nu)
}

/// Scalar model `x' = -c x + a_bar sin(x(t-1)) + input` with unit delay.
pub fn scalar_linear(c: f64, a_bar: f64, input: f64) -> NetModel {
    NetModel {
        n: 1,
        c: vec![SignalExpr::constant(c)],
        inputs: vec![SignalExpr::constant(input)],
        d: vec![vec![SignalExpr::zero()]],
        a: vec![vec![SignalExpr::constant(a_bar)]],
        b: vec![vec![vec![SignalExpr::zero()]]],
        tau: vec![vec![1.0]],
        sigma: vec![vec![1.0]],
        nu_delay: vec![vec![1.0]],
        f_act: vec![ActivationSpec::sine()],
        g_act: vec![ActivationSpec::sine()],
        h_act: vec![ActivationSpec::sine()],
    }
    .validate()
    .expect("scalar model is valid")
}

/// Scalar contraction toy `x' = -x + 0.5 x(t) + 1`: the instantaneous
/// coupling uses a clamped identity activation so the stationary balance
/// sits at x = 2.
pub fn scalar_contraction_toy() -> NetModel {
    let identity =
        ActivationSpec::from_table(vec![(-10.0, -10.0), (10.0, 10.0)]).expect("identity table");
    NetModel {
        n: 1,
        c: vec![SignalExpr::constant(1.0)],
        inputs: vec![SignalExpr::constant(1.0)],
        d: vec![vec![SignalExpr::constant(0.5)]],
        a: vec![vec![SignalExpr::zero()]],
        b: vec![vec![vec![SignalExpr::zero()]]],
        tau: vec![vec![1.0]],
        sigma: vec![vec![1.0]],
        nu_delay: vec![vec![1.0]],
        f_act: vec![identity],
        g_act: vec![ActivationSpec::sine()],
        h_act: vec![ActivationSpec::sine()],
    }
    .validate()
    .expect("contraction toy is valid")
}
