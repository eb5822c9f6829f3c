//! Direct integration of the delayed system by the method of steps: a
//! classical 4th-order one-step method on a uniform grid, with delayed
//! arguments resolved through cubic Hermite dense output on the already
//! computed prefix.

use std::sync::Arc;

use crate::error::Error;
use crate::model::NetModel;
use crate::parse::MathExpr;
use crate::Result;

/// Initial function on `[-theta, 0]`.
#[derive(Clone)]
pub enum History {
    Constant(Vec<f64>),
    Exprs(Vec<MathExpr>),
    Custom(Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>),
}

impl std::fmt::Debug for History {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            History::Constant(v) => write!(f, "History::Constant({v:?})"),
            History::Exprs(e) => write!(f, "History::Exprs({} components)", e.len()),
            History::Custom(_) => write!(f, "History::Custom(..)"),
        }
    }
}

impl History {
    pub fn eval(&self, t: f64) -> Vec<f64> {
        match self {
            History::Constant(v) => v.clone(),
            History::Exprs(es) => es.iter().map(|e| e.eval(t)).collect(),
            History::Custom(f) => f(t),
        }
    }

    fn eval_component(&self, t: f64, i: usize) -> f64 {
        match self {
            History::Constant(v) => v[i],
            History::Exprs(es) => es[i].eval(t),
            History::Custom(f) => f(t)[i],
        }
    }
}

/// A C1 sampled solution on a uniform grid with history fallback below `t0`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t0: f64,
    pub step: f64,
    pub n: usize,
    /// node-major: `values[k * n + i]`
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    pub history: History,
    /// history depth: samples are defined down to `t0 - theta`
    pub theta: f64,
}

impl Trajectory {
    pub fn nodes(&self) -> usize {
        self.values.len() / self.n
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.step * (self.nodes() - 1) as f64
    }

    pub fn value_at_node(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    /// Dense evaluation: history below `t0`, cubic Hermite inside the grid,
    /// node-exact at grid points.
    pub fn sample(&self, t: f64) -> Result<Vec<f64>> {
        (0..self.n).map(|i| self.sample_component(t, i)).collect()
    }

    pub fn sample_component(&self, t: f64, i: usize) -> Result<f64> {
        let eps = self.step * 1e-9;
        if t <= self.t0 {
            if t < self.t0 - self.theta - eps {
                return Err(Error::HistoryOutOfRange { t, min: self.t0 - self.theta });
            }
            return Ok(self.history.eval_component(t, i));
        }
        let last = self.t_end();
        if t > last + eps {
            return Err(Error::Invalid(format!(
                "sample at t = {t} beyond the computed range [{}, {last}]",
                self.t0
            )));
        }
        let s = (t - self.t0) / self.step;
        let k = (s.floor() as usize).min(self.nodes() - 2);
        let u = s - k as f64;
        // node-exact
        if u.abs() < 1e-12 {
            return Ok(self.values[k * self.n + i]);
        }
        if (u - 1.0).abs() < 1e-12 {
            return Ok(self.values[(k + 1) * self.n + i]);
        }
        let y0 = self.values[k * self.n + i];
        let y1 = self.values[(k + 1) * self.n + i];
        let d0 = self.derivs[k * self.n + i] * self.step;
        let d1 = self.derivs[(k + 1) * self.n + i] * self.step;
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        Ok(h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1)
    }

    /// CSV export: header `t,x_1,...,x_n`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.n {
            out.push_str(&format!(",x_{i}"));
        }
        out.push('\n');
        for k in 0..self.nodes() {
            let t = self.t0 + k as f64 * self.step;
            out.push_str(&format!("{t:.16e}"));
            for i in 0..self.n {
                out.push_str(&format!(",{:.16e}", self.values[k * self.n + i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Integrates the system on `[0, t_end]` by the method of steps.
///
/// Every delayed stage lookup at `t + alpha*h - delay` with `alpha <= 1`
/// refers to a time at or before the current node, so the already computed
/// prefix (plus the history) always covers it.
pub fn integrate(
    model: &NetModel,
    history: &History,
    t_end: f64,
    step: f64,
) -> Result<Trajectory> {
    integrate_from(model, history, 0.0, t_end, step)
}

/// Same as [`integrate`], but starting at an absolute time `t0` (the
/// coefficients are time-varying, so the start matters). The history covers
/// `[t0 - theta, t0]` in absolute time and `t_end` is absolute too.
pub fn integrate_from(
    model: &NetModel,
    history: &History,
    t0: f64,
    t_end: f64,
    step: f64,
) -> Result<Trajectory> {
    if !(step > 0.0) || !(t_end > t0) {
        return Err(Error::Invalid(format!(
            "need step > 0 and t_end > t0, got step {step} on [{t0}, {t_end}]"
        )));
    }
    let min_delay = model.min_delay();
    if step > min_delay * (1.0 + 1e-12) {
        return Err(Error::StepExceedsDelay { step, min_delay });
    }
    let n = model.n;
    let steps = (((t_end - t0) / step) - 1e-9).ceil().max(1.0) as usize;
    let theta = model.theta();

    let mut traj = Trajectory {
        t0,
        step,
        n,
        values: Vec::with_capacity((steps + 1) * n),
        derivs: Vec::with_capacity((steps + 1) * n),
        history: history.clone(),
        theta,
    };
    traj.values.extend_from_slice(&history.eval(t0));

    let lookup = |traj: &Trajectory, t: f64, i: usize| -> f64 {
        traj.sample_component(t, i).expect("delayed lookup inside covered range")
    };

    let mut y = traj.values.clone();
    let rhs_at = |traj: &Trajectory, t: f64, y: &[f64]| -> Vec<f64> {
        model.rhs(t, y, |tq, i| lookup(traj, tq, i))
    };

    let k1_first = rhs_at(&traj, t0, &y);
    traj.derivs.extend_from_slice(&k1_first);
    let mut k1 = k1_first;

    for kstep in 0..steps {
        let t = t0 + kstep as f64 * step;
        let half = 0.5 * step;
        let y2: Vec<f64> = (0..n).map(|i| y[i] + half * k1[i]).collect();
        let k2 = rhs_at(&traj, t + half, &y2);
        let y3: Vec<f64> = (0..n).map(|i| y[i] + half * k2[i]).collect();
        let k3 = rhs_at(&traj, t + half, &y3);
        let y4: Vec<f64> = (0..n).map(|i| y[i] + step * k3[i]).collect();
        let k4 = rhs_at(&traj, t + step, &y4);
        let next: Vec<f64> = (0..n)
            .map(|i| y[i] + step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(t + step));
        }
        traj.values.extend_from_slice(&next);
        // endpoint derivative, reused as the next step's first stage
        let knext = rhs_at(&traj, t + step, &next);
        traj.derivs.extend_from_slice(&knext);
        y = next;
        k1 = knext;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{scalar_contraction_toy, scalar_linear};
    use crate::signal::{ActivationSpec, SignalExpr};
    use approx::assert_relative_eq;

    /// x' = -x(t-1) with no instantaneous decay: built without validation
    /// because inf c = 0 is outside the model contract, but the integrator
    /// only needs positive delays.
    fn pure_delay_model() -> NetModel {
        let identity =
            ActivationSpec::from_table(vec![(-10.0, -10.0), (10.0, 10.0)]).unwrap();
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

    #[test]
    fn exponential_decay() {
        let model = scalar_linear(1.0, 0.0, 0.0);
        let traj = integrate(&model, &History::Constant(vec![1.0]), 1.0, 1e-3).unwrap();
        let x1 = traj.sample(1.0).unwrap()[0];
        assert!((x1 - (-1f64).exp()).abs() < 1e-8, "x(1) = {x1}");
    }

    #[test]
    fn convergence_order_is_fourth() {
        let model = scalar_linear(1.0, 0.0, 0.0);
        let exact = (-1f64).exp();
        let err = |h: f64| {
            let traj = integrate(&model, &History::Constant(vec![1.0]), 1.0, h).unwrap();
            (traj.sample(1.0).unwrap()[0] - exact).abs()
        };
        let factor = err(0.01) / err(0.005);
        assert!((12.0..=20.0).contains(&factor), "order factor {factor}");
    }

    #[test]
    fn delayed_equation_matches_piecewise_closed_form() {
        let model = pure_delay_model();
        let traj = integrate(&model, &History::Constant(vec![1.0]), 2.0, 1e-3).unwrap();
        let x2 = traj.sample(2.0).unwrap()[0];
        assert!((x2 - (-0.5)).abs() < 1e-6, "x(2) = {x2}");
        // sup-norm over [0, 2] against the hand method-of-steps solution
        let exact = |t: f64| {
            if t <= 1.0 {
                1.0 - t
            } else {
                t * t / 2.0 - 2.0 * t + 1.5
            }
        };
        let mut sup = 0.0f64;
        for k in 0..=2000 {
            let t = k as f64 * 1e-3;
            sup = sup.max((traj.sample(t).unwrap()[0] - exact(t)).abs());
        }
        assert!(sup < 1e-6, "sup error {sup}");
    }

    #[test]
    fn zero_model_stays_zero() {
        let mut model = pure_delay_model();
        model.a[0][0] = SignalExpr::zero();
        let traj = integrate(&model, &History::Constant(vec![0.7]), 3.0, 0.01).unwrap();
        // rhs is identically 0, so the state freezes at the junction value
        for k in 1..traj.nodes() {
            assert_relative_eq!(traj.value_at_node(k)[0], 0.7, epsilon = 1e-14);
        }
    }

    #[test]
    fn sample_is_node_exact_and_falls_back_to_history() {
        let model = scalar_contraction_toy();
        let traj = integrate(&model, &History::Constant(vec![0.3]), 2.0, 0.01).unwrap();
        for k in [0, 17, 100, traj.nodes() - 1] {
            let t = traj.t0 + k as f64 * traj.step;
            assert_eq!(traj.sample(t).unwrap()[0], traj.value_at_node(k)[0]);
        }
        assert_eq!(traj.sample(-0.5).unwrap()[0], 0.3);
        assert!(traj.sample(-1.5).is_err());
        assert!(traj.sample(2.5).is_err());
    }

    #[test]
    fn hermite_reproduces_cubics() {
        // hand-built trajectory holding x(t) = t^3 exactly at nodes
        let h = 0.25;
        let nodes = 9;
        let values: Vec<f64> = (0..nodes).map(|k| (k as f64 * h).powi(3)).collect();
        let derivs: Vec<f64> = (0..nodes).map(|k| 3.0 * (k as f64 * h).powi(2)).collect();
        let traj = Trajectory {
            t0: 0.0,
            step: h,
            n: 1,
            values,
            derivs,
            history: History::Constant(vec![0.0]),
            theta: 1.0,
        };
        for k in 0..40 {
            let t = 0.05 * k as f64;
            assert_relative_eq!(traj.sample(t).unwrap()[0], t.powi(3), epsilon = 1e-13);
        }
    }

    #[test]
    fn step_larger_than_delay_is_rejected() {
        let model = scalar_linear(1.0, 0.5, 0.0);
        let err = integrate(&model, &History::Constant(vec![1.0]), 2.0, 1.5);
        assert!(matches!(err, Err(Error::StepExceedsDelay { .. })));
    }

    #[test]
    fn divergence_is_reported() {
        // x' = +5x via a negative "decay" signal
        let mut model = scalar_linear(1.0, 0.0, 0.0);
        model.c = vec![SignalExpr::constant(-50.0)];
        let res = integrate(&model, &History::Constant(vec![1e300]), 40.0, 0.01);
        assert!(matches!(res, Err(Error::Divergence(_))));
    }

    #[test]
    fn residual_matches_rhs_to_second_order() {
        let model = scalar_contraction_toy();
        let h = 1e-3;
        let traj = integrate(&model, &History::Constant(vec![0.5]), 3.0, h).unwrap();
        let fd = 1e-4;
        for &t in &[1.2003, 1.77717, 2.5001] {
            let plus = traj.sample(t + fd).unwrap()[0];
            let minus = traj.sample(t - fd).unwrap()[0];
            let dot = (plus - minus) / (2.0 * fd);
            let state = traj.sample(t).unwrap();
            let rhs = model.rhs(t, &state, |tq, i| traj.sample_component(tq, i).unwrap());
            assert!((dot - rhs[0]).abs() < 1e-5, "residual {} at t={t}", dot - rhs[0]);
        }
    }

    #[test]
    fn csv_shape() {
        let model = scalar_contraction_toy();
        let traj = integrate(&model, &History::Constant(vec![0.0]), 0.05, 0.01).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x_1");
        assert_eq!(csv.lines().count(), 1 + traj.nodes());
    }
}
