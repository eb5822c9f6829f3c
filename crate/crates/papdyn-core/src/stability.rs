//! Exponential decay certificate: per-component characteristic roots, the
//! certified decay rate and overshoot constant, and numerical verification of
//! the envelope against a pair of integrated trajectories.

use serde::Serialize;

use crate::dde::{integrate, History, Trajectory};
use crate::error::Error;
use crate::model::{BarBounds, NetModel};
use crate::Result;

/// `F_i(w) = c*_i - w - Σ_j [d̄ L^f + ā L^g e^{wτ} + Σ_l b̄ (L^h e^{wσ} M^h
/// + M^h L^h e^{wν})]`; strictly decreasing in `w`, and `F_i(0) > 0` is the
/// row form of the stability margin condition.
pub fn f_decay(model: &NetModel, bb: &BarBounds, i: usize, w: f64) -> f64 {
    let n = model.n;
    let mut sum = 0.0;
    for j in 0..n {
        sum += bb.d[i][j] * model.f_act[j].lipschitz_const;
        sum += bb.a[i][j] * model.g_act[j].lipschitz_const * (w * model.tau[i][j]).exp();
        for l in 0..n {
            sum += bb.b[i][j][l]
                * (model.h_act[j].lipschitz_const
                    * (w * model.sigma[i][j]).exp()
                    * model.h_act[l].bound_const
                    + model.h_act[j].bound_const
                        * model.h_act[l].lipschitz_const
                        * (w * model.nu_delay[i][j]).exp());
        }
    }
    bb.c_star[i] - w - sum
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayCertificate {
    /// per-component roots of the characteristic margin functions
    pub eps_star: Vec<f64>,
    /// min of the roots
    pub eta: f64,
    /// certified rate: safety factor times min(eta, min decay floor)
    pub lambda: f64,
    /// overshoot constant of the envelope
    pub m_const: f64,
    /// per-component contraction margins at lambda; all must be < 1
    pub margins: Vec<f64>,
    pub safety: f64,
}

pub const DEFAULT_SAFETY: f64 = 0.99;
const ROOT_TOL: f64 = 1e-12;

fn bisect_root(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    // f(lo) > 0 > f(hi); f strictly decreasing
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Computes the decay certificate: roots by bisection, the safety-scaled
/// rate, the overshoot constant, and the margin check at the chosen rate.
pub fn decay_rate(model: &NetModel, safety: f64) -> Result<DecayCertificate> {
    if !(safety > 0.0 && safety < 1.0) {
        return Err(Error::Invalid(format!("safety factor {safety} not in (0, 1)")));
    }
    let bb = model.bar_bounds()?;
    let n = model.n;

    let mut eps_star = vec![0.0; n];
    for i in 0..n {
        let f0 = f_decay(model, &bb, i, 0.0);
        if f0 <= 0.0 {
            return Err(Error::NoCertificate(format!(
                "margin function for component {} is nonpositive at zero ({f0:.6})",
                i + 1
            )));
        }
        let mut hi = 1.0;
        while f_decay(model, &bb, i, hi) > 0.0 {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::NoCertificate(format!(
                    "no sign change for component {} below w = 1e6",
                    i + 1
                )));
            }
        }
        eps_star[i] = bisect_root(0.0, hi, |w| f_decay(model, &bb, i, w));
    }

    let eta = eps_star.iter().cloned().fold(f64::INFINITY, f64::min);
    let c_min = bb.c_star.iter().cloned().fold(f64::INFINITY, f64::min);
    let lambda = safety * eta.min(c_min);

    // overshoot: max over rows of c* over the undamped coupling sum
    let mut m_const = 0.0f64;
    let mut any_coupling = false;
    for i in 0..n {
        let mut denom = 0.0;
        for j in 0..n {
            denom += bb.d[i][j] * model.f_act[j].lipschitz_const;
            denom += bb.a[i][j] * model.g_act[j].lipschitz_const;
            for l in 0..n {
                denom += bb.b[i][j][l]
                    * (model.h_act[j].lipschitz_const * model.h_act[l].bound_const
                        + model.h_act[j].bound_const * model.h_act[l].lipschitz_const);
            }
        }
        if denom > 0.0 {
            any_coupling = true;
            m_const = m_const.max(bb.c_star[i] / denom);
        }
    }
    if !any_coupling {
        return Err(Error::NoCoupling);
    }

    let margins: Vec<f64> = (0..n)
        .map(|i| {
            // (c* - λ - F_i(λ)) / (c* - λ): the contraction factor of the
            // comparison argument, < 1 exactly when F_i(λ) > 0
            let denom = bb.c_star[i] - lambda;
            (denom - f_decay(model, &bb, i, lambda)) / denom
        })
        .collect();
    if margins.iter().any(|m| !(*m < 1.0)) {
        return Err(Error::NoCertificate(format!(
            "contraction margin not below one at rate {lambda}: {margins:?}"
        )));
    }

    Ok(DecayCertificate { eps_star, eta, lambda, m_const, margins, safety })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayVerification {
    pub lambda: f64,
    pub m_const: f64,
    pub phi_norm: f64,
    /// true when the difference stays under the envelope pointwise
    pub envelope_holds: bool,
    /// worst ratio of |difference| to the envelope over the horizon
    pub max_ratio: f64,
    pub t_worst: f64,
    /// log-linear fit of the decay of the difference (more negative = faster)
    pub fitted_slope: f64,
    pub samples: usize,
}

/// Integrates the model from two histories and checks that the sup-norm of
/// the difference stays below `M ||φ|| e^{-λ t}` for `t` in `(0, horizon]`.
///
/// With `lambda_override` the envelope is tested at a chosen rate instead of
/// the certified one (useful for falsification: an overstated rate must make
/// the check fail).
pub fn verify_decay(
    model: &NetModel,
    hist_a: &History,
    hist_b: &History,
    horizon: f64,
    step: f64,
    cert: &DecayCertificate,
    lambda_override: Option<f64>,
) -> Result<DecayVerification> {
    let lambda = lambda_override.unwrap_or(cert.lambda);
    let ta = integrate(model, hist_a, horizon, step)?;
    let tb = integrate(model, hist_b, horizon, step)?;
    let theta = model.theta();

    // ||φ||∞: the histories sampled over [-θ, 0]
    let hist_samples = ((theta / step).ceil() as usize).max(1);
    let mut phi_norm = 0.0f64;
    for k in 0..=hist_samples {
        let t = -theta + theta * k as f64 / hist_samples as f64;
        let va = hist_a.eval(t);
        let vb = hist_b.eval(t);
        for i in 0..model.n {
            phi_norm = phi_norm.max((va[i] - vb[i]).abs());
        }
    }

    let mut max_ratio = 0.0f64;
    let mut t_worst = 0.0;
    let mut log_t = Vec::new();
    let mut log_d = Vec::new();
    let nodes = ta.nodes();
    for k in 1..nodes {
        let t = k as f64 * step;
        let mut diff = 0.0f64;
        for i in 0..model.n {
            diff = diff.max((ta.value_at_node(k)[i] - tb.value_at_node(k)[i]).abs());
        }
        let envelope = cert.m_const * phi_norm * (-lambda * t).exp();
        let ratio = diff / (envelope + 1e-300);
        if ratio > max_ratio {
            max_ratio = ratio;
            t_worst = t;
        }
        if diff > 1e-13 * phi_norm.max(1.0) {
            log_t.push(t);
            log_d.push(diff.ln());
        }
    }
    // the robust slope fit is quadratic in the sample count; decimate
    let stride = (log_t.len() / 500).max(1);
    let fit_t: Vec<f64> = log_t.iter().step_by(stride).copied().collect();
    let fit_d: Vec<f64> = log_d.iter().step_by(stride).copied().collect();
    let fitted_slope = if fit_t.len() >= 4 {
        crate::quad::theil_sen_slope(&fit_t, &fit_d)
    } else {
        f64::NEG_INFINITY
    };

    Ok(DecayVerification {
        lambda,
        m_const: cert.m_const,
        phi_norm,
        envelope_holds: max_ratio <= 1.0 + 1e-9,
        max_ratio,
        t_worst,
        fitted_slope,
        samples: nodes - 1,
    })
}

/// Convenience: envelope value `M ||φ|| e^{-λ t}`.
pub fn envelope(cert: &DecayCertificate, phi_norm: f64, t: f64) -> f64 {
    cert.m_const * phi_norm * (-cert.lambda * t).exp()
}

#[allow(unused)]
fn _trajectory_type_is_public(t: &Trajectory) -> usize {
    t.nodes()
}
