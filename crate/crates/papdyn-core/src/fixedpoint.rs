//! The exponential-kernel integral operator whose fixed point is the sought
//! solution, the base point it is iterated from, Picard iteration, and
//! ball-membership verification.
//!
//! The operator maps a candidate φ to the bounded solution of
//! `x_i' = -c_i(t) x_i + F_i(s)`, where `F_i` collects the coupled
//! activation terms and the input. It is evaluated by marching the
//! exponential-kernel quadrature cell by cell over a refined grid, with the
//! value at the left window edge obtained from a truncated kernel integral
//! whose discarded tail is certified small.

use serde::Serialize;

use crate::error::Error;
use crate::model::{BarBounds, NetModel};
use crate::Result;

/// A candidate function on a uniform grid with constant continuation outside.
#[derive(Debug, Clone)]
pub struct CandidateFunction {
    pub t_lo: f64,
    pub step: f64,
    pub n: usize,
    /// node-major: `values[k * n + i]`
    pub values: Vec<f64>,
}

impl CandidateFunction {
    pub fn nodes(&self) -> usize {
        self.values.len() / self.n
    }

    pub fn t_hi(&self) -> f64 {
        self.t_lo + self.step * (self.nodes() - 1) as f64
    }

    /// Dense evaluation by cubic interpolation with centered-difference
    /// slopes; constant continuation below `t_lo` and above `t_hi`.
    pub fn sample_component(&self, t: f64, i: usize) -> f64 {
        let n = self.n;
        let nodes = self.nodes();
        let v = |k: usize| self.values[k * n + i];
        if t <= self.t_lo {
            return v(0);
        }
        let s = (t - self.t_lo) / self.step;
        if s >= (nodes - 1) as f64 {
            return v(nodes - 1);
        }
        let k = s.floor() as usize;
        let u = s - k as f64;
        let y0 = v(k);
        let y1 = v(k + 1);
        let m0 = if k == 0 { y1 - y0 } else { 0.5 * (y1 - v(k - 1)) };
        let m1 = if k + 2 >= nodes { y1 - y0 } else { 0.5 * (v(k + 2) - y0) };
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1
    }

    /// Max over grid nodes at or after `from_t` of the componentwise max
    /// absolute difference.
    pub fn sup_diff(&self, other: &CandidateFunction, from_t: f64) -> Result<f64> {
        if self.values.len() != other.values.len()
            || self.t_lo != other.t_lo
            || self.step != other.step
        {
            return Err(Error::GridMismatch(format!(
                "[{}, {}] step {} vs [{}, {}] step {}",
                self.t_lo,
                self.t_hi(),
                self.step,
                other.t_lo,
                other.t_hi(),
                other.step
            )));
        }
        let start = (((from_t - self.t_lo) / self.step).ceil().max(0.0)) as usize;
        let mut sup = 0.0f64;
        for k in start..self.nodes() {
            for i in 0..self.n {
                sup = sup.max((self.values[k * self.n + i] - other.values[k * self.n + i]).abs());
            }
        }
        Ok(sup)
    }

    pub fn sup_norm(&self, from_t: f64) -> f64 {
        let start = (((from_t - self.t_lo) / self.step).ceil().max(0.0)) as usize;
        let mut sup = 0.0f64;
        for v in &self.values[start * self.n..] {
            sup = sup.max(v.abs());
        }
        sup
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.n {
            out.push_str(&format!(",x_{i}"));
        }
        out.push('\n');
        for k in 0..self.nodes() {
            let t = self.t_lo + k as f64 * self.step;
            out.push_str(&format!("{t:.16e}"));
            for i in 0..self.n {
                out.push_str(&format!(",{:.16e}", self.values[k * self.n + i]));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct FixedpointOptions {
    /// requested working window; shifted right when the model's coefficient
    /// domain floor lies above `t_lo`
    pub t_lo: f64,
    pub t_hi: f64,
    pub grid_step: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub eps_tail: f64,
    /// when false, iterate even if the contraction constant is >= 1
    pub require_contraction: bool,
}

impl Default for FixedpointOptions {
    fn default() -> Self {
        FixedpointOptions {
            t_lo: -40.0,
            t_hi: 40.0,
            grid_step: 0.01,
            tol: 1e-8,
            max_iter: 500,
            eps_tail: 1e-10,
            require_contraction: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BallCheck {
    pub distance: f64,
    pub radius: f64,
    pub inside: bool,
}

#[derive(Debug, Clone)]
pub struct PicardResult {
    pub solution: CandidateFunction,
    pub phi0: CandidateFunction,
    pub iterations: usize,
    pub sup_diffs: Vec<f64>,
    /// max consecutive ratio of sup-diffs after the first iteration
    pub empirical_ratio: f64,
    /// sup over the comparison window of |Γx* - x*|
    pub residual: f64,
    pub ball: BallCheck,
    pub ball_margin: f64,
    /// left edge of the comparison window (the margin absorbs left-extension
    /// and truncation error)
    pub comparison_from: f64,
    pub q_used: f64,
}

/// Precomputed coefficient tables and the operator machinery for one
/// (model, window, grid) combination.
pub struct GammaOperator {
    model: NetModel,
    pub t_lo: f64,
    pub t_hi: f64,
    pub step: f64,
    /// refined cell width (integration grid halved twice)
    h_r: f64,
    /// half of h_r: table resolution
    h_q: f64,
    /// refined cells between the table start and t_lo (truncation window)
    r_init: usize,
    /// refined cells across the working window
    r_main: usize,
    main_nodes: usize,
    start: f64,
    /// per-component truncation windows
    w_i: Vec<f64>,
    pub w_max: f64,
    bb: BarBounds,
    // tables indexed by half-grid position
    cum_c: Vec<Vec<f64>>,
    i_tab: Vec<Vec<f64>>,
    d_tab: Vec<Option<Vec<f64>>>,
    a_tab: Vec<Option<Vec<f64>>>,
    b_tab: Vec<Option<Vec<f64>>>,
}

const REFINE: usize = 4;

impl GammaOperator {
    pub fn new(model: &NetModel, opts: &FixedpointOptions) -> Result<Self> {
        if !(opts.grid_step > 0.0) || !(opts.t_hi > opts.t_lo) {
            return Err(Error::Invalid("bad window or grid step".into()));
        }
        // shift the window right when coefficients are one-sided
        let floor = model.domain_floor();
        let (t_lo, t_hi) = if floor.is_finite() && floor > opts.t_lo {
            (floor, floor + (opts.t_hi - opts.t_lo))
        } else {
            (opts.t_lo, opts.t_hi)
        };
        let n = model.n;
        let bb = model.bar_bounds()?;
        let step = opts.grid_step;
        let h_r = step / REFINE as f64;
        let h_q = h_r / 2.0;

        // truncation windows from the uniform integrand bound
        let mut w_i = vec![0.0; n];
        for i in 0..n {
            let mut b_bound = bb.inputs[i];
            for j in 0..n {
                b_bound += bb.d[i][j] * model.f_act[j].bound_const;
                b_bound += bb.a[i][j] * model.g_act[j].bound_const;
                for l in 0..n {
                    b_bound += bb.b[i][j][l]
                        * model.h_act[j].bound_const
                        * model.h_act[l].bound_const;
                }
            }
            let cs = bb.c_star[i];
            if cs <= 0.0 {
                return Err(Error::DecayRateNotPositive(format!("c*_{} = {cs}", i + 1)));
            }
            w_i[i] = if b_bound > 0.0 {
                ((b_bound / (cs * opts.eps_tail)).ln() / cs).max(1.0)
            } else {
                1.0
            };
        }
        let w_max = w_i.iter().cloned().fold(0.0, f64::max);

        let main_nodes = (((t_hi - t_lo) / step).round() as usize) + 1;
        let r_main = (main_nodes - 1) * REFINE;
        let r_init = (w_max / h_r).ceil() as usize;
        let start = t_lo - r_init as f64 * h_r;
        let half_count = 2 * (r_init + r_main) + 1;

        let grid_t = |hg: usize| start + hg as f64 * h_q;
        let fill = |sig: &crate::signal::SignalExpr| -> Vec<f64> {
            (0..half_count).map(|hg| sig.eval_clamped(grid_t(hg))).collect()
        };
        let fill_opt = |sig: &crate::signal::SignalExpr| -> Option<Vec<f64>> {
            if sig.is_zero() {
                None
            } else {
                Some(fill(sig))
            }
        };

        let c_tab: Vec<Vec<f64>> = model.c.iter().map(&fill).collect();
        let i_tab: Vec<Vec<f64>> = model.inputs.iter().map(&fill).collect();
        let mut d_tab = Vec::with_capacity(n * n);
        let mut a_tab = Vec::with_capacity(n * n);
        let mut b_tab = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                d_tab.push(fill_opt(&model.d[i][j]));
                a_tab.push(fill_opt(&model.a[i][j]));
            }
        }
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    b_tab.push(fill_opt(&model.b[i][j][l]));
                }
            }
        }

        // cumulative integral of each decay signal at half-grid resolution,
        // per half-cell Simpson with directly evaluated quarter points
        let mut cum_c = Vec::with_capacity(n);
        for (i, tab) in c_tab.iter().enumerate() {
            let mut cum = Vec::with_capacity(half_count);
            cum.push(0.0);
            let mut acc = 0.0;
            for hg in 0..half_count - 1 {
                let s = grid_t(hg);
                let mid = model.c[i].eval_clamped(s + h_q / 2.0);
                acc += h_q / 6.0 * (tab[hg] + 4.0 * mid + tab[hg + 1]);
                cum.push(acc);
            }
            cum_c.push(cum);
        }

        Ok(GammaOperator {
            model: model.clone(),
            t_lo,
            t_hi,
            step,
            h_r,
            h_q,
            r_init,
            r_main,
            main_nodes,
            start,
            w_i,
            w_max,
            bb,
            cum_c,
            i_tab,
            d_tab,
            a_tab,
            b_tab,
        })
    }

    pub fn comparison_from(&self) -> f64 {
        self.t_lo + self.w_max
    }

    pub fn bar_bounds(&self) -> &BarBounds {
        &self.bb
    }

    fn half_count(&self) -> usize {
        2 * (self.r_init + self.r_main) + 1
    }

    fn grid_t(&self, hg: usize) -> f64 {
        self.start + hg as f64 * self.h_q
    }

    /// F_i(s) over the whole table range; `couplings` switches the
    /// activation terms on (the base point uses inputs only).
    fn integrand_tables(&self, phi: Option<&CandidateFunction>) -> Vec<Vec<f64>> {
        let n = self.model.n;
        let half_count = self.half_count();
        let mut out = vec![vec![0.0; half_count]; n];
        for i in 0..n {
            let f_i = &mut out[i];
            f_i.copy_from_slice(&self.i_tab[i]);
            let phi = match phi {
                Some(p) => p,
                None => continue,
            };
            for j in 0..n {
                if let Some(d) = &self.d_tab[i * n + j] {
                    for hg in 0..half_count {
                        let x = phi.sample_component(self.grid_t(hg), j);
                        f_i[hg] += d[hg] * self.model.f_act[j].eval(x);
                    }
                }
                if let Some(a) = &self.a_tab[i * n + j] {
                    let tau = self.model.tau[i][j];
                    for hg in 0..half_count {
                        let x = phi.sample_component(self.grid_t(hg) - tau, j);
                        f_i[hg] += a[hg] * self.model.g_act[j].eval(x);
                    }
                }
                for l in 0..n {
                    if let Some(b) = &self.b_tab[i * n * n + j * n + l] {
                        let sigma = self.model.sigma[i][j];
                        let nu = self.model.nu_delay[i][j];
                        for hg in 0..half_count {
                            let t = self.grid_t(hg);
                            let hj = self.model.h_act[j].eval(phi.sample_component(t - sigma, j));
                            let hl =
                                self.model.h_act[l].eval(phi.sample_component(t - nu, l));
                            f_i[hg] += b[hg] * hj * hl;
                        }
                    }
                }
            }
        }
        out
    }

    /// Applies the exponential-kernel convolution to precomputed integrand
    /// tables: left-edge truncated integral, then a cell-by-cell march.
    fn apply_kernel(&self, f_tabs: &[Vec<f64>]) -> Result<CandidateFunction> {
        let n = self.model.n;
        let mut values = vec![0.0; self.main_nodes * n];
        for i in 0..n {
            let f_i = &f_tabs[i];
            let cum = &self.cum_c[i];
            let hg_lo = 2 * self.r_init;

            // truncated integral over [t_lo - W_i, t_lo]
            let cells_i = ((self.w_i[i] / self.h_r).ceil() as usize).min(self.r_init);
            let c_lo = cum[hg_lo];
            let mut x = 0.0;
            for cell in (self.r_init - cells_i)..self.r_init {
                let hg = 2 * cell;
                let w0 = (cum[hg] - c_lo).exp();
                let wm = (cum[hg + 1] - c_lo).exp();
                let w1 = (cum[hg + 2] - c_lo).exp();
                x += self.h_r / 6.0 * (w0 * f_i[hg] + 4.0 * wm * f_i[hg + 1] + w1 * f_i[hg + 2]);
            }

            if !x.is_finite() {
                return Err(Error::NonFiniteCandidate(format!(
                    "left-edge integral for component {}",
                    i + 1
                )));
            }
            values[i] = x;

            // march: x(s_{k+1}) = e^{-Δ} x(s_k) + ∫ over the cell
            let mut node = 1usize;
            for cell in 0..self.r_main {
                let hg = hg_lo + 2 * cell;
                let c_end = cum[hg + 2];
                let w0 = (cum[hg] - c_end).exp();
                let wm = (cum[hg + 1] - c_end).exp();
                x = w0 * x
                    + self.h_r / 6.0
                        * (w0 * f_i[hg] + 4.0 * wm * f_i[hg + 1] + f_i[hg + 2]);
                if (cell + 1) % REFINE == 0 {
                    if !x.is_finite() {
                        return Err(Error::NonFiniteCandidate(format!(
                            "component {} at t = {}",
                            i + 1,
                            self.t_lo + node as f64 * self.step
                        )));
                    }
                    values[node * n + i] = x;
                    node += 1;
                }
            }
        }
        Ok(CandidateFunction { t_lo: self.t_lo, step: self.step, n, values })
    }

    /// The base point: the kernel applied to the inputs alone.
    pub fn phi0(&self) -> Result<CandidateFunction> {
        let f_tabs = self.integrand_tables(None);
        self.apply_kernel(&f_tabs)
    }

    /// One application of the operator to a candidate.
    pub fn apply(&self, phi: &CandidateFunction) -> Result<CandidateFunction> {
        if !phi.values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteCandidate("input candidate".into()));
        }
        let f_tabs = self.integrand_tables(Some(phi));
        self.apply_kernel(&f_tabs)
    }
}

/// The base point of the iteration on the configured window.
pub fn phi0(model: &NetModel, opts: &FixedpointOptions) -> Result<CandidateFunction> {
    GammaOperator::new(model, opts)?.phi0()
}

/// One operator application (constructs tables each call; use
/// [`GammaOperator`] directly for repeated application).
pub fn gamma_apply(
    model: &NetModel,
    phi: &CandidateFunction,
    opts: &FixedpointOptions,
) -> Result<CandidateFunction> {
    GammaOperator::new(model, opts)?.apply(phi)
}

/// Iterates the operator from the base point until successive sup-norm
/// differences on the comparison window drop below `tol`.
pub fn picard_solve(model: &NetModel, opts: &FixedpointOptions) -> Result<PicardResult> {
    let op = GammaOperator::new(model, opts)?;
    let constants = model.constants_m7()?;
    let q = constants.q1;
    if q >= 1.0 && opts.require_contraction {
        return Err(Error::NoCertificate(format!(
            "contraction constant {q} >= 1; set require_contraction = false to iterate anyway"
        )));
    }
    let radius = constants.ball_radius;
    let from = op.comparison_from();

    let base = op.phi0()?;
    let mut phi = base.clone();
    let mut sup_diffs = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let next = op.apply(&phi)?;
        let diff = next.sup_diff(&phi, from)?;
        sup_diffs.push(diff);
        phi = next;
        if diff < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        let ratios: Vec<f64> =
            sup_diffs.windows(2).map(|w| w[1] / w[0].max(1e-300)).collect();
        return Err(Error::NonConvergence {
            iterations: sup_diffs.len(),
            last_diff: *sup_diffs.last().unwrap_or(&f64::NAN),
            ratio_history: ratios.into_iter().rev().take(8).rev().collect(),
        });
    }

    let residual = op.apply(&phi)?.sup_diff(&phi, from)?;
    let empirical_ratio = sup_diffs
        .windows(2)
        .skip(1)
        .map(|w| w[1] / w[0].max(1e-300))
        .fold(0.0f64, f64::max);
    let ball = ball_check(&phi, &base, radius, from)?;
    Ok(PicardResult {
        iterations: sup_diffs.len(),
        sup_diffs,
        empirical_ratio,
        residual,
        ball_margin: radius - ball.distance,
        ball,
        comparison_from: from,
        q_used: q,
        solution: phi,
        phi0: base,
    })
}

/// Sup-norm distance between a solution and the base point over the
/// comparison window, against the guaranteed radius.
pub fn ball_check(
    solution: &CandidateFunction,
    base: &CandidateFunction,
    radius: f64,
    from_t: f64,
) -> Result<BallCheck> {
    let distance = solution.sup_diff(base, from_t)?;
    Ok(BallCheck { distance, radius, inside: distance <= radius * (1.0 + 1e-6) })
}
