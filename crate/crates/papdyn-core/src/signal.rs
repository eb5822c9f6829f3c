//! Structured time signals: a trigonometric-polynomial part that is bounded
//! on all of the line, plus decaying perturbation terms, over a constant
//! scale divisor. Evaluation, certified sup/abs and inf bounds, and the
//! structural split into the two parts live here, together with activation
//! specifications.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::parse::MathExpr;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApKind {
    Sin,
    Cos,
    Const,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApTerm {
    pub amplitude: f64,
    pub kind: ApKind,
    /// rad per unit time; 0 for constants
    pub frequency: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErgKind {
    /// e^{-t}, declared on [0, infinity)
    ExpDecay,
    /// e^{-|t|}
    ExpAbsDecay,
    /// 1/(1+t^2)
    RationalDecay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgTerm {
    pub amplitude: f64,
    pub kind: ErgKind,
}

/// Domain over which bounds are requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    FullLine,
    /// the half line [t0, infinity)
    From(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalExpr {
    pub ap_terms: Vec<ApTerm>,
    pub erg_terms: Vec<ErgTerm>,
    pub scale: f64,
}

impl ErgKind {
    fn kernel(self, t: f64) -> f64 {
        match self {
            ErgKind::ExpDecay => (-t).exp(),
            ErgKind::ExpAbsDecay => (-t.abs()).exp(),
            ErgKind::RationalDecay => 1.0 / (1.0 + t * t),
        }
    }

    /// sup of the kernel over [t0, infinity); `None` when unbounded there.
    fn kernel_sup(self, t0: f64) -> Option<f64> {
        match self {
            // declared on [0, infinity): the sup is taken from the floor up
            ErgKind::ExpDecay => {
                if t0.is_finite() {
                    Some((-t0.max(0.0)).exp())
                } else {
                    None
                }
            }
            ErgKind::ExpAbsDecay => Some(if t0 > 0.0 { (-t0).exp() } else { 1.0 }),
            ErgKind::RationalDecay => Some(if t0 > 0.0 { 1.0 / (1.0 + t0 * t0) } else { 1.0 }),
        }
    }
}

impl SignalExpr {
    pub fn zero() -> Self {
        SignalExpr { ap_terms: vec![], erg_terms: vec![], scale: 1.0 }
    }

    pub fn constant(v: f64) -> Self {
        SignalExpr {
            ap_terms: vec![ApTerm { amplitude: v, kind: ApKind::Const, frequency: 0.0, phase: 0.0 }],
            erg_terms: vec![],
            scale: 1.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.ap_terms.iter().all(|a| a.amplitude == 0.0)
            && self.erg_terms.iter().all(|e| e.amplitude == 0.0)
    }

    /// Smallest t at which every term is declared; one-sided exp-decay terms
    /// push the floor up to 0.
    pub fn domain_floor(&self) -> f64 {
        if self.erg_terms.iter().any(|e| e.kind == ErgKind::ExpDecay && e.amplitude != 0.0) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn parse(src: &str) -> Result<Self> {
        let ast = crate::parse::parse_expr(src)?;
        Self::from_math(&ast)
    }

    /// Restricts a parsed expression to the supported shape.
    pub fn from_math(ast: &MathExpr) -> Result<Self> {
        let (num, scale) = match ast {
            MathExpr::Div(num, den) => match den.as_const() {
                Some(s) if s != 0.0 && s.is_finite() => (num.as_ref(), s),
                Some(_) => return Err(Error::UnsupportedShape("division by zero scale".into())),
                None => (ast, 1.0),
            },
            _ => (ast, 1.0),
        };
        let mut addends = Vec::new();
        flatten_sum(num, 1.0, &mut addends);
        let mut ap_terms = Vec::new();
        let mut erg_terms = Vec::new();
        for (sign, e) in addends {
            let (coef, atom) = factor(e)?;
            let amplitude = sign * coef;
            match atom {
                Atom::One => ap_terms.push(ApTerm {
                    amplitude,
                    kind: ApKind::Const,
                    frequency: 0.0,
                    phase: 0.0,
                }),
                Atom::Sin(w, p) => {
                    ap_terms.push(ApTerm { amplitude, kind: ApKind::Sin, frequency: w, phase: p })
                }
                Atom::Cos(w, p) => {
                    ap_terms.push(ApTerm { amplitude, kind: ApKind::Cos, frequency: w, phase: p })
                }
                Atom::Erg(kind) => erg_terms.push(ErgTerm { amplitude, kind }),
            }
        }
        let expr = SignalExpr { ap_terms, erg_terms, scale };
        if expr.scale == 0.0 || !expr.scale.is_finite() {
            return Err(Error::UnsupportedShape("scale must be finite and nonzero".into()));
        }
        Ok(expr)
    }

    /// Arithmetic value at `t`. Errors below the domain floor.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let floor = self.domain_floor();
        if t < floor {
            return Err(Error::DomainViolation { t, floor });
        }
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for a in &self.ap_terms {
            acc += match a.kind {
                ApKind::Sin => a.amplitude * (a.frequency * t + a.phase).sin(),
                ApKind::Cos => a.amplitude * (a.frequency * t + a.phase).cos(),
                ApKind::Const => a.amplitude,
            };
        }
        for e in &self.erg_terms {
            acc += e.amplitude * e.kind.kernel(t);
        }
        acc / self.scale
    }

    /// Evaluation with one-sided decay kernels frozen at their floor value
    /// below the floor, so the result is finite on the whole line. Used by
    /// integral machinery whose window may dip below the declared domain.
    pub fn eval_clamped(&self, t: f64) -> f64 {
        let floor = self.domain_floor();
        if t >= floor {
            return self.eval_unchecked(t);
        }
        let mut acc = 0.0;
        for a in &self.ap_terms {
            acc += match a.kind {
                ApKind::Sin => a.amplitude * (a.frequency * t + a.phase).sin(),
                ApKind::Cos => a.amplitude * (a.frequency * t + a.phase).cos(),
                ApKind::Const => a.amplitude,
            };
        }
        for e in &self.erg_terms {
            acc += e.amplitude * e.kind.kernel(floor);
        }
        acc / self.scale
    }

    /// Certified upper bound of sup |expr| on the domain (amplitude-sum).
    pub fn sup_abs_bound(&self, domain: Domain) -> Result<f64> {
        let t0 = match domain {
            Domain::FullLine => f64::NEG_INFINITY,
            Domain::From(t0) => t0,
        };
        let mut acc = 0.0;
        for a in &self.ap_terms {
            acc += a.amplitude.abs();
        }
        for e in &self.erg_terms {
            if e.amplitude == 0.0 {
                continue;
            }
            match e.kind.kernel_sup(t0) {
                Some(k) => acc += e.amplitude.abs() * k,
                None => {
                    return Err(Error::Unbounded(
                        "one-sided exp-decay term on the full line".into(),
                    ))
                }
            }
        }
        Ok(acc / self.scale.abs())
    }

    /// Certified lower bound of inf expr on the domain: constants minus the
    /// oscillating amplitude sum, minus decay amplitudes where they can pull
    /// the value down.
    pub fn inf_on(&self, domain: Domain) -> Result<f64> {
        let t0 = match domain {
            Domain::FullLine => f64::NEG_INFINITY,
            Domain::From(t0) => t0,
        };
        // bound the un-scaled numerator on both sides; a negative scale
        // turns the numerator's upper bound into the expression's inf
        let mut lo = 0.0;
        let mut hi = 0.0;
        for a in &self.ap_terms {
            match a.kind {
                ApKind::Const => {
                    lo += a.amplitude;
                    hi += a.amplitude;
                }
                _ => {
                    lo -= a.amplitude.abs();
                    hi += a.amplitude.abs();
                }
            }
        }
        for e in &self.erg_terms {
            if e.amplitude == 0.0 {
                continue;
            }
            // kernel range is [0, sup], so the term spans 0 to amplitude*sup
            let span = match e.kind.kernel_sup(t0) {
                Some(k) => e.amplitude * k,
                None => e.amplitude * f64::INFINITY,
            };
            lo += span.min(0.0);
            hi += span.max(0.0);
        }
        let inf = if self.scale > 0.0 { lo / self.scale } else { hi / self.scale };
        if inf == f64::NEG_INFINITY {
            return Err(Error::Unbounded(
                "one-sided exp-decay term unbounded below on the full line".into(),
            ));
        }
        Ok(inf)
    }

    /// Grid-sampled estimate of sup |expr| over `[t0, t0 + span]`; the
    /// certified bound from `sup_abs_bound` must dominate it.
    pub fn sup_abs_estimate(&self, domain: Domain, span: f64, samples: usize) -> f64 {
        let t0 = match domain {
            Domain::FullLine => -span / 2.0,
            Domain::From(t0) => t0,
        };
        let mut best = 0.0f64;
        for k in 0..=samples {
            let t = t0 + span * k as f64 / samples as f64;
            best = best.max(self.eval_clamped(t).abs());
        }
        best
    }

    /// Structural split into the trig-polynomial part and the decaying part.
    pub fn decompose(&self) -> (SignalExpr, SignalExpr) {
        (
            SignalExpr { ap_terms: self.ap_terms.clone(), erg_terms: vec![], scale: self.scale },
            SignalExpr { ap_terms: vec![], erg_terms: self.erg_terms.clone(), scale: self.scale },
        )
    }
}

enum Atom {
    One,
    Sin(f64, f64),
    Cos(f64, f64),
    Erg(ErgKind),
}

fn flatten_sum<'a>(e: &'a MathExpr, sign: f64, out: &mut Vec<(f64, &'a MathExpr)>) {
    match e {
        MathExpr::Add(a, b) => {
            flatten_sum(a, sign, out);
            flatten_sum(b, sign, out);
        }
        MathExpr::Sub(a, b) => {
            flatten_sum(a, sign, out);
            flatten_sum(b, -sign, out);
        }
        MathExpr::Neg(a) => flatten_sum(a, -sign, out),
        // distribute constant factors and divisors over inner sums
        MathExpr::Div(a, b) => match b.as_const() {
            Some(c) if c != 0.0 && c.is_finite() => flatten_sum(a, sign / c, out),
            _ => out.push((sign, e)),
        },
        MathExpr::Mul(a, b) => {
            if let Some(c) = a.as_const() {
                flatten_sum(b, sign * c, out);
            } else if let Some(c) = b.as_const() {
                flatten_sum(a, sign * c, out);
            } else {
                out.push((sign, e));
            }
        }
        _ => out.push((sign, e)),
    }
}

fn is_one_plus_t_squared(e: &MathExpr) -> bool {
    let (a, b) = match e {
        MathExpr::Add(a, b) => (a, b),
        _ => return false,
    };
    let is_one = |x: &MathExpr| x.as_const() == Some(1.0);
    let is_t_sq = |x: &MathExpr| {
        matches!(x, MathExpr::Mul(p, q)
            if p.as_linear() == Some((1.0, 0.0)) && q.as_linear() == Some((1.0, 0.0)))
    };
    (is_one(a) && is_t_sq(b)) || (is_one(b) && is_t_sq(a))
}

/// Splits an addend into a constant coefficient and a recognized atom.
fn factor(e: &MathExpr) -> Result<(f64, Atom)> {
    if let Some(v) = e.as_const() {
        return Ok((v, Atom::One));
    }
    match e {
        MathExpr::Neg(inner) => {
            let (c, a) = factor(inner)?;
            Ok((-c, a))
        }
        MathExpr::Mul(x, y) => {
            if let Some(c) = x.as_const() {
                let (c2, a) = factor(y)?;
                Ok((c * c2, a))
            } else if let Some(c) = y.as_const() {
                let (c2, a) = factor(x)?;
                Ok((c * c2, a))
            } else {
                Err(Error::UnsupportedShape(
                    "product of two time-dependent factors".into(),
                ))
            }
        }
        MathExpr::Div(x, y) => {
            if let Some(c) = y.as_const() {
                if c == 0.0 {
                    return Err(Error::UnsupportedShape("division by zero".into()));
                }
                let (c2, a) = factor(x)?;
                Ok((c2 / c, a))
            } else if is_one_plus_t_squared(y) {
                match x.as_const() {
                    Some(c) => Ok((c, Atom::Erg(ErgKind::RationalDecay))),
                    None => Err(Error::UnsupportedShape(
                        "rational term must have a constant numerator".into(),
                    )),
                }
            } else {
                Err(Error::UnsupportedShape("unsupported divisor".into()))
            }
        }
        MathExpr::Sin(arg) => match arg.as_linear() {
            Some((w, p)) => Ok((1.0, Atom::Sin(w, p))),
            None => Err(Error::UnsupportedShape("sin of a non-linear argument".into())),
        },
        MathExpr::Cos(arg) => match arg.as_linear() {
            Some((w, p)) => Ok((1.0, Atom::Cos(w, p))),
            None => Err(Error::UnsupportedShape("cos of a non-linear argument".into())),
        },
        MathExpr::Exp(arg) => {
            if let Some((a, b)) = arg.as_linear() {
                if a == -1.0 {
                    // exp(-t + b) = e^b * exp(-t)
                    return Ok((b.exp(), Atom::Erg(ErgKind::ExpDecay)));
                }
                return Err(Error::UnsupportedShape(
                    "exp argument must be -t or -abs(t)".into(),
                ));
            }
            if let MathExpr::Neg(inner) = arg.as_ref() {
                if let MathExpr::Abs(x) = inner.as_ref() {
                    if x.as_linear() == Some((1.0, 0.0)) {
                        return Ok((1.0, Atom::Erg(ErgKind::ExpAbsDecay)));
                    }
                }
            }
            Err(Error::UnsupportedShape("exp argument must be -t or -abs(t)".into()))
        }
        _ => Err(Error::UnsupportedShape(format!("unrecognized term {e:?}"))),
    }
}

// ---------------------------------------------------------------------------
// activations

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationShape {
    Sine,
    Tanh,
    PiecewiseLinearSaturation,
    /// piecewise-linear interpolation of sorted (x, y) samples, clamped
    /// outside the sampled range
    CustomTable(Vec<(f64, f64)>),
}

/// Activation of a single neuron together with its Lipschitz/bound data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationSpec {
    pub shape: ActivationShape,
    pub lipschitz_const: f64,
    pub bound_const: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_weight: Option<SignalExpr>,
}

impl ActivationSpec {
    pub fn new(shape: ActivationShape, lipschitz_const: f64, bound_const: f64) -> Self {
        ActivationSpec { shape, lipschitz_const, bound_const, lipschitz_weight: None }
    }

    pub fn sine() -> Self {
        Self::new(ActivationShape::Sine, 1.0, 1.0)
    }

    pub fn tanh() -> Self {
        Self::new(ActivationShape::Tanh, 1.0, 1.0)
    }

    pub fn saturation() -> Self {
        Self::new(ActivationShape::PiecewiseLinearSaturation, 1.0, 1.0)
    }

    /// Table activation; the Lipschitz constant comes from the slopes.
    pub fn from_table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Invalid("table needs at least two points".into()));
        }
        let mut sorted = points;
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut lipschitz = 0.0f64;
        let mut bound = 0.0f64;
        for w in sorted.windows(2) {
            let dx = w[1].0 - w[0].0;
            if dx <= 0.0 {
                return Err(Error::Invalid("table abscissae must be strictly increasing".into()));
            }
            lipschitz = lipschitz.max(((w[1].1 - w[0].1) / dx).abs());
        }
        for p in &sorted {
            bound = bound.max(p.1.abs());
        }
        Ok(Self::new(ActivationShape::CustomTable(sorted), lipschitz, bound))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            ActivationShape::Sine => x.sin(),
            ActivationShape::Tanh => x.tanh(),
            ActivationShape::PiecewiseLinearSaturation => 0.5 * ((x + 1.0).abs() - (x - 1.0).abs()),
            ActivationShape::CustomTable(pts) => {
                let first = pts.first().unwrap();
                let last = pts.last().unwrap();
                if x <= first.0 {
                    return first.1;
                }
                if x >= last.0 {
                    return last.1;
                }
                let idx = pts.partition_point(|p| p.0 <= x);
                let (x0, y0) = pts[idx - 1];
                let (x1, y1) = pts[idx];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Sampled self-consistency: vanishes at zero, respects the declared
    /// bound, and Lipschitz quotients stay below the declared constant.
    pub fn validate(&self) -> Result<()> {
        if self.eval(0.0).abs() > 1e-12 {
            return Err(Error::Invalid("activation must vanish at 0".into()));
        }
        if self.lipschitz_const < 0.0 || self.bound_const < 0.0 {
            return Err(Error::Invalid("Lipschitz and bound constants must be >= 0".into()));
        }
        let n = 400;
        let lo = -6.0;
        let hi = 6.0;
        let mut prev_x = lo;
        let mut prev_y = self.eval(lo);
        for k in 0..=n {
            let x = lo + (hi - lo) * k as f64 / n as f64;
            let y = self.eval(x);
            if y.abs() > self.bound_const * (1.0 + 1e-9) {
                return Err(Error::Invalid(format!(
                    "activation value {y} at x={x} exceeds the declared bound {}",
                    self.bound_const
                )));
            }
            if k > 0 {
                let quot = (y - prev_y).abs() / (x - prev_x);
                if quot > self.lipschitz_const * (1.0 + 1e-9) {
                    return Err(Error::Invalid(format!(
                        "Lipschitz quotient {quot} near x={x} exceeds {}",
                        self.lipschitz_const
                    )));
                }
            }
            prev_x = x;
            prev_y = y;
        }
        Ok(())
    }
}
