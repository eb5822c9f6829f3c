//! Weighted measures on the line given by nonnegative densities, interval
//! masses, weighted ergodic remainders, and the numeric translation-bound
//! and mass-ratio checks.

use serde::Serialize;

use crate::error::Error;
use crate::parse::MathExpr;
use crate::quad::{simpson_adaptive, theil_sen_slope};
use crate::Result;

const MASS_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub enum Density {
    Single(MathExpr),
    /// two-piece split: `left` on (-inf, at], `right` on (at, inf)
    Split { left: MathExpr, right: MathExpr, at: f64 },
}

#[derive(Debug, Clone)]
pub struct WeightedMeasure {
    pub name: String,
    pub density: Density,
}

impl WeightedMeasure {
    pub fn new(name: impl Into<String>, density: MathExpr) -> Result<Self> {
        let m = WeightedMeasure { name: name.into(), density: Density::Single(density) };
        m.validate()?;
        Ok(m)
    }

    pub fn split(
        name: impl Into<String>,
        left: MathExpr,
        right: MathExpr,
        at: f64,
    ) -> Result<Self> {
        let m = WeightedMeasure { name: name.into(), density: Density::Split { left, right, at } };
        m.validate()?;
        Ok(m)
    }

    pub fn lebesgue() -> Self {
        WeightedMeasure { name: "lebesgue".into(), density: Density::Single(MathExpr::Num(1.0)) }
    }

    pub fn density_at(&self, t: f64) -> f64 {
        match &self.density {
            Density::Single(e) => e.eval(t),
            Density::Split { left, right, at } => {
                if t <= *at {
                    left.eval(t)
                } else {
                    right.eval(t)
                }
            }
        }
    }

    /// Sampled nonnegativity check.
    fn validate(&self) -> Result<()> {
        for k in 0..=2000 {
            let t = -100.0 + 0.1 * k as f64;
            let v = self.density_at(t);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "density of `{}` is {v} at t = {t}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Integral of the density over `[a, b]`, splitting at the piecewise
    /// junction so each Simpson run sees a smooth integrand.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Err(Error::Invalid(format!("mass needs a <= b, got [{a}, {b}]")));
        }
        self.integrate_weighted(a, b, |_| 1.0)
    }

    /// ∫_a^b f(t) dμ(t) with the same quadrature contract as `mass`.
    pub fn integrate_weighted<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> Result<f64> {
        let g = |t: f64| {
            let d = self.density_at(t);
            f(t) * d
        };
        let splits: Vec<(f64, f64)> = match &self.density {
            Density::Split { at, .. } if a < *at && *at < b => vec![(a, *at), (*at, b)],
            _ => vec![(a, b)],
        };
        let mut total = 0.0;
        for (lo, hi) in splits {
            let r = simpson_adaptive(&g, lo, hi, MASS_REL_TOL);
            let v = r.value;
            if !v.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "non-finite integral over [{lo}, {hi}] for `{}`",
                    self.name
                )));
            }
            if v < -1e-9 {
                return Err(Error::InvalidMeasure(format!(
                    "negative mass {v} over [{lo}, {hi}] for `{}`",
                    self.name
                )));
            }
            total += v;
        }
        Ok(total)
    }
}

/// Result of the empirical ergodic-remainder trend test.
#[derive(Debug, Clone, Serialize)]
pub struct ErgodicVerdict {
    pub z_values: Vec<f64>,
    pub remainders: Vec<f64>,
    /// robust slope of log remainder vs log z
    pub trend_slope: f64,
    pub passed: bool,
    pub threshold: f64,
}

pub fn default_z_schedule() -> Vec<f64> {
    vec![5.0, 10.0, 20.0, 40.0, 80.0, 160.0]
}

pub const DEFAULT_ERGODIC_THRESHOLD: f64 = 1e-2;

/// (1/ν([-z,z])) ∫ |f| dμ over [-z, z] intersected with f's declared domain
/// `[domain_floor, infinity)`.
pub fn ergodic_remainder<F: Fn(f64) -> f64>(
    f: F,
    mu: &WeightedMeasure,
    nu: &WeightedMeasure,
    domain_floor: f64,
    z: f64,
) -> Result<f64> {
    if z <= 0.0 {
        return Err(Error::Invalid(format!("z must be positive, got {z}")));
    }
    let denom = nu.mass(-z, z)?;
    if denom <= 0.0 {
        return Err(Error::DegenerateMeasure(format!(
            "nu([-{z}, {z}]) = {denom} for `{}`",
            nu.name
        )));
    }
    let lo = (-z).max(domain_floor);
    if lo >= z {
        return Ok(0.0);
    }
    let num = mu.integrate_weighted(lo, z, |t| f(t).abs())?;
    Ok(num / denom)
}

/// Remainders along a z-schedule plus the pass verdict: the final remainder
/// must be below the threshold and the log-log slope must be negative.
pub fn ergodicity_trend<F: Fn(f64) -> f64>(
    f: F,
    mu: &WeightedMeasure,
    nu: &WeightedMeasure,
    domain_floor: f64,
    z_schedule: &[f64],
    threshold: f64,
) -> Result<ErgodicVerdict> {
    if z_schedule.len() < 4 {
        return Err(Error::Invalid("z schedule needs at least 4 points".into()));
    }
    if !z_schedule.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Invalid("z schedule must be strictly increasing".into()));
    }
    let mut remainders = Vec::with_capacity(z_schedule.len());
    for &z in z_schedule {
        remainders.push(ergodic_remainder(&f, mu, nu, domain_floor, z)?);
    }
    // identically-zero remainder sequences pass trivially
    if remainders.iter().all(|&r| r < 1e-14) {
        return Ok(ErgodicVerdict {
            z_values: z_schedule.to_vec(),
            remainders,
            trend_slope: 0.0,
            passed: true,
            threshold,
        });
    }
    let logs_z: Vec<f64> = z_schedule.iter().map(|z| z.ln()).collect();
    let logs_r: Vec<f64> = remainders.iter().map(|r| r.max(1e-300).ln()).collect();
    let slope = theil_sen_slope(&logs_z, &logs_r);
    let passed = *remainders.last().unwrap() < threshold && slope < 0.0;
    Ok(ErgodicVerdict {
        z_values: z_schedule.to_vec(),
        remainders,
        trend_slope: slope,
        passed,
        threshold,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TranslationBound {
    pub beta_bound: f64,
    pub passed: bool,
    pub worst_shift: f64,
    pub detail: String,
}

const RATIO_CAP: f64 = 1e6;

/// Translation-boundedness check via the density-ratio sufficient condition:
/// for each shift τ, a grid bound on density(t+τ)/density(t) outside the
/// excluded interval. Finite bound means shifted masses are controlled by a
/// constant multiple of the original.
pub fn check_m1(
    m: &WeightedMeasure,
    shifts: &[f64],
    excluded_interval: (f64, f64),
) -> Result<TranslationBound> {
    if shifts.is_empty() {
        return Err(Error::Invalid("shifts must be nonempty".into()));
    }
    let mut beta: f64 = 0.0;
    let mut worst = shifts[0];
    let (ex_lo, ex_hi) = excluded_interval;
    let n = 40_000;
    for &tau in shifts {
        let mut local: f64 = 0.0;
        for k in 0..=n {
            let t = -100.0 + 200.0 * k as f64 / n as f64;
            if t >= ex_lo && t <= ex_hi {
                continue;
            }
            let den = m.density_at(t);
            if den <= 0.0 {
                continue;
            }
            local = local.max(m.density_at(t + tau) / den);
        }
        if local > beta {
            beta = local;
            worst = tau;
        }
    }
    let passed = beta.is_finite() && beta <= RATIO_CAP;
    let detail = if passed {
        format!("density ratio bounded by {beta:.6} (worst shift {worst})")
    } else {
        format!("density ratio unbounded (reached {beta:.3e} at shift {worst})")
    };
    Ok(TranslationBound { beta_bound: beta, passed, worst_shift: worst, detail })
}

#[derive(Debug, Clone, Serialize)]
pub struct MassRatioCheck {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
    /// robust slope of log ratio vs log r; passing means it is not diverging
    pub slope: f64,
    pub passed: bool,
}

pub const DEFAULT_M2_SLOPE_TOL: f64 = 0.05;

/// μ([-r,r])/ν([-r,r]) over a radii schedule; the ratio must not diverge.
pub fn check_m2(
    mu: &WeightedMeasure,
    nu: &WeightedMeasure,
    radii: &[f64],
    slope_tol: f64,
) -> Result<MassRatioCheck> {
    if radii.len() < 3 || !radii.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Invalid("radii must be increasing with at least 3 points".into()));
    }
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        let num = mu.mass(-r, r)?;
        let den = nu.mass(-r, r)?;
        if den <= 0.0 {
            return Err(Error::DegenerateMeasure(format!("nu([-{r}, {r}]) = {den}")));
        }
        ratios.push(num / den);
    }
    let logs_r: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let logs_q: Vec<f64> = ratios.iter().map(|q| q.max(1e-300).ln()).collect();
    let slope = theil_sen_slope(&logs_r, &logs_q);
    let sup_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(MassRatioCheck { radii: radii.to_vec(), ratios, sup_ratio, slope, passed: slope <= slope_tol })
}

/// Membership in the class of measures with infinite total mass but finite
/// interval masses: interval masses must keep growing along the schedule.
pub fn check_infinite_mass(m: &WeightedMeasure, radii: &[f64]) -> Result<bool> {
    let mut prev = 0.0;
    let mut growing = true;
    for &r in radii {
        let mass = m.mass(-r, r)?;
        if !mass.is_finite() {
            return Err(Error::InvalidMeasure(format!("mass of [-{r}, {r}] not finite")));
        }
        if mass <= prev * 1.2 && prev > 0.0 {
            growing = false;
        }
        prev = mass;
    }
    Ok(growing)
}
