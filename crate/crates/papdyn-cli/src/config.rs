//! TOML run configuration: model coefficients as expression strings, the
//! measure pair, windows, tolerances, and per-command settings.

use papdyn_core::dde::History;
use papdyn_core::fixedpoint::FixedpointOptions;
use papdyn_core::measure::WeightedMeasure;
use papdyn_core::model::{CheckOptions, NetModel};
use papdyn_core::parse::parse_expr;
use papdyn_core::signal::{ActivationSpec, SignalExpr};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub history: HistorySection,
    pub measures: MeasuresSection,
    #[serde(default)]
    pub windows: WindowsSection,
    #[serde(default)]
    pub tolerances: TolerancesSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub stability: StabilitySection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    pub c: Vec<String>,
    pub inputs: Vec<String>,
    pub d: Vec<Vec<String>>,
    pub a: Vec<Vec<String>>,
    /// `b[i][j][l]`: second-order couplings
    pub b: Vec<Vec<Vec<String>>>,
    pub tau: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub nu_delay: Vec<Vec<f64>>,
    pub activations: ActivationsSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationsSection {
    pub f: Vec<String>,
    pub g: Vec<String>,
    pub h: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct HistorySection {
    /// "constant" or "exprs"
    pub kind: String,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default)]
    pub exprs: Vec<String>,
}

impl Default for HistorySection {
    fn default() -> Self {
        HistorySection { kind: "constant".into(), values: vec![], exprs: vec![] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuresSection {
    pub mu: MeasureSpec,
    pub nu: MeasureSpec,
}

/// Either a single `density`, or a `left`/`right` pair split at `split_at`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(default)]
    pub density: Option<String>,
    #[serde(default)]
    pub left: Option<String>,
    #[serde(default)]
    pub right: Option<String>,
    #[serde(default)]
    pub split_at: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowsSection {
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Default for WindowsSection {
    fn default() -> Self {
        WindowsSection { t_lo: -40.0, t_hi: 40.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSection {
    /// integration step for `simulate`/`stability`
    pub step: f64,
    /// Picard sup-norm tolerance
    pub tol: f64,
    /// discarded-tail budget of the truncated kernel integral
    pub eps_tail: f64,
    /// node spacing of the fixed-point grid
    pub grid_step: f64,
    /// safety factor applied to the certified decay rate
    pub safety: f64,
}

impl Default for TolerancesSection {
    fn default() -> Self {
        TolerancesSection {
            step: 1e-3,
            tol: 1e-8,
            eps_tail: 1e-10,
            grid_step: 0.01,
            safety: 0.99,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub t_end: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection { t_end: 20.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    pub horizon: f64,
    pub history_pairs: usize,
}

impl Default for StabilitySection {
    fn default() -> Self {
        StabilitySection { horizon: 20.0, history_pairs: 5 }
    }
}

/// A configuration error message tied to the field that caused it.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
}

fn signal(field: &str, src: &str) -> Result<SignalExpr, ConfigError> {
    SignalExpr::parse(src).map_err(|e| ConfigError(format!("{field}: `{src}`: {e}")))
}

fn signal_matrix(
    field: &str,
    rows: &[Vec<String>],
    n: usize,
) -> Result<Vec<Vec<SignalExpr>>, ConfigError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(ConfigError(format!(
            "{field}: expected an {n}x{n} matrix, got {} rows of lengths {:?}",
            rows.len(),
            rows.iter().map(|r| r.len()).collect::<Vec<_>>()
        )));
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, s)| signal(&format!("{field}[{i}][{j}]"), s))
                .collect()
        })
        .collect()
}

fn delay_matrix(field: &str, rows: &[Vec<f64>], n: usize) -> Result<Vec<Vec<f64>>, ConfigError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(ConfigError(format!("{field}: expected an {n}x{n} matrix")));
    }
    Ok(rows.to_vec())
}

fn activation(field: &str, name: &str) -> Result<ActivationSpec, ConfigError> {
    match name {
        "sine" => Ok(ActivationSpec::sine()),
        "tanh" => Ok(ActivationSpec::tanh()),
        "saturation" => Ok(ActivationSpec::saturation()),
        other => Err(ConfigError(format!(
            "{field}: unknown activation `{other}` (expected sine, tanh, or saturation)"
        ))),
    }
}

fn activations(field: &str, names: &[String], n: usize) -> Result<Vec<ActivationSpec>, ConfigError> {
    if names.len() != n {
        return Err(ConfigError(format!("{field}: expected {n} entries, got {}", names.len())));
    }
    names
        .iter()
        .enumerate()
        .map(|(i, s)| activation(&format!("{field}[{i}]"), s))
        .collect()
}

impl RunConfig {
    pub fn build_model(&self) -> Result<NetModel, ConfigError> {
        let m = &self.model;
        let n = m.n;
        if n == 0 {
            return Err(ConfigError("model.n must be positive".into()));
        }
        if m.c.len() != n || m.inputs.len() != n {
            return Err(ConfigError(format!(
                "model.c and model.inputs must have {n} entries, got {} and {}",
                m.c.len(),
                m.inputs.len()
            )));
        }
        if m.b.len() != n {
            return Err(ConfigError(format!("model.b: expected {n} blocks, got {}", m.b.len())));
        }
        let c = m
            .c
            .iter()
            .enumerate()
            .map(|(i, s)| signal(&format!("model.c[{i}]"), s))
            .collect::<Result<Vec<_>, _>>()?;
        let inputs = m
            .inputs
            .iter()
            .enumerate()
            .map(|(i, s)| signal(&format!("model.inputs[{i}]"), s))
            .collect::<Result<Vec<_>, _>>()?;
        let d = signal_matrix("model.d", &m.d, n)?;
        let a = signal_matrix("model.a", &m.a, n)?;
        let b = m
            .b
            .iter()
            .enumerate()
            .map(|(i, block)| signal_matrix(&format!("model.b[{i}]"), block, n))
            .collect::<Result<Vec<_>, _>>()?;
        let model = NetModel {
            n,
            c,
            inputs,
            d,
            a,
            b,
            tau: delay_matrix("model.tau", &m.tau, n)?,
            sigma: delay_matrix("model.sigma", &m.sigma, n)?,
            nu_delay: delay_matrix("model.nu_delay", &m.nu_delay, n)?,
            f_act: activations("model.activations.f", &m.activations.f, n)?,
            g_act: activations("model.activations.g", &m.activations.g, n)?,
            h_act: activations("model.activations.h", &m.activations.h, n)?,
        };
        model.validate().map_err(|e| ConfigError(e.to_string()))
    }

    pub fn build_history(&self) -> Result<History, ConfigError> {
        let n = self.model.n;
        match self.history.kind.as_str() {
            "constant" => {
                let values = if self.history.values.is_empty() {
                    vec![0.0; n]
                } else {
                    self.history.values.clone()
                };
                if values.len() != n {
                    return Err(ConfigError(format!(
                        "history.values: expected {n} entries, got {}",
                        values.len()
                    )));
                }
                Ok(History::Constant(values))
            }
            "exprs" => {
                if self.history.exprs.len() != n {
                    return Err(ConfigError(format!(
                        "history.exprs: expected {n} entries, got {}",
                        self.history.exprs.len()
                    )));
                }
                let exprs = self
                    .history
                    .exprs
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        parse_expr(s)
                            .map_err(|e| ConfigError(format!("history.exprs[{i}]: {e}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(History::Exprs(exprs))
            }
            other => Err(ConfigError(format!(
                "history.kind: `{other}` (expected constant or exprs)"
            ))),
        }
    }

    pub fn build_measures(&self) -> Result<(WeightedMeasure, WeightedMeasure), ConfigError> {
        let build = |field: &str, spec: &MeasureSpec| -> Result<WeightedMeasure, ConfigError> {
            match (&spec.density, &spec.left, &spec.right) {
                (Some(d), None, None) => {
                    let e = parse_expr(d)
                        .map_err(|err| ConfigError(format!("{field}.density: {err}")))?;
                    WeightedMeasure::new(field, e).map_err(|err| ConfigError(err.to_string()))
                }
                (None, Some(l), Some(r)) => {
                    let le = parse_expr(l)
                        .map_err(|err| ConfigError(format!("{field}.left: {err}")))?;
                    let re = parse_expr(r)
                        .map_err(|err| ConfigError(format!("{field}.right: {err}")))?;
                    WeightedMeasure::split(field, le, re, spec.split_at)
                        .map_err(|err| ConfigError(err.to_string()))
                }
                _ => Err(ConfigError(format!(
                    "{field}: give either `density`, or both `left` and `right`"
                ))),
            }
        };
        Ok((build("mu", &self.measures.mu)?, build("nu", &self.measures.nu)?))
    }

    pub fn fixedpoint_options(&self) -> FixedpointOptions {
        FixedpointOptions {
            t_lo: self.windows.t_lo,
            t_hi: self.windows.t_hi,
            grid_step: self.tolerances.grid_step,
            tol: self.tolerances.tol,
            eps_tail: self.tolerances.eps_tail,
            ..Default::default()
        }
    }

    pub fn check_options(&self) -> CheckOptions {
        CheckOptions::default()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.tolerances;
        for (name, v) in [
            ("step", t.step),
            ("tol", t.tol),
            ("eps_tail", t.eps_tail),
            ("grid_step", t.grid_step),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError(format!("tolerances.{name} must be positive, got {v}")));
            }
        }
        if !(t.safety > 0.0 && t.safety < 1.0) {
            return Err(ConfigError(format!(
                "tolerances.safety must be in (0, 1), got {}",
                t.safety
            )));
        }
        if !(self.windows.t_hi > self.windows.t_lo) {
            return Err(ConfigError("windows: t_hi must exceed t_lo".into()));
        }
        self.build_model()?;
        self.build_history()?;
        self.build_measures()?;
        Ok(())
    }
}
