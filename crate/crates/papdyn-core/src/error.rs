use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expression parse error: {0}")]
    Parse(String),

    #[error("expression outside the supported shape: {0}")]
    UnsupportedShape(String),

    #[error("evaluation at t = {t} below the domain floor {floor}")]
    DomainViolation { t: f64, floor: f64 },

    #[error("expression is unbounded on the requested domain: {0}")]
    Unbounded(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("condition (M.4) fails: {0}")]
    DecayRateNotPositive(String),

    #[error("weight not integrable to power {p}: {detail}")]
    NotIntegrable { p: f64, detail: String },

    #[error("history lookup at t = {t} outside the covered range (min {min})")]
    HistoryOutOfRange { t: f64, min: f64 },

    #[error("step {step} exceeds the smallest delay {min_delay}")]
    StepExceedsDelay { step: f64, min_delay: f64 },

    #[error("state became non-finite at t = {0}")]
    Divergence(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite candidate values: {0}")]
    NonFiniteCandidate(String),

    #[error("Picard iteration did not converge after {iterations} iterations (last sup-diff {last_diff:.3e}, ratios {ratio_history:?})")]
    NonConvergence {
        iterations: usize,
        last_diff: f64,
        ratio_history: Vec<f64>,
    },

    #[error("no coupling terms: the envelope constant is undefined")]
    NoCoupling,

    #[error("no decay certificate: {0}")]
    NoCertificate(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}
