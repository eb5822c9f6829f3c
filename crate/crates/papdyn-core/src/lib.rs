//! Numerical machinery for delayed Hopfield-type networks with time-varying
//! coefficients: signal representation and bounding, weighted-measure ergodic
//! diagnostics, hypothesis checking, direct integration by the method of
//! steps, Picard iteration of the solution operator, and exponential decay
//! certificates.

pub mod dde;
pub mod error;
pub mod fixedpoint;
pub mod measure;
pub mod model;
pub mod parse;
pub mod presets;
pub mod quad;
pub mod signal;
pub mod stability;

pub use dde::{History, Trajectory};
pub use error::Error;
pub use fixedpoint::{CandidateFunction, PicardResult};
pub use measure::{ErgodicVerdict, WeightedMeasure};
pub use model::{HypothesisReport, NetModel};
pub use parse::MathExpr;
pub use signal::{ActivationSpec, SignalExpr};
pub use stability::DecayCertificate;

pub type Result<T> = std::result::Result<T, Error>;
