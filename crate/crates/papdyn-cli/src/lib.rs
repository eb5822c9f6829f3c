pub mod config;
pub mod report;
pub mod run;

pub use run::run;

/// Process exit codes: 0 all checks pass, 1 a verdict fails, 2 bad
/// configuration, 3 numerical failure.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const VERDICT_FAIL: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
    pub const NUMERICAL_ERROR: i32 = 3;
}
