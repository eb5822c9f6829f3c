//! Command dispatch: maps each subcommand onto the corresponding core
//! routine and folds outcomes into exit codes.

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;

use papdyn_core::dde::{integrate, History};
use papdyn_core::fixedpoint::picard_solve;
use papdyn_core::measure::{default_z_schedule, ergodicity_trend, DEFAULT_ERGODIC_THRESHOLD};
use papdyn_core::model::NetModel;
use papdyn_core::signal::SignalExpr;
use papdyn_core::stability::{decay_rate, verify_decay};
use papdyn_core::Error as CoreError;

use crate::config::{parse_config, RunConfig};
use crate::exit;
use crate::report::Report;

#[derive(Parser)]
#[command(name = "papdyn", about = "Analyzer for delayed networks with time-varying coefficients", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to the TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Directory for report and CSV artifacts
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the integration step
    #[arg(long)]
    step: Option<f64>,
    /// Override the convergence tolerance
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the model/measure hypotheses and report the derived constants
    Check(Common),
    /// Integrate the network forward from the configured history
    Simulate(Common),
    /// Iterate the solution operator to its fixed point and check the ball
    Solve(Common),
    /// Compute the decay certificate and verify the envelope numerically
    Stability(Common),
    /// Run the weighted-mean decay diagnostics on every coefficient
    Ergodic(Common),
}

/// Entry point behind `main`; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let (common, result) = match &cli.command {
        Command::Check(c) => (c, dispatch(c, cmd_check)),
        Command::Simulate(c) => (c, dispatch(c, cmd_simulate)),
        Command::Solve(c) => (c, dispatch(c, cmd_solve)),
        Command::Stability(c) => (c, dispatch(c, cmd_stability)),
        Command::Ergodic(c) => (c, dispatch(c, cmd_ergodic)),
    };
    match result {
        Ok(report) => {
            print!("{}", report.render_text());
            if let Some(dir) = &common.out {
                if let Err(e) = report.write(dir) {
                    eprintln!("error: cannot write report to {}: {e}", dir.display());
                    return exit::NUMERICAL_ERROR;
                }
            }
            if report.passed {
                exit::PASS
            } else {
                exit::VERDICT_FAIL
            }
        }
        Err(code) => code,
    }
}

fn dispatch(
    common: &Common,
    f: impl Fn(&RunConfig, &Common) -> Result<Report, i32>,
) -> Result<Report, i32> {
    let text = std::fs::read_to_string(&common.config).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", common.config.display());
        exit::CONFIG_ERROR
    })?;
    let mut config = parse_config(&text).map_err(|e| {
        eprintln!("error: {e}");
        exit::CONFIG_ERROR
    })?;
    if let Some(step) = common.step {
        config.tolerances.step = step;
    }
    if let Some(tol) = common.tol {
        config.tolerances.tol = tol;
    }
    config.validate().map_err(|e| {
        eprintln!("error: {e}");
        exit::CONFIG_ERROR
    })?;
    f(&config, common)
}

/// Core errors either reflect a bad problem statement (2) or a numerical
/// breakdown (3); certificate refusals are verdict failures (1).
fn classify(e: &CoreError) -> i32 {
    match e {
        CoreError::Parse(_)
        | CoreError::UnsupportedShape(_)
        | CoreError::InvalidMeasure(_)
        | CoreError::DegenerateMeasure(_)
        | CoreError::InvalidModel(_)
        | CoreError::StepExceedsDelay { .. }
        | CoreError::Invalid(_) => exit::CONFIG_ERROR,
        CoreError::DecayRateNotPositive(_)
        | CoreError::NoCertificate(_)
        | CoreError::NoCoupling => exit::VERDICT_FAIL,
        _ => exit::NUMERICAL_ERROR,
    }
}

fn fail(e: CoreError) -> i32 {
    eprintln!("error: {e}");
    classify(&e)
}

fn write_csv(dir: &Option<PathBuf>, name: &str, csv: &str) -> Result<(), i32> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir).map_err(|e| {
            eprintln!("error: cannot create {}: {e}", dir.display());
            exit::NUMERICAL_ERROR
        })?;
        std::fs::write(dir.join(name), csv).map_err(|e| {
            eprintln!("error: cannot write {name}: {e}");
            exit::NUMERICAL_ERROR
        })?;
    }
    Ok(())
}

fn cmd_check(config: &RunConfig, _common: &Common) -> Result<Report, i32> {
    let model = config.build_model().map_err(|e| {
        eprintln!("error: {e}");
        exit::CONFIG_ERROR
    })?;
    let (mu, nu) = config.build_measures().map_err(|e| {
        eprintln!("error: {e}");
        exit::CONFIG_ERROR
    })?;
    let hr = model.check_hypotheses(&mu, &nu, &config.check_options());

    let mut report = Report::new("check");
    report.section("constants");
    report.line("L", hr.l);
    if let Some(p1) = hr.p1 {
        report.line("p1", p1);
    }
    if let Some(q1) = hr.q1 {
        report.line("q1", q1);
    }
    if let Some(p0) = hr.p0 {
        report.line("p0", p0);
    }
    if let Some(q0) = hr.q0 {
        report.line("q0", q0);
    }
    report.line("ball_radius", hr.ball_radius);
    report.line("beta_bound", hr.beta_bound);
    report.section("hypotheses");
    for (key, verdict) in &hr.verdicts {
        report.verdict(key, verdict.passed, &verdict.detail);
    }
    report.passed = hr.overall_pass;
    report.attach_json("check", serde_json::to_value(&hr).unwrap_or(json!(null)));
    Ok(report)
}

fn cmd_simulate(config: &RunConfig, common: &Common) -> Result<Report, i32> {
    let model = config.build_model().map_err(|e| {
        eprintln!("error: {e}");
        exit::CONFIG_ERROR
    })?;
    let history = config.build_history().map_err(|e| {
        eprintln!("error: {e}");
        exit::CONFIG_ERROR
    })?;
    let traj = integrate(&model, &history, config.simulate.t_end, config.tolerances.step)
        .map_err(fail)?;
    write_csv(&common.out, "trajectory.csv", &traj.to_csv())?;

    let mut sup = 0.0f64;
    for k in 0..traj.nodes() {
        for v in traj.value_at_node(k) {
            sup = sup.max(v.abs());
        }
    }
    let mut report = Report::new("simulate");
    report.section("trajectory");
    report.line("t_end", traj.t_end());
    report.line("step", traj.step);
    report.line("nodes", traj.nodes());
    report.line("sup_norm", sup);
    report.attach_json(
        "simulate",
        json!({ "t_end": traj.t_end(), "step": traj.step, "nodes": traj.nodes(), "sup_norm": sup }),
    );
    Ok(report)
}

fn cmd_solve(config: &RunConfig, common: &Common) -> Result<Report, i32> {
    let model = config.build_model().map_err(|e| {
        eprintln!("error: {e}");
        exit::CONFIG_ERROR
    })?;
    let res = picard_solve(&model, &config.fixedpoint_options()).map_err(fail)?;
    write_csv(&common.out, "solution.csv", &res.solution.to_csv())?;

    let mut report = Report::new("solve");
    report.section("iteration");
    report.line("window", format!("[{}, {}]", res.solution.t_lo, res.solution.t_hi()));
    report.line("comparison_from", res.comparison_from);
    report.line("iterations", res.iterations);
    report.line("contraction_q", res.q_used);
    report.line("empirical_ratio", res.empirical_ratio);
    report.line("residual", res.residual);
    report.section("ball");
    report.line("distance_to_base", res.ball.distance);
    report.line("radius", res.ball.radius);
    report.verdict("inside", res.ball.inside, format!("margin {}", res.ball_margin));
    report.attach_json(
        "solve",
        json!({
            "iterations": res.iterations,
            "sup_diffs": res.sup_diffs,
            "empirical_ratio": res.empirical_ratio,
            "residual": res.residual,
            "ball": serde_json::to_value(&res.ball).unwrap_or(json!(null)),
        }),
    );
    Ok(report)
}

/// Deterministic pseudo-random values in [-0.5, 0.5] for history pairs.
fn lcg_stream(seed: u64) -> impl FnMut() -> f64 {
    let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
    move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }
}

fn cmd_stability(config: &RunConfig, _common: &Common) -> Result<Report, i32> {
    let model = config.build_model().map_err(|e| {
        eprintln!("error: {e}");
        exit::CONFIG_ERROR
    })?;
    let cert = decay_rate(&model, config.tolerances.safety).map_err(fail)?;

    let mut report = Report::new("stability");
    report.section("certificate");
    report.line("eps_star", format!("{:?}", cert.eps_star));
    report.line("eta", cert.eta);
    report.line("lambda", cert.lambda);
    report.line("m_const", cert.m_const);
    for (i, m) in cert.margins.iter().enumerate() {
        report.verdict(&format!("margin[{}]", i + 1), *m < 1.0, m);
    }

    report.section("envelope");
    let mut rand = lcg_stream(0x5eed);
    for pair in 0..config.stability.history_pairs {
        let ha = History::Constant((0..model.n).map(|_| rand()).collect());
        let hb = History::Constant((0..model.n).map(|_| rand()).collect());
        let v = verify_decay(
            &model,
            &ha,
            &hb,
            config.stability.horizon,
            config.tolerances.step,
            &cert,
            None,
        )
        .map_err(fail)?;
        report.verdict(
            &format!("pair[{pair}]"),
            v.envelope_holds,
            format!("max ratio {:.3e} at t = {:.3}", v.max_ratio, v.t_worst),
        );
    }
    report.attach_json("certificate", serde_json::to_value(&cert).unwrap_or(json!(null)));
    Ok(report)
}

fn coefficient_signals(model: &NetModel) -> Vec<(String, &SignalExpr)> {
    let mut out = Vec::new();
    for i in 0..model.n {
        out.push((format!("c[{i}]"), &model.c[i]));
        out.push((format!("inputs[{i}]"), &model.inputs[i]));
        for j in 0..model.n {
            out.push((format!("d[{i}][{j}]"), &model.d[i][j]));
            out.push((format!("a[{i}][{j}]"), &model.a[i][j]));
            for l in 0..model.n {
                out.push((format!("b[{i}][{j}][{l}]"), &model.b[i][j][l]));
            }
        }
    }
    out
}

fn cmd_ergodic(config: &RunConfig, _common: &Common) -> Result<Report, i32> {
    let model = config.build_model().map_err(|e| {
        eprintln!("error: {e}");
        exit::CONFIG_ERROR
    })?;
    let (mu, nu) = config.build_measures().map_err(|e| {
        eprintln!("error: {e}");
        exit::CONFIG_ERROR
    })?;

    let mut report = Report::new("ergodic");
    report.section("coefficient decay parts");
    let mut details = Vec::new();
    for (name, sig) in coefficient_signals(&model) {
        let (_, erg) = sig.decompose();
        if erg.is_zero() {
            continue;
        }
        let v = ergodicity_trend(
            |t| erg.eval_clamped(t),
            &mu,
            &nu,
            sig.domain_floor(),
            &default_z_schedule(),
            DEFAULT_ERGODIC_THRESHOLD,
        )
        .map_err(fail)?;
        report.verdict(
            &name,
            v.passed,
            format!(
                "final remainder {:.3e} at z = {}, slope {:.3}",
                v.remainders.last().unwrap(),
                v.z_values.last().unwrap(),
                v.trend_slope
            ),
        );
        details.push(json!({ "signal": name, "verdict": serde_json::to_value(&v).unwrap_or(json!(null)) }));
    }
    if details.is_empty() {
        report.line("note", "no coefficient has a decaying part");
    }
    report.attach_json("ergodic", json!(details));
    Ok(report)
}
