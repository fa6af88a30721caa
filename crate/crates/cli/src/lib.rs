//! Scenario files and the four subcommands behind `rlearn`.
//!
//! Scenarios are TOML. Exactly one of `[model]`+`[prior]`+`[payoffs]`,
//! `[ellsberg]` or `[test]` describes the problem; `[simulation]`, `[value]`,
//! `[sweep]` and `[output]` are optional. Results are JSON or CSV with every
//! number rounded to 12 significant digits so outputs diff cleanly.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context};
use robust_learning::math::{ModelParams, Payoffs, PriorInterval};
use robust_learning::simulation::{self, Measure, SimConfig, SimStats};
use robust_learning::thresholds::{self, Regime, Thresholds};
use robust_learning::value::{ContactTolerance, ValueFunction};
use robust_learning::{Family, Problem, StoppingPolicy};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Censoring share above which `simulate` fails.
pub const MAX_CENSORED_SHARE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub theta0: f64,
    pub theta1: f64,
    pub sigma: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub m_lo: f64,
    pub m_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffSection {
    pub u00: f64,
    pub u01: f64,
    pub u10: f64,
    pub u11: f64,
    pub u2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllsbergSection {
    pub alpha: f64,
    pub eps: f64,
    pub c: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSection {
    pub beta: f64,
    pub a: f64,
    pub b: f64,
    pub m_lo: f64,
    pub m_hi: f64,
    pub c: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureChoice {
    /// `measure = "worst_case"`
    WorstCase,
    /// `measure = { true_theta = 0.125 }`
    TrueTheta(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub measure: MeasureChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge: Option<bool>,
    /// CSV file for a trace of the first path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: String,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoffs: Option<PayoffSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ellsberg: Option<EllsbergSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<TestSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<ValueSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

impl Scenario {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let s: Scenario = toml::from_str(text).context("invalid scenario file")?;
        s.problem()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Expands the scenario into a problem. Fails unless exactly one family
    /// is given.
    pub fn problem(&self) -> anyhow::Result<Problem> {
        let general = self.model.is_some() || self.prior.is_some() || self.payoffs.is_some();
        let count = general as usize + self.ellsberg.is_some() as usize + self.test.is_some() as usize;
        if count != 1 {
            bail!("specify exactly one of [model]+[prior]+[payoffs], [ellsberg] or [test] (found {count})");
        }
        if let Some(e) = &self.ellsberg {
            return Ok(Problem::ellsberg(e.alpha, e.eps, e.c, e.sigma)?);
        }
        if let Some(t) = &self.test {
            return Ok(Problem::hypothesis_test(t.beta, t.a, t.b, t.m_lo, t.m_hi, t.c, t.sigma)?);
        }
        let (Some(m), Some(p), Some(u)) = (&self.model, &self.prior, &self.payoffs) else {
            bail!("a general problem needs [model], [prior] and [payoffs]");
        };
        Ok(Problem::new(
            ModelParams::new(m.theta0, m.theta1, m.sigma, m.c)?,
            PriorInterval::new(p.m_lo, p.m_hi)?,
            Payoffs::new(u.u00, u.u01, u.u10, u.u11, u.u2)?,
        ))
    }
}

/// How a command failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: exit code 2.
    Input(anyhow::Error),
    /// A solver gave up: exit code 3.
    Solver(anyhow::Error),
    /// Too many censored paths: exit code 4. The report is still produced.
    Censored { report: String, message: String },
    /// Anything else, such as an unwritable output: exit code 1.
    Other(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Censored { .. } => 4,
            Failure::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(e) => write!(f, "input error: {e:#}"),
            Failure::Solver(e) => write!(f, "solver error: {e:#}"),
            Failure::Censored { message, .. } => write!(f, "{message}"),
            Failure::Other(e) => write!(f, "{e:#}"),
        }
    }
}

pub type CmdResult = Result<String, Failure>;

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{:?}", round12(x))
    }
}

/// Rounds every number in a JSON tree; non-finite numbers become `null`.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => serde_json::Number::from_f64(round12(x)).map(Value::Number).unwrap_or(Value::Null),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn to_json(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&round_json(v)).expect("JSON values always serialise");
    s.push('\n');
    s
}

fn solve(problem: &Problem) -> Result<Thresholds, Failure> {
    thresholds::classify(problem).map_err(|e| Failure::Solver(e.into()))
}

fn family_json(problem: &Problem) -> Value {
    serde_json::to_value(problem.family).unwrap_or(Value::Null)
}

fn regime_json(regime: &Regime) -> Value {
    match regime {
        Regime::AI(r) => json!({
            "r1_right": r.r1_right, "r2_right": r.r2_right,
            "r1_left": r.r1_left, "r2_left": r.r2_left,
        }),
        Regime::AII(r) | Regime::B(r) => json!({ "r_left": r.r_left, "r_right": r.r_right }),
    }
}

/// Threshold report: regime, thresholds, critical default payoffs, signal
/// boundaries and, where relevant, the two-urn and Bayesian comparisons.
pub fn cmd_solve(scenario: &Scenario) -> CmdResult {
    let problem = scenario.problem().map_err(Failure::Input)?;
    let th = solve(&problem)?;
    let policy = StoppingPolicy::new(&problem, &th);
    let rule = policy.signal_rule();
    let mut report = json!({
        "family": family_json(&problem),
        "case": th.tag.name(),
        "regime": th.regime.name(),
        "thresholds": regime_json(&th.regime),
        "pi_lo": th.pi.pi_lo,
        "pi_hi": th.pi.pi_hi,
        "u2_star": th.u2_star,
        "u2_dstar": th.u2_dstar,
        "c_hat": problem.params.c_hat(),
        "signal_boundaries": {
            "slope": rule.slope,
            "a0_offset": rule.a0,
            "a1_offset": rule.a1,
            "a2_band": rule.a2.map(|(lo, hi)| json!([lo, hi])),
            "switch_offset": rule.switch,
        },
    });
    if let Family::Ellsberg { eps, .. } = problem.family {
        let e = thresholds::solve_ellsberg(eps, &problem.params).map_err(|e| Failure::Solver(e.into()))?;
        report["ellsberg"] = json!({
            "r_hat": e.r_hat, "cutoff": e.cutoff, "r_bar": e.r_bar, "z_bar": e.z_bar,
        });
    }
    if problem.payoffs.no_risky_option() {
        let b = thresholds::bayesian_from_problem(&problem).map_err(|e| Failure::Solver(e.into()))?;
        report["bayesian"] = json!({ "r_left": b.r_left, "r_right": b.r_right });
    }
    Ok(to_json(report))
}

/// Value function on a `(t, z)` grid.
pub fn cmd_value(scenario: &Scenario, format: Format) -> CmdResult {
    let problem = scenario.problem().map_err(Failure::Input)?;
    let th = solve(&problem)?;
    let vf = ValueFunction::build(&problem, &th).map_err(|e| Failure::Solver(e.into()))?;
    let section = scenario.value.clone().unwrap_or(ValueSection {
        times: None,
        z_min: None,
        z_max: None,
        points: None,
    });
    let times = section.times.unwrap_or_else(|| vec![0.0]);
    let points = section.points.unwrap_or(201);
    if points < 2 {
        return Err(Failure::Input(anyhow!("[value] points must be at least 2")));
    }
    let mut rows = Vec::new();
    for &t in &times {
        let b = vf.boundaries(t);
        let (lo, hi) = (b.first().map_or(0.0, |b| b.z), b.last().map_or(0.0, |b| b.z));
        let pad = 0.25 * (hi - lo).abs() + 0.25;
        let z_min = section.z_min.unwrap_or(lo - pad);
        let z_max = section.z_max.unwrap_or(hi + pad);
        for i in 0..points {
            let z = z_min + (z_max - z_min) * i as f64 / (points - 1) as f64;
            let pair = problem.posterior_pair(t, z);
            rows.push((t, z, pair.m_lo_t, pair.m_hi_t, vf.evaluate(t, z), vf.immediate_payoff(t, z), vf.region(t, z)));
        }
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Failure::Other(e.into());
            w.write_record(["t", "z", "m_lo", "m_hi", "v", "x", "region"]).map_err(io)?;
            for (t, z, ml, mh, v, x, r) in &rows {
                w.write_record([
                    fmt_num(*t),
                    fmt_num(*z),
                    fmt_num(*ml),
                    fmt_num(*mh),
                    fmt_num(*v),
                    fmt_num(*x),
                    format!("{r:?}"),
                ])
                .map_err(io)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Failure::Other(anyhow!("{e}")))?)
                .map_err(|e| Failure::Other(e.into()))
        }
        Format::Json => {
            let contact: Vec<Value> = times
                .iter()
                .map(|&t| serde_json::to_value(vf.check_smooth_contact(t, ContactTolerance::default())).unwrap_or(Value::Null))
                .collect();
            let grid: Vec<Value> = rows
                .iter()
                .map(|(t, z, ml, mh, v, x, r)| json!({"t": t, "z": z, "m_lo": ml, "m_hi": mh, "v": v, "x": x, "region": format!("{r:?}")}))
                .collect();
            Ok(to_json(json!({
                "case": th.tag.name(),
                "v00": vf.evaluate(0.0, 0.0),
                "constants": vf.constants(),
                "left": vf.left_coefficients(),
                "right": vf.right_coefficients(),
                "contact": contact,
                "grid": grid,
            })))
        }
    }
}

/// Overrides taken from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimOverrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub dt: Option<f64>,
}

pub fn sim_config(scenario: &Scenario, o: SimOverrides) -> anyhow::Result<SimConfig> {
    let s = scenario
        .simulation
        .as_ref()
        .ok_or_else(|| anyhow!("simulate needs a [simulation] section"))?;
    let measure = match s.measure {
        MeasureChoice::WorstCase => Measure::WorstCase,
        MeasureChoice::TrueTheta(theta) => Measure::TrueTheta(theta),
    };
    let mut cfg = SimConfig::new(measure, o.paths.or(s.paths).unwrap_or(10_000), o.seed.or(s.seed).unwrap_or(0));
    if let Some(dt) = o.dt.or(s.dt) {
        cfg.dt = dt;
    }
    cfg.t_max = s.t_max;
    if let Some(b) = s.bridge {
        cfg.bridge = b;
    }
    Ok(cfg)
}

fn stats_json(stats: &SimStats) -> Value {
    serde_json::to_value(stats).unwrap_or(Value::Null)
}

/// Runs the Monte Carlo and reports `SimStats`, with closed-form
/// comparisons for the two-urn problem. Writes a trace CSV when asked.
pub fn cmd_simulate(scenario: &Scenario, overrides: SimOverrides) -> CmdResult {
    let problem = scenario.problem().map_err(Failure::Input)?;
    let cfg = sim_config(scenario, overrides).map_err(Failure::Input)?;
    let th = solve(&problem)?;
    let policy = StoppingPolicy::new(&problem, &th);
    let stats = simulation::estimate(&cfg, &policy).map_err(|e| Failure::Input(e.into()))?;
    let mut report = json!({
        "case": th.tag.name(),
        "measure": serde_json::to_value(match cfg.measure {
            Measure::WorstCase => MeasureChoice::WorstCase,
            Measure::TrueTheta(theta) => MeasureChoice::TrueTheta(theta),
        })
        .unwrap_or(Value::Null),
        "seed": cfg.seed,
        "bridge": cfg.bridge,
        "stats": stats_json(&stats),
    });
    if let (Family::Ellsberg { alpha, eps }, Measure::TrueTheta(theta)) = (problem.family, cfg.measure) {
        if let Ok(a) = simulation::analytic_stats(alpha, eps, problem.params.c(), problem.params.sigma(), theta) {
            report["analytic"] = json!({
                "mean_tau": a.mean_tau,
                "correct_prob": a.correct_prob,
                "mean_tau_dev_in_se": (stats.mean_tau - a.mean_tau) / stats.se_tau,
                "correct_dev_in_se": match (a.correct_prob, stats.correct_rate, stats.se_correct) {
                    (Some(p), Some(q), Some(se)) => json!((q - p) / se),
                    _ => Value::Null,
                },
            });
        }
    }
    if let Some(path) = scenario.simulation.as_ref().and_then(|s| s.trace.clone()) {
        let stride = scenario.simulation.as_ref().and_then(|s| s.trace_stride).unwrap_or(100);
        let (_, trace) = simulation::simulate_path(&cfg, &policy, 0, Some(stride)).map_err(|e| Failure::Input(e.into()))?;
        let mut out = String::from("t,z,m_lo,m_hi,decision\n");
        for p in trace.unwrap_or_default() {
            let d = match p.decision {
                robust_learning::Decision::Continue => "continue".to_string(),
                robust_learning::Decision::Stop(a) => format!("stop_{}", a.name()),
            };
            let _ = writeln!(out, "{},{},{},{},{d}", fmt_num(p.t), fmt_num(p.z), fmt_num(p.m_lo), fmt_num(p.m_hi));
        }
        std::fs::write(&path, out).with_context(|| format!("cannot write trace to {path}")).map_err(Failure::Other)?;
    }
    let text = to_json(report);
    let share = stats.censored_count as f64 / stats.n_paths as f64;
    if share > MAX_CENSORED_SHARE {
        return Err(Failure::Censored {
            report: text,
            message: format!(
                "{} of {} paths censored at t_max = {} (more than {}%)",
                stats.censored_count,
                stats.n_paths,
                stats.t_max,
                MAX_CENSORED_SHARE * 100.0
            ),
        });
    }
    Ok(text)
}

/// Parses `a,b,c` or `from:to:count`.
pub fn parse_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let from: f64 = parts[0].trim().parse()?;
        let to: f64 = parts[1].trim().parse()?;
        let n: usize = parts[2].trim().parse()?;
        if n < 2 {
            bail!("a range grid needs at least 2 points");
        }
        return Ok((0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("bad grid value {s:?}: {e}")))
        .collect()
}

pub const SWEEP_PARAMETERS: [&str; 4] = ["eps", "c", "alpha", "u2"];

fn vary(problem: &Problem, parameter: &str, x: f64) -> robust_learning::Result<Problem> {
    let p = &problem.params;
    match (parameter, problem.family) {
        ("eps", Family::Ellsberg { alpha, .. }) => Problem::ellsberg(alpha, x, p.c(), p.sigma()),
        ("alpha", Family::Ellsberg { eps, .. }) => Problem::ellsberg(x, eps, p.c(), p.sigma()),
        ("c", _) => problem.with_c(x),
        ("u2", _) => problem.with_u2(x),
        _ => unreachable!("checked by the caller"),
    }
}

const SWEEP_HEADER: [&str; 16] = [
    "parameter", "value", "status", "case", "regime", "r_left", "r_right", "r1_left", "r1_right", "u2_dstar",
    "z_lower", "z_upper", "z_bar", "v00", "mean_tau", "correct_prob",
];

/// One CSV row per grid point. Points where the solver fails keep a status
/// message and the sweep goes on.
pub fn cmd_sweep(scenario: &Scenario, parameter: Option<&str>, grid: Option<Vec<f64>>) -> CmdResult {
    let problem = scenario.problem().map_err(Failure::Input)?;
    let parameter = parameter
        .map(str::to_string)
        .or_else(|| scenario.sweep.as_ref().map(|s| s.parameter.clone()))
        .ok_or_else(|| Failure::Input(anyhow!("no sweep parameter (use --param or [sweep])")))?;
    let grid = grid
        .or_else(|| scenario.sweep.as_ref().map(|s| s.grid.clone()))
        .ok_or_else(|| Failure::Input(anyhow!("no sweep grid (use --grid or [sweep])")))?;
    if !SWEEP_PARAMETERS.contains(&parameter.as_str()) {
        return Err(Failure::Input(anyhow!("parameter must be one of {SWEEP_PARAMETERS:?}, got {parameter:?}")));
    }
    if matches!(parameter.as_str(), "eps" | "alpha") && !matches!(problem.family, Family::Ellsberg { .. }) {
        return Err(Failure::Input(anyhow!("{parameter} can only be swept for an [ellsberg] scenario")));
    }
    let io = |e: csv::Error| Failure::Other(e.into());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).map_err(io)?;
    for &x in &grid {
        let mut row: Vec<String> = vec![parameter.clone(), fmt_num(x)];
        let solved = vary(&problem, &parameter, x).and_then(|p| thresholds::classify(&p).map(|th| (p, th)));
        match solved {
            Err(e) => {
                row.push(format!("error: {e}"));
                row.resize(SWEEP_HEADER.len(), String::new());
            }
            Ok((p, th)) => {
                row.push("ok".into());
                row.push(th.tag.name().into());
                row.push(th.regime.name().into());
                let (rl, rr, r1l, r1r) = match th.regime {
                    Regime::AI(r) => (r.r2_left, r.r2_right, Some(r.r1_left), Some(r.r1_right)),
                    Regime::AII(r) | Regime::B(r) => (r.r_left, r.r_right, None, None),
                };
                let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
                row.extend([fmt_num(rl), fmt_num(rr), opt(r1l), opt(r1r), fmt_num(th.u2_dstar)]);
                let rule = *StoppingPolicy::new(&p, &th).signal_rule();
                row.extend([fmt_num(rule.a0), fmt_num(rule.a1)]);
                let v00 = ValueFunction::build(&p, &th).map(|vf| vf.evaluate(0.0, 0.0)).ok();
                let (z_bar, mean_tau, correct) = match p.family {
                    Family::Ellsberg { alpha, eps } => {
                        let s = |theta| simulation::analytic_stats(alpha, eps, p.params.c(), p.params.sigma(), theta).ok();
                        (
                            s(0.0).map(|a| a.z_bar),
                            s(0.0).map(|a| a.mean_tau),
                            s(alpha).and_then(|a| a.correct_prob),
                        )
                    }
                    _ => (None, None, None),
                };
                row.extend([opt(z_bar), opt(v00), opt(mean_tau), opt(correct)]);
            }
        }
        w.write_record(&row).map_err(io)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Failure::Other(anyhow!("{e}")))?).map_err(|e| Failure::Other(e.into()))
}
