//! Command-line front end for the `cbnorm` binary.
//!
//! `cbnorm <verb> [suite] [flags]` computes one quantity and writes a JSON
//! report (`schema_version`, `inputs`, `results`, `diagnostics`) to stdout or
//! `--report <path>`. Floats are written with 17 significant digits. `sweep`
//! and `limit` also accept `--csv`.
//!
//! Exit codes: `0` success, `2` invalid input, `3` an inequality suite found a
//! violation, `4` the three-factor Minkowski search found a counterexample.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::cbentropy::{self, ClosedForm, DEFAULT_P_GRID};
use crate::channels::{Channel, ChannelSpec};
use crate::error::{Error, Result};
use crate::inequalities::{self, SuiteReport, TrialConfig, DEFAULT_DELTA_GRID};
use crate::linalg::{self, BipartiteState, ComplexMatrix, DimSplit};
use crate::random::{random_density, rng_from_seed};
use crate::vnorms::{self, NormParams, OptReport};
use crate::C64;

pub const SCHEMA_VERSION: &str = "1";
pub const SEED_ENV: &str = "CBNORM_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;
pub const EXIT_FINDING: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    /// Load a channel and print its description and checks.
    Chan,
    /// Evaluate a vector-valued norm of a bipartite matrix.
    Norm,
    /// Maximal output ratio ω_p.
    Omega,
    /// ω_p with a one-dimensional reference.
    Nu,
    /// Minimal CB conditional entropy.
    Scbmin,
    /// p → 1 limit of (1 − ω_p^p)/(p − 1).
    Limit,
    /// Multiplicativity of ω_p on a product channel.
    Mult,
    /// Additivity of the minimal CB entropy on a product channel.
    Add,
    /// Depolarizing threshold where the minimal CB entropy changes sign.
    Mustar,
    /// Ratio sweep for the nonunital qubit map.
    Sweep,
    /// Randomized inequality suite.
    Ineq,
    /// Closed-form channel values.
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    /// Schatten norm of the whole matrix.
    Schatten,
    /// ‖X‖_(p,1).
    P1,
    /// ‖X‖_(∞,p).
    Infp,
    /// ‖X‖_(1,p).
    #[value(name = "1p")]
    #[serde(rename = "1p")]
    OneP,
    /// ‖X‖_(p,q), p ≤ q.
    Pq,
    /// Max-min form of the Schatten norm.
    Maxmin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Ssa,
    Condsub,
    Minkowski,
    Mink3,
    LiebThirring,
    Klein,
    /// Random entanglement-breaking channels; dims `n,d_in,d_out`.
    Ebt,
    Deriv,
    Bp,
    /// Non-PSD inputs against the PSD q→p optimum of `--channel`.
    Positive,
    /// CB bound for q ≥ p on `--channel`.
    Cbqp,
}

#[derive(Debug, Parser)]
#[command(name = "cbnorm", version, allow_negative_numbers = true, about = "CB norms, CB entropies and inequality checks for quantum channels")]
pub struct Cli {
    pub verb: Verb,
    /// Suite name for `ineq`.
    pub suite: Option<Suite>,
    /// Builtin channel (`depolarizing:d=2,mu=0.5`) or a channel JSON file.
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long = "channel-b")]
    pub channel_b: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Dimension for `mustar` and `closed`.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Restrict ω_p / S_CB,min to the maximally entangled input.
    #[arg(long)]
    pub max_entangled: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<String>,
    /// Print CSV to stdout (`sweep`, `limit`).
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub kind: Option<NormKind>,
    /// `bell:d=2`, `mixed:d1=2,d2=2`, `random:d1=2,d2=2` or a matrix JSON file.
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long)]
    pub form: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long = "p-grid", value_delimiter = ',')]
    pub p_grid: Option<Vec<f64>>,
    #[arg(long = "delta-grid", value_delimiter = ',')]
    pub delta_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub bracket: Option<Vec<f64>>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "slack-tol")]
    pub slack_tol: Option<f64>,
    /// Reference dimension for `ineq cbqp`.
    #[arg(long = "d-ext")]
    pub d_ext: Option<usize>,
}

/// Result of one command before serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub csv: Option<String>,
    pub exit_code: i32,
}

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => match emit(&cli, &outcome) {
            Ok(()) => outcome.exit_code,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_INVALID
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> std::io::Result<()> {
    let text = to_json_17(&outcome.report);
    if let Some(path) = &cli.report {
        std::fs::write(path, format!("{text}\n"))?;
    }
    let body = match (&outcome.csv, cli.csv) {
        (Some(csv), true) => csv.clone(),
        _ if cli.report.is_none() => format!("{text}\n"),
        _ => return Ok(()),
    };
    let mut out = std::io::stdout().lock();
    match out.write_all(body.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

/// Seed from `--seed`, else `CBNORM_SEED`, else 0.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Parse(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

/// A builtin channel name, or a path to a channel JSON file.
pub fn load_channel(spec: &str) -> Result<Channel> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{spec}: {e}")))?;
        let parsed: ChannelSpec = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{spec}: line {}, column {}: {e}", e.line(), e.column())))?;
        return Channel::from_spec(&parsed);
    }
    Channel::from_builtin(spec)
}

#[derive(Debug, serde::Deserialize)]
struct MatrixFile {
    dims: Vec<usize>,
    matrix: Vec<Vec<[f64; 2]>>,
}

/// Bipartite PSD input for `norm`, `ineq deriv` and `ineq bp`.
pub fn load_state(spec: &str, seed: u64) -> Result<(ComplexMatrix, DimSplit)> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{spec}: {e}")))?;
        let f: MatrixFile = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{spec}: line {}, column {}: {e}", e.line(), e.column())))?;
        let split = DimSplit::new(&f.dims)?;
        let n = split.total();
        if f.matrix.len() != n || f.matrix.iter().any(|r| r.len() != n) {
            return Err(Error::DimMismatch(format!("{spec}: matrix is not {n}x{n}")));
        }
        let m = ComplexMatrix::from_fn(n, n, |r, c| C64::new(f.matrix[r][c][0], f.matrix[r][c][1]));
        linalg::check_psd(&m)?;
        return Ok((m, split));
    }
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    let mut kv = std::collections::BTreeMap::new();
    for part in args.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}'")))?;
        let v: usize = v.trim().parse().map_err(|_| Error::Parse(format!("'{v}' is not a positive integer")))?;
        if v == 0 {
            return Err(Error::Parse(format!("{k} must be positive")));
        }
        kv.insert(k.trim().to_string(), v);
    }
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| Error::Parse(format!("state '{name}' needs '{k}='")));
    match name.trim() {
        "bell" => {
            let psi = BipartiteState::maximally_entangled(get("d")?);
            Ok((psi.density(), psi.split()))
        }
        "mixed" => {
            let (d1, d2) = (get("d1")?, get("d2")?);
            Ok((linalg::identity(d1 * d2).unscale((d1 * d2) as f64), DimSplit::pair(d1, d2)))
        }
        "random" => {
            let (d1, d2) = (get("d1")?, get("d2")?);
            Ok((random_density(d1 * d2, &mut rng_from_seed(seed)), DimSplit::pair(d1, d2)))
        }
        other => Err(Error::BadName(other.to_string())),
    }
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| json!([m[(r, c)].re, m[(r, c)].im])).collect()))
            .collect(),
    )
}

fn opt_diagnostics(r: &OptReport) -> Value {
    json!({
        "iterations": r.iterations,
        "restarts_used": r.restarts_used,
        "converged": r.converged,
        "restart_spread": r.spread,
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Serializes with every float written as 17 significant digits.
pub fn to_json_17(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out
}

fn format_f64(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    if x == 0.0 {
        return "0.0".into();
    }
    format!("{x:.16e}")
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_f64(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(|i| !i.is_array() && !i.is_object()) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(item, indent, out);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

fn require<T: Copy>(v: Option<T>, flag: &str, verb: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidParameter(format!("{verb} requires --{flag}")))
}

fn require_channel(cli: &Cli, verb: &str) -> Result<(String, Channel)> {
    let spec = cli
        .channel
        .clone()
        .ok_or_else(|| Error::InvalidParameter(format!("{verb} requires --channel")))?;
    let ch = load_channel(&spec)?;
    Ok((spec, ch))
}

struct Context {
    inputs: Map<String, Value>,
    diagnostics: Map<String, Value>,
    seed: u64,
    params: NormParams,
}

impl Context {
    fn new(cli: &Cli) -> Result<Self> {
        let seed = resolve_seed(cli.seed)?;
        let defaults = NormParams::default();
        let params = NormParams {
            p: cli.p.unwrap_or(defaults.p),
            restarts: cli.restarts.unwrap_or(defaults.restarts),
            max_iters: cli.max_iters.unwrap_or(defaults.max_iters),
            seed,
            ..defaults
        };
        if params.restarts == 0 {
            return Err(Error::InvalidParameter("--restarts must be at least 1".into()));
        }
        let mut inputs = Map::new();
        inputs.insert("verb".into(), to_value(&cli.verb));
        inputs.insert("seed".into(), json!(seed));
        Ok(Self { inputs, diagnostics: Map::new(), seed, params })
    }

    fn input(&mut self, key: &str, v: impl Serialize) {
        self.inputs.insert(key.into(), to_value(&v));
    }

    fn optimizer_inputs(&mut self) {
        self.input("restarts", self.params.restarts);
        self.input("max_iters", self.params.max_iters);
        self.input("grad_tol", self.params.grad_tol);
    }
}

/// Runs the parsed command without writing anything.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let started = Instant::now();
    let mut ctx = Context::new(cli)?;
    let mut csv = None;
    let mut exit_code = EXIT_OK;
    let results = match cli.verb {
        Verb::Chan => chan(cli, &mut ctx)?,
        Verb::Norm => norm(cli, &mut ctx)?,
        Verb::Omega | Verb::Nu | Verb::Scbmin => cb_value(cli, &mut ctx)?,
        Verb::Limit => {
            let (results, table) = limit(cli, &mut ctx)?;
            csv = Some(table);
            results
        }
        Verb::Mult | Verb::Add => tensor(cli, &mut ctx)?,
        Verb::Mustar => mustar(cli, &mut ctx)?,
        Verb::Sweep => {
            let (results, table) = sweep(cli, &mut ctx)?;
            csv = Some(table);
            results
        }
        Verb::Ineq => {
            let (results, code) = ineq(cli, &mut ctx)?;
            exit_code = code;
            results
        }
        Verb::Closed => closed(cli, &mut ctx)?,
    };
    if cli.csv && csv.is_none() {
        return Err(Error::InvalidParameter("--csv is only available for sweep and limit".into()));
    }
    ctx.diagnostics.insert("wall_time_s".into(), json!(started.elapsed().as_secs_f64()));
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "inputs": Value::Object(ctx.inputs),
        "results": results,
        "diagnostics": Value::Object(ctx.diagnostics),
    });
    Ok(Outcome { report, csv, exit_code })
}

fn chan(cli: &Cli, ctx: &mut Context) -> Result<Value> {
    let (spec, ch) = require_channel(cli, "chan")?;
    ctx.input("channel", &spec);
    let choi_min = linalg::hermitian_eigenvalues(&ch.choi().matrix).last().copied().unwrap_or(0.0);
    Ok(json!({
        "d_in": ch.d_in(),
        "d_out": ch.d_out(),
        "kraus_count": ch.kraus().len(),
        "tp_residual": ch.tp_residual(),
        "trace_preserving": ch.is_tp(),
        "choi_min_eigenvalue": choi_min,
        "entanglement_breaking_tag": ch.is_entanglement_breaking(),
        "spec": to_value(&ch.to_spec()),
    }))
}

fn norm(cli: &Cli, ctx: &mut Context) -> Result<Value> {
    let kind = require(cli.kind, "kind", "norm")?;
    let spec = cli.state.clone().ok_or_else(|| Error::InvalidParameter("norm requires --state".into()))?;
    let p = require(cli.p, "p", "norm")?;
    let (x, split) = load_state(&spec, ctx.seed)?;
    if split.dims().len() != 2 {
        return Err(Error::DimMismatch("norm needs a bipartite state".into()));
    }
    ctx.input("kind", kind);
    ctx.input("state", &spec);
    ctx.input("p", p);
    let params = ctx.params.with_p(p);
    let report = match kind {
        NormKind::Schatten => return Ok(json!({ "value": linalg::schatten_norm_hermitian(&x, p)? })),
        NormKind::P1 => return Ok(json!({ "value": vnorms::norm_p1(&x, &split, p)? })),
        NormKind::Infp => vnorms::norm_infp(&x, &split, &params)?,
        NormKind::OneP => vnorms::norm_1p(&x, &split, &params)?,
        NormKind::Pq => {
            let q = require(cli.q, "q", "norm --kind pq")?;
            ctx.input("q", q);
            vnorms::norm_pq_inf(&x, &split, p, q, &params)?
        }
        NormKind::Maxmin => vnorms::maxmin_p(&x, &split, &params)?,
    };
    ctx.optimizer_inputs();
    ctx.diagnostics.insert("optimizer".into(), opt_diagnostics(&report));
    Ok(json!({ "value": report.value, "argument": matrix_json(&report.argument) }))
}

fn cb_value(cli: &Cli, ctx: &mut Context) -> Result<Value> {
    let verb = match cli.verb {
        Verb::Omega => "omega",
        Verb::Nu => "nu",
        _ => "scbmin",
    };
    let (spec, ch) = require_channel(cli, verb)?;
    ctx.input("channel", &spec);
    ctx.optimizer_inputs();
    let r = match cli.verb {
        Verb::Omega | Verb::Nu => {
            let p = require(cli.p, "p", verb)?;
            ctx.input("p", p);
            let params = ctx.params.with_p(p);
            if cli.verb == Verb::Omega {
                ctx.input("max_entangled", cli.max_entangled);
                cbentropy::omega_p(&ch, p, &params, cli.max_entangled)?
            } else {
                cbentropy::nu_p(&ch, p, &params)?
            }
        }
        _ => {
            ctx.input("max_entangled", cli.max_entangled);
            cbentropy::s_cb_min(&ch, &ctx.params, cli.max_entangled)?
        }
    };
    ctx.diagnostics.insert("optimizer".into(), opt_diagnostics(&r.report));
    let mut out = json!({ "value": r.value, "input_coefficients": matrix_json(r.state.coeffs()) });
    if cli.verb == Verb::Scbmin {
        out["units"] = json!("bits");
    }
    Ok(out)
}

fn limit(cli: &Cli, ctx: &mut Context) -> Result<(Value, String)> {
    let (spec, ch) = require_channel(cli, "limit")?;
    ch.require_tp()?;
    let grid = cli.p_grid.clone().unwrap_or_else(|| DEFAULT_P_GRID.to_vec());
    ctx.input("channel", &spec);
    ctx.input("p_grid", &grid);
    ctx.optimizer_inputs();
    let est = cbentropy::cb_limit_estimate(&ch, &grid, &ctx.params)?;
    let mut table = String::from("p,omega,quotient_bits\n");
    for pt in &est.points {
        let _ = writeln!(table, "{},{},{}", format_f64(pt.p), format_f64(pt.omega), format_f64(pt.quotient));
    }
    Ok((json!({ "estimate_bits": est.estimate, "points": to_value(&est.points) }), table))
}

fn tensor(cli: &Cli, ctx: &mut Context) -> Result<Value> {
    let verb = if cli.verb == Verb::Mult { "mult" } else { "add" };
    let (spec_a, a) = require_channel(cli, verb)?;
    let spec_b = cli
        .channel_b
        .clone()
        .ok_or_else(|| Error::InvalidParameter(format!("{verb} requires --channel-b")))?;
    let b = load_channel(&spec_b)?;
    ctx.input("channel", &spec_a);
    ctx.input("channel_b", &spec_b);
    ctx.optimizer_inputs();
    let check = if cli.verb == Verb::Mult {
        let p = require(cli.p, "p", verb)?;
        ctx.input("p", p);
        cbentropy::mult_check_omega(&a, &b, p, &ctx.params.with_p(p))?
    } else {
        cbentropy::add_check_scb(&a, &b, &ctx.params)?
    };
    ctx.diagnostics.insert("product_restart_spread".into(), json!(check.spread));
    Ok(to_value(&check))
}

fn mustar(cli: &Cli, ctx: &mut Context) -> Result<Value> {
    let d = require(cli.d, "d", "mustar")?;
    let bracket = match cli.bracket.as_deref() {
        None => [0.0, 1.0],
        Some([lo, hi]) => [*lo, *hi],
        Some(other) => return Err(Error::InvalidParameter(format!("--bracket needs two values, got {other:?}"))),
    };
    let tol = cli.tol.unwrap_or(1e-12);
    ctx.input("d", d);
    ctx.input("bracket", bracket);
    ctx.input("tol", tol);
    let m = cbentropy::mu_star(d, bracket, tol)?;
    ctx.diagnostics.insert("monotone".into(), json!(m.monotone));
    ctx.diagnostics.insert("iterations".into(), json!(m.iterations));
    Ok(to_value(&m))
}

fn sweep(cli: &Cli, ctx: &mut Context) -> Result<(Value, String)> {
    let lambda = require(cli.lambda, "lambda", "sweep")?;
    let tau = require(cli.tau, "tau", "sweep")?;
    let p = require(cli.p, "p", "sweep")?;
    let grid = cbentropy::default_a_grid();
    ctx.input("lambda", lambda);
    ctx.input("tau", tau);
    ctx.input("p", p);
    ctx.input("a_grid", &grid);
    let s = cbentropy::nonunital_sweep(lambda, tau, p, &grid)?;
    let mut table = String::from("a,ratio\n");
    for pt in &s.curve {
        let _ = writeln!(table, "{},{}", format_f64(pt.a), format_f64(pt.ratio));
    }
    Ok((to_value(&s), table))
}

fn closed(cli: &Cli, ctx: &mut Context) -> Result<Value> {
    let name = cli.form.clone().ok_or_else(|| Error::InvalidParameter("closed requires --form".into()))?;
    let form: ClosedForm = name.parse()?;
    let d = require(cli.d, "d", "closed")?;
    let mu = cli.mu.unwrap_or(0.0);
    let p = cli.p.unwrap_or(1.0);
    ctx.input("form", form.name());
    ctx.input("d", d);
    ctx.input("mu", mu);
    ctx.input("p", p);
    Ok(json!({ "value": cbentropy::closed_form(form, d, mu, p)? }))
}

fn suite_defaults(suite: Suite) -> (Vec<usize>, f64, f64) {
    match suite {
        Suite::Ssa | Suite::Mink3 => (vec![2, 2, 2], if suite == Suite::Mink3 { 1.5 } else { 1.0 }, 1e-9),
        Suite::Condsub => (vec![2, 2, 2, 2], 1.0, 1e-9),
        Suite::Minkowski => (vec![2, 2], 2.0, 1e-9),
        Suite::LiebThirring => (vec![3], 2.0, 1e-9),
        Suite::Klein => (vec![3], 1.0, 1e-9),
        Suite::Ebt => (vec![2, 2, 2], 2.0, 1e-9),
        Suite::Deriv | Suite::Bp => (vec![], 1.0, 0.05),
        Suite::Positive => (vec![], 2.0, 1e-6),
        Suite::Cbqp => (vec![], 2.0, 1e-2),
    }
}

fn ineq(cli: &Cli, ctx: &mut Context) -> Result<(Value, i32)> {
    let suite = cli
        .suite
        .ok_or_else(|| Error::InvalidParameter("ineq requires a suite name".into()))?;
    let (default_dims, default_exp, default_tol) = suite_defaults(suite);
    let dims = cli.dims.clone().unwrap_or(default_dims);
    let exponent = cli.t.or(cli.p).unwrap_or(default_exp);
    let trials = cli.trials.unwrap_or(100);
    let slack_tol = cli.slack_tol.unwrap_or(default_tol);
    let cfg = TrialConfig::new(trials, ctx.seed, &dims, exponent).with_slack_tol(slack_tol);
    ctx.input("suite", suite);
    match suite {
        Suite::Deriv | Suite::Bp => {
            let spec = cli.state.clone().unwrap_or_else(|| "bell:d=2".into());
            let (x, split) = load_state(&spec, ctx.seed)?;
            let grid = cli.delta_grid.clone().unwrap_or_else(|| {
                if suite == Suite::Deriv { DEFAULT_DELTA_GRID.to_vec() } else { vec![0.1, 0.03, 0.01] }
            });
            ctx.input("state", &spec);
            ctx.input("delta_grid", &grid);
            ctx.input("tolerance", slack_tol);
            ctx.optimizer_inputs();
            let (value, ok) = if suite == Suite::Deriv {
                let r = inequalities::deriv_1p_check(&x, &split, &grid, &ctx.params)?;
                let ok = r.err <= slack_tol;
                (to_value(&r), ok)
            } else {
                let r = inequalities::bp_convergence_check(&x, &split, &grid, &ctx.params)?;
                let ok = r.final_distance <= slack_tol;
                (to_value(&r), ok)
            };
            let mut value = value;
            value["within_tolerance"] = json!(ok);
            return Ok((value, if ok { EXIT_OK } else { EXIT_VIOLATION }));
        }
        _ => {}
    }
    ctx.input("trials", trials);
    ctx.input("slack_tol", slack_tol);
    let report: SuiteReport = match suite {
        Suite::Ssa => inequalities::ssa_check(&cfg)?,
        Suite::Condsub => inequalities::cond_subadd_check(&cfg)?,
        Suite::Minkowski => {
            ctx.input("dims", &dims);
            ctx.input("t", exponent);
            inequalities::minkowski_checks(&cfg)?
        }
        Suite::Mink3 => inequalities::mink3_search(&cfg)?,
        Suite::LiebThirring => inequalities::lieb_thirring_check(&cfg)?,
        Suite::Klein => inequalities::klein_check(&cfg)?,
        Suite::Ebt => inequalities::ebt_random_check(&cfg)?,
        Suite::Positive | Suite::Cbqp => {
            let (spec, ch) = require_channel(cli, "ineq positive/cbqp")?;
            let p = cli.p.unwrap_or(default_exp);
            let q = cli.q.unwrap_or(if suite == Suite::Positive { 1.0 } else { p });
            ctx.input("channel", &spec);
            ctx.input("p", p);
            ctx.input("q", q);
            ctx.optimizer_inputs();
            let cfg = TrialConfig::new(trials, ctx.seed, &[ch.d_in()], p).with_slack_tol(slack_tol);
            if suite == Suite::Positive {
                inequalities::positive_achiever_check(&ch, q, p, &cfg, &ctx.params.with_p(p))?
            } else {
                let d_ext = cli.d_ext.unwrap_or(2);
                ctx.input("d_ext", d_ext);
                inequalities::q_geq_p_cb_check(&ch, q, p, d_ext, &cfg, &ctx.params.with_p(p))?
            }
        }
        Suite::Deriv | Suite::Bp => unreachable!("handled above"),
    };
    if !matches!(suite, Suite::Positive | Suite::Cbqp) {
        ctx.input("dims", &dims);
        ctx.input("exponent", exponent);
    }
    let code = match (report.is_clean(), report.exploratory) {
        (true, _) => EXIT_OK,
        (false, false) => EXIT_VIOLATION,
        (false, true) => EXIT_FINDING,
    };
    Ok((to_value(&report), code))
}
