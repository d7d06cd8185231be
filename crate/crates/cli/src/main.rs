use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use singlerail::conversion::{
    amplitude_relation_residual, success_density, synthesize_plan_with, transfer_relation_residual,
};
use singlerail::oracle::verify::DEFAULT_TOLERANCE;
use singlerail::oracle::{verify_plan, VerifyOptions};
use singlerail::solver::{round_sig, sweep, SweepAxis, SweepSpec, DEFAULT_CASE1_T};
use singlerail::{
    classify_feasibility, homodyne_coefficients, project_output, BeamSplitter, ConversionPlan,
    Error, HomodyneSetting, PlanOptions, SingleRailQubit, StateRecord,
};

const TOLERANCE_VAR: &str = "SINGLERAIL_TOLERANCE";

const STATE_SCHEMA: &str = r#"expected {"alpha": [re, im], "beta": [re, im], "efficiency": e} or {"rho": [[[re, im], [re, im]], [[re, im], [re, im]]]}"#;
const PLAN_SCHEMA: &str = r#"expected {"stages": [{"attenuation": tau} | {"beam_splitter_t": t, "homodyne": {"Q": q, "phi": p}} | {"phase_shift": chi}], "predicted_output": <qubit>, "predicted_success_density": d, "input"?: <qubit>}"#;

/// Convert imperfect single-rail qubits with a beam splitter and conditional homodyne detection.
#[derive(Parser)]
#[command(name = "singlerail", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Efficiency, generalized efficiency and density matrix of a state.
    Efficiency {
        /// State file, or inline JSON.
        state: String,
    },
    /// Output of one beam splitter and homodyne outcome.
    Convert {
        state: String,
        #[arg(long = "bs-t")]
        bs_t: f64,
        #[arg(long = "Q", allow_negative_numbers = true)]
        q: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phi: f64,
    },
    /// Feasibility verdict and, when feasible, a conversion plan.
    Plan {
        from: String,
        to: String,
        /// Where attenuation puts the generalized efficiency between the target's (0) and 1 (1).
        #[arg(long = "attenuation-mid", default_value_t = 0.5)]
        attenuation_mid: f64,
        /// Beam splitter used between two pure states.
        #[arg(long = "case1-t", default_value_t = DEFAULT_CASE1_T)]
        case1_t: f64,
    },
    /// Checks a plan against the Fock-space simulation and Monte Carlo sampling.
    Verify {
        plan: String,
        #[arg(long, default_value_t = 4)]
        truncation: usize,
        /// Zero skips the sampling section.
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        /// Half-width of the accepted homodyne window.
        #[arg(long, default_value_t = 0.01)]
        window: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Input state; overrides the plan's own `input`.
        #[arg(long)]
        input: Option<String>,
    },
    /// Tabulates the conversion along one parameter as CSV.
    Sweep {
        state: String,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, allow_negative_numbers = true)]
        min: f64,
        #[arg(long, allow_negative_numbers = true)]
        max: f64,
        #[arg(long)]
        steps: usize,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Transmissivity for the `Q` axis.
        #[arg(long = "bs-t", default_value_t = DEFAULT_CASE1_T)]
        bs_t: f64,
        /// Homodyne outcome for the `t` axis.
        #[arg(long = "Q", default_value_t = 0.0, allow_negative_numbers = true)]
        q: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phi: f64,
        /// State whose pure part fixes the target on the `E'` axis.
        #[arg(long)]
        target: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    #[value(name = "Q")]
    Q,
    #[value(name = "t")]
    T,
    #[value(name = "E'", alias = "E-prime", alias = "Eprime")]
    EPrime,
}

/// Failure with its exit code; `output` is still printed.
struct Failure {
    code: u8,
    message: String,
    output: Option<Value>,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
            output: None,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, output) = match &e {
            Error::InvalidState(_) => (3, None),
            Error::Infeasible(verdict) => {
                (4, Some(json!({ "verdict": to_value(verdict.as_ref()) })))
            }
            Error::Domain(_) | Error::NoSolution(_) => (4, None),
            Error::ZeroProbability(_) => (5, None),
            Error::TruncationOverflow { .. } => (6, None),
            Error::InvalidArgument(_) | Error::InvalidPovm(_) => (2, None),
            Error::Csv(_) => (1, None),
        };
        Failure {
            code,
            message: e.to_string(),
            output,
        }
    }
}

type CmdResult = Result<(Value, u8), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Efficiency { state } => cmd_efficiency(&state),
        Command::Convert {
            state,
            bs_t,
            q,
            phi,
        } => cmd_convert(&state, bs_t, q, phi),
        Command::Plan {
            from,
            to,
            attenuation_mid,
            case1_t,
        } => cmd_plan(&from, &to, attenuation_mid, case1_t),
        Command::Verify {
            plan,
            truncation,
            samples,
            window,
            seed,
            input,
        } => cmd_verify(&plan, truncation, samples, window, seed, input.as_deref()),
        Command::Sweep {
            state,
            axis,
            min,
            max,
            steps,
            out,
            bs_t,
            q,
            phi,
            target,
        } => cmd_sweep(
            &state,
            axis,
            min,
            max,
            steps,
            out.as_deref(),
            bs_t,
            q,
            phi,
            target.as_deref(),
        ),
    };
    match result {
        Ok((value, code)) => {
            if !value.is_null() {
                print_json(&value);
            }
            ExitCode::from(code)
        }
        Err(f) => {
            if let Some(v) = &f.output {
                print_json(v);
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn print_json(value: &Value) {
    let mut stdout = io::stdout().lock();
    // a closed pipe is not worth a panic
    let _ = serde_json::to_writer_pretty(&mut stdout, &rounded(value.clone()));
    let _ = writeln!(stdout);
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialize to JSON")
}

/// Every float in the document at twelve significant digits.
fn rounded(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            // + 0.0 turns -0.0 into 0.0
            .and_then(|f| serde_json::Number::from_f64(round_sig(f) + 0.0))
            .map_or(Value::Number(n), Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(rounded).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, rounded(v))).collect()),
        v => v,
    }
}

/// Inline JSON when the argument looks like an object, a file path otherwise.
fn read_source(arg: &str) -> Result<String, Failure> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        fs::read_to_string(arg).map_err(|e| Failure::parse(format!("cannot read {arg}: {e}")))
    }
}

fn read_state(arg: &str) -> Result<SingleRailQubit, Failure> {
    let text = read_source(arg)?;
    let record: StateRecord = serde_json::from_str(&text)
        .map_err(|e| Failure::parse(format!("{arg}: {e}; {STATE_SCHEMA}")))?;
    Ok(record.to_qubit()?)
}

fn cmd_efficiency(state: &str) -> CmdResult {
    let text = read_source(state)?;
    let record: StateRecord = serde_json::from_str(&text)
        .map_err(|e| Failure::parse(format!("{state}: {e}; {STATE_SCHEMA}")))?;
    let rho = record.to_density_matrix()?;
    let q = SingleRailQubit::from_density_matrix(&rho)?;
    Ok((
        json!({
            "E": q.efficiency(),
            "gen_efficiency": rho.generalized_efficiency(),
            "density_matrix": to_value(&rho),
        }),
        0,
    ))
}

fn cmd_convert(state: &str, t: f64, q_outcome: f64, phi: f64) -> CmdResult {
    let q = read_state(state)?;
    let bs = BeamSplitter::new(t)?;
    let coeffs = homodyne_coefficients(&HomodyneSetting::new(q_outcome, phi));
    let outcome = project_output(&q, &bs, &coeffs)?;
    let out = outcome.output;
    let mut residuals = json!({
        "amplitude_relation": amplitude_relation_residual(&q, &out, &bs, &coeffs),
        "transfer_relation": transfer_relation_residual(&q, &out, t),
    });
    if out.efficiency() < 1.0 {
        let formula = success_density(&q, &out, coeffs.theta0)?;
        residuals["success_density_formula"] = json!((formula - outcome.success_weight).abs());
    }
    Ok((
        json!({
            "output": to_value(&out),
            "success_density": outcome.success_weight,
            "gen_efficiency_in": q.generalized_efficiency(),
            "gen_efficiency_out": out.generalized_efficiency(),
            "residuals": residuals,
        }),
        0,
    ))
}

fn cmd_plan(from: &str, to: &str, attenuation_mid: f64, case1_t: f64) -> CmdResult {
    let q = read_state(from)?;
    let target = read_state(to)?;
    let verdict = classify_feasibility(&q, &target);
    if !verdict.is_feasible() {
        return Ok((json!({ "verdict": to_value(&verdict) }), 4));
    }
    let options = PlanOptions {
        attenuation_fraction: attenuation_mid,
        case1_t,
    };
    match synthesize_plan_with(&q, &target, &options) {
        Ok(plan) => Ok((
            json!({ "verdict": to_value(&verdict), "plan": to_value(&plan) }),
            0,
        )),
        Err(e) => {
            let mut failure = Failure::from(e);
            failure.output = Some(json!({ "verdict": to_value(&verdict) }));
            Err(failure)
        }
    }
}

fn verify_tolerance() -> Result<f64, Failure> {
    match std::env::var(TOLERANCE_VAR) {
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
            _ => Err(Failure::parse(format!(
                "{TOLERANCE_VAR} must be a positive number, got {s:?}"
            ))),
        },
        Err(_) => Ok(DEFAULT_TOLERANCE),
    }
}

fn cmd_verify(
    plan_arg: &str,
    truncation: usize,
    samples: usize,
    window: f64,
    seed: u64,
    input: Option<&str>,
) -> CmdResult {
    let text = read_source(plan_arg)?;
    let bad_plan = |e: serde_json::Error| Failure::parse(format!("{plan_arg}: {e}; {PLAN_SCHEMA}"));
    let mut doc: Value = serde_json::from_str(&text).map_err(bad_plan)?;
    // the output of `plan` wraps the plan next to its verdict
    if let Some(inner) = doc.get_mut("plan") {
        doc = inner.take();
    }
    let plan: ConversionPlan = serde_json::from_value(doc).map_err(bad_plan)?;
    let source = match input {
        Some(arg) => read_state(arg)?,
        None => plan
            .input
            .ok_or_else(|| Failure::parse("plan has no \"input\" state; pass --input"))?,
    };
    let options = VerifyOptions {
        truncation,
        samples,
        window,
        seed,
        tolerance: verify_tolerance()?,
    };
    let report = verify_plan(&source, &plan, &options)?;
    let code = if report.pass { 0 } else { 1 };
    Ok((to_value(&report), code))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    state: &str,
    axis: Axis,
    min: f64,
    max: f64,
    steps: usize,
    out: Option<&Path>,
    bs_t: f64,
    q_outcome: f64,
    phi: f64,
    target: Option<&str>,
) -> CmdResult {
    let q = read_state(state)?;
    let axis = match axis {
        Axis::Q => SweepAxis::Q,
        Axis::T => SweepAxis::T,
        Axis::EPrime => SweepAxis::EPrime,
    };
    let mut spec = SweepSpec::new(axis, min, max, steps);
    spec.t = bs_t;
    spec.q = q_outcome;
    spec.phi = phi;
    if let Some(arg) = target {
        let t = read_state(arg)?;
        spec.target_pure = (t.alpha(), t.beta());
    }
    let result = sweep(&q, &spec)?;
    match out {
        Some(path) => {
            let file = fs::File::create(path)
                .map_err(|e| Failure::from(Error::Csv(format!("{}: {e}", path.display()))))?;
            result.write_csv(io::BufWriter::new(file))?;
            Ok((
                json!({ "axis": axis.name(), "rows": result.points.len(), "out": path.display().to_string() }),
                0,
            ))
        }
        None => {
            result.write_csv(io::stdout().lock())?;
            Ok((Value::Null, 0))
        }
    }
}
