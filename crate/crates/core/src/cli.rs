//! Command-line front end. [`run`] parses argv, computes, and returns the exit
//! code with everything that should go to stdout and stderr, so the binary
//! and the tests drive the same path.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bilinear::{
    attainment_set, is_operator_approx_birkhoff, is_operator_birkhoff, is_operator_smooth,
    operator_norm, BilinearOp, NormMethod, NormOptions, ATTAINMENT_TOL, CLUSTER_RADIUS,
    DEFAULT_GRID_RESOLUTION, DEFAULT_RESTARTS, OPERATOR_TOL,
};
use crate::derivatives::{rho, rho_closed, rho_numeric};
use crate::error::{Error, Result};
use crate::oracle::{render_table, theorem_info, verify_all, verify_theorem, Summary, THEOREMS};
use crate::orthogonality::{
    check_james, in_negative_part, in_positive_part, is_approx_birkhoff, is_b_star, is_birkhoff,
    is_strong_birkhoff, orthogonality_cone, rho_orthogonal, support_set, DEFAULT_TOL,
};
use crate::spaces::{SpaceSpec, Vector};

const SCHEMAS: &str = "\
Input schemas:
  space   {\"kind\":\"lp\",\"p\":<number>|\"inf\",\"n\":<int>}
          {\"kind\":\"sum1\"|\"prodmax\",\"left\":<space>,\"right\":<space>}
          or the compact form lp:<p>:<n>, e.g. lp:inf:3
  vector  [x1, ..., xn] (needs --space) or {\"space\":<space>,\"v\":[x1, ..., xn]}
  tensor  {\"X\":<space>,\"Y\":<space>,\"Z\":<space>,\"c\":[[[c_kij]]]} with
          T(x,y)_k = sum_ij c[k][i][j] x_i y_j, inline or as a file path

Exit codes: 0 computed (relation holds, no counterexamples), 1 relation
fails or counterexample found, 2 input error.
Environment: NORMGEO_THREADS caps the worker threads of `verify`.";

#[derive(Parser, Debug)]
#[command(name = "normgeo", version, about = "Norm derivatives, orthogonality and bilinear operator geometry", after_help = SCHEMAS)]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One-sided derivatives rho_plus and rho_minus of the norm at x along y
    Derive {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_enum, default_value_t = DeriveMethod::Auto)]
        method: DeriveMethod,
    },
    /// Decide an orthogonality relation between x and y
    Ortho {
        #[arg(long, value_enum)]
        relation: Relation,
        #[command(flatten)]
        pair: PairArgs,
        /// Slack of the approximate relation, in [0, 1)
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Arc of directions orthogonal to x through y in span{x, y}
    Cone {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 720)]
        resolution: usize,
    },
    /// Supporting functionals at a unit x of an lp space
    Support {
        #[arg(long)]
        space: Option<String>,
        #[arg(long)]
        x: String,
    },
    /// Operator norm of a bilinear tensor, with its attainment set
    BilinearNorm {
        #[command(flatten)]
        op: OperatorArgs,
        #[arg(long, value_enum, default_value_t = NormMethodArg::Alternating)]
        method: NormMethodArg,
        #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
        resolution: usize,
    },
    /// Birkhoff-James (or approximate, with --eps) orthogonality of operators
    BilinearOrtho {
        #[command(flatten)]
        op: OperatorArgs,
        /// The operator A in T perp A
        #[arg(long)]
        other: String,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = OPERATOR_TOL)]
        tol: f64,
    },
    /// Whether a bilinear operator is a smooth point of the operator space
    BilinearSmooth {
        #[command(flatten)]
        op: OperatorArgs,
    },
    /// Run a registered property suite, or all of them
    Verify {
        /// Suite id from list-theorems, or "all"
        #[arg(long, default_value = "all")]
        theorem: String,
        /// Trials per suite; defaults to each suite's own count
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the registered suite ids
    ListTheorems,
}

#[derive(Args, Debug)]
struct PairArgs {
    /// Space as JSON or lp:<p>:<n>; optional when the vectors carry it
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
}

#[derive(Args, Debug)]
struct OperatorArgs {
    /// Tensor JSON, inline or a file path
    #[arg(long)]
    tensor: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
}

impl OperatorArgs {
    fn options(&self) -> NormOptions {
        NormOptions {
            seed: self.seed,
            restarts: self.restarts.max(1),
            ..NormOptions::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DeriveMethod {
    Auto,
    Closed,
    Numeric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Relation {
    Birkhoff,
    Strong,
    Approx,
    Bstar,
    Positive,
    Negative,
    Rho,
    James,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum NormMethodArg {
    Alternating,
    Multistart,
    Grid,
}

/// What a run produced: exit code plus the two output streams.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `argv` (program name first) and executes the command.
pub fn run<I, T>(argv: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutput { code: 2, stdout: String::new(), stderr: text }
            } else {
                CliOutput { code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    match execute(&cli) {
        Ok((ok, stdout)) => CliOutput {
            code: if ok { 0 } else { 1 },
            stdout,
            stderr: String::new(),
        },
        Err(e) => CliOutput {
            code: 2,
            stdout: String::new(),
            stderr: format!("normgeo: {e}\n"),
        },
    }
}

/// Reads a payload given inline or as a path to a file.
fn payload(arg: &str) -> Result<String> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') || !Path::new(arg).is_file() {
        return Ok(arg.to_string());
    }
    std::fs::read_to_string(arg).map_err(|e| Error::Input(format!("cannot read {arg:?}: {e}")))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("bad {what} JSON: {e}")))
}

/// A vector literal, either bare coordinates checked against `space` or a
/// tagged vector whose space must agree with `space` when both are given.
fn parse_vector(arg: &str, space: Option<&SpaceSpec>, name: &str) -> Result<Vector> {
    let text = payload(arg)?;
    if text.trim_start().starts_with('[') {
        let coords: Vec<f64> = parse_json(&text, name)?;
        let space = space.ok_or_else(|| Error::Input(format!("--{name} is bare coordinates, so --space is required")))?;
        return Vector::new(space.clone(), coords);
    }
    let v: Vector = parse_json(&text, name)?;
    if let Some(s) = space {
        if *s != v.space {
            return Err(Error::Input(format!("--{name} lives in {} but --space is {s}", v.space)));
        }
    }
    Vector::new(v.space, v.coords)
}

fn parse_space(arg: Option<&str>) -> Result<Option<SpaceSpec>> {
    arg.map(|s| payload(s)?.parse()).transpose()
}

fn parse_pair(p: &PairArgs) -> Result<(SpaceSpec, Vec<f64>, Vec<f64>)> {
    let space = parse_space(p.space.as_deref())?;
    let x = parse_vector(&p.x, space.as_ref(), "x")?;
    let y = parse_vector(&p.y, Some(&x.space), "y")?;
    Ok((x.space, x.coords, y.coords))
}

fn parse_tensor(arg: &str) -> Result<BilinearOp> {
    parse_json(&payload(arg)?, "tensor")
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

/// Flat `key  value` lines for the table format.
fn key_values(value: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut String) {
        match v {
            Value::Object(map) => {
                for (k, v) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, v, out);
                }
            }
            other => {
                let _ = writeln!(out, "{prefix:<28} {other}");
            }
        }
    }
    let mut out = String::new();
    walk("", value, &mut out);
    out
}

fn render<T: Serialize>(format: Format, value: &T) -> String {
    match format {
        Format::Json => to_json(value),
        Format::Table => key_values(&serde_json::to_value(value).expect("serializable output")),
    }
}

fn execute(cli: &Cli) -> Result<(bool, String)> {
    let f = cli.format;
    match &cli.command {
        Command::Derive { pair, method } => {
            let (space, x, y) = parse_pair(pair)?;
            let r = match method {
                DeriveMethod::Auto => rho(&space, &x, &y)?,
                DeriveMethod::Closed => rho_closed(&space, &x, &y)?,
                DeriveMethod::Numeric => rho_numeric(&space, &x, &y)?,
            };
            Ok((true, render(f, &r)))
        }
        Command::Ortho { relation, pair, eps, tol } => {
            let (space, x, y) = parse_pair(pair)?;
            let (holds, value) = ortho(*relation, &space, &x, &y, *eps, *tol)?;
            Ok((holds, render(f, &value)))
        }
        Command::Cone { pair, resolution } => {
            let (space, x, y) = parse_pair(pair)?;
            Ok((true, render(f, &orthogonality_cone(&space, &x, &y, *resolution)?)))
        }
        Command::Support { space, x } => {
            let space = parse_space(space.as_deref())?;
            let x = parse_vector(x, space.as_ref(), "x")?;
            Ok((true, render(f, &support_set(&x.space, &x.coords)?)))
        }
        Command::BilinearNorm { op, method, resolution } => {
            let t = parse_tensor(&op.tensor)?;
            let opts = NormOptions {
                method: match method {
                    NormMethodArg::Alternating => NormMethod::Alternating,
                    NormMethodArg::Multistart => NormMethod::Multistart,
                    NormMethodArg::Grid => NormMethod::Grid,
                },
                grid_resolution: *resolution,
                ..op.options()
            };
            let report = operator_norm(&t, &opts)?;
            let attainment = if report.value > 0.0 {
                Some(attainment_set(&t, &op.options(), ATTAINMENT_TOL, CLUSTER_RADIUS)?)
            } else {
                None
            };
            Ok((true, render(f, &json!({ "norm": report, "attainment": attainment }))))
        }
        Command::BilinearOrtho { op, other, eps, tol } => {
            let t = parse_tensor(&op.tensor)?;
            let a = parse_tensor(other)?;
            match eps {
                Some(e) => {
                    let v = is_operator_approx_birkhoff(&t, &a, *e, &op.options(), *tol)?;
                    Ok((v.numeric.holds, render(f, &v)))
                }
                None => {
                    let v = is_operator_birkhoff(&t, &a, &op.options(), *tol)?;
                    Ok((v.numeric.holds, render(f, &v)))
                }
            }
        }
        Command::BilinearSmooth { op } => {
            let t = parse_tensor(&op.tensor)?;
            let v = is_operator_smooth(&t, &op.options())?;
            Ok((v.holds, render(f, &v)))
        }
        Command::Verify { theorem, trials, seed } => {
            let summary = if theorem == "all" {
                verify_all(*trials, *seed)?
            } else {
                let info = theorem_info(theorem)
                    .ok_or_else(|| Error::Input(format!("unknown theorem id {theorem:?}; see list-theorems")))?;
                let report = verify_theorem(info.id, trials.unwrap_or_else(|| info.default_trials()), *seed)?;
                Summary::new(vec![report])
            };
            let out = match f {
                Format::Json => to_json(&summary),
                Format::Table => render_table(&summary.reports),
            };
            Ok((summary.passed, out))
        }
        Command::ListTheorems => {
            let out = match f {
                Format::Json => to_json(&THEOREMS),
                Format::Table => THEOREMS.iter().fold(String::new(), |mut s, t| {
                    let _ = writeln!(s, "{:<14} {:<9} {}", t.id, t.default_trials(), t.checks);
                    s
                }),
            };
            Ok((true, out))
        }
    }
}

fn ortho(
    relation: Relation,
    space: &SpaceSpec,
    x: &[f64],
    y: &[f64],
    eps: Option<f64>,
    tol: f64,
) -> Result<(bool, Value)> {
    if eps.is_some() && relation != Relation::Approx {
        return Err(Error::Input("--eps applies only to --relation approx".into()));
    }
    let verdict = |v: crate::orthogonality::OrthoVerdict| (v.holds, serde_json::to_value(v).expect("serializable"));
    let plain = |name: &str, holds: bool| (holds, json!({ "relation": name, "holds": holds }));
    Ok(match relation {
        Relation::Birkhoff => verdict(is_birkhoff(space, x, y, tol)?),
        Relation::Strong => verdict(is_strong_birkhoff(space, x, y)?),
        Relation::Approx => {
            let eps = eps.ok_or_else(|| Error::Input("--relation approx needs --eps".into()))?;
            verdict(is_approx_birkhoff(space, x, y, eps, tol)?)
        }
        Relation::Bstar => verdict(is_b_star(space, x, y)?),
        Relation::Positive => plain("positive_part", in_positive_part(space, x, y)?),
        Relation::Negative => plain("negative_part", in_negative_part(space, x, y)?),
        Relation::James => plain("james", check_james(space, x, y)?),
        Relation::Rho => {
            let r = rho_orthogonal(space, x, y)?;
            let mut v = serde_json::to_value(r).expect("serializable");
            v["relation"] = json!("rho");
            v["holds"] = json!(r.perp_rho);
            (r.perp_rho, v)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> CliOutput {
        run(std::iter::once("normgeo").chain(args.iter().copied()))
    }

    fn json_of(out: &CliOutput) -> Value {
        serde_json::from_str(&out.stdout).expect("stdout is JSON")
    }

    #[test]
    fn derive_example() {
        let out = call(&["derive", "--space", r#"{"kind":"lp","p":1,"n":3}"#, "--x", "[1,-2,0]", "--y", "[1,1,-3]"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let v = json_of(&out);
        assert_eq!(v["rho_plus"], 3.0);
        assert_eq!(v["rho_minus"], -3.0);
    }

    #[test]
    fn ortho_exit_codes() {
        let ok = call(&["ortho", "--relation", "birkhoff", "--space", "lp:2:2", "--x", "[1,0]", "--y", "[0,1]"]);
        assert_eq!(ok.code, 0);
        assert_eq!(json_of(&ok)["holds"], true);
        let no = call(&["ortho", "--relation", "birkhoff", "--space", "lp:2:2", "--x", "[1,0]", "--y", "[1,1]"]);
        assert_eq!(no.code, 1);
        assert_eq!(json_of(&no)["holds"], false);
    }

    #[test]
    fn input_errors_exit_2() {
        for args in [
            &["derive", "--space", "lp:2:3", "--x", "[1,0]", "--y", "[0,1,0]"][..],
            &["derive", "--space", "{oops", "--x", "[1,0]", "--y", "[0,1]"],
            &["ortho", "--relation", "sideways", "--space", "lp:2:2", "--x", "[1,0]", "--y", "[0,1]"],
            &["verify", "--theorem", "NOPE"],
            &["ortho", "--relation", "approx", "--space", "lp:2:2", "--x", "[1,0]", "--y", "[0,1]"],
        ] {
            let out = call(args);
            assert_eq!(out.code, 2, "{args:?}");
            assert!(!out.stderr.is_empty());
            assert!(out.stdout.is_empty());
        }
    }

    #[test]
    fn tagged_vectors_carry_their_space() {
        let x = r#"{"space":{"kind":"lp","p":"inf","n":2},"v":[1,1]}"#;
        let out = call(&["ortho", "--relation", "birkhoff", "--x", x, "--y", "[1,-1]"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let clash = call(&["ortho", "--relation", "birkhoff", "--space", "lp:2:2", "--x", x, "--y", "[1,-1]"]);
        assert_eq!(clash.code, 2);
    }

    #[test]
    fn help_mentions_schemas() {
        let out = call(&["--help"]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("\"kind\":\"lp\""));
    }

    #[test]
    fn outputs_reparse() {
        let tensor = r#"{"X":{"kind":"lp","p":2,"n":2},"Y":{"kind":"lp","p":2,"n":2},"Z":{"kind":"lp","p":2,"n":2},
            "c":[[[2,0],[0,0]],[[0,0],[0,1]]]}"#;
        let out = call(&["bilinear-norm", "--tensor", tensor]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let v = json_of(&out);
        assert!((v["norm"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-9);
        let _: crate::bilinear::AttainmentSet = serde_json::from_value(v["attainment"].clone()).unwrap();

        let smooth = call(&["bilinear-smooth", "--tensor", tensor]);
        let _: crate::bilinear::SmoothnessVerdict = serde_json::from_str(&smooth.stdout).unwrap();

        let ortho = call(&["bilinear-ortho", "--tensor", tensor, "--other", tensor]);
        assert_eq!(ortho.code, 1);
        let _: crate::bilinear::OperatorOrthogonality = serde_json::from_str(&ortho.stdout).unwrap();

        let d = call(&["derive", "--space", "lp:inf:2", "--x", "[1,1]", "--y", "[1,-1]", "--method", "numeric"]);
        let _: crate::derivatives::RhoResult = serde_json::from_str(&d.stdout).unwrap();

        let s = call(&["support", "--space", "lp:1:3", "--x", "[0.5,0,-0.5]"]);
        let _: crate::orthogonality::SupportSet = serde_json::from_str(&s.stdout).unwrap();
    }

    #[test]
    fn verify_single_suite() {
        let out = call(&["verify", "--theorem", "TLINF", "--trials", "50", "--seed", "3"]);
        assert_eq!(out.code, 0, "{}", out.stdout);
        let s: Summary = serde_json::from_str(&out.stdout).unwrap();
        // trials count per family
        assert_eq!(s.reports[0].trials % 50, 0);
        assert_eq!(s.reports[0].seed, 3);
        let table = call(&["verify", "--theorem", "TLINF", "--trials", "50", "--format", "table"]);
        assert!(table.stdout.starts_with("id"));
    }

    #[test]
    fn list_theorems_covers_registry() {
        let v = json_of(&call(&["list-theorems"]));
        assert_eq!(v.as_array().unwrap().len(), THEOREMS.len());
    }
}
