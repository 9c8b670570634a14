//! Command-line front end.
//!
//! `run` parses argv, executes one subcommand and writes the result to the
//! output stream. Exit codes: 0 success, 1 usage, 2 numerical failure,
//! 3 a theorem bound contradicted by the numbers.

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::distribution::{max_cdf, max_cdf_grid, max_pdf_grid, max_quantile};
use crate::dominance::{conditional_dominance_check, find_crossing, linspace, DominanceKind};
use crate::error::{Error, Result};
use crate::monte_carlo::{self, kernel_agreement, sample_maxima};
use crate::params::{EquicorrParams, QuadratureSpec};
use crate::special::norm_cdf;
use crate::trial::{calibrate_kappa, zeta_sweep};
use crate::verifier::{sweep_proof_chain, Quantity, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_THEOREM: i32 = 3;

const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Parser)]
#[command(
    name = "equimax",
    version,
    about = "Distribution of the maximum of an equicorrelated Gaussian vector",
    after_help = "Means are passed as a comma-separated list. Lists starting with a minus sign \
                  must be quoted with a leading space (--mu \" -0.5,-1\") or joined with '=' \
                  (--mu=-0.5,-1)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format (default json; csv for `sample`)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Report wall-clock time on stderr
    #[arg(long, global = true)]
    timings: bool,
    /// Quadrature base node count
    #[arg(long, global = true, default_value_t = QuadratureSpec::default().nodes)]
    nodes: usize,
    /// Quadrature truncation radius
    #[arg(long, global = true, default_value_t = QuadratureSpec::default().radius)]
    radius: f64,
    /// Quadrature absolute tolerance
    #[arg(long = "abs-tol", global = true, default_value_t = QuadratureSpec::default().abs_tol)]
    abs_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Plain,
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Number of coordinates; a single --mu value is repeated k times
    #[arg(long)]
    k: Option<usize>,
    /// Common correlation, in (0, 1)
    #[arg(long)]
    rho: f64,
    /// Comma-separated means
    #[arg(long, allow_hyphen_values = true)]
    mu: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// CDF of the maximum over a grid
    Cdf {
        #[command(flatten)]
        params: ParamArgs,
        /// lo:hi:step
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
    },
    /// Density of the maximum over a grid
    Pdf {
        #[command(flatten)]
        params: ParamArgs,
        /// lo:hi:step
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
    },
    /// Quantiles of the maximum
    Quantile {
        #[command(flatten)]
        params: ParamArgs,
        /// Comma-separated probability levels
        #[arg(long)]
        zeta: String,
    },
    /// Dominance relation against the standard normal
    Classify {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Crossing point and the conditional dominance it implies
    Crossing {
        #[command(flatten)]
        params: ParamArgs,
        /// Check points on each side of the crossing
        #[arg(long, default_value_t = 200)]
        side_points: usize,
    },
    /// Sweep of the proof-chain inequalities
    Verify {
        #[arg(long, default_value_t = 500)]
        probes: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        max_k: usize,
        /// Emit every individual check
        #[arg(long)]
        details: bool,
    },
    /// Monte Carlo cross-check of the CDF kernel
    McCheck {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.001)]
        alpha: f64,
        /// lo:hi:step (default: 50 points between the 0.5% and 99.5% quantiles)
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },
    /// Threshold shifts for a treatments-vs-control design
    Corollary {
        #[command(flatten)]
        params: ParamArgs,
        /// Lower bound on P(all X_i < 0); defaults to the exact value
        #[arg(long)]
        kappa: Option<f64>,
        /// Comma-separated target probabilities
        #[arg(long, default_value = "0.8,0.9,0.95,0.99")]
        zeta: String,
    },
    /// Dump seeded draws of the maximum
    Sample {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Named columns of rows.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

enum Output {
    Rows(Table),
    /// A JSON document with a flat tabular view for csv and plain.
    Record { json: Value, table: Table },
    /// Already written.
    Done,
}

struct Outcome {
    output: Output,
    code: i32,
    diagnostics: Vec<String>,
}

impl Outcome {
    fn ok(output: Output) -> Self {
        Self {
            output,
            code: EXIT_OK,
            diagnostics: Vec::new(),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_usage() {
        EXIT_USAGE
    } else if matches!(e, Error::TheoremViolated(_)) {
        EXIT_THEOREM
    } else {
        EXIT_NUMERICAL
    }
}

fn severity(code: i32) -> i32 {
    match code {
        EXIT_THEOREM => 3,
        EXIT_NUMERICAL => 2,
        EXIT_USAGE => 1,
        _ => 0,
    }
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                let _ = write!(out, "{}", e.render());
                return EXIT_OK;
            }
            ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                let _ = writeln!(err, "error: a subcommand is required (see --help)");
                return EXIT_USAGE;
            }
            _ => {
                let text = e.to_string();
                let line = text.lines().next().unwrap_or("error: invalid arguments");
                let _ = writeln!(err, "{line}");
                return EXIT_USAGE;
            }
        },
    };

    let started = Instant::now();
    let quad = QuadratureSpec {
        nodes: cli.nodes,
        radius: cli.radius,
        abs_tol: cli.abs_tol,
    };
    let format = cli.format.unwrap_or(match cli.command {
        Command::Sample { .. } => Format::Csv,
        _ => Format::Json,
    });
    let outcome = quad.validate().and_then(|_| execute(&cli.command, &quad, format, out));
    let code = match outcome {
        Ok(outcome) => {
            let written = match &outcome.output {
                Output::Rows(t) => emit_table(t, format, out),
                Output::Record { json, table } => emit_record(json, table, format, out),
                Output::Done => Ok(()),
            };
            for d in &outcome.diagnostics {
                let _ = writeln!(err, "{d}");
            }
            match written.and_then(|_| out.flush()) {
                Ok(()) => outcome.code,
                Err(e) => {
                    let _ = writeln!(err, "error: writing output: {e}");
                    EXIT_NUMERICAL
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    };
    if cli.timings {
        let _ = writeln!(err, "elapsed_seconds: {:.3}", started.elapsed().as_secs_f64());
    }
    code
}

fn execute(cmd: &Command, q: &QuadratureSpec, format: Format, out: &mut dyn Write) -> Result<Outcome> {
    match cmd {
        Command::Cdf { params, grid } | Command::Pdf { params, grid } => {
            let p = params.build()?;
            let xs = parse_grid(grid)?;
            let values = if matches!(cmd, Command::Cdf { .. }) {
                max_cdf_grid(&xs, &p, q)?
            } else {
                max_pdf_grid(&xs, &p, q)?
            };
            let rows = xs.iter().zip(values).map(|(&x, v)| vec![num(x), num(v)]).collect();
            Ok(Outcome::ok(Output::Rows(Table {
                columns: vec!["x", "value"],
                rows,
            })))
        }
        Command::Quantile { params, zeta } => {
            let p = params.build()?;
            let zetas = parse_list("zeta", zeta)?;
            let rows = zetas
                .iter()
                .map(|&z| Ok(vec![num(z), num(max_quantile(z, &p, q)?)]))
                .collect::<Result<_>>()?;
            Ok(Outcome::ok(Output::Rows(Table {
                columns: vec!["zeta", "x"],
                rows,
            })))
        }
        Command::Classify { params } => {
            let p = params.build()?;
            let verdict = find_crossing(&p, q)?;
            let json = serde_json::to_value(&verdict).expect("verdict serializes");
            let table = Table {
                columns: vec!["kind", "x0", "pdf_gap"],
                rows: vec![vec![
                    json["kind"].clone(),
                    opt_num(verdict.x0),
                    opt_num(verdict.pdf_gap),
                ]],
            };
            Ok(Outcome::ok(Output::Record { json, table }))
        }
        Command::Crossing { params, side_points } => crossing(params, *side_points, q),
        Command::Verify {
            probes,
            seed,
            max_k,
            details,
        } => verify(*probes, *seed, *max_k, *details, q),
        Command::McCheck {
            params,
            n,
            seed,
            alpha,
            grid,
        } => {
            let p = params.build()?;
            let xs = match grid {
                Some(g) => parse_grid(g)?,
                None => linspace(max_quantile(0.005, &p, q)?, max_quantile(0.995, &p, q)?, 50),
            };
            let r = kernel_agreement(&p, *n, *seed, &xs, *alpha, q)?;
            let json = serde_json::json!({
                "n": r.n,
                "alpha": r.band.alpha,
                "epsilon": r.band.epsilon,
                "grid_points": xs.len(),
                "worst_gap": r.worst_gap,
                "worst_x": r.worst_x,
                "pass": r.pass,
            });
            let table = record_table(&json, &["n", "alpha", "epsilon", "grid_points", "worst_gap", "worst_x", "pass"]);
            let mut outcome = Outcome::ok(Output::Record { json, table });
            if !r.pass {
                outcome.code = EXIT_NUMERICAL;
                outcome.diagnostics.push(format!(
                    "error: empirical CDF differs from the kernel by {:e} at x = {}, band half-width {:e}",
                    r.worst_gap, r.worst_x, r.band.epsilon
                ));
            }
            Ok(outcome)
        }
        Command::Corollary { params, kappa, zeta } => {
            let p = params.build()?;
            let zetas = parse_list("zeta", zeta)?;
            let kappa = match kappa {
                Some(k) => *k,
                None => calibrate_kappa(&p, q)?,
            };
            let mut outcome = Outcome::ok(Output::Done);
            let mut rows = Vec::new();
            for (z, r) in zetas.iter().zip(zeta_sweep(&p, kappa, &zetas, q)) {
                match r {
                    Ok(r) => rows.push(vec![num(r.zeta), num(r.kappa), num(r.shift), num(r.attained), num(r.margin)]),
                    Err(e) => {
                        let code = exit_code(&e);
                        if severity(code) > severity(outcome.code) {
                            outcome.code = code;
                        }
                        outcome.diagnostics.push(format!("error: zeta = {z}: {e}"));
                    }
                }
            }
            outcome.output = Output::Rows(Table {
                columns: vec!["zeta", "kappa", "shift", "attained", "margin"],
                rows,
            });
            Ok(outcome)
        }
        Command::Sample { params, n, seed } => {
            let p = params.build()?;
            let s = sample_maxima(&p, *n, *seed)?;
            if format == Format::Csv {
                monte_carlo::write_csv(&s, &mut *out)
                    .map_err(|e| Error::Integrity(format!("writing output: {e}")))?;
                return Ok(Outcome::ok(Output::Done));
            }
            let rows = s
                .maxima
                .iter()
                .enumerate()
                .map(|(i, &x)| vec![Value::from(i), num(x)])
                .collect();
            Ok(Outcome::ok(Output::Rows(Table {
                columns: vec!["index", "x_star"],
                rows,
            })))
        }
    }
}

fn crossing(params: &ParamArgs, side_points: usize, q: &QuadratureSpec) -> Result<Outcome> {
    let p = params.build()?;
    let verdict = find_crossing(&p, q)?;
    let kind = serde_json::to_value(verdict.kind).expect("kind serializes");
    let mut outcome = Outcome::ok(Output::Done);
    let json = match (verdict.kind, verdict.x0) {
        (DominanceKind::SingleCrossing, Some(x0)) => {
            let f0 = max_cdf(x0, &p, q)?;
            let conditional = conditional_dominance_check(&p, x0, side_points, q)?;
            if !conditional {
                outcome.code = EXIT_THEOREM;
                outcome
                    .diagnostics
                    .push(format!("error: conditional dominance fails around x0 = {x0}"));
            }
            serde_json::json!({
                "kind": kind,
                "x0": x0,
                "cdf_at_x0": f0,
                "cdf_gap": f0 - norm_cdf(x0),
                "pdf_gap": verdict.pdf_gap,
                "conditional_dominance": conditional,
            })
        }
        _ => serde_json::json!({
            "kind": kind,
            "x0": null,
            "cdf_at_x0": null,
            "cdf_gap": null,
            "pdf_gap": null,
            "conditional_dominance": null,
        }),
    };
    let table = record_table(
        &json,
        &["kind", "x0", "cdf_at_x0", "cdf_gap", "pdf_gap", "conditional_dominance"],
    );
    outcome.output = Output::Record { json, table };
    Ok(outcome)
}

fn verify(probes: usize, seed: u64, max_k: usize, details: bool, q: &QuadratureSpec) -> Result<Outcome> {
    if max_k == 0 {
        return Err(Error::InvalidParams("max-k must be at least 1".into()));
    }
    let spec = SweepSpec {
        probes,
        seed,
        max_k,
        ..Default::default()
    };
    let reports = sweep_proof_chain(&spec, q)?;
    let violations = reports.iter().filter(|r| !r.lower_bound_ok).count();

    let kinds = [
        Quantity::QRatioSum,
        Quantity::ZEval,
        Quantity::DqDnu0,
        Quantity::DhIDt,
        Quantity::DeltaI,
        Quantity::DeltaAgreement,
        Quantity::Sampford,
    ];
    let summary: Vec<Vec<Value>> = kinds
        .iter()
        .map(|kind| {
            let of_kind: Vec<_> = reports.iter().filter(|r| r.quantity == *kind).collect();
            let min = of_kind.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
            vec![
                Value::from(kind.name()),
                Value::from(of_kind.len()),
                Value::from(of_kind.iter().filter(|r| !r.lower_bound_ok).count()),
                if of_kind.is_empty() { Value::Null } else { num(min) },
            ]
        })
        .collect();
    let summary_cols = vec!["quantity", "checks", "violations", "min_value"];

    let mut json = serde_json::json!({
        "probes": probes,
        "seed": seed,
        "checks": reports.len(),
        "violations": violations,
        "quantities": rows_to_json(&summary_cols, &summary),
    });
    let table = if details {
        let lines: Vec<Value> = reports
            .iter()
            .map(|r| serde_json::to_value(r.line()).expect("report serializes"))
            .collect();
        let cols = vec!["quantity", "index", "k", "rho", "nu0", "nu", "t", "zeta", "value", "ok"];
        let rows = lines
            .iter()
            .map(|l| cols.iter().map(|c| l[*c].clone()).collect())
            .collect();
        json["reports"] = Value::Array(lines);
        Table { columns: cols, rows }
    } else {
        Table {
            columns: summary_cols,
            rows: summary,
        }
    };
    let mut outcome = Outcome::ok(Output::Record { json, table });
    if violations > 0 {
        outcome.code = EXIT_THEOREM;
        outcome
            .diagnostics
            .push(format!("error: {violations} proof-chain bound(s) violated"));
    }
    Ok(outcome)
}

impl ParamArgs {
    fn build(&self) -> Result<EquicorrParams> {
        let mut mu = parse_list("mu", &self.mu)?;
        if let Some(k) = self.k {
            if k == 0 {
                return Err(Error::InvalidParams("k must be at least 1".into()));
            }
            if mu.len() == 1 && k > 1 {
                mu = vec![mu[0]; k];
            } else if mu.len() != k {
                return Err(Error::InvalidParams(format!(
                    "--k {k} does not match {} means",
                    mu.len()
                )));
            }
        }
        EquicorrParams::new(self.rho, mu)
    }
}

fn parse_number(what: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidParams(format!("cannot parse {what} value {:?}", s.trim())))
}

fn parse_list(what: &str, s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Err(Error::InvalidParams(format!("{what} list is empty")));
    }
    s.split(',').map(|v| parse_number(what, v)).collect()
}

/// `lo:hi:step`, inclusive of `hi` when it falls on the lattice.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidParams(format!("grid must be lo:hi:step, got {s:?}")));
    }
    let lo = parse_number("grid", parts[0])?;
    let hi = parse_number("grid", parts[1])?;
    let step = parse_number("grid", parts[2])?;
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(Error::InvalidParams(format!(
            "grid needs finite lo <= hi and step > 0, got {s:?}"
        )));
    }
    let span = (hi - lo) / step;
    if span >= MAX_GRID_POINTS as f64 {
        return Err(Error::InvalidParams(format!(
            "grid has more than {MAX_GRID_POINTS} points"
        )));
    }
    let n = (span + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|j| lo + step * j as f64).collect())
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn record_table(json: &Value, columns: &[&'static str]) -> Table {
    Table {
        columns: columns.to_vec(),
        rows: vec![columns.iter().map(|c| json[*c].clone()).collect()],
    }
}

fn rows_to_json(columns: &[&'static str], rows: &[Vec<Value>]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                Value::Object(
                    columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), v.clone()))
                        .collect(),
                )
            })
            .collect(),
    )
}

/// 17 significant digits.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_json(v: &Value, w: &mut dyn Write) -> std::io::Result<()> {
    match v {
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            _ if n.is_f64() => write!(w, "{}", fmt_f64(n.as_f64().unwrap_or(f64::NAN))),
            (Some(u), _, _) => write!(w, "{u}"),
            (_, Some(i), _) => write!(w, "{i}"),
            (_, _, Some(f)) => write!(w, "{}", fmt_f64(f)),
            _ => write!(w, "null"),
        },
        Value::Array(items) => {
            write!(w, "[")?;
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    write!(w, ",")?;
                }
                write_json(item, w)?;
            }
            write!(w, "]")
        }
        Value::Object(map) => {
            write!(w, "{{")?;
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    write!(w, ",")?;
                }
                write!(w, "{}:", Value::String(k.clone()))?;
                write_json(item, w)?;
            }
            write!(w, "}}")
        }
        other => write!(w, "{other}"),
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) if n.is_f64() => fmt_f64(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(csv_cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

fn plain_cell(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(plain_cell).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

fn emit_table(t: &Table, format: Format, w: &mut dyn Write) -> std::io::Result<()> {
    match format {
        Format::Json => {
            write!(w, "[")?;
            for (i, row) in t.rows.iter().enumerate() {
                write!(w, "{}{{", if i > 0 { ",\n" } else { "\n" })?;
                for (j, (c, v)) in t.columns.iter().zip(row).enumerate() {
                    if j > 0 {
                        write!(w, ",")?;
                    }
                    write!(w, "\"{c}\":")?;
                    write_json(v, w)?;
                }
                write!(w, "}}")?;
            }
            writeln!(w, "{}]", if t.rows.is_empty() { "" } else { "\n" })
        }
        Format::Csv => {
            writeln!(w, "{}", t.columns.join(","))?;
            for row in &t.rows {
                writeln!(w, "{}", row.iter().map(csv_cell).collect::<Vec<_>>().join(","))?;
            }
            Ok(())
        }
        Format::Plain => {
            let cells: Vec<Vec<String>> = t.rows.iter().map(|r| r.iter().map(plain_cell).collect()).collect();
            let widths: Vec<usize> = t
                .columns
                .iter()
                .enumerate()
                .map(|(j, c)| cells.iter().map(|r| r[j].len()).chain([c.len()]).max().unwrap_or(0))
                .collect();
            let line = |items: Vec<&str>| {
                items
                    .iter()
                    .zip(&widths)
                    .map(|(s, &wd)| format!("{s:>wd$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            writeln!(w, "{}", line(t.columns.clone()))?;
            for r in &cells {
                writeln!(w, "{}", line(r.iter().map(String::as_str).collect()))?;
            }
            Ok(())
        }
    }
}

fn emit_record(json: &Value, table: &Table, format: Format, w: &mut dyn Write) -> std::io::Result<()> {
    match format {
        Format::Json => {
            write_json(json, w)?;
            writeln!(w)
        }
        Format::Csv => emit_table(table, format, w),
        Format::Plain => {
            let width = table.columns.iter().map(|c| c.len()).max().unwrap_or(0);
            for row in &table.rows {
                for (c, v) in table.columns.iter().zip(row) {
                    writeln!(w, "{c:<width$}  {}", plain_cell(v))?;
                }
            }
            Ok(())
        }
    }
}
