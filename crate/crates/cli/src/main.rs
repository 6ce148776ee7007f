use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cptorus::classify::{
    classify_analytic, classify_numeric, linspace, sweep, validate, Grid, GridAxis, NumericOutcome,
    SweepOptions, SweepRow, ValidationReport, Var, Verdict,
};
use cptorus::engine::{
    continue_real_with_detours, ContinuationOptions, ContinuationTrace, Orientation,
};
use cptorus::model::{first_integrals, null_closed_form, quotient_project, GeodesicField, RealIC};
use serde::Serialize;

mod format;

use format::{fmt_f64, fmt_opt, fmt_times};

#[derive(Parser)]
#[command(
    name = "cptorus",
    version,
    about = "Geodesics of the Clifton-Pohl torus through complex time"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one geodesic along the real axis, flanking singularities.
    Trace(TraceArgs),
    /// Analytic and numeric completeness verdicts for one initial condition.
    Classify(ClassifyArgs),
    /// Classify a grid of initial conditions.
    Sweep(SweepArgs),
    /// Closed form and real poles of a null geodesic.
    NullForm(NullFormArgs),
    /// Project a point of the plane to the fundamental annulus.
    Quotient(QuotientArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Upper,
    Lower,
}

#[derive(Args)]
struct EngineArgs {
    /// Taylor order of each element.
    #[arg(long, default_value_t = 16)]
    order: usize,
    /// Per-step truncation tolerance.
    #[arg(long, default_value_t = 1e-16)]
    tol: f64,
    /// Detour radii tried in order, as multiples of the distance to the singularity.
    #[arg(long, value_name = "R[,R...]", default_value = "0.05,0.1,0.2")]
    detour_radius: String,
    #[arg(long, value_enum, default_value_t = Side::Upper)]
    orientation: Side,
    /// March straight along the real axis without flanking.
    #[arg(long)]
    no_detours: bool,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    /// Initial position and velocity.
    #[arg(long, value_name = "a,b,x,y", allow_hyphen_values = true)]
    ic: String,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    t_end: f64,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long, value_name = "a,b,x,y", allow_hyphen_values = true)]
    ic: String,
    /// Horizon of the numeric run in each time direction.
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Base point for variables without a grid axis.
    #[arg(long, value_name = "a,b,x,y", allow_hyphen_values = true)]
    ic: Option<String>,
    /// Grid axis `var=start:stop:count` with var in alpha, beta, x, y.
    #[arg(long, value_name = "var=s:e:n", allow_hyphen_values = true)]
    grid: Vec<String>,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    /// Skip numeric runs when |P| or |P - 2| is below this.
    #[arg(long, default_value_t = 0.05)]
    boundary_margin: f64,
    /// Only classify analytically.
    #[arg(long)]
    analytic_only: bool,
    /// Report agreement and exit with status 2 on any disagreement.
    #[arg(long)]
    validate: bool,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct NullFormArgs {
    #[arg(long, value_name = "a,b,x,y", allow_hyphen_values = true)]
    ic: String,
    /// Poles are listed in [-t_end, t_end].
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct QuotientArgs {
    #[arg(long, value_name = "u,v", allow_hyphen_values = true)]
    point: String,
    #[command(flatten)]
    output: OutputArgs,
}

/// A failure reported as one line on stderr with exit status 1.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn parse_reals(s: &str, n: usize, what: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(Failure(format!(
            "{what} needs {n} comma-separated numbers, got '{s}'"
        )));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Failure(format!("{what}: '{p}' is not a finite number")))
        })
        .collect()
}

fn parse_ic(s: &str) -> Result<RealIC, Failure> {
    let v = parse_reals(s, 4, "--ic")?;
    Ok(RealIC::new(v[0], v[1], v[2], v[3])?)
}

fn parse_axis(s: &str) -> Result<GridAxis, Failure> {
    let bad = || Failure(format!("--grid expects var=start:stop:count, got '{s}'"));
    let (name, range) = s.split_once('=').ok_or_else(bad)?;
    let var = Var::parse(name.trim()).ok_or_else(|| {
        Failure(format!(
            "--grid: unknown variable '{name}' (use alpha, beta, x, y)"
        ))
    })?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(bad)
    };
    let (start, stop) = (num(parts[0])?, num(parts[1])?);
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(Failure(format!(
            "--grid: count must be at least 1 in '{s}'"
        )));
    }
    Ok(GridAxis {
        var,
        values: linspace(start, stop, count),
    })
}

fn continuation(engine: &EngineArgs) -> Result<ContinuationOptions, Failure> {
    let factors = engine
        .detour_radius
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Failure(format!("--detour-radius: '{p}' is not a number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let opts = ContinuationOptions {
        order: engine.order,
        tolerance: engine.tol,
        max_detours: factors.len(),
        detour_factors: factors,
        orientation: match engine.orientation {
            Side::Upper => Orientation::Upper,
            Side::Lower => Orientation::Lower,
        },
        detours: !engine.no_detours,
        ..Default::default()
    };
    opts.validate()?;
    Ok(opts)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => Box::new(
            File::create(path)
                .map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

#[derive(Serialize)]
struct TraceMeta {
    a: Option<f64>,
    b: Option<f64>,
    p: Option<f64>,
    status: cptorus::engine::TraceStatus,
    exceptional_times: Vec<f64>,
}

#[derive(Serialize)]
struct TraceRow {
    t_re: f64,
    t_im: f64,
    u_re: f64,
    u_im: f64,
    v_re: f64,
    v_im: f64,
    du_re: f64,
    du_im: f64,
    dv_re: f64,
    dv_im: f64,
}

const TRACE_COLUMNS: [&str; 10] = [
    "t_re", "t_im", "u_re", "u_im", "v_re", "v_im", "du_re", "du_im", "dv_re", "dv_im",
];

fn trace_rows(trace: &ContinuationTrace) -> Vec<TraceRow> {
    trace
        .samples
        .iter()
        .map(|s| {
            let x = &s.state;
            TraceRow {
                t_re: s.t.re,
                t_im: s.t.im,
                u_re: x[0].re,
                u_im: x[0].im,
                v_re: x[1].re,
                v_im: x[1].im,
                du_re: x[2].re,
                du_im: x[2].im,
                dv_re: x[3].re,
                dv_im: x[3].im,
            }
        })
        .collect()
}

fn run_trace(args: &TraceArgs) -> Result<(), Failure> {
    let ic = parse_ic(&args.ic)?;
    if ic.x == 0.0 && ic.y == 0.0 {
        return Err(Failure(
            "--ic: zero velocity gives a stationary curve".into(),
        ));
    }
    let opts = continuation(&args.engine)?;
    let trace =
        continue_real_with_detours(&GeodesicField, &ic.state().to_vec(), args.t_end, &opts)?;
    let fi = first_integrals(&ic).ok();
    let meta = TraceMeta {
        a: Some(fi.map_or(0.0, |f| f.a)),
        b: fi.map(|f| f.b),
        p: fi.map(|f| f.p),
        status: trace.status.clone(),
        exceptional_times: trace.exceptional_real_times.clone(),
    };
    let rows = trace_rows(&trace);
    let mut w = sink(&args.output.out)?;
    match args.output.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                columns: [&'static str; 10],
                samples: &'a [TraceRow],
                meta: &'a TraceMeta,
            }
            write_json(
                &mut *w,
                &Doc {
                    columns: TRACE_COLUMNS,
                    samples: &rows,
                    meta: &meta,
                },
            )?;
        }
        Format::Csv => {
            {
                let mut csv = csv::Writer::from_writer(&mut *w);
                csv.write_record(TRACE_COLUMNS)?;
                for r in &rows {
                    csv.write_record(
                        [
                            r.t_re, r.t_im, r.u_re, r.u_im, r.v_re, r.v_im, r.du_re, r.du_im,
                            r.dv_re, r.dv_im,
                        ]
                        .map(fmt_f64),
                    )?;
                }
                csv.flush()?;
            }
            writeln!(w, "# A={}", fmt_opt(meta.a))?;
            writeln!(w, "# B={}", fmt_opt(meta.b))?;
            writeln!(w, "# P={}", fmt_opt(meta.p))?;
            writeln!(w, "# status={}", status_name(&meta.status))?;
            writeln!(
                w,
                "# exceptional_times={}",
                fmt_times(&meta.exceptional_times)
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn status_name(status: &cptorus::engine::TraceStatus) -> String {
    use cptorus::engine::TraceStatus::*;
    match status {
        ReachedEnd => "reached_end".into(),
        Escaped => "escaped".into(),
        Stalled => "stalled".into(),
        Error(m) => format!("error: {m}"),
    }
}

fn run_classify(args: &ClassifyArgs) -> Result<(), Failure> {
    let ic = parse_ic(&args.ic)?;
    let opts = continuation(&args.engine)?;
    let analytic = classify_analytic(&ic)?;
    let numeric = classify_numeric(&ic, args.t_end, &opts)?;
    let mut w = sink(&args.output.out)?;
    match args.output.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                ic: RealIC,
                horizon: f64,
                analytic: &'a Verdict,
                numeric: &'a Verdict,
                agree: bool,
            }
            write_json(
                &mut *w,
                &Doc {
                    ic,
                    horizon: args.t_end,
                    analytic: &analytic,
                    numeric: &numeric,
                    agree: analytic.decision == numeric.decision,
                },
            )?;
        }
        Format::Csv => {
            let ev = numeric
                .evidence
                .as_ref()
                .expect("numeric verdicts carry evidence");
            let mut csv = csv::Writer::from_writer(&mut *w);
            csv.write_record([
                "alpha",
                "beta",
                "x",
                "y",
                "impulse",
                "analytic",
                "numeric",
                "agree",
                "horizon",
                "forward_exceptional",
                "backward_exceptional",
            ])?;
            csv.write_record([
                fmt_f64(ic.alpha),
                fmt_f64(ic.beta),
                fmt_f64(ic.x),
                fmt_f64(ic.y),
                fmt_opt(analytic.impulse),
                analytic.decision.to_string(),
                numeric.decision.to_string(),
                (analytic.decision == numeric.decision).to_string(),
                fmt_f64(args.t_end),
                fmt_times(&ev.forward.exceptional_times),
                fmt_times(&ev.backward.exceptional_times),
            ])?;
            csv.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

fn numeric_name(n: &NumericOutcome) -> String {
    match n {
        NumericOutcome::Decided(d) => d.to_string(),
        NumericOutcome::Skipped => "skipped".into(),
        NumericOutcome::Error(m) => format!("error: {m}"),
    }
}

/// Returns whether validation found disagreements.
fn run_sweep(args: &SweepArgs) -> Result<bool, Failure> {
    let base = args.ic.as_deref().map(parse_ic).transpose()?;
    let axes = args
        .grid
        .iter()
        .map(|s| parse_axis(s))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = if axes.is_empty() {
        match base {
            Some(ic) => Grid::List(vec![ic]),
            None => return Err(Failure("sweep needs --grid axes or an --ic".into())),
        }
    } else {
        let mut set = [false; 4];
        for axis in &axes {
            let i = axis.var as usize;
            if set[i] {
                return Err(Failure(
                    format!("--grid: variable {:?} given twice", axis.var).to_lowercase(),
                ));
            }
            set[i] = true;
        }
        let base = match base {
            Some(ic) => [ic.alpha, ic.beta, ic.x, ic.y],
            None if set.iter().all(|s| *s) => [0.0; 4],
            None => {
                return Err(Failure(
                    "--grid leaves a variable unset; add its axis or an --ic base point".into(),
                ))
            }
        };
        Grid::Product { base, axes }
    };
    if !(args.boundary_margin >= 0.0 && args.boundary_margin.is_finite()) {
        return Err(Failure("--boundary-margin must be nonnegative".into()));
    }
    let opts = SweepOptions {
        boundary_margin: args.boundary_margin,
        horizon: args.t_end,
        numeric: !args.analytic_only,
        continuation: continuation(&args.engine)?,
    };
    let rows = sweep(&grid, &opts)?;
    let report = args.validate.then(|| validate(&rows));
    let mut w = sink(&args.output.out)?;
    match args.output.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                horizon: f64,
                boundary_margin: f64,
                rows: &'a [SweepRow],
                #[serde(skip_serializing_if = "Option::is_none")]
                validation: Option<&'a ValidationReport>,
            }
            write_json(
                &mut *w,
                &Doc {
                    horizon: args.t_end,
                    boundary_margin: args.boundary_margin,
                    rows: &rows,
                    validation: report.as_ref(),
                },
            )?;
        }
        Format::Csv => {
            {
                let mut csv = csv::Writer::from_writer(&mut *w);
                csv.write_record([
                    "index", "alpha", "beta", "x", "y", "impulse", "analytic", "numeric", "agree",
                ])?;
                for r in &rows {
                    csv.write_record([
                        r.index.to_string(),
                        fmt_f64(r.ic.alpha),
                        fmt_f64(r.ic.beta),
                        fmt_f64(r.ic.x),
                        fmt_f64(r.ic.y),
                        fmt_opt(r.impulse),
                        r.analytic.to_string(),
                        numeric_name(&r.numeric),
                        r.agree.map_or(String::new(), |a| a.to_string()),
                    ])?;
                }
                csv.flush()?;
            }
            if let Some(rep) = &report {
                let idx: Vec<String> = rep
                    .disagreements
                    .iter()
                    .map(|r| r.index.to_string())
                    .collect();
                writeln!(
                    w,
                    "# total={} compared={} agree={} disagree={} applicable={}",
                    rep.total, rep.compared, rep.agree, rep.disagree, rep.applicable
                )?;
                writeln!(w, "# disagreements={}", idx.join(";"))?;
            }
        }
    }
    w.flush()?;
    Ok(report.is_some_and(|r| r.disagree > 0))
}

fn run_null_form(args: &NullFormArgs) -> Result<(), Failure> {
    let ic = parse_ic(&args.ic)?;
    if !(args.t_end.is_finite() && args.t_end > 0.0) {
        return Err(Failure("--t-end must be positive".into()));
    }
    let closed = null_closed_form(&ic)?;
    let poles = closed.real_poles(-args.t_end, args.t_end);
    let mut w = sink(&args.output.out)?;
    match args.output.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                descriptor: cptorus::model::NullGeodesic,
                formula: String,
                window: [f64; 2],
                poles: &'a [f64],
            }
            write_json(
                &mut *w,
                &Doc {
                    descriptor: closed,
                    formula: closed.formula(),
                    window: [-args.t_end, args.t_end],
                    poles: &poles,
                },
            )?;
        }
        Format::Csv => {
            writeln!(w, "{}", closed.formula())?;
            writeln!(w, "poles: {}", fmt_times(&poles))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run_quotient(args: &QuotientArgs) -> Result<(), Failure> {
    let p = parse_reals(&args.point, 2, "--point")?;
    let (u, v, k) = quotient_project(p[0], p[1])?;
    let mut w = sink(&args.output.out)?;
    match args.output.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc {
                u: f64,
                v: f64,
                k: i32,
            }
            write_json(&mut *w, &Doc { u, v, k })?;
        }
        Format::Csv => writeln!(w, "{},{} k={k}", fmt_f64(u), fmt_f64(v))?,
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                // --help and --version
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let line = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("{line}");
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Trace(a) => run_trace(a).map(|_| false),
        Command::Classify(a) => run_classify(a).map(|_| false),
        Command::Sweep(a) => run_sweep(a),
        Command::NullForm(a) => run_null_form(a).map(|_| false),
        Command::Quotient(a) => run_quotient(a).map(|_| false),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
