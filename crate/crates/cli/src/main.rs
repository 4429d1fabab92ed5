mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use farey_core::coding::{conjugacy_h, encode_point, SpinWord};
use farey_core::numerics::forward_map;
use farey_core::scalar::{parse_rational, Field, Ring};
use farey_core::spinchain::{ferromagnetic_report, interaction_coefficients, pq_tables, PQTable};
use farey_core::thermo::{canonical_z_exact, critical_curve, thermo_point};
use farey_core::transfer::{
    fredholm_and_zeta, periodic_sum_xi, spectral_radius, spectral_radius_ratio, trace_bruteforce, trace_power,
    xi_bruteforce, TransferQuery, BRUTE_FORCE_CAP, STREAM_CAP,
};
use farey_core::tree::{
    adjacency_json, build_row, extended_row, for_each_presentation, FareyNode, Mat2, TreeRow, EXACT_ROW_CAP,
    FLOAT_ROW_CAP,
};
use farey_core::verify::{self, Suite};
use farey_core::zeta::{dirichlet_partial, mu_twisted, twisted_z, MuMethod, TwistedRoute};
use farey_core::{Mode, Params, Rational, RhoPoly};

use output::{num, Format, Meta, Sink, Table};

/// Generalized Farey trees, transfer operators and spin-chain thermodynamics.
#[derive(Parser, Debug)]
#[command(name = "farey", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Arithmetic used by commands that support more than one.
    #[arg(long, global = true, default_value = "float")]
    mode: Mode,
    /// Tolerance for iterative estimates.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rows of the tree T(r), optionally with their reflections.
    #[command(allow_negative_numbers = true)]
    Tree {
        #[arg(long, default_value = "1")]
        r: String,
        #[arg(long, default_value_t = 5)]
        rows: u32,
        /// Append the reflected nodes of each row.
        #[arg(long)]
        extended: bool,
        /// Write the rooted tree as JSON adjacency instead of a table.
        #[arg(long, conflicts_with = "extended")]
        adjacency: bool,
    },
    /// Tree path code of a point of [0, 1].
    #[command(allow_negative_numbers = true)]
    Code {
        #[arg(long, default_value = "1")]
        r: String,
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 32)]
        depth: usize,
    },
    /// The map F_r and the conjugacy h_r to the tent map on a grid.
    #[command(allow_negative_numbers = true)]
    Conjugacy {
        #[arg(long, default_value = "1")]
        r: String,
        #[arg(long, default_value_t = 257)]
        points: usize,
        #[arg(long, default_value_t = 48)]
        depth: usize,
    },
    /// Spin-chain tables: p_k and q_k, Fourier coefficients of log q_k, or positivity of the couplings.
    #[command(allow_negative_numbers = true)]
    Spin {
        /// A value; for `--table positivity` also a list or range.
        #[arg(long, default_value = "1/2")]
        r: String,
        /// Chain length; for `--table positivity` the largest length scanned.
        #[arg(long, default_value_t = 8)]
        k: u32,
        #[arg(long, value_enum, default_value = "pq")]
        table: SpinTable,
    },
    /// Traces of powers of the transfer operator.
    #[command(allow_negative_numbers = true)]
    Trace {
        #[arg(long, default_value = "0.5")]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        /// Imaginary part of s.
        #[arg(long, default_value_t = 0.0)]
        s_im: f64,
        /// Largest power.
        #[arg(long, default_value_t = 8)]
        n: u32,
        /// Trace of the signed operator.
        #[arg(long)]
        signed: bool,
    },
    /// Periodic-orbit sums Xi_n(s).
    #[command(allow_negative_numbers = true)]
    Xi {
        #[arg(long, default_value = "1")]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 0.0)]
        s_im: f64,
        #[arg(long, default_value_t = 8)]
        n: u32,
    },
    /// Twisted Moebius function and Dirichlet partial sums; with --z, the dynamical zeta function.
    #[command(allow_negative_numbers = true)]
    Zeta {
        #[arg(long, default_value_t = 1)]
        m: i64,
        #[arg(long, default_value_t = 2.0)]
        s: f64,
        /// Number of terms.
        #[arg(long, default_value_t = 1000)]
        q: u64,
        /// Emit every this many terms of the partial-sum trace.
        #[arg(long, default_value_t = 1)]
        every: u64,
        /// Evaluate det(1 - zP_s) and the dynamical zeta function at this real z.
        #[arg(long)]
        z: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        z_im: f64,
        #[arg(long, default_value = "0.5")]
        r: f64,
        /// Truncation order of the determinant.
        #[arg(long, default_value_t = 14)]
        n: u32,
    },
    /// Spectral radius of the transfer operator.
    #[command(allow_negative_numbers = true)]
    Lambda {
        /// Value, list `a,b,c` or range `start:stop:step`.
        #[arg(long, default_value = "0.5")]
        r: String,
        #[arg(long, default_value = "1")]
        s: String,
        #[arg(long, value_enum, default_value = "chebyshev")]
        method: LambdaMethod,
    },
    /// Partition functions, free energy and magnetization on an (r, s) grid.
    #[command(allow_negative_numbers = true)]
    Thermo {
        #[arg(long, default_value = "0")]
        r: String,
        #[arg(long, default_value = "1")]
        s: String,
        #[arg(long, default_value_t = 20)]
        n: u32,
    },
    /// The critical curve r -> s_cr(r).
    #[command(allow_negative_numbers = true)]
    Phase {
        #[arg(long, default_value = "0:0.9:0.1")]
        r_grid: String,
    },
    /// Twisted partition sums Z_n^(m)(s).
    #[command(allow_negative_numbers = true)]
    Twisted {
        #[arg(long, default_value = "1")]
        r: f64,
        #[arg(long, default_value_t = 4.0)]
        s: f64,
        #[arg(long, default_value_t = 12)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        m: i64,
    },
    /// Run an oracle-equivalence suite.
    #[command(allow_negative_numbers = true)]
    Verify {
        #[arg(default_value = "all")]
        suite: Suite,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SpinTable {
    Pq,
    Fourier,
    Positivity,
}

/// Absolute slack on the sign of the couplings.
const POSITIVITY_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LambdaMethod {
    Chebyshev,
    Ratio,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// The invocation without output and threading flags.
fn command_echo() -> String {
    let mut out = vec!["farey".to_string()];
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--out" || a == "--threads" {
            args.next();
        } else if !(a.starts_with("--out=") || a.starts_with("--threads=")) {
            out.push(a);
        }
    }
    out.join(" ")
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    let meta = Meta {
        command: command_echo(),
        mode: g.mode.to_string(),
    };
    let emit = |t: Table| t.write(&meta, g.format, g.out.as_deref());
    let float_only = |name: &str| -> Result<()> {
        if g.mode != Mode::Float {
            bail!("`{name}` supports only --mode float");
        }
        Ok(())
    };
    match &cli.command {
        Command::Tree { r, rows, extended, adjacency } => {
            let spec = TreeSpec {
                r,
                rows: *rows,
                extended: *extended,
                adjacency: *adjacency,
            };
            tree(spec, g.mode, &meta, g.format, g.out.as_deref())?
        }
        Command::Code { r, x, depth } => emit(code_table(r, x, *depth, g.mode)?)?,
        Command::Conjugacy { r, points, depth } => {
            float_only("conjugacy")?;
            emit(conjugacy_table(parse_real(r)?, *points, *depth)?)?
        }
        Command::Spin { r, k, table } => emit(spin_table(r, *k, *table, g.mode)?)?,
        Command::Trace { r, s, s_im, n, signed } => {
            float_only("trace")?;
            emit(trace_table(*r, Complex64::new(*s, *s_im), *n, *signed)?)?
        }
        Command::Xi { r, s, s_im, n } => {
            float_only("xi")?;
            emit(xi_table(*r, Complex64::new(*s, *s_im), *n)?)?
        }
        Command::Zeta { m, s, q, every, z, z_im, r, n } => {
            float_only("zeta")?;
            match z {
                Some(z) => emit(dynamical_zeta_table(Complex64::new(*z, *z_im), Complex64::new(*s, 0.0), *r, *n)?)?,
                None => emit(dirichlet_table(*m, *s, *q, *every)?)?,
            }
        }
        Command::Lambda { r, s, method } => {
            float_only("lambda")?;
            emit(lambda_table(&parse_grid(r)?, &parse_grid(s)?, *method, g.tol)?)?
        }
        Command::Thermo { r, s, n } => emit(thermo_table(r, s, *n, g.mode)?)?,
        Command::Phase { r_grid } => {
            float_only("phase")?;
            emit(phase_table(&parse_grid(r_grid)?, g.tol)?)?
        }
        Command::Twisted { r, s, n, m } => {
            float_only("twisted")?;
            emit(twisted_table(*r, *s, *n, *m)?)?
        }
        Command::Verify { suite } => return verify_suite(*suite),
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_real(text: &str) -> Result<f64> {
    if let Some(q) = parse_rational(text) {
        return Ok(Field::to_f64(&q));
    }
    text.trim().parse().with_context(|| format!("`{text}` is not a number"))
}

fn parse_exact(text: &str) -> Result<Rational> {
    parse_rational(text).with_context(|| format!("`{text}` is not an exact rational (use forms like 3/4 or 0.25)"))
}

/// A single value, a list `a,b,c`, or an inclusive range `start:stop:step`.
fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (parse_real(start)?, parse_real(stop)?, parse_real(step)?);
            if !(h > 0.0) || b < a {
                bail!("range `{text}` needs start <= stop and a positive step");
            }
            let count = ((b - a) / h + 1e-9).floor() as usize;
            // Round to the step's decimal resolution so grid values print cleanly.
            Ok((0..=count).map(|i| ((a + i as f64 * h) * 1e12).round() / 1e12).collect())
        }
        [_] => text.split(',').map(parse_real).collect(),
        _ => bail!("`{text}` is neither a value, a list nor start:stop:step"),
    }
}

fn text<T: ToString>(x: T) -> Value {
    Value::String(x.to_string())
}

const TREE_COLUMNS: [&str; 6] = ["level", "sigma", "reflected", "p", "q", "value"];

/// Float rows above this level are streamed from the depth-first walk.
const MATERIALIZED_ROWS: u32 = 20;

fn check_rows(rows: u32, cap: u32, what: &str) -> Result<()> {
    if rows == 0 || rows > cap {
        bail!("--rows = {rows} is outside 1..={cap} (cap for {what})");
    }
    Ok(())
}

fn node_record<T: Ring + std::fmt::Display>(v: &FareyNode<T>, rho: f64) -> Vec<Value> {
    vec![
        v.rank.into(),
        text(v.path),
        v.reflected.into(),
        text(&v.p),
        text(&v.q),
        num(v.approx(rho)),
    ]
}

fn write_rows<T: Ring + std::fmt::Display>(
    sink: &mut Sink,
    params: &Params<T>,
    rows: u32,
    extended: bool,
    rho: f64,
) -> Result<()> {
    for n in 1..=rows {
        let row = if extended { extended_row(n, params)? } else { build_row(n, params)? };
        for v in &row.nodes {
            sink.row(node_record(v, rho))?;
        }
    }
    Ok(())
}

fn adjacency<T: Ring + std::fmt::Display>(params: &Params<T>, rows: u32, rho: f64) -> Result<Value> {
    let rows: Vec<TreeRow<T>> = (1..=rows).map(|n| build_row(n, params)).collect::<Result<_, _>>()?;
    Ok(adjacency_json(&rows, rho))
}

struct TreeSpec<'a> {
    r: &'a str,
    rows: u32,
    extended: bool,
    adjacency: bool,
}

fn tree(spec: TreeSpec, mode: Mode, meta: &Meta, format: Format, out: Option<&Path>) -> Result<()> {
    let TreeSpec { r, rows, extended, adjacency: adj } = spec;
    let rho = 2.0 - parse_real(r)?;
    let stream_cap = if extended || adj { FLOAT_ROW_CAP } else { STREAM_CAP };
    match mode {
        Mode::Float => check_rows(rows, stream_cap, "float mode")?,
        _ => check_rows(rows, EXACT_ROW_CAP, "exact and symbolic modes")?,
    }
    if adj {
        let tree = match mode {
            Mode::Float => adjacency(&Params::new(parse_real(r)?)?, rows, rho)?,
            Mode::Exact => adjacency(&Params::new(parse_exact(r)?)?, rows, rho)?,
            Mode::Symbolic => adjacency(&Params::<RhoPoly>::symbolic(), rows, rho)?,
        };
        let mut w = output::open(out)?;
        serde_json::to_writer_pretty(&mut w, &json!({ "meta": meta.to_json(), "tree": tree }))?;
        writeln!(w)?;
        w.flush()?;
        return Ok(());
    }
    let mut sink = Sink::new(meta, format, out, &TREE_COLUMNS)?;
    match mode {
        Mode::Float => {
            let params = Params::new(parse_real(r)?)?;
            write_rows(&mut sink, &params, rows.min(MATERIALIZED_ROWS), extended, rho)?;
            for n in MATERIALIZED_ROWS + 1..=rows {
                let mut result = Ok(());
                for_each_presentation(n - 1, SpinWord::EMPTY, Mat2::l(&params), &params, &mut |sigma, x| {
                    if result.is_ok() {
                        let (p, q) = x.at_one();
                        result = sink.row(node_record(&FareyNode::new(p, q, n, sigma), rho));
                    }
                });
                result?;
            }
        }
        Mode::Exact => write_rows(&mut sink, &Params::new(parse_exact(r)?)?, rows, extended, rho)?,
        Mode::Symbolic => write_rows(&mut sink, &Params::<RhoPoly>::symbolic(), rows, extended, rho)?,
    }
    sink.finish()
}

fn code_table(r: &str, x: &str, depth: usize, mode: Mode) -> Result<Table> {
    let mut t = Table::new(&["r", "x", "depth", "code", "h"]);
    let (code, h) = match mode {
        Mode::Exact => {
            let p = Params::new(parse_exact(r)?)?;
            let xv = parse_exact(x)?;
            (encode_point(&xv, &p, depth), conjugacy_h(&xv, &p, depth))
        }
        Mode::Float => {
            let p = Params::new(parse_real(r)?)?;
            let xv = parse_real(x)?;
            (encode_point(&xv, &p, depth), conjugacy_h(&xv, &p, depth))
        }
        Mode::Symbolic => bail!("`code` supports --mode exact or float"),
    };
    t.push(vec![text(r), text(x), depth.into(), text(&code), num(h)]);
    Ok(t)
}

fn conjugacy_table(r: f64, points: usize, depth: usize) -> Result<Table> {
    if points < 2 {
        bail!("--points must be at least 2");
    }
    let p = Params::new(r)?;
    let mut t = Table::new(&["x", "F", "h"]);
    for i in 0..points {
        let x = i as f64 / (points - 1) as f64;
        t.push(vec![num(x), num(forward_map(&x, &p)?), num(conjugacy_h(&x, &p, depth))]);
    }
    Ok(t)
}

fn pq_rows<T: Ring + std::fmt::Display>(t: &mut Table, tab: &PQTable<T>, k: u32, rho: f64) {
    for (i, (p, q)) in tab.p.iter().zip(&tab.q).enumerate() {
        let energy = q.approx(rho).ln();
        t.push(vec![text(SpinWord::new(i as u64, k)), text(p), text(q), num(energy)]);
    }
}

fn spin_table(r: &str, k: u32, table: SpinTable, mode: Mode) -> Result<Table> {
    match table {
        SpinTable::Pq => {
            let mut t = Table::new(&["sigma", "p", "q", "energy"]);
            let rho = 2.0 - parse_real(r)?;
            match mode {
                Mode::Float => pq_rows(&mut t, &pq_tables(k, &Params::new(parse_real(r)?)?)?, k, rho),
                Mode::Exact => pq_rows(&mut t, &pq_tables(k, &Params::new(parse_exact(r)?)?)?, k, rho),
                Mode::Symbolic => pq_rows(&mut t, &pq_tables(k, &Params::<RhoPoly>::symbolic())?, k, rho),
            }
            Ok(t)
        }
        SpinTable::Fourier => {
            let mut t = Table::new(&["t", "coefficient"]);
            let coeffs = interaction_coefficients(k, &Params::new(parse_real(r)?)?)?;
            for (i, c) in coeffs.values.iter().enumerate() {
                t.push(vec![text(SpinWord::new(i as u64, k)), num(*c)]);
            }
            Ok(t)
        }
        SpinTable::Positivity => {
            let mut t = Table::new(&["k", "r", "min_coupling", "argmin", "holds"]);
            for r in parse_grid(r)? {
                let params = Params::new(r)?;
                for j in 1..=k {
                    let rep = ferromagnetic_report(j, &params, POSITIVITY_EPS)?;
                    t.push(vec![
                        j.into(),
                        num(r),
                        num(rep.min_coupling),
                        text(SpinWord::new(rep.argmin, j)),
                        rep.holds.into(),
                    ]);
                }
            }
            Ok(t)
        }
    }
}

const RECORD_COLUMNS: [&str; 8] = ["r", "s", "s_im", "n", "value", "value_im", "method", "error_estimate"];

/// Largest `n` at which the periodic-point oracle supplies an error estimate.
const ORACLE_N: u32 = 12;

fn record(r: f64, s: Complex64, n: u32, value: Complex64, method: &str, err: Option<f64>) -> Vec<Value> {
    vec![
        num(r),
        num(s.re),
        num(s.im),
        n.into(),
        num(value.re),
        num(value.im),
        text(method),
        err.map_or(Value::Null, num),
    ]
}

fn trace_table(r: f64, s: Complex64, n_max: u32, signed: bool) -> Result<Table> {
    let mut t = Table::new(&RECORD_COLUMNS);
    for n in 1..=n_max {
        let q = TransferQuery::new(s, r, n)?;
        let value = trace_power(&q, signed)?;
        let err = if n <= ORACLE_N.min(BRUTE_FORCE_CAP) {
            Some((value - trace_bruteforce(&q, signed)?).norm() / value.norm())
        } else {
            None
        };
        t.push(record(r, s, n, value, if signed { "leaf-sum-signed" } else { "leaf-sum" }, err));
    }
    Ok(t)
}

fn xi_table(r: f64, s: Complex64, n_max: u32) -> Result<Table> {
    let mut t = Table::new(&RECORD_COLUMNS);
    for n in 1..=n_max {
        let q = TransferQuery::new(s, r, n)?;
        let value = periodic_sum_xi(&q)?;
        let err = if n <= ORACLE_N {
            Some((value - xi_bruteforce(&q)?).norm() / value.norm())
        } else {
            None
        };
        t.push(record(r, s, n, value, "leaf-sum", err));
    }
    Ok(t)
}

fn dynamical_zeta_table(z: Complex64, s: Complex64, r: f64, n: u32) -> Result<Table> {
    let fz = fredholm_and_zeta(z, s, &Params::new(r)?, n)?;
    let mut t = Table::new(&[
        "r", "s", "z", "z_im", "n", "det", "det_im", "zeta", "zeta_im", "zeta_ratio", "zeta_ratio_im", "tail_estimate",
    ]);
    t.push(vec![
        num(r),
        num(s.re),
        num(z.re),
        num(z.im),
        n.into(),
        num(fz.det.re),
        num(fz.det.im),
        num(fz.zeta_exp.re),
        num(fz.zeta_exp.im),
        num(fz.zeta_ratio.re),
        num(fz.zeta_ratio.im),
        num(fz.tail_estimate),
    ]);
    Ok(t)
}

fn dirichlet_table(m: i64, s: f64, q_max: u64, every: u64) -> Result<Table> {
    if every == 0 {
        bail!("--every must be positive");
    }
    let mut t = Table::new(&["q", "mu", "partial_sum"]);
    let mut acc = farey_core::sum::Neumaier::new();
    for q in 1..=q_max {
        let mu = mu_twisted(m, q, MuMethod::Closed)?;
        acc.add(mu as f64 * (q as f64).powf(-s));
        if q % every == 0 || q == q_max {
            t.push(vec![q.into(), mu.into(), num(acc.value())]);
        }
    }
    let check = dirichlet_partial(m, s, q_max)?;
    debug_assert!((check.value - acc.value()).abs() <= 1e-12 * check.value.abs().max(1.0));
    Ok(t)
}

fn lambda_table(rs: &[f64], ss: &[f64], method: LambdaMethod, tol: f64) -> Result<Table> {
    let mut t = Table::new(&["r", "s", "value", "method", "error_estimate"]);
    for &r in rs {
        let p = Params::new(r)?;
        for &s in ss {
            let est = match method {
                LambdaMethod::Chebyshev => spectral_radius(s, &p, tol)?,
                LambdaMethod::Ratio => spectral_radius_ratio(s, &p, tol, 28)?,
            };
            t.push(vec![num(r), num(s), num(est.value), text(est.method), num(est.error)]);
        }
    }
    Ok(t)
}

fn thermo_table(r: &str, s: &str, n: u32, mode: Mode) -> Result<Table> {
    if mode == Mode::Exact {
        let mut t = Table::new(&["r", "s", "n", "ZC"]);
        let rq = parse_exact(r)?;
        let p = Params::new(rq.clone())?;
        let s_int: u32 = s.parse().context("exact mode needs a nonnegative integer --s")?;
        t.push(vec![text(&rq), s_int.into(), n.into(), text(canonical_z_exact(n, s_int, &p)?)]);
        return Ok(t);
    }
    if mode == Mode::Symbolic {
        bail!("`thermo` supports --mode exact or float");
    }
    let mut t = Table::new(&["r", "s", "n", "ZC", "ZG", "F_n", "F_limit", "M_n", "lambda"]);
    for r in parse_grid(r)? {
        let p = Params::new(r)?;
        for s in parse_grid(s)? {
            let pt = thermo_point(n, s, &p)?;
            t.push(vec![
                num(r),
                num(s),
                n.into(),
                num(pt.zc),
                num(pt.zg),
                num(pt.free_energy),
                num(pt.free_energy_limit),
                num(pt.magnetization),
                pt.lambda.map_or(Value::Null, num),
            ]);
        }
    }
    Ok(t)
}

fn phase_table(grid: &[f64], tol: f64) -> Result<Table> {
    let curve = critical_curve(grid, tol)?;
    let mut t = Table::new(&["r", "s_cr"]);
    for (r, s) in curve.samples {
        t.push(vec![num(r), num(s)]);
    }
    Ok(t)
}

fn twisted_table(r: f64, s: f64, n: u32, m: i64) -> Result<Table> {
    let p = Params::new(r)?;
    let mut t = Table::new(&["r", "s", "n", "m", "value", "value_im", "method"]);
    for (route, name) in [(TwistedRoute::Rows, "rows"), (TwistedRoute::Transfer, "transfer")] {
        let z = twisted_z(n, s, m, &p, route)?;
        t.push(vec![num(r), num(s), n.into(), m.into(), num(z.value.re), num(z.value.im), text(name)]);
    }
    Ok(t)
}

fn verify_suite(suite: Suite) -> Result<ExitCode> {
    let report = verify::run(suite)?;
    for c in &report.checks {
        println!("{c}");
    }
    let failed = report.failures().count();
    println!("{} checks, {} failed", report.checks.len(), failed);
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

#[cfg(test)]
mod tests {
    use super::*;
    use farey_core::thermo::critical_line;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:0.3:0.1").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_grid("1/4,1/2").unwrap(), vec![0.25, 0.5]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("a:b").is_err());
    }

    #[test]
    fn critical_line_is_reachable() {
        assert_eq!(critical_line(&Params::new(1.0).unwrap(), 1e-6).unwrap(), 2.0);
    }
}
