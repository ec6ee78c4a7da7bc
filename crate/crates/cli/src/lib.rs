//! Command implementations for the `kmchain` binary.
//!
//! Every command returns its document as a string so that the binary only
//! routes it to a file or standard output.

pub mod format;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use thiserror::Error;

use kmchain::asymptotics::{qsd_alpha, ratio_limit, ratio_limit_parity, Parity};
use kmchain::chain::oracle_transition;
use kmchain::quadrature::{build_rule, DiscreteMeasure, DEFAULT_NODES};
use kmchain::spectral::{classify_region, density_at, SpectralMeasure};
use kmchain::verify::verify;
use kmchain::{ChainError, ChainParams};

use format::{opt_real, real, real_text, reals};

#[derive(Debug, Parser)]
#[command(name = "kmchain", version, about = "Spectral measure of birth-and-death chains with constant rates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    /// Up-step probability for states >= 1
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    /// Up-step probability from state 0
    #[arg(long, allow_negative_numbers = true)]
    pub p0: f64,
    /// Holding probability at state 0
    #[arg(long, allow_negative_numbers = true)]
    pub r0: f64,
}

impl ChainArgs {
    fn params(&self) -> Result<ChainParams, CliError> {
        Ok(ChainParams::new(self.p, self.p0, self.r0)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write to this file instead of standard output
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Spectral,
    Oracle,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParityArg {
    Even,
    Odd,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Atoms, eta and recurrence class of one parameter point
    Classify {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Atom count over a lattice of (r0, p0) for fixed p, as CSV
    Atlas {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Density samples at quadrature nodes plus the atoms
    Measure {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nodes: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// n-step transition probability, spectral and/or exact
    Transition {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(short = 'i', long)]
        i: usize,
        #[arg(short = 'j', long)]
        j: usize,
        #[arg(short = 'n', long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nodes: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Quasi-stationary distribution for a parameter x in (eta, 1)
    Qsd {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Limit of P^n[i][j] / P^n[k][l]
    RatioLimit {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(short = 'i', long)]
        i: usize,
        #[arg(short = 'j', long)]
        j: usize,
        #[arg(short = 'k', long)]
        k: usize,
        #[arg(short = 'l', long)]
        l: usize,
        /// Restrict to even or odd n (period-2 chains with r0 = 0)
        #[arg(long, value_enum)]
        parity: Option<ParityArg>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the invariant suite; exit code 1 if any check fails
    Verify {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Chain(_) | CliError::Argument(_) => 2,
            CliError::Write { .. } => 3,
        }
    }
}

/// A rendered document and whether the command succeeded on its own terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub text: String,
    pub success: bool,
}

impl Rendered {
    fn ok(text: String) -> Self {
        Self { text, success: true }
    }
}

fn json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

fn params_object(params: &ChainParams) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("p".into(), real(params.p()));
    m.insert("q".into(), real(params.q()));
    m.insert("p0".into(), real(params.p0()));
    m.insert("r0".into(), real(params.r0()));
    m.insert("q0".into(), real(params.q0()));
    m
}

fn masses_value(measure: &SpectralMeasure) -> Value {
    Value::Array(
        measure
            .masses()
            .iter()
            .map(|m| json!({ "x": real(m.x), "w": real(m.w) }))
            .collect(),
    )
}

pub fn classify(params: &ChainParams) -> Value {
    let measure = SpectralMeasure::new(*params);
    let class = classify_region(params);
    let mut doc = params_object(params);
    doc.insert("mass_count".into(), json!(class.count));
    doc.insert("masses".into(), masses_value(&measure));
    doc.insert("eta".into(), real(measure.eta()));
    doc.insert("recurrent".into(), json!(class.recurrent));
    doc.insert("positive_recurrent".into(), json!(class.positive_recurrent));
    doc.insert("boundary".into(), json!(class.boundary));
    Value::Object(doc)
}

/// One lattice cell of the atlas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtlasRow {
    pub r0: f64,
    pub p0: f64,
    pub mass_count: u8,
    pub boundary: bool,
}

/// Feasible cells of the `grid x grid` lattice on `[0, 1]^2`, row-major in
/// `r0` then `p0`. Cells with `p0 = 0` or `r0 + p0 > 1` are skipped.
pub fn atlas_rows(p: f64, grid: usize) -> Result<Vec<AtlasRow>, CliError> {
    if grid < 2 {
        return Err(CliError::Argument(format!("grid = {grid} must be at least 2")));
    }
    let step = 1.0 / (grid - 1) as f64;
    let mut rows = Vec::new();
    for a in 0..grid {
        for b in 1..grid {
            if a + b > grid - 1 {
                break;
            }
            let (r0, p0) = (a as f64 * step, b as f64 * step);
            let params = ChainParams::new(p, p0, r0)?;
            let class = classify_region(&params);
            rows.push(AtlasRow {
                r0,
                p0,
                mass_count: class.count,
                boundary: class.boundary,
            });
        }
    }
    Ok(rows)
}

pub fn atlas_csv(rows: &[AtlasRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["r0", "p0", "mass_count", "boundary"]).expect("in-memory write");
    for r in rows {
        w.write_record([
            real_text(r.r0),
            real_text(r.p0),
            r.mass_count.to_string(),
            r.boundary.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

pub fn measure_doc(params: &ChainParams, nodes: usize, format: Format) -> Result<String, CliError> {
    let measure = SpectralMeasure::new(*params);
    let rule = build_rule(params, nodes)?;
    let samples: Vec<(f64, f64)> = rule
        .nodes
        .iter()
        .map(|&x| Ok((x, density_at(params, x)?)))
        .collect::<Result<_, ChainError>>()?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["x", "density"]).expect("in-memory write");
            for (x, d) in &samples {
                w.write_record([real_text(*x), real_text(*d)]).expect("in-memory write");
            }
            Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii"))
        }
        Format::Json => {
            let total = DiscreteMeasure::new(measure.clone(), nodes)?.integrate(|_| 1.0);
            let mut doc = params_object(params);
            doc.insert("nodes".into(), json!(nodes));
            doc.insert(
                "density".into(),
                Value::Array(
                    samples
                        .iter()
                        .map(|(x, d)| json!({ "x": real(*x), "density": real(*d) }))
                        .collect(),
                ),
            );
            doc.insert("masses".into(), masses_value(&measure));
            doc.insert("eta".into(), real(measure.eta()));
            doc.insert("cut_edge".into(), real(measure.cut_edge()));
            doc.insert("total_mass".into(), real(total));
            Ok(json_text(&Value::Object(doc)))
        }
    }
}

pub fn transition_doc(
    params: &ChainParams,
    (i, j, n): (usize, usize, usize),
    method: Method,
    nodes: usize,
) -> Result<Value, CliError> {
    let spectral = match method {
        Method::Oracle => None,
        _ => Some(DiscreteMeasure::for_params(*params, nodes)?.transition(i, j, n)),
    };
    let oracle = match method {
        Method::Spectral => None,
        _ => Some(oracle_transition(params, i, j, n)),
    };
    let abs_diff = spectral.zip(oracle).map(|(s, o)| (s - o).abs());
    Ok(json!({
        "spectral": opt_real(spectral),
        "oracle": opt_real(oracle),
        "abs_diff": opt_real(abs_diff),
    }))
}

pub fn qsd_doc(params: &ChainParams, x: f64, tol: f64, format: Format) -> Result<String, CliError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(CliError::Argument(format!("tol = {tol} must be positive")));
    }
    let dist = qsd_alpha(params, x, tol)?;
    Ok(match format {
        Format::Json => json_text(&json!({
            "x": real(dist.x),
            "alpha": reals(&dist.alpha),
            "jcut": dist.jcut,
            "tail_bound": real(dist.tail_bound),
        })),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["j", "alpha"]).expect("in-memory write");
            for (j, a) in dist.alpha.iter().enumerate() {
                w.write_record([j.to_string(), real_text(*a)]).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
        }
    })
}

pub fn ratio_doc(
    params: &ChainParams,
    [i, j, k, l]: [usize; 4],
    parity: Option<ParityArg>,
) -> Result<Value, CliError> {
    let result = match parity {
        None => ratio_limit(params, i, j, k, l)?,
        Some(ParityArg::Even) => ratio_limit_parity(params, i, j, k, l, Parity::Even)?,
        Some(ParityArg::Odd) => ratio_limit_parity(params, i, j, k, l, Parity::Odd)?,
    };
    Ok(json!({
        "limit": real(result.limit),
        "mode": result.mode.as_str(),
        "eta": real(result.eta_used),
        "no_mass": result.no_mass,
    }))
}

pub fn verify_doc(params: &ChainParams) -> Result<(Value, bool), CliError> {
    let report = verify(params)?;
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| json!({ "name": c.name, "pass": c.pass, "max_err": real(c.max_err), "tol": real(c.tol) }))
        .collect();
    let all_pass = report.all_pass();
    Ok((json!({ "checks": checks, "all_pass": all_pass }), all_pass))
}

/// Executes a parsed command, returning the document text.
pub fn execute(command: &Command) -> Result<Rendered, CliError> {
    Ok(match command {
        Command::Classify { chain, .. } => Rendered::ok(json_text(&classify(&chain.params()?))),
        Command::Atlas { p, grid, .. } => Rendered::ok(atlas_csv(&atlas_rows(*p, *grid)?)),
        Command::Measure {
            chain, nodes, format, ..
        } => Rendered::ok(measure_doc(&chain.params()?, *nodes, *format)?),
        Command::Transition {
            chain,
            i,
            j,
            n,
            method,
            nodes,
            ..
        } => Rendered::ok(json_text(&transition_doc(&chain.params()?, (*i, *j, *n), *method, *nodes)?)),
        Command::Qsd {
            chain, x, tol, format, ..
        } => Rendered::ok(qsd_doc(&chain.params()?, *x, *tol, *format)?),
        Command::RatioLimit {
            chain,
            i,
            j,
            k,
            l,
            parity,
            ..
        } => Rendered::ok(json_text(&ratio_doc(&chain.params()?, [*i, *j, *k, *l], *parity)?)),
        Command::Verify { chain, .. } => {
            let (doc, all_pass) = verify_doc(&chain.params()?)?;
            Rendered {
                text: json_text(&doc),
                success: all_pass,
            }
        }
    })
}

fn output_path(command: &Command) -> Option<&PathBuf> {
    match command {
        Command::Classify { out, .. }
        | Command::Atlas { out, .. }
        | Command::Measure { out, .. }
        | Command::Transition { out, .. }
        | Command::Qsd { out, .. }
        | Command::RatioLimit { out, .. }
        | Command::Verify { out, .. } => out.output.as_ref(),
    }
}

/// Runs a command end to end and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let rendered = match execute(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("kmchain: {e}");
            return e.exit_code();
        }
    };
    let written = match output_path(&cli.command) {
        Some(path) => fs::write(path, &rendered.text).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        }),
        None => std::io::stdout()
            .write_all(rendered.text.as_bytes())
            .map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    };
    if let Err(e) = written {
        eprintln!("kmchain: {e}");
        return e.exit_code();
    }
    if rendered.success {
        0
    } else {
        1
    }
}
