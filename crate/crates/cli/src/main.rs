//! `lme`: scenario runner for the steady-state solvers.
//!
//! Exit codes: 0 success, 1 I/O error, 2 config error, 3 solver failure,
//! 4 verification failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lme::algebra::ComplexMatrix;
use lme::verification::{self, VerifyOptions};
use serde::Serialize;

mod run;
mod scenario;
mod series;

use run::{agreement, evaluate_all, Evaluated, Row, SCHEMA_VERSION};
use scenario::{ConfigError, Format, KindName, MethodName, Scenario};

#[derive(Parser)]
#[command(name = "lme", version, about = "Steady states and heat-current audits for local master equations of coupled qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Built-in scenario to use when no config is given
    #[arg(long, global = true, value_enum, conflicts_with = "config")]
    model: Option<KindName>,

    /// Directory for output files; stdout when absent
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Residual tolerance for accepted steady states
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Perturbative truncation order K
    #[arg(long, global = true)]
    order: Option<usize>,

    #[arg(long, global = true, value_enum)]
    method: Option<MethodName>,

    /// Also emit density matrices as JSON
    #[arg(long, global = true)]
    density_matrices: bool,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Solve the base point of the scenario
    Solve,
    /// Solve every sweep point
    Sweep,
    /// Run the cross-solver and thermodynamics self-test suite
    Verify,
    /// Dump the perturbative terms and the truncation-error table
    Series,
}

enum Failure {
    Io(io::Error),
    Config(String),
    Solver(String),
    Verification,
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Verification) => ExitCode::from(4),
    }
}

fn load(cli: &Cli) -> Result<Scenario, Failure> {
    let mut s = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            Scenario::parse(&text).map_err(|e| Failure::Config(format!("{}: {}", path.display(), e.0)))?
        }
        None => Scenario::defaults(cli.model.unwrap_or(KindName::TwoQubit))?,
    };
    if let Some(dir) = &cli.output {
        s.output_dir = Some(dir.clone());
    }
    if let Some(f) = cli.format {
        s.format = f;
    }
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Failure::Config(format!("--tol: must be positive, got {tol}")));
        }
        s.tol.residual = tol;
        s.tol.failure_residual = tol;
    }
    if let Some(order) = cli.order {
        s.order = order;
    }
    if let Some(m) = cli.method {
        if m == MethodName::ClosedForm && s.kind == lme::model::ModelKind::Custom {
            return Err(Failure::Config("--method: closed_form needs kind two_qubit or refrigerator".into()));
        }
        s.method = m;
    }
    s.density_matrices |= cli.density_matrices;
    if s.density_matrices && s.format == Format::Csv && s.output_dir.is_none() {
        return Err(Failure::Config("density matrices with csv output need an output directory".into()));
    }
    Ok(s)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let scenario = load(cli)?;
    match cli.command {
        Command::Solve => solve(&scenario, false),
        Command::Sweep => {
            if scenario.sweep.is_none() {
                return Err(Failure::Config("sweep: the scenario has no [sweep] section".into()));
            }
            solve(&scenario, true)
        }
        Command::Verify => verify(&scenario),
        Command::Series => run_series(&scenario),
    }
}

/// Output destination: files in a directory, or stdout.
struct Sink<'a> {
    dir: Option<&'a Path>,
}

impl Sink<'_> {
    fn open(&self, name: &str) -> io::Result<Box<dyn Write>> {
        match self.dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                Ok(Box::new(io::BufWriter::new(fs::File::create(dir.join(name))?)))
            }
            None => Ok(Box::new(io::stdout().lock())),
        }
    }

    fn csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(self.open(&format!("{name}.csv"))?);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        self.announce(&format!("{name}.csv"), rows.len());
        Ok(())
    }

    fn records(&self, name: &str, records: &[Vec<String>]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(self.open(&format!("{name}.csv"))?);
        for rec in records {
            w.write_record(rec)?;
        }
        w.flush()?;
        self.announce(&format!("{name}.csv"), records.len().saturating_sub(1));
        Ok(())
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Failure> {
        let mut w = self.open(&format!("{name}.json"))?;
        serde_json::to_writer_pretty(&mut w, value).map_err(io::Error::from)?;
        writeln!(w)?;
        w.flush()?;
        self.announce(&format!("{name}.json"), 1);
        Ok(())
    }

    fn announce(&self, file: &str, rows: usize) {
        if let Some(dir) = self.dir {
            eprintln!("wrote {} ({rows} rows)", dir.join(file).display());
        }
    }

    fn section(&self, title: &str) {
        if self.dir.is_none() {
            println!("# {title}");
        }
    }
}

#[derive(Serialize)]
struct DensityMatrix {
    dim: usize,
    /// Row-major `[re, im]` pairs.
    data: Vec<[f64; 2]>,
}

impl DensityMatrix {
    fn new(rho: &ComplexMatrix) -> Self {
        let dim = rho.dim();
        let data = (0..dim).flat_map(|r| (0..dim).map(move |c| (r, c))).map(|(r, c)| {
            let z = rho.get(r, c);
            [z.re, z.im]
        });
        Self { dim, data: data.collect() }
    }
}

#[derive(Serialize)]
struct JsonRow {
    #[serde(flatten)]
    row: Row,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<DensityMatrix>,
}

#[derive(Serialize)]
struct SolveDocument {
    schema_version: u32,
    rows: Vec<JsonRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    agreement: Option<AgreementJson>,
}

#[derive(Serialize)]
struct AgreementJson {
    methods: Vec<String>,
    distances: Vec<Vec<f64>>,
}

fn solve(scenario: &Scenario, sweep: bool) -> Result<(), Failure> {
    let points = if sweep { scenario.points()? } else { vec![scenario.base.clone()] };
    let results = evaluate_all(scenario, &points).map_err(|f| Failure::Solver(f.to_string()))?;
    let name = if sweep { "sweep" } else { "solve" };
    let sink = Sink { dir: scenario.output_dir.as_deref() };
    let rows: Vec<Row> = results.iter().map(Row::new).collect();

    let agree = (!sweep && results.len() > 1).then(|| agreement(&results));

    match scenario.format {
        Format::Csv => {
            sink.csv(name, &rows)?;
            if scenario.density_matrices {
                write_density_files(&sink, &results)?;
            }
            if let Some(a) = &agree {
                if sink.dir.is_none() {
                    println!();
                }
                sink.section("agreement: Frobenius distance between solver states");
                sink.records("agreement", &agreement_records(a))?;
            }
        }
        Format::Json => {
            let rows = rows
                .into_iter()
                .zip(&results)
                .map(|(row, r)| JsonRow { row, rho: scenario.density_matrices.then(|| DensityMatrix::new(&r.eval.state.rho)) })
                .collect();
            let agreement = agree.as_ref().map(|a| AgreementJson { methods: a.methods.clone(), distances: a.distances.clone() });
            sink.json(name, &SolveDocument { schema_version: SCHEMA_VERSION, rows, agreement })?;
        }
    }
    if let (Some(a), Some(_)) = (&agree, sink.dir) {
        print_agreement(a);
    }
    Ok(())
}

fn agreement_records(a: &run::Agreement) -> Vec<Vec<String>> {
    let mut header = vec!["method".to_string()];
    header.extend(a.methods.iter().cloned());
    let mut out = vec![header];
    for (m, row) in a.methods.iter().zip(&a.distances) {
        let mut rec = vec![m.clone()];
        rec.extend(row.iter().map(|d| format!("{d:e}")));
        out.push(rec);
    }
    out
}

fn print_agreement(a: &run::Agreement) {
    println!("Frobenius distance between solver states:");
    print!("{:>16}", "");
    for m in &a.methods {
        print!(" {m:>16}");
    }
    println!();
    for (m, row) in a.methods.iter().zip(&a.distances) {
        print!("{m:>16}");
        for d in row {
            print!(" {d:>16.3e}");
        }
        println!();
    }
}

fn write_density_files(sink: &Sink, results: &[Evaluated]) -> Result<(), Failure> {
    let Some(dir) = sink.dir else { return Ok(()) };
    let rho_dir = dir.join("rho");
    fs::create_dir_all(&rho_dir)?;
    for r in results {
        let method: String = r.method.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
        let path = rho_dir.join(format!("point_{:05}_{}.json", r.point, method.trim_end_matches('_')));
        let mut w = io::BufWriter::new(fs::File::create(path)?);
        serde_json::to_writer(&mut w, &DensityMatrix::new(&r.eval.state.rho)).map_err(io::Error::from)?;
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckRow<'a> {
    check: &'a str,
    passed: bool,
    detail: &'a str,
}

fn verify(scenario: &Scenario) -> Result<(), Failure> {
    let opts = VerifyOptions { seed: scenario.seed, tol: scenario.tol, ..VerifyOptions::default() };
    let report = verification::run(&opts).map_err(|e| Failure::Solver(format!("verification suite: {e}")))?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let sink = Sink { dir: scenario.output_dir.as_deref() };
    match scenario.format {
        Format::Csv => {
            if sink.dir.is_some() {
                let rows: Vec<CheckRow> =
                    report.checks.iter().map(|c| CheckRow { check: &c.name, passed: c.passed, detail: &c.detail }).collect();
                sink.csv("verify", &rows)?;
            }
            if sink.dir.is_none() {
                println!();
            }
            sink.section("refrigerator coefficients: closed form against the exact state");
            sink.csv("verify_coefficients", &report.coefficient_deviations)?;
        }
        Format::Json => sink.json("verify", &report)?,
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn run_series(scenario: &Scenario) -> Result<(), Failure> {
    let report = series::run(scenario).map_err(|e| Failure::Solver(format!("series at base point ({}): {e}", scenario.base.describe())))?;
    let sink = Sink { dir: scenario.output_dir.as_deref() };
    match scenario.format {
        Format::Json => sink.json("series", &report)?,
        Format::Csv => {
            if let Some(x) = report.x {
                let g = report.g;
                println!("# x = {x}, g^2 x = {}", g * g * x);
            }
            sink.section("terms: rho(k) norms and the ratio to rho(k-2)");
            sink.csv("series_terms", &report.terms)?;
            sink.section("ratio: rho(3)/rho(1) entrywise");
            sink.csv("series_ratio", &report.ratio)?;
            sink.section("truncation: ||rho_exact - partial_sum_K|| against g");
            sink.csv("series_truncation", &report.truncation)?;
            sink.section("slopes: log-log fit per order");
            sink.csv("series_slopes", &report.slopes)?;
        }
    }
    Ok(())
}
