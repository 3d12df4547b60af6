//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a `compare` check failed, 2 invalid input,
//! 3 resource cap exceeded. Infinite values are written as `inf`, NaN as `nan`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exponent::ExponentResult;
use crate::gallager;
use crate::simulator::{self, empirical_exponent, Mode, RatePoint, SimConfig};
use crate::source::JointSource;
use crate::tce_binary;
use crate::tce_general;
use crate::variable_rate;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SWEXP_OUT_DIR";

/// Header of the `exponent` CSV.
pub const EXPONENT_HEADER: &str = "R,T,value,diverged,rho,s";

#[derive(Debug, Parser)]
#[command(name = "swexp", version, about = "Erasure/list exponents for Slepian-Wolf random binning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Compute an exponent at a point or over an (R, T) grid.
    Exponent(ExponentArgs),
    /// Region-labelled phase diagram of L(R,s) for a binary symmetric source.
    PhaseDiagram(PhaseArgs),
    /// Monte Carlo simulation of the binning decoder.
    Simulate(SimulateArgs),
    /// Fit exponents to a simulation CSV and check them against computed bounds.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gf,
    GfVariable,
    TceBinary,
    TceGeneral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    E1,
    E2,
}

#[derive(Debug, Args, Serialize)]
pub struct SourceArgs {
    /// Binary symmetric source with crossover p.
    #[arg(long, value_name = "p", conflicts_with_all = ["source", "alphabet"])]
    pub bss: Option<f64>,
    /// JSON source spec: {"alphabet_x": [...], "alphabet_y": [...], "pmf": [[...]]}.
    #[arg(long, value_name = "FILE", conflicts_with = "alphabet")]
    pub source: Option<PathBuf>,
    /// q-ary symmetric source over k letters.
    #[arg(long, value_name = "k")]
    pub alphabet: Option<usize>,
    /// Total crossover probability for --alphabet.
    #[arg(long, default_value_t = 0.1)]
    pub crossover: f64,
}

impl SourceArgs {
    fn load(&self) -> Result<JointSource> {
        match (self.bss, &self.source, self.alphabet) {
            (Some(p), _, _) => JointSource::bss(p),
            (_, Some(path), _) => JointSource::from_json_file(path),
            (_, _, Some(k)) => JointSource::symmetric(k, self.crossover),
            _ => Err(Error::InvalidSource("one of --bss, --source or --alphabet is required".into())),
        }
    }

    fn inputs(&self) -> Vec<&Path> {
        self.source.iter().map(PathBuf::as_path).collect()
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ExponentArgs {
    #[arg(long, value_enum, default_value_t = Method::Gf)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = Kind::E1)]
    pub kind: Kind,
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long = "R", allow_negative_numbers = true, conflicts_with = "r_grid")]
    pub rate: Option<f64>,
    #[arg(long = "T", allow_negative_numbers = true, conflicts_with = "t_grid")]
    pub threshold: Option<f64>,
    /// `start:stop:count` or a comma-separated list.
    #[arg(long = "R-grid", allow_hyphen_values = true)]
    pub r_grid: Option<String>,
    #[arg(long = "T-grid", allow_hyphen_values = true)]
    pub t_grid: Option<String>,
    /// Write exponent.csv and manifest.json here instead of printing to stdout.
    #[arg(long, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PhaseArgs {
    #[arg(long, default_value_t = 0.1)]
    pub p: f64,
    #[arg(long = "s-grid", default_value = "0:4:161")]
    pub s_grid: String,
    #[arg(long = "R-grid", default_value = "0:0.6931471805599453:101")]
    pub r_grid: String,
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Block lengths, `start:stop:count` or a comma-separated list.
    #[arg(long)]
    pub n: String,
    #[arg(long = "R")]
    pub rate: f64,
    #[arg(long = "T", allow_hyphen_values = true)]
    pub threshold: String,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-letter rates for variable-rate binning, comma-separated.
    #[arg(long, conflicts_with = "water_fill")]
    pub rates: Option<String>,
    /// Variable-rate binning with the water-filling rates at this s.
    #[arg(long, value_name = "s")]
    pub water_fill: Option<f64>,
    #[arg(long, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// CSV written by `simulate`.
    #[arg(long)]
    pub sim: PathBuf,
    /// CSV written by `exponent`.
    #[arg(long)]
    pub exponent: PathBuf,
}

/// Record of a run, written before any results.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'static str,
    pub parameters: &'a Command,
    pub input_digests: BTreeMap<String, String>,
    pub version: &'static str,
    pub master_seed: Option<u64>,
    pub outputs: Vec<String>,
}

impl<'a> RunManifest<'a> {
    fn new(command: &'a Command, inputs: &[&Path], seed: Option<u64>, outputs: &[&str]) -> Result<Self> {
        let mut input_digests = BTreeMap::new();
        for path in inputs {
            let bytes = fs::read(path)?;
            input_digests.insert(path.display().to_string(), format!("{:x}", Sha256::digest(&bytes)));
        }
        let name = match command {
            Command::Exponent(_) => "exponent",
            Command::PhaseDiagram(_) => "phase-diagram",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
        };
        Ok(Self {
            command: name,
            parameters: command,
            input_digests,
            version: env!("CARGO_PKG_VERSION"),
            master_seed: seed,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(self)?;
        fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

/// Parses `start:stop:count` (inclusive, evenly spaced) or `a,b,c`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::Domain(format!("bad grid '{text}': {what}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("'{s}' is not a number")));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [a, b, n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n.trim().parse().map_err(|_| bad("count must be a positive integer"))?;
            match n {
                0 => Err(bad("count must be positive")),
                1 => Ok(vec![a]),
                _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
            }
        }
        [list] => list.split(',').map(num).collect(),
        _ => Err(bad("expected start:stop:count or a comma-separated list")),
    }
}

fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    parse_grid(text)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Domain(format!("block length {v} is not a positive integer")))
            }
        })
        .collect()
}

/// Formats a number for CSV output, with fixed spellings for inf and nan.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

fn parse_num(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

/// Computes one exponent with the selected method.
pub fn compute_exponent(method: Method, src: &JointSource, rate: f64, threshold: f64) -> Result<ExponentResult> {
    match method {
        Method::Gf => Ok(gallager::e1(src, rate, threshold)),
        Method::GfVariable => variable_rate::e1_tilde(src, rate, threshold),
        Method::TceBinary => {
            let p = src
                .as_bss()
                .ok_or_else(|| Error::InvalidSource("tce-binary needs a binary symmetric source".into()))?;
            tce_binary::e1_prime_binary(p, rate, threshold)
        }
        Method::TceGeneral => tce_general::e1_prime_general(src, rate, threshold),
    }
}

fn exponent_rows(args: &ExponentArgs, mut out: impl Write) -> Result<()> {
    let src = args.source.load()?;
    let rates = match (&args.r_grid, args.rate) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(r)) => vec![r],
        (None, None) => return Err(Error::Domain("--R or --R-grid is required".into())),
    };
    let thresholds = match (&args.t_grid, args.threshold) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(t)) => vec![t],
        (None, None) => vec![0.0],
    };
    let mut rows = Vec::with_capacity(rates.len() * thresholds.len());
    for &rate in &rates {
        for &t in &thresholds {
            let r = compute_exponent(args.method, &src, rate, t)?;
            rows.push((rate, t, if args.kind == Kind::E2 { r.shifted(t) } else { r }));
        }
    }
    writeln!(out, "{EXPONENT_HEADER}")?;
    for (rate, t, r) in rows {
        let rho = r.rho().map(fmt_num).unwrap_or_default();
        writeln!(out, "{},{},{},{},{},{}", fmt_num(rate), fmt_num(t), fmt_num(r.value), r.diverged, rho, fmt_num(r.s()))?;
    }
    Ok(())
}

fn run_exponent(cmd: &Command, args: &ExponentArgs, stdout: &mut dyn Write) -> Result<()> {
    match &args.out_dir {
        Some(dir) => {
            RunManifest::new(cmd, &args.source.inputs(), None, &["exponent.csv"])?.write(dir)?;
            let mut f = BufWriter::new(File::create(dir.join("exponent.csv"))?);
            exponent_rows(args, &mut f)?;
            f.flush()?;
            writeln!(stdout, "wrote {}", dir.join("exponent.csv").display())?;
            Ok(())
        }
        None => exponent_rows(args, stdout),
    }
}

fn run_phase(cmd: &Command, args: &PhaseArgs, stdout: &mut dyn Write) -> Result<()> {
    let s_grid = parse_grid(&args.s_grid)?;
    let r_grid = parse_grid(&args.r_grid)?;
    let diagram = tce_binary::phase_diagram(args.p, &s_grid, &r_grid)?;
    let dir = &args.out_dir;
    let files = ["phase.csv", "boundaries.csv", "continuity.csv", "phase.gp"];
    RunManifest::new(cmd, &[], None, &files)?.write(dir)?;
    let create = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
    diagram.write_points_csv(create(files[0])?)?;
    diagram.write_boundaries_csv(create(files[1])?)?;
    diagram.write_continuity_csv(create(files[2])?)?;
    fs::write(dir.join(files[3]), diagram.gnuplot_script(files[0], files[1], "phase.png"))?;
    let regions: Vec<String> = diagram.regions_present().iter().map(|r| r.to_string()).collect();
    let gap = diagram.continuity.iter().map(|c| c.gap()).fold(0.0, f64::max);
    writeln!(stdout, "regions: {}", regions.join(" "))?;
    writeln!(stdout, "max boundary gap: {gap:e}")?;
    writeln!(stdout, "wrote {}", dir.display())?;
    Ok(())
}

fn sim_configs(args: &SimulateArgs) -> Result<Vec<SimConfig>> {
    let src = args.source.load()?;
    let mode = match (&args.rates, args.water_fill) {
        (Some(list), _) => Mode::VariableRate { rates: parse_grid(list)? },
        (None, Some(s)) => Mode::VariableRate { rates: variable_rate::optimal_rates(&src, s, args.rate)?.rates },
        (None, None) => Mode::FixedRate,
    };
    let thresholds = parse_grid(&args.threshold)?;
    let mut out = Vec::new();
    for &t in &thresholds {
        for n in parse_sizes(&args.n)? {
            let cfg = SimConfig::new(src.clone(), n, args.rate, t, args.trials, args.seed).with_mode(mode.clone());
            cfg.validate()?;
            out.push(cfg);
        }
    }
    Ok(out)
}

fn simulate_rows(configs: &[SimConfig], mut out: impl Write) -> Result<()> {
    simulator::write_csv_header(&mut out)?;
    for cfg in configs {
        let batch = simulator::run_trials(cfg)?;
        simulator::write_csv_row(&mut out, cfg, &batch)?;
    }
    Ok(())
}

fn run_simulate(cmd: &Command, args: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let configs = sim_configs(args)?;
    match &args.out_dir {
        Some(dir) => {
            RunManifest::new(cmd, &args.source.inputs(), Some(args.seed), &["simulate.csv"])?.write(dir)?;
            let mut f = BufWriter::new(File::create(dir.join("simulate.csv"))?);
            simulate_rows(&configs, &mut f)?;
            f.flush()?;
            writeln!(stdout, "wrote {}", dir.join("simulate.csv").display())?;
            Ok(())
        }
        None => simulate_rows(&configs, stdout),
    }
}

/// A CSV file read into named columns.
struct Table {
    file: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let file = path.display().to_string();
        let schema = |detail: String| Error::SchemaMismatch { file: file.clone(), detail };
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => schema(format!("{other:?}")),
        })?;
        let columns = reader.headers().map_err(|e| schema(e.to_string()))?.iter().map(str::to_string).collect();
        let rows = reader
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()).map_err(|e| schema(e.to_string())))
            .collect::<Result<Vec<Vec<String>>>>()?;
        Ok(Self { file, columns, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| Error::SchemaMismatch {
            file: self.file.clone(),
            detail: format!("missing column '{name}'"),
        })
    }

    fn num(&self, row: usize, col: usize) -> Result<f64> {
        parse_num(&self.rows[row][col]).ok_or_else(|| Error::SchemaMismatch {
            file: self.file.clone(),
            detail: format!("column '{}' row {}: '{}' is not a number", self.columns[col], row + 1, self.rows[row][col]),
        })
    }
}

/// One line of the comparison report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub rate: f64,
    pub threshold: f64,
    pub slope: f64,
    pub ci: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Fits the E1 exponent per (R, T) group of a simulation CSV and checks
/// `slope ≥ bound − CI` against the matching row of an exponent CSV.
pub fn compare_files(sim: &Path, exponent: &Path) -> Result<Vec<Comparison>> {
    let s = Table::read(sim)?;
    let e = Table::read(exponent)?;
    let (sn, sr, st, strials, se1) =
        (s.column("n")?, s.column("R_nominal")?, s.column("T")?, s.column("trials")?, s.column("e1_count")?);
    let (er, et, ev) = (e.column("R")?, e.column("T")?, e.column("value")?);
    let mut groups: Vec<((f64, f64), Vec<RatePoint>)> = Vec::new();
    for i in 0..s.rows.len() {
        let key = (s.num(i, sr)?, s.num(i, st)?);
        let trials = s.num(i, strials)? as u64;
        let point = RatePoint { n: s.num(i, sn)? as usize, rate: s.num(i, se1)? / trials as f64, trials: Some(trials) };
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, pts)) => pts.push(point),
            None => groups.push((key, vec![point])),
        }
    }
    let mut out = Vec::new();
    for ((rate, t), points) in groups {
        let row = (0..e.rows.len())
            .find(|&j| matches!((e.num(j, er), e.num(j, et)), (Ok(a), Ok(b)) if (a - rate).abs() < 1e-9 && (b - t).abs() < 1e-9))
            .ok_or_else(|| Error::SchemaMismatch {
                file: e.file.clone(),
                detail: format!("no row with R = {rate}, T = {t}"),
            })?;
        let bound = e.num(row, ev)?;
        let (slope, ci) = match empirical_exponent(&points) {
            Ok(f) => (f.slope, f.ci_half_width),
            // no events at some n: the one-sided bound stands in for the slope
            Err(Error::DegenerateData { one_sided_bound, .. }) => (one_sided_bound, 0.0),
            Err(err) => return Err(err),
        };
        out.push(Comparison { rate, threshold: t, slope, ci, bound, pass: slope >= bound - ci });
    }
    Ok(out)
}

fn run_compare(args: &CompareArgs, stdout: &mut dyn Write) -> Result<bool> {
    let report = compare_files(&args.sim, &args.exponent)?;
    writeln!(stdout, "R,T,slope,ci,bound,status")?;
    for c in &report {
        let status = if c.pass { "pass" } else { "FAIL" };
        writeln!(stdout, "{},{},{},{},{},{status}", fmt_num(c.rate), fmt_num(c.threshold), fmt_num(c.slope), fmt_num(c.ci), fmt_num(c.bound))?;
    }
    Ok(report.iter().all(|c| c.pass))
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Resource(_) => 3,
        _ => 2,
    }
}

/// Runs a parsed command, writing results to `stdout`; returns the exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Exponent(a) => run_exponent(&cli.command, a, stdout).map(|_| true),
        Command::PhaseDiagram(a) => run_phase(&cli.command, a, stdout).map(|_| true),
        Command::Simulate(a) => run_simulate(&cli.command, a, stdout).map(|_| true),
        Command::Compare(a) => run_compare(a, stdout),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    run(&cli, &mut out, &mut io::stderr())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("-0.5,0,0.25").unwrap(), vec![-0.5, 0.0, 0.25]);
        assert_eq!(parse_grid("2").unwrap(), vec![2.0]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a,b").is_err());
        assert_eq!(parse_sizes("8:20:4").unwrap(), vec![8, 12, 16, 20]);
        assert!(parse_sizes("1.5").is_err());
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, -2.5, f64::INFINITY, f64::NEG_INFINITY, 1e-300] {
            assert_eq!(parse_num(&fmt_num(v)), Some(v));
        }
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert!(parse_num(&fmt_num(f64::NAN)).unwrap().is_nan());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
