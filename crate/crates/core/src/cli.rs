//! Command line front end: `evolve`, `decompose`, `verify` and `truncate`.
//!
//! Every run writes `manifest.json` plus its outputs into `--out`. JSON
//! outputs carry a `manifest_hash` field and CSV outputs start with a
//! `# manifest_hash=<hex>` line. The hash covers everything in the manifest
//! except wall-clock timings, so identical invocations give identical
//! output files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::dynamics::{self, EvolutionConfig, Method, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::init::InitialState;
use crate::lattice::{parse_dims, Boundary, Lattice, LatticeSpec, SubsetId};
use crate::polymer;
use crate::state::SubsetVector;
use crate::tolerances;
use crate::verify::{self, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "heisenberg-polymer", version, about = "Polymer expansion of Heisenberg ferromagnet wave functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a state under e^{-Ht} and write snapshots.
    Evolve(EvolveArgs),
    /// Solve for polymer weights and check the reconstruction.
    Decompose(DecomposeArgs),
    /// Run the identity battery on random states.
    Verify(VerifyArgs),
    /// Error of the expansion truncated to polymers of at most k sites.
    Truncate(TruncateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Rk4,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Exact => Method::ExactExpm,
            MethodArg::Rk4 => Method::Rk4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Open,
    Periodic,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Boundary {
        match b {
            BoundaryArg::Open => Boundary::Open,
            BoundaryArg::Periodic => Boundary::Periodic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    /// Side lengths, e.g. `3x2`.
    #[arg(long)]
    pub dims: String,
    #[arg(long, value_enum, default_value = "open")]
    pub boundary: BoundaryArg,
}

#[derive(Debug, Args)]
pub struct StateArgs {
    /// `single:<vertex>`, `set:<mask>`, `product:<p0,p1,...>` or `random`.
    #[arg(long, default_value = "single:0", conflicts_with = "state")]
    pub init: String,
    /// Read the initial state from a JSON file `{"n_vertices", "coeffs"}`.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TimeArgs {
    /// Comma-separated sample times; the largest is the final time.
    #[arg(long = "t", value_delimiter = ',', default_value = "0")]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Snapshot format for `evolve`.
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[command(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    pub time: TimeArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[command(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    pub time: TimeArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    /// Time used by the evolution checks.
    #[arg(long = "t", default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TruncateArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[command(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    pub time: TimeArgs,
    /// Largest polymer size in the table; defaults to the vertex count.
    #[arg(long)]
    pub kmax: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Everything needed to replay a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub lattice: LatticeSpec,
    pub initial_state: Option<String>,
    pub state_file: Option<String>,
    pub seed: u64,
    pub evolution: Option<EvolutionConfig>,
    pub analyses: Vec<String>,
    pub parameters: serde_json::Value,
    pub outputs: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, lattice: &Lattice) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            lattice: lattice.spec(),
            initial_state: None,
            state_file: None,
            seed: 0,
            evolution: None,
            analyses: Vec::new(),
            parameters: serde_json::Value::Null,
            outputs: Vec::new(),
        }
    }

    /// SHA-256 of the manifest's JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serializes");
        format!("{:x}", Sha256::digest(&bytes))
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Evolve(a) => cmd_evolve(&a),
        Command::Decompose(a) => cmd_decompose(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Truncate(a) => cmd_truncate(&a),
    }
}

fn build_lattice(args: &LatticeArgs) -> Result<Lattice> {
    Lattice::new(&parse_dims(&args.dims)?, args.boundary.into())
}

fn load_state(args: &StateArgs, lat: &Lattice, manifest: &mut RunManifest) -> Result<SubsetVector> {
    manifest.seed = args.seed;
    match &args.state {
        Some(path) => {
            manifest.state_file = Some(path.display().to_string());
            let v = SubsetVector::from_json(&fs::read_to_string(path)?)?;
            if v.n_vertices() != lat.n_vertices() {
                return Err(Error::arg(format!(
                    "state file has {} vertices, lattice {} has {}",
                    v.n_vertices(),
                    lat.label(),
                    lat.n_vertices()
                )));
            }
            Ok(v)
        }
        None => {
            let init: InitialState = args.init.parse()?;
            manifest.initial_state = Some(init.to_string());
            init.build(lat.n_vertices(), args.seed)
        }
    }
}

fn evolution_config(time: &TimeArgs) -> Result<EvolutionConfig> {
    let t_final = time.t.iter().copied().fold(0.0, f64::max);
    if time.t.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::arg("times must be finite and nonnegative"));
    }
    let mut times = time.t.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    Ok(EvolutionConfig::new(t_final, time.method.into()).with_dt(time.dt).with_record_times(times))
}

struct OutDir {
    dir: PathBuf,
    hash: String,
    written: Vec<String>,
}

impl OutDir {
    fn new(dir: &Path, hash: String) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutDir { dir: dir.to_path_buf(), hash, written: Vec::new() })
    }

    fn json(&mut self, name: &str, mut value: serde_json::Value) -> Result<()> {
        if let Some(obj) = value.as_object_mut() {
            obj.insert("manifest_hash".to_owned(), json!(self.hash));
        }
        let mut text = serde_json::to_string_pretty(&value)?;
        text.push('\n');
        fs::write(self.dir.join(name), text)?;
        self.written.push(name.to_owned());
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
        let mut w = std::io::BufWriter::new(fs::File::create(self.dir.join(name))?);
        writeln!(w, "# manifest_hash={}", self.hash)?;
        writeln!(w, "{header}")?;
        for row in rows {
            writeln!(w, "{row}")?;
        }
        w.flush()?;
        self.written.push(name.to_owned());
        Ok(())
    }

    fn finish(self, mut manifest: RunManifest, started: Instant) -> Result<()> {
        manifest.outputs = self.written;
        let value = json!({
            "manifest": manifest,
            "manifest_hash": self.hash,
            "wall_clock_seconds": started.elapsed().as_secs_f64(),
        });
        fs::write(self.dir.join("manifest.json"), serde_json::to_string_pretty(&value)? + "\n")?;
        Ok(())
    }
}

fn planned(manifest: &mut RunManifest, outputs: &[&str]) {
    manifest.outputs = outputs.iter().map(|s| s.to_string()).collect();
}

fn print_summary(value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

pub fn cmd_evolve(args: &EvolveArgs) -> Result<i32> {
    let started = Instant::now();
    let lat = build_lattice(&args.lattice)?;
    let mut manifest = RunManifest::new("evolve", &lat);
    let f0 = load_state(&args.state, &lat, &mut manifest)?;
    let cfg = evolution_config(&args.time)?;
    manifest.evolution = Some(cfg.clone());
    manifest.analyses = vec!["evolve".into(), "conservation".into()];
    manifest.parameters = json!({ "format": format!("{:?}", args.output.format).to_lowercase() });
    let snapshot_file = match args.output.format {
        Format::Json => "evolve.json",
        Format::Csv => "evolve_series.csv",
    };
    planned(&mut manifest, &[snapshot_file, "evolve_summary.csv"]);

    let snaps = dynamics::evolve(&lat, &f0, &cfg)?;
    let sum0 = f0.total_sum();
    let max_drift = snaps.iter().map(|(_, f)| (f.total_sum() - sum0).abs()).fold(0.0, f64::max);

    let mut out = OutDir::new(&args.output.out, manifest.hash())?;
    match args.output.format {
        Format::Json => {
            let list: Vec<_> = snaps
                .iter()
                .map(|(t, f)| {
                    json!({
                        "t": t,
                        "total_sum": f.total_sum(),
                        "state": f,
                    })
                })
                .collect();
            out.json(
                snapshot_file,
                json!({ "lattice": lat.spec(), "method": cfg.method, "dt": cfg.dt, "snapshots": list }),
            )?;
        }
        Format::Csv => {
            let rows = snaps.iter().flat_map(|(t, f)| {
                f.coeffs()
                    .iter()
                    .enumerate()
                    .map(move |(m, c)| format!("{t},{m},{},{c:e}", m.count_ones()))
                    .collect::<Vec<_>>()
            });
            out.csv(snapshot_file, "t,mask,cardinality,coefficient", rows)?;
        }
    }
    out.csv(
        "evolve_summary.csv",
        "t,total_sum,drift",
        snaps.iter().map(|(t, f)| format!("{t},{:e},{:e}", f.total_sum(), f.total_sum() - sum0)),
    )?;

    let (t_last, f_last) = snaps.last().expect("at least one record time");
    let top: Vec<_> = f_last
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .take(16)
        .map(|(m, c)| json!({ "set": SubsetId(m as u32).to_string(), "mask": m, "coefficient": c }))
        .collect();
    print_summary(&json!({
        "command": "evolve",
        "lattice": lat.label(),
        "t": t_last,
        "method": cfg.method,
        "total_sum": f_last.total_sum(),
        "max_total_sum_drift": max_drift,
        "coefficients": top,
        "manifest_hash": out.hash,
    }));
    out.finish(manifest, started)?;
    Ok(0)
}

/// Evolve to the largest requested time, or return `f0` when that is 0.
fn state_at_final_time(lat: &Lattice, f0: &SubsetVector, cfg: &EvolutionConfig) -> Result<SubsetVector> {
    if cfg.t_final == 0.0 {
        return Ok(f0.clone());
    }
    dynamics::evolve_to(lat, f0, cfg.t_final, cfg.method, cfg.dt)
}

pub fn cmd_decompose(args: &DecomposeArgs) -> Result<i32> {
    let started = Instant::now();
    let lat = build_lattice(&args.lattice)?;
    let mut manifest = RunManifest::new("decompose", &lat);
    let f0 = load_state(&args.state, &lat, &mut manifest)?;
    let cfg = evolution_config(&args.time)?;
    manifest.evolution = Some(cfg.clone());
    manifest.analyses = vec!["compute_c".into(), "solve_u".into(), "reconstruct_f".into()];
    planned(&mut manifest, &["polymers.csv", "decompose.json"]);

    let raw = state_at_final_time(&lat, &f0, &cfg)?;
    let input_sum = raw.total_sum();
    let f = raw.normalize()?;
    let p = polymer::decompose(&f)?;
    let back = polymer::reconstruct_f(&p);
    let residual = back.max_abs_diff(&f);
    let rel_residual = tolerances::relative(residual, f.max_abs());

    let mut out = OutDir::new(&args.output.out, manifest.hash())?;
    let n = lat.n_vertices();
    let rows = (1..1usize << n).map(|m| {
        let s = SubsetId(m as u32);
        format!("{m},{},{:e}", s.cardinality(), p.get(s))
    });
    out.csv("polymers.csv", "mask,cardinality,value", rows)?;
    let report = json!({
        "lattice": lat.spec(),
        "t": cfg.t_final,
        "input_total_sum": input_sum,
        "phi": p.phi(),
        "max_abs_polymer": p.max_abs_polymer(),
        "roundtrip_residual": residual,
        "roundtrip_relative_residual": rel_residual,
        "roundtrip_pass": rel_residual <= tolerances::ROUNDTRIP,
    });
    out.json("decompose.json", report.clone())?;
    let mut summary = report;
    summary["command"] = json!("decompose");
    summary["manifest_hash"] = json!(out.hash);
    print_summary(&summary);
    out.finish(manifest, started)?;
    Ok(0)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let started = Instant::now();
    let lat = build_lattice(&args.lattice)?;
    let mut manifest = RunManifest::new("verify", &lat);
    let opts = VerifyOptions { trials: args.trials, seed: args.seed, t: args.t, dt: args.dt };
    manifest.seed = args.seed;
    manifest.analyses = vec!["identity_battery".into()];
    manifest.parameters = serde_json::to_value(&opts)?;
    planned(&mut manifest, &["verify_report.json"]);

    let report = verify::run_battery(&lat, &opts)?;
    let mut out = OutDir::new(&args.out, manifest.hash())?;
    let value = json!({
        "lattice": lat.label(),
        "all_pass": report.all_pass(),
        "results": report.results,
        "skipped": report.skipped,
    });
    out.json("verify_report.json", value.clone())?;
    let mut summary = value;
    summary["command"] = json!("verify");
    summary["manifest_hash"] = json!(out.hash);
    print_summary(&summary);
    out.finish(manifest, started)?;
    Ok(if report.all_pass() { 0 } else { 1 })
}

/// Whether errors never grow with `k_max`, up to a round-off slack.
pub fn is_monotone(rows: &[polymer::TruncationRow]) -> bool {
    rows.windows(2).all(|w| {
        w[1].l1_error <= w[0].l1_error + tolerances::MONOTONE_SLACK
            && w[1].linf_error <= w[0].linf_error + tolerances::MONOTONE_SLACK
            && w[1].rel_l2_error <= w[0].rel_l2_error + tolerances::MONOTONE_SLACK
    })
}

pub fn cmd_truncate(args: &TruncateArgs) -> Result<i32> {
    let started = Instant::now();
    let lat = build_lattice(&args.lattice)?;
    let n = lat.n_vertices();
    let mut manifest = RunManifest::new("truncate", &lat);
    let f0 = load_state(&args.state, &lat, &mut manifest)?;
    let cfg = evolution_config(&args.time)?;
    let k_limit = args.kmax.unwrap_or(n).max(1);
    if k_limit > n.max(1) {
        return Err(Error::arg(format!("--kmax {k_limit} exceeds the vertex count {n}")));
    }
    manifest.evolution = Some(cfg.clone());
    manifest.analyses = vec!["truncation".into()];
    manifest.parameters = json!({ "kmax": k_limit });
    planned(&mut manifest, &["truncation.csv", "truncation_long.csv", "truncation.json"]);

    let snaps = if cfg.t_final == 0.0 {
        cfg.record_times.iter().map(|&t| (t, f0.clone())).collect()
    } else {
        dynamics::evolve(&lat, &f0, &cfg)?
    };

    let mut tables = Vec::new();
    for (t, f) in &snaps {
        let f = f.normalize()?;
        let p = polymer::decompose(&f)?;
        let mut rows = polymer::truncation_errors(&p)?;
        rows.truncate(k_limit);
        let roundtrip = tolerances::relative(polymer::reconstruct_f(&p).max_abs_diff(&f), f.max_abs());
        tables.push((*t, rows, roundtrip));
    }

    let mut out = OutDir::new(&args.output.out, manifest.hash())?;
    out.csv(
        "truncation.csv",
        "t,k_max,l1_error,linf_error,rel_l2_error",
        tables.iter().flat_map(|(t, rows, _)| {
            rows.iter()
                .map(|r| format!("{t},{},{:e},{:e},{:e}", r.k_max, r.l1_error, r.linf_error, r.rel_l2_error))
                .collect::<Vec<_>>()
        }),
    )?;
    out.csv(
        "truncation_long.csv",
        "t,k_max,metric,value",
        tables.iter().flat_map(|(t, rows, _)| {
            rows.iter()
                .flat_map(|r| {
                    [("l1", r.l1_error), ("linf", r.linf_error), ("rel_l2", r.rel_l2_error)]
                        .map(|(name, v)| format!("{t},{},{name},{v:e}", r.k_max))
                })
                .collect::<Vec<_>>()
        }),
    )?;
    let json_tables: Vec<_> = tables
        .iter()
        .map(|(t, rows, roundtrip)| {
            json!({
                "t": t,
                "rows": rows,
                "monotone": is_monotone(rows),
                "complete": rows.len() == k_limit,
                "roundtrip_relative_residual": roundtrip,
            })
        })
        .collect();
    let value = json!({ "lattice": lat.spec(), "tables": json_tables });
    out.json("truncation.json", value.clone())?;
    let mut summary = value;
    summary["command"] = json!("truncate");
    summary["manifest_hash"] = json!(out.hash);
    print_summary(&summary);
    out.finish(manifest, started)?;
    Ok(0)
}
