//! `crystal`: command-line front end.
//!
//! Every command writes its artifacts and a `manifest.json` under `--out`
//! (nothing is written without it) and prints a short summary. A manifest,
//! or just its `config` object, can be replayed with
//! `crystal <command> --config FILE`.

mod commands;
mod parse;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crystal_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "crystal", version, about = "Simulate and analyse the crystal growth process")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug, Clone, Default)]
struct Global {
    /// Directory receiving every output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for replicas and grid points. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Replay a manifest (or its `config` object) instead of reading flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

/// Parameters shared by the single-point simulation commands.
#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RunArgs {
    /// Rates `B0,B1,B2` for 0, 1 and 2 strictly higher neighbours.
    #[arg(long)]
    pub beta: String,

    /// Number of sites; the start is flat unless `--init` is given.
    #[arg(long)]
    pub n: Option<usize>,

    #[arg(long, default_value = "zero")]
    pub boundary: String,

    /// Initial configuration, e.g. `zero:1,1,0,1,1`.
    #[arg(long)]
    pub init: Option<String>,

    #[arg(long, default_value_t = 1000.0)]
    pub horizon: f64,

    #[arg(long, default_value_t = 1)]
    pub replicas: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, default_value = "poisson")]
    pub engine: String,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "kebab-case")]
pub enum Command {
    /// Simulate trajectories and export height snapshots.
    Simulate {
        #[command(flatten)]
        #[serde(flatten)]
        run: RunArgs,
        /// Number of evenly spaced snapshots.
        #[arg(long, default_value_t = 10)]
        snapshots: usize,
    },
    /// Drive several processes from shared randomness.
    Couple {
        /// Participants as `BETA@CONFIG`, e.g. `1,2,3@zero:0,0,0`.
        #[arg(required = true)]
        participants: Vec<String>,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, default_value_t = 10)]
        snapshots: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Estimate per-site speeds over independent replicas.
    Speed {
        #[command(flatten)]
        #[serde(flatten)]
        run: RunArgs,
    },
    /// Fit the exponential tail of one shape coordinate.
    Tail {
        #[command(flatten)]
        #[serde(flatten)]
        run: RunArgs,
        /// Shape coordinate `h_i = x(i) - x(i+1)`, 1-based.
        #[arg(long, default_value_t = 1)]
        coord: usize,
        /// Observation times; defaults to `T/4,T/2,T`.
        #[arg(long)]
        horizons: Option<String>,
        #[arg(long, default_value = "0:20")]
        kgrid: String,
    },
    /// Classify endpoint speeds against a comb set.
    Comb {
        #[command(flatten)]
        #[serde(flatten)]
        run: RunArgs,
        /// e1, e2 or e3; inferred from the rates if omitted.
        #[arg(long)]
        case: Option<String>,
        /// Per-coordinate tolerance; defaults to `0.05 * max(beta)`.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Estimate the threshold speed of the auxiliary process `(B0,B1,B1)`.
    Dtilde {
        /// Rates; only `B0` and `B1` are used.
        #[arg(long)]
        beta: String,
        #[arg(long)]
        n: usize,
        /// Candidate speeds; defaults to `B0..=B1` in steps of `--dstep`.
        #[arg(long)]
        dgrid: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        dstep: f64,
        #[arg(long, default_value = "100,400,1600")]
        horizons: String,
        #[arg(long, default_value_t = 400)]
        replicas: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "poisson")]
        engine: String,
    },
    /// Closed forms, comb sets and truncated stationary solves.
    Exact(ExactArgs),
    /// Evaluate every known ergodicity and transience criterion.
    Verdict {
        #[arg(long)]
        beta: String,
        #[arg(long)]
        n: usize,
    },
    /// Scan the (B1, B2) plane at B0 = 1.
    Sweep {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta1_grid: String,
        #[arg(long)]
        beta2_grid: String,
        #[arg(long, default_value_t = 1000.0)]
        horizon: f64,
        #[arg(long, default_value_t = 8)]
        replicas: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "poisson")]
        engine: String,
        /// Skip recurrence statistics.
        #[arg(long)]
        #[serde(default)]
        no_recurrence: bool,
        /// Also fit the tail of the first shape coordinate.
        #[arg(long)]
        #[serde(default)]
        tail: bool,
        #[arg(long, default_value_t = 5)]
        box_radius: i64,
        #[arg(long, default_value_t = 20)]
        tail_kmax: u64,
    },
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ExactArgs {
    /// Rates `B0,B1,B2`; zeros are allowed where a formula ignores the entry.
    #[arg(long)]
    pub beta: String,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Two-site speed from `B0, B1`.
    #[arg(long)]
    #[serde(default)]
    pub v2: bool,
    /// Two-site speed under the infinite condition, from `B1, B2`.
    #[arg(long)]
    #[serde(default)]
    pub v2inf: bool,
    /// Two-site stationary probabilities at the listed shape values.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Solve the truncated stationary law (n = 2 or 3).
    #[arg(long)]
    #[serde(default)]
    pub stationary: bool,
    #[arg(long, default_value_t = 30)]
    pub truncation: usize,
    #[arg(long, default_value_t = crystal_core::exact::DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Enumerate a comb set (e1, e2, e3) of length n.
    #[arg(long)]
    pub comb_set: Option<String>,
    /// Rate threshold beyond which the three-site speed exceeds `B2` for this epsilon.
    #[arg(long)]
    pub vitesse: Option<f64>,
    /// The transience bound B from `B0, B2`.
    #[arg(long)]
    #[serde(default)]
    pub bound: bool,
}

impl Command {
    fn seed(&self) -> u64 {
        match self {
            Command::Simulate { run, .. }
            | Command::Speed { run }
            | Command::Tail { run, .. }
            | Command::Comb { run, .. } => run.seed,
            Command::Couple { seed, .. } | Command::Dtilde { seed, .. } | Command::Sweep { seed, .. } => {
                *seed
            }
            Command::Exact(_) | Command::Verdict { .. } => 0,
        }
    }
}

/// Written as `manifest.json` next to the outputs.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub tool_version: String,
    pub outputs: Vec<PathBuf>,
}

/// Collects output files under the `--out` directory.
pub struct Outputs {
    dir: Option<PathBuf>,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Creates `name` under the output directory and hands it to `write`.
    /// Does nothing without an output directory.
    pub fn file<F>(&mut self, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(std::io::BufWriter<std::fs::File>) -> Result<()>,
    {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(name);
        write(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
        self.files.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.file(name, |mut w| {
            serde_json::to_writer_pretty(&mut w, value)?;
            use std::io::Write;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Records a file written by library code.
    pub fn record(&mut self, path: PathBuf) {
        self.files.push(path);
    }
}

fn load_config(name: &str, path: &Path) -> Result<Command> {
    let text = std::fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)?;
    let config = match value.get("command") {
        Some(Value::String(c)) if c != name => {
            return Err(Error::Precondition(format!("config file is a '{c}' manifest, not '{name}'")))
        }
        Some(_) => value
            .get("config")
            .cloned()
            .ok_or_else(|| Error::Parse("manifest has no 'config' object".into()))?,
        None => value,
    };
    Ok(serde_json::from_value(json!({ "command": name, "config": config }))?)
}

/// `crystal <command> --config FILE [--out DIR] [--threads K]`.
#[derive(Parser, Debug)]
#[command(name = "crystal")]
struct Replay {
    command: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_args() -> std::result::Result<(Command, Global), clap::Error> {
    let argv: Vec<String> = std::env::args().collect();
    if argv.iter().any(|a| a == "--config" || a.starts_with("--config=")) {
        let r = Replay::try_parse_from(&argv)?;
        let global = Global { out: r.out, threads: r.threads, config: Some(r.config) };
        let cmd = load_config(&r.command, global.config.as_deref().unwrap())
            .map_err(|e| clap::Error::raw(clap::error::ErrorKind::InvalidValue, e.to_string()))?;
        return Ok((cmd, global));
    }
    let cli = Cli::try_parse_from(&argv)?;
    Ok((cli.command, cli.global))
}

fn run(cmd: Command, global: Global) -> Result<()> {
    if let Some(k) = global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    }
    let mut out = Outputs::new(global.out)?;
    let tagged = serde_json::to_value(&cmd)?;
    commands::dispatch(&cmd, &mut out)?;
    if out.dir.is_some() {
        let manifest = Manifest {
            command: tagged["command"].as_str().unwrap_or_default().to_string(),
            config: tagged["config"].clone(),
            seed: cmd.seed(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: out.files.clone(),
        };
        out.json("manifest.json", &manifest)?;
    }
    Ok(())
}

fn fail(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": kind, "message": message }));
}

fn main() -> ExitCode {
    let (cmd, global) = match parse_args() {
        Ok(v) => v,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            fail("usage", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    match run(cmd, global) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            fail(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}
