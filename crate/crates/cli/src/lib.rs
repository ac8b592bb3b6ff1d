//! Command-line driver: reads a run configuration, dispatches to an engine
//! and writes CSV tables plus a JSON manifest.

pub mod commands;
pub mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub use config::Config;

/// Environment variable overriding the configured output directory.
pub const OUT_DIR_ENV: &str = "PDLAB_OUT_DIR";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(pdlab::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical abort: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<pdlab::Error> for CliError {
    fn from(e: pdlab::Error) -> Self {
        match e {
            pdlab::Error::InvalidParams(_) | pdlab::Error::DimensionTooLarge { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Files and summary values produced by one command.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub engine: String,
    pub seed: Option<u64>,
    /// `(file name, contents)` in write order.
    pub files: Vec<(String, Vec<u8>)>,
    pub results: Map<String, Value>,
}

impl RunOutput {
    pub fn new(engine: &str) -> Self {
        Self { engine: engine.to_string(), ..Default::default() }
    }

    pub fn add_file(&mut self, name: String, contents: Vec<u8>) {
        self.files.push((name, contents));
    }

    pub fn result(&mut self, key: &str, v: Value) {
        self.results.insert(key.to_string(), v);
    }
}

/// Where outputs go: explicit flag, then the environment, then the config.
pub fn resolve_out_dir(flag: Option<&Path>, cfg: &Config) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Ok(p) = std::env::var(OUT_DIR_ENV) {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    PathBuf::from(cfg.str_or("out", "."))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the configured command with `workers` threads (0 = all cores) and
/// writes its files plus `<name>.manifest.json` into `out_dir`. Returns the
/// manifest path.
pub fn execute(cfg: &Config, out_flag: Option<&Path>, workers: Option<usize>) -> Result<PathBuf, CliError> {
    let start = Instant::now();
    let command = cfg.command()?;
    let allowed = commands::allowed_keys(&command)
        .ok_or_else(|| CliError::Config(format!("unknown command `{command}`")))?;
    cfg.check_keys(&command, &allowed)?;
    let out_dir = resolve_out_dir(out_flag, cfg);
    let name = cfg.str_or("name", &command);
    let workers = match workers {
        Some(w) => w,
        None => cfg.usize_or("workers", 0)?,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    let output = pool.install(|| commands::dispatch(&command, cfg, &name))?;

    fs::create_dir_all(&out_dir)?;
    let mut digests = Vec::new();
    for (file, contents) in &output.files {
        fs::write(out_dir.join(file), contents)?;
        digests.push(json!({ "file": file, "sha256": sha256_hex(contents) }));
    }
    let manifest = json!({
        "command": command,
        "engine": output.engine,
        "parameters": cfg.resolved(),
        "seed": output.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "workers": pool.current_num_threads(),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
        "outputs": digests,
        "results": output.results,
    });
    let path = out_dir.join(format!("{name}.manifest.json"));
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(&path, text + "\n")?;
    Ok(path)
}
