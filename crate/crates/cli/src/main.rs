//! `gauge-lattice`: runs a scenario from a JSON config or a named preset and
//! writes its CSV/JSON artifacts plus a checksummed run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use gauge_lattice::scenario::{self, ScenarioConfig, TASKS};
use gauge_lattice::Execution;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "gauge-lattice", version, about = "Synthetic gauge field lattice scenarios")]
struct Args {
    /// spectrum | pump-sweep | evolve | invariant | sweep, or `presets` to
    /// list the preset catalog
    task: String,
    /// Scenario config (JSON). Merged over the preset when both are given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Output directory [default: output.dir of the config, else ./out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; 1 runs sequentially
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<gauge_lattice::Error> for CliError {
    fn from(e: gauge_lattice::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Serialize)]
struct OutputEntry {
    name: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    preset: Option<String>,
    task: String,
    seed: u64,
    workers: Option<usize>,
    wall_time_s: f64,
    config: ScenarioConfig,
    outputs: Vec<OutputEntry>,
}

/// Recursive object merge; `patch` wins on scalars and arrays.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn load_config(args: &Args) -> Result<ScenarioConfig, CliError> {
    let mut value = match &args.preset {
        Some(name) => serde_json::to_value(scenario::preset(name)?).expect("config serializes"),
        None => Value::Object(Map::new()),
    };
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let patch: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if !patch.is_object() {
            return Err(CliError::Config(format!("{}: config must be a JSON object", path.display())));
        }
        merge(&mut value, patch);
    }
    if args.preset.is_none() && args.config.is_none() {
        return Err(CliError::Config("either --config or --preset is required".into()));
    }
    if let Some(obj) = value.as_object_mut() {
        obj.insert("task".into(), json!(args.task));
        if let Some(seed) = args.seed {
            obj.insert("seed".into(), json!(seed));
        }
    }
    let mut cfg: ScenarioConfig = serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(out) = &args.out {
        cfg.output.dir = Some(out.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execution(workers: Option<usize>) -> Result<Execution, CliError> {
    match workers {
        Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
        Some(1) => Ok(Execution::Sequential),
        _ => Ok(Execution::Parallel),
    }
}

fn run(args: &Args) -> Result<(), CliError> {
    if args.task == "presets" {
        for p in scenario::presets() {
            println!("{:<28} {:>5.0} s  {}", p.name, p.budget_s, p.description);
        }
        return Ok(());
    }
    if !TASKS.contains(&args.task.as_str()) {
        return Err(CliError::Config(format!(
            "unknown task `{}`; registered tasks: {}",
            args.task,
            TASKS.join(", ")
        )));
    }
    let cfg = load_config(args)?;
    let exec = execution(args.workers)?;
    let out_dir = PathBuf::from(cfg.output.dir.clone().unwrap_or_else(|| "out".into()));

    let start = Instant::now();
    let output = match (args.workers, exec) {
        (Some(n), Execution::Parallel) if cfg!(feature = "parallel") => {
            #[cfg(feature = "parallel")]
            {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| CliError::Config(format!("--workers: {e}")))?;
                pool.install(|| scenario::run_scenario(&cfg, exec))?
            }
            #[cfg(not(feature = "parallel"))]
            {
                let _ = n;
                unreachable!()
            }
        }
        _ => scenario::run_scenario(&cfg, exec)?,
    };
    let wall_time_s = start.elapsed().as_secs_f64();

    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let manifest_path = out_dir.join("manifest.json");
    // A manifest marks a complete run; drop any stale one before writing.
    match fs::remove_file(&manifest_path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(io_err(&manifest_path)(e)),
        _ => {}
    }
    let mut outputs = Vec::new();
    for a in &output.artifacts {
        let path = out_dir.join(&a.name);
        fs::write(&path, &a.bytes).map_err(io_err(&path))?;
        outputs.push(OutputEntry {
            name: a.name.clone(),
            bytes: a.bytes.len(),
            sha256: format!("{:x}", Sha256::digest(&a.bytes)),
        });
    }
    let manifest = RunManifest {
        tool: "gauge-lattice",
        version: env!("CARGO_PKG_VERSION"),
        preset: args.preset.clone(),
        task: cfg.task.clone(),
        seed: cfg.seed,
        workers: args.workers,
        wall_time_s,
        config: cfg,
        outputs,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    let tmp = out_dir.join(".manifest.json.tmp");
    fs::write(&tmp, &bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, &manifest_path).map_err(io_err(&manifest_path))?;
    eprintln!(
        "wrote {} files to {} in {wall_time_s:.2} s",
        manifest.outputs.len() + 1,
        out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
