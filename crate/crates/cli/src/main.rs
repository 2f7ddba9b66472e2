//! `gstore`: command-line access to the model constants, samplers,
//! Monte Carlo experiments and suites.
//!
//! Exit codes: 0 on success, 2 on usage or domain errors, 1 on numeric
//! failures (with a JSON diagnostic on stderr).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use gstore::config::{JobSpec, ModelSpec, Setup, SuiteConfig};
use gstore::criterion::{classify, BoundaryFunction, ClassifyOptions, DEFAULT_T_MAX};
use gstore::experiments::{constants_report, run_job, run_suite};
use gstore::io::{csv_table, encode_gsp1, to_json, write_atomic, CsvRow};
use gstore::pickands::{estimate_rate, Eta};
use gstore::queue::stationary_queue;
use gstore::sampling::{sample_path, GridSpec, SeedRecord};
use gstore::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "gstore", version, about = "Reflected Gaussian storage processes: constants, simulation, tail experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML file with defaults; every key mirrors a flag, flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    model: Option<ModelKind>,
    /// Hurst index of the fbm model.
    #[arg(long, global = true)]
    hurst: Option<f64>,
    /// Exponent a of the srd correlation exp(-t^a).
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Two-column (t, variance) file for the tabulated model.
    #[arg(long, global = true)]
    table: Option<PathBuf>,
    /// Drift c > 0.
    #[arg(long, global = true)]
    c: Option<f64>,
    /// Pickands constant of the local process, when it is not known in closed form.
    #[arg(long, global = true)]
    pickands: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Extra outputs; `plot-data` writes two-column gnuplot files.
    #[arg(long, global = true, value_enum)]
    emit: Option<Emit>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum ModelKind {
    Fbm,
    Srd,
    Tabulated,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum Emit {
    PlotData,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum PathFormat {
    Csv,
    Gsp1,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the asymptotic constants of a (model, c) pair as JSON.
    Constants,
    /// Simulate one input path (and optionally its queue) on a uniform grid.
    Sample {
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: PathFormat,
        /// Write the stationary queue instead of the input path.
        #[arg(long)]
        queue: bool,
    },
    /// Estimate psi(u) = P(sup over [0,u] of Q > u).
    Psi {
        #[arg(long, value_delimiter = ',')]
        u: Vec<f64>,
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        burn_in: Option<f64>,
        #[arg(long)]
        no_control: bool,
    },
    /// Full / strip / discrete exceedances of the standardized field.
    Strip {
        #[arg(long)]
        u: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        thetas: Vec<f64>,
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Estimate the Pickands rate constant by a window ladder.
    Pickands {
        #[arg(long, value_delimiter = ',')]
        windows: Vec<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        replicas: Option<u64>,
        /// Use fBm with this index instead of the model's local process.
        #[arg(long)]
        eta_index: Option<f64>,
    },
    /// Classify boundaries by the integral test.
    Criterion {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        p: Vec<f64>,
        /// Classify inverse-m(sqrt(scale * log t)) instead of f_p.
        #[arg(long)]
        level_root: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        t_start: Option<f64>,
    },
    /// Erdos-Revesz statistics along simulated trajectories.
    ErdosRevesz {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        t0: Option<f64>,
    },
    /// Normalized running maxima against the limsup constant.
    Limsup {
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        t0: Option<f64>,
    },
    /// Run a declarative suite file.
    Suite {
        file: PathBuf,
    },
}

/// Keys accepted in `--config`; one per flag.
#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    schema_version: Option<u32>,
    seed: Option<u64>,
    workers: Option<usize>,
    output_dir: Option<PathBuf>,
    c: Option<f64>,
    pickands: Option<f64>,
    model: Option<ModelSpec>,
    emit_plot_data: Option<bool>,
    u: Option<Vec<f64>>,
    replicas: Option<u64>,
    horizon: Option<f64>,
    step: Option<f64>,
    delta: Option<f64>,
    burn_in: Option<f64>,
    thetas: Option<Vec<f64>>,
    windows: Option<Vec<f64>>,
    theta: Option<f64>,
    p: Option<Vec<f64>>,
    t0: Option<f64>,
    t_max: Option<f64>,
    t_start: Option<f64>,
}

fn load_file(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: FileConfig = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(v) = cfg.schema_version {
        if v != gstore::config::SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema_version {v}")));
        }
    }
    Ok(cfg)
}

fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(|ch: char| ch.is_whitespace() || ch == ',').filter(|s| !s.is_empty()).collect();
        let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("{}:{}: not a number: {s}", path.display(), i + 1)));
        if cols.len() != 2 {
            return Err(Error::Config(format!("{}:{}: expected two columns", path.display(), i + 1)));
        }
        t.push(parse(cols[0])?);
        v.push(parse(cols[1])?);
    }
    Ok((t, v))
}

/// Resolved settings shared by all subcommands.
struct Ctx {
    file: FileConfig,
    seed: u64,
    workers: usize,
    output_dir: PathBuf,
    plot: bool,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self> {
        let file = load_file(common.config.as_deref())?;
        let workers = common.workers.or(file.workers).unwrap_or(1);
        if workers == 0 {
            return Err(Error::Parameter("workers must be at least 1".into()));
        }
        Ok(Ctx {
            seed: common.seed.or(file.seed).unwrap_or(0),
            workers,
            output_dir: common.output_dir.clone().or(file.output_dir.clone()).unwrap_or_else(|| PathBuf::from("gstore-out")),
            plot: common.emit == Some(Emit::PlotData) || file.emit_plot_data.unwrap_or(false),
            file,
        })
    }

    fn setup(&self, common: &Common) -> Result<Setup> {
        let spec = match common.model {
            Some(ModelKind::Fbm) => ModelSpec::Fbm {
                hurst: common.hurst.ok_or_else(|| Error::Parameter("--model fbm needs --hurst".into()))?,
            },
            Some(ModelKind::Srd) => ModelSpec::Srd { a: common.a.unwrap_or(1.0) },
            Some(ModelKind::Tabulated) => {
                let path = common.table.as_ref().ok_or_else(|| Error::Parameter("--model tabulated needs --table".into()))?;
                let (times, values) = read_table(path)?;
                ModelSpec::Tabulated { times, values, exponents: None }
            }
            None => match (&self.file.model, common.hurst) {
                (_, Some(h)) => ModelSpec::Fbm { hurst: h },
                (Some(m), None) => m.clone(),
                (None, None) => return Err(Error::Parameter("no model given (use --model or a config file)".into())),
            },
        };
        let c = common.c.or(self.file.c).ok_or_else(|| Error::Parameter("drift --c is required".into()))?;
        Setup::new(spec, c, common.pickands.or(self.file.pickands))
    }

    fn write(&self, name: &str, ext: &str, body: &[u8]) -> Result<PathBuf> {
        let path = self.output_dir.join(format!("{name}.{ext}"));
        write_atomic(&path, body)?;
        Ok(path)
    }
}

fn need<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Parameter(format!("missing required parameter {what}")))
}

fn list(flag: Vec<f64>, file: &Option<Vec<f64>>) -> Option<Vec<f64>> {
    if flag.is_empty() {
        file.clone()
    } else {
        Some(flag)
    }
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::new(&cli.common)?;
    let f = &ctx.file;
    let job = match cli.command {
        Command::Constants => {
            let setup = ctx.setup(&cli.common)?;
            let report = constants_report(&setup);
            let json = to_json(&report.constants)?;
            print!("{json}");
            if cli.common.output_dir.is_some() || f.output_dir.is_some() {
                ctx.write("constants", "json", to_json(&report)?.as_bytes())?;
            }
            return Ok(());
        }
        Command::Sample { horizon, step, format, queue } => {
            let setup = ctx.setup(&cli.common)?;
            let horizon = need(horizon.or(f.horizon), "--horizon")?;
            let step = need(step.or(f.step), "--step")?;
            if !(horizon > 0.0) || !(step > 0.0) {
                return Err(Error::Parameter("horizon and step must be positive".into()));
            }
            let seed = SeedRecord { master: ctx.seed, stream: 0 };
            let (grid, values, name) = if queue {
                let q = stationary_queue(&setup.model, setup.c, horizon, step, seed, f.burn_in)?;
                (q.grid, q.values, "queue")
            } else {
                let count = (horizon / step).floor() as usize + 1;
                let p = sample_path(&setup.model, GridSpec::new(step, count, 0.0)?, seed)?;
                (p.grid, p.values, "path")
            };
            let path = match format {
                PathFormat::Gsp1 => ctx.write(name, "gsp1", &encode_gsp1(&grid, &values))?,
                PathFormat::Csv => {
                    let mut s = String::from("t,value\n");
                    for (k, v) in values.iter().enumerate() {
                        s.push_str(&format!("{},{}\n", gstore::io::fmt_f64(grid.time(k)), gstore::io::fmt_f64(*v)));
                    }
                    ctx.write(name, "csv", s.as_bytes())?
                }
            };
            println!("{name}: {} points with step {step} -> {}", values.len(), path.display());
            return Ok(());
        }
        Command::Psi { u, replicas, delta, burn_in, no_control } => JobSpec::Psi {
            name: "psi".into(),
            u: need(list(u, &f.u), "--u")?,
            replicas: need(replicas.or(f.replicas), "--replicas")?,
            delta: delta.or(f.delta),
            burn_in: burn_in.or(f.burn_in),
            half_step_control: !no_control,
        },
        Command::Strip { u, horizon, thetas, replicas, delta } => JobSpec::Strip {
            name: "strip".into(),
            u: need(u.or(f.u.as_ref().and_then(|v| v.first().copied())), "--u")?,
            horizon: horizon.or(f.horizon).unwrap_or(1.0),
            thetas: need(list(thetas, &f.thetas), "--thetas")?,
            replicas: need(replicas.or(f.replicas), "--replicas")?,
            delta: delta.or(f.delta),
        },
        Command::Pickands { windows, theta, replicas, eta_index } => {
            let windows = need(list(windows, &f.windows), "--windows")?;
            let theta = theta.or(f.theta).unwrap_or(0.0);
            let replicas = need(replicas.or(f.replicas), "--replicas")?;
            if let Some(index) = eta_index {
                let r = estimate_rate(&Eta::fbm(index)?, &windows, theta, replicas, ctx.seed, ctx.workers)?;
                let mut rows: Vec<CsvRow> =
                    r.ladder.iter().map(|l| CsvRow::new("pickands", "S", l.window, "window", l.value, Some(l.stderr))).collect();
                rows.push(CsvRow::new("pickands", "theta", theta, "rate", r.extrapolated.value, Some(r.stderr)));
                ctx.write("pickands", "json", to_json(&r)?.as_bytes())?;
                ctx.write("pickands", "csv", csv_table(&rows).as_bytes())?;
                println!("pickands (fbm index {index}): rate = {} +- {}", r.extrapolated.value, r.stderr);
                return Ok(());
            }
            JobSpec::Pickands { name: "pickands".into(), windows, theta, replicas }
        }
        Command::Criterion { p, level_root, t_max, t_start } => {
            if let Some(scale) = level_root {
                let setup = ctx.setup(&cli.common)?;
                let opts = ClassifyOptions {
                    t_max: t_max.or(f.t_max).unwrap_or(DEFAULT_T_MAX),
                    t_start: t_start.or(f.t_start),
                    ..Default::default()
                };
                let v = classify(&setup.asym, &BoundaryFunction::LevelRoot { scale }, &opts)?;
                ctx.write("criterion", "json", to_json(&v)?.as_bytes())?;
                println!("{}: {:?} (tail exponent {:.4})", v.boundary, v.classification, v.tail_exponent);
                return Ok(());
            }
            JobSpec::Criterion { name: "criterion".into(), p: need(list(p, &f.p), "--p")?, t_max: t_max.or(f.t_max) }
        }
        Command::ErdosRevesz { p, horizon, replicas, delta, t0 } => JobSpec::ErdosRevesz {
            name: "erdos-revesz".into(),
            p: need(p.or(f.p.as_ref().and_then(|v| v.first().copied())), "--p")?,
            horizon: need(horizon.or(f.horizon), "--horizon")?,
            replicas: need(replicas.or(f.replicas), "--replicas")?,
            delta: delta.or(f.delta),
            t0: t0.or(f.t0),
        },
        Command::Limsup { horizon, replicas, delta, t0 } => JobSpec::Limsup {
            name: "limsup".into(),
            horizon: need(horizon.or(f.horizon), "--horizon")?,
            replicas: need(replicas.or(f.replicas), "--replicas")?,
            delta: delta.or(f.delta),
            t0: t0.or(f.t0),
        },
        Command::Suite { file } => {
            let mut cfg = SuiteConfig::load(&file)?;
            if let Some(w) = cli.common.workers {
                cfg.workers = w;
            }
            if let Some(s) = cli.common.seed {
                cfg.seed = s;
            }
            if let Some(d) = &cli.common.output_dir {
                cfg.output_dir = d.clone();
            }
            if cli.common.emit == Some(Emit::PlotData) {
                cfg.emit_plot_data = true;
            }
            cfg.validate()?;
            let out = run_suite(&cfg)?;
            for line in &out.summary {
                println!("{line}");
            }
            println!("manifest: {}", cfg.output_dir.join(gstore::experiments::MANIFEST_FILE).display());
            if !out.manifest.complete {
                let failed: Vec<&str> = out
                    .manifest
                    .jobs
                    .iter()
                    .filter(|j| j.error.is_some())
                    .map(|j| j.name.as_str())
                    .collect();
                return Err(Error::Numeric(format!("jobs failed: {}", failed.join(", "))));
            }
            return Ok(());
        }
    };
    let setup = ctx.setup(&cli.common)?;
    let out = run_job(&setup, &job, ctx.seed, ctx.workers)?;
    let name = job.name();
    ctx.write(name, "json", out.json.as_bytes())?;
    ctx.write(name, "csv", out.csv.as_bytes())?;
    if ctx.plot {
        if let Some(p) = &out.plot {
            ctx.write(name, "dat", p.as_bytes())?;
        }
    }
    println!("{}", out.summary);
    println!("outputs: {}", ctx.output_dir.join(format!("{name}.{{json,csv}}")).display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_usage() => {
            eprintln!("gstore: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            let diag = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{diag}");
            ExitCode::from(1)
        }
    }
}
