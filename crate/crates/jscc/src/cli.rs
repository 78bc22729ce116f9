//! Command-line front end: flag parsing, subcommand dispatch, output files.
//!
//! Flag precedence is flags > config file > defaults. All output paths are
//! written atomically enough for our purposes (single create + write), and
//! `runtime_ms` stays 0 unless `--timing` is passed, so that equal seeds
//! give byte-identical files.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::algebra::substream;
use crate::codes::{alpha_of_ensemble, goodness, CodeEnsemble};
use crate::config::{load_config, ResolvedConfig};
use crate::error::{Error, Result, DEFAULT_BUDGET};
use crate::experiments::{self, preset, run_bound, run_point, RunOptions, PRESET_NAMES};
use crate::spectra::function_spectrum_exact;

#[derive(Parser)]
#[command(name = "jscc", version, about = "Lossless joint source-channel coding with linear codes: exact spectra, error bounds, and Monte Carlo experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact joint input/output type spectrum of the configured code
    Spectrum(Common),
    /// Exact alpha table (spectrum ratio) of the configured code ensemble
    Alpha(Common),
    /// Goodness metric: max alpha off the zero type and its normalized log
    Goodness(Common),
    /// Monte Carlo error estimation with both decoders, plus the exact bound
    Simulate(Common),
    /// Exact evaluation of the two-term error bound only
    Bound(Common),
    /// Grid sweep over gamma / channel parameter / (l, m)
    Sweep(Common),
    /// List the built-in experiment presets
    PresetList,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file (JSON)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in configuration by name (alternative to --config)
    #[arg(long, value_name = "NAME", conflicts_with = "config")]
    preset: Option<String>,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config trial count
    #[arg(long)]
    trials: Option<u64>,
    /// Output file (default: stdout)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads for simulation (0 = automatic)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Maximum number of states any exact enumeration may visit
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Suppress progress notes on stderr
    #[arg(long)]
    quiet: bool,
    /// Record measured runtimes in the runtime_ms column (breaks
    /// byte-identical reproducibility of output files)
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn load(&self) -> Result<ResolvedConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), None) => load_config(path)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => {
                return Err(Error::Usage("either --config or --preset is required".into()))
            }
            (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        Ok(cfg)
    }

    fn write_output(&self, bytes: &[u8]) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, bytes)?,
            None => std::io::stdout().write_all(bytes)?,
        }
        Ok(())
    }

    fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are successful outcomes; real parse errors are not
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("jscc: {}", e.to_string().replace('\n', "; "));
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::PresetList => {
            let mut out = String::new();
            for (name, about) in PRESET_NAMES {
                out.push_str(&format!("{name}\t{about}\n"));
            }
            print!("{out}");
            Ok(())
        }
        Cmd::Spectrum(c) => {
            let cfg = c.load()?;
            let ensemble = cfg.build_ensemble()?;
            let code = match &ensemble {
                // a random ensemble is represented by one seeded sample
                CodeEnsemble::UniformMatrix { .. } => ensemble.sample(&mut substream(cfg.seed, 0)),
                CodeEnsemble::Explicit(support) => support[0].0.clone(),
            };
            let spec = function_spectrum_exact(
                |x| code.encode(x).expect("input shape fixed by enumeration"),
                cfg.n,
                cfg.q,
                c.budget,
            )?;
            let mut buf = Vec::new();
            match c.format {
                Format::Csv => spec.write_csv(&mut buf)?,
                Format::Json => write_joint_json(&spec, &mut buf)?,
            }
            c.write_output(&buf)
        }
        Cmd::Alpha(c) => {
            let cfg = c.load()?;
            let table = alpha_of_ensemble(&cfg.build_ensemble()?, c.budget)?;
            let mut buf = Vec::new();
            match c.format {
                Format::Csv => table.write_csv(&mut buf)?,
                Format::Json => write_alpha_json(&table, &mut buf)?,
            }
            c.write_output(&buf)
        }
        Cmd::Goodness(c) => {
            let cfg = c.load()?;
            let (max_alpha, log_rate) = goodness(&cfg.build_ensemble()?, c.budget)?;
            let mut buf = Vec::new();
            match c.format {
                Format::Csv => {
                    writeln!(buf, "max_alpha_num,max_alpha_den,log_rate")?;
                    writeln!(buf, "{},{},{}", max_alpha.numer(), max_alpha.denom(), log_rate)?;
                }
                Format::Json => {
                    let v = serde_json::json!({
                        "max_alpha_num": max_alpha.numer().to_string(),
                        "max_alpha_den": max_alpha.denom().to_string(),
                        "log_rate": log_rate,
                    });
                    writeln!(buf, "{}", serde_json::to_string_pretty(&v).unwrap())?;
                }
            }
            c.write_output(&buf)
        }
        Cmd::Simulate(c) => {
            let cfg = c.load()?;
            let opts = RunOptions { budget: c.budget, threads: c.threads, timing: c.timing };
            c.note(&format!("simulating {} trials with seed {}", cfg.trials, cfg.seed));
            let row = run_point(&cfg, &opts)?;
            write_rows(&c, &[row])
        }
        Cmd::Bound(c) => {
            let cfg = c.load()?;
            let opts = RunOptions { budget: c.budget, threads: c.threads, timing: c.timing };
            let row = run_bound(&cfg, &opts)?;
            write_rows(&c, &[row])
        }
        Cmd::Sweep(c) => {
            let cfg = c.load()?;
            let opts = RunOptions { budget: c.budget, threads: c.threads, timing: c.timing };
            let rows = experiments::sweep(&cfg, &opts);
            c.note(&format!("sweep finished: {} grid points", rows.len()));
            write_rows(&c, &rows)
        }
    }
}

fn write_rows(c: &Common, rows: &[experiments::ResultRow]) -> Result<()> {
    let mut buf = Vec::new();
    match c.format {
        Format::Csv => experiments::write_rows_csv(rows, &mut buf)?,
        Format::Json => experiments::write_rows_json(rows, &mut buf)?,
    }
    c.write_output(&buf)
}

fn write_joint_json<W: Write>(spec: &crate::spectra::JointSpectrum, w: &mut W) -> Result<()> {
    let items: Vec<serde_json::Value> = spec
        .iter()
        .map(|((p, q), m)| {
            serde_json::json!({
                "type_in": p.render(),
                "type_out": q.render(),
                "mass_num": m.numer().to_string(),
                "mass_den": m.denom().to_string(),
            })
        })
        .collect();
    writeln!(w, "{}", serde_json::to_string_pretty(&items).unwrap())?;
    Ok(())
}

fn write_alpha_json<W: Write>(table: &crate::codes::AlphaTable, w: &mut W) -> Result<()> {
    let items: Vec<serde_json::Value> = table
        .iter()
        .map(|((p, q), a)| {
            serde_json::json!({
                "type_in": p.render(),
                "type_out": q.render(),
                "alpha_num": a.numer().to_string(),
                "alpha_den": a.denom().to_string(),
            })
        })
        .collect();
    writeln!(w, "{}", serde_json::to_string_pretty(&items).unwrap())?;
    Ok(())
}
