//! `gravdec`: configuration-driven runs of the reduction-rate, decoherence,
//! Schrödinger–Newton and center-of-mass tools.
//!
//! Every run writes `manifest.txt` (the fully resolved configuration) and
//! `summary.json` into the output directory, plus command-specific CSV files.
//! Failures write `error.json` there instead and exit with a nonzero code:
//! 2 usage, 3 invalid parameter, 4 non-convergence, 5 i/o, 6 selftest failure.

/// Status output that tolerates a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Command;
use crate::config::{Layer, RunConfig, OUTPUT_DIR_ENV};
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Parser, Debug)]
#[command(name = "gravdec", version, about = "Gravitational decoherence and Schrödinger–Newton toolkit")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; overrides the configuration and GRAVDEC_OUTPUT_DIR.
    #[arg(long, global = true, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Reduction energy and time for a displaced uniform cube.
    DpRate(DpArgs),
    /// Stochastic two-branch decoherence against the master equation.
    Decohere(DecohereArgs),
    /// Schrödinger–Newton solvers.
    Sn {
        #[command(subcommand)]
        command: SnCmd,
    },
    /// Center-of-mass decoupling of a two-particle interference run.
    ComTest(ComArgs),
    /// Run the acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Subcommand, Debug)]
enum SnCmd {
    GroundState(GroundArgs),
    Evolve(EvolveArgs),
}

#[derive(Args, Debug)]
struct DpArgs {
    /// `mirror` or `none`.
    #[arg(long, allow_hyphen_values = true)]
    preset: Option<String>,
    /// Cube side, e.g. `1e-3 cm`.
    #[arg(long, allow_hyphen_values = true)]
    side: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mass: Option<String>,
    /// Displacement, e.g. `1e-11 cm`.
    #[arg(long, allow_hyphen_values = true)]
    d: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    axis: Option<String>,
    /// quadratic, surface, voxel or mc.
    #[arg(long, allow_hyphen_values = true)]
    method: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    cells: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    samples: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    /// penrose or diosi.
    #[arg(long, allow_hyphen_values = true)]
    convention: Option<String>,
}

#[derive(Args, Debug)]
struct DecohereArgs {
    #[arg(long, allow_hyphen_values = true)]
    tau_d: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_final: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    trajectories: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
}

#[derive(Args, Debug)]
struct GroundArgs {
    /// imaginary-time or radial-shooting.
    #[arg(long, allow_hyphen_values = true)]
    method: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mass: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    n: Option<String>,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    steps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mass: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    n: Option<String>,
}

#[derive(Args, Debug)]
struct ComArgs {
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps_cells: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    /// relative or external.
    #[arg(long, allow_hyphen_values = true)]
    potential: Option<String>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Run only these criteria, e.g. `--criteria 1,2`.
    #[arg(long, allow_hyphen_values = true)]
    criteria: Option<String>,
}

fn flag_layer(entries: &[(&str, &Option<String>)]) -> Layer {
    let entries = entries
        .iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect();
    Layer::new("command-line flag", entries)
}

impl Cmd {
    fn resolve(&self) -> (Command, Layer) {
        match self {
            Cmd::DpRate(a) => (
                Command::DpRate,
                flag_layer(&[
                    ("dp.preset", &a.preset),
                    ("dp.side", &a.side),
                    ("dp.mass", &a.mass),
                    ("dp.d", &a.d),
                    ("dp.axis", &a.axis),
                    ("dp.method", &a.method),
                    ("dp.cells", &a.cells),
                    ("dp.samples", &a.samples),
                    ("dp.seed", &a.seed),
                    ("dp.convention", &a.convention),
                ]),
            ),
            Cmd::Decohere(a) => (
                Command::Decohere,
                flag_layer(&[
                    ("decohere.tau_d", &a.tau_d),
                    ("decohere.dt", &a.dt),
                    ("decohere.t_final", &a.t_final),
                    ("decohere.trajectories", &a.trajectories),
                    ("decohere.seed", &a.seed),
                ]),
            ),
            Cmd::Sn { command: SnCmd::GroundState(a) } => (
                Command::SnGroundState,
                flag_layer(&[("sn.ground.method", &a.method), ("sn.mass", &a.mass), ("sn.grid.n", &a.n)]),
            ),
            Cmd::Sn { command: SnCmd::Evolve(a) } => (
                Command::SnEvolve,
                flag_layer(&[
                    ("sn.evolve.dt", &a.dt),
                    ("sn.evolve.steps", &a.steps),
                    ("sn.evolve.sigma", &a.sigma),
                    ("sn.mass", &a.mass),
                    ("sn.grid.n", &a.n),
                ]),
            ),
            Cmd::ComTest(a) => (
                Command::ComTest,
                flag_layer(&[
                    ("com.g", &a.g),
                    ("com.eps_cells", &a.eps_cells),
                    ("com.dt", &a.dt),
                    ("com.potential", &a.potential),
                ]),
            ),
            Cmd::Selftest(a) => (Command::Selftest, flag_layer(&[("selftest.criteria", &a.criteria)])),
        }
    }
}

/// Defaults, preset, file, `--set`, environment, flags.
fn resolve_config(cli: &Cli) -> Result<(Command, RunConfig), CliError> {
    let (command, flags) = cli.command.resolve();
    let file = cli.config.as_deref().map(Layer::read_file).transpose()?.unwrap_or_default();
    let set = Layer::from_assignments(&cli.set)?;
    let mut cfg = RunConfig::with_defaults(command.defaults());
    if let Some(key) = command.preset_key() {
        let name = [&flags, &set, &file].iter().find_map(|l| l.lookup(key)).unwrap_or(cfg.get(key)).to_string();
        cfg.apply(&Layer::new(format!("preset {name}"), command.preset(&name)?))?;
    }
    cfg.apply(&file)?;
    cfg.apply(&set)?;
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        cfg.set("output_dir", &dir, OUTPUT_DIR_ENV)?;
    }
    cfg.apply(&flags)?;
    if let Some(dir) = &cli.output_dir {
        cfg.set("output_dir", &dir.to_string_lossy(), "--output-dir")?;
    }
    Ok((command, cfg))
}

fn run(cli: &Cli, out_slot: &mut Option<OutputDir>) -> Result<(), CliError> {
    let (command, cfg) = resolve_config(cli)?;
    let out = out_slot.insert(OutputDir::create(cfg.get("output_dir").as_ref())?);
    out.write_text("manifest.txt", &cfg.manifest())?;
    let summary = command.run(&cfg, out)?;
    let summary = serde_json::json!({ "command": command.name(), "summary": summary });
    out.write_json("summary.json", &summary)?;
    say!("wrote {} to {}", out.written().join(", "), out.path().display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = None;
    match run(&cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(out) = out.as_mut() {
                if let Err(io) = out.write_json("error.json", &e.record()) {
                    eprintln!("error: could not write error record: {io}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
