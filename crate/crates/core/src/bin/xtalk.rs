use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use xtalk_core::circuit::Circuit;
use xtalk_core::config::{Experiment, ExperimentConfig};
use xtalk_core::recipes::{run_recipe, Recipe};

#[derive(Parser)]
#[command(name = "xtalk", version, about = "Crosstalk simulation for individually addressed MS gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectator populations against a fixed beam phase
    PhaseScan(Common),
    /// Infidelity envelope against gate count under phase drift
    Envelope(Common),
    /// Optimize (or load) the FM pulse and report its closure
    FmOptimize(Common),
    /// Run the identity and oracle checks
    Verify(Common),
    /// Run a circuit file
    Simulate {
        /// Circuit in the text format (`qubits n`, `ms a b θ`, ...)
        circuit: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the resolved configuration as JSON
    ShowConfig(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from a named preset (tableI or tableII)
    #[arg(long)]
    preset: Option<String>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Dotted-path override, e.g. `drift.light_shift_deg=6`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, String> {
        let base = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path).map_err(|e| e.to_string())?,
            (None, Some(name)) => ExperimentConfig::preset(name).map_err(|e| e.to_string())?,
            (None, None) => ExperimentConfig::default(),
        };
        let mut cfg = base.with_overrides(&self.overrides).map_err(|e| e.to_string())?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

fn run(recipe: Recipe, common: &Common, circuit: Option<&PathBuf>) -> Result<bool, String> {
    let cfg = common.config()?;
    let circuit = circuit
        .map(|p| Circuit::load(p).map_err(|e| format!("{}: {e}", p.display())))
        .transpose()?;
    let work = || -> Result<bool, String> {
        let exp = Experiment::from_config(cfg).map_err(|e| e.to_string())?;
        let outcome = run_recipe(recipe, &exp, &common.out, circuit.as_ref()).map_err(|e| e.to_string())?;
        print!("{}", outcome.summary);
        println!("wrote {} files to {}", outcome.files.len(), common.out.display());
        Ok(outcome.passed)
    };
    match common.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| e.to_string())?
            .install(work),
        None => work(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::PhaseScan(c) => run(Recipe::PhaseScan, c, None),
        Command::Envelope(c) => run(Recipe::Envelope, c, None),
        Command::FmOptimize(c) => run(Recipe::FmOptimize, c, None),
        Command::Verify(c) => run(Recipe::Verify, c, None),
        Command::Simulate { circuit, common } => run(Recipe::Simulate, common, Some(circuit)),
        Command::ShowConfig(c) => c.config().map(|cfg| {
            println!("{}", cfg.to_json());
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("xtalk: one or more checks failed");
            ExitCode::from(1)
        }
        Err(msg) => {
            eprintln!("xtalk: {msg}");
            ExitCode::from(2)
        }
    }
}
