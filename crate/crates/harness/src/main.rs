use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ringsig_harness::experiments;
use ringsig_harness::{ExperimentConfig, ExperimentKind, HarnessError, Result};

#[derive(Parser)]
#[command(name = "ringsig", version, about = "Ring-shaped noise signaling experiments")]
struct Cli {
    /// Flat key = value experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Frames or blocks per grid point (overrides the config).
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Measured vs theoretical BER over Es/N0.
    Ber,
    /// BER over magnitude and phase intensities, with a wrong-key receiver.
    BerFactors,
    /// Raw I/Q constellation dumps with metadata sidecars.
    DumpIq,
    /// Probability of modulation identification for shaped QPSK.
    Pmi,
    /// Labelled I/Q dataset for classifier training.
    GenDataset,
    /// Train the feature classifier and save it.
    TrainClf,
}

impl Command {
    fn accepts(self, kind: ExperimentKind) -> bool {
        use ExperimentKind::*;
        matches!(
            (self, kind),
            (Command::Ber, BerCurve)
                | (Command::BerFactors, BerVsIm | BerVsIp)
                | (Command::DumpIq, ConstellationDump)
                | (Command::Pmi, PmiSweep)
                | (Command::GenDataset | Command::TrainClf, DatasetGen)
        )
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    if let Some(t) = cli.trials {
        if t == 0 {
            return Err(HarnessError::Invalid("--trials must be positive".into()));
        }
        cfg.trials = Some(t);
    }
    if let Some(kind) = cfg.experiment {
        if !cli.command.accepts(kind) {
            return Err(HarnessError::Invalid(format!(
                "config is for experiment {} and does not match this subcommand",
                kind.name()
            )));
        }
    }

    match cli.command {
        Command::Ber => {
            let path = experiments::run_ber_curve(&cfg)?.write(&cfg, "ber.csv")?;
            println!("{}", path.display());
        }
        Command::BerFactors => {
            let path = experiments::run_ber_vs_factors(&cfg)?.write(&cfg, "ber_factors.csv")?;
            println!("{}", path.display());
        }
        Command::DumpIq => {
            for p in experiments::dump_constellation(&cfg)? {
                println!("{}", p.display());
            }
        }
        Command::Pmi => {
            let reports = experiments::run_pmi_sweep(&cfg)?;
            std::fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join("pmi.csv");
            std::fs::write(&path, experiments::pmi_csv(&cfg, &reports))?;
            println!("{}", path.display());
        }
        Command::GenDataset => {
            let manifest = experiments::generate_dataset(&cfg)?;
            println!("{} blocks in {}", manifest.entries.len(), cfg.out.display());
        }
        Command::TrainClf => {
            let model = experiments::train_classifier(&cfg)?;
            if let Some(cm) = &model.confusion {
                println!("held-out accuracy {:.4}", cm.overall_accuracy());
            }
            println!("{}", cfg.model_path().display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
