//! `hybeam` command line: config validation, codebook export, and
//! SSE/SMSE/BER sweeps written as CSV plus a plot stub.
//!
//! Exit codes: 0 success, 2 invalid configuration or input file, 3
//! numerical failure inside a sweep (the offending trial and seed go to
//! stderr), 1 anything else.

use clap::{Args, Parser, Subcommand, ValueEnum};
use hybeam::config::{validate_config, SystemConfig};
use hybeam::evaluation::SnrGrid;
use hybeam::harness::{run_experiment, Metric, SchemeSelector};
use hybeam::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hybeam", version, about = "Hybrid precoding link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration and list every violated invariant.
    Validate {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Build one side's beam codebook and export it as CSV.
    Codebook {
        #[command(flatten)]
        common: CommonOpts,
        /// Which array's codebook to export.
        #[arg(long, value_enum, default_value_t = Side::Bs)]
        side: Side,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep sum spectral efficiency over SNR.
    Sse {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        sweep: SweepOpts,
    },
    /// Sweep the analytic sum MSE over SNR.
    Smse {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        sweep: SweepOpts,
    },
    /// Sweep Monte Carlo 16-QAM bit error rate over SNR.
    Ber {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        sweep: SweepOpts,
        /// Total bit budget per SNR point (spread over the trials).
        #[arg(long, default_value_t = 1_000_000)]
        bits: usize,
    },
}

#[derive(Args)]
struct CommonOpts {
    /// Flat key=value config file; omitted keys keep the subcommand's
    /// stock experiment values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Codebook oversampling factor override.
    #[arg(long)]
    rho: Option<usize>,
    /// Beam correlation threshold override.
    #[arg(long)]
    beta: Option<f64>,
    /// BS phase-shifter bits override (0 = unquantized).
    #[arg(long)]
    bt: Option<u32>,
    /// User phase-shifter bits override (0 = unquantized).
    #[arg(long)]
    br: Option<u32>,
    /// Channel realizations per SNR point.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct SweepOpts {
    #[arg(long, default_value_t = -10.0)]
    snr_min: f64,
    #[arg(long, default_value_t = 20.0)]
    snr_max: f64,
    #[arg(long, default_value_t = 5.0)]
    snr_step: f64,
    /// Output CSV path; a `.plot.py` stub lands next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = SchemeArg::ProposedFull)]
    scheme: SchemeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Bs,
    User,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    /// OSC-JAPC analog stage + min-SMSE digital stage.
    ProposedFull,
    /// Identity analog stages + min-SMSE digital on the raw channels.
    FullDigitalBaseline,
}

impl SchemeArg {
    fn selector(self) -> SchemeSelector<f64> {
        match self {
            SchemeArg::ProposedFull => SchemeSelector::ProposedFull,
            SchemeArg::FullDigitalBaseline => SchemeSelector::FullDigitalBaseline,
        }
    }
}

impl CommonOpts {
    /// Stock config for the subcommand, then the file, then flag overrides.
    fn build(&self, stock: SystemConfig) -> Result<SystemConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => SystemConfig::from_file(path)?,
            None => stock,
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(rho) = self.rho {
            cfg.rho = rho;
        }
        if let Some(beta) = self.beta {
            cfg.beta = beta;
        }
        if let Some(bt) = self.bt {
            cfg.b_t = bt;
        }
        if let Some(br) = self.br {
            cfg.b_r = br;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        Ok(cfg)
    }
}

fn sweep_grid(sweep: &SweepOpts) -> Result<SnrGrid, Error> {
    SnrGrid::new(sweep.snr_min, sweep.snr_max, sweep.snr_step)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Validate { common } => {
            let cfg = common.build(SystemConfig::default())?;
            let violations = validate_config(&cfg);
            if violations.is_empty() {
                println!("configuration is valid");
                Ok(())
            } else {
                for v in &violations {
                    println!("{v}");
                }
                Err(Error::InvalidConfig(violations.join("; ")))
            }
        }
        Command::Codebook { common, side, out } => {
            let cfg = common.build(SystemConfig::default())?;
            let violations = validate_config(&cfg);
            if !violations.is_empty() {
                return Err(Error::InvalidConfig(violations.join("; ")));
            }
            let codebook = match side {
                Side::Bs => cfg.bs_codebook::<f64>(),
                Side::User => cfg.user_codebook::<f64>(),
            };
            let mut file = std::fs::File::create(&out)?;
            codebook.export_csv(&mut file)?;
            println!("wrote {} entries to {}", codebook.len(), out.display());
            Ok(())
        }
        Command::Sse { common, sweep } => {
            let cfg = common.build(SystemConfig::sse_experiment())?;
            sweep_and_report(&cfg, &sweep, Metric::Sse)
        }
        Command::Smse { common, sweep } => {
            let cfg = common.build(SystemConfig::sse_experiment())?;
            sweep_and_report(&cfg, &sweep, Metric::Smse)
        }
        Command::Ber { common, sweep, bits } => {
            let cfg = common.build(SystemConfig::ber_experiment())?;
            sweep_and_report(&cfg, &sweep, Metric::Ber { bits_per_point: bits })
        }
    }
}

fn sweep_and_report(cfg: &SystemConfig, sweep: &SweepOpts, metric: Metric) -> Result<(), Error> {
    let grid = sweep_grid(sweep)?;
    let curve = run_experiment(cfg, &sweep.scheme.selector(), metric, &grid, &sweep.out)?;
    println!(
        "wrote {} ({} SNR points, {} trials each) and {}",
        sweep.out.display(),
        curve.snr_db.len(),
        cfg.trials,
        hybeam::harness::plot_stub_path(&sweep.out).display(),
    );
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        3
    } else {
        match err {
            Error::InvalidConfig(_) | Error::Parse { .. } => 2,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
