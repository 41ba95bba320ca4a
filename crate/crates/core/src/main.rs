use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dressed_ion::io::RunConfig;
use dressed_ion::{run, Error};

#[derive(Parser)]
#[command(name = "dressed-ion", version, about = "Photoelectron spectra and entanglement of a light-dressed ion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for the fit multi-start (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Photon-energy scan of end-of-pulse spectra
    Scan(Common),
    /// Entanglement entropy and channel phases over interaction time
    Entropy(Common),
    /// Ionic channel populations over interaction time
    Populations(Common),
    /// Deconvolve and decompose a spectrum map
    Analyze {
        #[command(flatten)]
        common: Common,
        /// CSV map to analyze (default: synthetic mixture from the config)
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Regime classification for the configured and reference intensities
    Regime(Common),
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be >= 1".to_string()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Scan(c) => {
            let s = run::run_scan(&load(&c)?)?;
            match (s.min_gap, s.min_gap_photon_energy) {
                (Some(g), Some(hw)) => println!("minimum ridge gap {g:.4} eV at {hw:.4} eV"),
                _ => println!("single ridge: no doublet resolved"),
            }
            println!("rabi splitting {:.4} eV", s.rabi_splitting);
        }
        Command::Entropy(c) => {
            let s = run::run_entropy(&load(&c)?)?;
            println!("final entropy {:.6}", s.final_entropy);
            if let Some((m, p)) = s.final_phases {
                println!("final phases {m:+.4} / {p:+.4} rad");
            }
            println!("classical extent {:.1} nm", s.classical_extent_nm);
        }
        Command::Populations(c) => {
            let s = run::run_populations(&load(&c)?)?;
            println!("crossings {}", s.crossings);
            if let Some(r2) = s.yield_r_squared {
                println!("yield linearity R^2 {r2:.6}");
            }
        }
        Command::Analyze { common, input } => {
            let cfg = load(&common)?;
            let s = run::run_analyze(&cfg, input.as_deref())?;
            for slice in &s.slices {
                let frac = slice
                    .fit
                    .as_ref()
                    .map(|f| format!("{:.3}", f.entangled_fraction))
                    .unwrap_or_else(|| "-".to_string());
                println!("{:.4} eV  {}  entangled fraction {frac}", slice.photon_energy, slice.status);
            }
        }
        Command::Regime(c) => {
            let t = run::run_regime(&load(&c)?)?;
            for line in t.lines() {
                println!("{line}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
