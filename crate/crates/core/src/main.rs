use std::fs::File;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use pcmb::bicmb::CodeRate;
use pcmb::harness::{parse_snr_list, write_csv, Scheme, SimConfig, Simulator};
use pcmb::{Error, Result};

/// Link-level simulator for perfect-code multiple beamforming.
#[derive(Parser)]
#[command(name = "pcmb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER vs SNR: each point runs until the error target or the trial cap.
    Ber(SweepArgs),
    /// Average real multiplications vs SNR: each point runs exactly max-trials.
    Complexity(SweepArgs),
    /// Runs the invariant suite; exits nonzero on any failure.
    Validate {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Random instances per check.
        #[arg(long, default_value_t = 300)]
        instances: usize,
    },
}

#[derive(Args, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct SweepArgs {
    /// pc (gc), pcmb (gcmb), fpmb, bicmb-pc (bicmb-gc), bicmb-fp, uncoded-mb
    #[arg(long)]
    scheme: Option<String>,
    /// Code dimension: 2 or 4.
    #[arg(long)]
    dim: Option<usize>,
    /// QAM size: 4, 16, 64 or 256.
    #[arg(long = "mod")]
    #[serde(rename = "mod")]
    modulation: Option<usize>,
    /// SNR points in dB: `0,5,10` or `start:step:stop`.
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bit errors per point before a BER sweep moves on [default: 200].
    #[arg(long)]
    errors: Option<u64>,
    /// Trial cap per point; a trial is one codeword or one coded frame [default: 100000].
    #[arg(long)]
    max_trials: Option<u64>,
    /// Convolutional code rate for coded schemes: 1/2, 2/3, 4/5 [default: 2/3].
    #[arg(long)]
    rate: Option<String>,
    /// Unitary precoder file for fpmb / bicmb-fp (rows of `re,im` entries).
    #[arg(long)]
    precoder: Option<PathBuf>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Trials between stopping-rule checks [default: 64].
    #[arg(long)]
    batch: Option<u64>,
    /// Codewords per coded frame [default: 2 log2(M) D^2].
    #[arg(long)]
    frame_codewords: Option<usize>,
    /// Write 0 in the wall_ms column so repeated runs are byte-identical.
    #[arg(long)]
    #[serde(default)]
    no_timing: bool,
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl SweepArgs {
    fn merged(self) -> Result<Self> {
        let Some(path) = &self.config else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(path)?;
        let file: SweepArgs = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(Self {
            scheme: self.scheme.or(file.scheme),
            dim: self.dim.or(file.dim),
            modulation: self.modulation.or(file.modulation),
            snr: self.snr.or(file.snr),
            seed: self.seed.or(file.seed),
            errors: self.errors.or(file.errors),
            max_trials: self.max_trials.or(file.max_trials),
            rate: self.rate.or(file.rate),
            precoder: self.precoder.or(file.precoder),
            out: self.out.or(file.out),
            threads: self.threads.or(file.threads),
            batch: self.batch.or(file.batch),
            frame_codewords: self.frame_codewords.or(file.frame_codewords),
            no_timing: self.no_timing || file.no_timing,
            config: self.config,
        })
    }

    fn into_config(self) -> Result<(SimConfig, Option<usize>)> {
        let a = self.merged()?;
        let need = |name: &str| Error::Usage(format!("--{name} is required (flag or config file)"));
        let scheme = Scheme::parse(a.scheme.as_deref().ok_or_else(|| need("scheme"))?)?;
        let d = a.dim.ok_or_else(|| need("dim"))?;
        let m = a.modulation.ok_or_else(|| need("mod"))?;
        let snr = parse_snr_list(a.snr.as_deref().ok_or_else(|| need("snr"))?)?;
        let mut cfg = SimConfig::new(scheme, d, m, snr);
        if let Some(v) = a.seed {
            cfg.seed = v;
        }
        if let Some(v) = a.errors {
            cfg.target_errors = v;
        }
        if let Some(v) = a.max_trials {
            cfg.max_trials = v;
        }
        if let Some(v) = &a.rate {
            cfg.rate = CodeRate::parse(v)?;
        }
        if let Some(v) = a.batch {
            cfg.batch = v;
        }
        cfg.precoder = a.precoder;
        cfg.out = a.out;
        cfg.frame_codewords = a.frame_codewords;
        cfg.timing = !a.no_timing;
        cfg.validate()?;
        Ok((cfg, a.threads))
    }
}

fn run_sweep(args: SweepArgs, complexity: bool) -> Result<()> {
    let (cfg, threads) = args.into_config()?;
    let out = cfg.out.clone();
    let sim = Simulator::new(cfg)?;
    let run = || if complexity { sim.run_complexity_sweep() } else { sim.run_ber_sweep() };
    let records = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    match out {
        Some(path) => write_csv(&records, BufWriter::new(create(&path)?)),
        None => write_csv(&records, io::stdout().lock()),
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ber(a) => run_sweep(a, false),
        Command::Complexity(a) => run_sweep(a, true),
        Command::Validate { seed, instances } => (|| {
            let mut inputs = pcmb::harness::ValidationInputs::standard()?;
            inputs.seed = seed;
            inputs.instances = instances;
            let report = pcmb::harness::validate_with(&inputs)?;
            print!("{report}");
            if report.all_passed() {
                Ok(())
            } else {
                Err(Error::InvalidInput("one or more invariants failed".into()))
            }
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
