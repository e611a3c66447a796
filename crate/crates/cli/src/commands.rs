use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use bosamp_core::export::{csv_table, fmt_f64};
use bosamp_core::scaling::{
    event_rate, largest_practical_n, loss_fidelity_study, loss_study_csv, optimal_circuit_size,
    optimal_curve_csv, optimal_rate_curve, qd_demux_rate, snr_gbs, snr_gbs_composed,
    LossStudySettings, RatePreset, RateProtocol, ONE_PER_WEEK,
};
use bosamp_core::validation::SampleRecord;
use bosamp_core::vibronic::{
    doktorov_decompose, enhancement_sweep, fc_profile, Binning, MoleculeSpec, SweepSettings,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ExperimentConfig;
use crate::pipeline::{self, Experiment};

#[derive(Parser, Debug)]
#[command(name = "bosamp", version, about = "Boson sampling simulation and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Output distribution of a configured experiment.
    Prob(ConfigArgs),
    /// Seeded samples of a configured experiment.
    Sample(SampleArgs),
    /// Validate recorded samples against the configured models.
    Validate(ValidateArgs),
    /// Franck-Condon profile of a molecule, optionally with a γ sweep.
    Vibronic(VibronicArgs),
    /// Event rates and circuit-size optimisation.
    Rates(RatesArgs),
    /// Signal-to-noise ratio of squeezed sources against spurious pairs.
    Snr(SnrArgs),
    /// Fidelity of lossy GBS against the lossless law.
    Losses(LossesArgs),
    /// Full pipeline described by a config.
    Run(ConfigArgs),
}

#[derive(Args, Debug)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub base: ConfigArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub base: ConfigArgs,
    /// JSON-lines sample file.
    #[arg(long)]
    pub samples: PathBuf,
}

#[derive(Args, Debug)]
pub struct VibronicArgs {
    #[arg(long)]
    pub molecule: PathBuf,
    /// Largest total number of final-state quanta.
    #[arg(long, default_value_t = 4)]
    pub truncation: usize,
    /// gcd, exact or a bin width in the frequency unit.
    #[arg(long, default_value = "gcd")]
    pub binning: String,
    /// Rescaling factors for an enhancement sweep.
    #[arg(long, value_delimiter = ',')]
    pub gamma: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Reference truncation of the sweep.
    #[arg(long)]
    pub ideal_truncation: Option<usize>,
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RateKind {
    Sbs,
    Gbs,
    /// Standard boson sampling from a demultiplexed quantum dot.
    Qd,
}

#[derive(Args, Debug)]
pub struct RatesArgs {
    #[arg(long, value_enum)]
    pub protocol: RateKind,
    #[arg(long, default_value = "ring-integrated")]
    pub preset: String,
    #[arg(long)]
    pub n: Option<usize>,
    /// Sources and modes (k = m); defaults to the preset.
    #[arg(long)]
    pub size: Option<usize>,
    /// Sweep the circuit size; with no `--n`, scan photon numbers.
    #[arg(long)]
    pub optimize: bool,
    #[arg(long, default_value_t = 1000)]
    pub max_size: usize,
    #[arg(long, default_value_t = 120)]
    pub n_max: usize,
    /// Practicality threshold in Hz (default one event per week).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 0.65)]
    pub p_qd: f64,
    #[arg(long, default_value_t = 76e6)]
    pub r0_qd: f64,
    #[arg(long, default_value_t = 0.995)]
    pub eta_switch: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SnrArgs {
    #[arg(long)]
    pub pairs: usize,
    #[arg(long)]
    pub sources: usize,
    #[arg(long)]
    pub xi: f64,
    /// Assemble from the photon-number laws instead of the closed form.
    #[arg(long)]
    pub composed: bool,
}

#[derive(Args, Debug)]
pub struct LossesArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 12)]
    pub m: usize,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1.0")]
    pub xi: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1.0,0.9,0.8,0.7,0.6,0.5")]
    pub eta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_config(args: &ConfigArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("bosamp-out"));
    Ok((cfg, out))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

/// Writes to `out/name` when an output directory is given, else to `w`.
fn emit(w: &mut dyn Write, out: Option<&Path>, name: &str, contents: &str) -> Result<()> {
    match out {
        Some(dir) => {
            let p = write_file(dir, name, contents)?;
            writeln!(w, "wrote {}", p.display())?;
        }
        None => w.write_all(contents.as_bytes())?,
    }
    Ok(())
}

fn parse_binning(s: &str) -> Result<Binning> {
    Ok(match s {
        "gcd" => Binning::Gcd,
        "exact" => Binning::Exact,
        w => Binning::Width(
            w.parse()
                .with_context(|| format!("binning must be gcd, exact or a width, got {w:?}"))?,
        ),
    })
}

pub fn execute(cli: Cli, w: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Prob(args) => {
            let (cfg, out) = load_config(&args)?;
            let exp = Experiment::new(cfg)?;
            let Some(dist) = exp.ideal_distribution()? else {
                bail!("scattershot output laws depend on the herald; use sample or run");
            };
            emit(w, Some(&out), pipeline::DISTRIBUTION_FILE, &dist.to_csv())?;
        }
        Command::Sample(args) => {
            let (cfg, out) = load_config(&args.base)?;
            let settings = cfg.samples;
            let seed = args.seed.or(settings.map(|s| s.seed)).context(
                "sampling needs a seed: pass --seed or set samples.seed in the config",
            )?;
            let count = args.count.or(settings.map(|s| s.count)).unwrap_or(100);
            let exp = Experiment::new(cfg)?;
            let samples = exp.simulate(seed, count)?;
            emit(w, Some(&out), pipeline::SAMPLES_FILE, &SampleRecord::to_jsonl(&samples)?)?;
        }
        Command::Validate(args) => {
            let (cfg, out) = load_config(&args.base)?;
            ensure!(
                !cfg.validation.is_empty() || !cfg.counter_tests.is_empty(),
                "config lists no validation models or counter tests"
            );
            let samples = pipeline::read_samples(&args.samples)?;
            let exp = Experiment::new(cfg)?;
            for (tag, v) in exp.validate(&samples)? {
                write_file(&out, &pipeline::verdict_file(&tag), &v.to_csv())?;
                let last = v
                    .final_confidence()
                    .map(fmt_f64)
                    .or(v.final_counter().map(|c| c.to_string()))
                    .unwrap_or_default();
                writeln!(w, "{tag},{:?},{last}", v.final_decision)?;
            }
        }
        Command::Vibronic(args) => vibronic(args, w)?,
        Command::Rates(args) => rates(args, w)?,
        Command::Snr(args) => {
            let v = if args.composed {
                snr_gbs_composed(args.pairs, args.sources, args.xi)?
            } else {
                snr_gbs(args.pairs, args.sources, args.xi)?
            };
            writeln!(w, "{}", fmt_f64(v))?;
        }
        Command::Losses(args) => {
            let rows = loss_fidelity_study(&LossStudySettings {
                n: args.n,
                m: args.m,
                k: args.k,
                xi: args.xi,
                eta: args.eta,
                seeds: args.seeds,
            })?;
            emit(w, args.out.as_deref(), "losses.csv", &loss_study_csv(&rows))?;
        }
        Command::Run(args) => {
            let (cfg, out) = load_config(&args)?;
            let m = pipeline::run(cfg, &out)?;
            for a in &m.artifacts {
                writeln!(w, "{} {}", a.sha256, out.join(&a.file).display())?;
            }
        }
    }
    Ok(())
}

fn vibronic(args: VibronicArgs, w: &mut dyn Write) -> Result<()> {
    let mol = MoleculeSpec::load(&args.molecule)
        .with_context(|| format!("cannot load molecule {}", args.molecule.display()))?;
    let binning = parse_binning(&args.binning)?;
    let dok = doktorov_decompose(&mol)?;
    let profile = fc_profile(&dok, &mol.omega_prime, args.truncation, binning)?;
    emit(w, args.out.as_deref(), "fc_profile.csv", &profile.to_csv())?;
    if args.gamma.is_empty() {
        return Ok(());
    }
    // The molecule's own squeezing plays the device squeezing at γ = 1.
    let settings = SweepSettings {
        eta: args.eta,
        device_truncation: args.truncation,
        ideal_truncation: args.ideal_truncation.unwrap_or(args.truncation),
        binning,
        shots: args.shots,
        seed: args.seed,
    };
    let points = enhancement_sweep(&dok.u_left, &dok.xi, &mol.omega_prime, &args.gamma, &settings)?;
    let csv = csv_table(
        &[
            "gamma",
            "max_xi",
            "f_quantum",
            "f_raw",
            "f_classical",
            "enhancement",
            "enhancement_raw",
        ],
        points.iter().map(|p| {
            vec![
                p.gamma,
                p.max_xi,
                p.f_quantum,
                p.f_raw,
                p.f_classical,
                p.enhancement,
                p.enhancement_raw,
            ]
        }),
    );
    emit(w, args.out.as_deref(), "enhancement.csv", &csv)
}

fn rates(args: RatesArgs, w: &mut dyn Write) -> Result<()> {
    let preset: RatePreset = args.preset.parse()?;
    let mut params = preset.params();
    if let Some(s) = args.size {
        params = params.with_size(s);
    }
    let threshold = args.threshold.unwrap_or(ONE_PER_WEEK);
    let protocol = match args.protocol {
        RateKind::Sbs => RateProtocol::Sbs,
        RateKind::Gbs => RateProtocol::Gbs,
        RateKind::Qd => {
            let n = args.n.context("--n is required for the quantum-dot rate")?;
            ensure!(n >= 1, "--n must be at least 1");
            let r = qd_demux_rate(n, args.p_qd, args.r0_qd, args.eta_switch, &params)?;
            writeln!(w, "{}", fmt_f64(r))?;
            return Ok(());
        }
    };
    let sizes = 1..=args.max_size;
    match (args.n, args.optimize) {
        (Some(n), false) => writeln!(w, "{}", fmt_f64(event_rate(protocol, n, &params)?))?,
        (Some(n), true) => {
            let (k, r) = optimal_circuit_size(protocol, n, &params, sizes)?;
            writeln!(w, "{k},{}", fmt_f64(r))?;
        }
        (None, true) => {
            let step = if protocol == RateProtocol::Gbs { 2 } else { 1 };
            let ns: Vec<usize> = (step..=args.n_max).step_by(step).collect();
            let curve = optimal_rate_curve(protocol, &ns, &params, sizes.clone())?;
            emit(w, args.out.as_deref(), "optimal_rates.csv", &optimal_curve_csv(&curve))?;
            match largest_practical_n(protocol, &params, threshold, sizes, args.n_max)? {
                Some(p) => writeln!(
                    w,
                    "largest practical n: {} (size {}, rate {} Hz)",
                    p.n,
                    p.size,
                    fmt_f64(p.rate)
                )?,
                None => writeln!(w, "no photon number reaches the threshold")?,
            }
        }
        (None, false) => bail!("pass --n, --optimize, or both"),
    }
    Ok(())
}
