use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use iab_core::harness::report::{write_lab_rows, write_report};
use iab_core::harness::{emit_lab_rows, emit_report, run_sweep, Mode, SweepConfig};
use iab_core::lab::{
    construct_pair, lab_sweep, wasserstein2_between, wasserstein_inf_between, BumpSpec, PairKind, SigmaRule,
};
use iab_core::{check_assumptions, offline_schedule, run_offline, run_online, BanditEnv, Error, Result};

#[derive(Parser)]
#[command(
    name = "iab",
    version,
    about = "Functional estimation in the infinite-armed bandit model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one estimator once and print its report as JSON.
    Estimate(EstimateArgs),
    /// Sweep eps with Monte Carlo repetition; write CSV plus a JSON summary.
    Sweep(SweepArgs),
    /// Lower-bound lab.
    #[command(subcommand)]
    Lowerbound(LabCommand),
}

/// Flags named after the config keys; `--config` entries override them.
#[derive(Args)]
struct ConfigFlags {
    /// `key = value` file applied on top of the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    functional: Option<String>,
    #[arg(long)]
    distribution: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    schedule_mode: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    noise_sd: Option<String>,
    #[arg(long)]
    noise_mode: Option<String>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    flags: ConfigFlags,
    #[arg(long)]
    eps: Option<String>,
    /// `offline` or `online`.
    #[arg(long, default_value = "offline")]
    mode: String,
    /// Write the pull transcript (JSONL) here.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    flags: ConfigFlags,
    /// Comma-separated, strictly decreasing.
    #[arg(long)]
    eps_grid: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Comma-separated subset of `offline,online`.
    #[arg(long)]
    modes: Option<String>,
    /// CSV destination; the summary goes next to it with a `.json` extension.
    /// Without it the CSV goes to stdout.
    #[arg(long)]
    output_path: Option<String>,
}

#[derive(Args)]
struct PairFlags {
    /// mean_dirac, max_w2, max_winf, max_kl, median_pair or trimmed_pair.
    #[arg(long)]
    pair: String,
    /// Bump order for median and trimmed pairs.
    #[arg(long, default_value_t = 8)]
    k: usize,
    /// Trimming level for the trimmed pair.
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    /// Tail exponent for the maximum pairs.
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
}

#[derive(Subcommand)]
enum LabCommand {
    /// KL after Gaussian smoothing over an eps grid and a set of sigma rules.
    KlSweep {
        #[command(flatten)]
        pair: PairFlags,
        /// Comma-separated eps values.
        #[arg(long)]
        eps_grid: String,
        /// `fixed:SIGMA` or `power:COEFF:EXPONENT` (sigma = COEFF * eps^EXPONENT); repeatable.
        #[arg(long = "sigma", required = true)]
        sigmas: Vec<String>,
        #[arg(long)]
        output_path: Option<PathBuf>,
    },
    /// Build one pair and report its functional gap and Wasserstein distances.
    PairCheck {
        #[command(flatten)]
        pair: PairFlags,
        #[arg(long)]
        eps: f64,
    },
    /// Solve for the order-k bump and report its moments.
    BumpCheck {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
    },
}

fn config_from(flags: &ConfigFlags, extra: &[(&str, Option<&str>)]) -> Result<SweepConfig> {
    let mut cfg = SweepConfig::default();
    let common = [
        ("functional", flags.functional.as_deref()),
        ("distribution", flags.distribution.as_deref()),
        ("delta", flags.delta.as_deref()),
        ("schedule_mode", flags.schedule_mode.as_deref()),
        ("seed", flags.seed.as_deref()),
        ("noise_sd", flags.noise_sd.as_deref()),
        ("noise_mode", flags.noise_mode.as_deref()),
    ];
    for (key, value) in common.iter().chain(extra) {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if let Some(path) = &flags.config {
        let text = fs::read_to_string(path).map_err(|e| Error::Config {
            field: "config".into(),
            reason: format!("cannot read {}: {e}", path.display()),
        })?;
        cfg.apply_text(&text)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn assumptions(cfg: &SweepConfig, eps: f64) -> Result<iab_core::AssumptionParams> {
    check_assumptions(&cfg.distribution, &cfg.functional, eps).map_err(|v| Error::Config {
        field: "distribution".into(),
        reason: v
            .iter()
            .map(|x| format!("{} ({})", x.clause, x.detail))
            .collect::<Vec<_>>()
            .join("; "),
    })
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let cfg = config_from(
        &args.flags,
        &[("eps_grid", args.eps.as_deref()), ("modes", Some(args.mode.as_str()))],
    )?;
    if cfg.eps_grid.len() != 1 {
        return Err(Error::Config {
            field: "eps_grid".into(),
            reason: "estimate takes a single eps".into(),
        });
    }
    if cfg.modes.len() != 1 {
        return Err(Error::Config {
            field: "modes".into(),
            reason: "estimate takes a single mode".into(),
        });
    }
    let eps = cfg.eps_grid[0];
    let params = assumptions(&cfg, eps)?;
    let mut env = BanditEnv::new(cfg.distribution.clone(), cfg.noise_sd, cfg.seed)?.with_noise_mode(cfg.noise_mode);
    if args.transcript.is_some() {
        env = env.with_transcript();
    }
    let report = match cfg.modes[0] {
        Mode::Offline => {
            let sched = offline_schedule(&cfg.functional, eps, cfg.delta, &params, cfg.schedule_mode)?;
            run_offline(&mut env, &cfg.functional, &sched)?
        }
        Mode::Online => run_online(&mut env, &cfg.functional, eps, cfg.delta, &params, cfg.schedule_mode)?,
    };
    if let Some(path) = &args.transcript {
        env.write_transcript(BufWriter::new(File::create(path)?))?;
    }
    print_json(&report)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let cfg = config_from(
        &args.flags,
        &[
            ("eps_grid", args.eps_grid.as_deref()),
            ("trials", args.trials.as_deref()),
            ("modes", args.modes.as_deref()),
            ("output_path", args.output_path.as_deref()),
        ],
    )?;
    let report = run_sweep(&cfg)?;
    match &cfg.output_path {
        Some(path) => emit_report(&report, path)?,
        None => write_report(&report, io::stdout().lock(), io::sink())?,
    }
    for (mode, fit) in &report.slopes {
        eprintln!("{mode}: slope {:.3} (r2 {:.3})", fit.slope, fit.r2);
    }
    Ok(())
}

fn pair_kind(flags: &PairFlags) -> Result<PairKind> {
    Ok(match flags.pair.as_str() {
        "mean_dirac" => PairKind::MeanDirac,
        "max_w2" => PairKind::MaxW2 { beta: flags.beta },
        "max_winf" => PairKind::MaxWinf { beta: flags.beta },
        "max_kl" => PairKind::MaxKl { beta: flags.beta },
        "median_pair" => PairKind::MedianPair { k: flags.k },
        "trimmed_pair" => PairKind::TrimmedPair {
            k: flags.k,
            alpha: flags.alpha,
        },
        other => {
            return Err(Error::Config {
                field: "pair".into(),
                reason: format!("unknown pair `{other}`"),
            })
        }
    })
}

fn sigma_rule(text: &str) -> Result<SigmaRule> {
    let bad = || Error::Config {
        field: "sigma".into(),
        reason: format!("expected `fixed:S` or `power:C:E`, got `{text}`"),
    };
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        ["fixed", s] => Ok(SigmaRule::Fixed(num(s)?)),
        ["power", c, e] => Ok(SigmaRule::Power {
            coeff: num(c)?,
            exponent: num(e)?,
        }),
        _ => Err(bad()),
    }
}

#[derive(Serialize)]
struct PairCheck {
    pair: &'static str,
    eps: f64,
    functional: String,
    f1: String,
    f2: String,
    gap: f64,
    gap_at_least_eps: bool,
    w2: f64,
    winf: f64,
}

#[derive(Serialize)]
struct BumpCheck {
    k: usize,
    eps: f64,
    coefficients: Vec<String>,
    lipschitz: f64,
    peak: f64,
    /// Largest `|int x^l h|` over `l = 1..=2k`.
    max_moment: f64,
    /// `int_0^inf h`.
    positive_mass: f64,
}

fn lab(cmd: LabCommand) -> Result<()> {
    match cmd {
        LabCommand::KlSweep {
            pair,
            eps_grid,
            sigmas,
            output_path,
        } => {
            let kind = pair_kind(&pair)?;
            let eps: Vec<f64> = eps_grid
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| Error::Config {
                        field: "eps_grid".into(),
                        reason: format!("cannot parse `{}`", s.trim()),
                    })
                })
                .collect::<Result<_>>()?;
            let rules: Vec<SigmaRule> = sigmas.iter().map(|s| sigma_rule(s)).collect::<Result<_>>()?;
            let rows = lab_sweep(kind, &eps, &rules)?;
            match output_path {
                Some(path) => emit_lab_rows(&rows, &path),
                None => write_lab_rows(&rows, io::stdout().lock()),
            }
        }
        LabCommand::PairCheck { pair, eps } => {
            let p = construct_pair(pair_kind(&pair)?, eps)?;
            print_json(&PairCheck {
                pair: p.kind.name(),
                eps,
                functional: p.functional.to_string(),
                f1: p.f1.to_string(),
                f2: p.f2.to_string(),
                gap: p.gap,
                gap_at_least_eps: p.gap >= eps * (1.0 - 1e-9),
                w2: wasserstein2_between(&p.f1, &p.f2),
                winf: wasserstein_inf_between(&p.f1, &p.f2),
            })
        }
        LabCommand::BumpCheck { k, eps } => {
            let bump = BumpSpec::new(k, eps)?;
            print_json(&BumpCheck {
                k,
                eps,
                coefficients: bump.exact_coefficients().iter().map(|a| a.to_string()).collect(),
                lipschitz: bump.lipschitz(),
                peak: bump.peak(),
                max_moment: (1..=2 * k).map(|l| bump.moment(l).abs()).fold(0.0, f64::max),
                positive_mass: -bump.cumulative(0.0),
            })
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Sweep(a) => sweep(a),
        Command::Lowerbound(c) => lab(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } => 1,
                _ => 2,
            })
        }
    }
}
