use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tcue_cli::*;
use tcue_core::asymptotics::{
    check_alpha, check_kappa, check_survival_asymptotics, check_survival_bound, check_tail_integral, check_tail_sum,
    default_window, LemmaCheckReport, KAPPA_ROOT_EXCLUSION,
};
use tcue_core::distances::Metric;
use tcue_core::exact_law::Law;
use tcue_core::sampling::{check_haar_against_beta_max, sample_beta_max, sample_haar_truncation, BetaMaxMode};
use tcue_core::scaling::{derive_constants, EnsembleParams};

#[derive(Parser)]
#[command(
    name = "tcue",
    version,
    about = "Exact spectral-radius laws of truncated Haar unitaries and their distance to Gumbel"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Write the result to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact CDF of the rescaled spectral radius at one point.
    ExactCdf {
        #[command(flatten)]
        size: Size,
        /// Point at which the law is evaluated.
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, value_enum, default_value = "W")]
        law: LawArg,
    },
    /// Distance between the exact law and the Gumbel law.
    Distance {
        #[command(flatten)]
        size: Size,
        #[arg(long, value_enum, default_value = "ks")]
        metric: MetricArg,
        #[arg(long, value_enum, default_value = "W")]
        law: LawArg,
    },
    /// Distances over a grid of sizes, as CSV with a checksum line.
    Sweep {
        /// Comma-separated matrix sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
        /// Comma-separated ratios c; p = round(c·n).
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        ratio: Vec<f64>,
        /// Comma-separated metrics.
        #[arg(long, value_delimiter = ',', value_enum, default_value = "ks")]
        metric: Vec<MetricArg>,
        #[arg(long, value_enum, default_value = "W")]
        law: LawArg,
        /// Record wall-clock times (output is then no longer reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Monte Carlo draws of the squared spectral radius.
    Sample {
        #[command(flatten)]
        size: Size,
        /// Number of draws.
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        /// Draw i uses stream i of this seed, so output is independent of threads.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "beta-max")]
        mode: ModeArg,
        /// Number of top Beta shapes kept in truncated mode (default: automatic).
        #[arg(long)]
        k: Option<u64>,
    },
    /// Check an asymptotic statement against exact values.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Size {
    /// Matrix size.
    #[arg(long)]
    n: u64,
    /// Truncation size; defaults to round(ratio·n).
    #[arg(long)]
    p: Option<u64>,
    /// Ratio c in (0, 1); p = round(c·n), 0.5 when neither --p nor --ratio is given.
    #[arg(long)]
    ratio: Option<f64>,
}

impl Size {
    fn params(&self) -> Outcome<EnsembleParams> {
        let p = match (self.p, self.ratio) {
            (Some(_), Some(_)) => return Err(Failure::invalid("give --p or --ratio, not both")),
            (Some(p), None) => p,
            (None, Some(c)) => derived_p(self.n, c)?,
            (None, None) => derived_p(self.n, 0.5)?,
        };
        Ok(EnsembleParams::new(self.n, p)?)
    }
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(value_enum)]
    lemma: LemmaArg,
    /// Matrix size for checks on a fixed law (default per check).
    #[arg(long)]
    n: Option<u64>,
    /// Truncation size; defaults to n/2 when --n is given.
    #[arg(long)]
    p: Option<u64>,
    /// Comma-separated z values (L2_2).
    #[arg(long, value_delimiter = ',')]
    z: Vec<f64>,
    /// Comma-separated r values (L2_2).
    #[arg(long, value_delimiter = ',')]
    r: Vec<f64>,
    /// Comma-separated j values (L2_3, L2_4).
    #[arg(long, value_delimiter = ',')]
    j: Vec<u64>,
    /// Comma-separated u values (L2_3).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    u: Vec<f64>,
    /// Comma-separated x values (L2_4, L2_5, ALPHA, KAPPA).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Vec<f64>,
    /// Comma-separated L values (L2_5).
    #[arg(long = "l", value_delimiter = ',')]
    l: Vec<u64>,
    /// Draws for the CRU check.
    #[arg(long, default_value_t = 20_000)]
    samples: u64,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Run grids outside the asymptotic regime, showing per-point regime flags.
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    #[value(name = "W")]
    W,
    #[value(name = "X")]
    X,
}

impl From<LawArg> for Law {
    fn from(l: LawArg) -> Self {
        match l {
            LawArg::W => Law::W,
            LawArg::X => Law::X,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Ks,
    W1,
    W1Xw,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Ks => Metric::KS,
            MetricArg::W1 => Metric::W1,
            MetricArg::W1Xw => Metric::W1_XW,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    BetaMax,
    BetaMaxTruncated,
    Haar,
}

#[derive(Clone, Copy, ValueEnum)]
#[allow(non_camel_case_types)]
enum LemmaArg {
    #[value(name = "L2_2")]
    L2_2,
    #[value(name = "L2_3")]
    L2_3,
    #[value(name = "L2_4")]
    L2_4,
    #[value(name = "L2_5")]
    L2_5,
    #[value(name = "ALPHA")]
    Alpha,
    #[value(name = "KAPPA")]
    Kappa,
    #[value(name = "CRU")]
    Cru,
}

fn or_default<T: Clone>(given: &[T], default: &[T]) -> Vec<T> {
    if given.is_empty() {
        default.to_vec()
    } else {
        given.to_vec()
    }
}

fn validate_params(args: &ValidateArgs, default: (u64, u64)) -> Outcome<EnsembleParams> {
    let n = args.n.unwrap_or(default.0);
    let p = match (args.n, args.p) {
        (_, Some(p)) => p,
        (Some(n), None) => derived_p(n, 0.5)?,
        (None, None) => default.1,
    };
    Ok(EnsembleParams::new(n, p)?)
}

fn validate(args: &ValidateArgs) -> Outcome<LemmaCheckReport> {
    let report = match args.lemma {
        LemmaArg::L2_2 => check_tail_integral(
            &or_default(&args.z, &[6.0, 8.0, 10.0, 12.0]),
            &or_default(&args.r, &[0.0, 1.0, 2.0, 3.0, 4.0]),
        )?,
        LemmaArg::L2_3 => {
            let params = validate_params(args, (100_000, 50_000))?;
            check_survival_asymptotics(
                params,
                &or_default(&args.j, &[0, 10, 100, 1000]),
                &or_default(&args.u, &[3.0, 4.0, 5.0, 6.0]),
            )?
        }
        LemmaArg::L2_4 => {
            let params = validate_params(args, (10_000, 5_000))?;
            check_survival_bound(
                params,
                &or_default(&args.j, &[100, 316, 999]),
                &or_default(&args.x, &[1.0, 5.0]),
            )?
        }
        LemmaArg::L2_5 => {
            let params = validate_params(args, (10_000, 5_000))?;
            let ell2 = derive_constants(&params)?.ell2;
            check_tail_sum(params, &or_default(&args.l, &[0]), &or_default(&args.x, &[ell2]))?
        }
        LemmaArg::Alpha => {
            let params = validate_params(args, (100_000, 50_000))?;
            let window = default_window(&derive_constants(&params)?, 41);
            check_alpha(params, &or_default(&args.x, &window))?
        }
        LemmaArg::Kappa => {
            let params = validate_params(args, (1_000_000, 500_000))?;
            let window = default_window(&derive_constants(&params)?, 41);
            check_kappa(params, &or_default(&args.x, &window), KAPPA_ROOT_EXCLUSION)?
        }
        LemmaArg::Cru => {
            let params = validate_params(args, (24, 10))?;
            check_haar_against_beta_max(params, args.samples, args.seed)?
        }
    };
    let custom_grid = [args.z.is_empty(), args.r.is_empty(), args.j.is_empty()]
        .into_iter()
        .chain([args.u.is_empty(), args.x.is_empty(), args.l.is_empty()])
        .any(|empty| !empty);
    // the built-in grids are fixed reference grids and always run
    if custom_grid && !args.force {
        if let Some(pt) = report.points.iter().find(|pt| !pt.in_regime) {
            return Err(Failure::invalid(format!(
                "grid point {:?} lies outside the asymptotic regime; rerun with --force to evaluate it anyway",
                pt.coords
            )));
        }
    }
    Ok(report)
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialize");
    s.push('\n');
    s
}

fn run(cli: &Cli) -> Outcome<String> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::invalid(format!("thread pool: {e}")))?;
    }
    let text = match &cli.command {
        Command::ExactCdf { size, x, law } => {
            let record = exact_cdf(size.params()?, (*law).into(), *x)?;
            if cli.json {
                to_json(&record)
            } else {
                render_fields(&record)
            }
        }
        Command::Distance { size, metric, law } => {
            let report = distance(size.params()?, (*metric).into(), (*law).into())?;
            if cli.json {
                to_json(&report)
            } else {
                render_fields(&report)
            }
        }
        Command::Sweep {
            n,
            ratio,
            metric,
            law,
            timing,
        } => {
            let config = SweepConfig {
                n_list: n.clone(),
                ratio_list: ratio.clone(),
                metrics: metric.iter().map(|&m| m.into()).collect(),
                law: (*law).into(),
                timing: *timing,
            };
            let rows = run_sweep(&config)?;
            let failed = rows.iter().filter(|r| r.failed()).count();
            let text = if cli.json {
                to_json(&sweep_output(rows))
            } else {
                sweep_csv(&rows)
            };
            if failed > 0 {
                emit(cli, &text)?;
                return Err(Failure {
                    exit: Exit::NumericalFailure,
                    message: format!("{failed} sweep rows failed"),
                });
            }
            text
        }
        Command::Sample {
            size,
            samples,
            seed,
            mode,
            k,
        } => {
            let params = size.params()?;
            if k.is_some() && !matches!(mode, ModeArg::BetaMaxTruncated) {
                return Err(Failure::invalid("--k only applies to --mode beta-max-truncated"));
            }
            let batch = match mode {
                ModeArg::BetaMax => sample_beta_max(params, *samples, *seed, BetaMaxMode::Exact)?,
                ModeArg::BetaMaxTruncated => sample_beta_max(params, *samples, *seed, BetaMaxMode::Truncated(*k))?,
                ModeArg::Haar => sample_haar_truncation(params, *samples, *seed)?,
            };
            if cli.json {
                to_json(&batch.header())
            } else {
                let mut buf = Vec::new();
                batch.write_csv(&mut buf).map_err(|e| Failure::invalid(e.to_string()))?;
                String::from_utf8(buf).expect("ascii csv")
            }
        }
        Command::Validate(args) => {
            let report = validate(args)?;
            let text = if cli.json {
                to_json(&report)
            } else {
                render_report(&report, args.force || report.points.iter().any(|pt| !pt.in_regime))
            };
            if !report.pass {
                emit(cli, &text)?;
                return Err(Failure::validation(format!("{:?} check failed", report.lemma_id)));
            }
            text
        }
    };
    Ok(text)
}

fn emit(cli: &Cli, text: &str) -> Outcome<()> {
    let io = |e: std::io::Error| Failure::invalid(format!("cannot write output: {e}"));
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(io),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|text| emit(&cli, &text));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("tcue: {}", f.message);
            ExitCode::from(f.exit as u8)
        }
    }
}
