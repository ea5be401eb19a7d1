use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sampgap::report::{write_block_rows, write_bound_reports};
use sampgap_cli::rates::write_fits;
use sampgap_cli::{
    parse_grid, run_certify, run_rate_fit, run_sandwich, run_trace_infty, ExperimentConfig, Family, Target,
};

#[derive(Parser)]
#[command(name = "sampgap", version, about = "Sampling versus approximation numbers on H_gamma")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certified lower bound, measured error and upper bound per n.
    Sandwich(FamilyArgs),
    /// Fit ln v = c + s ln n + e ln ln n for the chosen targets.
    Rates {
        #[command(flatten)]
        family: FamilyArgs,
        /// Targets to fit; all when omitted.
        #[arg(long, value_enum)]
        target: Vec<TargetArg>,
    },
    /// Certificates for the family.
    Certify(FamilyArgs),
    /// Block composition with sigma_k = k^(-1/2), tau_n = ln(n+2)^(-1/2).
    TraceInfty {
        #[arg(long, default_value_t = 6)]
        j_max: u32,
        /// Indices checked one by one from n_0.
        #[arg(long, default_value_t = 1 << 20)]
        exact_span: u64,
        /// Log-spaced samples per block.
        #[arg(long, default_value_t = 256)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    Powerlog,
    Geometric,
    Interleaved,
    Musquare,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Approx,
    Sampling,
    Integration,
    Gap,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Target {
        match t {
            TargetArg::Approx => Target::Approx,
            TargetArg::Sampling => Target::Sampling,
            TargetArg::Integration => Target::Integration,
            TargetArg::Gap => Target::Gap,
        }
    }
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    family: FamilyKind,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 3)]
    k0: u64,
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    /// Sequence file for interleaved (kind=decay) and musquare (kind=spectral).
    #[arg(long)]
    file: Option<PathBuf>,
    /// `2^a..2^b`, `a..b` or a comma list.
    #[arg(long, default_value = "2^4..2^12")]
    n_grid: String,
    #[arg(long, default_value_t = 1 << 16)]
    bandwidth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl FamilyArgs {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let file = || {
            self.file
                .clone()
                .context("--file is required for this family")
        };
        let family = match self.family {
            FamilyKind::Powerlog => Family::PowerLog {
                beta: self.beta,
                k0: self.k0,
            },
            FamilyKind::Geometric => Family::Geometric { q: self.q },
            FamilyKind::Interleaved => Family::Interleaved(file()?),
            FamilyKind::Musquare => Family::MuSquare(file()?),
        };
        let mut cfg = ExperimentConfig::new(family, parse_grid(&self.n_grid)?, self.bandwidth)?;
        cfg.seed = self.seed;
        cfg.output_path = self.out.clone();
        Ok(cfg)
    }
}

fn sink(path: Option<&PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

/// Usage or input problem (exit 2) versus a failed check (exit 1).
enum Outcome {
    Passed,
    Violations(Vec<String>),
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let violations = match cli.command {
        Command::Sandwich(args) => {
            let cfg = args.config()?;
            let run = run_sandwich(&cfg)?;
            write_bound_reports(sink(cfg.output_path.as_ref())?, &run.rows)?;
            run.violations
        }
        Command::Certify(args) => {
            let cfg = args.config()?;
            let run = run_certify(&cfg)?;
            write_bound_reports(sink(cfg.output_path.as_ref())?, &run.rows)?;
            if let Some(c) = run.doubling {
                eprintln!(
                    "doubling chain: r0 = {}, checked {}, worst n(2r)/n(r) = {:.4} (limit {:.4})",
                    c.r0, c.checked, c.worst_ratio, c.limit
                );
            }
            run.violations
        }
        Command::Rates { family, target } => {
            let cfg = family.config()?;
            let targets: Vec<Target> = if target.is_empty() {
                Target::ALL.to_vec()
            } else {
                target.into_iter().map(Target::from).collect()
            };
            let fits = targets
                .into_iter()
                .map(|t| run_rate_fit(&cfg, t))
                .collect::<anyhow::Result<Vec<_>>>()?;
            write_fits(sink(cfg.output_path.as_ref())?, &fits)?;
            Vec::new()
        }
        Command::TraceInfty {
            j_max,
            exact_span,
            samples,
            out,
        } => {
            if j_max == 0 {
                bail!("--j-max must be >= 1");
            }
            let run = run_trace_infty(j_max, exact_span, samples)?;
            write_block_rows(sink(out.as_ref())?, &run.rows)?;
            eprintln!(
                "checked {} exact and {} sampled indices, min margin {:e}",
                run.check.exact_points, run.check.sampled_points, run.check.min_margin
            );
            run.violations
        }
    };
    Ok(if violations.is_empty() {
        Outcome::Passed
    } else {
        Outcome::Violations(violations)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::Violations(v)) => {
            for line in v {
                eprintln!("violation: {line}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
