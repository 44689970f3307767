use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use weakval::experiment::{
    all_pass, checks_csv, probs_csv, run_certify, run_density, run_identity_checks, run_probs, run_sweep, run_verify,
    BasisChoice, CheckResult, ModelKind, Space, SweepPlan,
};
use weakval::hilbert::CMatrix;
use weakval::PostselectionBasis;

const SEED_ENV: &str = "WEAKVAL_SEED";

#[derive(Parser)]
#[command(name = "weakval", version, about = "Exact versus weak-value-approximated states of weak measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Norm difference and its triangle pieces over a list of couplings.
    Sweep(PlanArgs),
    /// Pick cutoffs and a certified coupling for tolerance `--xi`.
    Certify(PlanArgs),
    /// Postselected pointer density of the gaussian model.
    Density {
        #[command(flatten)]
        plan: PlanArgs,
        /// Postselection state index.
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, default_value = "position")]
        space: Space,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Qubit readout probabilities for each coupling.
    Probs {
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Special-function identities and series bound checks.
    Appendix {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check closed forms against quadrature, matrix exponentials and series.
    Verify(PlanArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    Eigen,
    Random,
    Supplied,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, default_value = "gaussian")]
    model: ModelKind,
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// `WEAKVAL_SEED` takes precedence when set.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated, strictly descending.
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4")]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    hbar: f64,
    #[arg(long, default_value_t = 0.1)]
    xi: f64,
    #[arg(long, value_enum, default_value_t = BasisArg::Random)]
    basis: BasisArg,
    /// JSON rows of `[re, im]` pairs; required with `--basis supplied`.
    #[arg(long)]
    basis_file: Option<PathBuf>,
    /// JSON Hermitian matrix replacing the seeded observable.
    #[arg(long)]
    observable: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

impl PlanArgs {
    fn plan(&self) -> Result<SweepPlan, String> {
        let basis = match (self.basis, &self.basis_file) {
            (BasisArg::Eigen, _) => BasisChoice::Eigen,
            (BasisArg::Random, _) => BasisChoice::Random,
            (BasisArg::Supplied, Some(path)) => {
                BasisChoice::Supplied(PostselectionBasis::from_json_rows(&read(path)?).map_err(|e| e.to_string())?)
            }
            (BasisArg::Supplied, None) => return Err("--basis supplied requires --basis-file".into()),
        };
        let observable = match &self.observable {
            Some(path) => Some(CMatrix::from_json(&read(path)?).map_err(|e| e.to_string())?),
            None => None,
        };
        let seed = match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))?,
            Err(_) => self.seed,
        };
        let mut plan = SweepPlan::new(self.model, self.dim, seed, self.epsilons.clone());
        plan.delta = self.delta;
        plan.hbar = self.hbar;
        plan.xi = self.xi;
        plan.basis = basis;
        plan.observable = observable;
        plan.validate().map_err(|e| e.to_string())?;
        Ok(plan)
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn checks_output(checks: &[CheckResult], format: Format) -> String {
    match format {
        Format::Csv => checks_csv(checks),
        Format::Json => json(&checks),
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    let err = |e: weakval::experiment::ExperimentError| e.to_string();
    match cli.command {
        Command::Sweep(args) => {
            let report = run_sweep(&args.plan()?, args.jobs).map_err(err)?;
            let text = match args.format {
                Format::Csv => report.to_csv(),
                Format::Json => json(&report),
            };
            emit(&text, args.out.as_deref())?;
            Ok(true)
        }
        Command::Certify(args) => {
            let report = run_certify(&args.plan()?, args.xi).map_err(err)?;
            let text = match args.format {
                Format::Csv => report.record().to_csv(),
                Format::Json => json(&report.record()),
            };
            emit(&text, args.out.as_deref())?;
            if report.chain.violations > 0 {
                eprintln!("bound chain violated on {} of {} pairs", report.chain.violations, report.chain.pairs);
            }
            Ok(report.passes())
        }
        Command::Density { plan, index, space, points } => {
            let table = run_density(&plan.plan()?, index, space, points).map_err(err)?;
            let text = match plan.format {
                Format::Csv => table.to_csv(),
                Format::Json => json(&table),
            };
            emit(&text, plan.out.as_deref())?;
            Ok(true)
        }
        Command::Probs { plan, index } => {
            let rows = run_probs(&plan.plan()?, index).map_err(err)?;
            let text = match plan.format {
                Format::Csv => probs_csv(&rows),
                Format::Json => json(&rows),
            };
            emit(&text, plan.out.as_deref())?;
            Ok(true)
        }
        Command::Appendix { format, out } => {
            let checks = run_identity_checks().map_err(err)?;
            emit(&checks_output(&checks, format), out.as_deref())?;
            for c in checks.iter().filter(|c| !c.pass) {
                eprintln!("check failed: {} (max residual {:e})", c.name, c.max_residual);
            }
            Ok(all_pass(&checks))
        }
        Command::Verify(args) => {
            let checks = run_verify(&args.plan()?).map_err(err)?;
            emit(&checks_output(&checks, args.format), args.out.as_deref())?;
            for c in checks.iter().filter(|c| !c.pass) {
                eprintln!("check failed: {} (max residual {:e})", c.name, c.max_residual);
            }
            Ok(all_pass(&checks))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
