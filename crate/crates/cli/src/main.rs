use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use isi_lp::detect::{CycleCuts, DetectorKind, DEFAULT_MAX_CUT_LENGTH, DEFAULT_MAX_ROUNDS};
use isi_lp::frustration::WitnessSearch;
use isi_lp::harness::{emit_trial_log, run_sweep_with, SweepConfig};
use isi_lp::lp_build::{PerturbMagnitude, DEFAULT_PERTURB_SCALE};
use isi_lp::lp_solve::{SolverParams, DEFAULT_FEAS_TOL, DEFAULT_INT_TOL};
use lp_simplex::PivotRule;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Pivot {
    Devex,
    Dantzig,
    Bland,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Witness {
    Bfs,
    Dfs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cuts {
    Off,
    WhenStalled,
    Always,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Algorithm {
    Dual,
    Primal,
}

/// Word-error-rate sweep of LP detectors on a periodic 2D ISI channel.
#[derive(Debug, Parser)]
#[command(name = "isi-lp", version)]
struct Args {
    /// Grid side; the word has n² bits.
    #[arg(long, default_value_t = 9)]
    n: usize,
    /// Interference tap on the four neighbours.
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Comma-separated noise standard deviations.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")]
    sigma_list: Vec<f64>,
    /// Trials per noise level.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Comma-separated detectors: pairwise, block, pairwise_fc.
    #[arg(long, value_delimiter = ',', default_value = "pairwise,block,pairwise_fc")]
    detectors: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Summary CSV; printed to stdout only when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-trial CSV log.
    #[arg(long)]
    trial_log: Option<PathBuf>,
    /// Cycle rounds allowed to the pairwise_fc detector.
    #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
    max_rounds: usize,
    /// Witness path search for frustrated cycles.
    #[arg(long, value_enum, default_value_t = Witness::Bfs)]
    witness: Witness,
    /// When pairwise_fc also cuts cycles with violated cycle inequalities.
    #[arg(long, value_enum, default_value_t = Cuts::Always)]
    cycle_cuts: Cuts,
    /// Longest cycle, in sites, cut for a violated cycle inequality.
    #[arg(long, default_value_t = DEFAULT_MAX_CUT_LENGTH)]
    max_cut_length: usize,
    /// Absolute half-width of the objective perturbation; by default it is
    /// 1e-6 times the largest objective coefficient.
    #[arg(long)]
    perturb_delta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_FEAS_TOL)]
    feas_tol: f64,
    #[arg(long, default_value_t = DEFAULT_INT_TOL)]
    int_tol: f64,
    /// Check every trial against exhaustive MAP search (default: on when n² ≤ 16).
    #[arg(long)]
    oracle_check: Option<bool>,
    #[arg(long, value_enum, default_value_t = Pivot::Devex)]
    pivot_rule: Pivot,
    #[arg(long, value_enum, default_value_t = Algorithm::Dual)]
    algorithm: Algorithm,
    /// Simplex iteration cap per LP solve.
    #[arg(long, default_value_t = 1_000_000)]
    max_iterations: usize,
}

fn config(args: &Args) -> Result<SweepConfig, String> {
    let detectors = args
        .detectors
        .iter()
        .filter(|d| !d.trim().is_empty())
        .map(|d| d.parse::<DetectorKind>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut c = SweepConfig::new(args.n, args.alpha, args.sigma_list.clone(), args.trials);
    c.detectors = detectors;
    c.master_seed = args.seed;
    c.output_path = args.out.clone();
    c.oracle_check = args.oracle_check;
    c.max_rounds = args.max_rounds;
    c.cycle_search.witness = match args.witness {
        Witness::Dfs => WitnessSearch::DepthFirst,
        Witness::Bfs => WitnessSearch::Shortest,
    };
    c.cycle_cuts = match args.cycle_cuts {
        Cuts::Off => CycleCuts::Off,
        Cuts::WhenStalled => CycleCuts::WhenStalled,
        Cuts::Always => CycleCuts::Always,
    };
    c.max_cut_length = args.max_cut_length;
    c.perturb = match args.perturb_delta {
        Some(d) => PerturbMagnitude::Absolute(d),
        None => PerturbMagnitude::Relative(DEFAULT_PERTURB_SCALE),
    };
    c.solver = SolverParams {
        feas_tol: args.feas_tol,
        int_tol: args.int_tol,
        max_iterations: args.max_iterations,
        pivot_rule: match args.pivot_rule {
            Pivot::Devex => PivotRule::Devex,
            Pivot::Dantzig => PivotRule::Dantzig,
            Pivot::Bland => PivotRule::Bland,
        },
        algorithm: match args.algorithm {
            Algorithm::Dual => lp_simplex::Algorithm::Dual,
            Algorithm::Primal => lp_simplex::Algorithm::Primal,
        },
        ..SolverParams::default()
    };
    Ok(c)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    println!("sigma,snr_db,detector,trials,wer,fraction_fractional,avg_nnz,max_nnz,avg_triangles,avg_rounds");
    let result = run_sweep_with(&config, |rows| {
        for r in rows {
            println!(
                "{},{:.4},{},{},{},{},{},{},{},{}",
                r.sigma,
                r.snr_db,
                r.detector,
                r.trials,
                r.wer,
                r.fraction_fractional,
                r.avg_nnz,
                r.max_nnz,
                r.avg_triangles,
                r.avg_rounds
            );
        }
    });
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Some(path) = &args.trial_log {
        if let Err(e) = emit_trial_log(&report, path) {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    ExitCode::SUCCESS
}
