//! Seeded Monte Carlo sweeps over noise levels.
//!
//! Every trial derives its randomness from `(master_seed, sigma, trial)`
//! alone, so results do not depend on worker count or scheduling and any
//! trial can be replayed on its own with [`replay_trial`].

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::detect::{detect, CycleCuts, DetectParams, DetectorKind, Termination, DEFAULT_MAX_CUT_LENGTH, DEFAULT_MAX_ROUNDS};
use crate::error::{Error, Result};
use crate::frustration::{CycleSearch, DEFAULT_SUPPORT_TOL};
use crate::ip_oracle::{solve_ip_exhaustive, DEFAULT_TIE_TOL, MAX_ORACLE_SITES};
use crate::lp_build::{PerturbMagnitude, PerturbSpec, DEFAULT_PERTURB_SCALE};
use crate::lp_solve::SolverParams;
use crate::model::{build_grid_model, map_objective, snr_db, transmit, GridConfig, GridModel, SpinWord};

/// Grids up to this many sites get exhaustive MAP checks by default.
pub const AUTO_ORACLE_SITES: usize = 16;

const MAP_MATCH_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub n: usize,
    pub alpha: f64,
    pub sigmas: Vec<f64>,
    pub trials_per_sigma: usize,
    pub detectors: Vec<DetectorKind>,
    pub master_seed: u64,
    pub output_path: Option<PathBuf>,
    /// `None` enables the oracle exactly when `n² ≤ 16`.
    pub oracle_check: Option<bool>,
    pub solver: SolverParams,
    pub perturb: PerturbMagnitude,
    pub support_tol: f64,
    pub max_rounds: usize,
    pub cycle_search: CycleSearch,
    pub cycle_cuts: CycleCuts,
    pub max_cut_length: usize,
}

impl SweepConfig {
    pub fn new(n: usize, alpha: f64, sigmas: Vec<f64>, trials_per_sigma: usize) -> Self {
        SweepConfig {
            n,
            alpha,
            sigmas,
            trials_per_sigma,
            detectors: DetectorKind::ALL.to_vec(),
            master_seed: 0,
            output_path: None,
            oracle_check: None,
            solver: SolverParams::default(),
            perturb: PerturbMagnitude::Relative(DEFAULT_PERTURB_SCALE),
            support_tol: DEFAULT_SUPPORT_TOL,
            max_rounds: DEFAULT_MAX_ROUNDS,
            cycle_search: CycleSearch::default(),
            cycle_cuts: CycleCuts::default(),
            max_cut_length: DEFAULT_MAX_CUT_LENGTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_sigma == 0 {
            return Err(Error::InvalidConfig("at least one trial per sigma is required".into()));
        }
        if let Some(&s) = self.sigmas.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {s}")));
        }
        if self.oracle_enabled() && self.n * self.n > MAX_ORACLE_SITES {
            return Err(Error::OracleScaleExceeded {
                sites: self.n * self.n,
                max: MAX_ORACLE_SITES,
            });
        }
        GridConfig::uniform(self.n, self.alpha, 1.0).validate()
    }

    pub fn oracle_enabled(&self) -> bool {
        self.oracle_check.unwrap_or(self.n * self.n <= AUTO_ORACLE_SITES)
    }

    fn detect_params(&self, perturb_seed: u64) -> DetectParams {
        DetectParams {
            solver: self.solver.clone(),
            perturb: PerturbSpec {
                seed: perturb_seed,
                magnitude: self.perturb,
            },
            support_tol: self.support_tol,
            max_rounds: self.max_rounds,
            cycle_search: self.cycle_search,
            cycle_cuts: self.cycle_cuts,
            max_cut_length: self.max_cut_length,
        }
    }
}

/// Randomness of one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialSeeds {
    pub trial_seed: u64,
    pub noise_seed: u64,
    pub perturb_seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(master_seed: u64, sigma: f64, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ sigma.to_bits()) ^ trial as u64)
}

/// Draws the transmitted word, then the noise seed, then the perturbation
/// seed from the trial's generator.
pub fn draw_trial(master_seed: u64, sigma: f64, trial: usize, sites: usize) -> (SpinWord, TrialSeeds) {
    let seed = trial_seed(master_seed, sigma, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word = SpinWord::random(sites, &mut rng);
    let noise_seed = rng.random();
    let perturb_seed = rng.random();
    (
        word,
        TrialSeeds {
            trial_seed: seed,
            noise_seed,
            perturb_seed,
        },
    )
}

/// One detector's result on one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub sigma: f64,
    pub trial: usize,
    pub seeds: TrialSeeds,
    pub detector: DetectorKind,
    pub transmitted: SpinWord,
    pub decoded: Option<SpinWord>,
    pub integral: bool,
    /// Decoded word equals the transmitted one.
    pub correct: bool,
    /// Present for integral outcomes.
    pub bit_errors: Option<usize>,
    pub lp_value: f64,
    pub rounds: usize,
    pub triangles_added: usize,
    pub nnz: usize,
    pub termination: Termination,
    pub iterations: usize,
    pub map_certified: bool,
    /// Oracle verdict that the transmitted word is itself a MAP optimum;
    /// `None` without the oracle.
    pub transmitted_is_map: Option<bool>,
    pub lemma_violations: usize,
    pub unresolved_cycles: usize,
    pub monotone: bool,
    pub cut_rounds: usize,
}

impl TrialRecord {
    pub fn word_error(&self) -> bool {
        !self.correct
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub sigma: f64,
    pub snr_db: f64,
    pub detector: DetectorKind,
    pub trials: usize,
    pub word_errors: usize,
    pub wer: f64,
    pub fraction_fractional: f64,
    pub avg_nnz: f64,
    pub max_nnz: usize,
    /// Averaged over all trials, including those that added none.
    pub avg_triangles: f64,
    pub avg_rounds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub n: usize,
    pub alpha: f64,
    pub master_seed: u64,
    pub rows: Vec<SummaryRow>,
    /// Ordered by sigma, then trial, then detector.
    pub trials: Vec<TrialRecord>,
}

impl SweepReport {
    pub fn row(&self, sigma: f64, detector: DetectorKind) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.sigma == sigma && r.detector == detector)
    }

    pub fn records(&self, detector: DetectorKind) -> impl Iterator<Item = &TrialRecord> {
        self.trials.iter().filter(move |t| t.detector == detector)
    }
}

fn run_trial_on(config: &SweepConfig, model: &GridModel, sigma: f64, trial: usize) -> Result<Vec<TrialRecord>> {
    let (word, seeds) = draw_trial(config.master_seed, sigma, trial, model.num_sites());
    let obs = transmit(model, &word, seeds.noise_seed)?;
    let oracle = if config.oracle_enabled() {
        Some(solve_ip_exhaustive(model, &obs.field, DEFAULT_TIE_TOL)?)
    } else {
        None
    };
    let params = config.detect_params(seeds.perturb_seed);
    let transmitted_is_map = oracle
        .as_ref()
        .map(|ip| map_objective(model, &obs.field, &word) - ip.best_value <= DEFAULT_TIE_TOL);
    config
        .detectors
        .iter()
        .map(|&kind| {
            let out = detect(kind, model, &obs, &params)?;
            let map_certified = match (&oracle, &out.decoded) {
                (Some(ip), Some(d)) => (map_objective(model, &obs.field, d) - ip.best_value).abs() <= MAP_MATCH_TOL,
                _ => false,
            };
            Ok(TrialRecord {
                sigma,
                trial,
                seeds,
                detector: kind,
                correct: out.decoded.as_ref() == Some(&word),
                bit_errors: out.decoded.as_ref().map(|d| d.hamming(&word)),
                transmitted: word.clone(),
                decoded: out.decoded,
                integral: out.integral,
                lp_value: out.lp_value,
                rounds: out.rounds,
                triangles_added: out.triangles_added,
                nnz: out.nnz,
                termination: out.termination,
                iterations: out.iterations,
                map_certified,
                transmitted_is_map,
                lemma_violations: out.lemma_violations,
                unresolved_cycles: out.unresolved_cycles,
                monotone: out.monotone,
                cut_rounds: out.cut_rounds,
            })
        })
        .collect()
}

fn sigma_model(config: &SweepConfig, sigma: f64) -> Result<GridModel> {
    build_grid_model(GridConfig::uniform(config.n, config.alpha, sigma))
}

fn abort(config: &SweepConfig, sigma: f64, trial: usize, e: Error) -> Error {
    Error::TrialAborted {
        seed: config.master_seed,
        sigma,
        trial,
        source: Box::new(e),
    }
}

/// Runs one trial standalone, exactly as it runs inside a sweep.
pub fn replay_trial(config: &SweepConfig, sigma: f64, trial: usize) -> Result<Vec<TrialRecord>> {
    let model = sigma_model(config, sigma)?;
    run_trial_on(config, &model, sigma, trial).map_err(|e| abort(config, sigma, trial, e))
}

pub fn summarize(sigma: f64, alpha: f64, detector: DetectorKind, records: &[&TrialRecord]) -> SummaryRow {
    let trials = records.len();
    let t = trials.max(1) as f64;
    let word_errors = records.iter().filter(|r| r.word_error()).count();
    SummaryRow {
        sigma,
        snr_db: snr_db(alpha, sigma),
        detector,
        trials,
        word_errors,
        wer: word_errors as f64 / t,
        fraction_fractional: records.iter().filter(|r| !r.integral).count() as f64 / t,
        avg_nnz: records.iter().map(|r| r.nnz as f64).sum::<f64>() / t,
        max_nnz: records.iter().map(|r| r.nnz).max().unwrap_or(0),
        avg_triangles: records.iter().map(|r| r.triangles_added as f64).sum::<f64>() / t,
        avg_rounds: records.iter().map(|r| r.rounds as f64).sum::<f64>() / t,
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    run_sweep_with(config, |_| {})
}

/// Like [`run_sweep`], calling `on_sigma` with the summary rows of each
/// noise level as soon as it completes.
pub fn run_sweep_with(config: &SweepConfig, mut on_sigma: impl FnMut(&[SummaryRow])) -> Result<SweepReport> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    for &sigma in &config.sigmas {
        let model = sigma_model(config, sigma)?;
        let per_trial: Vec<Vec<TrialRecord>> = (0..config.trials_per_sigma)
            .into_par_iter()
            .map(|t| run_trial_on(config, &model, sigma, t).map_err(|e| abort(config, sigma, t, e)))
            .collect::<Result<_>>()?;
        let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
        let start = rows.len();
        for &kind in &config.detectors {
            let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.detector == kind).collect();
            rows.push(summarize(sigma, config.alpha, kind, &mine));
        }
        on_sigma(&rows[start..]);
        trials.extend(records);
    }
    let report = SweepReport {
        n: config.n,
        alpha: config.alpha,
        master_seed: config.master_seed,
        rows,
        trials,
    };
    if let Some(path) = &config.output_path {
        emit_csv(&report, path)?;
    }
    Ok(report)
}

pub const CSV_COLUMNS: [&str; 10] = [
    "sigma",
    "snr_db",
    "detector",
    "trials",
    "wer",
    "fraction_fractional",
    "avg_nnz",
    "max_nnz",
    "avg_triangles",
    "avg_rounds",
];

fn io_error(path: &Path, e: impl Into<std::io::Error>) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    io_error(path, std::io::Error::other(e))
}

/// Writes one row per (sigma, detector). Floats use shortest round-trip
/// formatting.
pub fn emit_csv(report: &SweepReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(CSV_COLUMNS).map_err(|e| csv_error(path, e))?;
    for r in &report.rows {
        w.write_record([
            r.sigma.to_string(),
            r.snr_db.to_string(),
            r.detector.to_string(),
            r.trials.to_string(),
            r.wer.to_string(),
            r.fraction_fractional.to_string(),
            r.avg_nnz.to_string(),
            r.max_nnz.to_string(),
            r.avg_triangles.to_string(),
            r.avg_rounds.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub const TRIAL_LOG_COLUMNS: [&str; 18] = [
    "sigma",
    "trial",
    "trial_seed",
    "detector",
    "integral",
    "correct",
    "bit_errors",
    "lp_value",
    "rounds",
    "triangles_added",
    "nnz",
    "termination",
    "iterations",
    "map_certified",
    "lemma_violations",
    "unresolved_cycles",
    "cut_rounds",
    "transmitted",
];

/// Writes the per-trial log, one row per (trial, detector).
pub fn emit_trial_log(report: &SweepReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(TRIAL_LOG_COLUMNS).map_err(|e| csv_error(path, e))?;
    for t in &report.trials {
        w.write_record([
            t.sigma.to_string(),
            t.trial.to_string(),
            t.seeds.trial_seed.to_string(),
            t.detector.to_string(),
            t.integral.to_string(),
            t.correct.to_string(),
            t.bit_errors.map(|b| b.to_string()).unwrap_or_default(),
            t.lp_value.to_string(),
            t.rounds.to_string(),
            t.triangles_added.to_string(),
            t.nnz.to_string(),
            t.termination.name().to_string(),
            t.iterations.to_string(),
            t.map_certified.to_string(),
            t.lemma_violations.to_string(),
            t.unresolved_cycles.to_string(),
            t.cut_rounds.to_string(),
            t.transmitted.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize) -> SweepConfig {
        let mut c = SweepConfig::new(3, 0.2, vec![0.3, 0.8], trials);
        c.master_seed = 42;
        c
    }

    #[test]
    fn seeds_depend_on_every_coordinate() {
        let base = trial_seed(1, 0.5, 3);
        assert_ne!(base, trial_seed(2, 0.5, 3));
        assert_ne!(base, trial_seed(1, 0.6, 3));
        assert_ne!(base, trial_seed(1, 0.5, 4));
        assert_eq!(base, trial_seed(1, 0.5, 3));
        let (w, s) = draw_trial(1, 0.5, 3, 81);
        assert_eq!(draw_trial(1, 0.5, 3, 81), (w, s));
        assert_ne!(s.noise_seed, s.perturb_seed);
    }

    #[test]
    fn sweeps_are_reproducible_and_replayable() {
        let c = small(4);
        let a = run_sweep(&c).unwrap();
        let b = run_sweep(&c).unwrap();
        assert_eq!(a, b);
        let replay = replay_trial(&c, 0.8, 2).unwrap();
        let logged: Vec<&TrialRecord> = a.trials.iter().filter(|t| t.sigma == 0.8 && t.trial == 2).collect();
        assert_eq!(replay.iter().collect::<Vec<_>>(), logged);
    }

    #[test]
    fn summary_counts_fractional_outputs_as_errors() {
        let c = small(6);
        let report = run_sweep(&c).unwrap();
        for row in &report.rows {
            let recs: Vec<&TrialRecord> = report
                .records(row.detector)
                .filter(|t| t.sigma == row.sigma)
                .collect();
            assert_eq!(row.trials, 6);
            let fractional = recs.iter().filter(|t| !t.integral).count();
            assert!(row.word_errors >= fractional);
            assert_eq!(row.wer, row.word_errors as f64 / 6.0);
        }
    }

    #[test]
    fn oracle_is_automatic_on_tiny_grids() {
        assert!(small(1).oracle_enabled());
        assert!(!SweepConfig::new(5, 0.2, vec![0.5], 1).oracle_enabled());
        let mut forced = SweepConfig::new(6, 0.2, vec![0.5], 1);
        forced.oracle_check = Some(true);
        assert!(matches!(forced.validate(), Err(Error::OracleScaleExceeded { .. })));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(SweepConfig::new(3, 0.2, vec![0.5], 0).validate().is_err());
        assert!(SweepConfig::new(3, 0.2, vec![0.0], 1).validate().is_err());
        assert!(SweepConfig::new(3, 0.2, vec![-1.0], 1).validate().is_err());
    }

    #[test]
    fn csv_layout() {
        let dir = std::env::temp_dir().join(format!("isi-lp-harness-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let mut c = small(2);
        c.detectors.clear();
        let empty = run_sweep(&c).unwrap();
        let path = dir.join("empty.csv");
        emit_csv(&empty, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().trim_end(), CSV_COLUMNS.join(","));

        let report = run_sweep(&small(2)).unwrap();
        emit_csv(&report, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 3);
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[0], "0.3");
        assert_eq!(row[2], "pairwise");
        assert_eq!(row[1].parse::<f64>().unwrap(), snr_db(0.2, 0.3));

        let log = dir.join("trials.csv");
        emit_trial_log(&report, &log).unwrap();
        assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 1 + 2 * 2 * 3);

        let bad = dir.join("missing").join("x.csv");
        assert!(matches!(emit_csv(&report, &bad), Err(Error::Io { .. })));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
