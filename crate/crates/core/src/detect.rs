//! The three LP detectors.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frustration::{
    build_implication_graph, extract_supports, find_frustrated_cycles_with, triangulate_cycle,
    violated_cycle_inequalities, CycleSearch, FrustratedCycle, SupportSystem, DEFAULT_SUPPORT_TOL,
};
use crate::lp_build::{build_block_lp, build_pairwise_lp, BeliefLp, PerturbSpec};
use crate::lp_solve::{solve, LpSolution, LpStatus, SolverParams};
use crate::model::{GridModel, Observation, SpinWord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    Pairwise,
    Block,
    PairwiseFc,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 3] = [DetectorKind::Pairwise, DetectorKind::Block, DetectorKind::PairwiseFc];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Pairwise => "pairwise",
            DetectorKind::Block => "block",
            DetectorKind::PairwiseFc => "pairwise_fc",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "pairwise" => Ok(DetectorKind::Pairwise),
            "block" => Ok(DetectorKind::Block),
            "pairwise_fc" | "fc" => Ok(DetectorKind::PairwiseFc),
            other => Err(Error::InvalidConfig(format!("unknown detector {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectParams {
    pub solver: SolverParams,
    /// Drawn once per instance and kept across cycle rounds.
    pub perturb: PerturbSpec,
    pub support_tol: f64,
    pub max_rounds: usize,
    pub cycle_search: CycleSearch,
    pub cycle_cuts: CycleCuts,
    /// Longest cycle, in sites, cut for a violated cycle inequality.
    pub max_cut_length: usize,
}

/// When pairwise_fc also cuts cycles whose cycle inequality the edge
/// beliefs violate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CycleCuts {
    Off,
    /// Only in rounds where the supports show no frustration.
    WhenStalled,
    /// Every round, alongside the frustrated cycles.
    #[default]
    Always,
}

/// Minimum violation for a cycle inequality to count.
pub const CYCLE_VIOLATION_TOL: f64 = 1e-6;

/// Matches the five sites of a block clique.
pub const DEFAULT_MAX_CUT_LENGTH: usize = 5;

pub const DEFAULT_MAX_ROUNDS: usize = 10;

impl Default for DetectParams {
    fn default() -> Self {
        DetectParams {
            solver: SolverParams::default(),
            perturb: PerturbSpec::none(),
            support_tol: DEFAULT_SUPPORT_TOL,
            max_rounds: DEFAULT_MAX_ROUNDS,
            cycle_search: CycleSearch::default(),
            cycle_cuts: CycleCuts::default(),
            max_cut_length: DEFAULT_MAX_CUT_LENGTH,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Termination {
    Integral,
    /// Fractional output of a single-shot detector.
    Fractional,
    /// Fractional with no frustrated cycle to cut, or only cycles whose
    /// triangles are already installed.
    Stalled,
    RoundLimit,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Integral => "integral",
            Termination::Fractional => "fractional",
            Termination::Stalled => "stalled",
            Termination::RoundLimit => "round_limit",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorOutcome {
    pub detector: DetectorKind,
    /// Present exactly when `integral`.
    pub decoded: Option<SpinWord>,
    pub integral: bool,
    pub lp_value: f64,
    /// Cycle rounds (re-solves); zero for single-shot detectors.
    pub rounds: usize,
    pub triangles_added: usize,
    pub nnz: usize,
    /// Set by callers that checked `decoded` against an exact oracle.
    pub map_certified: bool,
    pub termination: Termination,
    pub iterations: usize,
    /// Solves that came out integral yet still had frustrated cycles.
    pub lemma_violations: usize,
    /// Cycles cut in one round whose triangulated supports were still
    /// unsatisfiable after the re-solve.
    pub unresolved_cycles: usize,
    /// LP value never decreased across rounds.
    pub monotone: bool,
    /// Rounds that cut at least one cycle for a violated cycle inequality.
    pub cut_rounds: usize,
}

fn checked_solve(lp: &BeliefLp, params: &DetectParams) -> Result<LpSolution> {
    let sol = solve(lp, &params.solver)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver {
            status: sol.status,
            iterations: sol.iterations,
        });
    }
    Ok(sol)
}

fn cycles_of(
    lp: &BeliefLp,
    sol: &LpSolution,
    support_tol: f64,
    search: CycleSearch,
) -> (Vec<FrustratedCycle>, SupportSystem) {
    let supports = extract_supports(sol, lp, support_tol);
    let graph = build_implication_graph(lp.num_sites(), &supports);
    (find_frustrated_cycles_with(&graph, search), graph.system().clone())
}

fn site_set(cycle: &FrustratedCycle) -> Vec<usize> {
    let mut s = cycle.variables.clone();
    s.sort_unstable();
    s
}

fn lemma_violated(lp: &BeliefLp, sol: &LpSolution, params: &DetectParams) -> bool {
    sol.is_integral && !cycles_of(lp, sol, params.support_tol, params.cycle_search).0.is_empty()
}

fn single_shot(kind: DetectorKind, lp: BeliefLp, params: &DetectParams) -> Result<DetectorOutcome> {
    let sol = checked_solve(&lp, params)?;
    Ok(DetectorOutcome {
        detector: kind,
        integral: sol.is_integral,
        lp_value: sol.value,
        rounds: 0,
        triangles_added: 0,
        nnz: lp.nnz(),
        map_certified: false,
        termination: if sol.is_integral {
            Termination::Integral
        } else {
            Termination::Fractional
        },
        iterations: sol.iterations,
        lemma_violations: usize::from(lemma_violated(&lp, &sol, params)),
        unresolved_cycles: 0,
        monotone: true,
        cut_rounds: 0,
        decoded: sol.word,
    })
}

pub fn detect_pairwise(model: &GridModel, obs: &Observation, params: &DetectParams) -> Result<DetectorOutcome> {
    let lp = build_pairwise_lp(model, &obs.field, &params.perturb);
    single_shot(DetectorKind::Pairwise, lp, params)
}

pub fn detect_block(model: &GridModel, obs: &Observation, params: &DetectParams) -> Result<DetectorOutcome> {
    let lp = build_block_lp(model, &obs.field, &params.perturb)?;
    single_shot(DetectorKind::Block, lp, params)
}

/// Pairwise LP tightened with triangles along frustrated cycles, and per
/// `cycle_cuts` along cycles with violated cycle inequalities, until the
/// output is integral, no cycle can be cut, or `max_rounds` re-solves ran.
pub fn detect_pairwise_fc(model: &GridModel, obs: &Observation, params: &DetectParams) -> Result<DetectorOutcome> {
    let tol = params.support_tol;
    let mut lp = build_pairwise_lp(model, &obs.field, &params.perturb);
    let mut sol = checked_solve(&lp, params)?;
    let mut iterations = sol.iterations;
    let mut rounds = 0;
    let mut triangles_added = 0;
    let mut lemma_violations = 0;
    let mut unresolved_cycles = 0;
    let mut monotone = true;
    let mut cut_rounds = 0;
    let mut pending: Vec<FrustratedCycle> = Vec::new();

    let termination = loop {
        let (mut cycles, system) = cycles_of(&lp, &sol, tol, params.cycle_search);
        if sol.is_integral && !cycles.is_empty() {
            lemma_violations += 1;
        }
        unresolved_cycles += pending
            .iter()
            .filter(|c| !system.fan_satisfiable(&c.variables))
            .count();
        if sol.is_integral {
            break Termination::Integral;
        }
        if rounds >= params.max_rounds {
            break Termination::RoundLimit;
        }
        let cut = match params.cycle_cuts {
            CycleCuts::Off => false,
            CycleCuts::WhenStalled => cycles.is_empty(),
            CycleCuts::Always => true,
        };
        if cut {
            let mut sets: HashSet<Vec<usize>> = cycles.iter().map(site_set).collect();
            let before = cycles.len();
            cycles.extend(
                violated_cycle_inequalities(&lp, &sol.beliefs, CYCLE_VIOLATION_TOL, params.max_cut_length)
                    .into_iter()
                    .filter(|c| sets.insert(site_set(c))),
            );
            if cycles.len() > before {
                cut_rounds += 1;
            }
        }
        if cycles.is_empty() {
            break Termination::Stalled;
        }
        let mut triangles = Vec::new();
        for c in &cycles {
            triangles.extend(triangulate_cycle(c)?);
        }
        let added = lp.add_triangle_cliques(&triangles)?;
        if added == 0 {
            break Termination::Stalled;
        }
        triangles_added += added;
        rounds += 1;
        let next = checked_solve(&lp, params)?;
        iterations += next.iterations;
        if next.value < sol.value - params.solver.feas_tol * (1.0 + sol.value.abs()) {
            monotone = false;
        }
        sol = next;
        pending = cycles;
    };

    Ok(DetectorOutcome {
        detector: DetectorKind::PairwiseFc,
        integral: sol.is_integral,
        lp_value: sol.value,
        rounds,
        triangles_added,
        nnz: lp.nnz(),
        map_certified: false,
        termination,
        iterations,
        lemma_violations,
        unresolved_cycles,
        monotone,
        cut_rounds,
        decoded: sol.word,
    })
}

pub fn detect(kind: DetectorKind, model: &GridModel, obs: &Observation, params: &DetectParams) -> Result<DetectorOutcome> {
    match kind {
        DetectorKind::Pairwise => detect_pairwise(model, obs, params),
        DetectorKind::Block => detect_block(model, obs, params),
        DetectorKind::PairwiseFc => detect_pairwise_fc(model, obs, params),
    }
}
