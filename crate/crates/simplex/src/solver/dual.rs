//! Bounded dual simplex.

use super::{Simplex, VarState, PhaseEnd, ZERO_TOL};
use crate::{Algorithm, Options, PivotRule, Solution, Status};

const MIN_WEIGHT: f64 = 1e-8;

#[derive(Clone, Copy, Debug)]
pub(super) struct Candidate {
    j: usize,
    a: f64,
    slack: f64,
    ratio: f64,
}

enum DualStep {
    Pivoted,
    Infeasible,
    /// The pivot element disagreed between row and column computations.
    Unstable,
}

impl<'a> Simplex<'a> {
    pub(super) fn run_dual(mut self) -> Solution {
        self.enter_phase(false);
        self.row_weights.fill(1.0);
        self.dual_reinvert();
        loop {
            if self.iterations >= self.opts.max_iterations {
                return self.finish(Status::IterationLimit);
            }
            if self.factor.num_etas() >= self.opts.refactor_interval
                || self.factor.eta_nnz() > 4 * self.factor.lu_nnz() + 10 * self.m
            {
                self.dual_reinvert();
            }
            let Some((r, up, delta)) = self.choose_leaving() else {
                if self.fresh {
                    break;
                }
                self.dual_reinvert();
                continue;
            };
            match self.dual_iterate(r, up, delta) {
                DualStep::Pivoted => {}
                DualStep::Unstable => self.dual_reinvert(),
                DualStep::Infeasible => {
                    if self.fresh {
                        return self.finish(Status::Infeasible);
                    }
                    self.dual_reinvert();
                }
            }
        }

        // Primal clean-up against the unshifted costs.
        self.phase_one_iterations = self.iterations;
        if self.shifted {
            self.cost[..self.n].copy_from_slice(&self.p.cost);
            self.shifted = false;
        }
        self.weights.fill(1.0);
        self.degenerate_run = 0;
        self.bland = self.opts.pivot_rule == PivotRule::Bland;
        match self.iterate() {
            PhaseEnd::Optimal => self.finish(Status::Optimal),
            PhaseEnd::Unbounded => self.finish(Status::Unbounded),
            PhaseEnd::IterationLimit => self.finish(Status::IterationLimit),
            PhaseEnd::Restart => {
                let opts = Options {
                    algorithm: Algorithm::Primal,
                    ..self.opts.clone()
                };
                let spent = self.iterations;
                let mut sol = Simplex::new(self.p, &opts).run();
                sol.iterations += spent;
                sol.phase_one_iterations += spent;
                sol
            }
        }
    }

    fn dual_reinvert(&mut self) {
        let before = self.basis.clone();
        // Artificials brought in by a repair may hold values; the dual
        // iterations drive them back out.
        let _ = self.reinvert();
        for (pos, (&old, &new)) in before.iter().zip(&self.basis).enumerate() {
            if old != new {
                self.row_weights[pos] = 1.0;
            }
        }
        self.restore_dual_feasibility();
    }

    /// Moves nonbasic boxed columns to the bound their reduced cost prefers;
    /// shifts the cost of columns that cannot move.
    fn restore_dual_feasibility(&mut self) {
        let tol = self.opts.opt_tol;
        let mut moved = false;
        for j in 0..self.n + self.m {
            let (l, u) = (self.lower[j], self.upper[j]);
            if self.state[j] == VarState::Basic || l == u {
                continue;
            }
            let dj = self.d[j];
            match self.state[j] {
                VarState::Lower if dj < -tol => {
                    if u.is_finite() {
                        self.state[j] = VarState::Upper;
                        self.x[j] = u;
                        moved = true;
                    } else {
                        self.cost[j] -= dj;
                        self.d[j] = 0.0;
                        self.shifted = true;
                    }
                }
                VarState::Upper if dj > tol => {
                    self.state[j] = VarState::Lower;
                    self.x[j] = l;
                    moved = true;
                }
                _ => {}
            }
        }
        if moved {
            self.compute_primal();
        }
    }

    /// Basis position with the largest weighted primal infeasibility, whether
    /// the leaving variable must move up, and the infeasibility.
    fn choose_leaving(&self) -> Option<(usize, bool, f64)> {
        let tol = self.opts.feas_tol;
        let mut best = None;
        let mut best_score = 0.0;
        for (pos, &v) in self.basis.iter().enumerate() {
            let xv = self.x[v];
            let (infeas, up) = if xv < self.lower[v] - tol {
                (self.lower[v] - xv, true)
            } else if xv > self.upper[v] + tol {
                (xv - self.upper[v], false)
            } else {
                continue;
            };
            let score = infeas * infeas / self.row_weights[pos];
            if score > best_score {
                best_score = score;
                best = Some((pos, up, infeas));
            }
        }
        best
    }

    fn dual_iterate(&mut self, r: usize, up: bool, delta: f64) -> DualStep {
        let ptol = self.opts.pivot_tol;
        let dtol = self.opts.opt_tol.max(1e-12);
        self.compute_pivot_row(r);

        let mut cands = std::mem::take(&mut self.candidates);
        let mut entries = std::mem::take(&mut self.row_entries);
        cands.clear();
        entries.clear();
        for k in 0..self.touched.len() {
            let j = self.touched[k];
            let a = self.acc[j];
            self.acc[j] = 0.0;
            self.in_touched[j] = false;
            if self.state[j] == VarState::Basic || a == 0.0 {
                continue;
            }
            entries.push((j, a));
            if self.lower[j] == self.upper[j] || a.abs() < ptol {
                continue;
            }
            let g = if up { -a } else { a };
            let slack = match self.state[j] {
                VarState::Lower if g > 0.0 => self.d[j].max(0.0),
                VarState::Upper if g < 0.0 => (-self.d[j]).max(0.0),
                _ => continue,
            };
            cands.push(Candidate {
                j,
                a,
                slack,
                ratio: slack / a.abs(),
            });
        }
        self.touched.clear();

        let outcome = self.dual_step(r, up, delta, &mut cands, &entries, dtol);
        self.candidates = cands;
        self.row_entries = entries;
        outcome
    }

    fn dual_step(
        &mut self,
        r: usize,
        up: bool,
        delta: f64,
        cands: &mut [Candidate],
        entries: &[(usize, f64)],
        dtol: f64,
    ) -> DualStep {
        if cands.is_empty() {
            return DualStep::Infeasible;
        }
        cands.sort_by(|x, y| x.ratio.total_cmp(&y.ratio).then(x.j.cmp(&y.j)));

        // Bound-flipping pass: step over breakpoints while the dual slope
        // stays positive.
        let mut slope = delta;
        let mut k = 0;
        while k < cands.len() {
            let c = cands[k];
            let drop = c.a.abs() * (self.upper[c.j] - self.lower[c.j]);
            if drop.is_finite() && slope - drop > 0.0 {
                slope -= drop;
                k += 1;
            } else {
                break;
            }
        }
        if k == cands.len() {
            return DualStep::Infeasible;
        }

        // Harris pass over the remaining breakpoints.
        let bound = cands[k..]
            .iter()
            .map(|c| (c.slack + dtol) / c.a.abs())
            .fold(f64::INFINITY, f64::min);
        let mut enter = cands[k];
        for c in &cands[k..] {
            if c.ratio <= bound && c.a.abs() > enter.a.abs() {
                enter = *c;
            }
        }
        let q = enter.j;

        self.alpha.fill(0.0);
        let mut col = std::mem::take(&mut self.alpha);
        self.for_col(q, |i, a| col[i] = a);
        self.factor.ftran(&mut col);
        self.alpha = col;
        let a_rq = self.alpha[r];
        if !self.fresh && (a_rq - enter.a).abs() > 1e-8 * (1.0 + enter.a.abs()) {
            return DualStep::Unstable;
        }

        // Flip the passed breakpoints and propagate to the basics.
        if k > 0 {
            self.work.fill(0.0);
            let mut work = std::mem::take(&mut self.work);
            for c in &cands[..k] {
                let j = c.j;
                let dx = if self.state[j] == VarState::Lower {
                    self.state[j] = VarState::Upper;
                    self.x[j] = self.upper[j];
                    self.upper[j] - self.lower[j]
                } else {
                    self.state[j] = VarState::Lower;
                    self.x[j] = self.lower[j];
                    self.lower[j] - self.upper[j]
                };
                self.for_col(j, |i, a| work[i] += a * dx);
            }
            self.factor.ftran(&mut work);
            for (pos, &w) in work.iter().enumerate() {
                if w != 0.0 {
                    let v = self.basis[pos];
                    self.x[v] -= w;
                }
            }
            self.work = work;
        }

        // Steepest-edge weight of the leaving row, and B⁻¹ρ for the update.
        let w_r: f64 = self.rho.iter().map(|v| v * v).sum();
        self.tau.copy_from_slice(&self.rho);
        let mut tau = std::mem::take(&mut self.tau);
        self.factor.ftran(&mut tau);

        // Primal step.
        let leaving = self.basis[r];
        let target = if up {
            self.lower[leaving]
        } else {
            self.upper[leaving]
        };
        let theta_p = (self.x[leaving] - target) / a_rq;
        if theta_p != 0.0 {
            for (pos, &a) in self.alpha.iter().enumerate() {
                if a != 0.0 {
                    let v = self.basis[pos];
                    self.x[v] -= theta_p * a;
                }
            }
        }
        self.x[q] += theta_p;
        self.x[leaving] = target;

        // Dual step.
        let theta_d = self.d[q] / a_rq;
        for &(j, a) in entries {
            self.d[j] -= theta_d * a;
        }
        self.d[leaving] = -theta_d;
        self.d[q] = 0.0;

        // Dual steepest-edge update.
        for (pos, &a) in self.alpha.iter().enumerate() {
            if pos == r || a.abs() <= ZERO_TOL {
                continue;
            }
            let kappa = a / a_rq;
            let w = self.row_weights[pos] + kappa * (kappa * w_r - 2.0 * tau[pos]);
            self.row_weights[pos] = w.max(MIN_WEIGHT);
        }
        self.row_weights[r] = (w_r / (a_rq * a_rq)).max(MIN_WEIGHT);
        self.tau = tau;

        self.state[leaving] = if up { VarState::Lower } else { VarState::Upper };
        self.basis[r] = q;
        self.state[q] = VarState::Basic;
        self.factor.push_eta(r, &self.alpha);
        self.iterations += 1;
        self.fresh = false;
        DualStep::Pivoted
    }
}
