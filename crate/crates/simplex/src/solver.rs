use crate::lu::{BasisColumns, BasisFactor};
use crate::{Algorithm, Options, PivotRule, Problem, Solution, Status};

mod dual;

const ZERO_TOL: f64 = 1e-13;
const MAX_RESTARTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic,
    Lower,
    Upper,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
    /// A singular basis was repaired with artificials that now carry
    /// nonzero values; phase one has to run again.
    Restart,
}

enum Step {
    Flip(f64),
    Pivot { pos: usize, t: f64, to_upper: bool },
    Unbounded,
}

pub(crate) struct Simplex<'a> {
    p: &'a Problem,
    opts: &'a Options,
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    factor: BasisFactor,
    d: Vec<f64>,
    weights: Vec<f64>,
    phase_one: bool,
    bland: bool,
    degenerate_run: usize,
    fresh: bool,
    iterations: usize,
    phase_one_iterations: usize,
    alpha: Vec<f64>,
    rho: Vec<f64>,
    acc: Vec<f64>,
    touched: Vec<usize>,
    in_touched: Vec<bool>,
    /// Dual steepest-edge weights `‖e_rᵀB⁻¹‖²`, by basis position.
    row_weights: Vec<f64>,
    /// Some structural costs were shifted to make the start dual feasible.
    shifted: bool,
    work: Vec<f64>,
    tau: Vec<f64>,
    candidates: Vec<dual::Candidate>,
    row_entries: Vec<(usize, f64)>,
}

impl<'a> Simplex<'a> {
    pub fn new(p: &'a Problem, opts: &'a Options) -> Self {
        let n = p.num_vars();
        let m = p.num_rows();

        let mut counts = vec![0usize; n + 1];
        for &j in &p.row_idx {
            counts[j + 1] += 1;
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let mut col_row = vec![0; p.row_idx.len()];
        let mut col_val = vec![0.0; p.row_idx.len()];
        for i in 0..m {
            for t in p.row_start[i]..p.row_start[i + 1] {
                let j = p.row_idx[t];
                col_row[fill[j]] = i;
                col_val[fill[j]] = p.row_val[t];
                fill[j] += 1;
            }
        }

        let mut lower = p.lower.clone();
        let mut upper = p.upper.clone();
        lower.extend(std::iter::repeat_n(0.0, m));
        upper.extend(std::iter::repeat_n(f64::INFINITY, m));
        let mut x: Vec<f64> = lower.clone();
        let mut residual = p.rhs.clone();
        for (i, r) in residual.iter_mut().enumerate() {
            for t in p.row_start[i]..p.row_start[i + 1] {
                *r -= p.row_val[t] * x[p.row_idx[t]];
            }
        }
        let art_sign: Vec<f64> = residual
            .iter()
            .map(|&r| if r >= 0.0 { 1.0 } else { -1.0 })
            .collect();
        for i in 0..m {
            x[n + i] = residual[i].abs();
        }
        let mut state = vec![VarState::Lower; n + m];
        for s in &mut state[n..] {
            *s = VarState::Basic;
        }

        Simplex {
            p,
            opts,
            n,
            m,
            col_start,
            col_row,
            col_val,
            art_sign,
            lower,
            upper,
            cost: vec![0.0; n + m],
            x,
            state,
            basis: (n..n + m).collect(),
            factor: BasisFactor::new(m),
            d: vec![0.0; n + m],
            weights: vec![1.0; n + m],
            phase_one: true,
            bland: opts.pivot_rule == PivotRule::Bland,
            degenerate_run: 0,
            fresh: false,
            iterations: 0,
            phase_one_iterations: 0,
            alpha: vec![0.0; m],
            rho: vec![0.0; m],
            acc: vec![0.0; n + m],
            touched: Vec::new(),
            in_touched: vec![false; n + m],
            row_weights: vec![1.0; m],
            shifted: false,
            work: vec![0.0; m],
            tau: vec![0.0; m],
            candidates: Vec::new(),
            row_entries: Vec::new(),
        }
    }

    pub fn run(self) -> Solution {
        match self.opts.algorithm {
            Algorithm::Dual => self.run_dual(),
            Algorithm::Primal => self.run_primal(),
        }
    }

    fn run_primal(mut self) -> Solution {
        let mut restarts = 0;
        loop {
            self.enter_phase(true);
            let end = self.iterate();
            self.phase_one_iterations = self.iterations;
            match end {
                PhaseEnd::IterationLimit => return self.finish(Status::IterationLimit),
                PhaseEnd::Unbounded | PhaseEnd::Restart => {
                    // Phase one is bounded below by zero; reaching here means
                    // the numerics broke down.
                    return self.finish(Status::IterationLimit);
                }
                PhaseEnd::Optimal => {}
            }
            let infeasibility = (self.n..self.n + self.m)
                .map(|j| self.x[j])
                .fold(0.0f64, f64::max);
            if infeasibility > self.opts.feas_tol {
                return self.finish(Status::Infeasible);
            }

            self.enter_phase(false);
            match self.iterate() {
                PhaseEnd::Optimal => return self.finish(Status::Optimal),
                PhaseEnd::Unbounded => return self.finish(Status::Unbounded),
                PhaseEnd::IterationLimit => return self.finish(Status::IterationLimit),
                PhaseEnd::Restart => {
                    restarts += 1;
                    if restarts > MAX_RESTARTS {
                        return self.finish(Status::IterationLimit);
                    }
                }
            }
        }
    }

    fn finish(self, status: Status) -> Solution {
        let x: Vec<f64> = self.x[..self.n].to_vec();
        Solution {
            status,
            objective: self.p.objective_value(&x),
            x,
            iterations: self.iterations,
            phase_one_iterations: self.phase_one_iterations,
        }
    }

    fn enter_phase(&mut self, phase_one: bool) {
        let (n, m) = (self.n, self.m);
        self.phase_one = phase_one;
        if phase_one {
            self.cost[..n].fill(0.0);
            self.cost[n..].fill(1.0);
            self.upper[n..].fill(f64::INFINITY);
        } else {
            self.cost[..n].copy_from_slice(&self.p.cost);
            self.cost[n..].fill(0.0);
            self.upper[n..].fill(0.0);
            for j in n..n + m {
                if self.state[j] == VarState::Upper {
                    self.state[j] = VarState::Lower;
                }
            }
        }
        self.weights.fill(1.0);
        self.degenerate_run = 0;
        self.bland = self.opts.pivot_rule == PivotRule::Bland;
    }

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for t in self.col_start[j]..self.col_start[j + 1] {
                f(self.col_row[t], self.col_val[t]);
            }
        } else {
            f(j - self.n, self.art_sign[j - self.n]);
        }
    }

    fn load_basis_columns(&self) -> BasisColumns {
        let mut cols = BasisColumns::with_capacity(self.m, 4 * self.m);
        for &j in &self.basis {
            self.for_col(j, |i, a| cols.push(i, a));
            cols.finish_column();
        }
        cols
    }

    /// Refactorizes the basis and recomputes primal values and reduced
    /// costs from scratch. Returns false when singular-basis repair left an
    /// artificial carrying a value that phase two cannot accept.
    fn reinvert(&mut self) -> bool {
        let mut repaired = false;
        loop {
            let cols = self.load_basis_columns();
            match self.factor.factorize(&cols) {
                Ok(()) => break,
                Err(singular) => {
                    repaired = true;
                    for (&pos, &row) in singular.positions.iter().zip(&singular.free_rows) {
                        let out = self.basis[pos];
                        let (l, u) = (self.lower[out], self.upper[out]);
                        if u.is_finite() && (u - self.x[out]).abs() < (self.x[out] - l).abs() {
                            self.state[out] = VarState::Upper;
                            self.x[out] = u;
                        } else {
                            self.state[out] = VarState::Lower;
                            self.x[out] = l;
                        }
                        let art = self.n + row;
                        self.basis[pos] = art;
                        self.state[art] = VarState::Basic;
                    }
                }
            }
        }
        self.compute_primal();
        if repaired {
            // Artificials re-entering the basis may need their sign flipped so
            // that their value is nonnegative.
            let mut flipped = false;
            for pos in 0..self.m {
                let j = self.basis[pos];
                if j >= self.n && self.x[j] < 0.0 {
                    self.art_sign[j - self.n] = -self.art_sign[j - self.n];
                    flipped = true;
                }
            }
            if flipped {
                let cols = self.load_basis_columns();
                // Sign flips of unit columns cannot introduce singularity.
                let _ = self.factor.factorize(&cols);
                self.compute_primal();
            }
        }
        self.compute_duals();
        self.fresh = true;
        if repaired && !self.phase_one {
            let worst = (self.n..self.n + self.m)
                .map(|j| self.x[j])
                .fold(0.0f64, f64::max);
            return worst <= self.opts.feas_tol;
        }
        true
    }

    fn compute_primal(&mut self) {
        let mut rhs = self.p.rhs.clone();
        for j in 0..self.n + self.m {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                let v = self.x[j];
                self.for_col(j, |i, a| rhs[i] -= a * v);
            }
        }
        self.factor.ftran(&mut rhs);
        for (pos, &j) in self.basis.iter().enumerate() {
            self.x[j] = rhs[pos];
        }
    }

    fn compute_duals(&mut self) {
        let mut y: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        self.factor.btran(&mut y);
        for j in 0..self.n + self.m {
            if self.state[j] == VarState::Basic {
                self.d[j] = 0.0;
                continue;
            }
            let mut dj = self.cost[j];
            self.for_col(j, |i, a| dj -= y[i] * a);
            self.d[j] = dj;
        }
    }

    fn price(&self) -> Option<usize> {
        let tol = self.opts.opt_tol;
        let mut best = None;
        let mut best_score = 0.0;
        for j in 0..self.n + self.m {
            let s = self.state[j];
            if s == VarState::Basic || self.lower[j] == self.upper[j] {
                continue;
            }
            let dj = self.d[j];
            let eligible = match s {
                VarState::Lower => dj < -tol,
                VarState::Upper => dj > tol,
                VarState::Basic => false,
            };
            if !eligible {
                continue;
            }
            if self.bland {
                return Some(j);
            }
            let score = match self.opts.pivot_rule {
                PivotRule::Dantzig => dj.abs(),
                _ => dj * dj / self.weights[j],
            };
            if score > best_score {
                best_score = score;
                best = Some(j);
            }
        }
        best
    }

    fn ratio_test(&self, q: usize, dir: f64) -> Step {
        let tol = self.opts.feas_tol;
        let ptol = self.opts.pivot_tol;
        let range = self.upper[q] - self.lower[q];

        if self.bland {
            let mut best_t = f64::INFINITY;
            let mut best: Option<(usize, bool)> = None;
            for (pos, &a) in self.alpha.iter().enumerate() {
                if a.abs() < ptol {
                    continue;
                }
                let v = self.basis[pos];
                let rate = -dir * a;
                let (room, to_upper) = if rate < 0.0 {
                    (self.x[v] - self.lower[v], false)
                } else if self.upper[v].is_finite() {
                    (self.upper[v] - self.x[v], true)
                } else {
                    continue;
                };
                let t = room.max(0.0) / rate.abs();
                let better = match best {
                    None => true,
                    Some((bp, _)) => {
                        t < best_t || (t == best_t && v < self.basis[bp])
                    }
                };
                if better {
                    best_t = t;
                    best = Some((pos, to_upper));
                }
            }
            if range.is_finite() && range <= best_t {
                return Step::Flip(range);
            }
            return match best {
                Some((pos, to_upper)) => Step::Pivot {
                    pos,
                    t: best_t,
                    to_upper,
                },
                None => Step::Unbounded,
            };
        }

        // Harris two-pass ratio test.
        let mut t_max = f64::INFINITY;
        for (pos, &a) in self.alpha.iter().enumerate() {
            if a.abs() < ptol {
                continue;
            }
            let v = self.basis[pos];
            let rate = -dir * a;
            let bound = if rate < 0.0 {
                (self.x[v] - self.lower[v] + tol) / -rate
            } else if self.upper[v].is_finite() {
                (self.upper[v] - self.x[v] + tol) / rate
            } else {
                continue;
            };
            t_max = t_max.min(bound);
        }
        if range.is_finite() && range <= t_max {
            return Step::Flip(range);
        }
        if t_max == f64::INFINITY {
            return Step::Unbounded;
        }
        let mut best: Option<(usize, f64, bool)> = None;
        let mut best_abs = 0.0;
        for (pos, &a) in self.alpha.iter().enumerate() {
            if a.abs() < ptol {
                continue;
            }
            let v = self.basis[pos];
            let rate = -dir * a;
            let (room, to_upper) = if rate < 0.0 {
                (self.x[v] - self.lower[v], false)
            } else if self.upper[v].is_finite() {
                (self.upper[v] - self.x[v], true)
            } else {
                continue;
            };
            let t = room.max(0.0) / rate.abs();
            if t <= t_max && a.abs() > best_abs {
                best_abs = a.abs();
                best = Some((pos, t, to_upper));
            }
        }
        match best {
            Some((pos, t, to_upper)) => Step::Pivot { pos, t, to_upper },
            None => Step::Unbounded,
        }
    }

    fn iterate(&mut self) -> PhaseEnd {
        if !self.reinvert() {
            return PhaseEnd::Restart;
        }
        loop {
            if self.iterations >= self.opts.max_iterations {
                return PhaseEnd::IterationLimit;
            }
            let stale = self.factor.num_etas() >= self.opts.refactor_interval
                || self.factor.eta_nnz() > 4 * self.factor.lu_nnz() + 10 * self.m;
            if stale && !self.reinvert() {
                return PhaseEnd::Restart;
            }
            let Some(q) = self.price() else {
                if self.fresh {
                    return PhaseEnd::Optimal;
                }
                if !self.reinvert() {
                    return PhaseEnd::Restart;
                }
                continue;
            };

            self.alpha.fill(0.0);
            let mut col = std::mem::take(&mut self.alpha);
            self.for_col(q, |i, a| col[i] = a);
            self.factor.ftran(&mut col);
            self.alpha = col;

            let dir = if self.state[q] == VarState::Lower {
                1.0
            } else {
                -1.0
            };
            let step = self.ratio_test(q, dir);
            self.iterations += 1;
            self.fresh = false;

            let t = match step {
                Step::Unbounded => return PhaseEnd::Unbounded,
                Step::Flip(t) | Step::Pivot { t, .. } => t,
            };
            if t != 0.0 {
                for pos in 0..self.m {
                    let a = self.alpha[pos];
                    if a != 0.0 {
                        let v = self.basis[pos];
                        self.x[v] -= dir * t * a;
                    }
                }
                self.x[q] += dir * t;
            }
            let improvement = (self.d[q] * t).abs();
            if improvement > ZERO_TOL * (1.0 + self.d[q].abs()) {
                self.degenerate_run = 0;
                if self.opts.pivot_rule != PivotRule::Bland {
                    self.bland = false;
                }
            } else {
                self.degenerate_run += 1;
                if self.degenerate_run > self.opts.stall_limit {
                    self.bland = true;
                }
            }

            match step {
                Step::Flip(_) => {
                    if self.state[q] == VarState::Lower {
                        self.state[q] = VarState::Upper;
                        self.x[q] = self.upper[q];
                    } else {
                        self.state[q] = VarState::Lower;
                        self.x[q] = self.lower[q];
                    }
                }
                Step::Pivot { pos, to_upper, .. } => self.pivot(q, pos, to_upper),
                Step::Unbounded => unreachable!(),
            }
        }
    }

    /// Row `r` of `B⁻¹A` over every column, accumulated in `acc` for the
    /// columns listed in `touched`; `rho` is left holding `B⁻ᵀ e_r`. The
    /// caller must reset `acc` and `in_touched` for the touched columns.
    fn compute_pivot_row(&mut self, r: usize) {
        let n = self.n;
        self.rho.fill(0.0);
        self.rho[r] = 1.0;
        let mut rho = std::mem::take(&mut self.rho);
        self.factor.btran(&mut rho);
        for (i, &ri) in rho.iter().enumerate() {
            if ri.abs() <= ZERO_TOL {
                continue;
            }
            for t in self.p.row_start[i]..self.p.row_start[i + 1] {
                let j = self.p.row_idx[t];
                if !self.in_touched[j] {
                    self.in_touched[j] = true;
                    self.touched.push(j);
                }
                self.acc[j] += ri * self.p.row_val[t];
            }
            let j = n + i;
            if !self.in_touched[j] {
                self.in_touched[j] = true;
                self.touched.push(j);
            }
            self.acc[j] += ri * self.art_sign[i];
        }
        self.rho = rho;
    }

    fn pivot(&mut self, q: usize, r: usize, to_upper: bool) {
        let leaving = self.basis[r];
        if to_upper {
            self.state[leaving] = VarState::Upper;
            self.x[leaving] = self.upper[leaving];
        } else {
            self.state[leaving] = VarState::Lower;
            self.x[leaving] = self.lower[leaving];
        }

        self.compute_pivot_row(r);

        let a_rq = self.alpha[r];
        let theta = self.d[q] / a_rq;
        let w_q = self.weights[q];
        for k in 0..self.touched.len() {
            let j = self.touched[k];
            let a = self.acc[j];
            self.acc[j] = 0.0;
            self.in_touched[j] = false;
            if j == q || j == leaving || self.state[j] == VarState::Basic {
                continue;
            }
            self.d[j] -= theta * a;
            let ratio = a / a_rq;
            let w = ratio * ratio * w_q;
            if w > self.weights[j] {
                self.weights[j] = w;
            }
        }
        self.touched.clear();
        self.d[leaving] = -theta;
        self.d[q] = 0.0;
        self.weights[leaving] = (w_q / (a_rq * a_rq)).max(1.0);

        self.basis[r] = q;
        self.state[q] = VarState::Basic;
        self.factor.push_eta(r, &self.alpha);
    }
}
