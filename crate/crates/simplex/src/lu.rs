//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! The basis is factorized left-looking (Gilbert–Peierls): columns are
//! processed in ascending nonzero order, each is reduced against the partial
//! `L` through a sparse triangular solve driven by a depth-first reach, and
//! the pivot row is chosen by threshold partial pivoting that prefers sparse
//! rows. Pivots performed after a factorization are appended as eta columns
//! and folded back in on the next refactorization.

/// Columns handed to the factorization, one per basis position.
pub(crate) struct BasisColumns {
    pub start: Vec<usize>,
    pub rows: Vec<usize>,
    pub vals: Vec<f64>,
}

impl BasisColumns {
    pub fn with_capacity(m: usize, nnz: usize) -> Self {
        let mut start = Vec::with_capacity(m + 1);
        start.push(0);
        BasisColumns {
            start,
            rows: Vec::with_capacity(nnz),
            vals: Vec::with_capacity(nnz),
        }
    }

    pub fn push(&mut self, row: usize, val: f64) {
        self.rows.push(row);
        self.vals.push(val);
    }

    pub fn finish_column(&mut self) {
        self.start.push(self.rows.len());
    }

    fn len(&self) -> usize {
        self.start.len() - 1
    }

    fn column(&self, k: usize) -> (&[usize], &[f64]) {
        let r = self.start[k]..self.start[k + 1];
        (&self.rows[r.clone()], &self.vals[r])
    }
}

/// Basis positions whose columns were numerically dependent, together with
/// the rows left without a pivot. The caller substitutes unit columns.
#[derive(Debug)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub free_rows: Vec<usize>,
}

const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;
const NONE: usize = usize::MAX;

struct Eta {
    pos: usize,
    pivot: f64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

pub(crate) struct BasisFactor {
    m: usize,
    // L, unit lower triangular; column k stores multipliers by original row.
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    // U, column k stores off-diagonal entries keyed by step index.
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
    pivot_row: Vec<usize>,
    row_step: Vec<usize>,
    col_of_step: Vec<usize>,
    etas: Vec<Eta>,
    eta_nnz: usize,
    work: Vec<f64>,
    step_work: Vec<f64>,
}

impl BasisFactor {
    pub fn new(m: usize) -> Self {
        BasisFactor {
            m,
            l_start: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            u_start: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
            u_diag: Vec::new(),
            pivot_row: Vec::new(),
            row_step: Vec::new(),
            col_of_step: Vec::new(),
            etas: Vec::new(),
            eta_nnz: 0,
            work: vec![0.0; m],
            step_work: vec![0.0; m],
        }
    }

    pub fn num_etas(&self) -> usize {
        self.etas.len()
    }

    pub fn eta_nnz(&self) -> usize {
        self.eta_nnz
    }

    pub fn lu_nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.m
    }

    /// Factorizes the basis from scratch, discarding all etas.
    pub fn factorize(&mut self, cols: &BasisColumns) -> Result<(), Singular> {
        let m = self.m;
        debug_assert_eq!(cols.len(), m);
        self.etas.clear();
        self.eta_nnz = 0;
        self.l_start.clear();
        self.l_start.push(0);
        self.l_idx.clear();
        self.l_val.clear();
        self.u_start.clear();
        self.u_start.push(0);
        self.u_idx.clear();
        self.u_val.clear();
        self.u_diag.clear();
        self.pivot_row.clear();
        self.col_of_step.clear();
        self.row_step.clear();
        self.row_step.resize(m, NONE);

        let mut row_count = vec![0usize; m];
        for &r in &cols.rows {
            row_count[r] += 1;
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&k| (cols.start[k + 1] - cols.start[k], k));

        let mut x = vec![0.0f64; m];
        let mut mark = vec![NONE; m];
        let mut pattern: Vec<usize> = Vec::new();
        let mut topo: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut singular_positions = Vec::new();

        for (stamp, &pos) in order.iter().enumerate() {
            let (rows, vals) = cols.column(pos);
            pattern.clear();
            topo.clear();
            // Symbolic reach through the columns of L built so far.
            for &r0 in rows {
                if mark[r0] == stamp {
                    continue;
                }
                mark[r0] = stamp;
                pattern.push(r0);
                stack.push((r0, 0));
                while let Some(&mut (r, ref mut child)) = stack.last_mut() {
                    let step = self.row_step[r];
                    if step == NONE {
                        stack.pop();
                        continue;
                    }
                    let (lo, hi) = (self.l_start[step], self.l_start[step + 1]);
                    if lo + *child < hi {
                        let next = self.l_idx[lo + *child];
                        *child += 1;
                        if mark[next] != stamp {
                            mark[next] = stamp;
                            pattern.push(next);
                            stack.push((next, 0));
                        }
                    } else {
                        topo.push(step);
                        stack.pop();
                    }
                }
            }
            for (&r, &v) in rows.iter().zip(vals) {
                x[r] += v;
            }
            // Numeric solve in topological order (reverse postorder).
            for &step in topo.iter().rev() {
                let v = x[self.pivot_row[step]];
                if v != 0.0 {
                    for t in self.l_start[step]..self.l_start[step + 1] {
                        x[self.l_idx[t]] -= self.l_val[t] * v;
                    }
                }
            }

            let mut max_abs = 0.0f64;
            for &r in &pattern {
                if self.row_step[r] == NONE {
                    max_abs = max_abs.max(x[r].abs());
                }
            }
            if max_abs < SINGULAR_TOL {
                for &r in &pattern {
                    x[r] = 0.0;
                }
                singular_positions.push(pos);
                continue;
            }
            let mut best = NONE;
            for &r in &pattern {
                if self.row_step[r] != NONE || x[r].abs() < PIVOT_THRESHOLD * max_abs {
                    continue;
                }
                if best == NONE
                    || row_count[r] < row_count[best]
                    || (row_count[r] == row_count[best] && x[r].abs() > x[best].abs())
                {
                    best = r;
                }
            }
            let step = self.pivot_row.len();
            let piv = x[best];
            for &r in &pattern {
                let v = x[r];
                x[r] = 0.0;
                if r == best || v.abs() <= DROP_TOL {
                    continue;
                }
                let s = self.row_step[r];
                if s != NONE {
                    self.u_idx.push(s);
                    self.u_val.push(v);
                } else {
                    self.l_idx.push(r);
                    self.l_val.push(v / piv);
                }
            }
            self.u_diag.push(piv);
            self.u_start.push(self.u_idx.len());
            self.l_start.push(self.l_idx.len());
            self.pivot_row.push(best);
            self.row_step[best] = step;
            self.col_of_step.push(pos);
        }

        if singular_positions.is_empty() {
            Ok(())
        } else {
            let free_rows = (0..m).filter(|&r| self.row_step[r] == NONE).collect();
            Err(Singular {
                positions: singular_positions,
                free_rows,
            })
        }
    }

    /// Solves `B x = rhs` in place; `rhs` is indexed by row on entry and by
    /// basis position on exit.
    pub fn ftran(&mut self, rhs: &mut [f64]) {
        let m = self.m;
        let w = &mut self.work;
        w.copy_from_slice(rhs);
        for k in 0..m {
            let v = w[self.pivot_row[k]];
            if v != 0.0 {
                for t in self.l_start[k]..self.l_start[k + 1] {
                    w[self.l_idx[t]] -= self.l_val[t] * v;
                }
            }
        }
        let y = &mut self.step_work;
        for k in 0..m {
            y[k] = w[self.pivot_row[k]];
        }
        for k in (0..m).rev() {
            let z = y[k] / self.u_diag[k];
            y[k] = z;
            if z != 0.0 {
                for t in self.u_start[k]..self.u_start[k + 1] {
                    y[self.u_idx[t]] -= self.u_val[t] * z;
                }
            }
        }
        for k in 0..m {
            rhs[self.col_of_step[k]] = y[k];
        }
        for eta in &self.etas {
            let xr = rhs[eta.pos] / eta.pivot;
            rhs[eta.pos] = xr;
            if xr != 0.0 {
                for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                    rhs[i] -= a * xr;
                }
            }
        }
    }

    /// Solves `Bᵀ y = rhs` in place; `rhs` is indexed by basis position on
    /// entry and by row on exit.
    pub fn btran(&mut self, rhs: &mut [f64]) {
        let m = self.m;
        for eta in self.etas.iter().rev() {
            let mut s = rhs[eta.pos];
            for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                s -= a * rhs[i];
            }
            rhs[eta.pos] = s / eta.pivot;
        }
        let w = &mut self.step_work;
        for k in 0..m {
            let mut s = rhs[self.col_of_step[k]];
            for t in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[t] * w[self.u_idx[t]];
            }
            w[k] = s / self.u_diag[k];
        }
        for k in (0..m).rev() {
            let mut s = w[k];
            for t in self.l_start[k]..self.l_start[k + 1] {
                s -= self.l_val[t] * rhs[self.l_idx[t]];
            }
            rhs[self.pivot_row[k]] = s;
        }
    }

    /// Records that position `pos` now holds the column whose FTRAN image is
    /// `alpha`.
    pub fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a.abs() > DROP_TOL {
                idx.push(i);
                val.push(a);
            }
        }
        self.eta_nnz += idx.len() + 1;
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            idx,
            val,
        });
    }
}
