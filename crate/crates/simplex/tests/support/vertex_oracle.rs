//! Exhaustive basic-solution enumeration for small bounded LPs, shared by
//! the solver tests and the acceptance suite.

use lp_simplex::Problem;
use rand::Rng;

pub struct Dense {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                let (upper, lower) = a.split_at_mut(row);
                for (x, &p) in lower[0][col..k].iter_mut().zip(&upper[col][col..k]) {
                    *x -= f * p;
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|t| a[row][t] * x[t]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Indices of a maximal linearly independent subset of rows.
fn independent_rows(a: &[Vec<f64>]) -> Vec<usize> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut keep = Vec::new();
    for (i, row) in a.iter().enumerate() {
        let mut r = row.clone();
        for bvec in &basis {
            let lead = bvec.iter().position(|v| v.abs() > 1e-12).unwrap();
            let f = r[lead] / bvec[lead];
            for (x, y) in r.iter_mut().zip(bvec) {
                *x -= f * y;
            }
        }
        if r.iter().any(|v| v.abs() > 1e-9) {
            basis.push(r);
            keep.push(i);
        }
    }
    keep
}

pub fn brute_force_optimum(p: &Dense) -> Option<f64> {
    let n = p.c.len();
    let rows = independent_rows(&p.a);
    let r = rows.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != r {
            continue;
        }
        let basic: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        let nonbasic: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 0).collect();
        for bounds in 0u32..(1 << nonbasic.len()) {
            let mut x = vec![0.0; n];
            for (t, &j) in nonbasic.iter().enumerate() {
                x[j] = if bounds >> t & 1 == 1 { p.upper[j] } else { p.lower[j] };
            }
            let a_sq: Vec<Vec<f64>> = rows
                .iter()
                .map(|&i| basic.iter().map(|&j| p.a[i][j]).collect())
                .collect();
            let rhs: Vec<f64> = rows
                .iter()
                .map(|&i| p.b[i] - nonbasic.iter().map(|&j| p.a[i][j] * x[j]).sum::<f64>())
                .collect();
            let Some(xb) = solve_square(a_sq, rhs) else {
                break;
            };
            for (t, &j) in basic.iter().enumerate() {
                x[j] = xb[t];
            }
            let feasible = (0..n).all(|j| x[j] >= p.lower[j] - 1e-9 && x[j] <= p.upper[j] + 1e-9)
                && p.a.iter().zip(&p.b).all(|(row, &bi)| {
                    (row.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() - bi).abs() < 1e-8
                });
            if feasible {
                let val: f64 = p.c.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(val, |b: f64| b.min(val)));
            }
        }
    }
    best
}

pub fn random_instance<R: Rng>(rng: &mut R) -> Dense {
    let n = rng.random_range(2..=12);
    let m = rng.random_range(1..=10.min(n));
    let lower: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..1.0)).collect();
    let upper: Vec<f64> = lower
        .iter()
        .map(|&l| l + rng.random_range(0.0..3.0))
        .collect();
    let x0: Vec<f64> = (0..n)
        .map(|j| rng.random_range(lower[j]..=upper[j]))
        .collect();
    let mut a: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| {
                    if rng.random_bool(0.4) {
                        0.0
                    } else {
                        // Small integers make degenerate vertices common.
                        rng.random_range(-3i32..=3) as f64
                    }
                })
                .collect()
        })
        .collect();
    if m >= 2 && rng.random_bool(0.2) {
        // Redundant row.
        let (r0, r1) = (a[0].clone(), a[1].clone());
        a[m - 1] = r0.iter().zip(&r1).map(|(x, y)| x + y).collect();
    }
    let b: Vec<f64> = a
        .iter()
        .map(|row| row.iter().zip(&x0).map(|(a, v)| a * v).sum())
        .collect();
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    Dense {
        a,
        b,
        c,
        lower,
        upper,
    }
}

pub fn to_problem(d: &Dense) -> Problem {
    let mut p = Problem::new();
    for j in 0..d.c.len() {
        p.add_var(d.c[j], d.lower[j], d.upper[j]);
    }
    for (row, &bi) in d.a.iter().zip(&d.b) {
        let coeffs: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
        p.add_eq_row(&coeffs, bi).unwrap();
    }
    p
}
