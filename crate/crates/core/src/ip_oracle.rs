//! Exact MAP detection by exhaustive enumeration for small grids.

use crate::error::{Error, Result};
use crate::model::{map_objective, GridModel, SpinWord};

/// Largest number of sites the exhaustive oracle accepts.
pub const MAX_ORACLE_SITES: usize = 25;

pub const DEFAULT_TIE_TOL: f64 = 1e-9;

// Incremental updates drift; the objective is recomputed exactly this often.
const RESYNC_INTERVAL: u64 = 1 << 12;

#[derive(Clone, Debug, PartialEq)]
pub struct IpResult {
    pub best_word: SpinWord,
    pub best_value: f64,
    /// Words whose objective lies within the tie tolerance of `best_value`.
    pub num_optima: u64,
}

/// Minimizes the MAP objective over all `2^{N²}` words.
///
/// Words are visited in Gray-code order so each step flips one bit and the
/// objective is updated from that bit's local field in O(degree).
pub fn solve_ip_exhaustive(model: &GridModel, field: &[f64], tie_tol: f64) -> Result<IpResult> {
    let sites = model.num_sites();
    if sites > MAX_ORACLE_SITES {
        return Err(Error::OracleScaleExceeded {
            sites,
            max: MAX_ORACLE_SITES,
        });
    }
    assert_eq!(field.len(), sites);
    let neighbors: Vec<Vec<(usize, f64)>> = (0..sites)
        .map(|i| model.r_matrix().row(i).filter(|&(j, _)| j != i).collect())
        .collect();

    // First pass: global minimum.
    let mut best_value = f64::INFINITY;
    let mut best_code = 0u64;
    enumerate(model, field, &neighbors, |code, value| {
        if value < best_value {
            best_value = value;
            best_code = code;
        }
    });
    let best_word = SpinWord::from_bits(sites, best_code);
    let best_value = map_objective(model, field, &best_word);

    // Second pass: count ties against the settled minimum.
    let mut num_optima = 0u64;
    enumerate(model, field, &neighbors, |_, value| {
        if value - best_value <= tie_tol {
            num_optima += 1;
        }
    });

    Ok(IpResult {
        best_word,
        best_value,
        num_optima,
    })
}

fn enumerate(
    model: &GridModel,
    field: &[f64],
    neighbors: &[Vec<(usize, f64)>],
    mut visit: impl FnMut(u64, f64),
) {
    let sites = field.len();
    let mut word = SpinWord::all_up(sites);
    let mut spins = vec![1.0f64; sites];
    // local[i] = Σ_{j≠i} R_ij x_j
    let mut local: Vec<f64> = neighbors
        .iter()
        .map(|nb| nb.iter().map(|&(_, r)| r).sum())
        .collect();
    let mut value = map_objective(model, field, &word);
    let mut code = 0u64;
    visit(code, value);
    let total = 1u64 << sites;
    for step in 1..total {
        let bit = step.trailing_zeros() as usize;
        let xi = spins[bit];
        value += 2.0 * xi * (field[bit] - local[bit]);
        spins[bit] = -xi;
        word.flip(bit);
        for &(j, r) in &neighbors[bit] {
            local[j] -= 2.0 * r * xi;
        }
        code ^= 1 << bit;
        if step % RESYNC_INTERVAL == 0 {
            value = map_objective(model, field, &word);
        }
        visit(code, value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_grid_model, transmit, GridConfig};

    #[test]
    fn decoupled_bits_follow_field_sign() {
        let m = build_grid_model(GridConfig::uniform(3, 0.0, 0.5)).unwrap();
        let field = vec![0.3, -1.0, 2.0, -0.1, 0.5, 0.7, -0.9, 1.1, -2.5];
        let res = solve_ip_exhaustive(&m, &field, DEFAULT_TIE_TOL).unwrap();
        let expect: Vec<i8> = field.iter().map(|&h| if h > 0.0 { 1 } else { -1 }).collect();
        assert_eq!(res.best_word.spins(), &expect[..]);
        assert_eq!(res.num_optima, 1);
    }

    #[test]
    fn matches_independent_brute_force() {
        let m = build_grid_model(GridConfig::uniform(3, 0.2, 0.3)).unwrap();
        let r = m.r_matrix().to_dense();
        for seed in 0..5u64 {
            let word = SpinWord::from_bits(9, 0x1b3 ^ seed);
            let obs = transmit(&m, &word, 100 + seed).unwrap();
            let res = solve_ip_exhaustive(&m, &obs.field, DEFAULT_TIE_TOL).unwrap();
            // Different loop order: descending bit codes, full pair sum halved.
            let mut min = f64::INFINITY;
            for code in (0..512u64).rev() {
                let x: Vec<f64> = (0..9).map(|i| if code >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
                let mut v = 0.0;
                for j in 0..9 {
                    for i in 0..9 {
                        if i != j {
                            v += 0.5 * r[i][j] * x[i] * x[j];
                        }
                    }
                }
                for i in 0..9 {
                    v -= obs.field[i] * x[i];
                }
                min = min.min(v);
            }
            assert!((res.best_value - min).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_field_has_flip_symmetric_optima() {
        let m = build_grid_model(GridConfig::uniform(2, 0.2, 0.5)).unwrap();
        let res = solve_ip_exhaustive(&m, &[0.0; 4], DEFAULT_TIE_TOL).unwrap();
        assert!(res.num_optima >= 2);
        let mirrored = map_objective(&m, &[0.0; 4], &res.best_word.negated());
        assert!((mirrored - res.best_value).abs() < 1e-12);
    }

    #[test]
    fn rejects_large_grids() {
        let m = build_grid_model(GridConfig::uniform(6, 0.2, 0.5)).unwrap();
        assert!(matches!(
            solve_ip_exhaustive(&m, &[0.0; 36], DEFAULT_TIE_TOL),
            Err(Error::OracleScaleExceeded { sites: 36, max: 25 })
        ));
    }

    #[test]
    fn best_value_bounds_every_word() {
        let m = build_grid_model(GridConfig::uniform(4, 0.3, 0.6)).unwrap();
        let obs = transmit(&m, &SpinWord::from_bits(16, 0xbeef), 8).unwrap();
        let res = solve_ip_exhaustive(&m, &obs.field, DEFAULT_TIE_TOL).unwrap();
        for code in (0..1u64 << 16).step_by(97) {
            let v = map_objective(&m, &obs.field, &SpinWord::from_bits(16, code));
            assert!(res.best_value <= v + 1e-12);
        }
    }
}
