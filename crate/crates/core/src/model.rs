//! The periodic two-dimensional ISI channel and its quadratic MAP objective.
//!
//! Bits live on an `n × n` torus and are flattened row-major, so site
//! `(row, col)` has index `row * n + col`. Each received sample is the bit
//! itself plus `alpha` times each of its four periodic neighbours plus
//! Gaussian noise: `y = H x + w`. MAP detection reduces to minimizing
//! `Σ_{i>j} R_ij x_i x_j − Σ_i h_i x_i` with `R = HᵀH` and `h = Hᵀy`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// A word of ±1 spins indexed by flat site index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinWord(Vec<i8>);

impl SpinWord {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some((index, &value)) = spins.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
            return Err(Error::NotASpin {
                index,
                value: value as i64,
            });
        }
        Ok(SpinWord(spins))
    }

    pub fn all_up(len: usize) -> Self {
        SpinWord(vec![1; len])
    }

    /// Word whose entry `i` is `-1` exactly when bit `i` of `bits` is set;
    /// entries past bit 63 are `+1`.
    pub fn from_bits(len: usize, bits: u64) -> Self {
        SpinWord(
            (0..len)
                .map(|i| if i < 64 && bits >> i & 1 == 1 { -1 } else { 1 })
                .collect(),
        )
    }

    /// Uniformly random word.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        SpinWord((0..len).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn spin(&self, i: usize) -> f64 {
        self.0[i] as f64
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| s as f64).collect()
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn negated(&self) -> Self {
        SpinWord(self.0.iter().map(|&s| -s).collect())
    }

    /// Number of positions where the two words differ.
    pub fn hamming(&self, other: &SpinWord) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl std::fmt::Display for SpinWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// How the four neighbour taps of each site are chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoeffMode {
    /// Every tap equals `alpha`.
    Uniform,
    /// Each (site, direction) tap is drawn independently from
    /// `Normal(mean, std)`.
    Gaussian { mean: f64, std: f64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub coeff_mode: CoeffMode,
}

impl GridConfig {
    pub fn uniform(n: usize, alpha: f64, sigma: f64) -> Self {
        GridConfig {
            n,
            alpha,
            sigma,
            coeff_mode: CoeffMode::Uniform,
        }
    }

    pub fn num_sites(&self) -> usize {
        self.n * self.n
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid side must be at least 2, got {}",
                self.n
            )));
        }
        if self.alpha.is_nan() || self.alpha.abs() >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "interference strength must satisfy |alpha| < 1, got {}",
                self.alpha
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise standard deviation must be positive, got {}",
                self.sigma
            )));
        }
        if let CoeffMode::Gaussian { mean, std, .. } = self.coeff_mode {
            if !mean.is_finite() || !(std >= 0.0 && std.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "invalid gaussian tap distribution N({mean}, {std}²)"
                )));
            }
        }
        Ok(())
    }
}

/// Channel instance: ISI matrix `H` and pairwise matrix `R = HᵀH`.
#[derive(Clone, Debug)]
pub struct GridModel {
    config: GridConfig,
    h: SparseMatrix,
    r: SparseMatrix,
}

/// One channel use: transmitted word, noise, received samples and field.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub word: SpinWord,
    pub noise: Vec<f64>,
    pub received: Vec<f64>,
    pub field: Vec<f64>,
}

impl GridModel {
    pub fn n(&self) -> usize {
        self.config.n
    }

    pub fn num_sites(&self) -> usize {
        self.config.num_sites()
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn h_matrix(&self) -> &SparseMatrix {
        &self.h
    }

    pub fn r_matrix(&self) -> &SparseMatrix {
        &self.r
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        let n = self.config.n;
        (row % n) * n + col % n
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k / self.config.n, k % self.config.n)
    }

    /// Periodic neighbours of site `k` in the order up, down, left, right.
    pub fn neighbors(&self, k: usize) -> [usize; 4] {
        let n = self.config.n;
        let (r, c) = self.coords(k);
        [
            self.index(r + n - 1, c),
            self.index(r + 1, c),
            self.index(r, c + n - 1),
            self.index(r, c + 1),
        ]
    }

    /// Strictly upper-triangular couplings `(i, j, R_ij)` with `i < j`.
    pub fn couplings(&self) -> Vec<(usize, usize, f64)> {
        (0..self.num_sites())
            .flat_map(|i| {
                self.r
                    .row(i)
                    .filter(move |&(j, _)| j > i)
                    .map(move |(j, v)| (i, j, v))
            })
            .collect()
    }

    pub fn noiseless(&self, word: &SpinWord) -> Vec<f64> {
        self.h.mul_vec(&word.as_f64())
    }

    /// The field `Hᵀy`.
    pub fn field(&self, received: &[f64]) -> Vec<f64> {
        self.h.transpose_mul_vec(received)
    }

    fn check_word(&self, word: &SpinWord) -> Result<()> {
        if word.len() != self.num_sites() {
            return Err(Error::WordLength {
                expected: self.num_sites(),
                got: word.len(),
            });
        }
        Ok(())
    }
}

pub fn build_grid_model(config: GridConfig) -> Result<GridModel> {
    config.validate()?;
    let n = config.n;
    let sites = n * n;
    let mut tap_rng = match config.coeff_mode {
        CoeffMode::Gaussian { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        CoeffMode::Uniform => None,
    };
    let mut triplets = Vec::with_capacity(5 * sites);
    for k in 0..sites {
        let (r, c) = (k / n, k % n);
        triplets.push((k, k, 1.0));
        let neighbors = [
            ((r + n - 1) % n) * n + c,
            ((r + 1) % n) * n + c,
            r * n + (c + n - 1) % n,
            r * n + (c + 1) % n,
        ];
        for nb in neighbors {
            let tap = match (config.coeff_mode, tap_rng.as_mut()) {
                (CoeffMode::Gaussian { mean, std, .. }, Some(rng)) => {
                    Normal::new(mean, std).expect("validated").sample(rng)
                }
                _ => config.alpha,
            };
            // On a 2-wide torus two taps land on the same site and add up.
            triplets.push((k, nb, tap));
        }
    }
    let h = SparseMatrix::from_triplets(sites, sites, triplets);
    let r = h.gram();
    Ok(GridModel { config, h, r })
}

/// Sends `word` through the channel with noise drawn from a generator
/// seeded by `rng_seed`.
pub fn transmit(model: &GridModel, word: &SpinWord, rng_seed: u64) -> Result<Observation> {
    model.check_word(word)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let normal = Normal::new(0.0, model.config.sigma).expect("validated sigma");
    let noise: Vec<f64> = (0..model.num_sites()).map(|_| normal.sample(&mut rng)).collect();
    let mut received = model.noiseless(word);
    for (y, w) in received.iter_mut().zip(&noise) {
        *y += w;
    }
    let field = model.field(&received);
    Ok(Observation {
        word: word.clone(),
        noise,
        received,
        field,
    })
}

/// Signal-to-noise ratio in decibels, `10·log10((4·alpha² + 1) / sigma²)`.
pub fn snr_db(alpha: f64, sigma: f64) -> f64 {
    10.0 * ((4.0 * alpha * alpha + 1.0) / (sigma * sigma)).log10()
}

/// The MAP objective `Σ_{i>j} R_ij x_i x_j − Σ_i h_i x_i`.
pub fn map_objective(model: &GridModel, field: &[f64], word: &SpinWord) -> f64 {
    assert_eq!(field.len(), word.len());
    assert_eq!(word.len(), model.num_sites());
    let mut total = 0.0;
    for i in 0..word.len() {
        let xi = word.spin(i);
        let mut pair = 0.0;
        for (j, rij) in model.r.row(i) {
            if j < i {
                pair += rij * word.spin(j);
            }
        }
        total += xi * (pair - field[i]);
    }
    total
}
