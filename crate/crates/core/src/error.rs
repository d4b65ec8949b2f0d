use std::path::PathBuf;

use thiserror::Error;

use crate::lp_solve::LpStatus;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("spin word has length {got}, expected {expected}")]
    WordLength { expected: usize, got: usize },
    #[error("spin word entry {index} is {value}, expected +1 or -1")]
    NotASpin { index: usize, value: i64 },
    #[error("oracle scale exceeded: {sites} sites, at most {max} supported")]
    OracleScaleExceeded { sites: usize, max: usize },
    #[error("malformed clique {0:?}")]
    MalformedClique(Vec<usize>),
    #[error("cycle of length {0} cannot be triangulated")]
    DegenerateCycle(usize),
    #[error("LP solver finished with status {status:?} after {iterations} iterations")]
    Solver { status: LpStatus, iterations: usize },
    #[error("malformed LP: {0}")]
    Problem(#[from] lp_simplex::ProblemError),
    #[error("trial {trial} at sigma {sigma} (master seed {seed}) aborted: {source}")]
    TrialAborted {
        seed: u64,
        sigma: f64,
        trial: usize,
        source: Box<Error>,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
