use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} outside its domain: {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("index out of range: {0}")]
    Range(String),
    #[error("harmonic {harmonic} cannot be resolved on a grid of {grid} samples")]
    Aliasing { harmonic: usize, grid: usize },
    #[error("quadrature did not reach tolerance {tolerance:e} (last error estimate {estimate:e})")]
    Accuracy { tolerance: f64, estimate: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("n - p = {n_minus_p} is below the admissible minimum {required} for q = {q}")]
    Inadmissible {
        n_minus_p: usize,
        required: usize,
        q: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
