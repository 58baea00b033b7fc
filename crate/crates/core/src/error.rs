use thiserror::Error;

/// Every failure mode of the numerical layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coordinate {coord} outside domain [{min}, {max}]")]
    Domain { coord: f64, min: f64, max: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("classically forbidden region at q = {q:?} (E - V = {deficit})")]
    ForbiddenRegion { q: Vec<f64>, deficit: f64 },

    #[error("turning point at R = {r} (E_c - V = {margin})")]
    TurningPoint { r: f64, margin: f64 },

    #[error("zero-length path segment at index {0}")]
    DegenerateSegment(usize),

    #[error("{what} did not converge after {iterations} iterations (last measure {last})")]
    Convergence {
        what: String,
        iterations: usize,
        last: f64,
    },

    #[error("energy drift {drift:e} exceeds bound {bound:e}; reduce the step below {step}")]
    Stability { drift: f64, bound: f64, step: f64 },

    #[error("environment wavefunction below threshold at R = {positions:?}")]
    Node { positions: Vec<f64> },

    #[error("window error: {0}")]
    Window(String),

    #[error("stationary point of the environment wavefunction at R = {positions:?}")]
    StationaryPoint { positions: Vec<f64> },

    #[error("norm amplified to {norm:e} (initial {initial:e})")]
    BlowUp { norm: f64, initial: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
