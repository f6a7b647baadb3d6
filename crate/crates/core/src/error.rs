use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch for {what}: expected {expected:?}, got {got:?}")]
    Shape {
        what: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("continuity projection did not converge after {iterations} iterations (relative residual {residual:e})")]
    ProjectionDiverged { iterations: usize, residual: f64 },

    #[error("triple violates the continuity equation (relative residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("probe field is not contained in K_delta at cell {cell}")]
    ProbeOutsideK { cell: usize },

    #[error("sampling points {first} and {second} coincide in frame {frame}")]
    CoincidentSamples {
        frame: usize,
        first: usize,
        second: usize,
    },

    #[error("phantom support leaves the domain: {0}")]
    PhantomSupport(String),

    #[error("step sizes violate tau*sigma*L^2 <= 1 (product {product})")]
    StepSize { product: f64 },

    #[error("non-finite value encountered at iteration {iteration}")]
    NotFinite { iteration: usize },

    #[error("reconstruction has negative density {min_density:e} below the -1e-8 floor")]
    NegativeDensity { min_density: f64 },

    #[error("parameter schedule rejected: {0}")]
    Schedule(String),

    #[error("zero reference in relative error")]
    ZeroReference,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_shape(what: &'static str, expected: &[usize], got: &[usize]) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape {
            what,
            expected: expected.to_vec(),
            got: got.to_vec(),
        })
    }
}
