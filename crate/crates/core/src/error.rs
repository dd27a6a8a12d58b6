use thiserror::Error;

/// Errors raised by the analysis and optimization layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("density {density} kg/m^3 outside catalogue range [{min}, {max}]")]
    DensityOutOfRange { density: f64, min: f64, max: f64 },

    #[error("invalid material '{name}': {reason}")]
    InvalidMaterial { name: String, reason: String },

    #[error("invalid catalogue: {0}")]
    InvalidCatalogue(String),

    #[error("catalogue file: {0}")]
    CatalogueFile(#[from] csv::Error),

    #[error("expected {expected} control points, got {got}")]
    ControlPointCount { expected: usize, got: usize },

    #[error("wingbox walls overlap ({constraint}): margin {margin:e} m")]
    SectionGeometry {
        constraint: &'static str,
        margin: f64,
    },

    #[error("singular {0} system")]
    Singular(&'static str),

    #[error("mesh mismatch: expected {expected} stations, got {got}")]
    MeshMismatch { expected: usize, got: usize },

    #[error("analysis failed: {0}")]
    Analysis(String),

    #[error("MDA did not converge in {iterations} iterations (last residual {last:e})")]
    MdaDiverged { iterations: usize, last: f64, residuals: Vec<f64> },

    #[error("negative mass in {0}")]
    NegativeMass(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("none of the {} optimization runs reached a feasible design ({})", statuses.len(), statuses.join(", "))]
    AllRunsFailed { statuses: Vec<String> },
}

pub type Result<T> = std::result::Result<T, Error>;
