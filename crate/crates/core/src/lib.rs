//! Eco-design multidisciplinary optimization of a solar HALE wing.
//!
//! The analysis couples a vortex-lattice aerodynamic model, a wingbox beam
//! model and a solar energy balance, then minimizes mass or lifecycle CO2
//! with material chosen through a continuous density variable.

pub mod aero;
pub mod design;
pub mod eco;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod materials;
pub mod optimizer;
pub mod scalar;
pub mod structures;

pub use error::{Error, Result};
pub use scalar::{Dual, Scalar};

/// Design vector in plain double precision.
pub type Design = design::DesignVector<f64>;
/// Design vector carrying one forward-mode tangent.
pub type DualDesign = design::DesignVector<Dual>;
/// Converged coupled analysis in double precision.
pub type State = energy::MdaState<f64>;
/// Wing discretization in double precision.
pub type Wing = geometry::WingModel<f64>;
/// Interpolated material properties in double precision.
pub type Material = materials::InterpolatedMaterial<f64>;
