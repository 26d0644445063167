//! Pseudo-spectral simulation and verification of a rapidly rotating
//! convection model without thermal diffusion, and of its `ε²Δₕ`-regularized
//! family, on the periodic box `[0, 2π]³`.

pub mod diagnostic;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod invariants;
pub mod mean;
pub mod spectral;

pub use diagnostic::multiplier::{CatalogEntry, Exponent, MultiplierSpec};
pub use diagnostic::{solve_velocity, VelocityDiagnostics};
pub use error::{Error, Result};
pub use evolution::{InitialSpec, Integrator, SimConfig, SimState, Simulation, TimeStep};
pub use invariants::InvariantReport;
pub use mean::MeanProfile;
pub use spectral::{Grid, PhysicalField, SpectralField};
