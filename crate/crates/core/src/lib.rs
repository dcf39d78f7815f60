//! Simulation and analysis of two-qubit quantum batteries whose second qubit
//! collides sequentially with fresh thermal bath spins.
//!
//! The crate is organized bottom-up: [`numerics`] supplies the small dense
//! complex kernel, [`model`] the Hamiltonians and bath state, [`states`] the
//! pure-state and entanglement machinery, [`collision`] the repeated-interaction
//! dynamics, and [`ergotropy`], [`nonmarkov`] and [`fitting`] the analyses
//! built on top of them.

pub mod collision;
pub mod ergotropy;
pub mod error;
pub mod export;
pub mod fitting;
pub mod model;
pub mod nonmarkov;
pub mod numerics;
pub mod optimize;
pub mod sampling;
pub mod states;

pub use collision::{CollisionChannel, Trajectory};
pub use ergotropy::{Quantity, WorkRecord};
pub use error::{Error, Result};
pub use fitting::{FitModel, FitResult, FitSettings};
pub use model::ModelParams;
pub use nonmarkov::BlpResult;
pub use numerics::{ComplexMatrix, HermitianEigen, Subsystem, C64};
pub use optimize::OptimizerSettings;
pub use states::{EntanglementValue, PureState, SchmidtForm};
