//! Simulation and analysis of two-photon polarization-entanglement
//! nonlocality tests.
//!
//! - [`states`]: pure and noisy two-qubit states, basis order `(HH, HV, VH, VV)`.
//! - [`source`]: mode-pair ensemble model of the down-conversion source and
//!   the mixedness induced by spatial filtering.
//! - [`measurement`]: polarizer projections, joint probabilities, fringes.
//! - [`hardy`]: Hardy's ladder inequality and the entanglement-degree optimizer.
//! - [`bell`]: CHSH parameter and optimal settings.
//! - [`stats`]: Poisson counting simulation, CSV count files, estimators.

pub mod bell;
pub mod error;
pub mod hardy;
pub mod measured;
pub mod measurement;
pub mod optimize;
pub mod source;
pub mod states;
pub mod stats;

pub use error::{Error, Result};
pub use measured::Measured;
