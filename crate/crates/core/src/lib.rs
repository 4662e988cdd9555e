//! Gauge-covariant non-local observables on periodic grids: transports,
//! holonomies, the `g_gamma` family of operators, split-step dynamics and a
//! conical-defect analogue.

pub mod dynamics;
pub mod error;
pub mod gauge;
pub mod geom;
pub mod gravity;
pub mod grid;
pub mod observables;
pub mod par;
pub mod scenario;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{GridSpec, WaveFunction, C64};
