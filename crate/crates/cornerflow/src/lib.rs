//! Vortex-blob simulation of two-dimensional ideal flow in and around
//! domains with corners.
//!
//! The flow domain is mapped onto the exterior (or interior) of the unit disk
//! by a closed-form conformal map, where the Biot–Savart law is a sum of
//! free and image terms. On top of that sit a fixed-step RK4 particle
//! transport, the stream-function Liapounov diagnostics, and the
//! free-space/harmonic velocity split used for twin-run experiments.

pub mod biot_savart;
pub mod conformal;
pub mod config;
pub mod error;
pub mod harmonic_split;
pub mod lyapunov;
pub mod numerics;
pub mod output;
pub mod transport;
pub mod validation;

pub use conformal::{ConformalMap, CornerSpec, DomainKind, DomainSpec, MapId, MapShape, Point};
pub use error::{FlowError, Result};
