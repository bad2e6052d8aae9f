//! Simulation and analysis toolkit for entanglement-based quantum key
//! distribution and the timing side of quantum nonlocality.
//!
//! The crate is split into four layers:
//!
//! - [`quantum`]: exact two-qubit state math, CHSH evaluation, and the
//!   QBER/visibility bridge.
//! - [`photonics`]: stochastic source, fiber, and photon-counter models.
//! - [`qkd`]: the end-to-end key distribution pipeline (session, sifting,
//!   QBER estimation, cascade reconciliation, privacy amplification).
//! - [`relativity`]: spacetime event bookkeeping, spooky-action speed
//!   bounds, and before-before feasibility.
//!
//! All stochastic code is driven by explicitly seeded ChaCha streams, so
//! identical inputs produce bit-identical outputs.

pub mod error;
pub mod photonics;
pub mod qkd;
pub mod quantum;
pub mod relativity;

pub use error::Error;

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
