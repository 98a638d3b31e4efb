//! Paraxial photon propagation through spatially inhomogeneous multi-leg EIT
//! media.
//!
//! The transparent signal mode of a multi-leg EIT medium obeys a 2D
//! Schrodinger equation in the propagation coordinate, with artificial
//! ("quasi-") electromagnetic potentials set by the geometry of the control
//! fields. This crate builds those potentials from control-field
//! configurations, propagates the signal envelope with spectral split-step
//! and RK4 integrators, and ships the closed-form reference solutions the
//! simulator is validated against.
//!
//! Everything is nondimensionalized: transverse lengths in units of the
//! initial beam waist `w0`, propagation coordinate `zeta = z/(k w0^2)`,
//! vector potential scaled by `w0`, scalar potential by `w0^2`.

pub mod bandlimited;
pub mod bessel;
pub mod diagnostics;
pub mod field;
pub mod gauge;
pub mod grid;
pub mod multimode;
pub mod oracle;
pub mod propagate;
pub mod scenario;
pub mod snapshot;
pub mod spectral;
pub mod suites;
pub mod window;

pub use field::{ComplexField, RealField, RealVectorField};
pub use gauge::{ControlConfig, GaugeFields};
pub use grid::TransverseGrid;
pub use num_complex::Complex64;
