//! Semiclassical wave-packet dynamics on the circle, the line and the torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`phase_space`] grids, wave functions, symbols and coherent states
//! * [`circle`] exact spectral propagation for dispersion laws on the circle
//! * [`classical`] Hamiltonian flows, tangent maps, separatrices and `t0`
//! * [`metaplectic`] linear canonical transforms and Gaussian approximants
//! * [`weyl`] split-step and torus propagators
//! * [`reconstruction`] symbol maps, lattice paths and revival scans
//!
//! Conventions: `i ħ ∂ψ = H ψ`, Hamilton's equations `ẋ = ∂_ξ h`, `ξ̇ = -∂_x h`,
//! coherent states `ħ^{-1/4} a((x-q)/√ħ) e^{ipx/ħ}`.

pub mod circle;
pub mod classical;
pub mod dd;
pub mod error;
pub mod fft;
pub mod fit;
pub mod metaplectic;
pub mod phase_space;
pub mod quad;
pub mod reconstruction;
pub mod special;
pub mod weyl;

pub use error::{Error, Result, Warning};
pub use num_complex::Complex64 as C64;
