//! OTOCs of brickwork circuits built from (perturbed) dual-unitary gates.
//!
//! The pipeline: a [`gate::Gate`] yields scattering amplitudes
//! ([`amplitudes::ScatteringAmplitudes`]); these populate the projected
//! transfer matrix of the maximally chaotic subspace ([`mcs`]), whose
//! truncations are resummed in closed form by [`path_integral`]. The
//! [`brute_force`] module contracts the unprojected folded network and serves
//! as the ground truth; [`analysis`] fits fronts and drives parameter scans.

pub mod amplitudes;
pub mod analysis;
pub mod brute_force;
pub mod coords;
pub mod error;
pub mod folded;
pub mod gate;
pub mod linalg;
pub mod mcs;
pub mod path_integral;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub type CMat = nalgebra::DMatrix<C64>;
