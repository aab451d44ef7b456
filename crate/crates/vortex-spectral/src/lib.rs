//! Spectral toolkit for the Gross–Pitaevskii operator linearized around the
//! degree-one vortex: special functions, the vortex profile, generalized
//! eigenfunctions, the distorted Fourier transform and the evolution group.

pub mod dft;
pub mod eigen;
pub mod evolve;
pub mod field;
pub mod flat;
pub mod grid;
pub mod interp;
pub mod odesys;
pub mod profile;
pub mod rk;
pub mod special;
