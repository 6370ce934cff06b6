//! Numerical toolkit for steady periodic stratified capillary-gravity water
//! waves in the height-function (Dubreil-Jacotin) formulation.
//!
//! The crate is organized along the computation:
//!
//! * [`profiles`]: the given data ρ, β, B and the p-grid;
//! * [`laminar`]: the trivial family H(·; λ) and its thresholds;
//! * [`spectral`]: the linearized Sturm-Liouville problem and classification;
//! * [`bifurc`]: Lyapunov-Schmidt coefficients and local branch germs;
//! * [`heightsolver`]: the discretized height equation and continuation;
//! * [`eulerian`]: reconstruction of physical fields and independent checks.

pub mod bifurc;
pub mod eulerian;
pub mod error;
pub mod heightsolver;
pub mod laminar;
pub mod numerics;
pub mod par;
pub mod profiles;
pub mod spectral;

pub use error::{Error, Result};
