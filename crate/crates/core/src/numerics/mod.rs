//! Shared numerical kernels: quadrature, interpolation, scalar roots and
//! banded linear algebra.

pub mod band;
pub mod interp;
pub mod quad;
pub mod roots;
