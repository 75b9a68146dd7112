//! Certifying robust non-oscillation of reaction networks through piecewise-linear
//! Lyapunov functions for the inclusion of second additive compound matrices.

pub mod certify;
pub mod compound;
pub mod lyapunov;
pub mod netmodel;
pub mod ratlinalg;
pub mod simulate;
pub mod siphons;
pub mod stoich;
