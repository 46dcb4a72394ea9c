//! Quadrature, symmetric matrices, argmax search, Hessians and Fisher information.

pub mod argmax;
pub mod fisher;
pub mod hessian;
pub mod matrix;
pub mod quadrature;

pub use argmax::{argmax, ArgmaxConfig, ArgmaxDiagnostics, EstimateSet};
pub use fisher::{fisher_information, FisherMethod};
pub use hessian::{hessian_at_diagonal, hessian_at_diagonal_with, HessianConfig};
pub use matrix::SymMatrix;
pub use quadrature::{integrate, integrate_mc, Axis, Domain, Estimate, Tolerance};
