//! Distribution estimation for a linear functional of the solution of an
//! elliptic PDE with a lognormal diffusion coefficient and a Gaussian source,
//! using preintegration in one variable and randomly shifted lattice rules.

pub mod error;
pub mod estimators;
pub mod fem;
pub mod fields;
pub mod oracle;
pub mod parametric;
pub mod preintegration;
pub mod qmc;
pub mod rng;
pub mod special;
pub mod weights;

pub use error::{Error, Result};
