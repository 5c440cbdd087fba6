//! Norm geometry of finite-dimensional real normed spaces: one-sided norm
//! derivatives, Birkhoff-James orthogonality and its variants, bilinear
//! operator norms, and a randomized verification oracle.

pub mod bilinear;
pub mod cli;
pub mod derivatives;
pub mod error;
pub mod minimize;
pub mod oracle;
pub mod orthogonality;
pub mod spaces;

pub use bilinear::BilinearOp;
pub use error::{Error, Result};
pub use spaces::{Exponent, SpaceSpec, Vector};
