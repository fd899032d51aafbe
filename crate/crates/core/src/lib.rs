//! Computational toolkit for free compressions of R-diagonal elements:
//! S-transform machinery on positive measures, the compression semigroup
//! acting on Brown measures, the stable family mu_beta, and Monte Carlo
//! verification against finite random matrices.

pub mod error;
pub mod measures;
pub mod transforms;
pub mod semigroup;
pub mod stable;
pub mod rmt;
pub mod cli;

pub use error::{Error, Result};
