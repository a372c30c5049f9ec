pub mod arch;
pub mod coefficients;
pub mod error;
pub mod forms;
pub mod na;
pub mod polyhedra;
pub mod quadrature;
pub mod scenario;
pub mod tropical;
pub mod tseries;
pub mod verifier;

pub use error::{Error, Result};
