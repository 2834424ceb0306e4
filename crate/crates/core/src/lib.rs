pub mod catalog;
pub mod conformal;
pub mod congruence;
pub mod error;
pub mod frames;
pub mod hypersurface;
pub mod lightlike;
pub mod linalg;

pub use error::{Error, Result};
