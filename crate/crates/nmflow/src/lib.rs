pub mod channels;
pub mod correlations;
pub mod divisibility;
pub mod error;
pub mod mepovm;
pub mod qmat;
pub mod witness;

pub use error::{Error, Result};
