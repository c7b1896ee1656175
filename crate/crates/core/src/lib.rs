pub mod augment;
pub mod config;
pub mod data;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod imgparam;
pub mod lgm;
pub mod numcore;
pub mod toy;

pub use error::{Error, Result};
