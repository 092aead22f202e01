pub mod channel_sim;
pub mod error;
pub mod estimators;
pub mod gmm_em;
pub mod fft;
pub mod linalg;
pub mod rng;
pub mod structured_cov;

pub use error::{Error, Result};
