pub mod audit;
pub mod builder;
pub mod cert;
pub mod cf;
pub mod config;
pub mod check;
pub mod error;
pub mod exact;
pub mod planner;
pub mod report;
pub mod verifier;
pub mod stepper;
pub mod xval;

pub use error::{Error, Result};
