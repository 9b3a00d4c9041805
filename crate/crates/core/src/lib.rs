pub mod ansatz;
pub mod error;
pub mod expcli;
pub mod gateset;
pub mod lgtmodel;
pub mod linalg;
pub mod noiselab;
pub mod optimizers;
pub mod pipeline;
pub mod objective;
pub mod qstate;
pub mod vne;

pub use error::{Error, Result};
