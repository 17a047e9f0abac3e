pub mod coherent;
pub mod error;
pub mod fockrep;
pub mod measure;
pub mod models;
pub mod oracle;
pub mod specfn;
pub mod stats;

pub use error::{Error, Result};
pub mod verify;
