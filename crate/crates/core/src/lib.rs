pub mod error;
pub mod extreal;
pub mod matcore;
pub mod states;
pub mod blockchan;
pub mod random;
pub mod closedform;
pub mod oracle;
pub mod constants;
pub mod counterexample;
pub mod gns;
pub mod analysis;
pub mod verify;
pub mod cli;

pub use error::{Error, Result};
