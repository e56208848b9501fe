pub mod consistency;
pub mod decision;
pub mod elicit;
pub mod engine;
pub mod error;
pub mod guided;
pub mod label;
pub mod lp;
pub mod oracle;
pub mod relation;
pub mod scenarios;
pub mod system;
pub mod time;

pub use error::{Error, Result};
