//! Rule-based temporal event inference: simple events from timestamped
//! observations, meta-events over them, and inconsistency-tolerant timelines.

pub mod error;
pub mod io;
pub mod lang;
pub mod meta;
pub mod model;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod query;
pub mod repair;
pub mod simple;
pub mod term;

pub use error::Error;
