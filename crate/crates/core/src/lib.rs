pub mod channel;
pub mod diagnostics;
pub mod error;
pub mod gates;
pub mod io;
pub mod lightcone;
pub mod linalg;
pub mod search;

pub use error::{Error, Result};
