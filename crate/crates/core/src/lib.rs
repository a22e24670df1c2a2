pub mod error;
pub mod optimize;
pub mod spaces;

pub use error::{Error, Result};
pub mod cli;
pub mod opnorms;
pub mod pietsch;
pub mod seqnorms;
pub mod suite;
