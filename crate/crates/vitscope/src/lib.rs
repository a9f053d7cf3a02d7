//! File formats, image IO and the command-line pipeline around
//! [`vitscope_core`].

pub mod cli;
pub mod commands;
pub mod corpus;
pub mod error;
pub mod plot;
pub mod preprocess;
pub mod report;
pub mod results;
pub mod run;
pub mod settings;
pub mod store;
pub mod weights_io;

pub use error::{Error, Result};
