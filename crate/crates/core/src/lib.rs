pub mod analytics;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod ga;
pub mod graphml;
pub mod importance;
pub mod ingest;
pub mod model_select;
pub mod network;
pub mod par;
pub mod seed;
pub mod stats;
pub mod synth;
pub mod table;

pub use error::{Error, ErrorCategory, Result};

/// Version of the on-disk table layouts.
pub const FORMAT_VERSION: u32 = 1;
