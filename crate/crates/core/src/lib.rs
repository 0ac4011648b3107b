pub mod asp;
pub mod behaviour;
pub mod classify;
pub mod error;
pub mod features;
pub mod flat;
pub mod induce;
pub mod io;
pub mod kv;
pub mod obs;
pub mod pipeline;
pub mod pair;
pub mod svm;
pub mod synthetic;
pub mod token;

pub use error::{Error, Result};
