pub mod agents;
pub mod behavior;
pub mod cards;
pub mod checkpoint;
pub mod cli;
pub mod combos;
pub mod engine;
pub mod error;
pub mod evalharness;
pub mod features;
pub mod replay;
pub mod trainer;
pub mod valuenet;

pub use error::{Error, Result};
