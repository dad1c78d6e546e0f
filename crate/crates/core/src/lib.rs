//! Reconstruction of articulatory trajectories from acoustic and phonetic
//! input.

pub mod acoustic;
pub mod alignment;
pub mod articulatory;
pub mod datasets;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod framefile;
pub mod kv;
pub mod models;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};
