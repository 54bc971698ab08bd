// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus_file;
pub mod corpusstats;
pub mod error;
pub mod estimators;
pub mod lawfit;
pub mod numeric;
pub mod relfit;
pub mod sampler;
pub mod synth;
pub mod textprep;

pub use error::{Error, Result};
