// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod model_io;
pub mod models;
pub mod overlay;
pub mod service;
pub mod sim;
pub mod telemetry;
pub mod transport;
pub mod vision;
