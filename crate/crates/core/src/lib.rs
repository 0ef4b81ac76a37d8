pub mod kernel;
pub mod chem;
pub mod datasets;
pub mod encoders;
pub mod fusion;
pub mod kg;
pub mod metrics;
pub mod nn;
pub mod pipeline;
