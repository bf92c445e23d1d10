//! Go-around analytics for terminal airspace: detection of go-arounds in
//! radar tracks, per-minute airport-state features, a two-class Gaussian
//! discriminant alert model, and lift-curve evaluation, together with a
//! seeded scenario generator used to verify the whole chain.

pub mod airport;
pub mod corpus;
pub mod detect;
pub mod discriminant;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod ingest;
pub mod pipeline;
pub mod seed;
pub mod synth;
pub mod time;

pub use airport::{Airport, WeightClass};
pub use error::{Error, Result};
