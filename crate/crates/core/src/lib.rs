//! Markov loop soups on finite weighted graphs: loop measures, exact
//! cluster probabilities, soup samplers and a few limiting models.

pub mod analytics;
pub mod coalescent;
pub mod error;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod loops;
pub mod partition;
pub mod percolation;
pub mod permanent;
pub mod renewal;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{GraphBuilder, WeightedGraph};
pub use loops::{BasedLoop, DiscreteLoop};
pub use partition::Partition;
