//! The hierarchical state of an instance: one bipartite
//! variable/constraint graph per scenario (low level) and the complete
//! scenario-similarity graph (high level).

mod bipartite;
mod dump;
mod instance;
mod normalize;

pub use bipartite::{build_scenario_subgraph, standardize_features, BipartiteGraph};
pub use dump::dump_graphs;
pub use instance::{build_instance_adjacency, flatten_uncertain, InstanceGraph};
pub use normalize::normalize_adjacency;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("scenario {0} flattens to a zero-norm vector; cosine similarity undefined")]
    ZeroNorm(usize),
    #[error("instance graph needs at least one scenario")]
    Empty,
}
