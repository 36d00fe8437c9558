//! Chemical-distance estimation for supercritical bond percolation on
//! polynomial-growth Cayley graphs: finite regions, coupled sampling,
//! coarse-graining, F₂ cycle surgery and Monte Carlo estimators.

pub mod coarse;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod graph;
pub mod homology;
pub mod percolation;
pub mod region;
pub mod rng;

pub use error::{Error, Result};
pub use exec::Exec;
pub use graph::{Graph, Host, VertexSet};
pub use percolation::{clusters, sample_config, ClusterLabeling, EdgeStates, PercSample};
pub use region::{build_heisenberg, build_lattice, Family, FiniteRegion};
