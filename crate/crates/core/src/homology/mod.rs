//! F₂ chains on a host graph and the path surgery built from them: small-cycle
//! bases, `Δ`-simple-connectedness certificates, obstacle rerouting, and
//! gluing microscopic open paths along macroscopic ones.

mod basis;
mod chain;
mod surgery;

pub use basis::{check_delta_simply_connected, scan_delta, small_cycle_generators, Certificate, CycleBasis};
pub use chain::{extract_path, loop_erase, project_chain, Chain1};
pub use surgery::{decompose_in_host, geodesic_repair, macro_to_micro_path, reroute_path, Repair, Reroute};
