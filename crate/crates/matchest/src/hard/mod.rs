//! Hard instances for the sampling lower bound: the recursive pair
//! `G^(k)`, `H^(k)`, k-level degrees, Cayley-graph lifting, subgraph
//! counts and the YES/NO distributions.

pub mod construct;
pub mod distributions;
pub mod group;
pub mod kdegree;
pub mod lift;
pub mod subgraph;

pub use construct::{build_base_pair, build_pair, degree_pad, HardPair, StructureCounts};
pub use distributions::{build_distributions, distinguishability_experiment, DistinguishReport, GadgetDistribution};
pub use group::{cayley_graph, find_high_girth_generators, girth, GroupSpec};
pub use kdegree::{find_degree_bijection, k_level_degree, k_level_degrees, KLevelDegree};
pub use lift::{lift, lift_with_girth, LiftedGraph};
pub use subgraph::{subgraph_count, verify_indistinguishable, IndistinguishabilityReport, Pattern};
