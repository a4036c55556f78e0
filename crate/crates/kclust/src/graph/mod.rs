//! Neighborhood graphs: the fractional weighted variant and the copy variant.

mod copies;
mod weighted;

pub use copies::{build_copy_graph, partition, CopyGraph, CopySet, FacilityCopy, ImbalancePartition};
pub use weighted::{build_weighted, SourceOrder, WeightedEdge, WeightedGraph};
