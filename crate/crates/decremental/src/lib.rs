//! Decremental approximate shortest paths on unweighted undirected graphs.

pub mod almost_mes;
pub mod api;
pub mod apsp;
pub mod check;
pub mod clustering;
pub mod cover;
pub mod emulator;
pub mod es_tree;
pub mod generate;
pub mod graph;
pub mod heavy_light;
pub mod io;
pub mod oracle;
pub mod sssp;
pub mod workload;
