//! Geodesic interpolation in the latent spaces of atlas generative models.
//!
//! An atlas model exposes `m` charts: encoders `F_y`, decoders `G_y` and a
//! partition of unity `psi`. This crate builds a latent graph spanning all
//! charts, weights its edges by decoded curve length, and answers shortest
//! path queries with A*.
//!
//! * [`geometry`]: the [`Atlas`] trait and latent/ambient coordinate types
//! * [`analytic`]: flat, circle and sphere atlases with exact geodesics
//! * [`neural`]: dense networks loaded from JSON weight files
//! * [`metric`]: pullback metric and discretized curve length
//! * [`graph`]: multi-chart k-NN graph construction
//! * [`search`]: A*, Dijkstra and path resampling
//! * [`io`]: datasets, graph/path files and PGM frames
//! * [`cli`]: the `atlas-geo` command line

pub mod analytic;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod knn;
pub mod metric;
pub mod neural;
pub mod search;

pub use error::{Error, Result};
pub use geometry::{AmbientPoint, Atlas, AtlasDims, LatentCoord, SimplexWeights};
pub use graph::{build_graph, graph_stats, BuildConfig, GraphView, LatentGraph};
pub use search::{astar, dijkstra_oracle, geodesic_between, resample_equidistant, GeodesicPath};
