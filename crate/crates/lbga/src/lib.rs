//! Locally boosted graph aggregation (LBGA).
//!
//! Many networks come as several parallel edge types over one vertex set:
//! co-authorship plus citation, call logs plus proximity, and so on. This
//! crate learns a single aggregate graph from such layers by running a
//! per-edge multiplicative-weights game: every candidate edge keeps one
//! weight per layer, candidate graphs are sampled from the current weights,
//! clustered, and each edge is rewarded by how well it agrees with the
//! clusters it lands in. Edges the layers agree on are kept, noise edges are
//! dropped, and the per-layer weights expose which layers carried signal.
//!
//! The crate ships the learning engine, local quality measures, a Walktrap
//! community detector used as the clustering event, stochastic block model
//! generators for synthetic studies, evaluation metrics, and dataset I/O.
//! The `lbga` binary in the companion CLI crate drives full experiments.

pub mod cluster;
pub mod engine;
mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod quality;
pub mod synth;

pub use cluster::{cluster, ClustererSpec};
pub use engine::{convergence_bound, run, EngineConfig, LbgaResult, WeightTable};
pub use error::{Error, Result};
pub use graph::{Clustering, Graph, LayerSet};
pub use metrics::MetricReport;
pub use quality::QualitySpec;
