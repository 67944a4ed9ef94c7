//! Evaluation metrics for learned graphs and their clusterings.

use serde::Serialize;

use crate::cluster::{cluster, ClustererSpec};
use crate::error::{Error, Result};
use crate::graph::{Clustering, Graph, LayerSet};

/// Normalized mutual information between two partitions of the same vertex
/// set, in `[0, 1]`.
///
/// Uses the contingency-count form
/// `-2 Σ_ij N_ij ln(N_ij N / (N_i N_j)) / (Σ_i N_i ln(N_i/N) + Σ_j N_j ln(N_j/N))`.
/// By convention the score is 0 whenever either side is the single
/// all-vertices cluster, where the normalization degenerates.
pub fn nmi(a: &Clustering, b: &Clustering) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ClusteringMismatch { a: a.len(), b: b.len() });
    }
    let n = a.len();
    if n == 0 {
        return Err(Error::InvalidConfig("nmi needs a nonempty vertex set".into()));
    }
    if a.num_clusters() == 1 || b.num_clusters() == 1 {
        return Ok(0.0);
    }
    let (ka, kb) = (a.num_clusters(), b.num_clusters());
    let mut joint = vec![0u64; ka * kb];
    for v in 0..n {
        joint[a.cluster_of(v) * kb + b.cluster_of(v)] += 1;
    }
    let rows = a.sizes();
    let cols = b.sizes();
    let nf = n as f64;
    let mut numerator = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let nij = joint[i * kb + j] as f64;
            if nij > 0.0 {
                numerator += nij * (nij * nf / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    numerator *= -2.0;
    let denominator: f64 = rows
        .iter()
        .map(|&c| c as f64 * (c as f64 / nf).ln())
        .chain(cols.iter().map(|&c| c as f64 * (c as f64 / nf).ln()))
        .sum();
    Ok(numerator / denominator)
}

/// Newman modularity `Σ_c (e_cc - a_c^2)` of a clustering on a graph, where
/// `e_cc` is the fraction of edges inside cluster `c` and `a_c` its fraction
/// of edge endpoints.
///
/// Undefined on an edgeless graph, which is rejected rather than scored.
pub fn modularity(g: &Graph, c: &Clustering) -> Result<f64> {
    if c.len() != g.vertex_count() {
        return Err(Error::ClusteringMismatch {
            a: g.vertex_count(),
            b: c.len(),
        });
    }
    let edges = g.edge_count();
    if edges == 0 {
        return Err(Error::EmptyGraph);
    }
    let k = c.num_clusters();
    let mut internal = vec![0usize; k];
    let mut volume = vec![0usize; k];
    for u in 0..g.vertex_count() {
        volume[c.cluster_of(u)] += g.degree(u);
    }
    for (u, v) in g.edges() {
        if c.same_cluster(u, v) {
            internal[c.cluster_of(u)] += 1;
        }
    }
    let m = edges as f64;
    Ok((0..k)
        .map(|i| internal[i] as f64 / m - (volume[i] as f64 / (2.0 * m)).powi(2))
        .sum())
}

/// Sum over clusters of the cut conductance
/// `cut(S) / min(vol(S), vol(V \ S))`. Degenerate cuts (either side with
/// zero volume) score 0. Lower is better.
///
/// Panics if the clustering does not cover the graph's vertex set.
pub fn conductance_sum(g: &Graph, c: &Clustering) -> f64 {
    assert_eq!(
        c.len(),
        g.vertex_count(),
        "clustering covers {} vertices but the graph has {}",
        c.len(),
        g.vertex_count()
    );
    let k = c.num_clusters();
    let mut cut = vec![0usize; k];
    let mut volume = vec![0usize; k];
    for u in 0..g.vertex_count() {
        volume[c.cluster_of(u)] += g.degree(u);
    }
    for (u, v) in g.edges() {
        if !c.same_cluster(u, v) {
            cut[c.cluster_of(u)] += 1;
            cut[c.cluster_of(v)] += 1;
        }
    }
    let total: usize = volume.iter().sum();
    (0..k)
        .map(|i| {
            let small = volume[i].min(total - volume[i]);
            if small == 0 {
                0.0
            } else {
                cut[i] as f64 / small as f64
            }
        })
        .sum()
}

/// Fraction of union edges the result graph keeps. The result must be a
/// subgraph of the union; two empty graphs count as fully kept.
pub fn sparsity(result: &Graph, union: &Graph) -> Result<f64> {
    if result.vertex_count() != union.vertex_count() {
        return Err(Error::VertexCountMismatch {
            expected: union.vertex_count(),
            found: result.vertex_count(),
        });
    }
    for (u, v) in result.edges() {
        if !union.has_edge(u, v) {
            return Err(Error::NotInUnion { u, v });
        }
    }
    if union.edge_count() == 0 {
        return Ok(1.0);
    }
    Ok(result.edge_count() as f64 / union.edge_count() as f64)
}

/// One evaluation row: structural scores of a graph plus the per-layer mean
/// weights that produced it. `nmi` is absent when no ground truth exists.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub modularity: f64,
    pub conductance: f64,
    pub nmi: Option<f64>,
    pub sparsity: f64,
    pub layer_weights: Vec<f64>,
}

/// Scores the plain union of the layers, the baseline the learner competes
/// against. Uses the ground truth when given, otherwise clusters the union.
/// Sparsity is 1 and layer weights are uniform by definition.
pub fn union_baseline(
    layers: &LayerSet,
    truth: Option<&Clustering>,
    clusterer: &ClustererSpec,
) -> Result<MetricReport> {
    let g = layers.union_graph();
    let owned;
    let reference = match truth {
        Some(c) => c,
        None => {
            owned = cluster(clusterer, &g)?;
            &owned
        }
    };
    let m = layers.num_layers();
    Ok(MetricReport {
        modularity: modularity(&g, reference)?,
        conductance: conductance_sum(&g, reference),
        nmi: None,
        sparsity: 1.0,
        layer_weights: vec![1.0 / m as f64; m],
    })
}
