//! Simple undirected graphs, vertex clusterings, and multi-layer bundles.
//!
//! Vertices are dense ids `0..n`. Graphs are immutable once built and stored
//! in compressed sparse row form with sorted neighbor lists, which keeps
//! intersection-style queries and random walks cheap.

use crate::error::{Error, Result};

/// Undirected simple graph on vertices `0..n`.
///
/// Self-loops are ignored and parallel edges collapse to one at
/// construction. Accessors panic on out-of-range vertex ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Graph {
    /// Builds a graph from an edge list. Edges may appear in any order and
    /// direction; duplicates and self-loops are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut arcs = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            if u >= n {
                return Err(Error::VertexOutOfRange { vertex: u, n });
            }
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            if u == v {
                continue;
            }
            arcs.push((u, v));
            arcs.push((v, u));
        }
        arcs.sort_unstable();
        arcs.dedup();
        Ok(Self::from_sorted_arcs(n, &arcs))
    }

    /// Builds a graph from pairs that are already unique, self-loop free and
    /// lexicographically sorted with `u < v`. Used on hot paths where the
    /// invariant is guaranteed by construction.
    pub(crate) fn from_sorted_pairs(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut arcs = Vec::with_capacity(pairs.len() * 2);
        arcs.extend_from_slice(pairs);
        for &(u, v) in pairs {
            arcs.push((v, u));
        }
        arcs.sort_unstable();
        Self::from_sorted_arcs(n, &arcs)
    }

    fn from_sorted_arcs(n: usize, arcs: &[(usize, usize)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in arcs {
            offsets[u + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = arcs.iter().map(|&(_, v)| v).collect();
        Graph { n, offsets, targets }
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Sorted neighbor list of `u`.
    ///
    /// Panics if `u` is out of range.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        assert!(u < self.n, "vertex {u} out of range for {} vertices", self.n);
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    /// Degree of `u`.
    ///
    /// Panics if `u` is out of range.
    pub fn degree(&self, u: usize) -> usize {
        assert!(u < self.n, "vertex {u} out of range for {} vertices", self.n);
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Whether the undirected edge `{u, v}` is present.
    ///
    /// Panics if either endpoint is out of range.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        assert!(v < self.n, "vertex {v} out of range for {} vertices", self.n);
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Iterates undirected edges as pairs with `u < v`, in lexicographic
    /// order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Number of common neighbors of `u` and `v` (sorted-list merge).
    pub fn common_neighbors(&self, u: usize, v: usize) -> usize {
        let (mut a, mut b) = (self.neighbors(u), self.neighbors(v));
        if a.len() > b.len() {
            std::mem::swap(&mut a, &mut b);
        }
        let mut count = 0;
        let mut i = 0;
        for &x in a {
            while i < b.len() && b[i] < x {
                i += 1;
            }
            if i == b.len() {
                break;
            }
            if b[i] == x {
                count += 1;
                i += 1;
            }
        }
        count
    }
}

/// A partition of `0..n` into clusters `0..k`, stored as one cluster id per
/// vertex. Ids are always dense: every id in `0..k` occurs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    assign: Vec<usize>,
    k: usize,
}

impl Clustering {
    /// Wraps a raw assignment, renumbering cluster ids densely in order of
    /// first appearance so that equal partitions get equal representations.
    pub fn from_assignment(raw: Vec<usize>) -> Self {
        let mut remap: Vec<Option<usize>> = Vec::new();
        let mut assign = raw;
        let mut k = 0;
        for a in assign.iter_mut() {
            if *a >= remap.len() {
                remap.resize(*a + 1, None);
            }
            *a = *remap[*a].get_or_insert_with(|| {
                let id = k;
                k += 1;
                id
            });
        }
        Clustering { assign, k }
    }

    /// Partition of `0..n` into singletons.
    pub fn singletons(n: usize) -> Self {
        Clustering {
            assign: (0..n).collect(),
            k: n,
        }
    }

    /// Number of vertices covered.
    pub fn len(&self) -> usize {
        self.assign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assign.is_empty()
    }

    /// Number of clusters.
    pub fn num_clusters(&self) -> usize {
        self.k
    }

    /// Cluster id of `v`.
    ///
    /// Panics if `v` is out of range.
    pub fn cluster_of(&self, v: usize) -> usize {
        self.assign[v]
    }

    /// Whether `u` and `v` share a cluster.
    pub fn same_cluster(&self, u: usize, v: usize) -> bool {
        self.assign[u] == self.assign[v]
    }

    /// Cluster sizes indexed by cluster id.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &a in &self.assign {
            sizes[a] += 1;
        }
        sizes
    }

    /// Per-vertex cluster ids.
    pub fn assignments(&self) -> &[usize] {
        &self.assign
    }
}

/// A bundle of edge-type layers over one shared vertex set, plus the union
/// edge universe the learner works on.
#[derive(Debug, Clone)]
pub struct LayerSet {
    n: usize,
    layers: Vec<Graph>,
    union_pairs: Vec<(usize, usize)>,
}

impl LayerSet {
    /// Bundles layers, which must be nonempty and agree on vertex count.
    pub fn new(layers: Vec<Graph>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::InvalidConfig("a layer set needs at least one layer".into()));
        };
        let n = first.vertex_count();
        for layer in &layers {
            if layer.vertex_count() != n {
                return Err(Error::VertexCountMismatch {
                    expected: n,
                    found: layer.vertex_count(),
                });
            }
        }
        let mut union_pairs: Vec<(usize, usize)> = layers.iter().flat_map(|g| g.edges()).collect();
        union_pairs.sort_unstable();
        union_pairs.dedup();
        Ok(LayerSet {
            n,
            layers,
            union_pairs,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Graph] {
        &self.layers
    }

    pub fn layer(&self, i: usize) -> &Graph {
        &self.layers[i]
    }

    /// Union edge set as sorted pairs with `u < v`.
    pub fn union_pairs(&self) -> &[(usize, usize)] {
        &self.union_pairs
    }

    /// The union of all layers as a graph.
    pub fn union_graph(&self) -> Graph {
        Graph::from_sorted_pairs(self.n, &self.union_pairs)
    }
}
