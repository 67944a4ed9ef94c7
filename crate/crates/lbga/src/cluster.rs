//! Clustering events: Walktrap, connected components, and a null clusterer
//! for reward functions that never read the partition.
//!
//! Walktrap follows the short-random-walk agglomeration scheme: vertices
//! whose t-step walk distributions look alike get merged first, merges are
//! Ward-style greedy between adjacent communities only, and the reported
//! partition is the dendrogram level of maximum modularity.

use std::collections::HashMap;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Clustering, Graph};

/// Which clustering event to run each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClustererSpec {
    /// Random-walk agglomeration with the given walk length.
    Walktrap { walk_length: usize },
    /// Connected components: cheap, for scalability benchmarking.
    ConnectedComponents,
    /// No clustering at all; only valid with quality measures that ignore
    /// the partition.
    Null,
}

impl Default for ClustererSpec {
    fn default() -> Self {
        ClustererSpec::Walktrap { walk_length: 4 }
    }
}

impl ClustererSpec {
    /// Looks up a clusterer by CLI-style name, with the default walk length.
    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_lowercase().replace(['-', '_'], "").as_str() {
            "walktrap" => Ok(ClustererSpec::default()),
            "cc" | "connectedcomponents" => Ok(ClustererSpec::ConnectedComponents),
            "null" | "none" => Ok(ClustererSpec::Null),
            other => Err(Error::InvalidConfig(format!(
                "unknown clusterer '{other}' (known: walktrap, connected-components, null)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClustererSpec::Walktrap { .. } => "walktrap",
            ClustererSpec::ConnectedComponents => "connected-components",
            ClustererSpec::Null => "null",
        }
    }
}

/// Runs the configured clusterer on a graph. The null clusterer is an error
/// here: callers that allow it must not ask for a partition.
pub fn cluster(spec: &ClustererSpec, g: &Graph) -> Result<Clustering> {
    match *spec {
        ClustererSpec::Walktrap { walk_length } => Ok(walktrap(g, walk_length)),
        ClustererSpec::ConnectedComponents => Ok(connected_components(g)),
        ClustererSpec::Null => Err(Error::InvalidConfig(
            "the null clusterer produces no clustering".into(),
        )),
    }
}

/// Clusters by connected component, ids in order of smallest member vertex.
pub fn connected_components(g: &Graph) -> Clustering {
    let n = g.vertex_count();
    let mut assign = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = Vec::new();
    for start in 0..n {
        if assign[start] != usize::MAX {
            continue;
        }
        assign[start] = next;
        queue.push(start);
        while let Some(u) = queue.pop() {
            for &v in g.neighbors(u) {
                if assign[v] == usize::MAX {
                    assign[v] = next;
                    queue.push(v);
                }
            }
        }
        next += 1;
    }
    Clustering::from_assignment(assign)
}

/// Walktrap community detection with walks of length `walk_length`.
///
/// Isolated vertices stay singletons, merges never cross connected
/// components, and an edgeless graph yields all singletons. Ties in the
/// merge ordering break toward the lexicographically smallest community
/// pair, so results are deterministic for a fixed graph.
pub fn walktrap(g: &Graph, walk_length: usize) -> Clustering {
    let n = g.vertex_count();
    if g.edge_count() == 0 {
        return Clustering::singletons(n);
    }
    let rows = walk_rows(g, walk_length.max(1));
    Merger::new(g, rows).run()
}

/// Scaled walk rows: entry `k` of row `x` is `(P^t)_{xk} / sqrt(d_k)`, so
/// squared community distances become plain squared Euclidean distances.
/// Rows are `None` for isolated vertices.
fn walk_rows(g: &Graph, t: usize) -> Vec<Option<Vec<f64>>> {
    let n = g.vertex_count();
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|v| {
            let d = g.degree(v);
            if d > 0 {
                1.0 / (d as f64).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    // Dense matrix powers win once the graph stops being sparse; the sparse
    // per-source propagation wins far below that. Both compute the same rows.
    let dense = n >= 128 && 2 * g.edge_count() >= n * n / 16;
    if dense {
        let mut p = Array2::<f64>::zeros((n, n));
        for u in 0..n {
            let d = g.degree(u);
            if d == 0 {
                continue;
            }
            let share = 1.0 / d as f64;
            for &v in g.neighbors(u) {
                p[[u, v]] = share;
            }
        }
        let pt = mat_pow(p, t);
        (0..n)
            .map(|u| {
                if g.degree(u) == 0 {
                    return None;
                }
                let row = pt.row(u);
                Some(
                    row.iter()
                        .zip(&inv_sqrt_deg)
                        .map(|(&x, &s)| x * s)
                        .collect(),
                )
            })
            .collect()
    } else {
        (0..n)
            .into_par_iter()
            .map(|source| {
                if g.degree(source) == 0 {
                    return None;
                }
                let mut cur = vec![0.0f64; n];
                let mut next = vec![0.0f64; n];
                cur[source] = 1.0;
                for _ in 0..t {
                    next.iter_mut().for_each(|x| *x = 0.0);
                    for j in 0..n {
                        let mass = cur[j];
                        if mass > 0.0 {
                            let share = mass / g.degree(j) as f64;
                            for &k in g.neighbors(j) {
                                next[k] += share;
                            }
                        }
                    }
                    std::mem::swap(&mut cur, &mut next);
                }
                for (x, &s) in cur.iter_mut().zip(&inv_sqrt_deg) {
                    *x *= s;
                }
                Some(cur)
            })
            .collect()
    }
}

/// Matrix power by repeated squaring; `t >= 1`.
fn mat_pow(base: Array2<f64>, mut t: usize) -> Array2<f64> {
    let mut base = base;
    let mut acc: Option<Array2<f64>> = None;
    loop {
        if t & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => a.dot(&base),
            });
        }
        t >>= 1;
        if t == 0 {
            return acc.expect("mat_pow requires t >= 1");
        }
        base = base.dot(&base);
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Heap entry for a candidate merge; ordered by (delta sigma, pair).
#[derive(Debug, PartialEq)]
struct Candidate {
    dsigma: f64,
    a: u32,
    b: u32,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.dsigma
            .total_cmp(&other.dsigma)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

fn pair_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// State of the agglomeration: per-community size, walk vector, volume,
/// internal edge count, and cross-edge counts to adjacent communities.
struct Merger {
    n: usize,
    total_edges: f64,
    size: Vec<usize>,
    vector: Vec<Option<Vec<f64>>>,
    volume: Vec<f64>,
    adjacency: Vec<HashMap<u32, u32>>,
    alive: Vec<bool>,
    dist: HashMap<(u32, u32), f64>,
    heap: std::collections::BinaryHeap<std::cmp::Reverse<Candidate>>,
    /// (a, b, merged id) in merge order.
    merges: Vec<(u32, u32, u32)>,
    /// Modularity after `i` merges.
    levels: Vec<f64>,
}

impl Merger {
    fn new(g: &Graph, rows: Vec<Option<Vec<f64>>>) -> Self {
        let n = g.vertex_count();
        let total_edges = g.edge_count() as f64;
        let size = vec![1usize; n];
        let volume: Vec<f64> = (0..n).map(|v| g.degree(v) as f64).collect();
        let adjacency: Vec<HashMap<u32, u32>> = (0..n)
            .map(|u| g.neighbors(u).iter().map(|&v| (v as u32, 1u32)).collect())
            .collect();
        let alive: Vec<bool> = (0..n).map(|v| g.degree(v) > 0).collect();

        // Singleton-partition modularity: no internal edges, only volumes.
        let q0: f64 = volume
            .iter()
            .map(|&vol| -(vol / (2.0 * total_edges)).powi(2))
            .sum();

        let edges: Vec<(usize, usize)> = g.edges().collect();
        let scored: Vec<((u32, u32), f64)> = edges
            .par_iter()
            .map(|&(u, v)| {
                let d2 = squared_distance(
                    rows[u].as_ref().expect("endpoint of an edge is not isolated"),
                    rows[v].as_ref().expect("endpoint of an edge is not isolated"),
                );
                // Ward increment for two singletons: (1*1 / (1+1)) * d2 / n.
                ((u as u32, v as u32), 0.5 * d2 / n as f64)
            })
            .collect();

        let mut dist = HashMap::with_capacity(scored.len() * 2);
        let mut heap = std::collections::BinaryHeap::with_capacity(scored.len() * 2);
        for ((a, b), dsigma) in scored {
            dist.insert(pair_key(a, b), dsigma);
            heap.push(std::cmp::Reverse(Candidate { dsigma, a, b }));
        }

        Merger {
            n,
            total_edges,
            size,
            vector: rows,
            volume,
            adjacency,
            alive,
            dist,
            heap,
            merges: Vec::with_capacity(n),
            levels: vec![q0],
        }
    }

    fn direct_dsigma(&self, c1: usize, c2: usize) -> f64 {
        let d2 = squared_distance(
            self.vector[c1].as_ref().expect("live community has a vector"),
            self.vector[c2].as_ref().expect("live community has a vector"),
        );
        let (s1, s2) = (self.size[c1] as f64, self.size[c2] as f64);
        s1 * s2 / (s1 + s2) * d2 / self.n as f64
    }

    fn run(mut self) -> Clustering {
        while let Some(std::cmp::Reverse(cand)) = self.heap.pop() {
            let (a, b) = (cand.a as usize, cand.b as usize);
            if !self.alive[a] || !self.alive[b] {
                continue;
            }
            // Skip entries superseded by a recomputed distance.
            if self.dist.get(&pair_key(cand.a, cand.b)) != Some(&cand.dsigma) {
                continue;
            }
            self.merge(cand.a, cand.b, cand.dsigma);
        }
        self.best_level_assignment()
    }

    fn merge(&mut self, a: u32, b: u32, dsigma_ab: f64) {
        let (ai, bi) = (a as usize, b as usize);
        let new = self.size.len() as u32;
        let ni = new as usize;

        let (sa, sb) = (self.size[ai], self.size[bi]);
        let merged_size = sa + sb;
        let va = self.vector[ai].take().expect("live community has a vector");
        let vb = self.vector[bi].take().expect("live community has a vector");
        let (wa, wb) = (
            sa as f64 / merged_size as f64,
            sb as f64 / merged_size as f64,
        );
        let merged_vec: Vec<f64> = va.iter().zip(&vb).map(|(&x, &y)| wa * x + wb * y).collect();

        let mut adj_a = std::mem::take(&mut self.adjacency[ai]);
        let adj_b = std::mem::take(&mut self.adjacency[bi]);
        let cross_ab = *adj_a.get(&b).expect("merged communities are adjacent");

        // Modularity increment: the cross edges become internal, and the
        // squared-volume penalty picks up the product term.
        let delta_q = cross_ab as f64 / self.total_edges
            - self.volume[ai] * self.volume[bi] / (2.0 * self.total_edges * self.total_edges);
        let q = self.levels.last().unwrap() + delta_q;

        // Combined neighbor map, dropping the two merged ids.
        for (&x, &count) in &adj_b {
            if x != a {
                *adj_a.entry(x).or_insert(0) += count;
            }
        }
        adj_a.remove(&a);
        adj_a.remove(&b);

        self.alive[ai] = false;
        self.alive[bi] = false;
        self.alive.push(true);
        self.size.push(merged_size);
        self.vector.push(Some(merged_vec));
        self.volume.push(self.volume[ai] + self.volume[bi]);
        self.dist.remove(&pair_key(a, b));
        self.levels.push(q);
        self.merges.push((a, b, new));

        let neighbors: Vec<(u32, u32)> = adj_a.iter().map(|(&x, &c)| (x, c)).collect();
        self.adjacency.push(adj_a);
        for &(x, count) in &neighbors {
            let xi = x as usize;
            let old_a = self.dist.remove(&pair_key(a, x));
            let old_b = self.dist.remove(&pair_key(b, x));
            let dsigma = match (old_a, old_b) {
                // Lance-Williams update when the neighbor saw both halves.
                (Some(da), Some(db)) => {
                    let (s1, s2, sx) = (sa as f64, sb as f64, self.size[xi] as f64);
                    let lw =
                        ((s1 + sx) * da + (s2 + sx) * db - sx * dsigma_ab) / (s1 + s2 + sx);
                    #[cfg(debug_assertions)]
                    if self.n <= 300 {
                        let direct = self.direct_dsigma(ni, xi);
                        debug_assert!(
                            (lw - direct).abs() <= 1e-9 + 1e-9 * direct.abs(),
                            "lance-williams {lw} vs direct {direct}"
                        );
                    }
                    lw
                }
                _ => self.direct_dsigma(ni, xi),
            };
            self.dist.insert(pair_key(new, x), dsigma);
            self.heap.push(std::cmp::Reverse(Candidate { dsigma, a: new, b: x }));
            let adj_x = &mut self.adjacency[xi];
            adj_x.remove(&a);
            adj_x.remove(&b);
            adj_x.insert(new, count);
        }
    }

    /// Picks the dendrogram level of maximum modularity (earliest level on
    /// exact ties) and resolves the vertex assignment there.
    fn best_level_assignment(&self) -> Clustering {
        let mut best = 0;
        for (level, &q) in self.levels.iter().enumerate() {
            if q > self.levels[best] {
                best = level;
            }
        }
        let mut parent: Vec<u32> = (0..self.size.len() as u32).collect();
        for &(a, b, new) in &self.merges[..best] {
            parent[a as usize] = new;
            parent[b as usize] = new;
        }
        let assign: Vec<usize> = (0..self.n)
            .map(|v| {
                let mut c = v as u32;
                while parent[c as usize] != c {
                    c = parent[c as usize];
                }
                c as usize
            })
            .collect();
        Clustering::from_assignment(assign)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn clique_edges(base: usize, size: usize) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..size {
            for j in (i + 1)..size {
                edges.push((base + i, base + j));
            }
        }
        edges
    }

    #[test]
    fn two_disjoint_cliques_split_exactly() {
        let mut edges = clique_edges(0, 4);
        edges.extend(clique_edges(4, 4));
        let g = Graph::from_edges(8, &edges).unwrap();
        let c = walktrap(&g, 4);
        assert_eq!(c.num_clusters(), 2);
        assert!(c.same_cluster(0, 3) && c.same_cluster(4, 7));
        assert!(!c.same_cluster(0, 4));
    }

    #[test]
    fn bridged_cliques_still_split() {
        let mut edges = clique_edges(0, 4);
        edges.extend(clique_edges(4, 4));
        edges.push((3, 4));
        let g = Graph::from_edges(8, &edges).unwrap();
        let c = walktrap(&g, 4);
        assert_eq!(c.num_clusters(), 2);
        assert!(c.same_cluster(0, 3) && c.same_cluster(4, 7));
    }

    #[test]
    fn bridged_triangles_split() {
        let g = Graph::from_edges(
            6,
            &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)],
        )
        .unwrap();
        let c = walktrap(&g, 4);
        assert_eq!(c.num_clusters(), 2);
        assert!(c.same_cluster(0, 2) && c.same_cluster(3, 5));
    }

    #[test]
    fn complete_graph_collapses_to_one_cluster() {
        let g = Graph::from_edges(6, &clique_edges(0, 6)).unwrap();
        let c = walktrap(&g, 4);
        assert_eq!(c.num_clusters(), 1);
    }

    #[test]
    fn empty_graph_yields_singletons() {
        let g = Graph::from_edges(5, &[]).unwrap();
        assert_eq!(walktrap(&g, 4), Clustering::singletons(5));
    }

    #[test]
    fn isolated_vertices_stay_singletons() {
        let mut edges = clique_edges(0, 3);
        edges.extend(clique_edges(3, 3));
        // Vertices 6 and 7 are isolated.
        let g = Graph::from_edges(8, &edges).unwrap();
        let c = walktrap(&g, 4);
        assert_eq!(c.num_clusters(), 4);
        assert!(!c.same_cluster(6, 7));
        assert!(c.same_cluster(0, 2) && c.same_cluster(3, 5));
    }

    #[test]
    fn components_are_never_merged_across() {
        // Two components that each keep internal structure.
        let mut edges = clique_edges(0, 4);
        edges.extend(clique_edges(4, 3));
        let g = Graph::from_edges(7, &edges).unwrap();
        let c = walktrap(&g, 4);
        for u in 0..4 {
            for v in 4..7 {
                assert!(!c.same_cluster(u, v));
            }
        }
    }

    #[test]
    fn walktrap_is_deterministic() {
        let g = synth::sbm(
            &synth::BlockModelSpec::planted(vec![40; 3], 0.4, 0.05).unwrap(),
            33,
        );
        assert_eq!(walktrap(&g, 4), walktrap(&g, 4));
    }

    #[test]
    fn walktrap_is_permutation_equivariant() {
        let mut edges = clique_edges(0, 4);
        edges.extend(clique_edges(4, 4));
        edges.push((0, 4));
        let g = Graph::from_edges(8, &edges).unwrap();
        // Reverse the vertex labels.
        let perm: Vec<usize> = (0..8).rev().collect();
        let mapped: Vec<(usize, usize)> = g.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        let gp = Graph::from_edges(8, &mapped).unwrap();
        let c = walktrap(&g, 4);
        let cp = walktrap(&gp, 4);
        let lifted = Clustering::from_assignment(
            (0..8).map(|v| cp.cluster_of(perm[v])).collect(),
        );
        assert_eq!(crate::metrics::nmi(&c, &lifted).unwrap(), 1.0);
    }

    #[test]
    fn walktrap_recovers_a_strong_planted_partition() {
        let spec = synth::BlockModelSpec::planted(vec![60; 2], 0.5, 0.02).unwrap();
        let g = synth::sbm(&spec, 5);
        let truth = synth::block_truth(&[60; 2]);
        let c = walktrap(&g, 4);
        let score = crate::metrics::nmi(&c, &truth).unwrap();
        assert!(score > 0.99, "nmi {score}");
    }

    #[test]
    fn dense_and_sparse_walk_rows_agree() {
        // n = 120 stays under the dense-path cutoff, so walk_rows takes the
        // sparse route; recompute the same rows through the matrix power.
        let spec = synth::BlockModelSpec::planted(vec![60; 2], 0.6, 0.3).unwrap();
        let g = synth::sbm(&spec, 11);
        let sparse = walk_rows(&g, 4);
        // Rebuild densely through the matrix power.
        let n = g.vertex_count();
        let mut p = Array2::<f64>::zeros((n, n));
        for u in 0..n {
            if g.degree(u) == 0 {
                continue;
            }
            let share = 1.0 / g.degree(u) as f64;
            for &v in g.neighbors(u) {
                p[[u, v]] = share;
            }
        }
        let pt = mat_pow(p, 4);
        for u in 0..n {
            let row = sparse[u].as_ref().unwrap();
            for k in 0..n {
                let scale = if g.degree(k) > 0 {
                    1.0 / (g.degree(k) as f64).sqrt()
                } else {
                    0.0
                };
                let want = pt[[u, k]] * scale;
                assert!((row[k] - want).abs() < 1e-12, "row {u} entry {k}");
            }
        }
    }

    #[test]
    fn walk_rows_are_walk_distributions() {
        // Path 0-1-2, t = 2: from vertex 0 the walk is at 1 after one step
        // and splits to {0, 2} after two.
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let rows = walk_rows(&g, 2);
        let row0 = rows[0].as_ref().unwrap();
        // Unscale by sqrt(d_k).
        let d = [1.0f64, 2.0, 1.0];
        let unscaled: Vec<f64> = row0.iter().zip(&d).map(|(&x, s)| x * s.sqrt()).collect();
        assert!((unscaled[0] - 0.5).abs() < 1e-15);
        assert!((unscaled[1] - 0.0).abs() < 1e-15);
        assert!((unscaled[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn connected_components_split_and_label_in_order() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (4, 5)]).unwrap();
        let c = connected_components(&g);
        assert_eq!(c.num_clusters(), 3);
        assert_eq!(c.assignments(), &[0, 0, 0, 1, 2, 2]);
    }

    #[test]
    fn null_clusterer_refuses_to_cluster() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(cluster(&ClustererSpec::Null, &g).is_err());
        assert!(cluster(&ClustererSpec::default(), &g).is_ok());
    }

    #[test]
    fn by_name_resolves_clusterers() {
        assert_eq!(
            ClustererSpec::by_name("walktrap").unwrap(),
            ClustererSpec::Walktrap { walk_length: 4 }
        );
        assert_eq!(
            ClustererSpec::by_name("connected-components").unwrap(),
            ClustererSpec::ConnectedComponents
        );
        assert_eq!(ClustererSpec::by_name("null").unwrap(), ClustererSpec::Null);
        assert!(ClustererSpec::by_name("kmeans").is_err());
    }
}
