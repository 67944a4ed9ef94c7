//! Stochastic block model generators for synthetic multi-layer studies.
//!
//! All generators are deterministic in the seed: pairs are enumerated in
//! fixed lexicographic order (`u < v`) and each pair consumes exactly one
//! uniform draw from a ChaCha stream, so a seed pins the graph down to the
//! bit across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Clustering, Graph, LayerSet};

/// Block sizes plus a `k x k` edge-probability matrix.
#[derive(Debug, Clone)]
pub struct BlockModelSpec {
    block_sizes: Vec<usize>,
    probabilities: Vec<Vec<f64>>,
}

impl BlockModelSpec {
    pub fn new(block_sizes: Vec<usize>, probabilities: Vec<Vec<f64>>) -> Result<Self> {
        let k = block_sizes.len();
        if k == 0 {
            return Err(Error::InvalidConfig("block model needs at least one block".into()));
        }
        if probabilities.len() != k || probabilities.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidConfig(format!(
                "probability matrix must be {k} x {k} to match the block count"
            )));
        }
        for row in &probabilities {
            for &p in row {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidProbability(p));
                }
            }
        }
        Ok(BlockModelSpec {
            block_sizes,
            probabilities,
        })
    }

    /// Uniform planted-partition matrix: `p` on the diagonal, `r` off it.
    pub fn planted(block_sizes: Vec<usize>, p: f64, r: f64) -> Result<Self> {
        let k = block_sizes.len();
        let probabilities = (0..k)
            .map(|i| (0..k).map(|j| if i == j { p } else { r }).collect())
            .collect();
        Self::new(block_sizes, probabilities)
    }

    /// Matrix with `p` at diagonal entry `(local, local)` and `r` everywhere
    /// else, the single-layer building block of the local SBM.
    pub fn local(block_sizes: Vec<usize>, local: usize, p: f64, r: f64) -> Result<Self> {
        let k = block_sizes.len();
        if local >= k {
            return Err(Error::InvalidConfig(format!(
                "local block {local} out of range for {k} blocks"
            )));
        }
        let probabilities = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| if i == j && i == local { p } else { r })
                    .collect()
            })
            .collect();
        Self::new(block_sizes, probabilities)
    }

    pub fn vertex_count(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// Block id for every vertex; blocks occupy consecutive id ranges.
    fn block_of_vertex(&self) -> Vec<usize> {
        let mut blocks = Vec::with_capacity(self.vertex_count());
        for (b, &size) in self.block_sizes.iter().enumerate() {
            blocks.extend(std::iter::repeat(b).take(size));
        }
        blocks
    }
}

/// Ground-truth clustering for consecutive blocks of the given sizes.
pub fn block_truth(block_sizes: &[usize]) -> Clustering {
    let mut assign = Vec::new();
    for (b, &size) in block_sizes.iter().enumerate() {
        assign.extend(std::iter::repeat(b).take(size));
    }
    Clustering::from_assignment(assign)
}

/// Draws one graph from a stochastic block model.
pub fn sbm(spec: &BlockModelSpec, seed: u64) -> Graph {
    let n = spec.vertex_count();
    let block = spec.block_of_vertex();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for u in 0..n {
        let row = &spec.probabilities[block[u]];
        for v in (u + 1)..n {
            if rng.random::<f64>() < row[block[v]] {
                pairs.push((u, v));
            }
        }
    }
    Graph::from_sorted_pairs(n, &pairs)
}

/// Erdos-Renyi graph, the one-block special case of the SBM.
pub fn er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    let spec = BlockModelSpec::new(vec![n], vec![vec![p]])?;
    Ok(sbm(&spec, seed))
}

/// Draws `m` planted-partition layers over one vertex set; layer `i` uses
/// `p[i]` within blocks and `r[i]` across.
pub fn gsbm_layers(block_sizes: &[usize], p: &[f64], r: &[f64], seed: u64) -> Result<LayerSet> {
    if p.len() != r.len() || p.is_empty() {
        return Err(Error::InvalidConfig(
            "per-layer p and r must have equal, nonzero length".into(),
        ));
    }
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let spec = BlockModelSpec::planted(block_sizes.to_vec(), p[i], r[i])?;
        layers.push(sbm(&spec, seeder.random::<u64>()));
    }
    LayerSet::new(layers)
}

/// Draws local-SBM layers: layer `i < k` elevates only block `i` to `p[i]`
/// with background `r[i]`; layers beyond the block count use their own
/// uniform planted matrix (noise layers have `p = r`).
pub fn lsbm_layers(block_sizes: &[usize], p: &[f64], r: &[f64], seed: u64) -> Result<LayerSet> {
    if p.len() != r.len() || p.is_empty() {
        return Err(Error::InvalidConfig(
            "per-layer p and r must have equal, nonzero length".into(),
        ));
    }
    let k = block_sizes.len();
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let spec = if i < k {
            BlockModelSpec::local(block_sizes.to_vec(), i, p[i], r[i])?
        } else {
            BlockModelSpec::planted(block_sizes.to_vec(), p[i], r[i])?
        };
        layers.push(sbm(&spec, seeder.random::<u64>()));
    }
    LayerSet::new(layers)
}

/// Which multi-layer family a dataset spec draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Every layer is a full planted-partition SBM.
    Gsbm,
    /// Layer `i` carries structure only for block `i`.
    Lsbm,
}

/// A named multi-layer synthetic dataset: family, block sizes, and per-layer
/// probabilities.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub name: String,
    pub family: Family,
    pub block_sizes: Vec<usize>,
    pub p: Vec<f64>,
    pub r: Vec<f64>,
}

/// The benchmark catalog: four equal blocks of 125 vertices throughout.
/// `GSBM-*` layers are global planted partitions, `LSBM-*` layers are
/// one-block local layers, and the `-3` variants add a fifth pure-noise
/// layer with `p = r = 0.01`. `ER only` has no planted structure at all.
const PRESETS: &[(&str, Family, &[f64], &[f64])] = &[
    ("GSBM-1", Family::Gsbm, &[0.2; 4], &[0.05; 4]),
    ("GSBM-2", Family::Gsbm, &[0.3; 4], &[0.05; 4]),
    (
        "GSBM-3",
        Family::Gsbm,
        &[0.3, 0.3, 0.3, 0.3, 0.01],
        &[0.05, 0.05, 0.05, 0.05, 0.01],
    ),
    (
        "GSBM-4",
        Family::Gsbm,
        &[0.1625, 0.125, 0.125, 0.0875],
        &[0.05; 4],
    ),
    ("GSBM-5", Family::Gsbm, &[0.15, 0.10, 0.05, 0.05], &[0.05; 4]),
    ("LSBM-1", Family::Lsbm, &[0.2; 4], &[0.05; 4]),
    ("LSBM-2", Family::Lsbm, &[0.3; 4], &[0.05; 4]),
    (
        "LSBM-3",
        Family::Lsbm,
        &[0.3, 0.3, 0.3, 0.3, 0.01],
        &[0.05, 0.05, 0.05, 0.05, 0.01],
    ),
    ("ER only", Family::Gsbm, &[0.01; 4], &[0.01; 4]),
];

fn normalize_name(name: &str) -> String {
    name.chars()
        .filter(|c| !matches!(c, ' ' | '-' | '_'))
        .flat_map(|c| c.to_lowercase())
        .collect()
}

impl DatasetSpec {
    /// Looks up a preset by catalog name. Matching ignores case, spaces and
    /// hyphens, so `gsbm2` finds `GSBM-2`.
    pub fn preset(name: &str) -> Result<Self> {
        let wanted = normalize_name(name);
        for &(preset_name, family, p, r) in PRESETS {
            if normalize_name(preset_name) == wanted {
                return Ok(DatasetSpec {
                    name: preset_name.to_string(),
                    family,
                    block_sizes: vec![125; 4],
                    p: p.to_vec(),
                    r: r.to_vec(),
                });
            }
        }
        Err(Error::UnknownPreset(
            name.to_string(),
            Self::preset_names().join(", "),
        ))
    }

    pub fn preset_names() -> Vec<&'static str> {
        PRESETS.iter().map(|&(name, ..)| name).collect()
    }

    /// Number of layers.
    pub fn num_layers(&self) -> usize {
        self.p.len()
    }

    /// Draws the layer bundle for this spec.
    pub fn generate(&self, seed: u64) -> Result<LayerSet> {
        match self.family {
            Family::Gsbm => gsbm_layers(&self.block_sizes, &self.p, &self.r, seed),
            Family::Lsbm => lsbm_layers(&self.block_sizes, &self.p, &self.r, seed),
        }
    }

    /// Planted block clustering.
    pub fn truth(&self) -> Clustering {
        block_truth(&self.block_sizes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 4-sigma acceptance band for a binomial count.
    fn binomial_band(trials: usize, p: f64) -> (f64, f64) {
        let mean = trials as f64 * p;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        (mean - 4.0 * sigma, mean + 4.0 * sigma)
    }

    #[test]
    fn er_edge_count_matches_binomial() {
        // n = 500, p = 0.01: 124750 pair trials, mean 1247.5.
        for seed in [1, 2, 3, 4, 5] {
            let g = er(500, 0.01, seed).unwrap();
            let (lo, hi) = binomial_band(124_750, 0.01);
            let count = g.edge_count() as f64;
            assert!(count > lo && count < hi, "seed {seed}: {count} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn single_block_sbm_edge_count_matches_binomial() {
        // One block of 125 at p = 0.3: 7750 trials, mean 2325.
        let spec = BlockModelSpec::new(vec![125], vec![vec![0.3]]).unwrap();
        for seed in [11, 12, 13] {
            let g = sbm(&spec, seed);
            let (lo, hi) = binomial_band(7750, 0.3);
            let count = g.edge_count() as f64;
            assert!(count > lo && count < hi, "seed {seed}: {count} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn planted_p_equals_r_collapses_to_er() {
        // With p = r every pair has the same probability and the draw
        // sequence is identical, so the graphs agree bit for bit.
        let spec = BlockModelSpec::planted(vec![125; 4], 0.05, 0.05).unwrap();
        let a = sbm(&spec, 99);
        let b = er(500, 0.05, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn local_single_block_collapses_to_er() {
        let bundle = lsbm_layers(&[60], &[0.2], &[0.9], 5).unwrap();
        let g = bundle.layer(0);
        let (lo, hi) = binomial_band(60 * 59 / 2, 0.2);
        let count = g.edge_count() as f64;
        assert!(count > lo && count < hi, "{count} outside [{lo}, {hi}]");
    }

    #[test]
    fn per_block_densities_match_matrix() {
        let spec = BlockModelSpec::planted(vec![125; 4], 0.3, 0.05).unwrap();
        let g = sbm(&spec, 7);
        let truth = block_truth(&[125; 4]);
        let mut within = vec![0usize; 4];
        let mut across = 0usize;
        for (u, v) in g.edges() {
            if truth.same_cluster(u, v) {
                within[truth.cluster_of(u)] += 1;
            } else {
                across += 1;
            }
        }
        for (b, &count) in within.iter().enumerate() {
            let (lo, hi) = binomial_band(7750, 0.3);
            assert!(
                (count as f64) > lo && (count as f64) < hi,
                "block {b}: {count} outside [{lo}, {hi}]"
            );
        }
        let (lo, hi) = binomial_band(93_750, 0.05);
        assert!((across as f64) > lo && (across as f64) < hi);
    }

    #[test]
    fn union_density_follows_inclusion_exclusion() {
        // Four independent layers at (p, r) = (0.3, 0.05): a within-block
        // pair appears in the union with probability 1 - 0.7^4, an
        // across-block pair with 1 - 0.95^4.
        let set = gsbm_layers(&[125; 4], &[0.3; 4], &[0.05; 4], 21).unwrap();
        let truth = block_truth(&[125; 4]);
        let mut within = 0usize;
        let mut across = 0usize;
        for &(u, v) in set.union_pairs() {
            if truth.same_cluster(u, v) {
                within += 1;
            } else {
                across += 1;
            }
        }
        let p_within = 1.0 - 0.7f64.powi(4);
        let p_across = 1.0 - 0.95f64.powi(4);
        let (lo, hi) = binomial_band(31_000, p_within);
        assert!((within as f64) > lo && (within as f64) < hi, "{within} vs [{lo}, {hi}]");
        let (lo, hi) = binomial_band(93_750, p_across);
        assert!((across as f64) > lo && (across as f64) < hi, "{across} vs [{lo}, {hi}]");
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let spec = BlockModelSpec::planted(vec![50; 2], 0.2, 0.05).unwrap();
        assert_eq!(sbm(&spec, 42), sbm(&spec, 42));
        assert_ne!(sbm(&spec, 42), sbm(&spec, 43));
        let a = gsbm_layers(&[50; 2], &[0.2, 0.3], &[0.05, 0.05], 8).unwrap();
        let b = gsbm_layers(&[50; 2], &[0.2, 0.3], &[0.05, 0.05], 8).unwrap();
        for (x, y) in a.layers().iter().zip(b.layers()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn invalid_probabilities_are_rejected() {
        assert!(matches!(
            BlockModelSpec::planted(vec![10], 1.5, 0.0),
            Err(crate::Error::InvalidProbability(_))
        ));
        assert!(er(10, -0.1, 0).is_err());
    }

    #[test]
    fn presets_cover_the_catalog() {
        for name in DatasetSpec::preset_names() {
            let spec = DatasetSpec::preset(name).unwrap();
            assert_eq!(spec.block_sizes.iter().sum::<usize>(), 500);
        }
        let spec = DatasetSpec::preset("gsbm2").unwrap();
        assert_eq!(spec.name, "GSBM-2");
        assert_eq!(spec.num_layers(), 4);
        let spec = DatasetSpec::preset("er only").unwrap();
        assert_eq!(spec.name, "ER only");
        assert!(DatasetSpec::preset("GSBM-9").is_err());
        let lsbm3 = DatasetSpec::preset("LSBM-3").unwrap();
        assert_eq!(lsbm3.num_layers(), 5);
        assert_eq!(lsbm3.p[4], lsbm3.r[4]);
    }

    #[test]
    fn dataset_truth_matches_blocks() {
        let spec = DatasetSpec::preset("GSBM-1").unwrap();
        let truth = spec.truth();
        assert_eq!(truth.len(), 500);
        assert_eq!(truth.num_clusters(), 4);
        assert_eq!(truth.sizes(), vec![125; 4]);
        let set = spec.generate(3).unwrap();
        assert_eq!(set.vertex_count(), 500);
        assert_eq!(set.num_layers(), 4);
    }
}
