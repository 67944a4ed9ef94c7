//! The aggregation engine: a per-edge multiplicative-weights game over the
//! union edge set of the layers.
//!
//! Every pair in the union keeps one weight per layer. Each round the engine
//! samples a candidate graph edge-by-edge from the current inclusion
//! probabilities, clusters it, rewards every still-active pair by the
//! configured quality measure, updates its weights, and freezes pairs whose
//! inclusion probability leaves the `(delta, 1 - delta)` band: high ones
//! join the learned graph for all later rounds, low ones drop out of play.
//! The loop ends when no active pairs remain or a round cap is hit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cluster::{cluster, ClustererSpec};
use crate::error::{Error, Result};
use crate::graph::{Clustering, Graph, LayerSet};
use crate::metrics;
use crate::quality::{QualityKind, QualitySpec};

/// Engine parameters. `epsilon` scales rewards on layers that contain the
/// pair, `nu` scales them on layers that do not, and pairs freeze once
/// their inclusion probability passes `1 - delta` (kept) or `delta`
/// (dropped). Defaults mirror the standard experiment setup.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub epsilon: f64,
    pub nu: f64,
    pub delta: f64,
    pub max_rounds: usize,
    pub seed: u64,
    pub quality: QualitySpec,
    pub clusterer: ClustererSpec,
}

impl EngineConfig {
    pub fn new(quality: QualitySpec) -> Self {
        EngineConfig {
            epsilon: 0.2,
            nu: 0.2,
            delta: 0.05,
            max_rounds: 1000,
            seed: 0,
            quality,
            clusterer: ClustererSpec::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rates(mut self, epsilon: f64, nu: f64) -> Self {
        self.epsilon = epsilon;
        self.nu = nu;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_max_rounds(mut self, max_rounds: usize) -> Self {
        self.max_rounds = max_rounds;
        self
    }

    pub fn with_clusterer(mut self, clusterer: ClustererSpec) -> Self {
        self.clusterer = clusterer;
        self
    }

    fn validate(&self, layers: &LayerSet, truth: Option<&Clustering>) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.nu >= 0.0 && self.nu < 1.0) {
            return fail(format!("nu must lie in [0, 1), got {}", self.nu));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return fail(format!("delta must lie in (0, 0.5], got {}", self.delta));
        }
        if self.max_rounds == 0 {
            return fail("max_rounds must be at least 1".into());
        }
        if self.quality.requires_clustering() && self.clusterer == ClustererSpec::Null {
            return fail(format!(
                "quality '{}' reads the clustering and cannot run under the null clusterer",
                self.quality.kind.name()
            ));
        }
        let n = layers.vertex_count();
        if matches!(self.quality.kind, QualityKind::No | QualityKind::ConsistentNo) && n < 2 {
            return fail("neighborhood-overlap quality needs at least 2 vertices".into());
        }
        if self.quality.kind == QualityKind::Oracle {
            match &self.quality.oracle {
                None => return fail("oracle quality needs a reference clustering".into()),
                Some(c) if c.len() != n => {
                    return fail(format!(
                        "oracle clustering covers {} vertices but the layers have {n}",
                        c.len()
                    ))
                }
                _ => {}
            }
        }
        if let Some(t) = truth {
            if t.len() != n {
                return fail(format!(
                    "ground truth covers {} vertices but the layers have {n}",
                    t.len()
                ));
            }
        }
        Ok(())
    }
}

/// Fate of a pair in the union universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairStatus {
    Active,
    FixedIn,
    FixedOut,
}

/// Per-pair, per-layer weights over the union edge universe, plus the
/// derived inclusion probabilities and fix status. Weights of fixed pairs
/// stay frozen at their value when the pair left play.
#[derive(Debug, Clone)]
pub struct WeightTable {
    m: usize,
    pairs: Vec<(usize, usize)>,
    masks: Vec<u64>,
    weights: Vec<f64>,
    p: Vec<f64>,
    status: Vec<PairStatus>,
    active: usize,
}

impl WeightTable {
    /// Builds the initial table: all weights 1, every union pair active,
    /// inclusion probability = fraction of layers containing the pair.
    pub fn new(layers: &LayerSet) -> Result<Self> {
        let m = layers.num_layers();
        if m > 64 {
            return Err(Error::InvalidConfig(format!(
                "at most 64 layers are supported, got {m}"
            )));
        }
        let pairs = layers.union_pairs().to_vec();
        let masks: Vec<u64> = pairs
            .iter()
            .map(|&(u, v)| {
                let mut mask = 0u64;
                for (i, layer) in layers.layers().iter().enumerate() {
                    if layer.has_edge(u, v) {
                        mask |= 1 << i;
                    }
                }
                mask
            })
            .collect();
        let p = masks
            .iter()
            .map(|mask| mask.count_ones() as f64 / m as f64)
            .collect();
        let len = pairs.len();
        Ok(WeightTable {
            m,
            pairs,
            masks,
            weights: vec![1.0; len * m],
            p,
            status: vec![PairStatus::Active; len],
            active: len,
        })
    }

    /// Number of pairs in the union universe.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Number of layers.
    pub fn num_layers(&self) -> usize {
        self.m
    }

    /// Pairs still in play.
    pub fn active_count(&self) -> usize {
        self.active
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, idx: usize) -> (usize, usize) {
        self.pairs[idx]
    }

    /// Index of a pair in the universe, if it is part of the union.
    pub fn index_of(&self, u: usize, v: usize) -> Option<usize> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.pairs.binary_search(&key).ok()
    }

    /// Current inclusion probability of the pair at `idx`.
    pub fn probability(&self, idx: usize) -> f64 {
        self.p[idx]
    }

    pub fn status(&self, idx: usize) -> PairStatus {
        self.status[idx]
    }

    /// Layer-membership bitmask of the pair at `idx`.
    pub fn mask(&self, idx: usize) -> u64 {
        self.masks[idx]
    }

    /// Per-layer weights of the pair at `idx`.
    pub fn weights_of(&self, idx: usize) -> &[f64] {
        &self.weights[idx * self.m..(idx + 1) * self.m]
    }

    /// Applies one multiplicative update to an active pair: member layers
    /// scale by `1 + epsilon * q`, the rest by `1 - nu * q`, and the
    /// inclusion probability is recomputed.
    ///
    /// Panics if the pair is not in the universe.
    pub fn update_pair(&mut self, u: usize, v: usize, q: f64, epsilon: f64, nu: f64) {
        let idx = self
            .index_of(u, v)
            .unwrap_or_else(|| panic!("pair ({u}, {v}) is not in the union universe"));
        self.update_idx(idx, q, epsilon, nu);
    }

    fn update_idx(&mut self, idx: usize, q: f64, epsilon: f64, nu: f64) {
        debug_assert_eq!(self.status[idx], PairStatus::Active, "fixed pairs never update");
        let mask = self.masks[idx];
        let row = &mut self.weights[idx * self.m..(idx + 1) * self.m];
        let (up, down) = (1.0 + epsilon * q, 1.0 - nu * q);
        let mut member_sum = 0.0;
        let mut total_sum = 0.0;
        let mut row_max = 0.0f64;
        for (i, w) in row.iter_mut().enumerate() {
            *w *= if mask >> i & 1 == 1 { up } else { down };
            total_sum += *w;
            if mask >> i & 1 == 1 {
                member_sum += *w;
            }
            row_max = row_max.max(*w);
        }
        // Only weight ratios matter; rescale long-running rows before they
        // drift toward overflow or underflow.
        if row_max > 1e150 || row_max < 1e-150 {
            for w in row.iter_mut() {
                *w /= row_max;
            }
            member_sum /= row_max;
            total_sum /= row_max;
        }
        self.p[idx] = member_sum / total_sum;
    }

    /// Freezes every active pair outside the `(delta, 1 - delta)` band and
    /// returns the newly fixed-in and fixed-out pairs.
    pub fn fix_pairs(&mut self, delta: f64) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
        let mut fixed_in = Vec::new();
        let mut fixed_out = Vec::new();
        for idx in 0..self.len() {
            if self.status[idx] == PairStatus::Active {
                if let Some(status) = self.fix_idx(idx, delta) {
                    match status {
                        PairStatus::FixedIn => fixed_in.push(self.pairs[idx]),
                        PairStatus::FixedOut => fixed_out.push(self.pairs[idx]),
                        PairStatus::Active => unreachable!(),
                    }
                }
            }
        }
        (fixed_in, fixed_out)
    }

    fn fix_idx(&mut self, idx: usize, delta: f64) -> Option<PairStatus> {
        let p = self.p[idx];
        let status = if p > 1.0 - delta {
            PairStatus::FixedIn
        } else if p < delta {
            PairStatus::FixedOut
        } else {
            return None;
        };
        self.status[idx] = status;
        self.active -= 1;
        Some(status)
    }

    /// Mean over every pair in the universe of the pair-normalized weight of
    /// each layer; fixed pairs contribute their frozen weights. Columns sum
    /// to 1.
    pub fn layer_mean_weights(&self) -> Vec<f64> {
        let mut means = vec![0.0f64; self.m];
        if self.pairs.is_empty() {
            return means;
        }
        for idx in 0..self.len() {
            let row = self.weights_of(idx);
            let total: f64 = row.iter().sum();
            for (mean, &w) in means.iter_mut().zip(row) {
                *mean += w / total;
            }
        }
        for mean in &mut means {
            *mean /= self.len() as f64;
        }
        means
    }
}

/// Counter-derived coin streams: the coin for (round, pair) is a fixed
/// function of the master seed, so evaluation order and parallelism cannot
/// change any draw.
pub struct CoinSampler {
    base: ChaCha8Rng,
}

impl CoinSampler {
    pub fn new(seed: u64) -> Self {
        CoinSampler {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform draw in `[0, 1)` for the given round and pair index.
    pub fn coin(&self, round: usize, pair_idx: usize) -> f64 {
        let mut rng = self.base.clone();
        rng.set_stream(round as u64);
        rng.set_word_pos((pair_idx as u128) << 4);
        rng.random::<f64>()
    }
}

/// Samples the round-`round` candidate graph: every fixed-in pair plus each
/// active pair whose coin lands under its inclusion probability.
pub fn sample_candidate(
    table: &WeightTable,
    n: usize,
    coins: &CoinSampler,
    round: usize,
) -> Graph {
    let included: Vec<(usize, usize)> = (0..table.len())
        .into_par_iter()
        .filter_map(|idx| match table.status[idx] {
            PairStatus::FixedIn => Some(table.pairs[idx]),
            PairStatus::FixedOut => None,
            PairStatus::Active => {
                if coins.coin(round, idx) < table.p[idx] {
                    Some(table.pairs[idx])
                } else {
                    None
                }
            }
        })
        .collect();
    Graph::from_sorted_pairs(n, &included)
}

/// One row of the learning trace. `nmi` is present only when ground truth
/// was supplied and a clustering ran; `modularity` only when a clustering
/// ran on a non-empty candidate.
#[derive(Debug, Clone)]
pub struct RoundTrace {
    pub round: usize,
    pub nmi: Option<f64>,
    pub modularity: Option<f64>,
    pub edges: usize,
    pub layer_weights: Vec<f64>,
}

/// Outcome of a run: the final candidate graph, the weight table at exit,
/// the per-round trace, and whether the universe emptied before the cap.
#[derive(Debug, Clone)]
pub struct LbgaResult {
    pub graph: Graph,
    pub table: WeightTable,
    pub trace: Vec<RoundTrace>,
    pub rounds_used: usize,
    pub converged: bool,
}

/// Lower bound on the rounds after which, under the ground-truth reward
/// with `epsilon = nu`, every pair's bad-layer probability is below
/// `delta`: the smallest integer `T` with `n_bad / (1 + epsilon)^T <= delta`.
pub fn convergence_bound(delta: f64, epsilon: f64, n_bad: usize) -> usize {
    assert!(delta > 0.0 && delta <= 0.5, "delta must lie in (0, 0.5]");
    assert!(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    if n_bad == 0 {
        return 0;
    }
    let t = ((1.0 / delta).ln() + (n_bad as f64).ln()) / (1.0 + epsilon).ln();
    t.ceil() as usize
}

/// Runs the engine to completion. See [`run_observed`] for a variant that
/// watches the table between rounds.
pub fn run(
    layers: &LayerSet,
    config: &EngineConfig,
    truth: Option<&Clustering>,
) -> Result<LbgaResult> {
    run_observed(layers, config, truth, |_, _| {})
}

/// Runs the engine, calling `observer(round, table)` after every completed
/// round (updates and fixes applied). Identical inputs produce bit-identical
/// results regardless of thread count.
pub fn run_observed(
    layers: &LayerSet,
    config: &EngineConfig,
    truth: Option<&Clustering>,
    mut observer: impl FnMut(usize, &WeightTable),
) -> Result<LbgaResult> {
    config.validate(layers, truth)?;
    let n = layers.vertex_count();
    let mut table = WeightTable::new(layers)?;
    let coins = CoinSampler::new(config.seed);
    let mut candidate = Graph::from_sorted_pairs(n, &[]);
    let mut trace = Vec::new();
    let mut rounds_used = 0;

    while table.active_count() > 0 && rounds_used < config.max_rounds {
        let round = rounds_used + 1;
        candidate = sample_candidate(&table, n, &coins, round);
        let clustering = match &config.clusterer {
            ClustererSpec::Null => None,
            spec => Some(cluster(spec, &candidate)?),
        };

        // Rewards read only the candidate and its clustering, so pairs are
        // independent and safe to score in parallel.
        let rewards: Vec<f64> = (0..table.len())
            .into_par_iter()
            .map(|idx| {
                if table.status[idx] != PairStatus::Active {
                    return 0.0;
                }
                let (u, v) = table.pairs[idx];
                config.quality.reward(&candidate, clustering.as_ref(), u, v)
            })
            .collect();
        for idx in 0..table.len() {
            if table.status[idx] == PairStatus::Active {
                table.update_idx(idx, rewards[idx], config.epsilon, config.nu);
                table.fix_idx(idx, config.delta);
            }
        }

        let nmi = match (truth, &clustering) {
            (Some(t), Some(c)) => Some(metrics::nmi(c, t)?),
            _ => None,
        };
        let modularity = match &clustering {
            Some(c) if candidate.edge_count() > 0 => Some(metrics::modularity(&candidate, c)?),
            _ => None,
        };
        trace.push(RoundTrace {
            round,
            nmi,
            modularity,
            edges: candidate.edge_count(),
            layer_weights: table.layer_mean_weights(),
        });
        rounds_used = round;
        observer(round, &table);
    }

    // Contract checks: the result stays inside the union universe, and pairs
    // every layer agrees on are always kept.
    for (u, v) in candidate.edges() {
        assert!(
            table.index_of(u, v).is_some(),
            "candidate edge ({u}, {v}) escaped the union universe"
        );
    }
    let full_mask = if table.num_layers() == 64 {
        u64::MAX
    } else {
        (1u64 << table.num_layers()) - 1
    };
    for idx in 0..table.len() {
        if table.mask(idx) == full_mask {
            let (u, v) = table.pair(idx);
            assert!(
                candidate.has_edge(u, v),
                "pair ({u}, {v}) present in every layer is missing from the result"
            );
        }
    }

    let converged = table.active_count() == 0;
    Ok(LbgaResult {
        graph: candidate,
        table,
        trace,
        rounds_used,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Clustering;
    use crate::synth;

    fn two_layer_pair() -> LayerSet {
        // Pair (0, 1) lives in layer 0 only; pair (2, 3) pads the universe.
        let l0 = Graph::from_edges(4, &[(0, 1)]).unwrap();
        let l1 = Graph::from_edges(4, &[(2, 3)]).unwrap();
        LayerSet::new(vec![l0, l1]).unwrap()
    }

    #[test]
    fn convergence_bound_matches_hand_values() {
        assert_eq!(convergence_bound(0.05, 0.2, 3), 23);
        assert_eq!(convergence_bound(0.5, 0.2, 1), 4);
        assert_eq!(convergence_bound(0.05, 0.2, 0), 0);
        assert_eq!(convergence_bound(0.05, 0.2, 1), 17);
    }

    #[test]
    fn update_scales_members_up_and_others_down() {
        let layers = two_layer_pair();
        let mut table = WeightTable::new(&layers).unwrap();
        let idx = table.index_of(0, 1).unwrap();
        assert_eq!(table.weights_of(idx), &[1.0, 1.0]);
        assert_eq!(table.probability(idx), 0.5);

        // Negative reward: the member layer shrinks, the non-member grows
        // by exactly 1 - nu * q = 1.1.
        table.update_pair(0, 1, -0.5, 0.3, 0.2);
        let w = table.weights_of(idx);
        assert!((w[0] - 0.85).abs() < 1e-15);
        assert!((w[1] - 1.1).abs() < 1e-15);
        assert!((table.probability(idx) - 0.85 / 1.95).abs() < 1e-15);
    }

    #[test]
    fn full_membership_pairs_keep_probability_one_and_fix_first_round() {
        let l0 = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let l1 = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let layers = LayerSet::new(vec![l0, l1]).unwrap();
        let truth = Clustering::from_assignment(vec![0, 0, 0]);
        let config = EngineConfig::new(QualitySpec::oracle(truth))
            .with_clusterer(ClustererSpec::Null)
            .with_max_rounds(50);
        let result = run(&layers, &config, None).unwrap();
        let idx = result.table.index_of(0, 1).unwrap();
        assert_eq!(result.table.status(idx), PairStatus::FixedIn);
        assert_eq!(result.table.probability(idx), 1.0);
        assert!(result.graph.has_edge(0, 1));
        // It fixed in round 1: probability one never leaves the band.
        assert!(result.rounds_used >= 1);
    }

    #[test]
    fn sampler_hits_target_frequency() {
        let layers = two_layer_pair();
        let table = WeightTable::new(&layers).unwrap();
        let coins = CoinSampler::new(7);
        let idx = table.index_of(0, 1).unwrap();
        assert_eq!(table.probability(idx), 0.5);
        let n = layers.vertex_count();
        let mut hits = 0usize;
        for round in 1..=10_000 {
            if sample_candidate(&table, n, &coins, round).has_edge(0, 1) {
                hits += 1;
            }
        }
        let freq = hits as f64 / 10_000.0;
        // 4-sigma band around 0.5 at 10k trials is +- 0.02.
        assert!((freq - 0.5).abs() < 0.02, "inclusion frequency {freq}");
    }

    #[test]
    fn sampling_is_order_independent() {
        let layers = two_layer_pair();
        let table = WeightTable::new(&layers).unwrap();
        let coins = CoinSampler::new(13);
        // Coins depend only on (round, pair index), never on draw order.
        let a = coins.coin(5, 1);
        let _ = coins.coin(9, 0);
        let b = coins.coin(5, 1);
        assert_eq!(a, b);
        let g1 = sample_candidate(&table, 4, &coins, 5);
        let g2 = sample_candidate(&table, 4, &coins, 5);
        assert_eq!(g1, g2);
    }

    #[test]
    fn oracle_mode_tracks_the_closed_form_exactly() {
        // Four layers over four vertices, two planted clusters. The pair
        // (0, 1) is same-cluster and sits in 2 good layers; the pair (0, 2)
        // is cross-cluster and sits in 2 bad layers (the ones containing
        // it). Under the ground-truth reward with epsilon = nu the bad-side
        // probability follows n_bad (1-e)^t / (n_bad (1-e)^t + n_good (1+e)^t).
        let truth = Clustering::from_assignment(vec![0, 0, 1, 1]);
        let edges_by_layer: [&[(usize, usize)]; 4] =
            [&[(0, 1), (0, 2)], &[(0, 1), (0, 2)], &[], &[]];
        let layers = LayerSet::new(
            edges_by_layer
                .iter()
                .map(|edges| Graph::from_edges(4, edges).unwrap())
                .collect(),
        )
        .unwrap();
        let epsilon = 0.25;
        let delta = 0.1;
        let config = EngineConfig::new(QualitySpec::oracle(truth))
            .with_rates(epsilon, epsilon)
            .with_delta(delta)
            .with_clusterer(ClustererSpec::Null);

        let closed_form = |n_bad: f64, n_good: f64, t: i32| {
            let bad = n_bad * (1.0 - epsilon).powi(t);
            let good = n_good * (1.0 + epsilon).powi(t);
            bad / (bad + good)
        };
        let mut checked = 0;
        let result = run_observed(&layers, &config, None, |round, table| {
            let t = round as i32;
            // Same-cluster pair: p = 1 - p_bad, 2 good member layers.
            let same = table.index_of(0, 1).unwrap();
            if round == 1 || table.status(same) == PairStatus::Active {
                let want = 1.0 - closed_form(2.0, 2.0, t);
                let got = table.probability(same);
                assert!((got - want).abs() <= 1e-12 * want, "round {round}: {got} vs {want}");
                checked += 1;
            }
            // Cross-cluster pair: p = p_bad, 2 bad member layers.
            let cross = table.index_of(0, 2).unwrap();
            if round == 1 || table.status(cross) == PairStatus::Active {
                let want = closed_form(2.0, 2.0, t);
                let got = table.probability(cross);
                assert!(
                    (got - want).abs() <= 1e-12 * want.max(1e-300),
                    "round {round}: {got} vs {want}"
                );
            }
        })
        .unwrap();
        assert!(checked > 0);
        assert!(result.converged);
        assert!(result.rounds_used <= convergence_bound(delta, epsilon, 2));
        // Correct directions.
        let same = result.table.index_of(0, 1).unwrap();
        let cross = result.table.index_of(0, 2).unwrap();
        assert_eq!(result.table.status(same), PairStatus::FixedIn);
        assert_eq!(result.table.status(cross), PairStatus::FixedOut);
    }

    #[test]
    fn zero_reward_runs_hit_the_round_cap_without_converging() {
        // Two disjoint edges can never share neighbors, so the overlap
        // reward is identically zero and nothing ever fixes.
        let layers = two_layer_pair();
        let config = EngineConfig::new(QualitySpec::by_name("no").unwrap())
            .with_clusterer(ClustererSpec::Null)
            .with_max_rounds(5);
        let result = run(&layers, &config, None).unwrap();
        assert!(!result.converged);
        assert_eq!(result.rounds_used, 5);
        assert_eq!(result.trace.len(), 5);
        for idx in 0..result.table.len() {
            assert_eq!(result.table.status(idx), PairStatus::Active);
            assert_eq!(result.table.probability(idx), 0.5);
        }
        // Null clusterer: no nmi, no modularity in the trace.
        assert!(result.trace.iter().all(|r| r.nmi.is_none() && r.modularity.is_none()));
    }

    #[test]
    fn runs_are_deterministic_and_stay_in_the_union() {
        let set = synth::gsbm_layers(&[20; 2], &[0.5, 0.5], &[0.1, 0.1], 3).unwrap();
        let truth = synth::block_truth(&[20; 2]);
        let config = EngineConfig::new(QualitySpec::consistent_no())
            .with_seed(11)
            .with_max_rounds(60);
        let a = run(&set, &config, Some(&truth)).unwrap();
        let b = run(&set, &config, Some(&truth)).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.rounds_used, b.rounds_used);
        assert_eq!(a.converged, b.converged);
        for idx in 0..a.table.len() {
            assert_eq!(a.table.weights_of(idx), b.table.weights_of(idx));
            assert_eq!(a.table.status(idx), b.table.status(idx));
        }
        for (x, y) in a.trace.iter().zip(&b.trace) {
            assert_eq!(x.nmi, y.nmi);
            assert_eq!(x.modularity, y.modularity);
            assert_eq!(x.edges, y.edges);
            assert_eq!(x.layer_weights, y.layer_weights);
        }
        // Weights stay positive and statuses match probabilities.
        for idx in 0..a.table.len() {
            assert!(a.table.weights_of(idx).iter().all(|&w| w > 0.0));
            match a.table.status(idx) {
                PairStatus::FixedIn => assert!(a.table.probability(idx) > 1.0 - config.delta),
                PairStatus::FixedOut => assert!(a.table.probability(idx) < config.delta),
                PairStatus::Active => {}
            }
        }
        // The union contains the result.
        let union = set.union_graph();
        for (u, v) in a.graph.edges() {
            assert!(union.has_edge(u, v));
        }
    }

    #[test]
    fn trace_rows_carry_normalized_layer_means() {
        let set = synth::gsbm_layers(&[10; 2], &[0.6, 0.6], &[0.2, 0.2], 5).unwrap();
        let config = EngineConfig::new(QualitySpec::ec())
            .with_seed(2)
            .with_max_rounds(8)
            .with_clusterer(ClustererSpec::ConnectedComponents);
        let result = run(&set, &config, None).unwrap();
        assert_eq!(result.trace.len(), result.rounds_used);
        for (i, row) in result.trace.iter().enumerate() {
            assert_eq!(row.round, i + 1);
            assert_eq!(row.layer_weights.len(), 2);
            let total: f64 = row.layer_weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
            assert!(row.nmi.is_none(), "no truth given");
        }
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let layers = two_layer_pair();
        let bad_rate = EngineConfig::new(QualitySpec::ec()).with_rates(1.0, 0.2);
        assert!(run(&layers, &bad_rate, None).is_err());
        let bad_delta = EngineConfig::new(QualitySpec::ec()).with_delta(0.6);
        assert!(run(&layers, &bad_delta, None).is_err());
        let ec_null = EngineConfig::new(QualitySpec::ec()).with_clusterer(ClustererSpec::Null);
        assert!(run(&layers, &ec_null, None).is_err());
        let no_oracle = EngineConfig::new(QualitySpec::by_name("oracle").unwrap());
        assert!(run(&layers, &no_oracle, None).is_err());
        let short_truth = Clustering::from_assignment(vec![0, 1]);
        let config = EngineConfig::new(QualitySpec::ec());
        assert!(run(&layers, &config, Some(&short_truth)).is_err());
    }

    #[test]
    #[should_panic(expected = "not in the union universe")]
    fn updating_a_non_universe_pair_panics() {
        let layers = two_layer_pair();
        let mut table = WeightTable::new(&layers).unwrap();
        table.update_pair(0, 3, 0.5, 0.2, 0.2);
    }
}
