//! Experiment harness behind the CLI: dataset materialization, repeated
//! engine runs with per-seed reports, the SNR sensitivity sweep, the
//! scaling benchmark, and the oracle-mode convergence check.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::cluster::{cluster, ClustererSpec};
use crate::engine::{self, convergence_bound, EngineConfig, PairStatus};
use crate::error::{Error, Result};
use crate::graph::{Clustering, Graph, LayerSet};
use crate::io::{self, LoadedDataset};
use crate::metrics::{self, MetricReport};
use crate::quality::QualitySpec;
use crate::synth::{self, DatasetSpec};

/// Where a dataset comes from: a synthetic catalog entry regenerated per
/// seed, or a fixed on-disk manifest (`alpha` is a fallback binarization
/// threshold for layers without their own).
#[derive(Debug, Clone)]
pub enum DatasetSource {
    Preset(DatasetSpec),
    Manifest { path: PathBuf, alpha: Option<f64> },
}

impl DatasetSource {
    pub fn label(&self) -> String {
        match self {
            DatasetSource::Preset(spec) => spec.name.clone(),
            DatasetSource::Manifest { path, .. } => path.display().to_string(),
        }
    }

    fn realize(&self, seed: u64, cache: Option<&LoadedDataset>) -> Result<LoadedDataset> {
        match self {
            DatasetSource::Preset(spec) => {
                let layers = spec.generate(seed)?;
                let n = layers.vertex_count();
                Ok(LoadedDataset {
                    layers,
                    truth: Some(spec.truth()),
                    layer_names: (0..spec.num_layers()).map(|i| format!("layer_{i}")).collect(),
                    labels: (0..n).map(|v| v.to_string()).collect(),
                })
            }
            DatasetSource::Manifest { path, alpha } => match cache {
                Some(data) => Ok(LoadedDataset {
                    layers: data.layers.clone(),
                    truth: data.truth.clone(),
                    layer_names: data.layer_names.clone(),
                    labels: data.labels.clone(),
                }),
                None => io::load_layers_with(path, *alpha),
            },
        }
    }
}

/// Writes a synthetic dataset to `out_dir` as one edge-list file per layer,
/// a truth file, and a manifest tying them together; returns the manifest
/// path.
pub fn cmd_generate(spec: &DatasetSpec, seed: u64, out_dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io("creating output directory", out_dir, e))?;
    let layers = spec.generate(seed)?;
    let mut manifest = format!(
        "# dataset: {} (seed {seed})\nn = {}\ntruth = \"truth.txt\"\n",
        spec.name,
        layers.vertex_count()
    );
    for (i, layer) in layers.layers().iter().enumerate() {
        let file = format!("layer_{i}.edges");
        io::save_graph(layer, None, &out_dir.join(&file))?;
        write!(manifest, "\n[[layer]]\nname = \"layer_{i}\"\npath = \"{file}\"\n").unwrap();
    }
    io::save_clustering(&spec.truth(), None, &out_dir.join("truth.txt"))?;
    let manifest_path = out_dir.join("manifest.toml");
    io::write_file(&manifest_path, &manifest, "writing manifest")?;
    Ok(manifest_path)
}

/// One engine run's evaluation.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub seed: u64,
    pub converged: bool,
    pub rounds_used: usize,
    pub report: MetricReport,
}

/// A full `run` command: per-seed outcomes plus the union-baseline and
/// across-seed median rows.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub layer_names: Vec<String>,
    pub seeds: Vec<RunOutcome>,
    pub union: MetricReport,
    pub median: MetricReport,
}

fn median_of(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty(), "median of no values");
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

fn median_report(reports: &[MetricReport]) -> MetricReport {
    let num_layers = reports[0].layer_weights.len();
    let nmis: Vec<f64> = reports.iter().filter_map(|r| r.nmi).collect();
    MetricReport {
        modularity: median_of(reports.iter().map(|r| r.modularity).collect()),
        conductance: median_of(reports.iter().map(|r| r.conductance).collect()),
        nmi: if nmis.is_empty() { None } else { Some(median_of(nmis)) },
        sparsity: median_of(reports.iter().map(|r| r.sparsity).collect()),
        layer_weights: (0..num_layers)
            .map(|i| median_of(reports.iter().map(|r| r.layer_weights[i]).collect()))
            .collect(),
    }
}

fn evaluate_result(
    data: &LoadedDataset,
    graph: &Graph,
    partition: &Clustering,
    layer_weights: Vec<f64>,
) -> Result<MetricReport> {
    let nmi = match &data.truth {
        Some(t) => Some(metrics::nmi(partition, t)?),
        None => None,
    };
    Ok(MetricReport {
        modularity: metrics::modularity(graph, partition)?,
        conductance: metrics::conductance_sum(graph, partition),
        nmi,
        sparsity: metrics::sparsity(graph, &data.layers.union_graph())?,
        layer_weights,
    })
}

/// Runs the engine `reps` times (seeds `base, base+1, ...`; presets are
/// regenerated per seed), evaluates each final graph under the configured
/// clusterer, and writes per-seed traces, result graphs, clusterings, and a
/// combined `report.csv` to `out_dir`.
pub fn cmd_run(
    source: &DatasetSource,
    config: &EngineConfig,
    reps: usize,
    out_dir: &Path,
) -> Result<RunSummary> {
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be at least 1".into()));
    }
    if config.clusterer == ClustererSpec::Null {
        return Err(Error::InvalidConfig(
            "run evaluates the learned graph with a clusterer; the null clusterer cannot (use converge for oracle mode)".into(),
        ));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io("creating output directory", out_dir, e))?;
    let cache = match source {
        DatasetSource::Manifest { path, alpha } => Some(io::load_layers_with(path, *alpha)?),
        DatasetSource::Preset(_) => None,
    };

    let seeds: Vec<u64> = (0..reps).map(|i| config.seed.wrapping_add(i as u64)).collect();
    let runs: Vec<(LoadedDataset, engine::LbgaResult, Clustering, MetricReport, MetricReport)> =
        seeds
            .par_iter()
            .map(|&seed| {
                let data = source.realize(seed, cache.as_ref())?;
                let cfg = config.clone().with_seed(seed);
                let result = engine::run(&data.layers, &cfg, data.truth.as_ref())?;
                let partition = cluster(&config.clusterer, &result.graph)?;
                let weights = result.table.layer_mean_weights();
                let report = evaluate_result(&data, &result.graph, &partition, weights)?;
                let union =
                    metrics::union_baseline(&data.layers, data.truth.as_ref(), &config.clusterer)?;
                Ok((data, result, partition, report, union))
            })
            .collect::<Result<_>>()?;

    let num_layers = runs[0].0.layers.num_layers();
    let mut outcomes = Vec::new();
    let mut out = format!("run,converged,rounds,{}\n", io::report_csv_header(num_layers));
    for (seed, (data, result, partition, report, _)) in seeds.iter().zip(&runs) {
        io::save_trace(&result.trace, num_layers, &out_dir.join(format!("trace_seed_{seed}.csv")))?;
        io::save_graph(&result.graph, None, &out_dir.join(format!("result_seed_{seed}.edges")))?;
        io::save_clustering(
            partition,
            Some(&data.labels),
            &out_dir.join(format!("clustering_seed_{seed}.txt")),
        )?;
        writeln!(
            out,
            "seed_{seed},{},{},{}",
            result.converged,
            result.rounds_used,
            io::report_csv_row(report)
        )
        .unwrap();
        outcomes.push(RunOutcome {
            seed: *seed,
            converged: result.converged,
            rounds_used: result.rounds_used,
            report: report.clone(),
        });
    }
    let union = median_report(&runs.iter().map(|r| r.4.clone()).collect::<Vec<_>>());
    let median = median_report(&runs.iter().map(|r| r.3.clone()).collect::<Vec<_>>());
    writeln!(out, "union,NA,NA,{}", io::report_csv_row(&union)).unwrap();
    writeln!(out, "median,NA,NA,{}", io::report_csv_row(&median)).unwrap();
    io::write_file(&out_dir.join("report.csv"), &out, "writing report")?;

    Ok(RunSummary {
        layer_names: runs[0].0.layer_names.clone(),
        seeds: outcomes,
        union,
        median,
    })
}

/// Scores a saved result graph against a dataset: clusters it, reports the
/// usual metrics next to the union baseline, and (optionally) writes a
/// two-row CSV. Layer weights are not part of an eval (the graph arrives
/// without a weight table).
pub fn cmd_eval(
    source: &DatasetSource,
    seed: u64,
    graph_path: &Path,
    clusterer: &ClustererSpec,
    out: Option<&Path>,
) -> Result<(MetricReport, MetricReport)> {
    if *clusterer == ClustererSpec::Null {
        return Err(Error::InvalidConfig(
            "eval clusters the graph it scores; the null clusterer cannot".into(),
        ));
    }
    let data = source.realize(seed, None)?;
    let graph = io::load_graph(graph_path)?;
    let partition = cluster(clusterer, &graph)?;
    let mut report = evaluate_result(&data, &graph, &partition, Vec::new())?;
    let mut union = metrics::union_baseline(&data.layers, data.truth.as_ref(), clusterer)?;
    report.layer_weights.clear();
    union.layer_weights.clear();
    if let Some(path) = out {
        let text = format!(
            "run,{}\nresult,{}\nunion,{}\n",
            io::report_csv_header(0),
            io::report_csv_row(&report),
            io::report_csv_row(&union)
        );
        io::write_file(path, &text, "writing report")?;
    }
    Ok((report, union))
}

/// Sensitivity sweep configuration. Every cell is a local-layer family with
/// one layer per block (`block_sizes`), within-block probability `p`, and
/// cross probability `r`; `r_grid: None` uses `r = p * j / 10` for
/// `j = 1..=10`.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub block_sizes: Vec<usize>,
    pub p_list: Vec<f64>,
    pub r_grid: Option<Vec<f64>>,
    pub config: EngineConfig,
    pub reps: usize,
}

impl SweepOptions {
    pub fn new(quality: QualitySpec) -> Self {
        SweepOptions {
            block_sizes: vec![125; 4],
            p_list: vec![0.3],
            r_grid: None,
            config: EngineConfig::new(quality),
            reps: 3,
        }
    }
}

/// One sweep cell: the planted probabilities, their ratio, and the median
/// NMI of the learned graph's clustering against the planted blocks.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub p: f64,
    pub r: f64,
    pub snr: f64,
    pub median_nmi: f64,
}

/// Runs the sweep and writes `out` as CSV (`p,r,snr,median_nmi` under
/// comment lines recording the grid and engine settings).
pub fn cmd_sweep(opts: &SweepOptions, out: &Path) -> Result<Vec<SweepRow>> {
    if opts.reps == 0 {
        return Err(Error::InvalidConfig("reps must be at least 1".into()));
    }
    if opts.p_list.is_empty() {
        return Err(Error::InvalidConfig("p_list must not be empty".into()));
    }
    if opts.config.clusterer == ClustererSpec::Null {
        return Err(Error::InvalidConfig(
            "the sweep scores clusterings; the null clusterer cannot".into(),
        ));
    }
    for &p in &opts.p_list {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidProbability(p));
        }
    }
    if let Some(grid) = &opts.r_grid {
        for &r in grid {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidProbability(r));
            }
        }
    }

    let k = opts.block_sizes.len();
    let truth = synth::block_truth(&opts.block_sizes);
    let mut cells = Vec::new();
    for &p in &opts.p_list {
        let grid: Vec<f64> = match &opts.r_grid {
            Some(grid) => grid.clone(),
            None => (1..=10).map(|j| p * j as f64 / 10.0).collect(),
        };
        for r in grid {
            cells.push((p, r));
        }
    }

    let rows: Vec<SweepRow> = cells
        .par_iter()
        .enumerate()
        .map(|(cell_idx, &(p, r))| {
            let mut nmis = Vec::with_capacity(opts.reps);
            for rep in 0..opts.reps {
                let seed = opts
                    .config
                    .seed
                    .wrapping_add((cell_idx * opts.reps + rep) as u64);
                let layers = synth::lsbm_layers(&opts.block_sizes, &vec![p; k], &vec![r; k], seed)?;
                let cfg = opts.config.clone().with_seed(seed);
                let result = engine::run(&layers, &cfg, Some(&truth))?;
                let partition = cluster(&opts.config.clusterer, &result.graph)?;
                nmis.push(metrics::nmi(&partition, &truth)?);
            }
            Ok(SweepRow {
                p,
                r,
                snr: p / r,
                median_nmi: median_of(nmis),
            })
        })
        .collect::<Result<_>>()?;

    let mut text = format!(
        "# family: local layers, one per block; block sizes {:?}\n",
        opts.block_sizes
    );
    writeln!(
        text,
        "# quality: {}, epsilon: {}, nu: {}, delta: {}, max_rounds: {}, reps: {}, seed: {}",
        opts.config.quality.kind.name(),
        opts.config.epsilon,
        opts.config.nu,
        opts.config.delta,
        opts.config.max_rounds,
        opts.reps,
        opts.config.seed
    )
    .unwrap();
    match &opts.r_grid {
        Some(_) => writeln!(text, "# r_grid: explicit").unwrap(),
        None => writeln!(text, "# r_grid: default, r = p*j/10 for j = 1..=10").unwrap(),
    }
    text.push_str("p,r,snr,median_nmi\n");
    for row in &rows {
        writeln!(text, "{},{},{},{}", row.p, row.r, row.snr, row.median_nmi).unwrap();
    }
    io::write_file(out, &text, "writing sweep")?;
    Ok(rows)
}

/// Scaling benchmark configuration: the local-layer family with `blocks`
/// blocks (= layers) at each vertex count in `sizes`.
#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub sizes: Vec<usize>,
    pub blocks: usize,
    pub p: f64,
    pub r: f64,
    pub config: EngineConfig,
}

impl BenchOptions {
    /// The standard scaling setup: 10 blocks and layers, p = 0.3, r = 0.05,
    /// connected-components event with the same-cluster reward. That
    /// combination does constant work per pair per round, so total work is
    /// linear in the union edge count.
    pub fn new() -> Self {
        BenchOptions {
            sizes: vec![250, 500, 1000, 2000],
            blocks: 10,
            p: 0.3,
            r: 0.05,
            config: EngineConfig::new(QualitySpec::ec())
                .with_clusterer(ClustererSpec::ConnectedComponents),
        }
    }
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self::new()
    }
}

/// One timed size point. `seconds` covers the learning loop only, never
/// dataset generation.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub n: usize,
    pub union_edges: usize,
    pub rounds: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct BenchSummary {
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of log(seconds) against log(union edges);
    /// `None` with fewer than two distinct sizes.
    pub slope: Option<f64>,
}

fn split_blocks(n: usize, blocks: usize) -> Vec<usize> {
    let base = n / blocks;
    let rem = n % blocks;
    (0..blocks).map(|i| base + usize::from(i < rem)).collect()
}

fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let var = sxx - sx * sx / n;
    if var <= 0.0 {
        return None;
    }
    Some((sxy - sx * sy / n) / var)
}

/// Times end-to-end runs at each size and writes `out` as CSV
/// (`n,union_edges,rounds,seconds` plus a trailing `# loglog_slope:` line).
/// Sizes run sequentially so timings do not contend.
pub fn cmd_bench(opts: &BenchOptions, out: &Path) -> Result<BenchSummary> {
    if opts.sizes.is_empty() {
        return Err(Error::InvalidConfig("bench needs at least one size".into()));
    }
    if opts.blocks == 0 {
        return Err(Error::InvalidConfig("bench needs at least one block".into()));
    }
    for &n in &opts.sizes {
        if n < opts.blocks {
            return Err(Error::InvalidConfig(format!(
                "size {n} is smaller than the block count {}",
                opts.blocks
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, &n) in opts.sizes.iter().enumerate() {
        let block_sizes = split_blocks(n, opts.blocks);
        let p = vec![opts.p; opts.blocks];
        let r = vec![opts.r; opts.blocks];
        let seed = opts.config.seed.wrapping_add(i as u64);
        let layers = synth::lsbm_layers(&block_sizes, &p, &r, seed)?;
        let union_edges = layers.union_pairs().len();
        let cfg = opts.config.clone().with_seed(seed);
        let start = Instant::now();
        let result = engine::run(&layers, &cfg, None)?;
        let seconds = start.elapsed().as_secs_f64();
        rows.push(BenchRow {
            n,
            union_edges,
            rounds: result.rounds_used,
            seconds,
        });
    }
    let slope = loglog_slope(
        &rows
            .iter()
            .map(|r| (r.union_edges as f64, r.seconds))
            .collect::<Vec<_>>(),
    );

    let mut text = format!(
        "# family: local layers, blocks = layers = {}, p = {}, r = {}\n# quality: {}, clusterer: {}\nn,union_edges,rounds,seconds\n",
        opts.blocks,
        opts.p,
        opts.r,
        opts.config.quality.kind.name(),
        opts.config.clusterer.name()
    );
    for row in &rows {
        writeln!(text, "{},{},{},{}", row.n, row.union_edges, row.rounds, row.seconds).unwrap();
    }
    match slope {
        Some(s) => writeln!(text, "# loglog_slope: {s}").unwrap(),
        None => writeln!(text, "# loglog_slope: NA (need at least two sizes)").unwrap(),
    }
    io::write_file(out, &text, "writing bench")?;
    Ok(BenchSummary { rows, slope })
}

/// Per-pair verdict of the convergence check.
#[derive(Debug, Clone)]
pub struct PairVerdict {
    pub pair: (usize, usize),
    pub kind: &'static str,
    pub bad_layers: usize,
    pub fixed_round: Option<usize>,
    pub fixed_in: Option<bool>,
    pub correct: bool,
}

/// Outcome of the oracle-mode convergence check.
#[derive(Debug, Clone)]
pub struct ConvergeReport {
    pub num_layers: usize,
    pub n_bad: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub bound: usize,
    pub rounds_used: usize,
    pub converged: bool,
    pub max_rel_error: f64,
    pub pairs: Vec<PairVerdict>,
    pub pass: bool,
}

/// Builds a tiny known-truth instance, runs the engine under the
/// ground-truth reward with the null event, and checks that every pair's
/// probability follows the closed form
/// `n_bad (1-e)^t / (n_bad (1-e)^t + n_good (1+e)^t)` exactly and resolves
/// in the right direction within [`convergence_bound`] rounds.
///
/// The instance has four vertices in two planted clusters. A within-cluster
/// pair appears in `m - n_bad` layers (so `n_bad` layers wrongly omit it),
/// a cross-cluster pair appears in `n_bad` layers (which wrongly assert
/// it), and a second within pair appears everywhere as the
/// zero-bad-layer control.
pub fn cmd_converge(
    num_layers: usize,
    n_bad: usize,
    epsilon: f64,
    delta: f64,
) -> Result<ConvergeReport> {
    if num_layers == 0 || num_layers > 64 {
        return Err(Error::InvalidConfig(format!(
            "layer count must be in 1..=64, got {num_layers}"
        )));
    }
    if n_bad >= num_layers {
        return Err(Error::InvalidConfig(format!(
            "n_bad ({n_bad}) must be smaller than the layer count ({num_layers}): some layer must be good"
        )));
    }

    let truth = Clustering::from_assignment(vec![0, 0, 1, 1]);
    let mut graphs = Vec::with_capacity(num_layers);
    for i in 0..num_layers {
        let mut edges = vec![(2usize, 3usize)];
        if i < num_layers - n_bad {
            edges.push((0, 1));
        }
        if i < n_bad {
            edges.push((0, 2));
        }
        graphs.push(Graph::from_edges(4, &edges)?);
    }
    let layers = LayerSet::new(graphs)?;

    let bound = convergence_bound(delta, epsilon, n_bad);
    let config = EngineConfig::new(QualitySpec::oracle(truth))
        .with_rates(epsilon, epsilon)
        .with_delta(delta)
        .with_clusterer(ClustererSpec::Null)
        .with_max_rounds(bound.max(1) + 8);

    // (pair, human name, bad layer count, should fix in)
    let mut checks: Vec<((usize, usize), &'static str, usize, bool)> =
        vec![((0, 1), "within", n_bad, true), ((2, 3), "within", 0, true)];
    if n_bad > 0 {
        checks.push(((0, 2), "cross", n_bad, false));
    }

    let m = num_layers as f64;
    let closed_form = |bad: f64, t: i32| {
        if bad == 0.0 {
            return 0.0;
        }
        let lo = bad * (1.0 - epsilon).powi(t);
        let hi = (m - bad) * (1.0 + epsilon).powi(t);
        lo / (lo + hi)
    };

    let mut fixed: HashMap<(usize, usize), (usize, PairStatus)> = HashMap::new();
    let mut max_rel_error = 0.0f64;
    let result = engine::run_observed(&layers, &config, None, |round, table| {
        for &(pair, _, bad, fix_in) in &checks {
            if fixed.contains_key(&pair) {
                continue;
            }
            let idx = table.index_of(pair.0, pair.1).expect("pair in union");
            let p_bad = closed_form(bad as f64, round as i32);
            let expected = if fix_in { 1.0 - p_bad } else { p_bad };
            let got = table.probability(idx);
            let rel = (got - expected).abs() / expected.abs().max(1e-300);
            max_rel_error = max_rel_error.max(rel);
            if table.status(idx) != PairStatus::Active {
                fixed.insert(pair, (round, table.status(idx)));
            }
        }
    })?;

    let deadline = bound.max(1);
    let pairs: Vec<PairVerdict> = checks
        .iter()
        .map(|&(pair, kind, bad, fix_in)| {
            let (fixed_round, fixed_in) = match fixed.get(&pair) {
                Some(&(round, status)) => (Some(round), Some(status == PairStatus::FixedIn)),
                None => (None, None),
            };
            let correct = fixed_round.is_some_and(|round| round <= deadline)
                && fixed_in == Some(fix_in);
            PairVerdict {
                pair,
                kind,
                bad_layers: bad,
                fixed_round,
                fixed_in,
                correct,
            }
        })
        .collect();

    let pass = result.converged && max_rel_error <= 1e-12 && pairs.iter().all(|p| p.correct);
    Ok(ConvergeReport {
        num_layers,
        n_bad,
        epsilon,
        delta,
        bound,
        rounds_used: result.rounds_used,
        converged: result.converged,
        max_rel_error,
        pairs,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::Family;
    use tempfile::TempDir;

    fn tiny_spec() -> DatasetSpec {
        DatasetSpec {
            name: "tiny".into(),
            family: Family::Gsbm,
            block_sizes: vec![6, 6],
            p: vec![0.9, 0.9],
            r: vec![0.1, 0.1],
        }
    }

    #[test]
    fn median_handles_odd_and_even() {
        assert_eq!(median_of(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_of(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median_of(vec![7.0]), 7.0);
    }

    #[test]
    fn generated_datasets_load_back_identically() {
        let dir = TempDir::new().unwrap();
        let spec = tiny_spec();
        let manifest = cmd_generate(&spec, 11, dir.path()).unwrap();
        let data = io::load_layers(&manifest).unwrap();
        let direct = spec.generate(11).unwrap();
        assert_eq!(data.layers.vertex_count(), 12);
        assert_eq!(data.layers.num_layers(), 2);
        for (loaded, generated) in data.layers.layers().iter().zip(direct.layers()) {
            assert_eq!(loaded, generated);
        }
        assert_eq!(
            data.truth.as_ref().unwrap().assignments(),
            spec.truth().assignments()
        );
        assert_eq!(data.layer_names, vec!["layer_0", "layer_1"]);
    }

    #[test]
    fn run_writes_deterministic_reports() {
        let dir = TempDir::new().unwrap();
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        let config = EngineConfig::new(QualitySpec::consistent_no())
            .with_rates(0.3, 0.3)
            .with_delta(0.1)
            .with_max_rounds(60)
            .with_seed(5);
        let source = DatasetSource::Preset(tiny_spec());
        let summary = cmd_run(&source, &config, 2, &out_a).unwrap();
        assert_eq!(summary.seeds.len(), 2);
        assert_eq!(summary.seeds[0].seed, 5);
        assert_eq!(summary.seeds[1].seed, 6);
        for outcome in &summary.seeds {
            assert!(outcome.report.sparsity > 0.0 && outcome.report.sparsity <= 1.0);
            assert!(outcome.rounds_used >= 1);
        }
        assert_eq!(summary.union.sparsity, 1.0);

        let report = fs::read_to_string(out_a.join("report.csv")).unwrap();
        let lines: Vec<&str> = report.lines().collect();
        assert_eq!(lines.len(), 1 + 2 + 2, "header, seeds, union, median");
        assert!(lines[0].starts_with("run,converged,rounds,modularity"));
        assert!(lines[1].starts_with("seed_5,"));
        assert!(lines[3].starts_with("union,NA,NA,"));
        assert!(lines[4].starts_with("median,NA,NA,"));
        for seed in [5, 6] {
            assert!(out_a.join(format!("trace_seed_{seed}.csv")).exists());
            assert!(out_a.join(format!("result_seed_{seed}.edges")).exists());
            assert!(out_a.join(format!("clustering_seed_{seed}.txt")).exists());
        }

        // Same flags and seed: byte-identical outputs.
        cmd_run(&source, &config, 2, &out_b).unwrap();
        assert_eq!(report, fs::read_to_string(out_b.join("report.csv")).unwrap());
        for seed in [5, 6] {
            let name = format!("trace_seed_{seed}.csv");
            assert_eq!(
                fs::read_to_string(out_a.join(&name)).unwrap(),
                fs::read_to_string(out_b.join(&name)).unwrap()
            );
        }
    }

    #[test]
    fn run_refuses_the_null_clusterer() {
        let dir = TempDir::new().unwrap();
        let config = EngineConfig::new(QualitySpec::consistent_no())
            .with_clusterer(ClustererSpec::Null);
        let err = cmd_run(&DatasetSource::Preset(tiny_spec()), &config, 1, dir.path()).unwrap_err();
        assert!(err.to_string().contains("null clusterer"), "{err}");
    }

    #[test]
    fn eval_scores_saved_results() {
        let dir = TempDir::new().unwrap();
        let config = EngineConfig::new(QualitySpec::consistent_no())
            .with_rates(0.3, 0.3)
            .with_max_rounds(60)
            .with_seed(9);
        let source = DatasetSource::Preset(tiny_spec());
        let summary = cmd_run(&source, &config, 1, dir.path()).unwrap();
        let report_path = dir.path().join("eval.csv");
        let (result, union) = cmd_eval(
            &source,
            9,
            &dir.path().join("result_seed_9.edges"),
            &ClustererSpec::default(),
            Some(&report_path),
        )
        .unwrap();
        // The eval of the saved graph agrees with the run's own evaluation.
        let run_report = &summary.seeds[0].report;
        assert!((result.modularity - run_report.modularity).abs() < 1e-12);
        assert!((result.sparsity - run_report.sparsity).abs() < 1e-12);
        assert_eq!(result.nmi, run_report.nmi);
        assert_eq!(union.sparsity, 1.0);
        assert!(result.layer_weights.is_empty());
        let text = fs::read_to_string(&report_path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("run,modularity,conductance,nmi,sparsity\n"));
    }

    #[test]
    fn sweep_covers_the_grid_deterministically() {
        let dir = TempDir::new().unwrap();
        let mut opts = SweepOptions::new(QualitySpec::ec());
        opts.block_sizes = vec![8; 4];
        opts.p_list = vec![0.8];
        opts.r_grid = Some(vec![0.1, 0.8]);
        opts.reps = 2;
        opts.config = opts.config.with_max_rounds(30).with_seed(3);
        let out = dir.path().join("sweep.csv");
        let rows = cmd_sweep(&opts, &out).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[0].snr - 8.0).abs() < 1e-12);
        assert!((rows[1].snr - 1.0).abs() < 1e-12);
        for row in &rows {
            assert!((0.0..=1.0).contains(&row.median_nmi), "nmi {}", row.median_nmi);
        }
        let text = fs::read_to_string(&out).unwrap();
        assert!(text.contains("p,r,snr,median_nmi"));

        let out2 = dir.path().join("sweep2.csv");
        cmd_sweep(&opts, &out2).unwrap();
        assert_eq!(text, fs::read_to_string(&out2).unwrap());
    }

    #[test]
    fn sweep_default_grid_has_ten_points_per_p() {
        let mut opts = SweepOptions::new(QualitySpec::ec());
        assert_eq!(opts.p_list, vec![0.3]);
        assert!(opts.r_grid.is_none());
        // Materialize the default grid cheaply by checking validation only.
        opts.block_sizes = vec![4; 4];
        opts.reps = 1;
        opts.config = opts.config.with_max_rounds(1);
        let dir = TempDir::new().unwrap();
        let rows = cmd_sweep(&opts, &dir.path().join("s.csv")).unwrap();
        assert_eq!(rows.len(), 10);
        assert!((rows[0].r - 0.03).abs() < 1e-12);
        assert!((rows[9].r - 0.3).abs() < 1e-12);
    }

    #[test]
    fn bench_reports_slope_and_rows() {
        let dir = TempDir::new().unwrap();
        let mut opts = BenchOptions::new();
        opts.sizes = vec![30, 60];
        opts.config = opts.config.with_max_rounds(40).with_seed(1);
        let out = dir.path().join("bench.csv");
        let summary = cmd_bench(&opts, &out).unwrap();
        assert_eq!(summary.rows.len(), 2);
        for row in &summary.rows {
            assert!(row.union_edges > 0);
            assert!(row.seconds >= 0.0);
            assert!(row.rounds >= 1);
        }
        assert!(summary.slope.is_some());
        let text = fs::read_to_string(&out).unwrap();
        assert!(text.contains("n,union_edges,rounds,seconds"));
        assert!(text.contains("# loglog_slope:"));

        opts.sizes = vec![30];
        let single = cmd_bench(&opts, &dir.path().join("single.csv")).unwrap();
        assert!(single.slope.is_none(), "slope undefined for one size");
    }

    #[test]
    fn converge_passes_and_respects_the_bound() {
        let report = cmd_converge(4, 3, 0.2, 0.05).unwrap();
        assert_eq!(report.bound, 23);
        assert!(report.pass, "{report:?}");
        assert!(report.converged);
        assert!(report.rounds_used <= 23);
        assert!(report.max_rel_error <= 1e-12);
        assert_eq!(report.pairs.len(), 3);
        let control = report.pairs.iter().find(|p| p.bad_layers == 0).unwrap();
        assert_eq!(control.fixed_round, Some(1));

        // No bad layers anywhere: everything resolves in round one.
        let clean = cmd_converge(4, 0, 0.2, 0.05).unwrap();
        assert_eq!(clean.bound, 0);
        assert_eq!(clean.rounds_used, 1);
        assert!(clean.pass, "{clean:?}");

        // The delta = 0.5 edge case still fixes in the right direction.
        let edge = cmd_converge(4, 1, 0.2, 0.5).unwrap();
        assert_eq!(edge.bound, 4);
        assert!(edge.pass, "{edge:?}");
    }

    #[test]
    fn converge_rejects_all_bad_layers() {
        assert!(cmd_converge(4, 4, 0.2, 0.05).is_err());
        assert!(cmd_converge(0, 0, 0.2, 0.05).is_err());
    }
}
