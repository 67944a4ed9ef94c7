//! Command-line harness: generate synthetic datasets, learn graphs and
//! report metrics, sweep SNR, benchmark scaling, and check oracle-mode
//! convergence.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lbga::experiment::{self, BenchOptions, DatasetSource, SweepOptions};
use lbga::synth::DatasetSpec;
use lbga::{ClustererSpec, EngineConfig, QualitySpec};

#[derive(Parser)]
#[command(
    name = "lbga",
    version,
    about = "Learn a single community-friendly graph from multiple edge-type layers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic preset dataset as layer files, a truth file, and a manifest
    Generate {
        /// Preset name, e.g. GSBM-2 (see --list)
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory
        #[arg(long, required_unless_present = "list")]
        out: Option<PathBuf>,
        /// List the preset catalog and exit
        #[arg(long)]
        list: bool,
    },
    /// Learn a graph over several seeds and report metrics per seed, union baseline, and medians
    Run {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        engine: EngineArgs,
        /// Number of seeds (seed, seed+1, ...)
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Output directory for report.csv, traces, and result graphs
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved result graph against a dataset
    Eval {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Edge-list file to score (as written by run)
        #[arg(long)]
        graph: PathBuf,
        /// Clusterer for scoring: walktrap or cc
        #[arg(long, default_value = "walktrap")]
        clusterer: String,
        #[arg(long, default_value_t = 4)]
        walk_length: usize,
        /// Generation seed for preset datasets
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional CSV output path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the cross-block probability r and report median NMI per SNR
    Sweep {
        #[command(flatten)]
        engine: EngineArgs,
        /// Within-block probabilities, comma separated
        #[arg(long, value_delimiter = ',', default_value = "0.3")]
        p: Vec<f64>,
        /// Explicit r grid, comma separated (default: r = p*j/10 for j = 1..=10)
        #[arg(long, value_delimiter = ',')]
        r: Option<Vec<f64>>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Block sizes (one local layer per block)
        #[arg(long, value_delimiter = ',', default_value = "125,125,125,125")]
        blocks: Vec<usize>,
        /// CSV output path
        #[arg(long)]
        out: PathBuf,
    },
    /// Time the learning loop across sizes and fit a log-log slope
    Bench {
        #[command(flatten)]
        engine: BenchEngineArgs,
        /// Vertex counts, comma separated
        #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000")]
        sizes: Vec<usize>,
        /// Number of blocks (= layers)
        #[arg(long, default_value_t = 10)]
        blocks: usize,
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        #[arg(long, default_value_t = 0.05)]
        r: f64,
        /// CSV output path
        #[arg(long)]
        out: PathBuf,
    },
    /// Check oracle-mode convergence against the closed form (exit 1 on failure)
    Converge {
        /// Total layer count m
        #[arg(long, default_value_t = 4)]
        layers: usize,
        /// Bad layers per pair (must be < m)
        #[arg(long, default_value_t = 3)]
        n_bad: usize,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
    },
}

#[derive(Args)]
struct DatasetArgs {
    /// Synthetic preset name, e.g. GSBM-2
    #[arg(long, conflicts_with = "manifest")]
    dataset: Option<String>,
    /// Path to a dataset manifest (TOML)
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Fallback binarization threshold for manifest layers without their own
    #[arg(long, conflicts_with = "dataset")]
    alpha: Option<f64>,
}

impl DatasetArgs {
    fn source(&self) -> Result<DatasetSource> {
        match (&self.dataset, &self.manifest) {
            (Some(name), None) => Ok(DatasetSource::Preset(DatasetSpec::preset(name)?)),
            (None, Some(path)) => Ok(DatasetSource::Manifest {
                path: path.clone(),
                alpha: self.alpha,
            }),
            _ => bail!("exactly one of --dataset or --manifest is required"),
        }
    }
}

#[derive(Args)]
struct EngineArgs {
    /// Quality measure: ec, no, consistentno, jaccard, dice, consistentjaccard, consistentdice
    #[arg(long, default_value = "consistentno")]
    quality: String,
    /// Reward rate on layers containing the pair
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    /// Reward rate on layers not containing the pair (defaults to epsilon)
    #[arg(long)]
    nu: Option<f64>,
    /// Fixing band: pairs freeze outside (delta, 1 - delta)
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 1000)]
    max_rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Clustering event: walktrap or cc
    #[arg(long, default_value = "walktrap")]
    clusterer: String,
    /// Walktrap walk length t
    #[arg(long, default_value_t = 4)]
    walk_length: usize,
}

/// Same flags as [`EngineArgs`] with the scaling-friendly defaults: the
/// same-cluster reward under connected components does constant work per
/// pair per round.
#[derive(Args)]
struct BenchEngineArgs {
    /// Quality measure (default ec for linear per-pair work)
    #[arg(long, default_value = "ec")]
    quality: String,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 1000)]
    max_rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Clustering event (default cc for linear per-round work)
    #[arg(long, default_value = "cc")]
    clusterer: String,
    #[arg(long, default_value_t = 4)]
    walk_length: usize,
}

fn build_config(
    quality: &str,
    epsilon: f64,
    nu: Option<f64>,
    delta: f64,
    max_rounds: usize,
    seed: u64,
    clusterer: &str,
    walk_length: usize,
) -> Result<EngineConfig> {
    let quality = QualitySpec::by_name(quality)?;
    if quality.kind == lbga::quality::QualityKind::Oracle {
        bail!("the oracle quality is only available through the converge command");
    }
    let clusterer = match ClustererSpec::by_name(clusterer)? {
        ClustererSpec::Walktrap { .. } => ClustererSpec::Walktrap { walk_length },
        other => other,
    };
    Ok(EngineConfig::new(quality)
        .with_rates(epsilon, nu.unwrap_or(epsilon))
        .with_delta(delta)
        .with_max_rounds(max_rounds)
        .with_seed(seed)
        .with_clusterer(clusterer))
}

impl EngineArgs {
    fn config(&self) -> Result<EngineConfig> {
        build_config(
            &self.quality,
            self.epsilon,
            self.nu,
            self.delta,
            self.max_rounds,
            self.seed,
            &self.clusterer,
            self.walk_length,
        )
    }
}

impl BenchEngineArgs {
    fn config(&self) -> Result<EngineConfig> {
        build_config(
            &self.quality,
            self.epsilon,
            self.nu,
            self.delta,
            self.max_rounds,
            self.seed,
            &self.clusterer,
            self.walk_length,
        )
    }
}

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(x) => format!("{x:.4}"),
        None => "NA".into(),
    }
}

fn print_report_line(name: &str, report: &lbga::MetricReport) {
    println!(
        "{name}: modularity {:.4}, conductance {:.4}, nmi {}, sparsity {:.4}",
        report.modularity,
        report.conductance,
        fmt_opt(report.nmi),
        report.sparsity
    );
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate {
            dataset,
            seed,
            out,
            list,
        } => {
            if list {
                for name in DatasetSpec::preset_names() {
                    println!("{name}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            let name = dataset.context("--dataset is required (or use --list)")?;
            let spec = DatasetSpec::preset(&name)?;
            let out = out.expect("clap enforces --out without --list");
            let manifest = experiment::cmd_generate(&spec, seed, &out)?;
            println!(
                "wrote {} ({} layers, {} vertices, seed {seed})",
                manifest.display(),
                spec.num_layers(),
                spec.block_sizes.iter().sum::<usize>()
            );
        }
        Command::Run {
            dataset,
            engine,
            reps,
            out,
        } => {
            let source = dataset.source()?;
            let config = engine.config()?;
            let summary = experiment::cmd_run(&source, &config, reps, &out)?;
            println!(
                "dataset {} ({} layers), quality {}, {reps} rep(s)",
                source.label(),
                summary.layer_names.len(),
                config.quality.kind.name()
            );
            for outcome in &summary.seeds {
                let status = if outcome.converged {
                    format!("converged in {} rounds", outcome.rounds_used)
                } else {
                    format!("round cap hit at {}", outcome.rounds_used)
                };
                print_report_line(&format!("seed {} ({status})", outcome.seed), &outcome.report);
            }
            print_report_line("union ", &summary.union);
            print_report_line("median", &summary.median);
            let weights: Vec<String> =
                summary.median.layer_weights.iter().map(|w| format!("{w:.3}")).collect();
            println!("median layer weights: [{}]", weights.join(", "));
            println!("wrote {}", out.join("report.csv").display());
        }
        Command::Eval {
            dataset,
            graph,
            clusterer,
            walk_length,
            seed,
            out,
        } => {
            let source = dataset.source()?;
            let clusterer = match ClustererSpec::by_name(&clusterer)? {
                ClustererSpec::Walktrap { .. } => ClustererSpec::Walktrap { walk_length },
                other => other,
            };
            let (result, union) =
                experiment::cmd_eval(&source, seed, &graph, &clusterer, out.as_deref())?;
            print_report_line("result", &result);
            print_report_line("union ", &union);
            if let Some(path) = out {
                println!("wrote {}", path.display());
            }
        }
        Command::Sweep {
            engine,
            p,
            r,
            reps,
            blocks,
            out,
        } => {
            let mut opts = SweepOptions::new(QualitySpec::by_name(&engine.quality)?);
            opts.config = engine.config()?;
            opts.block_sizes = blocks;
            opts.p_list = p;
            opts.r_grid = r;
            opts.reps = reps;
            let rows = experiment::cmd_sweep(&opts, &out)?;
            println!("p,r,snr,median_nmi");
            for row in &rows {
                println!("{},{},{:.4},{:.4}", row.p, row.r, row.snr, row.median_nmi);
            }
            println!("wrote {}", out.display());
        }
        Command::Bench {
            engine,
            sizes,
            blocks,
            p,
            r,
            out,
        } => {
            let mut opts = BenchOptions::new();
            opts.config = engine.config()?;
            opts.sizes = sizes;
            opts.blocks = blocks;
            opts.p = p;
            opts.r = r;
            let summary = experiment::cmd_bench(&opts, &out)?;
            println!("n,union_edges,rounds,seconds");
            for row in &summary.rows {
                println!("{},{},{},{:.3}", row.n, row.union_edges, row.rounds, row.seconds);
            }
            match summary.slope {
                Some(s) => println!("log-log slope of time vs edges: {s:.3}"),
                None => println!("log-log slope undefined (need at least two sizes)"),
            }
            println!("wrote {}", out.display());
        }
        Command::Converge {
            layers,
            n_bad,
            epsilon,
            delta,
        } => {
            let report = experiment::cmd_converge(layers, n_bad, epsilon, delta)?;
            println!(
                "layers {}, bad layers {}, epsilon {}, delta {}",
                report.num_layers, report.n_bad, report.epsilon, report.delta
            );
            println!("round bound: {}", report.bound);
            for pair in &report.pairs {
                let fate = match (pair.fixed_round, pair.fixed_in) {
                    (Some(round), Some(true)) => format!("fixed in at round {round}"),
                    (Some(round), Some(false)) => format!("fixed out at round {round}"),
                    _ => "never fixed".into(),
                };
                println!(
                    "pair ({}, {}) [{}, {} bad layer(s)]: {fate} ({})",
                    pair.pair.0,
                    pair.pair.1,
                    pair.kind,
                    pair.bad_layers,
                    if pair.correct { "ok" } else { "WRONG" }
                );
            }
            println!(
                "max trajectory error: {:.2e} (tolerance 1e-12); engine rounds used: {}",
                report.max_rel_error, report.rounds_used
            );
            if report.pass {
                println!("PASS");
            } else {
                println!("FAIL");
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
