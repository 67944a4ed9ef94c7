//! On-disk formats: layer manifests, edge-list files, ground-truth labels,
//! and CSV exports for traces and metric reports.
//!
//! Edge lists are whitespace-separated `u v [weight]` lines with `#`
//! comments. A manifest is a TOML file naming the layers; vertex ids are
//! either dense integers (explicit `n`) or arbitrary labels mapped to dense
//! ids in lexicographic order (`n = "auto"`, the default).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::engine::RoundTrace;
use crate::error::{Error, Result};
use crate::graph::{Clustering, Graph, LayerSet};
use crate::metrics::MetricReport;

/// A dataset loaded from a manifest: the layers, optional ground truth,
/// layer names, and the dense-id -> external-label table.
#[derive(Debug)]
pub struct LoadedDataset {
    pub layers: LayerSet,
    pub truth: Option<Clustering>,
    pub layer_names: Vec<String>,
    pub labels: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    #[serde(default)]
    n: Option<VertexCountField>,
    truth: Option<String>,
    #[serde(rename = "layer")]
    layers: Vec<ManifestLayer>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum VertexCountField {
    Count(usize),
    Mode(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestLayer {
    name: Option<String>,
    path: String,
    threshold: Option<f64>,
}

/// One parsed edge-list line, kept with its provenance for error reports.
struct RawEdge {
    a: String,
    b: String,
    weight: f64,
    line: usize,
}

fn parse_edge_file(path: &Path) -> Result<Vec<RawEdge>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io("reading edge list", path, e))?;
    let mut edges = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw_line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let weight = match tokens.len() {
            2 => 1.0,
            3 => tokens[2].parse::<f64>().map_err(|_| {
                Error::parse(path, line, format!("weight '{}' is not a number", tokens[2]))
            })?,
            _ => {
                return Err(Error::parse(
                    path,
                    line,
                    format!("expected 'u v [weight]', found {} fields", tokens.len()),
                ))
            }
        };
        edges.push(RawEdge {
            a: tokens[0].to_string(),
            b: tokens[1].to_string(),
            weight,
            line,
        });
    }
    Ok(edges)
}

/// An edge survives binarization when its weight reaches the threshold;
/// with no threshold, any positive weight counts.
fn keep_edge(weight: f64, threshold: Option<f64>) -> bool {
    match threshold {
        Some(alpha) => weight >= alpha,
        None => weight > 0.0,
    }
}

fn resolve_id(
    token: &str,
    map: Option<&BTreeMap<String, usize>>,
    n: usize,
    path: &Path,
    line: usize,
) -> Result<usize> {
    match map {
        Some(map) => map.get(token).copied().ok_or_else(|| {
            Error::parse(path, line, format!("vertex '{token}' does not appear in any layer"))
        }),
        None => {
            let id = token.parse::<usize>().map_err(|_| {
                Error::parse(
                    path,
                    line,
                    format!("vertex '{token}' is not an integer id (manifest declares n = {n})"),
                )
            })?;
            if id >= n {
                return Err(Error::parse(
                    path,
                    line,
                    format!("vertex id {id} out of range for n = {n}"),
                ));
            }
            Ok(id)
        }
    }
}

/// Loads a layered dataset from a TOML manifest.
///
/// The manifest declares `n` (an integer, or `"auto"` to collect labels
/// from the files), optional `truth` (a `vertex cluster` label file), and
/// one `[[layer]]` table per layer with `path` and optional `name` and
/// `threshold`. Relative paths resolve against the manifest's directory.
pub fn load_layers(manifest_path: &Path) -> Result<LoadedDataset> {
    load_layers_with(manifest_path, None)
}

/// [`load_layers`] with a fallback binarization threshold applied to every
/// layer that does not declare its own.
pub fn load_layers_with(
    manifest_path: &Path,
    default_threshold: Option<f64>,
) -> Result<LoadedDataset> {
    let text = fs::read_to_string(manifest_path)
        .map_err(|e| Error::io("reading manifest", manifest_path, e))?;
    let manifest: ManifestFile =
        toml::from_str(&text).map_err(|e| Error::parse(manifest_path, 0, e.to_string()))?;
    if manifest.layers.is_empty() {
        return Err(Error::InvalidConfig("manifest lists no layers".into()));
    }
    let explicit_n = match &manifest.n {
        None => None,
        Some(VertexCountField::Count(n)) => Some(*n),
        Some(VertexCountField::Mode(s)) if s == "auto" => None,
        Some(VertexCountField::Mode(s)) => {
            return Err(Error::InvalidConfig(format!(
                "n must be an integer or \"auto\", got \"{s}\""
            )))
        }
    };
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut layer_names = Vec::new();
    let mut layer_paths = Vec::new();
    for entry in &manifest.layers {
        let path = base.join(&entry.path);
        let name = entry.name.clone().unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| entry.path.clone())
        });
        if layer_names.contains(&name) {
            return Err(Error::InvalidConfig(format!("duplicate layer name '{name}'")));
        }
        layer_names.push(name);
        layer_paths.push(path);
    }

    let raw_layers: Vec<Vec<RawEdge>> = layer_paths
        .iter()
        .map(|p| parse_edge_file(p))
        .collect::<Result<_>>()?;

    // Decide the vertex universe before building any graph.
    let (n, labels, map) = match explicit_n {
        Some(n) => (n, (0..n).map(|i| i.to_string()).collect::<Vec<_>>(), None),
        None => {
            let mut seen = BTreeSet::new();
            for edges in &raw_layers {
                for e in edges {
                    seen.insert(e.a.clone());
                    seen.insert(e.b.clone());
                }
            }
            let labels: Vec<String> = seen.into_iter().collect();
            let map: BTreeMap<String, usize> = labels
                .iter()
                .enumerate()
                .map(|(i, l)| (l.clone(), i))
                .collect();
            (labels.len(), labels, Some(map))
        }
    };

    let mut graphs = Vec::new();
    for (edges, (path, entry)) in raw_layers
        .iter()
        .zip(layer_paths.iter().zip(&manifest.layers))
    {
        let threshold = entry.threshold.or(default_threshold);
        let mut pairs = Vec::new();
        for e in edges {
            if !keep_edge(e.weight, threshold) {
                continue;
            }
            let u = resolve_id(&e.a, map.as_ref(), n, path, e.line)?;
            let v = resolve_id(&e.b, map.as_ref(), n, path, e.line)?;
            pairs.push((u, v));
        }
        graphs.push(Graph::from_edges(n, &pairs)?);
    }
    let layers = LayerSet::new(graphs)?;

    let truth = match &manifest.truth {
        None => None,
        Some(rel) => {
            let path = base.join(rel);
            Some(load_truth(&path, n, map.as_ref())?)
        }
    };

    Ok(LoadedDataset {
        layers,
        truth,
        layer_names,
        labels,
    })
}

fn load_truth(path: &Path, n: usize, map: Option<&BTreeMap<String, usize>>) -> Result<Clustering> {
    let text = fs::read_to_string(path).map_err(|e| Error::io("reading ground truth", path, e))?;
    let mut assigned: Vec<Option<usize>> = vec![None; n];
    let mut cluster_ids: BTreeMap<String, usize> = BTreeMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw_line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::parse(
                path,
                line,
                format!("expected 'vertex cluster', found {} fields", tokens.len()),
            ));
        }
        let v = resolve_id(tokens[0], map, n, path, line)?;
        if assigned[v].is_some() {
            return Err(Error::parse(
                path,
                line,
                format!("vertex '{}' is labeled more than once", tokens[0]),
            ));
        }
        let next = cluster_ids.len();
        let cluster = *cluster_ids.entry(tokens[1].to_string()).or_insert(next);
        assigned[v] = Some(cluster);
    }
    let mut assignment = Vec::with_capacity(n);
    for (v, slot) in assigned.into_iter().enumerate() {
        match slot {
            Some(c) => assignment.push(c),
            None => {
                return Err(Error::parse(
                    path,
                    0,
                    format!("vertex {v} has no ground-truth label"),
                ))
            }
        }
    }
    Ok(Clustering::from_assignment(assignment))
}

/// Loads a single integer-labeled edge list as a graph on `n` vertices,
/// binarizing weighted lines against `threshold` (see [`load_layers`]).
pub fn load_edge_list(path: &Path, n: usize, threshold: Option<f64>) -> Result<Graph> {
    let mut pairs = Vec::new();
    for e in parse_edge_file(path)? {
        if !keep_edge(e.weight, threshold) {
            continue;
        }
        let u = resolve_id(&e.a, None, n, path, e.line)?;
        let v = resolve_id(&e.b, None, n, path, e.line)?;
        pairs.push((u, v));
    }
    Graph::from_edges(n, &pairs)
}

/// Loads a dense-id edge list written by [`save_graph`]. The vertex count
/// comes from the `# vertices: N` header, falling back to max id + 1.
pub fn load_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io("reading graph", path, e))?;
    let mut declared = None;
    for raw_line in text.lines() {
        let trimmed = raw_line.trim();
        if let Some(rest) = trimmed.strip_prefix("# vertices:") {
            declared = rest.trim().parse::<usize>().ok();
            break;
        }
        if !trimmed.is_empty() && !trimmed.starts_with('#') {
            break;
        }
    }
    let edges = parse_edge_file(path)?;
    let n = match declared {
        Some(n) => n,
        None => {
            let mut max = None;
            for e in &edges {
                let u = resolve_id(&e.a, None, usize::MAX, path, e.line)?;
                let v = resolve_id(&e.b, None, usize::MAX, path, e.line)?;
                max = Some(max.unwrap_or(0).max(u).max(v));
            }
            match max {
                Some(m) => m + 1,
                None => {
                    return Err(Error::InvalidConfig(format!(
                        "cannot infer the vertex count of empty edge list {} without a '# vertices:' header",
                        path.display()
                    )))
                }
            }
        }
    };
    let mut pairs = Vec::new();
    for e in edges {
        if !keep_edge(e.weight, None) {
            continue;
        }
        let u = resolve_id(&e.a, None, n, path, e.line)?;
        let v = resolve_id(&e.b, None, n, path, e.line)?;
        pairs.push((u, v));
    }
    Graph::from_edges(n, &pairs)
}

pub(crate) fn write_file(path: &Path, contents: &str, context: &'static str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(context, path, e))
}

/// Writes a graph as a sorted edge list, one `u v` line per edge, with a
/// `# vertices: N` header. With `labels`, endpoints are written as their
/// external labels instead of dense ids.
pub fn save_graph(g: &Graph, labels: Option<&[String]>, path: &Path) -> Result<()> {
    if let Some(labels) = labels {
        assert_eq!(labels.len(), g.vertex_count(), "label table must cover every vertex");
    }
    let mut out = format!("# vertices: {}\n", g.vertex_count());
    for (u, v) in g.edges() {
        match labels {
            Some(l) => writeln!(out, "{} {}", l[u], l[v]).unwrap(),
            None => writeln!(out, "{u} {v}").unwrap(),
        }
    }
    write_file(path, &out, "writing graph")
}

/// Writes a clustering as `vertex cluster` lines, readable as a truth file.
pub fn save_clustering(c: &Clustering, labels: Option<&[String]>, path: &Path) -> Result<()> {
    if let Some(labels) = labels {
        assert_eq!(labels.len(), c.len(), "label table must cover every vertex");
    }
    let mut out = String::new();
    for v in 0..c.len() {
        match labels {
            Some(l) => writeln!(out, "{} {}", l[v], c.cluster_of(v)).unwrap(),
            None => writeln!(out, "{} {}", v, c.cluster_of(v)).unwrap(),
        }
    }
    write_file(path, &out, "writing clustering")
}

fn push_opt(out: &mut String, value: Option<f64>) {
    match value {
        Some(x) => write!(out, "{x}").unwrap(),
        None => out.push_str("NA"),
    }
}

/// Writes a learning trace as CSV with columns
/// `round,nmi,modularity,edges,weight_layer_0..m-1`; absent values are `NA`.
pub fn save_trace(trace: &[RoundTrace], num_layers: usize, path: &Path) -> Result<()> {
    let mut out = String::from("round,nmi,modularity,edges");
    for i in 0..num_layers {
        write!(out, ",weight_layer_{i}").unwrap();
    }
    out.push('\n');
    for row in trace {
        write!(out, "{},", row.round).unwrap();
        push_opt(&mut out, row.nmi);
        out.push(',');
        push_opt(&mut out, row.modularity);
        write!(out, ",{}", row.edges).unwrap();
        for w in &row.layer_weights {
            write!(out, ",{w}").unwrap();
        }
        out.push('\n');
    }
    write_file(path, &out, "writing trace")
}

/// CSV header for metric-report rows over `num_layers` layers.
pub fn report_csv_header(num_layers: usize) -> String {
    let mut out = String::from("modularity,conductance,nmi,sparsity");
    for i in 0..num_layers {
        write!(out, ",weight_layer_{i}").unwrap();
    }
    out
}

/// One CSV row for a metric report, column order matching
/// [`report_csv_header`]; an absent NMI is `NA`.
pub fn report_csv_row(report: &MetricReport) -> String {
    let mut out = String::new();
    write!(out, "{},{},", report.modularity, report.conductance).unwrap();
    push_opt(&mut out, report.nmi);
    write!(out, ",{}", report.sparsity).unwrap();
    for w in &report.layer_weights {
        write!(out, ",{w}").unwrap();
    }
    out
}

/// Writes a single metric report as a two-line CSV (header + row).
pub fn save_report(report: &MetricReport, path: &Path) -> Result<()> {
    let mut out = report_csv_header(report.layer_weights.len());
    out.push('\n');
    out.push_str(&report_csv_row(report));
    out.push('\n');
    write_file(path, &out, "writing report")
}
