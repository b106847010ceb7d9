//! File formats: whitespace-separated edge lists with comment lines, per-node
//! label files, dataset manifests, and training history CSV. All writes are
//! whole-file atomic (temp file + rename).

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::generate::GeneratorSpec;
use crate::graph::Graph;
use crate::oracle::TrainingSample;
use crate::train::EpochStats;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Dataset(String),
}

fn parse_err(file: &Path, line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        file: file.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Writes `contents` to `path` atomically: a sibling temp file is written
/// first and renamed over the target.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let tmp = sibling_temp_path(path);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn sibling_temp_path(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

/// A parsed edge-list graph plus the original node labels; internal ids are
/// assigned in order of first appearance.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// Original label of each internal node id.
    pub node_labels: Vec<String>,
}

/// Parses edge-list text: one `u v` pair per line (any whitespace), lines
/// starting with `#` or `%` ignored, node ids remapped to `0..n` in order of
/// first appearance. Self-loops are dropped and duplicate edges collapse.
pub fn parse_edge_list(text: &str, source: &Path) -> Result<LoadedGraph, IoError> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut node_labels: Vec<String> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(u), Some(v)) = (parts.next(), parts.next()) else {
            return Err(parse_err(
                source,
                lineno + 1,
                format!("expected 'u v', got '{line}'"),
            ));
        };
        let mut id_of = |label: &str| -> usize {
            *index.entry(label.to_string()).or_insert_with(|| {
                node_labels.push(label.to_string());
                node_labels.len() - 1
            })
        };
        let ui = id_of(u);
        let vi = id_of(v);
        edges.push((ui, vi));
    }
    let graph = Graph::from_edges(node_labels.len(), edges)
        .map_err(|e| parse_err(source, 0, e.to_string()))?;
    Ok(LoadedGraph { graph, node_labels })
}

pub fn read_edge_list(path: &Path) -> Result<LoadedGraph, IoError> {
    let text = fs::read_to_string(path)?;
    parse_edge_list(&text, path)
}

/// Edge-list text for a graph with contiguous ids.
pub fn edge_list_text(g: &Graph) -> String {
    let mut out = String::new();
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

pub fn write_edge_list(path: &Path, g: &Graph) -> Result<(), IoError> {
    write_atomic(path, edge_list_text(g).as_bytes())
}

/// Label file: one `node_id <TAB> label` line per node, labels printed to 12
/// significant digits.
pub fn labels_text(labels: &[f64]) -> String {
    let mut out = String::new();
    for (i, c) in labels.iter().enumerate() {
        out.push_str(&format!("{i}\t{c:.11e}\n"));
    }
    out
}

pub fn write_labels(path: &Path, labels: &[f64]) -> Result<(), IoError> {
    write_atomic(path, labels_text(labels).as_bytes())
}

/// Reads a label file as `(original node id, label)` pairs; ids stay in the
/// file's own id space so callers can join them against an edge list's
/// original labels.
pub fn read_labels(path: &Path) -> Result<Vec<(String, f64)>, IoError> {
    let text = fs::read_to_string(path)?;
    let mut labels = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(id), Some(value)) = (parts.next(), parts.next()) else {
            return Err(parse_err(path, lineno + 1, "expected 'node_id<TAB>label'"));
        };
        let value: f64 = value
            .parse()
            .map_err(|_| parse_err(path, lineno + 1, format!("bad label '{value}'")))?;
        if !seen.insert(id.to_string()) {
            return Err(parse_err(path, lineno + 1, format!("duplicate node id {id}")));
        }
        labels.push((id.to_string(), value));
    }
    Ok(labels)
}

/// Aligns labels read by [`read_labels`] with a loaded graph's internal ids.
pub fn align_labels(
    loaded: &LoadedGraph,
    labels: &[(String, f64)],
    source: &Path,
) -> Result<Vec<f64>, IoError> {
    let mut by_label: HashMap<&str, f64> = HashMap::with_capacity(labels.len());
    for (id, value) in labels {
        by_label.insert(id.as_str(), *value);
    }
    let mut out = Vec::with_capacity(loaded.node_labels.len());
    for name in &loaded.node_labels {
        match by_label.get(name.as_str()) {
            Some(&v) => out.push(v),
            None => {
                return Err(parse_err(source, 0, format!("no label for node '{name}'")));
            }
        }
    }
    Ok(out)
}

/// One dataset entry in the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub file_stem: String,
    pub spec: GeneratorSpec,
    pub k_star: usize,
    pub optimal_set_count: usize,
}

pub const MANIFEST_FILE: &str = "manifest.tsv";
const MANIFEST_HEADER: &str = "file\tmodel\tn\tp\tk\tm\tseed\tk_star\toptimal_sets";

pub fn manifest_text(entries: &[ManifestEntry]) -> String {
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    for e in entries {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            e.file_stem,
            e.spec.model,
            e.spec.n,
            e.spec.p,
            e.spec.k,
            e.spec.m,
            e.spec.seed,
            e.k_star,
            e.optimal_set_count,
        ));
    }
    out
}

pub fn write_manifest(dir: &Path, entries: &[ManifestEntry]) -> Result<(), IoError> {
    write_atomic(&dir.join(MANIFEST_FILE), manifest_text(entries).as_bytes())
}

pub fn dataset_file_stem(index: usize) -> String {
    format!("graph_{index:05}")
}

/// Writes one labeled sample as `<stem>.edges` + `<stem>.labels`.
pub fn write_dataset_entry(dir: &Path, stem: &str, sample: &TrainingSample) -> Result<(), IoError> {
    write_edge_list(&dir.join(format!("{stem}.edges")), &sample.graph)?;
    write_labels(&dir.join(format!("{stem}.labels")), &sample.labels)
}

/// Loads every `*.edges` + `*.labels` pair in `dir` (sorted by file name) and
/// drops degenerate all-zero-label samples.
pub fn load_dataset(dir: &Path) -> Result<Vec<TrainingSample>, IoError> {
    let mut stems: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "edges"))
        .collect();
    stems.sort();
    if stems.is_empty() {
        return Err(IoError::Dataset(format!(
            "no *.edges files found in {}",
            dir.display()
        )));
    }
    let mut samples = Vec::with_capacity(stems.len());
    for edges_path in stems {
        let loaded = read_edge_list(&edges_path)?;
        let labels_path = edges_path.with_extension("labels");
        let labels = align_labels(&loaded, &read_labels(&labels_path)?, &labels_path)?;
        let sample = TrainingSample::from_labels(loaded.graph, labels);
        if !sample.is_degenerate() {
            samples.push(sample);
        }
    }
    if samples.is_empty() {
        return Err(IoError::Dataset(format!(
            "every sample in {} is degenerate (all-zero labels)",
            dir.display()
        )));
    }
    Ok(samples)
}

pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,lr\n");
    for row in history {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.epoch, row.train_loss, row.val_loss, row.learning_rate
        ));
    }
    out
}

pub fn write_history(path: &Path, history: &[EpochStats]) -> Result<(), IoError> {
    write_atomic(path, history_csv(history).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_round_trip_preserves_edges() {
        // re-ingestion may permute internal ids (first-appearance order), so
        // compare edge sets in the original label space
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.edges");
        write_edge_list(&path, &g).unwrap();
        let loaded = read_edge_list(&path).unwrap();
        let mut relabeled: Vec<(String, String)> = loaded
            .graph
            .edges()
            .map(|(u, v)| {
                let (a, b) = (
                    loaded.node_labels[u].clone(),
                    loaded.node_labels[v].clone(),
                );
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        relabeled.sort();
        let mut original: Vec<(String, String)> =
            g.edges().map(|(u, v)| (u.to_string(), v.to_string())).collect();
        original.sort();
        assert_eq!(relabeled, original);
    }

    #[test]
    fn parser_remaps_arbitrary_labels_in_first_appearance_order() {
        let text = "# comment\n% another\nalpha beta\n7 alpha\nbeta 7\n";
        let loaded = parse_edge_list(text, Path::new("inline")).unwrap();
        assert_eq!(loaded.node_labels, vec!["alpha", "beta", "7"]);
        assert_eq!(loaded.graph.node_count(), 3);
        assert_eq!(loaded.graph.edge_count(), 3);
    }

    #[test]
    fn parser_drops_self_loops_and_duplicates() {
        let text = "0 1\n1 0\n1 1\n";
        let loaded = parse_edge_list(text, Path::new("inline")).unwrap();
        assert_eq!(loaded.graph.edge_count(), 1);
    }

    #[test]
    fn parser_reports_file_and_line() {
        let err = parse_edge_list("0 1\nnot-an-edge\n", Path::new("bad.edges")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.edges:2"), "{msg}");
    }

    #[test]
    fn labels_round_trip_to_twelve_significant_digits() {
        let labels = vec![1.0, 0.2, 5.0 / 6.0, 0.0];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.labels");
        write_labels(&path, &labels).unwrap();
        let loaded = read_labels(&path).unwrap();
        for ((id, b), (i, a)) in loaded.iter().zip(labels.iter().enumerate()) {
            assert_eq!(id, &i.to_string());
            assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0));
        }
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("2\t8.33333333333e-1"), "{text}");
    }

    #[test]
    fn missing_label_is_an_error() {
        let loaded = parse_edge_list("0 1\n", Path::new("g.edges")).unwrap();
        let labels = vec![("0".to_string(), 1.0)];
        assert!(align_labels(&loaded, &labels, Path::new("g.labels")).is_err());
    }

    #[test]
    fn dataset_round_trip_drops_degenerate_samples() {
        use crate::oracle::{label_sample, OracleConfig};
        let dir = tempfile::tempdir().unwrap();
        let g = Graph::from_edges(6, (1..6).map(|v| (0, v))).unwrap();
        let sample = label_sample(&g, &OracleConfig::new(1.0 / 6.0)).unwrap();
        write_dataset_entry(dir.path(), "graph_00000", &sample).unwrap();
        // degenerate entry: labels all zero
        let degenerate = TrainingSample::from_labels(g.clone(), vec![0.0; 6]);
        write_dataset_entry(dir.path(), "graph_00001", &degenerate).unwrap();

        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded.len(), 1);
        for (a, b) in loaded[0].labels.iter().zip(&sample.labels) {
            assert!((a - b).abs() <= 1e-11);
        }
    }

    #[test]
    fn manifest_text_is_tabular() {
        let entries = vec![ManifestEntry {
            file_stem: "graph_00000".into(),
            spec: GeneratorSpec::ba(20, 3, 7),
            k_star: 4,
            optimal_set_count: 2,
        }];
        let text = manifest_text(&entries);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(MANIFEST_HEADER));
        assert_eq!(lines.next(), Some("graph_00000\tba\t20\t0\t0\t3\t7\t4\t2"));
    }

    #[test]
    fn history_csv_shape() {
        let rows = vec![EpochStats {
            epoch: 0,
            train_loss: 0.5,
            val_loss: 0.25,
            learning_rate: 1e-3,
        }];
        let text = history_csv(&rows);
        assert_eq!(text, "epoch,train_loss,val_loss,lr\n0,0.5,0.25,0.001\n");
    }
}
