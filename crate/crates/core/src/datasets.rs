//! Locating, fetching and loading labeled network datasets.
//!
//! A dataset named `foo` lives in a data directory as `foo.edges` (an edge
//! list, zero-based unless noted) plus `foo.labels` (one community label per
//! node). The default directory comes from `ISC_DATA_DIR`.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{load_edge_list, load_labels_for, Graph, Indexing, LabelVector};
use crate::io_util::write_atomic;

pub const DATA_DIR_ENV: &str = "ISC_DATA_DIR";

/// The directory named by `ISC_DATA_DIR`, if set and non-empty.
pub fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub labels: LabelVector,
}

impl Dataset {
    pub fn k(&self) -> usize {
        self.labels.k()
    }

    /// Restricts the dataset to its largest connected component.
    pub fn largest_component(&self) -> Dataset {
        let (graph, nodes) = self.graph.largest_component();
        let labels = self.labels.select(&nodes);
        Dataset {
            name: self.name.clone(),
            graph,
            labels,
        }
    }
}

pub fn edges_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.edges"))
}

pub fn labels_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.labels"))
}

/// Whether both files of `name` exist under `dir`.
pub fn is_available(dir: &Path, name: &str) -> bool {
    edges_path(dir, name).is_file() && labels_path(dir, name).is_file()
}

pub fn load_dataset(dir: &Path, name: &str) -> Result<Dataset> {
    load_dataset_with(dir, name, Indexing::ZeroBased)
}

pub fn load_dataset_with(dir: &Path, name: &str, indexing: Indexing) -> Result<Dataset> {
    let graph = load_edge_list(&edges_path(dir, name), indexing)?;
    let labels = load_labels_for(&labels_path(dir, name), graph.n())?;
    Ok(Dataset {
        name: name.to_string(),
        graph,
        labels,
    })
}

/// Looks `name` up in the `ISC_DATA_DIR` directory; `Ok(None)` when the
/// variable is unset or the files are missing.
pub fn load_from_env(name: &str) -> Result<Option<Dataset>> {
    match data_dir() {
        Some(dir) if is_available(&dir, name) => load_dataset(&dir, name).map(Some),
        _ => Ok(None),
    }
}

fn is_url(source: &str) -> bool {
    source.starts_with("http://") || source.starts_with("https://")
}

/// Copies `source` (an http(s) URL or a local path) to `dest` atomically.
/// Returns the number of bytes written.
pub fn fetch(source: &str, dest: &Path) -> Result<usize> {
    let bytes = if is_url(source) {
        let fail = |message: String| Error::Fetch {
            url: source.to_string(),
            message,
        };
        let mut response = ureq::get(source).call().map_err(|e| fail(e.to_string()))?;
        response
            .body_mut()
            .with_config()
            .limit(1 << 30)
            .read_to_vec()
            .map_err(|e| fail(e.to_string()))?
    } else {
        let path = source.strip_prefix("file://").unwrap_or(source);
        std::fs::read(path).map_err(|e| Error::io(path, e))?
    };
    if let Some(dir) = dest.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_atomic(dest, &bytes)?;
    Ok(bytes.len())
}

/// Fetches both files of a dataset into `dir`, then checks they load.
pub fn fetch_dataset(name: &str, edges: &str, labels: &str, dir: &Path) -> Result<Dataset> {
    fetch(edges, &edges_path(dir, name))?;
    fetch(labels, &labels_path(dir, name))?;
    load_dataset(dir, name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fetch_local_file_and_load() {
        let src = tempfile::tempdir().unwrap();
        let dst = tempfile::tempdir().unwrap();
        let e = src.path().join("e.txt");
        let l = src.path().join("l.txt");
        std::fs::write(&e, "0 1\n1 2\n3 4\n").unwrap();
        std::fs::write(&l, "1\n1\n1\n2\n2\n").unwrap();
        let ds = fetch_dataset("toy", e.to_str().unwrap(), l.to_str().unwrap(), dst.path()).unwrap();
        assert_eq!(ds.graph.n(), 5);
        assert_eq!(ds.k(), 2);
        assert!(is_available(dst.path(), "toy"));
        let lcc = ds.largest_component();
        assert_eq!(lcc.graph.n(), 3);
        assert_eq!(lcc.labels.k(), 1);
    }

    #[test]
    fn missing_source_is_io_error() {
        let dst = tempfile::tempdir().unwrap();
        let err = fetch("/definitely/not/here.edges", &dst.path().join("x")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn label_count_must_match() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(edges_path(dir.path(), "bad"), "0 1\n1 2\n").unwrap();
        std::fs::write(labels_path(dir.path(), "bad"), "1\n2\n").unwrap();
        assert!(matches!(load_dataset(dir.path(), "bad"), Err(Error::Dimension(_))));
    }
}
