//! Undirected simple graphs, degree statistics and the plain-text edge list
//! and label formats.
//!
//! Edge list: one `i j` pair per line, whitespace separated. Lines starting
//! with `#` are comments. An optional header line `n=<int>` fixes the node
//! count (useful when trailing nodes are isolated).
//!
//! Labels: either one label per line (line order = node order) or
//! `node label` pairs, which are ordered by node id.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::{read_to_string, write_atomic};

/// How integer node ids in an edge list map onto `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Indexing {
    #[default]
    ZeroBased,
    OneBased,
}

/// Undirected graph without self-loops or parallel edges.
///
/// Neighbour lists are sorted, which makes equality structural: two graphs
/// built from the same edge set compare equal regardless of input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    n_edges: usize,
}

/// Counts of input records dropped while building a [`Graph`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Sanitized {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl Graph {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            n_edges: 0,
        }
    }

    /// Builds a graph from node pairs, dropping self-loops and repeated edges
    /// (in either direction).
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::from_edges_counted(n, edges).map(|(g, _)| g)
    }

    pub fn from_edges_counted<I>(n: usize, edges: I) -> Result<(Self, Sanitized)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj = vec![Vec::new(); n];
        let mut dropped = Sanitized::default();
        let mut raw = 0usize;
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Dimension(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                dropped.self_loops += 1;
                continue;
            }
            raw += 1;
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut n_edges = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            n_edges += list.len();
        }
        n_edges /= 2;
        dropped.duplicates = raw - n_edges;
        Ok((Graph { adj, n_edges }, dropped))
    }

    /// Builds a graph from a dense 0/1 matrix (upper triangle is read).
    pub fn from_dense(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension("adjacency matrix is not square".into()));
        }
        let n = a.nrows();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if a[(i, j)] != 0.0 {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edges(n, edges)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&j).is_ok()
    }

    /// Edges as `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut a = DMatrix::zeros(n, n);
        for (i, j) in self.edges() {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    /// Subgraph induced by `nodes` (given in the order they should be renumbered).
    pub fn induced(&self, nodes: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.n()];
        for (new, &old) in nodes.iter().enumerate() {
            index[old] = new;
        }
        let edges = nodes.iter().enumerate().flat_map(|(new_i, &old_i)| {
            let index = &index;
            self.adj[old_i].iter().filter_map(move |&old_j| {
                let new_j = index[old_j];
                (new_j != usize::MAX && new_i < new_j).then_some((new_i, new_j))
            })
        });
        Graph::from_edges(nodes.len(), edges.collect::<Vec<_>>()).expect("indices in range")
    }

    /// Connected components, each sorted ascending, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Largest connected component and the original ids of its nodes.
    /// Ties go to the component containing the smallest node id.
    pub fn largest_component(&self) -> (Graph, Vec<usize>) {
        let comps = self.components();
        let best = comps.into_iter().fold(
            Vec::new(),
            |best: Vec<usize>, c| if c.len() > best.len() { c } else { best },
        );
        (self.induced(&best), best)
    }
}

/// Minimum, maximum and mean degree together with the midpoint
/// `(d_max + d_min) / 2` used as the default regularization scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub d_min: usize,
    pub d_max: usize,
    pub d_bar: f64,
    pub midpoint: f64,
}

pub fn degree_stats(g: &Graph) -> DegreeStats {
    let degs = g.degrees();
    if degs.is_empty() {
        return DegreeStats {
            d_min: 0,
            d_max: 0,
            d_bar: 0.0,
            midpoint: 0.0,
        };
    }
    let d_min = *degs.iter().min().unwrap();
    let d_max = *degs.iter().max().unwrap();
    let d_bar = degs.iter().sum::<usize>() as f64 / degs.len() as f64;
    DegreeStats {
        d_min,
        d_max,
        d_bar,
        midpoint: (d_min + d_max) as f64 / 2.0,
    }
}

/// Community labels, stored 0-based. Files use 1-based labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<usize>,
    k: usize,
}

impl LabelVector {
    /// Wraps 0-based labels; `k` becomes `max + 1` and every label in `0..k`
    /// must occur.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Parameter(format!(
                "label {} is unused; labels must form a contiguous range",
                missing + 1
            )));
        }
        Ok(LabelVector { labels, k })
    }

    /// Remaps arbitrary integer codes to `0..k` in ascending code order.
    pub fn from_codes(codes: &[i64]) -> Self {
        let mut distinct: Vec<i64> = codes.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let labels = codes.iter().map(|c| distinct.binary_search(c).unwrap()).collect();
        LabelVector {
            labels,
            k: distinct.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }

    /// Restricts to the given node indices (for example an LCC) and
    /// re-compacts the label range.
    pub fn select(&self, nodes: &[usize]) -> LabelVector {
        let codes: Vec<i64> = nodes.iter().map(|&i| self.labels[i] as i64).collect();
        LabelVector::from_codes(&codes)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.labels.len() * 3);
        for &l in &self.labels {
            writeln!(s, "{}", l + 1).unwrap();
        }
        s
    }
}

/// Dense renumbering of sparse input ids: `ids[i]` is the original id of node `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMap {
    pub ids: Vec<u64>,
}

impl NodeMap {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, id) in self.ids.iter().enumerate() {
            writeln!(s, "{i} {id}").unwrap();
        }
        s
    }
}

struct RawEdges {
    pairs: Vec<(u64, u64)>,
    header_n: Option<usize>,
}

fn parse_raw_edges(text: &str, path: &Path) -> Result<RawEdges> {
    let mut pairs = Vec::new();
    let mut header_n = None;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("n=").or_else(|| line.strip_prefix("n =")) {
            let n = rest
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(path, lineno, format!("bad header {line:?}")))?;
            header_n = Some(n);
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (Some(a), Some(b), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected two node ids, got {line:?}"),
            ));
        };
        let parse_id = |tok: &str| -> Result<u64> {
            let v = tok
                .parse::<i64>()
                .map_err(|_| Error::parse(path, lineno, format!("non-integer node id {tok:?}")))?;
            u64::try_from(v).map_err(|_| Error::parse(path, lineno, format!("negative node id {v}")))
        };
        pairs.push((parse_id(a)?, parse_id(b)?));
    }
    Ok(RawEdges { pairs, header_n })
}

/// Parses edge-list text. `path` is only used in error messages.
pub fn parse_edge_list(text: &str, indexing: Indexing, path: &Path) -> Result<(Graph, Sanitized)> {
    let raw = parse_raw_edges(text, path)?;
    let offset = match indexing {
        Indexing::ZeroBased => 0,
        Indexing::OneBased => 1,
    };
    let mut edges = Vec::with_capacity(raw.pairs.len());
    let mut max_id = None::<usize>;
    for &(a, b) in &raw.pairs {
        if a < offset || b < offset {
            return Err(Error::parse(path, 0, "node id 0 in a one-based edge list"));
        }
        let (i, j) = ((a - offset) as usize, (b - offset) as usize);
        max_id = Some(max_id.map_or(i.max(j), |m| m.max(i).max(j)));
        edges.push((i, j));
    }
    let implied = max_id.map_or(0, |m| m + 1);
    let n = match raw.header_n {
        Some(h) if h < implied => {
            return Err(Error::parse(
                path,
                0,
                format!("header n={h} but node id {} present", implied - 1),
            ))
        }
        Some(h) => h,
        None => implied,
    };
    let (g, dropped) = Graph::from_edges_counted(n, edges)?;
    if dropped.self_loops + dropped.duplicates > 0 {
        log::warn!(
            "{}: dropped {} self-loops and {} duplicate edges",
            path.display(),
            dropped.self_loops,
            dropped.duplicates
        );
    }
    Ok((g, dropped))
}

pub fn load_edge_list(path: &Path, indexing: Indexing) -> Result<Graph> {
    let text = read_to_string(path)?;
    parse_edge_list(&text, indexing, path).map(|(g, _)| g)
}

/// Loads an edge list whose ids may be sparse, renumbering them densely in
/// ascending id order.
pub fn load_edge_list_remapped(path: &Path) -> Result<(Graph, NodeMap)> {
    let text = read_to_string(path)?;
    let raw = parse_raw_edges(&text, path)?;
    let mut ids: Vec<u64> = raw.pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    ids.sort_unstable();
    ids.dedup();
    let index = |id: u64| ids.binary_search(&id).unwrap();
    let edges: Vec<_> = raw.pairs.iter().map(|&(a, b)| (index(a), index(b))).collect();
    let (g, dropped) = Graph::from_edges_counted(ids.len(), edges)?;
    if dropped.self_loops + dropped.duplicates > 0 {
        log::warn!(
            "{}: dropped {} self-loops and {} duplicate edges",
            path.display(),
            dropped.self_loops,
            dropped.duplicates
        );
    }
    Ok((g, NodeMap { ids }))
}

pub fn edge_list_text(g: &Graph) -> String {
    let mut s = String::with_capacity(g.n_edges() * 10 + 16);
    writeln!(s, "n={}", g.n()).unwrap();
    for (i, j) in g.edges() {
        writeln!(s, "{i} {j}").unwrap();
    }
    s
}

pub fn write_edge_list(g: &Graph, path: &Path) -> Result<()> {
    write_atomic(path, edge_list_text(g).as_bytes())
}

pub fn parse_labels(text: &str, path: &Path) -> Result<LabelVector> {
    let mut single = Vec::new();
    let mut pairs = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let int = |tok: &str| {
            tok.parse::<i64>()
                .map_err(|_| Error::parse(path, lineno, format!("non-integer token {tok:?}")))
        };
        match toks.as_slice() {
            [l] if pairs.is_empty() => single.push(int(l)?),
            [node, l] if single.is_empty() => {
                let node = int(node)?;
                if pairs.insert(node, int(l)?).is_some() {
                    return Err(Error::parse(path, lineno, format!("node {node} labelled twice")));
                }
            }
            [_] | [_, _] => return Err(Error::parse(path, lineno, "mixed single-label and pair lines")),
            _ => return Err(Error::parse(path, lineno, format!("unexpected line {line:?}"))),
        }
    }
    let codes: Vec<i64> = if pairs.is_empty() {
        single
    } else {
        pairs.into_values().collect()
    };
    if codes.is_empty() {
        return Err(Error::parse(path, 0, "label file is empty"));
    }
    Ok(LabelVector::from_codes(&codes))
}

pub fn load_labels(path: &Path) -> Result<LabelVector> {
    parse_labels(&read_to_string(path)?, path)
}

/// Loads labels and checks they cover exactly `n` nodes.
pub fn load_labels_for(path: &Path, n: usize) -> Result<LabelVector> {
    let labels = load_labels(path)?;
    if labels.len() != n {
        return Err(Error::Dimension(format!(
            "{} holds {} labels, graph has {} nodes",
            path.display(),
            labels.len(),
            n
        )));
    }
    Ok(labels)
}

pub fn write_labels(labels: &LabelVector, path: &Path) -> Result<()> {
    write_atomic(path, labels.to_text().as_bytes())
}
