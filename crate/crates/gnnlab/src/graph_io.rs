//! Plain-text graph format.
//!
//! ```text
//! # comment
//! nodes 3 features 2 classes 2
//! node 0 1 0.5 -1.25
//! node 1 0 0.0 2.0
//! node 2 1 1.0 1.0
//! edge 0 1
//! edge 1 2
//! train 0 1
//! test 2
//! ```
//!
//! The header comes first. Every node appears exactly once as a `node` line
//! with its label and `features` values. Each undirected edge is listed once.
//! `train` and `test` lines carry node ids; when absent every node is a
//! training node. Floats are written in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gnnlab_core::{Graph, Matrix};

use crate::error::{Error, Result};

const IDS_PER_LINE: usize = 32;

/// Renders `graph` in the text format.
pub fn to_text(graph: &Graph) -> String {
    let mut out = String::new();
    let (n, r) = (graph.num_nodes(), graph.num_features());
    let _ = writeln!(out, "nodes {} features {} classes {}", n, r, graph.num_classes());
    for i in 0..n {
        let _ = write!(out, "node {} {}", i, graph.labels()[i]);
        for x in graph.features().row(i) {
            let _ = write!(out, " {}", x);
        }
        out.push('\n');
    }
    for (u, v) in graph.edges() {
        let _ = writeln!(out, "edge {} {}", u, v);
    }
    for (tag, nodes) in [("train", graph.train_nodes()), ("test", graph.test_nodes())] {
        for chunk in nodes.chunks(IDS_PER_LINE) {
            out.push_str(tag);
            for id in chunk {
                let _ = write!(out, " {}", id);
            }
            out.push('\n');
        }
    }
    out
}

pub fn save_graph(graph: &Graph, path: &Path) -> Result<()> {
    fs::write(path, to_text(graph)).map_err(|e| Error::io(path, e))
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_graph(&text, path)
}

struct Header {
    n: usize,
    r: usize,
    k: usize,
}

/// Parses the text format; `origin` only labels error messages.
pub fn parse_graph(text: &str, origin: &Path) -> Result<Graph> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut header: Option<Header> = None;
    let mut labels: Vec<Option<usize>> = Vec::new();
    let mut features: Vec<f64> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut seen_edges = std::collections::HashSet::new();
    let mut train: Option<Vec<bool>> = None;
    let mut test: Option<Vec<bool>> = None;

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let tag = tok.next().unwrap_or_default();
        let rest: Vec<&str> = tok.collect();
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(line_no, format!("expected a non-negative integer, got {:?}", s)))
        };
        if tag == "nodes" {
            if header.is_some() {
                return Err(err(line_no, "duplicate header".into()));
            }
            if rest.len() != 5 || rest[1] != "features" || rest[3] != "classes" {
                return Err(err(
                    line_no,
                    "header must be `nodes <n> features <r> classes <K>`".into(),
                ));
            }
            let h = Header {
                n: int(rest[0])?,
                r: int(rest[2])?,
                k: int(rest[4])?,
            };
            labels = vec![None; h.n];
            features = vec![0.0; h.n * h.r];
            header = Some(h);
            continue;
        }
        let h = header
            .as_ref()
            .ok_or_else(|| err(line_no, "missing `nodes ...` header before data".into()))?;
        let node_id = |s: &str| {
            let id = int(s)?;
            if id >= h.n {
                return Err(err(line_no, format!("node {} out of range for {} nodes", id, h.n)));
            }
            Ok(id)
        };
        match tag {
            "node" => {
                if rest.len() != 2 + h.r {
                    return Err(err(
                        line_no,
                        format!("node line needs id, label and {} features", h.r),
                    ));
                }
                let id = node_id(rest[0])?;
                if labels[id].is_some() {
                    return Err(err(line_no, format!("node {} listed twice", id)));
                }
                let y = int(rest[1])?;
                if y >= h.k {
                    return Err(err(line_no, format!("label {} outside [0, {})", y, h.k)));
                }
                labels[id] = Some(y);
                for (c, s) in rest[2..].iter().enumerate() {
                    let x: f64 = s
                        .parse()
                        .map_err(|_| err(line_no, format!("bad feature value {:?}", s)))?;
                    if !x.is_finite() {
                        return Err(err(line_no, format!("non-finite feature {:?}", s)));
                    }
                    features[id * h.r + c] = x;
                }
            }
            "edge" => {
                if rest.len() != 2 {
                    return Err(err(line_no, "edge line needs two node ids".into()));
                }
                let (u, v) = (node_id(rest[0])?, node_id(rest[1])?);
                if u == v {
                    return Err(err(line_no, format!("self-loop on node {}", u)));
                }
                if !seen_edges.insert((u.min(v), u.max(v))) {
                    return Err(err(line_no, format!("duplicate edge {} {}", u, v)));
                }
                edges.push((u, v));
            }
            "train" | "test" => {
                if rest.is_empty() {
                    return Err(err(line_no, format!("`{}` line needs node ids", tag)));
                }
                let mask = if tag == "train" { &mut train } else { &mut test };
                let mask = mask.get_or_insert_with(|| vec![false; h.n]);
                for s in &rest {
                    mask[node_id(s)?] = true;
                }
            }
            other => return Err(err(line_no, format!("unknown line type {:?}", other))),
        }
    }

    let h = header.ok_or_else(|| err(1, "empty graph file".into()))?;
    let labels: Vec<usize> = labels
        .iter()
        .enumerate()
        .map(|(i, y)| y.ok_or_else(|| err(0, format!("node {} has no `node` line", i))))
        .collect::<Result<_>>()?;
    let features = Matrix::from_vec(h.n, h.r, features)?;
    let graph = Graph::new(h.k, features, labels, &edges)?;
    match (train, test) {
        (None, None) => Ok(graph),
        (train, test) => {
            let train = train.unwrap_or_else(|| vec![false; h.n]);
            let test = test.unwrap_or_else(|| vec![false; h.n]);
            Ok(graph.with_masks(train, test)?)
        }
    }
}
