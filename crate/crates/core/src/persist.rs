//! Versioned plain-text model files.
//!
//! ```text
//! icboost-model 1
//! loss mse
//! dispersion none
//! learning_rate 0.01
//! initial_prediction 2.0
//! mode global-subset
//! seed 1
//! n_sim 1000
//! features 2
//! feature x1
//! feature x2
//! trees 1
//! tree 3
//! split 0 1.5 0.25 -0.01
//! leaf -0.5
//! leaf 0.5
//! end
//! ```
//!
//! Trees are written in preorder. Floating-point values use the shortest
//! representation that parses back to the same bits.

use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::ensemble::EnsembleModel;
use crate::error::{Error, Result};
use crate::losses::{LossKind, LossSpec};
use crate::tree::{GrowthMode, Node, Tree};

pub const FORMAT_TAG: &str = "icboost-model";
pub const FORMAT_VERSION: u32 = 1;

pub fn save<W: Write>(model: &EnsembleModel, mut out: W) -> Result<()> {
    out.write_all(to_string(model).as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn save_path(model: &EnsembleModel, path: impl AsRef<std::path::Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    save(model, std::io::BufWriter::new(file))
}

pub fn to_string(model: &EnsembleModel) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "{FORMAT_TAG} {FORMAT_VERSION}");
    let _ = writeln!(s, "loss {}", model.loss.kind().name());
    match model.loss.dispersion() {
        Some(r) => {
            let _ = writeln!(s, "dispersion {r:?}");
        }
        None => s.push_str("dispersion none\n"),
    }
    let _ = writeln!(s, "learning_rate {:?}", model.learning_rate);
    let _ = writeln!(s, "initial_prediction {:?}", model.initial_prediction);
    let _ = writeln!(s, "mode {}", model.mode);
    let _ = writeln!(s, "seed {}", model.seed);
    let _ = writeln!(s, "n_sim {}", model.n_sim);
    let _ = writeln!(s, "features {}", model.feature_names.len());
    for name in &model.feature_names {
        let _ = writeln!(s, "feature {name}");
    }
    let _ = writeln!(s, "trees {}", model.trees.len());
    for tree in &model.trees {
        let _ = writeln!(s, "tree {}", tree.nodes().len());
        write_preorder(tree, 0, &mut s);
    }
    s.push_str("end\n");
    s
}

fn write_preorder(tree: &Tree, i: usize, s: &mut String) {
    use std::fmt::Write as _;
    match tree.nodes()[i] {
        Node::Leaf { weight, .. } => {
            let _ = writeln!(s, "leaf {weight:?}");
        }
        Node::Internal {
            feature,
            threshold,
            left,
            right,
            reduction,
            optimism,
        } => {
            let _ = writeln!(
                s,
                "split {feature} {threshold:?} {reduction:?} {optimism:?}"
            );
            write_preorder(tree, left, s);
            write_preorder(tree, right, s);
        }
    }
}

pub fn load_path(path: impl AsRef<std::path::Path>) -> Result<EnsembleModel> {
    let file = std::fs::File::open(path)?;
    load(std::io::BufReader::new(file))
}

pub fn load<R: BufRead>(input: R) -> Result<EnsembleModel> {
    let mut lines = Lines {
        inner: input.lines(),
        line: 0,
    };

    let header = lines.next_line()?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(FORMAT_TAG) {
        return Err(lines.error("missing model file header"));
    }
    let version = parts.next().unwrap_or("");
    if version != FORMAT_VERSION.to_string() {
        return Err(Error::UnsupportedVersion(version.to_string()));
    }

    let kind: LossKind = lines.field("loss")?;
    let dispersion = match lines.raw_field("dispersion")?.as_str() {
        "none" => None,
        v => Some(lines.parse::<f64>(v)?),
    };
    let loss = LossSpec::new(kind, dispersion).map_err(|e| lines.error(&e.to_string()))?;
    let learning_rate: f64 = lines.field("learning_rate")?;
    let initial_prediction: f64 = lines.field("initial_prediction")?;
    let mode: GrowthMode = lines.field("mode")?;
    let seed: u64 = lines.field("seed")?;
    let n_sim: usize = lines.field("n_sim")?;
    let n_features: usize = lines.field("features")?;
    let mut feature_names = Vec::with_capacity(n_features);
    for _ in 0..n_features {
        feature_names.push(lines.raw_field("feature")?);
    }
    let n_trees: usize = lines.field("trees")?;
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let n_nodes: usize = lines.field("tree")?;
        let mut nodes = Vec::with_capacity(n_nodes);
        read_preorder(&mut lines, &mut nodes, n_nodes, n_features)?;
        if nodes.len() != n_nodes {
            return Err(lines.error(&format!(
                "tree declared {n_nodes} nodes but holds {}",
                nodes.len()
            )));
        }
        trees.push(Tree::from_nodes(nodes).map_err(|e| lines.error(&e.to_string()))?);
    }
    if lines.next_line()? != "end" {
        return Err(lines.error("expected `end`"));
    }
    Ok(EnsembleModel {
        loss,
        initial_prediction,
        learning_rate,
        trees,
        feature_names,
        mode,
        seed,
        n_sim,
        log: Vec::new(),
        termination: None,
    })
}

fn read_preorder<R: BufRead>(
    lines: &mut Lines<R>,
    nodes: &mut Vec<Node>,
    limit: usize,
    n_features: usize,
) -> Result<usize> {
    if nodes.len() >= limit {
        return Err(lines.error("tree has more nodes than declared"));
    }
    let line = lines.next_line()?;
    let mut parts = line.split_whitespace();
    let id = nodes.len();
    match parts.next() {
        Some("leaf") => {
            let weight = lines.parse(parts.next().unwrap_or(""))?;
            nodes.push(Node::Leaf {
                weight,
                n_node: 0,
                train_loss: 0.0,
                optimism: 0.0,
            });
        }
        Some("split") => {
            let feature: usize = lines.parse(parts.next().unwrap_or(""))?;
            if feature >= n_features {
                return Err(lines.error(&format!(
                    "split feature {feature} out of range for {n_features} features"
                )));
            }
            let threshold = lines.parse(parts.next().unwrap_or(""))?;
            let reduction = lines.parse(parts.next().unwrap_or(""))?;
            let optimism = lines.parse(parts.next().unwrap_or(""))?;
            nodes.push(Node::Internal {
                feature,
                threshold,
                left: 0,
                right: 0,
                reduction,
                optimism,
            });
            let left = read_preorder(lines, nodes, limit, n_features)?;
            let right = read_preorder(lines, nodes, limit, n_features)?;
            if let Node::Internal {
                left: l, right: r, ..
            } = &mut nodes[id]
            {
                *l = left;
                *r = right;
            }
        }
        _ => return Err(lines.error("expected `leaf` or `split`")),
    }
    Ok(id)
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?.trim_end().to_string()),
            None => Err(self.error("unexpected end of file")),
        }
    }

    fn error(&self, message: &str) -> Error {
        Error::ModelFormat {
            line: self.line,
            message: message.to_string(),
        }
    }

    fn raw_field(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(self.error(&format!("expected `{key}`"))),
        }
    }

    fn field<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.raw_field(key)?;
        self.parse(&v)
    }

    fn parse<T: FromStr>(&self, v: &str) -> Result<T> {
        v.parse()
            .map_err(|_| self.error(&format!("cannot parse `{v}`")))
    }
}
