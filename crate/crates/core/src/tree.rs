//! Tree growth gated by the information criterion.

use std::fmt;
use std::str::FromStr;

use crate::criterion::{loss_reduction_optimism, root_optimism, MaxCirEstimator};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::splitting::{best_split, leaf_weight, node_loss, sort_rows, NodeStats};

/// Safety cap on tree depth.
pub const MAX_DEPTH: usize = 32;

/// How deeper splits are gated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GrowthMode {
    /// Split while `R + C̃_R > 0`.
    Vanilla,
    /// Split while `π⁻¹(R + C̃_R) > max{0, R₁ + C̃₁}`, comparing against the
    /// tree's own root split as a proxy for the next iteration's root.
    #[default]
    GlobalSubset,
}

impl GrowthMode {
    pub fn name(self) -> &'static str {
        match self {
            GrowthMode::Vanilla => "vanilla",
            GrowthMode::GlobalSubset => "global-subset",
        }
    }
}

impl fmt::Display for GrowthMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GrowthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(GrowthMode::Vanilla),
            "global-subset" | "global_subset" => Ok(GrowthMode::GlobalSubset),
            _ => Err(Error::Config(format!(
                "unknown algorithm `{s}` (expected global-subset or vanilla)"
            ))),
        }
    }
}

/// Loss reduction and its optimism for the forced root split of a tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootGainProfile {
    pub r1: f64,
    pub c1: f64,
}

impl RootGainProfile {
    pub fn gain(&self) -> f64 {
        self.r1 + self.c1
    }
}

/// Whether a non-root split passes its gate.
pub fn split_passes(
    mode: GrowthMode,
    reduction: f64,
    optimism: f64,
    pi: f64,
    root: RootGainProfile,
) -> bool {
    let gain = reduction + optimism;
    match mode {
        GrowthMode::Vanilla => gain > 0.0,
        GrowthMode::GlobalSubset => gain / pi > root.gain().max(0.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Training-loss reduction `R` of this split.
        reduction: f64,
        /// Loss-reduction optimism `C̃_R` of this split (non-positive).
        optimism: f64,
    },
    Leaf {
        weight: f64,
        n_node: usize,
        /// Node training loss `−G²/(2nH)`.
        train_loss: f64,
        /// Node optimism on the training-set scale, `C_root · π`.
        optimism: f64,
    },
}

/// One boosting member. Nodes are stored in preorder with the root at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Validates child links and wraps a preorder node list.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Input("tree has no nodes".into()));
        }
        let mut seen = vec![false; nodes.len()];
        seen[0] = true;
        for (i, node) in nodes.iter().enumerate() {
            if let Node::Internal { left, right, .. } = *node {
                for child in [left, right] {
                    if child <= i || child >= nodes.len() || seen[child] {
                        return Err(Error::Input(format!(
                            "node {i} has invalid child index {child}"
                        )));
                    }
                    seen[child] = true;
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Input("tree has unreachable nodes".into()));
        }
        Ok(Self { nodes })
    }

    pub fn leaf(weight: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf {
                weight,
                n_node: 0,
                train_loss: 0.0,
                optimism: 0.0,
            }],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Internal { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Largest feature index used by a split, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.internal_nodes().map(|(f, _, _)| f).max()
    }

    /// `(feature, reduction, optimism)` for every split.
    pub fn internal_nodes(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Internal {
                feature,
                reduction,
                optimism,
                ..
            } => Some((feature, reduction, optimism)),
            Node::Leaf { .. } => None,
        })
    }

    /// Leaf weight for one row; `x_j <= s` routes left.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { weight, .. } => return weight,
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    /// Checked prediction for a row of known arity.
    pub fn predict(&self, row: &[f64], n_features: usize) -> Result<f64> {
        if row.len() != n_features {
            return Err(Error::Arity {
                expected: n_features,
                actual: row.len(),
            });
        }
        Ok(self.predict_row(row))
    }
}

/// A freshly grown tree with the quantities the boosting loop needs.
#[derive(Debug, Clone)]
pub struct BuiltTree {
    pub tree: Tree,
    /// Root split profile; `None` when the tree is a single leaf.
    pub profile: Option<RootGainProfile>,
    /// Set when no root split candidate existed.
    pub degenerate: bool,
    /// Sum of `R` over performed splits.
    pub total_reduction: f64,
    /// Sum of `C̃_R` over performed splits.
    pub total_optimism: f64,
    /// Leaf weight reached by every training row.
    pub row_weights: Vec<f64>,
}

/// Rows of the training data pre-sorted once per feature.
#[derive(Debug, Clone)]
pub struct SortedColumns {
    orders: Vec<Vec<u32>>,
}

impl SortedColumns {
    pub fn new(data: &Dataset) -> Result<Self> {
        let n = data.n_rows();
        if n > u32::MAX as usize {
            return Err(Error::Input(format!(
                "{n} rows exceed the supported maximum"
            )));
        }
        let all: Vec<u32> = (0..n as u32).collect();
        Ok(Self {
            orders: data.columns().iter().map(|c| sort_rows(&all, c)).collect(),
        })
    }
}

/// Grows trees on one training set.
pub struct TreeBuilder<'a> {
    columns: &'a [Vec<f64>],
    sorted: &'a SortedColumns,
    estimator: &'a mut MaxCirEstimator,
    mode: GrowthMode,
    max_depth: usize,
    goes_left: Vec<bool>,
}

struct Growth<'g> {
    g: &'g [f64],
    h: &'g [f64],
    nodes: Vec<Node>,
    profile: Option<RootGainProfile>,
    total_reduction: f64,
    total_optimism: f64,
    row_weights: Vec<f64>,
    depth_capped: bool,
}

impl<'a> TreeBuilder<'a> {
    pub fn new(
        data: &'a Dataset,
        sorted: &'a SortedColumns,
        estimator: &'a mut MaxCirEstimator,
        mode: GrowthMode,
    ) -> Self {
        Self {
            columns: data.columns(),
            sorted,
            estimator,
            mode,
            max_depth: MAX_DEPTH,
            goes_left: vec![false; data.n_rows()],
        }
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    /// Grows one tree on gradients `g` and hessians `h`.
    ///
    /// The root split is always taken when a candidate exists; deeper splits
    /// must pass the gate of the configured mode. Nodes expand depth first,
    /// left child first.
    pub fn build(&mut self, g: &[f64], h: &[f64]) -> Result<BuiltTree> {
        let n = self.goes_left.len();
        if g.len() != n || h.len() != n {
            return Err(Error::Input(format!(
                "derivative buffers of length {}/{} for {n} rows",
                g.len(),
                h.len()
            )));
        }
        if n < 2 {
            return Err(Error::Input("tree building needs at least two rows".into()));
        }
        if self.columns.is_empty() {
            return Err(Error::Input(
                "tree building needs at least one feature".into(),
            ));
        }
        let mut state = Growth {
            g,
            h,
            nodes: Vec::new(),
            profile: None,
            total_reduction: 0.0,
            total_optimism: 0.0,
            row_weights: vec![0.0; n],
            depth_capped: false,
        };
        self.grow(&mut state, self.sorted.orders.clone(), 0)?;
        if state.depth_capped {
            log::warn!(
                "tree reached the depth cap of {}; growth was stopped by the cap instead of the criterion",
                self.max_depth
            );
        }
        let degenerate = state.profile.is_none();
        Ok(BuiltTree {
            tree: Tree { nodes: state.nodes },
            profile: state.profile,
            degenerate,
            total_reduction: state.total_reduction,
            total_optimism: state.total_optimism,
            row_weights: state.row_weights,
        })
    }

    fn grow(&mut self, st: &mut Growth<'_>, orders: Vec<Vec<u32>>, depth: usize) -> Result<usize> {
        let n_total = self.goes_left.len();
        let rows = &orders[0];
        let stats = NodeStats::from_rows(rows, st.g, st.h, n_total)?;
        let weight = leaf_weight(&stats)?;
        let node_g: Vec<f64> = rows.iter().map(|&i| st.g[i as usize]).collect();
        let node_h: Vec<f64> = rows.iter().map(|&i| st.h[i as usize]).collect();
        let c_root = root_optimism(&node_g, &node_h, weight)?;

        let id = st.nodes.len();
        let leaf = Node::Leaf {
            weight,
            n_node: rows.len(),
            train_loss: node_loss(&stats)?,
            optimism: c_root * stats.pi(),
        };
        let make_leaf = |st: &mut Growth<'_>, orders: &[Vec<u32>]| {
            for &r in &orders[0] {
                st.row_weights[r as usize] = weight;
            }
            st.nodes.push(leaf.clone());
            id
        };

        if depth >= self.max_depth {
            st.depth_capped = true;
            return Ok(make_leaf(st, &orders));
        }
        let Some(split) = best_split(&orders, self.columns, st.g, st.h, n_total)? else {
            return Ok(make_leaf(st, &orders));
        };
        let e_max = self.estimator.expected_max(&split.grids)?;
        let optimism = loss_reduction_optimism(c_root, stats.pi(), e_max);

        match st.profile {
            None => {
                st.profile = Some(RootGainProfile {
                    r1: split.reduction,
                    c1: optimism,
                });
            }
            Some(root) => {
                if !split_passes(self.mode, split.reduction, optimism, stats.pi(), root) {
                    return Ok(make_leaf(st, &orders));
                }
            }
        }
        st.total_reduction += split.reduction;
        st.total_optimism += optimism;

        let column = &self.columns[split.feature];
        for &r in &orders[0] {
            self.goes_left[r as usize] = column[r as usize] <= split.threshold;
        }
        let mut left_orders = Vec::with_capacity(orders.len());
        let mut right_orders = Vec::with_capacity(orders.len());
        for order in &orders {
            let mut l = Vec::with_capacity(split.left.n_node);
            let mut r = Vec::with_capacity(split.right.n_node);
            for &row in order {
                if self.goes_left[row as usize] {
                    l.push(row);
                } else {
                    r.push(row);
                }
            }
            left_orders.push(l);
            right_orders.push(r);
        }
        drop(orders);

        st.nodes.push(Node::Internal {
            feature: split.feature,
            threshold: split.threshold,
            left: 0,
            right: 0,
            reduction: split.reduction,
            optimism,
        });
        let left = self.grow(st, left_orders, depth + 1)?;
        let right = self.grow(st, right_orders, depth + 1)?;
        if let Node::Internal {
            left: l, right: r, ..
        } = &mut st.nodes[id]
        {
            *l = left;
            *r = right;
        }
        Ok(id)
    }
}

/// Grows a single tree with a fresh criterion estimator.
pub fn build_tree(
    data: &Dataset,
    g: &[f64],
    h: &[f64],
    mode: GrowthMode,
    seed: u64,
    n_sim: usize,
) -> Result<BuiltTree> {
    let sorted = SortedColumns::new(data)?;
    let mut estimator = MaxCirEstimator::new(seed, n_sim)?;
    TreeBuilder::new(data, &sorted, &mut estimator, mode).build(g, h)
}
