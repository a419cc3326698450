//! Greedy profiling of binary splits within a node.
//!
//! Each feature is scanned in sorted order while accumulating gradient and
//! hessian prefix sums. Every gap between consecutive distinct values is a
//! candidate; the cut is placed at the midpoint of the gap and rows with
//! `x <= threshold` go left.

use std::cmp::Ordering;

use crate::error::{Error, Location, Result};
use crate::numeric::{exact_sum, ExactSum};

/// Gradient and hessian totals of the rows reaching a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeStats {
    pub grad_sum: f64,
    pub hess_sum: f64,
    pub n_node: usize,
    pub n_total: usize,
}

impl NodeStats {
    pub fn new(grad_sum: f64, hess_sum: f64, n_node: usize, n_total: usize) -> Result<Self> {
        if !(hess_sum > 0.0 && hess_sum.is_finite()) {
            return Err(Error::Convexity {
                value: hess_sum,
                location: Location::Node,
            });
        }
        if n_node == 0 || n_node > n_total {
            return Err(Error::Input(format!(
                "node size {n_node} must lie in 1..={n_total}"
            )));
        }
        Ok(Self {
            grad_sum,
            hess_sum,
            n_node,
            n_total,
        })
    }

    /// Exact totals over `rows`.
    pub fn from_rows(rows: &[u32], g: &[f64], h: &[f64], n_total: usize) -> Result<Self> {
        let gs = exact_sum(rows.iter().map(|&i| g[i as usize]));
        let hs = exact_sum(rows.iter().map(|&i| h[i as usize]));
        Self::new(gs, hs, rows.len(), n_total)
    }

    /// Fraction of the training data passed to this node.
    pub fn pi(&self) -> f64 {
        self.n_node as f64 / self.n_total as f64
    }
}

/// Training loss of a node with its optimal constant, `−G²/(2nH)`.
pub fn node_loss(stats: &NodeStats) -> Result<f64> {
    check_hessian(stats.hess_sum)?;
    Ok(-(stats.grad_sum * stats.grad_sum) / (2.0 * stats.n_total as f64 * stats.hess_sum))
}

/// Optimal leaf weight `−G/H`.
pub fn leaf_weight(stats: &NodeStats) -> Result<f64> {
    check_hessian(stats.hess_sum)?;
    Ok(-stats.grad_sum / stats.hess_sum)
}

fn check_hessian(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Convexity {
            value: h,
            location: Location::Node,
        })
    }
}

/// Training-loss reduction of a split given child and parent sums, floored at 0
/// to absorb rounding.
#[inline]
pub fn reduction_from_sums(
    g_left: f64,
    h_left: f64,
    g_right: f64,
    h_right: f64,
    g_parent: f64,
    h_parent: f64,
    n_total: usize,
) -> f64 {
    let r = (g_left * g_left / h_left + g_right * g_right / h_right
        - g_parent * g_parent / h_parent)
        / (2.0 * n_total as f64);
    r.max(0.0)
}

/// Candidate split positions profiled on one feature.
///
/// `ranks[k]` is the number of node rows with `x <= s_k`, so the split-point
/// quantiles are `ranks[k] / n_node`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SplitGrid {
    pub n_node: u32,
    pub ranks: Vec<u32>,
}

impl SplitGrid {
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Empirical in-node quantiles `u_k` of the candidate split points.
    pub fn quantiles(&self) -> Vec<f64> {
        let n = self.n_node as f64;
        self.ranks.iter().map(|&r| r as f64 / n).collect()
    }
}

/// The best split of a node together with the profiling information the
/// information criterion needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDecision {
    pub feature: usize,
    pub threshold: f64,
    pub parent: NodeStats,
    pub left: NodeStats,
    pub right: NodeStats,
    pub reduction: f64,
    /// One grid per feature, in feature order; empty for constant features.
    pub grids: Vec<SplitGrid>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    position: usize,
    threshold: f64,
    score: f64,
}

/// Larger score wins; ties go to the lower feature index, then the lower threshold.
fn better(a: &Candidate, b: &Candidate) -> bool {
    match a.score.partial_cmp(&b.score).unwrap_or(Ordering::Equal) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => (a.feature, a.threshold) < (b.feature, b.threshold),
    }
}

/// A cut strictly between `lo < hi` that sends `lo` left and `hi` right.
#[inline]
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi || mid < lo {
        lo
    } else {
        mid
    }
}

/// Sorts node rows by one feature; ties keep their incoming order.
pub fn sort_rows(rows: &[u32], column: &[f64]) -> Vec<u32> {
    let mut v = rows.to_vec();
    v.sort_by(|&a, &b| column[a as usize].total_cmp(&column[b as usize]));
    v
}

/// Scans one feature and returns its grid and best candidate.
///
/// Child sums are correctly rounded, so the score of a partition does not
/// depend on the order in which its rows are visited.
fn scan_feature(
    feature: usize,
    order: &[u32],
    column: &[f64],
    g: &[f64],
    h: &[f64],
    parent: &NodeStats,
) -> (SplitGrid, Option<Candidate>) {
    let n = order.len();
    let x_at = |i: usize| column[order[i] as usize];

    // right-hand sums at every boundary, collected from the top down
    let mut right_sums = Vec::new();
    let (mut gr, mut hr) = (ExactSum::new(), ExactSum::new());
    for i in (1..n).rev() {
        let row = order[i] as usize;
        gr.add(g[row]);
        hr.add(h[row]);
        if x_at(i - 1) < x_at(i) {
            right_sums.push((gr.value(), hr.value()));
        }
    }

    let mut ranks = Vec::with_capacity(right_sums.len());
    let mut best: Option<Candidate> = None;
    let (mut gl, mut hl) = (ExactSum::new(), ExactSum::new());
    for (i, &row) in order.iter().enumerate().take(n.saturating_sub(1)) {
        let row = row as usize;
        gl.add(g[row]);
        hl.add(h[row]);
        let (x, x_next) = (x_at(i), x_at(i + 1));
        if x_next <= x {
            continue;
        }
        ranks.push((i + 1) as u32);
        let Some((g_r, h_r)) = right_sums.pop() else {
            break;
        };
        let (g_l, h_l) = (gl.value(), hl.value());
        if !(h_l > 0.0 && h_r > 0.0) {
            continue;
        }
        let score = reduction_from_sums(
            g_l,
            h_l,
            g_r,
            h_r,
            parent.grad_sum,
            parent.hess_sum,
            parent.n_total,
        );
        let cand = Candidate {
            feature,
            position: i + 1,
            threshold: midpoint(x, x_next),
            score,
        };
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    (
        SplitGrid {
            n_node: n as u32,
            ranks,
        },
        best,
    )
}

/// Best split of a node.
///
/// `orders[j]` holds the node's rows sorted by feature `j`; every order must
/// contain the same rows. Returns `None` when the node has fewer than two rows
/// or no feature takes two distinct values.
pub fn best_split(
    orders: &[Vec<u32>],
    columns: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    n_total: usize,
) -> Result<Option<SplitDecision>> {
    if orders.len() != columns.len() {
        return Err(Error::Input(format!(
            "{} sorted orders for {} features",
            orders.len(),
            columns.len()
        )));
    }
    let Some(first) = orders.first() else {
        return Ok(None);
    };
    if first.len() < 2 {
        return Ok(None);
    }
    let parent = NodeStats::from_rows(first, g, h, n_total)?;

    let mut grids = Vec::with_capacity(orders.len());
    let mut best: Option<Candidate> = None;
    for (j, (order, column)) in orders.iter().zip(columns).enumerate() {
        let (grid, cand) = scan_feature(j, order, column, g, h, &parent);
        grids.push(grid);
        if let Some(c) = cand {
            if best.as_ref().is_none_or(|b| better(&c, b)) {
                best = Some(c);
            }
        }
    }
    let Some(best) = best else {
        return Ok(None);
    };

    let order = &orders[best.feature];
    let (left_rows, right_rows) = order.split_at(best.position);
    let left = NodeStats::from_rows(left_rows, g, h, n_total)?;
    let right = NodeStats::from_rows(right_rows, g, h, n_total)?;
    let reduction = reduction_from_sums(
        left.grad_sum,
        left.hess_sum,
        right.grad_sum,
        right.hess_sum,
        parent.grad_sum,
        parent.hess_sum,
        n_total,
    );
    Ok(Some(SplitDecision {
        feature: best.feature,
        threshold: best.threshold,
        parent,
        left,
        right,
        reduction,
        grids,
    }))
}

/// Convenience wrapper that sorts `rows` on every feature first.
pub fn best_split_rows(
    rows: &[u32],
    columns: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    n_total: usize,
) -> Result<Option<SplitDecision>> {
    let orders: Vec<Vec<u32>> = columns.iter().map(|c| sort_rows(rows, c)).collect();
    best_split(&orders, columns, g, h, n_total)
}
