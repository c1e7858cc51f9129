//! Builds a mechanism on the θ-grid from a per-type policy.
//!
//! Every policy tags its output with a regime (served or not, boundary
//! quality or interior, ...). Inside one regime the allocation is smooth, so
//! wherever neighbouring nodes disagree the switch point is bisected to
//! machine precision and recorded as a break, with geometrically graded
//! nodes on both sides to resolve root-type behaviour at serving cutoffs.

use rayon::prelude::*;

use crate::model::{prev_float, ModelConfig};

use super::MechanismSolution;

/// Graded nodes inserted on each side of a regime switch.
const GRADED_NODES: i32 = 24;
/// Bound on insertion passes; each pass resolves every detected switch.
const MAX_PASSES: usize = 6;
/// Served side of a serving cutoff: `ONSET_NODES` nodes at `hi ± D·(j/J)^4`
/// with `D` spanning `ONSET_CELLS` base cells.
const ONSET_NODES: i32 = 48;
const ONSET_CELLS: f64 = 8.0;
const ONSET_POWER: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NodeEval {
    pub lambda: f64,
    pub v_good: f64,
    pub regime: u32,
}

pub(crate) trait Policy: Sync {
    fn eval(&self, theta: f64, phi: f64) -> NodeEval;
}

#[derive(Debug, Clone, Copy)]
struct Node {
    theta: f64,
    phi: f64,
    eval: NodeEval,
    gap_after: bool,
}

pub(crate) struct Assembled {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub evals: Vec<NodeEval>,
    pub breaks: Vec<usize>,
}

pub(crate) fn assemble_grid<P: Policy>(cfg: &ModelConfig, policy: &P) -> Assembled {
    let top = cfg.theta_max();
    let n = cfg.grid.theta_points;
    let mut thetas: Vec<f64> = (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect();
    thetas[n - 1] = top;
    let mut gap_lefts: Vec<f64> = Vec::new();
    for &k in cfg.dist.knots() {
        let left = prev_float(k);
        thetas.push(left);
        thetas.push(k);
        gap_lefts.push(left);
    }
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();

    let node_at = |t: f64| {
        let phi = cfg.dist.phi(t);
        Node {
            theta: t,
            phi,
            eval: policy.eval(t, phi),
            gap_after: false,
        }
    };
    let mut nodes: Vec<Node> = thetas.par_iter().map(|&t| node_at(t)).collect();
    for node in nodes.iter_mut() {
        node.gap_after = gap_lefts.contains(&node.theta);
    }

    for _ in 0..MAX_PASSES {
        let mut inserted = false;
        let mut next = Vec::with_capacity(nodes.len() + 64);
        for i in 0..nodes.len() {
            let mut left = nodes[i];
            if i + 1 == nodes.len() || left.gap_after || left.eval.regime == nodes[i + 1].eval.regime {
                next.push(left);
                continue;
            }
            let right = nodes[i + 1];
            let (lo, hi) = locate_switch(&left, &right, &node_at);
            inserted = true;
            let mut extra: Vec<Node> = Vec::new();
            for k in 1..=GRADED_NODES {
                let t = lo.theta - (lo.theta - left.theta) * 2f64.powi(-k);
                if t > left.theta && t < lo.theta {
                    extra.push(node_at(t));
                }
            }
            if lo.theta > left.theta {
                extra.push(Node { gap_after: true, ..lo });
            } else {
                left.gap_after = true;
            }
            if hi.theta < right.theta {
                extra.push(hi);
            }
            for k in (1..=GRADED_NODES).rev() {
                let t = hi.theta + (right.theta - hi.theta) * 2f64.powi(-k);
                if t > hi.theta && t < right.theta {
                    extra.push(node_at(t));
                }
            }
            extra.sort_by(|a, b| a.theta.total_cmp(&b.theta));
            extra.dedup_by(|a, b| a.theta == b.theta);
            next.push(left);
            next.extend(extra);
        }
        nodes = next;
        if !inserted {
            break;
        }
    }

    let cell = top / (n - 1) as f64;
    let nodes = grade_onsets(nodes, ONSET_CELLS * cell, &node_at);

    let breaks = nodes
        .iter()
        .enumerate()
        .filter(|(i, n)| n.gap_after && i + 1 < nodes.len())
        .map(|(i, _)| i)
        .collect();
    Assembled {
        theta: nodes.iter().map(|n| n.theta).collect(),
        phi: nodes.iter().map(|n| n.phi).collect(),
        evals: nodes.iter().map(|n| n.eval).collect(),
        breaks,
    }
}

/// Adds power-graded nodes on the served side of every switch in the served
/// bit. There `V` behaves like a fractional power of the distance to the
/// cutoff, which a uniform cell cannot integrate to full order.
fn grade_onsets(nodes: Vec<Node>, span: f64, node_at: &(impl Fn(f64) -> Node + Sync)) -> Vec<Node> {
    let served = |n: &Node| n.eval.regime & 1 == 1;
    let mut wanted: Vec<f64> = Vec::new();
    for b in 0..nodes.len().saturating_sub(1) {
        let (lo, hi) = (&nodes[b], &nodes[b + 1]);
        if !lo.gap_after || served(lo) == served(hi) {
            continue;
        }
        let offsets = (1..=ONSET_NODES).map(|j| span * (f64::from(j) / f64::from(ONSET_NODES)).powi(ONSET_POWER));
        if served(hi) {
            // Stay inside the run of nodes sharing `hi`'s regime.
            let end = nodes[b + 1..]
                .iter()
                .position(|m| m.eval.regime != hi.eval.regime || m.gap_after)
                .map_or(nodes.len() - 1, |k| b + 1 + k);
            let limit = nodes[end].theta;
            wanted.extend(offsets.map(|d| hi.theta + d).filter(|&t| t < limit));
        } else {
            let start = nodes[..=b]
                .iter()
                .rposition(|m| m.eval.regime != lo.eval.regime || (m.gap_after && m.theta < lo.theta))
                .map_or(0, |k| k + 1);
            let limit = nodes[start].theta;
            wanted.extend(offsets.map(|d| lo.theta - d).filter(|&t| t > limit));
        }
    }
    if wanted.is_empty() {
        return nodes;
    }
    let extra: Vec<Node> = wanted.par_iter().map(|&t| node_at(t)).collect();
    let mut merged = nodes;
    merged.extend(extra);
    merged.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    merged.dedup_by(|a, b| a.theta == b.theta);
    merged
}

/// Bisects `(left, right)` down to adjacent floats on either side of the
/// regime change.
fn locate_switch(left: &Node, right: &Node, node_at: &impl Fn(f64) -> Node) -> (Node, Node) {
    let mut lo = *left;
    let mut hi = *right;
    for _ in 0..200 {
        let mid = 0.5 * (lo.theta + hi.theta);
        if mid <= lo.theta || mid >= hi.theta {
            break;
        }
        let m = node_at(mid);
        if m.eval.regime == left.eval.regime {
            lo = m;
        } else {
            hi = m;
        }
    }
    (lo, hi)
}

impl Assembled {
    pub fn into_solution(self, cfg: &ModelConfig, label: &str) -> MechanismSolution {
        let quality = self.evals.iter().map(|e| e.lambda).collect();
        let views_good = self.evals.iter().map(|e| e.v_good).collect();
        MechanismSolution::build(label, cfg, self.theta, self.phi, quality, views_good, self.breaks)
    }
}
