//! Steepest exchange on a laminar tree by dynamic programming.
//!
//! At a feasible `x`, orient the tree edges: `parent -> Y` exists when
//! `x(Y) < u_Y` and costs `f_Y(x(Y)+1) - f_Y(x(Y))`; `Y -> parent` exists
//! when `x(Y) > l_Y` and costs `f_Y(x(Y)-1) - f_Y(x(Y))`. The exchange
//! `x - e_i + e_j` is feasible iff there is a directed path from leaf `i` to
//! leaf `j`, and its length is the change in objective. Convexity of each
//! `f_Y` rules out negative cycles, so a single bottom-up pass finds the
//! shortest leaf-to-leaf path.

use crate::error::Result;
use crate::greedy::{DirectionOracle, Exchange};
use crate::instance::{Instance, IntSolution};

/// Oriented, weighted tree for the current point.
#[derive(Debug, Clone)]
pub struct ExchangeTree {
    /// `x(Y)` per node.
    pub sums: Vec<i64>,
    /// Weight of `parent -> Y`, if the edge exists.
    pub down: Vec<Option<f64>>,
    /// Weight of `Y -> parent`, if the edge exists.
    pub up: Vec<Option<f64>>,
}

pub fn build_exchange_tree(inst: &Instance, x: &[i64]) -> Result<ExchangeTree> {
    let tree = inst.tree();
    let sums = tree.node_sums(x);
    let mut down = vec![None; tree.len()];
    let mut up = vec![None; tree.len()];
    for (k, node) in tree.nodes().iter().enumerate() {
        if node.parent.is_none() {
            continue;
        }
        let s = sums[k];
        let here = if node.objective.is_zero() {
            0.0
        } else {
            node.objective.eval(&node.id, s)?
        };
        if node.upper > s.into() {
            down[k] = Some(if node.objective.is_zero() {
                0.0
            } else {
                node.objective.eval(&node.id, s + 1)? - here
            });
        }
        if node.lower < s.into() {
            up[k] = Some(if node.objective.is_zero() {
                0.0
            } else {
                node.objective.eval(&node.id, s - 1)? - here
            });
        }
        if let (Some(d), Some(u)) = (down[k], up[k]) {
            debug_assert!(
                d + u >= -1e-9 * d.abs().max(u.abs()).max(1.0),
                "negative cycle at node {}: {d} + {u}",
                node.id
            );
        }
    }
    Ok(ExchangeTree { sums, down, up })
}

#[derive(Debug, Clone, Copy)]
enum Tri {
    None,
    Within(usize),
    Across { up_child: usize, down_child: usize },
}

/// Shortest path lengths per node, with `f64::INFINITY` for "no path".
#[derive(Debug, Clone)]
pub struct DpTable {
    /// Shortest path from a leaf of the subtree up to the node.
    pub l_up: Vec<f64>,
    /// Shortest path from the node down to a leaf of the subtree.
    pub l_down: Vec<f64>,
    /// Shortest path between two distinct leaves of the subtree.
    pub l_tri: Vec<f64>,
    up_leaf: Vec<usize>,
    down_leaf: Vec<usize>,
    tri_pair: Vec<(usize, usize)>,
    up_via: Vec<usize>,
    down_via: Vec<usize>,
    tri_via: Vec<Tri>,
}

const NO_LEAF: usize = usize::MAX;

fn better(len: f64, key: (usize, usize), best_len: f64, best_key: (usize, usize)) -> bool {
    len < best_len || (len == best_len && len.is_finite() && key < best_key)
}

impl DpTable {
    pub fn compute(inst: &Instance, ex: &ExchangeTree) -> DpTable {
        let tree = inst.tree();
        let m = tree.len();
        let mut t = DpTable {
            l_up: vec![f64::INFINITY; m],
            l_down: vec![f64::INFINITY; m],
            l_tri: vec![f64::INFINITY; m],
            up_leaf: vec![NO_LEAF; m],
            down_leaf: vec![NO_LEAF; m],
            tri_pair: vec![(NO_LEAF, NO_LEAF); m],
            up_via: vec![NO_LEAF; m],
            down_via: vec![NO_LEAF; m],
            tri_via: vec![Tri::None; m],
        };
        for &k in tree.postorder() {
            let node = tree.node(k);
            if let Some(e) = node.element {
                t.l_up[k] = 0.0;
                t.l_down[k] = 0.0;
                t.up_leaf[k] = e;
                t.down_leaf[k] = e;
                continue;
            }
            for &c in &node.children {
                if let Some(w) = ex.up[c] {
                    let len = t.l_up[c] + w;
                    if better(len, (t.up_leaf[c], 0), t.l_up[k], (t.up_leaf[k], 0)) {
                        t.l_up[k] = len;
                        t.up_leaf[k] = t.up_leaf[c];
                        t.up_via[k] = c;
                    }
                }
                if let Some(w) = ex.down[c] {
                    let len = t.l_down[c] + w;
                    if better(len, (t.down_leaf[c], 0), t.l_down[k], (t.down_leaf[k], 0)) {
                        t.l_down[k] = len;
                        t.down_leaf[k] = t.down_leaf[c];
                        t.down_via[k] = c;
                    }
                }
                if better(t.l_tri[c], t.tri_pair[c], t.l_tri[k], t.tri_pair[k]) {
                    t.l_tri[k] = t.l_tri[c];
                    t.tri_pair[k] = t.tri_pair[c];
                    t.tri_via[k] = Tri::Within(c);
                }
            }
            // Paths through `k`: up out of one child, down into another.
            for &a in &node.children {
                let Some(wa) = ex.up[a] else { continue };
                for &b in &node.children {
                    if a == b {
                        continue;
                    }
                    let Some(wb) = ex.down[b] else { continue };
                    let len = (t.l_up[a] + wa) + (t.l_down[b] + wb);
                    let key = (t.up_leaf[a], t.down_leaf[b]);
                    if better(len, key, t.l_tri[k], t.tri_pair[k]) {
                        t.l_tri[k] = len;
                        t.tri_pair[k] = key;
                        t.tri_via[k] = Tri::Across {
                            up_child: a,
                            down_child: b,
                        };
                    }
                }
            }
        }
        t
    }

    /// Recovers the endpoints of the shortest leaf-to-leaf path under `k`
    /// by following the stored child choices.
    pub fn backtrack(&self, inst: &Instance, mut k: usize) -> Option<(usize, usize)> {
        let tree = inst.tree();
        loop {
            match self.tri_via[k] {
                Tri::None => return None,
                Tri::Within(c) => k = c,
                Tri::Across {
                    up_child,
                    down_child,
                } => {
                    let mut from = up_child;
                    while tree.node(from).element.is_none() {
                        from = self.up_via[from];
                    }
                    let mut to = down_child;
                    while tree.node(to).element.is_none() {
                        to = self.down_via[to];
                    }
                    let pair = (tree.node(from).element?, tree.node(to).element?);
                    debug_assert_eq!(pair, self.tri_pair[k]);
                    return Some(pair);
                }
            }
        }
    }
}

/// Steepest exchange at the point the tree was built for.
pub fn steepest_direction_dp(inst: &Instance, ex: &ExchangeTree) -> Option<Exchange> {
    let table = DpTable::compute(inst, ex);
    let root = inst.tree().root();
    let delta = table.l_tri[root];
    if !delta.is_finite() {
        return None;
    }
    let (from, to) = table.backtrack(inst, root)?;
    Some(Exchange { from, to, delta })
}

/// [`DirectionOracle`] that rebuilds the exchange tree at every step.
#[derive(Debug, Clone, Copy)]
pub struct DpOracle<'a> {
    inst: &'a Instance,
}

impl<'a> DpOracle<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        DpOracle { inst }
    }
}

impl DirectionOracle for DpOracle<'_> {
    fn steepest(&mut self, x: &IntSolution) -> Result<Option<Exchange>> {
        let ex = build_exchange_tree(self.inst, x)?;
        Ok(steepest_direction_dp(self.inst, &ex))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::ExtInt;
    use crate::objective::Objective;
    use crate::tree::NodeSpec;

    fn shifted_box() -> Instance {
        let a = [0.0, 0.0, 4.0];
        let mut specs = vec![NodeSpec::internal("root", None)];
        for (i, &ai) in a.iter().enumerate() {
            specs.push(
                NodeSpec::leaf(format!("{}", i + 1), Some("root"), i)
                    .bounds(0, 4)
                    .cost(Objective::squared_distance(ai)),
            );
        }
        Instance::from_specs(3, 4, &specs).unwrap()
    }

    fn brute(inst: &Instance, x: &IntSolution) -> Option<Exchange> {
        let base = inst.evaluate(x).unwrap();
        let mut best: Option<Exchange> = None;
        for i in 0..inst.n() {
            for j in 0..inst.n() {
                if i == j {
                    continue;
                }
                let y = x.exchanged(i, j);
                if let Some(v) = inst.value(&y).unwrap() {
                    let delta = v - base;
                    if best.is_none_or(|b| delta < b.delta - 1e-12) {
                        best = Some(Exchange { from: i, to: j, delta });
                    }
                }
            }
        }
        best
    }

    #[test]
    fn box_example() {
        let inst = shifted_box();
        let x = IntSolution(vec![2, 2, 0]);
        let ex = build_exchange_tree(&inst, &x).unwrap();
        let step = steepest_direction_dp(&inst, &ex).unwrap();
        assert_eq!((step.from, step.to), (0, 2));
        assert_eq!(step.delta, -10.0);
        assert_eq!(brute(&inst, &x).unwrap().delta, -10.0);
    }

    #[test]
    fn edges_follow_bounds() {
        let inst = shifted_box();
        let ex = build_exchange_tree(&inst, &[4, 0, 0]).unwrap();
        let (l0, l1) = (inst.tree().leaf_of(0), inst.tree().leaf_of(1));
        assert!(ex.down[l0].is_none(), "saturated leaf takes no more");
        assert!(ex.up[l0].is_some());
        assert!(ex.up[l1].is_none(), "leaf at its floor gives nothing");
        assert!(ex.down[l1].is_some());
        assert!(ex.up[inst.tree().root()].is_none());
    }

    #[test]
    fn free_tree_has_all_edges() {
        let specs = vec![
            NodeSpec::internal("root", None),
            NodeSpec::internal("12", Some("root")),
            NodeSpec::leaf("1", Some("12"), 0),
            NodeSpec::leaf("2", Some("12"), 1),
            NodeSpec::leaf("3", Some("root"), 2),
        ];
        let inst = Instance::from_specs(3, 0, &specs).unwrap();
        let ex = build_exchange_tree(&inst, &[0, 0, 0]).unwrap();
        for k in 0..inst.tree().len() {
            if k != inst.tree().root() {
                assert!(ex.up[k].is_some() && ex.down[k].is_some());
            }
        }
    }

    #[test]
    fn blocked_pair_gives_none() {
        let specs = vec![
            NodeSpec::internal("root", None),
            NodeSpec::leaf("1", Some("root"), 0).bounds(2, 2),
            NodeSpec::leaf("2", Some("root"), 1).bounds(0, 2),
        ];
        let inst = Instance::from_specs(2, 3, &specs).unwrap();
        let ex = build_exchange_tree(&inst, &[2, 1]).unwrap();
        assert!(steepest_direction_dp(&inst, &ex).is_none());
    }

    #[test]
    fn saturated_subtree_blocks_inflow() {
        let specs = vec![
            NodeSpec::internal("root", None),
            NodeSpec::internal("12", Some("root")).bounds(ExtInt::NegInf, 3),
            NodeSpec::leaf("1", Some("12"), 0).bounds(0, 5).cost(Objective::squared_distance(5.0)),
            NodeSpec::leaf("2", Some("12"), 1).bounds(0, 5).cost(Objective::squared_distance(5.0)),
            NodeSpec::leaf("3", Some("root"), 2).bounds(0, 5).cost(Objective::squared_distance(0.0)),
        ];
        let inst = Instance::from_specs(3, 6, &specs).unwrap();
        let x = IntSolution(vec![2, 1, 3]);
        let ex = build_exchange_tree(&inst, &x).unwrap();
        let step = steepest_direction_dp(&inst, &ex).unwrap();
        let expected = brute(&inst, &x).unwrap();
        assert_eq!((step.from, step.to), (expected.from, expected.to));
        assert!((step.delta - expected.delta).abs() < 1e-9);
        // 3 -> {1,2} is blocked, so the best move shuffles inside {1,2}
        assert_ne!(step.from, 2);
    }

    #[test]
    fn positive_minimum_is_reported() {
        // at the optimum every exchange costs something; the DP still finds the cheapest
        let inst = shifted_box();
        let x = IntSolution(vec![0, 0, 4]);
        let ex = build_exchange_tree(&inst, &x).unwrap();
        let step = steepest_direction_dp(&inst, &ex).unwrap();
        let expected = brute(&inst, &x).unwrap();
        assert!(step.delta > 0.0);
        assert_eq!(step.delta, expected.delta);
        assert_eq!((step.from, step.to), (expected.from, expected.to));
    }
}
