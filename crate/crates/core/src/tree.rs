//! Laminar families stored as rooted trees.
//!
//! Every member `Y` of the family is a node; the children of `Y` are the
//! maximal members strictly contained in it, and the leaves are the
//! singletons `{i}`. Each node carries bounds `l_Y <= x(Y) <= u_Y` and a
//! univariate convex cost `f_Y(x(Y))`.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtInt;
use crate::objective::Objective;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub lower: ExtInt,
    pub upper: ExtInt,
    pub objective: Objective,
    /// Inserted by [`LaminarTree::binarize`]; unbounded with zero cost.
    pub synthetic: bool,
    /// Ground element of a leaf.
    pub element: Option<usize>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// One node as it appears in the JSON instance schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default)]
    pub elements: Option<Vec<usize>>,
    #[serde(default = "neg_inf")]
    pub l: ExtInt,
    #[serde(default = "pos_inf")]
    pub u: ExtInt,
    #[serde(default)]
    pub objective: Objective,
}

fn neg_inf() -> ExtInt {
    ExtInt::NegInf
}

fn pos_inf() -> ExtInt {
    ExtInt::PosInf
}

impl NodeSpec {
    pub fn leaf(id: impl Into<String>, parent: Option<&str>, element: usize) -> Self {
        NodeSpec {
            id: id.into(),
            parent: parent.map(str::to_string),
            elements: Some(vec![element]),
            l: ExtInt::NegInf,
            u: ExtInt::PosInf,
            objective: Objective::Zero,
        }
    }

    pub fn internal(id: impl Into<String>, parent: Option<&str>) -> Self {
        NodeSpec {
            id: id.into(),
            parent: parent.map(str::to_string),
            elements: None,
            l: ExtInt::NegInf,
            u: ExtInt::PosInf,
            objective: Objective::Zero,
        }
    }

    pub fn bounds(mut self, l: impl Into<ExtInt>, u: impl Into<ExtInt>) -> Self {
        self.l = l.into();
        self.u = u.into();
        self
    }

    pub fn cost(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaminarTree {
    nodes: Vec<Node>,
    root: usize,
    leaf_of: Vec<usize>,
    /// Children before parents.
    postorder: Vec<usize>,
}

fn structure(node: &str, reason: impl Into<String>) -> Error {
    Error::Structure {
        node: node.to_string(),
        reason: reason.into(),
    }
}

impl LaminarTree {
    /// Builds and validates a tree over the ground set `{0, .., n-1}`.
    pub fn from_specs(n: usize, specs: &[NodeSpec]) -> Result<LaminarTree> {
        if n == 0 {
            return Err(Error::Input("ground set must be non-empty".into()));
        }
        let mut index = HashMap::with_capacity(specs.len());
        for (k, s) in specs.iter().enumerate() {
            if index.insert(s.id.as_str(), k).is_some() {
                return Err(structure(&s.id, "duplicated node id"));
            }
        }

        let mut nodes: Vec<Node> = specs
            .iter()
            .map(|s| Node {
                id: s.id.clone(),
                parent: None,
                children: Vec::new(),
                lower: s.l,
                upper: s.u,
                objective: s.objective.clone(),
                synthetic: false,
                element: None,
            })
            .collect();

        let mut root = None;
        for (k, s) in specs.iter().enumerate() {
            match &s.parent {
                None => {
                    if root.replace(k).is_some() {
                        return Err(structure(&s.id, "more than one root"));
                    }
                }
                Some(p) => {
                    let &pk = index
                        .get(p.as_str())
                        .ok_or_else(|| structure(&s.id, format!("unknown parent `{p}`")))?;
                    if pk == k {
                        return Err(structure(&s.id, "node is its own parent"));
                    }
                    nodes[k].parent = Some(pk);
                    nodes[pk].children.push(k);
                }
            }
        }
        let root = root.ok_or_else(|| structure("<none>", "no root node"))?;

        let postorder = postorder_from(&nodes, root);
        if postorder.len() != nodes.len() {
            let reached: HashSet<usize> = postorder.iter().copied().collect();
            let bad = (0..nodes.len()).find(|k| !reached.contains(k)).unwrap();
            return Err(structure(&nodes[bad].id, "cycle or unreachable from the root"));
        }

        let mut leaf_of = vec![usize::MAX; n];
        let mut element_sets: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for &k in &postorder {
            let spec = &specs[k];
            let node = &nodes[k];
            if let Err(reason) = node.objective.validate() {
                return Err(structure(&node.id, reason));
            }
            if node.lower == ExtInt::PosInf || node.upper == ExtInt::NegInf {
                return Err(structure(&node.id, "bounds must be l < +inf and u > -inf"));
            }
            if k != root {
                if let (ExtInt::Finite(l), ExtInt::Finite(u)) = (node.lower, node.upper) {
                    if l > u {
                        return Err(structure(&node.id, format!("l = {l} exceeds u = {u}")));
                    }
                }
            }
            if node.is_leaf() {
                let el = match spec.elements.as_deref() {
                    Some([e]) => *e,
                    _ => return Err(structure(&node.id, "a leaf needs exactly one element")),
                };
                if el >= n {
                    return Err(structure(&node.id, format!("element {el} outside 0..{n}")));
                }
                if leaf_of[el] != usize::MAX {
                    return Err(structure(&node.id, format!("element {el} appears twice")));
                }
                leaf_of[el] = k;
                nodes[k].element = Some(el);
                element_sets[k] = vec![el];
            } else {
                if node.children.len() < 2 {
                    return Err(structure(
                        &node.id,
                        "an internal node needs at least two children (one child repeats its set)",
                    ));
                }
                let mut set: Vec<usize> = node
                    .children
                    .iter()
                    .flat_map(|&c| element_sets[c].iter().copied())
                    .collect();
                set.sort_unstable();
                if let Some(given) = &spec.elements {
                    let mut given = given.clone();
                    given.sort_unstable();
                    if given != set {
                        return Err(structure(
                            &node.id,
                            "listed elements differ from the union of its children",
                        ));
                    }
                }
                element_sets[k] = set;
            }
        }
        if let Some(missing) = leaf_of.iter().position(|&k| k == usize::MAX) {
            return Err(structure(
                &nodes[root].id,
                format!("element {missing} has no leaf"),
            ));
        }

        Ok(LaminarTree {
            nodes,
            root,
            leaf_of,
            postorder,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> &Node {
        &self.nodes[k]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn n(&self) -> usize {
        self.leaf_of.len()
    }

    pub fn leaf_of(&self, element: usize) -> usize {
        self.leaf_of[element]
    }

    pub fn postorder(&self) -> &[usize] {
        &self.postorder
    }

    pub(crate) fn set_root_bounds(&mut self, lower: ExtInt, upper: ExtInt) {
        let r = self.root;
        self.nodes[r].lower = lower;
        self.nodes[r].upper = upper;
    }

    pub fn is_binary(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| n.children.is_empty() || n.children.len() == 2)
    }

    /// Splits every node with more than two children as `{c1}` and a
    /// synthetic node holding `{c2, .., ck}`, recursively, left to right.
    ///
    /// Existing nodes keep their indices; synthetic nodes are appended.
    pub fn binarize(&self) -> LaminarTree {
        if self.is_binary() {
            return self.clone();
        }
        let mut nodes = self.nodes.clone();
        let mut taken: HashSet<String> = nodes.iter().map(|n| n.id.clone()).collect();
        for k in 0..self.nodes.len() {
            let children = self.nodes[k].children.clone();
            if children.len() <= 2 {
                continue;
            }
            let mut holder = k;
            let mut rest = &children[..];
            while rest.len() > 2 {
                let synth = nodes.len();
                let mut id = format!("{}+{}", self.nodes[k].id, nodes[rest[1]].id);
                while taken.contains(&id) {
                    id.push('\'');
                }
                taken.insert(id.clone());
                nodes.push(Node {
                    id,
                    parent: Some(holder),
                    children: Vec::new(),
                    lower: ExtInt::NegInf,
                    upper: ExtInt::PosInf,
                    objective: Objective::Zero,
                    synthetic: true,
                    element: None,
                });
                nodes[holder].children = vec![rest[0], synth];
                nodes[rest[0]].parent = Some(holder);
                holder = synth;
                rest = &rest[1..];
            }
            nodes[holder].children = rest.to_vec();
            for &c in rest {
                nodes[c].parent = Some(holder);
            }
        }
        let postorder = postorder_from(&nodes, self.root);
        LaminarTree {
            nodes,
            root: self.root,
            leaf_of: self.leaf_of.clone(),
            postorder,
        }
    }

    /// True when every constraint besides the root and the leaves is vacuous.
    pub fn is_box(&self) -> bool {
        self.nodes.iter().enumerate().all(|(k, n)| {
            k == self.root
                || n.is_leaf()
                || n.synthetic
                || (n.lower == ExtInt::NegInf && n.upper == ExtInt::PosInf && n.objective.is_zero())
        })
    }

    /// `x(Y)` for every node, indexed like [`LaminarTree::nodes`].
    pub fn node_sums(&self, x: &[i64]) -> Vec<i64> {
        let mut sums = vec![0i64; self.nodes.len()];
        for &k in &self.postorder {
            let node = &self.nodes[k];
            sums[k] = match node.element {
                Some(e) => x[e],
                None => node.children.iter().map(|&c| sums[c]).sum(),
            };
        }
        sums
    }

    /// Ground elements of the subtree under `k`, ascending.
    pub fn elements_of(&self, k: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![k];
        while let Some(v) = stack.pop() {
            match self.nodes[v].element {
                Some(e) => out.push(e),
                None => stack.extend(&self.nodes[v].children),
            }
        }
        out.sort_unstable();
        out
    }

    /// Depth of each node; the root has depth 0.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.nodes.len()];
        for &k in self.postorder.iter().rev() {
            if let Some(p) = self.nodes[k].parent {
                depth[k] = depth[p] + 1;
            }
        }
        depth
    }

    /// The schema form of the tree. Synthetic nodes are dropped and their
    /// children reattached to the nearest original ancestor.
    pub fn to_specs(&self) -> Vec<NodeSpec> {
        let original_parent = |mut k: usize| -> Option<usize> {
            loop {
                let p = self.nodes[k].parent?;
                if !self.nodes[p].synthetic {
                    return Some(p);
                }
                k = p;
            }
        };
        (0..self.nodes.len())
            .filter(|&k| !self.nodes[k].synthetic)
            .map(|k| {
                let n = &self.nodes[k];
                NodeSpec {
                    id: n.id.clone(),
                    parent: original_parent(k).map(|p| self.nodes[p].id.clone()),
                    elements: n.element.map(|e| vec![e]),
                    l: n.lower,
                    u: n.upper,
                    objective: n.objective.clone(),
                }
            })
            .collect()
    }
}

fn postorder_from(nodes: &[Node], root: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(nodes.len());
    let mut seen = vec![false; nodes.len()];
    let mut stack = vec![(root, false)];
    while let Some((k, expanded)) = stack.pop() {
        if expanded {
            order.push(k);
            continue;
        }
        if seen[k] {
            continue;
        }
        seen[k] = true;
        stack.push((k, true));
        for &c in nodes[k].children.iter().rev() {
            if !seen[c] {
                stack.push((c, false));
            }
        }
    }
    order
}
