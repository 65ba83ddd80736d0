//! Problem instances, integer solutions, objective evaluation and feasibility.

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtInt;
use crate::tree::{LaminarTree, NodeSpec};

/// An integer point of `Z^N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntSolution(pub Vec<i64>);

impl IntSolution {
    pub fn total(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn l1_distance(&self, other: &[i64]) -> i64 {
        self.0.iter().zip(other).map(|(a, b)| (a - b).abs()).sum()
    }

    /// `x - e_from + e_to`.
    pub fn exchanged(&self, from: usize, to: usize) -> IntSolution {
        let mut y = self.clone();
        y.0[from] -= 1;
        y.0[to] += 1;
        y
    }
}

impl Deref for IntSolution {
    type Target = [i64];

    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl DerefMut for IntSolution {
    fn deref_mut(&mut self) -> &mut [i64] {
        &mut self.0
    }
}

impl From<Vec<i64>> for IntSolution {
    fn from(v: Vec<i64>) -> Self {
        IntSolution(v)
    }
}

impl fmt::Display for IntSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Outcome of a feasibility check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    /// Index of the first node (children before parents) whose bound fails.
    Violated(usize),
}

impl Feasibility {
    pub fn is_feasible(self) -> bool {
        self == Feasibility::Feasible
    }
}

/// `min sum_Y f_Y(x(Y))` subject to `l_Y <= x(Y) <= u_Y` and `x(N) = R`.
///
/// The tree is binarized on construction and the root bounds are
/// intersected with `[R, R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    tree: LaminarTree,
    total: i64,
}

impl Instance {
    pub fn new(tree: LaminarTree, total: i64) -> Result<Instance> {
        let mut tree = tree.binarize();
        let root = tree.node(tree.root());
        let lower = root.lower.max(ExtInt::Finite(total));
        let upper = root.upper.min(ExtInt::Finite(total));
        tree.set_root_bounds(lower, upper);
        for node in tree.nodes() {
            let (lo, hi) = node.objective.domain();
            if node.lower < lo || node.upper > hi {
                return Err(Error::Structure {
                    node: node.id.clone(),
                    reason: format!(
                        "bounds [{}, {}] leave the objective's domain [{lo}, {hi}]",
                        node.lower, node.upper
                    ),
                });
            }
        }
        Ok(Instance { tree, total })
    }

    pub fn from_specs(n: usize, total: i64, specs: &[NodeSpec]) -> Result<Instance> {
        Instance::new(LaminarTree::from_specs(n, specs)?, total)
    }

    pub fn tree(&self) -> &LaminarTree {
        &self.tree
    }

    pub fn n(&self) -> usize {
        self.tree.n()
    }

    /// The resource total `R`.
    pub fn total(&self) -> i64 {
        self.total
    }

    pub fn is_box(&self) -> bool {
        self.tree.is_box()
    }

    /// `sum_Y f_Y(x(Y))` over the non-synthetic nodes.
    ///
    /// Integer-coefficient quadratic terms are summed exactly and converted
    /// once at the end.
    pub fn evaluate(&self, x: &[i64]) -> Result<f64> {
        self.check_len(x)?;
        let sums = self.tree.node_sums(x);
        let mut exact: i128 = 0;
        let mut real = 0.0f64;
        for (k, node) in self.tree.nodes().iter().enumerate() {
            if node.synthetic || node.objective.is_zero() {
                continue;
            }
            match node.objective.exact_value(sums[k]) {
                Some(v) => exact += v,
                None => real += node.objective.eval(&node.id, sums[k])?,
            }
        }
        Ok(exact as f64 + real)
    }

    pub fn feasibility(&self, x: &[i64]) -> Feasibility {
        if x.len() != self.n() {
            return Feasibility::Violated(self.tree.root());
        }
        let sums = self.tree.node_sums(x);
        for &k in self.tree.postorder() {
            let node = self.tree.node(k);
            if !ExtInt::contains(node.lower, node.upper, sums[k]) {
                return Feasibility::Violated(k);
            }
        }
        Feasibility::Feasible
    }

    pub fn is_feasible(&self, x: &[i64]) -> bool {
        self.feasibility(x).is_feasible()
    }

    /// Objective value when `x` is feasible, `None` otherwise.
    pub fn value(&self, x: &[i64]) -> Result<Option<f64>> {
        if self.is_feasible(x) {
            self.evaluate(x).map(Some)
        } else {
            Ok(None)
        }
    }

    fn check_len(&self, x: &[i64]) -> Result<()> {
        if x.len() == self.n() {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "solution has {} entries, instance has {}",
                x.len(),
                self.n()
            )))
        }
    }

    pub fn to_file(&self) -> InstanceFile {
        let mut nodes = self.tree.to_specs();
        // The root is stored as [R, R] intersected with its declared bounds;
        // write it back as a free node so the file stays minimal.
        if let Some(root) = nodes.iter_mut().find(|s| s.parent.is_none()) {
            if root.l == ExtInt::Finite(self.total) && root.u == ExtInt::Finite(self.total) {
                root.l = ExtInt::NegInf;
                root.u = ExtInt::PosInf;
            }
        }
        InstanceFile {
            n: self.n(),
            total: self.total,
            nodes,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Instance> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        let file: InstanceFile = serde_json::from_str(&text)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        file.into_instance()
    }
}

/// The JSON instance schema:
/// `{"n": .., "R": .., "nodes": [{"id", "parent", "elements", "l", "u", "objective"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    #[serde(rename = "R")]
    pub total: i64,
    pub nodes: Vec<NodeSpec>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance> {
        Instance::from_specs(self.n, self.total, &self.nodes)
    }
}
