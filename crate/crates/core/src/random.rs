//! Random small instances and set functions for cross-checking the solvers
//! against the brute-force oracles.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ext::ExtInt;
use crate::general::{full_mask, Mask, TableFunction};
use crate::instance::Instance;
use crate::objective::Objective;
use crate::tree::NodeSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Only the root above the leaves.
    Box,
    /// A chain `N ⊃ Y_1 ⊃ Y_2 ⊃ ...`, each level splitting off one leaf.
    Nested,
    /// Any laminar family.
    Laminar,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Box, Shape::Nested, Shape::Laminar];
}

#[derive(Debug, Clone, Copy)]
pub struct RandomConfig {
    pub shape: Shape,
    pub max_n: usize,
    pub max_total: i64,
    /// Allow objectives on internal nodes (ignored for boxes).
    pub internal_costs: bool,
}

impl RandomConfig {
    pub fn small(shape: Shape) -> Self {
        RandomConfig {
            shape,
            max_n: 6,
            max_total: 12,
            internal_costs: true,
        }
    }
}

/// `upper` bounds the argument; piecewise-linear costs are only drawn when
/// it is known, since their domain must cover the node's bounds.
fn random_objective<R: Rng>(rng: &mut R, scale: f64, upper: Option<i64>) -> Objective {
    match rng.random_range(0..10) {
        0 => Objective::Zero,
        1 => Objective::AbsDeviation {
            b: rng.random_range(-1.0..scale + 1.0),
        },
        2 if upper.is_some() => {
            // convex breakpoints at 0, 2, 4, .. with increasing slopes
            let mut slope = rng.random_range(-3.0..0.0);
            let mut value = 0.0;
            let mut points = vec![(-2i64, 0.0)];
            let mut z = -2i64;
            while z < upper.unwrap_or(0) {
                value += 2.0 * slope;
                z += 2;
                points.push((z, value));
                slope += rng.random_range(0.1..2.0);
            }
            Objective::PiecewiseLinear { points }
        }
        _ => {
            let a = rng.random_range(0.2..3.0);
            let center = rng.random_range(-1.0..scale + 1.0);
            Objective::quadratic(a, -2.0 * a * center, rng.random_range(-2.0..2.0))
        }
    }
}

fn leaf_bounds<R: Rng>(rng: &mut R, total: i64) -> (i64, i64) {
    let l = rng.random_range(-1..=1).max(0) * rng.random_range(0..=2);
    let u = l + rng.random_range(0..=total.max(1) + 1);
    (l, u)
}

/// A random instance over elements `0..n`; the region may be empty.
pub fn random_instance<R: Rng>(rng: &mut R, cfg: &RandomConfig) -> Result<Instance> {
    let n = rng.random_range(1..=cfg.max_n.max(1));
    let total = rng.random_range(0..=cfg.max_total);
    let scale = total.max(1) as f64;

    let mut specs = Vec::new();
    let mut next = 0usize;
    let mut elements: Vec<usize> = (0..n).collect();
    elements.shuffle(rng);

    let mut counter = |prefix: &str| {
        next += 1;
        format!("{prefix}{next}")
    };

    match cfg.shape {
        Shape::Box => {
            specs.push(NodeSpec::internal("root", None));
            if n == 1 {
                specs[0] = NodeSpec::leaf("root", None, 0).cost(random_objective(rng, scale, Some(total)));
            } else {
                for &e in &elements {
                    let (l, u) = leaf_bounds(rng, total);
                    specs.push(
                        NodeSpec::leaf(counter("x"), Some("root"), e)
                            .bounds(l, u)
                            .cost(random_objective(rng, scale, Some(u))),
                    );
                }
            }
        }
        Shape::Nested | Shape::Laminar => {
            let root = "root".to_string();
            build_subtree(rng, cfg, total, scale, &elements, None, root, &mut specs, &mut counter);
        }
    }
    Instance::from_specs(n, total, &specs)
}

#[allow(clippy::too_many_arguments)]
fn build_subtree<R: Rng>(
    rng: &mut R,
    cfg: &RandomConfig,
    total: i64,
    scale: f64,
    elements: &[usize],
    parent: Option<&str>,
    id: String,
    specs: &mut Vec<NodeSpec>,
    counter: &mut impl FnMut(&str) -> String,
) {
    if elements.len() == 1 {
        let (l, u) = leaf_bounds(rng, total);
        specs.push(
            NodeSpec::leaf(id, parent, elements[0])
                .bounds(l, u)
                .cost(random_objective(rng, scale, Some(u))),
        );
        return;
    }
    let mut node = NodeSpec::internal(id.clone(), parent);
    if parent.is_some() {
        let mut upper = None;
        if rng.random_bool(0.7) {
            let k = elements.len() as i64;
            let l = rng.random_range(0..=k);
            let u = l + rng.random_range(0..=total.max(1));
            node = node.bounds(l, u);
            upper = Some(u);
        }
        if cfg.internal_costs && rng.random_bool(0.5) {
            node = node.cost(random_objective(rng, scale, upper));
        }
    } else if cfg.internal_costs && rng.random_bool(0.3) {
        node = node.cost(random_objective(rng, scale, Some(total)));
    }
    specs.push(node);

    let parts: Vec<&[usize]> = match cfg.shape {
        Shape::Nested => vec![&elements[..1], &elements[1..]],
        _ => {
            let k = rng.random_range(2..=elements.len().min(3));
            let mut cuts: Vec<usize> = (1..elements.len()).collect();
            cuts.shuffle(rng);
            let mut cuts = cuts[..k - 1].to_vec();
            cuts.sort_unstable();
            let mut parts = Vec::new();
            let mut start = 0;
            for c in cuts.into_iter().chain([elements.len()]) {
                parts.push(&elements[start..c]);
                start = c;
            }
            parts
        }
    };
    for part in parts {
        let child = if part.len() == 1 { counter("x") } else { counter("Y") };
        build_subtree(rng, cfg, total, scale, part, Some(&id), child, specs, counter);
    }
}

/// A random integer submodular function with `rho(∅) = 0`: a modular part
/// plus non-negative combinations of truncated cardinalities and weighted
/// coverage functions.
pub fn random_submodular<R: Rng>(rng: &mut R, n: usize) -> Result<TableFunction> {
    let full = full_mask(n);
    let modular: Vec<i64> = (0..n).map(|_| rng.random_range(-3..=3)).collect();
    let mut terms: Vec<Box<dyn Fn(Mask) -> i64>> = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let support: Mask = rng.random_range(0..=full);
        let cap = rng.random_range(1..=3);
        let weight = rng.random_range(1..=3);
        terms.push(Box::new(move |m: Mask| weight * i64::from((m & support).count_ones()).min(cap)));
    }
    for _ in 0..rng.random_range(0..=2) {
        // element i covers the items in covers[i]
        let covers: Vec<u8> = (0..n).map(|_| rng.random_range(0..=u8::MAX)).collect();
        let weights: Vec<i64> = (0..8).map(|_| rng.random_range(0..=2)).collect();
        terms.push(Box::new(move |m: Mask| {
            let covered = (0..covers.len())
                .filter(|&i| m >> i & 1 == 1)
                .fold(0u8, |acc, i| acc | covers[i]);
            (0..8).filter(|&b| covered >> b & 1 == 1).map(|b| weights[b]).sum()
        }));
    }
    let values = (0..=full)
        .map(|m| {
            let linear: i64 = (0..n).filter(|&i| m >> i & 1 == 1).map(|i| modular[i]).sum();
            ExtInt::Finite(linear + terms.iter().map(|t| t(m)).sum::<i64>())
        })
        .collect();
    TableFunction::new(n, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::general::is_submodular;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_are_built() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for shape in Shape::ALL {
            for _ in 0..200 {
                let inst = random_instance(&mut rng, &RandomConfig::small(shape)).unwrap();
                assert!(inst.n() >= 1 && inst.n() <= 6);
                if shape == Shape::Box {
                    assert!(inst.is_box());
                }
            }
        }
    }

    #[test]
    fn generated_functions_are_submodular() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=6 {
            for _ in 0..20 {
                let rho = random_submodular(&mut rng, n).unwrap();
                assert!(is_submodular(&rho));
            }
        }
    }
}
