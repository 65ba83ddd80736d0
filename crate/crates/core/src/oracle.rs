//! Exhaustive ground truth for small instances: the feasible set, the exact
//! minimizers, exact l1 projections and exact steepest exchanges.

use crate::error::{Error, Result};
use crate::ext::ExtInt;
use crate::general::{full_mask, Mask, SubmodularOracle, MAX_ELEMENTS};
use crate::greedy::{close, Exchange, ExchangeObjective};
use crate::instance::{Instance, IntSolution};
use crate::objective::Objective;

/// Refuse to enumerate more than this many feasible points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_points: usize,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_points: 1_000_000,
        }
    }
}

/// Per-element integer ranges implied by the bounds of every node and by
/// `x(N) = R`, tightened to a fixpoint.
pub fn effective_ranges(inst: &Instance) -> Result<Vec<(i64, i64)>> {
    let tree = inst.tree();
    let n = inst.n();
    let members: Vec<Vec<usize>> = (0..tree.len()).map(|k| tree.elements_of(k)).collect();
    let mut lo = vec![ExtInt::NegInf; n];
    let mut hi = vec![ExtInt::PosInf; n];
    for _round in 0..=2 * n + 2 {
        let mut changed = false;
        for (k, node) in tree.nodes().iter().enumerate() {
            for &i in &members[k] {
                let others = members[k].iter().filter(|&&j| j != i);
                // x_i <= u_Y - sum of the others' lower ends, when that is defined
                let rest = others.clone().try_fold(ExtInt::ZERO, |s, &j| s.checked_add(lo[j]));
                if let Ok(cap) = rest.and_then(|r| node.upper.checked_sub(r)) {
                    if cap < hi[i] {
                        hi[i] = cap;
                        changed = true;
                    }
                }
                let rest = others.clone().try_fold(ExtInt::ZERO, |s, &j| s.checked_add(hi[j]));
                if let Ok(floor) = rest.and_then(|r| node.lower.checked_sub(r)) {
                    if floor > lo[i] {
                        lo[i] = floor;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    (0..n)
        .map(|i| match (lo[i].finite(), hi[i].finite()) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Scale(format!("element {i} has an unbounded range"))),
        })
        .collect()
}

/// All feasible integer points in lexicographic order.
pub fn enumerate_feasible(inst: &Instance, budget: EnumerationBudget) -> Result<Vec<IntSolution>> {
    let n = inst.n();
    let ranges = effective_ranges(inst)?;
    if ranges.iter().any(|&(a, b)| a > b) {
        return Ok(Vec::new());
    }
    let tree = inst.tree();
    let members: Vec<Vec<usize>> = (0..tree.len()).map(|k| tree.elements_of(k)).collect();

    let mut search = Search {
        inst,
        ranges: &ranges,
        members: &members,
        budget,
        x: vec![0; n],
        out: Vec::new(),
    };
    search.descend(0)?;
    Ok(search.out)
}

struct Search<'a> {
    inst: &'a Instance,
    ranges: &'a [(i64, i64)],
    members: &'a [Vec<usize>],
    budget: EnumerationBudget,
    x: Vec<i64>,
    out: Vec<IntSolution>,
}

impl Search<'_> {
    fn descend(&mut self, i: usize) -> Result<()> {
        if i == self.x.len() {
            if self.inst.is_feasible(&self.x) {
                if self.out.len() >= self.budget.max_points {
                    return Err(Error::Scale(format!(
                        "more than {} feasible points",
                        self.budget.max_points
                    )));
                }
                self.out.push(IntSolution(self.x.clone()));
            }
            return Ok(());
        }
        let (a, b) = self.ranges[i];
        for v in a..=b {
            self.x[i] = v;
            if self.prefix_ok(i) {
                self.descend(i + 1)?;
            }
        }
        Ok(())
    }

    /// With `x_0..=x_i` fixed, can every node still meet its bounds?
    fn prefix_ok(&self, i: usize) -> bool {
        self.inst.tree().nodes().iter().enumerate().all(|(k, node)| {
            let (mut lo, mut hi) = (0i64, 0i64);
            for &e in &self.members[k] {
                if e <= i {
                    lo += self.x[e];
                    hi += self.x[e];
                } else {
                    lo += self.ranges[e].0;
                    hi += self.ranges[e].1;
                }
            }
            node.lower <= ExtInt::Finite(hi) && ExtInt::Finite(lo) <= node.upper
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteMinimum {
    /// Every feasible point within tolerance of the minimum, lexicographically.
    pub minimizers: Vec<IntSolution>,
    pub value: f64,
}

impl BruteMinimum {
    pub fn is_unique(&self) -> bool {
        self.minimizers.len() == 1
    }
}

pub fn brute_minimize(inst: &Instance, budget: EnumerationBudget) -> Result<BruteMinimum> {
    let points = enumerate_feasible(inst, budget)?;
    let values = points
        .iter()
        .map(|x| inst.evaluate(x))
        .collect::<Result<Vec<_>>>()?;
    let value = values
        .iter()
        .copied()
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Infeasible("the feasible region is empty".into()))?;
    let minimizers = points
        .into_iter()
        .zip(values)
        .filter(|&(_, v)| close(v, value))
        .map(|(x, _)| x)
        .collect();
    Ok(BruteMinimum { minimizers, value })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteProjection {
    pub distance: i64,
    pub argmins: Vec<IntSolution>,
}

/// Minimizes `||x - target||_1` over the feasible set.
pub fn brute_projection(
    inst: &Instance,
    target: &[i64],
    budget: EnumerationBudget,
) -> Result<BruteProjection> {
    if target.len() != inst.n() {
        return Err(Error::Input(format!(
            "target has {} entries, instance has {}",
            target.len(),
            inst.n()
        )));
    }
    let points = enumerate_feasible(inst, budget)?;
    let distance = points
        .iter()
        .map(|x| x.l1_distance(target))
        .min()
        .ok_or_else(|| Error::Infeasible("the feasible region is empty".into()))?;
    let argmins = points
        .into_iter()
        .filter(|x| x.l1_distance(target) == distance)
        .collect();
    Ok(BruteProjection { distance, argmins })
}

/// Best exchange by evaluating `f(x - e_i + e_j)` for every ordered pair
/// `i != j`; ties go to the smallest `(i, j)`. `None` if no neighbour is
/// feasible.
pub fn brute_steepest<F>(f: &F, x: &[i64]) -> Result<Option<Exchange>>
where
    F: ExchangeObjective + ?Sized,
{
    let base = f
        .value(x)?
        .ok_or_else(|| Error::Input("steepest exchange requested at an infeasible point".into()))?;
    let mut y = x.to_vec();
    let mut best: Option<Exchange> = None;
    for from in 0..x.len() {
        for to in 0..x.len() {
            if from == to {
                continue;
            }
            y[from] -= 1;
            y[to] += 1;
            let value = f.value(&y)?;
            y[from] += 1;
            y[to] -= 1;
            if let Some(v) = value {
                let delta = v - base;
                if best.is_none_or(|b| delta < b.delta) {
                    best = Some(Exchange { from, to, delta });
                }
            }
        }
    }
    Ok(best)
}

/// Pairwise search for laminar instances that prices each exchange along
/// the tree path between the two leaves instead of re-evaluating `f`.
/// Costs `O(n^2 * depth)` per call; meant for checking large runs.
pub fn brute_steepest_laminar(inst: &Instance, x: &[i64]) -> Result<Option<Exchange>> {
    let tree = inst.tree();
    if !inst.is_feasible(x) {
        return Err(Error::Input("steepest exchange requested at an infeasible point".into()));
    }
    let sums = tree.node_sums(x);
    // cost of one more / one fewer unit in x(Y), or None when a bound blocks it
    let mut more = vec![None; tree.len()];
    let mut fewer = vec![None; tree.len()];
    for (k, node) in tree.nodes().iter().enumerate() {
        let s = sums[k];
        let here = node.objective.eval(&node.id, s)?;
        if node.upper > ExtInt::Finite(s) {
            more[k] = Some(node.objective.eval(&node.id, s + 1)? - here);
        }
        if node.lower < ExtInt::Finite(s) {
            fewer[k] = Some(node.objective.eval(&node.id, s - 1)? - here);
        }
    }
    let depth = tree.depths();
    let parent = |k: usize| tree.node(k).parent.expect("non-root node");

    let mut best: Option<Exchange> = None;
    for from in 0..inst.n() {
        for to in 0..inst.n() {
            if from == to {
                continue;
            }
            let (mut a, mut b) = (tree.leaf_of(from), tree.leaf_of(to));
            let mut delta = Some(0.0);
            while a != b {
                if depth[a] >= depth[b] {
                    delta = delta.zip(fewer[a]).map(|(d, c)| d + c);
                    a = parent(a);
                } else {
                    delta = delta.zip(more[b]).map(|(d, c)| d + c);
                    b = parent(b);
                }
            }
            if let Some(delta) = delta {
                if best.is_none_or(|e| delta < e.delta) {
                    best = Some(Exchange { from, to, delta });
                }
            }
        }
    }
    Ok(best)
}

/// Certifies that `x` minimizes `||x - target||_1` over the feasible set:
/// that objective is M-convex, so it suffices that no exchange improves it.
pub fn projection_is_optimal(inst: &Instance, target: &[i64], x: &[i64]) -> Result<bool> {
    if !inst.is_feasible(x) {
        return Ok(false);
    }
    let mut specs = inst.tree().to_specs();
    for spec in &mut specs {
        spec.objective = match spec.elements.as_deref() {
            Some(&[e]) => Objective::AbsDeviation { b: target[e] as f64 },
            _ => Objective::Zero,
        };
    }
    let distance_instance = Instance::from_specs(inst.n(), inst.total(), &specs)?;
    Ok(match brute_steepest_laminar(&distance_instance, x)? {
        Some(step) => step.delta >= -0.5,
        None => true,
    })
}

/// Exact l1 projection onto `B(rho) ∩ Z^N` by depth-first search over the
/// box `rho(N) - rho(N - i) <= x_i <= rho({i})`, pruned by the prefix
/// constraints and by the best distance found so far. Returns the distance
/// and the lexicographically smallest nearest point.
pub fn brute_base_projection<R>(rho: &R, target: &[i64]) -> Result<(i64, IntSolution)>
where
    R: SubmodularOracle + ?Sized,
{
    let n = rho.n();
    if n > MAX_ELEMENTS || target.len() != n {
        return Err(Error::Scale(format!("base projection by search needs n <= {MAX_ELEMENTS}")));
    }
    let full = full_mask(n);
    let total = rho
        .rho(full)
        .finite()
        .ok_or_else(|| Error::Infeasible("rho(N) is not finite".into()))?;
    let mut ranges = Vec::with_capacity(n);
    for i in 0..n {
        let hi = rho.rho(1 << i).finite();
        let lo = rho.rho(full & !(1 << i)).finite().map(|r| total - r);
        match (lo, hi) {
            (Some(lo), Some(hi)) => ranges.push((lo, hi)),
            _ => return Err(Error::Scale(format!("element {i} has an unbounded range"))),
        }
    }
    let mut search = BaseSearch {
        rho,
        target,
        ranges: &ranges,
        total,
        x: vec![0; n],
        best: None,
    };
    search.descend(0, 0, 0);
    search
        .best
        .map(|(d, x)| (d, IntSolution(x)))
        .ok_or_else(|| Error::Infeasible("the base polyhedron has no integer point".into()))
}

struct BaseSearch<'a, R: ?Sized> {
    rho: &'a R,
    target: &'a [i64],
    ranges: &'a [(i64, i64)],
    total: i64,
    x: Vec<i64>,
    best: Option<(i64, Vec<i64>)>,
}

impl<R: SubmodularOracle + ?Sized> BaseSearch<'_, R> {
    fn descend(&mut self, i: usize, dist: i64, sum: i64) {
        let n = self.x.len();
        // every remaining coordinate costs at least its distance to its range
        let floor: i64 = (i..n)
            .map(|j| {
                let (lo, hi) = self.ranges[j];
                (lo - self.target[j]).max(self.target[j] - hi).max(0)
            })
            .sum();
        if self.best.as_ref().is_some_and(|(d, _)| dist + floor >= *d) {
            return;
        }
        if i == n {
            // points arrive in lexicographic order, so the first at a given
            // distance wins ties
            if sum == self.total {
                self.best = Some((dist, self.x.clone()));
            }
            return;
        }
        let rest_lo: i64 = self.ranges[i + 1..].iter().map(|r| r.0).sum();
        let rest_hi: i64 = self.ranges[i + 1..].iter().map(|r| r.1).sum();
        let (lo, hi) = self.ranges[i];
        let lo = lo.max(self.total - sum - rest_hi);
        let hi = hi.min(self.total - sum - rest_lo);
        for v in lo..=hi {
            self.x[i] = v;
            if self.prefix_ok(i) {
                self.descend(i + 1, dist + (v - self.target[i]).abs(), sum + v);
            }
        }
    }

    /// Every set `X` inside `{0..=i}` that contains `i` satisfies
    /// `rho(N) - rho(N - X) <= x(X) <= rho(X)`.
    fn prefix_ok(&self, i: usize) -> bool {
        let full = full_mask(self.x.len());
        let bit: Mask = 1 << i;
        (0..bit).all(|low| {
            let set = low | bit;
            let sum: i64 = (0..=i).filter(|&e| set >> e & 1 == 1).map(|e| self.x[e]).sum();
            let upper_ok = ExtInt::Finite(sum) <= self.rho.rho(set);
            let lower_ok = match self.rho.rho(full & !set) {
                ExtInt::Finite(r) => sum >= self.total - r,
                _ => true,
            };
            upper_ok && lower_ok
        })
    }
}
