//! Steepest exchange for box constraints in `O(log n)` per step.
//!
//! With only `l_k <= x_k <= u_k` and `x(N) = R`, the change of an exchange
//! splits into `D-_i + D+_j` where `D-_k = f_k(x_k - 1) - f_k(x_k)` and
//! `D+_k = f_k(x_k + 1) - f_k(x_k)` (`+inf` at a bound). Keeping both in
//! indexed min-heaps makes the best pair a pair of heap tops.

use crate::error::{Error, Result};
use crate::ext::ExtInt;
use crate::greedy::{DirectionOracle, Exchange};
use crate::heap::IndexedMinHeap;
use crate::instance::{Instance, IntSolution};
use crate::objective::Objective;

/// Largest sift counts observed, in heap levels moved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SiftStats {
    pub queries: u64,
    pub updates: u64,
    pub max_per_query: u64,
    pub max_per_update: u64,
}

#[derive(Debug, Clone)]
pub struct BoxOracle<'a> {
    inst: &'a Instance,
    x: Vec<i64>,
    minus: IndexedMinHeap,
    plus: IndexedMinHeap,
    /// Recompute every key after each update and compare.
    pub verify: bool,
    stats: SiftStats,
}

struct Leaf<'t> {
    id: &'t str,
    lower: ExtInt,
    upper: ExtInt,
    objective: &'t Objective,
}

impl<'a> BoxOracle<'a> {
    /// Builds both heaps in `O(n)`.
    pub fn new(inst: &'a Instance, start: &[i64]) -> Result<Self> {
        if !inst.is_box() {
            return Err(Error::Input(
                "the heap oracle needs box constraints only; use the dp oracle".into(),
            ));
        }
        if !inst.is_feasible(start) {
            return Err(Error::Input("start point is infeasible".into()));
        }
        let mut minus = Vec::with_capacity(inst.n());
        let mut plus = Vec::with_capacity(inst.n());
        for (k, &v) in start.iter().enumerate() {
            let (dm, dp) = Self::deltas(inst, k, v)?;
            minus.push(dm);
            plus.push(dp);
        }
        Ok(BoxOracle {
            inst,
            x: start.to_vec(),
            minus: IndexedMinHeap::new(minus),
            plus: IndexedMinHeap::new(plus),
            verify: false,
            stats: SiftStats::default(),
        })
    }

    fn leaf(inst: &Instance, k: usize) -> Leaf<'_> {
        let node = inst.tree().node(inst.tree().leaf_of(k));
        Leaf {
            id: &node.id,
            lower: node.lower,
            upper: node.upper,
            objective: &node.objective,
        }
    }

    /// `(D-_k, D+_k)` at `x_k = v`.
    fn deltas(inst: &Instance, k: usize, v: i64) -> Result<(f64, f64)> {
        let leaf = Self::leaf(inst, k);
        let here = leaf.objective.eval(leaf.id, v)?;
        let minus = if leaf.lower < ExtInt::Finite(v) {
            leaf.objective.eval(leaf.id, v - 1)? - here
        } else {
            f64::INFINITY
        };
        let plus = if leaf.upper > ExtInt::Finite(v) {
            leaf.objective.eval(leaf.id, v + 1)? - here
        } else {
            f64::INFINITY
        };
        Ok((minus, plus))
    }

    pub fn keys(&self, k: usize) -> (f64, f64) {
        (self.minus.key(k), self.plus.key(k))
    }

    pub fn point(&self) -> &[i64] {
        &self.x
    }

    pub fn stats(&self) -> SiftStats {
        self.stats
    }

    /// Best pair from the heap tops. When both tops are the same element,
    /// one side falls back to its heap's runner-up.
    pub fn best_direction(&mut self) -> Option<Exchange> {
        self.stats.queries += 1;
        let (i1, dm1) = self.minus.peek()?;
        let (j1, dp1) = self.plus.peek()?;
        let sifts = self.minus.take_sifts() + self.plus.take_sifts();
        self.stats.max_per_query = self.stats.max_per_query.max(sifts);
        if !dm1.is_finite() || !dp1.is_finite() {
            return None;
        }
        if i1 != j1 {
            return Some(Exchange {
                from: i1,
                to: j1,
                delta: dm1 + dp1,
            });
        }
        let keep_from = self
            .plus
            .second()
            .filter(|(_, d)| d.is_finite())
            .map(|(j2, dp2)| (dm1 + dp2, i1, j2));
        let keep_to = self
            .minus
            .second()
            .filter(|(_, d)| d.is_finite())
            .map(|(i2, dm2)| (dm2 + dp1, i2, j1));
        let best = match (keep_from, keep_to) {
            (Some(a), Some(b)) => {
                if (b.0, b.1, b.2) < (a.0, a.1, a.2) {
                    b
                } else {
                    a
                }
            }
            (a, b) => a.or(b)?,
        };
        Some(Exchange {
            from: best.1,
            to: best.2,
            delta: best.0,
        })
    }

    /// Applies `x <- x - e_i + e_j` and refreshes the four affected keys.
    pub fn apply_update(&mut self, i: usize, j: usize) -> Result<()> {
        if i == j || i >= self.x.len() || j >= self.x.len() {
            return Err(Error::Consistency(format!("invalid exchange {i} -> {j}")));
        }
        let (li, lj) = (Self::leaf(self.inst, i), Self::leaf(self.inst, j));
        if !(li.lower < ExtInt::Finite(self.x[i]) && lj.upper > ExtInt::Finite(self.x[j])) {
            return Err(Error::Consistency(format!(
                "exchange {i} -> {j} leaves the box"
            )));
        }
        self.x[i] -= 1;
        self.x[j] += 1;
        for k in [i, j] {
            let (dm, dp) = Self::deltas(self.inst, k, self.x[k])?;
            self.minus.change_key(k, dm);
            self.plus.change_key(k, dp);
        }
        let sifts = self.minus.take_sifts() + self.plus.take_sifts();
        self.stats.updates += 1;
        self.stats.max_per_update = self.stats.max_per_update.max(sifts);
        if self.verify {
            self.check_keys()?;
        }
        Ok(())
    }

    /// Compares every key with a from-scratch recomputation.
    pub fn check_keys(&self) -> Result<()> {
        if !(self.minus.is_consistent() && self.plus.is_consistent()) {
            return Err(Error::Consistency("heap order or index broken".into()));
        }
        for k in 0..self.x.len() {
            let fresh = Self::deltas(self.inst, k, self.x[k])?;
            if fresh != self.keys(k) {
                return Err(Error::Consistency(format!(
                    "stale keys for element {k}: {:?} vs {fresh:?}",
                    self.keys(k)
                )));
            }
        }
        Ok(())
    }
}

impl DirectionOracle for BoxOracle<'_> {
    fn steepest(&mut self, x: &IntSolution) -> Result<Option<Exchange>> {
        debug_assert_eq!(x.0, self.x);
        Ok(self.best_direction())
    }

    fn applied(&mut self, _x: &IntSolution, step: &Exchange) -> Result<()> {
        self.apply_update(step.from, step.to)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{build_exchange_tree, steepest_direction_dp};
    use crate::tree::NodeSpec;

    fn shifted_box() -> Instance {
        let mut specs = vec![NodeSpec::internal("root", None)];
        for (i, a) in [0.0, 0.0, 4.0].into_iter().enumerate() {
            specs.push(
                NodeSpec::leaf(format!("{}", i + 1), Some("root"), i)
                    .bounds(0, 4)
                    .cost(Objective::squared_distance(a)),
            );
        }
        Instance::from_specs(3, 4, &specs).unwrap()
    }

    #[test]
    fn single_element() {
        let specs = vec![NodeSpec::leaf("x", None, 0).cost(Objective::quadratic(1.0, 0.0, 0.0))];
        let inst = Instance::from_specs(1, 3, &specs).unwrap();
        let mut o = BoxOracle::new(&inst, &[3]).unwrap();
        assert_eq!(o.minus.len(), 1);
        assert!(o.best_direction().is_none());
    }

    #[test]
    fn symmetric_keys() {
        let mut specs = vec![NodeSpec::internal("root", None)];
        for i in 0..3 {
            specs.push(
                NodeSpec::leaf(format!("{i}"), Some("root"), i)
                    .cost(Objective::quadratic(1.0, 0.0, 0.0)),
            );
        }
        let inst = Instance::from_specs(3, 3, &specs).unwrap();
        let o = BoxOracle::new(&inst, &[1, 1, 1]).unwrap();
        for k in 0..3 {
            assert_eq!(o.keys(k), (-1.0, 3.0));
        }
    }

    #[test]
    fn running_example() {
        let inst = shifted_box();
        let mut o = BoxOracle::new(&inst, &[2, 2, 0]).unwrap();
        o.verify = true;
        assert_eq!(o.keys(0), (-3.0, 5.0));
        assert_eq!(o.keys(1), (-3.0, 5.0));
        assert_eq!(o.keys(2), (f64::INFINITY, -7.0));
        let step = o.best_direction().unwrap();
        assert_eq!((step.from, step.to, step.delta), (0, 2, -10.0));

        let ex = build_exchange_tree(&inst, &[2, 2, 0]).unwrap();
        let dp = steepest_direction_dp(&inst, &ex).unwrap();
        assert_eq!((dp.from, dp.to, dp.delta), (0, 2, -10.0));

        o.apply_update(0, 2).unwrap();
        assert_eq!(o.point(), &[1, 2, 1]);
        // f1(z) = z^2, f3(z) = (z - 4)^2
        assert_eq!(o.keys(0), (-1.0, 3.0));
        assert_eq!(o.keys(2), (16.0 - 9.0, 4.0 - 9.0));
        o.check_keys().unwrap();
    }

    #[test]
    fn bounds_saturate_keys() {
        let inst = shifted_box();
        let mut o = BoxOracle::new(&inst, &[1, 0, 3]).unwrap();
        o.apply_update(0, 2).unwrap();
        assert_eq!(o.keys(2).1, f64::INFINITY, "x3 reached u3 = 4");
        assert_eq!(o.keys(0).0, f64::INFINITY, "x1 reached l1 = 0");
        assert!(o.apply_update(0, 1).is_err());
    }

    #[test]
    fn all_at_lower_bounds() {
        let specs = vec![
            NodeSpec::internal("root", None),
            NodeSpec::leaf("a", Some("root"), 0).bounds(2, 9),
            NodeSpec::leaf("b", Some("root"), 1).bounds(3, 9),
        ];
        let inst = Instance::from_specs(2, 5, &specs).unwrap();
        let mut o = BoxOracle::new(&inst, &[2, 3]).unwrap();
        assert!(o.best_direction().is_none());
    }

    #[test]
    fn top_collision_uses_runner_up() {
        // element 0 is the cheapest to both shrink and grow
        let specs = vec![
            NodeSpec::internal("root", None),
            NodeSpec::leaf("a", Some("root"), 0).cost(Objective::AbsDeviation { b: 0.0 }),
            NodeSpec::leaf("b", Some("root"), 1).cost(Objective::quadratic(1.0, 0.0, 0.0)),
        ];
        let inst = Instance::from_specs(2, 0, &specs).unwrap();
        let mut o = BoxOracle::new(&inst, &[0, 0]).unwrap();
        // D-: (1, 1); D+: (1, 1); ties put element 0 on top of both heaps
        assert_eq!(o.minus.peek().unwrap().0, 0);
        assert_eq!(o.plus.peek().unwrap().0, 0);
        let step = o.best_direction().unwrap();
        let brute = [(0usize, 1usize), (1, 0)]
            .into_iter()
            .map(|(i, j)| {
                let x = IntSolution(vec![0, 0]).exchanged(i, j);
                (inst.evaluate(&x).unwrap(), i, j)
            })
            .min_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap();
        assert_eq!((step.delta, step.from, step.to), brute);
    }

    #[test]
    fn rejects_laminar() {
        let specs = vec![
            NodeSpec::internal("root", None),
            NodeSpec::internal("12", Some("root")).bounds(0, 3),
            NodeSpec::leaf("1", Some("12"), 0),
            NodeSpec::leaf("2", Some("12"), 1),
            NodeSpec::leaf("3", Some("root"), 2),
        ];
        let inst = Instance::from_specs(3, 3, &specs).unwrap();
        assert!(matches!(BoxOracle::new(&inst, &[1, 1, 1]), Err(Error::Input(_))));
    }
}
