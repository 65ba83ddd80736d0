//! M-convex functions given by value oracles, with effective domain
//! `B(rho) ∩ Z^N` for a submodular `rho`.
//!
//! Projection onto the base polyhedron goes through submodular function
//! minimization, done here by exhaustive search over all subsets, so
//! everything in this module is limited to `n <= 16`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::ext::ExtInt;
use crate::greedy::{DirectionOracle, Exchange, ExchangeObjective};
use crate::instance::{Instance, IntSolution};
use crate::oracle::{enumerate_feasible, EnumerationBudget};

/// Subsets of `{0, .., n-1}` as bitmasks.
pub type Mask = u32;

pub const MAX_ELEMENTS: usize = 16;

pub fn full_mask(n: usize) -> Mask {
    if n >= Mask::BITS as usize {
        Mask::MAX
    } else {
        (1 << n) - 1
    }
}

fn check_scale(n: usize) -> Result<()> {
    if n > MAX_ELEMENTS {
        Err(Error::Scale(format!(
            "exhaustive submodular minimization supports at most {MAX_ELEMENTS} elements, got {n}"
        )))
    } else {
        Ok(())
    }
}

/// A set function `rho: 2^N -> Z ∪ {+inf}` with `rho(∅) = 0` and `rho(N)` finite.
pub trait SubmodularOracle {
    fn n(&self) -> usize;
    fn rho(&self, set: Mask) -> ExtInt;
}

impl<T: SubmodularOracle + ?Sized> SubmodularOracle for &T {
    fn n(&self) -> usize {
        (**self).n()
    }

    fn rho(&self, set: Mask) -> ExtInt {
        (**self).rho(set)
    }
}

/// A set function stored as a table indexed by mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TableFunction {
    n: usize,
    values: Vec<ExtInt>,
}

impl TableFunction {
    pub fn new(n: usize, values: Vec<ExtInt>) -> Result<Self> {
        check_scale(n)?;
        if values.len() != 1 << n {
            return Err(Error::Input(format!(
                "a set function on {n} elements needs {} values, got {}",
                1usize << n,
                values.len()
            )));
        }
        if values[0] != ExtInt::ZERO {
            return Err(Error::Input(format!("rho(empty set) must be 0, got {}", values[0])));
        }
        if !values[full_mask(n) as usize].is_finite() {
            return Err(Error::Infeasible("rho(N) is not finite".into()));
        }
        if let Some(m) = values.iter().position(|&v| v == ExtInt::NegInf) {
            return Err(Error::Input(format!("rho({m:#b}) is -inf")));
        }
        Ok(TableFunction { n, values })
    }

    /// Tabulates any oracle.
    pub fn from_oracle(rho: &(impl SubmodularOracle + ?Sized)) -> Result<Self> {
        let n = rho.n();
        check_scale(n)?;
        TableFunction::new(n, (0..=full_mask(n)).map(|m| rho.rho(m)).collect())
    }

    pub fn values(&self) -> &[ExtInt] {
        &self.values
    }
}

impl SubmodularOracle for TableFunction {
    fn n(&self) -> usize {
        self.n
    }

    fn rho(&self, set: Mask) -> ExtInt {
        self.values[set as usize]
    }
}

/// A set function given by a closure.
pub struct FnOracle<F> {
    n: usize,
    f: F,
}

impl<F: Fn(Mask) -> ExtInt> FnOracle<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnOracle { n, f }
    }
}

impl<F: Fn(Mask) -> ExtInt> SubmodularOracle for FnOracle<F> {
    fn n(&self) -> usize {
        self.n
    }

    fn rho(&self, set: Mask) -> ExtInt {
        (self.f)(set)
    }
}

/// `rho(X) + shift(X)`.
fn shifted(rho: &(impl SubmodularOracle + ?Sized), shift: &[i64], set: Mask) -> Result<ExtInt> {
    let mut total = rho.rho(set);
    if total == ExtInt::NegInf {
        return Err(Error::Input(format!("rho({set:#b}) is -inf")));
    }
    let mut rest = set;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        total = total.checked_add(ExtInt::Finite(shift[i]))?;
        rest &= rest - 1;
    }
    Ok(total)
}

/// Lexicographic order on sets read as increasing element sequences.
pub fn lex_cmp(a: Mask, b: Mask) -> Ordering {
    let diff = a ^ b;
    if diff == 0 {
        return Ordering::Equal;
    }
    let low = diff & diff.wrapping_neg();
    let above = !(low | (low - 1));
    // the set holding the first differing element comes first, unless the
    // other set ends right there
    if a & low != 0 {
        if b & above != 0 {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    } else if a & above != 0 {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// Exact `min_X rho(X) + shift(X)` over all subsets, with the
/// lexicographically smallest minimizing set.
pub fn brute_sfm(rho: &(impl SubmodularOracle + ?Sized), shift: &[i64]) -> Result<(i64, Mask)> {
    let n = rho.n();
    check_scale(n)?;
    if shift.len() != n {
        return Err(Error::Input(format!(
            "shift has {} entries, expected {n}",
            shift.len()
        )));
    }
    let mut best = (shifted(rho, shift, 0)?, 0 as Mask);
    for set in 1..=full_mask(n) {
        let v = shifted(rho, shift, set)?;
        if v < best.0 || (v == best.0 && lex_cmp(set, best.1) == Ordering::Less) {
            best = (v, set);
        }
    }
    let value = best
        .0
        .finite()
        .ok_or_else(|| Error::Consistency("rho(empty set) + 0 is not finite".into()))?;
    Ok((value, best.1))
}

/// Checks `rho(X) + rho(Y) >= rho(X ∩ Y) + rho(X ∪ Y)` over all pairs.
pub fn is_submodular(rho: &(impl SubmodularOracle + ?Sized)) -> bool {
    let full = full_mask(rho.n());
    (0..=full).all(|a| {
        (a..=full).all(|b| {
            let lhs = rho.rho(a).checked_add(rho.rho(b));
            let rhs = rho.rho(a & b).checked_add(rho.rho(a | b));
            matches!((lhs, rhs), (Ok(l), Ok(r)) if l >= r)
        })
    })
}

/// Is `x` in `B(rho)`: `x(X) <= rho(X)` for all `X` and `x(N) = rho(N)`?
pub fn in_base(rho: &(impl SubmodularOracle + ?Sized), x: &[i64]) -> bool {
    let full = full_mask(rho.n());
    let sum = |set: Mask| -> i64 { (0..x.len()).filter(|&i| set >> i & 1 == 1).map(|i| x[i]).sum() };
    rho.rho(full) == ExtInt::Finite(sum(full)) && (0..full).all(|s| ExtInt::Finite(sum(s)) <= rho.rho(s))
}

/// `rho'(X) = rho(X) - target(X)`.
struct Translated<'a, R: ?Sized> {
    rho: &'a R,
    target: &'a [i64],
}

impl<R: SubmodularOracle + ?Sized> SubmodularOracle for Translated<'_, R> {
    fn n(&self) -> usize {
        self.rho.n()
    }

    fn rho(&self, set: Mask) -> ExtInt {
        let mut v = self.rho.rho(set);
        for (i, &t) in self.target.iter().enumerate() {
            if set >> i & 1 == 1 {
                v = v.checked_sub(ExtInt::Finite(t)).unwrap_or(v);
            }
        }
        v
    }
}

/// Result of projecting an integer target onto `B(rho) ∩ Z^N` in l1.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseProjection {
    pub point: IntSolution,
    pub distance: i64,
    /// `min_X rho'(X)` for the translated function `rho' = rho - target`.
    pub min_translated: i64,
    /// Greedy extreme point of the lower envelope, in translated coordinates.
    pub greedy_point: Vec<i64>,
}

impl BaseProjection {
    /// `rho'(N) - 2 min_X rho'(X)`, which equals the optimal distance.
    pub fn min_max_value(&self, rho: &(impl SubmodularOracle + ?Sized), target: &[i64]) -> Result<i64> {
        let full = full_mask(rho.n());
        let rho_n = rho.rho(full).finite().ok_or_else(|| Error::Infeasible("rho(N) is not finite".into()))?;
        Ok(rho_n - target.iter().sum::<i64>() - 2 * self.min_translated)
    }
}

/// `min_{Y ⊆ set} rho'(Y)` for the translated function, found by pricing
/// elements outside `set` out of the minimization.
pub fn lower_envelope(rho: &(impl SubmodularOracle + ?Sized), target: &[i64], set: Mask) -> Result<i64> {
    let translated = Translated { rho, target };
    let (mu, _) = brute_sfm(&translated, &vec![0; target.len()])?;
    envelope_with(&translated, mu, set)
}

fn envelope_with(translated: &(impl SubmodularOracle + ?Sized), mu: i64, set: Mask) -> Result<i64> {
    // rho' >= mu everywhere, so a penalty of 1 - mu on each outside element
    // makes any set leaving `set` positive while the empty set scores 0
    let penalty = 1 - mu;
    let shift: Vec<i64> = (0..translated.n())
        .map(|i| if set >> i & 1 == 1 { 0 } else { penalty })
        .collect();
    let (v, chosen) = brute_sfm(translated, &shift)?;
    debug_assert_eq!(chosen & !set, 0);
    Ok(v)
}

/// l1-nearest point of `B(rho) ∩ Z^N` to `target`.
///
/// Translate so the target is the origin, take the greedy extreme point
/// `x~` of `B(rho^0)` with `rho^0(X) = min_{Y ⊆ X} rho'(Y)`, raise it
/// coordinate by coordinate by the saturation capacity until it lies in
/// `B(rho')`, and translate back.
pub fn project_to_base(rho: &(impl SubmodularOracle + ?Sized), target: &[i64]) -> Result<BaseProjection> {
    let n = rho.n();
    check_scale(n)?;
    if target.len() != n {
        return Err(Error::Input(format!(
            "target has {} entries, expected {n}",
            target.len()
        )));
    }
    let full = full_mask(n);
    if !rho.rho(full).is_finite() {
        return Err(Error::Infeasible("rho(N) is not finite".into()));
    }
    let translated = Translated { rho, target };
    let (mu, _) = brute_sfm(&translated, &vec![0; n])?;

    let mut greedy = vec![0i64; n];
    let mut prev = 0i64;
    for (i, g) in greedy.iter_mut().enumerate() {
        let prefix = full_mask(i + 1);
        let cur = envelope_with(&translated, mu, prefix)?;
        *g = cur - prev;
        prev = cur;
    }

    let mut x = greedy.clone();
    for i in 0..n {
        // saturation capacity: min over X containing i of rho'(X) - x(X)
        let slack_n = translated
            .rho(full)
            .finite()
            .expect("rho(N) is finite")
            - x.iter().sum::<i64>();
        let force = slack_n + 1;
        let mut shift: Vec<i64> = x.iter().map(|&v| -v).collect();
        shift[i] -= force;
        let (v, _) = brute_sfm(&translated, &shift)?;
        let capacity = v + force;
        if capacity < 0 {
            return Err(Error::Infeasible(format!(
                "the base polyhedron is empty (negative capacity at element {i})"
            )));
        }
        x[i] += capacity;
    }

    let point: Vec<i64> = x.iter().zip(target).map(|(a, t)| a + t).collect();
    if !in_base(rho, &point) {
        return Err(Error::Infeasible(
            "the base polyhedron is empty or the set function is not submodular".into(),
        ));
    }
    let distance = point.iter().zip(target).map(|(a, t)| (a - t).abs()).sum();
    Ok(BaseProjection {
        point: IntSolution(point),
        distance,
        min_translated: mu,
        greedy_point: greedy,
    })
}

/// An M-convex function by value oracle together with the submodular
/// function describing its effective domain.
pub trait MConvexOracle: ExchangeObjective {
    fn domain(&self) -> &dyn SubmodularOracle;
}

/// A laminar instance seen only through its value oracle. The domain's
/// `rho(X) = max{x(X) : x feasible}` is tabulated by enumeration.
#[derive(Debug, Clone)]
pub struct LaminarMConvex<'a> {
    inst: &'a Instance,
    rho: TableFunction,
}

impl<'a> LaminarMConvex<'a> {
    pub fn new(inst: &'a Instance, budget: EnumerationBudget) -> Result<Self> {
        let n = inst.n();
        check_scale(n)?;
        let points = enumerate_feasible(inst, budget)?;
        if points.is_empty() {
            return Err(Error::Infeasible("the feasible region is empty".into()));
        }
        let values = (0..=full_mask(n))
            .map(|set| {
                let best = points
                    .iter()
                    .map(|x| (0..n).filter(|&i| set >> i & 1 == 1).map(|i| x[i]).sum::<i64>())
                    .max()
                    .expect("non-empty");
                ExtInt::Finite(best)
            })
            .collect();
        Ok(LaminarMConvex {
            inst,
            rho: TableFunction::new(n, values)?,
        })
    }

    pub fn rho(&self) -> &TableFunction {
        &self.rho
    }
}

impl ExchangeObjective for LaminarMConvex<'_> {
    fn dim(&self) -> usize {
        self.inst.n()
    }

    fn value(&self, x: &[i64]) -> Result<Option<f64>> {
        self.inst.value(x)
    }
}

impl MConvexOracle for LaminarMConvex<'_> {
    fn domain(&self) -> &dyn SubmodularOracle {
        &self.rho
    }
}

/// `rho(X) = min(u(X), R - l(N \ X))` for a box instance, from its leaf bounds.
pub fn box_rank(inst: &Instance) -> Result<TableFunction> {
    let n = inst.n();
    check_scale(n)?;
    let tree = inst.tree();
    let bounds: Vec<(ExtInt, ExtInt)> = (0..n)
        .map(|i| {
            let leaf = tree.node(tree.leaf_of(i));
            (leaf.lower, leaf.upper)
        })
        .collect();
    let full = full_mask(n);
    let mut values = Vec::with_capacity(1 << n);
    for set in 0..=full {
        let mut upper = ExtInt::ZERO;
        let mut outside_lower = ExtInt::ZERO;
        for (i, &(l, u)) in bounds.iter().enumerate() {
            if set >> i & 1 == 1 {
                upper = upper.checked_add(u)?;
            } else {
                outside_lower = outside_lower.checked_add(l)?;
            }
        }
        let rest = ExtInt::Finite(inst.total()).checked_sub(outside_lower)?;
        values.push(upper.min(rest));
    }
    if values[0] != ExtInt::ZERO || values[full as usize] != ExtInt::Finite(inst.total()) {
        return Err(Error::Infeasible("the box constraints admit no point".into()));
    }
    TableFunction::new(n, values)
}

/// Steepest exchange by evaluating `f(x - e_i + e_j)` for all `n(n-1)`
/// ordered pairs; ties go to the smallest `(i, j)`.
pub fn generic_steepest_direction<F>(f: &F, x: &[i64]) -> Result<Option<Exchange>>
where
    F: ExchangeObjective + ?Sized,
{
    crate::oracle::brute_steepest(f, x)
}

/// [`DirectionOracle`] over any [`ExchangeObjective`].
pub struct GenericOracle<'a, F: ?Sized> {
    f: &'a F,
}

impl<'a, F: ExchangeObjective + ?Sized> GenericOracle<'a, F> {
    pub fn new(f: &'a F) -> Self {
        GenericOracle { f }
    }
}

impl<F: ExchangeObjective + ?Sized> DirectionOracle for GenericOracle<'_, F> {
    fn steepest(&mut self, x: &IntSolution) -> Result<Option<Exchange>> {
        generic_steepest_direction(self.f, x)
    }
}
