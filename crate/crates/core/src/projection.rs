//! Nearest feasible point in l1 distance to a rounded prediction.
//!
//! Every subtree `Y` is summarized by the function
//! `g_Y(t) = min { sum_{i in Y} |x_i - target_i| : x(Y) = t, bounds below Y hold }`,
//! which is always `|t - b| + indicator[l, u](t)` up to an additive constant.
//! Convolving two such forms adds their triples, so one bottom-up pass builds
//! all of them and one top-down pass splits `x(N) = R` among the children.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::ExtInt;
use crate::instance::{Instance, IntSolution};

/// `|x - center| + indicator[lower, upper](x)`, additive constants dropped.
///
/// Invariant: `lower <= center <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GForm {
    pub lower: ExtInt,
    pub center: ExtInt,
    pub upper: ExtInt,
}

impl GForm {
    /// Builds a form, sliding `center` into `[lower, upper]`.
    /// Returns `None` for an empty interval.
    pub fn new(lower: ExtInt, center: ExtInt, upper: ExtInt) -> Option<GForm> {
        (lower <= upper).then(|| GForm {
            lower,
            center: ExtInt::median(lower, center, upper),
            upper,
        })
    }

    /// Infimal convolution; the triples add componentwise.
    pub fn convolve(&self, other: &GForm) -> Result<GForm> {
        Ok(GForm {
            lower: self.lower.checked_add(other.lower)?,
            center: self.center.checked_add(other.center)?,
            upper: self.upper.checked_add(other.upper)?,
        })
    }

    /// Restricts the domain to `[lo, hi]`; `None` when nothing is left.
    pub fn clamp(&self, lo: ExtInt, hi: ExtInt) -> Option<GForm> {
        GForm::new(self.lower.max(lo), self.center, self.upper.min(hi))
    }

    /// Value relative to the minimum (`None` outside the domain).
    pub fn value(&self, x: i64) -> Option<i64> {
        if !ExtInt::contains(self.lower, self.upper, x) {
            return None;
        }
        Some(match self.center {
            ExtInt::Finite(b) => (x - b).abs(),
            // center is infinite only when the interval is a half-line on that side
            _ => 0,
        })
    }
}

/// Rounds to the nearest integer, halves away from zero.
pub fn round_prediction(x_hat: &[f64]) -> Result<Vec<i64>> {
    x_hat
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            if v.is_finite() && v.abs() < 9.0e15 {
                Ok(v.round() as i64)
            } else {
                Err(Error::Input(format!("prediction entry {k} is {v}")))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub x: IntSolution,
    /// The rounded prediction the projection was taken from.
    pub rounded: Vec<i64>,
    /// `||x - rounded||_1`.
    pub distance: i64,
    /// Convolutions plus clamps performed.
    pub gform_ops: usize,
}

/// Rounds `x_hat` once and projects the result onto the feasible set.
pub fn project(inst: &Instance, x_hat: &[f64]) -> Result<Projection> {
    if x_hat.len() != inst.n() {
        return Err(Error::Input(format!(
            "prediction has {} entries, instance has {}",
            x_hat.len(),
            inst.n()
        )));
    }
    project_integer(inst, &round_prediction(x_hat)?)
}

/// Projects an integer target onto the feasible set of `inst`.
pub fn project_integer(inst: &Instance, target: &[i64]) -> Result<Projection> {
    let tree = inst.tree();
    debug_assert!(tree.is_binary());
    if target.len() != inst.n() {
        return Err(Error::Input("target length differs from n".into()));
    }
    let mut forms: Vec<Option<GForm>> = vec![None; tree.len()];
    let mut ops = 0usize;
    let mut collapsed: Option<usize> = None;

    for &k in tree.postorder() {
        let node = tree.node(k);
        let raw = match node.element {
            Some(e) => Some(GForm {
                lower: ExtInt::NegInf,
                center: ExtInt::Finite(target[e]),
                upper: ExtInt::PosInf,
            }),
            None => {
                let mut acc: Option<GForm> = None;
                let mut dead = false;
                for &c in &node.children {
                    let Some(g) = forms[c] else {
                        dead = true;
                        break;
                    };
                    acc = Some(match acc {
                        None => g,
                        Some(a) => {
                            ops += 1;
                            a.convolve(&g)?
                        }
                    });
                }
                if dead {
                    None
                } else {
                    acc
                }
            }
        };
        forms[k] = raw.and_then(|g| {
            ops += 1;
            g.clamp(node.lower, node.upper)
        });
        if raw.is_some() && forms[k].is_none() && collapsed.is_none() {
            collapsed = Some(k);
        }
    }

    let root = tree.root();
    if forms[root].is_none() {
        let at = collapsed.unwrap_or(root);
        return Err(Error::Infeasible(format!(
            "no feasible allocation: constraints collapse at node `{}`",
            tree.node(at).id
        )));
    }

    let mut value = vec![0i64; tree.len()];
    value[root] = inst.total();
    let mut x = vec![0i64; inst.n()];
    for &k in tree.postorder().iter().rev() {
        let node = tree.node(k);
        match (node.element, node.children.as_slice()) {
            (Some(e), _) => x[e] = value[k],
            (None, &[left, right]) => {
                let gl = forms[left].expect("child form exists below a feasible parent");
                let gr = forms[right].expect("child form exists below a feasible parent");
                let t = split(value[k], &gl, &gr);
                value[left] = t;
                value[right] = value[k] - t;
            }
            _ => unreachable!("instances are binarized"),
        }
    }

    let x = IntSolution(x);
    let distance = x.l1_distance(target);
    Ok(Projection {
        x,
        rounded: target.to_vec(),
        distance,
        gform_ops: ops,
    })
}

/// Smallest integer `t` minimizing `gl(t) + gr(total - t)`.
///
/// On the admissible interval `[lo, hi]` the objective is `|t - bl| + |t - c|`
/// with `c = total - br`, which is minimal on `[min(bl, c), max(bl, c)]`.
fn split(total: i64, gl: &GForm, gr: &GForm) -> i64 {
    let v = ExtInt::Finite(total);
    let lo = gl.lower.max(v.checked_sub(gr.upper).expect("finite minus bound"));
    let hi = gl.upper.min(v.checked_sub(gr.lower).expect("finite minus bound"));
    debug_assert!(lo <= hi, "parent value outside the convolved domain");
    let bl = gl.center;
    let c = v.checked_sub(gr.center).expect("finite minus center");
    let (flat_lo, flat_hi) = (bl.min(c), bl.max(c));
    let t = if hi < flat_lo {
        hi
    } else if lo > flat_hi {
        lo
    } else {
        lo.max(flat_lo)
    };
    t.finite().expect("split point is finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::ExtInt::{Finite, NegInf, PosInf};
    use crate::tree::NodeSpec;

    fn g(l: ExtInt, b: ExtInt, u: ExtInt) -> GForm {
        GForm::new(l, b, u).unwrap()
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(round_prediction(&[1.2, 2.7]).unwrap(), vec![1, 3]);
        assert_eq!(round_prediction(&[2.5, -2.5]).unwrap(), vec![3, -3]);
        assert_eq!(round_prediction(&[4.0, 0.0]).unwrap(), vec![4, 0]);
        assert!(round_prediction(&[f64::NAN]).is_err());
        assert!(round_prediction(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn convolution_adds_triples() {
        let a = g(Finite(0), Finite(1), Finite(2));
        let b = g(Finite(0), Finite(2), Finite(3));
        assert_eq!(a.convolve(&b).unwrap(), g(Finite(0), Finite(3), Finite(5)));

        let free = g(NegInf, Finite(0), PosInf);
        let fixed = g(Finite(5), Finite(5), Finite(5));
        assert_eq!(free.convolve(&fixed).unwrap(), g(NegInf, Finite(5), PosInf));
    }

    #[test]
    fn convolution_matches_inner_minimization() {
        let a = g(Finite(0), Finite(1), Finite(2));
        let b = g(Finite(0), Finite(2), Finite(3));
        let conv = a.convolve(&b).unwrap();
        for total in -3..=8 {
            let brute = (-10..=10)
                .filter_map(|x1| Some(a.value(x1)? + b.value(total - x1)?))
                .min();
            match brute {
                None => assert_eq!(conv.value(total), None, "total {total}"),
                Some(m) => {
                    // equal up to the additive constant, which is zero here
                    assert_eq!(conv.value(total), Some(m), "total {total}");
                }
            }
        }
        assert_eq!(conv.value(4), Some(1));
    }

    #[test]
    fn clamp_examples() {
        let f = g(Finite(0), Finite(4), Finite(8));
        assert_eq!(f.clamp(Finite(0), Finite(2)), Some(g(Finite(0), Finite(2), Finite(2))));
        let h = g(Finite(0), Finite(1), Finite(2));
        assert_eq!(h.clamp(Finite(-5), Finite(5)), Some(h));
        assert_eq!(h.clamp(Finite(3), Finite(5)), None);
    }

    fn box2() -> Instance {
        let specs = vec![
            NodeSpec::internal("root", None),
            NodeSpec::leaf("1", Some("root"), 0).bounds(0, 2),
            NodeSpec::leaf("2", Some("root"), 1).bounds(0, 2),
        ];
        Instance::from_specs(2, 3, &specs).unwrap()
    }

    #[test]
    fn feasible_target_is_kept() {
        let p = project(&box2(), &[1.0, 2.0]).unwrap();
        assert_eq!(p.x.0, vec![1, 2]);
        assert_eq!(p.distance, 0);
    }

    #[test]
    fn infeasible_target_moves_to_nearest() {
        let p = project(&box2(), &[3.0, 0.0]).unwrap();
        assert_eq!(p.x.0, vec![2, 1]);
        assert_eq!(p.distance, 2);
    }

    #[test]
    fn ties_go_to_the_smallest_left_value() {
        let specs = vec![
            NodeSpec::internal("root", None),
            NodeSpec::internal("12", Some("root")).bounds(NegInf, 2),
            NodeSpec::leaf("1", Some("12"), 0).bounds(0, 4),
            NodeSpec::leaf("2", Some("12"), 1).bounds(0, 4),
            NodeSpec::leaf("3", Some("root"), 2).bounds(0, 4),
        ];
        let inst = Instance::from_specs(3, 4, &specs).unwrap();
        let p = project(&inst, &[2.0, 2.0, 0.0]).unwrap();
        assert_eq!(p.x.0, vec![0, 2, 2]);
        assert_eq!(p.distance, 4);
        assert!(p.gform_ops <= 2 * inst.tree().len());
    }

    #[test]
    fn empty_region_is_reported() {
        let specs = vec![
            NodeSpec::internal("root", None),
            NodeSpec::leaf("1", Some("root"), 0).bounds(0, 2),
            NodeSpec::leaf("2", Some("root"), 1).bounds(0, 2),
        ];
        let inst = Instance::from_specs(2, 10, &specs).unwrap();
        let err = project(&inst, &[5.0, 5.0]).unwrap_err();
        assert!(matches!(err, Error::Infeasible(ref m) if m.contains("root")), "{err}");
    }

    #[test]
    fn unbounded_leaves() {
        let specs = vec![
            NodeSpec::internal("root", None),
            NodeSpec::leaf("1", Some("root"), 0),
            NodeSpec::leaf("2", Some("root"), 1).bounds(NegInf, 0),
            NodeSpec::leaf("3", Some("root"), 2).bounds(7, PosInf),
        ];
        let inst = Instance::from_specs(3, 5, &specs).unwrap();
        let p = project(&inst, &[0.0, 3.0, 0.0]).unwrap();
        assert!(inst.is_feasible(&p.x));
        // optimal distance 12 is attained for x1 in {-2, -1, 0}; the tie rule picks -2
        assert_eq!(p.x.0, vec![-2, 0, 7]);
        assert_eq!(p.distance, 12);
    }
}
