//! Univariate convex functions attached to the nodes of a laminar tree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtInt;

/// A convex function of one integer argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// Identically zero.
    #[default]
    Zero,
    /// `a*z^2 + b*z + c` with `a >= 0`.
    Quadratic {
        a: f64,
        #[serde(default)]
        b: f64,
        #[serde(default)]
        c: f64,
    },
    /// `c / z` with `c > 0`, defined for `z >= 1`.
    Reciprocal { c: f64 },
    /// `|z - b|`.
    AbsDeviation { b: f64 },
    /// Linear interpolation through integer breakpoints `(z, value)` sorted by `z`.
    /// Defined on `[z_first, z_last]`.
    PiecewiseLinear { points: Vec<(i64, f64)> },
}

impl Objective {
    pub fn quadratic(a: f64, b: f64, c: f64) -> Self {
        Objective::Quadratic { a, b, c }
    }

    /// `(z - shift)^2`, expanded.
    pub fn squared_distance(shift: f64) -> Self {
        Objective::Quadratic {
            a: 1.0,
            b: -2.0 * shift,
            c: shift * shift,
        }
    }

    pub fn reciprocal(c: f64) -> Self {
        Objective::Reciprocal { c }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Objective::Zero)
    }

    /// Checks the parameters describe a convex function.
    pub fn validate(&self) -> std::result::Result<(), String> {
        match self {
            Objective::Zero => Ok(()),
            Objective::Quadratic { a, b, c } => {
                if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                    Err("quadratic coefficients must be finite".into())
                } else if *a < 0.0 {
                    Err(format!("quadratic with a = {a} is concave"))
                } else {
                    Ok(())
                }
            }
            Objective::Reciprocal { c } => {
                if c.is_finite() && *c > 0.0 {
                    Ok(())
                } else {
                    Err(format!("reciprocal needs c > 0, got {c}"))
                }
            }
            Objective::AbsDeviation { b } => {
                if b.is_finite() {
                    Ok(())
                } else {
                    Err("absolute deviation center must be finite".into())
                }
            }
            Objective::PiecewiseLinear { points } => {
                if points.is_empty() {
                    return Err("piecewise-linear objective needs at least one point".into());
                }
                if points.iter().any(|(_, v)| !v.is_finite()) {
                    return Err("piecewise-linear values must be finite".into());
                }
                let mut last_slope = f64::NEG_INFINITY;
                for w in points.windows(2) {
                    let (z0, v0) = w[0];
                    let (z1, v1) = w[1];
                    if z1 <= z0 {
                        return Err("breakpoints must be strictly increasing".into());
                    }
                    let slope = (v1 - v0) / (z1 - z0) as f64;
                    if slope < last_slope - 1e-12 {
                        return Err(format!("slopes decrease at breakpoint {z0}"));
                    }
                    last_slope = slope;
                }
                Ok(())
            }
        }
    }

    /// Closed integer interval on which the function is finite.
    pub fn domain(&self) -> (ExtInt, ExtInt) {
        match self {
            Objective::Reciprocal { .. } => (ExtInt::Finite(1), ExtInt::PosInf),
            Objective::PiecewiseLinear { points } => (
                ExtInt::Finite(points[0].0),
                ExtInt::Finite(points[points.len() - 1].0),
            ),
            _ => (ExtInt::NegInf, ExtInt::PosInf),
        }
    }

    /// Value at `z`, or `None` outside the domain.
    pub fn value(&self, z: i64) -> Option<f64> {
        match self {
            Objective::Zero => Some(0.0),
            Objective::Quadratic { a, b, c } => {
                if let Some(v) = self.exact_value(z) {
                    return Some(v as f64);
                }
                let zf = z as f64;
                Some((a * zf + b) * zf + c)
            }
            Objective::Reciprocal { c } => (z >= 1).then(|| c / z as f64),
            Objective::AbsDeviation { b } => Some((z as f64 - b).abs()),
            Objective::PiecewiseLinear { points } => {
                let idx = points.partition_point(|&(p, _)| p < z);
                if idx == points.len() {
                    return None;
                }
                let (z1, v1) = points[idx];
                if z1 == z {
                    return Some(v1);
                }
                if idx == 0 {
                    return None;
                }
                let (z0, v0) = points[idx - 1];
                let t = (z - z0) as f64 / (z1 - z0) as f64;
                Some(v0 + t * (v1 - v0))
            }
        }
    }

    /// Like [`Objective::value`] but reports the failing node.
    pub fn eval(&self, node: &str, z: i64) -> Result<f64> {
        self.value(z).ok_or_else(|| Error::Domain {
            node: node.to_string(),
            arg: z,
        })
    }

    /// Exact value for integer-coefficient quadratics (and the zero function).
    pub fn exact_value(&self, z: i64) -> Option<i128> {
        match *self {
            Objective::Zero => Some(0),
            Objective::Quadratic { a, b, c } => {
                let int = |v: f64| (v.fract() == 0.0 && v.abs() < 1e15).then_some(v as i128);
                let (a, b, c) = (int(a)?, int(b)?, int(c)?);
                let z = z as i128;
                Some((a * z + b) * z + c)
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn midpoint_convex(f: &Objective, range: std::ops::RangeInclusive<i64>) -> bool {
        range.into_iter().all(|z| match (f.value(z - 1), f.value(z), f.value(z + 1)) {
            (Some(l), Some(m), Some(r)) => l + r >= 2.0 * m - 1e-12,
            _ => true,
        })
    }

    #[test]
    fn kinds_evaluate() {
        assert_eq!(Objective::Zero.value(17), Some(0.0));
        assert_eq!(Objective::quadratic(1.0, -2.0, 1.0).value(4), Some(9.0));
        assert_eq!(Objective::reciprocal(3.0).value(2), Some(1.5));
        assert_eq!(Objective::reciprocal(3.0).value(0), None);
        assert_eq!(Objective::AbsDeviation { b: 2.5 }.value(1), Some(1.5));
        let pl = Objective::PiecewiseLinear {
            points: vec![(0, 4.0), (2, 0.0), (6, 8.0)],
        };
        assert_eq!(pl.value(1), Some(2.0));
        assert_eq!(pl.value(4), Some(4.0));
        assert_eq!(pl.value(6), Some(8.0));
        assert_eq!(pl.value(7), None);
        assert_eq!(pl.value(-1), None);
    }

    #[test]
    fn convex_on_domain() {
        let kinds = [
            Objective::quadratic(0.5, -3.0, 2.0),
            Objective::reciprocal(7.0),
            Objective::AbsDeviation { b: -1.0 },
            Objective::PiecewiseLinear {
                points: vec![(-3, 5.0), (0, 1.0), (1, 1.0), (4, 10.0)],
            },
        ];
        for f in &kinds {
            assert!(f.validate().is_ok());
            assert!(midpoint_convex(f, -10..=10), "{f:?}");
        }
    }

    #[test]
    fn validation_rejects_nonconvex() {
        assert!(Objective::quadratic(-1.0, 0.0, 0.0).validate().is_err());
        assert!(Objective::reciprocal(0.0).validate().is_err());
        let concave = Objective::PiecewiseLinear {
            points: vec![(0, 0.0), (1, 2.0), (2, 3.0)],
        };
        assert!(concave.validate().is_err());
    }

    #[test]
    fn integer_quadratic_is_exact() {
        let f = Objective::quadratic(3.0, -5.0, 7.0);
        assert_eq!(f.exact_value(1_000_000), Some(3 * 10i128.pow(12) - 5_000_000 + 7));
        assert_eq!(Objective::quadratic(0.5, 0.0, 0.0).exact_value(3), None);
    }

    #[test]
    fn json_tagging() {
        let f: Objective = serde_json::from_str(r#"{"kind":"reciprocal","c":2.0}"#).unwrap();
        assert_eq!(f, Objective::reciprocal(2.0));
        let g: Objective = serde_json::from_str(r#"{"kind":"quadratic","a":1}"#).unwrap();
        assert_eq!(g, Objective::quadratic(1.0, 0.0, 0.0));
        let z: Objective = serde_json::from_str(r#"{"kind":"zero"}"#).unwrap();
        assert!(z.is_zero());
    }
}
