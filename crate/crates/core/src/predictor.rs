//! Learning warm-start predictions from past optimal solutions.
//!
//! Online subgradient descent on `V = {x in [0, R]^n : x(N) = R}` against
//! the losses `||x*_t - x||_1`; the prediction handed to the next instance
//! is the running average of the iterates (online-to-batch conversion).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A subgradient of `y -> ||x_star - y||_1` at `x_hat`; zero where they agree.
pub fn l1_subgradient(x_hat: &[f64], x_star: &[i64]) -> Vec<f64> {
    assert_eq!(x_hat.len(), x_star.len(), "length mismatch");
    x_hat
        .iter()
        .zip(x_star)
        .map(|(&h, &s)| {
            let d = h - s as f64;
            if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect()
}

pub fn l1_loss(x_hat: &[f64], x_star: &[i64]) -> f64 {
    x_hat
        .iter()
        .zip(x_star)
        .map(|(&h, &s)| (h - s as f64).abs())
        .sum()
}

/// Euclidean projection onto `{x >= 0 : x(N) = total}` by the sort-and-threshold
/// rule. The upper bound `x_k <= total` is implied.
pub fn project_onto_simplex(y: &[f64], total: f64) -> Vec<f64> {
    if y.is_empty() {
        return Vec::new();
    }
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        prefix += v;
        let t = (prefix - total) / (k + 1) as f64;
        if k == 0 || v - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Step size `0.01 * sqrt(R / n)`.
pub fn default_step_size(total: i64, n: usize) -> f64 {
    0.01 * (total as f64 / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    /// Current online iterate.
    pub current: Vec<f64>,
    /// Average of the iterates produced so far (the initial point until the first step).
    pub average: Vec<f64>,
    /// Number of steps taken.
    pub count: usize,
    pub step_size: f64,
    pub total: i64,
}

impl LearnerState {
    /// Starts from the uniform allocation `(R/n, .., R/n)`.
    pub fn new(total: i64, n: usize, step_size: Option<f64>) -> Result<Self> {
        if n == 0 || total < 0 {
            return Err(Error::Input(format!("learner needs n > 0 and R >= 0, got n={n} R={total}")));
        }
        let step_size = step_size.unwrap_or_else(|| default_step_size(total, n));
        if !(step_size.is_finite() && step_size > 0.0) {
            return Err(Error::Input(format!("step size must be positive, got {step_size}")));
        }
        let start = vec![total as f64 / n as f64; n];
        Ok(LearnerState {
            current: start.clone(),
            average: start,
            count: 0,
            step_size,
            total,
        })
    }

    pub fn n(&self) -> usize {
        self.current.len()
    }

    /// Prediction for the next instance.
    pub fn prediction(&self) -> &[f64] {
        &self.average
    }

    /// Feeds the optimum of the latest instance; returns the next prediction.
    pub fn step(&mut self, x_star: &[i64]) -> Result<&[f64]> {
        if x_star.len() != self.n() {
            return Err(Error::Input(format!(
                "solution has {} entries, learner has {}",
                x_star.len(),
                self.n()
            )));
        }
        let g = l1_subgradient(&self.current, x_star);
        let moved: Vec<f64> = self
            .current
            .iter()
            .zip(&g)
            .map(|(&c, &gk)| c - self.step_size * gk)
            .collect();
        self.current = project_onto_simplex(&moved, self.total as f64);
        self.count += 1;
        let w = 1.0 / self.count as f64;
        if self.count == 1 {
            self.average.clone_from(&self.current);
        } else {
            for (a, &c) in self.average.iter_mut().zip(&self.current) {
                *a += (c - *a) * w;
            }
        }
        Ok(&self.average)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_projection(y: &[f64], total: f64, steps: usize) -> Vec<f64> {
        // dense search over the simplex for n = 2 or 3
        let h = total / steps as f64;
        let mut best = (f64::INFINITY, Vec::new());
        let mut consider = |x: Vec<f64>| {
            let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
            if d < best.0 {
                best = (d, x);
            }
        };
        match y.len() {
            2 => (0..=steps).for_each(|a| consider(vec![a as f64 * h, total - a as f64 * h])),
            3 => {
                for a in 0..=steps {
                    for b in 0..=steps - a {
                        let (xa, xb) = (a as f64 * h, b as f64 * h);
                        consider(vec![xa, xb, total - xa - xb]);
                    }
                }
            }
            _ => unreachable!(),
        }
        best.1
    }

    #[test]
    fn subgradient_examples() {
        assert_eq!(l1_subgradient(&[2.0, 1.0], &[1, 2]), vec![1.0, -1.0]);
        assert_eq!(l1_subgradient(&[1.0, 2.0], &[1, 2]), vec![0.0, 0.0]);
    }

    #[test]
    fn subgradient_inequality() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let x_star = [3i64, -1, 4, 0];
        let x_hat = [2.5, -1.0, 6.0, 0.25];
        let g = l1_subgradient(&x_hat, &x_star);
        let base = l1_loss(&x_hat, &x_star);
        for _ in 0..100 {
            let y: Vec<f64> = (0..4).map(|_| rng.random_range(-10.0..10.0)).collect();
            let lin: f64 = g.iter().zip(y.iter().zip(&x_hat)).map(|(g, (y, h))| g * (y - h)).sum();
            assert!(l1_loss(&y, &x_star) >= base + lin - 1e-12);
        }
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(project_onto_simplex(&[4.0, 1.0], 3.0), vec![3.0, 0.0]);
        assert_eq!(project_onto_simplex(&[1.0, 2.0], 3.0), vec![1.0, 2.0]);
        assert_eq!(project_onto_simplex(&[-5.0, -5.0], 3.0), vec![1.5, 1.5]);
        assert_eq!(project_onto_simplex(&[13.4], 0.0), vec![0.0]);
        assert_eq!(project_onto_simplex(&[2.0, -1.0], 0.0), vec![0.0, 0.0]);
        let grid = grid_projection(&[4.0, 1.0], 3.0, 3000);
        assert!((grid[0] - 3.0).abs() < 1e-9 && grid[1].abs() < 1e-9);
    }

    #[test]
    fn simplex_matches_grid_search() {
        let cases: [(&[f64], f64); 5] = [
            (&[0.3, 0.9], 1.0),
            (&[-2.0, 7.0], 4.0),
            (&[1.0, 1.0, 1.0], 6.0),
            (&[5.0, -1.0, 2.5], 3.0),
            (&[0.2, 0.1, -0.4], 2.0),
        ];
        for (y, total) in cases {
            let p = project_onto_simplex(y, total);
            let g = grid_projection(y, total, 600);
            let dist: f64 = p.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            // grid spacing is total/600
            assert!(dist <= 2.0 * total / 600.0, "{y:?}: {p:?} vs {g:?}");
            assert!((p.iter().sum::<f64>() - total).abs() < 1e-9);
        }
    }

    #[test]
    fn fixed_point_does_not_move() {
        let mut s = LearnerState::new(12, 3, None).unwrap();
        let p = s.step(&[4, 4, 4]).unwrap().to_vec();
        assert_eq!(p, vec![4.0, 4.0, 4.0]);
    }

    #[test]
    fn step_size_at_experiment_scale() {
        assert!((default_step_size(12800, 128) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn iterates_stay_in_v() {
        let mut s = LearnerState::new(20, 4, Some(0.7)).unwrap();
        for t in 0..50 {
            let star = [t % 7, 20 - t % 7, 0, 0];
            let p = s.step(&star).unwrap();
            assert!((p.iter().sum::<f64>() - 20.0).abs() < 1e-6);
            assert!(p.iter().all(|&v| (-1e-9..=20.0 + 1e-9).contains(&v)));
        }
    }

    #[test]
    fn average_converges_on_constant_stream() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (n, total) = (6usize, 60i64);
        // random integer point of V
        let mut v = vec![0i64; n];
        for _ in 0..total {
            v[rng.random_range(0..n)] += 1;
        }
        let mut s = LearnerState::new(total, n, Some(0.5)).unwrap();
        let mut losses = Vec::new();
        for _ in 0..500 {
            let p = s.step(&v).unwrap();
            losses.push(l1_loss(p, &v));
        }
        let mean = |w: &[f64]| w.iter().sum::<f64>() / w.len() as f64;
        assert!(mean(&losses[400..]) < mean(&losses[100..200]));
        assert!(losses[499] < 0.25 * losses[0]);
    }
}
