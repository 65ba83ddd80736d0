//! Staff-assignment benchmark: random instances on a complete binary tree,
//! solved online from learned predictions (Learn) and from the uniform
//! allocation (Cold).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::DpOracle;
use crate::error::{Error, Result};
use crate::greedy::{greedy_minimize, DirectionOracle, Exchange, GreedyOptions, SolveReport};
use crate::instance::{Instance, IntSolution};
use crate::objective::Objective;
use crate::oracle::{brute_steepest_laminar, projection_is_optimal};
use crate::predictor::{l1_loss, LearnerState};
use crate::projection::project;
use crate::tree::NodeSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Number of tasks; a power of two.
    pub n: usize,
    /// Staff total `R`; a multiple of `n`.
    pub total: i64,
    pub sigma: f64,
    /// `u_b` is uniform on `0..=ub_max`.
    pub ub_max: i64,
}

impl GeneratorConfig {
    pub fn new(n: usize, total: i64, sigma: f64) -> Self {
        GeneratorConfig {
            n,
            total,
            sigma,
            ub_max: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(Error::Input(format!("n must be a power of two >= 2, got {}", self.n)));
        }
        if self.total < self.n as i64 || self.total % self.n as i64 != 0 {
            return Err(Error::Input(format!(
                "R must be a positive multiple of n = {}, got {}",
                self.n, self.total
            )));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::Input(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if self.ub_max < 0 {
            return Err(Error::Input("ub_max must be >= 0".into()));
        }
        Ok(())
    }

    /// The cold-start prediction `(R/n, .., R/n)`.
    pub fn uniform(&self) -> Vec<f64> {
        vec![self.total as f64 / self.n as f64; self.n]
    }
}

/// Noise for one tree node.
#[derive(Debug, Clone, Copy)]
struct NodeDraw {
    ua: f64,
    ub: i64,
}

fn draw_nodes<R: Rng>(rng: &mut R, count: usize, ub_max: i64) -> Vec<NodeDraw> {
    (0..count)
        .map(|_| NodeDraw {
            ua: rng.sample(StandardNormal),
            ub: rng.random_range(0..=ub_max),
        })
        .collect()
}

/// Nodes are numbered heap-style: `1` is the root, `k` has children `2k`
/// and `2k + 1`, and the leaves `n..2n` hold elements `0..n`. Draws are
/// taken per node in that order, `u_a` before `u_b`.
fn staff_instance(cfg: &GeneratorConfig, draws: &[NodeDraw]) -> Result<Instance> {
    let n = cfg.n;
    let levels = n.trailing_zeros();
    let mut specs = Vec::with_capacity(2 * n - 1);
    for k in 1..2 * n {
        let depth = usize::BITS - 1 - k.leading_zeros();
        let height = levels - depth;
        let size = 1usize << height;
        let first = (k << height) - n;
        // elements are 1-based in the cost formula
        let weight: f64 = (first + 1..=first + size).map(|i| i as f64).sum();
        let d = draws[k - 1];
        let c = (weight + cfg.sigma * d.ua).max(1.0);
        let cap = cfg.total * size as i64 / n as i64;
        let lower = (size as i64 + d.ub).min(cap);
        let parent = (k > 1).then(|| format!("Y{}", k / 2));
        let id = format!("Y{k}");
        let spec = if height == 0 {
            NodeSpec::leaf(id, parent.as_deref(), first)
        } else {
            NodeSpec::internal(id, parent.as_deref())
        };
        let spec = if k == 1 { spec } else { spec.bounds(lower, cfg.total) };
        specs.push(spec.cost(Objective::reciprocal(c)));
    }
    Instance::from_specs(n, cfg.total, &specs)
}

const MAX_ATTEMPTS: usize = 16;

/// One random staff-assignment instance. The `u_b` draws are redrawn when
/// the uniform allocation is infeasible.
pub fn gen_staff_instance<R: Rng>(cfg: &GeneratorConfig, rng: &mut R) -> Result<Instance> {
    cfg.validate()?;
    let count = 2 * cfg.n - 1;
    let mut draws = draw_nodes(rng, count, cfg.ub_max);
    let start: Vec<i64> = vec![cfg.total / cfg.n as i64; cfg.n];
    for _ in 0..MAX_ATTEMPTS {
        let inst = staff_instance(cfg, &draws)?;
        if inst.is_feasible(&start) {
            return Ok(inst);
        }
        for d in &mut draws {
            d.ub = rng.random_range(0..=cfg.ub_max);
        }
    }
    Err(Error::Infeasible(format!(
        "no feasible instance after {MAX_ATTEMPTS} draws"
    )))
}

/// Independent stream for instance `t` of run `run`.
pub fn instance_rng(seed: u64, run: usize, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((run as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    rng.set_stream(t as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub total: i64,
    pub sigmas: Vec<f64>,
    /// Instances per run.
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    /// Learner step size; `0.01 * sqrt(R/n)` when absent.
    pub step_size: Option<f64>,
    /// Cross-check every solve against the brute-force oracles.
    pub verify: bool,
}

impl ExperimentConfig {
    pub fn desk(sigmas: Vec<f64>) -> Self {
        ExperimentConfig {
            n: 32,
            total: 3200,
            sigmas,
            horizon: 100,
            runs: 10,
            seed: 0,
            step_size: None,
            verify: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub sigma: f64,
    pub run: usize,
    /// 1-based position in the stream.
    pub t: usize,
    pub iterations_learn: usize,
    pub iterations_cold: usize,
    /// `||x_hat - x*||_1` for the learned prediction.
    pub l1_loss: f64,
    pub objective: f64,
}

/// Runs every `(sigma, run)` pair; pairs execute in parallel, each stream
/// sequentially. Instance draws depend on `(seed, run, t)` only, so all
/// sigmas see the same noise. Records come back sorted by `(sigma, run, t)`
/// in the order the sigmas were given.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    for &sigma in &cfg.sigmas {
        GeneratorConfig::new(cfg.n, cfg.total, sigma).validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.sigmas.len())
        .flat_map(|s| (0..cfg.runs).map(move |r| (s, r)))
        .collect();
    let chunks: Vec<Vec<ExperimentRecord>> = jobs
        .par_iter()
        .map(|&(s, run)| {
            run_stream(cfg, cfg.sigmas[s], run).map_err(|e| {
                Error::Consistency(format!("sigma {} run {run} (seed {}): {e}", cfg.sigmas[s], cfg.seed))
            })
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn run_stream(cfg: &ExperimentConfig, sigma: f64, run: usize) -> Result<Vec<ExperimentRecord>> {
    let gen = GeneratorConfig::new(cfg.n, cfg.total, sigma);
    let cold = gen.uniform();
    let mut learner = LearnerState::new(cfg.total, cfg.n, cfg.step_size)?;
    let mut records = Vec::with_capacity(cfg.horizon);
    for t in 1..=cfg.horizon {
        let inst = gen_staff_instance(&gen, &mut instance_rng(cfg.seed, run, t))?;
        let prediction = learner.prediction().to_vec();
        let cold_report = warm_solve(&inst, &cold, cfg.verify)?;
        let learn_report = warm_solve(&inst, &prediction, cfg.verify)?;
        if learn_report.minimizer != cold_report.minimizer {
            return Err(Error::Consistency(format!(
                "t={t}: the two starts reached different minimizers"
            )));
        }
        let x_star = learn_report.minimizer;
        records.push(ExperimentRecord {
            sigma,
            run,
            t,
            iterations_learn: learn_report.iterations,
            iterations_cold: cold_report.iterations,
            l1_loss: l1_loss(&prediction, &x_star),
            objective: learn_report.objective,
        });
        learner.step(&x_star)?;
    }
    Ok(records)
}

/// Projects `x_hat` and runs greedy with the DP oracle. With `verify`, also
/// checks the projection's optimality, every step against brute force, the
/// iteration count `||x* - x0||_1 / 2` and the bounds
/// `||x* - x0||_1 <= 4 ||x_hat - x*||_1`, `iterations <= 2 ||x_hat - x*||_1`.
pub fn warm_solve(inst: &Instance, x_hat: &[f64], verify: bool) -> Result<SolveReport> {
    let proj = project(inst, x_hat)?;
    if !verify {
        return greedy_minimize(inst, proj.x, &mut DpOracle::new(inst), &GreedyOptions::default());
    }
    if !projection_is_optimal(inst, &proj.rounded, &proj.x)? {
        return Err(Error::Consistency("projection is not l1-optimal".into()));
    }
    let start = proj.x.clone();
    let mut oracle = CheckedOracle::new(inst, DpOracle::new(inst));
    let report = greedy_minimize(inst, proj.x, &mut oracle, &GreedyOptions::verified())?;
    let moved = report.minimizer.l1_distance(&start);
    if moved % 2 != 0 || report.iterations as i64 != moved / 2 {
        return Err(Error::Consistency(format!(
            "{} iterations for an l1 move of {moved}",
            report.iterations
        )));
    }
    let error = l1_loss(x_hat, &report.minimizer);
    let slack = 1e-9 * error.max(1.0);
    if moved as f64 > 4.0 * error + slack || report.iterations as f64 > 2.0 * error + slack {
        return Err(Error::Consistency(format!(
            "warm-start bound violated: move {moved}, iterations {}, prediction error {error}",
            report.iterations
        )));
    }
    Ok(report)
}

/// Wraps a direction oracle and compares its every answer with the
/// pairwise search.
pub struct CheckedOracle<'a, O> {
    inst: &'a Instance,
    inner: O,
    pub checked: usize,
}

impl<'a, O: DirectionOracle> CheckedOracle<'a, O> {
    pub fn new(inst: &'a Instance, inner: O) -> Self {
        CheckedOracle {
            inst,
            inner,
            checked: 0,
        }
    }
}

impl<O: DirectionOracle> DirectionOracle for CheckedOracle<'_, O> {
    fn steepest(&mut self, x: &IntSolution) -> Result<Option<Exchange>> {
        let got = self.inner.steepest(x)?;
        let want = brute_steepest_laminar(self.inst, x)?;
        self.checked += 1;
        match (got, want) {
            (None, None) => Ok(None),
            (Some(g), Some(w)) if crate::greedy::close(g.delta, w.delta) => Ok(Some(g)),
            (g, w) => Err(Error::Consistency(format!(
                "steepest exchange at {x}: oracle {g:?}, pairwise search {w:?}"
            ))),
        }
    }

    fn applied(&mut self, x: &IntSolution, step: &Exchange) -> Result<()> {
        self.inner.applied(x, step)
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    (mean, var.sqrt())
}

/// Per-sigma curves over `t`, averaged across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub sigma: f64,
    pub t: Vec<usize>,
    pub learn_mean: Vec<f64>,
    pub learn_std: Vec<f64>,
    pub cold_mean: Vec<f64>,
    pub cold_std: Vec<f64>,
    pub loss_mean: Vec<f64>,
    pub loss_std: Vec<f64>,
}

pub fn plot_data(records: &[ExperimentRecord]) -> Vec<PlotSeries> {
    let mut sigmas: Vec<f64> = Vec::new();
    for r in records {
        if !sigmas.contains(&r.sigma) {
            sigmas.push(r.sigma);
        }
    }
    sigmas
        .into_iter()
        .map(|sigma| {
            let rows: Vec<&ExperimentRecord> = records.iter().filter(|r| r.sigma == sigma).collect();
            let horizon = rows.iter().map(|r| r.t).max().unwrap_or(0);
            let mut series = PlotSeries {
                sigma,
                t: Vec::new(),
                learn_mean: Vec::new(),
                learn_std: Vec::new(),
                cold_mean: Vec::new(),
                cold_std: Vec::new(),
                loss_mean: Vec::new(),
                loss_std: Vec::new(),
            };
            for t in 1..=horizon {
                let at: Vec<&&ExperimentRecord> = rows.iter().filter(|r| r.t == t).collect();
                let col = |f: fn(&ExperimentRecord) -> f64| mean_std(&at.iter().map(|r| f(r)).collect::<Vec<_>>());
                let (lm, ls) = col(|r| r.iterations_learn as f64);
                let (cm, cs) = col(|r| r.iterations_cold as f64);
                let (em, es) = col(|r| r.l1_loss);
                series.t.push(t);
                series.learn_mean.push(lm);
                series.learn_std.push(ls);
                series.cold_mean.push(cm);
                series.cold_std.push(cs);
                series.loss_mean.push(em);
                series.loss_std.push(es);
            }
            series
        })
        .collect()
}

/// Mean Learn and Cold iterations of one run over `t >= from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSummary {
    pub sigma: f64,
    pub run: usize,
    pub learn_mean: f64,
    pub cold_mean: f64,
}

impl RunSummary {
    pub fn gap(&self) -> f64 {
        self.cold_mean - self.learn_mean
    }
}

pub fn summarize_runs(records: &[ExperimentRecord], from: usize) -> Vec<RunSummary> {
    let mut keys: Vec<(f64, usize)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.sigma, r.run)) {
            keys.push((r.sigma, r.run));
        }
    }
    keys.into_iter()
        .map(|(sigma, run)| {
            let rows: Vec<&ExperimentRecord> = records
                .iter()
                .filter(|r| r.sigma == sigma && r.run == run && r.t >= from)
                .collect();
            let learn: Vec<f64> = rows.iter().map(|r| r.iterations_learn as f64).collect();
            let cold: Vec<f64> = rows.iter().map(|r| r.iterations_cold as f64).collect();
            RunSummary {
                sigma,
                run,
                learn_mean: mean_std(&learn).0,
                cold_mean: mean_std(&cold).0,
            }
        })
        .collect()
}
