use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use warmstart_core::experiment::{
    gen_staff_instance, instance_rng, plot_data, run_experiment, ExperimentConfig, GeneratorConfig,
};
use warmstart_core::general::{project_to_base, GenericOracle, LaminarMConvex};
use warmstart_core::oracle::{brute_minimize, brute_projection, EnumerationBudget};
use warmstart_core::predictor::{l1_loss, LearnerState};
use warmstart_core::projection::round_prediction;
use warmstart_core::{
    greedy_minimize, project, BoxOracle, DpOracle, GreedyOptions, Instance, IntSolution, SolveReport,
};

#[derive(Parser)]
#[command(name = "warmstart", version, about = "Warm-started greedy solver for laminar convex resource allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Dp,
    Heap,
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    /// Tree DP or heaps, chosen by --oracle.
    Laminar,
    /// Value-oracle engine: base-polyhedron projection and pairwise search.
    General,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize an instance, warm-started from a prediction.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// JSON file {"x_hat": [...]}; defaults to (R/n, .., R/n).
        #[arg(long)]
        prediction: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "dp")]
        oracle: OracleKind,
        #[arg(long, value_enum, default_value = "laminar")]
        engine: Engine,
        /// Write the list of exchanges taken to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Round a prediction and project it onto the feasible set.
    Project {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        prediction: PathBuf,
    },
    /// Learn predictions online over a directory of instances.
    Learn {
        /// Holds NAME.json instances, optionally with NAME.solution.json.
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        step_size: Option<f64>,
    },
    /// Solve and compare against exhaustive search.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        prediction: Option<PathBuf>,
    },
    /// Write random staff-assignment instances.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long = "R")]
        total: i64,
        #[arg(long)]
        sigma: f64,
        #[arg(long = "T")]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Learn-vs-Cold experiment and write per-instance records.
    Bench {
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long = "R", default_value_t = 3200)]
        total: i64,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,20")]
        sigmas: Vec<f64>,
        #[arg(long = "T", default_value_t = 100)]
        horizon: usize,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        step_size: Option<f64>,
        /// Cross-check every solve against brute force (slow).
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-sigma mean/std curves as JSON.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
}

#[derive(Serialize, Deserialize)]
struct PredictionFile {
    x_hat: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SolutionFile {
    x_star: IntSolution,
    objective: f64,
    iterations: usize,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_instance(path: &Path) -> Result<Instance> {
    Instance::load(path).with_context(|| format!("loading instance {}", path.display()))
}

fn load_prediction(path: Option<&Path>, inst: &Instance) -> Result<Vec<f64>> {
    let x_hat = match path {
        Some(p) => read_json::<PredictionFile>(p)?.x_hat,
        None => vec![inst.total() as f64 / inst.n() as f64; inst.n()],
    };
    if x_hat.len() != inst.n() {
        bail!("prediction has {} entries, instance has {}", x_hat.len(), inst.n());
    }
    Ok(x_hat)
}

fn solve(inst: &Instance, x_hat: &[f64], oracle: OracleKind, engine: Engine, trace: bool) -> Result<SolveReport> {
    let opts = GreedyOptions {
        record_trace: trace,
        ..GreedyOptions::default()
    };
    let report = match engine {
        Engine::General => {
            let f = LaminarMConvex::new(inst, EnumerationBudget::default())?;
            let start = project_to_base(f.rho(), &round_prediction(x_hat)?)?.point;
            greedy_minimize(&f, start, &mut GenericOracle::new(&f), &opts)?
        }
        Engine::Laminar => {
            let start = project(inst, x_hat)?.x;
            match oracle {
                OracleKind::Dp => greedy_minimize(inst, start, &mut DpOracle::new(inst), &opts)?,
                OracleKind::Heap => {
                    let mut heap = BoxOracle::new(inst, &start)?;
                    greedy_minimize(inst, start, &mut heap, &opts)?
                }
            }
        }
    };
    Ok(report)
}

fn cmd_solve(
    instance: &Path,
    prediction: Option<&Path>,
    oracle: OracleKind,
    engine: Engine,
    trace: Option<&Path>,
) -> Result<()> {
    let inst = load_instance(instance)?;
    let x_hat = load_prediction(prediction, &inst)?;
    let report = solve(&inst, &x_hat, oracle, engine, trace.is_some())?;
    if let Some(path) = trace {
        let steps = report.trace.as_deref().unwrap_or_default();
        fs::write(path, serde_json::to_string_pretty(steps)?).with_context(|| format!("writing {}", path.display()))?;
    }
    let out = SolutionFile {
        x_star: report.minimizer,
        objective: report.objective,
        iterations: report.iterations,
    };
    println!("{}", serde_json::to_string(&out)?);
    Ok(())
}

fn cmd_project(instance: &Path, prediction: &Path) -> Result<()> {
    let inst = load_instance(instance)?;
    let x_hat = load_prediction(Some(prediction), &inst)?;
    let p = project(&inst, &x_hat)?;
    println!("{}", json!({ "x0": p.x, "l1_to_rounded": p.distance }));
    Ok(())
}

/// Instance files in name order, skipping solution files.
fn instance_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| {
        let name = p.file_name().and_then(|s| s.to_str()).unwrap_or("");
        name.ends_with(".json") && !name.ends_with(".solution.json")
    });
    files.sort();
    Ok(files)
}

fn cmd_learn(dir: &Path, out: &Path, step_size: Option<f64>) -> Result<()> {
    let files = instance_files(dir)?;
    if files.is_empty() {
        bail!("no instances in {}", dir.display());
    }
    let mut learner: Option<LearnerState> = None;
    let mut lines = String::new();
    for (t, path) in files.iter().enumerate() {
        let inst = load_instance(path)?;
        let state = match &mut learner {
            Some(s) => s,
            None => learner.insert(LearnerState::new(inst.total(), inst.n(), step_size)?),
        };
        if inst.n() != state.n() || inst.total() != state.total {
            bail!("{} does not match the first instance's n and R", path.display());
        }
        let solution = path.with_extension("solution.json");
        let x_star = if solution.exists() {
            read_json::<SolutionFile>(&solution)?.x_star
        } else {
            let x_hat = state.prediction().to_vec();
            solve(&inst, &x_hat, OracleKind::Dp, Engine::Laminar, false)?.minimizer
        };
        let prediction = state.prediction().to_vec();
        let loss = l1_loss(&prediction, &x_star);
        lines.push_str(&json!({ "t": t + 1, "prediction": prediction, "l1_loss": loss }).to_string());
        lines.push('\n');
        state.step(&x_star)?;
    }
    fs::write(out, lines).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

/// Prints one line per check and returns whether all passed.
fn cmd_verify(instance: &Path, prediction: Option<&Path>) -> Result<bool> {
    let inst = load_instance(instance)?;
    let x_hat = load_prediction(prediction, &inst)?;
    let budget = EnumerationBudget::default();
    let mut ok = true;
    let mut check = |name: &str, pass: bool, detail: String| {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        ok &= pass;
    };

    let rounded = round_prediction(&x_hat)?;
    let proj = project(&inst, &x_hat)?;
    let brute = brute_projection(&inst, &rounded, budget)?;
    check(
        "projection",
        proj.distance == brute.distance,
        format!("distance {} at {}, exhaustive {}", proj.distance, proj.x, brute.distance),
    );

    let start = proj.x.clone();
    let report = greedy_minimize(&inst, proj.x, &mut DpOracle::new(&inst), &GreedyOptions::verified())?;
    let best = brute_minimize(&inst, budget)?;
    let close = (report.objective - best.value).abs() <= 1e-9 * best.value.abs().max(1.0);
    check(
        "minimum",
        close,
        format!("greedy {} at {}, exhaustive {}", report.objective, report.minimizer, best.value),
    );
    if best.is_unique() {
        let expected = best.minimizers[0].l1_distance(&start) / 2;
        check(
            "iterations",
            report.iterations as i64 == expected && report.minimizer == best.minimizers[0],
            format!("{} taken, {expected} expected", report.iterations),
        );
    } else {
        println!("SKIP iterations: {} minimizers", best.minimizers.len());
    }
    Ok(ok)
}

fn cmd_gen(cfg: GeneratorConfig, count: usize, seed: u64, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let width = count.to_string().len().max(3);
    for t in 1..=count {
        let inst = gen_staff_instance(&cfg, &mut instance_rng(seed, 0, t))?;
        let path = out.join(format!("instance_{t:0width$}.json"));
        fs::write(&path, serde_json::to_string_pretty(&inst.to_file())?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_bench(cfg: &ExperimentConfig, out: &Path, plot: Option<&Path>) -> Result<()> {
    let records = run_experiment(cfg)?;
    let mut writer = csv::Writer::from_path(out).with_context(|| format!("writing {}", out.display()))?;
    for r in &records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    if let Some(path) = plot {
        fs::write(path, serde_json::to_string_pretty(&plot_data(&records))?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve {
            instance,
            prediction,
            oracle,
            engine,
            trace,
        } => cmd_solve(&instance, prediction.as_deref(), oracle, engine, trace.as_deref())?,
        Command::Project { instance, prediction } => cmd_project(&instance, &prediction)?,
        Command::Learn {
            instances,
            out,
            step_size,
        } => cmd_learn(&instances, &out, step_size)?,
        Command::Verify { instance, prediction } => return cmd_verify(&instance, prediction.as_deref()),
        Command::Gen {
            n,
            total,
            sigma,
            count,
            seed,
            out,
        } => cmd_gen(GeneratorConfig::new(n, total, sigma), count, seed, &out)?,
        Command::Bench {
            n,
            total,
            sigmas,
            horizon,
            runs,
            seed,
            step_size,
            verify,
            out,
            plot_data,
        } => {
            let cfg = ExperimentConfig {
                n,
                total,
                sigmas,
                horizon,
                runs,
                seed,
                step_size,
                verify,
            };
            cmd_bench(&cfg, &out, plot_data.as_deref())?
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
