//! Command-line laboratory: dataset generation, network evaluation, kernel
//! matrices and checks, margin estimation, the exact training schedules,
//! lower-bound simulations, experiment sweeps, and the acceptance selftest.
//!
//! Exit codes: 0 success, 1 acceptance-tagged failure, 2 usage or I/O error.
//! The environment variable `NTKLAB_SEED` overrides every config seed.

mod experiments;
mod report;

use clap::{Parser, Subcommand, ValueEnum};
use ntklab_core::dataset::{self, Dataset, HypercubeLabeling, LabelMode};
use ntklab_core::kernel::{self, KernelMatrix};
use ntklab_core::linalg::Mat;
use ntklab_core::margin::{self, VBarMap};
use ntklab_core::network::{self, coupled_init, InitConfig, NetParams, ScaleMode};
use ntklab_core::train;
use ntklab_core::{bounds, selftest};
use report::{config_hash, fmt_f64, Csv};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ntklab", version, about = "coupled-initialization ReLU network laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and inspect datasets
    Dataset {
        #[command(subcommand)]
        cmd: DatasetCmd,
    },
    /// Initialize and evaluate networks
    Net {
        #[command(subcommand)]
        cmd: NetCmd,
    },
    /// Kernel matrices, eigenvalues, and lemma checks
    Kernel {
        #[command(subcommand)]
        cmd: KernelCmd,
    },
    /// Separation-margin estimation and separators
    Margin {
        #[command(subcommand)]
        cmd: MarginCmd,
    },
    /// Run the exact training schedules
    Train {
        #[command(subcommand)]
        cmd: TrainCmd,
    },
    /// Lower-bound constructions and simulations
    Bounds {
        #[command(subcommand)]
        cmd: BoundsCmd,
    },
    /// Run a named experiment from a JSON config
    Experiment {
        /// JSON config file ({"experiment": "...", "seed": .., ...})
        #[arg(long, conflicts_with = "name")]
        config: Option<PathBuf>,
        /// run a named experiment with default parameters
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value = "ntklab-out")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// cap on parallel workers
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the acceptance criteria
    Selftest {
        /// comma-separated criterion ids (default: all)
        #[arg(long)]
        only: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// cap on parallel workers
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Write a dataset as JSON
    Gen {
        #[arg(long, value_enum)]
        kind: DatasetKindArg,
        /// number of points (circle, random sphere)
        #[arg(long)]
        n: Option<usize>,
        /// ambient dimension (orthobasis, hypercube, random sphere)
        #[arg(long)]
        d: Option<usize>,
        /// chord length (two points)
        #[arg(long)]
        b: Option<f64>,
        /// comma-separated labels (orthobasis)
        #[arg(long)]
        labels: Option<String>,
        #[arg(long, value_enum, default_value = "parity")]
        labeling: HypercubeLabelingArg,
        #[arg(long, value_enum, default_value = "random-signs")]
        label_mode: LabelModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetKindArg {
    AlternatingCircle,
    Orthobasis,
    Hypercube,
    TwoPoints,
    RandomSphere,
}

#[derive(Clone, Copy, ValueEnum)]
enum HypercubeLabelingArg {
    Majority,
    Parity,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelModeArg {
    RandomSigns,
    ConstantOne,
    RegressionUniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Unnormalized,
    InvSqrtM,
}

#[derive(Subcommand)]
enum NetCmd {
    /// Draw a coupled initialization and write it as JSON
    Init {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "inv-sqrt-m")]
        scale: ScaleArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a network on a dataset
    Eval {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// write predictions as JSON instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum KernelCmd {
    /// Closed-form infinite-width kernel, written as CSV
    Cts {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-sample kernel from a stored network or fresh coupled weights
    Dis {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Smallest eigenvalue of a kernel CSV
    Mineig {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Concentration of H_dis around H_cts over random draws
    CheckConcentration {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        m0: usize,
        #[arg(long, default_value_t = 2)]
        b: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Kernel stability under per-row perturbations of norm <= R
    CheckPerturbation {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum MarginCmd {
    /// Monte-Carlo margin estimate; report as JSON
    Mc {
        #[arg(long)]
        dataset: PathBuf,
        /// circle-rz | natural-v0 | radial | constant:<x,y,..>
        #[arg(long, default_value = "natural-v0")]
        map: String,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact alternating-circle margin
    ExactCircle {
        #[arg(long)]
        n: usize,
    },
    /// Monte-Carlo margin upper bound over a subset
    UpperBound {
        #[arg(long)]
        dataset: PathBuf,
        /// comma-separated point indices (default: all)
        #[arg(long)]
        subset: Option<String>,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build a separator and report its initialization margins
    Separator {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "natural-v0")]
        map: String,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// use the 2-D net construction instead of the empirical mean
        #[arg(long)]
        two_dim: bool,
        /// margin parameter for the net spacing (2-D construction)
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TrainCmd {
    /// Logistic schedule from a JSON job config
    Logistic {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Squared-loss schedule from a JSON job config
    Squared {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum BoundsCmd {
    /// Piecewise-linear segment counting on the l1 sphere
    Segments {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Quadruple coverage rate over random weight draws
    Coverage {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Coupon-collector uncovered-probability simulation
    Coupon {
        #[arg(long)]
        n_prime: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Failure rate of the natural empirical-mean separator
    FailureSim {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m_prime: usize,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Dataset reference inside train-job configs: a path or an inline generator.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum DatasetSpec {
    Path { path: String },
    Gen(GenSpec),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum GenSpec {
    AlternatingCircle {
        n: usize,
    },
    Orthobasis {
        d: usize,
        labels: Option<Vec<f64>>,
    },
    Hypercube {
        d: usize,
        labeling: HypercubeLabeling,
    },
    TwoPoints {
        b: f64,
    },
    RandomSphere {
        n: usize,
        d: usize,
        label_mode: LabelMode,
        #[serde(default)]
        seed: u64,
    },
}

fn load_dataset_spec(spec: &DatasetSpec) -> Result<Dataset, String> {
    match spec {
        DatasetSpec::Path { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            Dataset::from_json(&text).map_err(|e| e.to_string())
        }
        DatasetSpec::Gen(gen) => match gen {
            GenSpec::AlternatingCircle { n } => {
                dataset::gen_alternating_circle(*n).map_err(|e| e.to_string())
            }
            GenSpec::Orthobasis { d, labels } => {
                let labels = labels
                    .clone()
                    .unwrap_or_else(|| (0..2 * d).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect());
                dataset::gen_orthobasis(*d, &labels).map_err(|e| e.to_string())
            }
            GenSpec::Hypercube { d, labeling } => {
                dataset::gen_hypercube(*d, *labeling).map_err(|e| e.to_string())
            }
            GenSpec::TwoPoints { b } => dataset::gen_two_points(*b).map_err(|e| e.to_string()),
            GenSpec::RandomSphere {
                n,
                d,
                label_mode,
                seed,
            } => dataset::gen_random_sphere(*n, *d, *label_mode, effective_seed(*seed))
                .map_err(|e| e.to_string()),
        },
    }
}

/// Training job file: the dataset, accuracy targets, and optional overrides
/// of the derived schedule.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct TrainJob {
    dataset: DatasetSpec,
    epsilon: f64,
    #[serde(default = "default_job_delta")]
    delta: f64,
    #[serde(default)]
    gamma: Option<f64>,
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default)]
    m_override: Option<usize>,
    #[serde(default)]
    steps_override: Option<usize>,
    #[serde(default)]
    seed: u64,
    /// build a reference separator for descent diagnostics:
    /// "circle_rz" or "natural_v0"
    #[serde(default)]
    reference: Option<String>,
    /// record the per-step decomposition terms (squared loss)
    #[serde(default = "default_true")]
    audit: bool,
}

fn default_job_delta() -> f64 {
    0.1
}
fn default_true() -> bool {
    true
}

fn env_seed() -> Option<u64> {
    std::env::var("NTKLAB_SEED").ok().and_then(|s| s.parse().ok())
}

fn effective_seed(seed: u64) -> u64 {
    env_seed().unwrap_or(seed)
}

fn parse_map(spec: &str, ds: &Dataset) -> Result<VBarMap, String> {
    match spec {
        "circle-rz" | "circle_rz" => VBarMap::circle_rz(ds.n()).map_err(|e| e.to_string()),
        "natural-v0" | "natural_v0" => Ok(VBarMap::natural_v0(ds)),
        "radial" => Ok(VBarMap::Radial),
        other => {
            if let Some(rest) = other.strip_prefix("constant:") {
                let dir: Result<Vec<f64>, _> = rest.split(',').map(|t| t.trim().parse()).collect();
                let dir = dir.map_err(|e| format!("bad constant direction: {e}"))?;
                VBarMap::constant_direction(dir).map_err(|e| e.to_string())
            } else {
                Err(format!("unknown map '{other}'"))
            }
        }
    }
}

fn write_kernel_csv(
    path: &Path,
    k: &KernelMatrix,
    lambda: f64,
    seed: Option<u64>,
) -> Result<(), String> {
    let mut csv = Csv::new();
    csv.comment("provenance", format!("{:?}", k.provenance))
        .comment("n", k.n())
        .comment("min_eig", lambda);
    if let Some(s) = seed {
        csv.comment("seed", s);
    }
    for i in 0..k.n() {
        let cells: Vec<String> = (0..k.n()).map(|j| fmt_f64(k.entries.get(i, j))).collect();
        csv.row(&cells);
    }
    std::fs::write(path, csv.finish()).map_err(|e| e.to_string())
}

fn read_kernel_csv(path: &Path) -> Result<KernelMatrix, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse()).collect();
        rows.push(row.map_err(|e| format!("bad kernel row: {e}"))?);
    }
    let entries = Mat::from_rows(&rows).map_err(|e| e.to_string())?;
    Ok(KernelMatrix {
        entries,
        provenance: kernel::Provenance::Dis,
        min_eig_cache: None,
    })
}

fn load_dataset(path: &Path) -> Result<Dataset, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Dataset::from_json(&text).map_err(|e| e.to_string())
}

fn load_net(path: &Path) -> Result<NetParams, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    NetParams::from_json(&text).map_err(|e| e.to_string())
}

fn run() -> Result<bool, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Dataset { cmd } => run_dataset(cmd).map(|_| true),
        Command::Net { cmd } => run_net(cmd).map(|_| true),
        Command::Kernel { cmd } => run_kernel(cmd).map(|_| true),
        Command::Margin { cmd } => run_margin(cmd).map(|_| true),
        Command::Train { cmd } => run_train(cmd).map(|_| true),
        Command::Bounds { cmd } => run_bounds(cmd).map(|_| true),
        Command::Experiment {
            config,
            name,
            out_dir,
            seed,
            jobs,
        } => {
            if let Some(j) = jobs {
                ntklab_core::parallel::set_threads(j)?;
            }
            let mut cfg: experiments::ExperimentConfig = match (config, name) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| format!("{}: {e}", path.display()))?;
                    serde_json::from_str(&text).map_err(|e| e.to_string())?
                }
                (None, Some(name)) => {
                    let stub = format!("{{\"experiment\":\"{name}\",\"seed\":{seed}}}");
                    serde_json::from_str(&stub)
                        .map_err(|e| format!("unknown experiment '{name}': {e}"))?
                }
                (None, None) => return Err("need --config or --name".into()),
            };
            if let Some(s) = env_seed() {
                cfg.override_seed(s);
            }
            experiments::run_experiment(&cfg, &out_dir)
        }
        Command::Selftest { only, seed, jobs } => {
            if let Some(j) = jobs {
                ntklab_core::parallel::set_threads(j)?;
            }
            let seed = effective_seed(seed);
            let ids: Vec<usize> = match only {
                Some(list) => list
                    .split(',')
                    .map(|t| t.trim().parse().map_err(|e| format!("bad id: {e}")))
                    .collect::<Result<_, _>>()?,
                None => selftest::CRITERIA.iter().map(|(id, _)| *id).collect(),
            };
            let mut all_ok = true;
            for id in ids {
                let report = selftest::run_criterion(id, seed).map_err(|e| e.to_string())?;
                println!("{}", report.summary_line());
                for check in &report.checks {
                    let tag = if !check.asserted {
                        "info"
                    } else if check.passed {
                        "ok  "
                    } else {
                        "FAIL"
                    };
                    println!("    [{tag}] {} -- {}", check.label, check.detail);
                }
                all_ok &= report.passed;
            }
            println!("selftest: {}", if all_ok { "PASS" } else { "FAIL" });
            Ok(all_ok)
        }
    }
}

fn run_dataset(cmd: DatasetCmd) -> Result<(), String> {
    match cmd {
        DatasetCmd::Gen {
            kind,
            n,
            d,
            b,
            labels,
            labeling,
            label_mode,
            seed,
            out,
        } => {
            let need = |opt: Option<usize>, what: &str| {
                opt.ok_or_else(|| format!("--{what} is required for this kind"))
            };
            let ds = match kind {
                DatasetKindArg::AlternatingCircle => {
                    dataset::gen_alternating_circle(need(n, "n")?).map_err(|e| e.to_string())?
                }
                DatasetKindArg::Orthobasis => {
                    let d = need(d, "d")?;
                    let labels = match labels {
                        Some(list) => list
                            .split(',')
                            .map(|t| t.trim().parse().map_err(|e| format!("bad label: {e}")))
                            .collect::<Result<Vec<f64>, _>>()?,
                        None => (0..2 * d).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(),
                    };
                    dataset::gen_orthobasis(d, &labels).map_err(|e| e.to_string())?
                }
                DatasetKindArg::Hypercube => {
                    let labeling = match labeling {
                        HypercubeLabelingArg::Majority => HypercubeLabeling::Majority,
                        HypercubeLabelingArg::Parity => HypercubeLabeling::Parity,
                    };
                    dataset::gen_hypercube(need(d, "d")?, labeling).map_err(|e| e.to_string())?
                }
                DatasetKindArg::TwoPoints => dataset::gen_two_points(
                    b.ok_or_else(|| "--b is required for two-points".to_string())?,
                )
                .map_err(|e| e.to_string())?,
                DatasetKindArg::RandomSphere => {
                    let mode = match label_mode {
                        LabelModeArg::RandomSigns => LabelMode::RandomSigns,
                        LabelModeArg::ConstantOne => LabelMode::ConstantOne,
                        LabelModeArg::RegressionUniform => LabelMode::RegressionUniform,
                    };
                    dataset::gen_random_sphere(need(n, "n")?, need(d, "d")?, mode, effective_seed(seed))
                        .map_err(|e| e.to_string())?
                }
            };
            std::fs::write(&out, ds.to_json()).map_err(|e| e.to_string())?;
            println!("wrote {} ({} points, d = {})", out.display(), ds.n(), ds.d());
            Ok(())
        }
    }
}

fn run_net(cmd: NetCmd) -> Result<(), String> {
    match cmd {
        NetCmd::Init {
            m,
            d,
            beta,
            seed,
            scale,
            out,
        } => {
            let mode = match scale {
                ScaleArg::Unnormalized => ScaleMode::Unnormalized,
                ScaleArg::InvSqrtM => ScaleMode::InvSqrtM,
            };
            let params = coupled_init(
                &InitConfig {
                    m,
                    d,
                    beta,
                    seed: effective_seed(seed),
                },
                mode,
            )
            .map_err(|e| e.to_string())?;
            std::fs::write(&out, params.to_json()).map_err(|e| e.to_string())?;
            println!("wrote {} (m = {m}, d = {d})", out.display());
            Ok(())
        }
        NetCmd::Eval { net, dataset, out } => {
            let params = load_net(&net)?;
            let ds = load_dataset(&dataset)?;
            let u = network::forward_all(&params, &ds).map_err(|e| e.to_string())?;
            let misses = train::misclassification_count(&params, &ds).map_err(|e| e.to_string())?;
            let body = serde_json::json!({"u": u, "misclassified": misses});
            let text = serde_json::to_string_pretty(&body).map_err(|e| e.to_string())?;
            match out {
                Some(path) => std::fs::write(path, text).map_err(|e| e.to_string())?,
                None => println!("{text}"),
            }
            Ok(())
        }
    }
}

fn run_kernel(cmd: KernelCmd) -> Result<(), String> {
    match cmd {
        KernelCmd::Cts { dataset, out } => {
            let ds = load_dataset(&dataset)?;
            let k = kernel::h_cts(&ds).map_err(|e| e.to_string())?;
            let lambda = kernel::min_eig(&k).map_err(|e| e.to_string())?;
            write_kernel_csv(&out, &k, lambda, None)?;
            println!("wrote {} (min_eig = {lambda})", out.display());
            Ok(())
        }
        KernelCmd::Dis {
            dataset,
            net,
            m,
            seed,
            out,
        } => {
            let ds = load_dataset(&dataset)?;
            let seed = effective_seed(seed);
            let (weights, drawn) = match (net, m) {
                (Some(path), _) => (load_net(&path)?.weights, false),
                (None, Some(m)) => (
                    coupled_init(
                        &InitConfig {
                            m,
                            d: ds.d(),
                            beta: 1.0,
                            seed,
                        },
                        ScaleMode::Unnormalized,
                    )
                    .map_err(|e| e.to_string())?
                    .weights,
                    true,
                ),
                (None, None) => return Err("need --net or --m".into()),
            };
            let k = kernel::h_dis(&ds, &weights).map_err(|e| e.to_string())?;
            let lambda = kernel::min_eig(&k).map_err(|e| e.to_string())?;
            let seed_note = drawn.then_some(seed);
            write_kernel_csv(&out, &k, lambda, seed_note)?;
            println!("wrote {} (min_eig = {lambda})", out.display());
            Ok(())
        }
        KernelCmd::Mineig { matrix } => {
            let k = read_kernel_csv(&matrix)?;
            let lambda = kernel::min_eig(&k).map_err(|e| e.to_string())?;
            println!("{lambda}");
            Ok(())
        }
        KernelCmd::CheckConcentration {
            dataset,
            m0,
            b,
            delta,
            trials,
            seed,
        } => {
            let ds = load_dataset(&dataset)?;
            let rep = kernel::concentration_check(&ds, m0, b, delta, trials, effective_seed(seed))
                .map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string_pretty(&rep).map_err(|e| e.to_string())?);
            Ok(())
        }
        KernelCmd::CheckPerturbation {
            dataset,
            r,
            m,
            trials,
            seed,
        } => {
            let ds = load_dataset(&dataset)?;
            let rep = kernel::perturbation_check(&ds, r, m, trials, effective_seed(seed))
                .map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string_pretty(&rep).map_err(|e| e.to_string())?);
            Ok(())
        }
    }
}

fn run_margin(cmd: MarginCmd) -> Result<(), String> {
    match cmd {
        MarginCmd::Mc {
            dataset,
            map,
            samples,
            seed,
            out,
        } => {
            let ds = load_dataset(&dataset)?;
            let vmap = parse_map(&map, &ds)?;
            let est = margin::margin_mc(&ds, &vmap, samples, effective_seed(seed))
                .map_err(|e| e.to_string())?;
            let body = serde_json::json!({
                "gamma": est.gamma,
                "per_point": est.per_point,
                "se": est.std_errors,
                "samples": est.samples,
            });
            let text = serde_json::to_string_pretty(&body).map_err(|e| e.to_string())?;
            match out {
                Some(path) => std::fs::write(path, text).map_err(|e| e.to_string())?,
                None => println!("{text}"),
            }
            Ok(())
        }
        MarginCmd::ExactCircle { n } => {
            println!("{}", margin::margin_circle_exact(n).map_err(|e| e.to_string())?);
            Ok(())
        }
        MarginCmd::UpperBound {
            dataset,
            subset,
            samples,
            seed,
        } => {
            let ds = load_dataset(&dataset)?;
            let subset: Vec<usize> = match subset {
                Some(list) => list
                    .split(',')
                    .map(|t| t.trim().parse().map_err(|e| format!("bad index: {e}")))
                    .collect::<Result<_, _>>()?,
                None => (0..ds.n()).collect(),
            };
            let (bound, se) =
                margin::margin_upper_bound_mc(&ds, &subset, samples, effective_seed(seed))
                    .map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::json!({"upper_bound": bound, "se": se, "samples": samples})
            );
            Ok(())
        }
        MarginCmd::Separator {
            dataset,
            map,
            m,
            seed,
            two_dim,
            gamma,
            delta,
            out,
        } => {
            let ds = load_dataset(&dataset)?;
            let vmap = parse_map(&map, &ds)?;
            let params = coupled_init(
                &InitConfig {
                    m,
                    d: ds.d(),
                    beta: 1.0,
                    seed: effective_seed(seed),
                },
                ScaleMode::InvSqrtM,
            )
            .map_err(|e| e.to_string())?;
            let sep = if two_dim {
                let gamma = gamma.ok_or_else(|| "--gamma is required with --two-dim".to_string())?;
                margin::build_separator_2d(&params, &ds, &vmap, gamma, delta)
                    .map_err(|e| e.to_string())?
                    .separator
            } else {
                margin::build_separator(&params, &vmap).map_err(|e| e.to_string())?
            };
            let margins =
                margin::ntk_margin_at_init(&params, &ds, &sep).map_err(|e| e.to_string())?;
            let min = margins.iter().copied().fold(f64::INFINITY, f64::min);
            let body = serde_json::json!({
                "min_margin": min,
                "per_point": margins,
                "frobenius_norm": sep.rows.frobenius_norm(),
            });
            let text = serde_json::to_string_pretty(&body).map_err(|e| e.to_string())?;
            match out {
                Some(path) => std::fs::write(path, text).map_err(|e| e.to_string())?,
                None => println!("{text}"),
            }
            Ok(())
        }
    }
}

fn run_train(cmd: TrainCmd) -> Result<(), String> {
    let (config, out, loss) = match cmd {
        TrainCmd::Logistic { config, out } => (config, out, train::Loss::Logistic),
        TrainCmd::Squared { config, out } => (config, out, train::Loss::Squared),
    };
    let raw = std::fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
    let job: TrainJob = serde_json::from_str(&raw).map_err(|e| e.to_string())?;
    let hash = config_hash(raw.as_bytes());
    let ds = load_dataset_spec(&job.dataset)?;
    let seed = effective_seed(job.seed);

    let mut csv = Csv::new();
    csv.comment("config_hash", &hash).comment("seed", seed);
    match loss {
        train::Loss::Logistic => {
            let gamma = match job.gamma {
                Some(g) => g,
                None => {
                    if ds.d() == 2 && ds.n() % 4 == 0 {
                        margin::margin_circle_exact(ds.n()).map_err(|e| e.to_string())?
                    } else {
                        return Err("logistic schedule needs gamma (or a circle dataset)".into());
                    }
                }
            };
            let mut cfg = train::derive_logistic_schedule(ds.n(), gamma, job.epsilon, job.delta)
                .map_err(|e| e.to_string())?;
            cfg.seed = seed;
            if let Some(m) = job.m_override {
                cfg.m = m + m % 2;
            }
            if let Some(t) = job.steps_override {
                cfg.steps = t;
            }
            let reference = match job.reference.as_deref() {
                Some(name) => {
                    let params = coupled_init(
                        &InitConfig {
                            m: cfg.m,
                            d: ds.d(),
                            beta: cfg.beta,
                            seed: cfg.seed,
                        },
                        ScaleMode::InvSqrtM,
                    )
                    .map_err(|e| e.to_string())?;
                    let vmap = parse_map(name, &ds)?;
                    Some(margin::build_separator(&params, &vmap).map_err(|e| e.to_string())?)
                }
                None => None,
            };
            let trace = train::train_logistic(&ds, &cfg, reference.as_ref())
                .map_err(|e| e.to_string())?;
            csv.comment("loss", "logistic")
                .comment("m", cfg.m)
                .comment("eta", cfg.eta)
                .comment("beta", cfg.beta)
                .comment("rho", cfg.rho)
                .comment("gamma", gamma)
                .comment("avg_risk", trace.average_objective())
                .header(&["step", "loss_or_residual", "max_disp", "flips"]);
            for t in 0..=trace.steps_executed {
                csv.row(&[
                    t.to_string(),
                    fmt_f64(trace.objective[t]),
                    fmt_f64(trace.max_disp[t]),
                    trace.flips[t].to_string(),
                ]);
            }
            if let Some(sep) = reference.as_ref() {
                let report = train::descent_inequality_check(&trace, sep, cfg.rho, cfg.eta)
                    .map_err(|e| e.to_string())?;
                println!(
                    "descent inequality: per-step {}, max surrogate {:.4e}",
                    if report.per_step_ok { "ok" } else { "VIOLATED" },
                    report.max_surrogate
                );
            }
            println!(
                "avg risk {:.6} over {} steps (target {})",
                trace.average_objective(),
                trace.steps_executed,
                job.epsilon
            );
        }
        train::Loss::Squared => {
            let lambda = match job.lambda {
                Some(l) => l,
                None => {
                    let k = kernel::h_cts(&ds).map_err(|e| e.to_string())?;
                    kernel::min_eig(&k).map_err(|e| e.to_string())?
                }
            };
            let mut cfg =
                train::derive_squared_schedule(ds.n(), lambda, job.epsilon, job.m_override)
                    .map_err(|e| e.to_string())?;
            cfg.seed = seed;
            if let Some(t) = job.steps_override {
                cfg.steps = t;
            }
            if job.audit {
                cfg.audit_r_ball = Some(cfg.r_ball);
            }
            let trace = train::train_squared(&ds, &cfg).map_err(|e| e.to_string())?;
            csv.comment("loss", "squared")
                .comment("m", cfg.m)
                .comment("eta", cfg.eta)
                .comment("lambda", lambda)
                .comment("r_ball", cfg.r_ball)
                .header(&[
                    "step",
                    "loss_or_residual",
                    "max_disp",
                    "flips",
                    "c1",
                    "c2",
                    "c3",
                    "c4",
                ]);
            let dec = trace.decomposition.as_ref();
            for t in 0..=trace.steps_executed {
                let terms = dec.and_then(|d| d.get(t));
                let (c1, c2, c3, c4) = match terms {
                    Some(d) => (fmt_f64(d.c1), fmt_f64(d.c2), fmt_f64(d.c3), fmt_f64(d.c4)),
                    None => (String::new(), String::new(), String::new(), String::new()),
                };
                csv.row(&[
                    t.to_string(),
                    fmt_f64(trace.objective[t]),
                    fmt_f64(trace.max_disp[t]),
                    trace.flips[t].to_string(),
                    c1,
                    c2,
                    c3,
                    c4,
                ]);
            }
            println!(
                "residual {:.6e} after {} steps (target {})",
                trace.objective[trace.steps_executed],
                trace.steps_executed,
                job.epsilon
            );
        }
    }
    std::fs::write(&out, csv.finish()).map_err(|e| e.to_string())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn run_bounds(cmd: BoundsCmd) -> Result<(), String> {
    match cmd {
        BoundsCmd::Segments { net, dataset } => {
            let params = load_net(&net)?;
            let ds = load_dataset(&dataset)?;
            let rep = bounds::count_segments(&params, &ds).map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string_pretty(&rep).map_err(|e| e.to_string())?);
            Ok(())
        }
        BoundsCmd::Coverage { n, m, trials, seed } => {
            let rate = bounds::coverage_sim(n, m, trials, effective_seed(seed))
                .map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::json!({"n": n, "m": m, "trials": trials, "covered_rate": rate})
            );
            Ok(())
        }
        BoundsCmd::Coupon {
            n_prime,
            m,
            trials,
            seed,
        } => {
            let rate = bounds::coupon_collector_sim(n_prime, m, trials, effective_seed(seed))
                .map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::json!({
                    "n_prime": n_prime, "m": m, "trials": trials,
                    "uncovered_rate": rate,
                    "union_bound": bounds::coupon_union_bound(n_prime, m),
                })
            );
            Ok(())
        }
        BoundsCmd::FailureSim {
            n,
            m_prime,
            trials,
            seed,
        } => {
            let rate = bounds::empirical_mean_failure_sim(n, m_prime, trials, effective_seed(seed))
                .map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::json!({"n": n, "m_prime": m_prime, "trials": trials, "failure_rate": rate})
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
