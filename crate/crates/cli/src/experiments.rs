//! Named experiments: parameter sweeps and report tables. Every experiment
//! writes CSV (and usually SVG) artifacts stamped with the config hash and
//! seed, prints a one-line verdict per asserted property, and reports whether
//! all asserted properties held.

use crate::report::{config_hash, fmt_f64, svg_line_chart, Csv, Series};
use ntklab_core::dataset::{self, HypercubeLabeling, LabelMode};
use ntklab_core::kernel;
use ntklab_core::margin::{self, VBarMap};
use ntklab_core::parallel;
use ntklab_core::rng;
use ntklab_core::train;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentConfig {
    WidthSweepLogistic {
        seed: u64,
        #[serde(default = "default_n8")]
        n: usize,
        #[serde(default = "default_eps_logistic")]
        epsilon: f64,
        #[serde(default = "default_delta")]
        delta: f64,
        widths: Option<Vec<usize>>,
        #[serde(default = "default_seeds_per_point")]
        seeds_per_width: usize,
    },
    WidthSweepSquared {
        seed: u64,
        #[serde(default = "default_n8")]
        n: usize,
        #[serde(default = "default_d6")]
        d: usize,
        #[serde(default = "default_eps_squared")]
        epsilon: f64,
        #[serde(default = "default_dataset_seed")]
        dataset_seed: u64,
        widths: Option<Vec<usize>>,
        #[serde(default = "default_seeds_per_point")]
        seeds_per_width: usize,
    },
    ConvergenceCurve {
        seed: u64,
        loss: train::Loss,
        #[serde(default = "default_n8")]
        n: usize,
        #[serde(default = "default_eps_logistic")]
        epsilon: f64,
    },
    ConcentrationSweep {
        seed: u64,
        #[serde(default = "default_n8")]
        n: usize,
        #[serde(default = "default_seeds_per_point")]
        seeds_per_point: usize,
    },
    MarginTable {
        seed: u64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    LowerboundSuite {
        seed: u64,
    },
    ConjectureSweep {
        seed: u64,
        sizes: Option<Vec<usize>>,
        #[serde(default = "default_samples")]
        samples: usize,
    },
}

fn default_n8() -> usize {
    8
}
fn default_d6() -> usize {
    6
}
fn default_eps_logistic() -> f64 {
    0.3
}
fn default_eps_squared() -> f64 {
    0.01
}
fn default_delta() -> f64 {
    0.1
}
fn default_seeds_per_point() -> usize {
    4
}
fn default_samples() -> usize {
    200_000
}
fn default_dataset_seed() -> u64 {
    27
}

impl ExperimentConfig {
    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::WidthSweepLogistic { seed, .. }
            | ExperimentConfig::WidthSweepSquared { seed, .. }
            | ExperimentConfig::ConvergenceCurve { seed, .. }
            | ExperimentConfig::ConcentrationSweep { seed, .. }
            | ExperimentConfig::MarginTable { seed, .. }
            | ExperimentConfig::LowerboundSuite { seed }
            | ExperimentConfig::ConjectureSweep { seed, .. } => *seed,
        }
    }

    pub fn override_seed(&mut self, new_seed: u64) {
        match self {
            ExperimentConfig::WidthSweepLogistic { seed, .. }
            | ExperimentConfig::WidthSweepSquared { seed, .. }
            | ExperimentConfig::ConvergenceCurve { seed, .. }
            | ExperimentConfig::ConcentrationSweep { seed, .. }
            | ExperimentConfig::MarginTable { seed, .. }
            | ExperimentConfig::LowerboundSuite { seed }
            | ExperimentConfig::ConjectureSweep { seed, .. } => *seed = new_seed,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::WidthSweepLogistic { .. } => "width_sweep_logistic",
            ExperimentConfig::WidthSweepSquared { .. } => "width_sweep_squared",
            ExperimentConfig::ConvergenceCurve { .. } => "convergence_curve",
            ExperimentConfig::ConcentrationSweep { .. } => "concentration_sweep",
            ExperimentConfig::MarginTable { .. } => "margin_table",
            ExperimentConfig::LowerboundSuite { .. } => "lowerbound_suite",
            ExperimentConfig::ConjectureSweep { .. } => "conjecture_sweep",
        }
    }
}

fn write(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)
}

fn verdict(label: &str, ok: bool, detail: &str) -> bool {
    println!("  [{}] {label} -- {detail}", if ok { "ok " } else { "FAIL" });
    ok
}

/// Runs the experiment, writes artifacts under `out_dir`, and returns true if
/// every asserted property held.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<bool, String> {
    let canonical = serde_json::to_string(cfg).map_err(|e| e.to_string())?;
    let hash = config_hash(canonical.as_bytes());
    let seed = cfg.seed();
    println!("experiment {} (seed {seed}, config {hash})", cfg.name());
    let ok = match cfg {
        ExperimentConfig::WidthSweepLogistic {
            seed,
            n,
            epsilon,
            delta,
            widths,
            seeds_per_width,
        } => width_sweep_logistic(
            *seed,
            *n,
            *epsilon,
            *delta,
            widths.clone(),
            *seeds_per_width,
            out_dir,
            &hash,
        )?,
        ExperimentConfig::WidthSweepSquared {
            seed,
            n,
            d,
            epsilon,
            dataset_seed,
            widths,
            seeds_per_width,
        } => width_sweep_squared(
            *seed,
            *n,
            *d,
            *epsilon,
            *dataset_seed,
            widths.clone(),
            *seeds_per_width,
            out_dir,
            &hash,
        )?,
        ExperimentConfig::ConvergenceCurve { seed, loss, n, epsilon } => {
            convergence_curve(*seed, *loss, *n, *epsilon, out_dir, &hash)?
        }
        ExperimentConfig::ConcentrationSweep {
            seed,
            n,
            seeds_per_point,
        } => concentration_sweep(*seed, *n, *seeds_per_point, out_dir, &hash)?,
        ExperimentConfig::MarginTable { seed, samples } => {
            margin_table(*seed, *samples, out_dir, &hash)?
        }
        ExperimentConfig::LowerboundSuite { seed } => lowerbound_suite(*seed, out_dir, &hash)?,
        ExperimentConfig::ConjectureSweep { seed, sizes, samples } => {
            conjecture_sweep(*seed, sizes.clone(), *samples, out_dir, &hash)?
        }
    };
    Ok(ok)
}

#[allow(clippy::too_many_arguments)]
fn width_sweep_logistic(
    seed: u64,
    n: usize,
    epsilon: f64,
    delta: f64,
    widths: Option<Vec<usize>>,
    seeds_per_width: usize,
    out_dir: &Path,
    hash: &str,
) -> Result<bool, String> {
    let ds = dataset::gen_alternating_circle(n).map_err(|e| e.to_string())?;
    let gamma = margin::margin_circle_exact(n).map_err(|e| e.to_string())?;
    let base = train::derive_logistic_schedule(n, gamma, epsilon, delta).map_err(|e| e.to_string())?;
    let widths = widths.unwrap_or_else(|| {
        let mut w = vec![8usize, 32, 128, 512, 2048];
        w.push(base.m);
        w
    });
    let mut fractions = Vec::new();
    for &m in &widths {
        let results = parallel::map_indexed(seeds_per_width, |trial| {
            let mut cfg = base.clone();
            cfg.m = m + m % 2;
            cfg.seed = rng::mix64(seed ^ (m as u64) ^ ((trial as u64) << 32));
            match train::train_logistic(&ds, &cfg, None) {
                Ok(trace) => trace.average_objective() <= epsilon,
                Err(_) => false,
            }
        });
        let frac = results.iter().filter(|r| **r).count() as f64 / seeds_per_width as f64;
        fractions.push(frac);
    }
    let mut csv = Csv::new();
    csv.comment("experiment", "width_sweep_logistic")
        .comment("config_hash", hash)
        .comment("seed", seed)
        .comment("epsilon", epsilon)
        .comment("gamma", gamma)
        .header(&["m", "success_fraction"]);
    for (m, f) in widths.iter().zip(&fractions) {
        csv.row(&[m.to_string(), fmt_f64(*f)]);
    }
    write(&out_dir.join("width_sweep_logistic.csv"), csv.finish()).map_err(|e| e.to_string())?;
    let pts: Vec<(f64, f64)> = widths
        .iter()
        .zip(&fractions)
        .map(|(&m, &f)| ((m as f64).log2(), f))
        .collect();
    let svg = svg_line_chart(
        "logistic success fraction vs width",
        "log2 m",
        "success fraction",
        &[Series {
            name: "avg risk <= eps",
            points: &pts,
        }],
        &format!("config_hash={hash} seed={seed}"),
    );
    write(&out_dir.join("width_sweep_logistic.svg"), &svg).map_err(|e| e.to_string())?;
    let monotone = fractions.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    Ok(verdict(
        "success fraction non-decreasing in m",
        monotone,
        &format!("{fractions:?}"),
    ))
}

#[allow(clippy::too_many_arguments)]
fn width_sweep_squared(
    seed: u64,
    n: usize,
    d: usize,
    epsilon: f64,
    dataset_seed: u64,
    widths: Option<Vec<usize>>,
    seeds_per_width: usize,
    out_dir: &Path,
    hash: &str,
) -> Result<bool, String> {
    let ds = dataset::gen_random_sphere(n, d, LabelMode::RandomSigns, dataset_seed)
        .map_err(|e| e.to_string())?;
    let lambda = kernel::min_eig(&kernel::h_cts(&ds).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let widths = widths.unwrap_or_else(|| vec![32, 64, 128, 256, 512, 1024]);
    let mut fractions = Vec::new();
    for &m in &widths {
        let results = parallel::map_indexed(seeds_per_width, |trial| {
            let mut cfg =
                match train::derive_squared_schedule(n, lambda, epsilon, Some(m)) {
                    Ok(c) => c,
                    Err(_) => return false,
                };
            cfg.seed = rng::mix64(seed ^ (m as u64) ^ ((trial as u64) << 32));
            match train::train_squared(&ds, &cfg) {
                Ok(trace) => {
                    let env = trace.envelope.as_ref().expect("squared envelope");
                    let env_ok = trace
                        .objective
                        .iter()
                        .zip(env)
                        .all(|(o, b)| *o <= b + 1e-12);
                    env_ok && trace.objective[trace.steps_executed] <= epsilon
                }
                Err(_) => false,
            }
        });
        fractions.push(results.iter().filter(|r| **r).count() as f64 / seeds_per_width as f64);
    }
    let mut csv = Csv::new();
    csv.comment("experiment", "width_sweep_squared")
        .comment("config_hash", hash)
        .comment("seed", seed)
        .comment("lambda", lambda)
        .comment("epsilon", epsilon)
        .header(&["m", "success_fraction"]);
    for (m, f) in widths.iter().zip(&fractions) {
        csv.row(&[m.to_string(), fmt_f64(*f)]);
    }
    write(&out_dir.join("width_sweep_squared.csv"), csv.finish()).map_err(|e| e.to_string())?;
    let pts: Vec<(f64, f64)> = widths
        .iter()
        .zip(&fractions)
        .map(|(&m, &f)| ((m as f64).log2(), f))
        .collect();
    let svg = svg_line_chart(
        "squared-loss success fraction vs width",
        "log2 m",
        "success fraction",
        &[Series {
            name: "envelope holds & target reached",
            points: &pts,
        }],
        &format!("config_hash={hash} seed={seed}"),
    );
    write(&out_dir.join("width_sweep_squared.svg"), &svg).map_err(|e| e.to_string())?;
    let monotone = fractions.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    Ok(verdict(
        "success fraction non-decreasing in m",
        monotone,
        &format!("{fractions:?}"),
    ))
}

fn convergence_curve(
    seed: u64,
    loss: train::Loss,
    n: usize,
    epsilon: f64,
    out_dir: &Path,
    hash: &str,
) -> Result<bool, String> {
    let (trace, label) = match loss {
        train::Loss::Logistic => {
            let ds = dataset::gen_alternating_circle(n).map_err(|e| e.to_string())?;
            let gamma = margin::margin_circle_exact(n).map_err(|e| e.to_string())?;
            let mut cfg = train::derive_logistic_schedule(n, gamma, epsilon, 0.1)
                .map_err(|e| e.to_string())?;
            cfg.seed = seed;
            (
                train::train_logistic(&ds, &cfg, None).map_err(|e| e.to_string())?,
                "risk",
            )
        }
        train::Loss::Squared => {
            let ds = dataset::gen_random_sphere(n, 6, LabelMode::RandomSigns, 27)
                .map_err(|e| e.to_string())?;
            let lambda = kernel::min_eig(&kernel::h_cts(&ds).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let mut cfg = train::derive_squared_schedule(n, lambda, epsilon.min(0.01), Some(1024))
                .map_err(|e| e.to_string())?;
            cfg.seed = seed;
            (
                train::train_squared(&ds, &cfg).map_err(|e| e.to_string())?,
                "residual_sq",
            )
        }
    };
    let mut csv = Csv::new();
    csv.comment("experiment", "convergence_curve")
        .comment("config_hash", hash)
        .comment("seed", seed)
        .header(&["step", label, "max_disp", "flips"]);
    // thin long traces to at most 2000 rows
    let t = trace.steps_executed;
    let stride = (t / 2000).max(1);
    for step in (0..=t).step_by(stride) {
        csv.row(&[
            step.to_string(),
            fmt_f64(trace.objective[step]),
            fmt_f64(trace.max_disp[step]),
            trace.flips[step].to_string(),
        ]);
    }
    write(&out_dir.join("convergence_curve.csv"), csv.finish()).map_err(|e| e.to_string())?;
    let pts: Vec<(f64, f64)> = (0..=t)
        .step_by(stride)
        .map(|s| (s as f64, trace.objective[s].max(1e-300).log10()))
        .collect();
    let svg = svg_line_chart(
        "convergence",
        "step",
        &format!("log10 {label}"),
        &[Series {
            name: label,
            points: &pts,
        }],
        &format!("config_hash={hash} seed={seed}"),
    );
    write(&out_dir.join("convergence_curve.svg"), &svg).map_err(|e| e.to_string())?;
    let decreased = trace.objective[t] < trace.objective[0];
    Ok(verdict(
        "objective decreased",
        decreased,
        &format!("{} -> {}", trace.objective[0], trace.objective[t]),
    ))
}

fn concentration_sweep(
    seed: u64,
    n: usize,
    seeds_per_point: usize,
    out_dir: &Path,
    hash: &str,
) -> Result<bool, String> {
    let ds = dataset::gen_alternating_circle(n).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for exp in 8..=14u32 {
        let m0 = 1usize << exp;
        let rep = kernel::concentration_check(&ds, m0, 2, 0.05, seeds_per_point, seed ^ exp as u64)
            .map_err(|e| e.to_string())?;
        rows.push((m0, rep.mean_frobenius_error));
    }
    let mut csv = Csv::new();
    csv.comment("experiment", "concentration_sweep")
        .comment("config_hash", hash)
        .comment("seed", seed)
        .header(&["m0", "mean_frobenius_error"]);
    for (m0, err) in &rows {
        csv.row(&[m0.to_string(), fmt_f64(*err)]);
    }
    write(&out_dir.join("concentration_sweep.csv"), csv.finish()).map_err(|e| e.to_string())?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|&(m0, e)| ((m0 as f64).ln(), e.ln()))
        .collect();
    let svg = svg_line_chart(
        "kernel concentration error vs width",
        "ln m0",
        "ln ||H_dis - H_cts||_F",
        &[Series {
            name: "mean error",
            points: &pts,
        }],
        &format!("config_hash={hash} seed={seed}"),
    );
    write(&out_dir.join("concentration_sweep.svg"), &svg).map_err(|e| e.to_string())?;
    let smean = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let ymean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let slope = pts
        .iter()
        .map(|p| (p.0 - smean) * (p.1 - ymean))
        .sum::<f64>()
        / pts.iter().map(|p| (p.0 - smean) * (p.0 - smean)).sum::<f64>();
    Ok(verdict(
        "fitted slope in [-0.6, -0.4]",
        (-0.6..=-0.4).contains(&slope),
        &format!("slope {slope:.3}"),
    ))
}

fn margin_table(seed: u64, samples: usize, out_dir: &Path, hash: &str) -> Result<bool, String> {
    let mut csv = Csv::new();
    csv.comment("experiment", "margin_table")
        .comment("config_hash", hash)
        .comment("seed", seed)
        .comment("samples", samples)
        .header(&["instance", "gamma_mc", "pooled_mc", "std_error", "reference"]);
    let mut all_ok = true;
    // the symmetric instances have identical per-point margins, so the pooled
    // per-point mean is the unbiased estimator of the common value (the min
    // is biased low by a few SE at table sample counts)
    let pooled = |est: &margin::MarginEstimate| {
        est.per_point.iter().sum::<f64>() / est.per_point.len() as f64
    };
    let max_se =
        |est: &margin::MarginEstimate| est.std_errors.iter().copied().fold(0.0f64, f64::max);
    for n in [8usize, 16, 32, 64] {
        let ds = dataset::gen_alternating_circle(n).map_err(|e| e.to_string())?;
        let est = margin::margin_mc(&ds, &VBarMap::circle_rz(n).map_err(|e| e.to_string())?, samples, seed)
            .map_err(|e| e.to_string())?;
        let exact = margin::margin_circle_exact(n).map_err(|e| e.to_string())?;
        let (mean, se) = (pooled(&est), max_se(&est));
        all_ok &= verdict(
            &format!("circle n={n} pooled estimate within 3 SE of the exact sum"),
            (mean - exact).abs() <= 3.0 * se,
            &format!("{mean:.5} vs {exact:.5}"),
        );
        csv.row(&[
            format!("circle_{n}"),
            fmt_f64(est.gamma),
            fmt_f64(mean),
            fmt_f64(se),
            fmt_f64(exact),
        ]);
    }
    for d in 2..=8usize {
        let labels: Vec<f64> = (0..2 * d).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let ds = dataset::gen_orthobasis(d, &labels).map_err(|e| e.to_string())?;
        let est = margin::margin_mc(&ds, &VBarMap::natural_v0(&ds), samples, seed ^ d as u64)
            .map_err(|e| e.to_string())?;
        let reference = 0.5 / (d as f64).sqrt();
        let (mean, se) = (pooled(&est), max_se(&est));
        all_ok &= verdict(
            &format!("orthobasis d={d} pooled estimate within 3 SE of 1/(2 sqrt(d))"),
            (mean - reference).abs() <= 3.0 * se,
            &format!("{mean:.5} vs {reference:.5}"),
        );
        csv.row(&[
            format!("orthobasis_{d}"),
            fmt_f64(est.gamma),
            fmt_f64(mean),
            fmt_f64(se),
            fmt_f64(reference),
        ]);
    }
    for b in [0.1, 0.3, 0.5] {
        let ds = dataset::gen_two_points(b).map_err(|e| e.to_string())?;
        let est = margin::margin_mc(&ds, &VBarMap::natural_v0(&ds), samples, seed ^ 77)
            .map_err(|e| e.to_string())?;
        let se = est.std_errors[est.argmin()];
        all_ok &= verdict(
            &format!("two points b={b} below b/2 + 3 SE"),
            est.gamma <= b / 2.0 + 3.0 * se,
            &format!("{:.5} vs {:.5}", est.gamma, b / 2.0),
        );
        csv.row(&[
            format!("two_points_{b}"),
            fmt_f64(est.gamma),
            fmt_f64(pooled(&est)),
            fmt_f64(se),
            fmt_f64(b / 2.0),
        ]);
    }
    for d in [3usize, 4] {
        let ds = dataset::gen_hypercube(d, HypercubeLabeling::Parity).map_err(|e| e.to_string())?;
        let subset: Vec<usize> = (0..ds.n()).collect();
        let (ub, se) = margin::margin_upper_bound_mc(&ds, &subset, samples, seed ^ 99)
            .map_err(|e| e.to_string())?;
        if d % 2 == 1 {
            all_ok &= verdict(
                &format!("hypercube parity d={d} margin bound is exactly zero"),
                ub == 0.0,
                &format!("{ub:e}"),
            );
        }
        csv.row(&[
            format!("hypercube_parity_{d}"),
            fmt_f64(ub),
            fmt_f64(ub),
            fmt_f64(se),
            if d % 2 == 1 { "0".into() } else { ">0".into() },
        ]);
    }
    write(&out_dir.join("margin_table.csv"), csv.finish()).map_err(|e| e.to_string())?;
    Ok(all_ok)
}

fn lowerbound_suite(seed: u64, out_dir: &Path, hash: &str) -> Result<bool, String> {
    use ntklab_core::bounds;
    use ntklab_core::linalg::Mat;
    use ntklab_core::network::{NetParams, ScaleMode};
    let n = 60usize;
    let m = 6usize;
    let ds = dataset::gen_alternating_circle(n).map_err(|e| e.to_string())?;
    let mut min_miss = usize::MAX;
    let mut max_breaks = 0usize;
    let mut csv = Csv::new();
    csv.comment("experiment", "lowerbound_suite")
        .comment("config_hash", hash)
        .comment("seed", seed)
        .header(&["net", "breakpoints", "segments", "misclassified"]);
    for trial in 0..20u64 {
        // unpaired random nets, so outputs are nonzero and the bound is
        // exercised nontrivially
        let mut r = rng::substream(seed, &[0x1b, trial]);
        let mut weights = Mat::zeros(m, 2);
        for row in 0..m {
            let w = rng::gaussian_vec(&mut r, 2);
            weights.row_mut(row).copy_from_slice(&w);
        }
        let params = NetParams {
            signs: (0..m).map(|_| rng::random_sign(&mut r)).collect(),
            weights,
            scale_mode: ScaleMode::InvSqrtM,
            paired: false,
        };
        let rep = bounds::count_segments(&params, &ds).map_err(|e| e.to_string())?;
        min_miss = min_miss.min(rep.misclassified);
        max_breaks = max_breaks.max(rep.breakpoint_count);
        csv.row(&[
            format!("random_{trial}"),
            rep.breakpoint_count.to_string(),
            rep.segment_count.to_string(),
            rep.misclassified.to_string(),
        ]);
    }
    let mut ok = verdict(
        "narrow nets misclassify more than eps n / 3 points",
        min_miss > 2,
        &format!("min misclassified {min_miss} (m = {m}, n = {n})"),
    );
    ok &= verdict(
        "breakpoints within 2m + 4",
        max_breaks <= 2 * m + 4,
        &format!("max {max_breaks}"),
    );
    let n_prime = 256usize;
    let draws = (n_prime as f64 * (n_prime as f64).ln() - n_prime as f64).floor() as usize;
    let rate = bounds::coupon_collector_sim(n_prime, draws, 2000, seed ^ 0xcc)
        .map_err(|e| e.to_string())?;
    ok &= verdict(
        "coupon collector uncovered rate >= 0.85",
        rate >= 0.85,
        &format!("rate {rate:.3} at m = {draws}"),
    );
    let (zp, zse) = bounds::zi_measure_mc(n, 0, 200_000, seed ^ 0xcd).map_err(|e| e.to_string())?;
    ok &= verdict(
        "Z_i measure = 6/n within 3 SE",
        (zp - 0.1).abs() <= 3.0 * zse,
        &format!("estimate {zp:.5}"),
    );
    csv.comment("coupon_uncovered_rate", rate)
        .comment("zi_measure", zp);
    write(&out_dir.join("lowerbound_suite.csv"), csv.finish()).map_err(|e| e.to_string())?;
    Ok(ok)
}

/// Exploratory: margin of random labels on the sphere in ~log(n) dimensions.
/// No pass/fail; the conjectured behavior is gamma = Omega(1/sqrt(n)).
fn conjecture_sweep(
    seed: u64,
    sizes: Option<Vec<usize>>,
    samples: usize,
    out_dir: &Path,
    hash: &str,
) -> Result<bool, String> {
    let sizes = sizes.unwrap_or_else(|| vec![16, 32, 64, 128]);
    let mut csv = Csv::new();
    csv.comment("experiment", "conjecture_sweep")
        .comment("config_hash", hash)
        .comment("seed", seed)
        .comment("note", "exploratory sweep, no pass/fail")
        .header(&["n", "d", "gamma_v0_mc", "std_error", "sqrt_n_times_gamma"]);
    let mut pts = Vec::new();
    for &n in &sizes {
        let d = ((n as f64).ln().ceil() as usize).max(2);
        let ds = dataset::gen_random_sphere(n, d, LabelMode::RandomSigns, seed ^ n as u64)
            .map_err(|e| e.to_string())?;
        let est = margin::margin_mc(&ds, &VBarMap::natural_v0(&ds), samples, seed ^ (n as u64) << 8)
            .map_err(|e| e.to_string())?;
        let se = est.std_errors[est.argmin()];
        println!(
            "  n={n} d={d}: gamma_v0 = {:.5} +- {:.5}, sqrt(n) gamma = {:.3}",
            est.gamma,
            se,
            (n as f64).sqrt() * est.gamma
        );
        csv.row(&[
            n.to_string(),
            d.to_string(),
            fmt_f64(est.gamma),
            fmt_f64(se),
            fmt_f64((n as f64).sqrt() * est.gamma),
        ]);
        pts.push(((n as f64).ln(), est.gamma.max(1e-12).ln()));
    }
    write(&out_dir.join("conjecture_sweep.csv"), csv.finish()).map_err(|e| e.to_string())?;
    let svg = svg_line_chart(
        "margin of random labels on the sphere",
        "ln n",
        "ln gamma_v0",
        &[Series {
            name: "gamma_v0",
            points: &pts,
        }],
        &format!("config_hash={hash} seed={seed}"),
    );
    write(&out_dir.join("conjecture_sweep.svg"), &svg).map_err(|e| e.to_string())?;
    Ok(true)
}
