//! The acceptance suite: thirteen named criteria combining the exact finite
//! statements of the analysis with property and oracle checks. Each runner
//! returns a structured report; the `acceptance` test target and the CLI
//! `selftest` subcommand both drive these.
//!
//! Check lines marked `asserted = false` are evaluated and reported but do
//! not gate the criterion (used where a schedule premise is knowingly out of
//! reach at desk scale).

use crate::bounds;
use crate::dataset::{self, HypercubeLabeling, LabelMode};
use crate::kernel;
use crate::linalg;
use crate::margin::{self, VBarMap};
use crate::network::{self, coupled_init, InitConfig, ScaleMode};
use crate::parallel;
use crate::rng::{self, tag};
use crate::train;
use crate::Result;
use serde::Serialize;
use std::time::Instant;

#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub label: String,
    pub passed: bool,
    pub asserted: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<CheckLine>,
}

impl CriterionReport {
    pub fn summary_line(&self) -> String {
        format!(
            "criterion {:2} [{}] {:6.1}s  {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.seconds,
            self.title
        )
    }
}

pub const CRITERIA: [(usize, &str); 13] = [
    (1, "zero output at coupled initialization"),
    (2, "exact alternating-circle margin"),
    (3, "orthobasis margin composition"),
    (4, "hypercube parity margin vanishes for odd d"),
    (5, "two-point cone probability and margin bounds"),
    (6, "kernel concentration at the lemma width"),
    (7, "kernel perturbation bound"),
    (8, "squared-loss linear convergence"),
    (9, "logistic-loss average risk schedule"),
    (10, "separator margins at prescribed widths"),
    (11, "piecewise-linear and coupon-collector lower bounds"),
    (12, "natural-estimator failure direction"),
    (13, "loss gradients match finite differences"),
];

struct Checks(Vec<CheckLine>);

impl Checks {
    fn new() -> Checks {
        Checks(Vec::new())
    }

    fn assert(&mut self, label: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.0.push(CheckLine {
            label: label.into(),
            passed,
            asserted: true,
            detail: detail.into(),
        });
    }

    fn report(&mut self, label: impl Into<String>, outcome: bool, detail: impl Into<String>) {
        self.0.push(CheckLine {
            label: label.into(),
            passed: outcome,
            asserted: false,
            detail: detail.into(),
        });
    }

    fn finish(self, id: usize, started: Instant) -> CriterionReport {
        let title = CRITERIA
            .iter()
            .find(|(cid, _)| *cid == id)
            .map(|(_, t)| *t)
            .unwrap_or("unknown");
        let passed = self.0.iter().filter(|c| c.asserted).all(|c| c.passed);
        CriterionReport {
            id,
            title,
            passed,
            seconds: started.elapsed().as_secs_f64(),
            checks: self.0,
        }
    }
}

pub fn run_criterion(id: usize, seed: u64) -> Result<CriterionReport> {
    match id {
        1 => criterion_01(seed),
        2 => criterion_02(seed),
        3 => criterion_03(seed),
        4 => criterion_04(seed),
        5 => criterion_05(seed),
        6 => criterion_06(seed),
        7 => criterion_07(seed),
        8 => criterion_08(seed),
        9 => criterion_09(seed),
        10 => criterion_10(seed),
        11 => criterion_11(seed),
        12 => criterion_12(seed),
        13 => criterion_13(seed),
        other => Err(crate::Error::invalid(format!("no criterion {other}"))),
    }
}

pub fn run_all(seed: u64) -> Result<Vec<CriterionReport>> {
    CRITERIA
        .iter()
        .map(|(id, _)| run_criterion(*id, seed))
        .collect()
}

/// 1: coupled initialization yields exactly zero network output.
fn criterion_01(seed: u64) -> Result<CriterionReport> {
    let started = Instant::now();
    let mut checks = Checks::new();
    let mut worst: f64 = 0.0;
    let mut cases = 0usize;
    for trial in 0..50u64 {
        let s = rng::mix64(seed ^ trial);
        let ds = match trial % 5 {
            0 => dataset::gen_alternating_circle(4 * (1 + (trial as usize % 5)))?,
            1 => {
                let d = 2 + trial as usize % 4;
                let labels: Vec<f64> = (0..2 * d)
                    .map(|i| if (i + trial as usize) % 2 == 0 { 1.0 } else { -1.0 })
                    .collect();
                dataset::gen_orthobasis(d, &labels)?
            }
            2 => dataset::gen_hypercube(
                2 + trial as usize % 3,
                if trial % 2 == 0 {
                    HypercubeLabeling::Parity
                } else {
                    HypercubeLabeling::Majority
                },
            )?,
            3 => dataset::gen_two_points(0.1 + 0.05 * (trial as f64 % 10.0))?,
            _ => dataset::gen_random_sphere(6 + trial as usize % 10, 2 + trial as usize % 6, LabelMode::RandomSigns, s)?,
        };
        let mode = if trial % 2 == 0 {
            ScaleMode::InvSqrtM
        } else {
            ScaleMode::Unnormalized
        };
        let beta = [1.0, 1e4, 1e8][trial as usize % 3];
        let params = coupled_init(
            &InitConfig {
                m: 2 * (4 + trial as usize % 60),
                d: ds.d(),
                beta,
                seed: s,
            },
            mode,
        )?;
        let u = network::forward_all(&params, &ds)?;
        worst = worst.max(u.iter().fold(0.0f64, |a, &v| a.max(v.abs())));
        cases += 1;
    }
    checks.assert(
        "max |f_i(W_0)| = 0 exactly over 50 (dataset, seed) pairs",
        worst == 0.0,
        format!("worst |f_i(W_0)| = {worst:e} over {cases} cases"),
    );
    Ok(checks.finish(1, started))
}

/// 2: exact circle margin values, Monte-Carlo agreement, 1/n scaling.
fn criterion_02(seed: u64) -> Result<CriterionReport> {
    let started = Instant::now();
    let mut checks = Checks::new();
    let g8 = margin::margin_circle_exact(8)?;
    checks.assert(
        "margin_circle_exact(8) = 0.135299",
        (g8 - 0.135299).abs() < 1e-6,
        format!("got {g8:.9}"),
    );
    let g4 = margin::margin_circle_exact(4)?;
    checks.assert(
        "margin_circle_exact(4) = sqrt(2)/4",
        (g4 - 2f64.sqrt() / 4.0).abs() < 1e-15,
        format!("got {g4:.15}"),
    );
    let n = 12;
    let ds = dataset::gen_alternating_circle(n)?;
    let est = margin::margin_mc(&ds, &VBarMap::circle_rz(n)?, 1_000_000, seed)?;
    let exact = margin::margin_circle_exact(n)?;
    let se = est.std_errors[est.argmin()];
    checks.assert(
        "MC margin (n=12, 1e6 samples) within 3 SE of exact",
        (est.gamma - exact).abs() <= 3.0 * se,
        format!("gamma {:.6} vs exact {exact:.6}, se {se:.2e}", est.gamma),
    );
    let mut scaled_ok = true;
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    for k in (8..=256).step_by(4) {
        let v = k as f64 * margin::margin_circle_exact(k)?;
        range = (range.0.min(v), range.1.max(v));
        scaled_ok &= (0.5..=2.0).contains(&v);
    }
    checks.assert(
        "n * gamma(n) in [0.5, 2] for n in {8..256}",
        scaled_ok,
        format!("observed range [{:.4}, {:.4}]", range.0, range.1),
    );
    Ok(checks.finish(2, started))
}

/// 3: orthobasis margin composes to 1/(2 sqrt(d)).
fn criterion_03(seed: u64) -> Result<CriterionReport> {
    let started = Instant::now();
    let mut checks = Checks::new();
    let mut compose_ok = true;
    for d in 1..=16usize {
        let composed = margin::compose_margins(&vec![0.5; d])?;
        compose_ok &= (composed - 0.5 / (d as f64).sqrt()).abs() <= 1e-12;
    }
    checks.assert(
        "compose_margins of d halves = 1/(2 sqrt(d)) to 1e-12, d = 1..16",
        compose_ok,
        "closed-form maximin over rho",
    );
    let d = 4;
    let labels: Vec<f64> = (0..2 * d).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let ds = dataset::gen_orthobasis(d, &labels)?;
    // the normalized cone sum realizes the composed per-subspace map here
    let est = margin::margin_mc(&ds, &VBarMap::natural_v0(&ds), 200_000, seed)?;
    let se = est.std_errors[est.argmin()];
    checks.assert(
        "MC margin on d=4 orthobasis within 3 SE of 0.25",
        (est.gamma - 0.25).abs() <= 3.0 * se,
        format!("gamma {:.5}, se {se:.2e}", est.gamma),
    );
    Ok(checks.finish(3, started))
}

/// 4: hypercube parity with odd d has exactly vanishing cone sums.
fn criterion_04(seed: u64) -> Result<CriterionReport> {
    let started = Instant::now();
    let mut checks = Checks::new();
    let ds = dataset::gen_hypercube(3, HypercubeLabeling::Parity)?;
    let samples = 100_000usize;
    let violations = parallel::map_reduce_blocks(
        samples,
        parallel::MC_BLOCK,
        |range| {
            let block = range.start / parallel::MC_BLOCK;
            let mut r = rng::substream(seed, &[tag::MC, 0x04, block as u64]);
            let mut bad = 0usize;
            for _ in range {
                let z = rng::gaussian_vec(&mut r, 3);
                let mut sum = [0.0; 3];
                for (x, &y) in ds.points.iter().zip(&ds.labels) {
                    if linalg::dot(&z, x) > 0.0 {
                        for (s, xv) in sum.iter_mut().zip(x) {
                            *s += y * xv;
                        }
                    }
                }
                if linalg::norm2(&sum) > 1e-9 {
                    bad += 1;
                }
            }
            bad
        },
        |a, b| a + b,
    )
    .unwrap_or(0);
    checks.assert(
        "cone sums vanish within 1e-9 on 1e5 Gaussian samples (d=3 parity)",
        violations == 0,
        format!("{violations} violations"),
    );
    let subset: Vec<usize> = (0..ds.n()).collect();
    let (ub, ub_se) = margin::margin_upper_bound_mc(&ds, &subset, 100_000, seed ^ 1)?;
    checks.assert(
        "margin upper bound estimate = 0 +- 0",
        ub == 0.0 && ub_se == 0.0,
        format!("estimate {ub:e} +- {ub_se:e}"),
    );
    Ok(checks.finish(4, started))
}

/// 5: two-point instance: cone probability bracket and b/2 margin bound.
fn criterion_05(seed: u64) -> Result<CriterionReport> {
    let started = Instant::now();
    let mut checks = Checks::new();
    for (k, b) in [0.1, 0.3, 0.5].into_iter().enumerate() {
        let rep = margin::cone_probability_check(b, 200_000, seed ^ k as u64)?;
        checks.assert(
            format!("cone probability in [b/7 - 3SE, b/5 + 3SE] at b = {b}"),
            rep.estimate >= rep.lower - 3.0 * rep.std_error
                && rep.estimate <= rep.upper + 3.0 * rep.std_error,
            format!(
                "estimate {:.5} (exact {:.5}), bracket [{:.5}, {:.5}]",
                rep.estimate, rep.exact, rep.lower, rep.upper
            ),
        );
        let ds = dataset::gen_two_points(b)?;
        let est = margin::margin_mc(&ds, &VBarMap::natural_v0(&ds), 200_000, seed ^ (k as u64 + 8))?;
        let se = est.std_errors[est.argmin()];
        checks.assert(
            format!("MC margin <= b/2 + 3SE at b = {b}"),
            est.gamma <= b / 2.0 + 3.0 * se,
            format!("gamma {:.5} vs b/2 = {:.5}", est.gamma, b / 2.0),
        );
    }
    Ok(checks.finish(5, started))
}

/// 6: kernel concentration on the alternating circle at the lemma width.
///
/// The alternating-circle kernel is exactly singular (its angular profile has
/// vanishing odd harmonics >= 3), so lambda = 0 and the stated Frobenius
/// bound `||H_dis - H_cts||_F <= lambda/4` cannot hold at any finite width.
/// The checks below run the criterion exactly as stated; the error-slope part
/// is well-posed and passes, the lambda-gated part fails.
fn criterion_06(seed: u64) -> Result<CriterionReport> {
    let started = Instant::now();
    let mut checks = Checks::new();
    let n = 8usize;
    let ds = dataset::gen_alternating_circle(n)?;
    let lambda = kernel::min_eig(&kernel::h_cts(&ds)?)?;
    let delta = 0.05;
    let b_copies = 2usize;
    let m0_formula =
        16.0 / (lambda * lambda) * (n * n) as f64 * (2.0 * (n * n * b_copies) as f64 / delta).ln();
    let m0 = if m0_formula.is_finite() && m0_formula > 0.0 {
        (m0_formula.ceil() as usize).min(1 << 17)
    } else {
        1 << 17
    };
    checks.report(
        "lambda(H_cts) of the circle instance",
        true,
        format!("lambda = {lambda:.3e} (exactly singular kernel), m0 capped at {m0}"),
    );
    let rep = kernel::concentration_check(&ds, m0, b_copies, delta, 20, seed)?;
    checks.assert(
        ">= 18/20 seeds meet ||H_dis - H_cts||_F <= lambda/4 and lambda_min >= 3 lambda/4",
        rep.pass_rate >= 0.9,
        format!(
            "pass rate {:.2}, mean error {:.3e} vs lambda/4 = {:.3e} (unattainable: lambda = 0)",
            rep.pass_rate,
            rep.mean_frobenius_error,
            lambda / 4.0
        ),
    );
    // error slope over m0 in {2^8 .. 2^14}, 10 seeds each
    let mut pts = Vec::new();
    for exp in 8..=14u32 {
        let m0_grid = 1usize << exp;
        let r = kernel::concentration_check(&ds, m0_grid, b_copies, delta, 10, seed ^ exp as u64)?;
        pts.push(((m0_grid as f64).ln(), r.mean_frobenius_error.ln()));
    }
    let slope = least_squares_slope(&pts);
    checks.assert(
        "fitted log-log error slope vs m0 in [-0.6, -0.4]",
        (-0.6..=-0.4).contains(&slope),
        format!("slope {slope:.3}"),
    );
    // the same lemma check on an instance with a genuinely positive lambda
    let sphere = dataset::gen_random_sphere(8, 6, LabelMode::RandomSigns, 27)?;
    let lam_s = kernel::min_eig(&kernel::h_cts(&sphere)?)?;
    let m0_s = ((16.0 / (lam_s * lam_s) * 64.0 * (2.0 * 128.0 / delta as f64).ln()).ceil()
        as usize)
        .min(1 << 17);
    let rep_s = kernel::concentration_check(&sphere, m0_s, b_copies, delta, 20, seed ^ 99)?;
    checks.report(
        "supplementary: same check on a sphere instance with lambda > 0",
        rep_s.pass_rate >= 0.9,
        format!(
            "lambda {:.4}, m0 {}, pass rate {:.2}, mean error {:.3e}",
            lam_s, m0_s, rep_s.pass_rate, rep_s.mean_frobenius_error
        ),
    );
    Ok(checks.finish(6, started))
}

/// 7: perturbation bound `||H(w) - H(w~)||_F < 2 n R`.
fn criterion_07(seed: u64) -> Result<CriterionReport> {
    let started = Instant::now();
    let mut checks = Checks::new();
    let ds = dataset::gen_alternating_circle(8)?;
    let rep = kernel::perturbation_check(&ds, 0.01, 4096, 20, seed)?;
    checks.assert(
        ">= 19/20 trials satisfy ||H(w) - H(w~)||_F < 2 n R",
        rep.pass_rate >= 0.95,
        format!(
            "pass rate {:.2}, mean distance {:.3e} vs bound {:.3e}",
            rep.pass_rate, rep.mean_distance, rep.bound
        ),
    );
    Ok(checks.finish(7, started))
}

/// 8: squared-loss linear convergence under the derived schedule.
fn criterion_08(seed: u64) -> Result<CriterionReport> {
    let started = Instant::now();
    let mut checks = Checks::new();
    let n = 8usize;
    // fixed instance with a healthy spectrum (lambda ~ 0.22)
    let ds = dataset::gen_random_sphere(n, 6, LabelMode::RandomSigns, 27)?;
    let lambda = kernel::min_eig(&kernel::h_cts(&ds)?)?;
    let m_derived = (4.0 * (n * n) as f64 / (lambda * lambda)).ceil() as usize;
    let m = m_derived.min(1 << 14);
    let epsilon = 1e-3;
    let base = train::derive_squared_schedule(n, lambda, epsilon, Some(m))?;
    let initial_residual = (n as f64).sqrt(); // u(0) = 0, labels are +-1
    let d_bound = train::lemma_displacement_bound(n, initial_residual, base.m, lambda);

    let trials = 20usize;
    let results = parallel::map_indexed(trials, |trial| {
        let mut cfg = base.clone();
        cfg.seed = rng::mix64(seed ^ trial as u64);
        if trial == 0 {
            cfg.audit_r_ball = Some(2.0 * d_bound);
        }
        let trace = train::train_squared(&ds, &cfg).expect("schedule runs");
        let t = trace.steps_executed;
        let env = trace.envelope.as_ref().expect("squared trace has envelope");
        let envelope_ok = trace
            .objective
            .iter()
            .zip(env)
            .all(|(o, b)| *o <= b + 1e-12);
        let reached = trace.objective[t] <= cfg.epsilon;
        let movement = train::weight_movement_check(&trace, d_bound, cfg.r_ball);
        let worst_gap = trace
            .decomposition
            .as_ref()
            .map(|dec| dec.iter().map(|d| d.identity_gap_rel).fold(0.0f64, f64::max));
        let monotone = trace.objective.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        (envelope_ok, reached, movement, worst_gap, monotone, t)
    });
    let good = results.iter().filter(|r| r.0 && r.1).count();
    checks.assert(
        ">= 18/20 seeds: envelope holds at every step down to eps = 1e-3",
        good >= 18,
        format!("{good}/20 seeds, steps to target ~ {}", results[0].5),
    );
    let audit_gap = results[0].3.expect("first seed audited");
    checks.assert(
        "step-decomposition identity gap <= 1e-8 on every audited step",
        audit_gap <= 1e-8,
        format!("worst relative gap {audit_gap:.2e} (flip radius 2D)"),
    );
    let move_ok = results.iter().filter(|r| r.2.movement_ok).count();
    checks.assert(
        "max weight movement <= D on all seeds",
        move_ok == trials,
        format!(
            "{move_ok}/{trials} seeds, worst movement {:.2e} vs D = {d_bound:.2e}",
            results
                .iter()
                .map(|r| r.2.max_disp)
                .fold(0.0f64, f64::max)
        ),
    );
    let monotone = results.iter().filter(|r| r.4).count();
    checks.report(
        "residual nonincreasing at the derived step size",
        monotone == trials,
        format!("{monotone}/{trials} seeds"),
    );
    checks.report(
        "schedule premise D < R",
        d_bound < base.r_ball,
        format!(
            "D = {d_bound:.3e}, R = {:.3e}: premise needs m >= 256 n^2 / lambda^2, \
             desk-scale width is m = {} (reported, not asserted)",
            base.r_ball, base.m
        ),
    );
    Ok(checks.finish(8, started))
}

/// 9: logistic schedule reaches average risk epsilon with frozen activations.
fn criterion_09(seed: u64) -> Result<CriterionReport> {
    let started = Instant::now();
    let mut checks = Checks::new();
    let n = 8usize;
    let ds = dataset::gen_alternating_circle(n)?;
    let gamma = margin::margin_circle_exact(n)?;
    let epsilon = 0.2;
    let delta = 0.1;
    let base = train::derive_logistic_schedule(n, gamma, epsilon, delta)?;
    let map = VBarMap::circle_rz(n)?;

    let trials = 20usize;
    let results = parallel::map_indexed(trials, |trial| {
        let mut cfg = base.clone();
        cfg.seed = rng::mix64(seed ^ (0x900 + trial as u64));
        let params = coupled_init(
            &InitConfig {
                m: cfg.m,
                d: 2,
                beta: cfg.beta,
                seed: cfg.seed,
            },
            ScaleMode::InvSqrtM,
        )
        .expect("valid init");
        let sep = margin::build_separator(&params, &map).expect("separator");
        let trace = train::train_logistic(&ds, &cfg, Some(&sep)).expect("run");
        let avg = trace.average_objective();
        let zero_flips = trace.flips.iter().all(|&f| f == 0);
        let descent = train::descent_inequality_check(&trace, &sep, cfg.rho, cfg.eta)
            .expect("series recorded");
        let surr_ok = descent.max_surrogate <= epsilon / 4.0;
        (avg, zero_flips, descent, surr_ok)
    });
    let all_four = results
        .iter()
        .filter(|(avg, zf, desc, surr)| *avg <= epsilon && *zf && desc.per_step_ok && desc.summed_ok && *surr)
        .count();
    checks.assert(
        ">= 18/20 seeds: avg risk <= eps, zero flips, descent inequality, surrogate <= eps/4",
        all_four >= 18,
        format!(
            "{all_four}/20 seeds; avg risk range [{:.4}, {:.4}]",
            results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min),
            results.iter().map(|r| r.0).fold(0.0f64, f64::max)
        ),
    );
    let descent_all = results.iter().filter(|r| r.2.per_step_ok).count();
    checks.assert(
        "descent inequality holds per step on every seed",
        descent_all == trials,
        format!(
            "worst relative violation {:.2e}",
            results
                .iter()
                .map(|r| r.2.max_violation_rel)
                .fold(0.0f64, f64::max)
        ),
    );
    let zero_flip_seeds = results.iter().filter(|r| r.1).count();
    checks.report(
        "activation flips vs t = 0",
        zero_flip_seeds >= 18,
        format!("{zero_flip_seeds}/20 seeds with zero flips throughout"),
    );
    Ok(checks.finish(9, started))
}

/// 10: the empirical-mean separator reaches gamma/2 and the 2-D net
/// construction reaches gamma/4 at their prescribed widths.
fn criterion_10(seed: u64) -> Result<CriterionReport> {
    let started = Instant::now();
    let mut checks = Checks::new();
    let n = 8usize;
    let ds = dataset::gen_alternating_circle(n)?;
    let gamma = margin::margin_circle_exact(n)?;
    let delta: f64 = 0.1;
    let map = VBarMap::circle_rz(n)?;

    let m_half = (8.0 * (2.0 * n as f64 / delta).ln() / (gamma * gamma)).ceil() as usize;
    let m_e1 = 2 * m_half;
    let trials = 20usize;
    let hits = parallel::map_indexed(trials, |trial| {
        let params = coupled_init(
            &InitConfig {
                m: m_e1,
                d: 2,
                beta: 1.0,
                seed: rng::mix64(seed ^ (0xa00 + trial as u64)),
            },
            ScaleMode::InvSqrtM,
        )
        .expect("init");
        let sep = margin::build_separator(&params, &map).expect("separator");
        let margins = margin::ntk_margin_at_init(&params, &ds, &sep).expect("margins");
        margins.iter().all(|&v| v >= gamma / 2.0)
    });
    let e1_pass = hits.iter().filter(|h| **h).count();
    checks.assert(
        format!(">= 17/20 seeds reach gamma/2 with the empirical-mean separator (m = {m_e1})"),
        e1_pass >= 17,
        format!("{e1_pass}/20 seeds"),
    );

    let k_const = 300.0;
    let mut m_2d = (k_const * (n as f64 / delta).ln() / gamma).ceil() as usize;
    m_2d += m_2d % 2;
    let hits2 = parallel::map_indexed(trials, |trial| {
        let params = coupled_init(
            &InitConfig {
                m: m_2d,
                d: 2,
                beta: 1.0,
                seed: rng::mix64(seed ^ (0xb00 + trial as u64)),
            },
            ScaleMode::InvSqrtM,
        )
        .expect("init");
        let built = margin::build_separator_2d(&params, &ds, &map, gamma, delta).expect("net");
        let margins =
            margin::ntk_margin_at_init(&params, &ds, &built.separator).expect("margins");
        margins.iter().all(|&v| v >= gamma / 4.0)
    });
    let f2_pass = hits2.iter().filter(|h| **h).count();
    checks.assert(
        format!(">= 17/20 seeds reach gamma/4 with the 2-D net separator (K = 300, m = {m_2d})"),
        f2_pass >= 17,
        format!("{f2_pass}/20 seeds"),
    );
    Ok(checks.finish(10, started))
}

/// 11: narrow networks misclassify the circle; coupon-collector coverage.
fn criterion_11(seed: u64) -> Result<CriterionReport> {
    let started = Instant::now();
    let mut checks = Checks::new();
    let n = 60usize;
    let ds = dataset::gen_alternating_circle(n)?;
    let m = 6usize;

    // 20 random (unpaired, so outputs are nonzero) + 5 trained parameter sets
    let mut nets = Vec::new();
    for trial in 0..20u64 {
        let mut r = rng::substream(seed, &[tag::TRIAL, 0xc00, trial]);
        let mut weights = crate::linalg::Mat::zeros(m, 2);
        for row in 0..m {
            let w = rng::gaussian_vec(&mut r, 2);
            weights.row_mut(row).copy_from_slice(&w);
        }
        let signs: Vec<f64> = (0..m).map(|_| rng::random_sign(&mut r)).collect();
        nets.push(network::NetParams {
            weights,
            signs,
            scale_mode: ScaleMode::InvSqrtM,
            paired: false,
        });
    }
    let trained: Vec<network::NetParams> = parallel::map_indexed(5, |trial| {
        let cfg = train::TrainConfig {
            loss: train::Loss::Logistic,
            epsilon: 0.2,
            delta: 0.1,
            gamma: None,
            lambda: None,
            m,
            eta: 1.0,
            steps: 500,
            beta: 1.0,
            rho: 0.0,
            r_ball: 0.0,
            seed: rng::mix64(seed ^ (0xd00 + trial as u64)),
            stop_at_target: false,
            audit_r_ball: None,
        };
        train::train_logistic(&ds, &cfg, None).expect("short run").final_params
    });
    nets.extend(trained);
    let mut min_miss = usize::MAX;
    let mut max_breaks = 0usize;
    for params in &nets {
        let rep = bounds::count_segments(params, &ds)?;
        min_miss = min_miss.min(rep.misclassified);
        max_breaks = max_breaks.max(rep.breakpoint_count);
    }
    checks.assert(
        "every tested net (20 random + 5 trained) misclassifies >= 3 of 60 points",
        min_miss >= 3,
        format!("minimum misclassified {min_miss}"),
    );
    checks.assert(
        "breakpoints <= 2m + 4 for all tested nets",
        max_breaks <= 2 * m + 4,
        format!("max breakpoints {max_breaks} vs bound {}", 2 * m + 4),
    );

    let n_prime = 256usize;
    let draws = (n_prime as f64 * (n_prime as f64).ln() - n_prime as f64).floor() as usize;
    let uncovered = bounds::coupon_collector_sim(n_prime, draws, 2000, seed ^ 0xe0)?;
    checks.assert(
        format!("coupon collector: uncovered rate >= 0.85 at m = {draws}, n' = 256"),
        uncovered >= 0.85,
        format!("uncovered rate {uncovered:.3} (limit value 1 - e^-e ~ 0.934)"),
    );
    let (zp, zse) = bounds::zi_measure_mc(n, 0, 200_000, seed ^ 0xe1)?;
    checks.assert(
        "Z_i Gaussian measure = 6/n within 3 SE",
        (zp - 6.0 / n as f64).abs() <= 3.0 * zse,
        format!("estimate {zp:.5} vs 6/n = {:.5}, se {zse:.2e}", 6.0 / n as f64),
    );
    Ok(checks.finish(11, started))
}

/// 12: failure rate of the natural estimator decreases with width.
fn criterion_12(seed: u64) -> Result<CriterionReport> {
    let started = Instant::now();
    let mut checks = Checks::new();
    let n = 32usize;
    let rates: Vec<f64> = [16usize, 64, 256]
        .iter()
        .map(|&mp| bounds::empirical_mean_failure_sim(n, mp, 2000, seed ^ mp as u64))
        .collect::<Result<_>>()?;
    checks.assert(
        "failure rate strictly decreasing over m' in {16, 64, 256}",
        rates[0] > rates[1] && rates[1] > rates[2],
        format!("rates {rates:?}"),
    );
    checks.assert(
        "failure rate positive at m' = 16",
        rates[0] > 0.0,
        format!("rate {:.3}", rates[0]),
    );
    let (p, se) = bounds::variance_premise_mc(n, 200_000, seed ^ 0xf0)?;
    checks.assert(
        "variance premise Pr[|term| >= 1/sqrt(2)] = 1/4 within 3 SE",
        (p - 0.25).abs() <= 3.0 * se,
        format!("estimate {p:.4}, se {se:.2e}"),
    );
    Ok(checks.finish(12, started))
}

/// 13: analytic gradients match central finite differences at kink-free
/// parameter points.
fn criterion_13(seed: u64) -> Result<CriterionReport> {
    let started = Instant::now();
    let mut checks = Checks::new();
    let h = 1e-6;
    let results = parallel::map_indexed(100, |trial| {
        let s = rng::mix64(seed ^ (0x1300 + trial as u64));
        let ds = dataset::gen_random_sphere(5, 4, LabelMode::RandomSigns, s).expect("dataset");
        let mut params = coupled_init(
            &InitConfig {
                m: 8,
                d: 4,
                beta: 1.0,
                seed: s,
            },
            ScaleMode::InvSqrtM,
        )
        .expect("init");
        // jitter until every |<w_r, x_i>| clears the kink band
        let mut jitter = rng::substream(s, &[0x13, 1]);
        loop {
            let min_gap = (0..params.m())
                .flat_map(|r| {
                    ds.points
                        .iter()
                        .map(move |x| (r, x))
                })
                .map(|(r, x)| linalg::dot(params.weights.row(r), x).abs())
                .fold(f64::INFINITY, f64::min);
            if min_gap > 1e-3 {
                break;
            }
            for w in params.weights.data.iter_mut() {
                *w += 0.1 * rng::standard_normal(&mut jitter);
            }
            params.paired = false;
        }
        let mut worst: f64 = 0.0;
        for loss in [train::Loss::Logistic, train::Loss::Squared] {
            let eval = |p: &network::NetParams| -> f64 {
                let u = network::forward_all(p, &ds).expect("forward");
                match loss {
                    train::Loss::Logistic => {
                        u.iter()
                            .zip(&ds.labels)
                            .map(|(&ui, &yi)| network::logistic_loss(yi * ui))
                            .sum::<f64>()
                            / ds.n() as f64
                    }
                    train::Loss::Squared => {
                        0.5 * u
                            .iter()
                            .zip(&ds.labels)
                            .map(|(&ui, &yi)| (ui - yi) * (ui - yi))
                            .sum::<f64>()
                    }
                }
            };
            let grad = match loss {
                train::Loss::Logistic => network::grad_logistic(&params, &ds).expect("grad"),
                train::Loss::Squared => network::grad_squared(&params, &ds).expect("grad"),
            };
            let mut num = 0.0;
            let mut den = 0.0;
            for r in 0..params.m() {
                for c in 0..params.d() {
                    let base = params.weights.get(r, c);
                    let mut plus = params.clone();
                    plus.weights.set(r, c, base + h);
                    let mut minus = params.clone();
                    minus.weights.set(r, c, base - h);
                    let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
                    let diff = fd - grad.get(r, c);
                    num += diff * diff;
                    den += grad.get(r, c) * grad.get(r, c);
                }
            }
            worst = worst.max((num / den.max(1e-24)).sqrt());
        }
        worst
    });
    let worst = results.iter().copied().fold(0.0f64, f64::max);
    checks.assert(
        "both loss gradients within 1e-5 relative of central differences (100 points)",
        worst <= 1e-5,
        format!("worst relative error {worst:.2e}"),
    );
    Ok(checks.finish(13, started))
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
