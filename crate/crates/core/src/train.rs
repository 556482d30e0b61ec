//! Gradient-descent trainers for the exact logistic and squared-loss
//! schedules, with per-step diagnostics that track the quantities appearing
//! in the convergence proofs: weight displacement, activation flips against
//! initialization, the regret-style descent inequality, the surrogate risk at
//! the reference point, and the four-term residual decomposition.

use crate::dataset::{Dataset, DatasetKind};
use crate::linalg::{self, Mat};
use crate::margin::Separator;
use crate::network::{
    self, coupled_init, InitConfig, NetParams, ScaleMode,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Hard cap on derived iteration counts.
pub const MAX_STEPS: usize = 1_000_000;
/// Default width constant c in m = c * lambda^-2 n^2 for the squared loss.
pub const DEFAULT_WIDTH_CONSTANT: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Logistic,
    Squared,
}

/// Schedule constants for a training run. Produced by the `derive_*`
/// functions; every derived value is visible here.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: Loss,
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub m: usize,
    pub eta: f64,
    pub steps: usize,
    pub beta: f64,
    /// reference scaling rho for W-bar = W_0 + rho U (logistic)
    pub rho: f64,
    /// flip radius R of the squared-loss schedule
    pub r_ball: f64,
    pub seed: u64,
    /// stop as soon as the squared residual reaches epsilon
    pub stop_at_target: bool,
    /// record the four-term decomposition with this flip radius
    pub audit_r_ball: Option<f64>,
}

/// Theorem-style logistic schedule:
/// `m = 2 ceil(8 ln(2n/delta) / gamma^2)`, `rho = 2 ln(4/epsilon) / gamma`,
/// `beta = 8 rho^2 n sqrt(m) / (5 epsilon delta)`, `eta = 1`,
/// `T = ceil(2 rho^2 / epsilon)`.
pub fn derive_logistic_schedule(
    n: usize,
    gamma: f64,
    epsilon: f64,
    delta: f64,
) -> Result<TrainConfig> {
    if n == 0 {
        return Err(Error::invalid("need n >= 1"));
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid("need gamma > 0"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("epsilon and delta must lie in (0,1)"));
    }
    let m_half = (8.0 * (2.0 * n as f64 / delta).ln() / (gamma * gamma)).ceil() as usize;
    let m = 2 * m_half.max(1);
    let rho = 2.0 * (4.0 / epsilon).ln() / gamma;
    let beta = 8.0 * rho * rho * n as f64 * (m as f64).sqrt() / (5.0 * epsilon * delta);
    let steps = ((2.0 * rho * rho / epsilon).ceil() as usize).min(MAX_STEPS);
    Ok(TrainConfig {
        loss: Loss::Logistic,
        epsilon,
        delta,
        gamma: Some(gamma),
        lambda: None,
        m,
        eta: 1.0,
        steps,
        beta,
        rho,
        r_ball: 0.0,
        seed: 0,
        stop_at_target: false,
        audit_r_ball: None,
    })
}

/// Squared-loss schedule: `eta = lambda / (4 n^2 m)`, `R = lambda / (64 n)`,
/// `T = ceil(2 ln(n / epsilon) / (m eta lambda))` (using `||y - u(0)||^2 = n`
/// for unit labels under coupled initialization), width
/// `m = 4 lambda^-2 n^2` unless overridden.
pub fn derive_squared_schedule(
    n: usize,
    lambda: f64,
    epsilon: f64,
    m_override: Option<usize>,
) -> Result<TrainConfig> {
    if n == 0 {
        return Err(Error::invalid("need n >= 1"));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("need lambda > 0 (Assumption on the NTK spectrum)"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid("need epsilon > 0"));
    }
    let mut m = match m_override {
        Some(m) => m,
        None => (DEFAULT_WIDTH_CONSTANT * (n * n) as f64 / (lambda * lambda)).ceil() as usize,
    };
    if m == 0 {
        return Err(Error::invalid("width must be positive"));
    }
    m += m % 2; // coupled pairs
    let eta = lambda / (4.0 * (n * n) as f64 * m as f64);
    let r_ball = lambda / (64.0 * n as f64);
    let rate = m as f64 * eta * lambda; // = lambda^2 / (4 n^2), m-independent
    let steps_f = (2.0 * (n as f64 / epsilon).ln() / rate).ceil().max(0.0);
    let steps = (steps_f as usize).min(MAX_STEPS);
    Ok(TrainConfig {
        loss: Loss::Squared,
        epsilon,
        delta: 0.05,
        gamma: None,
        lambda: Some(lambda),
        m,
        eta,
        steps,
        beta: 1.0,
        rho: 0.0,
        r_ball,
        seed: 0,
        stop_at_target: true,
        audit_r_ball: None,
    })
}

/// The four residual-decomposition terms of one gradient step and the
/// relative gap of the exact identity
/// `||y-u(t+1)||^2 = ||y-u(t)||^2 + C1 + C2 + C3 + C4`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StepDecomposition {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub identity_gap_rel: f64,
}

/// Per-iteration record of a run. All series have one entry per recorded
/// time `t = 0..=steps_executed`; `decomposition` (when audited) has one
/// entry per executed step.
#[derive(Clone, Debug)]
pub struct TrainTrace {
    pub loss: Loss,
    /// normalized logistic risk or squared residual norm `||y - u(t)||^2`
    pub objective: Vec<f64>,
    pub max_disp: Vec<f64>,
    pub flips: Vec<usize>,
    /// geometric envelope `(1 - m eta lambda / 2)^t ||y - u(0)||^2` (squared)
    pub envelope: Option<Vec<f64>>,
    /// surrogate risk `R^(t)(W-bar)` (logistic runs with a reference point)
    pub surrogate_risk: Option<Vec<f64>>,
    /// `||W_t - W-bar||_F^2` (logistic runs with a reference point)
    pub dist_to_ref_sq: Option<Vec<f64>>,
    pub decomposition: Option<Vec<StepDecomposition>>,
    pub steps_executed: usize,
    pub initial_params: NetParams,
    pub final_params: NetParams,
}

impl TrainTrace {
    pub fn average_objective(&self) -> f64 {
        let t = self.steps_executed.max(1);
        self.objective.iter().take(t).sum::<f64>() / t as f64
    }
}

/// Internal dense state shared by both trainers.
struct RunState {
    m: usize,
    n: usize,
    d: usize,
    xs: Mat,          // n x d points
    xt: Mat,          // d x n transposed points
    y: Vec<f64>,
    signs: Vec<f64>,
    w: Mat,           // m x d current weights
    w0: Mat,          // m x d initial weights
    dots: Vec<f64>,   // m x n row-major <w_r, x_i>
    pattern0: Vec<bool>,
}

impl RunState {
    fn new(params: &NetParams, ds: &Dataset) -> RunState {
        let (m, n, d) = (params.m(), ds.n(), ds.d());
        let xs = Mat::from_rows(&ds.points).expect("dataset validated");
        let mut xt = Mat::zeros(d, n);
        for i in 0..n {
            for k in 0..d {
                xt.set(k, i, xs.get(i, k));
            }
        }
        let mut state = RunState {
            m,
            n,
            d,
            xs,
            xt,
            y: ds.labels.clone(),
            signs: params.signs.clone(),
            w: params.weights.clone(),
            w0: params.weights.clone(),
            dots: vec![0.0; m * n],
            pattern0: vec![false; m * n],
        };
        state.refresh_dots();
        for (p, &v) in state.pattern0.iter_mut().zip(&state.dots) {
            *p = v >= 0.0;
        }
        state
    }

    /// Recomputes all <w_r, x_i>. Accumulates one coordinate at a time so the
    /// inner loop runs contiguously over the n points and vectorizes.
    fn refresh_dots(&mut self) {
        let (m, n, d) = (self.m, self.n, self.d);
        let w = &self.w.data;
        let xt = &self.xt.data;
        let dots = &mut self.dots;
        dots.fill(0.0);
        for k in 0..d {
            let xrow = &xt[k * n..(k + 1) * n];
            for r in 0..m {
                let c = w[r * d + k];
                let drow = &mut dots[r * n..r * n + n];
                for (dv, xv) in drow.iter_mut().zip(xrow) {
                    *dv += c * xv;
                }
            }
        }
    }

    /// Prediction vector via pair-adjacent summation (exact zero at init).
    fn predictions(&self, scale: f64, out: &mut [f64]) {
        let (m, n) = (self.m, self.n);
        out.fill(0.0);
        let mut r = 0;
        while r + 1 < m {
            let (a0, a1) = (self.signs[r], self.signs[r + 1]);
            let d0 = &self.dots[r * n..(r + 1) * n];
            let d1 = &self.dots[(r + 1) * n..(r + 2) * n];
            for i in 0..n {
                let pair = a0 * d0[i].max(0.0) + a1 * d1[i].max(0.0);
                out[i] += pair;
            }
            r += 2;
        }
        if r < m {
            let dr = &self.dots[r * n..(r + 1) * n];
            for i in 0..n {
                out[i] += self.signs[r] * dr[i].max(0.0);
            }
        }
        for v in out.iter_mut() {
            *v *= scale;
        }
    }

    fn flips_vs_init(&self) -> usize {
        self.dots
            .iter()
            .zip(&self.pattern0)
            .filter(|(&v, &p)| (v >= 0.0) != p)
            .count()
    }

    fn max_displacement(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.m {
            let mut acc = 0.0;
            for (a, b) in self.w.row(r).iter().zip(self.w0.row(r)) {
                let diff = a - b;
                acc += diff * diff;
            }
            worst = worst.max(acc);
        }
        worst.sqrt()
    }

    /// Applies `w_r -= eta * a_r * scale * sum_i coeff_i x_i 1[dot_ri >= 0]`;
    /// dots must be refreshed by the caller afterwards.
    fn apply_row_updates(&mut self, coeff: &[f64], eta: f64, scale: f64) {
        let (m, n, d) = (self.m, self.n, self.d);
        let xs = &self.xs.data;
        let dots = &self.dots;
        let w = &mut self.w.data;
        let mut acc = vec![0.0; d];
        for r in 0..m {
            acc.fill(0.0);
            let dr = &dots[r * n..r * n + n];
            for (i, (&dv, &c)) in dr.iter().zip(coeff).enumerate() {
                if dv >= 0.0 {
                    let xrow = &xs[i * d..i * d + d];
                    for (av, xv) in acc.iter_mut().zip(xrow) {
                        *av += c * xv;
                    }
                }
            }
            let step = eta * self.signs[r] * scale;
            let wrow = &mut w[r * d..r * d + d];
            for (wk, ak) in wrow.iter_mut().zip(&acc) {
                *wk -= step * ak;
            }
        }
    }
}

/// Flip sets per point: rows with `|<w_r(0), x_i>| < r_ball`.
fn flip_sets(state: &RunState, r_ball: f64) -> Vec<Vec<u32>> {
    let (m, n) = (state.m, state.n);
    let mut sets = vec![Vec::new(); n];
    for r in 0..m {
        let w0 = state.w0.row(r);
        for (i, set) in sets.iter_mut().enumerate() {
            let mut dot0 = 0.0;
            for k in 0..state.d {
                dot0 += w0[k] * state.xs.get(i, k);
            }
            if dot0.abs() < r_ball {
                set.push(r as u32);
            }
        }
    }
    sets
}

#[allow(clippy::too_many_arguments)]
fn decompose_step(
    gram: &Mat,
    y: &[f64],
    signs: &[f64],
    prev_dots: &[f64],
    prev_u: &[f64],
    cur_dots: &[f64],
    cur_u: &[f64],
    sbar: &[Vec<u32>],
    m: usize,
    n: usize,
    eta: f64,
) -> StepDecomposition {
    let q: Vec<f64> = y.iter().zip(prev_u).map(|(a, b)| a - b).collect();
    // counts_ij = #{r : both i and j fire at time t}
    let mut counts = vec![0.0; n * n];
    let mut fire = vec![false; n];
    for r in 0..m {
        let dr = &prev_dots[r * n..(r + 1) * n];
        for i in 0..n {
            fire[i] = dr[i] >= 0.0;
        }
        for i in 0..n {
            if fire[i] {
                for j in 0..n {
                    if fire[j] {
                        counts[i * n + j] += 1.0;
                    }
                }
            }
        }
    }
    let mf = m as f64;
    let mut hq = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += gram.get(i, j) * counts[i * n + j] / mf * q[j];
        }
        hq[i] = acc;
    }
    let c1 = -2.0 * mf * eta * linalg::dot(&q, &hq);

    // restricted kernel and the nonlinear remainder over the flip sets
    let mut hperp_q = vec![0.0; n];
    let mut v2 = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        let mut nonlinear = 0.0;
        for &r in &sbar[i] {
            let r = r as usize;
            let dri = prev_dots[r * n + i];
            if dri >= 0.0 {
                let mut inner = 0.0;
                for j in 0..n {
                    if prev_dots[r * n + j] >= 0.0 {
                        inner += gram.get(i, j) * q[j];
                    }
                }
                acc += inner;
            }
            let z = cur_dots[r * n + i].max(0.0) - dri.max(0.0);
            nonlinear += signs[r] * z;
        }
        hperp_q[i] = acc / mf;
        v2[i] = nonlinear;
    }
    let c2 = 2.0 * mf * eta * linalg::dot(&q, &hperp_q);
    let c3 = -2.0 * linalg::dot(&q, &v2);
    let c4: f64 = cur_u
        .iter()
        .zip(prev_u)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let old_sq = linalg::dot(&q, &q);
    let new_sq: f64 = y
        .iter()
        .zip(cur_u)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let gap = (new_sq - (old_sq + c1 + c2 + c3 + c4)).abs();
    StepDecomposition {
        c1,
        c2,
        c3,
        c4,
        identity_gap_rel: gap / old_sq.max(1e-300),
    }
}

fn dataset_gram(ds: &Dataset) -> Mat {
    let n = ds.n();
    let mut g = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g.set(i, j, linalg::dot(&ds.points[i], &ds.points[j]));
        }
    }
    g
}

/// Runs the logistic schedule from a coupled initialization, recording risk,
/// displacement, flips, and (when `reference` is given) the surrogate risk
/// and squared distance to `W-bar = W_0 + rho U` at every step.
pub fn train_logistic(
    ds: &Dataset,
    cfg: &TrainConfig,
    reference: Option<&Separator>,
) -> Result<TrainTrace> {
    if ds.kind != DatasetKind::Classification {
        return Err(Error::invalid("logistic training needs classification data"));
    }
    if cfg.loss != Loss::Logistic {
        return Err(Error::invalid("config is not a logistic schedule"));
    }
    if !(cfg.eta > 0.0 && cfg.eta <= 1.0) {
        return Err(Error::invalid("logistic schedule needs 0 < eta <= 1"));
    }
    ds.validate()?;
    let params = coupled_init(
        &InitConfig {
            m: cfg.m,
            d: ds.d(),
            beta: cfg.beta,
            seed: cfg.seed,
        },
        ScaleMode::InvSqrtM,
    )?;
    let mut state = RunState::new(&params, ds);
    let (m, n) = (state.m, state.n);
    let scale = 1.0 / (m as f64).sqrt();

    // reference point W-bar = W_0 + rho U, with <x_i, wbar_r> cached
    let wbar = reference.map(|sep| {
        let mut wb = state.w0.clone();
        for (w, u) in wb.data.iter_mut().zip(&sep.rows.data) {
            *w += cfg.rho * u;
        }
        wb
    });
    let bar_dots = wbar.as_ref().map(|wb| {
        let mut bd = vec![0.0; m * n];
        for r in 0..m {
            let row = wb.row(r);
            let out = &mut bd[r * n..(r + 1) * n];
            out.fill(0.0);
            for k in 0..state.d {
                linalg::axpy(row[k], state.xt.row(k), out);
            }
        }
        bd
    });

    let steps = cfg.steps;
    let mut objective = Vec::with_capacity(steps + 1);
    let mut max_disp = Vec::with_capacity(steps + 1);
    let mut flips = Vec::with_capacity(steps + 1);
    let mut surrogate = wbar.as_ref().map(|_| Vec::with_capacity(steps + 1));
    let mut dist_sq = wbar.as_ref().map(|_| Vec::with_capacity(steps + 1));
    let mut u = vec![0.0; n];
    let mut coeff = vec![0.0; n];

    for step in 0..=steps {
        state.predictions(scale, &mut u);
        let risk = u
            .iter()
            .zip(&state.y)
            .map(|(&ui, &yi)| network::logistic_loss(yi * ui))
            .sum::<f64>()
            / n as f64;
        if !risk.is_finite() {
            return Err(Error::Numerical(format!("risk diverged at step {step}")));
        }
        objective.push(risk);
        max_disp.push(state.max_displacement());
        flips.push(state.flips_vs_init());
        if let (Some(surr), Some(bd)) = (surrogate.as_mut(), bar_dots.as_ref()) {
            let mut fbar = vec![0.0; n];
            for r in 0..m {
                let a = state.signs[r];
                let dr = &state.dots[r * n..r * n + n];
                let br = &bd[r * n..r * n + n];
                for ((f, &dv), &bv) in fbar.iter_mut().zip(dr).zip(br) {
                    if dv >= 0.0 {
                        *f += a * bv;
                    }
                }
            }
            let total: f64 = fbar
                .iter()
                .zip(&state.y)
                .map(|(&f, &yi)| network::logistic_loss(yi * scale * f))
                .sum();
            surr.push(total / n as f64);
        }
        if let (Some(dist), Some(wb)) = (dist_sq.as_mut(), wbar.as_ref()) {
            let mut acc = 0.0;
            for (a, b) in state.w.data.iter().zip(&wb.data) {
                let diff = a - b;
                acc += diff * diff;
            }
            dist.push(acc);
        }
        if step == steps {
            break;
        }
        // gradient of the normalized risk; |l'| <= 1 keeps rows below 1/sqrt(m)
        for i in 0..n {
            coeff[i] = network::logistic_loss_derivative(state.y[i] * u[i]) * state.y[i]
                / n as f64;
        }
        state.apply_row_updates(&coeff, cfg.eta, scale);
        state.refresh_dots();
    }

    let final_params = NetParams {
        weights: state.w.clone(),
        signs: state.signs.clone(),
        scale_mode: ScaleMode::InvSqrtM,
        paired: false,
    };
    Ok(TrainTrace {
        loss: Loss::Logistic,
        objective,
        max_disp,
        flips,
        envelope: None,
        surrogate_risk: surrogate,
        dist_to_ref_sq: dist_sq,
        decomposition: None,
        steps_executed: steps,
        initial_params: params,
        final_params,
    })
}

/// Runs the squared-loss schedule from a coupled initialization (beta = 1,
/// unnormalized scale), recording the residual, the geometric envelope,
/// displacement, flips, and optionally the per-step decomposition.
pub fn train_squared(ds: &Dataset, cfg: &TrainConfig) -> Result<TrainTrace> {
    if cfg.loss != Loss::Squared {
        return Err(Error::invalid("config is not a squared-loss schedule"));
    }
    let lambda = cfg
        .lambda
        .ok_or_else(|| Error::invalid("squared schedule needs lambda"))?;
    if !(cfg.eta > 0.0) {
        return Err(Error::invalid("need eta > 0"));
    }
    ds.validate()?;
    let params = coupled_init(
        &InitConfig {
            m: cfg.m,
            d: ds.d(),
            beta: cfg.beta,
            seed: cfg.seed,
        },
        ScaleMode::Unnormalized,
    )?;
    let mut state = RunState::new(&params, ds);
    let (m, n) = (state.m, state.n);
    let gram = dataset_gram(ds);
    let audit_sets = cfg.audit_r_ball.map(|r| flip_sets(&state, r));

    let steps = cfg.steps;
    let mut objective = Vec::with_capacity(steps + 1);
    let mut max_disp = Vec::with_capacity(steps + 1);
    let mut flips = Vec::with_capacity(steps + 1);
    let mut envelope = Vec::with_capacity(steps + 1);
    let mut decomposition = audit_sets.as_ref().map(|_| Vec::with_capacity(steps));
    let mut u = vec![0.0; n];
    let mut coeff = vec![0.0; n];
    let mut prev_dots = audit_sets.as_ref().map(|_| state.dots.clone());
    let mut prev_u = vec![0.0; n];

    let rate = 1.0 - m as f64 * cfg.eta * lambda / 2.0;
    let mut executed = 0usize;
    for step in 0..=steps {
        state.predictions(1.0, &mut u);
        let residual_sq: f64 = u
            .iter()
            .zip(&state.y)
            .map(|(&ui, &yi)| (yi - ui) * (yi - ui))
            .sum();
        if !residual_sq.is_finite() {
            return Err(Error::Numerical(format!(
                "residual diverged at step {step}"
            )));
        }
        if step > 0 {
            if let (Some(dec), Some(sets), Some(pd)) = (
                decomposition.as_mut(),
                audit_sets.as_ref(),
                prev_dots.as_ref(),
            ) {
                dec.push(decompose_step(
                    &gram,
                    &state.y,
                    &state.signs,
                    pd,
                    &prev_u,
                    &state.dots,
                    &u,
                    sets,
                    m,
                    n,
                    cfg.eta,
                ));
            }
        }
        objective.push(residual_sq);
        envelope.push(objective[0] * rate.powi(step as i32));
        max_disp.push(state.max_displacement());
        flips.push(state.flips_vs_init());
        executed = step;
        if step == steps || (cfg.stop_at_target && residual_sq <= cfg.epsilon) {
            break;
        }
        if let Some(pd) = prev_dots.as_mut() {
            pd.copy_from_slice(&state.dots);
            prev_u.copy_from_slice(&u);
        }
        for i in 0..n {
            coeff[i] = u[i] - state.y[i];
        }
        state.apply_row_updates(&coeff, cfg.eta, 1.0);
        state.refresh_dots();
    }

    let final_params = NetParams {
        weights: state.w.clone(),
        signs: state.signs.clone(),
        scale_mode: ScaleMode::Unnormalized,
        paired: false,
    };
    Ok(TrainTrace {
        loss: Loss::Squared,
        objective,
        max_disp,
        flips,
        envelope: Some(envelope),
        surrogate_risk: None,
        dist_to_ref_sq: None,
        decomposition,
        steps_executed: executed,
        initial_params: params,
        final_params,
    })
}

/// Surrogate risk `R^(t)(W-bar) = (1/n) sum_i l(y_i <grad f_i(W_t), W-bar>)`.
pub fn surrogate_risk(params_t: &NetParams, wbar: &Mat, ds: &Dataset) -> Result<f64> {
    if (wbar.rows, wbar.cols) != (params_t.m(), params_t.d()) {
        return Err(Error::DimensionMismatch("reference shape".into()));
    }
    let s = params_t.scale();
    let mut total = 0.0;
    for (i, x) in ds.points.iter().enumerate() {
        let mut fbar = 0.0;
        for r in 0..params_t.m() {
            if linalg::dot(params_t.weights.row(r), x) >= 0.0 {
                fbar += params_t.signs[r] * linalg::dot(wbar.row(r), x);
            }
        }
        total += network::logistic_loss(ds.labels[i] * s * fbar);
    }
    Ok(total / ds.n() as f64)
}

/// Result of checking the regret-style descent inequality
/// `eta R(W_t) <= ||W_t - W-bar||^2 - ||W_{t+1} - W-bar||^2 + 2 eta R^(t)(W-bar)`
/// per step, and its summed form, over a recorded trace.
#[derive(Clone, Debug, Serialize)]
pub struct DescentReport {
    pub max_violation_rel: f64,
    pub per_step_ok: bool,
    pub summed_ok: bool,
    pub max_surrogate: f64,
    pub initial_dist_sq: f64,
}

pub fn descent_inequality_check(
    trace: &TrainTrace,
    sep: &Separator,
    rho: f64,
    eta: f64,
) -> Result<DescentReport> {
    let surr = trace
        .surrogate_risk
        .as_ref()
        .ok_or_else(|| Error::invalid("trace has no surrogate series"))?;
    let dist = trace
        .dist_to_ref_sq
        .as_ref()
        .ok_or_else(|| Error::invalid("trace has no reference distances"))?;
    let t_max = trace.steps_executed;
    let mut max_violation: f64 = 0.0;
    for t in 0..t_max {
        let lhs = eta * trace.objective[t];
        let rhs = dist[t] - dist[t + 1] + 2.0 * eta * surr[t];
        let viol = (lhs - rhs) / rhs.abs().max(1.0);
        max_violation = max_violation.max(viol);
    }
    // summed form: eta sum R(W_t) <= ||W_0 - W-bar||^2 + 2 eta sum R^(t)
    let sum_risk: f64 = trace.objective.iter().take(t_max).sum();
    let sum_surr: f64 = surr.iter().take(t_max).sum();
    let summed_ok = eta * sum_risk <= dist[0] + 2.0 * eta * sum_surr + 1e-9 * dist[0].max(1.0);
    let expected_dist0 = rho * rho * sep.rows.frobenius_norm().powi(2);
    if (dist[0] - expected_dist0).abs() > 1e-6 * expected_dist0.max(1.0) {
        return Err(Error::Numerical(format!(
            "initial distance {} differs from rho^2 ||U||_F^2 = {expected_dist0}",
            dist[0]
        )));
    }
    Ok(DescentReport {
        max_violation_rel: max_violation,
        per_step_ok: max_violation <= 1e-8,
        summed_ok,
        max_surrogate: surr.iter().take(t_max).copied().fold(0.0, f64::max),
        initial_dist_sq: dist[0],
    })
}

/// Standalone four-term decomposition of one step `params_t -> params_t1`.
/// The flip sets are taken at `params_0` with radius `r_ball`.
pub fn step_decomposition(
    params_0: &NetParams,
    params_t: &NetParams,
    params_t1: &NetParams,
    ds: &Dataset,
    eta: f64,
    r_ball: f64,
) -> Result<StepDecomposition> {
    for p in [params_t, params_t1] {
        if p.m() != params_0.m() || p.d() != params_0.d() {
            return Err(Error::DimensionMismatch("params shapes differ".into()));
        }
    }
    if params_t.scale_mode != ScaleMode::Unnormalized {
        return Err(Error::invalid("decomposition applies to the unnormalized scale"));
    }
    let state0 = RunState::new(params_0, ds);
    let sets = flip_sets(&state0, r_ball);
    let gram = dataset_gram(ds);
    let (m, n) = (params_t.m(), ds.n());
    let dots_of = |p: &NetParams| {
        let mut dots = vec![0.0; m * n];
        for r in 0..m {
            for (i, x) in ds.points.iter().enumerate() {
                dots[r * n + i] = linalg::dot(p.weights.row(r), x);
            }
        }
        dots
    };
    let prev_dots = dots_of(params_t);
    let cur_dots = dots_of(params_t1);
    let prev_u = network::forward_all(params_t, ds)?;
    let cur_u = network::forward_all(params_t1, ds)?;
    Ok(decompose_step(
        &gram,
        &ds.labels,
        &params_t.signs,
        &prev_dots,
        &prev_u,
        &cur_dots,
        &cur_u,
        &sets,
        m,
        n,
        eta,
    ))
}

/// `D = 4 sqrt(n) ||y - u(0)|| / (m lambda)`, the displacement bound of the
/// squared-loss analysis.
pub fn lemma_displacement_bound(n: usize, initial_residual: f64, m: usize, lambda: f64) -> f64 {
    4.0 * (n as f64).sqrt() * initial_residual / (m as f64 * lambda)
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightMovementReport {
    pub max_disp: f64,
    pub d_bound: f64,
    pub r_ball: f64,
    /// max_t max_r ||w_r(t) - w_r(0)|| <= D
    pub movement_ok: bool,
    /// D < R, the schedule requirement
    pub d_below_r: bool,
}

/// Compares the recorded displacement series against `D` and `D < R`.
pub fn weight_movement_check(trace: &TrainTrace, d_bound: f64, r_ball: f64) -> WeightMovementReport {
    let max_disp = trace.max_disp.iter().copied().fold(0.0, f64::max);
    WeightMovementReport {
        max_disp,
        d_bound,
        r_ball,
        movement_ok: max_disp <= d_bound,
        d_below_r: d_bound < r_ball,
    }
}

/// Number of points with `y_i f(W, x_i) <= 0` (zero output counts as a miss).
pub fn misclassification_count(params: &NetParams, ds: &Dataset) -> Result<usize> {
    let u = network::forward_all(params, ds)?;
    Ok(u.iter()
        .zip(&ds.labels)
        .filter(|(&ui, &yi)| yi * ui <= 0.0)
        .count())
}
