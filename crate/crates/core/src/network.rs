//! Two-layer ReLU network with coupled initialization.
//!
//! The hidden weights are drawn in identical adjacent pairs with opposite
//! output signs, so the network output is exactly zero at initialization.
//! Forward sums pair-adjacent to keep that cancellation exact in floating
//! point. The ReLU subgradient uses the `>= 0` indicator throughout, matching
//! the gradient formulas; margin integrals elsewhere use the strict `> 0`
//! convention of their own definition (the boundary event has measure zero
//! under Gaussian weights).

use crate::dataset::{Dataset, DatasetKind};
use crate::linalg::{self, Mat};
use crate::rng::{self, tag};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    /// f(W,x) = sum_r a_r relu(<w_r, x>)
    Unnormalized,
    /// f(W,x) = (1/sqrt(m)) sum_r a_r relu(<w_r, x>)
    InvSqrtM,
}

/// Hidden-layer weights (rows `w_r`), fixed output signs `a_r`, and the
/// output scale. `paired` records that the coupled pair structure still
/// holds exactly (cleared by the first gradient step).
#[derive(Clone, Debug, PartialEq)]
pub struct NetParams {
    pub weights: Mat,
    pub signs: Vec<f64>,
    pub scale_mode: ScaleMode,
    pub paired: bool,
}

#[derive(Serialize, Deserialize)]
struct NetWire {
    m: usize,
    d: usize,
    scale_mode: ScaleMode,
    signs: Vec<f64>,
    weights: Vec<Vec<f64>>,
}

impl NetParams {
    pub fn m(&self) -> usize {
        self.weights.rows
    }

    pub fn d(&self) -> usize {
        self.weights.cols
    }

    pub fn scale(&self) -> f64 {
        match self.scale_mode {
            ScaleMode::Unnormalized => 1.0,
            ScaleMode::InvSqrtM => 1.0 / (self.m() as f64).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.signs.len() != self.m() {
            return Err(Error::DimensionMismatch(format!(
                "{} signs for {} rows",
                self.signs.len(),
                self.m()
            )));
        }
        if self.signs.iter().any(|&a| a != 1.0 && a != -1.0) {
            return Err(Error::invalid("signs must be exactly ±1"));
        }
        if self.paired {
            if self.m() % 2 != 0 {
                return Err(Error::invalid("paired params need even m"));
            }
            for i in 0..self.m() / 2 {
                let (r, s) = (2 * i, 2 * i + 1);
                if self.weights.row(r) != self.weights.row(s) || self.signs[r] != -self.signs[s] {
                    return Err(Error::invalid(format!(
                        "rows {r},{s} violate the coupled pair structure"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let wire = NetWire {
            m: self.m(),
            d: self.d(),
            scale_mode: self.scale_mode,
            signs: self.signs.clone(),
            weights: self.weights.to_rows(),
        };
        serde_json::to_string_pretty(&wire).expect("net params serialize")
    }

    pub fn from_json(s: &str) -> Result<NetParams> {
        let wire: NetWire =
            serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        if wire.weights.len() != wire.m || wire.weights.iter().any(|r| r.len() != wire.d) {
            return Err(Error::DimensionMismatch("declared m x d vs weights".into()));
        }
        let params = NetParams {
            weights: Mat::from_rows(&wire.weights)?,
            signs: wire.signs,
            scale_mode: wire.scale_mode,
            paired: false,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Width, dimension, Gaussian scale β, and seed for [`coupled_init`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct InitConfig {
    pub m: usize,
    pub d: usize,
    pub beta: f64,
    pub seed: u64,
}

impl InitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m % 2 != 0 {
            return Err(Error::invalid(format!(
                "coupled init needs even positive m, got {}",
                self.m
            )));
        }
        if self.d == 0 {
            return Err(Error::invalid("need d >= 1"));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::invalid(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Draws m/2 i.i.d. Gaussian rows scaled by β and duplicates each into an
/// adjacent pair with opposite signs (rows 2i and 2i+1 identical,
/// signs(2i) = -signs(2i+1)).
pub fn coupled_init(cfg: &InitConfig, scale_mode: ScaleMode) -> Result<NetParams> {
    cfg.validate()?;
    let mut rng = rng::substream(cfg.seed, &[tag::INIT, cfg.m as u64, cfg.d as u64]);
    let mut weights = Mat::zeros(cfg.m, cfg.d);
    let mut signs = vec![0.0; cfg.m];
    for i in 0..cfg.m / 2 {
        let mut row = rng::gaussian_vec(&mut rng, cfg.d);
        linalg::scale(cfg.beta, &mut row);
        weights.row_mut(2 * i).copy_from_slice(&row);
        weights.row_mut(2 * i + 1).copy_from_slice(&row);
        let a = rng::random_sign(&mut rng);
        signs[2 * i] = a;
        signs[2 * i + 1] = -a;
    }
    let params = NetParams {
        weights,
        signs,
        scale_mode,
        paired: true,
    };
    params.validate()?;
    Ok(params)
}

#[inline]
fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Network output at `x`. Summation is pair-adjacent so coupled pairs cancel
/// exactly in floating point.
pub fn forward(params: &NetParams, x: &[f64]) -> Result<f64> {
    if x.len() != params.d() {
        return Err(Error::DimensionMismatch(format!(
            "input dim {} vs network dim {}",
            x.len(),
            params.d()
        )));
    }
    let m = params.m();
    let mut acc = 0.0;
    let mut r = 0;
    while r + 1 < m {
        let pair = params.signs[r] * relu(linalg::dot(params.weights.row(r), x))
            + params.signs[r + 1] * relu(linalg::dot(params.weights.row(r + 1), x));
        acc += pair;
        r += 2;
    }
    if r < m {
        acc += params.signs[r] * relu(linalg::dot(params.weights.row(r), x));
    }
    Ok(acc * params.scale())
}

/// Prediction vector u with u_i = f(W, x_i).
pub fn forward_all(params: &NetParams, ds: &Dataset) -> Result<Vec<f64>> {
    ds.points.iter().map(|x| forward(params, x)).collect()
}

/// Subgradient of f at x: row r is `s * a_r * x` when `<w_r, x> >= 0`, else
/// zero. Independent of the loss and of the scale of the rows.
pub fn grad_f(params: &NetParams, x: &[f64]) -> Result<Mat> {
    if x.len() != params.d() {
        return Err(Error::DimensionMismatch("grad_f input dim".into()));
    }
    let s = params.scale();
    let mut g = Mat::zeros(params.m(), params.d());
    for r in 0..params.m() {
        if linalg::dot(params.weights.row(r), x) >= 0.0 {
            let coeff = s * params.signs[r];
            let row = g.row_mut(r);
            for (gi, xi) in row.iter_mut().zip(x) {
                *gi = coeff * xi;
            }
        }
    }
    Ok(g)
}

/// Numerically stable `ln(1 + exp(-v))`.
pub fn logistic_loss(v: f64) -> f64 {
    if v > 0.0 {
        (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p() - v
    }
}

/// `l'(v) = -exp(-v)/(1+exp(-v)) = -1/(1+exp(v))`, bounded in (-1, 0).
pub fn logistic_loss_derivative(v: f64) -> f64 {
    -1.0 / (1.0 + v.exp())
}

/// Normalized logistic risk `R(W) = (1/n) sum_i ln(1+exp(-y_i u_i))`.
pub fn logistic_risk(params: &NetParams, ds: &Dataset) -> Result<f64> {
    let u = forward_all(params, ds)?;
    Ok(u.iter()
        .zip(&ds.labels)
        .map(|(&ui, &yi)| logistic_loss(yi * ui))
        .sum::<f64>()
        / ds.n() as f64)
}

/// Gradient of the normalized logistic risk R(W). Rejects regression data.
pub fn grad_logistic(params: &NetParams, ds: &Dataset) -> Result<Mat> {
    if ds.kind != DatasetKind::Classification {
        return Err(Error::invalid(
            "logistic loss needs a classification dataset",
        ));
    }
    let u = forward_all(params, ds)?;
    let n = ds.n() as f64;
    let s = params.scale();
    // per-example coefficient l'(y_i u_i) * y_i / n
    let coeff: Vec<f64> = u
        .iter()
        .zip(&ds.labels)
        .map(|(&ui, &yi)| logistic_loss_derivative(yi * ui) * yi / n)
        .collect();
    accumulate_rows(params, ds, &coeff, s)
}

/// Gradient of the unnormalized squared loss `L(W) = 1/2 sum_i (u_i - y_i)^2`.
pub fn grad_squared(params: &NetParams, ds: &Dataset) -> Result<Mat> {
    let u = forward_all(params, ds)?;
    let s = params.scale();
    let coeff: Vec<f64> = u
        .iter()
        .zip(&ds.labels)
        .map(|(&ui, &yi)| ui - yi)
        .collect();
    accumulate_rows(params, ds, &coeff, s)
}

/// Row r of the result is `s * a_r * sum_i coeff_i * x_i * 1[<w_r,x_i> >= 0]`.
fn accumulate_rows(params: &NetParams, ds: &Dataset, coeff: &[f64], s: f64) -> Result<Mat> {
    let mut g = Mat::zeros(params.m(), params.d());
    for r in 0..params.m() {
        let w = params.weights.row(r);
        let a = params.signs[r] * s;
        // borrow indices to keep the row slice mutable
        let row =
            &mut g.data[r * params.weights.cols..(r + 1) * params.weights.cols];
        for (x, &c) in ds.points.iter().zip(coeff) {
            if linalg::dot(w, x) >= 0.0 {
                linalg::axpy(a * c, x, row);
            }
        }
    }
    Ok(g)
}

/// One gradient-descent step W <- W - eta * grad. Signs are unchanged; the
/// paired flag is cleared since pair rows may diverge. Negative eta is
/// rejected; eta = 0 is the identity.
pub fn gd_step(params: &NetParams, gradient: &Mat, eta: f64) -> Result<NetParams> {
    if eta < 0.0 || !eta.is_finite() {
        return Err(Error::invalid(format!("step size must be >= 0, got {eta}")));
    }
    if (gradient.rows, gradient.cols) != (params.m(), params.d()) {
        return Err(Error::DimensionMismatch("gradient shape".into()));
    }
    let mut out = params.clone();
    for (w, g) in out.weights.data.iter_mut().zip(&gradient.data) {
        *w -= eta * g;
    }
    out.paired = false;
    Ok(out)
}

/// m x n firing indicators: entry (r, i) is `<w_r, x_i> >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationPattern {
    pub m: usize,
    pub n: usize,
    pub fires: Vec<bool>,
}

impl ActivationPattern {
    #[inline]
    pub fn get(&self, r: usize, i: usize) -> bool {
        self.fires[r * self.n + i]
    }

    /// Number of entries that differ from `other`.
    pub fn flips_versus(&self, other: &ActivationPattern) -> usize {
        self.fires
            .iter()
            .zip(&other.fires)
            .filter(|(a, b)| a != b)
            .count()
    }
}

pub fn activation_pattern(params: &NetParams, ds: &Dataset) -> Result<ActivationPattern> {
    if ds.d() != params.d() {
        return Err(Error::DimensionMismatch("pattern dims".into()));
    }
    let (m, n) = (params.m(), ds.n());
    let mut fires = vec![false; m * n];
    for r in 0..m {
        let w = params.weights.row(r);
        for (i, x) in ds.points.iter().enumerate() {
            fires[r * n + i] = linalg::dot(w, x) >= 0.0;
        }
    }
    Ok(ActivationPattern { m, n, fires })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{gen_alternating_circle, gen_random_sphere, LabelMode};

    fn tiny_net(w: &[(f64, f64)], a: &[f64], mode: ScaleMode) -> NetParams {
        NetParams {
            weights: Mat::from_rows(&w.iter().map(|&(x, y)| vec![x, y]).collect::<Vec<_>>())
                .unwrap(),
            signs: a.to_vec(),
            scale_mode: mode,
            paired: false,
        }
    }

    #[test]
    fn coupled_init_layout() {
        let cfg = InitConfig {
            m: 8,
            d: 3,
            beta: 2.0,
            seed: 5,
        };
        let p = coupled_init(&cfg, ScaleMode::Unnormalized).unwrap();
        for i in 0..4 {
            assert_eq!(p.weights.row(2 * i), p.weights.row(2 * i + 1));
            assert_eq!(p.signs[2 * i], -p.signs[2 * i + 1]);
        }
        assert!(p.paired);
        assert!(coupled_init(
            &InitConfig {
                m: 7,
                d: 3,
                beta: 1.0,
                seed: 0
            },
            ScaleMode::Unnormalized
        )
        .is_err());
    }

    #[test]
    fn coupled_init_row_norms_concentrate() {
        // chi-distribution oracle: E||w|| ~= sqrt(d) for beta = 1, d = 64
        let cfg = InitConfig {
            m: 1024,
            d: 64,
            beta: 1.0,
            seed: 11,
        };
        let p = coupled_init(&cfg, ScaleMode::Unnormalized).unwrap();
        let mean: f64 = (0..512)
            .map(|i| linalg::norm2(p.weights.row(2 * i)))
            .sum::<f64>()
            / 512.0;
        let expect = 64f64.sqrt();
        assert!(
            (mean - expect).abs() / expect < 0.1,
            "mean row norm {mean}, expected near {expect}"
        );
    }

    #[test]
    fn zero_at_init_is_exact() {
        for seed in 0..10 {
            let ds = gen_random_sphere(12, 5, LabelMode::RandomSigns, seed).unwrap();
            let cfg = InitConfig {
                m: 64,
                d: 5,
                beta: 1e8,
                seed,
            };
            for mode in [ScaleMode::Unnormalized, ScaleMode::InvSqrtM] {
                let p = coupled_init(&cfg, mode).unwrap();
                let u = forward_all(&p, &ds).unwrap();
                assert!(u.iter().all(|&v| v == 0.0), "nonzero output at init");
            }
        }
    }

    #[test]
    fn forward_hand_cases() {
        let p = tiny_net(
            &[(1.0, 0.0), (1.0, 0.0)],
            &[1.0, -1.0],
            ScaleMode::Unnormalized,
        );
        assert_eq!(forward(&p, &[1.0, 0.0]).unwrap(), 0.0);

        // hand evaluation: dots are sqrt(2)/2 each, sum sqrt(2), scale 1/sqrt(2)
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let p = tiny_net(&[(1.0, 0.0), (0.0, 1.0)], &[1.0, 1.0], ScaleMode::InvSqrtM);
        let v = forward(&p, &[h, h]).unwrap();
        assert!((v - 1.0).abs() < 1e-15, "got {v}, want 1");

        assert!(forward(&p, &[1.0]).is_err());
    }

    #[test]
    fn grad_f_rows_and_scale_invariance() {
        let p = tiny_net(
            &[(1.0, 0.2), (-0.5, -1.0)],
            &[1.0, -1.0],
            ScaleMode::Unnormalized,
        );
        let x = [1.0, 0.0];
        let g = grad_f(&p, &x).unwrap();
        assert_eq!(g.row(0), &[1.0, 0.0]);
        assert_eq!(g.row(1), &[0.0, 0.0]);

        let mut scaled = p.clone();
        for w in scaled.weights.data.iter_mut() {
            *w *= 7.3;
        }
        let g2 = grad_f(&scaled, &x).unwrap();
        assert_eq!(g.data, g2.data);
    }

    #[test]
    fn logistic_gradient_at_coupled_init() {
        // at init u = 0, so l'(0) = -1/2 and grad = -(1/2n) sum_i y_i grad_f(x_i)
        let ds = gen_alternating_circle(8).unwrap();
        let p = coupled_init(
            &InitConfig {
                m: 16,
                d: 2,
                beta: 1.0,
                seed: 3,
            },
            ScaleMode::InvSqrtM,
        )
        .unwrap();
        let g = grad_logistic(&p, &ds).unwrap();
        let mut expect = Mat::zeros(16, 2);
        for (i, x) in ds.points.iter().enumerate() {
            let gf = grad_f(&p, x).unwrap();
            for (e, v) in expect.data.iter_mut().zip(&gf.data) {
                *e += -0.5 / 8.0 * ds.labels[i] * v;
            }
        }
        for (a, b) in g.data.iter().zip(&expect.data) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn logistic_gradient_vanishes_for_confident_point() {
        let p = tiny_net(&[(1.0, 0.0), (0.3, 0.1)], &[1.0, 1.0], ScaleMode::Unnormalized);
        let ds = Dataset::new(vec![vec![1.0, 0.0]], vec![1.0], DatasetKind::Classification)
            .unwrap();
        let f = forward(&p, &[1.0, 0.0]).unwrap();
        assert!(f > 1.0);
        let g = grad_logistic(&p, &ds).unwrap();
        let bound = (-f).exp(); // |l'| <= exp(-f), ||x|| = 1, s = 1
        assert!(g.frobenius_norm() <= bound * 2.0f64.sqrt() + 1e-15);
    }

    #[test]
    fn logistic_rejects_regression() {
        let ds = gen_random_sphere(4, 3, LabelMode::RegressionUniform, 0).unwrap();
        let p = coupled_init(
            &InitConfig {
                m: 4,
                d: 3,
                beta: 1.0,
                seed: 0,
            },
            ScaleMode::InvSqrtM,
        )
        .unwrap();
        assert!(grad_logistic(&p, &ds).is_err());
        assert!(grad_squared(&p, &ds).is_ok());
    }

    #[test]
    fn squared_gradient_zero_at_fit() {
        // u = y gives a zero gradient: build a net that outputs y exactly
        let ds = Dataset::new(vec![vec![1.0, 0.0]], vec![1.0], DatasetKind::Classification)
            .unwrap();
        let p = tiny_net(&[(1.0, 0.0), (-1.0, 0.5)], &[1.0, 1.0], ScaleMode::Unnormalized);
        assert_eq!(forward(&p, &[1.0, 0.0]).unwrap(), 1.0);
        let g = grad_squared(&p, &ds).unwrap();
        assert!(g.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn squared_gradient_at_init_substitution() {
        let ds = gen_alternating_circle(4).unwrap();
        let p = coupled_init(
            &InitConfig {
                m: 8,
                d: 2,
                beta: 1.0,
                seed: 9,
            },
            ScaleMode::Unnormalized,
        )
        .unwrap();
        let g = grad_squared(&p, &ds).unwrap();
        // u = 0 at init, so row r = -sum_i y_i a_r x_i 1[w_r.x_i >= 0]
        for r in 0..8 {
            let mut expect = vec![0.0, 0.0];
            for (x, &y) in ds.points.iter().zip(&ds.labels) {
                if linalg::dot(p.weights.row(r), x) >= 0.0 {
                    linalg::axpy(-y * p.signs[r], x, &mut expect);
                }
            }
            for (a, b) in g.row(r).iter().zip(&expect) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gd_step_basics() {
        let ds = gen_alternating_circle(4).unwrap();
        let p = coupled_init(
            &InitConfig {
                m: 8,
                d: 2,
                beta: 1.0,
                seed: 2,
            },
            ScaleMode::Unnormalized,
        )
        .unwrap();
        let g = grad_squared(&p, &ds).unwrap();
        let same = gd_step(&p, &g, 0.0).unwrap();
        assert_eq!(same.weights, p.weights);
        assert!(gd_step(&p, &g, -0.1).is_err());

        // one step from coupled init: pair rows get opposite updates
        let stepped = gd_step(&p, &g, 0.05).unwrap();
        assert!(!stepped.paired);
        for i in 0..4 {
            let (r, s) = (2 * i, 2 * i + 1);
            let dr: Vec<f64> = stepped
                .weights
                .row(r)
                .iter()
                .zip(p.weights.row(r))
                .map(|(a, b)| a - b)
                .collect();
            let dsrow: Vec<f64> = stepped
                .weights
                .row(s)
                .iter()
                .zip(p.weights.row(s))
                .map(|(a, b)| a - b)
                .collect();
            for (a, b) in dr.iter().zip(&dsrow) {
                assert!((a + b).abs() < 1e-15, "pair updates not opposite");
            }
        }

        // two steps compose
        let g2 = grad_squared(&stepped, &ds).unwrap();
        let twice = gd_step(&stepped, &g2, 0.05).unwrap();
        let mut manual = p.clone();
        for (w, gv) in manual.weights.data.iter_mut().zip(&g.data) {
            *w -= 0.05 * gv;
        }
        for (w, gv) in manual.weights.data.iter_mut().zip(&g2.data) {
            *w -= 0.05 * gv;
        }
        for (a, b) in twice.weights.data.iter().zip(&manual.weights.data) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn activation_pattern_matches_brute_force() {
        let ds = gen_random_sphere(4, 3, LabelMode::RandomSigns, 1).unwrap();
        let p = coupled_init(
            &InitConfig {
                m: 8,
                d: 3,
                beta: 1.0,
                seed: 1,
            },
            ScaleMode::InvSqrtM,
        )
        .unwrap();
        let pat = activation_pattern(&p, &ds).unwrap();
        for r in 0..8 {
            for i in 0..4 {
                let expect = linalg::dot(p.weights.row(r), &ds.points[i]) >= 0.0;
                assert_eq!(pat.get(r, i), expect);
            }
        }
        // coupled rows share pattern columns
        for i in 0..4 {
            for pair in 0..4 {
                assert_eq!(pat.get(2 * pair, i), pat.get(2 * pair + 1, i));
            }
        }
        // pattern of -W is the complement when there are no exact zeros
        let mut neg = p.clone();
        for w in neg.weights.data.iter_mut() {
            *w = -*w;
        }
        let npat = activation_pattern(&neg, &ds).unwrap();
        for (a, b) in pat.fires.iter().zip(&npat.fires) {
            assert_ne!(a, b);
        }
    }

    #[test]
    fn logistic_per_example_row_norm_bounded() {
        // |l'| <= 1 and ||x|| = 1, so each per-example gradient row has norm <= s
        let ds = gen_random_sphere(6, 4, LabelMode::RandomSigns, 3).unwrap();
        let p = coupled_init(
            &InitConfig {
                m: 12,
                d: 4,
                beta: 1.0,
                seed: 7,
            },
            ScaleMode::InvSqrtM,
        )
        .unwrap();
        let s = p.scale();
        let u = forward_all(&p, &ds).unwrap();
        for (i, x) in ds.points.iter().enumerate() {
            let coeff = logistic_loss_derivative(ds.labels[i] * u[i]) * ds.labels[i];
            let g = grad_f(&p, x).unwrap();
            for r in 0..p.m() {
                let row_norm = linalg::norm2(g.row(r)) * coeff.abs();
                assert!(row_norm <= s + 1e-15);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let p = coupled_init(
            &InitConfig {
                m: 4,
                d: 2,
                beta: 1.5,
                seed: 8,
            },
            ScaleMode::InvSqrtM,
        )
        .unwrap();
        let s = p.to_json();
        let back = NetParams::from_json(&s).unwrap();
        assert_eq!(back.weights, p.weights);
        assert_eq!(back.signs, p.signs);
        assert_eq!(back.scale_mode, p.scale_mode);
    }
}
