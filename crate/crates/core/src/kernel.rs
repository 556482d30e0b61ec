//! NTK Gram matrices and their concentration/perturbation checks.
//!
//! `H^cts` is the infinite-width kernel `E_w[x_i^T x_j 1{w.x_i >= 0, w.x_j >= 0}]`,
//! evaluated in closed form via the arc-cosine identity
//! `E[1{..}] = (pi - arccos(<x_i,x_j>)) / (2 pi)` and cross-validated against
//! the Monte-Carlo estimator [`h_cts_mc`]. All indicator sums use the `>= 0`
//! convention of the kernel definitions.

use crate::dataset::Dataset;
use crate::linalg::{self, Mat};
use crate::network::NetParams;
use crate::parallel;
use crate::rng::{self, tag};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance for the symmetry guard in [`min_eig`].
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Off-diagonal norm target for the Jacobi sweep.
pub const JACOBI_TOL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    CtsClosedForm,
    CtsMonteCarlo,
    Dis,
    TimeT,
    TimeTPerp,
}

/// n x n kernel matrix with provenance and a min-eigenvalue cache.
///
/// All provenances are symmetric except `TimeTPerp`, whose row-indexed flip
/// sets break symmetry; only its Frobenius norm is used.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub entries: Mat,
    pub provenance: Provenance,
    pub min_eig_cache: Option<f64>,
}

impl KernelMatrix {
    fn new(entries: Mat, provenance: Provenance) -> KernelMatrix {
        KernelMatrix {
            entries,
            provenance,
            min_eig_cache: None,
        }
    }

    pub fn n(&self) -> usize {
        self.entries.rows
    }

    pub fn frobenius_distance(&self, other: &KernelMatrix) -> f64 {
        (&self.entries - &other.entries).frobenius_norm()
    }

    /// Smallest eigenvalue, computed once and cached.
    pub fn min_eig_cached(&mut self) -> Result<f64> {
        if let Some(v) = self.min_eig_cache {
            return Ok(v);
        }
        let v = min_eig(self)?;
        self.min_eig_cache = Some(v);
        Ok(v)
    }
}

fn gram(ds: &Dataset) -> Mat {
    let n = ds.n();
    let mut g = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g.set(i, j, linalg::dot(&ds.points[i], &ds.points[j]));
        }
    }
    g
}

/// Closed-form infinite-width kernel:
/// entry (i,j) = `<x_i,x_j> * (pi - arccos(clamp(<x_i,x_j>, -1, 1))) / (2 pi)`.
pub fn h_cts(ds: &Dataset) -> Result<KernelMatrix> {
    ds.validate()?;
    let n = ds.n();
    let g = gram(ds);
    let mut k = Mat::zeros(n, n);
    for i in 0..n {
        // Pr[w.x_i >= 0] = 1/2 and ||x_i|| = 1, so the diagonal is exactly 1/2;
        // computing it through arccos would lose ~1e-8 to the sqrt singularity.
        k.set(i, i, 0.5);
        for j in 0..n {
            if i == j {
                continue;
            }
            let c = g.get(i, j).clamp(-1.0, 1.0);
            k.set(
                i,
                j,
                g.get(i, j) * (std::f64::consts::PI - c.acos()) / (2.0 * std::f64::consts::PI),
            );
        }
    }
    Ok(KernelMatrix::new(k, Provenance::CtsClosedForm))
}

/// Monte-Carlo kernel estimate with per-entry standard errors.
pub struct McKernel {
    pub kernel: KernelMatrix,
    pub std_errors: Mat,
    pub samples: usize,
}

/// Empirical mean of `x_i^T x_j 1{w.x_i >= 0, w.x_j >= 0}` over Gaussian w.
pub fn h_cts_mc(ds: &Dataset, samples: usize, seed: u64) -> Result<McKernel> {
    ds.validate()?;
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let n = ds.n();
    let d = ds.d();
    let g = gram(ds);
    let counts = parallel::map_reduce_blocks(
        samples,
        parallel::MC_BLOCK,
        |range| {
            let block = range.start / parallel::MC_BLOCK;
            let mut rng = rng::substream(seed, &[tag::MC, 0xce11, block as u64]);
            let mut count = vec![0.0; n * n];
            let mut fire = vec![false; n];
            for _ in range {
                let w = rng::gaussian_vec(&mut rng, d);
                for (i, x) in ds.points.iter().enumerate() {
                    fire[i] = linalg::dot(&w, x) >= 0.0;
                }
                for i in 0..n {
                    if fire[i] {
                        for j in 0..n {
                            if fire[j] {
                                count[i * n + j] += 1.0;
                            }
                        }
                    }
                }
            }
            count
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                *x += y;
            }
            a
        },
    )
    .expect("samples > 0");

    let mut entries = Mat::zeros(n, n);
    let mut se = Mat::zeros(n, n);
    let ns = samples as f64;
    for i in 0..n {
        for j in 0..n {
            let p = counts[i * n + j] / ns;
            let gij = g.get(i, j);
            entries.set(i, j, gij * p);
            // indicator product is Bernoulli(p); scale by |<x_i,x_j>|
            se.set(i, j, gij.abs() * (p * (1.0 - p) / ns).sqrt());
        }
    }
    Ok(McKernel {
        kernel: KernelMatrix::new(entries, Provenance::CtsMonteCarlo),
        std_errors: se,
        samples,
    })
}

fn h_from_weights(ds: &Dataset, weights: &Mat, provenance: Provenance) -> Result<KernelMatrix> {
    if weights.cols != ds.d() {
        return Err(Error::DimensionMismatch(format!(
            "weights dim {} vs dataset dim {}",
            weights.cols,
            ds.d()
        )));
    }
    let n = ds.n();
    let m = weights.rows;
    if m == 0 {
        return Err(Error::invalid("need at least one weight row"));
    }
    let g = gram(ds);
    let rows_per_block = 4096usize;
    let counts = parallel::map_reduce_blocks(
        m,
        rows_per_block,
        |range| {
            let mut count = vec![0.0; n * n];
            let mut fire = vec![false; n];
            for r in range {
                let w = weights.row(r);
                for (i, x) in ds.points.iter().enumerate() {
                    fire[i] = linalg::dot(w, x) >= 0.0;
                }
                for i in 0..n {
                    if fire[i] {
                        for j in 0..n {
                            if fire[j] {
                                count[i * n + j] += 1.0;
                            }
                        }
                    }
                }
            }
            count
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                *x += y;
            }
            a
        },
    )
    .expect("m > 0");
    let mut entries = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            entries.set(i, j, g.get(i, j) * counts[i * n + j] / m as f64);
        }
    }
    Ok(KernelMatrix::new(entries, provenance))
}

/// Finite-sample kernel `(1/m) sum_r x_i^T x_j 1{w_r.x_i >= 0, w_r.x_j >= 0}`.
pub fn h_dis(ds: &Dataset, weights: &Mat) -> Result<KernelMatrix> {
    h_from_weights(ds, weights, Provenance::Dis)
}

/// Kernel induced by the current training weights.
pub fn h_t(params: &NetParams, ds: &Dataset) -> Result<KernelMatrix> {
    h_from_weights(ds, &params.weights, Provenance::TimeT)
}

/// Restriction of [`h_t`] to the flip sets: row i sums only over
/// `r` with `|<w_r(0), x_i>| < r_ball` (rows whose indicator on `x_i` can
/// change inside an `r_ball`-ball around the initial weights).
pub fn h_t_perp(
    params_init: &NetParams,
    params_t: &NetParams,
    ds: &Dataset,
    r_ball: f64,
) -> Result<KernelMatrix> {
    if params_init.m() != params_t.m() || params_init.d() != params_t.d() {
        return Err(Error::DimensionMismatch("init vs current params".into()));
    }
    if params_t.d() != ds.d() {
        return Err(Error::DimensionMismatch("params vs dataset".into()));
    }
    if r_ball < 0.0 {
        return Err(Error::invalid("flip radius must be >= 0"));
    }
    let n = ds.n();
    let m = params_t.m();
    let g = gram(ds);
    // count first, multiply once: keeps h_t_perp at R = infinity bit-equal to h_t
    let mut counts = vec![0.0; n * n];
    let mut fire = vec![false; n];
    let mut near = vec![false; n];
    for r in 0..m {
        let w0 = params_init.weights.row(r);
        let wt = params_t.weights.row(r);
        for (i, x) in ds.points.iter().enumerate() {
            near[i] = linalg::dot(w0, x).abs() < r_ball;
            fire[i] = linalg::dot(wt, x) >= 0.0;
        }
        for i in 0..n {
            if near[i] && fire[i] {
                for j in 0..n {
                    if fire[j] {
                        counts[i * n + j] += 1.0;
                    }
                }
            }
        }
    }
    let mut entries = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            entries.set(i, j, g.get(i, j) * counts[i * n + j] / m as f64);
        }
    }
    Ok(KernelMatrix::new(entries, Provenance::TimeTPerp))
}

/// Smallest eigenvalue via cyclic Jacobi. Rejects matrices that are
/// asymmetric beyond [`SYMMETRY_TOL`].
pub fn min_eig(k: &KernelMatrix) -> Result<f64> {
    if k.entries.asymmetry() > SYMMETRY_TOL {
        return Err(Error::invalid(format!(
            "matrix asymmetric beyond {SYMMETRY_TOL:.0e}"
        )));
    }
    let ev = linalg::sym_eigenvalues(&k.entries, JACOBI_TOL)?;
    ev.first()
        .copied()
        .ok_or_else(|| Error::invalid("empty matrix"))
}

/// Lemma-style concentration report for `H^dis` vs `H^cts`.
#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationReport {
    pub lambda: f64,
    pub m0: usize,
    pub b_copies: usize,
    pub trials: usize,
    /// fraction of trials with `||H^dis - H^cts||_F <= lambda/4` and
    /// `lambda_min(H^dis) >= (3/4) lambda`
    pub pass_rate: f64,
    pub mean_frobenius_error: f64,
    /// m0 needed by the stated bound at this failure probability
    pub required_m0: f64,
}

/// Draws `m0 * b_copies` block-coupled weights per trial and checks the
/// concentration bounds `||H^dis - H^cts||_F <= lambda/4` and
/// `lambda_min(H^dis) >= (3/4) lambda`.
pub fn concentration_check(
    ds: &Dataset,
    m0: usize,
    b_copies: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    if m0 == 0 || b_copies == 0 || trials == 0 {
        return Err(Error::invalid("m0, B, trials must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0,1)"));
    }
    let cts = h_cts(ds)?;
    let lambda = min_eig(&cts)?;
    let n = ds.n();
    let d = ds.d();
    let results = parallel::map_indexed(trials, |trial| {
        let mut rng = rng::substream(seed, &[tag::TRIAL, 0xc0c, trial as u64]);
        let mut weights = Mat::zeros(m0 * b_copies, d);
        for r in 0..m0 {
            let row = rng::gaussian_vec(&mut rng, d);
            for b in 0..b_copies {
                weights.row_mut(r * b_copies + b).copy_from_slice(&row);
            }
        }
        let dis = h_dis(ds, &weights).expect("dims checked");
        let err = dis.frobenius_distance(&cts);
        let lmin = min_eig(&dis).expect("symmetric by construction");
        (err, lmin)
    });
    let passes = results
        .iter()
        .filter(|(err, lmin)| *err <= lambda / 4.0 && *lmin >= 0.75 * lambda)
        .count();
    let mean_err = results.iter().map(|(e, _)| e).sum::<f64>() / trials as f64;
    let required =
        16.0 * (n * n) as f64 / (lambda * lambda) * (2.0 * (n * n * b_copies) as f64 / delta).ln();
    Ok(ConcentrationReport {
        lambda,
        m0,
        b_copies,
        trials,
        pass_rate: passes as f64 / trials as f64,
        mean_frobenius_error: mean_err,
        required_m0: required,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationReport {
    pub r_ball: f64,
    pub m: usize,
    pub trials: usize,
    /// fraction of trials with `||H(w) - H(w~)||_F < 2 n R`
    pub pass_rate: f64,
    pub mean_distance: f64,
    pub bound: f64,
}

/// Draws coupled weights, perturbs every row by a uniform-in-ball vector of
/// norm at most `r_ball`, and compares `||H(w) - H(w~)||_F` to `2 n R`.
pub fn perturbation_check(
    ds: &Dataset,
    r_ball: f64,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<PerturbationReport> {
    if m == 0 || m % 2 != 0 || trials == 0 {
        return Err(Error::invalid("need even positive m and trials > 0"));
    }
    if !(r_ball >= 0.0) {
        return Err(Error::invalid("R must be >= 0"));
    }
    let n = ds.n();
    let d = ds.d();
    let bound = 2.0 * n as f64 * r_ball;
    let results = parallel::map_indexed(trials, |trial| {
        let mut rng = rng::substream(seed, &[tag::PERTURB, trial as u64]);
        let mut weights = Mat::zeros(m, d);
        for i in 0..m / 2 {
            let row = rng::gaussian_vec(&mut rng, d);
            weights.row_mut(2 * i).copy_from_slice(&row);
            weights.row_mut(2 * i + 1).copy_from_slice(&row);
        }
        let mut perturbed = weights.clone();
        for r in 0..m {
            // uniform in the R-ball: gaussian direction, radius U^(1/d)
            let mut dir = rng::gaussian_vec(&mut rng, d);
            let norm = linalg::norm2(&dir).max(1e-300);
            let u: f64 = rand::Rng::gen(&mut rng);
            let radius = r_ball * u.powf(1.0 / d as f64);
            linalg::scale(radius / norm, &mut dir);
            linalg::axpy(1.0, &dir, perturbed.row_mut(r));
        }
        let h0 = h_dis(ds, &weights).expect("dims checked");
        let h1 = h_dis(ds, &perturbed).expect("dims checked");
        h0.frobenius_distance(&h1)
    });
    let passes = results.iter().filter(|&&d| d < bound || r_ball == 0.0).count();
    Ok(PerturbationReport {
        r_ball,
        m,
        trials,
        pass_rate: passes as f64 / trials as f64,
        mean_distance: results.iter().sum::<f64>() / trials as f64,
        bound,
    })
}
