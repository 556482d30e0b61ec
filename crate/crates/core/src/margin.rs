//! NTK separation margin: bounded maps `v̄`, Monte-Carlo estimation of
//! `min_i y_i E_z[<v̄(z), x_i> 1{<z, x_i> > 0}]`, the exact alternating-circle
//! margin, margin upper bounds, separator construction, and margin
//! composition across orthogonal subspaces.
//!
//! Margin integrals use the strict `> 0` indicator of the margin definition;
//! the flip of convention against the network gradients is harmless because
//! the boundary has Gaussian measure zero.

use crate::dataset::Dataset;
use crate::linalg::{self, Mat};
use crate::network::NetParams;
use crate::parallel;
use crate::rng::{self, tag};
use crate::{Error, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
/// Collinearity tolerance for the circle map's exceptional set.
pub const COLLINEAR_TOL: f64 = 1e-12;
/// Slack allowed on the unit-ball membership of map outputs.
pub const BALL_TOL: f64 = 1e-12;

/// A map from directions to the unit ball. `NaturalV0` is the normalized
/// cone sum `sum_{i in U_z} x_i y_i / ||..||` (zero when the sum vanishes);
/// `CircleRz` is the alternating-circle map `(-1)^(n/4+1) r_z`;
/// `ConstantDirection` ignores z; `Radial` sends z to `z/||z||`;
/// `AngularTable` is piecewise constant in angle (d = 2 only).
#[derive(Clone, Debug)]
pub enum VBarMap {
    NaturalV0 {
        points: Vec<Vec<f64>>,
        labels: Vec<f64>,
    },
    CircleRz {
        n: usize,
    },
    ConstantDirection {
        dir: Vec<f64>,
    },
    Radial,
    AngularTable {
        /// sorted angles in [0, 2 pi); entry k applies on [breaks[k], breaks[k+1])
        breaks: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

impl VBarMap {
    pub fn natural_v0(ds: &Dataset) -> VBarMap {
        VBarMap::NaturalV0 {
            points: ds.points.clone(),
            labels: ds.labels.clone(),
        }
    }

    pub fn circle_rz(n: usize) -> Result<VBarMap> {
        if n == 0 || n % 4 != 0 {
            return Err(Error::invalid("circle map needs n divisible by 4"));
        }
        Ok(VBarMap::CircleRz { n })
    }

    pub fn constant_direction(dir: Vec<f64>) -> Result<VBarMap> {
        if linalg::norm2(&dir) > 1.0 + BALL_TOL {
            return Err(Error::invalid("direction must lie in the unit ball"));
        }
        Ok(VBarMap::ConstantDirection { dir })
    }

    pub fn angular_table(breaks: Vec<f64>, values: Vec<Vec<f64>>) -> Result<VBarMap> {
        if breaks.len() != values.len() || breaks.is_empty() {
            return Err(Error::invalid("table needs one value per break"));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("breaks must be strictly increasing"));
        }
        if breaks[0] < 0.0 || *breaks.last().unwrap() >= TWO_PI {
            return Err(Error::invalid("breaks must lie in [0, 2 pi)"));
        }
        if values.iter().any(|v| linalg::norm2(v) > 1.0 + BALL_TOL) {
            return Err(Error::invalid("table values must lie in the unit ball"));
        }
        Ok(VBarMap::AngularTable { breaks, values })
    }

    /// Angles where the map value can change (d = 2 maps); `None` for maps
    /// without a piecewise-constant angular structure.
    fn angular_breakpoints(&self) -> Option<Vec<f64>> {
        match self {
            VBarMap::CircleRz { n } => {
                Some((0..*n).map(|k| k as f64 * TWO_PI / *n as f64).collect())
            }
            VBarMap::AngularTable { breaks, .. } => Some(breaks.clone()),
            VBarMap::ConstantDirection { .. } => Some(vec![]),
            VBarMap::NaturalV0 { points, .. } => {
                if points.first().map_or(0, |p| p.len()) != 2 {
                    return None;
                }
                // cone pattern changes where z is orthogonal to a data point
                let mut bps = Vec::with_capacity(2 * points.len());
                for p in points {
                    let ang = p[1].atan2(p[0]);
                    for shift in [std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2] {
                        bps.push((ang + shift).rem_euclid(TWO_PI));
                    }
                }
                bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
                Some(bps)
            }
            VBarMap::Radial => None,
        }
    }
}

/// Evaluates the map at `z`; rejects `z = 0`.
pub fn vbar_eval(map: &VBarMap, z: &[f64]) -> Result<Vec<f64>> {
    let zn = linalg::norm2(z);
    if zn == 0.0 {
        return Err(Error::invalid("v-bar maps are undefined at z = 0"));
    }
    match map {
        VBarMap::NaturalV0 { points, labels } => {
            if points[0].len() != z.len() {
                return Err(Error::DimensionMismatch("v0 input dim".into()));
            }
            let d = z.len();
            let mut sum = vec![0.0; d];
            for (x, &y) in points.iter().zip(labels) {
                if linalg::dot(z, x) > 0.0 {
                    linalg::axpy(y, x, &mut sum);
                }
            }
            let norm = linalg::norm2(&sum);
            if norm < 1e-12 {
                return Ok(vec![0.0; d]);
            }
            linalg::scale(1.0 / norm, &mut sum);
            Ok(sum)
        }
        VBarMap::CircleRz { n } => {
            if z.len() != 2 {
                return Err(Error::DimensionMismatch("circle map needs d = 2".into()));
            }
            let n = *n;
            let spacing = TWO_PI / n as f64;
            let theta = z[1].atan2(z[0]).rem_euclid(TWO_PI);
            let k = ((theta / spacing) as usize).min(n - 1);
            let frac = theta - k as f64 * spacing;
            // z collinear with a data point: angular distance below tolerance
            if frac.min(spacing - frac) < COLLINEAR_TOL {
                return Ok(vec![0.0, 0.0]);
            }
            Ok(circle_rz_value(n, k))
        }
        VBarMap::ConstantDirection { dir } => {
            if dir.len() != z.len() {
                return Err(Error::DimensionMismatch("direction dim".into()));
            }
            Ok(dir.clone())
        }
        VBarMap::Radial => Ok(z.iter().map(|v| v / zn).collect()),
        VBarMap::AngularTable { breaks, values } => {
            if z.len() != 2 {
                return Err(Error::DimensionMismatch("angular table needs d = 2".into()));
            }
            let theta = z[1].atan2(z[0]).rem_euclid(TWO_PI);
            let idx = match breaks.partition_point(|&b| b <= theta) {
                0 => breaks.len() - 1, // theta below the first break wraps around
                k => k - 1,
            };
            Ok(values[idx].clone())
        }
    }
}

/// `(-1)^(n/4+1) (x_k y_k + x_{k+1} y_{k+1}) / ||x_k - x_{k+1}||` for the
/// alternating circle, for z in the cone of points k and k+1.
fn circle_rz_value(n: usize, k: usize) -> Vec<f64> {
    let ang = |j: usize| TWO_PI * (j % n) as f64 / n as f64;
    let label = |j: usize| if j % 2 == 0 { 1.0 } else { -1.0 };
    let (a0, a1) = (ang(k), ang(k + 1));
    let (x0, x1) = ([a0.cos(), a0.sin()], [a1.cos(), a1.sin()]);
    let (y0, y1) = (label(k), label(k + 1));
    let diff = [x0[0] - x1[0], x0[1] - x1[1]];
    let denom = linalg::norm2(&diff);
    // (-1)^(n/4+1): positive exactly when n/4 is odd
    let sign = if (n / 4 + 1) % 2 == 0 { 1.0 } else { -1.0 };
    vec![
        sign * (x0[0] * y0 + x1[0] * y1) / denom,
        sign * (x0[1] * y0 + x1[1] * y1) / denom,
    ]
}

/// Monte-Carlo margin estimate with per-point values and standard errors.
#[derive(Clone, Debug, serde::Serialize)]
pub struct MarginEstimate {
    pub per_point: Vec<f64>,
    pub gamma: f64,
    pub std_errors: Vec<f64>,
    pub samples: usize,
}

impl MarginEstimate {
    /// Index attaining the minimum per-point value.
    pub fn argmin(&self) -> usize {
        self.per_point
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap()
    }
}

/// Estimates `y_i E_z[<v̄(z), x_i> 1{<z, x_i> > 0}]` per point over Gaussian
/// z; gamma is the minimum. Deterministic given the seed.
pub fn margin_mc(ds: &Dataset, map: &VBarMap, samples: usize, seed: u64) -> Result<MarginEstimate> {
    ds.validate()?;
    if samples < 100 {
        return Err(Error::invalid("margin estimation needs >= 100 samples"));
    }
    let n = ds.n();
    let d = ds.d();
    let (sum, sum_sq) = parallel::map_reduce_blocks(
        samples,
        parallel::MC_BLOCK,
        |range| {
            let block = range.start / parallel::MC_BLOCK;
            let mut rng = rng::substream(seed, &[tag::MC, 0x3a6, block as u64]);
            let mut sum = vec![0.0; n];
            let mut sum_sq = vec![0.0; n];
            for _ in range {
                let z = rng::gaussian_vec(&mut rng, d);
                let v = vbar_eval(map, &z).expect("gaussian z is nonzero");
                for (i, x) in ds.points.iter().enumerate() {
                    if linalg::dot(&z, x) > 0.0 {
                        let t = ds.labels[i] * linalg::dot(&v, x);
                        sum[i] += t;
                        sum_sq[i] += t * t;
                    }
                }
            }
            (sum, sum_sq)
        },
        |(mut s, mut q), (s2, q2)| {
            for (a, b) in s.iter_mut().zip(&s2) {
                *a += b;
            }
            for (a, b) in q.iter_mut().zip(&q2) {
                *a += b;
            }
            (s, q)
        },
    )
    .expect("samples >= 100");
    let ns = samples as f64;
    let per_point: Vec<f64> = sum.iter().map(|s| s / ns).collect();
    let std_errors: Vec<f64> = sum_sq
        .iter()
        .zip(&per_point)
        .map(|(&q, &m)| ((q / ns - m * m).max(0.0) / ns).sqrt())
        .collect();
    let gamma = per_point.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(MarginEstimate {
        per_point,
        gamma,
        std_errors,
        samples,
    })
}

/// Exact alternating-circle margin
/// `gamma(n) = (2/n) sum_{k=1}^{n/4} (-1)^(k-1) cos((2k-1) pi / n)`.
pub fn margin_circle_exact(n: usize) -> Result<f64> {
    if n == 0 || n % 4 != 0 {
        return Err(Error::invalid("circle margin needs n divisible by 4"));
    }
    let mut total = 0.0;
    for k in 1..=(n / 4) {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * ((2 * k - 1) as f64 * std::f64::consts::PI / n as f64).cos();
    }
    Ok(2.0 / n as f64 * total)
}

/// Closed form `sum_{k=0}^{n-1} cos(a + k b)
///   = cos(a + (n-1) b / 2) sin(n b / 2) / sin(b / 2)`.
pub fn cos_sum(a: f64, b: f64, n_tilde: usize) -> Result<f64> {
    let half = (b / 2.0).sin();
    if half.abs() <= 1e-12 {
        return Err(Error::invalid("cos_sum needs b not congruent to 0 mod 2 pi"));
    }
    let n = n_tilde as f64;
    Ok((a + (n - 1.0) * b / 2.0).cos() * (n * b / 2.0).sin() / half)
}

/// Monte-Carlo estimate of the margin upper bound
/// `E_z[(1/|S|) || sum_{i in S, <z,x_i> > 0} x_i y_i ||]` (any map is bounded
/// by this, by averaging and Cauchy-Schwarz).
pub fn margin_upper_bound_mc(
    ds: &Dataset,
    subset: &[usize],
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    ds.validate()?;
    if subset.is_empty() || subset.iter().any(|&i| i >= ds.n()) {
        return Err(Error::invalid("subset must be nonempty and in range"));
    }
    if samples < 100 {
        return Err(Error::invalid("need >= 100 samples"));
    }
    let d = ds.d();
    let (sum, sum_sq) = parallel::map_reduce_blocks(
        samples,
        parallel::MC_BLOCK,
        |range| {
            let block = range.start / parallel::MC_BLOCK;
            let mut rng = rng::substream(seed, &[tag::MC, 0x0b0d, block as u64]);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in range {
                let z = rng::gaussian_vec(&mut rng, d);
                let mut acc = vec![0.0; d];
                for &i in subset {
                    if linalg::dot(&z, &ds.points[i]) > 0.0 {
                        linalg::axpy(ds.labels[i], &ds.points[i], &mut acc);
                    }
                }
                let t = linalg::norm2(&acc) / subset.len() as f64;
                sum += t;
                sum_sq += t * t;
            }
            (sum, sum_sq)
        },
        |a, b| (a.0 + b.0, a.1 + b.1),
    )
    .expect("samples > 0");
    let ns = samples as f64;
    let mean = sum / ns;
    let se = ((sum_sq / ns - mean * mean).max(0.0) / ns).sqrt();
    Ok((mean, se))
}

/// m x d separator with row norms at most `1/sqrt(m)` and Frobenius norm at
/// most 1.
#[derive(Clone, Debug)]
pub struct Separator {
    pub rows: Mat,
}

impl Separator {
    pub fn validate(&self) -> Result<()> {
        let m = self.rows.rows;
        let cap = 1.0 / (m as f64).sqrt() + BALL_TOL;
        for r in 0..m {
            if linalg::norm2(self.rows.row(r)) > cap {
                return Err(Error::invalid(format!("separator row {r} exceeds 1/sqrt(m)")));
            }
        }
        if self.rows.frobenius_norm() > 1.0 + BALL_TOL {
            return Err(Error::invalid("separator Frobenius norm exceeds 1"));
        }
        Ok(())
    }
}

/// The natural separator `u_s = a_s v̄(w_{s,0}) / sqrt(m)`.
pub fn build_separator(params_init: &NetParams, map: &VBarMap) -> Result<Separator> {
    let m = params_init.m();
    let d = params_init.d();
    let scale = 1.0 / (m as f64).sqrt();
    let mut rows = Mat::zeros(m, d);
    for r in 0..m {
        let w = params_init.weights.row(r);
        if linalg::norm2(w) == 0.0 {
            continue;
        }
        let v = vbar_eval(map, w)?;
        let out = rows.row_mut(r);
        for (o, vi) in out.iter_mut().zip(&v) {
            *o = params_init.signs[r] * scale * vi;
        }
    }
    let sep = Separator { rows };
    sep.validate()?;
    Ok(sep)
}

/// Outcome of the 2-D net construction.
#[derive(Clone, Debug)]
pub struct Separator2d {
    pub separator: Separator,
    /// cones whose row count fell below P(V) m / 2 (their scale was clamped)
    pub clamped_cones: usize,
    /// cones that received no weight rows at all
    pub empty_cones: usize,
    pub cone_count: usize,
    pub net_spacing: f64,
}

/// Net-based 2-D separator: net points at spacing `2 pi / ceil(2 pi / b)`
/// with `b = gamma / 4`, nearest and second-nearest net points per data
/// point, cones delimited by the net-point perpendiculars, and rows
/// `u_j = a_j (v̄'(V) / sqrt(m)) * P(V) m / (2 n_V)` for `w_j` in cone V,
/// where `v̄'` is the cone-conditional average of the map.
pub fn build_separator_2d(
    params_init: &NetParams,
    ds: &Dataset,
    map: &VBarMap,
    gamma: f64,
    _delta: f64,
) -> Result<Separator2d> {
    if params_init.d() != 2 || ds.d() != 2 {
        return Err(Error::invalid("net separator construction needs d = 2"));
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid("need gamma > 0"));
    }
    let m = params_init.m();
    let b = gamma / 4.0;
    let n_net = (TWO_PI / b).ceil() as usize;
    let spacing = TWO_PI / n_net as f64;

    // nearest and second-nearest net indices per data point
    let mut net_ids = std::collections::BTreeSet::new();
    for p in &ds.points {
        let theta = p[1].atan2(p[0]).rem_euclid(TWO_PI);
        let lo = (theta / spacing).floor() as i64;
        let mut cands: Vec<(f64, i64)> = [lo - 1, lo, lo + 1, lo + 2]
            .iter()
            .map(|&j| {
                let ang = j as f64 * spacing;
                let dist = (theta - ang).abs();
                (dist.min(TWO_PI - dist), j.rem_euclid(n_net as i64))
            })
            .collect();
        cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        net_ids.insert(cands[0].1);
        let second = cands.iter().find(|c| c.1 != cands[0].1).expect("distinct");
        net_ids.insert(second.1);
    }

    // cone boundaries: net angles +- pi/2
    let mut bounds: Vec<f64> = net_ids
        .iter()
        .flat_map(|&j| {
            let ang = j as f64 * spacing;
            [
                (ang + std::f64::consts::FRAC_PI_2).rem_euclid(TWO_PI),
                (ang - std::f64::consts::FRAC_PI_2).rem_euclid(TWO_PI),
            ]
        })
        .collect();
    bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bounds.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let k_cones = bounds.len();

    let region_of = |theta: f64| -> usize {
        match bounds.partition_point(|&bv| bv <= theta) {
            0 => k_cones - 1,
            k => k - 1,
        }
    };
    let region_width = |k: usize| -> f64 {
        let lo = bounds[k];
        let hi = if k + 1 < k_cones { bounds[k + 1] } else { bounds[0] + TWO_PI };
        hi - lo
    };

    // count rows per cone
    let mut counts = vec![0usize; k_cones];
    let mut row_region = vec![0usize; m];
    for r in 0..m {
        let w = params_init.weights.row(r);
        let theta = w[1].atan2(w[0]).rem_euclid(TWO_PI);
        let k = region_of(theta);
        row_region[r] = k;
        counts[k] += 1;
    }

    let mut clamped = 0usize;
    let mut empty = 0usize;
    let mut cone_scale = vec![0.0; k_cones];
    let mut cone_value = vec![vec![0.0, 0.0]; k_cones];
    for k in 0..k_cones {
        let width = region_width(k);
        let prob = width / TWO_PI;
        if counts[k] == 0 {
            empty += 1;
            continue;
        }
        let raw = prob * m as f64 / (2.0 * counts[k] as f64);
        if raw > 1.0 {
            clamped += 1;
        }
        cone_scale[k] = raw.min(1.0);
        cone_value[k] = angular_average(map, bounds[k], width)?;
    }

    let scale = 1.0 / (m as f64).sqrt();
    let mut rows = Mat::zeros(m, 2);
    for r in 0..m {
        let k = row_region[r];
        if counts[k] == 0 {
            continue;
        }
        let coeff = params_init.signs[r] * scale * cone_scale[k];
        let out = rows.row_mut(r);
        out[0] = coeff * cone_value[k][0];
        out[1] = coeff * cone_value[k][1];
    }
    let separator = Separator { rows };
    separator.validate()?;
    Ok(Separator2d {
        separator,
        clamped_cones: clamped,
        empty_cones: empty,
        cone_count: k_cones,
        net_spacing: spacing,
    })
}

/// Average of the map over the angular interval `[start, start + width)`,
/// exact for piecewise-constant maps and 256-point midpoint quadrature
/// otherwise. The average stays in the unit ball by convexity.
fn angular_average(map: &VBarMap, start: f64, width: f64) -> Result<Vec<f64>> {
    let eval_at = |ang: f64| -> Result<Vec<f64>> {
        let a = ang.rem_euclid(TWO_PI);
        vbar_eval(map, &[a.cos(), a.sin()])
    };
    let cuts: Vec<f64> = match map.angular_breakpoints() {
        Some(bps) => {
            let mut cuts = vec![start, start + width];
            for bp in bps {
                for wrap in [-TWO_PI, 0.0, TWO_PI] {
                    let c = bp + wrap;
                    if c > start && c < start + width {
                        cuts.push(c);
                    }
                }
            }
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
            cuts
        }
        None => (0..=256)
            .map(|i| start + width * i as f64 / 256.0)
            .collect(),
    };
    let mut acc = vec![0.0, 0.0];
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let v = eval_at(0.5 * (lo + hi))?;
        linalg::axpy((hi - lo) / width, &v, &mut acc);
    }
    Ok(acc)
}

/// Per-point NTK inner products `y_i <grad f_i(params), rows>` at the
/// `1/sqrt(m)` scale.
pub fn ntk_margin_rows(params: &NetParams, ds: &Dataset, rows: &Mat) -> Result<Vec<f64>> {
    if rows.rows != params.m() || rows.cols != params.d() {
        return Err(Error::DimensionMismatch("separator shape".into()));
    }
    if ds.d() != params.d() {
        return Err(Error::DimensionMismatch("dataset vs params".into()));
    }
    let m = params.m();
    let scale = 1.0 / (m as f64).sqrt();
    let mut out = Vec::with_capacity(ds.n());
    for (x, &y) in ds.points.iter().zip(&ds.labels) {
        let mut acc = 0.0;
        for r in 0..m {
            if linalg::dot(params.weights.row(r), x) >= 0.0 {
                acc += params.signs[r] * linalg::dot(rows.row(r), x);
            }
        }
        out.push(y * scale * acc);
    }
    Ok(out)
}

/// Per-point NTK margin of a separator at initialization.
pub fn ntk_margin_at_init(params: &NetParams, ds: &Dataset, sep: &Separator) -> Result<Vec<f64>> {
    ntk_margin_rows(params, ds, &sep.rows)
}

/// Margin of the composed map across orthogonal subspaces:
/// `max_{||rho||=1} min_j rho_j gamma_j = (sum_j gamma_j^-2)^(-1/2)`.
pub fn compose_margins(gammas: &[f64]) -> Result<f64> {
    if gammas.is_empty() {
        return Err(Error::invalid("need at least one margin"));
    }
    if gammas.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::invalid("all margins must be positive"));
    }
    Ok(gammas.iter().map(|g| g.powi(-2)).sum::<f64>().powf(-0.5))
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ConeProbReport {
    pub estimate: f64,
    pub std_error: f64,
    /// arc-length value 2 asin(b/2) / (2 pi)
    pub exact: f64,
    pub lower: f64,
    pub upper: f64,
    pub samples: usize,
}

/// Probability that a Gaussian z satisfies `<x_1, z> > 0 >= <x_2, z>` for the
/// two-point instance at chord b, against the `[b/7, b/5]` bracket.
pub fn cone_probability_check(b: f64, samples: usize, seed: u64) -> Result<ConeProbReport> {
    let ds = crate::dataset::gen_two_points(b)?;
    if samples < 100 {
        return Err(Error::invalid("need >= 100 samples"));
    }
    let hits = parallel::map_reduce_blocks(
        samples,
        parallel::MC_BLOCK,
        |range| {
            let block = range.start / parallel::MC_BLOCK;
            let mut rng = rng::substream(seed, &[tag::MC, 0xc02e, block as u64]);
            let mut hits = 0usize;
            for _ in range {
                let z = rng::gaussian_vec(&mut rng, 2);
                if linalg::dot(&z, &ds.points[0]) > 0.0 && linalg::dot(&z, &ds.points[1]) <= 0.0 {
                    hits += 1;
                }
            }
            hits
        },
        |a, b| a + b,
    )
    .expect("samples > 0");
    let p = hits as f64 / samples as f64;
    let se = (p * (1.0 - p) / samples as f64).sqrt();
    Ok(ConeProbReport {
        estimate: p,
        std_error: se,
        exact: (b / 2.0).asin() / std::f64::consts::PI,
        lower: b / 7.0,
        upper: b / 5.0,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{
        gen_alternating_circle, gen_random_sphere, gen_two_points,
        HypercubeLabeling, LabelMode,
    };
    use crate::network::{coupled_init, InitConfig, ScaleMode};

    #[test]
    fn circle_margin_matches_direct_sum_oracle() {
        // oracle: direct evaluation of the alternating cosine sum
        for n in [4usize, 8, 12, 32, 256] {
            let mut oracle = 0.0;
            for k in 1..=(n / 4) {
                oracle += if k % 2 == 1 { 1.0 } else { -1.0 }
                    * ((2 * k - 1) as f64 * std::f64::consts::PI / n as f64).cos();
            }
            oracle *= 2.0 / n as f64;
            assert_eq!(margin_circle_exact(n).unwrap(), oracle);
        }
        assert!((margin_circle_exact(4).unwrap() - 2f64.sqrt() / 4.0).abs() < 1e-15);
        assert!((margin_circle_exact(8).unwrap() - 0.135_299_025_036_549_27).abs() < 1e-12);
        assert!(margin_circle_exact(10).is_err());
    }

    #[test]
    fn circle_margin_is_order_one_over_n() {
        for n in (8..=256).step_by(4) {
            let g = margin_circle_exact(n).unwrap();
            let scaled = n as f64 * g;
            assert!((0.5..=2.0).contains(&scaled), "n={n} gives n*gamma={scaled}");
        }
    }

    #[test]
    fn cos_sum_matches_direct_summation() {
        let direct = |a: f64, b: f64, nt: usize| (0..nt).map(|k| (a + k as f64 * b).cos()).sum::<f64>();
        assert!((cos_sum(0.7, 0.3, 1).unwrap() - 0.7f64.cos()).abs() < 1e-15);
        let v = cos_sum(0.0, std::f64::consts::FRAC_PI_3, 6).unwrap();
        assert!(v.abs() < 1e-12, "sum cos(k pi/3), k=0..5 should vanish, got {v}");
        assert!((v - direct(0.0, std::f64::consts::FRAC_PI_3, 6)).abs() < 1e-12);
        let mut rng = rng::substream(3, &[99]);
        for _ in 0..50 {
            let a = 4.0 * rng::standard_normal(&mut rng);
            let b = rng::standard_normal(&mut rng);
            if (b / 2.0).sin().abs() < 1e-6 {
                continue;
            }
            let nt = 1 + (rng::standard_normal(&mut rng).abs() * 10.0) as usize % 50;
            let closed = cos_sum(a, b, nt).unwrap();
            assert!(
                (closed - direct(a, b, nt)).abs() < 1e-10,
                "a={a} b={b} nt={nt}"
            );
        }
        assert!(cos_sum(1.0, 0.0, 4).is_err());
    }

    #[test]
    fn circle_map_figure_one_case() {
        // n = 12: z inside Cone(x_2, x_3); n/4 = 3 odd so v-bar = r_z
        let n = 12;
        let ds = gen_alternating_circle(n).unwrap();
        let map = VBarMap::circle_rz(n).unwrap();
        let mid = TWO_PI * 2.5 / 12.0;
        let v = vbar_eval(&map, &[mid.cos(), mid.sin()]).unwrap();
        let mut rz = vec![
            ds.points[2][0] * ds.labels[2] + ds.points[3][0] * ds.labels[3],
            ds.points[2][1] * ds.labels[2] + ds.points[3][1] * ds.labels[3],
        ];
        let diff = [
            ds.points[2][0] - ds.points[3][0],
            ds.points[2][1] - ds.points[3][1],
        ];
        linalg::scale(1.0 / linalg::norm2(&diff), &mut rz);
        assert!((v[0] - rz[0]).abs() < 1e-12 && (v[1] - rz[1]).abs() < 1e-12);
        assert!((linalg::norm2(&v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_map_rz_orthogonal_to_cone_bisector() {
        let n = 8;
        let ds = gen_alternating_circle(n).unwrap();
        let map = VBarMap::circle_rz(n).unwrap();
        let z = [
            ds.points[1][0] + ds.points[2][0],
            ds.points[1][1] + ds.points[2][1],
        ];
        let v = vbar_eval(&map, &z).unwrap();
        let dot = linalg::dot(&v, &z) / linalg::norm2(&z);
        assert!(dot.abs() < 1e-12, "r_z not orthogonal to bisector: {dot}");
    }

    #[test]
    fn circle_map_zero_on_collinear_directions() {
        let map = VBarMap::circle_rz(8).unwrap();
        let v = vbar_eval(&map, &[2.0, 0.0]).unwrap();
        assert_eq!(v, vec![0.0, 0.0]);
        assert!(vbar_eval(&map, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn natural_v0_zero_cases() {
        let ds = crate::dataset::Dataset::new(
            vec![vec![1.0, 0.0]],
            vec![1.0],
            crate::dataset::DatasetKind::Classification,
        )
        .unwrap();
        let map = VBarMap::natural_v0(&ds);
        // U_z empty
        let v = vbar_eval(&map, &[-1.0, 0.0]).unwrap();
        assert_eq!(v, vec![0.0, 0.0]);
        // hypercube parity, odd d: the cone sum cancels exactly
        let hc = crate::dataset::gen_hypercube(3, HypercubeLabeling::Parity).unwrap();
        let map = VBarMap::natural_v0(&hc);
        let mut rng = rng::substream(5, &[1]);
        for _ in 0..500 {
            let z = rng::gaussian_vec(&mut rng, 3);
            let v = vbar_eval(&map, &z).unwrap();
            assert!(linalg::norm2(&v) < 1e-12);
        }
    }

    #[test]
    fn maps_stay_in_unit_ball_and_are_homogeneous() {
        let circle = VBarMap::circle_rz(12).unwrap();
        let ds = gen_random_sphere(6, 2, LabelMode::RandomSigns, 1).unwrap();
        let v0 = VBarMap::natural_v0(&ds);
        let table = VBarMap::angular_table(
            vec![0.0, 1.0, 4.0],
            vec![vec![0.3, 0.4], vec![-1.0, 0.0], vec![0.0, 0.0]],
        )
        .unwrap();
        let maps = [circle, v0, VBarMap::Radial, table];
        let mut rng = rng::substream(9, &[2]);
        for trial in 0..100_000 {
            let z = rng::gaussian_vec(&mut rng, 2);
            for map in &maps {
                let v = vbar_eval(map, &z).unwrap();
                assert!(linalg::norm2(&v) <= 1.0 + BALL_TOL);
                // homogeneity is deterministic given the cone; spot-check it
                // on a thinned subset to keep the loop fast
                if trial % 50 == 0 {
                    for c in [0.1, 10.0] {
                        let zc: Vec<f64> = z.iter().map(|x| x * c).collect();
                        let vc = vbar_eval(map, &zc).unwrap();
                        for (a, b) in v.iter().zip(&vc) {
                            assert!((a - b).abs() < 1e-12, "map not scale invariant");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn margin_mc_is_deterministic_and_rejects_tiny_samples() {
        let ds = gen_alternating_circle(8).unwrap();
        let map = VBarMap::circle_rz(8).unwrap();
        let a = margin_mc(&ds, &map, 5000, 77).unwrap();
        let b = margin_mc(&ds, &map, 5000, 77).unwrap();
        assert_eq!(a.per_point, b.per_point);
        assert_eq!(a.gamma, a.per_point.iter().copied().fold(f64::INFINITY, f64::min));
        assert!(margin_mc(&ds, &map, 99, 0).is_err());
    }

    #[test]
    fn margin_mc_matches_exact_circle() {
        let n = 12;
        let ds = gen_alternating_circle(n).unwrap();
        let map = VBarMap::circle_rz(n).unwrap();
        let est = margin_mc(&ds, &map, 200_000, 5).unwrap();
        let exact = margin_circle_exact(n).unwrap();
        let se = est.std_errors[est.argmin()];
        assert!(
            (est.gamma - exact).abs() <= 4.0 * se,
            "gamma {} vs exact {exact}, se {se}",
            est.gamma
        );
    }

    #[test]
    fn circle_v0_equals_circle_rz_estimates() {
        // v-bar = v-bar_0 almost surely on the circle instance
        let n = 8;
        let ds = gen_alternating_circle(n).unwrap();
        let rz = margin_mc(&ds, &VBarMap::circle_rz(n).unwrap(), 100_000, 3).unwrap();
        let v0 = margin_mc(&ds, &VBarMap::natural_v0(&ds), 100_000, 3).unwrap();
        for i in 0..n {
            let tol = 3.0 * (rz.std_errors[i] + v0.std_errors[i]) + 1e-9;
            assert!((rz.per_point[i] - v0.per_point[i]).abs() <= tol);
        }
    }

    #[test]
    fn two_point_margin_below_half_chord() {
        let b = 0.3;
        let ds = gen_two_points(b).unwrap();
        let est = margin_mc(&ds, &VBarMap::natural_v0(&ds), 100_000, 8).unwrap();
        let se = est.std_errors[est.argmin()];
        assert!(est.gamma <= b / 2.0 + 3.0 * se);
    }

    #[test]
    fn radial_map_margin_matches_quadrature_on_constant_labels() {
        // per-point value is (1/2) E|u_1| for a random unit vector u in R^d;
        // oracle: 1-D quadrature of the Beta-type density (1 - t^2)^((d-3)/2)
        let d = 4usize;
        let quad = |f: &dyn Fn(f64) -> f64| {
            let steps = 20_000;
            let mut acc = 0.0;
            for i in 0..steps {
                let t = (i as f64 + 0.5) / steps as f64;
                acc += f(t) / steps as f64;
            }
            acc
        };
        let pow = (d as f64 - 3.0) / 2.0;
        let num = quad(&|t| t * (1.0 - t * t).powf(pow));
        let den_half = quad(&|t| (1.0 - t * t).powf(pow));
        let mean_abs_coord = num / den_half;
        // sanity for d = 4: E|u1| = 4/(3 pi)
        assert!((mean_abs_coord - 4.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-3);
        let expect = 0.5 * mean_abs_coord;

        let ds = gen_random_sphere(6, d, LabelMode::ConstantOne, 4).unwrap();
        let est = margin_mc(&ds, &VBarMap::Radial, 200_000, 12).unwrap();
        for i in 0..ds.n() {
            assert!(
                (est.per_point[i] - expect).abs() <= 3.0 * est.std_errors[i] + 2e-3,
                "point {i}: {} vs {expect}",
                est.per_point[i]
            );
        }
    }

    #[test]
    fn upper_bound_dominates_margin_on_builtin_instances() {
        let circle = gen_alternating_circle(8).unwrap();
        let est = margin_mc(&circle, &VBarMap::circle_rz(8).unwrap(), 100_000, 6).unwrap();
        let subset: Vec<usize> = (0..8).collect();
        let (ub, ub_se) = margin_upper_bound_mc(&circle, &subset, 100_000, 7).unwrap();
        let se = est.std_errors[est.argmin()];
        assert!(ub >= est.gamma - 3.0 * (se + ub_se));
        assert!(ub >= margin_circle_exact(8).unwrap() - 3.0 * ub_se);
    }

    #[test]
    fn upper_bound_single_constant_point() {
        let ds = crate::dataset::Dataset::new(
            vec![vec![0.6, 0.8]],
            vec![1.0],
            crate::dataset::DatasetKind::Classification,
        )
        .unwrap();
        let (ub, se) = margin_upper_bound_mc(&ds, &[0], 100_000, 9).unwrap();
        assert!((ub - 0.5).abs() <= 3.0 * se + 1e-9);
    }

    #[test]
    fn compose_margins_formula() {
        assert_eq!(compose_margins(&[0.5]).unwrap(), 0.5);
        for d in 1..=16usize {
            let composed = compose_margins(&vec![0.5; d]).unwrap();
            assert!((composed - 0.5 / (d as f64).sqrt()).abs() < 1e-12);
        }
        let v = compose_margins(&[0.3, 0.4]).unwrap();
        assert!((v - 0.24).abs() < 1e-12);
        // grid-search oracle for the maximin over rho on the unit circle
        let mut best = f64::NEG_INFINITY;
        for k in 0..20_000 {
            let ang = std::f64::consts::FRAC_PI_2 * k as f64 / 20_000.0;
            let rho = [ang.cos(), ang.sin()];
            best = best.max((rho[0] * 0.3).min(rho[1] * 0.4));
        }
        assert!((v - best).abs() < 1e-4);
        assert!(compose_margins(&[]).is_err());
        assert!(compose_margins(&[0.2, -0.1]).is_err());
    }

    #[test]
    fn cone_probability_two_points() {
        let rep = cone_probability_check(0.3, 200_000, 10).unwrap();
        assert!((rep.exact - (0.15f64).asin() / std::f64::consts::PI).abs() < 1e-15);
        assert!(rep.estimate >= rep.lower - 3.0 * rep.std_error);
        assert!(rep.estimate <= rep.upper + 3.0 * rep.std_error);
        assert!((rep.estimate - rep.exact).abs() <= 4.0 * rep.std_error);
        let tiny = cone_probability_check(0.01, 150_000, 11).unwrap();
        assert!(tiny.estimate < 0.01);
    }

    #[test]
    fn separator_structure_and_identity() {
        let n = 8;
        let ds = gen_alternating_circle(n).unwrap();
        let map = VBarMap::circle_rz(n).unwrap();
        let params = coupled_init(
            &InitConfig {
                m: 256,
                d: 2,
                beta: 1.0,
                seed: 21,
            },
            ScaleMode::InvSqrtM,
        )
        .unwrap();
        let sep = build_separator(&params, &map).unwrap();
        sep.validate().unwrap();
        // coupled pairs: a_s u_s identical within the pair
        for i in 0..128 {
            let (r, s) = (2 * i, 2 * i + 1);
            for c in 0..2 {
                let lhs = params.signs[r] * sep.rows.get(r, c);
                let rhs = params.signs[s] * sep.rows.get(s, c);
                assert!((lhs - rhs).abs() < 1e-15);
            }
        }
        // empirical-mean identity from the separator lemma:
        // y_i f0_i(U) = (1/m') sum over distinct rows of y_i <v(w), x_i> 1[..]
        let margins = ntk_margin_at_init(&params, &ds, &sep).unwrap();
        for (i, x) in ds.points.iter().enumerate() {
            let mut mean = 0.0;
            for pair in 0..128 {
                let w = params.weights.row(2 * pair);
                if linalg::dot(x, w) > 0.0 {
                    let v = vbar_eval(&map, w).unwrap();
                    mean += ds.labels[i] * linalg::dot(&v, x);
                }
            }
            mean /= 128.0;
            assert!(
                (margins[i] - mean).abs() < 1e-12,
                "identity broke at {i}: {} vs {mean}",
                margins[i]
            );
        }
    }

    #[test]
    fn ntk_margin_zero_separator_and_init_homogeneity() {
        let ds = gen_alternating_circle(8).unwrap();
        let params = coupled_init(
            &InitConfig {
                m: 64,
                d: 2,
                beta: 1.0,
                seed: 30,
            },
            ScaleMode::InvSqrtM,
        )
        .unwrap();
        let zeros = ntk_margin_rows(&params, &ds, &Mat::zeros(64, 2)).unwrap();
        assert!(zeros.iter().all(|&v| v == 0.0));
        // rows = W_0 recovers y_i f_i(W_0) = 0 by homogeneity
        let w0 = ntk_margin_rows(&params, &ds, &params.weights).unwrap();
        let preds = crate::network::forward_all(&params, &ds).unwrap();
        for (v, (&u, &y)) in w0.iter().zip(preds.iter().zip(&ds.labels)) {
            assert!((v - y * u).abs() < 1e-9);
            assert_eq!(u, 0.0);
        }
        // brute force small case
        let tiny = gen_random_sphere(2, 2, LabelMode::RandomSigns, 31).unwrap();
        let p = coupled_init(
            &InitConfig {
                m: 4,
                d: 2,
                beta: 1.0,
                seed: 32,
            },
            ScaleMode::InvSqrtM,
        )
        .unwrap();
        let rows = Mat::from_rows(&[
            vec![0.1, 0.0],
            vec![0.0, 0.1],
            vec![-0.1, 0.0],
            vec![0.0, -0.1],
        ])
        .unwrap();
        let got = ntk_margin_rows(&p, &tiny, &rows).unwrap();
        for (i, x) in tiny.points.iter().enumerate() {
            let mut acc = 0.0;
            for r in 0..4 {
                if linalg::dot(p.weights.row(r), x) >= 0.0 {
                    acc += p.signs[r] * linalg::dot(rows.row(r), x);
                }
            }
            let expect = tiny.labels[i] * acc / 2.0;
            assert!((got[i] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn separator_margin_reaches_half_gamma_at_lemma_width() {
        let n = 8;
        let ds = gen_alternating_circle(n).unwrap();
        let gamma = margin_circle_exact(n).unwrap();
        let delta: f64 = 0.1;
        let m_half = (8.0 * (2.0 * n as f64 / delta).ln() / (gamma * gamma)).ceil() as usize;
        let map = VBarMap::circle_rz(n).unwrap();
        let mut ok = 0;
        for seed in 0..5 {
            let params = coupled_init(
                &InitConfig {
                    m: 2 * m_half,
                    d: 2,
                    beta: 1.0,
                    seed,
                },
                ScaleMode::InvSqrtM,
            )
            .unwrap();
            let sep = build_separator(&params, &map).unwrap();
            let margins = ntk_margin_at_init(&params, &ds, &sep).unwrap();
            if margins.iter().all(|&v| v >= gamma / 2.0) {
                ok += 1;
            }
        }
        assert!(ok >= 4, "only {ok}/5 seeds reached gamma/2");
    }

    #[test]
    fn separator_2d_net_and_caps() {
        let n = 8;
        let ds = gen_alternating_circle(n).unwrap();
        let gamma = margin_circle_exact(n).unwrap();
        let map = VBarMap::circle_rz(n).unwrap();
        let params = coupled_init(
            &InitConfig {
                m: 2048,
                d: 2,
                beta: 1.0,
                seed: 17,
            },
            ScaleMode::InvSqrtM,
        )
        .unwrap();
        let built = build_separator_2d(&params, &ds, &map, gamma, 0.1).unwrap();
        assert!(built.net_spacing <= gamma / 4.0);
        built.separator.validate().unwrap();
        let cap = 1.0 / (2048f64).sqrt() + 1e-12;
        for r in 0..2048 {
            assert!(linalg::norm2(built.separator.rows.row(r)) <= cap);
        }
        assert!(build_separator_2d(
            &coupled_init(
                &InitConfig {
                    m: 4,
                    d: 3,
                    beta: 1.0,
                    seed: 0
                },
                ScaleMode::InvSqrtM
            )
            .unwrap(),
            &gen_random_sphere(4, 3, LabelMode::RandomSigns, 0).unwrap(),
            &VBarMap::Radial,
            0.1,
            0.1,
        )
        .is_err());
    }
}
