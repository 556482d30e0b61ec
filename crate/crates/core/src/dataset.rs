//! Example datasets: alternating circle, orthonormal basis pairs, hypercube
//! labelings, two-point instances, and seeded random points on the sphere.
//!
//! Every generator emits unit-norm points (renormalized after construction
//! so trigonometric or Gaussian rounding cannot violate the invariant) and
//! validates before returning.

use crate::rng::{self, tag};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Unit-norm tolerance for [`Dataset::validate`].
pub const NORM_TOL: f64 = 1e-12;
/// Largest hypercube instance (2^16 points).
pub const HYPERCUBE_POINT_CAP: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Classification,
    Regression,
}

/// `n` unit-norm points in `R^d` with labels; classification labels are
/// exactly ±1, regression labels are bounded by `label_bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub kind: DatasetKind,
    pub label_bound: f64,
}

#[derive(Serialize, Deserialize)]
struct DatasetWire {
    d: usize,
    kind: DatasetKind,
    points: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<f64>, kind: DatasetKind) -> Result<Dataset> {
        let ds = Dataset {
            points,
            labels,
            kind,
            label_bound: 1.0,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn d(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let d = self.d();
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset("need n >= 1 and d >= 1".into()));
        }
        if self.labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} points",
                self.labels.len(),
                n
            )));
        }
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::InvalidDataset(format!("point {i} has wrong dim")));
            }
            let norm = crate::linalg::norm2(p);
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidDataset(format!(
                    "point {i} has norm {norm}, expected 1"
                )));
            }
        }
        for (i, &y) in self.labels.iter().enumerate() {
            match self.kind {
                DatasetKind::Classification => {
                    if y != 1.0 && y != -1.0 {
                        return Err(Error::InvalidDataset(format!(
                            "classification label {i} is {y}, expected exactly ±1"
                        )));
                    }
                }
                DatasetKind::Regression => {
                    if !y.is_finite() || y.abs() > self.label_bound {
                        return Err(Error::InvalidDataset(format!(
                            "regression label {i} is {y}, bound {}",
                            self.label_bound
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let wire = DatasetWire {
            d: self.d(),
            kind: self.kind,
            points: self.points.clone(),
            labels: self.labels.clone(),
        };
        serde_json::to_string_pretty(&wire).expect("dataset serializes")
    }

    pub fn from_json(s: &str) -> Result<Dataset> {
        let wire: DatasetWire =
            serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        if wire.points.iter().any(|p| p.len() != wire.d) {
            return Err(Error::InvalidDataset(
                "declared d does not match points".into(),
            ));
        }
        Dataset::new(wire.points, wire.labels, wire.kind)
    }
}

fn renormalize(p: &mut [f64]) {
    let norm = crate::linalg::norm2(p);
    crate::linalg::scale(1.0 / norm, p);
}

/// `n` equally spaced points on the unit circle with alternating ±1 labels;
/// the k-th point is `(cos(2kπ/n), sin(2kπ/n))` with label `(-1)^k`.
pub fn gen_alternating_circle(n: usize) -> Result<Dataset> {
    if n == 0 || n % 4 != 0 {
        return Err(Error::invalid(format!(
            "alternating circle needs n divisible by 4, got {n}"
        )));
    }
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for k in 0..n {
        let ang = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let mut p = vec![ang.cos(), ang.sin()];
        renormalize(&mut p);
        points.push(p);
        labels.push(if k % 2 == 0 { 1.0 } else { -1.0 });
    }
    Dataset::new(points, labels, DatasetKind::Classification)
}

/// `+e_1..+e_d` followed by `-e_1..-e_d` with the given 2d signs as labels.
pub fn gen_orthobasis(d: usize, labels: &[f64]) -> Result<Dataset> {
    if d == 0 {
        return Err(Error::invalid("orthobasis needs d >= 1"));
    }
    if labels.len() != 2 * d {
        return Err(Error::invalid(format!(
            "orthobasis needs 2d = {} labels, got {}",
            2 * d,
            labels.len()
        )));
    }
    let mut points = Vec::with_capacity(2 * d);
    for sign in [1.0, -1.0] {
        for i in 0..d {
            let mut p = vec![0.0; d];
            p[i] = sign;
            points.push(p);
        }
    }
    Dataset::new(points, labels.to_vec(), DatasetKind::Classification)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypercubeLabeling {
    Majority,
    Parity,
}

/// The hypercube `{-1/√d, +1/√d}^d`. `σ(x)` counts negative coordinates.
/// Majority removes the σ = d/2 points and labels `y = -1` iff `σ > d/2`;
/// parity labels `y = (-1)^σ`.
pub fn gen_hypercube(d: usize, labeling: HypercubeLabeling) -> Result<Dataset> {
    if d < 2 {
        return Err(Error::invalid("hypercube needs d >= 2"));
    }
    if d >= usize::BITS as usize || (1usize << d) > HYPERCUBE_POINT_CAP {
        return Err(Error::invalid(format!(
            "hypercube with d = {d} exceeds the {HYPERCUBE_POINT_CAP}-point cap"
        )));
    }
    let coord = 1.0 / (d as f64).sqrt();
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for mask in 0usize..(1 << d) {
        let sigma = mask.count_ones() as usize;
        let label = match labeling {
            HypercubeLabeling::Majority => {
                if 2 * sigma == d {
                    continue;
                }
                if 2 * sigma > d {
                    -1.0
                } else {
                    1.0
                }
            }
            HypercubeLabeling::Parity => {
                if sigma % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        let mut p = vec![coord; d];
        for (i, v) in p.iter_mut().enumerate() {
            if mask & (1 << i) != 0 {
                *v = -coord;
            }
        }
        renormalize(&mut p);
        points.push(p);
        labels.push(label);
    }
    Dataset::new(points, labels, DatasetKind::Classification)
}

/// Two oppositely labeled points on the unit circle at chord distance `b`.
pub fn gen_two_points(b: f64) -> Result<Dataset> {
    if !(b > 0.0 && b < std::f64::consts::SQRT_2) {
        return Err(Error::invalid(format!(
            "two-point chord must lie in (0, sqrt(2)), got {b}"
        )));
    }
    let phi = 2.0 * (b / 2.0).asin();
    let mut x2 = vec![phi.cos(), phi.sin()];
    renormalize(&mut x2);
    Dataset::new(
        vec![vec![1.0, 0.0], x2],
        vec![1.0, -1.0],
        DatasetKind::Classification,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    RandomSigns,
    ConstantOne,
    RegressionUniform,
}

/// `n` i.i.d. Gaussian points normalized to the unit sphere, deterministic
/// given the seed.
pub fn gen_random_sphere(n: usize, d: usize, mode: LabelMode, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("random sphere needs n, d >= 1"));
    }
    let mut rng = rng::substream(seed, &[tag::DATASET, n as u64, d as u64]);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut p = rng::gaussian_vec(&mut rng, d);
        let mut norm = crate::linalg::norm2(&p);
        while norm < 1e-8 {
            p = rng::gaussian_vec(&mut rng, d);
            norm = crate::linalg::norm2(&p);
        }
        crate::linalg::scale(1.0 / norm, &mut p);
        points.push(p);
    }
    let mut label_rng = rng::substream(seed, &[tag::DATASET, n as u64, d as u64, 0xab]);
    let (labels, kind) = match mode {
        LabelMode::RandomSigns => (
            (0..n).map(|_| rng::random_sign(&mut label_rng)).collect(),
            DatasetKind::Classification,
        ),
        LabelMode::ConstantOne => (vec![1.0; n], DatasetKind::Classification),
        LabelMode::RegressionUniform => (
            (0..n)
                .map(|_| rand::Rng::gen_range(&mut label_rng, -1.0..=1.0))
                .collect(),
            DatasetKind::Regression,
        ),
    };
    Dataset::new(points, labels, kind)
}
