//! Binary-image boundary regression: two-level images cut by a boundary
//! fragment, histogram empirical risk minimization over piecewise
//! constant boundaries, and Hoelder path generation for rate experiments.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::erm::replication_rng;
use crate::error::{Error, Result};

/// Quadrature resolution for boundary distances off the aligned-grid
/// fast path.
pub const QUADRATURE_POINTS: usize = 1 << 14;

/// Grid depth of generated Hoelder boundaries (2^10 + 1 ordinates).
const HOLDER_LEVELS: u32 = 10;

/// A boundary fragment: a function from [0,1] to [0,1].
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryFunction {
    /// Constant on each of `values.len()` equal bins.
    PiecewiseConstant { values: Vec<f64> },
    /// Ordinates on a uniform grid, evaluated by linear interpolation.
    Sampled { values: Vec<f64> },
}

impl BoundaryFunction {
    pub fn piecewise(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("need at least one bin".into()));
        }
        check_unit_range(&values)?;
        Ok(Self::PiecewiseConstant { values })
    }

    pub fn sampled(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter("need at least two grid ordinates".into()));
        }
        check_unit_range(&values)?;
        Ok(Self::Sampled { values })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::piecewise(vec![value])
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::PiecewiseConstant { values } => {
                let d = values.len();
                let bin = ((x * d as f64) as usize).min(d - 1);
                values[bin]
            }
            Self::Sampled { values } => {
                let last = values.len() - 1;
                let pos = (x.clamp(0.0, 1.0)) * last as f64;
                let lo = (pos as usize).min(last - 1);
                let t = pos - lo as f64;
                values[lo] * (1.0 - t) + values[lo + 1] * t
            }
        }
    }

    /// Two-column text: grid point and value, one line per grid point.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            Self::PiecewiseConstant { values } => {
                let d = values.len() as f64;
                for (j, v) in values.iter().enumerate() {
                    out.push_str(&format!("{} {v}\n", (j as f64 + 0.5) / d));
                }
            }
            Self::Sampled { values } => {
                let last = (values.len() - 1) as f64;
                for (j, v) in values.iter().enumerate() {
                    out.push_str(&format!("{} {v}\n", j as f64 / last));
                }
            }
        }
        out
    }
}

fn check_unit_range(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite() || !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParameter("boundary values must lie in [0, 1]".into()));
    }
    Ok(())
}

/// A two-color image: level `b` at or below the boundary, `a` above.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageModel {
    pub a: f64,
    pub b: f64,
    pub boundary: BoundaryFunction,
}

impl ImageModel {
    pub fn new(a: f64, b: f64, boundary: BoundaryFunction) -> Result<Self> {
        if !(0.0 < a && a < b && b < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "color levels must satisfy 0 < a < b < 1, got ({a}, {b})"
            )));
        }
        Ok(Self { a, b, boundary })
    }

    /// The image value at `(x1, x2)`: `b` if `x2 <= f(x1)`, else `a`.
    pub fn chi(&self, x1: f64, x2: f64) -> f64 {
        if x2 <= self.boundary.eval(x1) {
            self.b
        } else {
            self.a
        }
    }
}

/// Noisy image observations: uniform design on the unit square with
/// Bernoulli labels at the local image intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    draws: Vec<(f64, f64, bool)>,
    seed: u64,
    replication_index: u64,
}

impl RegressionSample {
    pub fn draws(&self) -> &[(f64, f64, bool)] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replication_index(&self) -> u64 {
        self.replication_index
    }
}

fn draw_regression_with(
    model: &ImageModel,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(f64, f64, bool)> {
    (0..n)
        .map(|_| {
            let x1: f64 = rng.random();
            let x2: f64 = rng.random();
            let y = rng.random::<f64>() < model.chi(x1, x2);
            (x1, x2, y)
        })
        .collect()
}

pub fn draw_regression_sample(
    model: &ImageModel,
    n: usize,
    seed: u64,
    replication_index: u64,
) -> Result<RegressionSample> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let mut rng = replication_rng(seed, replication_index);
    Ok(RegressionSample {
        draws: draw_regression_with(model, n, &mut rng),
        seed,
        replication_index,
    })
}

/// Exact least-squares fit of a piecewise-constant boundary on `d_bins`
/// equal bins: within each bin the threshold minimizing the squared
/// loss against levels (a, b) is found by scanning the candidate set
/// {0} + observed ordinates + {1}; ties pick the smallest threshold and
/// empty bins default to 0. Bins decouple, so this is a global empirical
/// risk minimizer over piecewise-constant boundary images.
pub fn histogram_erm(
    sample: &RegressionSample,
    d_bins: usize,
    a: f64,
    b: f64,
) -> Result<BoundaryFunction> {
    if !(0.0 < a && a < b && b < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "color levels must satisfy 0 < a < b < 1, got ({a}, {b})"
        )));
    }
    if d_bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    let mut bins: Vec<Vec<(f64, f64)>> = vec![Vec::new(); d_bins];
    for &(x1, x2, y) in sample.draws() {
        let bin = ((x1 * d_bins as f64) as usize).min(d_bins - 1);
        bins[bin].push((x2, if y { 1.0 } else { 0.0 }));
    }
    let thresholds = bins
        .into_iter()
        .map(|mut pts| {
            if pts.is_empty() {
                return 0.0;
            }
            pts.sort_by(|p, q| p.0.total_cmp(&q.0));
            let mut candidates: Vec<f64> = Vec::with_capacity(pts.len() + 2);
            candidates.push(0.0);
            candidates.extend(pts.iter().map(|p| p.0));
            candidates.push(1.0);
            // cost(c) = sum over x2 <= c of (y-b)^2 plus the rest at (y-a)^2;
            // sweep candidates in ascending order with a running delta.
            let base: f64 = pts.iter().map(|&(_, y)| (y - a) * (y - a)).sum();
            let mut best_cost = f64::INFINITY;
            let mut best_c = 0.0;
            let mut delta = 0.0;
            let mut idx = 0;
            for &c in &candidates {
                while idx < pts.len() && pts[idx].0 <= c {
                    let y = pts[idx].1;
                    delta += (y - b) * (y - b) - (y - a) * (y - a);
                    idx += 1;
                }
                let cost = base + delta;
                if cost < best_cost - 1e-15 {
                    best_cost = cost;
                    best_c = c;
                }
            }
            best_c
        })
        .collect();
    BoundaryFunction::piecewise(thresholds)
}

/// L1 distance between two boundaries. Exact interval arithmetic when
/// both are piecewise constant (on any bin counts); composite midpoint
/// quadrature on a 2^14-point grid otherwise.
pub fn boundary_l1_loss(f: &BoundaryFunction, g: &BoundaryFunction) -> f64 {
    if let (
        BoundaryFunction::PiecewiseConstant { values: fv },
        BoundaryFunction::PiecewiseConstant { values: gv },
    ) = (f, g)
    {
        let (df, dg) = (fv.len(), gv.len());
        let mut total = 0.0;
        let mut cut = 0.0;
        let (mut i, mut j) = (0usize, 0usize);
        while i < df && j < dg {
            let next = ((i + 1) as f64 / df as f64).min((j + 1) as f64 / dg as f64);
            total += (next - cut) * (fv[i] - gv[j]).abs();
            cut = next;
            if ((i + 1) as f64 / df as f64) <= cut + 1e-18 {
                i += 1;
            }
            if ((j + 1) as f64 / dg as f64) <= cut + 1e-18 {
                j += 1;
            }
        }
        return total;
    }
    let m = QUADRATURE_POINTS;
    (0..m)
        .map(|i| {
            let x = (i as f64 + 0.5) / m as f64;
            (f.eval(x) - g.eval(x)).abs()
        })
        .sum::<f64>()
        / m as f64
}

fn holder_boundary_with(l: f64, alpha: f64, rng: &mut ChaCha8Rng) -> BoundaryFunction {
    let size = (1usize << HOLDER_LEVELS) + 1;
    let mut values = vec![0.0f64; size];
    let start: f64 = rng.random();
    let end = (start + (l.min(1.0) / 2.0) * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, 1.0);
    values[0] = start;
    values[size - 1] = end;
    for level in 1..=HOLDER_LEVELS {
        let step = 1usize << (HOLDER_LEVELS - level);
        let amp = l * 0.5f64.powf(alpha * level as f64) / 2.0;
        let mut i = step;
        while i < size {
            let mid = 0.5 * (values[i - step] + values[i + step]);
            values[i] = (mid + amp * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, 1.0);
            i += 2 * step;
        }
    }
    // Verify the Hoelder condition over all grid pairs; contract toward
    // the mean if any pair violates it.
    let mut worst: f64 = 0.0;
    for i in 0..size {
        for j in (i + 1)..size {
            let dx = (j - i) as f64 / (size - 1) as f64;
            let ratio = (values[i] - values[j]).abs() / (l * dx.powf(alpha));
            worst = worst.max(ratio);
        }
    }
    if worst > 1.0 {
        let scale = 1.0 / (worst * (1.0 + 1e-12));
        let mean = values.iter().sum::<f64>() / size as f64;
        for v in &mut values {
            *v = (mean + (*v - mean) * scale).clamp(0.0, 1.0);
        }
    }
    BoundaryFunction::Sampled { values }
}

/// A random boundary in the Hoelder class H(L, alpha), generated by
/// midpoint displacement with per-level amplitude `L 2^(-alpha level)/2`
/// and verified (with rescaling) on the sampling grid.
pub fn holder_boundary(l: f64, alpha: f64, seed: u64) -> Result<BoundaryFunction> {
    let params_ok = l > 0.0 && alpha > 0.0 && alpha <= 1.0;
    if !params_ok {
        return Err(Error::InvalidParameter(format!(
            "Hoelder class needs L > 0 and alpha in (0,1], got ({l}, {alpha})"
        )));
    }
    let mut rng = replication_rng(seed, 0);
    Ok(holder_boundary_with(l, alpha, &mut rng))
}

/// Bin count balancing the `2 L D^-alpha` bias term against the
/// `D / ((b-a)^3 n)` variance term.
pub fn suggested_bins(l: f64, alpha: f64, a: f64, b: f64, n: usize) -> usize {
    let raw = (l * (b - a).powi(3) * n as f64).powf(1.0 / (alpha + 1.0));
    (raw.round() as usize).max(1)
}

/// Monte Carlo mean (and standard error) of the boundary L1 risk of
/// histogram ERM: each replication draws a fresh Hoelder truth and a
/// fresh sample from its image.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_boundary_risk(
    l: f64,
    alpha: f64,
    a: f64,
    b: f64,
    n: usize,
    d_bins: usize,
    replications: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if replications < 2 {
        return Err(Error::InvalidParameter("need at least 2 replications".into()));
    }
    let params_ok = l > 0.0 && alpha > 0.0 && alpha <= 1.0;
    if !params_ok {
        return Err(Error::InvalidParameter("Hoelder parameters out of range".into()));
    }
    let losses: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, rep);
            let truth = holder_boundary_with(l, alpha, &mut rng);
            let model = ImageModel::new(a, b, truth.clone())?;
            let draws = draw_regression_with(&model, n, &mut rng);
            let sample = RegressionSample { draws, seed, replication_index: rep };
            let fitted = histogram_erm(&sample, d_bins, a, b)?;
            Ok(boundary_l1_loss(&truth, &fitted))
        })
        .collect::<Result<Vec<f64>>>()?;
    let r = losses.len() as f64;
    let mean = losses.iter().sum::<f64>() / r;
    let var = losses.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    Ok((mean, (var / r).sqrt()))
}
