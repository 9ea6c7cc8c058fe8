//! Deterministic sampling, empirical risk minimization over explicit
//! classes, Monte Carlo excess-risk estimation and empirical suprema of
//! set-indexed processes.
//!
//! Reproducibility contract: every random quantity is a pure function of
//! `(seed, replication_index)` through a counter-based ChaCha stream, so
//! results are identical across platforms, runs and thread counts.
//! Replications run in parallel but are reduced in replication order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classes::{ClassKind, ClassifierClass};
use crate::domain::{excess_loss, Classifier, JointDistribution};
use crate::error::{Error, Result};

/// The random stream for one replication of one experiment.
pub fn replication_rng(seed: u64, replication_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication_index);
    rng
}

/// An i.i.d. sample of (point index, label) pairs with its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    draws: Vec<(u32, bool)>,
    seed: u64,
    replication_index: u64,
}

impl Sample {
    pub fn from_draws(draws: Vec<(u32, bool)>, seed: u64, replication_index: u64) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Self { draws, seed, replication_index })
    }

    pub fn draws(&self) -> &[(u32, bool)] {
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

/// Draw `n` i.i.d. pairs from `p`: the point by inverse-CDF lookup on the
/// marginal, then the label as a Bernoulli draw at that point.
pub fn draw_sample(
    p: &JointDistribution,
    n: usize,
    seed: u64,
    replication_index: u64,
) -> Result<Sample> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let mut rng = replication_rng(seed, replication_index);
    let mut cumulative = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &w in p.domain().weights() {
        acc += w;
        cumulative.push(acc);
    }
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let x = cumulative.partition_point(|&c| c <= u).min(p.len() - 1);
        let v: f64 = rng.random();
        draws.push((x as u32, v < p.eta()[x]));
    }
    Sample::from_draws(draws, seed, replication_index)
}

/// Fraction of draws misclassified by `t`.
pub fn empirical_risk(t: &Classifier, sample: &Sample) -> Result<f64> {
    let mut mistakes = 0usize;
    for &(x, y) in sample.draws() {
        if x as usize >= t.len() {
            return Err(Error::DomainMismatch { expected: t.len(), got: x as usize + 1 });
        }
        if t.label(x as usize) != y {
            mistakes += 1;
        }
    }
    Ok(mistakes as f64 / sample.len() as f64)
}

/// Per-point mistake tallies of a sample against an `m`-point domain.
struct MistakeCounts {
    /// diff[bit] = (# zeros) - (# ones) at the point stored at that bit.
    diff_by_bit: Vec<i64>,
    total_ones: i64,
}

impl MistakeCounts {
    fn build(sample: &Sample, m: usize) -> Result<Self> {
        let mut c0 = vec![0i64; m];
        let mut c1 = vec![0i64; m];
        for &(x, y) in sample.draws() {
            let x = x as usize;
            if x >= m {
                return Err(Error::DomainMismatch { expected: m, got: x + 1 });
            }
            if y {
                c1[x] += 1;
            } else {
                c0[x] += 1;
            }
        }
        let total_ones: i64 = c1.iter().sum();
        // Point j sits at bit m-1-j of a member pattern.
        let diff_by_bit: Vec<i64> = (0..m).map(|bit| c0[m - 1 - bit] - c1[m - 1 - bit]).collect();
        Ok(Self { diff_by_bit, total_ones })
    }

    /// Number of draws misclassified by the member with this bit pattern.
    fn mistakes(&self, mut pattern: u64) -> i64 {
        let mut mistakes = self.total_ones;
        while pattern != 0 {
            let bit = pattern.trailing_zeros() as usize;
            mistakes += self.diff_by_bit[bit];
            pattern &= pattern - 1;
        }
        mistakes
    }
}

/// rho-empirical risk minimization: among members whose empirical risk is
/// within `rho` of the minimum, return the earliest in the class's
/// canonical order. `rho = 0` is strict ERM with deterministic tie-break.
pub fn erm(class: &ClassifierClass, sample: &Sample, rho: f64) -> Result<Classifier> {
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::InvalidParameter(format!("rho must be nonnegative, got {rho}")));
    }
    let counts = MistakeCounts::build(sample, class.domain_size())?;
    let min = class.member_bits().iter().map(|&b| counts.mistakes(b)).min().expect("nonempty");
    let slack = rho * sample.len() as f64;
    for (i, &bits) in class.member_bits().iter().enumerate() {
        if (counts.mistakes(bits) - min) as f64 <= slack {
            return Ok(class.member(i));
        }
    }
    unreachable!("the minimizer itself is always within slack");
}

/// A Monte Carlo risk estimate with its provenance parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub replications: u64,
    pub n: usize,
    pub h: f64,
    pub vc: Option<u32>,
    pub class_tag: String,
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

fn class_tag(class: &ClassifierClass) -> String {
    match class.kind() {
        ClassKind::Powerset => format!("powerset({})", class.domain_size()),
        ClassKind::Sparse { n_points, weight } => format!("sparse({n_points},{weight})"),
        ClassKind::HalfspaceTrace { dim } => {
            format!("halfspace(d={dim},n={})", class.domain_size())
        }
        ClassKind::Explicit => format!("explicit({})", class.len()),
    }
}

/// Mean and standard error of the excess loss of strict ERM over
/// `replications` independent samples of size `n`.
pub fn monte_carlo_excess_risk(
    p: &JointDistribution,
    class: &ClassifierClass,
    n: usize,
    replications: u64,
    seed: u64,
) -> Result<RiskEstimate> {
    monte_carlo_excess_risk_with_slack(p, class, n, replications, seed, 0.0)
}

/// [`monte_carlo_excess_risk`] for a rho-empirical risk minimizer.
pub fn monte_carlo_excess_risk_with_slack(
    p: &JointDistribution,
    class: &ClassifierClass,
    n: usize,
    replications: u64,
    seed: u64,
    rho: f64,
) -> Result<RiskEstimate> {
    if replications < 2 {
        return Err(Error::InvalidParameter("need at least 2 replications".into()));
    }
    let losses: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let sample = draw_sample(p, n, seed, r)?;
            let fitted = erm(class, &sample, rho)?;
            excess_loss(p, &fitted)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, stderr) = mean_and_stderr(&losses);
    Ok(RiskEstimate {
        mean,
        stderr,
        replications,
        n,
        h: p.margin_h(),
        vc: class.vc_hint(),
        class_tag: class_tag(class),
    })
}

/// Monte Carlo estimate of the one-sided suprema of the centered
/// empirical measure over a family of sets.
#[derive(Debug, Clone, PartialEq)]
pub struct SupProcessEstimate {
    pub wplus_mean: f64,
    pub wplus_stderr: f64,
    pub wminus_mean: f64,
    pub wminus_stderr: f64,
    /// Members surviving the variance filter `P(B) <= sigma^2`.
    pub members_kept: usize,
}

/// Estimate `E[sup_B (P_n - P)(B)]` and `E[sup_B (P - P_n)(B)]` over the
/// members of `class_of_sets` (read as set indicators) whose mass does
/// not exceed `sigma^2`.
pub fn sup_process_estimate(
    class_of_sets: &ClassifierClass,
    p: &JointDistribution,
    n: usize,
    sigma: f64,
    replications: u64,
    seed: u64,
) -> Result<SupProcessEstimate> {
    if class_of_sets.domain_size() != p.len() {
        return Err(Error::DomainMismatch {
            expected: p.len(),
            got: class_of_sets.domain_size(),
        });
    }
    if replications < 2 {
        return Err(Error::InvalidParameter("need at least 2 replications".into()));
    }
    let level = sigma * sigma;
    let kept: Vec<u64> = class_of_sets
        .member_bits()
        .iter()
        .copied()
        .filter(|&b| p.domain().mass_of_pattern(b) <= level)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVarianceFilter);
    }
    let masses: Vec<f64> = kept.iter().map(|&b| p.domain().mass_of_pattern(b)).collect();
    let m = p.len();
    let deviations: Vec<(f64, f64)> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let sample = draw_sample(p, n, seed, r)?;
            let mut counts = vec![0u32; m];
            for &(x, _) in sample.draws() {
                counts[x as usize] += 1;
            }
            let mut wplus = f64::NEG_INFINITY;
            let mut wminus = f64::NEG_INFINITY;
            for (&bits, &mass) in kept.iter().zip(&masses) {
                let mut empirical = 0.0;
                let mut pattern = bits;
                while pattern != 0 {
                    let bit = pattern.trailing_zeros() as usize;
                    empirical += counts[m - 1 - bit] as f64;
                    pattern &= pattern - 1;
                }
                let dev = empirical / n as f64 - mass;
                wplus = wplus.max(dev);
                wminus = wminus.max(-dev);
            }
            Ok((wplus, wminus))
        })
        .collect::<Result<Vec<_>>>()?;
    let plus: Vec<f64> = deviations.iter().map(|d| d.0).collect();
    let minus: Vec<f64> = deviations.iter().map(|d| d.1).collect();
    let (wplus_mean, wplus_stderr) = mean_and_stderr(&plus);
    let (wminus_mean, wminus_stderr) = mean_and_stderr(&minus);
    Ok(SupProcessEstimate {
        wplus_mean,
        wplus_stderr,
        wminus_mean,
        wminus_stderr,
        members_kept: kept.len(),
    })
}
