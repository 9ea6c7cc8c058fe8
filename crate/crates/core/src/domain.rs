//! Finite-support joint distributions of a point/label pair, Bayes
//! classifiers, margin and exact excess-loss computation.
//!
//! Everything here is exact desk-scale arithmetic: domains are finite
//! (at most 64 points), probabilities are `f64`, and all quantities a
//! bound refers to (margin `h`, misclassification level `L`, excess
//! loss) are computed by direct summation rather than estimated.

use crate::error::{Error, Result};

/// Absolute tolerance used for probability-sum checks.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Hard cap on domain size; classifiers are stored as 64-bit patterns.
pub const MAX_DOMAIN_POINTS: usize = 64;

/// A finite marginal distribution: points are identified by index
/// `0..m`, point `i` carrying probability mass `weights[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDomain {
    weights: Vec<f64>,
}

impl FiniteDomain {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("domain must have at least one point".into()));
        }
        if weights.len() > MAX_DOMAIN_POINTS {
            return Err(Error::InvalidWeights(format!(
                "domain limited to {MAX_DOMAIN_POINTS} points, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidWeights("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { weights })
    }

    /// Uniform distribution on `m` points.
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidWeights("domain must have at least one point".into()));
        }
        Self::new(vec![1.0 / m as f64; m])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total mass of a set of points given as a bit pattern
    /// (point `i` is in the set iff bit `len-1-i` is set, matching
    /// [`Classifier`] storage).
    pub fn mass_of_pattern(&self, pattern: u64) -> f64 {
        let m = self.len();
        (0..m)
            .filter(|&i| pattern >> (m - 1 - i) & 1 == 1)
            .map(|i| self.weights[i])
            .sum()
    }
}

/// A binary classifier over a finite domain, stored as a bit pattern.
///
/// Point `i` of an `m`-point domain maps to bit `m-1-i`, so the value
/// of the pattern read as an integer orders classifiers exactly like
/// lexicographic order on their label vectors. That numeric order is
/// the tie-break contract used by empirical risk minimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Classifier {
    m: usize,
    bits: u64,
}

impl Classifier {
    pub fn from_labels(labels: &[bool]) -> Result<Self> {
        let m = labels.len();
        if m == 0 || m > MAX_DOMAIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "classifier length must be in 1..={MAX_DOMAIN_POINTS}, got {m}"
            )));
        }
        let mut bits = 0u64;
        for (i, &l) in labels.iter().enumerate() {
            if l {
                bits |= 1 << (m - 1 - i);
            }
        }
        Ok(Self { m, bits })
    }

    /// Build from a raw pattern; bits beyond the domain width must be zero.
    pub fn from_bits(bits: u64, m: usize) -> Result<Self> {
        if m == 0 || m > MAX_DOMAIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "classifier length must be in 1..={MAX_DOMAIN_POINTS}, got {m}"
            )));
        }
        if m < 64 && bits >> m != 0 {
            return Err(Error::InvalidParameter("pattern wider than domain".into()));
        }
        Ok(Self { m, bits })
    }

    pub fn zeros(m: usize) -> Result<Self> {
        Self::from_bits(0, m)
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Label of point `i` (`true` = 1).
    pub fn label(&self, i: usize) -> bool {
        debug_assert!(i < self.m);
        self.bits >> (self.m - 1 - i) & 1 == 1
    }

    pub fn labels(&self) -> Vec<bool> {
        (0..self.m).map(|i| self.label(i)).collect()
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Number of points where the two classifiers disagree.
    pub fn hamming(&self, other: &Classifier) -> u32 {
        (self.bits ^ other.bits).count_ones()
    }
}

impl std::fmt::Display for Classifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.m {
            write!(f, "{}", if self.label(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// A joint law of (point, label): a marginal plus the regression values
/// `eta[i] = P(Y = 1 | X = i)`, with the derived Bayes classifier,
/// margin and zero-error flag.
#[derive(Debug, Clone)]
pub struct JointDistribution {
    domain: FiniteDomain,
    eta: Vec<f64>,
    bayes: Classifier,
    margin_h: f64,
    zero_error: bool,
}

impl JointDistribution {
    pub fn new(domain: FiniteDomain, eta: Vec<f64>) -> Result<Self> {
        if eta.len() != domain.len() {
            return Err(Error::DomainMismatch { expected: domain.len(), got: eta.len() });
        }
        if eta.iter().any(|&e| !e.is_finite() || !(0.0..=1.0).contains(&e)) {
            return Err(Error::InvalidParameter("regression values must lie in [0, 1]".into()));
        }
        let bayes = bayes_of_eta(&eta)?;
        let margin_h = eta.iter().map(|&e| (2.0 * e - 1.0).abs()).fold(f64::INFINITY, f64::min);
        let zero_error = eta.iter().all(|&e| e == 0.0 || e == 1.0);
        Ok(Self { domain, eta, bayes, margin_h, zero_error })
    }

    pub fn domain(&self) -> &FiniteDomain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// The Bayes classifier `1{eta >= 1/2}`; ties map to label 1.
    pub fn bayes(&self) -> &Classifier {
        &self.bayes
    }

    /// Margin parameter `h = min_i |2 eta_i - 1|`.
    pub fn margin_h(&self) -> f64 {
        self.margin_h
    }

    /// True iff every label is deterministic (`eta` is 0/1-valued).
    pub fn zero_error(&self) -> bool {
        self.zero_error
    }

    /// Misclassification level `L = E[eta ∧ (1 - eta)]`.
    pub fn level(&self) -> f64 {
        self.eta
            .iter()
            .zip(self.domain.weights())
            .map(|(&e, &w)| w * e.min(1.0 - e))
            .sum()
    }
}

fn bayes_of_eta(eta: &[f64]) -> Result<Classifier> {
    let labels: Vec<bool> = eta.iter().map(|&e| e >= 0.5).collect();
    Classifier::from_labels(&labels)
}

/// The Bayes classifier of `p`: the indicator of `{eta >= 1/2}`.
pub fn bayes_classifier(p: &JointDistribution) -> Classifier {
    *p.bayes()
}

/// Exact excess loss of `t` relative to the Bayes classifier:
/// `sum_i mu_i |2 eta_i - 1| 1{t_i != bayes_i}`, which equals
/// `P(Y != t(X)) - P(Y != s*(X))`.
pub fn excess_loss(p: &JointDistribution, t: &Classifier) -> Result<f64> {
    if t.len() != p.len() {
        return Err(Error::DomainMismatch { expected: p.len(), got: t.len() });
    }
    let bayes = p.bayes();
    let mut total = 0.0;
    for i in 0..p.len() {
        if t.label(i) != bayes.label(i) {
            total += p.domain().weight(i) * (2.0 * p.eta()[i] - 1.0).abs();
        }
    }
    Ok(total)
}

/// Exact misclassification probability `P(Y != t(X))`.
pub fn misclassification(p: &JointDistribution, t: &Classifier) -> Result<f64> {
    if t.len() != p.len() {
        return Err(Error::DomainMismatch { expected: p.len(), got: t.len() });
    }
    let mut total = 0.0;
    for i in 0..p.len() {
        let e = p.eta()[i];
        total += p.domain().weight(i) * if t.label(i) { 1.0 - e } else { e };
    }
    Ok(total)
}

/// Margin parameter and misclassification level of `p`.
pub fn margin_and_level(p: &JointDistribution) -> (f64, f64) {
    (p.margin_h(), p.level())
}

/// Weighted disagreement `sum_i mu_i 1{t_i != u_i}` (the L1(mu) distance
/// between 0/1-valued functions).
pub fn l1_distance(domain: &FiniteDomain, t: &Classifier, u: &Classifier) -> Result<f64> {
    if t.len() != domain.len() || u.len() != domain.len() {
        return Err(Error::DomainMismatch {
            expected: domain.len(),
            got: if t.len() != domain.len() { t.len() } else { u.len() },
        });
    }
    let mut total = 0.0;
    for i in 0..domain.len() {
        if t.label(i) != u.label(i) {
            total += domain.weight(i);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(weights: Vec<f64>, eta: Vec<f64>) -> JointDistribution {
        JointDistribution::new(FiniteDomain::new(weights).unwrap(), eta).unwrap()
    }

    #[test]
    fn bayes_thresholds_at_one_half() {
        let p = dist(vec![0.5, 0.5], vec![0.9, 0.1]);
        assert_eq!(p.bayes().labels(), vec![true, false]);

        let tie = dist(vec![0.5, 0.5], vec![0.5, 0.5]);
        assert_eq!(tie.bayes().labels(), vec![true, true]);

        let p3 = dist(vec![0.4, 0.3, 0.3], vec![0.75, 0.25, 0.5]);
        assert_eq!(p3.bayes().labels(), vec![true, false, true]);
    }

    #[test]
    fn excess_loss_examples() {
        let p = dist(vec![0.5, 0.5], vec![0.8, 0.2]);
        let bayes = bayes_classifier(&p);
        assert_eq!(excess_loss(&p, &bayes).unwrap(), 0.0);

        // All-zeros against Bayes (1,0): brute-force misclassification gap
        // is 0.5 - 0.2 = 0.3.
        let t = Classifier::from_labels(&[false, false]).unwrap();
        let direct = excess_loss(&p, &t).unwrap();
        assert!((direct - 0.3).abs() < 1e-15);
        let gap = misclassification(&p, &t).unwrap() - misclassification(&p, &bayes).unwrap();
        assert!((direct - gap).abs() < 1e-14);

        // Zero-error law: disagreement mass is the excess loss.
        let q = dist(vec![0.25, 0.25, 0.5], vec![1.0, 0.0, 1.0]);
        let u = Classifier::from_labels(&[false, false, true]).unwrap();
        assert!((excess_loss(&q, &u).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn margin_and_level_examples() {
        let p = dist(vec![0.5, 0.5], vec![0.8, 0.2]);
        let (h, l) = margin_and_level(&p);
        assert!((h - 0.6).abs() < 1e-15);
        assert!((l - 0.2).abs() < 1e-15);

        let zero_err = dist(vec![0.3, 0.7], vec![1.0, 0.0]);
        assert_eq!(margin_and_level(&zero_err), (1.0, 0.0));
        assert!(zero_err.zero_error());

        let flat = dist(vec![0.5, 0.5], vec![0.5, 0.5]);
        assert_eq!(margin_and_level(&flat), (0.0, 0.5));
        assert!(!flat.zero_error());
    }

    #[test]
    fn l1_distance_examples() {
        let d4 = FiniteDomain::uniform(4).unwrap();
        let t = Classifier::from_labels(&[true, false, true, false]).unwrap();
        assert_eq!(l1_distance(&d4, &t, &t).unwrap(), 0.0);
        let u = Classifier::from_labels(&[true, false, true, true]).unwrap();
        assert!((l1_distance(&d4, &t, &u).unwrap() - 0.25).abs() < 1e-15);

        let d2 = FiniteDomain::new(vec![0.7, 0.3]).unwrap();
        let a = Classifier::from_labels(&[true, false]).unwrap();
        let b = Classifier::from_labels(&[true, true]).unwrap();
        assert!((l1_distance(&d2, &a, &b).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(FiniteDomain::new(vec![]).is_err());
        assert!(FiniteDomain::new(vec![0.5, 0.6]).is_err());
        assert!(FiniteDomain::new(vec![-0.1, 1.1]).is_err());
        let d = FiniteDomain::uniform(2).unwrap();
        assert!(JointDistribution::new(d.clone(), vec![0.5]).is_err());
        assert!(JointDistribution::new(d.clone(), vec![0.5, 1.5]).is_err());
        let p = JointDistribution::new(d, vec![0.5, 0.5]).unwrap();
        let t3 = Classifier::from_labels(&[true, true, true]).unwrap();
        assert!(matches!(excess_loss(&p, &t3), Err(Error::DomainMismatch { .. })));
    }

    #[test]
    fn bayes_minimizes_misclassification_exhaustively() {
        // Over every classifier on a 6-point domain the Bayes rule attains
        // the minimum misclassification probability.
        let p = dist(
            vec![0.1, 0.2, 0.15, 0.25, 0.05, 0.25],
            vec![0.9, 0.45, 0.5, 0.1, 0.99, 0.62],
        );
        let bayes_risk = misclassification(&p, p.bayes()).unwrap();
        for bits in 0..(1u64 << 6) {
            let t = Classifier::from_bits(bits, 6).unwrap();
            assert!(misclassification(&p, &t).unwrap() >= bayes_risk - 1e-15);
        }
    }

    proptest! {
        #[test]
        fn excess_loss_sandwich_and_margin_inequality(
            raw_w in proptest::collection::vec(0.01f64..1.0, 1..8),
            raw_eta in proptest::collection::vec(0.0f64..=1.0, 8),
            bits in any::<u64>(),
        ) {
            let m = raw_w.len();
            let total: f64 = raw_w.iter().sum();
            let weights: Vec<f64> = raw_w.iter().map(|w| w / total).collect();
            let p = dist(weights, raw_eta[..m].to_vec());
            let t = Classifier::from_bits(bits & ((1u64 << m) - 1), m).unwrap();

            let loss = excess_loss(&p, &t).unwrap();
            let dist1 = l1_distance(p.domain(), &t, p.bayes()).unwrap();
            prop_assert!(loss >= -1e-15);
            prop_assert!(loss <= dist1 + 1e-12);
            prop_assert!(dist1 <= 1.0 + 1e-12);
            // Margin inequality with theta = 1, exact on finite support.
            prop_assert!(loss + 1e-12 >= p.margin_h() * dist1);
            // Oracle equivalence against the misclassification gap.
            let gap = misclassification(&p, &t).unwrap()
                - misclassification(&p, p.bayes()).unwrap();
            prop_assert!((loss - gap).abs() <= 1e-14);
        }
    }
}
