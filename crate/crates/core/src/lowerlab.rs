//! Adversarial distribution families and information-theoretic tools for
//! minimax lower bounds: hypercube-indexed margin families, closed-form
//! Hellinger/Kullback-Leibler divergences with brute-force oracles,
//! greedy constant-weight Hamming packing, and the multiple-testing
//! bound converting information into test-error limits.

use std::collections::HashSet;
use std::hash::{BuildHasherDefault, Hasher};

use crate::bits::{binomial, weight_patterns};
use crate::domain::{l1_distance, FiniteDomain, JointDistribution};
use crate::error::{Error, Result};

/// Packing-rate constant in the code-cardinality guarantee.
pub const PACKING_RHO: f64 = 0.233;

/// Test-level constant of the multiple-testing bound.
pub const BIRGE_ALPHA: f64 = 0.71;

/// Candidate-scan cap for greedy packing; enumerations larger than this
/// are truncated to their lexicographic prefix.
pub const DEFAULT_PACKING_SCAN_CAP: u64 = 20_000_000;

/// Vertex cap for the exhaustive maximum-clique packing fallback.
pub const MAX_CLIQUE_WORDS: u128 = 5_000;

/// A family of joint distributions indexed by hypercube vertices, all
/// satisfying the margin condition with parameter `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginFamilySpec {
    kind: FamilyKind,
    h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// `V` atoms, the first `V-1` carrying mass `p` and regression value
    /// `(1 +/- h)/2`, the last carrying the remaining mass with
    /// deterministic label 0.
    Assouad { v: u32, p: f64 },
    /// Uniform marginal on `n_points` atoms, index vectors restricted to
    /// Hamming weight `weight`.
    Sparse { n_points: u32, weight: u32 },
}

impl MarginFamilySpec {
    pub fn assouad(v: u32, h: f64, p: f64) -> Result<Self> {
        if v < 2 {
            return Err(Error::InvalidParameter(format!("assouad family needs V >= 2, got {v}")));
        }
        check_margin(h)?;
        if !(0.0..=1.0).contains(&p) || p * (v - 1) as f64 > 1.0 + 1e-15 {
            return Err(Error::InvalidParameter(format!(
                "atom mass must satisfy 0 <= p and p(V-1) <= 1, got p={p}, V={v}"
            )));
        }
        Ok(Self { kind: FamilyKind::Assouad { v, p }, h })
    }

    /// Assouad family with the proof defaults for sample size `n`: a
    /// margin below `sqrt((V-1)/n)` is raised to that value and the atom
    /// mass is `2/(9 n h^2)` clamped so the first `V-1` atoms carry at
    /// most the whole mass.
    pub fn assouad_default_p(v: u32, h: f64, n: u64) -> Result<Self> {
        if v < 2 {
            return Err(Error::InvalidParameter(format!("assouad family needs V >= 2, got {v}")));
        }
        check_margin(h)?;
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be positive".into()));
        }
        let h_eff = h.max(((v - 1) as f64 / n as f64).sqrt()).min(1.0);
        let p = (2.0 / (9.0 * n as f64 * h_eff * h_eff)).min(1.0 / (v - 1) as f64);
        Self::assouad(v, h_eff, p)
    }

    pub fn sparse(n_points: u32, weight: u32, h: f64) -> Result<Self> {
        if weight < 1 || n_points < 4 * weight {
            return Err(Error::InvalidParameter(format!(
                "sparse family needs N >= 4D >= 4, got (N={n_points}, D={weight})"
            )));
        }
        if n_points as usize > crate::domain::MAX_DOMAIN_POINTS {
            return Err(Error::InvalidParameter("sparse family capped at 64 points".into()));
        }
        check_margin(h)?;
        Ok(Self { kind: FamilyKind::Sparse { n_points, weight }, h })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    /// Length of a valid index vector.
    pub fn index_len(&self) -> usize {
        match self.kind {
            FamilyKind::Assouad { v, .. } => v as usize - 1,
            FamilyKind::Sparse { n_points, .. } => n_points as usize,
        }
    }

    /// Number of domain points of each family member.
    pub fn domain_len(&self) -> usize {
        match self.kind {
            FamilyKind::Assouad { v, .. } => v as usize,
            FamilyKind::Sparse { n_points, .. } => n_points as usize,
        }
    }

    fn validate_index(&self, b: &[bool]) -> Result<()> {
        if b.len() != self.index_len() {
            return Err(Error::InvalidParameter(format!(
                "index vector length {} does not match family ({} expected)",
                b.len(),
                self.index_len()
            )));
        }
        if let FamilyKind::Sparse { weight, .. } = self.kind {
            let w = b.iter().filter(|&&x| x).count() as u32;
            if w != weight {
                return Err(Error::InvalidParameter(format!(
                    "sparse index vector must have weight {weight}, got {w}"
                )));
            }
        }
        Ok(())
    }
}

fn check_margin(h: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::InvalidParameter(format!("margin must lie in [0, 1], got {h}")));
    }
    Ok(())
}

fn eta_of(b: bool, h: f64) -> f64 {
    if b {
        (1.0 + h) / 2.0
    } else {
        (1.0 - h) / 2.0
    }
}

/// The family member indexed by `b`.
pub fn family_member(spec: &MarginFamilySpec, b: &[bool]) -> Result<JointDistribution> {
    spec.validate_index(b)?;
    let h = spec.h;
    match spec.kind {
        FamilyKind::Assouad { v, p } => {
            let v = v as usize;
            let mut weights = vec![p; v];
            weights[v - 1] = 1.0 - p * (v - 1) as f64;
            // Guard against rounding pushing the residual epsilon-negative.
            weights[v - 1] = weights[v - 1].max(0.0);
            let mut eta: Vec<f64> = b.iter().map(|&bi| eta_of(bi, h)).collect();
            eta.push(0.0);
            JointDistribution::new(FiniteDomain::new(weights)?, eta)
        }
        FamilyKind::Sparse { n_points, .. } => {
            let eta: Vec<f64> = b.iter().map(|&bi| eta_of(bi, h)).collect();
            JointDistribution::new(FiniteDomain::uniform(n_points as usize)?, eta)
        }
    }
}

/// Marginal-weighted disagreement of the Bayes classifiers of the two
/// members indexed by `b` and `b2`.
pub fn index_l1_distance(spec: &MarginFamilySpec, b: &[bool], b2: &[bool]) -> Result<f64> {
    let pb = family_member(spec, b)?;
    let qb = family_member(spec, b2)?;
    l1_distance(pb.domain(), pb.bayes(), qb.bayes())
}

/// Closed-form squared Hellinger distance between the members indexed by
/// `b` and `b2`: `(1 - sqrt(1 - h^2)) ||t - s||_1`.
pub fn closed_form_hellinger_sq(spec: &MarginFamilySpec, b: &[bool], b2: &[bool]) -> Result<f64> {
    let dist = index_l1_distance(spec, b, b2)?;
    let h = spec.h;
    Ok((1.0 - (1.0 - h * h).sqrt()) * dist)
}

/// Closed-form Kullback-Leibler information between the members indexed
/// by `b` and `b2`: `h log((1+h)/(1-h)) ||t - s||_1`. Fails at `h = 1`,
/// where the information is infinite for distinct members.
pub fn closed_form_kl(spec: &MarginFamilySpec, b: &[bool], b2: &[bool]) -> Result<f64> {
    if spec.h >= 1.0 {
        return Err(Error::InfiniteDivergence);
    }
    let dist = index_l1_distance(spec, b, b2)?;
    let h = spec.h;
    if h == 0.0 {
        return Ok(0.0);
    }
    Ok(h * ((1.0 + h) / (1.0 - h)).ln() * dist)
}

/// Both closed-form divergences as `(hellinger_sq, kl)`.
pub fn closed_form_divergences(
    spec: &MarginFamilySpec,
    b: &[bool],
    b2: &[bool],
) -> Result<(f64, f64)> {
    Ok((closed_form_hellinger_sq(spec, b, b2)?, closed_form_kl(spec, b, b2)?))
}

fn check_same_marginal(p: &JointDistribution, q: &JointDistribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DomainMismatch { expected: p.len(), got: q.len() });
    }
    let same = p
        .domain()
        .weights()
        .iter()
        .zip(q.domain().weights())
        .all(|(a, b)| (a - b).abs() <= 1e-12);
    if !same {
        return Err(Error::InvalidParameter("distributions have different marginals".into()));
    }
    Ok(())
}

/// Squared Hellinger distance by direct per-point Bernoulli summation.
pub fn brute_force_hellinger_sq(p: &JointDistribution, q: &JointDistribution) -> Result<f64> {
    check_same_marginal(p, q)?;
    let mut total = 0.0;
    for i in 0..p.len() {
        let (ep, eq) = (p.eta()[i], q.eta()[i]);
        total += p.domain().weight(i)
            * (1.0 - (ep * eq).sqrt() - ((1.0 - ep) * (1.0 - eq)).sqrt());
    }
    Ok(total)
}

/// Kullback-Leibler information by direct per-point Bernoulli summation,
/// with the `0 log 0 = 0` convention. Fails where a positive-probability
/// outcome of `p` has probability zero under `q`.
pub fn brute_force_kl(p: &JointDistribution, q: &JointDistribution) -> Result<f64> {
    check_same_marginal(p, q)?;
    let mut total = 0.0;
    for i in 0..p.len() {
        let w = p.domain().weight(i);
        if w == 0.0 {
            continue;
        }
        let (ep, eq) = (p.eta()[i], q.eta()[i]);
        if (ep > 0.0 && eq == 0.0) || (ep < 1.0 && eq == 1.0) {
            return Err(Error::SupportViolation);
        }
        let mut point = 0.0;
        if ep > 0.0 {
            point += ep * (ep / eq).ln();
        }
        if ep < 1.0 {
            point += (1.0 - ep) * ((1.0 - ep) / (1.0 - eq)).ln();
        }
        total += w * point;
    }
    Ok(total)
}

/// Both brute-force divergences as `(hellinger_sq, kl)`.
pub fn brute_force_divergences(
    p: &JointDistribution,
    q: &JointDistribution,
) -> Result<(f64, f64)> {
    Ok((brute_force_hellinger_sq(p, q)?, brute_force_kl(p, q)?))
}

/// Maximum componentwise gap between the closed-form divergences and the
/// brute-force per-point sums over `trials` seeded random family
/// instances spanning margins in [0, 0.99].
pub fn divergence_oracle_max_error(trials: u64, seed: u64) -> Result<f64> {
    use rand::Rng;
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = crate::erm::replication_rng(seed, trial);
        let h = 0.99 * rng.random::<f64>();
        let spec = if rng.random::<f64>() < 0.5 {
            let v = rng.random_range(2u32..=8);
            let p = rng.random::<f64>() / (v - 1) as f64;
            MarginFamilySpec::assouad(v, h, p)?
        } else {
            let weight = rng.random_range(1u32..=2);
            let n_points = rng.random_range(4 * weight..=12);
            MarginFamilySpec::sparse(n_points, weight, h)?
        };
        let draw_index = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<bool> {
            match spec.kind() {
                FamilyKind::Assouad { v, .. } => {
                    (0..v - 1).map(|_| rng.random::<f64>() < 0.5).collect()
                }
                FamilyKind::Sparse { n_points, weight } => {
                    let mut b = vec![false; *n_points as usize];
                    let mut placed = 0;
                    while placed < *weight {
                        let i = rng.random_range(0..*n_points as usize);
                        if !b[i] {
                            b[i] = true;
                            placed += 1;
                        }
                    }
                    b
                }
            }
        };
        let b = draw_index(&mut rng);
        let b2 = draw_index(&mut rng);
        let (ch, ck) = closed_form_divergences(&spec, &b, &b2)?;
        let p = family_member(&spec, &b)?;
        let q = family_member(&spec, &b2)?;
        let (bh, bk) = brute_force_divergences(&p, &q)?;
        worst = worst.max((ch - bh).abs()).max((ck - bk).abs());
    }
    Ok(worst)
}

/// Multiple-testing bound: the minimum acceptance probability over N+1
/// disjoint events satisfies `a <= 0.71 v (kbar / log(1+N))`, capped at 1.
pub fn birge_bound(kbar: f64, n_hypotheses: u64) -> Result<f64> {
    if kbar < 0.0 || !kbar.is_finite() {
        return Err(Error::InvalidParameter("mean information must be finite and >= 0".into()));
    }
    if n_hypotheses < 1 {
        return Err(Error::InvalidParameter("need at least one alternative hypothesis".into()));
    }
    Ok(BIRGE_ALPHA.max(kbar / (1.0 + n_hypotheses as f64).ln()).min(1.0))
}

/// A constant-weight binary code with pairwise Hamming distance above
/// half the weight, plus its certificate data.
#[derive(Debug, Clone)]
pub struct PackingCode {
    pub n: u32,
    pub d: u32,
    pub codewords: Vec<u64>,
    pub min_distance: u32,
    pub log_cardinality: f64,
    /// Whether `log_cardinality >= 0.233 D log(N/D)`.
    pub meets_bound: bool,
    /// True when the candidate enumeration was cut off at the scan cap.
    pub truncated: bool,
}

impl PackingCode {
    /// The guaranteed log-cardinality level `0.233 D log(N/D)`.
    pub fn bound_target(&self) -> f64 {
        packing_bound_target(self.n, self.d)
    }

    /// Re-derive the certificate from the raw codewords: all weights equal
    /// `D`, the recomputed minimum pairwise distance matches and exceeds
    /// `D/2`, and the log-cardinality is consistent.
    pub fn verify(&self) -> bool {
        if self.codewords.is_empty() {
            return false;
        }
        if self.codewords.iter().any(|&w| w.count_ones() != self.d) {
            return false;
        }
        let recomputed = if self.codewords.len() > 1 {
            pairwise_min_distance(&self.codewords)
        } else {
            self.n
        };
        recomputed == self.min_distance
            && 2 * recomputed > self.d
            && (self.log_cardinality - (self.codewords.len() as f64).ln()).abs() < 1e-12
    }

    /// Text form: header `N D count`, then one codeword per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n, self.d, self.codewords.len());
        for &w in &self.codewords {
            for i in 0..self.n {
                out.push(if w >> (self.n - 1 - i) & 1 == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

fn packing_bound_target(n: u32, d: u32) -> f64 {
    PACKING_RHO * d as f64 * (n as f64 / d as f64).ln()
}

fn pairwise_min_distance(words: &[u64]) -> u32 {
    let mut min = u32::MAX;
    for i in 0..words.len() {
        for j in (i + 1)..words.len() {
            min = min.min((words[i] ^ words[j]).count_ones());
        }
    }
    min
}

/// Multiply-mix hasher for u64 keys; the default SipHash dominates the
/// packing scan otherwise.
#[derive(Default)]
struct Mix64 {
    state: u64,
}

impl Hasher for Mix64 {
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.state = (self.state ^ b as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        }
    }

    fn write_u64(&mut self, v: u64) {
        let mut z = v.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        self.state = z ^ (z >> 31);
    }

    fn finish(&self) -> u64 {
        self.state
    }
}

type FastSet = HashSet<u64, BuildHasherDefault<Mix64>>;

/// Greedy lexicographic packing with the default scan cap.
pub fn greedy_packing(n: u32, d: u32) -> Result<PackingCode> {
    greedy_packing_with_cap(n, d, DEFAULT_PACKING_SCAN_CAP)
}

/// Scan weight-`d` words of length `n` in lexicographic order, keeping a
/// word iff its Hamming distance to every kept word exceeds `d/2`.
/// Enumerations larger than `scan_cap` are truncated to their prefix
/// (the kept set is then maximal over the scanned prefix only).
///
/// Rejection is tested through shared-subset signatures: distance
/// `<= d/2` between weight-`d` words is exactly sharing `ceil(3d/4)` ones.
pub fn greedy_packing_with_cap(n: u32, d: u32, scan_cap: u64) -> Result<PackingCode> {
    if d < 1 || n < 4 * d || n > 64 {
        return Err(Error::InvalidParameter(format!(
            "packing needs 4 <= 4D <= N <= 64, got (N={n}, D={d})"
        )));
    }
    let overlap = (3 * d).div_ceil(4);
    let mut signatures = FastSet::default();
    let mut kept: Vec<u64> = Vec::new();
    let mut positions = [0u32; 64];
    let mut truncated = false;
    for (scanned, cand) in weight_patterns(n, d).enumerate() {
        if scanned as u64 >= scan_cap {
            truncated = true;
            break;
        }
        let mut count = 0usize;
        let mut rest = cand;
        while rest != 0 {
            positions[count] = rest.trailing_zeros();
            count += 1;
            rest &= rest - 1;
        }
        let clash = subset_masks(&positions[..count], overlap)
            .any(|sig| signatures.contains(&sig));
        if !clash {
            for sig in subset_masks(&positions[..count], overlap) {
                signatures.insert(sig);
            }
            kept.push(cand);
        }
    }
    let min_distance = if kept.len() > 1 { pairwise_min_distance(&kept) } else { n };
    let log_cardinality = (kept.len() as f64).ln();
    let mut code = PackingCode {
        n,
        d,
        codewords: kept,
        min_distance,
        log_cardinality,
        meets_bound: log_cardinality >= packing_bound_target(n, d) - 1e-12,
        truncated,
    };
    if !code.meets_bound && binomial(n as u64, d as u64) <= MAX_CLIQUE_WORDS {
        code = max_clique_packing(n, d)?;
    }
    Ok(code)
}

/// All masks formed by choosing `k` of the given bit positions.
fn subset_masks<'a>(positions: &'a [u32], k: u32) -> impl Iterator<Item = u64> + 'a {
    weight_patterns(positions.len() as u32, k).map(move |sel| {
        let mut mask = 0u64;
        let mut sel = sel;
        while sel != 0 {
            let i = sel.trailing_zeros() as usize;
            mask |= 1u64 << positions[i];
            sel &= sel - 1;
        }
        mask
    })
}

/// Exhaustive maximum packing by branch-and-bound maximum clique over the
/// compatibility graph (distance `> d/2`). Only valid for enumerations of
/// at most [`MAX_CLIQUE_WORDS`] words.
pub fn max_clique_packing(n: u32, d: u32) -> Result<PackingCode> {
    if d < 1 || n < 4 * d || n > 64 {
        return Err(Error::InvalidParameter(format!(
            "packing needs 4 <= 4D <= N <= 64, got (N={n}, D={d})"
        )));
    }
    if binomial(n as u64, d as u64) > MAX_CLIQUE_WORDS {
        return Err(Error::InvalidParameter(format!(
            "exhaustive packing limited to {MAX_CLIQUE_WORDS} candidate words"
        )));
    }
    let words: Vec<u64> = weight_patterns(n, d).collect();
    let count = words.len();
    let row_len = count.div_ceil(64);
    let mut adj = vec![0u64; count * row_len];
    for i in 0..count {
        for j in (i + 1)..count {
            if 2 * (words[i] ^ words[j]).count_ones() > d {
                adj[i * row_len + j / 64] |= 1 << (j % 64);
                adj[j * row_len + i / 64] |= 1 << (i % 64);
            }
        }
    }
    let mut best: Vec<usize> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut candidates = vec![u64::MAX; row_len];
    if !count.is_multiple_of(64) {
        candidates[row_len - 1] = (1u64 << (count % 64)) - 1;
    }
    fn popcount(set: &[u64]) -> usize {
        set.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn expand(
        adj: &[u64],
        row_len: usize,
        candidates: &mut Vec<u64>,
        current: &mut Vec<usize>,
        best: &mut Vec<usize>,
    ) {
        if current.len() + popcount(candidates) <= best.len() {
            return;
        }
        let Some(v) = candidates
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| i * 64 + w.trailing_zeros() as usize)
        else {
            if current.len() > best.len() {
                *best = current.clone();
            }
            return;
        };
        // Branch 1: take v.
        let mut with_v = candidates.clone();
        for (slot, w) in with_v.iter_mut().enumerate() {
            *w &= adj[v * row_len + slot];
        }
        current.push(v);
        expand(adj, row_len, &mut with_v, current, best);
        current.pop();
        // Branch 2: skip v.
        candidates[v / 64] &= !(1u64 << (v % 64));
        expand(adj, row_len, candidates, current, best);
    }
    expand(&adj, row_len, &mut candidates, &mut current, &mut best);
    best.sort_unstable();
    let codewords: Vec<u64> = best.iter().map(|&i| words[i]).collect();
    let min_distance = if codewords.len() > 1 { pairwise_min_distance(&codewords) } else { n };
    let log_cardinality = (codewords.len() as f64).ln();
    Ok(PackingCode {
        n,
        d,
        codewords,
        min_distance,
        log_cardinality,
        meets_bound: log_cardinality >= packing_bound_target(n, d) - 1e-12,
        truncated: false,
    })
}
