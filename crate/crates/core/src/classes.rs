//! Explicit finite classes of binary classifiers with exact VC-dimension,
//! shattering, combinatorial entropy and combinatorial richness queries.
//!
//! Members are stored as bit patterns in a fixed ascending order; that
//! order doubles as the deterministic tie-break contract for empirical
//! risk minimization.

use std::collections::HashSet;
use std::path::Path;

use crate::bits::{binomial, extract_bits, weight_patterns};
use crate::domain::{Classifier, FiniteDomain, MAX_DOMAIN_POINTS};
use crate::error::{Error, Result};

/// Largest domain for exhaustive shattering searches.
pub const MAX_EXHAUSTIVE_POINTS: usize = 20;

/// Member-count cap for sparse class enumeration.
pub const MAX_SPARSE_MEMBERS: u128 = 1_000_000;

/// Point-count cap for the half-space dichotomy enumeration.
pub const MAX_HALFSPACE_POINTS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum ClassKind {
    /// Every subset of an `m`-point set.
    Powerset,
    /// All subsets of exactly `weight` of `n_points` points.
    Sparse { n_points: usize, weight: u32 },
    /// The trace of closed half-spaces on an explicit point configuration.
    HalfspaceTrace { dim: usize },
    /// Hand-listed members.
    Explicit,
}

/// A finite family of binary classifiers over an `m`-point domain.
#[derive(Debug, Clone)]
pub struct ClassifierClass {
    domain_size: usize,
    members: Vec<u64>,
    kind: ClassKind,
}

impl ClassifierClass {
    /// All `2^m` classifiers on `m` points.
    pub fn powerset(m: usize) -> Result<Self> {
        if m == 0 || m > MAX_EXHAUSTIVE_POINTS {
            return Err(Error::InvalidParameter(format!(
                "powerset class needs 1..={MAX_EXHAUSTIVE_POINTS} points, got {m}"
            )));
        }
        let members: Vec<u64> = (0..(1u64 << m)).collect();
        Ok(Self { domain_size: m, members, kind: ClassKind::Powerset })
    }

    /// All classifiers of Hamming weight exactly `weight` on `n_points`.
    pub fn sparse(n_points: usize, weight: u32) -> Result<Self> {
        if n_points == 0 || n_points > MAX_DOMAIN_POINTS || weight as usize > n_points {
            return Err(Error::InvalidParameter(format!(
                "sparse class needs 0 <= weight <= points <= {MAX_DOMAIN_POINTS}, got ({n_points}, {weight})"
            )));
        }
        let count = binomial(n_points as u64, weight as u64);
        if count > MAX_SPARSE_MEMBERS {
            return Err(Error::InvalidParameter(format!(
                "sparse class would have {count} members (cap {MAX_SPARSE_MEMBERS})"
            )));
        }
        let members: Vec<u64> = weight_patterns(n_points as u32, weight).collect();
        Ok(Self { domain_size: n_points, members, kind: ClassKind::Sparse { n_points, weight } })
    }

    /// All dichotomies of the given points realizable by a closed
    /// half-space `{x : w . x >= c}`. Supports dimensions 1 to 3; each of
    /// the `2^N` labelings is checked against an exact candidate-direction
    /// separability oracle.
    pub fn halfspace_trace(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.len();
        if n == 0 || n > MAX_HALFSPACE_POINTS {
            return Err(Error::InvalidParameter(format!(
                "half-space trace needs 1..={MAX_HALFSPACE_POINTS} points, got {n}"
            )));
        }
        let dim = points[0].len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "half-space oracle supports dimensions 1..=3, got {dim}"
            )));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidParameter("points have mixed dimensions".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if points[i] == points[j] {
                    return Err(Error::InvalidParameter(format!(
                        "duplicate points at indices {i} and {j}"
                    )));
                }
            }
        }
        let mut members = Vec::new();
        for labeling in 0..(1u64 << n) {
            let ones: Vec<&[f64]> = (0..n)
                .filter(|&i| labeling >> (n - 1 - i) & 1 == 1)
                .map(|i| points[i].as_slice())
                .collect();
            let zeros: Vec<&[f64]> = (0..n)
                .filter(|&i| labeling >> (n - 1 - i) & 1 == 0)
                .map(|i| points[i].as_slice())
                .collect();
            if separable(&ones, &zeros, dim) {
                members.push(labeling);
            }
        }
        Ok(Self { domain_size: n, members, kind: ClassKind::HalfspaceTrace { dim } })
    }

    /// A class from an explicit member list; members are sorted into the
    /// canonical lexicographic order and must be distinct.
    pub fn explicit(members: Vec<Classifier>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyClass);
        }
        let m = members[0].len();
        if members.iter().any(|t| t.len() != m) {
            return Err(Error::InvalidParameter("members have mixed lengths".into()));
        }
        let mut bits: Vec<u64> = members.iter().map(|t| t.bits()).collect();
        bits.sort_unstable();
        if bits.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate members".into()));
        }
        Ok(Self { domain_size: m, members: bits, kind: ClassKind::Explicit })
    }

    /// Parse a class from the text format: first line `m k`, then `k`
    /// lines of `m` characters in {0, 1}.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
        let mut parts = header.split_whitespace();
        let m: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("header must be 'm k'".into()))?;
        let k: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("header must be 'm k'".into()))?;
        if parts.next().is_some() {
            return Err(Error::Parse("header must be 'm k'".into()));
        }
        let mut members = Vec::with_capacity(k);
        for (lineno, line) in lines.by_ref().take(k).enumerate() {
            let row = line.trim();
            if row.len() != m {
                return Err(Error::Parse(format!(
                    "member line {} has length {}, expected {m}",
                    lineno + 2,
                    row.len()
                )));
            }
            let mut labels = Vec::with_capacity(m);
            for ch in row.chars() {
                match ch {
                    '0' => labels.push(false),
                    '1' => labels.push(true),
                    _ => {
                        return Err(Error::Parse(format!(
                            "member line {} has invalid character '{ch}'",
                            lineno + 2
                        )))
                    }
                }
            }
            members.push(Classifier::from_labels(&labels)?);
        }
        if members.len() != k {
            return Err(Error::Parse(format!("expected {k} members, found {}", members.len())));
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::Parse("trailing content after member list".into()));
        }
        Self::explicit(members)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// Serialize to the text format accepted by [`Self::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.domain_size, self.members.len());
        for i in 0..self.members.len() {
            out.push_str(&self.member(i).to_string());
            out.push('\n');
        }
        out
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn kind(&self) -> &ClassKind {
        &self.kind
    }

    /// Member `i` in the canonical order.
    pub fn member(&self, i: usize) -> Classifier {
        Classifier::from_bits(self.members[i], self.domain_size).expect("stored member is valid")
    }

    /// Raw member patterns in canonical order.
    pub fn member_bits(&self) -> &[u64] {
        &self.members
    }

    /// VC-dimension known from the construction without a search:
    /// `m` for power sets, `min(D, N - D)` for weight-`D` classes.
    pub fn vc_hint(&self) -> Option<u32> {
        match self.kind {
            ClassKind::Powerset => Some(self.domain_size as u32),
            ClassKind::Sparse { n_points, weight } => Some(weight.min(n_points as u32 - weight)),
            _ => None,
        }
    }

    /// Exact VC-dimension by exhaustive shattering search with
    /// hereditary pruning: a set can only be shattered if all its
    /// subsets are.
    pub fn vc_dimension(&self) -> Result<u32> {
        let m = self.domain_size;
        if m > MAX_EXHAUSTIVE_POINTS {
            return Err(Error::InvalidParameter(format!(
                "exhaustive VC search limited to {MAX_EXHAUSTIVE_POINTS} points, domain has {m}"
            )));
        }
        let mut shattered: Vec<u64> = vec![0];
        let mut vc = 0u32;
        for k in 1..=m as u32 {
            let mut next = Vec::new();
            for &mask in &shattered {
                // Extend each shattered set by points past its highest one.
                let start = if mask == 0 { 0 } else { 64 - mask.leading_zeros() };
                for bit in start..m as u32 {
                    let candidate = mask | (1u64 << bit);
                    if self.shatters(candidate, k) {
                        next.push(candidate);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            vc = k;
            shattered = next;
        }
        Ok(vc)
    }

    fn shatters(&self, mask: u64, k: u32) -> bool {
        let want = 1usize << k;
        let mut seen = vec![0u64; want.div_ceil(64)];
        let mut found = 0usize;
        for &member in &self.members {
            let trace = extract_bits(member, mask) as usize;
            let (word, bit) = (trace / 64, trace % 64);
            if seen[word] >> bit & 1 == 0 {
                seen[word] |= 1 << bit;
                found += 1;
                if found == want {
                    return true;
                }
            }
        }
        false
    }

    /// Random combinatorial entropy: log of the number of distinct
    /// restrictions of members to the (multiset of) sample points, in nats.
    pub fn combinatorial_entropy(&self, sample_points: &[usize]) -> Result<f64> {
        if sample_points.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut mask = 0u64;
        for &p in sample_points {
            if p >= self.domain_size {
                return Err(Error::InvalidParameter(format!(
                    "sample point {p} out of range for domain of {}",
                    self.domain_size
                )));
            }
            mask |= 1u64 << (self.domain_size - 1 - p);
        }
        let mut traces = HashSet::new();
        for &member in &self.members {
            traces.insert(member & mask);
        }
        Ok((traces.len() as f64).ln())
    }

    /// True iff every `d`-subset of the given points is realized as the
    /// restriction of some member to those points.
    pub fn check_property_and(&self, point_subset: &[usize], d: u32) -> Result<bool> {
        let n = point_subset.len();
        if n == 0 || n > MAX_EXHAUSTIVE_POINTS || d as usize > n {
            return Err(Error::InvalidParameter(format!(
                "richness check needs 0 <= D <= N <= {MAX_EXHAUSTIVE_POINTS}, got (N={n}, D={d})"
            )));
        }
        let mut seen_points = HashSet::new();
        for &p in point_subset {
            if p >= self.domain_size || !seen_points.insert(p) {
                return Err(Error::InvalidParameter(format!("invalid or repeated point index {p}")));
            }
        }
        // Trace of each member on the subset, compacted to an n-bit
        // pattern in subset order.
        let mut traces = HashSet::new();
        for &member in &self.members {
            let mut t = 0u64;
            for (slot, &p) in point_subset.iter().enumerate() {
                if member >> (self.domain_size - 1 - p) & 1 == 1 {
                    t |= 1 << (n - 1 - slot);
                }
            }
            traces.insert(t);
        }
        Ok(weight_patterns(n as u32, d).all(|pat| traces.contains(&pat)))
    }

    /// Exact expected combinatorial entropy `E[H]` for an i.i.d. sample of
    /// size `n` from `domain`, by inclusion-exclusion over the set of
    /// distinct points observed. Limited to 12-point domains.
    pub fn expected_combinatorial_entropy(&self, domain: &FiniteDomain, n: u64) -> Result<f64> {
        let m = self.domain_size;
        if domain.len() != m {
            return Err(Error::DomainMismatch { expected: m, got: domain.len() });
        }
        if m > 12 {
            return Err(Error::InvalidParameter(
                "exact expected entropy limited to 12-point domains".into(),
            ));
        }
        let full = (1u64 << m) - 1;
        // mass[s] = total weight of the point set s (mask in member bit order).
        let mut mass = vec![0.0f64; 1 << m];
        for s in 1u64..=full {
            let low = s & s.wrapping_neg();
            let point = m - 1 - low.trailing_zeros() as usize;
            mass[s as usize] = mass[(s ^ low) as usize] + domain.weight(point);
        }
        let mut expected = 0.0;
        for w in 1u64..=full {
            // P[distinct point set = w] by inclusion-exclusion over subsets.
            let mut prob = 0.0;
            let bits_w = w.count_ones();
            let mut u = w;
            loop {
                let sign = if (bits_w - u.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
                prob += sign * mass[u as usize].powi(n as i32);
                if u == 0 {
                    break;
                }
                u = (u - 1) & w;
            }
            if prob <= 0.0 {
                continue;
            }
            let mut traces = HashSet::new();
            for &member in &self.members {
                traces.insert(member & w);
            }
            expected += prob * (traces.len() as f64).ln();
        }
        Ok(expected)
    }
}

/// Sauer's bound `V (1 + log(n / V))` on combinatorial entropy, valid for
/// `n >= V >= 1`.
pub fn sauer_bound(v: u32, n: u64) -> Result<f64> {
    if v == 0 {
        return Err(Error::InvalidParameter("Sauer bound needs V >= 1".into()));
    }
    if n < v as u64 {
        return Err(Error::InvalidParameter(format!("Sauer bound needs n >= V, got n={n}, V={v}")));
    }
    let v = v as f64;
    Ok(v * (1.0 + (n as f64 / v).ln()))
}

/// Haussler-style universal entropy bound `kappa_h V (1 + log(1/eps v 1))`.
pub fn haussler_bound(v: u32, eps: f64, kappa_h: f64) -> Result<f64> {
    if v == 0 || eps <= 0.0 || kappa_h <= 0.0 {
        return Err(Error::InvalidParameter(
            "Haussler bound needs V >= 1, eps > 0, kappa_h > 0".into(),
        ));
    }
    Ok(kappa_h * v as f64 * (1.0 + (1.0 / eps).max(1.0).ln()))
}

/// Sauer and Haussler bound values for one (V, n, eps) configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBoundPair {
    pub sauer: f64,
    pub haussler: f64,
}

pub fn entropy_bounds(v: u32, n: u64, eps: f64, kappa_h: f64) -> Result<EntropyBoundPair> {
    Ok(EntropyBoundPair { sauer: sauer_bound(v, n)?, haussler: haussler_bound(v, eps, kappa_h)? })
}

/// Combinatorial entropy of a concrete sample next to the formula bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub combinatorial: f64,
    pub sauer: f64,
    pub haussler: f64,
    pub sample_size: usize,
}

pub fn entropy_report(
    class: &ClassifierClass,
    sample_points: &[usize],
    eps: f64,
    kappa_h: f64,
) -> Result<EntropyReport> {
    let combinatorial = class.combinatorial_entropy(sample_points)?;
    let v = class.vc_dimension()?.max(1);
    let bounds = entropy_bounds(v, sample_points.len() as u64, eps, kappa_h)?;
    Ok(EntropyReport {
        combinatorial,
        sauer: bounds.sauer,
        haussler: bounds.haussler,
        sample_size: sample_points.len(),
    })
}

// --- exact strict-separability oracle -------------------------------------

/// Decide whether `ones` and `zeros` are strictly separated by some
/// hyperplane (equivalently, whether a closed half-space realizes the
/// labeling). Candidate normal directions are enumerated from point
/// differences, edge normals and face normals; for disjoint convex hulls
/// the maximum-margin direction is always among them.
fn separable(ones: &[&[f64]], zeros: &[&[f64]], dim: usize) -> bool {
    if ones.is_empty() || zeros.is_empty() {
        return true;
    }
    let all: Vec<&[f64]> = ones.iter().chain(zeros.iter()).copied().collect();
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            let d = sub(all[i], all[j]);
            if dim == 2 {
                candidates.push(vec![-d[1], d[0]]);
            }
            candidates.push(d);
        }
    }
    if dim == 3 {
        // Face normals and edge-vertex directions from triples.
        for i in 0..all.len() {
            for j in (i + 1)..all.len() {
                for k in (j + 1)..all.len() {
                    let e1 = sub(all[j], all[i]);
                    let e2 = sub(all[k], all[i]);
                    candidates.push(cross(&e1, &e2));
                    for (a, p, q) in [(i, j, k), (j, i, k), (k, i, j)] {
                        let d = sub(all[q], all[p]);
                        let v = sub(all[a], all[p]);
                        candidates.push(cross(&d, &cross(&v, &d)));
                    }
                }
            }
        }
        // Edge-edge directions from pairs of pairs.
        for i in 0..all.len() {
            for j in (i + 1)..all.len() {
                for k in 0..all.len() {
                    for l in (k + 1)..all.len() {
                        if k == i && l == j {
                            continue;
                        }
                        let c = cross(&sub(all[j], all[i]), &sub(all[l], all[k]));
                        candidates.push(c);
                    }
                }
            }
        }
    }
    candidates.iter().any(|w| {
        if w.iter().all(|&x| x == 0.0) {
            return false;
        }
        for sign in [1.0, -1.0] {
            let min_one = ones.iter().map(|p| sign * dot(w, p)).fold(f64::INFINITY, f64::min);
            let max_zero =
                zeros.iter().map(|p| sign * dot(w, p)).fold(f64::NEG_INFINITY, f64::max);
            if max_zero < min_one {
                return true;
            }
        }
        false
    })
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
