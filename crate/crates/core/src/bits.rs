//! Small bit-pattern combinatorics shared by class construction and
//! Hamming packing.

/// Binomial coefficient as u128 (saturating at u128::MAX is irrelevant
/// at the sizes used here; n <= 64).
pub(crate) fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Iterator over all `width`-bit patterns of Hamming weight `weight`,
/// in ascending numeric order (Gosper's hack). Numeric order on the
/// stored pattern equals lexicographic order on the label vector under
/// the crate's most-significant-bit-first convention.
pub(crate) struct WeightPatterns {
    next: Option<u64>,
    limit: u64,
}

pub(crate) fn weight_patterns(width: u32, weight: u32) -> WeightPatterns {
    assert!(width <= 64 && weight <= width);
    if weight == 0 {
        // Single empty pattern.
        return WeightPatterns { next: Some(0), limit: 0 };
    }
    let first = (1u64 << weight) - 1;
    let limit = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
    WeightPatterns { next: Some(first), limit }
}

impl Iterator for WeightPatterns {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let v = self.next?;
        if v == 0 {
            self.next = None;
            return Some(0);
        }
        // Gosper's hack: next larger integer with the same popcount. The
        // carry overflows exactly when the ones have reached the top bits.
        let c = v & v.wrapping_neg();
        let (r, overflow) = v.overflowing_add(c);
        self.next = if overflow {
            None
        } else {
            let follow = (((r ^ v) >> 2) / c) | r;
            if follow > self.limit {
                None
            } else {
                Some(follow)
            }
        };
        Some(v)
    }
}

/// Compact the bits of `value` selected by `mask` into the low bits of
/// the result, preserving order (software PEXT).
pub(crate) fn extract_bits(value: u64, mut mask: u64) -> u64 {
    let mut out = 0u64;
    let mut pos = 0u32;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if value & low != 0 {
            out |= 1 << pos;
        }
        pos += 1;
        mask ^= low;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(64, 8), 4_426_165_368);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(7, 0), 1);
    }

    #[test]
    fn weight_patterns_enumerates_in_order() {
        let pats: Vec<u64> = weight_patterns(4, 2).collect();
        assert_eq!(pats, vec![0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]);
        assert_eq!(weight_patterns(6, 3).count() as u128, binomial(6, 3));
        assert_eq!(weight_patterns(5, 0).collect::<Vec<_>>(), vec![0]);
        assert_eq!(weight_patterns(3, 3).collect::<Vec<_>>(), vec![0b111]);
    }

    #[test]
    fn extract_bits_compacts() {
        assert_eq!(extract_bits(0b1011, 0b1110), 0b101);
        assert_eq!(extract_bits(0b1011, 0b0001), 0b1);
        assert_eq!(extract_bits(u64::MAX, u64::MAX), u64::MAX);
    }
}
