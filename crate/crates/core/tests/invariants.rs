//! Cross-module invariants: properties that tie the distribution model,
//! classes, ERM and the bound calculators together.

use marginlab_core::bounds::risk_certificate;
use marginlab_core::classes::ClassifierClass;
use marginlab_core::domain::{excess_loss, l1_distance, margin_and_level, FiniteDomain, JointDistribution};
use marginlab_core::erm::{draw_sample, empirical_risk, erm, Sample};
use marginlab_core::lowerlab::{
    brute_force_divergences, closed_form_divergences, family_member, greedy_packing,
    MarginFamilySpec,
};

#[test]
fn zero_error_full_coverage_is_exact_exhaustively() {
    // h = 1, s* in the class: whenever every domain point is observed the
    // ERM excess risk is exactly zero. Checked over every X-sequence of
    // length 5 on a 3-point domain.
    let m = 3usize;
    let p = JointDistribution::new(FiniteDomain::uniform(m).unwrap(), vec![1.0, 0.0, 1.0])
        .unwrap();
    let class = ClassifierClass::powerset(m).unwrap();
    let n = 5usize;
    let mut covered_sequences = 0;
    for code in 0..(m as u32).pow(n as u32) {
        let mut digits = code;
        let mut draws = Vec::with_capacity(n);
        let mut seen = [false; 3];
        for _ in 0..n {
            let x = (digits % m as u32) as usize;
            digits /= m as u32;
            seen[x] = true;
            draws.push((x as u32, p.bayes().label(x)));
        }
        if !seen.iter().all(|&s| s) {
            continue;
        }
        covered_sequences += 1;
        let sample = Sample::from_draws(draws, 0, 0).unwrap();
        let fitted = erm(&class, &sample, 0.0).unwrap();
        assert_eq!(excess_loss(&p, &fitted).unwrap(), 0.0);
    }
    assert!(covered_sequences > 0);
}

#[test]
fn erm_is_optimal_over_every_member() {
    let class = ClassifierClass::sparse(10, 3).unwrap();
    let eta: Vec<f64> = (0..10).map(|i| 0.1 + 0.08 * i as f64).collect();
    let p = JointDistribution::new(FiniteDomain::uniform(10).unwrap(), eta).unwrap();
    for rep in 0..10 {
        let sample = draw_sample(&p, 60, 33, rep).unwrap();
        let fitted = erm(&class, &sample, 0.0).unwrap();
        let fitted_risk = empirical_risk(&fitted, &sample).unwrap();
        for i in 0..class.len() {
            assert!(fitted_risk <= empirical_risk(&class.member(i), &sample).unwrap() + 1e-15);
        }
    }
}

#[test]
fn family_members_expose_their_margin_and_index() {
    for (v, h, n) in [(3u32, 0.4f64, 100u64), (5, 0.9, 50), (4, 0.05, 2000)] {
        let spec = MarginFamilySpec::assouad_default_p(v, h, n).unwrap();
        let bits: Vec<bool> = (0..v as usize - 1).map(|i| i % 2 == 1).collect();
        let member = family_member(&spec, &bits).unwrap();
        let (margin, level) = margin_and_level(&member);
        assert!((margin - spec.h()).abs() < 1e-15);
        assert!(level <= 0.5);
        for (i, &b) in bits.iter().enumerate() {
            assert_eq!(member.bayes().label(i), b, "index recovery at margin {}", spec.h());
        }
        // The residual atom carries deterministic label 0.
        assert!(!member.bayes().label(v as usize - 1));
    }
}

#[test]
fn hellinger_never_exceeds_kl_on_family_pairs() {
    for h in [0.1, 0.35, 0.6, 0.85, 0.99] {
        let spec = MarginFamilySpec::sparse(8, 2, h).unwrap();
        let b1 = [true, true, false, false, false, false, false, false];
        let b2 = [false, false, false, false, false, false, true, true];
        let (hell, kl) = closed_form_divergences(&spec, &b1, &b2).unwrap();
        assert!(hell <= kl + 1e-15, "h={h}: {hell} > {kl}");
        let p = family_member(&spec, &b1).unwrap();
        let q = family_member(&spec, &b2).unwrap();
        let (bh, bk) = brute_force_divergences(&p, &q).unwrap();
        assert!((hell - bh).abs() <= 1e-12 && (kl - bk).abs() <= 1e-12);
    }
}

#[test]
fn certificate_envelopes_are_ordered_on_a_grid() {
    for v in [2u32, 3, 4] {
        let class = ClassifierClass::powerset(v as usize).unwrap();
        for h in [0.0, 0.2, 0.5, 1.0] {
            for n in [50u64, 500, 5000] {
                let spec = MarginFamilySpec::assouad_default_p(v, h, n).unwrap();
                let bits: Vec<bool> = (0..v as usize - 1).map(|i| i % 2 == 0).collect();
                let member = family_member(&spec, &bits).unwrap();
                let cert = risk_certificate(&member, &class, n).unwrap();
                if let (Some(lower), Some(upper)) = (cert.lower_envelope, cert.upper_envelope)
                {
                    assert!(
                        lower <= upper,
                        "inverted envelope at (V={v}, h={h}, n={n}): {lower} > {upper}"
                    );
                }
            }
        }
    }
}

#[test]
fn packing_text_export_is_self_describing() {
    let code = greedy_packing(12, 3).unwrap();
    let text = code.to_text();
    let mut lines = text.lines();
    let header: Vec<usize> =
        lines.next().unwrap().split(' ').map(|t| t.parse().unwrap()).collect();
    assert_eq!(header, vec![12, 3, code.codewords.len()]);
    let mut parsed = Vec::new();
    for line in lines {
        assert_eq!(line.len(), 12);
        assert_eq!(line.chars().filter(|&c| c == '1').count(), 3);
        let mut bits = 0u64;
        for (i, ch) in line.chars().enumerate() {
            if ch == '1' {
                bits |= 1 << (11 - i);
            }
        }
        parsed.push(bits);
    }
    assert_eq!(parsed, code.codewords);
    // Distances re-derived from the text reproduce the certificate.
    let mut min = u32::MAX;
    for i in 0..parsed.len() {
        for j in (i + 1)..parsed.len() {
            min = min.min((parsed[i] ^ parsed[j]).count_ones());
        }
    }
    assert_eq!(min, code.min_distance);
    assert!(2 * min > 3);
}

#[test]
fn margin_inequality_links_excess_loss_to_l1() {
    // Every family member obeys loss >= h * distance with theta = 1,
    // with equality on the hypercube coordinates.
    let spec = MarginFamilySpec::assouad(5, 0.6, 0.2).unwrap();
    let bits = [true, false, false, true];
    let member = family_member(&spec, &bits).unwrap();
    let class = ClassifierClass::powerset(5).unwrap();
    for i in 0..class.len() {
        let t = class.member(i);
        let loss = excess_loss(&member, &t).unwrap();
        let dist = l1_distance(member.domain(), &t, member.bayes()).unwrap();
        assert!(loss + 1e-15 >= member.margin_h() * dist);
        assert!(loss <= dist + 1e-15);
    }
}
