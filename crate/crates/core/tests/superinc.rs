use std::collections::BTreeSet;

use nctorus::schurflow::{check_conditions, CheckOptions};
use nctorus::skewmat::{enumerate_index_sets, minor, pfaffian};
use nctorus::superinc::{
    build_theta, double_factorial, independence_certificate, monotone_chain_check, pfaffian_expansion, theta_from_exponents,
    validate_u64, AlphaPoly, LogValue, SuperIncreasingSeq,
};
use nctorus::Error;
use num_bigint::BigUint;

fn seq(terms: &[u64]) -> SuperIncreasingSeq {
    validate_u64(terms).unwrap()
}

fn exps(p: &AlphaPoly) -> Vec<u64> {
    p.terms().map(|(e, _)| e.to_string().parse().unwrap()).collect()
}

#[test]
fn validation() {
    assert!(validate_u64(&[1, 2, 4, 8, 16, 32]).is_ok());
    assert!(matches!(validate_u64(&[1, 2, 3]), Err(Error::NotSuperIncreasing { .. })));
    assert!(matches!(validate_u64(&[1, 3, 5, 9]), Err(Error::NotSuperIncreasing { .. })));
    assert!(validate_u64(&[1, 3, 5, 10]).is_ok());
}

#[test]
fn small_theta_layouts() {
    let s = seq(&[1, 2, 4, 8, 16, 32]);
    let t3 = build_theta(&s, 3).unwrap();
    assert_eq!(exps(t3.theta(1, 2)), vec![1]);
    assert_eq!(exps(t3.theta(1, 3)), vec![2]);
    assert_eq!(exps(t3.theta(2, 3)), vec![4]);
    let t4 = build_theta(&s, 4).unwrap();
    assert_eq!((1..=3).map(|j| exps(t4.theta(j, 4))[0]).collect::<Vec<_>>(), vec![8, 16, 32]);
}

#[test]
fn six_by_six_is_the_dyadic_gamma_matrix() {
    let t = build_theta(&SuperIncreasingSeq::pow2_for(6), 6).unwrap();
    let mut all = BTreeSet::new();
    for k in 2..=6 {
        for j in 1..k {
            let e = exps(t.theta(j, k));
            assert_eq!(e.len(), 1);
            all.insert(e[0]);
        }
    }
    let dyadic: BTreeSet<u64> = (0..15).map(|i| 1u64 << i).collect();
    assert_eq!(all, dyadic);
    assert_eq!(exps(t.theta(5, 6)), vec![16384]);
}

#[test]
fn expansions() {
    let s = seq(&[1, 2, 4, 8, 16, 32]);
    let e2 = pfaffian_expansion(&build_theta(&s, 2).unwrap()).unwrap();
    assert_eq!(e2.terms.len(), 1);
    assert_eq!((e2.terms[0].sign, e2.terms[0].exponent.clone()), (1, BigUint::from(1u32)));
    let e4 = pfaffian_expansion(&build_theta(&s, 4).unwrap()).unwrap();
    let got: Vec<(i8, u64)> = e4.terms.iter().map(|t| (t.sign, t.exponent.to_string().parse().unwrap())).collect();
    assert_eq!(got, vec![(1, 1 + 32), (-1, 2 + 16), (1, 4 + 8)]);
    let e6 = pfaffian_expansion(&build_theta(&SuperIncreasingSeq::pow2_for(6), 6).unwrap()).unwrap();
    assert_eq!(e6.terms.len() as u64, double_factorial(5));
    assert!(e6.terms.windows(2).all(|w| w[0].exponent > w[1].exponent && w[0].sign == -w[1].sign));
    assert!(e6.is_clean());
}

#[test]
fn expansion_agrees_with_pfaffian() {
    for n in [2, 4, 6, 8] {
        let t = build_theta(&SuperIncreasingSeq::pow2_for(n), n).unwrap();
        assert_eq!(pfaffian_expansion(&t).unwrap().to_poly(), pfaffian(&t).unwrap(), "n = {n}");
    }
}

#[test]
fn evaluations() {
    let t2 = build_theta(&seq(&[1]), 2).unwrap();
    assert_eq!(pfaffian(&t2).unwrap().eval_f64(0.5), 0.5);
    let t6 = build_theta(&SuperIncreasingSeq::pow2_for(6), 6).unwrap();
    let g: f64 = 0.437;
    let ratio = check_conditions(&t6, &CheckOptions::default()).unwrap().checks[1].value;
    assert!((ratio - g.powi(11) * (g.powi(21) - g.powi(6) + 1.0)).abs() < 1e-14);
    // pf(Θ(6)) is below 1e-300 at this α, so the chain is compared in log form.
    let chain: Vec<LogValue> = [2, 4, 6]
        .iter()
        .map(|&n| pfaffian(&build_theta(&SuperIncreasingSeq::pow2_for(n), n).unwrap()).unwrap().eval_log(g))
        .collect();
    assert!(chain.iter().all(|v| v.is_positive()));
    assert!(chain[2].lt(chain[1]) && chain[1].lt(chain[0]) && chain[0].lt(LogValue { sign: 1, ln_abs: 0.0 }));
}

#[test]
fn chain_checks() {
    assert!(monotone_chain_check(&SuperIncreasingSeq::pow2_for(8), 8, 0.437).unwrap().pass);
    let degenerate = monotone_chain_check(&SuperIncreasingSeq::pow2_for(8), 8, 0.0).unwrap();
    assert!(!degenerate.pass && !degenerate.failures.is_empty());
    assert!(monotone_chain_check(&seq(&[1, 2, 4, 8, 16, 32]), 4, 0.99).unwrap().pass);
}

#[test]
fn certificates() {
    let c = independence_certificate(SuperIncreasingSeq::pow2_for(4).terms(), 4).unwrap();
    assert_eq!(c.table.len(), enumerate_index_sets(4).len());
    assert!(independence_certificate(seq(&[1, 2, 4]).terms(), 3).is_ok());
}

#[test]
fn adversarial_sequence_matches_exhaustive_comparison() {
    // Breaks strict super-increase at the last term, so it bypasses validation.
    let raw: Vec<BigUint> = [1u32, 2, 4, 8, 16, 31].iter().map(|&x| BigUint::from(x)).collect();
    assert!(validate_u64(&[1, 2, 4, 8, 16, 31]).is_err());
    let theta = theta_from_exponents(&raw, 4).unwrap();
    // Oracle: collect every monomial exponent of every minor, plus 0 for the
    // constant, and look for repeats.
    let mut seen = BTreeSet::from([0u64]);
    let mut collision = false;
    for i in enumerate_index_sets(4) {
        for e in exps(&pfaffian(&minor(&theta, &i).unwrap()).unwrap()) {
            collision |= !seen.insert(e);
        }
    }
    let got = independence_certificate(&raw, 4);
    assert_eq!(got.is_err(), collision);
    if collision {
        assert!(matches!(got, Err(Error::CollisionFound { .. })));
    }
}

#[test]
fn minors_are_theta_shaped() {
    let s = SuperIncreasingSeq::pow2_for(6);
    let theta = build_theta(&s, 6).unwrap();
    for i in enumerate_index_sets(6).into_iter().filter(|i| i.len() == 4) {
        let m = minor(&theta, &i).unwrap();
        let sub: Vec<u64> = (2..=4).flat_map(|k| (1..k).map(move |j| (j, k))).map(|(j, k)| exps(m.theta(j, k))[0]).collect();
        let mut prefix = 0;
        for &x in &sub {
            assert!(x > prefix, "minor {i} breaks super-increase");
            prefix += x;
        }
        let sub: Vec<BigUint> = sub.into_iter().map(BigUint::from).collect();
        assert_eq!(theta_from_exponents(&sub, 4).unwrap(), m);
    }
}
