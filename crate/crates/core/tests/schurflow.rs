mod common;

use std::collections::BTreeMap;

use common::*;
use nctorus::schurflow::{
    check_conditions, check_strong, flow, flow_entry_formula, lattice_decompose, lattice_decompose_in, schur_f,
    trace_target, CheckOptions, CorrectionRange, Generator, StrongVariant,
};
use nctorus::skewmat::{pfaffian, pfaffian_minor, IndexSet, SkewMatrix};
use nctorus::superinc::{build_theta, SuperIncreasingSeq, DEMO_ALPHA};
use nctorus::Error;
use num_rational::BigRational;

fn opts() -> CheckOptions {
    CheckOptions::default()
}

#[test]
fn schur_entry_of_four_by_four() {
    let m = skew_q(4, &[3, 1, 1, 2, 2, 1], 8);
    let f = schur_f(&m).unwrap();
    let expected = pfaffian(&m).unwrap() / m.theta(1, 2);
    assert_eq!(*f.theta(1, 2), expected);
}

#[test]
fn block_diagonal_keeps_lower_block() {
    let m = skew_q(4, &[2, 0, 0, 0, 0, 5], 7);
    assert_eq!(schur_f(&m).unwrap(), skew_q(2, &[5], 7));
}

#[test]
fn six_by_six_matches_dense_schur_oracle() {
    let mut r = rng(21);
    let mut ups = random_ints(&mut r, 15, -9, 9);
    ups[0] = 3;
    let m = skew_q(6, &ups, 6);
    assert_eq!(*m.theta(1, 2), q(1, 2));
    let f = schur_f(&m).unwrap();
    let oracle = schur_oracle(&dense(&m));
    for j in 0..4 {
        for k in 0..4 {
            assert_eq!(*f.get(j, k), oracle[j][k]);
        }
    }
}

#[test]
fn flow_iterates_and_pfaffian_ratio() {
    let m = skew_q(4, &[3, 1, 1, 2, 2, 1], 8);
    let f = flow(&m, 1).unwrap();
    assert_eq!(f.iterates.len(), 2);
    assert_eq!(pfaffian(f.last()).unwrap(), pfaffian(&m).unwrap() / m.theta(1, 2));
    let two = skew_q(2, &[3], 7);
    let f0 = flow(&two, 0).unwrap();
    assert_eq!(f0.iterates, vec![two]);
}

#[test]
fn two_steps_on_six_by_six() {
    let mut r = rng(8);
    let m = loop {
        let c = random_skew_q(&mut r, 6);
        if !pfaffian_minor(&c, &IndexSet::leading(4).unwrap()).unwrap().eq(&q(0, 1))
            && *c.theta(1, 2) != q(0, 1)
        {
            break c;
        }
    };
    let twice = schur_f(&schur_f(&m).unwrap()).unwrap();
    let ratio = pfaffian(&m).unwrap() / pfaffian_minor(&m, &IndexSet::leading(4).unwrap()).unwrap();
    assert_eq!(*twice.theta(1, 2), ratio);
    let f = flow(&m, 2).unwrap();
    assert_eq!(*f.last(), twice);
    for j in 1..=2 {
        for k in j + 1..=2 {
            assert_eq!(flow_entry_formula(&m, 2, j, k).unwrap(), *f.last().theta(j, k));
        }
    }
}

#[test]
fn entry_formula_base_cases() {
    let m = skew_q(4, &[3, 1, 1, 2, 2, 1], 8);
    assert_eq!(flow_entry_formula(&m, 0, 2, 4).unwrap(), *m.theta(2, 4));
    assert_eq!(flow_entry_formula(&m, 1, 1, 2).unwrap(), pfaffian(&m).unwrap() / m.theta(1, 2));
}

#[test]
fn singular_leading_block_is_reported() {
    let m = skew_q(4, &[0, 1, 1, 2, 2, 1], 8);
    assert!(matches!(schur_f(&m), Err(Error::SingularBlock(_))));
}

#[test]
fn superincreasing_six_passes_the_conditions() {
    let theta = build_theta(&SuperIncreasingSeq::pow2_for(6), 6).unwrap();
    let rep = check_conditions(&theta, &opts()).unwrap();
    assert!(rep.verdict);
    let g = DEMO_ALPHA;
    let expected = g.powi(11) * (g.powi(21) - g.powi(6) + 1.0);
    let one_step = rep.checks.iter().find(|c| c.j == 1).unwrap();
    assert!((one_step.value - expected).abs() < 1e-14);
    assert!(check_strong(&theta, StrongVariant::Strong, &opts()).unwrap().verdict);
    assert!(check_strong(&theta, StrongVariant::AllMinors, &opts()).unwrap().verdict);
}

#[test]
fn superincreasing_six_at_one_half() {
    let theta = build_theta(&SuperIncreasingSeq::pow2_for(6), 6).unwrap();
    let rep = check_conditions(&theta, &CheckOptions { tol: 1e-9, alpha: 0.5 }).unwrap();
    let g: f64 = 0.5;
    let expected = g.powi(11) * (g.powi(21) - g.powi(6) + 1.0);
    assert!(rep.verdict);
    assert!((rep.checks[1].value - expected).abs() < 1e-15);
}

#[test]
fn integer_entry_fails() {
    let rep = check_conditions(&skew_q(2, &[3], 1), &opts()).unwrap();
    assert!(!rep.verdict);
}

#[test]
fn integer_final_ratio_fails_with_zero_distance() {
    // pf = 0.6 with θ₁₂ = 0.3: θ₃₄ = (0.6 + θ₁₃θ₂₄ − θ₁₄θ₂₃)/θ₁₂.
    let (t13, t14, t23, t24) = (0.1, 0.2, 0.15, 0.25);
    let t34 = (0.6 + t13 * t24 - t14 * t23) / 0.3;
    let m = skew_f(4, &[0.3, t13, t14, t23, t24, t34]);
    let rep = check_conditions(&m, &opts()).unwrap();
    assert!(!rep.verdict);
    let last = rep.checks.last().unwrap();
    assert!(!last.pass);
    assert!(last.distance_to_integer < 1e-12);
    // Exact version: θ₃₄ chosen so that pf = 6/10 with θ₁₂ = 3/10.
    let base = skew_q(4, &[3, 1, 2, 1, 2, 0], 10);
    let t34 = (q(6, 10) - pfaffian(&base).unwrap()) / q(3, 10);
    let mut ups = vec![q(3, 10), q(1, 10), q(2, 10), q(1, 10), q(2, 10), t34].into_iter();
    let exact: SkewMatrix<BigRational> = SkewMatrix::from_upper(4, |_, _| ups.next().unwrap());
    let rep = check_conditions(&exact, &opts()).unwrap();
    assert!(rep.checks.last().unwrap().exact && !rep.verdict);
    assert_eq!(rep.checks.last().unwrap().distance_to_integer, 0.0);
}

#[test]
fn odd_sizes_are_vacuous_for_strong_and_cover_minors() {
    let three = skew_q(3, &[1, 1, 1], 3);
    assert!(check_strong(&three, StrongVariant::Strong, &opts()).unwrap().verdict);
    assert!(check_strong(&three, StrongVariant::Strong, &opts()).unwrap().reports.is_empty());
    let five = random_skew_q(&mut rng(4), 5).to_f64();
    let rep = check_strong(&five, StrongVariant::AllMinors, &opts()).unwrap();
    assert_eq!(rep.reports.len(), 15);
    assert!(matches!(check_conditions(&five, &opts()), Err(Error::OddDimension(5))));
}

#[test]
fn leading_entry_outside_unit_interval_fails_at_step_zero() {
    let m = skew_f(4, &[1.7, 0.1, 0.2, 0.3, 0.4, 0.5]);
    let rep = check_strong(&m, StrongVariant::Strong, &opts()).unwrap();
    let full = rep.reports.iter().find(|r| r.target == IndexSet::leading(4).unwrap()).unwrap();
    let c = &full.checks[0];
    assert_eq!(c.j, 0);
    assert!(!c.pass);
}

#[test]
fn trace_targets() {
    let m = skew_q(4, &[3, 1, 1, 2, 2, 1], 8);
    let pair = IndexSet::pair(2, 4).unwrap();
    let t = trace_target(&m, &pair, &BTreeMap::new(), 0, CorrectionRange::default()).unwrap();
    assert_eq!(t.total, q(2, 8));
    let full = IndexSet::leading(4).unwrap();
    let coeffs = BTreeMap::from([(IndexSet::pair(1, 2).unwrap(), 3)]);
    let t = trace_target(&m, &full, &coeffs, 0, CorrectionRange::LeadingSegments).unwrap();
    assert_eq!(t.total, pfaffian(&m).unwrap() + q(3, 1) * m.theta(1, 2));
    let none = trace_target(&m, &full, &BTreeMap::new(), 0, CorrectionRange::AllSubsets).unwrap();
    assert_eq!(none.total, pfaffian(&m).unwrap());
    let bad = BTreeMap::from([(IndexSet::pair(3, 4).unwrap(), 1)]);
    assert!(trace_target(&m, &full, &bad, 0, CorrectionRange::LeadingSegments).is_err());
}

fn surrogate() -> SkewMatrix<f64> {
    let r = |x: f64| x.sqrt().fract();
    skew_f(4, &[r(2.0), r(3.0) / 2.0, r(5.0) / 3.0, r(7.0) / 2.0, r(11.0) / 4.0, r(13.0)])
}

#[test]
fn lattice_round_trip() {
    let m = surrogate();
    let full = IndexSet::leading(4).unwrap();
    let x = pfaffian(&m).unwrap() + 2.0 * m.theta(1, 2);
    let d = lattice_decompose(x, &m, 5, 1e-9).unwrap();
    assert_eq!(d.k0, 0);
    assert_eq!(d.coeff("pf(1,2)"), 2);
    assert_eq!(d.coeff(&format!("pf{full}")), 1);
    assert_eq!(d.coeffs.iter().filter(|c| c.1 != 0).count(), 2);
    let one = lattice_decompose(1.0, &m, 5, 1e-9).unwrap();
    assert_eq!(one.k0, 1);
    assert!(one.coeffs.iter().all(|c| c.1 == 0));
}

#[test]
fn non_member_is_not_found() {
    let m = surrogate();
    let x = m.theta(1, 2) / 3.0;
    assert!(matches!(lattice_decompose(x, &m, 5, 1e-9), Err(Error::NotFound { .. })));
    // Exhaustive check at the same bound over the restricted basis {1, θ₁₂}.
    let gens = [Generator::new("a", *m.theta(1, 2))];
    let hit = (-5..=5).any(|k0| (-5..=5).any(|k| ((k0 as f64) + k as f64 * m.theta(1, 2) - x).abs() < 1e-9));
    assert!(!hit);
    assert!(lattice_decompose_in(x, &gens, 5, 1e-9).is_err());
}
