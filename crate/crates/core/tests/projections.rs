use std::f64::consts::{PI, TAU};

use nctorus::ncrep::{clock_shift, clock_shift_tuple, op_norm, perturb, spectral_projection, Operator, C64};
use nctorus::projections::{
    bott_element, bott_f1, bott_g1, bott_h1, e_i, r_i, r_theta, rieffel_element, rieffel_table, CoefficientTable,
    RieffelFunctions, Truncation, TRUNCATION_BUDGET,
};
use nctorus::skewmat::IndexSet;
use nctorus::Error;

fn pair() -> IndexSet {
    IndexSet::pair(1, 2).unwrap()
}

/// f̂(k) of the trapezoid from its slope jumps: (2πik)²f̂(k) = Σ Δ_j e^{−2πikt_j}.
fn trapezoid_coefficient(theta: f64, eps: f64, k: i64) -> C64 {
    if k == 0 {
        return C64::new(theta, 0.0);
    }
    let jumps = [(0.0, 1.0 / eps), (eps, -1.0 / eps), (theta, -1.0 / eps), (theta + eps, 1.0 / eps)];
    let s: C64 = jumps.iter().map(|&(t, d)| C64::from_polar(d, -TAU * k as f64 * t)).sum();
    -s / (4.0 * PI * PI * (k * k) as f64)
}

fn resynthesize(table: &CoefficientTable, second: i64, t: f64) -> f64 {
    table
        .entries
        .iter()
        .filter(|(k, _)| k[1] == second)
        .map(|(k, a)| (a * C64::from_polar(1.0, TAU * k[0] as f64 * t)).re)
        .sum()
}

#[test]
fn bott_function_values() {
    assert_eq!(bott_f1(0.0), 1.0);
    assert_eq!(bott_f1(0.5), 0.0);
    assert_eq!(bott_g1(0.75), 0.0);
    let x = bott_g1(0.25).powi(2) + bott_h1(0.25).powi(2);
    assert!((x - (bott_f1(0.25) - bott_f1(0.25).powi(2))).abs() < 1e-15);
    assert!((x - 0.25).abs() < 1e-15);
}

#[test]
fn bott_element_on_commuting_pairs() {
    let one = Operator::identity(1);
    let r = spectral_projection(&bott_element(&one, &one).unwrap(), 0.5).unwrap();
    assert!(r.source_idem_err <= 1e-12);
    assert_eq!(r.rank, 1);
    let (u, _) = clock_shift(1, 8);
    let v = u.pow_unitary(3);
    let r = spectral_projection(&bott_element(&u, &v).unwrap(), 0.5).unwrap();
    assert!(r.source_idem_err <= 1e-10);
    let class = r_theta(&u, &v, 0.0, None).unwrap();
    assert!(class.class_trace.abs() < 1e-12);
}

#[test]
fn bott_element_gap_under_perturbation() {
    let (u, _) = clock_shift(1, 16);
    let v = u.pow_unitary(5);
    let base = nctorus::ncrep::UnitaryTuple { gens: vec![u, v], ..clock_shift_tuple(0, 16) };
    let t = perturb(&base, 0.05, 9).unwrap();
    let r = spectral_projection(&bott_element(t.u(1), t.u(2)).unwrap(), 0.5).unwrap();
    assert!(r.source_idem_err < 0.25);
    assert!(r.gap > 0.0);
}

#[test]
fn rieffel_function_values_and_integral() {
    let r = RieffelFunctions::new(0.375, 0.125).unwrap();
    assert_eq!(r.f(0.375 / 2.0), 1.0);
    assert_eq!(r.g(0.2), 0.0);
    assert_eq!(r.g(0.6), 0.0);
    // Trapezoid rule is exact for a piecewise-linear function with grid breakpoints.
    let m = 1 << 12;
    let integral: f64 = (0..m).map(|i| r.f(i as f64 / m as f64)).sum::<f64>() / m as f64;
    assert!((integral - 0.375).abs() < 1e-12);
    assert!(matches!(RieffelFunctions::new(0.5, 0.6), Err(Error::BadEpsilon { .. })));
}

#[test]
fn rieffel_identities_on_a_parameter_lattice() {
    for th in [0.1, 0.25, 0.375, 0.5, 0.7, 0.9] {
        for frac in [0.1, 0.5, 1.0] {
            let eps = (th as f64).min(1.0 - th) * frac;
            let r = RieffelFunctions::new(th, eps).unwrap();
            let res = r.identity_residuals(20_000);
            assert!(res.iter().all(|&x| x <= 1e-12), "θ={th} ε={eps}: {res:?}");
        }
    }
}

#[test]
fn exact_projections_on_clock_shift() {
    for (p, q, eps) in [(3, 8, 0.125), (2, 5, 0.2)] {
        let th = p as f64 / q as f64;
        let t = clock_shift_tuple(p, q);
        let funcs = RieffelFunctions::new(th, eps).unwrap();
        let r = spectral_projection(&rieffel_element(t.u(1), t.u(2), &funcs).unwrap(), 0.5).unwrap();
        assert!(r.idem_err < 1e-10 && r.source_idem_err < 1e-10);
        assert!((r.trace - th).abs() < 1e-10);
    }
}

#[test]
fn perturbed_pair_keeps_gap_and_trace() {
    let t = perturb(&clock_shift_tuple(3, 8), 0.01, 5).unwrap();
    let r = r_theta(t.u(1), t.u(2), 0.375, None).unwrap();
    assert!(r.report.source_idem_err < 0.25);
    assert!((r.class_trace - 0.375).abs() < 1e-6);
}

#[test]
fn fixed_table_matches_closed_form_coefficients() {
    let (th, eps) = (0.375, 0.125);
    let funcs = RieffelFunctions::new(th, eps).unwrap();
    let table = rieffel_table(pair(), &funcs, Truncation::Fixed(64)).unwrap();
    for k in -64..=64 {
        let got = table.entries[&vec![k, 0]];
        assert!((got - trapezoid_coefficient(th, eps, k)).norm() < 1e-6, "k = {k}");
    }
    assert!(table.tail_max.unwrap() < 1e-3);
    assert!(table.adjoint_asymmetry() < 1e-15);
}

#[test]
fn adaptive_table_meets_the_budget_on_resynthesis() {
    let funcs = RieffelFunctions::new(0.375, 0.375).unwrap();
    let table = rieffel_table(pair(), &funcs, Truncation::Adaptive { max: 63 }).unwrap();
    assert!(table.reconstruction_error.unwrap() < TRUNCATION_BUDGET);
    let m = 4096;
    let (mut ef, mut eg) = (0.0f64, 0.0f64);
    for i in 0..m {
        let t = i as f64 / m as f64;
        ef = ef.max((resynthesize(&table, 0, t) - funcs.f(t)).abs());
        eg = eg.max((resynthesize(&table, -1, t) - funcs.g(t)).abs());
    }
    assert!(ef + 2.0 * eg < TRUNCATION_BUDGET, "{ef} + 2·{eg}");
}

#[test]
fn truncated_element_is_close_to_the_exact_one() {
    let funcs = RieffelFunctions::new(0.375, 0.375).unwrap();
    let table = rieffel_table(pair(), &funcs, Truncation::Adaptive { max: 63 }).unwrap();
    let t = clock_shift_tuple(24, 64);
    let exact = rieffel_element(t.u(1), t.u(2), &funcs).unwrap();
    let approx = e_i(&t, &pair(), &table).unwrap();
    assert!(op_norm(&approx.sub(&exact)).unwrap() < TRUNCATION_BUDGET);
    let small = clock_shift_tuple(3, 8);
    assert!(matches!(e_i(&small, &pair(), &table), Err(Error::DegreeExceedsQ { .. })));
}

#[test]
fn grid_table_reproduces_the_exact_element() {
    let funcs = RieffelFunctions::new(0.375, 0.125).unwrap();
    let t = clock_shift_tuple(3, 8);
    let table = rieffel_table(pair(), &funcs, Truncation::Grid(8)).unwrap();
    let exact = rieffel_element(t.u(1), t.u(2), &funcs).unwrap();
    assert!(op_norm(&e_i(&t, &pair(), &table).unwrap().sub(&exact)).unwrap() < 1e-12);
    let r = r_i(&t, &pair(), &table).unwrap();
    assert!((r.trace - 0.375).abs() < 2e-2);
}

#[test]
fn zero_table_gives_zero() {
    let funcs = RieffelFunctions::new(0.375, 0.125).unwrap();
    let mut table = rieffel_table(pair(), &funcs, Truncation::Grid(8)).unwrap();
    table.entries.values_mut().for_each(|a| *a = C64::default());
    let t = clock_shift_tuple(3, 8);
    assert_eq!(op_norm(&e_i(&t, &pair(), &table).unwrap()).unwrap(), 0.0);
    assert!(matches!(e_i(&t, &IndexSet::leading(2).unwrap(), &table), Ok(_)));
    let other = IndexSet::pair(1, 3).unwrap();
    assert!(matches!(e_i(&t, &other, &table), Err(Error::TableMismatch { .. })));
}

#[test]
fn perturbed_truncated_element_keeps_gap_and_class() {
    let funcs = RieffelFunctions::new(0.375, 0.125).unwrap();
    let table = rieffel_table(pair(), &funcs, Truncation::Grid(16)).unwrap();
    let exact = clock_shift_tuple(6, 16);
    let base = r_i(&exact, &pair(), &table).unwrap();
    for seed in 0..5 {
        let t = perturb(&exact, 0.01, seed).unwrap();
        let r = r_i(&t, &pair(), &table).unwrap();
        assert!(r.source_idem_err < 0.25);
        assert_eq!(r.rank, base.rank);
    }
}

#[test]
fn table_json_round_trip() {
    let funcs = RieffelFunctions::new(0.375, 0.125).unwrap();
    let table = rieffel_table(pair(), &funcs, Truncation::Fixed(64)).unwrap();
    let v = table.to_json();
    assert!(v["I"].is_array() && v["N"] == 64 && v["entries"].is_array());
    let back = CoefficientTable::from_json(&v).unwrap();
    assert_eq!(back.entries, table.entries);
    assert_eq!(back.n_trunc, 64);
    assert!(matches!(
        rieffel_table(pair(), &funcs, Truncation::Fixed(16)),
        Err(Error::TruncationInsufficient { .. })
    ));
}
