mod common;

use std::f64::consts::TAU;

use common::*;
use nctorus::ncrep::{
    build_rep, clock_shift, clock_shift_tuple, cis, exp_skew, log_branch, normalized_trace, on_circle, op_norm,
    perturb, spectral_projection, unitary_calculus, Operator, Sparse, C64, DEFAULT_DIM_CAP,
};
use nctorus::projections::{rieffel_element, RieffelFunctions};
use nctorus::Error;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn diff(a: &Operator, b: &Operator) -> f64 {
    op_norm(&a.sub(b)).unwrap()
}

/// ‖u_k u_j − e^{2πiθ_jk} u_j u_k‖ from dense products.
fn relation(uj: &Operator, uk: &Operator, theta: f64) -> f64 {
    let lhs = uk.to_dense();
    let lhs = lhs * uj.to_dense();
    let rhs = uj.to_dense() * uk.to_dense();
    let w = cis(theta);
    let d = faer::Mat::from_fn(lhs.nrows(), lhs.ncols(), |i, j| lhs[(i, j)] - w * rhs[(i, j)]);
    let d = Operator::Dense(d);
    op_norm(&d).unwrap()
}

#[test]
fn clock_shift_relation_by_direct_multiplication() {
    let (u, v) = clock_shift(3, 8);
    assert!(relation(&u, &v, 3.0 / 8.0) < 1e-12);
    assert_eq!(u.nrows(), 8);
}

#[test]
fn trivial_one_dimensional_rep() {
    let t = build_rep(&skew_q(2, &[0], 1), 1, DEFAULT_DIM_CAP).unwrap();
    assert_eq!(t.dim(), 1);
    assert!((t.u(1).normalized_trace() - c(1.0)).norm() < 1e-15);
    assert!((t.u(2).normalized_trace() - c(1.0)).norm() < 1e-15);
}

#[test]
fn four_generators_at_q5() {
    let theta = skew_q(4, &[2, 1, 1, 1, 1, 1], 5);
    let t = build_rep(&theta, 5, DEFAULT_DIM_CAP).unwrap();
    assert_eq!(t.dim(), 625);
    for j in 1..=4 {
        for k in j + 1..=4 {
            assert!(relation(t.u(j), t.u(k), to_f64(theta.theta(j, k))) < 1e-12, "({j},{k})");
        }
    }
    assert!(t.unitarity_defect().unwrap() < 1e-12);
}

#[test]
fn dimension_cap_is_enforced() {
    let theta = skew_q(4, &[2, 1, 1, 1, 1, 1], 5);
    assert!(matches!(build_rep(&theta, 5, 600), Err(Error::DimCapExceeded { .. })));
}

#[test]
fn normalized_traces() {
    assert!((normalized_trace(&Operator::identity(7)) - c(1.0)).norm() < 1e-15);
    let t = clock_shift_tuple(2, 7);
    assert!(normalized_trace(t.u(2)).norm() < 1e-15);
    let mut p = t.u(1).clone();
    for _ in 0..6 {
        p = p.mul(t.u(1));
    }
    let tr = normalized_trace(&p);
    assert!((tr.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn functional_calculus() {
    let (u, _) = clock_shift(3, 8);
    let one = unitary_calculus(&u, |_| c(1.0)).unwrap();
    assert!(diff(&one, &Operator::identity(8)) < 1e-12);
    let same = unitary_calculus(&u, |z| z).unwrap();
    assert!(diff(&same, &u) < 1e-10);
    let funcs = RieffelFunctions::new(3.0 / 8.0, 1.0 / 8.0).unwrap();
    let f = unitary_calculus(&u, on_circle(|t| funcs.f(t))).unwrap();
    let oracle = Operator::Sparse(Sparse::diagonal(&(0..8).map(|k| c(funcs.f(k as f64 / 8.0))).collect::<Vec<_>>()));
    assert!(diff(&f, &oracle) < 1e-12);
}

#[test]
fn spectral_projection_examples() {
    let d = Operator::Sparse(Sparse::diagonal(&[c(0.0), c(1.0)]));
    let r = spectral_projection(&d, 0.5).unwrap();
    assert!(diff(&r.projection, &d) < 1e-14);
    let half = Operator::Sparse(Sparse::diagonal(&[c(0.0), c(0.5)]));
    assert!(matches!(spectral_projection(&half, 0.5), Err(Error::GapTooSmall(_))));
}

#[test]
fn exact_rieffel_element_is_a_projection_with_quadrature_trace() {
    let t = clock_shift_tuple(3, 8);
    let funcs = RieffelFunctions::new(3.0 / 8.0, 1.0 / 8.0).unwrap();
    let e = rieffel_element(t.u(1), t.u(2), &funcs).unwrap();
    let r = spectral_projection(&e, 0.5).unwrap();
    assert!(r.idem_err < 1e-10 && r.source_idem_err < 1e-10);
    // Shift terms are traceless, so τ(e) is the grid mean of f.
    let mean: f64 = (0..8).map(|k| funcs.f(k as f64 / 8.0)).sum::<f64>() / 8.0;
    assert!((r.trace - mean).abs() < 1e-10);
    assert!((r.trace - 0.375).abs() < 1e-10);
    let again = spectral_projection(&r.projection, 0.5).unwrap();
    assert!(diff(&again.projection, &r.projection) < 1e-12);
}

#[test]
fn logarithm_branch() {
    let theta = 0.3;
    let u = Operator::identity(4).scale(cis(theta));
    let l = log_branch(&u, theta).unwrap();
    assert!(diff(&l, &Operator::identity(4).scale(C64::new(0.0, TAU * theta))) < 1e-12);
    let z = log_branch(&Operator::identity(3), 0.0).unwrap();
    assert!(op_norm(&z).unwrap() < 1e-14);
    let t = perturb(&clock_shift_tuple(6, 16), 1e-2, 3).unwrap();
    let (a, b) = (t.u(1), t.u(2));
    let w = b.mul(a).mul(&b.adjoint()).mul(&a.adjoint());
    let l = log_branch(&w, 6.0 / 16.0).unwrap();
    assert!(diff(&exp_skew(&l).unwrap(), &w) < 1e-9);
}

#[test]
fn perturbations() {
    let t = clock_shift_tuple(3, 8);
    let same = perturb(&t, 0.0, 1).unwrap();
    assert!(diff(same.u(1), t.u(1)) == 0.0 && diff(same.u(2), t.u(2)) == 0.0);
    let p = perturb(&t, 1e-3, 1).unwrap();
    assert!(p.relation_defect().unwrap() <= 2.1e-3);
    let q = perturb(&t, 1e-3, 1).unwrap();
    assert_eq!(p.u(1).to_dense(), q.u(1).to_dense());
    let other = perturb(&t, 1e-3, 2).unwrap();
    assert!(diff(other.u(1), p.u(1)) > 0.0);
}

#[test]
fn tuple_json_round_trip() {
    let t = perturb(&clock_shift_tuple(3, 8), 1e-3, 4).unwrap();
    let back = nctorus::ncrep::UnitaryTuple::from_json(&t.to_json()).unwrap();
    assert!(diff(back.u(1), t.u(1)) < 1e-15 && diff(back.u(2), t.u(2)) < 1e-15);
    assert_eq!(back.seed, Some(4));
}
