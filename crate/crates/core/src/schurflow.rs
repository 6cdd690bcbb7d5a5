//! The Schur-complement flow F(Θ) = Θ₂₂ − Θ₂₁Θ₁₁⁻¹Θ₁₂, its iterates, the
//! projection-existence conditions, trace synthesis and lattice
//! decomposition of trace values.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::scalar::{Field, Ring};
use crate::skewmat::{enumerate_index_sets, leading_pfaffian, pfaffian, pfaffian_minor, IndexSet, SkewMatrix};
use crate::superinc::AlphaPoly;
use crate::{Error, Result};

/// F(Θ) for n ≥ 4; entry (j, k) of the result is
/// θ_{j+2,k+2} + (θ_{j+2,1}θ_{2,k+2} − θ_{j+2,2}θ_{1,k+2})/θ₁₂.
pub fn schur_f<T: Field>(theta: &SkewMatrix<T>) -> Result<SkewMatrix<T>> {
    let n = theta.n();
    if n < 4 {
        return Err(Error::PreconditionViolated(format!("schur_F needs n >= 4, got {n}")));
    }
    let a = theta.get(0, 1);
    if a.is_singular() {
        return Err(Error::SingularBlock("theta_12 vanishes".into()));
    }
    let mut err = None;
    let out = SkewMatrix::from_upper(n - 2, |j, k| {
        let (j, k) = (j + 2, k + 2);
        let cross = theta.get(j, 0).mul(theta.get(1, k)).sub(&theta.get(j, 1).mul(theta.get(0, k)));
        match cross.div(a) {
            Some(c) => theta.get(j, k).add(&c),
            None => {
                err = Some(Error::SingularBlock("theta_12 vanishes".into()));
                T::zero()
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Θ together with F¹(Θ), …, F^m(Θ).
#[derive(Clone, Debug)]
pub struct FlowState<T> {
    pub iterates: Vec<SkewMatrix<T>>,
    /// pf(F^j(Θ)₁₁) = F^j(Θ)₁₂ for j = 0..m−1.
    pub ratios: Vec<T>,
    /// Relative defect of pf(F^j) = pf(F^j₁₁)·pf(F^{j+1}); exact modes give 0.
    pub factorization_defects: Vec<f64>,
}

impl<T: Ring> FlowState<T> {
    pub fn base(&self) -> &SkewMatrix<T> {
        &self.iterates[0]
    }

    pub fn last(&self) -> &SkewMatrix<T> {
        self.iterates.last().unwrap()
    }
}

/// Relative disagreement of two values: 0 when equal, `None` when the mode has
/// no numeric view and the values differ.
fn defect<T: Ring>(a: &T, b: &T) -> Option<f64> {
    if a == b {
        return Some(0.0);
    }
    let (x, y) = (a.as_float()?, b.as_float()?);
    Some((x - y).abs() / x.abs().max(y.abs()).max(1e-300))
}

/// Iterates F m times, checking the pfaffian factorization at every step.
pub fn flow<T: Field>(theta: &SkewMatrix<T>, m: usize) -> Result<FlowState<T>> {
    let n = theta.n();
    if !n.is_multiple_of(2) {
        return Err(Error::OddDimension(n));
    }
    let l = n / 2;
    if m > l.saturating_sub(1) {
        return Err(Error::PreconditionViolated(format!("m = {m} exceeds l - 1 = {}", l.saturating_sub(1))));
    }
    let mut iterates = vec![theta.clone()];
    let mut ratios = Vec::new();
    let mut factorization_defects = Vec::new();
    for s in 1..=m {
        let cur = iterates.last().unwrap();
        let r = cur.get(0, 1).clone();
        if r.is_singular() {
            let lead = IndexSet::leading(2 * s)?;
            return Err(Error::PreconditionViolated(format!("leading pfaffian pf{lead} vanishes")));
        }
        let next = schur_f(cur)?;
        let lhs = pfaffian(cur)?;
        let rhs = r.mul(&pfaffian(&next)?);
        let d = defect(&lhs, &rhs).unwrap_or(f64::INFINITY);
        if d > 1e-10 {
            return Err(Error::PreconditionViolated(format!(
                "factorization pf(F^{}) = pf(F^{}_11) pf(F^{s}) fails with defect {d:e}",
                s - 1,
                s - 1
            )));
        }
        factorization_defects.push(d);
        ratios.push(r);
        iterates.push(next);
    }
    Ok(FlowState { iterates, ratios, factorization_defects })
}

/// F^m(Θ)_{jk} from pfaffian minors alone:
/// pf(1, …, 2m, 2m+j, 2m+k) / pf(1, …, 2m), with 1-based j < k.
pub fn flow_entry_formula<T: Field>(theta: &SkewMatrix<T>, m: usize, j: usize, k: usize) -> Result<T> {
    let n = theta.n();
    let s = 2 * m;
    if !(1 <= j && j < k && s + k <= n) {
        return Err(Error::IndexOutOfRange { index: s + k, n });
    }
    let den = leading_pfaffian(theta, s)?;
    if den.is_singular() {
        return Err(Error::PreconditionViolated(format!("leading pfaffian of order {s} vanishes")));
    }
    let mut idx: Vec<usize> = (1..=s).collect();
    idx.extend([s + j, s + k]);
    let num = pfaffian_minor(theta, &IndexSet::new(idx)?)?;
    num.div(&den).ok_or_else(|| Error::SingularBlock(format!("leading pfaffian of order {s}")))
}

/// A pfaffian ratio num/den viewed as a real number.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RatioValue {
    pub value: f64,
    pub sign: i8,
    pub ln_abs: f64,
    /// Decided membership in (0, 1) when the mode permits an exact answer.
    pub exact_in_unit: Option<bool>,
    /// Decided integrality when the mode permits an exact answer.
    pub exact_integer: Option<bool>,
    pub distance_to_integer: f64,
}

impl RatioValue {
    fn from_float(value: f64) -> Self {
        Self {
            value,
            sign: value.signum() as i8 * (value != 0.0) as i8,
            ln_abs: value.abs().ln(),
            exact_in_unit: None,
            exact_integer: None,
            distance_to_integer: (value - value.round()).abs(),
        }
    }
}

/// Arithmetic modes whose pfaffian ratios can be classified.
pub trait RatioProbe: Ring {
    /// `alpha` is the evaluation point for α-mode values; other modes ignore it.
    fn ratio(num: &Self, den: &Self, alpha: f64) -> Result<RatioValue>;
}

impl RatioProbe for f64 {
    fn ratio(num: &Self, den: &Self, _alpha: f64) -> Result<RatioValue> {
        if den.is_singular() {
            return Err(Error::SingularBlock(format!("denominator {den:e}")));
        }
        Ok(RatioValue::from_float(num / den))
    }
}

fn ln_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.abs().to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigInt = x.abs() >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

impl RatioProbe for BigRational {
    fn ratio(num: &Self, den: &Self, _alpha: f64) -> Result<RatioValue> {
        if Zero::is_zero(den) {
            return Err(Error::SingularBlock("denominator is zero".into()));
        }
        let r = num / den;
        let sign = if Zero::is_zero(&r) { 0 } else if r.is_positive() { 1 } else { -1 };
        let ln_abs = if sign == 0 { f64::NEG_INFINITY } else { ln_bigint(r.numer()) - ln_bigint(r.denom()) };
        let one = BigRational::from_integer(1.into());
        let frac = (&r - r.round()).abs();
        Ok(RatioValue {
            value: r.to_f64().unwrap_or(f64::NAN),
            sign,
            ln_abs,
            exact_in_unit: Some(r.is_positive() && r < one),
            exact_integer: Some(r.is_integer()),
            distance_to_integer: frac.to_f64().unwrap_or(0.0),
        })
    }
}

impl RatioProbe for AlphaPoly {
    fn ratio(num: &Self, den: &Self, alpha: f64) -> Result<RatioValue> {
        let d = den.eval_log(alpha);
        if d.sign == 0 {
            return Err(Error::SingularBlock(format!("denominator vanishes at alpha = {alpha}")));
        }
        let nv = num.eval_log(alpha);
        let sign = nv.sign * d.sign;
        let ln_abs = nv.ln_abs - d.ln_abs;
        let value = if sign == 0 { 0.0 } else { sign as f64 * ln_abs.exp() };
        // a log-domain margin of 1e-12 decides (0,1) membership without forming the value
        let decided = sign != 0 && ln_abs.abs() > 1e-12;
        let in_unit = decided.then_some(sign > 0 && ln_abs < 0.0);
        Ok(RatioValue {
            value,
            sign,
            ln_abs,
            exact_in_unit: in_unit,
            exact_integer: if in_unit == Some(true) { Some(false) } else { None },
            distance_to_integer: (value - value.round()).abs(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioCondition {
    /// pf(F^j(M)₁₁) ∈ (0, 1).
    OpenUnit,
    /// pf(F^{m−1}(M)₁₁) ∉ ℤ.
    NonInteger,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioCheck {
    pub j: usize,
    pub condition: RatioCondition,
    pub value: f64,
    pub ln_abs: f64,
    pub distance_to_integer: f64,
    /// Whether the verdict came from exact arithmetic rather than the tolerance.
    pub exact: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub target: IndexSet,
    pub checks: Vec<RatioCheck>,
    pub verdict: bool,
    pub tol: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub tol: f64,
    /// Evaluation point for α-mode matrices.
    pub alpha: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { tol: 1e-9, alpha: crate::superinc::DEMO_ALPHA }
    }
}

fn judge(r: &RatioValue, cond: RatioCondition, tol: f64) -> (bool, bool) {
    match cond {
        RatioCondition::OpenUnit => match r.exact_in_unit {
            Some(b) => (b, true),
            None => (r.value > tol && r.value < 1.0 - tol, false),
        },
        RatioCondition::NonInteger => match r.exact_integer {
            Some(b) => (!b, true),
            None => (r.distance_to_integer > tol, false),
        },
    }
}

/// Checks on the leading ratios pf(1..2j+2)/pf(1..2j) of M_I: (0,1)-membership
/// for j in `unit_range` and, if requested, non-integrality of the final one.
fn ratio_report<T: RatioProbe>(
    theta: &SkewMatrix<T>,
    target: &IndexSet,
    unit_range: std::ops::Range<usize>,
    final_non_integer: bool,
    opts: &CheckOptions,
) -> Result<ConditionReport> {
    let m = crate::skewmat::minor(theta, target)?;
    let half = m.n() / 2;
    let leads: Vec<T> = (0..=half).map(|s| leading_pfaffian(&m, 2 * s)).collect::<Result<_>>()?;
    let mut checks = Vec::new();
    let mut push = |j: usize, cond: RatioCondition| -> Result<()> {
        let r = T::ratio(&leads[j + 1], &leads[j], opts.alpha)?;
        let (pass, exact) = judge(&r, cond, opts.tol);
        checks.push(RatioCheck {
            j,
            condition: cond,
            value: r.value,
            ln_abs: r.ln_abs,
            distance_to_integer: r.distance_to_integer,
            exact,
            pass,
        });
        Ok(())
    };
    for j in unit_range {
        push(j, RatioCondition::OpenUnit)?;
    }
    if final_non_integer {
        push(half - 1, RatioCondition::NonInteger)?;
    }
    let verdict = checks.iter().all(|c| c.pass);
    Ok(ConditionReport { target: target.clone(), checks, verdict, tol: opts.tol })
}

/// Existence conditions for a Rieffel-type projection with trace in
/// pf(Θ) + Σ pf(1..2s)ℤ + ℤ: the leading ratios for j = 0..l−2 lie in (0,1)
/// and pf(Θ)/pf(1..n−2) is not an integer. For n = 2 only θ₁₂ ∉ ℤ is checked.
pub fn check_conditions<T: RatioProbe>(theta: &SkewMatrix<T>, opts: &CheckOptions) -> Result<ConditionReport> {
    let n = theta.n();
    if !n.is_multiple_of(2) || n < 2 {
        return Err(Error::OddDimension(n));
    }
    let l = n / 2;
    ratio_report(theta, &IndexSet::leading(n)?, 0..l - 1, true, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrongVariant {
    /// (0,1) conditions for every I with 4 ≤ |I|, j = 0..m−2.
    Strong,
    /// Additionally every |I| = 2 and the non-integrality of each final ratio.
    AllMinors,
}

#[derive(Clone, Debug, Serialize)]
pub struct StrongReport {
    pub variant: StrongVariant,
    pub reports: Vec<ConditionReport>,
    pub verdict: bool,
    /// Total irrationality is never decided numerically.
    pub irrationality: &'static str,
}

pub fn check_strong<T: RatioProbe>(
    theta: &SkewMatrix<T>,
    variant: StrongVariant,
    opts: &CheckOptions,
) -> Result<StrongReport> {
    let min_len = match variant {
        StrongVariant::Strong => 4,
        StrongVariant::AllMinors => 2,
    };
    let sets: Vec<IndexSet> = enumerate_index_sets(theta.n()).into_iter().filter(|i| i.len() >= min_len).collect();
    let reports: Vec<ConditionReport> = sets
        .par_iter()
        .map(|i| {
            let m = i.len() / 2;
            ratio_report(theta, i, 0..m - 1, variant == StrongVariant::AllMinors, opts)
        })
        .collect::<Result<_>>()?;
    let verdict = reports.iter().all(|r| r.verdict);
    Ok(StrongReport {
        variant,
        reports,
        verdict,
        irrationality: "not decided numerically; assert it or use the symbolic certificate",
    })
}

/// Which proper sub-index-sets J of I carry correction coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionRange {
    /// Leading segments (i₁, …, i_{2s}) of I.
    #[default]
    LeadingSegments,
    /// Every even nonempty proper subset of I.
    AllSubsets,
}

impl CorrectionRange {
    pub fn sets(self, i: &IndexSet) -> Vec<IndexSet> {
        match self {
            Self::LeadingSegments => i.leading_segments(),
            Self::AllSubsets => i.proper_even_subsets(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Correction<T> {
    pub j: IndexSet,
    pub pf: T,
    pub k: i64,
}

/// pf(M_I) + Σ_J pf(M_J)·k_J + k₀ with every term exposed.
#[derive(Clone, Debug, Serialize)]
pub struct TraceTarget<T> {
    pub index_set: IndexSet,
    pub range: CorrectionRange,
    pub pf_i: T,
    pub corrections: Vec<Correction<T>>,
    pub k0: i64,
    pub total: T,
}

pub fn trace_target<T: Ring>(
    theta: &SkewMatrix<T>,
    i: &IndexSet,
    coeffs: &BTreeMap<IndexSet, i64>,
    k0: i64,
    range: CorrectionRange,
) -> Result<TraceTarget<T>> {
    let allowed = range.sets(i);
    if let Some(bad) = coeffs.keys().find(|j| !allowed.contains(j)) {
        return Err(Error::InvalidIndexSet(format!("{bad} is not a correction set of {i} ({range:?})")));
    }
    let pf_i = pfaffian_minor(theta, i)?;
    let mut total = pf_i.clone();
    let mut corrections = Vec::new();
    for j in allowed {
        let pf = pfaffian_minor(theta, &j)?;
        let k = coeffs.get(&j).copied().unwrap_or(0);
        total = total.add(&pf.mul(&int_scalar::<T>(k)));
        corrections.push(Correction { j, pf, k });
    }
    total = total.add(&int_scalar::<T>(k0));
    Ok(TraceTarget { index_set: i.clone(), range, pf_i, corrections, k0, total })
}

fn int_scalar<T: Ring>(k: i64) -> T {
    let one = T::one();
    let mut acc = T::zero();
    for _ in 0..k.unsigned_abs() {
        acc = acc.add(&one);
    }
    if k < 0 {
        acc.neg()
    } else {
        acc
    }
}

/// A lattice generator: a label and its real value.
#[derive(Clone, Debug, Serialize)]
pub struct Generator {
    pub label: String,
    pub value: f64,
}

impl Generator {
    pub fn new(label: impl Into<String>, value: f64) -> Self {
        Self { label: label.into(), value }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Decomposition {
    pub k0: i64,
    /// One coefficient per generator, in input order.
    pub coeffs: Vec<(String, i64)>,
    pub residual: f64,
    pub method: &'static str,
}

impl Decomposition {
    pub fn coeff(&self, label: &str) -> i64 {
        self.coeffs.iter().find(|(l, _)| l == label).map_or(0, |c| c.1)
    }

    fn vector(&self) -> Vec<i64> {
        std::iter::once(self.k0).chain(self.coeffs.iter().map(|c| c.1)).collect()
    }
}

/// Generators 1 and pf(M_I) for every even I ⊆ {1..n}, labelled "pf(i,j,…)".
pub fn trace_lattice(theta: &SkewMatrix<f64>) -> Result<Vec<Generator>> {
    enumerate_index_sets(theta.n())
        .into_iter()
        .map(|i| Ok(Generator::new(format!("pf{i}"), pfaffian_minor(theta, &i)?)))
        .collect()
}

/// Decomposes x in ℤ + Σ pf(M_I)ℤ over all pfaffian minors of Θ.
pub fn lattice_decompose(x: f64, theta: &SkewMatrix<f64>, bound: i64, tol: f64) -> Result<Decomposition> {
    lattice_decompose_in(x, &trace_lattice(theta)?, bound, tol)
}

/// Search budget for exhaustive enumeration.
const ENUMERATION_CAP: f64 = 5e7;

/// Finds integers (k₀, k_g) with |k| ≤ bound and |x − k₀ − Σ k_g g| ≤ tol,
/// returning the one of least Euclidean norm. Small generator sets are
/// enumerated exhaustively; larger ones go through LLL reduction of the
/// Kannan embedding, which is a heuristic search.
pub fn lattice_decompose_in(x: f64, gens: &[Generator], bound: i64, tol: f64) -> Result<Decomposition> {
    if bound < 1 {
        return Err(Error::Config("coefficient bound must be at least 1".into()));
    }
    let combos = ((2 * bound + 1) as f64).powi(gens.len() as i32);
    let mut sols = if combos <= ENUMERATION_CAP {
        enumerate_solutions(x, gens, bound, tol)
    } else {
        lll_solutions(x, gens, bound, tol)
    };
    if sols.is_empty() {
        return Err(Error::NotFound { x, bound, tol });
    }
    let norm = |d: &Decomposition| d.vector().iter().map(|k| k * k).sum::<i64>();
    sols.sort_by(|a, b| norm(a).cmp(&norm(b)).then(a.residual.total_cmp(&b.residual)));
    if sols.len() > 1 && norm(&sols[0]) == norm(&sols[1]) {
        return Err(Error::AmbiguousDecomposition { first: sols[0].vector(), second: sols[1].vector() });
    }
    Ok(sols.swap_remove(0))
}

fn make_solution(x: f64, gens: &[Generator], ks: &[i64], k0: i64, method: &'static str) -> Decomposition {
    let s: f64 = gens.iter().zip(ks).map(|(g, &k)| g.value * k as f64).sum::<f64>() + k0 as f64;
    Decomposition {
        k0,
        coeffs: gens.iter().zip(ks).map(|(g, &k)| (g.label.clone(), k)).collect(),
        residual: (x - s).abs(),
        method,
    }
}

fn enumerate_solutions(x: f64, gens: &[Generator], bound: i64, tol: f64) -> Vec<Decomposition> {
    let m = gens.len();
    let mut ks = vec![-bound; m];
    let mut out = Vec::new();
    loop {
        let s: f64 = gens.iter().zip(&ks).map(|(g, &k)| g.value * k as f64).sum();
        let k0 = (x - s).round();
        if k0.abs() <= bound as f64 && (x - s - k0).abs() <= tol {
            out.push(make_solution(x, gens, &ks, k0 as i64, "enumeration"));
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == m {
                return out;
            }
            if ks[pos] < bound {
                ks[pos] += 1;
                break;
            }
            ks[pos] = -bound;
            pos += 1;
        }
    }
}

fn lll_solutions(x: f64, gens: &[Generator], bound: i64, tol: f64) -> Vec<Decomposition> {
    let m = gens.len() + 1;
    let values: Vec<f64> = std::iter::once(1.0).chain(gens.iter().map(|g| g.value)).collect();
    let weight = (1.0 / tol).min(1e10);
    // rows: (e_i, 0, w·g_i) for each generator (with 1 first), then (0, 1, −w·x)
    let dim = m + 2;
    let mut basis: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut r = vec![0.0; dim];
            r[i] = 1.0;
            r[dim - 1] = weight * values[i];
            r
        })
        .collect();
    let mut t = vec![0.0; dim];
    t[m] = 1.0;
    t[dim - 1] = -weight * x;
    basis.push(t);
    lll_reduce(&mut basis, 0.99);
    let mut out: Vec<Decomposition> = Vec::new();
    for row in &basis {
        let c = row[m].round() as i64;
        if c.abs() != 1 {
            continue;
        }
        let ks: Vec<i64> = row[..m].iter().map(|v| (v.round() as i64) * c).collect();
        if ks.iter().any(|k| k.abs() > bound) {
            continue;
        }
        let d = make_solution(x, gens, &ks[1..], ks[0], "lll");
        if d.residual <= tol && !out.iter().any(|o| o.vector() == d.vector()) {
            out.push(d);
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Textbook LLL with Gram–Schmidt recomputation after each change.
pub(crate) fn lll_reduce(b: &mut [Vec<f64>], delta: f64) {
    let n = b.len();
    let gram_schmidt = |b: &[Vec<f64>]| {
        let mut bs: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut mu = vec![vec![0.0; n]; n];
        let mut norms = vec![0.0; n];
        for i in 0..n {
            let mut v = b[i].clone();
            for j in 0..i {
                mu[i][j] = if norms[j] > 0.0 { dot(&b[i], &bs[j]) / norms[j] } else { 0.0 };
                for (vk, bk) in v.iter_mut().zip(&bs[j]) {
                    *vk -= mu[i][j] * bk;
                }
            }
            norms[i] = dot(&v, &v);
            bs.push(v);
        }
        (mu, norms)
    };
    let (mut mu, mut norms) = gram_schmidt(b);
    let mut k = 1;
    let mut guard = 0usize;
    while k < n && guard < 100_000 {
        guard += 1;
        for j in (0..k).rev() {
            let q = mu[k][j].round();
            if q != 0.0 {
                let bj = b[j].clone();
                for (x, y) in b[k].iter_mut().zip(&bj) {
                    *x -= q * y;
                }
                for l in 0..=j {
                    let sub = if l == j { 1.0 } else { mu[j][l] };
                    mu[k][l] -= q * sub;
                }
            }
        }
        if norms[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1] {
            k += 1;
        } else {
            b.swap(k, k - 1);
            (mu, norms) = gram_schmidt(b);
            k = (k - 1).max(1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    fn theta4(v: [f64; 6]) -> SkewMatrix<f64> {
        let idx = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        SkewMatrix::from_upper(4, |j, k| v[idx.iter().position(|&p| p == (j, k)).unwrap()])
    }

    #[test]
    fn four_by_four_flow_entry() {
        let t = theta4([0.3, 0.11, 0.27, 0.19, 0.41, 0.07]);
        let f = schur_f(&t).unwrap();
        let pf = pfaffian(&t).unwrap();
        assert!((f.get(0, 1) - pf / 0.3).abs() < 1e-14);
    }

    #[test]
    fn singular_block() {
        let t = theta4([0.0, 0.1, 0.2, 0.3, 0.4, 0.5]);
        assert!(matches!(schur_f(&t), Err(Error::SingularBlock(_))));
    }

    #[test]
    fn condition_examples() {
        let opts = CheckOptions::default();
        let t = SkewMatrix::from_upper(2, |_, _| rational(3, 1));
        assert!(!check_conditions(&t, &opts).unwrap().verdict);
        // θ34 chosen so that pf = 0.6 with θ12 = 0.3
        let (a, b, c, d, e) = (0.3, 0.1, 0.2, 0.15, 0.25);
        let f34 = (0.6 + b * e - c * d) / a;
        let t = theta4([a, b, c, d, e, f34]);
        let r = check_conditions(&t, &opts).unwrap();
        assert!(!r.verdict);
        assert!(r.checks.last().unwrap().distance_to_integer < 1e-12);
    }

    #[test]
    fn lll_finds_small_relation() {
        let gens = vec![Generator::new("a", 2f64.sqrt()), Generator::new("b", 3f64.sqrt())];
        let x = 2.0 * 2f64.sqrt() - 3f64.sqrt() + 1.0;
        let sols = lll_solutions(x, &gens, 5, 1e-9);
        assert!(sols.iter().any(|d| d.vector() == vec![1, 2, -1]));
    }
}
