//! Super-increasing sequences, the Θ(n) family with single-monomial entries
//! α^{s_i}, its alternating pfaffian expansion and the distinct-monomial
//! independence certificate.

mod poly;

pub use poly::{AlphaPoly, AlphaRational, LogValue};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::scalar::Ring;
use crate::skewmat::{enumerate_index_sets, minor, pfaffian, IndexSet, SkewMatrix};
use crate::{Error, Result};

/// Demo evaluation point; arbitrary, with no claim of transcendence.
pub const DEMO_ALPHA: f64 = 0.437;

/// A validated sequence with s₁ = 1 and s_i > s₁ + … + s_{i−1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperIncreasingSeq(Vec<BigUint>);

impl SuperIncreasingSeq {
    /// s_i = 2^{i−1}, i = 1..len.
    pub fn pow2(len: usize) -> Self {
        Self((0..len).map(|i| BigUint::one() << i).collect())
    }

    /// Powers of two long enough for Θ(n).
    pub fn pow2_for(n: usize) -> Self {
        Self::pow2(n * (n - 1) / 2)
    }

    pub fn terms(&self) -> &[BigUint] {
        &self.0
    }
}

/// Checks s₁ = 1 and strict super-increase; the error names the first
/// failing 1-based index.
pub fn validate(s: Vec<BigUint>) -> Result<SuperIncreasingSeq> {
    if s.is_empty() || !s[0].is_one() {
        return Err(Error::NotSuperIncreasing(1));
    }
    let mut prefix = BigUint::zero();
    for (i, x) in s.iter().enumerate() {
        if i > 0 && *x <= prefix {
            return Err(Error::NotSuperIncreasing(i + 1));
        }
        prefix += x;
    }
    Ok(SuperIncreasingSeq(s))
}

pub fn validate_u64(s: &[u64]) -> Result<SuperIncreasingSeq> {
    validate(s.iter().map(|&x| BigUint::from(x)).collect())
}

/// Position of θ_jk (1-based, j < k) in the column-by-column layout:
/// column k holds s_{p+1}, …, s_{p+k−1} with p = (k−1)(k−2)/2.
pub fn layout_index(j: usize, k: usize) -> usize {
    (k - 1) * (k - 2) / 2 + j
}

/// Θ(n) with θ_jk = α^{s_{layout(j,k)}}.
pub fn build_theta(s: &SuperIncreasingSeq, n: usize) -> Result<SkewMatrix<AlphaPoly>> {
    theta_from_exponents(s.terms(), n)
}

/// Θ(n)-shaped matrix from an arbitrary exponent list (no super-increase
/// check), used by the certificate on adversarial inputs.
pub fn theta_from_exponents(s: &[BigUint], n: usize) -> Result<SkewMatrix<AlphaPoly>> {
    let need = n * (n - 1) / 2;
    if s.len() < need {
        return Err(Error::SequenceTooShort { have: s.len(), need });
    }
    Ok(SkewMatrix::from_upper(n, |j, k| AlphaPoly::monomial(s[layout_index(j + 1, k + 1) - 1].clone())))
}

/// One signed monomial ±α^M of a pfaffian expansion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignedExponent {
    pub sign: i8,
    pub exponent: BigUint,
}

/// The expansion pf(Θ(n)) = α^{M₁} − α^{M₂} + … sorted by decreasing exponent.
#[derive(Clone, Debug, Serialize)]
pub struct Expansion {
    pub n: usize,
    pub terms: Vec<SignedExponent>,
    /// Any departures from alternation, strict decrease, the (n−1)!! count or
    /// agreement with the subset-recursion pfaffian.
    pub violations: Vec<String>,
}

impl Expansion {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_poly(&self) -> AlphaPoly {
        AlphaPoly::from_terms(
            self.terms
                .iter()
                .map(|t| (t.exponent.clone(), BigRational::from_integer(t.sign.into()))),
        )
    }
}

pub fn double_factorial(n: usize) -> u64 {
    (1..=n as u64).rev().step_by(2).product()
}

/// Perfect matchings of 0..n as pair lists with their signs.
fn matchings(n: usize) -> Vec<(i8, Vec<(usize, usize)>)> {
    fn rec(free: &mut Vec<usize>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<(i8, Vec<(usize, usize)>)>) {
        if free.is_empty() {
            let perm: Vec<usize> = cur.iter().flat_map(|&(a, b)| [a, b]).collect();
            let inversions = (0..perm.len())
                .flat_map(|i| (i + 1..perm.len()).map(move |j| (i, j)))
                .filter(|&(i, j)| perm[i] > perm[j])
                .count();
            out.push((if inversions % 2 == 0 { 1 } else { -1 }, cur.clone()));
            return;
        }
        let first = free.remove(0);
        for idx in 0..free.len() {
            let partner = free.remove(idx);
            cur.push((first, partner));
            rec(free, cur, out);
            cur.pop();
            free.insert(idx, partner);
        }
        free.insert(0, first);
    }
    let mut out = Vec::new();
    rec(&mut (0..n).collect(), &mut Vec::new(), &mut out);
    out
}

/// Signed exponent list of pf of a matrix whose entries are single monomials,
/// obtained from the explicit matching sum and cross-checked against the
/// subset-recursion pfaffian.
pub fn pfaffian_expansion(theta: &SkewMatrix<AlphaPoly>) -> Result<Expansion> {
    let n = theta.n();
    if !n.is_multiple_of(2) {
        return Err(Error::OddDimension(n));
    }
    let mut violations = Vec::new();
    let mut terms: Vec<SignedExponent> = Vec::new();
    for (sign, pairs) in matchings(n) {
        let mut exponent = BigUint::zero();
        let mut coeff = BigRational::from_integer(sign.into());
        for &(a, b) in &pairs {
            let Some((e, c)) = theta.get(a, b).as_monomial() else {
                violations.push(format!("entry ({}, {}) is not a single monomial", a + 1, b + 1));
                return Ok(Expansion { n, terms: Vec::new(), violations });
            };
            exponent += e;
            coeff *= c;
        }
        if coeff.abs_sub_one_nonzero() {
            violations.push(format!("matching {pairs:?} has coefficient {coeff}"));
        }
        terms.push(SignedExponent { sign, exponent });
    }
    terms.sort_by(|x, y| y.exponent.cmp(&x.exponent));

    let expected = double_factorial(n.saturating_sub(1));
    if terms.len() as u64 != expected {
        violations.push(format!("{} terms, expected (n-1)!! = {expected}", terms.len()));
    }
    if let Some(first) = terms.first() {
        if first.sign != 1 {
            violations.push("leading term is negative".into());
        }
    }
    for (i, w) in terms.windows(2).enumerate() {
        if w[0].exponent <= w[1].exponent {
            violations.push(format!("exponents not strictly decreasing at term {}", i + 2));
        }
        if w[0].sign == w[1].sign {
            violations.push(format!("signs do not alternate at term {}", i + 2));
        }
    }
    let exp = Expansion { n, terms, violations };
    let recursive = pfaffian(theta)?;
    let mut exp = exp;
    if exp.to_poly() != recursive {
        exp.violations.push("matching sum disagrees with the subset-recursion pfaffian".into());
    }
    Ok(exp)
}

trait UnitCoeff {
    fn abs_sub_one_nonzero(&self) -> bool;
}

impl UnitCoeff for BigRational {
    fn abs_sub_one_nonzero(&self) -> bool {
        !(self.is_one() || (-self).is_one())
    }
}

/// Per-n record of the chain check.
#[derive(Clone, Debug, Serialize)]
pub struct ChainEntry {
    pub n: usize,
    pub pf_sign: i8,
    pub ln_pf: f64,
    pub min_exponent: String,
    pub max_exponent: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub alpha: f64,
    pub entries: Vec<ChainEntry>,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// Verifies 0 < pf(Θ(n_max)) < … < pf(Θ(2)) < 1 in log form and the exponent
/// gap M(n)_{R(n)} > M(n−2)_1 between consecutive even sizes.
pub fn monotone_chain_check(s: &SuperIncreasingSeq, n_max: usize, alpha: f64) -> Result<ChainReport> {
    if !n_max.is_multiple_of(2) || n_max < 2 {
        return Err(Error::OddDimension(n_max));
    }
    let sizes: Vec<usize> = (1..=n_max / 2).map(|h| 2 * h).collect();
    let pfs: Vec<AlphaPoly> = sizes
        .par_iter()
        .map(|&n| build_theta(s, n).and_then(|t| pfaffian(&t)))
        .collect::<Result<_>>()?;
    let degenerate = !(alpha > 0.0 && alpha < 1.0);
    let values: Vec<LogValue> = pfs
        .iter()
        .map(|p| if alpha > 0.0 { p.eval_log(alpha) } else { LogValue::ZERO })
        .collect();

    let mut failures = Vec::new();
    if degenerate {
        failures.push(format!("alpha = {alpha} lies outside (0, 1)"));
    }
    let one = LogValue { sign: 1, ln_abs: 0.0 };
    for (i, &n) in sizes.iter().enumerate() {
        let v = values[i];
        if !v.is_positive() {
            failures.push(format!("pf(Theta({n})) is not positive"));
        }
        if i == 0 && !v.lt(one) {
            failures.push("pf(Theta(2)) is not below 1".into());
        }
        if i > 0 {
            if !v.lt(values[i - 1]) {
                failures.push(format!("pf(Theta({n})) is not below pf(Theta({}))", n - 2));
            }
            let lo = pfs[i].min_exponent();
            let hi = pfs[i - 1].max_exponent();
            if !matches!((lo, hi), (Some(lo), Some(hi)) if lo > hi) {
                failures.push(format!("exponent gap fails between n={} and n={n}", n - 2));
            }
        }
    }
    let entries = sizes
        .iter()
        .zip(&pfs)
        .zip(&values)
        .map(|((&n, p), v)| ChainEntry {
            n,
            pf_sign: v.sign,
            ln_pf: v.ln_abs,
            min_exponent: p.min_exponent().map(|e| e.to_string()).unwrap_or_default(),
            max_exponent: p.max_exponent().map(|e| e.to_string()).unwrap_or_default(),
        })
        .collect();
    Ok(ChainReport { alpha, entries, pass: failures.is_empty(), failures })
}

/// Exponent table of one pfaffian minor.
#[derive(Clone, Debug, Serialize)]
pub struct MinorExponents {
    pub index_set: IndexSet,
    pub exponents: Vec<String>,
}

/// Syntactic certificate: every pfaffian minor of Θ(n) is a nonzero
/// polynomial, and the monomial supports of distinct minors and of the
/// constant 1 are pairwise disjoint. Under the premise that α is
/// transcendental this gives ℚ-linear independence of 1 and all minors.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub n: usize,
    pub premise: &'static str,
    pub table: Vec<MinorExponents>,
}

pub fn independence_certificate(s: &[BigUint], n: usize) -> Result<Certificate> {
    let theta = theta_from_exponents(s, n)?;
    let sets = enumerate_index_sets(n);
    let polys: Vec<AlphaPoly> = sets
        .par_iter()
        .map(|i| minor(&theta, i).and_then(|m| pfaffian(&m)))
        .collect::<Result<_>>()?;
    let mut owner: std::collections::BTreeMap<BigUint, String> = std::collections::BTreeMap::new();
    owner.insert(BigUint::zero(), "1".into());
    for (i, p) in sets.iter().zip(&polys) {
        if p.is_zero() {
            return Err(Error::CollisionFound {
                first: i.to_string(),
                second: "0".into(),
                exponent: "vanishing minor".into(),
            });
        }
        for (e, _) in p.terms() {
            if let Some(prev) = owner.get(e) {
                return Err(Error::CollisionFound {
                    first: prev.clone(),
                    second: i.to_string(),
                    exponent: e.to_string(),
                });
            }
        }
        for (e, _) in p.terms() {
            owner.insert(e.clone(), i.to_string());
        }
    }
    let table = sets
        .into_iter()
        .zip(&polys)
        .map(|(i, p)| MinorExponents {
            index_set: i,
            exponents: p.terms().rev().map(|(e, _)| e.to_string()).collect(),
        })
        .collect();
    Ok(Certificate { n, premise: "alpha is transcendental (declared, not tested)", table })
}

/// Whether a matrix has single-monomial entries whose exponents, read in the
/// column-by-column layout, strictly super-increase (the Θ(m) shape without
/// the s₁ = 1 normalization).
pub fn is_theta_shaped(m: &SkewMatrix<AlphaPoly>) -> bool {
    let n = m.n();
    let mut prefix = BigUint::zero();
    for k in 2..=n {
        for j in 1..k {
            let Some((e, c)) = m.theta(j, k).as_monomial() else { return false };
            if !c.is_one() || (!prefix.is_zero() && *e <= prefix) {
                return false;
            }
            prefix += e;
        }
    }
    true
}
