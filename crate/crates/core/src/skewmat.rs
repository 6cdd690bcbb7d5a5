//! Skew-symmetric matrices, pfaffians and pfaffian minors.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::scalar::{format_rational, parse_rational, rational_to_f64, Mode, Ring};
use crate::superinc::AlphaPoly;
use crate::{Error, Result};

/// Largest dimension accepted by the subset-memoized pfaffian.
pub const PFAFFIAN_CAP: usize = 16;

/// Square skew-symmetric matrix with entries in one arithmetic mode.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewMatrix<T> {
    n: usize,
    a: Vec<Vec<T>>,
}

impl<T: Ring> SkewMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![vec![T::zero(); n]; n] }
    }

    /// Builds the matrix from its strictly-upper part; `f(j, k)` is called
    /// with 0-based `j < k`.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for j in 0..n {
            for k in j + 1..n {
                let v = f(j, k);
                m.a[k][j] = v.neg();
                m.a[j][k] = v;
            }
        }
        m
    }

    /// Validates a full square array; float entries may deviate from exact
    /// skew-symmetry by 1e-12 relative and are then antisymmetrized.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSkew("rows of unequal length".into()));
        }
        let m = Self::from_upper(n, |j, k| rows[j][k].clone());
        for j in 0..n {
            for k in 0..n {
                if !skew_close(&rows[j][k], &m.a[j][k]) {
                    return Err(Error::NotSkew(format!("entry ({}, {})", j + 1, k + 1)));
                }
            }
        }
        Ok(m)
    }

    /// The standard symplectic block matrix J₀'' = diag((0 1; −1 0), …).
    pub fn symplectic(n: usize) -> Self {
        Self::from_upper(n, |j, k| if j % 2 == 0 && k == j + 1 { T::one() } else { T::zero() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry at 0-based position.
    pub fn get(&self, j: usize, k: usize) -> &T {
        &self.a[j][k]
    }

    /// θ_jk with 1-based indices as in the phase-matrix notation.
    pub fn theta(&self, j: usize, k: usize) -> &T {
        &self.a[j - 1][k - 1]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.a
    }

    pub fn map<U: Ring>(&self, f: impl Fn(&T) -> U) -> SkewMatrix<U> {
        SkewMatrix::from_upper(self.n, |j, k| f(&self.a[j][k]))
    }

    /// Submatrix on 0-based positions.
    pub(crate) fn select(&self, idx: &[usize]) -> Self {
        Self::from_upper(idx.len(), |j, k| self.a[idx[j]][idx[k]].clone())
    }
}

fn skew_close<T: Ring>(given: &T, expected: &T) -> bool {
    if given == expected {
        return true;
    }
    match (given.as_float(), expected.as_float()) {
        (Some(g), Some(e)) => (g - e).abs() <= 1e-12 * g.abs().max(1.0),
        _ => false,
    }
}

/// Sorted tuple of 1-based indices of even positive cardinality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() || !indices.len().is_multiple_of(2) {
            return Err(Error::InvalidIndexSet(format!("{indices:?} has odd or zero cardinality")));
        }
        if indices[0] == 0 || indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndexSet(format!("{indices:?} is not strictly increasing and 1-based")));
        }
        Ok(Self(indices))
    }

    /// (1, 2, …, m).
    pub fn leading(m: usize) -> Result<Self> {
        Self::new((1..=m).collect())
    }

    pub fn pair(j: usize, k: usize) -> Result<Self> {
        Self::new(vec![j, k])
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check(&self, n: usize) -> Result<()> {
        match self.0.iter().find(|&&i| i > n) {
            Some(&index) => Err(Error::IndexOutOfRange { index, n }),
            None => Ok(()),
        }
    }

    /// Leading segments (i₁, …, i_{2s}) for 0 < 2s < |I|.
    pub fn leading_segments(&self) -> Vec<IndexSet> {
        (1..self.len() / 2).map(|s| IndexSet(self.0[..2 * s].to_vec())).collect()
    }

    /// All even nonempty proper sub-index-sets, sorted.
    pub fn proper_even_subsets(&self) -> Vec<IndexSet> {
        let m = self.len();
        let mut out: Vec<IndexSet> = (1u32..(1 << m) - 1)
            .filter(|mask| mask.count_ones() % 2 == 0)
            .map(|mask| IndexSet((0..m).filter(|b| mask >> b & 1 == 1).map(|b| self.0[b]).collect()))
            .collect();
        out.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.0.cmp(&y.0)));
        out
    }
}

impl TryFrom<Vec<usize>> for IndexSet {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<IndexSet> for Vec<usize> {
    fn from(i: IndexSet) -> Self {
        i.0
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A pfaffian together with its determinant cross-check.
#[derive(Clone, Debug)]
pub struct PfaffianValue<T> {
    pub value: T,
    /// `|pf² − det| / max(1, |det|)` where a determinant is available.
    pub det_residual: Option<f64>,
    /// Set when the float cross-check exceeds 1e-8.
    pub ill_conditioned: bool,
}

/// pf(A) by last-column expansion, memoized over index subsets; pf(∅) = 1.
pub fn pfaffian<T: Ring>(a: &SkewMatrix<T>) -> Result<T> {
    let n = a.n;
    if !n.is_multiple_of(2) {
        return Err(Error::OddDimension(n));
    }
    if n > PFAFFIAN_CAP {
        return Err(Error::TooLarge { n, cap: PFAFFIAN_CAP });
    }
    if n == 0 {
        return Ok(T::one());
    }
    let full = (1usize << n) - 1;
    let mut memo: Vec<Option<T>> = vec![None; full + 1];
    memo[0] = Some(T::one());
    // bottom-up over even subsets; each depends only on strictly smaller masks
    for mask in 1..=full {
        if !(mask as u32).count_ones().is_multiple_of(2) {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).collect();
        let last = *members.last().unwrap();
        let mut acc = T::zero();
        for (pos, &i) in members[..members.len() - 1].iter().enumerate() {
            let entry = &a.a[i][last];
            if entry.is_zero() {
                continue;
            }
            let rest = mask & !(1 << i) & !(1 << last);
            let Some(sub) = memo[rest].as_ref() else { continue };
            if sub.is_zero() {
                continue;
            }
            let term = entry.mul(sub);
            acc = if pos % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
        }
        memo[mask] = Some(acc);
    }
    Ok(memo[full].take().unwrap())
}

/// pf(A) with the determinant cross-check of the arithmetic mode.
pub fn pfaffian_checked<T: Ring>(a: &SkewMatrix<T>) -> Result<PfaffianValue<T>> {
    let value = pfaffian(a)?;
    let det_residual = T::det_residual(&a.a, &value);
    let ill_conditioned = T::MODE == Mode::Float && det_residual.is_some_and(|r| r > 1e-8);
    Ok(PfaffianValue { value, det_residual, ill_conditioned })
}

/// M_I^A: rows and columns selected by I.
pub fn minor<T: Ring>(a: &SkewMatrix<T>, i: &IndexSet) -> Result<SkewMatrix<T>> {
    i.check(a.n)?;
    let idx: Vec<usize> = i.indices().iter().map(|&x| x - 1).collect();
    Ok(a.select(&idx))
}

/// pf_I^A = pf(M_I^A).
pub fn pfaffian_minor<T: Ring>(a: &SkewMatrix<T>, i: &IndexSet) -> Result<T> {
    pfaffian(&minor(a, i)?)
}

/// pf over the leading block (1, …, m); m = 0 gives the empty pfaffian 1.
pub fn leading_pfaffian<T: Ring>(a: &SkewMatrix<T>, m: usize) -> Result<T> {
    if m == 0 {
        return Ok(T::one());
    }
    pfaffian_minor(a, &IndexSet::leading(m)?)
}

/// All even nonempty subsets of {1..n}, ordered by size then lexicographically.
pub fn enumerate_index_sets(n: usize) -> Vec<IndexSet> {
    let all = IndexSet((1..=n).collect());
    if n < 2 {
        return Vec::new();
    }
    let mut out = all.proper_even_subsets();
    if n.is_multiple_of(2) {
        out.push(all);
    }
    out
}

/// Entry codec for the JSON matrix format.
pub trait JsonEntry: Ring {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

impl JsonEntry for BigRational {
    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => {
                parse_rational(s).ok_or_else(|| Error::ModeMismatch(format!("{s:?} is not a rational")))
            }
            Value::Number(x) if x.is_i64() => Ok(BigRational::from_integer(x.as_i64().unwrap().into())),
            other => Err(Error::ModeMismatch(format!("rational mode got {other}"))),
        }
    }
}

impl JsonEntry for f64 {
    fn to_json(&self) -> Value {
        json!(self)
    }
    fn from_json(v: &Value) -> Result<Self> {
        v.as_f64().ok_or_else(|| Error::ModeMismatch(format!("float mode got {v}")))
    }
}

impl JsonEntry for AlphaPoly {
    fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (e, c) in self.terms() {
            m.insert(e.to_string(), Value::String(format_rational(c)));
        }
        Value::Object(m)
    }
    fn from_json(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::ModeMismatch(format!("alpha mode got {v}")))?;
        let mut terms = Vec::new();
        for (e, c) in obj {
            let e: BigUint = e.parse().map_err(|_| Error::ModeMismatch(format!("bad exponent {e}")))?;
            terms.push((e, BigRational::from_json(c)?));
        }
        Ok(AlphaPoly::from_terms(terms))
    }
}

impl<T: JsonEntry> SkewMatrix<T> {
    /// `{"n", "mode", "upper": [[j, k, entry], …]}` with 1-based indices.
    pub fn to_json(&self) -> Value {
        let mut upper = Vec::new();
        for j in 0..self.n {
            for k in j + 1..self.n {
                upper.push(json!([j + 1, k + 1, self.a[j][k].to_json()]));
            }
        }
        json!({ "n": self.n, "mode": T::MODE, "upper": upper })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let n = v["n"].as_u64().ok_or_else(|| Error::Config("missing n".into()))? as usize;
        let mode: Mode = serde_json::from_value(v["mode"].clone())?;
        if mode != T::MODE {
            return Err(Error::ModeMismatch(format!("declared {mode:?}, expected {:?}", T::MODE)));
        }
        let mut m = Self::zeros(n);
        let upper = v["upper"].as_array().ok_or_else(|| Error::Config("missing upper".into()))?;
        for item in upper {
            let (j, k, e) = match item.as_array().map(|a| a.as_slice()) {
                Some([j, k, e]) => (j.as_u64(), k.as_u64(), e),
                _ => return Err(Error::Config(format!("bad upper entry {item}"))),
            };
            let (j, k) = match (j, k) {
                (Some(j), Some(k)) if 1 <= j && j < k && k as usize <= n => (j as usize - 1, k as usize - 1),
                _ => return Err(Error::Config(format!("bad upper indices in {item}"))),
            };
            let val = T::from_json(e)?;
            m.a[k][j] = val.neg();
            m.a[j][k] = val;
        }
        Ok(m)
    }
}

/// A skew matrix in whichever mode its serialization declares.
#[derive(Clone, Debug)]
pub enum AnySkew {
    Rational(SkewMatrix<BigRational>),
    Float(SkewMatrix<f64>),
    Alpha(SkewMatrix<AlphaPoly>),
}

impl AnySkew {
    pub fn from_json(v: &Value) -> Result<Self> {
        let mode: Mode = serde_json::from_value(v["mode"].clone())
            .map_err(|_| Error::ModeMismatch(format!("unknown mode {}", v["mode"])))?;
        Ok(match mode {
            Mode::Rational => Self::Rational(SkewMatrix::from_json(v)?),
            Mode::Float => Self::Float(SkewMatrix::from_json(v)?),
            Mode::Alpha => Self::Alpha(SkewMatrix::from_json(v)?),
        })
    }

    pub fn to_json(&self) -> Value {
        match self {
            Self::Rational(m) => m.to_json(),
            Self::Float(m) => m.to_json(),
            Self::Alpha(m) => m.to_json(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Rational(m) => m.n(),
            Self::Float(m) => m.n(),
            Self::Alpha(m) => m.n(),
        }
    }

    /// Float view; α-mode entries are evaluated at `alpha`.
    pub fn to_float(&self, alpha: Option<f64>) -> Result<SkewMatrix<f64>> {
        Ok(match self {
            Self::Rational(m) => m.map(rational_to_f64),
            Self::Float(m) => m.clone(),
            Self::Alpha(m) => {
                let a = alpha.ok_or_else(|| Error::Config("alpha-mode matrix needs an evaluation point".into()))?;
                m.map(|p| p.eval_f64(a))
            }
        })
    }
}

impl SkewMatrix<BigRational> {
    pub fn to_f64(&self) -> SkewMatrix<f64> {
        self.map(rational_to_f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    #[test]
    fn symplectic_pfaffian_is_one() {
        for n in [2, 4, 6, 8] {
            assert_eq!(pfaffian(&SkewMatrix::<BigRational>::symplectic(n)).unwrap(), rational(1, 1));
        }
    }

    #[test]
    fn two_by_two() {
        let a = SkewMatrix::from_upper(2, |_, _| rational(3, 7));
        assert_eq!(pfaffian(&a).unwrap(), rational(3, 7));
    }

    #[test]
    fn odd_dimension_rejected() {
        let a = SkewMatrix::<f64>::zeros(3);
        assert!(matches!(pfaffian(&a), Err(Error::OddDimension(3))));
    }

    #[test]
    fn index_set_validation() {
        assert!(IndexSet::new(vec![1, 2, 3]).is_err());
        assert!(IndexSet::new(vec![2, 1]).is_err());
        assert!(IndexSet::new(vec![0, 1]).is_err());
        assert!(IndexSet::new(vec![]).is_err());
        let i = IndexSet::new(vec![1, 5]).unwrap();
        assert!(matches!(i.check(4), Err(Error::IndexOutOfRange { index: 5, n: 4 })));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_index_sets(2), vec![IndexSet::pair(1, 2).unwrap()]);
        assert_eq!(enumerate_index_sets(3).len(), 3);
        assert_eq!(enumerate_index_sets(4).len(), 7);
        assert_eq!(enumerate_index_sets(6).len(), 31);
        assert_eq!(enumerate_index_sets(5).len(), 15);
    }

    #[test]
    fn json_round_trip() {
        let a = SkewMatrix::from_upper(4, |j, k| rational((j + 2 * k) as i64, 7));
        let v = a.to_json();
        assert_eq!(v["upper"][0], json!([1, 2, "2/7"]));
        let b = SkewMatrix::<BigRational>::from_json(&v).unwrap();
        assert_eq!(a, b);
        assert!(matches!(SkewMatrix::<f64>::from_json(&v), Err(Error::ModeMismatch(_))));
    }

    #[test]
    fn mixed_entries_rejected() {
        let v = json!({"n": 2, "mode": "rational", "upper": [[1, 2, 0.5]]});
        assert!(matches!(AnySkew::from_json(&v), Err(Error::ModeMismatch(_))));
        let v = json!({"n": 2, "mode": "float", "upper": [[1, 2, "1/2"]]});
        assert!(matches!(AnySkew::from_json(&v), Err(Error::ModeMismatch(_))));
    }
}
