//! Arithmetic modes shared by the matrix code.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Entry mode tag carried by serialized matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Float,
    Alpha,
}

/// Commutative ring operations needed by the pfaffian recursion.
pub trait Ring: Clone + Debug + PartialEq + Send + Sync + 'static {
    const MODE: Mode;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;

    /// Whether a pivot of this size counts as singular (exact zero, or below
    /// 1e-14 in float mode).
    fn is_singular(&self) -> bool {
        self.is_zero()
    }

    /// Relative `|pf² − det| / max(1, |det|)` when the mode supports a
    /// determinant.
    fn det_residual(_a: &[Vec<Self>], _pf: &Self) -> Option<f64> {
        None
    }

    /// The value itself in float mode.
    fn as_float(&self) -> Option<f64> {
        None
    }
}

/// Rings with exact (or floating) division.
pub trait Field: Ring {
    /// `None` when `other` is singular.
    fn div(&self, other: &Self) -> Option<Self>;
    /// Size used for pivot selection.
    fn magnitude(&self) -> f64;
}

impl Ring for BigRational {
    const MODE: Mode = Mode::Rational;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn det_residual(a: &[Vec<Self>], pf: &Self) -> Option<f64> {
        let det = determinant(a);
        let diff = pf * pf - &det;
        let scale = det.abs().max(One::one());
        Some((diff.abs() / scale).to_f64().unwrap_or(f64::INFINITY))
    }
}

impl Field for BigRational {
    fn div(&self, other: &Self) -> Option<Self> {
        if Zero::is_zero(other) {
            None
        } else {
            Some(self / other)
        }
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
}

impl Ring for f64 {
    const MODE: Mode = Mode::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_singular(&self) -> bool {
        self.abs() < 1e-14
    }
    fn as_float(&self) -> Option<f64> {
        Some(*self)
    }
    fn det_residual(a: &[Vec<Self>], pf: &Self) -> Option<f64> {
        let det = determinant(a);
        Some((pf * pf - det).abs() / det.abs().max(1.0))
    }
}

impl Field for f64 {
    fn div(&self, other: &Self) -> Option<Self> {
        if other.is_singular() {
            None
        } else {
            Some(self / other)
        }
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

/// Determinant by Gaussian elimination with largest-magnitude pivoting.
pub fn determinant<T: Field>(a: &[Vec<T>]) -> T {
    let n = a.len();
    let mut m: Vec<Vec<T>> = a.to_vec();
    let mut det = T::one();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !m[r][col].is_zero())
            .max_by(|&x, &y| m[x][col].magnitude().total_cmp(&m[y][col].magnitude()));
        let Some(p) = pivot else {
            return T::zero();
        };
        if p != col {
            m.swap(p, col);
            det = det.neg();
        }
        det = det.mul(&m[col][col]);
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = match m[r][col].div(&m[col][col]) {
                Some(f) => f,
                None => return T::zero(),
            };
            for c in col..n {
                let delta = factor.mul(&m[col][c]);
                m[r][c] = m[r][c].sub(&delta);
            }
        }
    }
    det
}

/// Parses `"p/q"`, `"p"` or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Ok(p) = s.parse::<BigInt>() {
        return Some(BigRational::from_integer(p));
    }
    // decimal literal, read exactly
    let (int, frac) = s.split_once('.')?;
    let neg = int.starts_with('-');
    let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(num, den);
    Some(if neg { -r } else { r })
}

/// Formats a rational as `"p/q"` (or `"p"` for integers).
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn rational(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}
