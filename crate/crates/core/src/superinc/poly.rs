//! Sparse polynomials and rational functions in a formal variable α.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::scalar::{format_rational, rational_to_f64, Field, Mode, Ring};
use crate::{Error, Result};

/// Σ c_e α^e with arbitrary-precision exponents and exact rational
/// coefficients; zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AlphaPoly {
    terms: BTreeMap<BigUint, BigRational>,
}

impl AlphaPoly {
    pub fn monomial(exponent: impl Into<BigUint>) -> Self {
        Self::term(exponent, <BigRational as One>::one())
    }

    pub fn term(exponent: impl Into<BigUint>, coeff: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !Zero::is_zero(&coeff) {
            terms.insert(exponent.into(), coeff);
        }
        Self { terms }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::term(0u32, c)
    }

    pub fn from_terms(iter: impl IntoIterator<Item = (BigUint, BigRational)>) -> Self {
        let mut p = Self::default();
        for (e, c) in iter {
            p.add_term(e, &c);
        }
        p
    }

    fn add_term(&mut self, e: BigUint, c: &BigRational) {
        if Zero::is_zero(c) {
            return;
        }
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c.clone());
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if Zero::is_zero(o.get()) {
                    o.remove();
                }
            }
        }
    }

    /// Terms in ascending exponent order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&BigUint, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_exponent(&self) -> Option<&BigUint> {
        self.terms.keys().next()
    }

    pub fn max_exponent(&self) -> Option<&BigUint> {
        self.terms.keys().next_back()
    }

    pub fn coeff(&self, e: &BigUint) -> BigRational {
        self.terms.get(e).cloned().unwrap_or_else(<BigRational as Zero>::zero)
    }

    /// Single-term polynomial as `(exponent, coefficient)`.
    pub fn as_monomial(&self) -> Option<(&BigUint, &BigRational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    /// Exact division by a monomial, `None` if some exponent would go negative.
    pub fn div_monomial(&self, e: &BigUint, c: &BigRational) -> Option<Self> {
        if Zero::is_zero(c) {
            return None;
        }
        let mut out = Self::default();
        for (k, v) in &self.terms {
            if k < e {
                return None;
            }
            out.terms.insert(k - e, v / c);
        }
        Some(out)
    }

    /// Exact evaluation at a rational point.
    pub fn eval_rational(&self, alpha: &BigRational) -> Result<BigRational> {
        let mut acc = <BigRational as Zero>::zero();
        for (e, c) in &self.terms {
            let e = e
                .to_u32()
                .ok_or_else(|| Error::Config(format!("exponent {e} too large for exact evaluation")))?;
            acc += c * num_traits::pow(alpha.clone(), e as usize);
        }
        Ok(acc)
    }

    /// Evaluation in log-magnitude form, stable when α^e underflows.
    pub fn eval_log(&self, alpha: f64) -> LogValue {
        if self.terms.is_empty() {
            return LogValue::ZERO;
        }
        let ln_a = alpha.ln();
        // the dominant term has the smallest exponent when α < 1, largest when α > 1
        let lead = if alpha < 1.0 { self.min_exponent() } else { self.max_exponent() }.unwrap();
        let lead_f = biguint_to_f64(lead);
        let mut sum = 0.0;
        for (e, c) in &self.terms {
            let rel = if e >= lead {
                biguint_to_f64(&(e - lead))
            } else {
                -biguint_to_f64(&(lead - e))
            };
            let lnw = rel * ln_a;
            if lnw < -745.0 {
                continue;
            }
            sum += rational_to_f64(c) * lnw.exp();
        }
        if sum == 0.0 {
            return LogValue::ZERO;
        }
        LogValue { sign: sum.signum() as i8, ln_abs: sum.abs().ln() + lead_f * ln_a }
    }

    /// Plain float evaluation; switches to the log domain when a term would
    /// underflow (exponent·ln α < −700).
    pub fn eval_f64(&self, alpha: f64) -> f64 {
        let ln_a = alpha.ln();
        let underflows = self
            .terms
            .keys()
            .any(|e| biguint_to_f64(e) * ln_a < -700.0);
        if underflows || alpha <= 0.0 {
            if alpha == 0.0 {
                return rational_to_f64(&self.coeff(&BigUint::zero()));
            }
            return self.eval_log(alpha).to_f64();
        }
        self.terms
            .iter()
            .map(|(e, c)| rational_to_f64(c) * alpha.powf(biguint_to_f64(e)))
            .sum()
    }
}

pub(crate) fn biguint_to_f64(e: &BigUint) -> f64 {
    e.to_f64().unwrap_or(f64::INFINITY)
}

/// A real number stored as sign · exp(ln_abs).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    pub sign: i8,
    pub ln_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { sign: 0, ln_abs: f64::NEG_INFINITY };

    pub fn to_f64(self) -> f64 {
        self.sign as f64 * self.ln_abs.exp()
    }

    pub fn is_positive(self) -> bool {
        self.sign > 0
    }

    /// Strict `self < other` for real numbers in log form.
    pub fn lt(self, other: LogValue) -> bool {
        match (self.sign, other.sign) {
            (a, b) if a != b => a < b,
            (0, 0) => false,
            (1, 1) => self.ln_abs < other.ln_abs,
            _ => self.ln_abs > other.ln_abs,
        }
    }
}

impl fmt::Display for AlphaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // highest exponent first
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let unit = mag.is_one();
            if !unit || e.is_zero() {
                write!(f, "{}", format_rational(&mag))?;
            }
            if !e.is_zero() {
                if !unit {
                    write!(f, "*")?;
                }
                write!(f, "a^{e}")?;
            }
        }
        Ok(())
    }
}

impl Ring for AlphaPoly {
    const MODE: Mode = Mode::Alpha;

    fn zero() -> Self {
        Self::default()
    }
    fn one() -> Self {
        Self::constant(<BigRational as One>::one())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        out
    }
    fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), &-c);
        }
        out
    }
    fn mul(&self, other: &Self) -> Self {
        let mut acc: BTreeMap<BigUint, BigRational> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                *acc.entry(e1 + e2).or_insert_with(<BigRational as Zero>::zero) += c1 * c2;
            }
        }
        acc.retain(|_, c| !Zero::is_zero(c));
        Self { terms: acc }
    }
    fn neg(&self) -> Self {
        Self { terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }
}

/// Unreduced quotient num/den of α-polynomials.
#[derive(Clone, Debug)]
pub struct AlphaRational {
    pub num: AlphaPoly,
    pub den: AlphaPoly,
}

impl AlphaRational {
    pub fn new(num: AlphaPoly, den: AlphaPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DenominatorZero);
        }
        Ok(Self { num, den })
    }

    pub fn from_poly(p: AlphaPoly) -> Self {
        Self { num: p, den: AlphaPoly::one() }
    }

    /// The quotient as a polynomial when the denominator is a monomial that
    /// divides the numerator.
    pub fn to_poly(&self) -> Option<AlphaPoly> {
        let (e, c) = self.den.as_monomial()?;
        self.num.div_monomial(e, c)
    }

    pub fn eval_rational(&self, alpha: &BigRational) -> Result<BigRational> {
        let d = self.den.eval_rational(alpha)?;
        if Zero::is_zero(&d) {
            return Err(Error::DenominatorZero);
        }
        Ok(self.num.eval_rational(alpha)? / d)
    }

    pub fn eval_log(&self, alpha: f64) -> Result<LogValue> {
        let n = self.num.eval_log(alpha);
        let d = self.den.eval_log(alpha);
        if d.sign == 0 {
            return Err(Error::DenominatorZero);
        }
        if n.sign == 0 {
            return Ok(LogValue::ZERO);
        }
        Ok(LogValue { sign: n.sign * d.sign, ln_abs: n.ln_abs - d.ln_abs })
    }

    pub fn eval_f64(&self, alpha: f64) -> Result<f64> {
        Ok(self.eval_log(alpha)?.to_f64())
    }
}

impl PartialEq for AlphaRational {
    fn eq(&self, other: &Self) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

impl fmt::Display for AlphaRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one_poly() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl AlphaPoly {
    fn is_one_poly(&self) -> bool {
        matches!(self.as_monomial(), Some((e, c)) if e.is_zero() && c.is_one())
    }
}

impl Ring for AlphaRational {
    const MODE: Mode = Mode::Alpha;

    fn zero() -> Self {
        Self::from_poly(AlphaPoly::zero())
    }
    fn one() -> Self {
        Self::from_poly(AlphaPoly::one())
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    fn add(&self, other: &Self) -> Self {
        if self.den == other.den {
            return Self { num: self.num.add(&other.num), den: self.den.clone() };
        }
        Self {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
    }
    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
    fn mul(&self, other: &Self) -> Self {
        Self { num: self.num.mul(&other.num), den: self.den.mul(&other.den) }
    }
    fn neg(&self) -> Self {
        Self { num: self.num.neg(), den: self.den.clone() }
    }
}

impl Field for AlphaRational {
    fn div(&self, other: &Self) -> Option<Self> {
        if other.num.is_zero() {
            return None;
        }
        Some(Self { num: self.num.mul(&other.den), den: self.den.mul(&other.num) })
    }
    fn magnitude(&self) -> f64 {
        if self.num.is_zero() {
            0.0
        } else {
            1.0
        }
    }
}
