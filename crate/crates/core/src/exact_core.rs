//! Exact rational arithmetic, coprime pairs, cusps and classical Dedekind sums.
//!
//! Argument order matters here. The classical sum is written `s(a, c)` with
//! modulus `c > 0`; the Dedekind symbol on pairs is `d(p, q) := s(q, p)`, i.e.
//! the *first* pair entry is the modulus. With that identification the
//! reciprocity law
//!
//! ```text
//! d(p, q) - d(q, -p) = (p^2 + q^2 - 3pq + 1) / (12 p q)
//! ```
//!
//! holds exactly for coprime `p, q > 0`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arbitrary precision rational, always reduced with positive denominator.
pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// An element of W: a pair of coprime integers, signs kept as given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoprimePair {
    pub p: i64,
    pub q: i64,
}

impl CoprimePair {
    pub fn new(p: i64, q: i64) -> Result<Self> {
        normalize(p, q)
    }

    /// The pair with both signs flipped.
    pub fn negated(self) -> Self {
        CoprimePair { p: -self.p, q: -self.q }
    }

    /// The cusp `q/p` (infinity when `p = 0`).
    pub fn cusp(self) -> Cusp {
        Cusp::from_pair(self.p, self.q)
    }
}

impl fmt::Display for CoprimePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}

/// Validating constructor for W. Rejects `(0, 0)` and non-coprime input; signs
/// are never canonicalized.
pub fn normalize(p: i64, q: i64) -> Result<CoprimePair> {
    if (p == 0 && q == 0) || p.gcd(&q) != 1 {
        return Err(Error::NotCoprime(p, q));
    }
    Ok(CoprimePair { p, q })
}

/// A point of the rational projective line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cusp {
    Infinity,
    Finite(Rational),
}

impl Cusp {
    pub fn zero() -> Self {
        Cusp::Finite(Rational::zero())
    }

    pub fn integer(n: i64) -> Self {
        Cusp::Finite(rat_int(n))
    }

    /// The cusp `num/den`; `den = 0` gives infinity.
    pub fn ratio(num: i64, den: i64) -> Self {
        Self::ratio_big(BigInt::from(num), BigInt::from(den))
    }

    pub fn ratio_big(num: BigInt, den: BigInt) -> Self {
        if den.is_zero() {
            Cusp::Infinity
        } else {
            Cusp::Finite(Rational::new(num, den))
        }
    }

    /// The cusp `q/p` attached to the pair `(p, q)`.
    pub fn from_pair(p: i64, q: i64) -> Self {
        Self::ratio(q, p)
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Cusp::Infinity)
    }

    /// Homogeneous coordinates `(num, den)` with `den >= 0` and infinity as `(1, 0)`.
    pub fn homogeneous(&self) -> (BigInt, BigInt) {
        match self {
            Cusp::Infinity => (BigInt::one(), BigInt::zero()),
            Cusp::Finite(r) => (r.numer().clone(), r.denom().clone()),
        }
    }

    /// Canonical representative `(p, q)` of this cusp as `q/p`, with `p >= 0`
    /// and infinity as `(0, 1)`.
    pub fn to_pair(&self) -> Option<CoprimePair> {
        let (num, den) = self.homogeneous();
        Some(CoprimePair { p: den.to_i64()?, q: num.to_i64()? })
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Cusp::Infinity => f64::INFINITY,
            Cusp::Finite(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "inf" | "infinity" | "oo" | "i*inf" | "iinf" => return Ok(Cusp::Infinity),
            _ => {}
        }
        let parse_int =
            |t: &str| t.trim().parse::<BigInt>().map_err(|e| Error::Parse(format!("cusp {s:?}: {e}")));
        match s.split_once('/') {
            Some((n, d)) => Ok(Cusp::ratio_big(parse_int(n)?, parse_int(d)?)),
            None => Ok(Cusp::Finite(Rational::from_integer(parse_int(s)?))),
        }
    }
}

impl fmt::Display for Cusp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cusp::Infinity => write!(f, "inf"),
            Cusp::Finite(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Cusp::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl Serialize for Cusp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Cusp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Cusp::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Sawtooth `((x))` of a rational `num/den`, `den > 0`.
pub fn sawtooth(x: &Rational) -> Rational {
    if x.is_integer() {
        return Rational::zero();
    }
    x - x.floor() - rat(1, 2)
}

/// Classical Dedekind sum `s(a, c) = sum_{i=1}^{c-1} ((i/c)) ((a i / c))`,
/// evaluated as the finite sawtooth sum.
pub fn classical_dedekind_sum(a: i64, c: i64) -> Result<Rational> {
    if c < 1 || a.gcd(&c) != 1 {
        return Err(Error::NotCoprime(a, c));
    }
    // ((i/c)) ((ai/c)) = (2i - c)(2r - c) / (4c^2) with r = ai mod c; no term is integral.
    let c128 = c as i128;
    let a_mod = (a as i128).rem_euclid(c128);
    let mut acc = BigInt::zero();
    let mut chunk: i128 = 0;
    for i in 1..c128 {
        let r = (a_mod * i) % c128;
        chunk += (2 * i - c128) * (2 * r - c128);
        if chunk.abs() > (1i128 << 100) {
            acc += BigInt::from(chunk);
            chunk = 0;
        }
    }
    acc += BigInt::from(chunk);
    Ok(Rational::new(acc, BigInt::from(4) * BigInt::from(c) * BigInt::from(c)))
}

/// Dedekind sum by the reciprocity descent `s(a,c) + s(c,a) = (a^2+c^2+1)/(12ac) - 1/4`;
/// `O(log c)` steps. Agrees with [`classical_dedekind_sum`] everywhere.
pub fn dedekind_sum(a: i64, c: i64) -> Result<Rational> {
    if c < 1 || a.gcd(&c) != 1 {
        return Err(Error::NotCoprime(a, c));
    }
    let mut sign = Rational::one();
    let mut acc = Rational::zero();
    let (mut a, mut c) = (BigInt::from(a).mod_floor(&BigInt::from(c)), BigInt::from(c));
    while !a.is_zero() {
        // s(a,c) = -s(c,a) + (a^2 + c^2 + 1)/(12ac) - 1/4 with 0 < a < c
        let term = Rational::new(&a * &a + &c * &c + 1, BigInt::from(12) * &a * &c) - rat(1, 4);
        acc += &sign * term;
        sign = -sign;
        let next = c.mod_floor(&a);
        c = a;
        a = next;
    }
    Ok(acc)
}

/// The symbol `d(p, q) := s(q, p)` for `p > 0`.
pub fn classical_symbol(p: i64, q: i64) -> Result<Rational> {
    if p <= 0 {
        return Err(Error::InvalidArgument(format!("d(p, q) needs p > 0, got p = {p}")));
    }
    classical_dedekind_sum(q, p)
}

/// Right side of the classical reciprocity law, `(p^2 + q^2 - 3pq + 1)/(12pq)`.
pub fn classical_reciprocity_rhs(p: i64, q: i64) -> Rational {
    let (p, q) = (BigInt::from(p), BigInt::from(q));
    Rational::new(&p * &p + &q * &q - BigInt::from(3) * &p * &q + 1, BigInt::from(12) * p * q)
}

/// `d(p, q) - d(q, -p) - (p^2 + q^2 - 3pq + 1)/(12pq)` for coprime `p, q > 0`; exactly zero.
pub fn reciprocity_residual_classical(p: i64, q: i64) -> Result<Rational> {
    if p <= 0 || q <= 0 {
        return Err(Error::InvalidArgument(format!("need p, q > 0, got ({p}, {q})")));
    }
    normalize(p, q)?;
    Ok(classical_symbol(p, q)? - classical_symbol(q, -p)? - classical_reciprocity_rhs(p, q))
}

/// Hash-friendly short rendering `n/d` used in reports and CSV.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_abs_f64(r: &Rational) -> f64 {
    r.abs().to_f64().unwrap_or(f64::INFINITY)
}
