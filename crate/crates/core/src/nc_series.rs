//! Truncated formal series in noncommuting variables `A_1..A_l` with
//! coefficients in a commutative ring, and the group of series with constant
//! term 1.
//!
//! Storage is dense: all `(l^{N+1} - 1)/(l - 1)` words of length at most `N`
//! live in one vector ordered by length, then lexicographically. Words are
//! sequences of 0-based letter indices; `A_{m+1}` is letter `m`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Neg;

use num_complex::Complex64;
use num_traits::Num;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Coefficient ring.
pub trait Coefficient: Clone + PartialEq + fmt::Debug + Num + Neg<Output = Self> {}
impl<T: Clone + PartialEq + fmt::Debug + Num + Neg<Output = T>> Coefficient for T {}

/// A word in the letters `0..l`.
pub type Word = Vec<usize>;

/// `A1A3A2`-style name of a word; the empty word is `1`.
pub fn word_name(w: &[usize]) -> String {
    if w.is_empty() {
        return "1".to_string();
    }
    w.iter().map(|m| format!("A{}", m + 1)).collect()
}

/// Inverse of [`word_name`].
pub fn parse_word(s: &str) -> Result<Word> {
    let s = s.trim();
    if s == "1" || s.is_empty() {
        return Ok(Vec::new());
    }
    s.split('A')
        .skip(1)
        .map(|n| match n.parse::<usize>() {
            Ok(m) if m >= 1 => Ok(m - 1),
            _ => Err(Error::Parse(format!("bad word {s:?}"))),
        })
        .collect::<Result<Word>>()
        .and_then(|w| if s.starts_with('A') { Ok(w) } else { Err(Error::Parse(format!("bad word {s:?}"))) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NCSeries<T = Complex64> {
    num_vars: usize,
    depth: usize,
    /// `offsets[n]` is the index of the first word of length `n`.
    offsets: Vec<usize>,
    coeffs: Vec<T>,
}

fn offsets(l: usize, depth: usize) -> Vec<usize> {
    let mut o = Vec::with_capacity(depth + 2);
    let mut acc = 0;
    let mut p = 1;
    for _ in 0..=depth + 1 {
        o.push(acc);
        acc += p;
        p *= l;
    }
    o
}

impl<T: Coefficient> NCSeries<T> {
    /// The zero series (not a group element).
    pub fn zero(num_vars: usize, depth: usize) -> Self {
        let offsets = offsets(num_vars, depth);
        let len = offsets[depth + 1];
        NCSeries { num_vars, depth, offsets, coeffs: vec![T::zero(); len] }
    }

    /// The group identity `1`.
    pub fn identity(num_vars: usize, depth: usize) -> Self {
        let mut s = Self::zero(num_vars, depth);
        s.coeffs[0] = T::one();
        s
    }

    /// `1 + sum c_m A_m`.
    pub fn linear(depth: usize, c: &[T]) -> Self {
        let mut s = Self::identity(c.len(), depth);
        if depth >= 1 {
            for (m, x) in c.iter().enumerate() {
                s.coeffs[1 + m] = x.clone();
            }
        }
        s
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of stored words.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn index(&self, w: &[usize]) -> Result<usize> {
        if w.len() > self.depth {
            return Err(Error::ShapeMismatch(format!("word of length {} exceeds depth {}", w.len(), self.depth)));
        }
        let mut i = 0;
        for &m in w {
            if m >= self.num_vars {
                return Err(Error::ShapeMismatch(format!("letter A{} outside A1..A{}", m + 1, self.num_vars)));
            }
            i = i * self.num_vars + m;
        }
        Ok(self.offsets[w.len()] + i)
    }

    fn word_at(&self, index: usize) -> Word {
        let n = self.offsets.iter().rposition(|&o| o <= index).expect("offset 0");
        let mut r = index - self.offsets[n];
        let mut w = vec![0; n];
        for slot in w.iter_mut().rev() {
            *slot = r % self.num_vars;
            r /= self.num_vars;
        }
        w
    }

    pub fn coefficient(&self, w: &[usize]) -> Result<&T> {
        Ok(&self.coeffs[self.index(w)?])
    }

    pub fn set(&mut self, w: &[usize], value: T) -> Result<()> {
        let i = self.index(w)?;
        self.coeffs[i] = value;
        Ok(())
    }

    /// Coefficients in storage order.
    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    /// Words in storage order.
    pub fn words(&self) -> impl Iterator<Item = Word> + '_ {
        (0..self.coeffs.len()).map(|i| self.word_at(i))
    }

    /// `(word, coefficient)` pairs in storage order.
    pub fn terms(&self) -> impl Iterator<Item = (Word, &T)> + '_ {
        self.coeffs.iter().enumerate().map(|(i, c)| (self.word_at(i), c))
    }

    /// Words of exactly length `n`, as a coefficient slice.
    pub fn degree_slice(&self, n: usize) -> &[T] {
        &self.coeffs[self.offsets[n]..self.offsets[n + 1]]
    }

    pub fn is_group_like(&self) -> bool {
        self.coeffs[0] == T::one()
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.num_vars != other.num_vars || self.depth != other.depth {
            return Err(Error::ShapeMismatch(format!(
                "(l, N) = ({}, {}) vs ({}, {})",
                self.num_vars, self.depth, other.num_vars, other.depth
            )));
        }
        Ok(())
    }

    /// Product truncated at the common depth.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let l = self.num_vars;
        let mut out = Self::zero(l, self.depth);
        for dx in 0..=self.depth {
            let xs = self.degree_slice(dx);
            for dy in 0..=(self.depth - dx) {
                let ys = other.degree_slice(dy);
                let base = out.offsets[dx + dy];
                let stride = ys.len();
                for (ix, x) in xs.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for (iy, y) in ys.iter().enumerate() {
                        let slot = &mut out.coeffs[base + ix * stride + iy];
                        *slot = slot.clone() + x.clone() * y.clone();
                    }
                }
            }
        }
        Ok(out)
    }

    /// Product of a sequence, left to right.
    pub fn product<'a, I>(num_vars: usize, depth: usize, factors: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Self>,
        T: 'a,
    {
        factors.into_iter().try_fold(Self::identity(num_vars, depth), |acc, f| acc.multiply(f))
    }

    /// Group inverse, degree by degree.
    pub fn invert(&self) -> Result<Self> {
        if !self.is_group_like() {
            return Err(Error::NotGroupLike);
        }
        let l = self.num_vars;
        let mut y = Self::identity(l, self.depth);
        for n in 1..=self.depth {
            let base = y.offsets[n];
            for dx in 1..=n {
                let dy = n - dx;
                let xs: Vec<T> = self.degree_slice(dx).to_vec();
                let ys: Vec<T> = y.degree_slice(dy).to_vec();
                let stride = ys.len();
                for (ix, x) in xs.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for (iy, yv) in ys.iter().enumerate() {
                        let slot = &mut y.coeffs[base + ix * stride + iy];
                        *slot = slot.clone() - x.clone() * yv.clone();
                    }
                }
            }
        }
        Ok(y)
    }

    /// Multiplies the coefficient of each word `w` by `f(w)`.
    pub fn scale_words<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&[usize]) -> T,
    {
        let mut out = self.clone();
        for i in 0..out.coeffs.len() {
            let w = self.word_at(i);
            out.coeffs[i] = out.coeffs[i].clone() * f(&w);
        }
        out
    }

    /// Multiplies each word by `prod_j c[m_j]`, a ring endomorphism sending
    /// `A_m` to `c[m] A_m`.
    pub fn letter_scale(&self, c: &[T]) -> Result<Self> {
        if c.len() != self.num_vars {
            return Err(Error::ShapeMismatch(format!("{} letter factors for {} variables", c.len(), self.num_vars)));
        }
        Ok(self.scale_words(|w| w.iter().fold(T::one(), |acc, &m| acc * c[m].clone())))
    }

    /// Forgets words longer than `depth`.
    pub fn truncate(&self, depth: usize) -> Self {
        let depth = depth.min(self.depth);
        let offsets = offsets(self.num_vars, depth);
        let coeffs = self.coeffs[..offsets[depth + 1]].to_vec();
        NCSeries { num_vars: self.num_vars, depth, offsets, coeffs }
    }

    /// Coefficientwise sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a = a.clone() + b.clone();
        }
        Ok(out)
    }

    /// Coefficientwise difference.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a = a.clone() - b.clone();
        }
        Ok(out)
    }

    /// Builds a series from coefficients in storage order.
    pub fn from_coefficients(num_vars: usize, depth: usize, coeffs: Vec<T>) -> Result<Self> {
        let offsets = offsets(num_vars, depth);
        if coeffs.len() != offsets[depth + 1] {
            return Err(Error::ShapeMismatch(format!("{} coefficients for (l, N) = ({num_vars}, {depth})", coeffs.len())));
        }
        Ok(NCSeries { num_vars, depth, offsets, coeffs })
    }

    /// Index of the first word of length `n` in storage order.
    pub fn degree_offset(&self, n: usize) -> usize {
        self.offsets[n]
    }

    /// Builds a series from a coefficient function on words.
    pub fn from_fn<F>(num_vars: usize, depth: usize, mut f: F) -> Self
    where
        F: FnMut(&[usize]) -> T,
    {
        let mut s = Self::zero(num_vars, depth);
        for i in 0..s.coeffs.len() {
            let w = s.word_at(i);
            s.coeffs[i] = f(&w);
        }
        s
    }
}

impl NCSeries<Complex64> {
    /// `max_w |x_w - y_w|`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// `max_w |x_w - y_w| / max(|x_w|, |y_w|, floor)`.
    pub fn max_rel_diff(&self, other: &Self, floor: f64) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm() / a.norm().max(b.norm()).max(floor))
            .fold(0.0, f64::max))
    }

    /// Distance from the identity.
    pub fn distance_to_identity(&self) -> f64 {
        let id = Self::identity(self.num_vars, self.depth);
        self.max_abs_diff(&id).expect("same shape")
    }

    pub fn diagonal_scale(&self, chi: &DiagonalCharacter) -> Result<Self> {
        let inv: Vec<Complex64> = chi.values.iter().map(|v| v.inv()).collect();
        self.letter_scale(&inv)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    num_vars: usize,
    depth: usize,
    coefficients: BTreeMap<String, [f64; 2]>,
}

impl Serialize for NCSeries<Complex64> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coefficients = self.terms().map(|(w, c)| (word_name(&w), [c.re, c.im])).collect();
        SeriesRepr { num_vars: self.num_vars, depth: self.depth, coefficients }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NCSeries<Complex64> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = SeriesRepr::deserialize(d)?;
        let mut s = NCSeries::zero(repr.num_vars, repr.depth);
        for (name, [re, im]) in repr.coefficients {
            let w = parse_word(&name).map_err(D::Error::custom)?;
            s.set(&w, Complex64::new(re, im)).map_err(D::Error::custom)?;
        }
        Ok(s)
    }
}

impl fmt::Display for NCSeries<Complex64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (w, c) in self.terms() {
            writeln!(f, "{:<12} {:+.15e} {:+.15e}i", word_name(&w), c.re, c.im)?;
        }
        Ok(())
    }
}

/// Per-variable unit complex numbers `(v_1, ..., v_l)`; acts on series by
/// `A_m -> v_m^{-1} A_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalCharacter {
    pub values: Vec<Complex64>,
}

impl DiagonalCharacter {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| (v.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidArgument(format!("character value {v} is not on the unit circle")));
        }
        Ok(DiagonalCharacter { values })
    }

    pub fn trivial(l: usize) -> Self {
        DiagonalCharacter { values: vec![Complex64::new(1.0, 0.0); l] }
    }

    /// Pointwise product.
    pub fn compose(&self, other: &Self) -> Self {
        DiagonalCharacter { values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_core::{rat, Rational};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_group(l: usize, n: usize, seed: &[f64]) -> NCSeries {
        let mut it = seed.iter().cycle();
        let mut s = NCSeries::from_fn(l, n, |_| c(*it.next().unwrap(), *it.next().unwrap()));
        s.set(&[], c(1.0, 0.0)).unwrap();
        s
    }

    #[test]
    fn word_indexing() {
        let s: NCSeries = NCSeries::zero(3, 3);
        assert_eq!(s.len(), 1 + 3 + 9 + 27);
        let words: Vec<Word> = s.words().collect();
        assert_eq!(words[0], Vec::<usize>::new());
        assert_eq!(words[1], vec![0]);
        assert_eq!(words[4], vec![0, 0]);
        assert_eq!(words[5], vec![0, 1]);
        for (i, w) in words.iter().enumerate() {
            assert_eq!(s.index(w).unwrap(), i);
        }
        assert!(s.coefficient(&[0, 0, 0, 0]).is_err());
        assert!(s.coefficient(&[3]).is_err());
        assert_eq!(parse_word("A1A3A2").unwrap(), vec![0, 2, 1]);
        assert_eq!(word_name(&[0, 2, 1]), "A1A3A2");
        assert_eq!(parse_word("1").unwrap(), Vec::<usize>::new());
        assert!(parse_word("A0").is_err());
        assert!(parse_word("xA1").is_err());
    }

    #[test]
    fn two_letter_product() {
        let (a, b) = (c(2.0, 1.0), c(-0.5, 3.0));
        let x = NCSeries::linear(2, &[a, c(0.0, 0.0)]);
        let y = NCSeries::linear(2, &[c(0.0, 0.0), b]);
        let p = x.multiply(&y).unwrap();
        assert_eq!(*p.coefficient(&[0]).unwrap(), a);
        assert_eq!(*p.coefficient(&[1]).unwrap(), b);
        assert_eq!(*p.coefficient(&[0, 1]).unwrap(), a * b);
        assert_eq!(*p.coefficient(&[1, 0]).unwrap(), c(0.0, 0.0));
        assert_eq!(x.multiply(&NCSeries::identity(2, 2)).unwrap(), x);
        assert!(x.multiply(&NCSeries::identity(2, 3)).is_err());
    }

    #[test]
    fn geometric_inverse() {
        let a = rat(3, 7);
        let x: NCSeries<Rational> = NCSeries::linear(3, std::slice::from_ref(&a));
        let y = x.invert().unwrap();
        assert_eq!(*y.coefficient(&[0]).unwrap(), -a.clone());
        assert_eq!(*y.coefficient(&[0, 0]).unwrap(), a.clone() * a.clone());
        assert_eq!(*y.coefficient(&[0, 0, 0]).unwrap(), -(a.clone() * a.clone() * a));
        let id: NCSeries<Rational> = NCSeries::identity(2, 3);
        assert_eq!(id.invert().unwrap(), id);
        assert_eq!(NCSeries::<Rational>::zero(1, 1).invert(), Err(Error::NotGroupLike));
    }

    #[test]
    fn json_round_trip() {
        let x = random_group(2, 3, &[0.1, -2.5, 3.25, 1e-300, 7.0]);
        let y = NCSeries::from_json(&x.to_json()).unwrap();
        assert_eq!(x, y);
        assert!(x.to_json().contains("\"A1A2\""));
    }

    fn exact_series(l: usize, n: usize, vals: &[i64]) -> NCSeries<Rational> {
        let mut it = vals.iter().cycle();
        let mut s = NCSeries::from_fn(l, n, |_| rat(*it.next().unwrap(), 1 + it.next().unwrap().abs()));
        s.set(&[], rat(1, 1)).unwrap();
        s
    }

    proptest! {
        #[test]
        fn exact_group_axioms(l in 1usize..4, n in 0usize..4, a in prop::collection::vec(-9i64..9, 8), b in prop::collection::vec(-9i64..9, 8), d in prop::collection::vec(-9i64..9, 8)) {
            let (x, y, z) = (exact_series(l, n, &a), exact_series(l, n, &b), exact_series(l, n, &d));
            let left = x.multiply(&y).unwrap().multiply(&z).unwrap();
            let right = x.multiply(&y.multiply(&z).unwrap()).unwrap();
            prop_assert_eq!(left, right);
            let id = NCSeries::identity(l, n);
            prop_assert_eq!(x.multiply(&x.invert().unwrap()).unwrap(), id.clone());
            prop_assert_eq!(x.invert().unwrap().multiply(&x).unwrap(), id);
            // truncation is a homomorphism
            if n > 0 {
                prop_assert_eq!(x.multiply(&y).unwrap().truncate(n - 1), x.truncate(n - 1).multiply(&y.truncate(n - 1)).unwrap());
            }
        }

        #[test]
        fn numeric_inverse(seed in prop::collection::vec(-2.0f64..2.0, 10), l in 1usize..5, n in 0usize..5) {
            let x = random_group(l, n, &seed);
            let y = x.invert().unwrap();
            prop_assert!(x.multiply(&y).unwrap().distance_to_identity() < 1e-12);
            prop_assert!(y.multiply(&x).unwrap().distance_to_identity() < 1e-12);
        }

        #[test]
        fn diagonal_scale_is_automorphism(seed in prop::collection::vec(-2.0f64..2.0, 10), seed2 in prop::collection::vec(-2.0f64..2.0, 7), ph in prop::collection::vec(-3.0f64..3.0, 6)) {
            let l = 3;
            let (x, y) = (random_group(l, 3, &seed), random_group(l, 3, &seed2));
            let chi = DiagonalCharacter::new(ph[..3].iter().map(|p| Complex64::from_polar(1.0, *p)).collect()).unwrap();
            let chi2 = DiagonalCharacter::new(ph[3..].iter().map(|p| Complex64::from_polar(1.0, *p)).collect()).unwrap();
            let lhs = x.multiply(&y).unwrap().diagonal_scale(&chi).unwrap();
            let rhs = x.diagonal_scale(&chi).unwrap().multiply(&y.diagonal_scale(&chi).unwrap()).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
            let inv_first = x.invert().unwrap().diagonal_scale(&chi).unwrap();
            let scale_first = x.diagonal_scale(&chi).unwrap().invert().unwrap();
            prop_assert!(inv_first.max_abs_diff(&scale_first).unwrap() < 1e-12);
            let composed = x.diagonal_scale(&chi.compose(&chi2)).unwrap();
            let nested = x.diagonal_scale(&chi2).unwrap().diagonal_scale(&chi).unwrap();
            prop_assert!(composed.max_abs_diff(&nested).unwrap() < 1e-12);
            prop_assert_eq!(x.diagonal_scale(&DiagonalCharacter::trivial(l)).unwrap(), x);
        }
    }

    #[test]
    fn character_must_be_unitary() {
        assert!(DiagonalCharacter::new(vec![c(2.0, 0.0)]).is_err());
    }
}
