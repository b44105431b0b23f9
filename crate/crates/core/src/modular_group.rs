//! SL(2,Z) and PSL(2,Z): matrices, the generators sigma, tau, theta, Moebius
//! actions, and normal forms in the free product Z/2 * Z/3.

use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_core::Cusp;

/// An integer matrix `[[a, b], [c, d]]` with `ad - bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UniModularMatrix {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl UniModularMatrix {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        if (a as i128) * (d as i128) - (b as i128) * (c as i128) != 1 {
            return Err(Error::InvalidArgument(format!("[[{a},{b}],[{c},{d}]] has determinant != 1")));
        }
        Ok(UniModularMatrix { a, b, c, d })
    }

    pub const fn identity() -> Self {
        UniModularMatrix { a: 1, b: 0, c: 0, d: 1 }
    }

    /// `sigma = [[0, -1], [1, 0]]`, `z -> -1/z`.
    pub const fn sigma() -> Self {
        UniModularMatrix { a: 0, b: -1, c: 1, d: 0 }
    }

    /// `tau = [[0, -1], [1, -1]]`, order 3 in PSL(2,Z).
    pub const fn tau() -> Self {
        UniModularMatrix { a: 0, b: -1, c: 1, d: -1 }
    }

    /// `theta = [[1, 1], [0, 1]]`, `z -> z + 1`.
    pub const fn theta() -> Self {
        UniModularMatrix { a: 1, b: 1, c: 0, d: 1 }
    }

    pub fn theta_pow(n: i64) -> Self {
        UniModularMatrix { a: 1, b: n, c: 0, d: 1 }
    }

    /// `theta sigma theta = [[1, 0], [1, 1]]`.
    pub fn theta_sigma_theta() -> Self {
        Self::theta() * Self::sigma() * Self::theta()
    }

    pub fn inverse(&self) -> Self {
        UniModularMatrix { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn neg(&self) -> Self {
        UniModularMatrix { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::identity(), |acc, _| acc * *self)
    }

    /// Equality in PSL(2,Z), i.e. up to global sign.
    pub fn eq_psl(&self, other: &Self) -> bool {
        self == other || *self == other.neg()
    }

    /// The lift with `c > 0`, or `c = 0, d > 0`; a canonical key for PSL(2,Z).
    pub fn psl_canonical(&self) -> Self {
        if self.c > 0 || (self.c == 0 && self.d > 0) {
            *self
        } else {
            self.neg()
        }
    }

    pub fn is_identity_psl(&self) -> bool {
        self.eq_psl(&Self::identity())
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn from_entries(e: [i64; 4]) -> Result<Self> {
        Self::new(e[0], e[1], e[2], e[3])
    }

    /// Parses `"a,b,c,d"` or one of the names `id`, `sigma`, `tau`, `theta`, `tst`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "id" | "identity" => return Ok(Self::identity()),
            "sigma" | "S" => return Ok(Self::sigma()),
            "tau" | "T" => return Ok(Self::tau()),
            "theta" => return Ok(Self::theta()),
            "tst" | "theta_sigma_theta" => return Ok(Self::theta_sigma_theta()),
            _ => {}
        }
        let parts: Vec<i64> = s
            .trim_matches(|ch| ch == '[' || ch == ']')
            .split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|e| Error::Parse(format!("matrix {s:?}: {e}"))))
            .collect::<Result<_>>()?;
        if parts.len() != 4 {
            return Err(Error::Parse(format!("matrix {s:?}: expected 4 entries")));
        }
        Self::new(parts[0], parts[1], parts[2], parts[3])
    }

    /// Linear fractional action on `P^1(Q)`, exact.
    pub fn act_cusp(&self, x: &Cusp) -> Cusp {
        let (num, den) = x.homogeneous();
        let (a, b, c, d) =
            (BigInt::from(self.a), BigInt::from(self.b), BigInt::from(self.c), BigInt::from(self.d));
        Cusp::ratio_big(&a * &num + &b * &den, &c * &num + &d * &den)
    }

    /// `(az + b)/(cz + d)`; preserves each half-plane.
    pub fn act_moebius(&self, z: Complex64) -> Result<Complex64> {
        let den = self.bare_factor(z);
        if den == Complex64::new(0.0, 0.0) {
            return Err(Error::Pole(format!("{z} under {self}")));
        }
        Ok((z * self.a as f64 + self.b as f64) / den)
    }

    /// The bare factor `j(gamma, z) = cz + d`.
    pub fn bare_factor(&self, z: Complex64) -> Complex64 {
        z * self.c as f64 + self.d as f64
    }
}

impl Mul for UniModularMatrix {
    type Output = UniModularMatrix;

    fn mul(self, o: Self) -> Self {
        UniModularMatrix {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

impl fmt::Display for UniModularMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl Serialize for UniModularMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries().serialize(s)
    }
}

impl<'de> Deserialize<'de> for UniModularMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let e = <[i64; 4]>::deserialize(d)?;
        Self::from_entries(e).map_err(serde::de::Error::custom)
    }
}

/// A letter of the free product: `sigma`, `tau` or `tau^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    S,
    T,
    T2,
}

impl Letter {
    pub fn matrix(self) -> UniModularMatrix {
        match self {
            Letter::S => UniModularMatrix::sigma(),
            Letter::T => UniModularMatrix::tau(),
            Letter::T2 => UniModularMatrix::tau() * UniModularMatrix::tau(),
        }
    }

    pub fn inverse(self) -> Letter {
        match self {
            Letter::S => Letter::S,
            Letter::T => Letter::T2,
            Letter::T2 => Letter::T,
        }
    }

    fn tau_exponent(self) -> Option<u8> {
        match self {
            Letter::S => None,
            Letter::T => Some(1),
            Letter::T2 => Some(2),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Letter::S => "S",
            Letter::T => "T",
            Letter::T2 => "T2",
        })
    }
}

/// Reduced word in `sigma`, `tau`, `tau^2`: no two adjacent letters from the
/// same cyclic factor. The empty word is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct GroupWord(Vec<Letter>);

impl GroupWord {
    pub fn empty() -> Self {
        GroupWord(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Builds the reduced form of an arbitrary letter sequence.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut w = GroupWord::empty();
        for l in letters {
            w.push(l);
        }
        w
    }

    /// Right-multiplies by a letter, keeping the word reduced.
    pub fn push(&mut self, l: Letter) {
        match (self.0.last().copied(), l) {
            (Some(Letter::S), Letter::S) => {
                self.0.pop();
            }
            (Some(top), _) if top.tau_exponent().is_some() && l.tau_exponent().is_some() => {
                let e = (top.tau_exponent().unwrap() + l.tau_exponent().unwrap()) % 3;
                self.0.pop();
                match e {
                    1 => self.0.push(Letter::T),
                    2 => self.0.push(Letter::T2),
                    _ => {}
                }
            }
            _ => self.0.push(l),
        }
    }

    pub fn concat(&self, other: &GroupWord) -> GroupWord {
        let mut w = self.clone();
        for &l in &other.0 {
            w.push(l);
        }
        w
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|p| p[0].tau_exponent().is_some() != p[1].tau_exponent().is_some())
    }

    /// Product of the letter matrices, a lift of the PSL(2,Z) element.
    pub fn recompose(&self) -> UniModularMatrix {
        self.0.iter().fold(UniModularMatrix::identity(), |acc, l| acc * l.matrix())
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        f.write_str(&parts.join("."))
    }
}

fn push_theta_power(w: &mut GroupWord, n: i64) {
    // theta = tau^2 sigma and theta^{-1} = sigma tau in PSL(2,Z)
    let letters: [Letter; 2] = if n > 0 { [Letter::T2, Letter::S] } else { [Letter::S, Letter::T] };
    for _ in 0..n.unsigned_abs() {
        for l in letters {
            w.push(l);
        }
    }
}

/// Normal form of `+-gamma` in `Z/2 * Z/3`, found by Euclidean descent on the
/// first column: `gamma = theta^n sigma gamma'` with a strictly smaller lower-left entry.
pub fn decompose(gamma: &UniModularMatrix) -> GroupWord {
    let mut word = GroupWord::empty();
    let mut m = *gamma;
    while m.c != 0 {
        let n = m.a.div_euclid(m.c.abs()) * m.c.signum();
        let a1 = m.a - n * m.c;
        let b1 = m.b - n * m.d;
        push_theta_power(&mut word, n);
        word.push(Letter::S);
        // sigma^{-1} [[a1, b1], [c, d]] = [[c, d], [-a1, -b1]]
        m = UniModularMatrix { a: m.c, b: m.d, c: -a1, d: -b1 };
    }
    // m = +-[[1, n], [0, 1]]
    push_theta_power(&mut word, m.b * m.d);
    word
}

/// A random element of SL(2,Z) built from `len` random letters among
/// `sigma`, `theta`, `theta^{-1}`.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, len: usize) -> UniModularMatrix {
    let mut m = UniModularMatrix::identity();
    for _ in 0..len {
        let g = match rng.gen_range(0..4) {
            0 => UniModularMatrix::sigma(),
            1 => UniModularMatrix::theta(),
            2 => UniModularMatrix::theta().inverse(),
            _ => UniModularMatrix::tau(),
        };
        m = m * g;
    }
    if rng.gen_bool(0.5) {
        m.neg()
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type M = UniModularMatrix;

    #[test]
    fn generator_relations() {
        let id = M::identity();
        assert_eq!(M::sigma() * M::sigma(), id.neg());
        assert_eq!(M::tau().pow(3), id);
        // theta = tau^{-1} sigma
        assert!((M::tau().inverse() * M::sigma()).eq_psl(&M::theta()));
        assert_eq!(M::theta_sigma_theta(), M::new(1, 0, 1, 1).unwrap());
    }

    #[test]
    fn cusp_action_examples() {
        assert_eq!(M::sigma().act_cusp(&Cusp::zero()), Cusp::Infinity);
        let ti = M::theta().inverse();
        assert_eq!(ti.act_cusp(&Cusp::zero()), Cusp::integer(-1));
        assert_eq!(ti.act_cusp(&Cusp::Infinity), Cusp::Infinity);
        let tsti = M::theta_sigma_theta().inverse();
        assert_eq!(tsti.act_cusp(&Cusp::Infinity), Cusp::integer(-1));
        assert_eq!(tsti.act_cusp(&Cusp::zero()), Cusp::zero());
        // tau: 0 -> 1 -> inf -> 0
        assert_eq!(M::tau().act_cusp(&Cusp::zero()), Cusp::integer(1));
        assert_eq!(M::tau().act_cusp(&Cusp::integer(1)), Cusp::Infinity);
        assert_eq!(M::tau().act_cusp(&Cusp::Infinity), Cusp::zero());
    }

    #[test]
    fn moebius_examples() {
        let t = Complex64::new(0.3, -1.7);
        assert!((M::theta().act_moebius(t).unwrap() - (t + 1.0)).norm() < 1e-15);
        let r = M::theta_sigma_theta().act_moebius(t).unwrap();
        assert!((r - t / (t + 1.0)).norm() < 1e-15);
        let i = Complex64::new(0.0, 1.0);
        assert_eq!(M::identity().act_moebius(i).unwrap(), i);
        assert!(M::sigma().act_moebius(Complex64::new(0.0, 0.0)).is_err());
        let z = Complex64::new(-0.2, 0.01);
        assert!(M::new(3, 1, 2, 1).unwrap().act_moebius(z).unwrap().im > 0.0);
    }

    #[test]
    fn decompose_examples() {
        assert!(decompose(&M::identity()).is_empty());
        assert_eq!(decompose(&M::sigma()).letters(), &[Letter::S]);
        assert_eq!(decompose(&M::tau()).letters(), &[Letter::T]);
        let w = decompose(&M::theta());
        assert!(w.recompose().eq_psl(&M::theta()));
        assert_eq!(w.letters(), &[Letter::T2, Letter::S]);
    }

    #[test]
    fn decompose_recompose_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let len = rng.gen_range(0..25);
            let g = random_matrix(&mut rng, len);
            let w = decompose(&g);
            assert!(w.is_reduced());
            assert!(w.recompose().eq_psl(&g), "{g} -> {w}");
            assert_eq!(decompose(&w.recompose()), w);
        }
    }

    #[test]
    fn reduced_words_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let raw: Vec<Letter> =
                (0..rng.gen_range(0..20)).map(|_| [Letter::S, Letter::T, Letter::T2][rng.gen_range(0..3)]).collect();
            let w = GroupWord::from_letters(raw);
            assert_eq!(decompose(&w.recompose()), w);
        }
    }

    #[test]
    fn cusp_action_is_left_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let g = random_matrix(&mut rng, 8);
            let h = random_matrix(&mut rng, 8);
            let x = Cusp::ratio(rng.gen_range(-30..30), rng.gen_range(0..30));
            assert_eq!((g * h).act_cusp(&x), g.act_cusp(&h.act_cusp(&x)));
        }
    }

    #[test]
    fn parse_and_serde() {
        assert_eq!(M::parse("0,-1,1,0").unwrap(), M::sigma());
        assert_eq!(M::parse("[1,1,0,1]").unwrap(), M::theta());
        assert!(M::parse("1,2,3,4").is_err());
        let js = serde_json::to_string(&M::tau()).unwrap();
        assert_eq!(js, "[0,-1,1,-1]");
        assert_eq!(serde_json::from_str::<M>(&js).unwrap(), M::tau());
    }
}
