//! Reciprocity functions, Dedekind symbols and 1-cocycles of `PSL(2,Z)` with
//! values in arbitrary, possibly noncommutative, groups.
//!
//! A coefficient group is a value implementing [`CoefficientGroup`]; its
//! elements are plain data. A [`GammaModule`] adds a left action of the
//! modular group, and the right action `g|gamma := gamma^{-1} g` comes for free.
//!
//! Instances:
//! - [`FreeGroup`] on any generator type, exact in reduced-word normal form;
//!   on cusps it is a module by permuting generators,
//! - [`RationalAdditive`] and [`ComplexAdditive`],
//! - [`SeriesGroup`], group-like truncated noncommutative series,
//! - [`FunctionModule`], maps `P^1(Q) -> G_0` with `(gamma f)(x) = f(gamma^{-1} x)`,
//! - [`PathModule`], formal products of path series `J_a^b` with
//!   `gamma J_a^b = J_{gamma a}^{gamma b}`.

use std::collections::HashMap;
use std::fmt;
use std::marker::PhantomData;
use std::sync::{Arc, Mutex, RwLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_core::{format_rational, normalize, Cusp, Rational};
use crate::forms::CuspForm;
use crate::iterated_periods::{transport, transport_cached, FormFamily, TransportConfig};
use crate::modular_group::{decompose, random_matrix, Letter, UniModularMatrix};
use crate::nc_series::NCSeries;
use crate::quadrature::{integrate_along, Endpoint, GeodesicPath, PeriodCache, QuadratureConfig};

/// A group given by its operations. Elements carry no reference to the group.
pub trait CoefficientGroup: Send + Sync {
    type Element: Clone + fmt::Debug + Send + Sync;

    fn identity(&self) -> Self::Element;
    fn multiply(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn invert(&self, a: &Self::Element) -> Self::Element;
    /// `0` iff equal in exact groups; a norm of the difference otherwise.
    fn distance(&self, a: &Self::Element, b: &Self::Element) -> f64;
    /// Size used to normalize residuals; `0` means "do not normalize".
    fn magnitude(&self, _a: &Self::Element) -> f64 {
        0.0
    }
    fn is_exact(&self) -> bool;
    fn render(&self, a: &Self::Element) -> String;

    fn product<'a, I>(&self, factors: I) -> Self::Element
    where
        I: IntoIterator<Item = &'a Self::Element>,
        Self::Element: 'a,
    {
        factors.into_iter().fold(self.identity(), |acc, x| self.multiply(&acc, x))
    }
}

/// A coefficient group with a left action of `PSL(2,Z)` by automorphisms.
pub trait GammaModule: CoefficientGroup {
    fn left_act(&self, gamma: &UniModularMatrix, a: &Self::Element) -> Self::Element;

    /// The paired right action `g|gamma = gamma^{-1} g`.
    fn right_act(&self, a: &Self::Element, gamma: &UniModularMatrix) -> Self::Element {
        self.left_act(&gamma.inverse(), a)
    }
}

// ---------------------------------------------------------------------------
// Free groups

/// Reduced word `g_1^{e_1} ... g_n^{e_n}`: no zero exponents, no equal neighbours.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FreeElement<G>(Vec<(G, i64)>);

impl<G: Clone + Eq> FreeElement<G> {
    pub fn identity() -> Self {
        FreeElement(Vec::new())
    }

    pub fn generator(g: G) -> Self {
        FreeElement(vec![(g, 1)])
    }

    pub fn power(g: G, e: i64) -> Self {
        let mut w = Self::identity();
        w.push(g, e);
        w
    }

    pub fn syllables(&self) -> &[(G, i64)] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    /// Word length `sum |e_i|`.
    pub fn length(&self) -> u64 {
        self.0.iter().map(|(_, e)| e.unsigned_abs()).sum()
    }

    fn push(&mut self, g: G, e: i64) {
        if e == 0 {
            return;
        }
        if let Some(last) = self.0.last_mut() {
            if last.0 == g {
                last.1 += e;
                if last.1 == 0 {
                    self.0.pop();
                }
                return;
            }
        }
        self.0.push((g, e));
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut w = self.clone();
        for (g, e) in &other.0 {
            w.push(g.clone(), *e);
        }
        w
    }

    pub fn inv(&self) -> Self {
        FreeElement(self.0.iter().rev().map(|(g, e)| (g.clone(), -e)).collect())
    }

    /// Applies `phi` to every generator and reduces.
    pub fn map_generators<F: FnMut(&G) -> G>(&self, mut phi: F) -> Self {
        let mut w = Self::identity();
        for (g, e) in &self.0 {
            w.push(phi(g), *e);
        }
        w
    }
}

impl<G: fmt::Display> fmt::Display for FreeElement<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, (g, e)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if *e == 1 {
                write!(f, "x[{g}]")?;
            } else {
                write!(f, "x[{g}]^{e}")?;
            }
        }
        Ok(())
    }
}

/// The free group on generators of type `G`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FreeGroup<G>(PhantomData<fn() -> G>);

impl<G> FreeGroup<G> {
    pub fn new() -> Self {
        FreeGroup(PhantomData)
    }
}

impl<G> CoefficientGroup for FreeGroup<G>
where
    G: Clone + Eq + fmt::Debug + fmt::Display + Send + Sync,
{
    type Element = FreeElement<G>;

    fn identity(&self) -> Self::Element {
        FreeElement::identity()
    }

    fn multiply(&self, a: &Self::Element, b: &Self::Element) -> Self::Element {
        a.mul(b)
    }

    fn invert(&self, a: &Self::Element) -> Self::Element {
        a.inv()
    }

    fn distance(&self, a: &Self::Element, b: &Self::Element) -> f64 {
        if a == b {
            0.0
        } else {
            1.0
        }
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn render(&self, a: &Self::Element) -> String {
        a.to_string()
    }
}

/// Free group on the cusps, with `gamma x_c = x_{gamma c}`.
impl GammaModule for FreeGroup<Cusp> {
    fn left_act(&self, gamma: &UniModularMatrix, a: &Self::Element) -> Self::Element {
        a.map_generators(|c| gamma.act_cusp(c))
    }
}

/// A random element of the free group on cusps: `len` syllables with
/// generators among `r/s`, `|r|, |s| <= height`, and exponents `+-1, +-2`.
pub fn random_free_cusp_element<R: Rng + ?Sized>(rng: &mut R, len: usize, height: i64) -> FreeElement<Cusp> {
    let mut w = FreeElement::identity();
    for _ in 0..len {
        let c = loop {
            let s = rng.gen_range(0..=height);
            let r = rng.gen_range(-height..=height);
            if s == 0 && r != 0 {
                break Cusp::Infinity;
            }
            if s != 0 && r.gcd(&s) == 1 {
                break Cusp::ratio(r, s);
            }
        };
        let e = [-2, -1, 1, 2][rng.gen_range(0..4)];
        w.push(c, e);
    }
    w
}

// ---------------------------------------------------------------------------
// Additive groups and series

/// `(Q, +)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RationalAdditive;

impl CoefficientGroup for RationalAdditive {
    type Element = Rational;

    fn identity(&self) -> Rational {
        Rational::zero()
    }

    fn multiply(&self, a: &Rational, b: &Rational) -> Rational {
        a + b
    }

    fn invert(&self, a: &Rational) -> Rational {
        -a
    }

    fn distance(&self, a: &Rational, b: &Rational) -> f64 {
        (a - b).abs().to_f64().unwrap_or(f64::INFINITY)
    }

    fn magnitude(&self, a: &Rational) -> f64 {
        a.abs().to_f64().unwrap_or(f64::INFINITY)
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn render(&self, a: &Rational) -> String {
        format_rational(a)
    }
}

/// `(C, +)` in double precision. Residuals are normalized by at least `floor`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexAdditive {
    pub floor: f64,
}

impl CoefficientGroup for ComplexAdditive {
    type Element = Complex64;

    fn identity(&self) -> Complex64 {
        Complex64::zero()
    }

    fn multiply(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        a + b
    }

    fn invert(&self, a: &Complex64) -> Complex64 {
        -a
    }

    fn distance(&self, a: &Complex64, b: &Complex64) -> f64 {
        (a - b).norm()
    }

    fn magnitude(&self, a: &Complex64) -> f64 {
        a.norm().max(self.floor)
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn render(&self, a: &Complex64) -> String {
        format!("{:.17e}{:+.17e}i", a.re, a.im)
    }
}

/// Group-like series in `num_vars` letters truncated at `depth`.
#[derive(Debug, Clone, Copy)]
pub struct SeriesGroup {
    pub num_vars: usize,
    pub depth: usize,
}

impl CoefficientGroup for SeriesGroup {
    type Element = NCSeries;

    fn identity(&self) -> NCSeries {
        NCSeries::identity(self.num_vars, self.depth)
    }

    fn multiply(&self, a: &NCSeries, b: &NCSeries) -> NCSeries {
        a.multiply(b).expect("series of one group share their shape")
    }

    fn invert(&self, a: &NCSeries) -> NCSeries {
        a.invert().expect("group elements have unit constant term")
    }

    /// Largest `|a_w - b_w| / max(1, |a_w|, |b_w|)`.
    fn distance(&self, a: &NCSeries, b: &NCSeries) -> f64 {
        relative_gap(a, b, None)
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn render(&self, a: &NCSeries) -> String {
        a.to_json()
    }
}

/// Any group with the trivial action.
#[derive(Debug, Clone, Copy, Default)]
pub struct Trivial<G>(pub G);

impl<G: CoefficientGroup> CoefficientGroup for Trivial<G> {
    type Element = G::Element;

    fn identity(&self) -> Self::Element {
        self.0.identity()
    }
    fn multiply(&self, a: &Self::Element, b: &Self::Element) -> Self::Element {
        self.0.multiply(a, b)
    }
    fn invert(&self, a: &Self::Element) -> Self::Element {
        self.0.invert(a)
    }
    fn distance(&self, a: &Self::Element, b: &Self::Element) -> f64 {
        self.0.distance(a, b)
    }
    fn magnitude(&self, a: &Self::Element) -> f64 {
        self.0.magnitude(a)
    }
    fn is_exact(&self) -> bool {
        self.0.is_exact()
    }
    fn render(&self, a: &Self::Element) -> String {
        self.0.render(a)
    }
}

impl<G: CoefficientGroup> GammaModule for Trivial<G> {
    fn left_act(&self, _gamma: &UniModularMatrix, a: &Self::Element) -> Self::Element {
        a.clone()
    }
}

fn relative_gap(a: &NCSeries, b: &NCSeries, scale: Option<&[f64]>) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let (x, y) = (a.coefficients(), b.coefficients());
    (0..x.len())
        .map(|i| {
            let s = scale.map_or(0.0, |s| s[i]).max(x[i].norm()).max(y[i].norm()).max(1.0);
            (x[i] - y[i]).norm() / s
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Function module

type CuspMap<E> = dyn Fn(&Cusp) -> Result<E> + Send + Sync;

/// A map `P^1(Q) -> G_0`, evaluated lazily.
#[derive(Clone)]
pub struct CuspFunction<E>(Arc<CuspMap<E>>);

impl<E> CuspFunction<E> {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&Cusp) -> Result<E> + Send + Sync + 'static,
    {
        CuspFunction(Arc::new(f))
    }

    pub fn at(&self, x: &Cusp) -> Result<E> {
        (self.0)(x)
    }
}

impl<E> fmt::Debug for CuspFunction<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CuspFunction(..)")
    }
}

/// Maps `P^1(Q) -> G_0` with pointwise product and `(gamma f)(x) = f(gamma^{-1} x)`.
/// Equality is decided on the finite `sample` of cusps.
pub struct FunctionModule<G0> {
    pub base: Arc<G0>,
    pub sample: Vec<Cusp>,
}

impl<G0: CoefficientGroup + 'static> FunctionModule<G0> {
    /// Samples `inf` and every reduced `q/p` with `1 <= p <= bound`, `|q| <= bound`.
    pub fn new(base: G0, bound: i64) -> Self {
        Self::shared(Arc::new(base), bound)
    }

    pub fn shared(base: Arc<G0>, bound: i64) -> Self {
        let mut sample = vec![Cusp::Infinity];
        for p in 1..=bound {
            for q in -bound..=bound {
                if q.gcd(&p) == 1 {
                    sample.push(Cusp::ratio(q, p));
                }
            }
        }
        FunctionModule { base, sample }
    }

    fn compare<F: Fn(&G0::Element, &G0::Element) -> f64>(
        &self,
        a: &CuspFunction<G0::Element>,
        b: &CuspFunction<G0::Element>,
        f: F,
    ) -> f64 {
        self.sample
            .iter()
            .map(|x| match (a.at(x), b.at(x)) {
                (Ok(u), Ok(v)) => f(&u, &v),
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }
}

impl<G0: CoefficientGroup + 'static> CoefficientGroup for FunctionModule<G0> {
    type Element = CuspFunction<G0::Element>;

    fn identity(&self) -> Self::Element {
        let g = self.base.clone();
        CuspFunction::new(move |_| Ok(g.identity()))
    }

    fn multiply(&self, a: &Self::Element, b: &Self::Element) -> Self::Element {
        let (g, a, b) = (self.base.clone(), a.clone(), b.clone());
        CuspFunction::new(move |x| Ok(g.multiply(&a.at(x)?, &b.at(x)?)))
    }

    fn invert(&self, a: &Self::Element) -> Self::Element {
        let (g, a) = (self.base.clone(), a.clone());
        CuspFunction::new(move |x| Ok(g.invert(&a.at(x)?)))
    }

    fn distance(&self, a: &Self::Element, b: &Self::Element) -> f64 {
        self.compare(a, b, |u, v| self.base.distance(u, v))
    }

    fn magnitude(&self, a: &Self::Element) -> f64 {
        self.compare(a, a, |u, _| self.base.magnitude(u))
    }

    fn is_exact(&self) -> bool {
        self.base.is_exact()
    }

    fn render(&self, a: &Self::Element) -> String {
        let parts: Vec<String> = self
            .sample
            .iter()
            .map(|x| match a.at(x) {
                Ok(v) => format!("{x}: {}", self.base.render(&v)),
                Err(e) => format!("{x}: error {e}"),
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

impl<G0: CoefficientGroup + 'static> GammaModule for FunctionModule<G0> {
    fn left_act(&self, gamma: &UniModularMatrix, a: &Self::Element) -> Self::Element {
        let (inv, a) = (gamma.inverse(), a.clone());
        CuspFunction::new(move |x| a.at(&inv.act_cusp(x)))
    }
}

// ---------------------------------------------------------------------------
// Path module

/// A formal product `J_{a_1}^{b_1} J_{a_2}^{b_2} ...` of path series,
/// stored as `(a_i, b_i)` in product order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PathWord(pub Vec<(Cusp, Cusp)>);

impl PathWord {
    /// The single factor `J_a^b`.
    pub fn segment(a: Cusp, b: Cusp) -> Self {
        PathWord(vec![(a, b)])
    }
}

impl fmt::Display for PathWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self.0.iter().map(|(a, b)| format!("J[{a}->{b}]")).collect();
        f.write_str(&parts.join(" "))
    }
}

/// The group generated by the series `J_a^b(Omega; t)` at fixed `t`, with
/// `gamma J_a^b = J_{gamma a}^{gamma b}`; `t` is not moved.
///
/// Products are kept formal, so relations among path series are tested on
/// independently transported factors rather than by cancelling segments.
pub struct PathModule {
    pub family: FormFamily,
    pub t: Complex64,
    pub depth: usize,
    pub config: TransportConfig,
    cache: Option<Arc<PeriodCache>>,
    memo: Mutex<HashMap<(String, String), NCSeries>>,
}

impl PathModule {
    pub fn new(family: FormFamily, t: Complex64, depth: usize, config: TransportConfig) -> Result<Self> {
        if t.im >= 0.0 {
            return Err(Error::InvalidArgument(format!("path module needs t in the lower half plane, got {t}")));
        }
        Ok(PathModule { family, t, depth, config, cache: None, memo: Mutex::new(HashMap::new()) })
    }

    pub fn with_cache(mut self, cache: Arc<PeriodCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn group(&self) -> SeriesGroup {
        SeriesGroup { num_vars: self.family.len(), depth: self.depth }
    }

    /// `J_a^b(Omega; t)`, memoized.
    pub fn segment(&self, a: &Cusp, b: &Cusp) -> Result<NCSeries> {
        let key = (a.to_string(), b.to_string());
        if let Some(s) = self.memo.lock().unwrap().get(&key) {
            return Ok(s.clone());
        }
        let (ea, eb) = (Endpoint::Cusp(a.clone()), Endpoint::Cusp(b.clone()));
        let value = match &self.cache {
            Some(c) => transport_cached(c, &self.family, &ea, &eb, self.t, self.depth, &self.config)?,
            None => transport(&self.family, &ea, &eb, self.t, self.depth, &self.config)?,
        };
        self.memo.lock().unwrap().insert(key, value.series.clone());
        Ok(value.series)
    }

    /// Transports every distinct factor of `words` in parallel.
    pub fn prefetch<'a, I: IntoIterator<Item = &'a PathWord>>(&self, words: I) -> Result<()> {
        let mut todo: Vec<(Cusp, Cusp)> = words.into_iter().flat_map(|w| w.0.iter().cloned()).collect();
        todo.sort_by_key(|(a, b)| (a.to_string(), b.to_string()));
        todo.dedup();
        todo.par_iter().try_for_each(|(a, b)| self.segment(a, b).map(|_| ()))
    }

    pub fn evaluate(&self, w: &PathWord) -> Result<NCSeries> {
        let mut acc = NCSeries::identity(self.family.len(), self.depth);
        for (a, b) in &w.0 {
            acc = acc.multiply(&self.segment(a, b)?)?;
        }
        Ok(acc)
    }

    /// The product of the factors with every coefficient replaced by its
    /// modulus: a bound for each coefficient of [`PathModule::evaluate`].
    pub fn evaluate_magnitude(&self, w: &PathWord) -> Result<Vec<f64>> {
        let mut acc = NCSeries::identity(self.family.len(), self.depth);
        for (a, b) in &w.0 {
            let s = self.segment(a, b)?;
            let abs = s.coefficients().iter().map(|c| Complex64::new(c.norm(), 0.0)).collect();
            acc = acc.multiply(&NCSeries::from_coefficients(s.num_vars(), s.depth(), abs)?)?;
        }
        Ok(acc.coefficients().iter().map(|c| c.re).collect())
    }
}

impl CoefficientGroup for PathModule {
    type Element = PathWord;

    fn identity(&self) -> PathWord {
        PathWord::default()
    }

    fn multiply(&self, a: &PathWord, b: &PathWord) -> PathWord {
        PathWord(a.0.iter().chain(&b.0).cloned().collect())
    }

    fn invert(&self, a: &PathWord) -> PathWord {
        PathWord(a.0.iter().rev().map(|(x, y)| (y.clone(), x.clone())).collect())
    }

    /// Per word, `|a_w - b_w|` relative to the larger of the two modulus
    /// products (at least 1), since long products of path series carry
    /// cancellation.
    fn distance(&self, a: &PathWord, b: &PathWord) -> f64 {
        let gap = || -> Result<f64> {
            let (ma, mb) = (self.evaluate_magnitude(a)?, self.evaluate_magnitude(b)?);
            let scale: Vec<f64> = ma.iter().zip(&mb).map(|(x, y)| x.max(*y)).collect();
            Ok(relative_gap(&self.evaluate(a)?, &self.evaluate(b)?, Some(&scale)))
        };
        gap().unwrap_or(f64::INFINITY)
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn render(&self, a: &PathWord) -> String {
        a.to_string()
    }
}

impl GammaModule for PathModule {
    fn left_act(&self, gamma: &UniModularMatrix, a: &PathWord) -> PathWord {
        PathWord(a.0.iter().map(|(x, y)| (gamma.act_cusp(x), gamma.act_cusp(y))).collect())
    }
}

// ---------------------------------------------------------------------------
// Reciprocity functions and Dedekind symbols

type PairMap<E> = dyn Fn(i64, i64) -> Result<E> + Send + Sync;

/// A map on coprime pairs `(p, q)` with values in `group`.
pub struct ReciprocityFunction<G: CoefficientGroup> {
    pub group: Arc<G>,
    map: Arc<PairMap<G::Element>>,
    overrides: Arc<HashMap<(i64, i64), G::Element>>,
}

impl<G: CoefficientGroup> Clone for ReciprocityFunction<G> {
    fn clone(&self) -> Self {
        ReciprocityFunction { group: self.group.clone(), map: self.map.clone(), overrides: self.overrides.clone() }
    }
}

impl<G: CoefficientGroup + 'static> ReciprocityFunction<G> {
    pub fn new<F>(group: G, f: F) -> Self
    where
        F: Fn(i64, i64) -> Result<G::Element> + Send + Sync + 'static,
    {
        ReciprocityFunction { group: Arc::new(group), map: Arc::new(f), overrides: Arc::new(HashMap::new()) }
    }

    /// The constant map to `1_G`.
    pub fn identity(group: G) -> Self {
        let g = Arc::new(group);
        let inner = g.clone();
        ReciprocityFunction { group: g, map: Arc::new(move |_, _| Ok(inner.identity())), overrides: Arc::new(HashMap::new()) }
    }

    pub fn value(&self, p: i64, q: i64) -> Result<G::Element> {
        normalize(p, q)?;
        if let Some(v) = self.overrides.get(&(p, q)) {
            return Ok(v.clone());
        }
        (self.map)(p, q)
    }

    /// A copy whose value at exactly the representative `(p, q)` is replaced.
    pub fn with_override(&self, p: i64, q: i64, value: G::Element) -> Self {
        let mut o = (*self.overrides).clone();
        o.insert((p, q), value);
        ReciprocityFunction { group: self.group.clone(), map: self.map.clone(), overrides: Arc::new(o) }
    }
}

/// The classical reciprocity function of the Dedekind sums: for `p, q > 0`
/// it is `(p^2 + q^2 - 3pq + 1)/(12pq)`, other signs follow from
/// `f(-p,-q) = f(p,q)` and `f(p,q) + f(-q,p) = 0`, and `f(1,0) = f(0,1) = 0`.
pub fn classical_reciprocity() -> ReciprocityFunction<RationalAdditive> {
    fn f(p: i64, q: i64) -> Rational {
        if p < 0 {
            return f(-p, -q);
        }
        if p == 0 || q == 0 {
            return Rational::zero();
        }
        if q < 0 {
            return -f(-q, p);
        }
        let (p, q) = (BigInt::from(p), BigInt::from(q));
        Rational::new(&p * &p + &q * &q - BigInt::from(3) * &p * &q + 1, BigInt::from(12) * p * q)
    }
    ReciprocityFunction::new(RationalAdditive, |p, q| Ok(f(p, q)))
}

/// The free class `x_{[q/p mod 1]}` of `(p, q)`, the most general value a
/// symbol can take while respecting periodicity and the sign rule.
pub fn free_symbol_class(p: i64, q: i64) -> Result<FreeElement<Cusp>> {
    let pair = normalize(p, q)?;
    let c = match pair.cusp() {
        Cusp::Infinity => Cusp::Infinity,
        Cusp::Finite(x) => Cusp::Finite(&x - x.floor()),
    };
    Ok(FreeElement::generator(c))
}

/// `f(p,q) = D_0(p,q) D_0(q,-p)^{-1}` for the free symbol [`free_symbol_class`];
/// a reciprocity function with no relations beyond the defining ones.
pub fn free_reciprocity() -> ReciprocityFunction<FreeGroup<Cusp>> {
    ReciprocityFunction::new(FreeGroup::new(), |p, q| Ok(free_symbol_class(p, q)?.mul(&free_symbol_class(q, -p)?.inv())))
}

/// The additive function `f(p,q) = int_0^{i inf} F(z) (pz - q)^k dz` of a
/// cusp form of integral weight with trivial multiplier. Residuals are
/// floored at the largest moment, since `f` vanishes at some pairs.
pub fn period_reciprocity(form: &CuspForm, config: &QuadratureConfig) -> Result<ReciprocityFunction<ComplexAdditive>> {
    let k = form.k();
    let trivial = [UniModularMatrix::sigma(), UniModularMatrix::tau()]
        .iter()
        .all(|g| (form.multiplier.value(g) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    if k < 0.0 || k.fract() != 0.0 || !trivial {
        return Err(Error::InvalidArgument(format!("needs integral k >= 0 and trivial multiplier, got k = {k}")));
    }
    let k = k as usize;
    let path = GeodesicPath::new(Endpoint::integer(0), Endpoint::infinity())?;
    let moments = (0..=k)
        .map(|j| Ok(integrate_along(&path, |z| Ok(form.value(z)? * z.powu(j as u32)), config)?.value))
        .collect::<Result<Vec<Complex64>>>()?;
    let binom: Vec<f64> = (0..=k).scan(1.0, |c, j| {
        let out = *c;
        *c = *c * (k - j) as f64 / (j + 1) as f64;
        Some(out)
    }).collect();
    let floor = moments.iter().map(|m| m.norm()).fold(0.0, f64::max);
    Ok(ReciprocityFunction::new(ComplexAdditive { floor }, move |p, q| {
        let (p, mq) = (p as f64, -q as f64);
        Ok((0..=k).map(|j| moments[j] * binom[j] * p.powi(j as i32) * mq.powi((k - j) as i32)).sum())
    }))
}

/// All coprime `(p, q)` with `|p|, |q| <= bound`.
pub fn coprime_pairs(bound: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for p in -bound..=bound {
        for q in -bound..=bound {
            if p.gcd(&q) == 1 {
                out.push((p, q));
            }
        }
    }
    out
}

/// One failed instance of a functional equation.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub relation: &'static str,
    pub p: i64,
    pub q: i64,
    /// Every pair whose value enters this instance.
    pub arguments: Vec<(i64, i64)>,
    pub residual: f64,
}

impl Violation {
    pub fn involves(&self, p: i64, q: i64) -> bool {
        self.arguments.contains(&(p, q))
    }
}

/// Outcome of checking functional equations on a finite grid.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub bound: i64,
    pub tolerance: f64,
    pub instances: usize,
    pub max_residual: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Left side, right side and the arguments of one relation instance.
type Sides<E> = (E, E, Vec<E>);

struct Checker<'a, G: CoefficientGroup> {
    group: &'a G,
    tolerance: f64,
    instances: usize,
    max_residual: f64,
    violations: Vec<Violation>,
}

impl<'a, G: CoefficientGroup> Checker<'a, G> {
    fn new(group: &'a G, tolerance: f64) -> Self {
        Checker { group, tolerance, instances: 0, max_residual: 0.0, violations: Vec::new() }
    }

    /// Records `lhs = rhs`, normalized by the largest factor involved.
    fn record(
        &mut self,
        relation: &'static str,
        (p, q): (i64, i64),
        arguments: Vec<(i64, i64)>,
        sides: Result<Sides<G::Element>>,
    ) {
        self.instances += 1;
        let residual = match sides {
            Ok((lhs, rhs, factors)) => {
                let scale = factors.iter().map(|x| self.group.magnitude(x)).fold(0.0, f64::max);
                let d = self.group.distance(&lhs, &rhs);
                if scale > 0.0 { d / scale } else { d }
            }
            Err(_) => f64::INFINITY,
        };
        if residual.is_nan() || residual > self.tolerance {
            self.violations.push(Violation { relation, p, q, arguments, residual });
        }
        if residual > self.max_residual || residual.is_nan() {
            self.max_residual = residual;
        }
    }

    fn finish(self, bound: i64) -> ValidationReport {
        ValidationReport {
            bound,
            tolerance: self.tolerance,
            instances: self.instances,
            max_residual: self.max_residual,
            violations: self.violations,
        }
    }
}

/// Checks `f(p,-q) = f(-p,q)`, `f(p,q) f(-q,p) = 1` and
/// `f(p,p+q) f(p+q,q) = f(p,q)` on all coprime pairs with `|p|, |q| <= bound`,
/// plus `f(1,1) = f(-1,1) = 1`. Residuals are normalized by the largest
/// magnitude among the values involved.
pub fn validate_reciprocity<G: CoefficientGroup + 'static>(
    f: &ReciprocityFunction<G>,
    bound: i64,
    tolerance: f64,
) -> ValidationReport {
    let g = &*f.group;
    let mut c = Checker::new(g, tolerance);
    for (p, q) in [(1, 1), (-1, 1)] {
        c.record("unit", (p, q), vec![(p, q)], f.value(p, q).map(|v| (v.clone(), g.identity(), vec![v])));
    }
    for (p, q) in coprime_pairs(bound) {
        let sides = f.value(p, -q).and_then(|a| Ok((a.clone(), f.value(-p, q)?, vec![a])));
        c.record("sign", (p, q), vec![(p, -q), (-p, q)], sides.map(|(a, b, mut v)| {
            v.push(b.clone());
            (a, b, v)
        }));
        let sides = f.value(p, q).and_then(|a| {
            let b = f.value(-q, p)?;
            Ok((g.multiply(&a, &b), g.identity(), vec![a, b]))
        });
        c.record("inversion", (p, q), vec![(p, q), (-q, p)], sides);
        let sides = f.value(p, p + q).and_then(|a| {
            let b = f.value(p + q, q)?;
            let r = f.value(p, q)?;
            Ok((g.multiply(&a, &b), r.clone(), vec![a, b, r]))
        });
        c.record("three-term", (p, q), vec![(p, p + q), (p + q, q), (p, q)], sides);
    }
    c.finish(bound)
}

/// The Dedekind symbol of a reciprocity function, normalized by `D(0, 1) = 1`.
pub struct DedekindSymbol<G: CoefficientGroup> {
    pub reciprocity: ReciprocityFunction<G>,
}

/// Reconstructs `D` from `f` by Euclidean descent:
/// `D(-p,-q) = D(p,q)`, `D(p,q) = D(p, q mod p)`, `D(p,r) = f(p,r) D(r,-p)`,
/// ending at `D(0, +-1) = 1`.
pub fn reconstruct_symbol<G: CoefficientGroup + 'static>(f: &ReciprocityFunction<G>) -> DedekindSymbol<G> {
    DedekindSymbol { reciprocity: f.clone() }
}

impl<G: CoefficientGroup + 'static> DedekindSymbol<G> {
    pub fn value(&self, p: i64, q: i64) -> Result<G::Element> {
        normalize(p, q)?;
        let g = &*self.reciprocity.group;
        let (mut p, mut q) = if p < 0 { (-p, -q) } else { (p, q) };
        let mut acc = g.identity();
        while p != 0 {
            let r = q.rem_euclid(p);
            acc = g.multiply(&acc, &self.reciprocity.value(p, r)?);
            (p, q) = (r, -p);
        }
        Ok(acc)
    }

    /// `(p, q, D(p, q))` on coprime pairs with `|p|, |q| <= bound`.
    pub fn table(&self, bound: i64) -> Result<Vec<(i64, i64, G::Element)>> {
        coprime_pairs(bound).into_iter().map(|(p, q)| Ok((p, q, self.value(p, q)?))).collect()
    }

    /// CSV with columns `p,q,value`.
    pub fn to_csv(&self, bound: i64) -> Result<String> {
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["p", "q", "value"]).map_err(io)?;
        for (p, q, v) in self.table(bound)? {
            w.write_record([p.to_string(), q.to_string(), self.reciprocity.group.render(&v)]).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    /// Checks `D(p,q) = D(p,q+p)`, `D(p,-q) = D(-p,q)` and
    /// `D(p,q) D(q,-p)^{-1} = f(p,q)` on the grid.
    pub fn validate(&self, bound: i64, tolerance: f64) -> ValidationReport {
        let g = &*self.reciprocity.group;
        let mut c = Checker::new(g, tolerance);
        for (p, q) in coprime_pairs(bound) {
            let sides = self.value(p, q).and_then(|a| {
                let b = self.value(p, q + p)?;
                Ok((a.clone(), b.clone(), vec![a, b]))
            });
            c.record("periodicity", (p, q), vec![(p, q), (p, q + p)], sides);
            let sides = self.value(p, -q).and_then(|a| {
                let b = self.value(-p, q)?;
                Ok((a.clone(), b.clone(), vec![a, b]))
            });
            c.record("sign", (p, q), vec![(p, -q), (-p, q)], sides);
            let sides = self.value(p, q).and_then(|a| {
                let b = self.value(q, -p)?;
                let r = self.reciprocity.value(p, q)?;
                Ok((g.multiply(&a, &g.invert(&b)), r.clone(), vec![a, b, r]))
            });
            c.record("reciprocity", (p, q), vec![(p, q), (q, -p)], sides);
        }
        c.finish(bound)
    }
}

// ---------------------------------------------------------------------------
// Cocycles

/// Whether a cocycle satisfies the left law `l(ab) = l(a) a l(b)` or the
/// right law `r(ab) = (r(a)|b) r(b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Values of a cocycle on `sigma` and `tau`: `(X, Y)` for left cocycles,
/// `(U, V)` for right ones.
#[derive(Debug, Clone)]
pub struct CocyclePair<E> {
    pub side: Side,
    pub sigma: E,
    pub tau: E,
}

/// Residuals of the generator relations: for left pairs `X sigma(X) = 1` and
/// `Y tau(Y) tau^2(Y) = 1`, for right pairs `(U|sigma) U = 1` and
/// `(V|tau^2)(V|tau) V = 1`.
pub fn pair_relations<M: GammaModule>(m: &M, pair: &CocyclePair<M::Element>) -> [f64; 2] {
    let s = UniModularMatrix::sigma();
    let t = UniModularMatrix::tau();
    let t2 = t * t;
    let one = m.identity();
    match pair.side {
        Side::Left => {
            let (x, y) = (&pair.sigma, &pair.tau);
            let a = m.multiply(x, &m.left_act(&s, x));
            let b = m.product([y, &m.left_act(&t, y), &m.left_act(&t2, y)]);
            [m.distance(&a, &one), m.distance(&b, &one)]
        }
        Side::Right => {
            let (u, v) = (&pair.sigma, &pair.tau);
            let a = m.multiply(&m.right_act(u, &s), u);
            let b = m.product([&m.right_act(v, &t2), &m.right_act(v, &t), v]);
            [m.distance(&a, &one), m.distance(&b, &one)]
        }
    }
}

/// Residual of the Dedekind condition: `Y = tau X` (left) or `V = U|sigma` (right).
pub fn dedekind_residual<M: GammaModule>(m: &M, pair: &CocyclePair<M::Element>) -> f64 {
    let s = UniModularMatrix::sigma();
    match pair.side {
        Side::Left => m.distance(&pair.tau, &m.left_act(&UniModularMatrix::tau(), &pair.sigma)),
        Side::Right => m.distance(&pair.tau, &m.right_act(&pair.sigma, &s)),
    }
}

/// The pair `X = g (sigma g)^{-1}`, `Y = h (tau h)^{-1}` (left) or
/// `U = (g|sigma)^{-1} g`, `V = (h|tau)^{-1} h` (right), which satisfies the
/// generator relations for any `g`, `h`.
pub fn twisted_pair<M: GammaModule>(m: &M, side: Side, g: &M::Element, h: &M::Element) -> CocyclePair<M::Element> {
    let s = UniModularMatrix::sigma();
    let t = UniModularMatrix::tau();
    match side {
        Side::Left => CocyclePair {
            side,
            sigma: m.multiply(g, &m.invert(&m.left_act(&s, g))),
            tau: m.multiply(h, &m.invert(&m.left_act(&t, h))),
        },
        Side::Right => CocyclePair {
            side,
            sigma: m.multiply(&m.invert(&m.right_act(g, &s)), g),
            tau: m.multiply(&m.invert(&m.right_act(h, &t)), h),
        },
    }
}

/// The cocycle determined by its values on `sigma` and `tau`, extended along
/// the free-product normal form. Values are memoized per element of `PSL(2,Z)`.
pub struct Cocycle<M: GammaModule> {
    module: Arc<M>,
    pair: CocyclePair<M::Element>,
    memo: RwLock<HashMap<[i64; 4], M::Element>>,
}

/// Builds the cocycle of `pair`, rejecting pairs whose generator relations
/// fail by more than `tolerance`.
pub fn pair_to_cocycle<M: GammaModule>(module: Arc<M>, pair: CocyclePair<M::Element>, tolerance: f64) -> Result<Cocycle<M>> {
    let [a, b] = pair_relations(&*module, &pair);
    if a.is_nan() || b.is_nan() || a > tolerance || b > tolerance {
        return Err(Error::RelationViolated(format!("generator relations fail: sigma {a:.3e}, tau {b:.3e}")));
    }
    Ok(Cocycle::unchecked(module, pair))
}

impl<M: GammaModule> Cocycle<M> {
    fn unchecked(module: Arc<M>, pair: CocyclePair<M::Element>) -> Self {
        Cocycle { module, pair, memo: RwLock::new(HashMap::new()) }
    }

    pub fn side(&self) -> Side {
        self.pair.side
    }

    pub fn pair(&self) -> &CocyclePair<M::Element> {
        &self.pair
    }

    pub fn module(&self) -> &Arc<M> {
        &self.module
    }

    fn letter_value(&self, l: Letter) -> M::Element {
        let m = &*self.module;
        let t = UniModularMatrix::tau();
        match (l, self.pair.side) {
            (Letter::S, _) => self.pair.sigma.clone(),
            (Letter::T, _) => self.pair.tau.clone(),
            (Letter::T2, Side::Left) => m.multiply(&self.pair.tau, &m.left_act(&t, &self.pair.tau)),
            (Letter::T2, Side::Right) => m.multiply(&m.right_act(&self.pair.tau, &t), &self.pair.tau),
        }
    }

    pub fn evaluate(&self, gamma: &UniModularMatrix) -> M::Element {
        let key = gamma.psl_canonical().entries();
        if let Some(v) = self.memo.read().unwrap().get(&key) {
            return v.clone();
        }
        let m = &*self.module;
        let letters = decompose(gamma).letters().to_vec();
        let mut acc = m.identity();
        match self.pair.side {
            Side::Left => {
                let mut prefix = UniModularMatrix::identity();
                for l in letters {
                    acc = m.multiply(&acc, &m.left_act(&prefix, &self.letter_value(l)));
                    prefix = prefix * l.matrix();
                }
            }
            Side::Right => {
                let mut suffix = UniModularMatrix::identity();
                for l in letters.into_iter().rev() {
                    acc = m.multiply(&m.right_act(&self.letter_value(l), &suffix), &acc);
                    suffix = l.matrix() * suffix;
                }
            }
        }
        self.memo.write().unwrap().insert(key, acc.clone());
        acc
    }

    /// Distance between the two sides of the cocycle law at `(a, b)`.
    pub fn law_residual(&self, a: &UniModularMatrix, b: &UniModularMatrix) -> f64 {
        let m = &*self.module;
        let lhs = self.evaluate(&(*a * *b));
        let rhs = match self.pair.side {
            Side::Left => m.multiply(&self.evaluate(a), &m.left_act(a, &self.evaluate(b))),
            Side::Right => m.multiply(&m.right_act(&self.evaluate(a), b), &self.evaluate(b)),
        };
        m.distance(&lhs, &rhs)
    }
}

/// The cocycle `c'(gamma) = c(gamma^{-1})^{-1}` of the opposite side. Applied
/// twice it returns the original pair.
pub fn left_right_convert<M: GammaModule>(c: &Cocycle<M>) -> Cocycle<M> {
    let m = &*c.module;
    let s = UniModularMatrix::sigma();
    let t = UniModularMatrix::tau();
    let pair = CocyclePair {
        side: c.side().flip(),
        sigma: m.invert(&c.evaluate(&s.inverse())),
        tau: m.invert(&c.evaluate(&t.inverse())),
    };
    Cocycle::unchecked(c.module.clone(), pair)
}

/// A function module and a Dedekind pair in it.
pub type DedekindData<G> = (Arc<FunctionModule<G>>, CocyclePair<CuspFunction<<G as CoefficientGroup>::Element>>);

/// The pair `X_f(q/p) = f(p, q)`, `Y_f = tau X_f` in the function module,
/// after checking `f` on the module's sample bound.
pub fn reciprocity_to_dedekind_cocycle<G: CoefficientGroup + 'static>(
    f: &ReciprocityFunction<G>,
    bound: i64,
    tolerance: f64,
) -> Result<DedekindData<G>> {
    let report = validate_reciprocity(f, bound, tolerance);
    if let Some(v) = report.violations.first() {
        return Err(Error::RelationViolated(format!(
            "{} fails at ({}, {}) with residual {:.3e}",
            v.relation, v.p, v.q, v.residual
        )));
    }
    let module = Arc::new(FunctionModule::shared(f.group.clone(), bound));
    let f = f.clone();
    let x = CuspFunction::new(move |c: &Cusp| {
        let pair = c.to_pair().ok_or_else(|| Error::InvalidArgument(format!("cusp {c} out of range")))?;
        f.value(pair.p, pair.q)
    });
    let y = module.left_act(&UniModularMatrix::tau(), &x);
    Ok((module, CocyclePair { side: Side::Left, sigma: x, tau: y }))
}

// ---------------------------------------------------------------------------
// Cocycles from iterated integrals

/// One instance of the path cocycle law.
#[derive(Debug, Clone, Serialize)]
pub struct LawCheck {
    pub gamma1: UniModularMatrix,
    pub gamma2: UniModularMatrix,
    /// `J^a_{g1 g2 a}` against `J^a_{g1 a} g1(J^a_{g2 a})` at `a = inf`.
    pub base_point: f64,
    /// The cocycle law for the evaluator built from `(X, Y)`.
    pub pair: f64,
}

/// Residuals for the pair `X = J_0^inf`, `Y = J_1^0`.
#[derive(Debug, Clone, Serialize)]
pub struct PathCocycleReport {
    pub depth: usize,
    pub t: Complex64,
    pub family: String,
    pub sigma_relation: f64,
    pub tau_relation: f64,
    pub dedekind: f64,
    pub laws: Vec<LawCheck>,
}

impl PathCocycleReport {
    pub fn worst(&self) -> f64 {
        self.laws
            .iter()
            .flat_map(|l| [l.base_point, l.pair])
            .chain([self.sigma_relation, self.tau_relation, self.dedekind])
            .fold(0.0, f64::max)
    }
}

/// Verifies that `X = J_0^inf`, `Y = J_1^0` is a left Dedekind pair for the
/// path action, and the cocycle law of `gamma -> J^inf_{gamma inf}` and of the
/// evaluator of `(X, Y)` on `samples` random pairs `(g1, g2)`.
pub fn path_cocycle_check(module: Arc<PathModule>, samples: usize, seed: u64) -> Result<PathCocycleReport> {
    let m = &*module;
    let x = PathWord::segment(Cusp::zero(), Cusp::Infinity);
    let y = PathWord::segment(Cusp::integer(1), Cusp::zero());
    let pair = CocyclePair { side: Side::Left, sigma: x, tau: y };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gammas: Vec<(UniModularMatrix, UniModularMatrix)> = (0..samples)
        .map(|_| {
            let l1 = rng.gen_range(1..=3);
            let l2 = rng.gen_range(1..=3);
            (random_matrix(&mut rng, l1), random_matrix(&mut rng, l2))
        })
        .collect();
    let a = Cusp::Infinity;
    let lambda = |g: &UniModularMatrix| PathWord::segment(g.act_cusp(&a), a.clone());
    let cocycle = Cocycle::unchecked(module.clone(), pair.clone());

    let mut words = Vec::new();
    let mut sides = Vec::new();
    for (g1, g2) in &gammas {
        let lhs = lambda(&(*g1 * *g2));
        let rhs = m.multiply(&lambda(g1), &m.left_act(g1, &lambda(g2)));
        let plhs = cocycle.evaluate(&(*g1 * *g2));
        let prhs = m.multiply(&cocycle.evaluate(g1), &m.left_act(g1, &cocycle.evaluate(g2)));
        words.extend([lhs.clone(), rhs.clone(), plhs.clone(), prhs.clone()]);
        sides.push((lhs, rhs, plhs, prhs));
    }
    let s = UniModularMatrix::sigma();
    let t = UniModularMatrix::tau();
    for g in [s, t, t * t] {
        words.push(m.left_act(&g, &pair.sigma));
        words.push(m.left_act(&g, &pair.tau));
    }
    module.prefetch(&words)?;

    let [sigma_relation, tau_relation] = pair_relations(m, &pair);
    let laws = gammas
        .iter()
        .zip(&sides)
        .map(|((g1, g2), (lhs, rhs, plhs, prhs))| LawCheck {
            gamma1: *g1,
            gamma2: *g2,
            base_point: m.distance(lhs, rhs),
            pair: m.distance(plhs, prhs),
        })
        .collect();
    Ok(PathCocycleReport {
        depth: m.depth,
        t: m.t,
        family: m.family.content_hash(),
        sigma_relation,
        tau_relation,
        dedekind: dedekind_residual(m, &pair),
        laws,
    })
}
