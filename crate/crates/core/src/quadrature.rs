//! Period integrals of `omega_F(z; t) = F(z) (z - t)^k dz` along hyperbolic
//! geodesics.
//!
//! Every geodesic is written as `z(u) = g(i e^u)` for a real Moebius map `g`
//! sending `0` and `inf` to its two ideal ends, so `u` is hyperbolic arclength.
//! Cusp endpoints sit at `u = -inf` or `u = +inf`, where a cusp form decays
//! double exponentially in `u`; the infinite range is cut where the integrand
//! has dropped below `1e-17` of its peak. The remaining finite interval is
//! integrated by global adaptive Gauss-Legendre quadrature.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exact_core::Cusp;
use crate::forms::CuspForm;
use crate::multipliers::{branch_log, HalfPlane};

/// Relative cut-off for the integrand at infinite path ends.
pub const END_CUTOFF: f64 = 1e-17;

/// A start or end point of an integration path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Endpoint {
    Cusp(Cusp),
    Point(Complex64),
}

impl Endpoint {
    pub fn infinity() -> Self {
        Endpoint::Cusp(Cusp::Infinity)
    }

    pub fn integer(n: i64) -> Self {
        Endpoint::Cusp(Cusp::integer(n))
    }

    pub fn is_cusp(&self) -> bool {
        matches!(self, Endpoint::Cusp(_))
    }

    /// Real position of a finite cusp, `None` for `inf` and interior points.
    fn finite_cusp(&self) -> Option<f64> {
        match self {
            Endpoint::Cusp(Cusp::Finite(x)) => Some(x.to_f64().unwrap_or(f64::NAN)),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Endpoint::Point(z) = self {
            if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NotInUpperHalfPlane(z.to_string()));
            }
        }
        Ok(())
    }

    /// Stable textual key.
    pub fn key(&self) -> String {
        match self {
            Endpoint::Cusp(c) => c.to_string(),
            Endpoint::Point(z) => format!("pt({:016x},{:016x})", z.re.to_bits(), z.im.to_bits()),
        }
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Cusp(c) => write!(f, "{c}"),
            Endpoint::Point(z) => write!(f, "{z}"),
        }
    }
}

impl From<Cusp> for Endpoint {
    fn from(c: Cusp) -> Self {
        Endpoint::Cusp(c)
    }
}

impl From<Complex64> for Endpoint {
    fn from(z: Complex64) -> Self {
        Endpoint::Point(z)
    }
}

/// Shape of a geodesic, for display.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Parameterization {
    Empty,
    Vertical { x: f64 },
    Semicircle { center: f64, radius: f64 },
}

/// Oriented geodesic segment from `a` to `b`.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub a: Endpoint,
    pub b: Endpoint,
    /// `g = [[g0, g1], [g2, g3]]`, `z(u) = g(i e^u)`.
    g: [f64; 4],
    u_start: f64,
    u_end: f64,
    empty: bool,
}

/// Point on the geodesic through `x` (finite cusp) and interior `p`, other than `x`.
fn far_end_through(x: f64, p: Complex64) -> Option<f64> {
    if (p.re - x).abs() <= 1e-15 * x.abs().max(1.0) {
        return None;
    }
    let c = (p.norm_sqr() - x * x) / (2.0 * (p.re - x));
    Some(2.0 * c - x)
}

fn moebius_to(lo: Option<f64>, hi: Option<f64>) -> Result<[f64; 4]> {
    match (lo, hi) {
        (Some(x), None) => Ok([1.0, x, 0.0, 1.0]),
        (None, Some(y)) => Ok([y, -1.0, 1.0, 0.0]),
        (Some(x), Some(y)) => {
            if x == y {
                return Err(Error::InvalidArgument("degenerate geodesic".into()));
            }
            let s = if y > x { 1.0 } else { -1.0 };
            Ok([y, s * x, 1.0, s])
        }
        (None, None) => Err(Error::InvalidArgument("degenerate geodesic".into())),
    }
}

impl GeodesicPath {
    pub fn new(a: impl Into<Endpoint>, b: impl Into<Endpoint>) -> Result<Self> {
        let (a, b) = (a.into(), b.into());
        a.validate()?;
        b.validate()?;
        if a == b {
            return Ok(GeodesicPath { a, b, g: [1.0, 0.0, 0.0, 1.0], u_start: 0.0, u_end: 0.0, empty: true });
        }
        // ideal ends (None = inf) with the orientation a -> b
        let (lo, hi) = match (&a, &b) {
            (Endpoint::Cusp(_), Endpoint::Cusp(_)) => (a.finite_cusp(), b.finite_cusp()),
            (Endpoint::Cusp(Cusp::Infinity), Endpoint::Point(p)) => (None, Some(p.re)),
            (Endpoint::Point(p), Endpoint::Cusp(Cusp::Infinity)) => (Some(p.re), None),
            (Endpoint::Cusp(_), Endpoint::Point(p)) => {
                let x = a.finite_cusp().expect("finite");
                (Some(x), far_end_through(x, *p))
            }
            (Endpoint::Point(p), Endpoint::Cusp(_)) => {
                let y = b.finite_cusp().expect("finite");
                (far_end_through(y, *p), Some(y))
            }
            (Endpoint::Point(p), Endpoint::Point(q)) => {
                let dx = q.re - p.re;
                if dx.abs() <= 1e-15 * p.re.abs().max(q.re.abs()).max(1.0) {
                    if q.im > p.im {
                        (Some(p.re), None)
                    } else {
                        (None, Some(p.re))
                    }
                } else {
                    let c = (q.norm_sqr() - p.norm_sqr()) / (2.0 * dx);
                    let r = (p - c).norm();
                    if dx > 0.0 {
                        (Some(c - r), Some(c + r))
                    } else {
                        (Some(c + r), Some(c - r))
                    }
                }
            }
        };
        let g = moebius_to(lo, hi)?;
        let mut path = GeodesicPath { a, b, g, u_start: f64::NEG_INFINITY, u_end: f64::INFINITY, empty: false };
        if let Endpoint::Point(p) = path.a {
            path.u_start = path.parameter_of(p);
        }
        if let Endpoint::Point(p) = path.b {
            path.u_end = path.parameter_of(p);
        }
        Ok(path)
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// `(u_start, u_end)`; infinite at cusp ends.
    pub fn parameter_range(&self) -> (f64, f64) {
        (self.u_start, self.u_end)
    }

    fn parameter_of(&self, p: Complex64) -> f64 {
        let [g0, g1, g2, g3] = self.g;
        let w = (p * g3 - g1) / (-p * g2 + g0);
        w.im.ln()
    }

    /// `z(u)`.
    pub fn point(&self, u: f64) -> Complex64 {
        let [g0, g1, g2, g3] = self.g;
        let w = Complex64::new(0.0, u.exp());
        (w * g0 + g1) / (w * g2 + g3)
    }

    /// `dz/du`.
    pub fn derivative(&self, u: f64) -> Complex64 {
        let [g0, g1, g2, g3] = self.g;
        let w = Complex64::new(0.0, u.exp());
        let det = g0 * g3 - g1 * g2;
        w * det / ((w * g2 + g3) * (w * g2 + g3))
    }

    pub fn parameterization(&self) -> Parameterization {
        if self.empty {
            return Parameterization::Empty;
        }
        let [g0, g1, g2, g3] = self.g;
        if g2 == 0.0 {
            Parameterization::Vertical { x: g1 }
        } else if g3 == 0.0 {
            Parameterization::Vertical { x: g0 }
        } else {
            let (x, y) = (g1 / g3, g0 / g2);
            Parameterization::Semicircle { center: (x + y) / 2.0, radius: (y - x).abs() / 2.0 }
        }
    }

    /// Finite parameter interval outside which every component of `magnitude`
    /// stays below `END_CUTOFF` times its peak.
    pub fn truncated_range<F>(&self, magnitude: F) -> Result<(f64, f64)>
    where
        F: Fn(f64) -> Result<Vec<f64>>,
    {
        if self.empty {
            return Ok((0.0, 0.0));
        }
        let (s, e) = (self.u_start, self.u_end);
        if s.is_finite() && e.is_finite() {
            return Ok((s, e));
        }
        let reference = if s.is_finite() {
            s
        } else if e.is_finite() {
            e
        } else {
            0.0
        };
        let mut peaks = magnitude(reference)?;
        // scan a window around the reference to find the bulk
        let probe = |u: f64, peaks: &mut Vec<f64>| -> Result<Vec<f64>> {
            let m = magnitude(u)?;
            for (p, x) in peaks.iter_mut().zip(&m) {
                if x.is_finite() && *x > *p {
                    *p = *x;
                }
            }
            Ok(m)
        };
        let march = |dir: f64, peaks: &mut Vec<f64>| -> Result<f64> {
            let h = 0.25;
            let mut u = reference;
            let mut quiet = 0;
            for _ in 0..1000 {
                u += dir * h;
                let m = probe(u, peaks)?;
                let small = m.iter().zip(peaks.iter()).all(|(x, p)| *x <= END_CUTOFF * p || *x == 0.0);
                quiet = if small { quiet + 1 } else { 0 };
                if quiet >= 3 {
                    return Ok(u);
                }
            }
            Err(Error::NonConvergence("integrand does not decay towards the cusp".into()))
        };
        let lo = if s.is_finite() { s } else { march(-1.0, &mut peaks)? };
        let hi = if e.is_finite() { e } else { march(1.0, &mut peaks)? };
        Ok((lo, hi))
    }
}

/// `omega_F(z; t) = F(z) (z - t)^k dz`.
#[derive(Debug, Clone)]
pub struct OneForm {
    pub form: Arc<CuspForm>,
    pub k: f64,
    pub t: Complex64,
}

impl OneForm {
    /// The one-form of `form` with its own `k = weight - 2`.
    pub fn new(form: Arc<CuspForm>, t: Complex64) -> Result<Self> {
        if t.im > 0.0 {
            return Err(Error::InvalidArgument(format!("t = {t} must lie in the closed lower half-plane")));
        }
        let k = form.k();
        Ok(OneForm { form, k, t })
    }

    /// `F(z) (z - t)^k`, principal branch (`arg(z - t)` in `(0, pi)`).
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if !(z.im > 0.0) {
            return Err(Error::NotInUpperHalfPlane(z.to_string()));
        }
        let lf = self.form.log_value(z)?;
        Ok((lf + branch_log(z - self.t, HalfPlane::Upper) * self.k).exp())
    }
}

/// Free-function form of [`OneForm::eval`].
pub fn omega_eval(omega: &OneForm, z: Complex64) -> Result<Complex64> {
    omega.eval(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Relative to the integral of `|integrand|`.
    pub tolerance: f64,
    /// Gauss-Legendre points per panel.
    pub order: usize,
    pub max_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { tolerance: 1e-10, order: 15, max_panels: 4000 }
    }
}

/// Value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Cached Gauss-Legendre nodes and weights.
type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn rule(order: usize) -> Rule {
    static RULES: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let table = RULES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut table = table.lock().expect("rule table");
    table.entry(order).or_insert_with(|| Arc::new(gauss_legendre(order))).clone()
}

struct Panel {
    lo: f64,
    hi: f64,
    value: Complex64,
    abs: f64,
    error: f64,
    id: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then(other.id.cmp(&self.id))
    }
}

/// Applies the rule on `[lo, hi]`, returning `(integral, integral of |f|)`.
fn apply_rule<F>(f: &F, lo: f64, hi: f64, nodes: &(Vec<f64>, Vec<f64>)) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut abs = 0.0;
    for (x, w) in nodes.0.iter().zip(&nodes.1) {
        let v = f(mid + half * x)?;
        sum += v * *w;
        abs += v.norm() * w;
    }
    Ok((sum * half, abs * half))
}

fn refine<F>(f: &F, lo: f64, hi: f64, nodes: &(Vec<f64>, Vec<f64>), id: usize) -> Result<Panel>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mid = (lo + hi) / 2.0;
    let (whole, _) = apply_rule(f, lo, hi, nodes)?;
    let (left, la) = apply_rule(f, lo, mid, nodes)?;
    let (right, ra) = apply_rule(f, mid, hi, nodes)?;
    let value = left + right;
    Ok(Panel { lo, hi, value, abs: la + ra, error: (whole - value).norm(), id })
}

/// Global adaptive Gauss-Legendre on a finite interval. The error is an
/// estimate, bounded by `tolerance` times the integral of `|f|`.
pub fn integrate<F>(f: F, lo: f64, hi: f64, config: &QuadratureConfig) -> Result<Estimate>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if lo == hi {
        return Ok(Estimate { value: Complex64::new(0.0, 0.0), error: 0.0 });
    }
    let nodes = rule(config.order);
    let initial = 8usize;
    let mut heap = BinaryHeap::new();
    let mut next_id = 0;
    let step = (hi - lo) / initial as f64;
    for i in 0..initial {
        let a = lo + step * i as f64;
        let b = if i + 1 == initial { hi } else { a + step };
        heap.push(refine(&f, a, b, &nodes, next_id)?);
        next_id += 1;
    }
    loop {
        let (value, abs, error) = heap.iter().fold((Complex64::new(0.0, 0.0), 0.0, 0.0), |acc, p| {
            (acc.0 + p.value, acc.1 + p.abs, acc.2 + p.error)
        });
        if error <= config.tolerance * abs || abs == 0.0 {
            // deterministic summation order
            let mut panels: Vec<&Panel> = heap.iter().collect();
            panels.sort_by(|x, y| x.lo.total_cmp(&y.lo));
            let value = panels.iter().fold(Complex64::new(0.0, 0.0), |s, p| s + p.value);
            return Ok(Estimate { value, error });
        }
        if heap.len() >= config.max_panels {
            return Err(Error::NonConvergence(format!(
                "adaptive quadrature: error {error:.3e} after {} panels (|I| = {:.3e})",
                heap.len(),
                value.norm()
            )));
        }
        let worst = heap.pop().expect("non-empty");
        let mid = (worst.lo + worst.hi) / 2.0;
        if mid <= worst.lo || mid >= worst.hi {
            return Err(Error::NonConvergence("adaptive quadrature: panel width underflow".into()));
        }
        heap.push(refine(&f, worst.lo, mid, &nodes, next_id)?);
        heap.push(refine(&f, mid, worst.hi, &nodes, next_id + 1)?);
        next_id += 2;
    }
}

/// `int_path h(z) dz` for an arbitrary holomorphic `h` decaying at cusp ends.
pub fn integrate_along<H>(path: &GeodesicPath, h: H, config: &QuadratureConfig) -> Result<Estimate>
where
    H: Fn(Complex64) -> Result<Complex64>,
{
    if path.is_empty() {
        return Ok(Estimate { value: Complex64::new(0.0, 0.0), error: 0.0 });
    }
    let integrand = |u: f64| -> Result<Complex64> { Ok(h(path.point(u))? * path.derivative(u)) };
    let (lo, hi) = path.truncated_range(|u| Ok(vec![integrand(u)?.norm()]))?;
    integrate(integrand, lo, hi, config)
}

/// `int_path |h(z)| |dz|`.
pub fn absolute_integral_along<H>(path: &GeodesicPath, h: H, config: &QuadratureConfig) -> Result<f64>
where
    H: Fn(Complex64) -> Result<Complex64>,
{
    if path.is_empty() {
        return Ok(0.0);
    }
    let integrand = |u: f64| -> Result<Complex64> { Ok(Complex64::new(h(path.point(u))?.norm() * path.derivative(u).norm(), 0.0)) };
    let (lo, hi) = path.truncated_range(|u| Ok(vec![integrand(u)?.re]))?;
    Ok(integrate(integrand, lo, hi, config)?.value.re)
}

fn check_t_against_endpoint(t: Complex64, e: &Endpoint) -> Result<()> {
    if let Endpoint::Cusp(Cusp::Finite(x)) = e {
        if t.im == 0.0 && x.to_f64() == Some(t.re) {
            return Err(Error::InvalidArgument(format!("t = {} coincides with a path endpoint", t.re)));
        }
    }
    Ok(())
}

/// `I_a^b(omega; t)` with an error estimate.
pub fn period_integral(omega: &OneForm, a: &Endpoint, b: &Endpoint, config: &QuadratureConfig) -> Result<Estimate> {
    check_t_against_endpoint(omega.t, a)?;
    check_t_against_endpoint(omega.t, b)?;
    let path = GeodesicPath::new(a.clone(), b.clone())?;
    integrate_along(&path, |z| omega.eval(z), config)
}

/// `P_F(t) = int_0^{i inf} F(z) (z - t)^k dz`.
pub fn period_function(form: Arc<CuspForm>, t: Complex64, config: &QuadratureConfig) -> Result<Estimate> {
    let omega = OneForm::new(form, t)?;
    period_integral(&omega, &Endpoint::integer(0), &Endpoint::infinity(), config)
}

/// Key of a cached period integral.
pub fn cache_key(form_hash: &str, a: &Endpoint, b: &Endpoint, t: Complex64, tolerance: f64) -> String {
    format!(
        "{form_hash}|{}|{}|{:016x},{:016x}|{:016x}",
        a.key(),
        b.key(),
        t.re.to_bits(),
        t.im.to_bits(),
        tolerance.to_bits()
    )
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    payload: String,
    checksum: String,
}

fn line_checksum(key: &str, payload: &str) -> String {
    let digest = Sha256::digest(format!("{key}\n{payload}").as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Disk cache of computed values, one JSON record per line with a SHA-256
/// checksum. Lines failing their checksum are ignored and recomputed on demand.
#[derive(Debug)]
pub struct PeriodCache {
    file: PathBuf,
    entries: Mutex<HashMap<String, String>>,
    rejected: usize,
}

impl PeriodCache {
    pub const FILE_NAME: &'static str = "periods.jsonl";

    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let file = dir.join(Self::FILE_NAME);
        let mut entries = HashMap::new();
        let mut rejected = 0;
        if file.exists() {
            for line in BufReader::new(fs::File::open(&file)?).lines() {
                let line = line?;
                match serde_json::from_str::<CacheLine>(&line) {
                    Ok(r) if r.checksum == line_checksum(&r.key, &r.payload) => {
                        entries.insert(r.key, r.payload);
                    }
                    _ => rejected += 1,
                }
            }
        }
        Ok(PeriodCache { file, entries: Mutex::new(entries), rejected })
    }

    /// Number of corrupt lines skipped while loading.
    pub fn rejected(&self) -> usize {
        self.rejected
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cached value under `key`, if present and decodable.
    pub fn get<T: for<'de> Deserialize<'de>>(&self, key: &str) -> Option<T> {
        let entries = self.entries.lock().expect("cache lock");
        entries.get(key).and_then(|p| serde_json::from_str(p).ok())
    }

    pub fn insert<T: Serialize>(&self, key: &str, value: &T) -> Result<()> {
        let payload = serde_json::to_string(value)?;
        let mut entries = self.entries.lock().expect("cache lock");
        let line = CacheLine { key: key.to_string(), checksum: line_checksum(key, &payload), payload: payload.clone() };
        let mut f = OpenOptions::new().create(true).append(true).open(&self.file)?;
        writeln!(f, "{}", serde_json::to_string(&line)?)?;
        entries.insert(key.to_string(), payload);
        Ok(())
    }

    /// Cached `period_integral`.
    pub fn period_integral(&self, omega: &OneForm, a: &Endpoint, b: &Endpoint, config: &QuadratureConfig) -> Result<Estimate> {
        let key = cache_key(&omega.form.content_hash(), a, b, omega.t, config.tolerance);
        if let Some(hit) = self.get(&key) {
            return Ok(hit);
        }
        let est = period_integral(omega, a, b, config)?;
        self.insert(&key, &est)?;
        Ok(est)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{delta, eta_power};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 15, 30] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn adaptive_integration_of_peaked_function() {
        let f = |u: f64| Ok(Complex64::new(1.0 / (1e-4 + u * u), 0.0));
        let est = integrate(f, -1.0, 1.0, &QuadratureConfig::default()).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((est.value.re - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn geodesic_paths_lie_on_their_curves() {
        let cases: Vec<(Endpoint, Endpoint)> = vec![
            (Endpoint::integer(0), Endpoint::infinity()),
            (Endpoint::infinity(), Endpoint::integer(-1)),
            (Endpoint::integer(1), Endpoint::integer(0)),
            (Endpoint::Cusp(Cusp::ratio(2, 3)), Endpoint::integer(1)),
            (Endpoint::integer(0), Endpoint::Point(c(0.3, 0.8))),
            (Endpoint::Point(c(0.3, 0.8)), Endpoint::Point(c(-0.2, 0.4))),
            (Endpoint::Point(c(0.3, 0.8)), Endpoint::Point(c(0.3, 2.0))),
            (Endpoint::Point(c(0.3, 0.8)), Endpoint::infinity()),
        ];
        for (a, b) in cases {
            let p = GeodesicPath::new(a.clone(), b.clone()).unwrap();
            let (s, e) = p.parameter_range();
            let lo = if s.is_finite() { s } else { -30.0 };
            let hi = if e.is_finite() { e } else { 30.0 };
            if let Endpoint::Point(z) = a {
                assert!((p.point(s) - z).norm() < 1e-12);
            }
            if let Endpoint::Point(z) = b {
                assert!((p.point(e) - z).norm() < 1e-12);
            }
            if let Some(x) = a.finite_cusp() {
                assert!((p.point(-40.0) - x).norm() < 1e-12, "{a} -> {b}");
            }
            if let Some(x) = b.finite_cusp() {
                assert!((p.point(40.0) - x).norm() < 1e-12, "{a} -> {b}");
            }
            for i in 0..=20 {
                let u = lo + (hi - lo) * i as f64 / 20.0;
                let z = p.point(u);
                assert!(z.im > 0.0);
                match p.parameterization() {
                    Parameterization::Vertical { x } => assert!((z.re - x).abs() < 1e-12),
                    Parameterization::Semicircle { center, radius } => assert!(((z - center).norm() - radius).abs() < 1e-12),
                    Parameterization::Empty => unreachable!(),
                }
                // hyperbolic speed is 1
                let speed = p.derivative(u).norm() / z.im;
                assert!((speed - 1.0).abs() < 1e-10);
                // derivative by central difference
                let h = 1e-5;
                let fd = (p.point(u + h) - p.point(u - h)) / (2.0 * h);
                assert!((fd - p.derivative(u)).norm() < 1e-6 * p.derivative(u).norm().max(1e-3));
            }
        }
    }

    #[test]
    fn omega_branch() {
        let f = Arc::new(eta_power(5.3, 64).unwrap());
        let om = OneForm::new(f.clone(), c(0.0, -1.0)).unwrap();
        assert!((om.k - 3.3).abs() < 1e-15);
        let i = c(0.0, 1.0);
        let ratio = om.eval(i).unwrap() / f.value(i).unwrap();
        assert!((ratio.norm() - 2f64.powf(3.3)).abs() < 1e-12);
        assert!((ratio.arg() - (3.3 * std::f64::consts::FRAC_PI_2 - 2.0 * std::f64::consts::PI)).abs() < 1e-12);
        let d = Arc::new(delta());
        let om = OneForm::new(d.clone(), c(0.5, -0.25)).unwrap();
        let z = c(0.1, 0.9);
        let want = d.value(z).unwrap() * (z - om.t).powi(10);
        assert!((om.eval(z).unwrap() - want).norm() < 1e-12 * want.norm());
        assert!(OneForm::new(d, c(0.0, 1.0)).is_err());
    }

    #[test]
    fn arg_is_continuous_along_paths() {
        let t = c(0.4, 0.0);
        let p = GeodesicPath::new(Endpoint::integer(0), Endpoint::infinity()).unwrap();
        let mut prev: Option<f64> = None;
        for i in 0..=2000 {
            let u = -20.0 + 40.0 * i as f64 / 2000.0;
            let arg = branch_log(p.point(u) - t, HalfPlane::Upper).im;
            assert!(arg > 0.0 && arg < std::f64::consts::PI);
            if let Some(q) = prev {
                assert!((arg - q).abs() < 0.1);
            }
            prev = Some(arg);
        }
    }

    #[test]
    fn empty_path_and_reversal() {
        let d = Arc::new(delta());
        let om = OneForm::new(d, c(0.3, -1.0)).unwrap();
        let cfg = QuadratureConfig::default();
        let zero = period_integral(&om, &Endpoint::integer(1), &Endpoint::integer(1), &cfg).unwrap();
        assert_eq!(zero.value, c(0.0, 0.0));
        let ab = period_integral(&om, &Endpoint::integer(0), &Endpoint::infinity(), &cfg).unwrap();
        let ba = period_integral(&om, &Endpoint::infinity(), &Endpoint::integer(0), &cfg).unwrap();
        assert!((ab.value + ba.value).norm() < 1e-10 * ab.value.norm());
    }

    #[test]
    fn path_splitting() {
        let f = Arc::new(eta_power(5.3, 256).unwrap());
        let om = OneForm::new(f, c(0.2, -0.7)).unwrap();
        let cfg = QuadratureConfig::default();
        let (a, b) = (Endpoint::integer(0), Endpoint::infinity());
        let whole = period_integral(&om, &a, &b, &cfg).unwrap().value;
        for mid in [c(0.0, 1.0), c(0.0, 0.3), c(0.0, 4.0)] {
            let m = Endpoint::Point(mid);
            let split = period_integral(&om, &a, &m, &cfg).unwrap().value + period_integral(&om, &m, &b, &cfg).unwrap().value;
            assert!((whole - split).norm() < 1e-9 * whole.norm(), "{mid}");
        }
    }

    #[test]
    fn real_t_endpoint_rejected() {
        let om = OneForm::new(Arc::new(delta()), c(0.0, 0.0)).unwrap();
        let r = period_integral(&om, &Endpoint::integer(0), &Endpoint::infinity(), &QuadratureConfig::default());
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let om = OneForm::new(Arc::new(eta_power(0.5, 64).unwrap()), c(0.0, -1.0)).unwrap();
        let cfg = QuadratureConfig::default();
        let (a, b) = (Endpoint::integer(0), Endpoint::infinity());
        let cache = PeriodCache::open(dir.path()).unwrap();
        let cold = cache.period_integral(&om, &a, &b, &cfg).unwrap();
        assert_eq!(cache.len(), 1);
        let reopened = PeriodCache::open(dir.path()).unwrap();
        let warm = reopened.period_integral(&om, &a, &b, &cfg).unwrap();
        assert_eq!(cold, warm);
        let file = dir.path().join(PeriodCache::FILE_NAME);
        let text = fs::read_to_string(&file).unwrap().replacen("[", "[1", 1);
        fs::write(&file, text).unwrap();
        let corrupt = PeriodCache::open(dir.path()).unwrap();
        assert_eq!(corrupt.rejected(), 1);
        assert!(corrupt.is_empty());
        assert_eq!(corrupt.period_integral(&om, &a, &b, &cfg).unwrap(), cold);
    }
}
