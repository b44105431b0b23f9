//! Iterated period integrals and their generating series.
//!
//! For a family `(F_1..F_l)` and a parameter `t`, the series
//! `J_a^b(t) = 1 + sum_w I_a^b(omega_{w_1}, ..., omega_{w_n}; t) A_{w_1}...A_{w_n}`
//! solves `dJ = Omega J` along the geodesic from `a` to `b`, with
//! `Omega = sum_j omega_j A_j` acting on the left. Path composition is then
//! `J_a^b = J_c^b J_a^c`.
//!
//! The transport equation is integrated in the arclength parameter of
//! [`GeodesicPath`] by classical RK4 with step doubling; accepted steps are
//! Richardson-extrapolated. The local error test is on every coefficient,
//! relative to the a priori bound `prod_j L_{w_j} / n!`, where `L_j` is the
//! integral of `|omega_j|` along the path.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forms::{eta_power, CuspForm, DEFAULT_TRUNCATION};
use crate::modular_group::UniModularMatrix;
use crate::multipliers::lower_boundary_power;
use crate::nc_series::{word_name, DiagonalCharacter, NCSeries, Word};
use crate::quadrature::{integrate_along, period_integral, Endpoint, GeodesicPath, OneForm, PeriodCache, QuadratureConfig};

/// Ordered forms `(F_1, ..., F_l)`; letter `A_j` belongs to `F_j`.
#[derive(Debug, Clone, Default)]
pub struct FormFamily {
    pub forms: Vec<Arc<CuspForm>>,
}

impl FormFamily {
    pub fn new(forms: Vec<Arc<CuspForm>>) -> Self {
        FormFamily { forms }
    }

    /// `eta^{2w}` for each listed weight.
    pub fn eta_powers(weights: &[f64], m: usize) -> Result<Self> {
        Ok(FormFamily { forms: weights.iter().map(|&w| eta_power(w, m).map(Arc::new)).collect::<Result<_>>()? })
    }

    /// `{Delta}`.
    pub fn delta() -> Self {
        Self::eta_powers(&[12.0], DEFAULT_TRUNCATION).expect("valid")
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn ks(&self) -> Vec<f64> {
        self.forms.iter().map(|f| f.k()).collect()
    }

    /// `sum k_{w_j}` over the letters of `w`.
    pub fn bold_k(&self, w: &[usize]) -> f64 {
        w.iter().map(|&m| self.forms[m].k()).sum()
    }

    /// `prod v_{w_j}(gamma)`.
    pub fn bold_v(&self, gamma: &UniModularMatrix, w: &[usize]) -> Complex64 {
        w.iter().map(|&m| self.forms[m].multiplier.value(gamma)).product()
    }

    /// `(v_1(gamma), ..., v_l(gamma))`.
    pub fn character(&self, gamma: &UniModularMatrix) -> DiagonalCharacter {
        DiagonalCharacter { values: self.forms.iter().map(|f| f.multiplier.value(gamma)).collect() }
    }

    /// Hash over the member form hashes, in order.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for f in &self.forms {
            h.update(f.content_hash().as_bytes());
            h.update(b";");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn one_forms(&self, t: Complex64) -> Result<Vec<OneForm>> {
        self.forms.iter().map(|f| OneForm::new(f.clone(), t)).collect()
    }
}

/// `J_a^b(t)` with per-coefficient error estimates in storage order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratingSeriesValue {
    pub t: Complex64,
    pub a: Endpoint,
    pub b: Endpoint,
    pub series: NCSeries,
    pub errors: Vec<f64>,
}

impl GeneratingSeriesValue {
    pub fn identity(l: usize, depth: usize, a: Endpoint, b: Endpoint, t: Complex64) -> Self {
        let series = NCSeries::identity(l, depth);
        let errors = vec![0.0; series.len()];
        GeneratingSeriesValue { t, a, b, series, errors }
    }

    pub fn coefficient(&self, w: &[usize]) -> Result<Complex64> {
        self.series.coefficient(w).copied()
    }

    pub fn depth(&self) -> usize {
        self.series.depth()
    }

    /// Word-level table: `(word, re, im, error)`.
    pub fn table(&self) -> Vec<(String, f64, f64, f64)> {
        self.series
            .terms()
            .zip(&self.errors)
            .map(|((w, c), e)| (word_name(&w), c.re, c.im, *e))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportConfig {
    /// Relative to the a priori coefficient bounds, over the whole path.
    pub tolerance: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig { tolerance: 1e-11, initial_step: 0.02, min_step: 1e-9, max_steps: 2_000_000 }
    }
}

/// `(omega_j(z(u); t) dz/du)_j`.
fn omega_vector(omegas: &[OneForm], path: &GeodesicPath, u: f64) -> Result<Vec<Complex64>> {
    let z = path.point(u);
    let dz = path.derivative(u);
    omegas.iter().map(|o| Ok(o.eval(z)? * dz)).collect()
}

/// `out = (sum_m omega_m A_m) J` on dense storage.
fn apply_field(l: usize, offsets: &[usize], depth: usize, omega: &[Complex64], j: &[Complex64], out: &mut [Complex64]) {
    out[0] = Complex64::new(0.0, 0.0);
    let mut block = 1;
    for n in 1..=depth {
        let (dst, src) = (offsets[n], offsets[n - 1]);
        for (m, w) in omega.iter().enumerate() {
            for i in 0..block {
                out[dst + m * block + i] = *w * j[src + i];
            }
        }
        block *= l;
    }
}

struct Stepper {
    l: usize,
    depth: usize,
    offsets: Vec<usize>,
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

impl Stepper {
    fn new(l: usize, depth: usize, offsets: Vec<usize>, len: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); len];
        Stepper { l, depth, offsets, k: [z.clone(), z.clone(), z.clone(), z.clone()], tmp: z }
    }

    fn step(&mut self, j: &[Complex64], h: f64, w0: &[Complex64], wm: &[Complex64], w1: &[Complex64]) -> Vec<Complex64> {
        let (l, depth) = (self.l, self.depth);
        let [k1, k2, k3, k4] = &mut self.k;
        apply_field(l, &self.offsets, depth, w0, j, k1);
        for i in 0..j.len() {
            self.tmp[i] = j[i] + k1[i] * (h / 2.0);
        }
        apply_field(l, &self.offsets, depth, wm, &self.tmp, k2);
        for i in 0..j.len() {
            self.tmp[i] = j[i] + k2[i] * (h / 2.0);
        }
        apply_field(l, &self.offsets, depth, wm, &self.tmp, k3);
        for i in 0..j.len() {
            self.tmp[i] = j[i] + k3[i] * h;
        }
        apply_field(l, &self.offsets, depth, w1, &self.tmp, k4);
        (0..j.len()).map(|i| j[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0)).collect()
    }
}

/// Integral of `|omega_j|` over `[lo, hi]` by the composite trapezoid rule.
fn path_masses(omegas: &[OneForm], path: &GeodesicPath, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let n = 400;
    let h = (hi - lo) / n as f64;
    let mut mass = vec![0.0; omegas.len()];
    for i in 0..=n {
        let wt = if i == 0 || i == n { 0.5 } else { 1.0 };
        for (m, v) in omega_vector(omegas, path, lo + h * i as f64)?.iter().enumerate() {
            mass[m] += wt * h * v.norm();
        }
    }
    Ok(mass)
}

/// `J_a^b(Omega; t)` at depth `depth`.
pub fn transport(
    family: &FormFamily,
    a: &Endpoint,
    b: &Endpoint,
    t: Complex64,
    depth: usize,
    config: &TransportConfig,
) -> Result<GeneratingSeriesValue> {
    let l = family.len();
    let mut out = GeneratingSeriesValue::identity(l, depth, a.clone(), b.clone(), t);
    let path = GeodesicPath::new(a.clone(), b.clone())?;
    if l == 0 || depth == 0 || path.is_empty() {
        return Ok(out);
    }
    for e in [a, b] {
        if let Endpoint::Cusp(c) = e {
            if t.im == 0.0 && !c.is_infinity() && c.to_f64() == t.re {
                return Err(Error::InvalidArgument(format!("t = {} coincides with a path endpoint", t.re)));
            }
        }
    }
    let omegas = family.one_forms(t)?;
    let (lo, hi) = path.truncated_range(|u| Ok(omega_vector(&omegas, &path, u)?.iter().map(|v| v.norm()).collect()))?;
    let masses: Vec<f64> = path_masses(&omegas, &path, lo, hi)?.into_iter().map(|m| m.max(1e-300)).collect();

    let offsets: Vec<usize> = (0..=depth + 1).map(|n| if n <= depth { out.series.degree_offset(n) } else { out.series.len() }).collect();
    let len = out.series.len();
    let bounds: Vec<f64> = out
        .series
        .words()
        .map(|w| {
            let fact: f64 = (1..=w.len()).map(|i| i as f64).product();
            w.iter().map(|&m| masses[m]).product::<f64>() / fact
        })
        .collect();

    let mut stepper = Stepper::new(l, depth, offsets, len);
    let mut j = out.series.coefficients().to_vec();
    let mut errors = vec![0.0; len];
    let span = hi - lo;
    let mut u = lo;
    let mut h = config.initial_step.min(span);
    let mut w_u = omega_vector(&omegas, &path, u)?;
    let mut steps = 0;
    while u < hi {
        steps += 1;
        if steps > config.max_steps {
            return Err(Error::NonConvergence(format!("transport exceeded {} steps", config.max_steps)));
        }
        let last = u + h >= hi;
        let h_eff = if last { hi - u } else { h };
        let w_q1 = omega_vector(&omegas, &path, u + h_eff / 4.0)?;
        let w_mid = omega_vector(&omegas, &path, u + h_eff / 2.0)?;
        let w_q3 = omega_vector(&omegas, &path, u + 3.0 * h_eff / 4.0)?;
        let w_end = omega_vector(&omegas, &path, if last { hi } else { u + h_eff })?;
        let full = stepper.step(&j, h_eff, &w_u, &w_mid, &w_end);
        let half = stepper.step(&j, h_eff / 2.0, &w_u, &w_q1, &w_mid);
        let two = stepper.step(&half, h_eff / 2.0, &w_mid, &w_q3, &w_end);
        let err = (0..len).map(|i| (two[i] - full[i]).norm() / bounds[i]).fold(0.0, f64::max);
        let allowed = config.tolerance * h_eff / span;
        if err <= allowed {
            for i in 0..len {
                let d = (two[i] - full[i]) / 15.0;
                j[i] = two[i] + d;
                errors[i] += d.norm();
            }
            u = if last { hi } else { u + h_eff };
            w_u = w_end;
        }
        let factor = if err == 0.0 { 4.0 } else { (0.9 * (allowed / err).powf(0.2)).clamp(0.2, 4.0) };
        h = h_eff * factor;
        if h < config.min_step && u < hi {
            return Err(Error::NonConvergence(format!("transport step underflow at u = {u:.6}")));
        }
    }
    out.series = NCSeries::from_coefficients(l, depth, j)?;
    out.errors = errors;
    Ok(out)
}

/// Cached [`transport`].
pub fn transport_cached(
    cache: &PeriodCache,
    family: &FormFamily,
    a: &Endpoint,
    b: &Endpoint,
    t: Complex64,
    depth: usize,
    config: &TransportConfig,
) -> Result<GeneratingSeriesValue> {
    let key = format!(
        "series|{}|{}|{}|{:016x},{:016x}|{depth}|{:016x}",
        family.content_hash(),
        a.key(),
        b.key(),
        t.re.to_bits(),
        t.im.to_bits(),
        config.tolerance.to_bits()
    );
    if let Some(hit) = cache.get(&key) {
        return Ok(hit);
    }
    let v = transport(family, a, b, t, depth, config)?;
    cache.insert(&key, &v)?;
    Ok(v)
}

/// `J_a^b = J_c^b J_a^c` from `left` on `a -> c` and `right` on `c -> b`.
pub fn compose(left: &GeneratingSeriesValue, right: &GeneratingSeriesValue) -> Result<GeneratingSeriesValue> {
    if left.b != right.a {
        return Err(Error::MidpointMismatch(format!("{} vs {}", left.b, right.a)));
    }
    if left.t != right.t {
        return Err(Error::MidpointMismatch(format!("parameters {} and {} differ", left.t, right.t)));
    }
    let series = right.series.multiply(&left.series)?;
    let errors = left.errors.iter().zip(&right.errors).map(|(x, y)| x + y).collect();
    Ok(GeneratingSeriesValue { t: left.t, a: left.a.clone(), b: right.b.clone(), series, errors })
}

/// `gamma` applied to an endpoint.
pub fn act_endpoint(gamma: &UniModularMatrix, e: &Endpoint) -> Result<Endpoint> {
    Ok(match e {
        Endpoint::Cusp(c) => Endpoint::Cusp(gamma.act_cusp(c)),
        Endpoint::Point(z) => Endpoint::Point(gamma.act_moebius(*z)?),
    })
}

/// The weight action on coefficients: from `J_a^b` computed at `gamma t`,
/// returns the series whose word `w` coefficient is
/// `bold_v(gamma)^{-1} (ct + d)^{bold_k} I_a^b(w; gamma t)`, which equals
/// `J_{gamma^{-1} a}^{gamma^{-1} b}(t)`.
pub fn gamma_action(
    family: &FormFamily,
    j_at_gamma_t: &GeneratingSeriesValue,
    gamma: &UniModularMatrix,
    t: Complex64,
) -> Result<GeneratingSeriesValue> {
    let gt = gamma.act_moebius(t)?;
    if (gt - j_at_gamma_t.t).norm() > 1e-12 * gt.norm().max(1.0) {
        return Err(Error::InvalidArgument(format!("series was computed at {}, not at gamma t = {gt}", j_at_gamma_t.t)));
    }
    let ks = family.ks();
    let vs: Vec<Complex64> = family.forms.iter().map(|f| f.multiplier.value(gamma)).collect();
    let mut factors = Vec::with_capacity(j_at_gamma_t.series.len());
    for w in j_at_gamma_t.series.words() {
        let k: f64 = w.iter().map(|&m| ks[m]).sum();
        let v: Complex64 = w.iter().map(|&m| vs[m]).product();
        factors.push(v.inv() * lower_boundary_power(gamma, t, k)?);
    }
    let mut it = factors.iter();
    let series = j_at_gamma_t.series.scale_words(|_| *it.next().expect("one factor per word"));
    let errors = j_at_gamma_t.errors.iter().zip(&factors).map(|(e, f)| e * f.norm()).collect();
    let ginv = gamma.inverse();
    Ok(GeneratingSeriesValue {
        t,
        a: act_endpoint(&ginv, &j_at_gamma_t.a)?,
        b: act_endpoint(&ginv, &j_at_gamma_t.b)?,
        series,
        errors,
    })
}

/// All shuffles of `w1` and `w2`, with multiplicity.
pub fn shuffles(w1: &[usize], w2: &[usize]) -> Vec<Word> {
    if w1.is_empty() {
        return vec![w2.to_vec()];
    }
    if w2.is_empty() {
        return vec![w1.to_vec()];
    }
    let mut out = Vec::new();
    for mut s in shuffles(&w1[1..], w2) {
        s.insert(0, w1[0]);
        out.push(s);
    }
    for mut s in shuffles(w1, &w2[1..]) {
        s.insert(0, w2[0]);
        out.push(s);
    }
    out
}

/// `|c(w1) c(w2) - sum_{s in w1 sh w2} c(s)|`.
pub fn shuffle_residual(j: &GeneratingSeriesValue, w1: &[usize], w2: &[usize]) -> Result<f64> {
    if w1.len() + w2.len() > j.depth() {
        return Err(Error::ShapeMismatch(format!("|w1| + |w2| = {} exceeds depth {}", w1.len() + w2.len(), j.depth())));
    }
    if w1.is_empty() || w2.is_empty() {
        return Ok(0.0);
    }
    let lhs = j.coefficient(w1)? * j.coefficient(w2)?;
    let rhs: Complex64 = shuffles(w1, w2).iter().map(|s| j.coefficient(s)).sum::<Result<Complex64>>()?;
    Ok((lhs - rhs).norm())
}

/// `I_a^b(omega_{w_1}, ..., omega_{w_n}; t)` for `n <= 2` by nested
/// quadrature, independently of the transport.
pub fn nested_quadrature(
    family: &FormFamily,
    a: &Endpoint,
    b: &Endpoint,
    t: Complex64,
    word: &[usize],
    config: &QuadratureConfig,
) -> Result<Complex64> {
    let omegas = family.one_forms(t)?;
    match word {
        [] => Ok(Complex64::new(1.0, 0.0)),
        [m] => Ok(period_integral(&omegas[*m], a, b, config)?.value),
        [m1, m2] => {
            let path = GeodesicPath::new(a.clone(), b.clone())?;
            let (outer, inner) = (&omegas[*m1], &omegas[*m2]);
            let est = integrate_along(
                &path,
                |z1| {
                    let sub = GeodesicPath::new(a.clone(), Endpoint::Point(z1))?;
                    let inside = integrate_along(&sub, |z2| inner.eval(z2), config)?.value;
                    Ok(outer.eval(z1)? * inside)
                },
                config,
            )?;
            Ok(est.value)
        }
        _ => Err(Error::InvalidArgument("nested quadrature is limited to depth 2".into())),
    }
}
