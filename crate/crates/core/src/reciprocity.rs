//! Noncommutative reciprocity functions built from `J_0^inf` at rational
//! parameters, and their functional equations.
//!
//! For coprime `p, q > 0`, `f(p, q)` is `J_0^inf(t = q/p)` with the coefficient of
//! each word `w` multiplied by `p^{bold_k(w)}`. Since `p > 0` this is a ring
//! automorphism of the series algebra, so `f(p, q)` is group-like.
//! Pairs with `q < 0` are reached by the extension
//! `f(p, q) = (v(sigma)* f(-q, p))^{-1}`, and `p < 0` by `f(-p, -q) = f(p, q)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_core::{normalize, CoprimePair};
use crate::iterated_periods::{transport, transport_cached, FormFamily, TransportConfig};
use crate::modular_group::UniModularMatrix;
use crate::multipliers::lower_boundary_power;
use crate::nc_series::NCSeries;
use crate::quadrature::{absolute_integral_along, period_integral, Endpoint, GeodesicPath, OneForm, PeriodCache, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// From `J_0^inf` at `t = q/p`, `p, q > 0`.
    Direct,
    /// From the sign-changing extension.
    Extended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReciprocityValue {
    pub pair: CoprimePair,
    pub value: NCSeries,
    pub provenance: Provenance,
}

/// `f_{0,j}(p, q)`: the `A_j` coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarReciprocity {
    pub j: usize,
    pub value: Complex64,
}

/// Absolute and scale-normalized size of a coefficientwise difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub absolute: f64,
    /// Each word's difference divided by the magnitude of the terms that
    /// produced it.
    pub relative: f64,
}

impl Residual {
    pub const ZERO: Residual = Residual { absolute: 0.0, relative: 0.0 };

    fn scalar(lhs: Complex64, terms: &[Complex64]) -> Self {
        Self::scalar_with_floor(lhs, terms, f64::MIN_POSITIVE)
    }

    /// As [`Residual::scalar`], with the scale bounded below by `floor`.
    fn scalar_with_floor(lhs: Complex64, terms: &[Complex64], floor: f64) -> Self {
        let rhs: Complex64 = terms.iter().sum();
        let scale = terms.iter().map(|t| t.norm()).fold(lhs.norm(), f64::max).max(floor);
        let absolute = (lhs - rhs).norm();
        Residual { absolute, relative: absolute / scale }
    }

    pub fn max(self, other: Residual) -> Residual {
        Residual { absolute: self.absolute.max(other.absolute), relative: self.relative.max(other.relative) }
    }
}

/// `|lhs - x y|` per word, normalized by `max(|lhs_w|, sum_{uv = w} |x_u| |y_v|)`.
pub fn product_residual(lhs: &NCSeries, x: &NCSeries, y: &NCSeries) -> Result<Residual> {
    let rhs = x.multiply(y)?;
    let ax = NCSeries::from_coefficients(x.num_vars(), x.depth(), x.coefficients().iter().map(|c| Complex64::new(c.norm(), 0.0)).collect())?;
    let ay = NCSeries::from_coefficients(y.num_vars(), y.depth(), y.coefficients().iter().map(|c| Complex64::new(c.norm(), 0.0)).collect())?;
    let scale = ax.multiply(&ay)?;
    let mut r = Residual::ZERO;
    for ((l, p), s) in lhs.coefficients().iter().zip(rhs.coefficients()).zip(scale.coefficients()) {
        let d = (l - p).norm();
        r = r.max(Residual { absolute: d, relative: d / s.re.max(l.norm()).max(f64::MIN_POSITIVE) });
    }
    Ok(r)
}

/// Computes and memoizes `f(p, q)` for one family, depth and tolerance.
pub struct ReciprocityEngine {
    pub family: FormFamily,
    pub depth: usize,
    pub transport: TransportConfig,
    pub quadrature: QuadratureConfig,
    cache: Option<Arc<PeriodCache>>,
    memo: Mutex<HashMap<(i64, i64), ReciprocityValue>>,
}

impl ReciprocityEngine {
    pub fn new(family: FormFamily, depth: usize) -> Self {
        ReciprocityEngine {
            family,
            depth,
            transport: TransportConfig::default(),
            quadrature: QuadratureConfig::default(),
            cache: None,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_cache(mut self, cache: Arc<PeriodCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_configs(mut self, transport: TransportConfig, quadrature: QuadratureConfig) -> Self {
        self.transport = transport;
        self.quadrature = quadrature;
        self
    }

    fn l(&self) -> usize {
        self.family.len()
    }

    /// `J_0^inf(t)` with `p^{bold_k}` scaling, for any real `t = q/p`, `p > 0`.
    /// Only `q > 0` is a reciprocity value; `q < 0` is used to test the
    /// scalar identity against the extension.
    fn scaled_transport(&self, p: i64, q: i64) -> Result<NCSeries> {
        if q == 0 {
            return Err(Error::InvalidArgument("q = 0 puts t at the path endpoint 0".into()));
        }
        let t = Complex64::new(q as f64 / p as f64, 0.0);
        let (a, b) = (Endpoint::integer(0), Endpoint::infinity());
        let j = match &self.cache {
            Some(c) => transport_cached(c, &self.family, &a, &b, t, self.depth, &self.transport)?,
            None => transport(&self.family, &a, &b, t, self.depth, &self.transport)?,
        };
        let ks = self.family.ks();
        let pf = p as f64;
        Ok(j.series.scale_words(|w| Complex64::new(pf.powf(w.iter().map(|&m| ks[m]).sum()), 0.0)))
    }

    /// `f(p, q)` for `p, q > 0`.
    pub fn f_direct(&self, p: i64, q: i64) -> Result<ReciprocityValue> {
        let pair = normalize(p, q)?;
        if p <= 0 || q <= 0 {
            return Err(Error::InvalidArgument(format!("direct reciprocity values need p, q > 0, got ({p}, {q})")));
        }
        if let Some(v) = self.memo.lock().expect("memo").get(&(p, q)) {
            return Ok(v.clone());
        }
        let v = ReciprocityValue { pair, value: self.scaled_transport(p, q)?, provenance: Provenance::Direct };
        self.memo.lock().expect("memo").insert((p, q), v.clone());
        Ok(v)
    }

    /// `f(p, q) = (v(sigma)* f(-q, p))^{-1}` for `p > 0 > q`.
    pub fn f_extended(&self, p: i64, q: i64) -> Result<ReciprocityValue> {
        let pair = normalize(p, q)?;
        if p <= 0 || q >= 0 {
            return Err(Error::InvalidArgument(format!("the extension needs p > 0 > q, got ({p}, {q})")));
        }
        let base = self.f_direct(-q, p)?;
        let chi = self.family.character(&UniModularMatrix::sigma());
        let value = base.value.diagonal_scale(&chi)?.invert()?;
        Ok(ReciprocityValue { pair, value, provenance: Provenance::Extended })
    }

    /// `f` on any coprime pair with `p, q != 0`.
    pub fn f(&self, p: i64, q: i64) -> Result<ReciprocityValue> {
        normalize(p, q)?;
        match (p.signum(), q.signum()) {
            (0, _) | (_, 0) => Err(Error::InvalidArgument(format!("({p}, {q}) has a zero entry; excluded"))),
            (1, 1) => self.f_direct(p, q),
            (1, -1) => self.f_extended(p, q),
            _ => {
                let mut v = self.f(-p, -q)?;
                v.pair = CoprimePair::new(p, q)?;
                Ok(v)
            }
        }
    }

    /// `p^k int_0^inf |omega_j(z; q/p)| |dz|`, the natural size of `f_{0,j}(p, q)`.
    pub fn scalar_mass(&self, j: usize, p: i64, q: i64) -> Result<f64> {
        let form = self.family.forms[j].clone();
        let k = form.k();
        let omega = OneForm::new(form, Complex64::new(q as f64 / p as f64, 0.0))?;
        let path = GeodesicPath::new(Endpoint::integer(0), Endpoint::infinity())?;
        Ok((p as f64).powf(k) * absolute_integral_along(&path, |z| omega.eval(z), &self.quadrature)?)
    }

    /// `f_{0,j}(p, q)` for every `j`.
    pub fn scalar(&self, p: i64, q: i64) -> Result<Vec<ScalarReciprocity>> {
        let v = self.f(p, q)?;
        (0..self.l()).map(|j| Ok(ScalarReciprocity { j, value: *v.value.coefficient(&[j])? })).collect()
    }

    /// `f(p, q)` vs `(v(theta)* f(p, q + p)) (v(theta sigma theta)* f(q + p, q))`.
    pub fn series_residual(&self, p: i64, q: i64) -> Result<Residual> {
        if self.l() == 0 {
            return Ok(Residual::ZERO);
        }
        let lhs = self.f_direct(p, q)?;
        let x = self.f_direct(p, q + p)?.value.diagonal_scale(&self.family.character(&UniModularMatrix::theta()))?;
        let y = self.f_direct(q + p, q)?.value.diagonal_scale(&self.family.character(&UniModularMatrix::theta_sigma_theta()))?;
        product_residual(&lhs.value, &x, &y)
    }

    /// Depth-one part of [`Self::series_residual`], per form:
    /// `f_{0,j}(p,q) = v(theta)^{-1} f_{0,j}(p,q+p) + v(theta sigma theta)^{-1} f_{0,j}(q+p,q)`.
    pub fn scalar_residual(&self, p: i64, q: i64) -> Result<Residual> {
        let lhs = self.scalar(p, q)?;
        let a = self.scalar(p, q + p)?;
        let b = self.scalar(q + p, q)?;
        let mut r = Residual::ZERO;
        for (j, form) in self.family.forms.iter().enumerate() {
            let vt = form.multiplier.value(&UniModularMatrix::theta());
            let vtst = form.multiplier.value(&UniModularMatrix::theta_sigma_theta());
            r = r.max(Residual::scalar(lhs[j].value, &[a[j].value / vt, b[j].value / vtst]));
        }
        Ok(r)
    }

    /// `f_{0,j}(p, q) + v(sigma) f_{0,j}(-q, p) = 0` for `p > 0 > q`, with the
    /// left term computed directly from `J_0^inf` at the negative parameter.
    pub fn sign_change_scalar_residual(&self, p: i64, q: i64) -> Result<Residual> {
        normalize(p, q)?;
        if p <= 0 || q >= 0 {
            return Err(Error::InvalidArgument(format!("needs p > 0 > q, got ({p}, {q})")));
        }
        let direct = self.scaled_transport(p, q)?;
        let other = self.f_direct(-q, p)?;
        let mut r = Residual::ZERO;
        for (j, form) in self.family.forms.iter().enumerate() {
            let vs = form.multiplier.value(&UniModularMatrix::sigma());
            let floor = self.scalar_mass(j, -q, p)?;
            r = r.max(Residual::scalar_with_floor(*direct.coefficient(&[j])?, &[-vs * other.value.coefficient(&[j])?], floor));
        }
        Ok(r)
    }

    /// The extension applied twice, `E(E(x))` with `E(x) = (v(sigma)* x)^{-1}`,
    /// against `v(-1)* x`, for `x = f(p, q)`.
    pub fn double_extension_residual(&self, p: i64, q: i64) -> Result<f64> {
        let x = self.f_direct(p, q)?.value;
        let chi = self.family.character(&UniModularMatrix::sigma());
        let e = |s: &NCSeries| -> Result<NCSeries> { s.diagonal_scale(&chi)?.invert() };
        let twice = e(&e(&x)?)?;
        let minus_one = self.family.character(&UniModularMatrix::identity().neg());
        twice.max_rel_diff(&x.diagonal_scale(&minus_one)?, 1.0)
    }

    /// Residuals over all coprime `1 <= p, q <= bound`, in parallel, sorted by pair.
    pub fn scalar_grid(&self, bound: i64) -> Vec<((i64, i64), Result<Residual>)> {
        let pairs: Vec<(i64, i64)> =
            (1..=bound).flat_map(|p| (1..=bound).map(move |q| (p, q))).filter(|&(p, q)| normalize(p, q).is_ok()).collect();
        let mut out: Vec<_> = pairs.par_iter().map(|&(p, q)| ((p, q), self.scalar_residual(p, q))).collect();
        out.sort_by_key(|x| x.0);
        out
    }
}

/// The individual steps of the three-term identity for one form, at `t = q/p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeTermSteps {
    /// `I_0^inf(t) = I_{-1}^inf(t) + I_0^{-1}(t)`.
    pub split: Residual,
    /// `I_{-1}^inf(t) = v(theta)^{-1} I_0^inf(t + 1)`.
    pub theta_transform: Residual,
    /// `I_0^{-1}(t) = v(theta sigma theta)^{-1} (t + 1)^k I_0^inf(t / (t + 1))`.
    pub theta_sigma_theta_transform: Residual,
    /// The three-term relation in `t`.
    pub combined: Residual,
    /// `p^k ((q + p)/p)^k = (q + p)^k`.
    pub prefactor: Residual,
    /// The relation scaled by `p^k`.
    pub scaled: Residual,
}

impl ThreeTermSteps {
    pub fn worst(&self) -> Residual {
        [self.split, self.theta_transform, self.theta_sigma_theta_transform, self.combined, self.prefactor, self.scaled]
            .into_iter()
            .fold(Residual::ZERO, Residual::max)
    }
}

/// Checks each step of the three-term identity for form `j` by independent
/// single quadratures.
pub fn three_term_steps(family: &FormFamily, j: usize, p: i64, q: i64, config: &QuadratureConfig) -> Result<ThreeTermSteps> {
    normalize(p, q)?;
    if p <= 0 || q <= 0 {
        return Err(Error::InvalidArgument(format!("needs p, q > 0, got ({p}, {q})")));
    }
    let form = family.forms.get(j).ok_or_else(|| Error::InvalidArgument(format!("no form {j}")))?.clone();
    let k = form.k();
    let (pf, qf) = (p as f64, q as f64);
    let t = Complex64::new(qf / pf, 0.0);
    let integral = |a: Endpoint, b: Endpoint, t: Complex64| -> Result<Complex64> {
        Ok(period_integral(&OneForm::new(form.clone(), t)?, &a, &b, config)?.value)
    };
    let (zero, inf, minus_one) = (Endpoint::integer(0), Endpoint::infinity(), Endpoint::integer(-1));
    let i_0_inf = integral(zero.clone(), inf.clone(), t)?;
    let i_m1_inf = integral(minus_one.clone(), inf.clone(), t)?;
    let i_0_m1 = integral(zero.clone(), minus_one, t)?;
    let theta = UniModularMatrix::theta();
    let tst = UniModularMatrix::theta_sigma_theta();
    let vt = form.multiplier.value(&theta);
    let vtst = form.multiplier.value(&tst);
    let shifted = integral(zero.clone(), inf.clone(), t + 1.0)?;
    let moved_t = tst.act_moebius(t)?;
    let moved = integral(zero, inf, moved_t)?;
    let factor = lower_boundary_power(&tst, t, k)?;
    let pk = pf.powf(k);
    let prefactor_lhs = pk * ((qf + pf) / pf).powf(k);
    let prefactor_rhs = (qf + pf).powf(k);
    Ok(ThreeTermSteps {
        split: Residual::scalar(i_0_inf, &[i_m1_inf, i_0_m1]),
        theta_transform: Residual::scalar(i_m1_inf, &[shifted / vt]),
        theta_sigma_theta_transform: Residual::scalar(i_0_m1, &[factor * moved / vtst]),
        combined: Residual::scalar(i_0_inf, &[shifted / vt, factor * moved / vtst]),
        prefactor: Residual::scalar(Complex64::new(prefactor_lhs, 0.0), &[Complex64::new(prefactor_rhs, 0.0)]),
        scaled: Residual::scalar(i_0_inf * pk, &[shifted * pk / vt, moved * prefactor_rhs / vtst]),
    })
}
