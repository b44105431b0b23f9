//! Unitary multiplier systems of real weight for the eta-power family, branch
//! correct automorphy factors, and the weight actions on functions of the
//! upper and lower half-planes.
//!
//! Conventions. A form `F` of weight `w` with multiplier `v` satisfies
//! `F(gamma z) = v(gamma) (cz + d)^w F(z)`, with `arg(cz + d)` in `(-pi, pi]`
//! on the upper half-plane. The invariance-preserving right action on `H+` is
//! therefore `(F|gamma)(z) = j_{v,w}(gamma, z)^{-1} F(gamma z)`, which for
//! trivial `v` and even integral `w` is the classical `(cz+d)^{-w} F(gamma z)`.
//! On `H-` the action used for period functions is
//! `(P|gamma)(t) = v(gamma)^{-1} (ct + d)^k P(gamma t)` with `arg(ct + d)` in
//! `[-pi, pi)`. Note that this is *not* `j_{v,k}(gamma, t) P(gamma t)`: the
//! multiplier enters inverted and the power uses the bare factor.

use std::f64::consts::PI;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_core::{dedekind_sum, rat_int, Rational};
use crate::modular_group::UniModularMatrix;

/// Which half-plane a power is taken on; selects the branch of `arg`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfPlane {
    /// `arg` in `(-pi, pi]`.
    Upper,
    /// `arg` in `[-pi, pi)`.
    Lower,
}

/// Argument of `z` on the branch attached to `half`.
pub fn branch_arg(z: Complex64, half: HalfPlane) -> f64 {
    let mut arg = z.im.atan2(z.re);
    if z.im == 0.0 && z.re < 0.0 {
        arg = match half {
            HalfPlane::Upper => PI,
            HalfPlane::Lower => -PI,
        };
    }
    arg
}

/// `base^exponent = exp(exponent (log|base| + i arg))` with the branch of `half`.
pub fn real_power(base: Complex64, exponent: f64, half: HalfPlane) -> Result<Complex64> {
    if base.re == 0.0 && base.im == 0.0 {
        return Err(Error::ZeroBase);
    }
    if exponent == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let log = Complex64::new(base.norm().ln(), branch_arg(base, half));
    Ok((log * exponent).exp())
}

/// Complex log on the branch of `half`.
pub fn branch_log(base: Complex64, half: HalfPlane) -> Complex64 {
    Complex64::new(base.norm().ln(), branch_arg(base, half))
}

/// `exp(i pi x)`.
pub fn unit_phase(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, PI * x)
}

/// Small-denominator rational `n/m` equal to `w` up to f64 rounding, if any.
pub fn rational_weight(w: f64) -> Option<(i64, i64)> {
    for m in 1..=1000i64 {
        let x = w * m as f64;
        let n = x.round();
        if (x - n).abs() <= 1e-9 * x.abs().max(1.0) && n.abs() < 1e12 {
            let n = n as i64;
            let g = n.gcd(&m);
            return Some((n / g, m / g));
        }
    }
    None
}

/// Phase of the eta-power multiplier divided by `pi w`, exact:
/// `v(gamma) = exp(i pi w R(gamma))`.
///
/// For `c > 0`, `R = (a + d)/(6c) - 2 s(d, c) - 1/2`; for `c = 0`,
/// `R = bd/6` (minus 1 when `d = -1`); for `c < 0`, `R(gamma) = R(-gamma) + 1`.
pub fn eta_phase_ratio(gamma: &UniModularMatrix) -> Rational {
    let UniModularMatrix { a, b, c, d } = *gamma;
    if c > 0 {
        let s = dedekind_sum(d, c).expect("gcd(c, d) = 1 for SL2 matrices");
        Rational::new(BigInt::from(a + d), BigInt::from(6 * c)) - s * rat_int(2) - Rational::new(1.into(), 2.into())
    } else if c == 0 {
        let base = Rational::new(BigInt::from(b * d), BigInt::from(6));
        if d < 0 {
            base - rat_int(1)
        } else {
            base
        }
    } else {
        eta_phase_ratio(&gamma.neg()) + rat_int(1)
    }
}

fn phase_from_ratio(w: f64, ratio: &Rational) -> Complex64 {
    match rational_weight(w) {
        Some((n, m)) => {
            // reduce n R / m modulo 2 exactly
            let x = ratio * Rational::new(BigInt::from(n), BigInt::from(m));
            let two = BigInt::from(2);
            let reduced_num = x.numer().mod_floor(&(&two * x.denom()));
            let reduced = Rational::new(reduced_num, x.denom().clone());
            unit_phase(reduced.to_f64().unwrap_or(0.0))
        }
        None => unit_phase(w * ratio.to_f64().unwrap_or(0.0)),
    }
}

/// `v(gamma)` for `eta^{2w}`, the form of weight `w` with leading exponent `w/12`.
pub fn eta_power_multiplier(w: f64, gamma: &UniModularMatrix) -> Complex64 {
    phase_from_ratio(w, &eta_phase_ratio(gamma))
}

/// A unitary multiplier system of real weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MultiplierSystem {
    /// The system of `eta^{2w}`, of weight `w`.
    EtaPower { w: f64 },
    /// `v = 1`; a multiplier system only for even integral weight.
    Trivial { weight: f64 },
}

impl MultiplierSystem {
    pub fn eta_power(w: f64) -> Self {
        MultiplierSystem::EtaPower { w }
    }

    pub fn weight(&self) -> f64 {
        match *self {
            MultiplierSystem::EtaPower { w } => w,
            MultiplierSystem::Trivial { weight } => weight,
        }
    }

    pub fn value(&self, gamma: &UniModularMatrix) -> Complex64 {
        match *self {
            MultiplierSystem::EtaPower { w } => eta_power_multiplier(w, gamma),
            MultiplierSystem::Trivial { .. } => Complex64::new(1.0, 0.0),
        }
    }

    /// `j_{v,k}(gamma, z) = v(gamma) (cz + d)^k` on the upper half-plane.
    pub fn automorphy_factor(&self, k: f64, gamma: &UniModularMatrix, z: Complex64) -> Result<Complex64> {
        Ok(self.value(gamma) * real_power(gamma.bare_factor(z), k, HalfPlane::Upper)?)
    }

    /// The lower half-plane factor `v(gamma)^{-1} (ct + d)^k` of the period action.
    /// For real `t` this is the boundary value from `H-`.
    pub fn period_factor(&self, k: f64, gamma: &UniModularMatrix, t: Complex64) -> Result<Complex64> {
        Ok(self.value(gamma).inv() * lower_boundary_power(gamma, t, k)?)
    }
}

/// `(ct + d)^k` on `H-` with `arg` in `[-pi, pi)`, continued to real `t`
/// as the limit from below.
pub fn lower_boundary_power(gamma: &UniModularMatrix, t: Complex64, k: f64) -> Result<Complex64> {
    let base = gamma.bare_factor(t);
    if t.im == 0.0 && base.re < 0.0 && gamma.c < 0 {
        // c(t - i0) + d lies just above the negative axis
        return real_power(Complex64::new(base.re, 0.0), k, HalfPlane::Upper);
    }
    real_power(Complex64::new(base.re, if t.im == 0.0 { 0.0 } else { base.im }), k, HalfPlane::Lower)
}

/// `|j(gamma delta, z) - j(gamma, delta z) j(delta, z)|`, relative to `max(1, |j(gamma delta, z)|)`.
pub fn cocycle_residual(
    v: &MultiplierSystem,
    k: f64,
    gamma: &UniModularMatrix,
    delta: &UniModularMatrix,
    z: Complex64,
) -> Result<f64> {
    let dz = delta.act_moebius(z)?;
    let lhs = v.automorphy_factor(k, &(*gamma * *delta), z)?;
    let rhs = v.automorphy_factor(k, gamma, dz)? * v.automorphy_factor(k, delta, z)?;
    Ok((lhs - rhs).norm() / lhs.norm().max(1.0))
}

/// Direction of a weight action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionDirection {
    /// On `H+`: `F(z) -> j_{v,k}(gamma, z)^{-1} F(gamma z)`.
    Plus,
    /// On `H-`: `P(t) -> v(gamma)^{-1} (ct + d)^k P(gamma t)`.
    Minus,
}

pub type ComplexFn = Arc<dyn Fn(Complex64) -> Result<Complex64> + Send + Sync>;

/// The transformed function `F|gamma`. Both directions are right actions:
/// `(F|gamma)|delta = F|(gamma delta)`.
pub fn weight_action(
    f: ComplexFn,
    v: MultiplierSystem,
    k: f64,
    gamma: UniModularMatrix,
    direction: ActionDirection,
) -> ComplexFn {
    Arc::new(move |z: Complex64| {
        let gz = gamma.act_moebius(z)?;
        let factor = match direction {
            ActionDirection::Plus => v.automorphy_factor(k, &gamma, z)?.inv(),
            ActionDirection::Minus => v.period_factor(k, &gamma, z)?,
        };
        Ok(factor * f(gz)?)
    })
}

/// True when `phase` is an integer multiple of `2 pi` up to `tol`.
pub fn is_trivial_phase(v: Complex64, tol: f64) -> bool {
    (v - Complex64::new(1.0, 0.0)).norm() <= tol
}

/// `exp(i pi x)` for rational `x`, with `x` reduced mod 2 first.
pub fn rational_unit_phase(x: &Rational) -> Complex64 {
    let two = BigInt::from(2);
    let num = x.numer().mod_floor(&(&two * x.denom()));
    if num.is_zero() {
        return Complex64::new(1.0, 0.0);
    }
    unit_phase(Rational::new(num, x.denom().clone()).to_f64().unwrap_or(0.0))
}
