//! Cusp forms of real weight: `eta^{2w}` as a q-expansion with fractional
//! leading exponent `w/12`, and its evaluation anywhere on the upper half-plane.
//!
//! Direct summation is used where `Im z` is large enough for the truncated
//! series; elsewhere the point is moved into the standard fundamental domain
//! by `z -> z - n` and `z -> -1/z`, accumulating the logarithm of the
//! automorphy factors along the way. Working with the log keeps values near
//! the cusps (which underflow) and their phases exact.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::modular_group::UniModularMatrix;
use crate::multipliers::{branch_log, HalfPlane, MultiplierSystem};

pub const DEFAULT_TRUNCATION: usize = 256;

/// Weights shipped as built-in forms.
pub const BUILT_IN_WEIGHTS: [f64; 4] = [0.5, 5.3, 10.6, 12.0];

/// `q^alpha * sum_m a_m q^m`, `q = e^{2 pi i z}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QExpansion {
    pub alpha: f64,
    pub coefficients: Vec<f64>,
    /// `ln` of a majorant `|a_m| <= c_m`, the coefficients of `prod (1 - x^n)^{-2w}`.
    #[serde(skip)]
    log_majorant: Vec<f64>,
}

impl QExpansion {
    pub fn truncation(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Bound on `sum_{m > n} |a_m| r^m` for `r < 1`.
    fn tail_bound(&self, n: usize, r: f64) -> f64 {
        let m_max = self.truncation();
        let ln_r = r.ln();
        let mut total = 0.0;
        for m in (n + 1)..=m_max {
            total += (self.log_majorant[m] + m as f64 * ln_r).exp();
        }
        // beyond the stored terms: geometric domination with the last ratio
        let g = (self.log_majorant[m_max] - self.log_majorant[m_max - 1]).exp();
        let gr = g * r;
        if gr >= 1.0 {
            return f64::INFINITY;
        }
        total + (self.log_majorant[m_max] + m_max as f64 * ln_r).exp() * gr / (1.0 - gr)
    }
}

fn divisor_sums(n: usize) -> Vec<f64> {
    let mut s = vec![0.0; n + 1];
    for d in 1..=n {
        let mut m = d;
        while m <= n {
            s[m] += d as f64;
            m += d;
        }
    }
    s
}

/// Coefficients of `prod_{n>=1} (1 - q^n)^{exponent}` up to `q^m_max`, by
/// `m b_m = -exponent * sum_{j=1}^m sigma(j) b_{m-j}`.
pub fn product_coefficients(exponent: f64, m_max: usize) -> Vec<f64> {
    let sigma = divisor_sums(m_max);
    let mut b = vec![0.0; m_max + 1];
    b[0] = 1.0;
    for m in 1..=m_max {
        let s: f64 = (1..=m).map(|j| sigma[j] * b[m - j]).sum();
        b[m] = -exponent * s / m as f64;
    }
    b
}

fn log_majorant(exponent: f64, m_max: usize) -> Vec<f64> {
    let sigma = divisor_sums(m_max);
    let mut lc = vec![0.0f64; m_max + 1];
    for m in 1..=m_max {
        let terms: Vec<f64> = (1..=m).map(|j| sigma[j].ln() + lc[m - j]).collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
        lc[m] = (exponent.abs() / m as f64).ln() + top + sum.ln();
    }
    lc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormFamilyTag {
    EtaPower,
}

/// A cusp form of weight `w` with multiplier system `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct CuspForm {
    pub weight: f64,
    pub multiplier: MultiplierSystem,
    pub expansion: QExpansion,
}

/// On-disk form definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormDefinition {
    pub family: FormFamilyTag,
    pub w: f64,
    pub alpha: f64,
    pub weight: f64,
    pub coefficients: Vec<f64>,
    #[serde(rename = "M")]
    pub m: usize,
}

/// `eta^{2w}`: weight `w`, leading exponent `w/12`, `M` coefficients beyond `a_0`.
pub fn eta_power(w: f64, m: usize) -> Result<CuspForm> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidArgument(format!("eta power needs w > 0, got {w}")));
    }
    if m < 1 {
        return Err(Error::InvalidArgument("truncation M must be >= 1".into()));
    }
    Ok(CuspForm {
        weight: w,
        multiplier: MultiplierSystem::eta_power(w),
        expansion: QExpansion {
            alpha: w / 12.0,
            coefficients: product_coefficients(2.0 * w, m),
            log_majorant: log_majorant(2.0 * w, m),
        },
    })
}

/// The discriminant `Delta = eta^24`.
pub fn delta() -> CuspForm {
    eta_power(12.0, DEFAULT_TRUNCATION).expect("valid parameters")
}

/// Largest imaginary part below which direct summation is not attempted.
const DIRECT_MIN_IM: f64 = 0.8;

impl CuspForm {
    /// `k` in the weight `k + 2`.
    pub fn k(&self) -> f64 {
        self.weight - 2.0
    }

    pub fn alpha(&self) -> f64 {
        self.expansion.alpha
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.expansion.coefficients
    }

    pub fn definition(&self) -> FormDefinition {
        FormDefinition {
            family: FormFamilyTag::EtaPower,
            w: self.weight,
            alpha: self.alpha(),
            weight: self.weight,
            coefficients: self.expansion.coefficients.clone(),
            m: self.expansion.truncation(),
        }
    }

    pub fn from_definition(def: &FormDefinition) -> Result<Self> {
        let form = eta_power(def.w, def.m)?;
        let consistent = (def.weight - def.w).abs() < 1e-12
            && (def.alpha - def.w / 12.0).abs() < 1e-12
            && def.coefficients.len() == form.expansion.coefficients.len()
            && def
                .coefficients
                .iter()
                .zip(&form.expansion.coefficients)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * b.abs().max(1.0));
        if !consistent {
            return Err(Error::Parse(format!("form definition for w = {} is inconsistent with eta^(2w)", def.w)));
        }
        Ok(form)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.definition()).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_definition(&serde_json::from_str(s)?)
    }

    /// SHA-256 of the JSON definition, hex.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Same form with a different truncation length.
    pub fn with_truncation(&self, m: usize) -> Result<Self> {
        eta_power(self.weight, m)
    }

    /// Direct summation `sum a_m e^{2 pi i (alpha + m) z}` together with a rigorous
    /// bound on the discarded tail.
    pub fn evaluate_with_bound(&self, z: Complex64) -> Result<(Complex64, f64)> {
        if !(z.im > 0.0) {
            return Err(Error::NotInUpperHalfPlane(z.to_string()));
        }
        let (log_sum, bound) = self.direct_log(z)?;
        let value = log_sum.exp();
        let prefactor = (-2.0 * PI * self.alpha() * z.im).exp();
        Ok((value, bound * prefactor))
    }

    /// Direct summation; fails if the tail bound exceeds `tol`.
    pub fn evaluate(&self, z: Complex64, tol: f64) -> Result<Complex64> {
        let (v, bound) = self.evaluate_with_bound(z)?;
        if bound > tol {
            return Err(Error::TailBound { bound, tolerance: tol });
        }
        Ok(v)
    }

    /// Returns `(ln F(z), tail bound of the plain sum)` by direct summation.
    fn direct_log(&self, z: Complex64) -> Result<(Complex64, f64)> {
        let q = Complex64::new(0.0, 2.0 * PI * z.re).exp() * (-2.0 * PI * z.im).exp();
        let r = q.norm();
        let coeffs = &self.expansion.coefficients;
        let mut sum = Complex64::new(coeffs[0], 0.0);
        let mut qm = Complex64::new(1.0, 0.0);
        let mut used = 0;
        for (m, a) in coeffs.iter().enumerate().skip(1) {
            qm *= q;
            sum += qm * *a;
            used = m;
            if (self.expansion.log_majorant[m] + m as f64 * r.ln()).exp() < 1e-18 * sum.norm() {
                break;
            }
        }
        let bound = if r == 0.0 { 0.0 } else { self.expansion.tail_bound(used, r) };
        let lead = Complex64::new(0.0, 2.0 * PI * self.alpha()) * z;
        Ok((lead + sum.ln(), bound))
    }

    /// Evaluation through `F(z) = F(sigma z) / j_{v,w}(sigma, z)`, for points near 0.
    pub fn evaluate_near_zero(&self, z: Complex64, tol: f64) -> Result<Complex64> {
        if !(z.im > 0.0) {
            return Err(Error::NotInUpperHalfPlane(z.to_string()));
        }
        let s = UniModularMatrix::sigma();
        let sz = s.act_moebius(z)?;
        let j = self.multiplier.automorphy_factor(self.weight, &s, z)?;
        Ok(self.evaluate(sz, tol)? / j)
    }

    /// `ln F(z)` anywhere on `H+`, via reduction to the fundamental domain.
    /// The imaginary part is the argument of `F(z)` on a continuous branch
    /// only up to multiples of `2 pi`.
    pub fn log_value(&self, z: Complex64) -> Result<Complex64> {
        if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NotInUpperHalfPlane(z.to_string()));
        }
        let w = self.weight;
        let mut z = z;
        let mut acc = Complex64::new(0.0, 0.0);
        for _ in 0..10_000 {
            if z.im >= DIRECT_MIN_IM {
                let (l, _) = self.direct_log(z)?;
                return Ok(acc + l);
            }
            let n = z.re.round();
            if n != 0.0 {
                // F(z) = e^{i pi w n / 6} F(z - n)
                acc += Complex64::new(0.0, PI * w * n / 6.0);
                z -= n;
            }
            if z.norm_sqr() < 1.0 {
                // F(z) = e^{i pi w / 2} z^{-w} F(-1/z)
                acc += Complex64::new(0.0, PI * w / 2.0) - branch_log(z, HalfPlane::Upper) * w;
                z = -z.inv();
            } else {
                let (l, _) = self.direct_log(z)?;
                return Ok(acc + l);
            }
        }
        Err(Error::NonConvergence(format!("fundamental-domain reduction of {z} did not terminate")))
    }

    /// `F(z)` anywhere on `H+`.
    pub fn value(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.log_value(z)?.exp())
    }

    /// `|F|` bound at height `y` from the leading term plus the rigorous tail:
    /// `|F(x + iy)| <= e^{-2 pi alpha y} (sum |a_m| r^m + tail)`.
    pub fn decay_bound(&self, y: f64) -> f64 {
        let r = (-2.0 * PI * y).exp();
        let coeffs = &self.expansion.coefficients;
        let mut s = 0.0;
        let mut rm = 1.0;
        let mut used = 0;
        for (m, a) in coeffs.iter().enumerate() {
            s += a.abs() * rm;
            used = m;
            rm *= r;
            if rm < 1e-30 {
                break;
            }
        }
        (-2.0 * PI * self.alpha() * y).exp() * (s + self.expansion.tail_bound(used, r))
    }

    /// `(F|gamma)(z) - F(z)` for the invariance-preserving action.
    pub fn invariance_residual(&self, gamma: &UniModularMatrix, z: Complex64) -> Result<f64> {
        let gz = gamma.act_moebius(z)?;
        let j = self.multiplier.automorphy_factor(self.weight, gamma, z)?;
        let lhs = self.value(gz)? / j;
        Ok((lhs - self.value(z)?).norm())
    }
}

/// The built-in forms, by weight.
pub fn built_in_forms() -> Vec<CuspForm> {
    BUILT_IN_WEIGHTS.iter().map(|&w| eta_power(w, DEFAULT_TRUNCATION).expect("valid")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modular_group::random_matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// prod (1 - q^n)^e for integer e >= 0 by repeated polynomial multiplication.
    fn naive_product(e: u32, m: usize) -> Vec<f64> {
        let mut p = vec![0.0; m + 1];
        p[0] = 1.0;
        for n in 1..=m {
            for _ in 0..e {
                for i in (n..=m).rev() {
                    p[i] -= p[i - n];
                }
            }
        }
        p
    }

    #[test]
    fn delta_coefficients() {
        let d = eta_power(12.0, 8).unwrap();
        let want = [1.0, -24.0, 252.0, -1472.0, 4830.0, -6048.0, -16744.0, 84480.0, -113643.0];
        assert_eq!(d.coefficients(), &want);
        assert_eq!(d.alpha(), 1.0);
    }

    #[test]
    fn eta_is_pentagonal() {
        let e = eta_power(0.5, 40).unwrap();
        assert!((e.alpha() - 1.0 / 24.0).abs() < 1e-16);
        let mut want = vec![0.0; 41];
        for k in -6i64..=6 {
            let m = (k * (3 * k - 1) / 2) as usize;
            if m <= 40 {
                want[m] = if k % 2 == 0 { 1.0 } else { -1.0 };
            }
        }
        for (a, b) in e.coefficients().iter().zip(&want) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn recurrence_matches_naive_expansion() {
        for two_w in [1u32, 2, 3, 5, 8, 24] {
            let f = eta_power(two_w as f64 / 2.0, 64).unwrap();
            let naive = naive_product(two_w, 64);
            for (a, b) in f.coefficients().iter().zip(&naive) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "2w={two_w}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn leading_coefficient_is_one() {
        for w in [0.1, 0.5, 5.3, 10.6, 12.0, 33.3] {
            assert_eq!(eta_power(w, 4).unwrap().coefficients()[0], 1.0);
        }
        assert!(eta_power(0.0, 4).is_err());
        assert!(eta_power(1.0, 0).is_err());
    }

    #[test]
    fn delta_at_i_matches_doubled_truncation() {
        let d = delta();
        let d2 = d.with_truncation(512).unwrap();
        let i = c(0.0, 1.0);
        let a = d.evaluate(i, 1e-20).unwrap();
        let b = d2.evaluate(i, 1e-20).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
        assert!(a.im.abs() < 1e-14 * a.re.abs());
        // Delta(i) = Gamma(1/4)^24 / (2^24 pi^18)
        let gamma_quarter = 3.625_609_908_221_908_f64;
        let exact = gamma_quarter.powi(24) / (2f64.powi(24) * PI.powi(18));
        assert!((a.re - exact).abs() < 1e-12 * exact, "{a} vs {exact}");
    }

    #[test]
    fn high_point_obeys_leading_term_bound() {
        for f in built_in_forms() {
            let z = c(0.37, 10.0);
            let v = f.evaluate(z, 1e-12).unwrap();
            assert!(v.norm() <= 2.0 * (-2.0 * PI * f.alpha() * 10.0).exp());
        }
    }

    #[test]
    fn eta_squared_is_square_of_eta() {
        let e = eta_power(0.5, 256).unwrap();
        let e2 = eta_power(1.0, 256).unwrap();
        for z in [c(0.0, 1.0), c(0.3, 0.9), c(-0.45, 1.3)] {
            let a = e.evaluate(z, 1e-15).unwrap();
            let b = e2.evaluate(z, 1e-15).unwrap();
            assert!((a * a - b).norm() < 1e-12 * b.norm(), "{z}");
        }
    }

    #[test]
    fn near_zero_path() {
        let d = delta();
        let i = c(0.0, 1.0);
        assert!((d.evaluate_near_zero(i, 1e-15).unwrap() - d.evaluate(i, 1e-15).unwrap()).norm() < 1e-16);
        let z = c(0.0, 0.01);
        let via_sigma = d.evaluate_near_zero(z, 1e-30).unwrap();
        let via_reduction = d.value(z).unwrap();
        assert!((via_sigma - via_reduction).norm() <= 1e-8 * via_sigma.norm());
        // Delta(i y) = y^{-12} Delta(i / y)
        let expected = d.evaluate(c(0.0, 100.0), 1e-300).unwrap() * 1e24;
        assert!((via_sigma - expected).norm() <= 1e-8 * expected.norm(), "{via_sigma} {expected}");
    }

    #[test]
    fn two_transformation_paths_agree() {
        let f = eta_power(5.3, 256).unwrap();
        let z = c(0.05, 0.05);
        let a = f.evaluate_near_zero(z, 1e-12).unwrap();
        let g = UniModularMatrix::theta_sigma_theta();
        let gz = g.act_moebius(z).unwrap();
        let b = f.value(gz).unwrap() / f.multiplier.automorphy_factor(f.weight, &g, z).unwrap();
        assert!((a - b).norm() <= 1e-8 * a.norm(), "{a} {b}");
    }

    #[test]
    fn modular_invariance_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for f in built_in_forms() {
            let mut gammas = vec![UniModularMatrix::sigma(), UniModularMatrix::theta(), UniModularMatrix::tau()];
            for _ in 0..3 {
                gammas.push(random_matrix(&mut rng, 7));
            }
            for g in &gammas {
                for _ in 0..20 {
                    let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(0.2..1.5));
                    let r = f.invariance_residual(g, z).unwrap();
                    assert!(r < 1e-8 * f.value(z).unwrap().norm().max(1e-300) + 1e-8, "w={} g={g} z={z} r={r}", f.weight);
                }
            }
        }
    }

    #[test]
    fn exponential_decay() {
        for f in built_in_forms() {
            for y in [1.0, 2.0, 5.0] {
                let v = f.value(c(0.2, y)).unwrap().norm();
                assert!(v <= f.decay_bound(y), "w={} y={y}", f.weight);
            }
        }
    }

    #[test]
    fn evaluation_errors() {
        let d = delta();
        assert!(matches!(d.evaluate(c(0.0, -1.0), 1e-10), Err(Error::NotInUpperHalfPlane(_))));
        let short = eta_power(12.0, 2).unwrap();
        assert!(matches!(short.evaluate(c(0.0, 0.05), 1e-12), Err(Error::TailBound { .. })));
    }

    #[test]
    fn json_round_trip_and_hash() {
        let f = eta_power(5.3, 16).unwrap();
        let g = CuspForm::from_json(&f.to_json()).unwrap();
        assert_eq!(f.coefficients(), g.coefficients());
        assert_eq!(f.content_hash(), g.content_hash());
        assert_ne!(f.content_hash(), eta_power(5.3, 17).unwrap().content_hash());
        let mut def = f.definition();
        def.coefficients[3] += 1.0;
        assert!(CuspForm::from_definition(&def).is_err());
    }
}
