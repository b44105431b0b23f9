//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

/// Ramanujan tau(n) for n = 1..=n_max from the product q prod (1 - q^n)^24,
/// by exact integer polynomial multiplication.
pub fn ramanujan_tau(n_max: usize) -> Vec<i128> {
    let mut p = vec![0i128; n_max];
    p[0] = 1;
    for n in 1..n_max {
        for _ in 0..24 {
            for i in (n..n_max).rev() {
                p[i] -= p[i - n];
            }
        }
    }
    // tau(m) is the coefficient of q^{m-1} in prod (1 - q^n)^24
    let mut tau = vec![0i128; n_max + 1];
    tau[1..].copy_from_slice(&p);
    tau
}

/// int_1^inf e^{-x y} y^m dy for integer m >= 0.
fn upper_moment(x: f64, m: u32) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in (1..=m).rev() {
        term *= (j as f64) / x;
        sum += term;
    }
    // sum = sum_{j=0}^m m!/j! x^{j-m}
    (-x).exp() * sum / x
}

/// int_0^{i inf} Delta(z) z^s dz, by integrating each q-series term in closed
/// form after folding [0, 1] onto [1, inf) with y -> 1/y.
pub fn delta_moment(s: u32) -> Complex64 {
    assert!(s <= 10);
    let tau = ramanujan_tau(60);
    let mut real = 0.0;
    for (n, &t) in tau.iter().enumerate().skip(1) {
        let x = 2.0 * PI * n as f64;
        real += t as f64 * (upper_moment(x, s) + upper_moment(x, 10 - s));
    }
    Complex64::new(0.0, 1.0).powu(s + 1) * real
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// P_Delta(t) = sum_s C(10, s) (-t)^{10 - s} M_s.
pub fn delta_period_polynomial(t: Complex64) -> Complex64 {
    (0..=10u32).map(|s| binomial(10, s) * (-t).powu(10 - s) * delta_moment(s)).sum()
}

/// Maximum absolute difference of two coefficient lists.
pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
