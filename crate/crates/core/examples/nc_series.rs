//! Truncated noncommutative power series.

use num_complex::Complex64;
use realweight::nc_series::{word_name, NCSeries};

/// `exp(sum c_m A_m)`: the word `w` gets `prod c[w_j] / |w|!`.
fn exp_linear(c: &[f64], depth: usize) -> NCSeries {
    NCSeries::from_fn(c.len(), depth, |w| {
        let fact: f64 = (1..=w.len()).map(|n| n as f64).product();
        Complex64::new(w.iter().map(|&m| c[m]).product::<f64>() / fact, 0.0)
    })
}

fn main() -> realweight::Result<()> {
    let ex = exp_linear(&[1.0, 0.0], 3);
    let ey = exp_linear(&[0.0, 1.0], 3);
    let prod = ex.multiply(&ey)?;
    println!("exp(A1) exp(A2) to depth 3:");
    for (w, v) in prod.terms().filter(|(_, v)| v.norm() > 0.0) {
        println!("  {:<10} {}", word_name(&w), v.re);
    }
    println!("group-like: {}", prod.is_group_like());
    let back = prod.multiply(&prod.invert()?)?;
    println!("|S S^-1 - 1| = {:.1e}", back.distance_to_identity());

    let exact = NCSeries::<i64>::linear(2, &[2, -1]);
    let sq = exact.multiply(&exact)?;
    println!("integer coefficients: (1 + 2 A1 - A2)^2 = {:?}", sq.coefficients());
    Ok(())
}
