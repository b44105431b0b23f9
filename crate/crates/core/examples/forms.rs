//! Built-in eta-power cusp forms: coefficients, evaluation and invariance.

use num_complex::Complex64;
use realweight::forms::{built_in_forms, delta, eta_power};
use realweight::modular_group::UniModularMatrix;

fn main() -> realweight::Result<()> {
    let d = delta();
    println!("Delta coefficients: {:?}", &d.coefficients()[..8]);

    for f in built_in_forms() {
        println!("w = {:>4}  k = {:>5}  alpha = {:.4}  hash = {}", f.weight, f.k(), f.alpha(), &f.content_hash()[..12]);
    }

    let f = eta_power(5.3, 256)?;
    for z in [Complex64::new(0.0, 1.0), Complex64::new(0.25, 0.2), Complex64::new(-0.49, 0.03)] {
        let value = f.value(z)?;
        let r = f.invariance_residual(&UniModularMatrix::sigma(), z)? / value.norm().max(f64::MIN_POSITIVE);
        println!("F({z:.2}) = {value:.6e}   relative sigma-invariance gap {r:.1e}");
    }
    Ok(())
}
