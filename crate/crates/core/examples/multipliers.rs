//! Multiplier systems of `eta^{2w}` and the automorphy cocycle.

use num_complex::Complex64;
use realweight::modular_group::UniModularMatrix;
use realweight::multipliers::{cocycle_residual, MultiplierSystem};

fn main() -> realweight::Result<()> {
    let gens = [
        ("sigma", UniModularMatrix::sigma()),
        ("theta", UniModularMatrix::theta()),
        ("tau", UniModularMatrix::tau()),
        ("theta sigma theta", UniModularMatrix::theta_sigma_theta()),
    ];
    for w in [0.5, 5.3, 12.0] {
        let v = MultiplierSystem::eta_power(w);
        println!("w = {w}");
        for (name, g) in &gens {
            let x = v.value(g);
            println!("  v({name:<17}) = {:+.12} {:+.12}i  arg/2pi = {:+.6}", x.re, x.im, x.arg() / std::f64::consts::TAU);
        }
        let z = Complex64::new(0.3, 0.8);
        let r = cocycle_residual(&v, w, &UniModularMatrix::new(5, 2, 2, 1)?, &UniModularMatrix::new(1, 0, 3, 1)?, z)?;
        println!("  cocycle residual at {z}: {r:.2e}");
    }
    Ok(())
}
