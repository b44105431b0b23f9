//! Period integrals `int_0^{i inf} F(z) (z - t)^k dz` along geodesics.

use std::sync::Arc;

use num_complex::Complex64;
use realweight::forms::{delta, eta_power};
use realweight::quadrature::{period_function, period_integral, Endpoint, OneForm, QuadratureConfig};

fn main() -> realweight::Result<()> {
    let cfg = QuadratureConfig::default();
    for (name, form) in [("Delta", Arc::new(delta())), ("eta^10.6", Arc::new(eta_power(5.3, 256)?))] {
        for t in [Complex64::new(0.0, -1.0), Complex64::new(0.5, -0.25), Complex64::new(2.0, 0.0)] {
            let e = period_function(form.clone(), t, &cfg)?;
            println!("{name:<9} t = {t:<8}  {:.12e}  (err {:.1e})", e.value, e.error);
        }
    }

    let omega = OneForm::new(Arc::new(delta()), Complex64::new(0.0, -1.0))?;
    let pieces = [(Endpoint::integer(0), Endpoint::integer(1)), (Endpoint::integer(1), Endpoint::infinity())];
    let split: Complex64 = pieces.iter().map(|(a, b)| period_integral(&omega, a, b, &cfg).map(|e| e.value)).sum::<realweight::Result<_>>()?;
    let whole = period_integral(&omega, &Endpoint::integer(0), &Endpoint::infinity(), &cfg)?.value;
    println!("path additivity gap: {:.1e}", (split - whole).norm());
    Ok(())
}
