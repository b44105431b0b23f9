//! Generating series of iterated period integrals: path composition and
//! shuffle relations.

use num_complex::Complex64;
use realweight::exact_core::Cusp;
use realweight::iterated_periods::{compose, shuffle_residual, transport, FormFamily, TransportConfig};
use realweight::quadrature::Endpoint;

fn main() -> realweight::Result<()> {
    let family = FormFamily::eta_powers(&[12.0, 5.3], 256)?;
    let t = Complex64::new(0.0, -1.0);
    let cfg = TransportConfig::default();
    let (a, b) = (Endpoint::integer(0), Endpoint::infinity());

    let j = transport(&family, &a, &b, t, 3, &cfg)?;
    println!("J_0^inf(t = {t}), depth 3:");
    for (w, re, im, err) in j.table().into_iter().take(7) {
        println!("  {w:<10} {re:+.10e} {im:+.10e}i  +- {err:.1e}");
    }

    // J_c^b J_a^c = J_a^b for a midpoint c.
    let c = Endpoint::Cusp(Cusp::integer(1));
    let ac = transport(&family, &a, &c, t, 3, &cfg)?;
    let cb = transport(&family, &c, &b, t, 3, &cfg)?;
    let glued = compose(&ac, &cb)?;
    println!("composition through 1: {:.1e}", glued.series.max_rel_diff(&j.series, 1.0)?);

    for (w1, w2) in [(vec![0], vec![1]), (vec![0, 1], vec![1]), (vec![0], vec![0, 0])] {
        println!("shuffle {w1:?} x {w2:?}: {:.1e}", shuffle_residual(&j, &w1, &w2)?);
    }
    Ok(())
}
