//! The cocycle of iterated period integrals along cusp-to-cusp paths.

use std::sync::Arc;

use num_complex::Complex64;
use realweight::cocycles::PathModule;
use realweight::iterated_periods::{FormFamily, TransportConfig};

fn main() -> realweight::Result<()> {
    let family = FormFamily::eta_powers(&[12.0, 5.3], 256)?;
    let module = Arc::new(PathModule::new(family, Complex64::new(0.0, -1.0), 2, TransportConfig::default())?);
    let report = realweight::cocycles::path_cocycle_check(module, 10, 1)?;
    println!("sigma relation {:.1e}, tau relation {:.1e}, pair relation {:.1e}", report.sigma_relation, report.tau_relation, report.dedekind);
    for law in &report.laws {
        println!("  g1 = {:<22} g2 = {:<22} {:.1e} {:.1e}", law.gamma1.to_string(), law.gamma2.to_string(), law.base_point, law.pair);
    }
    println!("worst {:.1e}", report.worst());
    Ok(())
}
