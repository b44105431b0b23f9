//! The generalized reciprocity function `f(p, q)` and its three-term relation.

use realweight::iterated_periods::FormFamily;
use realweight::reciprocity::ReciprocityEngine;

fn main() -> realweight::Result<()> {
    let engine = ReciprocityEngine::new(FormFamily::delta(), 2);
    for (p, q) in [(1, 1), (2, 1), (3, 2), (-2, 3)] {
        let f = engine.f(p, q)?;
        let c = f.value.coefficient(&[0])?;
        println!("f({p},{q}) [{:?}]: A1 coefficient {c:.8e}", f.provenance);
    }

    for (p, q) in [(2, 3), (3, 5), (4, 1)] {
        let s = engine.scalar_residual(p, q)?;
        let n = engine.series_residual(p, q)?;
        println!("({p},{q}) scalar relation {:.1e}, series relation {:.1e}", s.relative, n.relative);
    }
    Ok(())
}
