//! Dedekind symbols reconstructed from reciprocity functions.

use realweight::cocycles::{classical_reciprocity, free_reciprocity, reconstruct_symbol};
use realweight::exact_core::format_rational;

fn main() -> realweight::Result<()> {
    let classical = reconstruct_symbol(&classical_reciprocity());
    for (p, q) in [(3, 2), (7, 3), (21, 13)] {
        println!("D({p},{q}) = {}", format_rational(&classical.value(p, q)?));
    }
    println!("validation up to 40: {}", classical.validate(40, 0.0).passed());
    print!("{}", classical.to_csv(3)?);

    let free = reconstruct_symbol(&free_reciprocity());
    for (p, q) in [(5, 3), (8, 5), (-7, 4)] {
        println!("free D({p},{q}) = {}", free.value(p, q)?);
    }
    Ok(())
}
