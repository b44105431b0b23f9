//! Exact Dedekind sums and their classical reciprocity.
//!
//! ```text
//! cargo run --example dedekind_sums
//! ```

use realweight::exact_core::{classical_dedekind_sum, classical_reciprocity_rhs, format_rational, reciprocity_residual_classical};

fn main() -> realweight::Result<()> {
    for (a, c) in [(1, 2), (2, 3), (3, 7), (5, 12), (13, 21)] {
        println!("s({a}, {c}) = {}", format_rational(&classical_dedekind_sum(a, c)?));
    }

    let (p, q) = (8, 13);
    let lhs = classical_dedekind_sum(p, q)? + classical_dedekind_sum(q, p)?;
    println!("s({p},{q}) + s({q},{p}) = {} = {}", format_rational(&lhs), format_rational(&classical_reciprocity_rhs(p, q)));

    let mut worst = 0usize;
    for p in 1..=60 {
        for q in 1..=60 {
            if num_integer::gcd(p, q) == 1 && reciprocity_residual_classical(p, q)? != num_traits::Zero::zero() {
                worst += 1;
            }
        }
    }
    println!("coprime pairs up to 60 violating reciprocity: {worst}");
    Ok(())
}
