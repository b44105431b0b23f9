//! Non-abelian cocycles of PSL(2,Z) from twisted Dedekind pairs.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use realweight::cocycles::{
    classical_reciprocity, left_right_convert, pair_to_cocycle, random_free_cusp_element, reciprocity_to_dedekind_cocycle,
    twisted_pair, CoefficientGroup, FreeGroup, Side,
};
use realweight::exact_core::{format_rational, Cusp};
use realweight::modular_group::{random_matrix, UniModularMatrix};

fn main() -> realweight::Result<()> {
    let module = Arc::new(FreeGroup::<Cusp>::new());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_free_cusp_element(&mut rng, 3, 4);
    let h = random_free_cusp_element(&mut rng, 3, 4);
    let pair = twisted_pair(module.as_ref(), Side::Left, &g, &h);
    let c = pair_to_cocycle(module.clone(), pair, 0.0)?;
    let gamma = UniModularMatrix::new(3, 2, 1, 1)?;
    println!("c({gamma}) = {}", module.render(&c.evaluate(&gamma)));

    let right = left_right_convert(&c);
    let worst = (0..20)
        .map(|_| {
            let (a, b) = (random_matrix(&mut rng, 4), random_matrix(&mut rng, 4));
            c.law_residual(&a, &b).max(right.law_residual(&a, &b))
        })
        .fold(0.0, f64::max);
    println!("cocycle laws on 20 pairs: {worst}");

    let (functions, dedekind) = reciprocity_to_dedekind_cocycle(&classical_reciprocity(), 12, 0.0)?;
    let c = pair_to_cocycle(functions, dedekind, 0.0)?;
    let phi = c.evaluate(&gamma);
    for x in [Cusp::Infinity, Cusp::zero(), Cusp::ratio(1, 3)] {
        println!("c({gamma})({x}) = {}", format_rational(&phi.at(&x)?));
    }
    Ok(())
}
