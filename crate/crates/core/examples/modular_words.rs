//! Words in `sigma` and `tau` for elements of PSL(2,Z).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use realweight::exact_core::Cusp;
use realweight::modular_group::{decompose, random_matrix, UniModularMatrix};

fn main() -> realweight::Result<()> {
    let tau = UniModularMatrix::tau();
    println!("tau^3 = {}", tau.pow(3));

    let g = UniModularMatrix::new(7, 3, 2, 1)?;
    let word = decompose(&g);
    println!("{g} = {word}  (reduced: {})", word.is_reduced());
    assert!(word.recompose().eq_psl(&g));
    println!("g(inf) = {}, g(-1/2) = {}", g.act_cusp(&Cusp::Infinity), g.act_cusp(&Cusp::ratio(-1, 2)));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..4 {
        let h = random_matrix(&mut rng, 8);
        println!("{:>24}  {}", h.to_string(), decompose(&h));
    }
    Ok(())
}
