//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realweight::cocycles::{
    coprime_pairs, dedekind_residual, free_reciprocity, left_right_convert, pair_relations, pair_to_cocycle,
    path_cocycle_check, random_free_cusp_element, reciprocity_to_dedekind_cocycle, reconstruct_symbol, twisted_pair,
    classical_reciprocity, CoefficientGroup, FreeElement, FreeGroup, PathModule, Side,
};
use realweight::exact_core::{classical_dedekind_sum, rat, Cusp};
use realweight::forms::{built_in_forms, delta};
use realweight::iterated_periods::{compose, gamma_action, shuffle_residual, transport, FormFamily, TransportConfig};
use realweight::modular_group::{random_matrix, UniModularMatrix as M};
use realweight::multipliers::{cocycle_residual, MultiplierSystem};
use realweight::nc_series::NCSeries;
use realweight::quadrature::{integrate_along, Endpoint, GeodesicPath, QuadratureConfig};
use realweight::reciprocity::ReciprocityEngine;
use realweight::Result;

const T: Complex64 = Complex64::new(0.0, -1.0);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn phase(turns: f64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * turns)
}

fn upper_point(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.3..2.0))
}

fn families() -> Result<Vec<(&'static str, FormFamily)>> {
    Ok(vec![("{Delta}", FormFamily::delta()), ("{Delta, eta^10.6}", FormFamily::eta_powers(&[12.0, 5.3], 256)?)])
}

fn transport_config() -> TransportConfig {
    TransportConfig::default()
}

fn generators() -> [(&'static str, M); 4] {
    [("sigma", M::sigma()), ("theta", M::theta()), ("tau", M::tau()), ("theta sigma theta", M::theta_sigma_theta())]
}

fn multiplier_values() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for w in [0.5, 5.3, 12.0] {
        let v = MultiplierSystem::eta_power(w);
        // v(sigma) = e^{-pi i w/2}, v(theta) = e^{pi i w/6}, v(theta sigma theta) = e^{-pi i w/6}
        for (g, turns) in [(M::sigma(), -w / 4.0), (M::theta(), w / 12.0), (M::theta_sigma_theta(), -w / 12.0)] {
            worst = worst.max((v.value(&g) - phase(turns)).norm());
        }
    }
    outcome(worst < 1e-12, format!("max |v - expected| = {worst:.2e} over w in {{1/2, 5.3, 12}}"))
}

fn automorphy_cocycle() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for w in [0.5, 5.3, 10.6, 12.0] {
        let v = MultiplierSystem::eta_power(w);
        for _ in 0..100 {
            let (g, d, z) = (random_matrix(&mut rng, 6), random_matrix(&mut rng, 6), upper_point(&mut rng));
            worst = worst.max(cocycle_residual(&v, w, &g, &d, z)?);
        }
    }
    outcome(worst < 1e-10, format!("max relative residual {worst:.2e}, 100 triples per weight"))
}

fn modular_invariance() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for f in built_in_forms() {
        for g in [M::sigma(), M::theta(), M::tau()] {
            for _ in 0..20 {
                let z = upper_point(&mut rng);
                worst = worst.max(f.invariance_residual(&g, z)? / f.value(z)?.norm());
            }
        }
    }
    outcome(worst < 1e-8, format!("max relative residual {worst:.2e}, 20 points per generator and form"))
}

fn delta_moments() -> Result<Outcome> {
    let d = delta();
    let path = GeodesicPath::new(Endpoint::integer(0), Endpoint::infinity())?;
    let cfg = QuadratureConfig::default();
    let mut worst = 0.0f64;
    for s in 0..=10 {
        let got = integrate_along(&path, |z| Ok(d.value(z)? * z.powu(s)), &cfg)?.value;
        let want = common::delta_moment(s);
        worst = worst.max((got - want).norm() / want.norm());
    }
    outcome(worst < 1e-8, format!("max relative error {worst:.2e} for s = 0..10"))
}

fn classical_reciprocity_law() -> Result<Outcome> {
    let start = Instant::now();
    let mut bad = 0usize;
    let mut count = 0usize;
    for p in 1..=200i64 {
        for q in 1..=200i64 {
            if num_integer::gcd(p, q) != 1 {
                continue;
            }
            count += 1;
            let lhs = classical_dedekind_sum(p, q)? + classical_dedekind_sum(q, p)?;
            // -1/4 + (p/q + 1/(pq) + q/p)/12
            let rhs = rat(-1, 4) + (rat(p, q) + rat(1, p * q) + rat(q, p)) / rat(12, 1);
            if !(lhs - rhs).is_zero() {
                bad += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(bad == 0 && secs < 5.0, format!("{bad} nonzero residuals among {count} pairs, {secs:.2} s"))
}

fn weight_action() -> Result<Outcome> {
    let cfg = transport_config();
    let (a, b) = (Endpoint::integer(0), Endpoint::infinity());
    let mut worst = 0.0f64;
    for (_, family) in families()? {
        for (_, g) in generators() {
            let j = transport(&family, &a, &b, g.act_moebius(T)?, 3, &cfg)?;
            let lhs = gamma_action(&family, &j, &g, T)?;
            let ginv = g.inverse();
            let (ga, gb) = (Endpoint::Cusp(ginv.act_cusp(&Cusp::zero())), Endpoint::Cusp(ginv.act_cusp(&Cusp::Infinity)));
            let rhs = transport(&family, &ga, &gb, T, 3, &cfg)?;
            worst = worst.max(lhs.series.max_rel_diff(&rhs.series, 1.0)?);
        }
    }
    outcome(worst < 1e-6, format!("max coefficient residual {worst:.2e} at depth 3"))
}

fn generalized_reciprocity() -> Result<Outcome> {
    let family = FormFamily::eta_powers(&[12.0, 5.3], 256)?;
    let engine = ReciprocityEngine::new(family.clone(), 3).with_configs(transport_config(), QuadratureConfig::default());
    let mut scalar = 0.0f64;
    for (pair, r) in engine.scalar_grid(5) {
        let r = r.map_err(|e| realweight::Error::InvalidArgument(format!("{pair:?}: {e}")))?;
        scalar = scalar.max(r.relative);
    }
    let mut series = 0.0f64;
    for (p, q) in [(1, 1), (1, 2), (2, 1), (2, 3), (3, 2)] {
        series = series.max(engine.series_residual(p, q)?.relative);
    }
    let cfg = transport_config();
    let there = transport(&family, &Endpoint::integer(0), &Endpoint::infinity(), T, 3, &cfg)?;
    let back = transport(&family, &Endpoint::infinity(), &Endpoint::integer(0), T, 3, &cfg)?;
    let inverse = there.series.multiply(&back.series)?.max_abs_diff(&NCSeries::identity(2, 3))?;
    outcome(
        scalar < 1e-7 && series < 1e-6 && inverse < 1e-8,
        format!("scalar grid {scalar:.2e}, series on 5 pairs {series:.2e}, J_0^inf J_inf^0 - 1 {inverse:.2e}"),
    )
}

fn path_cocycle() -> Result<Outcome> {
    let family = FormFamily::eta_powers(&[12.0, 5.3], 256)?;
    let module = Arc::new(PathModule::new(family, T, 3, transport_config())?);
    let r = path_cocycle_check(module, 20, 8)?;
    let laws = r.laws.iter().map(|l| l.base_point.max(l.pair)).fold(0.0, f64::max);
    outcome(
        r.worst() < 1e-6 && r.laws.len() == 20,
        format!(
            "X sigma(X) {:.2e}, Y tau(Y) tau2(Y) {:.2e}, tau(X) = Y {:.2e}, law on {} pairs {laws:.2e}",
            r.sigma_relation,
            r.tau_relation,
            r.dedekind,
            r.laws.len()
        ),
    )
}

fn composition_and_shuffles() -> Result<Outcome> {
    let cfg = transport_config();
    let family = FormFamily::eta_powers(&[12.0, 5.3], 256)?;
    let (a, b) = (Endpoint::integer(0), Endpoint::infinity());
    let whole = transport(&family, &a, &b, T, 3, &cfg)?;
    let mut comp = 0.0f64;
    for c in [Endpoint::Point(Complex64::new(0.0, 1.0)), Endpoint::integer(-1), Endpoint::integer(1)] {
        let glued = compose(&transport(&family, &a, &c, T, 3, &cfg)?, &transport(&family, &c, &b, T, 3, &cfg)?)?;
        comp = comp.max(glued.series.max_rel_diff(&whole.series, 1.0)?);
    }
    let words: Vec<Vec<usize>> = (1..=2).flat_map(|n| (0..2usize.pow(n as u32)).map(move |i| (0..n).map(|j| (i >> j) & 1).collect())).collect();
    let mut shuffle = 0.0f64;
    let mut count = 0;
    for u in &words {
        for v in &words {
            if u.len() + v.len() <= 3 {
                count += 1;
                shuffle = shuffle.max(shuffle_residual(&whole, u, v)?);
            }
        }
    }
    outcome(comp < 1e-8 && shuffle < 1e-7, format!("composition over 3 midpoints {comp:.2e}, {count} shuffle identities {shuffle:.2e}"))
}

fn free_class(p: i64, q: i64) -> FreeElement<Cusp> {
    let (p, q) = if p < 0 { (-p, -q) } else { (p, q) };
    if p == 0 {
        FreeElement::generator(Cusp::Infinity)
    } else {
        FreeElement::generator(Cusp::ratio(q.rem_euclid(p), p))
    }
}

fn abstract_layer() -> Result<Outcome> {
    let symbol = reconstruct_symbol(&free_reciprocity());
    let symbol_report = symbol.validate(30, 0.0);
    let base = free_class(0, 1).inv();
    let pairs = coprime_pairs(30);
    let mut mismatched = 0;
    for &(p, q) in &pairs {
        if symbol.value(p, q)? != free_class(p, q).mul(&base) {
            mismatched += 1;
        }
    }

    let module = Arc::new(FreeGroup::<Cusp>::new());
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut round_trip = 0.0f64;
    for i in 0..50 {
        let side = if i % 2 == 0 { Side::Left } else { Side::Right };
        let (g, h) = (random_free_cusp_element(&mut rng, 3, 5), random_free_cusp_element(&mut rng, 3, 5));
        let c = pair_to_cocycle(module.clone(), twisted_pair(module.as_ref(), side, &g, &h), 0.0)?;
        let once = left_right_convert(&c);
        let twice = left_right_convert(&once);
        for _ in 0..5 {
            let (x, y) = (random_matrix(&mut rng, 5), random_matrix(&mut rng, 5));
            round_trip = round_trip
                .max(module.distance(&twice.evaluate(&x), &c.evaluate(&x)))
                .max(module.distance(&once.evaluate(&x), &module.invert(&c.evaluate(&x.inverse()))))
                .max(c.law_residual(&x, &y))
                .max(once.law_residual(&x, &y));
        }
    }

    let (functions, pair) = reciprocity_to_dedekind_cocycle(&classical_reciprocity(), 20, 0.0)?;
    let [x_rel, y_rel] = pair_relations(functions.as_ref(), &pair);
    let ded = dedekind_residual(functions.as_ref(), &pair);

    let pass = symbol_report.passed() && mismatched == 0 && round_trip == 0.0 && x_rel == 0.0 && y_rel == 0.0 && ded == 0.0;
    outcome(
        pass,
        format!(
            "symbol relations {} with {} violations, {mismatched} word mismatches over {} pairs; round trip on 50 cocycles {round_trip}; rational pair relations {x_rel} {y_rel}, tau(X) = Y {ded}",
            symbol_report.instances,
            symbol_report.violations.len(),
            pairs.len()
        ),
    )
}

fn main() -> ExitCode {
    type Criterion = fn() -> Result<Outcome>;
    let criteria: [(&str, Criterion); 10] = [
        ("multiplier values", multiplier_values),
        ("automorphy cocycle", automorphy_cocycle),
        ("modular invariance", modular_invariance),
        ("Delta period moments", delta_moments),
        ("classical Dedekind reciprocity", classical_reciprocity_law),
        ("weight action on iterated periods", weight_action),
        ("generalized reciprocity", generalized_reciprocity),
        ("path cocycle", path_cocycle),
        ("composition and shuffles", composition_and_shuffles),
        ("exact abstract layer", abstract_layer),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!("criterion {:>2} {:<34} {}  {detail} [{:.1} s]", i + 1, name, if pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
