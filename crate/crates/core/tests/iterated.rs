mod common;

use num_complex::Complex64;
use realweight::iterated_periods::{
    compose, gamma_action, nested_quadrature, shuffle_residual, transport, FormFamily, TransportConfig,
};
use realweight::modular_group::UniModularMatrix as M;
use realweight::nc_series::NCSeries;
use realweight::quadrature::{Endpoint, QuadratureConfig};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn families() -> Vec<FormFamily> {
    vec![FormFamily::delta(), FormFamily::eta_powers(&[12.0, 5.3], 256).unwrap()]
}

fn all_words(l: usize, max: usize) -> Vec<Vec<usize>> {
    NCSeries::<Complex64>::zero(l, max).words().collect()
}

#[test]
fn weight_action_moves_the_path() {
    let cfg = TransportConfig::default();
    let gens = [("sigma", M::sigma()), ("theta", M::theta()), ("tau", M::tau()), ("theta sigma theta", M::theta_sigma_theta())];
    for fam in families() {
        for t in [c(0.0, -1.0), c(0.35, -0.6)] {
            for (name, g) in &gens {
                let (a, b) = (Endpoint::integer(0), Endpoint::infinity());
                let gt = g.act_moebius(t).unwrap();
                let j = transport(&fam, &a, &b, gt, 3, &cfg).unwrap();
                let lhs = gamma_action(&fam, &j, g, t).unwrap();
                let rhs = transport(&fam, &lhs.a, &lhs.b, t, 3, &cfg).unwrap();
                let r = lhs.series.max_abs_diff(&rhs.series).unwrap();
                println!("l={} t={t} {name}: {r:e}", fam.len());
                assert!(r < 1e-6, "{name}: {r:e}");
            }
        }
    }
}

#[test]
fn composition_through_midpoints() {
    let cfg = TransportConfig::default();
    let t = c(0.0, -1.0);
    for fam in families() {
        let (a, b) = (Endpoint::integer(0), Endpoint::infinity());
        let direct = transport(&fam, &a, &b, t, 3, &cfg).unwrap();
        for mid in [Endpoint::Point(c(0.0, 1.0)), Endpoint::integer(-1), Endpoint::integer(1)] {
            let left = transport(&fam, &a, &mid, t, 3, &cfg).unwrap();
            let right = transport(&fam, &mid, &b, t, 3, &cfg).unwrap();
            let r = compose(&left, &right).unwrap().series.max_rel_diff(&direct.series, 1e-12).unwrap();
            println!("l={} mid={mid}: {r:e}", fam.len());
            assert!(r < 1e-8, "{mid}: {r:e}");
        }
    }
}

#[test]
fn shuffle_identities() {
    let cfg = TransportConfig::default();
    for fam in families() {
        let j = transport(&fam, &Endpoint::integer(0), &Endpoint::infinity(), c(0.2, -0.9), 3, &cfg).unwrap();
        let words = all_words(fam.len(), 3);
        let mut worst: f64 = 0.0;
        for w1 in &words {
            for w2 in &words {
                if w1.len() + w2.len() <= 3 {
                    worst = worst.max(shuffle_residual(&j, w1, w2).unwrap());
                }
            }
        }
        println!("l={} worst shuffle {worst:e}", fam.len());
        assert!(worst < 1e-7);
    }
}

#[test]
fn depth_two_matches_nested_quadrature() {
    let fam = FormFamily::eta_powers(&[12.0, 5.3], 256).unwrap();
    let t = c(0.0, -1.0);
    let (a, b) = (Endpoint::integer(0), Endpoint::infinity());
    let j = transport(&fam, &a, &b, t, 2, &TransportConfig::default()).unwrap();
    let qc = QuadratureConfig { tolerance: 1e-11, ..Default::default() };
    for w in [vec![0, 1], vec![1, 0], vec![0, 0]] {
        let q = nested_quadrature(&fam, &a, &b, t, &w, &qc).unwrap();
        let got = j.coefficient(&w).unwrap();
        println!("{w:?}: {got} vs {q}");
        assert!((got - q).norm() < 1e-8 * q.norm());
    }
}
