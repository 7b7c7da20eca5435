mod common;

use ksat_core::bp::{bp_iterate, BpConfig};
use ksat_core::oracle::{count_exhaustive, exact_marginals};
use ksat_core::rng;

#[test]
fn bp_is_exact_on_random_forests() {
    let mut r = rng::rng(2024);
    let mut checked = 0;
    while checked < 200 {
        let f = common::random_forest(&mut r, 20);
        assert!(f.is_forest());
        let count = count_exhaustive(&f).unwrap();
        if count == 0 {
            continue;
        }
        let cfg = BpConfig {
            rng_seed: checked,
            ..BpConfig::default()
        };
        let res = bp_iterate(&f, &cfg, None).unwrap();
        assert!(res.converged, "formula {checked} did not converge");
        let diameter = common::clause_diameter(&f);
        assert!(
            res.iters <= diameter + 1,
            "{} sweeps on a forest of clause diameter {diameter}",
            res.iters
        );
        let s = res.entropy.unwrap();
        assert!((s - (count as f64).ln()).abs() <= 1e-9, "entropy {s} vs ln {count}");
        let exact = exact_marginals(&f).unwrap();
        for (m, p) in res.marginals.iter().zip(&exact) {
            assert!((m.p_t - p).abs() <= 1e-9, "marginal {} vs {p}", m.p_t);
        }
        checked += 1;
    }
}

#[test]
fn forest_generator_covers_mixed_shapes() {
    let mut r = rng::rng(7);
    let (mut units, mut pairs, mut triples, mut negated) = (0, 0, 0, 0);
    for _ in 0..100 {
        let f = common::random_forest(&mut r, 20);
        for c in f.clauses() {
            match c.len() {
                1 => units += 1,
                2 => pairs += 1,
                _ => triples += 1,
            }
            negated += c.lits().iter().filter(|l| l.negated).count();
        }
    }
    assert!(units > 0 && pairs > 0 && triples > 0 && negated > 0);
}
