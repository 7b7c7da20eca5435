use ksat_core::decimate::{compute_biases, delta_estimate, run_sid, LocalComplexity, SidConfig, SidStatus};
use ksat_core::oracle::{count_dpll, count_with_partial, delta_from_solutions, solutions};
use ksat_core::sp::{sp_iterate, SpConfig};
use ksat_core::{generate_random, Assignment};

/// The variable and value SID would fix first: minimum estimated Δ among
/// polarized variables, larger polarization on ties.
fn top_choice(f: &ksat_core::Formula, seed: u64) -> Option<(usize, bool)> {
    let cfg = SpConfig {
        rng_seed: seed,
        ..SpConfig::default()
    };
    let r = sp_iterate(f, &cfg, None).unwrap();
    if !r.converged || r.trivial {
        return None;
    }
    let biases = compute_biases(f, &r.state).unwrap();
    let lc = LocalComplexity::new(f, &r.state);
    let mut best: Option<(f64, f64, usize, bool)> = None;
    for (i, b) in biases.iter().enumerate() {
        let Some(v) = b.majority() else { continue };
        let d = delta_estimate(&lc, i, v);
        let p = b.polarization().abs();
        if best.is_none_or(|(bd, bp, _, _)| d < bd || (d == bd && p > bp)) {
            best = Some((d, p, i, v));
        }
    }
    best.map(|(_, _, i, v)| (i, v))
}

#[test]
fn top_delta_choice_agrees_with_cluster_counts() {
    let n = 16;
    let (mut checked, mut agree) = (0, 0);
    let mut seed = 0;
    while checked < 40 {
        seed += 1;
        let f = generate_random(n, 4.5, seed).unwrap();
        if count_dpll(&f).unwrap() == 0 {
            continue;
        }
        let Some((i, v)) = top_choice(&f, seed) else { continue };
        let sols = solutions(&f).unwrap();
        let chosen = delta_from_solutions(&sols, n, i, v, 1).value();
        let flipped = delta_from_solutions(&sols, n, i, !v, 1).value();
        if chosen <= flipped {
            agree += 1;
        }
        checked += 1;
    }
    assert!(agree * 10 >= checked * 8, "{agree}/{checked} top choices agree with the oracle");
}

#[test]
fn sid_never_contradicts_when_a_solution_survives_the_trace() {
    let n = 20;
    let mut replayed = 0;
    for seed in 0..150u64 {
        let alpha = 3.6 + 0.8 * (seed % 5) as f64 / 4.0;
        let f = generate_random(n, alpha, seed).unwrap();
        if count_dpll(&f).unwrap() == 0 {
            continue;
        }
        let cfg = SidConfig {
            seed,
            ..SidConfig::default()
        };
        let out = run_sid(&f, &cfg).unwrap();
        let mut fixes = Assignment::unset(n);
        for row in &out.trace {
            fixes.set(row.var, row.value);
        }
        if count_with_partial(&f, &fixes).unwrap() > 0 {
            replayed += 1;
            assert_ne!(out.status, SidStatus::Contradiction, "seed {seed}");
        }
        if out.status == SidStatus::Solved {
            assert_eq!(f.count_violated(out.assignment.as_ref().unwrap()), 0);
        }
    }
    assert!(replayed >= 50, "only {replayed} replays");
}

#[test]
fn complexity_decreases_towards_the_threshold() {
    let mean_density = |alpha: f64| {
        let mut sum = 0.0;
        for seed in 0..20u64 {
            let f = generate_random(2000, alpha, seed).unwrap();
            let cfg = SpConfig {
                rng_seed: seed,
                ..SpConfig::default()
            };
            let r = sp_iterate(&f, &cfg, None).unwrap();
            sum += r.complexity_density.expect("no contradiction");
        }
        sum / 20.0
    };
    let (a, b, c) = (mean_density(4.1), mean_density(4.2), mean_density(4.26));
    assert!(a > b && b > c, "{a} {b} {c}");
}
