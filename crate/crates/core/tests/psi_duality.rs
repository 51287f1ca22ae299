use ergm_core::{psi_solve, HamiltonianSpec, HamiltonianTerm, Motif, PlanarProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spec(rng: &mut ChaCha8Rng) -> HamiltonianSpec {
    let pool = ["K12", "C3", "C4", "K13"];
    let mut family: Vec<Motif> = Vec::new();
    while family.is_empty() {
        family = pool
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .map(|n| Motif::builtin(n).unwrap())
            .collect();
    }
    let terms = family
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let limit = m.max_degree() as f64 / m.edge_count() as f64;
            HamiltonianTerm {
                k,
                beta: rng.gen_range(0.2..3.0),
                shift: if rng.gen_bool(0.5) {
                    1.0
                } else {
                    rng.gen_range(0.0..2.0)
                },
                gamma: rng.gen_range(0.1..0.9) * limit,
            }
        })
        .collect();
    HamiltonianSpec::new(family, terms, false).with_mixed_delta(true)
}

#[test]
fn direct_and_dual_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let spec = random_spec(&mut rng);
        let sol = psi_solve(&spec).unwrap();
        let tol = 1e-6 * (1.0 + sol.value.abs());
        assert!(
            sol.duality_gap() <= tol,
            "{:?}: direct {} dual {}",
            spec.to_json(),
            sol.value,
            sol.dual_value
        );
    }
}

#[test]
fn optimizers_are_phi_optimizers_at_their_s() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10 {
        let spec = random_spec(&mut rng);
        let sol = psi_solve(&spec).unwrap();
        let problem = PlanarProblem::new(spec.family()).unwrap();
        for p in &sol.optimizers {
            let s: Vec<f64> = problem
                .s_vector(p.a, p.b)
                .into_iter()
                .map(|x| x.max(0.0))
                .collect();
            let phi = problem.solve(&s).unwrap();
            assert!((phi.value - p.objective()).abs() <= 1e-8 * (1.0 + phi.value));
        }
    }
}
