use ergm_core::edge_f::edge_triangle;
use ergm_core::nmf::{
    nmf_solve, phi_np_chain, phi_np_solve, CliqueHub, NmfProblem, PhiNpProblem, SolverOptions,
};
use ergm_core::{HamiltonianSpec, Motif};

#[test]
fn nmf_beats_clique_witness() {
    let (n, p, gamma, beta) = (64, 0.2, 1.0, 3.0);
    assert!(beta > edge_triangle::beta_c(gamma));
    let prob = NmfProblem::new(n, p, HamiltonianSpec::edge_triangle(gamma, beta)).unwrap();
    let sol = nmf_solve(&prob, &SolverOptions::default()).unwrap();
    let a = edge_triangle::a_star(gamma, beta);
    let w = CliqueHub::from_ab(n, p, 2, a, 0.0).unwrap();
    let witness = prob.objective(&w.table(p)).unwrap();
    eprintln!(
        "nmf {} witness {} ({} vertices)",
        sol.value, witness, w.clique_size
    );
    assert!(sol.value >= witness - 1e-9);
    let flat = prob
        .objective(&ergm_core::WeightTable::constant(n, p))
        .unwrap();
    assert!(sol.value >= flat);
}

#[test]
fn phi_dominated_by_witnesses_and_monotone() {
    let prob = PhiNpProblem::new(64, 0.2, vec![Motif::cycle(3).unwrap()]).unwrap();
    let opts = SolverOptions::default();
    let sol = phi_np_solve(&prob, &[1.0], &opts).unwrap();
    eprintln!(
        "Phi/r = {} (phi = 1/3), witness {}",
        sol.value / sol.rate,
        sol.diagnostics.witness_value / sol.rate
    );
    assert!(sol.residuals.iter().all(|&r| r >= -1e-6));
    assert!(sol.value <= sol.diagnostics.witness_value);
    let chain: Vec<Vec<f64>> = [0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|&s| vec![s]).collect();
    let sols = phi_np_chain(&prob, &chain, &opts).unwrap();
    for w in sols.windows(2) {
        assert!(w[0].value <= w[1].value);
    }
}
