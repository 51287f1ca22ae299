use ergm_core::ergm::{
    empirical_distribution, exact_enumerate, glauber_kernel, stationarity_residual,
    total_variation, ErgmChain, ErgmModel,
};
use ergm_core::{HamiltonianSpec, Motif};
use rayon::prelude::*;

/// Direct summation over edge masks with a brute-force triangle map count.
fn lambda_oracle(n: usize, p: f64, gamma: f64, beta: f64) -> f64 {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let nf = n as f64;
    let r = nf * nf * p * p * (1.0 / p).ln();
    let mut total = 0.0;
    for mask in 0u32..1 << pairs.len() {
        let mut adj = vec![vec![false; n]; n];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if mask >> k & 1 == 1 {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
        let mut hom = 0u64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if adj[a][b] && adj[b][c] && adj[c][a] {
                        hom += 1;
                    }
                }
            }
        }
        let t = hom as f64 / (nf.powi(3) * p.powi(3));
        let h = beta * (t - 1.0).max(0.0).powf(gamma / 3.0);
        let e = mask.count_ones() as i32;
        total += p.powi(e) * (1.0 - p).powi(pairs.len() as i32 - e) * (r * h).exp();
    }
    total.ln()
}

#[test]
fn log_mgf_matches_direct_summation() {
    for &(n, p, gamma, beta) in &[
        (4, 0.3, 1.0, 0.5),
        (4, 0.5, 1.0, 1.0),
        (5, 0.2, 1.5, 2.0),
        (3, 0.4, 0.5, 3.0),
    ] {
        let model = ErgmModel::new(n, p, HamiltonianSpec::edge_triangle(gamma, beta)).unwrap();
        let ex = exact_enumerate(&model).unwrap();
        let oracle = lambda_oracle(n, p, gamma, beta);
        assert!(
            (ex.log_mgf - oracle).abs() <= 1e-10,
            "n={n}: {} vs {oracle}",
            ex.log_mgf
        );
    }
}

#[test]
fn kernels_are_stationary_and_chains_converge() {
    let cases: Vec<(f64, f64, u64)> = [0.3, 0.5]
        .iter()
        .flat_map(|&p| {
            [0.0, 1.0]
                .into_iter()
                .flat_map(move |b| (0..3).map(move |s| (p, b, s)))
        })
        .collect();
    cases.par_iter().for_each(|&(p, beta, seed)| {
        let spec = if beta == 0.0 {
            HamiltonianSpec::zero(vec![Motif::cycle(3).unwrap()])
        } else {
            HamiltonianSpec::edge_triangle(1.0, beta)
        };
        let model = ErgmModel::new(4, p, spec).unwrap();
        let ex = exact_enumerate(&model).unwrap();
        if seed == 0 {
            let k = glauber_kernel(&model).unwrap();
            assert!(stationarity_residual(&ex.probabilities, &k) <= 1e-12);
        }
        let mut chain = ErgmChain::new(model, seed, 0).unwrap();
        let emp = empirical_distribution(&mut chain, 1_000_000).unwrap();
        let tv = total_variation(&emp, &ex.probabilities);
        assert!(tv < 0.05, "p={p} beta={beta} seed={seed}: tv {tv}");
    });
}

#[test]
fn cache_survives_long_runs() {
    let model = ErgmModel::new(40, 0.15, HamiltonianSpec::edge_triangle(1.0, 2.0)).unwrap();
    let mut chain = ErgmChain::new(model, 9, 2).unwrap();
    for _ in 0..10_000 {
        chain.step();
    }
    let cached = chain.densities();
    chain.resync().unwrap();
    let fresh = chain.model().counts(chain.graph()).unwrap();
    let fresh = chain.model().densities_of(&fresh);
    for (a, b) in cached.iter().zip(&fresh) {
        assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-300));
    }
}
