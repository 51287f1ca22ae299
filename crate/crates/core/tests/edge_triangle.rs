use ergm_core::edge_f::{edge_f_solve, edge_triangle, monotone_selection_check, EdgeFModel, Phase};
use ergm_core::{phi_solve, Motif};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn model(gamma: f64, beta: f64) -> EdgeFModel {
    EdgeFModel::new(&Motif::cycle(3).unwrap(), gamma, beta).unwrap()
}

#[test]
fn closed_forms_on_quarter_grid() {
    for gamma in [0.5, 1.0, 1.5] {
        let bc = edge_triangle::beta_c(gamma);
        let m = model(gamma, 1.0);
        assert!(rel(m.beta_c().unwrap(), bc) <= 1e-6, "gamma {gamma}");
        assert!((m.s_c().unwrap() - edge_triangle::S_C).abs() < 1e-12);
        for i in 1..=16 {
            let beta = 0.25 * i as f64;
            let r = edge_f_solve(&model(gamma, beta)).unwrap();
            if beta < bc {
                assert_eq!(r.phase, Phase::Hub);
                assert!(
                    rel(r.b_star, edge_triangle::b_star(gamma, beta)) <= 1e-6,
                    "gamma {gamma} beta {beta}"
                );
                assert_eq!(r.a_star, 0.0);
            } else {
                assert_eq!(r.phase, Phase::Clique);
                assert!(
                    rel(r.a_star, edge_triangle::a_star(gamma, beta)) <= 1e-6,
                    "gamma {gamma} beta {beta}"
                );
                assert_eq!(r.b_star, 0.0);
            }
        }
    }
}

#[test]
fn beta_c_brackets_the_switch() {
    for gamma in [0.5, 1.0, 1.5] {
        let m = model(gamma, 1.0);
        let bc = m.beta_c().unwrap();
        let below = bc * (1.0 - 1e-3);
        let above = bc * (1.0 + 1e-3);
        assert!(m.max_hub(below).value > m.max_clique(below).unwrap().value);
        assert!(m.max_hub(above).value < m.max_clique(above).unwrap().value);
    }
}

#[test]
fn slope_of_phi_drops_at_s_c() {
    let c3 = [Motif::cycle(3).unwrap()];
    let sc = model(1.0, 1.0).s_c().unwrap();
    let h = 1e-6;
    let phi = |s: f64| phi_solve(&c3, &[s]).unwrap().value;
    let left = (phi(sc) - phi(sc - h)) / h;
    let right = (phi(sc + h) - phi(sc)) / h;
    assert!(left > right + 1e-3, "left {left} right {right}");
}

#[test]
fn maximizers_increase_with_beta() {
    let m = model(1.0, 1.0);
    let betas: Vec<f64> = (1..=30).map(|i| 0.1 * i as f64).collect();
    for w in betas.windows(2) {
        assert!(monotone_selection_check(&m, w[0], w[1]).unwrap());
    }
    assert!(monotone_selection_check(&m, 1.3, 1.3).unwrap());
}
