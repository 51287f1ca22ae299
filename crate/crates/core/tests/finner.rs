use ergm_core::finner::{
    finner_integral, finner_suite, genholder_stability_check, genholder_suite, holder_constant,
    holder_stability_check, holder_suite, perturb, product_instance, random_instance,
    random_unit_mean, recover_factors, remark_hb1_check, Calibration, ProductInstance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_space<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

/// Random exact-cover equality instance: random sets scaled to cover at most
/// 1, topped up by singletons `{v}` carrying `h_v`.
fn equality_fixture(seed: u64) -> (ProductInstance, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = rng.gen_range(2..=4);
    let spaces: Vec<Vec<f64>> = (0..nv)
        .map(|_| {
            let k = rng.gen_range(2..=3);
            random_space(&mut rng, k)
        })
        .collect();
    let h: Vec<Vec<f64>> = spaces
        .iter()
        .map(|s| random_unit_mean(&mut rng, s))
        .collect();
    let mut system: Vec<(Vec<usize>, f64)> = (0..rng.gen_range(1..=3))
        .map(|_| loop {
            let set: Vec<usize> = (0..nv).filter(|_| rng.gen_bool(0.6)).collect();
            if set.len() >= 2 {
                break (set, rng.gen_range(0.1..1.0));
            }
        })
        .collect();
    let cover = |v: usize, sys: &[(Vec<usize>, f64)]| -> f64 {
        sys.iter()
            .filter(|(s, _)| s.contains(&v))
            .map(|(_, l)| l)
            .sum()
    };
    let max_cover = (0..nv).map(|v| cover(v, &system)).fold(0.0, f64::max);
    for e in &mut system {
        e.1 *= rng.gen_range(0.5..1.0) / max_cover;
    }
    for v in 0..nv {
        let deficit = 1.0 - cover(v, &system);
        if deficit > 1e-12 {
            system.push((vec![v], deficit));
        }
    }
    (product_instance(spaces, &system, &h).unwrap(), h)
}

fn max_residual(inst: &ProductInstance) -> f64 {
    recover_factors(inst)
        .residuals
        .into_iter()
        .fold(0.0, f64::max)
}

#[test]
fn finner_bound_on_random_instances() {
    let report = finner_suite(10_000, 3);
    assert_eq!(report.failures, 0, "worst integral {}", report.worst);
    assert!(report.worst <= 1.0 + 1e-10);
}

#[test]
fn holder_stability_on_random_functions() {
    let r = holder_suite(10_000, 5).unwrap();
    assert_eq!(r.failures, 0, "worst ratio {}", r.worst);
    let r = genholder_suite(10_000, 6).unwrap();
    assert_eq!(r.failures, 0, "worst ratio {}", r.worst);
}

#[test]
fn holder_tightness_family() {
    // g = 1 ± d on a fair coin: ||g - 1||_1 = d, and the bound stays within a factor 2.
    let coin = [0.5, 0.5];
    for lambda in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for d in [1e-3, 1e-2, 5e-2] {
            let r = holder_stability_check(&[1.0 + d, 1.0 - d], lambda, &coin).unwrap();
            assert!(r.pass);
            let ratio = r.bound / r.l1;
            assert!(
                (1.0..=2.0 * 1.02).contains(&ratio),
                "lambda {lambda} d {d} ratio {ratio}"
            );
        }
    }
    assert!(holder_constant(0.5) > 2.8 && holder_constant(0.5) < 2.9);
}

#[test]
fn genholder_perturbation_sweep() {
    let mu = [0.1, 0.2, 0.3, 0.4];
    let f = [1.2, 0.8, 1.1, 0.95];
    let base: f64 = f.iter().zip(&mu).map(|(a, b)| a * b).sum();
    let f: Vec<f64> = f.iter().map(|x| x / base).collect();
    let dir = [1.0, -1.0, 1.0, -1.0];
    let mut last_eps = 0.0;
    for k in 1..=50 {
        let d = 0.01 * k as f64;
        // Shift mass between points so the L1 distance is d and the integral is kept.
        let up: f64 = mu
            .iter()
            .zip(&dir)
            .filter(|(_, s)| **s > 0.0)
            .map(|(m, _)| m)
            .sum();
        let down = 1.0 - up;
        let g: Vec<f64> = f
            .iter()
            .zip(&dir)
            .map(|(x, s)| {
                if *s > 0.0 {
                    x + d / (2.0 * up)
                } else {
                    (x - d / (2.0 * down)).max(0.0)
                }
            })
            .collect();
        let rep = genholder_stability_check(&[f.clone(), g], &[0.5, 0.5], &mu).unwrap();
        assert!(rep.pass, "d {d}");
        assert!(rep.epsilon >= last_eps - 1e-15);
        last_eps = rep.epsilon;
    }
    let same = genholder_stability_check(&[f.clone(), f.clone(), f.clone()], &[0.3, 0.3, 0.4], &mu)
        .unwrap();
    assert!(same.pass && same.pairs.iter().all(|p| p.distance == 0.0));
}

#[test]
fn equality_instances_recover_their_factors() {
    for seed in 0..300 {
        let (inst, h) = equality_fixture(seed);
        let integral = finner_integral(&inst);
        assert!((integral - 1.0).abs() < 1e-12, "seed {seed}: {integral}");
        let rec = recover_factors(&inst);
        assert!(
            rec.residuals.iter().all(|&r| r <= 1e-9),
            "seed {seed}: {:?}",
            rec.residuals
        );
        for (class, factor) in rec.classes.iter().zip(&rec.factors) {
            // True class factor: tensor product of member factors.
            let mut want = vec![1.0];
            for &v in class {
                want = want
                    .iter()
                    .flat_map(|a| h[v].iter().map(move |b| a * b))
                    .collect();
            }
            for (a, b) in factor.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10, "seed {seed}");
            }
        }
    }
}

#[test]
fn small_residuals_imply_near_equality() {
    for seed in 0..100 {
        let (inst, _) = equality_fixture(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        for t in [0.0, 1e-6, 1e-3, 0.1, 1.0] {
            let p = perturb(&inst, t, &mut rng);
            if max_residual(&p) <= 1e-9 {
                assert!(finner_integral(&p) >= 1.0 - 1e-8, "seed {seed} t {t}");
            }
        }
    }
}

fn sweep(inst: &ProductInstance, seed: u64) -> Vec<(f64, f64)> {
    (0..20)
        .map(|k| {
            let t = k as f64 / 19.0;
            let p = perturb(inst, t, &mut ChaCha8Rng::seed_from_u64(seed));
            (recover_factors(&p).epsilon, max_residual(&p))
        })
        .collect()
}

#[test]
fn residuals_grow_with_epsilon() {
    for seed in 0..50 {
        let (inst, _) = equality_fixture(seed);
        let mut pts = sweep(&inst, 77 + seed);
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pts.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-12, "seed {seed}: {w:?}");
        }
    }
}

fn calibrate(seeds: std::ops::Range<u64>) -> (Calibration, Vec<(f64, f64)>) {
    let pts: Vec<(f64, f64)> = seeds
        .flat_map(|s| sweep(&equality_fixture(s).0, 500 + s))
        .collect();
    (Calibration::fit(&pts).expect("enough points"), pts)
}

#[test]
fn stability_calibration_is_stable_across_seeds() {
    let (a, pts_a) = calibrate(0..40);
    let (b, pts_b) = calibrate(40..80);
    println!(
        "calibration A: C = {:.4}, c = {:.4}",
        a.constant, a.exponent
    );
    println!(
        "calibration B: C = {:.4}, c = {:.4}",
        b.constant, b.exponent
    );
    assert!(a.exponent >= 0.2 && b.exponent >= 0.2);
    assert!((a.exponent - b.exponent).abs() <= 0.15);
    for (e, r) in pts_a {
        assert!(r <= a.bound(e) * (1.0 + 1e-9) + 1e-12);
    }
    let covered = pts_b
        .iter()
        .filter(|(e, r)| *r <= 2.0 * a.bound(*e) + 1e-9)
        .count();
    assert!(covered as f64 >= 0.95 * pts_b.len() as f64);
}

#[test]
fn single_space_base_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let k = rng.gen_range(2..=6);
        let nu = random_space(&mut rng, k);
        let lambda = rng.gen_range(0.05..0.95);
        let mut f = random_unit_mean(&mut rng, &nu);
        let scale = rng.gen_range(0.5..1.0);
        f.iter_mut().for_each(|x| *x *= scale);
        let inst =
            ProductInstance::new(vec![nu.clone()], vec![(vec![0], lambda, f.clone())]).unwrap();
        let eps = 1.0 - finner_integral(&inst);
        let holder = holder_stability_check(&f, lambda, &nu).unwrap();
        assert!((holder.epsilon - eps).abs() < 1e-12);
        assert!(holder.pass);
        let rec = recover_factors(&inst);
        for (a, b) in rec.factors[0].iter().zip(&f) {
            assert!((a - b / scale).abs() < 1e-12);
        }
    }
}

#[test]
fn uniform_cover_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for nv in 3..=4usize {
        let lambda = 1.0 / (nv as f64 - 1.0);
        let sets: Vec<Vec<usize>> = (0..nv)
            .map(|skip| (0..nv).filter(|&v| v != skip).collect())
            .collect();
        for _ in 0..200 {
            let spaces: Vec<Vec<f64>> = (0..nv).map(|_| random_space(&mut rng, 3)).collect();
            let system = sets
                .iter()
                .map(|s| {
                    let len = 3usize.pow(s.len() as u32);
                    let vals: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
                    (s.clone(), lambda, vals)
                })
                .collect();
            let inst = ProductInstance::new(spaces.clone(), system).unwrap();
            assert!(finner_integral(&inst) <= 1.0 + 1e-10);

            let h: Vec<Vec<f64>> = spaces
                .iter()
                .map(|s| random_unit_mean(&mut rng, s))
                .collect();
            let weighted: Vec<(Vec<usize>, f64)> =
                sets.iter().map(|s| (s.clone(), lambda)).collect();
            let eq = product_instance(spaces, &weighted, &h).unwrap();
            assert!((finner_integral(&eq) - 1.0).abs() < 1e-12);
            assert!(max_residual(&eq) <= 1e-9);
            let noisy = perturb(&eq, 0.5, &mut rng);
            assert!(finner_integral(&noisy) <= 1.0 + 1e-10);
        }
    }
}

/// `{0,1}` with weight 1/2, `{1}` with 1/2, `{0}` with 0.3: class `{0}` has slack 0.2.
fn slack_fixture(seed: u64, t: f64) -> ProductInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spaces = vec![random_space(&mut rng, 3), random_space(&mut rng, 2)];
    let h = vec![vec![1.0; 3], random_unit_mean(&mut rng, &spaces[1])];
    let eq = product_instance(
        spaces,
        &[(vec![0, 1], 0.5), (vec![1], 0.5), (vec![0], 0.3)],
        &h,
    )
    .unwrap();
    perturb(&eq, t, &mut rng)
}

#[test]
fn slack_classes_have_trivial_factors() {
    let exact = Calibration {
        constant: 1.0,
        exponent: 0.5,
    };
    let ones = ProductInstance::new(
        vec![vec![0.3, 0.7], vec![0.5, 0.5]],
        vec![
            (vec![0, 1], 0.5, vec![1.0; 4]),
            (vec![1], 0.5, vec![1.0; 2]),
            (vec![0], 0.3, vec![1.0; 2]),
        ],
    )
    .unwrap();
    let r = remark_hb1_check(&ones, &[0], &exact).unwrap();
    assert!(r.pass && r.distance == 0.0);
    for seed in 0..20 {
        let r = remark_hb1_check(&slack_fixture(seed, 0.0), &[0], &exact).unwrap();
        assert!(r.distance <= 1e-9, "seed {seed}: {}", r.distance);
    }
    // Calibrate on one half of the noisy family, check the other half.
    let pts: Vec<(f64, f64)> = (0..30)
        .flat_map(|seed| {
            (1..=10).map(move |k| {
                let r =
                    remark_hb1_check(&slack_fixture(seed, k as f64 / 10.0), &[0], &exact).unwrap();
                (r.epsilon, r.distance)
            })
        })
        .collect();
    let cal = Calibration::fit(&pts).unwrap();
    let cal = Calibration {
        constant: 2.0 * cal.constant,
        ..cal
    };
    for seed in 30..60 {
        for k in 1..=10 {
            assert!(
                remark_hb1_check(&slack_fixture(seed, k as f64 / 10.0), &[0], &cal)
                    .unwrap()
                    .pass
            );
        }
    }
    // {1} is covered exactly: no slack.
    assert!(remark_hb1_check(&ones, &[1], &exact).is_err());
}

#[test]
fn random_instances_round_trip_through_json() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let inst = random_instance(&mut rng, 4, 4, 5);
        let text = serde_json::to_string(&inst.to_json()).unwrap();
        let back = ProductInstance::from_json_str(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(finner_integral(&back), finner_integral(&inst));
    }
}
