//! Clique-hub detection in binary graphs and its certificates: the
//! almost-clique-hub slack `xi1`, the spectral distance `xi2` and sampled edge
//! discrepancies.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitgraph::{iter_bits, BitGraph};
use crate::error::{Error, Result};
use crate::nmf::CliqueHub;
use crate::weights::WeightTable;

/// Relative change of the Ritz estimate at which Lanczos stops.
pub const SPECTRAL_TOL: f64 = 1e-10;
const LANCZOS_MAX_STEPS: usize = 400;

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with
/// diagonal `alpha` and off-diagonal `beta` (Sturm sequence).
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (k, &a) in alpha.iter().enumerate() {
        let b2 = if k == 0 {
            0.0
        } else {
            beta[k - 1] * beta[k - 1]
        };
        d = a - x - if k == 0 { 0.0 } else { b2 / d };
        if d == 0.0 {
            d = -f64::EPSILON * (a.abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest `|eigenvalue|` of a symmetric tridiagonal matrix.
fn tridiagonal_abs_max(alpha: &[f64], beta: &[f64]) -> f64 {
    let k = alpha.len();
    let radius = (0..k)
        .map(|i| {
            let left = if i > 0 { beta[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < k { beta[i].abs() } else { 0.0 };
            alpha[i].abs() + left + right
        })
        .fold(0.0, f64::max);
    if radius == 0.0 {
        return 0.0;
    }
    let (lo0, hi0) = (-radius - 1.0, radius + 1.0);
    let bisect = |target: usize| {
        // Smallest x with at least `target` eigenvalues below x.
        let (mut lo, mut hi) = (lo0, hi0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sturm_count(alpha, beta, mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    bisect(k).abs().max(bisect(1).abs())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `||D||_{2->2}` of a symmetric operator given by `matvec(v, out)`, from the
/// extreme Ritz values of a fully reorthogonalized Lanczos run.
pub fn spectral_norm(n: usize, seed: u64, matvec: impl Fn(&[f64], &mut [f64])) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let norm = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|x| *x /= norm);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut w = vec![0.0; n];
    let mut est = 0.0;
    for step in 0..n.min(LANCZOS_MAX_STEPS) {
        matvec(&q, &mut w);
        let a = dot(&q, &w);
        alpha.push(a);
        basis.push(q);
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = dot(&w, &w).sqrt();
        if step % 4 == 3 || b <= 1e-12 * (a.abs() + est) || step + 1 == n.min(LANCZOS_MAX_STEPS) {
            let next = tridiagonal_abs_max(&alpha, &beta);
            let done = (next - est).abs() <= SPECTRAL_TOL * next;
            est = next;
            if done {
                break;
            }
        }
        if b <= 1e-12 * (a.abs() + est).max(f64::MIN_POSITIVE) {
            break;
        }
        beta.push(b);
        q = w.iter().map(|x| x / b).collect();
    }
    tridiagonal_abs_max(&alpha, &beta[..alpha.len() - 1]).max(est)
}

/// `||G - Q||_{2->2}` for dense symmetric tables of the same size.
pub fn spectral_distance(g: &WeightTable, q: &WeightTable) -> Result<f64> {
    let n = g.n();
    if q.n() != n {
        return Err(Error::Validation(format!(
            "tables have sizes {n} and {}",
            q.n()
        )));
    }
    let d: Vec<f64> = g
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    Ok(spectral_norm(n, 0x5eed, |v, out| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = d[i * n..(i + 1) * n]
                .iter()
                .zip(v)
                .map(|(a, b)| a * b)
                .sum();
        }
    }))
}

/// Disjoint vertex sets `I` (clique) and `J` (hub).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub clique: Vec<usize>,
    pub hub: Vec<usize>,
}

impl Witness {
    fn masks(&self, n: usize) -> (Vec<bool>, Vec<bool>) {
        let mut ci = vec![false; n];
        let mut hj = vec![false; n];
        for &v in &self.clique {
            ci[v] = true;
        }
        for &v in &self.hub {
            hj[v] = true;
        }
        (ci, hj)
    }

    /// `Q^{I,J}` as a dense table.
    pub fn table(&self, n: usize, p: f64) -> WeightTable {
        let (ci, hj) = self.masks(n);
        WeightTable::from_fn(n, |i, j| {
            if (ci[i] && ci[j]) || hj[i] != hj[j] {
                1.0
            } else {
                p
            }
        })
    }
}

/// `||G - Q^{I,J}||_{2->2}` using the block structure of `Q^{I,J}`.
pub fn clique_hub_distance(g: &BitGraph, w: &Witness, p: f64) -> f64 {
    let n = g.n();
    let (ci, hj) = w.masks(n);
    spectral_norm(n, 0x5eed, |v, out| {
        let total: f64 = v.iter().sum();
        let s_i: f64 = w.clique.iter().map(|&k| v[k]).sum();
        let s_j: f64 = w.hub.iter().map(|&k| v[k]).sum();
        for (i, o) in out.iter_mut().enumerate() {
            let gv: f64 = iter_bits(g.row(i)).map(|k| v[k]).sum();
            let mut qv = p * (total - v[i]);
            if ci[i] {
                qv += (1.0 - p) * (s_i - v[i]);
            }
            qv += (1.0 - p) * if hj[i] { total - s_j } else { s_j };
            *o = gv - qv;
        }
    })
}

/// Smallest `xi` with `G` in the almost-clique-hub set of `(I, J)`:
/// `e(I,I) >= |I|(|I|-1) - 2 xi n^2 p^Delta` and
/// `e(J,J^c) >= |J|(n-|J|) - xi n^2 p^Delta` (ordered pairs, off-diagonal).
pub fn almost_clique_hub_xi(g: &BitGraph, w: &Witness, p: f64, delta: usize) -> f64 {
    let n = g.n();
    let scale = (n * n) as f64 * p.powi(delta as i32);
    let iset = g.vertex_set(&w.clique);
    let jset = g.vertex_set(&w.hub);
    let inside: usize = w.clique.iter().map(|&v| g.degree_into(v, &iset)).sum();
    let k = w.clique.len();
    let clique_deficit = (k * k.saturating_sub(1) - inside) as f64;
    let cross: usize = w
        .hub
        .iter()
        .map(|&v| g.degree(v) - g.degree_into(v, &jset))
        .sum();
    let hub_deficit = (w.hub.len() * (n - w.hub.len()) - cross) as f64;
    (clique_deficit / (2.0 * scale))
        .max(hub_deficit / scale)
        .max(0.0)
}

/// Detection parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DetectOptions {
    /// Hub threshold: degree at least `(1 - delta_hub) n`.
    pub delta_hub: f64,
    /// Peeling stops once the clique density reaches `1 - 2 peel_xi`.
    pub peel_xi: f64,
    /// `(a, b)` fixing the witness sizes; otherwise the detected sizes are used.
    pub hints: Option<(f64, f64)>,
    /// Discrepancy samples per family of test sets.
    pub samples: usize,
    pub seed: u64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            delta_hub: 0.5,
            peel_xi: 0.05,
            hints: None,
            samples: 32,
            seed: 0,
        }
    }
}

/// Worst sampled discrepancy ratios; a ratio below 1 means the bound held.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub checked: usize,
    pub violations: usize,
    /// `max (1 - e(A,B)/|A||B|) / (xi (n^2 p^Delta / |A||B|)^{1/2})` over clique and hub blocks.
    pub worst_dense_ratio: f64,
    /// `max |e(A,B)/(p|A||B|) - 1| / (xi (n^2 p^{Delta-2} / |A||B|)^{1/2})` off the structure.
    pub worst_sparse_ratio: f64,
    /// Dense-block samples with `e(A,B) > |A||B|` (impossible for disjoint sets).
    pub negative: usize,
}

/// Detection output with certificates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructureReport {
    pub hub: Vec<usize>,
    pub clique: Vec<usize>,
    pub hub_threshold: f64,
    pub clique_threshold: f64,
    /// `(a, b)` whose floor sizes the witness has; `c = max(a, b)`.
    pub a: f64,
    pub b: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub discrepancy: DiscrepancyReport,
}

impl StructureReport {
    pub fn witness(&self) -> Witness {
        Witness {
            clique: self.clique.clone(),
            hub: self.hub.clone(),
        }
    }
}

fn clique_density(g: &BitGraph, set: &[usize]) -> f64 {
    let k = set.len();
    if k < 2 {
        return 1.0;
    }
    let bits = g.vertex_set(set);
    let inside: usize = set.iter().map(|&v| g.degree_into(v, &bits)).sum();
    inside as f64 / (k * (k - 1)) as f64
}

/// `(a, b)` reproducing the given sizes under the floor formulas.
pub fn ab_for_sizes(n: usize, p: f64, delta: usize, clique: usize, hub: usize) -> (f64, f64) {
    let pd = p.powi(delta as i32);
    let nf = n as f64;
    ((clique as f64 / nf).powi(2) / pd, hub as f64 / (nf * pd))
}

/// Threshold degrees for the hub, then degrees outside the hub for the clique,
/// then consolidate the clique greedily.
pub fn detect_structure(
    g: &BitGraph,
    p: f64,
    delta: usize,
    opts: &DetectOptions,
) -> Result<StructureReport> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("p = {p} is not in (0,1)")));
    }
    let n = g.n();
    let nf = n as f64;
    let hub_threshold = (1.0 - opts.delta_hub) * nf;
    let mut hub: Vec<usize> = (0..n)
        .filter(|&v| g.degree(v) as f64 >= hub_threshold)
        .collect();
    let hub_bits = g.vertex_set(&hub);
    let mut in_hub = vec![false; n];
    for &v in &hub {
        in_hub[v] = true;
    }
    let outer_degree = |v: usize| g.degree(v) - g.degree_into(v, &hub_bits);
    let clique_threshold = nf * p + nf.sqrt();
    let mut clique: Vec<usize> = (0..n)
        .filter(|&v| !in_hub[v] && outer_degree(v) as f64 >= clique_threshold)
        .collect();

    // Peel the vertex with the fewest neighbors inside until dense enough.
    let target = 1.0 - 2.0 * opts.peel_xi;
    while clique.len() > 1 && clique_density(g, &clique) < target {
        let bits = g.vertex_set(&clique);
        let (pos, _) = clique
            .iter()
            .enumerate()
            .min_by_key(|&(k, &v)| (g.degree_into(v, &bits), k))
            .expect("nonempty");
        clique.remove(pos);
    }
    if clique.len() == 1 {
        clique.clear();
    }
    // Add back vertices adjacent to almost all of the clique.
    if clique.len() >= 2 {
        let bits = g.vertex_set(&clique);
        let mut member = vec![false; n];
        for &v in &clique {
            member[v] = true;
        }
        let need = target * clique.len() as f64;
        let extra: Vec<usize> = (0..n)
            .filter(|&v| !member[v] && !in_hub[v] && g.degree_into(v, &bits) as f64 >= need)
            .collect();
        clique.extend(extra);
        clique.sort_unstable();
    }

    let (a, b) = match opts.hints {
        Some((a, b)) => {
            let (ci, hj) = CliqueHub::sizes(n, p, delta, a, b);
            resize_by_degree(g, &mut hub, hj, None);
            let hub_bits = g.vertex_set(&hub);
            let outer: Vec<usize> = (0..n)
                .map(|v| g.degree(v) - g.degree_into(v, &hub_bits))
                .collect();
            let forbidden: Vec<usize> = hub.clone();
            resize_by_degree(
                g,
                &mut clique,
                ci.min(n - hub.len()),
                Some((&outer, &forbidden)),
            );
            (a, b)
        }
        None => ab_for_sizes(n, p, delta, clique.len(), hub.len()),
    };
    let w = Witness { clique, hub };
    let xi1 = almost_clique_hub_xi(g, &w, p, delta);
    let xi2 = clique_hub_distance(g, &w, p) / (nf * p.powf(delta as f64 / 2.0));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let discrepancy = discrepancy_check(
        g,
        &w,
        p,
        delta,
        xi2 * (1.0 + 1e-6) + 1e-12,
        opts.samples,
        &mut rng,
    );
    Ok(StructureReport {
        hub: w.hub,
        clique: w.clique,
        hub_threshold,
        clique_threshold,
        a,
        b,
        xi1,
        xi2,
        discrepancy,
    })
}

/// Trim to the `size` highest-degree members or extend with the highest-degree
/// non-members (ties by index).
fn resize_by_degree(
    g: &BitGraph,
    set: &mut Vec<usize>,
    size: usize,
    outer: Option<(&[usize], &[usize])>,
) {
    let deg = |v: usize| outer.map_or(g.degree(v), |(d, _)| d[v]);
    set.sort_by_key(|&v| (std::cmp::Reverse(deg(v)), v));
    if set.len() > size {
        set.truncate(size);
    } else {
        let mut taken = vec![false; g.n()];
        for &v in set.iter() {
            taken[v] = true;
        }
        if let Some((_, forbidden)) = outer {
            for &v in forbidden {
                taken[v] = true;
            }
        }
        let mut rest: Vec<usize> = (0..g.n()).filter(|&v| !taken[v]).collect();
        rest.sort_by_key(|&v| (std::cmp::Reverse(deg(v)), v));
        set.extend(rest.into_iter().take(size - set.len()));
    }
    set.sort_unstable();
}

fn edges_between(g: &BitGraph, a: &[usize], b: &[usize]) -> usize {
    let bits = g.vertex_set(b);
    a.iter().map(|&v| g.degree_into(v, &bits)).sum()
}

/// Random disjoint nonempty `A, B` from `pool_a`, `pool_b`.
fn sample_pair<R: Rng>(
    pool_a: &[usize],
    pool_b: &[usize],
    rng: &mut R,
) -> Option<(Vec<usize>, Vec<usize>)> {
    if pool_a.is_empty() || pool_b.is_empty() {
        return None;
    }
    let mut a: Vec<usize> = pool_a.to_vec();
    a.shuffle(rng);
    let ka = rng.gen_range(1..=a.len());
    a.truncate(ka);
    let mut used = a.clone();
    used.sort_unstable();
    let mut b: Vec<usize> = pool_b
        .iter()
        .copied()
        .filter(|v| used.binary_search(v).is_err())
        .collect();
    if b.is_empty() {
        return None;
    }
    b.shuffle(rng);
    let kb = rng.gen_range(1..=b.len());
    b.truncate(kb);
    Some((a, b))
}

/// Check the edge-discrepancy bounds implied by `||G - Q^{I,J}|| < xi n p^{Delta/2}`
/// on random disjoint test sets.
pub fn discrepancy_check<R: Rng>(
    g: &BitGraph,
    w: &Witness,
    p: f64,
    delta: usize,
    xi: f64,
    samples: usize,
    rng: &mut R,
) -> DiscrepancyReport {
    let n = g.n();
    let nf = n as f64;
    let pd = p.powi(delta as i32);
    let (ci, hj) = w.masks(n);
    let not_hub: Vec<usize> = (0..n).filter(|&v| !hj[v]).collect();
    let outside_clique: Vec<usize> = not_hub.iter().copied().filter(|&v| !ci[v]).collect();
    let mut rep = DiscrepancyReport::default();
    let dense = |a: &[usize], b: &[usize], rep: &mut DiscrepancyReport| {
        let ab = (a.len() * b.len()) as f64;
        let e = edges_between(g, a, b) as f64;
        let lhs = 1.0 - e / ab;
        let bound = xi * (nf * nf * pd / ab).sqrt();
        rep.checked += 1;
        if lhs < 0.0 {
            rep.negative += 1;
        }
        let ratio = if bound > 0.0 {
            lhs / bound
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        rep.worst_dense_ratio = rep.worst_dense_ratio.max(ratio);
        if lhs < 0.0 || (lhs >= bound && lhs > 0.0) {
            rep.violations += 1;
        }
    };
    for _ in 0..samples {
        if let Some((a, b)) = sample_pair(&w.clique, &w.clique, rng) {
            dense(&a, &b, &mut rep);
        }
        if let Some((a, b)) = sample_pair(&w.hub, &not_hub, rng) {
            dense(&a, &b, &mut rep);
        }
        // Off the structure: A outside I and J, B outside J.
        if let Some((a, b)) = sample_pair(&outside_clique, &not_hub, rng) {
            let ab = (a.len() * b.len()) as f64;
            let e = edges_between(g, &a, &b) as f64;
            let lhs = (e / (p * ab) - 1.0).abs();
            let bound = xi * (nf * nf * pd / (p * p) / ab).sqrt();
            rep.checked += 1;
            let ratio = if bound > 0.0 {
                lhs / bound
            } else if lhs > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            rep.worst_sparse_ratio = rep.worst_sparse_ratio.max(ratio);
            if lhs >= bound && lhs > 0.0 {
                rep.violations += 1;
            }
        }
    }
    rep
}

/// Planted clique-hub graph: all pairs inside `I` and across `(J, J^c)`
/// present, other pairs `Bernoulli(p)`; `I` and `J` are random disjoint sets.
pub fn planted_clique_hub<R: Rng>(
    n: usize,
    p: f64,
    clique_size: usize,
    hub_size: usize,
    rng: &mut R,
) -> Result<(BitGraph, Witness)> {
    if clique_size + hub_size > n {
        return Err(Error::Domain("planted sets exceed n".into()));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut clique = perm[..clique_size].to_vec();
    let mut hub = perm[clique_size..clique_size + hub_size].to_vec();
    clique.sort_unstable();
    hub.sort_unstable();
    let w = Witness { clique, hub };
    let (ci, hj) = w.masks(n);
    let mut g = BitGraph::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            let forced = (ci[i] && ci[j]) || hj[i] != hj[j];
            if forced || rng.gen::<f64>() < p {
                g.add_edge(i, j);
            }
        }
    }
    Ok((g, w))
}
