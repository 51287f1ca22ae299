//! Homomorphism counts and densities `t(F, X) = n^{-v} sum_phi prod_{uv in E(F)} X_{phi(u) phi(v)}`.
//!
//! All maps `V(F) -> [n]` are counted, including non-injective ones; the zero
//! diagonal of `X` kills maps that identify adjacent motif vertices.
//!
//! Weighted tables use `f64` arithmetic. Binary graphs ([`BitGraph`]) get exact
//! `u128` counts, which the sampler relies on for drift-free caching.

use rayon::prelude::*;

use crate::bitgraph::{iter_bits, BitGraph};
use crate::error::{Error, Result};
use crate::motif::Motif;
use crate::numeric::CompensatedSum;
use crate::weights::{BlockTable, WeightTable};

/// Largest motif accepted by the generic backtracking engines.
pub const GENERIC_MAX_VERTICES: usize = 8;
/// Largest `n^{v(F)}` accepted by the generic engines for a full count.
pub const GENERIC_MAX_WORK: f64 = 1e10;
/// Largest edge count for which incremental (pinned-edge) plans are built.
pub const DELTA_MAX_EDGES: usize = 16;

/// Algorithm selector for homomorphism counting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HomAlgorithm {
    /// Pick the fastest applicable path.
    Auto,
    /// Backtracking over vertex maps.
    Generic,
    /// Trace of matrix powers (cycles only).
    Cycle,
    /// Row-sum moments (stars only).
    Star,
    /// Clique extension with adjacency bitsets (cliques on binary graphs only).
    Clique,
}

/// Structural class of a motif relevant to fast paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Star(usize),
    Cycle(usize),
    Clique(usize),
    Other,
}

impl Shape {
    pub fn of(motif: &Motif) -> Self {
        let v = motif.vertex_count();
        let e = motif.edge_count();
        let degs = motif.degrees();
        if !motif.is_connected() {
            return Shape::Other;
        }
        if e == v - 1
            && degs.iter().filter(|&&d| d == e).count() >= 1
            && degs.iter().all(|&d| d == e || d == 1)
        {
            return Shape::Star(e);
        }
        if v >= 3 && degs.iter().all(|&d| d == 2) {
            return if v == 3 {
                Shape::Clique(3)
            } else {
                Shape::Cycle(v)
            };
        }
        if e == v * (v - 1) / 2 {
            return Shape::Clique(v);
        }
        Shape::Other
    }

    fn is_cycle(self) -> Option<usize> {
        match self {
            Shape::Cycle(l) => Some(l),
            Shape::Clique(3) => Some(3),
            _ => None,
        }
    }
}

fn normalizer(motif: &Motif, n: usize, scale: f64) -> f64 {
    (n as f64).powi(motif.vertex_count() as i32) * scale.powi(motif.edge_count() as i32)
}

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "scale must be positive, got {scale}"
        )))
    }
}

fn check_generic(motif: &Motif, n: usize) -> Result<()> {
    let v = motif.vertex_count();
    if v > GENERIC_MAX_VERTICES {
        return Err(Error::Capability(format!(
            "generic homomorphism counting supports v(F) <= {GENERIC_MAX_VERTICES}, got {v}"
        )));
    }
    let work = (n as f64).powi(v as i32);
    if work > GENERIC_MAX_WORK {
        return Err(Error::Capability(format!(
            "generic homomorphism counting needs n^v(F) <= {GENERIC_MAX_WORK:e}, got {work:e}"
        )));
    }
    Ok(())
}

/// `t(F, X / scale)`.
pub fn hom_density(motif: &Motif, x: &WeightTable, scale: f64) -> Result<f64> {
    hom_density_with(motif, x, scale, HomAlgorithm::Auto)
}

/// `t(F, X / scale)` with an explicit algorithm.
pub fn hom_density_with(
    motif: &Motif,
    x: &WeightTable,
    scale: f64,
    alg: HomAlgorithm,
) -> Result<f64> {
    check_scale(scale)?;
    Ok(hom_weighted(motif, x, alg)? / normalizer(motif, x.n(), scale))
}

/// Unnormalized weighted homomorphism sum `sum_phi prod X`.
pub fn hom_weighted(motif: &Motif, x: &WeightTable, alg: HomAlgorithm) -> Result<f64> {
    let shape = Shape::of(motif);
    let n = x.n();
    match alg {
        HomAlgorithm::Auto => match shape {
            Shape::Star(k) => Ok(star_weighted(x, k)),
            _ if shape.is_cycle().is_some() => Ok(cycle_weighted(x, shape.is_cycle().unwrap())),
            Shape::Clique(_) if x.is_binary() => {
                hom_count_with(motif, &BitGraph::from_table(x)?, HomAlgorithm::Clique)
                    .map(|c| c as f64)
            }
            _ => {
                check_generic(motif, n)?;
                Ok(generic_weighted(motif, x))
            }
        },
        HomAlgorithm::Generic => {
            check_generic(motif, n)?;
            Ok(generic_weighted(motif, x))
        }
        HomAlgorithm::Cycle => match shape.is_cycle() {
            Some(l) => Ok(cycle_weighted(x, l)),
            None => Err(not_applicable(motif, alg)),
        },
        HomAlgorithm::Star => match shape {
            Shape::Star(k) => Ok(star_weighted(x, k)),
            _ => Err(not_applicable(motif, alg)),
        },
        HomAlgorithm::Clique => {
            if !x.is_binary() {
                return Err(Error::Capability(
                    "the clique path needs a binary table".into(),
                ));
            }
            hom_count_with(motif, &BitGraph::from_table(x)?, alg).map(|c| c as f64)
        }
    }
}

fn not_applicable(motif: &Motif, alg: HomAlgorithm) -> Error {
    Error::Capability(format!(
        "{alg:?} path does not apply to motif {}",
        motif.label()
    ))
}

fn star_weighted(x: &WeightTable, k: usize) -> f64 {
    x.row_sums()
        .into_iter()
        .map(|r| r.powi(k as i32))
        .collect::<CompensatedSum>()
        .value()
}

/// Dense row-major product of two `n x n` matrices.
fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            for (o, &bkj) in row.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    });
    out
}

/// `X^power`, `power >= 1`.
fn matrix_power(x: &WeightTable, power: usize) -> Vec<f64> {
    let n = x.n();
    let mut acc = x.as_slice().to_vec();
    for _ in 1..power {
        acc = matmul(&acc, x.as_slice(), n);
    }
    acc
}

fn cycle_weighted(x: &WeightTable, len: usize) -> f64 {
    let n = x.n();
    let p = matrix_power(x, len - 1);
    let xs = x.as_slice();
    // trace(X^{l-1} X) = sum_ij P_ij X_ji, and X is symmetric.
    (0..n)
        .map(|i| (0..n).map(|j| p[i * n + j] * xs[i * n + j]).sum::<f64>())
        .collect::<CompensatedSum>()
        .value()
}

/// Search order over motif vertices: each next vertex maximizes the number of
/// already placed neighbours (ties: larger degree, then smaller index).
fn search_order(adj: &[Vec<usize>], placed_init: &[bool]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let v = adj.len();
    let mut placed = placed_init.to_vec();
    let mut order = Vec::new();
    let mut earlier = Vec::new();
    while let Some(w) = (0..v).filter(|&u| !placed[u]).max_by_key(|&u| {
        let back = adj[u].iter().filter(|&&x| placed[x]).count();
        (back, adj[u].len(), std::cmp::Reverse(u))
    }) {
        earlier.push(adj[w].iter().copied().filter(|&x| placed[x]).collect());
        order.push(w);
        placed[w] = true;
    }
    (order, earlier)
}

fn adjacency(vertex_count: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); vertex_count];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    adj
}

/// Backtracking plan over a (sub)set of motif edges with some vertices pinned.
#[derive(Clone, Debug)]
struct Plan {
    vertex_count: usize,
    order: Vec<usize>,
    earlier: Vec<Vec<usize>>,
    /// Edges with both endpoints pinned.
    pinned_edges: Vec<(usize, usize)>,
}

impl Plan {
    fn new(vertex_count: usize, edges: &[(usize, usize)], pinned: &[usize]) -> Self {
        let adj = adjacency(vertex_count, edges);
        let mut is_pinned = vec![false; vertex_count];
        for &u in pinned {
            is_pinned[u] = true;
        }
        let (order, earlier) = search_order(&adj, &is_pinned);
        let pinned_edges = edges
            .iter()
            .copied()
            .filter(|&(u, v)| is_pinned[u] && is_pinned[v])
            .collect();
        Self {
            vertex_count,
            order,
            earlier,
            pinned_edges,
        }
    }

    fn weighted(&self, x: &[f64], n: usize, assign: &mut [usize], depth: usize) -> f64 {
        if depth == self.order.len() {
            return 1.0;
        }
        let w = self.order[depth];
        let prev = &self.earlier[depth];
        let mut total = 0.0;
        for c in 0..n {
            let mut prod = 1.0;
            for &u in prev {
                prod *= x[assign[u] * n + c];
                if prod == 0.0 {
                    break;
                }
            }
            if prod == 0.0 {
                continue;
            }
            assign[w] = c;
            total += prod * self.weighted(x, n, assign, depth + 1);
        }
        total
    }

    /// Weighted sum with the pinned vertices already set in `assign`.
    fn weighted_pinned(&self, x: &[f64], n: usize, assign: &mut [usize]) -> f64 {
        let mut factor = 1.0;
        for &(u, v) in &self.pinned_edges {
            factor *= x[assign[u] * n + assign[v]];
        }
        if factor == 0.0 {
            return 0.0;
        }
        factor * self.weighted(x, n, assign, 0)
    }

    fn binary(
        &self,
        g: &BitGraph,
        assign: &mut [usize],
        depth: usize,
        scratch: &mut [Vec<u64>],
    ) -> u128 {
        if depth == self.order.len() {
            return 1;
        }
        let w = self.order[depth];
        let prev = &self.earlier[depth];
        let last = depth + 1 == self.order.len();
        if prev.is_empty() {
            if last {
                return g.n() as u128;
            }
            let mut total = 0;
            for c in 0..g.n() {
                assign[w] = c;
                total += self.binary(g, assign, depth + 1, scratch);
            }
            return total;
        }
        let (buf, rest) = scratch
            .split_first_mut()
            .expect("scratch sized to plan depth");
        buf.copy_from_slice(g.row(assign[prev[0]]));
        for &u in &prev[1..] {
            for (b, r) in buf.iter_mut().zip(g.row(assign[u])) {
                *b &= r;
            }
        }
        if last {
            return buf.iter().map(|b| b.count_ones() as u128).sum();
        }
        let mut total = 0;
        for c in iter_bits(buf) {
            assign[w] = c;
            total += self.binary(g, assign, depth + 1, rest);
        }
        total
    }

    fn binary_pinned(&self, g: &BitGraph, assign: &mut [usize]) -> u128 {
        for &(u, v) in &self.pinned_edges {
            if !g.has_edge(assign[u], assign[v]) {
                return 0;
            }
        }
        let mut scratch = vec![vec![0u64; g.words()]; self.order.len()];
        self.binary(g, assign, 0, &mut scratch)
    }
}

fn generic_weighted(motif: &Motif, x: &WeightTable) -> f64 {
    let n = x.n();
    let plan = Plan::new(motif.vertex_count(), motif.edges(), &[]);
    let xs = x.as_slice();
    let first = plan.order[0];
    // Per-start subtotals are computed in parallel and summed in a fixed order.
    let subtotals: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|c| {
            let mut assign = vec![0usize; plan.vertex_count];
            assign[first] = c;
            plan.weighted(xs, n, &mut assign, 1)
        })
        .collect();
    subtotals.into_iter().collect::<CompensatedSum>().value()
}

/// Exact homomorphism count into a binary graph.
pub fn hom_count(motif: &Motif, g: &BitGraph) -> Result<u128> {
    hom_count_with(motif, g, HomAlgorithm::Auto)
}

/// Exact homomorphism count with an explicit algorithm.
pub fn hom_count_with(motif: &Motif, g: &BitGraph, alg: HomAlgorithm) -> Result<u128> {
    let shape = Shape::of(motif);
    match alg {
        HomAlgorithm::Auto => match shape {
            Shape::Star(k) => Ok(star_count(g, k)),
            Shape::Clique(r) => Ok(clique_count(g, r)),
            Shape::Cycle(l) => Ok(cycle_count(g, l)),
            Shape::Other => generic_count(motif, g),
        },
        HomAlgorithm::Generic => generic_count(motif, g),
        HomAlgorithm::Cycle => match shape.is_cycle() {
            Some(l) => Ok(cycle_count(g, l)),
            None => Err(not_applicable(motif, alg)),
        },
        HomAlgorithm::Star => match shape {
            Shape::Star(k) => Ok(star_count(g, k)),
            _ => Err(not_applicable(motif, alg)),
        },
        HomAlgorithm::Clique => match shape {
            Shape::Clique(r) => Ok(clique_count(g, r)),
            Shape::Star(1) => Ok(clique_count(g, 2)),
            _ => Err(not_applicable(motif, alg)),
        },
    }
}

fn generic_count(motif: &Motif, g: &BitGraph) -> Result<u128> {
    check_generic(motif, g.n())?;
    let plan = Plan::new(motif.vertex_count(), motif.edges(), &[]);
    let mut assign = vec![0usize; motif.vertex_count()];
    Ok(plan.binary_pinned(g, &mut assign))
}

fn star_count(g: &BitGraph, k: usize) -> u128 {
    g.degrees().iter().map(|&d| (d as u128).pow(k as u32)).sum()
}

fn cycle_count(g: &BitGraph, len: usize) -> u128 {
    let n = g.n();
    (0..n)
        .into_par_iter()
        .map(|start| {
            // walks[v] = number of walks of the current length from start to v
            let mut walks = vec![0u128; n];
            for v in g.neighbors(start) {
                walks[v] = 1;
            }
            for _ in 1..len - 1 {
                let mut next = vec![0u128; n];
                for (u, &w) in walks.iter().enumerate() {
                    if w != 0 {
                        for v in g.neighbors(u) {
                            next[v] += w;
                        }
                    }
                }
                walks = next;
            }
            g.neighbors(start).map(|v| walks[v]).sum::<u128>()
        })
        .sum()
}

fn factorial(k: usize) -> u128 {
    (1..=k as u128).product()
}

/// Number of `k`-cliques of `g` inside the vertex set `cand`.
pub fn cliques_within(g: &BitGraph, cand: &[u64], k: usize) -> u128 {
    if k == 0 {
        return 1;
    }
    if k == 1 {
        return cand.iter().map(|b| b.count_ones() as u128).sum();
    }
    let mut total = 0;
    let mut next = vec![0u64; cand.len()];
    for v in iter_bits(cand) {
        let row = g.row(v);
        for (w, (nb, (&c, &r))) in next.iter_mut().zip(cand.iter().zip(row)).enumerate() {
            // keep only vertices above v
            let above = if w < v / 64 {
                0
            } else if w > v / 64 {
                !0
            } else if v % 64 == 63 {
                0
            } else {
                !0u64 << (v % 64 + 1)
            };
            *nb = c & r & above;
        }
        total += cliques_within(g, &next, k - 1);
    }
    total
}

fn all_vertices(g: &BitGraph) -> Vec<u64> {
    let all: Vec<usize> = (0..g.n()).collect();
    g.vertex_set(&all)
}

fn clique_count(g: &BitGraph, r: usize) -> u128 {
    factorial(r) * cliques_within(g, &all_vertices(g), r)
}

/// One term of the pinned-edge expansion of `hom(F, G + ij) - hom(F, G - ij)`.
#[derive(Clone, Debug)]
struct DeltaTerm {
    /// Motif vertex and whether it is pinned to `j` (else `i`).
    pins: Vec<(usize, bool)>,
    plan: Plan,
}

#[derive(Clone, Debug)]
enum DeltaKind {
    Star(usize),
    Clique(usize),
    Terms(Vec<DeltaTerm>),
}

/// Per-motif precomputed machinery for exact counts and single-edge deltas on
/// binary graphs.
#[derive(Clone, Debug)]
pub struct MotifCounter {
    motif: Motif,
    shape: Shape,
    delta: DeltaKind,
}

impl MotifCounter {
    pub fn new(motif: &Motif) -> Result<Self> {
        let shape = Shape::of(motif);
        let delta = match shape {
            Shape::Star(k) => DeltaKind::Star(k),
            Shape::Clique(r) => DeltaKind::Clique(r),
            _ => DeltaKind::Terms(delta_terms(motif)?),
        };
        Ok(Self {
            motif: motif.clone(),
            shape,
            delta,
        })
    }

    pub fn motif(&self) -> &Motif {
        &self.motif
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn count(&self, g: &BitGraph) -> Result<u128> {
        hom_count(&self.motif, g)
    }

    /// `hom(F, G + ij) - hom(F, G)` where `g` must not contain the edge `ij`.
    pub fn delta(&self, g: &BitGraph, i: usize, j: usize) -> u128 {
        debug_assert!(i != j && !g.has_edge(i, j));
        match &self.delta {
            DeltaKind::Star(k) => {
                let k = *k as u32;
                let bump = |d: usize| (d as u128 + 1).pow(k) - (d as u128).pow(k);
                bump(g.degree(i)) + bump(g.degree(j))
            }
            DeltaKind::Clique(r) => {
                let common: Vec<u64> = g.row(i).iter().zip(g.row(j)).map(|(a, b)| a & b).collect();
                factorial(*r) * cliques_within(g, &common, r - 2)
            }
            DeltaKind::Terms(terms) => {
                let mut assign = vec![0usize; self.motif.vertex_count()];
                let mut total = 0;
                for t in terms {
                    for &(u, to_j) in &t.pins {
                        assign[u] = if to_j { j } else { i };
                    }
                    total += t.plan.binary_pinned(g, &mut assign);
                }
                total
            }
        }
    }
}

/// Expand `prod_e (A_e + E_e)` where `E` is the indicator of the pair `{i,j}`:
/// every nonempty edge subset `S` mapped onto `{i,j}` (a proper 2-colouring of
/// `S`), with the other edges counted in `G - ij`.
fn delta_terms(motif: &Motif) -> Result<Vec<DeltaTerm>> {
    let edges = motif.edges();
    let m = edges.len();
    if m > DELTA_MAX_EDGES {
        return Err(Error::Capability(format!(
            "incremental counting supports e(F) <= {DELTA_MAX_EDGES}, got {m}"
        )));
    }
    if motif.vertex_count() > GENERIC_MAX_VERTICES {
        return Err(Error::Capability(format!(
            "incremental counting supports v(F) <= {GENERIC_MAX_VERTICES}"
        )));
    }
    let v = motif.vertex_count();
    let mut terms = Vec::new();
    for mask in 1u32..(1 << m) {
        let chosen: Vec<(usize, usize)> = (0..m)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| edges[b])
            .collect();
        let rest: Vec<(usize, usize)> = (0..m)
            .filter(|b| mask >> b & 1 == 0)
            .map(|b| edges[b])
            .collect();
        let mut in_s = vec![false; v];
        for &(a, b) in &chosen {
            in_s[a] = true;
            in_s[b] = true;
        }
        // A non-chosen edge inside V(S) maps onto {i,i}, {j,j} or {i,j}, all absent in G - ij.
        if rest.iter().any(|&(a, b)| in_s[a] && in_s[b]) {
            continue;
        }
        let Some(components) = two_colorings(v, &chosen) else {
            continue;
        };
        let pinned: Vec<usize> = (0..v).filter(|&u| in_s[u]).collect();
        let plan = Plan::new(v, &rest, &pinned);
        for flip in 0u32..(1 << components.len()) {
            let mut pins = Vec::with_capacity(pinned.len());
            for (c, comp) in components.iter().enumerate() {
                let f = flip >> c & 1 == 1;
                for &(u, side) in comp {
                    pins.push((u, side ^ f));
                }
            }
            terms.push(DeltaTerm {
                pins,
                plan: plan.clone(),
            });
        }
    }
    Ok(terms)
}

/// Proper 2-colourings of the graph spanned by `edges`, one base colouring per
/// connected component; `None` if some component is not bipartite.
fn two_colorings(v: usize, edges: &[(usize, usize)]) -> Option<Vec<Vec<(usize, bool)>>> {
    let adj = adjacency(v, edges);
    let mut color: Vec<Option<bool>> = vec![None; v];
    let mut comps = Vec::new();
    for s in 0..v {
        if color[s].is_some() || adj[s].is_empty() {
            continue;
        }
        color[s] = Some(false);
        let mut stack = vec![s];
        let mut comp = vec![(s, false)];
        while let Some(u) = stack.pop() {
            let cu = color[u].unwrap();
            for &w in &adj[u] {
                match color[w] {
                    None => {
                        color[w] = Some(!cu);
                        comp.push((w, !cu));
                        stack.push(w);
                    }
                    Some(cw) if cw == cu => return None,
                    Some(_) => {}
                }
            }
        }
        comps.push(comp);
    }
    Some(comps)
}

/// `t(F, G^+/scale) - t(F, G^-/scale)` where `G^±` are `G` with the pair `{i,j}`
/// present/absent. `G` must be binary.
pub fn hom_density_delta(
    motif: &Motif,
    g: &WeightTable,
    i: usize,
    j: usize,
    scale: f64,
) -> Result<f64> {
    check_scale(scale)?;
    let n = g.n();
    if i == j || i >= n || j >= n {
        return Err(Error::Domain(format!(
            "invalid vertex pair ({i}, {j}) for n = {n}"
        )));
    }
    let mut bits = BitGraph::from_table(g)?;
    bits.remove_edge(i, j);
    let counter = MotifCounter::new(motif)?;
    Ok(counter.delta(&bits, i, j) as f64 / normalizer(motif, n, scale))
}

/// Gradient of the weighted homomorphism sum with respect to the symmetric
/// variables `x_ij = X_ij = X_ji`, as a dense `n x n` array with zero diagonal.
///
/// Equals `sum_{e=(u,v)} [M_e(i,j) + M_e(j,i)]` where `M_e(i,j)` sums over maps
/// with `u -> i, v -> j` the product over the other edges.
pub fn hom_gradient(motif: &Motif, x: &WeightTable) -> Result<Vec<f64>> {
    let n = x.n();
    let shape = Shape::of(motif);
    let mut grad = vec![0.0; n * n];
    if let Shape::Star(k) = shape {
        let r = x.row_sums();
        let kf = k as f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    grad[i * n + j] = kf * (r[i].powi(k as i32 - 1) + r[j].powi(k as i32 - 1));
                }
            }
        }
        return Ok(grad);
    }
    if let Some(l) = shape.is_cycle() {
        let p = matrix_power(x, l - 1);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    grad[i * n + j] = 2.0 * l as f64 * p[i * n + j];
                }
            }
        }
        return Ok(grad);
    }
    check_generic(motif, n)?;
    let xs = x.as_slice();
    let v = motif.vertex_count();
    for (idx, &(a, b)) in motif.edges().iter().enumerate() {
        let rest: Vec<_> = motif
            .edges()
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != idx)
            .map(|(_, &e)| e)
            .collect();
        let plan = Plan::new(v, &rest, &[a, b]);
        let m: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / n, ij % n);
                if i == j {
                    return 0.0;
                }
                let mut assign = vec![0usize; v];
                assign[a] = i;
                assign[b] = j;
                plan.weighted_pinned(xs, n, &mut assign)
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                grad[i * n + j] += m[i * n + j] + m[j * n + i];
            }
        }
    }
    Ok(grad)
}

/// Gradient of `t(F, X/scale)` with respect to the symmetric variables `x_ij`.
pub fn hom_density_gradient(motif: &Motif, x: &WeightTable, scale: f64) -> Result<Vec<f64>> {
    check_scale(scale)?;
    let z = normalizer(motif, x.n(), scale);
    let mut g = hom_gradient(motif, x)?;
    for v in &mut g {
        *v /= z;
    }
    Ok(g)
}

/// Exact `t(F, X/scale)` for a block-constant table with zero diagonal.
///
/// Works on the quotient: each motif vertex maps either onto a vertex already
/// used by the partial map, or onto a fresh vertex of some block, weighted by
/// the number of fresh vertices left in that block. Cost depends on the number
/// of blocks and `v(F)` only, not on `n`.
pub fn hom_density_block(motif: &Motif, table: &BlockTable, scale: f64) -> Result<f64> {
    check_scale(scale)?;
    if motif.vertex_count() > GENERIC_MAX_VERTICES {
        return Err(Error::Capability(format!(
            "block homomorphism counting supports v(F) <= {GENERIC_MAX_VERTICES}"
        )));
    }
    let adj = adjacency(motif.vertex_count(), motif.edges());
    let (order, earlier) = search_order(&adj, &vec![false; motif.vertex_count()]);
    let mut state = BlockWalk {
        sizes: table.sizes(),
        weights: table.weights(),
        order: &order,
        earlier: &earlier,
        slot_of: vec![0; motif.vertex_count()],
        slot_block: Vec::new(),
        used: vec![0; table.sizes().len()],
    };
    let total = state.walk(0);
    Ok(total / normalizer(motif, table.n(), scale))
}

struct BlockWalk<'a> {
    sizes: &'a [usize],
    weights: &'a [Vec<f64>],
    order: &'a [usize],
    earlier: &'a [Vec<usize>],
    slot_of: Vec<usize>,
    slot_block: Vec<usize>,
    used: Vec<usize>,
}

impl BlockWalk<'_> {
    fn factor(&self, prev: &[usize], slot: usize, block: usize) -> f64 {
        let mut prod = 1.0;
        for &u in prev {
            let s = self.slot_of[u];
            if s == slot {
                return 0.0;
            }
            prod *= self.weights[self.slot_block[s]][block];
        }
        prod
    }

    fn walk(&mut self, depth: usize) -> f64 {
        if depth == self.order.len() {
            return 1.0;
        }
        let w = self.order[depth];
        let prev = &self.earlier[depth];
        let mut total = 0.0;
        for slot in 0..self.slot_block.len() {
            let f = self.factor(prev, slot, self.slot_block[slot]);
            if f != 0.0 {
                self.slot_of[w] = slot;
                total += f * self.walk(depth + 1);
            }
        }
        for block in 0..self.sizes.len() {
            let free = self.sizes[block] - self.used[block];
            if free == 0 {
                continue;
            }
            let slot = self.slot_block.len();
            let f = self.factor(prev, slot, block);
            if f == 0.0 {
                continue;
            }
            self.slot_block.push(block);
            self.used[block] += 1;
            self.slot_of[w] = slot;
            total += free as f64 * f * self.walk(depth + 1);
            self.used[block] -= 1;
            self.slot_block.pop();
        }
        total
    }
}
