//! Glauber dynamics for the generalized ERGM
//! `nu(G) ∝ p^{e(G)} (1-p)^{N-e(G)} exp(r H(G/p))`, exact small-`n`
//! enumeration, and multi-chain experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitgraph::BitGraph;
use crate::error::{Error, Result};
use crate::hamiltonian::{psi_solve, HamiltonianSpec};
use crate::hom::MotifCounter;
use crate::motif::rate;
use crate::nmf::CliqueHub;
use crate::numeric::{compensated_sum, log_sum_exp, logistic};
use crate::structure::{detect_structure, DetectOptions, StructureReport};

/// `r * Delta H` is clamped to this magnitude before the logistic.
pub const LOGIT_CLAMP: f64 = 700.0;
/// Largest `n` for exact enumeration (`2^15` graphs).
pub const EXACT_MAX_N: usize = 6;
/// Sweeps between cache resyncs.
pub const RESYNC_SWEEPS: u64 = 64;

/// Index of the pair `i < j` in lexicographic order.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// All pairs `i < j` in lexicographic order.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

/// Graph whose edge set is the bitmask `mask` over [`pairs`].
pub fn graph_from_mask(n: usize, mask: u64) -> BitGraph {
    let mut g = BitGraph::empty(n);
    for (k, &(i, j)) in pairs(n).iter().enumerate() {
        if mask >> k & 1 == 1 {
            g.add_edge(i, j);
        }
    }
    g
}

pub fn mask_of_graph(g: &BitGraph) -> u64 {
    let mut mask = 0u64;
    for (k, &(i, j)) in pairs(g.n()).iter().enumerate() {
        if g.has_edge(i, j) {
            mask |= 1 << k;
        }
    }
    mask
}

/// Shared immutable model data: counters, normalizations and the rate.
#[derive(Clone, Debug)]
pub struct ErgmModel {
    n: usize,
    p: f64,
    spec: HamiltonianSpec,
    rate: f64,
    log_odds: f64,
    counters: Vec<MotifCounter>,
    /// `n^{v(F)} p^{e(F)}`: `t(F, G/p) = hom / norm`.
    norms: Vec<f64>,
}

impl ErgmModel {
    pub fn new(n: usize, p: f64, spec: HamiltonianSpec) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Validation(format!("p = {p} is not in (0,1)")));
        }
        if n < 2 {
            return Err(Error::Validation("n must be at least 2".into()));
        }
        let delta = spec.validate()?.max_degree;
        let counters = spec
            .family()
            .iter()
            .map(MotifCounter::new)
            .collect::<Result<Vec<_>>>()?;
        let norms = spec
            .family()
            .iter()
            .map(|m| (n as f64).powi(m.vertex_count() as i32) * p.powi(m.edge_count() as i32))
            .collect();
        Ok(Self {
            n,
            p,
            rate: rate(n, p, delta)?,
            log_odds: (p / (1.0 - p)).ln(),
            spec,
            counters,
            norms,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn counts(&self, g: &BitGraph) -> Result<Vec<u128>> {
        self.counters.iter().map(|c| c.count(g)).collect()
    }

    pub fn densities_of(&self, counts: &[u128]) -> Vec<f64> {
        counts
            .iter()
            .zip(&self.norms)
            .map(|(&c, &z)| c as f64 / z)
            .collect()
    }

    /// `H(G/p) = h(t(F_1, G/p), ...)`.
    pub fn hamiltonian(&self, g: &BitGraph) -> Result<f64> {
        Ok(self.spec.h(&self.densities_of(&self.counts(g)?)))
    }

    /// Conditional probability that a pair is present given the rest, from the
    /// hom counts without the pair and the count increments it would add.
    fn probability_from(&self, counts_without: &[u128], deltas: &[u128]) -> f64 {
        if self.spec.is_zero() {
            return logistic(self.log_odds);
        }
        let minus = self.densities_of(counts_without);
        let plus: Vec<f64> = counts_without
            .iter()
            .zip(deltas)
            .zip(&self.norms)
            .map(|((&base, &d), &z)| (base + d) as f64 / z)
            .collect();
        let dh = self.spec.h(&plus) - self.spec.h(&minus);
        let x = (self.rate * dh).clamp(-LOGIT_CLAMP, LOGIT_CLAMP) + self.log_odds;
        logistic(x)
    }

    fn deltas(&self, g: &BitGraph, i: usize, j: usize) -> Vec<u128> {
        self.counters.iter().map(|c| c.delta(g, i, j)).collect()
    }

    /// Heat-bath probability of setting `ij` to 1 given the other pairs of `g`.
    pub fn edge_probability(&self, g: &BitGraph, i: usize, j: usize) -> Result<f64> {
        let mut h = g.clone();
        h.remove_edge(i, j);
        let counts = self.counts(&h)?;
        Ok(self.probability_from(&counts, &self.deltas(&h, i, j)))
    }
}

/// One Glauber chain.
#[derive(Clone, Debug)]
pub struct ErgmChain {
    model: ErgmModel,
    graph: BitGraph,
    counts: Vec<u128>,
    rng: ChaCha8Rng,
    steps: u64,
    pair_count: u64,
}

impl ErgmChain {
    /// Chain started from an `ER(p)` sample drawn from the chain's own stream.
    pub fn new(model: ErgmModel, seed: u64, stream: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let graph = BitGraph::erdos_renyi(model.n, model.p, &mut rng);
        Self::from_parts(model, graph, rng)
    }

    pub fn with_graph(model: ErgmModel, graph: BitGraph, seed: u64, stream: u64) -> Result<Self> {
        if graph.n() != model.n {
            return Err(Error::Validation("graph size differs from model n".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self::from_parts(model, graph, rng)
    }

    fn from_parts(model: ErgmModel, graph: BitGraph, rng: ChaCha8Rng) -> Result<Self> {
        let counts = model.counts(&graph)?;
        let n = model.n as u64;
        Ok(Self {
            model,
            graph,
            counts,
            rng,
            steps: 0,
            pair_count: n * (n - 1) / 2,
        })
    }

    pub fn model(&self) -> &ErgmModel {
        &self.model
    }

    pub fn graph(&self) -> &BitGraph {
        &self.graph
    }

    pub fn counts(&self) -> &[u128] {
        &self.counts
    }

    /// Cached `t(F_k, G/p)`.
    pub fn densities(&self) -> Vec<f64> {
        self.model.densities_of(&self.counts)
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Completed sweeps (`C(n,2)` steps each).
    pub fn sweeps(&self) -> u64 {
        self.steps / self.pair_count
    }

    /// One heat-bath update of a uniformly chosen pair; returns the pair and
    /// its new state.
    pub fn step(&mut self) -> (usize, usize, bool) {
        let n = self.model.n;
        let i = self.rng.gen_range(0..n);
        let mut j = self.rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (i, j) = (i.min(j), i.max(j));
        let u: f64 = self.rng.gen();
        let was = self.graph.remove_edge(i, j);
        let deltas = self.model.deltas(&self.graph, i, j);
        if was {
            for (c, d) in self.counts.iter_mut().zip(&deltas) {
                *c -= d;
            }
        }
        let prob = self.model.probability_from(&self.counts, &deltas);
        let now = u < prob;
        if now {
            self.graph.add_edge(i, j);
            for (c, d) in self.counts.iter_mut().zip(&deltas) {
                *c += d;
            }
        }
        self.steps += 1;
        if self.steps.is_multiple_of(RESYNC_SWEEPS * self.pair_count) {
            self.resync()
                .expect("incremental counts match a full recount");
        }
        (i, j, now)
    }

    pub fn sweep(&mut self) {
        for _ in 0..self.pair_count {
            self.step();
        }
    }

    /// Recount every motif from scratch; errors if the cache had drifted.
    pub fn resync(&mut self) -> Result<()> {
        let fresh = self.model.counts(&self.graph)?;
        if fresh != self.counts {
            self.counts = fresh;
            return Err(Error::Internal("cached hom counts drifted".into()));
        }
        Ok(())
    }
}

/// One heat-bath edge update.
pub fn glauber_step(chain: &mut ErgmChain) -> (usize, usize, bool) {
    chain.step()
}

/// Exact law of the model at tiny `n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactDistribution {
    pub n: usize,
    /// `Lambda = log E_{ER(p)} exp(r H(G/p))`.
    pub log_mgf: f64,
    /// `log Z = Lambda - C(n,2) log(1-p)`.
    pub log_z: f64,
    /// `nu(G)` indexed by the edge mask over [`pairs`].
    pub probabilities: Vec<f64>,
}

/// Enumerate all `2^{C(n,2)}` graphs.
pub fn exact_enumerate(model: &ErgmModel) -> Result<ExactDistribution> {
    let n = model.n;
    if n > EXACT_MAX_N {
        return Err(Error::Capability(format!(
            "exact enumeration supports n <= {EXACT_MAX_N}, got {n}"
        )));
    }
    let npairs = n * (n - 1) / 2;
    let p = model.p;
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let states = 1u64 << npairs;
    let mut log_base = Vec::with_capacity(states as usize);
    let mut tilt = Vec::with_capacity(states as usize);
    for mask in 0..states {
        let e = mask.count_ones() as f64;
        log_base.push(e * lp + (npairs as f64 - e) * lq);
        let g = graph_from_mask(n, mask);
        tilt.push(model.rate * model.hamiltonian(&g)?);
    }
    let max_tilt = tilt.iter().fold(0f64, |m, &t| m.max(t.abs()));
    // For moderate tilts `log(1 + E[exp(rH) - 1])` is exact at H = 0 and
    // accurate for small H; otherwise fall back to log-sum-exp.
    let log_mgf = if max_tilt < 30.0 {
        compensated_sum(
            log_base
                .iter()
                .zip(&tilt)
                .map(|(b, t)| b.exp() * t.exp_m1()),
        )
        .ln_1p()
    } else {
        let terms: Vec<f64> = log_base.iter().zip(&tilt).map(|(b, t)| b + t).collect();
        log_sum_exp(&terms)
    };
    let probabilities: Vec<f64> = log_base
        .iter()
        .zip(&tilt)
        .map(|(b, t)| (b + t - log_mgf).exp())
        .collect();
    let total = compensated_sum(probabilities.iter().copied());
    let probabilities = probabilities.into_iter().map(|x| x / total).collect();
    Ok(ExactDistribution {
        n,
        log_mgf,
        log_z: log_mgf - npairs as f64 * lq,
        probabilities,
    })
}

/// Dense transition matrix (row-major, `2^{C(n,2)}` states) of one Glauber step.
pub fn glauber_kernel(model: &ErgmModel) -> Result<Vec<f64>> {
    let n = model.n;
    if n > 5 {
        return Err(Error::Capability(format!(
            "kernel assembly supports n <= 5, got {n}"
        )));
    }
    let prs = pairs(n);
    let states = 1usize << prs.len();
    let inv = 1.0 / prs.len() as f64;
    let mut kernel = vec![0.0; states * states];
    for mask in 0..states {
        let g = graph_from_mask(n, mask as u64);
        for (k, &(i, j)) in prs.iter().enumerate() {
            let on = model.edge_probability(&g, i, j)?;
            let with = mask | 1 << k;
            let without = mask & !(1 << k);
            kernel[mask * states + with] += inv * on;
            kernel[mask * states + without] += inv * (1.0 - on);
        }
    }
    Ok(kernel)
}

/// `max_G |(nu P)(G) - nu(G)|`.
pub fn stationarity_residual(nu: &[f64], kernel: &[f64]) -> f64 {
    let s = nu.len();
    (0..s)
        .map(|y| {
            let flow = compensated_sum((0..s).map(|x| nu[x] * kernel[x * s + y]));
            (flow - nu[y]).abs()
        })
        .fold(0.0, f64::max)
}

/// `max_{x,y} |nu(x) P(x,y) - nu(y) P(y,x)|`.
pub fn detailed_balance_residual(nu: &[f64], kernel: &[f64]) -> f64 {
    let s = nu.len();
    let mut worst = 0f64;
    for x in 0..s {
        for y in x + 1..s {
            worst = worst.max((nu[x] * kernel[x * s + y] - nu[y] * kernel[y * s + x]).abs());
        }
    }
    worst
}

/// Total variation distance between two distributions on the same states.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Occupation measure of a chain over `steps` steps (tiny `n` only).
pub fn empirical_distribution(chain: &mut ErgmChain, steps: u64) -> Result<Vec<f64>> {
    let n = chain.model.n;
    if n > EXACT_MAX_N {
        return Err(Error::Capability(format!(
            "state histograms support n <= {EXACT_MAX_N}"
        )));
    }
    let states = 1usize << (n * (n - 1) / 2);
    let mut hist = vec![0u64; states];
    let mut mask = mask_of_graph(&chain.graph);
    for _ in 0..steps {
        let (i, j, on) = chain.step();
        let bit = 1u64 << pair_index(n, i, j);
        mask = if on { mask | bit } else { mask & !bit };
        hist[mask as usize] += 1;
    }
    Ok(hist.into_iter().map(|c| c as f64 / steps as f64).collect())
}

/// Sampler experiment configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: f64,
    pub sweeps: u64,
    #[serde(default)]
    pub burn_in: u64,
    /// Record every `thin` sweeps after burn-in.
    #[serde(default = "one")]
    pub thin: u64,
    #[serde(default = "one_usize")]
    pub chains: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub detect: bool,
    #[serde(default = "half")]
    pub delta_hub: f64,
}

fn one() -> u64 {
    1
}

fn one_usize() -> usize {
    1
}

fn half() -> f64 {
    0.5
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Validation(format!("p = {} is not in (0,1)", self.p)));
        }
        if self.sweeps == 0 {
            return Err(Error::Validation("sweeps must be positive".into()));
        }
        if self.thin == 0 || self.chains == 0 || self.n < 2 {
            return Err(Error::Validation(
                "thin, chains must be positive and n >= 2".into(),
            ));
        }
        if self.burn_in >= self.sweeps {
            return Err(Error::Validation(
                "burn-in must be shorter than the run".into(),
            ));
        }
        Ok(())
    }
}

/// One recorded sample.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub chain: usize,
    pub sweep: u64,
    pub edges: usize,
    pub densities: Vec<f64>,
    pub structure: Option<StructureReport>,
}

/// Predicted sizes for one `(a*, b*) in Opt(psi)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PredictedSizes {
    pub a: f64,
    pub b: f64,
    pub clique_size: usize,
    pub hub_size: usize,
}

/// Experiment output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rate: f64,
    pub rows: Vec<TrajectoryRow>,
    /// Time-averaged edge density over recorded rows and its standard error
    /// (treating rows as independent).
    pub edge_density: f64,
    pub edge_density_se: f64,
    pub predicted: Vec<PredictedSizes>,
    /// Detected `(|I|, |J|)` of the last row per chain with the index of the
    /// nearest predicted optimizer.
    pub comparisons: Vec<(usize, usize, usize, Option<usize>)>,
    pub warnings: Vec<String>,
    /// Last state of each chain.
    #[serde(skip)]
    pub final_graphs: Vec<BitGraph>,
}

/// Run independent chains and collect trajectories and structure reports.
pub fn run_experiment(
    config: &ExperimentConfig,
    spec: &HamiltonianSpec,
) -> Result<ExperimentReport> {
    config.validate()?;
    let model = ErgmModel::new(config.n, config.p, spec.clone())?;
    let delta = spec.validate()?.max_degree;
    let mut warnings = Vec::new();
    let predicted: Vec<PredictedSizes> = if spec.is_zero() {
        vec![PredictedSizes {
            a: 0.0,
            b: 0.0,
            clique_size: 0,
            hub_size: 0,
        }]
    } else {
        let psi = psi_solve(spec)?;
        warnings.extend(psi.warnings.iter().cloned());
        psi.optimizers
            .iter()
            .map(|o| {
                let (i, j) = CliqueHub::sizes(config.n, config.p, delta, o.a, o.b);
                PredictedSizes {
                    a: o.a,
                    b: o.b,
                    clique_size: i,
                    hub_size: j,
                }
            })
            .collect()
    };
    if predicted.len() > 1 {
        warnings.push(format!(
            "Opt(psi) has {} points; comparing against the nearest",
            predicted.len()
        ));
    }
    let opts = DetectOptions {
        delta_hub: config.delta_hub,
        ..DetectOptions::default()
    };
    let per_chain: Vec<(Vec<TrajectoryRow>, BitGraph)> = (0..config.chains)
        .into_par_iter()
        .map(|c| -> Result<(Vec<TrajectoryRow>, BitGraph)> {
            let mut chain = ErgmChain::new(model.clone(), config.seed, c as u64)?;
            let mut rows = Vec::new();
            for sweep in 1..=config.sweeps {
                chain.sweep();
                if sweep > config.burn_in && (sweep - config.burn_in).is_multiple_of(config.thin) {
                    let structure = if config.detect {
                        Some(detect_structure(chain.graph(), config.p, delta, &opts)?)
                    } else {
                        None
                    };
                    rows.push(TrajectoryRow {
                        chain: c,
                        sweep,
                        edges: chain.graph().edge_count(),
                        densities: chain.densities(),
                        structure,
                    });
                }
            }
            Ok((rows, chain.graph().clone()))
        })
        .collect::<Result<_>>()?;
    let (per_chain, final_graphs): (Vec<_>, Vec<_>) = per_chain.into_iter().unzip();
    let mut comparisons = Vec::new();
    for rows in &per_chain {
        if let Some(s) = rows.last().and_then(|r| r.structure.as_ref()) {
            let (i, j) = (s.clique.len(), s.hub.len());
            let nearest = predicted
                .iter()
                .enumerate()
                .min_by_key(|(_, q)| q.clique_size.abs_diff(i) + q.hub_size.abs_diff(j))
                .map(|(k, _)| k);
            comparisons.push((rows[0].chain, i, j, nearest));
        }
    }
    let rows: Vec<TrajectoryRow> = per_chain.into_iter().flatten().collect();
    let npairs = (config.n * (config.n - 1) / 2) as f64;
    let dens: Vec<f64> = rows.iter().map(|r| r.edges as f64 / npairs).collect();
    let k = dens.len() as f64;
    let mean = dens.iter().sum::<f64>() / k;
    let var = if k > 1.0 {
        dens.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    Ok(ExperimentReport {
        rate: model.rate,
        rows,
        edge_density: mean,
        edge_density_se: (var / k).sqrt(),
        predicted,
        comparisons,
        warnings,
        final_graphs,
    })
}
