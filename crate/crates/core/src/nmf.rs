//! Naive mean-field problems at finite `n`.
//!
//! * NMF: `sup_Q r h(t(F, Q/p)) - I_p(Q)` over symmetric `[0,1]` tables.
//! * Upper tail: `Phi_{n,p}(s) = inf { I_p(Q) : t(F_k, Q/p) >= 1 + s_k }`.
//!
//! Both are non-convex; solvers return certified bounds (a feasible `Q` and its
//! value) from multi-start projected gradient methods, always including the
//! clique-hub tables `Q^{I,J}` suggested by the planar problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{psi_solve, HamiltonianSpec};
use crate::hom::{hom_density, hom_density_block, hom_density_gradient};
use crate::motif::{rate, Motif, MotifFamily};
use crate::planar::{PlanarPoint, PlanarProblem};
use crate::weights::{BlockTable, WeightTable};

/// Box clip for the decision variables.
pub const CLIP: f64 = 1e-9;
/// Largest `n` handled with dense storage.
pub const MAX_N: usize = 256;

/// `I_p(q) = q log(q/p) + (1-q) log((1-q)/(1-p))` with `0 log 0 = 0`.
pub fn bernoulli_entropy(q: f64, p: f64) -> f64 {
    let term = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * (x / y).ln() };
    term(q, p) + term(1.0 - q, 1.0 - p)
}

/// `I_p'(q) = log(q (1-p) / (p (1-q)))`.
pub fn bernoulli_entropy_derivative(q: f64, p: f64) -> f64 {
    (q * (1.0 - p) / (p * (1.0 - q))).ln()
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("p = {p} is not in (0,1)")))
    }
}

/// `I_p(Q) = sum_{i<j} I_p(Q_ij)`.
pub fn entropy(q: &WeightTable, p: f64) -> Result<f64> {
    check_p(p)?;
    let n = q.n();
    let mut total = crate::numeric::CompensatedSum::new();
    for i in 0..n {
        for j in i + 1..n {
            total.add(bernoulli_entropy(q.get(i, j), p));
        }
    }
    Ok(total.value())
}

/// The clique-hub table `Q^{I,J}`: 1 on `I x I` and on `J x J^c`, `p` elsewhere.
///
/// `I` is the first `clique_size` vertices and `J` the next `hub_size`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueHub {
    pub n: usize,
    pub clique_size: usize,
    pub hub_size: usize,
}

impl CliqueHub {
    pub fn new(n: usize, clique_size: usize, hub_size: usize) -> Result<Self> {
        if clique_size + hub_size > n {
            return Err(Error::Domain(format!(
                "clique {clique_size} + hub {hub_size} exceeds n = {n}"
            )));
        }
        Ok(Self {
            n,
            clique_size,
            hub_size,
        })
    }

    /// Sizes `floor((a p^Delta)^{1/2} n)` and `floor(b p^Delta n)`, with a
    /// `1e-9` slack so round-off in `a`, `b` does not drop a vertex.
    pub fn sizes(n: usize, p: f64, delta: usize, a: f64, b: f64) -> (usize, usize) {
        let pd = p.powi(delta as i32);
        let nf = n as f64;
        let fl = |x: f64| (x + 1e-9).floor() as usize;
        (fl((a * pd).sqrt() * nf), fl(b * pd * nf))
    }

    pub fn from_ab(n: usize, p: f64, delta: usize, a: f64, b: f64) -> Result<Self> {
        check_p(p)?;
        if !(a >= 0.0 && b >= 0.0) {
            return Err(Error::Domain("a and b must be nonnegative".into()));
        }
        let (i, j) = Self::sizes(n, p, delta, a, b);
        Self::new(n, i, j)
    }

    pub fn clique(&self) -> std::ops::Range<usize> {
        0..self.clique_size
    }

    pub fn hub(&self) -> std::ops::Range<usize> {
        self.clique_size..self.clique_size + self.hub_size
    }

    /// Number of pairs `i < j` carrying weight 1.
    pub fn ones(&self) -> usize {
        let i = self.clique_size;
        let j = self.hub_size;
        i * i.saturating_sub(1) / 2 + j * (self.n - j)
    }

    /// `I_p(Q^{I,J}) = ones * log(1/p)`.
    pub fn entropy(&self, p: f64) -> f64 {
        self.ones() as f64 * (1.0 / p).ln()
    }

    /// Block form with blocks `I`, `J`, rest.
    pub fn blocks(&self, p: f64) -> BlockTable {
        let rest = self.n - self.clique_size - self.hub_size;
        BlockTable::new(
            vec![self.clique_size, self.hub_size, rest],
            vec![vec![1.0, 1.0, p], vec![1.0, p, 1.0], vec![p, 1.0, p]],
        )
        .expect("symmetric 3x3 blocks")
    }

    pub fn table(&self, p: f64) -> WeightTable {
        self.blocks(p).to_table()
    }

    /// `t(F, Q^{I,J}/p)`, exact.
    pub fn density(&self, motif: &Motif, p: f64) -> Result<f64> {
        hom_density_block(motif, &self.blocks(p), p)
    }
}

/// Result of a projected gradient run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RestartReport {
    pub label: String,
    pub start_value: f64,
    pub value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Options shared by the NMF and upper-tail solvers.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub random_starts: usize,
    pub seed: u64,
    /// Relative projected-gradient tolerance.
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            random_starts: 3,
            seed: 0,
            tol: 1e-8,
        }
    }
}

/// Clip every off-diagonal entry into `[CLIP, 1 - CLIP]`.
pub fn project(q: &WeightTable) -> WeightTable {
    WeightTable::from_fn(q.n(), |i, j| q.get(i, j).clamp(CLIP, 1.0 - CLIP))
}

/// `project(Q + step * grad)` for a dense symmetric gradient.
pub fn projected_step(q: &WeightTable, grad: &[f64], step: f64) -> WeightTable {
    let n = q.n();
    WeightTable::from_fn(n, |i, j| {
        (q.get(i, j) + step * grad[i * n + j]).clamp(CLIP, 1.0 - CLIP)
    })
}

fn pair_dot(n: usize, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += x[i * n + j] * y[i * n + j];
        }
    }
    s
}

fn diff(a: &WeightTable, b: &WeightTable) -> Vec<f64> {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x - y)
        .collect()
}

/// Projected gradient ascent with Barzilai-Borwein steps and backtracking.
fn ascend(
    eval: &(dyn Fn(&WeightTable) -> Result<(f64, Vec<f64>)> + Sync),
    start: &WeightTable,
    label: String,
    opts: &SolverOptions,
) -> Result<(WeightTable, RestartReport)> {
    let n = start.n();
    let mut q = project(start);
    let (mut value, mut grad) = eval(&q)?;
    let start_value = value;
    let mut step = 1.0 / pair_dot(n, &grad, &grad).sqrt().max(1.0);
    let mut prev: Option<(WeightTable, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut grad_norm = f64::INFINITY;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let probe = projected_step(&q, &grad, 1.0);
        let pd = diff(&probe, &q);
        grad_norm = pair_dot(n, &pd, &pd).sqrt();
        if grad_norm <= opts.tol * (1.0 + value.abs()) {
            converged = true;
            break;
        }
        if let Some((pq, pg)) = &prev {
            let s = diff(&q, pq);
            let y: Vec<f64> = pg.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let sy = pair_dot(n, &s, &y);
            let ss = pair_dot(n, &s, &s);
            if sy > 0.0 && ss > 0.0 {
                step = (ss / sy).clamp(1e-12, 1e6);
            }
        }
        let mut accepted = None;
        let mut trial = step;
        for _ in 0..50 {
            let cand = projected_step(&q, &grad, trial);
            let d = diff(&cand, &q);
            let (v, g) = eval(&cand)?;
            if v >= value + 1e-4 * pair_dot(n, &grad, &d) && v.is_finite() {
                accepted = Some((cand, v, g));
                break;
            }
            trial *= 0.5;
        }
        let Some((cand, v, g)) = accepted else {
            converged = true;
            break;
        };
        let gain = v - value;
        prev = Some((
            std::mem::replace(&mut q, cand),
            std::mem::replace(&mut grad, g),
        ));
        value = v;
        step = trial;
        if gain.abs() <= 1e-15 * (1.0 + value.abs()) {
            converged = true;
            break;
        }
    }
    Ok((
        q,
        RestartReport {
            label,
            start_value,
            value,
            iterations,
            grad_norm,
            converged,
        },
    ))
}

/// Diagnostics shared by both solvers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub restarts: Vec<RestartReport>,
    /// Best clique-hub witness value and its sizes.
    pub witness_value: f64,
    pub witness: CliqueHub,
    pub warnings: Vec<String>,
}

/// Result of [`nmf_solve`].
#[derive(Clone, Debug)]
pub struct NmfSolution {
    pub value: f64,
    pub q: WeightTable,
    pub diagnostics: SolveDiagnostics,
}

/// NMF problem data.
#[derive(Clone, Debug)]
pub struct NmfProblem {
    pub n: usize,
    pub p: f64,
    pub spec: HamiltonianSpec,
    pub rate: f64,
    delta: usize,
}

impl NmfProblem {
    pub fn new(n: usize, p: f64, spec: HamiltonianSpec) -> Result<Self> {
        check_p(p)?;
        if !(2..=MAX_N).contains(&n) {
            return Err(Error::Capability(format!(
                "dense mean-field storage supports 2 <= n <= {MAX_N}, got {n}"
            )));
        }
        let report = spec.validate()?;
        let delta = report.max_degree;
        Ok(Self {
            n,
            p,
            rate: rate(n, p, delta)?,
            spec,
            delta,
        })
    }

    pub fn max_degree(&self) -> usize {
        self.delta
    }

    pub fn densities(&self, q: &WeightTable) -> Result<Vec<f64>> {
        self.spec
            .family()
            .iter()
            .map(|m| hom_density(m, q, self.p))
            .collect()
    }

    /// `r h(t(F, Q/p)) - I_p(Q)`.
    pub fn objective(&self, q: &WeightTable) -> Result<f64> {
        Ok(self.rate * self.spec.h(&self.densities(q)?) - entropy(q, self.p)?)
    }

    /// Value and dense gradient in the symmetric variables.
    pub fn objective_and_gradient(&self, q: &WeightTable) -> Result<(f64, Vec<f64>)> {
        let n = self.n;
        let t = self.densities(q)?;
        let dh = self.spec.h_gradient(&t);
        let mut grad = vec![0.0; n * n];
        for (k, m) in self.spec.family().iter().enumerate() {
            if dh[k] == 0.0 {
                continue;
            }
            let gt = hom_density_gradient(m, q, self.p)?;
            for (g, x) in grad.iter_mut().zip(&gt) {
                *g += self.rate * dh[k] * x;
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    grad[i * n + j] -= bernoulli_entropy_derivative(q.get(i, j), self.p);
                }
            }
        }
        let value = self.rate * self.spec.h(&t) - entropy(q, self.p)?;
        Ok((value, grad))
    }

    fn witness_value(&self, w: &CliqueHub) -> Result<f64> {
        let t: Vec<f64> = self
            .spec
            .family()
            .iter()
            .map(|m| w.density(m, self.p))
            .collect::<Result<_>>()?;
        Ok(self.rate * self.spec.h(&t) - w.entropy(self.p))
    }
}

fn random_start(n: usize, p: f64, rng: &mut ChaCha8Rng) -> WeightTable {
    let top = (3.0 * p).min(1.0);
    WeightTable::from_fn(n, |_, _| rng.gen_range(0.0..top))
}

fn perturbed_sizes(n: usize, w: (usize, usize)) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for fi in [0.8, 1.0, 1.2] {
        for fj in [0.8, 1.0, 1.2] {
            let i = ((w.0 as f64 * fi).round() as usize).min(n);
            let j = ((w.1 as f64 * fj).round() as usize).min(n - i);
            if !out.contains(&(i, j)) {
                out.push((i, j));
            }
        }
    }
    out
}

/// NMF supremum with multi-start projected gradient ascent.
pub fn nmf_solve(prob: &NmfProblem, opts: &SolverOptions) -> Result<NmfSolution> {
    let (n, p) = (prob.n, prob.p);
    let mut warnings = Vec::new();
    // Exhaustive scan of clique-hub witnesses (values depend only on sizes).
    let mut best_w = CliqueHub::new(n, 0, 0)?;
    let mut best_wv = prob.witness_value(&best_w)?;
    for j in 0..=n {
        for i in 0..=n - j {
            let w = CliqueHub::new(n, i, j)?;
            let v = prob.witness_value(&w)?;
            if v > best_wv {
                best_wv = v;
                best_w = w;
            }
        }
    }
    let mut starts: Vec<(String, WeightTable)> =
        vec![("constant p".into(), WeightTable::constant(n, p))];
    if !prob.spec.is_zero() {
        let psi = psi_solve(&prob.spec)?;
        for o in &psi.optimizers {
            let base = CliqueHub::sizes(n, p, prob.delta, o.a, o.b);
            let base = (base.0.min(n), base.1.min(n - base.0.min(n)));
            for (i, j) in perturbed_sizes(n, base) {
                let w = CliqueHub::new(n, i, j)?;
                starts.push((format!("clique-hub {i},{j}"), w.table(p)));
            }
        }
    }
    starts.push((
        format!("best witness {},{}", best_w.clique_size, best_w.hub_size),
        best_w.table(p),
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for r in 0..opts.random_starts {
        starts.push((format!("random {r}"), random_start(n, p, &mut rng)));
    }
    let eval = |q: &WeightTable| prob.objective_and_gradient(q);
    let runs: Vec<(WeightTable, RestartReport)> = starts
        .par_iter()
        .map(|(label, q)| ascend(&eval, q, label.clone(), opts))
        .collect::<Result<_>>()?;
    let (mut q, mut value) = (
        WeightTable::constant(n, p),
        prob.objective(&WeightTable::constant(n, p))?,
    );
    for (rq, rep) in &runs {
        if rep.value > value {
            value = rep.value;
            q = rq.clone();
        }
        if !rep.converged {
            warnings.push(format!("restart `{}` hit the iteration cap", rep.label));
        }
    }
    if best_wv > value {
        value = best_wv;
        q = best_w.table(p);
    }
    Ok(NmfSolution {
        value,
        q,
        diagnostics: SolveDiagnostics {
            restarts: runs.into_iter().map(|(_, r)| r).collect(),
            witness_value: best_wv,
            witness: best_w,
            warnings,
        },
    })
}

/// Result of [`phi_np_solve`].
#[derive(Clone, Debug)]
pub struct PhiNpSolution {
    pub value: f64,
    pub q: WeightTable,
    /// `t(F_k, Q/p) - (1 + s_k)` (nonnegative when feasible).
    pub residuals: Vec<f64>,
    /// `r_{n,p}`, for reporting `value / rate` against `phi(s)`.
    pub rate: f64,
    pub diagnostics: SolveDiagnostics,
}

/// Upper-tail problem data.
#[derive(Clone, Debug)]
pub struct PhiNpProblem {
    pub n: usize,
    pub p: f64,
    pub family: Vec<Motif>,
    pub rate: f64,
    delta: usize,
}

impl PhiNpProblem {
    pub fn new(n: usize, p: f64, family: Vec<Motif>) -> Result<Self> {
        check_p(p)?;
        if !(2..=MAX_N).contains(&n) {
            return Err(Error::Capability(format!(
                "dense mean-field storage supports 2 <= n <= {MAX_N}, got {n}"
            )));
        }
        let delta = MotifFamily::new(family.clone(), false)?.max_degree();
        Ok(Self {
            n,
            p,
            rate: rate(n, p, delta)?,
            family,
            delta,
        })
    }

    pub fn max_degree(&self) -> usize {
        self.delta
    }

    pub fn densities(&self, q: &WeightTable) -> Result<Vec<f64>> {
        self.family
            .iter()
            .map(|m| hom_density(m, q, self.p))
            .collect()
    }

    fn witness_feasible(&self, w: &CliqueHub, s: &[f64]) -> Result<bool> {
        for (m, &sk) in self.family.iter().zip(s) {
            if w.density(m, self.p)? < 1.0 + sk {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Cheapest feasible clique-hub witness: for each hub size, the smallest
    /// feasible clique size (feasibility is monotone in it).
    pub fn best_witness(&self, s: &[f64]) -> Result<Option<CliqueHub>> {
        let n = self.n;
        let mut best: Option<CliqueHub> = None;
        for j in 0..=n {
            let top = CliqueHub::new(n, n - j, j)?;
            if !self.witness_feasible(&top, s)? {
                continue;
            }
            let (mut lo, mut hi) = (0usize, n - j);
            if self.witness_feasible(&CliqueHub::new(n, 0, j)?, s)? {
                hi = 0;
            } else {
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if self.witness_feasible(&CliqueHub::new(n, mid, j)?, s)? {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
            }
            let w = CliqueHub::new(n, hi, j)?;
            if best.is_none_or(|b| w.ones() < b.ones()) {
                best = Some(w);
            }
        }
        Ok(best)
    }

    fn feasible(&self, q: &WeightTable, s: &[f64]) -> Result<bool> {
        Ok(self
            .densities(q)?
            .iter()
            .zip(s)
            .all(|(t, sk)| *t >= 1.0 + sk))
    }

    /// Make `q` feasible: raise entries below `p`, then inflate towards 1
    /// (`Q = min(1, p + lambda (Q - p))`), then mix with the all-ones table.
    fn repair(&self, q: &WeightTable, s: &[f64]) -> Result<WeightTable> {
        let p = self.p;
        let n = self.n;
        let raised = WeightTable::from_fn(n, |i, j| q.get(i, j).max(p));
        if self.feasible(&raised, s)? {
            return Ok(raised);
        }
        let inflate = |lambda: f64| {
            WeightTable::from_fn(n, |i, j| (p + lambda * (raised.get(i, j) - p)).min(1.0))
        };
        let mut hi = 2.0;
        while !self.feasible(&inflate(hi), s)? && hi < 1e12 {
            hi *= 2.0;
        }
        if self.feasible(&inflate(hi), s)? {
            let mut lo = 1.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if self.feasible(&inflate(mid), s)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(inflate(hi));
        }
        let base = inflate(hi);
        let mix = |mu: f64| WeightTable::from_fn(n, |i, j| (1.0 - mu) * base.get(i, j) + mu);
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.feasible(&mix(mid), s)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(mix(hi))
    }
}

/// `Phi_{n,p}(s)` by a quadratic penalty method with feasibility repair,
/// never worse than the best clique-hub witness.
pub fn phi_np_solve(prob: &PhiNpProblem, s: &[f64], opts: &SolverOptions) -> Result<PhiNpSolution> {
    let (n, p) = (prob.n, prob.p);
    if s.len() != prob.family.len() || s.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Domain(
            "s must have one nonnegative entry per motif".into(),
        ));
    }
    let constant = WeightTable::constant(n, p);
    if s.iter().all(|&x| x == 0.0) {
        return Ok(PhiNpSolution {
            value: 0.0,
            residuals: prob.densities(&constant)?.iter().map(|t| t - 1.0).collect(),
            q: constant,
            rate: prob.rate,
            diagnostics: SolveDiagnostics {
                restarts: Vec::new(),
                witness_value: 0.0,
                witness: CliqueHub::new(n, 0, 0)?,
                warnings: Vec::new(),
            },
        });
    }
    let mut warnings: Vec<String> = Vec::new();
    let witness = prob.best_witness(s)?;
    let witness = match witness {
        Some(w) => w,
        None => {
            warnings.push(
                "no clique-hub table is feasible; the constraints need non-clique-hub structure"
                    .into(),
            );
            CliqueHub::new(n, n, 0)?
        }
    };
    let witness_value = witness.entropy(p);

    let mut starts: Vec<(String, WeightTable)> = vec![(
        format!("witness {},{}", witness.clique_size, witness.hub_size),
        witness.table(p),
    )];
    let planar = PlanarProblem::new(&prob.family)?.solve(s)?;
    for o in &planar.optimizers {
        let (i, j) = CliqueHub::sizes(n, p, prob.delta, o.a, o.b);
        let i = i.min(n);
        let w = CliqueHub::new(n, i, j.min(n - i))?;
        starts.push((
            format!("planar {},{}", w.clique_size, w.hub_size),
            w.table(p),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for r in 0..opts.random_starts {
        starts.push((format!("random {r}"), random_start(n, p, &mut rng)));
    }

    let mut mu = prob.rate.max(1.0);
    let mut reports = Vec::new();
    let mut current = starts;
    for _round in 0..8 {
        let eval = |q: &WeightTable| -> Result<(f64, Vec<f64>)> {
            let t = prob.densities(q)?;
            let mut value = -entropy(q, p)?;
            let mut grad = vec![0.0; n * n];
            for (k, m) in prob.family.iter().enumerate() {
                let short = 1.0 + s[k] - t[k];
                if short > 0.0 {
                    value -= mu * short * short;
                    let gt = hom_density_gradient(m, q, p)?;
                    for (g, x) in grad.iter_mut().zip(&gt) {
                        *g += 2.0 * mu * short * x;
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        grad[i * n + j] -= bernoulli_entropy_derivative(q.get(i, j), p);
                    }
                }
            }
            Ok((value, grad))
        };
        let runs: Vec<(WeightTable, RestartReport)> = current
            .par_iter()
            .map(|(label, q)| ascend(&eval, q, label.clone(), opts))
            .collect::<Result<_>>()?;
        current = runs
            .iter()
            .map(|(q, r)| (r.label.clone(), q.clone()))
            .collect();
        reports.extend(runs.into_iter().map(|(_, r)| r));
        mu *= 10.0;
    }

    let mut best_q = witness.table(p);
    let mut best = witness_value;
    for (label, q) in &current {
        let repaired = prob.repair(q, s)?;
        let e = entropy(&repaired, p)?;
        if e < best {
            best = e;
            best_q = repaired;
            warnings.retain(|w| !w.starts_with("best from"));
            warnings.push(format!("best from penalty run `{label}`"));
        }
    }
    let residuals: Vec<f64> = prob
        .densities(&best_q)?
        .iter()
        .zip(s)
        .map(|(t, sk)| t - (1.0 + sk))
        .collect();
    if residuals.iter().any(|&r| r < -1e-6) {
        return Err(Error::Internal(
            "upper-tail certificate is infeasible".into(),
        ));
    }
    Ok(PhiNpSolution {
        value: best,
        q: best_q,
        residuals,
        rate: prob.rate,
        diagnostics: SolveDiagnostics {
            restarts: reports,
            witness_value,
            witness,
            warnings,
        },
    })
}

/// Solve along a chain of `s` vectors; each value is the best certificate
/// among all solves whose `s` dominates it coordinatewise (a table feasible
/// for a larger `s` is feasible for a smaller one).
pub fn phi_np_chain(
    prob: &PhiNpProblem,
    chain: &[Vec<f64>],
    opts: &SolverOptions,
) -> Result<Vec<PhiNpSolution>> {
    let mut sols: Vec<PhiNpSolution> = chain
        .iter()
        .map(|s| phi_np_solve(prob, s, opts))
        .collect::<Result<_>>()?;
    for i in 0..chain.len() {
        for j in 0..chain.len() {
            let dominates = chain[j].iter().zip(&chain[i]).all(|(a, b)| a >= b);
            if i != j && dominates && sols[j].value < sols[i].value {
                let q = sols[j].q.clone();
                let residuals = prob
                    .densities(&q)?
                    .iter()
                    .zip(&chain[i])
                    .map(|(t, sk)| t - (1.0 + sk))
                    .collect();
                sols[i] = PhiNpSolution {
                    value: sols[j].value,
                    q,
                    residuals,
                    ..sols[i].clone()
                };
            }
        }
    }
    Ok(sols)
}

/// Distance from `Q` to aligned clique-hub tables at the planar optimizers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `min ||Q - Q^{I,J}||_HS / (n p^{Delta/2})` over optimizers.
    pub distance: f64,
    /// Per optimizer: the point, its floor sizes and the aligned distance.
    pub per_optimizer: Vec<(PlanarPoint, CliqueHub, f64)>,
    /// Sizes read off `Q` by thresholding rows at the midpoint `(1 + p)/2`.
    pub detected: CliqueHub,
}

/// Compare `Q` with clique-hub tables placed on its heaviest rows.
pub fn stability_probe(
    q: &WeightTable,
    p: f64,
    family: &[Motif],
    s: &[f64],
) -> Result<StabilityReport> {
    check_p(p)?;
    let n = q.n();
    let delta = MotifFamily::new(family.to_vec(), false)?.max_degree();
    let sol = PlanarProblem::new(family)?.solve(s)?;
    let norm = n as f64 * p.powf(delta as f64 / 2.0);
    let row_mass = q.row_sums();
    let mut by_mass: Vec<usize> = (0..n).collect();
    by_mass.sort_by(|&a, &b| row_mass[b].total_cmp(&row_mass[a]).then(a.cmp(&b)));
    let mut per = Vec::new();
    for o in &sol.optimizers {
        let (i_size, j_size) = CliqueHub::sizes(n, p, delta, o.a, o.b);
        let j_size = j_size.min(n);
        let i_size = i_size.min(n - j_size);
        let hub: Vec<usize> = by_mass[..j_size].to_vec();
        let mut in_hub = vec![false; n];
        for &v in &hub {
            in_hub[v] = true;
        }
        let within: Vec<f64> = (0..n)
            .map(|v| (0..n).filter(|&u| !in_hub[u]).map(|u| q.get(v, u)).sum())
            .collect();
        let mut rest: Vec<usize> = (0..n).filter(|&v| !in_hub[v]).collect();
        rest.sort_by(|&a, &b| within[b].total_cmp(&within[a]).then(a.cmp(&b)));
        let mut in_clique = vec![false; n];
        for &v in &rest[..i_size] {
            in_clique[v] = true;
        }
        let target = WeightTable::from_fn(n, |a, b| {
            if (in_clique[a] && in_clique[b]) || in_hub[a] != in_hub[b] {
                1.0
            } else {
                p
            }
        });
        per.push((
            *o,
            CliqueHub::new(n, i_size, j_size)?,
            q.hs_distance(&target) / norm,
        ));
    }
    let mid = 0.5 * (1.0 + p);
    let hub_rows: Vec<bool> = (0..n)
        .map(|v| row_mass[v] / (n - 1) as f64 >= mid)
        .collect();
    let hub_count = hub_rows.iter().filter(|&&h| h).count();
    let clique_count = (0..n)
        .filter(|&v| !hub_rows[v])
        .filter(|&v| {
            (0..n)
                .filter(|&u| u != v && !hub_rows[u] && q.get(v, u) >= mid)
                .count()
                > 0
        })
        .count();
    let distance = per.iter().map(|x| x.2).fold(f64::INFINITY, f64::min);
    Ok(StabilityReport {
        distance,
        per_optimizer: per,
        detected: CliqueHub::new(n, clique_count, hub_count)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&WeightTable::constant(6, 0.3), 0.3).unwrap(), 0.0);
        let one = WeightTable::from_fn(2, |_, _| 1.0);
        assert!((entropy(&one, 0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
        let expect = 0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln();
        assert!((bernoulli_entropy(0.25, 0.5) - expect).abs() < 1e-15);
        assert!((expect - 0.130812).abs() < 1e-6);
    }

    #[test]
    fn clique_hub_sizes_and_entropy() {
        let w = CliqueHub::from_ab(100, 0.1, 2, 4.0, 0.0).unwrap();
        assert_eq!(w.clique_size, 20);
        assert_eq!(w.hub_size, 0);
        let zero = CliqueHub::from_ab(50, 0.2, 2, 0.0, 0.0).unwrap();
        assert_eq!(zero.table(0.2), WeightTable::constant(50, 0.2));
        assert_eq!(zero.entropy(0.2), 0.0);
        let w = CliqueHub::new(12, 3, 2).unwrap();
        let direct = entropy(&w.table(0.3), 0.3).unwrap();
        assert!((w.entropy(0.3) - direct).abs() < 1e-12);
        assert!(CliqueHub::new(10, 6, 5).is_err());
    }

    #[test]
    fn witness_density_matches_dense() {
        let w = CliqueHub::new(14, 4, 2).unwrap();
        for m in [
            Motif::cycle(3).unwrap(),
            Motif::cycle(4).unwrap(),
            Motif::builtin("K12").unwrap(),
        ] {
            let a = w.density(&m, 0.2).unwrap();
            let b = hom_density(&m, &w.table(0.2), 0.2).unwrap();
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn zero_tilt_nmf() {
        let spec = HamiltonianSpec::zero(vec![Motif::cycle(3).unwrap()]);
        let prob = NmfProblem::new(16, 0.2, spec).unwrap();
        let sol = nmf_solve(&prob, &SolverOptions::default()).unwrap();
        assert!(sol.value.abs() < 1e-9);
    }

    #[test]
    fn zero_step_keeps_value() {
        let prob = NmfProblem::new(10, 0.2, HamiltonianSpec::edge_triangle(1.0, 2.0)).unwrap();
        let q = WeightTable::constant(10, 0.2);
        let (v, g) = prob.objective_and_gradient(&q).unwrap();
        let q2 = projected_step(&q, &g, 0.0);
        assert!((prob.objective(&q2).unwrap() - v).abs() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent() {
        let q = WeightTable::from_fn(6, |i, j| if (i + j) % 2 == 0 { 0.0 } else { 1.0 });
        let once = project(&q);
        assert_eq!(project(&once), once);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let prob = NmfProblem::new(7, 0.3, HamiltonianSpec::edge_triangle(1.0, 1.5)).unwrap();
        let q = WeightTable::from_fn(7, |i, j| 0.2 + 0.1 * ((i * 3 + j * 5) % 7) as f64);
        let (_, g) = prob.objective_and_gradient(&q).unwrap();
        for &(i, j) in &[(0, 1), (2, 5), (6, 3)] {
            let h = 1e-6;
            let mut up = q.clone();
            up.set(i, j, q.get(i, j) + h);
            let mut dn = q.clone();
            dn.set(i, j, q.get(i, j) - h);
            let fd = (prob.objective(&up).unwrap() - prob.objective(&dn).unwrap()) / (2.0 * h);
            assert!(
                (g[i * 7 + j] - fd).abs() <= 1e-4 * fd.abs().max(1.0),
                "{fd} vs {}",
                g[i * 7 + j]
            );
        }
    }

    #[test]
    fn phi_zero_s() {
        let prob = PhiNpProblem::new(16, 0.2, vec![Motif::cycle(3).unwrap()]).unwrap();
        let sol = phi_np_solve(&prob, &[0.0], &SolverOptions::default()).unwrap();
        assert_eq!(sol.value, 0.0);
    }

    #[test]
    fn stability_of_exact_witness() {
        let fam = [Motif::cycle(3).unwrap()];
        let n = 64;
        let p = 0.25;
        // s = 8: the planar optimizer is (4, 0); |I| = floor(sqrt(4/16) 64) = 32
        let w = CliqueHub::from_ab(n, p, 2, 4.0, 0.0).unwrap();
        let rep = stability_probe(&w.table(p), p, &fam, &[8.0]).unwrap();
        assert!(rep.distance < 1e-12);
        let rep = stability_probe(&WeightTable::constant(n, p), p, &fam, &[0.0]).unwrap();
        assert!(rep.distance < 1e-12);
    }
}
