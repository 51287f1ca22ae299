//! Tilt functions `h(x) = sum_k beta_k (x_k - c_k)_+^{gamma_k}` and the planar
//! free-energy problem `psi = sup_{a,b >= 0} h(T(a,b)) - a/2 - b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motif::{Motif, MotifFamily, MotifRef};
use crate::optimize::{golden_max, NelderMead};
use crate::planar::{PlanarPoint, PlanarProblem};

/// Smallest `x - c` at which the derivative of `(x - c)_+^gamma` is evaluated.
pub const DERIVATIVE_FLOOR: f64 = 1e-12;
/// Optimizer counts above this suggest a continuum of optimizers.
pub const MAX_REPORTED_OPTIMIZERS: usize = 16;

/// One shifted-power term `beta (x_k - shift)_+^gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianTerm {
    pub k: usize,
    pub beta: f64,
    pub shift: f64,
    pub gamma: f64,
}

impl HamiltonianTerm {
    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.shift;
        if d <= 0.0 {
            0.0
        } else {
            self.beta * d.powf(self.gamma)
        }
    }

    /// Derivative in `x`, with `x - shift` clamped at [`DERIVATIVE_FLOOR`].
    pub fn derivative(&self, x: f64) -> f64 {
        let d = x - self.shift;
        if d <= 0.0 {
            0.0
        } else {
            self.beta * self.gamma * d.max(DERIVATIVE_FLOOR).powf(self.gamma - 1.0)
        }
    }
}

/// Wire form: `{"family": [...], "terms": [{k, beta, shift, gamma}], "allow_degenerate": bool}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianJson {
    pub family: Vec<MotifRef>,
    pub terms: Vec<HamiltonianTerm>,
    #[serde(default)]
    pub allow_degenerate: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_mixed_delta: bool,
}

/// Outcome of [`HamiltonianSpec::validate`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub max_degree: usize,
    pub warnings: Vec<String>,
}

/// A motif family with a tilt function `h`.
#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    family: Vec<Motif>,
    terms: Vec<HamiltonianTerm>,
    allow_degenerate: bool,
    allow_mixed_delta: bool,
}

impl HamiltonianSpec {
    pub fn new(family: Vec<Motif>, terms: Vec<HamiltonianTerm>, allow_degenerate: bool) -> Self {
        Self {
            family,
            terms,
            allow_degenerate,
            allow_mixed_delta: false,
        }
    }

    pub fn with_mixed_delta(mut self, allow: bool) -> Self {
        self.allow_mixed_delta = allow;
        self
    }

    /// `h = 0` over the given family.
    pub fn zero(family: Vec<Motif>) -> Self {
        Self::new(family, Vec::new(), false)
    }

    /// Edge-triangle model `h(x) = beta (x - 1)_+^{gamma/3}` on `C3`.
    pub fn edge_triangle(gamma: f64, beta: f64) -> Self {
        let c3 = Motif::cycle(3).expect("C3 is valid");
        Self::new(
            vec![c3],
            vec![HamiltonianTerm {
                k: 0,
                beta,
                shift: 1.0,
                gamma: gamma / 3.0,
            }],
            false,
        )
    }

    pub fn from_json(j: &HamiltonianJson) -> Result<Self> {
        let family = j
            .family
            .iter()
            .map(MotifRef::resolve)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(family, j.terms.clone(), j.allow_degenerate)
            .with_mixed_delta(j.allow_mixed_delta))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> HamiltonianJson {
        HamiltonianJson {
            family: self.family.iter().map(MotifRef::from_motif).collect(),
            terms: self.terms.clone(),
            allow_degenerate: self.allow_degenerate,
            allow_mixed_delta: self.allow_mixed_delta,
        }
    }

    pub fn family(&self) -> &[Motif] {
        &self.family
    }

    pub fn terms(&self) -> &[HamiltonianTerm] {
        &self.terms
    }

    pub fn allow_degenerate(&self) -> bool {
        self.allow_degenerate
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Check positivity of every term and the growth condition
    /// `gamma_k < Delta / e(F_k)`.
    pub fn validate(&self) -> Result<ValidationReport> {
        let fam = MotifFamily::new(self.family.clone(), self.allow_mixed_delta)?;
        let delta = fam.max_degree();
        let mut warnings = fam.warnings().to_vec();
        for (i, t) in self.terms.iter().enumerate() {
            if t.k >= self.family.len() {
                return Err(Error::Validation(format!(
                    "term {i}: motif index {} out of range",
                    t.k
                )));
            }
            if !(t.beta > 0.0 && t.beta.is_finite()) {
                return Err(Error::Validation(format!(
                    "term {i}: beta must be positive, got {}",
                    t.beta
                )));
            }
            if !(t.gamma > 0.0 && t.gamma.is_finite()) {
                return Err(Error::Validation(format!(
                    "term {i}: gamma must be positive, got {}",
                    t.gamma
                )));
            }
            if !t.shift.is_finite() {
                return Err(Error::Validation(format!("term {i}: shift must be finite")));
            }
            // Each motif's own max degree; this equals the family Delta unless
            // mixed degrees were explicitly allowed.
            let own = self.family[t.k].max_degree();
            let edges = self.family[t.k].edge_count();
            let limit = own as f64 / edges as f64;
            if t.gamma >= limit {
                let msg = format!(
                    "term {i}: exponent {} violates the growth condition gamma < Delta/e(F) = {own}/{edges}",
                    t.gamma
                );
                if !self.allow_degenerate {
                    return Err(Error::Validation(msg));
                }
                warnings.push(format!(
                    "{msg}; the model may be degenerate (samples collapse to near-empty or near-complete graphs, with a transition at beta = 0)"
                ));
            }
        }
        Ok(ValidationReport {
            max_degree: delta,
            warnings,
        })
    }

    /// `h(x)`.
    pub fn h(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x[t.k])).sum()
    }

    /// `h(1, ..., 1)`.
    pub fn h_ones(&self) -> f64 {
        self.h(&vec![1.0; self.family.len()])
    }

    /// Partial derivatives of `h`.
    pub fn h_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.family.len()];
        for t in &self.terms {
            g[t.k] += t.derivative(x[t.k]);
        }
        g
    }
}

/// Result of [`psi_solve`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsiSolution {
    /// `psi` from the direct planar maximization.
    pub value: f64,
    /// `sup_s h(1 + s) - phi(s)`.
    pub dual_value: f64,
    /// `h(1, ..., 1)`.
    pub h_ones: f64,
    /// `value - h_ones`.
    pub excess: f64,
    /// `Opt(psi)`, sorted by `a` then `b`.
    pub optimizers: Vec<PlanarPoint>,
    /// `S* = { T(a,b) - 1 : (a,b) in Opt(psi) }`.
    pub s_star: Vec<Vec<f64>>,
    /// Optimizers satisfy `a/2 + b <= box_radius`.
    pub box_radius: f64,
    pub warnings: Vec<String>,
}

impl PsiSolution {
    pub fn duality_gap(&self) -> f64 {
        (self.dual_value - self.value).abs()
    }
}

const GRID_POINTS: usize = 96;
const GRID_LOW: f64 = 1e-6;
const TOP_CELLS: usize = 10;

/// Solve `psi` directly and through the dual, and assemble `Opt(psi)`.
pub fn psi_solve(spec: &HamiltonianSpec) -> Result<PsiSolution> {
    let report = spec.validate()?;
    let problem = PlanarProblem::new(spec.family())?;
    let h1 = spec.h_ones();
    let mut warnings = report.warnings;
    if spec.is_zero() {
        return Ok(PsiSolution {
            value: 0.0,
            dual_value: 0.0,
            h_ones: 0.0,
            excess: 0.0,
            optimizers: vec![PlanarPoint::new(0.0, 0.0)],
            s_star: vec![vec![0.0; spec.family().len()]],
            box_radius: 0.0,
            warnings,
        });
    }
    let objective = |a: f64, b: f64| spec.h(&problem.t_vector(a, b)) - 0.5 * a - b;

    let rho = box_radius(spec, &problem, h1)?;
    let (a_max, b_max) = (2.0 * rho, rho);
    let axis = |top: f64| -> Vec<f64> {
        let mut v = vec![0.0];
        v.extend(
            (0..GRID_POINTS)
                .map(|i| top * GRID_LOW.powf(1.0 - i as f64 / (GRID_POINTS - 1) as f64)),
        );
        v
    };
    let a_axis = axis(a_max);
    let b_axis = axis(b_max);
    let mut cells: Vec<(f64, usize, usize)> = Vec::with_capacity(a_axis.len() * b_axis.len());
    for (i, &a) in a_axis.iter().enumerate() {
        for (j, &b) in b_axis.iter().enumerate() {
            cells.push((objective(a, b), i, j));
        }
    }
    cells.sort_by(|x, y| y.0.total_cmp(&x.0));

    let nm = NelderMead::default();
    let mut local: Vec<PlanarPoint> = cells
        .iter()
        .take(TOP_CELLS)
        .map(|&(_, i, j)| {
            let (x, _) = nm.maximize(|x| objective(x[0], x[1]), &[a_axis[i], b_axis[j]]);
            PlanarPoint::new(x[0], x[1])
        })
        .collect();
    // One-dimensional searches on both axes around the best grid point there.
    let best_on = |values: &[f64], f: &dyn Fn(f64) -> f64| -> f64 {
        let k = (0..values.len())
            .max_by(|&x, &y| f(values[x]).total_cmp(&f(values[y])))
            .unwrap();
        let lo = values[k.saturating_sub(1)];
        let hi = values[(k + 1).min(values.len() - 1)];
        golden_max(f, lo, hi, 1e-14).0
    };
    local.push(PlanarPoint::new(
        best_on(&a_axis, &|a| objective(a, 0.0)),
        0.0,
    ));
    local.push(PlanarPoint::new(
        0.0,
        best_on(&b_axis, &|b| objective(0.0, b)),
    ));
    local.push(PlanarPoint::new(0.0, 0.0));

    // Replacing (a,b) by any point of Opt(phi; s(a,b)) never lowers the objective.
    let mut polished = local.clone();
    for p in &local {
        let sol = problem.solve(&clamp_s(problem.s_vector(p.a, p.b)))?;
        polished.extend(sol.optimizers);
    }
    let value = polished
        .iter()
        .map(|p| objective(p.a, p.b))
        .fold(f64::NEG_INFINITY, f64::max);
    let tie = 1e-9 * (1.0 + value.abs());
    let leaders: Vec<PlanarPoint> = dedup(
        polished
            .into_iter()
            .filter(|p| objective(p.a, p.b) >= value - tie)
            .collect(),
    );

    let mut s_star: Vec<Vec<f64>> = Vec::new();
    let mut optimizers: Vec<PlanarPoint> = Vec::new();
    for p in &leaders {
        let s = clamp_s(problem.s_vector(p.a, p.b));
        for q in problem.solve(&s)?.optimizers {
            if objective(q.a, q.b) >= value - tie {
                optimizers.push(q);
            }
        }
    }
    let mut optimizers = dedup(optimizers);
    if optimizers.is_empty() {
        optimizers = leaders;
    }
    optimizers.sort_by(|x, y| x.a.total_cmp(&y.a).then(x.b.total_cmp(&y.b)));
    for p in &optimizers {
        let s = clamp_s(problem.s_vector(p.a, p.b));
        if !s_star.iter().any(|t| {
            t.iter()
                .zip(&s)
                .all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs()))
        }) {
            s_star.push(s);
        }
    }
    if optimizers.len() > MAX_REPORTED_OPTIMIZERS {
        warnings.push(format!(
            "{} optimizers found; the optimizer set may be a continuum",
            optimizers.len()
        ));
    }

    let dual_value = dual_sup(spec, &problem, &s_star)?;
    Ok(PsiSolution {
        value,
        dual_value,
        h_ones: h1,
        excess: value - h1,
        optimizers,
        s_star,
        box_radius: rho,
        warnings,
    })
}

fn clamp_s(mut s: Vec<f64>) -> Vec<f64> {
    for x in &mut s {
        *x = x.max(0.0);
    }
    s
}

fn dedup(points: Vec<PlanarPoint>) -> Vec<PlanarPoint> {
    let mut out: Vec<PlanarPoint> = Vec::new();
    for p in points {
        if out
            .iter()
            .all(|q| q.distance(&p) > 1e-6 * (1.0 + p.a.abs() + p.b.abs()))
        {
            out.push(p);
        }
    }
    out
}

/// Smallest dyadic `rho` beyond which the objective provably stays below `h(1)`:
/// for `a/2 + b = r`, `T(a,b) <= T(2r, r)`, so `h(T(2r,r)) - r < h(1)` bounds it.
fn box_radius(spec: &HamiltonianSpec, problem: &PlanarProblem, h1: f64) -> Result<f64> {
    let bound = |r: f64| spec.h(&problem.t_vector(2.0 * r, r)) - r;
    let mut rho = 1.0f64;
    while !(bound(rho) < h1 && bound(2.0 * rho) < h1 && bound(4.0 * rho) < h1) {
        rho *= 2.0;
        if rho > 2f64.powi(40) {
            return Err(Error::Domain(
                "degenerate Hamiltonian: the planar objective appears unbounded".into(),
            ));
        }
    }
    Ok(rho)
}

/// `sup_{s >= 0} h(1 + s) - phi(s)` by Nelder-Mead from the given seeds, the
/// origin and coordinate rays through the seeds.
fn dual_sup(spec: &HamiltonianSpec, problem: &PlanarProblem, seeds: &[Vec<f64>]) -> Result<f64> {
    let m = problem.len();
    let dual = |s: &[f64]| -> f64 {
        let s: Vec<f64> = s.iter().map(|x| x.max(0.0)).collect();
        match problem.solve(&s) {
            Ok(sol) => {
                let x: Vec<f64> = s.iter().map(|v| 1.0 + v).collect();
                spec.h(&x) - sol.value
            }
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let mut starts: Vec<Vec<f64>> = seeds.to_vec();
    starts.push(vec![0.0; m]);
    for s in seeds {
        for k in 0..m {
            let mut ray = vec![0.0; m];
            ray[k] = s[k];
            starts.push(ray);
        }
    }
    let nm = NelderMead {
        max_iter: 1500,
        ..Default::default()
    };
    let mut best = f64::NEG_INFINITY;
    for s in &starts {
        best = best.max(dual(s));
        let (_, v) = nm.maximize(dual, s);
        best = best.max(v);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_examples() {
        assert!(HamiltonianSpec::edge_triangle(1.0, 1.0).validate().is_ok());
        let boundary = HamiltonianSpec::edge_triangle(2.0, 1.0);
        assert!(matches!(boundary.validate(), Err(Error::Validation(_))));
        let c3 = Motif::cycle(3).unwrap();
        let linear = HamiltonianSpec::new(
            vec![c3.clone()],
            vec![HamiltonianTerm {
                k: 0,
                beta: 1.0,
                shift: 0.0,
                gamma: 1.0,
            }],
            true,
        );
        let rep = linear.validate().unwrap();
        assert_eq!(rep.warnings.len(), 1);
        assert!(rep.warnings[0].contains("degenerate"));
        let bad = HamiltonianSpec::new(
            vec![c3],
            vec![HamiltonianTerm {
                k: 0,
                beta: -1.0,
                shift: 0.0,
                gamma: 0.5,
            }],
            false,
        );
        assert!(bad.validate().unwrap_err().to_string().contains("term 0"));
    }

    #[test]
    fn json_roundtrip() {
        let text = r#"{"family":["K12","C3",{"name":"tri","vertices":3,"edges":[[0,1],[1,2],[0,2]]}],
            "terms":[{"k":1,"beta":0.5,"shift":1.0,"gamma":0.3}],"allow_degenerate":false}"#;
        let spec = HamiltonianSpec::from_json_str(text).unwrap();
        let back = HamiltonianSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back.to_json(), spec.to_json());
        assert_eq!(spec.family().len(), 3);
    }

    #[test]
    fn zero_tilt() {
        let sol = psi_solve(&HamiltonianSpec::zero(vec![Motif::cycle(3).unwrap()])).unwrap();
        assert_eq!(sol.value, 0.0);
        assert_eq!(sol.optimizers, vec![PlanarPoint::new(0.0, 0.0)]);
    }

    #[test]
    fn edge_triangle_phases() {
        let hub = psi_solve(&HamiltonianSpec::edge_triangle(1.0, 1.0)).unwrap();
        assert_eq!(hub.optimizers.len(), 1);
        let o = hub.optimizers[0];
        assert!(o.a == 0.0 && (o.b - 1.0 / 3.0).abs() < 1e-6, "{o:?}");
        assert!((hub.value - 2.0 / 3.0).abs() < 1e-10);
        assert!(hub.duality_gap() < 1e-8);

        let clique = psi_solve(&HamiltonianSpec::edge_triangle(1.0, 2.0)).unwrap();
        assert_eq!(clique.optimizers.len(), 1);
        let o = clique.optimizers[0];
        assert!((o.a - 4.0).abs() < 1e-5 && o.b == 0.0, "{o:?}");
        // U = 2 s^{1/3} - s^{2/3}/2 at s = 8.
        assert!((clique.value - 2.0).abs() < 1e-10);
    }
}
