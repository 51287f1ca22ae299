//! Edge-F models `Ham(X) = beta f(t(F, X))` with `f(x) = (x - shift)_+^{gamma/e(F)}`.
//!
//! For these models `psi = sup_{s >= 0} U(beta, s)` with
//! `U(beta, s) = beta f(1 + s) - phi_F(s)`. For a regular motif, `phi_F` switches
//! at `s_c` from the hub branch `P^{-1}(1+s)` to the clique branch `s^{2/v}/2`;
//! the two restricted maxima cross at `beta_c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianSpec, HamiltonianTerm};
use crate::motif::Motif;
use crate::optimize::{bisect, golden_max};
use crate::planar::{PlanarMotif, PlanarProblem};

/// Distinct maximizers farther apart than this with tied values are ambiguous.
pub const AMBIGUITY_TOL: f64 = 1e-5;
const STARTS: usize = 8;
const SCAN_POINTS: usize = 512;
const BETA_C_CAP: f64 = 1048576.0;

/// Which branch of `phi_F` carries the maximizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Hub,
    Clique,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Hub => "hub",
            Phase::Clique => "clique",
        })
    }
}

/// An edge-F model.
#[derive(Clone, Debug)]
pub struct EdgeFModel {
    motif: Motif,
    planar: PlanarMotif,
    beta: f64,
    gamma: f64,
    shift: f64,
}

impl EdgeFModel {
    /// `f(x) = (x - 1)_+^{gamma/e(F)}`; requires a connected motif and `0 < gamma < Delta`.
    pub fn new(motif: &Motif, gamma: f64, beta: f64) -> Result<Self> {
        Self::with_shift(motif, gamma, beta, 1.0)
    }

    pub fn with_shift(motif: &Motif, gamma: f64, beta: f64, shift: f64) -> Result<Self> {
        if !motif.is_connected() {
            return Err(Error::Validation(format!(
                "motif {} is not connected",
                motif.label()
            )));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Validation(format!("beta must be >= 0, got {beta}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Validation(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        let delta = motif.max_degree() as f64;
        if gamma >= delta {
            return Err(Error::Validation(format!(
                "gamma = {gamma} violates the growth condition gamma < Delta = {delta}"
            )));
        }
        if !(shift <= 1.0 && shift.is_finite()) {
            return Err(Error::Validation(format!(
                "shift must be <= 1 so that f increases on (1, inf), got {shift}"
            )));
        }
        Ok(Self {
            motif: motif.clone(),
            planar: PlanarMotif::new(motif)?,
            beta,
            gamma,
            shift,
        })
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self {
            beta,
            ..self.clone()
        }
    }

    pub fn motif(&self) -> &Motif {
        &self.motif
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Exponent of `f`: `gamma / e(F)`.
    pub fn exponent(&self) -> f64 {
        self.gamma / self.motif.edge_count() as f64
    }

    pub fn f(&self, x: f64) -> f64 {
        let d = x - self.shift;
        if d <= 0.0 {
            0.0
        } else {
            d.powf(self.exponent())
        }
    }

    /// The equivalent single-term Hamiltonian.
    pub fn hamiltonian(&self) -> HamiltonianSpec {
        HamiltonianSpec::new(
            vec![self.motif.clone()],
            vec![HamiltonianTerm {
                k: 0,
                beta: self.beta,
                shift: self.shift,
                gamma: self.exponent(),
            }],
            false,
        )
    }

    fn hub_phi(&self, s: f64) -> f64 {
        self.planar.level_b(1.0 + s).expect("1 + s >= 1")
    }

    fn clique_phi(&self, s: f64) -> f64 {
        0.5 * s.powf(2.0 / self.motif.vertex_count() as f64)
    }

    /// `phi_F(s)`.
    pub fn phi(&self, s: f64) -> f64 {
        if self.planar.is_regular() {
            self.hub_phi(s).min(self.clique_phi(s))
        } else {
            self.hub_phi(s)
        }
    }

    /// `U(beta, s)`.
    pub fn u(&self, beta: f64, s: f64) -> f64 {
        beta * self.f(1.0 + s) - self.phi(s)
    }

    fn u_hub(&self, beta: f64, s: f64) -> f64 {
        beta * self.f(1.0 + s) - self.hub_phi(s)
    }

    fn u_clique(&self, beta: f64, s: f64) -> f64 {
        beta * self.f(1.0 + s) - self.clique_phi(s)
    }

    /// `s_c`: root of `P_F(s^{2/v}/2) = 1 + s` (regular motifs only).
    pub fn s_c(&self) -> Option<f64> {
        if !self.planar.is_regular() {
            return None;
        }
        let v = self.motif.vertex_count() as f64;
        let p = self.planar.core_poly();
        let g = |s: f64| p.eval(0.5 * s.powf(2.0 / v)) - 1.0 - s;
        let mut hi = 1.0;
        while g(hi) >= 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return None;
            }
        }
        let mut lo = hi / 2.0;
        while lo > 1e-300 && g(lo) <= 0.0 {
            lo /= 2.0;
        }
        bisect(g, lo, hi, 1e-15 * hi)
    }

    /// Upper end of a range that contains every maximizer of `U` restricted
    /// to `[start, inf)`: on `[S, 2S]`, `U <= beta f(1 + 2S) - phi_branch(S)`.
    fn bracket(&self, beta: f64, start: f64, branch_phi: &dyn Fn(f64) -> f64, floor: f64) -> f64 {
        let mut s = start.max(1.0);
        let bound = |s: f64| beta * self.f(1.0 + 2.0 * s) - branch_phi(s);
        for _ in 0..2000 {
            if bound(s) < floor && bound(2.0 * s) < floor && bound(4.0 * s) < floor {
                return 2.0 * s;
            }
            s *= 2.0;
        }
        s
    }

    /// Maximize `U_hub` on `[0, s_c]` (or `[0, inf)` for irregular motifs).
    pub fn max_hub(&self, beta: f64) -> Max1d {
        let f = |s: f64| self.u_hub(beta, s);
        let hi = match self.s_c() {
            Some(sc) => sc,
            None => self.bracket(beta, 0.0, &|s| self.hub_phi(s), f(0.0)),
        };
        maximize_scan(&f, 0.0, hi)
    }

    /// Maximize `U_clique` on `[s_c, inf)` (regular motifs only).
    pub fn max_clique(&self, beta: f64) -> Option<Max1d> {
        let sc = self.s_c()?;
        let f = |s: f64| self.u_clique(beta, s);
        let hi = self.bracket(beta, sc, &|s| self.clique_phi(s), f(sc));
        Some(maximize_scan(&f, sc, hi))
    }

    /// `beta_c`: where the restricted maxima cross (regular motifs only).
    pub fn beta_c(&self) -> Option<f64> {
        self.s_c()?;
        let g =
            |beta: f64| self.max_hub(beta).value - self.max_clique(beta).expect("regular").value;
        let mut hi = 1.0;
        while g(hi) >= 0.0 {
            hi *= 2.0;
            if hi > BETA_C_CAP {
                return None;
            }
        }
        bisect(g, 0.0, hi, 1e-13 * hi)
    }

    /// `beta_o = inf_{s > 0} phi(s) / (f(1+s) - f(1))`.
    pub fn beta_o(&self) -> f64 {
        if self.shift == 1.0 && self.exponent() < 1.0 {
            // f(1+s) - f(1) = s^{gamma/e} dominates phi(s) = O(s) near zero.
            return 0.0;
        }
        let ratio = |log_s: f64| {
            let s = log_s.exp();
            let gain = self.f(1.0 + s) - self.f(1.0);
            if gain <= 0.0 {
                f64::INFINITY
            } else {
                self.phi(s) / gain
            }
        };
        let lo = (1e-9f64).ln();
        let hi = (1e9f64).ln();
        let n = 2000;
        let (mut best_x, mut best) = (lo, f64::INFINITY);
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let r = ratio(x);
            if r < best {
                best = r;
                best_x = x;
            }
        }
        let step = (hi - lo) / n as f64;
        let (_, neg) = golden_max(|x| -ratio(x), best_x - step, best_x + step, 1e-14);
        best.min(-neg)
    }
}

/// Result of a bracketed one-dimensional maximization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Max1d {
    pub x: f64,
    pub value: f64,
    /// A second maximizer with a tied value, if one was found.
    pub tie: Option<f64>,
}

/// Maximize `f` on `[lo, hi]`: scan, then golden-section from the best
/// [`STARTS`] local maxima of the scan.
fn maximize_scan(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Max1d {
    if hi <= lo {
        return Max1d {
            x: lo,
            value: f(lo),
            tie: None,
        };
    }
    // Half the points uniform, half geometric towards lo, so maxima close to
    // the lower end are resolved.
    let mut xs: Vec<f64> = (0..=SCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / SCAN_POINTS as f64)
        .collect();
    let width = hi - lo;
    xs.extend((1..SCAN_POINTS).map(|i| lo + width * 1e-12f64.powf(i as f64 / SCAN_POINTS as f64)));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut peaks: Vec<usize> = (0..xs.len())
        .filter(|&i| {
            (i == 0 || vals[i] >= vals[i - 1]) && (i + 1 == xs.len() || vals[i] >= vals[i + 1])
        })
        .collect();
    peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    peaks.truncate(STARTS);
    let mut results: Vec<(f64, f64)> = peaks
        .iter()
        .map(|&i| {
            let a = xs[i.saturating_sub(1)];
            let b = xs[(i + 1).min(xs.len() - 1)];
            polish(f, golden_max(f, a, b, 1e-15), lo, hi)
        })
        .collect();
    results.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (x, value) = results[0];
    let tie_tol = 1e-12 * (1.0 + value.abs());
    let tie = results[1..]
        .iter()
        .find(|(y, v)| value - v <= tie_tol && (y - x).abs() >= AMBIGUITY_TOL)
        .map(|&(y, _)| y);
    Max1d { x, value, tie }
}

/// Golden section only locates a smooth maximum to about `sqrt(eps)`;
/// bisect the central-difference derivative near it for full precision.
fn polish(f: &dyn Fn(f64) -> f64, (x, value): (f64, f64), lo: f64, hi: f64) -> (f64, f64) {
    let h = 1e-5 * (1.0 + x.abs());
    let deriv = |y: f64| (f(y + h) - f(y - h)) / (2.0 * h);
    let w = 1e-4 * (1.0 + x.abs());
    let (a, b) = ((x - w).max(lo + h), (x + w).min(hi - h));
    if a >= b {
        return (x, value);
    }
    match bisect(deriv, a, b, 1e-15 * (1.0 + x.abs())) {
        Some(y) if f(y) >= value - 1e-12 * (1.0 + value.abs()) => (y, f(y).max(value)),
        _ => (x, value),
    }
}

/// Solution of an edge-F model at its `beta`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeFReport {
    pub motif: String,
    pub gamma: f64,
    pub beta: f64,
    pub regular: bool,
    pub s_c: Option<f64>,
    pub beta_c: Option<f64>,
    pub beta_o: f64,
    /// Maximizer of `U` over the hub branch.
    pub s_hub: f64,
    pub u_hub: f64,
    /// Maximizer of `U` over the clique branch.
    pub s_clique: Option<f64>,
    pub u_clique: Option<f64>,
    pub phase: Phase,
    pub s_star: f64,
    pub a_star: f64,
    pub b_star: f64,
    /// `max_s U(beta, s)`.
    pub psi: f64,
    pub warnings: Vec<String>,
}

/// Solve the model at its own `beta`, with `beta_c` computed on the fly.
pub fn edge_f_solve(model: &EdgeFModel) -> Result<EdgeFReport> {
    let beta_c = model.beta_c();
    edge_f_solve_with(model, beta_c, model.beta_o())
}

/// As [`edge_f_solve`] with precomputed `beta_c`, `beta_o` (for grids over `beta`).
pub fn edge_f_solve_with(
    model: &EdgeFModel,
    beta_c: Option<f64>,
    beta_o: f64,
) -> Result<EdgeFReport> {
    let beta = model.beta;
    let mut warnings = Vec::new();
    let hub = model.max_hub(beta);
    if let Some(t) = hub.tie {
        warnings.push(format!(
            "hub branch maximizer not unique: {} and {t}",
            hub.x
        ));
    }
    let clique = model.max_clique(beta);
    if let Some(Max1d {
        x, tie: Some(t), ..
    }) = clique
    {
        warnings.push(format!("clique branch maximizer not unique: {x} and {t}"));
    }
    let phase = match clique {
        Some(c) if c.value > hub.value => Phase::Clique,
        _ => Phase::Hub,
    };
    if let (Some(bc), Some(c)) = (beta_c, clique) {
        if ((beta < bc) != (phase == Phase::Hub)) && (c.value - hub.value).abs() > 1e-9 {
            return Err(Error::Internal(format!(
                "phase at beta = {beta} disagrees with beta_c = {bc}"
            )));
        }
        if (c.value - hub.value).abs() <= 1e-12 * (1.0 + hub.value.abs()) {
            warnings.push(format!(
                "beta = {beta} sits on the phase boundary; both branches attain the maximum"
            ));
        }
    }
    let (s_star, psi) = match phase {
        Phase::Hub => (hub.x, hub.value),
        Phase::Clique => {
            let c = clique.expect("clique phase");
            (c.x, c.value)
        }
    };
    // The optimizer in the plane comes from the general planar solver.
    let problem = PlanarProblem::new(std::slice::from_ref(&model.motif))?;
    let sol = problem.solve(&[s_star])?;
    let pick = match phase {
        Phase::Hub => sol.optimizers.iter().max_by(|x, y| x.b.total_cmp(&y.b)),
        Phase::Clique => sol.optimizers.iter().max_by(|x, y| x.a.total_cmp(&y.a)),
    }
    .copied()
    .ok_or_else(|| Error::Internal("empty planar optimizer set".into()))?;
    Ok(EdgeFReport {
        motif: model.motif.label(),
        gamma: model.gamma,
        beta,
        regular: model.planar.is_regular(),
        s_c: model.s_c(),
        beta_c,
        beta_o,
        s_hub: hub.x,
        u_hub: hub.value,
        s_clique: clique.map(|c| c.x),
        u_clique: clique.map(|c| c.value),
        phase,
        s_star,
        a_star: pick.a,
        b_star: pick.b,
        psi,
        warnings,
    })
}

/// Whether the selected maximizers are nondecreasing from `beta1` to `beta2`
/// on each branch and overall.
pub fn monotone_selection_check(model: &EdgeFModel, beta1: f64, beta2: f64) -> Result<bool> {
    if beta1 > beta2 {
        return Err(Error::Domain(
            "monotone_selection_check expects beta1 <= beta2".into(),
        ));
    }
    let tol = 1e-7;
    let bc = model.beta_c();
    let bo = model.beta_o();
    let r1 = edge_f_solve_with(&model.with_beta(beta1), bc, bo)?;
    let r2 = edge_f_solve_with(&model.with_beta(beta2), bc, bo)?;
    let ok = |x1: f64, x2: f64| x2 >= x1 - tol * (1.0 + x1.abs());
    let mut pass = ok(r1.s_hub, r2.s_hub) && ok(r1.s_star, r2.s_star);
    if let (Some(c1), Some(c2)) = (r1.s_clique, r2.s_clique) {
        pass &= ok(c1, c2);
    }
    Ok(pass)
}

/// One row of a `beta` scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhaseRow {
    pub beta: f64,
    pub phase: Phase,
    pub s_star: f64,
    pub a_star: f64,
    pub b_star: f64,
    pub psi: f64,
}

/// Solve on a grid of `beta` values, sharing `beta_c` and `beta_o`.
pub fn phase_scan(model: &EdgeFModel, betas: &[f64]) -> Result<Vec<PhaseRow>> {
    let bc = model.beta_c();
    let bo = model.beta_o();
    betas
        .iter()
        .map(|&beta| {
            let r = edge_f_solve_with(&model.with_beta(beta), bc, bo)?;
            Ok(PhaseRow {
                beta,
                phase: r.phase,
                s_star: r.s_star,
                a_star: r.a_star,
                b_star: r.b_star,
                psi: r.psi,
            })
        })
        .collect()
}

/// Closed forms for the edge-triangle model `f(x) = (x - 1)_+^{gamma/3}`.
pub mod edge_triangle {
    /// `beta_c = (1/gamma) ((6 - 2 gamma)/(6 - 3 gamma))^{(2-gamma)(3-gamma)/gamma}`.
    pub fn beta_c(gamma: f64) -> f64 {
        ((6.0 - 2.0 * gamma) / (6.0 - 3.0 * gamma)).powf((2.0 - gamma) * (3.0 - gamma) / gamma)
            / gamma
    }

    /// Clique-phase optimizer `a* = (gamma beta)^{2/(2-gamma)}`.
    pub fn a_star(gamma: f64, beta: f64) -> f64 {
        (gamma * beta).powf(2.0 / (2.0 - gamma))
    }

    /// Hub-phase optimizer `b* = (gamma beta)^{3/(3-gamma)} / 3`.
    pub fn b_star(gamma: f64, beta: f64) -> f64 {
        (gamma * beta).powf(3.0 / (3.0 - gamma)) / 3.0
    }

    /// `s_c = 27/8`.
    pub const S_C: f64 = 27.0 / 8.0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c3(gamma: f64, beta: f64) -> EdgeFModel {
        EdgeFModel::new(&Motif::cycle(3).unwrap(), gamma, beta).unwrap()
    }

    #[test]
    fn critical_points() {
        let m = c3(1.0, 1.0);
        assert!((m.s_c().unwrap() - 3.375).abs() < 1e-12);
        assert!((m.beta_c().unwrap() - 16.0 / 9.0).abs() < 1e-9);
        let c4 = EdgeFModel::new(&Motif::cycle(4).unwrap(), 1.0, 1.0).unwrap();
        assert!((c4.s_c().unwrap() - 16.0).abs() < 1e-9);
        let k4 = EdgeFModel::new(&Motif::clique(4).unwrap(), 1.0, 1.0).unwrap();
        assert!((k4.s_c().unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn hub_and_clique_examples() {
        let r = edge_f_solve(&c3(1.0, 1.0)).unwrap();
        assert_eq!(r.phase, Phase::Hub);
        assert!((r.b_star - 1.0 / 3.0).abs() < 1e-8 && r.a_star == 0.0);
        let r = edge_f_solve(&c3(1.0, 2.0)).unwrap();
        assert_eq!(r.phase, Phase::Clique);
        assert!((r.a_star - 4.0).abs() < 1e-6 && r.b_star == 0.0);
        let r = edge_f_solve(&c3(1.0, 0.0)).unwrap();
        assert_eq!(r.s_star, 0.0);
        assert_eq!(r.psi, 0.0);
    }

    #[test]
    fn irregular_is_always_hub() {
        let m = EdgeFModel::new(&Motif::builtin("K12").unwrap(), 1.0, 3.0).unwrap();
        let r = edge_f_solve(&m).unwrap();
        assert_eq!(r.phase, Phase::Hub);
        assert!(r.s_c.is_none() && r.beta_c.is_none());
        // b* = P^{-1}(1 + s*) with P = 1 + x.
        assert!((r.b_star - r.s_star).abs() < 1e-12);
        assert!(monotone_selection_check(&m, 0.5, 2.0).unwrap());
    }

    #[test]
    fn psi_matches_planar_solver() {
        for beta in [0.5, 1.5, 2.5] {
            let m = c3(1.0, beta);
            let r = edge_f_solve(&m).unwrap();
            let psi = crate::hamiltonian::psi_solve(&m.hamiltonian()).unwrap();
            assert!(
                (r.psi - psi.value).abs() < 1e-9,
                "{beta}: {} vs {}",
                r.psi,
                psi.value
            );
        }
    }

    #[test]
    fn rejects_growth_violation() {
        assert!(EdgeFModel::new(&Motif::cycle(3).unwrap(), 2.0, 1.0).is_err());
        let path = Motif::path(2)
            .unwrap()
            .disjoint_union(&Motif::path(1).unwrap());
        assert!(EdgeFModel::new(&path, 1.0, 1.0).is_err());
    }
}
