//! The planar problem `phi_F(s) = inf { a/2 + b : T_k(a,b) >= 1 + s_k for all k }`
//! with `T_F(a,b) = P_{F*}(b) + a^{v(F)/2} 1{F regular}`.
//!
//! The feasible region is `b >= b_min` (irregular constraints are horizontal
//! half-planes) and `a >= A(b) = max_k A_k(b)` with
//! `A_k(b) = ((1 + s_k - P_k(b))_+)^{2/v_k}` for the regular constraints. Each
//! `A_k` is concave where positive (the region `T_k < y` is convex), so the
//! objective restricted to any arc of the boundary has no interior minima; the
//! minimum sits at a breakpoint: `b_min`, a crossing of two curves, or a point
//! where a curve meets the `b` axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indep::IndepPoly;
use crate::motif::Motif;
use crate::optimize::bisect;

/// Absolute bisection tolerance in `b`.
pub const BISECT_TOL: f64 = 1e-12;
/// Optimizers closer than this are merged.
pub const DEDUP_TOL: f64 = 1e-8;
/// Candidates within this of the minimum are all reported as optimizers.
pub const TIE_TOL: f64 = 1e-9;
/// Candidates within this relative gap but outside [`TIE_TOL`] are reported as near ties.
pub const NEAR_TIE_TOL: f64 = 1e-6;
/// Grid points per curve pair when scanning for crossings.
const CROSSING_GRID: usize = 4096;

/// A point `(a, b)` of the closed quadrant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub a: f64,
    pub b: f64,
}

impl PlanarPoint {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// `a/2 + b`.
    pub fn objective(&self) -> f64 {
        0.5 * self.a + self.b
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        (self.a - other.a).hypot(self.b - other.b)
    }
}

/// `T_F(a, b)` for a motif.
pub fn t_planar(motif: &Motif, a: f64, b: f64) -> Result<f64> {
    Ok(PlanarMotif::new(motif)?.t(a, b))
}

/// `P^{-1}(y)` on `[0, inf)`.
pub fn p_inverse(poly: &IndepPoly, y: f64) -> Result<f64> {
    poly.inverse(y)
}

/// The data of a motif that `T_F` depends on.
#[derive(Clone, Debug)]
pub struct PlanarMotif {
    label: String,
    vertex_count: usize,
    regular: bool,
    core_poly: IndepPoly,
}

impl PlanarMotif {
    pub fn new(motif: &Motif) -> Result<Self> {
        Ok(Self {
            label: motif.label(),
            vertex_count: motif.vertex_count(),
            regular: motif.is_regular(),
            core_poly: motif.core_indep_poly()?,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn is_regular(&self) -> bool {
        self.regular
    }

    pub fn core_poly(&self) -> &IndepPoly {
        &self.core_poly
    }

    pub fn t(&self, a: f64, b: f64) -> f64 {
        let hub = self.core_poly.eval(b);
        if self.regular {
            hub + a.powf(0.5 * self.vertex_count as f64)
        } else {
            hub
        }
    }

    /// Partial derivatives `(dT/da, dT/db)`.
    pub fn gradient(&self, a: f64, b: f64) -> (f64, f64) {
        let db = self.core_poly.derivative(b);
        if self.regular {
            let h = 0.5 * self.vertex_count as f64;
            (h * a.powf(h - 1.0), db)
        } else {
            (0.0, db)
        }
    }

    /// For a regular motif, the level curve `a(b)` of `T = y`, zero past the `b` axis crossing.
    pub fn level_a(&self, b: f64, y: f64) -> f64 {
        debug_assert!(self.regular);
        let gap = y - self.core_poly.eval(b);
        if gap <= 0.0 {
            0.0
        } else {
            gap.powf(2.0 / self.vertex_count as f64)
        }
    }

    /// `b` with `P_{F*}(b) = y`.
    pub fn level_b(&self, y: f64) -> Result<f64> {
        self.core_poly.inverse(y)
    }
}

/// Which constraints hold with equality at an optimizer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSet {
    /// Motif indices `k` with `T_k(a,b) = 1 + s_k`.
    pub motifs: Vec<usize>,
    /// The pseudo-constraint `a >= 0` is tight.
    pub a_zero: bool,
    /// The pseudo-constraint `b >= 0` is tight.
    pub b_zero: bool,
}

impl ActiveSet {
    pub fn count(&self) -> usize {
        self.motifs.len() + self.a_zero as usize + self.b_zero as usize
    }
}

/// Value and optimizer set of `phi_F(s)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanarSolution {
    pub value: f64,
    /// Sorted by `a`, then `b`.
    pub optimizers: Vec<PlanarPoint>,
    /// One entry per optimizer.
    pub active_constraints: Vec<ActiveSet>,
    pub tolerance: f64,
    /// Candidates whose objective lies within [`NEAR_TIE_TOL`] of the value but
    /// outside the tie tolerance.
    pub near_ties: Vec<PlanarPoint>,
}

/// One row of a region sample.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RegionRow {
    pub a: f64,
    pub b: f64,
    pub feasible: bool,
    pub objective: f64,
}

/// Polyline of one level curve `T_k = 1 + s_k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelCurve {
    pub k: usize,
    pub motif: String,
    pub level: f64,
    pub points: Vec<[f64; 2]>,
}

/// A motif family prepared for repeated `phi` solves.
#[derive(Clone, Debug)]
pub struct PlanarProblem {
    motifs: Vec<PlanarMotif>,
}

impl PlanarProblem {
    pub fn new(family: &[Motif]) -> Result<Self> {
        if family.is_empty() {
            return Err(Error::Validation("empty motif family".into()));
        }
        Ok(Self {
            motifs: family.iter().map(PlanarMotif::new).collect::<Result<_>>()?,
        })
    }

    pub fn motifs(&self) -> &[PlanarMotif] {
        &self.motifs
    }

    pub fn len(&self) -> usize {
        self.motifs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motifs.is_empty()
    }

    /// `(T_1(a,b), ..., T_m(a,b))`.
    pub fn t_vector(&self, a: f64, b: f64) -> Vec<f64> {
        self.motifs.iter().map(|m| m.t(a, b)).collect()
    }

    /// `s(a,b) = T(a,b) - 1`.
    pub fn s_vector(&self, a: f64, b: f64) -> Vec<f64> {
        self.motifs.iter().map(|m| m.t(a, b) - 1.0).collect()
    }

    fn check_s(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.motifs.len() {
            return Err(Error::Validation(format!(
                "s has {} entries for a family of {}",
                s.len(),
                self.motifs.len()
            )));
        }
        if let Some(bad) = s.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::Domain(format!(
                "s entries must be finite and >= 0, got {bad}"
            )));
        }
        Ok(())
    }

    /// Whether `(a,b)` satisfies every constraint up to `tol` (relative to `1 + s_k`).
    pub fn is_feasible(&self, s: &[f64], a: f64, b: f64, tol: f64) -> bool {
        self.motifs
            .iter()
            .zip(s)
            .all(|(m, &sk)| m.t(a, b) >= (1.0 + sk) * (1.0 - tol))
    }

    /// Lower boundary `a = A(b)` of the feasible region (meaningful for `b >= b_min`).
    fn boundary(&self, s: &[f64], b: f64) -> f64 {
        self.motifs
            .iter()
            .zip(s)
            .filter(|(m, &sk)| m.regular && sk > 0.0)
            .map(|(m, &sk)| m.level_a(b, 1.0 + sk))
            .fold(0.0, f64::max)
    }

    /// Smallest feasible `b` imposed by the irregular constraints.
    fn b_min(&self, s: &[f64]) -> Result<f64> {
        let mut b = 0.0f64;
        for (m, &sk) in self.motifs.iter().zip(s) {
            if !m.regular && sk > 0.0 {
                b = b.max(m.level_b(1.0 + sk)?);
            }
        }
        Ok(b)
    }

    /// Candidate `b` coordinates of the minimizer.
    fn candidate_bs(&self, s: &[f64]) -> Result<Vec<f64>> {
        let b_min = self.b_min(s)?;
        let mut bs = vec![b_min];
        let regular: Vec<(usize, f64)> = self
            .motifs
            .iter()
            .zip(s)
            .enumerate()
            .filter(|(_, (m, &sk))| m.regular && sk > 0.0)
            .map(|(k, (m, &sk))| Ok((k, m.level_b(1.0 + sk)?)))
            .collect::<Result<_>>()?;
        for &(_, b0) in &regular {
            if b0 >= b_min {
                bs.push(b0);
            }
        }
        for (x, &(k, bk)) in regular.iter().enumerate() {
            for &(l, bl) in &regular[x + 1..] {
                let hi = bk.min(bl);
                if hi <= b_min {
                    continue;
                }
                let (mk, ml) = (&self.motifs[k], &self.motifs[l]);
                let (yk, yl) = (1.0 + s[k], 1.0 + s[l]);
                let diff = |b: f64| mk.level_a(b, yk) - ml.level_a(b, yl);
                let step = (hi - b_min) / CROSSING_GRID as f64;
                let mut prev_b = b_min;
                let mut prev = diff(b_min);
                for i in 1..=CROSSING_GRID {
                    let b = if i == CROSSING_GRID {
                        hi
                    } else {
                        b_min + step * i as f64
                    };
                    let cur = diff(b);
                    if prev == 0.0 {
                        bs.push(prev_b);
                    } else if prev.signum() != cur.signum() && cur != 0.0 {
                        let root = bisect(diff, prev_b, b, BISECT_TOL)
                            .ok_or_else(|| Error::Internal("lost a level-curve crossing".into()))?;
                        bs.push(root);
                    }
                    prev_b = b;
                    prev = cur;
                }
            }
        }
        bs.sort_by(f64::total_cmp);
        bs.dedup_by(|x, y| (*x - *y).abs() <= BISECT_TOL);
        Ok(bs)
    }

    /// Solve `phi(s)` and collect the optimizer set.
    pub fn solve(&self, s: &[f64]) -> Result<PlanarSolution> {
        self.check_s(s)?;
        if s.iter().all(|&x| x == 0.0) {
            return Ok(PlanarSolution {
                value: 0.0,
                optimizers: vec![PlanarPoint::new(0.0, 0.0)],
                active_constraints: vec![ActiveSet {
                    motifs: Vec::new(),
                    a_zero: true,
                    b_zero: true,
                }],
                tolerance: TIE_TOL,
                near_ties: Vec::new(),
            });
        }
        let candidates: Vec<PlanarPoint> = self
            .candidate_bs(s)?
            .into_iter()
            .map(|b| PlanarPoint::new(self.boundary(s, b), b))
            .collect();
        let value = candidates
            .iter()
            .map(PlanarPoint::objective)
            .fold(f64::INFINITY, f64::min);
        let mut optimizers: Vec<PlanarPoint> = Vec::new();
        let mut near_ties: Vec<PlanarPoint> = Vec::new();
        for c in &candidates {
            let gap = c.objective() - value;
            if gap <= TIE_TOL {
                if optimizers.iter().all(|o| o.distance(c) > DEDUP_TOL) {
                    optimizers.push(*c);
                }
            } else if gap <= NEAR_TIE_TOL * value.max(1.0)
                && near_ties.iter().all(|o| o.distance(c) > DEDUP_TOL)
            {
                near_ties.push(*c);
            }
        }
        optimizers.sort_by(|x, y| x.a.total_cmp(&y.a).then(x.b.total_cmp(&y.b)));
        for o in &optimizers {
            if !self.is_feasible(s, o.a, o.b, 1e-9) {
                return Err(Error::Internal(format!(
                    "optimizer ({}, {}) is infeasible",
                    o.a, o.b
                )));
            }
        }
        let active_constraints = optimizers.iter().map(|o| self.active_set(s, o)).collect();
        Ok(PlanarSolution {
            value,
            optimizers,
            active_constraints,
            tolerance: TIE_TOL,
            near_ties,
        })
    }

    /// Active constraints at `p`, measured on freshly evaluated `T_k`.
    pub fn active_set(&self, s: &[f64], p: &PlanarPoint) -> ActiveSet {
        let motifs = self
            .motifs
            .iter()
            .zip(s)
            .enumerate()
            .filter(|(_, (m, &sk))| {
                sk > 0.0 && (m.t(p.a, p.b) - (1.0 + sk)).abs() <= 1e-8 * (1.0 + sk)
            })
            .map(|(k, _)| k)
            .collect();
        ActiveSet {
            motifs,
            a_zero: p.a <= 1e-12,
            b_zero: p.b <= 1e-12,
        }
    }

    /// Feasibility and objective on a regular `(na+1) x (nb+1)` grid over `[0,a_max] x [0,b_max]`.
    pub fn region_grid(
        &self,
        s: &[f64],
        a_max: f64,
        b_max: f64,
        na: usize,
        nb: usize,
    ) -> Result<Vec<RegionRow>> {
        self.check_s(s)?;
        if !(a_max > 0.0 && b_max > 0.0) || na == 0 || nb == 0 {
            return Err(Error::Domain(
                "grid bounds and resolution must be positive".into(),
            ));
        }
        let mut rows = Vec::with_capacity((na + 1) * (nb + 1));
        for i in 0..=na {
            let a = a_max * i as f64 / na as f64;
            for j in 0..=nb {
                let b = b_max * j as f64 / nb as f64;
                rows.push(RegionRow {
                    a,
                    b,
                    feasible: self.is_feasible(s, a, b, 0.0),
                    objective: 0.5 * a + b,
                });
            }
        }
        Ok(rows)
    }

    /// Level curves `T_k = 1 + s_k` sampled at `samples + 1` points within the box.
    pub fn level_curves(
        &self,
        s: &[f64],
        a_max: f64,
        b_max: f64,
        samples: usize,
    ) -> Result<Vec<LevelCurve>> {
        self.check_s(s)?;
        let samples = samples.max(1);
        let mut curves = Vec::new();
        for (k, (m, &sk)) in self.motifs.iter().zip(s).enumerate() {
            let y = 1.0 + sk;
            let b_axis = m.level_b(y)?;
            let points = if m.regular {
                let top = b_axis.min(b_max);
                (0..=samples)
                    .map(|i| {
                        let b = top * i as f64 / samples as f64;
                        [m.level_a(b, y), b]
                    })
                    .collect()
            } else {
                (0..=samples)
                    .map(|i| [a_max * i as f64 / samples as f64, b_axis])
                    .collect()
            };
            curves.push(LevelCurve {
                k,
                motif: m.label.clone(),
                level: y,
                points,
            });
        }
        Ok(curves)
    }
}

/// `phi_F(s)` for a motif family.
pub fn phi_solve(family: &[Motif], s: &[f64]) -> Result<PlanarSolution> {
    PlanarProblem::new(family)?.solve(s)
}
