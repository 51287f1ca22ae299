//! One- and multi-dimensional derivative-free optimizers.

/// Root of a continuous `f` on `[lo, hi]` with `f(lo)` and `f(hi)` of opposite
/// signs (or zero), by bisection down to `tol` in the argument.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return None;
    }
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[lo, hi]`; returns `(x, f(x))`.
pub fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..500 {
        if hi - lo <= tol * (1.0 + lo.abs() + hi.abs()) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    // Compare the interior best with the bracket ends so boundary maxima survive.
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Options for [`nelder_mead_max`].
#[derive(Clone, Copy, Debug)]
pub struct NelderMead {
    pub max_iter: usize,
    /// Stop once the spread of simplex values falls below this (absolute).
    pub f_tol: f64,
    /// Stop once the simplex diameter falls below this.
    pub x_tol: f64,
    /// Initial simplex edge length relative to `max(1, |x0_i|)`.
    pub initial_step: f64,
    /// Clamp every coordinate at zero from below.
    pub nonnegative: bool,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_iter: 4000,
            f_tol: 1e-14,
            x_tol: 1e-12,
            initial_step: 0.05,
            nonnegative: true,
        }
    }
}

impl NelderMead {
    /// Maximize `f` from `x0`; returns `(x, f(x))`.
    pub fn maximize(&self, mut f: impl FnMut(&[f64]) -> f64, x0: &[f64]) -> (Vec<f64>, f64) {
        let d = x0.len();
        let clamp = |x: &mut Vec<f64>| {
            if self.nonnegative {
                for v in x.iter_mut() {
                    *v = v.max(0.0);
                }
            }
        };
        let mut eval = |x: &[f64]| {
            let v = f(x);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        };
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
        let mut start = x0.to_vec();
        clamp(&mut start);
        let f0 = eval(&start);
        simplex.push((start.clone(), f0));
        for i in 0..d {
            let mut x = start.clone();
            x[i] += self.initial_step * x[i].abs().max(1.0);
            let fx = eval(&x);
            simplex.push((x, fx));
        }
        for _ in 0..self.max_iter {
            simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
            let spread = simplex[0].1 - simplex[d].1;
            let diam = simplex
                .iter()
                .skip(1)
                .map(|(x, _)| {
                    x.iter()
                        .zip(&simplex[0].0)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if (spread.abs() <= self.f_tol && diam <= self.x_tol.sqrt()) || diam <= self.x_tol {
                break;
            }
            let mut centroid = vec![0.0; d];
            for (x, _) in &simplex[..d] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / d as f64;
                }
            }
            let worst = simplex[d].clone();
            let along = |t: f64| -> Vec<f64> {
                let mut x: Vec<f64> = centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect();
                clamp(&mut x);
                x
            };
            let xr = along(1.0);
            let fr = eval(&xr);
            if fr > simplex[0].1 {
                let xe = along(2.0);
                let fe = eval(&xe);
                simplex[d] = if fe > fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr > simplex[d - 1].1 {
                simplex[d] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr > worst.1 {
                let x = along(0.5);
                let fx = eval(&x);
                (x, fx)
            } else {
                let x = along(-0.5);
                let fx = eval(&x);
                (x, fx)
            };
            if fc > worst.1.max(fr) {
                simplex[d] = (xc, fc);
                continue;
            }
            let best = simplex[0].0.clone();
            for entry in simplex.iter_mut().skip(1) {
                let mut x: Vec<f64> = best
                    .iter()
                    .zip(&entry.0)
                    .map(|(b, x)| b + 0.5 * (x - b))
                    .collect();
                clamp(&mut x);
                let fx = eval(&x);
                *entry = (x, fx);
            }
        }
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        simplex.swap_remove(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-14).is_none());
    }

    #[test]
    fn golden_finds_interior_and_boundary() {
        let (x, fx) = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6 && fx.abs() < 1e-12);
        let (x, _) = golden_max(|x| x, 0.0, 1.0, 1e-12);
        assert_eq!(x, 1.0);
    }

    #[test]
    fn nelder_mead_quadratic() {
        let nm = NelderMead {
            nonnegative: false,
            ..Default::default()
        };
        let (x, fx) = nm.maximize(
            |x| -(x[0] - 1.0).powi(2) - 2.0 * (x[1] + 0.5).powi(2),
            &[0.0, 0.0],
        );
        assert!((x[0] - 1.0).abs() < 1e-5 && (x[1] + 0.5).abs() < 1e-5 && fx > -1e-9);
        let (x, _) = NelderMead::default().maximize(|x| -(x[0] + 1.0).powi(2), &[2.0]);
        assert!(x[0].abs() < 1e-6);
    }
}
