//! Independence polynomials of small graphs.

use std::fmt;

use crate::error::{Error, Result};
use crate::motif::SimpleGraph;

/// Largest graph accepted by the subset enumeration.
pub const INDEP_ENUMERATION_CAP: usize = 24;

/// `P(x) = sum_j c_j x^j` where `c_j` counts independent sets of size `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndepPoly {
    coefficients: Vec<u64>,
}

impl IndepPoly {
    /// Enumerate all vertex subsets (bitmask walk) of `g`.
    pub fn of_graph(g: &SimpleGraph) -> Result<Self> {
        let n = g.vertex_count();
        if n > INDEP_ENUMERATION_CAP {
            return Err(Error::Capability(format!(
                "independence polynomial enumeration is capped at {INDEP_ENUMERATION_CAP} vertices, got {n}"
            )));
        }
        let mut nbr = vec![0u32; n];
        for &(u, v) in g.edges() {
            nbr[u] |= 1 << v;
            nbr[v] |= 1 << u;
        }
        let mut coefficients = vec![0u64; n + 1];
        // Extend independent sets in increasing vertex order.
        fn walk(start: usize, set: u32, size: usize, nbr: &[u32], c: &mut [u64]) {
            c[size] += 1;
            for v in start..nbr.len() {
                if set & (1 << v) == 0 && nbr[v] & set == 0 {
                    walk(v + 1, set | (1 << v), size + 1, nbr, c);
                }
            }
        }
        walk(0, 0, 0, &nbr, &mut coefficients);
        while coefficients.len() > 1 && *coefficients.last().unwrap() == 0 {
            coefficients.pop();
        }
        Ok(Self { coefficients })
    }

    /// Build from explicit coefficients; `c_0` must be 1 and all others nonnegative.
    pub fn from_coefficients(coefficients: Vec<u64>) -> Result<Self> {
        if coefficients.first() != Some(&1) {
            return Err(Error::Validation(
                "independence polynomial needs c_0 = 1".into(),
            ));
        }
        let mut c = coefficients;
        while c.len() > 1 && *c.last().unwrap() == 0 {
            c.pop();
        }
        Ok(Self { coefficients: c })
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c as f64)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (j, &c)| acc * x + (j as u64 * c) as f64)
    }

    /// The unique `x >= 0` with `P(x) = y`, for `y >= 1`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 1.0) || !y.is_finite() {
            return Err(Error::Domain(format!("P^-1 needs y >= 1, got {y}")));
        }
        if y == 1.0 || self.degree() == 0 {
            if self.degree() == 0 && y > 1.0 {
                return Err(Error::Domain(
                    "constant polynomial cannot reach y > 1".into(),
                ));
            }
            return Ok(0.0);
        }
        if self.degree() == 1 {
            return Ok((y - 1.0) / self.coefficients[1] as f64);
        }
        let mut hi = 1.0;
        while self.eval(hi) < y {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (elo, ehi) = ((self.eval(lo) - y).abs(), (self.eval(hi) - y).abs());
        Ok(if elo <= ehi { lo } else { hi })
    }
}

impl fmt::Display for IndepPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, &c) in self.coefficients.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match j {
                0 => write!(f, "{c}")?,
                1 if c == 1 => write!(f, "x")?,
                1 => write!(f, "{c}x")?,
                _ if c == 1 => write!(f, "x^{j}")?,
                _ => write!(f, "{c}x^{j}")?,
            }
        }
        Ok(())
    }
}
