//! Symmetric zero-diagonal weight tables over `[n]`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RANGE_SLACK: f64 = 1e-12;

/// A symmetric `n x n` array with zero diagonal and entries in `[0, 1]`.
///
/// Stored densely; `set` writes both `(i, j)` and `(j, i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable {
    n: usize,
    data: Vec<f64>,
}

impl WeightTable {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Constant `value` off the diagonal.
    pub fn constant(n: usize, value: f64) -> Self {
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    t.data[i * n + j] = value;
                }
            }
        }
        t
    }

    /// Build from `f(i, j)` evaluated for `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                t.set(i, j, f(i, j));
            }
        }
        t
    }

    /// Validate and wrap a dense row-major array.
    pub fn from_dense(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Validation(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                data.len()
            )));
        }
        let t = Self { n, data };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if self.data[i * n + i] != 0.0 {
                return Err(Error::Validation(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let x = self.data[i * n + j];
                if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&x) {
                    return Err(Error::Validation(format!(
                        "entry ({i},{j}) = {x} outside [0,1]"
                    )));
                }
                if x != self.data[j * n + i] {
                    return Err(Error::Validation(format!("asymmetric entry ({i},{j})")));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Set the symmetric pair `(i, j)`, `(j, i)`. Ignores writes to the diagonal.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        if i != j {
            self.data[i * self.n + j] = value;
            self.data[j * self.n + i] = value;
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0 || x == 1.0)
    }

    /// Entrywise `self / scale`; the result may leave `[0, 1]`.
    pub fn scaled(&self, scale: f64) -> Vec<f64> {
        self.data.iter().map(|&x| x / scale).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Sum over unordered pairs `i < j`.
    pub fn pair_sum(&self) -> f64 {
        self.data.iter().sum::<f64>() / 2.0
    }

    /// Strict lower triangle, row by row: `(1,0), (2,0), (2,1), ...`.
    pub fn lower_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            for j in 0..i {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn from_lower_triangle(n: usize, tri: &[f64]) -> Result<Self> {
        let expected = n * n.saturating_sub(1) / 2;
        if tri.len() != expected {
            return Err(Error::Parse(format!(
                "triangle has {} entries, expected {expected} for n = {n}",
                tri.len()
            )));
        }
        let mut t = Self::zeros(n);
        let mut k = 0;
        for i in 0..n {
            for j in 0..i {
                t.set(i, j, tri[k]);
                k += 1;
            }
        }
        t.validate()?;
        Ok(t)
    }

    /// Binary format: little-endian `u32` n, then the strict lower triangle as `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let n = u32::try_from(self.n).map_err(|_| Error::Capability("n exceeds u32".into()))?;
        w.write_all(&n.to_le_bytes())?;
        for x in self.lower_triangle() {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 4];
        r.read_exact(&mut head)?;
        let n = u32::from_le_bytes(head) as usize;
        let count = n * n.saturating_sub(1) / 2;
        let mut buf = vec![0u8; count * 8];
        r.read_exact(&mut buf)?;
        let tri: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_lower_triangle(n, &tri)
    }

    pub fn to_json(&self) -> WeightTableJson {
        WeightTableJson {
            n: self.n,
            triangle: self.lower_triangle(),
        }
    }

    pub fn from_json(j: &WeightTableJson) -> Result<Self> {
        Self::from_lower_triangle(j.n, &j.triangle)
    }

    /// Frobenius (Hilbert-Schmidt) distance.
    pub fn hs_distance(&self, other: &WeightTable) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightTableJson {
    pub n: usize,
    pub triangle: Vec<f64>,
}

/// A block-constant table: vertices are partitioned into consecutive blocks
/// and the off-diagonal weight between two vertices depends only on their
/// blocks. Clique-hub tables have this form.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTable {
    sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
}

impl BlockTable {
    pub fn new(sizes: Vec<usize>, weights: Vec<Vec<f64>>) -> Result<Self> {
        let k = sizes.len();
        if weights.len() != k || weights.iter().any(|r| r.len() != k) {
            return Err(Error::Validation(
                "block weight matrix shape mismatch".into(),
            ));
        }
        for a in 0..k {
            for b in 0..k {
                if weights[a][b] != weights[b][a] {
                    return Err(Error::Validation("block weights must be symmetric".into()));
                }
            }
        }
        Ok(Self { sizes, weights })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Block index of every vertex.
    pub fn labels(&self) -> Vec<usize> {
        self.sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
            .collect()
    }

    pub fn to_table(&self) -> WeightTable {
        let labels = self.labels();
        WeightTable::from_fn(labels.len(), |i, j| self.weights[labels[i]][labels[j]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_roundtrip() {
        let t = WeightTable::from_fn(5, |i, j| ((i * 7 + j * 3) % 11) as f64 / 10.0);
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 10 * 8);
        assert_eq!(&buf[..4], &5u32.to_le_bytes());
        let back = WeightTable::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn json_roundtrip() {
        let t = WeightTable::from_fn(4, |i, j| if (i + j) % 2 == 0 { 1.0 } else { 0.25 });
        let s = serde_json::to_string(&t.to_json()).unwrap();
        let j: WeightTableJson = serde_json::from_str(&s).unwrap();
        assert_eq!(WeightTable::from_json(&j).unwrap(), t);
    }

    #[test]
    fn validation() {
        assert!(WeightTable::from_dense(2, vec![0.0, 0.5, 0.4, 0.0]).is_err());
        assert!(WeightTable::from_dense(2, vec![0.1, 0.5, 0.5, 0.0]).is_err());
        assert!(WeightTable::from_dense(2, vec![0.0, 1.5, 1.5, 0.0]).is_err());
        assert!(WeightTable::from_lower_triangle(3, &[0.1, 0.2]).is_err());
        assert!(WeightTable::from_dense(2, vec![0.0, 0.5, 0.5, 0.0]).is_ok());
    }

    #[test]
    fn block_table_expands() {
        let b = BlockTable::new(vec![2, 1], vec![vec![1.0, 0.5], vec![0.5, 0.2]]).unwrap();
        let t = b.to_table();
        assert_eq!(t.get(0, 1), 1.0);
        assert_eq!(t.get(0, 2), 0.5);
        assert_eq!(t.get(1, 1), 0.0);
    }
}
