//! Simple graphs on `[n]` with bitset adjacency rows.

use rand::Rng;

use crate::error::{Error, Result};
use crate::weights::WeightTable;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitGraph {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    degrees: Vec<usize>,
    edge_count: usize,
}

impl BitGraph {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Self {
            n,
            words,
            bits: vec![0; n * words],
            degrees: vec![0; n],
            edge_count: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                g.add_edge(i, j);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::empty(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    /// Erdős–Rényi `G(n, p)`.
    pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < p {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    /// Requires a `{0,1}`-valued table.
    pub fn from_table(t: &WeightTable) -> Result<Self> {
        if !t.is_binary() {
            return Err(Error::Domain("weight table is not binary".into()));
        }
        let n = t.n();
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                if t.get(i, j) == 1.0 {
                    g.add_edge(i, j);
                }
            }
        }
        Ok(g)
    }

    pub fn to_table(&self) -> WeightTable {
        WeightTable::from_fn(self.n, |i, j| if self.has_edge(i, j) { 1.0 } else { 0.0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    #[inline]
    pub fn row(&self, v: usize) -> &[u64] {
        &self.bits[v * self.words..(v + 1) * self.words]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    /// Returns `true` if the edge was absent.
    pub fn add_edge(&mut self, u: usize, v: usize) -> bool {
        if u == v || self.has_edge(u, v) {
            return false;
        }
        self.bits[u * self.words + v / 64] |= 1 << (v % 64);
        self.bits[v * self.words + u / 64] |= 1 << (u % 64);
        self.degrees[u] += 1;
        self.degrees[v] += 1;
        self.edge_count += 1;
        true
    }

    /// Returns `true` if the edge was present.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        if u == v || !self.has_edge(u, v) {
            return false;
        }
        self.bits[u * self.words + v / 64] &= !(1 << (v % 64));
        self.bits[v * self.words + u / 64] &= !(1 << (u % 64));
        self.degrees[u] -= 1;
        self.degrees[v] -= 1;
        self.edge_count -= 1;
        true
    }

    pub fn set_edge(&mut self, u: usize, v: usize, present: bool) {
        if present {
            self.add_edge(u, v);
        } else {
            self.remove_edge(u, v);
        }
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        iter_bits(self.row(v))
    }

    /// Number of common neighbours of `u` and `v`.
    pub fn codegree(&self, u: usize, v: usize) -> usize {
        self.row(u)
            .iter()
            .zip(self.row(v))
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Number of neighbours of `v` inside `set` (a bitset of the same width).
    pub fn degree_into(&self, v: usize, set: &[u64]) -> usize {
        self.row(v)
            .iter()
            .zip(set)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn words(&self) -> usize {
        self.words
    }

    /// Bitset with the listed vertices set.
    pub fn vertex_set(&self, vs: &[usize]) -> Vec<u64> {
        let mut s = vec![0u64; self.words];
        for &v in vs {
            s[v / 64] |= 1 << (v % 64);
        }
        s
    }
}

/// Iterate the indices of set bits.
pub fn iter_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(w, &word)| {
        let mut x = word;
        std::iter::from_fn(move || {
            if x == 0 {
                None
            } else {
                let t = x.trailing_zeros() as usize;
                x &= x - 1;
                Some(w * 64 + t)
            }
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_and_degrees() {
        let mut g = BitGraph::empty(70);
        assert!(g.add_edge(0, 69));
        assert!(!g.add_edge(69, 0));
        assert!(g.add_edge(0, 1));
        assert!(g.add_edge(1, 69));
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.codegree(0, 1), 1);
        assert_eq!(g.neighbors(0).collect::<Vec<_>>(), vec![1, 69]);
        assert!(g.remove_edge(0, 69));
        assert_eq!(g.edge_count(), 2);
        let t = g.to_table();
        assert_eq!(BitGraph::from_table(&t).unwrap(), g);
    }
}
