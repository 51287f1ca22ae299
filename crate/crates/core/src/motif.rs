//! Small motif graphs `F` and their derived quantities.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indep::IndepPoly;

/// A simple graph on vertices `0..vertex_count`, edges stored as sorted
/// `(u, v)` pairs with `u < v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SimpleGraph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
}

impl SimpleGraph {
    pub fn new(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::Validation(format!(
                    "edge ({u},{v}) has an endpoint outside 0..{vertex_count}"
                )));
            }
            if u == v {
                return Err(Error::Validation(format!("self-loop at vertex {u}")));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(Error::Validation(format!("duplicate edge ({u},{v})")));
            }
        }
        Ok(Self {
            vertex_count,
            edges: set.into_iter().collect(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    /// Induced subgraph on `keep` (relabelled in the given order).
    pub fn induced(&self, keep: &[usize]) -> SimpleGraph {
        let mut index = vec![usize::MAX; self.vertex_count];
        for (new, &old) in keep.iter().enumerate() {
            index[old] = new;
        }
        let edges: Vec<_> = self
            .edges
            .iter()
            .filter(|&&(u, v)| index[u] != usize::MAX && index[v] != usize::MAX)
            .map(|&(u, v)| (index[u], index[v]))
            .collect();
        SimpleGraph::new(keep.len(), &edges).expect("induced subgraph of a simple graph")
    }

    /// Connected components as sorted vertex lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.neighbors();
        let mut seen = vec![false; self.vertex_count];
        let mut out = Vec::new();
        for s in 0..self.vertex_count {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s];
            let mut comp = Vec::new();
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &w in &adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_count <= 1 || self.components().len() == 1
    }

    pub fn is_bipartite(&self) -> bool {
        let adj = self.neighbors();
        let mut color = vec![u8::MAX; self.vertex_count];
        for s in 0..self.vertex_count {
            if color[s] != u8::MAX {
                continue;
            }
            color[s] = 0;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &w in &adj[u] {
                    if color[w] == u8::MAX {
                        color[w] = 1 - color[u];
                        stack.push(w);
                    } else if color[w] == color[u] {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// A motif `F`: a simple graph with at least one edge, plus an optional label.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Motif {
    graph: SimpleGraph,
    name: Option<String>,
}

/// Built-in names accepted by [`Motif::builtin`].
pub const BUILTIN_NAMES: [&str; 6] = ["C3", "C4", "C5", "K12", "K13", "K4"];

impl Motif {
    pub fn new(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let graph = SimpleGraph::new(vertex_count, edges)?;
        if graph.edge_count() == 0 {
            return Err(Error::Validation("a motif needs at least one edge".into()));
        }
        Ok(Self { graph, name: None })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Cycle `C_len`, `len >= 3`.
    pub fn cycle(len: usize) -> Result<Self> {
        if len < 3 {
            return Err(Error::Validation(format!("cycle length {len} < 3")));
        }
        let edges: Vec<_> = (0..len).map(|i| (i, (i + 1) % len)).collect();
        Ok(Self::new(len, &edges)?.with_name(format!("C{len}")))
    }

    /// Star `K_{1,arms}` with centre 0.
    pub fn star(arms: usize) -> Result<Self> {
        let edges: Vec<_> = (1..=arms).map(|i| (0, i)).collect();
        Ok(Self::new(arms + 1, &edges)?.with_name(format!("K1{arms}")))
    }

    /// Clique `K_r`, `r >= 2`.
    pub fn clique(r: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for u in 0..r {
            for v in u + 1..r {
                edges.push((u, v));
            }
        }
        Ok(Self::new(r, &edges)?.with_name(format!("K{r}")))
    }

    /// Path with `len` edges.
    pub fn path(len: usize) -> Result<Self> {
        let edges: Vec<_> = (0..len).map(|i| (i, i + 1)).collect();
        Ok(Self::new(len + 1, &edges)?.with_name(format!("P{len}")))
    }

    /// Resolve one of [`BUILTIN_NAMES`] (also accepts `C<k>`, `K1<k>` and `K<r>`).
    pub fn builtin(name: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("unknown built-in motif `{name}`"));
        let m = if let Some(rest) = name.strip_prefix("K1") {
            if rest.is_empty() {
                // K1 would be a single vertex; K1k is a star.
                return Err(bad());
            }
            match rest.parse::<usize>() {
                Ok(k) if k >= 1 => Self::star(k)?,
                _ => return Err(bad()),
            }
        } else if let Some(rest) = name.strip_prefix('K') {
            match rest.parse::<usize>() {
                Ok(r) if r >= 2 => Self::clique(r)?,
                _ => return Err(bad()),
            }
        } else if let Some(rest) = name.strip_prefix('C') {
            match rest.parse::<usize>() {
                Ok(l) if l >= 3 => Self::cycle(l)?,
                _ => return Err(bad()),
            }
        } else {
            return Err(bad());
        };
        Ok(m.with_name(name))
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Name if present, else a structural description.
    pub fn label(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => format!("F(v={},e={})", self.vertex_count(), self.edge_count()),
        }
    }

    pub fn graph(&self) -> &SimpleGraph {
        &self.graph
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.graph.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.graph.degrees()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// `2 * Delta_star`, where `Delta_star` is half the largest degree sum over an edge.
    pub fn delta_star_twice(&self) -> usize {
        let deg = self.degrees();
        self.edges()
            .iter()
            .map(|&(u, v)| deg[u] + deg[v])
            .max()
            .unwrap_or(0)
    }

    pub fn delta_star(&self) -> f64 {
        self.delta_star_twice() as f64 / 2.0
    }

    pub fn is_regular(&self) -> bool {
        let deg = self.degrees();
        deg.iter().all(|&d| d == deg[0])
    }

    pub fn is_connected(&self) -> bool {
        self.graph.is_connected()
    }

    pub fn is_bipartite(&self) -> bool {
        self.graph.is_bipartite()
    }

    /// Vertices of maximum degree, ascending.
    pub fn core_vertices(&self) -> Vec<usize> {
        let deg = self.degrees();
        let max = self.max_degree();
        (0..self.vertex_count())
            .filter(|&v| deg[v] == max)
            .collect()
    }

    /// `F*`: the induced subgraph on the maximum-degree vertices.
    pub fn core(&self) -> SimpleGraph {
        self.graph.induced(&self.core_vertices())
    }

    /// Independence polynomial of `F` itself.
    pub fn indep_poly(&self) -> Result<IndepPoly> {
        IndepPoly::of_graph(&self.graph)
    }

    /// Independence polynomial of the core `F*`.
    pub fn core_indep_poly(&self) -> Result<IndepPoly> {
        IndepPoly::of_graph(&self.core())
    }

    /// Relabel vertices: vertex `v` becomes `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.vertex_count() {
            return Err(Error::Validation("permutation length mismatch".into()));
        }
        let edges: Vec<_> = self
            .edges()
            .iter()
            .map(|&(u, v)| (perm[u], perm[v]))
            .collect();
        let mut m = Self::new(self.vertex_count(), &edges)?;
        m.name = self.name.clone();
        Ok(m)
    }

    /// Disjoint union `self ⊔ other`.
    pub fn disjoint_union(&self, other: &Motif) -> Motif {
        let shift = self.vertex_count();
        let mut edges = self.edges().to_vec();
        edges.extend(other.edges().iter().map(|&(u, v)| (u + shift, v + shift)));
        Motif::new(shift + other.vertex_count(), &edges).expect("union of motifs")
    }

    pub fn to_json(&self) -> MotifJson {
        MotifJson {
            name: self.label(),
            vertices: self.vertex_count(),
            edges: self.edges().iter().map(|&(u, v)| [u, v]).collect(),
        }
    }
}

impl fmt::Display for Motif {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Wire form of a motif.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifJson {
    #[serde(default)]
    pub name: String,
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
}

impl TryFrom<&MotifJson> for Motif {
    type Error = Error;

    fn try_from(j: &MotifJson) -> Result<Motif> {
        let edges: Vec<_> = j.edges.iter().map(|e| (e[0], e[1])).collect();
        let m = Motif::new(j.vertices, &edges)?;
        Ok(if j.name.is_empty() {
            m
        } else {
            m.with_name(j.name.clone())
        })
    }
}

/// A motif given either by built-in name or inline.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MotifRef {
    Named(String),
    Inline(MotifJson),
}

impl MotifRef {
    pub fn resolve(&self) -> Result<Motif> {
        match self {
            MotifRef::Named(n) => Motif::builtin(n),
            MotifRef::Inline(j) => Motif::try_from(j),
        }
    }

    pub fn from_motif(m: &Motif) -> MotifRef {
        match m.name() {
            Some(n)
                if Motif::builtin(n)
                    .map(|b| b.edges() == m.edges())
                    .unwrap_or(false) =>
            {
                MotifRef::Named(n.to_string())
            }
            _ => MotifRef::Inline(m.to_json()),
        }
    }
}

/// Parse a comma-separated list of built-in names.
pub fn parse_motif_list(list: &str) -> Result<Vec<Motif>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Motif::builtin)
        .collect()
}

/// A family of motifs sharing a common maximum degree.
#[derive(Clone, Debug)]
pub struct MotifFamily {
    motifs: Vec<Motif>,
    max_degree: usize,
    warnings: Vec<String>,
}

impl MotifFamily {
    /// Reject mixed maximum degrees unless `allow_mixed_delta`, in which case
    /// the largest degree is used and a warning is recorded.
    pub fn new(motifs: Vec<Motif>, allow_mixed_delta: bool) -> Result<Self> {
        if motifs.is_empty() {
            return Err(Error::Validation("empty motif family".into()));
        }
        let degs: Vec<usize> = motifs.iter().map(Motif::max_degree).collect();
        let max_degree = *degs.iter().max().unwrap();
        let mut warnings = Vec::new();
        if degs.iter().any(|&d| d != max_degree) {
            if !allow_mixed_delta {
                return Err(Error::Validation(format!(
                    "motifs have mixed maximum degrees {degs:?}"
                )));
            }
            warnings.push(format!(
                "mixed maximum degrees {degs:?}; using Delta = {max_degree}"
            ));
        }
        Ok(Self {
            motifs,
            max_degree,
            warnings,
        })
    }

    pub fn motifs(&self) -> &[Motif] {
        &self.motifs
    }

    pub fn len(&self) -> usize {
        self.motifs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motifs.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `Delta_star` of the family: max over motifs.
    pub fn delta_star(&self) -> f64 {
        self.motifs
            .iter()
            .map(Motif::delta_star)
            .fold(0.0, f64::max)
    }
}

/// `r_{n,p} = n^2 p^Delta log(1/p)`.
pub fn rate(n: usize, p: f64, max_degree: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("p = {p} is not in (0,1)")));
    }
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let n = n as f64;
    Ok(n * n * p.powi(max_degree as i32) * (1.0 / p).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve() {
        for name in BUILTIN_NAMES {
            let m = Motif::builtin(name).unwrap();
            assert_eq!(m.name(), Some(name));
        }
        assert_eq!(Motif::builtin("K12").unwrap().edge_count(), 2);
        assert_eq!(Motif::builtin("K4").unwrap().edge_count(), 6);
        assert!(Motif::builtin("X9").is_err());
        assert!(Motif::builtin("K1").is_err());
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Motif::new(3, &[(0, 3)]).is_err());
        assert!(Motif::new(3, &[(1, 1)]).is_err());
        assert!(Motif::new(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Motif::new(3, &[]).is_err());
    }

    #[test]
    fn delta_star_values() {
        for l in 3..8 {
            assert_eq!(Motif::cycle(l).unwrap().delta_star(), 2.0);
        }
        assert_eq!(Motif::star(2).unwrap().delta_star(), 1.5);
        assert_eq!(Motif::clique(4).unwrap().delta_star(), 3.0);
    }

    #[test]
    fn delta_star_bounds_on_corpus() {
        let corpus = [
            Motif::cycle(3).unwrap(),
            Motif::cycle(5).unwrap(),
            Motif::star(3).unwrap(),
            Motif::clique(4).unwrap(),
            Motif::path(3).unwrap(),
            Motif::new(4, &[(0, 1), (1, 2), (2, 0), (2, 3)]).unwrap(),
        ];
        for m in &corpus {
            let d = m.max_degree();
            let two = m.delta_star_twice();
            assert!(d < two && two <= 2 * d, "{m}");
        }
    }

    #[test]
    fn core_and_flags() {
        let k12 = Motif::star(2).unwrap();
        assert_eq!(k12.core().vertex_count(), 1);
        assert!(!k12.is_regular());
        let c4 = Motif::cycle(4).unwrap();
        assert_eq!(c4.core(), *c4.graph());
        assert!(c4.is_regular() && c4.is_bipartite() && c4.is_connected());
        let c3 = Motif::cycle(3).unwrap();
        assert!(!c3.is_bipartite());
        let two = c3.disjoint_union(&c3);
        assert!(!two.is_connected());
        // Triangle with a pendant: core is the single degree-3 vertex.
        let paw = Motif::new(4, &[(0, 1), (1, 2), (2, 0), (2, 3)]).unwrap();
        assert_eq!(paw.core_vertices(), vec![2]);
    }

    #[test]
    fn rate_examples() {
        let r = rate(100, 0.1, 2).unwrap();
        assert!((r - 100.0 * 100.0 * 0.01 * 10f64.ln()).abs() < 1e-9);
        assert!((r - 230.258_509_299_404_6).abs() < 1e-9);
        assert!((rate(1, 0.5, 2).unwrap() - 0.25 * 2f64.ln()).abs() < 1e-15);
        let e = std::f64::consts::E;
        assert!((rate(10, 1.0 / e, 2).unwrap() - 100.0 * (-2.0f64).exp()).abs() < 1e-12);
        assert!(rate(10, 0.0, 2).is_err());
        assert!(rate(10, 1.0, 2).is_err());
        assert!(rate(0, 0.5, 2).is_err());
    }

    #[test]
    fn family_rejects_mixed_delta() {
        let fam = vec![Motif::cycle(3).unwrap(), Motif::star(3).unwrap()];
        assert!(MotifFamily::new(fam.clone(), false).is_err());
        let f = MotifFamily::new(fam, true).unwrap();
        assert_eq!(f.max_degree(), 3);
        assert_eq!(f.warnings().len(), 1);
    }

    #[test]
    fn json_roundtrip() {
        let m = Motif::new(4, &[(0, 1), (1, 2), (2, 3)])
            .unwrap()
            .with_name("P3");
        let s = serde_json::to_string(&m.to_json()).unwrap();
        let back: MotifJson = serde_json::from_str(&s).unwrap();
        assert_eq!(Motif::try_from(&back).unwrap(), m);
        let r: MotifRef = serde_json::from_str("\"C4\"").unwrap();
        assert_eq!(r.resolve().unwrap().edge_count(), 4);
    }
}
