//! Finner's inequality on finite product probability spaces, the stability
//! bounds for Hölder's inequality, and the inductive recovery of product
//! factors for near-equality instances.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{split_seed, CompensatedSum};

/// Largest product state space handled by brute force.
pub const MAX_STATES: usize = 10_000_000;
/// Slack on the normalization and weight hypotheses.
pub const HYPOTHESIS_TOL: f64 = 1e-12;
/// Slack on the stability bounds.
pub const BOUND_TOL: f64 = 1e-10;

/// `C̄_λ = sqrt(2 / (λ(1-λ)))`.
pub fn holder_constant(lambda: f64) -> f64 {
    (2.0 / (lambda * (1.0 - lambda))).sqrt()
}

/// `C_λ = 2 C̄_λ + 1/min(λ, 1-λ)`.
pub fn genholder_constant(lambda: f64) -> f64 {
    2.0 * holder_constant(lambda) + 1.0 / lambda.min(1.0 - lambda)
}

/// `C(λ, λ') = (λ+λ')^{-1/2} C_{λ/(λ+λ')}`.
pub fn pair_constant(l1: f64, l2: f64) -> f64 {
    (l1 + l2).powf(-0.5) * genholder_constant(l1 / (l1 + l2))
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// A nonnegative function on `Ω_A`, row-major over the coordinates of `set`
/// (last coordinate fastest).
#[derive(Clone, Debug, PartialEq)]
struct Tensor {
    set: Vec<usize>,
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    fn ones(set: Vec<usize>, spaces: &[Vec<f64>]) -> Self {
        let dims: Vec<usize> = set.iter().map(|&v| spaces[v].len()).collect();
        let len = dims.iter().product();
        Self {
            set,
            dims,
            data: vec![1.0; len],
        }
    }

    /// Product measure `μ_A` as an array aligned with `data`.
    fn measure(&self, spaces: &[Vec<f64>]) -> Vec<f64> {
        let st = strides(&self.dims);
        (0..self.data.len())
            .map(|idx| {
                self.set
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| spaces[v][idx / st[k] % self.dims[k]])
                    .product()
            })
            .collect()
    }

    fn integral(&self, spaces: &[Vec<f64>]) -> f64 {
        self.data
            .iter()
            .zip(self.measure(spaces))
            .map(|(f, m)| f * m)
            .collect::<CompensatedSum>()
            .value()
    }

    /// `∫ f dμ_v` as a function of the remaining coordinates.
    fn integrate_out(&self, v: usize, spaces: &[Vec<f64>]) -> Tensor {
        let k = self
            .set
            .iter()
            .position(|&u| u == v)
            .expect("coordinate in set");
        let st = strides(&self.dims);
        let (sk, dk) = (st[k], self.dims[k]);
        let mut set = self.set.clone();
        set.remove(k);
        let mut dims = self.dims.clone();
        dims.remove(k);
        let mut data = vec![0.0; self.data.len() / dk];
        for (idx, &f) in self.data.iter().enumerate() {
            let i = idx / sk % dk;
            let j = idx / (sk * dk) * sk + idx % sk;
            data[j] += f * spaces[v][i];
        }
        Tensor { set, dims, data }
    }

    /// Marginal density on coordinate `v`: `∫ f dμ_{A \ v}`.
    fn marginal(&self, v: usize, spaces: &[Vec<f64>]) -> Vec<f64> {
        let mut t = self.clone();
        for &u in &self.set {
            if u != v {
                t = t.integrate_out(u, spaces);
            }
        }
        t.data
    }

    /// `⊗_{v ∈ A} h_v` on the same index layout.
    fn product_like(&self, h: &BTreeMap<usize, Vec<f64>>) -> Vec<f64> {
        let st = strides(&self.dims);
        (0..self.data.len())
            .map(|idx| {
                self.set
                    .iter()
                    .enumerate()
                    .map(|(k, v)| h[v][idx / st[k] % self.dims[k]])
                    .product()
            })
            .collect()
    }

    fn l1_distance(&self, other: &[f64], spaces: &[Vec<f64>]) -> f64 {
        let m = self.measure(spaces);
        self.data
            .iter()
            .zip(other)
            .zip(&m)
            .map(|((a, b), w)| (a - b).abs() * w)
            .collect::<CompensatedSum>()
            .value()
    }
}

/// One set `A` of the system with its weight and function.
#[derive(Clone, Debug, PartialEq)]
struct Item {
    tensor: Tensor,
    lambda: f64,
    /// Added by a normalization pass with `f ≡ 1`.
    padding: bool,
}

/// A weighted set system over finite probability spaces with functions `f_A`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductInstance {
    spaces: Vec<Vec<f64>>,
    items: Vec<Item>,
}

/// Serialized instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceJson {
    pub spaces: Vec<Vec<f64>>,
    pub system: Vec<SetJson>,
    /// Sets without an entry here carry `f ≡ 1`.
    #[serde(default)]
    pub functions: Vec<FunctionJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetJson {
    #[serde(rename = "A")]
    pub set: Vec<usize>,
    pub lambda: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FunctionJson {
    #[serde(rename = "A_index")]
    pub index: usize,
    pub values: Vec<f64>,
}

impl ProductInstance {
    /// Validate and build. `system` entries are `(A, λ_A, values)` with values
    /// row-major over `A` in increasing vertex order.
    pub fn new(spaces: Vec<Vec<f64>>, system: Vec<(Vec<usize>, f64, Vec<f64>)>) -> Result<Self> {
        for (v, s) in spaces.iter().enumerate() {
            if s.is_empty() || s.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
                return Err(Error::Validation(format!(
                    "space {v} needs positive masses"
                )));
            }
            let total: f64 = s.iter().sum();
            if (total - 1.0).abs() > HYPOTHESIS_TOL {
                return Err(Error::Validation(format!(
                    "masses of space {v} sum to {total}"
                )));
            }
        }
        if system.is_empty() {
            return Err(Error::Validation("empty set system".into()));
        }
        let mut items = Vec::with_capacity(system.len());
        for (k, (mut set, lambda, values)) in system.into_iter().enumerate() {
            set.sort_unstable();
            if set.is_empty()
                || set.windows(2).any(|w| w[0] == w[1])
                || set.iter().any(|&v| v >= spaces.len())
            {
                return Err(Error::Validation(format!(
                    "set {k} must be a nonempty subset of the index set"
                )));
            }
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::Validation(format!(
                    "weight of set {k} must be positive"
                )));
            }
            let mut tensor = Tensor::ones(set, &spaces);
            if values.len() != tensor.data.len() {
                return Err(Error::Validation(format!(
                    "set {k} needs {} values, got {}",
                    tensor.data.len(),
                    values.len()
                )));
            }
            if values.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(Error::Validation(format!(
                    "function {k} must be nonnegative"
                )));
            }
            tensor.data = values;
            let integral = tensor.integral(&spaces);
            if integral > 1.0 + HYPOTHESIS_TOL {
                return Err(Error::Validation(format!(
                    "function {k} has integral {integral} > 1"
                )));
            }
            items.push(Item {
                tensor,
                lambda,
                padding: false,
            });
        }
        let inst = Self { spaces, items };
        for v in 0..inst.spaces.len() {
            let cover = inst.cover(v);
            if cover > 1.0 + HYPOTHESIS_TOL {
                return Err(Error::Validation(format!(
                    "weights through coordinate {v} sum to {cover} > 1"
                )));
            }
        }
        let states: f64 = inst.spaces.iter().map(|s| s.len() as f64).product();
        if states > MAX_STATES as f64 {
            return Err(Error::Capability(format!(
                "product space has {states} points (limit {MAX_STATES})"
            )));
        }
        Ok(inst)
    }

    pub fn from_json(j: &InstanceJson) -> Result<Self> {
        let mut values: Vec<Option<Vec<f64>>> = vec![None; j.system.len()];
        for f in &j.functions {
            if f.index >= j.system.len() {
                return Err(Error::Validation(format!(
                    "function refers to missing set {}",
                    f.index
                )));
            }
            values[f.index] = Some(f.values.clone());
        }
        let system = j
            .system
            .iter()
            .zip(values)
            .map(|(s, v)| {
                let mut set = s.set.clone();
                set.sort_unstable();
                let len = set
                    .iter()
                    .map(|&u| j.spaces.get(u).map_or(1, Vec::len))
                    .product();
                (s.set.clone(), s.lambda, v.unwrap_or_else(|| vec![1.0; len]))
            })
            .collect();
        Self::new(j.spaces.clone(), system)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> InstanceJson {
        InstanceJson {
            spaces: self.spaces.clone(),
            system: self
                .items
                .iter()
                .map(|it| SetJson {
                    set: it.tensor.set.clone(),
                    lambda: it.lambda,
                })
                .collect(),
            functions: self
                .items
                .iter()
                .enumerate()
                .map(|(k, it)| FunctionJson {
                    index: k,
                    values: it.tensor.data.clone(),
                })
                .collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.spaces.len()
    }

    pub fn spaces(&self) -> &[Vec<f64>] {
        &self.spaces
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn set(&self, k: usize) -> &[usize] {
        &self.items[k].tensor.set
    }

    pub fn lambda(&self, k: usize) -> f64 {
        self.items[k].lambda
    }

    pub fn values(&self, k: usize) -> &[f64] {
        &self.items[k].tensor.data
    }

    /// `Σ_{A ∋ v} λ_A`.
    pub fn cover(&self, v: usize) -> f64 {
        self.items
            .iter()
            .filter(|it| it.tensor.set.contains(&v))
            .map(|it| it.lambda)
            .sum()
    }

    /// The partition `ℬ`: `u ~ v` iff no set contains exactly one of them.
    /// Classes are sorted and ordered by their smallest element.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let n = self.spaces.len();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut assigned = vec![false; n];
        for u in 0..n {
            if assigned[u] {
                continue;
            }
            let class: Vec<usize> = (u..n)
                .filter(|&v| {
                    !assigned[v]
                        && self
                            .items
                            .iter()
                            .all(|it| it.tensor.set.contains(&u) == it.tensor.set.contains(&v))
                })
                .collect();
            for &v in &class {
                assigned[v] = true;
            }
            classes.push(class);
        }
        classes
    }

    /// Add `{v}` with `f ≡ 1` and weight `1 - Σ_{A∋v} λ_A` wherever the cover is
    /// short of 1; the Finner integral is unchanged.
    pub fn pad_to_cover(&self) -> Self {
        let mut out = self.clone();
        for v in 0..self.spaces.len() {
            let deficit = 1.0 - self.cover(v);
            if deficit > HYPOTHESIS_TOL {
                out.items.push(Item {
                    tensor: Tensor::ones(vec![v], &self.spaces),
                    lambda: deficit,
                    padding: true,
                });
            }
        }
        out
    }

    /// Merge each class of `ℬ` into one coordinate whose space is the product of
    /// its members' spaces (row-major over members); returns the classes too.
    pub fn merge_classes(&self) -> (Self, Vec<Vec<usize>>) {
        let classes = self.classes();
        let mut class_of = vec![0; self.spaces.len()];
        for (c, cl) in classes.iter().enumerate() {
            for &v in cl {
                class_of[v] = c;
            }
        }
        let spaces: Vec<Vec<f64>> = classes
            .iter()
            .map(|cl| {
                let t = Tensor::ones(cl.clone(), &self.spaces);
                t.measure(&self.spaces)
            })
            .collect();
        let items = self
            .items
            .iter()
            .map(|it| {
                let old = &it.tensor;
                let mut new_set: Vec<usize> = old.set.iter().map(|&v| class_of[v]).collect();
                new_set.sort_unstable();
                new_set.dedup();
                let mut tensor = Tensor::ones(new_set.clone(), &spaces);
                let old_st = strides(&old.dims);
                let pos: BTreeMap<usize, usize> =
                    old.set.iter().enumerate().map(|(k, &v)| (v, k)).collect();
                let new_st = strides(&tensor.dims);
                for idx in 0..tensor.data.len() {
                    let mut old_idx = 0;
                    for (k, &c) in new_set.iter().enumerate() {
                        let flat = idx / new_st[k] % tensor.dims[k];
                        let members = &classes[c];
                        let mdims: Vec<usize> =
                            members.iter().map(|&v| self.spaces[v].len()).collect();
                        let mst = strides(&mdims);
                        for (m, &v) in members.iter().enumerate() {
                            old_idx += (flat / mst[m] % mdims[m]) * old_st[pos[&v]];
                        }
                    }
                    tensor.data[idx] = old.data[old_idx];
                }
                Item {
                    tensor,
                    lambda: it.lambda,
                    padding: it.padding,
                }
            })
            .collect();
        (Self { spaces, items }, classes)
    }
}

/// `∫_Ω Π_A f_A^{λ_A} ∘ π_A dμ` by exhaustive summation.
pub fn finner_integral(inst: &ProductInstance) -> f64 {
    let dims: Vec<usize> = inst.spaces.iter().map(Vec::len).collect();
    let total: usize = dims.iter().product();
    let powered: Vec<Vec<f64>> = inst
        .items
        .iter()
        .map(|it| {
            it.tensor
                .data
                .iter()
                .map(|&x| if x == 0.0 { 0.0 } else { x.powf(it.lambda) })
                .collect()
        })
        .collect();
    let item_strides: Vec<Vec<(usize, usize)>> = inst
        .items
        .iter()
        .map(|it| {
            let st = strides(&it.tensor.dims);
            it.tensor.set.iter().copied().zip(st).collect()
        })
        .collect();
    let mut omega = vec![0usize; dims.len()];
    let mut sum = CompensatedSum::new();
    for _ in 0..total {
        let mass: f64 = omega
            .iter()
            .enumerate()
            .map(|(v, &i)| inst.spaces[v][i])
            .product();
        let mut prod = mass;
        for (pw, st) in powered.iter().zip(&item_strides) {
            let idx: usize = st.iter().map(|&(v, s)| omega[v] * s).sum();
            prod *= pw[idx];
            if prod == 0.0 {
                break;
            }
        }
        sum.add(prod);
        for v in (0..dims.len()).rev() {
            omega[v] += 1;
            if omega[v] < dims[v] {
                break;
            }
            omega[v] = 0;
        }
    }
    sum.value()
}

/// Outcome of the single-function Hölder stability check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HolderReport {
    pub epsilon: f64,
    pub bound: f64,
    pub l1: f64,
    pub pass: bool,
}

fn check_measure(nu: &[f64]) -> Result<()> {
    if nu.is_empty()
        || nu.iter().any(|&m| !(m > 0.0))
        || (nu.iter().sum::<f64>() - 1.0).abs() > HYPOTHESIS_TOL
    {
        return Err(Error::Validation(
            "measure must have positive masses summing to 1".into(),
        ));
    }
    Ok(())
}

fn integrate(f: &[f64], nu: &[f64]) -> f64 {
    f.iter()
        .zip(nu)
        .map(|(a, b)| a * b)
        .collect::<CompensatedSum>()
        .value()
}

fn pow0(x: f64, l: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.powf(l)
    }
}

/// `||g - 1||_1 <= 2 C̄_λ ε^{1/2}` with `ε = 1 - ∫ g^λ dν`, given `∫ g dν <= 1`.
pub fn holder_stability_check(g: &[f64], lambda: f64, nu: &[f64]) -> Result<HolderReport> {
    check_measure(nu)?;
    if g.len() != nu.len() || g.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::Validation(
            "g must be nonnegative with one value per point".into(),
        ));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Validation(format!(
            "lambda = {lambda} is not in (0,1)"
        )));
    }
    let mass = integrate(g, nu);
    if mass > 1.0 + HYPOTHESIS_TOL {
        return Err(Error::Validation(format!(
            "hypothesis violated: integral of g is {mass} > 1"
        )));
    }
    let powered: Vec<f64> = g.iter().map(|&x| pow0(x, lambda)).collect();
    let epsilon = (1.0 - integrate(&powered, nu)).clamp(0.0, 1.0);
    let bound = 2.0 * holder_constant(lambda) * epsilon.sqrt();
    let diff: Vec<f64> = g.iter().map(|x| (x - 1.0).abs()).collect();
    let l1 = integrate(&diff, nu);
    Ok(HolderReport {
        epsilon,
        bound,
        l1,
        pass: l1 <= bound + BOUND_TOL,
    })
}

/// One pair `(k, l)` of the generalized Hölder check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairReport {
    pub k: usize,
    pub l: usize,
    pub distance: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenHolderReport {
    pub epsilon: f64,
    pub pairs: Vec<PairReport>,
    pub pass: bool,
}

/// `||f_k - f_l||_1 <= C(λ_k, λ_l) ε^{1/2}` for all pairs, with
/// `ε = 1 - ∫ Π f_i^{λ_i} dμ`, given `Σ λ_i <= 1` and `∫ f_i dμ <= 1`.
pub fn genholder_stability_check(
    fs: &[Vec<f64>],
    lambdas: &[f64],
    mu: &[f64],
) -> Result<GenHolderReport> {
    check_measure(mu)?;
    if fs.len() < 2 || fs.len() != lambdas.len() {
        return Err(Error::Validation(
            "need at least two functions, one weight each".into(),
        ));
    }
    if lambdas.iter().any(|&l| !(l > 0.0)) || lambdas.iter().sum::<f64>() > 1.0 + HYPOTHESIS_TOL {
        return Err(Error::Validation(
            "weights must be positive with sum at most 1".into(),
        ));
    }
    for (i, f) in fs.iter().enumerate() {
        if f.len() != mu.len() || f.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::Validation(format!(
                "function {i} must be nonnegative with one value per point"
            )));
        }
        let m = integrate(f, mu);
        if m > 1.0 + HYPOTHESIS_TOL {
            return Err(Error::Validation(format!(
                "hypothesis violated: integral of f_{i} is {m} > 1"
            )));
        }
    }
    let prod: Vec<f64> = (0..mu.len())
        .map(|x| {
            fs.iter()
                .zip(lambdas)
                .map(|(f, &l)| pow0(f[x], l))
                .product()
        })
        .collect();
    let epsilon = (1.0 - integrate(&prod, mu)).clamp(0.0, 1.0);
    let mut pairs = Vec::new();
    for k in 0..fs.len() {
        for l in k + 1..fs.len() {
            let diff: Vec<f64> = fs[k]
                .iter()
                .zip(&fs[l])
                .map(|(a, b)| (a - b).abs())
                .collect();
            let distance = integrate(&diff, mu);
            let bound = pair_constant(lambdas[k], lambdas[l]) * epsilon.sqrt();
            pairs.push(PairReport {
                k,
                l,
                distance,
                bound,
                pass: distance <= bound + BOUND_TOL,
            });
        }
    }
    let pass = pairs.iter().all(|p| p.pass);
    Ok(GenHolderReport {
        epsilon,
        pairs,
        pass,
    })
}

/// Recovered factors `h_B` and how well they explain each `f_A`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorRecovery {
    /// The classes `B ∈ ℬ` (original coordinates).
    pub classes: Vec<Vec<usize>>,
    /// `h_B` row-major over the members of `B`, each with `∫ h_B dμ_B = 1`.
    pub factors: Vec<Vec<f64>>,
    /// `||f_A - ⊗_{B⊆A} h_B||_1` per set of the original system.
    pub residuals: Vec<f64>,
    /// `1 - ∫ Π f_A^{λ_A}`.
    pub epsilon: f64,
}

/// Induction over the coordinates of a padded, class-merged system.
fn recover(coords: &[usize], items: &[Item], spaces: &[Vec<f64>]) -> BTreeMap<usize, Vec<f64>> {
    let n = coords.len();
    let full: Vec<&Item> = items.iter().filter(|it| it.tensor.set.len() == n).collect();
    if n == 1 || full.len() == items.len() {
        // Base case: marginals of the first genuine function, normalized.
        let source = items
            .iter()
            .find(|it| !it.padding && it.tensor.set.len() == n);
        return coords
            .iter()
            .map(|&v| {
                let ones = vec![1.0; spaces[v].len()];
                let h = match source {
                    Some(it) => {
                        let m = it.tensor.marginal(v, spaces);
                        let total = integrate(&m, &spaces[v]);
                        if total > 0.0 {
                            m.iter().map(|x| x / total).collect()
                        } else {
                            ones
                        }
                    }
                    None => ones,
                };
                (v, h)
            })
            .collect();
    }
    if !full.is_empty() {
        let lambda_star: f64 = full.iter().map(|it| it.lambda).sum();
        let rest: Vec<Item> = items
            .iter()
            .filter(|it| it.tensor.set.len() < n)
            .map(|it| Item {
                lambda: it.lambda / (1.0 - lambda_star),
                ..it.clone()
            })
            .collect();
        return recover(coords, &rest, spaces);
    }
    let contract = |v: usize| -> (Vec<usize>, Vec<Item>) {
        let cs: Vec<usize> = coords.iter().copied().filter(|&u| u != v).collect();
        let its = items
            .iter()
            .filter_map(|it| {
                if !it.tensor.set.contains(&v) {
                    Some(it.clone())
                } else if it.tensor.set.len() == 1 {
                    None
                } else {
                    Some(Item {
                        tensor: it.tensor.integrate_out(v, spaces),
                        ..it.clone()
                    })
                }
            })
            .collect();
        (cs, its)
    };
    let (w, z) = (coords[0], coords[1]);
    let (cw, iw) = contract(w);
    let (cz, iz) = contract(z);
    let mut h = recover(&cw, &iw, spaces);
    let hz = recover(&cz, &iz, spaces);
    h.insert(w, hz[&w].clone());
    h
}

/// Build `h_B` following the induction over `|V|` with pivots the two
/// smallest coordinates; the base case uses the normalized marginals of the
/// first non-padding function.
pub fn recover_factors(inst: &ProductInstance) -> FactorRecovery {
    let epsilon = (1.0 - finner_integral(inst)).max(0.0);
    let (merged, classes) = inst.merge_classes();
    let padded = merged.pad_to_cover();
    let coords: Vec<usize> = (0..merged.spaces.len()).collect();
    let h = recover(&coords, &padded.items, &padded.spaces);
    let residuals = merged
        .items
        .iter()
        .map(|it| {
            it.tensor
                .l1_distance(&it.tensor.product_like(&h), &merged.spaces)
        })
        .collect();
    FactorRecovery {
        classes,
        factors: coords.iter().map(|c| h[c].clone()).collect(),
        residuals,
        epsilon,
    }
}

/// Fitted stability law `residual <= C ε^c`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Calibration {
    pub constant: f64,
    pub exponent: f64,
}

impl Calibration {
    pub fn bound(&self, epsilon: f64) -> f64 {
        self.constant * epsilon.powf(self.exponent)
    }

    /// Least-squares slope of `log r` on `log ε`, then the smallest constant
    /// covering every point. Points with `ε` or `r` at round-off level are skipped.
    pub fn fit(points: &[(f64, f64)]) -> Option<Self> {
        let pts: Vec<(f64, f64)> = points
            .iter()
            .filter(|(e, r)| *e > 1e-12 && *r > 1e-12)
            .map(|(e, r)| (e.ln(), r.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let k = pts.len() as f64;
        let (mx, my) = (
            pts.iter().map(|p| p.0).sum::<f64>() / k,
            pts.iter().map(|p| p.1).sum::<f64>() / k,
        );
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx <= 0.0 {
            return None;
        }
        let exponent = sxy / sxx;
        let constant = pts
            .iter()
            .map(|(x, y)| (y - exponent * x).exp())
            .fold(0.0, f64::max);
        Some(Self { constant, exponent })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HbReport {
    pub class: Vec<usize>,
    pub slack: f64,
    pub epsilon: f64,
    pub distance: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `||h_B - 1||_1 <= C ε^c` for a class `B` with `Σ_{A⊇B} λ_A < 1`.
pub fn remark_hb1_check(
    inst: &ProductInstance,
    class: &[usize],
    cal: &Calibration,
) -> Result<HbReport> {
    let rec = recover_factors(inst);
    let mut sorted = class.to_vec();
    sorted.sort_unstable();
    let b = rec
        .classes
        .iter()
        .position(|c| *c == sorted)
        .ok_or_else(|| Error::Validation(format!("{class:?} is not a class of the system")))?;
    let covering: f64 = inst
        .items
        .iter()
        .filter(|it| sorted.iter().all(|v| it.tensor.set.contains(v)))
        .map(|it| it.lambda)
        .sum();
    let slack = 1.0 - covering;
    if slack <= HYPOTHESIS_TOL {
        return Err(Error::Validation(format!(
            "class {class:?} has no slack (weights sum to {covering})"
        )));
    }
    let member_dims: Vec<usize> = sorted.iter().map(|&v| inst.spaces[v].len()).collect();
    let t = Tensor {
        set: sorted.clone(),
        dims: member_dims,
        data: rec.factors[b].clone(),
    };
    let ones = vec![1.0; t.data.len()];
    let distance = t.l1_distance(&ones, &inst.spaces);
    let bound = cal.bound(rec.epsilon);
    Ok(HbReport {
        class: sorted,
        slack,
        epsilon: rec.epsilon,
        distance,
        bound,
        pass: distance <= bound + 1e-9,
    })
}

/// Random instance with `|V| <= max_v`, `|Ω_v| <= max_omega`, `|A| <= max_sets`.
/// Weights are scaled so the largest cover is at most 1 (exactly 1 half the
/// time); integrals of the `f_A` are at most 1.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    max_v: usize,
    max_omega: usize,
    max_sets: usize,
) -> ProductInstance {
    let nv = rng.gen_range(1..=max_v);
    let spaces: Vec<Vec<f64>> = (0..nv)
        .map(|_| {
            let k = rng.gen_range(1..=max_omega);
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|x| x / s).collect()
        })
        .collect();
    let nsets = rng.gen_range(1..=max_sets);
    let mut sets: Vec<Vec<usize>> = (0..nsets)
        .map(|_| loop {
            let set: Vec<usize> = (0..nv).filter(|_| rng.gen_bool(0.5)).collect();
            if !set.is_empty() {
                break set;
            }
        })
        .collect();
    sets.sort();
    let mut lambdas: Vec<f64> = (0..nsets).map(|_| rng.gen_range(0.05..1.0)).collect();
    let max_cover = (0..nv)
        .map(|v| {
            sets.iter()
                .zip(&lambdas)
                .filter(|(s, _)| s.contains(&v))
                .map(|(_, l)| l)
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let scale = if rng.gen_bool(0.5) {
        1.0
    } else {
        rng.gen_range(0.3..1.0)
    };
    lambdas.iter_mut().for_each(|l| *l *= scale / max_cover);
    let system = sets
        .into_iter()
        .zip(lambdas)
        .map(|(set, lambda)| {
            let t = Tensor::ones(set.clone(), &spaces);
            let mut values: Vec<f64> = (0..t.data.len())
                .map(|_| {
                    if rng.gen_bool(0.15) {
                        0.0
                    } else {
                        rng.gen_range(0.0..3.0)
                    }
                })
                .collect();
            let total = integrate(&values, &t.measure(&spaces));
            let target = if rng.gen_bool(0.5) {
                1.0
            } else {
                rng.gen_range(0.3..1.0)
            };
            if total > 0.0 {
                values.iter_mut().for_each(|x| *x *= target / total);
            }
            (set, lambda, values)
        })
        .collect();
    ProductInstance::new(spaces, system).expect("generated instance satisfies the hypotheses")
}

/// Equality instance: `f_A = ⊗_{v∈A} h_v` with unit-mean `h_v` and every
/// cover exactly 1 (sets are given; weights are rescaled per the sets).
pub fn product_instance(
    spaces: Vec<Vec<f64>>,
    system: &[(Vec<usize>, f64)],
    h: &[Vec<f64>],
) -> Result<ProductInstance> {
    let entries = system
        .iter()
        .map(|(set, lambda)| {
            let mut sorted = set.clone();
            sorted.sort_unstable();
            let t = Tensor::ones(sorted.clone(), &spaces);
            let hm: BTreeMap<usize, Vec<f64>> = sorted.iter().map(|&v| (v, h[v].clone())).collect();
            (sorted, *lambda, t.product_like(&hm))
        })
        .collect();
    ProductInstance::new(spaces, entries)
}

/// Unit-mean random function on a space.
pub fn random_unit_mean<R: Rng>(rng: &mut R, space: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = space.iter().map(|_| rng.gen_range(0.1..2.0)).collect();
    let m = integrate(&raw, space);
    raw.iter().map(|x| x / m).collect()
}

/// Multiply each `f_A` by `1 + t u_A` (`u_A` in `[-0.1, 0.1]` drawn from `rng`)
/// and rescale so every integral stays at most 1.
pub fn perturb<R: Rng>(inst: &ProductInstance, t: f64, rng: &mut R) -> ProductInstance {
    let mut out = inst.clone();
    for it in &mut out.items {
        for x in &mut it.tensor.data {
            *x *= 1.0 + t * rng.gen_range(-0.1..0.1);
        }
        let total = it.tensor.integral(&out.spaces);
        if total > 1.0 {
            it.tensor.data.iter_mut().for_each(|x| *x /= total);
        }
    }
    out
}

/// Summary of a randomized suite.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub count: usize,
    pub failures: usize,
    /// Largest integral (Finner) or largest `value / bound` ratio (Hölder).
    pub worst: f64,
}

fn suite_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split_seed(seed, index))
}

/// `count` random instances; failure means an integral above `1 + 1e-10`.
pub fn finner_suite(count: usize, seed: u64) -> SuiteReport {
    let vals: Vec<f64> = (0..count as u64)
        .into_par_iter()
        .map(|i| finner_integral(&random_instance(&mut suite_rng(seed, i), 4, 4, 5)))
        .collect();
    SuiteReport {
        count,
        failures: vals.iter().filter(|&&v| v > 1.0 + BOUND_TOL).count(),
        worst: vals.iter().copied().fold(0.0, f64::max),
    }
}

/// `count` random `(g, λ, ν)` on spaces of at most 8 points.
pub fn holder_suite(count: usize, seed: u64) -> Result<SuiteReport> {
    let reps: Vec<HolderReport> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = suite_rng(seed, i);
            let k = rng.gen_range(1..=8);
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let nu: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let spread = rng.gen_range(0.0..2.0);
            let mut g: Vec<f64> = (0..k)
                .map(|_| (1.0 + spread * rng.gen_range(-1.0f64..1.0)).max(0.0))
                .collect();
            let m = integrate(&g, &nu);
            let target = if rng.gen_bool(0.5) {
                1.0
            } else {
                rng.gen_range(0.2..1.0)
            };
            if m > 0.0 {
                g.iter_mut().for_each(|x| *x *= target / m);
            }
            holder_stability_check(&g, rng.gen_range(0.01..0.99), &nu)
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport {
        count,
        failures: reps.iter().filter(|r| !r.pass).count(),
        worst: reps
            .iter()
            .map(|r| if r.bound > 0.0 { r.l1 / r.bound } else { r.l1 })
            .fold(0.0, f64::max),
    })
}

/// `count` random classical Hölder pairs (`λ = (1/2, 1/2)`).
pub fn genholder_suite(count: usize, seed: u64) -> Result<SuiteReport> {
    let reps: Vec<GenHolderReport> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = suite_rng(seed, i);
            let k = rng.gen_range(1..=8);
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let mu: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let fs: Vec<Vec<f64>> = (0..2)
                .map(|_| {
                    let mut f: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..2.0)).collect();
                    let m = integrate(&f, &mu);
                    let target = if rng.gen_bool(0.5) {
                        1.0
                    } else {
                        rng.gen_range(0.2..1.0)
                    };
                    f.iter_mut().for_each(|x| *x *= target / m);
                    f
                })
                .collect();
            genholder_stability_check(&fs, &[0.5, 0.5], &mu)
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport {
        count,
        failures: reps.iter().filter(|r| !r.pass).count(),
        worst: reps
            .iter()
            .flat_map(|r| r.pairs.iter())
            .map(|p| {
                if p.bound > 0.0 {
                    p.distance / p.bound
                } else {
                    p.distance
                }
            })
            .fold(0.0, f64::max),
    })
}
