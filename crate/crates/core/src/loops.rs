//! Based and discrete loops, their weights, and the loop measure mass.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_subset, WeightedGraph};
use crate::linalg::{log_abs_det_lu, log_det_green, restricted_transition};

/// Loop given as a vertex sequence `x_1 .. x_n` closed by the step `x_n -> x_1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BasedLoop(pub Vec<usize>);

/// Equivalence class of based loops under rotation, stored as its
/// lexicographically smallest rotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiscreteLoop(Vec<usize>);

impl BasedLoop {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(1/n) prod P(x_i, x_{i+1})`.
    pub fn weight(&self, g: &WeightedGraph) -> Result<f64> {
        Ok(step_product(g, &self.0)? / self.0.len() as f64)
    }

    pub fn to_discrete(&self) -> Result<DiscreteLoop> {
        DiscreteLoop::new(self.0.clone())
    }
}

impl DiscreteLoop {
    /// Canonical representative of the rotation class of `seq`.
    pub fn new(seq: Vec<usize>) -> Result<Self> {
        if seq.is_empty() {
            return Err(Error::EmptyLoop);
        }
        let r = least_rotation(&seq);
        let mut v = Vec::with_capacity(seq.len());
        v.extend_from_slice(&seq[r..]);
        v.extend_from_slice(&seq[..r]);
        Ok(DiscreteLoop(v))
    }

    /// Builds the class and checks every step is an edge of `g`.
    pub fn on_graph(g: &WeightedGraph, seq: Vec<usize>) -> Result<Self> {
        step_product(g, &seq)?;
        Self::new(seq)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Smallest `p` with `x_{i+p} = x_i` cyclically; always divides the length.
    pub fn period(&self) -> usize {
        string_period(&self.0)
    }

    /// Number of based loops in the class that equal the canonical one, `n / p`.
    pub fn multiplicity(&self) -> usize {
        self.len() / self.period()
    }

    pub fn is_primitive(&self) -> bool {
        self.period() == self.len()
    }

    /// Class of the primitive root.
    pub fn primitive_root(&self) -> DiscreteLoop {
        DiscreteLoop(self.0[..self.period()].to_vec())
    }

    /// `mu(loop) = (1/m) prod P` where `m` is the multiplicity.
    pub fn weight(&self, g: &WeightedGraph) -> Result<f64> {
        Ok(step_product(g, &self.0)? / self.multiplicity() as f64)
    }

    /// Distinct vertices visited, sorted.
    pub fn support(&self) -> Vec<usize> {
        let mut v = self.0.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Undirected edges traversed, as `(min, max)` pairs (with repeats).
    pub fn steps(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.0.len();
        (0..n).map(move |i| {
            let (a, b) = (self.0[i], self.0[(i + 1) % n]);
            if a < b {
                (a, b)
            } else {
                (b, a)
            }
        })
    }

    pub fn crossing_counts(&self) -> CrossingCounts {
        let mut vertex = BTreeMap::new();
        let mut edge = BTreeMap::new();
        for &x in &self.0 {
            *vertex.entry(x).or_insert(0) += 1;
        }
        for e in self.steps() {
            *edge.entry(e).or_insert(0) += 1;
        }
        CrossingCounts { vertex, edge }
    }
}

/// Visits per vertex and traversals per undirected edge.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CrossingCounts {
    pub vertex: BTreeMap<usize, u32>,
    pub edge: BTreeMap<(usize, usize), u32>,
}

fn step_product(g: &WeightedGraph, seq: &[usize]) -> Result<f64> {
    if seq.is_empty() {
        return Err(Error::EmptyLoop);
    }
    let n = seq.len();
    let mut f = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (seq[i], seq[(i + 1) % n]);
        if a >= g.n() {
            return Err(Error::VertexOutOfRange(a));
        }
        if !g.has_edge(a, b) {
            return Err(Error::NonAdjacentStep(a, b));
        }
        f.push(g.p(a, b));
    }
    // sorted, so every rotation gives the same bits
    f.sort_by(f64::total_cmp);
    Ok(f.iter().product())
}

/// Index of the lexicographically least rotation (Booth's algorithm).
pub fn least_rotation<T: Ord>(s: &[T]) -> usize {
    let n = s.len();
    if n == 0 {
        return 0;
    }
    let at = |i: usize| &s[i % n];
    let mut f: Vec<isize> = vec![-1; 2 * n];
    let mut k = 0usize;
    for j in 1..2 * n {
        let sj = at(j);
        let mut i = f[j - k - 1];
        while i != -1 && sj != at(k + i as usize + 1) {
            if sj < at(k + i as usize + 1) {
                k = j - i as usize - 1;
            }
            i = f[i as usize];
        }
        if i == -1 && sj != at(k) {
            if sj < at(k) {
                k = j;
            }
            f[j - k] = -1;
        } else {
            f[j - k] = i + 1;
        }
    }
    k % n
}

/// Cyclic period via the prefix function: `n - border(n)` when it divides `n`.
pub fn string_period<T: Eq>(s: &[T]) -> usize {
    let n = s.len();
    if n == 0 {
        return 0;
    }
    let mut pi = vec![0usize; n];
    for i in 1..n {
        let mut k = pi[i - 1];
        while k > 0 && s[i] != s[k] {
            k = pi[k - 1];
        }
        if s[i] == s[k] {
            k += 1;
        }
        pi[i] = k;
    }
    let p = n - pi[n - 1];
    if n % p == 0 {
        p
    } else {
        n
    }
}

/// Mass of loops inside `F`: `-log det(I - P|_F)`, cross-checked against
/// `log(det G^(F) prod_F lambda)`.
pub fn total_mass(g: &WeightedGraph, subset: &[usize]) -> Result<f64> {
    check_subset(g.n(), subset)?;
    if subset.is_empty() {
        return Ok(0.0);
    }
    let m = subset.len();
    let p = restricted_transition(g, subset);
    let a = nalgebra::DMatrix::<f64>::identity(m, m) - p;
    let (sign, ld) = log_abs_det_lu(a);
    if sign <= 0.0 {
        return Err(Error::SingularSystem);
    }
    let via_lu = -ld;
    let via_green = log_det_green(g, subset)? + subset.iter().map(|&x| g.lambda(x).ln()).sum::<f64>();
    if (via_lu - via_green).abs() > 1e-10 * via_green.abs().max(1.0) {
        return Err(Error::Inconsistent { what: "total mass", lhs: via_lu, rhs: via_green });
    }
    Ok(via_lu)
}

/// Truncated mass from explicit enumeration.
#[derive(Debug, Clone, Copy)]
pub struct EnumeratedMass {
    pub value: f64,
    /// Upper bound on the mass of loops longer than the cutoff.
    pub tail_bound: f64,
    pub rho_hat: f64,
}

/// Tail bound `|F| rho^{L+1} / ((L+1)(1 - rho))` for loops longer than `l_max`.
pub fn tail_bound(size: usize, rho: f64, l_max: usize) -> f64 {
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    let l1 = (l_max + 1) as f64;
    size as f64 * rho.powf(l1) / (l1 * (1.0 - rho))
}

/// Sum of `(1/n) prod P` over all based closed walks in `F` of length at
/// most `l_max`, found by depth-first search.
pub fn enumerate_mass(g: &WeightedGraph, subset: &[usize], l_max: usize) -> Result<EnumeratedMass> {
    check_subset(g.n(), subset)?;
    let f = subset.len();
    let budget = (f as f64).powi(l_max as i32);
    if budget > 1e8 {
        return Err(Error::BudgetExceeded(format!("{f}^{l_max} walks")));
    }
    let mut inside = vec![false; g.n()];
    for &x in subset {
        inside[x] = true;
    }
    // by_len[n] = sum over based closed walks of length n of prod P
    let mut by_len = vec![0.0; l_max + 1];
    fn dfs(
        g: &WeightedGraph,
        inside: &[bool],
        start: usize,
        cur: usize,
        depth: usize,
        w: f64,
        l_max: usize,
        by_len: &mut [f64],
    ) {
        for &(y, _) in g.neighbors(cur) {
            if !inside[y] {
                continue;
            }
            let w2 = w * g.p(cur, y);
            if y == start {
                by_len[depth + 1] += w2;
            }
            if depth + 1 < l_max {
                dfs(g, inside, start, y, depth + 1, w2, l_max, by_len);
            }
        }
    }
    for &x in subset {
        dfs(g, &inside, x, x, 0, 1.0, l_max, &mut by_len);
    }
    let value = by_len.iter().enumerate().skip(1).map(|(n, s)| s / n as f64).sum();
    let rho = g.spectral_bound(subset);
    Ok(EnumeratedMass { value, tail_bound: tail_bound(f, rho, l_max), rho_hat: rho })
}

/// `sum_{n <= l_max} tr(P|_F^n) / n` by repeated multiplication.
pub fn power_trace_mass(g: &WeightedGraph, subset: &[usize], l_max: usize) -> Result<f64> {
    check_subset(g.n(), subset)?;
    let p = restricted_transition(g, subset);
    let mut q = p.clone();
    let mut s = 0.0;
    for n in 1..=l_max {
        s += q.trace() / n as f64;
        q = &q * &p;
    }
    Ok(s)
}

/// Probability that a primitive loop appears at least once in the soup of
/// intensity `alpha`: `1 - (1 - mu)^alpha`.
pub fn primitive_inclusion_prob(g: &WeightedGraph, lp: &DiscreteLoop, alpha: f64) -> Result<f64> {
    if !lp.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    let mu = lp.weight(g)?;
    Ok(-(alpha * (-mu).ln_1p()).exp_m1())
}
