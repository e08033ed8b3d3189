//! Finite weighted graphs with killing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Connected undirected graph with positive conductances and nonnegative
/// killing. `lambda[x]` is the total conductance at `x` plus its killing.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
    kappa: Vec<f64>,
    lambda: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
}

/// On-disk form: `{"n": .., "edges": [{"u":..,"v":..,"c":..}], "kappa": [..]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<EdgeSpec>,
    pub kappa: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct EdgeSpec {
    pub u: usize,
    pub v: usize,
    pub c: f64,
}

#[derive(Debug, Clone)]
pub struct GraphBuilder {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    kappa: Vec<f64>,
    allow_zero_killing: bool,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Self {
        GraphBuilder { n, edges: Vec::new(), kappa: vec![0.0; n], allow_zero_killing: false }
    }

    pub fn edge(mut self, u: usize, v: usize, c: f64) -> Self {
        self.edges.push((u, v, c));
        self
    }

    pub fn killing(mut self, kappa: Vec<f64>) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn uniform_killing(mut self, k: f64) -> Self {
        self.kappa = vec![k; self.n];
        self
    }

    /// Skip the "some killing is positive" check and test the spectral
    /// radius of P directly instead.
    pub fn allow_zero_killing(mut self, yes: bool) -> Self {
        self.allow_zero_killing = yes;
        self
    }

    pub fn build(self) -> Result<WeightedGraph> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one vertex".into()));
        }
        if self.kappa.len() != n {
            return Err(Error::InvalidArgument(format!(
                "killing vector has length {} for {} vertices",
                self.kappa.len(),
                n
            )));
        }
        for (x, &k) in self.kappa.iter().enumerate() {
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::NegativeKilling(x));
            }
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(self.edges.len());
        for &(u, v, c) in &self.edges {
            if u >= n || v >= n {
                return Err(Error::BadEdge(u, v, "endpoint out of range"));
            }
            if u == v {
                return Err(Error::BadEdge(u, v, "self-loop"));
            }
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::NonPositiveConductance(u, v));
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            adj[a].push((b, c));
            adj[b].push((a, c));
            edges.push((a, b, c));
        }
        for (x, row) in adj.iter_mut().enumerate() {
            row.sort_by_key(|e| e.0);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                let y = row.windows(2).find(|w| w[0].0 == w[1].0).unwrap()[0].0;
                return Err(Error::BadEdge(x, y, "duplicate edge"));
            }
        }
        edges.sort_by(|p, q| (p.0, p.1).cmp(&(q.0, q.1)));
        let lambda: Vec<f64> = (0..n)
            .map(|x| adj[x].iter().map(|e| e.1).sum::<f64>() + self.kappa[x])
            .collect();
        let g = WeightedGraph { adj, kappa: self.kappa, lambda, edges };
        if !g.is_connected() {
            return Err(Error::DisconnectedGraph);
        }
        if g.kappa.iter().all(|&k| k == 0.0) {
            if !self.allow_zero_killing {
                return Err(Error::AllKillingZeroWithoutOverride);
            }
            let all: Vec<usize> = (0..n).collect();
            let rho = g.spectral_bound(&all);
            if rho >= 1.0 - 1e-12 {
                return Err(Error::NotSubstochastic(rho));
            }
        }
        Ok(g)
    }
}

impl WeightedGraph {
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn lambda(&self, x: usize) -> f64 {
        self.lambda[x]
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    pub fn kappa(&self, x: usize) -> f64 {
        self.kappa[x]
    }

    pub fn kappas(&self) -> &[f64] {
        &self.kappa
    }

    /// Sorted neighbour list of `x` with conductances.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adj[x]
    }

    /// Edges as `(u, v, c)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn conductance(&self, x: usize, y: usize) -> f64 {
        match self.adj[x].binary_search_by_key(&y, |e| e.0) {
            Ok(i) => self.adj[x][i].1,
            Err(_) => 0.0,
        }
    }

    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        x < self.n() && y < self.n() && self.adj[x].binary_search_by_key(&y, |e| e.0).is_ok()
    }

    /// One-step transition probability `C(x,y) / lambda(x)`.
    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.conductance(x, y) / self.lambda[x]
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for &(y, _) in &self.adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == n
    }

    /// Same conductances, killing replaced by `k` everywhere.
    pub fn with_uniform_killing(&self, k: f64) -> Result<WeightedGraph> {
        self.with_killing(vec![k; self.n()])
    }

    pub fn with_killing(&self, kappa: Vec<f64>) -> Result<WeightedGraph> {
        let mut b = GraphBuilder::new(self.n()).killing(kappa);
        for &(u, v, c) in &self.edges {
            b = b.edge(u, v, c);
        }
        b.build()
    }

    /// Certified upper bound on the spectral radius of `P` restricted to
    /// `subset`. `P` is reversible so its spectrum is real and any positive
    /// vector gives a Collatz-Wielandt bound; the row-sum bound caps it.
    pub fn spectral_bound(&self, subset: &[usize]) -> f64 {
        let m = subset.len();
        if m == 0 {
            return 0.0;
        }
        let mut pos = vec![usize::MAX; self.n()];
        for (i, &x) in subset.iter().enumerate() {
            pos[x] = i;
        }
        let apply = |v: &[f64], out: &mut [f64]| {
            for (i, &x) in subset.iter().enumerate() {
                let mut s = 0.0;
                for &(y, c) in &self.adj[x] {
                    let j = pos[y];
                    if j != usize::MAX {
                        s += c * v[j];
                    }
                }
                out[i] = s / self.lambda[x];
            }
        };
        let ones = vec![1.0; m];
        let mut pv = vec![0.0; m];
        apply(&ones, &mut pv);
        let gersh = pv.iter().cloned().fold(0.0, f64::max);
        let mut best = gersh;
        let mut v = ones;
        // lazy iteration so periodic chains converge too
        for _ in 0..50 {
            apply(&v, &mut pv);
            let cw = v.iter().zip(&pv).map(|(a, b)| b / a).fold(0.0, f64::max);
            best = best.min(cw);
            let mean = pv.iter().sum::<f64>() / m as f64;
            let floor = 1e-9 * mean.max(f64::MIN_POSITIVE);
            let mut norm = 0.0f64;
            for (a, b) in v.iter_mut().zip(&pv) {
                *a = 0.5 * (*a + b) + floor;
                norm = norm.max(*a);
            }
            for a in v.iter_mut() {
                *a /= norm;
            }
        }
        apply(&v, &mut pv);
        best = best.min(v.iter().zip(&pv).map(|(a, b)| b / a).fold(0.0, f64::max));
        best
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            n: self.n(),
            edges: self.edges.iter().map(|&(u, v, c)| EdgeSpec { u, v, c }).collect(),
            kappa: self.kappa.clone(),
        }
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<WeightedGraph> {
        let mut b = GraphBuilder::new(spec.n).killing(spec.kappa.clone());
        for e in &spec.edges {
            b = b.edge(e.u, e.v, e.c);
        }
        b.build()
    }

    pub fn from_json(s: &str) -> Result<WeightedGraph> {
        let spec: GraphSpec = serde_json::from_str(s)?;
        Self::from_spec(&spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_spec()).expect("graph spec serializes")
    }

    /// Complete graph with unit conductances and uniform killing.
    pub fn complete(n: usize, kappa: f64) -> Result<WeightedGraph> {
        let mut b = GraphBuilder::new(n).uniform_killing(kappa);
        for u in 0..n {
            for v in u + 1..n {
                b = b.edge(u, v, 1.0);
            }
        }
        b.build()
    }

    /// Path `0 - 1 - ... - (n-1)` with unit conductances and uniform killing.
    pub fn path(n: usize, kappa: f64) -> Result<WeightedGraph> {
        let mut b = GraphBuilder::new(n).uniform_killing(kappa);
        for u in 1..n {
            b = b.edge(u - 1, u, 1.0);
        }
        b.build()
    }

    pub fn cycle(n: usize, kappa: f64) -> Result<WeightedGraph> {
        if n < 3 {
            return Err(Error::InvalidArgument("cycle needs at least 3 vertices".into()));
        }
        let mut b = GraphBuilder::new(n).uniform_killing(kappa);
        for u in 0..n {
            b = b.edge(u, (u + 1) % n, 1.0);
        }
        b.build()
    }

    /// Two vertices joined by one edge.
    pub fn two_vertex(c: f64, kappa: f64) -> Result<WeightedGraph> {
        GraphBuilder::new(2).edge(0, 1, c).uniform_killing(kappa).build()
    }
}

/// Checks that `subset` is sorted, duplicate free and in range.
pub(crate) fn check_subset(n: usize, subset: &[usize]) -> Result<()> {
    for w in subset.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidArgument("vertex subset must be sorted and duplicate free".into()));
        }
    }
    if let Some(&x) = subset.last() {
        if x >= n {
            return Err(Error::VertexOutOfRange(x));
        }
    }
    Ok(())
}

/// Sorted, deduplicated copy of `xs`.
pub fn normalize_subset(xs: &[usize]) -> Vec<usize> {
    let mut v = xs.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

pub fn complement(n: usize, subset: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; n];
    for &x in subset {
        inside[x] = true;
    }
    (0..n).filter(|&x| !inside[x]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_lambda() {
        let g = WeightedGraph::complete(4, 1.0).unwrap();
        for x in 0..4 {
            assert_eq!(g.lambda(x), 4.0);
            assert_eq!(g.p(x, (x + 1) % 4), 0.25);
        }
        assert_eq!(g.p(0, 0), 0.0);
        assert_eq!(g.edges().len(), 6);
    }

    #[test]
    fn rejects_disconnected() {
        let r = GraphBuilder::new(3).edge(0, 1, 1.0).uniform_killing(1.0).build();
        assert!(matches!(r, Err(Error::DisconnectedGraph)));
    }

    #[test]
    fn rejects_bad_conductance() {
        let r = GraphBuilder::new(2).edge(0, 1, -1.0).uniform_killing(1.0).build();
        assert!(matches!(r, Err(Error::NonPositiveConductance(0, 1))));
        let r = GraphBuilder::new(2).edge(0, 1, 0.0).uniform_killing(1.0).build();
        assert!(matches!(r, Err(Error::NonPositiveConductance(0, 1))));
    }

    #[test]
    fn rejects_zero_killing() {
        let r = GraphBuilder::new(2).edge(0, 1, 1.0).build();
        assert!(matches!(r, Err(Error::AllKillingZeroWithoutOverride)));
        let r = GraphBuilder::new(2).edge(0, 1, 1.0).allow_zero_killing(true).build();
        assert!(matches!(r, Err(Error::NotSubstochastic(_))));
    }

    #[test]
    fn rejects_duplicates_and_self_loops() {
        let r = GraphBuilder::new(2).edge(0, 1, 1.0).edge(1, 0, 2.0).uniform_killing(1.0).build();
        assert!(matches!(r, Err(Error::BadEdge(..))));
        let r = GraphBuilder::new(2).edge(0, 0, 1.0).edge(0, 1, 1.0).uniform_killing(1.0).build();
        assert!(matches!(r, Err(Error::BadEdge(..))));
    }

    #[test]
    fn json_round_trip() {
        let g = WeightedGraph::path(5, 0.3).unwrap();
        let s = g.to_json();
        let h = WeightedGraph::from_json(&s).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn spectral_bound_is_upper_bound() {
        // K_4 with kappa = 1: P = (J - I)/4, top eigenvalue 3/4.
        let g = WeightedGraph::complete(4, 1.0).unwrap();
        let rho = g.spectral_bound(&[0, 1, 2, 3]);
        assert!(rho >= 0.75 - 1e-15 && rho < 0.75 + 1e-9, "{rho}");
        // Path of 3: lambda = 2 + k at the ends too.
        let g = WeightedGraph::path(3, 1.0).unwrap();
        let rho = g.spectral_bound(&[0, 1, 2]);
        // P = D^{-1} A with D = diag(2, 3, 2); top eigenvalue 1/sqrt(3)
        let exact = 1.0 / 3.0f64.sqrt();
        assert!(rho >= exact - 1e-12 && rho < exact + 1e-6);
    }
}
