//! Loop percolation on boxes and tori of `Z^d`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::prob_finer;
use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, WeightedGraph};
use crate::linalg::green_diagonal_entry;
use crate::partition::{Partition, UnionFind};
use crate::rng::par_replicas;
use crate::sampler::{sample_soup_with, thin_soup, LoopSoup, SamplerPlan};
use crate::stats::wilson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Missing neighbours are turned into killing so `lambda = 2d + kappa`.
    Free,
    Torus,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Free => "free",
            Boundary::Torus => "torus",
        })
    }
}

/// Box `{0..side}^d` with nearest-neighbour unit conductances.
#[derive(Debug, Clone)]
pub struct LatticeBox {
    pub d: usize,
    pub side: usize,
    pub bc: Boundary,
    pub kappa: f64,
    pub graph: WeightedGraph,
}

impl LatticeBox {
    pub fn new(d: usize, side: usize, bc: Boundary, kappa: f64) -> Result<LatticeBox> {
        if d == 0 {
            return Err(Error::OutOfRange("dimension must be positive".into()));
        }
        let min_side = if bc == Boundary::Torus { 3 } else { 2 };
        if side < min_side {
            return Err(Error::OutOfRange(format!("side {side} too small")));
        }
        let n = side
            .checked_pow(d as u32)
            .filter(|&n| n <= 50_000_000)
            .ok_or_else(|| Error::TooLarge(format!("{side}^{d} vertices")))?;
        let mut b = GraphBuilder::new(n);
        let mut kill = vec![kappa; n];
        let mut stride = 1;
        for _ in 0..d {
            for x in 0..n {
                let c = (x / stride) % side;
                if c + 1 < side {
                    b = b.edge(x, x + stride, 1.0);
                } else if bc == Boundary::Torus {
                    b = b.edge(x, x + stride - side * stride, 1.0);
                }
                if bc == Boundary::Free && (c == 0 || c + 1 == side) {
                    kill[x] += 1.0;
                }
            }
            stride *= side;
        }
        let graph = b.killing(kill).build()?;
        Ok(LatticeBox { d, side, bc, kappa, graph })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn coords(&self, mut x: usize) -> Vec<usize> {
        let mut c = Vec::with_capacity(self.d);
        for _ in 0..self.d {
            c.push(x % self.side);
            x /= self.side;
        }
        c
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().rev().fold(0, |acc, &c| acc * self.side + c)
    }

    /// Central vertex.
    pub fn origin(&self) -> usize {
        self.index(&vec![self.side / 2; self.d])
    }

    /// Free boxes: vertices on a face. Tori: vertices at sup-distance
    /// `side / 2` from the origin.
    pub fn boundary(&self) -> Vec<bool> {
        let o = self.side / 2;
        (0..self.n())
            .map(|x| {
                let c = self.coords(x);
                match self.bc {
                    Boundary::Free => c.iter().any(|&v| v == 0 || v + 1 == self.side),
                    Boundary::Torus => c.iter().any(|&v| {
                        let dd = v.abs_diff(o);
                        dd.min(self.side - dd) >= self.side / 2
                    }),
                }
            })
            .collect()
    }
}

/// Whether the origin's cluster reaches the boundary.
pub fn origin_reaches_boundary(soup: &LoopSoup, origin: usize, boundary: &[bool]) -> bool {
    let mut uf = UnionFind::new(soup.n);
    for l in &soup.loops {
        let v = l.lp.vertices();
        for w in v.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let r = uf.find(origin);
    (0..soup.n).any(|x| boundary[x] && uf.find(x) == r)
}

#[derive(Debug, Clone, Serialize)]
pub struct PercolationEstimate {
    pub d: usize,
    #[serde(rename = "L")]
    pub side: usize,
    pub bc: Boundary,
    pub alpha: f64,
    pub kappa: f64,
    pub theta_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub replicas: usize,
    #[serde(skip)]
    pub hits: usize,
}

fn estimate(d: usize, side: usize, bc: Boundary, alpha: f64, kappa: f64, hits: usize, replicas: usize) -> PercolationEstimate {
    let (ci_lo, ci_hi) = wilson(hits, replicas, 1.96);
    PercolationEstimate {
        d,
        side,
        bc,
        alpha,
        kappa,
        theta_hat: hits as f64 / replicas.max(1) as f64,
        ci_lo,
        ci_hi,
        replicas,
        hits,
    }
}

/// Fraction of soups whose origin cluster reaches the boundary, per box size.
pub fn estimate_theta(
    d: usize,
    ladder: &[usize],
    bc: Boundary,
    alpha: f64,
    kappa: f64,
    replicas: usize,
    seed: u64,
) -> Result<Vec<PercolationEstimate>> {
    if d < 2 || ladder.iter().any(|&l| l < 4) {
        return Err(Error::OutOfRange("need d >= 2 and side >= 4".into()));
    }
    let mut out = Vec::new();
    for &side in ladder {
        let bx = LatticeBox::new(d, side, bc, kappa)?;
        let plan = SamplerPlan::build(&bx.graph, 1e-9)?;
        let (o, bd) = (bx.origin(), bx.boundary());
        let hits: Vec<Result<bool>> = par_replicas(seed, replicas, |_, rng| {
            Ok(origin_reaches_boundary(&sample_soup_with(&plan, alpha, rng)?, o, &bd))
        });
        let hits = hits.into_iter().collect::<Result<Vec<_>>>()?.iter().filter(|&&h| h).count();
        out.push(estimate(d, side, bc, alpha, kappa, hits, replicas));
    }
    Ok(out)
}

/// Per-replica boundary indicators on an `(alpha, kappa)` grid, all derived
/// from one soup at the largest alpha and smallest kappa: filtering by
/// arrival mark gives smaller alphas, thinning gives larger kappas.
#[derive(Debug, Clone)]
pub struct ThetaGrid {
    pub alphas: Vec<f64>,
    pub kappas: Vec<f64>,
    /// `hits[r][i][j]` for replica `r`, `alphas[i]`, `kappas[j]`.
    pub hits: Vec<Vec<Vec<bool>>>,
    /// Whether open-edge sets were nested along `kappas` in every replica
    /// and every alpha.
    pub edges_nested: bool,
}

impl ThetaGrid {
    pub fn estimate(&self, i: usize, j: usize, d: usize, side: usize, bc: Boundary) -> PercolationEstimate {
        let h = self.hits.iter().filter(|r| r[i][j]).count();
        estimate(d, side, bc, self.alphas[i], self.kappas[j], h, self.hits.len())
    }

    /// Replica-wise monotonicity: nondecreasing in alpha, nonincreasing in kappa.
    pub fn orderings_hold(&self) -> bool {
        self.hits.iter().all(|r| {
            (0..self.alphas.len()).all(|i| {
                (0..self.kappas.len()).all(|j| {
                    let h = r[i][j];
                    let a_ok = i + 1 == self.alphas.len() || !h || r[i + 1][j];
                    let k_ok = j + 1 == self.kappas.len() || h || !r[i][j + 1];
                    a_ok && k_ok
                })
            })
        })
    }
}

fn is_subset(small: &[(usize, usize)], big: &[(usize, usize)]) -> bool {
    small.iter().all(|e| big.binary_search(e).is_ok())
}

/// `alphas` and `kappas` must be increasing.
pub fn theta_grid(
    d: usize,
    side: usize,
    bc: Boundary,
    alphas: &[f64],
    kappas: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<ThetaGrid> {
    if alphas.is_empty() || kappas.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) || kappas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("grids must be increasing".into()));
    }
    let master = LatticeBox::new(d, side, bc, kappas[0])?;
    let targets: Vec<WeightedGraph> =
        kappas.iter().map(|&k| LatticeBox::new(d, side, bc, k).map(|b| b.graph)).collect::<Result<_>>()?;
    let plan = SamplerPlan::build(&master.graph, 1e-9)?;
    let (o, bd) = (master.origin(), master.boundary());
    let a_max = *alphas.last().unwrap();
    let per: Vec<Result<(Vec<Vec<bool>>, bool)>> = par_replicas(seed, replicas, |_, rng| {
        let soup = sample_soup_with(&plan, a_max, rng)?;
        let thinned: Vec<LoopSoup> = targets.iter().map(|t| thin_soup(&soup, &master.graph, t)).collect::<Result<_>>()?;
        let mut nested = true;
        let mut rows = Vec::with_capacity(alphas.len());
        for &a in alphas {
            let mut row = Vec::with_capacity(kappas.len());
            let mut prev: Option<Vec<(usize, usize)>> = None;
            for s in &thinned {
                let s = s.up_to(a);
                let e = s.open_edges();
                if let Some(p) = &prev {
                    nested &= is_subset(&e, p);
                }
                row.push(origin_reaches_boundary(&s, o, &bd));
                prev = Some(e);
            }
            rows.push(row);
        }
        Ok((rows, nested))
    });
    let mut hits = Vec::with_capacity(replicas);
    let mut edges_nested = true;
    for r in per {
        let (h, n) = r?;
        hits.push(h);
        edges_nested &= n;
    }
    Ok(ThetaGrid { alphas: alphas.to_vec(), kappas: kappas.to_vec(), hits, edges_nested })
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdBracket {
    pub alpha: f64,
    pub theta_cut: f64,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub replicas: usize,
    pub side: usize,
    /// Reached through the stopping rule (CI at the midpoint spans the cut).
    pub ci_stopped: bool,
}

/// Bisection in `log kappa` for the crossing of `theta_cut`, one bracket per
/// alpha. All alphas and kappas share the soups of one master sample at the
/// largest alpha and `kappa_min`, so the estimated theta is surely monotone
/// in both parameters. With `ci_stop` the bisection ends early once the
/// Wilson interval at the midpoint contains the cut.
#[allow(clippy::too_many_arguments)]
pub fn kappa_threshold_scan(
    d: usize,
    side: usize,
    alphas: &[f64],
    theta_cut: f64,
    kappa_range: (f64, f64),
    steps: usize,
    ci_stop: bool,
    replicas: usize,
    seed: u64,
) -> Result<Vec<ThresholdBracket>> {
    if !(theta_cut > 0.0 && theta_cut < 0.5) {
        return Err(Error::OutOfRange(format!("theta_cut = {theta_cut}")));
    }
    let (k0, k1) = kappa_range;
    if !(k0 > 0.0 && k1 > k0) {
        return Err(Error::OutOfRange("need 0 < kappa_min < kappa_max".into()));
    }
    let bc = Boundary::Free;
    let master = LatticeBox::new(d, side, bc, k0)?;
    let plan = SamplerPlan::build(&master.graph, 1e-9)?;
    let (o, bd) = (master.origin(), master.boundary());
    let a_max = alphas.iter().cloned().fold(0.0, f64::max);
    let soups: Vec<LoopSoup> =
        par_replicas(seed, replicas, |_, rng| sample_soup_with(&plan, a_max, rng)).into_iter().collect::<Result<_>>()?;
    let theta = |alpha: f64, kappa: f64| -> Result<usize> {
        let g = LatticeBox::new(d, side, bc, kappa)?.graph;
        let mut h = 0;
        for s in &soups {
            if origin_reaches_boundary(&thin_soup(s, &master.graph, &g)?.up_to(alpha), o, &bd) {
                h += 1;
            }
        }
        Ok(h)
    };
    let n = replicas as f64;
    let mut out = Vec::new();
    for &alpha in alphas {
        let (mut lo, mut hi) = (k0.ln(), k1.ln());
        let (mut h_lo, mut h_hi) = (theta(alpha, k0)?, theta(alpha, k1)?);
        if !(h_lo as f64 / n >= theta_cut && (h_hi as f64 / n) < theta_cut) {
            return Err(Error::NoSignChange(format!(
                "alpha {alpha}: theta {} at kappa {k0}, {} at kappa {k1}",
                h_lo as f64 / n,
                h_hi as f64 / n
            )));
        }
        let mut ci_stopped = false;
        for _ in 0..steps {
            let mid = 0.5 * (lo + hi);
            let h = theta(alpha, mid.exp())?;
            if ci_stop {
                let (a, b) = wilson(h, replicas, 1.96);
                if a <= theta_cut && theta_cut <= b {
                    ci_stopped = true;
                    break;
                }
            }
            if h as f64 / n >= theta_cut {
                lo = mid;
                h_lo = h;
            } else {
                hi = mid;
                h_hi = h;
            }
        }
        out.push(ThresholdBracket {
            alpha,
            theta_cut,
            kappa_lo: lo.exp(),
            kappa_hi: hi.exp(),
            theta_lo: h_lo as f64 / n,
            theta_hi: h_hi as f64 / n,
            replicas,
            side,
            ci_stopped,
        });
    }
    Ok(out)
}

/// `s_e = 1 - (1 - P(x, y) P(y, x))^alpha` for each edge.
pub fn two_loop_params(g: &WeightedGraph, alpha: f64) -> Vec<f64> {
    g.edges()
        .iter()
        .map(|&(x, y, _)| {
            let q = g.p(x, y) * g.p(y, x);
            -(alpha * (-q).ln_1p()).exp_m1()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TwoLoopSample {
    /// Per edge of `g.edges()`.
    pub params: Vec<f64>,
    pub bernoulli_open: Vec<bool>,
    pub soup_open: Vec<bool>,
    pub bernoulli_clusters: Partition,
    pub soup_clusters: Partition,
}

fn clusters_of(n: usize, edges: &[(usize, usize, f64)], open: &[bool]) -> Partition {
    let mut uf = UnionFind::new(n);
    for (e, &o) in edges.iter().zip(open) {
        if o {
            uf.union(e.0, e.1);
        }
    }
    uf.to_partition()
}

/// Independent Bernoulli(s_e) edges next to the edges crossed by the loops
/// of a soup that only go back and forth along a single edge.
pub fn two_loop_bernoulli<R: Rng + ?Sized>(g: &WeightedGraph, plan: &SamplerPlan, alpha: f64, rng: &mut R) -> Result<TwoLoopSample> {
    if !plan.matches(g) {
        return Err(Error::PlanMismatch);
    }
    let params = two_loop_params(g, alpha);
    let bernoulli_open: Vec<bool> = params.iter().map(|&s| rng.gen::<f64>() < s).collect();
    let soup = sample_soup_with(plan, alpha, rng)?;
    let edges = g.edges();
    let mut soup_open = vec![false; edges.len()];
    for l in &soup.loops {
        let root = l.lp.primitive_root();
        if root.len() == 2 {
            let v = root.vertices();
            let e = (v[0].min(v[1]), v[0].max(v[1]));
            let i = edges.partition_point(|&(a, b, _)| (a, b) < e);
            soup_open[i] = true;
        }
    }
    Ok(TwoLoopSample {
        bernoulli_clusters: clusters_of(g.n(), edges, &bernoulli_open),
        soup_clusters: clusters_of(g.n(), edges, &soup_open),
        params,
        bernoulli_open,
        soup_open,
    })
}

/// Margin `(1 - p_c) - (1 - (2d + kappa)^{-2})^alpha`; positive means the
/// soup percolates by comparison with Bernoulli bond percolation.
pub fn percolation_sufficient_condition(d: usize, alpha: f64, kappa: f64, p_c: f64) -> (bool, f64) {
    let q = 1.0 / ((2 * d) as f64 + kappa).powi(2);
    let margin = (1.0 - p_c) - (alpha * (-q).ln_1p()).exp();
    (margin > 0.0, margin)
}

/// Smallest alpha meeting the sufficient condition.
pub fn sufficient_alpha(d: usize, kappa: f64, p_c: f64) -> f64 {
    let q = 1.0 / ((2 * d) as f64 + kappa).powi(2);
    (1.0 - p_c).ln() / (-q).ln_1p()
}

#[derive(Debug, Clone, Serialize)]
pub struct BernoulliLimitRow {
    pub kappa: f64,
    pub alpha: f64,
    pub exact: f64,
    pub limit: f64,
    pub error: f64,
}

/// Number of edges of `g` joining different blocks of `pi`.
pub fn cut_edges(g: &WeightedGraph, pi: &Partition) -> usize {
    g.edges().iter().filter(|&&(x, y, _)| pi.block_of(x) != pi.block_of(y)).count()
}

/// `P(C_alpha finer than pi)` at `alpha = u kappa^2` against
/// `e^{-u |cut edges|}`, along a ladder of killing values.
pub fn bernoulli_limit_check(g: &WeightedGraph, pi: &Partition, u: f64, kappas: &[f64]) -> Result<Vec<BernoulliLimitRow>> {
    if !(u > 0.0) {
        return Err(Error::OutOfRange(format!("u = {u}")));
    }
    let cut = cut_edges(g, pi) as f64;
    let limit = (-u * cut).exp();
    kappas
        .iter()
        .map(|&k| {
            let gk = g.with_uniform_killing(k)?;
            let alpha = u * k * k;
            let exact = prob_finer(&gk, pi, alpha, None)?;
            Ok(BernoulliLimitRow { kappa: k, alpha, exact, limit, error: (exact - limit).abs() })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeOpenRow {
    pub kappa: f64,
    /// `lambda_x G(x, x)` at the centre.
    pub lambda_g: f64,
    pub prob_visited: f64,
    pub bound: f64,
}

/// Lower bound `1 - (1 - P(N_x^{(alpha/n)} > 0)/4)^n` on the probability
/// that an edge at the centre of a free `side x side` box is open, with
/// `P(N_x^{(a)} = 0) = (lambda_x G(x, x))^{-a}`.
pub fn edge_open_kappa_to_zero(alpha: f64, kappas: &[f64], side: usize, n: usize) -> Result<Vec<EdgeOpenRow>> {
    if n == 0 {
        return Err(Error::OutOfRange("n must be positive".into()));
    }
    kappas
        .iter()
        .map(|&k| {
            let bx = LatticeBox::new(2, side, Boundary::Free, k)?;
            let x = bx.origin();
            let lambda_g = bx.graph.lambda(x) * green_diagonal_entry(&bx.graph, x)?;
            let visited = -(-(alpha / n as f64) * lambda_g.ln()).exp_m1();
            let bound = -(n as f64 * (-visited / 4.0).ln_1p()).exp_m1();
            Ok(EdgeOpenRow { kappa: k, lambda_g, prob_visited: visited, bound })
        })
        .collect()
}
