//! Exact sampling of the Poisson loop soup on a finite graph.
//!
//! A loop is drawn by picking its length `n` with weight `tr(P^n)/n`, its
//! starting vertex with weight `P^n(x, x)`, and then the path as a Markov
//! bridge from `x` back to `x` in `n` steps.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::loops::{tail_bound, total_mass, DiscreteLoop};
use crate::partition::{Partition, UnionFind};
use crate::rng::replica_rng;

/// Longest loop length a plan may use.
pub const MAX_PLAN_LENGTH: usize = 200_000;

/// Precomputed length and start-point laws for one graph.
#[derive(Debug, Clone)]
pub struct SamplerPlan {
    n: usize,
    fingerprint: u64,
    l_max: usize,
    eps_tail: f64,
    mass: f64,
    truncated_mass: f64,
    certified_tail: f64,
    len_cdf: Vec<f64>,
    // start_cdf[len] over vertices; empty when that length has no weight
    start_cdf: Vec<Vec<f64>>,
    offsets: Vec<usize>,
    nbr: Vec<u32>,
    // P(x, y) for row entries, and P(y, x) for the reverse direction
    p_fwd: Vec<f64>,
    p_rev: Vec<f64>,
}

fn fingerprint(g: &WeightedGraph) -> u64 {
    let mut h = DefaultHasher::new();
    g.n().hash(&mut h);
    for &(u, v, c) in g.edges() {
        (u, v, c.to_bits()).hash(&mut h);
    }
    for k in g.kappas() {
        k.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Sparse vector with a dense scratch accumulator.
struct Accum {
    val: Vec<f64>,
    hit: Vec<bool>,
    touched: Vec<u32>,
}

impl Accum {
    fn new(n: usize) -> Self {
        Accum { val: vec![0.0; n], hit: vec![false; n], touched: Vec::new() }
    }

    fn add(&mut self, i: usize, v: f64) {
        if !self.hit[i] {
            self.hit[i] = true;
            self.touched.push(i as u32);
        }
        self.val[i] += v;
    }

    /// Drains into a sorted sparse vector.
    fn take(&mut self) -> Vec<(u32, f64)> {
        self.touched.sort_unstable();
        let out = self.touched.iter().map(|&i| (i, self.val[i as usize])).collect();
        for &i in &self.touched {
            self.val[i as usize] = 0.0;
            self.hit[i as usize] = false;
        }
        self.touched.clear();
        out
    }
}

/// Index `i` with `cdf[i-1] < u <= cdf[i]`, never landing on a zero-width
/// step (so `u` must lie in `(0, 1]`). `cdf` may start with a 0 entry.
fn pick(cdf: &[f64], u: f64) -> usize {
    let i = cdf.partition_point(|&c| c < u);
    if i < cdf.len() {
        return i;
    }
    // u beyond the last entry through rounding: take the last real step
    let mut j = cdf.len() - 1;
    while j > 0 && cdf[j] <= cdf[j - 1] {
        j -= 1;
    }
    j
}

fn sparse_get(v: &[(u32, f64)], i: u32) -> f64 {
    match v.binary_search_by_key(&i, |e| e.0) {
        Ok(k) => v[k].1,
        Err(_) => 0.0,
    }
}

impl SamplerPlan {
    /// Chooses the truncation length so that the mass of longer loops is at
    /// most `eps_tail` times the total mass.
    pub fn build(g: &WeightedGraph, eps_tail: f64) -> Result<SamplerPlan> {
        if !(eps_tail > 0.0 && eps_tail < 1.0) {
            return Err(Error::OutOfRange(format!("eps_tail = {eps_tail}")));
        }
        let n = g.n();
        let all: Vec<usize> = (0..n).collect();
        let rho = g.spectral_bound(&all);
        if rho >= 1.0 - 1e-12 {
            return Err(Error::NoKilling);
        }
        let mass = if n <= 3000 {
            total_mass(g, &all)?
        } else {
            return Err(Error::TooLarge(format!("{n} vertices for an exact sampling plan")));
        };
        let target = eps_tail * mass;
        let mut l_cert = 1usize;
        while tail_bound(n, rho, l_cert) > target {
            l_cert += 1 + l_cert / 8;
            if l_cert > MAX_PLAN_LENGTH {
                return Err(Error::BudgetExceeded(format!("loop lengths beyond {MAX_PLAN_LENGTH}")));
            }
        }

        let mut offsets = Vec::with_capacity(n + 1);
        let mut nbr = Vec::new();
        let mut p_fwd = Vec::new();
        let mut p_rev = Vec::new();
        offsets.push(0);
        for x in 0..n {
            for &(y, c) in g.neighbors(x) {
                nbr.push(y as u32);
                p_fwd.push(c / g.lambda(x));
                p_rev.push(c / g.lambda(y));
            }
            offsets.push(nbr.len());
        }
        let mut plan = SamplerPlan {
            n,
            fingerprint: fingerprint(g),
            l_max: 0,
            eps_tail,
            mass,
            truncated_mass: 0.0,
            certified_tail: 0.0,
            len_cdf: Vec::new(),
            start_cdf: Vec::new(),
            offsets,
            nbr,
            p_fwd,
            p_rev,
        };
        // diag[x][len] = P^len(x, x) for len <= l_cert
        let lambdas = g.lambdas();
        let diags: Vec<Vec<f64>> = (0..n).into_par_iter().map(|x| plan.return_probs(x, l_cert, lambdas)).collect();
        let mut w = vec![0.0; l_cert + 1];
        for d in &diags {
            for len in 1..=l_cert {
                w[len] += d[len];
            }
        }
        for (len, wl) in w.iter_mut().enumerate().skip(1) {
            *wl /= len as f64;
        }
        // smallest L whose exact remainder is small enough
        let mut partial = 0.0;
        let mut l_max = l_cert;
        for len in 1..=l_cert {
            partial += w[len];
            let rest = mass - partial;
            let certified = tail_bound(n, rho, len);
            if certified <= target || (eps_tail >= 1e-12 && rest <= target) {
                l_max = len;
                break;
            }
        }
        let truncated: f64 = w[1..=l_max].iter().sum();
        if truncated <= 0.0 {
            return Err(Error::NoKilling);
        }
        let mut cdf = Vec::with_capacity(l_max + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for wl in &w[1..=l_max] {
            acc += wl;
            cdf.push(acc / truncated);
        }
        let mut start_cdf = vec![Vec::new(); l_max + 1];
        for (len, sc) in start_cdf.iter_mut().enumerate().skip(1) {
            if w[len] <= 0.0 {
                continue;
            }
            let mut a = 0.0;
            let mut v = Vec::with_capacity(n);
            for d in &diags {
                a += d[len];
                v.push(a);
            }
            for e in v.iter_mut() {
                *e /= a;
            }
            *sc = v;
        }
        plan.l_max = l_max;
        plan.truncated_mass = truncated;
        plan.certified_tail = tail_bound(n, rho, l_max).min((mass - truncated).max(0.0) + 1e-15 * mass);
        plan.len_cdf = cdf;
        plan.start_cdf = start_cdf;
        Ok(plan)
    }

    /// `P^len(x, x)` for `len = 0..=l`, from rows of `P^m` up to `m = ceil(l/2)`
    /// and reversibility: `P^b(y, x) = lambda(x) P^b(x, y) / lambda(y)`.
    fn return_probs(&self, x: usize, l: usize, lambdas: &[f64]) -> Vec<f64> {
        let h = l.div_ceil(2);
        let mut rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(h + 1);
        rows.push(vec![(x as u32, 1.0)]);
        let mut acc = Accum::new(self.n);
        for _ in 0..h {
            let prev = rows.last().unwrap();
            for &(y, v) in prev {
                let y = y as usize;
                for k in self.offsets[y]..self.offsets[y + 1] {
                    acc.add(self.nbr[k] as usize, v * self.p_fwd[k]);
                }
            }
            rows.push(acc.take());
        }
        let lx = lambdas[x];
        let mut out = vec![0.0; l + 1];
        out[0] = 1.0;
        for (len, o) in out.iter_mut().enumerate().skip(1) {
            let a = len.div_ceil(2);
            let b = len / 2;
            let (ra, rb) = (&rows[a], &rows[b]);
            // merge-join on sorted indices
            let (mut i, mut j) = (0, 0);
            let mut s = 0.0;
            while i < ra.len() && j < rb.len() {
                match ra[i].0.cmp(&rb[j].0) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        s += ra[i].1 * rb[j].1 / lambdas[ra[i].0 as usize];
                        i += 1;
                        j += 1;
                    }
                }
            }
            *o = s * lx;
        }
        out
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn eps_tail(&self) -> f64 {
        self.eps_tail
    }

    /// Exact mass `mu(all loops)`.
    pub fn total_mass(&self) -> f64 {
        self.mass
    }

    /// Mass of loops of length at most `l_max`; the soup intensity per unit alpha.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    /// Mass of the dropped loops.
    pub fn tail_mass(&self) -> f64 {
        self.certified_tail
    }

    /// Total-variation bound between the truncated and the full soup at `alpha`.
    pub fn tv_bound(&self, alpha: f64) -> f64 {
        alpha * self.certified_tail
    }

    /// Probability of each length `1..=l_max` (index 0 unused).
    pub fn length_probs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.l_max + 1];
        for len in 1..=self.l_max {
            out[len] = self.len_cdf[len] - self.len_cdf[len - 1];
        }
        out
    }

    pub fn matches(&self, g: &WeightedGraph) -> bool {
        g.n() == self.n && fingerprint(g) == self.fingerprint
    }

    fn check(&self, g: &WeightedGraph) -> Result<()> {
        if self.matches(g) {
            Ok(())
        } else {
            Err(Error::PlanMismatch)
        }
    }

    /// One loop from the normalized truncated loop measure.
    pub fn sample_loop<R: Rng + ?Sized>(&self, rng: &mut R) -> DiscreteLoop {
        let len = pick(&self.len_cdf, 1.0 - rng.gen::<f64>());
        let x = pick(&self.start_cdf[len], 1.0 - rng.gen::<f64>());
        let seq = self.bridge(x, len, rng);
        DiscreteLoop::new(seq).expect("nonempty loop")
    }

    /// Walk of `len` steps from `x` back to `x` with the bridge law.
    fn bridge<R: Rng + ?Sized>(&self, x: usize, len: usize, rng: &mut R) -> Vec<usize> {
        // col[k](z) = P^k(z, x)
        let mut col: Vec<Vec<(u32, f64)>> = Vec::with_capacity(len);
        col.push(vec![(x as u32, 1.0)]);
        let mut acc = Accum::new(self.n);
        for _ in 1..len {
            let prev = col.last().unwrap();
            for &(w, v) in prev {
                let w = w as usize;
                // P(z, w) for the neighbours z of w
                for k in self.offsets[w]..self.offsets[w + 1] {
                    acc.add(self.nbr[k] as usize, v * self.p_rev[k]);
                }
            }
            col.push(acc.take());
        }
        let mut seq = Vec::with_capacity(len);
        seq.push(x);
        let mut z = x;
        for step in 1..len {
            let remain = len - step; // steps left after this one
            let target = &col[remain];
            let range = self.offsets[z]..self.offsets[z + 1];
            let mut total = 0.0;
            for k in range.clone() {
                total += self.p_fwd[k] * sparse_get(target, self.nbr[k]);
            }
            let mut u = rng.gen::<f64>() * total;
            let mut next = usize::MAX;
            for k in range.clone() {
                let w = self.p_fwd[k] * sparse_get(target, self.nbr[k]);
                if w > 0.0 {
                    next = self.nbr[k] as usize;
                    if u < w {
                        break;
                    }
                    u -= w;
                }
            }
            debug_assert!(next != usize::MAX, "bridge has no admissible step");
            z = next;
            seq.push(z);
        }
        seq
    }
}

/// One loop of a soup with its arrival mark in `[0, alpha]` and a uniform
/// mark used by the killing coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct SoupLoop {
    pub mark: f64,
    pub thin: f64,
    pub lp: DiscreteLoop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopSoup {
    pub alpha: f64,
    pub n: usize,
    pub seed: u64,
    pub replica: u64,
    pub loops: Vec<SoupLoop>,
}

#[derive(Serialize, Deserialize)]
struct DumpLine {
    alpha_mark: f64,
    #[serde(rename = "loop")]
    lp: Vec<usize>,
}

impl LoopSoup {
    pub fn empty(n: usize, alpha: f64) -> Self {
        LoopSoup { alpha, n, seed: 0, replica: 0, loops: Vec::new() }
    }

    /// Soup made from given loops, marks spread evenly over `[0, alpha]`.
    pub fn from_loops(g: &WeightedGraph, alpha: f64, loops: Vec<Vec<usize>>) -> Result<Self> {
        let k = loops.len();
        let mut out = Vec::with_capacity(k);
        for (i, seq) in loops.into_iter().enumerate() {
            let lp = DiscreteLoop::on_graph(g, seq)?;
            out.push(SoupLoop { mark: alpha * (i as f64 + 0.5) / k as f64, thin: 0.5, lp });
        }
        Ok(LoopSoup { alpha, n: g.n(), seed: 0, replica: 0, loops: out })
    }

    pub fn len(&self) -> usize {
        self.loops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    /// Loops that arrived by time `a`: the soup at intensity `a`.
    pub fn up_to(&self, a: f64) -> LoopSoup {
        LoopSoup {
            alpha: a.min(self.alpha),
            n: self.n,
            seed: self.seed,
            replica: self.replica,
            loops: self.loops.iter().filter(|l| l.mark <= a).cloned().collect(),
        }
    }

    /// Superposition; marks of `other` are shifted past `self.alpha`.
    pub fn superpose(&self, other: &LoopSoup) -> LoopSoup {
        let mut loops = self.loops.clone();
        loops.extend(other.loops.iter().map(|l| SoupLoop { mark: l.mark + self.alpha, ..l.clone() }));
        LoopSoup { alpha: self.alpha + other.alpha, loops, ..self.clone() }
    }

    /// Edges crossed by at least one loop, sorted.
    pub fn open_edges(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = self.loops.iter().flat_map(|l| l.lp.steps()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn clusters(&self) -> Partition {
        let mut uf = UnionFind::new(self.n);
        for l in &self.loops {
            let v = l.lp.vertices();
            for w in v.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        uf.to_partition()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for l in &self.loops {
            let line = DumpLine { alpha_mark: l.mark, lp: l.lp.vertices().to_vec() };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads a dump; loops are checked against `g`. The dump carries no
    /// coupling marks, so those are redrawn from `seed`.
    pub fn read_jsonl<R: BufRead>(g: &WeightedGraph, alpha: f64, seed: u64, r: R) -> Result<LoopSoup> {
        let mut rng = replica_rng(seed, u64::MAX);
        let mut loops = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let d: DumpLine = serde_json::from_str(&line)?;
            if !(d.alpha_mark >= 0.0 && d.alpha_mark <= alpha) {
                return Err(Error::OutOfRange(format!("alpha_mark {} outside [0, {alpha}]", d.alpha_mark)));
            }
            let lp = DiscreteLoop::on_graph(g, d.lp)?;
            loops.push(SoupLoop { mark: d.alpha_mark, thin: rng.gen(), lp });
        }
        Ok(LoopSoup { alpha, n: g.n(), seed, replica: 0, loops })
    }
}

/// Soup at intensity `alpha` from stream `replica` of `seed`.
pub fn sample_soup(g: &WeightedGraph, plan: &SamplerPlan, alpha: f64, seed: u64, replica: u64) -> Result<LoopSoup> {
    plan.check(g)?;
    let mut rng = replica_rng(seed, replica);
    let mut soup = sample_soup_with(plan, alpha, &mut rng)?;
    soup.seed = seed;
    soup.replica = replica;
    Ok(soup)
}

/// Same as [`sample_soup`] but drawing from a caller-owned generator.
pub fn sample_soup_with<R: Rng + ?Sized>(plan: &SamplerPlan, alpha: f64, rng: &mut R) -> Result<LoopSoup> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::OutOfRange(format!("alpha = {alpha}")));
    }
    let mean = alpha * plan.truncated_mass;
    let count = if mean > 0.0 { Poisson::new(mean).expect("positive mean").sample(rng) as usize } else { 0 };
    let mut loops = Vec::with_capacity(count);
    for _ in 0..count {
        let lp = plan.sample_loop(rng);
        let mark = rng.gen::<f64>() * alpha;
        let thin = rng.gen::<f64>();
        loops.push(SoupLoop { mark, thin, lp });
    }
    Ok(LoopSoup { alpha, n: plan.n, seed: 0, replica: 0, loops })
}

/// Keeps each loop with probability `prod_i lambda_from(x_i)/lambda_to(x_i)`
/// over its vertices, which turns a soup for `from` into one for `to` when
/// `to` has the same conductances and at least as much killing everywhere.
/// The decision uses each loop's coupling mark, so thinning one soup to
/// several targets gives nested results.
pub fn thin_soup(soup: &LoopSoup, from: &WeightedGraph, to: &WeightedGraph) -> Result<LoopSoup> {
    if from.n() != to.n() || from.n() != soup.n || from.edges() != to.edges() {
        return Err(Error::IncompatibleThinning);
    }
    if from.kappas().iter().zip(to.kappas()).any(|(a, b)| b < a) {
        return Err(Error::IncompatibleThinning);
    }
    let ratio: Vec<f64> = (0..from.n()).map(|x| from.lambda(x) / to.lambda(x)).collect();
    let mut loops = Vec::new();
    for l in &soup.loops {
        let keep: f64 = l.lp.vertices().iter().map(|&x| ratio[x]).product();
        if l.thin < keep {
            // rescale so the mark stays uniform for further thinning
            loops.push(SoupLoop { thin: l.thin / keep, ..l.clone() });
        }
    }
    Ok(LoopSoup { loops, ..soup.clone() })
}

/// Partitions at each grid point of one soup sampled at the last grid value.
pub fn coalescent_trajectory(
    g: &WeightedGraph,
    plan: &SamplerPlan,
    alpha_grid: &[f64],
    seed: u64,
    replica: u64,
) -> Result<Vec<(f64, Partition)>> {
    if alpha_grid.windows(2).any(|w| w[1] <= w[0]) || alpha_grid.is_empty() {
        return Err(Error::InvalidArgument("alpha grid must be nonempty and increasing".into()));
    }
    let amax = *alpha_grid.last().unwrap();
    let soup = sample_soup(g, plan, amax, seed, replica)?;
    Ok(trajectory_of(&soup, alpha_grid))
}

/// Cluster partitions of `soup` filtered by arrival mark at each grid value.
pub fn trajectory_of(soup: &LoopSoup, alpha_grid: &[f64]) -> Vec<(f64, Partition)> {
    let mut order: Vec<&SoupLoop> = soup.loops.iter().collect();
    order.sort_by(|a, b| a.mark.total_cmp(&b.mark));
    let mut uf = UnionFind::new(soup.n);
    let mut out = Vec::with_capacity(alpha_grid.len());
    let mut i = 0;
    for &a in alpha_grid {
        while i < order.len() && order[i].mark <= a {
            let v = order[i].lp.vertices();
            for w in v.windows(2) {
                uf.union(w[0], w[1]);
            }
            i += 1;
        }
        out.push((a, uf.to_partition()));
    }
    out
}
