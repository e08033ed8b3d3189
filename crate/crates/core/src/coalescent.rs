//! Cluster coalescent on the complete graph, built from packets of uniform
//! points, plus its analogue on `[0, 1]` and the isolated-vertex law.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::{Partition, UnionFind};
use crate::rng::{par_replicas, replica_rng};
use crate::stats::{gumbel_cdf, ks_statistic};

/// Law of the packet size: `nu(k) = a^k / (k beta)` for `k >= 2`, where
/// `a = 1/(eps + 1)` and `beta = -log(1 - a) - a`.
#[derive(Debug, Clone)]
pub struct PacketLaw {
    eps: f64,
    a: f64,
    beta: f64,
    // cdf[i] = P(R <= i + 2)
    cdf: Vec<f64>,
}

impl PacketLaw {
    pub fn new(eps: f64) -> Result<PacketLaw> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::OutOfRange(format!("epsilon = {eps}")));
        }
        let a = 1.0 / (eps + 1.0);
        let beta = packet_rate(eps);
        let mut cdf = Vec::new();
        let mut p = a * a / (2.0 * beta);
        let mut k = 2usize;
        let mut acc = 0.0;
        loop {
            acc += p;
            cdf.push(acc);
            // remaining mass is below p a / (1 - a)
            if p * a / (1.0 - a) < 1e-17 || cdf.len() > 10_000_000 {
                break;
            }
            p *= a * k as f64 / (k + 1) as f64;
            k += 1;
        }
        Ok(PacketLaw { eps, a, beta, cdf })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Event rate `beta_eps`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn prob(&self, k: usize) -> f64 {
        if k < 2 {
            return 0.0;
        }
        (k as f64 * self.a.ln()).exp() / (k as f64 * self.beta)
    }

    /// Sum of the tabulated probabilities.
    pub fn table_mass(&self) -> f64 {
        *self.cdf.last().unwrap()
    }

    pub fn table_len(&self) -> usize {
        self.cdf.len()
    }

    /// `E R = a^2 / ((1 - a) beta)`.
    pub fn mean(&self) -> f64 {
        self.a * self.a / ((1.0 - self.a) * self.beta)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let i = self.cdf.partition_point(|&c| c <= u);
        if i < self.cdf.len() {
            return i + 2;
        }
        // beyond the table: continue the ratio recursion
        let mut k = self.cdf.len() + 1;
        let mut p = self.prob(k);
        let mut acc = self.table_mass();
        loop {
            p *= self.a * k as f64 / (k + 1) as f64;
            k += 1;
            acc += p;
            if acc > u || p == 0.0 {
                return k;
            }
        }
    }
}

/// `beta_eps = log(1 + 1/eps) - 1/(1 + eps)`, by its series when `eps` is large.
pub fn packet_rate(eps: f64) -> f64 {
    let a = 1.0 / (eps + 1.0);
    if a < 0.5 {
        let mut s = 0.0f64;
        let mut pw = a * a;
        let mut k = 2.0;
        while pw / k > 1e-18 * s.max(f64::MIN_POSITIVE) || k < 3.0 {
            s += pw / k;
            pw *= a;
            k += 1.0;
        }
        s
    } else {
        (1.0 / eps).ln_1p() - a
    }
}

/// `P(Pi_t finer than pi) = (eps/(eps+1))^t prod_i (1 - f_i/(1+eps))^{-t}`
/// where `f_i` are the block fractions of `pi`.
pub fn packet_semigroup(eps: f64, t: f64, fractions: &[f64]) -> f64 {
    let mut l = t * (eps / (eps + 1.0)).ln();
    for &f in fractions {
        l -= t * (1.0 - f / (1.0 + eps)).ln();
    }
    l.exp()
}

/// Merges the blocks hit by one packet of uniform points drawn with
/// replacement. Returns the number of merges performed.
pub fn chain_step<R: Rng + ?Sized>(uf: &mut UnionFind, n: usize, law: &PacketLaw, rng: &mut R) -> usize {
    let r = law.sample(rng);
    let first = rng.gen_range(0..n);
    let mut merges = 0;
    for _ in 1..r {
        if uf.union(first, rng.gen_range(0..n)) {
            merges += 1;
        }
    }
    merges
}

/// Blocks hit by one packet, as sorted canonical block indices of `pi`.
pub fn packet_hits<R: Rng + ?Sized>(pi: &Partition, law: &PacketLaw, rng: &mut R) -> Vec<usize> {
    let r = law.sample(rng);
    let mut hit: Vec<usize> = (0..r).map(|_| pi.block_of(rng.gen_range(0..pi.n()))).collect();
    hit.sort_unstable();
    hit.dedup();
    hit
}

/// Trajectory `(t, partition)` recorded at time 0 and after each event that
/// changes the partition, up to `t_max`.
pub fn run_coalescent(
    initial: &Partition,
    eps: f64,
    t_max: f64,
    seed: u64,
    replica: u64,
) -> Result<Vec<(f64, Partition)>> {
    let n = initial.n();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two points".into()));
    }
    let law = PacketLaw::new(eps)?;
    let mut rng = replica_rng(seed, replica);
    let clock = Exp::new(law.beta()).expect("positive rate");
    let mut uf = UnionFind::new(n);
    for b in initial.blocks() {
        for w in b.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let mut out = vec![(0.0, initial.clone())];
    let mut t = 0.0;
    loop {
        t += clock.sample(&mut rng);
        if t > t_max || uf.components() == 1 {
            break;
        }
        if chain_step(&mut uf, n, &law, &mut rng) > 0 {
            out.push((t, uf.to_partition()));
        }
    }
    Ok(out)
}

/// Partition at time `t` of a trajectory.
pub fn state_at(traj: &[(f64, Partition)], t: f64) -> &Partition {
    let i = traj.partition_point(|(s, _)| *s <= t);
    &traj[i.max(1) - 1].1
}

/// Coalescent on `[0, 1]` started from consecutive intervals with the given
/// lengths; blocks are unions of those intervals, indexed `0..lengths.len()`.
pub fn run_continuum_coalescent(
    lengths: &[f64],
    eps: f64,
    t_max: f64,
    seed: u64,
    replica: u64,
) -> Result<Vec<(f64, Partition)>> {
    if lengths.is_empty() || lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::BadIntervalPartition("lengths must be positive".into()));
    }
    let total: f64 = lengths.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::BadIntervalPartition(format!("lengths sum to {total}")));
    }
    let m = lengths.len();
    let mut cum = Vec::with_capacity(m);
    let mut acc = 0.0;
    for &l in lengths {
        acc += l;
        cum.push(acc);
    }
    let law = PacketLaw::new(eps)?;
    let mut rng = replica_rng(seed, replica);
    let clock = Exp::new(law.beta()).expect("positive rate");
    let mut uf = UnionFind::new(m);
    let mut out = vec![(0.0, Partition::singletons(m))];
    let locate = |u: f64| cum.partition_point(|&c| c <= u).min(m - 1);
    let mut t = 0.0;
    loop {
        t += clock.sample(&mut rng);
        if t > t_max || uf.components() == 1 {
            break;
        }
        let r = law.sample(&mut rng);
        let first = locate(rng.gen());
        let mut changed = false;
        for _ in 1..r {
            changed |= uf.union(first, locate(rng.gen()));
        }
        if changed {
            out.push((t, uf.to_partition()));
        }
    }
    Ok(out)
}

/// Distribution of the number of isolated vertices on `K_n` with killing
/// `kappa` at intensity `alpha`.
#[derive(Debug, Clone)]
pub struct IsolatedExact {
    pub prob: f64,
    /// `E[S (S-1) ... (S-k+1)]` for `k = 1..=6`.
    pub factorial_moments: [f64; 6],
}

/// `log P(a given set of k vertices is isolated)`.
fn log_isolated_set(n: usize, kappa: f64, alpha: f64, k: usize) -> f64 {
    let nf = n as f64;
    let k = k as f64;
    -alpha * k * (-1.0 / (nf + kappa)).ln_1p() - alpha * (k / kappa).ln_1p()
}

fn ln_binom(n: usize, k: usize) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

pub const MAX_FULL_ALTERNATING_SUM: usize = 300;

/// `P(S_n = r)` by inclusion-exclusion over the sets of isolated vertices.
/// Above 300 vertices the sum is cut once its terms fall below rounding.
pub fn isolated_exact(n: usize, kappa: f64, alpha: f64, r: usize) -> Result<IsolatedExact> {
    if r > n {
        return Err(Error::OutOfRange(format!("r = {r} > n = {n}")));
    }
    if !(kappa > 0.0 && alpha >= 0.0) {
        return Err(Error::OutOfRange("need kappa > 0 and alpha >= 0".into()));
    }
    let mut fm = [0.0; 6];
    for (k, f) in fm.iter_mut().enumerate() {
        let k = k + 1;
        if k <= n {
            let falling: f64 = (0..k).map(|i| (n - i) as f64).product();
            *f = falling * log_isolated_set(n, kappa, alpha, k).exp();
        }
    }
    if alpha == 0.0 {
        return Ok(IsolatedExact { prob: if r == n { 1.0 } else { 0.0 }, factorial_moments: fm });
    }
    let lcr = ln_binom(n, r);
    let (mut sum, mut comp, mut abs_sum) = (0.0f64, 0.0f64, 0.0f64);
    let mut max_term = 0.0f64;
    for j in 0..=(n - r) {
        let lt = lcr + ln_binom(n - r, j) + log_isolated_set(n, kappa, alpha, r + j);
        let t = lt.exp();
        let term = if j % 2 == 0 { t } else { -t };
        let s = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - s) + term;
        } else {
            comp += (term - s) + sum;
        }
        sum = s;
        abs_sum += t;
        max_term = max_term.max(t);
        if n > MAX_FULL_ALTERNATING_SUM && t < max_term && t < 1e-18 {
            break;
        }
    }
    let residual = abs_sum * f64::EPSILON * ((n - r + 1) as f64).sqrt();
    if residual > 1e-6 {
        return Err(Error::UnstableSum(residual));
    }
    let p = sum + comp;
    if !(-1e-8..=1.0 + 1e-8).contains(&p) {
        log::warn!("isolated_exact: value {p} clamped");
    }
    Ok(IsolatedExact { prob: p.clamp(0.0, 1.0), factorial_moments: fm })
}

/// `alpha_n(a) = eps (1 + eps) n (log n + a)`.
pub fn cover_scale(n: usize, eps: f64, a: f64) -> f64 {
    eps * (1.0 + eps) * n as f64 * ((n as f64).ln() + a)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverRow {
    pub n: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub replica: u64,
    #[serde(rename = "T_norm")]
    pub t_norm: f64,
    #[serde(rename = "tau_norm")]
    pub tau_norm: f64,
    pub n_events: u64,
}

#[derive(Debug, Clone)]
pub struct CoverSamples {
    pub rows: Vec<CoverRow>,
    pub ks_cover: f64,
    pub ks_coalescence: f64,
}

/// Cover time (no singleton left) and coalescence time (one block) of the
/// packet chain from singletons, normalized by `eps (1 + eps) n` and shifted
/// by `log n`.
pub fn cover_and_coalescence_times(n: usize, eps: f64, replicas: usize, seed: u64) -> Result<CoverSamples> {
    if n < 3 {
        return Err(Error::InvalidArgument("need n >= 3".into()));
    }
    let law = PacketLaw::new(eps)?;
    let scale = eps * (1.0 + eps) * n as f64;
    let logn = (n as f64).ln();
    let rows = par_replicas(seed, replicas, |i, rng| {
        let clock = Exp::new(law.beta()).expect("positive rate");
        let mut uf = UnionFind::new(n);
        let mut t = 0.0;
        let mut events = 0u64;
        let mut cover = f64::NAN;
        loop {
            t += clock.sample(rng);
            events += 1;
            chain_step(&mut uf, n, &law, rng);
            if cover.is_nan() && uf.singletons() == 0 {
                cover = t;
            }
            if uf.components() == 1 {
                break;
            }
        }
        CoverRow {
            n,
            epsilon: eps,
            seed,
            replica: i as u64,
            t_norm: cover / scale - logn,
            tau_norm: t / scale - logn,
            n_events: events,
        }
    });
    let t: Vec<f64> = rows.iter().map(|r| r.t_norm).collect();
    let tau: Vec<f64> = rows.iter().map(|r| r.tau_norm).collect();
    Ok(CoverSamples { ks_cover: ks_statistic(&t, gumbel_cdf), ks_coalescence: ks_statistic(&tau, gumbel_cdf), rows })
}

/// Number of singleton blocks and of larger blocks at time `alpha`, one pair
/// per replica.
pub fn block_census(n: usize, eps: f64, alpha: f64, replicas: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    let law = PacketLaw::new(eps)?;
    Ok(par_replicas(seed, replicas, |_, rng| {
        let clock = Exp::new(law.beta()).expect("positive rate");
        let mut uf = UnionFind::new(n);
        let mut t = clock.sample(rng);
        while t <= alpha && uf.components() > 1 {
            chain_step(&mut uf, n, &law, rng);
            t += clock.sample(rng);
        }
        let s = uf.singletons();
        (s, uf.components() - s)
    }))
}
