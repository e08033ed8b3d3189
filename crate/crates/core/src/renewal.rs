//! Closed edges of the loop soup on `Z` with uniform killing: closed-form
//! marginals, the gap law, a finite-segment Monte Carlo and the scaling limit
//! of the renewal potential.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, WeightedGraph};
use crate::rng::par_replicas;
use crate::sampler::{sample_soup_with, SamplerPlan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenewalParams {
    pub kappa: f64,
    pub alpha: f64,
    /// Decay rate of the Green function, `e^{-rho}` solves `r + 1/r = 2 + kappa`.
    pub rho: f64,
}

impl RenewalParams {
    pub fn new(kappa: f64, alpha: f64) -> Result<RenewalParams> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::OutOfRange(format!("kappa = {kappa}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::OutOfRange(format!("alpha = {alpha}")));
        }
        Ok(RenewalParams { kappa, alpha, rho: decay_rate(kappa) })
    }

    /// `1 - e^{-2 rho}` without cancellation for small kappa.
    fn one_minus_r2(&self) -> f64 {
        -(-2.0 * self.rho).exp_m1()
    }
}

/// `log(1 + kappa/2 + sqrt(kappa + kappa^2/4))`.
pub fn decay_rate(kappa: f64) -> f64 {
    (kappa / 2.0 + (kappa + kappa * kappa / 4.0).sqrt()).ln_1p()
}

/// Probability that a given edge is crossed by no loop.
pub fn closed_edge_prob(p: &RenewalParams) -> f64 {
    p.one_minus_r2().powf(p.alpha)
}

/// Probability that the edge at distance `n` is closed given that a given
/// edge is closed. `n = 0` gives 1.
pub fn conditional_closed_prob(p: &RenewalParams, n: usize) -> f64 {
    let den = -(-2.0 * p.rho * (n as f64 + 1.0)).exp_m1();
    (p.one_minus_r2() / den).powf(p.alpha)
}

/// Law of the distance between consecutive closed edges, `nu(n)` for
/// `n = 1..=n_max`.
#[derive(Debug, Clone, Serialize)]
pub struct GapLaw {
    pub probs: Vec<f64>,
    /// `1 - sum probs`.
    pub deficit: f64,
}

impl GapLaw {
    pub fn nu(&self, n: usize) -> f64 {
        if n == 0 || n > self.probs.len() {
            0.0
        } else {
            self.probs[n - 1]
        }
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }

    /// `sum_k nu^{*k}(n)` for `n = 1..=len`.
    pub fn reconvolve(&self) -> Vec<f64> {
        let m = self.probs.len();
        let mut q = vec![0.0; m + 1];
        q[0] = 1.0;
        for n in 1..=m {
            q[n] = (1..=n).map(|j| self.probs[j - 1] * q[n - j]).sum();
        }
        q.remove(0);
        q
    }
}

/// Inverts `q(n) = sum_{m=1}^{n} nu(m) q(n - m)`.
pub fn gap_law(p: &RenewalParams, n_max: usize) -> Result<GapLaw> {
    if n_max == 0 {
        return Err(Error::OutOfRange("n_max must be positive".into()));
    }
    let q: Vec<f64> = (0..=n_max).map(|n| conditional_closed_prob(p, n)).collect();
    let mut nu = vec![0.0; n_max + 1];
    for n in 1..=n_max {
        let s: f64 = (1..n).map(|m| nu[m] * q[n - m]).sum();
        let v = q[n] - s;
        if v < 0.0 {
            if v < -1e-8 {
                return Err(Error::NegativeMass(n, v));
            }
            log::debug!("gap_law: clamped nu({n}) = {v}");
        }
        nu[n] = v.max(0.0);
    }
    nu.remove(0);
    let deficit = 1.0 - nu.iter().sum::<f64>();
    Ok(GapLaw { probs: nu, deficit })
}

/// Smallest table length whose deficit is below `target`, at most `cap`.
pub fn gap_law_to_deficit(p: &RenewalParams, target: f64, cap: usize) -> Result<GapLaw> {
    // nu decays at least like e^{-2 rho n} q-wise; start there and double.
    let mut n = ((-target.ln()) / (2.0 * p.rho)).ceil().max(8.0) as usize;
    loop {
        let g = gap_law(p, n.min(cap))?;
        if g.deficit < target || n >= cap {
            return Ok(g);
        }
        n *= 2;
    }
}

/// Integrand `(2 sqrt(k) / (1 - e^{-2 sqrt(k) u}))^alpha e^{-s u}`.
fn potential_integrand(kappa: f64, alpha: f64, s: f64, u: f64) -> f64 {
    let r = 2.0 * kappa.sqrt();
    (r / -(-r * u).exp_m1()).powf(alpha) * (-s * u).exp()
}

/// `I_kappa(s) = int_0^inf (2 sqrt(k)/(1 - e^{-2 sqrt(k) u}))^alpha e^{-s u} du`.
pub fn potential_transform(kappa: f64, alpha: f64, s: f64, tol: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} not in (0, 1)")));
    }
    if !(kappa > 0.0 && s > 0.0) {
        return Err(Error::OutOfRange("need kappa > 0 and s > 0".into()));
    }
    let c = 1.0 / kappa.sqrt();
    let g = 1.0 / (1.0 - alpha);
    // [0, c] with u = v^g
    let head = quadrature::double_exponential::integrate(
        |v: f64| {
            if v <= 0.0 {
                // u^{-alpha} g v^{g-1} = g
                return g;
            }
            let u = v.powf(g);
            potential_integrand(kappa, alpha, s, u) * g * v.powf(g - 1.0)
        },
        0.0,
        c.powf(1.0 - alpha),
        tol,
    );
    // [c, inf) with u = c - ln(w)/s
    let tail = quadrature::double_exponential::integrate(
        |w: f64| {
            if w <= 0.0 {
                return 0.0;
            }
            let u = c - w.ln() / s;
            let r = 2.0 * kappa.sqrt();
            (r / -(-r * u).exp_m1()).powf(alpha) * (-s * c).exp() / s
        },
        0.0,
        1.0,
        tol,
    );
    let err = head.error_estimate + tail.error_estimate;
    let val = head.integral + tail.integral;
    if !val.is_finite() || err > 100.0 * tol.max(1e-15 * val.abs()) {
        return Err(Error::QuadratureFailure(format!("estimate {val}, error {err}")));
    }
    Ok(val)
}

/// `sum_{n >= 0} q(n) e^{-s n}`, cut when the remaining terms are below `tol`
/// relative to the sum.
pub fn potential_series(p: &RenewalParams, s: f64, tol: f64) -> f64 {
    let mut sum = 0.0;
    let ratio = (-s).exp();
    let mut n = 0usize;
    loop {
        let t = conditional_closed_prob(p, n) * (-s * n as f64).exp();
        sum += t;
        // q is nonincreasing, so the rest is below t r / (1 - r)
        if t * ratio / (1.0 - ratio) < tol * sum {
            return sum;
        }
        n += 1;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitRow {
    pub s: f64,
    pub epsilon: f64,
    pub integral: f64,
    pub scaled_series: f64,
    pub rel_error: f64,
}

/// Compares `eps^{(1-alpha)/2} sum_n q^{(kappa eps)}(n) e^{-s sqrt(eps) n}`
/// with `I_kappa(s)` on a grid.
pub fn subordinator_limit_check(kappa: f64, alpha: f64, s_grid: &[f64], eps_grid: &[f64]) -> Result<Vec<LimitRow>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} not in (0, 1)")));
    }
    let mut rows = Vec::new();
    for &s in s_grid {
        let integral = potential_transform(kappa, alpha, s, 1e-10)?;
        for &eps in eps_grid {
            if !(eps > 0.0) {
                return Err(Error::OutOfRange(format!("epsilon = {eps}")));
            }
            let p = RenewalParams::new(kappa * eps, alpha)?;
            let scaled = eps.powf((1.0 - alpha) / 2.0) * potential_series(&p, s * eps.sqrt(), 1e-13);
            rows.push(LimitRow { s, epsilon: eps, integral, scaled_series: scaled, rel_error: (scaled / integral - 1.0).abs() });
        }
    }
    Ok(rows)
}

/// Path on `-m..=m` (vertices `0..=2m`) with unit conductances and killing
/// topped up at the two ends so that `lambda = 2 + kappa` everywhere.
pub fn segment_graph(m: usize, kappa: f64) -> Result<WeightedGraph> {
    let n = 2 * m + 1;
    let mut b = GraphBuilder::new(n);
    for x in 0..n - 1 {
        b = b.edge(x, x + 1, 1.0);
    }
    let mut k = vec![kappa; n];
    k[0] += 1.0;
    k[n - 1] += 1.0;
    b.killing(k).build()
}

/// Closed-edge counts on one segment, for one intensity.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SegmentStats {
    pub alpha: f64,
    pub replicas: usize,
    /// Replicas where the central edge `{m, m+1}` is closed.
    pub center_closed: usize,
    /// `joint[n-1]`: central edge and the edge `n` to its right both closed.
    pub joint: Vec<usize>,
    /// `gaps[n-1]`: distance from the central closed edge to the next closed
    /// edge on the right equals `n`.
    pub gaps: Vec<usize>,
    /// Central closed edge with no closed edge inside the window.
    pub gap_overflow: usize,
    /// Closed counts for edges `{x, x+1}` with `x` in the central half.
    pub central_half: Vec<usize>,
}

/// Monte Carlo of closed edges on `segment_graph(m, kappa)`. One soup is
/// sampled at the largest intensity and filtered by arrival mark for the
/// others. `n_max` bounds the joint and gap tables.
pub fn segment_mc(
    m: usize,
    kappa: f64,
    alphas: &[f64],
    n_max: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<SegmentStats>> {
    if m < 2 || n_max == 0 || n_max >= m {
        return Err(Error::OutOfRange("need 2 <= m and 0 < n_max < m".into()));
    }
    let g = segment_graph(m, kappa)?;
    let plan = SamplerPlan::build(&g, 1e-10)?;
    let a_max = alphas.iter().cloned().fold(0.0, f64::max);
    let ne = 2 * m;
    let center = m;
    let (lo, hi) = (m / 2, ne - m / 2);
    let per: Vec<Result<Vec<Vec<bool>>>> = par_replicas(seed, replicas, |_, rng| {
        let soup = sample_soup_with(&plan, a_max, rng)?;
        // first arrival mark crossing each edge
        let mut first = vec![f64::INFINITY; ne];
        for l in &soup.loops {
            let v = l.lp.vertices();
            let k = v.len();
            for i in 0..k {
                let (a, b) = (v[i], v[(i + 1) % k]);
                let e = a.min(b);
                if first[e] > l.mark {
                    first[e] = l.mark;
                }
            }
        }
        Ok(alphas.iter().map(|&a| first.iter().map(|&f| f >= a).collect()).collect())
    });
    let mut out: Vec<SegmentStats> = alphas
        .iter()
        .map(|&a| SegmentStats {
            alpha: a,
            replicas,
            joint: vec![0; n_max],
            gaps: vec![0; n_max],
            central_half: vec![0; hi - lo],
            ..Default::default()
        })
        .collect();
    for r in per {
        let r = r?;
        for (st, closed) in out.iter_mut().zip(r) {
            for (c, &x) in st.central_half.iter_mut().zip(&closed[lo..hi]) {
                *c += x as usize;
            }
            if !closed[center] {
                continue;
            }
            st.center_closed += 1;
            for n in 1..=n_max {
                if closed[center + n] {
                    st.joint[n - 1] += 1;
                }
            }
            match (1..=n_max).find(|&n| closed[center + n]) {
                Some(n) => st.gaps[n - 1] += 1,
                None => st.gap_overflow += 1,
            }
        }
    }
    Ok(out)
}
