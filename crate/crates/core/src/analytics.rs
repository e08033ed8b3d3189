//! Closed-form cluster probabilities from Green's function determinants.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{check_subset, complement, normalize_subset, WeightedGraph};
use crate::linalg::{green, log_abs_det_lu, log_det_green, log_det_spd, restricted_laplacian};
use crate::loops::total_mass;
use crate::partition::{for_each_set_partition, Partition};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("alpha = {alpha}")))
    }
}

fn check_partition(g: &WeightedGraph, pi: &Partition) -> Result<()> {
    if pi.n() != g.n() {
        return Err(Error::InvalidPartition(format!("partition of {} points on {} vertices", pi.n(), g.n())));
    }
    Ok(())
}

/// `sum_i log det G^(B_i) - log det G`, never positive.
pub fn log_ratio_finer(g: &WeightedGraph, pi: &Partition) -> Result<f64> {
    check_partition(g, pi)?;
    let all: Vec<usize> = (0..g.n()).collect();
    let mut s = -log_det_green(g, &all)?;
    for b in pi.blocks() {
        s += log_det_green(g, &b)?;
    }
    Ok(s.min(0.0))
}

/// `P(C_alpha finer than pi)` for clusters started from `pi0`.
pub fn prob_finer(g: &WeightedGraph, pi: &Partition, alpha: f64, pi0: Option<&Partition>) -> Result<f64> {
    check_alpha(alpha)?;
    check_partition(g, pi)?;
    if let Some(p0) = pi0 {
        check_partition(g, p0)?;
        if !p0.refines(pi) {
            return Ok(0.0);
        }
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    Ok((alpha * log_ratio_finer(g, pi)?).exp())
}

pub const MAX_EXACT_SUM_VERTICES: usize = 12;

/// `P(C_alpha = pi)` by Moebius inversion over the partitions between `pi0`
/// and `pi`.
pub fn prob_equal(g: &WeightedGraph, pi: &Partition, alpha: f64, pi0: Option<&Partition>) -> Result<f64> {
    check_alpha(alpha)?;
    check_partition(g, pi)?;
    let n = g.n();
    if n > MAX_EXACT_SUM_VERTICES {
        return Err(Error::TooLargeForExactSum(n));
    }
    let singles = Partition::singletons(n);
    let p0 = pi0.unwrap_or(&singles);
    check_partition(g, p0)?;
    if !p0.refines(pi) {
        return Ok(0.0);
    }
    let all: Vec<usize> = (0..n).collect();
    let ld_all = log_det_green(g, &all)?;
    // table of log det G^(F) by bitmask, filled on demand
    let mut table = vec![f64::NAN; 1usize << n];
    let mut ld = |mask: u32| -> Result<f64> {
        let v = table[mask as usize];
        if !v.is_nan() {
            return Ok(v);
        }
        let sub: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let v = log_det_green(g, &sub)?;
        table[mask as usize] = v;
        Ok(v)
    };
    // Atoms are the blocks of pi0, grouped by the block of pi containing them.
    let atoms: Vec<u32> = p0.blocks().iter().map(|b| b.iter().fold(0u32, |m, &x| m | 1 << x)).collect();
    let mut groups: Vec<Vec<u32>> = vec![Vec::new(); pi.num_blocks()];
    for (a, b) in atoms.iter().zip(p0.blocks()) {
        groups[pi.block_of(b[0])].push(*a);
    }
    // For each group, the list of (number of pieces, sum of log det over pieces).
    let mut per_group: Vec<Vec<(usize, f64)>> = Vec::with_capacity(groups.len());
    for grp in &groups {
        let mut opts = Vec::new();
        let mut err = None;
        for_each_set_partition(grp.len(), |rgs, k| {
            let mut masks = vec![0u32; k];
            for (i, &l) in rgs.iter().enumerate() {
                masks[l as usize] |= grp[i];
            }
            let mut s = 0.0;
            for m in masks {
                match ld(m) {
                    Ok(v) => s += v,
                    Err(e) => err = Some(e),
                }
            }
            opts.push((k, s));
        });
        if let Some(e) = err {
            return Err(e);
        }
        per_group.push(opts);
    }
    let fact = |k: usize| (1..k).map(|i| i as f64).product::<f64>();
    // Walk the product of per-group choices.
    let mut total = 0.0;
    let mut comp = 0.0;
    let mut idx = vec![0usize; per_group.len()];
    loop {
        let mut log_ratio = -ld_all;
        let mut coef = 1.0;
        for (g_i, &i) in idx.iter().enumerate() {
            let (k, s) = per_group[g_i][i];
            log_ratio += s;
            coef *= if (k - 1) % 2 == 0 { 1.0 } else { -1.0 } * fact(k);
        }
        let term = coef * (alpha * log_ratio.min(0.0)).exp();
        // Neumaier summation
        let t = total + term;
        if total.abs() >= term.abs() {
            comp += (total - t) + term;
        } else {
            comp += (term - t) + total;
        }
        total = t;
        // advance odometer
        let mut j = 0;
        while j < idx.len() {
            idx[j] += 1;
            if idx[j] < per_group[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == idx.len() {
            break;
        }
    }
    let v = total + comp;
    Ok(clamp_prob(v, "prob_equal"))
}

pub(crate) fn clamp_prob(v: f64, what: &str) -> f64 {
    if v < -1e-9 || v > 1.0 + 1e-9 {
        log::warn!("{what}: value {v} outside [0, 1] clamped");
    }
    v.clamp(0.0, 1.0)
}

/// Rate at which the loops merging exactly the blocks `j` of `pi` arrive.
pub fn transition_rate(g: &WeightedGraph, pi: &Partition, j: &[usize]) -> Result<f64> {
    check_partition(g, pi)?;
    let j = normalize_subset(j);
    if j.len() < 2 {
        return Err(Error::JTooSmall);
    }
    if *j.last().unwrap() >= pi.num_blocks() {
        return Err(Error::InvalidArgument("block index out of range".into()));
    }
    if j.len() > 20 {
        return Err(Error::TooLarge(format!("{} blocks in a merge set", j.len())));
    }
    let blocks = pi.blocks();
    let m = j.len();
    let full = (1u32 << m) - 1;
    let mut total = 0.0;
    // sum over proper subsets I of J; the union runs over J \ I
    for i_mask in 0..full {
        let keep = full & !i_mask;
        let mut union: Vec<usize> = Vec::new();
        for (t, &b) in j.iter().enumerate() {
            if keep >> t & 1 == 1 {
                union.extend_from_slice(&blocks[b]);
            }
        }
        union.sort_unstable();
        let sign = if i_mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * log_det_green(g, &union)?;
    }
    if total < -1e-9 * total.abs().max(1e-12) && total < -1e-12 {
        log::warn!("transition_rate: negative value {total} set to zero");
    }
    Ok(total.max(0.0))
}

/// All merge sets `J` with `|J| >= 2` and their rates.
pub fn all_transition_rates(g: &WeightedGraph, pi: &Partition) -> Result<Vec<(Vec<usize>, f64)>> {
    let k = pi.num_blocks();
    if k > 16 {
        return Err(Error::TooLarge(format!("{k} blocks")));
    }
    let mut out = Vec::new();
    for mask in 1u32..(1 << k) {
        if mask.count_ones() < 2 {
            continue;
        }
        let j: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let r = transition_rate(g, pi, &j)?;
        out.push((j, r));
    }
    Ok(out)
}

/// Vertices of `d` with a neighbour outside `d`.
pub fn inner_boundary(g: &WeightedGraph, d: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; g.n()];
    for &x in d {
        inside[x] = true;
    }
    d.iter().copied().filter(|&x| g.neighbors(x).iter().any(|&(y, _)| !inside[y])).collect()
}

/// Exit distribution from `d`: `H(x, y)` is the probability that the walk
/// started at `x` first leaves `d` at `y` (before being killed).
#[derive(Debug, Clone)]
pub struct ExitKernel {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

impl ExitKernel {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        match (self.rows.binary_search(&x), self.cols.binary_search(&y)) {
            (Ok(i), Ok(j)) => self.matrix[(i, j)],
            _ => 0.0,
        }
    }
}

/// `H^(D) = (I - P_DD)^{-1} P_{D, D^c} = G^(D) C_{D, D^c}`.
pub fn exit_kernel(g: &WeightedGraph, d: &[usize]) -> Result<ExitKernel> {
    check_subset(g.n(), d)?;
    let cols = complement(g.n(), d);
    let gd = green(g, d)?;
    let mut c = DMatrix::zeros(d.len(), cols.len());
    for (i, &x) in d.iter().enumerate() {
        for (j, &y) in cols.iter().enumerate() {
            c[(i, j)] = g.conductance(x, y);
        }
    }
    Ok(ExitKernel { rows: d.to_vec(), cols, matrix: &gd.matrix * c })
}

/// Matrix on the union of the inner boundaries of the blocks: identity
/// within a block, minus the exit kernel across blocks.
#[derive(Debug, Clone)]
pub struct ExitBoundaryMatrix {
    pub vertices: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

pub fn exit_boundary_matrix(g: &WeightedGraph, pi: &Partition) -> Result<ExitBoundaryMatrix> {
    check_partition(g, pi)?;
    let blocks = pi.blocks();
    let mut vertices: Vec<usize> = Vec::new();
    let mut kernels = Vec::with_capacity(blocks.len());
    for b in &blocks {
        vertices.extend(inner_boundary(g, b));
        kernels.push(exit_kernel(g, b)?);
    }
    vertices.sort_unstable();
    let m = vertices.len();
    let mut h = DMatrix::identity(m, m);
    for (i, &x) in vertices.iter().enumerate() {
        let k = &kernels[pi.block_of(x)];
        for (j, &y) in vertices.iter().enumerate() {
            if pi.block_of(x) != pi.block_of(y) {
                h[(i, j)] = -k.get(x, y);
            }
        }
    }
    Ok(ExitBoundaryMatrix { vertices, matrix: h })
}

/// `P(C_alpha finer than pi)` through exit distributions: `det(H)^alpha`.
pub fn prob_finer_exit(g: &WeightedGraph, pi: &Partition, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let h = exit_boundary_matrix(g, pi)?;
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let (sign, ld) = log_abs_det_lu(h.matrix);
    if sign <= 0.0 {
        return Err(Error::SingularSystem);
    }
    Ok((alpha * ld.min(0.0)).exp())
}

fn check_edges(g: &WeightedGraph, edges: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::with_capacity(edges.len());
    for &(u, v) in edges {
        if !g.has_edge(u, v) {
            return Err(Error::BadEdge(u, v, "not an edge of the graph"));
        }
        out.push(if u < v { (u, v) } else { (v, u) });
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// `log det G_E`: conductances of `edges` removed and moved into killing, so
/// `lambda` is unchanged.
pub fn log_det_green_closed(g: &WeightedGraph, edges: &[(usize, usize)]) -> Result<f64> {
    let edges = check_edges(g, edges)?;
    let all: Vec<usize> = (0..g.n()).collect();
    let mut m = restricted_laplacian(g, &all);
    for &(u, v) in &edges {
        m[(u, v)] = 0.0;
        m[(v, u)] = 0.0;
    }
    Ok(-log_det_spd(m)?)
}

/// Probability that no loop crosses any edge of `edges`.
pub fn prob_edges_closed(g: &WeightedGraph, edges: &[(usize, usize)], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let all: Vec<usize> = (0..g.n()).collect();
    let r = log_det_green_closed(g, edges)? - log_det_green(g, &all)?;
    Ok((alpha * r.min(0.0)).exp())
}

/// `P(C_alpha finer than pi | every edge in E is closed)`.
pub fn prob_finer_given_closed(
    g: &WeightedGraph,
    pi: &Partition,
    edges: &[(usize, usize)],
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_partition(g, pi)?;
    if edges.is_empty() {
        return Err(Error::InvalidArgument("closed edge set must be nonempty".into()));
    }
    let edges = check_edges(g, edges)?;
    for &(u, v) in &edges {
        if pi.block_of(u) == pi.block_of(v) {
            return Err(Error::EdgeInsideBlock(u, v));
        }
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let mut s = -log_det_green_closed(g, &edges)?;
    for b in pi.blocks() {
        s += log_det_green(g, &b)?;
    }
    Ok((alpha * s.min(0.0)).exp())
}

/// Both sides of the restriction identity and the three evaluations of the
/// factor for loops meeting both `U` and the complement of `D`.
#[derive(Debug, Clone, Copy)]
pub struct RestrictionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
    pub inside_factor: f64,
    pub via_mass: f64,
    pub via_green_ratio: f64,
    pub via_jacobi: f64,
}

pub fn restriction_factorization_check(
    g: &WeightedGraph,
    u: &[usize],
    d: &[usize],
    alpha: f64,
) -> Result<RestrictionCheck> {
    check_alpha(alpha)?;
    let n = g.n();
    let u = normalize_subset(u);
    let d = normalize_subset(d);
    check_subset(n, &u)?;
    check_subset(n, &d)?;
    if u.is_empty() || u.len() == n || d.len() == n || !u.iter().all(|x| d.binary_search(x).is_ok()) {
        return Err(Error::InvalidArgument("need nonempty U inside D, both proper".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    let uc = complement(n, &u);
    let dc = complement(n, &d);
    let d_minus_u: Vec<usize> = d.iter().copied().filter(|x| u.binary_search(x).is_err()).collect();
    let ld = |s: &[usize]| log_det_green(g, s);

    let lhs = (alpha * (ld(&u)? + ld(&uc)? - ld(&all)?).min(0.0)).exp();
    let inside_factor = (alpha * (ld(&u)? + ld(&d_minus_u)? - ld(&d)?).min(0.0)).exp();

    let via_mass = (-alpha
        * (total_mass(g, &all)? - total_mass(g, &uc)? - total_mass(g, &d)? + total_mass(g, &d_minus_u)?))
        .exp();
    let via_green_ratio = (alpha * (ld(&uc)? + ld(&d)? - ld(&all)? - ld(&d_minus_u)?)).exp();
    let gf = green(g, &all)?;
    let u_dc = normalize_subset(&[u.clone(), dc.clone()].concat());
    let lpd = |s: &[usize]| log_det_spd(gf.principal(s));
    let via_jacobi = (-alpha * (lpd(&u)? + lpd(&dc)? - lpd(&u_dc)?)).exp();

    for (a, b, what) in [
        (via_mass, via_green_ratio, "mass vs Green ratio"),
        (via_green_ratio, via_jacobi, "Green ratio vs Jacobi"),
    ] {
        if (a - b).abs() > 1e-10 {
            return Err(Error::Inconsistent { what, lhs: a, rhs: b });
        }
    }
    let rhs = inside_factor * via_green_ratio;
    Ok(RestrictionCheck { lhs, rhs, diff: (lhs - rhs).abs(), inside_factor, via_mass, via_green_ratio, via_jacobi })
}

/// Doob transform by a positive excessive function `h`:
/// `C'(x,y) = h(x) h(y) C(x,y)`, `kappa'(x) = h(x) ((I - P) h)(x) lambda(x)`.
pub fn h_transform(g: &WeightedGraph, h: &[f64]) -> Result<WeightedGraph> {
    let n = g.n();
    if h.len() != n {
        return Err(Error::InvalidArgument("h has the wrong length".into()));
    }
    if let Some(x) = h.iter().position(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(Error::OutOfRange(format!("h({x}) = {} must be positive", h[x])));
    }
    let hmax = h.iter().cloned().fold(0.0, f64::max);
    let mut kappa = vec![0.0; n];
    for x in 0..n {
        let ph: f64 = g.neighbors(x).iter().map(|&(y, c)| c * h[y]).sum::<f64>() / g.lambda(x);
        let excess = ph - h[x];
        if excess > 1e-12 * hmax {
            return Err(Error::ExcessiveH(x, excess));
        }
        kappa[x] = (h[x] * (-excess) * g.lambda(x)).max(0.0);
    }
    let mut b = crate::graph::GraphBuilder::new(n).killing(kappa);
    for &(u, v, c) in g.edges() {
        b = b.edge(u, v, h[u] * h[v] * c);
    }
    b.build()
}

/// `E prod s_x^{N_x}` over `F` for loops inside `F`:
/// `det(diag(s) + diag(lambda (1 - s)) G^(F))^{-alpha}`. Entries of `s`
/// equal to zero give the probability of no visit at those vertices.
pub fn occupation_gf(g: &WeightedGraph, f: &[usize], s: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_subset(g.n(), f)?;
    if s.len() != f.len() {
        return Err(Error::InvalidArgument("s must have one value per vertex of F".into()));
    }
    if let Some(v) = s.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
        return Err(Error::OutOfRange(format!("s = {v} outside [0, 1]")));
    }
    let gf = green(g, f)?;
    let m = f.len();
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        let lam = g.lambda(f[i]);
        for j in 0..m {
            a[(i, j)] = lam * (1.0 - s[i]) * gf.matrix[(i, j)];
        }
        a[(i, i)] += s[i];
    }
    let (sign, ld) = log_abs_det_lu(a);
    if sign <= 0.0 {
        return Err(Error::SingularSystem);
    }
    Ok((-alpha * ld).exp())
}

/// `P(no loop visits x) = (lambda_x G(x, x))^{-alpha}`.
pub fn prob_vertex_unvisited(g: &WeightedGraph, x: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if x >= g.n() {
        return Err(Error::VertexOutOfRange(x));
    }
    let gxx = if g.n() <= 2000 {
        green(g, &(0..g.n()).collect::<Vec<_>>())?.get(x, x)
    } else {
        crate::linalg::green_diagonal_entry(g, x)?
    };
    Ok((g.lambda(x) * gxx).powf(-alpha))
}

/// `det(b J_n + (a - b) I_n) = (a - b)^{n-1} (a + (n-1) b)`.
pub fn rank_one_det(a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 1, "rank_one_det needs n >= 1");
    (a - b).powi(n as i32 - 1) * (a + (n as f64 - 1.0) * b)
}

/// Closed forms on the complete graph `K_n` with unit conductances and
/// uniform killing `kappa`.
pub mod complete {
    use super::*;

    /// `m_j = (1 - j/(n + kappa))^{-alpha}`, the `j`-th moment of
    /// `exp(Z/(n + kappa))` with `Z ~ Gamma(alpha, 1)`.
    pub fn moment(n: usize, kappa: f64, alpha: f64, j: usize) -> f64 {
        (1.0 - j as f64 / (n as f64 + kappa)).powf(-alpha)
    }

    /// `P(C_alpha finer than pi) = prod_i m_{|B_i|} / m_n`.
    pub fn prob_finer(n: usize, kappa: f64, alpha: f64, block_sizes: &[usize]) -> f64 {
        block_sizes.iter().map(|&b| moment(n, kappa, alpha, b)).product::<f64>() / moment(n, kappa, alpha, n)
    }

    /// Cumulants from moments: `c_j = m_j - sum_{k<j} C(j-1, k-1) c_k m_{j-k}`.
    pub fn cumulants(moments: &[f64]) -> Vec<f64> {
        // moments[0] = m_0 = 1
        let n = moments.len() - 1;
        let mut c = vec![0.0; n + 1];
        for j in 1..=n {
            let mut s = moments[j];
            for k in 1..j {
                s -= binom(j - 1, k - 1) * c[k] * moments[j - k];
            }
            c[j] = s;
        }
        c
    }

    /// `P(C_alpha = {X}) = c_n / m_n`.
    pub fn prob_single_cluster(n: usize, kappa: f64, alpha: f64) -> f64 {
        let m: Vec<f64> = (0..=n).map(|j| moment(n, kappa, alpha, j)).collect();
        let c = cumulants(&m);
        c[n] / m[n]
    }

    /// `sum_{I < J} (-1)^{|I|+1} log(1 - sum_{u in J\I} |B_u| / (n + kappa))`.
    pub fn transition_rate(n: usize, kappa: f64, j_sizes: &[usize]) -> f64 {
        let m = j_sizes.len();
        let full = (1u32 << m) - 1;
        let mut s = 0.0;
        for i_mask in 0..full {
            let tot: usize = (0..m).filter(|t| (full & !i_mask) >> t & 1 == 1).map(|t| j_sizes[t]).sum();
            let sign = if i_mask.count_ones() % 2 == 0 { -1.0 } else { 1.0 };
            s += sign * (1.0 - tot as f64 / (n as f64 + kappa)).ln();
        }
        s
    }

    /// Occupation generating function of `F` with uniform `s`, through the
    /// rank-one determinant: `G^(F) = (I + J/(lambda + 1 - f)) / (lambda + 1)`.
    pub fn occupation_gf(n: usize, kappa: f64, f: usize, s: f64, alpha: f64) -> f64 {
        let lam = n as f64 - 1.0 + kappa;
        let b = lam * (1.0 - s) / ((lam + 1.0) * (lam + 1.0 - f as f64));
        let a = s + lam * (1.0 - s) / (lam + 1.0) + b;
        rank_one_det(a, b, f).powf(-alpha)
    }

    pub(crate) fn binom(n: usize, k: usize) -> f64 {
        if k > n {
            return 0.0;
        }
        let k = k.min(n - k);
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn k4() -> WeightedGraph {
        WeightedGraph::complete(4, 1.0).unwrap()
    }

    fn pairs() -> Partition {
        Partition::from_blocks(4, &[vec![0, 1], vec![2, 3]]).unwrap()
    }

    #[test]
    fn k4_prob_finer() {
        let g = k4();
        assert_relative_eq!(prob_finer(&g, &pairs(), 1.0, None).unwrap(), 5.0 / 9.0, max_relative = 1e-13);
        assert_eq!(prob_finer(&g, &Partition::whole(4), 2.0, None).unwrap(), 1.0);
        assert_eq!(prob_finer(&g, &pairs(), 0.0, None).unwrap(), 1.0);
        let p0 = Partition::from_blocks(4, &[vec![0, 2], vec![1], vec![3]]).unwrap();
        assert_eq!(prob_finer(&g, &pairs(), 1.0, Some(&p0)).unwrap(), 0.0);
    }

    #[test]
    fn k4_exit_form() {
        let g = k4();
        assert_relative_eq!(prob_finer_exit(&g, &pairs(), 1.0).unwrap(), 5.0 / 9.0, max_relative = 1e-12);
        assert_eq!(prob_finer_exit(&g, &Partition::whole(4), 1.0).unwrap(), 1.0);
        let h = exit_boundary_matrix(&g, &pairs()).unwrap();
        for i in 0..4 {
            assert_eq!(h.matrix[(i, i)], 1.0);
        }
        assert_eq!(h.matrix[(0, 1)], 0.0);
        assert!(h.matrix[(0, 2)] < 0.0 && h.matrix[(0, 2)] >= -1.0);
    }

    #[test]
    fn path_exit_form_alpha_two() {
        let g = WeightedGraph::path(6, 0.5).unwrap();
        let pi = Partition::from_blocks(6, &[vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        let a = prob_finer(&g, &pi, 2.0, None).unwrap();
        let b = prob_finer_exit(&g, &pi, 2.0).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn two_vertex_rate_and_closed_edge() {
        let g = WeightedGraph::two_vertex(1.0, 1.0).unwrap();
        let r = transition_rate(&g, &Partition::singletons(2), &[0, 1]).unwrap();
        assert_relative_eq!(r, (4.0f64 / 3.0).ln(), max_relative = 1e-13);
        let p = prob_edges_closed(&g, &[(0, 1)], 1.0).unwrap();
        assert_relative_eq!(p, 0.75, max_relative = 1e-13);
        assert_relative_eq!(p, (-total_mass(&g, &[0, 1]).unwrap()).exp(), max_relative = 1e-13);
        assert_eq!(prob_edges_closed(&g, &[], 1.0).unwrap(), 1.0);
    }

    #[test]
    fn merge_set_too_small() {
        let g = k4();
        assert!(matches!(transition_rate(&g, &pairs(), &[1]), Err(Error::JTooSmall)));
    }

    #[test]
    fn kn_rates_match_generic() {
        for n in 2..=8 {
            let g = WeightedGraph::complete(n, 0.6).unwrap();
            let pi = Partition::from_labels(&(0..n).map(|x| x % 3).collect::<Vec<_>>());
            let sizes = pi.block_sizes();
            for (j, r) in all_transition_rates(&g, &pi).unwrap() {
                let js: Vec<usize> = j.iter().map(|&b| sizes[b]).collect();
                let c = complete::transition_rate(n, 0.6, &js);
                assert!((r - c).abs() < 1e-10, "n={n} J={j:?}: {r} vs {c}");
            }
        }
    }

    #[test]
    fn rates_add_up_to_crossing_mass() {
        let g = WeightedGraph::cycle(6, 0.3).unwrap();
        let pi = Partition::from_blocks(6, &[vec![0, 1], vec![2, 3, 4], vec![5]]).unwrap();
        let sum: f64 = all_transition_rates(&g, &pi).unwrap().iter().map(|r| r.1).sum();
        let all: Vec<usize> = (0..6).collect();
        let mut want = total_mass(&g, &all).unwrap();
        for b in pi.blocks() {
            want -= total_mass(&g, &b).unwrap();
        }
        assert!((sum - want).abs() < 1e-10);
    }

    #[test]
    fn prob_equal_sums_to_one() {
        let g = WeightedGraph::cycle(5, 0.4).unwrap();
        let mut total = 0.0;
        crate::partition::for_each_set_partition(5, |rgs, _| {
            let pi = Partition::from_labels(rgs);
            total += prob_equal(&g, &pi, 1.3, None).unwrap();
        });
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn kn_single_cluster_is_cumulant_ratio() {
        for n in 2..=8 {
            let g = WeightedGraph::complete(n, 1.5).unwrap();
            let v = prob_equal(&g, &Partition::whole(n), 0.8, None).unwrap();
            let c = complete::prob_single_cluster(n, 1.5, 0.8);
            assert!((v - c).abs() < 1e-9, "n={n}: {v} vs {c}");
        }
    }

    #[test]
    fn kn_block_formula() {
        let g = WeightedGraph::complete(6, 2.0).unwrap();
        let pi = Partition::from_blocks(6, &[vec![0, 1, 2], vec![3, 4], vec![5]]).unwrap();
        let v = prob_finer(&g, &pi, 1.7, None).unwrap();
        assert_relative_eq!(v, complete::prob_finer(6, 2.0, 1.7, &[3, 2, 1]), max_relative = 1e-12);
    }

    #[test]
    fn closed_cross_edges_force_finer() {
        let g = k4();
        let cross = [(0, 2), (0, 3), (1, 2), (1, 3)];
        let v = prob_finer_given_closed(&g, &pairs(), &cross, 1.0).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-12);
        assert!(matches!(prob_finer_given_closed(&g, &pairs(), &[(0, 1)], 1.0), Err(Error::EdgeInsideBlock(0, 1))));
        assert_eq!(prob_finer_given_closed(&g, &pairs(), &[(0, 2)], 0.0).unwrap(), 1.0);
        let one = prob_finer_given_closed(&g, &pairs(), &[(0, 2)], 1.0).unwrap();
        assert!(one > 5.0 / 9.0 && one < 1.0);
    }

    #[test]
    fn restriction_identity_on_k5() {
        let g = WeightedGraph::complete(5, 1.0).unwrap();
        let r = restriction_factorization_check(&g, &[0], &[0, 1, 2], 1.0).unwrap();
        assert!(r.diff < 1e-10);
        let r = restriction_factorization_check(&g, &[0, 1], &[0, 1], 0.7).unwrap();
        assert!(r.diff < 1e-10);
        assert_relative_eq!(r.inside_factor, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn h_transform_k4() {
        let g = k4();
        let t = h_transform(&g, &[2.0, 1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(t.kappa(0), 10.0, max_relative = 1e-13);
        assert_eq!(t.kappa(1), 0.0);
        assert_relative_eq!(t.lambda(0), 4.0 * 4.0, max_relative = 1e-13);
        assert_relative_eq!(t.conductance(0, 1), 2.0);
        assert!(matches!(h_transform(&g, &[1.0, 5.0, 1.0, 1.0]), Err(Error::ExcessiveH(..))));
    }

    #[test]
    fn occupation_gf_basics() {
        let g = WeightedGraph::cycle(5, 0.5).unwrap();
        let f = [0, 1, 2, 3, 4];
        assert_relative_eq!(occupation_gf(&g, &f, &[1.0; 5], 1.3).unwrap(), 1.0, max_relative = 1e-13);
        let mut s = [1.0; 5];
        s[2] = 0.0;
        let a = occupation_gf(&g, &f, &s, 1.3).unwrap();
        let b = prob_vertex_unvisited(&g, 2, 1.3).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
        let all: Vec<usize> = f.to_vec();
        let rest = [0, 1, 3, 4];
        let c = (-1.3 * (total_mass(&g, &all).unwrap() - total_mass(&g, &rest).unwrap())).exp();
        assert_relative_eq!(b, c, max_relative = 1e-12);
        assert!(matches!(occupation_gf(&g, &f, &[1.5; 5], 1.0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn kn_occupation_closed_form() {
        for n in 2..=8 {
            let g = WeightedGraph::complete(n, 0.9).unwrap();
            for f in 1..=n {
                let sub: Vec<usize> = (0..f).collect();
                let v = occupation_gf(&g, &sub, &vec![0.35; f], 1.4).unwrap();
                let c = complete::occupation_gf(n, 0.9, f, 0.35, 1.4);
                assert!((v - c).abs() < 1e-12, "n={n} f={f}");
            }
        }
    }

    #[test]
    fn rank_one_examples() {
        assert_eq!(rank_one_det(2.0, 1.0, 3), 4.0);
        assert_eq!(rank_one_det(3.0, 0.0, 4), 81.0);
        assert_eq!(rank_one_det(7.5, 2.0, 1), 7.5);
    }
}
