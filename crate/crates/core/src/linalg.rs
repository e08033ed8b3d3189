//! Dense and sparse linear algebra around `lambda I - C`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{check_subset, WeightedGraph};

/// `(lambda I - C)` restricted to `subset` (rows and columns in that order).
pub fn restricted_laplacian(g: &WeightedGraph, subset: &[usize]) -> DMatrix<f64> {
    let m = subset.len();
    let mut pos = vec![usize::MAX; g.n()];
    for (i, &x) in subset.iter().enumerate() {
        pos[x] = i;
    }
    let mut a = DMatrix::zeros(m, m);
    for (i, &x) in subset.iter().enumerate() {
        a[(i, i)] = g.lambda(x);
        for &(y, c) in g.neighbors(x) {
            let j = pos[y];
            if j != usize::MAX {
                a[(i, j)] = -c;
            }
        }
    }
    a
}

/// `P` restricted to `subset`.
pub fn restricted_transition(g: &WeightedGraph, subset: &[usize]) -> DMatrix<f64> {
    let m = subset.len();
    DMatrix::from_fn(m, m, |i, j| g.p(subset[i], subset[j]))
}

/// Log-determinant of a symmetric positive definite matrix via Cholesky.
pub fn log_det_spd(a: DMatrix<f64>) -> Result<f64> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let ch = a.cholesky().ok_or(Error::SingularSystem)?;
    let l = ch.l_dirty();
    let mut s = 0.0;
    for i in 0..l.nrows() {
        s += l[(i, i)].ln();
    }
    Ok(2.0 * s)
}

/// `(sign, log|det|)` through LU with partial pivoting.
pub fn log_abs_det_lu(a: DMatrix<f64>) -> (f64, f64) {
    if a.nrows() == 0 {
        return (1.0, 0.0);
    }
    let n = a.nrows();
    let lu = a.lu();
    let u = lu.u();
    let mut sign = if lu.p().determinant::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let mut s = 0.0;
    for i in 0..n {
        let d = u[(i, i)];
        if d < 0.0 {
            sign = -sign;
        }
        if d == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        s += d.abs().ln();
    }
    (sign, s)
}

/// `log det G^(F)` where `G^(F) = ((lambda I - C)|_F)^{-1}`; zero for empty `F`.
pub fn log_det_green(g: &WeightedGraph, subset: &[usize]) -> Result<f64> {
    check_subset(g.n(), subset)?;
    Ok(-log_det_spd(restricted_laplacian(g, subset))?)
}

/// Green's function of the walk killed outside `vertices`.
#[derive(Debug, Clone)]
pub struct GreenFunction {
    pub vertices: Vec<usize>,
    pub matrix: DMatrix<f64>,
    pub log_det: f64,
}

impl GreenFunction {
    pub fn det(&self) -> f64 {
        self.log_det.exp()
    }

    /// Entry for graph vertices `x`, `y` (both must be in `vertices`).
    pub fn get(&self, x: usize, y: usize) -> f64 {
        let i = self.vertices.binary_search(&x).expect("vertex in domain");
        let j = self.vertices.binary_search(&y).expect("vertex in domain");
        self.matrix[(i, j)]
    }

    /// Principal submatrix on the given graph vertices.
    pub fn principal(&self, xs: &[usize]) -> DMatrix<f64> {
        let idx: Vec<usize> =
            xs.iter().map(|x| self.vertices.binary_search(x).expect("vertex in domain")).collect();
        DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.matrix[(idx[i], idx[j])])
    }
}

/// Green's function on `subset` (sorted). Pass all vertices for `G` itself.
pub fn green(g: &WeightedGraph, subset: &[usize]) -> Result<GreenFunction> {
    check_subset(g.n(), subset)?;
    let a = restricted_laplacian(g, subset);
    if subset.is_empty() {
        return Ok(GreenFunction { vertices: vec![], matrix: a, log_det: 0.0 });
    }
    let ch = a.cholesky().ok_or(Error::SingularSystem)?;
    let l = ch.l_dirty();
    let log_det = -2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>();
    let matrix = ch.inverse();
    Ok(GreenFunction { vertices: subset.to_vec(), matrix, log_det })
}

pub fn green_full(g: &WeightedGraph) -> Result<GreenFunction> {
    let all: Vec<usize> = (0..g.n()).collect();
    green(g, &all)
}

/// Lazily filled table of `log det G^(F)` indexed by bitmask, for graphs of
/// at most 24 vertices.
pub struct SubsetLogDet<'a> {
    g: &'a WeightedGraph,
    table: Vec<f64>,
}

impl<'a> SubsetLogDet<'a> {
    pub fn new(g: &'a WeightedGraph) -> Result<Self> {
        if g.n() > 24 {
            return Err(Error::TooLarge(format!("{} vertices for a subset table", g.n())));
        }
        Ok(SubsetLogDet { g, table: vec![f64::NAN; 1usize << g.n()] })
    }

    pub fn get(&mut self, mask: u32) -> Result<f64> {
        let v = self.table[mask as usize];
        if !v.is_nan() {
            return Ok(v);
        }
        let subset = mask_to_vec(mask);
        let v = log_det_green(self.g, &subset)?;
        self.table[mask as usize] = v;
        Ok(v)
    }
}

pub fn mask_to_vec(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

pub fn vec_to_mask(xs: &[usize]) -> u32 {
    xs.iter().fold(0u32, |m, &x| m | (1 << x))
}

/// Solves `(lambda I - C) u = b` by conjugate gradients using the sparse
/// adjacency. Meant for graphs too large for dense factorization.
pub fn cg_solve(g: &WeightedGraph, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = g.n();
    let apply = |v: &[f64], out: &mut [f64]| {
        for x in 0..n {
            let mut s = g.lambda(x) * v[x];
            for &(y, c) in g.neighbors(x) {
                s -= c * v[y];
            }
            out[x] = s;
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    // Jacobi preconditioner.
    let dinv: Vec<f64> = (0..n).map(|x| 1.0 / g.lambda(x)).collect();
    let mut u = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let bnorm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..max_iter {
        if dot(&r, &r).sqrt() <= tol * bnorm {
            return Ok(u);
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SingularSystem);
        }
        let a = rz / pap;
        for i in 0..n {
            u[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if dot(&r, &r).sqrt() <= tol * bnorm {
        Ok(u)
    } else {
        Err(Error::SingularSystem)
    }
}

/// `G(x, x)` by a sparse solve.
pub fn green_diagonal_entry(g: &WeightedGraph, x: usize) -> Result<f64> {
    let mut b = vec![0.0; g.n()];
    b[x] = 1.0;
    let u = cg_solve(g, &b, 1e-12, 100 * g.n() + 1000)?;
    Ok(u[x])
}
