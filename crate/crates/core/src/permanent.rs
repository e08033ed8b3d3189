//! The alpha-permanent with the diagonal removed: a sum over fixed-point-free
//! permutations weighted by `alpha^{#cycles}`.

use num_traits::{FromPrimitive, Num};

use crate::error::{Error, Result};
use crate::partition::for_each_set_partition;

pub const MAX_PERMANENT_ORDER: usize = 10;

fn check_square<T>(a: &[Vec<T>]) -> Result<usize> {
    let r = a.len();
    if a.iter().any(|row| row.len() != r) {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    if r < 2 {
        return Err(Error::InvalidArgument("order must be at least 2".into()));
    }
    if r > MAX_PERMANENT_ORDER {
        return Err(Error::TooLarge(format!("order {r} > {MAX_PERMANENT_ORDER}")));
    }
    Ok(r)
}

/// `Per0_alpha(A)`, computed by a cycle-cover recursion over subsets and
/// checked against the block-partition expansion.
pub fn alpha_permanent_zero_diag(a: &[Vec<f64>], alpha: f64) -> Result<f64> {
    let r = check_square(a)?;
    let v = cycle_cover_sum(a, alpha);
    let w = alpha_permanent_partition_form(a, alpha)?;
    let scale = permanent_scale(a, alpha);
    if (v - w).abs() > 1e-10 * scale.max(v.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::Inconsistent { what: "alpha-permanent", lhs: v, rhs: w });
    }
    debug_assert!(r >= 2);
    Ok(v)
}

// Same sum with every entry replaced by its absolute value; bounds rounding.
fn permanent_scale(a: &[Vec<f64>], alpha: f64) -> f64 {
    let abs: Vec<Vec<f64>> = a.iter().map(|row| row.iter().map(|x| x.abs()).collect()).collect();
    cycle_cover_sum(&abs, alpha.abs())
}

/// Subset recursion: the cycle through the smallest remaining index is
/// chosen first. `O(2^r r^2 + 3^r)`.
fn cycle_cover_sum(a: &[Vec<f64>], alpha: f64) -> f64 {
    let r = a.len();
    let full = (1usize << r) - 1;
    // path[mask * r + v]: sum of products along simple paths from min(mask)
    // through all of mask, ending at v.
    let mut path = vec![0.0; (full + 1) * r];
    let mut cyc = vec![0.0; full + 1];
    for mask in 1..=full {
        let s = mask.trailing_zeros() as usize;
        if mask == 1 << s {
            path[mask * r + s] = 1.0;
            continue;
        }
        for v in 0..r {
            if v == s || mask >> v & 1 == 0 {
                continue;
            }
            let prev = mask & !(1 << v);
            let mut acc = 0.0;
            for u in 0..r {
                if prev >> u & 1 == 1 {
                    acc += path[prev * r + u] * a[u][v];
                }
            }
            path[mask * r + v] = acc;
        }
        let mut c = 0.0;
        for v in 0..r {
            if v != s && mask >> v & 1 == 1 {
                c += path[mask * r + v] * a[v][s];
            }
        }
        cyc[mask] = c;
    }
    let mut f = vec![0.0; full + 1];
    f[0] = 1.0;
    for mask in 1..=full {
        let s = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << s);
        // cycles C containing s: C = {s} | sub, sub nonempty subset of rest
        let mut sub = rest;
        let mut acc = 0.0;
        while sub > 0 {
            let c = sub | (1 << s);
            acc += alpha * cyc[c] * f[mask & !c];
            sub = (sub - 1) & rest;
        }
        f[mask] = acc;
    }
    f[full]
}

/// Direct sum over all fixed-point-free permutations.
pub fn alpha_permanent_permutation_form<T>(a: &[Vec<T>], alpha: T) -> Result<T>
where
    T: Num + Clone,
{
    let r = check_square(a)?;
    let mut perm: Vec<usize> = (0..r).collect();
    let mut total = T::zero();
    let mut visit = |p: &[usize]| {
        if p.iter().enumerate().any(|(i, &j)| i == j) {
            return;
        }
        let mut seen = vec![false; r];
        let mut term = T::one();
        for i in 0..r {
            if !seen[i] {
                term = term.clone() * alpha.clone();
                let mut j = i;
                while !seen[j] {
                    seen[j] = true;
                    j = p[j];
                }
            }
            term = term * a[i][p[i]].clone();
        }
        total = total.clone() + term;
    };
    // Heap's algorithm
    let mut c = vec![0usize; r];
    visit(&perm);
    let mut i = 0;
    while i < r {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(total)
}

/// Sum over partitions into blocks of size at least two of
/// `alpha^k prod_j (1/|b_j|) sum_{orders of b_j} cyclic products`.
pub fn alpha_permanent_partition_form<T>(a: &[Vec<T>], alpha: T) -> Result<T>
where
    T: Num + Clone + FromPrimitive,
{
    let r = check_square(a)?;
    let mut total = T::zero();
    for_each_set_partition(r, |rgs, k| {
        let mut blocks = vec![Vec::new(); k];
        for (i, &l) in rgs.iter().enumerate() {
            blocks[l as usize].push(i);
        }
        if blocks.iter().any(|b| b.len() < 2) {
            return;
        }
        let mut term = T::one();
        for b in &blocks {
            let s = all_orders_cyclic_sum(a, b);
            term = term * s / T::from_usize(b.len()).expect("block size fits");
            term = term * alpha.clone();
        }
        total = total.clone() + term;
    });
    Ok(total)
}

fn all_orders_cyclic_sum<T: Num + Clone>(a: &[Vec<T>], block: &[usize]) -> T {
    let k = block.len();
    let mut order = block.to_vec();
    let mut c = vec![0usize; k];
    let cyc = |o: &[usize]| {
        let mut t = T::one();
        for i in 0..k {
            t = t * a[o[i]][o[(i + 1) % k]].clone();
        }
        t
    };
    let mut s = cyc(&order);
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(c[i], i);
            }
            s = s + cyc(&order);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(r: usize, seed: u64) -> Vec<Vec<f64>> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..r).map(|_| (0..r).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn order_two_and_three() {
        let a = mat(3, 1);
        let alpha = 0.7;
        let two = vec![vec![a[0][0], a[0][1]], vec![a[1][0], a[1][1]]];
        assert_relative_eq!(
            alpha_permanent_zero_diag(&two, alpha).unwrap(),
            alpha * a[0][1] * a[1][0],
            max_relative = 1e-14
        );
        let want = alpha * (a[0][1] * a[1][2] * a[2][0] + a[0][2] * a[2][1] * a[1][0]);
        assert_relative_eq!(alpha_permanent_zero_diag(&a, alpha).unwrap(), want, max_relative = 1e-13);
    }

    #[test]
    fn diagonal_matrix_gives_zero() {
        let mut a = vec![vec![0.0; 5]; 5];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 3.0;
        }
        assert_eq!(alpha_permanent_zero_diag(&a, 1.3).unwrap(), 0.0);
    }

    #[test]
    fn all_ones_counts_derangements() {
        // alpha = 1 and A = J: number of derangements
        let d = [0.0, 0.0, 1.0, 2.0, 9.0, 44.0, 265.0, 1854.0];
        for r in 2..8 {
            let a = vec![vec![1.0; r]; r];
            assert_relative_eq!(alpha_permanent_zero_diag(&a, 1.0).unwrap(), d[r], max_relative = 1e-13);
        }
    }

    #[test]
    fn forms_agree_in_floating_point() {
        for r in 2..=7 {
            let a = mat(r, r as u64 + 10);
            let v = alpha_permanent_zero_diag(&a, 0.45).unwrap();
            let w = alpha_permanent_permutation_form(&a, 0.45).unwrap();
            assert!((v - w).abs() <= 1e-12 * w.abs().max(1.0), "r={r}: {v} vs {w}");
        }
    }

    #[test]
    fn guards() {
        let a = vec![vec![1.0; 11]; 11];
        assert!(matches!(alpha_permanent_zero_diag(&a, 1.0), Err(Error::TooLarge(_))));
        assert!(alpha_permanent_zero_diag(&[vec![1.0]], 1.0).is_err());
    }
}
