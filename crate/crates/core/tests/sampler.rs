mod common;

use std::collections::BTreeSet;

use common::SEED;
use loopsoup::analytics::prob_finer;
use loopsoup::loops::total_mass;
use loopsoup::rng::par_replicas;
use loopsoup::sampler::{sample_soup, sample_soup_with, thin_soup, trajectory_of, LoopSoup, SamplerPlan};
use loopsoup::stats::{mean_z, two_proportion_z};
use loopsoup::{Partition, WeightedGraph};

/// Vertices reached from `a` in one step of "add every loop that meets the set".
fn tau(soup: &LoopSoup, a: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut out = a.clone();
    for l in &soup.loops {
        if l.lp.vertices().iter().any(|x| a.contains(x)) {
            out.extend(l.lp.vertices().iter().copied());
        }
    }
    out
}

fn tau_closure(soup: &LoopSoup, x: usize) -> BTreeSet<usize> {
    let mut a = BTreeSet::from([x]);
    loop {
        let b = tau(soup, &a);
        if b == a {
            return a;
        }
        a = b;
    }
}

/// Twelve labelled vertices (1-based labels shifted to 0-based) with a hand
/// built soup of seven loops.
fn twelve_vertex_soup() -> (WeightedGraph, LoopSoup) {
    let g = WeightedGraph::complete(12, 1.0).unwrap();
    let one_based: Vec<Vec<usize>> =
        vec![vec![10, 11], vec![3, 7], vec![5, 6], vec![3, 4, 7], vec![11, 12, 8], vec![1, 2, 6, 5], vec![1, 2, 1, 5]];
    let loops = one_based.into_iter().map(|l| l.into_iter().map(|x| x - 1).collect()).collect();
    let soup = LoopSoup::from_loops(&g, 1.0, loops).unwrap();
    (g, soup)
}

#[test]
fn twelve_vertex_soup_has_four_blocks() {
    let (_, soup) = twelve_vertex_soup();
    let want = Partition::from_blocks(12, &[vec![0, 1, 4, 5], vec![2, 3, 6], vec![7, 9, 10, 11], vec![8]]).unwrap();
    assert_eq!(soup.clusters(), want);
    assert_eq!(soup.clusters().num_blocks(), 4);
}

#[test]
fn tau_iteration_reaches_the_cluster() {
    let (_, soup) = twelve_vertex_soup();
    let one = tau(&soup, &BTreeSet::from([9]));
    assert_eq!(one, BTreeSet::from([9, 10]));
    let two = tau(&soup, &one);
    assert_eq!(two, BTreeSet::from([7, 9, 10, 11]));
    let c = soup.clusters();
    for x in 0..12 {
        let block: BTreeSet<usize> = c.blocks()[c.block_of(x)].iter().copied().collect();
        assert_eq!(tau_closure(&soup, x), block, "vertex {x}");
    }
}

#[test]
fn tau_closure_matches_union_find_on_sampled_soups() {
    let g = WeightedGraph::cycle(9, 0.3).unwrap();
    let plan = SamplerPlan::build(&g, 1e-9).unwrap();
    for r in 0..200 {
        let soup = sample_soup(&g, &plan, 0.8, SEED, r).unwrap();
        let c = soup.clusters();
        for x in 0..9 {
            let block: BTreeSet<usize> = c.blocks()[c.block_of(x)].iter().copied().collect();
            assert_eq!(tau_closure(&soup, x), block);
        }
    }
}

#[test]
fn open_edges_are_exactly_the_crossed_edges() {
    let (g, soup) = twelve_vertex_soup();
    let open = soup.open_edges();
    for &(u, v) in g.edges().iter().map(|(u, v, _)| (u, v)).collect::<Vec<_>>().iter() {
        let crossed = soup.loops.iter().any(|l| l.lp.steps().any(|e| e == (*u, *v)));
        assert_eq!(open.contains(&(*u, *v)), crossed);
    }
    assert!(open.contains(&(0, 1)) && open.contains(&(7, 11)) && !open.contains(&(8, 9)));
}

#[test]
fn two_vertex_mean_loop_count() {
    let g = WeightedGraph::two_vertex(1.0, 1.0).unwrap();
    let plan = SamplerPlan::build(&g, 1e-9).unwrap();
    let counts: Vec<f64> = par_replicas(SEED, 100_000, |_, rng| sample_soup_with(&plan, 1.0, rng).unwrap().len() as f64);
    let z = mean_z(&counts, (4.0f64 / 3.0).ln());
    assert!(z.abs() < 3.0, "z = {z}");
}

#[test]
fn geometric_tail_gives_the_same_cutoff() {
    let g = WeightedGraph::two_vertex(1.0, 1.0).unwrap();
    let mass = (4.0f64 / 3.0).ln();
    let rho = g.spectral_bound(&[0, 1]);
    assert!((rho - 0.5).abs() < 1e-9);
    let l = (1..200).find(|&l| loopsoup::loops::tail_bound(2, rho, l) <= 1e-9 * mass).unwrap();
    assert_eq!(l, 28);
    assert_eq!(SamplerPlan::build(&g, 1e-9).unwrap().l_max(), 28);
}

#[test]
fn loose_tail_keeps_only_two_step_loops() {
    for g in [WeightedGraph::two_vertex(1.0, 1.0).unwrap(), WeightedGraph::path(5, 1.0).unwrap()] {
        let plan = SamplerPlan::build(&g, 0.5).unwrap();
        assert_eq!(plan.l_max(), 2);
        assert!(plan.tail_mass() <= 0.5 * plan.total_mass());
    }
}

#[test]
fn thinning_from_kappa_one_to_three() {
    let g1 = WeightedGraph::two_vertex(1.0, 1.0).unwrap();
    let g3 = WeightedGraph::two_vertex(1.0, 3.0).unwrap();
    let plan1 = SamplerPlan::build(&g1, 1e-10).unwrap();
    let plan3 = SamplerPlan::build(&g3, 1e-10).unwrap();
    let alpha = 1.5;
    let n = 100_000;
    let pairs: Vec<(usize, bool, bool)> = par_replicas(SEED, n, |_, rng| {
        let s = sample_soup_with(&plan1, alpha, rng).unwrap();
        let t = thin_soup(&s, &g1, &g3).unwrap();
        assert!(t.loops.iter().all(|l| s.loops.iter().any(|m| m.lp == l.lp && m.mark == l.mark)));
        let d = sample_soup_with(&plan3, alpha, rng).unwrap();
        (t.len(), !t.open_edges().is_empty(), !d.open_edges().is_empty())
    });
    let counts: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
    let want = alpha * -(1.0f64 - 1.0 / 16.0).ln();
    assert!((total_mass(&g3, &[0, 1]).unwrap() - want / alpha).abs() < 1e-14);
    let z = mean_z(&counts, want);
    assert!(z.abs() < 3.0, "count z = {z}");
    let thinned_open = pairs.iter().filter(|p| p.1).count();
    let direct_open = pairs.iter().filter(|p| p.2).count();
    let z = two_proportion_z(thinned_open, n, direct_open, n);
    assert!(z.abs() < 3.0, "edge z = {z}");
}

#[test]
fn equal_killing_thinning_is_identity() {
    let g = WeightedGraph::complete(5, 0.7).unwrap();
    let plan = SamplerPlan::build(&g, 1e-9).unwrap();
    let s = sample_soup(&g, &plan, 2.0, SEED, 3).unwrap();
    let t = thin_soup(&s, &g, &g).unwrap();
    assert_eq!(s.loops.len(), t.loops.len());
    assert!(s.loops.iter().zip(&t.loops).all(|(a, b)| a.lp == b.lp && a.mark == b.mark));
}

#[test]
fn poisson_additivity() {
    let g = WeightedGraph::complete(4, 1.0).unwrap();
    let plan = SamplerPlan::build(&g, 1e-10).unwrap();
    let (a1, a2) = (0.4, 0.9);
    let n = 40_000;
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|&(u, v, _)| (u, v)).collect();
    let summarize = |s: &LoopSoup| -> (usize, Vec<bool>) {
        let open = s.open_edges();
        (s.len(), edges.iter().map(|e| open.contains(e)).collect())
    };
    let joined: Vec<(usize, Vec<bool>)> = par_replicas(SEED, n, |_, rng| {
        let s1 = sample_soup_with(&plan, a1, rng).unwrap();
        let s2 = sample_soup_with(&plan, a2, rng).unwrap();
        summarize(&s1.superpose(&s2))
    });
    let direct: Vec<(usize, Vec<bool>)> =
        par_replicas(SEED + 1, n, |_, rng| summarize(&sample_soup_with(&plan, a1 + a2, rng).unwrap()));
    let mean = (a1 + a2) * plan.truncated_mass();
    let cj: Vec<f64> = joined.iter().map(|x| x.0 as f64).collect();
    let cd: Vec<f64> = direct.iter().map(|x| x.0 as f64).collect();
    assert!(mean_z(&cj, mean).abs() < 3.5);
    assert!(mean_z(&cd, mean).abs() < 3.5);
    for i in 0..edges.len() {
        let h1 = joined.iter().filter(|x| x.1[i]).count();
        let h2 = direct.iter().filter(|x| x.1[i]).count();
        let z = two_proportion_z(h1, n, h2, n);
        // six edges, so a Bonferroni-style allowance
        assert!(z.abs() < 3.5, "edge {:?}: z = {z}", edges[i]);
    }
}

#[test]
fn trajectory_curve_matches_exact_finer_probability() {
    let g = WeightedGraph::complete(4, 1.0).unwrap();
    let plan = SamplerPlan::build(&g, 1e-10).unwrap();
    let grid = [0.25, 0.5, 1.0, 2.0];
    let pis = [
        Partition::from_blocks(4, &[vec![0, 1], vec![2, 3]]).unwrap(),
        Partition::from_blocks(4, &[vec![0, 1, 2], vec![3]]).unwrap(),
        Partition::singletons(4),
    ];
    let n = 40_000;
    let trajs: Vec<Vec<(f64, Partition)>> =
        par_replicas(SEED, n, |_, rng| trajectory_of(&sample_soup_with(&plan, 2.0, rng).unwrap(), &grid));
    for pi in &pis {
        for (k, &a) in grid.iter().enumerate() {
            let hits = trajs.iter().filter(|t| t[k].1.refines(pi)).count();
            let p = prob_finer(&g, pi, a, None).unwrap();
            let z = loopsoup::stats::binomial_z(hits, n, p);
            assert!(z.abs() < 3.5, "pi {:?} alpha {a}: z = {z}", pi.blocks());
        }
    }
}

#[test]
fn single_point_trajectory_is_the_soup_partition() {
    let g = WeightedGraph::path(6, 0.4).unwrap();
    let plan = SamplerPlan::build(&g, 1e-9).unwrap();
    for r in 0..20 {
        let tr = loopsoup::sampler::coalescent_trajectory(&g, &plan, &[1.3], SEED, r).unwrap();
        assert_eq!(tr[0].1, sample_soup(&g, &plan, 1.3, SEED, r).unwrap().clusters());
    }
}

#[test]
fn soups_are_reproducible_bit_for_bit() {
    let g = WeightedGraph::cycle(6, 0.5).unwrap();
    let plan = SamplerPlan::build(&g, 1e-9).unwrap();
    let a = sample_soup(&g, &plan, 2.5, 99, 4).unwrap();
    let b = sample_soup(&g, &plan, 2.5, 99, 4).unwrap();
    assert_eq!(a, b);
    let marks_a: Vec<u64> = a.loops.iter().map(|l| l.mark.to_bits()).collect();
    let marks_b: Vec<u64> = b.loops.iter().map(|l| l.mark.to_bits()).collect();
    assert_eq!(marks_a, marks_b);
}
