mod common;

use common::{all_partitions, SEED};
use loopsoup::analytics::{
    all_transition_rates, prob_edges_closed, prob_equal, prob_finer, prob_finer_given_closed, transition_rate,
};
use loopsoup::loops::{primitive_inclusion_prob, total_mass, BasedLoop, DiscreteLoop};
use loopsoup::rng::{par_replicas, replica_rng};
use loopsoup::sampler::{sample_soup_with, LoopSoup, SamplerPlan};
use loopsoup::stats::binomial_z;
use loopsoup::{Error, GraphBuilder, Partition, WeightedGraph};
use rand::seq::SliceRandom;

fn k4() -> WeightedGraph {
    WeightedGraph::complete(4, 1.0).unwrap()
}

fn soups(g: &WeightedGraph, alpha: f64, n: usize, seed: u64) -> Vec<LoopSoup> {
    let plan = SamplerPlan::build(g, 1e-10).unwrap();
    par_replicas(seed, n, |_, rng| sample_soup_with(&plan, alpha, rng).unwrap())
}

#[test]
fn graph_construction_examples() {
    let g = k4();
    assert!(g.lambdas().iter().all(|&l| l == 4.0));
    assert!((g.p(0, 1) - 0.25).abs() < 1e-15 && g.p(0, 0) == 0.0);
    let two = GraphBuilder::new(2).edge(0, 1, 1.0).killing(vec![1.0, 1.0]).build().unwrap();
    assert_eq!(two.lambdas(), &[2.0, 2.0]);
    assert_eq!(two.p(0, 1), 0.5);
    let split = GraphBuilder::new(4).edge(0, 1, 1.0).edge(2, 3, 1.0).uniform_killing(1.0).build();
    assert!(matches!(split, Err(Error::DisconnectedGraph)));
}

#[test]
fn loop_weight_examples() {
    let g = k4();
    // 1-based (4,1,2,1)
    let l = vec![3, 0, 1, 0];
    assert!((BasedLoop(l.clone()).weight(&g).unwrap() - 1.0 / 1024.0).abs() < 1e-18);
    let d = DiscreteLoop::new(l).unwrap();
    assert!((d.weight(&g).unwrap() - 1.0 / 256.0).abs() < 1e-18);
    let eta = DiscreteLoop::new(vec![0, 1, 2]).unwrap();
    let sq = DiscreteLoop::new(vec![0, 1, 2, 0, 1, 2]).unwrap();
    let mu = eta.weight(&g).unwrap();
    assert!((sq.weight(&g).unwrap() - mu * mu / 2.0).abs() < 1e-18);
    let c = d.crossing_counts();
    assert_eq!((c.vertex[&0], c.vertex[&1], c.vertex[&3]), (2, 1, 1));
    assert_eq!((c.edge[&(0, 1)], c.edge[&(0, 3)]), (2, 2));
    let triple = DiscreteLoop::new(vec![0, 1, 2, 0, 1, 2, 0, 1, 2]).unwrap();
    assert_eq!(triple.primitive_root().vertices(), &[0, 1, 2]);
    assert_eq!(triple.multiplicity(), 3);
}

#[test]
fn mass_examples() {
    let two = WeightedGraph::two_vertex(1.0, 1.0).unwrap();
    let series: f64 = (1..=40).map(|k| 2.0 * 0.5f64.powi(2 * k) / (2 * k) as f64).sum();
    assert!((total_mass(&two, &[0, 1]).unwrap() - series).abs() < 1e-15);
    assert!((series - 0.287682).abs() < 1e-6);
    assert_eq!(total_mass(&two, &[1]).unwrap(), 0.0);
    assert!((total_mass(&k4(), &[0, 1, 2, 3]).unwrap() - (256.0f64 / 125.0).ln()).abs() < 1e-13);
    let e = loopsoup::loops::enumerate_mass(&two, &[0, 1], 6).unwrap();
    assert!((e.value - 2.0 * (0.125 + 0.0625 / 4.0 + 0.015625 / 6.0)).abs() < 1e-15);
    assert_eq!(loopsoup::loops::enumerate_mass(&two, &[0, 1], 1).unwrap().value, 0.0);
}

#[test]
fn equality_frequencies_on_k4() {
    let g = k4();
    let n = 100_000;
    let parts: Vec<Partition> = soups(&g, 1.0, n, SEED).iter().map(|s| s.clusters()).collect();
    let all = all_partitions(4);
    let mut total = 0.0;
    for pi in &all {
        let p = prob_equal(&g, pi, 1.0, None).unwrap();
        total += p;
        let hits = parts.iter().filter(|c| *c == pi).count();
        let z = binomial_z(hits, n, p);
        assert!(z.abs() < 3.5, "{:?}: z = {z}", pi.blocks());
    }
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn closed_edge_frequency_on_k4() {
    let g = k4();
    let e = [(0, 1), (2, 3)];
    let n = 100_000;
    let ss = soups(&g, 1.0, n, SEED + 1);
    let hits = ss.iter().filter(|s| !s.open_edges().iter().any(|x| e.contains(x))).count();
    let p = prob_edges_closed(&g, &e, 1.0).unwrap();
    assert!(binomial_z(hits, n, p).abs() < 3.0);
    assert_eq!(prob_edges_closed(&g, &[], 1.0).unwrap(), 1.0);
    let two = WeightedGraph::two_vertex(1.0, 1.0).unwrap();
    assert!((prob_edges_closed(&two, &[(0, 1)], 1.0).unwrap() - 0.75).abs() < 1e-14);
}

#[test]
fn conditional_finer_frequency_on_k4() {
    let g = k4();
    let pi = Partition::from_blocks(4, &[vec![0, 1], vec![2, 3]]).unwrap();
    let e = [(0, 2)];
    let n = 100_000;
    let ss = soups(&g, 1.0, n, SEED + 2);
    let given: Vec<&LoopSoup> = ss.iter().filter(|s| !s.open_edges().contains(&e[0])).collect();
    let hits = given.iter().filter(|s| s.clusters().refines(&pi)).count();
    let p = prob_finer_given_closed(&g, &pi, &e, 1.0).unwrap();
    assert!(binomial_z(hits, given.len(), p).abs() < 3.0);
    assert!(p > prob_finer(&g, &pi, 1.0, None).unwrap());
    assert_eq!(prob_finer_given_closed(&g, &pi, &e, 0.0).unwrap(), 1.0);
    assert!(matches!(prob_finer_given_closed(&g, &pi, &[(0, 1)], 1.0), Err(Error::EdgeInsideBlock(0, 1))));
}

#[test]
fn primitive_inclusion_frequency() {
    let g = k4();
    let eta = DiscreteLoop::new(vec![0, 1, 2]).unwrap();
    let n = 100_000;
    let ss = soups(&g, 1.5, n, SEED + 3);
    let hits = ss.iter().filter(|s| s.loops.iter().any(|l| l.lp == eta)).count();
    let p = primitive_inclusion_prob(&g, &eta, 1.5).unwrap();
    assert!(binomial_z(hits, n, p).abs() < 3.0);
    let two = WeightedGraph::two_vertex(1.0, 1.0).unwrap();
    let pair = DiscreteLoop::new(vec![0, 1]).unwrap();
    assert!((primitive_inclusion_prob(&two, &pair, 1.0).unwrap() - 0.25).abs() < 1e-15);
    assert_eq!(primitive_inclusion_prob(&two, &pair, 0.0).unwrap(), 0.0);
}

#[test]
fn harris_inequality_on_k6() {
    let g = WeightedGraph::complete(6, 2.0).unwrap();
    let n = 40_000;
    let parts: Vec<Partition> = soups(&g, 0.8, n, SEED + 4).iter().map(|s| s.clusters()).collect();
    let connected = |p: &Partition, a: &[usize]| a.iter().all(|&x| p.block_of(x) == p.block_of(a[0]));
    let mut rng = replica_rng(SEED, 99);
    let verts: Vec<usize> = (0..6).collect();
    for _ in 0..10 {
        let a: Vec<usize> = verts.choose_multiple(&mut rng, 2).copied().collect();
        let b: Vec<usize> = verts.choose_multiple(&mut rng, 3).copied().collect();
        let ia: Vec<f64> = parts.iter().map(|p| connected(p, &a) as u8 as f64).collect();
        let ib: Vec<f64> = parts.iter().map(|p| connected(p, &b) as u8 as f64).collect();
        let pa = ia.iter().sum::<f64>() / n as f64;
        let pb = ib.iter().sum::<f64>() / n as f64;
        let terms: Vec<f64> = ia.iter().zip(&ib).map(|(x, y)| (x - pa) * (y - pb)).collect();
        let cov = terms.iter().sum::<f64>() / n as f64;
        let var = terms.iter().map(|t| (t - cov).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let sd = (var / n as f64).sqrt();
        assert!(cov >= -3.0 * sd, "A={a:?} B={b:?}: cov {cov}, sd {sd}");
    }
}

#[test]
fn open_edges_positively_associated() {
    let g = k4();
    let n = 60_000;
    let ss = soups(&g, 0.5, n, SEED + 5);
    let f = [(0, 1), (1, 2), (2, 3)];
    let opens: Vec<Vec<bool>> = ss.iter().map(|s| {
        let o = s.open_edges();
        f.iter().map(|e| o.contains(e)).collect()
    }).collect();
    let all = opens.iter().filter(|o| o.iter().all(|&b| b)).count() as f64 / n as f64;
    let prod: f64 = (0..f.len()).map(|i| opens.iter().filter(|o| o[i]).count() as f64 / n as f64).product();
    let sd = (all * (1.0 - all) / n as f64).sqrt();
    assert!(all >= prod - 3.0 * sd, "{all} vs {prod}");
}

#[test]
fn first_merge_follows_rate_ratios_on_k5() {
    let g = WeightedGraph::complete(5, 1.5).unwrap();
    let start = Partition::from_blocks(5, &[vec![0, 1], vec![2], vec![3], vec![4]]).unwrap();
    let rates = all_transition_rates(&g, &start).unwrap();
    let total: f64 = rates.iter().map(|r| r.1).sum();
    let n = 60_000;
    // intensity large enough that some merge happens with overwhelming odds
    let firsts: Vec<Option<Vec<usize>>> = soups(&g, 30.0, n, SEED + 6)
        .into_iter()
        .map(|s| {
            let mut loops = s.loops;
            loops.sort_by(|a, b| a.mark.total_cmp(&b.mark));
            loops.iter().find_map(|l| {
                let mut j: Vec<usize> = l.lp.vertices().iter().map(|&x| start.block_of(x)).collect();
                j.sort_unstable();
                j.dedup();
                (j.len() >= 2).then_some(j)
            })
        })
        .collect();
    assert!(firsts.iter().all(|f| f.is_some()));
    for (j, r) in &rates {
        let hits = firsts.iter().filter(|f| f.as_deref() == Some(j.as_slice())).count();
        let z = binomial_z(hits, n, r / total);
        // 11 merge sets
        assert!(z.abs() < 3.5, "J={j:?}: z = {z}");
        assert!((transition_rate(&g, &start, j).unwrap() - r).abs() < 1e-15);
    }
}
