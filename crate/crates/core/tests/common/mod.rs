#![allow(dead_code)]

use std::io::Write;

use loopsoup::{GraphBuilder, Partition, WeightedGraph};
use rand::Rng;

pub const SEED: u64 = 20130401;

/// Connected graph on `n` vertices: a random tree plus extra edges, random
/// conductances, killing on a random nonempty set of vertices.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize) -> WeightedGraph {
    let mut b = GraphBuilder::new(n);
    let mut present = vec![vec![false; n]; n];
    for v in 1..n {
        let u = rng.gen_range(0..v);
        present[u][v] = true;
    }
    for u in 0..n {
        for v in u + 1..n {
            if !present[u][v] && rng.gen_bool(0.4) {
                present[u][v] = true;
            }
        }
    }
    for u in 0..n {
        for v in u + 1..n {
            if present[u][v] {
                b = b.edge(u, v, rng.gen_range(0.2..3.0));
            }
        }
    }
    let mut kill: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.05..1.5) } else { 0.0 }).collect();
    if kill.iter().all(|&k| k == 0.0) {
        kill[rng.gen_range(0..n)] = rng.gen_range(0.05..1.5);
    }
    b.killing(kill).build().expect("random graph is valid")
}

pub fn random_partition<R: Rng>(rng: &mut R, n: usize) -> Partition {
    let k = rng.gen_range(1..=n);
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    Partition::from_labels(&labels)
}

pub fn all_partitions(n: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    loopsoup::partition::for_each_set_partition(n, |rgs, _| out.push(Partition::from_labels(rgs)));
    out
}

/// Writes straight to the process stderr so the line shows even when the
/// test harness captures output.
pub fn report(id: usize, name: &str, pass: bool, detail: &str) {
    let line = format!("{} [{id:>2}] {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}
