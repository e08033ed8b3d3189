//! Set partitions of `{0, .., n-1}`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Partition stored as canonical labels: blocks are numbered in order of
/// their smallest element, so equal partitions have equal label vectors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    labels: Vec<u32>,
    nblocks: usize,
}

impl Partition {
    pub fn singletons(n: usize) -> Self {
        Partition { labels: (0..n as u32).collect(), nblocks: n }
    }

    pub fn whole(n: usize) -> Self {
        Partition { labels: vec![0; n], nblocks: usize::from(n > 0) }
    }

    /// Any labelling; relabelled canonically.
    pub fn from_labels<T: Copy + Eq + std::hash::Hash>(labels: &[T]) -> Self {
        let mut map = std::collections::HashMap::new();
        let mut out = Vec::with_capacity(labels.len());
        for &l in labels {
            let next = map.len() as u32;
            out.push(*map.entry(l).or_insert(next));
        }
        Partition { nblocks: map.len(), labels: out }
    }

    /// Blocks must be nonempty, disjoint and cover `0..n`.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut lab = vec![u32::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &x in block {
                if x >= n {
                    return Err(Error::InvalidPartition(format!("vertex {x} out of range")));
                }
                if lab[x] != u32::MAX {
                    return Err(Error::InvalidPartition(format!("vertex {x} in two blocks")));
                }
                lab[x] = b as u32;
            }
        }
        if let Some(x) = lab.iter().position(|&l| l == u32::MAX) {
            return Err(Error::InvalidPartition(format!("vertex {x} not covered")));
        }
        Ok(Self::from_labels(&lab))
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.nblocks
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn block_of(&self, x: usize) -> usize {
        self.labels[x] as usize
    }

    /// Blocks in canonical order, each sorted.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nblocks];
        for (x, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(x);
        }
        out
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.nblocks];
        for &l in &self.labels {
            out[l as usize] += 1;
        }
        out
    }

    /// True when every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        assert_eq!(self.n(), other.n(), "partitions of different sets");
        let mut img = vec![u32::MAX; self.nblocks];
        for (x, &l) in self.labels.iter().enumerate() {
            let o = other.labels[x];
            let slot = &mut img[l as usize];
            if *slot == u32::MAX {
                *slot = o;
            } else if *slot != o {
                return false;
            }
        }
        true
    }

    /// Merges the blocks with the given canonical indices into one.
    pub fn merge_blocks(&self, which: &[usize]) -> Result<Partition> {
        let mut target = None;
        for &j in which {
            if j >= self.nblocks {
                return Err(Error::InvalidArgument(format!("block index {j} out of range")));
            }
            target = Some(target.map_or(j, |t: usize| t.min(j)));
        }
        let t = match target {
            Some(t) => t as u32,
            None => return Ok(self.clone()),
        };
        let set: Vec<bool> = (0..self.nblocks).map(|b| which.contains(&b)).collect();
        let lab: Vec<u32> =
            self.labels.iter().map(|&l| if set[l as usize] { t } else { l }).collect();
        Ok(Self::from_labels(&lab))
    }

    /// Coarsest common refinement.
    pub fn meet(&self, other: &Partition) -> Partition {
        let pairs: Vec<(u32, u32)> = self.labels.iter().zip(&other.labels).map(|(&a, &b)| (a, b)).collect();
        Self::from_labels(&pairs)
    }

    /// Trace of the partition on a sorted subset, relabelled on `0..|A|`.
    pub fn restrict(&self, subset: &[usize]) -> Partition {
        let lab: Vec<u32> = subset.iter().map(|&x| self.labels[x]).collect();
        Self::from_labels(&lab)
    }

    /// Number of singleton blocks.
    pub fn num_singletons(&self) -> usize {
        self.block_sizes().iter().filter(|&&s| s == 1).count()
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.blocks().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let blocks: Vec<Vec<usize>> = Vec::deserialize(d)?;
        let n = blocks.iter().map(|b| b.len()).sum();
        Partition::from_blocks(n, &blocks).map_err(serde::de::Error::custom)
    }
}

/// Disjoint-set forest with union by size and path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
    singletons: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n], components: n, singletons: n }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true if two different components were joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.singletons -= usize::from(self.size[ra] == 1) + usize::from(self.size[rb] == 1);
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn singletons(&self) -> usize {
        self.singletons
    }

    pub fn component_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }

    pub fn to_partition(&mut self) -> Partition {
        let roots: Vec<usize> = (0..self.parent.len()).map(|x| self.find(x)).collect();
        Partition::from_labels(&roots)
    }
}

/// Calls `f` on every set partition of `0..k` given as a restricted growth
/// string (labels in first-occurrence order) with its block count.
pub fn for_each_set_partition(k: usize, mut f: impl FnMut(&[u32], usize)) {
    if k == 0 {
        f(&[], 0);
        return;
    }
    let mut a = vec![0u32; k];
    let mut maxes = vec![0u32; k];
    loop {
        f(&a, maxes[k - 1] as usize + 1);
        // find rightmost position that can be incremented
        let mut i = k - 1;
        loop {
            if i == 0 {
                return;
            }
            if a[i] <= maxes[i - 1] {
                break;
            }
            i -= 1;
        }
        a[i] += 1;
        maxes[i] = maxes[i - 1].max(a[i]);
        for j in i + 1..k {
            a[j] = 0;
            maxes[j] = maxes[i];
        }
    }
}

/// Bell number `B_k` as f64.
pub fn bell(k: usize) -> f64 {
    let mut row = vec![1.0f64];
    for _ in 0..k {
        let mut next = vec![*row.last().unwrap()];
        for v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

/// Every partition finer than `pi`, as products of set partitions of its
/// blocks. `f` receives the refinement and, per block of `pi`, how many
/// pieces that block was cut into.
pub fn for_each_refinement(pi: &Partition, mut f: impl FnMut(&Partition, &[usize])) {
    let blocks = pi.blocks();
    let n = pi.n();
    let mut labels = vec![0u32; n];
    let mut pieces = vec![0usize; blocks.len()];
    fn rec(
        b: usize,
        offset: u32,
        blocks: &[Vec<usize>],
        labels: &mut Vec<u32>,
        pieces: &mut Vec<usize>,
        f: &mut dyn FnMut(&Partition, &[usize]),
    ) {
        if b == blocks.len() {
            let p = Partition::from_labels(labels);
            f(&p, pieces);
            return;
        }
        let block = &blocks[b];
        let mut subs: Vec<(Vec<u32>, usize)> = Vec::new();
        for_each_set_partition(block.len(), |rgs, k| subs.push((rgs.to_vec(), k)));
        for (rgs, k) in subs {
            for (i, &x) in block.iter().enumerate() {
                labels[x] = offset + rgs[i];
            }
            pieces[b] = k;
            rec(b + 1, offset + k as u32, blocks, labels, pieces, f);
        }
    }
    rec(0, 0, &blocks, &mut labels, &mut pieces, &mut f);
}
