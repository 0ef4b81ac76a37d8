//! Single-linkage clustering at a fixed distance threshold.

use rayon::prelude::*;

/// Item index to dense cluster id, numbered by first member.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub gamma: f64,
    pub count: usize,
}

impl ClusterAssignment {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == cluster).collect()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Connected components of the graph with an edge wherever `d(i, j) < γ`,
/// i.e. the single-linkage dendrogram cut at height `γ`. Pair distances are
/// evaluated in parallel; the result does not depend on the schedule.
pub fn single_linkage_clusters<F>(n: usize, distance: F, gamma: f64) -> ClusterAssignment
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let edges: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let d = &distance;
            (i + 1..n).filter(move |&j| d(i, j) < gamma).map(move |j| (i, j))
        })
        .collect();
    let mut uf = UnionFind::new(n);
    for (i, j) in edges {
        uf.union(i, j);
    }
    let mut dense = vec![usize::MAX; n];
    let mut labels = Vec::with_capacity(n);
    let mut count = 0;
    for i in 0..n {
        let root = uf.find(i);
        if dense[root] == usize::MAX {
            dense[root] = count;
            count += 1;
        }
        labels.push(dense[root]);
    }
    ClusterAssignment { labels, gamma, count }
}
