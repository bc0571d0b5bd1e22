//! Clusters for γ > 3. Such clusters are balls around one of their points,
//! and any two of them are disjoint or nested, so they form a forest under
//! inclusion and partitions into clusters can be read off the forest.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{Clustering, MetricSpace};
use crate::serde_util::ser_f64_inf;
use crate::verify::is_cluster;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallCluster {
    pub center: usize,
    pub radius: f64,
    /// Sorted ascending.
    pub members: Vec<usize>,
    pub mass: f64,
    #[serde(serialize_with = "ser_f64_inf")]
    pub achieved_gamma: f64,
}

/// Inclusion forest over distinct clusters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaminarForest {
    pub n: usize,
    pub nodes: Vec<BallCluster>,
    /// Inclusion-minimal strict superset of each node.
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub roots: Vec<usize>,
}

/// All (α,γ)-clusters of the space, γ > 3, found by testing every ball
/// B(x, r) with r a distance from x. Sorted by size, then members.
pub fn enumerate_ball_clusters(
    space: &MetricSpace,
    alpha: f64,
    gamma: f64,
) -> Result<Vec<BallCluster>> {
    if !(gamma > 3.0) {
        return Err(Error::GammaTooSmall(gamma));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let n = space.n();
    let per_center: Vec<Vec<BallCluster>> = (0..n)
        .into_par_iter()
        .map(|x| -> Result<Vec<BallCluster>> {
            let row = space.row(x);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            let mut out = Vec::new();
            let mut i = 0;
            while i < n {
                let radius = row[order[i]];
                while i < n && row[order[i]] <= radius {
                    i += 1;
                }
                let mut members = order[..i].to_vec();
                members.sort_unstable();
                let mass = space.mass(&members);
                if mass <= 0.0 {
                    continue;
                }
                let r = is_cluster(space, &members, alpha, gamma)?;
                if r.ok {
                    out.push(BallCluster {
                        center: x,
                        radius,
                        members,
                        mass,
                        achieved_gamma: r.achieved_gamma,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    // Centers are visited in ascending order, so the first copy of a member
    // set has the smallest center.
    let mut seen = HashMap::new();
    let mut out: Vec<BallCluster> = Vec::new();
    for b in per_center.into_iter().flatten() {
        if !seen.contains_key(&b.members) {
            seen.insert(b.members.clone(), out.len());
            out.push(b);
        }
    }
    out.sort_by(|a, b| {
        a.members
            .len()
            .cmp(&b.members.len())
            .then_with(|| a.members.cmp(&b.members))
    });
    Ok(out)
}

fn relation(a: &[usize], b: &[usize]) -> (bool, bool, bool) {
    // (disjoint, a ⊆ b, b ⊆ a) for sorted slices
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    (common == 0, common == a.len(), common == b.len())
}

/// Arrange clusters into their inclusion forest. Duplicate member sets are
/// merged (first kept). Fails on a crossing pair.
pub fn build_forest(n: usize, clusters: &[BallCluster]) -> Result<LaminarForest> {
    let mut nodes: Vec<BallCluster> = Vec::new();
    for c in clusters {
        if c.members.iter().any(|&x| x >= n) {
            let index = *c.members.iter().max().unwrap();
            return Err(Error::IndexOutOfRange { index, n });
        }
        if !nodes.iter().any(|d| d.members == c.members) {
            nodes.push(c.clone());
        }
    }
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by_key(|&i| nodes[i].members.len());
    let nodes: Vec<BallCluster> = order.into_iter().map(|i| nodes[i].clone()).collect();

    let k = nodes.len();
    let mut parent = vec![None; k];
    for a in 0..k {
        for b in (a + 1)..k {
            let (disjoint, a_in_b, _) = relation(&nodes[a].members, &nodes[b].members);
            if disjoint {
                continue;
            }
            if !a_in_b {
                return Err(Error::LaminarityViolation { a, b });
            }
            // Nodes are sorted by size, so the first superset is minimal.
            if parent[a].is_none() {
                parent[a] = Some(b);
            }
        }
    }
    let mut children = vec![Vec::new(); k];
    let mut roots = Vec::new();
    for (i, p) in parent.iter().enumerate() {
        match p {
            Some(p) => children[*p].push(i),
            None => roots.push(i),
        }
    }
    Ok(LaminarForest {
        n,
        nodes,
        parent,
        children,
        roots,
    })
}

impl LaminarForest {
    fn covers(&self, ids: &[usize], target: usize) -> bool {
        ids.iter()
            .map(|&i| self.nodes[i].members.len())
            .sum::<usize>()
            == target
    }

    /// Node whose members are the whole space, if any.
    pub fn whole(&self) -> Option<usize> {
        self.roots
            .iter()
            .copied()
            .find(|&r| self.nodes[r].members.len() == self.n)
    }

    fn clustering_of(&self, ids: &[usize]) -> Clustering {
        let mut labels = vec![0i32; self.n];
        for (part, &i) in ids.iter().enumerate() {
            for &x in &self.nodes[i].members {
                labels[x] = part as i32;
            }
        }
        Clustering::compact(&labels)
    }

    /// The maximal clusters other than the whole space.
    pub fn maximal_proper(&self) -> Vec<usize> {
        match self.whole() {
            Some(w) => self.children[w].clone(),
            None => self.roots.clone(),
        }
    }

    /// A partition of the space into node clusters with at least
    /// `min_parts` parts, if one exists. Any cluster lies inside a maximal
    /// one, and maximal clusters are disjoint, so a partition exists iff the
    /// maximal clusters cover the space; they are returned. With
    /// `min_parts ≥ 2` the whole space is excluded and its children used.
    pub fn find_partition(&self, min_parts: usize) -> Option<Clustering> {
        let tops = if min_parts >= 2 {
            self.maximal_proper()
        } else {
            self.roots.clone()
        };
        (tops.len() >= min_parts.max(1) && self.covers(&tops, self.n))
            .then(|| self.clustering_of(&tops))
    }

    /// The partition into minimal clusters (leaves), if the leaves cover the
    /// space. There is at most one.
    pub fn minimal_partition(&self) -> Option<Clustering> {
        let leaves: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.children[i].is_empty())
            .collect();
        (!leaves.is_empty() && self.covers(&leaves, self.n)).then(|| self.clustering_of(&leaves))
    }

    /// Number of ways to partition each node into node clusters:
    /// count(v) = 1 + [children cover v] · Π count(child).
    fn node_counts(&self) -> Vec<f64> {
        let mut counts = vec![0.0; self.nodes.len()];
        // Children are smaller, hence earlier in the size order.
        for v in 0..self.nodes.len() {
            let ch = &self.children[v];
            let split = if !ch.is_empty() && self.covers(ch, self.nodes[v].members.len()) {
                ch.iter().map(|&c| counts[c]).product()
            } else {
                0.0
            };
            counts[v] = 1.0 + split;
        }
        counts
    }

    /// Number of partitions of the whole space into node clusters.
    pub fn count_partitions(&self) -> f64 {
        if !self.covers(&self.roots, self.n) {
            return 0.0;
        }
        let counts = self.node_counts();
        self.roots.iter().map(|&r| counts[r]).product()
    }

    /// (node, parent) pairs, with parent −1 for roots.
    pub fn adjacency(&self) -> Vec<(usize, i64)> {
        self.parent
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.map_or(-1, |p| p as i64)))
            .collect()
    }
}

/// Ball clusters, forest and partitions in one call.
pub fn partition_space(
    space: &MetricSpace,
    alpha: f64,
    gamma: f64,
    minimal: bool,
) -> Result<Option<Clustering>> {
    let balls = enumerate_ball_clusters(space, alpha, gamma)?;
    let forest = build_forest(space.n(), &balls)?;
    Ok(if minimal {
        forest.minimal_partition()
    } else {
        forest.find_partition(1)
    })
}
