//! The 3-dimensional-matching gadget graph, whose shortest-path metric has
//! a (3/|V|, 2.5)-clustering iff the matching instance is solvable, and the
//! easy case of graph metrics at γ = 2.5 + ε.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{load_space, Clustering, MetricSpace};
use crate::verify::{is_cluster, is_clustering, ClusteringReport};

/// Per-triple gadget edges. 0 = y, 1..=9 = m1..m9, 10 = z, 11 = w.
pub const GADGET_EDGES: [(usize, usize); 21] = [
    (0, 1),
    (0, 2),
    (1, 2),
    (1, 3),
    (1, 6),
    (2, 4),
    (2, 7),
    (3, 4),
    (3, 5),
    (3, 6),
    (4, 5),
    (4, 7),
    (5, 8),
    (5, 9),
    (6, 8),
    (6, 10),
    (7, 9),
    (7, 11),
    (8, 9),
    (8, 10),
    (9, 11),
];

/// Triangles used for a triple inside the matching.
pub const MATCHED_TRIANGLES: [[usize; 3]; 4] = [[0, 1, 2], [10, 6, 8], [11, 7, 9], [3, 4, 5]];
/// Triangles used for a triple outside the matching.
pub const UNMATCHED_TRIANGLES: [[usize; 3]; 3] = [[1, 3, 6], [2, 4, 7], [5, 8, 9]];

pub const MAX_3DM_TRIPLES: usize = 25;
pub const MAX_MATCHING_N: usize = 22;
const MAX_TRIANGLE_COVERS: usize = 1_000_000;

/// Triples are 1-based, as in the JSON format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeDmInstance {
    pub q: usize,
    pub triples: Vec<[usize; 3]>,
}

impl ThreeDmInstance {
    pub fn new(q: usize, triples: Vec<[usize; 3]>) -> Result<Self> {
        let inst = Self { q, triples };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidInstance("q must be positive".into()));
        }
        if self.triples.is_empty() {
            return Err(Error::InvalidInstance("no triples".into()));
        }
        for (i, t) in self.triples.iter().enumerate() {
            if t.iter().any(|&c| c == 0 || c > self.q) {
                return Err(Error::InvalidInstance(format!(
                    "triple {i} {t:?} out of range 1..={}",
                    self.q
                )));
            }
            if self.triples[..i].contains(t) {
                return Err(Error::InvalidInstance(format!("duplicate triple {t:?}")));
            }
        }
        Ok(())
    }
}

/// Simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    #[serde(skip)]
    adj: Vec<Vec<bool>>,
}

impl Graph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![vec![false; n]; n];
        let mut list = Vec::new();
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfRange { index: a.max(b), n });
            }
            if a == b {
                return Err(Error::Domain(format!("self-loop at {a}")));
            }
            if !adj[a][b] {
                adj[a][b] = true;
                adj[b][a] = true;
                list.push((a.min(b), a.max(b)));
            }
        }
        Ok(Self {
            n,
            edges: list,
            adj,
        })
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a][b]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].iter().filter(|&&e| e).count()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&u| self.adj[v][u])
    }

    /// All-pairs hop distances; `None` for unreachable pairs.
    pub fn hop_distances(&self) -> Vec<Vec<Option<usize>>> {
        (0..self.n)
            .map(|s| {
                let mut dist = vec![None; self.n];
                dist[s] = Some(0);
                let mut queue = VecDeque::from([s]);
                while let Some(v) = queue.pop_front() {
                    let dv = dist[v].unwrap();
                    for u in self.neighbors(v) {
                        if dist[u].is_none() {
                            dist[u] = Some(dv + 1);
                            queue.push_back(u);
                        }
                    }
                }
                dist
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.hop_distances()[0].iter().all(|d| d.is_some())
    }

    /// Shortest-path metric with uniform weights. Unreachable pairs are put
    /// at distance n, which keeps the triangle inequality.
    pub fn metric(&self) -> Result<MetricSpace> {
        let far = self.n as f64;
        let d = self
            .hop_distances()
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|h| h.map_or(far, |h| h as f64))
                    .collect()
            })
            .collect();
        load_space(d, None)
    }

    /// Every triangle a < b < c.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                if !self.adj[a][b] {
                    continue;
                }
                for c in (b + 1)..self.n {
                    if self.adj[a][c] && self.adj[b][c] {
                        out.push([a, b, c]);
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GadgetGraph {
    pub instance: ThreeDmInstance,
    pub graph: Graph,
    pub names: Vec<String>,
    pub connected: bool,
}

impl GadgetGraph {
    /// Vertex of gadget slot `slot` (see [`GADGET_EDGES`]) in triple `t`.
    pub fn vertex(&self, t: usize, slot: usize) -> usize {
        gadget_vertex(self.instance.q, &self.instance.triples[t], t, slot)
    }

    /// The partition built from a matching: matched triples use
    /// [`MATCHED_TRIANGLES`], the others [`UNMATCHED_TRIANGLES`].
    pub fn constructive_partition(&self, matching: &[usize]) -> Result<Clustering> {
        let mut parts = Vec::new();
        for t in 0..self.instance.triples.len() {
            let tris: &[[usize; 3]] = if matching.contains(&t) {
                &MATCHED_TRIANGLES
            } else {
                &UNMATCHED_TRIANGLES
            };
            for tri in tris {
                parts.push(tri.iter().map(|&s| self.vertex(t, s)).collect::<Vec<_>>());
            }
        }
        let c = Clustering::from_parts(self.graph.n, &parts)?;
        if c.has_exceptional() {
            return Err(Error::InvalidClustering(
                "matching leaves vertices uncovered".into(),
            ));
        }
        Ok(c)
    }
}

fn gadget_vertex(q: usize, triple: &[usize; 3], t: usize, slot: usize) -> usize {
    match slot {
        0 => triple[0] - 1,
        10 => q + triple[1] - 1,
        11 => 2 * q + triple[2] - 1,
        m => 3 * q + 9 * t + (m - 1),
    }
}

/// Build G^M. Shared vertices come first (y1..yq, z1..zq, w1..wq), then
/// m1..m9 of each triple in order.
pub fn gadget_graph(inst: &ThreeDmInstance) -> Result<GadgetGraph> {
    inst.validate()?;
    let q = inst.q;
    let n = 3 * q + 9 * inst.triples.len();
    let mut names: Vec<String> = Vec::with_capacity(n);
    for side in ["y", "z", "w"] {
        names.extend((1..=q).map(|i| format!("{side}{i}")));
    }
    for t in 1..=inst.triples.len() {
        names.extend((1..=9).map(|j| format!("m{j}_{t}")));
    }
    let mut edges = Vec::with_capacity(21 * inst.triples.len());
    for (t, triple) in inst.triples.iter().enumerate() {
        for &(a, b) in &GADGET_EDGES {
            edges.push((
                gadget_vertex(q, triple, t, a),
                gadget_vertex(q, triple, t, b),
            ));
        }
    }
    let graph = Graph::new(n, &edges)?;
    let connected = graph.is_connected();
    Ok(GadgetGraph {
        instance: inst.clone(),
        graph,
        names,
        connected,
    })
}

/// Why a partition is not a partition into isolated triangles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TriangleWitness {
    Uncovered { vertex: usize },
    WrongSize { part: usize, size: usize },
    NotTriangle { part: usize },
    NotIsolated { part: usize, vertex: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TriangleCheck {
    pub ok: bool,
    pub witness: Option<TriangleWitness>,
}

/// Does every part induce a triangle that no outside vertex touches twice?
pub fn is_isolated_triangle_partition(
    graph: &Graph,
    partition: &Clustering,
) -> Result<TriangleCheck> {
    if partition.len() != graph.n {
        return Err(Error::ShapeMismatch {
            got: partition.len(),
            n: graph.n,
        });
    }
    let fail = |w| {
        Ok(TriangleCheck {
            ok: false,
            witness: Some(w),
        })
    };
    if let Some(&vertex) = partition.exceptional().first() {
        return fail(TriangleWitness::Uncovered { vertex });
    }
    for (i, part) in partition.parts().iter().enumerate() {
        if part.len() != 3 {
            return fail(TriangleWitness::WrongSize {
                part: i,
                size: part.len(),
            });
        }
        let [a, b, c] = [part[0], part[1], part[2]];
        if !(graph.adjacent(a, b) && graph.adjacent(a, c) && graph.adjacent(b, c)) {
            return fail(TriangleWitness::NotTriangle { part: i });
        }
        for v in (0..graph.n).filter(|v| !part.contains(v)) {
            if part.iter().filter(|&&x| graph.adjacent(v, x)).count() > 1 {
                return fail(TriangleWitness::NotIsolated { part: i, vertex: v });
            }
        }
    }
    Ok(TriangleCheck {
        ok: true,
        witness: None,
    })
}

/// A perfect 3-dimensional matching as indices into `inst.triples`, found
/// by exhaustive search (lowest uncovered Y element first).
pub fn solve_3dm_small(inst: &ThreeDmInstance) -> Result<Option<Vec<usize>>> {
    inst.validate()?;
    if inst.triples.len() > MAX_3DM_TRIPLES {
        return Err(Error::BudgetExceeded(format!(
            "{} triples exceeds {MAX_3DM_TRIPLES}",
            inst.triples.len()
        )));
    }
    fn go(inst: &ThreeDmInstance, used: &mut [Vec<bool>; 3], chosen: &mut Vec<usize>) -> bool {
        let Some(y) = (0..inst.q).find(|&y| !used[0][y]) else {
            return true;
        };
        for (t, tr) in inst.triples.iter().enumerate() {
            let [a, b, c] = [tr[0] - 1, tr[1] - 1, tr[2] - 1];
            if a != y || used[1][b] || used[2][c] {
                continue;
            }
            used[0][a] = true;
            used[1][b] = true;
            used[2][c] = true;
            chosen.push(t);
            if go(inst, used, chosen) {
                return true;
            }
            chosen.pop();
            used[0][a] = false;
            used[1][b] = false;
            used[2][c] = false;
        }
        false
    }
    let mut used = [
        vec![false; inst.q],
        vec![false; inst.q],
        vec![false; inst.q],
    ];
    let mut chosen = Vec::new();
    Ok(go(inst, &mut used, &mut chosen).then(|| {
        chosen.sort_unstable();
        chosen
    }))
}

/// Every partition of the vertices into triangles (not necessarily
/// isolated), found by branching on the lowest uncovered vertex.
pub fn triangle_covers(graph: &Graph) -> Result<Vec<Clustering>> {
    let tris = graph.triangles();
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); graph.n];
    for (i, t) in tris.iter().enumerate() {
        // t[0] is the smallest vertex, which is the one we branch on.
        by_vertex[t[0]].push(i);
    }
    let mut out = Vec::new();
    let mut covered = vec![false; graph.n];
    let mut chosen = Vec::new();
    fn go(
        tris: &[[usize; 3]],
        by_vertex: &[Vec<usize>],
        covered: &mut [bool],
        chosen: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<()> {
        let Some(v) = covered.iter().position(|&c| !c) else {
            if out.len() >= MAX_TRIANGLE_COVERS {
                return Err(Error::BudgetExceeded(format!(
                    "more than {MAX_TRIANGLE_COVERS} triangle covers"
                )));
            }
            out.push(chosen.clone());
            return Ok(());
        };
        for &i in &by_vertex[v] {
            let t = tris[i];
            if covered[t[1]] || covered[t[2]] {
                continue;
            }
            t.iter().for_each(|&x| covered[x] = true);
            chosen.push(i);
            go(tris, by_vertex, covered, chosen, out)?;
            chosen.pop();
            t.iter().for_each(|&x| covered[x] = false);
        }
        Ok(())
    }
    let mut raw = Vec::new();
    go(&tris, &by_vertex, &mut covered, &mut chosen, &mut raw)?;
    for c in raw {
        let parts: Vec<Vec<usize>> = c.iter().map(|&i| tris[i].to_vec()).collect();
        out.push(Clustering::from_parts(graph.n, &parts)?);
    }
    Ok(out)
}

/// The three statements of the equivalence for one partition of a graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionVerdict {
    pub isolated: TriangleCheck,
    pub clustering: ClusteringReport,
    /// Every part is a cluster on its own.
    pub parts_are_clusters: bool,
}

impl PartitionVerdict {
    pub fn agree(&self) -> bool {
        self.isolated.ok == self.clustering.ok && self.clustering.ok == self.parts_are_clusters
    }
}

pub fn partition_verdict(
    graph: &Graph,
    space: &MetricSpace,
    c: &Clustering,
    alpha: f64,
    gamma: f64,
) -> Result<PartitionVerdict> {
    let isolated = is_isolated_triangle_partition(graph, c)?;
    let clustering = is_clustering(space, c, alpha, gamma)?;
    let mut parts_are_clusters = true;
    for part in c.parts() {
        parts_are_clusters &= is_cluster(space, &part, alpha, gamma)?.ok;
    }
    Ok(PartitionVerdict {
        isolated,
        clustering,
        parts_are_clusters,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    pub vertices: usize,
    pub edges: usize,
    pub connected: bool,
    pub alpha: f64,
    pub gamma: f64,
    /// Indices of the matched triples, if a matching exists.
    pub matching: Option<Vec<usize>>,
    pub constructive: Option<PartitionVerdict>,
    /// Partitions into triangles examined.
    pub triangle_covers: usize,
    pub isolated_partitions: usize,
    /// Triangle partitions accepted as clusterings (only when connected).
    pub accepted_clusterings: Option<usize>,
    /// Triangle partitions whose three verdicts disagree.
    pub disagreements: Vec<Vec<i32>>,
    /// Matching exists ⇔ isolated-triangle partition exists.
    pub matching_iff_isolated: bool,
    /// Matching exists ⇔ clustering with ≥ 2 parts exists (when connected).
    pub matching_iff_clustering: Option<bool>,
    pub ok: bool,
}

pub const REDUCTION_GAMMA: f64 = 2.5;

/// Check the reduction on one instance. Clusterings are searched among
/// partitions into triangles: on a connected graph with minimum degree ≥ 2
/// every part of a (3/|V|, 2.5)-clustering with at least two parts is a
/// triangle (the tests check this against full enumeration on small graphs).
/// The one-part partition is always a clustering and is ignored.
pub fn check_reduction(inst: &ThreeDmInstance) -> Result<ReductionReport> {
    let g = gadget_graph(inst)?;
    let space = g.graph.metric()?;
    let n = g.graph.n;
    let alpha = 3.0 / n as f64;
    let gamma = REDUCTION_GAMMA;

    let matching = solve_3dm_small(inst)?;
    let constructive = match &matching {
        Some(m) => Some(partition_verdict(
            &g.graph,
            &space,
            &g.constructive_partition(m)?,
            alpha,
            gamma,
        )?),
        None => None,
    };

    let covers = triangle_covers(&g.graph)?;
    let mut isolated_partitions = 0;
    let mut accepted = 0;
    let mut disagreements = Vec::new();
    for c in &covers {
        let v = partition_verdict(&g.graph, &space, c, alpha, gamma)?;
        isolated_partitions += v.isolated.ok as usize;
        accepted += v.clustering.ok as usize;
        if g.connected && !v.agree() {
            disagreements.push(c.labels().to_vec());
        }
    }
    let has_matching = matching.is_some();
    let matching_iff_isolated = has_matching == (isolated_partitions > 0);
    let matching_iff_clustering = g.connected.then_some(has_matching == (accepted > 0));
    let constructive_ok = constructive.as_ref().is_none_or(|v| {
        v.isolated.ok && (!g.connected || (v.clustering.ok && v.parts_are_clusters))
    });
    let ok = matching_iff_isolated
        && matching_iff_clustering != Some(false)
        && disagreements.is_empty()
        && constructive_ok;
    Ok(ReductionReport {
        vertices: n,
        edges: g.graph.edges.len(),
        connected: g.connected,
        alpha,
        gamma,
        matching,
        constructive,
        triangle_covers: covers.len(),
        isolated_partitions,
        accepted_clusterings: g.connected.then_some(accepted),
        disagreements,
        matching_iff_isolated,
        matching_iff_clustering,
        ok,
    })
}

/// Every instance with q ≤ `max_q` and 1..=`max_m` distinct triples, in
/// order of q, then size, then lexicographic choice of triples.
pub fn small_instances(max_q: usize, max_m: usize) -> Vec<ThreeDmInstance> {
    let mut out = Vec::new();
    for q in 1..=max_q {
        let all: Vec<[usize; 3]> = (0..q * q * q)
            .map(|i| [i / (q * q) + 1, i / q % q + 1, i % q + 1])
            .collect();
        for size in 1..=max_m.min(all.len()) {
            let mut idx: Vec<usize> = (0..size).collect();
            loop {
                out.push(ThreeDmInstance {
                    q,
                    triples: idx.iter().map(|&i| all[i]).collect(),
                });
                // next combination
                let Some(i) = (0..size).rev().find(|&i| idx[i] < all.len() - size + i) else {
                    break;
                };
                idx[i] += 1;
                for j in (i + 1)..size {
                    idx[j] = idx[j - 1] + 1;
                }
            }
        }
    }
    out
}

/// Which regime of α a graph-metric partition query falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Match25Case {
    /// α ≤ 1/n: the singletons.
    Singletons,
    /// 1/n < α ≤ 2/n: pairs from a perfect matching avoiding triangle edges.
    Matching,
    /// α > 2/n: parts would need three or more vertices, which cannot
    /// satisfy γ > 2.5; only the one-part partition remains.
    TooLarge,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Match25Report {
    pub n: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub case: Match25Case,
    /// Edges left after removing those in a triangle.
    pub triangle_free_edges: Option<usize>,
    pub partition: Option<Clustering>,
    pub verified: Option<bool>,
}

/// Perfect matching by dynamic programming over vertex subsets.
fn perfect_matching(n: usize, edges: &[(usize, usize)]) -> Option<Vec<(usize, usize)>> {
    if n % 2 == 1 {
        return None;
    }
    let mut adj = vec![0u32; n];
    for &(a, b) in edges {
        adj[a] |= 1 << b;
        adj[b] |= 1 << a;
    }
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    // ok[mask]: the vertices in mask can be perfectly matched.
    let mut ok = vec![false; 1usize << n];
    ok[0] = true;
    for mask in 1..=full {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let v = mask.trailing_zeros();
        let mut cand = adj[v as usize] & mask;
        while cand != 0 {
            let u = cand.trailing_zeros();
            cand &= cand - 1;
            if ok[(mask & !(1 << v) & !(1 << u)) as usize] {
                ok[mask as usize] = true;
                break;
            }
        }
    }
    if !ok[full as usize] {
        return None;
    }
    let mut pairs = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let v = mask.trailing_zeros();
        let mut cand = adj[v as usize] & mask;
        while cand != 0 {
            let u = cand.trailing_zeros();
            cand &= cand - 1;
            let rest = mask & !(1 << v) & !(1 << u);
            if ok[rest as usize] {
                pairs.push((v as usize, u as usize));
                mask = rest;
                break;
            }
        }
    }
    Some(pairs)
}

/// Partition a connected graph metric into parts forming an
/// (α, 2.5 + eps)-clustering with at least two parts, if one exists.
pub fn graph_partition_25plus(graph: &Graph, alpha: f64, eps: f64) -> Result<Match25Report> {
    if !(alpha > 0.0) || !(eps > 0.0) {
        return Err(Error::Domain("alpha and eps must be positive".into()));
    }
    if !graph.is_connected() {
        return Err(Error::DisconnectedGraph);
    }
    let n = graph.n;
    let gamma = 2.5 + eps;
    let space = graph.metric()?;
    let unit = 1.0 / n as f64;
    let mut report = Match25Report {
        n,
        alpha,
        gamma,
        case: Match25Case::TooLarge,
        triangle_free_edges: None,
        partition: None,
        verified: None,
    };
    if crate::tol::le(alpha, unit) {
        report.case = Match25Case::Singletons;
        report.partition = Some(Clustering::new((0..n as i32).collect())?);
    } else if crate::tol::le(alpha, 2.0 * unit) {
        report.case = Match25Case::Matching;
        if n > MAX_MATCHING_N {
            return Err(Error::BudgetExceeded(format!(
                "{n} vertices exceeds {MAX_MATCHING_N}"
            )));
        }
        let tri_free: Vec<(usize, usize)> = graph
            .edges
            .iter()
            .copied()
            .filter(|&(a, b)| !(0..n).any(|c| graph.adjacent(a, c) && graph.adjacent(b, c)))
            .collect();
        report.triangle_free_edges = Some(tri_free.len());
        if let Some(pairs) = perfect_matching(n, &tri_free) {
            let parts: Vec<Vec<usize>> = pairs.iter().map(|&(a, b)| vec![a, b]).collect();
            report.partition = Some(Clustering::from_parts(n, &parts)?.canonical());
        }
    }
    if let Some(c) = &report.partition {
        let mut ok = is_clustering(&space, c, alpha, gamma)?.ok;
        for part in c.parts() {
            ok &= is_cluster(&space, &part, alpha, gamma)?.ok;
        }
        report.verified = Some(ok);
    }
    Ok(report)
}
