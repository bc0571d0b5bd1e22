//! Brute-force ground truth for small spaces, and the instance generators
//! used throughout the tests and the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{load_space, Clustering, MetricSpace};
use crate::partitions::{par_for_each_ordered, RgsIter};
use crate::verify::{check_regularity, is_cluster, is_clustering};

pub const MAX_CLUSTERING_N: usize = 12;
pub const MAX_CLUSTER_N: usize = 15;

/// Every (α,γ)-clustering of `space`, by exhaustive enumeration of set
/// partitions in restricted-growth order. Includes the one-part partition
/// whenever it qualifies.
pub fn enumerate_all_clusterings(
    space: &MetricSpace,
    alpha: f64,
    gamma: f64,
    max_n: usize,
) -> Result<Vec<Clustering>> {
    let n = space.n();
    if n > max_n {
        return Err(Error::BudgetExceeded(format!(
            "{n} points exceeds oracle limit {max_n}"
        )));
    }
    // Parameter errors surface once, up front.
    is_clustering(space, &Clustering::new(vec![0; n])?, alpha, gamma)?;
    // No partition can have more parts than floor(1/alpha).
    let max_parts = ((1.0 / alpha) + 1e-9).floor().clamp(0.0, n as f64) as usize;
    let mut out = Vec::new();
    par_for_each_ordered(
        RgsIter::new(n, max_parts),
        |rgs| {
            let c = Clustering::new(rgs.iter().map(|&v| v as i32).collect()).ok()?;
            let report = is_clustering(space, &c, alpha, gamma).ok()?;
            report.ok.then_some(c)
        },
        |r| out.extend(r),
    );
    Ok(out)
}

/// Every (α,γ)-cluster of `space`, by testing all 2ⁿ − 1 non-empty subsets.
/// Subsets come out sorted ascending, ordered by bitmask.
pub fn enumerate_all_clusters(
    space: &MetricSpace,
    alpha: f64,
    gamma: f64,
    max_n: usize,
) -> Result<Vec<Vec<usize>>> {
    let n = space.n();
    if n > max_n {
        return Err(Error::BudgetExceeded(format!(
            "{n} points exceeds oracle limit {max_n}"
        )));
    }
    is_cluster(space, &(0..n).collect::<Vec<_>>(), alpha, gamma)?;
    let mut out = Vec::new();
    par_for_each_ordered(
        1u64..(1u64 << n),
        |mask| {
            let set: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            match is_cluster(space, &set, alpha, gamma) {
                Ok(r) if r.ok => Some(set),
                _ => None,
            }
        },
        |r| out.extend(r),
    );
    Ok(out)
}

fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = f(i, j);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// n points, all pairwise distances 1, uniform measure.
pub fn gen_uniform(n: usize) -> Result<MetricSpace> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    load_space(from_fn(n, |_, _| 1.0), None)
}

/// `n` pairs `{x_i, y_i}` (points `2i`, `2i+1`) with d(x_i, y_i) = 1 and
/// every other distance `far`.
pub fn gen_paired(n: usize, far: f64) -> Result<MetricSpace> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if !(far >= 1.0) || !far.is_finite() {
        return Err(Error::Domain(format!(
            "paired space needs far >= 1, got {far}"
        )));
    }
    load_space(
        from_fn(2 * n, |i, j| if i / 2 == j / 2 { 1.0 } else { far }),
        None,
    )
}

/// Shortest-path metric of the 4-cycle 0-1-2-3-0.
pub fn gen_cycle4() -> MetricSpace {
    load_space(
        vec![
            vec![0.0, 1.0, 2.0, 1.0],
            vec![1.0, 0.0, 1.0, 2.0],
            vec![2.0, 1.0, 0.0, 1.0],
            vec![1.0, 2.0, 1.0, 0.0],
        ],
        None,
    )
    .expect("C4 is a metric")
}

/// Uniform random points in the unit cube `[0,1]^dim`, Euclidean distance.
pub fn gen_random_euclidean(n: usize, dim: usize, seed: u64) -> Result<MetricSpace> {
    if n == 0 || dim == 0 {
        return Err(Error::Domain("n and dim must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    load_space(from_fn(n, |i, j| euclid(&pts[i], &pts[j])), None)
}

/// Points scattered uniformly in boxes of side `spread` around `centers`
/// random centers in `[0,1]^dim`; points are dealt to centers round-robin.
pub fn gen_blobs(
    n: usize,
    dim: usize,
    centers: usize,
    spread: f64,
    seed: u64,
) -> Result<MetricSpace> {
    if n == 0 || dim == 0 || centers == 0 {
        return Err(Error::Domain(
            "n, dim and centers must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cs: Vec<Vec<f64>> = (0..centers)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            cs[i % centers]
                .iter()
                .map(|c| c + spread * rng.random_range(-0.5..0.5))
                .collect()
        })
        .collect();
    load_space(from_fn(n, |i, j| euclid(&pts[i], &pts[j])), None)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Parameters of a planted-partition instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub part_sizes: Vec<usize>,
    /// Base intra-part distance.
    pub intra_scale: f64,
    /// Intra distances are drawn from `intra_scale * [1, 1 + jitter)`.
    pub intra_jitter: f64,
    /// Constant distance between points of different parts.
    pub inter_distance: f64,
    pub target_gamma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Planted {
    pub space: MetricSpace,
    pub clustering: Clustering,
    /// Smallest part mass; the clustering verifies at this α.
    pub alpha: f64,
    /// Inter-part distance actually used after any retries.
    pub inter_distance: f64,
}

const PLANT_RETRIES: usize = 20;

/// Build a planted instance and check, after the fact, that the planted
/// labels form an (α, target_gamma)-clustering with α the smallest part
/// mass. The inter-part distance grows by 1.5x per failed attempt.
pub fn gen_planted(spec: &PlantedSpec) -> Result<Planted> {
    if spec.part_sizes.is_empty() || spec.part_sizes.contains(&0) {
        return Err(Error::Domain("part sizes must be positive".into()));
    }
    if !(spec.intra_scale > 0.0) || !(spec.inter_distance > 0.0) {
        return Err(Error::Domain("distances must be positive".into()));
    }
    if !(0.0..=1.0).contains(&spec.intra_jitter) {
        return Err(Error::Domain("intra_jitter must lie in [0, 1]".into()));
    }
    if !(spec.target_gamma > 1.0) {
        return Err(Error::Domain("target_gamma must exceed 1".into()));
    }
    let labels: Vec<i32> = spec
        .part_sizes
        .iter()
        .enumerate()
        .flat_map(|(i, &s)| std::iter::repeat_n(i as i32, s))
        .collect();
    let n = labels.len();
    let clustering = Clustering::new(labels.clone())?;
    let alpha = *spec.part_sizes.iter().min().unwrap() as f64 / n as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let intra = from_fn(n, |_, _| {
        spec.intra_scale * (1.0 + spec.intra_jitter * rng.random_range(0.0..1.0))
    });

    let mut inter = spec.inter_distance;
    let mut last = String::new();
    for _ in 0..PLANT_RETRIES {
        let mut d = intra.clone();
        for i in 0..n {
            for j in 0..n {
                if labels[i] != labels[j] {
                    d[i][j] = inter;
                }
            }
        }
        match load_space(d, None) {
            Ok(space) => {
                let report = is_clustering(&space, &clustering, alpha, spec.target_gamma)?;
                let regular = check_regularity(&space, &clustering, spec.target_gamma)?;
                if report.ok && regular.violations.is_empty() {
                    return Ok(Planted {
                        space,
                        clustering,
                        alpha,
                        inter_distance: inter,
                    });
                }
                last = format!("achieved gamma {} at D = {inter}", report.achieved_gamma);
            }
            Err(e) => last = e.to_string(),
        }
        inter *= 1.5;
    }
    Err(Error::PlantingFailed(last))
}
