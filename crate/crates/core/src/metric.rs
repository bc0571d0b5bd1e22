//! Finite metric spaces with a probability measure, the proximity functionals
//! Δ, Δ on sets and Δ_U, and the distance between two clusterings.

use serde::{Deserialize, Serialize};

use crate::assign::max_weight_assignment;
use crate::error::{Error, Result};
use crate::tol;

/// Label used for points in the exceptional set of a partial clustering.
pub const EXCEPTIONAL: i32 = -1;

/// A finite metric space `(X, d)` together with point masses `P({x})`.
///
/// Immutable after construction; every constructor validates symmetry,
/// zero diagonal, non-negativity, the triangle inequality and the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    dist: Vec<f64>,
    weights: Vec<f64>,
    n: usize,
}

/// On-disk form of a space: `{"n": .., "dist": [[..]], "weights": [..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceFile {
    pub n: usize,
    pub dist: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// Build a validated space from a square distance matrix. Missing weights
/// default to the uniform measure.
pub fn load_space(dist: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<MetricSpace> {
    let n = dist.len();
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    for (row, r) in dist.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NotSquare {
                row,
                len: r.len(),
                n,
            });
        }
    }
    for i in 0..n {
        for j in 0..n {
            let v = dist[i][j];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NegativeDistance { i, j, value: v });
            }
        }
    }
    for (i, r) in dist.iter().enumerate() {
        if r[i] != 0.0 {
            return Err(Error::NonzeroDiagonal { i, value: r[i] });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if !tol::eq(dist[i][j], dist[j][i]) {
                return Err(Error::AsymmetricMatrix {
                    i,
                    j,
                    dij: dist[i][j],
                    dji: dist[j][i],
                });
            }
        }
    }
    for i in 0..n {
        for k in 0..n {
            let dik = dist[i][k];
            for j in 0..n {
                let via = dist[i][j] + dist[j][k];
                if !tol::le(dik, via) {
                    return Err(Error::TriangleViolation { i, j, k, dik, via });
                }
            }
        }
    }
    let weights = match weights {
        None => vec![1.0 / n as f64; n],
        Some(w) => {
            if w.len() != n {
                return Err(Error::BadWeights(format!(
                    "expected {n} weights, got {}",
                    w.len()
                )));
            }
            if let Some((i, v)) = w
                .iter()
                .enumerate()
                .find(|(_, v)| !v.is_finite() || **v < 0.0)
            {
                return Err(Error::BadWeights(format!("weight {v} at point {i}")));
            }
            let total: f64 = w.iter().sum();
            if !tol::eq(total, 1.0) {
                return Err(Error::BadWeights(format!("weights sum to {total}")));
            }
            w
        }
    };
    Ok(MetricSpace {
        dist: dist.into_iter().flatten().collect(),
        weights,
        n,
    })
}

impl MetricSpace {
    pub fn from_file(file: SpaceFile) -> Result<Self> {
        if file.n != file.dist.len() {
            return Err(Error::NotSquare {
                row: 0,
                len: file.dist.len(),
                n: file.n,
            });
        }
        load_space(file.dist, file.weights)
    }

    pub fn to_file(&self) -> SpaceFile {
        SpaceFile {
            n: self.n,
            dist: (0..self.n).map(|i| self.row(i).to_vec()).collect(),
            weights: Some(self.weights.clone()),
        }
    }

    /// Number of points.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.n + y]
    }

    #[inline]
    pub fn row(&self, x: usize) -> &[f64] {
        &self.dist[x * self.n..(x + 1) * self.n]
    }

    #[inline]
    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self, set: &[usize]) -> f64 {
        set.iter().fold(0.0, |acc, &y| acc + self.weights[y])
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Same space with every distance multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> MetricSpace {
        MetricSpace {
            dist: self.dist.iter().map(|v| v * c).collect(),
            weights: self.weights.clone(),
            n: self.n,
        }
    }

    fn check_points(&self, set: &[usize]) -> Result<()> {
        match set.iter().find(|&&y| y >= self.n) {
            Some(&index) => Err(Error::IndexOutOfRange { index, n: self.n }),
            None => Ok(()),
        }
    }
}

/// Δ(x, A): the P-weighted mean distance from `x` to the points of `a`.
/// `x` itself contributes its zero term when it lies in `a`.
pub fn delta(space: &MetricSpace, x: usize, a: &[usize]) -> Result<f64> {
    space.check_points(&[x])?;
    space.check_points(a)?;
    let mass = space.mass(a);
    if a.is_empty() || mass <= 0.0 {
        return Err(Error::EmptySet);
    }
    let row = space.row(x);
    let s: f64 = a.iter().map(|&y| space.weight(y) * row[y]).sum();
    Ok(s / mass)
}

/// Δ(A, B): the mean of d(x, y) with x, y drawn from P restricted to A and B.
pub fn delta_sets(space: &MetricSpace, a: &[usize], b: &[usize]) -> Result<f64> {
    space.check_points(a)?;
    space.check_points(b)?;
    let ma = space.mass(a);
    let mb = space.mass(b);
    if a.is_empty() || b.is_empty() || ma <= 0.0 || mb <= 0.0 {
        return Err(Error::EmptySet);
    }
    let mut s = 0.0;
    for &x in a {
        let row = space.row(x);
        let inner: f64 = b.iter().map(|&y| space.weight(y) * row[y]).sum();
        s += space.weight(x) * inner;
    }
    Ok(s / (ma * mb))
}

/// Δ_U(x, A): the unweighted mean of d(x, ·) over a multiset of indices.
pub fn delta_uniform(space: &MetricSpace, x: usize, a: &[usize]) -> Result<f64> {
    space.check_points(&[x])?;
    space.check_points(a)?;
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    let row = space.row(x);
    Ok(a.iter().map(|&y| row[y]).sum::<f64>() / a.len() as f64)
}

/// A labeling of the points into parts `0..k`, with [`EXCEPTIONAL`] marking
/// the exempt set N of a partial clustering. Every part is non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clustering {
    k: usize,
    labels: Vec<i32>,
}

impl Clustering {
    /// Validate labels; `k` is one more than the largest label.
    pub fn new(labels: Vec<i32>) -> Result<Self> {
        let k = labels.iter().copied().max().unwrap_or(-1).max(-1) + 1;
        Self::with_k(labels, k as usize)
    }

    pub fn with_k(labels: Vec<i32>, k: usize) -> Result<Self> {
        let mut seen = vec![false; k];
        for (x, &l) in labels.iter().enumerate() {
            if l < EXCEPTIONAL || l >= k as i32 {
                return Err(Error::InvalidClustering(format!(
                    "label {l} of point {x} outside -1..{k}"
                )));
            }
            if l >= 0 {
                seen[l as usize] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidClustering(format!("part {i} is empty")));
        }
        Ok(Self { k, labels })
    }

    /// Relabel arbitrary labels (negative = exceptional) so that the non-empty
    /// parts are numbered in order of first appearance.
    pub fn compact(labels: &[i32]) -> Self {
        let mut map = std::collections::HashMap::new();
        let out: Vec<i32> = labels
            .iter()
            .map(|&l| {
                if l < 0 {
                    EXCEPTIONAL
                } else {
                    let next = map.len() as i32;
                    *map.entry(l).or_insert(next)
                }
            })
            .collect();
        Self {
            k: map.len(),
            labels: out,
        }
    }

    /// Build from explicit parts over `n` points; uncovered points become
    /// exceptional.
    pub fn from_parts(n: usize, parts: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![EXCEPTIONAL; n];
        for (i, part) in parts.iter().enumerate() {
            for &x in part {
                if x >= n {
                    return Err(Error::IndexOutOfRange { index: x, n });
                }
                if labels[x] != EXCEPTIONAL {
                    return Err(Error::InvalidClustering(format!("point {x} in two parts")));
                }
                labels[x] = i as i32;
            }
        }
        Self::with_k(labels, parts.len())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn parts(&self) -> Vec<Vec<usize>> {
        let mut parts = vec![Vec::new(); self.k];
        for (x, &l) in self.labels.iter().enumerate() {
            if l >= 0 {
                parts[l as usize].push(x);
            }
        }
        parts
    }

    pub fn exceptional(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&x| self.labels[x] < 0)
            .collect()
    }

    pub fn has_exceptional(&self) -> bool {
        self.labels.iter().any(|&l| l < 0)
    }

    pub fn part_masses(&self, space: &MetricSpace) -> Vec<f64> {
        let mut m = vec![0.0; self.k];
        for (x, &l) in self.labels.iter().enumerate() {
            if l >= 0 {
                m[l as usize] += space.weight(x);
            }
        }
        m
    }

    /// Same partition with parts renumbered by first appearance.
    pub fn canonical(&self) -> Clustering {
        Self::compact(&self.labels)
    }

    pub(crate) fn check_space(&self, space: &MetricSpace) -> Result<()> {
        if self.labels.len() != space.n() {
            return Err(Error::ShapeMismatch {
                got: self.labels.len(),
                n: space.n(),
            });
        }
        Ok(())
    }
}

/// Per-point weighted distance sums to each part:
/// `sums[x * k + i] = Σ_{y ∈ C_i} w(y) d(x, y)`, plus the part masses.
pub(crate) struct ProximityTable {
    pub k: usize,
    pub masses: Vec<f64>,
    pub sums: Vec<f64>,
}

impl ProximityTable {
    pub fn new(space: &MetricSpace, c: &Clustering) -> Self {
        let k = c.k();
        let n = space.n();
        let masses = c.part_masses(space);
        let mut sums = vec![0.0; n * k];
        for x in 0..n {
            let row = space.row(x);
            let out = &mut sums[x * k..(x + 1) * k];
            for (y, &l) in c.labels().iter().enumerate() {
                if l >= 0 {
                    out[l as usize] += space.weight(y) * row[y];
                }
            }
        }
        Self { k, masses, sums }
    }

    /// Δ(x, C_i); `None` when the part has zero mass.
    #[inline]
    pub fn delta(&self, x: usize, i: usize) -> Option<f64> {
        let m = self.masses[i];
        (m > 0.0).then(|| self.sums[x * self.k + i] / m)
    }
}

/// d(C, C'): the least P-mass of the union of part-wise symmetric
/// differences over injective matchings of parts, computed as one minus the
/// largest matched overlap mass. Exceptional points never overlap.
pub fn partition_distance(space: &MetricSpace, a: &Clustering, b: &Clustering) -> Result<f64> {
    a.check_space(space)?;
    b.check_space(space)?;
    let mut overlap = vec![vec![0.0; b.k()]; a.k()];
    for x in 0..space.n() {
        let (la, lb) = (a.labels()[x], b.labels()[x]);
        if la >= 0 && lb >= 0 {
            overlap[la as usize][lb as usize] += space.weight(x);
        }
    }
    let (matched, _) = max_weight_assignment(&overlap);
    let total: f64 = space.weights().iter().sum();
    Ok((total - matched).clamp(0.0, 1.0))
}
