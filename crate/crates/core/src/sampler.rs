//! Search for all (α,γ)-clusterings by sampling.
//!
//! Draw an i.i.d. sample from the space, try every way of splitting the
//! sampled points into at most ⌊1/α⌋ groups, and let each split induce a
//! Voronoi-like partition of the whole space: x joins group i when it is
//! strictly γ times closer (in mean distance to the sampled members) to
//! group i than to every other group, and stays unassigned otherwise. A true
//! clustering is recovered from the split that agrees with it on the sample.
//!
//! Identical sampled points always land in the same group, so splits are
//! enumerated over the distinct points of the sample; the multiplicities
//! still weight the mean distances.

use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{partition_distance, Clustering, MetricSpace, ProximityTable, EXCEPTIONAL};
use crate::partitions::{par_for_each_ordered, restricted_bell, RgsIter};
use crate::verify::{
    is_clustering, is_eps_clustering, log_max_clusterings, min_separation, ClusteringReport,
};

pub mod montecarlo;

pub const DEFAULT_BUDGET: u64 = 100_000_000;
pub const DEFAULT_REPETITIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerConfig {
    pub alpha: f64,
    pub gamma: f64,
    /// Slack: splits induce partitions at γ − delta.
    pub delta: f64,
    /// Target partition distance between a clustering and its induced copy.
    pub t: f64,
    /// Allowed probability that the induced copy is farther than `t`.
    pub fail_prob: f64,
    pub seed: u64,
    pub repetitions: usize,
    /// Overrides the sample size derived from (α, γ, δ, t, fail_prob).
    pub sample_size: Option<usize>,
    /// Exceptional mass allowed when grading candidates; defaults to `t`.
    pub eps: Option<f64>,
    /// Refuse to enumerate more than this many splits.
    pub budget: u64,
}

impl SamplerConfig {
    /// Defaults: δ = (γ−1)/2, t = half the minimum separation between
    /// distinct clusterings, fail_prob = 1/2, 20 repetitions.
    pub fn new(alpha: f64, gamma: f64) -> Self {
        Self {
            alpha,
            gamma,
            delta: (gamma - 1.0) / 2.0,
            t: min_separation(alpha, gamma) / 2.0,
            fail_prob: 0.5,
            seed: 0,
            repetitions: DEFAULT_REPETITIONS,
            sample_size: None,
            eps: None,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must exceed 1, got {}", self.gamma));
        }
        if !(self.delta > 0.0 && self.delta < self.gamma - 1.0) {
            return bad(format!(
                "delta must lie in (0, gamma - 1), got {}",
                self.delta
            ));
        }
        if !(self.t > 0.0) {
            return bad(format!("t must be positive, got {}", self.t));
        }
        if !(self.fail_prob > 0.0 && self.fail_prob < 1.0) {
            return bad(format!(
                "fail_prob must lie in (0, 1), got {}",
                self.fail_prob
            ));
        }
        if self.sample_size == Some(0) {
            return bad("sample size must be positive".into());
        }
        if let Some(eps) = self.eps {
            if !(eps >= 0.0) {
                return bad(format!("eps must be non-negative, got {eps}"));
            }
        }
        Ok(())
    }

    fn max_parts(&self) -> usize {
        ((1.0 / self.alpha) + 1e-9).floor() as usize
    }

    fn eps(&self) -> f64 {
        self.eps.unwrap_or(self.t)
    }
}

/// Exponent coefficient ((γ−1)δα / (√8 γ(γ²+1)))² of the sampling bound.
fn sampling_coefficient(alpha: f64, gamma: f64, delta: f64) -> f64 {
    let c = (gamma - 1.0) * delta * alpha / (8f64.sqrt() * gamma * (gamma * gamma + 1.0));
    c * c
}

/// Smallest m with (3/(tα)) · exp(−coef · m) ≤ fail_prob (at least 1).
pub fn sample_size(cfg: &SamplerConfig) -> Result<usize> {
    cfg.validate()?;
    let coef = sampling_coefficient(cfg.alpha, cfg.gamma, cfg.delta);
    let need = (3.0 / (cfg.t * cfg.alpha * cfg.fail_prob)).ln() / coef;
    if !need.is_finite() || need > usize::MAX as f64 / 2.0 {
        return Err(Error::Domain(format!(
            "sample size {need} is not representable"
        )));
    }
    Ok((need.ceil() as usize).max(1))
}

/// A multiset of point indices, stored as per-point multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleSet {
    counts: Vec<u64>,
    m: u64,
}

impl SampleSet {
    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut counts = vec![0u64; n];
        for &i in indices {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            counts[i] += 1;
        }
        Ok(Self {
            counts,
            m: indices.len() as u64,
        })
    }

    /// m i.i.d. draws from the space's measure. Only the multiplicities
    /// matter, so the draw is a single multinomial sample. `stream` selects
    /// an independent substream of `seed`.
    pub fn draw(space: &MetricSpace, m: usize, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let n = space.n();
        let mut counts = vec![0u64; n];
        let mut left = m as u64;
        let mut mass_left = 1.0f64;
        for i in 0..n {
            if left == 0 {
                break;
            }
            let w = space.weight(i);
            if i == n - 1 || mass_left <= w {
                counts[i] = left;
                break;
            }
            let p = (w / mass_left).clamp(0.0, 1.0);
            let c = Binomial::new(left, p)
                .expect("p in [0, 1]")
                .sample(&mut rng);
            counts[i] = c;
            left -= c;
            mass_left -= w;
        }
        Self {
            counts,
            m: m as u64,
        }
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Distinct sampled points, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.counts.len())
            .filter(|&i| self.counts[i] > 0)
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Restriction of the sample to the points of `set`.
    pub fn restrict(&self, set: &[usize]) -> Self {
        let mut counts = vec![0u64; self.counts.len()];
        for &x in set {
            counts[x] = self.counts[x];
        }
        let m = counts.iter().sum();
        Self { counts, m }
    }
}

/// Δ_U over a multiset given as multiplicities.
fn delta_uniform_counts(space: &MetricSpace, x: usize, part: &SampleSet) -> f64 {
    let row = space.row(x);
    let s: f64 = part
        .counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(y, &c)| c as f64 * row[y])
        .sum();
    s / part.m as f64
}

/// Label every point by the sample part it is strictly γ times closer to
/// (in Δ_U) than to every other part; unassigned points get −1. The label
/// is the index into `parts`.
pub fn induce_labels(space: &MetricSpace, parts: &[SampleSet], gamma: f64) -> Result<Vec<i32>> {
    if !(gamma > 1.0) {
        return Err(Error::Domain(format!("gamma must exceed 1, got {gamma}")));
    }
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::EmptyPart);
    }
    if let Some(p) = parts.iter().find(|p| p.counts.len() != space.n()) {
        return Err(Error::ShapeMismatch {
            got: p.counts.len(),
            n: space.n(),
        });
    }
    let k = parts.len();
    let mut prox = vec![0.0; k];
    (0..space.n())
        .map(|x| {
            for (i, p) in parts.iter().enumerate() {
                prox[i] = delta_uniform_counts(space, x, p);
            }
            label_point(&prox, gamma)
        })
        .collect()
}

/// Label from the proximities of one point to each part. With γ > 1 and
/// non-negative proximities only the first minimizer can win.
#[inline]
fn label_point(prox: &[f64], gamma: f64) -> Result<i32> {
    let Some((i, &near)) = prox.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) else {
        return Ok(EXCEPTIONAL);
    };
    let wins = prox
        .iter()
        .enumerate()
        .all(|(j, &far)| j == i || gamma * near < far);
    Ok(if wins { i as i32 } else { EXCEPTIONAL })
}

/// The partition induced by `parts`, with unused part indices dropped and
/// the rest renumbered by first appearance.
pub fn induce_partition(
    space: &MetricSpace,
    parts: &[SampleSet],
    gamma: f64,
) -> Result<Clustering> {
    Ok(Clustering::compact(&induce_labels(space, parts, gamma)?))
}

/// One split of the sample and what it induces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateClustering {
    /// Distinct sampled points of each group.
    pub sample_parts: Vec<Vec<usize>>,
    pub induced: Clustering,
    /// Graded as an (ε, α−ε, γ−δ)-clustering.
    pub verdict: ClusteringReport,
}

/// Incrementally evaluates splits of one sample.
struct SplitEvaluator<'a> {
    space: &'a MetricSpace,
    sample: &'a SampleSet,
    support: Vec<usize>,
    gamma: f64,
}

impl<'a> SplitEvaluator<'a> {
    fn new(space: &'a MetricSpace, sample: &'a SampleSet, gamma: f64) -> Self {
        Self {
            space,
            sample,
            support: sample.support(),
            gamma,
        }
    }

    fn parts(&self, rgs: &[u8]) -> Vec<Vec<usize>> {
        let k = rgs.iter().copied().max().map_or(0, |m| m as usize + 1);
        let mut parts = vec![Vec::new(); k];
        for (pos, &b) in rgs.iter().enumerate() {
            parts[b as usize].push(self.support[pos]);
        }
        parts
    }

    /// Raw induced labels (indices into the split's groups).
    fn labels(&self, rgs: &[u8]) -> Result<Vec<i32>> {
        let n = self.space.n();
        let k = rgs.iter().copied().max().map_or(0, |m| m as usize + 1);
        let mut totals = vec![0.0f64; k];
        // sums[x * k + b] = Σ_{y in group b} count(y) · d(x, y)
        let mut sums = vec![0.0f64; n * k];
        for (pos, &b) in rgs.iter().enumerate() {
            let y = self.support[pos];
            let c = self.sample.counts[y] as f64;
            totals[b as usize] += c;
            for x in 0..n {
                sums[x * k + b as usize] += c * self.space.d(x, y);
            }
        }
        let mut prox = vec![0.0; k];
        (0..n)
            .map(|x| {
                for b in 0..k {
                    prox[b] = sums[x * k + b] / totals[b];
                }
                label_point(&prox, self.gamma)
            })
            .collect()
    }
}

/// Renumber non-negative labels by first appearance, in place.
fn canonicalize(labels: &mut [i32]) {
    let mut map: Vec<i32> = Vec::new();
    for l in labels.iter_mut().filter(|l| **l >= 0) {
        let i = *l as usize;
        if i >= map.len() {
            map.resize(i + 1, -1);
        }
        if map[i] < 0 {
            map[i] = map.iter().filter(|&&v| v >= 0).count() as i32;
        }
        *l = map[i];
    }
}

fn check_budget(cfg: &SamplerConfig, support: usize) -> Result<()> {
    let count = restricted_bell(support, cfg.max_parts());
    if count > cfg.budget as f64 {
        return Err(Error::TooManyPartitions {
            count,
            budget: cfg.budget,
        });
    }
    Ok(())
}

fn grade(
    space: &MetricSpace,
    cfg: &SamplerConfig,
    induced: &Clustering,
) -> Result<ClusteringReport> {
    let eps = cfg.eps();
    let alpha = (cfg.alpha - eps).max(f64::MIN_POSITIVE);
    is_eps_clustering(space, induced, eps, alpha, cfg.gamma - cfg.delta)
}

/// Every split of `sample` into at most ⌊1/α⌋ groups, in restricted-growth
/// order, with its induced partition at γ − δ and its grade.
pub fn candidates_for_sample(
    space: &MetricSpace,
    cfg: &SamplerConfig,
    sample: &SampleSet,
) -> Result<Vec<CandidateClustering>> {
    cfg.validate()?;
    let eval = SplitEvaluator::new(space, sample, cfg.gamma - cfg.delta);
    check_budget(cfg, eval.support.len())?;
    let mut out = Vec::new();
    let mut err = None;
    par_for_each_ordered(
        RgsIter::new(eval.support.len(), cfg.max_parts()),
        |rgs| -> Result<CandidateClustering> {
            let induced = Clustering::compact(&eval.labels(&rgs)?);
            let verdict = grade(space, cfg, &induced)?;
            Ok(CandidateClustering {
                sample_parts: eval.parts(&rgs),
                induced,
                verdict,
            })
        },
        |r| match r {
            Ok(c) => out.push(c),
            Err(e) => {
                err.get_or_insert(e);
            }
        },
    );
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Draw one sample (repetition 0 of `cfg.seed`) and grade every split.
pub fn enumerate_candidates(
    space: &MetricSpace,
    cfg: &SamplerConfig,
) -> Result<Vec<CandidateClustering>> {
    let m = match cfg.sample_size {
        Some(m) => m,
        None => sample_size(cfg)?,
    };
    let sample = SampleSet::draw(space, m, cfg.seed, 0);
    candidates_for_sample(space, cfg, &sample)
}

/// Assign every unassigned point to the part with the smallest Δ
/// (lowest index on ties). `None` if there are no parts.
pub fn round_to_nearest(space: &MetricSpace, partial: &Clustering) -> Option<Clustering> {
    if partial.k() == 0 {
        return None;
    }
    let table = ProximityTable::new(space, partial);
    let labels: Vec<i32> = partial
        .labels()
        .iter()
        .enumerate()
        .map(|(x, &l)| {
            if l >= 0 {
                return l;
            }
            let mut best = (0usize, f64::INFINITY);
            for i in 0..table.k {
                let d = table.delta(x, i).unwrap_or(f64::INFINITY);
                if d < best.1 {
                    best = (i, d);
                }
            }
            best.0 as i32
        })
        .collect();
    Some(Clustering::compact(&labels))
}

/// Statistics of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub repetition: usize,
    pub sample_size: u64,
    pub distinct_points: usize,
    pub splits: u64,
    /// Splits whose induced partition graded ok.
    pub graded_ok: u64,
    /// Distinct exact clusterings reached by rounding in this repetition.
    pub found: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoundClustering {
    pub clustering: Clustering,
    pub report: ClusteringReport,
    /// First repetition that produced it.
    pub first_seen: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FindReport {
    pub config: SamplerConfig,
    pub sample_size: usize,
    pub clusterings: Vec<FoundClustering>,
    pub runs: Vec<RunStats>,
    /// Least partition distance between two returned clusterings.
    pub min_pairwise_distance: Option<f64>,
    pub min_separation: f64,
    pub log_max_count: f64,
}

/// Per induced labeling: (graded ok, exact clustering after rounding).
type Verdict = (bool, Option<(Clustering, ClusteringReport)>);
type Memo = HashMap<Vec<i32>, Verdict>;

/// Run the sampler `cfg.repetitions` times; round every induced partition,
/// verify it exactly and return each distinct exact (α,γ)-clustering.
pub fn find_with_config(space: &MetricSpace, cfg: &SamplerConfig) -> Result<FindReport> {
    cfg.validate()?;
    let m = match cfg.sample_size {
        Some(m) => m,
        None => sample_size(cfg)?,
    };
    let mut memo: Memo = HashMap::new();
    let mut found: Vec<FoundClustering> = Vec::new();
    let mut seen: HashSet<Vec<i32>> = HashSet::new();
    let mut runs = Vec::with_capacity(cfg.repetitions);

    for rep in 0..cfg.repetitions {
        let sample = SampleSet::draw(space, m, cfg.seed, rep as u64);
        let eval = SplitEvaluator::new(space, &sample, cfg.gamma - cfg.delta);
        check_budget(cfg, eval.support.len())?;

        // Induced labelings, canonicalized, in split order.
        let mut labelings: Vec<Vec<i32>> = Vec::new();
        let mut err = None;
        par_for_each_ordered(
            RgsIter::new(eval.support.len(), cfg.max_parts()),
            |rgs| {
                eval.labels(&rgs).map(|mut l| {
                    canonicalize(&mut l);
                    l
                })
            },
            |r| match r {
                Ok(l) => labelings.push(l),
                Err(e) => {
                    err.get_or_insert(e);
                }
            },
        );
        if let Some(e) = err {
            return Err(e);
        }

        let fresh: Vec<Vec<i32>> = {
            let mut uniq = HashSet::new();
            labelings
                .iter()
                .filter(|l| !memo.contains_key(*l) && uniq.insert((*l).clone()))
                .cloned()
                .collect()
        };
        let mut evaluated = Vec::with_capacity(fresh.len());
        par_for_each_ordered(
            fresh.into_iter(),
            |labels| -> Result<(Vec<i32>, Verdict)> {
                let induced = Clustering::compact(&labels);
                let graded = grade(space, cfg, &induced)?.ok;
                let exact = match round_to_nearest(space, &induced) {
                    Some(c) => {
                        let report = is_clustering(space, &c, cfg.alpha, cfg.gamma)?;
                        report.ok.then_some((c.canonical(), report))
                    }
                    None => None,
                };
                Ok((labels, (graded, exact)))
            },
            |r| evaluated.push(r),
        );
        for r in evaluated {
            let (labels, v) = r?;
            memo.insert(labels, v);
        }

        let mut graded_ok = 0u64;
        let mut found_here: HashSet<&[i32]> = HashSet::new();
        let mut new_here = Vec::new();
        for l in &labelings {
            let (graded, exact) = &memo[l];
            graded_ok += *graded as u64;
            if let Some((c, report)) = exact {
                found_here.insert(c.labels());
                if !seen.contains(c.labels()) {
                    new_here.push((c.clone(), report.clone()));
                }
            }
        }
        let found_count = found_here.len();
        for (c, report) in new_here {
            if seen.contains(c.labels()) {
                continue;
            }
            seen.insert(c.labels().to_vec());
            // Labelings differing only on zero-weight points are the same
            // clustering.
            let duplicate = found
                .iter()
                .any(|f| partition_distance(space, &f.clustering, &c).is_ok_and(|d| d <= 1e-12));
            if !duplicate {
                found.push(FoundClustering {
                    clustering: c,
                    report,
                    first_seen: rep,
                });
            }
        }
        runs.push(RunStats {
            repetition: rep,
            sample_size: sample.m(),
            distinct_points: eval.support.len(),
            splits: labelings.len() as u64,
            graded_ok,
            found: found_count,
        });
    }

    found.sort_by(|a, b| a.clustering.labels().cmp(b.clustering.labels()));

    let min_sep = min_separation(cfg.alpha, cfg.gamma);
    let mut min_pairwise: Option<f64> = None;
    for i in 0..found.len() {
        for j in (i + 1)..found.len() {
            let d = partition_distance(space, &found[i].clustering, &found[j].clustering)?;
            min_pairwise = Some(min_pairwise.map_or(d, |v| v.min(d)));
            if !crate::tol::ge(d, min_sep) {
                return Err(Error::Invariant(format!(
                    "clusterings {i} and {j} are at distance {d} < separation bound {min_sep}"
                )));
            }
        }
    }
    let log_max_count = log_max_clusterings(cfg.alpha, cfg.gamma);
    if (found.len() as f64).ln() > log_max_count {
        return Err(Error::Invariant(format!(
            "{} clusterings exceed the counting bound e^{log_max_count}",
            found.len()
        )));
    }
    Ok(FindReport {
        config: cfg.clone(),
        sample_size: m,
        clusterings: found,
        runs,
        min_pairwise_distance: min_pairwise,
        min_separation: min_sep,
        log_max_count,
    })
}

/// All (α,γ)-clusterings found by `repetitions` independent sampler runs,
/// graded with exceptional mass ε = 1/(n+1).
pub fn find_all_clusterings(
    space: &MetricSpace,
    alpha: f64,
    gamma: f64,
    seed: u64,
    repetitions: usize,
) -> Result<Vec<Clustering>> {
    let cfg = find_config(space, alpha, gamma, seed, repetitions);
    Ok(find_with_config(space, &cfg)?
        .clusterings
        .into_iter()
        .map(|f| f.clustering)
        .collect())
}

/// The configuration [`find_all_clusterings`] uses.
pub fn find_config(
    space: &MetricSpace,
    alpha: f64,
    gamma: f64,
    seed: u64,
    repetitions: usize,
) -> SamplerConfig {
    SamplerConfig {
        seed,
        repetitions,
        eps: Some(1.0 / (space.n() as f64 + 1.0)),
        ..SamplerConfig::new(alpha, gamma)
    }
}
