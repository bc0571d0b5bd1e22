//! Empirical check of the sampling concentration bound: for x in part q and
//! another part p, how often does a sample of size m make x look
//! (γ−ε)-close to C_p relative to C_q?

use serde::Serialize;

use super::SampleSet;
use crate::error::{Error, Result};
use crate::metric::{Clustering, MetricSpace};

/// 3 · exp(−(ε(γ−1)α / (√8 γ(γ²+1)))² · m)
pub fn concentration_bound(alpha: f64, gamma: f64, eps: f64, m: usize) -> f64 {
    let c = eps * (gamma - 1.0) * alpha / (8f64.sqrt() * gamma * (gamma * gamma + 1.0));
    3.0 * (-(c * c) * m as f64).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub eps: f64,
    pub sample_sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Points to test; each is paired with every other part.
    pub points: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloRow {
    pub m: usize,
    pub x: usize,
    /// Part of x.
    pub q: usize,
    /// Competing part.
    pub p: usize,
    pub failures: u64,
    pub trials: u64,
    pub frequency: f64,
    pub bound: f64,
    /// sqrt(b(1−b)/trials) with b = min(bound, 1).
    pub sigma: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub config: MonteCarloConfig,
    pub rows: Vec<MonteCarloRow>,
    pub ok: bool,
    pub max_frequency: f64,
}

fn mean_to(space: &MetricSpace, x: usize, sample: &SampleSet, part: &[usize]) -> Option<f64> {
    let row = space.row(x);
    let (mut s, mut c) = (0.0, 0u64);
    for &y in part {
        let k = sample.counts()[y];
        s += k as f64 * row[y];
        c += k;
    }
    (c > 0).then(|| s / c as f64)
}

/// Run the experiment. A trial fails for (x, p) when the sample misses C_p
/// or C_q, or when Δ_U(x, S∩C_p) < (γ−ε) Δ_U(x, S∩C_q).
pub fn run(
    space: &MetricSpace,
    clustering: &Clustering,
    cfg: &MonteCarloConfig,
) -> Result<MonteCarloReport> {
    if clustering.len() != space.n() {
        return Err(Error::ShapeMismatch {
            got: clustering.len(),
            n: space.n(),
        });
    }
    if clustering.has_exceptional() {
        return Err(Error::HasExceptionalPoints);
    }
    if !(cfg.gamma > 1.0) || !(cfg.eps >= 0.0) || !(cfg.alpha > 0.0) || cfg.trials == 0 {
        return Err(Error::Domain(
            "need gamma > 1, eps >= 0, alpha > 0 and trials > 0".into(),
        ));
    }
    if let Some(&x) = cfg.points.iter().find(|&&x| x >= space.n()) {
        return Err(Error::IndexOutOfRange {
            index: x,
            n: space.n(),
        });
    }
    let parts = clustering.parts();
    let labels = clustering.labels();
    let mut rows = Vec::new();
    for (mi, &m) in cfg.sample_sizes.iter().enumerate() {
        if m == 0 {
            return Err(Error::Domain("sample size must be positive".into()));
        }
        let pairs: Vec<(usize, usize, usize)> = cfg
            .points
            .iter()
            .flat_map(|&x| {
                let q = labels[x] as usize;
                (0..parts.len())
                    .filter(move |&p| p != q)
                    .map(move |p| (x, q, p))
            })
            .collect();
        let mut failures = vec![0u64; pairs.len()];
        for trial in 0..cfg.trials {
            let stream = (mi as u64) << 32 | trial as u64;
            let sample = SampleSet::draw(space, m, cfg.seed, stream);
            for (f, &(x, q, p)) in failures.iter_mut().zip(&pairs) {
                let near = mean_to(space, x, &sample, &parts[q]);
                let far = mean_to(space, x, &sample, &parts[p]);
                let fail = match (near, far) {
                    (Some(near), Some(far)) => far < (cfg.gamma - cfg.eps) * near,
                    _ => true,
                };
                *f += fail as u64;
            }
        }
        let bound = concentration_bound(cfg.alpha, cfg.gamma, cfg.eps, m);
        let b = bound.min(1.0);
        let sigma = (b * (1.0 - b) / cfg.trials as f64).sqrt();
        for (&(x, q, p), &failures) in pairs.iter().zip(&failures) {
            let frequency = failures as f64 / cfg.trials as f64;
            rows.push(MonteCarloRow {
                m,
                x,
                q,
                p,
                failures,
                trials: cfg.trials as u64,
                frequency,
                bound,
                sigma,
                ok: frequency <= bound + 3.0 * sigma,
            });
        }
    }
    Ok(MonteCarloReport {
        config: cfg.clone(),
        ok: rows.iter().all(|r| r.ok),
        max_frequency: rows.iter().map(|r| r.frequency).fold(0.0, f64::max),
        rows,
    })
}

/// First and last point of every part.
pub fn default_points(clustering: &Clustering) -> Vec<usize> {
    let mut pts: Vec<usize> = clustering
        .parts()
        .iter()
        .flat_map(|p| [p[0], p[p.len() - 1]])
        .collect();
    pts.dedup();
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{gen_planted, PlantedSpec};

    #[test]
    fn bound_value() {
        // c = 0.5 · 1 · 0.2 / (√8 · 2 · 5)
        let c: f64 = 0.1 / (8f64.sqrt() * 10.0);
        let want = 3.0 * (-(c * c) * 100.0).exp();
        assert!((concentration_bound(0.2, 2.0, 0.5, 100) - want).abs() < 1e-15);
        assert!(concentration_bound(0.2, 2.0, 0.5, 10_000_000) < 1e-10);
    }

    #[test]
    fn planted_failures_rare_and_deterministic() {
        let p = gen_planted(&PlantedSpec {
            part_sizes: vec![10; 4],
            intra_scale: 1.0,
            intra_jitter: 0.5,
            inter_distance: 6.0,
            target_gamma: 2.0,
            seed: 5,
        })
        .unwrap();
        let cfg = MonteCarloConfig {
            alpha: p.alpha,
            gamma: 2.0,
            eps: 0.5,
            sample_sizes: vec![40],
            trials: 200,
            seed: 3,
            points: default_points(&p.clustering),
        };
        let a = run(&p.space, &p.clustering, &cfg).unwrap();
        assert!(a.ok);
        assert_eq!(a.rows.len(), 8 * 3);
        assert_eq!(a, run(&p.space, &p.clustering, &cfg).unwrap());
    }

    #[test]
    fn missing_part_counts_as_failure() {
        let p = gen_planted(&PlantedSpec {
            part_sizes: vec![2, 2],
            intra_scale: 1.0,
            intra_jitter: 0.0,
            inter_distance: 10.0,
            target_gamma: 2.0,
            seed: 0,
        })
        .unwrap();
        let cfg = MonteCarloConfig {
            alpha: 0.5,
            gamma: 2.0,
            eps: 0.0,
            sample_sizes: vec![1],
            trials: 100,
            seed: 1,
            points: vec![0],
        };
        // One draw can never hit both parts.
        let r = run(&p.space, &p.clustering, &cfg).unwrap();
        assert_eq!(r.rows[0].failures, 100);
    }
}
