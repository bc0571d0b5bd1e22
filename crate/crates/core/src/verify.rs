//! Exact verification of (α,γ)-clusters, (α,γ)-clusterings and
//! (ε,α,γ)-clusterings, distance-regularity checks, and the closed-form
//! separation and counting bounds.
//!
//! Points of zero weight are exempt from every γ-condition: on a finite
//! space they are exactly the null sets that "almost every" allows to fail.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{Clustering, MetricSpace, ProximityTable};
use crate::serde_util::ser_f64_inf;
use crate::tol;

/// Verdict for a single candidate cluster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub ok: bool,
    /// P(C).
    pub achieved_alpha: f64,
    /// Largest γ' for which C is a γ'-cluster (may be +inf).
    #[serde(serialize_with = "ser_f64_inf")]
    pub achieved_gamma: f64,
    /// `(x, y)` with x ∈ C, y ∉ C violating the tested γ.
    pub witness: Option<(usize, usize)>,
}

/// Verdict for a (possibly partial) clustering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringReport {
    pub ok: bool,
    pub masses: Vec<f64>,
    /// min over x ∈ C_i, j ≠ i of Δ(x, C_j) / Δ(x, C_i).
    #[serde(serialize_with = "ser_f64_inf")]
    pub achieved_gamma: f64,
    pub exceptional_mass: f64,
    /// `(x, i, j)`: x ∈ C_i is not γ times closer to C_i than to C_j.
    pub witness: Option<(usize, usize, usize)>,
}

fn check_params(alpha: f64, gamma: f64) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(gamma > 1.0) {
        return Err(Error::Domain(format!("gamma must exceed 1, got {gamma}")));
    }
    Ok(())
}

/// Is `c` an (α,γ)-cluster: P(C) ≥ α and Δ(y,C) ≥ γ·Δ(x,C) for all x ∈ C,
/// y ∉ C?
pub fn is_cluster(
    space: &MetricSpace,
    c: &[usize],
    alpha: f64,
    gamma: f64,
) -> Result<ClusterReport> {
    check_params(alpha, gamma)?;
    let n = space.n();
    let mut member = vec![false; n];
    for &x in c {
        if x >= n {
            return Err(Error::IndexOutOfRange { index: x, n });
        }
        member[x] = true;
    }
    let mass: f64 = (0..n).filter(|&x| member[x]).map(|x| space.weight(x)).sum();
    if c.is_empty() || mass <= 0.0 {
        return Err(Error::EmptySet);
    }
    let proximity = |x: usize| -> f64 {
        let row = space.row(x);
        (0..n)
            .filter(|&y| member[y])
            .map(|y| space.weight(y) * row[y])
            .sum::<f64>()
            / mass
    };

    // The binding pair is the farthest inside point against the nearest
    // outside point.
    let mut inner: Option<(usize, f64)> = None;
    let mut outer: Option<(usize, f64)> = None;
    for x in 0..n {
        if space.weight(x) <= 0.0 {
            continue;
        }
        let p = proximity(x);
        if member[x] {
            if inner.is_none_or(|(_, v)| p > v) {
                inner = Some((x, p));
            }
        } else if outer.is_none_or(|(_, v)| p < v) {
            outer = Some((x, p));
        }
    }
    let (achieved_gamma, witness) = match (inner, outer) {
        (Some((x, near)), Some((y, far))) => {
            let g = tol::ratio(far, near);
            (g, (!tol::ratio_ok(far, near, gamma)).then_some((x, y)))
        }
        _ => (f64::INFINITY, None),
    };
    let mass_ok = tol::ge(mass, alpha);
    Ok(ClusterReport {
        ok: mass_ok && witness.is_none(),
        achieved_alpha: mass,
        achieved_gamma,
        witness,
    })
}

/// Is `c` a full (α,γ)-clustering?
pub fn is_clustering(
    space: &MetricSpace,
    c: &Clustering,
    alpha: f64,
    gamma: f64,
) -> Result<ClusteringReport> {
    if c.has_exceptional() {
        return Err(Error::HasExceptionalPoints);
    }
    is_eps_clustering(space, c, 0.0, alpha, gamma)
}

/// Is `c` an (ε,α,γ)-clustering: named parts of mass ≥ α, exceptional mass
/// ≤ ε, and the γ-condition for every non-exceptional point against every
/// other named part?
pub fn is_eps_clustering(
    space: &MetricSpace,
    c: &Clustering,
    eps: f64,
    alpha: f64,
    gamma: f64,
) -> Result<ClusteringReport> {
    check_params(alpha, gamma)?;
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!(
            "eps must be non-negative, got {eps}"
        )));
    }
    c.check_space(space)?;
    let table = ProximityTable::new(space, c);
    let k = table.k;
    let exceptional_mass: f64 = c
        .exceptional()
        .iter()
        .fold(0.0, |acc, &x| acc + space.weight(x));

    let mut achieved_gamma = f64::INFINITY;
    // Worst violating triple, keyed by its ratio.
    let mut witness: Option<((usize, usize, usize), f64)> = None;
    for (x, &l) in c.labels().iter().enumerate() {
        if l < 0 || space.weight(x) <= 0.0 {
            continue;
        }
        let i = l as usize;
        let Some(near) = table.delta(x, i) else {
            continue;
        };
        for j in (0..k).filter(|&j| j != i) {
            let Some(far) = table.delta(x, j) else {
                continue;
            };
            let r = tol::ratio(far, near);
            achieved_gamma = achieved_gamma.min(r);
            if !tol::ratio_ok(far, near, gamma) && witness.is_none_or(|(_, w)| r < w) {
                witness = Some(((x, i, j), r));
            }
        }
    }
    let witness = witness.map(|(t, _)| t);
    let masses_ok = table.masses.iter().all(|&m| tol::ge(m, alpha));
    Ok(ClusteringReport {
        ok: masses_ok && witness.is_none() && tol::le(exceptional_mass, eps),
        masses: table.masses,
        achieved_gamma,
        exceptional_mass,
        witness,
    })
}

/// Which distance-regularity bound a pair broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityBound {
    /// (γ−1)/γ · Δ(y, C_i) ≤ d(x, y) for x ∈ C_i, y ∈ C_j.
    CrossLower,
    /// d(x, y) ≤ (γ²+1)/(γ(γ−1)) · Δ(y, C_i) for x ∈ C_i, y ∈ C_j.
    CrossUpper,
    /// d(x, y) ≤ 2/(γ−1) · Δ(x, C_j) for x, y ∈ C_i.
    Intra,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityViolation {
    pub x: usize,
    pub y: usize,
    pub bound: RegularityBound,
    pub distance: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    /// Number of individual inequalities evaluated.
    pub checks: usize,
    pub violations: Vec<RegularityViolation>,
}

/// Check the pairwise distance bounds every (α,γ)-clustering satisfies.
/// A genuine clustering yields no violations.
pub fn check_regularity(
    space: &MetricSpace,
    c: &Clustering,
    gamma: f64,
) -> Result<RegularityReport> {
    if !(gamma > 1.0) {
        return Err(Error::Domain(format!("gamma must exceed 1, got {gamma}")));
    }
    c.check_space(space)?;
    let table = ProximityTable::new(space, c);
    let k = table.k;
    let lower = (gamma - 1.0) / gamma;
    let upper = (gamma * gamma + 1.0) / (gamma * (gamma - 1.0));
    let intra = 2.0 / (gamma - 1.0);
    let labels = c.labels();
    let n = space.n();

    let mut checks = 0usize;
    let mut violations = Vec::new();
    for x in 0..n {
        if labels[x] < 0 || space.weight(x) <= 0.0 {
            continue;
        }
        let i = labels[x] as usize;
        for y in 0..n {
            if labels[y] < 0 || space.weight(y) <= 0.0 || y == x {
                continue;
            }
            let j = labels[y] as usize;
            let d = space.d(x, y);
            if i != j {
                let Some(dy) = table.delta(y, i) else {
                    continue;
                };
                checks += 2;
                if !tol::le(lower * dy, d) {
                    violations.push(RegularityViolation {
                        x,
                        y,
                        bound: RegularityBound::CrossLower,
                        distance: d,
                        limit: lower * dy,
                    });
                }
                if !tol::le(d, upper * dy) {
                    violations.push(RegularityViolation {
                        x,
                        y,
                        bound: RegularityBound::CrossUpper,
                        distance: d,
                        limit: upper * dy,
                    });
                }
            } else {
                for other in (0..k).filter(|&o| o != i) {
                    let Some(dx) = table.delta(x, other) else {
                        continue;
                    };
                    checks += 1;
                    if !tol::le(d, intra * dx) {
                        violations.push(RegularityViolation {
                            x,
                            y,
                            bound: RegularityBound::Intra,
                            distance: d,
                            limit: intra * dx,
                        });
                    }
                }
            }
        }
    }
    Ok(RegularityReport { checks, violations })
}

/// Closed-form separation and counting bounds for a given (α, γ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryBounds {
    /// Least partition distance between two distinct (α,γ)-clusterings.
    pub min_sep: f64,
    /// Natural log of the bound on the number of (α,γ)-clusterings.
    pub log_max_count: f64,
    /// The bound itself when it fits in an f64.
    pub max_count: Option<f64>,
    pub overflow: bool,
}

/// α(γ−1)² / (2γ² − γ + 1).
pub fn min_separation(alpha: f64, gamma: f64) -> f64 {
    alpha * (gamma - 1.0).powi(2) / (2.0 * gamma * gamma - gamma + 1.0)
}

/// ln f(α,γ) where
/// f = 2 · (12(2γ²−γ+1) / (α²(γ−1)²)) ^ ((√8 γ(γ²+1) / ((γ−1)²α))² · ln(1/α)).
pub fn log_max_clusterings(alpha: f64, gamma: f64) -> f64 {
    let g1 = gamma - 1.0;
    let base = 12.0 * (2.0 * gamma * gamma - gamma + 1.0) / (alpha * alpha * g1 * g1);
    let root = 8f64.sqrt() * gamma * (gamma * gamma + 1.0) / (g1 * g1 * alpha);
    std::f64::consts::LN_2 + root * root * (1.0 / alpha).ln() * base.ln()
}

pub fn theory_bounds(alpha: f64, gamma: f64) -> Result<TheoryBounds> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma must exceed 1, got {gamma}")));
    }
    let log_max_count = log_max_clusterings(alpha, gamma);
    let max_count = log_max_count.exp();
    let overflow = !max_count.is_finite();
    Ok(TheoryBounds {
        min_sep: min_separation(alpha, gamma),
        log_max_count,
        max_count: (!overflow).then_some(max_count),
        overflow,
    })
}
