//! Distances between persistence diagrams — exact bottleneck and
//! p-Wasserstein with diagonal pairing, a brute-force oracle for small
//! instances, and an entropic (Sinkhorn) approximation — plus matrix
//! operator norms.
//!
//! Diagrams are compared one homology dimension at a time; per-dimension
//! results combine by max (bottleneck) or by p-norm (Wasserstein). Essential
//! points pair among themselves by sorted birth; a count mismatch makes the
//! bottleneck distance infinite and is an error for Wasserstein.

mod assignment;
mod sinkhorn;

use crate::linalg::Matrix;
use crate::persistence::{DiagramPoint, PersistenceDiagram};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("essential points (infinite death) cannot be matched to the diagonal")]
    InfinitePoint,
    #[error(
        "diagrams have different essential-point counts in dimension {dim}: {left} vs {right}"
    )]
    InfiniteMismatch {
        dim: usize,
        left: usize,
        right: usize,
    },
    #[error("instance too large: {size} points exceeds the limit {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("p must be a finite value >= 1")]
    BadP,
    #[error("epsilon must be positive")]
    BadEpsilon,
}

/// Ground metric on the plane for point-to-point and point-to-diagonal
/// costs. The stability results are stated for L-infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroundMetric {
    #[default]
    LInf,
    L2,
}

/// Distance between two diagram points. Two essential points compare along
/// the birth coordinate only; an essential and a finite point are infinitely
/// far apart.
pub fn ground_distance(a: &DiagramPoint, b: &DiagramPoint, ground: GroundMetric) -> f64 {
    match (a.death.is_finite(), b.death.is_finite()) {
        (true, true) => {
            let db = (a.birth - b.birth).abs();
            let dd = (a.death - b.death).abs();
            match ground {
                GroundMetric::LInf => db.max(dd),
                GroundMetric::L2 => db.hypot(dd),
            }
        }
        (false, false) => (a.birth - b.birth).abs(),
        _ => f64::INFINITY,
    }
}

/// Distance from a finite point to the diagonal: the nearest diagonal point
/// is the midpoint, giving (death - birth)/2 under L-infinity.
pub fn diagonal_distance(a: &DiagramPoint, ground: GroundMetric) -> Result<f64, MetricError> {
    if !a.death.is_finite() {
        return Err(MetricError::InfinitePoint);
    }
    let half = (a.death - a.birth) / 2.0;
    Ok(match ground {
        GroundMetric::LInf => half,
        GroundMetric::L2 => half * std::f64::consts::SQRT_2,
    })
}

struct DimSplit {
    finite1: Vec<DiagramPoint>,
    finite2: Vec<DiagramPoint>,
    inf1: Vec<f64>,
    inf2: Vec<f64>,
}

fn split_dims(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> Vec<(usize, DimSplit)> {
    let dims: BTreeSet<usize> = d1
        .points()
        .iter()
        .chain(d2.points())
        .map(|p| p.dim)
        .collect();
    dims.into_iter()
        .map(|q| {
            let take = |d: &PersistenceDiagram| {
                let mut finite = Vec::new();
                let mut inf = Vec::new();
                for p in d.points_of_dim(q) {
                    if p.death.is_finite() {
                        finite.push(*p);
                    } else {
                        inf.push(p.birth);
                    }
                }
                inf.sort_by(f64::total_cmp);
                (finite, inf)
            };
            let (finite1, inf1) = take(d1);
            let (finite2, inf2) = take(d2);
            (
                q,
                DimSplit {
                    finite1,
                    finite2,
                    inf1,
                    inf2,
                },
            )
        })
        .collect()
}

/// Exact bottleneck distance (L-infinity ground metric).
pub fn bottleneck(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> f64 {
    bottleneck_with(d1, d2, GroundMetric::LInf)
}

/// Exact bottleneck distance: binary search over the finite candidate set,
/// with feasibility decided by maximum bipartite matching on the augmented
/// point sets. Unequal essential counts give infinity.
pub fn bottleneck_with(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    ground: GroundMetric,
) -> f64 {
    split_dims(d1, d2)
        .iter()
        .map(|(_, s)| bottleneck_dim(s, ground))
        .fold(0.0, f64::max)
}

fn bottleneck_dim(s: &DimSplit, ground: GroundMetric) -> f64 {
    if s.inf1.len() != s.inf2.len() {
        return f64::INFINITY;
    }
    let inf_part = s
        .inf1
        .iter()
        .zip(&s.inf2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let (n1, n2) = (s.finite1.len(), s.finite2.len());
    if n1 + n2 == 0 {
        return inf_part;
    }
    let diag1: Vec<f64> = s
        .finite1
        .iter()
        .map(|p| diagonal_distance(p, ground).expect("finite point"))
        .collect();
    let diag2: Vec<f64> = s
        .finite2
        .iter()
        .map(|p| diagonal_distance(p, ground).expect("finite point"))
        .collect();

    let mut candidates: Vec<f64> = vec![0.0];
    candidates.extend(&diag1);
    candidates.extend(&diag2);
    for a in &s.finite1 {
        for b in &s.finite2 {
            candidates.push(ground_distance(a, b, ground));
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let feasible = |delta: f64| {
        let total = n1 + n2;
        let adjacent = |i: usize, j: usize| match (i < n1, j < n2) {
            (true, true) => ground_distance(&s.finite1[i], &s.finite2[j], ground) <= delta,
            (true, false) => diag1[i] <= delta,
            (false, true) => diag2[j] <= delta,
            (false, false) => true,
        };
        assignment::max_bipartite_matching(total, total, adjacent) == total
    };

    let mut lo = 0;
    let mut hi = candidates.len() - 1;
    debug_assert!(feasible(candidates[hi]));
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    inf_part.max(candidates[lo])
}

/// Hungarian solver size limit per dimension; larger inputs should use the
/// Sinkhorn approximation.
const HUNGARIAN_LIMIT: usize = 2000;

/// Exact p-Wasserstein distance (L-infinity ground metric).
pub fn wasserstein(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    p: f64,
) -> Result<f64, MetricError> {
    wasserstein_with(d1, d2, p, GroundMetric::LInf)
}

/// Exact p-Wasserstein distance via a square assignment problem on each
/// dimension: each diagram is augmented with the other's diagonal
/// projections and the Hungarian algorithm finds the optimal pairing.
pub fn wasserstein_with(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    p: f64,
    ground: GroundMetric,
) -> Result<f64, MetricError> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(MetricError::BadP);
    }
    // Canonical argument order makes the float result exactly symmetric
    // even when the optimal matching is not unique.
    let (d1, d2) = canonical_order(d1, d2);
    let mut total = 0.0;
    for (q, s) in split_dims(d1, d2) {
        total += wasserstein_dim_pow(q, &s, p, ground)?;
    }
    Ok(total.powf(1.0 / p))
}

fn canonical_order<'a>(
    d1: &'a PersistenceDiagram,
    d2: &'a PersistenceDiagram,
) -> (&'a PersistenceDiagram, &'a PersistenceDiagram) {
    let key = |d: &PersistenceDiagram| {
        d.points()
            .iter()
            .map(|p| (p.dim, p.birth.to_bits(), p.death.to_bits()))
            .collect::<Vec<_>>()
    };
    if key(d1) <= key(d2) {
        (d1, d2)
    } else {
        (d2, d1)
    }
}

fn infinite_pow_sum(q: usize, s: &DimSplit, p: f64) -> Result<f64, MetricError> {
    if s.inf1.len() != s.inf2.len() {
        return Err(MetricError::InfiniteMismatch {
            dim: q,
            left: s.inf1.len(),
            right: s.inf2.len(),
        });
    }
    Ok(s.inf1
        .iter()
        .zip(&s.inf2)
        .map(|(a, b)| (a - b).abs().powf(p))
        .sum())
}

fn wasserstein_dim_pow(
    q: usize,
    s: &DimSplit,
    p: f64,
    ground: GroundMetric,
) -> Result<f64, MetricError> {
    let mut total = infinite_pow_sum(q, s, p)?;
    let (n1, n2) = (s.finite1.len(), s.finite2.len());
    let n = n1 + n2;
    if n == 0 {
        return Ok(total);
    }
    if n > HUNGARIAN_LIMIT {
        return Err(MetricError::TooLarge {
            size: n,
            limit: HUNGARIAN_LIMIT,
        });
    }
    let cost = augmented_cost_matrix(s, p, ground);
    let (_, assignment_cost) = assignment::hungarian(&cost);
    total += assignment_cost;
    Ok(total)
}

/// Square (n1+n2) x (n1+n2) cost matrix: real points of one diagram against
/// real points of the other, with diagonal slots absorbing unmatched points
/// at their diagonal cost; diagonal-to-diagonal transport is free.
fn augmented_cost_matrix(s: &DimSplit, p: f64, ground: GroundMetric) -> Vec<Vec<f64>> {
    let (n1, n2) = (s.finite1.len(), s.finite2.len());
    let n = n1 + n2;
    let mut cost = vec![vec![0.0; n]; n];
    for (i, a) in s.finite1.iter().enumerate() {
        let diag = diagonal_distance(a, ground).expect("finite point").powf(p);
        for (j, slot) in cost[i].iter_mut().enumerate() {
            *slot = if j < n2 {
                ground_distance(a, &s.finite2[j], ground).powf(p)
            } else {
                diag
            };
        }
    }
    for (j, b) in s.finite2.iter().enumerate() {
        let diag = diagonal_distance(b, ground).expect("finite point").powf(p);
        for row in cost.iter_mut().skip(n1) {
            row[j] = diag;
        }
    }
    cost
}

const BRUTEFORCE_LIMIT: usize = 8;

/// Exhaustive oracle for small diagrams: enumerates every matching
/// (including diagonal assignments and essential-point bijections) and
/// returns the minimal p-th-power sum, rooted.
pub fn wasserstein_bruteforce(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    p: f64,
) -> Result<f64, MetricError> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(MetricError::BadP);
    }
    check_bruteforce_size(d1, d2)?;
    let mut total = 0.0;
    for (q, s) in split_dims(d1, d2) {
        if s.inf1.len() != s.inf2.len() {
            return Err(MetricError::InfiniteMismatch {
                dim: q,
                left: s.inf1.len(),
                right: s.inf2.len(),
            });
        }
        total += enumerate_matchings(&s, |costs| costs.iter().map(|c| c.powf(p)).sum());
    }
    Ok(total.powf(1.0 / p))
}

/// Bottleneck analogue of [`wasserstein_bruteforce`]: minimizes the maximum
/// matched cost instead of the sum.
pub fn bottleneck_bruteforce(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
) -> Result<f64, MetricError> {
    check_bruteforce_size(d1, d2)?;
    let mut worst = 0.0f64;
    for (_, s) in split_dims(d1, d2) {
        if s.inf1.len() != s.inf2.len() {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(enumerate_matchings(&s, |costs| {
            costs.iter().copied().fold(0.0, f64::max)
        }));
    }
    Ok(worst)
}

fn check_bruteforce_size(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
) -> Result<(), MetricError> {
    let size = d1.len() + d2.len();
    if size > BRUTEFORCE_LIMIT {
        return Err(MetricError::TooLarge {
            size,
            limit: BRUTEFORCE_LIMIT,
        });
    }
    Ok(())
}

/// Minimize `objective` over every matching of one dimension's points,
/// where each finite point may pair with an unused point of the other
/// diagram or with the diagonal, and essential births permute freely.
fn enumerate_matchings(s: &DimSplit, objective: impl Fn(&[f64]) -> f64 + Copy) -> f64 {
    let ground = GroundMetric::LInf;
    let mut best = f64::INFINITY;

    // Essential part: all bijections between the two birth lists.
    let mut inf2 = s.inf2.clone();
    let mut essential_costs: Vec<Vec<f64>> = Vec::new();
    permute(&mut inf2, 0, &mut |perm| {
        essential_costs.push(
            s.inf1
                .iter()
                .zip(perm.iter())
                .map(|(a, b)| (a - b).abs())
                .collect(),
        );
    });
    if essential_costs.is_empty() {
        essential_costs.push(Vec::new());
    }

    let mut used = vec![false; s.finite2.len()];
    let mut costs: Vec<f64> = Vec::new();
    for essential in &essential_costs {
        costs.clear();
        costs.extend_from_slice(essential);
        recurse_finite(s, ground, 0, &mut used, &mut costs, objective, &mut best);
    }
    best
}

fn recurse_finite(
    s: &DimSplit,
    ground: GroundMetric,
    i: usize,
    used: &mut [bool],
    costs: &mut Vec<f64>,
    objective: impl Fn(&[f64]) -> f64 + Copy,
    best: &mut f64,
) {
    if i == s.finite1.len() {
        for (j, &taken) in used.iter().enumerate() {
            if !taken {
                costs.push(diagonal_distance(&s.finite2[j], ground).expect("finite point"));
            }
        }
        let value = objective(costs);
        if value < *best {
            *best = value;
        }
        costs.truncate(costs.len() - used.iter().filter(|&&u| !u).count());
        return;
    }
    // Match to the diagonal.
    costs.push(diagonal_distance(&s.finite1[i], ground).expect("finite point"));
    recurse_finite(s, ground, i + 1, used, costs, objective, best);
    costs.pop();
    // Or to any unused point of the other diagram.
    for j in 0..used.len() {
        if used[j] {
            continue;
        }
        used[j] = true;
        costs.push(ground_distance(&s.finite1[i], &s.finite2[j], ground));
        recurse_finite(s, ground, i + 1, used, costs, objective, best);
        costs.pop();
        used[j] = false;
    }
}

fn permute(values: &mut Vec<f64>, start: usize, visit: &mut impl FnMut(&[f64])) {
    if values.is_empty() {
        return;
    }
    if start + 1 == values.len() {
        visit(values);
        return;
    }
    for i in start..values.len() {
        values.swap(start, i);
        permute(values, start + 1, visit);
        values.swap(start, i);
    }
}

/// One side of a transport match: a point index into a diagram's point
/// list, or the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchTarget {
    Point(usize),
    Diagonal,
}

/// An optimal pairing between two diagrams: every off-diagonal point of
/// each diagram appears exactly once; `cost` is the sum of matched
/// ground distances raised to the p-th power (diagonal-diagonal pairs are
/// free and omitted).
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub matches: Vec<(MatchTarget, MatchTarget)>,
    pub cost: f64,
}

/// The optimal Wasserstein matching itself, with indices into the two
/// diagrams' point lists. `cost` is the p-th power of [`wasserstein_with`]
/// on the same inputs.
pub fn wasserstein_plan(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    p: f64,
    ground: GroundMetric,
) -> Result<TransportPlan, MetricError> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(MetricError::BadP);
    }
    let mut matches = Vec::new();
    let mut total = 0.0;
    for (q, s) in split_dims(d1, d2) {
        if s.inf1.len() != s.inf2.len() {
            return Err(MetricError::InfiniteMismatch {
                dim: q,
                left: s.inf1.len(),
                right: s.inf2.len(),
            });
        }
        // Recover global indices: split_dims preserves point order per dim.
        let index = |d: &PersistenceDiagram, want_finite: bool| -> Vec<usize> {
            d.points()
                .iter()
                .enumerate()
                .filter(|(_, pt)| pt.dim == q && pt.death.is_finite() == want_finite)
                .map(|(i, _)| i)
                .collect()
        };
        let (fin1, fin2) = (index(d1, true), index(d2, true));
        let (ess1, ess2) = (index(d1, false), index(d2, false));
        for (&a, &b) in ess1.iter().zip(&ess2) {
            total += (d1.points()[a].birth - d2.points()[b].birth).abs().powf(p);
            matches.push((MatchTarget::Point(a), MatchTarget::Point(b)));
        }
        let (n1, n2) = (s.finite1.len(), s.finite2.len());
        if n1 + n2 == 0 {
            continue;
        }
        if n1 + n2 > HUNGARIAN_LIMIT {
            return Err(MetricError::TooLarge {
                size: n1 + n2,
                limit: HUNGARIAN_LIMIT,
            });
        }
        let cost = augmented_cost_matrix(&s, p, ground);
        let (assignment, assignment_cost) = assignment::hungarian(&cost);
        total += assignment_cost;
        for (row, &col) in assignment.iter().enumerate() {
            let source = (row < n1).then(|| MatchTarget::Point(fin1[row]));
            let target = (col < n2).then(|| MatchTarget::Point(fin2[col]));
            match (source, target) {
                (None, None) => {} // diagonal to diagonal carries nothing
                (source, target) => matches.push((
                    source.unwrap_or(MatchTarget::Diagonal),
                    target.unwrap_or(MatchTarget::Diagonal),
                )),
            }
        }
    }
    Ok(TransportPlan {
        matches,
        cost: total,
    })
}

/// Outcome of the entropic approximation.
#[derive(Debug, Clone, Copy)]
pub struct SinkhornResult {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Entropic-regularized approximation of the p-Wasserstein distance on the
/// same augmented cost matrices as the exact solver. The reported value is
/// the cost of the rounded (feasible) plan, an upper bound on the exact
/// distance. Non-convergence is flagged, not fatal.
pub fn wasserstein_sinkhorn(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    p: f64,
    epsilon: f64,
    max_iter: usize,
) -> Result<SinkhornResult, MetricError> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(MetricError::BadP);
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(MetricError::BadEpsilon);
    }
    let (d1, d2) = canonical_order(d1, d2);
    let ground = GroundMetric::LInf;
    let mut total = 0.0;
    let mut converged = true;
    let mut iterations = 0;
    for (q, s) in split_dims(d1, d2) {
        total += infinite_pow_sum(q, &s, p)?;
        let (n1, n2) = (s.finite1.len(), s.finite2.len());
        if n1 + n2 == 0 {
            continue;
        }
        if n1 == 0 || n2 == 0 {
            // Only diagonal assignments exist; the value is exact.
            total += s
                .finite1
                .iter()
                .chain(&s.finite2)
                .map(|pt| diagonal_distance(pt, ground).expect("finite point").powf(p))
                .sum::<f64>();
            continue;
        }
        let cost = augmented_cost_matrix(&s, p, ground);
        let run = sinkhorn::sinkhorn_unit_masses(&cost, epsilon, max_iter);
        total += run.plan_cost;
        converged &= run.converged;
        iterations = iterations.max(run.iterations);
    }
    Ok(SinkhornResult {
        value: total.powf(1.0 / p),
        converged,
        iterations,
    })
}

/// Which operator norm to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorNormSpec {
    L1,
    L2,
    LInf,
}

/// p-operator norm of a dense matrix: max column sum (p=1), max row sum
/// (p=inf), or the largest singular value via power iteration on A^T A
/// (p=2, tolerance 1e-10, at most 10^4 iterations).
pub fn operator_norm(a: &Matrix, spec: OperatorNormSpec) -> Result<f64, MetricError> {
    if a.is_empty() {
        return Err(MetricError::EmptyMatrix);
    }
    match spec {
        OperatorNormSpec::L1 => Ok((0..a.cols())
            .map(|j| (0..a.rows()).map(|i| a.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)),
        OperatorNormSpec::LInf => Ok((0..a.rows())
            .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)),
        OperatorNormSpec::L2 => Ok(spectral_norm(a)),
    }
}

fn spectral_norm(a: &Matrix) -> f64 {
    const TOL: f64 = 1e-10;
    const MAX_ITER: usize = 10_000;
    let n = a.cols();
    let at = a.transpose();
    // Slightly uneven start vector avoids a symmetric dead spot.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / (n as f64 + 1.0)).collect();
    let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm0);

    let mut sigma = 0.0;
    for _ in 0..MAX_ITER {
        let w = at.matvec(&a.matvec(&v));
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = w.iter().map(|x| x / norm).collect();
        let next = norm.sqrt();
        if (next - sigma).abs() < TOL {
            return next;
        }
        sigma = next;
    }
    sigma
}
