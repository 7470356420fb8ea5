//! Sublevel-set persistent homology over Z/2 by boundary-matrix column
//! reduction, with the clearing optimization, plus Euler characteristic
//! curves and an independent brute-force Betti oracle for cross-checking.

use crate::complex::FilteredComplex;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PersistenceError {
    #[error("filtration is not monotone at cell {0}")]
    NonMonotone(usize),
    #[error("thresholds must be sorted ascending")]
    UnsortedThresholds,
    #[error("p must be >= 1 (or infinity)")]
    BadP,
}

/// One diagram point. Essential classes carry `death = f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramPoint {
    pub birth: f64,
    pub death: f64,
    pub dim: usize,
}

impl DiagramPoint {
    pub fn new(birth: f64, death: f64, dim: usize) -> Self {
        Self { birth, death, dim }
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// A multiset of diagram points, kept sorted by (dim, birth, death) so that
/// equality is multiset equality.
#[derive(Debug, Clone)]
pub struct PersistenceDiagram {
    points: Vec<DiagramPoint>,
    max_dim: usize,
    cap: Option<f64>,
}

impl PersistenceDiagram {
    pub fn new(mut points: Vec<DiagramPoint>, max_dim: usize) -> Self {
        debug_assert!(
            points
                .iter()
                .all(|p| p.birth.is_finite() && p.birth <= p.death),
            "diagram points need finite birth <= death"
        );
        points.sort_by(|a, b| {
            (a.dim, a.birth, a.death)
                .partial_cmp(&(b.dim, b.birth, b.death))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Self {
            points,
            max_dim,
            cap: None,
        }
    }

    /// Attach the maximal filtration value of the originating complex; used
    /// to cap essential points when vectorizing.
    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn points(&self) -> &[DiagramPoint] {
        &self.points
    }

    pub fn points_of_dim(&self, q: usize) -> impl Iterator<Item = &DiagramPoint> {
        self.points.iter().filter(move |p| p.dim == q)
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cap(&self) -> Option<f64> {
        self.cap
    }

    /// The cap if recorded, otherwise the largest finite coordinate present
    /// (0 for an empty diagram).
    pub fn effective_cap(&self) -> f64 {
        self.cap.unwrap_or_else(|| {
            self.points
                .iter()
                .flat_map(|p| {
                    let death = if p.death.is_finite() {
                        p.death
                    } else {
                        p.birth
                    };
                    [p.birth, death]
                })
                .fold(0.0, f64::max)
        })
    }

    /// Persistent Betti number: points of dimension `q` born at or before
    /// `alpha` and still alive after it.
    pub fn betti_at(&self, alpha: f64, q: usize) -> usize {
        self.points_of_dim(q)
            .filter(|p| p.birth <= alpha && alpha < p.death)
            .count()
    }
}

impl PartialEq for PersistenceDiagram {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

/// Total order on the cells: ascending value, then dimension, then id.
/// Monotonicity makes this a valid topological order of the face poset.
pub fn filtration_order(k: &FilteredComplex) -> Result<Vec<usize>, PersistenceError> {
    let mut ids: Vec<usize> = k.cells().iter().map(|c| c.id).collect();
    ids.sort_by(|&a, &b| {
        let ca = k.cell(a).unwrap();
        let cb = k.cell(b).unwrap();
        ca.value
            .total_cmp(&cb.value)
            .then(ca.dim.cmp(&cb.dim))
            .then(a.cmp(&b))
    });
    // from_cells already guarantees monotonicity; double-check cheaply so a
    // hand-mutated complex cannot slip through.
    for cell in k.cells() {
        for &f in &cell.faces {
            if k.cell(f).is_none_or(|fc| fc.value > cell.value) {
                return Err(PersistenceError::NonMonotone(cell.id));
            }
        }
    }
    Ok(ids)
}

#[derive(Debug, Clone, Copy)]
pub struct ReductionOptions {
    /// Keep points with birth == death (dropped by default).
    pub keep_diagonal: bool,
    /// Zero out columns already known to reduce to nothing (clearing).
    pub clearing: bool,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            keep_diagonal: false,
            clearing: true,
        }
    }
}

/// Standard left-to-right column reduction with lowest-one pivots, clearing
/// enabled. Paired cells (sigma, tau) give the point
/// (value(sigma), value(tau)) in dim(sigma); unpaired cells give essential
/// points. Zero-persistence points are dropped unless requested.
pub fn reduce_and_pair(k: &FilteredComplex) -> Result<PersistenceDiagram, PersistenceError> {
    reduce_and_pair_with(k, ReductionOptions::default())
}

pub fn reduce_and_pair_with(
    k: &FilteredComplex,
    opts: ReductionOptions,
) -> Result<PersistenceDiagram, PersistenceError> {
    let order = filtration_order(k)?;
    let n = order.len();
    let rank_of: HashMap<usize, usize> = order.iter().enumerate().map(|(r, &id)| (id, r)).collect();

    // Column r holds the boundary of the r-th cell as sorted ranks.
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut dims: Vec<usize> = Vec::with_capacity(n);
    let mut values: Vec<f64> = Vec::with_capacity(n);
    for &id in &order {
        let cell = k.cell(id).unwrap();
        let mut boundary: Vec<usize> = cell.faces.iter().map(|f| rank_of[f]).collect();
        boundary.sort_unstable();
        columns.push(boundary);
        dims.push(cell.dim);
        values.push(cell.value);
    }

    let max_dim = k.max_dim();
    let mut pivot_of: Vec<Option<usize>> = vec![None; n]; // pivot rank -> column rank
    let mut cleared = vec![false; n];
    let mut is_death = vec![false; n];

    // Reducing dimension q+1 first lets its pivots clear dim-q columns.
    for q in (0..=max_dim).rev() {
        for r in 0..n {
            if dims[r] != q || (opts.clearing && cleared[r]) {
                continue;
            }
            let mut column = std::mem::take(&mut columns[r]);
            while let Some(&low) = column.last() {
                let Some(other) = pivot_of[low] else { break };
                column = symmetric_difference(&column, &columns[other]);
            }
            if let Some(&low) = column.last() {
                pivot_of[low] = Some(r);
                is_death[r] = true;
                if opts.clearing {
                    cleared[low] = true;
                }
            }
            columns[r] = column;
        }
    }

    let mut points = Vec::new();
    for (low, &col) in pivot_of.iter().enumerate() {
        if let Some(death_rank) = col {
            let birth = values[low];
            let death = values[death_rank];
            if birth < death || opts.keep_diagonal {
                points.push(DiagramPoint::new(birth, death, dims[low]));
            }
        }
    }
    for r in 0..n {
        let paired_as_birth = pivot_of[r].is_some();
        if !paired_as_birth && !is_death[r] {
            points.push(DiagramPoint::new(values[r], f64::INFINITY, dims[r]));
        }
    }

    Ok(PersistenceDiagram::new(points, max_dim).with_cap(k.max_value()))
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Betti number of the sublevel complex at `alpha`, computed independently
/// of the reduction: nullity of the q-boundary minus the rank of the
/// (q+1)-boundary, by Gaussian elimination over Z/2.
pub fn betti_bruteforce(k: &FilteredComplex, alpha: f64, q: usize) -> usize {
    let included: Vec<&crate::complex::Cell> =
        k.cells().iter().filter(|c| c.value <= alpha).collect();
    let count_q = included.iter().filter(|c| c.dim == q).count();
    if count_q == 0 {
        return 0;
    }
    let rank_q = boundary_rank(&included, q);
    let rank_q1 = boundary_rank(&included, q + 1);
    count_q - rank_q - rank_q1
}

/// Rank over Z/2 of the boundary map from q-cells to (q-1)-cells, restricted
/// to the given cells.
fn boundary_rank(cells: &[&crate::complex::Cell], q: usize) -> usize {
    if q == 0 {
        return 0;
    }
    let row_index: HashMap<usize, usize> = cells
        .iter()
        .filter(|c| c.dim == q - 1)
        .enumerate()
        .map(|(i, c)| (c.id, i))
        .collect();
    let mut matrix: Vec<Vec<u64>> = Vec::new();
    let words = row_index.len().div_ceil(64);
    for cell in cells.iter().filter(|c| c.dim == q) {
        let mut column = vec![0u64; words];
        for face in &cell.faces {
            let row = row_index[face];
            column[row / 64] ^= 1 << (row % 64);
        }
        matrix.push(column);
    }
    // Column-wise Gaussian elimination over Z/2.
    let mut rank = 0;
    let mut owner: HashMap<(usize, usize), usize> = HashMap::new(); // top bit -> column
    for col in 0..matrix.len() {
        while let Some(top) = highest_bit(&matrix[col]) {
            match owner.get(&top) {
                Some(&other) => {
                    let (a, b) = if other < col {
                        let (left, right) = matrix.split_at_mut(col);
                        (&left[other], &mut right[0])
                    } else {
                        unreachable!("owner columns precede the current one")
                    };
                    for (w, s) in b.iter_mut().zip(a) {
                        *w ^= s;
                    }
                }
                None => {
                    owner.insert(top, col);
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

fn highest_bit(column: &[u64]) -> Option<(usize, usize)> {
    for (word, &w) in column.iter().enumerate().rev() {
        if w != 0 {
            return Some((word, 63 - w.leading_zeros() as usize));
        }
    }
    None
}

/// Euler characteristic of the sublevel complexes at a sorted list of
/// thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerCurve {
    thresholds: Vec<f64>,
    values: Vec<i64>,
}

impl EulerCurve {
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }
}

pub fn euler_curve(
    k: &FilteredComplex,
    thresholds: &[f64],
) -> Result<EulerCurve, PersistenceError> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(PersistenceError::UnsortedThresholds);
    }
    let values = thresholds
        .iter()
        .map(|&alpha| {
            k.cells()
                .iter()
                .filter(|c| c.value <= alpha)
                .map(|c| if c.dim % 2 == 0 { 1i64 } else { -1i64 })
                .sum()
        })
        .collect();
    Ok(EulerCurve {
        thresholds: thresholds.to_vec(),
        values,
    })
}

/// p-norm exponent for cell-value functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lp {
    Finite(f64),
    Infinity,
}

/// L^p norm of a function on a complex, given as its list of cell values.
pub fn lp_norm(values: &[f64], p: Lp) -> Result<f64, PersistenceError> {
    match p {
        Lp::Infinity => Ok(values.iter().map(|v| v.abs()).fold(0.0, f64::max)),
        Lp::Finite(p) if p >= 1.0 && p.is_finite() => Ok(values
            .iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)),
        _ => Err(PersistenceError::BadP),
    }
}
