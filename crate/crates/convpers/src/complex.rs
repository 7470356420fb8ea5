//! Filtered cell complexes with explicit codimension-1 face lists.
//!
//! Images become cubical complexes in one of two ways: pixels as vertices
//! with the lower-star rule (a cube appears once all its vertices have), or
//! pixels as top-dimensional cubes with lower cells inheriting the min over
//! containing voxels. Abstract simplex lists with vertex values become
//! simplicial complexes via the lower-star rule. Both kinds share one cell
//! representation so the persistence machinery downstream is uniform.

use crate::grid::Image;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ComplexError {
    #[error("non-monotone filtration: cell {cell} (value {value}) has face {face} with larger value {face_value}")]
    NonMonotone {
        cell: usize,
        value: f64,
        face: usize,
        face_value: f64,
    },
    #[error("cell {cell} references missing face id {face}")]
    MissingFace { cell: usize, face: usize },
    #[error("cell {cell} has face {face} of dimension {face_dim}, expected {expected}")]
    FaceDimension {
        cell: usize,
        face: usize,
        face_dim: usize,
        expected: usize,
    },
    #[error("cell {cell} has an invalid face list (must be strictly sorted; dim-1 cells have exactly 2 faces)")]
    BadFaceList { cell: usize },
    #[error(
        "boundary of boundary is nonzero at cell {cell}: codim-2 face {face} appears {count} times"
    )]
    BoundarySquared {
        cell: usize,
        face: usize,
        count: usize,
    },
    #[error("duplicate cell id {0}")]
    DuplicateId(usize),
    #[error("empty simplex in input")]
    EmptySimplex,
    #[error("vertex id {vertex} out of range for {count} vertex values")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("expected a single-channel image, got {0} channels")]
    NotSingleChannel(usize),
    #[error("max dimension {m} exceeds lattice dimension {d}")]
    MaxDimTooLarge { m: usize, d: usize },
    #[error("vertex value count {given} does not match vertex count {expected}")]
    VertexCountMismatch { given: usize, expected: usize },
    #[error("cell values must be finite")]
    NonFiniteValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexKind {
    Cubical,
    Simplicial,
}

/// A single cell: its dimension, filtration value, and the ids of its
/// codimension-1 faces (strictly sorted).
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: usize,
    pub dim: usize,
    pub faces: Vec<usize>,
    pub value: f64,
}

impl Cell {
    pub fn new(id: usize, dim: usize, faces: Vec<usize>, value: f64) -> Self {
        Self {
            id,
            dim,
            faces,
            value,
        }
    }
}

/// A filtered complex: cells ordered by id, with a monotone filtration
/// (no cell appears before its faces) and Z/2-consistent boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredComplex {
    cells: Vec<Cell>,
    index_of: HashMap<usize, usize>,
    kind: ComplexKind,
    max_dim: usize,
    vertex_count: usize,
}

impl FilteredComplex {
    /// Validate and wrap an explicit cell list. Checks: unique ids, faces
    /// exist with dimension one lower, strictly sorted face lists, monotone
    /// values, and that the Z/2 boundary of every boundary vanishes.
    pub fn from_cells(mut cells: Vec<Cell>, kind: ComplexKind) -> Result<Self, ComplexError> {
        cells.sort_by_key(|c| c.id);
        let mut index_of = HashMap::with_capacity(cells.len());
        for (pos, cell) in cells.iter().enumerate() {
            if index_of.insert(cell.id, pos).is_some() {
                return Err(ComplexError::DuplicateId(cell.id));
            }
            if !cell.value.is_finite() {
                return Err(ComplexError::NonFiniteValue);
            }
        }
        for cell in &cells {
            if cell.dim == 0 && !cell.faces.is_empty() {
                return Err(ComplexError::BadFaceList { cell: cell.id });
            }
            if cell.dim == 1 && cell.faces.len() != 2 {
                return Err(ComplexError::BadFaceList { cell: cell.id });
            }
            if !cell.faces.windows(2).all(|w| w[0] < w[1]) {
                return Err(ComplexError::BadFaceList { cell: cell.id });
            }
            for &face in &cell.faces {
                let &fpos = index_of.get(&face).ok_or(ComplexError::MissingFace {
                    cell: cell.id,
                    face,
                })?;
                let f = &cells[fpos];
                if cell.dim == 0 || f.dim != cell.dim - 1 {
                    return Err(ComplexError::FaceDimension {
                        cell: cell.id,
                        face,
                        face_dim: f.dim,
                        expected: cell.dim.saturating_sub(1),
                    });
                }
                if f.value > cell.value {
                    return Err(ComplexError::NonMonotone {
                        cell: cell.id,
                        value: cell.value,
                        face,
                        face_value: f.value,
                    });
                }
            }
            if cell.dim >= 2 {
                let mut counts: HashMap<usize, usize> = HashMap::new();
                for &face in &cell.faces {
                    let f = &cells[index_of[&face]];
                    for &ff in &f.faces {
                        *counts.entry(ff).or_insert(0) += 1;
                    }
                }
                for (face, count) in counts {
                    if count != 2 {
                        return Err(ComplexError::BoundarySquared {
                            cell: cell.id,
                            face,
                            count,
                        });
                    }
                }
            }
        }
        let max_dim = cells.iter().map(|c| c.dim).max().unwrap_or(0);
        let vertex_count = cells.iter().filter(|c| c.dim == 0).count();
        Ok(Self {
            cells,
            index_of,
            kind,
            max_dim,
            vertex_count,
        })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, id: usize) -> Option<&Cell> {
        self.index_of.get(&id).map(|&pos| &self.cells[pos])
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn kind(&self) -> ComplexKind {
        self.kind
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Largest filtration value, or 0 for the empty complex.
    pub fn max_value(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.value)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    }

    /// All distinct filtration values, ascending.
    pub fn value_set(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.cells.iter().map(|c| c.value).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        values
    }

    /// The m-skeleton: all cells of dimension at most `m`, ids preserved.
    pub fn skeleton(&self, m: usize) -> FilteredComplex {
        let cells: Vec<Cell> = self.cells.iter().filter(|c| c.dim <= m).cloned().collect();
        let index_of = cells
            .iter()
            .enumerate()
            .map(|(pos, c)| (c.id, pos))
            .collect();
        let vertex_count = self.vertex_count;
        FilteredComplex {
            cells,
            index_of,
            kind: self.kind,
            max_dim: self.max_dim.min(m),
            vertex_count,
        }
    }

    /// Ids of the dimension-0 cells in increasing id order. This is the
    /// vertex enumeration used by [`with_vertex_values`](Self::with_vertex_values).
    pub fn vertex_ids(&self) -> Vec<usize> {
        self.cells
            .iter()
            .filter(|c| c.dim == 0)
            .map(|c| c.id)
            .collect()
    }

    /// Same cell structure, refiltered by the lower-star extension of a new
    /// vertex function: every cell takes the max over its vertices, which
    /// propagates as the max over codimension-1 faces.
    pub fn with_vertex_values(&self, vertex_values: &[f64]) -> Result<Self, ComplexError> {
        if vertex_values.len() != self.vertex_count {
            return Err(ComplexError::VertexCountMismatch {
                given: vertex_values.len(),
                expected: self.vertex_count,
            });
        }
        if vertex_values.iter().any(|v| !v.is_finite()) {
            return Err(ComplexError::NonFiniteValue);
        }
        let mut new_values: HashMap<usize, f64> = HashMap::with_capacity(self.len());
        let mut positions: Vec<usize> = (0..self.cells.len()).collect();
        positions.sort_by_key(|&p| self.cells[p].dim);
        let mut vertex_rank = 0;
        for &pos in &positions {
            let cell = &self.cells[pos];
            let value = if cell.dim == 0 {
                let v = vertex_values[vertex_rank];
                vertex_rank += 1;
                v
            } else {
                cell.faces
                    .iter()
                    .map(|f| new_values[f])
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            new_values.insert(cell.id, value);
        }
        let cells = self
            .cells
            .iter()
            .map(|c| Cell::new(c.id, c.dim, c.faces.clone(), new_values[&c.id]))
            .collect();
        FilteredComplex::from_cells(cells, self.kind)
    }
}

/// Cubical complex with the image pixels as vertices: a cube appears once
/// all of its vertices have (value = max over vertices). Cells of dimension
/// above `m` are omitted. Cell ids run over anchors in lexicographic order,
/// then over the spanned-axes bitmask in increasing order.
pub fn cubical_lower_star(f: &Image, m: usize) -> Result<FilteredComplex, ComplexError> {
    if f.channels() != 1 {
        return Err(ComplexError::NotSingleChannel(f.channels()));
    }
    let d = f.shape().dim();
    if m > d {
        return Err(ComplexError::MaxDimTooLarge { m, d });
    }
    build_cubical(f.shape().extents(), m, |anchor, mask| {
        // Max over the 2^|mask| vertices spanned from the anchor.
        let mut value = f64::NEG_INFINITY;
        for_each_corner(anchor, mask, |corner| {
            value = value.max(f.value(corner, 0));
        });
        value
    })
}

/// Cubical complex with the image pixels as top-dimensional cubes: every
/// lower cube takes the min over the voxels containing it. Cells of
/// dimension above `m` are omitted (values are still induced from voxels).
pub fn cubical_upper_star(f: &Image, m: usize) -> Result<FilteredComplex, ComplexError> {
    if f.channels() != 1 {
        return Err(ComplexError::NotSingleChannel(f.channels()));
    }
    let d = f.shape().dim();
    if m > d {
        return Err(ComplexError::MaxDimTooLarge { m, d });
    }
    let voxel_extents = f.shape().extents();
    // Vertex grid is one larger per axis than the voxel grid.
    let vertex_extents: Vec<usize> = voxel_extents.iter().map(|&e| e + 1).collect();
    build_cubical(&vertex_extents, m, |anchor, mask| {
        // Min over voxels whose closed cube contains this cell: spanned axes
        // pin the voxel coordinate, free axes may sit on either side.
        let mut value = f64::INFINITY;
        let free: Vec<usize> = (0..anchor.len()).filter(|i| mask & (1 << i) == 0).collect();
        let mut voxel = anchor.to_vec();
        for choice in 0..(1usize << free.len()) {
            let mut valid = true;
            for (bit, &axis) in free.iter().enumerate() {
                if choice & (1 << bit) != 0 {
                    if anchor[axis] == 0 {
                        valid = false;
                        break;
                    }
                    voxel[axis] = anchor[axis] - 1;
                } else {
                    if anchor[axis] >= voxel_extents[axis] {
                        valid = false;
                        break;
                    }
                    voxel[axis] = anchor[axis];
                }
            }
            if valid {
                // Spanned axes always have anchor < voxel extent.
                for i in 0..anchor.len() {
                    if mask & (1 << i) != 0 {
                        voxel[i] = anchor[i];
                    }
                }
                value = value.min(f.value(&voxel, 0));
            }
        }
        value
    })
}

fn for_each_corner(anchor: &[usize], mask: usize, mut visit: impl FnMut(&[usize])) {
    let spanned: Vec<usize> = (0..anchor.len()).filter(|i| mask & (1 << i) != 0).collect();
    let mut corner = anchor.to_vec();
    for choice in 0..(1usize << spanned.len()) {
        for (bit, &axis) in spanned.iter().enumerate() {
            corner[axis] = anchor[axis] + ((choice >> bit) & 1);
        }
        visit(&corner);
    }
}

fn build_cubical(
    vertex_extents: &[usize],
    m: usize,
    value_of: impl Fn(&[usize], usize) -> f64,
) -> Result<FilteredComplex, ComplexError> {
    let d = vertex_extents.len();
    let mut id_of: HashMap<(Vec<usize>, usize), usize> = HashMap::new();
    let mut cells = Vec::new();
    let total: usize = vertex_extents.iter().product();

    let point_of = |mut rank: usize| -> Vec<usize> {
        let mut p = vec![0; d];
        for axis in (0..d).rev() {
            p[axis] = rank % vertex_extents[axis];
            rank /= vertex_extents[axis];
        }
        p
    };

    // First pass assigns ids (anchor-lexicographic, then mask) so face
    // lookups in the second pass always resolve.
    let mut ordered: Vec<(Vec<usize>, usize)> = Vec::new();
    for rank in 0..total {
        let anchor = point_of(rank);
        for mask in 0..(1usize << d) {
            let dim = (mask as u32).count_ones() as usize;
            if dim > m {
                continue;
            }
            let fits = (0..d).all(|i| mask & (1 << i) == 0 || anchor[i] + 1 < vertex_extents[i]);
            if !fits {
                continue;
            }
            id_of.insert((anchor.clone(), mask), ordered.len());
            ordered.push((anchor.clone(), mask));
        }
    }
    for (id, (anchor, mask)) in ordered.iter().enumerate() {
        let dim = (*mask as u32).count_ones() as usize;
        let mut faces = Vec::with_capacity(2 * dim);
        for axis in 0..d {
            if mask & (1 << axis) == 0 {
                continue;
            }
            let sub = mask & !(1 << axis);
            faces.push(id_of[&(anchor.clone(), sub)]);
            let mut shifted = anchor.clone();
            shifted[axis] += 1;
            faces.push(id_of[&(shifted, sub)]);
        }
        faces.sort_unstable();
        cells.push(Cell::new(id, dim, faces, value_of(anchor, *mask)));
    }
    FilteredComplex::from_cells(cells, ComplexKind::Cubical)
}

/// Simplicial complex from a simplex list with per-vertex values. The input
/// is closed under faces and deduplicated; every vertex with a value becomes
/// a 0-cell. Each simplex takes the max over its vertices. Ids are assigned
/// by (dimension, sorted vertex tuple) lexicographically, so the 0-cells of
/// vertex `v` always get id `v`.
pub fn simplicial_lower_star(
    simplices: &[Vec<usize>],
    vertex_values: &[f64],
) -> Result<FilteredComplex, ComplexError> {
    use std::collections::BTreeSet;
    let n = vertex_values.len();
    if vertex_values.iter().any(|v| !v.is_finite()) {
        return Err(ComplexError::NonFiniteValue);
    }
    let mut closed: BTreeSet<Vec<usize>> = BTreeSet::new();
    for v in 0..n {
        closed.insert(vec![v]);
    }
    let mut stack: Vec<Vec<usize>> = Vec::new();
    for simplex in simplices {
        if simplex.is_empty() {
            return Err(ComplexError::EmptySimplex);
        }
        let mut verts: Vec<usize> = simplex.clone();
        verts.sort_unstable();
        verts.dedup();
        for &v in &verts {
            if v >= n {
                return Err(ComplexError::VertexOutOfRange {
                    vertex: v,
                    count: n,
                });
            }
        }
        stack.push(verts);
    }
    while let Some(simplex) = stack.pop() {
        if !closed.insert(simplex.clone()) {
            continue; // duplicates are tolerated
        }
        if simplex.len() > 1 {
            for drop in 0..simplex.len() {
                let mut face = simplex.clone();
                face.remove(drop);
                stack.push(face);
            }
        }
    }

    let mut ordered: Vec<Vec<usize>> = closed.into_iter().collect();
    ordered.sort_by(|a, b| (a.len(), a.as_slice()).cmp(&(b.len(), b.as_slice())));
    let id_of: HashMap<Vec<usize>, usize> = ordered
        .iter()
        .enumerate()
        .map(|(id, s)| (s.clone(), id))
        .collect();

    let cells = ordered
        .iter()
        .enumerate()
        .map(|(id, simplex)| {
            let dim = simplex.len() - 1;
            let mut faces = Vec::with_capacity(simplex.len());
            if dim > 0 {
                for drop in 0..simplex.len() {
                    let mut face = simplex.clone();
                    face.remove(drop);
                    faces.push(id_of[&face]);
                }
                faces.sort_unstable();
            }
            let value = simplex
                .iter()
                .map(|&v| vertex_values[v])
                .fold(f64::NEG_INFINITY, f64::max);
            Cell::new(id, dim, faces, value)
        })
        .collect();
    FilteredComplex::from_cells(cells, ComplexKind::Simplicial)
}
