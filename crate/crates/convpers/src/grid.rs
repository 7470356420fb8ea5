//! Rectangular integer-lattice domains, multi-channel grid functions, and the
//! strided "valid" convolution operator.
//!
//! Conventions used throughout the crate: axis 0 is the slowest-varying
//! coordinate (row-major storage), rectangles are anchored at the origin, and
//! convolution sums run in a fixed order (lexicographic over the filter
//! rectangle, then channel) so outputs are bit-reproducible.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("empty region: filter extent {filter} exceeds image extent {image} on axis {axis}")]
    EmptyRegion {
        axis: usize,
        filter: usize,
        image: usize,
    },
    #[error("channel mismatch: image has {image}, filter has {filter}")]
    ChannelMismatch { image: usize, filter: usize },
    #[error("shape mismatch between filters")]
    ShapeMismatch,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("extents must all be >= 1 and nonempty")]
    BadShape,
    #[error("stride entries must all be >= 1 and nonempty")]
    BadStride,
    #[error(
        "values must be finite and match shape x channels ({expected} expected, {actual} given)"
    )]
    BadValues { expected: usize, actual: usize },
    #[error("coefficient count {coeffs} does not match filter count {filters}")]
    CoeffMismatch { coeffs: usize, filters: usize },
}

/// Extents of a rectangle in the integer lattice, anchored at the origin.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridShape {
    extents: Vec<usize>,
}

impl GridShape {
    pub fn new(extents: Vec<usize>) -> Result<Self, GridError> {
        if extents.is_empty() || extents.contains(&0) {
            return Err(GridError::BadShape);
        }
        Ok(Self { extents })
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    /// Number of lattice points.
    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false // extents are all >= 1 by construction
    }

    /// Row-major rank of a lattice point (axis 0 slowest).
    pub fn rank_of(&self, point: &[usize]) -> usize {
        debug_assert_eq!(point.len(), self.dim());
        let mut rank = 0;
        for (axis, &c) in point.iter().enumerate() {
            debug_assert!(c < self.extents[axis]);
            rank = rank * self.extents[axis] + c;
        }
        rank
    }

    /// Inverse of [`rank_of`](Self::rank_of).
    pub fn point_of(&self, mut rank: usize) -> Vec<usize> {
        let mut point = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            point[axis] = rank % self.extents[axis];
            rank /= self.extents[axis];
        }
        point
    }

    /// Lattice points in row-major (lexicographic) order.
    pub fn points(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.len()).map(|rank| self.point_of(rank))
    }
}

fn check_values(values: &[f64], expected: usize) -> Result<(), GridError> {
    if values.len() != expected || values.iter().any(|v| !v.is_finite()) {
        return Err(GridError::BadValues {
            expected,
            actual: values.len(),
        });
    }
    Ok(())
}

/// An n-channel real-valued function on a lattice rectangle.
///
/// Values are stored row-major over the lattice with channels innermost, so
/// the entry for point `p`, channel `c` sits at `rank_of(p) * channels + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    shape: GridShape,
    channels: usize,
    values: Vec<f64>,
}

impl Image {
    pub fn new(shape: GridShape, channels: usize, values: Vec<f64>) -> Result<Self, GridError> {
        if channels == 0 {
            return Err(GridError::BadShape);
        }
        check_values(&values, shape.len() * channels)?;
        Ok(Self {
            shape,
            channels,
            values,
        })
    }

    /// Single-channel image from row-major values.
    pub fn single_channel(shape: GridShape, values: Vec<f64>) -> Result<Self, GridError> {
        Self::new(shape, 1, values)
    }

    /// 2-D single-channel image from rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GridError> {
        if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(GridError::BadShape);
        }
        let shape = GridShape::new(vec![rows.len(), rows[0].len()])?;
        Self::single_channel(shape, rows.iter().flatten().copied().collect())
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, point: &[usize], channel: usize) -> f64 {
        self.values[self.shape.rank_of(point) * self.channels + channel]
    }

    /// Pointwise negation; sublevel sets of the result are superlevel sets of
    /// the original.
    pub fn negated(&self) -> Image {
        Image {
            shape: self.shape.clone(),
            channels: self.channels,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

/// A convolution filter: a rectangle of n-channel weights plus a label.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvFilter {
    shape: GridShape,
    channels: usize,
    values: Vec<f64>,
    id: String,
}

impl ConvFilter {
    pub fn new(
        id: impl Into<String>,
        shape: GridShape,
        channels: usize,
        values: Vec<f64>,
    ) -> Result<Self, GridError> {
        if channels == 0 {
            return Err(GridError::BadShape);
        }
        check_values(&values, shape.len() * channels)?;
        Ok(Self {
            shape,
            channels,
            values,
            id: id.into(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Weights in lattice-lexicographic order, channels innermost.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// L1 norm of the flattened weights.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// L2 norm of the flattened weights.
    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Per-axis translation step of a filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stride {
    k: Vec<usize>,
}

impl Stride {
    pub fn new(k: Vec<usize>) -> Result<Self, GridError> {
        if k.is_empty() || k.contains(&0) {
            return Err(GridError::BadStride);
        }
        Ok(Self { k })
    }

    /// Unit stride in `d` dimensions.
    pub fn unit(d: usize) -> Self {
        Self { k: vec![1; d] }
    }

    pub fn steps(&self) -> &[usize] {
        &self.k
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    /// Downsampling factor: the product of the per-axis steps.
    pub fn kappa(&self) -> usize {
        self.k.iter().product()
    }
}

/// Shape of the region R of filter placements: all `r` with
/// `B + (r ⊙ k) ⊆ P`. Extent along axis i is `floor((p_i - b_i)/k_i) + 1`.
pub fn region_shape(p: &GridShape, b: &GridShape, k: &Stride) -> Result<GridShape, GridError> {
    if p.dim() != b.dim() {
        return Err(GridError::DimensionMismatch(p.dim(), b.dim()));
    }
    if p.dim() != k.dim() {
        return Err(GridError::DimensionMismatch(p.dim(), k.dim()));
    }
    let mut extents = Vec::with_capacity(p.dim());
    for axis in 0..p.dim() {
        let (pi, bi) = (p.extents()[axis], b.extents()[axis]);
        if bi > pi {
            return Err(GridError::EmptyRegion {
                axis,
                filter: bi,
                image: pi,
            });
        }
        extents.push((pi - bi) / k.steps()[axis] + 1);
    }
    GridShape::new(extents)
}

/// Strided valid convolution: `(f * g)(v) = sum over p in B of
/// g(p) . f(p + v ⊙ k)` with the dot product taken over channels.
///
/// The summation order is fixed (lexicographic over B, then channel) so the
/// output is identical across runs and platforms.
pub fn convolve(f: &Image, g: &ConvFilter, k: &Stride) -> Result<Image, GridError> {
    if f.channels != g.channels {
        return Err(GridError::ChannelMismatch {
            image: f.channels,
            filter: g.channels,
        });
    }
    let region = region_shape(&f.shape, &g.shape, k)?;
    let d = f.shape.dim();
    let mut out = Vec::with_capacity(region.len());
    let mut image_point = vec![0usize; d];
    for r in region.points() {
        let mut acc = 0.0;
        for (b_rank, b_point) in g.shape.points().enumerate() {
            for axis in 0..d {
                image_point[axis] = b_point[axis] + r[axis] * k.steps()[axis];
            }
            let f_base = f.shape.rank_of(&image_point) * f.channels;
            let g_base = b_rank * g.channels;
            for c in 0..f.channels {
                acc += g.values[g_base + c] * f.values[f_base + c];
            }
        }
        out.push(acc);
    }
    Image::single_channel(region, out)
}

/// Pointwise linear combination of equally-shaped filters.
pub fn linear_combination(filters: &[ConvFilter], coeffs: &[f64]) -> Result<ConvFilter, GridError> {
    if filters.is_empty() {
        return Err(GridError::ShapeMismatch);
    }
    if filters.len() != coeffs.len() {
        return Err(GridError::CoeffMismatch {
            coeffs: coeffs.len(),
            filters: filters.len(),
        });
    }
    let first = &filters[0];
    if filters
        .iter()
        .any(|g| g.shape != first.shape || g.channels != first.channels)
    {
        return Err(GridError::ShapeMismatch);
    }
    let mut values = vec![0.0; first.values.len()];
    for (g, &c) in filters.iter().zip(coeffs) {
        for (acc, &v) in values.iter_mut().zip(&g.values) {
            *acc += c * v;
        }
    }
    ConvFilter::new("lincomb", first.shape.clone(), first.channels, values)
}

/// One patch vector per filter placement `r`, in lexicographic order over the
/// region. Each vector lists the values of `f` on `B + (r ⊙ k)`,
/// lexicographic over B with channels innermost — the embedding that sends a
/// placement to the image values it sees.
pub fn extract_patches(f: &Image, b: &GridShape, k: &Stride) -> Result<Vec<Vec<f64>>, GridError> {
    let region = region_shape(&f.shape, b, k)?;
    let d = f.shape.dim();
    let mut patches = Vec::with_capacity(region.len());
    let mut image_point = vec![0usize; d];
    for r in region.points() {
        let mut patch = Vec::with_capacity(b.len() * f.channels);
        for b_point in b.points() {
            for axis in 0..d {
                image_point[axis] = b_point[axis] + r[axis] * k.steps()[axis];
            }
            let base = f.shape.rank_of(&image_point) * f.channels;
            patch.extend_from_slice(&f.values[base..base + f.channels]);
        }
        patches.push(patch);
    }
    Ok(patches)
}
