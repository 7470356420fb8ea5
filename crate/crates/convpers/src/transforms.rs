//! Convolutional persistence transforms: convolve an image (or a
//! vertex-labeled simplicial complex) with a bank of filters, build a
//! filtered complex per filter, and record the persistence diagram or Euler
//! curve of each result. Also provides the filter-bank constructors
//! (standard kernels, random sphere samples, PCA eigenfilters), the patch
//! embedding that realizes the transform as a persistent homology transform,
//! and a general-position diagnostic for point sets.

use crate::complex::{cubical_lower_star, cubical_upper_star, ComplexError, FilteredComplex};
use crate::grid::{
    convolve, extract_patches, region_shape, ConvFilter, GridError, GridShape, Image, Stride,
};
use crate::linalg::{jacobi_symmetric_eigen, Matrix};
use crate::persistence::{
    euler_curve, reduce_and_pair, EulerCurve, PersistenceDiagram, PersistenceError,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Persistence(#[from] PersistenceError),
    #[error("filter bank is empty")]
    EmptyBank,
    #[error("filters in a bank must share a channel count")]
    MixedChannels,
    #[error("{0:?} banks must have uniformly shaped filters")]
    MixedShapes(&'static str),
    #[error("bank is declared L2-normalized but filter {id} has norm {norm}")]
    NotNormalized { id: String, norm: f64 },
    #[error("need at least {need} training patches, found {have}")]
    InsufficientPatches { have: usize, need: usize },
    #[error("{requested} components requested but the patch space has only {available}")]
    TooManyComponents { requested: usize, available: usize },
    #[error("training patches have no variance; eigenfilters are undefined")]
    DegeneratePatches,
    #[error("filter count must be at least 1")]
    BadCount,
    #[error("weight vector has length {got}, expected {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("weight vector must be L2-normalized (norm {0})")]
    NotUnitNorm(f64),
    #[error("adjacency must be {n} x {n} and features {n} x d for a complex with {n} vertices")]
    SizeMismatch { n: usize },
    #[error("general-position check supports at most {limit} points, got {got}")]
    TooManyPoints { got: usize, limit: usize },
    #[error("points must share a common dimension")]
    RaggedPoints,
}

/// How a bank was produced; random and eigen banks record their seeds.
#[derive(Debug, Clone, PartialEq)]
pub enum BankProvenance {
    Trivial,
    Standard,
    Random { seed: u64 },
    Eigen { seed: u64, components: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    L2Unit,
    Raw,
}

/// An ordered list of convolution filters with shared channel count.
/// Random and eigen banks additionally share a single shape (they sample
/// the unit sphere of a fixed patch space).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    filters: Vec<ConvFilter>,
    provenance: BankProvenance,
    normalization: Normalization,
}

impl FilterBank {
    pub fn new(
        filters: Vec<ConvFilter>,
        provenance: BankProvenance,
        normalization: Normalization,
    ) -> Result<Self, TransformError> {
        if filters.is_empty() {
            return Err(TransformError::EmptyBank);
        }
        if filters
            .iter()
            .any(|f| f.channels() != filters[0].channels())
        {
            return Err(TransformError::MixedChannels);
        }
        if matches!(
            provenance,
            BankProvenance::Random { .. } | BankProvenance::Eigen { .. }
        ) && filters.iter().any(|f| f.shape() != filters[0].shape())
        {
            return Err(TransformError::MixedShapes("random/eigen"));
        }
        if normalization == Normalization::L2Unit {
            for f in &filters {
                let norm = f.l2_norm();
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(TransformError::NotNormalized {
                        id: f.id().to_string(),
                        norm,
                    });
                }
            }
        }
        Ok(Self {
            filters,
            provenance,
            normalization,
        })
    }

    /// The single 1x1 unit filter: convolution with it reproduces the input.
    /// Panics if `channels` is zero.
    pub fn trivial(channels: usize) -> Self {
        assert!(channels >= 1, "a filter needs at least one channel");
        let shape = GridShape::new(vec![1, 1]).expect("static shape");
        let mut values = vec![0.0; channels];
        values[0] = 1.0;
        // For one channel this is the unit filter; multi-channel picks the
        // first channel so the L2 norm stays 1.
        let filter = ConvFilter::new("trivial", shape, channels, values).expect("static filter");
        Self {
            filters: vec![filter],
            provenance: BankProvenance::Trivial,
            normalization: Normalization::L2Unit,
        }
    }

    pub fn filters(&self) -> &[ConvFilter] {
        &self.filters
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn provenance(&self) -> &BankProvenance {
        &self.provenance
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }
}

/// Which image-complex construction to run on the convolved grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// Pixels as vertices, cells take the max over their vertices.
    Lower,
    /// Pixels as top cubes, cells take the min over containing voxels.
    Upper,
}

fn build_image_complex(
    f: &Image,
    m: usize,
    construction: Construction,
) -> Result<FilteredComplex, ComplexError> {
    match construction {
        Construction::Lower => cubical_lower_star(f, m),
        Construction::Upper => cubical_upper_star(f, m),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CptMeta {
    pub image_shape: GridShape,
    pub stride: Stride,
    pub max_dim: usize,
    pub construction: Construction,
}

/// Per-filter persistence diagrams, in bank order.
#[derive(Debug, Clone, PartialEq)]
pub struct CptResult {
    pub entries: Vec<(String, PersistenceDiagram)>,
    pub meta: CptMeta,
}

/// The image convolutional persistence transform: for each filter, convolve,
/// build the chosen cubical complex on the placement region, and reduce.
/// Filters run in parallel; the output order is the bank order regardless of
/// scheduling, and each entry is bit-identical across thread counts.
pub fn cpt_image(
    f: &Image,
    bank: &FilterBank,
    k: &Stride,
    m: usize,
    construction: Construction,
) -> Result<CptResult, TransformError> {
    let entries = bank
        .filters()
        .par_iter()
        .map(
            |g| -> Result<(String, PersistenceDiagram), TransformError> {
                let conv = convolve(f, g, k)?;
                let complex = build_image_complex(&conv, m, construction)?;
                let diagram = reduce_and_pair(&complex)?;
                Ok((g.id().to_string(), diagram))
            },
        )
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CptResult {
        entries,
        meta: CptMeta {
            image_shape: f.shape().clone(),
            stride: k.clone(),
            max_dim: m,
            construction,
        },
    })
}

/// Euler-curve variant of [`cpt_image`]: per filter, the Euler
/// characteristic curve of the convolved complex at the given sorted
/// thresholds.
pub fn cect_image(
    f: &Image,
    bank: &FilterBank,
    k: &Stride,
    m: usize,
    thresholds: &[f64],
    construction: Construction,
) -> Result<Vec<(String, EulerCurve)>, TransformError> {
    bank.filters()
        .par_iter()
        .map(|g| -> Result<(String, EulerCurve), TransformError> {
            let conv = convolve(f, g, k)?;
            let complex = build_image_complex(&conv, m, construction)?;
            let curve = euler_curve(&complex, thresholds)?;
            Ok((g.id().to_string(), curve))
        })
        .collect()
}

/// Inputs for simplicial convolution: a complex (its filtration values are
/// ignored), a generalized adjacency matrix A, and per-vertex features X.
#[derive(Debug, Clone)]
pub struct SimplicialConvInput {
    complex: FilteredComplex,
    adjacency: Matrix,
    features: Matrix,
}

impl SimplicialConvInput {
    pub fn new(
        complex: FilteredComplex,
        adjacency: Matrix,
        features: Matrix,
    ) -> Result<Self, TransformError> {
        let n = complex.vertex_count();
        if adjacency.rows() != n || adjacency.cols() != n || features.rows() != n {
            return Err(TransformError::SizeMismatch { n });
        }
        Ok(Self {
            complex,
            adjacency,
            features,
        })
    }

    pub fn complex(&self) -> &FilteredComplex {
        &self.complex
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }
}

/// Graph convolution of the vertex features: the vertex function A X w.
pub fn simplicial_convolve(
    input: &SimplicialConvInput,
    w: &[f64],
) -> Result<Vec<f64>, TransformError> {
    if w.len() != input.features.cols() {
        return Err(TransformError::DimMismatch {
            expected: input.features.cols(),
            got: w.len(),
        });
    }
    let xw = input.features.matvec(w);
    Ok(input.adjacency.matvec(&xw))
}

/// Simplicial convolutional persistence: for each unit weight vector,
/// convolve the features, extend over the complex by the lower-star rule,
/// and reduce.
pub fn cpt_simplicial(
    input: &SimplicialConvInput,
    weights: &[Vec<f64>],
) -> Result<Vec<(String, PersistenceDiagram)>, TransformError> {
    for w in weights {
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(TransformError::NotUnitNorm(norm));
        }
    }
    weights
        .par_iter()
        .enumerate()
        .map(
            |(i, w)| -> Result<(String, PersistenceDiagram), TransformError> {
                let vertex_values = simplicial_convolve(input, w)?;
                let refiltered = input.complex.with_vertex_values(&vertex_values)?;
                let diagram = reduce_and_pair(&refiltered)?;
                Ok((format!("w{i}"), diagram))
            },
        )
        .collect()
}

/// Unit weight vectors for the simplicial transform, sampled the same way
/// as [`random_filters`]: i.i.d. Gaussians normalized onto the sphere.
pub fn random_weights(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| sample_unit_vector(&mut rng, dim))
        .collect()
}

fn sample_unit_vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// `count` filters drawn i.i.d. standard normal and L2-normalized — uniform
/// on the unit sphere of the flattened filter space. Reproducible from the
/// seed.
pub fn random_filters(
    shape: &GridShape,
    channels: usize,
    count: usize,
    seed: u64,
) -> Result<FilterBank, TransformError> {
    if count == 0 {
        return Err(TransformError::BadCount);
    }
    if channels == 0 {
        return Err(TransformError::Grid(GridError::BadShape));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = shape.len() * channels;
    let filters = (0..count)
        .map(|i| {
            let values = sample_unit_vector(&mut rng, len);
            ConvFilter::new(format!("random-{i:02}"), shape.clone(), channels, values)
        })
        .collect::<Result<Vec<_>, _>>()?;
    FilterBank::new(
        filters,
        BankProvenance::Random { seed },
        Normalization::L2Unit,
    )
}

/// The trivial 1x1 filter plus the three classic 3x3 kernels: sharpen, box
/// blur, Gaussian blur. Kernel values fixed here, bit-exact.
pub fn standard_filters() -> FilterBank {
    let one = GridShape::new(vec![1, 1]).expect("static shape");
    let three = GridShape::new(vec![3, 3]).expect("static shape");
    #[rustfmt::skip]
    let sharpen = vec![
         0.0, -1.0,  0.0,
        -1.0,  5.0, -1.0,
         0.0, -1.0,  0.0,
    ];
    let blur = vec![1.0 / 9.0; 9];
    #[rustfmt::skip]
    let gaussian = vec![
        1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0,
        2.0 / 16.0, 4.0 / 16.0, 2.0 / 16.0,
        1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0,
    ];
    let filters = vec![
        ConvFilter::new("trivial", one, 1, vec![1.0]).expect("static filter"),
        ConvFilter::new("sharpen", three.clone(), 1, sharpen).expect("static filter"),
        ConvFilter::new("blur", three.clone(), 1, blur).expect("static filter"),
        ConvFilter::new("gaussian", three, 1, gaussian).expect("static filter"),
    ];
    FilterBank {
        filters,
        provenance: BankProvenance::Standard,
        normalization: Normalization::Raw,
    }
}

/// PCA of the unit-stride patch space of a training set: eigenvalues
/// (non-increasing) and the matching orthonormal components of the centered
/// patch covariance.
pub fn patch_pca(
    images: &[Image],
    shape: &GridShape,
    n_components: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), TransformError> {
    let channels = images.first().map_or(1, Image::channels);
    let dim = shape.len() * channels;
    if n_components > dim {
        return Err(TransformError::TooManyComponents {
            requested: n_components,
            available: dim,
        });
    }
    let mut patches: Vec<Vec<f64>> = Vec::new();
    for image in images {
        patches.extend(extract_patches(image, shape, &Stride::unit(shape.dim()))?);
    }
    let need = 10 * shape.len();
    if patches.len() < need {
        return Err(TransformError::InsufficientPatches {
            have: patches.len(),
            need,
        });
    }

    let count = patches.len() as f64;
    let mut mean = vec![0.0; dim];
    for patch in &patches {
        for (m, v) in mean.iter_mut().zip(patch) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);

    let mut cov = Matrix::zeros(dim, dim);
    for patch in &patches {
        let centered: Vec<f64> = patch.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..dim {
            for j in i..dim {
                let add = centered[i] * centered[j];
                cov.set(i, j, cov.get(i, j) + add);
                if i != j {
                    cov.set(j, i, cov.get(j, i) + add);
                }
            }
        }
    }
    for i in 0..dim {
        for j in 0..dim {
            cov.set(i, j, cov.get(i, j) / (count - 1.0));
        }
    }

    let (eigenvalues, vectors) = jacobi_symmetric_eigen(&cov, 1e-12, 200);
    let rank_tol = 1e-12 * eigenvalues.first().copied().unwrap_or(0.0).max(1.0);
    let rank = eigenvalues.iter().filter(|&&l| l > rank_tol).count();
    let keep = if rank < n_components {
        log::warn!("patch covariance has rank {rank}, reducing components from {n_components}");
        rank
    } else {
        n_components
    };
    let components = (0..keep)
        .map(|c| (0..dim).map(|i| vectors.get(i, c)).collect())
        .collect();
    Ok((eigenvalues, components))
}

/// Eigenfilter bank: top principal components of the training patches, mixed
/// by `count` random normalized linear combinations.
pub fn eigenfilters(
    images: &[Image],
    shape: &GridShape,
    n_components: usize,
    count: usize,
    seed: u64,
) -> Result<FilterBank, TransformError> {
    if count == 0 {
        return Err(TransformError::BadCount);
    }
    let channels = images.first().map_or(1, Image::channels);
    let (_, components) = patch_pca(images, shape, n_components)?;
    if components.is_empty() {
        return Err(TransformError::DegeneratePatches);
    }
    let dim = shape.len() * channels;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filters = (0..count)
        .map(|i| {
            let values = loop {
                let coeffs: Vec<f64> = (0..components.len())
                    .map(|_| rng.sample(StandardNormal))
                    .collect();
                let mut v = vec![0.0; dim];
                for (c, comp) in coeffs.iter().zip(&components) {
                    for (out, x) in v.iter_mut().zip(comp) {
                        *out += c * x;
                    }
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    v.iter_mut().for_each(|x| *x /= norm);
                    break v;
                }
            };
            ConvFilter::new(format!("eigen-{i:02}"), shape.clone(), channels, values)
        })
        .collect::<Result<Vec<_>, _>>()?;
    FilterBank::new(
        filters,
        BankProvenance::Eigen {
            seed,
            components: components.len(),
        },
        Normalization::L2Unit,
    )
}

/// The patch embedding of the placement region: point `r` of R carries the
/// values of `f` on the translate `B + (k ⊙ r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub region: GridShape,
    pub points: Vec<Vec<f64>>,
}

pub fn embedding_iota(f: &Image, b: &GridShape, k: &Stride) -> Result<Embedding, TransformError> {
    let region = region_shape(f.shape(), b, k)?;
    let points = extract_patches(f, b, k)?;
    Ok(Embedding { region, points })
}

const GENERAL_POSITION_LIMIT: usize = 15;

/// True when no hyperplane contains more points than the ambient dimension
/// allows: every subset of M+1 points (M the ambient dimension) must be
/// affinely independent. Brute force over subsets; intended as a test
/// diagnostic, never a runtime gate.
pub fn general_position_check(points: &[Vec<f64>]) -> Result<bool, TransformError> {
    if points.len() > GENERAL_POSITION_LIMIT {
        return Err(TransformError::TooManyPoints {
            got: points.len(),
            limit: GENERAL_POSITION_LIMIT,
        });
    }
    let Some(first) = points.first() else {
        return Ok(true);
    };
    let ambient = first.len();
    if points.iter().any(|p| p.len() != ambient) {
        return Err(TransformError::RaggedPoints);
    }
    let mut subset = Vec::with_capacity(ambient + 1);
    Ok(all_subsets_independent(points, ambient + 1, 0, &mut subset))
}

fn all_subsets_independent(
    points: &[Vec<f64>],
    size: usize,
    start: usize,
    subset: &mut Vec<usize>,
) -> bool {
    if subset.len() == size {
        return affinely_independent(points, subset);
    }
    if points.len() - start < size - subset.len() {
        return true; // not enough points left to complete a subset
    }
    for i in start..points.len() {
        subset.push(i);
        if !all_subsets_independent(points, size, i + 1, subset) {
            subset.pop();
            return false;
        }
        subset.pop();
    }
    true
}

/// Rank of the difference vectors must equal the subset size minus one.
fn affinely_independent(points: &[Vec<f64>], subset: &[usize]) -> bool {
    const PIVOT_TOL: f64 = 1e-9;
    let base = &points[subset[0]];
    let mut rows: Vec<Vec<f64>> = subset[1..]
        .iter()
        .map(|&i| points[i].iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let (nrows, ncols) = (rows.len(), base.len());
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) =
            (rank..nrows).max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))
        else {
            break;
        };
        if rows[pivot][col].abs() <= PIVOT_TOL {
            continue;
        }
        rows.swap(rank, pivot);
        let (upper, lower) = rows.split_at_mut(rank + 1);
        let pivot_row = &upper[rank];
        for row in lower {
            let factor = row[col] / pivot_row[col];
            for (value, pv) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *value -= factor * pv;
            }
        }
        rank += 1;
        if rank == nrows {
            break;
        }
    }
    rank == nrows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::simplicial_lower_star;
    use crate::metrics::bottleneck;
    use crate::persistence::betti_bruteforce;

    fn random_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Image {
        let shape = GridShape::new(vec![rows, cols]).unwrap();
        let values = (0..rows * cols)
            .map(|_| rng.random_range(0.0..1.0))
            .collect();
        Image::single_channel(shape, values).unwrap()
    }

    #[test]
    fn trivial_filter_recovers_ordinary_diagram() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for construction in [Construction::Lower, Construction::Upper] {
            let f = random_image(&mut rng, 5, 5);
            let bank = FilterBank::trivial(1);
            let cpt = cpt_image(&f, &bank, &Stride::unit(2), 2, construction).unwrap();
            let ordinary =
                reduce_and_pair(&build_image_complex(&f, 2, construction).unwrap()).unwrap();
            assert_eq!(cpt.entries.len(), 1);
            assert_eq!(cpt.entries[0].1, ordinary);
        }
    }

    #[test]
    fn motif_filter_finds_three_copies_under_superlevel() {
        // Three separated copies of a 2x2 block of ones in a 10x10 image.
        let mut values = vec![0.0; 100];
        for &(r, c) in &[(1usize, 1usize), (1, 6), (6, 3)] {
            for dr in 0..2 {
                for dc in 0..2 {
                    values[(r + dr) * 10 + (c + dc)] = 1.0;
                }
            }
        }
        let f = Image::single_channel(GridShape::new(vec![10, 10]).unwrap(), values).unwrap();
        let motif = ConvFilter::new(
            "motif",
            GridShape::new(vec![2, 2]).unwrap(),
            1,
            vec![1.0; 4],
        )
        .unwrap();
        // Superlevel sets of f * motif = sublevel sets of (-f) * motif.
        let conv = convolve(&f.negated(), &motif, &Stride::unit(2)).unwrap();
        let complex = cubical_lower_star(&conv, 2).unwrap();
        // The three exact matches are the minima at -4.
        assert_eq!(betti_bruteforce(&complex, -4.0, 0), 3);
        let diagram = reduce_and_pair(&complex).unwrap();
        let born_at_peak = diagram.points_of_dim(0).filter(|p| p.birth == -4.0).count();
        assert_eq!(born_at_peak, 3);
    }

    #[test]
    fn distinct_images_are_separated_by_some_random_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bank = random_filters(&GridShape::new(vec![3, 3]).unwrap(), 1, 25, 99).unwrap();
        for _ in 0..3 {
            let f1 = random_image(&mut rng, 6, 6);
            let f2 = random_image(&mut rng, 6, 6);
            let c1 = cpt_image(&f1, &bank, &Stride::unit(2), 2, Construction::Lower).unwrap();
            let c2 = cpt_image(&f2, &bank, &Stride::unit(2), 2, Construction::Lower).unwrap();
            let separated = c1
                .entries
                .iter()
                .zip(&c2.entries)
                .any(|((_, a), (_, b))| bottleneck(a, b) > 1e-9);
            assert!(separated);
        }
    }

    #[test]
    fn cect_trivial_filter_matches_ordinary_curve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_image(&mut rng, 4, 4);
        let thresholds: Vec<f64> = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        let curves = cect_image(
            &f,
            &FilterBank::trivial(1),
            &Stride::unit(2),
            2,
            &thresholds,
            Construction::Upper,
        )
        .unwrap();
        let ordinary = euler_curve(&cubical_upper_star(&f, 2).unwrap(), &thresholds).unwrap();
        assert_eq!(curves[0].1, ordinary);
    }

    #[test]
    fn cect_values_match_betti_alternating_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_image(&mut rng, 5, 5);
        let bank = random_filters(&GridShape::new(vec![2, 2]).unwrap(), 1, 3, 7).unwrap();
        let thresholds: Vec<f64> = vec![-1.0, -0.5, 0.0, 0.5, 1.0];
        let curves = cect_image(
            &f,
            &bank,
            &Stride::unit(2),
            2,
            &thresholds,
            Construction::Lower,
        )
        .unwrap();
        for (g, (_, curve)) in bank.filters().iter().zip(&curves) {
            let conv = convolve(&f, g, &Stride::unit(2)).unwrap();
            let complex = cubical_lower_star(&conv, 2).unwrap();
            for (i, &alpha) in thresholds.iter().enumerate() {
                let chi: i64 = (0..=2)
                    .map(|q| {
                        let b = betti_bruteforce(&complex, alpha, q) as i64;
                        if q % 2 == 0 {
                            b
                        } else {
                            -b
                        }
                    })
                    .sum();
                assert_eq!(curve.values()[i], chi);
            }
        }
    }

    #[test]
    fn cect_zero_filter_gives_constant_curve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_image(&mut rng, 4, 4);
        let zero =
            ConvFilter::new("zero", GridShape::new(vec![2, 2]).unwrap(), 1, vec![0.0; 4]).unwrap();
        let bank =
            FilterBank::new(vec![zero], BankProvenance::Standard, Normalization::Raw).unwrap();
        let thresholds = vec![0.0, 1.0, 2.0];
        let curves = cect_image(
            &f,
            &bank,
            &Stride::unit(2),
            2,
            &thresholds,
            Construction::Lower,
        )
        .unwrap();
        // All-zero convolved image: the full complex is present from 0 on,
        // and a full 3x3 grid complex is contractible.
        assert_eq!(curves[0].1.values(), &[1, 1, 1]);
    }

    #[test]
    fn simplicial_convolve_examples() {
        let k = simplicial_lower_star(&[vec![0, 1]], &[0.0, 0.0]).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, 5.0], vec![2.0, 6.0]]);
        let input = SimplicialConvInput::new(k.clone(), Matrix::identity(2), x.clone()).unwrap();
        assert_eq!(
            simplicial_convolve(&input, &[1.0, 0.0]).unwrap(),
            vec![1.0, 2.0]
        );

        let ones = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let input2 =
            SimplicialConvInput::new(k.clone(), ones, Matrix::from_rows(&[vec![1.0], vec![2.0]]))
                .unwrap();
        assert_eq!(
            simplicial_convolve(&input2, &[1.0]).unwrap(),
            vec![3.0, 3.0]
        );

        let input3 = SimplicialConvInput::new(k, Matrix::identity(2), x).unwrap();
        assert_eq!(
            simplicial_convolve(&input3, &[0.0, 0.0]).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn cpt_simplicial_identity_weight_is_lower_star_of_column() {
        let k = simplicial_lower_star(&[vec![0, 1], vec![1, 2]], &[0.0, 0.0, 0.0]).unwrap();
        let x = Matrix::from_rows(&[vec![0.3], vec![0.1], vec![0.9]]);
        let input = SimplicialConvInput::new(k.clone(), Matrix::identity(3), x).unwrap();
        let out = cpt_simplicial(&input, &[vec![1.0]]).unwrap();
        let expected = reduce_and_pair(&k.with_vertex_values(&[0.3, 0.1, 0.9]).unwrap()).unwrap();
        assert_eq!(out[0].1, expected);
    }

    #[test]
    fn cpt_simplicial_negated_weight_matches_negated_function() {
        let k = simplicial_lower_star(&[vec![0, 1], vec![1, 2], vec![0, 2]], &[0.0; 3]).unwrap();
        let x = Matrix::from_rows(&[vec![0.5, 0.2], vec![0.1, 0.8], vec![0.9, 0.4]]);
        let a = Matrix::from_rows(&[
            vec![1.0, 1.0, 0.0],
            vec![1.0, 1.0, 1.0],
            vec![0.0, 1.0, 1.0],
        ]);
        let input = SimplicialConvInput::new(k.clone(), a, x).unwrap();
        let w = {
            let raw = [0.6f64, 0.8];
            raw.to_vec()
        };
        let neg: Vec<f64> = w.iter().map(|x| -x).collect();
        let plus = cpt_simplicial(&input, std::slice::from_ref(&w)).unwrap();
        let minus = cpt_simplicial(&input, &[neg]).unwrap();
        let negated_vals: Vec<f64> = simplicial_convolve(&input, &w)
            .unwrap()
            .iter()
            .map(|v| -v)
            .collect();
        let expected = reduce_and_pair(&k.with_vertex_values(&negated_vals).unwrap()).unwrap();
        assert_eq!(minus[0].1, expected);
        assert_ne!(plus[0].1, minus[0].1);
    }

    #[test]
    fn cpt_simplicial_rejects_unnormalized_weights() {
        let k = simplicial_lower_star(&[vec![0, 1]], &[0.0, 0.0]).unwrap();
        let input = SimplicialConvInput::new(
            k,
            Matrix::identity(2),
            Matrix::from_rows(&[vec![1.0], vec![2.0]]),
        )
        .unwrap();
        assert!(matches!(
            cpt_simplicial(&input, &[vec![2.0]]),
            Err(TransformError::NotUnitNorm(_))
        ));
    }

    #[test]
    fn random_filters_reject_degenerate_requests() {
        let shape = GridShape::new(vec![3, 3]).unwrap();
        assert!(matches!(
            random_filters(&shape, 1, 0, 1),
            Err(TransformError::BadCount)
        ));
        assert!(random_filters(&shape, 0, 5, 1).is_err());
    }

    #[test]
    fn random_filters_are_normalized_and_reproducible() {
        let shape = GridShape::new(vec![3, 3]).unwrap();
        let bank = random_filters(&shape, 1, 25, 42).unwrap();
        assert_eq!(bank.len(), 25);
        for f in bank.filters() {
            assert!((f.l2_norm() - 1.0).abs() <= 1e-12);
        }
        let again = random_filters(&shape, 1, 25, 42).unwrap();
        assert_eq!(bank, again);
        let different = random_filters(&shape, 1, 25, 43).unwrap();
        assert_ne!(bank, different);
    }

    #[test]
    fn random_filter_entries_average_to_zero() {
        let shape = GridShape::new(vec![3, 3]).unwrap();
        let bank = random_filters(&shape, 1, 10_000, 123).unwrap();
        let (mut sum, mut count) = (0.0, 0);
        for f in bank.filters() {
            sum += f.values().iter().sum::<f64>();
            count += f.values().len();
        }
        let mean = sum / count as f64;
        // 3 sigma for coordinates of uniform sphere points: 1/(9 sqrt(10^4)).
        assert!(mean.abs() < 3.4e-3, "mean {mean}");
    }

    #[test]
    fn standard_filters_preserve_constants() {
        let bank = standard_filters();
        assert_eq!(bank.len(), 4);
        let flat =
            Image::single_channel(GridShape::new(vec![5, 5]).unwrap(), vec![0.7; 25]).unwrap();
        for name in ["sharpen", "blur"] {
            let g = bank.filters().iter().find(|f| f.id() == name).unwrap();
            let out = convolve(&flat, g, &Stride::unit(2)).unwrap();
            for &v in out.values() {
                assert!((v - 0.7).abs() < 1e-12, "{name} broke a constant image");
            }
        }
        let gaussian = bank
            .filters()
            .iter()
            .find(|f| f.id() == "gaussian")
            .unwrap();
        assert!((gaussian.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenfilters_on_horizontal_stripes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let shape = GridShape::new(vec![3, 3]).unwrap();
        let images: Vec<Image> = (0..10)
            .map(|_| {
                let rows: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
                let values: Vec<f64> = (0..36).map(|i| rows[i / 6]).collect();
                Image::single_channel(GridShape::new(vec![6, 6]).unwrap(), values).unwrap()
            })
            .collect();
        let (eigenvalues, components) = patch_pca(&images, &shape, 3).unwrap();
        for w in eigenvalues.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
        // Components of row-constant patches are row-constant (sign aside).
        let top = &components[0];
        for r in 0..3 {
            for c in 1..3 {
                assert!((top[3 * r + c] - top[3 * r]).abs() < 1e-8);
            }
        }
        // Orthonormality of the returned components.
        for a in 0..components.len() {
            for b in 0..components.len() {
                let dot: f64 = components[a]
                    .iter()
                    .zip(&components[b])
                    .map(|(x, y)| x * y)
                    .sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }

        let bank = eigenfilters(&images, &shape, 3, 5, 11).unwrap();
        assert_eq!(bank.len(), 5);
        for f in bank.filters() {
            assert!((f.l2_norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn eigenfilters_reduce_components_on_degenerate_data() {
        // Row-constant 3x3 patches span a rank-3 space; asking for 5
        // components falls back to the available rank.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let images: Vec<Image> = (0..10)
            .map(|_| {
                let rows: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
                let values: Vec<f64> = (0..36).map(|i| rows[i / 6]).collect();
                Image::single_channel(GridShape::new(vec![6, 6]).unwrap(), values).unwrap()
            })
            .collect();
        let bank = eigenfilters(&images, &GridShape::new(vec![3, 3]).unwrap(), 5, 4, 13).unwrap();
        assert_eq!(bank.len(), 4);
        assert!(matches!(
            bank.provenance(),
            BankProvenance::Eigen { components: 3, .. }
        ));
    }

    #[test]
    fn random_weights_are_unit_and_reproducible() {
        let w = random_weights(4, 6, 55);
        assert_eq!(w.len(), 6);
        for v in &w {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
        }
        assert_eq!(w, random_weights(4, 6, 55));
    }

    #[test]
    fn eigenfilters_reject_constant_training_data() {
        let flat: Vec<Image> = (0..10)
            .map(|_| {
                Image::single_channel(GridShape::new(vec![6, 6]).unwrap(), vec![0.5; 36]).unwrap()
            })
            .collect();
        assert!(matches!(
            eigenfilters(&flat, &GridShape::new(vec![3, 3]).unwrap(), 3, 5, 0),
            Err(TransformError::DegeneratePatches)
        ));
    }

    #[test]
    fn eigenfilters_need_enough_patches() {
        let tiny =
            Image::single_channel(GridShape::new(vec![3, 3]).unwrap(), vec![0.0; 9]).unwrap();
        let err = eigenfilters(&[tiny], &GridShape::new(vec![3, 3]).unwrap(), 3, 5, 0).unwrap_err();
        assert!(matches!(err, TransformError::InsufficientPatches { .. }));
    }

    #[test]
    fn embedding_matches_patches_and_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_image(&mut rng, 4, 4);
        let b = GridShape::new(vec![2, 2]).unwrap();
        let k = Stride::new(vec![2, 2]).unwrap();
        let emb = embedding_iota(&f, &b, &k).unwrap();
        assert_eq!(emb.region.extents(), &[2, 2]);
        assert_eq!(emb.points, extract_patches(&f, &b, &k).unwrap());
    }

    #[test]
    fn general_position_examples() {
        let good = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(general_position_check(&good).unwrap());
        let collinear = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(!general_position_check(&collinear).unwrap());
        let too_many = vec![vec![0.0]; 16];
        assert!(matches!(
            general_position_check(&too_many),
            Err(TransformError::TooManyPoints { .. })
        ));
    }

    #[test]
    fn random_points_are_generically_in_general_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut hits = 0;
        for _ in 0..100 {
            let points: Vec<Vec<f64>> = (0..8)
                .map(|_| {
                    (0..5)
                        .map(|_| rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect();
            if general_position_check(&points).unwrap() {
                hits += 1;
            }
        }
        assert!(hits >= 99, "only {hits}/100 in general position");
    }
}
