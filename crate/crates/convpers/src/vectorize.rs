//! Fixed-length feature vectors from persistence diagrams: persistence
//! images (Gaussian-smoothed birth/persistence rasters with closed-form cell
//! masses) and total persistence, combined across filters by concatenation
//! or averaging.

use crate::persistence::{DiagramPoint, PersistenceDiagram};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VectorizeError {
    #[error("bad persistence-image spec: {0}")]
    BadSpec(&'static str),
    #[error("blocks have unequal lengths")]
    LengthMismatch,
    #[error("no blocks to combine")]
    EmptyBlocks,
}

/// Point weighting inside a persistence image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Weight = persistence / max persistence among the rasterized points.
    #[default]
    LinearInPersistence,
}

/// Axis ranges of the raster: birth along axis 0, persistence along axis 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageBounds {
    pub birth: (f64, f64),
    pub persistence: (f64, f64),
}

/// Raster spec. `sigma`/`bounds` left as `None` are derived from the data:
/// sigma = 0.1 x the persistence-range width, bounds = the point ranges
/// expanded by 3 sigma per side.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceImageSpec {
    pub resolution: (usize, usize),
    pub sigma: Option<f64>,
    pub bounds: Option<ImageBounds>,
    pub weighting: Weighting,
}

impl Default for PersistenceImageSpec {
    fn default() -> Self {
        Self {
            resolution: (10, 10),
            sigma: None,
            bounds: None,
            weighting: Weighting::LinearInPersistence,
        }
    }
}

/// Diagram points of dimension `q` in (birth, persistence) coordinates,
/// essential deaths capped at the diagram's recorded cap.
fn capped_points(diagram: &PersistenceDiagram, q: usize) -> Vec<(f64, f64)> {
    let cap = diagram.effective_cap();
    diagram
        .points_of_dim(q)
        .map(|p: &DiagramPoint| {
            let death = if p.death.is_finite() { p.death } else { cap };
            (p.birth, death - p.birth)
        })
        .collect()
}

fn resolve_sigma(spec: &PersistenceImageSpec, pers_range_width: f64) -> f64 {
    spec.sigma.unwrap_or_else(|| {
        let width = 0.1 * pers_range_width;
        if width > 0.0 {
            width
        } else {
            0.1
        }
    })
}

fn resolve_spec(
    spec: &PersistenceImageSpec,
    points: &[(f64, f64)],
) -> Result<(f64, ImageBounds), VectorizeError> {
    if spec.resolution.0 == 0 || spec.resolution.1 == 0 {
        return Err(VectorizeError::BadSpec("resolution axes must be >= 1"));
    }
    if let Some(sigma) = spec.sigma {
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(VectorizeError::BadSpec("sigma must be positive"));
        }
    }
    if let Some(b) = spec.bounds {
        if b.birth.1 <= b.birth.0 || b.persistence.1 <= b.persistence.0 {
            return Err(VectorizeError::BadSpec("bounds must have positive width"));
        }
        let sigma = resolve_sigma(spec, b.persistence.1 - b.persistence.0);
        return Ok((sigma, b));
    }
    // Auto bounds from the data, expanded so boundary points keep most of
    // their mass inside the raster.
    let (mut b_lo, mut b_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut p_hi = 0.0f64;
    for &(birth, pers) in points {
        b_lo = b_lo.min(birth);
        b_hi = b_hi.max(birth);
        p_hi = p_hi.max(pers);
    }
    if points.is_empty() {
        (b_lo, b_hi) = (0.0, 1.0);
        p_hi = 1.0;
    }
    let sigma = resolve_sigma(spec, p_hi);
    let pad = 3.0 * sigma;
    Ok((
        sigma,
        ImageBounds {
            birth: (b_lo - pad, b_hi + pad),
            persistence: (0.0 - pad, p_hi + pad),
        },
    ))
}

/// A spec with sigma and bounds frozen from a set of diagrams (e.g. the
/// training split), so later rasterizations share one coordinate system.
pub fn fit_image_spec(
    diagrams: &[&PersistenceDiagram],
    q: usize,
    resolution: (usize, usize),
) -> Result<PersistenceImageSpec, VectorizeError> {
    let mut all_points = Vec::new();
    for d in diagrams {
        all_points.extend(capped_points(d, q));
    }
    let template = PersistenceImageSpec {
        resolution,
        ..Default::default()
    };
    let (sigma, bounds) = resolve_spec(&template, &all_points)?;
    Ok(PersistenceImageSpec {
        resolution,
        sigma: Some(sigma),
        bounds: Some(bounds),
        weighting: Weighting::LinearInPersistence,
    })
}

/// Persistence image of the dimension-`q` points: each point (b, d) maps to
/// (b, d - b), deposits an isotropic Gaussian of bandwidth sigma weighted by
/// persistence/max-persistence, and every raster cell integrates its mass in
/// closed form via error-function differences. Row-major with the birth axis
/// slowest; an empty diagram gives the zero vector.
pub fn persistence_image(
    diagram: &PersistenceDiagram,
    q: usize,
    spec: &PersistenceImageSpec,
) -> Result<Vec<f64>, VectorizeError> {
    let points = capped_points(diagram, q);
    let (sigma, bounds) = resolve_spec(spec, &points)?;
    let (rb, rp) = spec.resolution;
    let mut raster = vec![0.0; rb * rp];
    if points.is_empty() {
        return Ok(raster);
    }
    let max_pers = points.iter().map(|p| p.1).fold(0.0, f64::max);
    if max_pers <= 0.0 {
        return Ok(raster);
    }

    let birth_step = (bounds.birth.1 - bounds.birth.0) / rb as f64;
    let pers_step = (bounds.persistence.1 - bounds.persistence.0) / rp as f64;
    let denom = sigma * std::f64::consts::SQRT_2;

    for &(birth, pers) in &points {
        let Weighting::LinearInPersistence = spec.weighting;
        let weight = pers / max_pers;
        if weight == 0.0 {
            continue;
        }
        // Precompute the 1-D Gaussian masses per axis.
        let birth_mass: Vec<f64> = (0..rb)
            .map(|i| {
                let lo = bounds.birth.0 + i as f64 * birth_step;
                let hi = bounds.birth.0 + (i + 1) as f64 * birth_step;
                0.5 * (libm::erf((hi - birth) / denom) - libm::erf((lo - birth) / denom))
            })
            .collect();
        let pers_mass: Vec<f64> = (0..rp)
            .map(|j| {
                let lo = bounds.persistence.0 + j as f64 * pers_step;
                let hi = bounds.persistence.0 + (j + 1) as f64 * pers_step;
                0.5 * (libm::erf((hi - pers) / denom) - libm::erf((lo - pers) / denom))
            })
            .collect();
        for (i, bm) in birth_mass.iter().enumerate() {
            for (j, pm) in pers_mass.iter().enumerate() {
                raster[i * rp + j] += weight * bm * pm;
            }
        }
    }
    Ok(raster)
}

/// Sum of lifetimes of the dimension-`q` points; essential points contribute
/// cap - birth using the diagram's recorded cap.
pub fn total_persistence(diagram: &PersistenceDiagram, q: usize) -> f64 {
    let cap = diagram.effective_cap();
    diagram
        .points_of_dim(q)
        .map(|p| {
            if p.death.is_finite() {
                p.death - p.birth
            } else {
                cap - p.birth
            }
        })
        // fold from +0.0: the std f64 Sum identity is -0.0, which would
        // leak a "-0" into CSV output for empty dimensions.
        .fold(0.0, |acc, x| acc + x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    Concat,
    Average,
}

/// Which block belongs to which filter, and how long each block is.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLayout {
    pub filter_ids: Vec<String>,
    pub dims: usize,
    pub block_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
    pub combine_mode: CombineMode,
}

/// Combine per-filter blocks: concatenation keeps blocks in bank order,
/// averaging takes the elementwise mean.
pub fn combine(
    blocks: &[(String, Vec<f64>)],
    dims: usize,
    mode: CombineMode,
) -> Result<FeatureVector, VectorizeError> {
    let Some(first) = blocks.first() else {
        return Err(VectorizeError::EmptyBlocks);
    };
    let block_len = first.1.len();
    if blocks.iter().any(|(_, b)| b.len() != block_len) {
        return Err(VectorizeError::LengthMismatch);
    }
    let layout = FeatureLayout {
        filter_ids: blocks.iter().map(|(id, _)| id.clone()).collect(),
        dims,
        block_len,
    };
    let values = match mode {
        CombineMode::Concat => blocks.iter().flat_map(|(_, b)| b.iter().copied()).collect(),
        CombineMode::Average => {
            let mut mean = vec![0.0; block_len];
            for (_, block) in blocks {
                for (m, v) in mean.iter_mut().zip(block) {
                    *m += v;
                }
            }
            let n = blocks.len() as f64;
            mean.iter_mut().for_each(|m| *m /= n);
            mean
        }
    };
    Ok(FeatureVector {
        values,
        layout,
        combine_mode: mode,
    })
}
