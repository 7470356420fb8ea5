//! Convolutional persistence for grid images and vertex-labeled simplicial
//! complexes.
//!
//! The pipeline implemented here convolves data with a bank of filters,
//! builds a filtered (cubical or simplicial) complex per filter, computes
//! sublevel-set persistent homology over Z/2, and compares or vectorizes the
//! resulting diagrams. The pieces are usable on their own:
//!
//! * [`grid`] — rectangular lattice images and the strided, multi-channel
//!   convolution operator.
//! * [`complex`] — filtered cubical complexes from images (vertex- and
//!   voxel-based constructions) and simplicial complexes from simplex lists.
//! * [`persistence`] — boundary-matrix reduction with clearing, Euler
//!   characteristic curves, and a brute-force Betti oracle.
//! * [`metrics`] — exact bottleneck and p-Wasserstein distances with diagonal
//!   pairing, a Sinkhorn approximation, and matrix operator norms.
//! * [`transforms`] — the convolutional persistence transform (CPT), its
//!   Euler-curve variant (CECT), filter-bank constructors, and the patch
//!   embedding.
//! * [`vectorize`] — persistence images and total persistence, combined
//!   across filters by concatenation or averaging.
//! * [`learn`] — train/test splits, a 3-NN classifier, and seeded experiment
//!   runs reporting accuracy.

pub mod complex;
pub mod grid;
pub mod learn;
pub mod linalg;
pub mod metrics;
pub mod persistence;
pub mod transforms;
pub mod vectorize;

pub use complex::{Cell, ComplexKind, FilteredComplex};
pub use grid::{ConvFilter, GridShape, Image, Stride};
pub use linalg::Matrix;
pub use metrics::GroundMetric;
pub use persistence::{DiagramPoint, EulerCurve, PersistenceDiagram};
pub use transforms::{CptResult, FilterBank};
pub use vectorize::{CombineMode, FeatureVector};
