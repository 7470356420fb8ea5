//! Desk-scale classification protocol: seeded train/test splits, a
//! 3-nearest-neighbor classifier, and an experiment runner that maps images
//! through filters -> persistence -> feature vectors and reports accuracy
//! over repeated seeds.

use crate::grid::{GridShape, Image, Stride};
use crate::transforms::{
    cpt_image, eigenfilters, random_filters, standard_filters, Construction, FilterBank,
    TransformError,
};
use crate::vectorize::{
    combine, fit_image_spec, persistence_image, total_persistence, CombineMode, FeatureVector,
    PersistenceImageSpec, VectorizeError,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("need at least 2 samples to split, got {0}")]
    TooFewSamples(usize),
    #[error("test fraction must be strictly between 0 and 1")]
    BadFraction,
    #[error("training set is empty")]
    EmptyTrain,
    #[error("k must be between 1 and the training-set size {train}")]
    BadK { train: usize },
    #[error("feature vectors have unequal lengths")]
    LengthMismatch,
    #[error("dataset needs at least 2 declared classes")]
    NoClasses,
    #[error("sample label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Vectorize(#[from] VectorizeError),
    #[error("image shapes must agree across the dataset")]
    MixedShapes,
}

/// Labeled feature vectors with class names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<(FeatureVector, usize)>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        samples: Vec<(FeatureVector, usize)>,
        class_names: Vec<String>,
    ) -> Result<Self, LearnError> {
        if class_names.len() < 2 {
            return Err(LearnError::NoClasses);
        }
        if let Some(first) = samples.first() {
            let len = first.0.values.len();
            if samples.iter().any(|(v, _)| v.values.len() != len) {
                return Err(LearnError::LengthMismatch);
            }
        }
        for (_, label) in &samples {
            if *label >= class_names.len() {
                return Err(LearnError::LabelOutOfRange {
                    label: *label,
                    classes: class_names.len(),
                });
            }
        }
        Ok(Self {
            samples,
            class_names,
        })
    }

    pub fn samples(&self) -> &[(FeatureVector, usize)] {
        &self.samples
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Seeded shuffle split (no stratification). The test side gets
/// round(n x fraction) samples, clamped so both sides are nonempty.
pub fn split(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), LearnError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(LearnError::BadFraction);
    }
    let n = dataset.len();
    if n < 2 {
        return Err(LearnError::TooFewSamples(n));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let test_size = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let (test_idx, train_idx) = indices.split_at(test_size);
    let pick = |idx: &[usize]| {
        Dataset::new(
            idx.iter().map(|&i| dataset.samples[i].clone()).collect(),
            dataset.class_names.clone(),
        )
    };
    Ok((pick(train_idx)?, pick(test_idx)?))
}

/// 3-NN style prediction: Euclidean metric, majority vote among the k
/// nearest, ties broken by the smaller summed distance and then the smaller
/// class id.
pub fn knn_predict(train: &Dataset, query: &[f64], k: usize) -> Result<usize, LearnError> {
    if train.is_empty() {
        return Err(LearnError::EmptyTrain);
    }
    if k == 0 || k > train.len() {
        return Err(LearnError::BadK { train: train.len() });
    }
    if train.samples[0].0.values.len() != query.len() {
        return Err(LearnError::LengthMismatch);
    }
    let mut neighbors: Vec<(f64, usize, usize)> = train
        .samples
        .iter()
        .enumerate()
        .map(|(i, (v, label))| {
            let dist = v
                .values
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            (dist, i, *label)
        })
        .collect();
    neighbors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    neighbors.truncate(k);

    let classes = train.class_names.len();
    let mut votes = vec![0usize; classes];
    let mut summed = vec![0.0f64; classes];
    for &(dist, _, label) in &neighbors {
        votes[label] += 1;
        summed[label] += dist;
    }
    let best = (0..classes)
        .filter(|&c| votes[c] > 0)
        .min_by(|&a, &b| {
            votes[b]
                .cmp(&votes[a])
                .then(summed[a].total_cmp(&summed[b]))
                .then(a.cmp(&b))
        })
        .expect("k >= 1 neighbor voted");
    Ok(best)
}

/// Which filter bank the experiment uses per seed.
#[derive(Debug, Clone, PartialEq)]
pub enum BankSpec {
    Trivial,
    Standard,
    Random {
        count: usize,
        shape: Vec<usize>,
    },
    Eigen {
        count: usize,
        components: usize,
        shape: Vec<usize>,
    },
}

/// How diagrams become per-filter blocks.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSpec {
    TotalPersistence,
    PersistenceImages { resolution: (usize, usize) },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub construction: Construction,
    pub bank: BankSpec,
    pub vectorization: FeatureSpec,
    pub combine: CombineMode,
    pub test_fraction: f64,
    pub seeds: Vec<u64>,
    pub stride: Vec<usize>,
    pub max_dim: usize,
    pub knn_k: usize,
}

impl ExperimentConfig {
    /// Flat key/value echo for reports.
    pub fn echo(&self) -> Vec<(String, String)> {
        vec![
            (
                "construction".into(),
                match self.construction {
                    Construction::Lower => "lower".into(),
                    Construction::Upper => "upper".into(),
                },
            ),
            ("bank".into(), format!("{:?}", self.bank)),
            ("vectorization".into(), format!("{:?}", self.vectorization)),
            (
                "combine".into(),
                match self.combine {
                    CombineMode::Concat => "concat".into(),
                    CombineMode::Average => "average".into(),
                },
            ),
            ("test_fraction".into(), self.test_fraction.to_string()),
            (
                "seed_list".into(),
                self.seeds
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            (
                "stride".into(),
                self.stride
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("max_dim".into(), self.max_dim.to_string()),
            ("knn_k".into(), self.knn_k.to_string()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub per_seed: Vec<(u64, f64)>,
    pub mean: f64,
    pub std_dev: f64,
    pub config_echo: Vec<(String, String)>,
}

fn mix_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64-style scramble so the split and the bank draw from
    // unrelated streams of the same per-seed master.
    let mut z = seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One full pipeline pass per seed: split, build the bank (eigenfilters see
/// only training images), transform every image, fit vectorization bounds on
/// the training split, classify the test split. Seeds run concurrently;
/// identical configs give bit-identical reports.
pub fn run_experiment(
    images: &[(Image, usize)],
    class_names: &[String],
    config: &ExperimentConfig,
) -> Result<ExperimentReport, LearnError> {
    if class_names.len() < 2 {
        return Err(LearnError::NoClasses);
    }
    if images.len() < 2 {
        return Err(LearnError::TooFewSamples(images.len()));
    }
    let shape = images[0].0.shape().clone();
    if images.iter().any(|(f, _)| f.shape() != &shape) {
        return Err(LearnError::MixedShapes);
    }

    let outcomes: Vec<(u64, Result<f64, LearnError>)> = config
        .seeds
        .par_iter()
        .map(|&seed| (seed, run_single_seed(images, class_names, config, seed)))
        .collect();
    // On failure, flush whatever completed before propagating the error.
    if outcomes.iter().any(|(_, r)| r.is_err()) {
        for (seed, outcome) in &outcomes {
            if let Ok(acc) = outcome {
                log::warn!("partial result before failure: seed {seed} accuracy {acc:.4}");
            }
        }
        let first_error = outcomes
            .into_iter()
            .find_map(|(_, r)| r.err())
            .expect("an error is present");
        return Err(first_error);
    }
    let per_seed: Vec<(u64, f64)> = outcomes
        .into_iter()
        .map(|(seed, r)| (seed, r.expect("errors handled above")))
        .collect();

    let mean = per_seed.iter().map(|(_, a)| a).sum::<f64>() / per_seed.len() as f64;
    let variance = per_seed
        .iter()
        .map(|(_, a)| (a - mean) * (a - mean))
        .sum::<f64>()
        / per_seed.len() as f64;
    Ok(ExperimentReport {
        per_seed,
        mean,
        std_dev: variance.sqrt(),
        config_echo: config.echo(),
    })
}

fn run_single_seed(
    images: &[(Image, usize)],
    class_names: &[String],
    config: &ExperimentConfig,
    seed: u64,
) -> Result<f64, LearnError> {
    let n = images.len();
    // Split indices before building the bank: eigenfilters and raster
    // bounds must only see training data.
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1));
    indices.shuffle(&mut rng);
    let test_size = ((n as f64 * config.test_fraction).round() as usize).clamp(1, n - 1);
    let (test_idx, train_idx) = indices.split_at(test_size);

    let channels = images[0].0.channels();
    let bank = match &config.bank {
        BankSpec::Trivial => FilterBank::trivial(channels),
        BankSpec::Standard => standard_filters(),
        BankSpec::Random { count, shape } => {
            let shape = GridShape::new(shape.clone()).map_err(TransformError::Grid)?;
            random_filters(&shape, channels, *count, seed)?
        }
        BankSpec::Eigen {
            count,
            components,
            shape,
        } => {
            let shape = GridShape::new(shape.clone()).map_err(TransformError::Grid)?;
            let train_images: Vec<Image> = train_idx.iter().map(|&i| images[i].0.clone()).collect();
            eigenfilters(&train_images, &shape, *components, *count, seed)?
        }
    };

    let stride = Stride::new(config.stride.clone()).map_err(TransformError::Grid)?;
    let transforms: Vec<_> = images
        .par_iter()
        .map(|(f, _)| cpt_image(f, &bank, &stride, config.max_dim, config.construction))
        .collect::<Result<Vec<_>, _>>()?;

    let dims = config.max_dim + 1;
    let image_specs: Option<Vec<PersistenceImageSpec>> = match &config.vectorization {
        FeatureSpec::TotalPersistence => None,
        FeatureSpec::PersistenceImages { resolution } => {
            let train_diagrams: Vec<_> = train_idx
                .iter()
                .flat_map(|&i| transforms[i].entries.iter().map(|(_, d)| d))
                .collect();
            Some(
                (0..dims)
                    .map(|q| fit_image_spec(&train_diagrams, q, *resolution))
                    .collect::<Result<Vec<_>, _>>()?,
            )
        }
    };

    let features: Vec<FeatureVector> = transforms
        .iter()
        .map(|cpt| -> Result<FeatureVector, LearnError> {
            let blocks: Vec<(String, Vec<f64>)> = cpt
                .entries
                .iter()
                .map(|(id, diagram)| -> Result<(String, Vec<f64>), LearnError> {
                    let mut block = Vec::new();
                    for q in 0..dims {
                        match (&config.vectorization, &image_specs) {
                            (FeatureSpec::TotalPersistence, _) => {
                                block.push(total_persistence(diagram, q));
                            }
                            (FeatureSpec::PersistenceImages { .. }, Some(specs)) => {
                                block.extend(persistence_image(diagram, q, &specs[q])?);
                            }
                            _ => unreachable!("specs fitted for persistence images"),
                        }
                    }
                    Ok((id.clone(), block))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(combine(&blocks, dims, config.combine)?)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let train = Dataset::new(
        train_idx
            .iter()
            .map(|&i| (features[i].clone(), images[i].1))
            .collect(),
        class_names.to_vec(),
    )?;
    if train.is_empty() {
        return Err(LearnError::EmptyTrain);
    }
    let k = config.knn_k.min(train.len());
    let mut correct = 0usize;
    for &i in test_idx {
        let predicted = knn_predict(&train, &features[i].values, k)?;
        if predicted == images[i].1 {
            correct += 1;
        }
    }
    Ok(correct as f64 / test_idx.len() as f64)
}
