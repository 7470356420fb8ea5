//! Flat key=value config files for the `classify` subcommand, plus dataset
//! loading from a manifest.

use crate::error::{CliError, CliResult};
use crate::io;
use convpers::grid::Image;
use convpers::learn::{BankSpec, ExperimentConfig, FeatureSpec};
use convpers::transforms::Construction;
use convpers::vectorize::CombineMode;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct ClassifyConfig {
    pub dataset_dir: PathBuf,
    pub experiment: ExperimentConfig,
}

pub fn parse_classify_config(path: &Path) -> CliResult<ClassifyConfig> {
    let text = std::fs::read_to_string(path).map_err(CliError::io_path("reading", path))?;
    let mut pairs: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::format(format!(
                "{}:{}: expected key = value",
                path.display(),
                lineno + 1
            )));
        };
        pairs.insert(key.trim().to_string(), value.trim().to_string());
    }

    let get = |key: &str| pairs.get(key).map(String::as_str);
    let dataset_dir =
        get("dataset_dir").ok_or_else(|| CliError::format("config is missing dataset_dir"))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let dataset_dir = base.join(dataset_dir);

    let construction = parse_construction(get("construction").unwrap_or("upper"))?;
    let bank_kind = get("bank").unwrap_or("random");
    // Random banks default to 25 filters, eigen banks to 5.
    let default_count = if bank_kind == "eigen" { "5" } else { "25" };
    let filter_count: usize =
        parse_field(get("filter_count").unwrap_or(default_count), "filter_count")?;
    let shape = parse_extent_list(get("filter_shape").unwrap_or("3x3"), 'x', "filter_shape")?;
    let components: usize = parse_field(get("components").unwrap_or("3"), "components")?;
    let bank = match bank_kind {
        "trivial" => BankSpec::Trivial,
        "standard" => BankSpec::Standard,
        "random" => BankSpec::Random {
            count: filter_count,
            shape,
        },
        "eigen" => BankSpec::Eigen {
            count: filter_count,
            components,
            shape,
        },
        other => {
            return Err(CliError::format(format!(
                "unknown bank {other:?} (trivial|standard|random|eigen)"
            )))
        }
    };

    let vectorization = match get("vectorization").unwrap_or("total") {
        "total" => FeatureSpec::TotalPersistence,
        "image" => {
            let r = parse_extent_list(get("resolution").unwrap_or("10x10"), 'x', "resolution")?;
            if r.len() != 2 {
                return Err(CliError::format("resolution must be RxC"));
            }
            FeatureSpec::PersistenceImages {
                resolution: (r[0], r[1]),
            }
        }
        other => {
            return Err(CliError::format(format!(
                "unknown vectorization {other:?} (total|image)"
            )))
        }
    };

    let combine = parse_combine(get("combine").unwrap_or("concat"))?;
    let test_fraction: f64 = parse_field(get("test_fraction").unwrap_or("0.2"), "test_fraction")?;
    let seeds = get("seed_list")
        .unwrap_or("1,2,3,4,5")
        .split(',')
        .map(|tok| parse_field::<u64>(tok.trim(), "seed_list"))
        .collect::<CliResult<Vec<u64>>>()?;
    let stride = parse_extent_list(get("stride").unwrap_or("1,1"), ',', "stride")?;
    let max_dim: usize = parse_field(get("max_dim").unwrap_or("2"), "max_dim")?;
    let knn_k: usize = parse_field(get("knn_k").unwrap_or("3"), "knn_k")?;

    Ok(ClassifyConfig {
        dataset_dir,
        experiment: ExperimentConfig {
            construction,
            bank,
            vectorization,
            combine,
            test_fraction,
            seeds,
            stride,
            max_dim,
            knn_k,
        },
    })
}

pub fn parse_construction(token: &str) -> CliResult<Construction> {
    match token {
        "upper" => Ok(Construction::Upper),
        "lower" => Ok(Construction::Lower),
        other => Err(CliError::format(format!(
            "unknown construction {other:?} (upper|lower)"
        ))),
    }
}

pub fn parse_combine(token: &str) -> CliResult<CombineMode> {
    match token {
        "concat" => Ok(CombineMode::Concat),
        "average" => Ok(CombineMode::Average),
        other => Err(CliError::format(format!(
            "unknown combine mode {other:?} (concat|average)"
        ))),
    }
}

pub fn parse_extent_list(token: &str, sep: char, what: &str) -> CliResult<Vec<usize>> {
    token
        .split(sep)
        .map(|part| parse_field::<usize>(part.trim(), what))
        .collect()
}

fn parse_field<T: std::str::FromStr>(token: &str, what: &str) -> CliResult<T> {
    token
        .parse::<T>()
        .map_err(|_| CliError::format(format!("bad {what}: {token:?}")))
}

/// Labeled images plus the sorted distinct class names.
pub type LoadedDataset = (Vec<(Image, usize)>, Vec<String>);

/// Load every manifest row as (image, class id); class names are the sorted
/// distinct labels.
pub fn load_dataset(dataset_dir: &Path) -> CliResult<LoadedDataset> {
    let manifest = dataset_dir.join("manifest.csv");
    let rows = io::read_manifest(&manifest)?;
    if rows.is_empty() {
        return Err(CliError::format(format!(
            "{}: empty manifest",
            manifest.display()
        )));
    }
    let mut class_names: Vec<String> = rows.iter().map(|(_, label)| label.clone()).collect();
    class_names.sort();
    class_names.dedup();
    let samples = rows
        .iter()
        .map(|(path, label)| {
            let image = io::read_image(path)?;
            let class = class_names.binary_search(label).expect("label present");
            Ok((image, class))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((samples, class_names))
}
