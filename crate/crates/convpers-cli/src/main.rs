//! `convpers`: convolutional persistence pipelines from the command line.
//! Subcommands cover diagram computation, the CPT/CECT, diagram distances,
//! vectorization, filter-bank generation, classification experiments, SVG
//! plots, and synthetic dataset generation. The worker-pool size honors the
//! CONVPERS_THREADS environment variable.

use clap::{Args, Parser, Subcommand};
use convpers::complex::{cubical_lower_star, cubical_upper_star, FilteredComplex};
use convpers::grid::{Image, Stride};
use convpers::metrics::{self, GroundMetric};
use convpers::persistence::{
    euler_curve, reduce_and_pair_with, PersistenceDiagram, ReductionOptions,
};
use convpers::transforms::{
    cpt_image, eigenfilters, random_filters, standard_filters, Construction, FilterBank,
};
use convpers::vectorize::{
    combine, fit_image_spec, persistence_image, total_persistence, CombineMode,
    PersistenceImageSpec,
};
use convpers_cli::error::{CliError, CliResult};
use convpers_cli::{config, io, plot, synth};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "convpers",
    version,
    about = "Convolutional persistence toolbox"
)]
struct Cli {
    /// Master seed for seeded subcommands (filters, synth).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Persistence diagram of an image, explicit cell list, or simplicial input.
    Diagram(DiagramArgs),
    /// Convolutional persistence transform: one diagram CSV per filter.
    Cpt(CptArgs),
    /// Euler characteristic curve(s) of an image, optionally per filter.
    Euler(EulerArgs),
    /// Distance between two diagram CSVs.
    Distance(DistanceArgs),
    /// Feature vectors from diagram CSVs.
    Vectorize(VectorizeArgs),
    /// Emit a filter bank CSV.
    Filters(FiltersArgs),
    /// Run the classification experiment described by a config file.
    Classify(ClassifyArgs),
    /// SVG scatter plot of a diagram CSV.
    Plot(PlotArgs),
    /// Generate a synthetic labeled image dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ComplexInput {
    /// Image file (PGM P2/P5 or CSV matrix).
    image: Option<PathBuf>,
    /// Explicit filtered complex (CSV: id,dim,value,faces).
    #[arg(long, conflicts_with = "image")]
    cells: Option<PathBuf>,
    /// Simplex list (one simplex per line, whitespace-separated vertex ids).
    #[arg(long, conflicts_with_all = ["image", "cells"], requires = "vertex_values")]
    simplices: Option<PathBuf>,
    /// Vertex values CSV (vertex_id,v1..vd) for --simplices.
    #[arg(long)]
    vertex_values: Option<PathBuf>,
    /// Which value column drives the filtration for --simplices.
    #[arg(long, default_value_t = 0)]
    column: usize,
    /// Image-complex construction.
    #[arg(long, default_value = "upper")]
    construction: String,
    /// Maximum cell dimension.
    #[arg(long, default_value_t = 2)]
    max_dim: usize,
    /// Use superlevel filtration (negates input values).
    #[arg(long)]
    superlevel: bool,
}

impl ComplexInput {
    fn build(&self) -> CliResult<FilteredComplex> {
        if let Some(path) = &self.cells {
            return io::read_cells(path);
        }
        if let Some(path) = &self.simplices {
            let simplices = io::read_simplices(path)?;
            let table = io::read_vertex_values(self.vertex_values.as_ref().expect("required"))?;
            let mut values = Vec::with_capacity(table.len());
            for row in &table {
                let v = *row.get(self.column).ok_or_else(|| {
                    CliError::format(format!(
                        "vertex values have {} columns, --column {} is out of range",
                        row.len(),
                        self.column
                    ))
                })?;
                values.push(if self.superlevel { -v } else { v });
            }
            return Ok(convpers::complex::simplicial_lower_star(
                &simplices, &values,
            )?);
        }
        let path = self
            .image
            .as_ref()
            .ok_or_else(|| CliError::format("provide an image path, --cells, or --simplices"))?;
        let mut image = io::read_image(path)?;
        if self.superlevel {
            image = image.negated();
        }
        let construction = config::parse_construction(&self.construction)?;
        Ok(match construction {
            Construction::Upper => cubical_upper_star(&image, self.max_dim)?,
            Construction::Lower => cubical_lower_star(&image, self.max_dim)?,
        })
    }
}

#[derive(Args)]
struct DiagramArgs {
    #[command(flatten)]
    input: ComplexInput,
    /// Keep zero-persistence points.
    #[arg(long)]
    keep_diagonal: bool,
    /// Output CSV path (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CptArgs {
    /// Image file (PGM P2/P5 or CSV matrix).
    image: PathBuf,
    /// Filter bank CSV.
    #[arg(long)]
    bank: PathBuf,
    /// Stride per axis, comma-separated.
    #[arg(long, default_value = "1,1")]
    stride: String,
    #[arg(long, default_value_t = 2)]
    max_dim: usize,
    #[arg(long, default_value = "upper")]
    construction: String,
    #[arg(long)]
    superlevel: bool,
    /// Keep zero-persistence points.
    #[arg(long)]
    keep_diagonal: bool,
    /// Output directory for per-filter diagram CSVs.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct EulerArgs {
    #[command(flatten)]
    input: ComplexInput,
    /// Filter bank CSV; with it, one curve per filter goes to --output as a directory.
    #[arg(long)]
    bank: Option<PathBuf>,
    /// Comma-separated thresholds, or "auto" for the complex's value set.
    #[arg(long, default_value = "auto")]
    thresholds: String,
    /// Stride per axis (only with --bank).
    #[arg(long, default_value = "1,1")]
    stride: String,
    /// Output path (file, or directory with --bank; stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DistanceArgs {
    left: PathBuf,
    right: PathBuf,
    #[arg(long, default_value = "bottleneck")]
    metric: String,
    /// Order p for wasserstein/sinkhorn.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Sinkhorn regularization; defaults to 0.01 x the largest finite coordinate.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Ground metric on the plane.
    #[arg(long, default_value = "linf")]
    ground: String,
}

#[derive(Args)]
struct VectorizeArgs {
    /// Diagram CSVs forming the per-filter blocks of a single sample.
    diagrams: Vec<PathBuf>,
    /// Directory whose subdirectories each hold one sample's diagram CSVs.
    #[arg(long, conflicts_with = "diagrams")]
    samples_dir: Option<PathBuf>,
    /// Vectorization method.
    #[arg(long, default_value = "total")]
    method: String,
    /// Persistence-image resolution RxC.
    #[arg(long, default_value = "10x10")]
    resolution: String,
    /// Gaussian bandwidth (derived from the data when omitted).
    #[arg(long)]
    sigma: Option<f64>,
    /// Homology dimensions per block (0..dims-1).
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[arg(long, default_value = "concat")]
    combine: String,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct FiltersArgs {
    /// Bank kind.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value = "3x3")]
    shape: String,
    #[arg(long, default_value_t = 1)]
    channels: usize,
    /// Filter count (defaults: 25 for random banks, 5 for eigen banks).
    #[arg(long)]
    count: Option<usize>,
    /// Principal components for eigen banks.
    #[arg(long, default_value_t = 3)]
    components: usize,
    /// Training manifest (required for eigen banks).
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Flat key=value config file.
    #[arg(long)]
    config: PathBuf,
    /// JSON report path.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    diagram: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Dataset family.
    #[arg(long, default_value = "stripes")]
    family: String,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    /// Image side length.
    #[arg(long, default_value_t = 12)]
    size: usize,
    /// Images per class.
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Gaussian noise level.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(short, long)]
    output: PathBuf,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(threads) = std::env::var("CONVPERS_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => log::warn!("ignoring invalid CONVPERS_THREADS={threads}"),
        }
    }
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error[{}]: {}", err.category(), err);
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Diagram(args) => cmd_diagram(args),
        Command::Cpt(args) => cmd_cpt(args),
        Command::Euler(args) => cmd_euler(args),
        Command::Distance(args) => cmd_distance(args),
        Command::Vectorize(args) => cmd_vectorize(args),
        Command::Filters(args) => cmd_filters(args, cli.seed),
        Command::Classify(args) => cmd_classify(args),
        Command::Plot(args) => cmd_plot(args),
        Command::Synth(args) => cmd_synth(args, cli.seed),
    }
}

fn diagram_csv(diagram: &PersistenceDiagram) -> String {
    let mut out = String::from("dim,birth,death\n");
    for p in diagram.points() {
        let death = if p.death.is_finite() {
            p.death.to_string()
        } else {
            "inf".to_string()
        };
        out.push_str(&format!("{},{},{}\n", p.dim, p.birth, death));
    }
    out
}

fn cmd_diagram(args: DiagramArgs) -> CliResult<()> {
    let complex = args.input.build()?;
    let diagram = reduce_and_pair_with(
        &complex,
        ReductionOptions {
            keep_diagonal: args.keep_diagonal,
            ..Default::default()
        },
    )?;
    match &args.output {
        Some(path) => io::write_diagram(path, &diagram),
        None => {
            print!("{}", diagram_csv(&diagram));
            Ok(())
        }
    }
}

fn cmd_cpt(args: CptArgs) -> CliResult<()> {
    let mut image = io::read_image(&args.image)?;
    if args.superlevel {
        image = image.negated();
    }
    let bank = io::read_bank(&args.bank)?;
    let stride = Stride::new(config::parse_extent_list(&args.stride, ',', "stride")?)?;
    let construction = config::parse_construction(&args.construction)?;
    io::create_dir_all(&args.output)?;
    if args.keep_diagonal {
        // The per-filter pipeline, re-run with diagonal points retained.
        for g in bank.filters() {
            let conv = convpers::grid::convolve(&image, g, &stride)?;
            let complex = match construction {
                Construction::Upper => cubical_upper_star(&conv, args.max_dim)?,
                Construction::Lower => cubical_lower_star(&conv, args.max_dim)?,
            };
            let diagram = reduce_and_pair_with(
                &complex,
                ReductionOptions {
                    keep_diagonal: true,
                    ..Default::default()
                },
            )?;
            io::write_diagram(&args.output.join(format!("{}.csv", g.id())), &diagram)?;
        }
        println!("wrote {} diagrams to {}", bank.len(), args.output.display());
        return Ok(());
    }
    let result = cpt_image(&image, &bank, &stride, args.max_dim, construction)?;
    for (id, diagram) in &result.entries {
        io::write_diagram(&args.output.join(format!("{id}.csv")), diagram)?;
    }
    println!(
        "wrote {} diagrams to {}",
        result.entries.len(),
        args.output.display()
    );
    Ok(())
}

fn parse_thresholds(token: &str, complex: &FilteredComplex) -> CliResult<Vec<f64>> {
    if token == "auto" {
        return Ok(complex.value_set());
    }
    let mut out = token
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::format(format!("bad threshold {tok:?}")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn cmd_euler(args: EulerArgs) -> CliResult<()> {
    if let Some(bank_path) = &args.bank {
        let path = args
            .input
            .image
            .as_ref()
            .ok_or_else(|| CliError::format("--bank requires an image input"))?;
        let mut image = io::read_image(path)?;
        if args.input.superlevel {
            image = image.negated();
        }
        let bank = io::read_bank(bank_path)?;
        let stride = Stride::new(config::parse_extent_list(&args.stride, ',', "stride")?)?;
        let construction = config::parse_construction(&args.input.construction)?;
        let out_dir = args
            .output
            .as_ref()
            .ok_or_else(|| CliError::format("--bank requires --output DIR"))?;
        io::create_dir_all(out_dir)?;
        for g in bank.filters() {
            let conv = convpers::grid::convolve(&image, g, &stride)?;
            let complex = match construction {
                Construction::Upper => cubical_upper_star(&conv, args.input.max_dim)?,
                Construction::Lower => cubical_lower_star(&conv, args.input.max_dim)?,
            };
            let thresholds = parse_thresholds(&args.thresholds, &complex)?;
            let curve = euler_curve(&complex, &thresholds)?;
            io::write_euler_curve(&out_dir.join(format!("{}.csv", g.id())), &curve)?;
        }
        println!("wrote {} curves to {}", bank.len(), out_dir.display());
        return Ok(());
    }
    let complex = args.input.build()?;
    let thresholds = parse_thresholds(&args.thresholds, &complex)?;
    let curve = euler_curve(&complex, &thresholds)?;
    match &args.output {
        Some(path) => io::write_euler_curve(path, &curve),
        None => {
            println!("threshold,chi");
            for (t, chi) in curve.thresholds().iter().zip(curve.values()) {
                println!("{t},{chi}");
            }
            Ok(())
        }
    }
}

fn cmd_distance(args: DistanceArgs) -> CliResult<()> {
    let left = io::read_diagram(&args.left)?;
    let right = io::read_diagram(&args.right)?;
    let ground = match args.ground.as_str() {
        "linf" => GroundMetric::LInf,
        "l2" => GroundMetric::L2,
        other => {
            return Err(CliError::format(format!(
                "unknown ground metric {other:?} (linf|l2)"
            )))
        }
    };
    let value = match args.metric.as_str() {
        "bottleneck" => metrics::bottleneck_with(&left, &right, ground),
        "wasserstein" => metrics::wasserstein_with(&left, &right, args.p, ground)?,
        "sinkhorn" => {
            let scale = left
                .points()
                .iter()
                .chain(right.points())
                .flat_map(|p| {
                    let d = if p.death.is_finite() {
                        p.death
                    } else {
                        p.birth
                    };
                    [p.birth.abs(), d.abs()]
                })
                .fold(0.0, f64::max);
            let epsilon = args.epsilon.unwrap_or(0.01 * scale.max(1e-9));
            let run = metrics::wasserstein_sinkhorn(&left, &right, args.p, epsilon, args.max_iter)?;
            if !run.converged {
                log::warn!(
                    "sinkhorn did not reach the marginal tolerance in {} iterations",
                    run.iterations
                );
            }
            run.value
        }
        other => {
            return Err(CliError::format(format!(
                "unknown metric {other:?} (bottleneck|wasserstein|sinkhorn)"
            )))
        }
    };
    println!("{value}");
    Ok(())
}

fn vectorize_sample(
    diagrams: &[(String, PersistenceDiagram)],
    method: &str,
    dims: usize,
    specs: Option<&[PersistenceImageSpec]>,
    mode: CombineMode,
) -> CliResult<(Vec<String>, Vec<f64>)> {
    let mut blocks = Vec::new();
    for (id, diagram) in diagrams {
        let mut block = Vec::new();
        for q in 0..dims {
            match method {
                "total" => block.push(total_persistence(diagram, q)),
                "image" => {
                    let spec = &specs.expect("specs fitted")[q];
                    block.extend(persistence_image(diagram, q, spec)?);
                }
                other => {
                    return Err(CliError::format(format!(
                        "unknown method {other:?} (total|image)"
                    )))
                }
            }
        }
        blocks.push((id.clone(), block));
    }
    let combined = combine(&blocks, dims, mode)?;
    // Column names mirror the layout: filter x dim (x pixel).
    let per_dim = combined.layout.block_len / dims;
    let filters: Vec<String> = match mode {
        CombineMode::Concat => combined.layout.filter_ids.clone(),
        CombineMode::Average => vec!["avg".to_string()],
    };
    let mut header = Vec::new();
    for filter in &filters {
        for q in 0..dims {
            if per_dim == 1 {
                header.push(format!("{filter}:h{q}"));
            } else {
                for pix in 0..per_dim {
                    header.push(format!("{filter}:h{q}:{pix}"));
                }
            }
        }
    }
    Ok((header, combined.values))
}

fn cmd_vectorize(args: VectorizeArgs) -> CliResult<()> {
    if args.dims == 0 {
        return Err(CliError::format("--dims must be at least 1"));
    }
    let mode = config::parse_combine(&args.combine)?;
    // One sample from positional diagrams, or many from --samples-dir.
    let samples: Vec<Vec<(String, PersistenceDiagram)>> = if let Some(dir) = &args.samples_dir {
        let mut sample_dirs: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(CliError::io_path("reading", dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        sample_dirs.sort();
        if sample_dirs.is_empty() {
            return Err(CliError::format(format!(
                "{}: no sample subdirectories",
                dir.display()
            )));
        }
        sample_dirs
            .iter()
            .map(|sub| read_sample_diagrams(sub))
            .collect::<CliResult<Vec<_>>>()?
    } else if args.diagrams.is_empty() {
        return Err(CliError::format("provide diagram CSVs or --samples-dir"));
    } else {
        vec![args
            .diagrams
            .iter()
            .map(|p| Ok((stem_of(p), io::read_diagram(p)?)))
            .collect::<CliResult<Vec<_>>>()?]
    };

    let resolution = {
        let r = config::parse_extent_list(&args.resolution, 'x', "resolution")?;
        if r.len() != 2 {
            return Err(CliError::format("resolution must be RxC"));
        }
        (r[0], r[1])
    };
    let specs: Option<Vec<PersistenceImageSpec>> = if args.method == "image" {
        let all: Vec<&PersistenceDiagram> = samples
            .iter()
            .flat_map(|s| s.iter().map(|(_, d)| d))
            .collect();
        let mut specs = Vec::new();
        for q in 0..args.dims {
            let mut spec = fit_image_spec(&all, q, resolution)?;
            if args.sigma.is_some() {
                spec.sigma = args.sigma;
            }
            specs.push(spec);
        }
        Some(specs)
    } else {
        None
    };

    let mut header = Vec::new();
    let mut rows = Vec::new();
    for sample in &samples {
        let (h, row) = vectorize_sample(sample, &args.method, args.dims, specs.as_deref(), mode)?;
        if header.is_empty() {
            header = h;
        } else if header != h {
            return Err(CliError::format("samples have inconsistent blocks"));
        }
        rows.push(row);
    }
    io::write_features(&args.output, &header, &rows)?;
    println!("wrote {} rows to {}", rows.len(), args.output.display());
    Ok(())
}

fn read_sample_diagrams(dir: &Path) -> CliResult<Vec<(String, PersistenceDiagram)>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(CliError::io_path("reading", dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::format(format!(
            "{}: no diagram CSVs",
            dir.display()
        )));
    }
    files
        .iter()
        .map(|p| Ok((stem_of(p), io::read_diagram(p)?)))
        .collect()
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_filters(args: FiltersArgs, seed: u64) -> CliResult<()> {
    if args.channels == 0 {
        return Err(CliError::format("--channels must be at least 1"));
    }
    let shape = io::parse_shape_token(&args.shape)?;
    let bank: FilterBank = match args.kind.as_str() {
        "standard" => standard_filters(),
        "trivial" => FilterBank::trivial(args.channels),
        "random" => random_filters(&shape, args.channels, args.count.unwrap_or(25), seed)?,
        "eigen" => {
            let manifest = args.train.as_ref().ok_or_else(|| {
                CliError::format("eigen banks need --train MANIFEST for the patch PCA")
            })?;
            let rows = io::read_manifest(manifest)?;
            let images = rows
                .iter()
                .map(|(path, _)| io::read_image(path))
                .collect::<CliResult<Vec<Image>>>()?;
            eigenfilters(
                &images,
                &shape,
                args.components,
                args.count.unwrap_or(5),
                seed,
            )?
        }
        other => {
            return Err(CliError::format(format!(
                "unknown bank kind {other:?} (trivial|standard|random|eigen)"
            )))
        }
    };
    io::write_bank(&args.output, &bank)?;
    println!("wrote {} filters to {}", bank.len(), args.output.display());
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> CliResult<()> {
    let cfg = config::parse_classify_config(&args.config)?;
    let (samples, class_names) = config::load_dataset(&cfg.dataset_dir)?;
    let report = convpers::learn::run_experiment(&samples, &class_names, &cfg.experiment)?;

    println!("seed      accuracy");
    for (seed, acc) in &report.per_seed {
        println!("{seed:<9} {acc:.4}");
    }
    println!("mean      {:.4}", report.mean);
    println!("std dev   {:.4}", report.std_dev);

    if let Some(path) = &args.output {
        let config_map: serde_json::Map<String, serde_json::Value> = report
            .config_echo
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        let value = serde_json::json!({
            "per_seed": report
                .per_seed
                .iter()
                .map(|(seed, acc)| serde_json::json!({"seed": seed, "accuracy": acc}))
                .collect::<Vec<_>>(),
            "mean": report.mean,
            "std_dev": report.std_dev,
            "classes": class_names,
            "samples": samples.len(),
            "config": config_map,
        });
        io::write_json(path, &value)?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> CliResult<()> {
    let diagram = io::read_diagram(&args.diagram)?;
    io::write_text(&args.output, &plot::diagram_svg(&diagram))?;
    println!("wrote {}", args.output.display());
    Ok(())
}

fn cmd_synth(args: SynthArgs, seed: u64) -> CliResult<()> {
    let family = match args.family.as_str() {
        "stripes" => synth::Family::Stripes,
        "blobs" => synth::Family::Blobs,
        other => {
            return Err(CliError::format(format!(
                "unknown family {other:?} (stripes|blobs)"
            )))
        }
    };
    let spec = synth::SyntheticSpec {
        family,
        classes: args.classes,
        size: args.size,
        noise: args.noise,
        count_per_class: args.count,
        seed,
    };
    let written = synth::write_dataset(&spec, &args.output)?;
    println!("wrote {written} images to {}", args.output.display());
    Ok(())
}
