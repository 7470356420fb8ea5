//! File formats: PGM/CSV images, diagram and Euler-curve CSVs, filter-bank
//! CSVs, explicit cell lists, simplicial inputs, dataset manifests, and
//! feature matrices. All writers are deterministic; floats print with
//! Rust's shortest round-trip representation.

use crate::error::{CliError, CliResult};
use convpers::complex::{Cell, ComplexKind, FilteredComplex};
use convpers::grid::{ConvFilter, GridShape, Image};
use convpers::persistence::{DiagramPoint, EulerCurve, PersistenceDiagram};
use convpers::transforms::{BankProvenance, FilterBank, Normalization};
use std::fs;
use std::io::Write;
use std::path::Path;

// ---------------------------------------------------------------- images

/// Read a grayscale image: ASCII PGM (P2), binary PGM (P5), or a CSV matrix.
/// PGM values scale to the unit interval by maxval; CSV values are taken verbatim.
pub fn read_image(path: &Path) -> CliResult<Image> {
    let bytes = fs::read(path).map_err(CliError::io_path("reading", path))?;
    match bytes.get(..2) {
        Some(b"P2") => parse_pgm_ascii(&bytes, path),
        Some(b"P5") => parse_pgm_binary(&bytes, path),
        _ => parse_csv_matrix(&bytes, path),
    }
}

fn pgm_header(bytes: &[u8]) -> Option<(usize, usize, usize, usize)> {
    // Returns (width, height, maxval, offset past the header). Comments
    // starting with '#' are allowed between tokens.
    let mut fields = Vec::new();
    let mut i = 2; // past magic
    while fields.len() < 3 && i < bytes.len() {
        match bytes[i] {
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                let token = std::str::from_utf8(&bytes[start..i]).ok()?;
                fields.push(token.parse::<usize>().ok()?);
            }
        }
    }
    if fields.len() < 3 {
        return None;
    }
    // Exactly one whitespace byte separates the header from the payload.
    if i < bytes.len() {
        i += 1;
    }
    Some((fields[0], fields[1], fields[2], i))
}

fn parse_pgm_ascii(bytes: &[u8], path: &Path) -> CliResult<Image> {
    let (width, height, maxval, offset) = pgm_header(bytes)
        .ok_or_else(|| CliError::format(format!("{}: malformed PGM header", path.display())))?;
    if maxval == 0 {
        return Err(CliError::format(format!(
            "{}: PGM maxval must be positive",
            path.display()
        )));
    }
    let body = std::str::from_utf8(&bytes[offset.saturating_sub(1)..])
        .map_err(|_| CliError::format(format!("{}: PGM payload is not ASCII", path.display())))?;
    let values: Vec<f64> = body
        .split_ascii_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map(|v| v / maxval as f64).map_err(|_| {
                CliError::format(format!("{}: bad PGM sample {tok:?}", path.display()))
            })
        })
        .collect::<CliResult<_>>()?;
    if values.len() != width * height {
        return Err(CliError::format(format!(
            "{}: PGM payload has {} samples, expected {}",
            path.display(),
            values.len(),
            width * height
        )));
    }
    let shape = GridShape::new(vec![height, width])?;
    Ok(Image::single_channel(shape, values)?)
}

fn parse_pgm_binary(bytes: &[u8], path: &Path) -> CliResult<Image> {
    let (width, height, maxval, offset) = pgm_header(bytes)
        .ok_or_else(|| CliError::format(format!("{}: malformed PGM header", path.display())))?;
    if maxval == 0 || maxval > 65535 {
        return Err(CliError::format(format!(
            "{}: unsupported PGM maxval {maxval}",
            path.display()
        )));
    }
    let bytes_per = if maxval > 255 { 2 } else { 1 };
    let payload = &bytes[offset.min(bytes.len())..];
    let expected = width * height * bytes_per;
    if payload.len() < expected {
        return Err(CliError::format(format!(
            "{}: truncated PGM payload ({} of {expected} bytes)",
            path.display(),
            payload.len()
        )));
    }
    let values: Vec<f64> = (0..width * height)
        .map(|i| {
            let raw = if bytes_per == 1 {
                payload[i] as u64
            } else {
                u16::from_be_bytes([payload[2 * i], payload[2 * i + 1]]) as u64
            };
            raw as f64 / maxval as f64
        })
        .collect();
    let shape = GridShape::new(vec![height, width])?;
    Ok(Image::single_channel(shape, values)?)
}

fn parse_csv_matrix(bytes: &[u8], path: &Path) -> CliResult<Image> {
    let text = std::str::from_utf8(bytes).map_err(|_| {
        CliError::format(format!(
            "{}: unsupported format (not PGM, not a text CSV)",
            path.display()
        ))
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| {
                    CliError::format(format!(
                        "{}:{}: bad CSV value {tok:?}",
                        path.display(),
                        lineno + 1
                    ))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::format(format!(
            "{}: empty CSV matrix",
            path.display()
        )));
    }
    Ok(Image::from_rows(&rows)?)
}

/// Write an image as ASCII PGM (P2), quantized to maxval 255 after clamping
/// to the unit interval.
pub fn write_pgm(path: &Path, image: &Image) -> CliResult<()> {
    let extents = image.shape().extents();
    if extents.len() != 2 || image.channels() != 1 {
        return Err(CliError::Domain(
            "PGM output needs a 2-D single-channel image".into(),
        ));
    }
    let (height, width) = (extents[0], extents[1]);
    let mut out = format!("P2\n{width} {height}\n255\n");
    for r in 0..height {
        let row: Vec<String> = (0..width)
            .map(|c| {
                let v = image.value(&[r, c], 0).clamp(0.0, 1.0);
                ((v * 255.0).round() as u64).to_string()
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(CliError::io_path("writing", path))
}

// -------------------------------------------------------------- diagrams

/// Diagram CSV: header `dim,birth,death`, death printed as `inf` for
/// essential classes, rows ordered by (dim, birth, death).
pub fn write_diagram(path: &Path, diagram: &PersistenceDiagram) -> CliResult<()> {
    let mut out = String::from("dim,birth,death\n");
    for p in diagram.points() {
        let death = if p.death.is_finite() {
            p.death.to_string()
        } else {
            "inf".to_string()
        };
        out.push_str(&format!("{},{},{}\n", p.dim, p.birth, death));
    }
    fs::write(path, out).map_err(CliError::io_path("writing", path))
}

pub fn read_diagram(path: &Path) -> CliResult<PersistenceDiagram> {
    let text = fs::read_to_string(path).map_err(CliError::io_path("reading", path))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == "dim,birth,death" => {}
        _ => {
            return Err(CliError::format(format!(
                "{}: expected header dim,birth,death",
                path.display()
            )))
        }
    }
    let mut points = Vec::new();
    let mut max_dim = 0;
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CliError::format(format!(
                "{}:{}: expected 3 fields",
                path.display(),
                lineno + 2
            )));
        }
        let bad =
            |what: &str| CliError::format(format!("{}:{}: bad {what}", path.display(), lineno + 2));
        let dim: usize = fields[0].trim().parse().map_err(|_| bad("dim"))?;
        let birth: f64 = fields[1].trim().parse().map_err(|_| bad("birth"))?;
        let death_field = fields[2].trim();
        let death = if death_field.eq_ignore_ascii_case("inf") {
            f64::INFINITY
        } else {
            death_field.parse().map_err(|_| bad("death"))?
        };
        if !birth.is_finite() || death.is_nan() || death < birth {
            return Err(bad("point: birth must be finite and at most death"));
        }
        max_dim = max_dim.max(dim);
        points.push(DiagramPoint::new(birth, death, dim));
    }
    Ok(PersistenceDiagram::new(points, max_dim))
}

/// Euler curve CSV: header `threshold,chi`.
pub fn write_euler_curve(path: &Path, curve: &EulerCurve) -> CliResult<()> {
    let mut out = String::from("threshold,chi\n");
    for (t, chi) in curve.thresholds().iter().zip(curve.values()) {
        out.push_str(&format!("{t},{chi}\n"));
    }
    fs::write(path, out).map_err(CliError::io_path("writing", path))
}

// ---------------------------------------------------------------- banks

fn shape_token(shape: &GridShape) -> String {
    shape
        .extents()
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join("x")
}

pub fn parse_shape_token(token: &str) -> CliResult<GridShape> {
    let extents = token
        .split('x')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| CliError::format(format!("bad shape {token:?}")))
        })
        .collect::<CliResult<Vec<usize>>>()?;
    Ok(GridShape::new(extents)?)
}

/// Filter-bank CSV: `# key=value` metadata comments (provenance, seeds,
/// normalization), then header `id,shape,channels,values` with the values
/// space-separated.
pub fn write_bank(path: &Path, bank: &FilterBank) -> CliResult<()> {
    let provenance = match bank.provenance() {
        BankProvenance::Trivial => "trivial".to_string(),
        BankProvenance::Standard => "standard".to_string(),
        BankProvenance::Random { seed } => format!("random seed={seed}"),
        BankProvenance::Eigen { seed, components } => {
            format!("eigen seed={seed} components={components}")
        }
    };
    let normalization = match bank.normalization() {
        Normalization::L2Unit => "l2-unit",
        Normalization::Raw => "raw",
    };
    let mut out = format!("# provenance={provenance}\n# normalization={normalization}\n");
    out.push_str("id,shape,channels,values\n");
    for f in bank.filters() {
        let values: Vec<String> = f.values().iter().map(f64::to_string).collect();
        out.push_str(&format!(
            "{},{},{},{}\n",
            f.id(),
            shape_token(f.shape()),
            f.channels(),
            values.join(" ")
        ));
    }
    fs::write(path, out).map_err(CliError::io_path("writing", path))
}

pub fn read_bank(path: &Path) -> CliResult<FilterBank> {
    let text = fs::read_to_string(path).map_err(CliError::io_path("reading", path))?;
    let mut provenance = BankProvenance::Standard;
    let mut normalization = Normalization::Raw;
    let mut filters = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let meta = meta.trim();
            if let Some(rest) = meta.strip_prefix("provenance=") {
                provenance = parse_provenance(rest);
            } else if let Some(rest) = meta.strip_prefix("normalization=") {
                normalization = if rest.trim() == "l2-unit" {
                    Normalization::L2Unit
                } else {
                    Normalization::Raw
                };
            }
            continue;
        }
        if !saw_header {
            if line != "id,shape,channels,values" {
                return Err(CliError::format(format!(
                    "{}: expected header id,shape,channels,values",
                    path.display()
                )));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.splitn(4, ',').collect();
        if fields.len() != 4 {
            return Err(CliError::format(format!(
                "{}:{}: expected 4 fields",
                path.display(),
                lineno + 1
            )));
        }
        let shape = parse_shape_token(fields[1])?;
        let channels: usize = fields[2].trim().parse().map_err(|_| {
            CliError::format(format!("{}:{}: bad channels", path.display(), lineno + 1))
        })?;
        let values = fields[3]
            .split_ascii_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    CliError::format(format!(
                        "{}:{}: bad filter value {tok:?}",
                        path.display(),
                        lineno + 1
                    ))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        filters.push(ConvFilter::new(fields[0].trim(), shape, channels, values)?);
    }
    Ok(FilterBank::new(filters, provenance, normalization)?)
}

fn parse_provenance(text: &str) -> BankProvenance {
    let mut kind = "";
    let mut seed = 0u64;
    let mut components = 0usize;
    for token in text.split_ascii_whitespace() {
        if let Some(v) = token.strip_prefix("seed=") {
            seed = v.parse().unwrap_or(0);
        } else if let Some(v) = token.strip_prefix("components=") {
            components = v.parse().unwrap_or(0);
        } else {
            kind = token;
        }
    }
    match kind {
        "trivial" => BankProvenance::Trivial,
        "random" => BankProvenance::Random { seed },
        "eigen" => BankProvenance::Eigen { seed, components },
        _ => BankProvenance::Standard,
    }
}

// ------------------------------------------------------------- complexes

/// Explicit filtered-complex CSV: header `id,dim,value,faces`, faces given
/// as space-separated cell ids (empty for vertices).
pub fn read_cells(path: &Path) -> CliResult<FilteredComplex> {
    let text = fs::read_to_string(path).map_err(CliError::io_path("reading", path))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == "id,dim,value,faces" => {}
        _ => {
            return Err(CliError::format(format!(
                "{}: expected header id,dim,value,faces",
                path.display()
            )))
        }
    }
    let mut cells = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(4, ',').collect();
        if fields.len() != 4 {
            return Err(CliError::format(format!(
                "{}:{}: expected 4 fields",
                path.display(),
                lineno + 2
            )));
        }
        let bad =
            |what: &str| CliError::format(format!("{}:{}: bad {what}", path.display(), lineno + 2));
        let id: usize = fields[0].trim().parse().map_err(|_| bad("id"))?;
        let dim: usize = fields[1].trim().parse().map_err(|_| bad("dim"))?;
        let value: f64 = fields[2].trim().parse().map_err(|_| bad("value"))?;
        let mut faces = fields[3]
            .split_ascii_whitespace()
            .map(|tok| tok.parse::<usize>().map_err(|_| bad("face id")))
            .collect::<CliResult<Vec<usize>>>()?;
        faces.sort_unstable();
        cells.push(Cell::new(id, dim, faces, value));
    }
    Ok(FilteredComplex::from_cells(cells, ComplexKind::Simplicial)?)
}

/// Simplicial input: one simplex per line, whitespace-separated vertex ids.
pub fn read_simplices(path: &Path) -> CliResult<Vec<Vec<usize>>> {
    let text = fs::read_to_string(path).map_err(CliError::io_path("reading", path))?;
    let mut simplices = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let simplex = line
            .split_ascii_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|_| {
                    CliError::format(format!(
                        "{}:{}: bad vertex id {tok:?}",
                        path.display(),
                        lineno + 1
                    ))
                })
            })
            .collect::<CliResult<Vec<usize>>>()?;
        simplices.push(simplex);
    }
    Ok(simplices)
}

/// Vertex-value CSV: rows `vertex_id,v1,...,vd`; a non-numeric first row is
/// treated as a header. Returns values in vertex-id order as an n x d table.
pub fn read_vertex_values(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(CliError::io_path("reading", path))?;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if lineno == 0 && fields[0].trim().parse::<usize>().is_err() {
            continue; // header
        }
        let bad =
            |what: &str| CliError::format(format!("{}:{}: bad {what}", path.display(), lineno + 1));
        if fields.len() < 2 {
            return Err(bad("row: need vertex_id and at least one value"));
        }
        let id: usize = fields[0].trim().parse().map_err(|_| bad("vertex id"))?;
        let values = fields[1..]
            .iter()
            .map(|tok| tok.trim().parse::<f64>().map_err(|_| bad("value")))
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push((id, values));
    }
    rows.sort_by_key(|(id, _)| *id);
    let width = rows.first().map_or(0, |(_, v)| v.len());
    for (i, (id, values)) in rows.iter().enumerate() {
        if *id != i {
            return Err(CliError::format(format!(
                "{}: vertex ids must be 0..n-1 without gaps (missing {i})",
                path.display()
            )));
        }
        if values.len() != width {
            return Err(CliError::format(format!(
                "{}: ragged vertex-value rows",
                path.display()
            )));
        }
    }
    Ok(rows.into_iter().map(|(_, v)| v).collect())
}

// -------------------------------------------------------------- datasets

/// Dataset manifest CSV: header `path,label`, paths relative to the
/// manifest's directory.
pub fn read_manifest(path: &Path) -> CliResult<Vec<(std::path::PathBuf, String)>> {
    let text = fs::read_to_string(path).map_err(CliError::io_path("reading", path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == "path,label" => {}
        _ => {
            return Err(CliError::format(format!(
                "{}: expected header path,label",
                path.display()
            )))
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((rel, label)) = line.split_once(',') else {
            return Err(CliError::format(format!(
                "{}:{}: expected path,label",
                path.display(),
                lineno + 2
            )));
        };
        if label.trim().is_empty() {
            return Err(CliError::format(format!(
                "{}:{}: empty label",
                path.display(),
                lineno + 2
            )));
        }
        rows.push((base.join(rel.trim()), label.trim().to_string()));
    }
    Ok(rows)
}

pub fn write_manifest(path: &Path, rows: &[(String, String)]) -> CliResult<()> {
    let mut out = String::from("path,label\n");
    for (rel, label) in rows {
        out.push_str(&format!("{rel},{label}\n"));
    }
    fs::write(path, out).map_err(CliError::io_path("writing", path))
}

// -------------------------------------------------------------- features

/// Feature matrix CSV: one row per sample; the header names each column
/// `filter:h<dim>` (total persistence) or `filter:h<dim>:<pixel>`.
pub fn write_features(path: &Path, header: &[String], rows: &[Vec<f64>]) -> CliResult<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(CliError::io_path("writing", path))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(CliError::io_path("writing", path))
}

pub fn create_dir_all(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(CliError::io_path("creating directory", path))
}

// Write with a trailing newline through a buffered writer when streaming
// would matter; small artifacts above just use fs::write.
pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let file = fs::File::create(path).map_err(CliError::io_path("writing", path))?;
    let mut writer = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)
        .map_err(|e| CliError::format(format!("serializing JSON: {e}")))?;
    writer
        .write_all(b"\n")
        .map_err(CliError::io_path("writing", path))
}
