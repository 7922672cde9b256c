//! On-disk formats: confusion matrices (JSON/CSV), scored predictions (CSV),
//! grids (CSV/PGM) and the IoU and Brixia manifests (JSON).

use std::fs;
use std::path::{Path, PathBuf};

use clfeval_core::{ConfusionMatrix, MaskGrid, ScoredSample};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const ORIENTATION_TRUE_ROWS: &str = "true-rows";
pub const ORIENTATION_TRUE_COLUMNS: &str = "true-columns";

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfusionJson {
    labels: Vec<String>,
    orientation: String,
    counts: Vec<Vec<u64>>,
}

/// Parses `{"labels": [...], "orientation": "true-rows", "counts": [[...]]}`.
/// `"true-columns"` input is transposed on read.
pub fn parse_confusion_json(text: &str, path: &Path) -> Result<ConfusionMatrix> {
    let raw: ConfusionJson =
        serde_json::from_str(text).map_err(|e| CliError::parse(path, e.to_string()))?;
    let counts = match raw.orientation.as_str() {
        ORIENTATION_TRUE_ROWS => raw.counts,
        ORIENTATION_TRUE_COLUMNS => {
            let m = raw.counts.len();
            if raw.counts.iter().any(|r| r.len() != m) {
                return Err(CliError::parse(path, "counts must be square"));
            }
            (0..m).map(|j| raw.counts.iter().map(|r| r[j]).collect()).collect()
        }
        other => {
            return Err(CliError::parse(
                path,
                format!("orientation must be \"{ORIENTATION_TRUE_ROWS}\" or \"{ORIENTATION_TRUE_COLUMNS}\", got \"{other}\""),
            ))
        }
    };
    ConfusionMatrix::new(raw.labels, counts).map_err(|e| CliError::parse(path, e.to_string()))
}

/// Parses a CSV whose header row lists predicted labels after one leading
/// cell, and whose rows start with the true label.
pub fn parse_confusion_csv(text: &str, path: &Path) -> Result<ConfusionMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::parse(path, e.to_string()))?
        .clone();
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::parse(path, e.to_string()))?;
        let line = record.position().map_or(i + 2, |p| p.line() as usize);
        let true_label = record.get(0).unwrap_or_default();
        match labels.get(rows.len()) {
            Some(expected) if expected == true_label => {}
            _ => {
                return Err(CliError::parse(
                    path,
                    format!("line {line}: true label '{true_label}' does not match header order"),
                ))
            }
        }
        if record.len() != labels.len() + 1 {
            return Err(CliError::parse(
                path,
                format!(
                    "line {line}: expected {} counts, found {}",
                    labels.len(),
                    record.len() - 1
                ),
            ));
        }
        let row = record
            .iter()
            .skip(1)
            .enumerate()
            .map(|(k, cell)| {
                cell.parse::<u64>().map_err(|_| {
                    CliError::parse(
                        path,
                        format!(
                            "line {line}, field {}: '{cell}' is not a nonnegative integer",
                            k + 2
                        ),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    ConfusionMatrix::new(labels, rows).map_err(|e| CliError::parse(path, e.to_string()))
}

/// Reads a confusion matrix, choosing the format from the file extension.
pub fn read_confusion(path: &Path) -> Result<ConfusionMatrix> {
    let text = read_text(path)?;
    match extension(path).as_str() {
        "json" => parse_confusion_json(&text, path),
        "csv" => parse_confusion_csv(&text, path),
        other => Err(CliError::parse(
            path,
            format!("unsupported confusion matrix extension '.{other}'"),
        )),
    }
}

pub fn confusion_to_json(cm: &ConfusionMatrix) -> String {
    let raw = ConfusionJson {
        labels: cm.labels().to_vec(),
        orientation: ORIENTATION_TRUE_ROWS.to_string(),
        counts: cm.rows().map(<[u64]>::to_vec).collect(),
    };
    serde_json::to_string_pretty(&raw).expect("serializable") + "\n"
}

pub fn confusion_to_csv(cm: &ConfusionMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["true\\predicted".to_string()];
    header.extend(cm.labels().iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for (label, row) in cm.labels().iter().zip(cm.rows()) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(u64::to_string));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// Parses `true_label,score_0,...,score_{M-1}` rows.
pub fn parse_scored_csv(text: &str, path: &Path) -> Result<Vec<ScoredSample>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::parse(path, e.to_string()))?
        .clone();
    if header.get(0) != Some("true_label") {
        return Err(CliError::parse(
            path,
            "missing column 'true_label' (must be first)",
        ));
    }
    let m = header.len() - 1;
    if m < 2 {
        return Err(CliError::parse(path, "need at least 2 score columns"));
    }
    for (k, name) in header.iter().skip(1).enumerate() {
        if name != format!("score_{k}") {
            return Err(CliError::parse(
                path,
                format!("column {}: expected 'score_{k}', found '{name}'", k + 2),
            ));
        }
    }
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::parse(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |what: String| CliError::parse(path, format!("line {line}: {what}"));
        let label: usize = record[0]
            .parse()
            .map_err(|_| bad(format!("true_label '{}' is not a class index", &record[0])))?;
        let scores = record
            .iter()
            .skip(1)
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|_| bad(format!("score '{c}' is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        samples.push(ScoredSample::new(label, scores).map_err(|e| bad(e.to_string()))?);
    }
    if samples.is_empty() {
        return Err(CliError::parse(path, "no samples"));
    }
    Ok(samples)
}

pub fn read_scored(path: &Path) -> Result<Vec<ScoredSample>> {
    parse_scored_csv(&read_text(path)?, path)
}

/// Headerless CSV of numbers, one grid row per line.
pub fn parse_grid_csv(text: &str, path: &Path) -> Result<MaskGrid> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::parse(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .enumerate()
            .map(|(k, c)| {
                c.parse::<f64>().map_err(|_| {
                    CliError::parse(
                        path,
                        format!("line {line}, field {}: '{c}' is not a number", k + 1),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    MaskGrid::from_rows(rows).map_err(|e| CliError::parse(path, e.to_string()))
}

/// Binary PGM (P5) with `maxval <= 255`; pixel values are scaled by `1/maxval`.
pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<MaskGrid> {
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(CliError::parse(path, "truncated PGM header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if tokens[0] != "P5" {
        return Err(CliError::parse(
            path,
            format!("expected binary PGM magic 'P5', found '{}'", tokens[0]),
        ));
    }
    let num = |i: usize, name: &str| {
        tokens[i].parse::<usize>().map_err(|_| {
            CliError::parse(
                path,
                format!("PGM {name} '{}' is not an integer", tokens[i]),
            )
        })
    };
    let (width, height, maxval) = (num(1, "width")?, num(2, "height")?, num(3, "maxval")?);
    if maxval == 0 || maxval > 255 {
        return Err(CliError::parse(
            path,
            format!("PGM maxval {maxval} must be in 1..=255"),
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let raster = bytes.get(pos..).unwrap_or_default();
    if raster.len() < width * height {
        return Err(CliError::parse(
            path,
            format!(
                "PGM raster has {} bytes, expected {}",
                raster.len(),
                width * height
            ),
        ));
    }
    let values = raster[..width * height]
        .iter()
        .map(|&b| b as f64 / maxval as f64)
        .collect();
    MaskGrid::new(height, width, values).map_err(|e| CliError::parse(path, e.to_string()))
}

/// Reads a `.csv` or `.pgm` grid.
pub fn read_grid(path: &Path) -> Result<MaskGrid> {
    match extension(path).as_str() {
        "csv" => parse_grid_csv(&read_text(path)?, path),
        "pgm" => parse_pgm(&read_bytes(path)?, path),
        other => Err(CliError::parse(
            path,
            format!("unsupported grid extension '.{other}'"),
        )),
    }
}

pub fn grid_to_pgm(grid: &MaskGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.width(), grid.height()).into_bytes();
    out.extend(
        grid.values()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

/// Resolves `p` against the directory holding the manifest.
pub fn resolve(manifest: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest.parent().unwrap_or(Path::new(".")).join(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskPairEntry {
    #[serde(default)]
    pub id: Option<String>,
    pub prediction: String,
    pub target: String,
}

/// `{"pairs": [{"id": "...", "prediction": "p.csv", "target": "t.pgm"}]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IouManifest {
    pub pairs: Vec<MaskPairEntry>,
}

pub fn read_iou_manifest(path: &Path) -> Result<IouManifest> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::parse(path, e.to_string()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxEntry {
    /// Half-open `[start, end)` row range.
    pub rows: [usize; 2],
    pub cols: [usize; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyEntry {
    pub id: String,
    pub heatmap: String,
    pub partials: Vec<u8>,
    pub probability: f64,
    #[serde(default)]
    pub lung_boxes: Option<[BoxEntry; 2]>,
    /// Two interior row lines per box, paired with `lung_boxes` by position.
    #[serde(default)]
    pub row_boundaries: Option<[[usize; 2]; 2]>,
    #[serde(default)]
    pub class_probabilities: Option<Vec<f64>>,
}

/// Study manifest. Top-level `lung_boxes` apply to records without their own;
/// when neither is present the boxes are the left and right image halves.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyManifest {
    #[serde(default = "default_target_class")]
    pub target_class: String,
    #[serde(default)]
    pub lung_boxes: Option<[BoxEntry; 2]>,
    pub records: Vec<StudyEntry>,
}

fn default_target_class() -> String {
    "Covid-19".to_string()
}

pub fn read_study_manifest(path: &Path) -> Result<StudyManifest> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::parse(path, e.to_string()))
}
