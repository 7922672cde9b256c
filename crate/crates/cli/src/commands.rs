//! Subcommand implementations. Each returns a fully rendered [`Output`] so
//! nothing is written until the whole computation has succeeded.

use std::path::Path;

use clfeval_core::metrics::{format_3dp, full_report};
use clfeval_core::{
    binarize, default_partition, estimate, hand_till_auc, histogram, iou,
    partition_with_boundaries, study_report, BinaryMask, BrixiaScore, ConfusionMatrix,
    EstimateOptions, Laterality, LungBox, MetricId, PosteriorModel, PriorConfig, RecordFlag,
    RelevanceMap, StudyRecord, ZonePartition,
};

use crate::error::{CliError, Result};
use crate::formats::{self, BoxEntry};

pub const HISTOGRAM_BINS: usize = 100;
const NA: &str = "n/a";

/// Rendered results of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    /// Human-readable table with 3-decimal values.
    pub table: String,
    /// `(file name, contents)`; the first entry is the primary CSV.
    pub files: Vec<(String, String)>,
    /// Warnings for the diagnostics stream.
    pub diagnostics: Vec<String>,
}

impl Output {
    pub fn primary_csv(&self) -> &str {
        &self.files[0].1
    }
}

fn full(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

fn short(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), format_3dp)
}

fn csv_line(cells: &[String]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(cells).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out += &line(
        widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str)
            .collect(),
    );
    for row in rows {
        out += &line(row.iter().map(String::as_str).collect());
    }
    out
}

/// Point metrics for every class plus macro averages and accuracy.
pub fn report(cm: &ConfusionMatrix) -> Output {
    let r = full_report(cm);
    let mut csv = csv_line(&["metric".into(), "key".into(), "score".into()]);
    let mut rows = Vec::new();
    for (id, v) in r.rows() {
        let name = id.display_name(cm.labels());
        csv += &csv_line(&[name.clone(), id.key(), full(v)]);
        rows.push(vec![name, short(v)]);
    }
    Output {
        table: render_table(&["Metric", "Score"], &rows),
        files: vec![("report.csv".into(), csv)],
        diagnostics: Vec::new(),
    }
}

#[derive(Debug, Clone)]
pub struct BayesOptions {
    pub seed: u64,
    pub samples: usize,
    pub mass: f64,
    pub workers: usize,
    /// Metric keys; empty means all.
    pub metrics: Vec<String>,
    pub histograms: bool,
    pub raw_samples: bool,
}

impl Default for BayesOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            samples: 100_000,
            mass: 0.95,
            workers: 1,
            metrics: Vec::new(),
            histograms: false,
            raw_samples: false,
        }
    }
}

/// Posterior summaries under uniform priors.
pub fn bayes(cm: &ConfusionMatrix, opts: &BayesOptions) -> Result<Output> {
    let m = cm.num_classes();
    let ids = if opts.metrics.is_empty() {
        MetricId::all(m)
    } else {
        opts.metrics
            .iter()
            .map(|k| MetricId::parse_key(k, m))
            .collect::<clfeval_core::Result<Vec<_>>>()?
    };
    let model = PosteriorModel::fit(cm, &PriorConfig::uniform(m))?;
    let est = estimate(
        &model,
        &ids,
        opts.seed,
        &EstimateOptions {
            samples: opts.samples,
            mass: opts.mass,
            workers: opts.workers,
            keep_samples: opts.histograms || opts.raw_samples,
        },
    )?;
    let report = full_report(cm);
    let labels = cm.labels();
    let mut csv = csv_line(
        &[
            "metric", "key", "score", "mean", "std", "mc_error", "hdi_low", "hdi_high", "samples",
            "excluded",
        ]
        .map(String::from),
    );
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    for s in &est.summaries {
        let name = s.metric.display_name(labels);
        let score = report.get(s.metric);
        csv += &csv_line(&[
            name.clone(),
            s.metric.key(),
            full(score),
            s.mean.to_string(),
            s.std.to_string(),
            s.mc_error.to_string(),
            s.hdi.low.to_string(),
            s.hdi.high.to_string(),
            s.sample_count.to_string(),
            s.excluded.to_string(),
        ]);
        rows.push(vec![
            name,
            short(score),
            format_3dp(s.mean),
            format_3dp(s.std),
            format_3dp(s.mc_error),
            format!("[{},{}]", format_3dp(s.hdi.low), format_3dp(s.hdi.high)),
        ]);
        diagnostics.extend(s.warning.clone());
    }
    let hdi_header = format!(
        "{}% HDI",
        format_3dp(opts.mass * 100.0).trim_end_matches(".0")
    );
    let table = render_table(
        &["Metric", "Score", "Mean", "std", "MC error", &hdi_header],
        &rows,
    );
    let mut files = vec![("bayes.csv".to_string(), csv)];
    if let Some(samples) = &est.samples {
        for (id, col) in ids.iter().zip(samples) {
            if opts.histograms {
                let mut h =
                    csv_line(&["bin_low", "bin_high", "count", "density"].map(String::from));
                let bins = histogram(col, HISTOGRAM_BINS)?;
                for b in bins {
                    let width = b.high - b.low;
                    let density = if width > 0.0 {
                        b.count as f64 / (col.len() as f64 * width)
                    } else {
                        f64::NAN
                    };
                    h += &csv_line(&[
                        b.low.to_string(),
                        b.high.to_string(),
                        b.count.to_string(),
                        full((width > 0.0).then_some(density)),
                    ]);
                }
                files.push((format!("hist_{}.csv", id.key()), h));
            }
            if opts.raw_samples {
                let mut raw = String::from("value\n");
                for x in col {
                    raw += &format!("{x}\n");
                }
                files.push((format!("samples_{}.csv", id.key()), raw));
            }
        }
    }
    Ok(Output {
        table,
        files,
        diagnostics,
    })
}

/// Hand & Till multi-class AUC with its pairwise table.
pub fn auc(path: &Path) -> Result<Output> {
    let samples = formats::read_scored(path)?;
    let r = hand_till_auc(&samples)?;
    let mut csv = csv_line(
        &[
            "class_i",
            "class_j",
            "a_i_given_j",
            "a_j_given_i",
            "pair_auc",
        ]
        .map(String::from),
    );
    let mut rows = Vec::new();
    for p in &r.pairs {
        csv += &csv_line(&[
            p.i.to_string(),
            p.j.to_string(),
            p.a_ij.to_string(),
            p.a_ji.to_string(),
            p.value().to_string(),
        ]);
        rows.push(vec![
            p.i.to_string(),
            p.j.to_string(),
            format_3dp(p.a_ij),
            format_3dp(p.a_ji),
            format_3dp(p.value()),
        ]);
    }
    csv += &csv_line(&[
        "macro".into(),
        String::new(),
        String::new(),
        String::new(),
        r.auc.to_string(),
    ]);
    rows.push(vec![
        "macro".into(),
        String::new(),
        String::new(),
        String::new(),
        format_3dp(r.auc),
    ]);
    Ok(Output {
        table: render_table(&["i", "j", "A(i|j)", "A(j|i)", "AUC"], &rows),
        files: vec![("auc.csv".into(), csv)],
        diagnostics: r.warnings(),
    })
}

/// Per-pair IoU after thresholding predictions, plus the mean.
pub fn iou_manifest(manifest_path: &Path, threshold: f64) -> Result<Output> {
    if !threshold.is_finite() {
        return Err(clfeval_core::Error::Parameter("threshold must be finite".into()).into());
    }
    let manifest = formats::read_iou_manifest(manifest_path)?;
    if manifest.pairs.is_empty() {
        return Err(CliError::parse(manifest_path, "manifest lists no pairs"));
    }
    let mut csv = csv_line(&["pair", "iou"].map(String::from));
    let mut rows = Vec::new();
    let mut sum = 0.0;
    for (i, entry) in manifest.pairs.iter().enumerate() {
        let id = entry.id.clone().unwrap_or_else(|| i.to_string());
        let pred = formats::read_grid(&formats::resolve(manifest_path, &entry.prediction))?;
        let target_path = formats::resolve(manifest_path, &entry.target);
        let target = BinaryMask::from_grid(&formats::read_grid(&target_path)?)
            .map_err(|e| CliError::parse(&target_path, e.to_string()))?;
        let value =
            iou(&binarize(&pred, threshold), &target).map_err(|source| CliError::Context {
                context: format!("pair '{id}'"),
                source,
            })?;
        sum += value;
        csv += &csv_line(&[id.clone(), value.to_string()]);
        rows.push(vec![id, format_3dp(value)]);
    }
    let mean = sum / manifest.pairs.len() as f64;
    csv += &csv_line(&["mean".into(), mean.to_string()]);
    rows.push(vec!["mean".into(), format_3dp(mean)]);
    Ok(Output {
        table: render_table(&["Pair", "IoU"], &rows),
        files: vec![("iou.csv".into(), csv)],
        diagnostics: Vec::new(),
    })
}

fn lung_boxes(entry: &[BoxEntry; 2]) -> [LungBox; 2] {
    entry.clone().map(|b| LungBox {
        rows: b.rows[0]..b.rows[1],
        cols: b.cols[0]..b.cols[1],
    })
}

fn flag_text(flag: &Option<RecordFlag>) -> String {
    const L: [char; 6] = clfeval_core::brixia::ZONE_LABELS;
    match flag {
        None => String::new(),
        Some(RecordFlag::NoPositiveRelevance) => "no-positive-relevance".into(),
        Some(RecordFlag::TopZoneNotTopScored {
            top_zone,
            top_scored,
        }) => format!(
            "top-relevance-{}-not-in-top-scored-{}",
            L[*top_zone],
            top_scored.iter().map(|&i| L[i]).collect::<String>()
        ),
    }
}

/// Zone relevance vs. partial scores and overall score vs. probability.
pub fn brixia(manifest_path: &Path, laterality: Laterality) -> Result<Output> {
    let manifest = formats::read_study_manifest(manifest_path)?;
    let mut records = Vec::new();
    let mut partitions: Vec<ZonePartition> = Vec::new();
    for entry in &manifest.records {
        let ctx = |source: clfeval_core::Error| CliError::Context {
            context: format!("record '{}'", entry.id),
            source,
        };
        let grid = formats::read_grid(&formats::resolve(manifest_path, &entry.heatmap))?;
        let boxes = match entry.lung_boxes.as_ref().or(manifest.lung_boxes.as_ref()) {
            Some(b) => lung_boxes(b),
            None => {
                let (h, w) = (grid.height(), grid.width());
                [
                    LungBox {
                        rows: 0..h,
                        cols: 0..w / 2,
                    },
                    LungBox {
                        rows: 0..h,
                        cols: w / 2..w,
                    },
                ]
            }
        };
        let partition = match entry.row_boundaries {
            Some(b) => partition_with_boundaries(boxes, b, laterality),
            None => default_partition(boxes, laterality),
        }
        .map_err(ctx)?;
        let partials: [u8; 6] = entry.partials.as_slice().try_into().map_err(|_| {
            CliError::parse(
                manifest_path,
                format!("record '{}': expected 6 partial scores", entry.id),
            )
        })?;
        let score = BrixiaScore::new(partials).map_err(ctx)?;
        let mut relevance = RelevanceMap::new(grid, manifest.target_class.clone());
        relevance.probabilities = entry.class_probabilities.clone();
        records.push(
            StudyRecord::new(entry.id.clone(), score, relevance, entry.probability).map_err(ctx)?,
        );
        partitions.push(partition);
    }
    let report = study_report(&records, &partitions)?;

    let zones = ["A", "B", "C", "D", "E", "F"];
    let mut header: Vec<String> = vec!["id".into(), "overall".into(), "probability".into()];
    header.extend(zones.iter().map(|z| format!("score_{z}")));
    header.extend(zones.iter().map(|z| format!("relevance_{z}")));
    header.extend(["spearman".into(), "flag".into()]);
    let mut csv = csv_line(&header);
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    for (rec, r) in records.iter().zip(&report.records) {
        let mut cells = vec![
            r.id.clone(),
            rec.score.overall().to_string(),
            rec.probability.to_string(),
        ];
        cells.extend(rec.score.partials().iter().map(u8::to_string));
        cells.extend(r.zone_relevance.iter().map(f64::to_string));
        cells.extend([full(r.correlation), flag_text(&r.flag)]);
        csv += &csv_line(&cells);
        let partials: String = rec.score.partials().iter().map(u8::to_string).collect();
        let rel: Vec<String> = r.zone_relevance.iter().map(|v| format_3dp(*v)).collect();
        rows.push(vec![
            r.id.clone(),
            format!("{} [{partials}]", rec.score.overall()),
            format_3dp(rec.probability),
            rel.join(" "),
            short(r.correlation),
            flag_text(&r.flag),
        ]);
        if r.flag.is_some() {
            diagnostics.push(format!("record '{}': {}", r.id, flag_text(&r.flag)));
        }
    }
    let across = report.score_probability_correlation;
    csv += &csv_line(&["score_probability_spearman".into(), full(across)]);
    let mut table = render_table(
        &[
            "Record",
            "Brixia",
            "Probability",
            "Relevance A..F",
            "Spearman",
            "Flag",
        ],
        &rows,
    );
    table += &format!(
        "\nOverall score vs probability (Spearman): {}\n",
        short(across)
    );
    Ok(Output {
        table,
        files: vec![("brixia.csv".into(), csv)],
        diagnostics,
    })
}
