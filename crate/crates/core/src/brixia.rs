//! Brixia severity scores and their comparison with relevance heatmaps.
//!
//! A chest X-ray is split into six zones, three horizontal bands per lung,
//! each graded 0–3 by a radiologist. A heatmap is reduced to one number per
//! zone by summing its positive values, and the zone sums are rank-correlated
//! with the partial scores. Across studies the overall score is
//! rank-correlated with the predicted probability of the target class.

use std::ops::Range;

use crate::error::{param, Error, Result};
use crate::rank::average_ranks;
use crate::segmetrics::MaskGrid;

pub const ZONE_LABELS: [char; 6] = ['A', 'B', 'C', 'D', 'E', 'F'];

/// Six partial scores ordered A..F, each in `0..=3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BrixiaScore {
    partials: [u8; 6],
}

impl BrixiaScore {
    pub fn new(partials: [u8; 6]) -> Result<Self> {
        if let Some((i, p)) = partials.iter().enumerate().find(|(_, p)| **p > 3) {
            return param(format!(
                "partial score {} = {p} is outside 0..=3",
                ZONE_LABELS[i]
            ));
        }
        Ok(Self { partials })
    }

    pub fn partials(&self) -> [u8; 6] {
        self.partials
    }

    /// Sum of the partial scores, 0..=18.
    pub fn overall(&self) -> u8 {
        self.partials.iter().sum()
    }
}

/// Overall score from six partial scores.
pub fn overall_score(partials: &[u8]) -> Result<u8> {
    let arr: [u8; 6] = partials.try_into().map_err(|_| {
        Error::Parameter(format!("expected 6 partial scores, got {}", partials.len()))
    })?;
    Ok(BrixiaScore::new(arr)?.overall())
}

/// Bounding box of one lung, half-open row and column ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LungBox {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Zone {
    pub label: char,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

impl Zone {
    pub fn pixel_count(&self) -> usize {
        self.rows.len() * self.cols.len()
    }
}

/// Which image side carries zones A, B, C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Laterality {
    /// A–C on the leftmost box in image coordinates.
    #[default]
    AbcImageLeft,
    /// A–C on the rightmost box (radiological convention puts the patient's
    /// right lung on the image left, so use this when scores follow the
    /// patient's left lung for A–C).
    AbcImageRight,
}

/// Six zones ordered A..F.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZonePartition {
    zones: Vec<Zone>,
}

impl ZonePartition {
    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    /// Largest row and column end over all zones.
    pub fn extent(&self) -> (usize, usize) {
        let rows = self.zones.iter().map(|z| z.rows.end).max().unwrap_or(0);
        let cols = self.zones.iter().map(|z| z.cols.end).max().unwrap_or(0);
        (rows, cols)
    }
}

fn ordered_boxes<T>(
    mut boxes: [(LungBox, T); 2],
    laterality: Laterality,
) -> Result<[(LungBox, T); 2]> {
    for (b, _) in &boxes {
        if b.rows.is_empty() || b.cols.is_empty() {
            return param("lung bounding boxes must be nonempty");
        }
    }
    boxes.sort_by_key(|(b, _)| b.cols.start);
    if boxes[0].0.cols.end > boxes[1].0.cols.start {
        return param("lung bounding boxes overlap in columns");
    }
    if laterality == Laterality::AbcImageRight {
        boxes.swap(0, 1);
    }
    Ok(boxes)
}

fn bands(b: &LungBox, cuts: [usize; 2], labels: &[char]) -> Vec<Zone> {
    let edges = [b.rows.start, cuts[0], cuts[1], b.rows.end];
    labels
        .iter()
        .enumerate()
        .map(|(i, &label)| Zone {
            label,
            rows: edges[i]..edges[i + 1],
            cols: b.cols.clone(),
        })
        .collect()
}

fn build(boxes: [(LungBox, [usize; 2]); 2], laterality: Laterality) -> Result<ZonePartition> {
    let [(first, c1), (second, c2)] = ordered_boxes(boxes, laterality)?;
    for (b, c) in [(&first, c1), (&second, c2)] {
        if !(b.rows.start < c[0] && c[0] < c[1] && c[1] < b.rows.end) {
            return param(format!(
                "row boundaries {c:?} must lie strictly inside rows {:?} in increasing order",
                b.rows
            ));
        }
    }
    let mut zones = bands(&first, c1, &ZONE_LABELS[..3]);
    zones.extend(bands(&second, c2, &ZONE_LABELS[3..]));
    Ok(ZonePartition { zones })
}

/// Splits each lung box into three equal-height bands; remainder rows go to
/// the bottom band.
pub fn default_partition(boxes: [LungBox; 2], laterality: Laterality) -> Result<ZonePartition> {
    let [a, b] = boxes;
    let cuts = |l: &LungBox| -> Result<[usize; 2]> {
        let h = l.rows.len();
        if h < 3 {
            return param(format!(
                "lung box rows {:?} are too short to split in three",
                l.rows
            ));
        }
        let third = h / 3;
        Ok([l.rows.start + third, l.rows.start + 2 * third])
    };
    let (ca, cb) = (cuts(&a)?, cuts(&b)?);
    build([(a, ca), (b, cb)], laterality)
}

/// Partition from explicit row boundaries, two per box (e.g. anatomical
/// landmark lines). `boundaries[i]` belongs to `boxes[i]`.
pub fn partition_with_boundaries(
    boxes: [LungBox; 2],
    boundaries: [[usize; 2]; 2],
    laterality: Laterality,
) -> Result<ZonePartition> {
    let [a, b] = boxes;
    build([(a, boundaries[0]), (b, boundaries[1])], laterality)
}

/// Signed per-pixel relevance for one output class.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceMap {
    pub grid: MaskGrid,
    pub target_class: String,
    pub probabilities: Option<Vec<f64>>,
}

impl RelevanceMap {
    pub fn new(grid: MaskGrid, target_class: impl Into<String>) -> Self {
        Self {
            grid,
            target_class: target_class.into(),
            probabilities: None,
        }
    }

    pub fn positive_total(&self) -> f64 {
        self.grid.values().iter().filter(|v| **v > 0.0).sum()
    }
}

/// Sum of positive relevance inside each zone, ordered A..F.
pub fn zone_relevance(map: &RelevanceMap, partition: &ZonePartition) -> Result<[f64; 6]> {
    let (rows, cols) = partition.extent();
    if rows > map.grid.height() || cols > map.grid.width() {
        return param(format!(
            "partition extends to {rows}x{cols} but the map is {}x{}",
            map.grid.height(),
            map.grid.width()
        ));
    }
    let mut out = [0.0; 6];
    for (o, zone) in out.iter_mut().zip(partition.zones()) {
        for r in zone.rows.clone() {
            for c in zone.cols.clone() {
                let v = map.grid.get(r, c);
                if v > 0.0 {
                    *o += v;
                }
            }
        }
    }
    Ok(out)
}

/// Spearman rank correlation (Pearson correlation of average ranks).
///
/// `Ok(None)` when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return param("Spearman correlation needs at least 3 pairs");
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return param("Spearman inputs must be finite");
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// One scored study with its heatmap and predicted target-class probability.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRecord {
    pub id: String,
    pub score: BrixiaScore,
    pub relevance: RelevanceMap,
    pub probability: f64,
}

impl StudyRecord {
    pub fn new(
        id: impl Into<String>,
        score: BrixiaScore,
        relevance: RelevanceMap,
        probability: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return param(format!("probability {probability} is outside [0, 1]"));
        }
        Ok(Self {
            id: id.into(),
            score,
            relevance,
            probability,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecordFlag {
    /// The zone with the most relevance is not among the highest-scored zones.
    TopZoneNotTopScored {
        top_zone: usize,
        top_scored: Vec<usize>,
    },
    /// No positive relevance in any zone.
    NoPositiveRelevance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordReport {
    pub id: String,
    pub zone_relevance: [f64; 6],
    /// Spearman correlation of partial scores with zone relevance.
    pub correlation: Option<f64>,
    pub flag: Option<RecordFlag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub records: Vec<RecordReport>,
    /// Spearman correlation of overall scores with predicted probabilities.
    pub score_probability_correlation: Option<f64>,
}

fn flag_for(score: &BrixiaScore, relevance: &[f64; 6]) -> Option<RecordFlag> {
    let max_rel = relevance.iter().copied().fold(0.0f64, f64::max);
    if max_rel <= 0.0 {
        return Some(RecordFlag::NoPositiveRelevance);
    }
    let top_zone = relevance
        .iter()
        .position(|&r| r == max_rel)
        .expect("max exists");
    let partials = score.partials();
    let max_score = *partials.iter().max().expect("six partials");
    let top_scored: Vec<usize> = (0..6).filter(|&i| partials[i] == max_score).collect();
    (!top_scored.contains(&top_zone)).then_some(RecordFlag::TopZoneNotTopScored {
        top_zone,
        top_scored,
    })
}

/// Per-record zone/score agreement and the across-record score/probability
/// correlation. `partitions` holds either one partition shared by every
/// record or one per record.
pub fn study_report(records: &[StudyRecord], partitions: &[ZonePartition]) -> Result<StudyReport> {
    if records.len() < 3 {
        return param(format!("need at least 3 records, got {}", records.len()));
    }
    if partitions.len() != 1 && partitions.len() != records.len() {
        return Err(Error::Dimension(format!(
            "{} partitions for {} records",
            partitions.len(),
            records.len()
        )));
    }
    let reports = records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let part = &partitions[if partitions.len() == 1 { 0 } else { i }];
            let zones = zone_relevance(&rec.relevance, part)?;
            let partials: Vec<f64> = rec.score.partials().iter().map(|&p| p as f64).collect();
            Ok(RecordReport {
                id: rec.id.clone(),
                zone_relevance: zones,
                correlation: spearman(&partials, &zones)?,
                flag: flag_for(&rec.score, &zones),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let overall: Vec<f64> = records.iter().map(|r| r.score.overall() as f64).collect();
    let probs: Vec<f64> = records.iter().map(|r| r.probability).collect();
    Ok(StudyReport {
        records: reports,
        score_probability_correlation: spearman(&overall, &probs)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxes(h: usize) -> [LungBox; 2] {
        [
            LungBox {
                rows: 0..h,
                cols: 0..4,
            },
            LungBox {
                rows: 0..h,
                cols: 4..8,
            },
        ]
    }

    fn map(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> RelevanceMap {
        let values = (0..h * w).map(|i| f(i / w, i % w)).collect();
        RelevanceMap::new(MaskGrid::new(h, w, values).unwrap(), "Covid-19")
    }

    #[test]
    fn overall_examples() {
        assert_eq!(overall_score(&[0; 6]).unwrap(), 0);
        assert_eq!(overall_score(&[3; 6]).unwrap(), 18);
        assert_eq!(overall_score(&[1, 0, 0, 0, 0, 0]).unwrap(), 1);
        assert!(overall_score(&[4, 0, 0, 0, 0, 0]).is_err());
        assert!(overall_score(&[1, 1]).is_err());
    }

    #[test]
    fn equal_thirds() {
        let p = default_partition(
            [
                LungBox {
                    rows: 0..90,
                    cols: 0..10,
                },
                LungBox {
                    rows: 0..90,
                    cols: 20..30,
                },
            ],
            Laterality::default(),
        )
        .unwrap();
        let rows: Vec<_> = p.zones()[..3].iter().map(|z| z.rows.clone()).collect();
        assert_eq!(rows, vec![0..30, 30..60, 60..90]);
    }

    #[test]
    fn remainder_goes_to_bottom_band() {
        let p = default_partition(boxes(10), Laterality::default()).unwrap();
        let heights: Vec<_> = p.zones().iter().map(|z| z.rows.len()).collect();
        assert_eq!(heights, vec![3, 3, 4, 3, 3, 4]);
    }

    #[test]
    fn six_disjoint_zones_tile_boxes() {
        let p = default_partition(boxes(11), Laterality::default()).unwrap();
        assert_eq!(p.zones().len(), 6);
        let mut seen = [0u8; 11 * 8];
        for z in p.zones() {
            for r in z.rows.clone() {
                for c in z.cols.clone() {
                    seen[r * 8 + c] += 1;
                }
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
        let labels: String = p.zones().iter().map(|z| z.label).collect();
        assert_eq!(labels, "ABCDEF");
    }

    #[test]
    fn laterality_swaps_sides() {
        let [a, b] = boxes(9);
        let left = default_partition([b.clone(), a.clone()], Laterality::AbcImageLeft).unwrap();
        assert_eq!(left.zones()[0].cols, 0..4);
        let right = default_partition([a, b], Laterality::AbcImageRight).unwrap();
        assert_eq!(right.zones()[0].cols, 4..8);
        assert_eq!(right.zones()[3].cols, 0..4);
    }

    #[test]
    fn partition_errors() {
        assert!(default_partition(boxes(2), Laterality::default()).is_err());
        let overlap = [
            LungBox {
                rows: 0..9,
                cols: 0..5,
            },
            LungBox {
                rows: 0..9,
                cols: 4..8,
            },
        ];
        assert!(default_partition(overlap, Laterality::default()).is_err());
        assert!(
            partition_with_boundaries(boxes(9), [[3, 3], [3, 6]], Laterality::default()).is_err()
        );
        let explicit =
            partition_with_boundaries(boxes(9), [[2, 7], [4, 5]], Laterality::default()).unwrap();
        assert_eq!(explicit.zones()[1].rows, 2..7);
        assert_eq!(explicit.zones()[4].rows, 4..5);
    }

    #[test]
    fn zone_relevance_examples() {
        let p = default_partition(boxes(9), Laterality::default()).unwrap();
        assert_eq!(
            zone_relevance(&map(9, 8, |_, _| 1.0), &p).unwrap(),
            [12.0; 6]
        );
        assert_eq!(
            zone_relevance(&map(9, 8, |_, _| -1.0), &p).unwrap(),
            [0.0; 6]
        );
        let zone_b = &p.zones()[1];
        let only_b = map(9, 8, |r, c| {
            if zone_b.rows.contains(&r) && zone_b.cols.contains(&c) {
                1.0
            } else {
                -0.5
            }
        });
        let z = zone_relevance(&only_b, &p).unwrap();
        assert_eq!(z, [0.0, zone_b.pixel_count() as f64, 0.0, 0.0, 0.0, 0.0]);
        assert!(zone_relevance(&map(8, 8, |_, _| 1.0), &p).is_err());
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(),
            Some(1.0)
        );
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]).unwrap(),
            Some(-1.0)
        );
        let tied = spearman(&[1.0, 2.0, 2.0, 4.0], &[3.0, 5.0, 5.0, 9.0])
            .unwrap()
            .unwrap();
        assert!((tied - 1.0).abs() < 1e-15);
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), None);
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn spearman_matches_rank_table() {
        // Hand-computed: ranks x = [1,2,3,4,5], y = [2,1,4,3,5]; sum d^2 = 4,
        // rho = 1 - 6*4/(5*24) = 0.8.
        let r = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.2, 0.1, 0.4, 0.3, 0.5])
            .unwrap()
            .unwrap();
        assert!((r - 0.8).abs() < 1e-12);
    }

    fn record(id: &str, partials: [u8; 6], prob: f64, rel: RelevanceMap) -> StudyRecord {
        StudyRecord::new(id, BrixiaScore::new(partials).unwrap(), rel, prob).unwrap()
    }

    fn proportional_map(p: &ZonePartition, partials: [u8; 6]) -> RelevanceMap {
        let zones = p.zones().to_vec();
        map(9, 8, move |r, c| {
            zones
                .iter()
                .position(|z| z.rows.contains(&r) && z.cols.contains(&c))
                .map_or(0.0, |i| partials[i] as f64 * 0.1)
        })
    }

    #[test]
    fn proportional_relevance_correlates_perfectly() {
        let p = default_partition(boxes(9), Laterality::default()).unwrap();
        let scores = [[0, 1, 2, 3, 1, 0], [3, 2, 1, 0, 0, 1], [1, 2, 3, 1, 2, 3]];
        let records: Vec<_> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| {
                record(
                    &format!("r{i}"),
                    *s,
                    0.5 + i as f64 * 0.1,
                    proportional_map(&p, *s),
                )
            })
            .collect();
        let report = study_report(&records, &[p]).unwrap();
        for r in &report.records {
            assert!((r.correlation.unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(r.flag, None);
        }
    }

    #[test]
    fn identical_overall_scores_are_undefined() {
        let p = default_partition(boxes(9), Laterality::default()).unwrap();
        let records: Vec<_> = (0..3)
            .map(|i| {
                record(
                    &i.to_string(),
                    [1, 1, 0, 0, 0, 0],
                    0.2 * i as f64,
                    map(9, 8, |_, _| 1.0),
                )
            })
            .collect();
        let report = study_report(&records, &[p]).unwrap();
        assert_eq!(report.score_probability_correlation, None);
        // Uniform relevance is constant across zones.
        assert_eq!(report.records[0].correlation, None);
    }

    #[test]
    fn flags() {
        let p = default_partition(boxes(9), Laterality::default()).unwrap();
        let zone_f = p.zones()[5].clone();
        let only_f = map(9, 8, move |r, c| {
            if zone_f.rows.contains(&r) && zone_f.cols.contains(&c) {
                1.0
            } else {
                0.0
            }
        });
        let records = vec![
            record("a", [0, 3, 1, 0, 0, 0], 0.3, only_f),
            record("b", [0, 0, 0, 0, 0, 0], 0.4, map(9, 8, |_, _| -1.0)),
            record(
                "c",
                [0, 0, 0, 0, 0, 3],
                0.5,
                proportional_map(&p, [0, 0, 0, 0, 0, 3]),
            ),
        ];
        let report = study_report(&records, &[p.clone(), p.clone(), p]).unwrap();
        assert_eq!(
            report.records[0].flag,
            Some(RecordFlag::TopZoneNotTopScored {
                top_zone: 5,
                top_scored: vec![1]
            })
        );
        assert_eq!(
            report.records[1].flag,
            Some(RecordFlag::NoPositiveRelevance)
        );
        assert_eq!(report.records[2].flag, None);
    }

    #[test]
    fn report_errors() {
        let p = default_partition(boxes(9), Laterality::default()).unwrap();
        let r = record("a", [0; 6], 0.5, map(9, 8, |_, _| 1.0));
        assert!(study_report(&[r.clone(), r.clone()], std::slice::from_ref(&p)).is_err());
        assert!(study_report(&[r.clone(), r.clone(), r.clone()], &[p.clone(), p]).is_err());
        assert!(StudyRecord::new(
            "x",
            BrixiaScore::new([0; 6]).unwrap(),
            map(1, 1, |_, _| 0.0),
            1.5
        )
        .is_err());
    }
}
