//! Classifier evaluation from confusion matrices and scored predictions.
//!
//! The crate covers deterministic confusion-matrix metrics, a conjugate
//! Dirichlet–multinomial posterior over those metrics with highest density
//! interval summaries, Hand & Till multi-class AUC, thresholded IoU for
//! segmentation masks, and a comparison between Brixia severity scores and
//! zone-aggregated relevance heatmaps.

pub mod auc;
pub mod brixia;
pub mod confusion;
pub mod error;
pub mod hdi;
pub mod metrics;
pub mod metropolis;
pub mod posterior;
pub mod rank;
pub mod sampling;
pub mod segmetrics;

pub use auc::{binary_auc, hand_till_auc, HandTillAuc, PairwiseAuc, ScoredSample};
pub use brixia::{
    default_partition, overall_score, partition_with_boundaries, spearman, study_report,
    zone_relevance, BrixiaScore, Laterality, LungBox, RecordFlag, RelevanceMap, StudyRecord,
    StudyReport, Zone, ZonePartition,
};
pub use confusion::ConfusionMatrix;
pub use error::{Error, Result};
pub use hdi::{hdi, Interval};
pub use metrics::{MetricId, MetricReport};
pub use metropolis::{metropolis_reference, MetropolisConfig, MetropolisRun};
pub use posterior::{
    estimate, histogram, EstimateOptions, Estimation, HistogramBin, ParameterDraw, PosteriorModel,
    PosteriorSummary, PriorConfig,
};
pub use sampling::{sample_dirichlet, sample_gamma, DirichletParams, RandomStream};
pub use segmetrics::{binarize, iou, mean_iou, BinaryMask, MaskGrid};
