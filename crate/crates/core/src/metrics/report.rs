//! Delimited text table of evaluation results, one row per (video, style).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    TrackReport, INTER_ANNOTATOR_IOU, REFERENCE_SPEEDUP, REFERENCE_TOOL_HQ_PER_SECOND, REFERENCE_XCLICK_HQ_PER_SECOND,
};
use crate::scalar::Scalar;

/// Column order of the report table.
pub const REPORT_HEADER: [&str; 17] = [
    "video",
    "style",
    "frames",
    "annotations",
    "fraction_annotated",
    "mean_point_discrepancy",
    "mean_iou",
    "accuracy_at_0_5",
    "accuracy_at_0_7",
    "time_per_annotation_s",
    "time_per_label_s",
    "hq_boxes_per_second",
    "ref_inter_annotator_iou",
    "ref_tool_hq_boxes_per_second",
    "ref_xclick_hq_boxes_per_second",
    "ref_speedup",
    "speedup_vs_ref_xclick",
];

/// One table row. Box columns are empty for point-only styles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub video: String,
    pub style: String,
    pub frames: usize,
    pub annotations: usize,
    pub fraction_annotated: f64,
    pub mean_point_discrepancy: f64,
    pub mean_iou: Option<f64>,
    pub accuracy_at_0_5: Option<f64>,
    pub accuracy_at_0_7: Option<f64>,
    pub time_per_annotation_s: f64,
    pub time_per_label_s: f64,
    pub hq_boxes_per_second: Option<f64>,
    pub ref_inter_annotator_iou: f64,
    pub ref_tool_hq_boxes_per_second: f64,
    pub ref_xclick_hq_boxes_per_second: f64,
    pub ref_speedup: f64,
    /// Measured high-quality rate over the reference extreme-click rate.
    pub speedup_vs_ref_xclick: Option<f64>,
}

impl<T: Scalar> From<&TrackReport<T>> for ReportRow {
    fn from(r: &TrackReport<T>) -> Self {
        let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
        let hq = r.hq_boxes_per_second.map(f);
        ReportRow {
            video: r.video.clone(),
            style: r.style.clone(),
            frames: r.frame_count,
            annotations: r.annotation_count,
            fraction_annotated: f(r.fraction_annotated),
            mean_point_discrepancy: f(r.point_discrepancy.mean),
            mean_iou: r.iou.as_ref().map(|s| f(s.mean)),
            accuracy_at_0_5: r.accuracy_at_0_5.map(f),
            accuracy_at_0_7: r.accuracy_at_0_7.map(f),
            time_per_annotation_s: f(r.time_per_annotation),
            time_per_label_s: f(r.time_per_label),
            hq_boxes_per_second: hq,
            ref_inter_annotator_iou: INTER_ANNOTATOR_IOU,
            ref_tool_hq_boxes_per_second: REFERENCE_TOOL_HQ_PER_SECOND,
            ref_xclick_hq_boxes_per_second: REFERENCE_XCLICK_HQ_PER_SECOND,
            ref_speedup: REFERENCE_SPEEDUP,
            speedup_vs_ref_xclick: hq.map(|v| v / REFERENCE_XCLICK_HQ_PER_SECOND),
        }
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}

/// Writes a comma-separated table with the [`REPORT_HEADER`] columns.
pub fn emit_report<T: Scalar>(reports: &[TrackReport<T>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(REPORT_HEADER).map_err(|e| csv_err(path, e))?;
    for r in reports {
        w.serialize(ReportRow::from(r)).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().ne(REPORT_HEADER) {
        return Err(Error::Parse(format!("{}: unexpected report header", path.display())));
    }
    r.deserialize()
        .collect::<std::result::Result<Vec<ReportRow>, _>>()
        .map_err(|e| csv_err(path, e))
}
