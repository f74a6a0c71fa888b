//! Label-quality and throughput metrics, plus the synthetic fixtures and the
//! scripted operator used to exercise them without a human in the loop.

mod fixture;
mod operator;
mod report;
mod style;

pub use fixture::{generate_fixture, FixtureSpec, Segment, SyntheticFixture};
pub use operator::{simulate_operator, OperatorPolicy, Schedule};
pub use report::{emit_report, read_report, ReportRow, REPORT_HEADER};
pub use style::{AnnotationStyle, ClickMode, Presentation, StyleFlags, StylePreset};

use serde::{Deserialize, Serialize};

use crate::descriptor::box_at;
use crate::error::{Error, Result};
use crate::geom::{BBox, Point};
use crate::scalar::Scalar;
use crate::store::{DescriptorCache, Event, SessionFile};
use crate::track::{refresh_track, TrackEntry};

/// Average inter-annotator IoU ceiling reported for extreme clicking on
/// Pascal VOC; mean IoU above it is not expected.
pub const INTER_ANNOTATOR_IOU: f64 = 0.88;
/// Reference throughput of the assisted tool, high-quality boxes per second.
pub const REFERENCE_TOOL_HQ_PER_SECOND: f64 = 0.75;
/// Reference throughput of extreme clicking, boxes per second.
pub const REFERENCE_XCLICK_HQ_PER_SECOND: f64 = 0.14;
/// Reference speed-up of the assisted tool over extreme clicking.
pub const REFERENCE_SPEEDUP: f64 = 5.3;
/// IoU at or above which a box counts as high quality.
pub const HQ_IOU_THRESHOLD: f64 = 0.7;
/// Longest gap between two events that counts as active time.
pub const IDLE_CAP_MS: u64 = 30_000;

/// One frame's label: a point and, for styles that produce them, a box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Label<T> {
    pub point: Point<T>,
    #[serde(rename = "box")]
    pub bbox: Option<BBox<T>>,
}

impl<T: Scalar> From<&TrackEntry<T>> for Label<T> {
    fn from(e: &TrackEntry<T>) -> Self {
        Label {
            point: e.point,
            bbox: Some(e.bbox),
        }
    }
}

/// Per-frame values and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series<T> {
    pub values: Vec<T>,
    pub mean: T,
}

impl<T: Scalar> Series<T> {
    fn from_values(values: Vec<T>) -> Self {
        let mean = if values.is_empty() {
            T::zero()
        } else {
            values.iter().fold(T::zero(), |a, &v| a + v) / T::cast(values.len())
        };
        Series { values, mean }
    }
}

fn aligned<T>(labels: &[Label<T>], truth: &[Label<T>]) -> Result<()> {
    if labels.len() != truth.len() {
        return Err(Error::Alignment {
            labels: labels.len(),
            truth: truth.len(),
        });
    }
    Ok(())
}

/// Per-frame normalized distance between label and truth points.
pub fn point_discrepancy<T: Scalar>(labels: &[Label<T>], truth: &[Label<T>]) -> Result<Series<T>> {
    aligned(labels, truth)?;
    let values = labels
        .iter()
        .zip(truth)
        .map(|(l, t)| l.point.distance(&t.point))
        .collect();
    Ok(Series::from_values(values))
}

/// Per-frame IoU against the truth boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxAgreement<T> {
    pub iou: Series<T>,
    pub inter_annotator_ceiling: f64,
}

fn paired_boxes<'a, T: Scalar>(
    labels: &'a [Label<T>],
    truth: &'a [Label<T>],
) -> Result<impl Iterator<Item = (BBox<T>, BBox<T>)> + 'a> {
    aligned(labels, truth)?;
    if labels.iter().any(|l| l.bbox.is_none()) {
        return Err(Error::NoBoxes("labels".into()));
    }
    if truth.iter().any(|l| l.bbox.is_none()) {
        return Err(Error::NoBoxes("ground truth".into()));
    }
    Ok(labels
        .iter()
        .zip(truth)
        .map(|(l, t)| (l.bbox.expect("checked"), t.bbox.expect("checked"))))
}

pub fn box_agreement<T: Scalar>(labels: &[Label<T>], truth: &[Label<T>]) -> Result<BoxAgreement<T>> {
    let values = paired_boxes(labels, truth)?.map(|(a, b)| a.iou(&b)).collect();
    Ok(BoxAgreement {
        iou: Series::from_values(values),
        inter_annotator_ceiling: INTER_ANNOTATOR_IOU,
    })
}

/// Fraction of frames whose label box reaches `threshold` IoU with the truth.
pub fn accuracy_at<T: Scalar>(labels: &[Label<T>], truth: &[Label<T>], threshold: T) -> Result<T> {
    if !(threshold > T::zero() && threshold < T::one()) {
        return Err(Error::Range(format!("IoU threshold {threshold} not in (0, 1)")));
    }
    let total = labels.len();
    let hits = paired_boxes(labels, truth)?
        .filter(|(a, b)| a.iou(b) >= threshold)
        .count();
    if total == 0 {
        return Ok(T::zero());
    }
    Ok(T::cast(hits) / T::cast(total))
}

/// Active annotation time in seconds: the sum of gaps between consecutive
/// events, each gap capped at [`IDLE_CAP_MS`].
pub fn active_time_s<T: Scalar>(events: &[Event]) -> T {
    let ms: u64 = events
        .windows(2)
        .map(|w| w[1].t_ms.saturating_sub(w[0].t_ms).min(IDLE_CAP_MS))
        .sum();
    T::cast(ms) / T::lit(1000.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Throughput<T> {
    pub active_time_s: T,
    pub time_per_annotation: T,
    pub time_per_label: T,
    pub fraction_annotated: T,
    /// `None` when the labels carry no boxes.
    pub hq_boxes_per_second: Option<T>,
}

/// Annotation-time accounting of a session against its labels.
pub fn throughput<T: Scalar>(
    session: &SessionFile,
    labels: &[Label<T>],
    truth: &[Label<T>],
    hq_threshold: T,
) -> Result<Throughput<T>> {
    aligned(labels, truth)?;
    let active: T = active_time_s(&session.events);
    if session.events.is_empty() || active <= T::zero() {
        return Err(Error::DegenerateTiming);
    }
    let annotations = session.annotations.len();
    let hq_boxes_per_second = match paired_boxes(labels, truth) {
        Ok(pairs) => {
            let hq = pairs.filter(|(a, b)| a.iou(b) >= hq_threshold).count();
            Some(T::cast(hq) / active)
        }
        Err(Error::NoBoxes(_)) => None,
        Err(e) => return Err(e),
    };
    let time_per_annotation = if annotations == 0 {
        T::infinity()
    } else {
        active / T::cast(annotations)
    };
    let frames = session.frame_count.max(1);
    Ok(Throughput {
        active_time_s: active,
        time_per_annotation,
        time_per_label: active / T::cast(labels.len().max(1)),
        fraction_annotated: T::cast(annotations) / T::cast(frames),
        hq_boxes_per_second,
    })
}

/// Evaluation of one labelled video against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackReport<T> {
    pub video: String,
    pub style: String,
    pub frame_count: usize,
    pub annotation_count: usize,
    pub point_discrepancy: Series<T>,
    /// Absent for styles whose labels have no boxes.
    pub iou: Option<Series<T>>,
    pub accuracy_at_0_5: Option<T>,
    pub accuracy_at_0_7: Option<T>,
    pub fraction_annotated: T,
    pub time_per_annotation: T,
    pub time_per_label: T,
    pub hq_boxes_per_second: Option<T>,
}

impl<T: Scalar> TrackReport<T> {
    pub fn evaluate(
        video: impl Into<String>,
        session: &SessionFile,
        labels: &[Label<T>],
        truth: &[Label<T>],
    ) -> Result<Self> {
        let point_discrepancy = point_discrepancy(labels, truth)?;
        let (iou, acc5, acc7) = match box_agreement(labels, truth) {
            Ok(agreement) => (
                Some(agreement.iou),
                Some(accuracy_at(labels, truth, T::lit(0.5))?),
                Some(accuracy_at(labels, truth, T::lit(0.7))?),
            ),
            Err(Error::NoBoxes(_)) => (None, None, None),
            Err(e) => return Err(e),
        };
        let tp = throughput(session, labels, truth, T::lit(HQ_IOU_THRESHOLD))?;
        Ok(TrackReport {
            video: video.into(),
            style: session.style.name().to_string(),
            frame_count: labels.len(),
            annotation_count: session.annotations.len(),
            point_discrepancy,
            iou,
            accuracy_at_0_5: acc5,
            accuracy_at_0_7: acc7,
            fraction_annotated: tp.fraction_annotated,
            time_per_annotation: tp.time_per_annotation,
            time_per_label: tp.time_per_label,
            hq_boxes_per_second: tp.hq_boxes_per_second,
        })
    }
}

/// Labels a session yields for every frame.
///
/// Fully annotated sessions use their annotations directly (extreme-click
/// boxes, or the cached box prediction at the clicked point). Otherwise the
/// style must support autotrack and the track fills the gaps.
pub fn session_labels(session: &SessionFile, cache: &DescriptorCache) -> Result<Vec<Label<f64>>> {
    let n = session.frame_count;
    if n != cache.frame_count() {
        return Err(Error::Schema(format!(
            "session covers {n} frames, cache holds {}",
            cache.frame_count()
        )));
    }
    if session.annotations.len() == n {
        let mut labels = vec![None; n];
        for a in &session.annotations {
            let bbox = match a.extreme_box() {
                Some(b) => Some(b),
                None if session.style.produces_boxes() => Some(box_at(cache.boxes(a.frame), &a.point)?),
                None => None,
            };
            labels[a.frame] = Some(Label { point: a.point, bbox });
        }
        return labels
            .into_iter()
            .enumerate()
            .map(|(f, l)| l.ok_or_else(|| Error::Integrity(format!("frame {f} unlabeled"))))
            .collect();
    }
    if !session.style.flags().autotrack {
        return Err(Error::Validation(format!(
            "style '{}' cannot label the {} unannotated frames",
            session.style,
            n - session.annotations.len()
        )));
    }
    let track = refresh_track(cache, &session.annotations)?;
    Ok(track.iter().map(Label::from).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::EventKind;

    fn label(x: f64, y: f64, half: f64) -> Label<f64> {
        Label {
            point: Point::new(x, y).unwrap(),
            bbox: Some(BBox::new(x - half, y - half, x + half, y + half).unwrap()),
        }
    }

    fn shifted(l: &Label<f64>, dx: f64) -> Label<f64> {
        let b = l.bbox.unwrap();
        Label {
            point: Point::new(l.point.x + dx, l.point.y).unwrap(),
            bbox: Some(BBox::new(b.x_min + dx, b.y_min, b.x_max + dx, b.y_max).unwrap()),
        }
    }

    #[test]
    fn discrepancy_examples() {
        let truth: Vec<_> = (0..5).map(|i| label(0.1 + 0.05 * i as f64, 0.2, 0.05)).collect();
        let same = point_discrepancy(&truth, &truth).unwrap();
        assert!(same.values.iter().all(|&v| v == 0.0));
        let off: Vec<_> = truth
            .iter()
            .map(|l| Label {
                point: Point::new(l.point.x + 0.3, l.point.y + 0.4).unwrap(),
                bbox: l.bbox,
            })
            .collect();
        let d = point_discrepancy(&off, &truth).unwrap();
        assert!(d.values.iter().all(|&v| (v - 0.5).abs() < 1e-12));
        assert!(matches!(
            point_discrepancy(&off[..3], &truth),
            Err(Error::Alignment { labels: 3, truth: 5 })
        ));
    }

    #[test]
    fn agreement_identity_and_ceiling() {
        let truth: Vec<_> = (0..4).map(|i| label(0.3, 0.1 + 0.2 * i as f64, 0.1)).collect();
        let a = box_agreement(&truth, &truth).unwrap();
        assert!(a.iou.values.iter().all(|&v| v == 1.0));
        assert_eq!(a.iou.mean, 1.0);
        assert_eq!(a.inter_annotator_ceiling, 0.88);
    }

    #[test]
    fn click_labels_have_no_boxes() {
        let truth = vec![label(0.5, 0.5, 0.1)];
        let points = vec![Label {
            point: truth[0].point,
            bbox: None,
        }];
        assert!(matches!(box_agreement(&points, &truth), Err(Error::NoBoxes(_))));
        assert!(matches!(accuracy_at(&points, &truth, 0.5), Err(Error::NoBoxes(_))));
    }

    #[test]
    fn accuracy_counts() {
        // box of width 0.2 shifted by dx has IoU (0.2 - dx) / (0.2 + dx)
        let truth: Vec<_> = (0..10).map(|_| label(0.5, 0.5, 0.1)).collect();
        let dx_06 = 0.2 * (1.0 - 0.6) / (1.0 + 0.6);
        let dx_09 = 0.2 * (1.0 - 0.9) / (1.0 + 0.9);
        let labels: Vec<_> = truth
            .iter()
            .enumerate()
            .map(|(i, t)| shifted(t, if i % 2 == 0 { dx_06 } else { dx_09 }))
            .collect();
        assert_eq!(accuracy_at(&labels, &truth, 0.5).unwrap(), 1.0);
        assert_eq!(accuracy_at(&labels, &truth, 0.7).unwrap(), 0.5);
        assert_eq!(accuracy_at(&truth, &truth, 0.99).unwrap(), 1.0);
        assert!(accuracy_at(&truth, &truth, 1.0).is_err());
        assert!(accuracy_at(&truth, &truth, 0.0).is_err());
    }

    fn timed_session(times: &[u64], frames: usize, annotations: usize) -> SessionFile {
        let mut s = SessionFile::new(StylePreset::Autotrack.style(), frames, "c", 0);
        s.events = times
            .iter()
            .map(|&t| Event {
                t_ms: t,
                kind: EventKind::Refresh { frames },
            })
            .collect();
        let p = Point::new(0.5, 0.5).unwrap();
        s.annotations = (0..annotations)
            .map(|f| crate::track::Annotation::click(f, p, 0))
            .collect();
        s
    }

    #[test]
    fn throughput_division() {
        let s = timed_session(&[0, 60_000, 120_000, 120_000 + 30_000, 150_000 + 60_000], 300, 30);
        // gaps: 30 s (capped 60), 30 s (capped 60), 30 s, 30 s (capped 60) -> 120 s
        assert_eq!(active_time_s::<f64>(&s.events), 120.0);
        let truth: Vec<_> = (0..300).map(|_| label(0.5, 0.5, 0.1)).collect();
        let tp = throughput(&s, &truth, &truth, 0.7).unwrap();
        assert_eq!(tp.time_per_annotation, 4.0);
        assert_eq!(tp.time_per_label, 0.4);
        assert_eq!(tp.fraction_annotated, 0.1);
        assert_eq!(tp.hq_boxes_per_second, Some(2.5));
    }

    #[test]
    fn zero_elapsed_time() {
        let s = timed_session(&[5, 5], 2, 1);
        let truth: Vec<_> = (0..2).map(|_| label(0.5, 0.5, 0.1)).collect();
        assert!(matches!(
            throughput(&s, &truth, &truth, 0.7),
            Err(Error::DegenerateTiming)
        ));
        let empty = timed_session(&[], 2, 1);
        assert!(matches!(
            throughput(&empty, &truth, &truth, 0.7),
            Err(Error::DegenerateTiming)
        ));
    }
}
