//! Autotrack: propagate sparse point annotations to every frame, plus the
//! sparkline series and jump targets derived from a track.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::{box_at, descriptor_at, interpolate_descriptor, nearest_descriptor_location, Descriptor};
use crate::error::{Error, Result};
use crate::geom::{box_from_extreme_points, BBox, Point};
use crate::scalar::Scalar;
use crate::store::DescriptorCache;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClickSource {
    Click,
    #[serde(rename = "xclick")]
    XClick,
}

/// A label produced directly by the operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation<T> {
    pub frame: usize,
    pub point: Point<T>,
    pub source: ClickSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extreme_points: Option<[Point<T>; 4]>,
    pub timestamp_ms: u64,
}

impl<T: Scalar> Annotation<T> {
    pub fn click(frame: usize, point: Point<T>, timestamp_ms: u64) -> Self {
        Annotation {
            frame,
            point,
            source: ClickSource::Click,
            extreme_points: None,
            timestamp_ms,
        }
    }

    /// Extreme-click annotation; its point is the center of the box the four
    /// clicks span.
    pub fn xclick(frame: usize, extreme_points: [Point<T>; 4], timestamp_ms: u64) -> Result<Self> {
        let bbox = box_from_extreme_points(&extreme_points)?;
        Ok(Annotation {
            frame,
            point: bbox.center(),
            source: ClickSource::XClick,
            extreme_points: Some(extreme_points),
            timestamp_ms,
        })
    }

    /// The box drawn by the operator, for extreme-click annotations.
    pub fn extreme_box(&self) -> Option<BBox<T>> {
        self.extreme_points
            .as_ref()
            .and_then(|pts| box_from_extreme_points(pts).ok())
    }

    /// Checks that extreme points are present exactly for xclick annotations.
    pub fn validate(&self) -> Result<()> {
        match (self.source, &self.extreme_points) {
            (ClickSource::XClick, None) => Err(Error::Integrity(format!(
                "xclick annotation on frame {} has no extreme points",
                self.frame
            ))),
            (ClickSource::Click, Some(_)) => Err(Error::Integrity(format!(
                "click annotation on frame {} carries extreme points",
                self.frame
            ))),
            _ if !self.point.is_valid() => Err(Error::Integrity(format!(
                "annotation on frame {} lies outside the unit square",
                self.frame
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Annotated,
    Predicted,
}

/// Label for one frame of a refreshed track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackEntry<T> {
    pub frame: usize,
    pub point: Point<T>,
    #[serde(rename = "box")]
    pub bbox: BBox<T>,
    pub provenance: Provenance,
    pub match_distance: T,
}

/// Frame-to-frame change of a track: point displacement and box-area change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sparkline<T> {
    pub location_delta: Vec<T>,
    pub area_delta: Vec<T>,
}

/// Descriptor each frame is matched against.
enum Target<'a, T> {
    Annotated(&'a Annotation<T>),
    Held(&'a Descriptor<T>),
    Between {
        left: (usize, &'a Descriptor<T>),
        right: (usize, &'a Descriptor<T>),
    },
}

/// Extends the annotations to a label on every frame of `cache`.
///
/// Frames between two annotations match the linearly interpolated descriptor;
/// frames before the first or after the last annotation match that
/// annotation's descriptor held constant. Frames are matched in parallel.
pub fn refresh_track<T: Scalar>(cache: &DescriptorCache, annotations: &[Annotation<T>]) -> Result<Vec<TrackEntry<T>>> {
    if annotations.is_empty() {
        return Err(Error::EmptyAnnotations);
    }
    let n = cache.frame_count();
    let mut keys: Vec<&Annotation<T>> = annotations.iter().collect();
    keys.sort_by_key(|a| a.frame);
    for pair in keys.windows(2) {
        if pair[0].frame == pair[1].frame {
            return Err(Error::Integrity(format!("two annotations on frame {}", pair[0].frame)));
        }
    }
    if let Some(last) = keys.last().filter(|a| a.frame >= n) {
        return Err(Error::Range(format!(
            "annotation on frame {} but the cache has {n} frames",
            last.frame
        )));
    }
    let descriptors = keys
        .iter()
        .map(|a| descriptor_at(cache.descriptors(a.frame), &a.point))
        .collect::<Result<Vec<Descriptor<T>>>>()?;

    // slot[k] = index of the first keyframe at or after frame k
    let target_for = |frame: usize| -> Target<'_, T> {
        let slot = keys.partition_point(|a| a.frame < frame);
        if slot < keys.len() && keys[slot].frame == frame {
            Target::Annotated(keys[slot])
        } else if slot == 0 {
            Target::Held(&descriptors[0])
        } else if slot == keys.len() {
            Target::Held(&descriptors[keys.len() - 1])
        } else {
            Target::Between {
                left: (keys[slot - 1].frame, &descriptors[slot - 1]),
                right: (keys[slot].frame, &descriptors[slot]),
            }
        }
    };

    (0..n)
        .into_par_iter()
        .map(|frame| {
            let boxes = cache.boxes(frame);
            let (point, provenance, match_distance) = match target_for(frame) {
                Target::Annotated(a) => (a.point, Provenance::Annotated, T::zero()),
                Target::Held(d) => {
                    let (p, dist) = nearest_descriptor_location(cache.descriptors(frame), d)?;
                    (p, Provenance::Predicted, dist)
                }
                Target::Between { left, right } => {
                    let d = interpolate_descriptor(left.1, right.1, left.0, right.0, frame)?;
                    let (p, dist) = nearest_descriptor_location(cache.descriptors(frame), &d)?;
                    (p, Provenance::Predicted, dist)
                }
            };
            Ok(TrackEntry {
                frame,
                point,
                bbox: box_at(boxes, &point)?,
                provenance,
                match_distance,
            })
        })
        .collect()
}

pub fn compute_sparklines<T: Scalar>(track: &[TrackEntry<T>]) -> Result<Sparkline<T>> {
    if track.is_empty() {
        return Err(Error::EmptyTrack);
    }
    let mut location_delta = Vec::with_capacity(track.len());
    let mut area_delta = Vec::with_capacity(track.len());
    location_delta.push(T::zero());
    area_delta.push(T::zero());
    for pair in track.windows(2) {
        location_delta.push(pair[1].point.distance(&pair[0].point));
        area_delta.push((pair[1].bbox.area() - pair[0].bbox.area()).abs());
    }
    Ok(Sparkline {
        location_delta,
        area_delta,
    })
}

/// Unannotated frame where the track moves the most; ties go to the
/// earliest frame. `None` when every frame is annotated.
pub fn smartjump_target<T: Scalar>(track: &[TrackEntry<T>], annotated_frames: &BTreeSet<usize>) -> Option<usize> {
    let spark = compute_sparklines(track).ok()?;
    let mut best: Option<(usize, T)> = None;
    for (frame, &delta) in spark.location_delta.iter().enumerate() {
        if annotated_frames.contains(&frame) {
            continue;
        }
        if best.is_none_or(|(_, b)| delta > b) {
            best = Some((frame, delta));
        }
    }
    best.map(|(frame, _)| frame)
}

/// Uniformly drawn unannotated frame from a seeded generator.
pub fn random_jump_target(frame_count: usize, annotated_frames: &BTreeSet<usize>, rng_seed: u64) -> Option<usize> {
    let open: Vec<usize> = (0..frame_count).filter(|f| !annotated_frames.contains(f)).collect();
    if open.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Some(open[rng.random_range(0..open.len())])
}
