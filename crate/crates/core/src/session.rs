//! Live annotation session: the state machine behind the HTTP service.
//!
//! Every mutating call appends exactly one event to the session log. Calls
//! for features the style disables fail before touching any state.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::descriptor::box_at;
use crate::error::{Error, Result};
use crate::geom::{BBox, Point};
use crate::metrics::{AnnotationStyle, ClickMode, Presentation, StyleFlags};
use crate::store::{save_session, DescriptorCache, Event, EventKind, SessionFile};
use crate::track::{
    compute_sparklines, random_jump_target, refresh_track, smartjump_target, Annotation, ClickSource, Provenance,
    Sparkline, TrackEntry,
};

/// Navigation request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpKind {
    /// An unannotated frame: the next one in presentation order for
    /// random-order styles, a seeded draw otherwise.
    Random,
    /// The unannotated frame where the track moves the most.
    Smart,
    NextAnnotated,
    PrevAnnotated,
    /// Move by ±1 or ±10 frames, clamped to the video.
    Step {
        delta: i64,
    },
    /// Timeline scrub to an explicit frame.
    Seek {
        frame: usize,
    },
}

/// Session clock in milliseconds.
pub trait Clock: Send {
    fn now_ms(&mut self) -> u64;
}

/// Monotonic clock continuing from `base_ms`.
#[derive(Debug, Clone)]
pub struct MonotonicClock {
    start: Instant,
    base_ms: u64,
}

impl MonotonicClock {
    pub fn starting_at(base_ms: u64) -> Self {
        MonotonicClock {
            start: Instant::now(),
            base_ms,
        }
    }
}

impl Clock for MonotonicClock {
    fn now_ms(&mut self) -> u64 {
        self.base_ms + self.start.elapsed().as_millis() as u64
    }
}

/// Clock that only moves when told to.
#[derive(Debug, Clone, Default)]
pub struct ManualClock {
    pub now: u64,
}

impl ManualClock {
    pub fn advance(&mut self, ms: u64) {
        self.now += ms;
    }
}

impl Clock for ManualClock {
    fn now_ms(&mut self) -> u64 {
        self.now
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotationView {
    pub point: Point<f64>,
    pub source: ClickSource,
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackView {
    pub point: Point<f64>,
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox<f64>>,
    pub provenance: Provenance,
    pub match_distance: f64,
}

/// Everything the viewport draws for one frame, already filtered by the
/// style flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameView {
    pub frame: usize,
    pub frame_count: usize,
    pub current_frame: usize,
    pub style: AnnotationStyle,
    pub flags: StyleFlags,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotation: Option<AnnotationView>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub partial_points: Vec<Point<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub track: Option<TrackView>,
    pub dirty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineView {
    pub frame_count: usize,
    pub current_frame: usize,
    pub annotated_frames: Vec<usize>,
    pub dirty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparklineView {
    #[serde(flatten)]
    pub series: Sparkline<f64>,
    pub dirty: bool,
}

/// Result of a track refresh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefreshSummary {
    pub track: Arc<Vec<TrackEntry<f64>>>,
    pub sparklines: Sparkline<f64>,
    pub dirty: bool,
}

/// Snapshot of the inputs of a refresh, runnable off the session lock.
#[derive(Debug, Clone)]
pub struct RefreshJob {
    cache: Arc<DescriptorCache>,
    annotations: Vec<Annotation<f64>>,
    revision: u64,
}

impl RefreshJob {
    pub fn run(&self) -> Result<Vec<TrackEntry<f64>>> {
        refresh_track(&self.cache, &self.annotations)
    }
}

pub struct Session<C: Clock = MonotonicClock> {
    file: SessionFile,
    cache: Arc<DescriptorCache>,
    clock: C,
    current: usize,
    /// Extreme-click points collected so far and the frame they belong to.
    partial: Option<(usize, Vec<Point<f64>>)>,
    track: Option<Arc<Vec<TrackEntry<f64>>>>,
    dirty: bool,
    revision: u64,
}

fn wall_clock_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl Session<MonotonicClock> {
    /// Fresh session on the real clock.
    pub fn create(
        style: AnnotationStyle,
        cache: Arc<DescriptorCache>,
        cache_ref: impl Into<String>,
        seed: u64,
    ) -> Self {
        let mut s = Session::with_clock(style, cache, cache_ref, seed, MonotonicClock::starting_at(0));
        s.file.wall_clock_epoch_ms = wall_clock_ms();
        s
    }

    /// Resumes a saved session; its clock continues after the last event.
    pub fn resume(file: SessionFile, cache: Arc<DescriptorCache>) -> Result<Self> {
        let last = file.events.last().map_or(0, |e| e.t_ms);
        Session::resume_with_clock(file, cache, MonotonicClock::starting_at(last))
    }
}

impl<C: Clock> Session<C> {
    pub fn with_clock(
        style: AnnotationStyle,
        cache: Arc<DescriptorCache>,
        cache_ref: impl Into<String>,
        seed: u64,
        clock: C,
    ) -> Self {
        let n = cache.frame_count();
        let mut file = SessionFile::new(style, n, cache_ref, seed);
        if style.presentation() == Presentation::RandomOrder {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            file.presentation_order = order;
        }
        let current = file.presentation_order.first().copied().unwrap_or(0);
        let mut s = Session {
            file,
            cache,
            clock,
            current,
            partial: None,
            track: None,
            dirty: false,
            revision: 0,
        };
        s.log(EventKind::Open { frame: current });
        s
    }

    pub fn resume_with_clock(file: SessionFile, cache: Arc<DescriptorCache>, clock: C) -> Result<Self> {
        file.validate()?;
        if file.frame_count != cache.frame_count() {
            return Err(Error::Schema(format!(
                "session covers {} frames, cache holds {}",
                file.frame_count,
                cache.frame_count()
            )));
        }
        let current = file
            .events
            .iter()
            .rev()
            .find_map(|e| match e.kind {
                EventKind::Open { frame } | EventKind::Click { frame, .. } | EventKind::Clear { frame, .. } => {
                    Some(frame)
                }
                EventKind::Jump { to, .. } => Some(to),
                EventKind::Refresh { .. } => None,
            })
            .unwrap_or(0)
            .min(file.frame_count - 1);
        let mut s = Session {
            dirty: !file.annotations.is_empty(),
            file,
            cache,
            clock,
            current,
            partial: None,
            track: None,
            revision: 0,
        };
        s.log(EventKind::Open { frame: current });
        Ok(s)
    }

    pub fn file(&self) -> &SessionFile {
        &self.file
    }

    pub fn into_file(self) -> SessionFile {
        self.file
    }

    pub fn cache(&self) -> &Arc<DescriptorCache> {
        &self.cache
    }

    pub fn clock_mut(&mut self) -> &mut C {
        &mut self.clock
    }

    pub fn style(&self) -> AnnotationStyle {
        self.file.style
    }

    pub fn current_frame(&self) -> usize {
        self.current
    }

    pub fn frame_count(&self) -> usize {
        self.file.frame_count
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    pub fn track(&self) -> Option<&Arc<Vec<TrackEntry<f64>>>> {
        self.track.as_ref()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_session(&self.file, path)
    }

    fn log(&mut self, kind: EventKind) {
        let last = self.file.events.last().map_or(0, |e| e.t_ms);
        let t_ms = self.clock.now_ms().max(last);
        self.file.events.push(Event { t_ms, kind });
    }

    fn disabled(&self, feature: &'static str) -> Error {
        Error::FeatureDisabled {
            style: self.file.style.name().to_string(),
            feature,
        }
    }

    fn check_frame(&self, frame: usize) -> Result<()> {
        if frame < self.file.frame_count {
            Ok(())
        } else {
            Err(Error::Range(format!(
                "frame {frame} outside a {}-frame video",
                self.file.frame_count
            )))
        }
    }

    fn annotation_index(&self, frame: usize) -> Option<usize> {
        self.file.annotations.iter().position(|a| a.frame == frame)
    }

    pub fn annotated_frames(&self) -> BTreeSet<usize> {
        self.file.annotated_frames()
    }

    /// Viewport contents for `frame`. Read-only.
    pub fn frame_view(&self, frame: usize) -> Result<FrameView> {
        self.check_frame(frame)?;
        let flags = self.file.style.flags();
        let annotation = match self.annotation_index(frame) {
            Some(i) => {
                let a = &self.file.annotations[i];
                let bbox = match a.extreme_box() {
                    Some(b) => Some(b),
                    None if flags.show_boxes_on_annotations => Some(box_at(self.cache.boxes(frame), &a.point)?),
                    None => None,
                };
                Some(AnnotationView {
                    point: a.point,
                    source: a.source,
                    bbox,
                })
            }
            None => None,
        };
        let partial_points = match &self.partial {
            Some((f, pts)) if *f == frame => pts.clone(),
            _ => Vec::new(),
        };
        let track = self.track.as_ref().and_then(|t| t.get(frame)).map(|e| TrackView {
            point: e.point,
            bbox: (e.provenance == Provenance::Predicted || flags.show_boxes_on_annotations).then_some(e.bbox),
            provenance: e.provenance,
            match_distance: e.match_distance,
        });
        Ok(FrameView {
            frame,
            frame_count: self.file.frame_count,
            current_frame: self.current,
            style: self.file.style,
            flags,
            annotation,
            partial_points,
            track,
            dirty: self.dirty,
        })
    }

    fn set_annotation(&mut self, annotation: Annotation<f64>) {
        match self.annotation_index(annotation.frame) {
            Some(i) => self.file.annotations[i] = annotation,
            None => self.file.annotations.push(annotation),
        }
        self.dirty = true;
        self.revision += 1;
    }

    /// Left click in the viewport of `frame`.
    ///
    /// Point styles set or replace the frame's annotation. Extreme clicking
    /// collects four points and then replaces the annotation with their box.
    pub fn click(&mut self, frame: usize, point: Point<f64>) -> Result<FrameView> {
        self.check_frame(frame)?;
        if !point.is_valid() {
            return Err(Error::Validation(format!(
                "click ({}, {}) outside the unit square",
                point.x, point.y
            )));
        }
        let t_ms = self.clock.now_ms().max(self.file.events.last().map_or(0, |e| e.t_ms));
        self.current = frame;
        let completed = match self.file.style.click_mode() {
            ClickMode::Point => {
                self.set_annotation(Annotation::click(frame, point, t_ms));
                true
            }
            ClickMode::XClick => {
                let pts = match &mut self.partial {
                    Some((f, pts)) if *f == frame => pts,
                    slot => &mut slot.insert((frame, Vec::new())).1,
                };
                pts.push(point);
                if pts.len() == 4 {
                    let extreme = [pts[0], pts[1], pts[2], pts[3]];
                    self.partial = None;
                    self.set_annotation(Annotation::xclick(frame, extreme, t_ms)?);
                    true
                } else {
                    false
                }
            }
        };
        self.log(EventKind::Click {
            frame,
            x: point.x,
            y: point.y,
            completed,
        });
        self.frame_view(frame)
    }

    /// Middle click: drops the frame's annotation and any partial points.
    pub fn clear(&mut self, frame: usize) -> Result<FrameView> {
        self.check_frame(frame)?;
        let mut removed = false;
        if let Some(i) = self.annotation_index(frame) {
            self.file.annotations.remove(i);
            self.dirty = true;
            self.revision += 1;
            removed = true;
        }
        if matches!(self.partial, Some((f, _)) if f == frame) {
            self.partial = None;
            removed = true;
        }
        self.log(EventKind::Clear { frame, removed });
        self.frame_view(frame)
    }

    /// Snapshot for a refresh; fails when autotrack is off or nothing is
    /// annotated.
    pub fn prepare_refresh(&self) -> Result<RefreshJob> {
        if !self.file.style.flags().autotrack {
            return Err(self.disabled("autotrack"));
        }
        if self.file.annotations.is_empty() {
            return Err(Error::EmptyAnnotations);
        }
        Ok(RefreshJob {
            cache: Arc::clone(&self.cache),
            annotations: self.file.annotations.clone(),
            revision: self.revision,
        })
    }

    /// Installs a finished refresh. The dirty flag stays set when the
    /// annotations changed while the job was running.
    pub fn complete_refresh(&mut self, job: &RefreshJob, track: Vec<TrackEntry<f64>>) -> Result<RefreshSummary> {
        let sparklines = compute_sparklines(&track)?;
        let track = Arc::new(track);
        self.track = Some(Arc::clone(&track));
        self.dirty = job.revision != self.revision;
        self.log(EventKind::Refresh { frames: track.len() });
        Ok(RefreshSummary {
            track,
            sparklines,
            dirty: self.dirty,
        })
    }

    pub fn refresh(&mut self) -> Result<RefreshSummary> {
        let job = self.prepare_refresh()?;
        let track = job.run()?;
        self.complete_refresh(&job, track)
    }

    fn jump_target(&self, kind: JumpKind) -> Result<usize> {
        let flags = self.file.style.flags();
        let n = self.file.frame_count;
        let annotated = self.annotated_frames();
        let target = match kind {
            JumpKind::Random => match self.file.style.presentation() {
                Presentation::RandomOrder => self
                    .file
                    .presentation_order
                    .iter()
                    .copied()
                    .find(|f| !annotated.contains(f)),
                Presentation::Timeline => {
                    let salt = self.file.events.len() as u64;
                    random_jump_target(n, &annotated, self.file.seed.wrapping_add(salt))
                }
            }
            .unwrap_or(self.current),
            JumpKind::Smart => {
                if !flags.smartjump {
                    return Err(self.disabled("smartjump"));
                }
                let track = self.track.as_ref().ok_or(Error::EmptyTrack)?;
                smartjump_target(track, &annotated).unwrap_or(self.current)
            }
            JumpKind::NextAnnotated | JumpKind::PrevAnnotated | JumpKind::Step { .. } | JumpKind::Seek { .. }
                if !flags.timeline =>
            {
                return Err(self.disabled("timeline"));
            }
            JumpKind::NextAnnotated => annotated
                .range(self.current + 1..)
                .next()
                .copied()
                .unwrap_or(self.current),
            JumpKind::PrevAnnotated => annotated
                .range(..self.current)
                .next_back()
                .copied()
                .unwrap_or(self.current),
            JumpKind::Step { delta } => {
                if ![-10, -1, 1, 10].contains(&delta) {
                    return Err(Error::Validation(format!("step of {delta} frames, expected ±1 or ±10")));
                }
                (self.current as i64 + delta).clamp(0, n as i64 - 1) as usize
            }
            JumpKind::Seek { frame } => {
                self.check_frame(frame)?;
                frame
            }
        };
        Ok(target)
    }

    /// Moves the current frame. Partial extreme-click points are discarded.
    pub fn jump(&mut self, kind: JumpKind) -> Result<usize> {
        let to = self.jump_target(kind)?;
        let from = self.current;
        let discarded_partial = self.partial.take().map_or(0, |(_, pts)| pts.len());
        self.current = to;
        self.log(EventKind::Jump {
            jump: kind,
            from,
            to,
            discarded_partial,
        });
        Ok(to)
    }

    pub fn timeline(&self) -> Result<TimelineView> {
        if !self.file.style.flags().timeline {
            return Err(self.disabled("timeline"));
        }
        Ok(TimelineView {
            frame_count: self.file.frame_count,
            current_frame: self.current,
            annotated_frames: self.annotated_frames().into_iter().collect(),
            dirty: self.dirty,
        })
    }

    pub fn sparklines(&self) -> Result<SparklineView> {
        if !self.file.style.flags().sparklines {
            return Err(self.disabled("sparklines"));
        }
        let track = self.track.as_ref().ok_or(Error::EmptyTrack)?;
        Ok(SparklineView {
            series: compute_sparklines(track)?,
            dirty: self.dirty,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::GridMap;
    use crate::metrics::StylePreset;

    fn cache(frames: usize) -> Arc<DescriptorCache> {
        let desc = (0..frames)
            .map(|_| GridMap::new(2, 2, 1, vec![0.0f32, 1.0, 2.0, 3.0]).unwrap())
            .collect();
        let boxes = (0..frames)
            .map(|_| GridMap::filled(2, 2, &[0.1f32; 4]).unwrap())
            .collect();
        Arc::new(DescriptorCache::new(desc, boxes, "t").unwrap())
    }

    fn session(preset: StylePreset, frames: usize) -> Session<ManualClock> {
        Session::with_clock(preset.style(), cache(frames), "t.dtc", 7, ManualClock::default())
    }

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::new(x, y).unwrap()
    }

    #[test]
    fn click_replaces_previous_point() {
        let mut s = session(StylePreset::Click, 5);
        s.click(2, p(0.2, 0.2)).unwrap();
        let v = s.click(2, p(0.7, 0.6)).unwrap();
        assert_eq!(s.file().annotations.len(), 1);
        assert_eq!(v.annotation.unwrap().point, p(0.7, 0.6));
    }

    #[test]
    fn click_style_shows_no_boxes() {
        let mut s = session(StylePreset::Click, 5);
        let v = s.click(1, p(0.4, 0.4)).unwrap();
        assert!(v.annotation.unwrap().bbox.is_none());
        let json = serde_json::to_value(s.frame_view(1).unwrap()).unwrap();
        assert!(json["annotation"].get("box").is_none());
        assert!(json.get("track").is_none());
    }

    #[test]
    fn boxes_style_shows_predicted_box() {
        let mut s = session(StylePreset::Boxes, 5);
        let v = s.click(1, p(0.5, 0.5)).unwrap();
        let b = v.annotation.unwrap().bbox.unwrap();
        assert!((b.x_min - 0.4).abs() < 1e-6 && (b.y_max - 0.6).abs() < 1e-6);
    }

    #[test]
    fn xclick_collects_four_points() {
        let mut s = session(StylePreset::XClick, 5);
        let pts = [p(0.1, 0.5), p(0.9, 0.5), p(0.5, 0.2), p(0.5, 0.8)];
        for q in &pts[..3] {
            let v = s.click(3, *q).unwrap();
            assert!(v.annotation.is_none());
        }
        assert_eq!(s.frame_view(3).unwrap().partial_points.len(), 3);
        let v = s.click(3, pts[3]).unwrap();
        let a = v.annotation.unwrap();
        assert_eq!(a.bbox.unwrap(), BBox::new(0.1, 0.2, 0.9, 0.8).unwrap());
        assert_eq!(a.source, ClickSource::XClick);
        assert!(v.partial_points.is_empty());
    }

    #[test]
    fn navigation_discards_partial_points() {
        let mut s = session(StylePreset::XClick, 5);
        s.click(s.current_frame(), p(0.1, 0.5)).unwrap();
        s.click(s.current_frame(), p(0.2, 0.5)).unwrap();
        let before = s.current_frame();
        s.jump(JumpKind::Random).unwrap();
        match &s.file().events.last().unwrap().kind {
            EventKind::Jump {
                discarded_partial,
                from,
                ..
            } => {
                assert_eq!(*discarded_partial, 2);
                assert_eq!(*from, before);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(s.frame_view(before).unwrap().partial_points.is_empty());
    }

    #[test]
    fn clear_on_empty_frame_is_noop() {
        let mut s = session(StylePreset::Click, 5);
        let v = s.clear(4).unwrap();
        assert!(v.annotation.is_none());
        assert!(matches!(
            s.file().events.last().unwrap().kind,
            EventKind::Clear { removed: false, .. }
        ));
        assert!(!s.is_dirty());
    }

    #[test]
    fn validation_errors() {
        let mut s = session(StylePreset::Click, 5);
        assert!(matches!(s.click(5, p(0.5, 0.5)), Err(Error::Range(_))));
        assert!(matches!(
            s.click(0, Point { x: 1.2, y: 0.1 }),
            Err(Error::Validation(_))
        ));
        assert!(matches!(s.frame_view(9), Err(Error::Range(_))));
        assert_eq!(s.file().events.len(), 1);
    }

    #[test]
    fn refresh_gates() {
        let mut s = session(StylePreset::Click, 5);
        s.click(0, p(0.5, 0.5)).unwrap();
        assert!(matches!(
            s.refresh(),
            Err(Error::FeatureDisabled {
                feature: "autotrack",
                ..
            })
        ));
        let mut s = session(StylePreset::Autotrack, 5);
        assert!(matches!(s.refresh(), Err(Error::EmptyAnnotations)));
    }

    #[test]
    fn refresh_clears_dirty_and_is_idempotent() {
        let mut s = session(StylePreset::AutotrackBoxesSparklines, 6);
        s.click(0, p(0.25, 0.25)).unwrap();
        assert!(s.is_dirty());
        let a = s.refresh().unwrap();
        assert!(!a.dirty && !s.is_dirty());
        let b = s.refresh().unwrap();
        assert_eq!(a.track, b.track);
        assert_eq!(a.sparklines, b.sparklines);
        s.click(3, p(0.75, 0.75)).unwrap();
        assert!(s.frame_view(2).unwrap().dirty);
    }

    #[test]
    fn stale_job_leaves_dirty_flag() {
        let mut s = session(StylePreset::Autotrack, 6);
        s.click(0, p(0.25, 0.25)).unwrap();
        let job = s.prepare_refresh().unwrap();
        s.click(4, p(0.75, 0.25)).unwrap();
        let summary = s.complete_refresh(&job, job.run().unwrap()).unwrap();
        assert!(summary.dirty);
    }

    #[test]
    fn autotrack_hides_box_on_annotated_frames() {
        let mut s = session(StylePreset::Autotrack, 4);
        s.click(1, p(0.25, 0.25)).unwrap();
        s.refresh().unwrap();
        let annotated = s.frame_view(1).unwrap();
        assert!(annotated.annotation.unwrap().bbox.is_none());
        assert!(annotated.track.unwrap().bbox.is_none());
        assert!(s.frame_view(2).unwrap().track.unwrap().bbox.is_some());

        let mut s = session(StylePreset::AutotrackBoxes, 4);
        s.click(1, p(0.25, 0.25)).unwrap();
        s.refresh().unwrap();
        let annotated = s.frame_view(1).unwrap();
        assert!(annotated.annotation.unwrap().bbox.is_some());
        assert!(annotated.track.unwrap().bbox.is_some());
    }

    #[test]
    fn steps_clamp() {
        let mut s = session(StylePreset::Autotrack, 300);
        assert_eq!(s.jump(JumpKind::Step { delta: -1 }).unwrap(), 0);
        s.jump(JumpKind::Seek { frame: 295 }).unwrap();
        assert_eq!(s.jump(JumpKind::Step { delta: 10 }).unwrap(), 299);
        assert_eq!(s.jump(JumpKind::Step { delta: -10 }).unwrap(), 289);
        assert!(s.jump(JumpKind::Step { delta: 3 }).is_err());
    }

    #[test]
    fn annotated_neighbour_jumps() {
        let mut s = session(StylePreset::Autotrack, 50);
        for f in [5, 20, 40] {
            s.click(f, p(0.5, 0.5)).unwrap();
        }
        s.jump(JumpKind::Seek { frame: 21 }).unwrap();
        assert_eq!(s.jump(JumpKind::PrevAnnotated).unwrap(), 20);
        assert_eq!(s.jump(JumpKind::PrevAnnotated).unwrap(), 5);
        assert_eq!(s.jump(JumpKind::PrevAnnotated).unwrap(), 5);
        assert_eq!(s.jump(JumpKind::NextAnnotated).unwrap(), 20);
        assert_eq!(s.jump(JumpKind::NextAnnotated).unwrap(), 40);
        assert_eq!(s.jump(JumpKind::NextAnnotated).unwrap(), 40);
    }

    #[test]
    fn random_order_walks_the_permutation() {
        let mut s = session(StylePreset::Click, 12);
        let order = s.file().presentation_order.clone();
        assert_eq!(s.current_frame(), order[0]);
        for &expected in &order {
            assert_eq!(s.current_frame(), expected);
            s.click(expected, p(0.5, 0.5)).unwrap();
            s.jump(JumpKind::Random).unwrap();
        }
        assert_eq!(s.file().annotations.len(), 12);
    }

    #[test]
    fn one_event_per_mutation_and_monotone_clock() {
        let mut s = session(StylePreset::AutotrackBoxesSparklinesSmartjump, 20);
        let mut expected = 1;
        s.clock_mut().advance(100);
        s.click(0, p(0.25, 0.25)).unwrap();
        expected += 1;
        s.clock_mut().advance(100);
        s.click(19, p(0.75, 0.75)).unwrap();
        expected += 1;
        s.refresh().unwrap();
        expected += 1;
        s.jump(JumpKind::Smart).unwrap();
        expected += 1;
        s.clear(19).unwrap();
        expected += 1;
        assert!(s.jump(JumpKind::Step { delta: 7 }).is_err());
        assert_eq!(s.file().events.len(), expected);
        assert!(s.file().events.windows(2).all(|w| w[0].t_ms <= w[1].t_ms));
    }

    #[test]
    fn resume_continues_session() {
        let mut s = session(StylePreset::Autotrack, 10);
        s.click(4, p(0.5, 0.5)).unwrap();
        let file = s.into_file();
        let r = Session::resume_with_clock(file.clone(), cache(10), ManualClock { now: 5 }).unwrap();
        assert_eq!(r.current_frame(), 4);
        assert!(r.is_dirty());
        assert_eq!(r.file().annotations, file.annotations);
        assert!(Session::resume_with_clock(file, cache(9), ManualClock::default()).is_err());
    }
}
