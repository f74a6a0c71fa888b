//! Synthetic descriptor caches with a known object path.
//!
//! The object occupies one cell per frame. Its descriptor lives in the first
//! `channels - 1` dimensions with norm at most 1 and moves affinely in time
//! along each segment; the last channel is 0 for the object. Background
//! cells carry a last-channel value of at least `delta_min + 2`, so every
//! background cell is at least `delta_min + 2` away from any blend of object
//! descriptors while the object cell is at most 2 away. Nearest-neighbour
//! matching therefore always lands on the object.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::descriptor::{BoxPrediction, BOX_CHANNELS};
use crate::error::{Error, Result};
use crate::geom::{cell_center, GridMap, Point};
use crate::metrics::Label;
use crate::store::DescriptorCache;

const MAX_DELTA_MIN: f64 = 1.0e6;

fn default_delta_min() -> f64 {
    1.0
}

fn default_box() -> [f32; 4] {
    [0.1; 4]
}

/// A stretch of frames over which the object moves on a straight line
/// between two cells (`[row, col]`) and its descriptor blends affinely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub frames: usize,
    pub from: [usize; 2],
    pub to: [usize; 2],
    /// Left, top, right, bottom offsets written to every cell of the box map.
    #[serde(default = "default_box")]
    pub box_offsets: [f32; 4],
}

/// Structured description of a synthetic video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Minimum L2 separation between background descriptors and any blend of
    /// object descriptors.
    #[serde(default = "default_delta_min")]
    pub delta_min: f64,
    #[serde(default)]
    pub seed: u64,
    pub segments: Vec<Segment>,
}

impl FixtureSpec {
    /// Object moving from the top-left corner cell to the bottom-right one.
    pub fn linear(frames: usize, size: usize, channels: usize) -> Self {
        FixtureSpec {
            height: size,
            width: size,
            channels,
            delta_min: default_delta_min(),
            seed: 0,
            segments: vec![Segment {
                frames,
                from: [0, 0],
                to: [size.saturating_sub(1); 2],
                box_offsets: default_box(),
            }],
        }
    }

    pub fn stationary(frames: usize, size: usize, channels: usize, cell: [usize; 2]) -> Self {
        FixtureSpec {
            segments: vec![Segment {
                frames,
                from: cell,
                to: cell,
                box_offsets: default_box(),
            }],
            ..Self::linear(frames, size, channels)
        }
    }

    /// Two diagonal strokes; at frame `frames / 2` the object teleports to the
    /// opposite quadrant and picks up an unrelated descriptor.
    pub fn discontinuous(frames: usize, size: usize, channels: usize) -> Self {
        let at = |sixteenths: usize| [size * sixteenths / 16; 2];
        let first = frames / 2;
        FixtureSpec {
            segments: vec![
                Segment {
                    frames: first,
                    from: at(2),
                    to: at(5),
                    box_offsets: default_box(),
                },
                Segment {
                    frames: frames - first,
                    from: at(11),
                    to: at(14),
                    box_offsets: [0.08, 0.12, 0.08, 0.12],
                },
            ],
            ..Self::linear(frames, size, channels)
        }
    }

    pub fn frame_count(&self) -> usize {
        self.segments.iter().map(|s| s.frames).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_count() < 2 {
            return Err(Error::Validation("fixture needs at least 2 frames".into()));
        }
        if self.height < 2 || self.width < 2 {
            return Err(Error::Validation("fixture grid must be at least 2x2".into()));
        }
        if self.channels < 2 {
            return Err(Error::Feasibility(format!(
                "{} channel(s) leave no room to separate background from the object",
                self.channels
            )));
        }
        if !(self.delta_min.is_finite() && self.delta_min > 0.0 && self.delta_min <= MAX_DELTA_MIN) {
            return Err(Error::Feasibility(format!(
                "delta_min {} must be in (0, {MAX_DELTA_MIN}] for single-precision descriptors",
                self.delta_min
            )));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if s.frames == 0 {
                return Err(Error::Validation(format!("segment {i} has no frames")));
            }
            for [r, c] in [s.from, s.to] {
                if r >= self.height || c >= self.width {
                    return Err(Error::Validation(format!(
                        "segment {i} visits cell ({r}, {c}) outside the {}x{} grid",
                        self.height, self.width
                    )));
                }
            }
            if s.box_offsets.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Validation(format!("segment {i} has invalid box offsets")));
            }
        }
        Ok(())
    }
}

/// Generated cache plus the path that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticFixture {
    pub spec: FixtureSpec,
    pub seed: u64,
    pub cache: Arc<DescriptorCache>,
    /// Object cell center and box for every frame.
    pub ground_truth: Vec<Label<f64>>,
    /// Object cell `[row, col]` for every frame.
    pub path: Vec<[usize; 2]>,
}

impl SyntheticFixture {
    pub fn frame_count(&self) -> usize {
        self.ground_truth.len()
    }

    /// First frame of every segment after the first.
    pub fn segment_starts(&self) -> Vec<usize> {
        self.spec
            .segments
            .iter()
            .scan(0, |start, s| {
                let here = *start;
                *start += s.frames;
                Some(here)
            })
            .skip(1)
            .collect()
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, dims: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dims).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Builds the fixture described by `spec`; identical inputs give identical
/// caches.
pub fn generate_fixture(spec: &FixtureSpec, seed: u64) -> Result<SyntheticFixture> {
    spec.validate()?;
    let (h, w, c) = (spec.height, spec.width, spec.channels);
    let object_dims = c - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let endpoints: Vec<(Vec<f64>, Vec<f64>)> = spec
        .segments
        .iter()
        .map(|_| (unit_vector(&mut rng, object_dims), unit_vector(&mut rng, object_dims)))
        .collect();

    let n = spec.frame_count();
    let mut desc = Vec::with_capacity(n);
    let mut boxes = Vec::with_capacity(n);
    let mut ground_truth = Vec::with_capacity(n);
    let mut path = Vec::with_capacity(n);
    let floor = (spec.delta_min + 2.0) as f32;

    for (segment, (start_d, end_d)) in spec.segments.iter().zip(&endpoints) {
        for k in 0..segment.frames {
            let t = if segment.frames > 1 {
                k as f64 / (segment.frames - 1) as f64
            } else {
                0.0
            };
            let along = |a: usize, b: usize| (a as f64 + t * (b as f64 - a as f64)).round() as usize;
            let cell = [
                along(segment.from[0], segment.to[0]),
                along(segment.from[1], segment.to[1]),
            ];

            let mut values = Vec::with_capacity(h * w * c);
            for _ in 0..h * w {
                for _ in 0..object_dims {
                    values.push(rng.random_range(-1.0f32..1.0));
                }
                values.push(floor + rng.random::<f32>());
            }
            let mut map = GridMap::new(h, w, c, values)?;
            let object = map.cell_mut(cell[0], cell[1]);
            for (slot, (a, b)) in object.iter_mut().zip(start_d.iter().zip(end_d)) {
                *slot = (a + t * (b - a)) as f32;
            }
            object[object_dims] = 0.0;
            desc.push(map);

            boxes.push(GridMap::filled(h, w, &segment.box_offsets)?);
            let point: Point<f64> = cell_center(h, w, cell[0], cell[1]);
            let offsets = segment.box_offsets.map(f64::from);
            let bbox = BoxPrediction::from_offsets(&offsets)?.to_box(&point);
            debug_assert_eq!(offsets.len(), BOX_CHANNELS);
            ground_truth.push(Label {
                point,
                bbox: Some(bbox),
            });
            path.push(cell);
        }
    }

    let cache = DescriptorCache::new(desc, boxes, format!("fixture-{seed}"))?;
    Ok(SyntheticFixture {
        spec: spec.clone(),
        seed,
        cache: Arc::new(cache),
        ground_truth,
        path,
    })
}
