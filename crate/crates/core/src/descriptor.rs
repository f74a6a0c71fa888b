//! Descriptor sampling, descriptor-space interpolation and nearest-neighbour
//! recovery of locations from a frame's dense descriptor map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{sample_bilinear, sample_bilinear_into, BBox, GridMap, Point};
use crate::scalar::Scalar;

/// Channel count of a box-prediction map: left, top, right, bottom offsets.
pub const BOX_CHANNELS: usize = 4;

/// Feature vector sampled from a dense descriptor map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Descriptor<T>(pub Vec<T>);

impl<T: Scalar> Descriptor<T> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    /// Euclidean distance to another descriptor of the same length.
    pub fn distance(&self, other: &Descriptor<T>) -> Result<T> {
        check_len(self.len(), other.len())?;
        let sq = self
            .0
            .iter()
            .zip(&other.0)
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
        Ok(sq.sqrt())
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

/// Descriptor of the continuous map at `p`.
pub fn descriptor_at<S: Scalar, T: Scalar>(frame_map: &GridMap<S>, p: &Point<T>) -> Result<Descriptor<T>> {
    sample_bilinear(frame_map, p).map(Descriptor)
}

/// Fraction of the way from `t` to `tp` at frame `tau`.
pub fn interpolation_weight<T: Scalar>(t: usize, tp: usize, tau: usize) -> Result<T> {
    if !(t < tau && tau < tp) {
        return Err(Error::Range(format!(
            "frame {tau} is not strictly between keyframes {t} and {tp}"
        )));
    }
    Ok(T::cast(tau - t) / T::cast(tp - t))
}

/// Linear interpolation between the descriptors annotated at frames `t` and
/// `tp`, evaluated at an intermediate frame `tau`.
pub fn interpolate_descriptor<T: Scalar>(
    d_t: &Descriptor<T>,
    d_tp: &Descriptor<T>,
    t: usize,
    tp: usize,
    tau: usize,
) -> Result<Descriptor<T>> {
    check_len(d_t.len(), d_tp.len())?;
    let w: T = interpolation_weight(t, tp, tau)?;
    let values = d_t
        .0
        .iter()
        .zip(&d_tp.0)
        .map(|(&a, &b)| {
            // (1 - w) a + w b, written so equal endpoints come back unchanged
            let v = a + w * (b - a);
            v.max(a.min(b)).min(a.max(b))
        })
        .collect();
    Ok(Descriptor(values))
}

/// Row-major index of the cell whose vector is closest (L2) to `target`,
/// and the squared distance. Ties go to the lowest index.
pub fn nearest_cell<S: Scalar, T: Scalar>(frame_map: &GridMap<S>, target: &[T]) -> Result<(usize, T)> {
    if frame_map.is_empty() {
        return Err(Error::InvalidMap("map has no cells".into()));
    }
    check_len(frame_map.channels(), target.len())?;
    let mut best_idx = 0;
    let mut best = T::infinity();
    'cells: for (idx, cell) in frame_map.values().chunks_exact(frame_map.channels().max(1)).enumerate() {
        let mut acc = T::zero();
        for (&v, &q) in cell.iter().zip(target) {
            let d = T::cast(v) - q;
            acc = acc + d * d;
            // partial sums never decrease, so a cell already at or past the
            // best cannot win under the strict comparison below
            if acc >= best {
                continue 'cells;
            }
        }
        if acc < best {
            best = acc;
            best_idx = idx;
        }
    }
    if frame_map.channels() == 0 {
        best = T::zero();
    }
    Ok((best_idx, best))
}

/// Cell-center location whose descriptor is nearest to `target`, with the
/// achieved L2 distance.
pub fn nearest_descriptor_location<S: Scalar, T: Scalar>(
    frame_map: &GridMap<S>,
    target: &Descriptor<T>,
) -> Result<(Point<T>, T)> {
    let (idx, sq) = nearest_cell(frame_map, target.as_slice())?;
    let w = frame_map.width();
    Ok((frame_map.cell_center(idx / w, idx % w), sq.sqrt()))
}

/// Box regression output: non-negative distances from a query point to the
/// four box edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxPrediction<T> {
    pub left: T,
    pub top: T,
    pub right: T,
    pub bottom: T,
}

impl<T: Scalar> BoxPrediction<T> {
    /// Builds from `[left, top, right, bottom]`, flooring negatives at zero.
    pub fn from_offsets(offsets: &[T]) -> Result<Self> {
        check_len(BOX_CHANNELS, offsets.len())
            .map_err(|_| Error::Schema(format!("box map needs 4 channels, got {}", offsets.len())))?;
        let pos = |v: T| v.max(T::zero());
        Ok(BoxPrediction {
            left: pos(offsets[0]),
            top: pos(offsets[1]),
            right: pos(offsets[2]),
            bottom: pos(offsets[3]),
        })
    }

    /// Box around `p`, clamped to the unit square.
    pub fn to_box(&self, p: &Point<T>) -> BBox<T> {
        BBox::new(p.x - self.left, p.y - self.top, p.x + self.right, p.y + self.bottom)
            .expect("non-negative offsets around a finite point")
    }
}

/// Predicted box for the object whose center is at `p`.
pub fn box_at<S: Scalar, T: Scalar>(box_map: &GridMap<S>, p: &Point<T>) -> Result<BBox<T>> {
    if box_map.channels() != BOX_CHANNELS {
        return Err(Error::Schema(format!(
            "box map needs 4 channels, got {}",
            box_map.channels()
        )));
    }
    let mut offsets = [T::zero(); BOX_CHANNELS];
    sample_bilinear_into(box_map, p, &mut offsets)?;
    Ok(BoxPrediction::from_offsets(&offsets)?.to_box(p))
}
