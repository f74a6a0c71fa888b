//! Continuous normalized image coordinates.
//!
//! Every image and every dense map covers `[0, 1] x [0, 1]`. A map of `H x W`
//! cells is a regular grid of samples taken at the cell centers
//! `((c + 0.5) / W, (r + 0.5) / H)`; between centers the signal is recovered
//! bilinearly and outside the center lattice it is held constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Location in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    /// Checked constructor; both coordinates must lie in `[0, 1]`.
    pub fn new(x: T, y: T) -> Result<Self> {
        let p = Point { x, y };
        if p.is_valid() {
            Ok(p)
        } else {
            Err(Error::Validation(format!("point ({x}, {y}) outside the unit square")))
        }
    }

    /// Clamps each coordinate into `[0, 1]`. NaN maps to 0.
    pub fn clamped(x: T, y: T) -> Self {
        Point {
            x: clamp_unit(x),
            y: clamp_unit(y),
        }
    }

    pub fn is_valid(&self) -> bool {
        in_unit(self.x) && in_unit(self.y)
    }

    pub fn distance(&self, other: &Point<T>) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn cast<U: Scalar>(&self) -> Point<U> {
        Point {
            x: U::cast(self.x),
            y: U::cast(self.y),
        }
    }
}

fn in_unit<T: Scalar>(v: T) -> bool {
    v >= T::zero() && v <= T::one()
}

fn clamp_unit<T: Scalar>(v: T) -> T {
    if v.is_nan() {
        T::zero()
    } else {
        v.max(T::zero()).min(T::one())
    }
}

/// Axis-aligned box in normalized coordinates, always inside the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox<T> {
    pub x_min: T,
    pub y_min: T,
    pub x_max: T,
    pub y_max: T,
}

impl<T: Scalar> BBox<T> {
    /// Clamps the extents into `[0, 1]`; fails if an extent is inverted or
    /// not a number.
    pub fn new(x_min: T, y_min: T, x_max: T, y_max: T) -> Result<Self> {
        let all_finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !all_finite || x_min > x_max || y_min > y_max {
            return Err(Error::Validation(format!(
                "box ({x_min}, {y_min}, {x_max}, {y_max}) has inverted or non-finite extents"
            )));
        }
        Ok(BBox {
            x_min: clamp_unit(x_min),
            y_min: clamp_unit(y_min),
            x_max: clamp_unit(x_max),
            y_max: clamp_unit(y_max),
        })
    }

    pub fn width(&self) -> T {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> T {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    /// Midpoint of the box extents.
    pub fn center(&self) -> Point<T> {
        let two = T::one() + T::one();
        Point {
            x: (self.x_min + self.x_max) / two,
            y: (self.y_min + self.y_max) / two,
        }
    }

    /// Closed-extent containment.
    pub fn contains(&self, p: &Point<T>) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn intersection_area(&self, other: &BBox<T>) -> T {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= T::zero() || h <= T::zero() {
            T::zero()
        } else {
            w * h
        }
    }

    /// Intersection over union. Returns 0 when the union has no area.
    pub fn iou(&self, other: &BBox<T>) -> T {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= T::zero() {
            return T::zero();
        }
        (inter / union).max(T::zero()).min(T::one())
    }

    pub fn cast<U: Scalar>(&self) -> BBox<U> {
        BBox {
            x_min: U::cast(self.x_min),
            y_min: U::cast(self.y_min),
            x_max: U::cast(self.x_max),
            y_max: U::cast(self.y_max),
        }
    }
}

/// Intersection over union of two boxes; see [`BBox::iou`].
pub fn iou<T: Scalar>(a: &BBox<T>, b: &BBox<T>) -> T {
    a.iou(b)
}

pub fn box_center<T: Scalar>(b: &BBox<T>) -> Point<T> {
    b.center()
}

/// Smallest axis-aligned box containing the four extreme clicks.
pub fn box_from_extreme_points<T: Scalar>(points: &[Point<T>]) -> Result<BBox<T>> {
    if points.len() != 4 {
        return Err(Error::Arity {
            expected: 4,
            got: points.len(),
        });
    }
    if let Some(bad) = points.iter().find(|p| !p.is_valid()) {
        return Err(Error::Validation(format!(
            "extreme point ({}, {}) outside the unit square",
            bad.x, bad.y
        )));
    }
    let first = points[0];
    let init = (first.x, first.y, first.x, first.y);
    let (x_min, y_min, x_max, y_max) = points[1..].iter().fold(init, |(x0, y0, x1, y1), p| {
        (x0.min(p.x), y0.min(p.y), x1.max(p.x), y1.max(p.y))
    });
    Ok(BBox {
        x_min,
        y_min,
        x_max,
        y_max,
    })
}

/// Dense row-major grid of per-cell vectors (channel innermost).
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap<S> {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<S>,
}

impl<S: Scalar> GridMap<S> {
    pub fn new(height: usize, width: usize, channels: usize, values: Vec<S>) -> Result<Self> {
        let expected = height
            .checked_mul(width)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Error::InvalidMap("dimensions overflow".into()))?;
        if values.len() != expected {
            return Err(Error::InvalidMap(format!(
                "{height}x{width}x{channels} map needs {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMap(format!("non-finite value at index {i}")));
        }
        Ok(GridMap {
            height,
            width,
            channels,
            values,
        })
    }

    /// Map with every cell holding `fill`.
    pub fn filled(height: usize, width: usize, fill: &[S]) -> Result<Self> {
        let values = fill.iter().copied().cycle().take(height * width * fill.len()).collect();
        Self::new(height, width, fill.len(), values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn cell_count(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.cell_count() == 0
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    /// Vector stored at `(row, col)`.
    pub fn cell(&self, row: usize, col: usize) -> &[S] {
        self.cell_by_index(row * self.width + col)
    }

    pub fn cell_by_index(&self, index: usize) -> &[S] {
        let start = index * self.channels;
        &self.values[start..start + self.channels]
    }

    pub fn cell_mut(&mut self, row: usize, col: usize) -> &mut [S] {
        let start = (row * self.width + col) * self.channels;
        &mut self.values[start..start + self.channels]
    }

    /// Normalized location of the center of `(row, col)`.
    pub fn cell_center<T: Scalar>(&self, row: usize, col: usize) -> Point<T> {
        cell_center(self.height, self.width, row, col)
    }

    pub fn sample<T: Scalar>(&self, p: &Point<T>) -> Result<Vec<T>> {
        sample_bilinear(self, p)
    }
}

/// Center of cell `(row, col)` in an `height x width` lattice.
pub fn cell_center<T: Scalar>(height: usize, width: usize, row: usize, col: usize) -> Point<T> {
    let half = T::lit(0.5);
    Point {
        x: (T::cast(col) + half) / T::cast(width),
        y: (T::cast(row) + half) / T::cast(height),
    }
}

/// Continuous lattice coordinate of a normalized position, clamped to the
/// center lattice and snapped onto it when rounding left it a few ulps off.
/// Returns the lower cell index, the upper cell index and the fraction.
fn lattice_coord<T: Scalar>(pos: T, cells: usize) -> (usize, usize, T) {
    let last = T::cast(cells - 1);
    let mut u = pos * T::cast(cells) - T::lit(0.5);
    u = u.max(T::zero()).min(last);
    let nearest = u.round();
    let tol = T::epsilon() * T::lit(8.0) * T::cast(cells.max(1));
    if (u - nearest).abs() <= tol {
        u = nearest;
    }
    let lo = u.floor();
    let frac = u - lo;
    let lo_idx = lo.to_usize().unwrap_or(0).min(cells - 1);
    let hi_idx = (lo_idx + 1).min(cells - 1);
    (lo_idx, hi_idx, frac)
}

#[inline]
fn lerp<T: Scalar>(a: T, b: T, f: T) -> T {
    if f == T::zero() {
        return a;
    }
    let v = a * (T::one() - f) + b * f;
    v.max(a.min(b)).min(a.max(b))
}

/// Samples the continuous signal of `map` at `p`, writing `channels` values
/// into `out`.
pub fn sample_bilinear_into<S: Scalar, T: Scalar>(map: &GridMap<S>, p: &Point<T>, out: &mut [T]) -> Result<()> {
    if map.is_empty() {
        return Err(Error::InvalidMap("map has no cells".into()));
    }
    if out.len() != map.channels {
        return Err(Error::Dimension {
            expected: map.channels,
            got: out.len(),
        });
    }
    if !p.is_valid() {
        return Err(Error::Validation(format!(
            "query ({}, {}) outside the unit square",
            p.x, p.y
        )));
    }
    let (c0, c1, fx) = lattice_coord(p.x, map.width);
    let (r0, r1, fy) = lattice_coord(p.y, map.height);
    let v00 = map.cell(r0, c0);
    let v01 = map.cell(r0, c1);
    let v10 = map.cell(r1, c0);
    let v11 = map.cell(r1, c1);
    for (k, o) in out.iter_mut().enumerate() {
        let top = lerp(T::cast(v00[k]), T::cast(v01[k]), fx);
        let bottom = if fy == T::zero() {
            top
        } else {
            lerp(T::cast(v10[k]), T::cast(v11[k]), fx)
        };
        *o = lerp(top, bottom, fy);
    }
    Ok(())
}

/// Bilinear sample of `map` at `p` with constant extrapolation outside the
/// cell-center lattice.
pub fn sample_bilinear<S: Scalar, T: Scalar>(map: &GridMap<S>, p: &Point<T>) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); map.channels];
    sample_bilinear_into(map, p, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox<f64> {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::new(x, y).unwrap()
    }

    #[test]
    fn single_cell_map_is_constant() {
        let map = GridMap::new(1, 1, 1, vec![7.0f32]).unwrap();
        assert_eq!(sample_bilinear(&map, &p(0.3, 0.9)).unwrap(), vec![7.0]);
    }

    #[test]
    fn midpoint_between_two_centers() {
        let map = GridMap::new(1, 2, 1, vec![0.0f32, 2.0]).unwrap();
        // centers at x = 0.25 and 0.75
        assert_eq!(sample_bilinear(&map, &p(0.5, 0.5)).unwrap(), vec![1.0]);
        // outside the center lattice the boundary value holds
        assert_eq!(sample_bilinear(&map, &p(0.1, 0.0)).unwrap(), vec![0.0]);
        assert_eq!(sample_bilinear(&map, &p(1.0, 1.0)).unwrap(), vec![2.0]);
    }

    #[test]
    fn negative_zero_survives_center_query() {
        let map = GridMap::new(2, 2, 1, vec![-0.0f32, 1.0, 2.0, 3.0]).unwrap();
        let v: Vec<f64> = sample_bilinear(&map, &map.cell_center(0, 0)).unwrap();
        assert!(v[0] == 0.0 && v[0].is_sign_negative());
    }

    #[test]
    fn empty_map_rejected() {
        let map = GridMap::<f32>::new(0, 4, 3, vec![]).unwrap();
        assert!(matches!(
            sample_bilinear::<f32, f64>(&map, &p(0.5, 0.5)),
            Err(Error::InvalidMap(_))
        ));
    }

    #[test]
    fn map_shape_checked() {
        assert!(GridMap::new(2, 2, 2, vec![0.0f32; 7]).is_err());
        assert!(GridMap::new(1, 1, 1, vec![f32::NAN]).is_err());
    }

    #[test]
    fn out_of_square_query_rejected() {
        let map = GridMap::new(1, 1, 1, vec![1.0f32]).unwrap();
        let q = Point { x: 1.5, y: 0.2 };
        assert!(sample_bilinear::<f32, f64>(&map, &q).is_err());
    }

    #[test]
    fn extreme_points_box() {
        let pts = [p(0.1, 0.5), p(0.9, 0.5), p(0.5, 0.1), p(0.5, 0.9)];
        assert_eq!(box_from_extreme_points(&pts).unwrap(), b(0.1, 0.1, 0.9, 0.9));
        let same = [p(0.5, 0.5); 4];
        assert_eq!(box_from_extreme_points(&same).unwrap(), b(0.5, 0.5, 0.5, 0.5));
    }

    #[test]
    fn extreme_points_arity() {
        let pts = [p(0.1, 0.5), p(0.9, 0.5), p(0.5, 0.1)];
        assert!(matches!(
            box_from_extreme_points(&pts),
            Err(Error::Arity { expected: 4, got: 3 })
        ));
        let five = [p(0.1, 0.1); 5];
        assert!(box_from_extreme_points(&five).is_err());
    }

    #[test]
    fn iou_examples() {
        let a = b(0.1, 0.2, 0.6, 0.7);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&b(0.0, 0.0, 0.2, 0.2), &b(0.5, 0.5, 0.9, 0.9)), 0.0);
        assert_eq!(iou(&b(0.0, 0.0, 1.0, 1.0), &b(0.5, 0.0, 1.0, 1.0)), 0.5);
        let dot = b(0.3, 0.3, 0.3, 0.3);
        assert_eq!(iou(&dot, &dot), 0.0);
    }

    #[test]
    fn centers() {
        assert_eq!(box_center(&b(0.0, 0.0, 1.0, 1.0)), p(0.5, 0.5));
        let c = box_center(&b(0.2, 0.4, 0.2, 0.8));
        assert_eq!(c.x, 0.2);
        assert!((c.y - 0.6).abs() < 1e-15);
    }

    #[test]
    fn box_constructor_clamps_and_validates() {
        let c = BBox::new(-0.2, 0.1, 1.3, 0.4).unwrap();
        assert_eq!(c, b(0.0, 0.1, 1.0, 0.4));
        assert!(BBox::new(0.6, 0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn cell_center_convention() {
        let c: Point<f64> = cell_center(4, 8, 1, 3);
        assert_eq!(c, p(3.5 / 8.0, 1.5 / 4.0));
    }
}
