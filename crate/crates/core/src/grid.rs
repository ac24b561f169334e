//! Dense 2D grids.
//!
//! [`Grid`] is an unconstrained row-major array of reals (raw convolution
//! maps, gradients, score heatmaps). [`MembershipGrid`] wraps a `Grid` whose
//! values are all in `[0, 1]`: objects, relational maps and intersected maps.
//!
//! Coordinates are `(col, row)` with the origin at the top-left pixel.

use std::ops::Deref;

use crate::error::{Error, Result};

/// A pixel position, `col` along X (left to right), `row` along Y (top to bottom).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelCoord {
    pub col: usize,
    pub row: usize,
}

impl PixelCoord {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

/// Row-major grid of reals with no range constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if values.len() != width * height {
            return Err(Error::InvalidDimension(format!(
                "{width}x{height} grid needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            values: vec![value; width * height],
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut values = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                values.push(f(col, row));
            }
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Internal constructor for buffers whose length is already known to match.
    pub(crate) fn from_raw(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn at(&self, p: PixelCoord) -> f64 {
        self.get(p.col, p.row)
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.width..(row + 1) * self.width]
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_shape(&self, other: &Grid) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            })
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &Grid) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Pointwise product with a grid of the same shape.
    pub fn mul(&self, other: &Grid) -> Result<Grid> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn zip_with(&self, other: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Grid> {
        self.check_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Grid::from_raw(self.width, self.height, values))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid::from_raw(
            self.width,
            self.height,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Validates the `[0, 1]` invariant.
    pub fn into_membership(self) -> Result<MembershipGrid> {
        MembershipGrid::try_from(self)
    }
}

/// A grid whose values are memberships in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipGrid(Grid);

impl MembershipGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        Grid::new(width, height, values)?.into_membership()
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Ok(Self(Grid::filled(width, height, 0.0)?))
    }

    pub fn ones(width: usize, height: usize) -> Result<Self> {
        Ok(Self(Grid::filled(width, height, 1.0)?))
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Grid::filled(width, height, value)?.into_membership()
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        Grid::from_fn(width, height, f)?.into_membership()
    }

    /// Wraps a grid after clamping every value into `[0, 1]`. NaN becomes 0.
    pub fn clamped(grid: Grid) -> Self {
        let g = grid.map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) });
        Self(g)
    }

    /// Caller guarantees every value is in `[0, 1]`.
    pub(crate) fn from_grid_unchecked(grid: Grid) -> Self {
        debug_assert!(grid.values().iter().all(|v| (0.0..=1.0).contains(v)));
        Self(grid)
    }

    pub fn as_grid(&self) -> &Grid {
        &self.0
    }

    pub fn into_grid(self) -> Grid {
        self.0
    }
}

impl Deref for MembershipGrid {
    type Target = Grid;

    fn deref(&self) -> &Grid {
        &self.0
    }
}

impl TryFrom<Grid> for MembershipGrid {
    type Error = Error;

    fn try_from(grid: Grid) -> Result<Self> {
        if let Some((index, &value)) = grid
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::OutOfRange { index, value });
        }
        Ok(Self(grid))
    }
}

impl From<MembershipGrid> for Grid {
    fn from(m: MembershipGrid) -> Grid {
        m.0
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimension(format!(
            "grid dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(())
}

fn check_center(width: usize, height: usize, center: PixelCoord) -> Result<()> {
    check_dims(width, height)?;
    if center.col >= width || center.row >= height {
        return Err(Error::InvalidParameter(format!(
            "center ({}, {}) lies outside the {width}x{height} grid",
            center.col, center.row
        )));
    }
    Ok(())
}

/// Crisp disk: 1 where the Euclidean distance between pixel centers is `<= radius`.
pub fn make_disk(
    width: usize,
    height: usize,
    center: PixelCoord,
    radius: f64,
) -> Result<MembershipGrid> {
    check_center(width, height, center)?;
    if !(radius >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "disk radius must be non-negative, got {radius}"
        )));
    }
    let r2 = radius * radius;
    let grid = Grid::from_fn(width, height, |col, row| {
        let dx = col as f64 - center.col as f64;
        let dy = row as f64 - center.row as f64;
        if dx * dx + dy * dy <= r2 {
            1.0
        } else {
            0.0
        }
    })?;
    Ok(MembershipGrid(grid))
}

/// Crisp axis-aligned square clipped to the grid.
///
/// An odd side spans `-(side-1)/2 ..= (side-1)/2` around `center`; an even
/// side spans `-(side/2 - 1) ..= side/2`, so `center` is the top-left pixel of
/// the central 2x2 block.
pub fn make_square(
    width: usize,
    height: usize,
    center: PixelCoord,
    side: usize,
) -> Result<MembershipGrid> {
    check_center(width, height, center)?;
    if side == 0 {
        return Err(Error::InvalidDimension("square side must be >= 1".into()));
    }
    let (lo, hi) = square_span(side);
    let (cc, cr) = (center.col as i64, center.row as i64);
    let grid = Grid::from_fn(width, height, |col, row| {
        let dx = col as i64 - cc;
        let dy = row as i64 - cr;
        if (-lo..=hi).contains(&dx) && (-lo..=hi).contains(&dy) {
            1.0
        } else {
            0.0
        }
    })?;
    Ok(MembershipGrid(grid))
}

/// Offsets `(lo, hi)` such that a square of `side` covers `-lo ..= hi`.
pub(crate) fn square_span(side: usize) -> (i64, i64) {
    let side = side as i64;
    ((side - 1) / 2, side / 2)
}

/// Per-pixel product of two membership grids.
pub fn elementwise_mul(a: &MembershipGrid, b: &MembershipGrid) -> Result<MembershipGrid> {
    // Products of values in [0, 1] stay in [0, 1].
    Ok(MembershipGrid(a.mul(b)?))
}

pub fn grid_sum(a: &Grid) -> f64 {
    a.sum()
}

/// Per-pixel `v^p`, with `0^0 = 1`.
pub fn elementwise_pow(a: &Grid, p: f64) -> Result<Grid> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "power must be finite and non-negative, got {p}"
        )));
    }
    Ok(a.map(|v| v.powf(p)))
}
