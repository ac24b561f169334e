//! Fuzzy structuring elements.
//!
//! A [`Kernel`] is an odd-sized weight grid whose origin is the central pixel.
//! Weights are addressed by signed offsets `(dx, dy)` from that origin, with
//! `dx` along columns and `dy` along rows (downwards).

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size_x: usize,
    size_y: usize,
    values: Vec<f64>,
}

impl Kernel {
    pub fn new(size_x: usize, size_y: usize, values: Vec<f64>) -> Result<Self> {
        check_sizes(size_x, size_y)?;
        if values.len() != size_x * size_y {
            return Err(Error::InvalidKernel(format!(
                "{size_x}x{size_y} kernel needs {} weights, got {}",
                size_x * size_y,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidKernel(format!(
                "weight {v} is outside [0, 1]"
            )));
        }
        if !values.iter().any(|&v| v > 0.0) {
            return Err(Error::InvalidKernel("all weights are zero".into()));
        }
        Ok(Self {
            size_x,
            size_y,
            values,
        })
    }

    /// Builds a kernel from a weight function of the offset from the origin.
    pub fn from_offsets(
        size_x: usize,
        size_y: usize,
        mut weight: impl FnMut(i64, i64) -> f64,
    ) -> Result<Self> {
        check_sizes(size_x, size_y)?;
        let (hx, hy) = ((size_x / 2) as i64, (size_y / 2) as i64);
        let mut values = Vec::with_capacity(size_x * size_y);
        for dy in -hy..=hy {
            for dx in -hx..=hx {
                values.push(weight(dx, dy));
            }
        }
        Self::new(size_x, size_y, values)
    }

    pub fn size_x(&self) -> usize {
        self.size_x
    }

    pub fn size_y(&self) -> usize {
        self.size_y
    }

    /// Half-widths: offsets range over `-half_x ..= half_x`.
    pub fn half_x(&self) -> usize {
        self.size_x / 2
    }

    pub fn half_y(&self) -> usize {
        self.size_y / 2
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Weight at offset `(dx, dy)`; 0 outside the support.
    pub fn weight(&self, dx: i64, dy: i64) -> f64 {
        let (hx, hy) = (self.half_x() as i64, self.half_y() as i64);
        if dx.abs() > hx || dy.abs() > hy {
            return 0.0;
        }
        self.values[((dy + hy) as usize) * self.size_x + (dx + hx) as usize]
    }

    pub fn origin_weight(&self) -> f64 {
        self.weight(0, 0)
    }

    /// Total weight.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Number of offsets with positive weight.
    pub fn positive_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }

    /// Point reflection through the origin: `flipped(v) = self(-v)`.
    pub fn flipped(&self) -> Kernel {
        let mut values = self.values.clone();
        values.reverse();
        Kernel {
            size_x: self.size_x,
            size_y: self.size_y,
            values,
        }
    }
}

fn check_sizes(size_x: usize, size_y: usize) -> Result<()> {
    if size_x.is_multiple_of(2) || size_y.is_multiple_of(2) {
        return Err(Error::InvalidKernel(format!(
            "kernel sizes must be odd, got {size_x}x{size_y}"
        )));
    }
    Ok(())
}

/// Kernel size that lets every offset between two pixels of a
/// `width x height` image be represented.
pub fn full_support(width: usize, height: usize) -> (usize, usize) {
    (2 * width - 1, 2 * height - 1)
}

/// "In direction of" kernel: weight `max(0, 1 - 2θ/π)` where θ is the angle
/// between the offset and the direction.
///
/// `direction` is in radians, counter-clockwise with X to the right and Y up
/// (so `0` is "right of", `π/2` is "above", `π` is "left of").
pub fn directional_kernel(
    size_x: usize,
    size_y: usize,
    direction: f64,
    origin_value: f64,
) -> Result<Kernel> {
    if !(0.0..=1.0).contains(&origin_value) {
        return Err(Error::InvalidKernel(format!(
            "origin value {origin_value} is outside [0, 1]"
        )));
    }
    if !direction.is_finite() {
        return Err(Error::InvalidKernel("direction must be finite".into()));
    }
    // Unit vector in (col, row) coordinates; rows grow downwards.
    let (ux, uy) = (direction.cos(), -direction.sin());
    Kernel::from_offsets(size_x, size_y, |dx, dy| {
        if dx == 0 && dy == 0 {
            return origin_value;
        }
        let (vx, vy) = (dx as f64, dy as f64);
        let dot = vx * ux + vy * uy;
        let cross = vx * uy - vy * ux;
        let theta = cross.abs().atan2(dot);
        (1.0 - theta / FRAC_PI_2).max(0.0)
    })
}

fn check_radius(name: &str, r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidKernel(format!(
            "{name} must be finite and non-negative, got {r}"
        )));
    }
    Ok(())
}

fn radius(dx: i64, dy: i64) -> f64 {
    ((dx * dx + dy * dy) as f64).sqrt()
}

/// Trapezoidal radial membership: 0 below `r1`, rising to 1 on `[r1, r2]`,
/// 1 on `[r2, r3]`, falling to 0 on `[r3, r4]`.
pub(crate) fn trapezoid(d: f64, r1: f64, r2: f64, r3: f64, r4: f64) -> f64 {
    if d < r1 {
        0.0
    } else if d < r2 {
        (d - r1) / (r2 - r1)
    } else if d <= r3 {
        1.0
    } else if d < r4 {
        (r4 - d) / (r4 - r3)
    } else {
        0.0
    }
}

/// Ring ("crown") kernel for closeness with an optional minimal distance.
/// `r1 = r2 = 0` gives a fuzzy disk that decreases with distance.
pub fn ring_kernel(
    size_x: usize,
    size_y: usize,
    r1: f64,
    r2: f64,
    r3: f64,
    r4: f64,
) -> Result<Kernel> {
    for (name, r) in [("r1", r1), ("r2", r2), ("r3", r3), ("r4", r4)] {
        check_radius(name, r)?;
    }
    if !(r1 <= r2 && r2 <= r3 && r3 <= r4) {
        return Err(Error::InvalidKernel(format!(
            "ring radii must satisfy r1 <= r2 <= r3 <= r4, got {r1}, {r2}, {r3}, {r4}"
        )));
    }
    Kernel::from_offsets(size_x, size_y, |dx, dy| {
        trapezoid(radius(dx, dy), r1, r2, r3, r4)
    })
}

/// "Far from" kernel: 0 up to `r_a`, rising linearly to 1 at `r_b`, 1 beyond.
pub fn far_kernel(size_x: usize, size_y: usize, r_a: f64, r_b: f64) -> Result<Kernel> {
    check_radius("r_a", r_a)?;
    check_radius("r_b", r_b)?;
    if r_a > r_b {
        return Err(Error::InvalidKernel(format!(
            "far radii must satisfy r_a <= r_b, got {r_a}, {r_b}"
        )));
    }
    Kernel::from_offsets(size_x, size_y, |dx, dy| {
        let d = radius(dx, dy);
        if d <= r_a {
            0.0
        } else if d < r_b {
            (d - r_a) / (r_b - r_a)
        } else {
            1.0
        }
    })
}

/// Identity structuring element.
pub fn dot_kernel(size_x: usize, size_y: usize) -> Result<Kernel> {
    Kernel::from_offsets(size_x, size_y, |dx, dy| {
        if dx == 0 && dy == 0 {
            1.0
        } else {
            0.0
        }
    })
}

pub fn flip_kernel(b: &Kernel) -> Kernel {
    b.flipped()
}

/// Named direction angles.
pub mod direction {
    use super::*;

    pub const RIGHT: f64 = 0.0;
    pub const ABOVE: f64 = FRAC_PI_2;
    pub const LEFT: f64 = PI;
    pub const BELOW: f64 = -FRAC_PI_2;
}
