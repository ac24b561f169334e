//! Exact fuzzy dilation `δ_w m(x) = max_y t(w(x - y), m(y))`.
//!
//! This is the reference operator every approximation is measured against.
//! It is a plain direct loop over the kernel support with zero padding.

use std::fmt;
use std::str::FromStr;

use crate::engine;
use crate::grid::MembershipGrid;
use crate::kernels::Kernel;

/// Triangular norm used to combine a structuring-element weight with a membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TNorm {
    #[default]
    Product,
    Minimum,
}

impl TNorm {
    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            TNorm::Product => a * b,
            TNorm::Minimum => a.min(b),
        }
    }
}

impl fmt::Display for TNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TNorm::Product => "product",
            TNorm::Minimum => "minimum",
        })
    }
}

impl FromStr for TNorm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "product" | "prod" => Ok(TNorm::Product),
            "minimum" | "min" => Ok(TNorm::Minimum),
            other => Err(format!("unknown t-norm '{other}' (expected product or minimum)")),
        }
    }
}

/// Fuzzy dilation of `m` by the structuring element `w`.
pub fn dilate(m: &MembershipGrid, w: &Kernel, tnorm: TNorm) -> MembershipGrid {
    let flipped = w.flipped();
    let out = match tnorm {
        TNorm::Product => engine::map_windows(m, &flipped, |win| {
            win.fold(0.0, |acc: f64, v, k| acc.max(k * v))
        }),
        TNorm::Minimum => engine::map_windows(m, &flipped, |win| {
            win.fold(0.0, |acc: f64, v, k| acc.max(k.min(v)))
        }),
    };
    MembershipGrid::from_grid_unchecked(out)
}

/// True when the origin of `w` has full membership, which makes dilation extensive.
pub fn is_extensive(w: &Kernel) -> bool {
    w.origin_weight() == 1.0
}
