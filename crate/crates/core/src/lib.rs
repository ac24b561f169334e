//! Spatial relation maps from fuzzy mathematical morphology.
//!
//! A relation between a source object `k` and a target object `l` is
//! encoded by a structuring element `B`. Dilating `k` by `B` gives a
//! relational map `Φ`; the normalized score `Σ Φ·l / Σ l` measures how well
//! `l` satisfies the relation. This crate provides the exact dilation, three
//! differentiable approximations (convolution, counter-harmonic mean,
//! generalized mean), score heatmaps, analytic gradients of the convolution
//! score, and a benchmark harness comparing the approximations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod bench;
pub mod cli;
mod engine;
pub mod error;
pub mod grad;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod morphology;
pub mod relation;

pub use approx::{chm_map, chm_map_with, conv_map, genmean_map, ChmForm, ConvNormMode, Power};
pub use error::{Error, Result};
pub use grid::{Grid, MembershipGrid, PixelCoord};
pub use kernels::Kernel;
pub use morphology::{dilate, TNorm};
pub use relation::{MapMethod, Relation, Score, TargetShape};
