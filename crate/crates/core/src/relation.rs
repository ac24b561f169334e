//! Relations, relational maps and normalized relational scores.

use std::fmt;

use crate::approx::{self, ChmForm, ConvNormMode, Power};
use crate::error::{Error, Result};
use crate::grid::{square_span, Grid, MembershipGrid};
use crate::kernels::Kernel;
use crate::morphology::{self, TNorm};

/// Operator used to build a relational map from a source object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapMethod {
    ExactDilation(TNorm),
    Convolution(ConvNormMode),
    Chm { p: Power, eps: f64, form: ChmForm },
    GeneralizedMean { p: Power, tnorm: TNorm },
}

impl MapMethod {
    pub fn dilation() -> Self {
        MapMethod::ExactDilation(TNorm::Product)
    }

    pub fn convolution() -> Self {
        MapMethod::Convolution(ConvNormMode::KernelSum)
    }

    pub fn chm(p: Power) -> Self {
        MapMethod::Chm {
            p,
            eps: approx::DEFAULT_CHM_EPS,
            form: ChmForm::TNormValues,
        }
    }

    pub fn genmean(p: Power) -> Self {
        MapMethod::GeneralizedMean {
            p,
            tnorm: TNorm::Product,
        }
    }

    /// Short name used in file names and CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            MapMethod::ExactDilation(_) => "dilation",
            MapMethod::Convolution(_) => "conv",
            MapMethod::Chm { .. } => "chm",
            MapMethod::GeneralizedMean { .. } => "genmean",
        }
    }

    pub fn power(&self) -> Option<Power> {
        match *self {
            MapMethod::Chm { p, .. } | MapMethod::GeneralizedMean { p, .. } => Some(p),
            _ => None,
        }
    }

    pub fn with_power(self, p: Power) -> Self {
        match self {
            MapMethod::Chm { eps, form, .. } => MapMethod::Chm { p, eps, form },
            MapMethod::GeneralizedMean { tnorm, .. } => MapMethod::GeneralizedMean { p, tnorm },
            other => other,
        }
    }
}

impl fmt::Display for MapMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapMethod::ExactDilation(t) => write!(f, "dilation({t})"),
            MapMethod::Convolution(n) => write!(f, "conv({n})"),
            MapMethod::Chm { p, eps, form } => {
                write!(f, "chm(p={p}, eps={}, {form})", crate::io::format_real(*eps))
            }
            MapMethod::GeneralizedMean { p, tnorm } => write!(f, "genmean(p={p}, {tnorm})"),
        }
    }
}

/// A relation `(source k, target l, kernel B)` over a shared domain.
#[derive(Debug, Clone)]
pub struct Relation {
    pub source: MembershipGrid,
    pub target: MembershipGrid,
    pub kernel: Kernel,
}

impl Relation {
    pub fn new(source: MembershipGrid, target: MembershipGrid, kernel: Kernel) -> Result<Self> {
        source.check_same_shape(&target)?;
        Ok(Self {
            source,
            target,
            kernel,
        })
    }

    pub fn map(&self, method: MapMethod) -> Result<Grid> {
        source_map(&self.source, &self.kernel, method)
    }

    pub fn score(&self, method: MapMethod) -> Result<Score> {
        score(&self.map(method)?, &self.target)
    }
}

/// Relational map of a relation under `method`.
pub fn relational_map(rel: &Relation, method: MapMethod) -> Result<Grid> {
    rel.map(method)
}

/// Relational map of `source` dilated (or approximated) by `kernel`.
pub fn source_map(source: &MembershipGrid, kernel: &Kernel, method: MapMethod) -> Result<Grid> {
    Ok(match method {
        MapMethod::ExactDilation(t) => morphology::dilate(source, kernel, t).into_grid(),
        MapMethod::Convolution(mode) => approx::conv_map(source, kernel, mode)?,
        MapMethod::Chm { p, eps, form } => {
            approx::chm_map_with(source, kernel, p, eps, form)?.into_grid()
        }
        MapMethod::GeneralizedMean { p, tnorm } => {
            approx::genmean_map(source, kernel, p, tnorm)?.into_grid()
        }
    })
}

/// `Ψ = Φ · l`.
pub fn intersected_map(phi: &Grid, target: &Grid) -> Result<Grid> {
    phi.mul(target)
}

/// Normalized relational score `ΣΨ / Σl`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Score(pub f64);

impl Score {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn score(phi: &Grid, target: &Grid) -> Result<Score> {
    let mass = target.sum();
    if !(mass > 0.0) {
        return Err(Error::EmptyTarget);
    }
    let psi = intersected_map(phi, target)?;
    Ok(Score(psi.sum() / mass))
}

/// Target object placed at every position of the domain.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetShape {
    Pixel,
    Disk { radius: f64 },
    Square { side: usize },
    /// Arbitrary weighted offsets from the placement point.
    Custom(Vec<(i64, i64, f64)>),
}

impl Default for TargetShape {
    fn default() -> Self {
        TargetShape::Disk { radius: 5.0 }
    }
}

impl TargetShape {
    /// `(dx, dy, weight)` triples in row-major order (by `dy`, then `dx`).
    pub fn offsets(&self) -> Result<Vec<(i64, i64, f64)>> {
        let offsets = match self {
            TargetShape::Pixel => vec![(0, 0, 1.0)],
            TargetShape::Disk { radius } => {
                if !(*radius >= 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "target radius must be finite and non-negative, got {radius}"
                    )));
                }
                let r = radius.floor() as i64;
                let r2 = radius * radius;
                let mut v = Vec::new();
                for dy in -r..=r {
                    for dx in -r..=r {
                        if ((dx * dx + dy * dy) as f64) <= r2 {
                            v.push((dx, dy, 1.0));
                        }
                    }
                }
                v
            }
            TargetShape::Square { side } => {
                if *side == 0 {
                    return Err(Error::InvalidParameter("target side must be >= 1".into()));
                }
                let (lo, hi) = square_span(*side);
                let mut v = Vec::new();
                for dy in -lo..=hi {
                    for dx in -lo..=hi {
                        v.push((dx, dy, 1.0));
                    }
                }
                v
            }
            TargetShape::Custom(v) => {
                if let Some(&(_, _, w)) = v.iter().find(|(_, _, w)| !(0.0..=1.0).contains(w)) {
                    return Err(Error::InvalidParameter(format!(
                        "target weight {w} is outside [0, 1]"
                    )));
                }
                let mut v = v.clone();
                v.sort_by_key(|&(dx, dy, _)| (dy, dx));
                v
            }
        };
        if !offsets.iter().any(|&(_, _, w)| w > 0.0) {
            return Err(Error::InvalidParameter("target shape is empty".into()));
        }
        Ok(offsets)
    }

    /// The target placed at `(col, row)` as a full grid, clipped to the domain.
    pub fn place(&self, width: usize, height: usize, col: usize, row: usize) -> Result<Grid> {
        let mut values = vec![0.0; width * height];
        for (dx, dy, w) in self.offsets()? {
            if let Some(i) = offset_index(width, height, col, row, dx, dy) {
                values[i] = w;
            }
        }
        Grid::new(width, height, values)
    }
}

fn offset_index(width: usize, height: usize, col: usize, row: usize, dx: i64, dy: i64) -> Option<usize> {
    let c = col as i64 + dx;
    let r = row as i64 + dy;
    if c < 0 || r < 0 || c >= width as i64 || r >= height as i64 {
        None
    } else {
        Some(r as usize * width + c as usize)
    }
}

/// Relational score of `shape` placed at every pixel, against a fixed map `phi`.
///
/// Placements are clipped to the domain and normalized by the clipped target
/// mass. A placement with zero clipped mass yields NaN.
pub fn heatmap_from_map(phi: &Grid, shape: &TargetShape) -> Result<Grid> {
    use rayon::prelude::*;

    let offsets = shape.offsets()?;
    let (width, height) = (phi.width(), phi.height());
    let values = phi.values();
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(row, out_row)| {
        for (col, px) in out_row.iter_mut().enumerate() {
            let mut num = 0.0;
            let mut mass = 0.0;
            for &(dx, dy, w) in &offsets {
                if let Some(i) = offset_index(width, height, col, row, dx, dy) {
                    num += values[i] * w;
                    mass += w;
                }
            }
            *px = if mass > 0.0 { num / mass } else { f64::NAN };
        }
    });
    Ok(Grid::from_raw(width, height, out))
}

/// Score heatmap over all placements of a target shape. The map is computed once.
pub fn score_heatmap(
    source: &MembershipGrid,
    kernel: &Kernel,
    method: MapMethod,
    shape: &TargetShape,
) -> Result<Grid> {
    let phi = source_map(source, kernel, method)?;
    heatmap_from_map(&phi, shape)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// The column at the horizontal middle.
    MidX,
    /// The row at the vertical middle.
    MidY,
}

/// Central column (`MidX`) or row (`MidY`). Even sizes take the lower-middle index.
pub fn midcut(grid: &Grid, axis: Axis) -> Vec<f64> {
    match axis {
        Axis::MidX => {
            let col = (grid.width() - 1) / 2;
            (0..grid.height()).map(|row| grid.get(col, row)).collect()
        }
        Axis::MidY => grid.row((grid.height() - 1) / 2).to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_disk, PixelCoord};
    use crate::kernels::{directional_kernel, dot_kernel};

    #[test]
    fn convolution_with_dot_kernel_reproduces_source() {
        let src = make_disk(20, 20, PixelCoord::new(10, 10), 4.0).unwrap();
        let rel = Relation::new(src.clone(), src.clone(), dot_kernel(1, 1).unwrap()).unwrap();
        assert_eq!(rel.map(MapMethod::convolution()).unwrap(), *src.as_grid());
        assert_eq!(rel.score(MapMethod::convolution()).unwrap().value(), 1.0);
    }

    #[test]
    fn relation_requires_shared_domain() {
        let a = MembershipGrid::ones(3, 3).unwrap();
        let b = MembershipGrid::ones(4, 3).unwrap();
        assert!(Relation::new(a, b, dot_kernel(1, 1).unwrap()).is_err());
    }

    #[test]
    fn intersected_map_cases() {
        let phi = Grid::from_fn(4, 4, |c, r| (c + r) as f64 / 6.0).unwrap();
        let ones = Grid::filled(4, 4, 1.0).unwrap();
        assert_eq!(intersected_map(&phi, &ones).unwrap(), phi);

        let left = Grid::from_fn(4, 4, |c, _| if c < 2 { 1.0 } else { 0.0 }).unwrap();
        let right = Grid::from_fn(4, 4, |c, _| if c >= 2 { 0.7 } else { 0.0 }).unwrap();
        assert!(intersected_map(&left, &right).unwrap().values().iter().all(|&v| v == 0.0));

        let l = Grid::from_fn(4, 4, |c, r| ((3 * c + r) % 5) as f64 / 4.0).unwrap();
        let psi = intersected_map(&phi, &l).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(psi.get(c, r), phi.get(c, r) * l.get(c, r));
            }
        }
    }

    #[test]
    fn score_cases() {
        let phi = Grid::from_fn(10, 10, |c, _| if c < 5 { 1.0 } else { 0.0 }).unwrap();
        let inside = make_disk(10, 10, PixelCoord::new(2, 5), 2.0).unwrap();
        let outside = make_disk(10, 10, PixelCoord::new(7, 5), 2.0).unwrap();
        assert_eq!(score(&phi, &inside).unwrap().value(), 1.0);
        assert_eq!(score(&phi, &outside).unwrap().value(), 0.0);
        let c = Grid::filled(10, 10, 0.4).unwrap();
        assert!((score(&c, &outside).unwrap().value() - 0.4).abs() < 1e-15);
        let empty = MembershipGrid::zeros(10, 10).unwrap();
        assert!(matches!(score(&phi, &empty), Err(Error::EmptyTarget)));
    }

    #[test]
    fn pixel_heatmap_is_the_map() {
        let src = make_disk(16, 12, PixelCoord::new(4, 6), 2.0).unwrap();
        let k = directional_kernel(31, 23, 0.0, 1.0).unwrap();
        let phi = source_map(&src, &k, MapMethod::dilation()).unwrap();
        let h = score_heatmap(&src, &k, MapMethod::dilation(), &TargetShape::Pixel).unwrap();
        assert_eq!(h, phi);
    }

    #[test]
    fn constant_map_gives_constant_heatmap() {
        let phi = Grid::filled(9, 7, 0.3).unwrap();
        for shape in [
            TargetShape::Pixel,
            TargetShape::Disk { radius: 2.0 },
            TargetShape::Square { side: 4 },
        ] {
            let h = heatmap_from_map(&phi, &shape).unwrap();
            assert!(h.values().iter().all(|&v| (v - 0.3).abs() < 1e-15));
        }
    }

    #[test]
    fn heatmap_matches_per_placement_scores() {
        let src = make_disk(24, 20, PixelCoord::new(5, 10), 2.0).unwrap();
        let k = directional_kernel(47, 39, 0.0, 1.0).unwrap();
        let phi = source_map(&src, &k, MapMethod::dilation()).unwrap();
        let shape = TargetShape::Disk { radius: 5.0 };
        let h = heatmap_from_map(&phi, &shape).unwrap();
        for row in 0..20 {
            for col in 0..24 {
                let l = shape.place(24, 20, col, row).unwrap();
                assert_eq!(h.get(col, row), score(&phi, &l).unwrap().value());
            }
        }
    }

    #[test]
    fn custom_shape_without_center_yields_nan_off_domain() {
        let phi = Grid::filled(5, 5, 0.5).unwrap();
        let shape = TargetShape::Custom(vec![(3, 0, 1.0)]);
        let h = heatmap_from_map(&phi, &shape).unwrap();
        assert_eq!(h.get(0, 0), 0.5);
        assert!(h.get(3, 0).is_nan());
        assert!(TargetShape::Custom(vec![(0, 0, 0.0)]).offsets().is_err());
    }

    #[test]
    fn midcut_indexing() {
        let g = Grid::from_fn(100, 100, |c, r| (c * 1000 + r) as f64).unwrap();
        let x = midcut(&g, Axis::MidX);
        assert_eq!(x.len(), 100);
        assert_eq!(x[7], (49 * 1000 + 7) as f64);
        let y = midcut(&g, Axis::MidY);
        assert_eq!(y[7], (7 * 1000 + 49) as f64);

        let c = Grid::filled(5, 4, 0.25).unwrap();
        assert!(midcut(&c, Axis::MidX).iter().all(|&v| v == 0.25));
        assert_eq!(midcut(&c, Axis::MidY).len(), 5);
    }
}
