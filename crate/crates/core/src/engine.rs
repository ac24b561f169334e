//! Direct-loop sliding-window evaluation shared by every map operator.
//!
//! For an output pixel `x` and kernel `K` with half-widths `(hx, hy)`, the
//! window visits every image pixel `y` with `|y - x| <= (hx, hy)` that lies
//! inside the image (zero padding), paired with `K(y - x)`. Callers that
//! need `w(x - y)` pass the flipped kernel.
//!
//! Rows are evaluated in parallel; each output pixel is computed by a single
//! closure call with a fixed visiting order, so results do not depend on the
//! thread schedule.

use rayon::prelude::*;

use crate::grid::Grid;
use crate::kernels::Kernel;

#[derive(Debug, Clone, Copy)]
struct Span {
    img_start: usize,
    ker_start: usize,
    len: usize,
}

fn span(center: usize, half: usize, extent: usize) -> Span {
    let img_start = center.saturating_sub(half);
    let img_end = (center + half).min(extent - 1);
    Span {
        img_start,
        ker_start: img_start + half - center,
        len: img_end + 1 - img_start,
    }
}

pub(crate) struct Window<'a> {
    img: &'a [f64],
    img_width: usize,
    ker: &'a [f64],
    ker_width: usize,
    rows: Span,
    cols: Span,
}

impl Window<'_> {
    /// Folds `(image value, kernel weight)` pairs in row-major order.
    #[inline]
    pub(crate) fn fold<A>(&self, init: A, mut f: impl FnMut(A, f64, f64) -> A) -> A {
        let mut acc = init;
        for i in 0..self.rows.len {
            let ir = self.rows.img_start + i;
            let kr = self.rows.ker_start + i;
            let img_row = &self.img[ir * self.img_width + self.cols.img_start..][..self.cols.len];
            let ker_row = &self.ker[kr * self.ker_width + self.cols.ker_start..][..self.cols.len];
            for (&m, &k) in img_row.iter().zip(ker_row) {
                acc = f(acc, m, k);
            }
        }
        acc
    }
}

/// Evaluates `f` on the window around every pixel of `img`.
pub(crate) fn map_windows<F>(img: &Grid, kernel: &Kernel, f: F) -> Grid
where
    F: Fn(&Window<'_>) -> f64 + Sync,
{
    let (width, height) = (img.width(), img.height());
    let (hx, hy) = (kernel.half_x(), kernel.half_y());
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width)
        .enumerate()
        .for_each(|(row, out_row)| {
            let rows = span(row, hy, height);
            for (col, out_px) in out_row.iter_mut().enumerate() {
                let win = Window {
                    img: img.values(),
                    img_width: width,
                    ker: kernel.values(),
                    ker_width: kernel.size_x(),
                    rows,
                    cols: span(col, hx, width),
                };
                *out_px = f(&win);
            }
        });
    Grid::from_raw(width, height, out)
}

/// `out(x) = Σ_y img(y) · kernel(y - x)`.
pub(crate) fn correlate(img: &Grid, kernel: &Kernel) -> Grid {
    map_windows(img, kernel, |w| w.fold(0.0, |acc, m, k| acc + m * k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_clips_at_borders() {
        let s = span(0, 2, 10);
        assert_eq!((s.img_start, s.ker_start, s.len), (0, 2, 3));
        let s = span(9, 2, 10);
        assert_eq!((s.img_start, s.ker_start, s.len), (7, 0, 3));
        let s = span(5, 2, 10);
        assert_eq!((s.img_start, s.ker_start, s.len), (3, 0, 5));
        // Kernel wider than the image.
        let s = span(1, 5, 3);
        assert_eq!((s.img_start, s.ker_start, s.len), (0, 4, 3));
    }

    #[test]
    fn correlate_matches_direct_sum() {
        let img = Grid::from_fn(4, 3, |c, r| (c + 10 * r) as f64).unwrap();
        let k = Kernel::from_offsets(3, 3, |dx, dy| ((dx + 1) + 3 * (dy + 1)) as f64 / 10.0)
            .unwrap();
        let out = correlate(&img, &k);
        for r in 0..3i64 {
            for c in 0..4i64 {
                let mut expect = 0.0;
                for yr in 0..3i64 {
                    for yc in 0..4i64 {
                        expect += img.get(yc as usize, yr as usize) * k.weight(yc - c, yr - r);
                    }
                }
                assert!((out.get(c as usize, r as usize) - expect).abs() < 1e-12);
            }
        }
    }
}
