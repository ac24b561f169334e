//! Analytic gradients of the convolution-approximated score
//! `S = Σ_u (k * B)(u) l(u) / Σ_u l(u)` and a finite-difference checker.
//!
//! Only the source `k` and target `l` appear in `S`; the derivative with
//! respect to any other object is identically zero.

use crate::approx::{conv_map, ConvNormMode};
use crate::engine;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::Kernel;

/// Per-pixel partial derivatives; same shape as the grid being differentiated.
pub type GradientGrid = Grid;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

fn target_mass(target: &Grid) -> Result<f64> {
    let mass = target.sum();
    if mass > 0.0 {
        Ok(mass)
    } else {
        Err(Error::EmptyTarget)
    }
}

/// `S_*` for real-valued grids (no `[0, 1]` check, so FD probes can step outside it).
///
/// `Φ_*` is only evaluated where the target is non-zero, by direct summation.
pub fn conv_score(source: &Grid, target: &Grid, kernel: &Kernel, mode: ConvNormMode) -> Result<f64> {
    source.check_same_shape(target)?;
    let mass = target_mass(target)?;
    let norm = match mode {
        ConvNormMode::None => 1.0,
        ConvNormMode::KernelSum => kernel.mass(),
    };
    let (width, height) = (source.width() as i64, source.height() as i64);
    let (hx, hy) = (kernel.half_x() as i64, kernel.half_y() as i64);
    let mut psi = 0.0;
    for (i, &l) in target.values().iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        let (uc, ur) = (i as i64 % width, i as i64 / width);
        let mut phi = 0.0;
        for tr in (ur - hy).max(0)..=(ur + hy).min(height - 1) {
            for tc in (uc - hx).max(0)..=(uc + hx).min(width - 1) {
                phi += source.get(tc as usize, tr as usize) * kernel.weight(uc - tc, ur - tr);
            }
        }
        psi += phi / norm * l;
    }
    Ok(psi / mass)
}

/// `∂S/∂k(x) = Σ_u l(u) B(u - x) / Σ_u l(u)`, divided by `ΣB` under `KernelSum`.
///
/// Does not depend on the source.
pub fn ds_dk(target: &Grid, kernel: &Kernel, mode: ConvNormMode) -> Result<GradientGrid> {
    let mut scale = target_mass(target)?;
    if mode == ConvNormMode::KernelSum {
        scale *= kernel.mass();
    }
    Ok(engine::correlate(target, kernel).map(|v| v / scale))
}

/// `∂S/∂l(x) = (Φ(x) Σl - ΣΨ) / (Σl)²` with `Φ` the convolution map under `mode`.
pub fn ds_dl(
    source: &Grid,
    target: &Grid,
    kernel: &Kernel,
    mode: ConvNormMode,
) -> Result<GradientGrid> {
    source.check_same_shape(target)?;
    let mass = target_mass(target)?;
    let phi = conv_map(source, kernel, mode)?;
    let psi_sum = phi.mul(target)?.sum();
    let denom = mass * mass;
    Ok(phi.map(|f| (f * mass - psi_sum) / denom))
}

/// Largest relative deviation between central differences of `score_fn` at
/// `at` and the `analytic` gradient: `max |fd - g| / max(1, |g|)`.
pub fn fd_check<F>(score_fn: F, at: &Grid, analytic: &GradientGrid, step: f64) -> Result<f64>
where
    F: Fn(&Grid) -> Result<f64>,
{
    let all: Vec<usize> = (0..at.len()).collect();
    fd_check_at(score_fn, at, analytic, step, &all)
}

/// [`fd_check`] restricted to the given pixel indices (row-major).
pub fn fd_check_at<F>(
    score_fn: F,
    at: &Grid,
    analytic: &GradientGrid,
    step: f64,
    indices: &[usize],
) -> Result<f64>
where
    F: Fn(&Grid) -> Result<f64>,
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    at.check_same_shape(analytic)?;
    if let Some(&i) = indices.iter().find(|&&i| i >= at.len()) {
        return Err(Error::InvalidParameter(format!("pixel index {i} out of range")));
    }
    let mut probe = at.clone().into_values();
    let mut worst = 0.0f64;
    for &i in indices {
        let orig = probe[i];
        probe[i] = orig + step;
        let plus = score_fn(&Grid::from_raw(at.width(), at.height(), probe.clone()))?;
        probe[i] = orig - step;
        let minus = score_fn(&Grid::from_raw(at.width(), at.height(), probe.clone()))?;
        probe[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "score is not finite when probing pixel {i}"
            )));
        }
        let fd = (plus - minus) / (2.0 * step);
        let g = analytic.values()[i];
        worst = worst.max((fd - g).abs() / g.abs().max(1.0));
    }
    Ok(worst)
}
