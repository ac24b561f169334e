//! Differentiable approximations of the dilation-based relational map.
//!
//! * [`conv_map`]: plain convolution with the structuring element.
//! * [`chm_map`]: counter-harmonic mean, tends to the dilation as `p → ∞`.
//! * [`genmean_map`]: generalized (power) mean, tends to the dilation as `p → ∞`.
//!
//! The two mean methods factor the per-pixel maximum `τ` out of the power
//! sums before raising anything to the `p`-th power. Without it, `0.5^100`
//! and smaller terms underflow and the approximations collapse to 0 away
//! from the source.

use std::fmt;
use std::str::FromStr;

use crate::engine;
use crate::error::{Error, Result};
use crate::grid::{Grid, MembershipGrid};
use crate::kernels::Kernel;
use crate::morphology::TNorm;

/// Default exponent for both mean approximations.
pub const DEFAULT_P: f64 = 100.0;

/// Default denominator guard for [`chm_map`].
pub const DEFAULT_CHM_EPS: f64 = 1e-30;

/// Normalization applied to the convolution map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvNormMode {
    /// Raw `k * B`; values may exceed 1.
    None,
    /// `(k * B) / ΣB`, always in `[0, 1]` for inputs in `[0, 1]`.
    #[default]
    KernelSum,
}

impl fmt::Display for ConvNormMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvNormMode::None => "none",
            ConvNormMode::KernelSum => "kernel-sum",
        })
    }
}

impl FromStr for ConvNormMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" | "raw" => Ok(ConvNormMode::None),
            "kernel-sum" | "kernel_sum" => Ok(ConvNormMode::KernelSum),
            other => Err(format!(
                "unknown normalization '{other}' (expected none or kernel-sum)"
            )),
        }
    }
}

/// Exponent of a mean approximation. Strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Power(f64);

impl Power {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p.is_finite() {
            Ok(Self(p))
        } else {
            Err(Error::InvalidParameter(format!(
                "power must be positive and finite, got {p}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for Power {
    fn default() -> Self {
        Self(DEFAULT_P)
    }
}

impl fmt::Display for Power {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Which quantities the counter-harmonic mean averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChmForm {
    /// CHM of the t-norm values `w(x-y)·m(y)`:
    /// `Σ (w m)^(p+1) / Σ (w m)^p`. Tends to the fuzzy dilation.
    #[default]
    TNormValues,
    /// CHM of `m` weighted by `w`: `(m^(p+1) * w) / (m^p * w)`. Tends to the
    /// flat dilation by the support of `w`, so it only matches the fuzzy
    /// dilation for crisp kernels.
    Weighted,
}

impl fmt::Display for ChmForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChmForm::TNormValues => "tnorm",
            ChmForm::Weighted => "weighted",
        })
    }
}

impl FromStr for ChmForm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tnorm" | "tnorm-values" => Ok(ChmForm::TNormValues),
            "weighted" => Ok(ChmForm::Weighted),
            other => Err(format!(
                "unknown CHM form '{other}' (expected tnorm or weighted)"
            )),
        }
    }
}

/// Convolution-approximated relational map `k * B` (optionally divided by `ΣB`).
///
/// Accepts any real grid so that finite-difference probes slightly outside
/// `[0, 1]` can be evaluated.
pub fn conv_map(k: &Grid, b: &Kernel, mode: ConvNormMode) -> Result<Grid> {
    let raw = engine::correlate(k, &b.flipped());
    match mode {
        ConvNormMode::None => Ok(raw),
        ConvNormMode::KernelSum => {
            let mass = b.mass();
            if !(mass > 0.0) {
                return Err(Error::InvalidKernel("kernel mass must be positive".into()));
            }
            Ok(raw.map(|v| v / mass))
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "eps must be positive and finite, got {eps}"
        )))
    }
}

/// Counter-harmonic mean map in the default [`ChmForm::TNormValues`] form.
pub fn chm_map(m: &MembershipGrid, w: &Kernel, p: Power, eps: f64) -> Result<MembershipGrid> {
    chm_map_with(m, w, p, eps, ChmForm::TNormValues)
}

/// Counter-harmonic mean map. The output is clamped to `[0, 1]`.
///
/// In the t-norm form the sums are normalized by the window maximum `τ`, so
/// the denominator is at least 1 wherever `τ > 0` and `eps` only matters
/// where it is not. In the weighted form `eps` is added to the raw
/// `m^p * w` convolution.
pub fn chm_map_with(
    m: &MembershipGrid,
    w: &Kernel,
    p: Power,
    eps: f64,
    form: ChmForm,
) -> Result<MembershipGrid> {
    check_eps(eps)?;
    let p = p.get();
    let out = match form {
        ChmForm::TNormValues => {
            let flipped = w.flipped();
            engine::map_windows(m, &flipped, |win| {
                let tau = win.fold(0.0, |acc: f64, v, k| acc.max(k * v));
                if tau == 0.0 {
                    return 0.0;
                }
                let (num, den) = win.fold((0.0, 0.0), |(num, den), v, k| {
                    let t = k * v;
                    if t == 0.0 {
                        return (num, den);
                    }
                    let r = t / tau;
                    let rp = r.powf(p);
                    (num + rp * r, den + rp)
                });
                tau * num / (den + eps)
            })
        }
        ChmForm::Weighted => {
            let flipped = w.flipped();
            let mp = m.map(|v| v.powf(p));
            let mp1 = m.map(|v| v.powf(p + 1.0));
            let num = engine::correlate(&mp1, &flipped);
            let den = engine::correlate(&mp, &flipped);
            num.zip_with(&den, |n, d| n / (d + eps))?
        }
    };
    Ok(MembershipGrid::clamped(out))
}

/// Generalized-mean map `[Σ_y t(w(x-y), m(y))^p / Σ w]^(1/p)`.
///
/// The normalizer is the total kernel mass. Output is clamped to `[0, 1]`
/// (the power sum can only exceed the mass for `p < 1`).
pub fn genmean_map(
    m: &MembershipGrid,
    w: &Kernel,
    p: Power,
    tnorm: TNorm,
) -> Result<MembershipGrid> {
    let mass = w.mass();
    if !(mass > 0.0) {
        return Err(Error::InvalidKernel("kernel mass must be positive".into()));
    }
    let p = p.get();
    let inv_p = 1.0 / p;
    let flipped = w.flipped();
    let out = engine::map_windows(m, &flipped, |win| {
        let tau = win.fold(0.0, |acc: f64, v, k| acc.max(tnorm.apply(k, v)));
        if tau == 0.0 {
            return 0.0;
        }
        let sum = win.fold(0.0, |acc, v, k| {
            let t = tnorm.apply(k, v);
            if t == 0.0 {
                acc
            } else {
                acc + (t / tau).powf(p)
            }
        });
        tau * (sum / mass).powf(inv_p)
    });
    Ok(MembershipGrid::clamped(out))
}

/// Scalar power mean `((x^p + y^p) / 2)^(1/p)`, an approximation of `max(x, y)`.
pub fn power_mean_pair(x: f64, y: f64, p: f64) -> f64 {
    let tau = x.max(y);
    if tau <= 0.0 {
        return 0.0;
    }
    let s = (x / tau).powf(p) + (y / tau).powf(p);
    tau * (s / 2.0).powf(1.0 / p)
}

/// Scalar counter-harmonic mean `(x^(p+1) + y^(p+1)) / (x^p + y^p)`.
pub fn chm_pair(x: f64, y: f64, p: f64) -> f64 {
    let tau = x.max(y);
    if tau <= 0.0 {
        return 0.0;
    }
    let (rx, ry) = (x / tau, y / tau);
    let (px, py) = (rx.powf(p), ry.powf(p));
    tau * (px * rx + py * ry) / (px + py)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{dot_kernel, flip_kernel, ring_kernel};
    use crate::morphology::dilate;

    fn lcg_grid(width: usize, height: usize, seed: u64, lo: f64) -> MembershipGrid {
        let mut s = seed;
        MembershipGrid::from_fn(width, height, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            lo + (1.0 - lo) * ((s >> 11) as f64 / (1u64 << 53) as f64)
        })
        .unwrap()
    }

    #[test]
    fn conv_with_dot_kernel_is_identity() {
        let m = lcg_grid(6, 5, 1, 0.0);
        let d = dot_kernel(3, 3).unwrap();
        assert_eq!(conv_map(&m, &d, ConvNormMode::None).unwrap(), *m.as_grid());
        assert_eq!(conv_map(&m, &d, ConvNormMode::KernelSum).unwrap(), *m.as_grid());
    }

    #[test]
    fn conv_impulse_response_is_the_kernel() {
        let mut v = vec![0.0; 49];
        v[3 * 7 + 3] = 1.0;
        let m = MembershipGrid::new(7, 7, v).unwrap();
        let b = Kernel::from_offsets(5, 3, |dx, dy| ((dx + 2) * 3 + dy + 1) as f64 / 15.0).unwrap();
        // (δ_c * B)(x) = B(x - c): same orientation as the dilation of an impulse.
        let out = conv_map(&m, &b, ConvNormMode::None).unwrap();
        let exact = dilate(&m, &b, TNorm::Product);
        for row in 0..7i64 {
            for col in 0..7i64 {
                assert_eq!(out.get(col as usize, row as usize), b.weight(col - 3, row - 3));
            }
        }
        assert_eq!(out, *exact.as_grid());
        // Correlating with the flipped kernel is the same operation.
        let corr = crate::engine::correlate(&m, &flip_kernel(&b));
        assert_eq!(out, corr);
    }

    #[test]
    fn conv_direct_double_sum() {
        let m = lcg_grid(6, 6, 7, 0.0);
        let b = Kernel::new(3, 3, lcg_grid(3, 3, 9, 0.0).into_grid().into_values()).unwrap();
        let out = conv_map(&m, &b, ConvNormMode::None).unwrap();
        for xr in 0..6i64 {
            for xc in 0..6i64 {
                let mut expect = 0.0;
                for yr in 0..6i64 {
                    for yc in 0..6i64 {
                        expect += m.get(yc as usize, yr as usize) * b.weight(xc - yc, xr - yr);
                    }
                }
                assert!((out.get(xc as usize, xr as usize) - expect).abs() < 1e-12);
            }
        }
        let norm = conv_map(&m, &b, ConvNormMode::KernelSum).unwrap();
        assert!(norm.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn chm_constant_and_zero_images() {
        let w = ring_kernel(5, 5, 0.0, 0.0, 1.0, 2.5).unwrap();
        let p = Power::new(100.0).unwrap();
        let ones = MembershipGrid::ones(6, 6).unwrap();
        let out = chm_map(&ones, &w, p, 1e-30).unwrap();
        assert!(out.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let zeros = MembershipGrid::zeros(6, 6).unwrap();
        assert_eq!(chm_map(&zeros, &w, p, 1e-30).unwrap(), zeros);
        assert_eq!(
            chm_map_with(&zeros, &w, p, 1e-30, ChmForm::Weighted).unwrap(),
            zeros
        );
    }

    #[test]
    fn chm_crisp_matches_dilation() {
        let mut s = 3u64;
        let m = MembershipGrid::from_fn(12, 10, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            if (s >> 33).is_multiple_of(5) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let w = ring_kernel(7, 7, 1.0, 1.0, 2.5, 2.5).unwrap();
        let exact = dilate(&m, &w, TNorm::Product);
        for form in [ChmForm::TNormValues, ChmForm::Weighted] {
            let approx = chm_map_with(&m, &w, Power::new(30.0).unwrap(), 1e-30, form).unwrap();
            assert!(approx.max_abs_diff(&exact).unwrap() < 0.01);
        }
    }

    #[test]
    fn weighted_chm_is_a_flat_dilation() {
        // With a crisp source the weighted form returns 1 wherever the kernel
        // support overlaps the source, whatever the weight.
        let mut v = vec![0.0; 25];
        v[12] = 1.0;
        let m = MembershipGrid::new(5, 5, v).unwrap();
        let w = Kernel::from_offsets(3, 3, |dx, _| if dx >= 0 { 0.5 } else { 0.0 }).unwrap();
        let out = chm_map_with(&m, &w, Power::new(10.0).unwrap(), 1e-30, ChmForm::Weighted)
            .unwrap();
        assert_eq!(out.get(3, 2), 1.0);
        let tn = chm_map(&m, &w, Power::new(10.0).unwrap(), 1e-30).unwrap();
        assert!((tn.get(3, 2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn genmean_zero_image() {
        let w = ring_kernel(5, 5, 0.0, 0.0, 1.0, 2.5).unwrap();
        let z = MembershipGrid::zeros(6, 6).unwrap();
        assert_eq!(genmean_map(&z, &w, Power::default(), TNorm::Product).unwrap(), z);
    }

    #[test]
    fn genmean_matches_direct_summation() {
        // Values >= 0.1 keep every term above 1e-100, so the unscaled
        // formula is exact to rounding and independent of the max-factoring.
        let m = lcg_grid(6, 6, 11, 0.1);
        let w = Kernel::new(3, 3, lcg_grid(3, 3, 12, 0.1).into_grid().into_values()).unwrap();
        let p = 100.0;
        let out = genmean_map(&m, &w, Power::new(p).unwrap(), TNorm::Product).unwrap();
        let mass: f64 = w.values().iter().sum();
        for xr in 0..6i64 {
            for xc in 0..6i64 {
                let mut s = 0.0;
                for yr in 0..6i64 {
                    for yc in 0..6i64 {
                        let t = w.weight(xc - yc, xr - yr) * m.get(yc as usize, yr as usize);
                        s += t.powf(p);
                    }
                }
                let expect = (s / mass).powf(1.0 / p);
                assert!((out.get(xc as usize, xr as usize) - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scalar_limits() {
        assert!((power_mean_pair(0.3, 0.9, 70.0) - 0.9).abs() < 0.01);
        assert!((chm_pair(0.3, 0.9, 30.0) - 0.9).abs() < 0.01);
        assert_eq!(power_mean_pair(0.0, 0.0, 70.0), 0.0);
        assert_eq!(chm_pair(0.0, 0.0, 30.0), 0.0);
        // No underflow for tiny inputs.
        assert!((chm_pair(1e-9, 2e-9, 100.0) - 2e-9).abs() < 1e-15);
        assert!(power_mean_pair(1e-9, 1e-9, 100.0) > 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Power::new(0.0).is_err());
        assert!(Power::new(-1.0).is_err());
        assert!(Power::new(f64::INFINITY).is_err());
        let m = MembershipGrid::ones(3, 3).unwrap();
        let w = dot_kernel(1, 1).unwrap();
        assert!(chm_map(&m, &w, Power::default(), 0.0).is_err());
    }
}
