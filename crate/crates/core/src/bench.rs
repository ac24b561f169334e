//! Accuracy sweeps over `p` and wall-clock timing of the map operators.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::approx::Power;
use crate::error::{Error, Result};
use crate::grid::{make_disk, Grid, MembershipGrid, PixelCoord};
use crate::io::BenchRecord;
use crate::kernels::{directional_kernel, direction, full_support, Kernel};
use crate::relation::{source_map, MapMethod};

/// Mean squared difference between two grids of the same shape.
pub fn mse(a: &Grid, b: &Grid) -> Result<f64> {
    a.check_same_shape(b)?;
    let sum: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.len() as f64)
}

/// "Right of" configuration scaled to an `n x n` image: a disk of radius
/// `n/20` centred at `(n/5, n/2)` and a full-support directional kernel.
/// At `n = 100` this is the radius-5 disk at `(20, 50)`.
pub fn right_of_setup(n: usize) -> Result<(MembershipGrid, Kernel)> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!("image side must be >= 2, got {n}")));
    }
    let source = make_disk(n, n, PixelCoord::new(n / 5, n / 2), n as f64 / 20.0)?;
    let (sx, sy) = full_support(n, n);
    let kernel = directional_kernel(sx, sy, direction::RIGHT, 1.0)?;
    Ok((source, kernel))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMethod {
    Chm,
    GeneralizedMean,
}

impl SweepMethod {
    fn method(self, p: Power) -> MapMethod {
        match self {
            SweepMethod::Chm => MapMethod::chm(p),
            SweepMethod::GeneralizedMean => MapMethod::genmean(p),
        }
    }
}

/// MSE against the exact dilation for every `(method, p)`.
///
/// For each `p` the parameter-free baselines (dilation itself and the
/// normalized convolution) are emitted too, so they plot as flat lines.
pub fn sweep_p(
    source: &MembershipGrid,
    kernel: &Kernel,
    p_values: &[f64],
    methods: &[SweepMethod],
) -> Result<Vec<BenchRecord>> {
    let powers = p_values
        .iter()
        .map(|&p| Power::new(p))
        .collect::<Result<Vec<_>>>()?;
    let experiment = format!("sweep-p-{}x{}", source.width(), source.height());
    let exact = source_map(source, kernel, MapMethod::dilation())?;
    let conv = source_map(source, kernel, MapMethod::convolution())?;
    let conv_mse = mse(&conv, &exact)?;

    let cells: Vec<(Power, SweepMethod)> = powers
        .iter()
        .flat_map(|&p| methods.iter().map(move |&m| (p, m)))
        .collect();
    let errors = cells
        .par_iter()
        .map(|&(p, m)| mse(&source_map(source, kernel, m.method(p))?, &exact))
        .collect::<Result<Vec<f64>>>()?;

    let record = |method: &str, p: Power, metric: f64| BenchRecord {
        experiment: experiment.clone(),
        method: method.to_string(),
        param: p.get(),
        metric,
        metric_min: metric,
        repeats: 1,
    };
    let mut out = Vec::with_capacity(powers.len() * (methods.len() + 2));
    let mut errors = errors.into_iter();
    for &p in &powers {
        out.push(record("dilation", p, 0.0));
        out.push(record("conv", p, conv_mse));
        for &m in methods {
            let e = errors.next().expect("one error per cell");
            out.push(record(m.method(p).label(), p, e));
        }
    }
    Ok(out)
}

/// The four map operators at exponent `p`, in a fixed order.
pub fn all_methods(p: Power) -> [MapMethod; 4] {
    [
        MapMethod::dilation(),
        MapMethod::convolution(),
        MapMethod::chm(p),
        MapMethod::genmean(p),
    ]
}

fn median(sorted: &[Duration]) -> Duration {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2
    }
}

/// Wall-clock time of computing each map on the scaled "right of" setup.
///
/// Runs on a dedicated single-threaded pool. Within a size, repeats are
/// interleaved across methods so slow drifts in machine load affect every
/// method alike.
pub fn timing(
    sizes: &[usize],
    methods: &[MapMethod],
    repeats: usize,
    warmup: usize,
) -> Result<Vec<BenchRecord>> {
    if repeats < 3 {
        return Err(Error::InvalidParameter(format!("repeats must be >= 3, got {repeats}")));
    }
    if warmup < 1 {
        return Err(Error::InvalidParameter(format!("warmup must be >= 1, got {warmup}")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::NumericalFailure(format!("cannot build timing pool: {e}")))?;
    pool.install(|| {
        let mut out = Vec::new();
        for &n in sizes {
            let (source, kernel) = right_of_setup(n)?;
            for &m in methods {
                for _ in 0..warmup {
                    std::hint::black_box(source_map(&source, &kernel, m)?);
                }
            }
            let mut samples = vec![Vec::with_capacity(repeats); methods.len()];
            for _ in 0..repeats {
                for (i, &m) in methods.iter().enumerate() {
                    let start = Instant::now();
                    std::hint::black_box(source_map(&source, &kernel, m)?);
                    samples[i].push(start.elapsed());
                }
            }
            for (m, mut s) in methods.iter().zip(samples) {
                s.sort();
                log::info!("timing {} n={n}: median {:?}", m.label(), median(&s));
                out.push(BenchRecord {
                    experiment: "timing".into(),
                    method: m.label().into(),
                    param: n as f64,
                    metric: median(&s).as_secs_f64(),
                    metric_min: s[0].as_secs_f64(),
                    repeats: repeats as u32,
                });
            }
        }
        Ok(out)
    })
}
