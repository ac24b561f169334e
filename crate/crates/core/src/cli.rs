//! Command-line front end.
//!
//! Every subcommand builds and validates its whole scene before computing,
//! and buffers all outputs in memory until the computation has succeeded, so
//! a failing run leaves no partial files behind.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::seq::index::sample;
use rand::SeedableRng;

use crate::approx::{ChmForm, ConvNormMode, Power, DEFAULT_CHM_EPS, DEFAULT_P};
use crate::bench::{self, SweepMethod};
use crate::error::Error;
use crate::grad;
use crate::grid::{make_disk, make_square, Grid, MembershipGrid, PixelCoord};
use crate::io;
use crate::kernels::{self, Kernel};
use crate::morphology::TNorm;
use crate::relation::{self, Axis, MapMethod, TargetShape};

/// Exit code for invalid configurations.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for numerical failures during a run.
pub const EXIT_NUMERICAL: i32 = 3;
/// Exit code for I/O failures.
pub const EXIT_IO: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "relmap", version, about = "Fuzzy spatial relation maps and their differentiable approximations")]
pub struct Cli {
    /// Worker threads for pixel-parallel operations (timing always uses one).
    #[arg(long, global = true, env = "RELMAP_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a relational map and write it as a grid file and PGM image.
    Map(MapArgs),
    /// Score heatmaps over all target placements, for every method.
    Heatmap(HeatmapArgs),
    /// Analytic gradients of the convolution score, checked by finite differences.
    Grad(GradArgs),
    /// Accuracy sweep over p, or timing of all methods.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RelationKind {
    /// "To the right of" a disk, directional kernel.
    Right,
    /// "Close to" a central disk, crown-shaped kernel.
    Close,
    /// "Far from" a central disk.
    Far,
    /// "Inside of" a central square, dot kernel.
    Inside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceKind {
    Disk,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodKind {
    Dilation,
    Conv,
    Chm,
    Genmean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetKind {
    Disk,
    Pixel,
    Square,
}

/// Image, source object and structuring element.
#[derive(Debug, Clone, Args)]
pub struct SceneArgs {
    #[arg(long, value_enum, default_value_t = RelationKind::Right)]
    pub relation: RelationKind,
    #[arg(long, default_value_t = 100)]
    pub width: usize,
    #[arg(long, default_value_t = 100)]
    pub height: usize,
    /// Source shape [default: square for "inside", disk otherwise].
    #[arg(long, value_enum)]
    pub source: Option<SourceKind>,
    /// Source center column [default: width/5 for "right", width/2 otherwise].
    #[arg(long)]
    pub source_col: Option<usize>,
    /// Source center row [default: height/2].
    #[arg(long)]
    pub source_row: Option<usize>,
    #[arg(long, default_value_t = 5.0)]
    pub source_radius: f64,
    /// Square source side [default: min(width, height)/2].
    #[arg(long)]
    pub source_side: Option<usize>,
    /// Direction of the "right" relation in radians, counter-clockwise, Y up.
    #[arg(long, default_value_t = kernels::direction::RIGHT, allow_hyphen_values = true)]
    pub direction: f64,
    /// Origin weight of the directional kernel.
    #[arg(long, default_value_t = 1.0)]
    pub origin_value: f64,
    /// Crown radii r1,r2,r3,r4 of the "close" kernel.
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 4.0, 8.0, 16.0])]
    pub ring: Vec<f64>,
    /// Inner radius of the "far" ramp [default: 0.2*min(width, height)].
    #[arg(long)]
    pub far_ra: Option<f64>,
    /// Outer radius of the "far" ramp [default: 0.4*min(width, height)].
    #[arg(long)]
    pub far_rb: Option<f64>,
    /// Odd kernel side [default: (2*width-1) x (2*height-1); 1 for "inside"].
    #[arg(long)]
    pub support: Option<usize>,
}

/// Parameters of the approximation methods.
#[derive(Debug, Clone, Args)]
pub struct MethodParams {
    #[arg(long, default_value_t = DEFAULT_P)]
    pub p: f64,
    #[arg(long, default_value_t = DEFAULT_CHM_EPS)]
    pub eps: f64,
    #[arg(long, default_value = "product")]
    pub tnorm: TNorm,
    /// Convolution normalization: kernel-sum or none.
    #[arg(long, default_value = "kernel-sum")]
    pub norm: ConvNormMode,
    /// CHM form: tnorm (CHM of w·m values) or weighted ((m^(p+1)*w)/(m^p*w)).
    #[arg(long, default_value = "tnorm")]
    pub chm_form: ChmForm,
}

#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[command(flatten)]
    pub params: MethodParams,
    #[arg(long, value_enum, default_value_t = MethodKind::Dilation)]
    pub method: MethodKind,
    /// Also write |Φ_method - Φ_dilation| and print its MSE.
    #[arg(long)]
    pub diff: bool,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TargetArgs {
    #[arg(long = "target", value_enum, default_value_t = TargetKind::Disk)]
    pub kind: TargetKind,
    #[arg(long, default_value_t = 5.0)]
    pub target_radius: f64,
    #[arg(long, default_value_t = 5)]
    pub target_side: usize,
}

#[derive(Debug, Clone, Args)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[command(flatten)]
    pub params: MethodParams,
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GradArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[arg(long, default_value = "kernel-sum")]
    pub norm: ConvNormMode,
    /// Target disk center column [default: 4*width/5].
    #[arg(long)]
    pub target_col: Option<usize>,
    /// Target disk center row [default: height/2].
    #[arg(long)]
    pub target_row: Option<usize>,
    #[arg(long, default_value_t = 5.0)]
    pub target_radius: f64,
    /// Use an all-zero target (exercises the empty-target error).
    #[arg(long)]
    pub target_empty: bool,
    #[arg(long, default_value_t = grad::DEFAULT_FD_STEP)]
    pub fd_step: f64,
    /// Pixels probed by the finite-difference check; 0 probes every pixel.
    #[arg(long, default_value_t = 400)]
    pub fd_samples: usize,
    /// Relative error above which the check fails.
    #[arg(long, default_value_t = 1e-5)]
    pub fd_tolerance: f64,
    /// Seed for choosing the probed pixels.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// MSE against the exact dilation for a range of p, on the "right of" setup.
    SweepP(SweepArgs),
    /// Median wall-clock time of every method across image sizes.
    Timing(TimingArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 200])]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 3.0, 10.0, 30.0, 100.0, 300.0])]
    pub p_values: Vec<f64>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TimingArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [50usize, 100, 150, 200])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_P)]
    pub p: f64,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    #[arg(long, short)]
    pub out: PathBuf,
}

/// Failure of a CLI run, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn config(e: Error) -> CliError {
    match e {
        Error::Io(e) => CliError::Io(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

fn runtime(e: Error) -> CliError {
    match e {
        Error::Io(e) => CliError::Io(e.to_string()),
        Error::Csv(e) => CliError::Io(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    }
}

/// Files produced by a run, written only once everything has been computed.
#[derive(Debug, Default)]
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn grid(&mut self, name: &str, grid: &Grid) -> Result<(), CliError> {
        let text = io::render_grid(grid).map_err(runtime)?;
        self.files.push((format!("{name}.grid"), text.into_bytes()));
        Ok(())
    }

    fn pgm(&mut self, name: &str, grid: &Grid) {
        self.files.push((format!("{name}.pgm"), io::encode_pgm(grid)));
    }

    fn grid_and_pgm(&mut self, name: &str, grid: &Grid) -> Result<(), CliError> {
        self.grid(name, grid)?;
        self.pgm(name, grid);
        Ok(())
    }

    fn text(&mut self, name: &str, text: String) {
        self.files.push((name.to_string(), text.into_bytes()));
    }

    fn flush(self) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::Io(e.to_string()))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in self.files {
            let path = self.dir.join(name);
            fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Text printed by a successful run, one line per entry.
#[derive(Debug, Default, Clone)]
pub struct Report {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Source and kernel of a relation, ready to be mapped.
#[derive(Debug, Clone)]
pub struct Scene {
    pub source: MembershipGrid,
    pub kernel: Kernel,
}

impl SceneArgs {
    pub fn build(&self) -> Result<Scene, CliError> {
        let (w, h) = (self.width, self.height);
        if w == 0 || h == 0 {
            return Err(CliError::Config(format!("image must be non-empty, got {w}x{h}")));
        }
        if self.ring.len() != 4 {
            return Err(CliError::Config(format!(
                "--ring takes 4 radii, got {}",
                self.ring.len()
            )));
        }
        let min_side = w.min(h) as f64;
        let default_col = match self.relation {
            RelationKind::Right => w / 5,
            _ => w / 2,
        };
        let center = PixelCoord::new(
            self.source_col.unwrap_or(default_col),
            self.source_row.unwrap_or(h / 2),
        );
        let source_kind = self.source.unwrap_or(match self.relation {
            RelationKind::Inside => SourceKind::Square,
            _ => SourceKind::Disk,
        });
        let source = match source_kind {
            SourceKind::Disk => make_disk(w, h, center, self.source_radius),
            SourceKind::Square => {
                make_square(w, h, center, self.source_side.unwrap_or(w.min(h) / 2))
            }
        }
        .map_err(config)?;

        let (sx, sy) = match (self.support, self.relation) {
            (Some(s), _) => (s, s),
            (None, RelationKind::Inside) => (1, 1),
            (None, _) => kernels::full_support(w, h),
        };
        let kernel = match self.relation {
            RelationKind::Right => {
                kernels::directional_kernel(sx, sy, self.direction, self.origin_value)
            }
            RelationKind::Close => {
                let r = &self.ring;
                kernels::ring_kernel(sx, sy, r[0], r[1], r[2], r[3])
            }
            RelationKind::Far => kernels::far_kernel(
                sx,
                sy,
                self.far_ra.unwrap_or(0.2 * min_side),
                self.far_rb.unwrap_or(0.4 * min_side),
            ),
            RelationKind::Inside => kernels::dot_kernel(sx, sy),
        }
        .map_err(config)?;
        Ok(Scene { source, kernel })
    }
}

impl MethodParams {
    fn power(&self) -> Result<Power, CliError> {
        Power::new(self.p).map_err(config)
    }

    pub fn method(&self, kind: MethodKind) -> Result<MapMethod, CliError> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(CliError::Config(format!("eps must be positive, got {}", self.eps)));
        }
        Ok(match kind {
            MethodKind::Dilation => MapMethod::ExactDilation(self.tnorm),
            MethodKind::Conv => MapMethod::Convolution(self.norm),
            MethodKind::Chm => MapMethod::Chm {
                p: self.power()?,
                eps: self.eps,
                form: self.chm_form,
            },
            MethodKind::Genmean => MapMethod::GeneralizedMean {
                p: self.power()?,
                tnorm: self.tnorm,
            },
        })
    }

    fn all(&self) -> Result<Vec<MapMethod>, CliError> {
        [
            MethodKind::Dilation,
            MethodKind::Conv,
            MethodKind::Chm,
            MethodKind::Genmean,
        ]
        .into_iter()
        .map(|k| self.method(k))
        .collect()
    }
}

impl TargetArgs {
    fn shape(&self) -> Result<TargetShape, CliError> {
        let shape = match self.kind {
            TargetKind::Pixel => TargetShape::Pixel,
            TargetKind::Disk => TargetShape::Disk {
                radius: self.target_radius,
            },
            TargetKind::Square => TargetShape::Square {
                side: self.target_side,
            },
        };
        shape.offsets().map_err(config)?;
        Ok(shape)
    }
}

fn check_out_dir(out: &Path) -> Result<(), CliError> {
    if out.exists() && !out.is_dir() {
        return Err(CliError::Config(format!(
            "output path {} exists and is not a directory",
            out.display()
        )));
    }
    Ok(())
}

fn check_out_file(out: &Path) -> Result<(), CliError> {
    if out.is_dir() {
        return Err(CliError::Config(format!(
            "output path {} is a directory",
            out.display()
        )));
    }
    Ok(())
}

pub fn cmd_map(args: &MapArgs) -> Result<Report, CliError> {
    check_out_dir(&args.out)?;
    let scene = args.scene.build()?;
    let method = args.params.method(args.method)?;

    let phi = relation::source_map(&scene.source, &scene.kernel, method).map_err(runtime)?;
    let mut outputs = Outputs::new(&args.out);
    let mut report = Report::default();
    outputs.grid_and_pgm("source", &scene.source)?;
    let kernel_grid = Grid::new(
        scene.kernel.size_x(),
        scene.kernel.size_y(),
        scene.kernel.values().to_vec(),
    )
    .map_err(runtime)?;
    outputs.grid_and_pgm("kernel", &kernel_grid)?;
    let name = format!("phi_{}", method.label());
    outputs.grid_and_pgm(&name, &phi)?;
    report.lines.push(format!("method {method}"));

    if args.diff {
        let exact = relation::source_map(
            &scene.source,
            &scene.kernel,
            MapMethod::ExactDilation(args.params.tnorm),
        )
        .map_err(runtime)?;
        let diff = phi.zip_with(&exact, |a, b| (a - b).abs()).map_err(runtime)?;
        outputs.grid_and_pgm(&format!("diff_{}", method.label()), &diff)?;
        let mse = bench::mse(&phi, &exact).map_err(runtime)?;
        report.lines.push(format!("mse_vs_dilation {}", io::format_real(mse)));
    }
    report.files = outputs.flush()?;
    Ok(report)
}

pub fn cmd_heatmap(args: &HeatmapArgs) -> Result<Report, CliError> {
    check_out_dir(&args.out)?;
    let scene = args.scene.build()?;
    let methods = args.params.all()?;
    let shape = args.target.shape()?;

    let mut maps = Vec::with_capacity(methods.len());
    for &m in &methods {
        let phi = relation::source_map(&scene.source, &scene.kernel, m).map_err(runtime)?;
        let heat = relation::heatmap_from_map(&phi, &shape).map_err(runtime)?;
        maps.push((m, heat));
    }

    let mut outputs = Outputs::new(&args.out);
    let mut report = Report::default();
    let exact = &maps[0].1;
    for (m, heat) in &maps {
        outputs.grid_and_pgm(&format!("score_{}", m.label()), heat)?;
        if !matches!(m, MapMethod::ExactDilation(_)) {
            let diff = heat.zip_with(exact, |a, b| a - b).map_err(runtime)?;
            outputs.grid(&format!("scorediff_{}", m.label()), &diff)?;
            // Signed differences are shifted so that 0 maps to mid-gray.
            outputs.pgm(&format!("scorediff_{}", m.label()), &diff.map(|d| (d + 1.0) / 2.0));
            let mse = bench::mse(heat, exact).map_err(runtime)?;
            report
                .lines
                .push(format!("score_mse_vs_dilation {} {}", m.label(), io::format_real(mse)));
        }
    }
    let names: Vec<&str> = maps.iter().map(|(m, _)| m.label()).collect();
    for (axis, file) in [(Axis::MidX, "midcut_x.csv"), (Axis::MidY, "midcut_y.csv")] {
        let cuts: Vec<Vec<f64>> = maps.iter().map(|(_, h)| relation::midcut(h, axis)).collect();
        let cols: Vec<&[f64]> = cuts.iter().map(Vec::as_slice).collect();
        outputs.text(file, io::render_columns(&names, &cols).map_err(runtime)?);
    }
    report.files = outputs.flush()?;
    Ok(report)
}

pub fn cmd_grad(args: &GradArgs) -> Result<Report, CliError> {
    check_out_dir(&args.out)?;
    let scene = args.scene.build()?;
    let (w, h) = (args.scene.width, args.scene.height);
    let target = if args.target_empty {
        MembershipGrid::zeros(w, h).map_err(config)?
    } else {
        let center = PixelCoord::new(
            args.target_col.unwrap_or(4 * w / 5),
            args.target_row.unwrap_or(h / 2),
        );
        make_disk(w, h, center, args.target_radius).map_err(config)?
    };
    if !(target.sum() > 0.0) {
        return Err(config(Error::EmptyTarget));
    }
    if !(args.fd_step > 0.0 && args.fd_step.is_finite()) {
        return Err(CliError::Config(format!(
            "fd step must be positive, got {}",
            args.fd_step
        )));
    }

    let (k, l, b, mode) = (&scene.source, &target, &scene.kernel, args.norm);
    let g_k = grad::ds_dk(l, b, mode).map_err(runtime)?;
    let g_l = grad::ds_dl(k, l, b, mode).map_err(runtime)?;

    let n = k.len();
    let indices: Vec<usize> = if args.fd_samples == 0 || args.fd_samples >= n {
        (0..n).collect()
    } else {
        let mut rng = StdRng::seed_from_u64(args.seed);
        let mut idx = sample(&mut rng, n, args.fd_samples).into_vec();
        idx.sort_unstable();
        idx
    };
    let err_k = grad::fd_check_at(
        |kk| grad::conv_score(kk, l, b, mode),
        k,
        &g_k,
        args.fd_step,
        &indices,
    )
    .map_err(runtime)?;
    // Φ does not depend on l, so it is computed once for the l-probes.
    let phi = crate::approx::conv_map(k, b, mode).map_err(runtime)?;
    let err_l = grad::fd_check_at(
        |ll| Ok(relation::score(&phi, ll)?.value()),
        l,
        &g_l,
        args.fd_step,
        &indices,
    )
    .map_err(runtime)?;

    let mut outputs = Outputs::new(&args.out);
    outputs.grid("ds_dk", &g_k)?;
    outputs.grid("ds_dl", &g_l)?;
    outputs.grid("target", &target)?;
    let mut report = Report::default();
    let score = grad::conv_score(k, l, b, mode).map_err(runtime)?;
    report.lines.push(format!("score_conv {}", io::format_real(score)));
    let mut failed = Vec::new();
    for (name, err) in [("ds_dk", err_k), ("ds_dl", err_l)] {
        let ok = err < args.fd_tolerance;
        report.lines.push(format!(
            "fd_rel_error {name} {} {}",
            io::format_real(err),
            if ok { "ok" } else { "FAIL" }
        ));
        if !ok {
            failed.push(name);
        }
    }
    report.files = outputs.flush()?;
    if !failed.is_empty() {
        return Err(CliError::Numerical(format!(
            "finite-difference check failed for {} ({})",
            failed.join(", "),
            report.lines.join("; ")
        )));
    }
    Ok(report)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Report, CliError> {
    check_out_file(&args.out)?;
    if args.sizes.iter().any(|&n| n < 2) {
        return Err(CliError::Config("sizes must be >= 2".into()));
    }
    for &p in &args.p_values {
        Power::new(p).map_err(config)?;
    }
    let mut records = Vec::new();
    for &n in &args.sizes {
        let (source, kernel) = bench::right_of_setup(n).map_err(config)?;
        records.extend(
            bench::sweep_p(
                &source,
                &kernel,
                &args.p_values,
                &[SweepMethod::Chm, SweepMethod::GeneralizedMean],
            )
            .map_err(runtime)?,
        );
    }
    let text = io::render_records(&records).map_err(runtime)?;
    write_file(&args.out, text)?;
    Ok(Report {
        lines: vec![format!("{} records", records.len())],
        files: vec![args.out.clone()],
    })
}

pub fn cmd_timing(args: &TimingArgs) -> Result<Report, CliError> {
    check_out_file(&args.out)?;
    if args.sizes.iter().any(|&n| n < 2) {
        return Err(CliError::Config("sizes must be >= 2".into()));
    }
    if args.repeats < 3 || args.warmup < 1 {
        return Err(CliError::Config("timing needs repeats >= 3 and warmup >= 1".into()));
    }
    let p = Power::new(args.p).map_err(config)?;
    let records = bench::timing(&args.sizes, &bench::all_methods(p), args.repeats, args.warmup)
        .map_err(runtime)?;
    let lines = records
        .iter()
        .map(|r| format!("{} n={} median={}s", r.method, r.param, r.metric))
        .collect();
    write_file(&args.out, io::render_records(&records).map_err(runtime)?)?;
    Ok(Report {
        lines,
        files: vec![args.out.clone()],
    })
}

fn write_file(path: &Path, text: String) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(e.to_string()))?;
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Map(a) => cmd_map(a),
        Command::Heatmap(a) => cmd_heatmap(a),
        Command::Grad(a) => cmd_grad(a),
        Command::Bench(BenchCommand::SweepP(a)) => cmd_sweep(a),
        Command::Bench(BenchCommand::Timing(a)) => cmd_timing(a),
    })
}

/// Parses `args` (including the program name), runs, prints, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match run(&cli) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for f in &report.files {
                log::info!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
