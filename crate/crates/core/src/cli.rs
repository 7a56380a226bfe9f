//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 when the data or the
//! parameters are rejected.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::attributes::{expand_map, section_attribute, volume_attribute_stack, AttributeParams};
use crate::error::{Error, Result, StageContext};
use crate::fusion::{default_weights, fuse, AttributeStack, FusionSpec};
use crate::grid::{grid_slice_time, AttributeKind, AttributeMap, Grid2, Scale, SeismicData, SeismicSection};
use crate::io::gridfile::{read_grid, write_grid, GridDocument};
use crate::io::pgm::write_pgm;
use crate::io::segy::{read_segy, SampleFormat, SegyOptions};
use crate::io::synthspec::read_synth_spec;
use crate::pyramid::{build_pyramid, make_kernel, DEFAULT_RADIUS, DEFAULT_SCALES, DEFAULT_SIGMA};
use crate::synth::{make_synthetic, NOISE_RNG};

pub const THREADS_ENV: &str = "PYRAFUSE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "pyrafuse", version, about = "Multiscale fusion of seismic geometric attributes")]
struct Cli {
    /// Worker threads (overrides PYRAFUSE_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic section or volume with ground truth.
    Synth(SynthArgs),
    /// Write the Gaussian pyramid of a section, one grid file per level.
    Pyramid(PyramidArgs),
    /// Compute a single-scale attribute.
    Attr(AttrArgs),
    /// Interpolate a map up to a larger grid.
    Resize(ResizeArgs),
    /// Fuse per-scale attribute maps.
    Fuse(FuseArgs),
    /// Pyramid, attribute, resize and fuse in one go.
    Pipeline(PipelineArgs),
    /// Convert a SEG-Y file to a grid file.
    SegyImport(SegyArgs),
    /// Write an 8-bit PGM preview of a grid.
    ExportPgm(PgmArgs),
    /// Print header and value range of a grid file.
    Info(InfoArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Overrides the seed in the spec.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    radius: usize,
}

#[derive(Args, Debug)]
struct PyramidArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SCALES)]
    scales: usize,
    #[command(flatten)]
    kernel: KernelArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AttrChoice {
    Dip,
    DipAngle,
    Kpos,
    Kneg,
}

impl AttrChoice {
    fn kind(self) -> AttributeKind {
        match self {
            AttrChoice::Dip => AttributeKind::PhaseDip,
            AttrChoice::DipAngle => AttributeKind::DipAngle,
            AttrChoice::Kpos => AttributeKind::MostPositiveCurvature,
            AttrChoice::Kneg => AttributeKind::MostNegativeCurvature,
        }
    }
}

#[derive(Args, Debug)]
struct ParamArgs {
    #[arg(long, value_enum, default_value = "dip")]
    attr: AttrChoice,
    /// Reference velocity in m/s.
    #[arg(long, default_value_t = crate::attributes::DEFAULT_VELOCITY)]
    velocity: f64,
    /// Dip clamp in samples per trace.
    #[arg(long, default_value_t = crate::attributes::DEFAULT_P_MAX)]
    pmax: f64,
    /// Time slice for volume input.
    #[arg(long)]
    time_index: Option<usize>,
}

impl ParamArgs {
    fn params(&self) -> AttributeParams {
        AttributeParams {
            p_max: self.pmax,
            velocity: self.velocity,
            ..AttributeParams::default()
        }
    }
}

#[derive(Args, Debug)]
struct AttrArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    /// Where to write the validity mask, if the attribute has one.
    #[arg(long)]
    quality_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ResizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    /// Mask to resize alongside; re-binarized at 0.5.
    #[arg(long)]
    quality: Option<PathBuf>,
    #[arg(long, requires = "quality")]
    quality_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FuseChoice {
    Mean,
    Wmean,
    Median,
    Rank,
}

#[derive(Args, Debug)]
struct FuseOptions {
    #[arg(long = "fuse", value_enum, default_value = "median")]
    method: FuseChoice,
    /// Comma-separated weights for wmean, one per scale.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Geometric fall-off used when wmean is given no weights.
    #[arg(long, default_value_t = 2.0)]
    weight_bias: f64,
    /// 0-based rank for rank fusion.
    #[arg(long)]
    rank: Option<usize>,
}

impl FuseOptions {
    fn spec(&self, k: usize) -> Result<FusionSpec> {
        let spec = match self.method {
            FuseChoice::Mean => FusionSpec::Mean,
            FuseChoice::Median => FusionSpec::Median,
            FuseChoice::Wmean => FusionSpec::WeightedMean(match &self.weights {
                Some(w) => w.clone(),
                None => default_weights(k, self.weight_bias)?,
            }),
            FuseChoice::Rank => FusionSpec::Rank(
                self.rank
                    .ok_or_else(|| Error::param("rank fusion needs --rank"))?,
            ),
        };
        spec.validate(k)?;
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct FuseArgs {
    /// Per-scale maps, all on the same grid.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Quality masks, one per input, in the same order.
    #[arg(long, num_args = 1..)]
    quality: Vec<PathBuf>,
    #[arg(long)]
    quality_out: Option<PathBuf>,
    #[command(flatten)]
    fuse: FuseOptions,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SCALES)]
    scales: usize,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    fuse: FuseOptions,
    #[arg(long)]
    quality_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatChoice {
    Ibm,
    Ieee,
}

#[derive(Args, Debug)]
struct SegyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the sample format code in the binary header.
    #[arg(long, value_enum)]
    format: Option<FormatChoice>,
    #[arg(long)]
    little_endian: bool,
    #[arg(long)]
    max_traces: Option<usize>,
    #[arg(long, default_value_t = 25.0)]
    dx: f64,
    #[arg(long, default_value_t = 25.0)]
    dy: f64,
}

#[derive(Args, Debug)]
struct PgmArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    clip_low: f64,
    #[arg(long, default_value_t = 98.0)]
    clip_high: f64,
    /// Time slice for volume input.
    #[arg(long)]
    time_index: Option<usize>,
}

#[derive(Args, Debug)]
struct InfoArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

/// Parses `argv` (including the program name), runs, returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads(cli.threads);
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn configure_threads(flag: Option<usize>) {
    let n = flag.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()));
    if let Some(n) = n.filter(|&n| n > 0) {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already configured");
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Pyramid(a) => pyramid(a),
        Command::Attr(a) => attr(a),
        Command::Resize(a) => resize(a),
        Command::Fuse(a) => fuse_cmd(a),
        Command::Pipeline(a) => pipeline(a),
        Command::SegyImport(a) => segy_import(a),
        Command::ExportPgm(a) => export_pgm(a),
        Command::Info(a) => info_cmd(a),
    }
}

fn read_section(path: &Path) -> Result<SeismicSection> {
    read_grid(path)?.to_section()
}

/// Rounds every value through `f32`, as a write and re-read would.
fn quantize(grid: &Grid2) -> Grid2 {
    grid.map(|v| v as f32 as f64)
        .expect("f32-representable values stay finite")
}

fn quantize_map(mut map: AttributeMap) -> AttributeMap {
    map.grid = quantize(&map.grid);
    map.quality = map.quality.as_ref().map(quantize);
    map
}

fn write_map(path: &Path, map: &AttributeMap, dt: Option<f64>, dx: Option<f64>) -> Result<()> {
    write_grid(path, &GridDocument::from_map(map, dt, dx))
}

fn write_quality(path: &Path, map: &AttributeMap, dt: Option<f64>, dx: Option<f64>) -> Result<()> {
    let q = map
        .quality
        .clone()
        .ok_or_else(|| Error::Config(format!("{} maps carry no quality mask", map.kind.tag())))?;
    let mut qm = AttributeMap::new(q, AttributeKind::Raw, map.scale);
    qm.meta.insert("mask_of".into(), map.kind.tag().into());
    write_map(path, &qm, dt, dx)
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut spec = read_synth_spec(&a.spec)?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let (data, truth) = make_synthetic(&spec)?;
    fs::create_dir_all(&a.out_dir)?;
    let mut doc = GridDocument::from_data(&data);
    doc.header.meta.insert("seed".into(), spec.seed.to_string());
    doc.header.meta.insert(
        "snr_db".into(),
        spec.snr_db.map_or("clean".into(), |s| s.to_string()),
    );
    doc.header.meta.insert("noise_rng".into(), NOISE_RNG.into());
    write_grid(&a.out_dir.join("data.grid"), &doc)?;
    let mut outputs = vec![("truth_dip_p", Some(truth.dip_p)), ("support", Some(truth.support))];
    outputs.push(("truth_dip_q", truth.dip_q));
    outputs.push(("truth_kpos", truth.k_pos));
    outputs.push(("truth_kneg", truth.k_neg));
    for (name, item) in outputs {
        if let Some(d) = item {
            write_grid(&a.out_dir.join(format!("{name}.grid")), &GridDocument::from_data(&d))?;
        }
    }
    info!("wrote synthetic to {}", a.out_dir.display());
    Ok(())
}

fn pyramid(a: PyramidArgs) -> Result<()> {
    let section = read_section(&a.input)?;
    let kernel = make_kernel(a.kernel.sigma, a.kernel.radius)?;
    let pyr = build_pyramid(&section.grid, a.scales, &kernel)?;
    fs::create_dir_all(&a.out_dir)?;
    for (i, s) in pyr.sections(section.dt(), section.dx(), &section.label)?.iter().enumerate() {
        let mut doc = GridDocument::from_section(s);
        doc.header.scale = Scale::Level(i);
        doc.header.meta.insert("sigma".into(), a.kernel.sigma.to_string());
        doc.header.meta.insert("radius".into(), a.kernel.radius.to_string());
        write_grid(&a.out_dir.join(format!("level_{i}.grid")), &doc)?;
    }
    Ok(())
}

/// Single-scale attribute of a section or of one volume time slice.
fn single_attribute(data: &SeismicData, args: &ParamArgs) -> Result<(AttributeMap, Option<f64>, Option<f64>)> {
    let kind = args.attr.kind();
    let params = args.params();
    match data {
        SeismicData::Section(s) => Ok((section_attribute(s, kind, &params)?, Some(s.dt()), Some(s.dx()))),
        SeismicData::Volume(v) => {
            let t = args
                .time_index
                .ok_or_else(|| Error::Config("volume input needs --time-index".into()))?;
            let kernel = make_kernel(DEFAULT_SIGMA, DEFAULT_RADIUS)?;
            let stack = volume_attribute_stack(v, t, kind, 1, &kernel, &params)?;
            let (_, dx, dy) = v.intervals();
            // time slices are x by y
            Ok((stack.into_maps().remove(0), Some(dx), Some(dy)))
        }
    }
}

fn attr(a: AttrArgs) -> Result<()> {
    let data = read_grid(&a.input)?.to_data()?;
    let (map, dt, dx) = single_attribute(&data, &a.params)?;
    write_map(&a.out, &map, dt, dx)?;
    if let Some(q) = &a.quality_out {
        write_quality(q, &map, dt, dx)?;
    }
    Ok(())
}

fn resize(a: ResizeArgs) -> Result<()> {
    let doc = read_grid(&a.input)?;
    let mut map = doc.to_map()?;
    if let Some(q) = &a.quality {
        map = map.with_quality(read_grid(q)?.grid()?)?;
    }
    let (r0, c0) = map.dims();
    let out = expand_map(map, a.rows, a.cols)?;
    // sampling intervals shrink with the refinement
    let dt = doc.header.dt.map(|v| v * r0 as f64 / a.rows as f64);
    let dx = doc.header.dx.map(|v| v * c0 as f64 / a.cols as f64);
    write_map(&a.out, &out, dt, dx)?;
    if let Some(q) = &a.quality_out {
        write_quality(q, &out, dt, dx)?;
    }
    Ok(())
}

fn fuse_cmd(a: FuseArgs) -> Result<()> {
    if !a.quality.is_empty() && a.quality.len() != a.inputs.len() {
        return Err(Error::Config(format!(
            "{} quality masks given for {} inputs",
            a.quality.len(),
            a.inputs.len()
        )));
    }
    let mut maps = Vec::with_capacity(a.inputs.len());
    let mut sampling = (None, None);
    for (i, path) in a.inputs.iter().enumerate() {
        let doc = read_grid(path)?;
        if i == 0 {
            sampling = (doc.header.dt, doc.header.dx);
        }
        let mut map = doc.to_map()?;
        if let Some(q) = a.quality.get(i) {
            map = map.with_quality(read_grid(q)?.grid()?)?;
        }
        maps.push(map);
    }
    let stack = AttributeStack::new(maps)?;
    let spec = a.fuse.spec(stack.len())?;
    let fused = fuse(&stack, &spec)?;
    write_map(&a.out, &fused, sampling.0, sampling.1)?;
    if let Some(q) = &a.quality_out {
        write_quality(q, &fused, sampling.0, sampling.1)?;
    }
    Ok(())
}

/// Section pipeline with every intermediate rounded to `f32`, so that it
/// matches `pyramid`, `attr`, `resize` and `fuse` chained through files.
fn section_pipeline(section: &SeismicSection, a: &PipelineArgs) -> Result<AttributeMap> {
    let kernel = make_kernel(a.kernel.sigma, a.kernel.radius).stage("kernel")?;
    let pyr = build_pyramid(&section.grid, a.scales, &kernel).stage("pyramid")?;
    let (rows, cols) = pyr.base_dims();
    let kind = a.params.attr.kind();
    let params = a.params.params();
    let mut maps = Vec::with_capacity(a.scales);
    for (i, level) in pyr.sections(section.dt(), section.dx(), &section.label)?.into_iter().enumerate() {
        let level = SeismicSection::new(quantize(&level.grid), level.dt(), level.dx(), level.label)?;
        let mut map = quantize_map(section_attribute(&level, kind, &params).stage("attribute")?);
        map.scale = Scale::Level(i);
        maps.push(quantize_map(expand_map(map, rows, cols).stage("resize")?));
    }
    let stack = AttributeStack::new(maps)?;
    let spec = a.fuse.spec(stack.len()).stage("fusion spec")?;
    fuse(&stack, &spec).stage("fusion")
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let data = read_grid(&a.input)?.to_data()?;
    let (mut fused, dt, dx) = match &data {
        SeismicData::Section(s) => (section_pipeline(s, &a)?, Some(s.dt()), Some(s.dx())),
        SeismicData::Volume(v) => {
            let t = a
                .params
                .time_index
                .ok_or_else(|| Error::Config("volume input needs --time-index".into()))?;
            let kernel = make_kernel(a.kernel.sigma, a.kernel.radius).stage("kernel")?;
            let stack = volume_attribute_stack(v, t, a.params.attr.kind(), a.scales, &kernel, &a.params.params())
                .stage("attribute")?;
            let stack = AttributeStack::new(stack.into_maps().into_iter().map(quantize_map).collect())?;
            let spec = a.fuse.spec(stack.len()).stage("fusion spec")?;
            let (_, dx, dy) = v.intervals();
            (fuse(&stack, &spec).stage("fusion")?, Some(dx), Some(dy))
        }
    };
    fused.meta.insert("sigma".into(), a.kernel.sigma.to_string());
    fused.meta.insert("radius".into(), a.kernel.radius.to_string());
    write_map(&a.out, &fused, dt, dx)?;
    if let Some(q) = &a.quality_out {
        write_quality(q, &fused, dt, dx)?;
    }
    Ok(())
}

fn segy_import(a: SegyArgs) -> Result<()> {
    let opts = SegyOptions {
        format: a.format.map(|f| match f {
            FormatChoice::Ibm => SampleFormat::Ibm,
            FormatChoice::Ieee => SampleFormat::Ieee,
        }),
        little_endian: a.little_endian,
        max_traces: a.max_traces,
        dx: a.dx,
        dy: a.dy,
    };
    let (data, header) = read_segy(&a.input, &opts)?;
    let mut doc = GridDocument::from_data(&data);
    doc.header.meta.insert("source".into(), "segy".into());
    doc.header
        .meta
        .insert("segy_format".into(), header.format.code().to_string());
    write_grid(&a.out, &doc)
}

fn export_pgm(a: PgmArgs) -> Result<()> {
    let doc = read_grid(&a.input)?;
    let grid = if doc.is_volume() {
        let t = a
            .time_index
            .ok_or_else(|| Error::Config("volume input needs --time-index".into()))?;
        grid_slice_time(&doc.to_volume()?, t)?
    } else {
        doc.grid()?
    };
    write_pgm(&a.out, &grid, a.clip_low, a.clip_high)
}

fn info_cmd(a: InfoArgs) -> Result<()> {
    let doc = read_grid(&a.input)?;
    let h = &doc.header;
    match h.planes {
        Some(p) => println!("dims: {} x {} x {}", h.rows, h.cols, p),
        None => println!("dims: {} x {}", h.rows, h.cols),
    }
    println!("kind: {}", h.kind.tag());
    println!("units: {}", h.kind.units().tag());
    println!("scale: {}", h.scale);
    for (name, v) in [("dt", h.dt), ("dx", h.dx), ("dy", h.dy)] {
        if let Some(v) = v {
            println!("{name}: {v}");
        }
    }
    let (lo, hi) = doc
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!("range: {lo} .. {hi}");
    for (k, v) in &h.meta {
        println!("meta.{k}: {v}");
    }
    Ok(())
}
