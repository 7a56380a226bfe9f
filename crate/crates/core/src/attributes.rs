//! Single-scale geometric attributes and per-scale attribute stacks.
//!
//! Dips are kept in samples per trace until an attribute needs physical
//! units. Halving both the time and trace sampling leaves a samples-per-trace
//! dip unchanged, so maps from different pyramid levels can be fused as is.

use rayon::prelude::*;

use crate::analytic::{analytic_section, phase_derivative, Axis};
use crate::error::{Error, Result};
use crate::fusion::AttributeStack;
use crate::grid::{
    grid_section_crossline, grid_section_inline, AttributeKind, AttributeMap, Grid2, Scale,
    SeismicSection, SeismicVolume,
};
use crate::pyramid::{build_pyramid, expand_to, GaussianKernel, Pyramid};

pub const DEFAULT_P_MAX: f64 = 5.0;
pub const DEFAULT_FREQ_GUARD: f64 = 1e-3;
pub const DEFAULT_VELOCITY: f64 = 2000.0;

/// Smallest section (samples, traces) the phase dip can be computed on.
pub const MIN_DIP_DIMS: (usize, usize) = (4, 3);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttributeParams {
    /// Dip clamp in samples per trace.
    pub p_max: f64,
    /// Instantaneous frequency (rad/sample) below which dip is undefined.
    pub freq_guard: f64,
    /// Reference velocity (m/s) for converting two-way time dip to slope.
    pub velocity: f64,
}

impl Default for AttributeParams {
    fn default() -> Self {
        AttributeParams {
            p_max: DEFAULT_P_MAX,
            freq_guard: DEFAULT_FREQ_GUARD,
            velocity: DEFAULT_VELOCITY,
        }
    }
}

impl AttributeParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_max", self.p_max),
            ("freq_guard", self.freq_guard),
            ("velocity", self.velocity),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Dimensionless slope from a time dip in samples per trace, using the
/// time-dip convention `dz = v * dt / 2` per sample.
#[inline]
pub fn time_dip_to_slope(p: f64, dt: f64, lateral: f64, velocity: f64) -> f64 {
    p * (velocity * dt / 2.0) / lateral
}

fn quality_product(a: Option<&Grid2>, b: Option<&Grid2>) -> Option<Grid2> {
    match (a, b) {
        (Some(a), Some(b)) => Some(Grid2::from_parts(
            a.rows(),
            a.cols(),
            a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x.min(*y)).collect(),
        )),
        (Some(a), None) | (None, Some(a)) => Some(a.clone()),
        (None, None) => None,
    }
}

/// Phase dip `-(d theta/dx) / (d theta/dt)` in samples per trace.
///
/// Positive dip means events arrive later on higher trace indices. Cells
/// with a guarded envelope or an instantaneous frequency below
/// `params.freq_guard` are 0 and flagged 0 in the quality mask.
pub fn phase_dip(section: &SeismicSection, params: &AttributeParams) -> Result<AttributeMap> {
    params.validate()?;
    let (rows, cols) = section.grid.dims();
    if rows < MIN_DIP_DIMS.0 || cols < MIN_DIP_DIMS.1 {
        return Err(Error::size(format!(
            "phase dip needs at least {}x{} samples, got {rows}x{cols}",
            MIN_DIP_DIMS.0, MIN_DIP_DIMS.1
        )));
    }
    let a = analytic_section(section)?;
    let wt = phase_derivative(&a, Axis::Time)?;
    let wx = phase_derivative(&a, Axis::Trace)?;
    let env_ok = a.envelope_quality();

    let mut dip = Vec::with_capacity(rows * cols);
    let mut quality = Vec::with_capacity(rows * cols);
    for ((&t, &x), &ok) in wt.as_slice().iter().zip(wx.as_slice()).zip(env_ok.as_slice()) {
        if ok == 0.0 || t.abs() < params.freq_guard {
            dip.push(0.0);
            quality.push(0.0);
        } else {
            dip.push((-x / t).clamp(-params.p_max, params.p_max));
            quality.push(1.0);
        }
    }
    AttributeMap::new(
        Grid2::from_parts(rows, cols, dip),
        AttributeKind::PhaseDip,
        Scale::Level(0),
    )
    .with_quality(Grid2::from_parts(rows, cols, quality))
}

/// Sampling and velocity needed to put dips into physical units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DipGeometry {
    pub dt: f64,
    pub dx: f64,
    pub dy: f64,
    pub velocity: f64,
}

impl DipGeometry {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("dt", self.dt), ("dx", self.dx), ("dy", self.dy), ("velocity", self.velocity)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Dip angle `atan(sqrt(s_x^2 + s_y^2))` in radians. Without `q` the
/// crossline slope is taken as zero.
pub fn dip_angle(
    p: &AttributeMap,
    q: Option<&AttributeMap>,
    geometry: &DipGeometry,
) -> Result<AttributeMap> {
    geometry.validate()?;
    if p.kind != AttributeKind::PhaseDip || q.is_some_and(|q| q.kind != AttributeKind::PhaseDip) {
        return Err(Error::param("dip angle needs phase-dip inputs"));
    }
    let DipGeometry { dt, dx, dy, velocity } = *geometry;
    let grid = match q {
        Some(q) => p.grid.zip_map(&q.grid, |pv, qv| {
            let sx = time_dip_to_slope(pv, dt, dx, velocity);
            let sy = time_dip_to_slope(qv, dt, dy, velocity);
            sx.hypot(sy).atan()
        })?,
        None => p.grid.map(|pv| time_dip_to_slope(pv, dt, dx, velocity).abs().atan())?,
    };
    let mut out = AttributeMap::new(grid, AttributeKind::DipAngle, p.scale);
    out.quality = quality_product(p.quality.as_ref(), q.and_then(|q| q.quality.as_ref()));
    out.meta.insert(
        "angle_convention".into(),
        format!("time-dip v={velocity} m/s"),
    );
    Ok(out)
}

/// Inline (`p`, along x) and crossline (`q`, along y) dips on one time
/// slice. Rows run over x, columns over y.
#[derive(Clone, Debug, PartialEq)]
pub struct DipField {
    pub p: Grid2,
    pub q: Option<Grid2>,
    pub geometry: DipGeometry,
    pub quality: Grid2,
}

impl DipField {
    pub fn new(p: Grid2, q: Option<Grid2>, geometry: DipGeometry, p_max: f64) -> Result<Self> {
        geometry.validate()?;
        if let Some(q) = &q {
            p.require_same_dims(q)?;
        }
        let clamp = |g: Grid2| g.map(|v| v.clamp(-p_max, p_max));
        let quality = Grid2::filled(p.rows(), p.cols(), 1.0)?;
        Ok(DipField {
            p: clamp(p)?,
            q: q.map(clamp).transpose()?,
            geometry,
            quality,
        })
    }

    pub fn with_quality(mut self, quality: Grid2) -> Result<Self> {
        self.p.require_same_dims(&quality)?;
        self.quality = quality;
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvaturePair {
    pub k_pos: Grid2,
    pub k_neg: Grid2,
}

/// Central difference along rows (`along_rows`) or columns, one-sided at the ends.
fn gradient(g: &Grid2, spacing: f64, along_rows: bool) -> Grid2 {
    let (rows, cols) = g.dims();
    let len = if along_rows { rows } else { cols };
    Grid2::from_parts(
        rows,
        cols,
        (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(r, c)| {
                let pos = if along_rows { r } else { c };
                let at = |i: usize| if along_rows { g.get(i, c) } else { g.get(r, i) };
                if pos == 0 {
                    (at(1) - at(0)) / spacing
                } else if pos == len - 1 {
                    (at(len - 1) - at(len - 2)) / spacing
                } else {
                    (at(pos + 1) - at(pos - 1)) / (2.0 * spacing)
                }
            })
            .collect(),
    )
}

/// Most positive / most negative curvature (1/m) from the quadratic-surface
/// coefficients `a = s_x,x / 2`, `b = s_y,y / 2`, `c = (s_x,y + s_y,x) / 2`.
pub fn curvature(dips: &DipField) -> Result<CurvaturePair> {
    let q = dips.q.as_ref().ok_or_else(|| {
        Error::Config(
            "curvature needs crossline dip; compute it from a 3D volume, not a 2D section".into(),
        )
    })?;
    let (nx, ny) = dips.p.dims();
    if nx < 3 || ny < 3 {
        return Err(Error::size(format!(
            "curvature needs at least 3x3 cells per slice, got {nx}x{ny}"
        )));
    }
    let DipGeometry { dt, dx, dy, velocity } = dips.geometry;
    let sx = dips.p.map(|v| time_dip_to_slope(v, dt, dx, velocity))?;
    let sy = q.map(|v| time_dip_to_slope(v, dt, dy, velocity))?;
    let sx_x = gradient(&sx, dx, true);
    let sx_y = gradient(&sx, dy, false);
    let sy_x = gradient(&sy, dx, true);
    let sy_y = gradient(&sy, dy, false);

    let n = nx * ny;
    let mut k_pos = Vec::with_capacity(n);
    let mut k_neg = Vec::with_capacity(n);
    for i in 0..n {
        let a = 0.5 * sx_x.as_slice()[i];
        let b = 0.5 * sy_y.as_slice()[i];
        let c = 0.5 * (sx_y.as_slice()[i] + sy_x.as_slice()[i]);
        let radical = ((a - b) * (a - b) + c * c).sqrt();
        k_pos.push((a + b) + radical);
        k_neg.push((a + b) - radical);
    }
    Ok(CurvaturePair {
        k_pos: Grid2::new(nx, ny, k_pos)?,
        k_neg: Grid2::new(nx, ny, k_neg)?,
    })
}

/// Largest usable scale count for a level-size floor, capped at `limit`.
fn feasible_scales(rows: usize, cols: usize, min: (usize, usize), limit: usize) -> usize {
    let (mut r, mut c) = (rows, cols);
    let mut k = 0;
    while k < limit && r >= min.0 && c >= min.1 {
        k += 1;
        r = r.div_ceil(2);
        c = c.div_ceil(2);
    }
    k
}

fn check_smallest_level(pyr: &Pyramid, min: (usize, usize)) -> Result<()> {
    let (rows, cols) = pyr.levels().last().expect("pyramid has >= 1 level").dims();
    if rows < min.0 || cols < min.1 {
        let (br, bc) = pyr.base_dims();
        let max = feasible_scales(br, bc, min, pyr.scales());
        return Err(Error::size(format!(
            "smallest level {rows}x{cols} is below the {}x{} the attribute needs; use at most {max} scales",
            min.0, min.1
        )));
    }
    Ok(())
}

/// Expands a map (and its quality mask) to `rows x cols`. Expanded masks
/// are re-binarized at 0.5.
pub fn expand_map(map: AttributeMap, rows: usize, cols: usize) -> Result<AttributeMap> {
    if map.dims() == (rows, cols) {
        return Ok(map);
    }
    let grid = expand_to(&map.grid, rows, cols)?;
    let quality = map
        .quality
        .as_ref()
        .map(|q| expand_to(q, rows, cols).and_then(|g| g.map(|v| if v >= 0.5 { 1.0 } else { 0.0 })))
        .transpose()?;
    Ok(AttributeMap {
        grid,
        quality,
        ..map
    })
}

/// Computes a single-scale attribute on a section.
pub fn section_attribute(
    section: &SeismicSection,
    kind: AttributeKind,
    params: &AttributeParams,
) -> Result<AttributeMap> {
    match kind {
        AttributeKind::PhaseDip => phase_dip(section, params),
        AttributeKind::DipAngle => {
            let p = phase_dip(section, params)?;
            dip_angle(
                &p,
                None,
                &DipGeometry {
                    dt: section.dt(),
                    dx: section.dx(),
                    dy: section.dx(),
                    velocity: params.velocity,
                },
            )
        }
        AttributeKind::MostPositiveCurvature | AttributeKind::MostNegativeCurvature => {
            Err(Error::Config(
                "curvature needs crossline dip; compute it from a 3D volume, not a 2D section"
                    .into(),
            ))
        }
        AttributeKind::Raw => Ok(AttributeMap::new(section.grid.clone(), kind, Scale::Level(0))),
    }
}

/// Attribute at every pyramid level, each expanded to the base dims.
pub fn attribute_stack(
    pyr: &Pyramid,
    dt: f64,
    dx: f64,
    kind: AttributeKind,
    params: &AttributeParams,
) -> Result<AttributeStack> {
    if kind != AttributeKind::Raw {
        check_smallest_level(pyr, MIN_DIP_DIMS)?;
    }
    let (rows, cols) = pyr.base_dims();
    let sections = pyr.sections(dt, dx, "section")?;
    let maps = sections
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut m = section_attribute(s, kind, params)?;
            m.scale = Scale::Level(i);
            expand_map(m, rows, cols)
        })
        .collect::<Result<Vec<_>>>()?;
    AttributeStack::new(maps)
}

/// Dip values and quality flags along one row.
type DipRow = (Vec<f64>, Vec<f64>);

/// Per-scale dip rows at one time index for one vertical section:
/// `(dip, quality)` for every level, expanded to the section's base dims.
fn section_dip_rows(
    section: &SeismicSection,
    t_index: usize,
    scales: usize,
    kernel: &GaussianKernel,
    params: &AttributeParams,
) -> Result<Vec<DipRow>> {
    let pyr = build_pyramid(&section.grid, scales, kernel)?;
    let stack = attribute_stack(&pyr, section.dt(), section.dx(), AttributeKind::PhaseDip, params)?;
    Ok(stack
        .maps()
        .iter()
        .map(|m| {
            let q = m.quality.as_ref().expect("phase dip carries quality");
            (m.grid.row(t_index).to_vec(), q.row(t_index).to_vec())
        })
        .collect())
}

/// Builds per-level `nx x ny` grids from per-section rows.
fn assemble_slices(
    per_section: Vec<Vec<DipRow>>,
    nx: usize,
    ny: usize,
    section_along_x: bool,
) -> Vec<(Grid2, Grid2)> {
    let scales = per_section[0].len();
    (0..scales)
        .map(|i| {
            let cell = |x: usize, y: usize, pick: fn(&DipRow) -> &Vec<f64>| {
                if section_along_x {
                    pick(&per_section[y][i])[x]
                } else {
                    pick(&per_section[x][i])[y]
                }
            };
            let mut dip = Vec::with_capacity(nx * ny);
            let mut qual = Vec::with_capacity(nx * ny);
            for x in 0..nx {
                for y in 0..ny {
                    dip.push(cell(x, y, |p| &p.0));
                    qual.push(cell(x, y, |p| &p.1));
                }
            }
            (Grid2::from_parts(nx, ny, dip), Grid2::from_parts(nx, ny, qual))
        })
        .collect()
}

/// Per-scale attribute maps on the time slice `t_index` of a volume.
///
/// Inline dips come from 2D pyramids of the sections at fixed y, crossline
/// dips from those at fixed x; each orientation is reduced independently.
pub fn volume_attribute_stack(
    vol: &SeismicVolume,
    t_index: usize,
    kind: AttributeKind,
    scales: usize,
    kernel: &GaussianKernel,
    params: &AttributeParams,
) -> Result<AttributeStack> {
    params.validate()?;
    let (nt, nx, ny) = vol.dims();
    if t_index >= nt {
        return Err(Error::Bounds {
            axis: "time",
            index: t_index,
            len: nt,
        });
    }
    if kind == AttributeKind::Raw {
        let slice = crate::grid::grid_slice_time(vol, t_index)?;
        return AttributeStack::new(vec![AttributeMap::new(slice, kind, Scale::Level(0))]);
    }
    let along_x: Vec<_> = (0..ny)
        .into_par_iter()
        .map(|y| section_dip_rows(&grid_section_crossline(vol, y)?, t_index, scales, kernel, params))
        .collect::<Result<_>>()?;
    let along_y: Vec<_> = (0..nx)
        .into_par_iter()
        .map(|x| section_dip_rows(&grid_section_inline(vol, x)?, t_index, scales, kernel, params))
        .collect::<Result<_>>()?;
    let p_levels = assemble_slices(along_x, nx, ny, true);
    let q_levels = assemble_slices(along_y, nx, ny, false);

    let (dt, dx, dy) = vol.intervals();
    let geometry = DipGeometry {
        dt,
        dx,
        dy,
        velocity: params.velocity,
    };
    let maps = p_levels
        .into_iter()
        .zip(q_levels)
        .enumerate()
        .map(|(i, ((p, pq), (q, qq)))| {
            let quality = quality_product(Some(&pq), Some(&qq)).expect("both present");
            let map = match kind {
                AttributeKind::PhaseDip => AttributeMap::new(p, kind, Scale::Level(i)),
                AttributeKind::DipAngle => {
                    let pm = AttributeMap::new(p, AttributeKind::PhaseDip, Scale::Level(i));
                    let qm = AttributeMap::new(q, AttributeKind::PhaseDip, Scale::Level(i));
                    dip_angle(&pm, Some(&qm), &geometry)?
                }
                AttributeKind::MostPositiveCurvature | AttributeKind::MostNegativeCurvature => {
                    let field = DipField::new(p, Some(q), geometry, params.p_max)?;
                    let pair = curvature(&field)?;
                    let grid = if kind == AttributeKind::MostPositiveCurvature {
                        pair.k_pos
                    } else {
                        pair.k_neg
                    };
                    AttributeMap::new(grid, kind, Scale::Level(i))
                }
                AttributeKind::Raw => unreachable!("handled above"),
            };
            map.with_quality(quality)
        })
        .collect::<Result<Vec<_>>>()?;
    AttributeStack::new(maps)
}
