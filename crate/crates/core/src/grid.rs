//! Dense float grids, seismic containers and tagged attribute maps.
//!
//! A [`Grid2`] is row-major with the row index running over time samples and
//! the column index over traces. A [`SeismicVolume`] stores samples with time
//! varying fastest, then inline position, then crossline position.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: data[index],
        }),
        None => Ok(()),
    }
}

fn check_interval(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be a positive finite interval, got {v}")))
    }
}

/// Immutable row-major grid of finite `f64` samples.
#[derive(Clone, PartialEq)]
pub struct Grid2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Grid2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

impl Grid2 {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::size(format!("grid dims must be >= 1, got {rows}x{cols}")));
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::size(format!("grid dims {rows}x{cols} overflow")))?;
        if data.len() != expected {
            return Err(Error::size(format!(
                "grid {rows}x{cols} needs {expected} samples, got {}",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Grid2 { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Grid2::new(rows, cols, vec![value; rows.saturating_mul(cols)])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.saturating_mul(cols));
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Grid2::new(rows, cols, data)
    }

    /// Crate-internal constructor for buffers produced by arithmetic on
    /// already-validated grids.
    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Grid2 { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Builds a grid from columns of equal length (one column per trace).
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Shape("columns have differing lengths".into()));
        }
        Grid2::from_fn(rows, cols, |r, c| columns[c][r])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Grid2::new(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Grid2, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.require_same_dims(other)?;
        Grid2::new(
            self.rows,
            self.cols,
            self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn require_same_dims(&self, other: &Grid2) -> Result<()> {
        if self.dims() == other.dims() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Swaps rows and columns.
    pub fn transpose(&self) -> Grid2 {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self.get(r, c));
            }
        }
        Grid2::from_parts(self.cols, self.rows, out)
    }
}

/// A 2D seismic section: time samples down the rows, traces across the columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SeismicSection {
    pub grid: Grid2,
    dt: f64,
    dx: f64,
    pub label: String,
}

impl SeismicSection {
    pub fn new(grid: Grid2, dt: f64, dx: f64, label: impl Into<String>) -> Result<Self> {
        check_interval("dt", dt)?;
        check_interval("dx", dx)?;
        Ok(SeismicSection {
            grid,
            dt,
            dx,
            label: label.into(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn samples(&self) -> usize {
        self.grid.rows()
    }

    pub fn traces(&self) -> usize {
        self.grid.cols()
    }

    pub fn trace(&self, n: usize) -> Vec<f64> {
        self.grid.column(n)
    }
}

/// A 3D seismic volume with time varying fastest in `data`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeismicVolume {
    nt: usize,
    nx: usize,
    ny: usize,
    dt: f64,
    dx: f64,
    dy: f64,
    data: Vec<f64>,
}

impl SeismicVolume {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nt: usize,
        nx: usize,
        ny: usize,
        dt: f64,
        dx: f64,
        dy: f64,
        data: Vec<f64>,
    ) -> Result<Self> {
        if nt == 0 || nx == 0 || ny == 0 {
            return Err(Error::size(format!("volume dims must be >= 1, got {nt}x{nx}x{ny}")));
        }
        check_interval("dt", dt)?;
        check_interval("dx", dx)?;
        check_interval("dy", dy)?;
        let expected = nt
            .checked_mul(nx)
            .and_then(|v| v.checked_mul(ny))
            .ok_or_else(|| Error::size("volume dims overflow"))?;
        if data.len() != expected {
            return Err(Error::size(format!(
                "volume {nt}x{nx}x{ny} needs {expected} samples, got {}",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(SeismicVolume {
            nt,
            nx,
            ny,
            dt,
            dx,
            dy,
            data,
        })
    }

    pub fn from_fn(
        (nt, nx, ny): (usize, usize, usize),
        (dt, dx, dy): (f64, f64, f64),
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(nt * nx * ny);
        for y in 0..ny {
            for x in 0..nx {
                for t in 0..nt {
                    data.push(f(t, x, y));
                }
            }
        }
        SeismicVolume::new(nt, nx, ny, dt, dx, dy, data)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nt, self.nx, self.ny)
    }

    pub fn intervals(&self) -> (f64, f64, f64) {
        (self.dt, self.dx, self.dy)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, t: usize, x: usize, y: usize) -> f64 {
        self.data[t + self.nt * (x + self.nx * y)]
    }

    /// Reassembles a volume from its inline sections (one per x position,
    /// each `nt x ny`).
    pub fn from_inline_sections(sections: &[SeismicSection], dx: f64) -> Result<Self> {
        let first = sections
            .first()
            .ok_or_else(|| Error::size("no sections to assemble"))?;
        let (nt, ny) = first.grid.dims();
        let nx = sections.len();
        for s in sections {
            if s.grid.dims() != (nt, ny) {
                return Err(Error::Shape("inline sections differ in size".into()));
            }
        }
        SeismicVolume::from_fn((nt, nx, ny), (first.dt, dx, first.dx), |t, x, y| {
            sections[x].grid.get(t, y)
        })
    }
}

/// Horizontal slice of `vol` at a time index, `nx` rows by `ny` columns.
pub fn grid_slice_time(vol: &SeismicVolume, t_index: usize) -> Result<Grid2> {
    if t_index >= vol.nt {
        return Err(Error::Bounds {
            axis: "time",
            index: t_index,
            len: vol.nt,
        });
    }
    Ok(Grid2::from_parts(
        vol.nx,
        vol.ny,
        (0..vol.nx)
            .flat_map(|x| (0..vol.ny).map(move |y| (x, y)))
            .map(|(x, y)| vol.get(t_index, x, y))
            .collect(),
    ))
}

/// Vertical section at a fixed inline (x) position: `nt x ny`, lateral interval `dy`.
pub fn grid_section_inline(vol: &SeismicVolume, x_index: usize) -> Result<SeismicSection> {
    if x_index >= vol.nx {
        return Err(Error::Bounds {
            axis: "inline",
            index: x_index,
            len: vol.nx,
        });
    }
    let grid = Grid2::from_fn(vol.nt, vol.ny, |t, y| vol.get(t, x_index, y))?;
    SeismicSection::new(grid, vol.dt, vol.dy, format!("inline {x_index}"))
}

/// Vertical section at a fixed crossline (y) position: `nt x nx`, lateral interval `dx`.
pub fn grid_section_crossline(vol: &SeismicVolume, y_index: usize) -> Result<SeismicSection> {
    if y_index >= vol.ny {
        return Err(Error::Bounds {
            axis: "crossline",
            index: y_index,
            len: vol.ny,
        });
    }
    let base = vol.nt * vol.nx * y_index;
    let slab = &vol.data[base..base + vol.nt * vol.nx];
    let grid = Grid2::from_fn(vol.nt, vol.nx, |t, x| slab[t + vol.nt * x])?;
    SeismicSection::new(grid, vol.dt, vol.dx, format!("crossline {y_index}"))
}

/// Either a 2D section or a 3D volume.
#[derive(Clone, Debug, PartialEq)]
pub enum SeismicData {
    Section(SeismicSection),
    Volume(SeismicVolume),
}

impl SeismicData {
    pub fn as_section(&self) -> Option<&SeismicSection> {
        match self {
            SeismicData::Section(s) => Some(s),
            SeismicData::Volume(_) => None,
        }
    }

    pub fn as_volume(&self) -> Option<&SeismicVolume> {
        match self {
            SeismicData::Volume(v) => Some(v),
            SeismicData::Section(_) => None,
        }
    }

    /// Samples with time fastest.
    pub fn samples_t_fastest(&self) -> Vec<f64> {
        match self {
            SeismicData::Section(s) => s.grid.transpose().into_vec(),
            SeismicData::Volume(v) => v.as_slice().to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttributeKind {
    PhaseDip,
    DipAngle,
    MostPositiveCurvature,
    MostNegativeCurvature,
    Raw,
}

impl AttributeKind {
    pub fn units(self) -> Units {
        match self {
            AttributeKind::PhaseDip => Units::SamplesPerTrace,
            AttributeKind::DipAngle => Units::Radians,
            AttributeKind::MostPositiveCurvature | AttributeKind::MostNegativeCurvature => {
                Units::PerMeter
            }
            AttributeKind::Raw => Units::Dimensionless,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            AttributeKind::PhaseDip => "phase-dip",
            AttributeKind::DipAngle => "dip-angle",
            AttributeKind::MostPositiveCurvature => "most-positive-curvature",
            AttributeKind::MostNegativeCurvature => "most-negative-curvature",
            AttributeKind::Raw => "raw",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "phase-dip" => AttributeKind::PhaseDip,
            "dip-angle" => AttributeKind::DipAngle,
            "most-positive-curvature" => AttributeKind::MostPositiveCurvature,
            "most-negative-curvature" => AttributeKind::MostNegativeCurvature,
            "raw" => AttributeKind::Raw,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Units {
    SamplesPerTrace,
    Radians,
    PerMeter,
    Dimensionless,
}

impl Units {
    pub fn tag(self) -> &'static str {
        match self {
            Units::SamplesPerTrace => "samples-per-trace",
            Units::Radians => "radians",
            Units::PerMeter => "per-meter",
            Units::Dimensionless => "dimensionless",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "samples-per-trace" => Units::SamplesPerTrace,
            "radians" => Units::Radians,
            "per-meter" => Units::PerMeter,
            "dimensionless" => Units::Dimensionless,
            _ => return None,
        })
    }
}

/// Pyramid level an attribute map came from, or the fused result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scale {
    Level(usize),
    Fused,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scale::Level(i) => write!(f, "{i}"),
            Scale::Fused => f.write_str("fused"),
        }
    }
}

impl Scale {
    pub fn parse(s: &str) -> Option<Self> {
        if s == "fused" {
            Some(Scale::Fused)
        } else {
            s.parse().ok().map(Scale::Level)
        }
    }
}

/// An attribute grid tagged with its kind and source scale.
///
/// `quality` optionally flags cells whose value is a guarded sentinel
/// (0) rather than a measurement (1). `meta` carries free-form provenance
/// that is echoed into grid file headers.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeMap {
    pub grid: Grid2,
    pub kind: AttributeKind,
    pub scale: Scale,
    pub quality: Option<Grid2>,
    pub meta: BTreeMap<String, String>,
}

impl AttributeMap {
    pub fn new(grid: Grid2, kind: AttributeKind, scale: Scale) -> Self {
        AttributeMap {
            grid,
            kind,
            scale,
            quality: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn with_quality(mut self, quality: Grid2) -> Result<Self> {
        self.grid.require_same_dims(&quality)?;
        self.quality = Some(quality);
        Ok(self)
    }

    pub fn units(&self) -> Units {
        self.kind.units()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.grid.dims()
    }
}
