//! Raw grid files.
//!
//! ```text
//! magic=PFGRID1
//! rows=<n>            time samples
//! cols=<n>            traces (inline positions for volumes)
//! planes=<n>          crossline positions, volumes only
//! dt=<s>  dx=<m>  dy=<m>
//! kind=<tag>  units=<tag>  scale=<index|fused>
//! meta.<key>=<value>  free-form provenance, any number
//! data_offset=<byte offset of the first sample>
//! <blank line>
//! little-endian f32 payload
//! ```
//!
//! Sections are stored row-major (one time sample after another, traces
//! fastest). Volumes are stored time-fastest, then inline, then crossline.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{AttributeKind, AttributeMap, Grid2, Scale, SeismicData, SeismicSection, SeismicVolume, Units};

pub const MAGIC: &str = "PFGRID1";

#[derive(Clone, Debug, PartialEq)]
pub struct GridHeader {
    pub rows: usize,
    pub cols: usize,
    pub planes: Option<usize>,
    pub dt: Option<f64>,
    pub dx: Option<f64>,
    pub dy: Option<f64>,
    pub kind: AttributeKind,
    pub scale: Scale,
    pub meta: BTreeMap<String, String>,
}

impl GridHeader {
    pub fn sample_count(&self) -> Option<usize> {
        self.rows
            .checked_mul(self.cols)?
            .checked_mul(self.planes.unwrap_or(1))
    }
}

/// Header plus samples, in file order, widened to `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDocument {
    pub header: GridHeader,
    pub data: Vec<f64>,
}

impl GridDocument {
    pub fn from_section(section: &SeismicSection) -> Self {
        let (rows, cols) = section.grid.dims();
        let mut meta = BTreeMap::new();
        if !section.label.is_empty() {
            meta.insert("label".to_string(), section.label.clone());
        }
        GridDocument {
            header: GridHeader {
                rows,
                cols,
                planes: None,
                dt: Some(section.dt()),
                dx: Some(section.dx()),
                dy: None,
                kind: AttributeKind::Raw,
                scale: Scale::Level(0),
                meta,
            },
            data: section.grid.as_slice().to_vec(),
        }
    }

    pub fn from_volume(vol: &SeismicVolume) -> Self {
        let (nt, nx, ny) = vol.dims();
        let (dt, dx, dy) = vol.intervals();
        GridDocument {
            header: GridHeader {
                rows: nt,
                cols: nx,
                planes: Some(ny),
                dt: Some(dt),
                dx: Some(dx),
                dy: Some(dy),
                kind: AttributeKind::Raw,
                scale: Scale::Level(0),
                meta: BTreeMap::new(),
            },
            data: vol.as_slice().to_vec(),
        }
    }

    pub fn from_data(data: &SeismicData) -> Self {
        match data {
            SeismicData::Section(s) => GridDocument::from_section(s),
            SeismicData::Volume(v) => GridDocument::from_volume(v),
        }
    }

    /// Attribute map; `dt`/`dx` are the sampling of the grid the map lives on.
    pub fn from_map(map: &AttributeMap, dt: Option<f64>, dx: Option<f64>) -> Self {
        let (rows, cols) = map.dims();
        GridDocument {
            header: GridHeader {
                rows,
                cols,
                planes: None,
                dt,
                dx,
                dy: None,
                kind: map.kind,
                scale: map.scale,
                meta: map.meta.clone(),
            },
            data: map.grid.as_slice().to_vec(),
        }
    }

    pub fn is_volume(&self) -> bool {
        self.header.planes.is_some()
    }

    pub fn grid(&self) -> Result<Grid2> {
        if self.is_volume() {
            return Err(Error::Config("expected a 2D grid, found a volume".into()));
        }
        Grid2::new(self.header.rows, self.header.cols, self.data.clone())
    }

    fn interval(v: Option<f64>, name: &str) -> Result<f64> {
        v.ok_or_else(|| Error::Config(format!("grid file has no {name}")))
    }

    pub fn to_section(&self) -> Result<SeismicSection> {
        let label = self.header.meta.get("label").cloned().unwrap_or_default();
        SeismicSection::new(
            self.grid()?,
            Self::interval(self.header.dt, "dt")?,
            Self::interval(self.header.dx, "dx")?,
            label,
        )
    }

    pub fn to_volume(&self) -> Result<SeismicVolume> {
        let planes = self
            .header
            .planes
            .ok_or_else(|| Error::Config("expected a volume, found a 2D grid".into()))?;
        SeismicVolume::new(
            self.header.rows,
            self.header.cols,
            planes,
            Self::interval(self.header.dt, "dt")?,
            Self::interval(self.header.dx, "dx")?,
            Self::interval(self.header.dy, "dy")?,
            self.data.clone(),
        )
    }

    pub fn to_data(&self) -> Result<SeismicData> {
        if self.is_volume() {
            self.to_volume().map(SeismicData::Volume)
        } else {
            self.to_section().map(SeismicData::Section)
        }
    }

    pub fn to_map(&self) -> Result<AttributeMap> {
        let mut map = AttributeMap::new(self.grid()?, self.header.kind, self.header.scale);
        map.meta = self.header.meta.clone();
        Ok(map)
    }
}

fn header_text(h: &GridHeader) -> String {
    let mut s = format!("magic={MAGIC}\nrows={}\ncols={}\n", h.rows, h.cols);
    if let Some(p) = h.planes {
        s += &format!("planes={p}\n");
    }
    for (key, v) in [("dt", h.dt), ("dx", h.dx), ("dy", h.dy)] {
        if let Some(v) = v {
            s += &format!("{key}={v}\n");
        }
    }
    s += &format!(
        "kind={}\nunits={}\nscale={}\n",
        h.kind.tag(),
        h.kind.units().tag(),
        h.scale
    );
    for (k, v) in &h.meta {
        s += &format!("meta.{k}={v}\n");
    }
    s
}

/// Appends the `data_offset` line, which counts its own digits.
fn finish_header(base: &str) -> String {
    let mut offset = base.len();
    loop {
        let candidate = base.len() + format!("data_offset={offset}\n\n").len();
        if candidate == offset {
            return format!("{base}data_offset={offset}\n\n");
        }
        offset = candidate;
    }
}

/// Serializes a document; fails on values that overflow `f32`.
pub fn encode(doc: &GridDocument) -> Result<Vec<u8>> {
    let h = &doc.header;
    for (k, v) in &h.meta {
        if k.contains(['=', '\n']) || v.contains('\n') || k.is_empty() {
            return Err(Error::param(format!("metadata entry {k:?} cannot be stored in a header line")));
        }
    }
    if h.sample_count() != Some(doc.data.len()) {
        return Err(Error::Shape(format!(
            "header describes {:?} samples but {} were given",
            h.sample_count(),
            doc.data.len()
        )));
    }
    let head = finish_header(&header_text(h));
    let mut out = Vec::with_capacity(head.len() + 4 * doc.data.len());
    out.extend_from_slice(head.as_bytes());
    for (i, &v) in doc.data.iter().enumerate() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(Error::param(format!("sample {i} ({v}) does not fit in f32")));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str, offset: u64) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::format(offset, format!("bad value {value:?} for {key}")))
}

pub fn decode(bytes: &[u8]) -> Result<GridDocument> {
    let mut pos = 0usize;
    let mut fields: BTreeMap<String, (String, u64)> = BTreeMap::new();
    let mut meta = BTreeMap::new();
    let mut first = true;
    let header_end = loop {
        let rest = &bytes[pos..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::format(pos as u64, "header is not terminated by a blank line"))?;
        let line_start = pos as u64;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| Error::format(line_start, "header line is not ASCII"))?;
        pos += nl + 1;
        if line.is_empty() {
            break pos;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::format(line_start, format!("expected key=value, got {line:?}")))?;
        if first {
            if key != "magic" || value != MAGIC {
                let found = if key == "magic" { value } else { line };
                return Err(Error::format(0, format!("bad magic {found:?}, expected {MAGIC:?}")));
            }
            first = false;
            continue;
        }
        if let Some(k) = key.strip_prefix("meta.") {
            meta.insert(k.to_string(), value.to_string());
        } else if fields.insert(key.to_string(), (value.to_string(), line_start)).is_some() {
            return Err(Error::format(line_start, format!("duplicate key {key}")));
        }
    };
    if first {
        return Err(Error::format(0, "missing magic line"));
    }

    let need = |key: &str| {
        fields
            .get(key)
            .ok_or_else(|| Error::format(header_end as u64, format!("missing header key {key}")))
    };
    let opt_num = |key: &str| -> Result<Option<f64>> {
        fields
            .get(key)
            .map(|(v, off)| parse_num::<f64>(v, key, *off))
            .transpose()
    };

    let (v, off) = need("rows")?;
    let rows: usize = parse_num(v, "rows", *off)?;
    let (v, off) = need("cols")?;
    let cols: usize = parse_num(v, "cols", *off)?;
    let planes = fields
        .get("planes")
        .map(|(v, off)| parse_num::<usize>(v, "planes", *off))
        .transpose()?;
    if rows == 0 || cols == 0 || planes == Some(0) {
        return Err(Error::format(need("rows")?.1, "grid dims must be >= 1"));
    }
    let (v, off) = need("kind")?;
    let kind = AttributeKind::from_tag(v)
        .ok_or_else(|| Error::format(*off, format!("unknown kind {v:?}")))?;
    if let Some((v, off)) = fields.get("units") {
        let units = Units::from_tag(v).ok_or_else(|| Error::format(*off, format!("unknown units {v:?}")))?;
        if units != kind.units() {
            return Err(Error::format(
                *off,
                format!("units {v} do not match kind {}", kind.tag()),
            ));
        }
    }
    let scale = match fields.get("scale") {
        Some((v, off)) => Scale::parse(v).ok_or_else(|| Error::format(*off, format!("bad scale {v:?}")))?,
        None => Scale::Level(0),
    };
    let (v, off) = need("data_offset")?;
    let data_offset: usize = parse_num(v, "data_offset", *off)?;
    if data_offset != header_end {
        return Err(Error::format(
            *off,
            format!("data_offset {data_offset} does not match header end {header_end}"),
        ));
    }
    for key in fields.keys() {
        if !matches!(
            key.as_str(),
            "rows" | "cols" | "planes" | "dt" | "dx" | "dy" | "kind" | "units" | "scale" | "data_offset"
        ) {
            return Err(Error::format(fields[key].1, format!("unknown header key {key}")));
        }
    }

    let header = GridHeader {
        rows,
        cols,
        planes,
        dt: opt_num("dt")?,
        dx: opt_num("dx")?,
        dy: opt_num("dy")?,
        kind,
        scale,
        meta,
    };
    let count = header
        .sample_count()
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or_else(|| Error::format(header_end as u64, "grid dims overflow"))?;
    let payload = &bytes[header_end..];
    if payload.len() != count * 4 {
        let what = if payload.len() < count * 4 { "truncated" } else { "oversized" };
        return Err(Error::format(
            (header_end + payload.len().min(count * 4)) as u64,
            format!(
                "{what} payload: expected {} bytes, found {}",
                count * 4,
                payload.len()
            ),
        ));
    }
    let mut data = Vec::with_capacity(count);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk"));
        if !v.is_finite() {
            return Err(Error::format(
                (header_end + 4 * i) as u64,
                format!("non-finite sample {v}"),
            ));
        }
        data.push(v as f64);
    }
    Ok(GridDocument { header, data })
}

/// Writes via a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_grid(path: &Path, doc: &GridDocument) -> Result<()> {
    write_atomic(path, &encode(doc)?)
}

pub fn read_grid(path: &Path) -> Result<GridDocument> {
    decode(&fs::read(path)?)
}
