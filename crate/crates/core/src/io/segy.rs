//! SEG-Y import (revision 1 layout, IBM or IEEE samples).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid2, SeismicData, SeismicSection, SeismicVolume};

pub const TEXT_HEADER_LEN: usize = 3200;
pub const BINARY_HEADER_LEN: usize = 400;
pub const TRACE_HEADER_LEN: usize = 240;

const BIN_INTERVAL: usize = 3216;
const BIN_SAMPLES: usize = 3220;
const BIN_FORMAT: usize = 3224;
const BIN_EXT_HEADERS: usize = 3504;

const TR_SAMPLES: usize = 114;
const TR_INLINE: usize = 188;
const TR_CROSSLINE: usize = 192;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleFormat {
    Ibm,
    Ieee,
}

impl SampleFormat {
    pub fn from_code(code: u16) -> Result<Self> {
        match code {
            1 => Ok(SampleFormat::Ibm),
            5 => Ok(SampleFormat::Ieee),
            _ => Err(Error::UnsupportedFormat { code }),
        }
    }

    pub fn code(self) -> u16 {
        match self {
            SampleFormat::Ibm => 1,
            SampleFormat::Ieee => 5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SegyOptions {
    pub format: Option<SampleFormat>,
    pub little_endian: bool,
    pub max_traces: Option<usize>,
    /// Trace spacing in meters; SEG-Y carries none we can rely on.
    pub dx: f64,
    pub dy: f64,
}

impl Default for SegyOptions {
    fn default() -> Self {
        SegyOptions {
            format: None,
            little_endian: false,
            max_traces: None,
            dx: 25.0,
            dy: 25.0,
        }
    }
}

/// Decodes an IBM System/360 single-precision float.
pub fn ibm_to_f64(bits: u32) -> f64 {
    let sign = if bits >> 31 == 1 { -1.0 } else { 1.0 };
    let exponent = ((bits >> 24) & 0x7f) as i32 - 64;
    let fraction = (bits & 0x00ff_ffff) as f64 / (1u32 << 24) as f64;
    sign * fraction * 16f64.powi(exponent)
}

/// Encodes to IBM float, rounding the fraction to nearest.
pub fn f32_to_ibm(value: f32) -> u32 {
    if value == 0.0 || !value.is_finite() {
        return 0;
    }
    let sign = if value < 0.0 { 0x8000_0000u32 } else { 0 };
    let mut v = value.abs() as f64;
    let mut exponent = 64i32;
    while v >= 1.0 {
        v /= 16.0;
        exponent += 1;
    }
    while v < 1.0 / 16.0 {
        v *= 16.0;
        exponent -= 1;
    }
    let mut fraction = (v * (1u32 << 24) as f64).round() as u32;
    if fraction >= 1 << 24 {
        fraction >>= 4;
        exponent += 1;
    }
    if exponent <= 0 {
        return 0;
    }
    if exponent > 127 {
        return sign | 0x7fff_ffff;
    }
    sign | ((exponent as u32) << 24) | fraction
}

struct Reader<'a> {
    bytes: &'a [u8],
    little: bool,
}

impl Reader<'_> {
    fn slice(&self, at: usize, n: usize) -> Result<&[u8]> {
        self.bytes.get(at..at + n).ok_or_else(|| {
            Error::format(
                at as u64,
                format!("file ends at byte {}, needed {} bytes here", self.bytes.len(), n),
            )
        })
    }

    fn u16(&self, at: usize) -> Result<u16> {
        let b: [u8; 2] = self.slice(at, 2)?.try_into().expect("2 bytes");
        Ok(if self.little { u16::from_le_bytes(b) } else { u16::from_be_bytes(b) })
    }

    fn i16(&self, at: usize) -> Result<i16> {
        self.u16(at).map(|v| v as i16)
    }

    fn i32(&self, at: usize) -> Result<i32> {
        let b: [u8; 4] = self.slice(at, 4)?.try_into().expect("4 bytes");
        Ok(if self.little { i32::from_le_bytes(b) } else { i32::from_be_bytes(b) })
    }

    fn u32(&self, at: usize) -> Result<u32> {
        self.i32(at).map(|v| v as u32)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegyHeader {
    pub interval_us: u16,
    pub samples: usize,
    pub format: SampleFormat,
    pub extended_headers: usize,
}

pub fn read_segy(path: &Path, opts: &SegyOptions) -> Result<(SeismicData, SegyHeader)> {
    parse_segy(&fs::read(path)?, opts)
}

pub fn parse_segy(bytes: &[u8], opts: &SegyOptions) -> Result<(SeismicData, SegyHeader)> {
    let r = Reader {
        bytes,
        little: opts.little_endian,
    };
    let interval_us = r.u16(BIN_INTERVAL)?;
    let samples = r.i16(BIN_SAMPLES)?;
    let code = r.u16(BIN_FORMAT)?;
    let format = match opts.format {
        Some(f) => f,
        None => SampleFormat::from_code(code)?,
    };
    let ext = r.i16(BIN_EXT_HEADERS)?.max(0) as usize;
    if interval_us == 0 {
        return Err(Error::format(BIN_INTERVAL as u64, "sample interval is zero"));
    }
    if samples <= 0 {
        return Err(Error::format(BIN_SAMPLES as u64, format!("bad samples per trace {samples}")));
    }
    let ns = samples as usize;
    let header = SegyHeader {
        interval_us,
        samples: ns,
        format,
        extended_headers: ext,
    };

    let first = TEXT_HEADER_LEN + BINARY_HEADER_LEN + ext * TEXT_HEADER_LEN;
    let stride = TRACE_HEADER_LEN + 4 * ns;
    if bytes.len() < first + stride {
        return Err(Error::format(
            bytes.len() as u64,
            format!("no complete trace: need {} bytes, file has {}", first + stride, bytes.len()),
        ));
    }
    let mut count = (bytes.len() - first) / stride;
    if !(bytes.len() - first).is_multiple_of(stride) {
        log::warn!(
            "ignoring {} trailing bytes after the last complete trace",
            (bytes.len() - first) % stride
        );
    }
    if let Some(m) = opts.max_traces {
        count = count.min(m.max(1));
    }

    let mut traces = Vec::with_capacity(count);
    let mut keys = Vec::with_capacity(count);
    for i in 0..count {
        let at = first + i * stride;
        let trace_ns = r.i16(at + TR_SAMPLES)?;
        if trace_ns > 0 && trace_ns as usize != ns {
            return Err(Error::format(
                (at + TR_SAMPLES) as u64,
                format!("trace {i} has {trace_ns} samples, binary header says {ns}"),
            ));
        }
        keys.push((r.i32(at + TR_INLINE)?, r.i32(at + TR_CROSSLINE)?));
        let mut trace = Vec::with_capacity(ns);
        for s in 0..ns {
            let pos = at + TRACE_HEADER_LEN + 4 * s;
            let raw = r.u32(pos)?;
            let v = match format {
                SampleFormat::Ibm => ibm_to_f64(raw),
                SampleFormat::Ieee => f32::from_bits(raw) as f64,
            };
            if !v.is_finite() {
                return Err(Error::format(pos as u64, format!("non-finite sample {v}")));
            }
            trace.push(v);
        }
        traces.push(trace);
    }

    let dt = interval_us as f64 * 1e-6;
    if let Some(vol) = as_volume(&traces, &keys, ns, dt, opts)? {
        return Ok((SeismicData::Volume(vol), header));
    }
    let section = SeismicSection::new(Grid2::from_columns(&traces)?, dt, opts.dx, "segy")?;
    Ok((SeismicData::Section(section), header))
}

/// Arranges traces on a full inline/crossline grid, if they form one.
fn as_volume(
    traces: &[Vec<f64>],
    keys: &[(i32, i32)],
    ns: usize,
    dt: f64,
    opts: &SegyOptions,
) -> Result<Option<SeismicVolume>> {
    let mut inlines: Vec<i32> = keys.iter().map(|k| k.0).collect();
    let mut xlines: Vec<i32> = keys.iter().map(|k| k.1).collect();
    inlines.sort_unstable();
    inlines.dedup();
    xlines.sort_unstable();
    xlines.dedup();
    let (ni, nc) = (inlines.len(), xlines.len());
    if ni < 2 || nc < 2 || ni * nc != traces.len() {
        return Ok(None);
    }
    // crossline numbers run along x, inline numbers along y
    let mut data = vec![0.0; ns * nc * ni];
    let mut seen = vec![false; nc * ni];
    for (trace, &(il, xl)) in traces.iter().zip(keys) {
        let y = inlines.binary_search(&il).expect("present");
        let x = xlines.binary_search(&xl).expect("present");
        let slot = x + nc * y;
        if seen[slot] {
            return Ok(None);
        }
        seen[slot] = true;
        data[ns * slot..ns * (slot + 1)].copy_from_slice(trace);
    }
    SeismicVolume::new(ns, nc, ni, dt, opts.dx, opts.dy, data).map(Some)
}

/// Builds a minimal big-endian SEG-Y file; used for fixtures and tests.
pub fn encode_segy(
    traces: &[(i32, i32, Vec<f32>)],
    interval_us: u16,
    format: SampleFormat,
) -> Result<Vec<u8>> {
    let ns = traces.first().map_or(0, |t| t.2.len());
    if ns == 0 || ns > i16::MAX as usize {
        return Err(Error::param("traces must have between 1 and 32767 samples"));
    }
    let mut out = vec![0u8; TEXT_HEADER_LEN + BINARY_HEADER_LEN];
    out[..TEXT_HEADER_LEN].fill(0x40);
    out[BIN_INTERVAL..BIN_INTERVAL + 2].copy_from_slice(&interval_us.to_be_bytes());
    out[BIN_SAMPLES..BIN_SAMPLES + 2].copy_from_slice(&(ns as i16).to_be_bytes());
    out[BIN_FORMAT..BIN_FORMAT + 2].copy_from_slice(&format.code().to_be_bytes());
    for (il, xl, samples) in traces {
        if samples.len() != ns {
            return Err(Error::Shape("all traces must have the same length".into()));
        }
        let mut th = [0u8; TRACE_HEADER_LEN];
        th[TR_SAMPLES..TR_SAMPLES + 2].copy_from_slice(&(ns as i16).to_be_bytes());
        th[116..118].copy_from_slice(&interval_us.to_be_bytes());
        th[TR_INLINE..TR_INLINE + 4].copy_from_slice(&il.to_be_bytes());
        th[TR_CROSSLINE..TR_CROSSLINE + 4].copy_from_slice(&xl.to_be_bytes());
        out.extend_from_slice(&th);
        for &v in samples {
            let bits = match format {
                SampleFormat::Ibm => f32_to_ibm(v),
                SampleFormat::Ieee => v.to_bits(),
            };
            out.extend_from_slice(&bits.to_be_bytes());
        }
    }
    Ok(out)
}
