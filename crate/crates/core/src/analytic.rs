//! Complex trace analysis: per-trace Hilbert transform and phase gradients.
//!
//! Phase derivatives are taken without unwrapping. For neighbouring analytic
//! samples `z_a`, `z_b` the phase increment is `arg(z_b * conj(z_a))`, i.e.
//! `atan2(f_a h_b - h_a f_b, f_a f_b + h_a h_b)`. Its numerator is the
//! discrete form of `f dh - h df`, and for a linear phase the increment is
//! exact as long as it stays below pi in magnitude.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Grid2, SeismicSection};

pub const MIN_TRACE_LEN: usize = 4;

/// Relative envelope guard: cells with `f^2 + h^2 < ENVELOPE_GUARD * max(f^2 + h^2)`
/// carry no usable phase.
pub const ENVELOPE_GUARD: f64 = 1e-10;

/// Forward/inverse FFT pair sized for one trace length.
#[derive(Clone)]
pub struct HilbertPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl HilbertPlan {
    pub fn new(len: usize) -> Result<Self> {
        if len < MIN_TRACE_LEN {
            return Err(Error::size(format!(
                "Hilbert transform needs at least {MIN_TRACE_LEN} samples, got {len}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(HilbertPlan {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Quadrature trace of `trace`; multiplies each bin by `-i sign(k)`.
    pub fn apply(&self, trace: &[f64]) -> Result<Vec<f64>> {
        let n = self.len;
        if trace.len() != n {
            return Err(Error::Shape(format!(
                "trace has {} samples, plan expects {n}",
                trace.len()
            )));
        }
        let mut buf: Vec<Complex64> = trace.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut scratch = vec![
            Complex64::default();
            self.forward
                .get_inplace_scratch_len()
                .max(self.inverse.get_inplace_scratch_len())
        ];
        self.forward.process_with_scratch(&mut buf, &mut scratch);

        buf[0] = Complex64::default();
        let half = n / 2;
        for (k, b) in buf.iter_mut().enumerate().skip(1) {
            if n.is_multiple_of(2) && k == half {
                *b = Complex64::default();
            } else if k <= half {
                // -i * (re + i im) = im - i re
                *b = Complex64::new(b.im, -b.re);
            } else {
                *b = Complex64::new(-b.im, b.re);
            }
        }

        self.inverse.process_with_scratch(&mut buf, &mut scratch);
        let scale = 1.0 / n as f64;
        Ok(buf.iter().map(|c| c.re * scale).collect())
    }
}

/// FFT-based discrete Hilbert transform of one trace.
pub fn hilbert_trace(trace: &[f64]) -> Result<Vec<f64>> {
    HilbertPlan::new(trace.len())?.apply(trace)
}

/// Section together with its trace-wise Hilbert transform.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticSection {
    pub real: Grid2,
    pub imag: Grid2,
    pub dt: f64,
    pub dx: f64,
}

impl AnalyticSection {
    /// `f^2 + h^2` at every cell.
    pub fn envelope_squared(&self) -> Grid2 {
        let data = self
            .real
            .as_slice()
            .iter()
            .zip(self.imag.as_slice())
            .map(|(f, h)| f * f + h * h)
            .collect();
        Grid2::from_parts(self.real.rows(), self.real.cols(), data)
    }

    /// Absolute guard threshold on `f^2 + h^2` for this section.
    pub fn envelope_threshold(&self) -> f64 {
        let max = self
            .real
            .as_slice()
            .iter()
            .zip(self.imag.as_slice())
            .fold(0.0_f64, |m, (f, h)| m.max(f * f + h * h));
        ENVELOPE_GUARD * max
    }

    /// 1 where the envelope clears the guard, 0 where phase is undefined.
    pub fn envelope_quality(&self) -> Grid2 {
        let eps = self.envelope_threshold();
        let env = self.envelope_squared();
        let data = env
            .as_slice()
            .iter()
            .map(|&e| if guarded(e, eps) { 0.0 } else { 1.0 })
            .collect();
        Grid2::from_parts(env.rows(), env.cols(), data)
    }
}

#[inline]
fn guarded(env2: f64, eps: f64) -> bool {
    env2 < eps || env2 == 0.0
}

/// Applies [`hilbert_trace`] to every column of the section.
pub fn analytic_section(section: &SeismicSection) -> Result<AnalyticSection> {
    let plan = HilbertPlan::new(section.samples())?;
    let imag_cols: Vec<Vec<f64>> = (0..section.traces())
        .into_par_iter()
        .map(|n| plan.apply(&section.trace(n)))
        .collect::<Result<_>>()?;
    Ok(AnalyticSection {
        real: section.grid.clone(),
        imag: Grid2::from_columns(&imag_cols)?,
        dt: section.dt(),
        dx: section.dx(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Down the trace; radians per sample.
    Time,
    /// Across traces; radians per trace.
    Trace,
}

/// Continuous phase rate `(f h' - h f') / (f^2 + h^2)` of `theta = atan2(h, f)`.
pub fn phase_rate(f: f64, df: f64, h: f64, dh: f64) -> f64 {
    (f * dh - h * df) / (f * f + h * h)
}

#[inline]
fn phase_increment(fa: f64, ha: f64, fb: f64, hb: f64) -> f64 {
    (fa * hb - ha * fb).atan2(fa * fb + ha * hb)
}

/// Phase gradient along `axis`: the mean of the two one-step increments
/// `arg(z[i+1] conj z[i])` and `arg(z[i] conj z[i-1])` in the interior, a single
/// increment at the ends, 0 where the envelope is guarded. Each increment is
/// unambiguous up to the Nyquist rate.
pub fn phase_derivative(a: &AnalyticSection, axis: Axis) -> Result<Grid2> {
    let (rows, cols) = a.real.dims();
    let len = match axis {
        Axis::Time => rows,
        Axis::Trace => cols,
    };
    if len < 3 {
        return Err(Error::size(format!(
            "phase derivative along {axis:?} needs >= 3 samples, got {len}"
        )));
    }
    let eps = a.envelope_threshold();
    let f = a.real.as_slice();
    let h = a.imag.as_slice();
    let stride = match axis {
        Axis::Time => cols,
        Axis::Trace => 1,
    };

    let mut out = vec![0.0; rows * cols];
    out.par_chunks_mut(cols).enumerate().for_each(|(r, out_row)| {
        for (c, o) in out_row.iter_mut().enumerate() {
            let idx = r * cols + c;
            if guarded(f[idx] * f[idx] + h[idx] * h[idx], eps) {
                continue;
            }
            let pos = match axis {
                Axis::Time => r,
                Axis::Trace => c,
            };
            let step = |a: usize, b: usize| phase_increment(f[a], h[a], f[b], h[b]);
            *o = if pos == 0 {
                step(idx, idx + stride)
            } else if pos == len - 1 {
                step(idx - stride, idx)
            } else {
                0.5 * (step(idx - stride, idx) + step(idx, idx + stride))
            };
        }
    });
    Ok(Grid2::from_parts(rows, cols, out))
}
