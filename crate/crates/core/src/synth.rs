//! Synthetic sections and volumes with analytic ground truth.
//!
//! Events are Ricker wavelets placed along planar or parabolic surfaces.
//! Ground-truth dips and curvatures come from the event geometry, never from
//! the rendered amplitudes. Noise is white Gaussian from a seeded ChaCha8
//! stream, rescaled so the realized SNR equals the requested one.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::grid::{Grid2, SeismicData, SeismicSection, SeismicVolume};

pub const NOISE_RNG: &str = "ChaCha8Rng/StandardNormal";

/// Ricker amplitude at time `t` seconds from the peak.
#[inline]
pub fn ricker_at(f_peak: f64, t: f64) -> f64 {
    let a = (PI * f_peak * t).powi(2);
    (1.0 - 2.0 * a) * (-a).exp()
}

fn check_nyquist(f_peak: f64, dt: f64) -> Result<()> {
    if !(f_peak.is_finite() && f_peak > 0.0) {
        return Err(Error::param(format!("peak frequency must be > 0, got {f_peak}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param(format!("dt must be > 0, got {dt}")));
    }
    let nyquist = 1.0 / (2.0 * dt);
    if f_peak >= nyquist {
        return Err(Error::param(format!(
            "peak frequency {f_peak} Hz is not below Nyquist {nyquist} Hz"
        )));
    }
    Ok(())
}

/// Ricker wavelet sampled at `-L dt ..= L dt`.
pub fn ricker(f_peak: f64, dt: f64, half_length: usize) -> Result<Vec<f64>> {
    check_nyquist(f_peak, dt)?;
    let l = half_length as isize;
    Ok((-l..=l).map(|i| ricker_at(f_peak, i as f64 * dt)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventShape {
    /// Dips in samples per trace.
    Plane { sx: f64, sy: f64 },
    /// Curvatures in 1/m about the grid centre, plus a linear dip.
    Quadratic { kx: f64, ky: f64, sx: f64, sy: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventSpec {
    pub shape: EventShape,
    /// Event time at trace (0, 0), or at the grid centre for quadratic events, in seconds.
    pub t0: f64,
    pub amplitude: f64,
}

impl EventSpec {
    pub fn plane(t0: f64, amplitude: f64, sx: f64, sy: f64) -> Self {
        EventSpec {
            shape: EventShape::Plane { sx, sy },
            t0,
            amplitude,
        }
    }

    pub fn quadratic(t0: f64, amplitude: f64, kx: f64, ky: f64) -> Self {
        EventSpec {
            shape: EventShape::Quadratic {
                kx,
                ky,
                sx: 0.0,
                sy: 0.0,
            },
            t0,
            amplitude,
        }
    }
}

/// Vertical fault: every trace with x index `>= trace` is shifted down by `throw` samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaultSpec {
    pub trace: usize,
    pub throw: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub nt: usize,
    pub nx: usize,
    /// 1 produces a 2D section.
    pub ny: usize,
    pub dt: f64,
    pub dx: f64,
    pub dy: f64,
    pub f_peak: f64,
    /// Reference velocity linking curvature (1/m) to time shifts.
    pub velocity: f64,
    pub events: Vec<EventSpec>,
    pub faults: Vec<FaultSpec>,
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            nt: 256,
            nx: 64,
            ny: 1,
            dt: 0.004,
            dx: 25.0,
            dy: 25.0,
            f_peak: 25.0,
            velocity: 2000.0,
            events: Vec::new(),
            faults: Vec::new(),
            snr_db: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    /// Inline dip (samples per x trace) of the event nearest in time.
    pub dip_p: SeismicData,
    /// Crossline dip, volumes only.
    pub dip_q: Option<SeismicData>,
    pub k_pos: Option<SeismicData>,
    pub k_neg: Option<SeismicData>,
    /// 1 within half a dominant period of an event, else 0.
    pub support: SeismicData,
}

struct Geometry<'a> {
    spec: &'a SynthSpec,
    xc: f64,
    yc: f64,
    /// metres of depth per time sample under the time-dip convention
    dz: f64,
}

impl Geometry<'_> {
    fn throw(&self, x: usize) -> f64 {
        self.spec
            .faults
            .iter()
            .filter(|f| x >= f.trace)
            .map(|f| f.throw as f64)
            .sum()
    }

    /// Event time in samples at trace (x, y).
    fn event_time(&self, e: &EventSpec, x: usize, y: usize) -> f64 {
        let base = e.t0 / self.spec.dt + self.throw(x);
        match e.shape {
            EventShape::Plane { sx, sy } => base + sx * x as f64 + sy * y as f64,
            EventShape::Quadratic { kx, ky, sx, sy } => {
                let xm = (x as f64 - self.xc) * self.spec.dx;
                let ym = (y as f64 - self.yc) * self.spec.dy;
                base + sx * (x as f64 - self.xc)
                    + sy * (y as f64 - self.yc)
                    + 0.5 * (kx * xm * xm + ky * ym * ym) / self.dz
            }
        }
    }

    /// Analytic (p, q, k_pos, k_neg) of an event at trace (x, y).
    fn event_truth(&self, e: &EventSpec, x: usize, y: usize) -> (f64, f64, f64, f64) {
        match e.shape {
            EventShape::Plane { sx, sy } => (sx, sy, 0.0, 0.0),
            EventShape::Quadratic { kx, ky, sx, sy } => {
                let xm = (x as f64 - self.xc) * self.spec.dx;
                let ym = (y as f64 - self.yc) * self.spec.dy;
                (
                    sx + kx * xm * self.spec.dx / self.dz,
                    sy + ky * ym * self.spec.dy / self.dz,
                    kx.max(ky),
                    kx.min(ky),
                )
            }
        }
    }
}

impl SynthSpec {
    pub fn is_volume(&self) -> bool {
        self.ny > 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.nt < 1 || self.nx < 1 || self.ny < 1 {
            return Err(Error::param("synthetic dims must be >= 1"));
        }
        check_nyquist(self.f_peak, self.dt)?;
        for (name, v) in [("dx", self.dx), ("dy", self.dy), ("velocity", self.velocity)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be > 0, got {v}")));
            }
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::param("snr_db must be finite"));
            }
        }
        for e in &self.events {
            let ok = match e.shape {
                EventShape::Plane { sx, sy } => sx.is_finite() && sy.is_finite(),
                EventShape::Quadratic { kx, ky, sx, sy } => {
                    kx.is_finite() && ky.is_finite() && sx.is_finite() && sy.is_finite()
                }
            };
            if !ok || !e.t0.is_finite() || !e.amplitude.is_finite() {
                return Err(Error::param("event parameters must be finite"));
            }
        }
        Ok(())
    }

    fn geometry(&self) -> Geometry<'_> {
        Geometry {
            spec: self,
            xc: (self.nx as f64 - 1.0) / 2.0,
            yc: (self.ny as f64 - 1.0) / 2.0,
            dz: self.velocity * self.dt / 2.0,
        }
    }
}

/// White Gaussian noise scaled so `10 log10(signal_power / noise_power) == snr_db`.
pub fn calibrated_noise(signal: &[f64], snr_db: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let n = signal.len() as f64;
    let p_signal = signal.iter().map(|v| v * v).sum::<f64>() / n;
    if p_signal == 0.0 {
        return Err(Error::param("cannot set an SNR on a zero-power signal"));
    }
    let mut noise: Vec<f64> = (0..signal.len())
        .map(|_| StandardNormal.sample(rng))
        .collect();
    let p_raw = noise.iter().map(|v| v * v).sum::<f64>() / n;
    let gain = (p_signal / 10f64.powf(snr_db / 10.0) / p_raw).sqrt();
    noise.iter_mut().for_each(|v| *v *= gain);
    Ok(noise)
}

pub fn snr_db(signal: &[f64], noise: &[f64]) -> f64 {
    let ps: f64 = signal.iter().map(|v| v * v).sum();
    let pn: f64 = noise.iter().map(|v| v * v).sum();
    10.0 * (ps / pn).log10()
}

/// Renders the synthetic and its ground truth.
pub fn make_synthetic(spec: &SynthSpec) -> Result<(SeismicData, GroundTruth)> {
    spec.validate()?;
    let geo = spec.geometry();
    let (nt, nx, ny) = (spec.nt, spec.nx, spec.ny);
    let t_max = (nt - 1) as f64;
    let cutoff = 2.0 / (spec.f_peak * spec.dt);
    let half_period = 1.0 / (2.0 * spec.f_peak * spec.dt);

    let cells = nt * nx * ny;
    let mut data = vec![0.0; cells];
    let mut p = vec![0.0; cells];
    let mut q = vec![0.0; cells];
    let mut kp = vec![0.0; cells];
    let mut kn = vec![0.0; cells];
    let mut support = vec![0.0; cells];

    for y in 0..ny {
        for x in 0..nx {
            let base = nt * (x + nx * y);
            let times: Vec<f64> = spec.events.iter().map(|e| geo.event_time(e, x, y)).collect();
            for (e, &tau) in spec.events.iter().zip(&times) {
                if !(0.0..=t_max).contains(&tau) {
                    return Err(Error::param(format!(
                        "event at t0={}s falls outside the time window at trace ({x}, {y}) ({tau:.2} samples)",
                        e.t0
                    )));
                }
                let lo = ((tau - cutoff).floor().max(0.0)) as usize;
                let hi = ((tau + cutoff).ceil().min(t_max)) as usize;
                for t in lo..=hi {
                    data[base + t] += e.amplitude * ricker_at(spec.f_peak, (t as f64 - tau) * spec.dt);
                }
            }
            if spec.events.is_empty() {
                continue;
            }
            for t in 0..nt {
                let (nearest, dist) = times
                    .iter()
                    .enumerate()
                    .map(|(i, &tau)| (i, (t as f64 - tau).abs()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("events non-empty");
                let (pv, qv, kpv, knv) = geo.event_truth(&spec.events[nearest], x, y);
                let i = base + t;
                p[i] = pv;
                q[i] = qv;
                kp[i] = kpv;
                kn[i] = knv;
                support[i] = if dist <= half_period { 1.0 } else { 0.0 };
            }
        }
    }

    if let Some(snr) = spec.snr_db {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let noise = calibrated_noise(&data, snr, &mut rng)?;
        data.iter_mut().zip(noise).for_each(|(d, n)| *d += n);
    }

    let wrap = |values: Vec<f64>, label: &str| -> Result<SeismicData> {
        if spec.is_volume() {
            Ok(SeismicData::Volume(SeismicVolume::new(
                nt, nx, ny, spec.dt, spec.dx, spec.dy, values,
            )?))
        } else {
            let grid = Grid2::from_fn(nt, nx, |t, x| values[t + nt * x])?;
            Ok(SeismicData::Section(SeismicSection::new(
                grid, spec.dt, spec.dx, label,
            )?))
        }
    };

    let truth = GroundTruth {
        dip_p: wrap(p, "true inline dip")?,
        dip_q: spec.is_volume().then(|| wrap(q, "true crossline dip")).transpose()?,
        k_pos: spec.is_volume().then(|| wrap(kp, "true k_pos")).transpose()?,
        k_neg: spec.is_volume().then(|| wrap(kn, "true k_neg")).transpose()?,
        support: wrap(support, "event support")?,
    };
    Ok((wrap(data, "synthetic")?, truth))
}

/// SNR in dB, or `Clean` when there is no noise at all.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Snr {
    Clean,
    Db(f64),
}

impl std::fmt::Display for Snr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Snr::Clean => f.write_str("clean"),
            Snr::Db(v) => write!(f, "{v:.3} dB"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeNoiseReport {
    pub snr_trace_db: Snr,
    pub snr_derivative_db: Snr,
    pub clean: Vec<f64>,
    pub noisy: Vec<f64>,
    pub clean_derivative: Vec<f64>,
    pub noisy_derivative: Vec<f64>,
}

/// `(x[n+1] - x[n-1]) / 2` inside, one-sided differences at the ends.
pub fn central_difference(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| match i {
            0 => x[1] - x[0],
            _ if i == n - 1 => x[n - 1] - x[n - 2],
            _ => (x[i + 1] - x[i - 1]) / 2.0,
        })
        .collect()
}

/// Shows how differentiation lowers the SNR of a noisy trace: a sparse
/// reflectivity convolved with a 25 Hz Ricker at 4 ms, with and without
/// white noise, before and after a central difference.
pub fn derivative_noise_demo(
    trace_len: usize,
    snr_db_in: Option<f64>,
    seed: u64,
) -> Result<DerivativeNoiseReport> {
    const DT: f64 = 0.004;
    const F_PEAK: f64 = 25.0;
    if trace_len < 64 {
        return Err(Error::size(format!("demo trace needs >= 64 samples, got {trace_len}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wavelet = ricker(F_PEAK, DT, 16)?;
    let amp = Uniform::new(0.3, 1.0).expect("valid range");
    let mut reflectivity = vec![0.0; trace_len];
    for i in (8..trace_len - 8).step_by(12) {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        reflectivity[i] = sign * amp.sample(&mut rng);
    }
    let half = (wavelet.len() / 2) as isize;
    let clean: Vec<f64> = (0..trace_len as isize)
        .map(|t| {
            wavelet
                .iter()
                .enumerate()
                .map(|(k, w)| {
                    let src = t - (k as isize - half);
                    if (0..trace_len as isize).contains(&src) {
                        w * reflectivity[src as usize]
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect();

    let noise = match snr_db_in {
        Some(snr) => calibrated_noise(&clean, snr, &mut rng)?,
        None => vec![0.0; trace_len],
    };
    let noisy: Vec<f64> = clean.iter().zip(&noise).map(|(c, n)| c + n).collect();
    let clean_derivative = central_difference(&clean);
    let noisy_derivative = central_difference(&noisy);

    let measure = |signal: &[f64], observed: &[f64]| {
        let err: Vec<f64> = observed.iter().zip(signal).map(|(o, s)| o - s).collect();
        if err.iter().all(|&e| e == 0.0) {
            Snr::Clean
        } else {
            Snr::Db(snr_db(signal, &err))
        }
    };
    Ok(DerivativeNoiseReport {
        snr_trace_db: measure(&clean, &noisy),
        snr_derivative_db: measure(&clean_derivative, &noisy_derivative),
        clean,
        noisy,
        clean_derivative,
        noisy_derivative,
    })
}
