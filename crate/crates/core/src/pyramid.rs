//! Gaussian kernel, pyramid reduction, and edge-aligned bilinear expansion.
//!
//! Reduction blurs with a sampled, unit-sum Gaussian over a square support
//! and keeps every second sample along both axes. Borders are handled by
//! symmetric mirroring (`-1 -> 0`, `n -> n-1`), and odd sizes round up so
//! that no input sample is dropped.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid2, SeismicSection};

pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_RADIUS: usize = 2;
pub const DEFAULT_SCALES: usize = 4;

/// Unnormalized 2D Gaussian density at lattice offset `(m, n)`.
pub fn gaussian_density(m: f64, n: f64, sigma: f64) -> f64 {
    (-(m * m + n * n) / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianKernel {
    sigma: f64,
    radius: usize,
    /// Row-major `(2r+1)^2` unit-sum weights.
    weights: Vec<f64>,
    /// Unit-sum 1D factor used by the separable passes.
    taps: Vec<f64>,
}

/// Samples the Gaussian on `[-radius, radius]^2` and rescales to unit sum.
pub fn make_kernel(sigma: f64, radius: usize) -> Result<GaussianKernel> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::param(format!("sigma must be > 0, got {sigma}")));
    }
    if radius == 0 {
        return Err(Error::param("kernel radius must be >= 1"));
    }
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r)
        .flat_map(|m| (-r..=r).map(move |n| gaussian_density(m as f64, n as f64, sigma)))
        .collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();

    let raw_1d: Vec<f64> = (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total_1d: f64 = raw_1d.iter().sum();
    let taps = raw_1d.iter().map(|w| w / total_1d).collect();

    Ok(GaussianKernel {
        sigma,
        radius,
        weights,
        taps,
    })
}

impl Default for GaussianKernel {
    fn default() -> Self {
        make_kernel(DEFAULT_SIGMA, DEFAULT_RADIUS).expect("default kernel parameters are valid")
    }
}

impl GaussianKernel {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Side length of the square support, `2r + 1`.
    pub fn support(&self) -> usize {
        2 * self.radius + 1
    }

    /// Normalized weight at offset `(k, l)`, both in `[-r, r]`.
    pub fn weight(&self, k: isize, l: isize) -> f64 {
        let r = self.radius as isize;
        assert!(k.abs() <= r && l.abs() <= r, "offset outside kernel support");
        self.weights[((k + r) as usize) * self.support() + (l + r) as usize]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
}

#[inline]
pub(crate) fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i - 1
    } else if i >= n {
        2 * n - i - 1
    } else {
        i
    };
    debug_assert!((0..n).contains(&j), "single reflection exceeded");
    j as usize
}

/// Blur + decimate one dyadic step. Output is `ceil(rows/2) x ceil(cols/2)`.
pub fn reduce(input: &Grid2, kernel: &GaussianKernel) -> Result<Grid2> {
    let support = kernel.support();
    let (rows, cols) = input.dims();
    if rows < support || cols < support {
        return Err(Error::size(format!(
            "cannot reduce {rows}x{cols} grid with a {support}x{support} kernel"
        )));
    }
    let out_rows = rows.div_ceil(2);
    let out_cols = cols.div_ceil(2);
    let taps = kernel.taps();
    let r = kernel.radius() as isize;
    let src = input.as_slice();

    // Accumulating deviations from the centre sample keeps constants exact.
    let mut horiz = vec![0.0; rows * out_cols];
    horiz
        .par_chunks_mut(out_cols)
        .enumerate()
        .for_each(|(row, out)| {
            let line = &src[row * cols..(row + 1) * cols];
            for (n, o) in out.iter_mut().enumerate() {
                let c = 2 * n as isize;
                let centre = line[c as usize];
                let mut acc = 0.0;
                for (tap, l) in taps.iter().zip(-r..=r) {
                    acc += tap * (line[mirror(c + l, cols)] - centre);
                }
                *o = centre + acc;
            }
        });

    let mut out = vec![0.0; out_rows * out_cols];
    out.par_chunks_mut(out_cols)
        .enumerate()
        .for_each(|(m, out_row)| {
            let c = 2 * m as isize;
            let centre = &horiz[c as usize * out_cols..(c as usize + 1) * out_cols];
            for (tap, k) in taps.iter().zip(-r..=r) {
                let rr = mirror(c + k, rows);
                let line = &horiz[rr * out_cols..(rr + 1) * out_cols];
                for ((o, &v), &v0) in out_row.iter_mut().zip(line).zip(centre) {
                    *o += tap * (v - v0);
                }
            }
            for (o, &v0) in out_row.iter_mut().zip(centre) {
                *o += v0;
            }
        });

    Ok(Grid2::from_parts(out_rows, out_cols, out))
}

/// Levels `f_0 .. f_{K-1}`, each half the size of the previous.
#[derive(Clone, Debug, PartialEq)]
pub struct Pyramid {
    levels: Vec<Grid2>,
    kernel: GaussianKernel,
}

impl Pyramid {
    pub fn levels(&self) -> &[Grid2] {
        &self.levels
    }

    pub fn scales(&self) -> usize {
        self.levels.len()
    }

    pub fn kernel(&self) -> &GaussianKernel {
        &self.kernel
    }

    pub fn base_dims(&self) -> (usize, usize) {
        self.levels[0].dims()
    }

    /// Wraps every level as a section; sampling intervals double per level.
    pub fn sections(&self, dt: f64, dx: f64, label: &str) -> Result<Vec<SeismicSection>> {
        self.levels
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let f = (1u64 << i) as f64;
                SeismicSection::new(g.clone(), dt * f, dx * f, format!("{label} scale {i}"))
            })
            .collect()
    }
}

/// Largest scale count for which every level still covers the kernel support.
pub fn max_scales(rows: usize, cols: usize, kernel: &GaussianKernel) -> usize {
    let support = kernel.support();
    let (mut r, mut c, mut k) = (rows, cols, 0);
    while r >= support && c >= support {
        k += 1;
        r = r.div_ceil(2);
        c = c.div_ceil(2);
    }
    k
}

pub fn build_pyramid(section: &Grid2, scales: usize, kernel: &GaussianKernel) -> Result<Pyramid> {
    if scales == 0 {
        return Err(Error::param("scale count must be >= 1"));
    }
    let (rows, cols) = section.dims();
    let max = max_scales(rows, cols, kernel);
    if scales > max {
        return Err(Error::size(format!(
            "{scales} scales requested but a {rows}x{cols} input with a {s}x{s} kernel allows at most {max}",
            s = kernel.support()
        )));
    }
    let mut levels = Vec::with_capacity(scales);
    levels.push(section.clone());
    for i in 1..scales {
        let next = reduce(&levels[i - 1], kernel)?;
        levels.push(next);
    }
    Ok(Pyramid {
        levels,
        kernel: kernel.clone(),
    })
}

/// Source coordinate and interpolation fraction for an edge-aligned resize.
#[inline]
fn edge_aligned(i: usize, src_len: usize, dst_len: usize) -> (usize, usize, f64) {
    if src_len == 1 || dst_len == 1 {
        return (0, 0, 0.0);
    }
    let pos = (i * (src_len - 1)) as f64 / (dst_len - 1) as f64;
    let i0 = (pos.floor() as usize).min(src_len - 1);
    let i1 = (i0 + 1).min(src_len - 1);
    (i0, i1, pos - i0 as f64)
}

/// Bilinear upsampling with corner samples mapped onto corner samples.
pub fn expand_to(input: &Grid2, target_rows: usize, target_cols: usize) -> Result<Grid2> {
    let (rows, cols) = input.dims();
    if target_rows < rows || target_cols < cols {
        return Err(Error::size(format!(
            "cannot expand {rows}x{cols} to smaller {target_rows}x{target_cols}"
        )));
    }
    if (target_rows, target_cols) == (rows, cols) {
        return Ok(input.clone());
    }
    let col_pos: Vec<_> = (0..target_cols)
        .map(|j| edge_aligned(j, cols, target_cols))
        .collect();
    let mut out = vec![0.0; target_rows * target_cols];
    out.par_chunks_mut(target_cols)
        .enumerate()
        .for_each(|(i, out_row)| {
            let (r0, r1, fy) = edge_aligned(i, rows, target_rows);
            let top = input.row(r0);
            let bot = input.row(r1);
            for (o, &(c0, c1, fx)) in out_row.iter_mut().zip(&col_pos) {
                let a = top[c0] + fx * (top[c1] - top[c0]);
                let b = bot[c0] + fx * (bot[c1] - bot[c0]);
                *o = a + fy * (b - a);
            }
        });
    Ok(Grid2::from_parts(target_rows, target_cols, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation of the reduction sum with the 2D weights.
    fn naive_reduce(input: &Grid2, kernel: &GaussianKernel) -> Grid2 {
        let (rows, cols) = input.dims();
        let r = kernel.radius() as isize;
        Grid2::from_fn(rows.div_ceil(2), cols.div_ceil(2), |m, n| {
            let mut acc = 0.0;
            for k in -r..=r {
                for l in -r..=r {
                    let i = mirror(2 * m as isize + k, rows);
                    let j = mirror(2 * n as isize + l, cols);
                    acc += kernel.weight(k, l) * input.get(i, j);
                }
            }
            acc
        })
        .unwrap()
    }

    #[test]
    fn kernel_parameters_validated() {
        assert!(make_kernel(0.0, 2).is_err());
        assert!(make_kernel(-1.0, 2).is_err());
        assert!(make_kernel(f64::NAN, 2).is_err());
        assert!(make_kernel(1.0, 0).is_err());
    }

    #[test]
    fn unnormalized_centre_value() {
        assert!((gaussian_density(0.0, 0.0, 1.0) - 0.159155).abs() < 1e-6);
        let raw_sum: f64 = (-2..=2)
            .flat_map(|m| (-2..=2).map(move |n| gaussian_density(m as f64, n as f64, 1.0)))
            .sum();
        // the printed density only integrates to ~0.98 over 5x5
        assert!((raw_sum - 0.9818).abs() < 1e-3, "{raw_sum}");
    }

    #[test]
    fn kernel_unit_sum_symmetry_and_ratio() {
        for (sigma, radius) in [(1.0, 2), (0.7, 1), (2.5, 4)] {
            let k = make_kernel(sigma, radius).unwrap();
            let sum: f64 = k.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            let tsum: f64 = k.taps().iter().sum();
            assert!((tsum - 1.0).abs() < 1e-12);
            let r = radius as isize;
            for i in -r..=r {
                for j in -r..=r {
                    let w = k.weight(i, j);
                    assert!(w > 0.0);
                    assert_eq!(w, k.weight(-i, j));
                    assert_eq!(w, k.weight(i, -j));
                    assert_eq!(w, k.weight(j, i));
                }
            }
        }
        let k = make_kernel(1.0, 2).unwrap();
        assert!((k.weight(0, 0) / k.weight(1, 1) - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn reduce_preserves_constants_exactly() {
        let g = Grid2::filled(13, 9, 0.1).unwrap();
        let out = reduce(&g, &GaussianKernel::default()).unwrap();
        assert_eq!(out.dims(), (7, 5));
        assert!(out.as_slice().iter().all(|&v| v == 0.1));
    }

    #[test]
    fn reduce_rejects_small_input() {
        let g = Grid2::filled(4, 16, 1.0).unwrap();
        assert!(matches!(reduce(&g, &GaussianKernel::default()), Err(Error::Size(_))));
    }

    #[test]
    fn reduce_matches_direct_sum_on_ramp() {
        let g = Grid2::from_fn(6, 6, |r, c| (r + c) as f64).unwrap();
        let k = GaussianKernel::default();
        let fast = reduce(&g, &k).unwrap();
        let slow = naive_reduce(&g, &k);
        assert_eq!(fast.dims(), (3, 3));
        for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn pyramid_dims_follow_ceil_halving() {
        let k = GaussianKernel::default();
        let g = Grid2::filled(128, 128, 1.0).unwrap();
        let p = build_pyramid(&g, 4, &k).unwrap();
        let dims: Vec<_> = p.levels().iter().map(Grid2::dims).collect();
        assert_eq!(dims, vec![(128, 128), (64, 64), (32, 32), (16, 16)]);

        let g = Grid2::filled(37, 21, 1.0).unwrap();
        let p = build_pyramid(&g, 3, &k).unwrap();
        let dims: Vec<_> = p.levels().iter().map(Grid2::dims).collect();
        assert_eq!(dims, vec![(37, 21), (19, 11), (10, 6)]);
    }

    #[test]
    fn single_scale_pyramid_is_input() {
        let g = Grid2::from_fn(8, 8, |r, c| (r * c) as f64).unwrap();
        let p = build_pyramid(&g, 1, &GaussianKernel::default()).unwrap();
        assert_eq!(p.levels(), &[g]);
    }

    #[test]
    fn too_many_scales_reports_maximum() {
        let g = Grid2::filled(40, 40, 1.0).unwrap();
        let k = GaussianKernel::default();
        assert_eq!(max_scales(40, 40, &k), 4);
        let err = build_pyramid(&g, 5, &k).unwrap_err().to_string();
        assert!(err.contains("at most 4"), "{err}");
        assert!(build_pyramid(&g, 0, &k).is_err());
    }

    #[test]
    fn expand_identity_and_constant() {
        let g = Grid2::from_fn(5, 7, |r, c| (r as f64).sin() + c as f64 * 0.3).unwrap();
        assert_eq!(expand_to(&g, 5, 7).unwrap(), g);
        let c = Grid2::filled(3, 4, 0.7).unwrap();
        let e = expand_to(&c, 11, 29).unwrap();
        assert!(e.as_slice().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn expand_two_by_two() {
        let g = Grid2::new(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let e = expand_to(&g, 3, 3).unwrap();
        assert_eq!(
            e.as_slice(),
            &[0.0, 0.5, 1.0, 1.0, 1.5, 2.0, 2.0, 2.5, 3.0]
        );
    }

    #[test]
    fn expand_rejects_downscale() {
        let g = Grid2::filled(4, 4, 0.0).unwrap();
        assert!(expand_to(&g, 3, 8).is_err());
    }

    #[test]
    fn expand_of_reduced_constant_is_constant() {
        let g = Grid2::filled(33, 17, -2.3).unwrap();
        let k = GaussianKernel::default();
        let e = expand_to(&reduce(&g, &k).unwrap(), 33, 17).unwrap();
        assert!(e.as_slice().iter().all(|&v| v == -2.3));
    }
}
