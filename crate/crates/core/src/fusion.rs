//! Scale-space fusion: every output cell combines the K values the stack
//! holds for that cell, one from each pyramid level.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::attributes::{attribute_stack, volume_attribute_stack, AttributeParams};
use crate::error::{Error, Result, StageContext};
use crate::grid::{AttributeKind, AttributeMap, Grid2, Scale, SeismicSection, SeismicVolume};
use crate::pyramid::{build_pyramid, make_kernel, DEFAULT_RADIUS, DEFAULT_SCALES, DEFAULT_SIGMA};

/// K scale-aligned attribute maps at base resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeStack {
    maps: Vec<AttributeMap>,
}

impl AttributeStack {
    pub fn new(maps: Vec<AttributeMap>) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| Error::param("attribute stack needs at least one map"))?;
        for m in &maps[1..] {
            first.grid.require_same_dims(&m.grid)?;
            if m.kind != first.kind {
                return Err(Error::Shape(format!(
                    "stack mixes {} and {} maps",
                    first.kind.tag(),
                    m.kind.tag()
                )));
            }
        }
        Ok(AttributeStack { maps })
    }

    pub fn maps(&self) -> &[AttributeMap] {
        &self.maps
    }

    pub fn into_maps(self) -> Vec<AttributeMap> {
        self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn scales(&self) -> Vec<Scale> {
        self.maps.iter().map(|m| m.scale).collect()
    }

    pub fn kind(&self) -> AttributeKind {
        self.maps[0].kind
    }

    pub fn dims(&self) -> (usize, usize) {
        self.maps[0].dims()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FusionSpec {
    Mean,
    /// Non-negative per-scale weights; normalized internally.
    WeightedMean(Vec<f64>),
    Median,
    /// `r`-th smallest value (0-based).
    Rank(usize),
}

impl FusionSpec {
    pub fn tag(&self) -> &'static str {
        match self {
            FusionSpec::Mean => "mean",
            FusionSpec::WeightedMean(_) => "wmean",
            FusionSpec::Median => "median",
            FusionSpec::Rank(_) => "rank",
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            FusionSpec::WeightedMean(w) => {
                if w.len() != k {
                    return Err(Error::param(format!("{} weights given for {k} scales", w.len())));
                }
                if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::param("weights must be finite and >= 0"));
                }
                if w.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::param("weights must have a positive sum"));
                }
            }
            FusionSpec::Rank(r) if *r >= k => {
                return Err(Error::param(format!("rank {r} out of range for {k} scales")));
            }
            _ => {}
        }
        Ok(())
    }
}

/// `bias^-i` for `i = 0..k`, normalized to unit sum.
pub fn default_weights(k: usize, bias: f64) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::param("scale count must be >= 1"));
    }
    if !(bias.is_finite() && bias > 0.0) {
        return Err(Error::param(format!("weight bias must be > 0, got {bias}")));
    }
    let raw: Vec<f64> = (0..k).map(|i| bias.powi(-(i as i32))).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

fn mean_of(vals: &[f64]) -> f64 {
    let x0 = vals[0];
    let dev: f64 = vals.iter().map(|v| v - x0).sum();
    x0 + dev / vals.len() as f64
}

fn weighted_mean_of(vals: &[f64], weights: &[f64]) -> Option<f64> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let x0 = vals[0];
    let dev: f64 = vals
        .iter()
        .zip(weights)
        .map(|(v, w)| (w / total) * (v - x0))
        .sum();
    Some(x0 + dev)
}

fn sort_values(vals: &mut [f64]) {
    vals.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
}

/// Middle value, or the mean of the two middle values for even counts.
pub fn median_of(vals: &mut [f64]) -> f64 {
    sort_values(vals);
    let n = vals.len();
    if n % 2 == 1 {
        vals[n / 2]
    } else {
        (vals[n / 2 - 1] + vals[n / 2]) * 0.5
    }
}

/// Fuses a stack cell by cell.
///
/// A map whose quality mask is below 0.5 at a cell does not take part in
/// mean, weighted-mean or median fusion there; if no map is valid the cell
/// is 0. Rank fusion always ranks all K values.
pub fn fuse(stack: &AttributeStack, spec: &FusionSpec) -> Result<AttributeMap> {
    let k = stack.len();
    spec.validate(k)?;
    let (rows, cols) = stack.dims();
    let maps = stack.maps();
    let weights: Vec<f64> = match spec {
        FusionSpec::WeightedMean(w) => w.clone(),
        _ => vec![1.0; k],
    };
    let masked = maps.iter().any(|m| m.quality.is_some());
    let valid = |i: usize, idx: usize| {
        maps[i]
            .quality
            .as_ref()
            .is_none_or(|q| q.as_slice()[idx] >= 0.5)
    };

    let mut data = vec![0.0; rows * cols];
    let mut quality = vec![1.0; rows * cols];
    data.par_chunks_mut(cols)
        .zip(quality.par_chunks_mut(cols))
        .enumerate()
        .for_each(|(r, (out, qual))| {
            let mut vals = Vec::with_capacity(k);
            let mut wts = Vec::with_capacity(k);
            for c in 0..cols {
                let idx = r * cols + c;
                vals.clear();
                wts.clear();
                for (i, m) in maps.iter().enumerate() {
                    if valid(i, idx) {
                        vals.push(m.grid.as_slice()[idx]);
                        wts.push(weights[i]);
                    }
                }
                if vals.is_empty() {
                    qual[c] = 0.0;
                }
                let fused = match spec {
                    FusionSpec::Rank(rank) => {
                        vals.clear();
                        vals.extend(maps.iter().map(|m| m.grid.as_slice()[idx]));
                        sort_values(&mut vals);
                        Some(vals[*rank])
                    }
                    _ if vals.is_empty() => None,
                    FusionSpec::Mean => Some(mean_of(&vals)),
                    FusionSpec::WeightedMean(_) => weighted_mean_of(&vals, &wts),
                    FusionSpec::Median => Some(median_of(&mut vals)),
                };
                match fused {
                    Some(v) => out[c] = v,
                    None => {
                        out[c] = 0.0;
                        qual[c] = 0.0;
                    }
                }
            }
        });

    let mut map = AttributeMap::new(Grid2::new(rows, cols, data)?, stack.kind(), Scale::Fused);
    if masked {
        map = map.with_quality(Grid2::from_parts(rows, cols, quality))?;
    }
    for (key, value) in &maps[0].meta {
        map.meta.insert(key.clone(), value.clone());
    }
    map.meta.insert("scales".into(), k.to_string());
    map.meta.insert("fusion".into(), spec.tag().into());
    match spec {
        FusionSpec::WeightedMean(w) => {
            let list: Vec<String> = w.iter().map(|v| v.to_string()).collect();
            map.meta.insert("weights".into(), list.join(","));
        }
        FusionSpec::Rank(r) => {
            map.meta.insert("rank".into(), r.to_string());
        }
        _ => {}
    }
    Ok(map)
}

/// Scale count, kernel and attribute parameters for the full workflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineConfig {
    pub scales: usize,
    pub sigma: f64,
    pub radius: usize,
    pub params: AttributeParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            scales: DEFAULT_SCALES,
            sigma: DEFAULT_SIGMA,
            radius: DEFAULT_RADIUS,
            params: AttributeParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum PipelineInput<'a> {
    Section(&'a SeismicSection),
    /// Attribute evaluated on the time slice `t_index`.
    Volume {
        volume: &'a SeismicVolume,
        t_index: usize,
    },
}

/// Pyramid, per-scale attribute, expansion to base size, fusion.
pub fn multiscale_attribute(
    input: PipelineInput<'_>,
    kind: AttributeKind,
    config: &PipelineConfig,
    spec: &FusionSpec,
) -> Result<AttributeMap> {
    spec.validate(config.scales).stage("fusion spec")?;
    let kernel = make_kernel(config.sigma, config.radius).stage("kernel")?;
    let stack = match input {
        PipelineInput::Section(section) => {
            let pyr = build_pyramid(&section.grid, config.scales, &kernel).stage("pyramid")?;
            attribute_stack(&pyr, section.dt(), section.dx(), kind, &config.params)
                .stage("attribute")?
        }
        PipelineInput::Volume { volume, t_index } => volume_attribute_stack(
            volume,
            t_index,
            kind,
            config.scales,
            &kernel,
            &config.params,
        )
        .stage("attribute")?,
    };
    let mut fused = fuse(&stack, spec).stage("fusion")?;
    fused.meta.insert("sigma".into(), config.sigma.to_string());
    fused.meta.insert("radius".into(), config.radius.to_string());
    Ok(fused)
}
