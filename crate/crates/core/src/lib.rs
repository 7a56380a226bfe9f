//! Multiscale fusion of seismic geometric attributes.
//!
//! A section (or a volume, per time slice) is decomposed into a Gaussian
//! pyramid, a geometric attribute is computed on every level, the per-level
//! maps are interpolated back to full resolution, and the stack is fused
//! cell by cell with a mean, weighted mean, median or rank operator.
//!
//! ```
//! use pyrafuse::{multiscale_attribute, AttributeKind, FusionSpec, PipelineConfig, PipelineInput};
//! use pyrafuse::synth::{make_synthetic, EventSpec, SynthSpec};
//!
//! let spec = SynthSpec {
//!     nt: 128,
//!     nx: 48,
//!     events: vec![EventSpec::plane(0.2, 1.0, 0.5, 0.0)],
//!     ..SynthSpec::default()
//! };
//! let (data, _truth) = make_synthetic(&spec).unwrap();
//! let section = data.as_section().unwrap();
//! let fused = multiscale_attribute(
//!     PipelineInput::Section(section),
//!     AttributeKind::PhaseDip,
//!     &PipelineConfig::default(),
//!     &FusionSpec::Median,
//! )
//! .unwrap();
//! assert_eq!(fused.dims(), (128, 48));
//! ```

pub mod analytic;
pub mod attributes;
pub mod cli;
pub mod error;
pub mod fusion;
pub mod grid;
pub mod io;
pub mod pyramid;
pub mod synth;

pub use attributes::{
    attribute_stack, curvature, dip_angle, phase_dip, volume_attribute_stack, AttributeParams,
    CurvaturePair, DipField, DipGeometry,
};
pub use error::{Error, Result};
pub use fusion::{
    default_weights, fuse, multiscale_attribute, AttributeStack, FusionSpec, PipelineConfig,
    PipelineInput,
};
pub use grid::{
    grid_section_crossline, grid_section_inline, grid_slice_time, AttributeKind, AttributeMap,
    Grid2, Scale, SeismicData, SeismicSection, SeismicVolume, Units,
};
pub use pyramid::{build_pyramid, expand_to, make_kernel, reduce, GaussianKernel, Pyramid};
