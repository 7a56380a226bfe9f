//! File formats: raw grids, SEG-Y input, PGM previews, synthetic model specs.

pub mod gridfile;
pub mod pgm;
pub mod segy;
pub mod synthspec;

pub use gridfile::{read_grid, write_grid, GridDocument, GridHeader};
pub use pgm::write_pgm;
pub use segy::{read_segy, SampleFormat, SegyOptions};
pub use synthspec::{parse_synth_spec, read_synth_spec};
