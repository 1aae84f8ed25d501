//! Image reconstruction from projections.

mod fbp;
mod iterative;

pub use fbp::{fbp, FbpConfig, Filter, Interpolation};
pub use iterative::{art, cimmino_spectral_radius, sirt, ArtConfig, RowOrder, SirtConfig, Tracker};
