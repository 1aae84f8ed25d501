//! Sinogram denoising by graph total variation, and the reconstruction
//! machinery used to evaluate it.
//!
//! The pipeline is two steps: build a K-nearest-neighbour graph between the
//! overlapping patches of a noisy sinogram and denoise it with a graph-TV
//! proximal iteration ([`denoise`]), then reconstruct the image from the
//! denoised projections with FBP, ART (Kaczmarz) or SIRT (Cimmino)
//! ([`recon`]). The [`pipeline`] module runs both branches (raw and
//! denoised) side by side and tabulates reconstruction errors.

pub mod denoise;
pub mod error;
pub mod graph;
pub mod image;
pub mod io;
pub mod metrics;
pub mod noise;
pub mod phantoms;
pub mod pipeline;
pub mod projector;
pub mod recon;
pub mod sparse;

pub use denoise::{denoise, gamma_sweep, objective, DenoiseConfig, DenoiseTrace, ThresholdMode};
pub use error::{Error, Result};
pub use graph::{build_graph, extract_patches, PatchConfig, PatchGraph, SigmaRule};
pub use image::Image;
pub use metrics::{l2_error, min_error, profile, ErrorCurve, IntensityProfile};
pub use noise::{add_noise, NoiseSpec};
pub use phantoms::{generate_phantom, PhantomKind};
pub use projector::{
    back_project, build_projector, forward_project, Geometry, ProjectionOperator, Sinogram,
};
pub use sparse::CsrMatrix;
