//! Synthetic road frames, environmental perturbations and the Sobel plus
//! DBSCAN lane-marker detector.

pub mod dbscan;
pub mod detect;
pub mod effects;
pub mod image;
pub mod render;

pub use dbscan::dbscan;
pub use detect::{detect_lanes, sobel_x, DetectFailure, DetectorParams};
pub use effects::{perturb, BlurKernel, Effect, EffectKind, EffectParams};
pub use image::{shear_translate, shift_columns, translate_image, Image};
pub use render::{render_base, render_scene, row_shifts, RenderParams};
