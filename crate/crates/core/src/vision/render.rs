use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vision::image::{shear_translate, Image};

/// Synthetic top-down road render settings. The bottom row sits at the
/// camera; rows above map linearly up to twice the look-ahead distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderParams {
    pub width: usize,
    pub height: usize,
    pub road_intensity: u8,
    pub marker_intensity: u8,
    pub marker_width_px: usize,
    pub px_per_m: f64,
    pub look_ahead: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            road_intensity: 40,
            marker_intensity: 220,
            marker_width_px: 8,
            px_per_m: 100.0,
            look_ahead: 30.0,
        }
    }
}

impl RenderParams {
    pub fn validate(&self) -> Result<()> {
        if self.width < 16 || self.height < 2 {
            return Err(Error::Config(format!("render size {}x{} too small", self.width, self.height)));
        }
        if !(self.px_per_m.is_finite() && self.px_per_m > 0.0) {
            return Err(Error::Config("px_per_m must be positive".into()));
        }
        if !(self.look_ahead.is_finite() && self.look_ahead > 0.0) {
            return Err(Error::Config("look_ahead must be positive".into()));
        }
        if self.marker_width_px == 0 {
            return Err(Error::Config("marker_width_px must be positive".into()));
        }
        Ok(())
    }

    /// Along-lane distance of a row, m.
    pub fn row_distance(&self, row: usize) -> f64 {
        let last = (self.height - 1) as f64;
        2.0 * self.look_ahead * (last - row as f64) / last
    }

    /// Continuous column coordinate of a lateral position, pixel edges at
    /// integers.
    pub fn meters_to_column(&self, x: f64) -> f64 {
        self.width as f64 / 2.0 + self.px_per_m * x
    }

    /// Lateral position of a (fractional) pixel index, measured at the pixel
    /// center.
    pub fn column_to_meters(&self, col: f64) -> f64 {
        (col + 0.5 - self.width as f64 / 2.0) / self.px_per_m
    }
}

/// Centered, straight-ahead render.
pub fn render_base(lane_half_width: f64, p: &RenderParams) -> Image {
    let mut row = vec![p.road_intensity; p.width];
    let half = p.marker_width_px as f64 / 2.0;
    for center in [-lane_half_width, lane_half_width] {
        let c = p.meters_to_column(center);
        for (x, px) in row.iter_mut().enumerate() {
            let mid = x as f64 + 0.5;
            if mid >= c - half && mid < c + half {
                *px = p.marker_intensity;
            }
        }
    }
    let pixels = row.iter().copied().cycle().take(p.width * p.height).collect();
    Image::from_pixels(p.width, p.height, pixels).expect("validated dimensions")
}

/// Per-row column shifts for a host at `lat_offset` (right positive) with
/// `heading` (left positive).
pub fn row_shifts(lat_offset: f64, heading: f64, p: &RenderParams) -> Vec<i64> {
    let s = heading.sin();
    (0..p.height)
        .map(|r| (p.px_per_m * (-lat_offset + p.row_distance(r) * s)).round() as i64)
        .collect()
}

pub fn render_scene(lane_half_width: f64, lat_offset: f64, heading: f64, p: &RenderParams) -> Image {
    shear_translate(&render_base(lane_half_width, p), &row_shifts(lat_offset, heading, p))
}
