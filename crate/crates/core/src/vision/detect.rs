use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensors::LaneMeasurement;
use crate::vision::dbscan::dbscan;
use crate::vision::image::Image;
use crate::vision::render::RenderParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorParams {
    /// Edge threshold on the horizontal Sobel response.
    pub sobel_threshold: i32,
    pub eps: f64,
    pub min_pts: usize,
    /// Clusters spanning fewer rows than this fraction of the image height
    /// are not lane markers.
    pub min_row_extent: f64,
    /// Largest RMS distance, in pixels, of a marker cluster from its fitted
    /// straight line.
    pub max_line_residual: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            sobel_threshold: 60,
            eps: 6.0,
            min_pts: 12,
            min_row_extent: 0.5,
            max_line_residual: 6.0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if self.sobel_threshold < 0 || !(self.eps > 0.0) || self.min_pts == 0 {
            return Err(Error::Config("detector thresholds must be positive".into()));
        }
        if !(self.max_line_residual > 0.0) {
            return Err(Error::Config("max_line_residual must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.min_row_extent) {
            return Err(Error::Config("min_row_extent must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum DetectFailure {
    #[error("no lane marker left of the midline")]
    NoLeft,
    #[error("no lane marker right of the midline")]
    NoRight,
}

/// 3x3 horizontal-derivative Sobel response with replicated borders.
pub fn sobel_x(img: &Image) -> Vec<i32> {
    let (w, h) = (img.width(), img.height());
    let px = img.pixels();
    let mut out = vec![0i32; w * h];
    let mut col = vec![0i32; w];
    for y in 0..h {
        let (up, down) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for (x, c) in col.iter_mut().enumerate() {
            *c = i32::from(px[up * w + x]) + 2 * i32::from(px[y * w + x]) + i32::from(px[down * w + x]);
        }
        let row = &mut out[y * w..(y + 1) * w];
        for (x, g) in row.iter_mut().enumerate() {
            *g = col[(x + 1).min(w - 1)] - col[x.saturating_sub(1)];
        }
    }
    out
}

/// Edge pixel coordinates `[x, y]` in row-major order.
pub fn edge_points(img: &Image, threshold: i32) -> Vec<[f64; 2]> {
    let w = img.width();
    sobel_x(img)
        .iter()
        .enumerate()
        .filter(|(_, g)| g.abs() > threshold)
        .map(|(i, _)| [(i % w) as f64, (i / w) as f64])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster {
    pub centroid_col: f64,
    pub size: usize,
    pub row_extent: usize,
    /// RMS column residual of the least-squares line `col = a + b * row`.
    pub line_residual: f64,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    x: f64,
    y: f64,
    xx: f64,
    xy: f64,
    yy: f64,
}

impl Moments {
    fn add(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        self.x += x;
        self.y += y;
        self.xx += x * x;
        self.xy += x * y;
        self.yy += y * y;
    }

    fn line_residual(&self) -> f64 {
        let sxx = self.xx - self.x * self.x / self.n;
        let sxy = self.xy - self.x * self.y / self.n;
        let syy = self.yy - self.y * self.y / self.n;
        let rss = if syy > 0.0 { sxx - sxy * sxy / syy } else { sxx };
        (rss.max(0.0) / self.n).sqrt()
    }
}

pub fn edge_clusters(img: &Image, p: &DetectorParams) -> Vec<Cluster> {
    let points = edge_points(img, p.sobel_threshold);
    let labels = dbscan(&points, p.eps, p.min_pts);
    let n = labels.iter().flatten().max().map_or(0, |&m| m + 1);
    let mut moments = vec![Moments::default(); n];
    let mut rows = vec![(usize::MAX, 0usize); n];
    for (pt, label) in points.iter().zip(&labels) {
        if let Some(c) = *label {
            moments[c].add(pt[0], pt[1]);
            let y = pt[1] as usize;
            rows[c] = (rows[c].0.min(y), rows[c].1.max(y));
        }
    }
    (0..n)
        .map(|c| Cluster {
            centroid_col: moments[c].x / moments[c].n,
            size: moments[c].n as usize,
            row_extent: rows[c].1 - rows[c].0 + 1,
            line_residual: moments[c].line_residual(),
        })
        .collect()
}

/// Finds the markers immediately left and right of the image midline and
/// returns their lateral positions in meters.
pub fn detect_lanes(
    img: &Image,
    render: &RenderParams,
    p: &DetectorParams,
) -> std::result::Result<LaneMeasurement, DetectFailure> {
    let mid = img.width() as f64 / 2.0;
    let min_rows = p.min_row_extent * img.height() as f64;
    let mut left: Option<f64> = None;
    let mut right: Option<f64> = None;
    for c in edge_clusters(img, p) {
        if (c.row_extent as f64) < min_rows || c.line_residual > p.max_line_residual {
            continue;
        }
        let x = c.centroid_col;
        if x + 0.5 < mid {
            left = Some(left.map_or(x, |l| l.max(x)));
        } else {
            right = Some(right.map_or(x, |r| r.min(x)));
        }
    }
    let px_per_m = render.px_per_m;
    let to_m = |col: f64| (col + 0.5 - mid) / px_per_m;
    match (left, right) {
        (Some(l), Some(r)) => Ok(LaneMeasurement {
            left_x: to_m(l),
            right_x: to_m(r),
        }),
        (None, _) => Err(DetectFailure::NoLeft),
        (_, None) => Err(DetectFailure::NoRight),
    }
}
