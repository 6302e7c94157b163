//! Environmental image perturbations: rain, fog, snow, occlusion, contrast,
//! brightness and blur.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vision::image::Image;

/// Image area the density figures refer to; smaller frames get
/// proportionally fewer streaks and flakes.
pub const REFERENCE_AREA: f64 = 640.0 * 480.0;
pub const MAX_THICKNESS: f64 = 10.0;

pub const RAIN_MAX_STREAKS: f64 = 10_000.0;
pub const RAIN_STREAK_ALPHA: (f64, f64) = (0.1, 0.2);
pub const RAIN_STREAK_LENGTH: (usize, usize) = (10, 20);
pub const RAIN_STREAK_BLUR: (usize, f64) = (2, 45.0);
pub const RAIN_BACKGROUND_ALPHA: (f64, f64) = (0.65, 0.75);
pub const RAIN_BACKGROUND_SIGMA: (f64, f64) = (0.5, 1.5);

pub const FOG_SIGMA: (f64, f64) = (5.0, 7.0);
pub const FOG_ALPHA: (f64, f64) = (0.4, 0.9);

pub const SNOW_MAX_FLAKES: f64 = 800.0;
pub const SNOW_SIGMA: (f64, f64) = (0.5, 1.5);
pub const SNOW_BLUR: (usize, f64) = (5, 75.0);

pub const OCCLUSION_RADIUS: (f64, f64) = (5.0, 50.0);
pub const OCCLUSION_SIGMA: f64 = 7.0;
pub const MAX_BLOBS: u32 = 1_000;

pub const CONTRAST_GAIN: (f64, f64) = (1.2, 3.0);
pub const BRIGHTNESS_BIAS: (f64, f64) = (10.0, 100.0);

fn default_rain_angle() -> f64 {
    75.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EffectKind {
    Rain,
    Fog,
    Snow,
    Occlusion,
    Contrast,
    Brightness,
    Blur,
}

impl EffectKind {
    pub const ALL: [EffectKind; 7] = [
        EffectKind::Rain,
        EffectKind::Fog,
        EffectKind::Snow,
        EffectKind::Occlusion,
        EffectKind::Contrast,
        EffectKind::Brightness,
        EffectKind::Blur,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EffectKind::Rain => "Rain",
            EffectKind::Fog => "Fog",
            EffectKind::Snow => "Snow",
            EffectKind::Occlusion => "Occlusion",
            EffectKind::Contrast => "Contrast",
            EffectKind::Brightness => "Brightness",
            EffectKind::Blur => "Blur",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "filter", deny_unknown_fields)]
pub enum BlurKernel {
    /// Box filter, size 3..=6.
    Average { size: usize },
    /// Size 3, 5 or 7; sigma follows the usual size-derived default.
    Gaussian { size: usize },
    /// Aperture 3 or 5.
    Median { size: usize },
}

impl BlurKernel {
    pub const ALL: [BlurKernel; 9] = [
        BlurKernel::Average { size: 3 },
        BlurKernel::Average { size: 4 },
        BlurKernel::Average { size: 5 },
        BlurKernel::Average { size: 6 },
        BlurKernel::Gaussian { size: 3 },
        BlurKernel::Gaussian { size: 5 },
        BlurKernel::Gaussian { size: 7 },
        BlurKernel::Median { size: 3 },
        BlurKernel::Median { size: 5 },
    ];

    pub fn validate(&self) -> Result<()> {
        if Self::ALL.contains(self) {
            Ok(())
        } else {
            Err(Error::Config(format!("unsupported blur kernel {self:?}")))
        }
    }
}

/// Optional fields are drawn from their allowed range using the perturbation
/// seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum Effect {
    Rain {
        thickness: f64,
        #[serde(default = "default_rain_angle")]
        angle_deg: f64,
    },
    Fog { thickness: f64 },
    Snow {
        #[serde(default)]
        thickness: Option<f64>,
    },
    Occlusion { blob_count: u32 },
    Contrast {
        #[serde(default)]
        gain: Option<f64>,
    },
    Brightness {
        #[serde(default)]
        bias: Option<f64>,
    },
    Blur {
        #[serde(default)]
        kernel: Option<BlurKernel>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EffectParams {
    pub effect: Effect,
}

impl EffectParams {
    pub fn new(effect: Effect) -> Self {
        Self { effect }
    }

    pub fn kind(&self) -> EffectKind {
        match self.effect {
            Effect::Rain { .. } => EffectKind::Rain,
            Effect::Fog { .. } => EffectKind::Fog,
            Effect::Snow { .. } => EffectKind::Snow,
            Effect::Occlusion { .. } => EffectKind::Occlusion,
            Effect::Contrast { .. } => EffectKind::Contrast,
            Effect::Brightness { .. } => EffectKind::Brightness,
            Effect::Blur { .. } => EffectKind::Blur,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |name: &str, v: f64, (lo, hi): (f64, f64)| {
            if v.is_finite() && (lo..=hi).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} outside [{lo}, {hi}]")))
            }
        };
        match self.effect {
            Effect::Rain { thickness, angle_deg } => {
                in_range("thickness", thickness, (0.0, MAX_THICKNESS))?;
                in_range("angle_deg", angle_deg, (0.0, 180.0))
            }
            Effect::Fog { thickness } => in_range("thickness", thickness, (0.0, MAX_THICKNESS)),
            Effect::Snow { thickness } => thickness.map_or(Ok(()), |t| in_range("thickness", t, (0.0, MAX_THICKNESS))),
            Effect::Occlusion { blob_count } => {
                if blob_count <= MAX_BLOBS {
                    Ok(())
                } else {
                    Err(Error::Config(format!("blob_count {blob_count} above {MAX_BLOBS}")))
                }
            }
            Effect::Contrast { gain } => gain.map_or(Ok(()), |g| in_range("gain", g, CONTRAST_GAIN)),
            Effect::Brightness { bias } => bias.map_or(Ok(()), |b| in_range("bias", b, BRIGHTNESS_BIAS)),
            Effect::Blur { kernel } => kernel.map_or(Ok(()), |k| k.validate()),
        }
    }
}

/// Float working copy of an image.
#[derive(Debug, Clone)]
struct Plane {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

impl Plane {
    fn zeros(w: usize, h: usize) -> Self {
        Self { w, h, v: vec![0.0; w * h] }
    }

    fn of(img: &Image) -> Self {
        Self {
            w: img.width(),
            h: img.height(),
            v: img.to_f64(),
        }
    }

    fn at(&self, x: i64, y: i64) -> f64 {
        let x = x.clamp(0, self.w as i64 - 1) as usize;
        let y = y.clamp(0, self.h as i64 - 1) as usize;
        self.v[y * self.w + x]
    }

    fn into_image(self) -> Image {
        Image::from_f64(self.w, self.h, &self.v).expect("plane keeps its dimensions")
    }

    fn map(mut self, f: impl Fn(f64) -> f64) -> Self {
        self.v.iter_mut().for_each(|p| *p = f(*p));
        self
    }

    /// Separable correlation with a 1-D kernel centred at `anchor`.
    fn separable(&self, kernel: &[f64], anchor: usize) -> Self {
        let a = anchor as i64;
        let mut tmp = Plane::zeros(self.w, self.h);
        for y in 0..self.h {
            for x in 0..self.w {
                tmp.v[y * self.w + x] = kernel
                    .iter()
                    .enumerate()
                    .map(|(k, &wk)| wk * self.at(x as i64 + k as i64 - a, y as i64))
                    .sum();
            }
        }
        let mut out = Plane::zeros(self.w, self.h);
        for y in 0..self.h {
            for x in 0..self.w {
                out.v[y * self.w + x] = kernel
                    .iter()
                    .enumerate()
                    .map(|(k, &wk)| wk * tmp.at(x as i64, y as i64 + k as i64 - a))
                    .sum();
            }
        }
        out
    }

    fn gaussian(&self, sigma: f64) -> Self {
        let radius = (3.0 * sigma).ceil().max(1.0) as usize;
        self.separable(&gaussian_kernel(2 * radius + 1, sigma), radius)
    }

    fn box_filter(&self, size: usize) -> Self {
        self.separable(&vec![1.0 / size as f64; size], size / 2)
    }

    /// Average along a line of `len` samples at `angle_deg` from horizontal.
    fn motion_blur(&self, len: usize, angle_deg: f64) -> Self {
        let (s, c) = angle_deg.to_radians().sin_cos();
        let start = (len as i64 - 1) / 2;
        let taps: Vec<(i64, i64)> = (0..len as i64)
            .map(|i| {
                let t = (i - start) as f64;
                ((t * c).round() as i64, -(t * s).round() as i64)
            })
            .collect();
        let mut out = Plane::zeros(self.w, self.h);
        let n = taps.len() as f64;
        for y in 0..self.h as i64 {
            for x in 0..self.w as i64 {
                let sum: f64 = taps.iter().map(|&(dx, dy)| self.at(x + dx, y + dy)).sum();
                out.v[y as usize * self.w + x as usize] = sum / n;
            }
        }
        out
    }

    fn median(&self, size: usize) -> Self {
        let r = (size / 2) as i64;
        let mut out = Plane::zeros(self.w, self.h);
        let mut window = Vec::with_capacity(size * size);
        for y in 0..self.h as i64 {
            for x in 0..self.w as i64 {
                window.clear();
                for dy in -r..=r {
                    for dx in -r..=r {
                        window.push(self.at(x + dx, y + dy));
                    }
                }
                window.sort_by(f64::total_cmp);
                out.v[y as usize * self.w + x as usize] = window[window.len() / 2];
            }
        }
        out
    }
}

/// Normalised Gaussian taps.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size).map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Sigma implied by a Gaussian kernel size when none is given.
pub fn sigma_for_kernel(size: usize) -> f64 {
    0.3 * ((size as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    rng.random_range(lo..=hi)
}

fn scaled_count(max: f64, thickness: f64, w: usize, h: usize) -> usize {
    (max * thickness / MAX_THICKNESS * (w * h) as f64 / REFERENCE_AREA).round() as usize
}

fn fog(plane: Plane, thickness: f64, rng: &mut ChaCha8Rng) -> Plane {
    let sigma = draw(rng, FOG_SIGMA);
    let alpha = draw(rng, FOG_ALPHA);
    let mut noise = Plane::zeros(plane.w, plane.h);
    noise.v.iter_mut().for_each(|p| *p = rng.random_range(0.0..255.0));
    let haze = noise.gaussian(sigma);
    let keep = 1.0 - (1.0 - alpha) * thickness / MAX_THICKNESS;
    let mut out = plane;
    for (p, n) in out.v.iter_mut().zip(&haze.v) {
        *p = keep * *p + (1.0 - keep) * n;
    }
    out
}

fn rain(plane: Plane, thickness: f64, angle_deg: f64, rng: &mut ChaCha8Rng) -> Plane {
    let (w, h) = (plane.w, plane.h);
    let streak_alpha = draw(rng, RAIN_STREAK_ALPHA);
    let bg_alpha = draw(rng, RAIN_BACKGROUND_ALPHA);
    let bg_sigma = draw(rng, RAIN_BACKGROUND_SIGMA);
    let keep = 1.0 - (1.0 - bg_alpha) * thickness / MAX_THICKNESS;
    let background = plane.gaussian(bg_sigma).map(|p| p * keep);

    let mut streaks = Plane::zeros(w, h);
    let (s, c) = angle_deg.to_radians().sin_cos();
    for _ in 0..scaled_count(RAIN_MAX_STREAKS, thickness, w, h) {
        let x0 = rng.random_range(0.0..w as f64);
        let y0 = rng.random_range(0.0..h as f64);
        let len = rng.random_range(RAIN_STREAK_LENGTH.0..=RAIN_STREAK_LENGTH.1);
        for t in 0..len {
            let x = (x0 + t as f64 * c).floor() as i64;
            let y = (y0 - t as f64 * s).floor() as i64;
            if (0..w as i64).contains(&x) && (0..h as i64).contains(&y) {
                streaks.v[y as usize * w + x as usize] = 255.0;
            }
        }
    }
    let streaks = streaks.motion_blur(RAIN_STREAK_BLUR.0, RAIN_STREAK_BLUR.1);
    let mut out = background;
    for (p, st) in out.v.iter_mut().zip(&streaks.v) {
        *p += streak_alpha * st;
    }
    out
}

fn snow(plane: Plane, thickness: f64, rng: &mut ChaCha8Rng) -> Plane {
    let hazy = fog(plane, thickness, rng);
    let (w, h) = (hazy.w, hazy.h);
    let sigma = draw(rng, SNOW_SIGMA);
    let mut flakes = Plane::zeros(w, h);
    for _ in 0..scaled_count(SNOW_MAX_FLAKES, thickness, w, h) {
        let x = rng.random_range(0..w.saturating_sub(1).max(1));
        let y = rng.random_range(0..h.saturating_sub(1).max(1));
        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            if x + dx < w && y + dy < h {
                flakes.v[(y + dy) * w + x + dx] = 255.0;
            }
        }
    }
    let flakes = flakes.gaussian(sigma).motion_blur(SNOW_BLUR.0, SNOW_BLUR.1);
    let mut out = hazy;
    for (p, f) in out.v.iter_mut().zip(&flakes.v) {
        *p += f;
    }
    out
}

fn occlusion(plane: Plane, blob_count: u32, rng: &mut ChaCha8Rng) -> Plane {
    let (w, h) = (plane.w, plane.h);
    let mut mask = Plane::zeros(w, h);
    for _ in 0..blob_count {
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        let r = draw(rng, OCCLUSION_RADIUS);
        let (y0, y1) = (((cy - r).floor().max(0.0)) as usize, ((cy + r).ceil() as usize).min(h - 1));
        let (x0, x1) = (((cx - r).floor().max(0.0)) as usize, ((cx + r).ceil() as usize).min(w - 1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                if dx * dx + dy * dy <= r * r {
                    mask.v[y * w + x] = 1.0;
                }
            }
        }
    }
    let mask = mask.gaussian(OCCLUSION_SIGMA);
    let mut out = plane;
    for (p, m) in out.v.iter_mut().zip(&mask.v) {
        *p *= 1.0 - m.clamp(0.0, 1.0);
    }
    out
}

fn blur(plane: Plane, kernel: BlurKernel) -> Plane {
    match kernel {
        BlurKernel::Average { size } => plane.box_filter(size),
        BlurKernel::Gaussian { size } => plane.separable(&gaussian_kernel(size, sigma_for_kernel(size)), size / 2),
        BlurKernel::Median { size } => plane.median(size),
    }
}

/// Applies one effect. Output depends only on `(img, params, seed)`.
pub fn perturb(img: &Image, params: &EffectParams, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let effect = match params.effect {
        Effect::Snow { thickness: None } => Effect::Snow {
            thickness: Some(draw(&mut rng, (0.0, MAX_THICKNESS))),
        },
        e => e,
    };
    let plane = Plane::of(img);
    let out = match effect {
        Effect::Rain { thickness, .. } | Effect::Fog { thickness } | Effect::Snow { thickness: Some(thickness) }
            if thickness <= 0.0 =>
        {
            return img.clone();
        }
        Effect::Rain { thickness, angle_deg } => rain(plane, thickness, angle_deg, &mut rng),
        Effect::Fog { thickness } => fog(plane, thickness, &mut rng),
        Effect::Snow { thickness } => snow(plane, thickness.unwrap_or(MAX_THICKNESS), &mut rng),
        Effect::Occlusion { blob_count } => occlusion(plane, blob_count, &mut rng),
        Effect::Contrast { gain } => {
            let g = gain.unwrap_or_else(|| draw(&mut rng, CONTRAST_GAIN));
            plane.map(|p| g * p)
        }
        Effect::Brightness { bias } => {
            let b = bias.unwrap_or_else(|| draw(&mut rng, BRIGHTNESS_BIAS));
            plane.map(|p| p + b)
        }
        Effect::Blur { kernel } => {
            let k = kernel.unwrap_or_else(|| BlurKernel::ALL[rng.random_range(0..BlurKernel::ALL.len())]);
            blur(plane, k)
        }
    };
    out.into_image()
}
