//! Raw luminance ingestion, deterministic synthetic test video and MSE/PSNR
//! quality metrics.
//!
//! Raw files are headerless 8-bit planar Y: `width * height` bytes per frame,
//! frames concatenated. Dimensions are supplied out of band.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;

/// Peak luminance value for 8-bit video.
pub const PEAK: f64 = 255.0;

/// A grayscale frame with one real luminance sample per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(Error::input(format!(
                "frame of {width}x{height} needs {} samples, got {}",
                width * height,
                samples.len()
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::input("frame contains a non-finite sample"));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Mean squared error against `other`, averaged over all pixels.
    pub fn mse(&self, other: &Frame) -> Result<f64> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::input(format!(
                "frame dimensions differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let sum: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sum / self.samples.len() as f64)
    }

    fn clamped(&self) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            samples: self.samples.iter().map(|s| s.clamp(0.0, PEAK)).collect(),
        }
    }
}

/// A group of pictures: consecutive frames that share dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Gop {
    frames: Vec<Frame>,
}

impl Gop {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::input("a GOP needs at least one frame"))?;
        let (w, h) = (first.width, first.height);
        if frames.iter().any(|f| f.width != w || f.height != h) {
            return Err(Error::input("all frames of a GOP must share dimensions"));
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn gop_size(&self) -> usize {
        self.frames.len()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    /// Copy with every sample clamped to `[0, 255]`.
    pub fn clamped(&self) -> Gop {
        Gop {
            frames: self.frames.iter().map(Frame::clamped).collect(),
        }
    }

    /// Per-frame MSE against `other`.
    pub fn frame_mses(&self, other: &Gop) -> Result<Vec<f64>> {
        if self.gop_size() != other.gop_size() {
            return Err(Error::input(format!(
                "GOP sizes differ: {} vs {}",
                self.gop_size(),
                other.gop_size()
            )));
        }
        self.frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| a.mse(b))
            .collect()
    }

    /// MSE pooled over every pixel of the GOP.
    pub fn mse(&self, other: &Gop) -> Result<f64> {
        let per_frame = self.frame_mses(other)?;
        Ok(per_frame.iter().sum::<f64>() / per_frame.len() as f64)
    }
}

/// Parses headerless 8-bit planar luminance into GOPs.
///
/// A trailing partial GOP is discarded.
pub fn parse_raw_video(
    bytes: &[u8],
    width: usize,
    height: usize,
    gop_size: usize,
) -> Result<Vec<Gop>> {
    if width == 0 || height == 0 {
        return Err(Error::input("frame dimensions must be nonzero"));
    }
    if gop_size == 0 {
        return Err(Error::input("gop_size must be at least 1"));
    }
    let frame_bytes = width * height;
    if bytes.len() % frame_bytes != 0 {
        return Err(Error::input(format!(
            "raw video of {} bytes is not a multiple of the frame size ({frame_bytes} bytes for {width}x{height})",
            bytes.len()
        )));
    }
    let frames: Vec<Frame> = bytes
        .chunks_exact(frame_bytes)
        .map(|plane| Frame {
            width,
            height,
            samples: plane.iter().map(|&b| f64::from(b)).collect(),
        })
        .collect();
    group_frames(frames, gop_size)
}

/// Reads a raw luminance file and groups it into GOPs.
pub fn load_raw_video(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    gop_size: usize,
) -> Result<Vec<Gop>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_raw_video(&bytes, width, height, gop_size)
}

/// Writes GOPs back as 8-bit planar luminance (rounded and clamped).
pub fn write_raw_video(path: impl AsRef<Path>, gops: &[Gop]) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = gops
        .iter()
        .flat_map(|g| g.frames.iter())
        .flat_map(|f| f.samples.iter())
        .map(|s| s.round().clamp(0.0, PEAK) as u8)
        .collect();
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn group_frames(frames: Vec<Frame>, gop_size: usize) -> Result<Vec<Gop>> {
    let whole = frames.len() / gop_size * gop_size;
    let mut frames = frames;
    frames.truncate(whole);
    let mut gops = Vec::with_capacity(whole / gop_size);
    let mut iter = frames.into_iter();
    for _ in 0..whole / gop_size {
        gops.push(Gop::new(iter.by_ref().take(gop_size).collect())?);
    }
    Ok(gops)
}

/// Content generators for synthetic test video.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticKind {
    /// Every sample equals the given level.
    Constant(f64),
    /// A smooth diagonal ramp drifting over time.
    Gradient,
    /// Textured objects moving over a smooth drifting background, with mild
    /// sensor noise. Energy compaction under the DCT resembles natural video.
    MovingPattern,
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient" => Ok(SyntheticKind::Gradient),
            "moving-pattern" => Ok(SyntheticKind::MovingPattern),
            "constant" => Ok(SyntheticKind::Constant(128.0)),
            other => match other.strip_prefix("constant:") {
                Some(level) => level
                    .parse::<f64>()
                    .ok()
                    .filter(|v| (0.0..=PEAK).contains(v))
                    .map(SyntheticKind::Constant)
                    .ok_or_else(|| Error::input(format!("bad constant level `{level}`"))),
                None => Err(Error::input(format!(
                    "unknown synthetic kind `{other}` (expected constant[:level], gradient, moving-pattern)"
                ))),
            },
        }
    }
}

/// One synthetic GOP of `gop_size` frames.
pub fn synthetic_gop(
    kind: SyntheticKind,
    width: usize,
    height: usize,
    gop_size: usize,
    seed: u64,
) -> Result<Gop> {
    if gop_size == 0 {
        return Err(Error::input("gop_size must be at least 1"));
    }
    Gop::new(synthetic_frames(kind, width, height, gop_size, seed)?)
}

/// `frames` consecutive synthetic frames, grouped into GOPs of `gop_size`.
pub fn synthetic_video(
    kind: SyntheticKind,
    width: usize,
    height: usize,
    frames: usize,
    gop_size: usize,
    seed: u64,
) -> Result<Vec<Gop>> {
    if gop_size == 0 {
        return Err(Error::input("gop_size must be at least 1"));
    }
    group_frames(synthetic_frames(kind, width, height, frames, seed)?, gop_size)
}

fn synthetic_frames(
    kind: SyntheticKind,
    width: usize,
    height: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Frame>> {
    if width == 0 || height == 0 {
        return Err(Error::input("synthetic video dimensions must be nonzero"));
    }
    let frames = match kind {
        SyntheticKind::Constant(level) => (0..count)
            .map(|_| Frame::filled(width, height, level.clamp(0.0, PEAK)))
            .collect(),
        SyntheticKind::Gradient => gradient_frames(width, height, count, seed),
        SyntheticKind::MovingPattern => MovingPattern::new(width, height, seed).render(count),
    };
    Ok(frames)
}

fn gradient_frames(width: usize, height: usize, count: usize, seed: u64) -> Vec<Frame> {
    let mut rng = rng::stream(seed, &[0x6772_6164]);
    let angle = rng.random_range(0.0..PI / 2.0);
    let drift = rng.random_range(0.5..3.0);
    let (ca, sa) = (angle.cos(), angle.sin());
    let span = width as f64 * ca + height as f64 * sa;
    (0..count)
        .map(|t| {
            let samples = (0..height)
                .flat_map(|y| (0..width).map(move |x| (x, y)))
                .map(|(x, y)| {
                    let pos = x as f64 * ca + y as f64 * sa + drift * t as f64;
                    (32.0 + 192.0 * (pos / span)).clamp(0.0, PEAK)
                })
                .collect();
            Frame {
                width,
                height,
                samples,
            }
        })
        .collect()
}

struct Grating {
    kx: f64,
    ky: f64,
    amplitude: f64,
    phase: f64,
    speed: f64,
}

struct Blob {
    cx: f64,
    cy: f64,
    vx: f64,
    vy: f64,
    radius: f64,
    offset: f64,
    stripe_k: f64,
    stripe_amp: f64,
}

struct MovingPattern {
    width: usize,
    height: usize,
    seed: u64,
    gratings: Vec<Grating>,
    blobs: Vec<Blob>,
}

impl MovingPattern {
    fn new(width: usize, height: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, &[0x6d6f_7665]);
        let gratings = (0..3)
            .map(|_| {
                let period = rng.random_range(40.0..200.0);
                let dir: f64 = rng.random_range(0.0..2.0 * PI);
                Grating {
                    kx: 2.0 * PI / period * dir.cos(),
                    ky: 2.0 * PI / period * dir.sin(),
                    amplitude: rng.random_range(12.0..30.0),
                    phase: rng.random_range(0.0..2.0 * PI),
                    speed: rng.random_range(-0.3..0.3),
                }
            })
            .collect();
        let scale = width.min(height) as f64;
        let blobs = (0..4)
            .map(|_| Blob {
                cx: rng.random_range(0.0..width as f64),
                cy: rng.random_range(0.0..height as f64),
                vx: rng.random_range(-4.0..4.0),
                vy: rng.random_range(-3.0..3.0),
                radius: rng.random_range(0.07..0.2) * scale,
                offset: rng.random_range(-60.0..60.0),
                stripe_k: 2.0 * PI / rng.random_range(5.0..14.0),
                stripe_amp: rng.random_range(6.0..18.0),
            })
            .collect();
        Self {
            width,
            height,
            seed,
            gratings,
            blobs,
        }
    }

    fn render(&self, count: usize) -> Vec<Frame> {
        let mut noise_rng = rng::stream(self.seed, &[0x6e6f_6973]);
        let noise = Normal::new(0.0, 1.5).expect("valid normal");
        (0..count)
            .map(|t| {
                let t = t as f64;
                let mut samples = Vec::with_capacity(self.width * self.height);
                for y in 0..self.height {
                    for x in 0..self.width {
                        let (xf, yf) = (x as f64, y as f64);
                        let mut v = 110.0;
                        for g in &self.gratings {
                            v += g.amplitude * (g.kx * xf + g.ky * yf + g.phase + g.speed * t).sin();
                        }
                        for b in &self.blobs {
                            let dx = xf - (b.cx + b.vx * t);
                            let dy = yf - (b.cy + b.vy * t);
                            let r = (dx * dx + dy * dy).sqrt();
                            if r < b.radius {
                                v += b.offset + b.stripe_amp * (b.stripe_k * (dx + 0.5 * dy)).sin();
                            }
                        }
                        v += noise.sample(&mut noise_rng);
                        samples.push(v.clamp(0.0, PEAK));
                    }
                }
                Frame {
                    width: self.width,
                    height: self.height,
                    samples,
                }
            })
            .collect()
    }
}

/// PSNR in dB for a given MSE; `+inf` when the MSE is zero.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

/// Mean of per-frame PSNRs between two GOPs.
pub fn psnr(reference: &Gop, reconstructed: &Gop) -> Result<f64> {
    if reference.width() != reconstructed.width() || reference.height() != reconstructed.height() {
        return Err(Error::input(format!(
            "GOP dimensions differ: {}x{} vs {}x{}",
            reference.width(),
            reference.height(),
            reconstructed.width(),
            reconstructed.height()
        )));
    }
    let mses = reference.frame_mses(reconstructed)?;
    Ok(mean_psnr(&mses))
}

/// Mean of the PSNRs of a set of per-frame MSEs.
pub fn mean_psnr(frame_mses: &[f64]) -> f64 {
    frame_mses.iter().map(|&m| psnr_from_mse(m)).sum::<f64>() / frame_mses.len() as f64
}
