//! Separable orthonormal 3D-DCT over a GOP and the equal-sized chunk grid
//! laid over the coefficient volume.
//!
//! The 1-D type-II/III transforms run on an `N`-point complex FFT using
//! Makhoul's even/odd reordering, so a CIF GOP transforms in a few
//! milliseconds.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::video_io::{Frame, Gop};

/// 3D-DCT coefficients, stored plane-major then row-major:
/// index `t * width * height + y * width + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVolume {
    width: usize,
    height: usize,
    depth: usize,
    coeffs: Vec<f64>,
}

impl CoeffVolume {
    pub fn new(width: usize, height: usize, depth: usize, coeffs: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || depth == 0 {
            return Err(Error::input("coefficient volume dimensions must be nonzero"));
        }
        if coeffs.len() != width * height * depth {
            return Err(Error::input(format!(
                "volume {width}x{height}x{depth} needs {} coefficients, got {}",
                width * height * depth,
                coeffs.len()
            )));
        }
        Ok(Self {
            width,
            height,
            depth,
            coeffs,
        })
    }

    pub fn zeros(width: usize, height: usize, depth: usize) -> Self {
        Self {
            width,
            height,
            depth,
            coeffs: vec![0.0; width * height * depth],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

/// Orthonormal 1-D DCT-II / DCT-III of a fixed length.
struct Dct1d {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    // e^{-i pi k / 2N}
    twiddles: Vec<Complex64>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Dct1d {
    fn new(n: usize, planner: &mut FftPlanner<f64>) -> Self {
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let twiddles = (0..n)
            .map(|k| Complex64::from_polar(1.0, -PI * k as f64 / (2.0 * n as f64)))
            .collect();
        Self {
            n,
            forward,
            inverse,
            twiddles,
            buf: vec![Complex64::default(); n],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    fn scales(&self) -> (f64, f64) {
        let n = self.n as f64;
        ((1.0 / n).sqrt(), (2.0 / n).sqrt())
    }

    fn forward(&mut self, data: &mut [f64]) {
        let n = self.n;
        for i in 0..n.div_ceil(2) {
            self.buf[i] = Complex64::new(data[2 * i], 0.0);
        }
        for i in 0..n / 2 {
            self.buf[n - 1 - i] = Complex64::new(data[2 * i + 1], 0.0);
        }
        self.forward
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        let (dc, ac) = self.scales();
        for (k, out) in data.iter_mut().enumerate() {
            let s = if k == 0 { dc } else { ac };
            *out = (self.buf[k] * self.twiddles[k]).re * s;
        }
    }

    fn inverse(&mut self, data: &mut [f64]) {
        let n = self.n;
        let (dc, ac) = self.scales();
        let unscaled = |k: usize| if k == 0 { data[0] / dc } else { data[k] / ac };
        self.buf[0] = Complex64::new(unscaled(0), 0.0);
        for k in 1..n {
            let z = Complex64::new(unscaled(k), -unscaled(n - k));
            self.buf[k] = z * self.twiddles[k].conj();
        }
        self.inverse
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        let norm = 1.0 / n as f64;
        for i in 0..n.div_ceil(2) {
            data[2 * i] = self.buf[i].re * norm;
        }
        for i in 0..n / 2 {
            data[2 * i + 1] = self.buf[n - 1 - i].re * norm;
        }
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

fn transform_volume(
    coeffs: &mut [f64],
    width: usize,
    height: usize,
    depth: usize,
    direction: Direction,
) {
    let mut planner = FftPlanner::new();
    let mut line = Vec::new();
    // (length, stride, outer line starts)
    let axes: [(usize, usize, Vec<usize>); 3] = [
        (
            width,
            1,
            (0..depth * height).map(|r| r * width).collect(),
        ),
        (
            height,
            width,
            (0..depth)
                .flat_map(|t| (0..width).map(move |x| t * width * height + x))
                .collect(),
        ),
        (depth, width * height, (0..width * height).collect()),
    ];
    for (len, stride, starts) in axes {
        if len == 1 {
            continue;
        }
        let mut dct = Dct1d::new(len, &mut planner);
        line.resize(len, 0.0);
        for start in starts {
            for (i, v) in line.iter_mut().enumerate() {
                *v = coeffs[start + i * stride];
            }
            match direction {
                Direction::Forward => dct.forward(&mut line),
                Direction::Inverse => dct.inverse(&mut line),
            }
            for (i, v) in line.iter().enumerate() {
                coeffs[start + i * stride] = *v;
            }
        }
    }
}

/// Orthonormal separable type-II DCT along width, height and time.
pub fn forward_3d_dct(gop: &Gop) -> CoeffVolume {
    let (width, height, depth) = (gop.width(), gop.height(), gop.gop_size());
    let mut coeffs: Vec<f64> = gop
        .frames()
        .iter()
        .flat_map(|f| f.samples().iter().copied())
        .collect();
    transform_volume(&mut coeffs, width, height, depth, Direction::Forward);
    CoeffVolume {
        width,
        height,
        depth,
        coeffs,
    }
}

/// Exact inverse of [`forward_3d_dct`] up to rounding.
pub fn inverse_3d_dct(vol: &CoeffVolume) -> Gop {
    let mut samples = vol.coeffs.clone();
    transform_volume(
        &mut samples,
        vol.width,
        vol.height,
        vol.depth,
        Direction::Inverse,
    );
    let plane = vol.width * vol.height;
    let frames = samples
        .chunks_exact(plane)
        .map(|s| Frame::new(vol.width, vol.height, s.to_vec()).expect("finite coefficients"))
        .collect();
    Gop::new(frames).expect("volume depth is nonzero")
}

/// Position of a chunk's top-left coefficient in the volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChunkOrigin {
    pub plane: usize,
    pub row: usize,
    pub col: usize,
}

/// Geometry of an `N_c x N_c` chunk grid applied to every temporal plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkLayout {
    pub width: usize,
    pub height: usize,
    pub depth: usize,
    pub chunks_per_side: usize,
}

impl ChunkLayout {
    pub fn new(width: usize, height: usize, depth: usize, chunks_per_side: usize) -> Result<Self> {
        if chunks_per_side == 0 {
            return Err(Error::input("chunks_per_side must be at least 1"));
        }
        if width == 0 || height == 0 || depth == 0 {
            return Err(Error::input("volume dimensions must be nonzero"));
        }
        if width % chunks_per_side != 0 || height % chunks_per_side != 0 {
            return Err(Error::input(format!(
                "width {width} and height {height} must both be divisible by chunks_per_side {chunks_per_side}"
            )));
        }
        Ok(Self {
            width,
            height,
            depth,
            chunks_per_side,
        })
    }

    pub fn chunk_width(&self) -> usize {
        self.width / self.chunks_per_side
    }

    pub fn chunk_height(&self) -> usize {
        self.height / self.chunks_per_side
    }

    /// Coefficients per chunk (`L`).
    pub fn chunk_len(&self) -> usize {
        self.chunk_width() * self.chunk_height()
    }

    pub fn num_chunks(&self) -> usize {
        self.depth * self.chunks_per_side * self.chunks_per_side
    }

    pub fn num_coeffs(&self) -> usize {
        self.width * self.height * self.depth
    }

    pub fn origin(&self, id: usize) -> ChunkOrigin {
        let per_plane = self.chunks_per_side * self.chunks_per_side;
        let (plane, rest) = (id / per_plane, id % per_plane);
        ChunkOrigin {
            plane,
            row: rest / self.chunks_per_side * self.chunk_height(),
            col: rest % self.chunks_per_side * self.chunk_width(),
        }
    }

    fn id_of(&self, origin: ChunkOrigin) -> Option<usize> {
        let (cw, ch) = (self.chunk_width(), self.chunk_height());
        if origin.plane >= self.depth
            || origin.row % ch != 0
            || origin.col % cw != 0
            || origin.row >= self.height
            || origin.col >= self.width
        {
            return None;
        }
        Some(
            (origin.plane * self.chunks_per_side + origin.row / ch) * self.chunks_per_side
                + origin.col / cw,
        )
    }

    fn offsets(&self, origin: ChunkOrigin) -> impl Iterator<Item = usize> + '_ {
        let base = origin.plane * self.width * self.height;
        (0..self.chunk_height()).flat_map(move |r| {
            let row_start = base + (origin.row + r) * self.width + origin.col;
            row_start..row_start + self.chunk_width()
        })
    }
}

/// A rectangular block of coefficients, modelled as zero-mean Gaussian with
/// variance equal to its mean squared coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub id: usize,
    pub origin: ChunkOrigin,
    pub coeffs: Vec<f64>,
    pub variance: f64,
}

impl Chunk {
    pub fn new(id: usize, origin: ChunkOrigin, coeffs: Vec<f64>) -> Self {
        let variance = mean_square(&coeffs);
        Self {
            id,
            origin,
            coeffs,
            variance,
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

fn mean_square(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().map(|c| c * c).sum::<f64>() / values.len() as f64
    }
}

/// Splits every temporal plane into `N_c x N_c` equal chunks, ids in
/// plane-major, row-major grid order.
pub fn partition_chunks(vol: &CoeffVolume, chunks_per_side: usize) -> Result<(ChunkLayout, Vec<Chunk>)> {
    let layout = ChunkLayout::new(vol.width, vol.height, vol.depth, chunks_per_side)?;
    let chunks = (0..layout.num_chunks())
        .map(|id| {
            let origin = layout.origin(id);
            let coeffs = layout.offsets(origin).map(|i| vol.coeffs[i]).collect();
            Chunk::new(id, origin, coeffs)
        })
        .collect();
    Ok((layout, chunks))
}

/// Writes chunks back into a volume; positions without a chunk are zero.
pub fn assemble_chunks(chunks: &[Chunk], layout: &ChunkLayout) -> Result<CoeffVolume> {
    let mut vol = CoeffVolume::zeros(layout.width, layout.height, layout.depth);
    let mut seen = vec![false; layout.num_chunks()];
    for chunk in chunks {
        let id = layout.id_of(chunk.origin).ok_or_else(|| {
            Error::input(format!("chunk {} has an origin off the chunk grid", chunk.id))
        })?;
        if std::mem::replace(&mut seen[id], true) {
            return Err(Error::input(format!(
                "chunk {} overlaps another chunk at {:?}",
                chunk.id, chunk.origin
            )));
        }
        if chunk.len() != layout.chunk_len() {
            return Err(Error::input(format!(
                "chunk {} has {} coefficients, layout expects {}",
                chunk.id,
                chunk.len(),
                layout.chunk_len()
            )));
        }
        for (offset, &c) in layout.offsets(chunk.origin).zip(&chunk.coeffs) {
            vol.coeffs[offset] = c;
        }
    }
    Ok(vol)
}
