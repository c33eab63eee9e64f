//! Rayleigh block fading, complex symbol packing, superposition with AWGN and
//! the LLSE receivers (far user: EL as noise; near user: perfect SIC).

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Zone {
    Near,
    Far,
}

impl Zone {
    pub fn as_str(&self) -> &'static str {
        match self {
            Zone::Near => "near",
            Zone::Far => "far",
        }
    }
}

/// Distance from the base station and path-loss exponent.
///
/// `distance` is expressed in the unit the path-loss model `1 + d^η` is
/// calibrated in (see `Deployment::distance_unit_m` in the pipeline).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserGeometry {
    pub distance: f64,
    pub eta: f64,
    pub zone: Zone,
}

impl UserGeometry {
    pub fn new(distance: f64, eta: f64, zone: Zone) -> Result<Self> {
        if !(distance >= 0.0 && distance.is_finite()) {
            return Err(Error::input(format!("distance must be >= 0, got {distance}")));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::input(format!("path-loss exponent must be > 0, got {eta}")));
        }
        Ok(Self { distance, eta, zone })
    }

    /// Amplitude attenuation `1/√(1 + d^η)`.
    pub fn amplitude_loss(&self) -> f64 {
        1.0 / (1.0 + self.distance.powf(self.eta)).sqrt()
    }
}

/// One user's channel for a GOP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelState {
    pub h: Complex64,
    pub sigma2: f64,
}

impl ChannelState {
    pub fn new(h: Complex64, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::input(format!("noise variance must be positive, got {sigma2}")));
        }
        if !h.is_finite() {
            return Err(Error::input("channel gain must be finite"));
        }
        Ok(Self { h, sigma2 })
    }
}

/// A draw from `CN(0, variance)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Fading gain `h = r / √(1 + d^η)` with `r ~ CN(0, 1)`.
pub fn sample_gain<R: Rng + ?Sized>(geom: &UserGeometry, rng: &mut R) -> Complex64 {
    complex_gaussian(rng, 1.0) * geom.amplitude_loss()
}

/// Complex symbols, one per channel use.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymbolStream(pub Vec<Complex64>);

impl SymbolStream {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::default(); len])
    }

    pub fn energy(&self) -> f64 {
        self.0.iter().map(|s| s.norm_sqr()).sum()
    }
}

/// Packs coefficient pairs as `(c[2k] + i c[2k+1]) / √2`.
pub fn pack_complex(coeffs: &[f64]) -> Result<SymbolStream> {
    if coeffs.len() % 2 != 0 {
        return Err(Error::input(format!(
            "cannot pack an odd number ({}) of coefficients",
            coeffs.len()
        )));
    }
    Ok(SymbolStream(
        coeffs
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]) * FRAC_1_SQRT_2)
            .collect(),
    ))
}

/// Inverse of [`pack_complex`].
pub fn unpack_complex(symbols: &SymbolStream) -> Vec<f64> {
    symbols
        .0
        .iter()
        .flat_map(|s| {
            let s = s / FRAC_1_SQRT_2;
            [s.re, s.im]
        })
        .collect()
}

/// `y = h (g_bl x_bl + g_el x_el) + w`, `w ~ CN(0, σ²)`.
pub fn transmit_pair<R: Rng + ?Sized>(
    bl: &SymbolStream,
    el: &SymbolStream,
    g_bl: f64,
    g_el: f64,
    state: &ChannelState,
    rng: &mut R,
) -> Result<SymbolStream> {
    if bl.len() != el.len() {
        return Err(Error::input(format!(
            "superposed streams differ in length: {} vs {}",
            bl.len(),
            el.len()
        )));
    }
    Ok(SymbolStream(
        bl.0.iter()
            .zip(&el.0)
            .map(|(b, e)| state.h * (b * g_bl + e * g_el) + complex_gaussian(rng, state.sigma2))
            .collect(),
    ))
}

/// `y = h g x + w` for orthogonal (single-layer) transmission.
pub fn transmit_single<R: Rng + ?Sized>(
    x: &SymbolStream,
    g: f64,
    state: &ChannelState,
    rng: &mut R,
) -> SymbolStream {
    SymbolStream(
        x.0.iter()
            .map(|s| state.h * s * g + complex_gaussian(rng, state.sigma2))
            .collect(),
    )
}

/// LLSE weight for a source of variance `lambda` seen through `h g` in noise of
/// variance `noise`: `conj(h) g λ / (|h|² g² λ + noise)`.
pub fn llse_weight(h: Complex64, g: f64, lambda: f64, noise: f64) -> Complex64 {
    let denom = h.norm_sqr() * g * g * lambda + noise;
    if denom == 0.0 {
        Complex64::default()
    } else {
        h.conj() * (g * lambda / denom)
    }
}

fn estimate(y: &[Complex64], weight: Complex64) -> Vec<f64> {
    unpack_complex(&SymbolStream(y.iter().map(|v| v * weight).collect()))
}

/// Far-user decoding of the BL chunk, with the EL signal treated as noise of
/// variance `|h|² g_el² λ_el`.
pub fn receive_far(
    y: &SymbolStream,
    g_bl: f64,
    g_el: f64,
    lambda_bl: f64,
    lambda_el: f64,
    state: &ChannelState,
) -> Vec<f64> {
    let interference = state.h.norm_sqr() * g_el * g_el * lambda_el;
    let w = llse_weight(state.h, g_bl, lambda_bl, interference + state.sigma2);
    estimate(&y.0, w)
}

/// Near-user decoding: the BL chunk is estimated with the EL as noise, then
/// the true BL signal is cancelled (perfect SIC) and the EL chunk is
/// estimated against channel noise alone.
///
/// Returns `(bl, el)` coefficient estimates.
pub fn receive_near(
    y: &SymbolStream,
    bl_symbols: &SymbolStream,
    g_bl: f64,
    g_el: f64,
    lambda_bl: f64,
    lambda_el: f64,
    state: &ChannelState,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if y.len() != bl_symbols.len() {
        return Err(Error::input("received and cancelled streams differ in length"));
    }
    let bl = receive_far(y, g_bl, g_el, lambda_bl, lambda_el, state);
    let w = llse_weight(state.h, g_el, lambda_el, state.sigma2);
    let residual: Vec<Complex64> = y
        .0
        .iter()
        .zip(&bl_symbols.0)
        .map(|(v, b)| v - state.h * b * g_bl)
        .collect();
    Ok((bl, estimate(&residual, w)))
}

/// Single-layer LLSE decoding for orthogonal transmission.
pub fn receive_single(y: &SymbolStream, g: f64, lambda: f64, state: &ChannelState) -> Vec<f64> {
    estimate(&y.0, llse_weight(state.h, g, lambda, state.sigma2))
}
