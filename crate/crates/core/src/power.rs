//! Two-stage power allocation and the LLSE distortion model.
//!
//! Powers are per-coefficient: a chunk of variance `λ` scaled by `g` is
//! transmitted with power `g² λ`. Distortions are per-coefficient MSE.
//!
//! Stage one spreads the GOP budget over all chunks proportionally to `√λ`.
//! Stage two re-splits each pair's budget `P = P_BL + P_EL` between its two
//! chunks. Writing `x = g_EL² λ_EL` for the EL share, the pair distortion is
//!
//! ```text
//! D(x) = λ_EL σ² / (|h_n|² x + σ²) + λ_BL (|h_f|² x + σ²) / (|h_f|² P + σ²)
//! ```
//!
//! which is convex in `x`, so the stationary point clipped to `[0, P/2]` is
//! the optimum.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Stage-one budgets of one BL and one EL chunk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairBudget {
    pub p_bl: f64,
    pub p_el: f64,
}

impl PairBudget {
    pub fn p_pair(&self) -> f64 {
        self.p_bl + self.p_el
    }
}

/// Per-chunk stage-one budgets. Budgets are combined into pairs only once a
/// schedule is known.
#[derive(Debug, Clone, PartialEq)]
pub struct Preallocation {
    pub bl: Vec<f64>,
    pub el: Vec<f64>,
}

impl Preallocation {
    /// Budget of BL chunk `i` superposed with EL chunk `j`.
    pub fn pair(&self, i: usize, j: usize) -> PairBudget {
        PairBudget {
            p_bl: self.bl[i],
            p_el: self.el[j],
        }
    }

    pub fn total(&self) -> f64 {
        self.bl.iter().chain(&self.el).sum()
    }
}

/// Scaling factors applied to a superposed BL/EL pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScalingPair {
    pub g_bl: f64,
    pub g_el: f64,
}

impl ScalingPair {
    pub fn bl_power(&self, lambda_bl: f64) -> f64 {
        self.g_bl * self.g_bl * lambda_bl
    }

    pub fn el_power(&self, lambda_el: f64) -> f64 {
        self.g_el * self.g_el * lambda_el
    }
}

/// Channel knowledge at the transmitter for the worst near and far users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub h_n: Complex64,
    pub h_f: Complex64,
    pub sigma2: f64,
    pub p_total: f64,
}

impl LinkParams {
    pub fn new(h_n: Complex64, h_f: Complex64, sigma2: f64, p_total: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::input(format!("noise variance must be positive, got {sigma2}")));
        }
        if !(p_total > 0.0 && p_total.is_finite()) {
            return Err(Error::input(format!("power budget must be positive, got {p_total}")));
        }
        if !(h_n.is_finite() && h_f.is_finite()) {
            return Err(Error::input("channel gains must be finite"));
        }
        Ok(Self {
            h_n,
            h_f,
            sigma2,
            p_total,
        })
    }
}

fn check_variances(lambdas: &[f64]) -> Result<()> {
    if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::input(format!("chunk variance must be finite and >= 0, got {bad}")));
    }
    Ok(())
}

/// Stage one: `P_k = √λ_k / Σ√λ · P^t` over every BL and EL chunk.
pub fn preallocate(lambdas_bl: &[f64], lambdas_el: &[f64], p_total: f64) -> Result<Preallocation> {
    if lambdas_bl.len() != lambdas_el.len() {
        return Err(Error::input(format!(
            "{} BL variances vs {} EL variances",
            lambdas_bl.len(),
            lambdas_el.len()
        )));
    }
    check_variances(lambdas_bl)?;
    check_variances(lambdas_el)?;
    if !(p_total >= 0.0 && p_total.is_finite()) {
        return Err(Error::input(format!("power budget must be finite and >= 0, got {p_total}")));
    }
    let norm: f64 = lambdas_bl.iter().chain(lambdas_el).map(|l| l.sqrt()).sum();
    if norm == 0.0 {
        return Err(Error::input("all chunk variances are zero: no signal energy to allocate"));
    }
    let share = |l: &f64| l.sqrt() / norm * p_total;
    Ok(Preallocation {
        bl: lambdas_bl.iter().map(share).collect(),
        el: lambdas_el.iter().map(share).collect(),
    })
}

/// The squared stationary-point EL scaling, before clipping:
///
/// `σ/(|h_n||h_f|) · √((|h_f|² P + σ²)/(λ_BL λ_EL)) − σ²/(|h_n|² λ_EL)`.
///
/// A dead near link gives `-inf`; a dead far link gives `+inf`.
pub fn el_stationary_square(lambda_bl: f64, lambda_el: f64, p_pair: f64, link: &LinkParams) -> f64 {
    let (hn, hf) = (link.h_n.norm(), link.h_f.norm());
    let s2 = link.sigma2;
    if hn == 0.0 {
        return f64::NEG_INFINITY;
    }
    if hf == 0.0 {
        return f64::INFINITY;
    }
    let sigma = s2.sqrt();
    sigma / (hn * hf) * ((hf * hf * p_pair + s2) / (lambda_bl * lambda_el)).sqrt()
        - s2 / (hn * hn * lambda_el)
}

/// Stage two: optimal split of `p_pair` within one superposed pair.
///
/// The EL scaling is the stationary point clipped to `[0, √(P/(2 λ_EL))]`;
/// the BL chunk takes the remaining budget so the pair budget is used in full.
pub fn reallocate_pair(
    lambda_bl: f64,
    lambda_el: f64,
    p_pair: f64,
    link: &LinkParams,
) -> Result<ScalingPair> {
    check_variances(&[lambda_bl, lambda_el])?;
    if !(p_pair >= 0.0 && p_pair.is_finite()) {
        return Err(Error::input(format!("pair budget must be finite and >= 0, got {p_pair}")));
    }
    if lambda_bl == 0.0 {
        if lambda_el > 0.0 {
            return Err(Error::input(
                "BL chunk has zero variance while its EL partner does not",
            ));
        }
        return Ok(ScalingPair::default());
    }
    if p_pair == 0.0 {
        return Ok(ScalingPair::default());
    }

    let el_power = if lambda_el == 0.0 {
        0.0
    } else {
        let cap = p_pair / 2.0;
        let stationary = el_stationary_square(lambda_bl, lambda_el, p_pair, link).max(0.0) * lambda_el;
        stationary.min(cap)
    };
    let bl_power = (p_pair - el_power).max(0.0);
    Ok(ScalingPair {
        g_bl: (bl_power / lambda_bl).sqrt(),
        g_el: if lambda_el == 0.0 { 0.0 } else { (el_power / lambda_el).sqrt() },
    })
}

/// Near-user EL distortion after perfect SIC.
pub fn distortion_near(lambda_el: f64, g_el: f64, h_n: f64, sigma2: f64) -> f64 {
    let denom = h_n * h_n * g_el * g_el * lambda_el + sigma2;
    if denom == 0.0 {
        0.0
    } else {
        lambda_el * sigma2 / denom
    }
}

/// Far-user BL distortion with the EL signal acting as noise.
pub fn distortion_far(lambda_bl: f64, lambda_el: f64, g_bl: f64, g_el: f64, h_f: f64, sigma2: f64) -> f64 {
    let hf2 = h_f * h_f;
    let interference = hf2 * g_el * g_el * lambda_el + sigma2;
    let denom = hf2 * g_bl * g_bl * lambda_bl + interference;
    if denom == 0.0 {
        0.0
    } else {
        lambda_bl * interference / denom
    }
}

/// Pair objective `d_n + d_f`, excluding the constant undecodable-EL term.
pub fn pair_distortion(lambda_bl: f64, lambda_el: f64, scaling: &ScalingPair, link: &LinkParams) -> f64 {
    distortion_near(lambda_el, scaling.g_el, link.h_n.norm(), link.sigma2)
        + distortion_far(
            lambda_bl,
            lambda_el,
            scaling.g_bl,
            scaling.g_el,
            link.h_f.norm(),
            link.sigma2,
        )
}

/// Pair objective under the optimal stage-two split of `p_pair`.
pub fn optimal_pair_distortion(lambda_bl: f64, lambda_el: f64, p_pair: f64, link: &LinkParams) -> Result<f64> {
    let scaling = reallocate_pair(lambda_bl, lambda_el, p_pair, link)?;
    Ok(pair_distortion(lambda_bl, lambda_el, &scaling, link))
}

/// Orthogonal allocation: per-chunk powers `∝ √λ` summing to `p_total`.
pub fn softcast_powers(lambdas: &[f64], p_total: f64) -> Result<Vec<f64>> {
    check_variances(lambdas)?;
    let norm: f64 = lambdas.iter().map(|l| l.sqrt()).sum();
    if norm == 0.0 {
        return Err(Error::input("all chunk variances are zero: no signal energy to allocate"));
    }
    Ok(lambdas.iter().map(|l| l.sqrt() / norm * p_total).collect())
}

/// Orthogonal allocation as scaling factors `g_i = √(P_i/λ_i)`; zero-variance
/// chunks get `g = 0`.
pub fn softcast_allocate(lambdas: &[f64], p_total: f64) -> Result<Vec<f64>> {
    let powers = softcast_powers(lambdas, p_total)?;
    Ok(lambdas
        .iter()
        .zip(powers)
        .map(|(&l, p)| if l > 0.0 { (p / l).sqrt() } else { 0.0 })
        .collect())
}
