//! Self-checks against brute-force oracles: exhaustive matching, grid search
//! over the power split, and Monte-Carlo LLSE decoding.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{self, ChannelState};
use crate::error::{Error, Result};
use crate::layering;
use crate::matching::{self, DistortionMatrix, Driver, DEFAULT_EXHAUSTIVE_CAP};
use crate::pipeline::{self, sigma2_for_snr, Deployment, Scenario, Scheme};
use crate::power::{self, LinkParams, ScalingPair};
use crate::rng;
use crate::video_io::{self, SyntheticKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Matching,
    Power,
    Distortion,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Matching, Suite::Power, Suite::Distortion];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Matching => "matching",
            Suite::Power => "power",
            Suite::Distortion => "distortion",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config("suite", format!("unknown suite `{s}` (expected matching, power, distortion)")))
    }
}

/// Direction of a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

/// One measured property.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: Bound,
    pub threshold: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, bound: Bound, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            threshold,
        }
    }

    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.measured <= self.threshold,
            Bound::AtLeast => self.measured >= self.threshold,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let v = self.measured;
        if v != 0.0 && v.abs() < 1e-3 {
            write!(f, "{status} {}: measured {v:.3e} (required {op} {:e})", self.name, self.threshold)
        } else {
            write!(f, "{status} {}: measured {v:.6} (required {op} {})", self.name, self.threshold)
        }
    }
}

/// A D-matrix produced by the encoder itself: one synthetic CIF frame cut
/// into 16 chunks, `β` chosen so that `m` pairs are sent, users placed in the
/// default rings with Rayleigh fading and SNR uniform in [5, 25] dB.
///
/// `m` must lie in `1..=8`.
pub fn pipeline_instance(m: usize, seed: u64) -> Result<DistortionMatrix> {
    if !(1..=8).contains(&m) {
        return Err(Error::input(format!("pipeline instances hold 1 to 8 pairs, asked for {m}")));
    }
    let mut rng = rng::stream(seed, &[0x696e_7374]);
    let gop = video_io::synthetic_gop(SyntheticKind::MovingPattern, 352, 288, 1, seed)?;
    let analysis = pipeline::analyze_gop(&gop, 4)?;
    let beta = m as f64 / analysis.chunks.len() as f64;
    let pairs = layering::plan_bandwidth(analysis.chunks.len(), analysis.layout.chunk_len(), beta)?;
    let layers = layering::bisect_layers(analysis.chunks, pairs)?;

    let users = pipeline::place_trial_users(&Deployment::default(), seed)?;
    let gains = pipeline::draw_gains(&users, 1, seed);
    let snr_db = rng.random_range(5.0..25.0);
    let sigma2 = sigma2_for_snr(1.0, snr_db);
    let states = gains[0]
        .iter()
        .map(|&h| ChannelState::new(h, sigma2))
        .collect::<Result<Vec<_>>>()?;
    let scenario = Scenario {
        users,
        snr_db,
        beta,
        chunks_per_side: 4,
        p_chunk: 1.0,
        scheme: Scheme::SupcastBl,
        seed,
        clamp_pixels: false,
        exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
    };
    let p_total = (2 * pairs) as f64;
    let link = pipeline::worst_link(&scenario, &states, p_total)?;
    let (bl, el) = (layers.bl_variances(), layers.el_variances());
    let pre = power::preallocate(&bl, &el, p_total)?;
    DistortionMatrix::two_stage(&bl, &el, &pre, &link)
}

/// Minimum of the pair objective over a grid of `(P_BL, P_EL)` splits,
/// refined around the incumbent until the step is at most `resolution * p`.
pub fn grid_search_pair(lambda_bl: f64, lambda_el: f64, p: f64, link: &LinkParams, resolution: f64) -> f64 {
    let eval = |pb: f64, pe: f64| {
        let s = ScalingPair {
            g_bl: (pb / lambda_bl).sqrt(),
            g_el: (pe / lambda_el).sqrt(),
        };
        power::pair_distortion(lambda_bl, lambda_el, &s, link)
    };
    let n = 100;
    let (mut lo_b, mut hi_b, mut lo_e, mut hi_e) = (0.0, p, 0.0, p / 2.0);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    loop {
        let (sb, se) = ((hi_b - lo_b) / n as f64, (hi_e - lo_e) / n as f64);
        for a in 0..=n {
            let pb = lo_b + a as f64 * sb;
            for b in 0..=n {
                let pe = lo_e + b as f64 * se;
                if pe <= pb && pb + pe <= p {
                    let d = eval(pb, pe);
                    if d < best.0 {
                        best = (d, pb, pe);
                    }
                }
            }
        }
        if sb.max(se) <= resolution * p {
            return best.0;
        }
        lo_b = (best.1 - 2.0 * sb).max(0.0);
        hi_b = (best.1 + 2.0 * sb).min(p);
        lo_e = (best.2 - 2.0 * se).max(0.0);
        hi_e = (best.2 + 2.0 * se).min(p / 2.0);
    }
}

fn matching_suite(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut violations = 0usize;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..1000 {
        let m = rng.random_range(2..=32);
        let d = DistortionMatrix::from_fn(m, |_, _| rng.random_range(0.0..1.0))?;
        for driver in [Driver::Bl, Driver::El] {
            let out = matching::becma_with_stats(&d, driver);
            if !matching::is_stable(&out.matching, &d) || out.proposals > m * m {
                violations += 1;
            }
            worst_ratio = worst_ratio.max(out.proposals as f64 / (m * m) as f64);
        }
    }

    let (mut within, mut gap_sum, mut driver_diff) = (0usize, 0.0, 0.0);
    let n = 500;
    for k in 0..n {
        let d = pipeline_instance(7, rng.random::<u64>() ^ k as u64)?;
        let best = matching::total_distortion(&matching::exhaustive_match(&d, 7)?, &d);
        let bl = matching::total_distortion(&matching::becma(&d, Driver::Bl), &d);
        let el = matching::total_distortion(&matching::becma(&d, Driver::El), &d);
        if bl <= 1.05 * best {
            within += 1;
        }
        gap_sum += bl / best - 1.0;
        driver_diff += (bl - el).abs() / best;
    }
    Ok(vec![
        Check::new("stability violations over 1000 random instances", violations as f64, Bound::AtMost, 0.0),
        Check::new("worst proposals / M^2", worst_ratio, Bound::AtMost, 1.0),
        Check::new("share of 7x7 instances within 5% of exhaustive", within as f64 / n as f64, Bound::AtLeast, 0.95),
        Check::new("mean gap to exhaustive", gap_sum / n as f64, Bound::AtMost, 0.02),
        Check::new("mean BL/EL driver difference", driver_diff / n as f64, Bound::AtMost, 0.02),
    ])
}

fn power_suite(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut worst_excess: f64 = 0.0;
    let mut worst_budget: f64 = 0.0;
    let mut order_violations = 0usize;
    for _ in 0..200 {
        let le = 10f64.powf(rng.random_range(-1.0..3.0));
        let lb = le * 10f64.powf(rng.random_range(0.0..2.0));
        let p = 10f64.powf(rng.random_range(-1.0..1.0));
        let hn = 10f64.powf(rng.random_range(-1.0..0.3));
        let hf = hn * rng.random_range(0.05..1.0);
        let sigma2 = 10f64.powf(rng.random_range(-3.0..0.0));
        let link = LinkParams::new(Complex64::new(hn, 0.0), Complex64::new(hf, 0.0), sigma2, p)?;
        let s = power::reallocate_pair(lb, le, p, &link)?;
        let d = power::pair_distortion(lb, le, &s, &link);
        let grid = grid_search_pair(lb, le, p, &link, 1e-4);
        worst_excess = worst_excess.max(d / grid - 1.0);
        worst_budget = worst_budget.max((s.bl_power(lb) + s.el_power(le) - p).abs() / p);
        if s.el_power(le) > s.bl_power(lb) * (1.0 + 1e-12) {
            order_violations += 1;
        }
    }

    let mut worst_sum: f64 = 0.0;
    for _ in 0..200 {
        let m = rng.random_range(1..=64);
        let bl: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.random_range(-2.0..4.0))).collect();
        let el: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.random_range(-2.0..4.0))).collect();
        let p = rng.random_range(1.0..1000.0);
        let pre = power::preallocate(&bl, &el, p)?;
        worst_sum = worst_sum.max((pre.total() - p).abs() / p);
    }
    Ok(vec![
        Check::new("worst excess over grid search", worst_excess, Bound::AtMost, 0.01),
        Check::new("worst pair budget error (relative)", worst_budget, Bound::AtMost, 1e-12),
        Check::new("EL power above BL power", order_violations as f64, Bound::AtMost, 0.0),
        Check::new("worst pre-allocation sum error (relative)", worst_sum, Bound::AtMost, 1e-9),
    ])
}

fn gaussian_coeffs(rng: &mut ChaCha8Rng, n: usize, var: f64) -> Vec<f64> {
    let sd = var.sqrt();
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * sd
        })
        .collect()
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Monte-Carlo near- and far-user errors for one parameter set at `n`
/// coefficients per layer; returns `(near_ratio, far_ratio)` of measured to
/// predicted MSE.
pub fn monte_carlo_ratios(
    lb: f64,
    le: f64,
    s: ScalingPair,
    h: Complex64,
    sigma2: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    let bl = gaussian_coeffs(rng, n, lb);
    let el = gaussian_coeffs(rng, n, le);
    let (bs, es) = (channel::pack_complex(&bl)?, channel::pack_complex(&el)?);
    let state = ChannelState::new(h, sigma2)?;
    let y = channel::transmit_pair(&bs, &es, s.g_bl, s.g_el, &state, rng)?;
    let (_, el_hat) = channel::receive_near(&y, &bs, s.g_bl, s.g_el, lb, le, &state)?;
    let bl_hat = channel::receive_far(&y, s.g_bl, s.g_el, lb, le, &state);
    let near = power::distortion_near(le, s.g_el, h.norm(), sigma2);
    let far = power::distortion_far(lb, le, s.g_bl, s.g_el, h.norm(), sigma2);
    Ok((mse(&el_hat, &el) / near, mse(&bl_hat, &bl) / far))
}

fn distortion_suite(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let (mut near_dev, mut far_dev): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let le = 10f64.powf(rng.random_range(-1.0..2.0));
        let lb = le * 10f64.powf(rng.random_range(0.0..2.0));
        let p = rng.random_range(0.5..4.0);
        let pe = p * rng.random_range(0.0..0.5);
        let s = ScalingPair {
            g_bl: ((p - pe) / lb).sqrt(),
            g_el: (pe / le).sqrt(),
        };
        let h = Complex64::from_polar(10f64.powf(rng.random_range(-1.0..0.0)), rng.random_range(0.0..std::f64::consts::TAU));
        let sigma2 = 10f64.powf(rng.random_range(-2.5..0.0));
        let (near, far) = monte_carlo_ratios(lb, le, s, h, sigma2, 1_000_000, rng)?;
        near_dev = near_dev.max((near - 1.0).abs());
        far_dev = far_dev.max((far - 1.0).abs());
    }
    Ok(vec![
        Check::new("worst near-user MSE deviation from model (20 sets)", near_dev, Bound::AtMost, 0.03),
        Check::new("worst far-user MSE deviation from model (20 sets)", far_dev, Bound::AtMost, 0.03),
    ])
}

/// Runs one suite with a deterministic stream derived from `seed`.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    let mut rng = rng::stream(seed, &[suite as u64]);
    match suite {
        Suite::Matching => matching_suite(&mut rng),
        Suite::Power => power_suite(&mut rng),
        Suite::Distortion => distortion_suite(&mut rng),
    }
}
