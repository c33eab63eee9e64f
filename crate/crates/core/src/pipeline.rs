//! End-to-end orchestration: encode a GOP under a scheme, push every user's
//! copy through its channel, reconstruct and score.
//!
//! Power and scheduling are optimized for the weakest user of each zone;
//! every user is evaluated.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{self, ChannelState, UserGeometry, Zone};
use crate::error::{Error, Result};
use crate::layering::{self, LayerPlan};
use crate::matching::{self, DistortionMatrix, Driver, Matching, DEFAULT_EXHAUSTIVE_CAP};
use crate::power::{self, LinkParams, ScalingPair};
use crate::rng::{self, tag};
use crate::transform::{self, Chunk, ChunkLayout};
use crate::video_io::{self, Gop};

/// Transmission schemes that can be simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Superposition with BL-driven matching.
    SupcastBl,
    /// Superposition with EL-driven matching.
    SupcastEl,
    /// Superposition with the optimal schedule found by enumeration.
    SupcastExhaustive,
    /// Orthogonal transmission of the most important chunks.
    Softcast,
    /// Superposition with random pairing and orthogonal-style power.
    NomaRa,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::SupcastBl,
        Scheme::SupcastEl,
        Scheme::SupcastExhaustive,
        Scheme::Softcast,
        Scheme::NomaRa,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::SupcastBl => "supcast_bl",
            Scheme::SupcastEl => "supcast_el",
            Scheme::SupcastExhaustive => "supcast_exhaustive",
            Scheme::Softcast => "softcast",
            Scheme::NomaRa => "noma_ra",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::input(format!(
                    "unknown scheme `{s}` (expected one of supcast_bl, supcast_el, supcast_exhaustive, softcast, noma_ra)"
                ))
            })
    }
}

/// How BL/EL pairs are chosen for superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheduler {
    Becma(Driver),
    Exhaustive { cap: usize },
}

/// Cell geometry: two concentric rings of users around the base station.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    /// Inner and outer radius of the near ring, meters.
    pub near_radii: (f64, f64),
    /// Inner and outer radius of the far ring, meters.
    pub far_radii: (f64, f64),
    pub users_per_zone: usize,
    pub eta: f64,
    /// Meters per distance unit of the path-loss model `1 + d^η`.
    pub distance_unit_m: f64,
}

impl Default for Deployment {
    fn default() -> Self {
        Self {
            near_radii: (100.0, 500.0),
            far_radii: (500.0, 900.0),
            users_per_zone: 5,
            eta: 2.0,
            distance_unit_m: 1000.0,
        }
    }
}

/// A placed receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct User {
    pub id: usize,
    pub zone: Zone,
    pub distance_m: f64,
    pub geometry: UserGeometry,
}

impl Deployment {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("near", self.near_radii), ("far", self.far_radii)] {
            if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::input(format!("{name} ring radii ({lo}, {hi}) are invalid")));
            }
        }
        if self.users_per_zone == 0 {
            return Err(Error::input("each zone needs at least one user"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::input(format!("path-loss exponent must be > 0, got {}", self.eta)));
        }
        if !(self.distance_unit_m > 0.0 && self.distance_unit_m.is_finite()) {
            return Err(Error::input("distance unit must be positive"));
        }
        Ok(())
    }

    /// A user at `distance_m` in `zone`.
    pub fn user(&self, id: usize, zone: Zone, distance_m: f64) -> Result<User> {
        Ok(User {
            id,
            zone,
            distance_m,
            geometry: UserGeometry::new(distance_m / self.distance_unit_m, self.eta, zone)?,
        })
    }

    /// Places `users_per_zone` users uniformly over the area of each ring;
    /// near users first.
    pub fn place_users<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<User>> {
        self.validate()?;
        let mut users = Vec::with_capacity(2 * self.users_per_zone);
        for (zone, (lo, hi)) in [(Zone::Near, self.near_radii), (Zone::Far, self.far_radii)] {
            for _ in 0..self.users_per_zone {
                let r2 = if hi > lo {
                    rng.random_range(lo * lo..hi * hi)
                } else {
                    lo * lo
                };
                users.push(self.user(users.len(), zone, r2.sqrt())?);
            }
        }
        Ok(users)
    }
}

/// Everything needed to encode and simulate one scheme at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub users: Vec<User>,
    pub snr_db: f64,
    pub beta: f64,
    pub chunks_per_side: usize,
    /// Average power per transmitted chunk, watts.
    pub p_chunk: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub clamp_pixels: bool,
    pub exhaustive_cap: usize,
}

impl Scenario {
    /// Noise variance for the configured SNR, `10 log10(P / σ²)`.
    pub fn sigma2(&self) -> f64 {
        sigma2_for_snr(self.p_chunk, self.snr_db)
    }
}

pub fn sigma2_for_snr(p_chunk: f64, snr_db: f64) -> f64 {
    p_chunk / 10f64.powf(snr_db / 10.0)
}

/// A GOP after the 3D-DCT and chunk partition.
#[derive(Debug, Clone)]
pub struct AnalyzedGop {
    pub source: Gop,
    pub layout: ChunkLayout,
    pub chunks: Vec<Chunk>,
}

pub fn analyze_gop(gop: &Gop, chunks_per_side: usize) -> Result<AnalyzedGop> {
    let vol = transform::forward_3d_dct(gop);
    let (layout, chunks) = transform::partition_chunks(&vol, chunks_per_side)?;
    Ok(AnalyzedGop {
        source: gop.clone(),
        layout,
        chunks,
    })
}

/// What is sent for a GOP.
#[derive(Debug, Clone, PartialEq)]
pub enum Transmission {
    /// BL chunk `i` superposed with EL chunk `matching.el_of(i)`, scaled by
    /// `scaling[i]`.
    Superposed {
        layers: LayerPlan,
        matching: Matching,
        scaling: Vec<ScalingPair>,
    },
    /// One chunk per slot.
    Orthogonal { chunks: Vec<Chunk>, gains: Vec<f64> },
}

/// Encoder output plus the metadata receivers are assumed to know.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionPlan {
    pub scheme: Scheme,
    pub layout: ChunkLayout,
    pub transmission: Transmission,
    pub discarded: Vec<usize>,
    /// Sum of the variances of the discarded chunks.
    pub discarded_variance: f64,
    pub p_total: f64,
    /// Channel knowledge the encoder optimized against, if any.
    pub link: Option<LinkParams>,
}

impl TransmissionPlan {
    /// Number of occupied chunk slots (`M'` pairs or orthogonal chunks).
    pub fn slots(&self) -> usize {
        match &self.transmission {
            Transmission::Superposed { layers, .. } => layers.m(),
            Transmission::Orthogonal { chunks, .. } => chunks.len(),
        }
    }

    /// Total power actually radiated, `Σ g² λ`.
    pub fn radiated_power(&self) -> f64 {
        match &self.transmission {
            Transmission::Superposed {
                layers,
                matching,
                scaling,
            } => matching
                .pairs()
                .map(|(i, j)| scaling[i].bl_power(layers.bl[i].variance) + scaling[i].el_power(layers.el[j].variance))
                .sum(),
            Transmission::Orthogonal { chunks, gains } => chunks
                .iter()
                .zip(gains)
                .map(|(c, g)| g * g * c.variance)
                .sum(),
        }
    }
}

/// Index of the smallest `|h|` among users in `zone`.
fn weakest(users: &[User], states: &[ChannelState], zone: Zone) -> Result<usize> {
    users
        .iter()
        .zip(states)
        .enumerate()
        .filter(|(_, (u, _))| u.zone == zone)
        .min_by(|a, b| a.1 .1.h.norm().total_cmp(&b.1 .1.h.norm()))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::input(format!("no {} users to optimize for", zone.as_str())))
}

fn layer_gop(analysis: &AnalyzedGop, beta: f64) -> Result<LayerPlan> {
    let m_prime = layering::plan_bandwidth(
        analysis.chunks.len(),
        analysis.layout.chunk_len(),
        beta,
    )?;
    layering::bisect_layers(analysis.chunks.clone(), m_prime)
}

/// Worst-user link parameters for superposition encoding.
pub fn worst_link(scenario: &Scenario, states: &[ChannelState], p_total: f64) -> Result<LinkParams> {
    if states.len() != scenario.users.len() {
        return Err(Error::input("one channel state per user is required"));
    }
    let n = weakest(&scenario.users, states, Zone::Near)?;
    let f = weakest(&scenario.users, states, Zone::Far)?;
    LinkParams::new(states[n].h, states[f].h, scenario.sigma2(), p_total)
}

/// Superposition encoding: layering, two-stage power allocation and
/// matching-based scheduling against the weakest near and far users.
pub fn encode_supcast(
    analysis: &AnalyzedGop,
    scenario: &Scenario,
    states: &[ChannelState],
    scheduler: Scheduler,
) -> Result<TransmissionPlan> {
    let layers = layer_gop(analysis, scenario.beta)?;
    let m = layers.m();
    let p_total = scenario.p_chunk * (2 * m) as f64;
    let link = worst_link(scenario, states, p_total)?;
    let (lb, le) = (layers.bl_variances(), layers.el_variances());

    let (matching, scaling) = if lb.iter().chain(&le).all(|&l| l == 0.0) {
        (Matching::identity(m), vec![ScalingPair::default(); m])
    } else {
        let prealloc = power::preallocate(&lb, &le, p_total)?;
        let d = DistortionMatrix::two_stage(&lb, &le, &prealloc, &link)?;
        let matching = match scheduler {
            Scheduler::Becma(driver) => matching::becma(&d, driver),
            Scheduler::Exhaustive { cap } => matching::exhaustive_match(&d, cap)?,
        };
        let scaling = matching
            .pairs()
            .map(|(i, j)| power::reallocate_pair(lb[i], le[j], prealloc.pair(i, j).p_pair(), &link))
            .collect::<Result<Vec<_>>>()?;
        (matching, scaling)
    };

    Ok(TransmissionPlan {
        scheme: scenario.scheme,
        layout: analysis.layout,
        discarded: layers.discarded.clone(),
        discarded_variance: layers.discarded_variance,
        transmission: Transmission::Superposed {
            layers,
            matching,
            scaling,
        },
        p_total,
        link: Some(link),
    })
}

/// Orthogonal encoding: keep the chunks that fit, power `∝ √λ`.
pub fn encode_softcast(analysis: &AnalyzedGop, scenario: &Scenario) -> Result<TransmissionPlan> {
    let keep = layering::orthogonal_capacity(
        analysis.chunks.len(),
        analysis.layout.chunk_len(),
        scenario.beta,
    )?;
    let (chunks, dropped) = layering::retain_most_important(analysis.chunks.clone(), keep);
    let p_total = scenario.p_chunk * chunks.len() as f64;
    let lambdas: Vec<f64> = chunks.iter().map(|c| c.variance).collect();
    let gains = if lambdas.iter().all(|&l| l == 0.0) {
        vec![0.0; lambdas.len()]
    } else {
        power::softcast_allocate(&lambdas, p_total)?
    };
    Ok(TransmissionPlan {
        scheme: scenario.scheme,
        layout: analysis.layout,
        discarded_variance: dropped.iter().map(|c| c.variance).sum(),
        discarded: dropped.into_iter().map(|c| c.id).collect(),
        transmission: Transmission::Orthogonal { chunks, gains },
        p_total,
        link: None,
    })
}

/// Superposition with random pairing and per-chunk `√λ` power, no
/// re-allocation.
pub fn encode_noma_ra(analysis: &AnalyzedGop, scenario: &Scenario, seed: u64) -> Result<TransmissionPlan> {
    let layers = layer_gop(analysis, scenario.beta)?;
    let m = layers.m();
    let p_total = scenario.p_chunk * (2 * m) as f64;
    let matching = matching::random_match(m, seed);
    let lambdas: Vec<f64> = layers
        .bl
        .iter()
        .chain(&layers.el)
        .map(|c| c.variance)
        .collect();
    let gains = if lambdas.iter().all(|&l| l == 0.0) {
        vec![0.0; 2 * m]
    } else {
        power::softcast_allocate(&lambdas, p_total)?
    };
    let scaling = matching
        .pairs()
        .map(|(i, j)| ScalingPair {
            g_bl: gains[i],
            g_el: gains[m + j],
        })
        .collect();
    Ok(TransmissionPlan {
        scheme: scenario.scheme,
        layout: analysis.layout,
        discarded: layers.discarded.clone(),
        discarded_variance: layers.discarded_variance,
        transmission: Transmission::Superposed {
            layers,
            matching,
            scaling,
        },
        p_total,
        link: None,
    })
}

/// Encodes `analysis` with the scenario's scheme. `schedule_seed` drives
/// random pairing.
pub fn encode(
    analysis: &AnalyzedGop,
    scenario: &Scenario,
    states: &[ChannelState],
    schedule_seed: u64,
) -> Result<TransmissionPlan> {
    match scenario.scheme {
        Scheme::SupcastBl => encode_supcast(analysis, scenario, states, Scheduler::Becma(Driver::Bl)),
        Scheme::SupcastEl => encode_supcast(analysis, scenario, states, Scheduler::Becma(Driver::El)),
        Scheme::SupcastExhaustive => encode_supcast(
            analysis,
            scenario,
            states,
            Scheduler::Exhaustive {
                cap: scenario.exhaustive_cap,
            },
        ),
        Scheme::Softcast => encode_softcast(analysis, scenario),
        Scheme::NomaRa => encode_noma_ra(analysis, scenario, schedule_seed),
    }
}

/// Per-pixel MSE split by cause. All terms are normalized by the number of
/// pixels in the GOP.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MseBreakdown {
    /// Estimation error on chunks the user decoded.
    pub llse: f64,
    /// Energy of chunks never transmitted.
    pub discarded: f64,
    /// Energy of EL chunks a far user cannot decode.
    pub undecodable_el: f64,
}

impl MseBreakdown {
    pub fn total(&self) -> f64 {
        self.llse + self.discarded + self.undecodable_el
    }

    fn add_scaled(&mut self, other: &MseBreakdown, w: f64) {
        self.llse += other.llse * w;
        self.discarded += other.discarded * w;
        self.undecodable_el += other.undecodable_el * w;
    }
}

/// One user's reception of one GOP.
#[derive(Debug, Clone, PartialEq)]
pub struct UserOutcome {
    pub reconstructed: Gop,
    pub frame_mses: Vec<f64>,
    /// Pixel MSE pooled over the GOP, after optional clamping.
    pub mse_total: f64,
    pub psnr_db: f64,
    pub breakdown: MseBreakdown,
}

fn squared_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn energy(c: &[f64]) -> f64 {
    c.iter().map(|v| v * v).sum()
}

/// Simulates reception of `plan` by one user and scores the reconstruction
/// against `source`.
///
/// Near users decode BL and EL (perfect SIC); far users decode BL only and
/// reconstruct EL chunks as zero. Discarded chunks are zero for everyone.
pub fn simulate_user<R: Rng + ?Sized>(
    plan: &TransmissionPlan,
    source: &Gop,
    user: &User,
    state: &ChannelState,
    clamp_pixels: bool,
    rng: &mut R,
) -> Result<UserOutcome> {
    let mut decoded: Vec<Chunk> = Vec::with_capacity(plan.layout.num_chunks());
    let mut err = 0.0;
    let mut undecodable = 0.0;

    let rebuild = |c: &Chunk, coeffs: Vec<f64>| Chunk::new(c.id, c.origin, coeffs);

    match &plan.transmission {
        Transmission::Superposed {
            layers,
            matching,
            scaling,
        } => {
            for (i, j) in matching.pairs() {
                let (bl, el, s) = (&layers.bl[i], &layers.el[j], scaling[i]);
                let bl_sym = channel::pack_complex(&bl.coeffs)?;
                let el_sym = channel::pack_complex(&el.coeffs)?;
                let y = channel::transmit_pair(&bl_sym, &el_sym, s.g_bl, s.g_el, state, rng)?;
                match user.zone {
                    Zone::Near => {
                        let (bl_hat, el_hat) = channel::receive_near(
                            &y,
                            &bl_sym,
                            s.g_bl,
                            s.g_el,
                            bl.variance,
                            el.variance,
                            state,
                        )?;
                        err += squared_error(&bl_hat, &bl.coeffs) + squared_error(&el_hat, &el.coeffs);
                        decoded.push(rebuild(bl, bl_hat));
                        decoded.push(rebuild(el, el_hat));
                    }
                    Zone::Far => {
                        let bl_hat = channel::receive_far(&y, s.g_bl, s.g_el, bl.variance, el.variance, state);
                        err += squared_error(&bl_hat, &bl.coeffs);
                        undecodable += energy(&el.coeffs);
                        decoded.push(rebuild(bl, bl_hat));
                    }
                }
            }
        }
        Transmission::Orthogonal { chunks, gains } => {
            for (c, &g) in chunks.iter().zip(gains) {
                let x = channel::pack_complex(&c.coeffs)?;
                let y = channel::transmit_single(&x, g, state, rng);
                let hat = channel::receive_single(&y, g, c.variance, state);
                err += squared_error(&hat, &c.coeffs);
                decoded.push(rebuild(c, hat));
            }
        }
    }

    let n = plan.layout.num_coeffs() as f64;
    let breakdown = MseBreakdown {
        llse: err / n,
        discarded: plan.discarded_variance * plan.layout.chunk_len() as f64 / n,
        undecodable_el: undecodable / n,
    };
    let vol = transform::assemble_chunks(&decoded, &plan.layout)?;
    let mut reconstructed = transform::inverse_3d_dct(&vol);
    if clamp_pixels {
        reconstructed = reconstructed.clamped();
    }
    let frame_mses = source.frame_mses(&reconstructed)?;
    let mse_total = frame_mses.iter().sum::<f64>() / frame_mses.len() as f64;
    Ok(UserOutcome {
        psnr_db: video_io::mean_psnr(&frame_mses),
        reconstructed,
        frame_mses,
        mse_total,
        breakdown,
    })
}

/// One user's score over every GOP of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct UserResult {
    pub user_id: usize,
    pub zone: Zone,
    pub distance_m: f64,
    pub psnr_db: f64,
    pub mse_total: f64,
    pub breakdown: MseBreakdown,
}

/// All users at one (scheme, seed, SNR, β) operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub scheme: Scheme,
    pub seed: u64,
    pub snr_db: f64,
    pub beta: f64,
    pub chunks_per_side: usize,
    /// Occupied chunk slots per GOP (pairs for superposition schemes).
    pub slots: usize,
    pub users: Vec<UserResult>,
}

impl RunResult {
    /// Mean PSNR over all users, or over one zone.
    pub fn mean_psnr(&self, zone: Option<Zone>) -> f64 {
        let vals: Vec<f64> = self
            .users
            .iter()
            .filter(|u| zone.is_none_or(|z| u.zone == z))
            .map(|u| u.psnr_db)
            .collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Per-GOP channel gains for every user of a trial; `gains[g][u]`.
pub fn draw_gains(users: &[User], gops: usize, seed: u64) -> Vec<Vec<Complex64>> {
    (0..gops)
        .map(|g| {
            users
                .iter()
                .map(|u| channel::sample_gain(&u.geometry, &mut rng::stream(seed, &[tag::FADING, g as u64, u.id as u64])))
                .collect()
        })
        .collect()
}

/// Simulates every user of `scenario` over pre-analyzed GOPs with the given
/// per-GOP gains.
pub fn run_scenario(
    analyses: &[AnalyzedGop],
    scenario: &Scenario,
    gains: &[Vec<Complex64>],
) -> Result<RunResult> {
    if analyses.is_empty() {
        return Err(Error::input("no GOPs to simulate"));
    }
    if gains.len() != analyses.len() {
        return Err(Error::input("one set of channel gains per GOP is required"));
    }
    let sigma2 = scenario.sigma2();
    let users = &scenario.users;
    let mut frame_mses: Vec<Vec<f64>> = vec![Vec::new(); users.len()];
    let mut totals = vec![0.0; users.len()];
    let mut breakdowns = vec![MseBreakdown::default(); users.len()];
    let mut slots = 0;
    let w = 1.0 / analyses.len() as f64;

    for (g, analysis) in analyses.iter().enumerate() {
        let states = gains[g]
            .iter()
            .map(|&h| ChannelState::new(h, sigma2))
            .collect::<Result<Vec<_>>>()?;
        let schedule_seed = rng::derive_seed(scenario.seed, &[tag::SCHEDULE, g as u64]);
        let plan = encode(analysis, scenario, &states, schedule_seed)?;
        slots = plan.slots();
        for (k, user) in users.iter().enumerate() {
            let mut noise = rng::stream(scenario.seed, &[tag::NOISE, g as u64, user.id as u64]);
            let out = simulate_user(&plan, &analysis.source, user, &states[k], scenario.clamp_pixels, &mut noise)?;
            frame_mses[k].extend_from_slice(&out.frame_mses);
            totals[k] += out.mse_total * w;
            breakdowns[k].add_scaled(&out.breakdown, w);
        }
    }

    Ok(RunResult {
        scheme: scenario.scheme,
        seed: scenario.seed,
        snr_db: scenario.snr_db,
        beta: scenario.beta,
        chunks_per_side: scenario.chunks_per_side,
        slots,
        users: users
            .iter()
            .enumerate()
            .map(|(k, u)| UserResult {
                user_id: u.id,
                zone: u.zone,
                distance_m: u.distance_m,
                psnr_db: video_io::mean_psnr(&frame_mses[k]),
                mse_total: totals[k],
                breakdown: breakdowns[k],
            })
            .collect(),
    })
}

/// A Cartesian sweep of operating points.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub schemes: Vec<Scheme>,
    pub snr_db: Vec<f64>,
    pub betas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub chunks_per_side: usize,
    pub p_chunk: f64,
    pub deployment: Deployment,
    pub clamp_pixels: bool,
    pub exhaustive_cap: usize,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            schemes: vec![Scheme::SupcastBl, Scheme::SupcastEl, Scheme::Softcast, Scheme::NomaRa],
            snr_db: vec![5.0, 10.0, 15.0, 20.0, 25.0],
            betas: vec![0.5],
            seeds: vec![1],
            chunks_per_side: 8,
            p_chunk: 1.0,
            deployment: Deployment::default(),
            clamp_pixels: false,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
        }
    }
}

/// Users of trial `seed`.
pub fn place_trial_users(deployment: &Deployment, seed: u64) -> Result<Vec<User>> {
    deployment.place_users(&mut rng::stream(seed, &[tag::PLACEMENT]))
}

/// Runs every (scheme, seed, SNR, β) cell, ordered by scheme, then seed, SNR
/// and β in the order given.
///
/// Each seed fixes user placement, fading and noise, shared by every scheme
/// and operating point of that seed.
pub fn run_experiment(video: &[Gop], sweep: &Sweep) -> Result<Vec<RunResult>> {
    if !(sweep.p_chunk > 0.0 && sweep.p_chunk.is_finite()) {
        return Err(Error::input("per-chunk power must be positive"));
    }
    let analyses = video
        .iter()
        .map(|g| analyze_gop(g, sweep.chunks_per_side))
        .collect::<Result<Vec<_>>>()?;
    let trials = sweep
        .seeds
        .iter()
        .map(|&seed| {
            let users = place_trial_users(&sweep.deployment, seed)?;
            let gains = draw_gains(&users, analyses.len(), seed);
            Ok((seed, users, gains))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut results = Vec::new();
    for &scheme in &sweep.schemes {
        for (seed, users, gains) in &trials {
            for &snr_db in &sweep.snr_db {
                for &beta in &sweep.betas {
                    let scenario = Scenario {
                        users: users.clone(),
                        snr_db,
                        beta,
                        chunks_per_side: sweep.chunks_per_side,
                        p_chunk: sweep.p_chunk,
                        scheme,
                        seed: *seed,
                        clamp_pixels: sweep.clamp_pixels,
                        exhaustive_cap: sweep.exhaustive_cap,
                    };
                    results.push(run_scenario(&analyses, &scenario, gains)?);
                }
            }
        }
    }
    Ok(results)
}

/// Seed-averaged statistics of one (scheme, SNR, β) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub beta: f64,
    pub seeds: usize,
    pub mean_psnr: f64,
    pub mean_psnr_near: f64,
    pub mean_psnr_far: f64,
    /// Standard error of the all-user mean PSNR across seeds.
    pub std_err: f64,
}

/// Averages results over seeds, keeping first-appearance cell order.
pub fn summarize(results: &[RunResult]) -> Vec<CellSummary> {
    let mut keys: Vec<(Scheme, f64, f64)> = Vec::new();
    for r in results {
        let key = (r.scheme, r.snr_db, r.beta);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(scheme, snr_db, beta)| {
            let cell: Vec<&RunResult> = results
                .iter()
                .filter(|r| r.scheme == scheme && r.snr_db == snr_db && r.beta == beta)
                .collect();
            let n = cell.len() as f64;
            let mean_of = |zone: Option<Zone>| cell.iter().map(|r| r.mean_psnr(zone)).sum::<f64>() / n;
            let mean = mean_of(None);
            let var = if cell.len() > 1 {
                cell.iter().map(|r| (r.mean_psnr(None) - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            CellSummary {
                scheme,
                snr_db,
                beta,
                seeds: cell.len(),
                mean_psnr: mean,
                mean_psnr_near: mean_of(Some(Zone::Near)),
                mean_psnr_far: mean_of(Some(Zone::Far)),
                std_err: (var / n).sqrt(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::video_io::{synthetic_gop, SyntheticKind};

    fn scenario(scheme: Scheme, snr_db: f64, beta: f64) -> Scenario {
        let d = Deployment::default();
        Scenario {
            users: vec![
                d.user(0, Zone::Near, 200.0).unwrap(),
                d.user(1, Zone::Near, 400.0).unwrap(),
                d.user(2, Zone::Far, 600.0).unwrap(),
                d.user(3, Zone::Far, 800.0).unwrap(),
            ],
            snr_db,
            beta,
            chunks_per_side: 8,
            p_chunk: 1.0,
            scheme,
            seed: 3,
            clamp_pixels: false,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
        }
    }

    fn states(s: &Scenario) -> Vec<ChannelState> {
        [0.9, 0.7, 0.5, 0.4]
            .iter()
            .map(|&a| ChannelState::new(Complex64::new(a, 0.0), s.sigma2()).unwrap())
            .collect()
    }

    fn small_analysis(seed: u64) -> AnalyzedGop {
        analyze_gop(&synthetic_gop(SyntheticKind::MovingPattern, 64, 48, 4, seed).unwrap(), 8).unwrap()
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert!("ofdm".parse::<Scheme>().is_err());
    }

    #[test]
    fn placement_respects_rings() {
        let d = Deployment::default();
        let users = d.place_users(&mut rng::stream(1, &[])).unwrap();
        assert_eq!(users.len(), 10);
        for u in &users {
            let (lo, hi) = if u.zone == Zone::Near { d.near_radii } else { d.far_radii };
            assert!(u.distance_m >= lo && u.distance_m <= hi);
            assert!((u.geometry.distance - u.distance_m / 1000.0).abs() < 1e-12);
        }
        assert_eq!(users.iter().filter(|u| u.zone == Zone::Near).count(), 5);
    }

    #[test]
    fn cif_supcast_plan_sizes() {
        let gop = synthetic_gop(SyntheticKind::MovingPattern, 352, 288, 4, 1).unwrap();
        let a = analyze_gop(&gop, 8).unwrap();
        let half = scenario(Scheme::SupcastBl, 15.0, 0.5);
        let plan = encode(&a, &half, &states(&half), 0).unwrap();
        assert_eq!(plan.slots(), 128);
        assert_eq!(plan.discarded_variance, 0.0);
        assert!((plan.radiated_power() - plan.p_total).abs() < 1e-9 * plan.p_total);

        let quarter = scenario(Scheme::SupcastBl, 15.0, 0.25);
        let plan = encode(&a, &quarter, &states(&quarter), 0).unwrap();
        assert_eq!(plan.slots(), 64);
        let mut vars: Vec<f64> = a.chunks.iter().map(|c| c.variance).collect();
        vars.sort_by(f64::total_cmp);
        let smallest: f64 = vars[..128].iter().sum();
        assert!((plan.discarded_variance - smallest).abs() <= 1e-9 * smallest);
    }

    #[test]
    fn softcast_plan_sizes() {
        let a = small_analysis(2);
        let total = a.chunks.len();
        let s = scenario(Scheme::Softcast, 15.0, 0.5);
        let plan = encode_softcast(&a, &s).unwrap();
        assert_eq!(plan.slots(), total / 2);
        let mut vars: Vec<f64> = a.chunks.iter().map(|c| c.variance).collect();
        vars.sort_by(f64::total_cmp);
        let smaller: f64 = vars[..total / 2].iter().sum();
        assert!((plan.discarded_variance - smaller).abs() <= 1e-9 * smaller);
        let full = encode_softcast(&a, &scenario(Scheme::Softcast, 15.0, 1.0)).unwrap();
        assert_eq!(full.slots(), total);
        assert!(full.discarded.is_empty());
    }

    #[test]
    fn constant_gop_puts_all_power_on_dc() {
        let gop = synthetic_gop(SyntheticKind::Constant(90.0), 64, 48, 4, 0).unwrap();
        let a = analyze_gop(&gop, 8).unwrap();
        assert_eq!(a.chunks.iter().filter(|c| c.variance > 1e-18).count(), 1);
        let s = scenario(Scheme::SupcastBl, 20.0, 0.5);
        let plan = encode(&a, &s, &states(&s), 0).unwrap();
        let Transmission::Superposed { layers, matching, scaling } = &plan.transmission else {
            panic!("superposed plan expected");
        };
        for (i, j) in matching.pairs() {
            let p = scaling[i].bl_power(layers.bl[i].variance) + scaling[i].el_power(layers.el[j].variance);
            if layers.bl[i].id == 0 {
                assert!((p - plan.p_total).abs() < 1e-9 * plan.p_total);
            } else {
                assert!(p < 1e-9 * plan.p_total);
            }
        }
    }

    #[test]
    fn noma_ra_single_pair_and_determinism() {
        let gop = synthetic_gop(SyntheticKind::MovingPattern, 16, 16, 2, 4).unwrap();
        let a = analyze_gop(&gop, 1).unwrap();
        let s = scenario(Scheme::NomaRa, 10.0, 1.0);
        let ra = encode_noma_ra(&a, &s, 5).unwrap();
        let sup = encode_supcast(&a, &s, &states(&s), Scheduler::Becma(Driver::Bl)).unwrap();
        let pick = |p: &TransmissionPlan| match &p.transmission {
            Transmission::Superposed { matching, .. } => matching.clone(),
            _ => unreachable!(),
        };
        assert_eq!(pick(&ra), pick(&sup));
        let b = small_analysis(6);
        assert_eq!(encode_noma_ra(&b, &s, 9).unwrap(), encode_noma_ra(&b, &s, 9).unwrap());
    }

    #[test]
    fn noiseless_users() {
        let a = small_analysis(7);
        let s = scenario(Scheme::SupcastBl, 300.0, 0.5);
        let st = states(&s);
        let plan = encode(&a, &s, &st, 0).unwrap();
        let mut r = rng::stream(1, &[]);
        let near = simulate_user(&plan, &a.source, &s.users[0], &st[0], false, &mut r).unwrap();
        assert!(near.psnr_db >= 100.0, "near PSNR {}", near.psnr_db);

        let far = simulate_user(&plan, &a.source, &s.users[2], &st[2], false, &mut r).unwrap();
        let Transmission::Superposed { layers, .. } = &plan.transmission else { unreachable!() };
        let el_energy: f64 = layers.el.iter().map(Chunk::energy).sum();
        let expected = el_energy / a.layout.num_coeffs() as f64;
        assert!((far.breakdown.undecodable_el - expected).abs() <= 1e-12 * expected);
        assert!((far.mse_total - expected).abs() <= 1e-6 * expected);
    }

    #[test]
    fn breakdown_sums_to_measured_mse() {
        let a = small_analysis(8);
        for scheme in [Scheme::SupcastBl, Scheme::Softcast, Scheme::NomaRa] {
            for beta in [0.25, 0.5] {
                let s = scenario(scheme, 12.0, beta);
                let st = states(&s);
                let plan = encode(&a, &s, &st, 1).unwrap();
                for (u, state) in s.users.iter().zip(&st) {
                    let mut r = rng::stream(2, &[u.id as u64]);
                    let out = simulate_user(&plan, &a.source, u, state, false, &mut r).unwrap();
                    let sum = out.breakdown.total();
                    assert!(
                        (sum - out.mse_total).abs() <= 1e-6 * out.mse_total,
                        "{scheme} {beta}: {sum} vs {}",
                        out.mse_total
                    );
                    if u.zone == Zone::Near || scheme == Scheme::Softcast {
                        assert_eq!(out.breakdown.undecodable_el, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn clamping_is_optional() {
        let a = small_analysis(9);
        let s = scenario(Scheme::Softcast, 0.0, 0.5);
        let st = states(&s);
        let plan = encode(&a, &s, &st, 0).unwrap();
        let raw = simulate_user(&plan, &a.source, &s.users[3], &st[3], false, &mut rng::stream(3, &[])).unwrap();
        let clamped = simulate_user(&plan, &a.source, &s.users[3], &st[3], true, &mut rng::stream(3, &[])).unwrap();
        assert!(clamped
            .reconstructed
            .frames()
            .iter()
            .flat_map(|f| f.samples())
            .all(|&v| (0.0..=255.0).contains(&v)));
        assert!(clamped.mse_total <= raw.mse_total);
    }

    #[test]
    fn exhaustive_scheme_respects_cap() {
        let a = small_analysis(10);
        let mut s = scenario(Scheme::SupcastExhaustive, 10.0, 0.5);
        let err = encode(&a, &s, &states(&s), 0).unwrap_err();
        assert!(matches!(err, Error::TooLarge { .. }));
        let gop = synthetic_gop(SyntheticKind::MovingPattern, 64, 64, 1, 3).unwrap();
        let small = analyze_gop(&gop, 4).unwrap();
        s.beta = 0.5;
        let plan = encode(&small, &s, &states(&s), 0).unwrap();
        assert_eq!(plan.slots(), 8);
    }

    #[test]
    fn single_cell_sweep_matches_direct_run() {
        let gop = synthetic_gop(SyntheticKind::MovingPattern, 64, 48, 4, 11).unwrap();
        let sweep = Sweep {
            schemes: vec![Scheme::SupcastBl],
            snr_db: vec![15.0],
            betas: vec![0.5],
            seeds: vec![42],
            ..Sweep::default()
        };
        let results = run_experiment(std::slice::from_ref(&gop), &sweep).unwrap();
        assert_eq!(results.len(), 1);

        let users = place_trial_users(&sweep.deployment, 42).unwrap();
        let gains = draw_gains(&users, 1, 42);
        let a = analyze_gop(&gop, 8).unwrap();
        let sigma2 = sigma2_for_snr(1.0, 15.0);
        let st: Vec<ChannelState> = gains[0].iter().map(|&h| ChannelState::new(h, sigma2).unwrap()).collect();
        let s = Scenario {
            users: users.clone(),
            snr_db: 15.0,
            beta: 0.5,
            chunks_per_side: 8,
            p_chunk: 1.0,
            scheme: Scheme::SupcastBl,
            seed: 42,
            clamp_pixels: false,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
        };
        let plan = encode(&a, &s, &st, rng::derive_seed(42, &[tag::SCHEDULE, 0])).unwrap();
        for (k, u) in users.iter().enumerate() {
            let mut noise = rng::stream(42, &[tag::NOISE, 0, u.id as u64]);
            let out = simulate_user(&plan, &gop, u, &st[k], false, &mut noise).unwrap();
            assert_eq!(out.psnr_db, results[0].users[k].psnr_db);
        }
    }

    #[test]
    fn summary_averages_over_seeds() {
        let gop = synthetic_gop(SyntheticKind::MovingPattern, 32, 32, 2, 1).unwrap();
        let sweep = Sweep {
            schemes: vec![Scheme::Softcast, Scheme::SupcastBl],
            snr_db: vec![10.0, 20.0],
            seeds: vec![1, 2, 3],
            chunks_per_side: 4,
            ..Sweep::default()
        };
        let results = run_experiment(&[gop], &sweep).unwrap();
        assert_eq!(results.len(), 12);
        assert_eq!(results[0].scheme, Scheme::Softcast);
        let cells = summarize(&results);
        assert_eq!(cells.len(), 4);
        assert!(cells.iter().all(|c| c.seeds == 3));
        let direct: f64 = results
            .iter()
            .filter(|r| r.scheme == Scheme::Softcast && r.snr_db == 10.0)
            .map(|r| r.mean_psnr(None))
            .sum::<f64>()
            / 3.0;
        assert!((cells[0].mean_psnr - direct).abs() < 1e-12);
    }
}
