//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.
//!
//! Oracles here are written independently of the library: a blocking-pair
//! scan, permutation enumeration, a fine grid over the power split, a
//! bisection Lagrangian solver and closed-form LLSE errors.

use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use supcast::channel::{self, ChannelState};
use supcast::matching::{self, DistortionMatrix, Driver};
use supcast::pipeline::{self, RunResult, Scheme, Sweep};
use supcast::power::{self, LinkParams};
use supcast::rng;
use supcast::transform::{forward_3d_dct, inverse_3d_dct};
use supcast::verify::pipeline_instance;
use supcast::video_io::{self, Frame, Gop, SyntheticKind};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn uniform_matrix(m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..m).map(|_| (0..m).map(|_| rng.random_range(0.0..1.0)).collect()).collect()
}

/// Blocking pair: both sides strictly prefer each other to their partners.
fn has_blocking_pair(d: &[Vec<f64>], bl_to_el: &[usize]) -> bool {
    let m = d.len();
    let mut el_to_bl = vec![0; m];
    for (i, &j) in bl_to_el.iter().enumerate() {
        el_to_bl[j] = i;
    }
    (0..m).any(|i| (0..m).any(|j| d[i][j] < d[i][bl_to_el[i]] && d[i][j] < d[el_to_bl[j]][j]))
}

fn matching_stability() -> Outcome {
    let mut r = rng::stream(101, &[]);
    let (mut violations, mut runs) = (0, 0);
    for _ in 0..1000 {
        let m = r.random_range(2..=32);
        let rows = uniform_matrix(m, &mut r);
        let d = DistortionMatrix::from_rows(&rows).unwrap();
        for driver in [Driver::Bl, Driver::El] {
            let out = matching::becma_with_stats(&d, driver);
            runs += 1;
            if has_blocking_pair(&rows, out.matching.as_slice()) || out.proposals > m * m {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{violations} violations in {runs} runs"))
}

/// Minimum total over all permutations (Heap's algorithm).
fn brute_force_min(d: &DistortionMatrix) -> f64 {
    let m = d.m();
    let mut perm: Vec<usize> = (0..m).collect();
    let total = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| d.get(i, j)).sum::<f64>();
    let mut best = total(&perm);
    let mut c = vec![0; m];
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(total(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

struct OptimalityStats {
    within: f64,
    mean_gap: f64,
    driver_diff: f64,
}

fn optimality_stats() -> OptimalityStats {
    let n = 500;
    let (mut within, mut gap, mut diff) = (0, 0.0, 0.0);
    for k in 0..n {
        let d = pipeline_instance(7, 7_000 + k).unwrap();
        let best = brute_force_min(&d);
        let bl = matching::total_distortion(&matching::becma(&d, Driver::Bl), &d);
        let el = matching::total_distortion(&matching::becma(&d, Driver::El), &d);
        if bl <= 1.05 * best {
            within += 1;
        }
        gap += bl / best - 1.0;
        diff += (bl - el).abs() / best;
    }
    OptimalityStats {
        within: within as f64 / n as f64,
        mean_gap: gap / n as f64,
        driver_diff: diff / n as f64,
    }
}

/// Fine grid over `(P_BL, P_EL)` on the feasible set, zooming until the step
/// is `1e-4 * p`.
fn grid_min(lb: f64, le: f64, p: f64, hn: f64, hf: f64, s2: f64) -> f64 {
    let objective = |pb: f64, pe: f64| {
        let dn = le * s2 / (hn * hn * pe + s2);
        let df = lb * (hf * hf * pe + s2) / (hf * hf * (pb + pe) + s2);
        dn + df
    };
    let steps = 200;
    let (mut b0, mut b1, mut e0, mut e1) = (0.0, p, 0.0, p / 2.0);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    loop {
        let (sb, se) = ((b1 - b0) / steps as f64, (e1 - e0) / steps as f64);
        for a in 0..=steps {
            for b in 0..=steps {
                let (pb, pe) = (b0 + a as f64 * sb, e0 + b as f64 * se);
                if pe <= pb && pb + pe <= p * (1.0 + 1e-15) {
                    let v = objective(pb, pe);
                    if v < best.0 {
                        best = (v, pb, pe);
                    }
                }
            }
        }
        if sb.max(se) <= 1e-4 * p {
            return best.0;
        }
        b0 = (best.1 - 4.0 * sb).max(0.0);
        b1 = (best.1 + 4.0 * sb).min(p);
        e0 = (best.2 - 4.0 * se).max(0.0);
        e1 = (best.2 + 4.0 * se).min(p / 2.0);
    }
}

fn reallocation_optimality() -> Outcome {
    let mut r = rng::stream(104, &[]);
    let (mut worst, mut broken) = (0.0f64, 0);
    for _ in 0..200 {
        let le = 10f64.powf(r.random_range(-1.0..3.0));
        let lb = le * 10f64.powf(r.random_range(0.0..2.5));
        let p = 10f64.powf(r.random_range(-1.0..1.0));
        let hn = 10f64.powf(r.random_range(-1.0..0.3));
        let hf = hn * r.random_range(0.02..1.0);
        let s2 = 10f64.powf(r.random_range(-3.0..0.0));
        let link = LinkParams::new(
            Complex64::from_polar(hn, r.random_range(0.0..6.28)),
            Complex64::from_polar(hf, r.random_range(0.0..6.28)),
            s2,
            p,
        )
        .unwrap();
        let s = power::reallocate_pair(lb, le, p, &link).unwrap();
        let (pb, pe) = (s.bl_power(lb), s.el_power(le));
        let achieved = le * s2 / (hn * hn * pe + s2) + lb * (hf * hf * pe + s2) / (hf * hf * (pb + pe) + s2);
        worst = worst.max(achieved / grid_min(lb, le, p, hn, hf, s2) - 1.0);
        let tol = 1e-12 * p;
        if pb + pe > p + tol || pe > pb + tol || (pb + pe - p).abs() > tol {
            broken += 1;
        }
    }
    outcome(
        worst <= 0.01 && broken == 0,
        format!("worst excess over grid {:.2e} (<= 1e-2), constraint violations {broken}", worst.max(0.0)),
    )
}

fn normals(r: &mut ChaCha8Rng, n: usize, var: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut *r);
            z * var.sqrt()
        })
        .collect()
}

fn distortion_model() -> Outcome {
    let mut r = rng::stream(105, &[]);
    let n = 1_000_000;
    let (mut near_dev, mut far_dev) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let le = 10f64.powf(r.random_range(-1.0..2.0));
        let lb = le * 10f64.powf(r.random_range(0.0..2.0));
        let p = r.random_range(0.5..4.0);
        let pe = p * r.random_range(0.0..0.5);
        let (g_bl, g_el) = (((p - pe) / lb).sqrt(), (pe / le).sqrt());
        let h = Complex64::from_polar(10f64.powf(r.random_range(-1.0..0.0)), r.random_range(0.0..6.28));
        let s2 = 10f64.powf(r.random_range(-2.5..0.0));
        let a = h.norm_sqr();

        let (bl, el) = (normals(&mut r, n, lb), normals(&mut r, n, le));
        let bs = channel::pack_complex(&bl).unwrap();
        let es = channel::pack_complex(&el).unwrap();
        let state = ChannelState::new(h, s2).unwrap();
        let y = channel::transmit_pair(&bs, &es, g_bl, g_el, &state, &mut r).unwrap();
        let (_, el_hat) = channel::receive_near(&y, &bs, g_bl, g_el, lb, le, &state).unwrap();
        let bl_hat = channel::receive_far(&y, g_bl, g_el, lb, le, &state);
        let mse = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / x.len() as f64;

        let near_model = le * s2 / (a * g_el * g_el * le + s2);
        let interference = a * g_el * g_el * le + s2;
        let far_model = lb * interference / (a * g_bl * g_bl * lb + interference);
        near_dev = near_dev.max((mse(&el_hat, &el) / near_model - 1.0).abs());
        far_dev = far_dev.max((mse(&bl_hat, &bl) / far_model - 1.0).abs());
    }
    outcome(
        near_dev <= 0.03 && far_dev <= 0.03,
        format!("20 sets each, worst deviation near {near_dev:.4}, far {far_dev:.4} (<= 0.03)"),
    )
}

/// Minimizes `Σ λ_k / P_k` subject to `Σ P_k = P` by bisection on the
/// multiplier: `P_k(ν) = √(λ_k / ν)`.
fn lagrangian_oracle(lambdas: &[f64], p: f64) -> Vec<f64> {
    let spend = |nu: f64| lambdas.iter().map(|l| (l / nu).sqrt()).sum::<f64>();
    let (mut lo, mut hi) = (1e-30f64, 1e30f64);
    for _ in 0..400 {
        let mid = (lo * hi).sqrt();
        if spend(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let nu = (lo * hi).sqrt();
    lambdas.iter().map(|l| (l / nu).sqrt()).collect()
}

fn preallocation() -> Outcome {
    let mut r = rng::stream(106, &[]);
    let (mut sum_err, mut oracle_err) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let m = r.random_range(1..=64);
        let bl: Vec<f64> = (0..m).map(|_| 10f64.powf(r.random_range(-2.0..5.0))).collect();
        let el: Vec<f64> = (0..m).map(|_| 10f64.powf(r.random_range(-2.0..3.0))).collect();
        let p = r.random_range(0.5..500.0);
        let pre = power::preallocate(&bl, &el, p).unwrap();
        sum_err = sum_err.max((pre.total() - p).abs() / p);
        let all: Vec<f64> = bl.iter().chain(&el).copied().collect();
        let oracle = lagrangian_oracle(&all, p);
        for (got, want) in pre.bl.iter().chain(&pre.el).zip(&oracle) {
            oracle_err = oracle_err.max((got - want).abs() / want);
        }
    }
    outcome(
        sum_err <= 1e-9 && oracle_err <= 1e-3,
        format!("budget sum error {sum_err:.2e} (<= 1e-9), worst deviation from Lagrangian {oracle_err:.2e} (<= 1e-3)"),
    )
}

fn transform_fidelity() -> Outcome {
    let mut r = rng::stream(107, &[]);
    let (mut worst_psnr, mut worst_parseval) = (f64::INFINITY, 0.0f64);
    for _ in 0..100 {
        let (w, h, t) = (r.random_range(1..=48), r.random_range(1..=40), r.random_range(1..=6));
        let frames = (0..t)
            .map(|_| Frame::new(w, h, (0..w * h).map(|_| r.random_range(0.0..255.0)).collect()).unwrap())
            .collect();
        let gop = Gop::new(frames).unwrap();
        let vol = forward_3d_dct(&gop);
        let pixel: f64 = gop.frames().iter().flat_map(|f| f.samples()).map(|v| v * v).sum();
        worst_parseval = worst_parseval.max((vol.energy() - pixel).abs() / pixel);
        worst_psnr = worst_psnr.min(video_io::psnr(&gop, &inverse_3d_dct(&vol)).unwrap());
    }
    outcome(
        worst_psnr >= 100.0 && worst_parseval <= 1e-6,
        format!("100 GOPs, worst round-trip {worst_psnr:.1} dB (>= 100), worst Parseval error {worst_parseval:.2e} (<= 1e-6)"),
    )
}

const SEEDS: u64 = 20;

fn cif_video() -> Vec<Gop> {
    video_io::synthetic_video(SyntheticKind::MovingPattern, 352, 288, 4, 4, 1).unwrap()
}

fn sweep(schemes: Vec<Scheme>, snr: Vec<f64>, beta: f64, n_c: usize) -> Sweep {
    Sweep {
        schemes,
        snr_db: snr,
        betas: vec![beta],
        seeds: (1..=SEEDS).collect(),
        chunks_per_side: n_c,
        ..Sweep::default()
    }
}

/// All-user mean PSNR averaged over seeds.
fn mean_psnr(results: &[RunResult], scheme: Scheme, snr: f64) -> f64 {
    let cell: Vec<f64> = results
        .iter()
        .filter(|r| r.scheme == scheme && r.snr_db == snr)
        .map(|r| r.mean_psnr(None))
        .collect();
    assert!(!cell.is_empty(), "no results for {scheme} at {snr} dB");
    cell.iter().sum::<f64>() / cell.len() as f64
}

const SNRS: [f64; 5] = [5.0, 10.0, 15.0, 20.0, 25.0];

fn scheme_ordering(results: &[RunResult]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for snr in SNRS {
        let (s, n, o) = (
            mean_psnr(results, Scheme::SupcastBl, snr),
            mean_psnr(results, Scheme::NomaRa, snr),
            mean_psnr(results, Scheme::Softcast, snr),
        );
        ok &= s >= n;
        parts.push(format!("{snr:.0}dB sup {s:.2}/ra {n:.2}/soft {o:.2}"));
    }
    let gap = mean_psnr(results, Scheme::SupcastBl, 25.0) - mean_psnr(results, Scheme::Softcast, 25.0);
    ok &= gap >= 1.0;
    outcome(ok, format!("{}; gap over softcast at 25 dB {gap:.2} (>= 1)", parts.join(", ")))
}

/// Optional check on real sequences: headerless 8-bit CIF luma files in
/// `SUPCAST_XIPH_DIR`.
fn xiph_trend() -> Option<Outcome> {
    let dir = std::env::var_os("SUPCAST_XIPH_DIR")?;
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Some(outcome(false, format!("no sequences found in {}", dir.to_string_lossy())));
    }
    let mut sums = [[0.0; 2]; 2];
    for f in &files {
        let mut gops = match video_io::load_raw_video(f, 352, 288, 4) {
            Ok(g) => g,
            Err(e) => return Some(outcome(false, e.to_string())),
        };
        gops.truncate(8);
        let s = Sweep {
            seeds: (1..=5).collect(),
            ..sweep(vec![Scheme::SupcastBl, Scheme::Softcast], vec![15.0, 25.0], 0.5, 8)
        };
        let res = pipeline::run_experiment(&gops, &s).unwrap();
        for (k, snr) in [15.0, 25.0].into_iter().enumerate() {
            sums[k][0] += mean_psnr(&res, Scheme::SupcastBl, snr);
            sums[k][1] += mean_psnr(&res, Scheme::Softcast, snr);
        }
    }
    let n = files.len() as f64;
    let avg = sums.map(|r| r.map(|v| v / n));
    let reference = [[41.41, 39.59], [45.39, 41.16]];
    let mut ok = avg[0][0] - avg[0][1] >= 1.0 && avg[1][0] - avg[1][1] >= 3.0;
    for k in 0..2 {
        for s in 0..2 {
            ok &= (avg[k][s] - reference[k][s]).abs() <= 1.5;
        }
    }
    Some(outcome(
        ok,
        format!(
            "{} sequences: 15 dB sup {:.2}/soft {:.2}, 25 dB sup {:.2}/soft {:.2}",
            files.len(),
            avg[0][0],
            avg[0][1],
            avg[1][0],
            avg[1][1]
        ),
    ))
}

fn beta_behaviour(half: &[RunResult], quarter: &[RunResult]) -> Outcome {
    let gains = |res: &[RunResult]| {
        let p = |snr| mean_psnr(res, Scheme::SupcastBl, snr);
        (p(15.0) - p(10.0), p(25.0) - p(20.0))
    };
    let (q_low, q_high) = gains(quarter);
    let (h_low, h_high) = gains(half);
    let ratio = h_low.min(h_high) / h_low.max(h_high);
    outcome(
        q_high < q_low && ratio >= 0.5,
        format!(
            "beta 0.25 gains 10->15 {q_low:.2}, 20->25 {q_high:.2}; beta 0.5 gains {h_low:.2}, {h_high:.2} (ratio {ratio:.2} >= 0.5)"
        ),
    )
}

fn chunk_size_trend(video: &[Gop], at_8: &[RunResult]) -> Outcome {
    let run = |n_c| pipeline::run_experiment(video, &sweep(vec![Scheme::SupcastBl], vec![20.0], 0.5, n_c)).unwrap();
    let p4 = mean_psnr(&run(4), Scheme::SupcastBl, 20.0);
    let p8 = mean_psnr(at_8, Scheme::SupcastBl, 20.0);
    let p16 = mean_psnr(&run(16), Scheme::SupcastBl, 20.0);
    outcome(
        p16 >= p8 && p8 >= p4 && p16 - p8 < p8 - p4,
        format!(
            "N_c 4/8/16: {p4:.2}/{p8:.2}/{p16:.2} dB, steps {:.2} then {:.2}",
            p8 - p4,
            p16 - p8
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_supcast"))
            .args(["run", "--width", "176", "--height", "144", "--seeds", "9", "--snr", "10,25", "--out"])
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(&path).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    outcome(a == b && !a.is_empty(), format!("two runs, {} bytes each, identical: {}", a.len(), a == b))
}

fn report(id: &str, name: &str, o: &Outcome, failures: &mut Vec<String>, started: Instant) {
    let status = if o.passed { "PASS" } else { "FAIL" };
    println!("[{status}] {id:>3} {name}: {} ({:.1}s)", o.detail, started.elapsed().as_secs_f64());
    if !o.passed {
        failures.push(id.to_string());
    }
}

fn main() -> ExitCode {
    let mut failures = Vec::new();
    let mut t = Instant::now();

    report("1", "matching stability", &matching_stability(), &mut failures, t);

    t = Instant::now();
    let stats = optimality_stats();
    let near_opt = outcome(
        stats.within >= 0.95 && stats.mean_gap <= 0.02,
        format!(
            "500 instances, within 5%: {:.3} (>= 0.95), mean gap {:.2e} (<= 0.02)",
            stats.within, stats.mean_gap
        ),
    );
    report("2", "near-optimality vs exhaustive", &near_opt, &mut failures, t);
    let drivers = outcome(
        stats.driver_diff <= 0.02,
        format!("mean relative BL/EL difference {:.2e} (<= 0.02)", stats.driver_diff),
    );
    report("3", "driver similarity", &drivers, &mut failures, t);

    t = Instant::now();
    report("4", "re-allocation optimality", &reallocation_optimality(), &mut failures, t);
    t = Instant::now();
    report("5", "distortion model", &distortion_model(), &mut failures, t);
    t = Instant::now();
    report("6", "pre-allocation", &preallocation(), &mut failures, t);
    t = Instant::now();
    report("7", "transform fidelity", &transform_fidelity(), &mut failures, t);

    t = Instant::now();
    let video = cif_video();
    let main_sweep = pipeline::run_experiment(
        &video,
        &sweep(vec![Scheme::SupcastBl, Scheme::Softcast, Scheme::NomaRa], SNRS.to_vec(), 0.5, 8),
    )
    .unwrap();
    report("8", "scheme ordering", &scheme_ordering(&main_sweep), &mut failures, t);
    t = Instant::now();
    match xiph_trend() {
        Some(o) => report("8b", "sequence averages", &o, &mut failures, t),
        None => println!("[SKIP]  8b sequence averages: SUPCAST_XIPH_DIR not set"),
    }

    t = Instant::now();
    let quarter = pipeline::run_experiment(
        &video,
        &sweep(vec![Scheme::SupcastBl], vec![10.0, 15.0, 20.0, 25.0], 0.25, 8),
    )
    .unwrap();
    report("9", "beta behaviour", &beta_behaviour(&main_sweep, &quarter), &mut failures, t);

    t = Instant::now();
    report("10", "chunk-size trend", &chunk_size_trend(&video, &main_sweep), &mut failures, t);
    t = Instant::now();
    report("11", "determinism", &determinism(), &mut failures, t);

    if failures.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {}", failures.join(", "));
        ExitCode::FAILURE
    }
}
