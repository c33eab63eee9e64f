//! Mean PSNR per scheme across an SNR sweep on synthetic CIF video.
//!
//! `cargo run --release --example snr_sweep -- [seeds] [beta] [chunks_per_side]`

use supcast::pipeline::{self, Scheme, Sweep};
use supcast::video_io::{synthetic_video, SyntheticKind};

fn main() -> supcast::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map_or(5, |s| s.parse().expect("seed count"));
    let beta: f64 = args.next().map_or(0.5, |s| s.parse().expect("beta"));
    let n_c: usize = args.next().map_or(8, |s| s.parse().expect("chunks per side"));

    let video = synthetic_video(SyntheticKind::MovingPattern, 352, 288, 4, 4, 1)?;
    let sweep = Sweep {
        schemes: vec![Scheme::SupcastBl, Scheme::SupcastEl, Scheme::Softcast, Scheme::NomaRa],
        betas: vec![beta],
        seeds: (1..=seeds).collect(),
        chunks_per_side: n_c,
        ..Sweep::default()
    };
    let results = pipeline::run_experiment(&video, &sweep)?;
    println!("{:<12} {:>6} {:>9} {:>9} {:>9} {:>8}", "scheme", "snr", "all", "near", "far", "stderr");
    for c in pipeline::summarize(&results) {
        println!(
            "{:<12} {:>6.1} {:>9.2} {:>9.2} {:>9.2} {:>8.3}",
            c.scheme.as_str(),
            c.snr_db,
            c.mean_psnr,
            c.mean_psnr_near,
            c.mean_psnr_far,
            c.std_err
        );
    }
    Ok(())
}
