//! One GOP, one trial: encode with each scheme and report every user.

use supcast::channel::ChannelState;
use supcast::pipeline::{self, Deployment, Scenario, Scheme};
use supcast::rng::{self, tag};
use supcast::video_io::{synthetic_gop, SyntheticKind};

fn main() -> supcast::Result<()> {
    let gop = synthetic_gop(SyntheticKind::MovingPattern, 352, 288, 4, 1)?;
    let analysis = pipeline::analyze_gop(&gop, 8)?;
    let seed = 5;
    let users = pipeline::place_trial_users(&Deployment::default(), seed)?;
    let gains = pipeline::draw_gains(&users, 1, seed);

    for scheme in [Scheme::SupcastBl, Scheme::Softcast, Scheme::NomaRa] {
        let scenario = Scenario {
            users: users.clone(),
            snr_db: 20.0,
            beta: 0.5,
            chunks_per_side: 8,
            p_chunk: 1.0,
            scheme,
            seed,
            clamp_pixels: false,
            exhaustive_cap: 9,
        };
        let states = gains[0]
            .iter()
            .map(|&h| ChannelState::new(h, scenario.sigma2()))
            .collect::<supcast::Result<Vec<_>>>()?;
        let plan = pipeline::encode(&analysis, &scenario, &states, rng::derive_seed(seed, &[tag::SCHEDULE]))?;
        println!("{scheme}: {} slots, {:.1} W radiated", plan.slots(), plan.radiated_power());
        for (u, st) in users.iter().zip(&states) {
            let mut noise = rng::stream(seed, &[tag::NOISE, 0, u.id as u64]);
            let out = pipeline::simulate_user(&plan, &gop, u, st, false, &mut noise)?;
            println!(
                "  user {} {:4} {:5.0} m |h|={:.3}: {:5.2} dB (llse {:.2}, discarded {:.2}, EL lost {:.2})",
                u.id,
                u.zone.as_str(),
                u.distance_m,
                st.h.norm(),
                out.psnr_db,
                out.breakdown.llse,
                out.breakdown.discarded,
                out.breakdown.undecodable_el
            );
        }
    }
    Ok(())
}
