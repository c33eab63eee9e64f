//! How many chunk pairs fit the channel, and how chunks split into layers.

use supcast::layering::{bisect_layers, channel_bandwidth, orthogonal_capacity, plan_bandwidth};
use supcast::pipeline::analyze_gop;
use supcast::video_io::{synthetic_gop, SyntheticKind};

fn main() -> supcast::Result<()> {
    let gop = synthetic_gop(SyntheticKind::MovingPattern, 352, 288, 4, 3)?;
    let a = analyze_gop(&gop, 8)?;
    let (n, len) = (a.chunks.len(), a.layout.chunk_len());
    for beta in [0.125, 0.25, 0.5, 1.0] {
        let pairs = plan_bandwidth(n, len, beta)?;
        let plan = bisect_layers(a.chunks.clone(), pairs)?;
        let bl: f64 = plan.bl_variances().iter().sum();
        let el: f64 = plan.el_variances().iter().sum();
        println!(
            "beta {beta:5}: {:6} symbols, {pairs:3} pairs (orthogonal: {:3} chunks), \
             BL var {bl:10.1}, EL var {el:8.1}, discarded {} chunks / var {:.1}",
            channel_bandwidth(n, len, beta)?,
            orthogonal_capacity(n, len, beta)?,
            plan.discarded.len(),
            plan.discarded_variance
        );
    }
    Ok(())
}
