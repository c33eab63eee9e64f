//! 3D-DCT a synthetic CIF GOP, cut it into chunks, then rebuild it.

use supcast::transform::{assemble_chunks, forward_3d_dct, inverse_3d_dct, partition_chunks};
use supcast::video_io::{psnr, synthetic_gop, SyntheticKind};

fn main() -> supcast::Result<()> {
    let gop = synthetic_gop(SyntheticKind::MovingPattern, 352, 288, 4, 7)?;
    let vol = forward_3d_dct(&gop);
    let pixel_energy: f64 = gop.frames().iter().flat_map(|f| f.samples()).map(|v| v * v).sum();
    println!("pixel energy {pixel_energy:.6e}, coefficient energy {:.6e}", vol.energy());

    let (layout, chunks) = partition_chunks(&vol, 8)?;
    println!(
        "{} chunks of {}x{} coefficients",
        layout.num_chunks(),
        layout.chunk_width(),
        layout.chunk_height()
    );
    let mut by_var: Vec<_> = chunks.iter().map(|c| (c.variance, c.id)).collect();
    by_var.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (v, id) in by_var.iter().take(5) {
        println!("  chunk {id:3} {:?}: variance {v:.2}", layout.origin(*id));
    }

    let rebuilt = inverse_3d_dct(&assemble_chunks(&chunks, &layout)?);
    println!("round-trip PSNR {:.1} dB", psnr(&gop, &rebuilt)?);
    Ok(())
}
