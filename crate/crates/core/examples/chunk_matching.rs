//! BL-driven and EL-driven matching against the exhaustive optimum.

use supcast::matching::{
    becma_with_stats, exhaustive_match, is_stable, random_match, total_distortion, DistortionMatrix, Driver,
};
use supcast::verify::pipeline_instance;

fn main() -> supcast::Result<()> {
    let d = DistortionMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 0.5]])?;
    let out = becma_with_stats(&d, Driver::Bl);
    println!("2x2: {:?}, total {}", out.matching.as_slice(), total_distortion(&out.matching, &d));

    for seed in 1..=5 {
        let d = pipeline_instance(7, seed)?;
        let best = total_distortion(&exhaustive_match(&d, 9)?, &d);
        let bl = becma_with_stats(&d, Driver::Bl);
        let el = becma_with_stats(&d, Driver::El);
        let ra = total_distortion(&random_match(7, seed), &d);
        println!(
            "seed {seed}: exhaustive {best:.3}, BL {:.3} ({} proposals, stable {}), EL {:.3}, random {ra:.3}",
            total_distortion(&bl.matching, &d),
            bl.proposals,
            is_stable(&bl.matching, &d),
            total_distortion(&el.matching, &d),
        );
    }
    Ok(())
}
