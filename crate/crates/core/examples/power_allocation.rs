//! Two-stage power allocation for a few BL/EL pairs.

use num_complex::Complex64;
use supcast::power::{self, LinkParams};

fn main() -> supcast::Result<()> {
    let bl = [900.0, 120.0, 40.0];
    let el = [25.0, 9.0, 4.0];
    let p_total = 6.0;
    let link = LinkParams::new(Complex64::new(0.9, 0.2), Complex64::new(0.35, -0.1), 0.05, p_total)?;

    let pre = power::preallocate(&bl, &el, p_total)?;
    println!("stage one: BL {:.3?}  EL {:.3?}", pre.bl, pre.el);

    for i in 0..bl.len() {
        let budget = pre.pair(i, i).p_pair();
        let s = power::reallocate_pair(bl[i], el[i], budget, &link)?;
        println!(
            "pair {i}: budget {budget:.3} -> BL {:.3} W, EL {:.3} W, D = {:.4}",
            s.bl_power(bl[i]),
            s.el_power(el[i]),
            power::pair_distortion(bl[i], el[i], &s, &link)
        );
    }

    let g = power::softcast_allocate(&[bl.as_slice(), el.as_slice()].concat(), p_total)?;
    println!("orthogonal scaling factors {g:.4?}");
    Ok(())
}
