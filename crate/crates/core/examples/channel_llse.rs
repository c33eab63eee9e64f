//! Superposed transmission over one fading link, decoded as a near and as a
//! far user, compared with the closed-form distortions.

use rand_distr::{Distribution, StandardNormal};
use supcast::channel::{pack_complex, receive_far, receive_near, transmit_pair, ChannelState};
use supcast::power::{distortion_far, distortion_near};
use supcast::rng;

fn main() -> supcast::Result<()> {
    let (lb, le, g_bl, g_el) = (4.0, 1.0, 0.6, 0.5);
    let h = num_complex::Complex64::from_polar(0.8, 1.1);
    let state = ChannelState::new(h, 0.05)?;
    let mut r = rng::stream(11, &[]);
    let mut draw = |var: f64| -> Vec<f64> {
        (0..200_000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut r);
                z * var.sqrt()
            })
            .collect()
    };
    let (bl, el) = (draw(lb), draw(le));
    let (bs, es) = (pack_complex(&bl)?, pack_complex(&el)?);
    let mut noise = rng::stream(12, &[]);
    let y = transmit_pair(&bs, &es, g_bl, g_el, &state, &mut noise)?;

    let mse = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64;
    let far = receive_far(&y, g_bl, g_el, lb, le, &state);
    let (_, near_el) = receive_near(&y, &bs, g_bl, g_el, lb, le, &state)?;
    println!(
        "far BL  MSE {:.4} (model {:.4})",
        mse(&far, &bl),
        distortion_far(lb, le, g_bl, g_el, h.norm(), 0.05)
    );
    println!(
        "near EL MSE {:.4} (model {:.4})",
        mse(&near_el, &el),
        distortion_near(le, g_el, h.norm(), 0.05)
    );
    Ok(())
}
