//! Bandwidth planning and the split of chunks into base and enhancement
//! layers.

use crate::error::{Error, Result};
use crate::transform::Chunk;

/// Chunks retained for superposed transmission, split by variance.
///
/// `bl[i]` has variance at least that of every `el[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPlan {
    pub bl: Vec<Chunk>,
    pub el: Vec<Chunk>,
    pub discarded: Vec<usize>,
    /// Sum of the variances of the discarded chunks.
    pub discarded_variance: f64,
}

impl LayerPlan {
    /// Number of BL/EL pairs (`M'`).
    pub fn m(&self) -> usize {
        self.bl.len()
    }

    pub fn bl_variances(&self) -> Vec<f64> {
        self.bl.iter().map(|c| c.variance).collect()
    }

    pub fn el_variances(&self) -> Vec<f64> {
        self.el.iter().map(|c| c.variance).collect()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::input(format!(
            "bandwidth compression ratio must lie in (0, 1], got {beta}"
        )));
    }
    Ok(())
}

/// Channel uses available for a GOP of `total_chunks` chunks of `chunk_len`
/// real coefficients each: `floor(beta * BW_s)` with `BW_s` counted in
/// complex symbols.
pub fn channel_bandwidth(total_chunks: usize, chunk_len: usize, beta: f64) -> Result<usize> {
    check_beta(beta)?;
    let source = total_chunks * chunk_len / 2;
    Ok((beta * source as f64 + 1e-9).floor() as usize)
}

/// Number of BL/EL pairs that fit the channel when every pair occupies the
/// `L/2` complex symbols of one chunk.
pub fn plan_bandwidth(total_chunks: usize, chunk_len: usize, beta: f64) -> Result<usize> {
    if total_chunks % 2 != 0 {
        return Err(Error::input(format!(
            "total chunk count must be even, got {total_chunks}"
        )));
    }
    if chunk_len == 0 || chunk_len % 2 != 0 {
        return Err(Error::input(format!(
            "chunk length must be a positive even number, got {chunk_len}"
        )));
    }
    let bw = channel_bandwidth(total_chunks, chunk_len, beta)?;
    Ok((bw / (chunk_len / 2)).min(total_chunks / 2))
}

/// Number of chunks an orthogonal (one chunk per slot) scheme can send.
pub fn orthogonal_capacity(total_chunks: usize, chunk_len: usize, beta: f64) -> Result<usize> {
    if chunk_len == 0 || chunk_len % 2 != 0 {
        return Err(Error::input(format!(
            "chunk length must be a positive even number, got {chunk_len}"
        )));
    }
    let bw = channel_bandwidth(total_chunks, chunk_len, beta)?;
    Ok((bw / (chunk_len / 2)).min(total_chunks))
}

/// Sorts by descending variance, ties by ascending id.
pub fn sort_by_importance(chunks: &mut [Chunk]) {
    chunks.sort_by(|a, b| b.variance.total_cmp(&a.variance).then(a.id.cmp(&b.id)));
}

/// Keeps the `keep` most important chunks; returns `(kept, dropped)`.
pub fn retain_most_important(mut chunks: Vec<Chunk>, keep: usize) -> (Vec<Chunk>, Vec<Chunk>) {
    sort_by_importance(&mut chunks);
    let dropped = chunks.split_off(keep.min(chunks.len()));
    (chunks, dropped)
}

/// Keeps the top `2 * m_prime` chunks by variance; the first half becomes the
/// base layer, the second half the enhancement layer.
pub fn bisect_layers(chunks: Vec<Chunk>, m_prime: usize) -> Result<LayerPlan> {
    if m_prime == 0 {
        return Err(Error::input("nothing to transmit: zero chunk pairs fit the channel"));
    }
    if chunks.len() < 2 * m_prime {
        return Err(Error::input(format!(
            "{} chunks cannot fill {m_prime} pairs",
            chunks.len()
        )));
    }
    let (mut kept, dropped) = retain_most_important(chunks, 2 * m_prime);
    let el = kept.split_off(m_prime);
    Ok(LayerPlan {
        bl: kept,
        el,
        discarded_variance: dropped.iter().map(|c| c.variance).sum(),
        discarded: dropped.into_iter().map(|c| c.id).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::ChunkOrigin;
    use proptest::prelude::*;

    fn chunk(id: usize, variance: f64) -> Chunk {
        Chunk {
            id,
            origin: ChunkOrigin { plane: 0, row: 0, col: id },
            coeffs: vec![variance.sqrt(); 2],
            variance,
        }
    }

    fn chunks(vars: &[f64]) -> Vec<Chunk> {
        vars.iter().enumerate().map(|(i, &v)| chunk(i, v)).collect()
    }

    #[test]
    fn cif_bandwidth_arithmetic() {
        assert_eq!(channel_bandwidth(256, 1584, 0.5).unwrap(), 101_376);
        assert_eq!(plan_bandwidth(256, 1584, 0.5).unwrap(), 128);
        assert_eq!(plan_bandwidth(256, 1584, 0.25).unwrap(), 64);
        assert_eq!(plan_bandwidth(256, 1584, 1.0).unwrap(), 128);
        assert_eq!(orthogonal_capacity(256, 1584, 0.5).unwrap(), 128);
        assert_eq!(orthogonal_capacity(256, 1584, 1.0).unwrap(), 256);
    }

    #[test]
    fn bandwidth_rejects_bad_inputs() {
        assert!(plan_bandwidth(256, 1584, 0.0).is_err());
        assert!(plan_bandwidth(256, 1584, -0.1).is_err());
        assert!(plan_bandwidth(256, 1584, 1.5).is_err());
        assert!(plan_bandwidth(255, 1584, 0.5).is_err());
        assert!(plan_bandwidth(256, 1583, 0.5).is_err());
    }

    #[test]
    fn bisect_without_dropping() {
        let plan = bisect_layers(chunks(&[1.0, 9.0, 0.25, 4.0]), 2).unwrap();
        assert_eq!(plan.bl_variances(), vec![9.0, 4.0]);
        assert_eq!(plan.el_variances(), vec![1.0, 0.25]);
        assert!(plan.discarded.is_empty());
    }

    #[test]
    fn bisect_with_dropping() {
        let plan = bisect_layers(chunks(&[9.0, 4.0, 1.0, 0.25]), 1).unwrap();
        assert_eq!(plan.bl_variances(), vec![9.0]);
        assert_eq!(plan.el_variances(), vec![4.0]);
        assert_eq!(plan.discarded, vec![2, 3]);
        assert_eq!(plan.discarded_variance, 1.25);
    }

    #[test]
    fn ties_follow_ids() {
        let plan = bisect_layers(chunks(&[2.0; 6]), 2).unwrap();
        assert_eq!(plan.bl.iter().map(|c| c.id).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(plan.el.iter().map(|c| c.id).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(plan.discarded, vec![4, 5]);
        let bl: f64 = plan.bl_variances().iter().sum();
        let el: f64 = plan.el_variances().iter().sum();
        assert_eq!(bl, el);
    }

    #[test]
    fn bisect_errors() {
        assert!(bisect_layers(chunks(&[1.0, 2.0]), 0).is_err());
        assert!(bisect_layers(chunks(&[1.0, 2.0]), 2).is_err());
    }

    proptest! {
        #[test]
        fn layer_invariants(vars in prop::collection::vec(0.0f64..100.0, 2..40), frac in 0.05f64..1.0, rot in 0usize..40) {
            let m = ((vars.len() / 2) as f64 * frac).ceil().max(1.0) as usize;
            let total: f64 = vars.iter().sum();
            let plan = bisect_layers(chunks(&vars), m).unwrap();
            prop_assert_eq!(plan.bl.len(), m);
            prop_assert_eq!(plan.el.len(), m);
            let min_bl = plan.bl_variances().into_iter().fold(f64::INFINITY, f64::min);
            let max_el = plan.el_variances().into_iter().fold(0.0, f64::max);
            prop_assert!(min_bl >= max_el);
            let bl: f64 = plan.bl_variances().iter().sum();
            let el: f64 = plan.el_variances().iter().sum();
            prop_assert!(bl >= el);
            prop_assert!((plan.discarded_variance - (total - bl - el)).abs() <= 1e-9 * total.max(1.0));
            let mut ids: Vec<usize> = plan.bl.iter().chain(&plan.el).map(|c| c.id).chain(plan.discarded.iter().copied()).collect();
            ids.sort_unstable();
            prop_assert_eq!(ids, (0..vars.len()).collect::<Vec<_>>());

            let mut rotated = chunks(&vars);
            let k = rot % rotated.len();
            rotated.rotate_left(k);
            prop_assert_eq!(bisect_layers(rotated, m).unwrap(), plan);
        }
    }
}
