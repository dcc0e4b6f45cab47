//! Dynamic average consensus: tracking a time-varying network average.

use crate::error::Result;
use crate::network::mixing::{column_means, MixingScheme, Stack};

/// One tracking update `s ← mix(s_prev) + g_new − g_old` using the scheme's
/// tracked-gradient matrix. Because mixing preserves column sums exactly,
/// the column sums of the output equal those of `g_new` whenever the input
/// satisfied the identity against `g_old`; each agent's row therefore keeps
/// chasing the network-average of the time-varying signal.
///
/// Returns the updated stack and the communication rounds consumed.
pub fn track_update(
    scheme: &MixingScheme,
    s_prev: &Stack,
    g_new: &Stack,
    g_old: &Stack,
) -> Result<(Stack, usize)> {
    let (mut mixed, rounds) = scheme.mix_tracked(s_prev)?;
    mixed += g_new;
    mixed -= g_old;
    Ok((mixed, rounds))
}

/// Disagreement of a stack from its network average:
/// `‖V − 1·v̄ᵀ‖_F`, the stacked-vector norm of each row's deviation from
/// the column means.
pub fn consensus_error(v: &Stack) -> f64 {
    let means = column_means(v);
    let mut sq = 0.0;
    for i in 0..v.nrows() {
        for j in 0..v.ncols() {
            let dev = v[(i, j)] - means[j];
            sq += dev * dev;
        }
    }
    sq.sqrt()
}

/// Relative discrepancy between the column sums of the tracked stack and
/// the signal it should track, guarded so it degrades to an absolute
/// measure when the signal itself vanishes.
pub fn tracking_discrepancy(s: &Stack, g: &Stack) -> f64 {
    let ds = column_means(s) * s.nrows() as f64;
    let dg = column_means(g) * g.nrows() as f64;
    let signal = dg.norm();
    (ds - dg).norm() / (1.0 + signal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::graph::Graph;
    use crate::network::mixing::{MixingMatrix, MixingMode};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scheme_on(g: &Graph, k: usize) -> MixingScheme {
        let w = MixingMatrix::metropolis(g).unwrap();
        let ws = w.s_mixing_matrix();
        MixingScheme::new(w, ws, k, MixingMode::Plain).unwrap()
    }

    #[test]
    fn unchanged_signal_preserves_column_sums() {
        let g = Graph::erdos_renyi(6, 0.5, 3).unwrap();
        let scheme = scheme_on(&g, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = Stack::from_fn(6, 3, |_, _| rng.gen::<f64>());
        let gsig = Stack::from_fn(6, 3, |_, _| rng.gen::<f64>());
        let before = column_means(&s) * 6.0;
        let (next, _) = track_update(&scheme, &s, &gsig, &gsig).unwrap();
        let after = column_means(&next) * 6.0;
        assert!((after - before).amax() < 1e-12);
    }

    #[test]
    fn single_agent_tracks_exactly() {
        let w = MixingMatrix::from_matrix(DMatrix::from_element(1, 1, 1.0), None).unwrap();
        let scheme = MixingScheme::single_round(w);
        let s = Stack::from_row_slice(1, 2, &[4.0, -1.0]);
        let g_old = Stack::from_row_slice(1, 2, &[4.0, -1.0]);
        let g_new = Stack::from_row_slice(1, 2, &[0.5, 2.0]);
        let (next, _) = track_update(&scheme, &s, &g_new, &g_old).unwrap();
        assert_eq!(next, g_new);
    }

    #[test]
    fn two_agent_hand_computation() {
        let w = MixingMatrix::from_matrix(DMatrix::from_element(2, 2, 0.5), None).unwrap();
        let scheme = MixingScheme::single_round(w);
        let s_prev = Stack::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let g_old = Stack::zeros(2, 2);
        let g_new = Stack::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let (next, _) = track_update(&scheme, &s_prev, &g_new, &g_old).unwrap();
        let expected = Stack::from_row_slice(2, 2, &[1.5, 1.5, 0.5, 0.5]);
        assert!((next - expected).amax() < 1e-15);
    }

    #[test]
    fn sum_identity_holds_over_a_random_trajectory() {
        let g = Graph::ring(9).unwrap();
        let scheme = scheme_on(&g, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut gsig = Stack::from_fn(9, 4, |_, _| rng.gen::<f64>());
        let mut s = gsig.clone(); // seeded with s⁰ = g⁰
        for _ in 0..60 {
            let g_new = Stack::from_fn(9, 4, |_, _| rng.gen::<f64>() * 3.0 - 1.0);
            let (next, _) = track_update(&scheme, &s, &g_new, &gsig).unwrap();
            s = next;
            gsig = g_new;
            assert!(tracking_discrepancy(&s, &gsig) < 1e-9);
        }
    }

    #[test]
    fn consensus_error_examples() {
        let mut v = Stack::zeros(4, 3);
        for i in 0..4 {
            v.set_row(i, &nalgebra::RowDVector::from_row_slice(&[1.0, -2.0, 0.5]));
        }
        assert_eq!(consensus_error(&v), 0.0);

        // rows (1,0) and (−1,0): column means are zero, stacked deviation
        // norm is sqrt(1² + 1²) = √2
        let v = Stack::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        assert!((consensus_error(&v) - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mixing_contracts_consensus_error_by_alpha0() {
        let g = Graph::ring(8).unwrap();
        let w = MixingMatrix::metropolis(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let v = Stack::from_fn(8, 3, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
            let mixed = w.mix(&v).unwrap();
            assert!(consensus_error(&mixed) <= w.alpha0() * consensus_error(&v) + 1e-10);
        }
    }
}
