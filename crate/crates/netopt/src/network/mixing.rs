//! Mixing matrices, multi-round and Chebyshev-accelerated gossip averaging.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, RowDVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::network::graph::Graph;

/// Stacked per-agent vectors: row `j` holds agent `j`'s d-dimensional state.
pub type Stack = DMatrix<f64>;

const STOCHASTIC_TOL: f64 = 1e-12;

/// Below this mixing rate the matrix is treated as exact averaging.
const EXACT_AVERAGING_RATE: f64 = 1e-14;

/// Doubly stochastic mixing matrix together with its cached mixing rate
/// `alpha0 = ‖W − (1/n)11ᵀ‖`. One application averages each agent's state
/// with its neighbors; `alpha0 < 1` is required for the disagreement
/// component to contract.
#[derive(Debug, Clone)]
pub struct MixingMatrix {
    w: DMatrix<f64>,
    alpha0: f64,
}

impl MixingMatrix {
    /// Validates double stochasticity and a usable mixing rate, then caches
    /// `alpha0`. Pass the graph to additionally enforce the sparsity pattern
    /// (zero weight on non-edges).
    pub fn from_matrix(w: DMatrix<f64>, graph: Option<&Graph>) -> Result<MixingMatrix> {
        validate_doubly_stochastic(&w)?;
        if let Some(g) = graph {
            if g.n() != w.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "matrix is {}x{} but graph has {} nodes",
                    w.nrows(),
                    w.ncols(),
                    g.n()
                )));
            }
            for i in 0..w.nrows() {
                for j in 0..w.ncols() {
                    if i != j && w[(i, j)] != 0.0 && !g.has_edge(i, j) {
                        return Err(Error::Validation(format!(
                            "nonzero weight {} on non-edge ({i}, {j})",
                            w[(i, j)]
                        )));
                    }
                }
            }
        }
        let alpha0 = mixing_rate(&w)?;
        if alpha0 >= 1.0 - 1e-9 {
            return Err(Error::Validation(format!(
                "degenerate mixing matrix: alpha0 = {alpha0} (must be < 1)"
            )));
        }
        Ok(MixingMatrix { w, alpha0 })
    }

    /// Metropolis–Hastings weights for a connected graph:
    /// `w_ij = 1/(1 + max(deg_i, deg_j))` on edges, diagonal absorbs the
    /// remainder. Symmetric and doubly stochastic by construction.
    pub fn metropolis(graph: &Graph) -> Result<MixingMatrix> {
        let n = graph.n();
        let deg = graph.degrees();
        let mut w = DMatrix::zeros(n, n);
        for (i, j) in graph.edges() {
            let weight = 1.0 / (1.0 + deg[i].max(deg[j]) as f64);
            w[(i, j)] = weight;
            w[(j, i)] = weight;
        }
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
            w[(i, i)] = 1.0 - off;
        }
        MixingMatrix::from_matrix(w, Some(graph))
    }

    /// Returns `θI + (1−θ)W` with the smallest `θ ∈ [0, 1)` making every
    /// diagonal entry at least 0.1. Keeps the gradient-tracking recursion
    /// stable when `W` has small or zero self-weights.
    pub fn s_mixing_matrix(&self) -> MixingMatrix {
        const MIN_DIAG: f64 = 0.1;
        let mut theta: f64 = 0.0;
        for i in 0..self.n() {
            let d = self.w[(i, i)];
            if d < MIN_DIAG {
                // solve MIN_DIAG = θ + (1−θ)·d for θ
                theta = theta.max((MIN_DIAG - d) / (1.0 - d));
            }
        }
        if theta == 0.0 {
            return self.clone();
        }
        let n = self.n();
        let w = DMatrix::identity(n, n) * theta + &self.w * (1.0 - theta);
        MixingMatrix::from_matrix(w, None).expect("convex combination preserves stochasticity")
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// One gossip round: row `j` of the result is `Σ_i w_ji · row i` of the
    /// input. Column means are preserved because the columns of `W` sum to 1.
    pub fn mix(&self, v: &Stack) -> Result<Stack> {
        if v.nrows() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "stack has {} rows, mixing matrix expects {}",
                v.nrows(),
                self.n()
            )));
        }
        Ok(&self.w * v)
    }

    /// Writes the matrix as n rows of n comma-separated decimals. The
    /// shortest-round-trip float formatting reproduces each entry exactly on
    /// re-import.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.n() {
            let row: Vec<String> = (0..self.n()).map(|j| format!("{}", self.w[(i, j)])).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads a matrix in the [`write_csv`](Self::write_csv) format and
    /// validates it (against the graph when one is supplied).
    pub fn read_csv<R: BufRead>(reader: R, graph: Option<&Graph>) -> Result<MixingMatrix> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: idx + 1,
                        detail: format!("bad matrix entry {tok:?}: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::Parse {
                        line: idx + 1,
                        detail: format!("expected {} entries, found {}", first.len(), row.len()),
                    });
                }
            }
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 {
            return Err(Error::Parse { line: 0, detail: "empty matrix file".into() });
        }
        if rows[0].len() != n {
            return Err(Error::Validation(format!(
                "matrix must be square, got {n} rows of {} entries",
                rows[0].len()
            )));
        }
        let w = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        MixingMatrix::from_matrix(w, graph)
    }
}

/// Mixing rate `‖W − (1/n)11ᵀ‖` of a doubly stochastic matrix. Zero when
/// `W` is exact averaging; 1 signals a degenerate (non-mixing) matrix.
pub fn mixing_rate(w: &DMatrix<f64>) -> Result<f64> {
    validate_doubly_stochastic(w)?;
    let n = w.nrows();
    let j = DMatrix::from_element(n, n, 1.0 / n as f64);
    Ok(linalg::spectral_norm(&(w - j)))
}

fn validate_doubly_stochastic(w: &DMatrix<f64>) -> Result<()> {
    if w.nrows() != w.ncols() {
        return Err(Error::Validation(format!(
            "mixing matrix must be square, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    if !linalg::all_finite(w.iter().copied()) {
        return Err(Error::Validation("mixing matrix has non-finite entries".into()));
    }
    for i in 0..w.nrows() {
        let row: f64 = w.row(i).sum();
        let col: f64 = w.column(i).sum();
        if (row - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::Validation(format!("row {i} sums to {row}, expected 1")));
        }
        if (col - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::Validation(format!("column {i} sums to {col}, expected 1")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixingMode {
    /// K plain gossip rounds; effective rate `alpha0^K`.
    Plain,
    /// Degree-K Chebyshev polynomial of `W`; effective rate `1/T_K(1/alpha0)`.
    Chebyshev,
}

/// Per-iteration communication plan: mode, number of rounds `K`, and the two
/// matrices used for parameter vectors and tracked gradients (they may
/// differ; both must live on the same graph).
#[derive(Debug, Clone)]
pub struct MixingScheme {
    mode: MixingMode,
    k: usize,
    params: MixingMatrix,
    tracked: MixingMatrix,
}

impl MixingScheme {
    pub fn new(params: MixingMatrix, tracked: MixingMatrix, k: usize, mode: MixingMode) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidConfig("mixing rounds K must be at least 1".into()));
        }
        if params.n() != tracked.n() {
            return Err(Error::DimensionMismatch(format!(
                "parameter matrix is {}x{0} but tracked-gradient matrix is {1}x{1}",
                params.n(),
                tracked.n()
            )));
        }
        Ok(MixingScheme { mode, k, params, tracked })
    }

    /// Plain scheme with `K = 1` and the same matrix for both stacks.
    pub fn single_round(w: MixingMatrix) -> Self {
        MixingScheme { mode: MixingMode::Plain, k: 1, tracked: w.clone(), params: w }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mode(&self) -> MixingMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn params_matrix(&self) -> &MixingMatrix {
        &self.params
    }

    pub fn tracked_matrix(&self) -> &MixingMatrix {
        &self.tracked
    }

    /// Effective contraction factor of the disagreement component per
    /// iteration: `alpha0^K` for plain mixing, `1/T_K(1/alpha0)` under
    /// Chebyshev acceleration.
    pub fn effective_rate(&self) -> f64 {
        match self.mode {
            MixingMode::Plain => self.params.alpha0().powi(self.k as i32),
            MixingMode::Chebyshev => chebyshev_rate(self.params.alpha0(), self.k),
        }
    }

    pub fn mix_params(&self, v: &Stack) -> Result<(Stack, usize)> {
        mix_rounds(&self.params, self.mode, self.k, v)
    }

    pub fn mix_tracked(&self, v: &Stack) -> Result<(Stack, usize)> {
        mix_rounds(&self.tracked, self.mode, self.k, v)
    }
}

/// Applies K rounds of mixing and reports the number of communication
/// rounds consumed. Chebyshev mode evaluates `P_K(W) V` where
/// `P_K(W) = T_K(W/alpha0) / T_K(1/alpha0)`, via the three-term recurrence;
/// `P_K(1) = 1` keeps the matrix doubly stochastic, so column means are
/// still preserved. With `alpha0 = 0` the matrix already averages exactly
/// and a single round is used.
pub fn mix_rounds(w: &MixingMatrix, mode: MixingMode, k: usize, v: &Stack) -> Result<(Stack, usize)> {
    if k < 1 {
        return Err(Error::InvalidConfig("mixing rounds K must be at least 1".into()));
    }
    match mode {
        MixingMode::Plain => {
            let mut out = w.mix(v)?;
            for _ in 1..k {
                out = w.mix(&out)?;
            }
            Ok((out, k))
        }
        MixingMode::Chebyshev => {
            if w.alpha0() < EXACT_AVERAGING_RATE {
                // the matrix already averages to machine precision
                return Ok((w.mix(v)?, 1));
            }
            let alpha0 = w.alpha0();
            let mut prev = v.clone();
            let mut cur = w.mix(v)?; // P_1(W) V = W V
            // ratio r_k = T_{k-1}(1/α₀)/T_k(1/α₀); tracking ratios instead of
            // the T_k values themselves avoids overflow for large K
            let mut ratio = alpha0;
            for _ in 2..=k {
                let ratio_next = 1.0 / (2.0 / alpha0 - ratio);
                let mixed = w.mix(&cur)?;
                let next = mixed * (2.0 * ratio_next / alpha0) - &prev * (ratio * ratio_next);
                prev = cur;
                cur = next;
                ratio = ratio_next;
            }
            Ok((cur, k))
        }
    }
}

/// `1/T_K(1/alpha0)`: the contraction factor achieved by the degree-K
/// Chebyshev polynomial. Computed with the same overflow-free ratio
/// recurrence as [`mix_rounds`].
pub fn chebyshev_rate(alpha0: f64, k: usize) -> f64 {
    assert!(k >= 1, "K must be at least 1");
    if alpha0 < EXACT_AVERAGING_RATE {
        return 0.0;
    }
    let mut ratio = alpha0; // T_0/T_1
    let mut inv_t = alpha0; // 1/T_1
    for _ in 2..=k {
        let ratio_next = 1.0 / (2.0 / alpha0 - ratio);
        inv_t *= ratio_next;
        ratio = ratio_next;
    }
    inv_t
}

/// Column means of a stack as a row vector.
pub fn column_means(v: &Stack) -> RowDVector<f64> {
    let n = v.nrows() as f64;
    RowDVector::from_fn(v.ncols(), |_, j| v.column(j).sum() / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::consensus_error;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_stack(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Stack {
        Stack::from_fn(n, d, |_, _| rng.gen::<f64>() * 2.0 - 1.0)
    }

    /// n=2 symmetric matrix with alpha0 = |2a − 1| chosen exactly.
    fn two_agent_matrix(a: f64) -> MixingMatrix {
        let w = DMatrix::from_row_slice(2, 2, &[a, 1.0 - a, 1.0 - a, a]);
        MixingMatrix::from_matrix(w, None).unwrap()
    }

    #[test]
    fn metropolis_on_triangle_is_exact_averaging() {
        let g = Graph::ring(3).unwrap(); // triangle: ring of 3
        let w = MixingMatrix::metropolis(&g).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((w.matrix()[(i, j)] - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        assert!(w.alpha0() < 1e-12);
    }

    #[test]
    fn metropolis_on_single_edge() {
        let g = Graph::ring(2).unwrap(); // two nodes, one edge
        let w = MixingMatrix::metropolis(&g).unwrap();
        for v in w.matrix().iter() {
            assert!((v - 0.5).abs() < 1e-15);
        }
        assert!(w.alpha0() < 1e-12);
    }

    #[test]
    fn metropolis_on_complete_graph_attains_zero_rate() {
        let g = Graph::complete(6).unwrap();
        let w = MixingMatrix::metropolis(&g).unwrap();
        for v in w.matrix().iter() {
            assert!((v - 1.0 / 6.0).abs() < 1e-14);
        }
        assert!(w.alpha0() < 1e-12);
    }

    #[test]
    fn mixing_rate_examples() {
        let j = DMatrix::from_element(3, 3, 1.0 / 3.0);
        assert!(mixing_rate(&j).unwrap() < 1e-13);

        let w = DMatrix::from_row_slice(2, 2, &[0.75, 0.25, 0.25, 0.75]);
        assert!((mixing_rate(&w).unwrap() - 0.5).abs() < 1e-13);

        // identity mixes nothing: rate 1, rejected as degenerate
        let id = DMatrix::identity(4, 4);
        assert!((mixing_rate(&id).unwrap() - 1.0).abs() < 1e-13);
        assert!(matches!(
            MixingMatrix::from_matrix(id, None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn mixing_rate_rejects_non_stochastic() {
        let w = DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.1, 0.8]);
        assert!(mixing_rate(&w).is_err());
    }

    #[test]
    fn s_mixing_leaves_compliant_matrix_unchanged() {
        let w = two_agent_matrix(0.5);
        let adjusted = w.s_mixing_matrix();
        assert_eq!(w.matrix(), adjusted.matrix());

        let j3 = MixingMatrix::from_matrix(DMatrix::from_element(3, 3, 1.0 / 3.0), None).unwrap();
        assert_eq!(j3.s_mixing_matrix().matrix(), j3.matrix());
    }

    #[test]
    fn s_mixing_lifts_zero_diagonal_to_one_tenth() {
        // triangle with zero self-weight: eigenvalues {1, -1/2, -1/2}
        let w = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0]);
        let w = MixingMatrix::from_matrix(w, None).unwrap();
        let adjusted = w.s_mixing_matrix();
        for i in 0..3 {
            assert!((adjusted.matrix()[(i, i)] - 0.1).abs() < 1e-15);
        }
        // θ = 0.1 exactly, so off-diagonals shrink to 0.45
        assert!((adjusted.matrix()[(0, 1)] - 0.45).abs() < 1e-15);
        assert!(mixing_rate(adjusted.matrix()).is_ok());
    }

    #[test]
    fn mix_keeps_consensus_fixed() {
        let g = Graph::erdos_renyi(8, 0.5, 1).unwrap();
        let w = MixingMatrix::metropolis(&g).unwrap();
        let row = DVector::from_fn(3, |i, _| i as f64 + 0.5).transpose();
        let mut v = Stack::zeros(8, 3);
        for i in 0..8 {
            v.set_row(i, &row);
        }
        let mixed = w.mix(&v).unwrap();
        assert!((mixed - v).norm() < 1e-14);
    }

    #[test]
    fn mix_two_agents_exact_average() {
        let w = two_agent_matrix(0.5);
        let v = Stack::from_row_slice(2, 2, &[1.0, 3.0, 5.0, -1.0]);
        let mixed = w.mix(&v).unwrap();
        for j in 0..2 {
            assert_eq!(mixed[(0, j)], mixed[(1, j)]);
        }
        assert!((mixed[(0, 0)] - 3.0).abs() < 1e-15);
        assert!((mixed[(0, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mix_triangle_basis_rows() {
        let g = Graph::ring(3).unwrap();
        let w = MixingMatrix::metropolis(&g).unwrap();
        let mixed = w.mix(&Stack::identity(3, 3)).unwrap();
        for v in mixed.iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mix_rejects_dimension_mismatch() {
        let w = two_agent_matrix(0.5);
        assert!(w.mix(&Stack::zeros(3, 2)).is_err());
    }

    #[test]
    fn plain_rounds_contract_at_alpha0_powers() {
        let w = two_agent_matrix(0.95); // alpha0 = 0.9 exactly
        assert!((w.alpha0() - 0.9).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let v = random_stack(&mut rng, 2, 4);
            let before = consensus_error(&v);
            let (mixed, rounds) = mix_rounds(&w, MixingMode::Plain, 2, &v).unwrap();
            assert_eq!(rounds, 2);
            assert!(consensus_error(&mixed) <= 0.81 * before + 1e-10);
        }
    }

    #[test]
    fn chebyshev_degree_one_is_plain_mixing() {
        let g = Graph::erdos_renyi(10, 0.4, 5).unwrap();
        let w = MixingMatrix::metropolis(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_stack(&mut rng, 10, 6);
        let (plain, _) = mix_rounds(&w, MixingMode::Plain, 1, &v).unwrap();
        let (cheb, _) = mix_rounds(&w, MixingMode::Chebyshev, 1, &v).unwrap();
        assert!((plain - cheb).amax() <= 1e-15);
    }

    #[test]
    fn chebyshev_two_rounds_hits_derived_rate() {
        // 1/T₂(1/α₀) with T₂(y) = 2y² − 1 gives α₀²/(2−α₀²) ≈ 0.6807 at α₀ = 0.9
        let expected = 0.81 / (2.0 - 0.81);
        assert!((chebyshev_rate(0.9, 2) - expected).abs() < 1e-15);

        let w = two_agent_matrix(0.95);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let v = random_stack(&mut rng, 2, 3);
            let before = consensus_error(&v);
            let (mixed, _) = mix_rounds(&w, MixingMode::Chebyshev, 2, &v).unwrap();
            assert!(consensus_error(&mixed) <= expected * before + 1e-10);
        }
    }

    #[test]
    fn chebyshev_with_zero_rate_averages_in_one_round() {
        let g = Graph::complete(5).unwrap();
        let w = MixingMatrix::metropolis(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = random_stack(&mut rng, 5, 2);
        let (mixed, rounds) = mix_rounds(&w, MixingMode::Chebyshev, 7, &v).unwrap();
        assert_eq!(rounds, 1);
        assert!(consensus_error(&mixed) < 1e-13);
    }

    #[test]
    fn chebyshev_beats_plain_for_equal_rounds() {
        let w = two_agent_matrix(0.97);
        for k in 2..10 {
            assert!(chebyshev_rate(w.alpha0(), k) < w.alpha0().powi(k as i32));
        }
    }

    #[test]
    fn mean_preservation_under_both_modes() {
        let g = Graph::ring(12).unwrap();
        let w = MixingMatrix::metropolis(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = random_stack(&mut rng, 12, 5);
        let means = column_means(&v);
        for mode in [MixingMode::Plain, MixingMode::Chebyshev] {
            let (mixed, _) = mix_rounds(&w, mode, 4, &v).unwrap();
            assert!((column_means(&mixed) - &means).amax() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = Graph::erdos_renyi(7, 0.5, 42).unwrap();
        let w = MixingMatrix::metropolis(&g).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let back = MixingMatrix::read_csv(buf.as_slice(), Some(&g)).unwrap();
        assert_eq!(w.matrix(), back.matrix());
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let text = "0.5,0.5\n0.5\n";
        let err = MixingMatrix::read_csv(text.as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn scheme_requires_matching_sizes() {
        let a = two_agent_matrix(0.8);
        let g = Graph::ring(3).unwrap();
        let b = MixingMatrix::metropolis(&g).unwrap();
        assert!(MixingScheme::new(a, b, 1, MixingMode::Plain).is_err());
    }
}
