//! Schmidt spectra and logarithmic negativity.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::statekit::{ConditionalState, SplitMixedState};

/// Largest total atom number accepted by the dense routines.
pub const DENSE_MAX_N: usize = 8;

/// Nonincreasing Schmidt coefficients of a two-well pure state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    pub coefficients: Vec<f64>,
}

impl SchmidtSpectrum {
    pub fn l1(&self) -> f64 {
        self.coefficients.iter().sum()
    }

    pub fn l2_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    /// `‖ρ^{T_L}‖₁ = (Σ λ)²` for the pure state.
    pub fn trace_norm(&self) -> f64 {
        self.l1().powi(2)
    }
}

pub fn schmidt(state: &ConditionalState) -> SchmidtSpectrum {
    SchmidtSpectrum { coefficients: linalg::singular_values(state.amplitudes()) }
}

pub fn log_negativity_pure(state: &ConditionalState) -> f64 {
    (2.0 * schmidt(state).l1().log2()).max(0.0)
}

/// Lower and upper bounds on the logarithmic negativity of the full mixture,
/// given only a window of its blocks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativityBracket {
    pub lower: f64,
    pub upper: f64,
}

impl NegativityBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn retained_trace_norm(mixture: &SplitMixedState) -> f64 {
    mixture.blocks().iter().map(|b| b.weight * schmidt(&b.state).trace_norm()).sum()
}

/// `log2 Σ p(N_L) (Σ_k λ_k)²`. Blocks of distinct `N_L` stay orthogonal under
/// the left partial transpose, so the trace norm is additive over blocks.
///
/// For a truncated window the retained blocks are renormalized; see
/// [`log_negativity_bracket`] for certified bounds instead.
pub fn log_negativity_mixed(mixture: &SplitMixedState) -> f64 {
    (retained_trace_norm(mixture) / mixture.retained_mass()).log2().max(0.0)
}

/// Bounds for the untruncated mixture: each dropped block contributes a trace
/// norm between 1 (separable) and `min(N_L, N_R) + 1` (maximally entangled).
pub fn log_negativity_bracket(mixture: &SplitMixedState) -> NegativityBracket {
    let kept = retained_trace_norm(mixture);
    let n = mixture.n_total();
    let mut low = kept;
    let mut high = kept;
    for nl in mixture.truncated_sectors() {
        let p = crate::statekit::sector_probability(n, nl);
        low += p;
        high += p * (nl.min(n - nl) + 1) as f64;
    }
    NegativityBracket { lower: low.log2().max(0.0), upper: high.log2().max(0.0) }
}

/// `|Ψ⟩ = Σ_k |k⟩_L |k⟩_R / sqrt(d)` with `d = min(N_L, N_R) + 1`.
pub fn maximally_entangled(n_left: usize, n_right: usize) -> ConditionalState {
    let d = n_left.min(n_right) + 1;
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let psi = CMatrix::from_fn(n_left + 1, n_right + 1, |i, j| if i == j && i < d { amp } else { C64::new(0.0, 0.0) });
    ConditionalState::from_amplitudes(psi).expect("nonzero by construction")
}

/// Basis of the fixed-`N` two-well space: `(N_L, k_L, k_R)` for all `N_L`.
struct DenseBasis {
    n_total: usize,
    offsets: Vec<usize>,
    dim: usize,
}

impl DenseBasis {
    fn new(n_total: usize) -> Self {
        let mut offsets = Vec::with_capacity(n_total + 2);
        let mut acc = 0;
        for nl in 0..=n_total {
            offsets.push(acc);
            acc += (nl + 1) * (n_total - nl + 1);
        }
        offsets.push(acc);
        Self { n_total, offsets, dim: acc }
    }

    fn index(&self, nl: usize, kl: usize, kr: usize) -> usize {
        self.offsets[nl] + kl * (self.n_total - nl + 1) + kr
    }

    fn decode(&self, i: usize) -> (usize, usize, usize) {
        let nl = self.offsets.partition_point(|&o| o <= i) - 1;
        let local = i - self.offsets[nl];
        let cols = self.n_total - nl + 1;
        (nl, local / cols, local % cols)
    }
}

fn dense_density(n_total: usize, blocks: &[(f64, &ConditionalState)]) -> Result<(DenseBasis, CMatrix)> {
    if n_total > DENSE_MAX_N {
        return Err(Error::TooLarge { what: "N", value: n_total, limit: DENSE_MAX_N });
    }
    let basis = DenseBasis::new(n_total);
    let mut rho = CMatrix::zeros(basis.dim, basis.dim);
    for &(w, state) in blocks {
        if state.n_total() != n_total {
            return Err(Error::invalid("block atom number differs from the mixture"));
        }
        let nl = state.n_left();
        let psi = state.amplitudes();
        let norm = state.norm_sqr();
        let entries: Vec<(usize, C64)> = (0..psi.rows())
            .flat_map(|kl| (0..psi.cols()).map(move |kr| (kl, kr)))
            .map(|(kl, kr)| (basis.index(nl, kl, kr), psi[(kl, kr)]))
            .collect();
        for &(i, a) in &entries {
            for &(j, b) in &entries {
                rho[(i, j)] += a * b.conj() * (w / norm);
            }
        }
    }
    Ok((basis, rho))
}

/// Left partial transpose by the index map `((l, r), (l', r')) → ((l', r), (l, r'))`,
/// with `l = (N_L, k_L)`, `r = (N_R, k_R)`. Fails if a nonzero entry would
/// leave the fixed-`N` space.
fn partial_transpose_left(basis: &DenseBasis, rho: &CMatrix) -> Result<CMatrix> {
    let n = basis.n_total;
    let mut out = CMatrix::zeros(basis.dim, basis.dim);
    for i in 0..basis.dim {
        let (nl, kl, kr) = basis.decode(i);
        for j in 0..basis.dim {
            let v = rho[(i, j)];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            let (nl2, kl2, kr2) = basis.decode(j);
            // new row: left part of j, right part of i
            let (row_nl, row_nr) = (nl2, n - nl);
            let (col_nl, col_nr) = (nl, n - nl2);
            if row_nl + row_nr != n || col_nl + col_nr != n {
                return Err(Error::invalid("partial transpose leaves the fixed-N space (coherence between sectors)"));
            }
            out[(basis.index(row_nl, kl2, kr), basis.index(col_nl, kl, kr2))] = v;
        }
    }
    Ok(out)
}

fn dense_log_negativity(n_total: usize, blocks: &[(f64, &ConditionalState)]) -> Result<f64> {
    let (basis, rho) = dense_density(n_total, blocks)?;
    let pt = partial_transpose_left(&basis, &rho)?;
    let defect = pt.hermiticity_defect();
    if defect > 1e-12 {
        return Err(Error::NotHermitian(defect));
    }
    let total_weight: f64 = blocks.iter().map(|b| b.0).sum();
    let norm: f64 = linalg::hermitian_eigenvalues(&pt)?.iter().map(|e| e.abs()).sum();
    Ok((norm / total_weight).log2().max(0.0))
}

/// Dense oracle: full density matrix, explicit partial transpose, eigenvalues.
pub fn log_negativity_dense_pure(state: &ConditionalState) -> Result<f64> {
    dense_log_negativity(state.n_total(), &[(1.0, state)])
}

pub fn log_negativity_dense_mixed(mixture: &SplitMixedState) -> Result<f64> {
    let blocks: Vec<(f64, &ConditionalState)> = mixture.blocks().iter().map(|b| (b.weight, &b.state)).collect();
    dense_log_negativity(mixture.n_total(), &blocks)
}
