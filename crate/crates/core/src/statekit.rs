//! States of the squeeze-split-collapse protocol.
//!
//! Conventions: `|k⟩` (for `N` atoms) holds `k` atoms in mode `a` and `N - k`
//! in mode `b`, so `S^z |k⟩ = (2k - N) |k⟩`. Two-well amplitudes are indexed
//! `[k_L][k_R]`. Twisting acts as `e^{+i (S^z)^2 t}` and amplitudes are kept
//! exactly as produced by the closed forms, without global rephasing.

use std::ops::RangeInclusive;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::specfun::log_binomial;

const LN_2: f64 = std::f64::consts::LN_2;

/// Amplitudes of a single two-mode ensemble with fixed particle number.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_total: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("a state over N atoms needs N + 1 amplitudes"));
        }
        Ok(Self { n_total: amplitudes.len() - 1, amplitudes })
    }

    /// The Fock state `|k⟩` of `n` atoms.
    pub fn fock(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::invalid(format!("Fock index {k} exceeds N = {n}")));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); n + 1];
        amplitudes[k] = C64::new(1.0, 0.0);
        Ok(Self { n_total: n, amplitudes })
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Multiplies every amplitude by `e^{i (2k - N)^2 t}`.
    pub fn one_axis_twist(&self, t: f64) -> Self {
        let n = self.n_total as i64;
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(k, c)| c * twist_phase(2 * k as i64 - n, t))
            .collect();
        Self { n_total: self.n_total, amplitudes }
    }
}

/// `e^{i m^2 t}`.
pub fn twist_phase(m: i64, t: f64) -> C64 {
    C64::from_polar(1.0, (m * m) as f64 * t)
}

/// Spin coherent state `(α a† + β b†)^n |0⟩ / sqrt(n!)`, with amplitudes
/// `sqrt(C(n,k)) α^k β^(n-k)` built in log space.
pub fn spin_coherent(alpha: C64, beta: C64, n: usize) -> Result<StateVector> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(format!("|α|² + |β|² = {norm}, expected 1")));
    }
    let (ln_a, arg_a) = (alpha.norm().ln(), alpha.arg());
    let (ln_b, arg_b) = (beta.norm().ln(), beta.arg());
    let amplitudes = (0..=n)
        .map(|k| {
            let j = n - k;
            let mut ln_mod = 0.5 * log_binomial(n as u64, k as i64);
            if k > 0 {
                ln_mod += k as f64 * ln_a;
            }
            if j > 0 {
                ln_mod += j as f64 * ln_b;
            }
            C64::from_polar(ln_mod.exp(), k as f64 * arg_a + j as f64 * arg_b)
        })
        .collect();
    Ok(StateVector { n_total: n, amplitudes })
}

/// The maximally `S^x`-polarized coherent state `|1/√2, 1/√2⟩⟩`.
pub fn x_polarized(n: usize) -> StateVector {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    spin_coherent(h, h, n).expect("normalized by construction")
}

/// Probability `C(N, N_L) / 2^N` of finding `N_L` atoms in the left well.
pub fn sector_probability(n_total: usize, n_left: usize) -> f64 {
    (log_binomial(n_total as u64, n_left as i64) - n_total as f64 * LN_2).exp()
}

/// Beam-split state of a single ensemble.
///
/// Sectors (fixed left-well atom number) are produced on demand; only the
/// source state is stored.
#[derive(Clone, Debug)]
pub struct SplitFullState {
    source: StateVector,
}

/// Applies `a → (a_L + a_R)/√2`, `b → (b_L + b_R)/√2` to an arbitrary state.
pub fn split(state: &StateVector) -> SplitFullState {
    SplitFullState { source: state.clone() }
}

impl SplitFullState {
    pub fn n_total(&self) -> usize {
        self.source.n_total
    }

    /// Unnormalized amplitude matrix `A[k_L][k_R]` of the `N_L = n_left`
    /// sector.
    ///
    /// Expanding `(a†)^k (b†)^(N-k) / sqrt(k!(N-k)!)` under the beam splitter,
    /// the term with `k_L` a-atoms and `N_L - k_L` b-atoms on the left carries
    /// `2^{-N/2} sqrt(C(k, k_L) C(N-k, N_L-k_L))`, with `k = k_L + k_R`.
    pub fn sector(&self, n_left: usize) -> CMatrix {
        let n = self.n_total();
        assert!(n_left <= n, "sector N_L = {n_left} exceeds N = {n}");
        let n_right = n - n_left;
        let half_ln2n = 0.5 * n as f64 * LN_2;
        CMatrix::from_fn(n_left + 1, n_right + 1, |kl, kr| {
            let k = kl + kr;
            let ln_mod = 0.5
                * (log_binomial(k as u64, kl as i64)
                    + log_binomial((n - k) as u64, (n_left - kl) as i64))
                - half_ln2n;
            if ln_mod == f64::NEG_INFINITY {
                C64::new(0.0, 0.0)
            } else {
                self.source.amplitudes[k] * ln_mod.exp()
            }
        })
    }

    pub fn sector_mass(&self, n_left: usize) -> f64 {
        self.sector(n_left).norm_sqr()
    }

    pub fn total_mass(&self) -> f64 {
        (0..=self.n_total()).map(|nl| self.sector_mass(nl)).sum()
    }
}

/// Two-well state at fixed `(N_L, N_R)`; amplitudes `psi[k_L][k_R]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalState {
    n_left: usize,
    n_right: usize,
    psi: CMatrix,
}

impl ConditionalState {
    /// Wraps an amplitude matrix of shape `(N_L + 1) × (N_R + 1)`, normalizing
    /// it.
    pub fn from_amplitudes(psi: CMatrix) -> Result<Self> {
        if psi.rows() == 0 || psi.cols() == 0 {
            return Err(Error::invalid("empty amplitude matrix"));
        }
        let mass = psi.norm_sqr();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::invalid("amplitude matrix has zero or non-finite norm"));
        }
        let psi = psi.scale(C64::new(1.0 / mass.sqrt(), 0.0));
        Ok(Self { n_left: psi.rows() - 1, n_right: psi.cols() - 1, psi })
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn n_total(&self) -> usize {
        self.n_left + self.n_right
    }

    pub fn amplitudes(&self) -> &CMatrix {
        &self.psi
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi.norm_sqr()
    }

    /// The same state with the wells exchanged.
    pub fn swap_wells(&self) -> Self {
        Self { n_left: self.n_right, n_right: self.n_left, psi: self.psi.transpose() }
    }

    /// Applies `e^{i s (S_L^z)^2}` to the left well.
    pub fn local_left_twist(&self, s: f64) -> Self {
        let nl = self.n_left as i64;
        let mut psi = self.psi.clone();
        for kl in 0..=self.n_left {
            let ph = twist_phase(2 * kl as i64 - nl, s);
            for kr in 0..=self.n_right {
                psi[(kl, kr)] *= ph;
            }
        }
        Self { psi, ..*self }
    }

    /// Serializable snapshot including the squeezing time it was built at.
    pub fn dump(&self, t: f64) -> StateDump {
        StateDump {
            n_left: self.n_left,
            n_right: self.n_right,
            t,
            amplitudes: self.psi.as_slice().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

/// JSON state dump; amplitudes are `[re, im]` pairs, row-major over `k_L`
/// then `k_R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDump {
    pub n_left: usize,
    pub n_right: usize,
    pub t: f64,
    pub amplitudes: Vec<[f64; 2]>,
}

impl StateDump {
    pub fn to_state(&self) -> Result<ConditionalState> {
        let expected = (self.n_left + 1) * (self.n_right + 1);
        if self.amplitudes.len() != expected {
            return Err(Error::invalid(format!(
                "state dump holds {} amplitudes, expected {expected}",
                self.amplitudes.len()
            )));
        }
        let data = self.amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect();
        ConditionalState::from_amplitudes(CMatrix::from_vec(self.n_left + 1, self.n_right + 1, data))
    }
}

/// Number-fixing projection onto `N_L = n_left`. Returns the outcome
/// probability and the normalized conditional state.
pub fn project_left_number(full: &SplitFullState, n_left: usize) -> Result<(f64, ConditionalState)> {
    if n_left > full.n_total() {
        return Err(Error::invalid(format!("N_L = {n_left} exceeds N = {}", full.n_total())));
    }
    let sector = full.sector(n_left);
    let p = sector.norm_sqr();
    if p <= f64::MIN_POSITIVE {
        return Err(Error::ImpossibleOutcome(format!("sector N_L = {n_left} carries no probability")));
    }
    let state = ConditionalState::from_amplitudes(sector)?;
    Ok((p, state))
}

/// Product of two `x`-polarized coherent states evolved under
/// `(S_L^z + S_R^z)^2` for time `t`:
/// `psi[k_L][k_R] = 2^{-N/2} sqrt(C(N_L,k_L) C(N_R,k_R)) e^{i(2k_L+2k_R-N)^2 t}`.
pub fn effective_evolution(n_left: usize, n_right: usize, t: f64) -> ConditionalState {
    let n = n_left + n_right;
    let half_ln2n = 0.5 * n as f64 * LN_2;
    let left: Vec<f64> =
        (0..=n_left).map(|k| (0.5 * log_binomial(n_left as u64, k as i64) - 0.5 * half_ln2n).exp()).collect();
    let right: Vec<f64> =
        (0..=n_right).map(|k| (0.5 * log_binomial(n_right as u64, k as i64) - 0.5 * half_ln2n).exp()).collect();
    // phase depends on k_L + k_R only
    let phases: Vec<C64> = (0..=n).map(|k| twist_phase(2 * k as i64 - n as i64, t)).collect();
    let psi = CMatrix::from_fn(n_left + 1, n_right + 1, |kl, kr| phases[kl + kr] * (left[kl] * right[kr]));
    ConditionalState { n_left, n_right, psi }
}

/// One block of the post-collapse mixture.
#[derive(Clone, Debug)]
pub struct MixtureBlock {
    pub weight: f64,
    pub state: ConditionalState,
}

/// `ρ = Σ_{N_L} p(N_L) |Ψ^{N_L}⟩⟨Ψ^{N_L}|`, possibly restricted to a centered
/// window of `N_L`.
#[derive(Clone, Debug)]
pub struct SplitMixedState {
    n_total: usize,
    window: RangeInclusive<usize>,
    blocks: Vec<MixtureBlock>,
}

impl SplitMixedState {
    /// Assembles a mixture from blocks with consecutive `N_L`, all of total
    /// atom number `n_total`.
    pub fn from_blocks(n_total: usize, mut blocks: Vec<MixtureBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::invalid("a mixture needs at least one block"));
        }
        blocks.sort_by_key(|b| b.state.n_left());
        for (i, b) in blocks.iter().enumerate() {
            if b.state.n_total() != n_total {
                return Err(Error::invalid(format!("block with N = {} in a mixture of N = {n_total}", b.state.n_total())));
            }
            if !(b.weight >= 0.0 && b.weight.is_finite()) {
                return Err(Error::invalid(format!("block weight {} is not a probability", b.weight)));
            }
            if i > 0 && b.state.n_left() != blocks[i - 1].state.n_left() + 1 {
                return Err(Error::invalid("mixture blocks must have consecutive N_L"));
            }
        }
        let window = blocks[0].state.n_left()..=blocks[blocks.len() - 1].state.n_left();
        Ok(Self { n_total, window, blocks })
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn blocks(&self) -> &[MixtureBlock] {
        &self.blocks
    }

    pub fn window(&self) -> RangeInclusive<usize> {
        self.window.clone()
    }

    /// Probability mass of the blocks held.
    pub fn retained_mass(&self) -> f64 {
        self.blocks.iter().map(|b| b.weight).sum()
    }

    /// Probability mass of the sectors dropped by the window.
    pub fn truncated_mass(&self) -> f64 {
        excluded_mass(self.n_total, &self.window)
    }

    /// `N_L` values outside the window.
    pub fn truncated_sectors(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=self.n_total).filter(move |nl| !self.window.contains(nl))
    }

    pub fn is_truncated(&self) -> bool {
        *self.window.start() != 0 || *self.window.end() != self.n_total
    }
}

fn excluded_mass(n: usize, window: &RangeInclusive<usize>) -> f64 {
    (0..*window.start()).chain(window.end() + 1..=n).map(|nl| sector_probability(n, nl)).sum()
}

/// Smallest window of `N_L` centered on `N/2` holding at least `1 - epsilon`
/// of the probability.
pub fn sector_window(n_total: usize, epsilon: f64) -> Result<RangeInclusive<usize>> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("window ε = {epsilon} must lie in [0, 1)")));
    }
    let (mut lo, mut hi) = (n_total / 2, n_total.div_ceil(2));
    loop {
        let window = lo..=hi;
        if excluded_mass(n_total, &window) <= epsilon || (lo == 0 && hi == n_total) {
            return Ok(window);
        }
        lo = lo.saturating_sub(1);
        hi = (hi + 1).min(n_total);
    }
}

/// The post-collapse mixture at squeezing time `t`, keeping the sectors of
/// [`sector_window`]. Block weights are the untruncated `p(N_L)`.
pub fn mixed_split_state(n_total: usize, t: f64, epsilon: f64) -> Result<SplitMixedState> {
    let window = sector_window(n_total, epsilon)?;
    let blocks = window
        .clone()
        .map(|nl| MixtureBlock {
            weight: sector_probability(n_total, nl),
            state: effective_evolution(nl, n_total - nl, t),
        })
        .collect();
    Ok(SplitMixedState { n_total, window, blocks })
}
