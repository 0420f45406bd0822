//! Collective spin observables of the two wells.
//!
//! Operators act matrix-free on the `(N_L + 1) × (N_R + 1)` amplitude grid:
//! `S^z` is diagonal and `a†b`, `b†a` shift one index by ±1, so no operator is
//! ever materialized.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::statekit::{
    effective_evolution, sector_probability, sector_window, ConditionalState, SplitMixedState, StateVector,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Well {
    Left,
    Right,
}

/// Spin component. The primed axes are rotated about `x` by `θ`:
/// `S^{z'} = S^y sin θ + S^z cos θ`, `S^{y'} = S^y cos θ - S^z sin θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Axis {
    X,
    Y,
    Z,
    RotatedZ(f64),
    RotatedY(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinLabel {
    pub axis: Axis,
    pub well: Well,
}

impl SpinLabel {
    pub fn new(axis: Axis, well: Well) -> Result<Self> {
        match axis {
            Axis::RotatedZ(th) | Axis::RotatedY(th) if !th.is_finite() => {
                Err(Error::invalid("rotated spin axis needs a finite angle"))
            }
            _ => Ok(Self { axis, well }),
        }
    }
}

/// `a†b` on one well: `|k⟩ → sqrt((k+1)(N_i-k)) |k+1⟩`.
fn raise(psi: &CMatrix, well: Well) -> CMatrix {
    let (rows, cols) = (psi.rows(), psi.cols());
    let mut out = CMatrix::zeros(rows, cols);
    match well {
        Well::Left => {
            let n = rows - 1;
            for k in 0..n {
                let c = (((k + 1) * (n - k)) as f64).sqrt();
                let (src, dst) = (k * cols, (k + 1) * cols);
                let (s, o) = (psi.as_slice(), out.as_mut_slice());
                for j in 0..cols {
                    o[dst + j] = s[src + j] * c;
                }
            }
        }
        Well::Right => {
            let n = cols - 1;
            let coef: Vec<f64> = (0..n).map(|k| (((k + 1) * (n - k)) as f64).sqrt()).collect();
            let (s, o) = (psi.as_slice(), out.as_mut_slice());
            for i in 0..rows {
                let base = i * cols;
                for k in 0..n {
                    o[base + k + 1] = s[base + k] * coef[k];
                }
            }
        }
    }
    out
}

/// `b†a` on one well: `|k⟩ → sqrt(k(N_i-k+1)) |k-1⟩`.
fn lower(psi: &CMatrix, well: Well) -> CMatrix {
    let (rows, cols) = (psi.rows(), psi.cols());
    let mut out = CMatrix::zeros(rows, cols);
    match well {
        Well::Left => {
            let n = rows - 1;
            for k in 1..=n {
                let c = ((k * (n - k + 1)) as f64).sqrt();
                let (src, dst) = (k * cols, (k - 1) * cols);
                let (s, o) = (psi.as_slice(), out.as_mut_slice());
                for j in 0..cols {
                    o[dst + j] = s[src + j] * c;
                }
            }
        }
        Well::Right => {
            let n = cols - 1;
            let coef: Vec<f64> = (0..=n).map(|k| ((k * (n + 1 - k)) as f64).sqrt()).collect();
            let (s, o) = (psi.as_slice(), out.as_mut_slice());
            for i in 0..rows {
                let base = i * cols;
                for k in 1..=n {
                    o[base + k - 1] = s[base + k] * coef[k];
                }
            }
        }
    }
    out
}

fn apply_z(psi: &CMatrix, well: Well) -> CMatrix {
    let (rows, cols) = (psi.rows(), psi.cols());
    let mut out = psi.clone();
    let o = out.as_mut_slice();
    match well {
        Well::Left => {
            let n = (rows - 1) as f64;
            for i in 0..rows {
                let ev = 2.0 * i as f64 - n;
                for z in &mut o[i * cols..(i + 1) * cols] {
                    *z *= ev;
                }
            }
        }
        Well::Right => {
            let n = (cols - 1) as f64;
            for i in 0..rows {
                for (j, z) in o[i * cols..(i + 1) * cols].iter_mut().enumerate() {
                    *z *= 2.0 * j as f64 - n;
                }
            }
        }
    }
    out
}

fn combine(a: &CMatrix, ca: C64, b: &CMatrix, cb: C64) -> CMatrix {
    let data = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * ca + y * cb).collect();
    CMatrix::from_vec(a.rows(), a.cols(), data)
}

/// `(S^x ψ, S^y ψ, S^z ψ)` on one well.
fn apply_xyz(psi: &CMatrix, well: Well) -> [CMatrix; 3] {
    let up = raise(psi, well);
    let down = lower(psi, well);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let x = combine(&up, one, &down, one);
    let y = combine(&up, -i, &down, i);
    [x, y, apply_z(psi, well)]
}

/// Applies one collective spin operator to a conditional state. The result
/// is not normalized.
pub fn apply_spin(label: SpinLabel, state: &ConditionalState) -> CMatrix {
    let psi = state.amplitudes();
    let w = label.well;
    match label.axis {
        Axis::Z => apply_z(psi, w),
        Axis::X | Axis::Y => {
            let [x, y, _] = apply_xyz(psi, w);
            if label.axis == Axis::X {
                x
            } else {
                y
            }
        }
        Axis::RotatedZ(th) => {
            let [_, y, z] = apply_xyz(psi, w);
            combine(&y, C64::new(th.sin(), 0.0), &z, C64::new(th.cos(), 0.0))
        }
        Axis::RotatedY(th) => {
            let [_, y, z] = apply_xyz(psi, w);
            combine(&y, C64::new(th.cos(), 0.0), &z, C64::new(-th.sin(), 0.0))
        }
    }
}

/// Index of an observable in the ordered set
/// `(S_L^x, S_L^y, S_L^z, S_R^x, S_R^y, S_R^z)`.
pub mod idx {
    pub const LX: usize = 0;
    pub const LY: usize = 1;
    pub const LZ: usize = 2;
    pub const RX: usize = 3;
    pub const RY: usize = 4;
    pub const RZ: usize = 5;
}

/// Uncentered first and second moments `⟨ξ_n⟩`, `⟨ξ_n ξ_m⟩`; these are the
/// quantities that average linearly over mixtures.
#[derive(Clone, Debug, PartialEq)]
pub struct RawMoments {
    pub means: [f64; 6],
    pub second: [[C64; 6]; 6],
}

impl RawMoments {
    fn zero() -> Self {
        Self { means: [0.0; 6], second: [[C64::new(0.0, 0.0); 6]; 6] }
    }

    /// Moments of the state with the wells exchanged.
    fn swapped(&self) -> Self {
        let p = |i: usize| (i + 3) % 6;
        let mut out = Self::zero();
        for n in 0..6 {
            out.means[p(n)] = self.means[n];
            for m in 0..6 {
                out.second[p(n)][p(m)] = self.second[n][m];
            }
        }
        out
    }

    fn accumulate(&mut self, other: &RawMoments, weight: f64) {
        for n in 0..6 {
            self.means[n] += weight * other.means[n];
            for m in 0..6 {
                self.second[n][m] += other.second[n][m] * weight;
            }
        }
    }
}

/// Exact raw moments of a pure conditional state, taken relative to its
/// squared norm. Second moments are the inner products `⟨ξ_n ψ | ξ_m ψ⟩` of
/// singly-applied states.
pub fn raw_moments(state: &ConditionalState) -> RawMoments {
    let psi = state.amplitudes();
    let (rows, cols) = (psi.rows(), psi.cols());
    let (nl, nr) = (rows - 1, cols - 1);
    let up = |n: usize| -> Vec<f64> { (0..=n).map(|k| (((k + 1) * (n - k)) as f64).sqrt()).collect() };
    let down = |n: usize| -> Vec<f64> { (0..=n).map(|k| ((k * (n + 1 - k)) as f64).sqrt()).collect() };
    let (up_l, down_l, up_r, down_r) = (up(nl), down(nl), up(nr), down(nr));
    let zero = C64::new(0.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let a = psi.as_slice();
    let mut means = [zero; 6];
    let mut second = [[zero; 6]; 6];
    let mut norm = 0.0;
    // one pass: the six applied amplitudes at each cell from its neighbours
    for kl in 0..rows {
        let z_l = 2.0 * kl as f64 - nl as f64;
        for kr in 0..cols {
            let at = kl * cols + kr;
            let c = a[at];
            let l_up = if kl > 0 { a[at - cols] * up_l[kl - 1] } else { zero };
            let l_down = if kl < nl { a[at + cols] * down_l[kl + 1] } else { zero };
            let r_up = if kr > 0 { a[at - 1] * up_r[kr - 1] } else { zero };
            let r_down = if kr < nr { a[at + 1] * down_r[kr + 1] } else { zero };
            let v = [
                l_up + l_down,
                i * (l_down - l_up),
                c * z_l,
                r_up + r_down,
                i * (r_down - r_up),
                c * (2.0 * kr as f64 - nr as f64),
            ];
            let cc = c.conj();
            norm += c.norm_sqr();
            for n in 0..6 {
                means[n] += cc * v[n];
                let vn = v[n].conj();
                for m in n..6 {
                    second[n][m] += vn * v[m];
                }
            }
        }
    }
    let mut raw = RawMoments::zero();
    for n in 0..6 {
        raw.means[n] = means[n].re / norm;
        for m in n..6 {
            raw.second[n][m] = second[n][m] / norm;
            raw.second[m][n] = raw.second[n][m].conj();
        }
    }
    raw
}

/// First moments, symmetrized covariance matrix `V` and commutator matrix
/// `Ω = -i⟨[ξ_n, ξ_m]⟩` of `(S^x, S^y, S^z)` on both wells.
///
/// `theta` records the frame: `0` is the lab frame, otherwise the `y`, `z`
/// slots of each well hold `S^{y'}`, `S^{z'}` rotated by `theta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub n_total: usize,
    pub theta: f64,
    pub means: [f64; 6],
    #[serde(rename = "V")]
    pub v: [[f64; 6]; 6],
    #[serde(rename = "Omega")]
    pub omega: [[f64; 6]; 6],
}

impl MomentSet {
    pub fn from_raw(raw: &RawMoments, n_total: usize) -> Self {
        let mut v = [[0.0; 6]; 6];
        let mut omega = [[0.0; 6]; 6];
        for n in 0..6 {
            for m in 0..6 {
                let sym = 0.5 * (raw.second[n][m].re + raw.second[m][n].re);
                v[n][m] = sym - raw.means[n] * raw.means[m];
                // -i(⟨ξn ξm⟩ - ⟨ξm ξn⟩)
                // operators on different wells commute
                if (n < 3) == (m < 3) {
                    omega[n][m] = raw.second[n][m].im - raw.second[m][n].im;
                }
            }
        }
        Self { n_total, theta: 0.0, means: raw.means, v, omega }
    }

    /// Re-expresses the moments in the frame rotated by `theta` about `x`
    /// (relative to the lab frame, whatever the current frame is).
    pub fn rotated(&self, theta: f64) -> Self {
        let delta = theta - self.theta;
        if delta == 0.0 {
            return self.clone();
        }
        let (s, c) = delta.sin_cos();
        // rows of R: new coordinates in terms of current ones
        let mut r = [[0.0; 6]; 6];
        for base in [0, 3] {
            r[base][base] = 1.0;
            // y' = y cos - z sin ; z' = y sin + z cos
            r[base + 1][base + 1] = c;
            r[base + 1][base + 2] = -s;
            r[base + 2][base + 1] = s;
            r[base + 2][base + 2] = c;
        }
        let mut means = [0.0; 6];
        for n in 0..6 {
            means[n] = (0..6).map(|k| r[n][k] * self.means[k]).sum();
        }
        let congruence = |a: &[[f64; 6]; 6]| {
            let mut out = [[0.0; 6]; 6];
            for n in 0..6 {
                for m in 0..6 {
                    let mut acc = 0.0;
                    for k in 0..6 {
                        for l in 0..6 {
                            acc += r[n][k] * a[k][l] * r[m][l];
                        }
                    }
                    out[n][m] = acc;
                }
            }
            out
        };
        Self { n_total: self.n_total, theta, means, v: congruence(&self.v), omega: congruence(&self.omega) }
    }

    /// The same moments in the lab frame.
    pub fn lab_frame(&self) -> Self {
        self.rotated(0.0)
    }

    /// `Var(Σ c_n ξ_n) = cᵀ V c`.
    pub fn variance_of(&self, c: &[f64; 6]) -> f64 {
        self.covariance_of(c, c)
    }

    /// `½⟨{Δa, Δb}⟩` for `a = Σ a_n ξ_n`, `b = Σ b_n ξ_n`.
    pub fn covariance_of(&self, a: &[f64; 6], b: &[f64; 6]) -> f64 {
        let mut acc = 0.0;
        for n in 0..6 {
            for m in 0..6 {
                acc += a[n] * self.v[n][m] * b[m];
            }
        }
        acc
    }

    pub fn mean_of(&self, c: &[f64; 6]) -> f64 {
        c.iter().zip(&self.means).map(|(a, b)| a * b).sum()
    }
}

/// Moments of a single conditional state.
pub fn moments(state: &ConditionalState, theta: Option<f64>) -> MomentSet {
    let m = MomentSet::from_raw(&raw_moments(state), state.n_total());
    match theta {
        Some(th) => m.rotated(th),
        None => m,
    }
}

/// Moments of a mixture: weighted averages of the blocks' raw moments, centered
/// on the aggregate. Weights are used as stored (untruncated probabilities);
/// dividing by the retained mass renormalizes a truncated mixture.
pub fn mixture_moments(mixture: &SplitMixedState, theta: Option<f64>) -> MomentSet {
    let mut acc = RawMoments::zero();
    for block in mixture.blocks() {
        acc.accumulate(&raw_moments(&block.state), block.weight);
    }
    let norm = mixture.retained_mass();
    let mut scaled = RawMoments::zero();
    scaled.accumulate(&acc, 1.0 / norm);
    let m = MomentSet::from_raw(&scaled, mixture.n_total());
    match theta {
        Some(th) => m.rotated(th),
        None => m,
    }
}

/// Same as `mixture_moments(&mixed_split_state(n, t, ε))`, but each block is
/// built, measured and dropped in turn so memory stays at one block.
pub fn streamed_mixture_moments(n_total: usize, t: f64, epsilon: f64) -> Result<MomentSet> {
    let window = sector_window(n_total, epsilon)?;
    let mut acc = RawMoments::zero();
    let mut mass = 0.0;
    // the window is symmetric and block N - N_L is block N_L with the wells exchanged
    for nl in *window.start()..=n_total / 2 {
        let w = sector_probability(n_total, nl);
        let raw = raw_moments(&effective_evolution(nl, n_total - nl, t));
        acc.accumulate(&raw, w);
        mass += w;
        if 2 * nl != n_total {
            acc.accumulate(&raw.swapped(), w);
            mass += w;
        }
    }
    let mut scaled = RawMoments::zero();
    scaled.accumulate(&acc, 1.0 / mass);
    Ok(MomentSet::from_raw(&scaled, n_total))
}

/// Density matrix; Hermitian with unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity and unit trace (both within 1e-12).
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.rows() != entries.cols() || entries.rows() == 0 {
            return Err(Error::invalid("density matrix must be square and non-empty"));
        }
        let defect = entries.hermiticity_defect();
        if defect > 1e-12 {
            return Err(Error::NotHermitian(defect));
        }
        let tr = entries.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::invalid(format!("density matrix trace {tr} is not 1")));
        }
        Ok(Self { entries })
    }

    /// `|ψ⟩⟨ψ|` for a normalized single-ensemble state.
    pub fn pure(state: &StateVector) -> Result<Self> {
        let a = state.amplitudes();
        let norm = state.norm_sqr();
        Self::new(CMatrix::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj() / norm))
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn purity(&self) -> f64 {
        self.entries.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(&self.entries)
    }
}

/// `ρ_L = Tr_R |ψ⟩⟨ψ|`.
pub fn reduced_density_left(state: &ConditionalState) -> DensityMatrix {
    let psi = state.amplitudes();
    let d = psi.rows();
    let mut rho = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = linalg::inner(psi.row(j), psi.row(i));
            rho[(i, j)] = v;
            rho[(j, i)] = v.conj();
        }
    }
    DensityMatrix { entries: rho }
}

/// Projects the right well onto `|k_R⟩`; returns the outcome probability and
/// the normalized left-well state.
pub fn project_right_fock(state: &ConditionalState, k_r: usize) -> Result<(f64, StateVector)> {
    if k_r > state.n_right() {
        return Err(Error::invalid(format!("k_R = {k_r} exceeds N_R = {}", state.n_right())));
    }
    let psi = state.amplitudes();
    let column: Vec<C64> = (0..psi.rows()).map(|i| psi[(i, k_r)]).collect();
    let p: f64 = column.iter().map(|z| z.norm_sqr()).sum();
    if p <= f64::MIN_POSITIVE {
        return Err(Error::ImpossibleOutcome(format!("k_R = {k_r} has zero probability")));
    }
    let s = 1.0 / p.sqrt();
    let left = StateVector::new(column.into_iter().map(|z| z * s).collect())?;
    Ok((p, left))
}

/// `P(k_R)`: squared mass of each right-well Fock column.
///
/// For the protocol's conditional states this is `C(N_R, k_R) / 2^{N_R}` at
/// every `t`, which differs from the product-of-binomials expression sometimes
/// quoted for this distribution (that expression is not normalized).
pub fn right_outcome_distribution(state: &ConditionalState) -> Vec<f64> {
    let psi = state.amplitudes();
    (0..psi.cols()).map(|j| (0..psi.rows()).map(|i| psi[(i, j)].norm_sqr()).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statekit::{effective_evolution, mixed_split_state, spin_coherent, x_polarized};
    use std::f64::consts::PI;

    fn label(axis: Axis, well: Well) -> SpinLabel {
        SpinLabel::new(axis, well).unwrap()
    }

    fn pseudo_random_state(nl: usize, nr: usize, seed: u64) -> ConditionalState {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = CMatrix::from_fn(nl + 1, nr + 1, |_, _| C64::new(next(), next()));
        ConditionalState::from_amplitudes(m).unwrap()
    }

    #[test]
    fn stencil_examples() {
        let s = ConditionalState::from_amplitudes(CMatrix::from_vec(2, 1, vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]))
            .unwrap();
        let out = apply_spin(label(Axis::X, Well::Left), &s);
        assert_eq!(out[(1, 0)], C64::new(1.0, 0.0));
        assert_eq!(out[(0, 0)], C64::new(0.0, 0.0));

        let mut m = CMatrix::zeros(11, 1);
        m[(7, 0)] = C64::new(1.0, 0.0);
        let s = ConditionalState::from_amplitudes(m).unwrap();
        let out = apply_spin(label(Axis::Z, Well::Left), &s);
        assert_eq!(out[(7, 0)], C64::new(4.0, 0.0));
        assert!(SpinLabel::new(Axis::RotatedZ(f64::NAN), Well::Left).is_err());
    }

    #[test]
    fn commutator_on_random_states() {
        for seed in 0..5 {
            let s = pseudo_random_state(4, 3, seed);
            for well in [Well::Left, Well::Right] {
                let x = apply_spin(label(Axis::X, well), &s);
                let y = apply_spin(label(Axis::Y, well), &s);
                let z = apply_spin(label(Axis::Z, well), &s);
                // ⟨[S^x, S^y]⟩ = ⟨xψ|yψ⟩ - ⟨yψ|xψ⟩
                let comm = x.inner(&y) - y.inner(&x);
                let expect = C64::new(0.0, 2.0) * s.amplitudes().inner(&z);
                assert!((comm - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn rotated_axes_are_linear_combinations() {
        let s = pseudo_random_state(3, 5, 9);
        let th = 0.37;
        let zp = apply_spin(label(Axis::RotatedZ(th), Well::Right), &s);
        let y = apply_spin(label(Axis::Y, Well::Right), &s);
        let z = apply_spin(label(Axis::Z, Well::Right), &s);
        let expect = combine(&y, C64::new(th.sin(), 0.0), &z, C64::new(th.cos(), 0.0));
        assert!(zp.max_abs_diff(&expect) < 1e-14);
        let m = moments(&s, None).rotated(th);
        let direct = s.amplitudes().inner(&zp).re;
        assert!((m.means[idx::RZ] - direct).abs() < 1e-12);
    }

    #[test]
    fn coherent_product_moments() {
        let s = effective_evolution(5, 5, 0.0);
        let m = moments(&s, None);
        let expect_means = [5.0, 0.0, 0.0, 5.0, 0.0, 0.0];
        for (a, b) in m.means.iter().zip(expect_means) {
            assert!((a - b).abs() < 1e-12);
        }
        for i in [idx::LY, idx::LZ, idx::RY, idx::RZ] {
            assert!((m.v[i][i] - 5.0).abs() < 1e-12);
        }
        assert!(m.v[idx::LX][idx::LX].abs() < 1e-12);
        // Ω(y, z) = 2⟨S^x⟩, Ω(x, y) = 2⟨S^z⟩ = 0
        assert!((m.omega[idx::LY][idx::LZ] - 10.0).abs() < 1e-12);
        assert!(m.omega[idx::LX][idx::LY].abs() < 1e-12);
    }

    #[test]
    fn moment_set_invariants() {
        for seed in 0..4 {
            let s = pseudo_random_state(3, 4, seed + 20);
            let m = moments(&s, None);
            for n in 0..6 {
                assert!(m.v[n][n] >= -1e-12);
                for k in 0..6 {
                    assert!((m.v[n][k] - m.v[k][n]).abs() < 1e-12);
                    assert!((m.omega[n][k] + m.omega[k][n]).abs() < 1e-12);
                }
            }
            for a in 0..3 {
                for b in 3..6 {
                    assert!(m.omega[a][b].abs() < 1e-12);
                }
            }
            // Ω_{xy} = 2⟨S^z⟩ per well (cyclic)
            for base in [0, 3] {
                assert!((m.omega[base][base + 1] - 2.0 * m.means[base + 2]).abs() < 1e-10);
                assert!((m.omega[base + 1][base + 2] - 2.0 * m.means[base]).abs() < 1e-10);
                assert!((m.omega[base + 2][base] - 2.0 * m.means[base + 1]).abs() < 1e-10);
            }
            // Var from V equals ⟨A²⟩ - ⟨A⟩² by double application
            let y = apply_spin(label(Axis::Y, Well::Left), &s);
            let yy = apply_spin(label(Axis::Y, Well::Left), &ConditionalState::from_amplitudes(y.clone()).unwrap());
            let norm_y = y.norm_sqr().sqrt();
            let second = s.amplitudes().inner(&yy).re * norm_y;
            let direct = second - m.means[idx::LY].powi(2);
            assert!((direct - m.v[idx::LY][idx::LY]).abs() < 1e-10);
        }
    }

    #[test]
    fn rotation_roundtrip() {
        let s = pseudo_random_state(2, 3, 3);
        let m = moments(&s, None);
        let back = m.rotated(0.8).rotated(-0.3).lab_frame();
        for n in 0..6 {
            for k in 0..6 {
                assert!((back.v[n][k] - m.v[n][k]).abs() < 1e-12);
                assert!((back.omega[n][k] - m.omega[n][k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mixture_moments_match_streamed() {
        for (n_total, t) in [(12, 0.013), (13, 0.2), (7, 1.1)] {
            let a = mixture_moments(&mixed_split_state(n_total, t, 1e-6).unwrap(), None);
            let b = streamed_mixture_moments(n_total, t, 1e-6).unwrap();
            for n in 0..6 {
                assert!((a.means[n] - b.means[n]).abs() < 1e-12);
                for k in 0..6 {
                    assert!((a.v[n][k] - b.v[n][k]).abs() < 1e-10);
                    assert!((a.omega[n][k] - b.omega[n][k]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn reduced_density_examples() {
        let rho = reduced_density_left(&effective_evolution(4, 6, 0.0));
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let l = x_polarized(4);
        for i in 0..5 {
            for j in 0..5 {
                let e = l.amplitudes()[i] * l.amplitudes()[j].conj();
                assert!((rho.entries()[(i, j)] - e).norm() < 1e-14);
            }
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = spin_coherent(C64::new(h, 0.0), C64::new(h, 0.0), 6).unwrap();
        let minus = spin_coherent(C64::new(-h, 0.0), C64::new(h, 0.0), 6).unwrap();
        let rho = reduced_density_left(&effective_evolution(6, 8, PI / 8.0));
        for i in 0..7 {
            for j in 0..7 {
                let e = 0.5
                    * (plus.amplitudes()[i] * plus.amplitudes()[j].conj()
                        + minus.amplitudes()[i] * minus.amplitudes()[j].conj());
                assert!((rho.entries()[(i, j)] - e).norm() < 1e-12);
            }
        }
        for t in [0.1, 0.5, 1.7] {
            let rho = reduced_density_left(&effective_evolution(5, 3, t));
            assert!((rho.entries().trace().re - 1.0).abs() < 1e-12);
            for ev in rho.eigenvalues().unwrap() {
                assert!((-1e-12..=1.0 + 1e-12).contains(&ev));
            }
        }
    }

    #[test]
    fn purity_is_one_only_on_the_product_grid() {
        for k in 0..=4 {
            let t = k as f64 * PI / 4.0;
            let rho = reduced_density_left(&effective_evolution(4, 4, t));
            assert!((rho.purity() - 1.0).abs() < 1e-10, "t = {t}");
        }
        for t in [0.05, 0.3, PI / 8.0, 0.7] {
            assert!(reduced_density_left(&effective_evolution(4, 4, t)).purity() < 1.0 - 1e-6);
        }
    }

    #[test]
    fn right_projection_examples() {
        let (nl, nr) = (6usize, 8usize);
        for t in [0.0, 0.11, 0.9] {
            let s = effective_evolution(nl, nr, t);
            let dist = right_outcome_distribution(&s);
            assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for kr in 0..=nr {
                let (p, left) = project_right_fock(&s, kr).unwrap();
                let expect = sector_probability(nr, kr);
                assert!((p - expect).abs() < 1e-13);
                assert!((p - dist[kr]).abs() < 1e-15);
                // e^{i(S_L^z)^2 t} on the coherent state with α,β = e^{±2iut}/√2
                let u = 2.0 * kr as f64 - nr as f64;
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let coh = spin_coherent(C64::from_polar(h, 2.0 * u * t), C64::from_polar(h, -2.0 * u * t), nl)
                    .unwrap()
                    .one_axis_twist(t);
                let overlap = linalg::inner(coh.amplitudes(), left.amplitudes());
                assert!((overlap.norm() - 1.0).abs() < 1e-12);
                let g = overlap / overlap.norm();
                for (a, b) in coh.amplitudes().iter().zip(left.amplitudes()) {
                    assert!((a * g - b).norm() < 1e-12);
                }
            }
        }
        let s0 = effective_evolution(3, 4, 0.0);
        let (_, left) = project_right_fock(&s0, 1).unwrap();
        for (a, b) in left.amplitudes().iter().zip(x_polarized(3).amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!(project_right_fock(&s0, 5).is_err());
    }

    #[test]
    fn right_distribution_peaks_at_half() {
        let d = right_outcome_distribution(&effective_evolution(10, 10, 0.3));
        let argmax = (0..d.len()).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
        assert_eq!(argmax, 5);
        let d0 = right_outcome_distribution(&effective_evolution(10, 10, 0.0));
        for (a, b) in d.iter().zip(&d0) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
