//! Spin Wigner functions on the Bloch sphere.
//!
//! A state of spin `j` is expanded in multipoles
//! `ρ_kq = Σ (-1)^{j-m} sqrt(2k+1) (j k j; -m q m') ⟨jm|ρ|jm'⟩`
//! and `W(θ, φ) = Σ_{k ≤ 2j} Σ_{|q| ≤ k} ρ_kq Y_kq(θ, φ)`, with `|jm⟩` the
//! Fock state `|k = j + m⟩`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::observables::DensityMatrix;
use crate::specfun::{gauss_legendre_sphere, log_binomial, wigner_3j, HalfInt, LegendreTable, QuadratureRule};

/// Points of the display lattice in `θ ∈ [0, π]` and `φ ∈ [0, 2π]`, both
/// endpoints included (one-degree spacing).
pub const DISPLAY_THETA: usize = 181;
pub const DISPLAY_PHI: usize = 361;

/// Largest imaginary residue of the harmonic sum tolerated for a Hermitian input.
pub const IMAG_TOLERANCE: f64 = 1e-10;

/// Multipole coefficients `ρ_kq`, stored as `coeffs[k][q + k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Multipoles {
    two_j: usize,
    coeffs: Vec<Vec<C64>>,
}

impl Multipoles {
    /// Expands any `(2j+1) × (2j+1)` matrix; the map is linear.
    pub fn from_matrix(rho: &CMatrix) -> Result<Self> {
        if rho.rows() != rho.cols() || rho.rows() == 0 {
            return Err(Error::invalid("multipole expansion needs a non-empty square matrix"));
        }
        let two_j = rho.rows() - 1;
        let j = HalfInt::from_twice(two_j as i32);
        let mut coeffs = Vec::with_capacity(two_j + 1);
        for k in 0..=two_j {
            let kk = HalfInt::int(k as i32);
            let scale = ((2 * k + 1) as f64).sqrt();
            let mut row = vec![C64::new(0.0, 0.0); 2 * k + 1];
            for q in -(k as i64)..=(k as i64) {
                let mut acc = C64::new(0.0, 0.0);
                // m = q + m'; rows and columns indexed by k_L = j + m
                for col in 0..=two_j as i64 {
                    let r = col + q;
                    if r < 0 || r > two_j as i64 {
                        continue;
                    }
                    let m = HalfInt::from_twice(2 * r as i32 - two_j as i32);
                    let mp = HalfInt::from_twice(2 * col as i32 - two_j as i32);
                    let w = wigner_3j(j, kk, j, HalfInt::from_twice(-m.twice()), HalfInt::int(q as i32), mp)?;
                    if w == 0.0 {
                        continue;
                    }
                    let sign = if (two_j as i64 - r) % 2 == 0 { 1.0 } else { -1.0 };
                    acc += rho[(r as usize, col as usize)] * (sign * scale * w);
                }
                row[(q + k as i64) as usize] = acc;
            }
            coeffs.push(row);
        }
        Ok(Self { two_j, coeffs })
    }

    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        Self::from_matrix(rho.entries())
    }

    pub fn two_j(&self) -> usize {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn get(&self, k: usize, q: i64) -> C64 {
        self.coeffs[k][(q + k as i64) as usize]
    }

    /// Evaluates `W` on a tensor lattice (θ-major); also returns the largest
    /// imaginary residue seen.
    pub fn evaluate(&self, thetas: &[f64], phis: &[f64]) -> (Vec<f64>, f64) {
        let kmax = self.two_j;
        let mut values = Vec::with_capacity(thetas.len() * phis.len());
        let mut max_imag: f64 = 0.0;
        let mut a = vec![C64::new(0.0, 0.0); kmax + 1];
        let mut b = vec![C64::new(0.0, 0.0); kmax + 1];
        for &theta in thetas {
            let table = LegendreTable::new(kmax, theta);
            // W(φ) = Σ_q a_q e^{iqφ} + Σ_{q>0} b_q e^{-iqφ}
            for q in 0..=kmax {
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                let (mut aq, mut bq) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for k in q..=kmax {
                    let p = table.get(k, q);
                    aq += self.get(k, q as i64) * p;
                    if q > 0 {
                        bq += self.get(k, -(q as i64)) * (sign * p);
                    }
                }
                a[q] = aq;
                b[q] = bq;
            }
            for &phi in phis {
                let mut w = a[0];
                for q in 1..=kmax {
                    let e = C64::from_polar(1.0, q as f64 * phi);
                    w += a[q] * e + b[q] * e.conj();
                }
                max_imag = max_imag.max(w.im.abs());
                values.push(w.re);
            }
        }
        (values, max_imag)
    }
}

/// Real Wigner function sampled on a tensor lattice. Grids built on a
/// quadrature rule carry solid-angle weights per θ row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub two_j: usize,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    pub row_weights: Option<Vec<f64>>,
    pub values: Vec<f64>,
    pub max_imag: f64,
}

impl WignerGrid {
    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn at(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.phis.len() + k]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(θ, φ, W)` of the largest sample.
    pub fn argmax(&self) -> (f64, f64, f64) {
        let best = (0..self.values.len()).max_by(|&a, &b| self.values[a].total_cmp(&self.values[b])).unwrap_or(0);
        let n = self.phis.len();
        (self.thetas[best / n], self.phis[best % n], self.values[best])
    }

    pub fn sup_distance(&self, other: &WignerGrid) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    fn quadrature(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let weights =
            self.row_weights.as_ref().ok_or_else(|| Error::invalid("grid was not built on a quadrature rule"))?;
        let n = self.phis.len();
        Ok(weights.iter().enumerate().map(|(i, w)| w * self.values[i * n..(i + 1) * n].iter().map(|&v| f(v)).sum::<f64>()).sum())
    }

    /// `∫ W dΩ`.
    pub fn integral(&self) -> Result<f64> {
        self.quadrature(|w| w)
    }
}

/// Order `2j + 2` in `cos θ` and `4j + 4` azimuthal nodes.
pub fn default_rule(two_j: usize) -> QuadratureRule {
    gauss_legendre_sphere(two_j + 2, 2 * two_j + 4).expect("positive sizes")
}

pub fn wigner_on_rule(multipoles: &Multipoles, rule: &QuadratureRule) -> WignerGrid {
    let thetas: Vec<f64> = (0..rule.theta_count()).map(|i| rule.theta(i)).collect();
    let phis: Vec<f64> = (0..rule.phi_count).map(|k| rule.phi(k)).collect();
    let (values, max_imag) = multipoles.evaluate(&thetas, &phis);
    let row_weights = Some((0..rule.theta_count()).map(|i| rule.weight(i)).collect());
    WignerGrid { two_j: multipoles.two_j(), thetas, phis, row_weights, values, max_imag }
}

/// Uniform lattice including both endpoints of `θ ∈ [0, π]`, `φ ∈ [0, 2π]`.
pub fn wigner_on_lattice(multipoles: &Multipoles, n_theta: usize, n_phi: usize) -> WignerGrid {
    let span = |n: usize, top: f64| -> Vec<f64> {
        if n == 1 {
            vec![0.0]
        } else {
            (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect()
        }
    };
    let thetas = span(n_theta, PI);
    let phis = span(n_phi, 2.0 * PI);
    let (values, max_imag) = multipoles.evaluate(&thetas, &phis);
    WignerGrid { two_j: multipoles.two_j(), thetas, phis, row_weights: None, values, max_imag }
}

pub fn display_lattice(multipoles: &Multipoles) -> WignerGrid {
    wigner_on_lattice(multipoles, DISPLAY_THETA, DISPLAY_PHI)
}

fn check_real(grid: WignerGrid) -> Result<WignerGrid> {
    if grid.max_imag > IMAG_TOLERANCE {
        return Err(Error::NotHermitian(grid.max_imag));
    }
    Ok(grid)
}

/// Generic route: multipoles of an arbitrary density matrix of dimension `2j+1`.
pub fn wigner_from_density(rho: &DensityMatrix, rule: &QuadratureRule) -> Result<WignerGrid> {
    check_real(wigner_on_rule(&Multipoles::from_density(rho)?, rule))
}

/// `2^{-N} sqrt(C(N_L,k) C(N_L,k')) e^{i4Δ(m+m'-N_R)t} (1 + e^{i8Δt})^{N_R}`
/// with `Δ = m - m' = k - k'`: the left density matrix of the conditional
/// state with the right well traced out. It has unit trace as written.
pub fn marginal_density_closed(n_left: usize, n_right: usize, t: f64) -> CMatrix {
    let nl = n_left as i64;
    let nr = n_right as i32;
    let half_log = |k: usize| 0.5 * (log_binomial(n_left as u64, k as i64) - n_left as f64 * std::f64::consts::LN_2);
    CMatrix::from_fn(n_left + 1, n_left + 1, |k, kp| {
        let delta = k as i64 - kp as i64;
        // m + m' = k + k' - N_L
        let phase = 4.0 * delta as f64 * ((k + kp) as i64 - nl - n_right as i64) as f64 * t;
        // 2^{-N_R} (1 + e^{i8Δt})^{N_R}
        let bracket = ((C64::new(1.0, 0.0) + C64::from_polar(1.0, 8.0 * delta as f64 * t)) * 0.5).powi(nr);
        C64::from_polar((half_log(k) + half_log(kp)).exp(), phase) * bracket
    })
}

/// Left density matrix after finding `k_R` atoms in the right well, before
/// normalization: `C(N_R,k_R) sqrt(C(N_L,k) C(N_L,k')) e^{i4Δ(2k_R-N_R+m+m')t}`.
/// Returns the matrix divided by its trace and the trace itself.
pub fn conditional_density_closed(n_left: usize, n_right: usize, k_r: usize, t: f64) -> Result<(CMatrix, f64)> {
    if k_r > n_right {
        return Err(Error::invalid(format!("k_R = {k_r} exceeds N_R = {n_right}")));
    }
    let u = 2 * k_r as i64 - n_right as i64;
    let nl = n_left as i64;
    let ln_cr = log_binomial(n_right as u64, k_r as i64);
    let half_log = |k: usize| 0.5 * log_binomial(n_left as u64, k as i64);
    let raw = CMatrix::from_fn(n_left + 1, n_left + 1, |k, kp| {
        let delta = k as i64 - kp as i64;
        let phase = 4.0 * delta as f64 * (u + (k + kp) as i64 - nl) as f64 * t;
        C64::from_polar((ln_cr + half_log(k) + half_log(kp)).exp(), phase)
    });
    let normalization = raw.trace().re;
    Ok((raw.scale(C64::new(1.0 / normalization, 0.0)), normalization))
}

pub fn marginal_wigner_closed(n_left: usize, n_right: usize, t: f64, rule: &QuadratureRule) -> Result<WignerGrid> {
    let m = Multipoles::from_matrix(&marginal_density_closed(n_left, n_right, t))?;
    check_real(wigner_on_rule(&m, rule))
}

pub fn conditional_wigner_closed(
    n_left: usize,
    n_right: usize,
    k_r: usize,
    t: f64,
    rule: &QuadratureRule,
) -> Result<WignerGrid> {
    let (rho, _) = conditional_density_closed(n_left, n_right, k_r, t)?;
    check_real(wigner_on_rule(&Multipoles::from_matrix(&rho)?, rule))
}

/// `∫ max(0, -W) dΩ` by the grid's quadrature weights.
pub fn negativity_volume(grid: &WignerGrid) -> Result<f64> {
    grid.quadrature(|w| (-w).max(0.0))
}
