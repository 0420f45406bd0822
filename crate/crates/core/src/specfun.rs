//! Log-factorials, binomials, Wigner 3j symbols, spherical harmonics and
//! Gauss-Legendre quadrature on the sphere.
//!
//! Everything here is a pure function of its arguments. The only shared state
//! is the log-factorial table, built once on first use and read-only after.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries held in the log-factorial table. Covers `4N + 1` for `N` up to
/// several thousand; larger arguments fall back to the Stirling series.
const LN_FACT_TABLE: usize = 1 << 14;

fn ln_fact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LN_FACT_TABLE);
        // Kahan-compensated running sum of ln(i)
        let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
        table.push(0.0);
        for i in 1..LN_FACT_TABLE {
            let y = (i as f64).ln() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            table.push(sum);
        }
        table
    })
}

fn ln_gamma_stirling(x: f64) -> f64 {
    // ln Γ(x) for large x
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// `ln(n!)`.
pub fn ln_factorial(n: u64) -> f64 {
    let table = ln_fact_table();
    match table.get(n as usize) {
        Some(&v) => v,
        None => ln_gamma_stirling(n as f64 + 1.0),
    }
}

/// `ln C(n, k)`, or `-inf` when `k` lies outside `[0, n]`.
pub fn log_binomial(n: u64, k: i64) -> f64 {
    if k < 0 || k as u64 > n {
        return f64::NEG_INFINITY;
    }
    let k = k as u64;
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// A non-negative or signed half-integer, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn int(v: i32) -> Self {
        HalfInt(2 * v)
    }

    /// Accepts only exact multiples of one half.
    pub fn from_f64(v: f64) -> Result<Self> {
        let twice = 2.0 * v;
        if !twice.is_finite() || twice.fract() != 0.0 || twice.abs() > i32::MAX as f64 {
            return Err(Error::invalid(format!("{v} is not a half-integer")));
        }
        Ok(HalfInt(twice as i32))
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

fn parity_sign(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Wigner 3j symbol
/// ```text
/// ( j1 j2 j3 )
/// ( m1 m2 m3 )
/// ```
/// from the Racah closed form.
///
/// Every term of the alternating sum is formed in log space together with the
/// common square-root prefactor; terms are rescaled by the largest log-modulus
/// before exponentiation and accumulated with their signs. Returns exactly
/// `0.0` when the selection rules (triangle, `m1+m2+m3 = 0`, integer
/// `j1+j2+j3`) fail.
pub fn wigner_3j(j1: HalfInt, j2: HalfInt, j3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> Result<f64> {
    let (tj1, tj2, tj3) = (j1.twice() as i64, j2.twice() as i64, j3.twice() as i64);
    let (tm1, tm2, tm3) = (m1.twice() as i64, m2.twice() as i64, m3.twice() as i64);
    for (tj, tm) in [(tj1, tm1), (tj2, tm2), (tj3, tm3)] {
        if tj < 0 {
            return Err(Error::invalid(format!("negative angular momentum j = {}", tj as f64 / 2.0)));
        }
        if (tj + tm) % 2 != 0 {
            return Err(Error::invalid(format!(
                "j + m must be an integer (j = {}, m = {})",
                tj as f64 / 2.0,
                tm as f64 / 2.0
            )));
        }
        if tm.abs() > tj {
            return Err(Error::invalid(format!("|m| > j (j = {}, m = {})", tj as f64 / 2.0, tm as f64 / 2.0)));
        }
    }
    if tm1 + tm2 + tm3 != 0 || (tj1 + tj2 + tj3) % 2 != 0 {
        return Ok(0.0);
    }
    if tj3 > tj1 + tj2 || tj3 < (tj1 - tj2).abs() {
        return Ok(0.0);
    }
    // integer combinations
    let a = (tj1 + tj2 - tj3) / 2;
    let b = (tj1 - tj2 + tj3) / 2;
    let c = (-tj1 + tj2 + tj3) / 2;
    let d = (tj1 + tj2 + tj3) / 2 + 1;
    let lf = |n: i64| ln_factorial(n as u64);
    let ln_pref = 0.5
        * (lf(a) + lf(b) + lf(c) - lf(d)
            + lf((tj1 + tm1) / 2)
            + lf((tj1 - tm1) / 2)
            + lf((tj2 + tm2) / 2)
            + lf((tj2 - tm2) / 2)
            + lf((tj3 + tm3) / 2)
            + lf((tj3 - tm3) / 2));

    let s1 = (tj3 - tj2 + tm1) / 2; // j3 - j2 + m1
    let s2 = (tj3 - tj1 - tm2) / 2; // j3 - j1 - m2
    let s3 = a; // j1 + j2 - j3
    let s4 = (tj1 - tm1) / 2; // j1 - m1
    let s5 = (tj2 + tm2) / 2; // j2 + m2
    let k_min = 0.max(-s1).max(-s2);
    let k_max = s3.min(s4).min(s5);
    if k_min > k_max {
        return Ok(0.0);
    }
    let terms: Vec<(f64, f64)> = (k_min..=k_max)
        .map(|k| {
            let ln_den = lf(k) + lf(s1 + k) + lf(s2 + k) + lf(s3 - k) + lf(s4 - k) + lf(s5 - k);
            (ln_pref - ln_den, parity_sign(k))
        })
        .collect();
    let peak = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    // pair consecutive (opposite-sign) terms before the running sum
    let mut sum = 0.0;
    for pair in terms.chunks(2) {
        let partial: f64 = pair.iter().map(|(l, s)| s * (l - peak).exp()).sum();
        sum += partial;
    }
    let phase = parity_sign((tj1 - tj2 - tm3) / 2);
    Ok(phase * sum * peak.exp())
}

/// Convenience wrapper for integer arguments.
pub fn wigner_3j_int(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> Result<f64> {
    wigner_3j(
        HalfInt::int(j1),
        HalfInt::int(j2),
        HalfInt::int(j3),
        HalfInt::int(m1),
        HalfInt::int(m2),
        HalfInt::int(m3),
    )
}

/// Orthonormalized associated Legendre functions `P̄_l^m(cos θ)` for
/// `0 <= m <= l <= lmax`, scaled so that `Y_lm(θ, φ) = P̄_l^m(cos θ) e^{imφ}`
/// (Condon-Shortley phase included).
#[derive(Clone, Debug)]
pub struct LegendreTable {
    lmax: usize,
    values: Vec<f64>,
}

impl LegendreTable {
    pub fn new(lmax: usize, theta: f64) -> Self {
        let x = theta.cos();
        let sin_theta = theta.sin().abs();
        let mut values = vec![0.0; (lmax + 1) * (lmax + 2) / 2];
        let ln_sin = sin_theta.ln();
        // log of prod_{i=1..m} sqrt((2i+1)/(2i)), accumulated as m grows
        let mut ln_double_fact = 0.0;
        for m in 0..=lmax {
            if m > 0 {
                ln_double_fact += 0.5 * ((2 * m + 1) as f64 / (2 * m) as f64).ln();
            }
            let p_mm = if m == 0 {
                1.0 / (4.0 * PI).sqrt()
            } else if sin_theta == 0.0 {
                0.0
            } else {
                let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
                sign * (ln_double_fact + m as f64 * ln_sin - 0.5 * (4.0 * PI).ln()).exp()
            };
            values[Self::offset(m, m)] = p_mm;
            if m == lmax {
                break;
            }
            let mut p_prev2 = p_mm;
            let mut p_prev1 = x * ((2 * m + 3) as f64).sqrt() * p_mm;
            values[Self::offset(m + 1, m)] = p_prev1;
            for l in (m + 2)..=lmax {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let lm1 = lf - 1.0;
                let b = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
                let p = a * (x * p_prev1 - b * p_prev2);
                values[Self::offset(l, m)] = p;
                p_prev2 = p_prev1;
                p_prev1 = p;
            }
        }
        Self { lmax, values }
    }

    fn offset(l: usize, m: usize) -> usize {
        l * (l + 1) / 2 + m
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// `P̄_l^m` for `0 <= m <= l`.
    pub fn get(&self, l: usize, m: usize) -> f64 {
        debug_assert!(m <= l && l <= self.lmax);
        self.values[Self::offset(l, m)]
    }
}

/// Orthonormal spherical harmonic `Y_kq(θ, φ)` with the Condon-Shortley phase.
pub fn spherical_harmonic(k: u32, q: i32, theta: f64, phi: f64) -> Result<C64> {
    if q.unsigned_abs() > k {
        return Err(Error::invalid(format!("|q| = {} exceeds k = {}", q.abs(), k)));
    }
    let table = LegendreTable::new(k as usize, theta);
    let m = q.unsigned_abs() as usize;
    let y = C64::from_polar(table.get(k as usize, m), m as f64 * phi);
    Ok(if q >= 0 {
        y
    } else if m % 2 == 0 {
        y.conj()
    } else {
        -y.conj()
    })
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product rule on the sphere: Gauss-Legendre in `cos θ`, uniform in `φ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes_costheta: Vec<f64>,
    pub weights: Vec<f64>,
    pub phi_count: usize,
}

impl QuadratureRule {
    pub fn theta_count(&self) -> usize {
        self.nodes_costheta.len()
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.nodes_costheta[i].clamp(-1.0, 1.0).acos()
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.phi_count as f64
    }

    pub fn phi_weight(&self) -> f64 {
        2.0 * PI / self.phi_count as f64
    }

    /// Solid-angle weight of node `(i, j)`; independent of `j`.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i] * self.phi_weight()
    }

    pub fn len(&self) -> usize {
        self.theta_count() * self.phi_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Integrates `f(θ, φ)` over the unit sphere.
    pub fn integrate(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.theta_count() {
            let theta = self.theta(i);
            let mut ring = 0.0;
            for j in 0..self.phi_count {
                ring += f(theta, self.phi(j));
            }
            total += self.weight(i) * ring;
        }
        total
    }
}

/// Exact for `Y_kq` products of degree `<= 2 order - 1` in `cos θ` and
/// azimuthal frequency `< phi_count`.
pub fn gauss_legendre_sphere(order: usize, phi_count: usize) -> Result<QuadratureRule> {
    if order == 0 || phi_count == 0 {
        return Err(Error::invalid("quadrature order and phi_count must be positive"));
    }
    let (nodes_costheta, weights) = gauss_legendre(order);
    Ok(QuadratureRule { nodes_costheta, weights, phi_count })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_binomial(n: u64, k: u64) -> u128 {
        let mut r: u128 = 1;
        for i in 0..k {
            r = r * (n - i) as u128 / (i + 1) as u128;
        }
        r
    }

    #[test]
    fn log_binomial_examples() {
        assert!((log_binomial(10, 5) - 252f64.ln()).abs() < 1e-13);
        assert!((log_binomial(10, 5) - 5.529429).abs() < 1e-6);
        for n in 0..20 {
            assert_eq!(log_binomial(n, 0), 0.0);
        }
        assert_eq!(log_binomial(5, 6), f64::NEG_INFINITY);
        assert_eq!(log_binomial(5, -1), f64::NEG_INFINITY);
    }

    #[test]
    fn log_binomial_matches_integers_up_to_60() {
        for n in 0..=60u64 {
            for k in 0..=n {
                let exact = exact_binomial(n, k) as f64;
                let approx = log_binomial(n, k as i64).exp();
                assert!(((approx - exact) / exact).abs() < 1e-12, "C({n},{k})");
            }
        }
    }

    #[test]
    fn huge_binomials_stay_finite() {
        let v = log_binomial(500, 250);
        assert!(v.is_finite() && v > 340.0 && v < 350.0);
        // table/Stirling seam
        let n = LN_FACT_TABLE as u64;
        let step = ln_factorial(n) - ln_factorial(n - 1);
        assert!((step - ((n) as f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn three_j_examples() {
        let v = wigner_3j_int(1, 0, 1, -1, 0, 1).unwrap();
        assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        for j in 0..5 {
            for m in -j..=j {
                let v = wigner_3j_int(j, 0, j, -m, 0, m).unwrap();
                let expect = parity_sign((j - m) as i64) / ((2 * j + 1) as f64).sqrt();
                assert!((v - expect).abs() < 1e-14);
            }
        }
        assert_eq!(wigner_3j_int(1, 1, 1, 0, 0, 0).unwrap(), 0.0);
        assert_eq!(wigner_3j_int(1, 2, 4, 0, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn three_j_half_integer_table() {
        let h = HalfInt::from_twice;
        // (1/2 1/2 1; 1/2 -1/2 0) = 1/sqrt(6)
        let v = wigner_3j(h(1), h(1), h(2), h(1), h(-1), h(0)).unwrap();
        assert!((v - 1.0 / 6f64.sqrt()).abs() < 1e-14);
        // (1/2 1/2 0; 1/2 -1/2 0) = 1/sqrt(2)
        let v = wigner_3j(h(1), h(1), h(0), h(1), h(-1), h(0)).unwrap();
        assert!((v - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        // (1 1/2 1/2; 1 -1/2 -1/2) = -1/sqrt(3)
        let v = wigner_3j(h(2), h(1), h(1), h(2), h(-1), h(-1)).unwrap();
        assert!((v + 1.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn three_j_malformed() {
        let h = HalfInt::from_twice;
        assert!(wigner_3j(h(2), h(2), h(2), h(1), h(-1), h(0)).is_err());
        assert!(wigner_3j(h(2), h(2), h(2), h(4), h(-4), h(0)).is_err());
        assert!(HalfInt::from_f64(0.3).is_err());
        assert_eq!(HalfInt::from_f64(1.5).unwrap(), h(3));
    }

    #[test]
    fn harmonic_examples() {
        let y00 = spherical_harmonic(0, 0, 0.7, 2.1).unwrap();
        assert!((y00.re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15 && y00.im == 0.0);
        let y10 = spherical_harmonic(1, 0, 0.0, 1.3).unwrap();
        assert!((y10.re - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
        // Y_11 = -sqrt(3/8π) sinθ e^{iφ}
        let (th, ph) = (0.4, 0.9);
        let y11 = spherical_harmonic(1, 1, th, ph).unwrap();
        let expect = C64::from_polar(-(3.0 / (8.0 * PI)).sqrt() * th.sin(), ph);
        assert!((y11 - expect).norm() < 1e-15);
        // Y_21 = -sqrt(15/8π) sinθ cosθ e^{iφ}
        let y21 = spherical_harmonic(2, 1, th, ph).unwrap();
        let expect = C64::from_polar(-(15.0 / (8.0 * PI)).sqrt() * th.sin() * th.cos(), ph);
        assert!((y21 - expect).norm() < 1e-15);
        assert!(spherical_harmonic(2, 3, 0.1, 0.1).is_err());
    }

    #[test]
    fn quadrature_examples() {
        let rule = gauss_legendre_sphere(4, 8).unwrap();
        let total: f64 = (0..rule.theta_count()).map(|i| rule.weight(i) * rule.phi_count as f64).sum();
        assert!((total - 4.0 * PI).abs() < 1e-12);
        let int_y00 = rule.integrate(|t, p| spherical_harmonic(0, 0, t, p).unwrap().re);
        assert!((int_y00 - (4.0 * PI).sqrt()).abs() < 1e-12);
        let re = rule.integrate(|t, p| spherical_harmonic(2, 1, t, p).unwrap().re);
        let im = rule.integrate(|t, p| spherical_harmonic(2, 1, t, p).unwrap().im);
        assert!(re.abs() < 1e-12 && im.abs() < 1e-12);
        let sq = rule.integrate(|t, p| spherical_harmonic(2, 1, t, p).unwrap().norm_sqr());
        assert!((sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..40 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }
}
