//! Correlation witnesses for entanglement and steering between the wells.
//!
//! Every witness takes a [`MomentSet`]; the ones built on the primed axes
//! expect it rotated to the squeezing angle (see [`squeezing_angle`]).

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::observables::{idx, MomentSet};

/// Denominators below this multiple of `N` make a witness undefined.
pub const UNDEFINED_RATIO: f64 = 1e-9;

/// Margin below a bound required before a witness counts as violated, so that
/// rounding at saturation (the product state) is not read as detection.
pub const DETECTION_MARGIN: f64 = 1e-10;

fn unit(i: usize) -> [f64; 6] {
    let mut c = [0.0; 6];
    c[i] = 1.0;
    c
}

fn lin(terms: &[(usize, f64)]) -> [f64; 6] {
    let mut c = [0.0; 6];
    for &(i, w) in terms {
        c[i] += w;
    }
    c
}

fn check_denominator(value: f64, n: usize, what: &str) -> Result<f64> {
    if value > UNDEFINED_RATIO * n as f64 {
        Ok(value)
    } else {
        Err(Error::UndefinedWitness(format!("{what} denominator {value:.3e} is at or below noise")))
    }
}

/// Which pair of EPR-type quadratures enters the DGCZ sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DgczPairing {
    /// `Var(S_L^y + S_R^z) + Var(S_R^y + S_L^z)`: the combination squeezed by
    /// `e^{+i S_L^z S_R^z t}`-type correlations.
    Sum,
    /// `Var(S_L^y - S_R^z) + Var(S_R^y - S_L^z)`.
    Difference,
}

impl DgczPairing {
    fn sign(self) -> f64 {
        match self {
            DgczPairing::Sum => 1.0,
            DgczPairing::Difference => -1.0,
        }
    }
}

/// Numerator of the DGCZ witness.
pub fn dgcz_numerator(m: &MomentSet, pairing: DgczPairing) -> f64 {
    let s = pairing.sign();
    m.variance_of(&lin(&[(idx::LY, 1.0), (idx::RZ, s)])) + m.variance_of(&lin(&[(idx::RY, 1.0), (idx::LZ, s)]))
}

/// `E_D = numerator / (2⟨S_L^x⟩ + 2⟨S_R^x⟩)`; `E_D < 1` witnesses entanglement.
pub fn dgcz_paired(m: &MomentSet, pairing: DgczPairing) -> Result<f64> {
    let m = m.lab_frame();
    let den = check_denominator(2.0 * (m.means[idx::LX] + m.means[idx::RX]), m.n_total, "DGCZ")?;
    Ok(dgcz_numerator(&m, pairing) / den)
}

/// DGCZ with the pairing that detects the twisted split state.
pub fn dgcz(m: &MomentSet) -> Result<f64> {
    dgcz_paired(m, DgczPairing::Sum)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn hermitian_min_eigenvalue(h: &CMatrix) -> Result<f64> {
    let defect = h.hermiticity_defect();
    let scale = h.as_slice().iter().map(|z| z.norm()).fold(1.0, f64::max);
    if defect > 1e-10 * scale {
        return Err(Error::invalid(format!("matrix is not Hermitian (deviation {defect:.3e})")));
    }
    Ok(linalg::hermitian_eigenvalues(h)?[0])
}

/// `PT(V) + (i/2) PT(Ω)`, with the partial transpose realized as the sign flip
/// of `S_R^y`: `PT(V) = QVQ`, `PT(Ω)` negates and conjugates the right block.
pub fn partially_transposed(m: &MomentSet) -> CMatrix {
    let m = m.lab_frame();
    let q = [1.0, 1.0, 1.0, 1.0, -1.0, 1.0];
    CMatrix::from_fn(6, 6, |a, b| {
        let v = q[a] * m.v[a][b] * q[b];
        let omega = if a >= 3 && b >= 3 { -q[a] * m.omega[a][b] * q[b] } else { m.omega[a][b] };
        C64::new(v, 0.5 * omega)
    })
}

/// `E_CM`: smallest eigenvalue of the partially transposed matrix over `N`.
/// Negative values witness entanglement. Eigenvalues within the solver's
/// relative tolerance of zero are reported as zero.
pub fn covariance_criterion(m: &MomentSet, n: usize) -> Result<f64> {
    let h = partially_transposed(m);
    let lambda = hermitian_min_eigenvalue(&h)?;
    let scale = h.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lambda = if lambda.abs() <= 1e-12 * scale { 0.0 } else { lambda };
    Ok(lambda / n as f64)
}

/// Angle of the rotated frame in which `Var(S^{z'}_L + S^{z'}_R)` is minimal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingAngle {
    pub theta: f64,
    /// Both stationary variances coincide; `theta` is then arbitrary (0).
    pub degenerate: bool,
}

/// `θ = ½ atan2(4 sin 4t cos^{N-2} 4t, 1 - cos^{N-2} 8t)`, reported in `[0, π)`.
/// At `t = 0` the limit `π/4` is returned.
pub fn squeezing_angle(n: usize, t: f64) -> Result<SqueezingAngle> {
    if n < 3 {
        return Err(Error::invalid(format!("squeezing angle needs N >= 3, got {n}")));
    }
    if !t.is_finite() {
        return Err(Error::invalid("squeezing time must be finite"));
    }
    if t == 0.0 {
        return Ok(SqueezingAngle { theta: FRAC_PI_4, degenerate: false });
    }
    let p = (n - 2) as i32;
    let a = 1.0 - (8.0 * t).cos().powi(p);
    let b = 4.0 * (4.0 * t).sin() * (4.0 * t).cos().powi(p);
    if a.abs() < 1e-14 && b.abs() < 1e-14 {
        return Ok(SqueezingAngle { theta: 0.0, degenerate: true });
    }
    let mut theta = 0.5 * b.atan2(a);
    if theta < 0.0 {
        theta += std::f64::consts::PI;
    }
    Ok(SqueezingAngle { theta, degenerate: false })
}

/// `E_G`, its optimal gains and the squeezing-frame angle of the moments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainOptimum {
    pub value: f64,
    pub g_y: f64,
    pub g_z: f64,
}

struct GiovannettiObjective {
    vz: [f64; 3],
    vy: [f64; 3],
    lx: f64,
    rx: f64,
}

impl GiovannettiObjective {
    fn new(m: &MomentSet) -> Self {
        let (lz, rz, ly, ry) = (unit(idx::LZ), unit(idx::RZ), unit(idx::LY), unit(idx::RY));
        Self {
            vz: [m.variance_of(&lz), m.covariance_of(&lz, &rz), m.variance_of(&rz)],
            vy: [m.variance_of(&ly), m.covariance_of(&ly, &ry), m.variance_of(&ry)],
            lx: m.means[idx::LX],
            rx: m.means[idx::RX],
        }
    }

    /// `Var(g A - B) = g² Var A - 2 g Cov + Var B`.
    fn quad(v: &[f64; 3], g: f64) -> f64 {
        (g * g * v[0] - 2.0 * g * v[1] + v[2]).max(0.0)
    }

    fn denominator(&self, g_y: f64, g_z: f64) -> f64 {
        (g_z * g_y).abs() * self.lx + self.rx
    }

    fn eval(&self, g_y: f64, g_z: f64) -> f64 {
        let den = self.denominator(g_y, g_z);
        if den <= 0.0 {
            return f64::INFINITY;
        }
        (Self::quad(&self.vz, g_z) * Self::quad(&self.vy, g_y)).sqrt() / den
    }
}

/// Candidate gains of the coarse search: zero and ±20 geometric values in [0.01, 4].
fn gain_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    for i in 0..20 {
        let v = 0.01 * 400f64.powf(i as f64 / 19.0);
        g.push(v);
        g.push(-v);
    }
    g.sort_by(f64::total_cmp);
    g
}

/// Nelder-Mead on two variables; returns the best vertex and value.
fn nelder_mead(f: &impl Fn(f64, f64) -> f64, start: [f64; 2], step: f64, tol: f64, max_iter: usize) -> Result<([f64; 2], f64)> {
    let mut simplex = [start, [start[0] + step, start[1]], [start[0], start[1] + step]];
    let mut values = simplex.map(|p| f(p[0], p[1]));
    for _ in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        let spread = (values[2] - values[0]).abs();
        let size = simplex[1..]
            .iter()
            .map(|p| (p[0] - simplex[0][0]).abs().max((p[1] - simplex[0][1]).abs()))
            .fold(0.0, f64::max);
        if spread <= tol * values[0].abs().max(1e-300) && size <= tol {
            return Ok((simplex[0], values[0]));
        }
        let centroid = [(simplex[0][0] + simplex[1][0]) / 2.0, (simplex[0][1] + simplex[1][1]) / 2.0];
        let along = |s: f64| [centroid[0] + s * (simplex[2][0] - centroid[0]), centroid[1] + s * (simplex[2][1] - centroid[1])];
        let reflected = along(-1.0);
        let fr = f(reflected[0], reflected[1]);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(expanded[0], expanded[1]);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = if fr < values[2] { along(-0.5) } else { along(0.5) };
            let fc = f(contracted[0], contracted[1]);
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        simplex[0][0] + 0.5 * (simplex[i][0] - simplex[0][0]),
                        simplex[0][1] + 0.5 * (simplex[i][1] - simplex[0][1]),
                    ];
                    values[i] = f(simplex[i][0], simplex[i][1]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Err(Error::NotConverged { iterations: max_iter, best_value: values[best], best_point: simplex[best].to_vec() })
}

/// Giovannetti product criterion in the frame of `m`:
/// `E_G = sqrt(Var(g^z S_L^{z'} - S_R^{z'}) Var(g^y S_L^{y'} - S_R^{y'})) / (|g^z g^y|⟨S_L^x⟩ + ⟨S_R^x⟩)`
/// minimized over the gains. `E_G < 1` witnesses entanglement.
pub fn giovannetti(m: &MomentSet) -> Result<GainOptimum> {
    let obj = GiovannettiObjective::new(m);
    let f = |gy: f64, gz: f64| obj.eval(gy, gz);
    let grid = gain_grid();
    let mut best: (f64, f64, f64) = (f64::INFINITY, 0.0, 0.0);
    for &gy in &grid {
        for &gz in &grid {
            let v = f(gy, gz);
            let better = v < best.0 * (1.0 - 1e-12);
            let tie = (v - best.0).abs() <= 1e-12 * best.0.abs() && gy.abs() + gz.abs() < best.1.abs() + best.2.abs();
            if better || tie {
                best = (v, gy, gz);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::UndefinedWitness("Giovannetti objective is infinite on the whole gain grid".into()));
    }
    let ([gy, gz], v) = nelder_mead(&f, [best.1, best.2], 0.05, 1e-10, 5000)?;
    let (value, g_y, g_z) = if v < best.0 * (1.0 - 1e-13) { (v, gy, gz) } else { best };
    check_denominator(obj.denominator(g_y, g_z), m.n_total, "Giovannetti")?;
    Ok(GainOptimum { value, g_y, g_z })
}

/// `ξ = N Var(S_L^{z'} + S_R^{z'}) / ⟨S_L^x + S_R^x⟩²` in the frame of `m`.
pub fn wineland_xi(m: &MomentSet, n: usize) -> Result<f64> {
    let mean = m.means[idx::LX] + m.means[idx::RX];
    check_denominator(mean.abs(), n, "Wineland")?;
    Ok(n as f64 * m.variance_of(&lin(&[(idx::LZ, 1.0), (idx::RZ, 1.0)])) / (mean * mean))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SteeringDirection {
    LeftSteersRight,
    RightSteersLeft,
}

/// EPR steering product of inferred variances over `⟨S^x⟩` of the steered
/// well. Gains are optimal per factor: `g = Cov(A, B) / Var(A)`.
pub fn epr_steering(m: &MomentSet, direction: SteeringDirection) -> Result<GainOptimum> {
    let (a_z, b_z, a_y, b_y, steered) = match direction {
        SteeringDirection::LeftSteersRight => (idx::LZ, idx::RZ, idx::LY, idx::RY, idx::RX),
        SteeringDirection::RightSteersLeft => (idx::RZ, idx::LZ, idx::RY, idx::LY, idx::LX),
    };
    let den = check_denominator(m.means[steered], m.n_total, "steering")?;
    let inferred = |a: usize, b: usize| {
        let (ua, ub) = (unit(a), unit(b));
        let va = m.variance_of(&ua);
        let cov = m.covariance_of(&ua, &ub);
        let vb = m.variance_of(&ub);
        if va <= 0.0 {
            (vb, 0.0)
        } else {
            ((vb - cov * cov / va).max(0.0), cov / va)
        }
    };
    let (rz, g_z) = inferred(a_z, b_z);
    let (ry, g_y) = inferred(a_y, b_y);
    Ok(GainOptimum { value: (rz * ry).sqrt() / den, g_y, g_z })
}

/// All witnesses at one time point. Undefined witnesses are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessResult {
    pub e_dgcz: Option<f64>,
    pub e_cm: Option<f64>,
    pub e_g: Option<f64>,
    pub xi: Option<f64>,
    pub e_steer_lr: Option<f64>,
    pub e_steer_rl: Option<f64>,
    pub g_y: Option<f64>,
    pub g_z: Option<f64>,
    pub theta: f64,
    pub theta_degenerate: bool,
}

impl WitnessResult {
    pub fn entangled(&self) -> bool {
        self.dgcz_detects() || self.cm_detects() || self.giovannetti_detects()
    }

    pub fn steerable(&self) -> bool {
        self.e_steer_lr.is_some_and(below_one) || self.e_steer_rl.is_some_and(below_one)
    }

    pub fn dgcz_detects(&self) -> bool {
        self.e_dgcz.is_some_and(below_one)
    }

    pub fn cm_detects(&self) -> bool {
        self.e_cm.is_some_and(|v| v < -DETECTION_MARGIN)
    }

    pub fn giovannetti_detects(&self) -> bool {
        self.e_g.is_some_and(below_one)
    }

    pub fn squeezed(&self) -> bool {
        self.xi.is_some_and(below_one)
    }
}

fn below_one(v: f64) -> bool {
    v < 1.0 - DETECTION_MARGIN
}

fn defined<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedWitness(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Evaluates every witness on lab-frame moments at squeezing time `t`.
pub fn evaluate_witnesses(lab: &MomentSet, t: f64) -> Result<WitnessResult> {
    let n = lab.n_total;
    let angle = squeezing_angle(n.max(3), t)?;
    let rotated = lab.rotated(angle.theta);
    let gio = defined(giovannetti(&rotated))?;
    Ok(WitnessResult {
        e_dgcz: defined(dgcz(lab))?,
        e_cm: Some(covariance_criterion(lab, n)?),
        e_g: gio.map(|g| g.value),
        xi: defined(wineland_xi(&rotated, n))?,
        e_steer_lr: defined(epr_steering(&rotated, SteeringDirection::LeftSteersRight))?.map(|g| g.value),
        e_steer_rl: defined(epr_steering(&rotated, SteeringDirection::RightSteersLeft))?.map(|g| g.value),
        g_y: gio.map(|g| g.g_y),
        g_z: gio.map(|g| g.g_z),
        theta: angle.theta,
        theta_degenerate: angle.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{moments, streamed_mixture_moments};
    use crate::statekit::effective_evolution;

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_fn(values.len(), values.len(), |i, j| C64::new(if i == j { values[i] } else { 0.0 }, 0.0))
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert!((hermitian_min_eigenvalue(&CMatrix::identity(6)).unwrap() - 1.0).abs() < 1e-12);
        assert!((hermitian_min_eigenvalue(&diag(&[3.0, -2.0, 5.0])).unwrap() + 2.0).abs() < 1e-12);
        let bad = CMatrix::from_fn(2, 2, |i, j| C64::new((i + 2 * j) as f64, 0.0));
        assert!(matches!(hermitian_min_eigenvalue(&bad), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn product_state_saturates() {
        let lab = moments(&effective_evolution(6, 6, 0.0), None);
        let r = evaluate_witnesses(&lab, 0.0).unwrap();
        assert!((r.e_dgcz.unwrap() - 1.0).abs() < 1e-10);
        assert!(r.e_cm.unwrap() >= 0.0);
        assert!((r.e_g.unwrap() - 1.0).abs() < 1e-10);
        assert_eq!((r.g_y.unwrap(), r.g_z.unwrap()), (0.0, 0.0));
        assert!((r.xi.unwrap() - 1.0).abs() < 1e-10);
        assert!((r.e_steer_lr.unwrap() - 1.0).abs() < 1e-10);
        assert!(!r.entangled() && !r.steerable(), "{r:?}");
    }

    #[test]
    fn mixed_t0_dgcz_is_one() {
        let m = streamed_mixture_moments(500, 0.0, 1e-12).unwrap();
        assert!((dgcz(&m).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn short_time_entanglement_is_detected() {
        let n = 40;
        let t = 1.0 / (4.0 * n as f64);
        let lab = streamed_mixture_moments(n, t, 1e-12).unwrap();
        let r = evaluate_witnesses(&lab, t).unwrap();
        assert!(r.e_dgcz.unwrap() < 1.0);
        assert!(r.e_cm.unwrap() < 0.0);
        assert!(r.e_g.unwrap() < 1.0);
        assert!(dgcz_paired(&lab, DgczPairing::Difference).unwrap() > 1.0);
    }

    #[test]
    fn squeezing_angle_examples() {
        let a = squeezing_angle(20, 0.0).unwrap();
        assert_eq!(a.theta, FRAC_PI_4);
        for t in [1e-6, 1e-5] {
            assert!((squeezing_angle(20, t).unwrap().theta - FRAC_PI_4).abs() < 1e-3);
        }
        assert!(squeezing_angle(2, 0.1).is_err());
        let deg = squeezing_angle(20, FRAC_PI_4).unwrap();
        assert!(deg.degenerate || deg.theta == 0.0 || (deg.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn undefined_denominator_is_reported() {
        // fully wrapped: ⟨S^x⟩ vanishes
        let lab = moments(&effective_evolution(5, 5, std::f64::consts::FRAC_PI_8), None);
        assert!(matches!(dgcz(&lab), Err(Error::UndefinedWitness(_))));
        assert!(matches!(wineland_xi(&lab, 10), Err(Error::UndefinedWitness(_))));
        let r = evaluate_witnesses(&lab, std::f64::consts::FRAC_PI_8).unwrap();
        assert!(r.e_dgcz.is_none() && r.xi.is_none());
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: f64, y: f64| (x - 1.5).powi(2) + 3.0 * (y + 0.25).powi(2) + 2.0;
        let (p, v) = nelder_mead(&f, [0.0, 0.0], 0.1, 1e-12, 5000).unwrap();
        assert!((p[0] - 1.5).abs() < 1e-5 && (p[1] + 0.25).abs() < 1e-5);
        assert!((v - 2.0).abs() < 1e-10);
        assert!(matches!(nelder_mead(&f, [0.0, 0.0], 0.1, 1e-12, 3), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn gain_grid_shape() {
        let g = gain_grid();
        assert_eq!(g.len(), 41);
        assert_eq!(g[20], 0.0);
        assert!((g[40] - 4.0).abs() < 1e-12 && (g[21] - 0.01).abs() < 1e-15);
    }
}
