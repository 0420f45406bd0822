use std::f64::consts::FRAC_PI_8;

use rayon::prelude::*;
use serde::Serialize;

use sqsplit_core::entangle::{log_negativity_mixed, log_negativity_pure};
use sqsplit_core::linalg::CMatrix;
use sqsplit_core::observables::{moments, streamed_mixture_moments};
use sqsplit_core::specfun::gauss_legendre_sphere;
use sqsplit_core::statekit::{
    effective_evolution, mixed_split_state, project_left_number, sector_probability, split, x_polarized, StateDump,
};
use sqsplit_core::wigner::{
    conditional_density_closed, conditional_wigner_closed, default_rule, display_lattice, marginal_density_closed,
    marginal_wigner_closed, negativity_volume, Multipoles, WignerGrid, IMAG_TOLERANCE,
};
use sqsplit_core::witness::{evaluate_witnesses, WitnessResult};
use sqsplit_core::C64;

use crate::config::{Mode, SweepConfig, WignerKind};
use crate::{CliError, CliResult};

pub const MIXED_ENTANGLEMENT_MAX_N: usize = 24;
pub const WIGNER_MAX_N: usize = 40;
pub const VERIFY_MAX_N: usize = 12;
pub const VERIFY_TIMES: [f64; 4] = [0.05, 0.3, 1.0, FRAC_PI_8];
pub const VERIFY_TOLERANCE: f64 = 1e-12;

fn pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

/// Evaluates `f` at every time point; results come back in input order.
fn par_map<T: Send>(
    threads: Option<usize>,
    times: &[f64],
    f: impl Fn(f64) -> CliResult<T> + Sync + Send,
) -> CliResult<Vec<T>> {
    pool(threads)?.install(|| times.par_iter().map(|&t| f(t)).collect())
}

fn split_block(cfg: &SweepConfig, n_left: usize) -> CliResult<(usize, usize)> {
    if n_left > cfg.n_total {
        return Err(CliError::Usage(format!("N_L = {n_left} exceeds N = {}", cfg.n_total)));
    }
    Ok((n_left, cfg.n_total - n_left))
}

/// `(t, E_N)` rows for the mixture or one conditional block.
pub fn entanglement_rows(cfg: &SweepConfig) -> CliResult<Vec<(f64, f64)>> {
    match cfg.mode {
        Mode::Mixed => {
            if cfg.n_total > MIXED_ENTANGLEMENT_MAX_N {
                return Err(CliError::Usage(format!(
                    "mixed-state negativity supports N <= {MIXED_ENTANGLEMENT_MAX_N}, got {}",
                    cfg.n_total
                )));
            }
            par_map(cfg.threads, &cfg.times(), |t| {
                Ok((t, log_negativity_mixed(&mixed_split_state(cfg.n_total, t, cfg.epsilon)?)))
            })
        }
        Mode::Conditional(nl) => {
            let (nl, nr) = split_block(cfg, nl)?;
            par_map(cfg.threads, &cfg.times(), |t| Ok((t, log_negativity_pure(&effective_evolution(nl, nr, t)))))
        }
    }
}

/// Every witness per time point.
pub fn criteria_rows(cfg: &SweepConfig) -> CliResult<Vec<(f64, WitnessResult)>> {
    let block = match cfg.mode {
        Mode::Mixed => None,
        Mode::Conditional(nl) => Some(split_block(cfg, nl)?),
    };
    par_map(cfg.threads, &cfg.times(), |t| {
        let lab = match block {
            None => streamed_mixture_moments(cfg.n_total, t, cfg.epsilon)?,
            Some((nl, nr)) => moments(&effective_evolution(nl, nr, t), None),
        };
        Ok((t, evaluate_witnesses(&lab, t)?))
    })
}

pub fn state_dump(n_total: usize, n_left: usize, t: f64) -> CliResult<StateDump> {
    if n_left > n_total {
        return Err(CliError::Usage(format!("N_L = {n_left} exceeds N = {n_total}")));
    }
    Ok(effective_evolution(n_left, n_total - n_left, t).dump(t))
}

#[derive(Clone, Debug)]
pub struct WignerRequest {
    pub n_total: usize,
    pub n_left: usize,
    pub kind: WignerKind,
    pub k_r: Option<usize>,
    pub times: Vec<f64>,
    pub order: Option<usize>,
    pub threads: Option<usize>,
}

/// One rendered Wigner function: the display lattice plus summary numbers
/// computed on the quadrature rule.
#[derive(Clone, Debug)]
pub struct WignerFrame {
    pub t: f64,
    pub k_r: Option<usize>,
    pub j: f64,
    pub normalization: f64,
    pub display: WignerGrid,
    pub min: f64,
    pub max: f64,
    pub integral: f64,
    pub negativity_volume: f64,
}

impl WignerRequest {
    fn validate(&self) -> CliResult<()> {
        if self.n_total > WIGNER_MAX_N {
            return Err(CliError::Usage(format!("wigner supports N <= {WIGNER_MAX_N}, got {}", self.n_total)));
        }
        if self.n_left > self.n_total {
            return Err(CliError::Usage(format!("N_L = {} exceeds N = {}", self.n_left, self.n_total)));
        }
        let n_right = self.n_total - self.n_left;
        match (self.kind, self.k_r) {
            (WignerKind::Conditional, None) => Err(CliError::Usage("conditional wigner needs --kr".into())),
            (WignerKind::Conditional, Some(k)) if k > n_right => {
                Err(CliError::Usage(format!("--kr {k} out of range 0..={n_right}")))
            }
            (WignerKind::Marginal, Some(_)) => Err(CliError::Usage("--kr applies only to --kind conditional".into())),
            _ => Ok(()),
        }
    }
}

pub fn wigner_frames(req: &WignerRequest) -> CliResult<Vec<WignerFrame>> {
    req.validate()?;
    let (nl, nr) = (req.n_left, req.n_total - req.n_left);
    let rule = match req.order {
        Some(order) => gauss_legendre_sphere(order, 2 * order)?,
        None => default_rule(nl),
    };
    par_map(req.threads, &req.times, |t| {
        let (rho, normalization, quad) = match (req.kind, req.k_r) {
            (WignerKind::Conditional, Some(k)) => {
                let (rho, norm) = conditional_density_closed(nl, nr, k, t)?;
                (rho, norm, conditional_wigner_closed(nl, nr, k, t, &rule)?)
            }
            _ => (marginal_density_closed(nl, nr, t), 1.0, marginal_wigner_closed(nl, nr, t, &rule)?),
        };
        let display = display_lattice(&Multipoles::from_matrix(&rho)?);
        if display.max_imag > IMAG_TOLERANCE {
            return Err(sqsplit_core::Error::NotHermitian(display.max_imag).into());
        }
        Ok(WignerFrame {
            t,
            k_r: req.k_r,
            j: display.j(),
            normalization,
            min: display.min(),
            max: display.max(),
            integral: quad.integral()?,
            negativity_volume: negativity_volume(&quad)?,
            display,
        })
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyCase {
    pub n: usize,
    pub n_left: usize,
    pub t: f64,
    pub amplitude_residual: f64,
    pub probability_residual: f64,
}

impl VerifyCase {
    pub fn passed(&self) -> bool {
        self.amplitude_residual <= VERIFY_TOLERANCE && self.probability_residual <= VERIFY_TOLERANCE
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub max_n: usize,
    pub cases: Vec<VerifyCase>,
    pub worst_amplitude_residual: f64,
    pub worst_probability_residual: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(VerifyCase::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyCase> {
        self.cases.iter().filter(|c| !c.passed())
    }
}

/// Compares split-then-project against the effective evolution for every
/// `N <= max_n`, every `N_L` and every probe time. `inject_phase` multiplies
/// the effective amplitudes by `e^{i δ k_L}` before comparing.
pub fn verify(max_n: usize, inject_phase: Option<f64>, threads: Option<usize>) -> CliResult<VerifyReport> {
    if !(1..=VERIFY_MAX_N).contains(&max_n) {
        return Err(CliError::Usage(format!("--max-n must lie in 1..={VERIFY_MAX_N}, got {max_n}")));
    }
    let jobs: Vec<(usize, usize, f64)> = (1..=max_n)
        .flat_map(|n| (0..=n).flat_map(move |nl| VERIFY_TIMES.iter().map(move |&t| (n, nl, t))))
        .collect();
    let cases: Vec<VerifyCase> = pool(threads)?.install(|| {
        jobs.par_iter()
            .map(|&(n, nl, t)| -> CliResult<VerifyCase> {
                let full = split(&x_polarized(n).one_axis_twist(t));
                let (p, generic) = project_left_number(&full, nl)?;
                let mut closed = effective_evolution(nl, n - nl, t).amplitudes().clone();
                if let Some(delta) = inject_phase {
                    corrupt(&mut closed, delta);
                }
                let expected = sector_probability(n, nl);
                Ok(VerifyCase {
                    n,
                    n_left: nl,
                    t,
                    amplitude_residual: generic.amplitudes().max_abs_diff(&closed),
                    probability_residual: (p - expected).abs() / expected,
                })
            })
            .collect::<CliResult<_>>()
    })?;
    let worst = |f: fn(&VerifyCase) -> f64| cases.iter().map(f).fold(0.0, f64::max);
    Ok(VerifyReport {
        max_n,
        worst_amplitude_residual: worst(|c| c.amplitude_residual),
        worst_probability_residual: worst(|c| c.probability_residual),
        cases,
    })
}

fn corrupt(psi: &mut CMatrix, delta: f64) {
    for kl in 0..psi.rows() {
        for kr in 0..psi.cols() {
            psi[(kl, kr)] *= C64::from_polar(1.0, delta * kl as f64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;

    fn cfg(o: Overrides) -> SweepConfig {
        SweepConfig::resolve(&o).unwrap()
    }

    #[test]
    fn single_step_at_zero() {
        let rows = entanglement_rows(&cfg(Overrides { n: Some(10), ..Default::default() })).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].0, 0.0);
        assert!(rows[0].1.abs() < 1e-12);
    }

    #[test]
    fn mixed_negativity_size_limit() {
        let c = cfg(Overrides { n: Some(25), ..Default::default() });
        assert!(matches!(entanglement_rows(&c), Err(CliError::Usage(_))));
    }

    #[test]
    fn verify_passes_and_detects_injection() {
        let clean = verify(4, None, Some(2)).unwrap();
        assert!(clean.passed() && clean.worst_amplitude_residual < 1e-12);
        assert_eq!(clean.cases.len(), (2 + 3 + 4 + 5) * VERIFY_TIMES.len());
        let bad = verify(4, Some(0.1), Some(2)).unwrap();
        assert!(!bad.passed());
        assert!(verify(13, None, None).is_err() && verify(0, None, None).is_err());
    }

    #[test]
    fn wigner_rejects_bad_requests() {
        let base = WignerRequest {
            n_total: 20,
            n_left: 10,
            kind: WignerKind::Conditional,
            k_r: Some(11),
            times: vec![0.05],
            order: None,
            threads: Some(1),
        };
        assert!(matches!(wigner_frames(&base), Err(CliError::Usage(_))));
        assert!(wigner_frames(&WignerRequest { k_r: None, ..base.clone() }).is_err());
        assert!(wigner_frames(&WignerRequest { n_total: 41, ..base.clone() }).is_err());
        let ok = wigner_frames(&WignerRequest { k_r: Some(5), ..base }).unwrap();
        assert_eq!(ok[0].display.values.len(), 181 * 361);
        assert!((ok[0].normalization - 1024.0 * 252.0).abs() < 1e-6);
    }
}
