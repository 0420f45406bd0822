use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WignerKind {
    Marginal,
    Conditional,
}

/// Which state a sweep evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "n_left")]
pub enum Mode {
    Mixed,
    Conditional(usize),
}

/// Optional settings, as read from a JSON config file or the command line.
/// Flags override the file field by field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub n: Option<usize>,
    pub nl: Option<usize>,
    pub mode: Option<String>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub t: Option<f64>,
    pub steps: Option<usize>,
    pub kr: Option<usize>,
    pub kind: Option<WignerKind>,
    pub epsilon: Option<f64>,
    pub order: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub max_n: Option<usize>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }

    /// Fields set in `self` win over `base`.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            n: self.n.or(base.n),
            nl: self.nl.or(base.nl),
            mode: self.mode.or(base.mode),
            t_min: self.t_min.or(base.t_min),
            t_max: self.t_max.or(base.t_max),
            t: self.t.or(base.t),
            steps: self.steps.or(base.steps),
            kr: self.kr.or(base.kr),
            kind: self.kind.or(base.kind),
            epsilon: self.epsilon.or(base.epsilon),
            order: self.order.or(base.order),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            threads: self.threads.or(base.threads),
            max_n: self.max_n.or(base.max_n),
        }
    }
}

/// Fully resolved sweep settings. `threads` is kept out of the serialized
/// echo so outputs do not depend on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_total: usize,
    pub mode: Mode,
    pub t_min: f64,
    pub t_max: f64,
    pub steps: usize,
    pub epsilon: f64,
    pub order: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub format: Format,
    #[serde(skip)]
    pub threads: Option<usize>,
}

pub const DEFAULT_EPSILON: f64 = 1e-12;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl SweepConfig {
    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        let n_total = o.n.ok_or_else(|| usage("--n is required"))?;
        if n_total == 0 {
            return Err(usage("--n must be positive"));
        }
        let conditional = match o.mode.as_deref() {
            None => o.nl.is_some(),
            Some("mixed") => false,
            Some("conditional") => true,
            Some(other) => return Err(usage(format!("unknown mode '{other}' (expected mixed or conditional)"))),
        };
        let mode = match conditional {
            false => Mode::Mixed,
            true => {
                let nl = o.nl.unwrap_or(n_total / 2);
                if nl > n_total {
                    return Err(usage(format!("--nl {nl} exceeds --n {n_total}")));
                }
                Mode::Conditional(nl)
            }
        };
        let t_min = o.t_min.or(o.t).unwrap_or(0.0);
        let t_max = o.t_max.unwrap_or(t_min);
        let steps = o.steps.unwrap_or(1);
        let epsilon = o.epsilon.unwrap_or(DEFAULT_EPSILON);
        if !(t_min.is_finite() && t_max.is_finite()) || t_min > t_max {
            return Err(usage(format!("need finite t_min <= t_max, got [{t_min}, {t_max}]")));
        }
        if steps == 0 {
            return Err(usage("--steps must be at least 1"));
        }
        if steps == 1 && t_max != t_min {
            return Err(usage("a single step needs t_min = t_max"));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(usage(format!("--epsilon must lie in [0, 1), got {epsilon}")));
        }
        if o.threads == Some(0) {
            return Err(usage("--threads must be positive"));
        }
        if o.order == Some(0) {
            return Err(usage("--order must be positive"));
        }
        Ok(Self {
            n_total,
            mode,
            t_min,
            t_max,
            steps,
            epsilon,
            order: o.order,
            out: o.out.clone(),
            format: o.format.unwrap_or(Format::Csv),
            threads: o.threads,
        })
    }

    /// Closed grid: both endpoints are sampled exactly.
    pub fn times(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.t_min];
        }
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| if i == last { self.t_max } else { self.t_min + (self.t_max - self.t_min) * i as f64 / last as f64 })
            .collect()
    }
}

/// `--threads`, then `SQSPLIT_THREADS`, then rayon's default.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("SQSPLIT_THREADS") {
        Ok(v) if v.trim().is_empty() || v.trim() == "auto" => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(usage(format!("SQSPLIT_THREADS must be a positive integer or 'auto', got '{v}'"))),
            Ok(n) => Ok(Some(n)),
        },
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Overrides {
        Overrides { n: Some(10), ..Default::default() }
    }

    #[test]
    fn grid_is_closed() {
        let cfg = SweepConfig::resolve(&Overrides { t_max: Some(1.0), steps: Some(5), ..base() }).unwrap();
        assert_eq!(cfg.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let cfg = SweepConfig::resolve(&Overrides { t_max: Some(std::f64::consts::FRAC_PI_4), steps: Some(7), ..base() })
            .unwrap();
        assert_eq!(*cfg.times().last().unwrap(), std::f64::consts::FRAC_PI_4);
    }

    #[test]
    fn mode_resolution() {
        assert_eq!(SweepConfig::resolve(&base()).unwrap().mode, Mode::Mixed);
        let c = SweepConfig::resolve(&Overrides { nl: Some(3), ..base() }).unwrap();
        assert_eq!(c.mode, Mode::Conditional(3));
        let c = SweepConfig::resolve(&Overrides { mode: Some("conditional".into()), ..base() }).unwrap();
        assert_eq!(c.mode, Mode::Conditional(5));
        assert!(SweepConfig::resolve(&Overrides { mode: Some("pure".into()), ..base() }).is_err());
        assert!(SweepConfig::resolve(&Overrides { nl: Some(11), ..base() }).is_err());
    }

    #[test]
    fn invalid_configs_are_usage_errors() {
        for o in [
            Overrides { t_min: Some(1.0), t_max: Some(0.5), ..base() },
            Overrides { steps: Some(0), ..base() },
            Overrides { epsilon: Some(1.0), ..base() },
            Overrides { n: None, ..base() },
            Overrides { t_max: Some(1.0), ..base() },
        ] {
            assert!(matches!(SweepConfig::resolve(&o), Err(CliError::Usage(_))));
        }
    }

    #[test]
    fn flags_override_file() {
        let file = Overrides { n: Some(20), steps: Some(3), ..Default::default() };
        let flags = Overrides { steps: Some(9), ..Default::default() };
        let merged = flags.over(file);
        assert_eq!((merged.n, merged.steps), (Some(20), Some(9)));
    }

    #[test]
    fn echo_omits_threads_and_output() {
        let cfg = SweepConfig::resolve(&Overrides { threads: Some(4), out: Some("x.csv".into()), ..base() }).unwrap();
        let echo = serde_json::to_string(&cfg).unwrap();
        assert!(!echo.contains("threads") && !echo.contains("x.csv"));
    }
}
