use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sqsplit_cli::output::{
    criteria_table, echo_value, entanglement_table, residual_dump, state_output, verify_report, wigner_grid_csv,
    wigner_sidecar, wigner_summary,
};
use sqsplit_cli::{
    criteria_rows, entanglement_rows, state_dump, thread_count, verify, wigner_frames, CliError, CliResult, Format,
    Overrides, SweepConfig, WignerKind, WignerRequest,
};

/// Exact simulations of split spin-squeezed condensates.
#[derive(Parser, Debug)]
#[command(name = "sqsplit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Dump the conditional state at one time.
    State,
    /// Logarithmic negativity over a time grid.
    Entanglement,
    /// Entanglement, squeezing and steering witnesses over a time grid.
    Criteria,
    /// Same table as `criteria`.
    Steering,
    /// Marginal or conditional Wigner functions on the display lattice.
    Wigner,
    /// Check split-then-project against the effective evolution.
    Verify,
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON file with any of the flag values; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Total atom number.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Left-well atom number of the conditional block.
    #[arg(long, global = true)]
    nl: Option<usize>,
    /// `mixed` or `conditional`.
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    t_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    t_max: Option<f64>,
    /// Single time point (same as `--t-min`).
    #[arg(long, global = true, allow_negative_numbers = true)]
    t: Option<f64>,
    /// Number of time points, endpoints included.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Right-well Fock outcome for conditional Wigner functions.
    #[arg(long, global = true)]
    kr: Option<usize>,
    /// `marginal` or `conditional`.
    #[arg(long, global = true, value_enum)]
    kind: Option<KindArg>,
    /// Probability mass dropped from the mixture tails.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Gauss-Legendre order for Wigner integrals.
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Output file (sweeps) or directory (wigner).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads; falls back to SQSPLIT_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Largest N checked by `verify`.
    #[arg(long, global = true)]
    max_n: Option<usize>,
    #[arg(long, global = true, hide = true, allow_negative_numbers = true)]
    inject_phase: Option<f64>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum KindArg {
    Marginal,
    Conditional,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Json,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            n: self.n,
            nl: self.nl,
            mode: self.mode.clone(),
            t_min: self.t_min,
            t_max: self.t_max,
            t: self.t,
            steps: self.steps,
            kr: self.kr,
            kind: self.kind.map(|k| match k {
                KindArg::Marginal => WignerKind::Marginal,
                KindArg::Conditional => WignerKind::Conditional,
            }),
            epsilon: self.epsilon,
            order: self.order,
            out: self.out.clone(),
            format: self.format.map(|f| match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            }),
            threads: self.threads,
            max_n: self.max_n,
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let mut o = cli.flags.overrides();
    if let Some(path) = &cli.flags.config {
        o = o.over(Overrides::from_file(path)?);
    }
    o.threads = thread_count(o.threads)?;

    match cli.command {
        Command::State => {
            let n = o.n.ok_or_else(|| CliError::Usage("--n is required".into()))?;
            let dump = state_dump(n, o.nl.unwrap_or(n / 2), o.t.or(o.t_min).unwrap_or(0.0))?;
            emit(o.out.as_deref(), &state_output(&dump, o.format.unwrap_or(Format::Json)))
        }
        Command::Entanglement => {
            let cfg = SweepConfig::resolve(&o)?;
            emit(cfg.out.as_deref(), &entanglement_table(&cfg, &entanglement_rows(&cfg)?))
        }
        Command::Criteria | Command::Steering => {
            let cfg = SweepConfig::resolve(&o)?;
            let name = if cli.command == Command::Steering { "steering" } else { "criteria" };
            emit(cfg.out.as_deref(), &criteria_table(name, &cfg, &criteria_rows(&cfg)?))
        }
        Command::Wigner => run_wigner(&o),
        Command::Verify => {
            let report = verify(o.max_n.unwrap_or(8), cli.flags.inject_phase, o.threads)?;
            emit(o.out.as_deref(), &verify_report(&report))?;
            if report.passed() {
                Ok(())
            } else {
                eprint!("{}", residual_dump(&report));
                Err(CliError::Assertion(format!(
                    "{} of {} cases exceed tolerance",
                    report.failures().count(),
                    report.cases.len()
                )))
            }
        }
    }
}

fn run_wigner(o: &Overrides) -> CliResult<()> {
    if o.mode.as_deref() == Some("mixed") {
        return Err(CliError::Usage("wigner functions are defined per conditional block, not for the mixture".into()));
    }
    let cfg = SweepConfig::resolve(&Overrides { mode: Some("conditional".into()), ..o.clone() })?;
    let n_left = match cfg.mode {
        sqsplit_cli::Mode::Conditional(nl) => nl,
        sqsplit_cli::Mode::Mixed => unreachable!("resolved as conditional"),
    };
    let kind = o.kind.unwrap_or(WignerKind::Marginal);
    let req = WignerRequest {
        n_total: cfg.n_total,
        n_left,
        kind,
        k_r: o.kr,
        times: cfg.times(),
        order: cfg.order,
        threads: cfg.threads,
    };
    let frames = wigner_frames(&req)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    let kind_name = match kind {
        WignerKind::Marginal => "marginal",
        WignerKind::Conditional => "conditional",
    };
    let echo = echo_value("wigner", &cfg, json!({ "kind": kind, "k_r": o.kr }));
    let mut files = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        let stem = match frame.k_r {
            Some(k) => format!("wigner_{kind_name}_kr{k}_t{i:03}"),
            None => format!("wigner_{kind_name}_t{i:03}"),
        };
        std::fs::write(dir.join(format!("{stem}.csv")), wigner_grid_csv(&echo, frame))?;
        std::fs::write(dir.join(format!("{stem}.json")), wigner_sidecar(&echo, frame))?;
        files.push(format!("{stem}.csv"));
    }
    emit(None, &wigner_summary(&echo, &frames, &files))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sqsplit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
