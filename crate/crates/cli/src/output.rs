use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use sqsplit_core::statekit::StateDump;
use sqsplit_core::witness::WitnessResult;

use crate::commands::{VerifyReport, WignerFrame};
use crate::config::{Format, SweepConfig};

pub const CRITERIA_HEADER: &str = "t,E_D,E_CM,E_G,xi,E_LR,E_RL,g_y,g_z,theta";

/// 17 significant digits, round-trip exact.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), num)
}

/// `{"command": ..., "config": ...}` plus any extra fields.
pub fn echo_value(command: &str, config: &impl Serialize, extra: Value) -> Value {
    let mut v = json!({ "command": command, "config": config });
    if let (Value::Object(map), Value::Object(more)) = (&mut v, extra) {
        map.extend(more);
    }
    v
}

pub fn echo_line(echo: &Value) -> String {
    format!("# {echo}\n")
}

fn json_document(echo: Value, rows: Vec<Value>) -> String {
    let mut doc = echo;
    doc["rows"] = Value::Array(rows);
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn entanglement_table(cfg: &SweepConfig, rows: &[(f64, f64)]) -> String {
    let echo = echo_value("entanglement", cfg, Value::Null);
    match cfg.format {
        Format::Json => json_document(echo, rows.iter().map(|&(t, e)| json!({ "t": t, "logneg": e })).collect()),
        Format::Csv => {
            let mut s = echo_line(&echo);
            s.push_str("t,logneg\n");
            for &(t, e) in rows {
                let _ = writeln!(s, "{},{}", num(t), num(e));
            }
            s
        }
    }
}

pub fn criteria_table(command: &str, cfg: &SweepConfig, rows: &[(f64, WitnessResult)]) -> String {
    let echo = echo_value(command, cfg, Value::Null);
    match cfg.format {
        Format::Json => json_document(
            echo,
            rows.iter()
                .map(|(t, r)| {
                    let mut v = serde_json::to_value(r).expect("plain data serializes");
                    v["t"] = json!(t);
                    v
                })
                .collect(),
        ),
        Format::Csv => {
            let mut s = echo_line(&echo);
            s.push_str(CRITERIA_HEADER);
            s.push('\n');
            for (t, r) in rows {
                let cols = [
                    num(*t),
                    opt(r.e_dgcz),
                    opt(r.e_cm),
                    opt(r.e_g),
                    opt(r.xi),
                    opt(r.e_steer_lr),
                    opt(r.e_steer_rl),
                    opt(r.g_y),
                    opt(r.g_z),
                    num(r.theta),
                ];
                s.push_str(&cols.join(","));
                s.push('\n');
            }
            s
        }
    }
}

pub fn state_output(dump: &StateDump, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(dump).expect("plain data serializes");
            s.push('\n');
            s
        }
        Format::Csv => {
            let echo = json!({ "command": "state", "n_left": dump.n_left, "n_right": dump.n_right, "t": dump.t });
            let mut s = echo_line(&echo);
            s.push_str("k_l,k_r,re,im\n");
            let cols = dump.n_right + 1;
            for (idx, [re, im]) in dump.amplitudes.iter().enumerate() {
                let _ = writeln!(s, "{},{},{},{}", idx / cols, idx % cols, num(*re), num(*im));
            }
            s
        }
    }
}

/// Display-lattice samples, one `theta,phi,w` row per point.
pub fn wigner_grid_csv(echo: &Value, frame: &WignerFrame) -> String {
    let g = &frame.display;
    let mut s = echo_line(echo);
    s.push_str("theta,phi,w\n");
    for (i, theta) in g.thetas.iter().enumerate() {
        for (k, phi) in g.phis.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", num(*theta), num(*phi), num(g.at(i, k)));
        }
    }
    s
}

pub fn wigner_sidecar(echo: &Value, frame: &WignerFrame) -> String {
    let mut v = json!({
        "j": frame.j,
        "t": frame.t,
        "k_r": frame.k_r,
        "normalization": frame.normalization,
        "min": frame.min,
        "max": frame.max,
        "integral": frame.integral,
        "negativity_volume": frame.negativity_volume,
    });
    v["echo"] = echo.clone();
    let mut s = serde_json::to_string_pretty(&v).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn wigner_summary(echo: &Value, frames: &[WignerFrame], files: &[String]) -> String {
    let mut s = echo_line(echo);
    s.push_str("t,k_r,min,max,integral,negativity_volume,file\n");
    for (f, file) in frames.iter().zip(files) {
        let kr = f.k_r.map_or_else(|| "nan".to_string(), |k| k.to_string());
        let _ = writeln!(
            s,
            "{},{kr},{},{},{},{},{file}",
            num(f.t),
            num(f.min),
            num(f.max),
            num(f.integral),
            num(f.negativity_volume)
        );
    }
    s
}

pub fn verify_report(report: &VerifyReport) -> String {
    let echo = json!({ "command": "verify", "max_n": report.max_n, "times": crate::VERIFY_TIMES });
    let mut s = echo_line(&echo);
    s.push_str("n,worst_amplitude_residual,worst_probability_residual,status\n");
    for n in 1..=report.max_n {
        let cases: Vec<_> = report.cases.iter().filter(|c| c.n == n).collect();
        let amp = cases.iter().map(|c| c.amplitude_residual).fold(0.0, f64::max);
        let prob = cases.iter().map(|c| c.probability_residual).fold(0.0, f64::max);
        let status = if cases.iter().all(|c| c.passed()) { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{n},{},{},{status}", num(amp), num(prob));
    }
    let _ = writeln!(
        s,
        "# {} cases, worst amplitude residual {}, worst probability residual {}: {}",
        report.cases.len(),
        num(report.worst_amplitude_residual),
        num(report.worst_probability_residual),
        if report.passed() { "PASS" } else { "FAIL" }
    );
    s
}

/// Failing cases, for stderr.
pub fn residual_dump(report: &VerifyReport) -> String {
    let mut s = String::from("n,n_left,t,amplitude_residual,probability_residual\n");
    for c in report.failures() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            c.n,
            c.n_left,
            num(c.t),
            num(c.amplitude_residual),
            num(c.probability_residual)
        );
    }
    s
}
