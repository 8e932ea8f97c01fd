// SPDX-License-Identifier: Apache-2.0
//! Command-line front end. Exit codes: 0 success, 1 usage or I/O,
//! 2 parse/validation, 3 solver failure, 4 functional-check failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{
    decode_address, run_scenario, sequence_hold, sequence_read, write_then_read, BenchError, CellSelect,
    CheckResult, Timing,
};
use crate::builders::{build_column, Architecture, CellConfig};
use crate::export::{plot_svg, to_json, waveform_from_csv, waveform_to_csv, RunManifest};
use crate::netlist::{parse_netlist_with_warnings, serialize_netlist, validate, Netlist};
use crate::power::{compare_leakage, config_fingerprint, fingerprint, PowerError};
use crate::sim::{dc_operating_point, transient, Integrator, SimError, SolverConfig, Stimulus};

/// Protocol scenarios step at this size by default (s).
pub const SCENARIO_DT: f64 = 10e-12;
/// Hold windows step at this size by default (s).
pub const HOLD_DT: f64 = 1e-9;
pub const DEFAULT_HOLD_TIME: f64 = 1e-6;

fn parse_si(text: &str) -> Result<f64, String> {
    crate::netlist::parse_value(text).ok_or_else(|| format!("'{text}' is not a number"))
}

#[derive(Debug, Parser)]
#[command(name = "stacksim", version, about = "Conventional vs series-stacked SRAM column simulator")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IntegratorArg {
    Trap,
    Be,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OpKind {
    Read,
    Write,
    Hold,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// DC operating point of a netlist file.
    Op { netlist: PathBuf },
    /// Transient analysis of a netlist file, written as CSV.
    Tran {
        netlist: PathBuf,
        /// Stop time; defaults to the netlist's .tran directive.
        #[arg(long, value_parser = parse_si)]
        tstop: Option<f64>,
        /// Time step; defaults to the netlist's .tran directive.
        #[arg(long, value_parser = parse_si)]
        dt: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "trap")]
        integrator: IntegratorArg,
    },
    /// Build a column, run a read, write (with read-back) or hold protocol.
    Scenario {
        #[arg(long)]
        arch: Architecture,
        #[arg(long, value_enum)]
        op: OpKind,
        /// Address, or `upper` / `lower` for the proposed column.
        #[arg(long)]
        cell: Option<CellSelect>,
        /// Bit to write; only valid with `--op write`.
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        bit: Option<u8>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_si, default_value_t = DEFAULT_HOLD_TIME)]
        hold_time: f64,
        #[arg(long, value_parser = parse_si)]
        dt: Option<f64>,
    },
    /// Hold-leakage comparison of both architectures.
    CompareLeakage {
        #[arg(long, value_parser = parse_si, default_value_t = DEFAULT_HOLD_TIME)]
        hold_time: f64,
        #[arg(long, value_parser = parse_si, default_value_t = HOLD_DT)]
        dt: f64,
        /// Two-bit units per column (conventional cell pairs, stacked pairs).
        #[arg(long, default_value_t = 1)]
        units: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plot CSV waveform columns as SVG.
    Plot {
        csv: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        signals: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
    Solver(String),
    Check(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Check(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Solver(m) | Failure::Check(m) => m,
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(m) => Failure::Usage(m),
            SimError::InvalidNetlist(m) => Failure::Input(m),
            other => Failure::Solver(other.to_string()),
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Sim { .. } => Failure::Solver(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<PowerError> for Failure {
    fn from(e: PowerError) -> Self {
        match e {
            PowerError::Bench(b) => b.into(),
            PowerError::HoldTime => Failure::Usage(e.to_string()),
            other => Failure::Solver(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

struct Manifest {
    command: &'static str,
    inputs: Vec<String>,
    solver: Option<SolverConfig>,
    cell: Option<CellConfig>,
    fingerprint: String,
    start: Instant,
}

impl Manifest {
    fn write(&self, outputs: &[&Path]) -> Result<(), Failure> {
        let m = RunManifest {
            command: self.command.into(),
            inputs: self.inputs.clone(),
            solver_config: self.solver.clone(),
            cell_config: self.cell.clone(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            config_fingerprint: self.fingerprint.clone(),
            wall_clock_s: self.start.elapsed().as_secs_f64(),
        };
        for out in outputs {
            write_file(&RunManifest::sidecar_path(out), &to_json(&m))?;
        }
        Ok(())
    }
}

fn load_netlist(path: &Path, err: &mut dyn Write) -> Result<(Netlist, String), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let (net, warnings) = parse_netlist_with_warnings(&text).map_err(|diags| {
        let lines: Vec<String> = diags.iter().map(|d| format!("{}:{d}", path.display())).collect();
        Failure::Input(lines.join("\n"))
    })?;
    let mut diags = warnings;
    diags.extend(validate(&net));
    for d in &diags {
        let _ = writeln!(err, "{}:{d}", path.display());
    }
    if diags.iter().any(|d| d.is_error()) {
        return Err(Failure::Input("netlist failed validation".into()));
    }
    Ok((net, text))
}

fn solver_fingerprint(net: &Netlist, cfg: &SolverConfig) -> String {
    let cfg = serde_json::to_vec(cfg).expect("config serializes");
    fingerprint(&[serialize_netlist(net).as_bytes(), &cfg])
}

fn cmd_op(netlist: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let (net, _) = load_netlist(netlist, err)?;
    let op = dc_operating_point(&net, &SolverConfig::default())?;
    for (name, v) in &op.node_voltages {
        let _ = writeln!(out, "{name} {v:.5e}");
    }
    for (name, i) in &op.branch_currents {
        let _ = writeln!(out, "{name} {i:.5e}");
    }
    Ok(())
}

fn cmd_tran(
    netlist: &Path,
    tstop: Option<f64>,
    dt: Option<f64>,
    csv: &Path,
    integrator: IntegratorArg,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let start = Instant::now();
    let (net, _) = load_netlist(netlist, err)?;
    let directive = net.directives.tran.clone();
    let tstop = tstop
        .or(directive.as_ref().map(|d| d.stop))
        .ok_or_else(|| Failure::Usage("--tstop is required without a .tran directive".into()))?;
    let dt = dt.or(directive.as_ref().map(|d| d.step)).unwrap_or(tstop / 1000.0);
    let mut cfg = SolverConfig::default().with_timing(dt, tstop);
    cfg.integrator = match integrator {
        IntegratorArg::Trap => Integrator::Trapezoidal,
        IntegratorArg::Be => Integrator::BackwardEuler,
    };
    cfg.validate()?;
    let w = transient(&net, &cfg, &Stimulus::new(), None)?;
    write_file(csv, &waveform_to_csv(&w))?;
    Manifest {
        command: "tran",
        inputs: vec![netlist.display().to_string()],
        fingerprint: solver_fingerprint(&net, &cfg),
        solver: Some(cfg),
        cell: None,
        start,
    }
    .write(&[csv])
}

#[derive(Serialize)]
struct ChecksReport<'a> {
    scenario: &'a str,
    architecture: Architecture,
    checks: &'a [CheckResult],
    waveform_ref: &'a str,
}

#[allow(clippy::too_many_arguments)]
fn cmd_scenario(
    arch: Architecture,
    op: OpKind,
    cell: Option<CellSelect>,
    bit: Option<u8>,
    dir: &Path,
    hold_time: f64,
    dt: Option<f64>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let start = Instant::now();
    match (op, bit) {
        (OpKind::Write, None) => return Err(Failure::Usage("--op write needs --bit".into())),
        (OpKind::Read | OpKind::Hold, Some(_)) => {
            return Err(Failure::Usage("--bit is only valid with --op write".into()))
        }
        _ => {}
    }
    if op == OpKind::Hold && cell.is_some() {
        return Err(Failure::Usage("--cell does not apply to --op hold".into()));
    }
    let cell_cfg = CellConfig::default();
    let (net, sig) = build_column(arch, &cell_cfg, 1).map_err(|e| Failure::Input(e.to_string()))?;
    let timing = Timing::default();
    let sel = cell.unwrap_or(CellSelect::Row(0));
    let addr = match sel {
        CellSelect::Row(a) => a,
        CellSelect::Upper => 0,
        CellSelect::Lower => 1,
    };
    if op != OpKind::Hold {
        decode_address(arch, sig.capacity(), addr)?;
    }
    let (schedule, default_dt) = match op {
        OpKind::Hold => (
            sequence_hold(&sig, hold_time, &timing)?.with_initial_bits(sig.default_pattern()),
            HOLD_DT,
        ),
        OpKind::Read => {
            let bits = sig.default_pattern();
            let expected = bits[addr];
            (
                sequence_read(&sig, sel, Some(expected), &timing)?.with_initial_bits(bits),
                SCENARIO_DT,
            )
        }
        OpKind::Write => (write_then_read(&sig, sel, bit == Some(1), &timing)?, SCENARIO_DT),
    };
    let solver = SolverConfig::default().with_timing(dt.unwrap_or(default_dt), schedule.duration);
    solver.validate()?;
    let result = run_scenario(&net, &sig, &schedule, &solver)?;

    let csv = dir.join("waveform.csv");
    let json = dir.join("checks.json");
    write_file(&csv, &waveform_to_csv(&result.waveform))?;
    let report = ChecksReport {
        scenario: &result.scenario,
        architecture: arch,
        checks: &result.checks,
        waveform_ref: "waveform.csv",
    };
    write_file(&json, &to_json(&report))?;
    let mut fp = config_fingerprint(&cell_cfg, &solver, schedule.duration);
    fp = fingerprint(&[fp.as_bytes(), serialize_netlist(&net).as_bytes()]);
    Manifest {
        command: "scenario",
        inputs: Vec::new(),
        solver: Some(solver),
        cell: Some(cell_cfg),
        fingerprint: fp,
        start,
    }
    .write(&[&csv, &json])?;

    let passed = result.checks.iter().filter(|c| c.pass).count();
    let _ = writeln!(out, "{} {}: {passed}/{} checks passed", arch.name(), result.scenario, result.checks.len());
    for c in result.failures() {
        let _ = writeln!(
            out,
            "FAIL {} at {:e} s: measured {:e} V, expected {:e} V",
            c.name, c.time_s, c.measured_v, c.expected_v
        );
    }
    if result.passed() {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} checks failed", result.checks.len() - passed)))
    }
}

fn cmd_compare(hold_time: f64, dt: f64, units: usize, path: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let start = Instant::now();
    if !(hold_time > 0.0 && hold_time.is_finite()) {
        return Err(Failure::Usage("--hold-time must be positive".into()));
    }
    if units == 0 {
        return Err(Failure::Usage("--units must be at least 1".into()));
    }
    let cell = CellConfig::default();
    let solver = SolverConfig::default().with_timing(dt.min(hold_time), hold_time);
    solver.validate()?;
    let report = compare_leakage(&cell, units, &solver, hold_time)?;
    write_file(path, &to_json(&report))?;
    Manifest {
        command: "compare-leakage",
        inputs: Vec::new(),
        solver: Some(solver),
        cell: Some(cell),
        fingerprint: report.config_fingerprint.clone(),
        start,
    }
    .write(&[path])?;
    let _ = writeln!(out, "ratio {:.6e}", report.ratio);
    let _ = writeln!(out, "savings_percent {:.6e}", report.savings_percent);
    Ok(())
}

fn cmd_plot(csv: &Path, signals: &[String], svg: &Path, title: Option<&str>) -> Result<(), Failure> {
    let start = Instant::now();
    let text = std::fs::read_to_string(csv).map_err(|e| io_err(csv, e))?;
    let w = waveform_from_csv(&text).map_err(|e| Failure::Input(format!("{}:{e}", csv.display())))?;
    let title = title.map_or_else(|| csv.display().to_string(), str::to_string);
    let doc = plot_svg(&w, signals, &title).map_err(|e| Failure::Usage(e.to_string()))?;
    write_file(svg, &doc)?;
    Manifest {
        command: "plot",
        inputs: vec![csv.display().to_string()],
        solver: None,
        cell: None,
        fingerprint: fingerprint(&[text.as_bytes(), signals.join(",").as_bytes()]),
        start,
    }
    .write(&[svg])
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Op { netlist } => cmd_op(&netlist, out, err),
        Command::Tran {
            netlist,
            tstop,
            dt,
            out: csv,
            integrator,
        } => cmd_tran(&netlist, tstop, dt, &csv, integrator, err),
        Command::Scenario {
            arch,
            op,
            cell,
            bit,
            out: dir,
            hold_time,
            dt,
        } => cmd_scenario(arch, op, cell, bit, &dir, hold_time, dt, out),
        Command::CompareLeakage {
            hold_time,
            dt,
            units,
            out: path,
        } => cmd_compare(hold_time, dt, units, &path, out),
        Command::Plot {
            csv,
            signals,
            out: svg,
            title,
        } => cmd_plot(&csv, &signals, &svg, title.as_deref()),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}
