// SPDX-License-Identifier: Apache-2.0
//! Hold-mode supply power and the per-bit architecture comparison.

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bench::{run_scenario, sequence_hold, BenchError, CheckResult, Timing};
use crate::builders::{build_column, Architecture, BuildError, CellConfig};
use crate::netlist::serialize_netlist;
use crate::sim::{SolverConfig, Waveform};

/// Minimum number of time steps a measurement window must span.
pub const MIN_WINDOW_STEPS: usize = 10;

/// Measurement window as fractions of the hold duration.
pub const HOLD_WINDOW: (f64, f64) = (0.2, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("waveform has no signal '{0}'")]
    UnknownSignal(String),
    #[error("window [{0:e}, {1:e}] s lies outside the waveform span [0, {2:e}] s")]
    WindowOutOfRange(f64, f64, f64),
    #[error("window covers {0} time steps, fewer than {MIN_WINDOW_STEPS}")]
    WindowTooShort(usize),
    #[error("hold time must be positive")]
    HoldTime,
    #[error("configuration fingerprints differ ({0} vs {1})")]
    FingerprintMismatch(String, String),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Bench(#[from] BenchError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoldPower {
    pub mean_current: f64,
    pub power: f64,
}

/// Trapezoidal time average of `|i|` over `window`, times `v_supply`.
pub fn measure_hold_power(
    w: &Waveform,
    supply_current_signal: &str,
    v_supply: f64,
    window: (f64, f64),
) -> Result<HoldPower, PowerError> {
    let series = w
        .signal(supply_current_signal)
        .ok_or_else(|| PowerError::UnknownSignal(supply_current_signal.to_string()))?;
    let (t0, t1) = window;
    let end = w.end_time();
    if !(t0 >= 0.0 && t1 <= end * (1.0 + 1e-12) && t1 > t0) {
        return Err(PowerError::WindowOutOfRange(t0, t1, end));
    }
    let t1 = t1.min(end);
    let inside: Vec<usize> = (0..w.len()).filter(|&k| w.time[k] > t0 && w.time[k] < t1).collect();
    if inside.len() + 1 < MIN_WINDOW_STEPS {
        return Err(PowerError::WindowTooShort(inside.len() + 1));
    }
    let at = |t: f64| w.value_at(supply_current_signal, t).expect("signal checked").abs();
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(inside.len() + 2);
    pts.push((t0, at(t0)));
    pts.extend(inside.iter().map(|&k| (w.time[k], series[k].abs())));
    pts.push((t1, at(t1)));
    let charge: f64 = pts
        .windows(2)
        .map(|p| 0.5 * (p[0].1 + p[1].1) * (p[1].0 - p[0].0))
        .sum();
    let mean_current = charge / (t1 - t0);
    Ok(HoldPower {
        mean_current,
        power: v_supply * mean_current,
    })
}

/// Hex SHA-256 over the given byte strings, each length-prefixed.
pub fn fingerprint(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Fingerprint of everything that must match between compared runs.
pub fn config_fingerprint(cell: &CellConfig, solver: &SolverConfig, hold_time: f64) -> String {
    let cell = serde_json::to_vec(cell).expect("config serializes");
    let solver = serde_json::to_vec(solver).expect("config serializes");
    fingerprint(&[&cell, &solver, &hold_time.to_le_bytes()])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupplyPower {
    pub source: String,
    pub supply_v: f64,
    pub mean_current_a: f64,
    pub power_w: f64,
}

/// One architecture's hold measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchitecturePower {
    pub architecture: Architecture,
    pub supplies: Vec<SupplyPower>,
    pub window_s: (f64, f64),
    pub leakage_power_w: f64,
    pub stored_bits: usize,
    pub leakage_per_bit_w: f64,
    pub config_fingerprint: String,
    pub netlist_sha256: String,
    /// Storage-node retention over the hold window.
    pub retention: Vec<CheckResult>,
}

impl ArchitecturePower {
    pub fn retained(&self) -> bool {
        self.retention.iter().all(|c| c.pass)
    }

    /// Summed supply currents, weighted as powers (A).
    pub fn mean_current(&self) -> f64 {
        self.supplies.iter().map(|s| s.mean_current_a).sum()
    }
}

/// Builds `units` two-bit units of `arch` in the default data pattern,
/// simulates a hold of `hold_time` and measures supply power over the
/// [`HOLD_WINDOW`] fraction of it.
pub fn measure_architecture(
    arch: Architecture,
    cell: &CellConfig,
    units: usize,
    solver: &SolverConfig,
    hold_time: f64,
) -> Result<(ArchitecturePower, Waveform), PowerError> {
    if !(hold_time > 0.0 && hold_time.is_finite()) {
        return Err(PowerError::HoldTime);
    }
    let (net, sig) = build_column(arch, cell, units)?;
    let schedule = sequence_hold(&sig, hold_time, &Timing::default())?.with_initial_bits(sig.default_pattern());
    let result = run_scenario(&net, &sig, &schedule, solver)?;
    let span = result.waveform.end_time();
    let window = (HOLD_WINDOW.0 * span, HOLD_WINDOW.1 * span);
    let mut supplies = Vec::new();
    for s in &sig.supplies {
        let hp = measure_hold_power(&result.waveform, &format!("i({})", s.source), s.volts, window)?;
        supplies.push(SupplyPower {
            source: s.source.clone(),
            supply_v: s.volts,
            mean_current_a: hp.mean_current,
            power_w: hp.power,
        });
    }
    let leakage_power_w: f64 = supplies.iter().map(|s| s.power_w).sum();
    let stored_bits = sig.capacity();
    let text = serialize_netlist(&net);
    Ok((
        ArchitecturePower {
            architecture: arch,
            supplies,
            window_s: window,
            leakage_power_w,
            stored_bits,
            leakage_per_bit_w: leakage_power_w / stored_bits as f64,
            config_fingerprint: config_fingerprint(cell, solver, hold_time),
            netlist_sha256: fingerprint(&[text.as_bytes()]),
            retention: result.checks,
        },
        result.waveform,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub config_fingerprint: String,
    pub conventional: ArchitecturePower,
    pub proposed: ArchitecturePower,
    /// Conventional per-bit power over proposed per-bit power.
    pub ratio: f64,
    pub savings_percent: f64,
}

pub fn compare_architectures(
    conventional: ArchitecturePower,
    proposed: ArchitecturePower,
) -> Result<PowerReport, PowerError> {
    if conventional.config_fingerprint != proposed.config_fingerprint {
        return Err(PowerError::FingerprintMismatch(
            conventional.config_fingerprint,
            proposed.config_fingerprint,
        ));
    }
    let ratio = conventional.leakage_per_bit_w / proposed.leakage_per_bit_w;
    let config_fingerprint = fingerprint(&[
        conventional.config_fingerprint.as_bytes(),
        conventional.netlist_sha256.as_bytes(),
        proposed.netlist_sha256.as_bytes(),
    ]);
    Ok(PowerReport {
        config_fingerprint,
        conventional,
        proposed,
        ratio,
        savings_percent: 100.0 * (1.0 - 1.0 / ratio),
    })
}

/// Measures both architectures concurrently and compares them.
pub fn compare_leakage(
    cell: &CellConfig,
    units: usize,
    solver: &SolverConfig,
    hold_time: f64,
) -> Result<PowerReport, PowerError> {
    let (conv, prop) = std::thread::scope(|s| {
        let c = s.spawn(|| measure_architecture(Architecture::Conventional, cell, units, solver, hold_time));
        let p = measure_architecture(Architecture::Proposed, cell, units, solver, hold_time);
        (c.join().expect("measurement thread panicked"), p)
    });
    compare_architectures(conv?.0, prop?.0)
}
