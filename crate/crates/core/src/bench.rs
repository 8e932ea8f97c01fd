// SPDX-License-Identifier: Apache-2.0
//! Read, write and hold protocols as timed stimulus schedules, plus the
//! runner that simulates a schedule and grades its checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builders::{Architecture, ColumnSignals, Control};
use crate::netlist::Netlist;
use crate::sim::{transient, Pwl, SimError, SolverConfig, Stimulus, Waveform, FORCE_WINDOW};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("address {addr} outside column of {capacity} cells")]
    OutOfRange { addr: usize, capacity: usize },
    #[error("selection {0:?} does not apply to this architecture")]
    Selection(CellSelect),
    #[error("schedule refers to {0}, which this column lacks")]
    UnknownSignal(String),
    #[error("hold duration must be positive")]
    Duration,
    #[error("simulation failed during {phase}: {source}")]
    Sim {
        phase: String,
        #[source]
        source: SimError,
    },
}

/// Phase durations (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Idle time before the first event; covers initial-condition forcing.
    pub lead: f64,
    pub precharge: f64,
    pub settle: f64,
    pub wl_pulse: f64,
    /// Sense strobe precedes the word-line fall by this much.
    pub strobe_advance: f64,
    pub edge: f64,
    pub recovery: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            lead: 2.0 * FORCE_WINDOW,
            precharge: 2e-9,
            settle: 1e-9,
            wl_pulse: 2e-9,
            strobe_advance: 100e-12,
            edge: 100e-12,
            recovery: 5e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellSelect {
    /// Any architecture: the cell at this address.
    Row(usize),
    /// Proposed: upper cell of the first pair.
    Upper,
    /// Proposed: lower cell of the first pair.
    Lower,
}

impl std::str::FromStr for CellSelect {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "upper" => Ok(Self::Upper),
            "lower" => Ok(Self::Lower),
            n => n
                .parse()
                .map(Self::Row)
                .map_err(|_| format!("cell must be an index, 'upper' or 'lower', got '{s}'")),
        }
    }
}

/// Decoded access path of one address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Selection {
    pub address: usize,
    /// Index into `ColumnSignals::word_lines`.
    pub word_line: usize,
    /// Index into `bit_lines`, `precharge`, `data_enables`, `sense_outputs`.
    pub pair: usize,
}

pub fn decode_address(arch: Architecture, capacity: usize, addr: usize) -> Result<Selection, BenchError> {
    if addr >= capacity {
        return Err(BenchError::OutOfRange { addr, capacity });
    }
    let pair = match arch {
        Architecture::Conventional => 0,
        Architecture::Proposed => addr % 2,
    };
    Ok(Selection {
        address: addr,
        word_line: addr,
        pair,
    })
}

fn resolve(sig: &ColumnSignals, sel: CellSelect) -> Result<Selection, BenchError> {
    let addr = match (sel, sig.architecture) {
        (CellSelect::Row(a), _) => a,
        (CellSelect::Upper, Architecture::Proposed) => 0,
        (CellSelect::Lower, Architecture::Proposed) => 1,
        _ => return Err(BenchError::Selection(sel)),
    };
    decode_address(sig.architecture, sig.capacity(), addr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "index")]
pub enum Signal {
    WordLine(usize),
    DataEnable(usize),
    WriteEnable,
    Precharge(usize),
    Data,
}

impl Signal {
    fn control<'a>(&self, sig: &'a ColumnSignals) -> Option<&'a Control> {
        match *self {
            Signal::WordLine(k) => sig.word_lines.get(k),
            Signal::DataEnable(k) => sig.data_enables.get(k),
            Signal::WriteEnable => sig.write_enable.as_ref(),
            Signal::Precharge(k) => sig.precharge.get(k),
            Signal::Data => Some(&sig.data),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub signal: Signal,
    /// Target level (V), reached one edge time after `time`.
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Probe {
    Node(String),
    /// `v(a) - v(b)`.
    Diff(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Expect {
    Level { v: f64, tol: f64 },
    AtLeast(f64),
    AtMost(f64),
    /// Within `tol` of the probe's own value at `since`.
    Stable { since: f64, tol: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub time: f64,
    pub probe: Probe,
    pub expect: Expect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusSchedule {
    pub name: String,
    pub events: Vec<Event>,
    pub duration: f64,
    pub checks: Vec<Check>,
    /// Bit stored in each cell at `t = 0`; empty leaves the circuit free.
    pub initial_bits: Vec<bool>,
    /// Phase names with start times, for error reports.
    pub phases: Vec<(f64, String)>,
    pub edge: f64,
}

impl StimulusSchedule {
    pub fn empty(name: &str, duration: f64) -> Self {
        Self {
            name: name.into(),
            events: Vec::new(),
            duration,
            checks: Vec::new(),
            initial_bits: Vec::new(),
            phases: vec![(0.0, "idle".into())],
            edge: Timing::default().edge,
        }
    }

    /// Appends `next`, shifted to start where this schedule ends. Initial
    /// bits of `next` are ignored.
    pub fn then(mut self, next: StimulusSchedule) -> Self {
        let dt = self.duration;
        self.events.extend(next.events.into_iter().map(|mut e| {
            e.time += dt;
            e
        }));
        self.checks.extend(next.checks.into_iter().map(|mut c| {
            c.time += dt;
            if let Expect::Stable { since, tol } = c.expect {
                c.expect = Expect::Stable { since: since + dt, tol };
            }
            c
        }));
        self.phases
            .extend(next.phases.into_iter().map(|(t, n)| (t + dt, n)));
        self.duration += next.duration;
        self.name = format!("{}+{}", self.name, next.name);
        self
    }

    pub fn with_initial_bits(mut self, bits: Vec<bool>) -> Self {
        self.initial_bits = bits;
        self
    }

    pub fn phase_at(&self, t: f64) -> &str {
        self.phases
            .iter()
            .rev()
            .find(|(start, _)| *start <= t)
            .map_or("idle", |(_, n)| n.as_str())
    }

    /// Piecewise-linear waveform for every control of `sig`.
    pub fn stimulus(&self, sig: &ColumnSignals) -> Result<Stimulus, BenchError> {
        for e in &self.events {
            e.signal
                .control(sig)
                .ok_or_else(|| BenchError::UnknownSignal(format!("{:?}", e.signal)))?;
        }
        let mut events = self.events.clone();
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut stim = Stimulus::new();
        for control in sig.controls() {
            let mut pwl = Pwl::constant(control.idle);
            for e in events.iter().filter(|e| e.signal.control(sig) == Some(control)) {
                pwl = pwl.ramp_to(e.time, self.edge, e.level);
            }
            stim.set(&control.source, pwl);
        }
        Ok(stim)
    }

    /// Protocol safety: at most one word line asserted at any instant, and
    /// no branch with data enable and precharge asserted together.
    pub fn check_safety(&self, sig: &ColumnSignals) -> Result<(), String> {
        let stim = self.stimulus(sig).map_err(|e| e.to_string())?;
        let asserted = |c: &Control, t: f64| {
            let v = stim.sources[&c.source].value_at(t);
            (v - c.idle).abs() > 0.5 * (c.active - c.idle).abs()
        };
        let mut times: Vec<f64> = vec![0.0, self.duration];
        for e in &self.events {
            times.extend([e.time, e.time + 0.5 * self.edge, e.time + self.edge]);
        }
        for &t in &times {
            let wls = sig.word_lines.iter().filter(|c| asserted(c, t)).count();
            if wls > 1 {
                return Err(format!("{wls} word lines asserted at {t:e} s"));
            }
            for (k, den) in sig.data_enables.iter().enumerate() {
                if asserted(den, t) && asserted(&sig.precharge[k], t) {
                    return Err(format!("branch {k} enables data and precharge at {t:e} s"));
                }
            }
        }
        Ok(())
    }
}

fn level(sig: &ColumnSignals, s: Signal, on: bool) -> f64 {
    let c = s.control(sig).expect("signal resolved by caller");
    if on {
        c.active
    } else {
        c.idle
    }
}

fn push(events: &mut Vec<Event>, sig: &ColumnSignals, time: f64, signal: Signal, on: bool) {
    events.push(Event {
        time,
        signal,
        level: level(sig, signal, on),
    });
}

/// Checks that every cell's storage nodes at `t` match their value at `since`.
fn retention_checks(sig: &ColumnSignals, label: &str, since: f64, t: f64, tol: f64, skip: Option<usize>) -> Vec<Check> {
    let mut out = Vec::new();
    for (a, cell) in sig.cells.iter().enumerate() {
        if Some(a) == skip {
            continue;
        }
        for node in [&cell.q, &cell.qb] {
            out.push(Check {
                name: format!("{label} {node}"),
                time: t,
                probe: Probe::Node(node.clone()),
                expect: Expect::Stable { since, tol },
            });
        }
    }
    out
}

/// Precharge the selected pair, release, pulse the word line and strobe
/// the decoded sense amplifier. `expected` adds the strobe check.
pub fn sequence_read(
    sig: &ColumnSignals,
    sel: CellSelect,
    expected: Option<bool>,
    timing: &Timing,
) -> Result<StimulusSchedule, BenchError> {
    let s = resolve(sig, sel)?;
    let mut events = Vec::new();
    let t0 = timing.lead;
    let t1 = t0 + timing.precharge;
    let t2 = t1 + timing.settle;
    let t3 = t2 + timing.wl_pulse;
    let end = t3 + timing.recovery;
    push(&mut events, sig, t0, Signal::Precharge(s.pair), true);
    push(&mut events, sig, t1, Signal::Precharge(s.pair), false);
    if timing.wl_pulse > 0.0 {
        push(&mut events, sig, t2, Signal::WordLine(s.word_line), true);
        push(&mut events, sig, t3, Signal::WordLine(s.word_line), false);
    }
    let mut checks = Vec::new();
    if let Some(bit) = expected {
        let vdd = sig.vdd;
        checks.push(Check {
            name: format!("sense address {} reads {}", s.address, u8::from(bit)),
            time: t3 - timing.strobe_advance,
            probe: Probe::Node(sig.sense_outputs[s.pair].clone()),
            expect: Expect::Level {
                v: if bit { vdd } else { 0.0 },
                tol: 0.1 * vdd,
            },
        });
    }
    checks.extend(retention_checks(sig, "read disturb", t0, end, 0.05, None));
    Ok(StimulusSchedule {
        name: format!("read{}", s.address),
        events,
        duration: end,
        checks,
        initial_bits: Vec::new(),
        phases: vec![
            (0.0, "lead".into()),
            (t0, "precharge".into()),
            (t1, "settle".into()),
            (t2, "word line".into()),
            (t3, "recovery".into()),
        ],
        edge: timing.edge,
    })
}

/// Drive the data line, enable the selected branch's data path, pulse the
/// word line, then release in reverse order.
pub fn sequence_write(
    sig: &ColumnSignals,
    sel: CellSelect,
    bit: bool,
    timing: &Timing,
) -> Result<StimulusSchedule, BenchError> {
    let s = resolve(sig, sel)?;
    let enable = match sig.architecture {
        Architecture::Conventional => Signal::WriteEnable,
        Architecture::Proposed => Signal::DataEnable(s.pair),
    };
    let t0 = timing.lead;
    let t1 = t0 + timing.settle;
    let t2 = t1 + timing.settle;
    let t3 = t2 + timing.wl_pulse;
    let t4 = t3 + timing.settle;
    let t5 = t4 + timing.settle;
    let end = t5 + timing.recovery;
    let mut events = Vec::new();
    push(&mut events, sig, t0, Signal::Data, bit);
    push(&mut events, sig, t1, enable, true);
    push(&mut events, sig, t2, Signal::WordLine(s.word_line), true);
    push(&mut events, sig, t3, Signal::WordLine(s.word_line), false);
    push(&mut events, sig, t4, enable, false);
    push(&mut events, sig, t5, Signal::Data, false);

    let cell = &sig.cells[s.address];
    let margin = 0.8 * cell.span();
    let mut checks = vec![Check {
        name: format!("write {} to address {}", u8::from(bit), s.address),
        time: end,
        probe: Probe::Diff(cell.q.clone(), cell.qb.clone()),
        expect: if bit {
            Expect::AtLeast(margin)
        } else {
            Expect::AtMost(-margin)
        },
    }];
    checks.extend(retention_checks(sig, "write disturb", t0, end, 0.05, Some(s.address)));
    Ok(StimulusSchedule {
        name: format!("write{}-{}", u8::from(bit), s.address),
        events,
        duration: end,
        checks,
        initial_bits: Vec::new(),
        phases: vec![
            (0.0, "lead".into()),
            (t0, "data setup".into()),
            (t1, "data enable".into()),
            (t2, "word line".into()),
            (t3, "data release".into()),
            (t5, "recovery".into()),
        ],
        edge: timing.edge,
    })
}

/// Quiescent window: word lines and data enables low, precharge off.
/// Checks storage-node drift from the end of the lead to the end.
pub fn sequence_hold(sig: &ColumnSignals, duration: f64, timing: &Timing) -> Result<StimulusSchedule, BenchError> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(BenchError::Duration);
    }
    let since = timing.lead.min(duration);
    let end = duration.max(timing.lead);
    Ok(StimulusSchedule {
        name: "hold".into(),
        events: Vec::new(),
        duration: end,
        checks: retention_checks(sig, "hold drift", since, end, 1e-3, None),
        initial_bits: Vec::new(),
        phases: vec![(0.0, "lead".into()), (since, "hold".into())],
        edge: timing.edge,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub time_s: f64,
    pub expected_v: f64,
    pub measured_v: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub scenario: String,
    pub architecture: Architecture,
    pub checks: Vec<CheckResult>,
    pub waveform: Waveform,
}

impl ScenarioResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn probe_value(w: &Waveform, probe: &Probe, t: f64) -> Option<f64> {
    match probe {
        Probe::Node(n) => w.value_at(n, t),
        Probe::Diff(a, b) => Some(w.value_at(a, t)? - w.value_at(b, t)?),
    }
}

pub fn evaluate_checks(w: &Waveform, checks: &[Check]) -> Result<Vec<CheckResult>, BenchError> {
    checks
        .iter()
        .map(|c| {
            let missing = || BenchError::UnknownSignal(format!("{:?}", c.probe));
            let measured = probe_value(w, &c.probe, c.time).ok_or_else(missing)?;
            let (expected, pass) = match c.expect {
                Expect::Level { v, tol } => (v, (measured - v).abs() <= tol),
                Expect::AtLeast(v) => (v, measured >= v),
                Expect::AtMost(v) => (v, measured <= v),
                Expect::Stable { since, tol } => {
                    let before = probe_value(w, &c.probe, since).ok_or_else(missing)?;
                    (before, (measured - before).abs() <= tol)
                }
            };
            Ok(CheckResult {
                name: c.name.clone(),
                time_s: c.time,
                expected_v: expected,
                measured_v: measured,
                pass,
            })
        })
        .collect()
}

/// Simulates `s` on the column and grades its checks. `cfg.tstop` is
/// replaced by the schedule duration.
pub fn run_scenario(
    net: &Netlist,
    sig: &ColumnSignals,
    s: &StimulusSchedule,
    cfg: &SolverConfig,
) -> Result<ScenarioResult, BenchError> {
    let stim = s.stimulus(sig)?;
    let cfg = cfg.clone().with_timing(cfg.dt.min(s.duration), s.duration);
    let initial: Option<BTreeMap<String, f64>> =
        (!s.initial_bits.is_empty()).then(|| sig.initial_state(&s.initial_bits));
    let waveform = transient(net, &cfg, &stim, initial.as_ref()).map_err(|source| {
        let phase = match &source {
            SimError::NonConvergence { time: Some(t), .. } | SimError::SingularMatrix { time: Some(t), .. } => {
                s.phase_at(*t).to_string()
            }
            _ => "setup".to_string(),
        };
        BenchError::Sim { phase, source }
    })?;
    let checks = evaluate_checks(&waveform, &s.checks)?;
    Ok(ScenarioResult {
        scenario: s.name.clone(),
        architecture: sig.architecture,
        checks,
        waveform,
    })
}

/// Bits stored before writing `bit` to `addr`: the default pattern with
/// the target holding the complement.
pub fn pattern_for_write(sig: &ColumnSignals, addr: usize, bit: bool) -> Vec<bool> {
    let mut bits = sig.default_pattern();
    if let Some(b) = bits.get_mut(addr) {
        *b = !bit;
    }
    bits
}

/// Write `bit` to `sel`, then read it back.
pub fn write_then_read(sig: &ColumnSignals, sel: CellSelect, bit: bool, timing: &Timing) -> Result<StimulusSchedule, BenchError> {
    let addr = resolve(sig, sel)?.address;
    Ok(sequence_write(sig, sel, bit, timing)?
        .then(sequence_read(sig, sel, Some(bit), timing)?)
        .with_initial_bits(pattern_for_write(sig, addr, bit)))
}
