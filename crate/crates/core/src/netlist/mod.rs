// SPDX-License-Identifier: Apache-2.0
//! Circuit data model and its SPICE-subset text format.

mod parse;
mod serialize;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::device::MosParams;

pub(crate) use parse::parse_value;
pub use parse::{parse_netlist, parse_netlist_with_warnings};
pub use serialize::{format_value, serialize_netlist};
pub use validate::validate;

/// Name of the ground node.
pub const GROUND: &str = "0";

/// Index into [`Netlist::nodes`]. Index 0 is always ground.
pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    /// 1-based; 0 when the diagnostic concerns the netlist as a whole.
    pub line: usize,
    /// 1-based.
    pub column: usize,
    pub message: String,
    pub severity: Severity,
}

impl ParseDiagnostic {
    pub fn error(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
            severity: Severity::Error,
        }
    }

    pub fn warning(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
            severity: Severity::Warning,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl std::fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {}: {}", self.line, self.column, sev, self.message)
    }
}

/// `PULSE(v1 v2 delay rise fall width period)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub v1: f64,
    pub v2: f64,
    pub delay: f64,
    pub rise: f64,
    pub fall: f64,
    pub width: f64,
    pub period: f64,
}

impl Pulse {
    pub fn value_at(&self, t: f64) -> f64 {
        if t <= self.delay {
            return self.v1;
        }
        let mut local = t - self.delay;
        if self.period > 0.0 {
            local %= self.period;
        }
        if local < self.rise {
            self.v1 + (self.v2 - self.v1) * local / self.rise
        } else if local <= self.rise + self.width {
            self.v2
        } else if local < self.rise + self.width + self.fall {
            self.v2 + (self.v1 - self.v2) * (local - self.rise - self.width) / self.fall
        } else {
            self.v1
        }
    }

    /// Corner times within `[0, tstop]`.
    pub fn breakpoints(&self, tstop: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let corners = [
            0.0,
            self.rise,
            self.rise + self.width,
            self.rise + self.width + self.fall,
        ];
        let mut start = self.delay;
        loop {
            for c in corners {
                let t = start + c;
                if t <= tstop {
                    out.push(t);
                }
            }
            if self.period <= 0.0 || start + self.period > tstop {
                break;
            }
            start += self.period;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SourceWave {
    Dc(f64),
    Pulse(Pulse),
}

impl SourceWave {
    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            SourceWave::Dc(v) => *v,
            SourceWave::Pulse(p) => p.value_at(t),
        }
    }
}

/// Per-kind payload of a device instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DeviceKind {
    Resistor {
        a: NodeId,
        b: NodeId,
        ohms: f64,
    },
    Capacitor {
        a: NodeId,
        b: NodeId,
        farads: f64,
    },
    VoltageSource {
        pos: NodeId,
        neg: NodeId,
        wave: SourceWave,
    },
    Mos {
        drain: NodeId,
        gate: NodeId,
        source: NodeId,
        bulk: NodeId,
        model: String,
        w: f64,
        l: f64,
    },
    /// Bounded-gain differential amplifier driving `out` against ground.
    SenseAmp {
        plus: NodeId,
        minus: NodeId,
        out: NodeId,
        reference: NodeId,
        gain: f64,
        vlo: f64,
        vhi: f64,
    },
    /// Voltage-controlled resistive switch between `a` and `b`, closed when
    /// `v(ctrl_pos) - v(ctrl_neg)` exceeds `vt`.
    Switch {
        a: NodeId,
        b: NodeId,
        ctrl_pos: NodeId,
        ctrl_neg: NodeId,
        ron: f64,
        roff: f64,
        vt: f64,
        vh: f64,
    },
}

impl DeviceKind {
    /// Terminal node ids in card order.
    pub fn terminals(&self) -> Vec<NodeId> {
        match *self {
            DeviceKind::Resistor { a, b, .. } | DeviceKind::Capacitor { a, b, .. } => vec![a, b],
            DeviceKind::VoltageSource { pos, neg, .. } => vec![pos, neg],
            DeviceKind::Mos {
                drain,
                gate,
                source,
                bulk,
                ..
            } => vec![drain, gate, source, bulk],
            DeviceKind::SenseAmp {
                plus,
                minus,
                out,
                reference,
                ..
            } => vec![plus, minus, out, reference],
            DeviceKind::Switch {
                a,
                b,
                ctrl_pos,
                ctrl_neg,
                ..
            } => vec![a, b, ctrl_pos, ctrl_neg],
        }
    }

    pub fn card_letter(&self) -> char {
        match self {
            DeviceKind::Resistor { .. } => 'r',
            DeviceKind::Capacitor { .. } => 'c',
            DeviceKind::VoltageSource { .. } => 'v',
            DeviceKind::Mos { .. } => 'm',
            DeviceKind::SenseAmp { .. } => 'a',
            DeviceKind::Switch { .. } => 's',
        }
    }

    /// Number of node terminals a card of this letter takes.
    pub fn arity(letter: char) -> Option<usize> {
        match letter {
            'r' | 'c' | 'v' => Some(2),
            'm' | 'a' | 's' => Some(4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub name: String,
    pub kind: DeviceKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranDirective {
    pub step: f64,
    pub stop: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Directives {
    pub op: bool,
    pub tran: Option<TranDirective>,
    /// Preferred initial node voltages (`.ic v(node)=value`).
    pub ic: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Netlist {
    pub title: String,
    /// Node names; `nodes[0]` is ground.
    pub nodes: Vec<String>,
    pub devices: Vec<Device>,
    pub model_cards: BTreeMap<String, MosParams>,
    pub directives: Directives,
}

impl Netlist {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            nodes: vec![GROUND.to_string()],
            devices: Vec::new(),
            model_cards: BTreeMap::new(),
            directives: Directives::default(),
        }
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n == name)
    }

    /// Looks up `name`, declaring it when absent.
    pub fn node(&mut self, name: &str) -> NodeId {
        match self.node_id(name) {
            Some(id) => id,
            None => {
                self.nodes.push(name.to_string());
                self.nodes.len() - 1
            }
        }
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id]
    }

    pub fn device(&self, name: &str) -> Option<&Device> {
        self.devices.iter().find(|d| d.name == name)
    }

    pub fn device_mut(&mut self, name: &str) -> Option<&mut Device> {
        self.devices.iter_mut().find(|d| d.name == name)
    }

    /// Effective compact-model card of a mos instance (card with its W/L applied).
    pub fn mos_params(&self, kind: &DeviceKind) -> Option<MosParams> {
        match kind {
            DeviceKind::Mos { model, w, l, .. } => self
                .model_cards
                .get(model)
                .map(|card| card.with_w_over_l(w / l)),
            _ => None,
        }
    }

    /// Voltage source whose positive terminal is `node` and negative terminal ground.
    pub fn source_driving(&self, node: &str) -> Option<&Device> {
        let id = self.node_id(node)?;
        self.devices.iter().find(|d| {
            matches!(d.kind, DeviceKind::VoltageSource { pos, neg, .. } if pos == id && neg == 0)
        })
    }

    /// Renumbers nodes in order of first appearance across the device list
    /// (ground first) and drops nodes no device touches. Parsing produces this
    /// order, so compacted netlists compare equal after a text round trip.
    pub fn compact(&mut self) {
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut order = vec![0usize];
        remap[0] = 0;
        for d in &self.devices {
            for t in d.kind.terminals() {
                if remap[t] == usize::MAX {
                    remap[t] = order.len();
                    order.push(t);
                }
            }
        }
        let names = order.iter().map(|&old| self.nodes[old].clone()).collect();
        let map = |id: &mut NodeId| *id = remap[*id];
        for d in &mut self.devices {
            match &mut d.kind {
                DeviceKind::Resistor { a, b, .. } | DeviceKind::Capacitor { a, b, .. } => {
                    map(a);
                    map(b);
                }
                DeviceKind::VoltageSource { pos, neg, .. } => {
                    map(pos);
                    map(neg);
                }
                DeviceKind::Mos {
                    drain,
                    gate,
                    source,
                    bulk,
                    ..
                } => {
                    map(drain);
                    map(gate);
                    map(source);
                    map(bulk);
                }
                DeviceKind::SenseAmp {
                    plus,
                    minus,
                    out,
                    reference,
                    ..
                } => {
                    map(plus);
                    map(minus);
                    map(out);
                    map(reference);
                }
                DeviceKind::Switch {
                    a,
                    b,
                    ctrl_pos,
                    ctrl_neg,
                    ..
                } => {
                    map(a);
                    map(b);
                    map(ctrl_pos);
                    map(ctrl_neg);
                }
            }
        }
        self.nodes = names;
    }

    pub fn count_kind(&self, letter: char) -> usize {
        self.devices
            .iter()
            .filter(|d| d.kind.card_letter() == letter)
            .count()
    }
}
