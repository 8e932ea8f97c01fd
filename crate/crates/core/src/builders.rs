// SPDX-License-Identifier: Apache-2.0
//! Netlist generators for conventional 6T columns and series-stacked pairs.
//!
//! A conventional column hangs every cell between `vdd` and ground on one
//! bit-line pair. A proposed column stacks cells two high: the upper cell
//! sits between a per-pair `mid` rail and `vddh`, the lower one between
//! ground and `mid`, and each level has its own bit-line pair, data enable,
//! precharge and sense amplifier.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::MosParams;
use crate::netlist::{
    validate, Device, DeviceKind, Netlist, ParseDiagnostic, SourceWave, GROUND,
};

pub const NMOS_MODEL: &str = "nch";
pub const PMOS_MODEL: &str = "pch";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("invalid cell configuration: {0}")]
    Config(String),
    #[error("instance name '{0}' already exists")]
    Collision(String),
    #[error("generated netlist failed validation ({} diagnostics)", .0.len())]
    Invalid(Vec<ParseDiagnostic>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    Conventional,
    Proposed,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::Conventional => "conventional",
            Architecture::Proposed => "proposed",
        }
    }
}

impl std::str::FromStr for Architecture {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "conventional" => Ok(Self::Conventional),
            "proposed" => Ok(Self::Proposed),
            other => Err(format!("unknown architecture '{other}'")),
        }
    }
}

/// Width-to-length ratios per transistor role.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sizing {
    pub pull_up: f64,
    pub pull_down: f64,
    pub access: f64,
    pub precharge: f64,
}

impl Default for Sizing {
    fn default() -> Self {
        Self {
            pull_up: 1.0,
            pull_down: 2.0,
            access: 1.5,
            precharge: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    pub vdd: f64,
    /// Elevated rail as a multiple of `vdd`.
    pub vddh_factor: f64,
    pub nmos: MosParams,
    pub pmos: MosParams,
    pub sizing: Sizing,
    /// Per bit line (F).
    pub bitline_cap: f64,
    /// Per precharge capacitor (F).
    pub precharge_cap: f64,
    pub senseamp_gain: f64,
    /// From each storage node to its cell's low rail (F).
    pub node_cap: f64,
    /// From each stacked pair's mid rail to ground (F).
    pub mid_cap: f64,
    pub switch_ron: f64,
    pub switch_roff: f64,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            vdd: 1.2,
            vddh_factor: 2.0,
            nmos: MosParams::default_nmos(),
            pmos: MosParams::default_pmos(),
            sizing: Sizing::default(),
            bitline_cap: 50e-15,
            precharge_cap: 100e-15,
            senseamp_gain: 1000.0,
            node_cap: 1e-15,
            mid_cap: 2e-12,
            switch_ron: 100.0,
            switch_roff: 1e14,
        }
    }
}

impl CellConfig {
    pub fn vddh(&self) -> f64 {
        self.vdd * self.vddh_factor
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        let positive = [
            ("vdd", self.vdd),
            ("bitline_cap", self.bitline_cap),
            ("precharge_cap", self.precharge_cap),
            ("senseamp_gain", self.senseamp_gain),
            ("node_cap", self.node_cap),
            ("mid_cap", self.mid_cap),
            ("switch_ron", self.switch_ron),
            ("switch_roff", self.switch_roff),
            ("sizing.pull_up", self.sizing.pull_up),
            ("sizing.pull_down", self.sizing.pull_down),
            ("sizing.access", self.sizing.access),
            ("sizing.precharge", self.sizing.precharge),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(BuildError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.vddh_factor >= 1.0 && self.vddh_factor.is_finite()) {
            return Err(BuildError::Config("vddh_factor must be at least 1".into()));
        }
        if self.switch_roff <= self.switch_ron {
            return Err(BuildError::Config("switch_roff must exceed switch_ron".into()));
        }
        for card in [&self.nmos, &self.pmos] {
            card.validate().map_err(|e| BuildError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// A control input realized as a DC source that stimuli override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub node: String,
    pub source: String,
    /// Level when deasserted (V).
    pub idle: f64,
    /// Level when asserted (V).
    pub active: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitLinePair {
    pub bl: String,
    pub blb: String,
    pub precharge_level: f64,
}

/// Storage nodes and local rails of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellNodes {
    pub tag: String,
    pub q: String,
    pub qb: String,
    pub rail_hi: String,
    pub rail_lo: String,
    /// Nominal rail voltages (V).
    pub v_hi: f64,
    pub v_lo: f64,
}

impl CellNodes {
    pub fn span(&self) -> f64 {
        self.v_hi - self.v_lo
    }

    /// Storage-node voltages that encode `bit`.
    pub fn levels(&self, bit: bool) -> (f64, f64) {
        if bit {
            (self.v_hi, self.v_lo)
        } else {
            (self.v_lo, self.v_hi)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Supply {
    pub source: String,
    pub volts: f64,
}

/// Named protocol surface of a generated column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSignals {
    pub architecture: Architecture,
    /// One per address.
    pub word_lines: Vec<Control>,
    /// `[bl]` for conventional, `[bl0, bl1]` for proposed.
    pub bit_lines: Vec<BitLinePair>,
    /// One per bit-line pair; empty for conventional.
    pub data_enables: Vec<Control>,
    /// Conventional write drive; `None` for proposed.
    pub write_enable: Option<Control>,
    /// One per bit-line pair, active low.
    pub precharge: Vec<Control>,
    pub data: Control,
    /// One per bit-line pair.
    pub sense_outputs: Vec<String>,
    /// One per address.
    pub cells: Vec<CellNodes>,
    pub supplies: Vec<Supply>,
    pub mid_rails: Vec<String>,
    pub vdd: f64,
}

impl ColumnSignals {
    pub fn capacity(&self) -> usize {
        self.cells.len()
    }

    /// Every stimulus-driven control line.
    pub fn controls(&self) -> Vec<&Control> {
        let mut out: Vec<&Control> = self.word_lines.iter().collect();
        out.extend(&self.data_enables);
        out.extend(&self.write_enable);
        out.extend(&self.precharge);
        out.push(&self.data);
        out
    }

    /// Forcing targets that store `bits[k]` in cell `k` and park mid rails
    /// at their nominal level.
    pub fn initial_state(&self, bits: &[bool]) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for (cell, &bit) in self.cells.iter().zip(bits) {
            let (q, qb) = cell.levels(bit);
            out.insert(cell.q.clone(), q);
            out.insert(cell.qb.clone(), qb);
        }
        for mid in &self.mid_rails {
            out.insert(mid.clone(), self.vdd);
        }
        out
    }

    /// Ones at even addresses, zeros at odd ones.
    pub fn default_pattern(&self) -> Vec<bool> {
        (0..self.capacity()).map(|a| a % 2 == 0).collect()
    }
}

struct Builder<'a> {
    net: Netlist,
    cfg: &'a CellConfig,
}

impl<'a> Builder<'a> {
    fn new(title: &str, cfg: &'a CellConfig) -> Self {
        let mut net = Netlist::new(title);
        net.model_cards.insert(NMOS_MODEL.into(), cfg.nmos);
        net.model_cards.insert(PMOS_MODEL.into(), cfg.pmos);
        Self { net, cfg }
    }

    fn push(&mut self, name: String, kind: DeviceKind) -> Result<(), BuildError> {
        if self.net.device(&name).is_some() {
            return Err(BuildError::Collision(name));
        }
        self.net.devices.push(Device { name, kind });
        Ok(())
    }

    fn dc(&mut self, name: &str, node: &str, v: f64) -> Result<(), BuildError> {
        let pos = self.net.node(node);
        self.push(
            name.into(),
            DeviceKind::VoltageSource {
                pos,
                neg: 0,
                wave: SourceWave::Dc(v),
            },
        )
    }

    fn control(&mut self, node: &str, idle: f64, active: f64) -> Result<Control, BuildError> {
        let source = format!("v{node}");
        self.dc(&source, node, idle)?;
        Ok(Control {
            node: node.into(),
            source,
            idle,
            active,
        })
    }

    fn cap(&mut self, name: &str, a: &str, b: &str, farads: f64) -> Result<(), BuildError> {
        let (a, b) = (self.net.node(a), self.net.node(b));
        self.push(name.into(), DeviceKind::Capacitor { a, b, farads })
    }

    #[allow(clippy::too_many_arguments)]
    fn mos(&mut self, name: &str, d: &str, g: &str, s: &str, b: &str, nch: bool, w: f64) -> Result<(), BuildError> {
        let kind = DeviceKind::Mos {
            drain: self.net.node(d),
            gate: self.net.node(g),
            source: self.net.node(s),
            bulk: self.net.node(b),
            model: if nch { NMOS_MODEL } else { PMOS_MODEL }.into(),
            w,
            l: 1.0,
        };
        self.push(name.into(), kind)
    }

    #[allow(clippy::too_many_arguments)]
    fn switch(&mut self, name: &str, a: &str, b: &str, cp: &str, cn: &str, vt: f64) -> Result<(), BuildError> {
        let kind = DeviceKind::Switch {
            a: self.net.node(a),
            b: self.net.node(b),
            ctrl_pos: self.net.node(cp),
            ctrl_neg: self.net.node(cn),
            ron: self.cfg.switch_ron,
            roff: self.cfg.switch_roff,
            vt,
            vh: 0.02,
        };
        self.push(name.into(), kind)
    }

    fn sense_amp(&mut self, name: &str, plus: &str, minus: &str, out: &str, reference: &str) -> Result<(), BuildError> {
        let kind = DeviceKind::SenseAmp {
            plus: self.net.node(plus),
            minus: self.net.node(minus),
            out: self.net.node(out),
            reference: self.net.node(reference),
            gain: self.cfg.senseamp_gain,
            vlo: 0.0,
            vhi: self.cfg.vdd,
        };
        self.push(name.into(), kind)
    }

    /// Six transistors numbered `m{first}..m{first+5}` with suffix `_{tag}`.
    #[allow(clippy::too_many_arguments)]
    fn cell(
        &mut self,
        tag: &str,
        first: usize,
        rail_hi: &str,
        rail_lo: &str,
        bl: &str,
        blb: &str,
        wl: &str,
    ) -> Result<(String, String), BuildError> {
        let s = self.cfg.sizing;
        let q = format!("q_{tag}");
        let qb = format!("qb_{tag}");
        let m = |k: usize| format!("m{}_{tag}", first + k);
        self.mos(&m(0), &q, &qb, rail_lo, rail_lo, true, s.pull_down)?;
        self.mos(&m(1), &qb, &q, rail_lo, rail_lo, true, s.pull_down)?;
        self.mos(&m(2), &q, &qb, rail_hi, rail_hi, false, s.pull_up)?;
        self.mos(&m(3), &qb, &q, rail_hi, rail_hi, false, s.pull_up)?;
        self.mos(&m(4), bl, wl, &q, rail_lo, true, s.access)?;
        self.mos(&m(5), blb, wl, &qb, rail_lo, true, s.access)?;
        self.cap(&format!("cq_{tag}"), &q, rail_lo, self.cfg.node_cap)?;
        self.cap(&format!("cqb_{tag}"), &qb, rail_lo, self.cfg.node_cap)?;
        Ok((q, qb))
    }

    /// Ideal complement of `d` swinging between `lo` and `hi` rails.
    fn inverter(&mut self, tag: &str, out: &str, d: &str, reference: &str, hi: &str, lo: &str) -> Result<(), BuildError> {
        self.switch(&format!("sinv{tag}h"), out, hi, reference, d, 0.0)?;
        self.switch(&format!("sinv{tag}l"), out, lo, d, reference, 0.0)
    }

    /// Buffered copy of `d` swinging between `lo` and `hi` rails.
    fn buffer(&mut self, tag: &str, out: &str, d: &str, reference: &str, hi: &str, lo: &str) -> Result<(), BuildError> {
        self.switch(&format!("sbuf{tag}h"), out, hi, d, reference, 0.0)?;
        self.switch(&format!("sbuf{tag}l"), out, lo, reference, d, 0.0)
    }

    fn bitline_pair(&mut self, suffix: &str, rail: &str, pc: &str, level: f64) -> Result<BitLinePair, BuildError> {
        let bl = format!("bl{suffix}");
        let blb = format!("bl{suffix}b");
        let w = self.cfg.sizing.precharge;
        self.cap(&format!("cbl{suffix}"), &bl, GROUND, self.cfg.bitline_cap)?;
        self.cap(&format!("cbl{suffix}b"), &blb, GROUND, self.cfg.bitline_cap)?;
        self.mos(&format!("mpc{suffix}"), &bl, pc, rail, rail, false, w)?;
        self.mos(&format!("mpc{suffix}b"), &blb, pc, rail, rail, false, w)?;
        Ok(BitLinePair {
            bl,
            blb,
            precharge_level: level,
        })
    }

    fn finish(mut self) -> Result<Netlist, BuildError> {
        self.net.compact();
        let errors: Vec<ParseDiagnostic> = validate(&self.net);
        if errors.is_empty() {
            Ok(self.net)
        } else {
            Err(BuildError::Invalid(errors))
        }
    }
}

/// One 6T cell as a netlist fragment: cross-coupled pair between the given
/// rails, access devices from `q_<prefix>`/`qb_<prefix>` to the bit lines.
pub fn build_6t_cell(
    cfg: &CellConfig,
    prefix: &str,
    rail_hi: &str,
    rail_lo: &str,
    bl: &str,
    blb: &str,
    wl: &str,
) -> Result<Netlist, BuildError> {
    cfg.validate()?;
    let names = [rail_hi, rail_lo, bl, blb, wl];
    for (i, a) in names.iter().enumerate() {
        if names[i + 1..].contains(a) {
            return Err(BuildError::Config(format!("node '{a}' used for two cell terminals")));
        }
    }
    let mut b = Builder::new(&format!("6t cell {prefix}"), cfg);
    b.cell(prefix, 1, rail_hi, rail_lo, bl, blb, wl)?;
    b.net.compact();
    Ok(b.net)
}

/// Appends `fragment`'s devices and model cards to `target`, renaming
/// nothing. Fails on the first instance-name collision.
pub fn merge_fragment(target: &mut Netlist, fragment: &Netlist) -> Result<(), BuildError> {
    for dev in &fragment.devices {
        if target.device(&dev.name).is_some() {
            return Err(BuildError::Collision(dev.name.clone()));
        }
    }
    for (name, card) in &fragment.model_cards {
        target.model_cards.entry(name.clone()).or_insert(*card);
    }
    for dev in &fragment.devices {
        let mut kind = dev.kind.clone();
        remap(&mut kind, |id| target.node(fragment.node_name(id)));
        target.devices.push(Device {
            name: dev.name.clone(),
            kind,
        });
    }
    Ok(())
}

fn remap(kind: &mut DeviceKind, mut f: impl FnMut(usize) -> usize) {
    match kind {
        DeviceKind::Resistor { a, b, .. } | DeviceKind::Capacitor { a, b, .. } => {
            *a = f(*a);
            *b = f(*b);
        }
        DeviceKind::VoltageSource { pos, neg, .. } => {
            *pos = f(*pos);
            *neg = f(*neg);
        }
        DeviceKind::Mos {
            drain,
            gate,
            source,
            bulk,
            ..
        } => {
            for n in [drain, gate, source, bulk] {
                *n = f(*n);
            }
        }
        DeviceKind::SenseAmp {
            plus,
            minus,
            out,
            reference,
            ..
        } => {
            for n in [plus, minus, out, reference] {
                *n = f(*n);
            }
        }
        DeviceKind::Switch {
            a,
            b,
            ctrl_pos,
            ctrl_neg,
            ..
        } => {
            for n in [a, b, ctrl_pos, ctrl_neg] {
                *n = f(*n);
            }
        }
    }
}

/// `n_cells` cells on one bit-line pair between `vdd` and ground.
pub fn build_conventional_column(
    cfg: &CellConfig,
    n_cells: usize,
) -> Result<(Netlist, ColumnSignals), BuildError> {
    cfg.validate()?;
    if n_cells == 0 {
        return Err(BuildError::Config("a column needs at least one cell".into()));
    }
    let vdd = cfg.vdd;
    let mut b = Builder::new(&format!("conventional column {n_cells} cells"), cfg);
    b.dc("vdd", "vdd", vdd)?;
    b.dc("vref", "vref", vdd / 2.0)?;
    let pc = b.control("pc0", vdd, 0.0)?;
    let we = b.control("we", 0.0, vdd)?;
    let data = b.control("d", 0.0, vdd)?;
    let word_lines = (0..n_cells)
        .map(|k| b.control(&format!("wl{k}"), 0.0, vdd))
        .collect::<Result<Vec<_>, _>>()?;

    let pair = b.bitline_pair("", "vdd", "pc0", vdd)?;
    b.inverter("", "db", "d", "vref", "vdd", GROUND)?;
    b.switch("swe", "d", &pair.bl, "we", GROUND, vdd / 2.0)?;
    b.switch("sweb", "db", &pair.blb, "we", GROUND, vdd / 2.0)?;
    b.sense_amp("asa0", &pair.bl, &pair.blb, "sa0_out", "vref")?;

    let mut cells = Vec::with_capacity(n_cells);
    for k in 0..n_cells {
        let tag = format!("c{k}");
        let (q, qb) = b.cell(&tag, 1, "vdd", GROUND, &pair.bl, &pair.blb, &word_lines[k].node)?;
        cells.push(CellNodes {
            tag,
            q,
            qb,
            rail_hi: "vdd".into(),
            rail_lo: GROUND.into(),
            v_hi: vdd,
            v_lo: 0.0,
        });
    }
    let net = b.finish()?;
    let signals = ColumnSignals {
        architecture: Architecture::Conventional,
        word_lines,
        bit_lines: vec![pair],
        data_enables: Vec::new(),
        write_enable: Some(we),
        precharge: vec![pc],
        data,
        sense_outputs: vec!["sa0_out".into()],
        cells,
        supplies: vec![Supply {
            source: "vdd".into(),
            volts: vdd,
        }],
        mid_rails: Vec::new(),
        vdd,
    };
    Ok((net, signals))
}

fn pair_cells(b: &mut Builder<'_>, p: usize, wl_upper: &str, wl_lower: &str) -> Result<[CellNodes; 2], BuildError> {
    let (vdd, vddh) = (b.cfg.vdd, b.cfg.vddh());
    let mid = format!("mid{p}");
    let upper = format!("u{p}");
    let lower = format!("l{p}");
    let (qu, qbu) = b.cell(&upper, 1, "vddh", &mid, "bl0", "bl0b", wl_upper)?;
    let (ql, qbl) = b.cell(&lower, 7, &mid, GROUND, "bl1", "bl1b", wl_lower)?;
    b.cap(&format!("cmid{p}"), &mid, GROUND, b.cfg.mid_cap)?;
    Ok([
        CellNodes {
            tag: upper,
            q: qu,
            qb: qbu,
            rail_hi: "vddh".into(),
            rail_lo: mid.clone(),
            v_hi: vddh,
            v_lo: vdd,
        },
        CellNodes {
            tag: lower,
            q: ql,
            qb: qbl,
            rail_hi: mid,
            rail_lo: GROUND.into(),
            v_hi: vdd,
            v_lo: 0.0,
        },
    ])
}

/// A single stacked pair with its rails and bit lines held by ideal
/// sources, for operating-point studies. Word lines are low.
pub fn build_stacked_pair(cfg: &CellConfig, prefix: &str) -> Result<Netlist, BuildError> {
    cfg.validate()?;
    let (vdd, vddh) = (cfg.vdd, cfg.vddh());
    let mut b = Builder::new(format!("stacked pair {prefix}").trim_end(), cfg);
    b.dc("vddh", "vddh", vddh)?;
    b.dc("vwl0", "wl0", 0.0)?;
    b.dc("vwl1", "wl1", 0.0)?;
    for (node, v) in [("bl0", vddh), ("bl0b", vddh), ("bl1", vdd), ("bl1b", vdd)] {
        b.dc(&format!("v{node}"), node, v)?;
    }
    let p = 0;
    let [upper, lower] = pair_cells(&mut b, p, "wl0", "wl1")?;
    let mut net = b.finish()?;
    if !prefix.is_empty() {
        for d in &mut net.devices {
            if d.name.starts_with('m') || d.name.starts_with('c') {
                d.name = format!("{}{prefix}", d.name);
            }
        }
    }
    net.directives.ic = BTreeMap::from([
        (upper.q, vddh),
        (upper.qb, vdd),
        (lower.q, vdd),
        (lower.qb, 0.0),
        ("mid0".to_string(), vdd),
    ]);
    Ok(net)
}

/// One conventional cell between `vdd` and ground with its bit lines held
/// at `vdd` and the word line low, for operating-point studies.
pub fn build_single_cell(cfg: &CellConfig) -> Result<Netlist, BuildError> {
    cfg.validate()?;
    let vdd = cfg.vdd;
    let mut b = Builder::new("single cell", cfg);
    b.dc("vdd", "vdd", vdd)?;
    b.dc("vwl0", "wl0", 0.0)?;
    b.dc("vbl", "bl", vdd)?;
    b.dc("vblb", "blb", vdd)?;
    b.cell("c0", 1, "vdd", GROUND, "bl", "blb", "wl0")?;
    let mut net = b.finish()?;
    net.directives.ic = BTreeMap::from([("q_c0".to_string(), vdd), ("qb_c0".to_string(), 0.0)]);
    Ok(net)
}

/// `n_pairs` stacked pairs sharing two bit-line pairs. Address `2p` is the
/// upper cell of pair `p` (word line `wl{2p}`, pair `bl0`, `sa0_out`);
/// address `2p+1` is the lower cell (`wl{2p+1}`, `bl1`, `sa1_out`).
pub fn build_proposed_column(
    cfg: &CellConfig,
    n_pairs: usize,
) -> Result<(Netlist, ColumnSignals), BuildError> {
    cfg.validate()?;
    if n_pairs == 0 {
        return Err(BuildError::Config("a column needs at least one pair".into()));
    }
    let (vdd, vddh) = (cfg.vdd, cfg.vddh());
    let mut b = Builder::new(&format!("proposed column {n_pairs} pairs"), cfg);
    b.dc("vddh", "vddh", vddh)?;
    b.dc("vdd", "vdd", vdd)?;
    b.dc("vref", "vref", vdd / 2.0)?;
    b.dc("vrefh", "vrefh", (vdd + vddh) / 2.0)?;
    let pc0 = b.control("pc0", vddh, 0.0)?;
    let pc1 = b.control("pc1", vdd, 0.0)?;
    let den0 = b.control("den0", 0.0, vdd)?;
    let den1 = b.control("den1", 0.0, vdd)?;
    let data = b.control("d", 0.0, vdd)?;
    let mut word_lines = Vec::with_capacity(2 * n_pairs);
    for p in 0..n_pairs {
        word_lines.push(b.control(&format!("wl{}", 2 * p), 0.0, vddh)?);
        word_lines.push(b.control(&format!("wl{}", 2 * p + 1), 0.0, vdd)?);
    }

    let upper = b.bitline_pair("0", "vddh", "pc0", vddh)?;
    let lower = b.bitline_pair("1", "vdd", "pc1", vdd)?;
    for (pair, name) in [(&upper, "0"), (&lower, "1")] {
        b.cap(&format!("cpc{name}"), &pair.bl, GROUND, cfg.precharge_cap)?;
        b.cap(&format!("cpc{name}b"), &pair.blb, GROUND, cfg.precharge_cap)?;
    }

    b.inverter("", "db", "d", "vref", "vdd", GROUND)?;
    b.buffer("0", "d0h", "d", "vref", "vddh", "vdd")?;
    b.inverter("0", "d0hb", "d", "vref", "vddh", "vdd")?;
    b.switch("sden0", "d0h", &upper.bl, "den0", GROUND, vdd / 2.0)?;
    b.switch("sden0b", "d0hb", &upper.blb, "den0", GROUND, vdd / 2.0)?;
    b.switch("sden1", "d", &lower.bl, "den1", GROUND, vdd / 2.0)?;
    b.switch("sden1b", "db", &lower.blb, "den1", GROUND, vdd / 2.0)?;
    b.sense_amp("asa0", &upper.bl, &upper.blb, "sa0_out", "vrefh")?;
    b.sense_amp("asa1", &lower.bl, &lower.blb, "sa1_out", "vref")?;

    let mut cells = Vec::with_capacity(2 * n_pairs);
    let mut mid_rails = Vec::with_capacity(n_pairs);
    for p in 0..n_pairs {
        let (wu, wlo) = (word_lines[2 * p].node.clone(), word_lines[2 * p + 1].node.clone());
        let pair = pair_cells(&mut b, p, &wu, &wlo)?;
        mid_rails.push(pair[0].rail_lo.clone());
        cells.extend(pair);
    }
    let net = b.finish()?;
    let signals = ColumnSignals {
        architecture: Architecture::Proposed,
        word_lines,
        bit_lines: vec![upper, lower],
        data_enables: vec![den0, den1],
        write_enable: None,
        precharge: vec![pc0, pc1],
        data,
        sense_outputs: vec!["sa0_out".into(), "sa1_out".into()],
        cells,
        supplies: vec![
            Supply {
                source: "vddh".into(),
                volts: vddh,
            },
            Supply {
                source: "vdd".into(),
                volts: vdd,
            },
        ],
        mid_rails,
        vdd,
    };
    Ok((net, signals))
}

/// Column of either architecture holding `bits` two cells' worth per unit:
/// `units` conventional cell pairs or `units` stacked pairs.
pub fn build_column(
    arch: Architecture,
    cfg: &CellConfig,
    units: usize,
) -> Result<(Netlist, ColumnSignals), BuildError> {
    match arch {
        Architecture::Conventional => build_conventional_column(cfg, 2 * units),
        Architecture::Proposed => build_proposed_column(cfg, units),
    }
}

/// Instances whose name starts with `prefix`.
pub fn count_prefix(net: &Netlist, prefix: &str) -> usize {
    net.devices.iter().filter(|d| d.name.starts_with(prefix)).count()
}
