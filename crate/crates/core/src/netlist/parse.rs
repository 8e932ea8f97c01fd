// SPDX-License-Identifier: Apache-2.0
//! Line-oriented SPICE-subset parser.
//!
//! ```text
//! <title line>
//! * comment            ; also a comment
//! Rname a b value
//! Cname a b value
//! Vname p n [DC] value | PULSE(v1 v2 delay rise fall width period)
//! Mname d g s b model [W=..] [L=..]
//! Aname plus minus out ref [gain=..] [vlo=..] [vhi=..]
//! Sname a b ctrl+ ctrl- [ron=..] [roff=..] [vt=..] [vh=..]
//! .model name nmos|pmos [vth0=..] [kp=..] [n=..] [eta=..] [lambda=..] [vt=..]
//! .ic v(node)=value ...
//! .op
//! .tran step stop
//! .end
//! ```
//!
//! Everything except the title is case-insensitive. Values take the usual
//! magnitude suffixes (f p n u m k meg g t); trailing unit letters are ignored.

use std::collections::{BTreeMap, HashSet};

use super::{
    Device, DeviceKind, Netlist, ParseDiagnostic, Pulse, SourceWave, TranDirective, GROUND,
};
use crate::device::MosParams;

#[derive(Debug, Clone)]
struct Token {
    text: String,
    col: usize,
}

/// Splits on whitespace, parentheses and commas, recording 1-based columns.
fn tokenize(line: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    for (i, ch) in line.char_indices() {
        let col = line[..i].chars().count() + 1;
        if ch.is_whitespace() || ch == '(' || ch == ')' || ch == ',' {
            if !current.is_empty() {
                out.push(Token {
                    text: std::mem::take(&mut current),
                    col: start,
                });
            }
        } else {
            if current.is_empty() {
                start = col;
            }
            current.extend(ch.to_lowercase());
        }
    }
    if !current.is_empty() {
        out.push(Token {
            text: current,
            col: start,
        });
    }
    out
}

/// Parses a number with an optional magnitude suffix.
pub(crate) fn parse_value(text: &str) -> Option<f64> {
    let bytes = text.as_bytes();
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let digits_start = i;
    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
        i += 1;
    }
    if i == digits_start {
        return None;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    text[..i].parse::<f64>().ok()?;
    let rest = text[i..].to_ascii_lowercase();
    if !rest.chars().all(|c| c.is_ascii_alphabetic()) {
        return None;
    }
    let shift: i32 = if rest.starts_with("meg") {
        6
    } else {
        match rest.chars().next() {
            Some('f') => -15,
            Some('p') => -12,
            Some('n') => -9,
            Some('u') => -6,
            Some('m') => -3,
            Some('k') => 3,
            Some('g') => 9,
            Some('t') => 12,
            _ => 0,
        }
    };
    let number = &text[..i];
    let (base, exp) = match number.find(['e', 'E']) {
        Some(k) => (&number[..k], number[k + 1..].parse::<i32>().ok()?),
        None => (number, 0),
    };
    let v: f64 = format!("{base}e{}", exp.checked_add(shift)?).parse().ok()?;
    v.is_finite().then_some(v)
}

struct LineCtx<'a> {
    line: usize,
    tokens: &'a [Token],
    diags: &'a mut Vec<ParseDiagnostic>,
}

impl LineCtx<'_> {
    fn err(&mut self, col: usize, msg: impl Into<String>) {
        self.diags.push(ParseDiagnostic::error(self.line, col, msg));
    }

    fn value(&mut self, idx: usize) -> Option<f64> {
        let tok = &self.tokens[idx];
        match parse_value(&tok.text) {
            Some(v) => Some(v),
            None => {
                let (col, text) = (tok.col, tok.text.clone());
                self.err(col, format!("invalid number '{text}'"));
                None
            }
        }
    }

    /// Parses trailing `key=value` tokens into `slots`, reporting unknown keys.
    fn keyed(&mut self, from: usize, slots: &mut [(&str, &mut f64)]) -> bool {
        let mut ok = true;
        for idx in from..self.tokens.len() {
            let tok = self.tokens[idx].clone();
            let Some((key, raw)) = tok.text.split_once('=') else {
                self.err(tok.col, format!("expected key=value, found '{}'", tok.text));
                ok = false;
                continue;
            };
            let key = if key == "vto" { "vth0" } else { key };
            let Some(slot) = slots.iter_mut().find(|(k, _)| *k == key) else {
                self.err(tok.col, format!("unknown parameter '{key}'"));
                ok = false;
                continue;
            };
            match parse_value(raw) {
                Some(v) => *slot.1 = v,
                None => {
                    self.err(tok.col + key.len() + 1, format!("invalid number '{raw}'"));
                    ok = false;
                }
            }
        }
        ok
    }
}

struct PendingMos {
    line: usize,
    col: usize,
    model: String,
}

/// Parses netlist text, returning every error found rather than the first.
pub fn parse_netlist(source: &str) -> Result<Netlist, Vec<ParseDiagnostic>> {
    parse_netlist_with_warnings(source).map(|(net, _)| net)
}

/// Like [`parse_netlist`], also returning warnings on success.
pub fn parse_netlist_with_warnings(
    source: &str,
) -> Result<(Netlist, Vec<ParseDiagnostic>), Vec<ParseDiagnostic>> {
    let mut lines = source.lines().enumerate();
    let title = lines
        .next()
        .map(|(_, l)| l.trim_end().to_string())
        .unwrap_or_default();
    let mut net = Netlist::new(title);
    let mut diags = Vec::new();
    let mut names: HashSet<String> = HashSet::new();
    let mut pending_mos = Vec::new();
    let mut ended = false;
    let mut ic_positions = Vec::new();
    let mut last_line = 1;

    for (idx, raw) in lines {
        let line_no = idx + 1;
        last_line = line_no;
        let content = raw.split(';').next().unwrap_or("");
        let trimmed = content.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        let lower = trimmed.to_lowercase();
        if lower.starts_with(".ic") && lower[3..].starts_with(|c: char| c.is_whitespace()) {
            parse_ic(content, line_no, &mut net, &mut diags, &mut ic_positions);
            continue;
        }
        let tokens = tokenize(content);
        if tokens.is_empty() {
            diags.push(ParseDiagnostic::error(line_no, 1, "empty card"));
            continue;
        }
        let mut ctx = LineCtx {
            line: line_no,
            tokens: &tokens,
            diags: &mut diags,
        };
        let head = tokens[0].clone();
        if head.text.starts_with('.') {
            match head.text.as_str() {
                ".end" => {
                    ended = true;
                    break;
                }
                ".op" => net.directives.op = true,
                ".tran" => {
                    if tokens.len() != 3 {
                        ctx.err(head.col, ".tran expects step and stop times");
                    } else if let (Some(step), Some(stop)) = (ctx.value(1), ctx.value(2)) {
                        net.directives.tran = Some(TranDirective { step, stop });
                    }
                }
                ".model" => parse_model(&mut ctx, &mut net),
                other => ctx.err(head.col, format!("unknown directive '{other}'")),
            }
            continue;
        }

        let letter = head.text.chars().next().unwrap_or(' ');
        let Some(arity) = DeviceKind::arity(letter) else {
            ctx.err(head.col, format!("unknown card '{letter}'"));
            continue;
        };
        if !names.insert(head.text.clone()) {
            ctx.err(head.col, format!("duplicate instance '{}'", head.text));
            continue;
        }
        let min_tokens = 1 + arity + usize::from(matches!(letter, 'r' | 'c' | 'v' | 'm'));
        if tokens.len() < min_tokens {
            ctx.err(
                head.col,
                format!(
                    "arity mismatch: '{}' needs {} nodes{}, found {} fields",
                    head.text,
                    arity,
                    match letter {
                        'm' => " and a model",
                        'r' | 'c' | 'v' => " and a value",
                        _ => "",
                    },
                    tokens.len() - 1
                ),
            );
            continue;
        }
        let nodes: Vec<usize> = tokens[1..=arity].iter().map(|t| net.node(&t.text)).collect();
        let rest = 1 + arity;
        let kind = match letter {
            'r' | 'c' => {
                if tokens.len() != rest + 1 {
                    ctx.err(tokens[rest].col, format!("arity mismatch: '{}' takes a single value", head.text));
                    continue;
                }
                let Some(v) = ctx.value(rest) else { continue };
                if v <= 0.0 {
                    ctx.err(tokens[rest].col, format!("'{}' value must be positive", head.text));
                    continue;
                }
                if letter == 'r' {
                    DeviceKind::Resistor { a: nodes[0], b: nodes[1], ohms: v }
                } else {
                    DeviceKind::Capacitor { a: nodes[0], b: nodes[1], farads: v }
                }
            }
            'v' => {
                let Some(wave) = parse_source(&mut ctx, rest) else { continue };
                DeviceKind::VoltageSource { pos: nodes[0], neg: nodes[1], wave }
            }
            'm' => {
                let model = tokens[rest].text.clone();
                let (mut w, mut l) = (1.0, 1.0);
                if !ctx.keyed(rest + 1, &mut [("w", &mut w), ("l", &mut l)]) {
                    continue;
                }
                if !(w > 0.0 && l > 0.0) {
                    ctx.err(head.col, format!("'{}' needs positive W and L", head.text));
                    continue;
                }
                pending_mos.push(PendingMos {
                    line: line_no,
                    col: tokens[rest].col,
                    model: model.clone(),
                });
                DeviceKind::Mos {
                    drain: nodes[0],
                    gate: nodes[1],
                    source: nodes[2],
                    bulk: nodes[3],
                    model,
                    w,
                    l,
                }
            }
            'a' => {
                let (mut gain, mut vlo, mut vhi) = (1000.0, 0.0, 1.0);
                if !ctx.keyed(rest, &mut [("gain", &mut gain), ("vlo", &mut vlo), ("vhi", &mut vhi)]) {
                    continue;
                }
                if !(vhi > vlo && gain > 0.0) {
                    ctx.err(head.col, format!("'{}' needs gain > 0 and vhi > vlo", head.text));
                    continue;
                }
                DeviceKind::SenseAmp {
                    plus: nodes[0],
                    minus: nodes[1],
                    out: nodes[2],
                    reference: nodes[3],
                    gain,
                    vlo,
                    vhi,
                }
            }
            's' => {
                let (mut ron, mut roff, mut vt, mut vh) = (1.0, 1e12, 0.0, 0.01);
                if !ctx.keyed(
                    rest,
                    &mut [("ron", &mut ron), ("roff", &mut roff), ("vt", &mut vt), ("vh", &mut vh)],
                ) {
                    continue;
                }
                if !(ron > 0.0 && roff > ron && vh > 0.0) {
                    ctx.err(head.col, format!("'{}' needs 0 < ron < roff and vh > 0", head.text));
                    continue;
                }
                DeviceKind::Switch {
                    a: nodes[0],
                    b: nodes[1],
                    ctrl_pos: nodes[2],
                    ctrl_neg: nodes[3],
                    ron,
                    roff,
                    vt,
                    vh,
                }
            }
            _ => unreachable!("arity() only admits known letters"),
        };
        net.devices.push(Device {
            name: head.text,
            kind,
        });
    }

    for m in &pending_mos {
        if !net.model_cards.contains_key(&m.model) {
            diags.push(ParseDiagnostic::error(m.line, m.col, format!("missing model '{}'", m.model)));
        }
    }
    let grounded = net
        .devices
        .iter()
        .any(|d| d.kind.terminals().contains(&0));
    if !net.devices.is_empty() && !grounded {
        diags.push(ParseDiagnostic::error(1, 1, format!("missing ground node '{GROUND}'")));
    }
    for (node, line, col) in &ic_positions {
        if net.node_id(node).is_none() {
            diags.push(ParseDiagnostic::error(*line, *col, format!(".ic names unknown node '{node}'")));
        }
    }
    if !ended {
        diags.push(ParseDiagnostic::warning(last_line, 1, "missing .end"));
    }

    if diags.iter().any(ParseDiagnostic::is_error) {
        return Err(diags);
    }
    net.compact();
    Ok((net, diags))
}

fn parse_source(ctx: &mut LineCtx<'_>, rest: usize) -> Option<SourceWave> {
    let tokens = ctx.tokens;
    let first = &tokens[rest];
    match first.text.as_str() {
        "pulse" => {
            if tokens.len() != rest + 8 {
                ctx.err(first.col, "PULSE expects (v1 v2 delay rise fall width period)");
                return None;
            }
            let mut v = [0.0; 7];
            for (k, slot) in v.iter_mut().enumerate() {
                *slot = ctx.value(rest + 1 + k)?;
            }
            let p = Pulse {
                v1: v[0],
                v2: v[1],
                delay: v[2],
                rise: v[3],
                fall: v[4],
                width: v[5],
                period: v[6],
            };
            if p.rise <= 0.0 || p.fall <= 0.0 || p.delay < 0.0 || p.width < 0.0 || p.period < 0.0 {
                ctx.err(first.col, "PULSE needs rise, fall > 0 and non-negative delay, width, period");
                return None;
            }
            Some(SourceWave::Pulse(p))
        }
        "dc" => {
            if tokens.len() != rest + 2 {
                ctx.err(first.col, "arity mismatch: DC takes a single value");
                return None;
            }
            ctx.value(rest + 1).map(SourceWave::Dc)
        }
        _ => {
            if tokens.len() != rest + 1 {
                ctx.err(first.col, "arity mismatch: source takes a single value");
                return None;
            }
            ctx.value(rest).map(SourceWave::Dc)
        }
    }
}

fn parse_model(ctx: &mut LineCtx<'_>, net: &mut Netlist) {
    let tokens = ctx.tokens;
    if tokens.len() < 3 {
        ctx.err(tokens[0].col, ".model expects a name and a type");
        return;
    }
    let name = tokens[1].text.clone();
    let mut p = match tokens[2].text.as_str() {
        "nmos" => MosParams::default_nmos(),
        "pmos" => MosParams::default_pmos(),
        other => {
            ctx.err(tokens[2].col, format!("unknown model type '{other}'"));
            return;
        }
    };
    let ok = ctx.keyed(
        3,
        &mut [
            ("vth0", &mut p.vth0),
            ("kp", &mut p.kp),
            ("n", &mut p.n_slope),
            ("eta", &mut p.eta_dibl),
            ("lambda", &mut p.lambda_clm),
            ("vt", &mut p.temp_vt),
            ("wl", &mut p.w_over_l),
        ],
    );
    if !ok {
        return;
    }
    if let Err(e) = p.validate() {
        ctx.err(tokens[1].col, format!("model '{name}': {e}"));
        return;
    }
    if net.model_cards.insert(name.clone(), p).is_some() {
        ctx.err(tokens[1].col, format!("duplicate model '{name}'"));
    }
}

/// `.ic v(node)=value v(node)=value ...`
fn parse_ic(
    line: &str,
    line_no: usize,
    net: &mut Netlist,
    diags: &mut Vec<ParseDiagnostic>,
    positions: &mut Vec<(String, usize, usize)>,
) {
    let lower = line.to_lowercase();
    let body_start = lower.find(".ic").unwrap_or(0) + 3;
    let mut entries = BTreeMap::new();
    let mut rest = &lower[body_start..];
    let mut offset = body_start;
    loop {
        let skipped = rest.len() - rest.trim_start().len();
        rest = rest.trim_start();
        offset += skipped;
        if rest.is_empty() {
            break;
        }
        let col = lower[..offset].chars().count() + 1;
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let item = &rest[..end];
        let parsed = item
            .strip_prefix("v(")
            .and_then(|s| s.split_once(")="))
            .and_then(|(node, val)| parse_value(val).map(|v| (node.to_string(), v)));
        match parsed {
            Some((node, v)) if !node.is_empty() => {
                positions.push((node.clone(), line_no, col));
                entries.insert(node, v);
            }
            _ => diags.push(ParseDiagnostic::error(
                line_no,
                col,
                format!("expected v(node)=value, found '{item}'"),
            )),
        }
        rest = &rest[end..];
        offset += end;
    }
    net.directives.ic.extend(entries);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_with_suffixes() {
        assert_eq!(parse_value("1k"), Some(1e3));
        assert_eq!(parse_value("1e3"), Some(1e3));
        assert_eq!(parse_value("2.5meg"), Some(2.5e6));
        assert_eq!(parse_value("10pF"), Some(10e-12));
        assert_eq!(parse_value("1.2"), Some(1.2));
        assert_eq!(parse_value("-3m"), Some(-3e-3));
        assert_eq!(parse_value("100fohm"), Some(100e-15));
        assert_eq!(parse_value("1.5e-9"), Some(1.5e-9));
        assert_eq!(parse_value("abc"), None);
        assert_eq!(parse_value("1k2"), None);
    }

    #[test]
    fn divider() {
        let n = parse_netlist("t\nVdd vdd 0 DC 1.2\nR1 vdd out 1k\nR2 out 0 1k\n.op\n.end").unwrap();
        assert_eq!(n.count_kind('r'), 2);
        assert_eq!(n.count_kind('v'), 1);
        let mut nodes = n.nodes.clone();
        nodes.sort();
        assert_eq!(nodes, vec!["0", "out", "vdd"]);
        assert!(n.directives.op);
    }

    #[test]
    fn missing_model_is_reported_with_position() {
        // Line 1 is always the title, so a lone card there is not parsed.
        let n = parse_netlist("M1 q qb 0 0 nmos_def W=2 L=1").unwrap();
        assert!(n.devices.is_empty());
        let err = parse_netlist("title\nM1 q qb 0 0 nmos_def W=2 L=1\n.end").unwrap_err();
        let errors: Vec<_> = err.iter().filter(|d| d.is_error()).collect();
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].line, 2);
        assert_eq!(errors[0].column, 13);
        assert!(errors[0].message.contains("missing model"));
    }

    #[test]
    fn reports_all_errors() {
        let src = "t\nX1 a b 1\nR1 a\nR2 a 0 1k\nR2 a 0 2k\nQ9 a b\n.end\n";
        let err = parse_netlist(src).unwrap_err();
        let lines: Vec<usize> = err.iter().map(|d| d.line).collect();
        assert_eq!(lines, vec![2, 3, 5, 6]);
        assert!(err[0].message.contains("unknown card"));
        assert!(err[1].message.contains("arity mismatch"));
        assert!(err[2].message.contains("duplicate instance"));
    }

    #[test]
    fn pulse_and_ic() {
        let src = "t\nV1 in 0 PULSE(0 1 1n 100p 100p 5n 10n)\nR1 in 0 1k\n.ic v(in)=0.5\n.tran 10p 20n\n.end";
        let n = parse_netlist(src).unwrap();
        match &n.devices[0].kind {
            DeviceKind::VoltageSource { wave: SourceWave::Pulse(p), .. } => {
                assert_eq!(p.v2, 1.0);
                assert_eq!(p.period, 10e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(n.directives.ic.get("in"), Some(&0.5));
        assert_eq!(n.directives.tran.as_ref().unwrap().stop, 20e-9);
    }

    #[test]
    fn missing_ground() {
        let err = parse_netlist("t\nR1 a b 1k\n.end").unwrap_err();
        assert!(err[0].message.contains("missing ground"));
    }

    #[test]
    fn garbage_never_panics() {
        for src in ["", "\n\n", "t\n(((\n", "t\n=\n", "t\n.model\n", "t\nm1 a b c d e w=\n", "t\n.ic v(\n", "t\nv1 a 0 pulse(1 2)\n"] {
            let _ = parse_netlist(src);
        }
    }
}
