// SPDX-License-Identifier: Apache-2.0
//! Canonical text form of a [`Netlist`].

use std::fmt::Write;

use super::{DeviceKind, Netlist, SourceWave};
use crate::device::Polarity;

/// Shortest round-tripping scientific form, e.g. `1.2e0`, `5e-14`.
pub fn format_value(v: f64) -> String {
    format!("{v:e}")
}

/// Writes the netlist so that [`super::parse_netlist`] yields a structurally
/// equal value. Output is deterministic.
pub fn serialize_netlist(n: &Netlist) -> String {
    let f = format_value;
    let node = |id: usize| n.node_name(id);
    let mut out = String::new();
    writeln!(out, "{}", n.title).unwrap();
    for d in &n.devices {
        let line = match &d.kind {
            DeviceKind::Resistor { a, b, ohms } => format!("{} {} {} {}", d.name, node(*a), node(*b), f(*ohms)),
            DeviceKind::Capacitor { a, b, farads } => {
                format!("{} {} {} {}", d.name, node(*a), node(*b), f(*farads))
            }
            DeviceKind::VoltageSource { pos, neg, wave } => {
                let spec = match wave {
                    SourceWave::Dc(v) => format!("dc {}", f(*v)),
                    SourceWave::Pulse(p) => format!(
                        "pulse({} {} {} {} {} {} {})",
                        f(p.v1),
                        f(p.v2),
                        f(p.delay),
                        f(p.rise),
                        f(p.fall),
                        f(p.width),
                        f(p.period)
                    ),
                };
                format!("{} {} {} {}", d.name, node(*pos), node(*neg), spec)
            }
            DeviceKind::Mos {
                drain,
                gate,
                source,
                bulk,
                model,
                w,
                l,
            } => format!(
                "{} {} {} {} {} {} w={} l={}",
                d.name,
                node(*drain),
                node(*gate),
                node(*source),
                node(*bulk),
                model,
                f(*w),
                f(*l)
            ),
            DeviceKind::SenseAmp {
                plus,
                minus,
                out,
                reference,
                gain,
                vlo,
                vhi,
            } => format!(
                "{} {} {} {} {} gain={} vlo={} vhi={}",
                d.name,
                node(*plus),
                node(*minus),
                node(*out),
                node(*reference),
                f(*gain),
                f(*vlo),
                f(*vhi)
            ),
            DeviceKind::Switch {
                a,
                b,
                ctrl_pos,
                ctrl_neg,
                ron,
                roff,
                vt,
                vh,
            } => format!(
                "{} {} {} {} {} ron={} roff={} vt={} vh={}",
                d.name,
                node(*a),
                node(*b),
                node(*ctrl_pos),
                node(*ctrl_neg),
                f(*ron),
                f(*roff),
                f(*vt),
                f(*vh)
            ),
        };
        writeln!(out, "{line}").unwrap();
    }
    for (name, p) in &n.model_cards {
        let kind = match p.polarity {
            Polarity::N => "nmos",
            Polarity::P => "pmos",
        };
        write!(
            out,
            ".model {name} {kind} vth0={} kp={} n={} eta={} lambda={} vt={}",
            f(p.vth0),
            f(p.kp),
            f(p.n_slope),
            f(p.eta_dibl),
            f(p.lambda_clm),
            f(p.temp_vt)
        )
        .unwrap();
        if p.w_over_l != 1.0 {
            write!(out, " wl={}", f(p.w_over_l)).unwrap();
        }
        out.push('\n');
    }
    if !n.directives.ic.is_empty() {
        let items: Vec<String> = n
            .directives
            .ic
            .iter()
            .map(|(node, v)| format!("v({node})={}", f(*v)))
            .collect();
        writeln!(out, ".ic {}", items.join(" ")).unwrap();
    }
    if n.directives.op {
        out.push_str(".op\n");
    }
    if let Some(t) = &n.directives.tran {
        writeln!(out, ".tran {} {}", f(t.step), f(t.stop)).unwrap();
    }
    out.push_str(".end\n");
    out
}
