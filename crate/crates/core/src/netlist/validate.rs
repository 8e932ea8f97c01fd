// SPDX-License-Identifier: Apache-2.0
//! Structural checks on a [`Netlist`].

use std::collections::{BTreeSet, HashMap};

use super::{DeviceKind, Netlist, NodeId, ParseDiagnostic, SourceWave};

/// Checks the netlist invariants plus DC connectivity.
///
/// Diagnostics carry line 0 / column 0 because a built netlist has no source
/// text. Every node must reach ground through a DC path (resistive elements,
/// sources, switch contacts, mos channel and bulk, amplifier outputs);
/// capacitor plates and gate or control terminals do not count.
pub fn validate(n: &Netlist) -> Vec<ParseDiagnostic> {
    let mut diags = Vec::new();
    let err = |msg: String| ParseDiagnostic::error(0, 0, msg);

    if n.nodes.first().map(String::as_str) != Some(super::GROUND) {
        diags.push(err("missing ground node '0'".into()));
    }
    let mut seen_nodes = HashMap::new();
    for (id, name) in n.nodes.iter().enumerate() {
        if let Some(first) = seen_nodes.insert(name.as_str(), id) {
            diags.push(err(format!("node '{name}' declared twice ({first} and {id})")));
        }
    }

    let mut names = BTreeSet::new();
    for d in &n.devices {
        if !names.insert(d.name.as_str()) {
            diags.push(err(format!("duplicate instance '{}'", d.name)));
        }
        if !d.name.starts_with(d.kind.card_letter()) {
            diags.push(err(format!(
                "instance '{}' must start with '{}'",
                d.name,
                d.kind.card_letter()
            )));
        }
        if d.kind.terminals().iter().any(|&t| t >= n.nodes.len()) {
            diags.push(err(format!("instance '{}' references an undeclared node", d.name)));
            continue;
        }
        let finite_positive = |v: f64| v.is_finite() && v > 0.0;
        let problem = match &d.kind {
            DeviceKind::Resistor { ohms, .. } => (!finite_positive(*ohms)).then_some("resistance"),
            DeviceKind::Capacitor { farads, .. } => (!finite_positive(*farads)).then_some("capacitance"),
            DeviceKind::VoltageSource { wave, .. } => match wave {
                SourceWave::Dc(v) => (!v.is_finite()).then_some("source level"),
                SourceWave::Pulse(p) => {
                    let all = [p.v1, p.v2, p.delay, p.rise, p.fall, p.width, p.period];
                    (!all.iter().all(|x| x.is_finite()) || p.rise <= 0.0 || p.fall <= 0.0)
                        .then_some("pulse timing")
                }
            },
            DeviceKind::Mos { model, w, l, .. } => {
                if !n.model_cards.contains_key(model) {
                    diags.push(err(format!("missing model '{model}' for '{}'", d.name)));
                }
                (!(finite_positive(*w) && finite_positive(*l))).then_some("geometry")
            }
            DeviceKind::SenseAmp { gain, vlo, vhi, .. } => {
                (!(finite_positive(*gain) && vlo.is_finite() && vhi.is_finite() && vhi > vlo))
                    .then_some("amplifier range")
            }
            DeviceKind::Switch { ron, roff, vt, vh, .. } => {
                (!(finite_positive(*ron) && finite_positive(*roff) && roff > ron && vt.is_finite() && finite_positive(*vh)))
                    .then_some("switch parameters")
            }
        };
        if let Some(what) = problem {
            diags.push(err(format!("instance '{}' has invalid {what}", d.name)));
        }
    }
    for (name, card) in &n.model_cards {
        if let Err(e) = card.validate() {
            diags.push(err(format!("model '{name}': {e}")));
        }
    }
    for node in n.directives.ic.keys() {
        if n.node_id(node).is_none() {
            diags.push(err(format!(".ic names unknown node '{node}'")));
        }
    }
    if let Some(t) = &n.directives.tran {
        if !(t.step > 0.0 && t.stop >= t.step) {
            diags.push(err(".tran needs 0 < step <= stop".into()));
        }
    }
    if diags.iter().any(ParseDiagnostic::is_error) {
        return diags;
    }

    let nn = n.nodes.len();
    let mut touched = vec![false; nn];
    let mut parent: Vec<NodeId> = (0..nn).collect();
    fn find(parent: &mut [NodeId], mut x: NodeId) -> NodeId {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut union = |a: NodeId, b: NodeId| {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    };
    for d in &n.devices {
        for t in d.kind.terminals() {
            touched[t] = true;
        }
        match d.kind {
            DeviceKind::Resistor { a, b, .. } => union(a, b),
            DeviceKind::VoltageSource { pos, neg, .. } => union(pos, neg),
            DeviceKind::Switch { a, b, .. } => union(a, b),
            DeviceKind::Mos {
                drain, source, bulk, ..
            } => {
                union(drain, source);
                union(source, bulk);
            }
            DeviceKind::SenseAmp { out, .. } => union(out, 0),
            DeviceKind::Capacitor { .. } => {}
        }
    }
    for id in 1..nn {
        if touched[id] && find(&mut parent, id) != find(&mut parent, 0) {
            diags.push(ParseDiagnostic::warning(
                0,
                0,
                format!("floating node '{}': no DC path to ground", n.nodes[id]),
            ));
        }
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::super::parse_netlist;
    use super::*;

    #[test]
    fn divider_is_clean() {
        let n = parse_netlist("t\nVdd vdd 0 DC 1.2\nR1 vdd out 1k\nR2 out 0 1k\n.op\n.end").unwrap();
        assert!(validate(&n).is_empty());
    }

    #[test]
    fn capacitor_only_node_is_floating() {
        let n = parse_netlist("t\nV1 a 0 1\nR1 a 0 1k\nC1 lone 0 1p\n.end").unwrap();
        let d = validate(&n);
        assert_eq!(d.len(), 1);
        assert!(!d[0].is_error());
        assert!(d[0].message.contains("'lone'"));
    }

    #[test]
    fn gate_only_node_is_floating() {
        let n = parse_netlist("t\nV1 d 0 1\nM1 d g 0 0 n\n.model n nmos\n.end").unwrap();
        let d = validate(&n);
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("'g'"));
    }

    #[test]
    fn validation_is_pure() {
        let n = parse_netlist("t\nC1 a b 1p\nC2 c 0 1p\nR1 x 0 1\n.end").unwrap();
        assert_eq!(validate(&n), validate(&n));
        assert_eq!(validate(&n).len(), 3);
    }

    #[test]
    fn detects_built_defects() {
        let mut n = parse_netlist("t\nR1 a 0 1k\n.end").unwrap();
        let dup = n.devices[0].clone();
        n.devices.push(dup);
        n.devices.push(super::super::Device {
            name: "m1".into(),
            kind: DeviceKind::Mos {
                drain: 1,
                gate: 0,
                source: 0,
                bulk: 0,
                model: "nope".into(),
                w: 1.0,
                l: 1.0,
            },
        });
        let d = validate(&n);
        assert!(d.iter().any(|x| x.message.contains("duplicate instance")));
        assert!(d.iter().any(|x| x.message.contains("missing model")));
    }
}
