// SPDX-License-Identifier: Apache-2.0
use std::collections::BTreeMap;

use serde::Serialize;

use crate::netlist::Netlist;

use super::mna::{CapMode, Circuit, EvalCtx};
use super::transient::Pwl;
use super::{NewtonTrace, SimError, SolverConfig};

/// Largest gmin used when stepping (S).
const GMIN_START: f64 = 1e-3;
const SOURCE_STEPS: usize = 10;

/// DC solution: node voltages and branch currents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub node_voltages: BTreeMap<String, f64>,
    /// Keyed `i(<source>)`; positive current flows into the positive terminal.
    pub branch_currents: BTreeMap<String, f64>,
    /// Unknown vector in circuit order, usable as a Newton starting point.
    #[serde(skip)]
    pub raw: Vec<f64>,
    /// How the solution was reached.
    pub trace: Vec<NewtonTrace>,
}

impl OperatingPoint {
    pub fn voltage(&self, node: &str) -> Option<f64> {
        if node == crate::netlist::GROUND {
            return Some(0.0);
        }
        self.node_voltages.get(node).copied()
    }

    pub fn source_current(&self, source: &str) -> Option<f64> {
        self.branch_currents.get(&format!("i({source})")).copied()
    }

    pub(crate) fn from_solution(circuit: &Circuit, x: Vec<f64>, trace: Vec<NewtonTrace>) -> Self {
        let mut node_voltages = BTreeMap::new();
        let mut branch_currents = BTreeMap::new();
        for (i, name) in circuit.unknown_names.iter().enumerate() {
            if i < circuit.n_nodes {
                node_voltages.insert(name.clone(), x[i]);
            } else {
                branch_currents.insert(name.clone(), x[i]);
            }
        }
        Self {
            node_voltages,
            branch_currents,
            raw: x,
            trace,
        }
    }
}

/// Forcing list from a node-name map.
pub(crate) fn forcing_targets(
    net: &Netlist,
    targets: &BTreeMap<String, f64>,
) -> Result<Vec<(usize, f64)>, SimError> {
    targets
        .iter()
        .filter(|(name, _)| name.as_str() != crate::netlist::GROUND)
        .map(|(name, v)| {
            let id = net
                .node_id(name)
                .ok_or_else(|| SimError::UnknownNode(name.clone()))?;
            Ok((id - 1, *v))
        })
        .collect()
}

/// Newton, then gmin stepping, then source stepping. `x` is the start
/// point and receives the solution.
pub(crate) fn solve_dc(
    circuit: &Circuit,
    cfg: &SolverConfig,
    x: &mut Vec<f64>,
    time: f64,
    forcing: &[(usize, f64)],
    overrides: &[Option<Pwl>],
) -> Result<Vec<NewtonTrace>, SimError> {
    let ctx = |gmin: f64, source_scale: f64| EvalCtx {
        time,
        source_scale,
        gmin,
        caps: CapMode::Open,
        forcing,
        overrides,
    };
    let start = x.clone();
    let mut trace = Vec::new();

    let attempt = |x: &mut Vec<f64>, gmin: f64, scale: f64, phase: &str, trace: &mut Vec<NewtonTrace>| {
        match circuit.newton(x, &ctx(gmin, scale), cfg, phase) {
            Ok(t) => {
                trace.push(t);
                Ok(true)
            }
            Err(SimError::NonConvergence { trace: t, .. }) => {
                trace.extend(t);
                Ok(false)
            }
            Err(e) => Err(e),
        }
    };

    if attempt(x, cfg.gmin, 1.0, "newton", &mut trace)? {
        return Ok(trace);
    }

    // gmin stepping: GMIN_START down to cfg.gmin, geometric.
    x.clone_from(&start);
    let mut ok = true;
    let ratio = (cfg.gmin / GMIN_START).max(f64::MIN_POSITIVE);
    for k in 0..=cfg.gmin_steps {
        let g = GMIN_START * ratio.powf(k as f64 / cfg.gmin_steps as f64);
        if !attempt(x, g.max(cfg.gmin), 1.0, &format!("gmin {g:.1e}"), &mut trace)? {
            ok = false;
            break;
        }
    }
    if ok {
        return Ok(trace);
    }

    // Source stepping from zero.
    x.iter_mut().for_each(|v| *v = 0.0);
    for k in 1..=SOURCE_STEPS {
        let scale = k as f64 / SOURCE_STEPS as f64;
        if !attempt(x, cfg.gmin, scale, &format!("source {:.0}%", scale * 100.0), &mut trace)? {
            return Err(SimError::NonConvergence { time: None, trace });
        }
    }
    Ok(trace)
}

/// DC operating point.
///
/// When the netlist carries `.ic` entries the circuit is first solved with
/// those nodes tied to their targets, then released and re-solved from that
/// state, which selects a basin of a bistable circuit.
pub fn dc_operating_point(net: &Netlist, cfg: &SolverConfig) -> Result<OperatingPoint, SimError> {
    let circuit = Circuit::compile(net)?;
    let overrides = vec![None; circuit.n_branches];
    let mut x = vec![0.0; circuit.size()];
    let forcing = forcing_targets(net, &net.directives.ic)?;
    let mut trace = Vec::new();
    if !forcing.is_empty() {
        for &(i, v) in &forcing {
            x[i] = v;
        }
        trace.extend(solve_dc(&circuit, cfg, &mut x, 0.0, &forcing, &overrides)?);
    }
    trace.extend(solve_dc(&circuit, cfg, &mut x, 0.0, &[], &overrides)?);
    Ok(OperatingPoint::from_solution(&circuit, x, trace))
}
