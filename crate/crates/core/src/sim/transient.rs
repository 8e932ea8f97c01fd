// SPDX-License-Identifier: Apache-2.0
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::netlist::{DeviceKind, Netlist, SourceWave};

use super::dc::{forcing_targets, solve_dc};
use super::mna::{CapMode, Circuit, Companion, EvalCtx};
use super::{Integrator, SimError, SolverConfig, Waveform};

/// Duration for which initial conditions are held by forcing switches (s).
pub const FORCE_WINDOW: f64 = 1e-9;

/// Piecewise-linear waveform, held constant outside its corners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Pwl {
    points: Vec<(f64, f64)>,
}

impl Pwl {
    /// Corners are sorted by time; for equal times the later entry wins.
    pub fn new(mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { points }
    }

    pub fn constant(v: f64) -> Self {
        Self {
            points: vec![(0.0, v)],
        }
    }

    /// Appends a corner. Times must not decrease.
    pub fn then(mut self, t: f64, v: f64) -> Self {
        debug_assert!(self.points.last().map_or(true, |p| p.0 <= t));
        self.points.push((t, v));
        self
    }

    /// Linear ramp from the current last value to `v`, starting at `t`.
    pub fn ramp_to(self, t: f64, edge: f64, v: f64) -> Self {
        let prev = self.last_value();
        self.then(t, prev).then(t + edge, v)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn last_value(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let pts = &self.points;
        match pts.len() {
            0 => 0.0,
            _ if t <= pts[0].0 => pts[0].1,
            _ => {
                let k = pts.partition_point(|p| p.0 <= t);
                if k >= pts.len() {
                    return pts[pts.len() - 1].1;
                }
                let (t0, v0) = pts[k - 1];
                let (t1, v1) = pts[k];
                if t1 == t0 {
                    v1
                } else {
                    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
                }
            }
        }
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }
}

/// Source overrides for a transient run, keyed by voltage-source name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Stimulus {
    pub sources: BTreeMap<String, Pwl>,
}

impl Stimulus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, source: &str, pwl: Pwl) -> &mut Self {
        self.sources.insert(source.to_ascii_lowercase(), pwl);
        self
    }

    pub fn with(mut self, source: &str, pwl: Pwl) -> Self {
        self.set(source, pwl);
        self
    }
}

fn collect_breakpoints(net: &Netlist, stim: &Stimulus, tstop: f64, extra: Option<f64>) -> Vec<f64> {
    let mut bps: Vec<f64> = Vec::new();
    for d in &net.devices {
        if let DeviceKind::VoltageSource {
            wave: SourceWave::Pulse(p),
            ..
        } = &d.kind
        {
            if !stim.sources.contains_key(&d.name) {
                bps.extend(p.breakpoints(tstop));
            }
        }
    }
    for pwl in stim.sources.values() {
        bps.extend(pwl.breakpoints());
    }
    bps.extend(extra);
    bps.retain(|&t| t > 0.0 && t < tstop);
    bps.sort_by(f64::total_cmp);
    bps.dedup_by(|a, b| (*a - *b).abs() <= 1e-18);
    bps
}

/// Transient analysis from `t = 0` to `cfg.tstop` on a grid of `cfg.dt`,
/// with source corners inserted as extra time points.
///
/// The starting state is a DC operating point. When `initial` is given (or
/// the netlist has `.ic` entries) the named nodes are tied to their targets
/// for the first [`FORCE_WINDOW`] and then released.
pub fn transient(
    net: &Netlist,
    cfg: &SolverConfig,
    stimulus: &Stimulus,
    initial: Option<&BTreeMap<String, f64>>,
) -> Result<Waveform, SimError> {
    cfg.validate()?;
    let circuit = Circuit::compile(net)?;

    let mut overrides = vec![None; circuit.n_branches];
    for (name, pwl) in &stimulus.sources {
        let branch = circuit
            .source_branch
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| *b)
            .ok_or_else(|| SimError::UnknownSource(name.clone()))?;
        overrides[branch] = Some(pwl.clone());
    }

    let targets = initial.unwrap_or(&net.directives.ic);
    let forcing = forcing_targets(net, targets)?;
    let force_end = (!forcing.is_empty()).then_some(FORCE_WINDOW);

    let tstop = cfg.tstop;
    let dt = cfg.dt;
    let eps = dt * 1e-6;
    let bps = collect_breakpoints(net, stimulus, tstop, force_end);

    let mut x = vec![0.0; circuit.size()];
    for &(i, v) in &forcing {
        x[i] = v;
    }
    solve_dc(&circuit, cfg, &mut x, 0.0, &forcing, &overrides).map_err(|e| e.at_time(0.0))?;

    let mut names = circuit.unknown_names.clone();
    names.truncate(circuit.size());
    let mut wave = Waveform::new(names);
    wave.push(0.0, &x);

    let mut i_prev = vec![0.0; circuit.n_caps];
    let mut comp = vec![Companion::default(); circuit.n_caps];
    let mut t = 0.0;
    let mut grid_k: u64 = 0;
    let mut bp_next = 0;
    let mut use_be = true;

    while t < tstop - eps {
        while ((grid_k + 1) as f64) * dt <= t + eps {
            grid_k += 1;
        }
        while bp_next < bps.len() && bps[bp_next] <= t + eps {
            bp_next += 1;
        }
        let grid_t = (((grid_k + 1) as f64) * dt).min(tstop);
        let bp_t = bps.get(bp_next).copied().unwrap_or(f64::INFINITY);
        let (t_next, hit_bp) = if (bp_t - grid_t).abs() <= eps {
            (grid_t, true)
        } else if bp_t < grid_t {
            (bp_t, true)
        } else {
            (grid_t, false)
        };
        let h = t_next - t;

        let caps = circuit.cap_voltages(&x);
        let method = if use_be {
            Integrator::BackwardEuler
        } else {
            cfg.integrator
        };
        for (slot, &(v, farads)) in caps.iter().enumerate() {
            comp[slot] = match method {
                Integrator::BackwardEuler => {
                    let g = farads / h;
                    Companion { g, c: -g * v }
                }
                Integrator::Trapezoidal => {
                    let g = 2.0 * farads / h;
                    Companion {
                        g,
                        c: -g * v - i_prev[slot],
                    }
                }
            };
        }

        let forced = force_end.map_or(false, |end| t_next <= end + eps);
        let ctx = EvalCtx {
            time: t_next,
            source_scale: 1.0,
            gmin: cfg.gmin,
            caps: CapMode::Companion(&comp),
            forcing: if forced { &forcing } else { &[] },
            overrides: &overrides,
        };
        circuit
            .newton(&mut x, &ctx, cfg, "transient")
            .map_err(|e| e.at_time(t_next))?;
        i_prev = circuit.cap_currents(&x, &comp);
        wave.push(t_next, &x);

        use_be = hit_bp;
        t = t_next;
    }
    Ok(wave)
}
