// SPDX-License-Identifier: Apache-2.0
//! Circuit compilation, residual/Jacobian assembly and the Newton loop.
//!
//! Unknowns are the non-ground node voltages followed by one branch current
//! per voltage source and per amplifier output. Residuals are the currents
//! leaving each node; Newton solves `J dx = -f`.

use crate::device::{mos_eval, MosParams};
use crate::linalg::{LinalgError, Lu};
use crate::netlist::{DeviceKind, Netlist, NodeId, SourceWave};

use super::transient::Pwl;
use super::{NewtonTrace, SimError, SolverConfig};

/// Largest node-voltage change per Newton iteration (V).
const MAX_VOLTAGE_STEP: f64 = 0.5;
/// Conductance of an initial-condition forcing switch (S).
pub(crate) const FORCE_CONDUCTANCE: f64 = 1.0;

#[derive(Debug, Clone)]
pub(crate) enum Element {
    Conductance {
        a: NodeId,
        b: NodeId,
        g: f64,
    },
    Capacitor {
        a: NodeId,
        b: NodeId,
        farads: f64,
        slot: usize,
    },
    Source {
        pos: NodeId,
        neg: NodeId,
        wave: SourceWave,
        branch: usize,
    },
    Mos {
        d: NodeId,
        g: NodeId,
        s: NodeId,
        b: NodeId,
        params: MosParams,
    },
    SenseAmp {
        plus: NodeId,
        minus: NodeId,
        out: NodeId,
        gain: f64,
        vlo: f64,
        vhi: f64,
        branch: usize,
    },
    Switch {
        a: NodeId,
        b: NodeId,
        cp: NodeId,
        cn: NodeId,
        ln_gon: f64,
        ln_goff: f64,
        vt: f64,
        vh: f64,
    },
}

/// Per-capacitor companion model: `i = g v + c`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Companion {
    pub g: f64,
    pub c: f64,
}

pub(crate) enum CapMode<'a> {
    Open,
    Companion(&'a [Companion]),
}

pub(crate) struct EvalCtx<'a> {
    pub time: f64,
    pub source_scale: f64,
    pub gmin: f64,
    pub caps: CapMode<'a>,
    /// (unknown index, target voltage) pairs tied through [`FORCE_CONDUCTANCE`].
    pub forcing: &'a [(usize, f64)],
    /// Piecewise-linear overrides indexed by source branch.
    pub overrides: &'a [Option<Pwl>],
}

#[derive(Debug)]
pub(crate) struct Circuit {
    pub n_nodes: usize,
    pub n_branches: usize,
    pub elements: Vec<Element>,
    pub n_caps: usize,
    /// Names of all unknowns: node names then `i(<source>)` / `i(<amp>)`.
    pub unknown_names: Vec<String>,
    /// Branch index of each voltage source device, by device position.
    pub source_branch: Vec<(String, usize)>,
}

impl Circuit {
    pub fn compile(net: &Netlist) -> Result<Self, SimError> {
        let errors: Vec<String> = crate::netlist::validate(net)
            .into_iter()
            .filter(|d| d.is_error())
            .map(|d| d.message)
            .collect();
        if !errors.is_empty() {
            return Err(SimError::InvalidNetlist(errors.join("; ")));
        }
        let n_nodes = net.nodes.len() - 1;
        let mut elements = Vec::with_capacity(net.devices.len());
        let mut branch_names = Vec::new();
        let mut source_branch = Vec::new();
        let mut n_caps = 0;
        for dev in &net.devices {
            let el = match &dev.kind {
                DeviceKind::Resistor { a, b, ohms } => Element::Conductance {
                    a: *a,
                    b: *b,
                    g: 1.0 / ohms,
                },
                DeviceKind::Capacitor { a, b, farads } => {
                    n_caps += 1;
                    Element::Capacitor {
                        a: *a,
                        b: *b,
                        farads: *farads,
                        slot: n_caps - 1,
                    }
                }
                DeviceKind::VoltageSource { pos, neg, wave } => {
                    branch_names.push(format!("i({})", dev.name));
                    source_branch.push((dev.name.clone(), branch_names.len() - 1));
                    Element::Source {
                        pos: *pos,
                        neg: *neg,
                        wave: wave.clone(),
                        branch: branch_names.len() - 1,
                    }
                }
                DeviceKind::Mos {
                    drain,
                    gate,
                    source,
                    bulk,
                    ..
                } => Element::Mos {
                    d: *drain,
                    g: *gate,
                    s: *source,
                    b: *bulk,
                    params: net.mos_params(&dev.kind).expect("validated model reference"),
                },
                DeviceKind::SenseAmp {
                    plus,
                    minus,
                    out,
                    gain,
                    vlo,
                    vhi,
                    ..
                } => {
                    branch_names.push(format!("i({})", dev.name));
                    Element::SenseAmp {
                        plus: *plus,
                        minus: *minus,
                        out: *out,
                        gain: *gain,
                        vlo: *vlo,
                        vhi: *vhi,
                        branch: branch_names.len() - 1,
                    }
                }
                DeviceKind::Switch {
                    a,
                    b,
                    ctrl_pos,
                    ctrl_neg,
                    ron,
                    roff,
                    vt,
                    vh,
                } => Element::Switch {
                    a: *a,
                    b: *b,
                    cp: *ctrl_pos,
                    cn: *ctrl_neg,
                    ln_gon: (1.0 / ron).ln(),
                    ln_goff: (1.0 / roff).ln(),
                    vt: *vt,
                    vh: *vh,
                },
            };
            elements.push(el);
        }
        let mut unknown_names: Vec<String> = net.nodes[1..].to_vec();
        unknown_names.extend(branch_names.iter().cloned());
        Ok(Self {
            n_nodes,
            n_branches: branch_names.len(),
            elements,
            n_caps,
            unknown_names,
            source_branch,
        })
    }

    pub fn size(&self) -> usize {
        self.n_nodes + self.n_branches
    }

    /// Unknown index of a node, `None` for ground.
    #[inline]
    pub fn idx(node: NodeId) -> Option<usize> {
        node.checked_sub(1)
    }

    pub fn branch_index(&self, branch: usize) -> usize {
        self.n_nodes + branch
    }

    pub fn voltage(x: &[f64], node: NodeId) -> f64 {
        Self::idx(node).map_or(0.0, |i| x[i])
    }

    pub fn source_value(&self, wave: &SourceWave, branch: usize, ctx: &EvalCtx<'_>) -> f64 {
        let v = match ctx.overrides.get(branch).and_then(Option::as_ref) {
            Some(pwl) => pwl.value_at(ctx.time),
            None => wave.value_at(ctx.time),
        };
        v * ctx.source_scale
    }

    /// Capacitor currents `i = g v + c` at solution `x`.
    pub fn cap_currents(&self, x: &[f64], comp: &[Companion]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_caps];
        for el in &self.elements {
            if let Element::Capacitor { a, b, slot, .. } = *el {
                let v = Self::voltage(x, a) - Self::voltage(x, b);
                out[slot] = comp[slot].g * v + comp[slot].c;
            }
        }
        out
    }

    pub fn cap_voltages(&self, x: &[f64]) -> Vec<(f64, f64)> {
        let mut out = vec![(0.0, 0.0); self.n_caps];
        for el in &self.elements {
            if let Element::Capacitor { a, b, farads, slot } = *el {
                out[slot] = (Self::voltage(x, a) - Self::voltage(x, b), farads);
            }
        }
        out
    }

    /// Fills the Jacobian (row-major), residual, and per-row magnitude scale.
    pub fn assemble(&self, x: &[f64], ctx: &EvalCtx<'_>, jac: &mut [f64], f: &mut [f64], scale: &mut [f64]) {
        let n = self.size();
        jac.iter_mut().for_each(|v| *v = 0.0);
        f.iter_mut().for_each(|v| *v = 0.0);
        scale.iter_mut().for_each(|v| *v = 0.0);

        for i in 0..self.n_nodes {
            jac[i * n + i] += ctx.gmin;
            f[i] += ctx.gmin * x[i];
            scale[i] = (ctx.gmin * x[i]).abs();
        }
        for &(i, target) in ctx.forcing {
            jac[i * n + i] += FORCE_CONDUCTANCE;
            let i_force = FORCE_CONDUCTANCE * (x[i] - target * ctx.source_scale);
            f[i] += i_force;
            scale[i] = scale[i].max(i_force.abs());
        }

        let mut add_j = |r: Option<usize>, c: Option<usize>, v: f64| {
            if let (Some(r), Some(c)) = (r, c) {
                jac[r * n + c] += v;
            }
        };
        let add_f = |f: &mut [f64], scale: &mut [f64], r: Option<usize>, v: f64| {
            if let Some(r) = r {
                f[r] += v;
                scale[r] = scale[r].max(v.abs());
            }
        };
        let idx = Self::idx;
        let volt = |node| Self::voltage(x, node);

        for el in &self.elements {
            match *el {
                Element::Conductance { a, b, g } => {
                    let i = g * (volt(a) - volt(b));
                    add_f(f, scale, idx(a), i);
                    add_f(f, scale, idx(b), -i);
                    add_j(idx(a), idx(a), g);
                    add_j(idx(a), idx(b), -g);
                    add_j(idx(b), idx(a), -g);
                    add_j(idx(b), idx(b), g);
                }
                Element::Capacitor { a, b, slot, .. } => {
                    if let CapMode::Companion(comp) = ctx.caps {
                        let Companion { g, c } = comp[slot];
                        let i = g * (volt(a) - volt(b)) + c;
                        add_f(f, scale, idx(a), i);
                        add_f(f, scale, idx(b), -i);
                        add_j(idx(a), idx(a), g);
                        add_j(idx(a), idx(b), -g);
                        add_j(idx(b), idx(a), -g);
                        add_j(idx(b), idx(b), g);
                    }
                }
                Element::Source {
                    pos,
                    neg,
                    ref wave,
                    branch,
                    ..
                } => {
                    let k = self.branch_index(branch);
                    let current = x[k];
                    add_f(f, scale, idx(pos), current);
                    add_f(f, scale, idx(neg), -current);
                    add_j(idx(pos), Some(k), 1.0);
                    add_j(idx(neg), Some(k), -1.0);
                    let target = self.source_value(wave, branch, ctx);
                    f[k] = volt(pos) - volt(neg) - target;
                    scale[k] = target.abs();
                    add_j(Some(k), idx(pos), 1.0);
                    add_j(Some(k), idx(neg), -1.0);
                }
                Element::Mos {
                    d,
                    g,
                    s,
                    b,
                    ref params,
                } => {
                    let (id, gg) = mos_eval(params, volt(g), volt(d), volt(s), volt(b));
                    add_f(f, scale, idx(d), id);
                    add_f(f, scale, idx(s), -id);
                    let cols = [(idx(g), gg.gm), (idx(d), gg.gds), (idx(s), gg.gms), (idx(b), gg.gmb())];
                    for (c, v) in cols {
                        add_j(idx(d), c, v);
                        add_j(idx(s), c, -v);
                    }
                }
                Element::SenseAmp {
                    plus,
                    minus,
                    out,
                    gain,
                    vlo,
                    vhi,
                    branch,
                } => {
                    let k = self.branch_index(branch);
                    add_f(f, scale, idx(out), x[k]);
                    add_j(idx(out), Some(k), 1.0);
                    let (center, half) = (0.5 * (vlo + vhi), 0.5 * (vhi - vlo));
                    let t = (gain * (volt(plus) - volt(minus)) / half).tanh();
                    let target = center + half * t;
                    let slope = gain * (1.0 - t * t);
                    f[k] = volt(out) - target;
                    scale[k] = target.abs();
                    add_j(Some(k), idx(out), 1.0);
                    add_j(Some(k), idx(plus), -slope);
                    add_j(Some(k), idx(minus), slope);
                }
                Element::Switch {
                    a,
                    b,
                    cp,
                    cn,
                    ln_gon,
                    ln_goff,
                    vt,
                    vh,
                } => {
                    let (g, dg) = switch_conductance(volt(cp) - volt(cn), ln_gon, ln_goff, vt, vh);
                    let vab = volt(a) - volt(b);
                    let i = g * vab;
                    add_f(f, scale, idx(a), i);
                    add_f(f, scale, idx(b), -i);
                    let cols = [(idx(a), g), (idx(b), -g), (idx(cp), dg * vab), (idx(cn), -dg * vab)];
                    for (c, v) in cols {
                        add_j(idx(a), c, v);
                        add_j(idx(b), c, -v);
                    }
                }
            }
        }
    }

    fn name_of(&self, unknown: usize) -> String {
        self.unknown_names
            .get(unknown)
            .cloned()
            .unwrap_or_else(|| format!("#{unknown}"))
    }

    /// Damped Newton from `x`. On success `x` holds the solution.
    pub fn newton(
        &self,
        x: &mut [f64],
        ctx: &EvalCtx<'_>,
        cfg: &SolverConfig,
        phase: &str,
    ) -> Result<NewtonTrace, SimError> {
        let n = self.size();
        let mut jac = vec![0.0; n * n];
        let mut f = vec![0.0; n];
        let mut scale = vec![0.0; n];
        let mut last_update = f64::INFINITY;
        let mut max_residual = f64::INFINITY;
        let mut updates_small = false;

        for iter in 0..=cfg.max_newton_iters {
            self.assemble(x, ctx, &mut jac, &mut f, &mut scale);
            max_residual = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let residual_ok = (0..n).all(|i| {
                let tol = if i < self.n_nodes {
                    cfg.abstol + cfg.reltol * scale[i]
                } else {
                    cfg.vntol + cfg.reltol * scale[i]
                };
                f[i].abs() < tol
            });
            if residual_ok && updates_small {
                return Ok(NewtonTrace {
                    phase: phase.to_string(),
                    iterations: iter,
                    max_residual,
                    max_update: last_update,
                });
            }
            if iter == cfg.max_newton_iters {
                break;
            }
            let lu = Lu::factor(&jac, n).map_err(|e| match e {
                LinalgError::Singular { column } => SimError::SingularMatrix {
                    node: self.name_of(column),
                    time: None,
                },
                LinalgError::Dimension { .. } => unreachable!("assembled square system"),
            })?;
            let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
            let dx = lu.solve(&rhs).expect("dimensions match");
            if dx.iter().any(|v| !v.is_finite()) {
                break;
            }
            let largest_dv = dx[..self.n_nodes].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let damp = if largest_dv > MAX_VOLTAGE_STEP {
                MAX_VOLTAGE_STEP / largest_dv
            } else {
                1.0
            };
            updates_small = damp == 1.0;
            for (i, (xi, di)) in x.iter_mut().zip(&dx).enumerate() {
                let step = damp * di;
                let tol = if i < self.n_nodes {
                    cfg.vntol + cfg.reltol * xi.abs()
                } else {
                    cfg.abstol + cfg.reltol * xi.abs()
                };
                if step.abs() >= tol {
                    updates_small = false;
                }
                *xi += step;
            }
            last_update = largest_dv * damp;
        }
        Err(SimError::NonConvergence {
            time: None,
            trace: vec![NewtonTrace {
                phase: phase.to_string(),
                iterations: cfg.max_newton_iters,
                max_residual,
                max_update: last_update,
            }],
        })
    }
}

/// Log-interpolated switch conductance and its derivative in the control voltage.
pub(crate) fn switch_conductance(vc: f64, ln_gon: f64, ln_goff: f64, vt: f64, vh: f64) -> (f64, f64) {
    let u = (vc - vt) / vh;
    let s = if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    };
    let g = (ln_goff + (ln_gon - ln_goff) * s).exp();
    let dg = g * (ln_gon - ln_goff) * s * (1.0 - s) / vh;
    (g, dg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switch_conductance_limits() {
        let (on, off) = ((1.0f64 / 100.0).ln(), (1.0f64 / 1e14).ln());
        let (g_on, _) = switch_conductance(1.2, on, off, 0.6, 0.03);
        let (g_off, _) = switch_conductance(0.0, on, off, 0.6, 0.03);
        assert!((g_on - 0.01).abs() / 0.01 < 1e-6);
        assert!(g_off < 1e-13);
        let h = 1e-7;
        let (_, dg) = switch_conductance(0.61, on, off, 0.6, 0.03);
        let fd = (switch_conductance(0.61 + h, on, off, 0.6, 0.03).0
            - switch_conductance(0.61 - h, on, off, 0.6, 0.03).0)
            / (2.0 * h);
        assert!((dg - fd).abs() / fd.abs() < 1e-5);
    }
}
