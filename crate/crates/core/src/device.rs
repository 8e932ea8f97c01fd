// SPDX-License-Identifier: Apache-2.0
//! MOS compact model.
//!
//! A single-piece charge-interpolation model (EKV style) that is continuous
//! from deep subthreshold through strong inversion. Drain-induced barrier
//! lowering shifts the pinch-off voltage, which is what makes off-state
//! series stacks leak less than a single off device.
//!
//! ```text
//! vp  = (vgb - vth0 + eta * |vds|) / n
//! i_f = ln^2(1 + exp((vp - vsb) / 2vt))
//! i_r = ln^2(1 + exp((vp - vdb) / 2vt))
//! id  = 2 n kp (W/L) vt^2 (i_f - i_r) (1 + lambda |vds|)
//! ```
//!
//! P-channel devices are evaluated by negating every terminal voltage and
//! the resulting current.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    N,
    P,
}

/// Compact-model parameter card.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MosParams {
    pub polarity: Polarity,
    /// Zero-bias threshold magnitude (V).
    pub vth0: f64,
    /// Transconductance parameter (A/V^2).
    pub kp: f64,
    /// Subthreshold slope factor.
    pub n_slope: f64,
    /// DIBL coefficient (V/V).
    pub eta_dibl: f64,
    /// Channel-length modulation (1/V).
    pub lambda_clm: f64,
    pub w_over_l: f64,
    /// Thermal voltage (V).
    pub temp_vt: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("{0} must be finite")]
    NotFinite(&'static str),
    #[error("{name} = {value} violates {rule}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        rule: &'static str,
    },
}

impl MosParams {
    /// Default n-channel card: 0.4 V threshold, 200 uA/V^2, 300 K.
    pub fn default_nmos() -> Self {
        Self {
            polarity: Polarity::N,
            vth0: 0.4,
            kp: 200e-6,
            n_slope: 1.5,
            eta_dibl: 0.05,
            lambda_clm: 0.05,
            w_over_l: 1.0,
            temp_vt: 0.02585,
        }
    }

    /// Default p-channel card (threshold stored as a magnitude).
    pub fn default_pmos() -> Self {
        Self {
            polarity: Polarity::P,
            kp: 80e-6,
            ..Self::default_nmos()
        }
    }

    pub fn with_w_over_l(mut self, w_over_l: f64) -> Self {
        self.w_over_l = w_over_l;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let fields = [
            ("vth0", self.vth0),
            ("kp", self.kp),
            ("n_slope", self.n_slope),
            ("eta_dibl", self.eta_dibl),
            ("lambda_clm", self.lambda_clm),
            ("w_over_l", self.w_over_l),
            ("temp_vt", self.temp_vt),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(ParamError::NotFinite(name));
            }
        }
        let rules = [
            ("kp", self.kp, self.kp > 0.0, "kp > 0"),
            ("w_over_l", self.w_over_l, self.w_over_l > 0.0, "w_over_l > 0"),
            ("n_slope", self.n_slope, self.n_slope >= 1.0, "n_slope >= 1"),
            ("eta_dibl", self.eta_dibl, self.eta_dibl >= 0.0, "eta_dibl >= 0"),
            ("lambda_clm", self.lambda_clm, self.lambda_clm >= 0.0, "lambda_clm >= 0"),
            ("temp_vt", self.temp_vt, self.temp_vt > 0.0, "temp_vt > 0"),
            ("vth0", self.vth0, self.vth0 > 0.0, "vth0 > 0"),
        ];
        for (name, value, ok, rule) in rules {
            if !ok {
                return Err(ParamError::OutOfRange { name, value, rule });
            }
        }
        Ok(())
    }

    fn prefactor(&self) -> f64 {
        2.0 * self.n_slope * self.kp * self.w_over_l * self.temp_vt * self.temp_vt
    }
}

/// Small-signal conductances, partial derivatives of the drain current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conductances {
    /// d id / d vg
    pub gm: f64,
    /// d id / d vd
    pub gds: f64,
    /// d id / d vs
    pub gms: f64,
}

impl Conductances {
    /// d id / d vb. The model depends on terminal differences only, so the
    /// four partials sum to zero.
    pub fn gmb(&self) -> f64 {
        -(self.gm + self.gds + self.gms)
    }
}

/// `ln(1 + e^u)` without overflow for any finite `u`.
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Normalised inversion charge `ln^2(1 + exp(x / 2vt))` and its derivative in `x`.
fn charge(x: f64, vt: f64) -> (f64, f64) {
    let u = x / (2.0 * vt);
    let sp = softplus(u);
    (sp * sp, sp * logistic(u) / vt)
}

/// Current and conductances in the n-channel frame.
fn eval_n(p: &MosParams, vg: f64, vd: f64, vs: f64, vb: f64) -> (f64, Conductances) {
    let (vgb, vdb, vsb) = (vg - vb, vd - vb, vs - vb);
    let vds = vdb - vsb;
    let sign = if vds >= 0.0 { 1.0 } else { -1.0 };
    let abs_vds = vds.abs();

    let vp = (vgb - p.vth0 + p.eta_dibl * abs_vds) / p.n_slope;
    let (q_f, dq_f) = charge(vp - vsb, p.temp_vt);
    let (q_r, dq_r) = charge(vp - vdb, p.temp_vt);
    let clm = 1.0 + p.lambda_clm * abs_vds;
    let k = p.prefactor();

    let diff = q_f - q_r;
    let id = k * diff * clm;

    let dvp_dd = p.eta_dibl * sign / p.n_slope;
    let gm = k * clm * (dq_f - dq_r) / p.n_slope;
    let d_diff_dd = dq_f * dvp_dd - dq_r * (dvp_dd - 1.0);
    let d_diff_ds = dq_f * (-dvp_dd - 1.0) - dq_r * (-dvp_dd);
    let gds = k * (d_diff_dd * clm + diff * p.lambda_clm * sign);
    let gms = k * (d_diff_ds * clm - diff * p.lambda_clm * sign);

    (id, Conductances { gm, gds, gms })
}

/// Drain current with conductances. Current is positive flowing into the drain.
pub fn mos_eval(p: &MosParams, vg: f64, vd: f64, vs: f64, vb: f64) -> (f64, Conductances) {
    match p.polarity {
        Polarity::N => eval_n(p, vg, vd, vs, vb),
        Polarity::P => {
            let (id, g) = eval_n(p, -vg, -vd, -vs, -vb);
            (-id, g)
        }
    }
}

/// Drain current (A), positive into the drain terminal.
pub fn mos_current(p: &MosParams, vg: f64, vd: f64, vs: f64, vb: f64) -> f64 {
    mos_eval(p, vg, vd, vs, vb).0
}

pub fn mos_conductances(p: &MosParams, vg: f64, vd: f64, vs: f64, vb: f64) -> Conductances {
    mos_eval(p, vg, vd, vs, vb).1
}

#[derive(Debug, Error, PartialEq)]
pub enum StackError {
    #[error("stack needs at least one device")]
    Empty,
    #[error("stack solve did not converge after {iterations} iterations (mismatch {mismatch:e} A)")]
    NonConvergence { iterations: usize, mismatch: f64 },
    #[error(transparent)]
    Linear(#[from] LinalgError),
}

/// Off-state series stack solution.
#[derive(Debug, Clone, PartialEq)]
pub struct StackLeakage {
    /// Common off-current through the stack (A).
    pub leakage: f64,
    /// Intermediate node voltages, bottom to top.
    pub mid_nodes: Vec<f64>,
}

/// KCL tolerance between adjacent devices of a stack.
pub const STACK_KCL_TOL: f64 = 1e-15;
const STACK_MAX_ITERS: usize = 200;

/// Leakage of `n_series` identical off devices in series across `v_total`.
///
/// Every gate and bulk sits at the bottom source (ground); the stack's
/// intermediate nodes are solved by damped Newton on the node KCL residuals.
pub fn stack_leakage(
    p: &MosParams,
    n_series: usize,
    v_total: f64,
) -> Result<StackLeakage, StackError> {
    if n_series == 0 {
        return Err(StackError::Empty);
    }
    let m = n_series - 1;
    let v_top = v_total;
    // Solve in the n-channel frame. A p-channel stack is its mirror image:
    // source rail at 0, drain at -v_total, so current and nodes flip sign.
    let sign = match p.polarity {
        Polarity::N => 1.0,
        Polarity::P => -1.0,
    };
    let frame = MosParams {
        polarity: Polarity::N,
        ..*p
    };
    let device = |vd: f64, vs: f64| eval_n(&frame, 0.0, vd, vs, 0.0);
    let node = |v: &[f64], i: usize| -> f64 {
        if i == 0 {
            0.0
        } else if i == n_series {
            v_top
        } else {
            v[i - 1]
        }
    };

    // Device j spans node j (source) to node j + 1 (drain).
    let mut v: Vec<f64> = (1..n_series)
        .map(|i| v_top * i as f64 / n_series as f64 * 0.1)
        .collect();
    let mut mismatch = f64::INFINITY;
    let mut last_step = f64::INFINITY;

    for _ in 0..STACK_MAX_ITERS {
        let evals: Vec<(f64, Conductances)> = (0..n_series)
            .map(|j| device(node(&v, j + 1), node(&v, j)))
            .collect();
        mismatch = evals
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).abs())
            .fold(0.0, f64::max);
        if mismatch < STACK_KCL_TOL && last_step < 1e-12 {
            return Ok(StackLeakage {
                leakage: sign * evals[0].0,
                mid_nodes: v.iter().map(|x| sign * x).collect(),
            });
        }

        // Residual at node k (1..n-1): current in from device k minus current out through device k-1.
        let mut jac = vec![vec![0.0; m]; m];
        let mut rhs = vec![0.0; m];
        for k in 1..n_series {
            let row = k - 1;
            let (i_above, g_above) = evals[k];
            let (i_below, g_below) = evals[k - 1];
            rhs[row] = -(i_above - i_below);
            jac[row][row] = g_above.gms - g_below.gds;
            if k + 1 < n_series {
                jac[row][row + 1] = g_above.gds;
            }
            if k >= 2 {
                jac[row][row - 1] = -g_below.gms;
            }
        }
        let step = linalg::solve_linear(&jac, &rhs)?;
        let largest = step.iter().fold(0.0f64, |a, s| a.max(s.abs()));
        let scale = if largest > 0.1 { 0.1 / largest } else { 1.0 };
        last_step = largest * scale;
        for (x, dx) in v.iter_mut().zip(&step) {
            *x = (*x + scale * dx).clamp(0.0, v_top.max(0.0));
        }
    }

    Err(StackError::NonConvergence {
        iterations: STACK_MAX_ITERS,
        mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nmos() -> MosParams {
        MosParams::default_nmos().with_w_over_l(2.0)
    }

    #[test]
    fn zero_current_at_equal_terminals() {
        for vg in [-1.0, 0.0, 0.4, 1.2, 2.4] {
            for vx in [-0.5, 0.0, 0.7, 1.8] {
                assert_eq!(mos_current(&nmos(), vg, vx, vx, 0.0), 0.0);
                assert_eq!(mos_current(&MosParams::default_pmos(), vg, vx, vx, 1.2), 0.0);
            }
        }
    }

    #[test]
    fn conductance_at_symmetry_point() {
        let g = mos_conductances(&nmos(), 1.2, 0.3, 0.3, 0.0);
        assert!(g.gds > 0.0);
        assert!((g.gds + g.gms).abs() < 1e-12 * g.gds.abs().max(1e-30) + 1e-18);
    }

    #[test]
    fn pmos_conducts_with_negative_gate_drive() {
        let p = MosParams::default_pmos();
        // Source at 1.2, gate at 0: on, current flows out of the drain.
        let on = mos_current(&p, 0.0, 0.0, 1.2, 1.2);
        let off = mos_current(&p, 1.2, 0.0, 1.2, 1.2);
        assert!(on < 0.0);
        assert!(off < 0.0 && off.abs() < on.abs() * 1e-4);
    }

    #[test]
    fn extreme_bias_stays_finite() {
        let (id, g) = mos_eval(&nmos(), 80.0, 120.0, -60.0, 0.0);
        assert!(id.is_finite() && g.gm.is_finite() && g.gds.is_finite());
        let (id, _) = mos_eval(&nmos(), -200.0, 0.1, 0.0, 0.0);
        assert!(id.is_finite() && id >= 0.0);
    }

    #[test]
    fn validate_rejects_bad_cards() {
        let mut p = MosParams::default_nmos();
        p.n_slope = 0.9;
        assert!(matches!(p.validate(), Err(ParamError::OutOfRange { name: "n_slope", .. })));
        p = MosParams::default_nmos();
        p.kp = f64::NAN;
        assert_eq!(p.validate(), Err(ParamError::NotFinite("kp")));
        assert!(MosParams::default_pmos().validate().is_ok());
    }

    #[test]
    fn single_device_stack_is_plain_off_current() {
        let p = MosParams::default_nmos();
        let s = stack_leakage(&p, 1, 1.2).unwrap();
        assert!(s.mid_nodes.is_empty());
        assert_eq!(s.leakage, mos_current(&p, 0.0, 1.2, 0.0, 0.0));
        assert_eq!(stack_leakage(&p, 0, 1.2), Err(StackError::Empty));
    }

    #[test]
    fn pmos_stack_mirrors_nmos_frame() {
        let p = MosParams::default_pmos();
        let s = stack_leakage(&p, 2, 1.2).unwrap();
        assert!(s.leakage < 0.0);
        assert!(s.mid_nodes[0] < 0.0);
    }
}
