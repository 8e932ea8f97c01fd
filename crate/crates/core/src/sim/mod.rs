// SPDX-License-Identifier: Apache-2.0
//! Modified nodal analysis: Newton DC operating point and fixed-step
//! implicit transient integration.

mod dc;
mod mna;
mod transient;
mod waveform;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dc::{dc_operating_point, OperatingPoint};
pub use transient::{transient, Pwl, Stimulus, FORCE_WINDOW};
pub use waveform::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    BackwardEuler,
    Trapezoidal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Absolute KCL tolerance (A).
    pub abstol: f64,
    /// Absolute voltage-update tolerance (V).
    pub vntol: f64,
    pub reltol: f64,
    pub max_newton_iters: usize,
    /// Conductance from every node to ground (S).
    pub gmin: f64,
    pub gmin_steps: usize,
    pub integrator: Integrator,
    /// Time step (s).
    pub dt: f64,
    /// Stop time (s).
    pub tstop: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abstol: 1e-12,
            vntol: 1e-6,
            reltol: 1e-3,
            max_newton_iters: 100,
            gmin: 1e-12,
            gmin_steps: 10,
            integrator: Integrator::Trapezoidal,
            dt: 10e-12,
            tstop: 10e-9,
        }
    }
}

impl SolverConfig {
    pub fn with_timing(mut self, dt: f64, tstop: f64) -> Self {
        self.dt = dt;
        self.tstop = tstop;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("abstol", self.abstol),
            ("vntol", self.vntol),
            ("reltol", self.reltol),
            ("gmin", self.gmin),
            ("dt", self.dt),
            ("tstop", self.tstop),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dt > self.tstop {
            return Err(SimError::Config(format!(
                "dt ({:e}) exceeds tstop ({:e})",
                self.dt, self.tstop
            )));
        }
        if self.max_newton_iters == 0 || self.gmin_steps == 0 {
            return Err(SimError::Config("iteration and gmin step counts must be nonzero".into()));
        }
        Ok(())
    }
}

/// One Newton attempt, kept for non-convergence reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonTrace {
    pub phase: String,
    pub iterations: usize,
    pub max_residual: f64,
    pub max_update: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("netlist failed validation: {0}")]
    InvalidNetlist(String),
    #[error("no convergence{}", fmt_time(.time))]
    NonConvergence {
        time: Option<f64>,
        trace: Vec<NewtonTrace>,
    },
    #[error("singular matrix at {node}{}", fmt_time(.time))]
    SingularMatrix { node: String, time: Option<f64> },
    #[error("stimulus drives unknown source '{0}'")]
    UnknownSource(String),
    #[error("initial condition names unknown node '{0}'")]
    UnknownNode(String),
}

fn fmt_time(t: &Option<f64>) -> String {
    match t {
        Some(t) => format!(" at t = {t:e} s"),
        None => " in operating point".to_string(),
    }
}

impl SimError {
    pub(crate) fn at_time(self, t: f64) -> Self {
        match self {
            SimError::NonConvergence { trace, .. } => SimError::NonConvergence {
                time: Some(t),
                trace,
            },
            SimError::SingularMatrix { node, .. } => SimError::SingularMatrix {
                node,
                time: Some(t),
            },
            other => other,
        }
    }
}
