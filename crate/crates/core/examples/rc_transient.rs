// SPDX-License-Identifier: Apache-2.0
//! Step response of an RC low-pass against the analytic exponential.

use stacksim::netlist::parse_netlist;
use stacksim::sim::{transient, Pwl, SolverConfig, Stimulus};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_netlist("rc\nV1 in 0 0\nR1 in out 1k\nC1 out 0 1n\n.end\n").map_err(|d| format!("{d:?}"))?;
    let tau = 1e-6;
    let cfg = SolverConfig::default().with_timing(tau / 100.0, 5.0 * tau);
    let stim = Stimulus::new().with("v1", Pwl::new(vec![(0.0, 0.0), (0.0, 1.0)]));
    let w = transient(&net, &cfg, &stim, None)?;
    for k in 0..=5 {
        let t = k as f64 * tau;
        let v = w.value_at("out", t).unwrap();
        let exact = 1.0 - (-t / tau).exp();
        println!("t = {k} tau: v(out) = {v:.6}  exact {exact:.6}");
    }
    Ok(())
}
