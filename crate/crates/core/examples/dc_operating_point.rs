// SPDX-License-Identifier: Apache-2.0
//! DC operating point of a 6T cell holding a one.

use stacksim::builders::{build_single_cell, CellConfig};
use stacksim::sim::{dc_operating_point, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = build_single_cell(&CellConfig::default())?;
    let op = dc_operating_point(&net, &SolverConfig::default())?;
    for (node, v) in &op.node_voltages {
        println!("v({node}) = {v:.6} V");
    }
    println!("supply current {:.4e} A", -op.source_current("vdd").unwrap());
    for t in &op.trace {
        println!("{}: {} Newton iterations, residual {:.2e} A", t.phase, t.iterations, t.max_residual);
    }
    Ok(())
}
