// SPDX-License-Identifier: Apache-2.0
//! Generating both column architectures and inspecting their structure.

use stacksim::builders::{build_column, count_prefix, Architecture, CellConfig};
use stacksim::netlist::serialize_netlist;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = CellConfig::default();
    for arch in [Architecture::Conventional, Architecture::Proposed] {
        let (net, sig) = build_column(arch, &cfg, 1)?;
        println!(
            "{}: {} bits, {} nodes, {} devices, {} cell transistors, {} word lines, mid rails {:?}",
            arch.name(),
            sig.capacity(),
            net.nodes.len(),
            net.devices.len(),
            count_prefix(&net, "m") - count_prefix(&net, "mpc"),
            sig.word_lines.len(),
            sig.mid_rails,
        );
    }
    let (net, _) = build_column(Architecture::Proposed, &cfg, 1)?;
    print!("{}", serialize_netlist(&net));
    Ok(())
}
