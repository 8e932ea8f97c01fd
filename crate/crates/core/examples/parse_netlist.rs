// SPDX-License-Identifier: Apache-2.0
//! Parsing a netlist, printing diagnostics for a broken one, and
//! serializing back to canonical text.

use stacksim::netlist::{parse_netlist, serialize_netlist};

const GOOD: &str = "\
inverter
Vdd vdd 0 DC 1.2
Vin in 0 PULSE(0 1.2 1n 100p 100p 2n 0)
M1 out in 0 0 nch W=2 L=1
M2 out in vdd vdd pch W=2 L=1
C1 out 0 10f
.model nch nmos
.model pch pmos
.tran 10p 6n
.end
";

fn main() {
    let net = parse_netlist(GOOD).expect("valid netlist");
    println!("{} nodes, {} devices", net.nodes.len(), net.devices.len());
    print!("{}", serialize_netlist(&net));

    let broken = "broken\nV1 a 0 1\nR1 a 0 -5\nM1 a a 0 0 nofet\n.end\n";
    for d in parse_netlist(broken).unwrap_err() {
        println!("{d}");
    }
}
