// SPDX-License-Identifier: Apache-2.0
//! Simulating an inverter and writing the waveform as CSV and SVG.

use stacksim::export::{plot_svg, waveform_from_csv, waveform_to_csv};
use stacksim::netlist::parse_netlist;
use stacksim::sim::{transient, SolverConfig, Stimulus};

const INVERTER: &str = "\
inverter
Vdd vdd 0 DC 1.2
Vin in 0 PULSE(0 1.2 1n 100p 100p 2n 0)
M1 out in 0 0 nch W=2 L=1
M2 out in vdd vdd pch W=2 L=1
C1 out 0 10f
.model nch nmos
.model pch pmos
.end
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_netlist(INVERTER).map_err(|d| format!("{d:?}"))?;
    let w = transient(&net, &SolverConfig::default().with_timing(10e-12, 6e-9), &Stimulus::new(), None)?;
    let dir = std::env::temp_dir().join("stacksim-example");
    std::fs::create_dir_all(&dir)?;
    let csv = waveform_to_csv(&w);
    std::fs::write(dir.join("inverter.csv"), &csv)?;
    let reread = waveform_from_csv(&csv)?;
    let svg = plot_svg(&reread, &["in".into(), "out".into()], "inverter")?;
    std::fs::write(dir.join("inverter.svg"), svg)?;
    println!("wrote {} samples to {}", w.len(), dir.display());
    Ok(())
}
