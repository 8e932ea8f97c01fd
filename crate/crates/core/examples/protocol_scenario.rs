// SPDX-License-Identifier: Apache-2.0
//! Writing a zero into the upper cell of a stacked pair and reading it back.

use stacksim::bench::{run_scenario, write_then_read, CellSelect, Timing};
use stacksim::builders::{build_column, Architecture, CellConfig};
use stacksim::sim::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (net, sig) = build_column(Architecture::Proposed, &CellConfig::default(), 1)?;
    let schedule = write_then_read(&sig, CellSelect::Upper, false, &Timing::default())?;
    schedule.check_safety(&sig)?;
    let solver = SolverConfig::default().with_timing(10e-12, schedule.duration);
    let result = run_scenario(&net, &sig, &schedule, &solver)?;
    for c in &result.checks {
        println!(
            "{:<5} {:<28} t={:.3e} s expected {:+.4} V measured {:+.4} V",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            c.time_s,
            c.expected_v,
            c.measured_v
        );
    }
    println!("{}", if result.passed() { "all checks passed" } else { "some checks failed" });
    Ok(())
}
